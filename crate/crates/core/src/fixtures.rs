//! The built-in verification corpus: five equations with their catalogs of
//! structures, factorization tables, closed-form brackets, Poisson loci, and
//! search cross-checks. Session texts ship as data files under `data/` and
//! are embedded here; a directory of same-named `.jet` files can override
//! them.
//!
//! Every item asserts an exact identity of canonical forms. Items that
//! disagree with a printed source value in a way the computation pins down
//! as a misprint (the reconstruction identity singles out the corrected
//! value) are reported as WARN, never silently corrected.

use std::collections::BTreeSet;
use std::path::Path;

use crate::atom::Atom;
use crate::equation::{CotangentRule, EquationModel};
use crate::lang::{print_canonical, Session};
use crate::multiindex::MultiIndex;
use crate::poly::DiffPoly;
use crate::report::{Report, Status};
use crate::schouten::{
    check_bivector, generating_section, is_poisson, schouten_bracket, Bivector, CheckReport,
    Violation,
};
use crate::search::{search, SearchOutcome};

pub const WAVE: &str = include_str!("../data/wave.jet");
pub const UXYZ: &str = include_str!("../data/uxyz.jet");
pub const LAPLACE2D: &str = include_str!("../data/laplace2d.jet");
pub const LAPLACE3D: &str = include_str!("../data/laplace3d.jet");
pub const POINCARE: &str = include_str!("../data/poincare.jet");
pub const APPENDIX_B: &str = include_str!("../data/appendix_b.jet");
pub const APPENDIX_C: &str = include_str!("../data/appendix_c.jet");

pub const TASKS: &[&str] = &["wave", "uxyz", "laplace2d", "laplace3d", "poincare"];

/// Session texts by name, either the embedded corpus or a directory
/// override.
pub struct Sources {
    dir: Option<std::path::PathBuf>,
}

impl Sources {
    pub fn builtin() -> Self {
        Sources { dir: None }
    }

    pub fn from_dir(dir: &Path) -> Self {
        Sources {
            dir: Some(dir.to_path_buf()),
        }
    }

    pub fn get(&self, name: &str) -> Result<String, String> {
        if let Some(dir) = &self.dir {
            let path = dir.join(format!("{name}.jet"));
            return std::fs::read_to_string(&path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()));
        }
        match name {
            "wave" => Ok(WAVE.to_string()),
            "uxyz" => Ok(UXYZ.to_string()),
            "laplace2d" => Ok(LAPLACE2D.to_string()),
            "laplace3d" => Ok(LAPLACE3D.to_string()),
            "poincare" => Ok(POINCARE.to_string()),
            "appendix_b" => Ok(APPENDIX_B.to_string()),
            "appendix_c" => Ok(APPENDIX_C.to_string()),
            other => Err(format!("unknown session `{other}`")),
        }
    }
}

/// Runs one named task, or all of them.
pub fn run(only: Option<&str>, sources: &Sources) -> Result<Report, String> {
    let mut report = Report::new();
    for task in TASKS {
        if let Some(o) = only {
            if o != *task {
                continue;
            }
        }
        match *task {
            "wave" => wave_task(sources, &mut report)?,
            "uxyz" => uxyz_task(sources, &mut report)?,
            "laplace2d" => laplace2d_task(sources, &mut report)?,
            "laplace3d" => laplace3d_task(sources, &mut report)?,
            "poincare" => poincare_task(sources, &mut report)?,
            _ => unreachable!(),
        }
    }
    if only.is_some() && report.items.is_empty() {
        return Err(format!(
            "unknown task `{}` (expected one of {})",
            only.unwrap(),
            TASKS.join(", ")
        ));
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Shared helpers

pub fn model_of(s: &Session) -> Result<EquationModel, String> {
    let (f, lead) = s
        .equation
        .clone()
        .ok_or_else(|| "session declares no equation".to_string())?;
    let f = s.resolved(&f)?;
    EquationModel::new(f, lead, CotangentRule::Linearization).map_err(|e| e.to_string())
}

/// Resolves a declared bivector by name, or an ad-hoc expression written
/// in the session's language.
pub fn bivector_named(s: &Session, name: &str) -> Result<Bivector, String> {
    let e = match s.bivector(name) {
        Some(e) => e.clone(),
        None => s
            .parse_expression(name)
            .map_err(|e| format!("`{name}` is neither a declared bivector nor an expression: {e}"))?,
    };
    let e = s.resolved(&e)?;
    Bivector::new(name, e).map_err(|e| format!("`{name}`: {e}"))
}

fn with_binding(s: &Session, name: &str, rhs: &str) -> Result<Session, String> {
    let e = s.parse_expression(rhs).map_err(|e| e.to_string())?;
    let mut s2 = s.clone();
    s2.add_instantiation(name, e)?;
    Ok(s2)
}

fn pexpr(s: &Session, src: &str) -> Result<DiffPoly, String> {
    s.parse_expression(src)
        .map_err(|e| format!("internal fixture expression failed to parse: {e}"))
}

pub fn describe_violation(v: &Violation, s: &Session) -> String {
    match v {
        Violation::Condition2 { residual } => format!(
            "the linearization applied to H(p) does not vanish on the cotangent equation; residual {}",
            print_canonical(residual, s)
        ),
        Violation::Condition3 { residual } => format!(
            "the defect does not factor through the equation; residual {}",
            print_canonical(residual, s)
        ),
        Violation::Condition3Nonlinear => {
            "the defect is nonlinear in the equation and its derivatives".to_string()
        }
    }
}

fn run_item(
    report: &mut Report,
    task: &str,
    item: &str,
    f: impl FnOnce() -> Result<(Status, String), String>,
) {
    report.run(task, item, || {
        f().unwrap_or_else(|e| (Status::Error, e))
    });
}

fn expect_eq(actual: &DiffPoly, expect: &DiffPoly, s: &Session) -> (Status, String) {
    if actual == expect {
        (Status::Pass, print_canonical(actual, s))
    } else {
        (
            Status::Fail,
            format!(
                "computed {}\nexpected {}",
                print_canonical(actual, s),
                print_canonical(expect, s)
            ),
        )
    }
}

fn expect_zero(actual: &DiffPoly, s: &Session) -> (Status, String) {
    if actual.is_zero() {
        (Status::Pass, String::new())
    } else {
        (
            Status::Fail,
            format!("expected 0, computed {}", print_canonical(actual, s)),
        )
    }
}

fn check_item(s: &Session, eq: &EquationModel, name: &str) -> Result<(Status, String), String> {
    let b = bivector_named(s, name)?;
    match check_bivector(&b, eq).map_err(|e| e.to_string())? {
        CheckReport::Pass { .. } => Ok((Status::Pass, String::new())),
        CheckReport::Fail(v) => Ok((Status::Fail, describe_violation(&v, s))),
    }
}

fn nabla_of(s: &Session, eq: &EquationModel, name: &str) -> Result<crate::ops::BiDiffOp, String> {
    let b = bivector_named(s, name)?;
    match check_bivector(&b, eq).map_err(|e| e.to_string())? {
        CheckReport::Pass { nabla } => Ok(nabla),
        CheckReport::Fail(v) => Err(format!("`{name}` is not a bivector: {}", describe_violation(&v, s))),
    }
}

/// Compares a run of pairwise brackets against zero; returns the first
/// nonvanishing pair if any.
fn all_commute(
    pairs: &[(&Bivector, &Bivector)],
    eq: &EquationModel,
    s: &Session,
) -> Result<(Status, String), String> {
    for (a, b) in pairs {
        let w = schouten_bracket(a, b, eq).map_err(|e| e.to_string())?;
        if !w.is_zero() {
            return Ok((
                Status::Fail,
                format!(
                    "[[{}, {}]] = {}",
                    a.name,
                    b.name,
                    print_canonical(&w, s)
                ),
            ));
        }
    }
    Ok((Status::Pass, format!("{} brackets vanish", pairs.len())))
}

/// Search, then re-verify every basis vector against the direct nonlinear
/// check; a basis vector failing it means the two formulations disagree and
/// the engine itself is suspect.
fn verified_search(
    eq: &EquationModel,
    n_vars: usize,
    max_jet_order: usize,
    vars: &[Atom],
    degree: u32,
    s: &Session,
) -> Result<Result<SearchOutcome, (Status, String)>, String> {
    let out = search(eq, n_vars, max_jet_order, vars, degree).map_err(|e| e.to_string())?;
    for v in &out.basis {
        let cand = out.ansatz.combine(v);
        let b = Bivector::new("candidate", cand.clone()).map_err(|e| e.to_string())?;
        match check_bivector(&b, eq).map_err(|e| e.to_string())? {
            CheckReport::Pass { .. } => {}
            CheckReport::Fail(violation) => {
                return Ok(Err((
                    Status::Internal,
                    format!(
                        "nullspace vector {} fails the direct check: {}",
                        print_canonical(&cand, s),
                        describe_violation(&violation, s)
                    ),
                )));
            }
        }
    }
    Ok(Ok(out))
}

fn basis_polys(out: &SearchOutcome) -> Vec<DiffPoly> {
    out.basis.iter().map(|v| out.ansatz.combine(v)).collect()
}

/// Compares a search basis against an expected list, as canonical strings
/// and regardless of order.
fn expect_basis(out: &SearchOutcome, expect: &[&str], s: &Session) -> (Status, String) {
    let got: BTreeSet<String> = basis_polys(out)
        .iter()
        .map(|e| print_canonical(e, s))
        .collect();
    let want: BTreeSet<String> = expect.iter().map(|e| e.to_string()).collect();
    let listed = got.iter().cloned().collect::<Vec<_>>().join(", ");
    if got == want {
        (Status::Pass, format!("basis = {{ {listed} }}"))
    } else {
        (Status::Fail, format!("basis = {{ {listed} }}"))
    }
}

fn in_span(out: &SearchOutcome, e: &DiffPoly) -> bool {
    match out.ansatz.coordinates(e) {
        Some(v) => out.system.satisfied_by(&v),
        None => false,
    }
}

// ---------------------------------------------------------------------------
// Wave equation

fn wave_task(sources: &Sources, report: &mut Report) -> Result<(), String> {
    let t = "wave";
    let s = Session::parse(&sources.get(t)?).map_err(|e| format!("{t}: {e}"))?;
    let eq = model_of(&s)?;

    for name in ["B0", "B1", "B2"] {
        run_item(report, t, &format!("{name} satisfies the bivector conditions"), || {
            check_item(&s, &eq, name)
        });
    }

    run_item(report, t, "B1 factor at the equation slot matches the printed A0", || {
        let nabla = nabla_of(&s, &eq, "B1")?;
        let printed = pexpr(
            &s,
            "D[x,x](pd(h1,2))/2*p[x] + 3/2*D[x](pd(h1,2))*p[x,x] + pd(h1,2)*p[x,x,x]",
        )?;
        Ok(expect_eq(&nabla.value(&MultiIndex::zero()), &printed, &s))
    });

    run_item(report, t, "B1 factor at the first-derivative slot vs the printed A1", || {
        let nabla = nabla_of(&s, &eq, "B1")?;
        let slots: Vec<MultiIndex> = nabla.values().map(|(tau, _)| tau.clone()).collect();
        let a1 = nabla.value(&MultiIndex::single(0));
        let a2 = nabla.value(&MultiIndex::from_pairs(&[(0, 2)]));
        let printed_a1 = pexpr(&s, "D[x](pd(h1,2))/2*p[x] + pd(h1,2)*p[x,x]")?;
        if a1 == printed_a1 {
            return Ok((Status::Pass, print_canonical(&a1, &s)));
        }
        // The unique factorization carries a third slot the printed pair
        // lacks; the printed A1 differs from the computed one by exactly
        // the total derivative of that slot's value, i.e. the printed pair
        // drops D_x(D_x(F)·A2) from the defect.
        let expected_a2 = pexpr(&s, "pd(h1,2)/2*p[x]")?;
        let shifted = printed_a1.add(&a2.total_derivative(0));
        if a1 == shifted && a2 == expected_a2 && slots.len() == 3 {
            return Ok((
                Status::Warn,
                format!(
                    "printed table: A1 = {}, no second-order slot\n\
                     computed:      A1 = {}, A2 = {}\n\
                     computed A1 = printed A1 + D_x(A2); only the computed triple reconstructs the defect",
                    print_canonical(&printed_a1, &s),
                    print_canonical(&a1, &s),
                    print_canonical(&a2, &s),
                ),
            ));
        }
        Ok((
            Status::Fail,
            format!(
                "computed A1 = {}\ncomputed A2 = {}\nprinted A1 = {}",
                print_canonical(&a1, &s),
                print_canonical(&a2, &s),
                print_canonical(&printed_a1, &s)
            ),
        ))
    });

    run_item(report, t, "B1 generating section has the printed odd part", || {
        let b = bivector_named(&s, "B1")?;
        let gs = generating_section(&b, &eq).map_err(|e| e.to_string())?;
        let expect = pexpr(&s, "pd(h1,2)/2 * p[x]*p[x,x]")?;
        Ok(expect_eq(&gs.phi_p, &expect, &s))
    });

    run_item(report, t, "B1 self-bracket equals the closed form", || {
        let b = bivector_named(&s, "B1")?;
        let w = schouten_bracket(&b, &b, &eq).map_err(|e| e.to_string())?;
        let closed = pexpr(
            &s,
            "- h1*pd(h1,2)*p[x,x]*p[x,x,x] \
             + (h1*D[x](pd(h1,2)) - 2*D[x](h1)*pd(h1,2))*p[x]*p[x,x,x] \
             + (h1*D[x,x](pd(h1,2)) - D[x](h1)*D[x](pd(h1,2)) - D[x,x](h1)*pd(h1,2))*p[x]*p[x,x]",
        )?;
        Ok(expect_eq(&w, &closed, &s))
    });

    run_item(report, t, "B1 is Poisson exactly when h1 drops its u_x argument", || {
        let free = with_binding(&s, "h1", "f1")?;
        let (ok_free, _) = is_poisson(&bivector_named(&free, "B1")?, &eq).map_err(|e| e.to_string())?;
        let tied = with_binding(&s, "h1", "u[x]")?;
        let (ok_tied, w) = is_poisson(&bivector_named(&tied, "B1")?, &eq).map_err(|e| e.to_string())?;
        if ok_free && !ok_tied {
            Ok((
                Status::Pass,
                format!("at h1 = u[x] the self-bracket is {}", print_canonical(&w, &s)),
            ))
        } else {
            Ok((
                Status::Fail,
                format!("poisson(h1 = f1(x)) = {ok_free}, poisson(h1 = u[x]) = {ok_tied}"),
            ))
        }
    });

    run_item(report, t, "the B0,B1 bracket is the Poisson obstruction itself", || {
        let b0 = bivector_named(&s, "B0")?;
        let b1 = bivector_named(&s, "B1")?;
        let w = schouten_bracket(&b0, &b1, &eq).map_err(|e| e.to_string())?;
        let expect = pexpr(&s, "pd(h1,2)*p[x]*p[x,x]")?;
        Ok(expect_eq(&w, &expect, &s))
    });

    run_item(report, t, "B1 and B2 commute with fully opaque coefficients", || {
        let b1 = bivector_named(&s, "B1")?;
        let b2 = bivector_named(&s, "B2")?;
        let w = schouten_bracket(&b1, &b2, &eq).map_err(|e| e.to_string())?;
        Ok(expect_zero(&w, &s))
    });

    run_item(report, t, "all three structures commute on the Poisson locus", || {
        let locus = with_binding(&with_binding(&s, "h1", "f1")?, "h2", "f2")?;
        let b0 = bivector_named(&locus, "B0")?;
        let b1 = bivector_named(&locus, "B1")?;
        let b2 = bivector_named(&locus, "B2")?;
        all_commute(&[(&b0, &b1), (&b0, &b2), (&b1, &b2)], &eq, &s)
    });

    run_item(report, t, "degree-0 search finds exactly the constant structures", || {
        let out = match verified_search(&eq, 2, 2, &[], 0, &s)? {
            Ok(out) => out,
            Err(bad) => return Ok(bad),
        };
        Ok(expect_basis(&out, &["p[]", "p[x,x]", "p[y,y]"], &s))
    });

    run_item(report, t, "degree-2 jet search spans the instantiated B1 family", || {
        let vars = [
            Atom::Indep(0),
            Atom::JetU(MultiIndex::single(0)),
            Atom::JetU(MultiIndex::from_pairs(&[(0, 2)])),
        ];
        let out = match verified_search(&eq, 2, 2, &vars, 2, &s)? {
            Ok(out) => out,
            Err(bad) => return Ok(bad),
        };
        let members = [
            with_binding(&s, "h1", "u[x]")?,
            with_binding(&s, "h1", "x")?,
        ];
        for m in &members {
            let b = bivector_named(m, "B1")?;
            if !in_span(&out, &b.h_u) {
                return Ok((
                    Status::Fail,
                    format!("{} escapes the span", print_canonical(&b.h_u, &s)),
                ));
            }
        }
        let stray = pexpr(&s, "p[x]")?;
        if in_span(&out, &stray) {
            return Ok((Status::Fail, "bare p[x] wrongly lies in the span".to_string()));
        }
        Ok((
            Status::Pass,
            format!("dimension {}; both instantiations lie in the span, bare p[x] does not", out.basis.len()),
        ))
    });

    Ok(())
}

// ---------------------------------------------------------------------------
// The third-order equation u_xyz = 0

fn uxyz_task(sources: &Sources, report: &mut Report) -> Result<(), String> {
    let t = "uxyz";
    let s = Session::parse(&sources.get(t)?).map_err(|e| format!("{t}: {e}"))?;
    let eq = model_of(&s)?;

    for name in ["B1", "B2", "B3", "B4"] {
        run_item(report, t, &format!("{name} satisfies the bivector conditions"), || {
            check_item(&s, &eq, name)
        });
    }

    run_item(report, t, "B3 factorization vs the printed four-slot table", || {
        let nabla = nabla_of(&s, &eq, "B3")?;
        let printed = [
            ("A0", MultiIndex::zero(),
             "D[x,x,y](pd(g,3))/2*p[x,y] + 3/2*D[x,y](pd(g,3))*p[x,x,y] + D[x,x](pd(g,3))/2*p[x,y,y] \
              + 3/2*D[x](pd(g,3))*p[x,x,y,y] + D[y](pd(g,3))*p[x,x,x,y] + pd(g,3)*p[x,x,x,y,y]"),
            ("A1", MultiIndex::single(0),
             "(D[x,y](pd(g,3))*p[x,y] + D[x](pd(g,3))*p[x,y,y] + D[y](pd(g,3))*p[x,x,y])/2 + pd(g,3)*p[x,x,y,y]"),
            ("A2", MultiIndex::single(1),
             "D[x,x](pd(g,3))/2*p[x,y] + 3/2*D[x](pd(g,3))*p[x,x,y] + pd(g,3)*p[x,x,x,y]"),
            ("A12", MultiIndex::from_pairs(&[(0, 1), (1, 1)]),
             "D[x](pd(g,3))/2*p[x,y] + pd(g,3)*p[x,x,y]"),
        ];
        let mut mismatches = Vec::new();
        for (label, tau, src) in &printed {
            let computed = nabla.value(tau);
            let expect = pexpr(&s, src)?;
            if computed != expect {
                mismatches.push((*label, computed, expect));
            }
        }
        let extra: Vec<String> = nabla
            .values()
            .filter(|(tau, _)| !printed.iter().any(|(_, t, _)| t == *tau))
            .map(|(tau, _)| tau.render(&s.var_names))
            .collect();
        if mismatches.is_empty() && extra.is_empty() {
            return Ok((Status::Pass, "all four slots match".to_string()));
        }
        // The printed table reproduces the defect only after regrouping a
        // total divergence, and its A1 drops a half-weight D_y(g')p_xxy
        // term.  The exact factorization therefore carries two extra slots
        // and must satisfy, slot by slot, the identity
        //   defect = printed sum + 1/2 D_xD_y(D_x(F) g' p_xy)
        //                        + 1/2 D_x(F) D_y(g') p_xxy.
        let identities = [
            ("A1", MultiIndex::single(0),
             "D[x,y](pd(g,3)*p[x,y])/2 + D[y](pd(g,3))/2*p[x,x,y]"),
            ("A12", MultiIndex::from_pairs(&[(0, 1), (1, 1)]),
             "D[x](pd(g,3)*p[x,y])/2"),
            ("extra x^2 slot", MultiIndex::from_pairs(&[(0, 2)]),
             "D[y](pd(g,3)*p[x,y])/2"),
            ("extra x^2y slot", MultiIndex::from_pairs(&[(0, 2), (1, 1)]),
             "pd(g,3)*p[x,y]/2"),
        ];
        let pinned = mismatches.iter().all(|(l, _, _)| ["A1", "A12"].contains(l))
            && extra.len() == 2
            && identities.iter().all(|(_, tau, src)| {
                let printed_slot = printed
                    .iter()
                    .find(|(_, t, _)| t == tau)
                    .map(|(_, _, src)| pexpr(&s, src))
                    .transpose()
                    .unwrap_or(None)
                    .unwrap_or_else(DiffPoly::zero);
                pexpr(&s, src).map_or(false, |d| nabla.value(tau).sub(&printed_slot) == d)
            });
        if pinned {
            return Ok((
                Status::Warn,
                "A0 and A2 match; the printed A1 and A12 differ from the computed slots, and \
                 the computed table carries x^2 and x^2y slots the printed one lacks. The whole \
                 difference is D[x,y](u[x,x,y,z]*pd(g,3)*p[x,y])/2 (an exact divergence the \
                 printed table regroups away) plus u[x,x,y,z]*D[y](pd(g,3))*p[x,x,y]/2 (a genuine \
                 half-weight omission in the printed A1); only the computed table reconstructs \
                 the defect exactly"
                    .to_string(),
            ));
        }
        let lines: Vec<String> = mismatches
            .iter()
            .map(|(label, computed, expect)| {
                format!(
                    "{label}: computed {} / printed {}",
                    print_canonical(computed, &s),
                    print_canonical(expect, &s)
                )
            })
            .chain(extra.iter().map(|t| format!("unexpected slot at {t}")))
            .collect();
        Ok((Status::Fail, lines.join("\n")))
    });

    run_item(report, t, "B3 first-slot adjoint at (p,p) matches the printed value", || {
        let nabla = nabla_of(&s, &eq, "B3")?;
        let p0 = DiffPoly::jet_p(MultiIndex::zero());
        let got = nabla.adjoint_first().apply_first(&p0);
        let expect = pexpr(&s, "pd(g,3)*p[x,y]*p[x,x,y]")?;
        Ok(expect_eq(&got, &expect, &s))
    });

    run_item(report, t, "B4 first-slot adjoint at (p,p) vs the printed value", || {
        let nabla = nabla_of(&s, &eq, "B4")?;
        let p0 = DiffPoly::jet_p(MultiIndex::zero());
        let got = nabla.adjoint_first().apply_first(&p0);
        let expect = pexpr(&s, "pd(g,3)*p[x,y]*(u[x,y,y]*p[x,x,y] - u[x,x,y]*p[x,y,y])")?;
        if got == expect {
            return Ok((Status::Pass, print_canonical(&got, &s)));
        }
        // The printed value comes from a factorization that regroups a
        // divergence away; the exact one differs by precisely that divergence.
        let with_div = expect
            .add(&pexpr(&s, "D[x](g*p[x,y]*p[x,y,y]) - D[y](g*p[x,y]*p[x,x,y])")?);
        if got == with_div {
            return Ok((
                Status::Warn,
                format!(
                    "computed value = {}\nthis exceeds the printed one by the exact divergence \
                     D[x](g*p[x,y]*p[x,y,y]) - D[y](g*p[x,y]*p[x,x,y]); the printed factorization \
                     regroups that divergence away and does not reconstruct the defect exactly",
                    print_canonical(&got, &s)
                ),
            ));
        }
        Ok((
            Status::Fail,
            format!(
                "computed {} / printed {}",
                print_canonical(&got, &s),
                print_canonical(&expect, &s)
            ),
        ))
    });

    run_item(report, t, "B3 generating section has the printed odd part", || {
        let b = bivector_named(&s, "B3")?;
        let gs = generating_section(&b, &eq).map_err(|e| e.to_string())?;
        let expect = pexpr(&s, "pd(g,3)/2*p[x,x,y]*p[x,y]")?;
        Ok(expect_eq(&gs.phi_p, &expect, &s))
    });

    run_item(report, t, "B4 generating section vs the printed odd part", || {
        let b = bivector_named(&s, "B4")?;
        let gs = generating_section(&b, &eq).map_err(|e| e.to_string())?;
        let expect = pexpr(&s, "pd(g,3)/2*(u[x,y,y]*p[x,x,y] - u[x,x,y]*p[x,y,y])*p[x,y]")?;
        if gs.phi_p == expect {
            return Ok((Status::Pass, print_canonical(&gs.phi_p, &s)));
        }
        // -1/2 of the divergence regrouped away in the printed factorization.
        let with_div = expect.add(&pexpr(
            &s,
            "D[y](g*p[x,y]*p[x,x,y])/2 - D[x](g*p[x,y]*p[x,y,y])/2",
        )?);
        if gs.phi_p == with_div {
            return Ok((
                Status::Warn,
                format!(
                    "computed odd part = {}\nthis differs from the printed one by minus half the \
                     divergence D[x](g*p[x,y]*p[x,y,y]) - D[y](g*p[x,y]*p[x,x,y]), inherited from \
                     the printed factorization",
                    print_canonical(&gs.phi_p, &s)
                ),
            ));
        }
        Ok(expect_eq(&gs.phi_p, &expect, &s))
    });

    run_item(report, t, "B3 self-bracket above order 5 keeps one opaque term", || {
        let b = bivector_named(&s, "B3")?;
        let w = schouten_bracket(&b, &b, &eq).map_err(|e| e.to_string())?;
        let expect = pexpr(&s, "2*g*pd(g,3)*p[x,x,x,x,y,y]*p[x,y]")?;
        Ok(expect_eq(&w.p_above(5), &expect, &s))
    });

    run_item(report, t, "B3 self-bracket above order 5 at g = u[x,y]", || {
        let bound = with_binding(&s, "g", "u[x,y]")?;
        let b = bivector_named(&bound, "B3")?;
        let w = schouten_bracket(&b, &b, &eq).map_err(|e| e.to_string())?;
        let expect = pexpr(&s, "2*u[x,y]*p[x,x,x,x,y,y]*p[x,y]")?;
        Ok(expect_eq(&w.p_above(5), &expect, &s))
    });

    run_item(report, t, "B4 self-bracket contains the unique marker pair", || {
        let b = bivector_named(&s, "B4")?;
        let w = schouten_bracket(&b, &b, &eq).map_err(|e| e.to_string())?;
        let expect = pexpr(
            &s,
            "-2*g^2*(u[x,y,y]*p[x,x,x,x,y,y]*p[x,y,y] + u[x,x,y]*p[x,x,y,y,y,y]*p[x,x,y])",
        )?;
        let markers: BTreeSet<_> = expect.terms().map(|(m, _)| m.clone()).collect();
        let got = w.filter_terms(|m| markers.contains(m));
        if got == expect {
            return Ok((Status::Pass, print_canonical(&got, &s)));
        }
        if got == expect.add(&expect) {
            return Ok((
                Status::Warn,
                format!(
                    "computed marker pair = {}\nexactly twice the printed coefficient; the \
                     generating section used here differs from the printed one by an exact \
                     divergence, which doubles this pair (sign and shape agree)",
                    print_canonical(&got, &s)
                ),
            ));
        }
        Ok(expect_eq(&got, &expect, &s))
    });

    run_item(report, t, "B1 and B2 are Poisson for opaque h(x)", || {
        for name in ["B1", "B2"] {
            let (ok, w) = is_poisson(&bivector_named(&s, name)?, &eq).map_err(|e| e.to_string())?;
            if !ok {
                return Ok((
                    Status::Fail,
                    format!("[[{name}, {name}]] = {}", print_canonical(&w, &s)),
                ));
            }
        }
        Ok((Status::Pass, String::new()))
    });

    run_item(report, t, "B3 is claimed Poisson but its self-bracket is nonzero", || {
        let (ok, w) = is_poisson(&bivector_named(&s, "B3")?, &eq).map_err(|e| e.to_string())?;
        if ok {
            return Ok((
                Status::Fail,
                "the self-bracket vanishes for generic g, contradicting the computed leading term".into(),
            ));
        }
        Ok((
            Status::Warn,
            format!(
                "the printed proposition lists B3 as Poisson; computed [[B3, B3]] is nonzero \
                 (leading part {}) and vanishes exactly when pd(g,3) = 0",
                print_canonical(&w.p_above(5), &s)
            ),
        ))
    });

    run_item(report, t, "B4 is not Poisson for nonzero g", || {
        let (ok, w) = is_poisson(&bivector_named(&s, "B4")?, &eq).map_err(|e| e.to_string())?;
        if !ok {
            Ok((
                Status::Pass,
                format!("self-bracket has {} terms", w.n_terms()),
            ))
        } else {
            Ok((Status::Fail, "self-bracket unexpectedly vanishes".into()))
        }
    });

    run_item(report, t, "B3 self-bracket vanishes when g is independent of u_xy", || {
        let bound = with_binding(&s, "g", "w")?;
        let b = bivector_named(&bound, "B3")?;
        let bracket = schouten_bracket(&b, &b, &eq).map_err(|e| e.to_string())?;
        Ok(expect_zero(&bracket, &s))
    });

    run_item(report, t, "B1, B2 and the restricted B3 pairwise commute", || {
        let bound = with_binding(&s, "g", "w")?;
        let b1 = bivector_named(&s, "B1")?;
        let b2 = bivector_named(&s, "B2")?;
        let b3 = bivector_named(&bound, "B3")?;
        all_commute(&[(&b1, &b2), (&b1, &b3), (&b2, &b3)], &eq, &s)
    });

    Ok(())
}

// ---------------------------------------------------------------------------
// 2D Laplace equation

const LAPLACE2D_FORMULA: &str = "(pd(h,1,3)*u[y,y] - pd(h,1,4)*u[x,y] - pd(h,1,1))/2*p[x] \
                                 + (pd(h,1,3)*u[x,y] + pd(h,1,4)*u[y,y] + pd(h,1,2))/2*p[y] \
                                 + pd(h,2)*p[x,y] + pd(h,1)*p[y,y]";

const LAPLACE2D_GENERATORS: &[(&str, &str)] = &[
    ("B1", "x"),
    ("B2", "y"),
    ("B3", "2*x*y"),
    ("B4", "y^2 - x^2"),
    ("B5", "2*x*u[y] - 2*y*u[x]"),
    ("B6", "2*x*u[x] + 2*y*u[y]"),
    ("B7", "2*x*y*u[x] + (y^2 - x^2)*u[y]"),
    ("B8", "(x^2 - y^2)*u[x] + 2*x*y*u[y]"),
];

fn laplace2d_task(sources: &Sources, report: &mut Report) -> Result<(), String> {
    let t = "laplace2d";
    let s = Session::parse(&sources.get(t)?).map_err(|e| format!("{t}: {e}"))?;
    let eq = model_of(&s)?;
    let names: Vec<String> = s.bivectors.iter().map(|(n, _)| n.clone()).collect();

    for name in &names {
        run_item(report, t, &format!("{name} satisfies the bivector conditions"), || {
            check_item(&s, &eq, name)
        });
    }

    run_item(report, t, "the quadratic generators satisfy the printed system on h", || {
        let relations = [
            "pd(h,1,1) + pd(h,2,2)",
            "pd(h,1,3) - pd(h,2,4)",
            "pd(h,2,3) + pd(h,1,4)",
            "pd(h,2,4,4) + pd(h,2,3,3)",
        ];
        for (name, hsrc) in LAPLACE2D_GENERATORS {
            let bound = with_binding(&s, "h", hsrc)?;
            for rel in &relations {
                let r = bound.resolved(&pexpr(&s, rel)?)?;
                if !r.is_zero() {
                    return Ok((
                        Status::Fail,
                        format!("{name} (h = {hsrc}): {rel} = {}", print_canonical(&r, &s)),
                    ));
                }
            }
        }
        Ok((Status::Pass, "4 relations hold for all 8 generators".to_string()))
    });

    for (name, hsrc) in LAPLACE2D_GENERATORS {
        run_item(report, t, &format!("the coefficient formulas rebuild {name} from h = {hsrc}"), || {
            let bound = with_binding(&s, "h", hsrc)?;
            let rebuilt = bound.resolved(&pexpr(&s, LAPLACE2D_FORMULA)?)?;
            let target = s
                .bivector(name)
                .ok_or_else(|| format!("no bivector named `{name}`"))?;
            Ok(expect_eq(&rebuilt, target, &s))
        });
    }

    for name in &names {
        let poisson_expected = matches!(name.as_str(), "B0" | "B1" | "B2" | "B3" | "B4");
        let label = if poisson_expected {
            format!("{name} is Poisson")
        } else {
            format!("{name} is not Poisson")
        };
        run_item(report, t, &label, || {
            let (ok, w) = is_poisson(&bivector_named(&s, name)?, &eq).map_err(|e| e.to_string())?;
            if ok == poisson_expected {
                let payload = if ok {
                    String::new()
                } else {
                    format!("self-bracket has {} terms", w.n_terms())
                };
                Ok((Status::Pass, payload))
            } else {
                Ok((
                    Status::Fail,
                    format!("self-bracket = {}", print_canonical(&w, &s)),
                ))
            }
        });
    }

    run_item(report, t, "the brackets among B5..B8 are nontrivial 3-vectors", || {
        let mut lines = Vec::new();
        for i in 5..=8 {
            for j in i..=8 {
                let a = bivector_named(&s, &format!("B{i}"))?;
                let b = bivector_named(&s, &format!("B{j}"))?;
                let w = schouten_bracket(&a, &b, &eq).map_err(|e| e.to_string())?;
                if w.is_zero() {
                    return Ok((
                        Status::Fail,
                        format!("[[B{i}, B{j}]] reduces to zero"),
                    ));
                }
                lines.push(format!("[[B{i}, B{j}]]: {} terms", w.n_terms()));
            }
        }
        Ok((Status::Pass, lines.join(", ")))
    });

    run_item(report, t, "degree-0 search finds exactly the constant structures", || {
        let out = match verified_search(&eq, 2, 2, &[], 0, &s)? {
            Ok(out) => out,
            Err(bad) => return Ok(bad),
        };
        Ok(expect_basis(&out, &["p[]", "p[x,y]", "p[y,y]"], &s))
    });

    run_item(report, t, "degree-2 search over x, y and low jets spans the catalog", || {
        let mi = |pairs: &[(usize, u8)]| MultiIndex::from_pairs(pairs);
        let vars = [
            Atom::Indep(0),
            Atom::Indep(1),
            Atom::JetU(mi(&[(0, 1)])),
            Atom::JetU(mi(&[(1, 1)])),
            Atom::JetU(mi(&[(0, 1), (1, 1)])),
            Atom::JetU(mi(&[(1, 2)])),
        ];
        let out = match verified_search(&eq, 2, 2, &vars, 2, &s)? {
            Ok(out) => out,
            Err(bad) => return Ok(bad),
        };
        for (name, e) in &s.bivectors {
            if !in_span(&out, e) {
                return Ok((Status::Fail, format!("{name} escapes the span")));
            }
        }
        Ok((
            Status::Pass,
            format!("dimension {}; all nine catalog entries lie in the span", out.basis.len()),
        ))
    });

    Ok(())
}

// ---------------------------------------------------------------------------
// Appendix catalogs: 3D Laplace and the Poincare equation

fn catalog_task(
    t: &'static str,
    base: &str,
    catalog: &str,
    search_binding: Option<(&str, &str)>,
    report: &mut Report,
) -> Result<(), String> {
    let mut s = Session::parse(base).map_err(|e| format!("{t}: {e}"))?;
    s.extend(catalog).map_err(|e| format!("{t} catalog: {e}"))?;
    let eq = model_of(&s)?;

    let mut passing = Vec::new();
    for (name, _) in s.bivectors.clone() {
        run_item(report, t, &format!("{name} is a Poisson bivector"), || {
            let b = bivector_named(&s, &name)?;
            // A catalog entry that the exact check rejects is a suspected
            // misprint in the source table: warn with the residual, keep
            // the entry verbatim.
            match check_bivector(&b, &eq).map_err(|e| e.to_string())? {
                CheckReport::Fail(v) => {
                    return Ok((
                        Status::Warn,
                        format!(
                            "suspected misprint in the source table: {}",
                            describe_violation(&v, &s)
                        ),
                    ))
                }
                CheckReport::Pass { .. } => {}
            }
            let (ok, w) = is_poisson(&b, &eq).map_err(|e| e.to_string())?;
            if ok {
                Ok((Status::Pass, String::new()))
            } else {
                Ok((
                    Status::Warn,
                    format!(
                        "suspected misprint in the source table: self-bracket = {}",
                        print_canonical(&w, &s)
                    ),
                ))
            }
        });
        if report.items.last().map(|i| i.status) == Some(Status::Pass) {
            passing.push(name.clone());
        }
    }

    run_item(report, t, "degree-4 search over x, y, z spans every passing entry", || {
        let (search_session, search_eq) = match search_binding {
            Some((name, rhs)) => {
                let bound = with_binding(&s, name, rhs)?;
                let eq2 = model_of(&bound)?;
                (bound, eq2)
            }
            None => (s.clone(), eq.clone()),
        };
        let vars = [Atom::Indep(0), Atom::Indep(1), Atom::Indep(2)];
        let out = search(&search_eq, 3, 2, &vars, 4).map_err(|e| e.to_string())?;
        let mut escaped = Vec::new();
        for name in &passing {
            let e = search_session.resolved(
                search_session
                    .bivector(name)
                    .ok_or_else(|| format!("no bivector named `{name}`"))?,
            )?;
            if !in_span(&out, &e) {
                escaped.push(name.clone());
            }
        }
        if escaped.is_empty() {
            Ok((
                Status::Pass,
                format!(
                    "dimension {}; all {} passing entries lie in the span",
                    out.basis.len(),
                    passing.len()
                ),
            ))
        } else {
            Ok((
                Status::Fail,
                format!("outside the span: {}", escaped.join(", ")),
            ))
        }
    });

    Ok(())
}

fn laplace3d_task(sources: &Sources, report: &mut Report) -> Result<(), String> {
    catalog_task(
        "laplace3d",
        &sources.get("laplace3d")?,
        &sources.get("appendix_b")?,
        None,
        report,
    )
}

fn poincare_task(sources: &Sources, report: &mut Report) -> Result<(), String> {
    catalog_task(
        "poincare",
        &sources.get("poincare")?,
        &sources.get("appendix_c")?,
        Some(("a", "2")),
        report,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_sources_parse() {
        for name in TASKS {
            let text = Sources::builtin().get(name).unwrap();
            let s = Session::parse(&text).unwrap();
            assert!(s.equation.is_some(), "{name} lacks an equation");
            model_of(&s).unwrap();
        }
        let mut s = Session::parse(LAPLACE3D).unwrap();
        s.extend(APPENDIX_B).unwrap();
        assert_eq!(s.bivectors.len(), 32);
        let mut s = Session::parse(POINCARE).unwrap();
        s.extend(APPENDIX_C).unwrap();
        assert_eq!(s.bivectors.len(), 32);
    }

    #[test]
    fn wave_corpus_is_green() {
        let mut report = Report::new();
        wave_task(&Sources::builtin(), &mut report).unwrap();
        for item in &report.items {
            assert_ne!(item.status, Status::Error, "{}: {}", item.item, item.payload);
            assert_ne!(item.status, Status::Fail, "{}: {}", item.item, item.payload);
            assert_ne!(item.status, Status::Internal, "{}: {}", item.item, item.payload);
        }
        // The factorization comparison is the one deliberate warning.
        assert_eq!(report.count(Status::Warn), 1);
    }
}
