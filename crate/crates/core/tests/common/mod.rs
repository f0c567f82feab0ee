//! Shared scaffolding for the randomized suites.
//!
//! Each equation of interest is loaded once from its bundled session file
//! into an [`EqSetup`]; the proptest strategies draw random jet expressions
//! over that equation's variables and declared symbols. The property bodies
//! are ordinary functions returning `Result<(), String>` so that both the
//! `proptest!` suites and the acceptance gate's programmatic runner can
//! drive the exact same checks.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use proptest::strategy::Union;

use jetviber::atom::{Atom, FunSym};
use jetviber::equation::{EquationModel, Shell};
use jetviber::fixtures::{self, Sources};
use jetviber::lang::{print_canonical, Session};
use jetviber::multiindex::MultiIndex;
use jetviber::ops::CDiffOp;
use jetviber::poly::{qr, DiffPoly};
use jetviber::schouten::{
    check_bivector, evolutionary_apply, generating_section, schouten_bracket, Bivector,
    CheckReport, GeneratingSection,
};
use jetviber::search::{search, SearchOutcome};

// ---------------------------------------------------------------------------
// Equation setups

/// One bundled equation with everything the random suites need.
pub struct EqSetup {
    pub name: &'static str,
    pub session: Session,
    pub model: EquationModel,
    pub n_vars: usize,
    /// Declared bivectors that pass the direct check; catalog entries that
    /// fail it (the suspected misprints) drop out of the pool.
    pub pool: Vec<Bivector>,
}

pub const EQUATION_NAMES: [&str; 5] = ["wave", "uxyz", "laplace2d", "laplace3d", "poincare"];

fn load(name: &'static str) -> EqSetup {
    let src = Sources::builtin().get(name).expect("bundled session");
    let mut session = Session::parse(&src).expect("bundled session parses");
    // The two catalog equations keep their bivectors in companion files.
    let catalog = match name {
        "laplace3d" => Some("appendix_b"),
        "poincare" => Some("appendix_c"),
        _ => None,
    };
    if let Some(cat) = catalog {
        let more = Sources::builtin().get(cat).expect("bundled catalog");
        session.extend(&more).expect("bundled catalog parses");
    }
    let model = fixtures::model_of(&session).expect("equation model");
    let n_vars = session.var_names.len();
    let mut pool = Vec::new();
    for (bname, _) in &session.bivectors {
        let b = fixtures::bivector_named(&session, bname).expect("declared bivector resolves");
        if matches!(check_bivector(&b, &model), Ok(CheckReport::Pass { .. })) {
            pool.push(b);
        }
    }
    EqSetup {
        name,
        session,
        model,
        n_vars,
        pool,
    }
}

/// All five setups, built once per process.
pub fn setups() -> &'static [EqSetup] {
    static CELL: OnceLock<Vec<EqSetup>> = OnceLock::new();
    CELL.get_or_init(|| EQUATION_NAMES.iter().map(|n| load(n)).collect())
}

pub fn setup(name: &str) -> &'static EqSetup {
    setups()
        .iter()
        .find(|s| s.name == name)
        .expect("known equation")
}

/// The degree-2 search over independent-variable coefficients, built once
/// per equation: its solution span is exactly the family the compatibility
/// property quantifies over. Symbolic constants cannot enter the rational
/// elimination, so the Poincaré span is taken at the catalog's `a := 2`.
pub struct IndepSpan {
    pub model: EquationModel,
    pub out: SearchOutcome,
}

pub fn indep_search(name: &str) -> &'static IndepSpan {
    static CELL: OnceLock<BTreeMap<&'static str, IndepSpan>> = OnceLock::new();
    let map = CELL.get_or_init(|| {
        EQUATION_NAMES
            .iter()
            .map(|n| {
                let s = setup(n);
                let model = if s.session.constants.is_empty() {
                    s.model.clone()
                } else {
                    let mut bound = s.session.clone();
                    for c in &s.session.constants {
                        let two = bound.parse_expression("2").expect("literal parses");
                        bound
                            .add_instantiation(c, two)
                            .expect("constant instantiation");
                    }
                    fixtures::model_of(&bound).expect("instantiated model")
                };
                let vars: Vec<Atom> = (0..s.n_vars).map(Atom::Indep).collect();
                let order = s.model.lead().order();
                let out = search(&model, s.n_vars, order, &vars, 2).expect("search assembles");
                (*n, IndepSpan { model, out })
            })
            .collect()
    });
    map.get(name).expect("known equation")
}

// ---------------------------------------------------------------------------
// Strategies

/// A multi-index over `n_vars` variables of order at most `max_order`.
pub fn arb_index(n_vars: usize, max_order: usize) -> impl Strategy<Value = MultiIndex> {
    prop::collection::vec(0..n_vars, 0..=max_order)
        .prop_map(|vs| vs.into_iter().fold(MultiIndex::zero(), |m, v| m.bump(v)))
}

/// Shaves a multi-index down until it leaves the lead family, so the jet it
/// names survives normal-form reduction untouched.
fn clip_irreducible(lead: &MultiIndex, mut m: MultiIndex) -> MultiIndex {
    let v = lead.iter().next().expect("lead is nonempty").0;
    while lead.divides(&m) {
        m = m
            .checked_sub(&MultiIndex::single(v))
            .expect("divisible index has the lead variable");
    }
    m
}

fn arb_irreducible_index(
    lead: &'static MultiIndex,
    n_vars: usize,
    max_order: usize,
) -> impl Strategy<Value = MultiIndex> {
    arb_index(n_vars, max_order).prop_map(move |m| clip_irreducible(lead, m))
}

/// Small rational scalars, denominators kept tiny so products stay readable.
pub fn arb_ratio() -> impl Strategy<Value = BigRational> {
    (-6i64..=6, 1i64..=3).prop_map(|(n, d)| qr(n, d))
}

fn arb_even_atom(s: &'static EqSetup, only_irreducible: bool) -> BoxedStrategy<Atom> {
    let lead = s.model.lead();
    let jets = if only_irreducible {
        arb_irreducible_index(lead, s.n_vars, 3).boxed()
    } else {
        arb_index(s.n_vars, 4).boxed()
    };
    let mut choices: Vec<BoxedStrategy<Atom>> = vec![
        (0..s.n_vars).prop_map(Atom::Indep).boxed(),
        jets.prop_map(Atom::JetU).boxed(),
    ];
    let funs: Vec<Arc<FunSym>> = s.session.functions.values().cloned().collect();
    if !funs.is_empty() {
        choices.push((0..funs.len()).prop_map(move |i| Atom::fun(&funs[i])).boxed());
    }
    let consts: Vec<Atom> = s
        .session
        .constants
        .iter()
        .map(|c| Atom::Const(Arc::from(c.as_str())))
        .collect();
    if !consts.is_empty() {
        choices.push(
            (0..consts.len())
                .prop_map(move |i| consts[i].clone())
                .boxed(),
        );
    }
    Union::new(choices).boxed()
}

fn term_of(c: BigRational, atoms: Vec<Atom>) -> DiffPoly {
    let mut t = DiffPoly::one().scale(&c);
    for a in atoms {
        t = t.mul(&DiffPoly::atom(a));
    }
    t
}

fn sum_of(terms: Vec<DiffPoly>) -> DiffPoly {
    terms
        .into_iter()
        .fold(DiffPoly::zero(), |acc, t| acc.add(&t))
}

/// A parity-even differential polynomial in the equation's symbols.
pub fn arb_even_poly(s: &'static EqSetup) -> BoxedStrategy<DiffPoly> {
    arb_even_poly_inner(s, false)
}

fn arb_even_poly_inner(s: &'static EqSetup, only_irreducible: bool) -> BoxedStrategy<DiffPoly> {
    let term = (
        arb_ratio(),
        prop::collection::vec(arb_even_atom(s, only_irreducible), 0..=2),
    )
        .prop_map(|(c, atoms)| term_of(c, atoms));
    prop::collection::vec(term, 1..=3).prop_map(sum_of).boxed()
}

/// A p-linear polynomial `Σ aᵢ·p_σᵢ` with parity-even coefficients.
pub fn arb_p_linear(s: &'static EqSetup) -> BoxedStrategy<DiffPoly> {
    arb_p_linear_inner(s, false)
}

fn arb_p_linear_inner(s: &'static EqSetup, only_irreducible: bool) -> BoxedStrategy<DiffPoly> {
    let n = s.n_vars;
    let jets = move || {
        if only_irreducible {
            arb_irreducible_index(s.model.lead(), n, 3).boxed()
        } else {
            arb_index(n, 3).boxed()
        }
    };
    prop::collection::vec((arb_even_poly_inner(s, only_irreducible), jets()), 1..=2)
        .prop_map(|parts| {
            sum_of(
                parts
                    .into_iter()
                    .map(|(c, m)| c.mul(&DiffPoly::jet_p(m)))
                    .collect(),
            )
        })
        .boxed()
}

/// A p-degree-2 polynomial (products of two odd jets; coincident indices
/// collapse to zero on their own).
pub fn arb_p_quadratic(s: &'static EqSetup) -> BoxedStrategy<DiffPoly> {
    let n = s.n_vars;
    prop::collection::vec(
        (arb_even_poly(s), arb_index(n, 3), arb_index(n, 3)),
        1..=2,
    )
    .prop_map(|parts| {
        sum_of(
            parts
                .into_iter()
                .map(|(c, m1, m2)| c.mul(&DiffPoly::jet_p(m1)).mul(&DiffPoly::jet_p(m2)))
                .collect(),
        )
    })
    .boxed()
}

/// A mixed-parity polynomial: even part plus optional odd parts.
pub fn arb_poly(s: &'static EqSetup) -> BoxedStrategy<DiffPoly> {
    (
        arb_even_poly(s),
        prop::option::of(arb_p_linear(s)),
        prop::option::of(arb_p_quadratic(s)),
    )
        .prop_map(|(e, l, q2)| {
            let mut out = e;
            if let Some(l) = l {
                out = out.add(&l);
            }
            if let Some(q2) = q2 {
                out = out.add(&q2);
            }
            out
        })
        .boxed()
}

/// An operator in total derivatives with parity-even coefficients.
pub fn arb_cdiff_op(s: &'static EqSetup) -> BoxedStrategy<CDiffOp> {
    prop::collection::vec((arb_index(s.n_vars, 2), arb_even_poly(s)), 1..=2)
        .prop_map(|entries| {
            let mut op = CDiffOp::zero();
            for (m, a) in entries {
                op.add_coeff(m, a);
            }
            op
        })
        .boxed()
}

/// A decomposition table `{τ ↦ A_τ}` whose coefficients contain no jet from
/// the lead family, so `Σ A_τ·D_τ(F)` decomposes back to exactly this table.
pub fn arb_decomposition_table(
    s: &'static EqSetup,
) -> BoxedStrategy<BTreeMap<MultiIndex, DiffPoly>> {
    let coeff = (
        arb_even_poly_inner(s, true),
        prop::option::of(arb_p_linear_inner(s, true)),
    )
        .prop_map(|(e, l)| match l {
            Some(l) => e.add(&l),
            None => e,
        });
    prop::collection::vec((arb_index(s.n_vars, 2), coeff), 1..=3)
        .prop_map(|entries| {
            let mut table: BTreeMap<MultiIndex, DiffPoly> = BTreeMap::new();
            for (tau, a) in entries {
                let merged = match table.get(&tau) {
                    Some(prev) => prev.add(&a),
                    None => a,
                };
                table.insert(tau, merged);
            }
            table.retain(|_, a| !a.is_zero());
            table
        })
        .boxed()
}

/// A generating section of homogeneous parity: odd sections look like a
/// bivector's (`φ_u` p-linear, `φ_p` p-quadratic), even ones one odd degree
/// lower. Returns the section together with its parity.
pub fn arb_section(s: &'static EqSetup) -> BoxedStrategy<(GeneratingSection, usize)> {
    let odd = (arb_p_linear(s), arb_p_quadratic(s)).prop_map(|(phi_u, phi_p)| {
        (GeneratingSection { phi_u, phi_p }, 1)
    });
    let even = (arb_even_poly(s), arb_p_linear(s)).prop_map(|(phi_u, phi_p)| {
        (GeneratingSection { phi_u, phi_p }, 0)
    });
    prop_oneof![odd, even].boxed()
}

/// A parity-homogeneous polynomial of odd degree 0, 1, or 2, with its degree.
pub fn arb_homogeneous(s: &'static EqSetup) -> BoxedStrategy<(DiffPoly, usize)> {
    let n = s.n_vars;
    (
        arb_even_poly(s),
        prop::collection::vec(arb_index(n, 3), 0..=2),
    )
        .prop_map(|(e, ps)| {
            let k = ps.len();
            let mut out = e;
            for m in ps {
                out = out.mul(&DiffPoly::jet_p(m));
            }
            (out, k)
        })
        .boxed()
}

/// A random member of the equation's declared-bivector span, assembled from
/// pool indices and rational weights.
pub fn arb_pool_combo(s: &'static EqSetup) -> BoxedStrategy<Bivector> {
    let len = s.pool.len();
    assert!(len > 0, "{} declares no passing bivector", s.name);
    prop::collection::vec((0..len, arb_ratio()), 1..=2)
        .prop_map(move |picks| {
            let mut e = DiffPoly::zero();
            for (i, c) in picks {
                e = e.add(&s.pool[i].h_u.scale(&c));
            }
            Bivector::new("combo", e).expect("combination stays p-linear")
        })
        .boxed()
}

/// Weights over the independent-coefficient solution basis.
pub fn arb_span_weights(name: &'static str) -> BoxedStrategy<Vec<BigRational>> {
    let dim = indep_search(name).out.basis.len();
    prop::collection::vec(arb_ratio(), dim..=dim).boxed()
}

// ---------------------------------------------------------------------------
// Property bodies

fn expect_eq(
    s: &EqSetup,
    lhs: &DiffPoly,
    rhs: &DiffPoly,
    what: &str,
) -> Result<(), String> {
    if lhs == rhs {
        Ok(())
    } else {
        Err(format!(
            "{what}: {} ≠ {}",
            print_canonical(lhs, &s.session),
            print_canonical(rhs, &s.session)
        ))
    }
}

/// `D_i∘D_j = D_j∘D_i` on arbitrary expressions.
pub fn check_commuting_derivatives(
    s: &EqSetup,
    e: &DiffPoly,
    i: usize,
    j: usize,
) -> Result<(), String> {
    let ij = e.total_derivative(i).total_derivative(j);
    let ji = e.total_derivative(j).total_derivative(i);
    expect_eq(s, &ij, &ji, "total derivatives do not commute")
}

/// `Δ** = Δ`.
pub fn check_adjoint_involution(s: &EqSetup, op: &CDiffOp) -> Result<(), String> {
    let back = op
        .adjoint()
        .and_then(|a| a.adjoint())
        .map_err(|e| e.to_string())?;
    if back == *op {
        Ok(())
    } else {
        let probe = DiffPoly::jet_p(MultiIndex::zero());
        expect_eq(
            s,
            &back.apply(&probe),
            &op.apply(&probe),
            "double adjoint differs from the operator",
        )
    }
}

/// `(Δ∘∇)* = ∇*∘Δ*`.
pub fn check_adjoint_anti_homomorphism(
    s: &EqSetup,
    a: &CDiffOp,
    b: &CDiffOp,
) -> Result<(), String> {
    let lhs = a.compose(b).adjoint().map_err(|e| e.to_string())?;
    let rhs = b
        .adjoint()
        .map_err(|e| e.to_string())?
        .compose(&a.adjoint().map_err(|e| e.to_string())?);
    if lhs == rhs {
        Ok(())
    } else {
        let probe = DiffPoly::jet_p(MultiIndex::zero());
        expect_eq(
            s,
            &lhs.apply(&probe),
            &rhs.apply(&probe),
            "adjoint of a composition differs from the reversed composition",
        )
    }
}

/// Normal-form reduction is idempotent and leaves no lead-family even jet.
pub fn check_reduce_idempotent(s: &EqSetup, e: &DiffPoly, shell: Shell) -> Result<(), String> {
    let r1 = s.model.reduce(e, shell).map_err(|e| e.to_string())?;
    let r2 = s.model.reduce(&r1, shell).map_err(|e| e.to_string())?;
    expect_eq(s, &r2, &r1, "reducing a reduced expression moved it")?;
    if let Some(bad) = r1
        .u_dependencies()
        .into_iter()
        .find(|m| s.model.lead().divides(m))
    {
        return Err(format!(
            "reduced form still depends on the lead-family jet u_{}",
            bad.render(&s.session.var_names)
        ));
    }
    Ok(())
}

/// `Σ_τ A_τ·D_τ(F)` decomposes back to exactly the table it was built from
/// whenever the `A_τ` stay clear of the lead family.
pub fn check_decompose_reconstruction(
    s: &EqSetup,
    table: &BTreeMap<MultiIndex, DiffPoly>,
) -> Result<(), String> {
    let mut e = DiffPoly::zero();
    for (tau, a) in table {
        e = e.add(&a.mul(&s.model.f().total_derivative_multi(tau)));
    }
    let nabla = s.model.decompose_on_f(&e).map_err(|e| e.to_string())?;
    let got: BTreeMap<&MultiIndex, &DiffPoly> = nabla.values().collect();
    for (tau, a) in table {
        match got.get(tau) {
            Some(b) => expect_eq(
                s,
                b,
                a,
                &format!("slot {} of the recovered table", tau.render(&s.session.var_names)),
            )?,
            None => {
                return Err(format!(
                    "slot {} missing from the recovered table",
                    tau.render(&s.session.var_names)
                ))
            }
        }
    }
    for tau in got.keys() {
        if !table.contains_key(tau) {
            return Err(format!(
                "recovered table has a spurious slot {}",
                tau.render(&s.session.var_names)
            ));
        }
    }
    Ok(())
}

/// The evolutionary derivation satisfies the graded Leibniz rule
/// `Ev(e₁e₂) = Ev(e₁)e₂ + (−1)^{|φ||e₁|} e₁·Ev(e₂)`.
pub fn check_ev_leibniz(
    s: &EqSetup,
    phi: &GeneratingSection,
    phi_parity: usize,
    e1: &DiffPoly,
    e1_parity: usize,
    e2: &DiffPoly,
) -> Result<(), String> {
    let lhs = evolutionary_apply(phi, &e1.mul(e2));
    let cross = e1.mul(&evolutionary_apply(phi, e2));
    let mut rhs = evolutionary_apply(phi, e1).mul(e2);
    rhs = if (phi_parity * e1_parity) % 2 == 1 {
        rhs.sub(&cross)
    } else {
        rhs.add(&cross)
    };
    expect_eq(s, &lhs, &rhs, "graded Leibniz rule fails")
}

/// `⟦A,B⟧ = ⟦B,A⟧` for bivectors.
pub fn check_bracket_symmetry(s: &EqSetup, a: &Bivector, b: &Bivector) -> Result<(), String> {
    let ab = schouten_bracket(a, b, &s.model).map_err(|e| e.to_string())?;
    let ba = schouten_bracket(b, a, &s.model).map_err(|e| e.to_string())?;
    expect_eq(s, &ab, &ba, "bracket is not symmetric")
}

/// `⟦αA+βB, C⟧ = α⟦A,C⟧ + β⟦B,C⟧`.
pub fn check_bracket_bilinearity(
    s: &EqSetup,
    a: &Bivector,
    b: &Bivector,
    c: &Bivector,
    alpha: &BigRational,
    beta: &BigRational,
) -> Result<(), String> {
    let combo = Bivector::new("combo", a.h_u.scale(alpha).add(&b.h_u.scale(beta)))
        .map_err(|e| e.to_string())?;
    let lhs = schouten_bracket(&combo, c, &s.model).map_err(|e| e.to_string())?;
    let rhs = schouten_bracket(a, c, &s.model)
        .map_err(|e| e.to_string())?
        .scale(alpha)
        .add(
            &schouten_bracket(b, c, &s.model)
                .map_err(|e| e.to_string())?
                .scale(beta),
        );
    expect_eq(s, &lhs, &rhs, "bracket is not bilinear")
}

/// Any two members of the independent-coefficient solution span have
/// vanishing odd component and vanishing mutual bracket.
pub fn check_independent_coefficient_span(
    s: &EqSetup,
    w1: &[BigRational],
    w2: &[BigRational],
) -> Result<(), String> {
    let span = indep_search(s.name);
    let out = &span.out;
    let member = |w: &[BigRational], tag: &str| -> Result<Bivector, String> {
        let mut v = vec![BigRational::zero(); out.ansatz.len()];
        for (k, c) in w.iter().enumerate() {
            for (slot, b) in out.basis[k].iter().enumerate() {
                v[slot] += c * b;
            }
        }
        Bivector::new(tag, out.ansatz.combine(&v)).map_err(|e| e.to_string())
    };
    let b1 = member(w1, "V1")?;
    let b2 = member(w2, "V2")?;
    for b in [&b1, &b2] {
        let phi = generating_section(b, &span.model).map_err(|e| e.to_string())?;
        if !phi.phi_p.is_zero() {
            return Err(format!(
                "independent-variable coefficients should force a vanishing odd component, got {}",
                print_canonical(&phi.phi_p, &s.session)
            ));
        }
    }
    let w = schouten_bracket(&b1, &b2, &span.model).map_err(|e| e.to_string())?;
    if w.is_zero() {
        Ok(())
    } else {
        Err(format!(
            "span members fail to commute: ⟦V1,V2⟧ = {}",
            print_canonical(&w, &s.session)
        ))
    }
}
