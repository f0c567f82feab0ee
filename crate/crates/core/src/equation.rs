//! Scalar equation models `F = 0` with a solved leading derivative.
//!
//! A model fixes a lead `u_λ` whose coefficient in `F` is a nonzero rational
//! constant `c`, rewrites the relation as `u_λ = rhs` with `rhs` free of the
//! lead family `{u_{λ+τ}}`, and derives the companion odd relation
//! `p_λ = p_rhs` from the cotangent equation. On top of that it provides
//! shell reduction (rewriting lead-family jets to fixed point) and the
//! decomposition of an expression as `Σ_τ A_τ·D_τ(F)`.

use num_rational::BigRational;
use num_traits::Zero;
use std::collections::BTreeSet;

use crate::atom::Atom;
use crate::multiindex::MultiIndex;
use crate::ops::{BiDiffOp, CDiffOp};
use crate::poly::{q, Bindings, DiffPoly};

/// How many full substitution passes a reduction may take before the model
/// concludes that rewriting does not terminate for the given expression.
const REDUCTION_FUEL: usize = 512;

/// Which relations are imposed when reducing an expression.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Shell {
    /// Only the even relations `u_{λ+τ} = D_τ(rhs)`.
    Equation,
    /// The even relations together with the odd ones `p_{λ+τ} = D_τ(p_rhs)`.
    Cotangent,
}

/// How the odd relation on the cotangent equation is produced.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum CotangentRule {
    /// Solve `ℓ_F(p) = 0` for `p_λ`.
    #[default]
    Linearization,
    /// Solve `ℓ_F^*(p) = 0` for `p_λ`.
    Adjoint,
}

#[derive(thiserror::Error, Clone, PartialEq, Eq, Debug)]
pub enum EquationError {
    #[error("equation must be an even, p-free expression")]
    OddEquation,
    #[error("no derivative with a constant rational coefficient can serve as lead")]
    NoLead,
    #[error("invalid lead {0}: {1}")]
    BadLead(String, String),
    #[error("function symbol {0} takes a lead-family derivative as argument")]
    SymbolOnLeadFamily(String),
    #[error("shell reduction did not reach a fixed point")]
    NonTerminating,
    #[error("expression does not vanish on the equation: residual {0:?}")]
    NonVanishing(DiffPoly),
    #[error("expression is nonlinear in the equation and its derivatives")]
    NonlinearInF,
}

/// The linearization `ℓ_e = Σ_σ (∂e/∂u_σ)·D_σ` of an expression.
pub fn linearization(e: &DiffPoly) -> CDiffOp {
    let mut op = CDiffOp::zero();
    for sigma in e.u_dependencies() {
        op.add_coeff(sigma.clone(), e.partial(&Atom::JetU(sigma)));
    }
    op
}

/// The odd-slot analogue `Σ_σ (∂e/∂p_σ)·D_σ`, with left partial derivatives.
pub fn linearization_p(e: &DiffPoly) -> CDiffOp {
    let mut op = CDiffOp::zero();
    for sigma in e.p_dependencies() {
        op.add_coeff(sigma.clone(), e.partial(&Atom::JetP(sigma)));
    }
    op
}

/// A scalar differential equation solved for a leading derivative.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EquationModel {
    f: DiffPoly,
    lead: MultiIndex,
    lead_coeff: BigRational,
    rhs: DiffPoly,
    p_rhs: DiffPoly,
    cotangent: DiffPoly,
}

impl EquationModel {
    /// Builds a model for `f = 0`. When `lead` is `None` the candidates are
    /// tried in descending derivative order and the first one that yields a
    /// constant coefficient and a lead-family-free right-hand side wins.
    pub fn new(
        f: DiffPoly,
        lead: Option<MultiIndex>,
        rule: CotangentRule,
    ) -> Result<Self, EquationError> {
        if f.is_zero() || !f.is_p_free() {
            return Err(EquationError::OddEquation);
        }
        let (lead, lead_coeff, rhs) = match lead {
            Some(l) => {
                let (c, rhs) = Self::solve_for(&f, &l)
                    .map_err(|why| EquationError::BadLead(format!("{l:?}"), why))?;
                (l, c, rhs)
            }
            None => {
                let mut found = None;
                let mut candidates: Vec<MultiIndex> = f.u_dependencies().into_iter().collect();
                candidates.sort();
                for l in candidates.into_iter().rev() {
                    if let Ok((c, rhs)) = Self::solve_for(&f, &l) {
                        found = Some((l, c, rhs));
                        break;
                    }
                }
                found.ok_or(EquationError::NoLead)?
            }
        };

        let lin = linearization(&f);
        let ell_p = match rule {
            CotangentRule::Linearization => lin.apply(&DiffPoly::jet_p(MultiIndex::zero())),
            CotangentRule::Adjoint => lin
                .adjoint()
                .expect("p-free equation has even linearization coefficients")
                .apply(&DiffPoly::jet_p(MultiIndex::zero())),
        };
        let p_lead = Atom::JetP(lead.clone());
        let b = ell_p.partial(&p_lead);
        let b = b
            .rational_value()
            .filter(|v| !v.is_zero())
            .expect("lead coefficient of the cotangent relation is a nonzero constant");
        let p_rhs = DiffPoly::atom(p_lead).sub(&ell_p.scale(&(q(1) / &b)));
        debug_assert!(
            p_rhs.p_dependencies().iter().all(|s| !lead.divides(s)),
            "cotangent right-hand side must be free of the lead family"
        );

        Ok(EquationModel {
            f,
            lead,
            lead_coeff,
            rhs,
            p_rhs,
            cotangent: ell_p,
        })
    }

    /// Tries to solve `f = 0` for `u_λ`, returning the constant coefficient
    /// `c = ∂f/∂u_λ` and `rhs = u_λ − f/c`.
    fn solve_for(f: &DiffPoly, lead: &MultiIndex) -> Result<(BigRational, DiffPoly), String> {
        let coeff = f.partial(&Atom::JetU(lead.clone()));
        let c = match coeff.rational_value() {
            Some(c) if !c.is_zero() => c,
            Some(_) => return Err("the derivative does not occur".into()),
            None => return Err("its coefficient is not a rational constant".into()),
        };
        let rhs = DiffPoly::jet_u(lead.clone()).sub(&f.scale(&(q(1) / &c)));
        if let Some(bad) = rhs.u_dependencies().iter().find(|s| lead.divides(s)) {
            return Err(format!(
                "the right-hand side still depends on the lead family ({bad:?})"
            ));
        }
        Ok((c, rhs))
    }

    pub fn f(&self) -> &DiffPoly {
        &self.f
    }

    pub fn lead(&self) -> &MultiIndex {
        &self.lead
    }

    pub fn lead_coeff(&self) -> &BigRational {
        &self.lead_coeff
    }

    /// `rhs` in `u_λ = rhs`.
    pub fn rhs(&self) -> &DiffPoly {
        &self.rhs
    }

    /// `p_rhs` in `p_λ = p_rhs`.
    pub fn p_rhs(&self) -> &DiffPoly {
        &self.p_rhs
    }

    /// The odd relation itself (`ℓ_F(p)` or `ℓ_F^*(p)` depending on the rule).
    pub fn cotangent_relation(&self) -> &DiffPoly {
        &self.cotangent
    }

    /// Collects the lead-family jets of `e` that are subject to rewriting,
    /// rejecting expressions that hide one inside a function-symbol argument.
    fn family_jets(
        &self,
        e: &DiffPoly,
        shell: Shell,
    ) -> Result<(BTreeSet<MultiIndex>, BTreeSet<MultiIndex>), EquationError> {
        let mut even = BTreeSet::new();
        let mut odd = BTreeSet::new();
        for atom in e.atoms() {
            match atom {
                Atom::JetU(s) if self.lead.divides(s) => {
                    even.insert(s.clone());
                }
                Atom::JetP(s) if shell == Shell::Cotangent && self.lead.divides(s) => {
                    odd.insert(s.clone());
                }
                Atom::FunDeriv { sym, .. } => {
                    for arg in &sym.args {
                        if let Atom::JetU(s) = arg {
                            if self.lead.divides(s) {
                                return Err(EquationError::SymbolOnLeadFamily(
                                    sym.name.to_string(),
                                ));
                            }
                        }
                    }
                }
                _ => {}
            }
        }
        Ok((even, odd))
    }

    /// Rewrites every lead-family jet through the solved relation(s) until
    /// none remains, producing the canonical representative on the shell.
    pub fn reduce(&self, e: &DiffPoly, shell: Shell) -> Result<DiffPoly, EquationError> {
        let mut cur = e.clone();
        for _ in 0..REDUCTION_FUEL {
            let (even, odd) = self.family_jets(&cur, shell)?;
            if even.is_empty() && odd.is_empty() {
                return Ok(cur);
            }
            let mut b = Bindings::new();
            for s in even {
                let tau = s.checked_sub(&self.lead).expect("family jet");
                b.bind_atom(Atom::JetU(s), self.rhs.total_derivative_multi(&tau))
                    .expect("even replacement for an even jet");
            }
            for s in odd {
                let tau = s.checked_sub(&self.lead).expect("family jet");
                b.bind_atom(Atom::JetP(s), self.p_rhs.total_derivative_multi(&tau))
                    .expect("p-linear replacement for an odd jet");
            }
            cur = cur.substitute(&b);
        }
        Err(EquationError::NonTerminating)
    }

    /// Whether `e` reduces to zero on the given shell.
    pub fn vanishes(&self, e: &DiffPoly, shell: Shell) -> Result<bool, EquationError> {
        Ok(self.reduce(e, shell)?.is_zero())
    }

    /// The normal form of `e` with every lead-family jet split as
    /// `u_{λ+τ} = (1/c)·Φ_τ + D_τ(rhs)`, where `Φ_τ` is an inert marker
    /// standing for `D_τ(F)`: a marker-free residual, the marker-linear
    /// part with its coefficients `A_τ`, and whatever carries markers of
    /// total degree two or more (markers still embedded).
    pub fn tag_split(&self, e: &DiffPoly) -> Result<TagSplit, EquationError> {
        let inv_c = q(1) / &self.lead_coeff;
        let mut cur = e.clone();
        let mut expanded = false;
        for _ in 0..REDUCTION_FUEL {
            let (even, _) = self.family_jets(&cur, Shell::Equation)?;
            if even.is_empty() {
                expanded = true;
                break;
            }
            let mut b = Bindings::new();
            for s in even {
                let tau = s.checked_sub(&self.lead).expect("family jet");
                let split = DiffPoly::atom(Atom::Tag(tau.clone()))
                    .scale(&inv_c)
                    .add(&self.rhs.total_derivative_multi(&tau));
                b.bind_atom(Atom::JetU(s), split)
                    .expect("even replacement for an even jet");
            }
            cur = cur.substitute(&b);
        }
        if !expanded {
            return Err(EquationError::NonTerminating);
        }

        let mut split = TagSplit {
            residual: DiffPoly::zero(),
            linear: BiDiffOp::zero(),
            higher: DiffPoly::zero(),
        };
        for (mono, coeff) in cur.terms() {
            let mut tag: Option<MultiIndex> = None;
            let mut degree = 0u32;
            let mut rest = Vec::new();
            for (atom, k) in &mono.evens {
                if let Atom::Tag(tau) = atom {
                    degree += *k;
                    tag = Some(tau.clone());
                } else {
                    rest.push((atom.clone(), *k));
                }
            }
            let mut t = DiffPoly::zero();
            match (degree, tag) {
                (0, _) => {
                    t.add_raw_term(coeff.clone(), mono.evens.clone(), mono.odds.clone());
                    split.residual = split.residual.add(&t);
                }
                (1, Some(tau)) => {
                    t.add_raw_term(coeff.clone(), rest, mono.odds.clone());
                    split.linear.add_value(tau, t);
                }
                _ => {
                    t.add_raw_term(coeff.clone(), mono.evens.clone(), mono.odds.clone());
                    split.higher = split.higher.add(&t);
                }
            }
        }
        Ok(split)
    }

    /// Decomposes `e = Σ_τ A_τ·D_τ(F)`, keeping the odd variables free.
    /// The coefficients read off the marker normal form are unique among
    /// lead-family-free ones.
    pub fn decompose_on_f(&self, e: &DiffPoly) -> Result<BiDiffOp, EquationError> {
        let split = self.tag_split(e)?;
        if !split.higher.is_zero() {
            return Err(EquationError::NonlinearInF);
        }
        if !split.residual.is_zero() {
            return Err(EquationError::NonVanishing(split.residual));
        }
        Ok(split.linear)
    }
}

/// Marker normal form of an expression along an equation; see
/// [`EquationModel::tag_split`].
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TagSplit {
    pub residual: DiffPoly,
    pub linear: BiDiffOp,
    pub higher: DiffPoly,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(pairs: &[(usize, u8)]) -> MultiIndex {
        MultiIndex::from_pairs(pairs)
    }

    fn u(pairs: &[(usize, u8)]) -> DiffPoly {
        DiffPoly::jet_u(mi(pairs))
    }

    fn p(pairs: &[(usize, u8)]) -> DiffPoly {
        DiffPoly::jet_p(mi(pairs))
    }

    fn laplace() -> EquationModel {
        // u_xx + u_yy = 0 solved for u_xx.
        let f = u(&[(0, 2)]).add(&u(&[(1, 2)]));
        EquationModel::new(f, Some(mi(&[(0, 2)])), CotangentRule::default()).unwrap()
    }

    fn wave() -> EquationModel {
        // u_xy = 0 solved for u_xy.
        EquationModel::new(u(&[(0, 1), (1, 1)]), None, CotangentRule::default()).unwrap()
    }

    #[test]
    fn solved_form_and_cotangent_relation() {
        let eq = laplace();
        assert_eq!(eq.lead(), &mi(&[(0, 2)]));
        assert_eq!(eq.lead_coeff(), &q(1));
        assert_eq!(eq.rhs(), &u(&[(1, 2)]).neg());
        assert_eq!(eq.p_rhs(), &p(&[(1, 2)]).neg());
        assert_eq!(
            eq.cotangent_relation(),
            &p(&[(0, 2)]).add(&p(&[(1, 2)]))
        );
    }

    #[test]
    fn auto_selection_takes_the_greatest_solvable_derivative() {
        // u_xy − u_x = 0: the u_xy slot wins over u_x.
        let f = u(&[(0, 1), (1, 1)]).sub(&u(&[(0, 1)]));
        let eq = EquationModel::new(f, None, CotangentRule::default()).unwrap();
        assert_eq!(eq.lead(), &mi(&[(0, 1), (1, 1)]));
        assert_eq!(eq.rhs(), &u(&[(0, 1)]));
    }

    #[test]
    fn scaled_leads_normalize() {
        // 3u_xx + u_yy = 0 ⇒ u_xx = −u_yy/3.
        let f = u(&[(0, 2)]).scale(&q(3)).add(&u(&[(1, 2)]));
        let eq = EquationModel::new(f, Some(mi(&[(0, 2)])), CotangentRule::default()).unwrap();
        assert_eq!(eq.lead_coeff(), &q(3));
        assert_eq!(eq.rhs(), &u(&[(1, 2)]).scale(&crate::poly::qr(-1, 3)));
    }

    #[test]
    fn invalid_leads_are_rejected() {
        // Nonlinear occurrence: u_xx² + u_yy.
        let f = u(&[(0, 2)]).mul(&u(&[(0, 2)])).add(&u(&[(1, 2)]));
        assert!(matches!(
            EquationModel::new(f, Some(mi(&[(0, 2)])), CotangentRule::default()),
            Err(EquationError::BadLead(_, _))
        ));
        // Lead family on the right-hand side: u_x − u_xx.
        let f = u(&[(0, 1)]).sub(&u(&[(0, 2)]));
        assert!(matches!(
            EquationModel::new(f, Some(mi(&[(0, 1)])), CotangentRule::default()),
            Err(EquationError::BadLead(_, _))
        ));
        // An odd expression is not an equation.
        assert!(matches!(
            EquationModel::new(p(&[]), Some(mi(&[])), CotangentRule::default()),
            Err(EquationError::OddEquation)
        ));
    }

    #[test]
    fn reduction_rewrites_to_fixed_point() {
        let eq = laplace();
        // u_xxxx → D_xx(−u_yy) = −u_xxyy → +u_yyyy.
        let r = eq.reduce(&u(&[(0, 4)]), Shell::Equation).unwrap();
        assert_eq!(r, u(&[(1, 4)]));
        // F and its derivatives vanish on the equation.
        assert!(eq.vanishes(eq.f(), Shell::Equation).unwrap());
        let dxf = eq.f().total_derivative(0);
        assert!(eq.vanishes(&dxf, Shell::Equation).unwrap());
        let dxyf = eq.f().total_derivative(0).total_derivative(1);
        assert!(eq.vanishes(&dxyf, Shell::Cotangent).unwrap());
    }

    #[test]
    fn cotangent_reduction_touches_odd_jets_only_on_the_full_shell() {
        let eq = wave();
        let e = p(&[(0, 2), (1, 1)]);
        assert_eq!(eq.reduce(&e, Shell::Equation).unwrap(), e);
        assert!(eq.vanishes(&e, Shell::Cotangent).unwrap());
        // Off the lead family nothing happens.
        let e = u(&[(0, 2), (1, 1)]).sub(&u(&[(0, 2)]));
        let r = eq.reduce(&e, Shell::Cotangent).unwrap();
        assert_eq!(r, u(&[(0, 2)]).neg());
    }

    #[test]
    fn laplace_cotangent_reduction_mixes_families() {
        let eq = laplace();
        // p_xxy → D_y(−p_yy) = −p_yyy.
        let r = eq.reduce(&p(&[(0, 2), (1, 1)]), Shell::Cotangent).unwrap();
        assert_eq!(r, p(&[(1, 3)]).neg());
    }

    #[test]
    fn reduction_leaves_opaque_symbols_alone() {
        use crate::atom::FunSym;
        let eq = wave();
        let g = FunSym::new("g", vec![Atom::Indep(0), Atom::JetU(mi(&[(0, 1)]))]);
        let e = DiffPoly::atom(Atom::fun(&g)).mul(&u(&[(0, 1), (1, 2)]));
        // The factor u_xyy rewrites to zero; g(x, u_x) itself is untouched.
        assert!(eq.vanishes(&e, Shell::Equation).unwrap());
        // A lead-family jet inside a symbol argument cannot be rewritten.
        let h = FunSym::new("h", vec![Atom::JetU(mi(&[(0, 1), (1, 1)]))]);
        let e = DiffPoly::atom(Atom::fun(&h));
        assert_eq!(
            eq.reduce(&e, Shell::Equation),
            Err(EquationError::SymbolOnLeadFamily("h".into()))
        );
    }

    #[test]
    fn symbolic_constants_ride_through_reduction() {
        // u_xx + u_yy − a²·u_zz = 0 solved for u_xx.
        let a = DiffPoly::atom(Atom::Const("a".into()));
        let f = u(&[(0, 2)])
            .add(&u(&[(1, 2)]))
            .sub(&a.mul(&a).mul(&u(&[(2, 2)])));
        let eq = EquationModel::new(f, Some(mi(&[(0, 2)])), CotangentRule::default()).unwrap();
        assert_eq!(eq.rhs(), &a.mul(&a).mul(&u(&[(2, 2)])).sub(&u(&[(1, 2)])));
        let r = eq.reduce(&u(&[(0, 3)]), Shell::Equation).unwrap();
        assert_eq!(
            r,
            a.mul(&a).mul(&u(&[(0, 1), (2, 2)])).sub(&u(&[(0, 1), (1, 2)]))
        );
    }

    #[test]
    fn decompose_recovers_the_equation_itself() {
        let eq = wave();
        let nabla = eq.decompose_on_f(eq.f()).unwrap();
        let vals: Vec<_> = nabla.values().collect();
        assert_eq!(vals, vec![(&MultiIndex::zero(), &DiffPoly::one())]);
    }

    #[test]
    fn decompose_reads_off_linear_combinations() {
        let eq = wave();
        // e = u_y·F + u_x·D_x(F).
        let e = u(&[(1, 1)])
            .mul(eq.f())
            .add(&u(&[(0, 1)]).mul(&eq.f().total_derivative(0)));
        let nabla = eq.decompose_on_f(&e).unwrap();
        assert_eq!(nabla.value(&MultiIndex::zero()), u(&[(1, 1)]));
        assert_eq!(nabla.value(&mi(&[(0, 1)])), u(&[(0, 1)]));
        // Reconstruction is exact.
        let mut back = DiffPoly::zero();
        for (tau, a) in nabla.values() {
            back = back.add(&a.mul(&eq.f().total_derivative_multi(tau)));
        }
        assert_eq!(back, e);
    }

    #[test]
    fn decompose_respects_the_lead_coefficient() {
        // 2u_xy = 0: F = 2u_xy, so u_xy = Φ₀/2 and e = u_xy has A₀ = 1/2.
        let f = u(&[(0, 1), (1, 1)]).scale(&q(2));
        let eq = EquationModel::new(f, None, CotangentRule::default()).unwrap();
        let nabla = eq.decompose_on_f(&u(&[(0, 1), (1, 1)])).unwrap();
        assert_eq!(
            nabla.value(&MultiIndex::zero()),
            DiffPoly::constant(crate::poly::qr(1, 2))
        );
    }

    #[test]
    fn decompose_rejects_what_does_not_vanish() {
        let eq = wave();
        let e = u(&[(0, 1)]).mul(&p(&[]));
        match eq.decompose_on_f(&e) {
            Err(EquationError::NonVanishing(r)) => assert_eq!(r, e),
            other => panic!("expected a residual, got {other:?}"),
        }
        // Mixed: one good term, one bad.
        let e2 = eq.f().mul(&u(&[(1, 1)])).add(&u(&[(0, 1)]));
        match eq.decompose_on_f(&e2) {
            Err(EquationError::NonVanishing(r)) => assert_eq!(r, u(&[(0, 1)])),
            other => panic!("expected a residual, got {other:?}"),
        }
    }

    #[test]
    fn decompose_rejects_quadratic_occurrences() {
        let eq = wave();
        let e = eq.f().mul(eq.f());
        assert_eq!(eq.decompose_on_f(&e), Err(EquationError::NonlinearInF));
    }

    #[test]
    fn adjoint_rule_agrees_on_self_adjoint_equations() {
        let f = u(&[(0, 2)]).add(&u(&[(1, 2)]));
        let a = EquationModel::new(f.clone(), Some(mi(&[(0, 2)])), CotangentRule::Linearization)
            .unwrap();
        let b = EquationModel::new(f, Some(mi(&[(0, 2)])), CotangentRule::Adjoint).unwrap();
        assert_eq!(a.p_rhs(), b.p_rhs());
        // For the wave equation the adjoint relation flips no signs either:
        // ℓ^*(p) = D_xD_y(p) = ℓ(p) up to the (even) derivative count.
        let w = EquationModel::new(
            u(&[(0, 1), (1, 1)]),
            None,
            CotangentRule::Adjoint,
        )
        .unwrap();
        assert_eq!(w.p_rhs(), &DiffPoly::zero());
    }
}
