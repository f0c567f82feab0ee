//! C-differential operators in total derivatives.
//!
//! A `CDiffOp` is a finite sum `Σ_σ a_σ·D_σ` with differential-polynomial
//! coefficients, applied with the coefficient on the left. A `BiDiffOp` keeps
//! a `CDiffOp` per first-slot index: `∇(q, p) = Σ_τ D_τ(q)·A_τ(p)`.

use crate::multiindex::MultiIndex;
use crate::poly::{q, DiffPoly};
use num_rational::BigRational;
use num_traits::Zero;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OpError {
    /// Formal adjoints are defined for parity-even coefficients only.
    #[error("adjoint requires parity-even coefficients")]
    OddCoefficient,
    /// `from_p_linear` expects every term to carry exactly one odd factor.
    #[error("expression is not linear in the odd jets")]
    NotPLinear,
}

/// `Σ_σ a_σ·D_σ` acting on differential polynomials.
#[derive(Clone, PartialEq, Eq, Default, Debug)]
pub struct CDiffOp {
    coeffs: BTreeMap<MultiIndex, DiffPoly>,
}

impl CDiffOp {
    pub fn zero() -> Self {
        CDiffOp::default()
    }

    pub fn identity() -> Self {
        let mut op = CDiffOp::zero();
        op.add_coeff(MultiIndex::zero(), DiffPoly::one());
        op
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Adds `a·D_σ` into the operator, merging with any existing coefficient.
    pub fn add_coeff(&mut self, sigma: MultiIndex, a: DiffPoly) {
        if a.is_zero() {
            return;
        }
        match self.coeffs.entry(sigma) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(a);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().add(&a);
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn coeff(&self, sigma: &MultiIndex) -> DiffPoly {
        self.coeffs.get(sigma).cloned().unwrap_or_else(DiffPoly::zero)
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&MultiIndex, &DiffPoly)> {
        self.coeffs.iter()
    }

    /// Highest total-derivative order present.
    pub fn order(&self) -> usize {
        self.coeffs.keys().map(|m| m.order()).max().unwrap_or(0)
    }

    pub fn add(&self, other: &CDiffOp) -> CDiffOp {
        let mut out = self.clone();
        for (m, a) in other.coeffs() {
            out.add_coeff(m.clone(), a.clone());
        }
        out
    }

    pub fn sub(&self, other: &CDiffOp) -> CDiffOp {
        let mut out = self.clone();
        for (m, a) in other.coeffs() {
            out.add_coeff(m.clone(), a.neg());
        }
        out
    }

    pub fn scale(&self, c: &BigRational) -> CDiffOp {
        let mut out = CDiffOp::zero();
        if c.is_zero() {
            return out;
        }
        for (m, a) in self.coeffs() {
            out.add_coeff(m.clone(), a.scale(c));
        }
        out
    }

    /// Rewrites every coefficient through `f`, dropping vanished entries.
    pub fn map_coeffs(&self, f: impl Fn(&DiffPoly) -> DiffPoly) -> CDiffOp {
        let mut out = CDiffOp::zero();
        for (m, a) in self.coeffs() {
            out.add_coeff(m.clone(), f(a));
        }
        out
    }

    /// `Σ_σ a_σ·D_σ(e)`, coefficients multiplying from the left.
    pub fn apply(&self, e: &DiffPoly) -> DiffPoly {
        let mut out = DiffPoly::zero();
        for (sigma, a) in self.coeffs() {
            out = out.add(&a.mul(&e.total_derivative_multi(sigma)));
        }
        out
    }

    /// Operator composition `self ∘ other` via the Leibniz rule:
    /// `a·D_σ ∘ b·D_ρ = a·Σ_{μ≤σ} C(σ,μ)·D_μ(b)·D_{σ−μ+ρ}`.
    pub fn compose(&self, other: &CDiffOp) -> CDiffOp {
        let mut out = CDiffOp::zero();
        for (sigma, a) in self.coeffs() {
            for (rho, b) in other.coeffs() {
                for mu in sigma.sub_indices() {
                    let mult = q(sigma.binomial(&mu) as i64);
                    let rest = sigma.checked_sub(&mu).expect("μ ≤ σ");
                    let coeff = a.mul(&b.total_derivative_multi(&mu)).scale(&mult);
                    out.add_coeff(rest.add(rho), coeff);
                }
            }
        }
        out
    }

    /// Formal adjoint: `(a·D_σ)* = (−1)^{|σ|}·D_σ ∘ a`, expanded back into
    /// normal form with coefficients on the left.
    pub fn adjoint(&self) -> Result<CDiffOp, OpError> {
        let mut out = CDiffOp::zero();
        for (sigma, a) in self.coeffs() {
            if !a.is_even() {
                return Err(OpError::OddCoefficient);
            }
            let sign = if sigma.order() % 2 == 1 { q(-1) } else { q(1) };
            for rho in sigma.sub_indices() {
                let mult = q(sigma.binomial(&rho) as i64);
                let rest = sigma.checked_sub(&rho).expect("ρ ≤ σ");
                out.add_coeff(rest, a.total_derivative_multi(&rho).scale(&(&sign * mult)));
            }
        }
        Ok(out)
    }

    /// Reads a p-linear expression `Σ_σ a_σ·p_σ` as the operator
    /// `Σ_σ a_σ·D_σ`, so that applying it to `p` gives the expression back.
    pub fn from_p_linear(e: &DiffPoly) -> Result<CDiffOp, OpError> {
        let mut out = CDiffOp::zero();
        for (mono, c) in e.terms() {
            if mono.p_degree() != 1 {
                return Err(OpError::NotPLinear);
            }
            let crate::atom::Atom::JetP(sigma) = &mono.odds[0] else {
                unreachable!("odd atoms are p-jets")
            };
            let mut coeff = DiffPoly::zero();
            coeff.add_raw_term(c.clone(), mono.evens.clone(), vec![]);
            out.add_coeff(sigma.clone(), coeff);
        }
        Ok(out)
    }
}

/// `∇(q, p) = Σ_τ D_τ(q)·A_τ(p)`: slot-1 structure kept explicit, slot 2
/// kept applied — each summand stores the value `A_τ(p)` at the canonical
/// odd argument, since every use evaluates the second slot at `p`.
#[derive(Clone, PartialEq, Eq, Default, Debug)]
pub struct BiDiffOp {
    vals: BTreeMap<MultiIndex, DiffPoly>,
}

impl BiDiffOp {
    pub fn zero() -> Self {
        BiDiffOp::default()
    }

    pub fn is_zero(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn add_value(&mut self, tau: MultiIndex, v: DiffPoly) {
        if v.is_zero() {
            return;
        }
        match self.vals.entry(tau) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(v);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().add(&v);
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    /// The applied slot-2 value `A_τ(p)`.
    pub fn value(&self, tau: &MultiIndex) -> DiffPoly {
        self.vals.get(tau).cloned().unwrap_or_else(DiffPoly::zero)
    }

    pub fn values(&self) -> impl Iterator<Item = (&MultiIndex, &DiffPoly)> {
        self.vals.iter()
    }

    /// `Σ_τ D_τ(q)·A_τ(p)`, the slot-1 factor on the left.
    pub fn apply_first(&self, q_arg: &DiffPoly) -> DiffPoly {
        let mut out = DiffPoly::zero();
        for (tau, a_tau) in self.values() {
            out = out.add(&q_arg.total_derivative_multi(tau).mul(a_tau));
        }
        out
    }

    /// Formal adjoint in the first slot:
    /// `∇^{*1}(q, p) = Σ_τ (−1)^{|τ|}·D_τ(q·A_τ(p))`. The slot-2 value is
    /// carried along inside the derivative without ever being transposed
    /// past `q`, so no signs appear beyond the graded products themselves;
    /// expanded by the Leibniz rule this gives
    /// `A'_μ(p) = Σ_{τ≥μ} (−1)^{|τ|}·C(τ,μ)·D_{τ−μ}(A_τ(p))`.
    pub fn adjoint_first(&self) -> BiDiffOp {
        let mut out = BiDiffOp::zero();
        for (tau, a_tau) in self.values() {
            let sign = if tau.order() % 2 == 1 { q(-1) } else { q(1) };
            for mu in tau.sub_indices() {
                let mult = &sign * q(tau.binomial(&mu) as i64);
                let rest = tau.checked_sub(&mu).expect("μ ≤ τ");
                out.add_value(mu, a_tau.total_derivative_multi(&rest).scale(&mult));
            }
        }
        out
    }
}
