//! Variational bivectors on the cotangent equation and their Schouten
//! brackets.
//!
//! A p-linear expression `H(p) = Σ a_σ·p_σ` is a bivector for an equation
//! `F = 0` when
//!
//! 1. `ℓ_F(H(p))` vanishes on the cotangent equation, and
//! 2. `ℓ_F(H(p)) − H^*(ℓ_F^*(p))` factors as `Σ_τ A_τ·D_τ(F)` with the odd
//!    variables kept free.
//!
//! The factorization `∇` yields the odd component of the generating section,
//! `φ = (H(p), −½·∇^{*1}(p,p))`, and the bracket of two bivectors is computed
//! by letting each generating section act as an evolutionary derivation on
//! the other's even component.

use crate::atom::Atom;
use crate::equation::{linearization, EquationError, EquationModel, Shell};
use crate::multiindex::MultiIndex;
use crate::ops::{BiDiffOp, CDiffOp, OpError};
use crate::poly::{qr, DiffPoly};

/// A named bivector candidate, kept both as the applied value `H(p)` and as
/// the operator `Σ a_σ·D_σ` it induces.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Bivector {
    pub name: String,
    pub h_u: DiffPoly,
    pub op: CDiffOp,
}

impl Bivector {
    /// Requires `h_u` to be linear in the odd variables.
    pub fn new(name: &str, h_u: DiffPoly) -> Result<Self, OpError> {
        let op = CDiffOp::from_p_linear(&h_u)?;
        Ok(Bivector {
            name: name.to_string(),
            h_u,
            op,
        })
    }

    /// Highest derivative order carried by an odd slot.
    pub fn order(&self) -> usize {
        self.op.order()
    }
}

/// Why a candidate is not a bivector.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Violation {
    /// `ℓ_F(H(p))` left a residual on the cotangent equation.
    Condition2 { residual: DiffPoly },
    /// `ℓ_F(H(p)) − H^*(ℓ_F^*(p))` does not factor through the equation.
    Condition3 { residual: DiffPoly },
    /// The factorization would need the equation quadratically.
    Condition3Nonlinear,
}

/// Outcome of the bivector check; failing a condition is a value, not an
/// error.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum CheckReport {
    Pass { nabla: BiDiffOp },
    Fail(Violation),
}

#[derive(thiserror::Error, Clone, PartialEq, Eq, Debug)]
pub enum SchoutenError {
    #[error(transparent)]
    Equation(#[from] EquationError),
    #[error("{name} is not a bivector: {violation:?}")]
    NotBivector { name: String, violation: Violation },
}

/// `ℓ_F(H(p)) − H^*(ℓ_F^*(p))`, the defect whose factorization through the
/// equation is demanded by the bivector condition. The second slot carries
/// the adjoint linearization: the condition states that `ℓ_F∘H` is
/// self-adjoint on the equation, and `(ℓ_F∘H)^* = H^*∘ℓ_F^*`. For
/// even-order linearizations the two agree; for odd-order ones (such as
/// `u_xyz`) the sign matters.
pub fn bivector_defect(b: &Bivector, eq: &EquationModel) -> DiffPoly {
    let ell = linearization(eq.f());
    let lp = ell
        .adjoint()
        .expect("a linearization has even, p-free coefficients")
        .apply(&DiffPoly::jet_p(MultiIndex::zero()));
    let h_adj = b
        .op
        .adjoint()
        .expect("a p-linear expression has even, p-free coefficients");
    ell.apply(&b.h_u).sub(&h_adj.apply(&lp))
}

/// Checks both bivector conditions, returning the factorization `∇` with
/// `ℓ_F(H(p)) − H^*(ℓ_F^*(p)) = Σ_τ D_τ(F)·A_τ(p)` on success.
pub fn check_bivector(b: &Bivector, eq: &EquationModel) -> Result<CheckReport, EquationError> {
    let ell = linearization(eq.f());
    let residual = eq.reduce(&ell.apply(&b.h_u), Shell::Cotangent)?;
    if !residual.is_zero() {
        return Ok(CheckReport::Fail(Violation::Condition2 { residual }));
    }
    match eq.decompose_on_f(&bivector_defect(b, eq)) {
        Ok(nabla) => Ok(CheckReport::Pass { nabla }),
        Err(EquationError::NonVanishing(residual)) => {
            Ok(CheckReport::Fail(Violation::Condition3 { residual }))
        }
        Err(EquationError::NonlinearInF) => Ok(CheckReport::Fail(Violation::Condition3Nonlinear)),
        Err(e) => Err(e),
    }
}

/// The generating section `φ = (φ_u, φ_p)` of a bivector.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GeneratingSection {
    pub phi_u: DiffPoly,
    pub phi_p: DiffPoly,
}

/// `φ = (H(p), −½·∇^{*1}(p,p))`, the odd part reduced on the cotangent
/// equation.
pub fn generating_section(
    b: &Bivector,
    eq: &EquationModel,
) -> Result<GeneratingSection, SchoutenError> {
    match check_bivector(b, eq)? {
        CheckReport::Pass { nabla } => {
            let p0 = DiffPoly::jet_p(MultiIndex::zero());
            let raw = nabla.adjoint_first().apply_first(&p0).scale(&qr(-1, 2));
            let phi_p = eq.reduce(&raw, Shell::Cotangent)?;
            Ok(GeneratingSection {
                phi_u: b.h_u.clone(),
                phi_p,
            })
        }
        CheckReport::Fail(violation) => Err(SchoutenError::NotBivector {
            name: b.name.clone(),
            violation,
        }),
    }
}

/// The evolutionary derivation attached to a section:
/// `Ev_φ(e) = Σ_σ D_σ(φ_u)·∂e/∂u_σ + Σ_σ D_σ(φ_p)·∂e/∂p_σ`,
/// with left partial derivatives and the coefficients multiplying from the
/// left. The sums run over every derivative `e` actually depends on,
/// including those reached only through function-symbol arguments.
pub fn evolutionary_apply(phi: &GeneratingSection, e: &DiffPoly) -> DiffPoly {
    let mut out = DiffPoly::zero();
    for sigma in e.u_dependencies() {
        let part = e.partial(&Atom::JetU(sigma.clone()));
        out = out.add(&phi.phi_u.total_derivative_multi(&sigma).mul(&part));
    }
    for sigma in e.p_dependencies() {
        let part = e.partial(&Atom::JetP(sigma.clone()));
        out = out.add(&phi.phi_p.total_derivative_multi(&sigma).mul(&part));
    }
    out
}

/// The Schouten bracket `⟦A, B⟧ = Ev_{φ(A)}(B(p)) + Ev_{φ(B)}(A(p))`,
/// reduced on the cotangent equation.
pub fn schouten_bracket(
    a: &Bivector,
    b: &Bivector,
    eq: &EquationModel,
) -> Result<DiffPoly, SchoutenError> {
    let phi_a = generating_section(a, eq)?;
    let phi_b = generating_section(b, eq)?;
    let raw = evolutionary_apply(&phi_a, &b.h_u).add(&evolutionary_apply(&phi_b, &a.h_u));
    Ok(eq.reduce(&raw, Shell::Cotangent)?)
}

/// Whether `⟦B, B⟧ = 0`; the witness is the reduced bracket itself.
pub fn is_poisson(b: &Bivector, eq: &EquationModel) -> Result<(bool, DiffPoly), SchoutenError> {
    let w = schouten_bracket(b, b, eq)?;
    Ok((w.is_zero(), w))
}

/// Whether `⟦A, B⟧ = 0` for two (typically Poisson) bivectors.
pub fn are_compatible(
    a: &Bivector,
    b: &Bivector,
    eq: &EquationModel,
) -> Result<(bool, DiffPoly), SchoutenError> {
    let w = schouten_bracket(a, b, eq)?;
    Ok((w.is_zero(), w))
}

/// Whether `φ` is a symmetry of the cotangent equation: both `Ev_φ(F)` and
/// `Ev_φ` of the odd relation must vanish on it. Returns the two residuals.
pub fn is_cotangent_symmetry(
    phi: &GeneratingSection,
    eq: &EquationModel,
) -> Result<(bool, DiffPoly, DiffPoly), EquationError> {
    let r1 = eq.reduce(&evolutionary_apply(phi, eq.f()), Shell::Cotangent)?;
    let r2 = eq.reduce(
        &evolutionary_apply(phi, eq.cotangent_relation()),
        Shell::Cotangent,
    )?;
    Ok((r1.is_zero() && r2.is_zero(), r1, r2))
}
