//! Exact linear search for bivectors over a coefficient ansatz.
//!
//! The ansatz spans expressions `Σ c_k·m_k·p_{σ_k}` where the odd slots run
//! over all derivatives up to a cutoff order (minus the lead family, which
//! reduces away on the cotangent equation) and the `m_k` are monomials of
//! bounded degree in declared coefficient variables. Both bivector
//! conditions are linear in the unknowns `c_k`, so they become one sparse
//! rational matrix whose nullspace is exactly the bivector space inside the
//! ansatz.

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use std::collections::BTreeMap;

use crate::atom::Atom;
use crate::equation::{linearization, EquationError, EquationModel};
use crate::equation::Shell;
use crate::multiindex::MultiIndex;
use crate::ops::CDiffOp;
use crate::poly::{q, DiffPoly, Monomial};

#[derive(thiserror::Error, Clone, PartialEq, Eq, Debug)]
pub enum SearchError {
    #[error("instantiate the symbolic constant {0} before searching")]
    SymbolicConstant(String),
    #[error("instantiate the function symbol {0} before searching")]
    OpaqueSymbol(String),
    #[error(transparent)]
    Equation(#[from] EquationError),
}

/// The span searched: odd slots × coefficient monomials.
#[derive(Clone, Debug)]
pub struct Ansatz {
    slots: Vec<MultiIndex>,
    monomials: Vec<Vec<(Atom, u32)>>,
}

impl Ansatz {
    /// Slots are every `p_σ` with `|σ| ≤ max_jet_order` over `n_vars`
    /// variables, excluding the lead family; monomials run over `vars` up
    /// to total degree `degree`.
    pub fn new(
        eq: &EquationModel,
        n_vars: usize,
        max_jet_order: usize,
        vars: &[Atom],
        degree: u32,
    ) -> Self {
        let mut slots: Vec<MultiIndex> = multi_indices(n_vars, max_jet_order)
            .into_iter()
            .filter(|s| !eq.lead().divides(s))
            .collect();
        slots.sort();
        let mut monomials = Vec::new();
        let mut exps = vec![0u32; vars.len()];
        collect_monomials(vars, degree, 0, &mut exps, &mut monomials);
        Ansatz { slots, monomials }
    }

    pub fn slots(&self) -> &[MultiIndex] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len() * self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The basis expression `m_k·p_{σ_k}` of one unknown.
    pub fn candidate(&self, k: usize) -> DiffPoly {
        let (slot, mono) = (k / self.monomials.len(), k % self.monomials.len());
        let mut e = DiffPoly::zero();
        e.add_raw_term(
            q(1),
            self.monomials[mono].clone(),
            vec![Atom::JetP(self.slots[slot].clone())],
        );
        e
    }

    /// Assembles an ansatz member from a coefficient vector.
    pub fn combine(&self, v: &[BigRational]) -> DiffPoly {
        let mut e = DiffPoly::zero();
        for (k, c) in v.iter().enumerate() {
            if !c.is_zero() {
                e = e.add(&self.candidate(k).scale(c));
            }
        }
        e
    }

    /// Writes a p-linear expression as a coefficient vector over the
    /// unknowns; `None` when any term falls outside the span.
    pub fn coordinates(&self, e: &DiffPoly) -> Option<Vec<BigRational>> {
        let mut v = vec![BigRational::zero(); self.len()];
        for (mono, c) in e.terms() {
            if mono.odds.len() != 1 {
                return None;
            }
            let Atom::JetP(sigma) = &mono.odds[0] else {
                return None;
            };
            let slot = self.slots.iter().position(|s| s == sigma)?;
            let m = self.monomials.iter().position(|m| *m == mono.evens)?;
            v[slot * self.monomials.len() + m] = c.clone();
        }
        Some(v)
    }
}

/// All multi-indices of order at most `max` over `n_vars` variables.
fn multi_indices(n_vars: usize, max: usize) -> Vec<MultiIndex> {
    let mut out = vec![MultiIndex::zero()];
    for _ in 0..max {
        let mut next = Vec::new();
        for m in &out {
            for v in 0..n_vars {
                next.push(m.bump(v));
            }
        }
        out.append(&mut next);
        out.sort();
        out.dedup();
    }
    out
}

fn collect_monomials(
    vars: &[Atom],
    remaining: u32,
    i: usize,
    exps: &mut Vec<u32>,
    out: &mut Vec<Vec<(Atom, u32)>>,
) {
    if i == vars.len() {
        let mut mono: Vec<(Atom, u32)> = vars
            .iter()
            .cloned()
            .zip(exps.iter().copied())
            .filter(|(_, k)| *k > 0)
            .collect();
        mono.sort_by(|a, b| a.0.cmp(&b.0));
        out.push(mono);
        return;
    }
    for k in 0..=remaining {
        exps[i] = k;
        collect_monomials(vars, remaining - k, i + 1, exps, out);
    }
    exps[i] = 0;
}

/// One sparse homogeneous equation over the unknowns.
pub type Row = BTreeMap<usize, BigRational>;

/// The assembled linear conditions, with a provenance label per row.
#[derive(Clone, Debug)]
pub struct DeterminingSystem {
    pub unknowns: usize,
    pub rows: Vec<(&'static str, Row)>,
}

impl DeterminingSystem {
    /// Collects, for every unknown, the reduced first condition and the
    /// marker normal form of the defect; each monomial that appears across
    /// the ansatz becomes one row.
    pub fn assemble(ansatz: &Ansatz, eq: &EquationModel) -> Result<Self, SearchError> {
        for atom in eq.f().atoms() {
            match atom {
                Atom::Const(name) => {
                    return Err(SearchError::SymbolicConstant(name.to_string()))
                }
                Atom::FunDeriv { sym, .. } => {
                    return Err(SearchError::OpaqueSymbol(sym.name.to_string()))
                }
                _ => {}
            }
        }
        let ell = linearization(eq.f());
        let lp = ell
            .adjoint()
            .expect("a linearization has even, p-free coefficients")
            .apply(&DiffPoly::jet_p(MultiIndex::zero()));
        let mut shell: BTreeMap<Monomial, Row> = BTreeMap::new();
        let mut residual: BTreeMap<Monomial, Row> = BTreeMap::new();
        let mut higher: BTreeMap<Monomial, Row> = BTreeMap::new();
        for k in 0..ansatz.len() {
            let cand = ansatz.candidate(k);
            let lh = ell.apply(&cand);
            for (mono, c) in eq.reduce(&lh, Shell::Cotangent)?.terms() {
                shell.entry(mono.clone()).or_default().insert(k, c.clone());
            }
            let adj = CDiffOp::from_p_linear(&cand)
                .expect("ansatz candidates are p-linear")
                .adjoint()
                .expect("ansatz coefficients are even");
            let defect = lh.sub(&adj.apply(&lp));
            let split = eq.tag_split(&defect)?;
            for (mono, c) in split.residual.terms() {
                residual.entry(mono.clone()).or_default().insert(k, c.clone());
            }
            for (mono, c) in split.higher.terms() {
                higher.entry(mono.clone()).or_default().insert(k, c.clone());
            }
        }
        let mut rows = Vec::new();
        rows.extend(shell.into_values().map(|r| ("shell", r)));
        rows.extend(residual.into_values().map(|r| ("defect", r)));
        rows.extend(higher.into_values().map(|r| ("defect-nonlinear", r)));
        Ok(DeterminingSystem {
            unknowns: ansatz.len(),
            rows,
        })
    }

    /// Whether a coefficient vector satisfies every condition — i.e. lies
    /// in the solution space, whichever basis was extracted for it.
    pub fn satisfied_by(&self, v: &[BigRational]) -> bool {
        self.rows.iter().all(|(_, row)| {
            row.iter()
                .fold(BigRational::zero(), |acc, (k, c)| acc + c * &v[*k])
                .is_zero()
        })
    }

    /// The exact nullspace, one normalized vector per free column: integer
    /// entries with content one, first nonzero entry positive, ordered by
    /// their free column.
    pub fn nullspace(&self) -> Vec<Vec<BigRational>> {
        // Reduced row echelon form over ℚ, kept fully reduced as rows join.
        let mut pivots: BTreeMap<usize, Row> = BTreeMap::new();
        for (_, row) in &self.rows {
            let mut row = row.clone();
            loop {
                row.retain(|_, c| !c.is_zero());
                let Some((&col, coeff)) = row.first_key_value() else {
                    break;
                };
                if let Some(prow) = pivots.get(&col) {
                    let factor = coeff.clone();
                    for (c, pc) in prow {
                        let upd = row.entry(*c).or_insert_with(BigRational::zero);
                        *upd -= &factor * pc;
                    }
                } else {
                    let lead = coeff.clone();
                    for c in row.values_mut() {
                        *c /= &lead;
                    }
                    // Clear the row's tail at existing pivot columns too, so
                    // that no pivot row ever carries another pivot's column;
                    // the extraction below reads each row as one equation in
                    // its pivot and the free columns only.
                    let tail: Vec<usize> = row
                        .keys()
                        .filter(|c| **c != col && pivots.contains_key(c))
                        .copied()
                        .collect();
                    for pcol in tail {
                        let f = row[&pcol].clone();
                        if f.is_zero() {
                            continue;
                        }
                        for (c, rc) in &pivots[&pcol] {
                            let upd = row.entry(*c).or_insert_with(BigRational::zero);
                            *upd -= &f * rc;
                        }
                    }
                    row.retain(|_, c| !c.is_zero());
                    for prow in pivots.values_mut() {
                        if let Some(f) = prow.get(&col).cloned() {
                            if f.is_zero() {
                                continue;
                            }
                            for (c, rc) in &row {
                                let upd = prow.entry(*c).or_insert_with(BigRational::zero);
                                *upd -= &f * rc;
                            }
                            prow.retain(|_, c| !c.is_zero());
                        }
                    }
                    pivots.insert(col, row);
                    break;
                }
            }
        }
        let mut basis = Vec::new();
        for f in 0..self.unknowns {
            if pivots.contains_key(&f) {
                continue;
            }
            let mut v = vec![BigRational::zero(); self.unknowns];
            v[f] = q(1);
            for (pc, prow) in &pivots {
                if let Some(c) = prow.get(&f) {
                    v[*pc] = -c.clone();
                }
            }
            normalize(&mut v);
            basis.push(v);
        }
        basis
    }
}

/// Scales to integer entries with content one and positive leading sign.
fn normalize(v: &mut [BigRational]) {
    use num_bigint::BigInt;
    use num_integer::Integer;
    let mut denom_lcm = BigInt::from(1);
    for c in v.iter() {
        if !c.is_zero() {
            denom_lcm = denom_lcm.lcm(c.denom());
        }
    }
    let mut content = BigInt::zero();
    for c in v.iter_mut() {
        *c *= BigRational::from_integer(denom_lcm.clone());
        content = content.gcd(c.numer());
    }
    if !content.is_zero() {
        let div = BigRational::from_integer(content);
        for c in v.iter_mut() {
            *c /= &div;
        }
    }
    if let Some(first) = v.iter().find(|c| !c.is_zero()) {
        if first.is_negative() {
            for c in v.iter_mut() {
                *c = -c.clone();
            }
        }
    }
}

/// Full search: assemble the system and return its nullspace basis.
pub struct SearchOutcome {
    pub ansatz: Ansatz,
    pub system: DeterminingSystem,
    pub basis: Vec<Vec<BigRational>>,
}

pub fn search(
    eq: &EquationModel,
    n_vars: usize,
    max_jet_order: usize,
    vars: &[Atom],
    degree: u32,
) -> Result<SearchOutcome, SearchError> {
    let ansatz = Ansatz::new(eq, n_vars, max_jet_order, vars, degree);
    let system = DeterminingSystem::assemble(&ansatz, eq)?;
    let basis = system.nullspace();
    Ok(SearchOutcome {
        ansatz,
        system,
        basis,
    })
}
