//! Differential polynomials with exact rational coefficients.
//!
//! A `DiffPoly` is a finite sum of terms `c · e₁^{k₁}⋯e_r^{k_r} · o₁⋯o_s`
//! where the `e_i` are even atoms, the `o_j` are distinct odd atoms (p-jets)
//! and `c` is a rational number. The odd part anticommutes:
//! `p_σ p_τ = −p_τ p_σ`, so each stored term keeps its odd atoms strictly
//! sorted with the permutation sign absorbed into the coefficient, and a
//! repeated odd atom kills the term. Partial derivatives along odd atoms act
//! from the left.

use crate::atom::{Atom, FunSym};
use crate::multiindex::{MultiIndex, VarId};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Shorthand for an exact rational from an integer.
pub fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Shorthand for an exact rational `n/d`.
pub fn qr(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// The coefficient-free part of a term.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Monomial {
    /// Even atoms with positive exponents, sorted by the canonical atom order.
    pub evens: Vec<(Atom, u32)>,
    /// Strictly increasing odd atoms.
    pub odds: Vec<Atom>,
}

impl Monomial {
    pub fn unit() -> Self {
        Monomial::default()
    }

    /// Number of odd factors.
    pub fn p_degree(&self) -> usize {
        self.odds.len()
    }

    /// Highest jet order among the odd factors, if any.
    pub fn max_p_order(&self) -> Option<usize> {
        self.odds
            .iter()
            .map(|a| match a {
                Atom::JetP(m) => m.order(),
                _ => unreachable!("odd atoms are p-jets"),
            })
            .max()
    }
}

/// Sorts odd atoms in place; returns the permutation sign, or `None` when a
/// duplicate makes the product vanish.
fn sort_odds(odds: &mut [Atom]) -> Option<bool> {
    let mut negative = false;
    for i in 1..odds.len() {
        let mut j = i;
        while j > 0 && odds[j - 1] > odds[j] {
            odds.swap(j - 1, j);
            negative = !negative;
            j -= 1;
        }
    }
    if odds.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some(negative)
}

/// Merges an unsorted even factor list, combining repeats.
fn sort_evens(mut evens: Vec<(Atom, u32)>) -> Vec<(Atom, u32)> {
    evens.retain(|&(_, k)| k > 0);
    evens.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out: Vec<(Atom, u32)> = Vec::with_capacity(evens.len());
    for (a, k) in evens {
        match out.last_mut() {
            Some((b, n)) if *b == a => *n += k,
            _ => out.push((a, k)),
        }
    }
    out
}

/// A differential polynomial in canonical form: a map from monomials to
/// nonzero rational coefficients.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct DiffPoly {
    terms: BTreeMap<Monomial, BigRational>,
}

impl DiffPoly {
    pub fn zero() -> Self {
        DiffPoly::default()
    }

    pub fn one() -> Self {
        DiffPoly::constant(q(1))
    }

    pub fn constant(c: BigRational) -> Self {
        let mut p = DiffPoly::zero();
        p.add_term(Monomial::unit(), c);
        p
    }

    pub fn atom(a: Atom) -> Self {
        let mut p = DiffPoly::zero();
        if a.is_odd() {
            p.add_term(
                Monomial {
                    evens: vec![],
                    odds: vec![a],
                },
                q(1),
            );
        } else {
            p.add_term(
                Monomial {
                    evens: vec![(a, 1)],
                    odds: vec![],
                },
                q(1),
            );
        }
        p
    }

    pub fn var(v: VarId) -> Self {
        DiffPoly::atom(Atom::Indep(v))
    }

    pub fn jet_u(m: MultiIndex) -> Self {
        DiffPoly::atom(Atom::JetU(m))
    }

    pub fn jet_p(m: MultiIndex) -> Self {
        DiffPoly::atom(Atom::JetP(m))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The value of a constant polynomial; `None` when any variable occurs.
    pub fn rational_value(&self) -> Option<BigRational> {
        if self.terms.is_empty() {
            return Some(BigRational::zero());
        }
        if self.terms.len() == 1 {
            let (mono, c) = self.terms.iter().next().unwrap();
            if *mono == Monomial::unit() {
                return Some(c.clone());
            }
        }
        None
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    /// Adds `c·mono` into the polynomial, dropping the entry if it cancels.
    pub fn add_term(&mut self, mono: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(mono);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get() + &c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    /// Normalizes raw factors into a term and adds it: evens are merged,
    /// odds sorted with the sign folded into the coefficient.
    pub fn add_raw_term(&mut self, c: BigRational, evens: Vec<(Atom, u32)>, odds: Vec<Atom>) {
        if c.is_zero() {
            return;
        }
        debug_assert!(evens.iter().all(|(a, _)| !a.is_odd()));
        debug_assert!(odds.iter().all(|a| a.is_odd()));
        let mut odds = odds;
        let Some(negative) = sort_odds(&mut odds) else {
            return;
        };
        let evens = sort_evens(evens);
        let c = if negative { -c } else { c };
        self.add_term(Monomial { evens, odds }, c);
    }

    pub fn add(&self, other: &DiffPoly) -> DiffPoly {
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &DiffPoly) -> DiffPoly {
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> DiffPoly {
        let mut out = DiffPoly::zero();
        for (m, c) in self.terms() {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn scale(&self, c: &BigRational) -> DiffPoly {
        if c.is_zero() {
            return DiffPoly::zero();
        }
        let mut out = DiffPoly::zero();
        for (m, k) in self.terms() {
            out.add_term(m.clone(), k * c);
        }
        out
    }

    /// Graded product. The sign of each term pair comes from sorting the
    /// concatenated odd factor lists.
    pub fn mul(&self, other: &DiffPoly) -> DiffPoly {
        let mut out = DiffPoly::zero();
        for (m1, c1) in self.terms() {
            for (m2, c2) in other.terms() {
                let mut evens = m1.evens.clone();
                evens.extend(m2.evens.iter().cloned());
                let mut odds = m1.odds.clone();
                odds.extend(m2.odds.iter().cloned());
                out.add_raw_term(c1 * c2, evens, odds);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> DiffPoly {
        let mut out = DiffPoly::one();
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Largest odd degree among the terms (0 for the zero polynomial).
    pub fn max_p_degree(&self) -> usize {
        self.terms.keys().map(|m| m.p_degree()).max().unwrap_or(0)
    }

    /// Whether every term has odd degree exactly one.
    pub fn is_p_linear(&self) -> bool {
        !self.is_zero() && self.terms.keys().all(|m| m.p_degree() == 1)
    }

    /// Whether no term carries an odd factor.
    pub fn is_p_free(&self) -> bool {
        self.terms.keys().all(|m| m.p_degree() == 0)
    }

    /// Whether every term has even odd-degree (a parity-even polynomial).
    pub fn is_even(&self) -> bool {
        self.terms.keys().all(|m| m.p_degree() % 2 == 0)
    }

    /// Keeps the terms whose odd factors all have jet order ≤ `k`.
    pub fn p_truncate(&self, k: usize) -> DiffPoly {
        self.filter_terms(|m| m.max_p_order().unwrap_or(0) <= k)
    }

    /// The terms dropped by `p_truncate`: some odd factor has order > `k`.
    pub fn p_above(&self, k: usize) -> DiffPoly {
        self.filter_terms(|m| m.max_p_order().unwrap_or(0) > k)
    }

    pub fn filter_terms(&self, keep: impl Fn(&Monomial) -> bool) -> DiffPoly {
        let mut out = DiffPoly::zero();
        for (m, c) in self.terms() {
            if keep(m) {
                out.add_term(m.clone(), c.clone());
            }
        }
        out
    }

    /// Iterates every atom occurring in the polynomial.
    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.terms.keys().flat_map(|m| {
            m.evens
                .iter()
                .map(|(a, _)| a)
                .chain(m.odds.iter())
        })
    }

    /// u-jet indices the polynomial can depend on: explicit `u_σ` atoms plus
    /// the u-jet arguments of every function symbol present.
    pub fn u_dependencies(&self) -> BTreeSet<MultiIndex> {
        let mut out = BTreeSet::new();
        for a in self.atoms() {
            match a {
                Atom::JetU(m) => {
                    out.insert(m.clone());
                }
                Atom::FunDeriv { sym, .. } => {
                    for arg in &sym.args {
                        if let Atom::JetU(m) = arg {
                            out.insert(m.clone());
                        }
                    }
                }
                _ => {}
            }
        }
        out
    }

    /// p-jet indices occurring in the polynomial.
    pub fn p_dependencies(&self) -> BTreeSet<MultiIndex> {
        let mut out = BTreeSet::new();
        for a in self.atoms() {
            if let Atom::JetP(m) = a {
                out.insert(m.clone());
            }
        }
        out
    }

    /// Left partial derivative along an atom.
    ///
    /// Even atoms follow the usual power rule; a function-derivative atom is
    /// differentiated whenever the atom is one of its declared arguments. An
    /// odd atom at position `j` of a term's odd factor list contributes the
    /// sign `(−1)^j` (the factors to its left are jumped over).
    pub fn partial(&self, a: &Atom) -> DiffPoly {
        debug_assert!(
            !matches!(a, Atom::FunDeriv { .. } | Atom::Tag(_)),
            "partial derivatives are taken along coordinates, not symbols"
        );
        let mut out = DiffPoly::zero();
        for (mono, c) in self.terms() {
            if a.is_odd() {
                if let Some(j) = mono.odds.iter().position(|o| o == a) {
                    let mut odds = mono.odds.clone();
                    odds.remove(j);
                    let c = if j % 2 == 1 { -c.clone() } else { c.clone() };
                    out.add_term(
                        Monomial {
                            evens: mono.evens.clone(),
                            odds,
                        },
                        c,
                    );
                }
                continue;
            }
            for (idx, (b, k)) in mono.evens.iter().enumerate() {
                // Explicit occurrence: k·b^{k−1}·(rest).
                if b == a {
                    let mut evens = mono.evens.clone();
                    evens[idx].1 -= 1;
                    out.add_raw_term(c * q(*k as i64), evens, mono.odds.clone());
                    continue;
                }
                // Chain rule through an opaque symbol's declared arguments.
                if let Atom::FunDeriv { sym, partials } = b {
                    if let Some(j) = sym.arg_position(a) {
                        let mut evens = mono.evens.clone();
                        evens[idx].1 -= 1;
                        evens.push((Atom::fun_bump(sym, partials, j), 1));
                        out.add_raw_term(c * q(*k as i64), evens, mono.odds.clone());
                    }
                }
            }
        }
        out
    }

    /// Total derivative of a single atom along variable `v`.
    fn atom_total_derivative(a: &Atom, v: VarId) -> DiffPoly {
        match a {
            Atom::Indep(w) => {
                if *w == v {
                    DiffPoly::one()
                } else {
                    DiffPoly::zero()
                }
            }
            Atom::Const(_) => DiffPoly::zero(),
            Atom::JetU(m) => DiffPoly::jet_u(m.bump(v)),
            Atom::JetP(m) => DiffPoly::jet_p(m.bump(v)),
            Atom::Tag(_) => {
                debug_assert!(false, "tags never meet a total derivative");
                DiffPoly::zero()
            }
            Atom::FunDeriv { sym, partials } => {
                // Chain rule over the declared arguments.
                let mut out = DiffPoly::zero();
                for (j, arg) in sym.args.iter().enumerate() {
                    let darg = DiffPoly::atom_total_derivative(arg, v);
                    if darg.is_zero() {
                        continue;
                    }
                    let bumped = DiffPoly::atom(Atom::fun_bump(sym, partials, j));
                    out = out.add(&bumped.mul(&darg));
                }
                out
            }
        }
    }

    /// Total derivative `D_v`, the evolution of every atom by the chain rule.
    pub fn total_derivative(&self, v: VarId) -> DiffPoly {
        let mut out = DiffPoly::zero();
        for (mono, c) in self.terms() {
            for (idx, (b, k)) in mono.evens.iter().enumerate() {
                let db = DiffPoly::atom_total_derivative(b, v);
                if db.is_zero() {
                    continue;
                }
                let mut evens = mono.evens.clone();
                evens[idx].1 -= 1;
                let mut rest = DiffPoly::zero();
                rest.add_raw_term(c * q(*k as i64), evens, mono.odds.clone());
                out = out.add(&rest.mul(&db));
            }
            for j in 0..mono.odds.len() {
                // D_v is even: replacing o_j in place costs no sign.
                let Atom::JetP(m) = &mono.odds[j] else {
                    unreachable!("odd atoms are p-jets")
                };
                let mut odds = mono.odds.clone();
                odds[j] = Atom::JetP(m.bump(v));
                out.add_raw_term(c.clone(), mono.evens.clone(), odds);
            }
        }
        out
    }

    /// Iterated total derivative `D_σ`.
    pub fn total_derivative_multi(&self, sigma: &MultiIndex) -> DiffPoly {
        let mut out = self.clone();
        for (v, k) in sigma.iter() {
            for _ in 0..k {
                out = out.total_derivative(v);
            }
        }
        out
    }
}

/// Errors raised by capture-free substitution.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum SubstituteError {
    #[error("parity mismatch: odd atom `{0}` needs an odd degree-1 replacement")]
    OddBinding(String),
    #[error("parity mismatch: even atom `{0}` needs a parity-even replacement")]
    EvenBinding(String),
    #[error("function symbol `{0}` needs a p-free replacement")]
    FunctionBinding(String),
}

/// Simultaneous replacements: explicit atoms and whole function symbols.
///
/// Replacing a function symbol rewrites each of its derivative atoms
/// `∂^π f` as the corresponding partial derivative of the replacement
/// expression along the declared argument atoms.
#[derive(Default)]
pub struct Bindings {
    atoms: HashMap<Atom, DiffPoly>,
    functions: HashMap<Arc<str>, (Arc<FunSym>, DiffPoly)>,
}

impl Bindings {
    pub fn new() -> Self {
        Bindings::default()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty() && self.functions.is_empty()
    }

    pub fn bind_atom(&mut self, a: Atom, r: DiffPoly) -> Result<(), SubstituteError> {
        if a.is_odd() {
            if !(r.is_zero() || r.is_p_linear()) {
                return Err(SubstituteError::OddBinding(a.to_string()));
            }
        } else if !r.is_even() {
            return Err(SubstituteError::EvenBinding(a.to_string()));
        }
        self.atoms.insert(a, r);
        Ok(())
    }

    pub fn bind_function(&mut self, sym: &Arc<FunSym>, r: DiffPoly) -> Result<(), SubstituteError> {
        if !r.is_p_free() {
            return Err(SubstituteError::FunctionBinding(sym.name.to_string()));
        }
        self.functions.insert(sym.name.clone(), (sym.clone(), r));
        Ok(())
    }

    /// Replacement for one atom, if any binding covers it.
    fn lookup(&self, a: &Atom) -> Option<DiffPoly> {
        if let Some(r) = self.atoms.get(a) {
            return Some(r.clone());
        }
        if let Atom::FunDeriv { sym, partials } = a {
            if let Some((decl, r)) = self.functions.get(&sym.name) {
                // ∂^π of the replacement along the declared arguments.
                let mut out = r.clone();
                for (j, &k) in partials.iter().enumerate() {
                    for _ in 0..k {
                        out = out.partial(&decl.args[j]);
                    }
                }
                return Some(out);
            }
        }
        None
    }
}

impl DiffPoly {
    /// Capture-free simultaneous substitution. Factors are replaced in term
    /// order, so the graded product supplies all signs.
    pub fn substitute(&self, b: &Bindings) -> DiffPoly {
        if b.is_empty() {
            return self.clone();
        }
        let mut out = DiffPoly::zero();
        for (mono, c) in self.terms() {
            let mut acc = DiffPoly::constant(c.clone());
            for (a, k) in &mono.evens {
                let factor = match b.lookup(a) {
                    Some(r) => r,
                    None => DiffPoly::atom(a.clone()),
                };
                acc = acc.mul(&factor.pow(*k));
                if acc.is_zero() {
                    break;
                }
            }
            if !acc.is_zero() {
                for o in &mono.odds {
                    let factor = match b.lookup(o) {
                        Some(r) => r,
                        None => DiffPoly::atom(o.clone()),
                    };
                    acc = acc.mul(&factor);
                    if acc.is_zero() {
                        break;
                    }
                }
            }
            out = out.add(&acc);
        }
        out
    }
}

impl fmt::Debug for DiffPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{}", c)?;
            for (a, k) in &m.evens {
                write!(f, "·{}", a)?;
                if *k > 1 {
                    write!(f, "^{}", k)?;
                }
            }
            for o in &m.odds {
                write!(f, "·{}", o)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atom::FunSym;

    fn mi(pairs: &[(VarId, u8)]) -> MultiIndex {
        MultiIndex::from_pairs(pairs)
    }

    fn px() -> DiffPoly {
        DiffPoly::jet_p(mi(&[(0, 1)]))
    }

    fn pxx() -> DiffPoly {
        DiffPoly::jet_p(mi(&[(0, 2)]))
    }

    #[test]
    fn odd_square_vanishes() {
        assert!(px().mul(&px()).is_zero());
    }

    #[test]
    fn odd_factors_anticommute() {
        let ab = px().mul(&pxx());
        let ba = pxx().mul(&px());
        assert_eq!(ab, ba.neg());
        assert!(!ab.is_zero());
    }

    #[test]
    fn left_partial_signs() {
        // ∂(p_x·p_xx)/∂p_xx = −p_x; ∂(p_x·p_xx)/∂p_x = p_xx.
        let e = px().mul(&pxx());
        let d_pxx = e.partial(&Atom::JetP(mi(&[(0, 2)])));
        let d_px = e.partial(&Atom::JetP(mi(&[(0, 1)])));
        assert_eq!(d_pxx, px().neg());
        assert_eq!(d_px, pxx());
    }

    #[test]
    fn total_derivative_chain_rule_through_symbols() {
        // h = h(x, u_x): D_x(h) = ∂h/∂x + ∂h/∂u_x·u_xx.
        let h = FunSym::new(
            "h",
            vec![Atom::Indep(0), Atom::JetU(mi(&[(0, 1)]))],
        );
        let e = DiffPoly::atom(Atom::fun(&h));
        let dx = e.total_derivative(0);
        let mut expect = DiffPoly::atom(Atom::fun_bump(&h, &[], 0));
        expect = expect.add(
            &DiffPoly::atom(Atom::fun_bump(&h, &[], 1)).mul(&DiffPoly::jet_u(mi(&[(0, 2)]))),
        );
        assert_eq!(dx, expect);
    }

    #[test]
    fn mixed_total_derivatives_commute() {
        let h = FunSym::new(
            "h",
            vec![Atom::Indep(0), Atom::JetU(mi(&[(0, 1)]))],
        );
        let e = DiffPoly::atom(Atom::fun(&h))
            .mul(&DiffPoly::jet_u(mi(&[(1, 1)])))
            .mul(&px())
            .add(&DiffPoly::var(1).mul(&pxx()));
        let dxy = e.total_derivative(0).total_derivative(1);
        let dyx = e.total_derivative(1).total_derivative(0);
        assert_eq!(dxy, dyx);
    }

    #[test]
    fn partial_sees_symbol_arguments_only() {
        // ∂h/∂u_x = h′ when u_x is declared; ∂h/∂u_xx = 0.
        let h = FunSym::new(
            "h",
            vec![Atom::Indep(0), Atom::JetU(mi(&[(0, 1)]))],
        );
        let e = DiffPoly::atom(Atom::fun(&h));
        let ux = Atom::JetU(mi(&[(0, 1)]));
        let uxx = Atom::JetU(mi(&[(0, 2)]));
        assert_eq!(e.partial(&ux), DiffPoly::atom(Atom::fun_bump(&h, &[], 1)));
        assert!(e.partial(&uxx).is_zero());
    }

    #[test]
    fn substitute_function_symbol() {
        // h(x, u_x) := u_x replaces h′ by 1 and ∂h/∂x by 0.
        let h = FunSym::new(
            "h",
            vec![Atom::Indep(0), Atom::JetU(mi(&[(0, 1)]))],
        );
        let ux = DiffPoly::jet_u(mi(&[(0, 1)]));
        let mut b = Bindings::new();
        b.bind_function(&h, ux.clone()).unwrap();
        let e = DiffPoly::atom(Atom::fun(&h))
            .add(&DiffPoly::atom(Atom::fun_bump(&h, &[], 1)).scale(&q(3)))
            .add(&DiffPoly::atom(Atom::fun_bump(&h, &[], 0)));
        // h + 3·h′ + ∂h/∂x ↦ u_x + 3.
        assert_eq!(e.substitute(&b), ux.add(&DiffPoly::constant(q(3))));
    }

    #[test]
    fn substitute_odd_atom_keeps_sign() {
        // p_x ↦ p_y inside p_x·p_xx lands as −p_xx·p_y → stored +p_y-sorted.
        let py = DiffPoly::jet_p(mi(&[(1, 1)]));
        let e = px().mul(&pxx());
        let mut b = Bindings::new();
        b.bind_atom(Atom::JetP(mi(&[(0, 1)])), py.clone()).unwrap();
        assert_eq!(e.substitute(&b), py.mul(&pxx()));
    }

    #[test]
    fn truncation_splits_by_p_order() {
        let e = px().mul(&pxx()).add(&DiffPoly::jet_p(mi(&[(0, 3)])).mul(&px()));
        let low = e.p_truncate(2);
        let high = e.p_above(2);
        assert_eq!(low, px().mul(&pxx()));
        assert_eq!(low.add(&high), e);
    }
}
