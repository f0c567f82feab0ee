//! Derivative multi-indices over the independent variables of a session.
//!
//! A multi-index records how many total derivatives are taken along each
//! independent variable. Variables are identified by their declaration
//! position, so the same `MultiIndex` type serves every session.

use std::cmp::Ordering;
use std::fmt;

/// Position of an independent variable in the declaration order.
pub type VarId = usize;

/// Exponent vector of total derivatives, one entry per independent variable.
///
/// Invariant: the internal vector carries no trailing zeros, so equal indices
/// have equal representations and the zero index is the empty vector.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct MultiIndex {
    exp: Vec<u8>,
}

impl MultiIndex {
    /// The empty index (no derivatives).
    pub fn zero() -> Self {
        MultiIndex { exp: Vec::new() }
    }

    /// The index with a single derivative along `v`.
    pub fn single(v: VarId) -> Self {
        let mut exp = vec![0; v + 1];
        exp[v] = 1;
        MultiIndex { exp }
    }

    /// Builds an index from `(variable, count)` pairs.
    pub fn from_pairs(pairs: &[(VarId, u8)]) -> Self {
        let mut exp = Vec::new();
        for &(v, k) in pairs {
            if v >= exp.len() {
                exp.resize(v + 1, 0);
            }
            exp[v] += k;
        }
        let mut m = MultiIndex { exp };
        m.trim();
        m
    }

    fn trim(&mut self) {
        while self.exp.last() == Some(&0) {
            self.exp.pop();
        }
    }

    /// Total number of derivatives.
    pub fn order(&self) -> usize {
        self.exp.iter().map(|&k| k as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.exp.is_empty()
    }

    /// Exponent along `v`.
    pub fn get(&self, v: VarId) -> u8 {
        self.exp.get(v).copied().unwrap_or(0)
    }

    /// Iterates `(variable, exponent)` over the nonzero entries.
    pub fn iter(&self) -> impl Iterator<Item = (VarId, u8)> + '_ {
        self.exp
            .iter()
            .enumerate()
            .filter(|(_, &k)| k > 0)
            .map(|(v, &k)| (v, k))
    }

    /// Largest variable id with a nonzero exponent, if any.
    pub fn max_var(&self) -> Option<VarId> {
        if self.exp.is_empty() {
            None
        } else {
            Some(self.exp.len() - 1)
        }
    }

    /// Componentwise sum.
    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        let n = self.exp.len().max(other.exp.len());
        let mut exp = vec![0u8; n];
        for (i, e) in exp.iter_mut().enumerate() {
            *e = self.get(i) + other.get(i);
        }
        MultiIndex { exp }
    }

    /// Adds one derivative along `v`.
    pub fn bump(&self, v: VarId) -> MultiIndex {
        self.add(&MultiIndex::single(v))
    }

    /// Componentwise difference `self − other`, if `other ≤ self`.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if !other.divides(self) {
            return None;
        }
        let mut exp: Vec<u8> = (0..self.exp.len())
            .map(|i| self.get(i) - other.get(i))
            .collect();
        while exp.last() == Some(&0) {
            exp.pop();
        }
        Some(MultiIndex { exp })
    }

    /// Whether `self ≤ other` componentwise.
    pub fn divides(&self, other: &MultiIndex) -> bool {
        self.exp
            .iter()
            .enumerate()
            .all(|(i, &k)| k <= other.get(i))
    }

    /// All indices `ρ ≤ self` componentwise, in ascending `Ord` order of the
    /// raw exponent vectors (deterministic).
    pub fn sub_indices(&self) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex::zero()];
        for (v, k) in self.iter() {
            let mut next = Vec::with_capacity(out.len() * (k as usize + 1));
            for m in &out {
                for j in 0..=k {
                    next.push(m.add(&MultiIndex::from_pairs(&[(v, j)])));
                }
            }
            out = next;
        }
        out
    }

    /// Product of componentwise binomial coefficients `C(self_i, rho_i)`.
    ///
    /// This is the multiplicity with which `D_ρ(a)·D_{self−ρ}(q)` occurs in
    /// the Leibniz expansion of `D_self(a·q)`.
    pub fn binomial(&self, rho: &MultiIndex) -> u64 {
        fn c(n: u8, k: u8) -> u64 {
            let (n, k) = (n as u64, k as u64);
            if k > n {
                return 0;
            }
            let k = k.min(n - k);
            let mut acc = 1u64;
            for i in 0..k {
                acc = acc * (n - i) / (i + 1);
            }
            acc
        }
        self.exp
            .iter()
            .enumerate()
            .map(|(i, &k)| c(k, rho.get(i)))
            .product()
    }

    /// Renders the index as a comma-separated variable list, e.g. `x,x,y`.
    pub fn render(&self, vars: &[String]) -> String {
        let mut parts = Vec::new();
        for (v, k) in self.iter() {
            for _ in 0..k {
                parts.push(vars.get(v).map(|s| s.as_str()).unwrap_or("?"));
            }
        }
        parts.join(",")
    }
}

impl Ord for MultiIndex {
    /// Graded order: lower total order first; at equal order, words compare
    /// lexicographically (`u_xx` before `u_xy`), i.e. a higher exponent on an
    /// earlier variable sorts first.
    fn cmp(&self, other: &Self) -> Ordering {
        self.order().cmp(&other.order()).then_with(|| {
            let n = self.exp.len().max(other.exp.len());
            for i in 0..n {
                match other.get(i).cmp(&self.get(i)) {
                    Ordering::Equal => continue,
                    ord => return ord,
                }
            }
            Ordering::Equal
        })
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "σ{:?}", self.exp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_word_order() {
        let xx = MultiIndex::from_pairs(&[(0, 2)]);
        let xy = MultiIndex::from_pairs(&[(0, 1), (1, 1)]);
        let yy = MultiIndex::from_pairs(&[(1, 2)]);
        let x = MultiIndex::single(0);
        assert!(x < xx);
        assert!(xx < xy);
        assert!(xy < yy);
        assert!(MultiIndex::zero() < x);
    }

    #[test]
    fn sub_indices_and_binomials() {
        let xxy = MultiIndex::from_pairs(&[(0, 2), (1, 1)]);
        let subs = xxy.sub_indices();
        assert_eq!(subs.len(), 6);
        let x = MultiIndex::single(0);
        assert_eq!(xxy.binomial(&x), 2);
        assert_eq!(xxy.binomial(&MultiIndex::zero()), 1);
        assert_eq!(xxy.binomial(&xxy), 1);
    }

    #[test]
    fn sub_and_divides() {
        let xy = MultiIndex::from_pairs(&[(0, 1), (1, 1)]);
        let x = MultiIndex::single(0);
        assert!(x.divides(&xy));
        assert_eq!(xy.checked_sub(&x), Some(MultiIndex::single(1)));
        assert_eq!(x.checked_sub(&xy), None);
    }
}
