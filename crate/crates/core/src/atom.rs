//! Atoms: the indeterminates that differential polynomials are built from.
//!
//! Five public kinds exist, ordered canonically as
//! independent variable < constant < function derivative < u-jet < p-jet.
//! Only p-jets are odd. A sixth, internal kind (`Tag`) marks occurrences of
//! `D_τ(F)` while an expression is being decomposed along an equation; tags
//! never appear in user-facing results.

use crate::multiindex::{MultiIndex, VarId};
use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

/// Declaration of an opaque function symbol.
///
/// Arguments are themselves atoms (independent variables or u-jets), and the
/// symbol is smooth in them: mixed partials commute, so a derivative of the
/// symbol is recorded as a count per argument position.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct FunSym {
    pub name: Arc<str>,
    pub args: Vec<Atom>,
}

impl FunSym {
    pub fn new(name: &str, args: Vec<Atom>) -> Arc<Self> {
        debug_assert!(args
            .iter()
            .all(|a| matches!(a, Atom::Indep(_) | Atom::JetU(_))));
        Arc::new(FunSym {
            name: name.into(),
            args,
        })
    }

    /// Position (0-based) of `atom` in the declared argument list.
    pub fn arg_position(&self, atom: &Atom) -> Option<usize> {
        self.args.iter().position(|a| a == atom)
    }
}

/// One indeterminate.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Atom {
    /// An independent variable.
    Indep(VarId),
    /// An opaque constant.
    Const(Arc<str>),
    /// `∂^π f` for an opaque symbol `f`; `partials` counts derivatives per
    /// argument position, with no trailing zeros.
    FunDeriv {
        sym: Arc<FunSym>,
        partials: Vec<u8>,
    },
    /// Jet coordinate `u_σ` (even).
    JetU(MultiIndex),
    /// Internal marker standing for `D_τ(F)` during decomposition (even).
    Tag(MultiIndex),
    /// Jet coordinate `p_σ` (odd).
    JetP(MultiIndex),
}

impl Atom {
    pub fn fun(sym: &Arc<FunSym>) -> Atom {
        Atom::FunDeriv {
            sym: sym.clone(),
            partials: Vec::new(),
        }
    }

    /// `∂/∂(argument j)` applied to this function-derivative atom.
    pub fn fun_bump(sym: &Arc<FunSym>, partials: &[u8], j: usize) -> Atom {
        let mut p = partials.to_vec();
        if p.len() <= j {
            p.resize(j + 1, 0);
        }
        p[j] += 1;
        Atom::FunDeriv {
            sym: sym.clone(),
            partials: p,
        }
    }

    pub fn is_odd(&self) -> bool {
        matches!(self, Atom::JetP(_))
    }

    fn rank(&self) -> u8 {
        match self {
            Atom::Indep(_) => 0,
            Atom::Const(_) => 1,
            Atom::FunDeriv { .. } => 2,
            Atom::JetU(_) => 3,
            Atom::Tag(_) => 4,
            Atom::JetP(_) => 5,
        }
    }
}

impl Ord for Atom {
    /// Canonical atom order: kind rank, then identifier, then the graded
    /// word order on derivative indices.
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank().cmp(&other.rank()).then_with(|| match (self, other) {
            (Atom::Indep(a), Atom::Indep(b)) => a.cmp(b),
            (Atom::Const(a), Atom::Const(b)) => a.cmp(b),
            (
                Atom::FunDeriv { sym: s1, partials: p1 },
                Atom::FunDeriv { sym: s2, partials: p2 },
            ) => s1
                .name
                .cmp(&s2.name)
                .then_with(|| {
                    let t1: u32 = p1.iter().map(|&k| k as u32).sum();
                    let t2: u32 = p2.iter().map(|&k| k as u32).sum();
                    t1.cmp(&t2)
                })
                .then_with(|| {
                    // Same word order as derivative indices: at equal total,
                    // more derivatives on an earlier argument sorts first.
                    let n = p1.len().max(p2.len());
                    for i in 0..n {
                        let a = p1.get(i).copied().unwrap_or(0);
                        let b = p2.get(i).copied().unwrap_or(0);
                        match b.cmp(&a) {
                            Ordering::Equal => continue,
                            ord => return ord,
                        }
                    }
                    Ordering::Equal
                }),
            (Atom::JetU(a), Atom::JetU(b)) => a.cmp(b),
            (Atom::Tag(a), Atom::Tag(b)) => a.cmp(b),
            (Atom::JetP(a), Atom::JetP(b)) => a.cmp(b),
            _ => unreachable!("rank already distinguished the kinds"),
        })
    }
}

impl PartialOrd for Atom {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Atom {
    /// Debug-oriented rendering with raw variable ids; the session printer
    /// renders atoms with declared names.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Indep(v) => write!(f, "x{}", v),
            Atom::Const(c) => write!(f, "{}", c),
            Atom::FunDeriv { sym, partials } => write!(f, "pd({},{:?})", sym.name, partials),
            Atom::JetU(m) => write!(f, "u{:?}", m),
            Atom::Tag(m) => write!(f, "@F{:?}", m),
            Atom::JetP(m) => write!(f, "p{:?}", m),
        }
    }
}
