//! Exact symbolic calculus for variational bivectors on scalar evolution and
//! wave-type PDEs: graded jet-space polynomials, C-differential operators and
//! their adjoints, reduction modulo an equation and its cotangent extension,
//! bivector verification, Schouten brackets, and ansatz-driven search.

pub mod atom;
pub mod equation;
pub mod fixtures;
pub mod lang;
pub mod multiindex;
pub mod ops;
pub mod poly;
pub mod report;
pub mod schouten;
pub mod search;

pub use atom::{Atom, FunSym};
pub use equation::{CotangentRule, EquationError, EquationModel, Shell};
pub use lang::{print_canonical, LangError, Session};
pub use multiindex::{MultiIndex, VarId};
pub use ops::{BiDiffOp, CDiffOp, OpError};
pub use poly::{Bindings, DiffPoly, Monomial, SubstituteError};
pub use report::{Item, Report, Status};
pub use schouten::{
    are_compatible, check_bivector, evolutionary_apply, generating_section, is_cotangent_symmetry,
    is_poisson, schouten_bracket, Bivector, CheckReport, GeneratingSection, SchoutenError,
    Violation,
};
pub use search::{search, Ansatz, DeterminingSystem, SearchError, SearchOutcome};
