//! Randomized algebraic laws, run against every bundled equation.
//!
//! Each law lives in `common` as a plain function; here proptest feeds it
//! 100 random instances per equation. The same bodies back the acceptance
//! gate, so a failure here is a failure there.

mod common;

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use jetviber::equation::Shell;

fn cases_100() -> ProptestConfig {
    ProptestConfig {
        cases: 100,
        max_shrink_iters: 64,
        ..ProptestConfig::default()
    }
}

fn ok(r: Result<(), String>) -> Result<(), TestCaseError> {
    r.map_err(TestCaseError::fail)
}

macro_rules! equation_suite {
    ($module:ident, $name:literal) => {
        mod $module {
            use super::*;

            fn s() -> &'static common::EqSetup {
                common::setup($name)
            }

            proptest! {
                #![proptest_config(cases_100())]

                #[test]
                fn total_derivatives_commute(
                    e in common::arb_poly(common::setup($name)),
                    i in 0usize..8,
                    j in 0usize..8,
                ) {
                    let n = s().n_vars;
                    ok(common::check_commuting_derivatives(s(), &e, i % n, j % n))?;
                }

                #[test]
                fn adjoint_is_an_involution(
                    op in common::arb_cdiff_op(common::setup($name)),
                ) {
                    ok(common::check_adjoint_involution(s(), &op))?;
                }

                #[test]
                fn adjoint_reverses_composition(
                    a in common::arb_cdiff_op(common::setup($name)),
                    b in common::arb_cdiff_op(common::setup($name)),
                ) {
                    ok(common::check_adjoint_anti_homomorphism(s(), &a, &b))?;
                }

                #[test]
                fn reduction_is_idempotent(
                    e in common::arb_poly(common::setup($name)),
                    cotangent in proptest::bool::ANY,
                ) {
                    let shell = if cotangent { Shell::Cotangent } else { Shell::Equation };
                    ok(common::check_reduce_idempotent(s(), &e, shell))?;
                }

                #[test]
                fn decomposition_recovers_its_table(
                    table in common::arb_decomposition_table(common::setup($name)),
                ) {
                    ok(common::check_decompose_reconstruction(s(), &table))?;
                }

                #[test]
                fn evolutionary_derivation_is_graded_leibniz(
                    (phi, phi_parity) in common::arb_section(common::setup($name)),
                    (e1, e1_parity) in common::arb_homogeneous(common::setup($name)),
                    e2 in common::arb_poly(common::setup($name)),
                ) {
                    ok(common::check_ev_leibniz(s(), &phi, phi_parity, &e1, e1_parity, &e2))?;
                }

                #[test]
                fn bracket_is_symmetric(
                    a in common::arb_pool_combo(common::setup($name)),
                    b in common::arb_pool_combo(common::setup($name)),
                ) {
                    ok(common::check_bracket_symmetry(s(), &a, &b))?;
                }

                #[test]
                fn bracket_is_bilinear(
                    a in common::arb_pool_combo(common::setup($name)),
                    b in common::arb_pool_combo(common::setup($name)),
                    c in common::arb_pool_combo(common::setup($name)),
                    alpha in common::arb_ratio(),
                    beta in common::arb_ratio(),
                ) {
                    ok(common::check_bracket_bilinearity(s(), &a, &b, &c, &alpha, &beta))?;
                }

                #[test]
                fn independent_coefficient_span_commutes(
                    w1 in common::arb_span_weights($name),
                    w2 in common::arb_span_weights($name),
                ) {
                    ok(common::check_independent_coefficient_span(s(), &w1, &w2))?;
                }
            }
        }
    };
}

equation_suite!(wave, "wave");
equation_suite!(uxyz, "uxyz");
equation_suite!(laplace2d, "laplace2d");
equation_suite!(laplace3d, "laplace3d");
equation_suite!(poincare, "poincare");
