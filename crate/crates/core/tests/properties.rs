mod support;

use dopf_core::qp::solve_qp;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::*;

#[test]
fn taylor_identities_at_random_points() {
    let st = taylor_suite(1000, 1);
    assert_eq!(st.points, 1000);
    // both sides evaluate the same products, only summation order differs
    assert!(st.value <= 1e-14, "{st:?}");
    assert!(st.gradient <= 1e-6, "{st:?}");
    assert!(st.remainder <= 1e-10, "{st:?}");
}

#[test]
fn cut_geometry_on_sampled_points() {
    let st = cut_suite(10_000, 2);
    assert!(st.samples >= 9_900, "{st:?}");
    assert!(st.tangency <= 1e-12, "{st:?}");
    assert_eq!(st.misclassified, 0, "{st:?}");
    assert_eq!(st.not_excluding, 0, "{st:?}");
}

#[test]
fn random_and_analytic_qps() {
    let st = qp_suite(200, 7);
    assert_eq!(st.problems, 404);
    assert_eq!(st.not_optimal, 0, "{st:?}");
    assert!(st.kkt <= 1e-8, "{st:?}");
    assert!(st.oracle_gap <= 1e-6, "{st:?}");
    assert!(st.duality_violation <= 1e-8, "{st:?}");
    assert!(st.analytic_error <= 1e-7, "{st:?}");
}

#[test]
fn qp_solutions_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let qp = random_general_qp(&mut rng);
        let a = solve_qp(&qp, 1e-9).unwrap();
        let b = solve_qp(&qp, 1e-9).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.lambda, b.lambda);
    }
}

#[test]
fn dual_sum_and_mode_equivalence_case9() {
    let st = consensus_suite(&case9_modified(), 150, 1e6);
    assert_eq!(st.iterations, 150);
    assert!(st.dual_sum <= 1e-9, "{st:?}");
    assert!(st.mode_gap <= 1e-9, "{st:?}");
    assert!(st.replay_gap <= 1e-12, "{st:?}");
}

#[test]
fn dual_sum_and_mode_equivalence_small_rho() {
    let st = consensus_suite(&load_case("twobus.m"), 200, 10.0);
    assert!(st.dual_sum <= 1e-9, "{st:?}");
    assert!(st.mode_gap <= 1e-9, "{st:?}");
}

#[test]
fn closed_form_net_update_matches_least_squares() {
    let worst = least_squares_suite(100, 3);
    assert!(worst <= 1e-12, "{worst}");
}
