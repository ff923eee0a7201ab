mod common;

use dirac_ssm::edge::{solve_edge_instability, EdgeProblem};
use proptest::prelude::*;

#[test]
fn assembled_coupling_matches_pointwise_products() {
    for trial in 0..10u64 {
        for (m, n) in [(4, 32), (6, 48), (8, 64)] {
            let gap = common::oracle_gap(m, n, 100 + trial);
            assert!(gap < 1e-12, "M = {m}, N = {n}, trial {trial}: {gap:e}");
        }
    }
}

#[test]
fn oracle_detects_a_corrupted_block() {
    let mut p = common::random_problem(6, 48, 3);
    let s = common::random_state(6, 3);
    let x = common::coupling_in_x(&p, &s);
    // Swapping the two P2 combinations must break agreement.
    p.p2 = p.p2.map(|z| -z);
    let a = common::coupling_assembled(&p, &s);
    let gap = x.iter().zip(&a).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
    assert!(gap > 1e-3);
}

#[test]
fn gn_rate_insensitive_to_grid_refinement() {
    let l = 40.0 * std::f64::consts::PI;
    let a = solve_edge_instability(&EdgeProblem::gn(0.35, l, 4096, 128).unwrap(), false).unwrap().max_re;
    let b = solve_edge_instability(&EdgeProblem::gn(0.35, l, 8192, 128).unwrap(), false).unwrap().max_re;
    assert!(a > 5e-3, "{a}");
    assert!((a - b).abs() / a < 0.01, "{a} vs {b}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn oracle_holds_for_random_sizes(m in 4usize..=8, extra in 0usize..3, seed in any::<u64>()) {
        let n = 8 * m + 8 * extra;
        prop_assert!(common::oracle_gap(m, n, seed) < 1e-12);
    }

    #[test]
    fn edge_spectrum_is_conjugate_symmetric_under_real_potentials(seed in any::<u64>()) {
        // Real soliton potentials make the eigenvalue set closed under λ -> -λ*.
        let omega = 0.3 + (seed % 5) as f64 * 0.1;
        let p = EdgeProblem::gn(omega, 20.0 * std::f64::consts::PI, 512, 16).unwrap();
        let r = solve_edge_instability(&p, false).unwrap();
        for z in &r.eigenvalues {
            let mirror = -z.conj();
            let d = r.eigenvalues.iter().map(|w| (w - mirror).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(d < 1e-8, "{z} has no mirror ({d:e})");
        }
    }
}
