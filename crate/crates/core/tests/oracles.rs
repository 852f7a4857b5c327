mod common;

use common::*;
use ergot::lp::{solve_lp, vertex_minimum, LpStatus};
use ergot::restriction::{invariance_restriction, stationarity_restriction};
use ergot::transport::{solve_constrained_ot, solve_ot, wasserstein};
use ergot::types::{CostMatrix, GroupAction, Measure, SimplexSpec};
use ergot::verify::{random_idempotent_kernel, sample_members};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_cost(n: usize, m: usize, rng: &mut ChaCha8Rng) -> CostMatrix {
    CostMatrix::new(sp(n), sp(m), DMatrix::from_fn(n, m, |_, _| rng.gen::<f64>())).unwrap()
}

fn random_measure(n: usize, rng: &mut ChaCha8Rng) -> Measure {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    let s: f64 = raw.iter().sum();
    Measure::new(sp(n), raw.into_iter().map(|x| x / s).collect::<Vec<_>>()).unwrap()
}

#[test]
fn plain_transport_matches_vertex_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for (n, m) in [(2, 2), (2, 3), (3, 3), (3, 5), (2, 8), (4, 4)] {
        for _ in 0..8 {
            let mu = random_measure(n, &mut rng);
            let nu = random_measure(m, &mut rng);
            let c = random_cost(n, m, &mut rng);
            let got = solve_ot(&mu, &nu, &c).unwrap().value;
            let want = oracle_value(&mu, &nu, &c, None).unwrap();
            assert!((got - want).abs() <= 1e-9, "{n}x{m}: {got} vs {want}");
        }
    }
}

#[test]
fn invariant_transport_matches_vertex_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for cycles in ["(0 1)", "(0 1 2)", "(0 1)(2 3)", "(0 1 2 3)", "(0 1 2)"] {
        let n = if cycles.contains('3') { 4 } else if cycles.contains('2') { 3 } else { 2 };
        let action = GroupAction::cyclic(n, cycles).unwrap();
        let r = invariance_restriction(&action).unwrap();
        let spec = SimplexSpec::GroupInvariant(action);
        for seed in 0..6 {
            let s = sample_members(&spec, 2, seed).unwrap();
            let c = random_cost(n, n, &mut rng);
            let got = solve_constrained_ot(&s[0], &s[1], &c, &r).unwrap().value;
            let want = oracle_value(&s[0], &s[1], &c, Some(&r.omega)).unwrap();
            assert!((got - want).abs() <= 1e-9, "{cycles}: {got} vs {want}");
        }
    }
}

#[test]
fn stationary_transport_matches_vertex_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..10 {
        let q = random_idempotent_kernel(&[1, 2], 1, &mut rng).unwrap();
        let r = stationarity_restriction(&q, &q).unwrap();
        let spec = SimplexSpec::KernelStationary(q);
        let s = sample_members(&spec, 2, rng.gen()).unwrap();
        let c = random_cost(4, 4, &mut rng);
        let got = solve_constrained_ot(&s[0], &s[1], &c, &r).unwrap().value;
        let want = oracle_value(&s[0], &s[1], &c, Some(&r.omega)).unwrap();
        assert!((got - want).abs() <= 1e-9, "{got} vs {want}");
    }
}

#[test]
fn generic_lp_matches_vertex_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..40 {
        let vars = rng.gen_range(3..9);
        let rows = rng.gen_range(1..vars);
        let x0: Vec<f64> = (0..vars).map(|_| rng.gen_range(0.0..1.0)).collect();
        let a: Vec<Vec<f64>> = (0..rows)
            .map(|_| (0..vars).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let b = a.iter().map(|r| r.iter().zip(&x0).map(|(u, v)| u * v).sum()).collect();
        let obj: Vec<f64> = (0..vars).map(|_| rng.gen_range(0.0..1.0)).collect();
        let lp = ergot::lp::LpProblem::new(obj, a, b).unwrap();
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        let want = vertex_minimum(&lp, VERTEX_CAP).unwrap().unwrap();
        assert!((sol.value.unwrap() - want).abs() <= 1e-9);
    }
}

#[test]
fn c3x2_cross_block_value_two() {
    let r = invariance_restriction(&c3x2()).unwrap();
    let c = block_metric().cost_pow(1.0);
    let got = solve_constrained_ot(&mix(1.0), &mix(0.0), &c, &r).unwrap().value;
    let want = quotient_oracle(&mix(1.0), &mix(0.0), &c, &c3x2()).unwrap();
    assert!((want - 2.0).abs() < 1e-12);
    assert!((got - want).abs() < 1e-12);
}

#[test]
fn c3x2_mixture_pair_both_exponents() {
    let r = invariance_restriction(&c3x2()).unwrap();
    let d = block_metric();
    for p in [1.0, 2.0] {
        let w = wasserstein(&mix(0.5), &mix(0.25), &d, p, &r).unwrap();
        let want = quotient_oracle(&mix(0.5), &mix(0.25), &d.cost_pow(p), &c3x2())
            .unwrap()
            .powf(1.0 / p);
        assert!((w - want).abs() < 1e-12, "p = {p}: {w} vs {want}");
    }
    let w1 = wasserstein(&mix(0.5), &mix(0.25), &d, 1.0, &r).unwrap();
    assert!((w1 - 0.5).abs() < 1e-12);
}

#[test]
fn quotient_oracle_agrees_with_full_oracle_on_small_actions() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let action = GroupAction::cyclic(4, "(0 1)(2 3)").unwrap();
    let r = invariance_restriction(&action).unwrap();
    let spec = SimplexSpec::GroupInvariant(action.clone());
    for seed in 0..5 {
        let s = sample_members(&spec, 2, seed).unwrap();
        let c = random_cost(4, 4, &mut rng);
        let a = quotient_oracle(&s[0], &s[1], &c, &action).unwrap();
        let b = oracle_value(&s[0], &s[1], &c, Some(&r.omega)).unwrap();
        assert!((a - b).abs() < 1e-9);
    }
}
