#![allow(dead_code)]

use ergot::ergodic::orbit_decompose;
use ergot::lp::{vertex_minimum, LpProblem};
use ergot::types::{
    ConstraintSet, CostMatrix, FiniteSpace, GroundMetric, GroupAction, Measure,
};
use nalgebra::DMatrix;

pub const VERTEX_CAP: usize = 2_000_000;

pub fn sp(n: usize) -> FiniteSpace {
    FiniteSpace::indexed(n).unwrap()
}

pub fn c3x2() -> GroupAction {
    GroupAction::cyclic(6, "(0 1 2)(3 4 5)").unwrap()
}

/// 0 on the diagonal, 1 inside a block of three, 2 across blocks.
pub fn block_metric() -> GroundMetric {
    let d = DMatrix::from_fn(6, 6, |i, j| {
        if i == j {
            0.0
        } else if i / 3 == j / 3 {
            1.0
        } else {
            2.0
        }
    });
    GroundMetric::new(sp(6), d).unwrap()
}

/// `a·u{0,1,2} + (1 − a)·u{3,4,5}`.
pub fn mix(a: f64) -> Measure {
    let b = 1.0 - a;
    Measure::new(sp(6), vec![a / 3.0, a / 3.0, a / 3.0, b / 3.0, b / 3.0, b / 3.0]).unwrap()
}

/// Transport LP with every marginal row kept and one row per functional,
/// written out independently of the solver's own formulation.
pub fn oracle_lp(mu: &Measure, nu: &Measure, c: &CostMatrix, omega: Option<&ConstraintSet>) -> LpProblem {
    let (m, n) = (mu.len(), nu.len());
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for i in 0..m {
        rows.push((0..m * n).map(|v| if v / n == i { 1.0 } else { 0.0 }).collect());
        rhs.push(mu.w[i]);
    }
    for j in 0..n {
        rows.push((0..m * n).map(|v| if v % n == j { 1.0 } else { 0.0 }).collect());
        rhs.push(nu.w[j]);
    }
    if let Some(o) = omega {
        for k in &o.omegas {
            rows.push((0..m * n).map(|v| k.omega[(v / n, v % n)]).collect());
            rhs.push(0.0);
        }
    }
    let obj = (0..m * n).map(|v| c.c[(v / n, v % n)]).collect();
    LpProblem::new(obj, rows, rhs).unwrap()
}

pub fn oracle_value(mu: &Measure, nu: &Measure, c: &CostMatrix, omega: Option<&ConstraintSet>) -> Option<f64> {
    vertex_minimum(&oracle_lp(mu, nu, c, omega), VERTEX_CAP).unwrap()
}

/// Invariant plans are constant on orbits of the diagonal action, so the
/// restricted problem is an LP over one mass per product orbit.
pub fn quotient_oracle(mu: &Measure, nu: &Measure, c: &CostMatrix, action: &GroupAction) -> Option<f64> {
    let n = action.space.len();
    let pairs: Vec<(String, ergot::types::Permutation)> = action
        .generators
        .iter()
        .map(|(l, g)| {
            let image = (0..n * n)
                .map(|cell| g.apply(cell / n) * n + g.apply(cell % n))
                .collect();
            (l.clone(), ergot::types::Permutation::from_images(image).unwrap())
        })
        .collect();
    let product = GroupAction::new(sp(n * n), pairs).unwrap();
    let orbits = orbit_decompose(&product).orbits;
    let k = orbits.len();
    let share = |o: &Vec<usize>, pred: &dyn Fn(usize) -> bool| {
        o.iter().filter(|&&cell| pred(cell)).count() as f64 / o.len() as f64
    };
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for i in 0..n {
        rows.push(orbits.iter().map(|o| share(o, &|cell| cell / n == i)).collect());
        rhs.push(mu.w[i]);
    }
    for j in 0..n {
        rows.push(orbits.iter().map(|o| share(o, &|cell| cell % n == j)).collect());
        rhs.push(nu.w[j]);
    }
    let obj = orbits
        .iter()
        .map(|o| o.iter().map(|&cell| c.c[(cell / n, cell % n)]).sum::<f64>() / o.len() as f64)
        .collect();
    let lp = LpProblem::new(obj, rows, rhs).unwrap();
    assert!(k <= 24, "quotient LP too large for enumeration");
    vertex_minimum(&lp, VERTEX_CAP).unwrap()
}
