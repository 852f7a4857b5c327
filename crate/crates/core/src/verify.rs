//! Executable checks of the decomposition theorems, the optimal component
//! table, the metric-axiom suite and a seeded random instance generator.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ergodic::{self, SimplexBoundary};
use crate::error::{Error, Result};
use crate::lp::TAU_LP;
use crate::restriction::{
    check_ergodic_decomposability, invariance_restriction, stationarity_restriction,
    LinearRestriction, GROUP_CAP,
};
use crate::transport::{
    boundary_metric, decompose_plan, lifted_metric, solve_constrained_ot, solve_masked_ot,
    solve_ot, wasserstein, BoundaryMetricMatrix,
};
use crate::types::{
    generate_group, CostMatrix, FiniteSpace, GroundMetric, GroupAction, Measure, Permutation,
    SimplexSpec, StochKernel, TransportPlan, TAU_METRIC,
};

/// Tolerance for the theorem gaps; two independent solves compound rounding.
pub const TAU_THM: f64 = 1e-8;

/// Optimal values and plans between every pair of extreme points.
#[derive(Debug, Clone, PartialEq)]
pub struct QoptTable {
    pub row_components: Vec<Measure>,
    pub col_components: Vec<Measure>,
    /// `+∞` where the component pair admits no feasible plan.
    pub values: DMatrix<f64>,
    pub plans: Vec<Vec<Option<TransportPlan>>>,
}

pub fn build_qopt(
    spec_x: &SimplexSpec,
    spec_y: &SimplexSpec,
    c: &CostMatrix,
    r: &LinearRestriction,
) -> Result<QoptTable> {
    let bx = ergodic::boundary(spec_x)?;
    let by = ergodic::boundary(spec_y)?;
    let (a, b) = (bx.len(), by.len());
    let cells = (0..a * b)
        .into_par_iter()
        .map(|k| solve_constrained_ot(&bx.components[k / b], &by.components[k % b], c, r))
        .collect::<Result<Vec<_>>>()?;
    let values = DMatrix::from_fn(a, b, |i, j| cells[i * b + j].value);
    let mut plans = vec![Vec::with_capacity(b); a];
    for (k, res) in cells.into_iter().enumerate() {
        plans[k / b].push(res.plan);
    }
    Ok(QoptTable {
        row_components: bx.components,
        col_components: by.components,
        values,
        plans,
    })
}

/// Component of the optimal left-hand plan whose cost undercuts the table.
#[derive(Debug, Clone, PartialEq)]
pub struct QoptViolation {
    pub atom: usize,
    pub classes: (usize, usize),
    pub component_cost: f64,
    pub table_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionReport {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub unconstrained: f64,
    pub inner_table: QoptTable,
    pub mu_weights: Vec<f64>,
    pub nu_weights: Vec<f64>,
    /// Outer coupling of the boundary weights; `None` when infeasible.
    pub outer_plan: Option<DMatrix<f64>>,
    pub outer_marginal_error: f64,
    pub lhs_plan: Option<TransportPlan>,
    /// Number of atoms in the decomposition of the left-hand plan.
    pub plan_components: usize,
    pub plan_reconstruction_error: f64,
    pub qopt_violations: Vec<QoptViolation>,
    /// Marginal-class rectangles that split into several product atoms.
    pub split_rectangles: usize,
}

impl DecompositionReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.gap <= tol && self.qopt_violations.is_empty() && self.outer_marginal_error <= TAU_LP
    }
}

fn gap_of(a: f64, b: f64) -> f64 {
    if a.is_infinite() && b.is_infinite() {
        0.0
    } else {
        (a - b).abs()
    }
}

/// Solves the constrained problem directly and through the component table
/// and outer coupling, and checks the plan-level decomposition of the
/// direct optimum against the table.
pub fn verify_decomposition(
    mu: &Measure,
    nu: &Measure,
    c: &CostMatrix,
    r: &LinearRestriction,
) -> Result<DecompositionReport> {
    if !r.has_product_structure() {
        return Err(Error::MissingProductStructure);
    }
    let direct = solve_constrained_ot(mu, nu, c, r)?;
    let unconstrained = solve_ot(mu, nu, c)?.value;
    let bx = ergodic::boundary(&r.mx_spec)?;
    let by = ergodic::boundary(&r.my_spec)?;
    let wx = ergodic::boundary_weights(mu, &r.mx_spec, &bx)?;
    let wy = ergodic::boundary_weights(nu, &r.my_spec, &by)?;
    let table = build_qopt(&r.mx_spec, &r.my_spec, c, r)?;
    let (rhs, outer_plan) = solve_masked_ot(&wx, &wy, &table.values)?;
    let outer_marginal_error = outer_plan.as_ref().map_or(0.0, |p| {
        let rows = (0..wx.len()).map(|i| (p.row(i).sum() - wx[i]).abs());
        let cols = (0..wy.len()).map(|j| (p.column(j).sum() - wy[j]).abs());
        rows.chain(cols).fold(0.0, f64::max)
    });

    let mut qopt_violations = Vec::new();
    let mut plan_components = 0;
    let mut plan_reconstruction_error = 0.0;
    if let Some(plan) = &direct.plan {
        let dec = decompose_plan(plan, r)?;
        plan_components = dec.components.len();
        plan_reconstruction_error = (dec.reconstruct() - &plan.p).amax();
        for (k, comp) in dec.components.iter().enumerate() {
            let (a, b) = dec.marginal_classes[k];
            let cost = comp.cost(c);
            let best = table.values[(a, b)];
            if cost < best - 1e-9 {
                qopt_violations.push(QoptViolation {
                    atom: dec.atoms[k],
                    classes: (a, b),
                    component_cost: cost,
                    table_value: best,
                });
            }
        }
    }
    let split_rectangles = check_ergodic_decomposability(r)?.split_rectangles;
    Ok(DecompositionReport {
        gap: gap_of(direct.value, rhs),
        lhs: direct.value,
        rhs,
        unconstrained,
        inner_table: table,
        mu_weights: wx,
        nu_weights: wy,
        outer_plan,
        outer_marginal_error,
        lhs_plan: direct.plan,
        plan_components,
        plan_reconstruction_error,
        qopt_violations,
        split_rectangles,
    })
}

/// Metric-axiom check on a distance matrix between samples.
#[derive(Debug, Clone, PartialEq)]
pub struct AxiomReport {
    pub identity_max: f64,
    pub symmetry_max: f64,
    /// Pairs of distinct samples at distance ≤ τ_metric.
    pub positivity_failures: Vec<(usize, usize)>,
    /// Largest `D[i][k] − D[i][j] − D[j][k]`.
    pub triangle_max_excess: f64,
    pub triples: usize,
    pub passed: bool,
}

/// Checks the metric axioms on `dist[i][j]` between `samples`.
/// Samples closer than τ_metric in sup norm count as equal.
pub fn check_metric_axioms(samples: &[Measure], dist: &DMatrix<f64>) -> AxiomReport {
    let n = samples.len();
    let mut identity_max: f64 = 0.0;
    let mut symmetry_max: f64 = 0.0;
    let mut positivity_failures = Vec::new();
    let mut triangle_max_excess = f64::NEG_INFINITY;
    for i in 0..n {
        identity_max = identity_max.max(dist[(i, i)].abs());
        for j in 0..n {
            let (a, b) = (dist[(i, j)], dist[(j, i)]);
            if a.is_finite() || b.is_finite() {
                symmetry_max = symmetry_max.max(gap_of(a, b));
            }
            if i < j && samples[i].max_abs_diff(&samples[j]) > TAU_METRIC && a <= TAU_METRIC {
                positivity_failures.push((i, j));
            }
            for k in 0..n {
                let excess = dist[(i, k)] - dist[(i, j)] - dist[(j, k)];
                if !excess.is_nan() {
                    triangle_max_excess = triangle_max_excess.max(excess);
                }
            }
        }
    }
    let triangle_max_excess = triangle_max_excess.max(0.0);
    AxiomReport {
        passed: identity_max <= TAU_METRIC
            && symmetry_max <= TAU_METRIC
            && positivity_failures.is_empty()
            && triangle_max_excess <= TAU_METRIC,
        identity_max,
        symmetry_max,
        positivity_failures,
        triangle_max_excess,
        triples: n * n * n,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricDecompositionReport {
    pub p: f64,
    pub boundary: BoundaryMetricMatrix,
    /// Restricted distances between samples.
    pub direct: DMatrix<f64>,
    /// Lifted boundary distances between samples.
    pub lifted: DMatrix<f64>,
    pub max_gap: f64,
    pub direct_axioms: AxiomReport,
    pub lifted_axioms: AxiomReport,
}

impl MetricDecompositionReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_gap <= tol && self.direct_axioms.passed && self.lifted_axioms.passed
    }
}

/// Compares the restricted distance with the lifted boundary distance on all
/// pairs of `samples`, and runs the axiom suite on both.
pub fn verify_metric_decomposition(
    spec: &SimplexSpec,
    d: &GroundMetric,
    p: f64,
    r: &LinearRestriction,
    samples: &[Measure],
) -> Result<MetricDecompositionReport> {
    let bm = boundary_metric(spec, d, p, r)?;
    let n = samples.len();
    let pairs = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (a, b) = (&samples[k / n], &samples[k % n]);
            Ok((wasserstein(a, b, d, p, r)?, lifted_metric(a, b, &bm, spec, p)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let direct = DMatrix::from_fn(n, n, |i, j| pairs[i * n + j].0);
    let lifted = DMatrix::from_fn(n, n, |i, j| pairs[i * n + j].1);
    let max_gap = pairs.iter().map(|&(a, b)| gap_of(a, b)).fold(0.0, f64::max);
    Ok(MetricDecompositionReport {
        p,
        boundary: bm,
        direct_axioms: check_metric_axioms(samples, &direct),
        lifted_axioms: check_metric_axioms(samples, &lifted),
        direct,
        lifted,
        max_gap,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstanceFamily {
    /// Random permutation with the given cycle lengths; invariance restriction.
    Permutation { cycles: Vec<usize> },
    /// Random permutation of `n` points with a random cycle type of at most
    /// `max_cycles` cycles; invariance restriction.
    MixedPermutation { n: usize, max_cycles: usize },
    /// Random idempotent kernel with recurrent classes of the given sizes and
    /// `transient` extra points; stationarity restriction.
    Kernel { classes: Vec<usize>, transient: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceSpec {
    pub family: InstanceFamily,
    pub seed: u64,
}

impl InstanceSpec {
    pub fn permutation(cycles: &[usize], seed: u64) -> Self {
        Self {
            family: InstanceFamily::Permutation {
                cycles: cycles.to_vec(),
            },
            seed,
        }
    }

    pub fn mixed(n: usize, max_cycles: usize, seed: u64) -> Self {
        Self {
            family: InstanceFamily::MixedPermutation { n, max_cycles },
            seed,
        }
    }

    pub fn kernel(classes: &[usize], transient: usize, seed: u64) -> Self {
        Self {
            family: InstanceFamily::Kernel {
                classes: classes.to_vec(),
                transient,
            },
            seed,
        }
    }

    pub fn n(&self) -> usize {
        match &self.family {
            InstanceFamily::Permutation { cycles } => cycles.iter().sum(),
            InstanceFamily::MixedPermutation { n, .. } => *n,
            InstanceFamily::Kernel { classes, transient } => classes.iter().sum::<usize>() + transient,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub space: FiniteSpace,
    pub spec: SimplexSpec,
    pub restriction: LinearRestriction,
    pub cost: CostMatrix,
    pub mu: Measure,
    pub nu: Measure,
}

/// Random permutation of `0..n` whose cycles have the given lengths.
pub fn random_permutation<R: Rng>(cycles: &[usize], rng: &mut R) -> Result<Permutation> {
    let n: usize = cycles.iter().sum();
    let mut points: Vec<usize> = (0..n).collect();
    points.shuffle(rng);
    let mut image: Vec<usize> = (0..n).collect();
    let mut start = 0;
    for &len in cycles {
        let cyc = &points[start..start + len];
        for k in 0..len {
            image[cyc[k]] = cyc[(k + 1) % len];
        }
        start += len;
    }
    Permutation::from_images(image)
}

/// Random composition of `n` into between 1 and `max_parts` positive parts.
pub fn random_cycle_type<R: Rng>(n: usize, max_parts: usize, rng: &mut R) -> Vec<usize> {
    let parts = rng.gen_range(1..=max_parts.clamp(1, n.max(1)));
    let mut cuts: Vec<usize> = rand::seq::index::sample(rng, n - 1, parts - 1)
        .into_iter()
        .map(|c| c + 1)
        .collect();
    cuts.sort_unstable();
    cuts.push(n);
    let mut prev = 0;
    cuts.into_iter()
        .map(|c| {
            let len = c - prev;
            prev = c;
            len
        })
        .collect()
}

/// Random probability vector with strictly positive entries.
fn random_weights<R: Rng>(k: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

/// Random mixture of the boundary components. Each weight is dropped to
/// zero with probability 1/4 as long as one remains positive.
pub fn random_member<R: Rng>(bd: &SimplexBoundary, rng: &mut R) -> Result<Measure> {
    let k = bd.len();
    let mut w = random_weights(k, rng);
    for i in 0..k {
        if rng.gen_bool(0.25) && w.iter().filter(|&&x| x > 0.0).count() > 1 {
            w[i] = 0.0;
        }
    }
    let s: f64 = w.iter().sum();
    let space = bd.components[0].space.clone();
    let mut out = vec![0.0; space.len()];
    for (wa, comp) in w.iter().zip(&bd.components) {
        for (o, &c) in out.iter_mut().zip(comp.as_slice()) {
            *o += wa / s * c;
        }
    }
    Measure::new(space, out)
}

/// Random idempotent kernel: each recurrent class carries a random positive
/// distribution shared by its rows; each transient row copies the
/// distribution of one randomly chosen class.
pub fn random_idempotent_kernel<R: Rng>(
    classes: &[usize],
    transient: usize,
    rng: &mut R,
) -> Result<StochKernel> {
    let n = classes.iter().sum::<usize>() + transient;
    let mut points: Vec<usize> = (0..n).collect();
    points.shuffle(rng);
    let mut q = DMatrix::zeros(n, n);
    let mut dists = Vec::new();
    let mut start = 0;
    for &len in classes {
        let members = &points[start..start + len];
        let w = random_weights(len, rng);
        for &x in members {
            for (&y, &wy) in members.iter().zip(&w) {
                q[(x, y)] = wy;
            }
        }
        dists.push((members.to_vec(), w));
        start += len;
    }
    for &x in &points[start..] {
        let (members, w) = &dists[rng.gen_range(0..dists.len())];
        for (&y, &wy) in members.iter().zip(w) {
            q[(x, y)] = wy;
        }
    }
    StochKernel::new(FiniteSpace::indexed(n)?, q)
}

/// Euclidean distances between random points in the unit square.
pub fn random_euclidean_metric<R: Rng>(n: usize, rng: &mut R) -> Result<GroundMetric> {
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen(), rng.gen())).collect();
    let d = DMatrix::from_fn(n, n, |i, j| {
        let (dx, dy) = (pts[i].0 - pts[j].0, pts[i].1 - pts[j].1);
        if i == j {
            0.0
        } else {
            (dx * dx + dy * dy).sqrt()
        }
    });
    GroundMetric::new(FiniteSpace::indexed(n)?, d)
}

/// `d_G(x, y)`: mean of `d(gx, gy)` over the group generated by the action.
pub fn average_metric(d: &GroundMetric, action: &GroupAction) -> Result<GroundMetric> {
    let n = d.space.len();
    let group = generate_group(&action.perms(), n, GROUP_CAP)?;
    let mut elems: Vec<&Permutation> = group.iter().collect();
    elems.sort_by(|a, b| a.images().cmp(b.images()));
    let m = elems.len() as f64;
    let avg = DMatrix::from_fn(n, n, |x, y| {
        elems.iter().map(|g| d.d[(g.apply(x), g.apply(y))]).sum::<f64>() / m
    });
    GroundMetric::new(d.space.clone(), avg)
}

/// Builds the instance described by `spec`; identical specs give identical
/// instances.
pub fn generate_instance(spec: &InstanceSpec) -> Result<Instance> {
    let n = spec.n();
    if n == 0 {
        return Err(Error::Parse("instance needs at least one point".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let space = FiniteSpace::indexed(n)?;
    let (simplex, restriction) = match &spec.family {
        InstanceFamily::Permutation { .. } | InstanceFamily::MixedPermutation { .. } => {
            let cycles = match &spec.family {
                InstanceFamily::Permutation { cycles } => cycles.clone(),
                InstanceFamily::MixedPermutation { max_cycles, .. } => {
                    random_cycle_type(n, *max_cycles, &mut rng)
                }
                InstanceFamily::Kernel { .. } => unreachable!(),
            };
            if cycles.contains(&0) {
                return Err(Error::Parse("cycle lengths must be positive".into()));
            }
            let g = random_permutation(&cycles, &mut rng)?;
            let action = GroupAction::new(space.clone(), vec![("g0".into(), g)])?;
            let r = invariance_restriction(&action)?;
            (SimplexSpec::GroupInvariant(action), r)
        }
        InstanceFamily::Kernel { classes, transient } => {
            if classes.is_empty() || classes.contains(&0) {
                return Err(Error::Parse("kernel instance needs non-empty classes".into()));
            }
            let q = random_idempotent_kernel(classes, *transient, &mut rng)?;
            let r = stationarity_restriction(&q, &q)?;
            (SimplexSpec::KernelStationary(q), r)
        }
    };
    let c = DMatrix::from_fn(n, n, |_, _| rng.gen::<f64>());
    let cost = CostMatrix::new(space.clone(), space.clone(), c)?;
    let bd = ergodic::boundary(&simplex)?;
    let mu = random_member(&bd, &mut rng)?;
    let nu = random_member(&bd, &mut rng)?;
    Ok(Instance {
        space,
        spec: simplex,
        restriction,
        cost,
        mu,
        nu,
    })
}

/// `count` random members of the simplex, deterministic in `seed`.
pub fn sample_members(spec: &SimplexSpec, count: usize, seed: u64) -> Result<Vec<Measure>> {
    let bd = ergodic::boundary(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_member(&bd, &mut rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Validate;

    fn sp(n: usize) -> FiniteSpace {
        FiniteSpace::indexed(n).unwrap()
    }

    fn block_metric() -> GroundMetric {
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

    fn c3x2() -> GroupAction {
        GroupAction::cyclic(6, "(0 1 2)(3 4 5)").unwrap()
    }

    fn mix(a: f64) -> Measure {
        let b = 1.0 - a;
        Measure::new(sp(6), vec![a / 3.0, a / 3.0, a / 3.0, b / 3.0, b / 3.0, b / 3.0]).unwrap()
    }

    #[test]
    fn qopt_table_c3x2() {
        let a = c3x2();
        let spec = SimplexSpec::GroupInvariant(a.clone());
        let r = invariance_restriction(&a).unwrap();
        let t = build_qopt(&spec, &spec, &block_metric().cost_pow(1.0), &r).unwrap();
        assert!((t.values.clone() - DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 2.0, 0.0])).amax() < 1e-12);
        assert!(t.plans.iter().flatten().all(Option::is_some));
    }

    #[test]
    fn qopt_table_between_diracs_is_cost() {
        let s = sp(3);
        let spec = SimplexSpec::Full(s.clone());
        let r = LinearRestriction::unconstrained(spec.clone(), spec.clone());
        let c = CostMatrix::new(s.clone(), s, DMatrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64 * 0.1)).unwrap();
        let t = build_qopt(&spec, &spec, &c, &r).unwrap();
        assert!((t.values - &c.c).amax() < 1e-15);
    }

    #[test]
    fn decomposition_c3x2_worked_pair() {
        let a = c3x2();
        let r = invariance_restriction(&a).unwrap();
        let rep = verify_decomposition(&mix(0.5), &mix(0.25), &block_metric().cost_pow(1.0), &r).unwrap();
        assert!((rep.lhs - 0.5).abs() < 1e-12);
        assert!((rep.rhs - 0.5).abs() < 1e-12);
        assert!(rep.passed(TAU_THM));
        assert!(rep.split_rectangles > 0);
    }

    #[test]
    fn decomposition_of_equal_marginals_is_zero() {
        let a = c3x2();
        let r = invariance_restriction(&a).unwrap();
        let rep = verify_decomposition(&mix(0.7), &mix(0.7), &block_metric().cost_pow(2.0), &r).unwrap();
        assert!(rep.lhs.abs() < 1e-12 && rep.rhs.abs() < 1e-12);
    }

    #[test]
    fn decomposition_unconstrained_is_plain_ot() {
        let s = sp(4);
        let spec = SimplexSpec::Full(s.clone());
        let r = LinearRestriction::unconstrained(spec.clone(), spec);
        let c = CostMatrix::new(s.clone(), s.clone(), DMatrix::from_fn(4, 4, |i, j| ((i * 7 + j * 3) % 5) as f64)).unwrap();
        let mu = Measure::new(s.clone(), vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let nu = Measure::new(s, vec![0.4, 0.3, 0.2, 0.1]).unwrap();
        let rep = verify_decomposition(&mu, &nu, &c, &r).unwrap();
        assert!(rep.gap < 1e-12);
        assert!((rep.lhs - rep.unconstrained).abs() < 1e-12);
    }

    #[test]
    fn generated_instances_are_reproducible() {
        let s = InstanceSpec::permutation(&[3, 3], 42);
        assert_eq!(generate_instance(&s).unwrap(), generate_instance(&s).unwrap());
        let k = InstanceSpec::kernel(&[1, 1], 2, 42);
        assert_eq!(generate_instance(&k).unwrap(), generate_instance(&k).unwrap());
    }

    #[test]
    fn cycle_type_controls_components() {
        let inst = generate_instance(&InstanceSpec::permutation(&[3, 3], 1)).unwrap();
        assert_eq!(ergodic::boundary(&inst.spec).unwrap().len(), 2);
        let inst = generate_instance(&InstanceSpec::permutation(&[4, 2, 1], 1)).unwrap();
        assert_eq!(ergodic::boundary(&inst.spec).unwrap().len(), 3);
    }

    #[test]
    fn mixed_cycle_types_respect_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 1..13 {
            for _ in 0..20 {
                let t = random_cycle_type(n, 4, &mut rng);
                assert_eq!(t.iter().sum::<usize>(), n);
                assert!(!t.is_empty() && t.len() <= 4 && !t.contains(&0));
            }
        }
        let inst = generate_instance(&InstanceSpec::mixed(9, 4, 3)).unwrap();
        assert_eq!(inst.space.len(), 9);
        assert!((1..=4).contains(&ergodic::boundary(&inst.spec).unwrap().len()));
    }

    #[test]
    fn absorbing_kernel_components_are_diracs() {
        let inst = generate_instance(&InstanceSpec::kernel(&[1, 1], 3, 5)).unwrap();
        let bd = ergodic::boundary(&inst.spec).unwrap();
        assert_eq!(bd.len(), 2);
        for c in &bd.components {
            assert_eq!(c.support().len(), 1);
        }
    }

    #[test]
    fn generated_kernels_pass_the_kernel_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let q = random_idempotent_kernel(&[2, 3, 1], 2, &mut rng).unwrap();
            assert!(ergodic::check_ergodic_kernel(&q).ok);
            assert!(q.is_valid());
        }
    }

    #[test]
    fn random_instances_satisfy_theorem() {
        for seed in 0..10 {
            for spec in [
                InstanceSpec::permutation(&[3, 2, 1], seed),
                InstanceSpec::kernel(&[2, 2], 2, seed),
            ] {
                let inst = generate_instance(&spec).unwrap();
                let rep = verify_decomposition(&inst.mu, &inst.nu, &inst.cost, &inst.restriction).unwrap();
                assert!(rep.passed(TAU_THM), "seed {seed}: gap {}", rep.gap);
                assert!(rep.lhs >= rep.unconstrained - 1e-9);
            }
        }
    }

    #[test]
    fn averaged_metric_is_invariant() {
        let a = c3x2();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d = average_metric(&random_euclidean_metric(6, &mut rng).unwrap(), &a).unwrap();
        assert!(d.is_valid());
        let g = &a.generators[0].1;
        for x in 0..6 {
            for y in 0..6 {
                assert!((d.d[(g.apply(x), g.apply(y))] - d.d[(x, y)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn metric_decomposition_c3x2() {
        let a = c3x2();
        let spec = SimplexSpec::GroupInvariant(a.clone());
        let r = invariance_restriction(&a).unwrap();
        let samples = sample_members(&spec, 6, 11).unwrap();
        for p in [1.0, 2.0] {
            let rep = verify_metric_decomposition(&spec, &block_metric(), p, &r, &samples).unwrap();
            assert!(rep.passed(TAU_THM), "p = {p}: {rep:?}");
        }
    }

    #[test]
    fn metric_decomposition_single_orbit() {
        let a = GroupAction::cyclic(3, "(0 1 2)").unwrap();
        let spec = SimplexSpec::GroupInvariant(a.clone());
        let r = invariance_restriction(&a).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = random_euclidean_metric(3, &mut rng).unwrap();
        let samples = sample_members(&spec, 2, 0).unwrap();
        let rep = verify_metric_decomposition(&spec, &d, 1.0, &r, &samples).unwrap();
        assert_eq!(rep.max_gap, 0.0);
        assert!(rep.direct.amax() < 1e-12);
    }

    #[test]
    fn axiom_suite_flags_broken_triangle() {
        let s = sp(3);
        let samples: Vec<Measure> = (0..3).map(|i| Measure::dirac(s.clone(), i)).collect();
        let d = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 5.0, 1.0, 0.0, 1.0, 5.0, 1.0, 0.0]);
        let rep = check_metric_axioms(&samples, &d);
        assert!(!rep.passed);
        assert!((rep.triangle_max_excess - 3.0).abs() < 1e-15);
    }
}
