//! Kantorovich problems with and without linear restrictions, the
//! restricted Wasserstein distance, its boundary and lifted forms, gluing of
//! plans, and the decomposition of a restricted plan over product atoms.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::ergodic::{self, SimplexBoundary};
use crate::error::{Error, Result};
use crate::lp::{solve_lp, LpProblem, LpStatus, TAU_LP};
use crate::restriction::{check_geometric, LinearRestriction};
use crate::types::{
    fmt_num, ConstraintSet, CostMatrix, FiniteSpace, GroundMetric, Measure, SimplexSpec,
    TransportPlan, Validate, TAU_MASS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OtStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OtResult {
    pub status: OtStatus,
    /// Optimal cost; `+∞` when infeasible.
    pub value: f64,
    pub plan: Option<TransportPlan>,
    pub basis: Vec<usize>,
}

impl OtResult {
    fn infeasible() -> Self {
        Self {
            status: OtStatus::Infeasible,
            value: f64::INFINITY,
            plan: None,
            basis: Vec::new(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == OtStatus::Optimal
    }

    pub fn into_plan(self) -> Result<TransportPlan> {
        self.plan.ok_or(Error::Infeasible)
    }
}

/// Transport LP over `p[i][j]` at variable `i * n + j`. The last
/// column-marginal row is dropped since it is implied by the others.
/// Cells with `allowed == false` are left out of the program.
fn transport_lp(
    mu: &[f64],
    nu: &[f64],
    cost: &DMatrix<f64>,
    omega: Option<&ConstraintSet>,
    allowed: impl Fn(usize, usize) -> bool,
) -> Result<(LpProblem, Vec<(usize, usize)>)> {
    let (m, n) = (mu.len(), nu.len());
    let cells: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| allowed(i, j))
        .collect();
    let nv = cells.len();
    let mut rows = Vec::with_capacity(m + n + omega.map_or(0, |o| o.len()));
    let mut rhs = Vec::with_capacity(rows.capacity());
    for (i, &w) in mu.iter().enumerate() {
        rows.push(cells.iter().map(|&(a, _)| if a == i { 1.0 } else { 0.0 }).collect());
        rhs.push(w);
    }
    for (j, &w) in nu.iter().enumerate().take(n.saturating_sub(1)) {
        rows.push(cells.iter().map(|&(_, b)| if b == j { 1.0 } else { 0.0 }).collect());
        rhs.push(w);
    }
    if let Some(omega) = omega {
        for c in &omega.omegas {
            rows.push(cells.iter().map(|&(i, j)| c.omega[(i, j)]).collect());
            rhs.push(0.0);
        }
    }
    let objective = cells.iter().map(|&(i, j)| cost[(i, j)]).collect();
    debug_assert_eq!(rows.iter().map(Vec::len).max().unwrap_or(nv), nv);
    Ok((LpProblem::new(objective, rows, rhs)?, cells))
}

/// Clears pivoting residue: entries within `SNAP` of zero become zero.
const SNAP: f64 = 1e-14;

fn snap(v: f64) -> f64 {
    if v <= SNAP {
        0.0
    } else {
        v
    }
}

fn run_transport(
    mu: &Measure,
    nu: &Measure,
    cost: &CostMatrix,
    omega: Option<&ConstraintSet>,
) -> Result<OtResult> {
    let (lp, cells) = transport_lp(mu.as_slice(), nu.as_slice(), &cost.c, omega, |_, _| true)?;
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => {
            let x = sol.x.expect("optimal solution carries a point");
            let mut p = DMatrix::zeros(mu.len(), nu.len());
            for (&(i, j), &v) in cells.iter().zip(&x) {
                p[(i, j)] = snap(v);
            }
            let plan = TransportPlan::new(mu.space.clone(), nu.space.clone(), p)?;
            Ok(OtResult {
                status: OtStatus::Optimal,
                value: plan.cost(cost),
                plan: Some(plan),
                basis: sol.basis,
            })
        }
        LpStatus::Infeasible => Ok(OtResult::infeasible()),
        LpStatus::Unbounded => Err(Error::Internal(
            "transport program reported unbounded".into(),
        )),
    }
}

fn check_inputs(mu: &Measure, nu: &Measure, c: &CostMatrix) -> Result<()> {
    if c.row_space != mu.space || c.col_space != nu.space {
        return Err(Error::DimensionMismatch(format!(
            "cost is {}x{}, marginals have {} and {} points",
            c.c.nrows(),
            c.c.ncols(),
            mu.len(),
            nu.len()
        )));
    }
    mu.ensure_valid()?;
    nu.ensure_valid()?;
    c.ensure_valid()
}

/// Unconstrained Kantorovich problem.
pub fn solve_ot(mu: &Measure, nu: &Measure, c: &CostMatrix) -> Result<OtResult> {
    check_inputs(mu, nu, c)?;
    run_transport(mu, nu, c, None)
}

/// Kantorovich problem over `Π_R(μ, ν)`. Marginals must lie in the
/// restriction's simplexes; infeasibility is reported in the status.
pub fn solve_constrained_ot(
    mu: &Measure,
    nu: &Measure,
    c: &CostMatrix,
    r: &LinearRestriction,
) -> Result<OtResult> {
    check_inputs(mu, nu, c)?;
    if mu.space != *r.row_space() || nu.space != *r.col_space() {
        return Err(Error::DimensionMismatch(
            "marginals and restriction live on different spaces".into(),
        ));
    }
    ergodic::check_membership(mu, &r.mx_spec)?;
    ergodic::check_membership(nu, &r.my_spec)?;
    run_transport(mu, nu, c, Some(&r.omega))
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Parse(format!("exponent p = {p} must be a finite real ≥ 1")));
    }
    Ok(())
}

/// Restricted p-Wasserstein distance; `+∞` when `Π_R(μ, ν)` is empty.
pub fn wasserstein(
    mu: &Measure,
    nu: &Measure,
    d: &GroundMetric,
    p: f64,
    r: &LinearRestriction,
) -> Result<f64> {
    check_p(p)?;
    if r.row_space() != r.col_space() {
        return Err(Error::DimensionMismatch(
            "Wasserstein distance needs identical row and column spaces".into(),
        ));
    }
    let res = solve_constrained_ot(mu, nu, &d.cost_pow(p), r)?;
    Ok(match res.status {
        OtStatus::Optimal => res.value.max(0.0).powf(1.0 / p),
        OtStatus::Infeasible => f64::INFINITY,
    })
}

/// Restricted Wasserstein distances between all pairs of extreme points.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryMetricMatrix {
    pub components: Vec<Measure>,
    pub dbar: DMatrix<f64>,
}

pub fn boundary_metric(
    spec: &SimplexSpec,
    d: &GroundMetric,
    p: f64,
    r: &LinearRestriction,
) -> Result<BoundaryMetricMatrix> {
    check_p(p)?;
    let bd = ergodic::boundary(spec)?;
    let geo = check_geometric(r, &bd.components)?;
    if !geo.passed {
        let first = geo
            .diagonal_failures
            .iter()
            .chain(&geo.product_failures)
            .map(|f| f.label.clone())
            .chain(geo.transpose_failures.iter().cloned())
            .next()
            .unwrap_or_default();
        return Err(Error::NotGeometric(format!("first failing functional {first}")));
    }
    let k = bd.len();
    let cells: Vec<f64> = (0..k * k)
        .into_par_iter()
        .map(|idx| wasserstein(&bd.components[idx / k], &bd.components[idx % k], d, p, r))
        .collect::<Result<_>>()?;
    Ok(BoundaryMetricMatrix {
        components: bd.components,
        dbar: DMatrix::from_row_slice(k, k, &cells),
    })
}

/// Transport between weight vectors with a cost that may contain `+∞`
/// entries; infinite cells are excluded from the program.
/// Returns `(value, plan)`, value `+∞` when no finite-cost coupling exists.
pub fn solve_masked_ot(
    wx: &[f64],
    wy: &[f64],
    cost: &DMatrix<f64>,
) -> Result<(f64, Option<DMatrix<f64>>)> {
    if cost.nrows() != wx.len() || cost.ncols() != wy.len() {
        return Err(Error::DimensionMismatch(format!(
            "outer cost is {}x{}, weights have {} and {} entries",
            cost.nrows(),
            cost.ncols(),
            wx.len(),
            wy.len()
        )));
    }
    let (lp, cells) = transport_lp(wx, wy, cost, None, |i, j| cost[(i, j)].is_finite())?;
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => {
            let x = sol.x.expect("optimal solution carries a point");
            let mut plan = DMatrix::zeros(wx.len(), wy.len());
            for (&(i, j), &v) in cells.iter().zip(&x) {
                plan[(i, j)] = snap(v);
            }
            let value = plan.component_mul(&cost.map(|v| if v.is_finite() { v } else { 0.0 })).sum();
            Ok((value, Some(plan)))
        }
        LpStatus::Infeasible => Ok((f64::INFINITY, None)),
        LpStatus::Unbounded => Err(Error::Internal("outer program reported unbounded".into())),
    }
}

/// Lifted metric: Wasserstein distance between the boundary weights of
/// `μ` and `ν` with the boundary metric as ground distance.
pub fn lifted_metric(
    mu: &Measure,
    nu: &Measure,
    bm: &BoundaryMetricMatrix,
    spec: &SimplexSpec,
    p: f64,
) -> Result<f64> {
    check_p(p)?;
    let bd = ergodic::boundary(spec)?;
    if bd.len() != bm.components.len() {
        return Err(Error::DimensionMismatch(format!(
            "boundary metric has {} components, simplex has {}",
            bm.components.len(),
            bd.len()
        )));
    }
    let wx = ergodic::boundary_weights(mu, spec, &bd)?;
    let wy = ergodic::boundary_weights(nu, spec, &bd)?;
    let (value, _) = solve_masked_ot(&wx, &wy, &bm.dbar.map(|v| v.powf(p)))?;
    Ok(value.max(0.0).powf(1.0 / p))
}

/// Three-index table `γ[x][y][z]`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    pub dims: [usize; 3],
    pub data: Vec<f64>,
}

impl JointTable {
    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        let [_, b, c] = self.dims;
        self.data[(x * b + y) * c + z]
    }

    /// Marginal on the pair of axes `(a, b)`, `a < b`.
    pub fn project(&self, a: usize, b: usize) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dims[a], self.dims[b]);
        for x in 0..self.dims[0] {
            for y in 0..self.dims[1] {
                for z in 0..self.dims[2] {
                    let idx = [x, y, z];
                    out[(idx[a], idx[b])] += self.get(x, y, z);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gluing {
    pub gamma: JointTable,
    pub pi13: TransportPlan,
    pub max_violation: f64,
    pub feasible: bool,
}

/// Composition gluing `γ[x][y][z] = π12[x][y]·π23[y][z] / μ₂[y]` and the
/// induced plan `π13`, with a feasibility verdict against `r`.
pub fn glue_plans(
    pi12: &TransportPlan,
    pi23: &TransportPlan,
    r: &LinearRestriction,
) -> Result<Gluing> {
    let mid = pi12.col_marginal();
    let mid2 = pi23.row_marginal();
    if pi12.col_space != pi23.row_space {
        return Err(Error::DimensionMismatch("middle spaces differ".into()));
    }
    let dev = mid.max_abs_diff(&mid2);
    if dev > TAU_MASS {
        return Err(Error::MarginalMismatch(format!(
            "Pr₂(π12) and Pr₁(π23) differ by {}",
            fmt_num(dev)
        )));
    }
    if pi12.row_space != *r.row_space() || pi23.col_space != *r.col_space() {
        return Err(Error::DimensionMismatch(
            "outer spaces differ from the restriction's spaces".into(),
        ));
    }
    let dims = [pi12.p.nrows(), pi12.p.ncols(), pi23.p.ncols()];
    let mut data = vec![0.0; dims[0] * dims[1] * dims[2]];
    for x in 0..dims[0] {
        for y in 0..dims[1] {
            if mid.w[y] <= TAU_MASS {
                continue;
            }
            let a = pi12.p[(x, y)] / mid.w[y];
            for z in 0..dims[2] {
                data[(x * dims[1] + y) * dims[2] + z] = a * pi23.p[(y, z)];
            }
        }
    }
    let gamma = JointTable { dims, data };
    let pi13 = TransportPlan::new(pi12.row_space.clone(), pi23.col_space.clone(), gamma.project(0, 2))?;
    let max_violation = r.max_violation(&pi13);
    Ok(Gluing {
        gamma,
        feasible: max_violation <= TAU_LP,
        max_violation,
        pi13,
    })
}

/// A restricted plan written as a mixture of conditional plans on the atoms
/// of the product ergodic partition.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanDecomposition {
    pub components: Vec<TransportPlan>,
    pub weights: Vec<f64>,
    /// Atom of each component.
    pub atoms: Vec<usize>,
    /// Atom of each product cell, `None` for transient cells.
    pub atom_of: Vec<Option<usize>>,
    /// Boundary classes `(α, β)` of each component's marginals.
    pub marginal_classes: Vec<(usize, usize)>,
    /// `max(|Pr_X − ξ_α|∞, |Pr_Y − η_β|∞)` per component.
    pub marginal_error: Vec<f64>,
}

impl PlanDecomposition {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let (r, c) = self.components[0].p.shape();
        self.components
            .iter()
            .zip(&self.weights)
            .fold(DMatrix::zeros(r, c), |acc, (comp, &w)| acc + &comp.p * w)
    }
}

fn rectangle_classes(
    atom: &[usize],
    ny: usize,
    bx: &SimplexBoundary,
    by: &SimplexBoundary,
) -> Option<(usize, usize)> {
    let key = |c: usize| Some((bx.class_of[c / ny]?, by.class_of[c % ny]?));
    let first = key(atom[0])?;
    atom.iter().all(|&c| key(c) == Some(first)).then_some(first)
}

pub fn decompose_plan(plan: &TransportPlan, r: &LinearRestriction) -> Result<PlanDecomposition> {
    let part = r.product_partition()?;
    if plan.row_space != *r.row_space() || plan.col_space != *r.col_space() {
        return Err(Error::DimensionMismatch(
            "plan and restriction live on different spaces".into(),
        ));
    }
    plan.ensure_valid()?;
    if let Some((v, label)) = r.omega.max_violation(plan) {
        if v > TAU_LP {
            return Err(Error::NotFeasible(format!(
                "⟨ω, π⟩ = {} for {label}",
                fmt_num(v)
            )));
        }
    }
    let ny = r.col_space().len();
    let transient: f64 = (0..plan.p.len())
        .filter(|&c| part.atom_of[c].is_none())
        .map(|c| plan.cell(c))
        .sum();
    if transient > TAU_MASS {
        return Err(Error::NotFeasible(format!(
            "{} of the mass sits on transient cells",
            fmt_num(transient)
        )));
    }
    let bx = ergodic::boundary(&r.mx_spec)?;
    let by = ergodic::boundary(&r.my_spec)?;
    let mut dec = PlanDecomposition {
        components: Vec::new(),
        weights: Vec::new(),
        atoms: Vec::new(),
        atom_of: part.atom_of.clone(),
        marginal_classes: Vec::new(),
        marginal_error: Vec::new(),
    };
    for (a, atom) in part.atoms.iter().enumerate() {
        let mass: f64 = atom.iter().map(|&c| plan.cell(c)).sum();
        if mass <= TAU_MASS {
            continue;
        }
        let (alpha, beta) = rectangle_classes(atom, ny, &bx, &by).ok_or_else(|| {
            Error::Internal(format!("product atom {a} straddles marginal classes"))
        })?;
        let mut p = DMatrix::zeros(plan.p.nrows(), ny);
        for &c in atom {
            p[(c / ny, c % ny)] = plan.cell(c) / mass;
        }
        let comp = TransportPlan::new(plan.row_space.clone(), plan.col_space.clone(), p)?;
        let err = comp
            .row_marginal()
            .max_abs_diff(&bx.components[alpha])
            .max(comp.col_marginal().max_abs_diff(&by.components[beta]));
        dec.components.push(comp);
        dec.weights.push(mass);
        dec.atoms.push(a);
        dec.marginal_classes.push((alpha, beta));
        dec.marginal_error.push(err);
    }
    Ok(dec)
}

/// Cost matrix on an indexed space from raw rows, mainly for tests and
/// fixtures.
pub fn cost_from_rows(space: &FiniteSpace, rows: &[Vec<f64>]) -> Result<CostMatrix> {
    CostMatrix::from_rows(space.clone(), space.clone(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::restriction::invariance_restriction;
    use crate::types::{transpose_plan, GroupAction};

    fn sp(n: usize) -> FiniteSpace {
        FiniteSpace::indexed(n).unwrap()
    }

    /// 0 within a 3-cycle block, 2 across blocks (and 1 between distinct
    /// points of the same block).
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
    fn equal_marginals_cost_nothing() {
        let mu = mix(0.3);
        let d = block_metric();
        let res = solve_ot(&mu, &mu, &d.cost_pow(1.0)).unwrap();
        assert_eq!(res.value, 0.0);
    }

    #[test]
    fn diracs_have_unique_plan() {
        let s = sp(2);
        let c = cost_from_rows(&s, &[vec![0.0, 3.0], vec![3.0, 0.0]]).unwrap();
        let res = solve_ot(&Measure::dirac(s.clone(), 0), &Measure::dirac(s, 1), &c).unwrap();
        assert_eq!(res.value, 3.0);
        assert_eq!(res.plan.unwrap().p[(0, 1)], 1.0);
    }

    #[test]
    fn invariant_diagonal_is_free() {
        let r = invariance_restriction(&c3x2()).unwrap();
        let mu = mix(0.5);
        let res = solve_constrained_ot(&mu, &mu, &block_metric().cost_pow(1.0), &r).unwrap();
        assert!(res.value.abs() < 1e-12);
        let plan = res.plan.unwrap();
        assert!((plan.p - mu.diagonal_plan().p).amax() < 1e-12);
    }

    #[test]
    fn cross_block_transport_costs_two() {
        let r = invariance_restriction(&c3x2()).unwrap();
        let res = solve_constrained_ot(&mix(1.0), &mix(0.0), &block_metric().cost_pow(1.0), &r).unwrap();
        assert!((res.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_omega_matches_plain_ot() {
        let s = sp(6);
        let r = LinearRestriction::unconstrained(SimplexSpec::Full(s.clone()), SimplexSpec::Full(s));
        let c = block_metric().cost_pow(2.0);
        let a = solve_ot(&mix(0.2), &mix(0.7), &c).unwrap();
        let b = solve_constrained_ot(&mix(0.2), &mix(0.7), &c, &r).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn non_member_marginal_rejected() {
        let r = invariance_restriction(&c3x2()).unwrap();
        let bad = Measure::dirac(sp(6), 0);
        let err = solve_constrained_ot(&bad, &mix(0.5), &block_metric().cost_pow(1.0), &r).unwrap_err();
        assert!(matches!(err, Error::NotInSimplex(_)));
    }

    #[test]
    fn infeasible_restriction_reported() {
        let s = sp(2);
        let mut omega = ConstraintSet::empty(s.clone(), s.clone());
        omega.push("pin", DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])).unwrap();
        let r = LinearRestriction::new(omega, SimplexSpec::Full(s.clone()), SimplexSpec::Full(s.clone()), None, None).unwrap();
        let d0 = Measure::dirac(s.clone(), 0);
        let c = cost_from_rows(&s, &[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let res = solve_constrained_ot(&d0, &d0, &c, &r).unwrap();
        assert_eq!(res.status, OtStatus::Infeasible);
        assert!(res.value.is_infinite());
        let d = GroundMetric::from_rows(s, &[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(wasserstein(&d0, &d0, &d, 1.0, &r).unwrap(), f64::INFINITY);
    }

    #[test]
    fn wasserstein_worked_values() {
        let r = invariance_restriction(&c3x2()).unwrap();
        let d = block_metric();
        let w1 = wasserstein(&mix(0.5), &mix(0.25), &d, 1.0, &r).unwrap();
        assert!((w1 - 0.5).abs() < 1e-12);
        // 0.25 of the mass crosses at squared distance 4.
        let w2 = wasserstein(&mix(0.5), &mix(0.25), &d, 2.0, &r).unwrap();
        assert!((w2 - 1.0).abs() < 1e-12);
        assert_eq!(wasserstein(&mix(0.4), &mix(0.4), &d, 1.0, &r).unwrap(), 0.0);
        assert!(wasserstein(&mix(0.4), &mix(0.4), &d, 0.5, &r).is_err());
    }

    #[test]
    fn boundary_metric_c3x2() {
        let a = c3x2();
        let r = invariance_restriction(&a).unwrap();
        let bm = boundary_metric(&SimplexSpec::GroupInvariant(a), &block_metric(), 1.0, &r).unwrap();
        assert!((bm.dbar.clone() - DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 2.0, 0.0])).amax() < 1e-12);
    }

    #[test]
    fn boundary_metric_of_diracs_is_ground_metric() {
        let s = sp(3);
        let d = GroundMetric::from_rows(s.clone(), &[vec![0.0, 1.0, 1.5], vec![1.0, 0.0, 2.0], vec![1.5, 2.0, 0.0]]).unwrap();
        let spec = SimplexSpec::Full(s.clone());
        let r = LinearRestriction::unconstrained(spec.clone(), spec.clone());
        let bm = boundary_metric(&spec, &d, 1.0, &r).unwrap();
        assert_eq!(bm.dbar, d.d);
    }

    #[test]
    fn single_orbit_boundary_is_a_point() {
        let a = GroupAction::cyclic(4, "(0 1 2 3)").unwrap();
        let r = invariance_restriction(&a).unwrap();
        let d = GroundMetric::new(sp(4), DMatrix::from_fn(4, 4, |i, j| if i == j { 0.0 } else { 1.0 })).unwrap();
        let spec = SimplexSpec::GroupInvariant(a);
        let bm = boundary_metric(&spec, &d, 1.0, &r).unwrap();
        assert_eq!(bm.dbar.shape(), (1, 1));
        assert_eq!(bm.dbar[(0, 0)], 0.0);
        let u = Measure::new(sp(4), vec![0.25; 4]).unwrap();
        assert_eq!(lifted_metric(&u, &u, &bm, &spec, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn lifted_metric_worked_value() {
        let a = c3x2();
        let spec = SimplexSpec::GroupInvariant(a);
        let bm = BoundaryMetricMatrix {
            components: ergodic::boundary(&spec).unwrap().components,
            dbar: DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 2.0, 0.0]),
        };
        let v = lifted_metric(&mix(0.5), &mix(0.25), &bm, &spec, 1.0).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
        assert_eq!(lifted_metric(&mix(0.3), &mix(0.3), &bm, &spec, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn masked_outer_problem_skips_infinite_cells() {
        let cost = DMatrix::from_row_slice(2, 2, &[0.0, f64::INFINITY, 1.0, 0.0]);
        let (v, plan) = solve_masked_ot(&[0.25, 0.75], &[0.5, 0.5], &cost).unwrap();
        assert!((v - 0.25).abs() < 1e-12);
        assert_eq!(plan.unwrap()[(0, 1)], 0.0);
        let (v, plan) = solve_masked_ot(&[1.0, 0.0], &[0.0, 1.0], &cost).unwrap();
        assert!(v.is_infinite() && plan.is_none());
    }

    #[test]
    fn gluing_identity_plans() {
        let r = invariance_restriction(&c3x2()).unwrap();
        let diag = mix(0.4).diagonal_plan();
        let g = glue_plans(&diag, &diag, &r).unwrap();
        assert!(g.feasible);
        assert!((g.pi13.p.clone() - diag.p.clone()).amax() < 1e-15);
        assert!((g.gamma.project(0, 1) - &diag.p).amax() < 1e-15);
        assert!((g.gamma.project(1, 2) - &diag.p).amax() < 1e-15);
    }

    #[test]
    fn gluing_products_gives_product() {
        let r = invariance_restriction(&c3x2()).unwrap();
        let (m1, m2, m3) = (mix(0.2), mix(0.6), mix(0.9));
        let g = glue_plans(&m1.product(&m2), &m2.product(&m3), &r).unwrap();
        assert!(g.feasible);
        assert!((g.pi13.p - m1.product(&m3).p).amax() < 1e-15);
    }

    #[test]
    fn gluing_rejects_mismatched_middle() {
        let r = invariance_restriction(&c3x2()).unwrap();
        let err = glue_plans(&mix(0.2).diagonal_plan(), &mix(0.3).diagonal_plan(), &r).unwrap_err();
        assert!(matches!(err, Error::MarginalMismatch(_)));
    }

    #[test]
    fn product_of_block_uniforms_splits_into_offsets() {
        let r = invariance_restriction(&c3x2()).unwrap();
        let u1 = Measure::uniform_on(sp(6), &[0, 1, 2]);
        let dec = decompose_plan(&u1.product(&u1), &r).unwrap();
        assert_eq!(dec.components.len(), 3);
        for (c, w) in dec.components.iter().zip(&dec.weights) {
            assert!((w - 1.0 / 3.0).abs() < 1e-15);
            assert!(c.row_marginal().max_abs_diff(&u1) < 1e-15);
            assert!(c.col_marginal().max_abs_diff(&u1) < 1e-15);
            // offset-k plan: one cell per row
            assert_eq!(c.p.iter().filter(|&&v| v > 0.0).count(), 3);
        }
        assert_eq!(dec.marginal_classes, vec![(0, 0); 3]);
        assert!((dec.reconstruct() - u1.product(&u1).p).amax() <= 1e-15);
    }

    #[test]
    fn single_orbit_plan_is_extreme() {
        let r = invariance_restriction(&c3x2()).unwrap();
        let orbit_plan = r.product_extremes().unwrap()[0].clone();
        let dec = decompose_plan(&orbit_plan, &r).unwrap();
        assert_eq!(dec.weights, vec![1.0]);
    }

    #[test]
    fn infeasible_plan_rejected() {
        let r = invariance_restriction(&c3x2()).unwrap();
        let plan = Measure::dirac(sp(6), 0).diagonal_plan();
        assert!(matches!(decompose_plan(&plan, &r), Err(Error::NotFeasible(_))));
    }

    #[test]
    fn transposed_optimal_plan_stays_feasible() {
        let r = invariance_restriction(&c3x2()).unwrap();
        let c = CostMatrix::new(sp(6), sp(6), DMatrix::from_fn(6, 6, |i, j| ((i * 5 + j * 3) % 7) as f64)).unwrap();
        let plan = solve_constrained_ot(&mix(0.2), &mix(0.7), &c, &r).unwrap().into_plan().unwrap();
        assert!(r.max_violation(&transpose_plan(&plan)) <= TAU_LP);
    }
}
