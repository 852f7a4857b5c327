//! Linear restrictions `R = (Ω, M^X, M^Y)` on transport plans and checkers
//! for weak regularity, geometricity, coherency and ergodic decomposability.
//!
//! Product cells `(x, y)` are indexed `x * |Y| + y` throughout.

use std::collections::HashSet;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::ergodic::{self, averaging_kernel, check_ergodic_kernel, orbit_decompose};
use crate::error::{Error, Result};
use crate::linalg::RowSpace;
use crate::lp::TAU_LP;
use crate::types::{
    generate_group, ConstraintSet, FiniteSpace, GroupAction, Measure, Permutation, SimplexSpec,
    StochKernel, TransportPlan, TAU_MASS,
};

/// Numerical rank tolerance for span tests.
pub const TAU_RANK: f64 = 1e-8;

/// Largest group enumerated when comparing generated subgroups.
pub const GROUP_CAP: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearRestriction {
    pub omega: ConstraintSet,
    pub mx_spec: SimplexSpec,
    pub my_spec: SimplexSpec,
    pub product_action: Option<GroupAction>,
    pub product_kernel: Option<StochKernel>,
}

/// Atoms of the product ergodic partition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductPartition {
    pub atoms: Vec<Vec<usize>>,
    /// Atom containing each cell; `None` for transient cells.
    pub atom_of: Vec<Option<usize>>,
}

impl LinearRestriction {
    pub fn new(
        omega: ConstraintSet,
        mx_spec: SimplexSpec,
        my_spec: SimplexSpec,
        product_action: Option<GroupAction>,
        product_kernel: Option<StochKernel>,
    ) -> Result<Self> {
        let (nx, ny) = (mx_spec.space().len(), my_spec.space().len());
        if omega.row_space != *mx_spec.space() || omega.col_space != *my_spec.space() {
            return Err(Error::DimensionMismatch(
                "constraint set and marginal simplexes live on different spaces".into(),
            ));
        }
        if let Some(a) = &product_action {
            if a.space.len() != nx * ny {
                return Err(Error::DimensionMismatch(format!(
                    "product action on {} cells, product space has {}",
                    a.space.len(),
                    nx * ny
                )));
            }
        }
        if let Some(k) = &product_kernel {
            if k.len() != nx * ny {
                return Err(Error::DimensionMismatch(format!(
                    "product kernel on {} cells, product space has {}",
                    k.len(),
                    nx * ny
                )));
            }
            let check = check_ergodic_kernel(k);
            if !check.ok {
                return Err(Error::NotErgodicKernel(check.offending));
            }
        }
        Ok(Self {
            omega,
            mx_spec,
            my_spec,
            product_action,
            product_kernel,
        })
    }

    /// Empty Ω. Between two full simplexes the product structure is the
    /// identity kernel (every cell is its own atom).
    pub fn unconstrained(mx_spec: SimplexSpec, my_spec: SimplexSpec) -> Self {
        let omega = ConstraintSet::empty(mx_spec.space().clone(), my_spec.space().clone());
        let product_kernel = match (&mx_spec, &my_spec) {
            (SimplexSpec::Full(a), SimplexSpec::Full(b)) => Some(StochKernel::identity(a.product(b))),
            _ => None,
        };
        Self {
            omega,
            mx_spec,
            my_spec,
            product_action: None,
            product_kernel,
        }
    }

    pub fn row_space(&self) -> &FiniteSpace {
        self.mx_spec.space()
    }

    pub fn col_space(&self) -> &FiniteSpace {
        self.my_spec.space()
    }

    pub fn has_product_structure(&self) -> bool {
        self.product_action.is_some() || self.product_kernel.is_some()
    }

    pub fn product_partition(&self) -> Result<ProductPartition> {
        if let Some(a) = &self.product_action {
            let part = orbit_decompose(a);
            return Ok(ProductPartition {
                atom_of: part.orbit_of.into_iter().map(Some).collect(),
                atoms: part.orbits,
            });
        }
        if let Some(k) = &self.product_kernel {
            let s = ergodic::stationary_components(k)?;
            return Ok(ProductPartition {
                atoms: s.classes,
                atom_of: s.class_of,
            });
        }
        Err(Error::MissingProductStructure)
    }

    /// Extreme points of the product simplex `M`, one per atom.
    pub fn product_extremes(&self) -> Result<Vec<TransportPlan>> {
        let (xs, ys) = (self.row_space().clone(), self.col_space().clone());
        let ny = ys.len();
        let as_plan = |m: &Measure| {
            TransportPlan::new(
                xs.clone(),
                ys.clone(),
                DMatrix::from_fn(xs.len(), ny, |i, j| m.w[i * ny + j]),
            )
        };
        if let Some(a) = &self.product_action {
            return orbit_decompose(a)
                .orbits
                .iter()
                .map(|o| as_plan(&Measure::uniform_on(a.space.clone(), o)))
                .collect();
        }
        if let Some(k) = &self.product_kernel {
            return ergodic::stationary_components(k)?
                .components
                .iter()
                .map(as_plan)
                .collect();
        }
        Err(Error::MissingProductStructure)
    }

    /// Largest `|⟨ω, π⟩|` over Ω, zero when Ω is empty.
    pub fn max_violation(&self, plan: &TransportPlan) -> f64 {
        self.omega.max_violation(plan).map_or(0.0, |(v, _)| v)
    }
}

fn cell_matrix(nx: usize, ny: usize, cells: &[(usize, f64)]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(nx, ny);
    for &(c, v) in cells {
        m[(c / ny, c % ny)] += v;
    }
    m
}

/// Product action `(x, y) ↦ (g(x), h(y))` for each labelled pair.
fn product_action(
    xs: &FiniteSpace,
    ys: &FiniteSpace,
    pairs: &[(String, Permutation, Permutation)],
) -> Result<GroupAction> {
    let ny = ys.len();
    let gens = pairs
        .iter()
        .map(|(label, g, h)| {
            let image = (0..xs.len() * ny)
                .map(|c| g.apply(c / ny) * ny + h.apply(c % ny))
                .collect();
            Ok((label.clone(), Permutation::from_images(image)?))
        })
        .collect::<Result<Vec<_>>>()?;
    GroupAction::new(xs.product(ys), gens)
}

/// Ω as a spanning set of `1_c − 1_{h(c)}`: one breadth-first spanning tree
/// per product orbit, rooted at the orbit's smallest cell.
fn orbit_constraints(
    prefix: &str,
    act: &GroupAction,
    xs: &FiniteSpace,
    ys: &FiniteSpace,
) -> Result<ConstraintSet> {
    let (nx, ny) = (xs.len(), ys.len());
    let mut omega = ConstraintSet::empty(xs.clone(), ys.clone());
    let part = orbit_decompose(act);
    for orbit in &part.orbits {
        let mut seen = HashSet::from([orbit[0]]);
        let mut frontier = vec![orbit[0]];
        let mut k = 0;
        while k < frontier.len() {
            let c = frontier[k];
            for (label, h) in &act.generators {
                let d = h.apply(c);
                if seen.insert(d) {
                    frontier.push(d);
                    omega.push(
                        format!("{prefix}:{label}:({},{})", xs.label(c / ny), ys.label(c % ny)),
                        cell_matrix(nx, ny, &[(c, 1.0), (d, -1.0)]),
                    )?;
                }
            }
            k += 1;
        }
    }
    Ok(omega)
}

/// Plans invariant under the diagonal action `g(x, y) = (g(x), g(y))`.
pub fn invariance_restriction(action: &GroupAction) -> Result<LinearRestriction> {
    let xs = &action.space;
    let pairs: Vec<_> = action
        .generators
        .iter()
        .map(|(l, g)| (l.clone(), g.clone(), g.clone()))
        .collect();
    let act = product_action(xs, xs, &pairs)?;
    let omega = orbit_constraints("invariance", &act, xs, xs)?;
    LinearRestriction::new(
        omega,
        SimplexSpec::GroupInvariant(action.clone()),
        SimplexSpec::GroupInvariant(action.clone()),
        Some(act),
        None,
    )
}

/// Plans invariant under a subgroup `H ⊆ G ⊕ G` given by generating pairs.
/// Both projections of `H` must generate the acting group `G`.
pub fn subgroup_restriction(
    action: &GroupAction,
    pair_generators: &[(Permutation, Permutation)],
) -> Result<LinearRestriction> {
    let n = action.space.len();
    if let Some((g, h)) = pair_generators
        .iter()
        .find(|(g, h)| g.len() != n || h.len() != n)
    {
        return Err(Error::DimensionMismatch(format!(
            "pair ({g}, {h}) does not act on {n} points"
        )));
    }
    let full = generate_group(&action.perms(), n, GROUP_CAP)?;
    for (side, pick) in [("first", 0usize), ("second", 1)] {
        let gens: Vec<Permutation> = pair_generators
            .iter()
            .map(|(g, h)| if pick == 0 { g.clone() } else { h.clone() })
            .collect();
        let proj = generate_group(&gens, n, GROUP_CAP)?;
        if proj != full {
            return Err(Error::ProjectionNotFull(format!(
                "{side} projection generates {} elements, acting group has {}",
                proj.len(),
                full.len()
            )));
        }
    }
    let xs = &action.space;
    let pairs: Vec<_> = pair_generators
        .iter()
        .enumerate()
        .map(|(k, (g, h))| (format!("h{k}"), g.clone(), h.clone()))
        .collect();
    let act = product_action(xs, xs, &pairs)?;
    let omega = orbit_constraints("subgroup", &act, xs, xs)?;
    LinearRestriction::new(
        omega,
        SimplexSpec::GroupInvariant(action.clone()),
        SimplexSpec::GroupInvariant(action.clone()),
        Some(act),
        None,
    )
}

/// Plans stationary under `Q_M = Q_X ⊗ Q_Y`:
/// Ω = {1_c − Q_M(1_c)}, pruned of zero functionals.
pub fn stationarity_restriction(qx: &StochKernel, qy: &StochKernel) -> Result<LinearRestriction> {
    for q in [qx, qy] {
        let check = check_ergodic_kernel(q);
        if !check.ok {
            return Err(Error::NotErgodicKernel(check.offending));
        }
    }
    let (nx, ny) = (qx.len(), qy.len());
    let cells = nx * ny;
    let qm = DMatrix::from_fn(cells, cells, |r, c| {
        qx.q[(r / ny, c / ny)] * qy.q[(r % ny, c % ny)]
    });
    let mut omega = ConstraintSet::empty(qx.space.clone(), qy.space.clone());
    for c in 0..cells {
        // (Q_M 1_c)(x, y) = q_M[(x, y)][c]
        let mut w = DMatrix::from_fn(nx, ny, |x, y| -qm[(x * ny + y, c)]);
        w[(c / ny, c % ny)] += 1.0;
        if w.amax() > TAU_MASS {
            omega.push(
                format!("stationarity:({},{})", qx.space.label(c / ny), qy.space.label(c % ny)),
                w,
            )?;
        }
    }
    let product = StochKernel::new(qx.space.product(&qy.space), qm)?;
    LinearRestriction::new(
        omega,
        SimplexSpec::KernelStationary(qx.clone()),
        SimplexSpec::KernelStationary(qy.clone()),
        None,
        Some(product),
    )
}

/// Stationarity restriction built from the orbit-averaging kernels of two
/// actions.
pub fn averaged_stationarity_restriction(
    ax: &GroupAction,
    ay: &GroupAction,
) -> Result<LinearRestriction> {
    stationarity_restriction(&averaging_kernel(ax), &averaging_kernel(ay))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintFailure {
    pub sample: usize,
    pub other: Option<usize>,
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakRegularityReport {
    pub closedness: &'static str,
    pub continuity: &'static str,
    pub samples: usize,
    pub failures: Vec<ConstraintFailure>,
    pub passed: bool,
}

const FINITE_CLOSED: &str = "automatic: simplexes of a finite space are compact";
const FINITE_CONTINUOUS: &str = "automatic: linear functionals on a finite space are continuous";

fn product_failures(
    r: &LinearRestriction,
    mu: &Measure,
    nu: &Measure,
    i: usize,
    j: Option<usize>,
    out: &mut Vec<ConstraintFailure>,
) {
    let plan = mu.product(nu);
    for c in &r.omega.omegas {
        let v = plan.pair(&c.omega);
        if v.abs() > TAU_LP {
            out.push(ConstraintFailure {
                sample: i,
                other: j,
                label: c.label.clone(),
                value: v,
            });
        }
    }
}

/// Nonemptiness of `Π_R(μ, ν)` witnessed by the product plan `μ⊗ν`.
pub fn check_weak_regularity(
    r: &LinearRestriction,
    samples: &[(Measure, Measure)],
) -> WeakRegularityReport {
    let mut failures = Vec::new();
    for (i, (mu, nu)) in samples.iter().enumerate() {
        product_failures(r, mu, nu, i, None, &mut failures);
    }
    WeakRegularityReport {
        closedness: FINITE_CLOSED,
        continuity: FINITE_CONTINUOUS,
        samples: samples.len(),
        passed: failures.is_empty(),
        failures,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometricReport {
    pub closedness: &'static str,
    pub diagonal_failures: Vec<ConstraintFailure>,
    pub product_failures: Vec<ConstraintFailure>,
    pub transpose_failures: Vec<String>,
    pub omega_rank: usize,
    pub passed: bool,
}

/// Checks the three geometricity conditions: Ω vanishes on diagonal plans
/// and on product plans of simplex members, and Ω is closed under transpose.
pub fn check_geometric(r: &LinearRestriction, samples: &[Measure]) -> Result<GeometricReport> {
    if r.row_space() != r.col_space() {
        return Err(Error::DimensionMismatch(
            "geometricity needs identical row and column spaces".into(),
        ));
    }
    let n = r.row_space().len();
    let mut diagonal_failures = Vec::new();
    for (i, mu) in samples.iter().enumerate() {
        for c in &r.omega.omegas {
            let v: f64 = (0..n).map(|x| c.omega[(x, x)] * mu.w[x]).sum();
            if v.abs() > TAU_LP {
                diagonal_failures.push(ConstraintFailure {
                    sample: i,
                    other: None,
                    label: c.label.clone(),
                    value: v,
                });
            }
        }
    }
    let mut prod = Vec::new();
    for (i, mu) in samples.iter().enumerate() {
        for (j, nu) in samples.iter().enumerate() {
            product_failures(r, mu, nu, i, Some(j), &mut prod);
        }
    }
    let rows = r.omega.flat_rows();
    let span = RowSpace::from_rows(n * n, TAU_RANK, rows.iter().map(Vec::as_slice));
    // Column-major storage of ω is the row-major flattening of ωᵀ.
    let transpose_failures = r
        .omega
        .omegas
        .iter()
        .filter(|c| !span.contains(c.omega.as_slice()))
        .map(|c| c.label.clone())
        .collect::<Vec<_>>();
    Ok(GeometricReport {
        closedness: FINITE_CLOSED,
        passed: diagonal_failures.is_empty() && prod.is_empty() && transpose_failures.is_empty(),
        diagonal_failures,
        product_failures: prod,
        transpose_failures,
        omega_rank: span.rank(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoherencyFailure {
    pub sample: usize,
    pub label: String,
    pub atom: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoherencyReport {
    pub atoms: usize,
    pub samples: usize,
    pub failures: Vec<CoherencyFailure>,
    pub passed: bool,
}

/// `|Σ_{(x,y)∈S} ω[x][y]·π[x][y]| ≤ τ` for every sample plan, every ω and
/// every atom `S` of the product ergodic partition.
pub fn check_coherency(r: &LinearRestriction, plans: &[TransportPlan]) -> Result<CoherencyReport> {
    let part = r.product_partition()?;
    let ny = r.col_space().len();
    let mut failures = Vec::new();
    for (i, plan) in plans.iter().enumerate() {
        for c in &r.omega.omegas {
            for (a, atom) in part.atoms.iter().enumerate() {
                let v: f64 = atom
                    .iter()
                    .map(|&cell| c.omega[(cell / ny, cell % ny)] * plan.p[(cell / ny, cell % ny)])
                    .sum();
                if v.abs() > TAU_LP {
                    failures.push(CoherencyFailure {
                        sample: i,
                        label: c.label.clone(),
                        atom: a,
                        value: v,
                    });
                }
            }
        }
    }
    Ok(CoherencyReport {
        atoms: part.atoms.len(),
        samples: plans.len(),
        passed: failures.is_empty(),
        failures,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErgodicDecomposabilityReport {
    pub atoms: usize,
    /// Atoms that straddle two marginal-class rectangles.
    pub straddling_atoms: Vec<usize>,
    /// Atoms whose extreme plan has a non-extreme marginal.
    pub non_extreme_marginals: Vec<usize>,
    /// Rectangles split into more than one atom.
    pub split_rectangles: usize,
    pub product_kernel_ok: Option<bool>,
    pub passed: bool,
}

/// Checks that marginal-class rectangles are unions of product atoms and
/// that every extreme plan of the product simplex has extreme marginals.
pub fn check_ergodic_decomposability(r: &LinearRestriction) -> Result<ErgodicDecomposabilityReport> {
    let part = r.product_partition()?;
    let extremes = r.product_extremes()?;
    let bx = ergodic::boundary(&r.mx_spec)?;
    let by = ergodic::boundary(&r.my_spec)?;
    let ny = r.col_space().len();
    let rect = |cell: usize| match (bx.class_of[cell / ny], by.class_of[cell % ny]) {
        (Some(a), Some(b)) => Some((a, b)),
        _ => None,
    };
    let mut straddling_atoms = Vec::new();
    let mut atoms_per_rect = std::collections::BTreeMap::<(usize, usize), usize>::new();
    for (k, atom) in part.atoms.iter().enumerate() {
        let r0 = rect(atom[0]);
        if r0.is_none() || atom.iter().any(|&c| rect(c) != r0) {
            straddling_atoms.push(k);
        } else if let Some(key) = r0 {
            *atoms_per_rect.entry(key).or_default() += 1;
        }
    }
    let mut non_extreme_marginals = Vec::new();
    for (k, plan) in extremes.iter().enumerate() {
        let dx = ergodic::decompose_measure(&plan.row_marginal(), &r.mx_spec);
        let dy = ergodic::decompose_measure(&plan.col_marginal(), &r.my_spec);
        let single = |d: Result<crate::types::ErgodicDecomposition>| {
            d.map(|d| d.components.len() == 1).unwrap_or(false)
        };
        if !single(dx) || !single(dy) {
            non_extreme_marginals.push(k);
        }
    }
    let product_kernel_ok = r.product_kernel.as_ref().map(|k| check_ergodic_kernel(k).ok);
    Ok(ErgodicDecomposabilityReport {
        atoms: part.atoms.len(),
        split_rectangles: atoms_per_rect.values().filter(|&&n| n > 1).count(),
        passed: straddling_atoms.is_empty()
            && non_extreme_marginals.is_empty()
            && product_kernel_ok != Some(false),
        straddling_atoms,
        non_extreme_marginals,
        product_kernel_ok,
    })
}
