//! Ergodic structure of finite simplexes: orbits of permutation actions,
//! orbit-averaging kernels, recurrent classes of stochastic kernels, and the
//! barycentric decomposition of a simplex member over its extreme points.

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::types::{
    fmt_num, pushforward, ErgodicDecomposition, FiniteSpace, GroupAction, Measure, SimplexSpec,
    StochKernel, Validate, TAU_MASS,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitPartition {
    #[serde(skip)]
    pub space: FiniteSpace,
    pub orbit_of: Vec<usize>,
    pub orbits: Vec<Vec<usize>>,
}

/// Orbits of the group generated by the action's generators. Orbit ids
/// follow the smallest point each orbit contains.
pub fn orbit_decompose(action: &GroupAction) -> OrbitPartition {
    let n = action.space.len();
    let mut orbit_of = vec![usize::MAX; n];
    let mut orbits = Vec::new();
    for start in 0..n {
        if orbit_of[start] != usize::MAX {
            continue;
        }
        let id = orbits.len();
        let mut members = vec![start];
        orbit_of[start] = id;
        let mut k = 0;
        while k < members.len() {
            let x = members[k];
            for (_, g) in &action.generators {
                let y = g.apply(x);
                if orbit_of[y] == usize::MAX {
                    orbit_of[y] = id;
                    members.push(y);
                }
            }
            k += 1;
        }
        members.sort_unstable();
        orbits.push(members);
    }
    OrbitPartition {
        space: action.space.clone(),
        orbit_of,
        orbits,
    }
}

/// `Q^x` = uniform measure on the orbit of `x`.
pub fn averaging_kernel(action: &GroupAction) -> StochKernel {
    let part = orbit_decompose(action);
    let n = action.space.len();
    let mut q = DMatrix::zeros(n, n);
    for x in 0..n {
        let orbit = &part.orbits[part.orbit_of[x]];
        let share = 1.0 / orbit.len() as f64;
        for &y in orbit {
            q[(x, y)] = share;
        }
    }
    StochKernel {
        space: action.space.clone(),
        q,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelCheck {
    pub ok: bool,
    /// Rows `x` whose measure charges a point with a different row.
    pub offending: Vec<usize>,
}

/// Finite form of `Q^x({y : Q^y = Q^x}) = 1`: every point in the support of
/// row `x` carries the same row as `x`.
pub fn check_ergodic_kernel(q: &StochKernel) -> KernelCheck {
    let n = q.len();
    let offending: Vec<usize> = (0..n)
        .filter(|&x| {
            (0..n).any(|y| {
                q.q[(x, y)] > TAU_MASS
                    && (0..n).any(|z| (q.q[(x, z)] - q.q[(y, z)]).abs() > TAU_MASS)
            })
        })
        .collect();
    KernelCheck {
        ok: offending.is_empty(),
        offending,
    }
}

/// Checks `Q(g·Q(f)) = Q(g)·Q(f)` on all pairs of indicator functions,
/// i.e. `q[x][b]·q[b][a] = q[x][b]·q[x][a]` for all `x, a, b`.
/// Returns the largest deviation.
pub fn multiplicative_defect(q: &StochKernel) -> f64 {
    let n = q.len();
    let mut worst = 0.0f64;
    for x in 0..n {
        for b in 0..n {
            let qxb = q.q[(x, b)];
            if qxb == 0.0 {
                continue;
            }
            for a in 0..n {
                worst = worst.max((qxb * q.q[(b, a)] - qxb * q.q[(x, a)]).abs());
            }
        }
    }
    worst
}

/// Recurrent classes of a kernel with their stationary distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDecomposition {
    pub components: Vec<Measure>,
    pub classes: Vec<Vec<usize>>,
    /// Recurrent class of each point, `None` for transient points.
    pub class_of: Vec<Option<usize>>,
}

pub fn stationary_components(q: &StochKernel) -> Result<StationaryDecomposition> {
    q.ensure_valid()?;
    let n = q.len();
    let mut graph = DiGraph::<(), ()>::with_capacity(n, n * n);
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for x in 0..n {
        for y in 0..n {
            if q.q[(x, y)] > TAU_MASS {
                graph.add_edge(nodes[x], nodes[y], ());
            }
        }
    }
    let mut scc_of = vec![0usize; n];
    let sccs = tarjan_scc(&graph);
    for (k, scc) in sccs.iter().enumerate() {
        for v in scc {
            scc_of[v.index()] = k;
        }
    }
    let mut classes: Vec<Vec<usize>> = sccs
        .iter()
        .enumerate()
        .filter(|(k, scc)| {
            scc.iter().all(|v| {
                (0..n).all(|y| q.q[(v.index(), y)] <= TAU_MASS || scc_of[y] == *k)
            })
        })
        .map(|(_, scc)| {
            let mut c: Vec<usize> = scc.iter().map(|v| v.index()).collect();
            c.sort_unstable();
            c
        })
        .collect();
    classes.sort_by_key(|c| c[0]);

    let mut class_of = vec![None; n];
    let mut components = Vec::with_capacity(classes.len());
    for (a, class) in classes.iter().enumerate() {
        for &x in class {
            class_of[x] = Some(a);
        }
        components.push(class_stationary(q, class)?);
    }
    Ok(StationaryDecomposition {
        components,
        classes,
        class_of,
    })
}

/// Solves `(Q_Cᵀ − I)π = 0, Σπ = 1` on a closed class `C`.
fn class_stationary(q: &StochKernel, class: &[usize]) -> Result<Measure> {
    let k = class.len();
    let mut a = DMatrix::from_fn(k, k, |i, j| {
        q.q[(class[j], class[i])] - if i == j { 1.0 } else { 0.0 }
    });
    for j in 0..k {
        a[(k - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(k);
    b[k - 1] = 1.0;
    let sol = a.lu().solve(&b).ok_or_else(|| {
        Error::Internal(format!("singular stationary system on class {class:?}"))
    })?;
    if sol.iter().any(|&v| !v.is_finite() || v < -1e-10) {
        return Err(Error::Internal(format!(
            "stationary solve on class {class:?} produced negative mass"
        )));
    }
    let mut w = DVector::zeros(q.len());
    for (i, &x) in class.iter().enumerate() {
        w[x] = sol[i].max(0.0);
    }
    Ok(Measure {
        space: q.space.clone(),
        w,
    })
}

/// Extreme points of a simplex together with the point → class map.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexBoundary {
    pub components: Vec<Measure>,
    pub classes: Vec<Vec<usize>>,
    pub class_of: Vec<Option<usize>>,
}

impl SimplexBoundary {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

pub fn boundary(spec: &SimplexSpec) -> Result<SimplexBoundary> {
    match spec {
        SimplexSpec::Full(space) => {
            let n = space.len();
            Ok(SimplexBoundary {
                components: (0..n).map(|x| Measure::dirac(space.clone(), x)).collect(),
                classes: (0..n).map(|x| vec![x]).collect(),
                class_of: (0..n).map(Some).collect(),
            })
        }
        SimplexSpec::GroupInvariant(action) => {
            let part = orbit_decompose(action);
            Ok(SimplexBoundary {
                components: part
                    .orbits
                    .iter()
                    .map(|o| Measure::uniform_on(action.space.clone(), o))
                    .collect(),
                class_of: part.orbit_of.iter().copied().map(Some).collect(),
                classes: part.orbits,
            })
        }
        SimplexSpec::KernelStationary(q) => {
            let s = stationary_components(q)?;
            Ok(SimplexBoundary {
                components: s.components,
                classes: s.classes,
                class_of: s.class_of,
            })
        }
    }
}

/// Membership test; the error names the violating generator or kernel row.
pub fn check_membership(mu: &Measure, spec: &SimplexSpec) -> Result<()> {
    if mu.space != *spec.space() {
        return Err(Error::DimensionMismatch(
            "measure and simplex live on different spaces".into(),
        ));
    }
    match spec {
        SimplexSpec::Full(_) => Ok(()),
        SimplexSpec::GroupInvariant(action) => {
            for (label, g) in &action.generators {
                let moved = pushforward(g, mu)?;
                let dev = moved.max_abs_diff(mu);
                if dev > TAU_MASS {
                    return Err(Error::NotInSimplex(format!(
                        "pushforward under generator {label} {g} moves mass by {}",
                        fmt_num(dev)
                    )));
                }
            }
            Ok(())
        }
        SimplexSpec::KernelStationary(q) => {
            let pushed = q.push(mu);
            if let Some((x, dev)) = (0..mu.len())
                .map(|x| (x, (pushed.w[x] - mu.w[x]).abs()))
                .find(|&(_, d)| d > TAU_MASS)
            {
                return Err(Error::NotInSimplex(format!(
                    "μQ differs from μ at point {x} (kernel column {x}) by {}",
                    fmt_num(dev)
                )));
            }
            Ok(())
        }
    }
}

/// Weights of `mu` on every boundary class, zero weights included.
pub fn boundary_weights(mu: &Measure, spec: &SimplexSpec, bd: &SimplexBoundary) -> Result<Vec<f64>> {
    mu.ensure_valid()?;
    check_membership(mu, spec)?;
    let transient: f64 = (0..mu.len())
        .filter(|&x| bd.class_of[x].is_none())
        .map(|x| mu.w[x])
        .sum();
    if transient > TAU_MASS {
        return Err(Error::TransientMass(format!(
            "{} of the mass sits on transient states",
            fmt_num(transient)
        )));
    }
    Ok(bd
        .classes
        .iter()
        .map(|class| class.iter().map(|&x| mu.w[x]).sum())
        .collect())
}

/// Decomposes a simplex member into its extreme components. Components with
/// zero weight are omitted; `classes` records which boundary class each kept
/// component is.
pub fn decompose_measure(mu: &Measure, spec: &SimplexSpec) -> Result<ErgodicDecomposition> {
    let bd = boundary(spec)?;
    let weights = boundary_weights(mu, spec, &bd)?;
    let mut dec = ErgodicDecomposition {
        components: Vec::new(),
        weights: Vec::new(),
        classes: Vec::new(),
        class_of: bd.class_of,
    };
    for (a, (w, c)) in weights.into_iter().zip(bd.components).enumerate() {
        if w > 0.0 {
            dec.components.push(c);
            dec.weights.push(w);
            dec.classes.push(a);
        }
    }
    Ok(dec)
}

/// `Σ_α weights[α]·components[α]`, never renormalized.
pub fn barycenter(dec: &ErgodicDecomposition) -> Result<Measure> {
    let first = dec
        .components
        .first()
        .ok_or_else(|| Error::Internal("decomposition has no components".into()))?;
    let mut w = DVector::zeros(first.len());
    for (c, &a) in dec.components.iter().zip(&dec.weights) {
        w += &c.w * a;
    }
    Ok(Measure {
        space: first.space.clone(),
        w,
    })
}
