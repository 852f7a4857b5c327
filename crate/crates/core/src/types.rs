//! Plain data shared by every module: finite spaces, measures, plans,
//! permutation actions, stochastic kernels, costs and constraint sets.
//!
//! Constructors only check shapes. Semantic invariants (mass, metric axioms,
//! stochasticity) are reported by [`Validate`] so that malformed input can be
//! described rather than rejected blindly.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance for probability mass checks.
pub const TAU_MASS: f64 = 1e-12;
/// Tolerance for metric axioms.
pub const TAU_METRIC: f64 = 1e-9;

/// Rounds to 12 decimals for human-readable messages.
pub(crate) fn fmt_num(x: f64) -> String {
    let r = (x * 1e12).round() / 1e12;
    format!("{r}")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub invariant: &'static str,
    pub indices: Vec<usize>,
    pub message: String,
}

impl Violation {
    fn new(invariant: &'static str, indices: Vec<usize>, message: impl Into<String>) -> Self {
        Self {
            invariant,
            indices,
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub trait Validate {
    const WHAT: &'static str;

    fn violations(&self) -> Vec<Violation>;

    fn is_valid(&self) -> bool {
        self.violations().is_empty()
    }

    fn ensure_valid(&self) -> Result<()> {
        let violations = self.violations();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid {
                what: Self::WHAT,
                violations,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FiniteSpace {
    labels: Vec<String>,
}

impl FiniteSpace {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let space = Self { labels };
        space.ensure_valid()?;
        Ok(space)
    }

    /// Space with labels "0", "1", ..., "n-1".
    pub fn indexed(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| i.to_string()))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Cartesian product, cell (x, y) at index `x * other.len() + y`.
    pub fn product(&self, other: &FiniteSpace) -> FiniteSpace {
        let labels = self
            .labels
            .iter()
            .flat_map(|a| other.labels.iter().map(move |b| format!("({a},{b})")))
            .collect();
        FiniteSpace { labels }
    }
}

impl Validate for FiniteSpace {
    const WHAT: &'static str = "space";

    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.labels.is_empty() {
            out.push(Violation::new("nonempty", vec![], "space has no points"));
        }
        let mut seen = HashSet::new();
        for (i, l) in self.labels.iter().enumerate() {
            if !seen.insert(l.as_str()) {
                out.push(Violation::new(
                    "unique labels",
                    vec![i],
                    format!("duplicate label {l:?} at {i}"),
                ));
            }
        }
        out
    }
}

fn check_square(m: &DMatrix<f64>, n: usize, what: &str) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "{what} is {}x{}, space has {n} points",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

fn check_shape(m: &DMatrix<f64>, rows: usize, cols: usize, what: &str) -> Result<()> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(Error::DimensionMismatch(format!(
            "{what} is {}x{}, expected {rows}x{cols}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if let Some(i) = rows.iter().position(|row| row.len() != c) {
        return Err(Error::DimensionMismatch(format!(
            "row {i} has {} entries, expected {c}",
            rows[i].len()
        )));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundMetric {
    pub space: FiniteSpace,
    pub d: DMatrix<f64>,
}

impl GroundMetric {
    pub fn new(space: FiniteSpace, d: DMatrix<f64>) -> Result<Self> {
        check_square(&d, space.len(), "metric")?;
        Ok(Self { space, d })
    }

    pub fn from_rows(space: FiniteSpace, rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(space, matrix_from_rows(rows)?)
    }

    /// Entrywise `d^p`, the transport cost of the p-Wasserstein distance.
    pub fn cost_pow(&self, p: f64) -> CostMatrix {
        CostMatrix {
            row_space: self.space.clone(),
            col_space: self.space.clone(),
            c: self.d.map(|v| v.powf(p)),
        }
    }
}

impl Validate for GroundMetric {
    const WHAT: &'static str = "metric";

    fn violations(&self) -> Vec<Violation> {
        let n = self.space.len();
        let d = &self.d;
        let mut out = Vec::new();
        for i in 0..n {
            if !d[(i, i)].is_finite() || d[(i, i)].abs() > TAU_METRIC {
                out.push(Violation::new(
                    "zero diagonal",
                    vec![i, i],
                    format!("d[{i}][{i}] = {} ≠ 0", fmt_num(d[(i, i)])),
                ));
            }
            for j in 0..n {
                if i == j {
                    continue;
                }
                if !d[(i, j)].is_finite() {
                    out.push(Violation::new(
                        "finite",
                        vec![i, j],
                        format!("d[{i}][{j}] is not finite"),
                    ));
                    continue;
                }
                if j > i && (d[(i, j)] - d[(j, i)]).abs() > TAU_METRIC {
                    out.push(Violation::new(
                        "symmetry",
                        vec![i, j],
                        format!("d[{i}][{j}] ≠ d[{j}][{i}]"),
                    ));
                }
                if d[(i, j)] <= 0.0 {
                    out.push(Violation::new(
                        "positivity",
                        vec![i, j],
                        format!("d[{i}][{j}] = {} is not positive", fmt_num(d[(i, j)])),
                    ));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if d[(i, k)] > d[(i, j)] + d[(j, k)] + TAU_METRIC {
                        out.push(Violation::new(
                            "triangle inequality",
                            vec![i, j, k],
                            format!("d[{i}][{k}] > d[{i}][{j}] + d[{j}][{k}]"),
                        ));
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    pub space: FiniteSpace,
    pub w: DVector<f64>,
}

impl Measure {
    pub fn new(space: FiniteSpace, w: impl Into<Vec<f64>>) -> Result<Self> {
        let w: Vec<f64> = w.into();
        if w.len() != space.len() {
            return Err(Error::DimensionMismatch(format!(
                "measure has {} weights, space has {} points",
                w.len(),
                space.len()
            )));
        }
        Ok(Self {
            space,
            w: DVector::from_vec(w),
        })
    }

    pub fn dirac(space: FiniteSpace, at: usize) -> Self {
        let mut w = DVector::zeros(space.len());
        w[at] = 1.0;
        Self { space, w }
    }

    /// Uniform measure on the listed points.
    pub fn uniform_on(space: FiniteSpace, points: &[usize]) -> Self {
        let mut w = DVector::zeros(space.len());
        let share = 1.0 / points.len() as f64;
        for &p in points {
            w[p] = share;
        }
        Self { space, w }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.w.sum()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.w[i] > 0.0).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.w.as_slice()
    }

    /// Product measure `self ⊗ other`.
    pub fn product(&self, other: &Measure) -> TransportPlan {
        TransportPlan {
            row_space: self.space.clone(),
            col_space: other.space.clone(),
            p: &self.w * other.w.transpose(),
        }
    }

    /// The diagonal plan `(Id, Id)_# self`.
    pub fn diagonal_plan(&self) -> TransportPlan {
        TransportPlan {
            row_space: self.space.clone(),
            col_space: self.space.clone(),
            p: DMatrix::from_diagonal(&self.w),
        }
    }

    pub fn max_abs_diff(&self, other: &Measure) -> f64 {
        (&self.w - &other.w).amax()
    }
}

impl Validate for Measure {
    const WHAT: &'static str = "measure";

    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (i, &v) in self.w.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                out.push(Violation::new(
                    "nonnegative",
                    vec![i],
                    format!("negative or non-finite weight {} at {i}", fmt_num(v)),
                ));
            }
        }
        let s = self.total_mass();
        if (s - 1.0).abs() > TAU_MASS {
            out.push(Violation::new(
                "mass sum",
                vec![],
                format!("mass sum {} ≠ 1", fmt_num(s)),
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub row_space: FiniteSpace,
    pub col_space: FiniteSpace,
    pub p: DMatrix<f64>,
}

impl TransportPlan {
    pub fn new(row_space: FiniteSpace, col_space: FiniteSpace, p: DMatrix<f64>) -> Result<Self> {
        check_shape(&p, row_space.len(), col_space.len(), "plan")?;
        Ok(Self {
            row_space,
            col_space,
            p,
        })
    }

    /// `Pr_X(π)`.
    pub fn row_marginal(&self) -> Measure {
        let w: Vec<f64> = self.p.row_iter().map(|r| r.sum()).collect();
        Measure {
            space: self.row_space.clone(),
            w: DVector::from_vec(w),
        }
    }

    /// `Pr_Y(π)`.
    pub fn col_marginal(&self) -> Measure {
        let w: Vec<f64> = self.p.column_iter().map(|c| c.sum()).collect();
        Measure {
            space: self.col_space.clone(),
            w: DVector::from_vec(w),
        }
    }

    /// `⟨ω, π⟩ = Σ ω[i][j] p[i][j]`.
    pub fn pair(&self, omega: &DMatrix<f64>) -> f64 {
        self.p.component_mul(omega).sum()
    }

    pub fn cost(&self, c: &CostMatrix) -> f64 {
        self.pair(&c.c)
    }

    /// Mass of cell `(x, y)` indexed on the product space.
    pub fn cell(&self, idx: usize) -> f64 {
        let n = self.col_space.len();
        self.p[(idx / n, idx % n)]
    }
}

impl Validate for TransportPlan {
    const WHAT: &'static str = "plan";

    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for i in 0..self.p.nrows() {
            for j in 0..self.p.ncols() {
                let v = self.p[(i, j)];
                if !v.is_finite() || v < 0.0 {
                    out.push(Violation::new(
                        "nonnegative",
                        vec![i, j],
                        format!("negative or non-finite mass {} at ({i},{j})", fmt_num(v)),
                    ));
                }
            }
        }
        let s = self.p.sum();
        if (s - 1.0).abs() > TAU_MASS {
            out.push(Violation::new(
                "mass sum",
                vec![],
                format!("mass sum {} ≠ 1", fmt_num(s)),
            ));
        }
        out
    }
}

pub fn transpose_plan(plan: &TransportPlan) -> TransportPlan {
    TransportPlan {
        row_space: plan.col_space.clone(),
        col_space: plan.row_space.clone(),
        p: plan.p.transpose(),
    }
}

/// A permutation of `{0..n-1}` in one-line form: `i ↦ image[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Permutation {
    image: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            image: (0..n).collect(),
        }
    }

    pub fn from_images(image: Vec<usize>) -> Result<Self> {
        let n = image.len();
        let mut seen = vec![false; n];
        for (i, &v) in image.iter().enumerate() {
            if v >= n || seen[v] {
                return Err(Error::Invalid {
                    what: "permutation",
                    violations: vec![Violation::new(
                        "bijection",
                        vec![i],
                        format!("image {v} at position {i} breaks bijectivity"),
                    )],
                });
            }
            seen[v] = true;
        }
        Ok(Self { image })
    }

    /// Parses cycle notation such as `"(0 1 2)(3 4 5)"` over `n` points.
    /// `"()"` and `""` denote the identity. Tokens are resolved by `resolve`.
    pub fn parse_cycles_with(
        s: &str,
        n: usize,
        resolve: impl Fn(&str) -> Option<usize>,
    ) -> Result<Self> {
        let bad = |msg: String| Error::Parse(format!("cycle notation {s:?}: {msg}"));
        let mut image: Vec<usize> = (0..n).collect();
        let mut used = vec![false; n];
        let mut rest = s.trim();
        while !rest.is_empty() {
            let body_end = rest
                .strip_prefix('(')
                .and_then(|r| r.find(')'))
                .ok_or_else(|| bad("expected '(' ... ')'".into()))?;
            let body = &rest[1..=body_end];
            rest = rest[body_end + 2..].trim_start();
            let cycle = body
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| resolve(t).ok_or_else(|| bad(format!("unknown point {t:?}"))))
                .collect::<Result<Vec<_>>>()?;
            for &p in &cycle {
                if p >= n {
                    return Err(bad(format!("point {p} out of range for {n} points")));
                }
                if used[p] {
                    return Err(bad(format!("point {p} appears twice")));
                }
                used[p] = true;
            }
            for k in 0..cycle.len() {
                image[cycle[k]] = cycle[(k + 1) % cycle.len()];
            }
        }
        Ok(Self { image })
    }

    pub fn parse_cycles(s: &str, n: usize) -> Result<Self> {
        Self::parse_cycles_with(s, n, |t| t.parse().ok())
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.image[i]
    }

    pub fn images(&self) -> &[usize] {
        &self.image
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &v)| i == v)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.image.len()];
        for (i, &v) in self.image.iter().enumerate() {
            inv[v] = i;
        }
        Self { image: inv }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Self {
        Self {
            image: other.image.iter().map(|&v| self.image[v]).collect(),
        }
    }

    /// Canonical cycle notation, fixed points omitted, cycles led by their
    /// smallest point.
    pub fn to_cycles(&self) -> String {
        let n = self.image.len();
        let mut seen = vec![false; n];
        let mut out = String::new();
        for start in 0..n {
            if seen[start] || self.image[start] == start {
                seen[start] = true;
                continue;
            }
            let mut cycle = Vec::new();
            let mut cur = start;
            while !seen[cur] {
                seen[cur] = true;
                cycle.push(cur.to_string());
                cur = self.image[cur];
            }
            out.push('(');
            out.push_str(&cycle.join(" "));
            out.push(')');
        }
        if out.is_empty() {
            out.push_str("()");
        }
        out
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_cycles())
    }
}

/// All elements of the group generated by `gens`, by breadth-first closure.
pub fn generate_group(gens: &[Permutation], n: usize, cap: usize) -> Result<HashSet<Permutation>> {
    let id = Permutation::identity(n);
    let mut group = HashSet::from([id.clone()]);
    let mut queue = VecDeque::from([id]);
    while let Some(h) = queue.pop_front() {
        for g in gens {
            let next = g.compose(&h);
            if group.insert(next.clone()) {
                if group.len() > cap {
                    return Err(Error::GroupTooLarge(cap));
                }
                queue.push_back(next);
            }
        }
    }
    Ok(group)
}

pub fn pushforward(g: &Permutation, mu: &Measure) -> Result<Measure> {
    if g.len() != mu.len() {
        return Err(Error::DimensionMismatch(format!(
            "permutation on {} points, measure on {}",
            g.len(),
            mu.len()
        )));
    }
    let mut w = DVector::zeros(mu.len());
    for i in 0..mu.len() {
        w[g.apply(i)] = mu.w[i];
    }
    Ok(Measure {
        space: mu.space.clone(),
        w,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupAction {
    pub space: FiniteSpace,
    pub generators: Vec<(String, Permutation)>,
}

impl GroupAction {
    pub fn new(space: FiniteSpace, generators: Vec<(String, Permutation)>) -> Result<Self> {
        for (label, g) in &generators {
            if g.len() != space.len() {
                return Err(Error::DimensionMismatch(format!(
                    "generator {label} acts on {} points, space has {}",
                    g.len(),
                    space.len()
                )));
            }
        }
        Ok(Self { space, generators })
    }

    /// Single generator given in cycle notation over an indexed space.
    pub fn cyclic(n: usize, cycles: &str) -> Result<Self> {
        let g = Permutation::parse_cycles(cycles, n)?;
        Self::new(FiniteSpace::indexed(n)?, vec![("g0".into(), g)])
    }

    pub fn perms(&self) -> Vec<Permutation> {
        self.generators.iter().map(|(_, g)| g.clone()).collect()
    }
}

impl Validate for GroupAction {
    const WHAT: &'static str = "action";

    fn violations(&self) -> Vec<Violation> {
        let mut out = self.space.violations();
        for (k, (label, g)) in self.generators.iter().enumerate() {
            if g.len() != self.space.len() || Permutation::from_images(g.image.clone()).is_err() {
                out.push(Violation::new(
                    "bijection",
                    vec![k],
                    format!("generator {label} is not a permutation of the space"),
                ));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StochKernel {
    pub space: FiniteSpace,
    pub q: DMatrix<f64>,
}

impl StochKernel {
    pub fn new(space: FiniteSpace, q: DMatrix<f64>) -> Result<Self> {
        check_square(&q, space.len(), "kernel")?;
        Ok(Self { space, q })
    }

    pub fn from_rows(space: FiniteSpace, rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(space, matrix_from_rows(rows)?)
    }

    pub fn identity(space: FiniteSpace) -> Self {
        let n = space.len();
        Self {
            space,
            q: DMatrix::identity(n, n),
        }
    }

    pub fn len(&self) -> usize {
        self.q.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.q.nrows() == 0
    }

    /// The measure `Q^x`.
    pub fn row(&self, x: usize) -> Measure {
        Measure {
            space: self.space.clone(),
            w: self.q.row(x).transpose(),
        }
    }

    /// `μQ`, the action of the kernel on measures.
    pub fn push(&self, mu: &Measure) -> Measure {
        Measure {
            space: self.space.clone(),
            w: self.q.tr_mul(&mu.w),
        }
    }
}

impl Validate for StochKernel {
    const WHAT: &'static str = "kernel";

    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for x in 0..self.q.nrows() {
            let row = self.q.row(x);
            if row.iter().any(|&v| !v.is_finite() || v < 0.0) {
                out.push(Violation::new(
                    "nonnegative",
                    vec![x],
                    format!("row {x} has negative or non-finite entries"),
                ));
            }
            let s = row.sum();
            if (s - 1.0).abs() > TAU_MASS {
                out.push(Violation::new(
                    "row sum",
                    vec![x],
                    format!("row {x} mass sum {} ≠ 1", fmt_num(s)),
                ));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    pub row_space: FiniteSpace,
    pub col_space: FiniteSpace,
    pub c: DMatrix<f64>,
}

impl CostMatrix {
    pub fn new(row_space: FiniteSpace, col_space: FiniteSpace, c: DMatrix<f64>) -> Result<Self> {
        check_shape(&c, row_space.len(), col_space.len(), "cost")?;
        Ok(Self {
            row_space,
            col_space,
            c,
        })
    }

    pub fn from_rows(row_space: FiniteSpace, col_space: FiniteSpace, rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(row_space, col_space, matrix_from_rows(rows)?)
    }
}

impl Validate for CostMatrix {
    const WHAT: &'static str = "cost";

    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for i in 0..self.c.nrows() {
            for j in 0..self.c.ncols() {
                if !self.c[(i, j)].is_finite() {
                    out.push(Violation::new(
                        "finite",
                        vec![i, j],
                        format!("cost at ({i},{j}) is not finite"),
                    ));
                }
            }
        }
        out
    }
}

/// One functional `ω` on the product space with the constraint `⟨ω, π⟩ = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub label: String,
    pub omega: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    pub row_space: FiniteSpace,
    pub col_space: FiniteSpace,
    pub omegas: Vec<Constraint>,
}

impl ConstraintSet {
    pub fn empty(row_space: FiniteSpace, col_space: FiniteSpace) -> Self {
        Self {
            row_space,
            col_space,
            omegas: Vec::new(),
        }
    }

    pub fn push(&mut self, label: impl Into<String>, omega: DMatrix<f64>) -> Result<()> {
        check_shape(&omega, self.row_space.len(), self.col_space.len(), "constraint")?;
        self.omegas.push(Constraint {
            label: label.into(),
            omega,
        });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    /// Largest `|⟨ω, π⟩|` over the set, with the offending label.
    pub fn max_violation(&self, plan: &TransportPlan) -> Option<(f64, &str)> {
        self.omegas
            .iter()
            .map(|c| (plan.pair(&c.omega).abs(), c.label.as_str()))
            .max_by(|a, b| a.0.total_cmp(&b.0))
    }

    /// Each `ω` flattened row-major over the product space.
    pub fn flat_rows(&self) -> Vec<Vec<f64>> {
        self.omegas
            .iter()
            .map(|c| c.omega.transpose().as_slice().to_vec())
            .collect()
    }
}

impl Validate for ConstraintSet {
    const WHAT: &'static str = "constraint set";

    fn violations(&self) -> Vec<Violation> {
        self.omegas
            .iter()
            .enumerate()
            .filter(|(_, c)| c.omega.iter().any(|v| !v.is_finite()))
            .map(|(k, c)| {
                Violation::new("finite", vec![k], format!("constraint {} is not finite", c.label))
            })
            .collect()
    }
}

/// The simplex a marginal is drawn from.
#[derive(Debug, Clone, PartialEq)]
pub enum SimplexSpec {
    /// All probability measures; boundary = Dirac measures.
    Full(FiniteSpace),
    /// Measures invariant under every generator.
    GroupInvariant(GroupAction),
    /// Stationary measures of a kernel.
    KernelStationary(StochKernel),
}

impl SimplexSpec {
    pub fn space(&self) -> &FiniteSpace {
        match self {
            SimplexSpec::Full(s) => s,
            SimplexSpec::GroupInvariant(a) => &a.space,
            SimplexSpec::KernelStationary(k) => &k.space,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SimplexSpec::Full(_) => "full",
            SimplexSpec::GroupInvariant(_) => "group-invariant",
            SimplexSpec::KernelStationary(_) => "kernel-stationary",
        }
    }
}

/// Barycentric representation of a measure over extreme points.
///
/// `components[α]` is supported on boundary class `classes[α]`;
/// `class_of[x]` is the boundary class containing point `x`, `None` for
/// transient points.
#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicDecomposition {
    pub components: Vec<Measure>,
    pub weights: Vec<f64>,
    pub classes: Vec<usize>,
    pub class_of: Vec<Option<usize>>,
}

impl Validate for ErgodicDecomposition {
    const WHAT: &'static str = "decomposition";

    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (a, c) in self.components.iter().enumerate() {
            for v in c.violations() {
                out.push(Violation::new(
                    v.invariant,
                    vec![a],
                    format!("component {a}: {}", v.message),
                ));
            }
        }
        if self.weights.len() != self.components.len() {
            out.push(Violation::new(
                "weights",
                vec![],
                "weight count differs from component count",
            ));
        }
        if let Some(a) = self.weights.iter().position(|&w| w < 0.0) {
            out.push(Violation::new("weights", vec![a], format!("negative weight at {a}")));
        }
        let s: f64 = self.weights.iter().sum();
        if (s - 1.0).abs() > TAU_MASS {
            out.push(Violation::new(
                "mass sum",
                vec![],
                format!("weight sum {} ≠ 1", fmt_num(s)),
            ));
        }
        out
    }
}
