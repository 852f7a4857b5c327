//! Command-line front end: `solve`, `decompose`, `verify`, `metric` and
//! `check` over JSON problem files.

pub mod problem;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::ergodic::{self, check_ergodic_kernel, multiplicative_defect};
use crate::error::{Error, Result};
use crate::restriction::{
    check_coherency, check_ergodic_decomposability, check_geometric, check_weak_regularity,
    LinearRestriction,
};
use crate::transport::{
    boundary_metric, decompose_plan, lifted_metric, solve_constrained_ot, wasserstein, OtStatus,
};
use crate::types::{matrix_to_rows, FiniteSpace, Measure, SimplexSpec, TransportPlan};
use crate::verify::{
    generate_instance, sample_members, verify_decomposition, verify_metric_decomposition,
    InstanceFamily, InstanceSpec, TAU_THM,
};
pub use problem::Problem;

/// Exit status for successful runs.
pub const EXIT_OK: i32 = 0;
/// Exit status for malformed input.
pub const EXIT_INPUT: i32 = 1;
/// Exit status for infeasibility, membership failures and failed checks.
pub const EXIT_MATH: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ergot", version, about = "Constrained discrete optimal transport")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write the report to this path instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Pass/fail tolerance for verification gaps.
    #[arg(long, global = true, env = "ERGOT_TOL")]
    pub tol: Option<f64>,

    /// Base seed for sampled instances and measures.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Wasserstein exponent; overrides the problem file.
    #[arg(long, global = true)]
    pub p: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Property {
    All,
    WeakRegularity,
    Geometric,
    Coherency,
    Decomposability,
    Kernel,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the restricted transport problem of a problem file.
    Solve { file: PathBuf },
    /// Decompose the marginals (and the optimal plan) over extreme points.
    Decompose { file: PathBuf },
    /// Check the decomposition theorems on a file or on random instances.
    Verify {
        #[arg(required_unless_present = "random")]
        file: Option<PathBuf>,
        /// Random instances, e.g. "perm:n=6,cycles=3+3,count=50,seed=7".
        #[arg(long, conflicts_with = "file")]
        random: Option<String>,
        /// Run one property checker instead of the theorem checks.
        #[arg(long, value_enum)]
        check: Option<Property>,
        /// Extra sampled measures for the metric check.
        #[arg(long, default_value_t = 6)]
        samples: usize,
    },
    /// Boundary metric and, given marginals, both sides of the metric
    /// decomposition.
    Metric { file: PathBuf },
    /// Run the restriction property checkers.
    Check {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Property::All)]
        property: Property,
    },
}

struct Output {
    command: &'static str,
    digest: String,
    results: Value,
    csv: Option<Vec<Vec<String>>>,
    code: i32,
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotInSimplex(_)
        | Error::TransientMass(_)
        | Error::Infeasible
        | Error::NotFeasible(_)
        | Error::NotGeometric(_)
        | Error::MarginalMismatch(_) => EXIT_MATH,
        _ => EXIT_INPUT,
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = match cli.jobs {
        Some(0) => Err(Error::Parse("--jobs must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Internal(e.to_string()))
            .and_then(|pool| pool.install(|| execute(&cli))),
        None => execute(&cli),
    };
    match result.and_then(|out| emit(&cli, out)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn emit(cli: &Cli, out: Output) -> Result<i32> {
    let text = match cli.format {
        Format::Json => {
            let doc = json!({
                "command": out.command,
                "version": env!("CARGO_PKG_VERSION"),
                "inputs_digest": out.digest,
                "results": out.results,
            });
            let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Error::Internal(e.to_string()))?;
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => {
            let rows = out.csv.ok_or_else(|| {
                Error::Parse(format!("csv output is not available for {}", out.command))
            })?;
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.write_record(&r).map_err(|e| Error::Internal(e.to_string()))?;
            }
            w.into_inner().map_err(|e| Error::Internal(e.to_string()))?
        }
    };
    let io = |e: std::io::Error| Error::Parse(format!("cannot write output: {e}"));
    match &cli.out {
        Some(path) => std::fs::write(path, &text).map_err(io)?,
        None => std::io::stdout().write_all(&text).map_err(io)?,
    }
    Ok(out.code)
}

fn digest(bytes: &[u8]) -> String {
    let hash = Sha256::digest(bytes);
    let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

fn load(path: &PathBuf) -> Result<(Problem, String)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    Ok((Problem::from_json_str(&text)?, digest(text.as_bytes())))
}

/// JSON number, with non-finite values spelled out.
fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn mat(m: &DMatrix<f64>) -> Value {
    Value::Array(
        matrix_to_rows(m)
            .into_iter()
            .map(|r| Value::Array(r.into_iter().map(num).collect()))
            .collect(),
    )
}

fn vec_json(v: &[f64]) -> Value {
    Value::Array(v.iter().copied().map(num).collect())
}

fn labels(space: &FiniteSpace, points: &[usize]) -> Vec<String> {
    points.iter().map(|&x| space.label(x).to_string()).collect()
}

fn plan_json(plan: &TransportPlan) -> Value {
    json!({
        "rows": plan.row_space.labels(),
        "cols": plan.col_space.labels(),
        "mass": mat(&plan.p),
    })
}

fn plan_csv(plan: Option<&TransportPlan>) -> Vec<Vec<String>> {
    let mut rows = vec![vec!["row".into(), "col".into(), "mass".into()]];
    if let Some(plan) = plan {
        for i in 0..plan.p.nrows() {
            for j in 0..plan.p.ncols() {
                rows.push(vec![
                    plan.row_space.label(i).into(),
                    plan.col_space.label(j).into(),
                    plan.p[(i, j)].to_string(),
                ]);
            }
        }
    }
    rows
}

fn exponent(cli: &Cli, problem: &Problem) -> Result<f64> {
    let p = cli.p.unwrap_or(problem.p);
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Parse(format!("exponent p = {p} must be a finite real ≥ 1")));
    }
    Ok(p)
}

fn tolerance(cli: &Cli, problem: Option<&Problem>) -> f64 {
    cli.tol
        .or_else(|| problem.and_then(|p| p.tolerance))
        .unwrap_or(TAU_THM)
}

fn execute(cli: &Cli) -> Result<Output> {
    match &cli.command {
        Command::Solve { file } => cmd_solve(cli, file),
        Command::Decompose { file } => cmd_decompose(file),
        Command::Verify {
            file,
            random,
            check,
            samples,
        } => match (file, random, check) {
            (_, Some(spec), _) => cmd_verify_random(cli, spec),
            (Some(file), None, Some(prop)) => {
                let (problem, digest) = load(file)?;
                let mut out = run_checks(&problem, *prop, digest)?;
                out.command = "verify";
                Ok(out)
            }
            (Some(file), None, None) => cmd_verify_file(cli, file, *samples),
            (None, None, _) => Err(Error::Parse("verify needs a file or --random".into())),
        },
        Command::Metric { file } => cmd_metric(cli, file),
        Command::Check { file, property } => {
            let (problem, digest) = load(file)?;
            run_checks(&problem, *property, digest)
        }
    }
}

fn cmd_solve(cli: &Cli, file: &PathBuf) -> Result<Output> {
    let (problem, digest) = load(file)?;
    let p = exponent(cli, &problem)?;
    let r = problem.restriction()?;
    let cost = problem.cost_matrix(p)?;
    let (mu, nu) = problem.marginals()?;
    let res = solve_constrained_ot(mu, nu, &cost, &r)?;
    let optimal = res.status == OtStatus::Optimal;
    let mut results = json!({
        "status": res.status,
        "value": num(res.value),
        "p": p,
        "restriction": problem.restriction_name(),
        "constraints": r.omega.len(),
        "basis": res.basis,
        "plan": res.plan.as_ref().map(plan_json),
    });
    if problem.cost.is_none() {
        let distance = if optimal { res.value.max(0.0).powf(1.0 / p) } else { f64::INFINITY };
        results["distance"] = num(distance);
    }
    Ok(Output {
        command: "solve",
        digest,
        csv: Some(plan_csv(res.plan.as_ref())),
        results,
        code: if optimal { EXIT_OK } else { EXIT_MATH },
    })
}

fn decomposition_json(
    mu: &Measure,
    spec: &SimplexSpec,
    csv: &mut Vec<Vec<String>>,
    name: &str,
) -> Result<Value> {
    let dec = ergodic::decompose_measure(mu, spec)?;
    let bary = ergodic::barycenter(&dec)?;
    for ((c, &w), &class) in dec.components.iter().zip(&dec.weights).zip(&dec.classes) {
        for x in c.support() {
            csv.push(vec![
                name.into(),
                class.to_string(),
                w.to_string(),
                mu.space.label(x).into(),
                c.w[x].to_string(),
            ]);
        }
    }
    Ok(json!({
        "weights": vec_json(&dec.weights),
        "classes": dec.classes,
        "components": dec.components.iter().map(|c| vec_json(c.as_slice())).collect::<Vec<_>>(),
        "barycenter_error": num(bary.max_abs_diff(mu)),
    }))
}

fn cmd_decompose(file: &PathBuf) -> Result<Output> {
    let (problem, digest) = load(file)?;
    let spec = problem.simplex();
    let bd = ergodic::boundary(&spec)?;
    let transient: Vec<usize> = (0..problem.space.len())
        .filter(|&x| bd.class_of[x].is_none())
        .collect();
    let mut results = json!({
        "simplex": spec.kind(),
        "boundary": {
            "classes": bd.classes.iter().map(|c| labels(&problem.space, c)).collect::<Vec<_>>(),
            "class_of": bd.class_of,
            "transient": labels(&problem.space, &transient),
        },
    });
    let mut csv = vec![vec![
        "measure".to_string(),
        "class".into(),
        "weight".into(),
        "point".into(),
        "mass".into(),
    ]];
    for (name, m) in [("mu", &problem.mu), ("nu", &problem.nu)] {
        if let Some(m) = m {
            results[name] = decomposition_json(m, &spec, &mut csv, name)?;
        }
    }
    let r = problem.restriction()?;
    if let (Ok(cost), Some(mu), Some(nu)) = (problem.cost_matrix(problem.p), &problem.mu, &problem.nu) {
        if r.has_product_structure() {
            let res = solve_constrained_ot(mu, nu, &cost, &r)?;
            if let Some(plan) = &res.plan {
                let dec = decompose_plan(plan, &r)?;
                results["plan"] = json!({
                    "weights": vec_json(&dec.weights),
                    "atoms": dec.atoms,
                    "marginal_classes": dec.marginal_classes,
                    "marginal_error": num(dec.marginal_error.iter().copied().fold(0.0, f64::max)),
                    "reconstruction_error": num((dec.reconstruct() - &plan.p).amax()),
                });
            }
        }
    }
    Ok(Output {
        command: "decompose",
        digest,
        results,
        csv: Some(csv),
        code: EXIT_OK,
    })
}

fn cmd_metric(cli: &Cli, file: &PathBuf) -> Result<Output> {
    let (problem, digest) = load(file)?;
    let p = exponent(cli, &problem)?;
    let d = problem
        .metric
        .as_ref()
        .ok_or_else(|| Error::Parse("missing field at metric".into()))?;
    let spec = problem.simplex();
    let r = problem.restriction()?;
    let bm = boundary_metric(&spec, d, p, &r)?;
    let mut results = json!({
        "p": p,
        "restriction": problem.restriction_name(),
        "components": bm.components.iter().map(|c| labels(&problem.space, &c.support())).collect::<Vec<_>>(),
        "dbar": mat(&bm.dbar),
    });
    if let (Some(mu), Some(nu)) = (&problem.mu, &problem.nu) {
        let w = wasserstein(mu, nu, d, p, &r)?;
        let lifted = lifted_metric(mu, nu, &bm, &spec, p)?;
        results["wasserstein"] = num(w);
        results["lifted"] = num(lifted);
        results["gap"] = num(if w == lifted { 0.0 } else { (w - lifted).abs() });
    }
    let mut csv = vec![vec!["row".to_string(), "col".into(), "value".into()]];
    for i in 0..bm.dbar.nrows() {
        for j in 0..bm.dbar.ncols() {
            csv.push(vec![i.to_string(), j.to_string(), bm.dbar[(i, j)].to_string()]);
        }
    }
    Ok(Output {
        command: "metric",
        digest,
        results,
        csv: Some(csv),
        code: EXIT_OK,
    })
}

fn cmd_verify_file(cli: &Cli, file: &PathBuf, samples: usize) -> Result<Output> {
    let (problem, digest) = load(file)?;
    let tol = tolerance(cli, Some(&problem));
    let p = exponent(cli, &problem)?;
    let r = problem.restriction()?;
    let cost = problem.cost_matrix(p)?;
    let (mu, nu) = problem.marginals()?;
    let rep = verify_decomposition(mu, nu, &cost, &r)?;
    let sandwich = rep.lhs >= rep.unconstrained - 1e-9;
    let mut passed = rep.passed(tol) && sandwich;
    let mut results = json!({
        "tol": tol,
        "lhs": num(rep.lhs),
        "rhs": num(rep.rhs),
        "gap": num(rep.gap),
        "unconstrained": num(rep.unconstrained),
        "sandwich": sandwich,
        "mu_weights": vec_json(&rep.mu_weights),
        "nu_weights": vec_json(&rep.nu_weights),
        "inner_table": mat(&rep.inner_table.values),
        "outer_plan": rep.outer_plan.as_ref().map(mat),
        "outer_marginal_error": num(rep.outer_marginal_error),
        "plan_components": rep.plan_components,
        "plan_reconstruction_error": num(rep.plan_reconstruction_error),
        "qopt_violations": rep.qopt_violations.len(),
        "split_rectangles": rep.split_rectangles,
    });
    if let Some(d) = &problem.metric {
        let spec = problem.simplex();
        let mut pool = vec![mu.clone(), nu.clone()];
        pool.extend(sample_members(&spec, samples, cli.seed.unwrap_or(0))?);
        match verify_metric_decomposition(&spec, d, p, &r, &pool) {
            Ok(m) => {
                passed &= m.passed(tol);
                results["metric"] = json!({
                    "p": p,
                    "samples": pool.len(),
                    "max_gap": num(m.max_gap),
                    "dbar": mat(&m.boundary.dbar),
                    "axioms_direct": m.direct_axioms.passed,
                    "axioms_lifted": m.lifted_axioms.passed,
                    "triangle_max_excess": num(m.direct_axioms.triangle_max_excess),
                    "passed": m.passed(tol),
                });
            }
            Err(e @ Error::NotGeometric(_)) => {
                results["metric"] = json!({ "skipped": e.to_string() });
            }
            Err(e) => return Err(e),
        }
    }
    results["passed"] = json!(passed);
    let csv = vec![
        vec!["lhs".to_string(), "rhs".into(), "gap".into(), "passed".into()],
        vec![rep.lhs.to_string(), rep.rhs.to_string(), rep.gap.to_string(), passed.to_string()],
    ];
    Ok(Output {
        command: "verify",
        digest,
        results,
        csv: Some(csv),
        code: if passed { EXIT_OK } else { EXIT_MATH },
    })
}

/// Random instance family and count parsed from `kind:key=value,...`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomSpec {
    pub family: InstanceFamily,
    pub count: usize,
    pub seed: Option<u64>,
}

fn parts(s: &str) -> Result<Vec<usize>> {
    s.split('+')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .ok()
                .filter(|&k| k > 0)
                .ok_or_else(|| Error::Parse(format!("bad part {t:?} in {s:?}")))
        })
        .collect()
}

/// Parses `perm:n=6,cycles=3+3,count=50,seed=7`, `perm:n=10,max_cycles=4`
/// or `kernel:classes=2+2,transient=2,count=10`.
pub fn parse_random_spec(s: &str) -> Result<RandomSpec> {
    let bad = |m: String| Error::Parse(format!("random spec {s:?}: {m}"));
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    let mut kv = std::collections::BTreeMap::new();
    for item in rest.split(',').filter(|t| !t.trim().is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| bad(format!("expected key=value, got {item:?}")))?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    let int = |k: &str| -> Result<Option<u64>> {
        kv.get(k)
            .map(|v| v.parse::<u64>().map_err(|_| bad(format!("{k} must be an integer"))))
            .transpose()
    };
    let count = int("count")?.unwrap_or(10) as usize;
    let seed = int("seed")?;
    let family = match kind.trim() {
        "perm" => {
            let n = int("n")?.map(|n| n as usize);
            match (kv.get("cycles"), n) {
                (Some(c), n) => {
                    let cycles = parts(c)?;
                    let total: usize = cycles.iter().sum();
                    if n.is_some_and(|n| n != total) {
                        return Err(bad(format!("cycles sum to {total}, n is {}", n.unwrap_or(0))));
                    }
                    InstanceFamily::Permutation { cycles }
                }
                (None, Some(n)) if n > 0 => InstanceFamily::MixedPermutation {
                    n,
                    max_cycles: int("max_cycles")?.unwrap_or(4) as usize,
                },
                _ => return Err(bad("perm needs n or cycles".into())),
            }
        }
        "kernel" => InstanceFamily::Kernel {
            classes: parts(kv.get("classes").ok_or_else(|| bad("kernel needs classes".into()))?)?,
            transient: int("transient")?.unwrap_or(0) as usize,
        },
        other => return Err(bad(format!("unknown family {other:?}"))),
    };
    let known = ["n", "cycles", "max_cycles", "classes", "transient", "count", "seed"];
    if let Some(k) = kv.keys().find(|k| !known.contains(&k.as_str())) {
        return Err(bad(format!("unknown key {k:?}")));
    }
    Ok(RandomSpec { family, count, seed })
}

fn cmd_verify_random(cli: &Cli, spec: &str) -> Result<Output> {
    let rs = parse_random_spec(spec)?;
    let tol = tolerance(cli, None);
    let base = rs.seed.or(cli.seed).unwrap_or(0);
    let rows = (0..rs.count)
        .into_par_iter()
        .map(|i| {
            let seed = base.wrapping_add(i as u64);
            let inst = generate_instance(&InstanceSpec {
                family: rs.family.clone(),
                seed,
            })?;
            let rep = verify_decomposition(&inst.mu, &inst.nu, &inst.cost, &inst.restriction)?;
            let sandwich = rep.lhs >= rep.unconstrained - 1e-9;
            Ok((i, seed, inst.space.len(), rep.mu_weights.len(), rep.lhs, rep.rhs, rep.gap, rep.passed(tol) && sandwich))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_gap = rows.iter().map(|r| r.6).fold(0.0, f64::max);
    let passed = rows.iter().all(|r| r.7);
    let mut csv = vec![vec![
        "instance".to_string(),
        "seed".into(),
        "n".into(),
        "lhs".into(),
        "rhs".into(),
        "gap".into(),
        "passed".into(),
    ]];
    let instances: Vec<Value> = rows
        .iter()
        .map(|&(i, seed, n, k, lhs, rhs, gap, ok)| {
            csv.push(vec![
                i.to_string(),
                seed.to_string(),
                n.to_string(),
                lhs.to_string(),
                rhs.to_string(),
                gap.to_string(),
                ok.to_string(),
            ]);
            json!({
                "instance": i,
                "seed": seed,
                "n": n,
                "components": k,
                "lhs": num(lhs),
                "rhs": num(rhs),
                "gap": num(gap),
                "passed": ok,
            })
        })
        .collect();
    Ok(Output {
        command: "verify",
        digest: digest(spec.as_bytes()),
        results: json!({
            "random": spec,
            "count": rs.count,
            "seed": base,
            "tol": tol,
            "max_gap": num(max_gap),
            "passed": passed,
            "instances": instances,
        }),
        csv: Some(csv),
        code: if passed { EXIT_OK } else { EXIT_MATH },
    })
}

fn to_value<T: serde::Serialize>(x: &T) -> Result<Value> {
    serde_json::to_value(x).map_err(|e| Error::Internal(e.to_string()))
}

fn sample_plans(problem: &Problem, r: &LinearRestriction) -> Result<Vec<TransportPlan>> {
    let mut plans = r.product_extremes()?;
    if let (Ok(cost), Some(mu), Some(nu)) = (problem.cost_matrix(problem.p), &problem.mu, &problem.nu) {
        if let Some(plan) = solve_constrained_ot(mu, nu, &cost, r)?.plan {
            plans.push(plan);
        }
    }
    Ok(plans)
}

fn run_checks(problem: &Problem, prop: Property, digest: String) -> Result<Output> {
    let r = problem.restriction()?;
    let spec = problem.simplex();
    let bd = ergodic::boundary(&spec)?;
    let mut members = bd.components.clone();
    members.extend(problem.mu.iter().cloned());
    members.extend(problem.nu.iter().cloned());
    let want = |p: Property| prop == Property::All || prop == p;
    let mut results = serde_json::Map::new();
    let mut passed = true;
    if want(Property::WeakRegularity) {
        let mut pairs: Vec<(Measure, Measure)> = Vec::new();
        for a in &members {
            for b in &members {
                pairs.push((a.clone(), b.clone()));
            }
        }
        let rep = check_weak_regularity(&r, &pairs);
        passed &= rep.passed;
        results.insert("weak_regularity".into(), to_value(&rep)?);
    }
    if want(Property::Geometric) {
        let rep = check_geometric(&r, &members)?;
        passed &= rep.passed;
        results.insert("geometric".into(), to_value(&rep)?);
    }
    if want(Property::Coherency) {
        let rep = check_coherency(&r, &sample_plans(problem, &r)?)?;
        passed &= rep.passed;
        results.insert("coherency".into(), to_value(&rep)?);
    }
    if want(Property::Decomposability) {
        let rep = check_ergodic_decomposability(&r)?;
        passed &= rep.passed;
        results.insert("decomposability".into(), to_value(&rep)?);
    }
    if want(Property::Kernel) {
        let mut kernels = Vec::new();
        match &spec {
            SimplexSpec::GroupInvariant(a) => kernels.push(("marginal", ergodic::averaging_kernel(a))),
            SimplexSpec::KernelStationary(q) => kernels.push(("marginal", q.clone())),
            SimplexSpec::Full(_) => {}
        }
        if let Some(q) = &r.product_kernel {
            kernels.push(("product", q.clone()));
        }
        let mut out = serde_json::Map::new();
        for (name, q) in kernels {
            let check = check_ergodic_kernel(&q);
            let defect = multiplicative_defect(&q);
            passed &= check.ok && defect == 0.0;
            out.insert(
                name.into(),
                json!({ "ok": check.ok, "offending": check.offending, "multiplicative_defect": num(defect) }),
            );
        }
        results.insert("kernel".into(), Value::Object(out));
    }
    results.insert("passed".into(), json!(passed));
    Ok(Output {
        command: "check",
        digest,
        results: Value::Object(results),
        csv: None,
        code: if passed { EXIT_OK } else { EXIT_MATH },
    })
}
