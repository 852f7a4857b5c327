//! Problem files: JSON documents describing a space, a cost or metric, an
//! action or kernel, marginals and a restriction.

use serde_json::Value;

use crate::ergodic;
use crate::error::{Error, Result};
use crate::restriction::{
    invariance_restriction, stationarity_restriction, subgroup_restriction, LinearRestriction,
};
use crate::types::{
    matrix_from_rows, CostMatrix, FiniteSpace, GroundMetric, GroupAction, Measure, Permutation,
    SimplexSpec, StochKernel, Validate,
};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum RestrictionKind {
    None,
    Invariance,
    Stationarity,
    Subgroup(Vec<(Permutation, Permutation)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub space: FiniteSpace,
    pub metric: Option<GroundMetric>,
    pub cost: Option<CostMatrix>,
    pub action: Option<GroupAction>,
    pub kernel: Option<StochKernel>,
    pub mu: Option<Measure>,
    pub nu: Option<Measure>,
    pub p: f64,
    pub restriction: RestrictionKind,
    pub tolerance: Option<f64>,
}

fn at(path: &str, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{msg} at {path}"))
}

fn located(path: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Invalid { violations, .. } => at(
            path,
            violations
                .iter()
                .map(|v| v.message.as_str())
                .collect::<Vec<_>>()
                .join("; "),
        ),
        Error::Parse(m) | Error::DimensionMismatch(m) => at(path, m),
        other => at(path, other),
    }
}

fn number(v: &Value, path: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| at(path, "expected a number"))
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| at(path, "expected an array"))
}

fn vector(v: &Value, path: &str) -> Result<Vec<f64>> {
    array(v, path)?
        .iter()
        .enumerate()
        .map(|(i, x)| number(x, &format!("{path}[{i}]")))
        .collect()
}

fn matrix(v: &Value, path: &str, n: usize) -> Result<nalgebra::DMatrix<f64>> {
    let rows = array(v, path)?
        .iter()
        .enumerate()
        .map(|(i, r)| vector(r, &format!("{path}[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    let m = matrix_from_rows(&rows).map_err(located(path))?;
    if m.nrows() != n || m.ncols() != n {
        return Err(at(
            path,
            format!("matrix is {}x{}, space has {n} points", m.nrows(), m.ncols()),
        ));
    }
    Ok(m)
}

fn space(v: Option<&Value>) -> Result<FiniteSpace> {
    let s = match v {
        None => return Err(at("space", "missing field")),
        Some(Value::Number(n)) => {
            let n = n
                .as_u64()
                .filter(|&n| n > 0)
                .ok_or_else(|| at("space", "expected a positive point count"))?;
            FiniteSpace::indexed(n as usize)
        }
        Some(Value::Array(labels)) => labels
            .iter()
            .enumerate()
            .map(|(i, l)| match l {
                Value::String(s) => Ok(s.clone()),
                Value::Number(n) => Ok(n.to_string()),
                _ => Err(at(&format!("space[{i}]"), "expected a label")),
            })
            .collect::<Result<Vec<_>>>()
            .and_then(FiniteSpace::new),
        Some(_) => return Err(at("space", "expected a point count or a list of labels")),
    }
    .map_err(located("space"))?;
    s.ensure_valid().map_err(located("space"))?;
    Ok(s)
}

/// Cycle notation over labels, or a one-line array of images.
pub fn permutation(v: &Value, path: &str, space: &FiniteSpace) -> Result<Permutation> {
    let n = space.len();
    match v {
        Value::String(s) => Permutation::parse_cycles_with(s, n, |t| space.index_of(t))
            .map_err(located(path)),
        Value::Array(items) => {
            let image = items
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    x.as_u64()
                        .map(|u| u as usize)
                        .or_else(|| x.as_str().and_then(|s| space.index_of(s)))
                        .ok_or_else(|| at(&format!("{path}[{i}]"), "expected a point"))
                })
                .collect::<Result<Vec<_>>>()?;
            if image.len() != n {
                return Err(at(
                    path,
                    format!("one-line form has {} images, space has {n} points", image.len()),
                ));
            }
            Permutation::from_images(image).map_err(located(path))
        }
        _ => Err(at(path, "expected cycle notation or a one-line array")),
    }
}

fn action(v: &Value, space: &FiniteSpace) -> Result<GroupAction> {
    let gens = match v {
        Value::Object(map) => map
            .iter()
            .map(|(label, g)| Ok((label.clone(), permutation(g, &format!("action.{label}"), space)?)))
            .collect::<Result<Vec<_>>>()?,
        Value::Array(items) => items
            .iter()
            .enumerate()
            .map(|(i, g)| Ok((format!("g{i}"), permutation(g, &format!("action[{i}]"), space)?)))
            .collect::<Result<Vec<_>>>()?,
        Value::String(_) => vec![("g0".to_string(), permutation(v, "action", space)?)],
        _ => return Err(at("action", "expected named permutations")),
    };
    GroupAction::new(space.clone(), gens).map_err(located("action"))
}

fn restriction(v: Option<&Value>, space: &FiniteSpace) -> Result<RestrictionKind> {
    match v {
        None => Ok(RestrictionKind::None),
        Some(Value::String(s)) => match s.as_str() {
            "none" => Ok(RestrictionKind::None),
            "invariance" => Ok(RestrictionKind::Invariance),
            "stationarity" => Ok(RestrictionKind::Stationarity),
            other => Err(at("restriction", format!("unknown restriction {other:?}"))),
        },
        Some(Value::Object(map)) => {
            let pairs = map
                .get("subgroup")
                .ok_or_else(|| at("restriction", "expected {\"subgroup\": [[g, h], ...]}"))?;
            array(pairs, "restriction.subgroup")?
                .iter()
                .enumerate()
                .map(|(i, pair)| {
                    let path = format!("restriction.subgroup[{i}]");
                    match pair.as_array().map(Vec::as_slice) {
                        Some([g, h]) => Ok((
                            permutation(g, &format!("{path}[0]"), space)?,
                            permutation(h, &format!("{path}[1]"), space)?,
                        )),
                        _ => Err(at(&path, "expected a pair [g, h]")),
                    }
                })
                .collect::<Result<Vec<_>>>()
                .map(RestrictionKind::Subgroup)
        }
        Some(_) => Err(at("restriction", "expected a restriction name or object")),
    }
}

impl Problem {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: Value = serde_json::from_str(text)
            .map_err(|e| Error::Parse(format!("malformed JSON: {e}")))?;
        let obj = doc
            .as_object()
            .ok_or_else(|| at("$", "expected an object"))?;
        if let Some(v) = obj.get("version") {
            match v.as_u64() {
                Some(FORMAT_VERSION) => {}
                _ => return Err(at("version", format!("unsupported version {v}"))),
            }
        }
        let space = space(obj.get("space"))?;
        let n = space.len();
        let metric = obj
            .get("metric")
            .map(|v| {
                let m = GroundMetric::new(space.clone(), matrix(v, "metric", n)?)
                    .map_err(located("metric"))?;
                m.ensure_valid().map_err(located("metric"))?;
                Ok::<_, Error>(m)
            })
            .transpose()?;
        let cost = obj
            .get("cost")
            .map(|v| {
                let c = CostMatrix::new(space.clone(), space.clone(), matrix(v, "cost", n)?)
                    .map_err(located("cost"))?;
                c.ensure_valid().map_err(located("cost"))?;
                Ok::<_, Error>(c)
            })
            .transpose()?;
        let action = obj.get("action").map(|v| action(v, &space)).transpose()?;
        let kernel = obj
            .get("kernel")
            .map(|v| {
                let k = StochKernel::new(space.clone(), matrix(v, "kernel", n)?)
                    .map_err(located("kernel"))?;
                k.ensure_valid().map_err(located("kernel"))?;
                Ok::<_, Error>(k)
            })
            .transpose()?;
        if action.is_some() && kernel.is_some() {
            return Err(at("$", "give either an action or a kernel, not both"));
        }
        let p = match obj.get("p") {
            None => 1.0,
            Some(v) => {
                let p = number(v, "p")?;
                if !(p >= 1.0 && p.is_finite()) {
                    return Err(at("p", format!("exponent {p} must be a finite real ≥ 1")));
                }
                p
            }
        };
        let tolerance = obj
            .get("tolerance")
            .map(|v| number(v, "tolerance"))
            .transpose()?;
        let restriction = restriction(obj.get("restriction"), &space)?;
        let mut problem = Problem {
            space,
            metric,
            cost,
            action,
            kernel,
            mu: None,
            nu: None,
            p,
            restriction,
            tolerance,
        };
        if let Some(m) = obj.get("marginals") {
            let m = m
                .as_object()
                .ok_or_else(|| at("marginals", "expected an object with mu and nu"))?;
            problem.mu = m.get("mu").map(|v| problem.marginal(v, "marginals.mu")).transpose()?;
            problem.nu = m.get("nu").map(|v| problem.marginal(v, "marginals.nu")).transpose()?;
        }
        Ok(problem)
    }

    fn marginal(&self, v: &Value, path: &str) -> Result<Measure> {
        let mu = match v {
            Value::Object(o) => {
                let w = vector(
                    o.get("weights")
                        .ok_or_else(|| at(path, "expected a vector or {\"weights\": [...]}"))?,
                    &format!("{path}.weights"),
                )?;
                let bd = ergodic::boundary(&self.simplex()).map_err(located(path))?;
                if w.len() != bd.len() {
                    return Err(at(
                        &format!("{path}.weights"),
                        format!("{} weights for {} components", w.len(), bd.len()),
                    ));
                }
                let mut out = vec![0.0; self.space.len()];
                for (wa, comp) in w.iter().zip(&bd.components) {
                    for (o, &c) in out.iter_mut().zip(comp.as_slice()) {
                        *o += wa * c;
                    }
                }
                out
            }
            _ => vector(v, path)?,
        };
        if mu.len() != self.space.len() {
            return Err(at(
                path,
                format!("{} weights, space has {} points", mu.len(), self.space.len()),
            ));
        }
        let mu = Measure::new(self.space.clone(), mu).map_err(located(path))?;
        mu.ensure_valid().map_err(located(path))?;
        Ok(mu)
    }

    /// Simplex of the marginals: invariant measures of the action, stationary
    /// measures of the kernel, or all measures.
    pub fn simplex(&self) -> SimplexSpec {
        match (&self.action, &self.kernel) {
            (Some(a), _) => SimplexSpec::GroupInvariant(a.clone()),
            (_, Some(k)) => SimplexSpec::KernelStationary(k.clone()),
            _ => SimplexSpec::Full(self.space.clone()),
        }
    }

    pub fn restriction(&self) -> Result<LinearRestriction> {
        let need_action = || {
            self.action
                .as_ref()
                .ok_or_else(|| at("restriction", "needs an action"))
        };
        match &self.restriction {
            RestrictionKind::None => {
                let spec = self.simplex();
                Ok(LinearRestriction::unconstrained(spec.clone(), spec))
            }
            RestrictionKind::Invariance => invariance_restriction(need_action()?),
            RestrictionKind::Subgroup(pairs) => subgroup_restriction(need_action()?, pairs),
            RestrictionKind::Stationarity => match (&self.kernel, &self.action) {
                (Some(k), _) => stationarity_restriction(k, k),
                (None, Some(a)) => {
                    let q = ergodic::averaging_kernel(a);
                    stationarity_restriction(&q, &q)
                }
                (None, None) => Err(at("restriction", "needs a kernel or an action")),
            },
        }
    }

    pub fn restriction_name(&self) -> &'static str {
        match self.restriction {
            RestrictionKind::None => "none",
            RestrictionKind::Invariance => "invariance",
            RestrictionKind::Stationarity => "stationarity",
            RestrictionKind::Subgroup(_) => "subgroup",
        }
    }

    /// The explicit cost, or the metric raised to the power `p`.
    pub fn cost_matrix(&self, p: f64) -> Result<CostMatrix> {
        match (&self.cost, &self.metric) {
            (Some(c), _) => Ok(c.clone()),
            (None, Some(d)) => Ok(d.cost_pow(p)),
            (None, None) => Err(at("$", "needs a cost or a metric")),
        }
    }

    pub fn marginals(&self) -> Result<(&Measure, &Measure)> {
        let mu = self.mu.as_ref().ok_or_else(|| at("marginals.mu", "missing field"))?;
        let nu = self.nu.as_ref().ok_or_else(|| at("marginals.nu", "missing field"))?;
        Ok((mu, nu))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const C3X2: &str = r#"{
        "version": 1,
        "space": 6,
        "action": {"T": "(0 1 2)(3 4 5)"},
        "metric": [[0,1,1,2,2,2],[1,0,1,2,2,2],[1,1,0,2,2,2],
                   [2,2,2,0,1,1],[2,2,2,1,0,1],[2,2,2,1,1,0]],
        "marginals": {"mu": {"weights": [0.5, 0.5]}, "nu": {"weights": [0.25, 0.75]}},
        "restriction": "invariance"
    }"#;

    #[test]
    fn parses_fixture() {
        let p = Problem::from_json_str(C3X2).unwrap();
        assert_eq!(p.space.len(), 6);
        let nu = p.nu.unwrap();
        assert!((nu.w[0] - 0.25 / 3.0).abs() < 1e-15);
        assert_eq!(p.action.unwrap().generators[0].0, "T");
    }

    #[test]
    fn bad_mass_names_field() {
        let text = C3X2.replace(r#"{"weights": [0.5, 0.5]}"#, "[0.15,0.15,0.15,0.15,0.15,0.15]");
        let err = Problem::from_json_str(&text).unwrap_err();
        assert_eq!(err.to_string(), "mass sum 0.9 ≠ 1 at marginals.mu");
    }

    #[test]
    fn one_line_and_labelled_permutations() {
        let s = FiniteSpace::new(["a", "b", "c"]).unwrap();
        let g = permutation(&serde_json::json!("(a b c)"), "x", &s).unwrap();
        let h = permutation(&serde_json::json!([1, 2, 0]), "x", &s).unwrap();
        assert_eq!(g, h);
        let err = permutation(&serde_json::json!([1, 1, 0]), "action.g", &s).unwrap_err();
        assert!(err.to_string().ends_with("at action.g"));
    }

    #[test]
    fn bad_matrix_row_is_located() {
        let text = C3X2.replace("[2,2,2,1,1,0]]", "[2,2,2,1,1,\"x\"]]");
        let err = Problem::from_json_str(&text).unwrap_err();
        assert_eq!(err.to_string(), "expected a number at metric[5][5]");
    }
}
