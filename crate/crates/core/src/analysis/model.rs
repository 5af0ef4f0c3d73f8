use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cimodel::{model_holds, CISet, CIStatement, ModelCheck};
use crate::error::{Error, Result};
use crate::graphmodels::GaussianDAG;
use crate::matcore::{IndexSet, SymMatrix, TolPolicy};

/// Agreement required between a listed covariance and the one implied by the DAG.
const DAG_AGREEMENT: f64 = 1e-9;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    variables: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mean: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    covariance: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ci: Option<Vec<StatementEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dag: Option<DagEntry>,
    /// Relative tolerance for vanishing minors; defaults to 1e-9.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tolerance: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StatementEntry {
    #[serde(rename = "A")]
    a: Vec<String>,
    #[serde(rename = "B")]
    b: Vec<String>,
    #[serde(rename = "C", default)]
    c: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DagEntry {
    order: Vec<String>,
    #[serde(default)]
    edges: Vec<EdgeEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    intercepts: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cond_vars: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeEntry {
    from: String,
    to: String,
    beta: f64,
}

/// A Gaussian model: named variables, mean, covariance and CI statements.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub variables: Vec<String>,
    pub mean: Vec<f64>,
    pub covariance: SymMatrix,
    pub ci: CISet,
    pub dag: Option<GaussianDAG>,
    pub tolerance: TolPolicy,
}

fn fmt_err(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Format {
        field: field.into(),
        message: message.into(),
    }
}

fn agree(a: f64, b: f64) -> bool {
    (a - b).abs() <= DAG_AGREEMENT * a.abs().max(b.abs()).max(1.0)
}

impl Model {
    pub fn new(variables: Vec<String>, covariance: SymMatrix, ci: CISet) -> Result<Self> {
        let n = covariance.dim();
        if variables.len() != n {
            return Err(Error::DimensionMismatch {
                left: variables.len(),
                right: n,
            });
        }
        ci.check_dim(n)?;
        Ok(Self {
            variables,
            mean: vec![0.0; n],
            covariance,
            ci,
            dag: None,
            tolerance: TolPolicy::default(),
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        Self::from_file(file)
    }

    fn from_file(file: ModelFile) -> Result<Self> {
        let variables = file.variables;
        let n = variables.len();
        if n == 0 {
            return Err(fmt_err("variables", "at least one variable is required"));
        }
        for (k, name) in variables.iter().enumerate() {
            if name.trim().is_empty() {
                return Err(fmt_err(format!("variables[{}]", k + 1), "empty name"));
            }
            if variables[..k].contains(name) {
                return Err(fmt_err(
                    format!("variables[{}]", k + 1),
                    format!("duplicate name {name:?}"),
                ));
            }
        }
        let lookup = |field: &str, name: &str| -> Result<usize> {
            variables
                .iter()
                .position(|v| v == name)
                .ok_or_else(|| fmt_err(field, format!("unknown variable {name:?}")))
        };

        let dag = match &file.dag {
            None => None,
            Some(d) => Some(build_dag(d, n, &lookup)?),
        };
        let dag_moments = dag.as_ref().map(|g| g.to_gaussian());

        let covariance = match (&file.covariance, &dag_moments) {
            (Some(rows), _) => {
                if rows.len() != n {
                    return Err(fmt_err(
                        "covariance",
                        format!("expected {n} rows, found {}", rows.len()),
                    ));
                }
                if let Some(k) = rows.iter().position(|r| r.len() != n) {
                    return Err(fmt_err(
                        format!("covariance[{}]", k + 1),
                        format!("expected {n} entries, found {}", rows[k].len()),
                    ));
                }
                SymMatrix::from_rows(rows).map_err(|e| fmt_err("covariance", e.to_string()))?
            }
            (None, Some((_, s))) => s.clone(),
            (None, None) => {
                return Err(fmt_err("covariance", "either a covariance or a dag is required"))
            }
        };

        let mean = match (&file.mean, &dag_moments) {
            (Some(m), _) => {
                if m.len() != n {
                    return Err(fmt_err(
                        "mean",
                        format!("expected {n} entries, found {}", m.len()),
                    ));
                }
                if m.iter().any(|v| !v.is_finite()) {
                    return Err(fmt_err("mean", "entries must be finite"));
                }
                m.clone()
            }
            (None, Some((mu, _))) => mu.clone(),
            (None, None) => vec![0.0; n],
        };

        if let Some((mu, s)) = &dag_moments {
            for i in 0..n {
                if !agree(mean[i], mu[i]) {
                    return Err(fmt_err(
                        format!("mean[{}]", i + 1),
                        format!("{} disagrees with the dag value {}", mean[i], mu[i]),
                    ));
                }
                for j in 0..n {
                    if !agree(covariance.get(i, j), s.get(i, j)) {
                        return Err(fmt_err(
                            format!("covariance[{}][{}]", i + 1, j + 1),
                            format!(
                                "{} disagrees with the dag value {}",
                                covariance.get(i, j),
                                s.get(i, j)
                            ),
                        ));
                    }
                }
            }
        }

        let ci = match (&file.ci, &dag) {
            (Some(entries), _) => {
                let mut out = Vec::new();
                for (k, e) in entries.iter().enumerate() {
                    let field = format!("ci[{}]", k + 1);
                    let set = |side: &str, names: &[String]| -> Result<IndexSet> {
                        let f = format!("{field}.{side}");
                        let idx = names
                            .iter()
                            .map(|nm| lookup(&f, nm))
                            .collect::<Result<Vec<_>>>()?;
                        IndexSet::new(idx).map_err(|e| fmt_err(&f, e.to_string()))
                    };
                    let s = CIStatement::new(set("A", &e.a)?, set("B", &e.b)?, set("C", &e.c)?)
                        .map_err(|e| fmt_err(&field, e.to_string()))?;
                    out.push(s);
                }
                CISet::new(out)
            }
            (None, Some(g)) => g.ci_statements(),
            (None, None) => CISet::empty(),
        };

        let tolerance = match file.tolerance {
            Some(t) => TolPolicy::new(t).map_err(|e| fmt_err("tolerance", e.to_string()))?,
            None => TolPolicy::default(),
        };

        Ok(Self {
            variables,
            mean,
            covariance,
            ci,
            dag,
            tolerance,
        })
    }

    pub fn dim(&self) -> usize {
        self.variables.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }

    /// A variable by name, or by 1-based index.
    pub fn resolve(&self, token: &str) -> Result<usize> {
        let token = token.trim();
        if let Some(i) = self.index_of(token) {
            return Ok(i);
        }
        match token.parse::<usize>() {
            Ok(k) if (1..=self.dim()).contains(&k) => Ok(k - 1),
            _ => Err(Error::InvalidArgument(format!("unknown variable {token:?}"))),
        }
    }

    /// Parses `"i,j"` with names or 1-based indices.
    pub fn parse_position(&self, text: &str) -> Result<(usize, usize)> {
        match text.split(',').collect::<Vec<_>>().as_slice() {
            [a, b] => Ok((self.resolve(a)?, self.resolve(b)?)),
            _ => Err(Error::InvalidArgument(format!(
                "position {text:?} must have the form i,j"
            ))),
        }
    }

    pub fn names_of(&self, set: &IndexSet) -> Vec<String> {
        set.iter().map(|i| self.variables[i].clone()).collect()
    }

    pub fn check(&self) -> Result<ModelCheck> {
        model_holds(&self.covariance, &self.ci, &self.tolerance)
    }

    /// The model file text; [`Model::from_json_str`] reads it back unchanged.
    pub fn to_json(&self) -> Result<String> {
        let name = |i: usize| self.variables[i].clone();
        let dag = self.dag.as_ref().map(|g| DagEntry {
            order: g.order().iter().map(|&i| name(i)).collect(),
            edges: g
                .edges()
                .into_iter()
                .map(|(f, t, beta)| EdgeEntry {
                    from: name(f),
                    to: name(t),
                    beta,
                })
                .collect(),
            intercepts: Some((0..self.dim()).map(|i| (name(i), g.intercepts()[i])).collect()),
            cond_vars: Some((0..self.dim()).map(|i| (name(i), g.cond_vars()[i])).collect()),
        });
        let file = ModelFile {
            variables: self.variables.clone(),
            mean: Some(self.mean.clone()),
            covariance: Some(self.covariance.to_rows()),
            ci: Some(
                self.ci
                    .iter()
                    .map(|s| StatementEntry {
                        a: self.names_of(s.a()),
                        b: self.names_of(s.b()),
                        c: self.names_of(s.c()),
                    })
                    .collect(),
            ),
            dag,
            tolerance: Some(self.tolerance.rel),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }
}

fn build_dag(
    d: &DagEntry,
    n: usize,
    lookup: &dyn Fn(&str, &str) -> Result<usize>,
) -> Result<GaussianDAG> {
    let order = d
        .order
        .iter()
        .map(|nm| lookup("dag.order", nm))
        .collect::<Result<Vec<_>>>()?;
    if order.len() != n {
        return Err(fmt_err(
            "dag.order",
            format!("must list all {n} variables, found {}", order.len()),
        ));
    }
    let mut edges = Vec::new();
    for (k, e) in d.edges.iter().enumerate() {
        let f = format!("dag.edges[{}]", k + 1);
        edges.push((lookup(&f, &e.from)?, lookup(&f, &e.to)?, e.beta));
    }
    let per_vertex = |field: &str, map: &Option<BTreeMap<String, f64>>, default: f64| {
        let mut v = vec![default; n];
        if let Some(m) = map {
            for (nm, &x) in m {
                v[lookup(field, nm)?] = x;
            }
        }
        Ok::<_, Error>(v)
    };
    let intercepts = per_vertex("dag.intercepts", &d.intercepts, 0.0)?;
    let cond_vars = per_vertex("dag.cond_vars", &d.cond_vars, 1.0)?;
    GaussianDAG::new(order, &edges, intercepts, cond_vars).map_err(|e| fmt_err("dag", e.to_string()))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let text = std::fs::read_to_string(path)?;
    Model::from_json_str(&text)
}
