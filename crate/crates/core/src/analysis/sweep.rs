use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::Model;
use crate::cimodel::{model_holds, CISet};
use crate::covariation::{build_multi, make_variation, verify_preserving, Scheme};
use crate::divergence::{report_additive, report_mp, standard_perturbation};
use crate::error::{Error, Result};
use crate::matcore::IndexSet;

/// δ values are rounded to this grid so that, e.g., 0.75 + 25·0.01 is exactly 1.
const SNAP: f64 = 1e12;

fn snap(x: f64) -> f64 {
    (x * SNAP).round() / SNAP
}

/// Sorted δ values for one varied position.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaGrid {
    values: Vec<f64>,
}

impl DeltaGrid {
    /// `min, min + step, …` up to `max` inclusive.
    pub fn range(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && step.is_finite()) {
            return Err(Error::InvalidArgument("grid bounds must be finite".into()));
        }
        if step <= 0.0 {
            return Err(Error::InvalidArgument(format!("grid step must be positive, got {step}")));
        }
        if min > max {
            return Err(Error::InvalidArgument(format!("grid minimum {min} exceeds maximum {max}")));
        }
        let count = ((max - min) / step + 1e-9).floor() as usize;
        Self::list((0..=count).map(|k| min + k as f64 * step).collect())
    }

    pub fn list(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("grid is empty".into()));
        }
        let mut values: Vec<f64> = values.into_iter().map(snap).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("grid values must be finite".into()));
        }
        if values.contains(&0.0) {
            return Err(Error::InvalidArgument(
                "δ = 0 would force an independence and is not allowed".into(),
            ));
        }
        values.sort_by(f64::total_cmp);
        values.dedup();
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl Default for DeltaGrid {
    /// δ ∈ [0.75, 1.25] in steps of 0.01.
    fn default() -> Self {
        Self::range(0.75, 1.25, 0.01).expect("valid default grid")
    }
}

/// How a sweep perturbs the varied positions.
#[derive(Clone, Debug, PartialEq)]
pub enum SweepScheme {
    /// Additive `d_ij = (δ − 1)σ_ij` with no covariation.
    Standard,
    /// Schur-product covariation, built against the whole statement set or
    /// against one statement (0-based index).
    Covaried {
        scheme: Scheme,
        statement: Option<usize>,
    },
}

impl SweepScheme {
    pub fn covaried(scheme: Scheme) -> Self {
        SweepScheme::Covaried {
            scheme,
            statement: None,
        }
    }

    /// Standard, total, partial, row and column with default sets.
    pub fn all() -> Vec<Self> {
        vec![
            SweepScheme::Standard,
            Self::covaried(Scheme::Total),
            Self::covaried(Scheme::Partial),
            Self::covaried(Scheme::Row(None)),
            Self::covaried(Scheme::Column(None)),
        ]
    }

    pub fn label(&self) -> String {
        match self {
            SweepScheme::Standard => "standard".into(),
            SweepScheme::Covaried { scheme, statement } => match statement {
                Some(k) => format!("{scheme}@{}", k + 1),
                None => scheme.to_string(),
            },
        }
    }

    pub fn is_model_preserving(&self) -> bool {
        matches!(self, SweepScheme::Covaried { scheme, .. } if *scheme != Scheme::None)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub positions: Vec<(usize, usize)>,
    /// One grid per position.
    pub grids: Vec<DeltaGrid>,
    pub schemes: Vec<SweepScheme>,
}

impl SweepConfig {
    pub fn one_way(position: (usize, usize), grid: DeltaGrid, schemes: Vec<SweepScheme>) -> Self {
        Self {
            positions: vec![position],
            grids: vec![grid],
            schemes,
        }
    }

    pub fn two_way(
        positions: [(usize, usize); 2],
        grids: [DeltaGrid; 2],
        schemes: Vec<SweepScheme>,
    ) -> Self {
        Self {
            positions: positions.to_vec(),
            grids: grids.to_vec(),
            schemes,
        }
    }
}

/// One grid point of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub delta1: f64,
    pub delta2: Option<f64>,
    pub scheme: String,
    /// Present iff `admissible`.
    pub kl: Option<f64>,
    /// Missing only when the perturbation could not be built.
    pub frobenius: Option<f64>,
    pub admissible: bool,
    pub preserving: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Evaluates one perturbation of `model` at `deltas` (one per position).
pub fn evaluate_cell(
    model: &Model,
    positions: &[(usize, usize)],
    deltas: &[f64],
    scheme: &SweepScheme,
) -> SweepRecord {
    let mut rec = SweepRecord {
        delta1: deltas[0],
        delta2: deltas.get(1).copied(),
        scheme: scheme.label(),
        kl: None,
        frobenius: None,
        admissible: false,
        preserving: false,
        error: None,
    };
    if let Err(e) = fill_cell(model, positions, deltas, scheme, &mut rec) {
        rec.error = Some(e.to_string());
    }
    rec
}

fn fill_cell(
    model: &Model,
    positions: &[(usize, usize)],
    deltas: &[f64],
    scheme: &SweepScheme,
    rec: &mut SweepRecord,
) -> Result<()> {
    let sigma = &model.covariance;
    let entries: Vec<_> = positions.iter().copied().zip(deltas.iter().copied()).collect();
    let v = make_variation(sigma.dim(), &entries)?;
    let report = match scheme {
        SweepScheme::Standard => {
            let d = standard_perturbation(sigma, &v)?;
            let r = report_additive(sigma, &d, &rec.scheme)?;
            rec.preserving = model_holds(&sigma.add(&d)?, &model.ci, &model.tolerance)?.holds;
            r
        }
        SweepScheme::Covaried { scheme, statement } => {
            let target = match statement {
                None => model.ci.clone(),
                Some(k) => CISet::new(vec![model
                    .ci
                    .statements()
                    .get(*k)
                    .ok_or_else(|| {
                        Error::InvalidArgument(format!("statement {} does not exist", k + 1))
                    })?
                    .clone()]),
            };
            let plan = build_multi(&v, std::slice::from_ref(scheme), &target)?;
            let r = report_mp(sigma, &plan, &rec.scheme)?;
            rec.preserving =
                verify_preserving(&plan, sigma, &model.ci, &model.tolerance)?.is_preserving();
            r
        }
    };
    rec.kl = report.kl;
    rec.frobenius = Some(report.frobenius);
    rec.admissible = report.admissible;
    Ok(())
}

fn check_model(model: &Model, cfg: &SweepConfig, ways: usize) -> Result<()> {
    if cfg.positions.len() != ways || cfg.grids.len() != ways {
        return Err(Error::InvalidArgument(format!(
            "a {ways}-way sweep needs {ways} positions and {ways} grids"
        )));
    }
    if cfg.schemes.is_empty() {
        return Err(Error::InvalidArgument("no schemes to sweep".into()));
    }
    let n = model.dim();
    if let Some(&(i, j)) = cfg.positions.iter().find(|&&(i, j)| i >= n || j >= n) {
        return Err(Error::IndexOutOfRange {
            index: i.max(j) + 1,
            dim: n,
        });
    }
    let check = model.check()?;
    if let Some((k, w)) = check.failures.first() {
        return Err(Error::NotInModel(format!(
            "statement {} fails: {w}",
            k + 1
        )));
    }
    Ok(())
}

fn run(model: &Model, cfg: &SweepConfig, cells: Vec<(Vec<f64>, usize)>) -> Vec<SweepRecord> {
    cells
        .into_par_iter()
        .map(|(deltas, s)| evaluate_cell(model, &cfg.positions, &deltas, &cfg.schemes[s]))
        .collect()
}

/// Rows ordered by δ ascending, then by scheme in declared order.
pub fn one_way_sweep(model: &Model, cfg: &SweepConfig) -> Result<Vec<SweepRecord>> {
    check_model(model, cfg, 1)?;
    let cells = cfg.grids[0]
        .values()
        .iter()
        .flat_map(|&d| (0..cfg.schemes.len()).map(move |s| (vec![d], s)))
        .collect();
    Ok(run(model, cfg, cells))
}

/// Rows ordered by δ₁, then δ₂, then scheme.
pub fn two_way_sweep(model: &Model, cfg: &SweepConfig) -> Result<Vec<SweepRecord>> {
    check_model(model, cfg, 2)?;
    if cfg.positions[0] == cfg.positions[1]
        || cfg.positions[0] == (cfg.positions[1].1, cfg.positions[1].0)
    {
        return Err(Error::DuplicatePosition {
            row: cfg.positions[0].0 + 1,
            col: cfg.positions[0].1 + 1,
        });
    }
    let mut cells = Vec::new();
    for &d1 in cfg.grids[0].values() {
        for &d2 in cfg.grids[1].values() {
            for s in 0..cfg.schemes.len() {
                cells.push((vec![d1, d2], s));
            }
        }
    }
    Ok(run(model, cfg, cells))
}

/// Admissibility summary for one scheme.
#[derive(Clone, Debug, PartialEq)]
pub struct SchemeRegion {
    pub scheme: String,
    /// Admissibility of each of this scheme's records, in record order.
    pub mask: Vec<bool>,
    pub admissible_cells: usize,
    /// For one-way records: the largest admissible δ interval containing the
    /// grid point nearest to 1, if that point is admissible.
    pub interval: Option<(f64, f64)>,
}

/// Per-scheme admissibility, schemes in order of first appearance.
pub fn admissible_region(records: &[SweepRecord]) -> Vec<SchemeRegion> {
    let mut labels: Vec<&str> = Vec::new();
    for r in records {
        if !labels.contains(&r.scheme.as_str()) {
            labels.push(&r.scheme);
        }
    }
    labels
        .into_iter()
        .map(|label| {
            let rows: Vec<&SweepRecord> = records.iter().filter(|r| r.scheme == label).collect();
            let mask: Vec<bool> = rows.iter().map(|r| r.admissible).collect();
            let one_way = rows.iter().all(|r| r.delta2.is_none());
            let interval = if one_way { one_way_interval(&rows) } else { None };
            SchemeRegion {
                scheme: label.to_string(),
                admissible_cells: mask.iter().filter(|&&a| a).count(),
                mask,
                interval,
            }
        })
        .collect()
}

fn one_way_interval(rows: &[&SweepRecord]) -> Option<(f64, f64)> {
    let mut sorted: Vec<&SweepRecord> = rows.to_vec();
    sorted.sort_by(|a, b| a.delta1.total_cmp(&b.delta1));
    let centre = (0..sorted.len()).min_by(|&a, &b| {
        (sorted[a].delta1 - 1.0)
            .abs()
            .total_cmp(&(sorted[b].delta1 - 1.0).abs())
    })?;
    if !sorted[centre].admissible {
        return None;
    }
    let mut lo = centre;
    while lo > 0 && sorted[lo - 1].admissible {
        lo -= 1;
    }
    let mut hi = centre;
    while hi + 1 < sorted.len() && sorted[hi + 1].admissible {
        hi += 1;
    }
    Some((sorted[lo].delta1, sorted[hi].delta1))
}

/// Sweep description as stored in configuration files, with variable names.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Model file path, relative to the file holding the spec.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    pub positions: Vec<PositionEntry>,
    /// One grid per position; the default grid is used for missing ones.
    #[serde(default)]
    pub grids: Vec<GridEntry>,
    /// Defaults to standard, total, partial, row and column.
    #[serde(default)]
    pub schemes: Vec<SchemeEntry>,
    /// `"csv"` or `"json"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositionEntry {
    pub i: String,
    pub j: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridEntry {
    Range { min: f64, max: f64, step: f64 },
    List { values: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeEntry {
    /// standard, none, total, partial, row or column.
    pub kind: String,
    #[serde(rename = "E", default, skip_serializing_if = "Option::is_none")]
    pub e: Option<Vec<String>>,
    #[serde(rename = "F", default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<String>>,
    /// 1-based index into the model's statements.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statement_index: Option<usize>,
}

impl SchemeEntry {
    pub fn to_scheme(&self, model: &Model) -> Result<SweepScheme> {
        let names = |v: &Option<Vec<String>>| -> Result<Option<IndexSet>> {
            v.as_ref()
                .map(|names| {
                    IndexSet::new(
                        names
                            .iter()
                            .map(|n| model.resolve(n))
                            .collect::<Result<Vec<_>>>()?,
                    )
                })
                .transpose()
        };
        let scheme = match self.kind.as_str() {
            "standard" => return Ok(SweepScheme::Standard),
            "none" => Scheme::None,
            "total" => Scheme::Total,
            "partial" => Scheme::Partial,
            "row" => Scheme::Row(names(&self.e)?),
            "column" => Scheme::Column(names(&self.f)?),
            other => {
                return Err(Error::Format {
                    field: "schemes.kind".into(),
                    message: format!("unknown scheme {other:?}"),
                })
            }
        };
        let statement = match self.statement_index {
            None => None,
            Some(k) if (1..=model.ci.len()).contains(&k) => Some(k - 1),
            Some(k) => {
                return Err(Error::Format {
                    field: "schemes.statement_index".into(),
                    message: format!("model has {} statements, got {k}", model.ci.len()),
                })
            }
        };
        Ok(SweepScheme::Covaried { scheme, statement })
    }
}

impl SweepSpec {
    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_config(&self, model: &Model) -> Result<SweepConfig> {
        let positions = self
            .positions
            .iter()
            .map(|p| Ok((model.resolve(&p.i)?, model.resolve(&p.j)?)))
            .collect::<Result<Vec<_>>>()?;
        let mut grids = self
            .grids
            .iter()
            .map(|g| match g {
                GridEntry::Range { min, max, step } => DeltaGrid::range(*min, *max, *step),
                GridEntry::List { values } => DeltaGrid::list(values.clone()),
            })
            .collect::<Result<Vec<_>>>()?;
        while grids.len() < positions.len() {
            grids.push(DeltaGrid::default());
        }
        let schemes = if self.schemes.is_empty() {
            SweepScheme::all()
        } else {
            self.schemes
                .iter()
                .map(|s| s.to_scheme(model))
                .collect::<Result<Vec<_>>>()?
        };
        Ok(SweepConfig {
            positions,
            grids,
            schemes,
        })
    }
}
