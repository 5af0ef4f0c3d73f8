//! Conditional Gaussian moments given evidence on a subset of variables.

use crate::error::{Error, Result};
use crate::matcore::{inverse, is_psd, IndexSet, SymMatrix, DEFAULT_REL_TOL};

/// Observed values `y_E` for the variables in `E`.
#[derive(Clone, Debug, PartialEq)]
pub struct Evidence {
    vars: IndexSet,
    values: Vec<f64>,
}

impl Evidence {
    /// `pairs` are `(variable, value)`; the order does not matter.
    pub fn new(pairs: &[(usize, f64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidArgument("evidence must name at least one variable".into()));
        }
        let mut sorted = pairs.to_vec();
        sorted.sort_by_key(|&(i, _)| i);
        let vars = IndexSet::new(sorted.iter().map(|&(i, _)| i).collect())?;
        if let Some(&(i, _)) = sorted.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "evidence value for variable {} is not finite",
                i + 1
            )));
        }
        Ok(Self {
            vars,
            values: sorted.into_iter().map(|(_, v)| v).collect(),
        })
    }

    pub fn vars(&self) -> &IndexSet {
        &self.vars
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Moments of `Y_O | Y_E = y_E`, `O = [n] ∖ E`, in increasing order of `O`.
#[derive(Clone, Debug, PartialEq)]
pub struct Conditional {
    pub free: IndexSet,
    pub mean: Vec<f64>,
    pub cov: SymMatrix,
}

/// `μ_O + Σ_OE Σ_EE⁻¹ (y_E − μ_E)` and `Σ_OO − Σ_OE Σ_EE⁻¹ Σ_EO`.
pub fn condition(mu: &[f64], sigma: &SymMatrix, ev: &Evidence) -> Result<Conditional> {
    let n = sigma.dim();
    if mu.len() != n {
        return Err(Error::DimensionMismatch {
            left: mu.len(),
            right: n,
        });
    }
    ev.vars.check_bounds(n)?;
    let e = ev.vars.as_slice();
    let free = IndexSet::full(n).difference(&ev.vars);
    if free.is_empty() {
        return Err(Error::InvalidArgument(
            "every variable is observed; nothing is left to condition".into(),
        ));
    }
    let o = free.as_slice();
    let k_ee = inverse(&sigma.principal(&ev.vars)?)?;

    // W = Σ_OE Σ_EE⁻¹, one row per free variable
    let w: Vec<Vec<f64>> = o
        .iter()
        .map(|&a| {
            (0..e.len())
                .map(|q| (0..e.len()).map(|p| sigma.get(a, e[p]) * k_ee.get(p, q)).sum())
                .collect()
        })
        .collect();
    let resid: Vec<f64> = e
        .iter()
        .zip(&ev.values)
        .map(|(&i, y)| y - mu[i])
        .collect();
    let mean = o
        .iter()
        .zip(&w)
        .map(|(&a, wa)| mu[a] + wa.iter().zip(&resid).map(|(x, r)| x * r).sum::<f64>())
        .collect();
    let cov = SymMatrix::from_upper_fn(o.len(), |x, y| {
        let adj: f64 = (0..e.len()).map(|q| w[x][q] * sigma.get(e[q], o[y])).sum();
        sigma.get(o[x], o[y]) - adj
    });
    Ok(Conditional { free, mean, cov })
}

/// Conditions the additively perturbed Gaussian `N(μ + d, Σ + D)`.
pub fn condition_perturbed(
    mu: &[f64],
    sigma: &SymMatrix,
    d: &[f64],
    big_d: &SymMatrix,
    ev: &Evidence,
) -> Result<Conditional> {
    if d.len() != mu.len() {
        return Err(Error::DimensionMismatch {
            left: d.len(),
            right: mu.len(),
        });
    }
    let perturbed = sigma.add(big_d)?;
    if !is_psd(&perturbed, DEFAULT_REL_TOL) {
        return Err(Error::Inadmissible(
            "perturbed covariance is not positive semidefinite".into(),
        ));
    }
    let shifted: Vec<f64> = mu.iter().zip(d).map(|(a, b)| a + b).collect();
    condition(&shifted, &perturbed, ev)
}
