//! Divergences between the original and the perturbed Gaussian.
//!
//! KL values are `KL(Y'‖Y)` in nats, with `Y` the original distribution.

use crate::cimodel::CISet;
use crate::covariation::{apply, build_scheme_for_set, PerturbationPlan, Scheme, Variation};
use crate::error::{Error, Result};
use nalgebra::DVector;

use crate::matcore::{eigenvalues, is_positive_definite, SymMatrix};

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { left: a, right: b })
    }
}

fn check_perturbed(sigma2: &SymMatrix) -> Result<()> {
    if is_positive_definite(sigma2) {
        Ok(())
    } else {
        Err(Error::Inadmissible("perturbed covariance is not positive definite".into()))
    }
}

/// `x − ln(1 + x)`, accurate for small `x` where the two terms cancel.
fn excess(x: f64) -> f64 {
    if x.abs() >= 0.1 {
        return x - x.ln_1p();
    }
    // x²/2 − x³/3 + x⁴/4 − …
    let mut term = -x;
    let mut acc = 0.0;
    for k in 2..40 {
        term *= -x;
        let t = term / k as f64;
        acc += t;
        if t.abs() <= 1e-18 * acc.abs() {
            break;
        }
    }
    acc
}

/// KL of `N(μ + d, Σ + D)` from `N(μ, Σ)` given `D` and `d` directly.
///
/// With `Σ = LLᵀ` and `μ_k` the eigenvalues of `L⁻¹DL⁻ᵀ`, the covariance part
/// `tr(Σ⁻¹Σ') − n − ln det(Σ⁻¹Σ')` equals `Σ_k (μ_k − ln(1 + μ_k))`. Working
/// from `D` keeps full relative accuracy when the divergence is tiny.
fn kl_from_difference(sigma: &SymMatrix, big_d: &SymMatrix, d: &[f64]) -> Result<f64> {
    let l = sigma
        .to_dmatrix()
        .cholesky()
        .ok_or(Error::Singular { rcond: 0.0 })?
        .unpack();
    let x = l
        .solve_lower_triangular(&big_d.to_dmatrix())
        .ok_or(Error::Singular { rcond: 0.0 })?;
    let m = l
        .solve_lower_triangular(&x.transpose())
        .ok_or(Error::Singular { rcond: 0.0 })?;
    let m = SymMatrix::from_dmatrix_symmetrized(&m);
    let cov_part: f64 = eigenvalues(&m).into_iter().map(excess).sum();
    let z = l
        .solve_lower_triangular(&DVector::from_column_slice(d))
        .ok_or(Error::Singular { rcond: 0.0 })?;
    Ok(0.5 * (cov_part + z.norm_squared()))
}

/// `½(tr(Σ⁻¹Σ') + (μ−μ')ᵀΣ⁻¹(μ−μ') − n + ln(det Σ / det Σ'))`.
pub fn kl_gaussian(mu: &[f64], sigma: &SymMatrix, mu2: &[f64], sigma2: &SymMatrix) -> Result<f64> {
    let n = sigma.dim();
    check_dims(n, sigma2.dim())?;
    check_dims(n, mu.len())?;
    check_dims(n, mu2.len())?;
    check_perturbed(sigma2)?;
    let diff: Vec<f64> = mu.iter().zip(mu2).map(|(a, b)| b - a).collect();
    kl_from_difference(sigma, &sigma2.sub(sigma)?, &diff)
}

/// KL for an additive perturbation `μ + d`, `Σ + D`:
/// `½(tr(Σ⁻¹D) + dᵀΣ⁻¹d + ln(det Σ / det(Σ+D)))`.
pub fn kl_additive(sigma: &SymMatrix, big_d: &SymMatrix, d: &[f64]) -> Result<f64> {
    let n = sigma.dim();
    check_dims(n, big_d.dim())?;
    check_dims(n, d.len())?;
    check_perturbed(&sigma.add(big_d)?)?;
    kl_from_difference(sigma, big_d, d)
}

/// KL for `Σ' = P∘Σ`: `½(tr(Σ⁻¹(P∘Σ)) − n + ln(det Σ / det(P∘Σ)))`.
///
/// The change is taken as `(p_ij − 1) σ_ij`, which is exactly zero when `P`
/// is all ones.
pub fn kl_mp(sigma: &SymMatrix, plan: &PerturbationPlan) -> Result<f64> {
    let n = sigma.dim();
    check_dims(n, plan.dim())?;
    check_perturbed(&apply(plan, sigma)?)?;
    let p = plan.product();
    let change = SymMatrix::from_upper_fn(n, |i, j| (p.get(i, j) - 1.0) * sigma.get(i, j));
    kl_from_difference(sigma, &change, &vec![0.0; n])
}

/// `½ n (δ − ln δ − 1)`, the KL of `δΣ` from `Σ`.
pub fn kl_total_closed(n: usize, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "total covariation needs δ > 0, got {delta}"
        )));
    }
    Ok(0.5 * n as f64 * excess(delta - 1.0))
}

/// Closed form when every factor is total (with δ the product of the
/// factors), [`kl_mp`] otherwise.
pub fn kl_for_plan(sigma: &SymMatrix, plan: &PerturbationPlan) -> Result<f64> {
    if plan.is_total() {
        check_dims(sigma.dim(), plan.dim())?;
        if !is_positive_definite(sigma) {
            return Err(Error::Singular { rcond: 0.0 });
        }
        kl_total_closed(plan.dim(), plan.total_delta())
    } else {
        kl_mp(sigma, plan)
    }
}

/// `tr((Σ−Σ')ᵀ(Σ−Σ'))`, the sum of squared entrywise differences.
pub fn frobenius(sigma: &SymMatrix, sigma2: &SymMatrix) -> Result<f64> {
    check_dims(sigma.dim(), sigma2.dim())?;
    Ok(sigma
        .as_slice()
        .iter()
        .zip(sigma2.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum())
}

/// `Σ_ij (1 − p_ij)² σ_ij²`.
pub fn frobenius_mp(sigma: &SymMatrix, plan: &PerturbationPlan) -> Result<f64> {
    check_dims(sigma.dim(), plan.dim())?;
    Ok(plan
        .product()
        .as_slice()
        .iter()
        .zip(sigma.as_slice())
        .map(|(p, s)| {
            let t = (1.0 - p) * s;
            t * t
        })
        .sum())
}

/// Additive perturbation matching a multiplicative variation without
/// covariation: `d_ij = (δ_ij − 1) σ_ij` at every varied position.
pub fn standard_perturbation(sigma: &SymMatrix, v: &Variation) -> Result<SymMatrix> {
    check_dims(sigma.dim(), v.dim())?;
    let mut d = SymMatrix::zeros(sigma.dim());
    for &((i, j), delta) in v.entries() {
        d.set_sym(i, j, (delta - 1.0) * sigma.get(i, j));
    }
    Ok(d)
}

/// Divergences of one perturbed covariance from the original.
#[derive(Clone, Debug, PartialEq)]
pub struct DivergenceReport {
    pub scheme: String,
    /// Present iff the perturbed covariance is admissible.
    pub kl: Option<f64>,
    pub frobenius: f64,
    /// The perturbed covariance is positive definite.
    pub admissible: bool,
}

/// Report for `Σ' = P∘Σ`.
pub fn report_mp(sigma: &SymMatrix, plan: &PerturbationPlan, label: &str) -> Result<DivergenceReport> {
    let perturbed = apply(plan, sigma)?;
    let admissible = is_positive_definite(&perturbed);
    Ok(DivergenceReport {
        scheme: label.to_string(),
        kl: if admissible { Some(kl_for_plan(sigma, plan)?) } else { None },
        frobenius: frobenius_mp(sigma, plan)?,
        admissible,
    })
}

/// Report for `Σ' = Σ + D` with an unchanged mean.
pub fn report_additive(sigma: &SymMatrix, big_d: &SymMatrix, label: &str) -> Result<DivergenceReport> {
    let perturbed = sigma.add(big_d)?;
    let admissible = is_positive_definite(&perturbed);
    let zero = vec![0.0; sigma.dim()];
    Ok(DivergenceReport {
        scheme: label.to_string(),
        kl: if admissible { Some(kl_additive(sigma, big_d, &zero)?) } else { None },
        frobenius: frobenius(sigma, &perturbed)?,
        admissible,
    })
}

/// Frobenius distances of the four covariation schemes and of the matched
/// additive variation, in the order total, partial, row, column, standard.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderingReport {
    pub reports: Vec<DivergenceReport>,
    /// Inequalities of the chain that fail, as text.
    pub violations: Vec<String>,
}

impl OrderingReport {
    pub fn chain_holds(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn frobenius_of(&self, label: &str) -> Option<f64> {
        self.reports.iter().find(|r| r.scheme == label).map(|r| r.frobenius)
    }
}

/// Checks `total ≥ partial ≥ row ≥ standard` and `partial ≥ column ≥ standard`
/// on the Frobenius distances for one varied position.
pub fn scheme_ordering(
    sigma: &SymMatrix,
    position: (usize, usize),
    delta: f64,
    ci: &CISet,
) -> Result<OrderingReport> {
    let n = sigma.dim();
    let v = Variation::single(n, position.0, position.1, delta)?;
    let mut reports = Vec::new();
    for scheme in [
        Scheme::Total,
        Scheme::Partial,
        Scheme::Row(None),
        Scheme::Column(None),
    ] {
        let plan = build_scheme_for_set(&v, &scheme, ci)?;
        reports.push(report_mp(sigma, &plan, scheme.label())?);
    }
    reports.push(report_additive(sigma, &standard_perturbation(sigma, &v)?, "standard")?);

    let f = |k: usize| reports[k].frobenius;
    let mut violations = Vec::new();
    for (hi, lo) in [(0, 1), (1, 2), (1, 3), (2, 4), (3, 4)] {
        let slack = 1e-12 * f(hi).abs().max(f(lo).abs());
        if f(hi) + slack < f(lo) {
            violations.push(format!(
                "F({}) = {} < F({}) = {}",
                reports[hi].scheme,
                f(hi),
                reports[lo].scheme,
                f(lo)
            ));
        }
    }
    Ok(OrderingReport { reports, violations })
}
