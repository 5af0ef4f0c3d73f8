//! Variation and covariation matrices.
//!
//! A variation `Δ` multiplies chosen entries of Σ (and their mirrors) by
//! non-zero factors. A covariation `Δ̃` multiplies further entries so that
//! `Σ' = Δ̃∘Δ∘Σ` still satisfies every statement of the model.

use std::fmt;

use crate::cimodel::{model_holds, nonempty_conditioning, CISet, CIStatement};
use crate::error::{Error, Result};
use crate::matcore::{
    embed_block, ones_block, schur, IndexSet, Minor, RectBlock, SymMatrix, TolPolicy,
};

/// Symmetric variation matrix with its list of varied positions.
#[derive(Clone, Debug, PartialEq)]
pub struct Variation {
    n: usize,
    entries: Vec<((usize, usize), f64)>,
    matrix: SymMatrix,
}

fn same_position(p: (usize, usize), q: (usize, usize)) -> bool {
    p == q || p == (q.1, q.0)
}

/// Builds `Δ` with `δ` at each `(i, j)` and `(j, i)`, ones elsewhere.
pub fn make_variation(n: usize, entries: &[((usize, usize), f64)]) -> Result<Variation> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let mut matrix = SymMatrix::ones(n);
    for (k, &((i, j), d)) in entries.iter().enumerate() {
        if i >= n || j >= n {
            return Err(Error::IndexOutOfRange {
                index: i.max(j) + 1,
                dim: n,
            });
        }
        if d == 0.0 {
            return Err(Error::ZeroFactor { row: i + 1, col: j + 1 });
        }
        if !d.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "variation factor at ({}, {}) is not finite",
                i + 1,
                j + 1
            )));
        }
        if entries[..k].iter().any(|&(p, _)| same_position(p, (i, j))) {
            return Err(Error::DuplicatePosition { row: i + 1, col: j + 1 });
        }
        matrix.set_sym(i, j, d);
    }
    Ok(Variation {
        n,
        entries: entries.to_vec(),
        matrix,
    })
}

impl Variation {
    pub fn single(n: usize, i: usize, j: usize, delta: f64) -> Result<Self> {
        make_variation(n, &[((i, j), delta)])
    }

    pub fn identity(n: usize) -> Result<Self> {
        make_variation(n, &[])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[((usize, usize), f64)] {
        &self.entries
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.matrix
    }

    /// One single-position variation per entry.
    pub fn split(&self) -> Vec<Variation> {
        self.entries
            .iter()
            .map(|&((i, j), d)| Variation::single(self.n, i, j, d).expect("entries were validated"))
            .collect()
    }

    /// `Δ₁∘Δ₂`; factors on a shared position multiply.
    fn merge(&self, other: &Variation) -> Result<Variation> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                left: self.n,
                right: other.n,
            });
        }
        let mut entries = self.entries.clone();
        for &(p, d) in &other.entries {
            match entries.iter_mut().find(|(q, _)| same_position(*q, p)) {
                Some((_, e)) => *e *= d,
                None => entries.push((p, d)),
            }
        }
        Ok(Variation {
            n: self.n,
            entries,
            matrix: schur(&self.matrix, &other.matrix)?,
        })
    }
}

/// Covariation scheme for a single varied position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// `Δ̃` is all ones.
    None,
    /// Every entry of Σ is multiplied by δ.
    Total,
    /// The whole block `(A∪C) × (B∪C)` is multiplied by δ.
    Partial,
    /// Rows `E` of the block; `None` picks the smallest valid set.
    Row(Option<IndexSet>),
    /// Columns `F` of the block; `None` picks the smallest valid set.
    Column(Option<IndexSet>),
}

impl Scheme {
    pub fn label(&self) -> &'static str {
        match self {
            Scheme::None => "none",
            Scheme::Total => "total",
            Scheme::Partial => "partial",
            Scheme::Row(_) => "row",
            Scheme::Column(_) => "column",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Row(Some(e)) => write!(f, "row{e}"),
            Scheme::Column(Some(s)) => write!(f, "column{s}"),
            other => f.write_str(other.label()),
        }
    }
}

/// One single-position variation together with its covariation.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanFactor {
    pub position: (usize, usize),
    pub delta: f64,
    /// Scheme with E or F resolved.
    pub scheme: Scheme,
    /// The block `rows × cols` filled with δ before symmetrization. `None` for
    /// factors merged from several covariations.
    pub region: Option<(IndexSet, IndexSet)>,
    /// `Δ̃ᵏ∘Δᵏ` for this factor alone.
    pub product: SymMatrix,
}

/// `Δ`, `Δ̃` and `P = Δ̃∘Δ`, with the factors they were built from.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationPlan {
    variation: Variation,
    covariation: SymMatrix,
    product: SymMatrix,
    factors: Vec<PlanFactor>,
    warnings: Vec<String>,
}

impl PerturbationPlan {
    /// A plan that leaves Σ unchanged.
    pub fn identity(n: usize) -> Result<Self> {
        Ok(Self {
            variation: Variation::identity(n)?,
            covariation: SymMatrix::ones(n),
            product: SymMatrix::ones(n),
            factors: Vec::new(),
            warnings: Vec::new(),
        })
    }

    fn from_factor(variation: Variation, factor: PlanFactor, warnings: Vec<String>) -> Self {
        let product = factor.product.clone();
        let covariation = product
            .entrywise_div(variation.matrix())
            .expect("same dimension, non-zero variation");
        Self {
            variation,
            covariation,
            product,
            factors: vec![factor],
            warnings,
        }
    }

    pub fn dim(&self) -> usize {
        self.product.dim()
    }

    pub fn variation(&self) -> &Variation {
        &self.variation
    }

    pub fn covariation(&self) -> &SymMatrix {
        &self.covariation
    }

    pub fn product(&self) -> &SymMatrix {
        &self.product
    }

    pub fn factors(&self) -> &[PlanFactor] {
        &self.factors
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// True iff the plan has at least one factor and every factor is total.
    pub fn is_total(&self) -> bool {
        !self.factors.is_empty() && self.factors.iter().all(|f| f.scheme == Scheme::Total)
    }

    /// Product of all δ factors.
    pub fn total_delta(&self) -> f64 {
        self.factors.iter().map(|f| f.delta).product()
    }
}

impl fmt::Display for PerturbationPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for fac in &self.factors {
            writeln!(
                f,
                "vary ({}, {}) by {} with {} covariation",
                fac.position.0 + 1,
                fac.position.1 + 1,
                fac.delta,
                fac.scheme
            )?;
        }
        write!(f, "{}", self.product)
    }
}

fn single_entry(v: &Variation) -> Result<((usize, usize), f64)> {
    match v.entries() {
        [e] => Ok(*e),
        _ => Err(Error::InvalidArgument(format!(
            "a single-position variation is required, got {} positions",
            v.entries().len()
        ))),
    }
}

fn factor_from_region(
    n: usize,
    position: (usize, usize),
    delta: f64,
    scheme: Scheme,
    rows: IndexSet,
    cols: IndexSet,
) -> Result<PlanFactor> {
    let product = ones_block(n, &rows, &cols, delta)?;
    Ok(PlanFactor {
        position,
        delta,
        scheme,
        region: Some((rows, cols)),
        product,
    })
}

fn total_factor(n: usize, position: (usize, usize), delta: f64) -> Result<PlanFactor> {
    if delta <= 0.0 {
        return Err(Error::SchemeInvalid(format!(
            "total covariation needs δ > 0 so variances keep their sign, got {delta}"
        )));
    }
    factor_from_region(
        n,
        position,
        delta,
        Scheme::Total,
        IndexSet::full(n),
        IndexSet::full(n),
    )
}

fn uncovaried_factor(n: usize, position: (usize, usize), delta: f64) -> Result<PlanFactor> {
    factor_from_region(
        n,
        position,
        delta,
        Scheme::None,
        IndexSet::singleton(position.0),
        IndexSet::singleton(position.1),
    )
}

/// Orients `(i, j)` into `rows × cols` if it or its mirror lies there.
fn orient(i: usize, j: usize, rows: &IndexSet, cols: &IndexSet) -> Option<(usize, usize)> {
    if rows.contains(i) && cols.contains(j) {
        Some((i, j))
    } else if rows.contains(j) && cols.contains(i) {
        Some((j, i))
    } else {
        None
    }
}

fn sign_warning(delta: f64, warnings: &mut Vec<String>) {
    if delta < 0.0 {
        warnings.push(format!(
            "δ = {delta} is negative: covaried covariances change sign"
        ));
    }
}

/// Builds the covariation for one varied position and one statement.
///
/// Row and column sets are checked against the case table: for the block
/// position `(r, c)`, a row set needs `r ∈ E ⊆ A` when `r ∈ A` and `E = C`
/// when `r ∈ C`; a column set needs `c ∈ F ⊆ B` when `c ∈ B` and `F = C`
/// when `c ∈ C`.
pub fn build_scheme(v: &Variation, scheme: &Scheme, stmt: &CIStatement) -> Result<PerturbationPlan> {
    let n = v.dim();
    stmt.check_dim(n)?;
    let ((i, j), delta) = single_entry(v)?;
    let mut warnings = Vec::new();
    let (rows, cols) = (stmt.row_set(), stmt.col_set());

    let factor = match scheme {
        Scheme::None => uncovaried_factor(n, (i, j), delta)?,
        Scheme::Total => total_factor(n, (i, j), delta)?,
        _ => match orient(i, j, &rows, &cols) {
            None => {
                warnings.push(format!(
                    "position ({}, {}) is outside the block of {stmt}; no covariation needed",
                    i + 1,
                    j + 1
                ));
                uncovaried_factor(n, (i, j), delta)?
            }
            Some((r, c)) => {
                sign_warning(delta, &mut warnings);
                match scheme {
                    Scheme::Partial => {
                        factor_from_region(n, (i, j), delta, Scheme::Partial, rows, cols)?
                    }
                    Scheme::Row(e) => {
                        let e = resolve_side(r, stmt.a(), stmt.c(), e.as_ref(), "row", 'E')?;
                        factor_from_region(n, (i, j), delta, Scheme::Row(Some(e.clone())), e, cols)?
                    }
                    Scheme::Column(f) => {
                        let f = resolve_side(c, stmt.b(), stmt.c(), f.as_ref(), "column", 'F')?;
                        factor_from_region(n, (i, j), delta, Scheme::Column(Some(f.clone())), rows, f)?
                    }
                    Scheme::None | Scheme::Total => unreachable!(),
                }
            }
        },
    };
    Ok(PerturbationPlan::from_factor(v.clone(), factor, warnings))
}

/// Resolves or checks E (or F) for block coordinate `x` lying in `side ∪ C`.
fn resolve_side(
    x: usize,
    side: &IndexSet,
    c: &IndexSet,
    given: Option<&IndexSet>,
    what: &str,
    name: char,
) -> Result<IndexSet> {
    let in_side = side.contains(x);
    match given {
        None if in_side => Ok(IndexSet::singleton(x)),
        None => Ok(c.clone()),
        Some(s) if in_side => {
            if s.contains(x) && s.is_subset(side) {
                Ok(s.clone())
            } else {
                Err(Error::SchemeInvalid(format!(
                    "{what} set {name} = {s} must contain {} and lie inside {side}",
                    x + 1
                )))
            }
        }
        Some(s) => {
            if s == c {
                Ok(s.clone())
            } else {
                Err(Error::SchemeInvalid(format!(
                    "the varied entry touches the conditioning set, so {what} set {name} must equal {c}, got {s}"
                )))
            }
        }
    }
}

/// Builds the covariation for one varied position and a whole statement set.
///
/// Marginal statements never need covariation. With one remaining statement
/// this is [`build_scheme`]. With several, rows and columns refer to the union
/// block `R × K`, `R = ∪(A_k∪C_k)`, `K = ∪(B_k∪C_k)`, and the result must pass
/// [`validate_multi`]. The default row set is `{r}`, extended by `R ∩ K` when
/// `r ∈ K`; the default column set is `{c}`, extended by `R ∩ K` when `c ∈ R`.
pub fn build_scheme_for_set(v: &Variation, scheme: &Scheme, ci: &CISet) -> Result<PerturbationPlan> {
    let n = v.dim();
    ci.check_dim(n)?;
    let ((i, j), delta) = single_entry(v)?;
    let star = nonempty_conditioning(ci);

    if matches!(scheme, Scheme::None | Scheme::Total) || star.is_empty() {
        let factor = match scheme {
            Scheme::Total => total_factor(n, (i, j), delta)?,
            _ => uncovaried_factor(n, (i, j), delta)?,
        };
        let mut warnings = Vec::new();
        if star.is_empty() && !matches!(scheme, Scheme::None | Scheme::Total) {
            warnings.push(
                "every statement has an empty conditioning set; no covariation needed".into(),
            );
        }
        return Ok(PerturbationPlan::from_factor(v.clone(), factor, warnings));
    }
    if star.len() == 1 {
        return build_scheme(v, scheme, &star.statements()[0]);
    }

    let (rows, cols) = star.union_block();
    let mut warnings = Vec::new();
    let factor = match orient(i, j, &rows, &cols) {
        None => {
            warnings.push(format!(
                "position ({}, {}) is outside every statement block; no covariation needed",
                i + 1,
                j + 1
            ));
            uncovaried_factor(n, (i, j), delta)?
        }
        Some((r, c)) => {
            sign_warning(delta, &mut warnings);
            let shared = rows.intersection(&cols);
            match scheme {
                Scheme::Partial => factor_from_region(n, (i, j), delta, Scheme::Partial, rows, cols)?,
                Scheme::Row(e) => {
                    let e = match e {
                        Some(e) => e.clone(),
                        None if cols.contains(r) => IndexSet::singleton(r).union(&shared),
                        None => IndexSet::singleton(r),
                    };
                    if !e.contains(r) || !e.is_subset(&rows) {
                        return Err(Error::SchemeInvalid(format!(
                            "row set E = {e} must contain {} and lie inside {rows}",
                            r + 1
                        )));
                    }
                    factor_from_region(n, (i, j), delta, Scheme::Row(Some(e.clone())), e, cols)?
                }
                Scheme::Column(f) => {
                    let f = match f {
                        Some(f) => f.clone(),
                        None if rows.contains(c) => IndexSet::singleton(c).union(&shared),
                        None => IndexSet::singleton(c),
                    };
                    if !f.contains(c) || !f.is_subset(&cols) {
                        return Err(Error::SchemeInvalid(format!(
                            "column set F = {f} must contain {} and lie inside {cols}",
                            c + 1
                        )));
                    }
                    factor_from_region(n, (i, j), delta, Scheme::Column(Some(f.clone())), rows, f)?
                }
                Scheme::None | Scheme::Total => unreachable!(),
            }
        }
    };
    let plan = PerturbationPlan::from_factor(v.clone(), factor, warnings);
    if !validate_multi(&plan, ci) {
        return Err(Error::SchemeInvalid(format!(
            "{} covariation for ({}, {}) alters entries of the union block when symmetrized",
            plan.factors[0].scheme,
            i + 1,
            j + 1
        )));
    }
    Ok(plan)
}

/// Splits a multi-position variation into single positions, covaries each
/// with its scheme, and composes the results.
pub fn build_multi(v: &Variation, schemes: &[Scheme], ci: &CISet) -> Result<PerturbationPlan> {
    let parts = v.split();
    if schemes.len() != parts.len() && schemes.len() != 1 {
        return Err(Error::InvalidArgument(format!(
            "{} schemes given for {} varied positions",
            schemes.len(),
            parts.len()
        )));
    }
    let mut plan = PerturbationPlan::identity(v.dim())?;
    for (k, part) in parts.iter().enumerate() {
        let scheme = &schemes[if schemes.len() == 1 { 0 } else { k }];
        plan = compose(&plan, &build_scheme_for_set(part, scheme, ci)?)?;
    }
    Ok(plan)
}

/// `P₁∘P₂`, covering both variations; factors are concatenated.
pub fn compose(p1: &PerturbationPlan, p2: &PerturbationPlan) -> Result<PerturbationPlan> {
    let variation = p1.variation.merge(&p2.variation)?;
    let mut factors = p1.factors.clone();
    factors.extend(p2.factors.iter().cloned());
    let mut warnings = p1.warnings.clone();
    warnings.extend(p2.warnings.iter().cloned());
    Ok(PerturbationPlan {
        variation,
        covariation: schur(&p1.covariation, &p2.covariation)?,
        product: schur(&p1.product, &p2.product)?,
        factors,
        warnings,
    })
}

/// Covaries one single-position variation by the Schur product of several
/// covariations, e.g. one per statement: `P = Δ∘Δ̃₁∘…∘Δ̃ₖ`.
pub fn combine_covariations(plans: &[PerturbationPlan]) -> Result<PerturbationPlan> {
    let first = plans
        .first()
        .ok_or_else(|| Error::InvalidArgument("no plans to combine".into()))?;
    let ((i, j), delta) = single_entry(&first.variation)?;
    let mut covariation = first.covariation.clone();
    let mut warnings = first.warnings.clone();
    for p in &plans[1..] {
        let (q, d) = single_entry(&p.variation)?;
        if !same_position(q, (i, j)) || d != delta {
            return Err(Error::InvalidArgument(
                "combined covariations must share the same single variation".into(),
            ));
        }
        covariation = schur(&covariation, &p.covariation)?;
        warnings.extend(p.warnings.iter().cloned());
    }
    let product = schur(first.variation.matrix(), &covariation)?;
    let scheme = if plans.iter().all(|p| p.factors[0].scheme.label() == first.factors[0].scheme.label()) {
        first.factors[0].scheme.clone()
    } else {
        Scheme::Partial
    };
    let factor = PlanFactor {
        position: (i, j),
        delta,
        scheme,
        region: None,
        product: product.clone(),
    };
    Ok(PerturbationPlan {
        variation: first.variation.clone(),
        covariation,
        product,
        factors: vec![factor],
        warnings,
    })
}

/// Checks every factor against the union block `R × K` of the statements with
/// non-empty conditioning set.
///
/// The factor's intended block `X = (Δ̃∘Δ)_{R,K}` must survive symmetric
/// embedding unchanged (`X = (⌊X⌋¹)_{R,K}`), and its non-unit entries must
/// form full rows of `K` or full columns of `R`, all carrying δ.
pub fn validate_multi(plan: &PerturbationPlan, ci: &CISet) -> bool {
    let star = nonempty_conditioning(ci);
    if star.is_empty() {
        return true;
    }
    let (rows, cols) = star.union_block();
    let n = plan.dim();
    if rows.check_bounds(n).is_err() || cols.check_bounds(n).is_err() {
        return false;
    }
    plan.factors.iter().all(|f| factor_fits(f, &rows, &cols, n))
}

fn factor_fits(f: &PlanFactor, rows: &IndexSet, cols: &IndexSet, n: usize) -> bool {
    if f.delta == 1.0 {
        return true;
    }
    let intended = RectBlock::from_fn(rows.clone(), cols.clone(), |r, c| match &f.region {
        Some((fr, fc)) if fr.contains(r) && fc.contains(c) => f.delta,
        Some(_) => 1.0,
        None => f.product.get(r, c),
    });
    let Ok(embedded) = embed_block(n, &intended) else {
        return false;
    };
    let restricted = RectBlock::from_fn(rows.clone(), cols.clone(), |r, c| embedded.get(r, c));
    if restricted != intended {
        return false;
    }
    let (nr, nc) = (intended.nrows(), intended.ncols());
    let moved = |a: usize, b: usize| intended.get(a, b) != 1.0;
    if (0..nr).any(|a| (0..nc).any(|b| moved(a, b) && intended.get(a, b) != f.delta)) {
        return false;
    }
    let full_rows = (0..nr).all(|a| {
        let k = (0..nc).filter(|&b| moved(a, b)).count();
        k == 0 || k == nc
    });
    let full_cols = (0..nc).all(|b| {
        let k = (0..nr).filter(|&a| moved(a, b)).count();
        k == 0 || k == nr
    });
    full_rows || full_cols
}

/// `P∘Σ`.
pub fn apply(plan: &PerturbationPlan, sigma: &SymMatrix) -> Result<SymMatrix> {
    schur(plan.product(), sigma)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Preserving,
    /// `(statement index, first non-vanishing minor)` per broken statement.
    NotPreserving(Vec<(usize, Minor)>),
}

impl Verdict {
    pub fn is_preserving(&self) -> bool {
        matches!(self, Verdict::Preserving)
    }
}

/// Applies the plan and re-tests every statement. Positive semidefiniteness
/// of the result is not part of the verdict.
pub fn verify_preserving(
    plan: &PerturbationPlan,
    sigma: &SymMatrix,
    ci: &CISet,
    tol: &TolPolicy,
) -> Result<Verdict> {
    let before = model_holds(sigma, ci, tol)?;
    if let Some((k, w)) = before.failures.first() {
        return Err(Error::NotInModel(format!(
            "statement {} fails before perturbation: {w}",
            k + 1
        )));
    }
    let after = model_holds(&apply(plan, sigma)?, ci, tol)?;
    Ok(if after.holds {
        Verdict::Preserving
    } else {
        Verdict::NotPreserving(after.failures)
    })
}
