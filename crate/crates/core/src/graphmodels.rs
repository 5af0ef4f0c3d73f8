//! Gaussian Bayesian networks and undirected Gaussian graphical models.

use std::collections::BTreeSet;

use crate::cimodel::{CISet, CIStatement};
use crate::error::{Error, Result};
use crate::matcore::{inverse, SymMatrix, TolPolicy};

/// A linear-Gaussian DAG: `Y_i = β_0i + Σ_{j ∈ pa(i)} β_ji Y_j + ε_i`, `ε_i ~ N(0, σ_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianDAG {
    n: usize,
    order: Vec<usize>,
    /// `parents[i]` lists `(j, β_ji)`.
    parents: Vec<Vec<(usize, f64)>>,
    intercepts: Vec<f64>,
    cond_vars: Vec<f64>,
}

impl GaussianDAG {
    /// `edges` are `(from, to, beta)`; every edge must point forward in `order`.
    pub fn new(
        order: Vec<usize>,
        edges: &[(usize, usize, f64)],
        intercepts: Vec<f64>,
        cond_vars: Vec<f64>,
    ) -> Result<Self> {
        let n = order.len();
        if n == 0 {
            return Err(Error::Model("a DAG needs at least one vertex".into()));
        }
        let mut position = vec![usize::MAX; n];
        for (p, &v) in order.iter().enumerate() {
            if v >= n || position[v] != usize::MAX {
                return Err(Error::Model(format!(
                    "order is not a permutation of 1..={n}"
                )));
            }
            position[v] = p;
        }
        if intercepts.len() != n || cond_vars.len() != n {
            return Err(Error::Model(
                "intercepts and conditional variances need one entry per vertex".into(),
            ));
        }
        if let Some(i) = cond_vars.iter().position(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::Model(format!(
                "conditional variance of vertex {} must be positive",
                i + 1
            )));
        }
        let mut parents = vec![Vec::new(); n];
        for &(from, to, beta) in edges {
            if from >= n || to >= n {
                return Err(Error::IndexOutOfRange {
                    index: from.max(to) + 1,
                    dim: n,
                });
            }
            if position[from] >= position[to] {
                return Err(Error::Model(format!(
                    "edge {} -> {} does not follow the topological order",
                    from + 1,
                    to + 1
                )));
            }
            if parents[to].iter().any(|&(p, _)| p == from) {
                return Err(Error::Model(format!(
                    "duplicate edge {} -> {}",
                    from + 1,
                    to + 1
                )));
            }
            if !beta.is_finite() {
                return Err(Error::Model(format!(
                    "coefficient on {} -> {} is not finite",
                    from + 1,
                    to + 1
                )));
            }
            parents[to].push((from, beta));
        }
        for p in &mut parents {
            p.sort_by_key(|&(j, _)| position[j]);
        }
        Ok(Self {
            n,
            order,
            parents,
            intercepts,
            cond_vars,
        })
    }

    /// Vertices `0..n` in natural order with zero intercepts and unit variances.
    pub fn standard(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        Self::new((0..n).collect(), edges, vec![0.0; n], vec![1.0; n])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn parents(&self, i: usize) -> &[(usize, f64)] {
        &self.parents[i]
    }

    pub fn intercepts(&self) -> &[f64] {
        &self.intercepts
    }

    pub fn cond_vars(&self) -> &[f64] {
        &self.cond_vars
    }

    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for &to in &self.order {
            for &(from, beta) in &self.parents[to] {
                out.push((from, to, beta));
            }
        }
        out
    }

    /// Joint mean and covariance.
    ///
    /// Computed by the structural-equation recursion in topological order,
    /// which equals `(I−B)^{-T} Φ (I−B)^{-1}` and stays exact on integer inputs.
    pub fn to_gaussian(&self) -> (Vec<f64>, SymMatrix) {
        let n = self.n;
        let mut mean = vec![0.0; n];
        let mut cov = vec![0.0; n * n];
        for (p, &i) in self.order.iter().enumerate() {
            mean[i] = self.intercepts[i]
                + self.parents[i]
                    .iter()
                    .map(|&(j, b)| b * mean[j])
                    .sum::<f64>();
            // Cov(Y_i, Y_k) for every earlier k
            for &k in &self.order[..p] {
                let v: f64 = self.parents[i].iter().map(|&(j, b)| b * cov[j * n + k]).sum();
                cov[i * n + k] = v;
                cov[k * n + i] = v;
            }
            let var: f64 = self.cond_vars[i]
                + self.parents[i]
                    .iter()
                    .map(|&(j, b)| b * cov[j * n + i])
                    .sum::<f64>();
            cov[i * n + i] = var;
        }
        let sigma = SymMatrix::from_upper_fn(n, |a, b| cov[a * n + b]);
        (mean, sigma)
    }

    /// One statement `Y_i ⫫ Y_{pred(i) ∖ pa(i)} | Y_{pa(i)}` per vertex with a
    /// non-empty independence set, in topological order.
    pub fn ci_statements(&self) -> CISet {
        let mut out = Vec::new();
        for (p, &i) in self.order.iter().enumerate() {
            let pa: Vec<usize> = self.parents[i].iter().map(|&(j, _)| j).collect();
            let rest: Vec<usize> = self.order[..p]
                .iter()
                .copied()
                .filter(|k| !pa.contains(k))
                .collect();
            if rest.is_empty() {
                continue;
            }
            let s = CIStatement::from_indices(&[i], &rest, &pa)
                .expect("vertex, non-parents and parents are disjoint");
            out.push(s);
        }
        CISet::new(out)
    }
}

pub fn dag_to_gaussian(g: &GaussianDAG) -> (Vec<f64>, SymMatrix) {
    g.to_gaussian()
}

pub fn dag_ci_statements(g: &GaussianDAG) -> CISet {
    g.ci_statements()
}

/// Simple undirected graph on `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UndirectedGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl UndirectedGraph {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::IndexOutOfRange {
                    index: a.max(b) + 1,
                    dim: n,
                });
            }
            if a == b {
                return Err(Error::Model(format!("self-loop at vertex {}", a + 1)));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(Self { n, edges: set })
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        Self { n, edges }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn non_edges(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|i| ((i + 1)..self.n).map(move |j| (i, j)))
            .filter(|&(i, j)| !self.has_edge(i, j))
            .collect()
    }
}

/// Pairwise Markov statements `Y_i ⫫ Y_j | Y_rest`, one per non-edge.
pub fn ug_ci_statements(g: &UndirectedGraph) -> CISet {
    g.non_edges()
        .into_iter()
        .map(|(i, j)| {
            let rest: Vec<usize> = (0..g.n).filter(|&k| k != i && k != j).collect();
            CIStatement::from_indices(&[i], &[j], &rest).expect("disjoint by construction")
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct UgCheck {
    pub holds: bool,
    /// Non-edges whose precision entry is not zero.
    pub nonzero_non_edges: Vec<(usize, usize)>,
    /// Edges whose precision entry is zero.
    pub zero_edges: Vec<(usize, usize)>,
}

/// Checks `(Σ⁻¹)_ij = 0 ⇔ {i,j} ∉ E` in both directions.
///
/// A precision entry counts as zero when `|K_ij| <= tol.rel * sqrt(K_ii K_jj)`,
/// i.e. when the partial correlation vanishes at the relative tolerance.
pub fn ug_check(sigma: &SymMatrix, g: &UndirectedGraph, tol: &TolPolicy) -> Result<UgCheck> {
    if sigma.dim() != g.n {
        return Err(Error::DimensionMismatch {
            left: sigma.dim(),
            right: g.n,
        });
    }
    let k = inverse(sigma)?;
    let mut nonzero_non_edges = Vec::new();
    let mut zero_edges = Vec::new();
    for i in 0..g.n {
        for j in (i + 1)..g.n {
            let scale = (k.get(i, i) * k.get(j, j)).abs().sqrt();
            let is_zero = k.get(i, j).abs() <= tol.rel * scale;
            match (g.has_edge(i, j), is_zero) {
                (false, false) => nonzero_non_edges.push((i, j)),
                (true, true) => zero_edges.push((i, j)),
                _ => {}
            }
        }
    }
    Ok(UgCheck {
        holds: nonzero_non_edges.is_empty() && zero_edges.is_empty(),
        nonzero_non_edges,
        zero_edges,
    })
}
