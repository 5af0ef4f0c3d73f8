//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use mpsens::graphmodels::GaussianDAG;
use mpsens::SymMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// DAG on `n` vertices in a shuffled order, each forward edge present with
/// probability `p`, coefficients in [−2, 2], conditional variances in [0.5, 2].
pub fn random_dag(r: &mut impl Rng, n: usize, p: f64) -> GaussianDAG {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(r);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if r.gen_bool(p) {
                let mut beta: f64 = r.gen_range(-2.0..2.0);
                if beta.abs() < 0.1 {
                    beta = 0.5;
                }
                edges.push((order[a], order[b], beta));
            }
        }
    }
    let intercepts = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
    let cond_vars = (0..n).map(|_| r.gen_range(0.5..2.0)).collect();
    GaussianDAG::new(order, &edges, intercepts, cond_vars).expect("generated DAG is valid")
}

/// `L Lᵀ + ε I` with Gaussian-like entries; positive definite.
pub fn random_pd(r: &mut impl Rng, n: usize) -> SymMatrix {
    let l: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| r.gen_range(-1.5..1.5)).collect())
        .collect();
    SymMatrix::from_upper_fn(n, |i, j| {
        let dot: f64 = (0..n).map(|k| l[i][k] * l[j][k]).sum();
        dot + if i == j { 0.1 } else { 0.0 }
    })
}

/// Positive semidefinite matrix of rank at most `rank`.
pub fn random_psd_rank(r: &mut impl Rng, n: usize, rank: usize) -> SymMatrix {
    let l: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..rank).map(|_| r.gen_range(-1.5..1.5)).collect())
        .collect();
    SymMatrix::from_upper_fn(n, |i, j| (0..rank).map(|k| l[i][k] * l[j][k]).sum())
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

/// Oracle: `‖A − B‖²` summed entry by entry.
pub fn squared_distance(a: &SymMatrix, b: &SymMatrix) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

/// Oracle for the Gaussian KL divergence via Gaussian elimination, with
/// `ln det` from the pivots. Returns `KL(N(μ₂, Σ₂) ‖ N(μ₁, Σ₁))`.
pub fn kl_oracle(mu1: &[f64], s1: &SymMatrix, mu2: &[f64], s2: &SymMatrix) -> f64 {
    let n = s1.dim();
    // Solve Σ₁ X = [Σ₂ | μ₁ − μ₂] and log det Σ₁ in one elimination.
    let mut aug: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = s1.row(i).to_vec();
            row.extend_from_slice(s2.row(i));
            row.push(mu1[i] - mu2[i]);
            row
        })
        .collect();
    let mut logdet1 = 0.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&a, &b| aug[a][c].abs().total_cmp(&aug[b][c].abs()))
            .unwrap();
        aug.swap(c, p);
        let piv = aug[c][c];
        logdet1 += piv.abs().ln();
        for r in 0..n {
            if r != c {
                let f = aug[r][c] / piv;
                let pivot_row = aug[c].clone();
                for (x, p) in aug[r].iter_mut().zip(&pivot_row).skip(c) {
                    *x -= f * p;
                }
            }
        }
    }
    let trace: f64 = (0..n).map(|i| aug[i][n + i] / aug[i][i]).sum();
    let diff: Vec<f64> = (0..n).map(|i| mu1[i] - mu2[i]).collect();
    let quad: f64 = (0..n).map(|i| diff[i] * aug[i][2 * n] / aug[i][i]).sum();
    let logdet2 = log_det_oracle(s2);
    0.5 * (trace + quad - n as f64 + logdet1 - logdet2)
}

pub fn log_det_oracle(s: &SymMatrix) -> f64 {
    let n = s.dim();
    let mut a = s.to_rows();
    let mut acc = 0.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))
            .unwrap();
        a.swap(c, p);
        acc += a[c][c].abs().ln();
        for r in (c + 1)..n {
            let f = a[r][c] / a[c][c];
            let pivot_row = a[c].clone();
            for (x, p) in a[r].iter_mut().zip(&pivot_row).skip(c) {
                *x -= f * p;
            }
        }
    }
    acc
}
