//! Reference models used by the examples, tests and the bundled model files.

use crate::cimodel::{CISet, CIStatement};
use crate::graphmodels::GaussianDAG;
use crate::matcore::SymMatrix;

/// The four-variable example covariance, generated by [`dag_71`].
pub fn sigma_71() -> SymMatrix {
    SymMatrix::from_rows(&[
        vec![1.0, 2.0, 2.0, 7.0],
        vec![2.0, 5.0, 5.0, 17.0],
        vec![2.0, 5.0, 6.0, 19.0],
        vec![7.0, 17.0, 19.0, 63.0],
    ])
    .expect("fixture is symmetric")
}

/// 1→2 (2), 2→3 (1), 1→4 (1), 2→4 (1), 3→4 (2); unit variances, zero intercepts.
pub fn dag_71() -> GaussianDAG {
    GaussianDAG::standard(
        4,
        &[
            (0, 1, 2.0),
            (1, 2, 1.0),
            (0, 3, 1.0),
            (1, 3, 1.0),
            (2, 3, 2.0),
        ],
    )
    .expect("fixture DAG is valid")
}

/// `Y3 ⫫ Y1 | Y2`, the only statement of [`dag_71`].
pub fn ci_71() -> CISet {
    CISet::new(vec![CIStatement::from_indices(&[2], &[0], &[1]).unwrap()])
}

pub const CACHEXIA_VARIABLES: [&str; 6] = ["B", "V", "GC", "GM", "A", "F"];

/// Tolerance at which the metabolite matrices satisfy their statements; the
/// published entries are rounded to integers.
pub const CACHEXIA_TOL: f64 = 1e-4;

/// Covariance of the metabolites for the cachexia group.
///
/// The published table lists 1693 at (GC, A) and 1695 at (A, GC); the upper
/// triangle value is used for both.
pub fn cachexia() -> SymMatrix {
    SymMatrix::from_rows(&[
        vec![304.0, 3262.0, 220.0, 2963.0, 414.0, 208.0],
        vec![3262.0, 98456.0, 6637.0, 89431.0, 12489.0, 6279.0],
        vec![220.0, 6637.0, 3950.0, 53223.0, 1693.0, 839.0],
        vec![2963.0, 89431.0, 53223.0, 3050126.0, 65012.0, 31858.0],
        vec![414.0, 12489.0, 1693.0, 65012.0, 7279.0, 1791.0],
        vec![208.0, 6279.0, 839.0, 31858.0, 1791.0, 1124.0],
    ])
    .expect("fixture is symmetric")
}

/// Covariance of the metabolites for the control group.
pub fn control() -> SymMatrix {
    SymMatrix::from_rows(&[
        vec![41.0, 1004.0, 0.0, 310.0, 168.0, 51.0],
        vec![1004.0, 38647.0, 0.0, 11923.0, 10192.0, 1974.0],
        vec![0.0, 0.0, 109.0, 376.0, 0.0, 77.0],
        vec![310.0, 11923.0, 376.0, 8952.0, 3144.0, 1092.0],
        vec![168.0, 10192.0, 0.0, 3144.0, 5171.0, 520.0],
        vec![51.0, 1974.0, 77.0, 1092.0, 520.0, 192.0],
    ])
    .expect("fixture is symmetric")
}

fn st(a: &[usize], b: &[usize], c: &[usize]) -> CIStatement {
    CIStatement::from_indices(a, b, c).expect("fixture statement is valid")
}

/// GC ⫫ B | V, GM ⫫ {B,V} | GC, A ⫫ {B,GC} | {V,GM}, F ⫫ {B,GC} | {V,GM,A}.
pub fn cachexia_ci() -> CISet {
    CISet::new(vec![
        st(&[2], &[0], &[1]),
        st(&[3], &[0, 1], &[2]),
        st(&[4], &[0, 2], &[1, 3]),
        st(&[5], &[0, 2], &[1, 3, 4]),
    ])
}

/// GC ⫫ {B,V,A}, GM ⫫ B | {V,GC}, A ⫫ {GC,GM} | {B,V}.
pub fn control_ci() -> CISet {
    CISet::new(vec![
        st(&[2], &[0, 1, 4], &[]),
        st(&[3], &[0], &[1, 2]),
        st(&[4], &[2, 3], &[0, 1]),
    ])
}

/// The analyst-selected positions GM/B, GM/V, GC/B, GC/V.
pub const CACHEXIA_POSITIONS: [(usize, usize); 4] = [(3, 0), (3, 1), (2, 0), (2, 1)];
