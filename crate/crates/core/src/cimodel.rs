//! Conditional-independence statements and the vanishing-minor membership test.
//!
//! `A ⫫ B | C` holds for a Gaussian with covariance Σ iff every
//! `(|C|+1) × (|C|+1)` minor of `Σ[A ∪ C, B ∪ C]` vanishes.

use std::fmt;

use crate::error::{Error, Result};
use crate::matcore::{minors, submatrix, IndexSet, Minor, SymMatrix, TolPolicy};

/// `A ⫫ B | C` over 0-based variable indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CIStatement {
    a: IndexSet,
    b: IndexSet,
    c: IndexSet,
}

impl CIStatement {
    pub fn new(a: IndexSet, b: IndexSet, c: IndexSet) -> Result<Self> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::InvalidStatement(
                "both sides of an independence must be non-empty".into(),
            ));
        }
        if !a.is_disjoint(&b) || !a.is_disjoint(&c) || !b.is_disjoint(&c) {
            return Err(Error::InvalidStatement(format!(
                "sets {a}, {b}, {c} are not pairwise disjoint"
            )));
        }
        Ok(Self { a, b, c })
    }

    /// Convenience constructor from 0-based index lists.
    pub fn from_indices(a: &[usize], b: &[usize], c: &[usize]) -> Result<Self> {
        Self::new(
            IndexSet::new(a.to_vec())?,
            IndexSet::new(b.to_vec())?,
            IndexSet::new(c.to_vec())?,
        )
    }

    pub fn a(&self) -> &IndexSet {
        &self.a
    }

    pub fn b(&self) -> &IndexSet {
        &self.b
    }

    pub fn c(&self) -> &IndexSet {
        &self.c
    }

    /// Row index set `A ∪ C` of the defining block.
    pub fn row_set(&self) -> IndexSet {
        self.a.union(&self.c)
    }

    /// Column index set `B ∪ C` of the defining block.
    pub fn col_set(&self) -> IndexSet {
        self.b.union(&self.c)
    }

    pub fn is_marginal(&self) -> bool {
        self.c.is_empty()
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        self.a.check_bounds(n)?;
        self.b.check_bounds(n)?;
        self.c.check_bounds(n)
    }

    /// The same statement with A and B exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            a: self.b.clone(),
            b: self.a.clone(),
            c: self.c.clone(),
        }
    }

    /// True iff `(i, j)` lies in `[A ∪ C] × [B ∪ C]`.
    pub fn block_contains(&self, i: usize, j: usize) -> bool {
        (self.a.contains(i) || self.c.contains(i)) && (self.b.contains(j) || self.c.contains(j))
    }
}

impl fmt::Display for CIStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ⫫ {} | {}", self.a, self.b, self.c)
    }
}

/// An ordered list of statements.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CISet {
    statements: Vec<CIStatement>,
}

impl CISet {
    pub fn new(statements: Vec<CIStatement>) -> Self {
        Self { statements }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn statements(&self) -> &[CIStatement] {
        &self.statements
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &CIStatement> {
        self.statements.iter()
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        self.statements.iter().try_for_each(|s| s.check_dim(n))
    }

    /// Union row set `∪(A_k ∪ C_k)` and column set `∪(B_k ∪ C_k)`.
    pub fn union_block(&self) -> (IndexSet, IndexSet) {
        self.statements.iter().fold(
            (IndexSet::empty(), IndexSet::empty()),
            |(r, c), s| (r.union(&s.row_set()), c.union(&s.col_set())),
        )
    }
}

impl FromIterator<CIStatement> for CISet {
    fn from_iter<T: IntoIterator<Item = CIStatement>>(iter: T) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

/// Result of testing one statement.
#[derive(Clone, Debug, PartialEq)]
pub struct CiCheck {
    pub holds: bool,
    /// First non-vanishing minor in enumeration order, when `holds` is false.
    pub witness: Option<Minor>,
}

pub fn ci_holds(sigma: &SymMatrix, s: &CIStatement, tol: &TolPolicy) -> Result<CiCheck> {
    s.check_dim(sigma.dim())?;
    let block = submatrix(sigma, &s.row_set(), &s.col_set())?;
    let witness = minors(&block, s.c.len() + 1)?
        .into_iter()
        .find(|m| !m.vanishes(tol));
    Ok(CiCheck {
        holds: witness.is_none(),
        witness,
    })
}

/// Result of testing a whole statement set.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelCheck {
    pub holds: bool,
    /// `(statement index, witness)` for every failing statement.
    pub failures: Vec<(usize, Minor)>,
}

pub fn model_holds(sigma: &SymMatrix, ci: &CISet, tol: &TolPolicy) -> Result<ModelCheck> {
    let mut failures = Vec::new();
    for (k, s) in ci.iter().enumerate() {
        let check = ci_holds(sigma, s, tol)?;
        if let Some(w) = check.witness {
            failures.push((k, w));
        }
    }
    Ok(ModelCheck {
        holds: failures.is_empty(),
        failures,
    })
}

/// No entry of one defining block appears, directly or transposed, in the other.
pub fn separated(s1: &CIStatement, s2: &CIStatement) -> bool {
    let (r1, c1) = (s1.row_set(), s1.col_set());
    for i in r1.iter() {
        for j in c1.iter() {
            if s2.block_contains(i, j) || s2.block_contains(j, i) {
                return false;
            }
        }
    }
    true
}

pub fn is_separable(ci: &CISet) -> bool {
    let st = ci.statements();
    (0..st.len()).all(|i| ((i + 1)..st.len()).all(|j| separated(&st[i], &st[j])))
}

/// The statements with a non-empty conditioning set, in order.
pub fn nonempty_conditioning(ci: &CISet) -> CISet {
    ci.iter().filter(|s| !s.is_marginal()).cloned().collect()
}
