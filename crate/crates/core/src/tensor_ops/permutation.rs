use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A permutation matrix stored as an index map: `(P·x)[i] = x[source[i]]`.
///
/// Commutation and Π matrices have `pR·pL·mR·mL` rows, so they are kept in
/// this form and only materialized on request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    source: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            source: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }

    /// Column index of the single 1 in row `i`.
    pub fn source_of(&self, i: usize) -> usize {
        self.source[i]
    }

    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.len() {
            return Err(Error::Dimension(format!(
                "permutation of size {} applied to vector of length {}",
                self.len(),
                x.len()
            )));
        }
        Ok(DVector::from_iterator(self.len(), self.source.iter().map(|&j| x[j])))
    }

    /// `P·M`: permute the rows of `m`.
    pub fn apply_rows(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if m.nrows() != self.len() {
            return Err(Error::Dimension(format!(
                "permutation of size {} applied to {} rows",
                self.len(),
                m.nrows()
            )));
        }
        Ok(DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(self.source[i], j)]))
    }

    /// `M·P`: permute the columns of `m`.
    pub fn right_apply(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if m.ncols() != self.len() {
            return Err(Error::Dimension(format!(
                "permutation of size {} right-applied to {} columns",
                self.len(),
                m.ncols()
            )));
        }
        // (M P)[r, j] = M[r, i] where source[i] = j
        let inv = self.inverse();
        Ok(DMatrix::from_fn(m.nrows(), m.ncols(), |r, j| m[(r, inv.source[j])]))
    }

    /// The product `self · other`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        assert_eq!(self.len(), other.len(), "composing permutations of different sizes");
        Permutation {
            source: self.source.iter().map(|&i| other.source[i]).collect(),
        }
    }

    pub fn inverse(&self) -> Permutation {
        let mut source = vec![0; self.len()];
        for (i, &j) in self.source.iter().enumerate() {
            source[j] = i;
        }
        Permutation { source }
    }

    /// `I_m ⊗ P`.
    pub fn identity_kron(&self, m: usize) -> Permutation {
        let n = self.len();
        Permutation {
            source: (0..m)
                .flat_map(|blk| self.source.iter().map(move |&j| blk * n + j))
                .collect(),
        }
    }

    /// `P ⊗ I_m`.
    pub fn kron_identity(&self, m: usize) -> Permutation {
        Permutation {
            source: self
                .source
                .iter()
                .flat_map(|&j| (0..m).map(move |t| j * m + t))
                .collect(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut out = DMatrix::zeros(n, n);
        for (i, &j) in self.source.iter().enumerate() {
            out[(i, j)] = 1.0;
        }
        out
    }
}

/// `K_{r1,r2}`, the permutation with `K·vec(A) = vec(Aᵀ)` for `A ∈ ℝ^{r1×r2}`.
pub fn commutation_matrix(r1: usize, r2: usize) -> Permutation {
    // vec(Aᵀ)[j + r2·i] = A[i, j] = vec(A)[i + r1·j]
    let mut source = vec![0; r1 * r2];
    for i in 0..r1 {
        for j in 0..r2 {
            source[j + r2 * i] = i + r1 * j;
        }
    }
    Permutation { source }
}

/// Π for `A ∈ ℝ^{r1×r2}`, `B ∈ ℝ^{r3×r4}`:
/// `vec(A ⊗ B) = Π·(vec(A) ⊗ vec(B))` with
/// `Π = I_{r2} ⊗ [(I_{r4} ⊗ K_{r1,r3}) K_{r3·r4, r1}]`.
pub fn kron_vec_permutation(r1: usize, r2: usize, r3: usize, r4: usize) -> Permutation {
    let inner = commutation_matrix(r1, r3)
        .identity_kron(r4)
        .compose(&commutation_matrix(r3 * r4, r1));
    inner.identity_kron(r2)
}

/// The envelope solver's Π: `vec(b ⊗ a) = Π·(vec(b) ⊗ vec(a))` for
/// `b ∈ ℝ^{pR×mR}`, `a ∈ ℝ^{pL×mL}`.
pub fn pi_matrix(p_r: usize, m_r: usize, p_l: usize, m_l: usize) -> Permutation {
    kron_vec_permutation(p_r, m_r, p_l, m_l)
}
