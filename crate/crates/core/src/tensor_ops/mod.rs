//! Tensor and Kronecker linear algebra.
//!
//! All reshaping follows the column-stacking convention: `vec(M)[i + r·j] =
//! M[i, j]` for an `r × s` matrix, and for u-way arrays the first index
//! changes fastest.

mod linalg;
mod permutation;

pub use linalg::{
    benchmark_distance, inverse_sqrt, projection, regularized_inverse, solve_symmetric, sqrt_psd,
    subspace_distance, symmetric_powers, InversionMode, SubspaceBasis, SymmetricPowers,
    DEFAULT_RANK_TOL,
};
pub use permutation::{commutation_matrix, kron_vec_permutation, pi_matrix, Permutation};
pub(crate) use linalg::{compensated_sum, mean_and_se};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Stack the columns of `m` into a single vector.
pub fn vec(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec`]: fold `v` into an `r × (len / r)` matrix column by column.
pub fn mat(v: &[f64], r: usize) -> Result<DMatrix<f64>> {
    if r == 0 || v.is_empty() || v.len() % r != 0 {
        return Err(Error::Dimension(format!(
            "cannot fold a vector of length {} into {} rows",
            v.len(),
            r
        )));
    }
    Ok(DMatrix::from_column_slice(r, v.len() / r, v))
}

/// Kronecker product `a ⊗ b`: block `(i, j)` of the result is `a[i, j]·b`.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// A dense u-way array stored with its first index changing fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn offset(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.dims.len() {
            return Err(Error::Dimension(format!(
                "index has {} components for a {}-way array",
                index.len(),
                self.dims.len()
            )));
        }
        let mut offset = 0;
        let mut stride = 1;
        for (&i, &d) in index.iter().zip(&self.dims) {
            if i >= d {
                return Err(Error::Dimension(format!("index {i} out of range for extent {d}")));
            }
            offset += i * stride;
            stride *= d;
        }
        Ok(offset)
    }

    pub fn get(&self, index: &[usize]) -> Result<f64> {
        Ok(self.data[self.offset(index)?])
    }

    /// View a 2-way array as a matrix.
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        match self.dims[..] {
            [r, s] => Ok(DMatrix::from_column_slice(r, s, &self.data)),
            _ => Err(Error::Dimension(format!("{}-way array is not a matrix", self.dims.len()))),
        }
    }
}

/// Fold `v` into a u-way array with extents `dims` (first index fastest).
pub fn arr(v: &[f64], dims: &[usize]) -> Result<Tensor> {
    let len: usize = dims.iter().product();
    if dims.is_empty() || dims.contains(&0) || len != v.len() {
        return Err(Error::Dimension(format!(
            "extents {:?} do not match vector length {}",
            dims,
            v.len()
        )));
    }
    Ok(Tensor {
        dims: dims.to_vec(),
        data: v.to_vec(),
    })
}

/// Flatten a u-way array back into a vector; inverse of [`arr`].
pub fn vec_array(t: &Tensor) -> DVector<f64> {
    DVector::from_column_slice(&t.data)
}
