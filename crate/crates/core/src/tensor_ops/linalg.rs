use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded, standard_normal_matrix};
use crate::tensor_ops::kron;

/// Relative eigenvalue cutoff used by the Moore–Penrose mode.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

const SINGULAR_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-8;
const SYMMETRY_TOL: f64 = 1e-8;

/// How inverses of (possibly singular) symmetric PSD matrices are formed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InversionMode {
    Exact,
    /// Moore–Penrose; eigenvalues at or below `rank_tol · λ_max` are dropped.
    Pseudo { rank_tol: f64 },
    /// `(S + εI)⁻¹`.
    Ridge { epsilon: f64 },
}

impl Default for InversionMode {
    fn default() -> Self {
        InversionMode::Exact
    }
}

impl InversionMode {
    pub fn pseudo() -> Self {
        InversionMode::Pseudo {
            rank_tol: DEFAULT_RANK_TOL,
        }
    }

    pub fn ridge(epsilon: f64) -> Result<Self> {
        let mode = InversionMode::Ridge { epsilon };
        mode.validate()?;
        Ok(mode)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            InversionMode::Exact => Ok(()),
            InversionMode::Pseudo { rank_tol } if rank_tol > 0.0 && rank_tol.is_finite() => Ok(()),
            InversionMode::Pseudo { rank_tol } => Err(Error::InvalidConfig(format!(
                "pseudo-inverse rank tolerance must be positive, got {rank_tol}"
            ))),
            InversionMode::Ridge { epsilon } if epsilon > 0.0 && epsilon.is_finite() => Ok(()),
            InversionMode::Ridge { epsilon } => Err(Error::InvalidConfig(format!(
                "ridge epsilon must be positive, got {epsilon}"
            ))),
        }
    }
}

/// Inverse, inverse square root and square root of a symmetric PSD matrix
/// under one inversion mode, all from a single eigendecomposition.
///
/// Under ridge the three powers are those of `S + εI`.
#[derive(Debug, Clone)]
pub struct SymmetricPowers {
    pub inverse: DMatrix<f64>,
    pub inv_sqrt: DMatrix<f64>,
    pub sqrt: DMatrix<f64>,
}

struct CheckedEigen {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
    max: f64,
}

fn checked_eigen(s: &DMatrix<f64>) -> Result<CheckedEigen> {
    if !s.is_square() {
        return Err(Error::Dimension(format!(
            "expected a square matrix, got {}×{}",
            s.nrows(),
            s.ncols()
        )));
    }
    let norm = s.norm();
    let asym = (s - s.transpose()).norm();
    if asym > SYMMETRY_TOL * norm.max(f64::MIN_POSITIVE) {
        return Err(Error::NotSymmetric(asym));
    }
    let sym = (s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let max = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -PSD_TOL * max.max(norm) {
        return Err(Error::NotPsd {
            min_eig: min,
            max_eig: max,
        });
    }
    Ok(CheckedEigen {
        values: eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect(),
        vectors: eig.eigenvectors,
        max,
    })
}

fn reassemble(e: &CheckedEigen, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let mut scaled = e.vectors.clone();
    for (j, &l) in e.values.iter().enumerate() {
        let g = f(l);
        scaled.column_mut(j).scale_mut(g);
    }
    let out = scaled * e.vectors.transpose();
    (&out + out.transpose()) * 0.5
}

/// Symmetric powers of a PSD matrix.
pub fn symmetric_powers(s: &DMatrix<f64>, mode: InversionMode) -> Result<SymmetricPowers> {
    mode.validate()?;
    let e = checked_eigen(s)?;
    match mode {
        InversionMode::Exact => {
            let min = e.values.iter().cloned().fold(f64::INFINITY, f64::min);
            if e.max <= 0.0 || min < SINGULAR_TOL * e.max {
                return Err(Error::singular(
                    &mode,
                    format!("λ_min = {min:e}, λ_max = {:e}", e.max),
                ));
            }
            Ok(SymmetricPowers {
                inverse: reassemble(&e, |l| 1.0 / l),
                inv_sqrt: reassemble(&e, |l| 1.0 / l.sqrt()),
                sqrt: reassemble(&e, f64::sqrt),
            })
        }
        InversionMode::Pseudo { rank_tol } => {
            let cut = rank_tol * e.max;
            let keep = move |l: f64| e.max > 0.0 && l > cut;
            Ok(SymmetricPowers {
                inverse: reassemble(&e, |l| if keep(l) { 1.0 / l } else { 0.0 }),
                inv_sqrt: reassemble(&e, |l| if keep(l) { 1.0 / l.sqrt() } else { 0.0 }),
                sqrt: reassemble(&e, f64::sqrt),
            })
        }
        InversionMode::Ridge { epsilon } => Ok(SymmetricPowers {
            inverse: reassemble(&e, |l| 1.0 / (l + epsilon)),
            inv_sqrt: reassemble(&e, |l| 1.0 / (l + epsilon).sqrt()),
            sqrt: reassemble(&e, |l| (l + epsilon).sqrt()),
        }),
    }
}

pub fn regularized_inverse(s: &DMatrix<f64>, mode: InversionMode) -> Result<DMatrix<f64>> {
    symmetric_powers(s, mode).map(|p| p.inverse)
}

pub fn inverse_sqrt(s: &DMatrix<f64>, mode: InversionMode) -> Result<DMatrix<f64>> {
    symmetric_powers(s, mode).map(|p| p.inv_sqrt)
}

/// Symmetric square root; under ridge this is the root of `S + εI`.
pub fn sqrt_psd(s: &DMatrix<f64>, mode: InversionMode) -> Result<DMatrix<f64>> {
    mode.validate()?;
    let e = checked_eigen(s)?;
    let shift = match mode {
        InversionMode::Ridge { epsilon } => epsilon,
        _ => 0.0,
    };
    Ok(reassemble(&e, |l| (l + shift).sqrt()))
}

/// Solve `N x = rhs` for symmetric PSD `N`.
///
/// Exact mode rejects near-singular `N`; the other modes return the
/// minimum-norm least-squares solution through the Moore–Penrose inverse.
pub fn solve_symmetric(
    n: &DMatrix<f64>,
    rhs: &DMatrix<f64>,
    mode: InversionMode,
) -> Result<DMatrix<f64>> {
    if n.nrows() != rhs.nrows() {
        return Err(Error::Dimension(format!(
            "normal matrix has {} rows, right-hand side {}",
            n.nrows(),
            rhs.nrows()
        )));
    }
    let e = checked_eigen(n)?;
    let min = e.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let cut = match mode {
        InversionMode::Exact => {
            if e.max <= 0.0 || min < SINGULAR_TOL * e.max {
                return Err(Error::singular(
                    &mode,
                    format!("normal equations λ_min = {min:e}, λ_max = {:e}", e.max),
                ));
            }
            0.0
        }
        InversionMode::Pseudo { rank_tol } => rank_tol * e.max,
        InversionMode::Ridge { .. } => DEFAULT_RANK_TOL * e.max,
    };
    let mut proj = e.vectors.transpose() * rhs;
    for (i, &l) in e.values.iter().enumerate() {
        let g = if e.max > 0.0 && l > cut { 1.0 / l } else { 0.0 };
        proj.row_mut(i).scale_mut(g);
    }
    Ok(&e.vectors * proj)
}

/// A full-column-rank basis of a subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis(DMatrix<f64>);

impl SubspaceBasis {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.ncols() == 0 || m.nrows() == 0 || m.ncols() > m.nrows() {
            return Err(Error::Dimension(format!(
                "a {}×{} matrix cannot be a basis",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("basis has non-finite entries".into()));
        }
        let sv = m.singular_values();
        let max = sv.max();
        let min = sv.min();
        if max <= 0.0 || min <= DEFAULT_RANK_TOL * max {
            return Err(Error::InvalidInput(format!(
                "basis columns are linearly dependent (σ_min = {min:e}, σ_max = {max:e})"
            )));
        }
        Ok(SubspaceBasis(m))
    }

    /// The first `d` coordinate vectors of `ℝ^ambient`.
    pub fn coordinate(ambient: usize, d: usize) -> Result<Self> {
        Self::new(DMatrix::identity(ambient, d))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn ambient_dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn dim(&self) -> usize {
        self.0.ncols()
    }

    pub fn projection(&self) -> DMatrix<f64> {
        projection(&self.0)
    }

    /// `self ⊗ other` as a basis of the product space.
    pub fn kron(&self, other: &SubspaceBasis) -> SubspaceBasis {
        SubspaceBasis(kron(&self.0, &other.0))
    }
}

/// Orthogonal projection onto the column span of `m`, `m(mᵀm)†mᵀ`.
///
/// Rank-deficient inputs are accepted; the span is read off a column-pivoted
/// QR and columns whose pivot falls below the rank tolerance are ignored.
/// nalgebra's SVD can return inaccurate left singular vectors when a singular
/// value sits near zero, which the pivoted factorization does not suffer from.
pub fn projection(m: &DMatrix<f64>) -> DMatrix<f64> {
    let p = m.nrows();
    if m.ncols() == 0 || p == 0 {
        return DMatrix::zeros(p, p);
    }
    let qr = m.clone().col_piv_qr();
    let r = qr.r();
    let top = r[(0, 0)].abs();
    let rank = (0..r.nrows().min(r.ncols()))
        .take_while(|&i| top > 0.0 && r[(i, i)].abs() > DEFAULT_RANK_TOL * top)
        .count();
    let q = qr.q();
    let basis = q.columns(0, rank);
    let out = &basis * basis.transpose();
    (&out + out.transpose()) * 0.5
}

/// Frobenius distance between the orthogonal projections onto two spans.
pub fn subspace_distance(b1: &DMatrix<f64>, b2: &DMatrix<f64>) -> Result<f64> {
    if b1.nrows() != b2.nrows() {
        return Err(Error::Dimension(format!(
            "subspaces live in ℝ^{} and ℝ^{}",
            b1.nrows(),
            b2.nrows()
        )));
    }
    Ok((projection(b1) - projection(b2)).norm())
}

fn random_basis(rng: &mut rand_chacha::ChaCha8Rng, p: usize, d: usize) -> SubspaceBasis {
    loop {
        if let Ok(b) = SubspaceBasis::new(standard_normal_matrix(rng, p, d)) {
            return b;
        }
    }
}

/// Monte-Carlo mean and standard error of the distance between the fixed
/// space `span{e₁..e_dR} ⊗ span{e₁..e_dL}` and `span(β* ⊗ α*)` with
/// i.i.d. standard normal `α* ∈ ℝ^{pL×dL}`, `β* ∈ ℝ^{pR×dR}`.
pub fn benchmark_distance(
    p_l: usize,
    p_r: usize,
    d_l: usize,
    d_r: usize,
    reps: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if d_l == 0 || d_r == 0 || d_l > p_l || d_r > p_r || reps == 0 {
        return Err(Error::InvalidInput(format!(
            "benchmark distance needs 1 ≤ dL ≤ pL, 1 ≤ dR ≤ pR and reps ≥ 1 (got {p_l},{p_r},{d_l},{d_r},{reps})"
        )));
    }
    let truth = SubspaceBasis::coordinate(p_r, d_r)?.kron(&SubspaceBasis::coordinate(p_l, d_l)?);
    let truth_proj = truth.projection();
    let draws: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = seeded(derive_seed(seed, &[rep as u64]));
            let alpha = random_basis(&mut rng, p_l, d_l);
            let beta = random_basis(&mut rng, p_r, d_r);
            (beta.kron(&alpha).projection() - &truth_proj).norm()
        })
        .collect();
    Ok(mean_and_se(&draws))
}

/// Compensated (Neumaier) sum.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Sample mean and its standard error (`sd / √n`, `n − 1` denominator).
pub(crate) fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;

    #[test]
    fn exact_inverse_of_scaled_identity() {
        let s = DMatrix::identity(3, 3) * 4.0;
        let p = symmetric_powers(&s, InversionMode::Exact).unwrap();
        assert_relative_eq!(p.inverse, DMatrix::identity(3, 3) * 0.25, epsilon = 1e-14);
        assert_relative_eq!(p.inv_sqrt, DMatrix::identity(3, 3) * 0.5, epsilon = 1e-14);
        assert_relative_eq!(p.sqrt, DMatrix::identity(3, 3) * 2.0, epsilon = 1e-14);
    }

    #[test]
    fn pseudo_inverse_of_diagonal() {
        let s = dmatrix![1.0, 0.0; 0.0, 0.0];
        let inv = regularized_inverse(&s, InversionMode::pseudo()).unwrap();
        assert_relative_eq!(inv, s, epsilon = 1e-14);
    }

    #[test]
    fn ridge_inverse_of_diagonal() {
        let s = dmatrix![1.0, 0.0; 0.0, 0.0];
        let inv = regularized_inverse(&s, InversionMode::ridge(0.5).unwrap()).unwrap();
        assert_relative_eq!(inv, dmatrix![1.0 / 1.5, 0.0; 0.0, 1.0 / 0.5], epsilon = 1e-14);
    }

    #[test]
    fn exact_mode_rejects_singular() {
        let s = dmatrix![1.0, 0.0; 0.0, 0.0];
        let err = regularized_inverse(&s, InversionMode::Exact).unwrap_err();
        assert!(err.is_singular());
        assert!(err.to_string().contains("ridge"));
    }

    #[test]
    fn rejects_indefinite_and_asymmetric() {
        let s = dmatrix![1.0, 0.0; 0.0, -1.0];
        assert!(matches!(
            regularized_inverse(&s, InversionMode::pseudo()),
            Err(Error::NotPsd { .. })
        ));
        let s = dmatrix![1.0, 0.5; 0.0, 1.0];
        assert!(matches!(
            regularized_inverse(&s, InversionMode::pseudo()),
            Err(Error::NotSymmetric(_))
        ));
    }

    #[test]
    fn invalid_modes() {
        assert!(InversionMode::ridge(0.0).is_err());
        assert!(InversionMode::Pseudo { rank_tol: -1.0 }.validate().is_err());
    }

    #[test]
    fn roots_square_back() {
        let a = dmatrix![2.0, 0.3, 0.1; 0.3, 1.0, -0.2; 0.1, -0.2, 0.5];
        let p = symmetric_powers(&a, InversionMode::Exact).unwrap();
        assert_relative_eq!(&p.sqrt * &p.sqrt, a, epsilon = 1e-12);
        assert_relative_eq!(&p.inv_sqrt * &p.inv_sqrt, p.inverse.clone(), epsilon = 1e-12);
        assert_relative_eq!(&a * &p.inverse, DMatrix::identity(3, 3), epsilon = 1e-12);
        let r = sqrt_psd(&a, InversionMode::ridge(0.25).unwrap()).unwrap();
        assert_relative_eq!(&r * &r, &a + DMatrix::identity(3, 3) * 0.25, epsilon = 1e-12);
    }

    #[test]
    fn pseudo_solve_is_min_norm() {
        let n = dmatrix![2.0, 0.0; 0.0, 0.0];
        let rhs = dmatrix![4.0; 0.0];
        let x = solve_symmetric(&n, &rhs, InversionMode::pseudo()).unwrap();
        assert_relative_eq!(x, dmatrix![2.0; 0.0], epsilon = 1e-14);
        assert!(solve_symmetric(&n, &rhs, InversionMode::Exact).unwrap_err().is_singular());
    }

    #[test]
    fn coordinate_projection() {
        let p = SubspaceBasis::coordinate(4, 2).unwrap().projection();
        let mut expected = DMatrix::zeros(4, 4);
        expected[(0, 0)] = 1.0;
        expected[(1, 1)] = 1.0;
        assert_relative_eq!(p, expected, epsilon = 1e-14);
    }

    #[test]
    fn basis_rejects_dependent_columns() {
        assert!(SubspaceBasis::new(dmatrix![1.0, 2.0; 2.0, 4.0]).is_err());
        assert!(SubspaceBasis::new(dmatrix![1.0, 0.0, 0.0; 0.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn distance_examples() {
        let e1 = dmatrix![1.0; 0.0; 0.0];
        let e2 = dmatrix![0.0; 1.0; 0.0];
        assert_eq!(subspace_distance(&e1, &e1).unwrap(), 0.0);
        assert_relative_eq!(subspace_distance(&e1, &e2).unwrap(), 2f64.sqrt(), epsilon = 1e-14);
        let diag = dmatrix![1.0; 1.0] / 2f64.sqrt();
        let e1_2 = dmatrix![1.0; 0.0];
        assert_relative_eq!(subspace_distance(&e1_2, &diag).unwrap(), 1.0, epsilon = 1e-14);
        assert!(subspace_distance(&e1, &e1_2).is_err());
    }

    #[test]
    fn full_space_benchmark_is_zero() {
        let (mean, se) = benchmark_distance(3, 2, 3, 2, 20, 1).unwrap();
        assert!(mean < 1e-12, "{mean}");
        assert!(se < 1e-12);
    }

    #[test]
    fn compensated_sum_handles_cancellation() {
        assert_eq!(compensated_sum([1e16, 1.0, -1e16]), 1.0);
    }
}
