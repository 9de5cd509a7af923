//! Dense least-squares designs for the three envelope updates.
//!
//! These materialize the design matrices the factored solver avoids and are
//! meant for cross-checking on small problems. For a target `T_w` with
//! coefficients `F_w` the residual is `vec(T_w) − V·θ`, where `θ` is `vec(b)`,
//! `vec(a)` or `vec(F_w)` and `V` the matching design below.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::moments::MomentTargets;
use crate::tensor_ops::{commutation_matrix, kron, mat, pi_matrix, solve_symmetric, vec, InversionMode};

fn column(v: DVector<f64>) -> DMatrix<f64> {
    let n = v.len();
    DMatrix::from_column_slice(n, 1, v.as_slice())
}

/// `(F_wᵀ ⊗ A)·Π·[I_{pRmR} ⊗ vec(a)]`, the design for `vec(b)`.
pub fn design_b(targets: &MomentTargets, a: &DMatrix<f64>, f_w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (p_l, p_r) = (targets.p_l(), targets.p_r());
    let m_l = a.ncols();
    let m_r = f_w.nrows() / m_l;
    check_rows(a, p_l, f_w, m_l)?;
    let embed = kron(&DMatrix::identity(p_r * m_r, p_r * m_r), &column(vec(a)));
    let permuted = pi_matrix(p_r, m_r, p_l, m_l).apply_rows(&embed)?;
    Ok(kron(&f_w.transpose(), targets.cov_root()) * permuted)
}

/// `(F_wᵀ ⊗ A)·Π·[vec(b) ⊗ I_{pLmL}]`, the design for `vec(a)`.
pub fn design_a(targets: &MomentTargets, b: &DMatrix<f64>, f_w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (p_l, p_r) = (targets.p_l(), targets.p_r());
    let m_r = b.ncols();
    if b.nrows() != p_r || f_w.nrows() % m_r != 0 {
        return Err(Error::Dimension(format!(
            "b is {}×{}, coefficients have {} rows",
            b.nrows(),
            m_r,
            f_w.nrows()
        )));
    }
    let m_l = f_w.nrows() / m_r;
    let embed = kron(&column(vec(b)), &DMatrix::identity(p_l * m_l, p_l * m_l));
    let permuted = pi_matrix(p_r, m_r, p_l, m_l).apply_rows(&embed)?;
    Ok(kron(&f_w.transpose(), targets.cov_root()) * permuted)
}

/// Single-column shortcut for `vec(b)`: `A·[I_pR ⊗ a·mat(f)]·K_{pR,mR}`.
pub fn design_b_single(
    targets: &MomentTargets,
    a: &DMatrix<f64>,
    f_w: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let (p_l, p_r) = (targets.p_l(), targets.p_r());
    let m_l = a.ncols();
    check_rows(a, p_l, f_w, m_l)?;
    check_single(f_w)?;
    let m_r = f_w.nrows() / m_l;
    let af = a * mat(f_w.as_slice(), m_l)?;
    let block = kron(&DMatrix::identity(p_r, p_r), &af);
    let permuted = commutation_matrix(p_r, m_r).right_apply(&block)?;
    Ok(targets.cov_root() * permuted)
}

/// Single-column shortcut for `vec(a)`: `A·[b·mat(f)ᵀ ⊗ I_pL]`.
pub fn design_a_single(
    targets: &MomentTargets,
    b: &DMatrix<f64>,
    f_w: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let p_l = targets.p_l();
    let m_r = b.ncols();
    check_single(f_w)?;
    if f_w.nrows() % m_r != 0 {
        return Err(Error::Dimension(format!(
            "{} coefficient rows not a multiple of mR = {m_r}",
            f_w.nrows()
        )));
    }
    let m_l = f_w.nrows() / m_r;
    let bf = b * mat(f_w.as_slice(), m_l)?.transpose();
    Ok(targets.cov_root() * kron(&bf, &DMatrix::identity(p_l, p_l)))
}

/// `I_k ⊗ A(b ⊗ a)`, the design for `vec(F_w)`.
pub fn design_f(targets: &MomentTargets, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let k = targets.width();
    kron(&DMatrix::identity(k, k), &(targets.cov_root() * kron(b, a)))
}

/// `θ = (Σ c_w V_wᵀV_w)⁻¹ Σ c_w V_wᵀ y_w`.
pub fn weighted_least_squares(
    designs: &[DMatrix<f64>],
    responses: &[DVector<f64>],
    weights: &[f64],
    mode: InversionMode,
) -> Result<DVector<f64>> {
    let n = designs
        .first()
        .map(|d| d.ncols())
        .ok_or_else(|| Error::Dimension("no designs".into()))?;
    let mut gram = DMatrix::zeros(n, n);
    let mut rhs = DMatrix::zeros(n, 1);
    for ((v, y), &w) in designs.iter().zip(responses).zip(weights) {
        gram += v.tr_mul(v) * w;
        rhs += v.tr_mul(&column(y.clone())) * w;
    }
    let gram = (&gram + gram.transpose()) * 0.5;
    Ok(column_vector(solve_symmetric(&gram, &rhs, mode)?))
}

fn column_vector(m: DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

fn responses(targets: &MomentTargets) -> Vec<DVector<f64>> {
    targets.targets().iter().map(vec).collect()
}

/// Dense-design minimizer over `b`; `single_column` selects the shortcut designs.
pub fn update_b(
    targets: &MomentTargets,
    a: &DMatrix<f64>,
    f: &[DMatrix<f64>],
    mode: InversionMode,
    single_column: bool,
) -> Result<DMatrix<f64>> {
    let designs = f
        .iter()
        .map(|fw| {
            if single_column {
                design_b_single(targets, a, fw)
            } else {
                design_b(targets, a, fw)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let theta = weighted_least_squares(&designs, &responses(targets), targets.weights(), mode)?;
    mat(theta.as_slice(), targets.p_r())
}

/// Dense-design minimizer over `a`; `single_column` selects the shortcut designs.
pub fn update_a(
    targets: &MomentTargets,
    b: &DMatrix<f64>,
    f: &[DMatrix<f64>],
    mode: InversionMode,
    single_column: bool,
) -> Result<DMatrix<f64>> {
    let designs = f
        .iter()
        .map(|fw| {
            if single_column {
                design_a_single(targets, b, fw)
            } else {
                design_a(targets, b, fw)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let theta = weighted_least_squares(&designs, &responses(targets), targets.weights(), mode)?;
    mat(theta.as_slice(), targets.p_l())
}

/// Dense-design coefficients, solved target by target.
pub fn update_f(
    targets: &MomentTargets,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    mode: InversionMode,
) -> Result<Vec<DMatrix<f64>>> {
    let design = design_f(targets, a, b);
    let q = a.ncols() * b.ncols();
    targets
        .targets()
        .iter()
        .map(|t| {
            let theta = weighted_least_squares(
                std::slice::from_ref(&design),
                &[vec(t)],
                &[1.0],
                mode,
            )?;
            mat(theta.as_slice(), q)
        })
        .collect()
}

fn check_rows(a: &DMatrix<f64>, p_l: usize, f_w: &DMatrix<f64>, m_l: usize) -> Result<()> {
    if a.nrows() != p_l || m_l == 0 || f_w.nrows() % m_l != 0 {
        return Err(Error::Dimension(format!(
            "a is {}×{m_l} for pL = {p_l}, coefficients have {} rows",
            a.nrows(),
            f_w.nrows()
        )));
    }
    Ok(())
}

fn check_single(f_w: &DMatrix<f64>) -> Result<()> {
    if f_w.ncols() != 1 {
        return Err(Error::Dimension(format!(
            "shortcut designs need single-column coefficients, got {}",
            f_w.ncols()
        )));
    }
    Ok(())
}
