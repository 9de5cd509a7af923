//! Alternating least-squares fit of the Kronecker envelope.
//!
//! The objective is `Σ_w c_w ‖T_w − A(b ⊗ a)F_w‖²` over `a ∈ ℝ^{pL×mL}`,
//! `b ∈ ℝ^{pR×mR}` and coefficient blocks `F_w ∈ ℝ^{mLmR×k}`, where `T_w`
//! are the standardized targets and `A` the covariance root. Each update
//! minimizes it exactly over one block with the others fixed.
//!
//! The normal equations for `a` and `b` are assembled from two sufficient
//! statistics, `Φ = Σ c_w F_w F_wᵀ` and `C = Σ c_w A T_w F_wᵀ`, so no
//! `pLpR·k × pRmR` design matrix is ever formed. [`explicit`] keeps the dense
//! designs for cross-checking.
//!
//! Index conventions: `vec(b)` is indexed `c + pR·s`, `vec(a)` is `r + pL·t`,
//! rows of `F_w` are `t + mL·s` and rows of `vec(X)` are `r + pL·c`.

pub mod explicit;

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::moments::{moment_targets, Method, MomentTargets, SampleSet};
use crate::moments::slice_assign;
use crate::rng::{derive_seed, seeded, standard_normal_matrix};
use crate::tensor_ops::{compensated_sum, kron, solve_symmetric, InversionMode};

/// Largest per-sweep objective increase tolerated by [`descent_violations`],
/// relative to the objective at `F = 0`.
pub const DESCENT_TOL: f64 = 1e-12;

static RESTARTS_RUN: AtomicUsize = AtomicUsize::new(0);
static VIOLATIONS_SEEN: AtomicUsize = AtomicUsize::new(0);

/// Number of sweeps in `trace` whose objective rose by more than
/// `DESCENT_TOL · scale` over the previous sweep, where `scale` is the
/// objective at `F = 0`, `Σ c_w ‖T_w‖²`.
pub fn descent_violations(trace: &[f64], scale: f64) -> usize {
    let slack = DESCENT_TOL * scale.abs();
    trace.windows(2).filter(|w| w[1] - w[0] > slack).count()
}

fn null_objective(targets: &MomentTargets) -> f64 {
    compensated_sum(
        targets
            .targets()
            .iter()
            .zip(targets.weights())
            .map(|(t, &w)| w * t.norm_squared()),
    )
}

/// Process-wide `(restarts completed, descent violations)` over every call
/// to [`fold`] so far.
pub fn descent_audit() -> (usize, usize) {
    (
        RESTARTS_RUN.load(Ordering::Relaxed),
        VIOLATIONS_SEEN.load(Ordering::Relaxed),
    )
}

/// Envelope dimensions plus the convergence and restart policy.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldingConfig {
    pub m_l: usize,
    pub m_r: usize,
    pub max_iters: usize,
    /// Stop once `(obj_{t−1} − obj_t) / max(obj_{t−1}, 1e-300)` drops below this.
    pub rel_tol: f64,
    pub restarts: usize,
    pub inversion: InversionMode,
    pub seed: u64,
    /// Orthonormalize `a` and `b` after fitting, compensating `F`.
    pub normalize_bases: bool,
}

impl FoldingConfig {
    pub fn new(m_l: usize, m_r: usize) -> Self {
        FoldingConfig {
            m_l,
            m_r,
            max_iters: 500,
            rel_tol: 1e-9,
            restarts: 5,
            inversion: InversionMode::Exact,
            seed: 0,
            normalize_bases: true,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_inversion(mut self, mode: InversionMode) -> Self {
        self.inversion = mode;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn validate(&self, p_l: usize, p_r: usize) -> Result<()> {
        if self.m_l == 0 || self.m_l > p_l || self.m_r == 0 || self.m_r > p_r {
            return Err(Error::InvalidConfig(format!(
                "envelope dimensions ({}, {}) must satisfy 1 ≤ mL ≤ {p_l}, 1 ≤ mR ≤ {p_r}",
                self.m_l, self.m_r
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be at least 1".into()));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        self.inversion.validate()
    }
}

/// Result of [`fold`]: the best restart's bases and coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldingFit {
    pub method: Method,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    /// One `mLmR × k` coefficient block per target.
    pub f: Vec<DMatrix<f64>>,
    /// Objective after each sweep of the winning restart.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub restart_index: usize,
    /// Final objective of every restart by restart index; `None` marks a
    /// restart that stopped on a numerical error.
    pub restart_objectives: Vec<Option<f64>>,
    /// Descent violations summed over every completed restart.
    pub descent_violations: usize,
}

impl FoldingFit {
    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace is never empty")
    }

    /// `b ⊗ a`, a basis of the fitted envelope in `vec(X)` coordinates.
    pub fn kron_basis(&self) -> DMatrix<f64> {
        kron(&self.b, &self.a)
    }

    /// The folded predictor `aᵀ X b`.
    pub fn reduce(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.shape() != (self.a.nrows(), self.b.nrows()) {
            return Err(Error::Dimension(format!(
                "predictor is {}×{}, fit expects {}×{}",
                x.nrows(),
                x.ncols(),
                self.a.nrows(),
                self.b.nrows()
            )));
        }
        Ok(self.a.transpose() * x * &self.b)
    }
}

/// Caches the metric `S = AᵀA` and the premultiplied targets `A·T_w`.
pub struct Solver<'t> {
    targets: &'t MomentTargets,
    mode: InversionMode,
    metric: DMatrix<f64>,
    premultiplied: Vec<DMatrix<f64>>,
}

impl<'t> Solver<'t> {
    pub fn new(targets: &'t MomentTargets, mode: InversionMode) -> Self {
        let root = targets.cov_root();
        Solver {
            targets,
            mode,
            metric: root.tr_mul(root),
            premultiplied: targets.targets().iter().map(|t| root * t).collect(),
        }
    }

    fn dims(&self) -> (usize, usize) {
        (self.targets.p_l(), self.targets.p_r())
    }

    fn check_a(&self, a: &DMatrix<f64>) -> Result<()> {
        if a.nrows() != self.targets.p_l() || a.ncols() == 0 {
            return Err(Error::Dimension(format!(
                "a is {}×{}, expected {} rows",
                a.nrows(),
                a.ncols(),
                self.targets.p_l()
            )));
        }
        Ok(())
    }

    fn check_b(&self, b: &DMatrix<f64>) -> Result<()> {
        if b.nrows() != self.targets.p_r() || b.ncols() == 0 {
            return Err(Error::Dimension(format!(
                "b is {}×{}, expected {} rows",
                b.nrows(),
                b.ncols(),
                self.targets.p_r()
            )));
        }
        Ok(())
    }

    fn check_f(&self, f: &[DMatrix<f64>], q: usize) -> Result<()> {
        let k = self.targets.width();
        if f.len() != self.targets.targets().len() {
            return Err(Error::Dimension(format!(
                "{} coefficient blocks for {} targets",
                f.len(),
                self.targets.targets().len()
            )));
        }
        if let Some(fw) = f.iter().find(|fw| fw.shape() != (q, k)) {
            return Err(Error::Dimension(format!(
                "coefficient block is {}×{}, expected {q}×{k}",
                fw.nrows(),
                fw.ncols()
            )));
        }
        Ok(())
    }

    /// Weighted sum of squared Frobenius residuals.
    pub fn objective(&self, a: &DMatrix<f64>, b: &DMatrix<f64>, f: &[DMatrix<f64>]) -> Result<f64> {
        self.check_a(a)?;
        self.check_b(b)?;
        self.check_f(f, a.ncols() * b.ncols())?;
        let ak = self.targets.cov_root() * kron(b, a);
        let terms = self
            .targets
            .targets()
            .iter()
            .zip(f)
            .zip(self.targets.weights())
            .map(|((t, fw), &w)| w * (t - &ak * fw).norm_squared());
        Ok(compensated_sum(terms))
    }

    /// `Φ = Σ c_w F_w F_wᵀ` and `C = Σ c_w A T_w F_wᵀ`.
    fn statistics(&self, f: &[DMatrix<f64>]) -> (DMatrix<f64>, DMatrix<f64>) {
        let q = f[0].nrows();
        let p = self.targets.p();
        let mut phi = DMatrix::zeros(q, q);
        let mut c = DMatrix::zeros(p, q);
        for ((fw, y), &w) in f.iter().zip(&self.premultiplied).zip(self.targets.weights()) {
            phi.gemm(w, fw, &fw.transpose(), 1.0);
            c.gemm(w, y, &fw.transpose(), 1.0);
        }
        (phi, c)
    }

    /// Exact minimizer over `b` with `a` and `F` fixed.
    pub fn update_b(&self, a: &DMatrix<f64>, f: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
        self.check_a(a)?;
        let (_, p_r) = self.dims();
        let m_l = a.ncols();
        let q = f.first().map_or(0, |fw| fw.nrows());
        if q == 0 || q % m_l != 0 {
            return Err(Error::Dimension(format!(
                "coefficient rows {q} not a multiple of mL = {m_l}"
            )));
        }
        let m_r = q / m_l;
        self.check_f(f, q)?;
        let (phi, c) = self.statistics(f);
        let ia = kron(&DMatrix::identity(p_r, p_r), a);
        let a_tilde = ia.tr_mul(&(&self.metric * &ia));
        let c_a = ia.tr_mul(&c);

        let n = p_r * m_r;
        let mut normal = DMatrix::zeros(n, n);
        let mut rhs = DMatrix::zeros(n, 1);
        for s in 0..m_r {
            for c1 in 0..p_r {
                let row = c1 + p_r * s;
                rhs[(row, 0)] = (0..m_l).map(|t| c_a[(t + m_l * c1, t + m_l * s)]).sum();
                for s2 in 0..m_r {
                    for c2 in 0..p_r {
                        let mut acc = 0.0;
                        for t in 0..m_l {
                            for t2 in 0..m_l {
                                acc += a_tilde[(t + m_l * c1, t2 + m_l * c2)]
                                    * phi[(t + m_l * s, t2 + m_l * s2)];
                            }
                        }
                        normal[(row, c2 + p_r * s2)] = acc;
                    }
                }
            }
        }
        let normal = (&normal + normal.transpose()) * 0.5;
        let x = solve_symmetric(&normal, &rhs, self.mode)?;
        Ok(DMatrix::from_column_slice(p_r, m_r, x.as_slice()))
    }

    /// Exact minimizer over `a` with `b` and `F` fixed.
    pub fn update_a(&self, b: &DMatrix<f64>, f: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
        self.check_b(b)?;
        let (p_l, p_r) = self.dims();
        let m_r = b.ncols();
        let q = f.first().map_or(0, |fw| fw.nrows());
        if q == 0 || q % m_r != 0 {
            return Err(Error::Dimension(format!(
                "coefficient rows {q} not a multiple of mR = {m_r}"
            )));
        }
        let m_l = q / m_r;
        self.check_f(f, q)?;
        let (phi, c) = self.statistics(f);
        let bi = kron(b, &DMatrix::identity(m_l, m_l));
        let psi = &bi * &phi * bi.transpose();
        let c_b = &c * bi.transpose();

        let n = p_l * m_l;
        let mut normal = DMatrix::zeros(n, n);
        let mut rhs = DMatrix::zeros(n, 1);
        for t in 0..m_l {
            for r in 0..p_l {
                let row = r + p_l * t;
                rhs[(row, 0)] = (0..p_r).map(|c1| c_b[(r + p_l * c1, t + m_l * c1)]).sum();
                for t2 in 0..m_l {
                    for r2 in 0..p_l {
                        let mut acc = 0.0;
                        for c1 in 0..p_r {
                            for c2 in 0..p_r {
                                acc += psi[(t + m_l * c1, t2 + m_l * c2)]
                                    * self.metric[(r + p_l * c1, r2 + p_l * c2)];
                            }
                        }
                        normal[(row, r2 + p_l * t2)] = acc;
                    }
                }
            }
        }
        let normal = (&normal + normal.transpose()) * 0.5;
        let x = solve_symmetric(&normal, &rhs, self.mode)?;
        Ok(DMatrix::from_column_slice(p_l, m_l, x.as_slice()))
    }

    /// Exact per-target least-squares coefficients with `a` and `b` fixed.
    pub fn update_f(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Vec<DMatrix<f64>>> {
        self.check_a(a)?;
        self.check_b(b)?;
        let ak = self.targets.cov_root() * kron(b, a);
        let gram = ak.tr_mul(&ak);
        let gram = (&gram + gram.transpose()) * 0.5;
        let targets = self.targets.targets();
        let k = self.targets.width();
        let mut rhs = DMatrix::zeros(ak.ncols(), k * targets.len());
        for (w, t) in targets.iter().enumerate() {
            rhs.columns_mut(w * k, k).copy_from(&ak.tr_mul(t));
        }
        let sol = solve_symmetric(&gram, &rhs, self.mode)?;
        Ok((0..targets.len())
            .map(|w| sol.columns(w * k, k).into_owned())
            .collect())
    }

    fn run_restart(&self, restart: usize, config: &FoldingConfig) -> Result<Restart> {
        let (p_l, p_r) = self.dims();
        let q = config.m_l * config.m_r;
        let k = self.targets.width();
        let mut rng = seeded(derive_seed(config.seed, &[restart as u64]));
        let mut a = standard_normal_matrix(&mut rng, p_l, config.m_l);
        let mut f: Vec<_> = (0..self.targets.targets().len())
            .map(|_| standard_normal_matrix(&mut rng, q, k))
            .collect();
        let mut b = DMatrix::zeros(p_r, config.m_r);
        let mut trace = Vec::new();
        let mut converged = false;
        for iteration in 0..config.max_iters {
            let annotate = |e: Error| Error::Solver {
                restart,
                iteration,
                source: Box::new(e),
            };
            b = self.update_b(&a, &f).map_err(annotate)?;
            a = self.update_a(&b, &f).map_err(annotate)?;
            f = self.update_f(&a, &b).map_err(annotate)?;
            let obj = self.objective(&a, &b, &f).map_err(annotate)?;
            if !obj.is_finite() {
                return Err(annotate(Error::InvalidInput("objective is not finite".into())));
            }
            let prev = trace.last().copied();
            trace.push(obj);
            if obj == 0.0 {
                converged = true;
                break;
            }
            if let Some(prev) = prev {
                if (prev - obj) / f64::max(prev, 1e-300) < config.rel_tol {
                    converged = true;
                    break;
                }
            }
        }
        Ok(Restart {
            a,
            b,
            f,
            trace,
            converged,
        })
    }
}

struct Restart {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    f: Vec<DMatrix<f64>>,
    trace: Vec<f64>,
    converged: bool,
}

impl Restart {
    fn final_objective(&self) -> f64 {
        *self.trace.last().expect("at least one sweep")
    }
}

/// Weighted envelope objective for explicit `(a, b, F)`.
pub fn objective(
    targets: &MomentTargets,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    f: &[DMatrix<f64>],
) -> Result<f64> {
    Solver::new(targets, targets.mode()).objective(a, b, f)
}

pub fn update_b(
    targets: &MomentTargets,
    a: &DMatrix<f64>,
    f: &[DMatrix<f64>],
    mode: InversionMode,
) -> Result<DMatrix<f64>> {
    Solver::new(targets, mode).update_b(a, f)
}

pub fn update_a(
    targets: &MomentTargets,
    b: &DMatrix<f64>,
    f: &[DMatrix<f64>],
    mode: InversionMode,
) -> Result<DMatrix<f64>> {
    Solver::new(targets, mode).update_a(b, f)
}

pub fn update_f(
    targets: &MomentTargets,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    mode: InversionMode,
) -> Result<Vec<DMatrix<f64>>> {
    Solver::new(targets, mode).update_f(a, b)
}

/// Thin QR of `m` with the diagonal of `R` made nonnegative.
fn positive_qr(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let qr = m.clone().qr();
    let (mut q, mut r) = (qr.q(), qr.r());
    for j in 0..r.nrows() {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
            r.row_mut(j).neg_mut();
        }
    }
    (q, r)
}

/// Re-express `(a, b, F)` with orthonormal `a` and `b`, leaving every
/// `(b ⊗ a)F_w` unchanged.
pub fn normalize_bases(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    f: &[DMatrix<f64>],
) -> (DMatrix<f64>, DMatrix<f64>, Vec<DMatrix<f64>>) {
    let (qa, ra) = positive_qr(a);
    let (qb, rb) = positive_qr(b);
    let r = kron(&rb, &ra);
    (qa, qb, f.iter().map(|fw| &r * fw).collect())
}

/// Fit the Kronecker envelope of `targets` by alternating least squares,
/// keeping the best of `config.restarts` random starts.
///
/// A restart that hits a numerical error is dropped; the error is returned
/// only when no restart succeeds (the lowest-index failure is reported).
pub fn fold(targets: &MomentTargets, config: &FoldingConfig) -> Result<FoldingFit> {
    config.validate(targets.p_l(), targets.p_r())?;
    let solver = Solver::new(targets, config.inversion);
    let runs: Vec<Result<Restart>> = (0..config.restarts)
        .into_par_iter()
        .map(|r| solver.run_restart(r, config))
        .collect();
    let mut best: Option<(usize, Restart)> = None;
    let mut first_error = None;
    let mut restart_objectives = Vec::with_capacity(runs.len());
    let mut violations = 0;
    let scale = null_objective(targets);
    for (index, run) in runs.into_iter().enumerate() {
        let run = match run {
            Ok(run) => run,
            Err(e) => {
                log::debug!("{e}");
                restart_objectives.push(None);
                first_error.get_or_insert(e);
                continue;
            }
        };
        restart_objectives.push(Some(run.final_objective()));
        let v = descent_violations(&run.trace, scale);
        if v > 0 {
            log::warn!("restart {index}: objective rose in {v} sweeps");
        }
        violations += v;
        RESTARTS_RUN.fetch_add(1, Ordering::Relaxed);
        VIOLATIONS_SEEN.fetch_add(v, Ordering::Relaxed);
        let better = best
            .as_ref()
            .is_none_or(|(_, b)| run.final_objective() < b.final_objective());
        if better {
            best = Some((index, run));
        }
    }
    let (restart_index, run) = match (best, first_error) {
        (Some(best), _) => best,
        (None, Some(e)) => return Err(e),
        (None, None) => unreachable!("restarts ≥ 1"),
    };
    let (a, b, f) = if config.normalize_bases {
        normalize_bases(&run.a, &run.b, &run.f)
    } else {
        (run.a, run.b, run.f)
    };
    Ok(FoldingFit {
        method: targets.method(),
        a,
        b,
        f,
        objective_trace: run.trace,
        converged: run.converged,
        restart_index,
        restart_objectives,
        descent_violations: violations,
    })
}

/// Slice, form the method's targets and fold them.
pub fn fit_folded(
    samples: &SampleSet,
    method: Method,
    slices: usize,
    config: &FoldingConfig,
) -> Result<FoldingFit> {
    let assignment = slice_assign(samples, slices)?;
    let targets = moment_targets(method, samples, &assignment, config.inversion, None)?;
    fold(&targets, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar_targets(us: &[f64], weights: &[f64]) -> MomentTargets {
        let raw: Vec<_> = us.iter().map(|&u| DMatrix::from_element(1, 1, u)).collect();
        MomentTargets::from_raw(
            Method::Sir,
            1,
            1,
            &DMatrix::identity(1, 1),
            weights.to_vec(),
            &raw,
        )
        .unwrap()
    }

    fn one() -> DMatrix<f64> {
        DMatrix::from_element(1, 1, 1.0)
    }

    #[test]
    fn scalar_objective_is_arithmetic() {
        let t = scalar_targets(&[2.0], &[1.0]);
        let obj = objective(&t, &one(), &one(), &[one()]).unwrap();
        assert_relative_eq!(obj, 1.0);
    }

    #[test]
    fn zero_coefficients_give_weighted_target_norm() {
        let t = scalar_targets(&[2.0, -3.0], &[0.25, 0.75]);
        let zero = DMatrix::zeros(1, 1);
        let obj = objective(&t, &one(), &one(), &[zero.clone(), zero]).unwrap();
        assert_relative_eq!(obj, 0.25 * 4.0 + 0.75 * 9.0);
    }

    #[test]
    fn scalar_updates_match_one_dimensional_least_squares() {
        // two slices, U = (2, -1), weights (0.4, 0.6), current a = 1.5, f = (0.5, 2)
        let t = scalar_targets(&[2.0, -1.0], &[0.4, 0.6]);
        let a = DMatrix::from_element(1, 1, 1.5);
        let f = [DMatrix::from_element(1, 1, 0.5), DMatrix::from_element(1, 1, 2.0)];
        // V2_w = a·f_w, V1_w = U_w
        let v2 = [0.75, 3.0];
        let v1 = [2.0, -1.0];
        let w = [0.4, 0.6];
        let num: f64 = (0..2).map(|i| w[i] * v2[i] * v1[i]).sum();
        let den: f64 = (0..2).map(|i| w[i] * v2[i] * v2[i]).sum();
        let b = update_b(&t, &a, &f, InversionMode::Exact).unwrap();
        assert_relative_eq!(b[(0, 0)], num / den, epsilon = 1e-14);
        // symmetric roles: a from b
        let a_new = update_a(&t, &a, &f, InversionMode::Exact).unwrap();
        assert_relative_eq!(a_new[(0, 0)], num / den, epsilon = 1e-14);
        // f_w = V1/V2 with V2 = b·a
        let bb = DMatrix::from_element(1, 1, 0.8);
        let fs = update_f(&t, &a, &bb, InversionMode::Exact).unwrap();
        assert_relative_eq!(fs[0][(0, 0)], 2.0 / 1.2, epsilon = 1e-14);
        assert_relative_eq!(fs[1][(0, 0)], -1.0 / 1.2, epsilon = 1e-14);
    }

    #[test]
    fn orthonormal_projection_coefficients() {
        let (p_l, p_r) = (3, 2);
        let a = DMatrix::from_column_slice(3, 1, &[0.6, 0.8, 0.0]);
        let b = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        let raw = vec![DMatrix::from_fn(6, 1, |i, _| i as f64 - 2.5)];
        let t = MomentTargets::from_raw(Method::Sir, p_l, p_r, &DMatrix::identity(6, 6), vec![1.0], &raw)
            .unwrap();
        let f = update_f(&t, &a, &b, InversionMode::Exact).unwrap();
        let expected = kron(&b, &a).transpose() * &raw[0];
        assert_relative_eq!(f[0], expected, epsilon = 1e-14);
    }

    #[test]
    fn rank_deficient_kron_is_singular_in_exact_mode() {
        let raw = vec![DMatrix::from_element(4, 1, 1.0)];
        let t = MomentTargets::from_raw(Method::Sir, 2, 2, &DMatrix::identity(4, 4), vec![1.0], &raw)
            .unwrap();
        let a = DMatrix::from_column_slice(2, 2, &[1.0, 0.0, 2.0, 0.0]);
        let b = DMatrix::identity(2, 1);
        let err = update_f(&t, &a, &b, InversionMode::Exact).unwrap_err();
        assert!(err.is_singular());
        assert!(update_f(&t, &a, &b, InversionMode::pseudo()).is_ok());
    }

    #[test]
    fn config_validation() {
        assert!(FoldingConfig::new(2, 2).validate(5, 5).is_ok());
        assert!(FoldingConfig::new(0, 2).validate(5, 5).is_err());
        assert!(FoldingConfig::new(6, 2).validate(5, 5).is_err());
        let mut c = FoldingConfig::new(1, 1);
        c.rel_tol = 0.0;
        assert!(c.validate(2, 2).is_err());
        c.rel_tol = 1e-9;
        c.restarts = 0;
        assert!(c.validate(2, 2).is_err());
    }

    #[test]
    fn normalization_preserves_products() {
        let mut rng = seeded(11);
        let a = standard_normal_matrix(&mut rng, 4, 2);
        let b = standard_normal_matrix(&mut rng, 3, 2);
        let f = vec![standard_normal_matrix(&mut rng, 4, 3)];
        let (qa, qb, g) = normalize_bases(&a, &b, &f);
        assert_relative_eq!(kron(&b, &a) * &f[0], kron(&qb, &qa) * &g[0], epsilon = 1e-12);
        assert_relative_eq!(qa.tr_mul(&qa), DMatrix::identity(2, 2), epsilon = 1e-12);
        assert_relative_eq!(qb.tr_mul(&qb), DMatrix::identity(2, 2), epsilon = 1e-12);
    }
}
