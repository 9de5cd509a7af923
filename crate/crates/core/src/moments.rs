//! Slicing and inverse-regression moment targets.
//!
//! Every method produces a list of standardized targets `T_w = A·U_w`
//! (`A` the covariance root, `U_w` the population object of the method)
//! together with nonnegative weights summing to one. The envelope solver
//! only ever sees these targets.
//!
//! Predictors are centered at the (possibly weighted) grand mean before any
//! slice moment is formed.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::tensor_ops::{symmetric_powers, InversionMode, SymmetricPowers};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ResponseKind {
    Continuous,
    Categorical,
}

/// The inverse-regression family a set of targets comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Sir,
    Save,
    Dr,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Sir, Method::Save, Method::Dr];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Sir => "SIR",
            Method::Save => "SAVE",
            Method::Dr => "DR",
        }
    }
}

/// `n` matrix observations `X_i ∈ ℝ^{pL×pR}` with scalar responses.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    p_l: usize,
    p_r: usize,
    xs: Vec<DMatrix<f64>>,
    ys: Vec<f64>,
    ids: Vec<u64>,
    kind: ResponseKind,
}

impl SampleSet {
    pub fn new(
        p_l: usize,
        p_r: usize,
        xs: Vec<DMatrix<f64>>,
        ys: Vec<f64>,
        kind: ResponseKind,
    ) -> Result<Self> {
        let ids = (0..xs.len() as u64).collect();
        Self::with_ids(p_l, p_r, xs, ys, ids, kind)
    }

    /// Like [`SampleSet::new`] with explicit item identifiers, which seed
    /// per-item randomness (e.g. leave-one-out folds).
    pub fn with_ids(
        p_l: usize,
        p_r: usize,
        xs: Vec<DMatrix<f64>>,
        ys: Vec<f64>,
        ids: Vec<u64>,
        kind: ResponseKind,
    ) -> Result<Self> {
        if p_l == 0 || p_r == 0 {
            return Err(Error::Dimension("predictor dimensions must be positive".into()));
        }
        if xs.len() != ys.len() || xs.len() != ids.len() {
            return Err(Error::Dimension(format!(
                "{} predictors, {} responses, {} ids",
                xs.len(),
                ys.len(),
                ids.len()
            )));
        }
        if xs.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "a sample needs at least 2 observations, got {}",
                xs.len()
            )));
        }
        for (i, x) in xs.iter().enumerate() {
            if x.shape() != (p_l, p_r) {
                return Err(Error::Dimension(format!(
                    "observation {i} is {}×{}, expected {p_l}×{p_r}",
                    x.nrows(),
                    x.ncols()
                )));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("observation {i} has non-finite entries")));
            }
        }
        if let Some(i) = ys.iter().position(|y| !y.is_finite()) {
            return Err(Error::InvalidInput(format!("response {i} is not finite")));
        }
        Ok(SampleSet {
            p_l,
            p_r,
            xs,
            ys,
            ids,
            kind,
        })
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn p_l(&self) -> usize {
        self.p_l
    }

    pub fn p_r(&self) -> usize {
        self.p_r
    }

    /// Length of `vec(X)`.
    pub fn p(&self) -> usize {
        self.p_l * self.p_r
    }

    pub fn xs(&self) -> &[DMatrix<f64>] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn kind(&self) -> ResponseKind {
        self.kind
    }

    /// `n × pLpR` matrix whose `i`-th row is `vec(X_i)ᵀ`.
    pub fn vec_rows(&self) -> DMatrix<f64> {
        let p = self.p();
        DMatrix::from_fn(self.len(), p, |i, j| self.xs[i].as_slice()[j])
    }

    /// The observations at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<SampleSet> {
        SampleSet::with_ids(
            self.p_l,
            self.p_r,
            indices.iter().map(|&i| self.xs[i].clone()).collect(),
            indices.iter().map(|&i| self.ys[i]).collect(),
            indices.iter().map(|&i| self.ids[i]).collect(),
            self.kind,
        )
    }

    /// Replace every predictor by `f(X_i)`, keeping responses and ids.
    pub fn map_predictors(
        &self,
        f: impl Fn(&DMatrix<f64>) -> DMatrix<f64>,
    ) -> Result<SampleSet> {
        let xs: Vec<_> = self.xs.iter().map(f).collect();
        let (p_l, p_r) = xs[0].shape();
        SampleSet::with_ids(p_l, p_r, xs, self.ys.clone(), self.ids.clone(), self.kind)
    }

    /// Sorted distinct response values.
    pub fn levels(&self) -> Vec<f64> {
        let mut v = self.ys.clone();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

/// Partition of the sample into `s` nonempty slices.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceAssignment {
    labels: Vec<usize>,
    counts: Vec<usize>,
    levels: Option<Vec<f64>>,
}

impl SliceAssignment {
    /// Build from 0-based slice labels; every slice in `0..s` must be used.
    pub fn from_labels(labels: Vec<usize>, s: usize) -> Result<Self> {
        if s == 0 {
            return Err(Error::DegenerateSlicing("zero slices requested".into()));
        }
        let mut counts = vec![0; s];
        for &l in &labels {
            if l >= s {
                return Err(Error::DegenerateSlicing(format!("label {l} out of range for {s} slices")));
            }
            counts[l] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(Error::DegenerateSlicing(format!("slice {empty} is empty")));
        }
        Ok(SliceAssignment {
            labels,
            counts,
            levels: None,
        })
    }

    pub fn num_slices(&self) -> usize {
        self.counts.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Response value of each slice for categorical slicing.
    pub fn levels(&self) -> Option<&[f64]> {
        self.levels.as_deref()
    }

    /// Slice proportions `p̂_ℓ`, weighted when `weights` is given.
    pub fn proportions(&self, weights: Option<&RobustWeights>) -> Vec<f64> {
        let mut p = vec![0.0; self.num_slices()];
        match weights {
            Some(w) => {
                for (&l, &wi) in self.labels.iter().zip(w.values()) {
                    p[l] += wi;
                }
            }
            None => {
                let n = self.labels.len() as f64;
                for (pl, &c) in p.iter_mut().zip(&self.counts) {
                    *pl = c as f64 / n;
                }
            }
        }
        p
    }
}

/// Assign observations to `s` slices.
///
/// Categorical responses get one slice per label (sorted ascending), so `s`
/// must equal the number of labels. Continuous responses are split into `s`
/// equal-count slices by order statistics, ties broken by sample order.
pub fn slice_assign(samples: &SampleSet, s: usize) -> Result<SliceAssignment> {
    if s < 2 {
        return Err(Error::DegenerateSlicing(format!("need at least 2 slices, got {s}")));
    }
    let levels = samples.levels();
    if levels.len() < s {
        return Err(Error::DegenerateSlicing(format!(
            "{s} slices requested but the response has {} distinct value(s)",
            levels.len()
        )));
    }
    match samples.kind() {
        ResponseKind::Categorical => {
            if levels.len() != s {
                return Err(Error::DegenerateSlicing(format!(
                    "categorical response has {} labels; slice count must match, got {s}",
                    levels.len()
                )));
            }
            let labels = samples
                .ys()
                .iter()
                .map(|y| levels.iter().position(|l| l == y).expect("level present"))
                .collect();
            let mut out = SliceAssignment::from_labels(labels, s)?;
            out.levels = Some(levels);
            Ok(out)
        }
        ResponseKind::Continuous => {
            let n = samples.len();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| samples.ys()[i].total_cmp(&samples.ys()[j]));
            let (base, extra) = (n / s, n % s);
            let mut labels = vec![0; n];
            let mut pos = 0;
            for l in 0..s {
                let size = base + usize::from(l < extra);
                for &i in &order[pos..pos + size] {
                    labels[i] = l;
                }
                pos += size;
            }
            SliceAssignment::from_labels(labels, s)
        }
    }
}

/// Per-observation probability weights for the robust moment estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustWeights {
    w: Vec<f64>,
    cutoff: f64,
    cutoff_quantile: f64,
}

impl RobustWeights {
    /// Arbitrary nonnegative weights, renormalized to sum to one.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInput("weights must be finite and nonnegative".into()));
        }
        let total: f64 = values.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidInput("weights sum to zero".into()));
        }
        Ok(RobustWeights {
            w: values.into_iter().map(|w| w / total).collect(),
            cutoff: f64::INFINITY,
            cutoff_quantile: 1.0,
        })
    }

    pub fn uniform(n: usize) -> Self {
        RobustWeights {
            w: vec![1.0 / n as f64; n],
            cutoff: f64::INFINITY,
            cutoff_quantile: 1.0,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.w
    }

    /// The Mahalanobis cutoff `c` beyond which weights decay as `c/d`.
    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn cutoff_quantile(&self) -> f64 {
        self.cutoff_quantile
    }
}

/// Weights `w_i ∝ min(1, c/d_i)` where `d_i` is the Mahalanobis form of
/// `vec(X_i)` about the sample mean and `c` the empirical
/// `cutoff_quantile`-quantile of the `d_i`.
pub fn robust_weights(
    samples: &SampleSet,
    cutoff_quantile: f64,
    mode: InversionMode,
) -> Result<RobustWeights> {
    if !(cutoff_quantile > 0.0 && cutoff_quantile <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "cutoff quantile must lie in (0, 1], got {cutoff_quantile}"
        )));
    }
    let n = samples.len();
    let centered = centered_rows(samples, None);
    let cov = weighted_cov(&centered, None);
    let inv = symmetric_powers(&cov, mode)?.inverse;
    let d: Vec<f64> = (0..n)
        .map(|i| {
            let v = centered.row(i).transpose();
            (v.transpose() * &inv * &v)[(0, 0)].max(0.0)
        })
        .collect();
    if d.iter().all(|&x| x == 0.0) {
        let mut w = RobustWeights::uniform(n);
        w.cutoff_quantile = cutoff_quantile;
        return Ok(w);
    }
    let mut sorted = d.clone();
    sorted.sort_by(f64::total_cmp);
    let rank = ((cutoff_quantile * n as f64).ceil() as usize).clamp(1, n);
    let cutoff = sorted[rank - 1];
    let raw: Vec<f64> = d
        .iter()
        .map(|&di| if di <= cutoff { 1.0 } else { cutoff / di })
        .collect();
    let total: f64 = raw.iter().sum();
    Ok(RobustWeights {
        w: raw.into_iter().map(|w| w / total).collect(),
        cutoff,
        cutoff_quantile,
    })
}

fn weight_vec(n: usize, weights: Option<&RobustWeights>) -> Result<Vec<f64>> {
    match weights {
        Some(w) if w.values().len() != n => Err(Error::Dimension(format!(
            "{} weights for {n} observations",
            w.values().len()
        ))),
        Some(w) => Ok(w.values().to_vec()),
        None => Ok(vec![1.0 / n as f64; n]),
    }
}

/// Rows `vec(X_i) − Σ_j w_j vec(X_j)`.
fn centered_rows(samples: &SampleSet, weights: Option<&[f64]>) -> DMatrix<f64> {
    let n = samples.len();
    let mut rows = samples.vec_rows();
    let uniform = vec![1.0 / n as f64; n];
    let w = weights.unwrap_or(&uniform);
    let mean = rows.tr_mul(&DVector::from_column_slice(w));
    for mut r in rows.row_iter_mut() {
        r -= mean.transpose();
    }
    rows
}

/// `Σ_i w_i v_i v_iᵀ` over the given centered rows.
fn weighted_cov(rows: &DMatrix<f64>, weights: Option<&[f64]>) -> DMatrix<f64> {
    let n = rows.nrows();
    let mut scaled = rows.clone();
    for (i, mut r) in scaled.row_iter_mut().enumerate() {
        r *= weights.map_or(1.0 / n as f64, |w| w[i]);
    }
    let cov = rows.tr_mul(&scaled);
    (&cov + cov.transpose()) * 0.5
}

/// `Σ̂ = Σ_i w_i vec(X_i − X̄_w) vec(X_i − X̄_w)ᵀ` (n-denominator when unweighted).
pub fn sample_cov(samples: &SampleSet, weights: Option<&RobustWeights>) -> Result<DMatrix<f64>> {
    let w = weight_vec(samples.len(), weights)?;
    let rows = centered_rows(samples, Some(&w));
    Ok(weighted_cov(&rows, Some(&w)))
}

/// Within-slice first and second moments of the centered predictors.
#[derive(Debug, Clone)]
pub struct SliceMoments {
    pub cov: DMatrix<f64>,
    pub proportions: Vec<f64>,
    /// `E_n[v | D = ℓ]` of the centered `v = vec(X) − X̄`.
    pub means: Vec<DVector<f64>>,
    /// `E_n[v vᵀ | D = ℓ]`.
    pub second: Vec<DMatrix<f64>>,
}

impl SliceMoments {
    /// `var_n(vec(X) | D = ℓ)` with the slice-size denominator.
    pub fn within_cov(&self, l: usize) -> DMatrix<f64> {
        &self.second[l] - &self.means[l] * self.means[l].transpose()
    }

    /// Four-term estimate of `E(ΔΔᵀ | D = k, D̃ = ℓ)` with `Δ = vec(X̃) − vec(X)`.
    pub fn pair_second_moment(&self, k: usize, l: usize) -> DMatrix<f64> {
        let cross = &self.means[k] * self.means[l].transpose();
        &self.second[k] - &cross - cross.transpose() + &self.second[l]
    }
}

pub fn slice_moments(
    samples: &SampleSet,
    slices: &SliceAssignment,
    weights: Option<&RobustWeights>,
) -> Result<SliceMoments> {
    let n = samples.len();
    if slices.labels().len() != n {
        return Err(Error::Dimension(format!(
            "slice assignment covers {} observations, sample has {n}",
            slices.labels().len()
        )));
    }
    let w = weight_vec(n, weights)?;
    let rows = centered_rows(samples, Some(&w));
    let cov = weighted_cov(&rows, Some(&w));
    let s = slices.num_slices();
    let p = samples.p();
    let mut proportions = vec![0.0; s];
    let mut means = vec![DVector::zeros(p); s];
    let mut second = vec![DMatrix::zeros(p, p); s];
    for (l, ((mean, sec), prop)) in means
        .iter_mut()
        .zip(second.iter_mut())
        .zip(proportions.iter_mut())
        .enumerate()
    {
        let members: Vec<usize> = (0..n).filter(|&i| slices.labels()[i] == l).collect();
        let mass: f64 = members.iter().map(|&i| w[i]).sum();
        if mass <= 0.0 {
            return Err(Error::DegenerateSlicing(format!("slice {l} carries zero weight")));
        }
        let sub = rows.select_rows(&members);
        let mut scaled = sub.clone();
        for (r, &i) in scaled.row_iter_mut().zip(&members) {
            let mut r = r;
            r *= w[i] / mass;
        }
        *mean = scaled.row_sum().transpose();
        let m = sub.tr_mul(&scaled);
        *sec = (&m + m.transpose()) * 0.5;
        *prop = mass;
    }
    Ok(SliceMoments {
        cov,
        proportions,
        means,
        second,
    })
}

/// Standardized inverse-regression targets with their weights.
#[derive(Debug, Clone)]
pub struct MomentTargets {
    method: Method,
    p_l: usize,
    p_r: usize,
    mode: InversionMode,
    cov: DMatrix<f64>,
    powers: SymmetricPowers,
    weights: Vec<f64>,
    targets: Vec<DMatrix<f64>>,
    pairs: Vec<(usize, usize)>,
}

impl MomentTargets {
    /// Targets from raw envelope objects `U_w` and an arbitrary symmetric
    /// positive definite premultiplier `A`; the stored targets are `A·U_w`.
    pub fn from_raw(
        method: Method,
        p_l: usize,
        p_r: usize,
        premultiplier: &DMatrix<f64>,
        weights: Vec<f64>,
        raw: &[DMatrix<f64>],
    ) -> Result<Self> {
        let p = p_l * p_r;
        if premultiplier.shape() != (p, p) {
            return Err(Error::Dimension(format!(
                "premultiplier must be {p}×{p}, got {}×{}",
                premultiplier.nrows(),
                premultiplier.ncols()
            )));
        }
        if weights.len() != raw.len() || raw.is_empty() {
            return Err(Error::Dimension(format!(
                "{} weights for {} targets",
                weights.len(),
                raw.len()
            )));
        }
        if let Some(u) = raw.iter().find(|u| u.nrows() != p || u.ncols() != raw[0].ncols()) {
            return Err(Error::Dimension(format!(
                "target is {}×{}, expected {p} rows and a common column count",
                u.nrows(),
                u.ncols()
            )));
        }
        let cov = premultiplier * premultiplier;
        let powers = symmetric_powers(&cov, InversionMode::Exact)?;
        let targets = raw.iter().map(|u| premultiplier * u).collect();
        let pairs = (0..raw.len()).map(|i| (i, i)).collect();
        Ok(MomentTargets {
            method,
            p_l,
            p_r,
            mode: InversionMode::Exact,
            cov,
            powers,
            weights,
            targets,
            pairs,
        })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn p_l(&self) -> usize {
        self.p_l
    }

    pub fn p_r(&self) -> usize {
        self.p_r
    }

    pub fn p(&self) -> usize {
        self.p_l * self.p_r
    }

    pub fn mode(&self) -> InversionMode {
        self.mode
    }

    /// Sample covariance `Σ̂` of `vec(X)`.
    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// The objective premultiplier `A` (root of the regularized covariance).
    pub fn cov_root(&self) -> &DMatrix<f64> {
        &self.powers.sqrt
    }

    pub fn cov_inv_root(&self) -> &DMatrix<f64> {
        &self.powers.inv_sqrt
    }

    pub fn cov_inv(&self) -> &DMatrix<f64> {
        &self.powers.inverse
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Standardized targets `A·U_w` (`pLpR × k` each).
    pub fn targets(&self) -> &[DMatrix<f64>] {
        &self.targets
    }

    /// Slice (SIR/SAVE: `(ℓ, ℓ)`) or slice pair (DR: `(k, ℓ)`) of each target.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Columns per target: 1 for SIR, `pLpR` for SAVE and DR.
    pub fn width(&self) -> usize {
        self.targets[0].ncols()
    }

    /// Targets mapped back to predictor coordinates, `A⁻¹·T_w`.
    pub fn raw_targets(&self) -> Vec<DMatrix<f64>> {
        self.targets.iter().map(|t| &self.powers.inv_sqrt * t).collect()
    }
}

fn check_min_slice_size(slices: &SliceAssignment) -> Result<()> {
    match slices.counts().iter().position(|&c| c < 2) {
        Some(l) => Err(Error::InsufficientSlice {
            slice: l,
            count: slices.counts()[l],
        }),
        None => Ok(()),
    }
}

/// Folded-SIR targets: `T_ℓ = Σ̂^{-1/2} E_n[v | D = ℓ]` with weights `p̂_ℓ`.
pub fn sir_targets(
    samples: &SampleSet,
    slices: &SliceAssignment,
    mode: InversionMode,
    weights: Option<&RobustWeights>,
) -> Result<MomentTargets> {
    let m = slice_moments(samples, slices, weights)?;
    let powers = symmetric_powers(&m.cov, mode)?;
    let targets = m
        .means
        .iter()
        .map(|mu| DMatrix::from_column_slice(mu.len(), 1, (&powers.inv_sqrt * mu).as_slice()))
        .collect();
    Ok(MomentTargets {
        method: Method::Sir,
        p_l: samples.p_l(),
        p_r: samples.p_r(),
        mode,
        pairs: (0..slices.num_slices()).map(|l| (l, l)).collect(),
        weights: m.proportions,
        cov: m.cov,
        powers,
        targets,
    })
}

fn sandwich(inv_sqrt: &DMatrix<f64>, middle: &DMatrix<f64>) -> DMatrix<f64> {
    let t = inv_sqrt * middle * inv_sqrt;
    (&t + t.transpose()) * 0.5
}

/// Folded-SAVE targets: `T_ℓ = Σ̂^{-1/2}[Σ̂ − var_n(v | D = ℓ)]Σ̂^{-1/2}`.
pub fn save_targets(
    samples: &SampleSet,
    slices: &SliceAssignment,
    mode: InversionMode,
    weights: Option<&RobustWeights>,
) -> Result<MomentTargets> {
    check_min_slice_size(slices)?;
    let m = slice_moments(samples, slices, weights)?;
    let powers = symmetric_powers(&m.cov, mode)?;
    let targets = (0..slices.num_slices())
        .map(|l| sandwich(&powers.inv_sqrt, &(&m.cov - m.within_cov(l))))
        .collect();
    Ok(MomentTargets {
        method: Method::Save,
        p_l: samples.p_l(),
        p_r: samples.p_r(),
        mode,
        pairs: (0..slices.num_slices()).map(|l| (l, l)).collect(),
        weights: m.proportions,
        cov: m.cov,
        powers,
        targets,
    })
}

/// Folded-DR targets over all ordered slice pairs:
/// `T_{kℓ} = Σ̂^{-1/2}[2Σ̂ − E_n(ΔΔᵀ | k, ℓ)]Σ̂^{-1/2}`, weights `p̂_k p̂_ℓ`.
pub fn dr_targets(
    samples: &SampleSet,
    slices: &SliceAssignment,
    mode: InversionMode,
    weights: Option<&RobustWeights>,
) -> Result<MomentTargets> {
    check_min_slice_size(slices)?;
    let m = slice_moments(samples, slices, weights)?;
    let powers = symmetric_powers(&m.cov, mode)?;
    let s = slices.num_slices();
    let pairs: Vec<(usize, usize)> = (0..s).flat_map(|k| (0..s).map(move |l| (k, l))).collect();
    let two_cov = &m.cov * 2.0;
    let targets = pairs
        .iter()
        .map(|&(k, l)| sandwich(&powers.inv_sqrt, &(&two_cov - m.pair_second_moment(k, l))))
        .collect();
    let weights = pairs
        .iter()
        .map(|&(k, l)| m.proportions[k] * m.proportions[l])
        .collect();
    Ok(MomentTargets {
        method: Method::Dr,
        p_l: samples.p_l(),
        p_r: samples.p_r(),
        mode,
        pairs,
        weights,
        cov: m.cov,
        powers,
        targets,
    })
}

pub fn moment_targets(
    method: Method,
    samples: &SampleSet,
    slices: &SliceAssignment,
    mode: InversionMode,
    weights: Option<&RobustWeights>,
) -> Result<MomentTargets> {
    match method {
        Method::Sir => sir_targets(samples, slices, mode, weights),
        Method::Save => save_targets(samples, slices, mode, weights),
        Method::Dr => dr_targets(samples, slices, mode, weights),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar_samples(values: &[f64], ys: &[f64], kind: ResponseKind) -> SampleSet {
        SampleSet::new(
            1,
            1,
            values.iter().map(|&v| DMatrix::from_element(1, 1, v)).collect(),
            ys.to_vec(),
            kind,
        )
        .unwrap()
    }

    #[test]
    fn binary_slices_follow_labels() {
        let s = scalar_samples(&[0.1, 0.2, 0.3, 0.4], &[1.0, 0.0, 1.0, 0.0], ResponseKind::Categorical);
        let a = slice_assign(&s, 2).unwrap();
        assert_eq!(a.labels(), &[1, 0, 1, 0]);
        assert_eq!(a.levels().unwrap(), &[0.0, 1.0]);
        assert!(slice_assign(&s, 3).is_err());
    }

    #[test]
    fn continuous_equal_count_slices() {
        let y = [4.0, 1.0, 6.0, 2.0, 5.0, 3.0];
        let s = scalar_samples(&[0.0; 6], &y, ResponseKind::Continuous);
        let a = slice_assign(&s, 3).unwrap();
        let groups: Vec<Vec<f64>> = (0..3)
            .map(|l| {
                let mut g: Vec<f64> = (0..6).filter(|&i| a.labels()[i] == l).map(|i| y[i]).collect();
                g.sort_by(f64::total_cmp);
                g
            })
            .collect();
        assert_eq!(groups, vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
    }

    #[test]
    fn constant_response_is_degenerate() {
        let s = scalar_samples(&[0.0, 1.0, 2.0], &[3.0; 3], ResponseKind::Continuous);
        assert!(matches!(slice_assign(&s, 2), Err(Error::DegenerateSlicing(_))));
        assert!(matches!(slice_assign(&s, 1), Err(Error::DegenerateSlicing(_))));
    }

    #[test]
    fn proportions_sum_to_one() {
        let y: Vec<f64> = (0..7).map(f64::from).collect();
        let s = scalar_samples(&y, &y, ResponseKind::Continuous);
        let a = slice_assign(&s, 3).unwrap();
        assert_eq!(a.counts(), &[3, 2, 2]);
        let total: f64 = a.proportions(None).iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn covariance_examples() {
        let s = scalar_samples(&[1.0, -1.0], &[0.0, 1.0], ResponseKind::Categorical);
        assert_relative_eq!(sample_cov(&s, None).unwrap()[(0, 0)], 1.0);
        let same = scalar_samples(&[2.5, 2.5, 2.5], &[0.0, 1.0, 0.0], ResponseKind::Categorical);
        assert_eq!(sample_cov(&same, None).unwrap()[(0, 0)], 0.0);
        let w = RobustWeights::uniform(2);
        assert_eq!(sample_cov(&s, Some(&w)).unwrap(), sample_cov(&s, None).unwrap());
    }

    #[test]
    fn save_scalar_toy() {
        // standardized data, within-slice variances 0.5 and 1.5, equal means
        let a = 0.5f64.sqrt();
        let b = 1.5f64.sqrt();
        let s = scalar_samples(&[-a, a, -b, b], &[0.0, 0.0, 1.0, 1.0], ResponseKind::Categorical);
        let slices = slice_assign(&s, 2).unwrap();
        let t = save_targets(&s, &slices, InversionMode::Exact, None).unwrap();
        assert_relative_eq!(t.targets()[0][(0, 0)], 0.5, epsilon = 1e-12);
        assert_relative_eq!(t.targets()[1][(0, 0)], -0.5, epsilon = 1e-12);
    }

    #[test]
    fn save_needs_two_per_slice() {
        let s = scalar_samples(&[0.0, 1.0, 2.0], &[0.0, 0.0, 1.0], ResponseKind::Categorical);
        let slices = slice_assign(&s, 2).unwrap();
        assert!(matches!(
            save_targets(&s, &slices, InversionMode::Exact, None),
            Err(Error::InsufficientSlice { slice: 1, count: 1 })
        ));
        assert!(dr_targets(&s, &slices, InversionMode::Exact, None).is_err());
    }

    #[test]
    fn dr_single_slice_is_zero() {
        let s = scalar_samples(&[0.3, -1.0, 2.0, 0.7], &[0.0; 4], ResponseKind::Categorical);
        let one = SliceAssignment::from_labels(vec![0; 4], 1).unwrap();
        let t = dr_targets(&s, &one, InversionMode::Exact, None).unwrap();
        assert_eq!(t.targets().len(), 1);
        assert!(t.targets()[0][(0, 0)].abs() < 1e-12);
    }

    #[test]
    fn dr_scalar_four_term_enumeration() {
        // two slices with means ±m, within variance 1 before standardization
        let m = 0.8;
        let xs = [m - 1.0, m, m + 1.0, -m - 1.0, -m, -m + 1.0];
        let ys = [1.0, 1.0, 1.0, 0.0, 0.0, 0.0];
        let s = scalar_samples(&xs, &ys, ResponseKind::Categorical);
        let slices = slice_assign(&s, 2).unwrap();
        let t = dr_targets(&s, &slices, InversionMode::Exact, None).unwrap();
        // brute force over the 3×3 cross pairs of slice 0 (y=0) and slice 1 (y=1)
        let mean: f64 = xs.iter().sum::<f64>() / 6.0;
        let var: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 6.0;
        let (s0, s1) = (&xs[3..], &xs[..3]);
        let cross: f64 = s0
            .iter()
            .flat_map(|a| s1.iter().map(move |b| (b - a).powi(2)))
            .sum::<f64>()
            / 9.0;
        let expected = (2.0 * var - cross) / var;
        let idx = t.pairs().iter().position(|&p| p == (0, 1)).unwrap();
        assert_relative_eq!(t.targets()[idx][(0, 0)], expected, epsilon = 1e-12);
        let idx_rev = t.pairs().iter().position(|&p| p == (1, 0)).unwrap();
        assert_eq!(t.targets()[idx], t.targets()[idx_rev]);
        let wsum: f64 = t.weights().iter().sum();
        assert_relative_eq!(wsum, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn robust_weights_uniform_without_outliers() {
        let xs: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin()).collect();
        let ys: Vec<f64> = (0..20).map(|i| (i % 2) as f64).collect();
        let s = scalar_samples(&xs, &ys, ResponseKind::Categorical);
        let w = robust_weights(&s, 1.0, InversionMode::Exact).unwrap();
        for &wi in w.values() {
            assert_relative_eq!(wi, 1.0 / 20.0, epsilon = 1e-14);
        }
        assert!(robust_weights(&s, 0.0, InversionMode::Exact).is_err());
    }

    #[test]
    fn robust_weights_all_zero_distance() {
        let s = scalar_samples(&[1.0, 1.0, 1.0], &[0.0, 1.0, 0.0], ResponseKind::Categorical);
        let w = robust_weights(&s, 0.5, InversionMode::pseudo()).unwrap();
        assert_eq!(w.values(), RobustWeights::uniform(3).values());
    }
}
