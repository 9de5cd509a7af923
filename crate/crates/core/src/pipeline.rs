//! Spectral pre-screening, quadratic discriminant analysis and
//! leave-one-out classification on folded predictors.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::envelope::{fit_folded, FoldingConfig, FoldingFit};
use crate::error::{Error, Result};
use crate::moments::{ResponseKind, SampleSet};
use crate::rng::derive_seed;
use crate::simbench::{conventional_fit, Estimator};
use crate::tensor_ops::{vec, InversionMode, SubspaceBasis, DEFAULT_RANK_TOL};

/// Leading eigenvectors of the pooled row and column scatter matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenBases {
    /// `pL × sL`, eigenvectors of `E_n(X − X̄)(X − X̄)ᵀ`.
    pub left: DMatrix<f64>,
    /// `pR × sR`, eigenvectors of `E_n(X − X̄)ᵀ(X − X̄)`.
    pub right: DMatrix<f64>,
    pub left_values: Vec<f64>,
    pub right_values: Vec<f64>,
}

impl ScreenBases {
    /// `Vᵀ X W`.
    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.shape() != (self.left.nrows(), self.right.nrows()) {
            return Err(Error::Dimension(format!(
                "predictor is {}×{}, screen expects {}×{}",
                x.nrows(),
                x.ncols(),
                self.left.nrows(),
                self.right.nrows()
            )));
        }
        Ok(self.left.transpose() * x * &self.right)
    }
}

/// Top `k` eigenpairs in non-increasing order; each vector's largest-magnitude
/// component is made positive, ties going to the first index.
fn leading_eigenvectors(m: DMatrix<f64>, k: usize, side: &str) -> (DMatrix<f64>, Vec<f64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    let top = eig.eigenvalues[order[0]].max(0.0);
    let rank = order
        .iter()
        .filter(|&&i| eig.eigenvalues[i] > DEFAULT_RANK_TOL * top)
        .count();
    if k > rank {
        log::warn!("{side} screen keeps {k} directions but the scatter matrix has rank {rank}");
    }
    let mut vectors = eig.eigenvectors.select_columns(&order[..k]);
    for mut col in vectors.column_iter_mut() {
        let mut pivot = 0;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
    }
    let values = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
    (vectors, values)
}

/// Screen bases from the pooled scatter matrices and the reduced sample
/// `X*_i = Vᵀ X_i W`.
pub fn prescreen(samples: &SampleSet, s_l: usize, s_r: usize) -> Result<(ScreenBases, SampleSet)> {
    let (p_l, p_r) = (samples.p_l(), samples.p_r());
    if s_l == 0 || s_l > p_l || s_r == 0 || s_r > p_r {
        return Err(Error::InvalidConfig(format!(
            "screen sizes ({s_l}, {s_r}) must satisfy 1 ≤ sL ≤ {p_l}, 1 ≤ sR ≤ {p_r}"
        )));
    }
    let n = samples.len() as f64;
    let mut mean = DMatrix::zeros(p_l, p_r);
    for x in samples.xs() {
        mean += x;
    }
    mean /= n;
    let mut left = DMatrix::zeros(p_l, p_l);
    let mut right = DMatrix::zeros(p_r, p_r);
    for x in samples.xs() {
        let c = x - &mean;
        left.gemm(1.0 / n, &c, &c.transpose(), 1.0);
        right.gemm(1.0 / n, &c.transpose(), &c, 1.0);
    }
    let (v, left_values) = leading_eigenvectors((&left + left.transpose()) * 0.5, s_l, "left");
    let (w, right_values) = leading_eigenvectors((&right + right.transpose()) * 0.5, s_r, "right");
    let bases = ScreenBases {
        left: v,
        right: w,
        left_values,
        right_values,
    };
    let reduced = samples.map_predictors(|x| bases.left.transpose() * x * &bases.right)?;
    Ok((bases, reduced))
}

/// Gaussian class model of a quadratic discriminant.
#[derive(Debug, Clone, PartialEq)]
pub struct QdaClass {
    pub label: f64,
    pub prior: f64,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub precision: DMatrix<f64>,
    pub log_det: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QdaModel {
    /// Classes sorted by ascending label.
    pub classes: Vec<QdaClass>,
    pub mode: InversionMode,
}

/// Inverse and log-determinant of a class covariance under `mode`.
fn precision_and_log_det(cov: &DMatrix<f64>, mode: InversionMode, label: f64) -> Result<(DMatrix<f64>, f64)> {
    let eig = SymmetricEigen::new(cov.clone());
    let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let values: Vec<Option<f64>> = eig
        .eigenvalues
        .iter()
        .map(|&l| {
            let l = l.max(0.0);
            match mode {
                InversionMode::Exact => Some(l),
                InversionMode::Pseudo { rank_tol } => (max > 0.0 && l > rank_tol * max).then_some(l),
                InversionMode::Ridge { epsilon } => Some(l + epsilon),
            }
        })
        .collect();
    if matches!(mode, InversionMode::Exact) && (max <= 0.0 || min < 1e-12 * max) {
        return Err(Error::singular(
            &mode,
            format!("covariance of class {label} has λ_min = {min:e}, λ_max = {max:e}"),
        ));
    }
    if values.iter().all(Option::is_none) {
        return Err(Error::singular(&mode, format!("covariance of class {label} is zero")));
    }
    let inv = DVector::from_iterator(values.len(), values.iter().map(|v| v.map_or(0.0, |l| 1.0 / l)));
    let precision = &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose();
    let log_det = values.iter().flatten().map(|l| l.ln()).sum();
    Ok(((&precision + precision.transpose()) * 0.5, log_det))
}

/// Fit per-class priors, means and covariances (`n_c − 1` denominator).
pub fn qda_fit_vectors(features: &[DVector<f64>], labels: &[f64], mode: InversionMode) -> Result<QdaModel> {
    mode.validate()?;
    if features.len() != labels.len() || features.is_empty() {
        return Err(Error::Dimension(format!(
            "{} feature vectors for {} labels",
            features.len(),
            labels.len()
        )));
    }
    let dim = features[0].len();
    if features.iter().any(|f| f.len() != dim) {
        return Err(Error::Dimension("feature vectors differ in length".into()));
    }
    let mut levels = labels.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    if levels.len() < 2 {
        return Err(Error::InvalidInput("QDA needs at least 2 classes".into()));
    }
    let n = features.len() as f64;
    let classes = levels
        .iter()
        .map(|&label| {
            let members: Vec<&DVector<f64>> = features
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == label)
                .map(|(f, _)| f)
                .collect();
            let count = members.len();
            if count < 2 {
                return Err(Error::InvalidInput(format!(
                    "class {label} has {count} member(s); QDA needs at least 2"
                )));
            }
            let mut mean = DVector::zeros(dim);
            for m in &members {
                mean += *m;
            }
            mean /= count as f64;
            let mut cov = DMatrix::zeros(dim, dim);
            for m in &members {
                let c = *m - &mean;
                cov.ger(1.0 / (count - 1) as f64, &c, &c, 1.0);
            }
            let cov = (&cov + cov.transpose()) * 0.5;
            let (precision, log_det) = precision_and_log_det(&cov, mode, label)?;
            Ok(QdaClass {
                label,
                prior: count as f64 / n,
                mean,
                cov,
                precision,
                log_det,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QdaModel { classes, mode })
}

/// QDA on `vec(X_i)` of a categorical sample.
pub fn qda_fit(samples: &SampleSet, mode: InversionMode) -> Result<QdaModel> {
    if samples.kind() != ResponseKind::Categorical {
        return Err(Error::InvalidInput("QDA needs a categorical response".into()));
    }
    let features: Vec<_> = samples.xs().iter().map(vec).collect();
    qda_fit_vectors(&features, samples.ys(), mode)
}

impl QdaModel {
    /// `log π_c − ½ log det Σ_c − ½ (x − μ_c)ᵀ Σ_c⁻¹ (x − μ_c)` per class.
    pub fn scores(&self, x: &DVector<f64>) -> Result<Vec<f64>> {
        let dim = self.classes[0].mean.len();
        if x.len() != dim {
            return Err(Error::Dimension(format!(
                "feature vector has length {}, model expects {dim}",
                x.len()
            )));
        }
        Ok(self
            .classes
            .iter()
            .map(|c| {
                let d = x - &c.mean;
                c.prior.ln() - 0.5 * c.log_det - 0.5 * d.dot(&(&c.precision * &d))
            })
            .collect())
    }

    /// Label with the highest score; ties go to the smallest label.
    pub fn predict(&self, x: &DVector<f64>) -> Result<f64> {
        let scores = self.scores(x)?;
        let mut best = 0;
        for (i, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = i;
            }
        }
        Ok(self.classes[best].label)
    }
}

pub fn qda_predict(model: &QdaModel, x: &DMatrix<f64>) -> Result<f64> {
    model.predict(&vec(x))
}

/// Settings for [`loocv_classify`].
#[derive(Debug, Clone)]
pub struct LoocvConfig {
    pub estimator: Estimator,
    pub slices: usize,
    pub screen_l: usize,
    pub screen_r: usize,
    /// Folded fits; the seed is re-derived per held-out item.
    pub folding: FoldingConfig,
    /// Directions kept by an unfolded estimator.
    pub conventional_d: usize,
    /// Inversion used for the class covariances.
    pub qda_mode: InversionMode,
}

impl LoocvConfig {
    pub fn new(estimator: Estimator, slices: usize, screen_l: usize, screen_r: usize, folding: FoldingConfig) -> Self {
        let conventional_d = folding.m_l * folding.m_r;
        LoocvConfig {
            estimator,
            slices,
            screen_l,
            screen_r,
            folding,
            conventional_d,
            qda_mode: InversionMode::Exact,
        }
    }
}

/// Dimension reduction learned on a training fold.
#[derive(Debug, Clone, PartialEq)]
pub enum Reduction {
    Folded(FoldingFit),
    Conventional(SubspaceBasis),
}

impl Reduction {
    /// Feature vector of an already screened predictor.
    pub fn features(&self, screened: &DMatrix<f64>) -> Result<DVector<f64>> {
        match self {
            Reduction::Folded(fit) => Ok(vec(&fit.reduce(screened)?)),
            Reduction::Conventional(basis) => Ok(basis.matrix().tr_mul(&vec(screened))),
        }
    }
}

/// Everything fitted on the training part of one leave-one-out fold.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldModel {
    pub screen: ScreenBases,
    pub reduction: Reduction,
    pub qda: QdaModel,
}

impl FoldModel {
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<f64> {
        let screened = self.screen.apply(x)?;
        self.qda.predict(&self.reduction.features(&screened)?)
    }
}

/// Fit screening, reduction and QDA on every item except `held_out`.
///
/// The held-out item's predictor is never read; the folding seed depends on
/// its identifier only.
pub fn fold_model(samples: &SampleSet, held_out: usize, config: &LoocvConfig) -> Result<FoldModel> {
    let n = samples.len();
    if held_out >= n {
        return Err(Error::Dimension(format!("held-out index {held_out} out of range for {n} items")));
    }
    let training: Vec<usize> = (0..n).filter(|&i| i != held_out).collect();
    let train = samples.subset(&training)?;
    let (screen, reduced) = prescreen(&train, config.screen_l, config.screen_r)?;
    let reduction = match config.estimator {
        Estimator::Folded(method) => {
            let mut folding = config.folding.clone();
            folding.seed = derive_seed(config.folding.seed, &[samples.ids()[held_out]]);
            Reduction::Folded(fit_folded(&reduced, method, config.slices, &folding)?)
        }
        Estimator::Conventional(method) => Reduction::Conventional(conventional_fit(
            &reduced,
            method,
            config.slices,
            config.conventional_d,
            config.folding.inversion,
        )?),
    };
    let features = reduced
        .xs()
        .iter()
        .map(|x| reduction.features(x))
        .collect::<Result<Vec<_>>>()?;
    let qda = qda_fit_vectors(&features, reduced.ys(), config.qda_mode)?;
    Ok(FoldModel {
        screen,
        reduction,
        qda,
    })
}

/// Prediction for `held_out` from a model trained without it.
pub fn loocv_fold(samples: &SampleSet, held_out: usize, config: &LoocvConfig) -> Result<f64> {
    fold_model(samples, held_out, config)?.predict(&samples.xs()[held_out])
}

/// Outcome of one held-out item.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldPrediction {
    pub index: usize,
    pub id: u64,
    pub truth: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoocvReport {
    pub correct: usize,
    pub total: usize,
    pub predictions: Vec<FoldPrediction>,
}

/// Leave-one-out classification accuracy of screening + reduction + QDA.
pub fn loocv_classify(samples: &SampleSet, config: &LoocvConfig) -> Result<LoocvReport> {
    if samples.kind() != ResponseKind::Categorical {
        return Err(Error::InvalidInput("classification needs a categorical response".into()));
    }
    if samples.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "leave-one-out needs at least 3 items, got {}",
            samples.len()
        )));
    }
    let predictions = (0..samples.len())
        .into_par_iter()
        .map(|i| {
            let predicted = loocv_fold(samples, i, config).map_err(|e| Error::Fold {
                fold: i,
                source: Box::new(e),
            })?;
            Ok(FoldPrediction {
                index: i,
                id: samples.ids()[i],
                truth: samples.ys()[i],
                predicted,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let correct = predictions.iter().filter(|p| p.predicted == p.truth).count();
    Ok(LoocvReport {
        correct,
        total: samples.len(),
        predictions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_ops::subspace_distance;
    use nalgebra::dvector;

    #[test]
    fn rank_one_scatter_recovers_factors() {
        let u = DVector::from_vec(vec![1.0, 2.0, -1.0]).normalize();
        let v = DVector::from_vec(vec![0.5, 0.0, 1.0, 1.0]).normalize();
        let xs: Vec<_> = [1.0, -2.0, 0.5, 3.0, -1.5]
            .iter()
            .map(|&c| &u * v.transpose() * c)
            .collect();
        let ys = vec![0.0, 1.0, 0.0, 1.0, 0.0];
        let s = SampleSet::new(3, 4, xs, ys, ResponseKind::Categorical).unwrap();
        let (bases, reduced) = prescreen(&s, 1, 1).unwrap();
        let uu = DMatrix::from_column_slice(3, 1, u.as_slice());
        let vv = DMatrix::from_column_slice(4, 1, v.as_slice());
        assert!(subspace_distance(&bases.left, &uu).unwrap() < 1e-8);
        assert!(subspace_distance(&bases.right, &vv).unwrap() < 1e-8);
        assert_eq!(reduced.p_l(), 1);
        let again = prescreen(&s, 1, 1).unwrap().0;
        assert_eq!(bases, again);
    }

    #[test]
    fn equal_spherical_classes_split_at_bisector() {
        let feats = vec![dvector![-1.0, 0.0], dvector![-1.0, 2.0], dvector![1.0, 0.0], dvector![1.0, 2.0]];
        let m = qda_fit_vectors(&feats, &[0.0, 0.0, 1.0, 1.0], InversionMode::ridge(1.0).unwrap()).unwrap();
        assert_eq!(m.predict(&dvector![0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(m.predict(&dvector![0.1, 1.0]).unwrap(), 1.0);
        assert_eq!(m.predict(&dvector![-0.1, 5.0]).unwrap(), 0.0);
    }

    #[test]
    fn low_variance_class_wins_near_zero() {
        // class 0 sample variance 0.1, class 1 sample variance 1.5, both centered at 0
        let a = 0.1f64.sqrt();
        let b = 1.5f64.sqrt();
        let feats: Vec<DVector<f64>> = [-a, 0.0, a, -b, 0.0, b].iter().map(|&x| dvector![x]).collect();
        let m = qda_fit_vectors(&feats, &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0], InversionMode::Exact).unwrap();
        // boundary: x² = ln(15) / (1/0.1 − 1/1.5)
        let boundary = (15.0f64.ln() / (10.0 - 1.0 / 1.5)).sqrt();
        assert_eq!(m.predict(&dvector![0.0]).unwrap(), 0.0);
        assert_eq!(m.predict(&dvector![boundary * 0.99]).unwrap(), 0.0);
        assert_eq!(m.predict(&dvector![boundary * 1.01]).unwrap(), 1.0);
    }

    #[test]
    fn singular_class_covariance_suggests_ridge() {
        let feats = vec![dvector![0.0, 0.0], dvector![1.0, 1.0], dvector![0.0, 1.0], dvector![1.0, 0.0], dvector![2.0, 2.0]];
        let err = qda_fit_vectors(&feats, &[0.0, 0.0, 1.0, 1.0, 0.0], InversionMode::Exact).unwrap_err();
        assert!(err.is_singular());
        assert!(err.to_string().contains("ridge"));
    }
}
