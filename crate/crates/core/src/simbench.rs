//! Two-component matrix-normal mixtures, unfolded baselines, and the
//! Monte-Carlo harness comparing estimated and true subspaces.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::envelope::{fit_folded, FoldingConfig};
use crate::error::{Error, Result};
use crate::moments::{moment_targets, slice_assign, Method, MomentTargets, ResponseKind, SampleSet};
use crate::rng::{derive_seed, seeded};
use crate::tensor_ops::{
    benchmark_distance, compensated_sum, mean_and_se, subspace_distance, InversionMode,
    SubspaceBasis, DEFAULT_RANK_TOL,
};

/// Default class-1 mean shift of `X_11` and `X_22`.
pub const DEFAULT_MU: f64 = 2.5;

/// Which entries of `X` change variance between the two classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Variance shift on the off-diagonal pair `(1,2), (2,1)`.
    Example1,
    /// Variance shift on `(1,1), (1,2), (2,1)`.
    Example2,
}

impl Variant {
    /// 0-based entries whose variance depends on the class.
    pub fn variance_set(&self) -> &'static [(usize, usize)] {
        match self {
            Variant::Example1 => &[(0, 1), (1, 0)],
            Variant::Example2 => &[(0, 0), (0, 1), (1, 0)],
        }
    }

    /// Dimension of the unfolded central subspace of `vec(X)`.
    pub fn conventional_dim(&self) -> usize {
        match self {
            Variant::Example1 => 3,
            Variant::Example2 => 4,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Example1 => "example1",
            Variant::Example2 => "example2",
        }
    }
}

/// Parameters of the Bernoulli mixture of `p × p` matrix normals.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModelSpec {
    pub variant: Variant,
    pub p: usize,
    /// `P(Y = 1)`.
    pub pi: f64,
    /// Mean of `X_11` and `X_22` when `Y = 1`.
    pub mu: f64,
    /// Variance on the shifted entries when `Y = 0`.
    pub sigma2: f64,
    /// Variance on the shifted entries when `Y = 1`.
    pub tau2: f64,
}

impl MixtureModelSpec {
    pub fn new(variant: Variant, p: usize) -> Self {
        MixtureModelSpec {
            variant,
            p,
            pi: 0.5,
            mu: DEFAULT_MU,
            sigma2: 0.1,
            tau2: 1.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::InvalidConfig(format!("p must be at least 2, got {}", self.p)));
        }
        if !(self.pi > 0.0 && self.pi < 1.0) {
            return Err(Error::InvalidConfig(format!("π must lie in (0, 1), got {}", self.pi)));
        }
        if !(self.sigma2 > 0.0 && self.tau2 > 0.0) || !self.mu.is_finite() {
            return Err(Error::InvalidConfig(
                "variances must be positive and μ finite".into(),
            ));
        }
        Ok(())
    }

    fn sd(&self, i: usize, j: usize, y: bool) -> f64 {
        if self.variant.variance_set().contains(&(i, j)) {
            if y { self.tau2.sqrt() } else { self.sigma2.sqrt() }
        } else {
            1.0
        }
    }

    fn mean(&self, i: usize, j: usize, y: bool) -> f64 {
        if y && i == j && i < 2 { self.mu } else { 0.0 }
    }
}

/// A simulated sample and the true left and right bases.
#[derive(Debug, Clone)]
pub struct Mixture {
    pub samples: SampleSet,
    pub left: SubspaceBasis,
    pub right: SubspaceBasis,
}

impl Mixture {
    /// `right ⊗ left`, the true envelope basis in `vec(X)` coordinates.
    pub fn kron_truth(&self) -> DMatrix<f64> {
        self.right.kron(&self.left).into_inner()
    }
}

/// Draw `n` observations. Per observation the class label is drawn first,
/// then the entries of `X` in column-major order.
pub fn gen_mixture<R: Rng + ?Sized>(spec: &MixtureModelSpec, n: usize, rng: &mut R) -> Result<Mixture> {
    spec.validate()?;
    let p = spec.p;
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let y = rng.random::<f64>() < spec.pi;
        let x = DMatrix::from_fn(p, p, |i, j| {
            let z: f64 = rng.sample(StandardNormal);
            spec.mean(i, j, y) + spec.sd(i, j, y) * z
        });
        xs.push(x);
        ys.push(if y { 1.0 } else { 0.0 });
    }
    Ok(Mixture {
        samples: SampleSet::new(p, p, xs, ys, ResponseKind::Categorical)?,
        left: SubspaceBasis::coordinate(p, 2)?,
        right: SubspaceBasis::coordinate(p, 2)?,
    })
}

/// Unfolded candidate matrix: `Σ c_ℓ T_ℓT_ℓᵀ` for SIR and `Σ c_w T_w²` for
/// SAVE and DR.
pub fn candidate_matrix(targets: &MomentTargets) -> DMatrix<f64> {
    let p = targets.p();
    let mut m = DMatrix::zeros(p, p);
    for (t, &w) in targets.targets().iter().zip(targets.weights()) {
        m.gemm(w, t, &t.transpose(), 1.0);
    }
    (&m + m.transpose()) * 0.5
}

/// Unfolded SIR/SAVE/DR: the top eigenvectors of the candidate matrix,
/// mapped back by `Σ̂^{-1/2}`.
///
/// At most `d` directions are returned, fewer when the candidate matrix has
/// lower numerical rank (eigenvalues above `1e-10·λ_max`).
pub fn conventional_fit(
    samples: &SampleSet,
    method: Method,
    slices: usize,
    d: usize,
    mode: InversionMode,
) -> Result<SubspaceBasis> {
    if d == 0 || d > samples.p() {
        return Err(Error::InvalidConfig(format!(
            "d must lie in 1..={}, got {d}",
            samples.p()
        )));
    }
    let assignment = slice_assign(samples, slices)?;
    let targets = moment_targets(method, samples, &assignment, mode, None)?;
    let eig = SymmetricEigen::new(candidate_matrix(&targets));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    let top = eig.eigenvalues[order[0]];
    if top <= 0.0 {
        return Err(Error::InvalidInput("candidate matrix is zero".into()));
    }
    let rank = order
        .iter()
        .take_while(|&&i| eig.eigenvalues[i] > DEFAULT_RANK_TOL * top)
        .count();
    let keep: Vec<usize> = order[..d.min(rank)].to_vec();
    let vectors = eig.eigenvectors.select_columns(&keep);
    SubspaceBasis::new(targets.cov_inv_root() * vectors)
}

/// A fitted estimator scored in the Monte-Carlo harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    Folded(Method),
    Conventional(Method),
}

impl Estimator {
    pub fn name(&self) -> String {
        match self {
            Estimator::Folded(m) => format!("Folded-{}", m.name()),
            Estimator::Conventional(m) => m.name().to_string(),
        }
    }
}

/// The two benchmark tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Table {
    /// Folded methods on the first mixture.
    One,
    /// Folded and unfolded methods on the second mixture.
    Two,
}

impl Table {
    pub fn from_id(id: u32) -> Result<Self> {
        match id {
            1 => Ok(Table::One),
            2 => Ok(Table::Two),
            other => Err(Error::InvalidConfig(format!("table must be 1 or 2, got {other}"))),
        }
    }

    pub fn id(&self) -> u32 {
        match self {
            Table::One => 1,
            Table::Two => 2,
        }
    }

    pub fn variant(&self) -> Variant {
        match self {
            Table::One => Variant::Example1,
            Table::Two => Variant::Example2,
        }
    }

    /// Estimators in row order.
    pub fn estimators(&self) -> Vec<Estimator> {
        match self {
            Table::One => Method::ALL.iter().map(|&m| Estimator::Folded(m)).collect(),
            Table::Two => Method::ALL
                .iter()
                .flat_map(|&m| [Estimator::Folded(m), Estimator::Conventional(m)])
                .collect(),
        }
    }
}

/// Settings for [`monte_carlo`].
#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub table: Table,
    pub n_list: Vec<usize>,
    pub p_list: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub mu: f64,
    pub slices: usize,
    /// Template for the folded fits; its seed is replaced per replication.
    pub folding: FoldingConfig,
    /// Directions kept by unfolded methods; defaults to the variant's dimension.
    pub conventional_d: Option<usize>,
    /// Replications for the random-subspace benchmark distance.
    pub benchmark_reps: usize,
    /// Estimators to score; defaults to the table's full column set.
    pub estimators: Vec<Estimator>,
}

impl BenchConfig {
    pub fn new(table: Table, reps: usize, seed: u64) -> Self {
        BenchConfig {
            table,
            n_list: vec![100, 200, 300, 500, 800],
            p_list: vec![5, 10],
            reps,
            seed,
            mu: DEFAULT_MU,
            slices: 2,
            folding: FoldingConfig::new(2, 2).with_inversion(InversionMode::pseudo()),
            conventional_d: None,
            benchmark_reps: 20_000,
            estimators: table.estimators(),
        }
    }

    pub fn estimators(&self) -> Vec<Estimator> {
        self.estimators.clone()
    }

    fn validate(&self) -> Result<()> {
        if self.reps < 2 {
            return Err(Error::InvalidConfig(format!(
                "at least 2 replications are needed, got {}",
                self.reps
            )));
        }
        if self.n_list.is_empty() || self.p_list.is_empty() || self.estimators.is_empty() {
            return Err(Error::InvalidConfig("empty n, p or estimator list".into()));
        }
        if self.benchmark_reps < 2 {
            return Err(Error::InvalidConfig("benchmark needs at least 2 replications".into()));
        }
        for &p in &self.p_list {
            self.folding.validate(p, p)?;
        }
        Ok(())
    }
}

/// Mean distance for one (estimator, p, n) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub estimator: Estimator,
    pub p: usize,
    pub n: usize,
    pub mean: f64,
    pub se: f64,
    /// Replications that produced a distance.
    pub completed: usize,
    pub failures: usize,
    /// More than 1% of replications failed.
    pub flagged: bool,
    pub distances: Vec<f64>,
}

/// Random-subspace reference distance for one `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkDistance {
    pub p: usize,
    pub mean: f64,
    pub se: f64,
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub table: Table,
    pub reps: usize,
    pub seed: u64,
    pub mu: f64,
    pub n_list: Vec<usize>,
    pub p_list: Vec<usize>,
    pub estimators: Vec<Estimator>,
    pub cells: Vec<CellResult>,
    pub benchmarks: Vec<BenchmarkDistance>,
}

impl BenchReport {
    pub fn cell(&self, estimator: Estimator, p: usize, n: usize) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.estimator == estimator && c.p == p && c.n == n)
    }

    pub fn benchmark(&self, p: usize) -> Option<&BenchmarkDistance> {
        self.benchmarks.iter().find(|b| b.p == p)
    }
}

/// Seed of the data set for replication `rep` of cell `(p, n)`.
pub fn replication_seed(base: u64, table: Table, p: usize, n: usize, rep: usize) -> u64 {
    derive_seed(base, &[table.id() as u64, p as u64, n as u64, rep as u64])
}

/// Distances of every estimator on one simulated data set.
pub fn score_replication(
    config: &BenchConfig,
    p: usize,
    n: usize,
    rep: usize,
) -> Result<Vec<Result<f64>>> {
    let seed = replication_seed(config.seed, config.table, p, n, rep);
    let mut spec = MixtureModelSpec::new(config.table.variant(), p);
    spec.mu = config.mu;
    let mixture = gen_mixture(&spec, n, &mut seeded(seed))?;
    let truth = mixture.kron_truth();
    let d = config
        .conventional_d
        .unwrap_or(config.table.variant().conventional_dim());
    Ok(config
        .estimators()
        .iter()
        .map(|est| match *est {
            Estimator::Folded(method) => {
                let mut folding = config.folding.clone();
                folding.seed = derive_seed(seed, &[1]);
                let fit = fit_folded(&mixture.samples, method, config.slices, &folding)?;
                subspace_distance(&fit.kron_basis(), &truth)
            }
            Estimator::Conventional(method) => {
                let basis =
                    conventional_fit(&mixture.samples, method, config.slices, d, config.folding.inversion)?;
                subspace_distance(basis.matrix(), &truth)
            }
        })
        .collect())
}

/// Run every (p, n) cell of the table with `config.reps` replications.
///
/// A replication whose fit fails is counted in `failures` and left out of
/// the mean; data generation failures abort the run.
pub fn monte_carlo(config: &BenchConfig) -> Result<BenchReport> {
    config.validate()?;
    let estimators = config.estimators();
    let mut cells = Vec::new();
    let mut benchmarks = Vec::new();
    for &p in &config.p_list {
        let (mean, se) = benchmark_distance(
            p,
            p,
            config.folding.m_l,
            config.folding.m_r,
            config.benchmark_reps,
            derive_seed(config.seed, &[u64::MAX, p as u64]),
        )?;
        benchmarks.push(BenchmarkDistance {
            p,
            mean,
            se,
            reps: config.benchmark_reps,
        });
        for &n in &config.n_list {
            let reps: Vec<Vec<Result<f64>>> = (0..config.reps)
                .into_par_iter()
                .map(|rep| score_replication(config, p, n, rep))
                .collect::<Result<_>>()?;
            for (e, &estimator) in estimators.iter().enumerate() {
                let mut distances = Vec::with_capacity(config.reps);
                let mut failures = 0;
                for rep in &reps {
                    match &rep[e] {
                        Ok(d) => distances.push(*d),
                        Err(err) => {
                            failures += 1;
                            log::warn!("{} p={p} n={n}: {err}", estimator.name());
                        }
                    }
                }
                let (mean, se) = if distances.len() >= 2 {
                    mean_and_se(&distances)
                } else {
                    (f64::NAN, f64::NAN)
                };
                cells.push(CellResult {
                    estimator,
                    p,
                    n,
                    mean,
                    se,
                    completed: distances.len(),
                    failures,
                    flagged: failures * 100 > config.reps,
                    distances,
                });
            }
        }
    }
    Ok(BenchReport {
        table: config.table,
        reps: config.reps,
        seed: config.seed,
        mu: config.mu,
        n_list: config.n_list.clone(),
        p_list: config.p_list.clone(),
        estimators,
        cells,
        benchmarks,
    })
}

/// Compensated mean of `values`.
pub fn mean(values: &[f64]) -> f64 {
    compensated_sum(values.iter().copied()) / values.len() as f64
}
