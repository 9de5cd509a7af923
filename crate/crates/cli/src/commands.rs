use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};
use foldkit::pipeline::{loocv_classify, LoocvConfig};
use foldkit::rng::seeded;
use foldkit::simbench::{
    conventional_fit, gen_mixture, monte_carlo, BenchConfig, BenchReport, Estimator, MixtureModelSpec, Table,
    Variant, DEFAULT_MU,
};
use foldkit::tensor_ops::vec;
use foldkit::{fit_folded, FoldingConfig, FoldingFit, InversionMode, ResponseKind, SampleSet, SubspaceBasis};
use nalgebra::DVector;
use serde::Serialize;

use crate::config::{InversionName, MethodName, RunConfig, SolverArgs};
use crate::dataset::{read_dataset, render_dataset};
use crate::error::CliError;
use crate::output::{json_matrix, json_number, json_numbers, number, sidecar, to_json, write_atomic, Json};

const DEFAULT_CONTINUOUS_SLICES: usize = 5;

fn default_slices(samples: &SampleSet, config: &RunConfig) -> usize {
    config.slices.unwrap_or(match samples.kind() {
        ResponseKind::Categorical => samples.levels().len(),
        ResponseKind::Continuous => DEFAULT_CONTINUOUS_SLICES,
    })
}

fn describe(mode: InversionMode) -> String {
    match mode {
        InversionMode::Exact => "exact".to_string(),
        InversionMode::Pseudo { rank_tol } => format!("pinv(rank_tol={})", number(rank_tol)),
        InversionMode::Ridge { epsilon } => format!("ridge(epsilon={})", number(epsilon)),
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Dataset file.
    pub data: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Reduced-predictor CSV; defaults to `<out>.reduced.csv` when `--out` is given.
    #[arg(long)]
    pub reduced: Option<PathBuf>,
}

#[derive(Serialize)]
struct FoldedReport {
    m_l: usize,
    m_r: usize,
    restarts: usize,
    a: Vec<Vec<Json>>,
    b: Vec<Vec<Json>>,
    f: Vec<Vec<Vec<Json>>>,
    objective: Json,
    objective_trace: Vec<Json>,
    converged: bool,
    restart_index: usize,
    restart_objectives: Vec<Option<Json>>,
    descent_violations: usize,
}

impl FoldedReport {
    fn new(fit: &FoldingFit, config: &FoldingConfig) -> Self {
        FoldedReport {
            m_l: config.m_l,
            m_r: config.m_r,
            restarts: config.restarts,
            a: json_matrix(&fit.a),
            b: json_matrix(&fit.b),
            f: fit.f.iter().map(json_matrix).collect(),
            objective: json_number(fit.objective()),
            objective_trace: json_numbers(fit.objective_trace.iter().copied()),
            converged: fit.converged,
            restart_index: fit.restart_index,
            restart_objectives: fit
                .restart_objectives
                .iter()
                .map(|o| o.map(json_number))
                .collect(),
            descent_violations: fit.descent_violations,
        }
    }
}

#[derive(Serialize)]
struct ConventionalReport {
    d: usize,
    basis: Vec<Vec<Json>>,
}

#[derive(Serialize)]
struct FitReport {
    format: &'static str,
    method: String,
    n: usize,
    p_l: usize,
    p_r: usize,
    slices: usize,
    inversion: String,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    folded: Option<FoldedReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    conventional: Option<ConventionalReport>,
    reduced_columns: usize,
    /// One row per observation, in input order.
    reduced: Vec<Vec<Json>>,
}

fn reduced_csv(samples: &SampleSet, rows: &[DVector<f64>]) -> String {
    let width = rows.first().map_or(0, |r| r.len());
    let mut out = String::from("id,y");
    for j in 1..=width {
        write!(out, ",z{j}").unwrap();
    }
    out.push('\n');
    for ((row, &id), &y) in rows.iter().zip(samples.ids()).zip(samples.ys()) {
        write!(out, "{id},{}", number(y)).unwrap();
        for v in row.iter() {
            write!(out, ",{}", number(*v)).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn fit(args: &FitArgs) -> Result<String, CliError> {
    let samples = read_dataset(&args.data)?;
    let config = args.solver.resolve()?;
    let estimator = config.method()?.estimator();
    let slices = default_slices(&samples, &config);
    let inversion = config.inversion()?;
    let (folded, conventional, rows) = match estimator {
        Estimator::Folded(method) => {
            let folding = config.folding()?;
            let fit = fit_folded(&samples, method, slices, &folding)?;
            let rows = samples
                .xs()
                .iter()
                .map(|x| fit.reduce(x).map(|z| vec(&z)))
                .collect::<foldkit::Result<Vec<_>>>()?;
            (Some(FoldedReport::new(&fit, &folding)), None, rows)
        }
        Estimator::Conventional(method) => {
            let d = config.conventional_d()?;
            let basis: SubspaceBasis = conventional_fit(&samples, method, slices, d, inversion)?;
            let rows = samples.xs().iter().map(|x| basis.matrix().tr_mul(&vec(x))).collect();
            let report = ConventionalReport {
                d: basis.dim(),
                basis: json_matrix(basis.matrix()),
            };
            (None, Some(report), rows)
        }
    };
    let report = FitReport {
        format: "foldkit-fit/1",
        method: estimator.name(),
        n: samples.len(),
        p_l: samples.p_l(),
        p_r: samples.p_r(),
        slices,
        inversion: describe(inversion),
        seed: config.seed.unwrap_or(0),
        folded,
        conventional,
        reduced_columns: rows.first().map_or(0, |r| r.len()),
        reduced: rows.iter().map(|r| json_numbers(r.iter().copied())).collect(),
    };
    let json = to_json(&report);
    let reduced_path = args
        .reduced
        .clone()
        .or_else(|| args.out.as_ref().map(|o| sidecar(o, ".reduced.csv")));
    if let Some(path) = &reduced_path {
        write_atomic(path, &reduced_csv(&samples, &rows))?;
    }
    match &args.out {
        Some(out) => {
            write_atomic(out, &json)?;
            Ok(format!("{} fit written to {}\n", estimator.name(), out.display()))
        }
        None => Ok(json),
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModelName {
    Example1,
    Example2,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub model: ModelName,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Mean shift of the `Y = 1` class.
    #[arg(long, default_value_t = DEFAULT_MU)]
    pub mu: f64,
    /// Dataset path; the true bases go to `<out>.truth.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct Truth {
    format: &'static str,
    model: &'static str,
    n: usize,
    p: usize,
    seed: u64,
    pi: Json,
    mu: Json,
    sigma2: Json,
    tau2: Json,
    alpha: Vec<Vec<Json>>,
    beta: Vec<Vec<Json>>,
}

pub fn simulate(args: &SimulateArgs) -> Result<String, CliError> {
    let variant = match args.model {
        ModelName::Example1 => Variant::Example1,
        ModelName::Example2 => Variant::Example2,
    };
    let mut spec = MixtureModelSpec::new(variant, args.p);
    spec.mu = args.mu;
    let mixture = gen_mixture(&spec, args.n, &mut seeded(args.seed))?;
    let truth = Truth {
        format: "foldkit-truth/1",
        model: variant.name(),
        n: args.n,
        p: args.p,
        seed: args.seed,
        pi: json_number(spec.pi),
        mu: json_number(spec.mu),
        sigma2: json_number(spec.sigma2),
        tau2: json_number(spec.tau2),
        alpha: json_matrix(mixture.left.matrix()),
        beta: json_matrix(mixture.right.matrix()),
    };
    write_atomic(&args.out, &render_dataset(&mixture.samples))?;
    let truth_path = sidecar(&args.out, ".truth.json");
    write_atomic(&truth_path, &to_json(&truth))?;
    Ok(format!(
        "wrote {} observations to {} and the true bases to {}\n",
        args.n,
        args.out.display(),
        truth_path.display()
    ))
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// 1: folded methods on the first mixture; 2: folded against unfolded
    /// methods on the second.
    #[arg(long)]
    pub table: u32,
    /// Replications per cell.
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// Subset of the table's estimators.
    #[arg(long, value_delimiter = ',', value_enum)]
    pub methods: Option<Vec<MethodName>>,
    #[arg(long, default_value_t = DEFAULT_MU)]
    pub mu: f64,
    /// Draws for the random-subspace benchmark distance.
    #[arg(long = "benchmark-reps", default_value_t = 20_000)]
    pub benchmark_reps: usize,
    #[arg(long, value_enum, default_value = "pinv")]
    pub inversion: InversionName,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Add wall-clock time to the JSON report (makes it non-reproducible).
    #[arg(long = "record-runtime")]
    pub record_runtime: bool,
}

#[derive(Serialize)]
struct BenchCellJson {
    method: String,
    p: usize,
    n: usize,
    mean: Json,
    se: Json,
    completed: usize,
    failures: usize,
    flagged: bool,
}

#[derive(Serialize)]
struct BenchmarkJson {
    p: usize,
    mean: Json,
    se: Json,
    reps: usize,
}

#[derive(Serialize)]
struct BenchJson {
    format: &'static str,
    table: u32,
    reps: usize,
    seed: u64,
    mu: Json,
    inversion: String,
    n_list: Vec<usize>,
    p_list: Vec<usize>,
    methods: Vec<String>,
    benchmarks: Vec<BenchmarkJson>,
    cells: Vec<BenchCellJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    runtime_seconds: Option<Json>,
}

fn bench_csv(report: &BenchReport) -> String {
    let mut out = String::from("p,method");
    for n in &report.n_list {
        write!(out, ",n={n}").unwrap();
    }
    out.push('\n');
    for &p in &report.p_list {
        for &est in &report.estimators {
            write!(out, "{p},{}", est.name()).unwrap();
            for &n in &report.n_list {
                let mean = report.cell(est, p, n).map_or(f64::NAN, |c| c.mean);
                write!(out, ",{}", number(mean)).unwrap();
            }
            out.push('\n');
        }
    }
    out
}

fn bench_summary(report: &BenchReport) -> String {
    let mut out = String::new();
    for &p in &report.p_list {
        writeln!(out, "Table {} (p = {p}, N = {})", report.table.id(), report.reps).unwrap();
        write!(out, "{:<12}", "method").unwrap();
        for n in &report.n_list {
            write!(out, "{:>9}", format!("n={n}")).unwrap();
        }
        out.push('\n');
        for &est in &report.estimators {
            write!(out, "{:<12}", est.name()).unwrap();
            for &n in &report.n_list {
                let c = report.cell(est, p, n).expect("every cell is run");
                let flag = if c.flagged { "*" } else { " " };
                write!(out, "{:>8.3}{flag}", c.mean).unwrap();
            }
            out.push('\n');
        }
        if let Some(b) = report.benchmark(p) {
            writeln!(out, "benchmark distance = {:.3} (p = {p}, {} draws)", b.mean, b.reps).unwrap();
        }
    }
    out
}

pub fn bench(args: &BenchArgs) -> Result<String, CliError> {
    let table = Table::from_id(args.table)?;
    let mut config = BenchConfig::new(table, args.reps, args.seed);
    if let Some(p) = &args.p {
        config.p_list = p.clone();
    }
    if let Some(n) = &args.n {
        config.n_list = n.clone();
    }
    if let Some(methods) = &args.methods {
        let allowed = table.estimators();
        let chosen: Vec<Estimator> = methods.iter().map(|m| m.estimator()).collect();
        if let Some(bad) = chosen.iter().find(|e| !allowed.contains(e)) {
            return Err(CliError::Input(format!("{} is not a column of table {}", bad.name(), args.table)));
        }
        config.estimators = allowed.into_iter().filter(|e| chosen.contains(e)).collect();
    }
    config.mu = args.mu;
    config.benchmark_reps = args.benchmark_reps;
    let inversion = RunConfig {
        inversion: Some(args.inversion),
        epsilon: args.epsilon,
        ..Default::default()
    }
    .inversion()?;
    config.folding = config.folding.clone().with_inversion(inversion);
    if let Some(r) = args.restarts {
        config.folding.restarts = r;
    }
    let started = Instant::now();
    let report = monte_carlo(&config)?;
    let elapsed = started.elapsed().as_secs_f64();

    let json = BenchJson {
        format: "foldkit-bench/1",
        table: table.id(),
        reps: report.reps,
        seed: report.seed,
        mu: json_number(report.mu),
        inversion: describe(inversion),
        n_list: report.n_list.clone(),
        p_list: report.p_list.clone(),
        methods: report.estimators.iter().map(|e| e.name()).collect(),
        benchmarks: report
            .benchmarks
            .iter()
            .map(|b| BenchmarkJson {
                p: b.p,
                mean: json_number(b.mean),
                se: json_number(b.se),
                reps: b.reps,
            })
            .collect(),
        cells: report
            .cells
            .iter()
            .map(|c| BenchCellJson {
                method: c.estimator.name(),
                p: c.p,
                n: c.n,
                mean: json_number(c.mean),
                se: json_number(c.se),
                completed: c.completed,
                failures: c.failures,
                flagged: c.flagged,
            })
            .collect(),
        runtime_seconds: args.record_runtime.then(|| json_number(elapsed)),
    };
    std::fs::create_dir_all(&args.out_dir).map_err(|e| CliError::io(&args.out_dir, e))?;
    let stem = format!("table{}", table.id());
    write_atomic(&args.out_dir.join(format!("{stem}.csv")), &bench_csv(&report))?;
    write_atomic(&args.out_dir.join(format!("{stem}.json")), &to_json(&json))?;
    Ok(bench_summary(&report))
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Dataset file with a categorical response.
    pub data: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Per-item predictions CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn classify(args: &ClassifyArgs) -> Result<String, CliError> {
    let samples = read_dataset(&args.data)?;
    if samples.kind() != ResponseKind::Categorical {
        return Err(CliError::Input(format!(
            "{}: classification needs response=cat",
            args.data.display()
        )));
    }
    let config = args.solver.resolve()?;
    let estimator = config.method()?.estimator();
    let (screen_l, screen_r) = config.screen()?;
    let folding = match estimator {
        Estimator::Folded(_) => config.folding()?,
        Estimator::Conventional(_) => FoldingConfig::new(1, 1).with_inversion(config.inversion()?),
    };
    let mut loocv = LoocvConfig::new(estimator, default_slices(&samples, &config), screen_l, screen_r, folding);
    if let Estimator::Conventional(_) = estimator {
        loocv.conventional_d = config.conventional_d()?;
    }
    loocv.qda_mode = config.qda_inversion()?;
    let report = loocv_classify(&samples, &loocv)?;
    if let Some(out) = &args.out {
        let mut csv = String::from("index,id,truth,predicted,correct\n");
        for p in &report.predictions {
            writeln!(
                csv,
                "{},{},{},{},{}",
                p.index,
                p.id,
                number(p.truth),
                number(p.predicted),
                p.truth == p.predicted
            )
            .unwrap();
        }
        write_atomic(out, &csv)?;
    }
    Ok(format!("{}/{}\n", report.correct, report.total))
}
