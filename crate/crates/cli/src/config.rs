//! Run settings from a TOML file, overridden key by key by command-line flags.

use std::path::Path;

use clap::{Args, ValueEnum};
use foldkit::simbench::Estimator;
use foldkit::tensor_ops::DEFAULT_RANK_TOL;
use foldkit::{FoldingConfig, InversionMode, Method};
use serde::Deserialize;

use crate::error::{line_column, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Sir,
    Save,
    Dr,
    Csir,
    Csave,
    Cdr,
}

impl MethodName {
    pub fn estimator(self) -> Estimator {
        match self {
            MethodName::Sir => Estimator::Folded(Method::Sir),
            MethodName::Save => Estimator::Folded(Method::Save),
            MethodName::Dr => Estimator::Folded(Method::Dr),
            MethodName::Csir => Estimator::Conventional(Method::Sir),
            MethodName::Csave => Estimator::Conventional(Method::Save),
            MethodName::Cdr => Estimator::Conventional(Method::Dr),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum InversionName {
    Exact,
    Pinv,
    Ridge,
}

/// Settings accepted in a config file; unknown keys are rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub method: Option<MethodName>,
    pub slices: Option<usize>,
    pub ml: Option<usize>,
    pub mr: Option<usize>,
    pub d: Option<usize>,
    pub screen_l: Option<usize>,
    pub screen_r: Option<usize>,
    pub inversion: Option<InversionName>,
    pub epsilon: Option<f64>,
    pub rank_tol: Option<f64>,
    pub restarts: Option<usize>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub seed: Option<u64>,
    pub qda_inversion: Option<InversionName>,
    pub qda_epsilon: Option<f64>,
}

impl RunConfig {
    pub fn parse(text: &str, source_name: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = e
                .span()
                .map_or((1, 1), |span| line_column(text, span.start));
            CliError::Parse {
                source_name: source_name.to_string(),
                line,
                column,
                message: e.message().to_string(),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// `self` with every key set in `flags` replaced.
    pub fn overlay(self, flags: &SolverArgs) -> RunConfig {
        RunConfig {
            method: flags.method.or(self.method),
            slices: flags.slices.or(self.slices),
            ml: flags.ml.or(self.ml),
            mr: flags.mr.or(self.mr),
            d: flags.d.or(self.d),
            screen_l: flags.screen_l.or(self.screen_l),
            screen_r: flags.screen_r.or(self.screen_r),
            inversion: flags.inversion.or(self.inversion),
            epsilon: flags.epsilon.or(self.epsilon),
            rank_tol: flags.rank_tol.or(self.rank_tol),
            restarts: flags.restarts.or(self.restarts),
            tol: flags.tol.or(self.tol),
            max_iters: flags.max_iters.or(self.max_iters),
            seed: flags.seed.or(self.seed),
            qda_inversion: flags.qda_inversion.or(self.qda_inversion),
            qda_epsilon: flags.qda_epsilon.or(self.qda_epsilon),
        }
    }

    pub fn method(&self) -> Result<MethodName, CliError> {
        self.method.ok_or(CliError::MissingKey {
            key: "method",
            flag: "method",
        })
    }

    pub fn ml(&self) -> Result<usize, CliError> {
        self.ml.ok_or(CliError::MissingKey { key: "ml", flag: "ml" })
    }

    pub fn mr(&self) -> Result<usize, CliError> {
        self.mr.ok_or(CliError::MissingKey { key: "mr", flag: "mr" })
    }

    pub fn screen(&self) -> Result<(usize, usize), CliError> {
        let l = self.screen_l.ok_or(CliError::MissingKey {
            key: "screen_l",
            flag: "screen-l",
        })?;
        let r = self.screen_r.ok_or(CliError::MissingKey {
            key: "screen_r",
            flag: "screen-r",
        })?;
        Ok((l, r))
    }

    /// Directions kept by an unfolded method: `d`, else `ml·mr`.
    pub fn conventional_d(&self) -> Result<usize, CliError> {
        match (self.d, self.ml, self.mr) {
            (Some(d), _, _) => Ok(d),
            (None, Some(l), Some(r)) => Ok(l * r),
            _ => Err(CliError::MissingKey { key: "d", flag: "d" }),
        }
    }

    pub fn inversion(&self) -> Result<InversionMode, CliError> {
        mode(self.inversion, self.epsilon, self.rank_tol, ("epsilon", "epsilon"))
    }

    pub fn qda_inversion(&self) -> Result<InversionMode, CliError> {
        mode(self.qda_inversion, self.qda_epsilon, None, ("qda_epsilon", "qda-epsilon"))
    }

    /// Solver settings; `ml` and `mr` are required.
    pub fn folding(&self) -> Result<FoldingConfig, CliError> {
        let mut config = FoldingConfig::new(self.ml()?, self.mr()?).with_inversion(self.inversion()?);
        if let Some(r) = self.restarts {
            config.restarts = r;
        }
        if let Some(t) = self.tol {
            config.rel_tol = t;
        }
        if let Some(m) = self.max_iters {
            config.max_iters = m;
        }
        config.seed = self.seed.unwrap_or(0);
        Ok(config)
    }
}

fn mode(
    name: Option<InversionName>,
    epsilon: Option<f64>,
    rank_tol: Option<f64>,
    epsilon_key: (&'static str, &'static str),
) -> Result<InversionMode, CliError> {
    let mode = match name.unwrap_or(InversionName::Exact) {
        InversionName::Exact => InversionMode::Exact,
        InversionName::Pinv => InversionMode::Pseudo {
            rank_tol: rank_tol.unwrap_or(DEFAULT_RANK_TOL),
        },
        InversionName::Ridge => InversionMode::Ridge {
            epsilon: epsilon.ok_or(CliError::MissingKey {
                key: epsilon_key.0,
                flag: epsilon_key.1,
            })?,
        },
    };
    mode.validate()?;
    Ok(mode)
}

/// Flags shared by `fit` and `classify`; each overrides the config key of
/// the same name.
#[derive(Debug, Clone, Default, Args)]
pub struct SolverArgs {
    /// TOML file with run settings.
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    #[arg(long, value_enum)]
    pub method: Option<MethodName>,
    /// Number of slices; defaults to the number of classes for a
    /// categorical response and 5 otherwise.
    #[arg(long)]
    pub slices: Option<usize>,
    #[arg(long)]
    pub ml: Option<usize>,
    #[arg(long)]
    pub mr: Option<usize>,
    /// Directions kept by the unfolded methods.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long = "screen-l")]
    pub screen_l: Option<usize>,
    #[arg(long = "screen-r")]
    pub screen_r: Option<usize>,
    #[arg(long, value_enum)]
    pub inversion: Option<InversionName>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long = "rank-tol")]
    pub rank_tol: Option<f64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Relative objective decrease that stops a restart.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long = "max-iters")]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Inversion used for the QDA class covariances.
    #[arg(long = "qda-inversion", value_enum)]
    pub qda_inversion: Option<InversionName>,
    #[arg(long = "qda-epsilon")]
    pub qda_epsilon: Option<f64>,
}

impl SolverArgs {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let base = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        Ok(base.overlay(self))
    }
}
