//! Run configuration. Precedence: command-line flag, then `OSGOOD_*`
//! environment variable (clap resolves those two), then the config file,
//! then the built-in default. The config file is a single TOML document and
//! unknown keys are rejected, so a typo cannot silently fall back to a
//! default.

use std::path::PathBuf;

use osgood_core::flow::StepControl;
use serde::Deserialize;

use crate::CliError;

#[derive(clap::Args, Debug, Clone)]
pub struct Overrides {
    /// Config file (TOML); unknown keys are rejected.
    #[arg(long, global = true, env = "OSGOOD_CONFIG")]
    pub config: Option<PathBuf>,
    /// Directory for CSV tables and the run manifest.
    #[arg(long, global = true, env = "OSGOOD_OUT")]
    pub out: Option<PathBuf>,
    /// Seed for every randomized choice in the run.
    #[arg(long, global = true, env = "OSGOOD_SEED")]
    pub seed: Option<u64>,
    /// Cap on worker threads for data-parallel kernels.
    #[arg(long, global = true, env = "OSGOOD_THREADS")]
    pub threads: Option<usize>,
    /// Tolerance handed to step controllers and refinement loops.
    #[arg(long, global = true, env = "OSGOOD_TOL")]
    pub tol: Option<f64>,
    /// Refinement levels for ladder-style verification.
    #[arg(long, global = true, env = "OSGOOD_REFINE")]
    pub refine: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    out: Option<PathBuf>,
    seed: Option<u64>,
    threads: Option<usize>,
    tol: Option<f64>,
    refine: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub out: PathBuf,
    pub seed: u64,
    pub threads: Option<usize>,
    /// None means "library defaults"; commands that need a scalar tolerance
    /// fall back to 1e-8.
    pub tol: Option<f64>,
    pub refine: usize,
}

impl Settings {
    pub fn scalar_tol(&self) -> f64 {
        self.tol.unwrap_or(1e-8)
    }

    /// Step controller derived from --tol; the library default when unset.
    pub fn step_control(&self) -> StepControl {
        let mut ctl = StepControl::default();
        if let Some(tol) = self.tol {
            ctl.rel_tol = tol;
            ctl.abs_tol = tol * 1e-3;
            ctl.merge_tol = 10.0 * (ctl.abs_tol + ctl.rel_tol);
        }
        ctl
    }
}

pub fn resolve(ov: &Overrides) -> Result<Settings, CliError> {
    let file = match &ov.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            toml::from_str::<FileConfig>(&text).map_err(|e| {
                CliError::usage(format!("config {} is invalid: {e}", path.display()))
            })?
        }
        None => FileConfig::default(),
    };

    let settings = Settings {
        out: ov
            .out
            .clone()
            .or(file.out)
            .unwrap_or_else(|| PathBuf::from("runs/run")),
        seed: ov.seed.or(file.seed).unwrap_or(0),
        threads: ov.threads.or(file.threads),
        tol: ov.tol.or(file.tol),
        refine: ov.refine.or(file.refine).unwrap_or(3),
    };

    if let Some(tol) = settings.tol {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(CliError::usage(format!(
                "tolerance must be a positive finite number, got {tol}"
            )));
        }
    }
    if settings.refine > 12 {
        return Err(CliError::usage(format!(
            "refine is capped at 12 levels (grids double per level), got {}",
            settings.refine
        )));
    }
    if let Some(n) = settings.threads {
        if n == 0 {
            return Err(CliError::usage("threads must be at least 1".to_string()));
        }
        // Installs the global pool before any parallel kernel runs; a second
        // call in-process (tests) keeps the first pool, which is fine.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(settings)
}
