//! Argument parsing and dispatch for the `tmodes` binary.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;

use crate::commands::{emit, run_analytic, run_figure, run_renewal, run_simulate, run_sweep};
use crate::config::{
    parse_config, parse_file, Command, FigureId, RunConfig, RunOptions, SweepParam, SweepScale,
    SweepSpec,
};
use crate::error::{AppError, AppResult};
use crate::verify::{run_all, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Default probe time for sweeps, in units of `1/g0`.
pub const DEFAULT_PROBE: f64 = 2.0;

#[derive(Debug, Parser)]
#[command(
    name = "tmodes",
    version,
    about = "Two bosonic modes coupled through a random-telegraph phase"
)]
pub struct Cli {
    /// What to compute.
    #[arg(value_enum)]
    pub command: Command,

    /// Coupling strength g0.
    #[arg(long, allow_hyphen_values = true)]
    pub g0: Option<String>,
    /// Mean dwell time of the phase noise.
    #[arg(long, allow_hyphen_values = true)]
    pub tau0: Option<String>,
    /// Initial occupation of mode a.
    #[arg(long, allow_hyphen_values = true)]
    pub na0: Option<String>,
    /// Initial occupation of mode b.
    #[arg(long, allow_hyphen_values = true)]
    pub nb0: Option<String>,
    /// Initial coherence of the unit-trace density matrix, `re` or `re,im`.
    #[arg(long = "rho12_0", alias = "rho12-0", allow_hyphen_values = true)]
    pub rho12_0: Option<String>,
    /// End of the time grid (default 20/g0).
    #[arg(long = "t_max", alias = "t-max", allow_hyphen_values = true)]
    pub t_max: Option<String>,
    /// Number of grid points including both ends.
    #[arg(long = "grid_points", alias = "grid-points", allow_hyphen_values = true)]
    pub grid_points: Option<String>,
    /// Number of Monte Carlo trajectories.
    #[arg(long, allow_hyphen_values = true)]
    pub ensemble: Option<String>,
    /// Base seed of the trajectory streams.
    #[arg(long, allow_hyphen_values = true)]
    pub seed: Option<String>,
    /// Order of the numerical Laplace inversion.
    #[arg(long, allow_hyphen_values = true)]
    pub order: Option<String>,
    /// Renewal solver step.
    #[arg(long, allow_hyphen_values = true)]
    pub h: Option<String>,

    /// `key = value` file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run verification at the reduced scale.
    #[arg(long)]
    pub quick: bool,
    /// Leave the timestamp line out of CSV headers.
    #[arg(long)]
    pub no_timestamp: bool,
    /// Worker threads for Monte Carlo ensembles (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Also write trajectory 0 of a simulation to this file.
    #[arg(long)]
    pub dump: Option<PathBuf>,

    /// Figure to reproduce.
    #[arg(long, value_enum)]
    pub figure: Option<FigureId>,
    /// Swept parameter.
    #[arg(long, value_enum, default_value = "g0tau0")]
    pub sweep_param: SweepParam,
    #[arg(long)]
    pub sweep_min: Option<f64>,
    #[arg(long)]
    pub sweep_max: Option<f64>,
    #[arg(long)]
    pub sweep_count: Option<usize>,
    #[arg(long, value_enum, default_value = "log")]
    pub sweep_scale: SweepScale,
    /// Probe times `T = g0·t` for sweeps, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub probe: Vec<f64>,
}

impl Cli {
    fn key_flags(&self) -> Vec<(String, String)> {
        [
            ("g0", &self.g0),
            ("tau0", &self.tau0),
            ("na0", &self.na0),
            ("nb0", &self.nb0),
            ("rho12_0", &self.rho12_0),
            ("t_max", &self.t_max),
            ("grid_points", &self.grid_points),
            ("ensemble", &self.ensemble),
            ("seed", &self.seed),
            ("order", &self.order),
            ("h", &self.h),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
        .collect()
    }

    fn sweep_spec(&self) -> AppResult<Option<SweepSpec>> {
        if self.command != Command::Sweep {
            return Ok(None);
        }
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| AppError::config(key, "required for sweep"))
        };
        Ok(Some(SweepSpec {
            param: self.sweep_param,
            min: need(self.sweep_min, "sweep-min")?,
            max: need(self.sweep_max, "sweep-max")?,
            count: self
                .sweep_count
                .ok_or_else(|| AppError::config("sweep-count", "required for sweep"))?,
            scale: self.sweep_scale,
            probes: if self.probe.is_empty() {
                vec![DEFAULT_PROBE]
            } else {
                self.probe.clone()
            },
        }))
    }

    /// Resolves the file, the flags and the defaults into one configuration.
    pub fn to_config(&self) -> AppResult<RunConfig> {
        let file = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
                parse_file(&text)?
            }
            None => Vec::new(),
        };
        let mut options = RunOptions::new(self.command);
        options.output = self.out.clone();
        options.figure = self.figure;
        options.sweep = self.sweep_spec()?;
        options.quick = self.quick;
        options.timestamp = !self.no_timestamp;
        options.workers = self.workers.unwrap_or_else(|| {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        });
        options.dump = self.dump.clone();
        if self.command == Command::Figure && self.figure.is_none() {
            return Err(AppError::config("figure", "required for the figure command"));
        }
        parse_config(&file, &self.key_flags(), options)
    }
}

/// Runs one configured command and returns the exit code.
pub fn execute(cfg: &RunConfig) -> AppResult<i32> {
    let series = match cfg.command {
        Command::Analytic => run_analytic(cfg)?,
        Command::Simulate => run_simulate(cfg)?,
        Command::Renewal => run_renewal(cfg)?,
        Command::Sweep => run_sweep(cfg)?,
        Command::Figure => {
            let id = cfg
                .figure
                .ok_or_else(|| AppError::config("figure", "required for the figure command"))?;
            run_figure(cfg, id)?
        }
        Command::Verify => {
            let report = run_all(&VerifyOptions::from_config(cfg), |c| println!("{c}"))?;
            let summary = report.render();
            println!("{}", summary.lines().last().unwrap_or_default());
            if let Some(path) = &cfg.output {
                std::fs::write(path, &summary).map_err(|e| AppError::io(path, e))?;
            }
            return Ok(if report.passed() { EXIT_OK } else { EXIT_VERIFY_FAILED });
        }
    };
    emit(&series, cfg.output.as_deref(), cfg.timestamp)?;
    Ok(EXIT_OK)
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match cli.to_config().and_then(|cfg| execute(&cfg)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("tmodes: {e}");
            EXIT_CONFIG
        }
    }
}
