//! Sweeps a scenario over users or beams and writes CSV tables.
//!
//! Output layout under the chosen directory:
//!
//! * `{scheme}.csv`: `sweep_value,mean_sum_rate_bps,std_sum_rate_bps,trials,seed`,
//!   one row per sweep point. `trials` counts the feasible trials behind the
//!   mean; `sweep_value` is the user count when nothing is swept.
//! * `cdf/{scheme}_{var}{value}.csv`: `rate_db,cumulative_probability`, the
//!   empirical CDF of per-user delivered rates in dB.
//! * `manifest.toml`: the resolved scenario, sweep and per-point trial
//!   counts; feeding its `[config]` table back in reproduces every file.
//!
//! Floats are written with Rust's shortest round-trip formatting.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{load_source, ConfigFile, Sweep, SweepVar};
use crate::error::{Error, Result};
use crate::optimizer::SolverKind;
use crate::simulation::{monte_carlo, AggregateResult, ScenarioConfig, Scheme};

pub const SUMMARY_HEADER: &str = "sweep_value,mean_sum_rate_bps,std_sum_rate_bps,trials,seed";
pub const CDF_HEADER: &str = "rate_db,cumulative_probability";

/// One command-line run: a scenario source plus overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    /// Scenario file path or preset name.
    pub source: String,
    /// Overrides the file's sweep.
    pub sweep: Option<Sweep>,
    pub schemes: Option<Vec<Scheme>>,
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub solver: Option<SolverKind>,
    pub verbosity: u8,
}

impl ExperimentSpec {
    pub fn new(source: impl Into<String>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            source: source.into(),
            sweep: None,
            schemes: None,
            out_dir: out_dir.into(),
            seed: None,
            trials: None,
            solver: None,
            verbosity: 0,
        }
    }
}

/// Failure of [`run_experiment`], split by the exit code it maps to.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExperimentError {
    #[error("{0}")]
    Config(Error),
    #[error("{0}")]
    Runtime(Error),
}

impl ExperimentError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 1,
            ExperimentError::Runtime(_) => 2,
        }
    }
}

/// Scenario and sweep after applying every override.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedExperiment {
    pub config: ScenarioConfig,
    pub sweep: Option<Sweep>,
}

impl ResolvedExperiment {
    /// `(sweep value, scenario)` for every point.
    pub fn points(&self) -> Vec<(usize, ScenarioConfig)> {
        match self.sweep {
            Some(sweep) => sweep.values().map(|v| (v, sweep.apply(&self.config, v))).collect(),
            None => vec![(self.config.users, self.config.clone())],
        }
    }

    fn var_name(&self) -> SweepVar {
        self.sweep.map_or(SweepVar::Users, |s| s.var)
    }
}

pub fn resolve(spec: &ExperimentSpec) -> Result<ResolvedExperiment> {
    let file = load_source(&spec.source)?;
    let mut sweep = file.sweep()?;
    if let Some(s) = spec.sweep {
        s.validate()?;
        sweep = Some(s);
    }
    let mut config = file.scenario()?;
    if let Some(schemes) = &spec.schemes {
        config.schemes = schemes.clone();
    }
    if let Some(seed) = spec.seed {
        config.seed = seed;
    }
    if let Some(trials) = spec.trials {
        config.trials = trials;
    }
    if let Some(solver) = spec.solver {
        config.solver = solver;
    }
    config.validate()?;
    Ok(ResolvedExperiment { config, sweep })
}

/// Aggregates of one sweep point, in scheme order.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub sweep_value: usize,
    pub aggregates: Vec<AggregateResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub resolved: ResolvedExperiment,
    pub points: Vec<PointResult>,
    pub files: Vec<PathBuf>,
}

/// Runs every sweep point and writes the output files.
pub fn run_experiment(spec: &ExperimentSpec) -> std::result::Result<ExperimentReport, ExperimentError> {
    let resolved = resolve(spec).map_err(ExperimentError::Config)?;
    let mut points = Vec::new();
    for (value, config) in resolved.points() {
        log::info!("{} = {value}: {} trials", resolved.var_name(), config.trials);
        let aggregates = monte_carlo(&config).map_err(ExperimentError::Runtime)?;
        points.push(PointResult {
            sweep_value: value,
            aggregates,
        });
    }
    let files = write_outputs(&spec.out_dir, &resolved, &points).map_err(ExperimentError::Runtime)?;
    Ok(ExperimentReport {
        resolved,
        points,
        files,
    })
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn write_file(path: PathBuf, contents: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
    files.push(path);
    Ok(())
}

pub fn summary_csv(points: &[PointResult], scheme_index: usize) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for p in points {
        let a = &p.aggregates[scheme_index];
        writeln!(
            out,
            "{},{},{},{},{}",
            p.sweep_value,
            a.mean_sum_rate,
            a.std_sum_rate,
            a.feasible(),
            a.seed
        )
        .unwrap();
    }
    out
}

pub fn cdf_csv(aggregate: &AggregateResult) -> String {
    let mut out = String::from(CDF_HEADER);
    out.push('\n');
    for (x, p) in aggregate.rate_cdf_db() {
        writeln!(out, "{x},{p}").unwrap();
    }
    out
}

#[derive(Serialize)]
struct Manifest<'a> {
    generator: String,
    sweep_var: String,
    sweep_values: Vec<usize>,
    config: ConfigFile,
    points: Vec<ManifestPoint<'a>>,
}

#[derive(Serialize)]
struct ManifestPoint<'a> {
    sweep_value: usize,
    scheme: &'a str,
    trials: usize,
    infeasible: usize,
    seed: u64,
}

pub fn manifest_toml(resolved: &ResolvedExperiment, points: &[PointResult]) -> Result<String> {
    let manifest = Manifest {
        generator: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
        sweep_var: resolved.var_name().to_string(),
        sweep_values: points.iter().map(|p| p.sweep_value).collect(),
        config: ConfigFile::from_scenario(&resolved.config, resolved.sweep),
        points: points
            .iter()
            .flat_map(|p| {
                p.aggregates.iter().map(move |a| ManifestPoint {
                    sweep_value: p.sweep_value,
                    scheme: &a.scheme,
                    trials: a.trials,
                    infeasible: a.infeasible,
                    seed: a.seed,
                })
            })
            .collect(),
    };
    toml::to_string(&manifest).map_err(|e| Error::Config(e.to_string()))
}

fn write_outputs(dir: &Path, resolved: &ResolvedExperiment, points: &[PointResult]) -> Result<Vec<PathBuf>> {
    let cdf_dir = dir.join("cdf");
    fs::create_dir_all(&cdf_dir).map_err(|e| io_err(&cdf_dir, e))?;
    let mut files = Vec::new();
    let var = resolved.var_name();
    for (s, scheme) in resolved.config.schemes.iter().enumerate() {
        write_file(dir.join(format!("{scheme}.csv")), &summary_csv(points, s), &mut files)?;
        for p in points {
            let name = format!("{scheme}_{var}{}.csv", p.sweep_value);
            write_file(cdf_dir.join(name), &cdf_csv(&p.aggregates[s]), &mut files)?;
        }
    }
    write_file(dir.join("manifest.toml"), &manifest_toml(resolved, points)?, &mut files)?;
    Ok(files)
}
