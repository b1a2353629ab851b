//! Flat TOML scenario files and the bundled figure presets.
//!
//! Every key is optional; omitted keys take the default room, link and
//! optimizer values. Unknown keys are rejected so typos do not pass silently.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::PhyParams;
use crate::error::{Error, Result};
use crate::geometry::{Orientation, Vec3};
use crate::optimizer::{GridSpec, MmParams, SolverKind};
use crate::simulation::{ScenarioConfig, Scheme, StreamMode};

/// Which scenario dimension an experiment sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepVar {
    Users,
    Beams,
}

impl fmt::Display for SweepVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepVar::Users => "users",
            SweepVar::Beams => "beams",
        })
    }
}

impl FromStr for SweepVar {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "users" => Ok(SweepVar::Users),
            "beams" => Ok(SweepVar::Beams),
            other => Err(format!("unknown sweep variable `{other}` (expected users|beams)")),
        }
    }
}

/// Inclusive integer sweep `from..=to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sweep {
    pub var: SweepVar,
    pub from: usize,
    pub to: usize,
}

impl Sweep {
    pub fn values(&self) -> std::ops::RangeInclusive<usize> {
        self.from..=self.to
    }

    pub fn validate(&self) -> Result<()> {
        if self.from == 0 || self.from > self.to {
            return Err(Error::InvalidParameter {
                name: "sweep_range",
                reason: format!("need 1 <= from <= to, got {}..{}", self.from, self.to),
            });
        }
        Ok(())
    }

    /// `config` with the swept variable set to `value`.
    pub fn apply(&self, config: &ScenarioConfig, value: usize) -> ScenarioConfig {
        let mut c = config.clone();
        match self.var {
            SweepVar::Users => c.users = value,
            SweepVar::Beams => c.beams = value,
        }
        c
    }
}

/// Parses `a..b` (inclusive at both ends).
pub fn parse_range(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("range `{s}` must look like a..b"))?;
    let b = b.strip_prefix('=').unwrap_or(b);
    let a = a.trim().parse().map_err(|e| format!("range start `{a}`: {e}"))?;
    let b = b.trim().parse().map_err(|e| format!("range end `{b}`: {e}"))?;
    Ok((a, b))
}

/// On-disk layout of a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub room_length: f64,
    pub room_width: f64,
    pub room_height: f64,
    /// AP position; each coordinate defaults to the ceiling center.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ap_x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ap_y: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ap_z: Option<f64>,
    pub users: usize,
    pub beams: usize,
    pub user_height: f64,
    pub user_normal: [f64; 3],

    pub tx_power: f64,
    pub responsivity: f64,
    pub bandwidth: f64,
    pub noise_psd: f64,
    pub rx_area: f64,

    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_step: f64,
    pub beta_step: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub gamma_step: f64,
    pub default_gamma: f64,

    pub mm_lambda: f64,
    pub mm_q: f64,
    pub mm_epsilon: f64,
    pub mm_max_outer: usize,
    pub mm_max_inner: usize,
    pub mm_tol: f64,
    pub mm_inner_tol: f64,
    pub mm_lambda_stages: usize,
    pub mm_sparsity_target: f64,

    pub solver: SolverKind,
    pub schemes: Vec<Scheme>,
    pub stream_mode: StreamMode,
    pub ga_fbs_focus: bool,
    pub trials: usize,
    pub seed: u64,
    pub vuc_max_iters: usize,
    pub vuc_max_restarts: usize,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepVar>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_from: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_to: Option<usize>,
}

impl Default for ConfigFile {
    fn default() -> Self {
        let mut file = ConfigFile::from_scenario(&ScenarioConfig::default(), None);
        file.ap_x = None;
        file.ap_y = None;
        file.ap_z = None;
        file
    }
}

impl ConfigFile {
    pub fn from_scenario(c: &ScenarioConfig, sweep: Option<Sweep>) -> Self {
        let n = c.user_orientation.as_vec();
        Self {
            room_length: c.room.x,
            room_width: c.room.y,
            room_height: c.room.z,
            ap_x: Some(c.ap_position.x),
            ap_y: Some(c.ap_position.y),
            ap_z: Some(c.ap_position.z),
            users: c.users,
            beams: c.beams,
            user_height: c.user_height,
            user_normal: [n.x, n.y, n.z],
            tx_power: c.phy.tx_power,
            responsivity: c.phy.responsivity,
            bandwidth: c.phy.bandwidth,
            noise_psd: c.phy.noise_psd,
            rx_area: c.phy.rx_area,
            alpha_min: c.grid.alpha_min,
            alpha_max: c.grid.alpha_max,
            alpha_step: c.grid.alpha_step,
            beta_step: c.grid.beta_step,
            gamma_min: c.grid.gamma_min,
            gamma_max: c.grid.gamma_max,
            gamma_step: c.grid.gamma_step,
            default_gamma: c.default_gamma,
            mm_lambda: c.mm.lambda,
            mm_q: c.mm.q,
            mm_epsilon: c.mm.epsilon,
            mm_max_outer: c.mm.max_outer,
            mm_max_inner: c.mm.max_inner,
            mm_tol: c.mm.tol,
            mm_inner_tol: c.mm.inner_tol,
            mm_lambda_stages: c.mm.lambda_stages,
            mm_sparsity_target: c.mm.sparsity_target,
            solver: c.solver,
            schemes: c.schemes.clone(),
            stream_mode: c.stream,
            ga_fbs_focus: c.ga_fbs_focus,
            trials: c.trials,
            seed: c.seed,
            vuc_max_iters: c.vuc_max_iters,
            vuc_max_restarts: c.vuc_max_restarts,
            sweep: sweep.map(|s| s.var),
            sweep_from: sweep.map(|s| s.from),
            sweep_to: sweep.map(|s| s.to),
        }
    }

    /// Validated scenario described by this file.
    pub fn scenario(&self) -> Result<ScenarioConfig> {
        let room = Vec3::new(self.room_length, self.room_width, self.room_height);
        let [nx, ny, nz] = self.user_normal;
        let user_orientation = Orientation::new(Vec3::new(nx, ny, nz)).map_err(|_| Error::InvalidParameter {
            name: "user_normal",
            reason: "must be a nonzero finite vector".into(),
        })?;
        let config = ScenarioConfig {
            room,
            ap_position: Vec3::new(
                self.ap_x.unwrap_or(room.x / 2.0),
                self.ap_y.unwrap_or(room.y / 2.0),
                self.ap_z.unwrap_or(room.z),
            ),
            users: self.users,
            beams: self.beams,
            user_height: self.user_height,
            user_orientation,
            phy: PhyParams {
                tx_power: self.tx_power,
                responsivity: self.responsivity,
                bandwidth: self.bandwidth,
                noise_psd: self.noise_psd,
                rx_area: self.rx_area,
            },
            grid: GridSpec {
                alpha_min: self.alpha_min,
                alpha_max: self.alpha_max,
                alpha_step: self.alpha_step,
                beta_step: self.beta_step,
                gamma_min: self.gamma_min,
                gamma_max: self.gamma_max,
                gamma_step: self.gamma_step,
            },
            mm: MmParams {
                lambda: self.mm_lambda,
                q: self.mm_q,
                epsilon: self.mm_epsilon,
                max_outer: self.mm_max_outer,
                max_inner: self.mm_max_inner,
                tol: self.mm_tol,
                inner_tol: self.mm_inner_tol,
                lambda_stages: self.mm_lambda_stages,
                sparsity_target: self.mm_sparsity_target,
            },
            solver: self.solver,
            schemes: self.schemes.clone(),
            stream: self.stream_mode,
            default_gamma: self.default_gamma,
            ga_fbs_focus: self.ga_fbs_focus,
            trials: self.trials,
            seed: self.seed,
            vuc_max_iters: self.vuc_max_iters,
            vuc_max_restarts: self.vuc_max_restarts,
        };
        config.validate()?;
        Ok(config)
    }

    /// Sweep declared in the file, if any.
    pub fn sweep(&self) -> Result<Option<Sweep>> {
        match (self.sweep, self.sweep_from, self.sweep_to) {
            (None, None, None) => Ok(None),
            (Some(var), Some(from), Some(to)) => {
                let sweep = Sweep { var, from, to };
                sweep.validate()?;
                Ok(Some(sweep))
            }
            _ => Err(Error::InvalidParameter {
                name: "sweep",
                reason: "sweep, sweep_from and sweep_to must be given together".into(),
            }),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Parses scenario-file text.
pub fn parse_file_str(text: &str) -> Result<ConfigFile> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

/// Parses and validates scenario-file text.
pub fn parse_str(text: &str) -> Result<ScenarioConfig> {
    parse_file_str(text)?.scenario()
}

/// Reads and validates the scenario file at `path`.
pub fn parse_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_str(&text)
}

/// Serializes `config` so that [`parse_str`] reproduces it.
pub fn to_toml(config: &ScenarioConfig) -> Result<String> {
    ConfigFile::from_scenario(config, None).to_toml()
}

pub const PRESET_NAMES: [&str; 4] = ["fig3a", "fig3b", "fig3c", "fig4"];

const FIG3A: &str = r#"# one steerable beam, sum rate versus user count
beams = 1
schemes = ["none", "sbs", "sbsf", "ga_fbs"]
sweep = "users"
sweep_from = 1
sweep_to = 6
"#;

const FIG3B: &str = r#"# three beams at p/3 each, single- versus multi-stream
beams = 3
schemes = ["none", "sbs_single", "sbs_multi", "sbsf_single", "sbsf_multi"]
sweep = "users"
sweep_from = 1
sweep_to = 10
"#;

const FIG3C: &str = r#"# ten users, beam count swept
users = 10
schemes = ["none", "sbsf_single", "sbsf_multi"]
sweep = "beams"
sweep_from = 1
sweep_to = 10
"#;

const FIG4: &str = r#"# per-user rate distribution, three beams and six users
users = 6
beams = 3
schemes = ["none", "sbs_multi", "sbsf_multi"]
"#;

/// Scenario-file text of a bundled preset.
pub fn preset(name: &str) -> Option<&'static str> {
    match name {
        "fig3a" => Some(FIG3A),
        "fig3b" => Some(FIG3B),
        "fig3c" => Some(FIG3C),
        "fig4" => Some(FIG4),
        _ => None,
    }
}

/// Loads `source` as a file path, falling back to a preset name when no
/// such file exists.
pub fn load_source(source: &str) -> Result<ConfigFile> {
    let path = Path::new(source);
    if !path.exists() {
        if let Some(text) = preset(source) {
            return parse_file_str(text);
        }
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{source}: {e}")))?;
    parse_file_str(&text)
}
