//! Room drops, transmission schemes and Monte-Carlo aggregation.

mod monte_carlo;
mod schemes;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{PhyParams, UserPose};
use crate::error::{Error, Result};
use crate::geometry::{Orientation, Vec3};
use crate::optimizer::{GridSpec, MmParams, SolverKind};

pub use monte_carlo::{monte_carlo, run_trial, trial_rng, AggregateResult, TrialOutcome};
pub use schemes::{
    evaluate_multibeam, run_ga_fbs, run_no_steering, run_sbs, run_sbsf, run_scheme, SchemeResult,
};

/// How multiple beams share the air.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StreamMode {
    /// Every beam carries the same waveform; all users share one TDMA frame.
    Single,
    /// Each beam carries its own stream; TDMA inside each cluster, other
    /// beams interfere.
    Multi,
}

impl fmt::Display for StreamMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StreamMode::Single => "single",
            StreamMode::Multi => "multi",
        })
    }
}

impl FromStr for StreamMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "single" => Ok(StreamMode::Single),
            "multi" => Ok(StreamMode::Multi),
            other => Err(format!("unknown stream mode `{other}` (expected single|multi)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    /// Fixed nadir beam with the default directivity.
    NoSteering,
    /// Steered beams, directivity pinned to the default.
    Sbs,
    /// Steered beams with optimized directivity.
    Sbsf,
    /// Genie-aided per-slot re-pointing; an upper bound.
    GaFbs,
}

/// A scheme plus, for the steered schemes, an explicit stream mode
/// (otherwise the scenario's default applies).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scheme {
    pub kind: SchemeKind,
    pub stream: Option<StreamMode>,
}

impl Scheme {
    pub const NO_STEERING: Scheme = Scheme::plain(SchemeKind::NoSteering);
    pub const SBS: Scheme = Scheme::plain(SchemeKind::Sbs);
    pub const SBSF: Scheme = Scheme::plain(SchemeKind::Sbsf);
    pub const GA_FBS: Scheme = Scheme::plain(SchemeKind::GaFbs);

    pub const fn plain(kind: SchemeKind) -> Self {
        Self { kind, stream: None }
    }

    pub const fn with_stream(kind: SchemeKind, stream: StreamMode) -> Self {
        Self {
            kind,
            stream: Some(stream),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let base = match self.kind {
            SchemeKind::NoSteering => "none",
            SchemeKind::Sbs => "sbs",
            SchemeKind::Sbsf => "sbsf",
            SchemeKind::GaFbs => "ga_fbs",
        };
        match self.stream {
            Some(stream) => write!(f, "{base}_{stream}"),
            None => f.write_str(base),
        }
    }
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let scheme = match s {
            "none" => Scheme::NO_STEERING,
            "sbs" => Scheme::SBS,
            "sbsf" => Scheme::SBSF,
            "ga_fbs" => Scheme::GA_FBS,
            "sbs_single" => Scheme::with_stream(SchemeKind::Sbs, StreamMode::Single),
            "sbs_multi" => Scheme::with_stream(SchemeKind::Sbs, StreamMode::Multi),
            "sbsf_single" => Scheme::with_stream(SchemeKind::Sbsf, StreamMode::Single),
            "sbsf_multi" => Scheme::with_stream(SchemeKind::Sbsf, StreamMode::Multi),
            other => {
                return Err(format!(
                    "unknown scheme `{other}` (expected none|sbs|sbsf|ga_fbs|sbs_single|sbs_multi|sbsf_single|sbsf_multi)"
                ))
            }
        };
        Ok(scheme)
    }
}

impl Serialize for Scheme {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Scheme {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Everything needed to simulate one room configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Room length, width, height (m).
    pub room: Vec3,
    pub ap_position: Vec3,
    /// Users per drop (K).
    pub users: usize,
    /// Steerable beams at the AP (N).
    pub beams: usize,
    pub user_height: f64,
    pub user_orientation: Orientation,
    /// Link constants; `tx_power` is the AP total, split evenly across beams.
    pub phy: PhyParams,
    pub grid: GridSpec,
    pub mm: MmParams,
    pub solver: SolverKind,
    pub schemes: Vec<Scheme>,
    pub stream: StreamMode,
    /// Directivity of the un-steered beam and of fixed-focus steering.
    pub default_gamma: f64,
    /// GA-FBS uses the grid's maximum directivity when set, else the default.
    pub ga_fbs_focus: bool,
    pub trials: usize,
    pub seed: u64,
    pub vuc_max_iters: usize,
    pub vuc_max_restarts: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let room = Vec3::new(8.0, 8.0, 4.0);
        Self {
            room,
            ap_position: Vec3::new(room.x / 2.0, room.y / 2.0, room.z),
            users: 1,
            beams: 1,
            user_height: 0.85,
            user_orientation: Orientation::UP,
            phy: PhyParams::default(),
            grid: GridSpec::default(),
            mm: MmParams::default(),
            solver: SolverKind::Exhaustive,
            schemes: vec![Scheme::NO_STEERING, Scheme::SBS, Scheme::SBSF, Scheme::GA_FBS],
            stream: StreamMode::Multi,
            default_gamma: 5.0,
            ga_fbs_focus: true,
            trials: 500,
            seed: 1,
            vuc_max_iters: 50,
            vuc_max_restarts: 5,
        }
    }
}

fn invalid(name: &'static str, reason: String) -> Error {
    Error::InvalidParameter { name, reason }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("room_length", self.room.x),
            ("room_width", self.room.y),
            ("room_height", self.room.z),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be > 0, got {v}")));
            }
        }
        let ap = self.ap_position;
        for (name, v, max) in [
            ("ap_x", ap.x, self.room.x),
            ("ap_y", ap.y, self.room.y),
            ("ap_z", ap.z, self.room.z),
        ] {
            if !(0.0..=max).contains(&v) {
                return Err(invalid(name, format!("AP must lie inside the room: {v} not in [0, {max}]")));
            }
        }
        if !(self.user_height >= 0.0 && self.user_height < self.room.z && self.user_height < ap.z) {
            return Err(invalid(
                "user_height",
                format!("must lie in [0, ceiling) and below the AP, got {}", self.user_height),
            ));
        }
        if self.users == 0 {
            return Err(invalid("users", "must be >= 1".into()));
        }
        if self.beams == 0 {
            return Err(invalid("beams", "must be >= 1".into()));
        }
        if self.trials == 0 {
            return Err(invalid("trials", "must be >= 1".into()));
        }
        if self.schemes.is_empty() {
            return Err(invalid("schemes", "must name at least one scheme".into()));
        }
        if !(self.default_gamma >= 1.0 && self.default_gamma.is_finite()) {
            return Err(invalid("default_gamma", format!("must be >= 1, got {}", self.default_gamma)));
        }
        if self.vuc_max_iters == 0 {
            return Err(invalid("vuc_max_iters", "must be >= 1".into()));
        }
        self.phy.validate()?;
        self.grid.validate()?;
        self.mm.validate()?;
        Ok(())
    }

    /// Grid used by fixed-focus steering.
    pub fn sbs_grid(&self) -> GridSpec {
        self.grid.with_fixed_gamma(self.default_gamma)
    }
}

/// Uniform user drop over the floor plan at the configured receiver height.
pub fn generate_users<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Vec<UserPose> {
    (0..config.users)
        .map(|_| {
            let x = rng.gen_range(0.0..config.room.x);
            let y = rng.gen_range(0.0..config.room.y);
            UserPose::new(Vec3::new(x, y, config.user_height), config.user_orientation)
        })
        .collect()
}
