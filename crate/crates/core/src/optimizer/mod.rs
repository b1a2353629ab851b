//! Single-beam multi-user steering: equal TDMA time shares plus a search
//! over the discretized (α, β, γ) grid for the beam maximizing the sum of
//! log rates.

pub mod exhaustive;
pub mod grid;
pub mod mm;
pub mod simplex;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{user_rate, BeamConfig, PhyParams, UserPose};
use crate::error::{Error, Result};
use crate::geometry::Vec3;

pub use exhaustive::{discrete_objective, log_rate, solve_exhaustive, LogRateTable, Solution};
pub use grid::{build_gain_grid, GainGrid, GridAxes, GridSpec};
pub use mm::{solve_mm, MmParams, MmSolution};
pub use simplex::project_simplex;

/// TDMA time shares, one per user, summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeAllocation(Vec<f64>);

impl TimeAllocation {
    pub fn shares(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// The log-fair time split: each of `users` gets `1/users`.
pub fn equal_time_allocation(users: usize) -> Result<TimeAllocation> {
    if users == 0 {
        return Err(Error::NoUsers);
    }
    Ok(TimeAllocation(vec![1.0 / users as f64; users]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    #[default]
    Exhaustive,
    Mm,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::Exhaustive => "exhaustive",
            SolverKind::Mm => "mm",
        })
    }
}

impl FromStr for SolverKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "exhaustive" => Ok(SolverKind::Exhaustive),
            "mm" => Ok(SolverKind::Mm),
            other => Err(format!("unknown solver `{other}` (expected exhaustive|mm)")),
        }
    }
}

/// Searches `grid` with the chosen solver.
pub fn solve_grid(grid: &GainGrid, phy: &PhyParams, solver: SolverKind, mm: &MmParams) -> Result<Solution> {
    match solver {
        SolverKind::Exhaustive => solve_exhaustive(grid, phy),
        SolverKind::Mm => solve_mm(grid, phy, mm).map(|out| out.solution),
    }
}

/// Outcome of steering one beam for a set of users.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleBeamPlan {
    pub beam: BeamConfig,
    pub objective: f64,
    pub time: TimeAllocation,
    /// Delivered rate `τ_k · R_k`, bit/s.
    pub rates: Vec<f64>,
}

/// Steers one beam for all `users`: equal time shares and the grid point
/// maximizing `Σ_k ln R_k`.
pub fn solve_single_beam(
    tx_pos: Vec3,
    users: &[UserPose],
    spec: &GridSpec,
    phy: &PhyParams,
    solver: SolverKind,
    mm: &MmParams,
) -> Result<SingleBeamPlan> {
    let time = equal_time_allocation(users.len())?;
    let grid = build_gain_grid(tx_pos, users, spec, phy.rx_area)?;
    let sol = solve_grid(&grid, phy, solver, mm)?;
    let rates = time
        .shares()
        .iter()
        .enumerate()
        .map(|(k, tau)| tau * user_rate(grid.gain(k, sol.index), phy))
        .collect();
    Ok(SingleBeamPlan {
        beam: sol.beam,
        objective: sol.objective,
        time,
        rates,
    })
}
