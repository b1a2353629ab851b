//! Exact search of the discrete steering problem: the grid point maximizing
//! the sum of log rates over a set of users.

use serde::{Deserialize, Serialize};

use crate::channel::{user_rate, BeamConfig, PhyParams};
use crate::error::{Error, Result};
use crate::optimizer::grid::GainGrid;

/// A selected grid point and its sum-log-rate objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub index: usize,
    pub beam: BeamConfig,
    pub objective: f64,
}

/// `ln R(h)`; `-inf` for a dark link.
#[inline]
pub fn log_rate(h: f64, phy: &PhyParams) -> f64 {
    user_rate(h, phy).ln()
}

/// Sum of per-user log rates at one grid point, users summed in index order.
pub fn discrete_objective(grid: &GainGrid, phy: &PhyParams, index: usize) -> f64 {
    (0..grid.num_users())
        .map(|k| log_rate(grid.gain(k, index), phy))
        .fold(0.0, |acc, x| acc + x)
}

/// `ln R` of every user at every grid point, for repeated searches over
/// different user subsets (one per cluster).
#[derive(Debug, Clone)]
pub struct LogRateTable {
    rows: Vec<Vec<f64>>,
}

impl LogRateTable {
    pub fn new(grid: &GainGrid, phy: &PhyParams) -> Self {
        let rows = (0..grid.num_users())
            .map(|k| grid.user_gains(k).iter().map(|&h| log_rate(h, phy)).collect())
            .collect();
        Self { rows }
    }

    pub fn num_users(&self) -> usize {
        self.rows.len()
    }

    pub fn len(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Objective-maximizing grid index for `members` (summed in the given
    /// order). Ties go to the lowest index; points where any member is dark
    /// are never selected.
    pub fn best_for(&self, members: &[usize]) -> Result<(usize, f64)> {
        let Some((&first, rest)) = members.split_first() else {
            return Err(Error::NoUsers);
        };
        let mut acc = self.rows[first].clone();
        for &k in rest {
            for (a, &x) in acc.iter_mut().zip(&self.rows[k]) {
                *a += x;
            }
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, &obj) in acc.iter().enumerate() {
            if obj == f64::NEG_INFINITY {
                continue;
            }
            if best.map_or(true, |(_, b)| obj > b) {
                best = Some((i, obj));
            }
        }
        best.ok_or(Error::Infeasible)
    }
}

/// Exhaustive argmax of `Σ_k ln R_k` over every grid point.
pub fn solve_exhaustive(grid: &GainGrid, phy: &PhyParams) -> Result<Solution> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("empty grid".into()));
    }
    let table = LogRateTable::new(grid, phy);
    let members: Vec<usize> = (0..grid.num_users()).collect();
    let (index, objective) = table.best_for(&members)?;
    Ok(Solution {
        index,
        beam: grid.beam(index),
        objective,
    })
}
