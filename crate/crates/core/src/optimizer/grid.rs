//! Discretized steering grid and per-user gain vectors over it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{lambertian, BeamConfig, UserPose};
use crate::error::{Error, Result};
use crate::geometry::{cos_incidence, orientation_from_angles, SteeringAngles, Vec3};

/// Tolerance used when counting inclusive grid endpoints.
const ENDPOINT_SLACK: f64 = 1e-9;

/// Bounds and resolution of the (α, β, γ) search grid. Angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_step: f64,
    pub beta_step: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub gamma_step: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            alpha_min: 200.0,
            alpha_max: 340.0,
            alpha_step: 2.0,
            beta_step: 2.0,
            gamma_min: 1.0,
            gamma_max: 15.0,
            gamma_step: 1.0,
        }
    }
}

impl GridSpec {
    /// A grid holding the single configuration `(alpha, β = 0°, gamma)`.
    pub fn single_point(alpha: f64, gamma: f64) -> Self {
        Self {
            alpha_min: alpha,
            alpha_max: alpha,
            alpha_step: 1.0,
            beta_step: 360.0,
            gamma_min: gamma,
            gamma_max: gamma,
            gamma_step: 1.0,
        }
    }

    /// Same angular grid with γ pinned to one value (fixed-focus steering).
    pub fn with_fixed_gamma(&self, gamma: f64) -> Self {
        Self {
            gamma_min: gamma,
            gamma_max: gamma,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &'static str, ok: bool, reason: String| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter { name, reason })
            }
        };
        let all = [
            self.alpha_min,
            self.alpha_max,
            self.alpha_step,
            self.beta_step,
            self.gamma_min,
            self.gamma_max,
            self.gamma_step,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite grid parameter".into()));
        }
        check("alpha_step", self.alpha_step > 0.0, format!("must be > 0, got {}", self.alpha_step))?;
        check("beta_step", self.beta_step > 0.0, format!("must be > 0, got {}", self.beta_step))?;
        check("gamma_step", self.gamma_step > 0.0, format!("must be > 0, got {}", self.gamma_step))?;
        check(
            "alpha_max",
            self.alpha_max >= self.alpha_min,
            format!("alpha_min = {} > alpha_max = {}", self.alpha_min, self.alpha_max),
        )?;
        check("gamma_min", self.gamma_min >= 1.0, format!("must be >= 1, got {}", self.gamma_min))?;
        check(
            "gamma_max",
            self.gamma_max >= self.gamma_min,
            format!("gamma_min = {} > gamma_max = {}", self.gamma_min, self.gamma_max),
        )?;
        Ok(())
    }

    pub fn alpha_count(&self) -> usize {
        ((self.alpha_max - self.alpha_min) / self.alpha_step + ENDPOINT_SLACK).floor() as usize + 1
    }

    /// β covers the half-open turn `[0°, 360°)`.
    pub fn beta_count(&self) -> usize {
        ((360.0 / self.beta_step) - ENDPOINT_SLACK).ceil().max(1.0) as usize
    }

    pub fn gamma_count(&self) -> usize {
        ((self.gamma_max - self.gamma_min) / self.gamma_step + ENDPOINT_SLACK).floor() as usize + 1
    }

    pub fn len(&self) -> usize {
        self.alpha_count() * self.beta_count() * self.gamma_count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn axes(&self) -> GridAxes {
        GridAxes {
            alphas: (0..self.alpha_count())
                .map(|i| self.alpha_min + i as f64 * self.alpha_step)
                .collect(),
            betas: (0..self.beta_count()).map(|i| i as f64 * self.beta_step).collect(),
            gammas: (0..self.gamma_count())
                .map(|i| self.gamma_min + i as f64 * self.gamma_step)
                .collect(),
        }
    }
}

/// Materialized grid coordinates. Linear index is
/// `(alpha_idx * s_beta + beta_idx) * s_gamma + gamma_idx`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridAxes {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub gammas: Vec<f64>,
}

impl GridAxes {
    pub fn len(&self) -> usize {
        self.alphas.len() * self.betas.len() * self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, alpha_idx: usize, beta_idx: usize, gamma_idx: usize) -> usize {
        (alpha_idx * self.betas.len() + beta_idx) * self.gammas.len() + gamma_idx
    }

    pub fn coords(&self, index: usize) -> (usize, usize, usize) {
        let sg = self.gammas.len();
        let sb = self.betas.len();
        (index / (sb * sg), (index / sg) % sb, index % sg)
    }

    pub fn beam(&self, index: usize) -> BeamConfig {
        let (a, b, g) = self.coords(index);
        BeamConfig::new(self.alphas[a], self.betas[b], self.gammas[g])
    }

    /// Linear index of a beam lying on the grid (coordinates matched to 1e-9).
    pub fn index_of(&self, beam: &BeamConfig) -> Option<usize> {
        let find = |axis: &[f64], v: f64| axis.iter().position(|&x| (x - v).abs() <= 1e-9);
        Some(self.index(
            find(&self.alphas, beam.angles.alpha)?,
            find(&self.betas, beam.angles.beta)?,
            find(&self.gammas, beam.gamma)?,
        ))
    }
}

/// Per-user channel gain over every grid point.
#[derive(Debug, Clone)]
pub struct GainGrid {
    axes: GridAxes,
    gains: Vec<Vec<f64>>,
}

impl GainGrid {
    pub fn axes(&self) -> &GridAxes {
        &self.axes
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.axes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axes.is_empty()
    }

    pub fn num_users(&self) -> usize {
        self.gains.len()
    }

    pub fn user_gains(&self, user: usize) -> &[f64] {
        &self.gains[user]
    }

    pub fn gain(&self, user: usize, index: usize) -> f64 {
        self.gains[user][index]
    }

    pub fn beam(&self, index: usize) -> BeamConfig {
        self.axes.beam(index)
    }

    /// Builds a grid from raw gain vectors (one per user, all the same
    /// length as `axes`).
    pub fn from_raw(axes: GridAxes, gains: Vec<Vec<f64>>) -> Result<Self> {
        if gains.is_empty() {
            return Err(Error::NoUsers);
        }
        if gains.iter().any(|g| g.len() != axes.len()) {
            return Err(Error::InvalidGrid("gain vector length mismatch".into()));
        }
        if gains.iter().flatten().any(|&h| !(h >= 0.0) || !h.is_finite()) {
            return Err(Error::InvalidGrid("gains must be finite and non-negative".into()));
        }
        Ok(Self { axes, gains })
    }
}

/// Evaluates the line-of-sight gain of every user at every grid point.
pub fn build_gain_grid(tx_pos: Vec3, users: &[UserPose], spec: &GridSpec, rx_area: f64) -> Result<GainGrid> {
    if users.is_empty() {
        return Err(Error::NoUsers);
    }
    spec.validate()?;
    if spec.len() < users.len() {
        return Err(Error::InvalidGrid(format!(
            "grid has {} points for {} users",
            spec.len(),
            users.len()
        )));
    }
    let axes = spec.axes();
    let directions: Vec<_> = axes
        .alphas
        .iter()
        .flat_map(|&a| axes.betas.iter().map(move |&b| orientation_from_angles(SteeringAngles::new(a, b))))
        .collect();
    let sg = axes.gammas.len();

    let gains = users
        .par_iter()
        .map(|user| {
            let v = user.position - tx_pos;
            let dist = v.norm();
            if !(dist > 0.0) {
                return Err(Error::DegenerateGeometry);
            }
            let cos_theta = cos_incidence(&v, &user.orientation)?;
            let dist_sq = v.norm_squared();
            let mut out = vec![0.0; directions.len() * sg];
            for (dir_idx, dir) in directions.iter().enumerate() {
                // same arithmetic as geometry::cos_irradiance
                let cos_phi = (v.dot(dir.as_vec()) / dist).clamp(-1.0, 1.0);
                if cos_phi <= 0.0 || cos_theta <= 0.0 {
                    continue;
                }
                let row = &mut out[dir_idx * sg..(dir_idx + 1) * sg];
                for (slot, &gamma) in row.iter_mut().zip(&axes.gammas) {
                    *slot = lambertian(cos_phi, cos_theta, dist_sq, gamma, rx_area);
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(GainGrid { axes, gains })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::los_gain;
    use approx::assert_relative_eq;

    const AP: Vec3 = Vec3::new(4.0, 4.0, 4.0);

    #[test]
    fn default_grid_sizes() {
        let spec = GridSpec::default();
        assert_eq!(spec.alpha_count(), 71);
        assert_eq!(spec.beta_count(), 180);
        assert_eq!(spec.gamma_count(), 15);
        assert_eq!(spec.len(), 191_700);
        assert_eq!(spec.with_fixed_gamma(5.0).gamma_count(), 1);
    }

    #[test]
    fn single_point_grid() {
        let spec = GridSpec::single_point(270.0, 1.0);
        assert_eq!(spec.len(), 1);
        let user = UserPose::facing_up(Vec3::new(4.0, 4.0, 0.85));
        let grid = build_gain_grid(AP, &[user], &spec, 1e-4).unwrap();
        assert_relative_eq!(grid.gain(0, 0), 3.208e-6, max_relative = 1e-3);
    }

    #[test]
    fn index_round_trip() {
        let spec = GridSpec {
            alpha_step: 10.0,
            beta_step: 30.0,
            gamma_step: 2.0,
            ..GridSpec::default()
        };
        let axes = spec.axes();
        for i in 0..axes.len() {
            assert_eq!(axes.index_of(&axes.beam(i)), Some(i));
            let (a, b, g) = axes.coords(i);
            assert_eq!(axes.index(a, b, g), i);
        }
    }

    #[test]
    fn grid_entries_match_los_gain() {
        let spec = GridSpec {
            alpha_step: 7.0,
            beta_step: 15.0,
            gamma_step: 3.5,
            ..GridSpec::default()
        };
        let users = [
            UserPose::facing_up(Vec3::new(1.2, 6.5, 0.85)),
            UserPose::facing_up(Vec3::new(7.1, 0.4, 0.85)),
        ];
        let grid = build_gain_grid(AP, &users, &spec, 1e-4).unwrap();
        for (k, user) in users.iter().enumerate() {
            for i in 0..grid.len() {
                let h = los_gain(AP, &grid.beam(i), user, 1e-4).unwrap();
                assert_eq!(grid.gain(k, i), h);
            }
        }
    }

    #[test]
    fn identical_users_identical_vectors() {
        let spec = GridSpec {
            alpha_step: 5.0,
            beta_step: 10.0,
            ..GridSpec::default()
        };
        let u = UserPose::facing_up(Vec3::new(2.5, 3.0, 0.85));
        let grid = build_gain_grid(AP, &[u, u], &spec, 1e-4).unwrap();
        assert_eq!(grid.user_gains(0), grid.user_gains(1));
    }

    #[test]
    fn rejects_bad_specs() {
        let user = UserPose::facing_up(Vec3::new(2.5, 3.0, 0.85));
        let bad = GridSpec {
            gamma_max: 0.5,
            ..GridSpec::default()
        };
        assert!(build_gain_grid(AP, &[user], &bad, 1e-4).is_err());
        let bad = GridSpec {
            beta_step: 0.0,
            ..GridSpec::default()
        };
        assert!(build_gain_grid(AP, &[user], &bad, 1e-4).is_err());
        assert_eq!(build_gain_grid(AP, &[], &GridSpec::default(), 1e-4).unwrap_err(), Error::NoUsers);
        let tiny = GridSpec::single_point(270.0, 1.0);
        assert!(build_gain_grid(AP, &[user, user], &tiny, 1e-4).is_err());
    }

    #[test]
    fn colocated_user_propagates() {
        let user = UserPose::facing_up(AP);
        assert_eq!(
            build_gain_grid(AP, &[user], &GridSpec::default(), 1e-4).unwrap_err(),
            Error::DegenerateGeometry
        );
    }
}
