//! Lambertian line-of-sight channel gain and single-link achievable rate.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    cos_incidence, cos_irradiance, orientation_from_angles, Orientation, SteeringAngles, Vec3,
};

/// Physical-layer constants of the optical link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhyParams {
    /// Optical transmit power, W.
    pub tx_power: f64,
    /// Photodiode responsivity, A/W.
    pub responsivity: f64,
    /// Modulation bandwidth, Hz.
    pub bandwidth: f64,
    /// AWGN spectral density, A²/Hz.
    pub noise_psd: f64,
    /// Photodiode area, m².
    pub rx_area: f64,
}

impl Default for PhyParams {
    fn default() -> Self {
        Self {
            tx_power: 1.0,
            responsivity: 1.0,
            bandwidth: 20e6,
            noise_psd: 2.5e-20,
            rx_area: 1e-4,
        }
    }
}

impl PhyParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("tx_power", self.tx_power),
            ("responsivity", self.responsivity),
            ("bandwidth", self.bandwidth),
            ("noise_psd", self.noise_psd),
            ("rx_area", self.rx_area),
        ];
        for (name, value) in fields {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be finite and > 0, got {value}"),
                });
            }
        }
        Ok(())
    }

    /// Same link with the transmit power split across `beams` emitters.
    pub fn per_beam(&self, beams: usize) -> PhyParams {
        PhyParams {
            tx_power: self.tx_power / beams as f64,
            ..*self
        }
    }

    /// Noise power `N₀·B` in A².
    #[inline]
    pub fn noise_power(&self) -> f64 {
        self.noise_psd * self.bandwidth
    }

    /// Electrical signal power `(r·p·h)²` received through gain `h`.
    #[inline]
    pub fn signal_power(&self, h: f64) -> f64 {
        let i = self.responsivity * self.tx_power * h;
        i * i
    }

    /// Shannon rate in bit/s for a given SINR.
    #[inline]
    pub fn rate_from_sinr(&self, sinr: f64) -> f64 {
        self.bandwidth * sinr.ln_1p() / LN_2
    }
}

/// Steering angles plus Lambertian directivity index of one beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamConfig {
    pub angles: SteeringAngles,
    pub gamma: f64,
}

impl BeamConfig {
    pub const fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self {
            angles: SteeringAngles::new(alpha, beta),
            gamma,
        }
    }

    pub fn orientation(&self) -> Orientation {
        orientation_from_angles(self.angles)
    }
}

/// Position and receiver normal of one user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserPose {
    pub position: Vec3,
    pub orientation: Orientation,
}

impl UserPose {
    pub fn new(position: Vec3, orientation: Orientation) -> Self {
        Self {
            position,
            orientation,
        }
    }

    /// Receiver at `position` facing the ceiling.
    pub fn facing_up(position: Vec3) -> Self {
        Self::new(position, Orientation::UP)
    }
}

/// Angle-form Lambertian gain from precomputed link geometry. Every gain in
/// the crate is routed through here so that identical geometry always
/// yields bit-identical gains.
#[inline]
pub(crate) fn lambertian(cos_phi: f64, cos_theta: f64, dist_sq: f64, gamma: f64, area: f64) -> f64 {
    if cos_phi <= 0.0 || cos_theta <= 0.0 {
        return 0.0;
    }
    (gamma + 1.0) / (2.0 * PI) * area * cos_phi.powf(gamma) * cos_theta / dist_sq
}

/// Line-of-sight gain `h` from a steered beam at `tx_pos` to `user`.
///
/// Returns exactly 0 when the user is behind the beam or the receiver faces
/// away from the AP.
pub fn los_gain(tx_pos: Vec3, beam: &BeamConfig, user: &UserPose, rx_area: f64) -> Result<f64> {
    let v = user.position - tx_pos;
    let cos_phi = cos_irradiance(&v, &beam.orientation())?;
    let cos_theta = cos_incidence(&v, &user.orientation)?;
    Ok(lambertian(cos_phi, cos_theta, v.norm_squared(), beam.gamma, rx_area))
}

/// Gain of a beam aimed exactly at the user (irradiance angle zero).
pub fn boresight_gain(tx_pos: Vec3, gamma: f64, user: &UserPose, rx_area: f64) -> Result<f64> {
    let v = user.position - tx_pos;
    let cos_theta = cos_incidence(&v, &user.orientation)?;
    Ok(lambertian(1.0, cos_theta, v.norm_squared(), gamma, rx_area))
}

/// The same gain written directly in vector components:
/// `(γ+1)/2π · A · (v·n_tx)^γ · (−v·n_rx) / (|v|²)^((γ+3)/2)`.
///
/// Kept as an independent evaluation route for cross-checking [`los_gain`].
pub fn los_gain_expanded(
    tx_pos: Vec3,
    beam: &BeamConfig,
    user: &UserPose,
    rx_area: f64,
) -> Result<f64> {
    let v = user.position - tx_pos;
    let (vx, vy, vz) = (v.x, v.y, v.z);
    let norm_sq = vx * vx + vy * vy + vz * vz;
    if !(norm_sq > 0.0) {
        return Err(Error::DegenerateGeometry);
    }
    let (sa, ca) = crate::geometry::sin_cos_deg(beam.angles.alpha);
    let (sb, cb) = crate::geometry::sin_cos_deg(beam.angles.beta);
    let tx_proj = vx * cb * ca + vy * sb * ca + vz * sa;
    let n = user.orientation.as_vec();
    let rx_proj = -(vx * n.x + vy * n.y + vz * n.z);
    if tx_proj <= 0.0 || rx_proj <= 0.0 {
        return Ok(0.0);
    }
    let gamma = beam.gamma;
    Ok((gamma + 1.0) / (2.0 * PI) * rx_area * tx_proj.powf(gamma) * rx_proj
        / norm_sq.powf((gamma + 3.0) / 2.0))
}

/// Achievable rate `B·log₂(1 + (r·p·h)²/(N₀·B))` in bit/s.
pub fn user_rate(h: f64, phy: &PhyParams) -> f64 {
    phy.rate_from_sinr(phy.signal_power(h) / phy.noise_power())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const AP: Vec3 = Vec3::new(4.0, 4.0, 4.0);

    fn below() -> UserPose {
        UserPose::facing_up(Vec3::new(4.0, 4.0, 0.85))
    }

    #[test]
    fn gain_below_ap_gamma_one() {
        let h = los_gain(AP, &BeamConfig::new(270.0, 0.0, 1.0), &below(), 1e-4).unwrap();
        // 2/(2π) · 1e-4 / 3.15²
        let expected = 2.0 / (2.0 * PI) * 1e-4 / (3.15 * 3.15);
        assert_relative_eq!(h, expected, max_relative = 1e-12);
        assert_relative_eq!(h, 3.208e-6, max_relative = 1e-3);
    }

    #[test]
    fn gain_below_ap_gamma_fifteen() {
        let h = los_gain(AP, &BeamConfig::new(270.0, 0.0, 15.0), &below(), 1e-4).unwrap();
        assert_relative_eq!(h, 2.566e-5, max_relative = 1e-3);
    }

    #[test]
    fn user_behind_beam_is_dark() {
        // beam pointing toward -x, user on the +x side below the horizon
        let beam = BeamConfig::new(200.0, 0.0, 7.3);
        let user = UserPose::facing_up(Vec3::new(7.5, 4.0, 3.9));
        assert_eq!(los_gain(AP, &beam, &user, 1e-4).unwrap(), 0.0);
    }

    #[test]
    fn receiver_facing_away_is_dark() {
        let user = UserPose::new(Vec3::new(4.0, 4.0, 0.85), Orientation::DOWN);
        assert_eq!(los_gain(AP, &BeamConfig::new(270.0, 0.0, 5.0), &user, 1e-4).unwrap(), 0.0);
    }

    #[test]
    fn colocated_user_errors() {
        let user = UserPose::facing_up(AP);
        assert_eq!(
            los_gain(AP, &BeamConfig::new(270.0, 0.0, 5.0), &user, 1e-4),
            Err(Error::DegenerateGeometry)
        );
        assert_eq!(
            los_gain_expanded(AP, &BeamConfig::new(270.0, 0.0, 5.0), &user, 1e-4),
            Err(Error::DegenerateGeometry)
        );
    }

    #[test]
    fn rate_examples() {
        let phy = PhyParams::default();
        assert_eq!(user_rate(0.0, &phy), 0.0);
        let h = 2.566e-5;
        let snr = phy.signal_power(h) / phy.noise_power();
        assert_relative_eq!(snr, 1316.9, max_relative = 1e-4);
        assert_relative_eq!(user_rate(h, &phy), 2.073e8, max_relative = 1e-3);
        assert_relative_eq!(user_rate(h, &phy), 2e7 * (1.0 + snr).log2(), max_relative = 1e-12);
    }

    #[test]
    fn doubling_power_quadruples_snr() {
        let phy = PhyParams::default();
        let doubled = PhyParams {
            tx_power: 2.0,
            ..phy
        };
        let h = 1.7e-6;
        assert_relative_eq!(doubled.signal_power(h), 4.0 * phy.signal_power(h), max_relative = 1e-15);
    }

    #[test]
    fn boresight_matches_los_gain_below_ap() {
        let beam = BeamConfig::new(270.0, 0.0, 15.0);
        let a = los_gain(AP, &beam, &below(), 1e-4).unwrap();
        let b = boresight_gain(AP, 15.0, &below(), 1e-4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn phy_validation_names_field() {
        let bad = PhyParams {
            bandwidth: 0.0,
            ..PhyParams::default()
        };
        match bad.validate() {
            Err(Error::InvalidParameter { name, .. }) => assert_eq!(name, "bandwidth"),
            other => panic!("unexpected {other:?}"),
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn downward_ray() -> impl Strategy<Value = Vec3> {
            (-1.0..1.0f64, -1.0..1.0f64, -1.0..-0.2f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
        }

        proptest! {
            #[test]
            fn gain_decreases_along_a_ray(
                dir in downward_ray(),
                t in 0.5..3.0f64,
                stretch in 1.01..3.0f64,
                alpha in 200.0..340.0f64,
                beta in 0.0..360.0f64,
                gamma in 1.0..15.0f64,
            ) {
                let beam = BeamConfig::new(alpha, beta, gamma);
                let near = UserPose::facing_up(AP + dir * t);
                let far = UserPose::facing_up(AP + dir * (t * stretch));
                let h_near = los_gain(AP, &beam, &near, 1e-4).unwrap();
                let h_far = los_gain(AP, &beam, &far, 1e-4).unwrap();
                prop_assert!(h_far <= h_near);
                if h_near > 0.0 {
                    prop_assert!(h_far < h_near);
                }
            }

            #[test]
            fn on_axis_gain_grows_with_gamma(
                x in 0.0..8.0f64,
                y in 0.0..8.0f64,
                gamma in 1.0..14.0f64,
                dg in 0.01..1.0f64,
            ) {
                let user = UserPose::facing_up(Vec3::new(x, y, 0.85));
                let lo = boresight_gain(AP, gamma, &user, 1e-4).unwrap();
                let hi = boresight_gain(AP, gamma + dg, &user, 1e-4).unwrap();
                prop_assert!(hi > lo);
            }

            #[test]
            fn off_axis_gain_peaks_at_finite_gamma(
                x in 0.0..8.0f64,
                y in 0.0..8.0f64,
                alpha in 250.0..290.0f64,
                beta in 0.0..360.0f64,
            ) {
                let user = UserPose::facing_up(Vec3::new(x, y, 0.85));
                let beam = BeamConfig::new(alpha, beta, 1.0);
                let cos_phi = cos_irradiance(&(user.position - AP), &beam.orientation()).unwrap();
                prop_assume!(cos_phi > 0.0 && cos_phi < 1.0);
                // (γ+1)·cosᵞφ peaks at γ* = -1 - 1/ln(cos φ)
                let peak = -1.0 - 1.0 / cos_phi.ln();
                let gammas: Vec<f64> = (0..=140).map(|i| 1.0 + 0.1 * i as f64).collect();
                let gains: Vec<f64> = gammas
                    .iter()
                    .map(|&g| los_gain(AP, &BeamConfig { gamma: g, ..beam }, &user, 1e-4).unwrap())
                    .collect();
                for (w, g) in gains.windows(2).zip(&gammas) {
                    if *g >= peak {
                        prop_assert!(w[1] < w[0], "γ={g} past γ*={peak}");
                    } else if g + 0.1 <= peak {
                        prop_assert!(w[1] > w[0], "γ={g} before γ*={peak}");
                    }
                }
            }

            #[test]
            fn rate_is_monotone(a in 0.0..1e-3f64, b in 0.0..1e-3f64) {
                let phy = PhyParams::default();
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                prop_assert!(user_rate(lo, &phy) <= user_rate(hi, &phy));
            }
        }
    }
}
