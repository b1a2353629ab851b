//! Vector math and the angle computations behind the line-of-sight channel.
//!
//! Angles cross the public API in degrees. Internally they are reduced to
//! the first octant using exact symmetries before any trigonometry, so that
//! multiples of 90° map to exact 0/±1 and mirror-image steering directions
//! produce bit-identical orientation vectors.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point or displacement in room coordinates (meters).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn dot(&self, other: &Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    #[inline]
    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, rhs: f64) -> Vec3 {
        Vec3::new(self.x * rhs, self.y * rhs, self.z * rhs)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// A unit direction vector (transmitter boresight or receiver normal).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec3", into = "Vec3")]
pub struct Orientation(Vec3);

impl Orientation {
    pub const UP: Orientation = Orientation(Vec3::new(0.0, 0.0, 1.0));
    pub const DOWN: Orientation = Orientation(Vec3::new(0.0, 0.0, -1.0));

    /// Normalizes `v` to unit length.
    pub fn new(v: Vec3) -> Result<Self> {
        let n = v.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::ZeroOrientation);
        }
        Ok(Self(v * (1.0 / n)))
    }

    pub fn as_vec(&self) -> &Vec3 {
        &self.0
    }
}

impl TryFrom<Vec3> for Orientation {
    type Error = Error;
    fn try_from(v: Vec3) -> Result<Self> {
        Orientation::new(v)
    }
}

impl From<Orientation> for Vec3 {
    fn from(o: Orientation) -> Vec3 {
        o.0
    }
}

/// Beam steering angles in degrees: `alpha` is elevation, `beta` azimuth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteeringAngles {
    pub alpha: f64,
    pub beta: f64,
}

impl SteeringAngles {
    pub const fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta }
    }

    /// Straight down: the un-steered ceiling fixture.
    pub const NADIR: SteeringAngles = SteeringAngles::new(270.0, 0.0);
}

/// `(sin, cos)` of an angle in degrees.
///
/// The angle is folded into `[0°, 45°]` with exact arithmetic whenever the
/// input is a representable multiple of the fold points, which holds for
/// every grid angle used by the optimizer.
pub fn sin_cos_deg(deg: f64) -> (f64, f64) {
    let x = deg.rem_euclid(360.0);
    let quadrant = (x / 90.0).floor();
    let mut r = x - 90.0 * quadrant;
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    let quadrant = quadrant as u8 % 4;
    if r >= 90.0 {
        r = 0.0;
    }
    let (s, c) = if r > 45.0 {
        let (s, c) = (90.0 - r).to_radians().sin_cos();
        (c, s)
    } else {
        r.to_radians().sin_cos()
    };
    match quadrant {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    }
}

/// Boresight vector `[cos β cos α, sin β cos α, sin α]`.
pub fn orientation_from_angles(angles: SteeringAngles) -> Orientation {
    let (sa, ca) = sin_cos_deg(angles.alpha);
    let (sb, cb) = sin_cos_deg(angles.beta);
    // sin²+cos² is unit to within an ulp; skip renormalization so grid
    // directions stay exact.
    Orientation(Vec3::new(cb * ca, sb * ca, sa))
}

/// Inverse of [`orientation_from_angles`]: α in `[0, 360)`, β in `[0, 360)`.
pub fn angles_from_direction(v: &Vec3) -> SteeringAngles {
    let horizontal = v.x.hypot(v.y);
    let alpha = v.z.atan2(horizontal).to_degrees().rem_euclid(360.0);
    let beta = v.y.atan2(v.x).to_degrees().rem_euclid(360.0);
    SteeringAngles::new(alpha, beta)
}

/// Cosine of the irradiance angle between the transmitter boresight and
/// the AP→user vector `v`.
pub fn cos_irradiance(v: &Vec3, n_tx: &Orientation) -> Result<f64> {
    let d = v.norm();
    if !(d > 0.0) {
        return Err(Error::DegenerateGeometry);
    }
    Ok((v.dot(n_tx.as_vec()) / d).clamp(-1.0, 1.0))
}

/// Cosine of the incidence angle between the receiver normal and the
/// user→AP direction. `v` points AP→user, hence the sign flip.
pub fn cos_incidence(v: &Vec3, n_rx: &Orientation) -> Result<f64> {
    let d = v.norm();
    if !(d > 0.0) {
        return Err(Error::DegenerateGeometry);
    }
    Ok((-v.dot(n_rx.as_vec()) / d).clamp(-1.0, 1.0))
}
