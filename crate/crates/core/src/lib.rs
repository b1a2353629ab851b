//! Slow beam steering for multi-user visible light communications.
//!
//! A ceiling access point steers one or more Lambertian LED beams (elevation,
//! azimuth and directivity index) once per TDMA frame so that every user in
//! the room is served. The crate provides:
//!
//! * [`geometry`] and [`channel`]: the line-of-sight Lambertian link model;
//! * [`optimizer`]: equal time allocation plus exhaustive and
//!   majorization-minimization searches over the steering grid;
//! * [`clustering`]: user-to-beam clustering for multi-beam access points;
//! * [`simulation`]: room drops, the transmission schemes and Monte-Carlo
//!   aggregation;
//! * [`config`] and [`experiment`]: scenario files, presets and CSV output
//!   used by the `vlc-steer` binary.

pub mod channel;
pub mod clustering;
pub mod config;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod optimizer;
pub mod simulation;

pub use error::{Error, Result};
