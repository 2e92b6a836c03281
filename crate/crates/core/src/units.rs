//! Conversions between quoted frequencies (Hz, `f = ω/2π`) and the angular
//! units used internally.

use std::f64::consts::TAU;

/// Hz → rad/s.
#[inline]
pub fn to_angular(hz: f64) -> f64 {
    hz * TAU
}

/// rad/s → Hz.
#[inline]
pub fn to_hz(angular: f64) -> f64 {
    angular / TAU
}

pub const MHZ: f64 = 1.0e6;
pub const KHZ: f64 = 1.0e3;
pub const GHZ: f64 = 1.0e9;
