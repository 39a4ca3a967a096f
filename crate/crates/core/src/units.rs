//! Unit conversions between user-facing linear frequencies and the angular
//! units (rad/s) used internally.

use std::f64::consts::PI;

pub const TWO_PI: f64 = 2.0 * PI;

/// Linear GHz to angular frequency (rad/s).
pub fn ghz(f: f64) -> f64 {
    TWO_PI * f * 1e9
}

/// Linear MHz to angular frequency (rad/s).
pub fn mhz(f: f64) -> f64 {
    TWO_PI * f * 1e6
}

/// Linear kHz to angular frequency (rad/s).
pub fn khz(f: f64) -> f64 {
    TWO_PI * f * 1e3
}

/// Linear Hz to angular frequency (rad/s).
pub fn hz(f: f64) -> f64 {
    TWO_PI * f
}

/// Angular frequency (rad/s) to linear GHz.
pub fn to_ghz(w: f64) -> f64 {
    w / (TWO_PI * 1e9)
}

/// Angular frequency (rad/s) to linear MHz.
pub fn to_mhz(w: f64) -> f64 {
    w / (TWO_PI * 1e6)
}

/// Angular frequency (rad/s) to linear kHz.
pub fn to_khz(w: f64) -> f64 {
    w / (TWO_PI * 1e3)
}

/// Nanoseconds to seconds.
pub fn ns(t: f64) -> f64 {
    t * 1e-9
}

/// Microseconds to seconds.
pub fn us(t: f64) -> f64 {
    t * 1e-6
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        assert!((to_ghz(ghz(4.3796)) - 4.3796).abs() < 1e-12);
        assert!((to_khz(khz(90.0)) - 90.0).abs() < 1e-12);
        assert!((ghz(1e-3) - mhz(1.0)).abs() < 1e-6);
    }
}
