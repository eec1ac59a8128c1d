//! Physical constants and unit conversions.
//!
//! Everything inside the crate is SI with energies expressed as angular
//! frequencies (rad/s) and rates in 1/s. The helpers here convert from the
//! laboratory units used in configuration files (GHz, MHz, mT, MV/m, nm, µs).

use core::f64::consts::PI;

/// Electron gyromagnetic ratio g_e·µ_B/ħ in rad/s per tesla (2π × 28.024 GHz/T).
pub const ELECTRON_GYRO: f64 = 2.0 * PI * 28.024e9;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_8128e-12;
/// µ0/4π, T·m/A.
pub const MU0_OVER_4PI: f64 = 1e-7;
/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Frequency in GHz to angular frequency in rad/s.
pub fn ghz_to_angular(ghz: f64) -> f64 {
    2.0 * PI * ghz * 1e9
}

/// Frequency in Hz to angular frequency in rad/s.
pub fn hz_to_angular(hz: f64) -> f64 {
    2.0 * PI * hz
}

pub fn angular_to_hz(w: f64) -> f64 {
    w / (2.0 * PI)
}

/// Rate quoted in MHz (i.e. 10^6 events per second) to 1/s.
pub fn mhz_to_rate(mhz: f64) -> f64 {
    mhz * 1e6
}

pub fn rate_to_mhz(rate: f64) -> f64 {
    rate * 1e-6
}

pub fn mt_to_tesla(mt: f64) -> f64 {
    mt * 1e-3
}

pub fn tesla_to_mt(t: f64) -> f64 {
    t * 1e3
}

/// Hyperfine coupling quoted in mT to rad/s, using the electron gyromagnetic ratio.
pub fn hyperfine_mt_to_angular(mt: f64) -> f64 {
    mt_to_tesla(mt) * ELECTRON_GYRO
}

pub fn hyperfine_angular_to_mt(w: f64) -> f64 {
    tesla_to_mt(w / ELECTRON_GYRO)
}

pub fn nm_to_m(nm: f64) -> f64 {
    nm * 1e-9
}

pub fn us_to_s(us: f64) -> f64 {
    us * 1e-6
}

pub fn s_to_us(s: f64) -> f64 {
    s * 1e6
}

pub fn mv_per_m_to_v_per_m(mv: f64) -> f64 {
    mv * 1e6
}

/// Sensitivity in s^-1/2 to kHz·Hz^-1/2.
pub fn sensitivity_to_khz(eta: f64) -> f64 {
    eta * 1e-3
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hyperfine_round_trip() {
        for v in [-0.218, -0.202, -0.054, 1.3] {
            let back = hyperfine_angular_to_mt(hyperfine_mt_to_angular(v));
            assert!((back - v).abs() < 1e-12 * v.abs().max(1.0));
        }
    }

    #[test]
    fn zero_field_splitting() {
        assert!((angular_to_hz(ghz_to_angular(2.87)) - 2.87e9).abs() < 1e-3);
    }
}
