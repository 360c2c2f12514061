//! Physical scenario: a square service area of side `D`, a waveguide along
//! the x-axis at height `h`, and a pinch activated at `x1 + E` with
//! `E ~ Unif[-Δ, Δ]`.
//!
//! Only squared distances enter the SNRs, so the carrier wavelength and the
//! in-waveguide phase are not represented.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Scenario parameters shared by both receivers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemGeometry {
    side_length: f64,
    height: f64,
    error_halfwidth: f64,
    gamma_bar: f64,
}

impl SystemGeometry {
    /// Validates and builds a geometry.
    ///
    /// `error_halfwidth` may be zero (ideal pinching); anything above `D/2`
    /// is rejected rather than clamped.
    pub fn new(side_length: f64, height: f64, error_halfwidth: f64, gamma_bar: f64) -> Result<Self> {
        let finite = [side_length, height, error_halfwidth, gamma_bar]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidGeometry("all parameters must be finite".into()));
        }
        if side_length <= 0.0 {
            return Err(Error::InvalidGeometry(format!(
                "side length D must be > 0, got {side_length}"
            )));
        }
        if height <= 0.0 {
            return Err(Error::InvalidGeometry(format!(
                "waveguide height h must be > 0, got {height}"
            )));
        }
        if error_halfwidth < 0.0 {
            return Err(Error::InvalidGeometry(format!(
                "error half-width must be >= 0, got {error_halfwidth}"
            )));
        }
        if error_halfwidth > side_length / 2.0 {
            return Err(Error::InvalidGeometry(format!(
                "error half-width must satisfy 0 <= delta <= D/2 = {}, got {error_halfwidth}",
                side_length / 2.0
            )));
        }
        if gamma_bar <= 0.0 {
            return Err(Error::InvalidGeometry(format!(
                "effective transmit SNR must be > 0, got {gamma_bar}"
            )));
        }
        Ok(Self {
            side_length,
            height,
            error_halfwidth,
            gamma_bar,
        })
    }

    pub fn side_length(&self) -> f64 {
        self.side_length
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn error_halfwidth(&self) -> f64 {
        self.error_halfwidth
    }

    pub fn gamma_bar(&self) -> f64 {
        self.gamma_bar
    }

    /// `true` when the pinch sits exactly above Bob (`Δ = 0`).
    pub fn is_ideal(&self) -> bool {
        self.error_halfwidth == 0.0
    }

    pub fn with_gamma_bar(&self, gamma_bar: f64) -> Result<Self> {
        Self::new(self.side_length, self.height, self.error_halfwidth, gamma_bar)
    }

    pub fn with_error_halfwidth(&self, error_halfwidth: f64) -> Result<Self> {
        Self::new(self.side_length, self.height, error_halfwidth, self.gamma_bar)
    }

    /// Largest value of `W = E² + y1²`.
    pub fn bob_distance_max(&self) -> f64 {
        self.error_halfwidth.powi(2) + self.side_length.powi(2) / 4.0
    }

    /// Largest value of `S = (x1 + E - x2)² + y2²`.
    pub fn eve_distance_max(&self) -> f64 {
        (self.side_length + self.error_halfwidth).powi(2) + self.side_length.powi(2) / 4.0
    }

    /// `[γ̄/(h²+Δ²+D²/4), γ̄/h²]`.
    pub fn bob_snr_bounds(&self) -> (f64, f64) {
        let h2 = self.height * self.height;
        (
            self.gamma_bar / (h2 + self.bob_distance_max()),
            self.gamma_bar / h2,
        )
    }

    /// `[γ̄/(h²+(D+Δ)²+D²/4), γ̄/h²]`.
    pub fn eve_snr_bounds(&self) -> (f64, f64) {
        let h2 = self.height * self.height;
        (
            self.gamma_bar / (h2 + self.eve_distance_max()),
            self.gamma_bar / h2,
        )
    }
}

/// `η·Ps/σ²` in linear units.
pub fn effective_snr(antenna_gain: f64, transmit_power_w: f64, noise_power_w: f64) -> Result<f64> {
    for (name, v) in [
        ("antenna gain", antenna_gain),
        ("transmit power", transmit_power_w),
        ("noise power", noise_power_w),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Domain(format!("{name} must be finite and > 0, got {v}")));
        }
    }
    Ok(antenna_gain * transmit_power_w / noise_power_w)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

/// Positions of Bob and Eve plus the pinching error for one channel use.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UserRealization {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
    pub error_e: f64,
}

impl UserRealization {
    /// Draws `x1, y1, x2, y2 ~ Unif[-D/2, D/2]` and `E ~ Unif[-Δ, Δ]`, in that order.
    pub fn sample<R: Rng + ?Sized>(geom: &SystemGeometry, rng: &mut R) -> Self {
        let half = geom.side_length / 2.0;
        let delta = geom.error_halfwidth;
        let x1 = uniform_symmetric(rng, half);
        let y1 = uniform_symmetric(rng, half);
        let x2 = uniform_symmetric(rng, half);
        let y2 = uniform_symmetric(rng, half);
        let error_e = uniform_symmetric(rng, delta);
        Self {
            x1,
            y1,
            x2,
            y2,
            error_e,
        }
    }

    pub fn within_supports(&self, geom: &SystemGeometry) -> bool {
        let half = geom.side_length / 2.0;
        [self.x1, self.y1, self.x2, self.y2]
            .iter()
            .all(|c| c.abs() <= half)
            && self.error_e.abs() <= geom.error_halfwidth
    }
}

/// Uniform on `[-half, half]`; exactly zero when `half == 0`.
pub(crate) fn uniform_symmetric<R: Rng + ?Sized>(rng: &mut R, half: f64) -> f64 {
    let u: f64 = rng.random();
    if half == 0.0 {
        0.0
    } else {
        half * (2.0 * u - 1.0)
    }
}

/// Generator for stream `stream` of the master `seed`.
///
/// Every Monte Carlo batch owns one stream, so results depend only on
/// `(seed, stream)` and never on scheduling.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn sample_realization(geom: &SystemGeometry, seed: u64) -> UserRealization {
    UserRealization::sample(geom, &mut seeded_rng(seed, 0))
}

/// `γ_B = γ̄ / (E² + y1² + h²)`.
pub fn snr_bob(geom: &SystemGeometry, r: &UserRealization) -> f64 {
    geom.gamma_bar / (r.error_e * r.error_e + r.y1 * r.y1 + geom.height * geom.height)
}

/// `γ_E = γ̄ / ((x1 + E - x2)² + y2² + h²)`.
pub fn snr_eve(geom: &SystemGeometry, r: &UserRealization) -> f64 {
    let dx = r.x1 + r.error_e - r.x2;
    geom.gamma_bar / (dx * dx + r.y2 * r.y2 + geom.height * geom.height)
}

/// SNR at ground point `(x, y)` from a radiator at `(radiator_x, 0, h)`.
pub fn snr_from_radiator(geom: &SystemGeometry, radiator_x: f64, x: f64, y: f64) -> f64 {
    let dx = x - radiator_x;
    geom.gamma_bar / (dx * dx + y * y + geom.height * geom.height)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn geom() -> SystemGeometry {
        SystemGeometry::new(20.0, 5.0, 1.0, 1e4).unwrap()
    }

    #[test]
    fn effective_snr_examples() {
        assert_eq!(effective_snr(1.0, 1.0, 1.0).unwrap(), 1.0);
        assert_relative_eq!(effective_snr(1.0, 1e-3, 1e-12).unwrap(), 1e9, max_relative = 1e-12);
        let snr = effective_snr(1.0, dbm_to_watts(30.0), dbm_to_watts(-90.0)).unwrap();
        assert_relative_eq!(snr, 1e12, max_relative = 1e-12);
        assert!(effective_snr(0.0, 1.0, 1.0).is_err());
        assert!(effective_snr(1.0, -1.0, 1.0).is_err());
        assert!(effective_snr(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn geometry_validation() {
        assert!(SystemGeometry::new(20.0, 5.0, 10.0, 1.0).is_ok());
        let err = SystemGeometry::new(20.0, 5.0, 10.5, 1.0).unwrap_err();
        assert!(err.to_string().contains("D/2"));
        assert!(SystemGeometry::new(0.0, 5.0, 0.0, 1.0).is_err());
        assert!(SystemGeometry::new(20.0, 0.0, 1.0, 1.0).is_err());
        assert!(SystemGeometry::new(20.0, 5.0, -1.0, 1.0).is_err());
        assert!(SystemGeometry::new(20.0, 5.0, 1.0, 0.0).is_err());
        assert!(SystemGeometry::new(f64::NAN, 5.0, 1.0, 1.0).is_err());
        assert!(SystemGeometry::new(20.0, 5.0, 0.0, 1.0).unwrap().is_ideal());
    }

    #[test]
    fn bob_snr_examples() {
        let g = geom();
        let mut r = UserRealization {
            x1: 3.0,
            y1: 0.0,
            x2: -4.0,
            y2: 2.0,
            error_e: 0.0,
        };
        assert_relative_eq!(snr_bob(&g, &r), 1e4 / 25.0);
        r.error_e = 1.0;
        r.y1 = 10.0;
        assert_relative_eq!(snr_bob(&g, &r), g.bob_snr_bounds().0);
        r.y1 = 2.0;
        assert_relative_eq!(snr_bob(&g, &r), 1e4 / 30.0, max_relative = 1e-14);
    }

    #[test]
    fn eve_snr_examples() {
        let g = geom();
        let r = UserRealization {
            x1: 2.5,
            y1: 1.0,
            x2: 3.0,
            y2: 0.0,
            error_e: 0.5,
        };
        assert_relative_eq!(snr_eve(&g, &r), 1e4 / 25.0);
        let r = UserRealization {
            x1: 10.0,
            y1: 0.0,
            x2: -10.0,
            y2: 10.0,
            error_e: 1.0,
        };
        assert_relative_eq!(snr_eve(&g, &r), g.eve_snr_bounds().0, max_relative = 1e-14);
        let r = UserRealization {
            x1: 0.0,
            y1: 0.0,
            x2: 3.0,
            y2: 4.0,
            error_e: 0.0,
        };
        assert_relative_eq!(snr_eve(&g, &r), 200.0, max_relative = 1e-14);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let g = geom();
        assert_eq!(sample_realization(&g, 42), sample_realization(&g, 42));
        assert_ne!(sample_realization(&g, 42), sample_realization(&g, 43));
    }

    #[test]
    fn ideal_pinching_has_no_error() {
        let g = SystemGeometry::new(20.0, 5.0, 0.0, 1e4).unwrap();
        let mut rng = seeded_rng(7, 0);
        for _ in 0..1000 {
            assert_eq!(UserRealization::sample(&g, &mut rng).error_e, 0.0);
        }
    }

    #[test]
    fn uniform_moments_of_x1() {
        // Var[Unif[-D/2, D/2]] = D²/12 and Var[X²] = D⁴/80 - D⁴/144.
        let g = geom();
        let n = 100_000;
        let mut rng = seeded_rng(2024, 0);
        let xs: Vec<f64> = (0..n).map(|_| UserRealization::sample(&g, &mut rng).x1).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let d = g.side_length();
        let sigma2 = d * d / 12.0;
        assert!(mean.abs() <= 3.0 * (sigma2 / n as f64).sqrt());
        let var_of_sq = d.powi(4) / 80.0 - sigma2 * sigma2;
        assert!((var - sigma2).abs() <= 3.0 * (var_of_sq / n as f64).sqrt());
    }
}
