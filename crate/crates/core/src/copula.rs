//! Standard normal CDF and quantile, the Gaussian-copula conditional CDF, and
//! estimation of the copula correlation from paired samples.

use std::f64::consts::{PI, SQRT_2};

use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Probabilities handed to `Φ⁻¹` are kept inside `[P_CLAMP, 1 - P_CLAMP]`.
pub const P_CLAMP: f64 = 1e-15;

/// `Φ(z) = erfc(-z/√2) / 2`.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

pub fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// `Φ⁻¹(p)`: Acklam's rational approximation followed by one Halley step
/// against [`std_normal_cdf`]. The upper half is obtained by symmetry so the
/// refinement always works on the accurate lower tail.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("normal quantile needs p in (0, 1), got {p}")));
    }
    if p > 0.5 {
        return Ok(-lower_quantile(1.0 - p));
    }
    Ok(lower_quantile(p))
}

fn lower_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    let e = std_normal_cdf(x) - p;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// Conditional CDF `C(u | v) = P(U ≤ u | V = v)` of a bivariate copula.
pub trait ConditionalCopula: Send + Sync {
    fn name(&self) -> &'static str;

    fn conditional_cdf(&self, u: f64, v: f64) -> f64;
}

/// Gaussian copula with correlation `ρ`, `|ρ| < 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CopulaModel {
    rho: f64,
    scale: f64,
}

impl CopulaModel {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho.abs() < 1.0) {
            return Err(Error::Domain(format!("copula correlation must satisfy |rho| < 1, got {rho}")));
        }
        Ok(Self {
            rho,
            scale: (1.0 - rho * rho).sqrt(),
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

fn clamp_probability(p: f64) -> f64 {
    p.clamp(P_CLAMP, 1.0 - P_CLAMP)
}

fn quantile_clamped(p: f64) -> f64 {
    lower_or_upper(clamp_probability(p))
}

fn lower_or_upper(p: f64) -> f64 {
    if p > 0.5 {
        -lower_quantile(1.0 - p)
    } else {
        lower_quantile(p)
    }
}

impl ConditionalCopula for CopulaModel {
    fn name(&self) -> &'static str {
        "gaussian"
    }

    /// `Φ((Φ⁻¹(u) - ρΦ⁻¹(v)) / √(1-ρ²))`.
    ///
    /// `u` at or beyond `{0, 1}` returns the exact limit; interior `u` and
    /// every `v` are clamped to `[1e-15, 1 - 1e-15]`.
    fn conditional_cdf(&self, u: f64, v: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        if self.rho == 0.0 {
            return u;
        }
        let zu = quantile_clamped(u);
        let zv = quantile_clamped(v);
        std_normal_cdf((zu - self.rho * zv) / self.scale)
    }
}

/// Product copula: `C(u | v) = u`.
#[derive(Clone, Copy, Debug, Default)]
pub struct IndependenceCopula;

impl ConditionalCopula for IndependenceCopula {
    fn name(&self) -> &'static str {
        "independence"
    }

    fn conditional_cdf(&self, u: f64, _v: f64) -> f64 {
        u.clamp(0.0, 1.0)
    }
}

pub const MIN_RHO_PAIRS: usize = 100;
pub const RHO_CLAMP: f64 = 0.999;

/// Gaussian-copula correlation by normal scores: each margin is ranked,
/// mapped to `(rank - 0.5)/n`, sent through `Φ⁻¹`, and the Pearson
/// correlation of the scores is returned, clamped to `[-0.999, 0.999]`.
/// Ties keep their input order.
pub fn estimate_rho(pairs: &[(f64, f64)]) -> Result<f64> {
    let n = pairs.len();
    if n < MIN_RHO_PAIRS {
        return Err(Error::InsufficientData {
            needed: MIN_RHO_PAIRS,
            got: n,
        });
    }
    if pairs.iter().any(|(a, b)| a.is_nan() || b.is_nan()) {
        return Err(Error::Domain("rho estimation input contains NaN".into()));
    }
    let first = normal_scores(pairs.iter().map(|p| p.0), n);
    let second = normal_scores(pairs.iter().map(|p| p.1), n);
    let mean_a = first.iter().sum::<f64>() / n as f64;
    let mean_b = second.iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (a, b) in first.iter().zip(&second) {
        let (da, db) = (a - mean_a, b - mean_b);
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    let rho = sab / (saa * sbb).sqrt();
    Ok(rho.clamp(-RHO_CLAMP, RHO_CLAMP))
}

fn normal_scores(values: impl Iterator<Item = f64>, n: usize) -> Vec<f64> {
    let values: Vec<f64> = values.collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut scores = vec![0.0; n];
    for (rank, &idx) in order.iter().enumerate() {
        scores[idx] = lower_or_upper((rank as f64 + 0.5) / n as f64);
    }
    scores
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cdf_symmetry() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        for k in 0..=160 {
            let z = -8.0 + 0.1 * k as f64;
            assert_abs_diff_eq!(std_normal_cdf(z) + std_normal_cdf(-z), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn quantile_domain() {
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
        for p in [0.0, 1.0, -0.1, 1.1, f64::NAN] {
            assert!(std_normal_quantile(p).is_err());
        }
    }

    #[test]
    fn round_trip_in_z() {
        for k in 0..=1200 {
            let z = -6.0 + 0.01 * k as f64;
            let back = std_normal_quantile(std_normal_cdf(z)).unwrap();
            assert_abs_diff_eq!(back, z, epsilon = 1e-8);
        }
    }

    #[test]
    fn round_trip_in_p() {
        for k in 0..=2000 {
            let t = k as f64 / 2000.0;
            // log-spaced towards both tails
            let p = if t < 0.5 {
                10f64.powf(-10.0 + 18.0 * t).min(0.5)
            } else {
                1.0 - 10f64.powf(-10.0 + 18.0 * (1.0 - t)).min(0.5)
            };
            let p = p.clamp(1e-10, 1.0 - 1e-10);
            assert_abs_diff_eq!(std_normal_cdf(std_normal_quantile(p).unwrap()), p, epsilon = 1e-9);
        }
    }

    #[test]
    fn independence_reduces_to_u() {
        let c = CopulaModel::new(0.0).unwrap();
        for (u, v) in [(0.1, 0.9), (0.5, 0.5), (0.77, 0.01)] {
            assert_abs_diff_eq!(c.conditional_cdf(u, v), u, epsilon = 1e-12);
        }
        assert_eq!(IndependenceCopula.conditional_cdf(0.3, 0.8), 0.3);
    }

    #[test]
    fn diagonal_substitution() {
        for rho in [0.1, 0.5, 0.9] {
            let c = CopulaModel::new(rho).unwrap();
            for u in [0.05, 0.3, 0.6, 0.95] {
                let z = std_normal_quantile(u).unwrap();
                let expected = std_normal_cdf(z * (1.0 - rho) / (1.0 - rho * rho).sqrt());
                assert_abs_diff_eq!(c.conditional_cdf(u, u), expected, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn copula_rejects_degenerate_rho() {
        assert!(CopulaModel::new(1.0).is_err());
        assert!(CopulaModel::new(-1.0).is_err());
        assert!(CopulaModel::new(f64::NAN).is_err());
        assert!(CopulaModel::new(0.999).is_ok());
    }

    #[test]
    fn endpoints_are_exact() {
        let c = CopulaModel::new(0.4).unwrap();
        assert_eq!(c.conditional_cdf(1.0, 0.999_999), 1.0);
        assert_eq!(c.conditional_cdf(0.0, 1e-9), 0.0);
        let inner = c.conditional_cdf(0.5, 1.0);
        assert!((0.0..=1.0).contains(&inner));
    }

    #[test]
    fn rho_needs_enough_pairs() {
        let pairs = vec![(1.0, 2.0); 99];
        assert!(matches!(
            estimate_rho(&pairs),
            Err(Error::InsufficientData { needed: 100, got: 99 })
        ));
    }

    #[test]
    fn comonotone_pairs_clamp_high() {
        let pairs: Vec<(f64, f64)> = (0..500).map(|i| (i as f64, i as f64)).collect();
        assert_eq!(estimate_rho(&pairs).unwrap(), RHO_CLAMP);
        let anti: Vec<(f64, f64)> = (0..500).map(|i| (i as f64, -(i as f64))).collect();
        assert_eq!(estimate_rho(&anti).unwrap(), -RHO_CLAMP);
    }
}
