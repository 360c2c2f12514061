//! Monte Carlo simulation of the physical model.
//!
//! Samples are drawn in fixed-size batches; batch `b` uses stream `b` of the
//! master seed, and batches are merged by summing integer outage counts, so
//! the thread count never changes a result.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{self, seeded_rng, snr_bob, snr_eve, SystemGeometry, UserRealization};
use crate::sop::wiretap_threshold;

pub const MIN_SOP_SAMPLES: usize = 1_000;
pub const MIN_PAIR_SAMPLES: usize = 100;
pub const DEFAULT_SAMPLES: usize = 10_000;
pub const BATCH_SIZE: usize = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum McMode {
    /// Both SNRs from the same realization.
    Pinching,
    /// Static radiator, no pinching error.
    FixedAntenna,
    /// Eve's SNR from an independent Bob position and error draw.
    ForcedIndependent,
}

impl McMode {
    pub fn tag(&self) -> &'static str {
        match self {
            McMode::Pinching => "pinching",
            McMode::FixedAntenna => "fixed-antenna",
            McMode::ForcedIndependent => "forced-independent",
        }
    }
}

impl fmt::Display for McMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for McMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pinching" => Ok(McMode::Pinching),
            "fixed-antenna" => Ok(McMode::FixedAntenna),
            "forced-independent" => Ok(McMode::ForcedIndependent),
            other => Err(Error::UnknownMethod(other.to_string())),
        }
    }
}

/// Static radiator used by [`McMode::FixedAntenna`], at `(x, 0, h)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedAntenna {
    pub x: f64,
}

impl Default for FixedAntenna {
    fn default() -> Self {
        Self { x: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub sop: f64,
    pub samples: usize,
    pub outages: usize,
    pub std_error: f64,
    pub seed: u64,
    pub mode: McMode,
}

impl McEstimate {
    fn from_counts(outages: usize, samples: usize, seed: u64, mode: McMode) -> Self {
        let p = outages as f64 / samples as f64;
        Self {
            sop: p,
            samples,
            outages,
            std_error: (p * (1.0 - p) / samples as f64).sqrt(),
            seed,
            mode,
        }
    }
}

fn batch_sizes(samples: usize) -> impl IndexedParallelIterator<Item = (u64, usize)> {
    let batches = samples.div_ceil(BATCH_SIZE);
    (0..batches).into_par_iter().map(move |b| {
        let len = BATCH_SIZE.min(samples - b * BATCH_SIZE);
        (b as u64, len)
    })
}

/// SNR pair for one channel use in the given mode.
pub fn draw_pair<R: Rng + ?Sized>(geom: &SystemGeometry, mode: McMode, antenna: FixedAntenna, rng: &mut R) -> (f64, f64) {
    let r = UserRealization::sample(geom, rng);
    match mode {
        McMode::Pinching => (snr_bob(geom, &r), snr_eve(geom, &r)),
        McMode::FixedAntenna => (
            geometry::snr_from_radiator(geom, antenna.x, r.x1, r.y1),
            geometry::snr_from_radiator(geom, antenna.x, r.x2, r.y2),
        ),
        McMode::ForcedIndependent => {
            let half = geom.side_length() / 2.0;
            let ghost = UserRealization {
                x1: geometry::uniform_symmetric(rng, half),
                error_e: geometry::uniform_symmetric(rng, geom.error_halfwidth()),
                ..r
            };
            (snr_bob(geom, &r), snr_eve(geom, &ghost))
        }
    }
}

pub fn mc_sop(geom: &SystemGeometry, rate_threshold: f64, samples: usize, seed: u64, mode: McMode) -> Result<McEstimate> {
    mc_sop_with(geom, rate_threshold, samples, seed, mode, FixedAntenna::default())
}

/// Fraction of realizations with `γ_B < g(γ_E)`.
pub fn mc_sop_with(
    geom: &SystemGeometry,
    rate_threshold: f64,
    samples: usize,
    seed: u64,
    mode: McMode,
    antenna: FixedAntenna,
) -> Result<McEstimate> {
    if samples < MIN_SOP_SAMPLES {
        return Err(Error::InsufficientData {
            needed: MIN_SOP_SAMPLES,
            got: samples,
        });
    }
    if !(rate_threshold >= 0.0 && rate_threshold.is_finite()) {
        return Err(Error::Domain(format!("rate threshold must be finite and >= 0, got {rate_threshold}")));
    }
    let outages: usize = batch_sizes(samples)
        .map(|(stream, len)| {
            let mut rng = seeded_rng(seed, stream);
            (0..len)
                .filter(|_| {
                    let (b, e) = draw_pair(geom, mode, antenna, &mut rng);
                    b < wiretap_threshold(e, rate_threshold)
                })
                .count()
        })
        .sum();
    Ok(McEstimate::from_counts(outages, samples, seed, mode))
}

/// `(γ_B, γ_E)` pairs from shared physical realizations, in batch order.
pub fn mc_pairs(geom: &SystemGeometry, samples: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    mc_pairs_in_mode(geom, samples, seed, McMode::Pinching)
}

pub fn mc_pairs_in_mode(geom: &SystemGeometry, samples: usize, seed: u64, mode: McMode) -> Result<Vec<(f64, f64)>> {
    if samples < MIN_PAIR_SAMPLES {
        return Err(Error::InsufficientData {
            needed: MIN_PAIR_SAMPLES,
            got: samples,
        });
    }
    let batches: Vec<Vec<(f64, f64)>> = batch_sizes(samples)
        .map(|(stream, len)| {
            let mut rng = seeded_rng(seed, stream);
            (0..len)
                .map(|_| draw_pair(geom, mode, FixedAntenna::default(), &mut rng))
                .collect()
        })
        .collect();
    Ok(batches.into_iter().flatten().collect())
}
