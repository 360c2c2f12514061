//! Secrecy outage analysis for a pinching-antenna downlink whose radiating
//! point is activated with a uniform position error.
//!
//! The crate evaluates the outage probability three ways: a Gaussian-copula
//! joint model integrated by Gauss–Chebyshev quadrature, an adaptive
//! reference quadrature of the same integral, and a Monte Carlo simulator of
//! the physical geometry. Every evaluation route is exposed through the
//! [`strategy::StrategyRegistry`], which is what the sweep harness and the
//! `pinsec` binary dispatch on.

pub mod config;
pub mod copula;
pub mod error;
pub mod geometry;
pub mod marginals;
pub mod montecarlo;
pub mod quadrature;
pub mod sop;
pub mod strategy;
pub mod sweep;

pub use error::{Error, Result};
pub use geometry::{SystemGeometry, UserRealization};
