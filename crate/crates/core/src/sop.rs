//! Secrecy outage probability from the marginals and a copula.
//!
//! All three analytic routes integrate the same single integral over Eve's
//! SNR support,
//!
//! ```text
//! P_out = ∫ C(F_B(g(y)) | F_E(y)) f_E(y) dy,   g(y) = 2^R (1 + y) - 1,
//! ```
//!
//! either with an `N`-point Gauss–Chebyshev rule of the first kind after the
//! affine map to `[-1, 1]`, or adaptively with forced subdivision at every
//! knot of the integrand.

use std::fmt;
use std::str::FromStr;

use crate::copula::{ConditionalCopula, CopulaModel, IndependenceCopula};
use crate::error::{Error, Result};
use crate::geometry::SystemGeometry;
use crate::marginals::SnrMarginals;
use crate::quadrature::{self, Tolerance};

pub const DEFAULT_NODES: usize = 200;
pub const REFERENCE_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SopMethod {
    Chebyshev,
    AdaptiveReference,
    Independence,
}

impl SopMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            SopMethod::Chebyshev => "chebyshev",
            SopMethod::AdaptiveReference => "adaptive-reference",
            SopMethod::Independence => "independence",
        }
    }
}

impl fmt::Display for SopMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for SopMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chebyshev" => Ok(SopMethod::Chebyshev),
            "adaptive-reference" => Ok(SopMethod::AdaptiveReference),
            "independence" => Ok(SopMethod::Independence),
            other => Err(Error::UnknownMethod(other.to_string())),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SopRequest {
    pub geometry: SystemGeometry,
    pub rate_threshold: f64,
    pub rho: f64,
    pub node_count: usize,
    pub method: SopMethod,
}

impl SopRequest {
    pub fn new(geometry: SystemGeometry, rate_threshold: f64, rho: f64, node_count: usize, method: SopMethod) -> Result<Self> {
        if !(rate_threshold >= 0.0 && rate_threshold.is_finite()) {
            return Err(Error::Domain(format!("rate threshold must be finite and >= 0, got {rate_threshold}")));
        }
        if !(rho.abs() < 1.0) {
            return Err(Error::Domain(format!("rho must satisfy |rho| < 1, got {rho}")));
        }
        if node_count < 1 {
            return Err(Error::Domain("node count must be >= 1".into()));
        }
        Ok(Self {
            geometry,
            rate_threshold,
            rho,
            node_count,
            method,
        })
    }
}

/// Exact answers that bypass quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shortcut {
    /// `g(γ_E,min) ≥ γ_B,max`: every realization is in outage.
    CertainOutage,
    /// `g(γ_E,max) ≤ γ_B,min`: no realization is in outage.
    NoOutage,
}

#[derive(Clone, Debug)]
pub struct SopResult {
    pub probability: f64,
    pub method: SopMethod,
    pub node_count: Option<usize>,
    pub error_estimate: Option<f64>,
    pub intervals: Option<usize>,
    pub shortcut: Option<Shortcut>,
    /// Branch-fallback flags inherited from the marginals.
    pub fallbacks: String,
}

impl SopResult {
    /// `key=value` pairs joined by `;`.
    pub fn diagnostics(&self) -> String {
        let mut parts = Vec::new();
        if let Some(n) = self.node_count {
            parts.push(format!("nodes={n}"));
        }
        if let Some(e) = self.error_estimate {
            parts.push(format!("abs_tol={REFERENCE_TOLERANCE:e}"));
            parts.push(format!("err_est={e:.3e}"));
        }
        if let Some(i) = self.intervals {
            parts.push(format!("intervals={i}"));
        }
        if let Some(s) = self.shortcut {
            parts.push(match s {
                Shortcut::CertainOutage => "shortcut=certain-outage".to_string(),
                Shortcut::NoOutage => "shortcut=no-outage".to_string(),
            });
        }
        parts.push(format!("fallback={}", self.fallbacks));
        parts.join(";")
    }
}

/// `g(γ_E) = 2^R (1 + γ_E) - 1`.
pub fn wiretap_threshold(gamma_e: f64, rate_threshold: f64) -> f64 {
    if rate_threshold == 0.0 {
        return gamma_e;
    }
    rate_threshold.exp2() * (1.0 + gamma_e) - 1.0
}

/// Inverse of [`wiretap_threshold`] in its first argument.
pub fn inverse_wiretap_threshold(gamma_b: f64, rate_threshold: f64) -> f64 {
    (1.0 + gamma_b) / rate_threshold.exp2() - 1.0
}

/// `ξ_n = cos((2n - 1)π / 2N)` for `n = 1..=N`, strictly decreasing.
pub fn chebyshev_nodes(n: usize) -> Result<Vec<f64>> {
    if n < 1 {
        return Err(Error::Domain("Gauss-Chebyshev rule needs at least one node".into()));
    }
    Ok((1..=n)
        .map(|k| ((2 * k - 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos())
        .collect())
}

/// `C(F_B(g(y)) | F_E(y)) · f_E(y)`.
pub fn sop_integrand(marginals: &SnrMarginals, copula: &dyn ConditionalCopula, rate_threshold: f64, y: f64) -> f64 {
    let density = marginals.eve_pdf(y);
    if density == 0.0 {
        return 0.0;
    }
    let u = marginals.bob_cdf(wiretap_threshold(y, rate_threshold));
    let v = marginals.eve_cdf(y);
    copula.conditional_cdf(u, v) * density
}

/// Points in Eve's support where the integrand may lose smoothness: her own
/// knots and the preimages under `g` of Bob's knots.
pub fn integrand_breakpoints(marginals: &SnrMarginals, rate_threshold: f64) -> Vec<f64> {
    let (lo, hi) = marginals.geometry().eve_snr_bounds();
    let mut pts: Vec<f64> = marginals.eve_density().knots().to_vec();
    pts.extend(
        marginals
            .bob_density()
            .knots()
            .iter()
            .map(|b| inverse_wiretap_threshold(*b, rate_threshold)),
    );
    pts.push(lo);
    pts.push(hi);
    pts.retain(|p| *p >= lo && *p <= hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

fn shortcut(geom: &SystemGeometry, rate_threshold: f64) -> Option<Shortcut> {
    let (b_lo, b_hi) = geom.bob_snr_bounds();
    let (e_lo, e_hi) = geom.eve_snr_bounds();
    if wiretap_threshold(e_lo, rate_threshold) >= b_hi {
        Some(Shortcut::CertainOutage)
    } else if wiretap_threshold(e_hi, rate_threshold) <= b_lo {
        Some(Shortcut::NoOutage)
    } else {
        None
    }
}

fn shortcut_result(s: Shortcut, method: SopMethod, marginals: &SnrMarginals) -> SopResult {
    SopResult {
        probability: match s {
            Shortcut::CertainOutage => 1.0,
            Shortcut::NoOutage => 0.0,
        },
        method,
        node_count: None,
        error_estimate: None,
        intervals: None,
        shortcut: Some(s),
        fallbacks: marginals.diagnostics().fallback_summary(),
    }
}

fn check_geometry(req: &SopRequest, marginals: &SnrMarginals) -> Result<()> {
    if req.geometry != *marginals.geometry() {
        return Err(Error::InvalidGeometry(
            "request geometry differs from the geometry the marginals were built for".into(),
        ));
    }
    Ok(())
}

/// Dispatches on `req.method`.
pub fn evaluate(req: &SopRequest, marginals: &SnrMarginals) -> Result<SopResult> {
    match req.method {
        SopMethod::Chebyshev => sop_chebyshev(req, marginals),
        SopMethod::AdaptiveReference => sop_adaptive_reference(req, marginals),
        SopMethod::Independence => sop_independence(req, marginals),
    }
}

pub fn sop_chebyshev(req: &SopRequest, marginals: &SnrMarginals) -> Result<SopResult> {
    let copula = CopulaModel::new(req.rho)?;
    sop_chebyshev_with(req, marginals, &copula)
}

/// `(π/N) Σ √(1-ξ_n²) Γ(ξ_n)` with `Γ(u)` the integrand at the mapped point
/// times the half-width of Eve's support.
pub fn sop_chebyshev_with(req: &SopRequest, marginals: &SnrMarginals, copula: &dyn ConditionalCopula) -> Result<SopResult> {
    check_geometry(req, marginals)?;
    if let Some(s) = shortcut(&req.geometry, req.rate_threshold) {
        return Ok(shortcut_result(s, SopMethod::Chebyshev, marginals));
    }
    let nodes = chebyshev_nodes(req.node_count)?;
    let (lo, hi) = req.geometry.eve_snr_bounds();
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let sum: f64 = nodes
        .iter()
        .map(|&xi| {
            let y = half * xi + mid;
            (1.0 - xi * xi).sqrt() * sop_integrand(marginals, copula, req.rate_threshold, y) * half
        })
        .sum();
    let probability = (std::f64::consts::PI / req.node_count as f64 * sum).clamp(0.0, 1.0);
    Ok(SopResult {
        probability,
        method: SopMethod::Chebyshev,
        node_count: Some(req.node_count),
        error_estimate: None,
        intervals: None,
        shortcut: None,
        fallbacks: marginals.diagnostics().fallback_summary(),
    })
}

pub fn sop_adaptive_reference(req: &SopRequest, marginals: &SnrMarginals) -> Result<SopResult> {
    let copula = CopulaModel::new(req.rho)?;
    adaptive(req, marginals, &copula, SopMethod::AdaptiveReference, REFERENCE_TOLERANCE)
}

/// Copula replaced by independence, integrated like the reference.
pub fn sop_independence(req: &SopRequest, marginals: &SnrMarginals) -> Result<SopResult> {
    adaptive(req, marginals, &IndependenceCopula, SopMethod::Independence, REFERENCE_TOLERANCE)
}

/// Adaptive route with an arbitrary copula and absolute tolerance.
pub fn sop_adaptive_with(
    req: &SopRequest,
    marginals: &SnrMarginals,
    copula: &dyn ConditionalCopula,
    tolerance: f64,
) -> Result<SopResult> {
    adaptive(req, marginals, copula, SopMethod::AdaptiveReference, tolerance)
}

fn adaptive(
    req: &SopRequest,
    marginals: &SnrMarginals,
    copula: &dyn ConditionalCopula,
    method: SopMethod,
    tolerance: f64,
) -> Result<SopResult> {
    check_geometry(req, marginals)?;
    if let Some(s) = shortcut(&req.geometry, req.rate_threshold) {
        return Ok(shortcut_result(s, method, marginals));
    }
    let points = integrand_breakpoints(marginals, req.rate_threshold);
    let tol = Tolerance {
        absolute: tolerance,
        relative: 0.0,
        max_intervals: 4000,
    };
    let integral = quadrature::integrate_with_breakpoints(
        |y| sop_integrand(marginals, copula, req.rate_threshold, y),
        &points,
        tol,
    )
    .require_converged()?;
    Ok(SopResult {
        probability: integral.value.clamp(0.0, 1.0),
        method,
        node_count: None,
        error_estimate: Some(integral.error),
        intervals: Some(integral.intervals),
        shortcut: None,
        fallbacks: marginals.diagnostics().fallback_summary(),
    })
}
