//! Marginal laws of the two SNRs.
//!
//! [`SquaredDistanceLaws`] holds the densities and CDFs of Bob's squared
//! distance `W` and Eve's `S`. They depend only on `(D, Δ)`, so sweeps over
//! transmit SNR, height or rate threshold reuse one instance.
//! [`SnrMarginals`] maps them to SNR space for a concrete geometry.
//!
//! Every closed-form branch is checked at construction against the
//! numerical convolution of its building blocks. A branch that disagrees by
//! more than the fallback threshold is replaced by the tabulated oracle and
//! the event is recorded in [`MarginalDiagnostics`].

pub mod closed_form;
pub mod convolution;
pub mod piecewise;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

pub use convolution::{convolve_at, numeric_convolution};
pub use piecewise::{cdf_of, write_two_column, Branch, BranchSource, DensityFn, PiecewisePdf, TabulatedCdf};

use crate::error::{Error, Result};
use crate::geometry::SystemGeometry;

#[derive(Clone, Copy, Debug)]
pub struct MarginalOptions {
    pub convolution_grid: usize,
    pub cdf_grid: usize,
    pub validation_points: usize,
    /// Largest tolerated `max|closed - oracle| / max|oracle|` on a branch.
    pub fallback_threshold: f64,
}

impl Default for MarginalOptions {
    fn default() -> Self {
        Self {
            convolution_grid: 4096,
            cdf_grid: 4096,
            validation_points: 200,
            fallback_threshold: 1e-3,
        }
    }
}

/// Outcome of comparing one closed-form branch with the convolution oracle.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchCheck {
    pub density: String,
    pub branch: usize,
    pub lo: f64,
    pub hi: f64,
    pub max_abs_diff: f64,
    pub relative_mismatch: f64,
    pub fallback: bool,
}

#[derive(Clone, Debug, Default)]
pub struct MarginalDiagnostics {
    pub checks: Vec<BranchCheck>,
    /// `(density name, |∫f - 1|)` for every density built.
    pub residuals: Vec<(String, f64)>,
}

impl MarginalDiagnostics {
    pub fn fallbacks(&self) -> impl Iterator<Item = &BranchCheck> {
        self.checks.iter().filter(|c| c.fallback)
    }

    pub fn has_fallback(&self) -> bool {
        self.fallbacks().next().is_some()
    }

    /// `none`, or `density#branch` entries joined by `|`.
    pub fn fallback_summary(&self) -> String {
        let flagged: Vec<String> = self
            .fallbacks()
            .map(|c| format!("{}#{}", c.density, c.branch + 1))
            .collect();
        if flagged.is_empty() {
            "none".to_string()
        } else {
            flagged.join("|")
        }
    }
}

impl fmt::Display for MarginalDiagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "branch-check {}#{} [{:.6e}, {:.6e}] max_abs_diff={:.3e} rel={:.3e} fallback={}",
                c.density,
                c.branch + 1,
                c.lo,
                c.hi,
                c.max_abs_diff,
                c.relative_mismatch,
                c.fallback
            )?;
        }
        for (name, r) in &self.residuals {
            writeln!(f, "normalization {name} residual={r:.3e}")?;
        }
        Ok(())
    }
}

/// Compares every closed-form branch of `pdf` with `oracle` on
/// `points` interior abscissae and swaps in the oracle where the relative
/// mismatch exceeds `threshold`.
pub fn validate_against_oracle(
    pdf: &PiecewisePdf,
    oracle: &PiecewisePdf,
    points: usize,
    threshold: f64,
) -> Result<(PiecewisePdf, Vec<BranchCheck>)> {
    let mut out = pdf.clone();
    let mut checks = Vec::new();
    for (i, branch) in pdf.branches().iter().enumerate() {
        if branch.source != BranchSource::ClosedForm {
            continue;
        }
        let (lo, hi) = (branch.lo, branch.hi);
        let mut max_diff: f64 = 0.0;
        let mut max_ref: f64 = 0.0;
        for k in 1..=points {
            let x = lo + (hi - lo) * 0.5 * (1.0 - (PI * k as f64 / (points + 1) as f64).cos());
            let reference = oracle.eval(x);
            max_diff = max_diff.max((branch.eval(x) - reference).abs());
            max_ref = max_ref.max(reference.abs());
        }
        let relative = if max_ref > 0.0 { max_diff / max_ref } else { max_diff };
        let fallback = !(relative <= threshold);
        if fallback {
            let f = oracle.clone();
            out = out.with_branch(i, Branch::new(lo, hi, BranchSource::OracleFallback, Arc::new(move |x| f.eval(x))))?;
        }
        checks.push(BranchCheck {
            density: pdf.name().to_string(),
            branch: i,
            lo,
            hi,
            max_abs_diff: max_diff,
            relative_mismatch: relative,
            fallback,
        });
    }
    Ok((out, checks))
}

/// Densities and CDFs of `W = E² + y1²` and `S = (x1 + E - x2)² + y2²`.
#[derive(Clone, Debug)]
pub struct SquaredDistanceLaws {
    side: f64,
    delta: f64,
    w_pdf: PiecewisePdf,
    s_pdf: PiecewisePdf,
    w_oracle: Option<PiecewisePdf>,
    s_oracle: PiecewisePdf,
    w_cdf: TabulatedCdf,
    s_cdf: TabulatedCdf,
    diagnostics: MarginalDiagnostics,
}

impl SquaredDistanceLaws {
    pub fn new(side: f64, delta: f64) -> Result<Self> {
        Self::with_options(side, delta, MarginalOptions::default())
    }

    pub fn for_geometry(geom: &SystemGeometry) -> Result<Self> {
        Self::new(geom.side_length(), geom.error_halfwidth())
    }

    pub fn with_options(side: f64, delta: f64, opts: MarginalOptions) -> Result<Self> {
        if !(side > 0.0 && side.is_finite()) || !(delta >= 0.0 && delta <= side / 2.0) {
            return Err(Error::InvalidGeometry(format!(
                "need D > 0 and 0 <= delta <= D/2, got D={side}, delta={delta}"
            )));
        }
        let mut diagnostics = MarginalDiagnostics::default();
        let v_pdf = v_density(side)?;

        let (w_pdf, w_oracle) = if delta > 0.0 {
            let u_pdf = u_density(delta)?;
            let oracle = numeric_convolution(&u_pdf, &v_pdf, opts.convolution_grid)?;
            let closed = w_closed_form(side, delta)?;
            let (pdf, checks) = validate_against_oracle(&closed, &oracle, opts.validation_points, opts.fallback_threshold)?;
            diagnostics.checks.extend(checks);
            (pdf, Some(oracle))
        } else {
            // W = y1² exactly when the pinch is perfect
            let quarter = side * side / 4.0;
            let pdf = PiecewisePdf::new(
                "w",
                vec![Branch::closed_form(0.0, quarter, move |w| closed_form::pdf_v(side, w))],
                &[],
                1e-6,
            )?;
            (pdf, None)
        };

        let uz_pdf = z_squared_density(side, delta)?;
        let s_oracle = numeric_convolution(&uz_pdf, &v_pdf, opts.convolution_grid)?;
        let s_closed = s_with_tabulated_tail(side, delta, &s_oracle)?;
        let (s_pdf, checks) = validate_against_oracle(&s_closed, &s_oracle, opts.validation_points, opts.fallback_threshold)?;
        diagnostics.checks.extend(checks);

        let w_cdf = cdf_of(&w_pdf, opts.cdf_grid);
        let s_cdf = cdf_of(&s_pdf, opts.cdf_grid);
        diagnostics.residuals.push(("w".into(), w_pdf.normalization_residual()));
        diagnostics.residuals.push(("s".into(), s_pdf.normalization_residual()));

        Ok(Self {
            side,
            delta,
            w_pdf,
            s_pdf,
            w_oracle,
            s_oracle,
            w_cdf,
            s_cdf,
            diagnostics,
        })
    }

    pub fn side_length(&self) -> f64 {
        self.side
    }

    pub fn error_halfwidth(&self) -> f64 {
        self.delta
    }

    pub fn w_density(&self) -> &PiecewisePdf {
        &self.w_pdf
    }

    pub fn s_density(&self) -> &PiecewisePdf {
        &self.s_pdf
    }

    /// `f_U ⊕ f_V` by numerical convolution; absent when `Δ = 0`.
    pub fn w_oracle(&self) -> Option<&PiecewisePdf> {
        self.w_oracle.as_ref()
    }

    pub fn s_oracle(&self) -> &PiecewisePdf {
        &self.s_oracle
    }

    pub fn w_cdf(&self) -> &TabulatedCdf {
        &self.w_cdf
    }

    pub fn s_cdf(&self) -> &TabulatedCdf {
        &self.s_cdf
    }

    pub fn pdf_w(&self, w: f64) -> f64 {
        self.w_pdf.eval(w)
    }

    pub fn pdf_s(&self, s: f64) -> f64 {
        self.s_pdf.eval(s)
    }

    pub fn diagnostics(&self) -> &MarginalDiagnostics {
        &self.diagnostics
    }
}

fn u_density(delta: f64) -> Result<PiecewisePdf> {
    PiecewisePdf::new(
        "u",
        vec![Branch::closed_form(0.0, delta * delta, move |u| closed_form::pdf_u(delta, u))],
        &[],
        1e-9,
    )
}

fn v_density(side: f64) -> Result<PiecewisePdf> {
    PiecewisePdf::new(
        "v",
        vec![Branch::closed_form(0.0, side * side / 4.0, move |v| closed_form::pdf_v(side, v))],
        &[],
        1e-9,
    )
}

fn w_closed_form(side: f64, delta: f64) -> Result<PiecewisePdf> {
    let d2 = delta * delta;
    let quarter = side * side / 4.0;
    let f = move |w| closed_form::pdf_w(side, delta, w);
    PiecewisePdf::new(
        "w",
        vec![
            Branch::closed_form(0.0, d2, f),
            Branch::closed_form(d2, quarter, f),
            Branch::closed_form(quarter, d2 + quarter, f),
        ],
        &[],
        1e-6,
    )
}

fn z_squared_density(side: f64, delta: f64) -> Result<PiecewisePdf> {
    let f = move |u| closed_form::pdf_z_squared(side, delta, u);
    let branches = if delta > 0.0 {
        vec![
            Branch::closed_form(0.0, delta * delta, f),
            Branch::closed_form(delta * delta, (side - delta).powi(2), f),
            Branch::closed_form((side - delta).powi(2), (side + delta).powi(2), f),
        ]
    } else {
        vec![Branch::closed_form(0.0, side * side, f)]
    };
    PiecewisePdf::new("z2", branches, &[], 1e-9)
}

/// `f_S` with closed forms below `D²/4` and the oracle table above.
fn s_with_tabulated_tail(side: f64, delta: f64, oracle: &PiecewisePdf) -> Result<PiecewisePdf> {
    let quarter = side * side / 4.0;
    let top = (side + delta).powi(2) + quarter;
    let tail = oracle.clone();
    let tail_branch = Branch::new(quarter, top, BranchSource::Tabulated, Arc::new(move |s| tail.eval(s)));
    let mut branches = if delta > 0.0 {
        let d2 = delta * delta;
        vec![
            Branch::closed_form(0.0, d2, move |s| closed_form::pdf_s_branch1(side, delta, s)),
            Branch::closed_form(d2, quarter, move |s| closed_form::pdf_s_branch2(side, delta, s)),
        ]
    } else {
        vec![Branch::closed_form(0.0, quarter, move |s| closed_form::pdf_s_ideal(side, s))]
    };
    branches.push(tail_branch);
    PiecewisePdf::new("s", branches, oracle.knots(), 1e-5)
}

/// Both SNR marginals for one geometry.
#[derive(Clone, Debug)]
pub struct SnrMarginals {
    geom: SystemGeometry,
    laws: Arc<SquaredDistanceLaws>,
    bob: PiecewisePdf,
    eve: PiecewisePdf,
}

impl SnrMarginals {
    pub fn new(geom: &SystemGeometry) -> Result<Self> {
        Self::from_laws(geom, Arc::new(SquaredDistanceLaws::for_geometry(geom)?))
    }

    /// Reuses distance laws built for the same `(D, Δ)`.
    pub fn from_laws(geom: &SystemGeometry, laws: Arc<SquaredDistanceLaws>) -> Result<Self> {
        if laws.side != geom.side_length() || laws.delta != geom.error_halfwidth() {
            return Err(Error::InvalidGeometry(format!(
                "distance laws built for D={}, delta={} do not match D={}, delta={}",
                laws.side,
                laws.delta,
                geom.side_length(),
                geom.error_halfwidth()
            )));
        }
        let bob = bob_snr_density(geom, &laws)?;
        let eve = eve_snr_density(geom, &laws)?;
        Ok(Self {
            geom: *geom,
            laws,
            bob,
            eve,
        })
    }

    pub fn with_gamma_bar(&self, gamma_bar: f64) -> Result<Self> {
        Self::from_laws(&self.geom.with_gamma_bar(gamma_bar)?, Arc::clone(&self.laws))
    }

    pub fn geometry(&self) -> &SystemGeometry {
        &self.geom
    }

    pub fn laws(&self) -> &Arc<SquaredDistanceLaws> {
        &self.laws
    }

    pub fn diagnostics(&self) -> &MarginalDiagnostics {
        &self.laws.diagnostics
    }

    pub fn bob_density(&self) -> &PiecewisePdf {
        &self.bob
    }

    pub fn eve_density(&self) -> &PiecewisePdf {
        &self.eve
    }

    pub fn bob_pdf(&self, gamma: f64) -> f64 {
        self.bob.eval(gamma)
    }

    pub fn eve_pdf(&self, gamma: f64) -> f64 {
        self.eve.eval(gamma)
    }

    /// `P(γ_B ≤ γ) = P(W ≥ γ̄/γ - h²)`; clamps to 0 and 1 outside the support.
    pub fn bob_cdf(&self, gamma: f64) -> f64 {
        let (lo, hi) = self.geom.bob_snr_bounds();
        if gamma <= lo {
            0.0
        } else if gamma >= hi {
            1.0
        } else {
            self.laws.w_cdf.survival(self.distance_of(gamma))
        }
    }

    pub fn eve_cdf(&self, gamma: f64) -> f64 {
        let (lo, hi) = self.geom.eve_snr_bounds();
        if gamma <= lo {
            0.0
        } else if gamma >= hi {
            1.0
        } else {
            self.laws.s_cdf.survival(self.distance_of(gamma))
        }
    }

    fn distance_of(&self, gamma: f64) -> f64 {
        self.geom.gamma_bar() / gamma - self.geom.height().powi(2)
    }
}

fn snr_of(geom: &SystemGeometry, distance: f64) -> f64 {
    geom.gamma_bar() / (geom.height().powi(2) + distance)
}

/// Maps a branch of a distance density into SNR space.
fn mapped(geom: &SystemGeometry, f: DensityFn) -> DensityFn {
    let (gb, h2) = (geom.gamma_bar(), geom.height().powi(2));
    Arc::new(move |gamma: f64| gb / (gamma * gamma) * f(gb / gamma - h2))
}

fn snr_branches(
    geom: &SystemGeometry,
    distance: &PiecewisePdf,
    closed: impl Fn(usize) -> Option<DensityFn>,
) -> Vec<Branch> {
    distance
        .branches()
        .iter()
        .enumerate()
        .rev()
        .map(|(i, b)| {
            let lo = snr_of(geom, b.hi);
            let hi = snr_of(geom, b.lo);
            match (b.source, closed(i)) {
                (BranchSource::ClosedForm, Some(f)) => Branch::new(lo, hi, BranchSource::ClosedForm, f),
                _ => Branch::new(lo, hi, b.source, mapped(geom, b.function())),
            }
        })
        .collect()
}

fn bob_snr_density(geom: &SystemGeometry, laws: &SquaredDistanceLaws) -> Result<PiecewisePdf> {
    let (d, h, delta, gb) = (geom.side_length(), geom.height(), geom.error_halfwidth(), geom.gamma_bar());
    let branches = snr_branches(geom, &laws.w_pdf, |_| {
        let f: DensityFn = Arc::new(move |g| closed_form::pdf_gamma_bob(d, h, delta, gb, g));
        Some(f)
    });
    let knots: Vec<f64> = laws.w_pdf.knots().iter().map(|w| snr_of(geom, *w)).collect();
    PiecewisePdf::new("gamma_b", branches, &knots, 1e-6)
}

fn eve_snr_density(geom: &SystemGeometry, laws: &SquaredDistanceLaws) -> Result<PiecewisePdf> {
    let (d, h, delta, gb) = (geom.side_length(), geom.height(), geom.error_halfwidth(), geom.gamma_bar());
    let tail = laws.s_pdf.branches().len() - 1;
    let branches = snr_branches(geom, &laws.s_pdf, |i| {
        if i == tail {
            return None;
        }
        let f: DensityFn = Arc::new(move |g| closed_form::pdf_gamma_eve_upper(d, h, delta, gb, g).unwrap_or(0.0));
        Some(f)
    });
    let knots: Vec<f64> = laws.s_pdf.knots().iter().map(|s| snr_of(geom, *s)).collect();
    PiecewisePdf::new("gamma_e", branches, &knots, 1e-5)
}
