//! Parameter sweeps, scenario validation and density dumps.
//!
//! Work that depends only on `(D, Δ)` — the squared-distance laws and the
//! copula correlation estimate — is built once per distinct `Δ` and shared
//! by every sweep point that uses it. Rows are computed in parallel and
//! emitted in `(axis index, method)` order.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::config::{ScenarioConfig, SweepAxis, SweepConfig};
use crate::copula::estimate_rho;
use crate::error::{Error, Result};
use crate::geometry::{linear_to_db, SystemGeometry};
use crate::marginals::{closed_form, write_two_column, SnrMarginals, SquaredDistanceLaws};
use crate::montecarlo::mc_pairs;
use crate::strategy::{EvalContext, StrategyRegistry};

pub const CSV_HEADER: [&str; 8] = [
    "axis_name",
    "axis_value",
    "method",
    "sop",
    "std_error",
    "rho",
    "rho_source",
    "diagnostics",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RhoSource {
    Given,
    Estimated,
}

impl RhoSource {
    pub fn tag(&self) -> &'static str {
        match self {
            RhoSource::Given => "given",
            RhoSource::Estimated => "estimated",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub axis_name: &'static str,
    pub axis_value: f64,
    pub method: String,
    /// `None` when the method failed at this point; the reason is in
    /// `diagnostics` as `error=...`.
    pub sop: Option<f64>,
    pub std_error: Option<f64>,
    pub rho: Option<f64>,
    pub rho_source: Option<RhoSource>,
    pub diagnostics: String,
}

#[derive(Clone, Debug)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub methods: Vec<String>,
    pub rows: Vec<SweepRow>,
    /// Human-readable notes for standard error.
    pub notes: Vec<String>,
}

impl SweepTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.axis_name.to_string(),
                r.axis_value.to_string(),
                r.method.clone(),
                cell(r.sop),
                cell(r.std_error),
                cell(r.rho),
                r.rho_source.map(|s| s.tag().to_string()).unwrap_or_default(),
                r.diagnostics.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// `(axis_value, sop)` for one method, in axis order.
    pub fn column(&self, method: &str) -> Vec<(f64, Option<f64>)> {
        self.rows
            .iter()
            .filter(|r| r.method == method)
            .map(|r| (r.axis_value, r.sop))
            .collect()
    }

    pub fn failed_rows(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.sop.is_none())
    }
}

/// Scenario with the axis value applied.
fn scenario_at(base: &ScenarioConfig, axis: SweepAxis, value: f64) -> ScenarioConfig {
    let mut s = base.clone();
    match axis {
        SweepAxis::SnrDb => {
            s.snr_db = value;
            s.transmit_power_dbm = None;
        }
        SweepAxis::RateThreshold => s.rate_threshold = value,
        SweepAxis::Rho => s.rho = Some(value),
        SweepAxis::Delta => s.error_halfwidth_m = value,
    }
    s
}

struct Point {
    axis_value: f64,
    scenario: ScenarioConfig,
    geometry: Result<SystemGeometry>,
    rho: Option<(f64, RhoSource)>,
    rho_error: Option<String>,
    marginals: Option<Result<SnrMarginals>>,
}

fn delta_key(delta: f64) -> u64 {
    delta.to_bits()
}

/// Normal-scores `ρ` from `samples` simulated pairs. Depends only on
/// `(D, Δ)` and the seed: ranks are unchanged by `γ̄` and `h`.
pub fn estimated_rho(geometry: &SystemGeometry, samples: usize, seed: u64) -> Result<f64> {
    estimate_rho(&mc_pairs(geometry, samples, seed)?)
}

fn prepare_points(config: &SweepConfig, registry: &StrategyRegistry, notes: &mut Vec<String>) -> Vec<Point> {
    let axis = config.sweep.axis;
    let methods: Vec<_> = config.sweep.methods.iter().filter_map(|m| registry.get(m)).collect();
    let want_marginals = methods.iter().any(|m| m.needs_marginals());

    let mut points: Vec<Point> = config
        .sweep
        .axis_values()
        .into_iter()
        .map(|v| {
            let scenario = scenario_at(&config.scenario, axis, v);
            let geometry = scenario.geometry();
            Point {
                axis_value: v,
                rho: scenario.rho.map(|r| (r, RhoSource::Given)),
                scenario,
                geometry,
                rho_error: None,
                marginals: None,
            }
        })
        .collect();

    // One law set and one ρ estimate per distinct Δ.
    let mut by_delta: BTreeMap<u64, SystemGeometry> = BTreeMap::new();
    for p in &points {
        if let Ok(g) = &p.geometry {
            by_delta.entry(delta_key(g.error_halfwidth())).or_insert(*g);
        }
    }
    let need_rho = points.iter().any(|p| p.rho.is_none());
    let shared: BTreeMap<u64, (Option<Result<Arc<SquaredDistanceLaws>>>, Option<Result<f64>>)> = by_delta
        .par_iter()
        .map(|(k, g)| {
            let laws = want_marginals.then(|| SquaredDistanceLaws::for_geometry(g).map(Arc::new));
            let rho = need_rho.then(|| estimated_rho(g, config.sweep.rho_samples, config.sweep.seed));
            (*k, (laws, rho))
        })
        .collect();

    for (k, g) in &by_delta {
        let (laws, rho) = &shared[k];
        match rho {
            Some(Ok(r)) => notes.push(format!(
                "rho estimated for delta={} from {} pairs (seed {}): {r}",
                g.error_halfwidth(),
                config.sweep.rho_samples,
                config.sweep.seed
            )),
            Some(Err(e)) => notes.push(format!("rho estimation failed for delta={}: {e}", g.error_halfwidth())),
            None => {}
        }
        if let Some(Ok(l)) = laws {
            if l.diagnostics().has_fallback() {
                notes.push(format!(
                    "closed-form branch replaced by convolution oracle for delta={}: {}",
                    g.error_halfwidth(),
                    l.diagnostics().fallback_summary()
                ));
            }
        }
    }

    points.par_iter_mut().for_each(|p| {
        let Ok(g) = &p.geometry else { return };
        let (laws, rho) = &shared[&delta_key(g.error_halfwidth())];
        if p.rho.is_none() {
            match rho {
                Some(Ok(r)) => p.rho = Some((*r, RhoSource::Estimated)),
                Some(Err(e)) => p.rho_error = Some(e.to_string()),
                None => {}
            }
        }
        p.marginals = laws.as_ref().map(|l| match l {
            Ok(l) => SnrMarginals::from_laws(g, Arc::clone(l)),
            Err(e) => Err(Error::Domain(format!("marginals unavailable: {e}"))),
        });
    });
    points
}

fn evaluate_row(config: &SweepConfig, registry: &StrategyRegistry, point: &Point, method: &str) -> SweepRow {
    let mut row = SweepRow {
        axis_name: config.sweep.axis.name(),
        axis_value: point.axis_value,
        method: method.to_string(),
        sop: None,
        std_error: None,
        rho: point.rho.map(|r| r.0),
        rho_source: point.rho.map(|r| r.1),
        diagnostics: String::new(),
    };
    let outcome = (|| {
        let strategy = registry.resolve(method)?;
        let geometry = point.geometry.as_ref().map_err(|e| Error::InvalidGeometry(e.to_string()))?;
        let marginals = match (&point.marginals, strategy.needs_marginals()) {
            (Some(Ok(m)), _) => Some(m),
            (Some(Err(e)), true) => return Err(Error::Domain(e.to_string())),
            _ => None,
        };
        if strategy.needs_rho() && point.rho.is_none() {
            let why = point.rho_error.clone().unwrap_or_else(|| "no rho available".into());
            return Err(Error::Domain(why));
        }
        let ctx = EvalContext {
            geometry,
            marginals,
            rate_threshold: point.scenario.rate_threshold,
            rho: point.rho.map(|r| r.0),
            node_count: config.sweep.node_count,
            mc_samples: config.sweep.mc_samples,
            seed: config.sweep.seed,
            antenna: point.scenario.antenna(),
        };
        strategy.evaluate(&ctx)
    })();
    match outcome {
        Ok(o) => {
            let clamped = o.sop.clamp(0.0, 1.0);
            row.diagnostics = o.diagnostics;
            if clamped != o.sop {
                row.diagnostics.push_str(&format!(";clamped_from={}", o.sop));
            }
            row.sop = Some(clamped);
            row.std_error = o.std_error;
        }
        Err(e) => row.diagnostics = format!("error={e}"),
    }
    row
}

/// Evaluates every configured method at every axis value.
///
/// A method that fails at one point produces a row with an empty `sop`
/// and `error=...` in its diagnostics; the sweep itself only fails on an
/// unknown method name.
pub fn run_sweep(config: &SweepConfig, registry: &StrategyRegistry) -> Result<SweepTable> {
    for m in &config.sweep.methods {
        registry.resolve(m)?;
    }
    let mut notes = Vec::new();
    let points = prepare_points(config, registry, &mut notes);
    let methods = &config.sweep.methods;
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|i| (0..methods.len()).map(move |j| (i, j)))
        .collect();
    let rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|&(i, j)| evaluate_row(config, registry, &points[i], &methods[j]))
        .collect();
    for r in rows.iter().filter(|r| r.sop.is_none()) {
        notes.push(format!("{}={} {}: {}", r.axis_name, r.axis_value, r.method, r.diagnostics));
    }
    Ok(SweepTable {
        axis: config.sweep.axis,
        methods: methods.clone(),
        rows,
        notes,
    })
}

/// Sweep restricted to the Monte Carlo methods. When the configuration
/// selects none, all Monte Carlo modes are run.
pub fn run_mc(config: &SweepConfig, registry: &StrategyRegistry) -> Result<SweepTable> {
    let mut cfg = config.clone();
    let is_mc = |m: &str| registry.get(m).is_some_and(|s| !s.needs_marginals());
    cfg.sweep.methods.retain(|m| is_mc(m));
    if cfg.sweep.methods.is_empty() {
        cfg.sweep.methods = registry
            .names()
            .into_iter()
            .filter(|m| is_mc(m))
            .map(String::from)
            .collect();
    }
    run_sweep(&cfg, registry)
}

/// Pre-flight report; never fails, but records hard problems in `errors`.
#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub lines: Vec<String>,
    pub errors: Vec<String>,
    pub max_residual: Option<f64>,
    pub fallback: Option<String>,
    pub rho_estimate: Option<f64>,
    pub independence_limit: bool,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    fn info(&mut self, line: String) {
        self.lines.push(line);
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.lines {
            writeln!(f, "info: {l}")?;
        }
        for e in &self.errors {
            writeln!(f, "error: {e}")?;
        }
        write!(f, "status: {}", if self.is_ok() { "ok" } else { "failed" })
    }
}

pub fn validate_scenario(config: &SweepConfig) -> ValidationReport {
    let mut report = ValidationReport::default();
    let s = &config.scenario;
    let geometry = match s.geometry() {
        Ok(g) => g,
        Err(e) => {
            let half = s.side_length_m / 2.0;
            if s.error_halfwidth_m > half {
                report.errors.push(format!(
                    "scenario.error_halfwidth_m: constraint 0 <= delta <= D/2 violated (delta={}, D/2={half})",
                    s.error_halfwidth_m
                ));
            } else {
                report.errors.push(format!("scenario: {e}"));
            }
            return report;
        }
    };
    report.info(format!(
        "geometry D={} h={} delta={} gamma_bar={} ({:.3} dB) rate_threshold={}",
        geometry.side_length(),
        geometry.height(),
        geometry.error_halfwidth(),
        geometry.gamma_bar(),
        linear_to_db(geometry.gamma_bar()),
        s.rate_threshold
    ));
    if geometry.is_ideal() {
        report.independence_limit = true;
        report.info(
            "independence-limit mode active: delta = 0, so Bob's and Eve's SNRs share no random variable and the copula reduces to independence".into(),
        );
    }
    report.info(format!("support W = (0, {}]", geometry.bob_distance_max()));
    report.info(format!("support S = (0, {}]", geometry.eve_distance_max()));
    let (b_lo, b_hi) = geometry.bob_snr_bounds();
    let (e_lo, e_hi) = geometry.eve_snr_bounds();
    report.info(format!("support gamma_B = [{b_lo}, {b_hi}]"));
    report.info(format!("support gamma_E = [{e_lo}, {e_hi}]"));

    if config.sweep.axis == SweepAxis::Delta {
        for (i, v) in config.sweep.axis_values().iter().enumerate() {
            if *v > geometry.side_length() / 2.0 {
                report.errors.push(format!(
                    "sweep.values[{i}]: constraint 0 <= delta <= D/2 violated (delta={v}, D/2={})",
                    geometry.side_length() / 2.0
                ));
            }
        }
    }

    match s.rho {
        Some(r) => {
            report.info(format!("rho given: {r}"));
        }
        None => match estimated_rho(&geometry, config.sweep.rho_samples, config.sweep.seed) {
            Ok(r) => {
                report.rho_estimate = Some(r);
                report.info(format!(
                    "rho estimated: {r} from {} pairs (seed {})",
                    config.sweep.rho_samples, config.sweep.seed
                ));
            }
            Err(e) => report.errors.push(format!("rho estimation: {e}")),
        },
    }

    match SnrMarginals::new(&geometry) {
        Ok(m) => {
            let d = m.diagnostics();
            for line in d.to_string().lines() {
                report.info(line.to_string());
            }
            let bob_r = m.bob_density().normalization_residual();
            let eve_r = m.eve_density().normalization_residual();
            report.info(format!("normalization gamma_B residual={bob_r:.3e}"));
            report.info(format!("normalization gamma_E residual={eve_r:.3e}"));
            let max = d.residuals.iter().map(|r| r.1).chain([bob_r, eve_r]).fold(0.0, f64::max);
            report.max_residual = Some(max);
            report.fallback = Some(d.fallback_summary());
            report.info(format!("fallback flags: {}", d.fallback_summary()));
        }
        Err(e) => report.errors.push(format!("marginals: {e}")),
    }
    report
}

/// Densities and CDFs that can be dumped for plotting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DumpTarget {
    Bob,
    Eve,
    BobCdf,
    EveCdf,
    W,
    S,
    WOracle,
    SOracle,
    Z,
    X,
}

impl DumpTarget {
    pub const ALL: [DumpTarget; 10] = [
        DumpTarget::Bob,
        DumpTarget::Eve,
        DumpTarget::BobCdf,
        DumpTarget::EveCdf,
        DumpTarget::W,
        DumpTarget::S,
        DumpTarget::WOracle,
        DumpTarget::SOracle,
        DumpTarget::Z,
        DumpTarget::X,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            DumpTarget::Bob => "bob",
            DumpTarget::Eve => "eve",
            DumpTarget::BobCdf => "bob-cdf",
            DumpTarget::EveCdf => "eve-cdf",
            DumpTarget::W => "w",
            DumpTarget::S => "s",
            DumpTarget::WOracle => "w-oracle",
            DumpTarget::SOracle => "s-oracle",
            DumpTarget::Z => "z",
            DumpTarget::X => "x",
        }
    }
}

impl FromStr for DumpTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|t| t.tag() == s).ok_or_else(|| {
            let known: Vec<_> = Self::ALL.iter().map(|t| t.tag()).collect();
            Error::Domain(format!("unknown density `{s}`; known: {}", known.join(", ")))
        })
    }
}

/// Writes `value,<density|cdf>` on `points` evenly spaced abscissae.
pub fn dump_pdf<W: Write>(target: DumpTarget, scenario: &ScenarioConfig, points: usize, out: W) -> Result<()> {
    let g = scenario.geometry()?;
    let (d, delta) = (g.side_length(), g.error_halfwidth());
    match target {
        DumpTarget::Z => return write_two_column(out, "density", points, -(d + delta), d + delta, |z| closed_form::pdf_z(d, delta, z)),
        DumpTarget::X => return write_two_column(out, "density", points, -d, d, |x| closed_form::pdf_x_separation(d, x)),
        _ => {}
    }
    let m = SnrMarginals::new(&g)?;
    let laws = m.laws();
    match target {
        DumpTarget::Bob => m.bob_density().write_csv(out, points),
        DumpTarget::Eve => m.eve_density().write_csv(out, points),
        DumpTarget::BobCdf => {
            let (lo, hi) = g.bob_snr_bounds();
            write_two_column(out, "cdf", points, lo, hi, |x| m.bob_cdf(x))
        }
        DumpTarget::EveCdf => {
            let (lo, hi) = g.eve_snr_bounds();
            write_two_column(out, "cdf", points, lo, hi, |x| m.eve_cdf(x))
        }
        DumpTarget::W => laws.w_density().write_csv(out, points),
        DumpTarget::S => laws.s_density().write_csv(out, points),
        DumpTarget::WOracle => match laws.w_oracle() {
            Some(o) => o.write_csv(out, points),
            None => Err(Error::Domain("no convolution oracle for W when delta = 0 (W = y1^2 exactly)".into())),
        },
        DumpTarget::SOracle => laws.s_oracle().write_csv(out, points),
        DumpTarget::Z | DumpTarget::X => unreachable!("handled above"),
    }
}
