//! Runtime registry of outage-probability evaluators.
//!
//! Each evaluation route (the three quadratures and the Monte Carlo modes)
//! implements [`SopStrategy`] and is registered under its method tag. The
//! sweep harness resolves method names from the configuration through
//! [`StrategyRegistry::get`].

use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::SystemGeometry;
use crate::marginals::SnrMarginals;
use crate::montecarlo::{self, FixedAntenna, McMode};
use crate::sop::{self, SopMethod, SopRequest};

/// Everything a strategy may need for one sweep point.
#[derive(Clone, Copy)]
pub struct EvalContext<'a> {
    pub geometry: &'a SystemGeometry,
    /// Present whenever a selected strategy reports `needs_marginals`.
    pub marginals: Option<&'a SnrMarginals>,
    pub rate_threshold: f64,
    pub rho: Option<f64>,
    pub node_count: usize,
    pub mc_samples: usize,
    pub seed: u64,
    pub antenna: FixedAntenna,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub sop: f64,
    pub std_error: Option<f64>,
    pub diagnostics: String,
}

pub trait SopStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    /// Whether the result depends on the copula correlation.
    fn needs_rho(&self) -> bool {
        false
    }

    fn needs_marginals(&self) -> bool {
        false
    }

    fn evaluate(&self, ctx: &EvalContext<'_>) -> Result<Outcome>;
}

/// One of the quadrature routes over the analytic marginals.
pub struct Analytic(pub SopMethod);

impl SopStrategy for Analytic {
    fn name(&self) -> &'static str {
        self.0.tag()
    }

    fn needs_rho(&self) -> bool {
        self.0 != SopMethod::Independence
    }

    fn needs_marginals(&self) -> bool {
        true
    }

    fn evaluate(&self, ctx: &EvalContext<'_>) -> Result<Outcome> {
        let marginals = ctx
            .marginals
            .ok_or_else(|| Error::Domain(format!("method `{}` needs analytic marginals", self.name())))?;
        let rho = if self.needs_rho() {
            ctx.rho
                .ok_or_else(|| Error::Domain(format!("method `{}` needs a copula correlation", self.name())))?
        } else {
            0.0
        };
        let req = SopRequest::new(*ctx.geometry, ctx.rate_threshold, rho, ctx.node_count, self.0)?;
        let result = sop::evaluate(&req, marginals)?;
        Ok(Outcome {
            sop: result.probability,
            std_error: None,
            diagnostics: result.diagnostics(),
        })
    }
}

/// Monte Carlo simulation in one of its modes.
pub struct MonteCarlo {
    name: &'static str,
    mode: McMode,
}

impl MonteCarlo {
    pub fn new(name: &'static str, mode: McMode) -> Self {
        Self { name, mode }
    }
}

impl SopStrategy for MonteCarlo {
    fn name(&self) -> &'static str {
        self.name
    }

    fn evaluate(&self, ctx: &EvalContext<'_>) -> Result<Outcome> {
        let est = montecarlo::mc_sop_with(ctx.geometry, ctx.rate_threshold, ctx.mc_samples, ctx.seed, self.mode, ctx.antenna)?;
        let mut diagnostics = format!("samples={};seed={};mode={}", est.samples, est.seed, est.mode);
        if self.mode == McMode::FixedAntenna {
            diagnostics.push_str(&format!(";radiator_x={}", ctx.antenna.x));
        }
        Ok(Outcome {
            sop: est.sop,
            std_error: Some(est.std_error),
            diagnostics,
        })
    }
}

/// Ordered collection of strategies keyed by name.
#[derive(Default)]
pub struct StrategyRegistry {
    entries: Vec<Box<dyn SopStrategy>>,
}

impl StrategyRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// `chebyshev`, `adaptive-reference`, `independence`, `mc-pinching`,
    /// `mc-fixed`, `mc-independent`.
    pub fn with_defaults() -> Self {
        let mut r = Self::new();
        for method in [SopMethod::Chebyshev, SopMethod::AdaptiveReference, SopMethod::Independence] {
            r.register(Box::new(Analytic(method))).expect("default names are unique");
        }
        for (name, mode) in [
            ("mc-pinching", McMode::Pinching),
            ("mc-fixed", McMode::FixedAntenna),
            ("mc-independent", McMode::ForcedIndependent),
        ] {
            r.register(Box::new(MonteCarlo::new(name, mode))).expect("default names are unique");
        }
        r
    }

    pub fn register(&mut self, strategy: Box<dyn SopStrategy>) -> Result<()> {
        if self.get(strategy.name()).is_some() {
            return Err(Error::DuplicateMethod(strategy.name().to_string()));
        }
        self.entries.push(strategy);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&dyn SopStrategy> {
        self.entries.iter().find(|s| s.name() == name).map(|s| s.as_ref())
    }

    pub fn resolve(&self, name: &str) -> Result<&dyn SopStrategy> {
        self.get(name).ok_or_else(|| Error::UnknownMethod(name.to_string()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|s| s.name()).collect()
    }
}

impl fmt::Debug for StrategyRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}
