//! Experiment configuration: a TOML file plus `key=value` overrides.
//!
//! Powers and SNRs are given in dB/dBm here and converted to linear units
//! exactly once, in [`ScenarioConfig::geometry`].

use std::fmt;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::{db_to_linear, dbm_to_watts, effective_snr, SystemGeometry};
use crate::montecarlo::{FixedAntenna, MIN_PAIR_SAMPLES, MIN_SOP_SAMPLES};
use crate::strategy::StrategyRegistry;

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub sweep: SweepSpec,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub side_length_m: f64,
    pub height_m: f64,
    pub error_halfwidth_m: f64,
    /// Effective transmit SNR `γ̄` in dB. Ignored when `transmit_power_dbm` is set.
    pub snr_db: f64,
    pub transmit_power_dbm: Option<f64>,
    pub noise_power_dbm: f64,
    pub antenna_gain_db: f64,
    pub rate_threshold: f64,
    /// Copula correlation; estimated from simulated pairs when absent.
    pub rho: Option<f64>,
    pub fixed_radiator_x_m: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            side_length_m: 20.0,
            height_m: 5.0,
            error_halfwidth_m: 1.0,
            snr_db: 30.0,
            transmit_power_dbm: None,
            noise_power_dbm: -90.0,
            antenna_gain_db: 0.0,
            rate_threshold: 0.5,
            rho: None,
            fixed_radiator_x_m: 0.0,
        }
    }
}

impl ScenarioConfig {
    /// Linear effective SNR `γ̄`.
    pub fn gamma_bar(&self) -> Result<f64> {
        match self.transmit_power_dbm {
            Some(ps) => effective_snr(
                db_to_linear(self.antenna_gain_db),
                dbm_to_watts(ps),
                dbm_to_watts(self.noise_power_dbm),
            ),
            None => Ok(db_to_linear(self.snr_db)),
        }
    }

    pub fn geometry(&self) -> Result<SystemGeometry> {
        SystemGeometry::new(self.side_length_m, self.height_m, self.error_halfwidth_m, self.gamma_bar()?)
    }

    pub fn antenna(&self) -> FixedAntenna {
        FixedAntenna {
            x: self.fixed_radiator_x_m,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq, Hash)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    SnrDb,
    RateThreshold,
    Rho,
    Delta,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::SnrDb => "snr_db",
            SweepAxis::RateThreshold => "rate_threshold",
            SweepAxis::Rho => "rho",
            SweepAxis::Delta => "delta",
        }
    }

    /// Default grid when the config gives neither `values` nor `range`.
    pub fn default_values(&self) -> Vec<f64> {
        match self {
            SweepAxis::SnrDb => (0..13).map(|k| -10.0 + 5.0 * k as f64).collect(),
            SweepAxis::RateThreshold => (0..17).map(|k| 0.25 * k as f64).collect(),
            SweepAxis::Rho => (0..20).map(|k| 0.05 * k as f64).collect(),
            SweepAxis::Delta => vec![0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0],
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl AxisRange {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        (0..self.count)
            .map(|k| self.min + (self.max - self.min) * k as f64 / (self.count - 1) as f64)
            .collect()
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Option<Vec<f64>>,
    pub range: Option<AxisRange>,
    pub methods: Vec<String>,
    pub mc_samples: usize,
    pub seed: u64,
    pub node_count: usize,
    /// Pairs simulated for each `ρ` estimate.
    pub rho_samples: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            axis: SweepAxis::SnrDb,
            values: None,
            range: None,
            methods: ["chebyshev", "adaptive-reference", "independence", "mc-pinching", "mc-fixed"]
                .map(String::from)
                .to_vec(),
            mc_samples: crate::montecarlo::DEFAULT_SAMPLES,
            seed: 1,
            node_count: crate::sop::DEFAULT_NODES,
            rho_samples: 100_000,
        }
    }
}

impl SweepSpec {
    pub fn axis_values(&self) -> Vec<f64> {
        match (&self.values, &self.range) {
            (Some(v), _) => v.clone(),
            (None, Some(r)) => r.values(),
            (None, None) => self.axis.default_values(),
        }
    }
}

impl SweepConfig {
    pub fn from_toml_str(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("<file>", e.message().to_string()))?;
        for (key, value) in overrides {
            apply_override(&mut table, key, value)?;
        }
        let config: SweepConfig = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
            let path = e.path().to_string();
            Error::config(if path == "." { "<root>".to_string() } else { path }, e.into_inner().to_string())
        })?;
        config.check()?;
        Ok(config)
    }

    pub fn from_file(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text, overrides)
    }

    /// Field-level checks that do not need the physics.
    ///
    /// Geometry constraints (`Δ ≤ D/2` and friends) are left to
    /// [`crate::sweep::validate_scenario`] so they can be reported rather
    /// than aborting the parse.
    pub fn check(&self) -> Result<()> {
        let s = &self.scenario;
        for (path, v) in [
            ("scenario.side_length_m", s.side_length_m),
            ("scenario.height_m", s.height_m),
            ("scenario.error_halfwidth_m", s.error_halfwidth_m),
            ("scenario.snr_db", s.snr_db),
            ("scenario.noise_power_dbm", s.noise_power_dbm),
            ("scenario.antenna_gain_db", s.antenna_gain_db),
            ("scenario.rate_threshold", s.rate_threshold),
            ("scenario.fixed_radiator_x_m", s.fixed_radiator_x_m),
        ] {
            if !v.is_finite() {
                return Err(Error::config(path, format!("must be finite, got {v}")));
            }
        }
        if let Some(p) = s.transmit_power_dbm {
            if !p.is_finite() {
                return Err(Error::config("scenario.transmit_power_dbm", format!("must be finite, got {p}")));
            }
        }
        if s.rate_threshold < 0.0 {
            return Err(Error::config("scenario.rate_threshold", "must be >= 0"));
        }
        if let Some(rho) = s.rho {
            if !(rho.abs() < 1.0) {
                return Err(Error::config("scenario.rho", format!("must satisfy |rho| < 1, got {rho}")));
            }
        }

        let w = &self.sweep;
        if w.values.is_some() && w.range.is_some() {
            return Err(Error::config("sweep.values", "give either `values` or `range`, not both"));
        }
        if let Some(r) = &w.range {
            if r.count == 0 {
                return Err(Error::config("sweep.range.count", "must be >= 1"));
            }
        }
        let values = w.axis_values();
        if values.is_empty() {
            return Err(Error::config("sweep.values", "must not be empty"));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::config(format!("sweep.values[{i}]"), format!("must be finite, got {v}")));
        }
        if let Some(i) = values.windows(2).position(|p| p[1] <= p[0]) {
            return Err(Error::config(format!("sweep.values[{}]", i + 1), "axis values must be strictly increasing"));
        }
        match w.axis {
            SweepAxis::RateThreshold if values[0] < 0.0 => {
                return Err(Error::config("sweep.values[0]", "rate thresholds must be >= 0"));
            }
            SweepAxis::Rho => {
                if let Some(i) = values.iter().position(|v| !(v.abs() < 1.0)) {
                    return Err(Error::config(format!("sweep.values[{i}]"), "rho values must satisfy |rho| < 1"));
                }
            }
            SweepAxis::Delta if values[0] < 0.0 => {
                return Err(Error::config("sweep.values[0]", "error half-widths must be >= 0"));
            }
            _ => {}
        }

        if w.methods.is_empty() {
            return Err(Error::config("sweep.methods", "must name at least one method"));
        }
        let registry = StrategyRegistry::with_defaults();
        for (i, m) in w.methods.iter().enumerate() {
            if registry.get(m).is_none() {
                return Err(Error::config(
                    format!("sweep.methods[{i}]"),
                    format!("unknown method `{m}`; known: {}", registry.names().join(", ")),
                ));
            }
            if w.methods[..i].contains(m) {
                return Err(Error::config(format!("sweep.methods[{i}]"), format!("duplicate method `{m}`")));
            }
        }
        if w.node_count < 1 {
            return Err(Error::config("sweep.node_count", "must be >= 1"));
        }
        if w.mc_samples < MIN_SOP_SAMPLES {
            return Err(Error::config("sweep.mc_samples", format!("must be >= {MIN_SOP_SAMPLES}")));
        }
        if w.rho_samples < MIN_PAIR_SAMPLES {
            return Err(Error::config("sweep.rho_samples", format!("must be >= {MIN_PAIR_SAMPLES}")));
        }
        Ok(())
    }
}

/// Parses `key=value` as given on the command line.
pub fn parse_override(raw: &str) -> Result<(String, String)> {
    let (k, v) = raw
        .split_once('=')
        .ok_or_else(|| Error::config(raw, "override must look like key=value"))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(Error::config(raw, "override key is empty"));
    }
    Ok((k.to_string(), v.trim().to_string()))
}

/// Sets a dotted `key` in `table`. The value is read as a TOML literal when
/// possible (`3`, `0.5`, `[1, 2]`, `"x"`) and as a bare string otherwise.
fn apply_override(table: &mut toml::Table, key: &str, value: &str) -> Result<()> {
    let parsed = format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    let mut cursor = table;
    for (i, part) in parts.iter().enumerate() {
        if i == parts.len() - 1 {
            cursor.insert((*part).to_string(), parsed);
            return Ok(());
        }
        let entry = cursor
            .entry((*part).to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| Error::config(parts[..=i].join("."), "override path crosses a non-table value"))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = SweepConfig::from_toml_str("", &[]).unwrap();
        assert_eq!(c.scenario, ScenarioConfig::default());
        assert_eq!(c.sweep.axis, SweepAxis::SnrDb);
        assert_eq!(c.sweep.axis_values().len(), 13);
        let g = c.scenario.geometry().unwrap();
        assert!((g.gamma_bar() - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn transmit_power_path_converts_once() {
        let c = SweepConfig::from_toml_str("[scenario]\ntransmit_power_dbm = 30.0\n", &[]).unwrap();
        assert!((c.scenario.gamma_bar().unwrap() / 1e12 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overrides_win_and_parse_literals() {
        let text = "[scenario]\nrate_threshold = 0.5\n[sweep]\naxis = \"rho\"\n";
        let over = vec![
            parse_override("scenario.rate_threshold=1.5").unwrap(),
            parse_override("sweep.values=[0.1, 0.2]").unwrap(),
            parse_override("sweep.axis=rho").unwrap(),
        ];
        let c = SweepConfig::from_toml_str(text, &over).unwrap();
        assert_eq!(c.scenario.rate_threshold, 1.5);
        assert_eq!(c.sweep.axis_values(), vec![0.1, 0.2]);
        assert!(parse_override("novalue").is_err());
    }

    #[test]
    fn errors_carry_field_paths() {
        let err = SweepConfig::from_toml_str("[sweep]\naxis = \"banana\"\n", &[]).unwrap_err();
        assert!(matches!(&err, Error::Config { path, .. } if path == "sweep.axis"), "{err}");
        let err = SweepConfig::from_toml_str("[scenario]\nheight = 3.0\n", &[]).unwrap_err();
        assert!(matches!(&err, Error::Config { .. }), "{err}");
        let err = SweepConfig::from_toml_str("[sweep]\nvalues = [1.0, 1.0]\n", &[]).unwrap_err();
        assert!(matches!(&err, Error::Config { path, .. } if path == "sweep.values[1]"), "{err}");
        let err = SweepConfig::from_toml_str("[sweep]\nmethods = [\"chebyshev\", \"euler\"]\n", &[]).unwrap_err();
        assert!(matches!(&err, Error::Config { path, .. } if path == "sweep.methods[1]"), "{err}");
        let err = SweepConfig::from_toml_str("[sweep]\naxis = \"rho\"\nvalues = [0.5, 1.0]\n", &[]).unwrap_err();
        assert!(matches!(&err, Error::Config { path, .. } if path == "sweep.values[1]"), "{err}");
        let err = SweepConfig::from_toml_str("[sweep]\nmc_samples = 10\n", &[]).unwrap_err();
        assert!(matches!(&err, Error::Config { path, .. } if path == "sweep.mc_samples"), "{err}");
    }

    #[test]
    fn range_expands_inclusively() {
        let c = SweepConfig::from_toml_str("[sweep]\nrange = { min = 0.0, max = 1.0, count = 5 }\n", &[]).unwrap();
        assert_eq!(c.sweep.axis_values(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn oversized_delta_parses_but_geometry_rejects() {
        let c = SweepConfig::from_toml_str("[scenario]\nerror_halfwidth_m = 12.0\n", &[]).unwrap();
        assert!(c.scenario.geometry().is_err());
    }
}
