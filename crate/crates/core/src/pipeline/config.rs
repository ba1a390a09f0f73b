//! Run configuration: JSON file with the tariff, the peak window, the
//! calendar filter, and optional synthetic-generation parameters.
//! Omitted fields fall back to the case-study defaults (55/20/15 cents,
//! window 7–23, weekdays only).

use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::pipeline::synth::SynthSpec;
use crate::tariff::Tariff;
use crate::units::Price;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TariffConfig {
    #[serde(default = "default_peak_price")]
    pub peak_price_cents: f64,
    #[serde(default = "default_offpeak_price")]
    pub offpeak_price_cents: f64,
    /// Daily amortized capital cost of jointly procured storage.
    #[serde(default = "default_shared_capital")]
    pub shared_capital_cents: f64,
    /// Per-consumer daily capital costs; defaults to the shared figure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_consumer_capital_cents: Option<Vec<f64>>,
}

fn default_peak_price() -> f64 {
    55.0
}
fn default_offpeak_price() -> f64 {
    20.0
}
fn default_shared_capital() -> f64 {
    15.0
}

impl Default for TariffConfig {
    fn default() -> Self {
        TariffConfig {
            peak_price_cents: default_peak_price(),
            offpeak_price_cents: default_offpeak_price(),
            shared_capital_cents: default_shared_capital(),
            per_consumer_capital_cents: None,
        }
    }
}

/// Daily hours whose consumption counts as peak, `[start, end)`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct PeakWindow {
    #[serde(default = "default_window_start")]
    pub start_hour: u8,
    #[serde(default = "default_window_end")]
    pub end_hour: u8,
}

fn default_window_start() -> u8 {
    7
}
fn default_window_end() -> u8 {
    23
}

impl Default for PeakWindow {
    fn default() -> Self {
        PeakWindow {
            start_hour: 7,
            end_hour: 23,
        }
    }
}

/// Which game(s) a simulation run covers.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq, Default)]
pub enum ScenarioSelect {
    #[serde(rename = "1")]
    RealizedPooling,
    #[serde(rename = "2")]
    JointInvestment,
    #[serde(rename = "both")]
    #[default]
    Both,
}

impl ScenarioSelect {
    pub fn includes_realized(self) -> bool {
        matches!(self, ScenarioSelect::RealizedPooling | ScenarioSelect::Both)
    }

    pub fn includes_expected(self) -> bool {
        matches!(self, ScenarioSelect::JointInvestment | ScenarioSelect::Both)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RunConfig {
    #[serde(default)]
    pub tariff: TariffConfig,
    #[serde(default)]
    pub peak_window: PeakWindow,
    #[serde(default = "default_true")]
    pub exclude_weekends: bool,
    /// Explicit holiday dates to exclude; no calendar is hardcoded.
    #[serde(default)]
    pub holidays: Vec<NaiveDate>,
    #[serde(default)]
    pub scenario: ScenarioSelect,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSpec>,
}

fn default_true() -> bool {
    true
}
fn default_seed() -> u64 {
    42
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            tariff: TariffConfig::default(),
            peak_window: PeakWindow::default(),
            exclude_weekends: true,
            holidays: Vec::new(),
            scenario: ScenarioSelect::Both,
            seed: default_seed(),
            synth: None,
        }
    }
}

impl RunConfig {
    /// Checks every invariant and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut violations = Vec::new();
        let w = &self.peak_window;
        if !(w.start_hour < w.end_hour && w.end_hour <= 24) {
            violations.push(format!(
                "peak window must satisfy 0 <= start < end <= 24, got {}..{}",
                w.start_hour, w.end_hour
            ));
        }
        let t = &self.tariff;
        if !(t.peak_price_cents > t.offpeak_price_cents && t.offpeak_price_cents > 0.0) {
            violations.push(format!(
                "prices must satisfy peak > offpeak > 0, got peak={} offpeak={}",
                t.peak_price_cents, t.offpeak_price_cents
            ));
        } else {
            let delta = t.peak_price_cents - t.offpeak_price_cents;
            let mut check_capital = |label: &str, v: f64| {
                if v < 0.0 {
                    violations.push(format!("{label} capital cost {v} is negative"));
                } else if v > delta {
                    violations.push(format!(
                        "{label} capital cost {v} exceeds the arbitrage price {delta}: \
                         storage can never pay for itself"
                    ));
                }
            };
            check_capital("shared", t.shared_capital_cents);
            if let Some(per) = &t.per_consumer_capital_cents {
                for (i, &v) in per.iter().enumerate() {
                    check_capital(&format!("consumer {i}"), v);
                }
            }
        }
        if let Some(synth) = &self.synth {
            if let Err(Error::Validation(mut v)) = synth.validate() {
                violations.append(&mut v);
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(violations))
        }
    }

    /// Builds the tariff for a population of `n`, defaulting per-consumer
    /// capital costs to the shared figure.
    pub fn tariff(&self, n: usize) -> Result<Tariff> {
        let t = &self.tariff;
        let per: Vec<Price> = match &t.per_consumer_capital_cents {
            Some(v) => {
                if v.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: v.len(),
                    });
                }
                v.iter().map(|&c| Price::from_cents(c)).collect()
            }
            None => vec![Price::from_cents(t.shared_capital_cents); n],
        };
        Tariff::new(
            Price::from_cents(t.peak_price_cents),
            Price::from_cents(t.offpeak_price_cents),
            Price::from_cents(t.shared_capital_cents),
            per,
        )
    }

    /// SHA-256 of the canonical JSON rendering, for provenance.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Loads and validates a config file; omitted fields get defaults.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)?;
    let cfg: RunConfig = serde_json::from_str(&text)?;
    cfg.validate()?;
    Ok(cfg)
}
