//! The run report: one in-memory structure with a versioned JSON
//! rendering and an aligned-text rendering generated from the same
//! values. All monetary and energy quantities are carried as fixed-format
//! decimal strings so the two renderings agree and serialization is
//! byte-deterministic.

use serde::{Deserialize, Serialize};

use crate::pipeline::RunConfig;

pub const REPORT_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RunReport {
    pub report_version: u32,
    pub seed: u64,
    pub config_hash: String,
    pub config: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub simulations: Vec<SimulationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benefits: Option<BenefitSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationSection>,
}

/// Capacity plan: per-consumer stand-alone optima, the pooled optimum,
/// and the expected-cost split.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PlanSection {
    /// Critical fractile, exact (e.g. "4/7").
    pub gamma: String,
    pub no_storage_regime: bool,
    pub consumers: Vec<PlanRow>,
    pub coalition: CoalitionPlanRow,
    /// Empirical CDFs per consumer, aggregate last.
    pub cdfs: Vec<CdfSeries>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PlanRow {
    pub id: String,
    pub cstar_kwh: String,
    pub jstar_cents: String,
    pub zeta_cents: String,
    /// Stand-alone minus allocated: J* − ζ.
    pub benefit_cents: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CoalitionPlanRow {
    pub cstar_kwh: String,
    pub jstar_cents: String,
    /// Σζ; equals jstar_cents exactly.
    pub zeta_sum_cents: String,
    pub quantile_gap_cents: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CdfSeries {
    pub id: String,
    pub points: Vec<CdfPoint>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CdfPoint {
    pub kwh: String,
    pub cdf: String,
}

/// Daily allocations for one scenario, with the running-average
/// trajectory used for convergence plots.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SimulationSection {
    /// "1" (realized pooling) or "2" (joint investment).
    pub scenario: String,
    pub consumers: Vec<String>,
    pub days_simulated: usize,
    pub rows: Vec<DayRow>,
    /// Running mean of the shares after each day.
    pub trajectory: Vec<TrajectoryRow>,
    pub average_shares_cents: Vec<String>,
    /// Every day's shares summed to the day total exactly.
    pub budget_balanced_every_day: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DayRow {
    pub day: usize,
    pub date: String,
    pub total_cents: String,
    pub shares_cents: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TrajectoryRow {
    pub day: usize,
    pub average_shares_cents: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BenefitSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint_investment: Option<BenefitTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realized_pooling: Option<BenefitTable>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BenefitTable {
    pub per_consumer: Vec<BenefitRow>,
    pub total_cents: String,
    /// total / Σ stand-alone, six decimals.
    pub relative_reduction: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BenefitRow {
    pub id: String,
    pub standalone_cents: String,
    pub share_cents: String,
    pub benefit_cents: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct VerificationSection {
    pub checks: Vec<CheckRow>,
    pub all_passed: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CheckRow {
    pub name: String,
    pub passed: bool,
    /// "exhaustive" or "sampled(n, seed)".
    pub mode: String,
    pub cases: u64,
    pub worst_slack_cents: String,
    pub max_tolerance_cents: String,
    pub detail: String,
}

impl RunReport {
    /// Pretty JSON with a trailing newline; field order is fixed by the
    /// struct definitions, so equal reports serialize byte-identically.
    pub fn to_json(&self) -> crate::Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> crate::Result<RunReport> {
        Ok(serde_json::from_str(s)?)
    }

    /// Aligned-text rendering of the same values.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let push = |out: &mut String, line: String| {
            out.push_str(&line);
            out.push('\n');
        };
        push(&mut out, format!("storage-coop report v{}", self.report_version));
        push(&mut out, format!("seed: {}", self.seed));
        push(&mut out, format!("config: sha256:{}", self.config_hash));

        if let Some(plan) = &self.plan {
            push(&mut out, String::new());
            push(
                &mut out,
                format!(
                    "== capacity plan (gamma = {}{}) ==",
                    plan.gamma,
                    if plan.no_storage_regime {
                        ", no-storage regime"
                    } else {
                        ""
                    }
                ),
            );
            push(
                &mut out,
                format!(
                    "{:<10} {:>14} {:>16} {:>16} {:>14}",
                    "consumer", "C*_kWh", "J*_cents", "zeta_cents", "benefit_cents"
                ),
            );
            for r in &plan.consumers {
                push(
                    &mut out,
                    format!(
                        "{:<10} {:>14} {:>16} {:>16} {:>14}",
                        r.id, r.cstar_kwh, r.jstar_cents, r.zeta_cents, r.benefit_cents
                    ),
                );
            }
            let c = &plan.coalition;
            push(
                &mut out,
                format!(
                    "{:<10} {:>14} {:>16} {:>16} {:>14}",
                    "coalition", c.cstar_kwh, c.jstar_cents, c.zeta_sum_cents, ""
                ),
            );
            push(
                &mut out,
                format!("quantile gap: {} cents", c.quantile_gap_cents),
            );
        }

        for sim in &self.simulations {
            push(&mut out, String::new());
            push(
                &mut out,
                format!(
                    "== daily allocations, scenario {} ({} days, budget balanced: {}) ==",
                    sim.scenario, sim.days_simulated, sim.budget_balanced_every_day
                ),
            );
            let header = std::iter::once("day  date      ".to_string())
                .chain(sim.consumers.iter().map(|c| format!("{c:>14}")))
                .chain(std::iter::once(format!("{:>16}", "total_cents")))
                .collect::<String>();
            push(&mut out, header);
            for row in &sim.rows {
                let line = std::iter::once(format!("{:<4} {}", row.day, row.date))
                    .chain(row.shares_cents.iter().map(|s| format!("{s:>14}")))
                    .chain(std::iter::once(format!("{:>16}", row.total_cents)))
                    .collect::<String>();
                push(&mut out, line);
            }
            if !sim.average_shares_cents.is_empty() {
                let line = std::iter::once("mean           ".to_string())
                    .chain(sim.average_shares_cents.iter().map(|s| format!("{s:>14}")))
                    .collect::<String>();
                push(&mut out, line);
            }
        }

        if let Some(benefits) = &self.benefits {
            for (label, table) in [
                ("joint investment (expected)", &benefits.joint_investment),
                ("realized pooling (day mean)", &benefits.realized_pooling),
            ] {
                if let Some(t) = table {
                    push(&mut out, String::new());
                    push(&mut out, format!("== benefit of cooperation: {label} =="));
                    push(
                        &mut out,
                        format!(
                            "{:<10} {:>18} {:>16} {:>14}",
                            "consumer", "standalone_cents", "share_cents", "benefit_cents"
                        ),
                    );
                    for r in &t.per_consumer {
                        push(
                            &mut out,
                            format!(
                                "{:<10} {:>18} {:>16} {:>14}",
                                r.id, r.standalone_cents, r.share_cents, r.benefit_cents
                            ),
                        );
                    }
                    push(
                        &mut out,
                        format!(
                            "total: {} cents ({} relative reduction)",
                            t.total_cents, t.relative_reduction
                        ),
                    );
                }
            }
        }

        if let Some(verification) = &self.verification {
            push(&mut out, String::new());
            push(
                &mut out,
                format!(
                    "== verification ({}) ==",
                    if verification.all_passed {
                        "all passed"
                    } else {
                        "FAILURES"
                    }
                ),
            );
            for c in &verification.checks {
                push(
                    &mut out,
                    format!(
                        "[{}] {:<38} mode={:<20} cases={:<8} worst_slack={} tol={} {}",
                        if c.passed { "pass" } else { "FAIL" },
                        c.name,
                        c.mode,
                        c.cases,
                        c.worst_slack_cents,
                        c.max_tolerance_cents,
                        c.detail
                    ),
                );
            }
        }
        out
    }
}
