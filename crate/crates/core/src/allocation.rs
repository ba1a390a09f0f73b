//! Closed-form core cost allocations and the benefit decompositions.
//!
//! Scenario I (pooling of already-owned storage): each consumer pays its
//! own capital cost plus, when the pooled system saturates, the peak rate
//! on its own overshoot and the off-peak rate on its capacity; when the
//! pool has slack, just the off-peak rate on its consumption. A consumer
//! whose spare capacity absorbs others' overflow can come out net
//! negative — that is the payment it receives for lending capacity.
//!
//! Scenario II (joint investment): the expected cost is split as
//! ζ_i = offpeak·E[x_i] + capital·E[x_i | x_N ≥ C*_N], and realized daily
//! costs are split proportionally to ζ. Both splits are exactly budget
//! balanced under the empirical measure.

use chrono::NaiveDate;

use crate::coalition::Coalition;
use crate::cost::CapacityProfile;
use crate::dist::JointSample;
use crate::error::{Error, Result};
use crate::planner::CapacityPlan;
use crate::tariff::Tariff;
use crate::units::{Energy, Frac, Money};

/// Which rule produced an allocation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AllocationKind {
    /// Realized-cost split of the pooling game (ξ).
    ScenarioOne,
    /// Expected-cost split of the joint-investment game (ζ).
    ScenarioTwoExpected,
    /// Realized daily proportional split ρ for the given day index.
    ScenarioTwoRealized { day: usize },
}

/// Per-consumer cost shares plus provenance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AllocationResult {
    pub kind: AllocationKind,
    pub shares: Vec<Money>,
    pub date: Option<NaiveDate>,
    /// Proportional weights, present only for realized scenario-II splits.
    pub beta: Option<Vec<Frac>>,
}

impl AllocationResult {
    pub fn total(&self) -> Money {
        self.shares.iter().copied().sum()
    }
}

/// ξ: the realized-cost allocation of the pooling game. Branches on
/// whether the grand coalition's aggregate consumption reaches its
/// aggregate capacity (ties on the saturated branch).
pub fn allocation_scenario1(
    row: &[Energy],
    caps: &CapacityProfile,
    t: &Tariff,
) -> Result<AllocationResult> {
    if row.len() != caps.len() {
        return Err(Error::DimensionMismatch {
            expected: caps.len(),
            got: row.len(),
        });
    }
    if row.is_empty() {
        return Err(Error::EmptyCoalition);
    }
    let x_n: Energy = row.iter().copied().sum();
    let c_n: Energy = caps.as_slice().iter().copied().sum();
    let saturated = x_n >= c_n;
    let shares = row
        .iter()
        .enumerate()
        .map(|(i, &x_i)| -> Result<Money> {
            let c_i = caps.get(i)?;
            let capital = t.capital_of(i)?.times(c_i);
            Ok(if saturated {
                // π_i C_i + π_h (x_i − C_i) + π_ℓ C_i, signed difference
                let diff = t.peak_price().times(x_i) - t.peak_price().times(c_i);
                capital + diff + t.offpeak_price().times(c_i)
            } else {
                capital + t.offpeak_price().times(x_i)
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AllocationResult {
        kind: AllocationKind::ScenarioOne,
        shares,
        date: None,
        beta: None,
    })
}

/// The exact slack u(S) − Σ_{i∈S} ξ_i predicted by the core argument:
/// π_δ(C_S − x_S)⁺ on the saturated branch, π_δ(x_S − C_S)⁺ otherwise.
pub fn scenario1_core_slack(
    s: Coalition,
    row: &[Energy],
    caps: &CapacityProfile,
    t: &Tariff,
) -> Result<Money> {
    s.require_nonempty()?;
    let x_n: Energy = row.iter().copied().sum();
    let c_n: Energy = caps.as_slice().iter().copied().sum();
    let mut x_s = Energy::ZERO;
    let mut c_s = Energy::ZERO;
    for i in s.members() {
        if i >= row.len() {
            return Err(Error::UnknownConsumer {
                index: i,
                n: row.len(),
            });
        }
        x_s += row[i];
        c_s += caps.get(i)?;
    }
    let delta = t.arbitrage_price();
    Ok(if x_n >= c_n {
        delta.times(c_s.surplus_over(x_s))
    } else {
        delta.times(x_s.surplus_over(c_s))
    })
}

/// ζ: the expected-cost allocation of the joint-investment game, taken
/// under the empirical measure of the planning sample. Σζ equals the
/// grand-coalition value exactly.
pub fn allocation_scenario2_expected(
    joint: &JointSample,
    plan: &CapacityPlan,
    t: &Tariff,
) -> Result<AllocationResult> {
    let members: Vec<usize> = joint.members().members().collect();
    if members.len() != plan.consumer_count() {
        return Err(Error::DimensionMismatch {
            expected: plan.consumer_count(),
            got: members.len(),
        });
    }
    let capital = t.shared_capital();
    let shares = members
        .iter()
        .map(|&i| -> Result<Money> {
            let mean = joint.mean_of(i)?;
            let cond = joint.conditional_mean_given_aggregate(i, plan.coalition_cstar)?;
            Ok(t.offpeak_price().times_kwh(mean) + capital.times_kwh(cond))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AllocationResult {
        kind: AllocationKind::ScenarioTwoExpected,
        shares,
        date: None,
        beta: None,
    })
}

/// ρ: splits one day's realized grand-coalition cost in proportion to ζ.
/// Budget balanced by construction: the weights sum to one exactly.
pub fn allocation_scenario2_realized(
    zeta: &[Money],
    realized_day_cost: Money,
    day: usize,
) -> Result<AllocationResult> {
    let total: Money = zeta.iter().copied().sum();
    if total <= Money::zero() {
        return Err(Error::ZeroTotalExpectedCost);
    }
    let beta: Vec<Frac> = zeta
        .iter()
        .map(|&z| z.ratio_to(total).expect("total checked positive"))
        .collect();
    let shares: Vec<Money> = beta
        .iter()
        .map(|&b| realized_day_cost.mul_frac(b))
        .collect();
    Ok(AllocationResult {
        kind: AllocationKind::ScenarioTwoRealized { day },
        shares,
        date: None,
        beta: Some(beta),
    })
}

/// Arithmetic mean of the shares over a run of days, per consumer.
pub fn average_realized_allocation(history: &[AllocationResult]) -> Result<Vec<Money>> {
    let first = history.first().ok_or(Error::EmptyHistory)?;
    let n = first.shares.len();
    let mut sums = vec![Money::zero(); n];
    for a in history {
        if a.shares.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.shares.len(),
            });
        }
        for (acc, &s) in sums.iter_mut().zip(&a.shares) {
            *acc += s;
        }
    }
    Ok(sums
        .into_iter()
        .map(|s| s.div_count(history.len()))
        .collect())
}

/// Which game a benefit report refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenefitScenario {
    RealizedPooling,
    JointInvestment,
}

/// Total and per-consumer savings from cooperating instead of operating
/// alone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenefitReport {
    pub scenario: BenefitScenario,
    /// Σ (stand-alone cost) − (coalition cost).
    pub total: Money,
    /// Stand-alone cost minus allocated share, per consumer.
    pub per_consumer: Vec<Money>,
}

/// Benefit of pooling already-owned storage, by its closed formulas:
/// total from the operating-cost difference, per consumer from the core
/// slack of the singleton.
pub fn benefit_scenario1(
    row: &[Energy],
    caps: &CapacityProfile,
    t: &Tariff,
) -> Result<BenefitReport> {
    if row.len() != caps.len() {
        return Err(Error::DimensionMismatch {
            expected: caps.len(),
            got: row.len(),
        });
    }
    if row.is_empty() {
        return Err(Error::EmptyCoalition);
    }
    let x_n: Energy = row.iter().copied().sum();
    let c_n: Energy = caps.as_slice().iter().copied().sum();
    let peak = t.peak_price();
    let offpeak = t.offpeak_price();
    let delta = t.arbitrage_price();

    let mut surplus_terms = Money::zero();
    let mut min_terms = Money::zero();
    let mut per_consumer = Vec::with_capacity(row.len());
    for (i, &x_i) in row.iter().enumerate() {
        let c_i = caps.get(i)?;
        surplus_terms += peak.times(x_i.surplus_over(c_i));
        min_terms += offpeak.times(c_i.min(x_i));
        per_consumer.push(if x_n >= c_n {
            delta.times(c_i.surplus_over(x_i))
        } else {
            delta.times(x_i.surplus_over(c_i))
        });
    }
    let total = surplus_terms - peak.times(x_n.surplus_over(c_n)) + min_terms
        - offpeak.times(c_n.min(x_n));
    Ok(BenefitReport {
        scenario: BenefitScenario::RealizedPooling,
        total,
        per_consumer,
    })
}

/// Benefit of joint investment, by its closed formulas: capital cost
/// times the drop in conditional tail expectations.
pub fn benefit_scenario2(
    joint: &JointSample,
    plan: &CapacityPlan,
    zeta: &[Money],
    t: &Tariff,
) -> Result<BenefitReport> {
    let members: Vec<usize> = joint.members().members().collect();
    if members.len() != plan.consumer_count() || zeta.len() != members.len() {
        return Err(Error::DimensionMismatch {
            expected: plan.consumer_count(),
            got: members.len().min(zeta.len()),
        });
    }
    let capital = t.shared_capital();
    let mut per_consumer = Vec::with_capacity(members.len());
    let mut own_tail_sum = Money::zero();
    for (k, &i) in members.iter().enumerate() {
        let own_dist = joint.marginal(i)?;
        let own_tail = own_dist.conditional_mean_tail(plan.per_consumer_cstar[k])?;
        let pooled_tail = joint.conditional_mean_given_aggregate(i, plan.coalition_cstar)?;
        own_tail_sum += capital.times_kwh(own_tail);
        per_consumer.push(capital.times_kwh(own_tail) - capital.times_kwh(pooled_tail));
    }
    let grand_tail = joint
        .aggregate(joint.members())?
        .conditional_mean_tail(plan.coalition_cstar)?;
    let total = own_tail_sum - capital.times_kwh(grand_tail);
    Ok(BenefitReport {
        scenario: BenefitScenario::JointInvestment,
        total,
        per_consumer,
    })
}
