//! Realized and expected daily storage cost, and the coalition value
//! functions of the two cooperative games.
//!
//! The daily cost of operating capacity `C` against peak consumption `x`
//! is
//!
//! ```text
//! J(x, C) = capital·C + peak·(x − C)⁺ + offpeak·min{C, x}
//! ```
//!
//! capital outlay, peak-price purchases of the uncovered remainder, and
//! off-peak purchases that fill the storage actually used. `J` is
//! subadditive and positively homogeneous, which is what makes pooling
//! profitable and the proportional machinery exact.

use num::rational::Ratio;

use crate::coalition::Coalition;
use crate::dist::{EmpiricalDistribution, JointSample};
use crate::error::{Error, Result};
use crate::tariff::Tariff;
use crate::units::{Energy, Frac, Money, Price, FIXED_SCALE};

/// Installed storage capacity per consumer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CapacityProfile {
    capacities: Vec<Energy>,
}

impl CapacityProfile {
    pub fn new(capacities: Vec<Energy>) -> CapacityProfile {
        CapacityProfile { capacities }
    }

    pub fn len(&self) -> usize {
        self.capacities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.capacities.is_empty()
    }

    pub fn get(&self, consumer: usize) -> Result<Energy> {
        self.capacities
            .get(consumer)
            .copied()
            .ok_or(Error::UnknownConsumer {
                index: consumer,
                n: self.capacities.len(),
            })
    }

    pub fn as_slice(&self) -> &[Energy] {
        &self.capacities
    }

    /// Coalition capacity is the sum of member capacities.
    pub fn coalition_capacity(&self, s: Coalition) -> Result<Energy> {
        s.members().map(|i| self.get(i)).sum()
    }
}

/// J(x, C) for one storage system with the given daily capital cost.
pub fn realized_cost(x: Energy, capacity: Energy, capital_cost: Price, t: &Tariff) -> Money {
    capital_cost.times(capacity)
        + t.peak_price().times(x.surplus_over(capacity))
        + t.offpeak_price().times(capacity.min(x))
}

/// Realized cost of a coalition pooling already-owned storage: member
/// capital costs plus the joint operating cost at the aggregate
/// consumption and aggregate capacity. For a singleton this reduces to
/// [`realized_cost`] with that consumer's capital cost.
pub fn coalition_realized_cost_u(
    s: Coalition,
    row: &[Energy],
    caps: &CapacityProfile,
    t: &Tariff,
) -> Result<Money> {
    s.require_nonempty()?;
    if row.len() != caps.len() {
        return Err(Error::DimensionMismatch {
            expected: caps.len(),
            got: row.len(),
        });
    }
    let mut capital = Money::zero();
    let mut x_s = Energy::ZERO;
    let mut c_s = Energy::ZERO;
    for i in s.members() {
        if i >= row.len() {
            return Err(Error::UnknownConsumer {
                index: i,
                n: row.len(),
            });
        }
        let c_i = caps.get(i)?;
        capital += t.capital_of(i)?.times(c_i);
        x_s += row[i];
        c_s += c_i;
    }
    Ok(capital
        + t.peak_price().times(x_s.surplus_over(c_s))
        + t.offpeak_price().times(c_s.min(x_s)))
}

/// E J(x, C) under the empirical measure of `d`, exact. Uses the
/// rewriting J = capital·C + offpeak·x + (peak − offpeak)·(x − C)⁺, whose
/// sample mean needs one tail scan.
pub fn expected_cost(
    d: &EmpiricalDistribution,
    capacity: Energy,
    capital_cost: Price,
    t: &Tariff,
) -> Money {
    let n = d.len() as i128;
    let mean_surplus = Ratio::new(d.surplus_sum_raw(capacity), n * FIXED_SCALE as i128);
    capital_cost.times(capacity)
        + t.offpeak_price().times_kwh(d.mean())
        + t.arbitrage_price().times_kwh(mean_surplus)
}

/// Value of a coalition in the joint-investment game: optimal capacity by
/// the quantile rule and the optimal expected cost.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoalitionValue {
    pub coalition: Coalition,
    /// Optimal capacity: the γ-quantile of the aggregate distribution.
    pub capacity: Energy,
    /// v(S) = offpeak·E[x_S] + capital·E[x_S | x_S ≥ C*_S], the
    /// closed-form optimal expected cost. Held exactly so that the
    /// allocation budget-balance identity is exact.
    pub value: Money,
    /// E J(x_S, C*_S) evaluated directly under the empirical measure.
    pub direct_value: Money,
    /// direct_value − value ≥ 0: the discretization slack that appears
    /// because a step CDF cannot hit γ exactly. Zero whenever it can.
    pub quantile_gap: Money,
}

/// Evaluates the joint-investment game value v(S): the quantile-rule
/// capacity and the closed-form optimal expected cost, together with the
/// direct evaluation used as a cross-check.
pub fn coalition_expected_value_v(
    s: Coalition,
    joint: &JointSample,
    t: &Tariff,
) -> Result<CoalitionValue> {
    s.require_nonempty()?;
    let dist = joint.aggregate(s)?;
    coalition_value_from_dist(s, &dist, t)
}

/// Same as [`coalition_expected_value_v`] but takes the aggregate
/// distribution directly, for callers that already built it.
pub fn coalition_value_from_dist(
    s: Coalition,
    dist: &EmpiricalDistribution,
    t: &Tariff,
) -> Result<CoalitionValue> {
    let gamma = t.gamma_shared();
    let capital = t.shared_capital();
    let capacity = dist.quantile(gamma);
    let tail_mean = dist.conditional_mean_tail(capacity)?;
    let value = t.offpeak_price().times_kwh(dist.mean()) + capital.times_kwh(tail_mean);
    let direct_value = expected_cost(dist, capacity, capital, t);
    let quantile_gap = direct_value - value;
    debug_assert!(!quantile_gap.is_negative(), "closed form exceeds minimum");
    Ok(CoalitionValue {
        coalition: s,
        capacity,
        value,
        direct_value,
        quantile_gap,
    })
}

/// γ-level used by the value function, exposed for reports.
pub fn value_gamma(t: &Tariff) -> Frac {
    t.gamma_shared()
}
