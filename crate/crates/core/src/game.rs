//! Verification harness for the two cooperative games: materializes the
//! value function over all coalitions, checks subadditivity over every
//! disjoint pair, checks core membership of an allocation against every
//! coalition, and issues constructive nonemptiness certificates.
//!
//! Scenario I checks are exact. Scenario II checks carry a per-coalition
//! tolerance: a step CDF cannot always hit the critical fractile exactly,
//! and the resulting discretization slack is computable. Every report
//! carries the tolerance it used, so a genuine violation is
//! distinguishable from discretization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::allocation::{
    allocation_scenario1, allocation_scenario2_expected, scenario1_core_slack,
};
use crate::coalition::Coalition;
use crate::cost::CapacityProfile;
use crate::dist::JointSample;
use crate::error::{Error, Result};
use crate::planner::plan_joint_investment;
use crate::tariff::Tariff;
use crate::units::{Energy, Money};

/// Which game a materialized instance came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioLabel {
    /// Realized-cost pooling game u.
    ScenarioI,
    /// Expected-cost joint-investment game v.
    ScenarioII,
}

/// Exhaustive-enumeration cap for the realized game (cheap evaluations).
pub const EXHAUSTIVE_CAP_REALIZED: usize = 16;
/// Exhaustive cap for the expected game: every coalition needs a quantile
/// optimization over the sample.
pub const EXHAUSTIVE_CAP_EXPECTED: usize = 10;

/// A cooperative game with its value function evaluated for all 2^n − 1
/// nonempty coalitions, indexed by bitmask.
#[derive(Clone, Debug)]
pub struct GameInstance {
    pub n: usize,
    pub label: ScenarioLabel,
    /// values[mask]; entry 0 is zero and unused.
    pub values: Vec<Money>,
    /// Per-coalition check tolerance ε_quantile (all zero for Scenario I):
    /// arbitrage price × CDF jump at C*_S × E[x_S].
    pub tolerances: Vec<Money>,
    /// Per-coalition discretization gap of the closed-form value below
    /// the directly evaluated optimum (all zero for Scenario I).
    pub gaps: Vec<Money>,
}

impl GameInstance {
    pub fn value(&self, s: Coalition) -> Money {
        self.values[s.mask() as usize]
    }

    pub fn grand(&self) -> Coalition {
        Coalition::grand(self.n)
    }
}

/// Evaluates the realized pooling game u(S) for every nonempty coalition.
pub fn materialize_scenario1(
    row: &[Energy],
    caps: &CapacityProfile,
    t: &Tariff,
) -> Result<GameInstance> {
    let n = row.len();
    if n > EXHAUSTIVE_CAP_REALIZED {
        return Err(Error::TooManyPlayers {
            n,
            max: EXHAUSTIVE_CAP_REALIZED,
        });
    }
    if caps.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: caps.len(),
        });
    }
    let size = 1usize << n;
    let mut values = vec![Money::zero(); size];
    // subset-sum DP over masks for consumption, capacity, capital
    let mut x = vec![Energy::ZERO; size];
    let mut c = vec![Energy::ZERO; size];
    let mut capital = vec![Money::zero(); size];
    for mask in 1..size {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        x[mask] = x[rest] + row[low];
        c[mask] = c[rest] + caps.get(low)?;
        capital[mask] = capital[rest] + t.capital_of(low)?.times(caps.get(low)?);
        values[mask] = capital[mask]
            + t.peak_price().times(x[mask].surplus_over(c[mask]))
            + t.offpeak_price().times(c[mask].min(x[mask]));
    }
    Ok(GameInstance {
        n,
        label: ScenarioLabel::ScenarioI,
        values,
        tolerances: vec![Money::zero(); size],
        gaps: vec![Money::zero(); size],
    })
}

/// Evaluates the joint-investment game v(S) for every nonempty coalition,
/// with per-coalition tolerances and discretization gaps. Coalition
/// evaluations are independent and run in parallel.
pub fn materialize_scenario2(joint: &JointSample, t: &Tariff) -> Result<GameInstance> {
    let n = joint.members().len();
    if n > EXHAUSTIVE_CAP_EXPECTED {
        return Err(Error::TooManyPlayers {
            n,
            max: EXHAUSTIVE_CAP_EXPECTED,
        });
    }
    let size = 1usize << n;
    let masks: Vec<Coalition> = Coalition::all_nonempty(n).collect();
    let evaluated: Vec<(Coalition, Money, Money, Money)> = masks
        .par_iter()
        .map(|&s| -> Result<(Coalition, Money, Money, Money)> {
            let dist = joint.aggregate(s)?;
            let v = crate::cost::coalition_value_from_dist(s, &dist, t)?;
            let jump = dist.jump_at(v.capacity);
            let tol = t
                .arbitrage_price()
                .times_kwh(jump.scale_kwh(dist.mean()));
            Ok((s, v.value, tol, v.quantile_gap))
        })
        .collect::<Result<_>>()?;
    let mut values = vec![Money::zero(); size];
    let mut tolerances = vec![Money::zero(); size];
    let mut gaps = vec![Money::zero(); size];
    for (s, v, tol, gap) in evaluated {
        let i = s.mask() as usize;
        values[i] = v;
        tolerances[i] = tol;
        gaps[i] = gap;
    }
    Ok(GameInstance {
        n,
        label: ScenarioLabel::ScenarioII,
        values,
        tolerances,
        gaps,
    })
}

/// A disjoint pair whose joint value exceeded the split value beyond
/// tolerance.
#[derive(Clone, Debug)]
pub struct PairViolation {
    pub left: Coalition,
    pub right: Coalition,
    pub joint_value: Money,
    pub split_value: Money,
    pub tolerance: Money,
}

/// Outcome of the disjoint-pair subadditivity scan.
#[derive(Clone, Debug)]
pub struct SubadditivityReport {
    /// All (S, T ⊆ complement of S) visits with S nonempty, T included
    /// empty: 3^n − 2^n. Asserted by the enumeration itself.
    pub enumerated: u64,
    /// Pairs with both sides nonempty, each unordered pair twice.
    pub checked: u64,
    pub violations: Vec<PairViolation>,
    /// min over pairs of split − joint (negative means a raw violation).
    pub worst_slack: Money,
    pub passed: bool,
}

/// Checks v(S) + v(T) ≥ v(S ∪ T) for every disjoint nonempty pair,
/// within the per-pair tolerance gap(S) + gap(T).
pub fn check_subadditivity(g: &GameInstance) -> SubadditivityReport {
    let n = g.n;
    let results: Vec<(u64, u64, Option<Money>, Vec<PairViolation>)> =
        Coalition::all_nonempty(n)
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&s| {
                let mut enumerated = 0u64;
                let mut checked = 0u64;
                let mut worst: Option<Money> = None;
                let mut violations = Vec::new();
                for tset in s.complement_within(n).subsets() {
                    enumerated += 1;
                    if tset.is_empty() {
                        continue;
                    }
                    checked += 1;
                    let joint = g.value(s.union(tset));
                    let split = g.value(s) + g.value(tset);
                    let slack = split - joint;
                    if worst.is_none_or(|w| slack < w) {
                        worst = Some(slack);
                    }
                    let tol = g.gaps[s.mask() as usize] + g.gaps[tset.mask() as usize];
                    if joint > split + tol {
                        violations.push(PairViolation {
                            left: s,
                            right: tset,
                            joint_value: joint,
                            split_value: split,
                            tolerance: tol,
                        });
                    }
                }
                (enumerated, checked, worst, violations)
            })
            .collect();

    let mut enumerated = 0;
    let mut checked = 0;
    let mut worst: Option<Money> = None;
    let mut violations = Vec::new();
    for (e, c, w, mut v) in results {
        enumerated += e;
        checked += c;
        if let Some(w) = w {
            if worst.is_none_or(|cur| w < cur) {
                worst = Some(w);
            }
        }
        violations.append(&mut v);
    }
    let expected = 3u64.pow(n as u32) - 2u64.pow(n as u32);
    assert_eq!(enumerated, expected, "disjoint-pair enumeration incomplete");
    SubadditivityReport {
        enumerated,
        checked,
        passed: violations.is_empty(),
        violations,
        worst_slack: worst.unwrap_or_default(),
    }
}

/// Subadditivity over a fixed-seed random sample of disjoint pairs, for
/// populations beyond the exhaustive caps. `value_fn` returns the value
/// and the discretization gap of a coalition.
pub fn check_subadditivity_sampled<F>(
    n: usize,
    value_fn: F,
    samples: u64,
    seed: u64,
) -> Result<SubadditivityReport>
where
    F: Fn(Coalition) -> Result<(Money, Money)> + Sync,
{
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(samples as usize);
    while pairs.len() < samples as usize {
        let s = Coalition::from_mask(rng.random_range(1..(1u64 << n)) as u32);
        let comp = s.complement_within(n);
        if comp.is_empty() {
            continue;
        }
        let t = loop {
            let mask = rng.random_range(0..(1u64 << n)) as u32 & comp.mask();
            if mask != 0 {
                break Coalition::from_mask(mask);
            }
        };
        pairs.push((s, t));
    }
    let results: Vec<(Money, Option<PairViolation>)> = pairs
        .par_iter()
        .map(|&(s, t)| -> Result<(Money, Option<PairViolation>)> {
            let (vs, gs) = value_fn(s)?;
            let (vt, gt) = value_fn(t)?;
            let (vj, _) = value_fn(s.union(t))?;
            let split = vs + vt;
            let slack = split - vj;
            let tol = gs + gt;
            let violation = (vj > split + tol).then_some(PairViolation {
                left: s,
                right: t,
                joint_value: vj,
                split_value: split,
                tolerance: tol,
            });
            Ok((slack, violation))
        })
        .collect::<Result<_>>()?;
    let mut worst: Option<Money> = None;
    let mut violations = Vec::new();
    for (slack, v) in results {
        if worst.is_none_or(|w| slack < w) {
            worst = Some(slack);
        }
        if let Some(v) = v {
            violations.push(v);
        }
    }
    Ok(SubadditivityReport {
        enumerated: samples,
        checked: samples,
        passed: violations.is_empty(),
        violations,
        worst_slack: worst.unwrap_or_default(),
    })
}

/// How a core check covered the coalition space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckMode {
    Exhaustive,
    Sampled { samples: u64, seed: u64 },
}

/// A coalition whose members pay more under the allocation than they
/// would cost on their own.
#[derive(Clone, Debug)]
pub struct CoalitionViolation {
    pub coalition: Coalition,
    pub allocated: Money,
    pub value: Money,
    pub tolerance: Money,
}

/// Outcome of a core-membership check.
#[derive(Clone, Debug)]
pub struct CoreCheckReport {
    pub coalitions_checked: u64,
    /// Σ allocation − value(grand), which must be exactly zero.
    pub budget_gap: Money,
    pub budget_balanced: bool,
    pub violations: Vec<CoalitionViolation>,
    /// max over coalitions of allocated − value (≤ 0 means every
    /// inequality holds without tolerance).
    pub worst_excess: Money,
    pub max_tolerance: Money,
    pub mode: CheckMode,
    pub passed: bool,
}

/// Verifies Σ_{i∈S} alloc_i ≤ value(S) + ε_S for every nonempty
/// coalition, and exact budget balance on the grand coalition.
#[allow(clippy::needless_range_loop)]
pub fn check_core_membership(g: &GameInstance, alloc: &[Money]) -> Result<CoreCheckReport> {
    if alloc.len() != g.n {
        return Err(Error::DimensionMismatch {
            expected: g.n,
            got: alloc.len(),
        });
    }
    let size = 1usize << g.n;
    // subset sums of the allocation
    let mut alloc_sum = vec![Money::zero(); size];
    for mask in 1..size {
        let low = mask.trailing_zeros() as usize;
        alloc_sum[mask] = alloc_sum[mask & (mask - 1)] + alloc[low];
    }
    let mut violations = Vec::new();
    let mut worst = Money::from_cents(i64::MIN / 2);
    let mut max_tol = Money::zero();
    for mask in 1..size {
        let s = Coalition::from_mask(mask as u32);
        let excess = alloc_sum[mask] - g.values[mask];
        let tol = g.tolerances[mask];
        worst = worst.max(excess);
        max_tol = max_tol.max(tol);
        if excess > tol {
            violations.push(CoalitionViolation {
                coalition: s,
                allocated: alloc_sum[mask],
                value: g.values[mask],
                tolerance: tol,
            });
        }
    }
    let budget_gap = alloc_sum[size - 1] - g.values[size - 1];
    let budget_balanced = budget_gap.is_zero();
    Ok(CoreCheckReport {
        coalitions_checked: (size - 1) as u64,
        budget_gap,
        budget_balanced,
        passed: violations.is_empty() && budget_balanced,
        violations,
        worst_excess: worst,
        max_tolerance: max_tol,
        mode: CheckMode::Exhaustive,
    })
}

/// Core check over a fixed-seed random sample of coalitions, for
/// populations beyond the exhaustive caps. The value function is
/// evaluated lazily per sampled coalition.
pub fn check_core_membership_sampled<F>(
    n: usize,
    value_fn: F,
    alloc: &[Money],
    samples: u64,
    seed: u64,
) -> Result<CoreCheckReport>
where
    F: Fn(Coalition) -> Result<(Money, Money)> + Sync,
{
    if alloc.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: alloc.len(),
        });
    }
    let grand = Coalition::grand(n);
    let grand_total: Money = alloc.iter().copied().sum();
    let (grand_value, _) = value_fn(grand)?;
    let budget_gap = grand_total - grand_value;

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let masks: Vec<u32> = (0..samples)
        .map(|_| rng.random_range(1..(1u64 << n)) as u32)
        .collect();
    let results: Vec<(Money, Money, Option<CoalitionViolation>)> = masks
        .par_iter()
        .map(|&mask| -> Result<(Money, Money, Option<CoalitionViolation>)> {
            let s = Coalition::from_mask(mask);
            let allocated: Money = s.members().map(|i| alloc[i]).sum();
            let (value, tol) = value_fn(s)?;
            let excess = allocated - value;
            let violation = (excess > tol).then_some(CoalitionViolation {
                coalition: s,
                allocated,
                value,
                tolerance: tol,
            });
            Ok((excess, tol, violation))
        })
        .collect::<Result<_>>()?;

    let mut violations = Vec::new();
    let mut worst = budget_gap;
    let mut max_tol = Money::zero();
    for (excess, tol, v) in results {
        worst = worst.max(excess);
        max_tol = max_tol.max(tol);
        if let Some(v) = v {
            violations.push(v);
        }
    }
    Ok(CoreCheckReport {
        coalitions_checked: samples,
        budget_gap,
        budget_balanced: budget_gap.is_zero(),
        passed: violations.is_empty() && budget_gap.is_zero(),
        violations,
        worst_excess: worst,
        max_tolerance: max_tol,
        mode: CheckMode::Sampled { samples, seed },
    })
}

/// Outcome of checking the closed-form slack identity of the realized
/// game: u(S) − Σ_{i∈S} ξ_i must equal π_δ(C_S−x_S)⁺ or π_δ(x_S−C_S)⁺
/// depending on the grand-coalition branch.
#[derive(Clone, Debug)]
pub struct SlackIdentityReport {
    pub checked: u64,
    pub mismatches: Vec<Coalition>,
    pub passed: bool,
}

pub fn scenario1_slack_identity(
    g: &GameInstance,
    row: &[Energy],
    caps: &CapacityProfile,
    t: &Tariff,
    alloc: &[Money],
) -> Result<SlackIdentityReport> {
    if alloc.len() != g.n {
        return Err(Error::DimensionMismatch {
            expected: g.n,
            got: alloc.len(),
        });
    }
    let mut mismatches = Vec::new();
    let mut checked = 0;
    for s in Coalition::all_nonempty(g.n) {
        checked += 1;
        let allocated: Money = s.members().map(|i| alloc[i]).sum();
        let slack = g.value(s) - allocated;
        let predicted = scenario1_core_slack(s, row, caps, t)?;
        if slack != predicted {
            mismatches.push(s);
        }
    }
    Ok(SlackIdentityReport {
        checked,
        passed: mismatches.is_empty(),
        mismatches,
    })
}

/// A constructive core-nonemptiness certificate: the analytical
/// allocation together with its passing membership report. Exhibiting
/// one in-core allocation proves the core nonempty (and the game
/// balanced) without enumerating balanced maps.
#[derive(Clone, Debug)]
pub struct CoreCertificate {
    pub label: ScenarioLabel,
    pub allocation: Vec<Money>,
    pub report: CoreCheckReport,
}

pub fn certify_scenario1(
    row: &[Energy],
    caps: &CapacityProfile,
    t: &Tariff,
) -> Result<CoreCertificate> {
    let g = materialize_scenario1(row, caps, t)?;
    let alloc = allocation_scenario1(row, caps, t)?;
    let report = check_core_membership(&g, &alloc.shares)?;
    Ok(CoreCertificate {
        label: ScenarioLabel::ScenarioI,
        allocation: alloc.shares,
        report,
    })
}

pub fn certify_scenario2(joint: &JointSample, t: &Tariff) -> Result<CoreCertificate> {
    let g = materialize_scenario2(joint, t)?;
    let plan = plan_joint_investment(joint, t)?;
    let alloc = allocation_scenario2_expected(joint, &plan, t)?;
    let report = check_core_membership(&g, &alloc.shares)?;
    Ok(CoreCertificate {
        label: ScenarioLabel::ScenarioII,
        allocation: alloc.shares,
        report,
    })
}
