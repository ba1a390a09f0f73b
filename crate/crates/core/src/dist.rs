//! Empirical distributions of daily peak-period consumption.
//!
//! All statistics are taken under the empirical measure of the sample:
//! the CDF is the counting step function, quantiles use the generalized
//! inverse (smallest support value whose CDF reaches the level), and
//! expectations are exact rationals. No smoothing, no interpolation, so
//! every identity that holds for an arbitrary distribution holds exactly
//! here.

use chrono::NaiveDate;
use num::rational::Ratio;

use crate::coalition::Coalition;
use crate::error::{Error, Result};
use crate::units::{Energy, Frac, Kwh, FIXED_SCALE};

/// Per-consumer daily peak-window consumption, rectangular over days.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DailyPeakSeries {
    days: Vec<NaiveDate>,
    consumers: Vec<String>,
    /// values[day][consumer]
    values: Vec<Vec<Energy>>,
}

impl DailyPeakSeries {
    pub fn new(
        days: Vec<NaiveDate>,
        consumers: Vec<String>,
        values: Vec<Vec<Energy>>,
    ) -> Result<DailyPeakSeries> {
        if days.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: days.len(),
                got: values.len(),
            });
        }
        for row in &values {
            if row.len() != consumers.len() {
                return Err(Error::DimensionMismatch {
                    expected: consumers.len(),
                    got: row.len(),
                });
            }
        }
        Ok(DailyPeakSeries {
            days,
            consumers,
            values,
        })
    }

    pub fn day_count(&self) -> usize {
        self.days.len()
    }

    pub fn consumer_count(&self) -> usize {
        self.consumers.len()
    }

    pub fn days(&self) -> &[NaiveDate] {
        &self.days
    }

    pub fn consumers(&self) -> &[String] {
        &self.consumers
    }

    pub fn row(&self, day: usize) -> &[Energy] {
        &self.values[day]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Energy]> {
        self.values.iter().map(|r| r.as_slice())
    }

    pub fn column(&self, consumer: usize) -> Vec<Energy> {
        self.values.iter().map(|r| r[consumer]).collect()
    }

    /// Keeps only the first `days` rows.
    pub fn truncated(&self, days: usize) -> DailyPeakSeries {
        DailyPeakSeries {
            days: self.days[..days.min(self.days.len())].to_vec(),
            consumers: self.consumers.clone(),
            values: self.values[..days.min(self.values.len())].to_vec(),
        }
    }
}

/// A step CDF over a finite sample, uniform weight 1/n per point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmpiricalDistribution {
    sorted: Vec<Energy>,
    /// prefix[k] = sum of the k smallest raw values; prefix[n] is the total.
    prefix: Vec<i128>,
}

impl EmpiricalDistribution {
    pub fn from_samples(mut samples: Vec<Energy>) -> Result<EmpiricalDistribution> {
        if samples.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        samples.sort_unstable();
        let mut prefix = Vec::with_capacity(samples.len() + 1);
        prefix.push(0i128);
        let mut acc = 0i128;
        for s in &samples {
            acc += s.raw() as i128;
            prefix.push(acc);
        }
        Ok(EmpiricalDistribution {
            sorted: samples,
            prefix,
        })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction rejects empty samples
    }

    pub fn support(&self) -> &[Energy] {
        &self.sorted
    }

    pub fn min(&self) -> Energy {
        self.sorted[0]
    }

    pub fn max(&self) -> Energy {
        *self.sorted.last().unwrap()
    }

    /// F̂(c) = #{samples ≤ c}/n. Right-continuous and nondecreasing.
    pub fn cdf(&self, c: Energy) -> Frac {
        let count = self.sorted.partition_point(|&s| s <= c);
        Frac::new(count as i128, self.sorted.len() as i128)
    }

    /// P(x = c) under the empirical measure: the jump of the CDF at `c`.
    pub fn jump_at(&self, c: Energy) -> Frac {
        let upper = self.sorted.partition_point(|&s| s <= c);
        let lower = self.sorted.partition_point(|&s| s < c);
        Frac::new((upper - lower) as i128, self.sorted.len() as i128)
    }

    /// Generalized inverse: the smallest support value `c` with
    /// F̂(c) ≥ gamma. For `gamma = 0` returns zero capacity — a zero
    /// arbitrage margin makes any positive capacity weakly dominated.
    pub fn quantile(&self, gamma: Frac) -> Energy {
        assert!(gamma.in_unit_interval(), "quantile level outside [0,1]");
        if gamma.is_zero() {
            return Energy::ZERO;
        }
        let n = self.sorted.len() as i128;
        // smallest k (1-based count) with k/n ≥ gamma, i.e. k = ceil(n·num/den)
        let num = gamma.numer();
        let den = gamma.denom();
        let needed = (n * num).div_euclid(den) + if (n * num) % den != 0 { 1 } else { 0 };
        self.sorted[(needed - 1) as usize]
    }

    /// Exact sample mean in kWh.
    pub fn mean(&self) -> Kwh {
        Ratio::new(
            self.prefix[self.sorted.len()],
            self.sorted.len() as i128 * FIXED_SCALE as i128,
        )
    }

    /// Count and raw sum of samples ≥ `threshold` (weak tail).
    pub fn tail_stats(&self, threshold: Energy) -> (usize, i128) {
        let start = self.sorted.partition_point(|&s| s < threshold);
        let n = self.sorted.len();
        (n - start, self.prefix[n] - self.prefix[start])
    }

    /// E[x | x ≥ threshold] in kWh, exact; errors when the tail is empty.
    pub fn conditional_mean_tail(&self, threshold: Energy) -> Result<Kwh> {
        let (count, sum) = self.tail_stats(threshold);
        if count == 0 {
            return Err(Error::EmptyConditioningEvent {
                threshold: threshold.to_string(),
            });
        }
        Ok(Ratio::new(sum, count as i128 * FIXED_SCALE as i128))
    }

    /// Raw sum of `(x − c)⁺` over the sample, for expected-cost evaluation.
    pub fn surplus_sum_raw(&self, c: Energy) -> i128 {
        let start = self.sorted.partition_point(|&s| s <= c);
        let n = self.sorted.len();
        (self.prefix[n] - self.prefix[start]) - (n - start) as i128 * c.raw() as i128
    }
}

/// A day-aligned view of the series for a set of consumers, so that joint
/// events such as "the aggregate exceeds its capacity" are well defined.
#[derive(Clone, Debug)]
pub struct JointSample {
    members: Coalition,
    /// columns[i] for original consumer index i ∈ members; day-aligned.
    columns: Vec<(usize, Vec<Energy>)>,
    day_count: usize,
}

impl JointSample {
    pub fn from_series(series: &DailyPeakSeries, members: Coalition) -> Result<JointSample> {
        members.require_nonempty()?;
        let n = series.consumer_count();
        for i in members.members() {
            if i >= n {
                return Err(Error::UnknownConsumer { index: i, n });
            }
        }
        let columns = members
            .members()
            .map(|i| (i, series.column(i)))
            .collect();
        Ok(JointSample {
            members,
            columns,
            day_count: series.day_count(),
        })
    }

    /// The whole population of the series.
    pub fn full(series: &DailyPeakSeries) -> Result<JointSample> {
        JointSample::from_series(series, Coalition::grand(series.consumer_count()))
    }

    pub fn members(&self) -> Coalition {
        self.members
    }

    pub fn day_count(&self) -> usize {
        self.day_count
    }

    fn column(&self, consumer: usize) -> Result<&[Energy]> {
        self.columns
            .iter()
            .find(|(i, _)| *i == consumer)
            .map(|(_, c)| c.as_slice())
            .ok_or(Error::UnknownConsumer {
                index: consumer,
                n: self.members.len(),
            })
    }

    /// Day-wise sums over a sub-coalition, preserving alignment.
    pub fn aggregate_rows(&self, s: Coalition) -> Result<Vec<Energy>> {
        s.require_nonempty()?;
        if !s.is_subset_of(self.members) {
            return Err(Error::UnknownConsumer {
                index: s.members().find(|&i| !self.members.contains(i)).unwrap(),
                n: self.members.len(),
            });
        }
        let cols: Vec<&[Energy]> = s
            .members()
            .map(|i| self.column(i))
            .collect::<Result<_>>()?;
        Ok((0..self.day_count)
            .map(|d| cols.iter().map(|c| c[d]).sum())
            .collect())
    }

    /// Distribution of the day-wise aggregate of `s`.
    pub fn aggregate(&self, s: Coalition) -> Result<EmpiricalDistribution> {
        EmpiricalDistribution::from_samples(self.aggregate_rows(s)?)
    }

    /// Marginal distribution of one member.
    pub fn marginal(&self, consumer: usize) -> Result<EmpiricalDistribution> {
        EmpiricalDistribution::from_samples(self.column(consumer)?.to_vec())
    }

    pub fn mean_of(&self, consumer: usize) -> Result<Kwh> {
        let col = self.column(consumer)?;
        let sum: i128 = col.iter().map(|e| e.raw() as i128).sum();
        Ok(Ratio::new(sum, col.len() as i128 * FIXED_SCALE as i128))
    }

    /// E[x_target | x_conditioning ≥ threshold] in kWh, exact under the
    /// empirical measure. Both coalitions must be subsets of the members.
    pub fn conditional_mean(
        &self,
        target: Coalition,
        conditioning: Coalition,
        threshold: Energy,
    ) -> Result<Kwh> {
        let target_rows = self.aggregate_rows(target)?;
        let cond_rows = self.aggregate_rows(conditioning)?;
        let mut count = 0i128;
        let mut sum = 0i128;
        for (t, c) in target_rows.iter().zip(&cond_rows) {
            if *c >= threshold {
                count += 1;
                sum += t.raw() as i128;
            }
        }
        if count == 0 {
            return Err(Error::EmptyConditioningEvent {
                threshold: threshold.to_string(),
            });
        }
        Ok(Ratio::new(sum, count * FIXED_SCALE as i128))
    }

    /// Mean of one member's consumption over the days where the full
    /// member aggregate reaches `threshold`.
    pub fn conditional_mean_given_aggregate(
        &self,
        consumer: usize,
        threshold: Energy,
    ) -> Result<Kwh> {
        self.conditional_mean(Coalition::singleton(consumer), self.members, threshold)
    }

    /// Empirical probability of the event {aggregate of s ≥ threshold}.
    pub fn tail_probability(&self, s: Coalition, threshold: Energy) -> Result<Frac> {
        let rows = self.aggregate_rows(s)?;
        let count = rows.iter().filter(|&&x| x >= threshold).count();
        Ok(Frac::new(count as i128, rows.len() as i128))
    }
}

/// Pearson correlation coefficients between consumer columns.
/// Errors on fewer than two days or on any constant column.
#[allow(clippy::needless_range_loop)]
pub fn correlation_matrix(series: &DailyPeakSeries) -> Result<Vec<Vec<f64>>> {
    let n = series.consumer_count();
    let days = series.day_count();
    if days < 2 {
        return Err(Error::EmptyDistribution);
    }
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|i| series.column(i).iter().map(|e| e.as_kwh()).collect())
        .collect();
    for (i, col) in cols.iter().enumerate() {
        let (lo, hi) = col
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        if lo == hi {
            return Err(Error::DegenerateVariance { consumer: i });
        }
    }
    let means: Vec<f64> = cols.iter().map(|c| c.iter().sum::<f64>() / days as f64).collect();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let mut cov = 0.0;
            let mut vi = 0.0;
            let mut vj = 0.0;
            for d in 0..days {
                let a = cols[i][d] - means[i];
                let b = cols[j][d] - means[j];
                cov += a * b;
                vi += a * a;
                vj += b * b;
            }
            let r = if i == j { 1.0 } else { cov / (vi.sqrt() * vj.sqrt()) };
            out[i][j] = r;
            out[j][i] = r;
        }
    }
    Ok(out)
}
