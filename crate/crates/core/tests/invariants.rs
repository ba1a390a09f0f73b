//! Property tests for the numerical invariants that the cost model and
//! the allocation machinery promise exactly: subadditivity, positive
//! homogeneity, quantile/CDF duality, scaling laws, and budget balance.

use chrono::NaiveDate;
use num::rational::Ratio;
use proptest::prelude::*;

use storage_coop::allocation::{
    allocation_scenario1, allocation_scenario2_realized, scenario1_core_slack,
};
use storage_coop::coalition::Coalition;
use storage_coop::cost::{coalition_realized_cost_u, realized_cost, CapacityProfile};
use storage_coop::dist::{DailyPeakSeries, EmpiricalDistribution, JointSample};
use storage_coop::planner::{optimal_capacity, optimal_expected_cost};
use storage_coop::tariff::{default_tariff, Tariff};
use storage_coop::units::{Energy, Frac, Money, Price};

fn energy() -> impl Strategy<Value = Energy> {
    (0i64..=2_000_000).prop_map(Energy::from_raw)
}

/// Energies whose raw value is divisible by 2 and 5, so that scaling by
/// 1/2 and 1/10 stays on the fixed-point grid.
fn scalable_energy() -> impl Strategy<Value = Energy> {
    (0i64..=200_000).prop_map(|r| Energy::from_raw(r * 10))
}

fn sample_vec() -> impl Strategy<Value = Vec<Energy>> {
    prop::collection::vec(scalable_energy(), 1..60)
}

fn capital() -> impl Strategy<Value = Price> {
    (0i64..=350_000).prop_map(Price::from_raw)
}

fn gamma() -> impl Strategy<Value = Frac> {
    (1i128..=1000, 1000i128..=1001).prop_map(|(n, d)| Frac::new(n.min(d), d))
}

proptest! {
    /// J(x_S + x_T, C_S + C_T) ≤ J(x_S, C_S) + J(x_T, C_T), exactly.
    #[test]
    fn j_is_subadditive(
        xs in energy(), xt in energy(), cs in energy(), ct in energy(),
        cap in capital(),
    ) {
        let t = default_tariff(1);
        let joint = realized_cost(xs + xt, cs + ct, cap, &t);
        let split = realized_cost(xs, cs, cap, &t) + realized_cost(xt, ct, cap, &t);
        prop_assert!(joint <= split);
    }

    /// J(αx, αC) = α·J(x, C) for α ∈ {0, 1/2, 1, 2, 10}, exactly in
    /// fixed point.
    #[test]
    fn j_is_positively_homogeneous(
        x in scalable_energy(), c in scalable_energy(), cap in capital(),
    ) {
        let t = default_tariff(1);
        let base = realized_cost(x, c, cap, &t);
        for (num, den) in [(0i128, 1i128), (1, 2), (1, 1), (2, 1), (10, 1)] {
            let alpha = Frac::new(num, den);
            let xa = x.checked_scale(alpha).unwrap();
            let ca = c.checked_scale(alpha).unwrap();
            prop_assert_eq!(realized_cost(xa, ca, cap, &t), base.scale(num, den));
        }
    }

    /// J is convex in the consumption argument.
    #[test]
    fn j_is_convex_in_consumption(
        x1 in scalable_energy(), gap in scalable_energy(), c in energy(), cap in capital(),
    ) {
        let t = default_tariff(1);
        let x3 = x1 + gap;
        let x2 = Energy::from_raw((x1.raw() + x3.raw()) / 2);
        let two_mid = realized_cost(x2, c, cap, &t).scale(2, 1);
        let ends = realized_cost(x1, c, cap, &t) + realized_cost(x3, c, cap, &t);
        prop_assert!(two_mid <= ends);
    }

    /// cdf(quantile(γ)) ≥ γ, and every support value strictly below the
    /// quantile has cdf < γ.
    #[test]
    fn quantile_is_the_generalized_inverse(samples in sample_vec(), g in gamma()) {
        let d = EmpiricalDistribution::from_samples(samples).unwrap();
        let q = d.quantile(g);
        prop_assert!(d.cdf(q) >= g);
        for &s in d.support().iter().filter(|&&s| s < q) {
            prop_assert!(d.cdf(s) < g);
        }
    }

    /// quantile(αX, γ) = α·quantile(X, γ): the CDF scaling law.
    #[test]
    fn quantile_scales_with_the_sample(samples in sample_vec(), g in gamma()) {
        let d = EmpiricalDistribution::from_samples(samples.clone()).unwrap();
        for (num, den) in [(1i128, 2i128), (2, 1), (10, 1)] {
            let alpha = Frac::new(num, den);
            let scaled = EmpiricalDistribution::from_samples(
                samples.iter().map(|e| e.checked_scale(alpha).unwrap()).collect(),
            )
            .unwrap();
            prop_assert_eq!(scaled.quantile(g), d.quantile(g).checked_scale(alpha).unwrap());
        }
    }

    /// Scaling every sample by α scales the optimal capacity and the
    /// optimal expected cost by α, exactly.
    #[test]
    fn optimal_plan_is_positively_homogeneous(samples in sample_vec(), cap in capital()) {
        let t = default_tariff(1);
        let d = EmpiricalDistribution::from_samples(samples.clone()).unwrap();
        let c0 = optimal_capacity(&d, &t, cap).unwrap();
        let j0 = optimal_expected_cost(&d, &t, cap).unwrap();
        for (num, den) in [(0i128, 1i128), (1, 2), (2, 1), (10, 1)] {
            let alpha = Frac::new(num, den);
            let scaled = EmpiricalDistribution::from_samples(
                samples.iter().map(|e| e.checked_scale(alpha).unwrap()).collect(),
            )
            .unwrap();
            prop_assert_eq!(
                optimal_capacity(&scaled, &t, cap).unwrap(),
                c0.checked_scale(alpha).unwrap()
            );
            prop_assert_eq!(
                optimal_expected_cost(&scaled, &t, cap).unwrap(),
                j0.scale(num, den)
            );
        }
    }

    /// The realized split ξ is budget balanced and lies in the core with
    /// exactly the predicted slack, for every coalition.
    #[test]
    fn realized_split_is_exactly_in_the_core(
        rows in prop::collection::vec((energy(), energy()), 2..7),
    ) {
        let n = rows.len();
        let t = default_tariff(n);
        let x: Vec<Energy> = rows.iter().map(|r| r.0).collect();
        let caps = CapacityProfile::new(rows.iter().map(|r| r.1).collect());
        let alloc = allocation_scenario1(&x, &caps, &t).unwrap();
        let grand = Coalition::grand(n);
        prop_assert_eq!(
            alloc.total(),
            coalition_realized_cost_u(grand, &x, &caps, &t).unwrap()
        );
        for s in Coalition::all_nonempty(n) {
            let lhs: Money = s.members().map(|i| alloc.shares[i]).sum();
            let u_s = coalition_realized_cost_u(s, &x, &caps, &t).unwrap();
            prop_assert!(lhs <= u_s);
            prop_assert_eq!(u_s - lhs, scenario1_core_slack(s, &x, &caps, &t).unwrap());
        }
    }

    /// The proportional weights sum to one and the daily split returns
    /// the full day cost, exactly.
    #[test]
    fn proportional_split_is_budget_balanced(
        zetas in prop::collection::vec(1i64..=1_000_000, 1..10),
        day_cost in 0i64..=10_000_000,
    ) {
        let zeta: Vec<Money> = zetas.iter().map(|&z| Money::from_ratio(z as i128, 7)).collect();
        let cost = Money::from_ratio(day_cost as i128, 3);
        let alloc = allocation_scenario2_realized(&zeta, cost, 0).unwrap();
        prop_assert_eq!(alloc.total(), cost);
        let beta_sum: Frac = alloc.beta.unwrap().into_iter().sum();
        prop_assert_eq!(beta_sum, Frac::one());
    }

    /// Aggregate mean additivity under day alignment: E[x_S] = Σ E[x_i].
    #[test]
    fn aggregate_mean_is_additive(
        matrix in prop::collection::vec(prop::collection::vec(energy(), 3), 2..40),
    ) {
        let days = matrix.len();
        let series = DailyPeakSeries::new(
            (0..days)
                .map(|d| NaiveDate::from_ymd_opt(2016, 1, 1).unwrap() + chrono::Days::new(d as u64))
                .collect(),
            vec!["a".into(), "b".into(), "c".into()],
            matrix,
        )
        .unwrap();
        let joint = JointSample::full(&series).unwrap();
        let agg = joint.aggregate(Coalition::grand(3)).unwrap();
        let sum: Ratio<i128> = (0..3).map(|i| joint.mean_of(i).unwrap()).sum();
        prop_assert_eq!(agg.mean(), sum);
    }

    /// Expected cost is the exact sample mean of the realized cost.
    #[test]
    fn expected_cost_matches_per_sample_mean(
        samples in sample_vec(), c in energy(), cap in capital(),
    ) {
        let t = default_tariff(1);
        let d = EmpiricalDistribution::from_samples(samples.clone()).unwrap();
        let by_mean: Money = samples
            .iter()
            .map(|&x| realized_cost(x, c, cap, &t))
            .sum::<Money>()
            .div_count(samples.len());
        prop_assert_eq!(storage_coop::cost::expected_cost(&d, c, cap, &t), by_mean);
    }

    /// Tariff viability: γ is within [0,1] whenever construction
    /// succeeds, and decreasing in the capital cost.
    #[test]
    fn gamma_stays_in_the_unit_interval(
        peak in 2i64..=1_000_000,
        off in 1i64..=1_000_000,
        cap_num in 0i64..=100,
    ) {
        prop_assume!(peak > off);
        let peak = Price::from_raw(peak);
        let off = Price::from_raw(off);
        let delta = peak - off;
        let cap = Price::from_raw(delta.raw() * cap_num / 100);
        let t = Tariff::with_uniform_capital(peak, off, cap, 1).unwrap();
        let g = t.gamma_shared();
        prop_assert!(g.in_unit_interval());
    }
}
