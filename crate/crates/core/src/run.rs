//! Orchestration behind the CLI subcommands: load data, build the plan,
//! simulate daily allocations, run the verification suites, and write
//! reports and plot data.

use std::fs;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use crate::allocation::{
    allocation_scenario1, allocation_scenario2_expected, allocation_scenario2_realized,
    average_realized_allocation, AllocationResult,
};
use crate::coalition::Coalition;
use crate::cost::{
    coalition_expected_value_v, coalition_realized_cost_u, expected_cost, realized_cost,
    CapacityProfile,
};
use crate::dist::{DailyPeakSeries, EmpiricalDistribution, JointSample};
use crate::error::{Error, Result};
use crate::game::{
    self, check_core_membership, check_core_membership_sampled, check_subadditivity,
    check_subadditivity_sampled, materialize_scenario1, materialize_scenario2,
    scenario1_slack_identity, CheckMode, CoreCheckReport, SubadditivityReport,
};
use crate::pipeline::{ingest_intervals, read_daily_series, RunConfig};
use crate::planner::{grid_min_expected_cost, plan_joint_investment, CapacityPlan};
use crate::report::{
    BenefitRow, BenefitSection, BenefitTable, CdfPoint, CdfSeries, CheckRow, CoalitionPlanRow,
    DayRow, PlanRow, PlanSection, RunReport, SimulationSection, TrajectoryRow,
    VerificationSection, REPORT_VERSION,
};
use crate::tariff::Tariff;
use crate::units::{Energy, Frac, Money};

/// Planning needs a minimally informative sample.
pub const MIN_PLAN_DAYS: usize = 30;
/// Realized-game suites are re-run day by day up to this many days.
const VERIFY_DAY_BUDGET: usize = 25;
/// Coalition/pair sample size once a population exceeds the exhaustive caps.
const SAMPLED_CHECKS: u64 = 10_000;
/// Grid resolution of the quantile-rule sanity sweep.
const GRID_POINTS: usize = 1000;

pub struct LoadedData {
    pub series: DailyPeakSeries,
    pub dropped_days: usize,
}

/// Loads either interval CSV (`timestamp,...`) or daily series CSV
/// (`date,...`), sniffing the header.
pub fn load_data(path: &Path, cfg: &RunConfig) -> Result<LoadedData> {
    let first_line = {
        let f = fs::File::open(path)?;
        let mut r = std::io::BufReader::new(f);
        let mut line = String::new();
        r.read_line(&mut line)?;
        line.to_lowercase()
    };
    if first_line.contains("timestamp") {
        let out = ingest_intervals(path, cfg)?;
        Ok(LoadedData {
            series: out.series,
            dropped_days: out.dropped_days,
        })
    } else {
        Ok(LoadedData {
            series: read_daily_series(path)?,
            dropped_days: 0,
        })
    }
}

fn money_str(m: Money) -> String {
    m.to_decimal_string(4)
}

fn frac6(f: Frac) -> String {
    f.to_decimal_string(6)
}

struct Planned {
    tariff: Tariff,
    joint: JointSample,
    plan: CapacityPlan,
    zeta: Vec<Money>,
}

fn compute_plan(cfg: &RunConfig, series: &DailyPeakSeries) -> Result<Planned> {
    let n = series.consumer_count();
    let tariff = cfg.tariff(n)?;
    let joint = JointSample::full(series)?;
    let plan = plan_joint_investment(&joint, &tariff)?;
    let alloc = allocation_scenario2_expected(&joint, &plan, &tariff)?;
    // algebraic identity; a failure here is a library bug, not bad input
    assert!(
        alloc.total() == plan.coalition_jstar,
        "expected-cost split lost budget balance"
    );
    Ok(Planned {
        tariff,
        joint,
        plan,
        zeta: alloc.shares,
    })
}

fn cdf_series(id: &str, dist: &EmpiricalDistribution) -> CdfSeries {
    let mut points = Vec::new();
    let mut last: Option<Energy> = None;
    for &v in dist.support() {
        if last == Some(v) {
            continue;
        }
        last = Some(v);
        points.push(CdfPoint {
            kwh: v.to_string(),
            cdf: frac6(dist.cdf(v)),
        });
    }
    CdfSeries {
        id: id.to_string(),
        points,
    }
}

fn plan_section(p: &Planned, series: &DailyPeakSeries) -> Result<PlanSection> {
    let ids = series.consumers();
    let consumers = ids
        .iter()
        .enumerate()
        .map(|(i, id)| PlanRow {
            id: id.clone(),
            cstar_kwh: p.plan.per_consumer_cstar[i].to_string(),
            jstar_cents: money_str(p.plan.per_consumer_jstar[i]),
            zeta_cents: money_str(p.zeta[i]),
            benefit_cents: money_str(p.plan.per_consumer_jstar[i] - p.zeta[i]),
        })
        .collect();
    let mut cdfs: Vec<CdfSeries> = Vec::with_capacity(ids.len() + 1);
    for (i, id) in ids.iter().enumerate() {
        cdfs.push(cdf_series(id, &p.joint.marginal(i)?));
    }
    cdfs.push(cdf_series(
        "aggregate",
        &p.joint.aggregate(p.joint.members())?,
    ));
    Ok(PlanSection {
        gamma: p.plan.gamma.to_string(),
        no_storage_regime: p.plan.no_storage,
        consumers,
        coalition: CoalitionPlanRow {
            cstar_kwh: p.plan.coalition_cstar.to_string(),
            jstar_cents: money_str(p.plan.coalition_jstar),
            zeta_sum_cents: money_str(p.zeta.iter().copied().sum()),
            quantile_gap_cents: money_str(p.plan.coalition_quantile_gap),
        },
        cdfs,
    })
}

fn joint_benefit_table(p: &Planned, series: &DailyPeakSeries) -> BenefitTable {
    let standalone_total: Money = p.plan.per_consumer_jstar.iter().copied().sum();
    let total = p.plan.total_benefit();
    let per_consumer = series
        .consumers()
        .iter()
        .enumerate()
        .map(|(i, id)| BenefitRow {
            id: id.clone(),
            standalone_cents: money_str(p.plan.per_consumer_jstar[i]),
            share_cents: money_str(p.zeta[i]),
            benefit_cents: money_str(p.plan.per_consumer_jstar[i] - p.zeta[i]),
        })
        .collect();
    BenefitTable {
        per_consumer,
        total_cents: money_str(total),
        relative_reduction: relative_fraction(total, standalone_total),
    }
}

fn relative_fraction(part: Money, whole: Money) -> String {
    match part.ratio_to(whole) {
        Some(f) => f.to_decimal_string(6),
        None => "0.000000".to_string(),
    }
}

fn base_report(cfg: &RunConfig) -> RunReport {
    RunReport {
        report_version: REPORT_VERSION,
        seed: cfg.seed,
        config_hash: cfg.hash(),
        config: cfg.clone(),
        plan: None,
        simulations: Vec::new(),
        benefits: None,
        verification: None,
    }
}

fn require_plan_days(series: &DailyPeakSeries) -> Result<()> {
    if series.day_count() < MIN_PLAN_DAYS {
        return Err(Error::Validation(vec![format!(
            "planning needs at least {MIN_PLAN_DAYS} days of data, got {}",
            series.day_count()
        )]));
    }
    Ok(())
}

/// The `plan` workflow: capacity plan, expected-cost split, and the
/// joint-investment benefit table.
pub fn plan_report(cfg: &RunConfig, series: &DailyPeakSeries) -> Result<RunReport> {
    cfg.validate()?;
    require_plan_days(series)?;
    let p = compute_plan(cfg, series)?;
    let mut report = base_report(cfg);
    report.plan = Some(plan_section(&p, series)?);
    report.benefits = Some(BenefitSection {
        joint_investment: Some(joint_benefit_table(&p, series)),
        realized_pooling: None,
    });
    Ok(report)
}

/// The `simulate` workflow: everything in `plan`, plus per-day allocation
/// tables and running-average trajectories for the selected scenarios.
pub fn simulate_report(
    cfg: &RunConfig,
    series: &DailyPeakSeries,
    days: Option<usize>,
) -> Result<RunReport> {
    cfg.validate()?;
    require_plan_days(series)?;
    let p = compute_plan(cfg, series)?;
    let d = days.unwrap_or(series.day_count()).min(series.day_count());
    let ids = series.consumers().to_vec();

    let mut report = base_report(cfg);
    report.plan = Some(plan_section(&p, series)?);
    let mut benefits = BenefitSection {
        joint_investment: Some(joint_benefit_table(&p, series)),
        realized_pooling: None,
    };

    if cfg.scenario.includes_realized() {
        let caps = CapacityProfile::new(p.plan.per_consumer_cstar.clone());
        let mut allocations: Vec<AllocationResult> = Vec::with_capacity(d);
        let mut rows = Vec::with_capacity(d);
        let mut standalone_sums = vec![Money::zero(); ids.len()];
        let grand = Coalition::grand(ids.len());
        let mut balanced = true;
        for day in 0..d {
            let row = series.row(day);
            let alloc = allocation_scenario1(row, &caps, &p.tariff)?;
            let total = coalition_realized_cost_u(grand, row, &caps, &p.tariff)?;
            balanced &= alloc.total() == total;
            for (i, acc) in standalone_sums.iter_mut().enumerate() {
                *acc +=
                    coalition_realized_cost_u(Coalition::singleton(i), row, &caps, &p.tariff)?;
            }
            rows.push(DayRow {
                day,
                date: series.days()[day].format("%Y-%m-%d").to_string(),
                total_cents: money_str(total),
                shares_cents: alloc.shares.iter().map(|&m| money_str(m)).collect(),
            });
            allocations.push(alloc);
        }
        let (trajectory, averages) = trajectory_of(&allocations);
        if d > 0 {
            let avg_alloc = average_realized_allocation(&allocations)?;
            let standalone_avg: Vec<Money> =
                standalone_sums.iter().map(|&m| m.div_count(d)).collect();
            let total: Money = standalone_avg
                .iter()
                .zip(&avg_alloc)
                .map(|(&s, &a)| s - a)
                .sum();
            benefits.realized_pooling = Some(BenefitTable {
                per_consumer: ids
                    .iter()
                    .enumerate()
                    .map(|(i, id)| BenefitRow {
                        id: id.clone(),
                        standalone_cents: money_str(standalone_avg[i]),
                        share_cents: money_str(avg_alloc[i]),
                        benefit_cents: money_str(standalone_avg[i] - avg_alloc[i]),
                    })
                    .collect(),
                total_cents: money_str(total),
                relative_reduction: relative_fraction(
                    total,
                    standalone_avg.iter().copied().sum(),
                ),
            });
        }
        report.simulations.push(SimulationSection {
            scenario: "1".into(),
            consumers: ids.clone(),
            days_simulated: d,
            rows,
            trajectory,
            average_shares_cents: averages,
            budget_balanced_every_day: balanced,
        });
    }

    if cfg.scenario.includes_expected() {
        let mut allocations: Vec<AllocationResult> = Vec::with_capacity(d);
        let mut rows = Vec::with_capacity(d);
        let mut balanced = true;
        for day in 0..d {
            let x_n: Energy = series.row(day).iter().copied().sum();
            let day_cost = realized_cost(
                x_n,
                p.plan.coalition_cstar,
                p.tariff.shared_capital(),
                &p.tariff,
            );
            let alloc = allocation_scenario2_realized(&p.zeta, day_cost, day)?;
            balanced &= alloc.total() == day_cost;
            rows.push(DayRow {
                day,
                date: series.days()[day].format("%Y-%m-%d").to_string(),
                total_cents: money_str(day_cost),
                shares_cents: alloc.shares.iter().map(|&m| money_str(m)).collect(),
            });
            allocations.push(alloc);
        }
        let (trajectory, averages) = trajectory_of(&allocations);
        report.simulations.push(SimulationSection {
            scenario: "2".into(),
            consumers: ids.clone(),
            days_simulated: d,
            rows,
            trajectory,
            average_shares_cents: averages,
            budget_balanced_every_day: balanced,
        });
    }

    report.benefits = Some(benefits);
    Ok(report)
}

/// Running means after each day, exact; plus the final means.
fn trajectory_of(allocations: &[AllocationResult]) -> (Vec<TrajectoryRow>, Vec<String>) {
    let Some(first) = allocations.first() else {
        return (Vec::new(), Vec::new());
    };
    let n = first.shares.len();
    let mut sums = vec![Money::zero(); n];
    let mut trajectory = Vec::with_capacity(allocations.len());
    for (day, a) in allocations.iter().enumerate() {
        for (acc, &s) in sums.iter_mut().zip(&a.shares) {
            *acc += s;
        }
        trajectory.push(TrajectoryRow {
            day,
            average_shares_cents: sums
                .iter()
                .map(|&m| money_str(m.div_count(day + 1)))
                .collect(),
        });
    }
    let finals = trajectory
        .last()
        .map(|t| t.average_shares_cents.clone())
        .unwrap_or_default();
    (trajectory, finals)
}

fn mode_str(mode: CheckMode) -> String {
    match mode {
        CheckMode::Exhaustive => "exhaustive".into(),
        CheckMode::Sampled { samples, seed } => format!("sampled({samples},{seed})"),
    }
}

fn subadditivity_row(
    name: &str,
    detail: String,
    reports: &[SubadditivityReport],
    sampled: Option<(u64, u64)>,
) -> CheckRow {
    let cases: u64 = reports.iter().map(|r| r.checked).sum();
    let passed = reports.iter().all(|r| r.passed);
    let worst = reports
        .iter()
        .map(|r| r.worst_slack)
        .min()
        .unwrap_or(Money::zero());
    CheckRow {
        name: name.into(),
        passed,
        mode: sampled.map_or("exhaustive".into(), |(s, seed)| format!("sampled({s},{seed})")),
        cases,
        worst_slack_cents: money_str(worst),
        max_tolerance_cents: money_str(Money::zero()),
        detail,
    }
}

fn core_row(name: &str, detail: String, reports: &[CoreCheckReport]) -> CheckRow {
    let cases: u64 = reports.iter().map(|r| r.coalitions_checked).sum();
    let passed = reports.iter().all(|r| r.passed);
    let worst = reports
        .iter()
        .map(|r| r.worst_excess)
        .max()
        .unwrap_or(Money::zero());
    let tol = reports
        .iter()
        .map(|r| r.max_tolerance)
        .max()
        .unwrap_or(Money::zero());
    let mode = reports
        .first()
        .map(|r| mode_str(r.mode))
        .unwrap_or_else(|| "exhaustive".into());
    CheckRow {
        name: name.into(),
        passed,
        mode,
        cases,
        worst_slack_cents: money_str(worst),
        max_tolerance_cents: money_str(tol),
        detail,
    }
}

/// The `verify` workflow: machine-checks the game-theoretic guarantees on
/// this concrete instance. With `adversarial_equal_split`, the realized
/// core check runs against an equal split instead of the analytical
/// allocation, to demonstrate a detectable violation.
pub fn verify_report(
    cfg: &RunConfig,
    series: &DailyPeakSeries,
    max_n: usize,
    adversarial_equal_split: bool,
) -> Result<RunReport> {
    cfg.validate()?;
    let n = series.consumer_count();
    if n > max_n {
        return Err(Error::TooManyPlayers { n, max: max_n });
    }
    let p = compute_plan(cfg, series)?;
    let day_budget = series.day_count().min(VERIFY_DAY_BUDGET);
    let grand = Coalition::grand(n);
    let mut checks: Vec<CheckRow> = Vec::new();

    if cfg.scenario.includes_realized() {
        let caps = CapacityProfile::new(p.plan.per_consumer_cstar.clone());
        let exhaustive = n <= game::EXHAUSTIVE_CAP_REALIZED;
        let per_day_samples = (SAMPLED_CHECKS / day_budget.max(1) as u64).max(1);
        let mut sub_reports = Vec::new();
        let mut core_reports = Vec::new();
        let mut slack_ok = true;
        for day in 0..day_budget {
            let row = series.row(day);
            let alloc = if adversarial_equal_split {
                let total = coalition_realized_cost_u(grand, row, &caps, &p.tariff)?;
                vec![total.div_count(n); n]
            } else {
                allocation_scenario1(row, &caps, &p.tariff)?.shares
            };
            if exhaustive {
                let g = materialize_scenario1(row, &caps, &p.tariff)?;
                sub_reports.push(check_subadditivity(&g));
                core_reports.push(check_core_membership(&g, &alloc)?);
                if !adversarial_equal_split {
                    slack_ok &=
                        scenario1_slack_identity(&g, row, &caps, &p.tariff, &alloc)?.passed;
                }
            } else {
                let value = |s: Coalition| {
                    Ok((
                        coalition_realized_cost_u(s, row, &caps, &p.tariff)?,
                        Money::zero(),
                    ))
                };
                sub_reports.push(check_subadditivity_sampled(
                    n,
                    value,
                    per_day_samples,
                    cfg.seed,
                )?);
                core_reports.push(check_core_membership_sampled(
                    n,
                    value,
                    &alloc,
                    per_day_samples,
                    cfg.seed,
                )?);
            }
        }
        checks.push(subadditivity_row(
            "realized_cost_subadditivity",
            format!("{day_budget} days, quantile-sized capacities"),
            &sub_reports,
            (!exhaustive).then_some((per_day_samples, cfg.seed)),
        ));
        let core_name = if adversarial_equal_split {
            "equal_split_core_check"
        } else {
            "realized_allocation_core_certificate"
        };
        let mut row = core_row(core_name, format!("{day_budget} days"), &core_reports);
        if adversarial_equal_split {
            let violating: u64 = core_reports.iter().map(|r| r.violations.len() as u64).sum();
            row.detail = format!("{violating} violating coalitions found");
        } else {
            row.passed &= slack_ok;
            row.detail.push_str(if slack_ok {
                ", slack identities exact"
            } else {
                ", slack identity MISMATCH"
            });
        }
        checks.push(row);
    }

    if cfg.scenario.includes_expected() {
        if n <= game::EXHAUSTIVE_CAP_EXPECTED {
            let g = materialize_scenario2(&p.joint, &p.tariff)?;
            checks.push(subadditivity_row(
                "expected_cost_subadditivity",
                format!("{} sample days", series.day_count()),
                &[check_subadditivity(&g)],
                None,
            ));
            checks.push(core_row(
                "expected_allocation_core_certificate",
                "tolerance: arbitrage price x CDF jump at C* x E[aggregate]".into(),
                &[check_core_membership(&g, &p.zeta)?],
            ));
        } else {
            let value_gap = |s: Coalition| {
                let v = coalition_expected_value_v(s, &p.joint, &p.tariff)?;
                Ok((v.value, v.quantile_gap))
            };
            checks.push(subadditivity_row(
                "expected_cost_subadditivity",
                format!("{} sample days", series.day_count()),
                &[check_subadditivity_sampled(n, value_gap, SAMPLED_CHECKS, cfg.seed)?],
                Some((SAMPLED_CHECKS, cfg.seed)),
            ));
            let value_tol = |s: Coalition| {
                let dist = p.joint.aggregate(s)?;
                let v = crate::cost::coalition_value_from_dist(s, &dist, &p.tariff)?;
                let tol = p
                    .tariff
                    .arbitrage_price()
                    .times_kwh(dist.jump_at(v.capacity).scale_kwh(dist.mean()));
                Ok((v.value, tol))
            };
            checks.push(core_row(
                "expected_allocation_core_certificate",
                "sampled".into(),
                &[check_core_membership_sampled(
                    n,
                    value_tol,
                    &p.zeta,
                    SAMPLED_CHECKS,
                    cfg.seed,
                )?],
            ));
        }

        // quantile rule vs a dense grid sweep, per consumer and aggregate
        let mut worst_diff = Money::zero();
        let mut max_tol = Money::zero();
        let mut grid_ok = true;
        let mut dists: Vec<EmpiricalDistribution> = Vec::with_capacity(n + 1);
        for i in 0..n {
            dists.push(p.joint.marginal(i)?);
        }
        dists.push(p.joint.aggregate(grand)?);
        for d in &dists {
            let cstar = d.quantile(p.tariff.gamma_shared());
            let at_cstar = expected_cost(d, cstar, p.tariff.shared_capital(), &p.tariff);
            let (_, grid_best) =
                grid_min_expected_cost(d, &p.tariff, p.tariff.shared_capital(), GRID_POINTS);
            let diff = (grid_best - at_cstar).abs();
            let grid_step = Energy::from_raw(d.max().raw() / GRID_POINTS as i64);
            let tol = p.tariff.arbitrage_price().times(grid_step)
                + p
                    .tariff
                    .arbitrage_price()
                    .times_kwh(d.jump_at(cstar).scale_kwh(d.mean()));
            grid_ok &= diff <= tol;
            worst_diff = worst_diff.max(diff);
            max_tol = max_tol.max(tol);
        }
        checks.push(CheckRow {
            name: "quantile_rule_grid_optimality".into(),
            passed: grid_ok,
            mode: "exhaustive".into(),
            cases: (n + 1) as u64,
            worst_slack_cents: money_str(worst_diff),
            max_tolerance_cents: money_str(max_tol),
            detail: format!("{GRID_POINTS}-point grid sweep, {} distributions", n + 1),
        });
    }

    let all_passed = checks.iter().all(|c| c.passed);
    let mut report = base_report(cfg);
    report.plan = Some(plan_section(&p, series)?);
    report.verification = Some(VerificationSection { checks, all_passed });
    Ok(report)
}

/// Writes `report.json` and `report.txt` under `out_dir`.
pub fn write_report(report: &RunReport, out_dir: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(out_dir)?;
    let json_path = out_dir.join("report.json");
    let text_path = out_dir.join("report.txt");
    fs::write(&json_path, report.to_json()?)?;
    fs::write(&text_path, report.to_text())?;
    Ok((json_path, text_path))
}

/// Emits tab-separated plot data: one CDF file per consumer plus the
/// aggregate, and one trajectory file per simulated scenario.
pub fn write_plot_data(report: &RunReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let plan = report.plan.as_ref().ok_or(Error::MissingSection("plan"))?;
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for series in &plan.cdfs {
        let path = out_dir.join(format!("cdf_{}.tsv", series.id));
        let mut body = String::from("kwh\tcdf\n");
        for p in &series.points {
            body.push_str(&format!("{}\t{}\n", p.kwh, p.cdf));
        }
        fs::write(&path, body)?;
        written.push(path);
    }
    for sim in &report.simulations {
        let path = out_dir.join(format!("trajectory_scenario{}.tsv", sim.scenario));
        let mut body = String::from("day");
        for c in &sim.consumers {
            body.push('\t');
            body.push_str(c);
        }
        body.push('\n');
        for row in &sim.trajectory {
            body.push_str(&row.day.to_string());
            for v in &row.average_shares_cents {
                body.push('\t');
                body.push_str(v);
            }
            body.push('\n');
        }
        fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}
