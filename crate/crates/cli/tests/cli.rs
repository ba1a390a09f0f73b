//! End-to-end tests of the binary: synth → plan/simulate/verify →
//! plotdata, plus determinism of the report bytes and exit codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_storage-coop")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn synth_data(dir: &Path, days: usize, seed: u64) -> PathBuf {
    let out = dir.join(format!("synth_{seed}"));
    let o = run(&[
        "synth",
        "--out",
        out.to_str().unwrap(),
        "--days",
        &days.to_string(),
        "--seed",
        &seed.to_string(),
    ]);
    assert_ok(&o);
    out.join("synthetic_daily.csv")
}

#[test]
fn plan_writes_budget_balanced_report_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth_data(tmp.path(), 120, 2);
    let out = tmp.path().join("plan");
    let o = run(&[
        "plan",
        "--data",
        data.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_ok(&o);

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["report_version"], 1);
    let plan = &report["plan"];
    assert_eq!(plan["coalition"]["jstar_cents"], plan["coalition"]["zeta_sum_cents"]);
    assert_eq!(plan["consumers"].as_array().unwrap().len(), 5);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 42);
    assert!(manifest["config_hash"].as_str().unwrap().len() == 64);

    // text rendering shows the same coalition cost value
    let text = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(text.contains(plan["coalition"]["jstar_cents"].as_str().unwrap()));
}

#[test]
fn identical_config_and_seed_give_byte_identical_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth_data(tmp.path(), 90, 7);
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    for out in [&out_a, &out_b] {
        let o = run(&[
            "simulate",
            "--data",
            data.to_str().unwrap(),
            "--days",
            "20",
            "--out",
            out.to_str().unwrap(),
            "--seed",
            "99",
        ]);
        assert_ok(&o);
    }
    let a = fs::read(out_a.join("report.json")).unwrap();
    let b = fs::read(out_b.join("report.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn verify_exits_zero_on_pass_and_one_on_adversarial_split() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth_data(tmp.path(), 60, 3);
    let out = tmp.path().join("verify");
    let o = run(&[
        "verify",
        "--data",
        data.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_ok(&o);
    let text = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(text.contains("all passed"), "{text}");

    let out_bad = tmp.path().join("verify_bad");
    let o = run(&[
        "verify",
        "--data",
        data.to_str().unwrap(),
        "--out",
        out_bad.to_str().unwrap(),
        "--adversarial-equal-split",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let text = fs::read_to_string(out_bad.join("report.txt")).unwrap();
    assert!(text.contains("equal_split_core_check"));
}

#[test]
fn simulate_then_plotdata_emits_cdfs_and_trajectories() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth_data(tmp.path(), 45, 5);
    let out = tmp.path().join("sim");
    let o = run(&[
        "simulate",
        "--data",
        data.to_str().unwrap(),
        "--days",
        "10",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_ok(&o);

    let plots = tmp.path().join("plots");
    let o = run(&[
        "plotdata",
        "--report",
        out.join("report.json").to_str().unwrap(),
        "--out",
        plots.to_str().unwrap(),
    ]);
    assert_ok(&o);

    let cdf = fs::read_to_string(plots.join("cdf_aggregate.tsv")).unwrap();
    let mut last = -1.0;
    let mut end = 0.0;
    for line in cdf.lines().skip(1) {
        let v: f64 = line.split('\t').nth(1).unwrap().parse().unwrap();
        assert!(v >= last);
        last = v;
        end = v;
    }
    assert_eq!(end, 1.0);

    for scenario in ["1", "2"] {
        let t = fs::read_to_string(plots.join(format!("trajectory_scenario{scenario}.tsv")))
            .unwrap();
        assert_eq!(t.lines().count(), 11, "header + 10 days");
    }
}

#[test]
fn scenario_flag_restricts_the_simulation() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth_data(tmp.path(), 40, 9);
    let out = tmp.path().join("sim1");
    let o = run(&[
        "simulate",
        "--data",
        data.to_str().unwrap(),
        "--days",
        "5",
        "--scenario",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_ok(&o);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let sims = report["simulations"].as_array().unwrap();
    assert_eq!(sims.len(), 1);
    assert_eq!(sims[0]["scenario"], "1");
}

#[test]
fn interval_csv_is_ingested_through_the_peak_window() {
    let tmp = tempfile::tempdir().unwrap();
    // 32 weekdays of hourly data for two consumers
    let mut body = String::from("timestamp,consumer_id,kwh\n");
    let mut date = chrono_like_start();
    let mut days = 0;
    while days < 32 {
        if !is_weekend(date) {
            for h in 0..24 {
                for (id, base) in [("a", 0.5), ("b", 1.0)] {
                    body.push_str(&format!(
                        "{:04}-{:02}-{:02}T{:02}:00:00,{},{}\n",
                        date.0, date.1, date.2, h, id, base
                    ));
                }
            }
            days += 1;
        }
        date = next_day(date);
    }
    let data = tmp.path().join("intervals.csv");
    fs::write(&data, body).unwrap();

    let out = tmp.path().join("plan");
    let o = run(&[
        "plan",
        "--data",
        data.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_ok(&o);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    // constant 0.5 kWh/h inside a 16-hour window → C* = 8 kWh exactly
    assert_eq!(report["plan"]["consumers"][0]["cstar_kwh"], "8.0000");
    assert_eq!(report["plan"]["consumers"][1]["cstar_kwh"], "16.0000");
}

#[test]
fn bad_config_fails_with_exit_two_and_lists_violations() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth_data(tmp.path(), 40, 4);
    let cfg = tmp.path().join("bad.json");
    fs::write(
        &cfg,
        r#"{"tariff": {"peak_price_cents": 10, "offpeak_price_cents": 20}}"#,
    )
    .unwrap();
    let o = run(&[
        "plan",
        "--config",
        cfg.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--out",
        tmp.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("peak > offpeak"), "{stderr}");
}

// tiny date helpers so the test does not need a chrono dependency
fn chrono_like_start() -> (i32, u32, u32) {
    (2016, 1, 4) // a Monday
}

fn is_weekend(d: (i32, u32, u32)) -> bool {
    // day-of-week via Zeller's congruence: h = 0 Saturday, 1 Sunday
    let (y, m, day) = d;
    let (y, m) = if m < 3 { (y - 1, m + 12) } else { (y, m) };
    let k = y % 100;
    let j = y / 100;
    let h = (day as i32 + 13 * (m as i32 + 1) / 5 + k + k / 4 + j / 4 + 5 * j) % 7;
    h == 0 || h == 1
}

fn next_day(d: (i32, u32, u32)) -> (i32, u32, u32) {
    let (y, m, day) = d;
    let dim = match m {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 => {
            if y % 4 == 0 && (y % 100 != 0 || y % 400 == 0) {
                29
            } else {
                28
            }
        }
        _ => unreachable!(),
    };
    if day < dim {
        (y, m, day + 1)
    } else if m < 12 {
        (y, m + 1, 1)
    } else {
        (y + 1, 1, 1)
    }
}
