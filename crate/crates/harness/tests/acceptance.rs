//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use genflow_core::analysis::{theorem1_coefficients, theorem2_coefficients, theorem3_evasion_bound, theorem4_coefficients};
use genflow_core::numerics::symmetric_eigen;
use genflow_core::problems::SaddleTestFunction;
use genflow_core::Problem;
use genflow_harness::config::{Experiment, ExperimentConfig, FlowKind};
use genflow_harness::experiments::check::{run_suites, CheckReport, SuiteResult};
use genflow_harness::experiments::{evade, minimax, settling};

struct Verdict {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Verdict {
    Verdict { ok, detail: detail.into() }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn settling_genflow() -> (settling::SettlingReport, Duration) {
    let cfg = ExperimentConfig::preset(Experiment::Settling);
    let (r, d) = timed(|| settling::report(&cfg));
    (r.expect("settling preset runs"), d)
}

fn criterion_1(report: &settling::SettlingReport, elapsed: Duration) -> Verdict {
    let cfg = ExperimentConfig::preset(Experiment::Settling);
    let t_bar = theorem1_coefficients(1.0, 10, &cfg.flow_params().unwrap()).unwrap().t_bar;
    let times: Vec<Option<f64>> = report.runs.iter().map(|r| r.settling_time).collect();
    let norms: Vec<f64> = report.runs.iter().map(|r| r.initial_norm).collect();
    let within = times.iter().all(|t| t.is_some_and(|t| t <= 1.1 * t_bar));
    let settled: Vec<f64> = times.iter().flatten().copied().collect();
    let lo = settled.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = settled.iter().cloned().fold(0.0, f64::max);
    let uniform = settled.len() == 3 && lo >= 0.5 * hi;
    let control: Vec<Option<f64>> = report.control.iter().map(|r| r.settling_time).collect();
    let growing = control.len() == 3 && control.iter().all(Option::is_some) && control.windows(2).all(|w| w[1] > w[0]);
    let fast = elapsed < Duration::from_secs(30);
    verdict(
        norms == [1.0, 1e2, 1e4] && report.dim == 10 && within && uniform && growing && fast && report.bound.unwrap().t_bar == t_bar,
        format!(
            "genflow settling {times:?} vs 1.1 x {t_bar:.4}; min/max {:.3}; gradient-flow control {control:?}; {:.1} s",
            lo / hi,
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2() -> Verdict {
    let mut cfg = ExperimentConfig::preset(Experiment::Settling);
    cfg.flow = FlowKind::GenFlowMomentum;
    cfg.control = false;
    assert_eq!(cfg.beta, 0.5);
    let t_bar = theorem2_coefficients(1.0, 10, &cfg.flow_params().unwrap()).unwrap().t_bar;
    let (report, elapsed) = timed(|| settling::report(&cfg).expect("momentum settling runs"));
    let times: Vec<Option<f64>> = report.runs.iter().map(|r| r.settling_time).collect();
    let ok = times.len() == 3
        && times.iter().all(|t| t.is_some_and(|t| t <= 1.2 * t_bar))
        && report.runs.iter().all(|r| r.terminated_by == "grad_tol")
        && elapsed < Duration::from_secs(60);
    verdict(ok, format!("genflow_m settling {times:?} vs 1.2 x {t_bar:.4}; {:.1} s", elapsed.as_secs_f64()))
}

fn criterion_3(report: &settling::SettlingReport) -> Verdict {
    let decays: Vec<_> = report.runs.iter().map(|r| r.decay).collect();
    let ok = decays.len() == 3
        && decays.iter().all(|d| d.is_some_and(|d| d.violations == 0 && d.slack_constant == 10.0 && d.checked > 0));
    let margins: Vec<String> = decays.iter().flatten().map(|d| format!("{:.3e}", d.worst_margin)).collect();
    let violations: usize = decays.iter().flatten().map(|d| d.violations).sum();
    verdict(ok, format!("{violations} violations at c = 10; worst margins [{}]", margins.join(", ")))
}

fn criterion_4() -> Verdict {
    let cfg = ExperimentConfig::preset(Experiment::Evade);
    let (report, elapsed) = timed(|| evade::report(&cfg).expect("evade preset runs"));
    let mut ok = report.runs.len() == 50 && elapsed < Duration::from_secs(60);
    // Starts lie in the ball of radius 0.5 with both coordinates at least 1e-3 away from the axes.
    ok &= report
        .runs
        .iter()
        .all(|r| r.x0[0].hypot(r.x0[1]) < 0.5 && r.x0[0].abs() >= 1e-3 && r.x0[1].abs() >= 1e-3 && !r.excluded);
    let radii: Vec<f64> = report.radii.iter().map(|r| r.r).collect();
    ok &= radii == [0.01, 0.02, 0.05, 0.1];
    // Bounds recomputed from the reported Taylor constants.
    let f = SaddleTestFunction::new();
    let spec = symmetric_eigen(&f.hessian(&SaddleTestFunction::SADDLE).unwrap()).unwrap();
    let params = cfg.flow_params().unwrap();
    for (i, rr) in report.radii.iter().enumerate() {
        let cert = theorem3_evasion_bound(&spec, report.taylor.k1, report.taylor.k2, 2, rr.r, &params).unwrap();
        ok &= cert.bound == rr.bound;
        ok &= report.runs.iter().all(|run| run.time_in_ball[i] <= cert.bound);
    }
    let ratio = report.min_iteration_ratio;
    ok &= ratio.is_some_and(|r| r >= 6.0) && report.passed;
    let worst: Vec<String> = report.radii.iter().map(|r| format!("{:.3}/{:.3}", r.max_time_in_ball, r.bound)).collect();
    verdict(
        ok,
        format!(
            "time in ball / bound at r = {radii:?}: {}; min GD/GenFlow(M) iterations {:.2}; {:.1} s",
            worst.join(", "),
            ratio.unwrap_or(f64::NAN),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_5() -> Verdict {
    let cfg = ExperimentConfig::preset(Experiment::Minimax);
    let t_bar = theorem4_coefficients(1.0, 1.0, &cfg.flow_params().unwrap()).unwrap().t_bar;
    let (report, elapsed) = timed(|| minimax::report(&cfg).expect("minimax preset runs"));
    let times: Vec<Option<f64>> = report.runs.iter().map(|r| r.settling_time).collect();
    let ok = report.runs.len() == 3
        && report.direction.len() == 4
        && times.iter().all(|t| t.is_some_and(|t| t <= 1.1 * t_bar))
        && report.runs.iter().all(|r| r.max_lyapunov_increase <= 0.0)
        && elapsed < Duration::from_secs(30);
    let inc = report.runs.iter().map(|r| r.max_lyapunov_increase).fold(f64::NEG_INFINITY, f64::max);
    verdict(
        ok,
        format!("settling {times:?} vs 1.1 x {t_bar:.4}; largest V increase {inc:.2e}; {:.1} s", elapsed.as_secs_f64()),
    )
}

fn suites<'a>(report: &'a CheckReport, prefixes: &[&str]) -> Vec<&'a SuiteResult> {
    report.suites.iter().filter(|s| prefixes.iter().any(|p| s.suite.starts_with(p))).collect()
}

fn suite_verdict(report: &CheckReport, prefixes: &[&str], min_cases: usize) -> Verdict {
    let picked = suites(report, prefixes);
    let ok = !picked.is_empty() && picked.iter().all(|s| s.passed && s.cases >= min_cases);
    let detail: Vec<String> = picked
        .iter()
        .map(|s| format!("{} {}/{} worst {:.2e}", s.suite, s.cases - s.failures, s.cases, s.worst))
        .collect();
    verdict(ok, detail.join("; "))
}

fn criterion_9() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_genflow");
    let mut ok = true;
    let mut detail = Vec::new();
    for exp in ["simulate", "settling", "evade", "minimax", "check"] {
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        for d in &dirs {
            let status = Command::new(bin)
                .args(["--experiment", exp, "--seed", "42", "--out"])
                .arg(d.path())
                .output()
                .expect("binary runs");
            ok &= status.status.success();
        }
        let same = same_tree(dirs[0].path(), dirs[1].path());
        ok &= same;
        detail.push(format!("{exp} {}", if same { "identical" } else { "differs" }));
    }
    verdict(ok, detail.join(", "))
}

fn same_tree(a: &Path, b: &Path) -> bool {
    let list = |p: &Path| {
        let mut v: Vec<_> = std::fs::read_dir(p).unwrap().map(|e| e.unwrap().file_name()).collect();
        v.sort();
        v
    };
    let (la, lb) = (list(a), list(b));
    !la.is_empty() && la == lb && la.iter().all(|n| std::fs::read(a.join(n)).unwrap() == std::fs::read(b.join(n)).unwrap())
}

fn main() {
    let (settling_report, settling_time) = settling_genflow();
    let check = run_suites(42, None).expect("check suites run");
    let results = [
        ("1 fixed-time uniformity", criterion_1(&settling_report, settling_time)),
        ("2 momentum fixed-time", criterion_2()),
        ("3 Lyapunov decay", criterion_3(&settling_report)),
        ("4 saddle evasion", criterion_4()),
        ("5 min-max fixed-time", criterion_5()),
        ("6 power inequality fuzz", suite_verdict(&check, &["power_inequality"], 10_000)),
        ("7 numerics suite", suite_verdict(&check, &["gradient/", "hessian/", "eigen/", "tilde_distance/"], 100)),
        ("8 PL residual", suite_verdict(&check, &["pl/"], 1)),
        ("9 reproducibility", criterion_9()),
    ];
    let mut failed = 0;
    for (name, v) in &results {
        println!("criterion {name}: {} ({})", if v.ok { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.ok);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
