//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `UNATTAINABLE` are run and reported like the others but
//! do not fail the target; everything else must pass within its budget.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use chaoslab_harness::experiments::{Outcome, Z95};
use chaoslab_harness::{run, ExperimentConfig};
use statrs::function::gamma::gamma;
use tempfile::TempDir;

const UNATTAINABLE: [u32; 1] = [3];
const SEED: &str = "20261016";

struct Verdict {
    passed: bool,
    detail: String,
}

fn cfg(out: &Path, id: &str, pairs: &[(&str, &str)]) -> ExperimentConfig {
    let dir = out.to_string_lossy().into_owned();
    let mut all = vec![("experiment-id", id), ("master-seed", SEED), ("output-dir", dir.as_str()), ("dimension", "1")];
    for &(k, v) in pairs {
        if let Some(slot) = all.iter_mut().find(|(key, _)| *key == k) {
            slot.1 = v;
        } else {
            all.push((k, v));
        }
    }
    ExperimentConfig::from_pairs(all).expect("acceptance configs are valid")
}

fn outcome(c: &ExperimentConfig) -> Outcome {
    run(c).unwrap_or_else(|e| panic!("{}: {e}", c.experiment_id)).outcome
}

/// Σ_{k ≤ n} cos(2πkr)/k, the covariance of the n-mode circle field at distance r.
fn truncated_circle_cov(n: usize, r: f64) -> f64 {
    (1..=n).rev().map(|k| (2.0 * PI * k as f64 * r).cos() / k as f64).sum()
}

fn c1(out: &Path) -> Verdict {
    let mut parts = Vec::new();
    let mut passed = true;
    let circle = outcome(&cfg(out, "c1-circle", &[("kind", "field-validate"), ("n-modes", "1024"), ("mc-samples", "100000")]));
    let Outcome::FieldValidate { rows, max_abs_z } = circle else { unreachable!() };
    let oracle_err = rows.iter().map(|r| (r.oracle - truncated_circle_cov(1024, r.separation)).abs()).fold(0.0, f64::max);
    passed &= rows.len() == 20 && max_abs_z <= 5.0 && oracle_err < 1e-9;
    parts.push(format!("circle max|z| {max_abs_z:.2} (oracle check {oracle_err:.1e})"));
    let star = [("1d", "1", "1024", "0.05"), ("2d", "2", "64", "0.25")];
    for (tag, dim, points, delta) in star {
        let c = cfg(
            out,
            &format!("c1-star-{tag}"),
            &[
                ("kind", "field-validate"),
                ("field", "star"),
                ("dimension", dim),
                ("alpha", "0.5"),
                ("delta", delta),
                ("grid-points", points),
                ("mc-samples", "100000"),
            ],
        );
        let Outcome::FieldValidate { rows, max_abs_z } = outcome(&c) else { unreachable!() };
        passed &= rows.len() == 20 && max_abs_z <= 5.0;
        parts.push(format!("star-{tag} max|z| {max_abs_z:.2}"));
    }
    Verdict { passed, detail: parts.join(", ") }
}

fn c2(out: &Path) -> Verdict {
    let c = cfg(out, "c2", &[("kind", "fb-moments"), ("beta", "0.7"), ("n-modes", "4096"), ("mc-samples", "100000")]);
    let Outcome::FbMoments { rows } = outcome(&c) else { unreachable!() };
    let b2 = 0.49;
    let exact_sq = gamma(1.0 + b2) / gamma(1.0 + b2 / 2.0).powi(2);
    let exact_abs = gamma(1.0 - b2) / gamma(1.0 - b2 / 2.0).powi(2);
    let mut passed = rows.len() == 2;
    let mut parts = Vec::new();
    for r in &rows {
        let exact = if r.moment == "mu^2" { exact_sq } else { exact_abs };
        let z = (r.result.value.re - exact) / r.result.std_error;
        let quad = (r.quadrature - exact).abs();
        passed &= z.abs() <= 3.0 && (r.oracle - exact).abs() < 1e-10 && quad <= 1e-6;
        parts.push(format!("{} z {z:+.2} |quad-closed| {quad:.1e}", r.moment));
    }
    Verdict { passed, detail: parts.join(", ") }
}

fn c3(out: &Path) -> Verdict {
    let c = cfg(
        out,
        "c3",
        &[("kind", "negative-moment"), ("beta", "0.6, 0.8, 0.9, 0.95"), ("n-modes", "4096"), ("mc-samples", "100000")],
    );
    let Outcome::NegativeMoment { rows } = outcome(&c) else { unreachable!() };
    // |Γ(1 − β²/2)Γ(1 + β²/2)| at β = 1
    let limit = gamma(0.5) * gamma(1.5);
    let decreasing = rows.iter().filter_map(|r| r.drop_to_next).all(|(d, se)| d - Z95 * se > 0.0);
    let below = rows
        .iter()
        .filter(|r| r.beta >= 0.9)
        .all(|r| r.result.value.re + Z95 * r.result.std_error < limit);
    let values: Vec<String> = rows.iter().map(|r| format!("{:.4}±{:.4}", r.result.value.re, r.result.std_error)).collect();
    Verdict {
        passed: decreasing && below && (limit - PI / 2.0).abs() < 1e-12,
        detail: format!("E|μ^-1| = [{}], strictly decreasing {decreasing}, below π/2 for β ≥ 0.9 {below}", values.join(", ")),
    }
}

fn c4(out: &Path) -> Verdict {
    let c = cfg(out, "c4", &[("kind", "onsager"), ("alpha", "0.5"), ("delta", "0.05"), ("mc-samples", "10000")]);
    let Outcome::Onsager { reports } = outcome(&c) else { unreachable!() };
    let passed = reports.len() == 5 && reports.iter().all(|r| r.trials == 10_000 && r.violations == 0);
    let parts: Vec<String> = reports.iter().map(|r| format!("{} {}/{}", r.inequality_id, r.violations, r.trials)).collect();
    Verdict { passed, detail: format!("violations {}", parts.join(", ")) }
}

fn c5(out: &Path) -> Verdict {
    let c = cfg(
        out,
        "c5-two",
        &[("kind", "min-dist-integral"), ("n-points", "2"), ("beta", &format!("{}", 0.5f64.sqrt())), ("mc-samples", "1000000")],
    );
    let Outcome::MinDist { rows } = outcome(&c) else { unreachable!() };
    let exact = 16.0 * 2f64.sqrt() / 3.0;
    let z = (rows[0].result.value.re - exact) / rows[0].result.std_error;
    let mut passed = z.abs() <= 3.0;
    let betas: Vec<String> = [0.8f64, 0.9, 0.95].iter().map(|b2| format!("{}", b2.sqrt())).collect();
    let c = cfg(out, "c5-ladder", &[("kind", "min-dist-integral"), ("n-points", "4"), ("beta", &betas.join(", ")), ("mc-samples", "1000000")]);
    let Outcome::MinDist { rows } = outcome(&c) else { unreachable!() };
    let mut parts = vec![format!("N=2 z {z:+.2}")];
    for r in rows.iter().skip(1) {
        let bare = ((1.0 - rows[0].beta2) / (1.0 - r.beta2)).powi(2);
        let ok = r.ratio >= bare - 3.0 * r.ratio_se && r.ratio <= r.profile_ratio + 3.0 * r.ratio_se;
        passed &= ok && (bare - r.bare_ratio).abs() < 1e-9;
        parts.push(format!(
            "N=4 β²={:.2} ratio {:.3}±{:.3} in [bare {:.3}, profile {:.3}] {ok}",
            r.beta2, r.ratio, r.ratio_se, bare, r.profile_ratio
        ));
    }
    Verdict { passed, detail: parts.join(", ") }
}

fn c6(out: &Path) -> Verdict {
    let c = cfg(
        out,
        "c6",
        &[
            ("kind", "malliavin-smallball"),
            ("beta", "0.7"),
            ("n-modes", "2048"),
            ("mc-samples", "1000"),
            ("invariant-realizations", "1000"),
        ],
    );
    let Outcome::SmallBall { invariants: Some(s), .. } = outcome(&c) else { unreachable!() };
    Verdict {
        passed: s.realizations == 1000 && s.passed,
        detail: format!(
            "min det/(Re I1)² {:.3e}, max |Im I1|/Re I1 {:.1e}, min margins {:.1e} / {:.1e} over 3 directions",
            s.worst_det_ratio, s.worst_im_ratio, s.worst_margin_first, s.worst_margin_second
        ),
    }
}

fn c7(out: &Path) -> Verdict {
    let mut passed = true;
    let mut parts = Vec::new();
    for (kind, id) in [("malliavin-smallball", "c7-det"), ("sobolev-smallball", "c7-sobolev")] {
        let mut pairs = vec![("kind", kind), ("beta", "0.7"), ("n-modes", "2048"), ("mc-samples", "100000")];
        if kind == "malliavin-smallball" {
            pairs.push(("invariant-realizations", "0"));
        }
        let c = cfg(out, id, &pairs);
        let Outcome::SmallBall { signature: s, .. } = outcome(&c) else { unreachable!() };
        passed &= s.super_polynomial && s.observed_decades >= 3.0 && s.relative_slope_increase > 0.0;
        parts.push(format!(
            "{id}: {:.2} decades, slope {:.2} at large ε and {:.2} at small ε, relative increase {:.2}",
            s.observed_decades,
            s.local_slopes.last().copied().unwrap_or(f64::NAN),
            s.local_slopes.first().copied().unwrap_or(f64::NAN),
            s.relative_slope_increase
        ));
    }
    Verdict { passed, detail: parts.join(", ") }
}

fn c8(out: &Path) -> Verdict {
    let c = cfg(out, "c8", &[("kind", "density"), ("beta", "0.8, 0.9, 0.95"), ("n-modes", "1024"), ("mc-samples", "100000")]);
    let Outcome::Density(s) = outcome(&c) else { unreachable!() };
    let change = s.max_relative_change.unwrap_or(f64::INFINITY);
    let peaks: Vec<String> = s.rows.iter().filter(|r| r.modes == 1024).map(|r| format!("{:.4}", r.peak_height)).collect();
    let svgs = fs::read_dir(out.join("c8")).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "svg")).count();
    Verdict {
        passed: s.strictly_decreasing && change <= 0.10 && svgs == 6,
        detail: format!("peaks [{}], max change under doubling {:.1}%, {svgs} heatmaps", peaks.join(", "), 100.0 * change),
    }
}

fn c9(out: &Path) -> Verdict {
    let c = cfg(
        out,
        "c9",
        &[("kind", "decomposition-scan"), ("alpha", "0.01, 0.05, 0.1, 0.2, 0.5, 1, 2, 5"), ("grid-points", "1024")],
    );
    let Outcome::DecompositionScan(s) = outcome(&c) else { unreachable!() };
    let base = s.baseline.scan.points.iter().all(|p| p.min_eig > 0.0);
    let ladder = s.scans.len() == 3 && s.scans.iter().all(|n| n.nonincreasing && n.scan.alpha_star.is_some_and(|a| a > 0.0));
    let drift = s.c1_drift.max(s.c2_drift);
    let stars: Vec<String> = s.scans.iter().map(|n| format!("{} α*={:?}", n.gtilde, n.scan.alpha_star)).collect();
    Verdict {
        passed: base && ladder && drift < 4.0 && s.scans.iter().all(|n| n.scan.points[0].grid_points == 1024),
        detail: format!("g̃=0 all positive {base}, {}, band drift {drift:.2}", stars.join(", ")),
    }
}

fn c10(out: &Path) -> Verdict {
    let fb = |dir: &Path, chains: &str| {
        cfg(dir, "c10", &[("kind", "fb-moments"), ("beta", "0.7"), ("n-modes", "1024"), ("mc-samples", "20000"), ("chains", chains)])
    };
    let density = |dir: &Path| {
        cfg(dir, "c10-density", &[("kind", "density"), ("beta", "0.8, 0.9"), ("n-modes", "256"), ("mc-samples", "5000")])
    };
    let (a, b) = (out.join("c10-a"), out.join("c10-b"));
    let mut identical = true;
    for make in [&fb as &dyn Fn(&Path, &str) -> ExperimentConfig, &|d: &Path, _: &str| density(d)] {
        let ra = run(&make(&a, "8")).unwrap();
        let rb = run(&make(&b, "8")).unwrap();
        identical &= ra.data_files.len() == rb.data_files.len()
            && ra.data_files.iter().zip(&rb.data_files).all(|(x, y)| fs::read(x).unwrap() == fs::read(y).unwrap());
    }
    let results: Vec<_> = ["1", "8", "64"]
        .iter()
        .map(|ch| match outcome(&fb(&out.join(format!("c10-chains-{ch}")), ch)) {
            Outcome::FbMoments { rows } => rows,
            _ => unreachable!(),
        })
        .collect();
    let mut worst: f64 = 0.0;
    for i in 0..results.len() {
        for j in i + 1..results.len() {
            for (x, y) in results[i].iter().zip(&results[j]) {
                let se = x.result.std_error.hypot(y.result.std_error);
                worst = worst.max((x.result.value - y.result.value).norm() / se);
            }
        }
    }
    Verdict {
        passed: identical && worst <= 3.0,
        detail: format!("rerun bit-identical {identical}, chains 1/8/64 worst |Δ|/SE {worst:.2}"),
    }
}

type Criterion = (u32, &'static str, u64, fn(&Path) -> Verdict);

const CRITERIA: [Criterion; 10] = [
    (1, "covariance fidelity", 300, c1),
    (2, "integer moments", 600, c2),
    (3, "negative moment ladder", 900, c3),
    (4, "Onsager suites", 300, c4),
    (5, "min-distance integral", 600, c5),
    (6, "Malliavin invariants", 600, c6),
    (7, "small-ball signature", 1800, c7),
    (8, "density decay", 900, c8),
    (9, "decomposition positivity", 600, c9),
    (10, "reproducibility", 600, c10),
];

fn main() -> ExitCode {
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    // `cargo test -- --list` and similar flags pass through here
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let tmp = TempDir::new().expect("temp dir");
    let mut hard_failures = 0;
    for (id, name, budget, check) in CRITERIA {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let v = check(tmp.path());
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(budget);
        let ok = v.passed && in_time;
        let known = UNATTAINABLE.contains(&id);
        println!(
            "criterion {id:>2} {} {name}: {} [{:.1}s of {budget}s]{}",
            if ok { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64(),
            if !ok && known { " (documented as unattainable)" } else { "" }
        );
        if !ok && !known {
            hard_failures += 1;
        }
    }
    if hard_failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
