//! Acceptance suite. Runs every headline criterion at its pinned tolerance,
//! prints one PASS/FAIL line each, and exits non-zero if any fails.

mod common;

use std::time::{Duration, Instant};

use cow_qkd::finite_key::{
    expected_sifted_clicks, phase_error_expected_upper, secure_key_length, xbasis_gain_lower_m0, xbasis_gain_upper_m1,
};
use cow_qkd::pipeline::evaluate_analytic;
use cow_qkd::scan::{emit_to_writer, find_threshold, run_scan};
use cow_qkd::textio::render_count_log;
use cow_qkd::{
    binary_entropy, simulate_session, BoundedValue, CrossTerm, Format, GainSet, Hoeffding, Metric, MonitorMode,
    PipelineMode, ScanSpec, ScanVariable, SimMode, SystemParams,
};

use common::*;

// Pinned tolerances.
const QBER_TARGET: f64 = 0.05;
const STANDARD_FIBER_TOL_KM: f64 = 2.0;
const ULL_FIBER_TOL_KM: f64 = 1.0;
const CUTOFF_WINDOW_SLOW: (f64, f64) = (75.0, 85.0);
const CUTOFF_WINDOW_FAST: (f64, f64) = (85.0, 95.0);
const SIFTED_REL_TOL: f64 = 0.35;
const ORACLE_SIGMAS: f64 = 3.0;
const ORACLE_ROUNDS: u64 = 10_000_000;
const COVERAGE_EPS_1: f64 = 0.05;
const COVERAGE_SESSIONS: u64 = 200;
const COVERAGE_ROUNDS: u64 = 1_000_000;
const COVERAGE_RATE: f64 = 0.90;
const COVERAGE_ALPHA: f64 = 0.01;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn qber_threshold_standard() -> Outcome {
    let mut p = SystemParams::default();
    let slow = find_threshold(Metric::Qber, QBER_TARGET, (100.0, 200.0), ScanVariable::LengthKm, &p).unwrap();
    p.detectors.efficiency = 0.2;
    let fast = find_threshold(Metric::Qber, QBER_TARGET, (100.0, 200.0), ScanVariable::LengthKm, &p).unwrap();
    check(
        within(slow, 156.0, STANDARD_FIBER_TOL_KM) && within(fast, 171.0, STANDARD_FIBER_TOL_KM),
        format!("eta_d=0.1: {slow:.2} km (156 +-2), eta_d=0.2: {fast:.2} km (171 +-2)"),
    )
}

fn qber_threshold_ultra_low_loss() -> Outcome {
    let mut p = SystemParams::default();
    p.channel.attenuation_db_per_km = 0.15;
    p.detectors.efficiency = 0.95;
    let x = find_threshold(Metric::Qber, QBER_TARGET, (200.0, 350.0), ScanVariable::LengthKm, &p).unwrap();
    check(within(x, 273.1, ULL_FIBER_TOL_KM), format!("{x:.2} km (273.1 +-1)"))
}

/// Largest grid length with a positive key, if any.
fn key_cutoff(params: &SystemParams) -> Option<f64> {
    let spec = ScanSpec {
        variable: ScanVariable::LengthKm,
        start: 0.0,
        stop: 150.0,
        step: 1.0,
        pipeline_mode: PipelineMode::Analytic,
        throughput: false,
    };
    run_scan(&spec, params)
        .unwrap()
        .iter()
        .rev()
        .find(|r| r.key_bits.unwrap_or(0.0) > 0.0)
        .map(|r| r.variable)
}

fn key_rate_cutoffs() -> Outcome {
    let slow = SystemParams::default();
    let fast = lab_fast_detector();
    let mut lines = Vec::new();
    let mut any = false;
    for monitor in [MonitorMode::Switch, MonitorMode::Splitter] {
        for cross in [CrossTerm::Mixed, CrossTerm::AsPrinted] {
            let with = |p: &SystemParams| {
                let mut q = *p;
                q.options.monitor_mode = monitor;
                q.options.cross_term = cross;
                q
            };
            let a = key_cutoff(&with(&slow));
            let b = key_cutoff(&with(&fast));
            let inside = |c: Option<f64>, w: (f64, f64)| c.is_some_and(|x| x >= w.0 && x <= w.1);
            any |= inside(a, CUTOFF_WINDOW_SLOW) && inside(b, CUTOFF_WINDOW_FAST);
            let show = |c: Option<f64>| c.map_or("no key".to_string(), |x| format!("{x} km"));
            lines.push(format!("{monitor:?}/{cross:?}: {} | {}", show(a), show(b)));
        }
    }
    check(any, format!("windows 75-85 | 85-95 km; {}", lines.join("; ")))
}

fn sifted_click_model() -> Outcome {
    let mut slow = lab_at(100.0);
    slow.detectors.dead_time_s = 50e-6;
    let mut fast = lab_fast_detector();
    fast.channel.length_km = 100.0;
    let a = expected_sifted_clicks(&slow, slow.block_duration_s());
    let b = expected_sifted_clicks(&fast, fast.block_duration_s());
    let ok = |x: f64, t: f64| (x / t - 1.0).abs() <= SIFTED_REL_TOL;
    check(
        ok(a, 14811.0) && ok(b, 26460.0),
        format!("n_z = {a:.0} (14811 +-35%), {b:.0} (26460 +-35%)"),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut worst = (0.0, "", 0.0);
    let mut pass = true;
    for (i, km) in [20.0, 80.0, 100.0].into_iter().enumerate() {
        for c in oracle_check(&lab_at(km), 1000 + i as u64, ORACLE_ROUNDS) {
            pass &= c.z <= ORACLE_SIGMAS;
            if c.z > worst.0 {
                worst = (c.z, c.field.name(), km);
            }
        }
    }
    check(
        pass,
        format!("36 fields, worst {:.2} sigma ({} at {} km), limit 3", worst.0, worst.1, worst.2),
    )
}

fn concentration_coverage() -> Outcome {
    let p = SystemParams::default();
    let mut hits = [0u64; 6];
    for seed in 0..COVERAGE_SESSIONS {
        for (h, covered) in hits.iter_mut().zip(bounds_cover(&p, 50_000 + seed, COVERAGE_ROUNDS, COVERAGE_EPS_1)) {
            *h += covered as u64;
        }
    }
    let pass = hits
        .iter()
        .all(|&h| coverage_consistent(h, COVERAGE_SESSIONS, COVERAGE_RATE, COVERAGE_ALPHA));
    let summary: Vec<String> = BOUND_NAMES
        .iter()
        .zip(hits)
        .map(|(n, h)| format!("{n} {h}/{COVERAGE_SESSIONS}"))
        .collect();
    check(pass, summary.join(", "))
}

fn finite_key_consistency() -> Outcome {
    let sec = SystemParams::default().security;
    let mut failures = Vec::new();

    // R non-increasing in the phase error and in the QBER.
    let n_z = 1e7;
    let mut prev = f64::INFINITY;
    for i in 0..=100 {
        let k = secure_key_length(n_z, i as f64 * 0.005, 0.01, &sec).unwrap().key_length_bits;
        if k > prev {
            failures.push(format!("R rises with E_p at {}", i as f64 * 0.005));
        }
        prev = k;
    }
    prev = f64::INFINITY;
    for i in 0..=100 {
        let k = secure_key_length(n_z, 0.05, i as f64 * 0.001, &sec).unwrap().key_length_bits;
        if k > prev {
            failures.push(format!("R rises with QBER at {}", i as f64 * 0.001));
        }
        prev = k;
    }

    // The finite-size phase-error bound converges on the exact-gain value.
    let limit = {
        let p = ideal_link(1_000_000);
        let g = GainSet::analytic(&p);
        let mu = p.source.mu;
        let up = xbasis_gain_upper_m1(
            &BoundedValue::exact(g.mon_alpha_alpha_m1),
            &BoundedValue::exact(g.mon_vac_m1),
            mu,
        );
        let lo = xbasis_gain_lower_m0(
            &BoundedValue::exact(g.mon_alpha_alpha_m0),
            &BoundedValue::exact(g.mon_vac_m0),
            mu,
            p.options.cross_term,
        );
        phase_error_expected_upper(&g, up, lo, mu).unwrap()
    };
    let gaps: Vec<f64> = (6..=10)
        .map(|k| {
            let r = evaluate_analytic(&ideal_link(10u64.pow(k)), &Hoeffding).unwrap();
            r.phase_error_observed_upper - limit
        })
        .collect();
    if !gaps.windows(2).all(|w| w[1] < w[0]) || gaps[0] >= 1.0 - limit || gaps.iter().any(|&g| g <= 0.0) {
        failures.push(format!("gap not strictly shrinking: {gaps:?}"));
    }

    let h = |p: f64| binary_entropy(p).unwrap();
    if h(0.0) != 0.0 || h(0.5) != 1.0 {
        failures.push("h(0) or h(0.5) wrong".into());
    }
    for i in 1..100 {
        let p = i as f64 / 100.0;
        if (h(p) - h(1.0 - p)).abs() > 1e-12 {
            failures.push(format!("h not symmetric at {p}"));
        }
    }

    let detail = if failures.is_empty() {
        format!(
            "monotone in E_p and QBER; E_p gap {:.4} -> {:.4} over 1e6..1e10 (limit {limit:.4}); entropy identities hold",
            gaps[0],
            gaps[gaps.len() - 1]
        )
    } else {
        failures.join("; ")
    };
    check(failures.is_empty(), detail)
}

fn determinism() -> Outcome {
    let p = SystemParams::default();
    let cfg = per_pair(42, 2_000_000);
    let a = render_count_log(&simulate_session(&p, &cfg).record);
    let b = render_count_log(&simulate_session(&p, &cfg).record);
    let streaming = cow_qkd::SimConfig {
        mode: SimMode::StreamingWithDeadtime,
        ..cfg
    };
    let c = render_count_log(&simulate_session(&p, &streaming).record);
    let d = render_count_log(&simulate_session(&p, &streaming).record);

    let csv = |mode: PipelineMode| {
        let spec = ScanSpec {
            variable: ScanVariable::LengthKm,
            start: 20.0,
            stop: 120.0,
            step: 10.0,
            pipeline_mode: mode,
            throughput: false,
        };
        let mut buf = Vec::new();
        emit_to_writer(&run_scan(&spec, &p).unwrap(), Format::Csv, &mut buf).unwrap();
        buf
    };
    let sim = PipelineMode::Simulate {
        seed: 9,
        rounds: 500_000,
        mode: SimMode::PerPairIndependent,
    };
    let same_csv = csv(PipelineMode::Analytic) == csv(PipelineMode::Analytic) && csv(sim.clone()) == csv(sim);
    check(
        a == b && c == d && same_csv,
        format!(
            "count logs identical: {}, streaming: {}, CSV identical: {same_csv}",
            a == b,
            c == d
        ),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome, Duration);
    let criteria: [Criterion; 8] = [
        ("QBER threshold, standard fiber", qber_threshold_standard, Duration::from_secs(1)),
        ("QBER threshold, ultra-low-loss fiber", qber_threshold_ultra_low_loss, Duration::from_secs(1)),
        ("key-rate cutoffs", key_rate_cutoffs, Duration::from_secs(10)),
        ("sifted-click model", sifted_click_model, Duration::from_secs(1)),
        ("oracle equivalence", oracle_equivalence, Duration::from_secs(60)),
        ("concentration coverage", concentration_coverage, Duration::from_secs(120)),
        ("finite-key consistency", finite_key_consistency, Duration::from_secs(60)),
        ("determinism", determinism, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let pass = out.pass && elapsed <= budget;
        failed += !pass as usize;
        println!(
            "{} {name}: {} [{:.2} s, budget {} s]",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
