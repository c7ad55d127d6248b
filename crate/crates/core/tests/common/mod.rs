//! Helpers shared by the integration suites.
#![allow(dead_code)]

use cow_qkd::concentration::{bound_expected_count, BoundedValue};
use statrs::distribution::{Binomial, DiscreteCDF};

use cow_qkd::{simulate_session, GainField, GainSet, Hoeffding, SimConfig, SimMode, SystemParams};

/// Default laboratory system at `length_km`.
pub fn lab_at(length_km: f64) -> SystemParams {
    let mut p = SystemParams::default();
    p.channel.length_km = length_km;
    p
}

/// The second laboratory detector: 20% efficiency, 30 us dead time.
pub fn lab_fast_detector() -> SystemParams {
    let mut p = SystemParams::default();
    p.detectors.efficiency = 0.2;
    p.detectors.dead_time_s = 30e-6;
    p
}

pub fn per_pair(seed: u64, rounds: u64) -> SimConfig {
    SimConfig {
        seed,
        rounds,
        mode: SimMode::PerPairIndependent,
    }
}

/// Emissions of the state class a gain field is conditioned on.
pub fn class_size(t: &cow_qkd::SessionTally, field: GainField) -> u64 {
    use GainField::*;
    match field {
        Data0zTau0 | Data0zTau1 | Mon0zM0 | Mon0zM1 => t.signal.n_sent_z0,
        Data1zTau0 | Data1zTau1 | Mon1zM0 | Mon1zM1 => t.signal.n_sent_z1,
        MonAlphaAlphaM0 | MonAlphaAlphaM1 => t.record.n_sent_aa,
        MonVacM0 | MonVacM1 => t.record.n_sent_vac,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FieldCheck {
    pub field: GainField,
    pub analytic: f64,
    pub empirical: f64,
    /// Deviation in binomial standard deviations.
    pub z: f64,
}

/// Simulates one session and compares every gain field with the
/// closed-form value.
pub fn oracle_check(params: &SystemParams, seed: u64, rounds: u64) -> Vec<FieldCheck> {
    let tally = simulate_session(params, &per_pair(seed, rounds));
    let empirical = tally.empirical_gains();
    let analytic = GainSet::analytic(params);
    GainField::ALL
        .iter()
        .map(|&field| {
            let n = class_size(&tally, field) as f64;
            let p = analytic.get(field);
            let e = empirical.get(field).expect("every class is emitted");
            let sigma = (p * (1.0 - p) / n).sqrt();
            // A zero-probability field must see zero clicks.
            let z = if sigma > 0.0 {
                (e - p).abs() / sigma
            } else if e == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            FieldCheck {
                field,
                analytic: p,
                empirical: e,
                z,
            }
        })
        .collect()
}

/// The six decoy count bounds: four upper, two lower.
pub const BOUND_NAMES: [&str; 6] = [
    "upper n_aa_m0",
    "upper n_aa_m1",
    "upper n_vac_m0",
    "upper n_vac_m1",
    "lower n_aa_m0",
    "lower n_vac_m0",
];

/// For one simulated session, whether each of the six bounds contains the
/// expected count (emissions times the analytic gain).
pub fn bounds_cover(params: &SystemParams, seed: u64, rounds: u64, eps_1: f64) -> [bool; 6] {
    let t = simulate_session(params, &per_pair(seed, rounds));
    let g = GainSet::analytic(params);
    let r = t.record;
    let bound = |clicks: u64, sent: u64| -> (BoundedValue, f64) {
        let b = bound_expected_count(clicks as f64, sent as f64, eps_1, &Hoeffding).unwrap();
        (b, sent as f64)
    };
    let (aa0, n_aa) = bound(r.n_aa_m0, r.n_sent_aa);
    let (aa1, _) = bound(r.n_aa_m1, r.n_sent_aa);
    let (v0, n_vac) = bound(r.n_vac_m0, r.n_sent_vac);
    let (v1, _) = bound(r.n_vac_m1, r.n_sent_vac);
    let truth_aa0 = n_aa * g.mon_alpha_alpha_m0;
    let truth_aa1 = n_aa * g.mon_alpha_alpha_m1;
    let truth_v0 = n_vac * g.mon_vac_m0;
    let truth_v1 = n_vac * g.mon_vac_m1;
    [
        truth_aa0 <= aa0.upper,
        truth_aa1 <= aa1.upper,
        truth_v0 <= v0.upper,
        truth_v1 <= v1.upper,
        truth_aa0 >= aa0.lower,
        truth_v0 >= v0.lower,
    ]
}

/// One-sided test that a coverage count is consistent with a true rate of
/// at least `rate`: fails only if `P(X <= hits) < alpha`.
pub fn coverage_consistent(hits: u64, trials: u64, rate: f64, alpha: f64) -> bool {
    Binomial::new(rate, trials).unwrap().cdf(hits) >= alpha
}

/// An idealised short link on which the X-basis bound admits key and the
/// phase-error bound stays below one from 1e6 emissions upward.
pub fn ideal_link(rounds: u64) -> SystemParams {
    let mut p = SystemParams {
        source: cow_qkd::SourceParams::balanced(0.1, rounds as f64, 0.45, 0.45),
        rounds,
        ..SystemParams::default()
    };
    p.receiver.t_b = 0.05;
    p.detectors.efficiency = 1.0;
    p.detectors.dark_count_prob = 1e-8;
    p.detectors.dead_time_s = 0.0;
    p.channel.length_km = 0.0;
    p
}
