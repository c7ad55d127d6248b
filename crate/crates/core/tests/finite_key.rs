mod common;

use cow_qkd::finite_key::{
    phase_error_expected_upper, secure_key_length, xbasis_gain_lower_m0, xbasis_gain_upper_m1, XBasisConstants,
};
use cow_qkd::pipeline::{evaluate, evaluate_analytic, PipelineInputs};
use cow_qkd::{AbortReason, BoundedValue, GainSet, Hoeffding, SystemParams};
use proptest::prelude::*;

use common::*;

/// Phase-error bound from exact (infinite-block) gains, without the clamp.
fn exact_phase_error(p: &SystemParams) -> f64 {
    let g = GainSet::analytic(p);
    let mu = p.source.mu;
    let XBasisConstants { n_plus, n_minus } = XBasisConstants::new(mu);
    let (aa1, v1) = (g.mon_alpha_alpha_m1.sqrt(), g.mon_vac_m1.sqrt());
    let upper = ((mu / 2.0).exp() * aa1 + (-mu / 2.0).exp() * v1).powi(2) / n_plus
        + n_minus / n_plus * (mu.exp() * n_minus / 4.0 + mu.exp() * aa1 + v1);
    let (aa0, v0) = (g.mon_alpha_alpha_m0, g.mon_vac_m0);
    let lower = ((mu.exp() * aa0 + (-mu).exp() * v0 - 2.0 * (aa0 * v0).sqrt()) / n_plus
        - n_minus / n_plus * (mu.exp() * aa0.sqrt() + v0.sqrt()))
    .max(0.0);
    let signal = g.mon_0z_m0 + g.mon_0z_m1 + g.mon_1z_m0 + g.mon_1z_m1;
    (n_plus * (upper - lower) + 2.0 * (g.mon_0z_m0 + g.mon_1z_m0)) / (2.0 * signal)
}

fn exact_limit(p: &SystemParams) -> f64 {
    let g = GainSet::analytic(p);
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
}

#[test]
fn laboratory_phase_error_fixture() {
    let mut p = lab_fast_detector();
    p.channel.length_km = 60.0;
    let r = evaluate_analytic(&p, &Hoeffding).unwrap();
    assert_eq!(r.phase_error_expected_upper, 1.0);
    assert_eq!(r.phase_error_observed_upper, 1.0);
    assert_eq!(r.aborted(), Some(AbortReason::PhaseErrorTooHigh));
    assert_eq!(r.key_length_bits(), 0.0);
    // The unclamped bound rises with length, like the published curve.
    let mut prev = 0.0;
    for km in (20..=120).step_by(5) {
        p.channel.length_km = km as f64;
        let e = exact_phase_error(&p);
        assert!(e > 1.0 && e >= prev, "{km} km: {e}");
        prev = e;
    }
}

#[test]
fn exact_gain_limit_matches_hand_computation() {
    let p = ideal_link(1_000_000);
    assert!((exact_limit(&p) - exact_phase_error(&p)).abs() < 1e-12);
}

#[test]
fn phase_error_converges_with_block_size() {
    let limit = exact_limit(&ideal_link(1_000_000));
    assert!(limit > 0.0 && limit < 0.5);
    let gaps: Vec<f64> = (6..=10)
        .map(|k| evaluate_analytic(&ideal_link(10u64.pow(k)), &Hoeffding).unwrap().phase_error_observed_upper - limit)
        .collect();
    assert!(gaps[0] < 1.0 - limit, "first point clamped: {gaps:?}");
    for w in gaps.windows(2) {
        assert!(w[1] < w[0] && w[1] > 0.0, "{gaps:?}");
    }
}

#[test]
fn ideal_link_yields_key_at_large_blocks() {
    let r = evaluate_analytic(&ideal_link(10_000_000_000), &Hoeffding).unwrap();
    assert_eq!(r.aborted(), None, "{r:?}");
    assert!(r.key_length_bits() > 0.0);
}

#[test]
fn replayed_expectations_reproduce_analytic_result() {
    let p = ideal_link(1_000_000_000);
    let a = evaluate_analytic(&p, &Hoeffding).unwrap();
    let b = evaluate(&p, &PipelineInputs::analytic(&p), &GainSet::analytic(&p), &Hoeffding).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #[test]
    fn key_non_increasing_in_phase_error(n_z in 1e3..1e9f64, q in 0.0..0.05f64, e1 in 0.0..1.0f64, e2 in 0.0..1.0f64) {
        let sec = SystemParams::default().security;
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let a = secure_key_length(n_z, lo, q, &sec).unwrap().key_length_bits;
        let b = secure_key_length(n_z, hi, q, &sec).unwrap().key_length_bits;
        prop_assert!(b <= a);
    }

    #[test]
    fn key_non_increasing_in_qber(n_z in 1e3..1e9f64, ep in 0.0..0.5f64, q1 in 0.0..0.5f64, q2 in 0.0..0.5f64) {
        let sec = SystemParams::default().security;
        let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
        let a = secure_key_length(n_z, ep, lo, &sec).unwrap().key_length_bits;
        let b = secure_key_length(n_z, ep, hi, &sec).unwrap().key_length_bits;
        prop_assert!(b <= a);
    }

    #[test]
    fn analytic_results_are_well_formed(km in 0.0..250.0f64, eff in 0.05..1.0f64) {
        let mut p = SystemParams::default();
        p.channel.length_km = km;
        p.detectors.efficiency = eff;
        let r = evaluate_analytic(&p, &Hoeffding).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.phase_error_observed_upper));
        prop_assert!(r.phase_error_observed_upper >= r.phase_error_expected_upper);
        prop_assert!(r.key_length_bits() >= 0.0);
        prop_assert_eq!(r.aborted().is_some(), r.key_length_bits() == 0.0);
    }
}
