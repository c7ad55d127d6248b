//! X-basis gain bounds, phase-error bounds and the finite-key length.

use serde::{Deserialize, Serialize};

use crate::concentration::{delta_hoeffding, BoundedValue};
use crate::error::{Error, Result};
use crate::gains::GainSet;
use crate::params::{binary_entropy, CrossTerm, SecurityParams, SystemParams};

/// Normalisations of the virtual X-basis states for mean photon number `mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XBasisConstants {
    pub n_plus: f64,
    pub n_minus: f64,
}

impl XBasisConstants {
    pub fn new(mu: f64) -> Self {
        let e = (-mu).exp();
        XBasisConstants {
            n_plus: 2.0 * (1.0 + e),
            n_minus: 2.0 * (1.0 - e),
        }
    }
}

/// Upper bound on the M1 gain of the virtual |0x> state, from the upper
/// bounds on the two decoy gains at M1.
pub fn xbasis_gain_upper_m1(aa_m1: &BoundedValue, vac_m1: &BoundedValue, mu: f64) -> f64 {
    let XBasisConstants { n_plus, n_minus } = XBasisConstants::new(mu);
    let s_aa = aa_m1.upper.max(0.0).sqrt();
    let s_vac = vac_m1.upper.max(0.0).sqrt();
    let coherent = ((mu / 2.0).exp() * s_aa + (-mu / 2.0).exp() * s_vac).powi(2) / n_plus;
    let multiphoton = n_minus / n_plus * (mu.exp() * n_minus / 4.0 + mu.exp() * s_aa + s_vac);
    (coherent + multiphoton).clamp(0.0, 1.0)
}

/// Lower bound on the M0 gain of the virtual |0x> state. Linear terms use
/// the lower decoy bounds, square-root terms the upper ones.
pub fn xbasis_gain_lower_m0(aa_m0: &BoundedValue, vac_m0: &BoundedValue, mu: f64, cross: CrossTerm) -> f64 {
    let XBasisConstants { n_plus, n_minus } = XBasisConstants::new(mu);
    let up_aa = aa_m0.upper.max(0.0);
    let up_vac = vac_m0.upper.max(0.0);
    let cross_term = match cross {
        CrossTerm::Mixed => (up_aa * up_vac).sqrt(),
        CrossTerm::AsPrinted => (up_vac * up_vac).sqrt(),
    };
    let direct = (mu.exp() * aa_m0.lower + (-mu).exp() * vac_m0.lower - 2.0 * cross_term) / n_plus;
    let multiphoton = n_minus / n_plus * (mu.exp() * up_aa.sqrt() + up_vac.sqrt());
    (direct - multiphoton).clamp(0.0, 1.0)
}

/// Upper bound on the expected phase-error rate (the virtual X-basis bit
/// error rate), clamped to [0, 1].
pub fn phase_error_expected_upper(gains: &GainSet, xg_upper: f64, xg_lower: f64, mu: f64) -> Result<f64> {
    let n_plus = XBasisConstants::new(mu).n_plus;
    let denom = 2.0 * (gains.mon_0z_m0 + gains.mon_0z_m1 + gains.mon_1z_m0 + gains.mon_1z_m1);
    if denom <= 0.0 {
        return Err(Error::Degenerate("all signal-state monitoring gains are zero"));
    }
    let numer = n_plus * (xg_upper - xg_lower) + 2.0 * (gains.mon_0z_m0 + gains.mon_1z_m0);
    Ok((numer / denom).clamp(0.0, 1.0))
}

/// Upper bound on the observed phase-error rate among `n_z` sifted clicks.
///
/// `trials` is the number of rounds the expected rate applies to; the
/// pipeline passes `n_z` so that the bound tends to the expected rate as
/// the block grows.
pub fn phase_error_observed_upper(ep_expected_upper: f64, n_z: f64, trials: f64, eps_2: f64) -> Result<f64> {
    if n_z <= 0.0 {
        return Err(Error::DivisionByZero("no sifted clicks (n_z = 0)"));
    }
    let errors_upper = trials * ep_expected_upper + delta_hoeffding(n_z, eps_2)?;
    Ok((errors_upper / n_z).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbortReason {
    QberAboveThreshold,
    PhaseErrorTooHigh,
    NonPositiveKey,
}

impl AbortReason {
    pub fn as_str(self) -> &'static str {
        match self {
            AbortReason::QberAboveThreshold => "qber_above_threshold",
            AbortReason::PhaseErrorTooHigh => "phase_error_too_high",
            AbortReason::NonPositiveKey => "non_positive_key",
        }
    }
}

/// Term-by-term accounting of the key length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyLength {
    /// `n_z * (1 - h(E_p))`.
    pub privacy_term_bits: f64,
    pub leak_ec_bits: f64,
    pub correctness_term_bits: f64,
    pub secrecy_term_bits: f64,
    /// Zero whenever `aborted` is set.
    pub key_length_bits: f64,
    pub aborted: Option<AbortReason>,
}

pub fn secure_key_length(n_z: f64, ep_observed_upper: f64, qber: f64, sec: &SecurityParams) -> Result<KeyLength> {
    let privacy_term_bits = n_z * (1.0 - binary_entropy(ep_observed_upper)?);
    let leak_ec_bits = sec.f_ec * n_z * binary_entropy(qber)?;
    let correctness_term_bits = (2.0 / sec.eps_cor).log2();
    let secrecy_term_bits = 2.0 * (5.0 / sec.eps_sec).log2();
    let raw = privacy_term_bits - leak_ec_bits - correctness_term_bits - secrecy_term_bits;

    let aborted = if qber > sec.qber_abort_threshold {
        Some(AbortReason::QberAboveThreshold)
    } else if ep_observed_upper >= 0.5 {
        Some(AbortReason::PhaseErrorTooHigh)
    } else if raw <= 0.0 {
        Some(AbortReason::NonPositiveKey)
    } else {
        None
    };
    Ok(KeyLength {
        privacy_term_bits,
        leak_ec_bits,
        correctness_term_bits,
        secrecy_term_bits,
        key_length_bits: if aborted.is_some() { 0.0 } else { raw },
        aborted,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRateResult {
    pub qber: f64,
    pub phase_error_expected_upper: f64,
    pub phase_error_observed_upper: f64,
    pub n_z: f64,
    pub key: KeyLength,
}

impl KeyRateResult {
    pub fn key_length_bits(&self) -> f64 {
        self.key.key_length_bits
    }

    pub fn aborted(&self) -> Option<AbortReason> {
        self.key.aborted
    }
}

/// Modelled number of sifted data-line clicks in `duration_s` seconds.
///
/// The raw click rate is saturated by a non-paralyzable dead time,
/// `rate / (1 + rate * dead_time)`.
pub fn expected_sifted_clicks(params: &SystemParams, duration_s: f64) -> f64 {
    let raw = raw_sifted_click_rate(params);
    let dead = params.detectors.dead_time_s;
    let saturated = if dead > 0.0 { raw / (1.0 + raw * dead) } else { raw };
    saturated * duration_s
}

pub fn raw_sifted_click_rate(params: &SystemParams) -> f64 {
    let gains = GainSet::analytic(params);
    params.source.pulse_pair_rate * params.source.p_signal() * gains.data_click_probability()
}
