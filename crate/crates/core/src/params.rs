//! Experimental configuration, channel transmittance and shared numeric helpers.
//!
//! All parameter types are plain data. Build a [`SystemParams`], run
//! [`SystemParams::validate`] once, and hand the result to the rest of the
//! crate; nothing downstream re-checks invariants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, ValidationError};

/// Dark counts per second of the reference SPAD.
pub const REFERENCE_DARK_COUNTS_PER_S: f64 = 900.0;

/// Tolerance used when checking that the signal probabilities are balanced.
const BALANCE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceParams {
    /// Mean photon number of a non-empty pulse.
    pub mu: f64,
    /// Logical rounds (pulse pairs) per second, Hz.
    pub pulse_pair_rate: f64,
    pub p_decoy_alpha_alpha: f64,
    pub p_decoy_vacuum: f64,
    pub p_z0: f64,
    pub p_z1: f64,
}

impl SourceParams {
    /// Signal probabilities that balance the given decoy probabilities.
    pub fn balanced(mu: f64, pulse_pair_rate: f64, p_decoy_alpha_alpha: f64, p_decoy_vacuum: f64) -> Self {
        let p_z = balanced_signal_probability(p_decoy_alpha_alpha, p_decoy_vacuum);
        SourceParams {
            mu,
            pulse_pair_rate,
            p_decoy_alpha_alpha,
            p_decoy_vacuum,
            p_z0: p_z,
            p_z1: p_z,
        }
    }

    pub fn p_signal(&self) -> f64 {
        self.p_z0 + self.p_z1
    }
}

pub fn balanced_signal_probability(p_decoy_alpha_alpha: f64, p_decoy_vacuum: f64) -> f64 {
    0.5 * (1.0 - p_decoy_alpha_alpha - p_decoy_vacuum)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub length_km: f64,
    pub attenuation_db_per_km: f64,
    /// Lumped insertion loss of the monitoring interferometer, dB.
    pub extra_loss_db: f64,
}

impl ChannelParams {
    /// Power transmittance of the extra loss; only the monitoring line sees it.
    pub fn extra_loss_factor(&self) -> f64 {
        db_to_transmittance(self.extra_loss_db)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    pub efficiency: f64,
    /// Dark-count probability per detection gate.
    pub dark_count_prob: f64,
    pub dead_time_s: f64,
}

impl DetectorParams {
    /// Per-gate dark-count probability from a counts/second figure.
    pub fn dark_prob_from_rate(counts_per_s: f64, gate_rate_hz: f64) -> f64 {
        counts_per_s / gate_rate_hz
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReceiverParams {
    /// Data-line transmittance of Bob's asymmetric beam splitter.
    pub t_b: f64,
    /// Interferometer phase, radians.
    pub phase_shift: f64,
    pub disclose_rate: f64,
    pub compression_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecurityParams {
    pub eps_cor: f64,
    pub eps_sec: f64,
    pub eps_1: f64,
    pub eps_2: f64,
    pub f_ec: f64,
    pub qber_abort_threshold: f64,
}

impl SecurityParams {
    /// Uses `eps_1 = eps_2 = eps_sec / 10`.
    pub fn with_default_estimation(eps_cor: f64, eps_sec: f64, f_ec: f64, qber_abort_threshold: f64) -> Self {
        SecurityParams {
            eps_cor,
            eps_sec,
            eps_1: eps_sec / 10.0,
            eps_2: eps_sec / 10.0,
            f_ec,
            qber_abort_threshold,
        }
    }
}

/// Which monitoring-interferometer front end the gain formulas describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonitorMode {
    /// Lossless optical switch; the printed gain formulas.
    #[default]
    Switch,
    /// 50:50 delay-line interferometer; every monitoring intensity halved.
    Splitter,
}

impl MonitorMode {
    pub fn intensity_scale(self) -> f64 {
        match self {
            MonitorMode::Switch => 1.0,
            MonitorMode::Splitter => 0.5,
        }
    }
}

/// Cross term under the square root of the lower X-basis gain bound on M0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossTerm {
    /// `sqrt(G_aa * G_00)`, the completing-the-square form.
    #[default]
    Mixed,
    /// `sqrt(G_00 * G_00)`, literally as printed in the source derivation.
    AsPrinted,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ModelOptions {
    pub monitor_mode: MonitorMode,
    pub cross_term: CrossTerm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub source: SourceParams,
    pub channel: ChannelParams,
    pub detectors: DetectorParams,
    pub receiver: ReceiverParams,
    pub security: SecurityParams,
    pub options: ModelOptions,
    /// Protocol rounds in one block.
    pub rounds: u64,
}

impl Default for SystemParams {
    /// The laboratory configuration: 80 km of standard fiber, SPAD with
    /// 10% efficiency and 50 us dead time, a one-second block at 500 MHz.
    fn default() -> Self {
        let pulse_pair_rate = 5e8;
        SystemParams {
            source: SourceParams::balanced(0.5, pulse_pair_rate, 0.01, 0.01),
            channel: ChannelParams {
                length_km: 80.0,
                attenuation_db_per_km: 0.2,
                extra_loss_db: 0.0,
            },
            detectors: DetectorParams {
                efficiency: 0.1,
                dark_count_prob: DetectorParams::dark_prob_from_rate(
                    REFERENCE_DARK_COUNTS_PER_S,
                    pulse_pair_rate,
                ),
                dead_time_s: 50e-6,
            },
            receiver: ReceiverParams {
                t_b: 0.9,
                phase_shift: 0.0,
                disclose_rate: 0.1,
                compression_ratio: 0.8,
            },
            security: SecurityParams::with_default_estimation(1e-15, 1e-10, 1.1, 0.05),
            options: ModelOptions::default(),
            rounds: 500_000_000,
        }
    }
}

impl SystemParams {
    /// Block duration in seconds implied by `rounds` and the pulse-pair rate.
    pub fn block_duration_s(&self) -> f64 {
        self.rounds as f64 / self.source.pulse_pair_rate
    }

    /// Overall transmittance from source to the receiver's input.
    pub fn transmittance(&self) -> f64 {
        channel_transmittance(&self.channel, &self.detectors)
    }

    /// Returns `self` unchanged iff every invariant holds, otherwise the full
    /// list of violations.
    pub fn validate(self) -> std::result::Result<Self, ValidationError> {
        let mut v = Vec::new();
        let s = &self.source;

        if !(s.mu > 0.0 && s.mu < 1.0) {
            v.push(format!("source.mu = {}: mu < 1 violated (need 0 < mu < 1)", s.mu));
        }
        if !(s.pulse_pair_rate > 0.0 && s.pulse_pair_rate.is_finite()) {
            v.push(format!("source.pulse_pair_rate = {} must be positive", s.pulse_pair_rate));
        }
        for (name, p) in [
            ("source.p_decoy_alpha_alpha", s.p_decoy_alpha_alpha),
            ("source.p_decoy_vacuum", s.p_decoy_vacuum),
            ("source.p_z0", s.p_z0),
            ("source.p_z1", s.p_z1),
        ] {
            if !in_unit_interval(p) {
                v.push(format!("{name} = {p} is not a probability"));
            }
        }
        let total = s.p_decoy_alpha_alpha + s.p_decoy_vacuum + s.p_z0 + s.p_z1;
        if (total - 1.0).abs() > BALANCE_TOLERANCE {
            v.push(format!("source probabilities sum to {total}, not 1"));
        }
        let balanced = balanced_signal_probability(s.p_decoy_alpha_alpha, s.p_decoy_vacuum);
        if (s.p_z0 - balanced).abs() > BALANCE_TOLERANCE || (s.p_z1 - balanced).abs() > BALANCE_TOLERANCE {
            v.push(format!(
                "signal probabilities ({}, {}) must both equal (1 - p_d1 - p_d2)/2 = {balanced}",
                s.p_z0, s.p_z1
            ));
        }

        let c = &self.channel;
        if !(c.length_km >= 0.0 && c.length_km.is_finite()) {
            v.push(format!("channel.length_km = {} must be >= 0", c.length_km));
        }
        if !(c.attenuation_db_per_km > 0.0 && c.attenuation_db_per_km.is_finite()) {
            v.push(format!(
                "channel.attenuation_db_per_km = {} must be > 0",
                c.attenuation_db_per_km
            ));
        }
        if !(c.extra_loss_db >= 0.0 && c.extra_loss_db.is_finite()) {
            v.push(format!("channel.extra_loss_db = {} must be >= 0", c.extra_loss_db));
        }

        let d = &self.detectors;
        if !(d.efficiency > 0.0 && d.efficiency <= 1.0) {
            v.push(format!("detectors.efficiency = {} must be in (0, 1]", d.efficiency));
        }
        if !(d.dark_count_prob >= 0.0 && d.dark_count_prob < 1.0) {
            v.push(format!(
                "detectors.dark_count_prob = {} must be in [0, 1)",
                d.dark_count_prob
            ));
        }
        if !(d.dead_time_s >= 0.0 && d.dead_time_s.is_finite()) {
            v.push(format!("detectors.dead_time_s = {} must be >= 0", d.dead_time_s));
        }

        let r = &self.receiver;
        if !(r.t_b > 0.0 && r.t_b < 1.0) {
            v.push(format!("receiver.t_b = {} must be in (0, 1)", r.t_b));
        }
        if !r.phase_shift.is_finite() {
            v.push(format!("receiver.phase_shift = {} must be finite", r.phase_shift));
        }
        if !in_unit_interval(r.disclose_rate) {
            v.push(format!("receiver.disclose_rate = {} must be in [0, 1]", r.disclose_rate));
        }
        if !in_unit_interval(r.compression_ratio) {
            v.push(format!(
                "receiver.compression_ratio = {} must be in [0, 1]",
                r.compression_ratio
            ));
        }

        let sec = &self.security;
        for (name, eps) in [
            ("security.eps_cor", sec.eps_cor),
            ("security.eps_sec", sec.eps_sec),
            ("security.eps_1", sec.eps_1),
            ("security.eps_2", sec.eps_2),
        ] {
            if !(eps > 0.0 && eps < 1.0) {
                v.push(format!("{name} = {eps} must be in (0, 1)"));
            }
        }
        if !(sec.f_ec >= 1.0 && sec.f_ec.is_finite()) {
            v.push(format!("security.f_ec = {} must be >= 1", sec.f_ec));
        }
        if !in_unit_interval(sec.qber_abort_threshold) {
            v.push(format!(
                "security.qber_abort_threshold = {} must be in [0, 1]",
                sec.qber_abort_threshold
            ));
        }

        if self.rounds < 1 {
            v.push("rounds must be >= 1".to_string());
        }

        if v.is_empty() {
            Ok(self)
        } else {
            Err(ValidationError { violations: v })
        }
    }
}

fn in_unit_interval(p: f64) -> bool {
    (0.0..=1.0).contains(&p)
}

pub fn db_to_transmittance(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

/// Fiber transmittance times detector efficiency.
///
/// Loss grows linearly in dB with length, so the result falls off as
/// `eta_d * 10^(-alpha * l / 10)`. The monitoring-line extra loss is not
/// included; see [`ChannelParams::extra_loss_factor`].
pub fn channel_transmittance(channel: &ChannelParams, detectors: &DetectorParams) -> f64 {
    detectors.efficiency * db_to_transmittance(channel.attenuation_db_per_km * channel.length_km)
}

/// Shannon entropy of a Bernoulli(p) variable, in bits.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain {
            what: "binary entropy argument",
            value: p,
            domain: "[0, 1]",
        });
    }
    if p == 0.0 || p == 1.0 {
        return Ok(0.0);
    }
    Ok(-p * p.log2() - (1.0 - p) * (1.0 - p).log2())
}
