//! Closed-form click probabilities ("gains").
//!
//! A gain is the probability that one detector clicks while the other two
//! stay silent, for a given emitted state. The data line holds one detector
//! `T` gated on both time bins; the monitoring line holds `M0` and `M1`
//! behind a one-bit delay interferometer, gated on the window where adjacent
//! bins interfere.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Monitor {
    M0,
    M1,
}

/// Names every field of a [`GainSet`], in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GainField {
    Data0zTau0,
    Data0zTau1,
    Data1zTau0,
    Data1zTau1,
    MonAlphaAlphaM0,
    MonAlphaAlphaM1,
    MonVacM0,
    MonVacM1,
    Mon0zM0,
    Mon0zM1,
    Mon1zM0,
    Mon1zM1,
}

impl GainField {
    pub const ALL: [GainField; 12] = [
        GainField::Data0zTau0,
        GainField::Data0zTau1,
        GainField::Data1zTau0,
        GainField::Data1zTau1,
        GainField::MonAlphaAlphaM0,
        GainField::MonAlphaAlphaM1,
        GainField::MonVacM0,
        GainField::MonVacM1,
        GainField::Mon0zM0,
        GainField::Mon0zM1,
        GainField::Mon1zM0,
        GainField::Mon1zM1,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            GainField::Data0zTau0 => "data_0z_tau0",
            GainField::Data0zTau1 => "data_0z_tau1",
            GainField::Data1zTau0 => "data_1z_tau0",
            GainField::Data1zTau1 => "data_1z_tau1",
            GainField::MonAlphaAlphaM0 => "mon_alpha_alpha_m0",
            GainField::MonAlphaAlphaM1 => "mon_alpha_alpha_m1",
            GainField::MonVacM0 => "mon_vac_m0",
            GainField::MonVacM1 => "mon_vac_m1",
            GainField::Mon0zM0 => "mon_0z_m0",
            GainField::Mon0zM1 => "mon_0z_m1",
            GainField::Mon1zM0 => "mon_1z_m0",
            GainField::Mon1zM1 => "mon_1z_m1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainSet {
    pub data_0z_tau0: f64,
    pub data_0z_tau1: f64,
    pub data_1z_tau0: f64,
    pub data_1z_tau1: f64,
    pub mon_alpha_alpha_m0: f64,
    pub mon_alpha_alpha_m1: f64,
    pub mon_vac_m0: f64,
    pub mon_vac_m1: f64,
    pub mon_0z_m0: f64,
    pub mon_0z_m1: f64,
    pub mon_1z_m0: f64,
    pub mon_1z_m1: f64,
}

impl GainSet {
    pub fn analytic(params: &SystemParams) -> Self {
        let data = data_line_gains(params);
        let vac = monitor_gain_vacuum(params);
        let signal = monitor_gains_signal(params);
        GainSet {
            data_0z_tau0: data.zero_tau0,
            data_0z_tau1: data.zero_tau1,
            data_1z_tau0: data.one_tau0,
            data_1z_tau1: data.one_tau1,
            mon_alpha_alpha_m0: monitor_gain_alpha_alpha(params, Monitor::M0),
            mon_alpha_alpha_m1: monitor_gain_alpha_alpha(params, Monitor::M1),
            mon_vac_m0: vac,
            mon_vac_m1: vac,
            mon_0z_m0: signal.zero_m0,
            mon_0z_m1: signal.zero_m1,
            mon_1z_m0: signal.one_m0,
            mon_1z_m1: signal.one_m1,
        }
    }

    pub fn get(&self, field: GainField) -> f64 {
        match field {
            GainField::Data0zTau0 => self.data_0z_tau0,
            GainField::Data0zTau1 => self.data_0z_tau1,
            GainField::Data1zTau0 => self.data_1z_tau0,
            GainField::Data1zTau1 => self.data_1z_tau1,
            GainField::MonAlphaAlphaM0 => self.mon_alpha_alpha_m0,
            GainField::MonAlphaAlphaM1 => self.mon_alpha_alpha_m1,
            GainField::MonVacM0 => self.mon_vac_m0,
            GainField::MonVacM1 => self.mon_vac_m1,
            GainField::Mon0zM0 => self.mon_0z_m0,
            GainField::Mon0zM1 => self.mon_0z_m1,
            GainField::Mon1zM0 => self.mon_1z_m0,
            GainField::Mon1zM1 => self.mon_1z_m1,
        }
    }

    /// Total probability that a signal state yields a sifted data-line click.
    pub fn data_click_probability(&self) -> f64 {
        0.5 * (self.data_0z_tau0 + self.data_0z_tau1 + self.data_1z_tau0 + self.data_1z_tau1)
    }
}

/// The four data-line gains, named by emitted bit and time bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataLineGains {
    pub zero_tau0: f64,
    pub zero_tau1: f64,
    pub one_tau0: f64,
    pub one_tau1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalMonitorGains {
    pub zero_m0: f64,
    pub zero_m1: f64,
    pub one_m0: f64,
    pub one_m1: f64,
}

/// Mean photon number reaching the data-line detector from one occupied bin.
pub fn data_line_mean(params: &SystemParams) -> f64 {
    params.transmittance() * params.receiver.t_b * params.source.mu
}

/// Mean photon number of one occupied bin entering the monitoring
/// interferometer, after the interferometer loss and front-end scaling.
pub fn monitor_line_mean(params: &SystemParams) -> f64 {
    params.transmittance()
        * (1.0 - params.receiver.t_b)
        * params.source.mu
        * params.channel.extra_loss_factor()
        * params.options.monitor_mode.intensity_scale()
}

pub fn data_line_gains(params: &SystemParams) -> DataLineGains {
    let pd = params.detectors.dark_count_prob;
    let right = (1.0 - pd).powi(3) * -(-data_line_mean(params)).exp_m1();
    let wrong = pd * (1.0 - pd).powi(2);
    DataLineGains {
        zero_tau0: right,
        zero_tau1: wrong,
        one_tau0: wrong,
        one_tau1: right,
    }
}

/// Fraction of sifted data-line clicks landing in the wrong bin.
pub fn qber(gains: &GainSet) -> Result<f64> {
    let errors = gains.data_0z_tau1 + gains.data_1z_tau0;
    let total = gains.data_0z_tau0 + errors + gains.data_1z_tau1;
    if total <= 0.0 {
        return Err(Error::Degenerate("all data-line gains are zero"));
    }
    Ok(errors / total)
}

/// Exclusive monitoring gain for the |alpha>|alpha> decoy.
///
/// `M0` sees the interference window with weight `(1 + cos phi) / 2`; `M1`
/// is treated as the dark port and clicks only through dark counts.
pub fn monitor_gain_alpha_alpha(params: &SystemParams, detector: Monitor) -> f64 {
    let pd = params.detectors.dark_count_prob;
    let m = monitor_line_mean(params);
    let data_silent = (-data_line_mean(params)).exp();
    match detector {
        Monitor::M0 => {
            let bright = m * (1.0 + params.receiver.phase_shift.cos()) / 2.0;
            (1.0 - pd).powi(3) * (1.0 - (1.0 - pd) * (-bright).exp()) * data_silent
        }
        Monitor::M1 => pd * (1.0 - pd).powi(3) * (-2.0 * m).exp() * data_silent,
    }
}

/// Exclusive monitoring gain for the vacuum decoy; the same for both monitors.
pub fn monitor_gain_vacuum(params: &SystemParams) -> f64 {
    let pd = params.detectors.dark_count_prob;
    pd * (1.0 - pd).powi(3)
}

/// Exclusive monitoring gains for the two signal states.
///
/// A lone pulse never interferes with itself. Inside the interference
/// window each monitor receives a single temporal copy carrying a quarter
/// of the monitoring-line intensity, whichever bin the pulse occupied.
pub fn monitor_gains_signal(params: &SystemParams) -> SignalMonitorGains {
    let pd = params.detectors.dark_count_prob;
    let copy = monitor_line_mean(params) / 4.0;
    let g = (1.0 - pd).powi(3) * (1.0 - (1.0 - pd) * (-copy).exp()) * (-data_line_mean(params)).exp();
    SignalMonitorGains {
        zero_m0: g,
        zero_m1: g,
        one_m0: g,
        one_m1: g,
    }
}
