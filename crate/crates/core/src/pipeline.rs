//! End-to-end evaluation: counts and gains in, [`KeyRateResult`] out.

use serde::{Deserialize, Serialize};

use crate::concentration::{bound_expected_count, bound_gain, BoundedValue, CountRecord, DeltaProvider};
use crate::error::Result;
use crate::finite_key::{
    expected_sifted_clicks, phase_error_expected_upper, phase_error_observed_upper, secure_key_length,
    xbasis_gain_lower_m0, xbasis_gain_upper_m1, KeyRateResult,
};
use crate::gains::{qber, GainSet};
use crate::params::SystemParams;

/// Block statistics fed into the finite-key bound. Real-valued so that
/// expected counts from the analytic model can be used directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineInputs {
    pub n_z: f64,
    pub n_sent_aa: f64,
    pub n_sent_vac: f64,
    pub n_aa_m0: f64,
    pub n_aa_m1: f64,
    pub n_vac_m0: f64,
    pub n_vac_m1: f64,
}

impl PipelineInputs {
    /// Expected counts for one block: decoy emissions times their gains, and
    /// the dead-time-limited sifted click model for `n_z`.
    pub fn analytic(params: &SystemParams) -> Self {
        let gains = GainSet::analytic(params);
        let rounds = params.rounds as f64;
        let n_sent_aa = rounds * params.source.p_decoy_alpha_alpha;
        let n_sent_vac = rounds * params.source.p_decoy_vacuum;
        PipelineInputs {
            n_z: expected_sifted_clicks(params, params.block_duration_s()),
            n_sent_aa,
            n_sent_vac,
            n_aa_m0: n_sent_aa * gains.mon_alpha_alpha_m0,
            n_aa_m1: n_sent_aa * gains.mon_alpha_alpha_m1,
            n_vac_m0: n_sent_vac * gains.mon_vac_m0,
            n_vac_m1: n_sent_vac * gains.mon_vac_m1,
        }
    }
}

impl From<&CountRecord> for PipelineInputs {
    fn from(r: &CountRecord) -> Self {
        PipelineInputs {
            n_z: r.n_z as f64,
            n_sent_aa: r.n_sent_aa as f64,
            n_sent_vac: r.n_sent_vac as f64,
            n_aa_m0: r.n_aa_m0 as f64,
            n_aa_m1: r.n_aa_m1 as f64,
            n_vac_m0: r.n_vac_m0 as f64,
            n_vac_m1: r.n_vac_m1 as f64,
        }
    }
}

/// Gain intervals for the four decoy/monitor combinations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoyGainBounds {
    pub aa_m0: BoundedValue,
    pub aa_m1: BoundedValue,
    pub vac_m0: BoundedValue,
    pub vac_m1: BoundedValue,
}

pub fn decoy_gain_bounds(inputs: &PipelineInputs, eps_1: f64, provider: &dyn DeltaProvider) -> Result<DecoyGainBounds> {
    let gain = |clicks: f64, sent: f64| -> Result<BoundedValue> {
        bound_gain(&bound_expected_count(clicks, sent, eps_1, provider)?, sent)
    };
    Ok(DecoyGainBounds {
        aa_m0: gain(inputs.n_aa_m0, inputs.n_sent_aa)?,
        aa_m1: gain(inputs.n_aa_m1, inputs.n_sent_aa)?,
        vac_m0: gain(inputs.n_vac_m0, inputs.n_sent_vac)?,
        vac_m1: gain(inputs.n_vac_m1, inputs.n_sent_vac)?,
    })
}

/// Runs the full bound.
///
/// `reference` supplies the data-line gains (for the QBER) and the
/// signal-state monitoring gains; decoy gains come only from `inputs`.
pub fn evaluate(
    params: &SystemParams,
    inputs: &PipelineInputs,
    reference: &GainSet,
    provider: &dyn DeltaProvider,
) -> Result<KeyRateResult> {
    let sec = &params.security;
    let mu = params.source.mu;
    let qber = qber(reference)?;
    let bounds = decoy_gain_bounds(inputs, sec.eps_1, provider)?;
    let xg_upper = xbasis_gain_upper_m1(&bounds.aa_m1, &bounds.vac_m1, mu);
    let xg_lower = xbasis_gain_lower_m0(&bounds.aa_m0, &bounds.vac_m0, mu, params.options.cross_term);
    let ep_expected = phase_error_expected_upper(reference, xg_upper, xg_lower, mu)?;
    let ep_observed = phase_error_observed_upper(ep_expected, inputs.n_z, inputs.n_z, sec.eps_2)?;
    let key = secure_key_length(inputs.n_z, ep_observed, qber, sec)?;
    Ok(KeyRateResult {
        qber,
        phase_error_expected_upper: ep_expected,
        phase_error_observed_upper: ep_observed,
        n_z: inputs.n_z,
        key,
    })
}

/// Analytic-mode evaluation: every count is its expectation.
pub fn evaluate_analytic(params: &SystemParams, provider: &dyn DeltaProvider) -> Result<KeyRateResult> {
    let gains = GainSet::analytic(params);
    evaluate(params, &PipelineInputs::analytic(params), &gains, provider)
}
