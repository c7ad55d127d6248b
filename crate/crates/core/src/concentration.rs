//! Finite-size fluctuation bounds: observed counts to intervals on their
//! expectations, and count intervals to gain intervals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observed click counts from one block, per emitted decoy class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CountRecord {
    pub rounds: u64,
    /// Sifted data-line clicks.
    pub n_z: u64,
    pub n_sent_aa: u64,
    pub n_sent_vac: u64,
    pub n_aa_m0: u64,
    pub n_aa_m1: u64,
    pub n_vac_m0: u64,
    pub n_vac_m1: u64,
}

impl CountRecord {
    pub fn validate(self) -> Result<Self> {
        let mut v = Vec::new();
        if self.n_sent_aa + self.n_sent_vac > self.rounds {
            v.push(format!(
                "decoy emissions {} + {} exceed rounds {}",
                self.n_sent_aa, self.n_sent_vac, self.rounds
            ));
        }
        if self.n_z > self.rounds - self.rounds.min(self.n_sent_aa + self.n_sent_vac) {
            v.push(format!("n_z = {} exceeds the signal rounds", self.n_z));
        }
        for (name, clicks, sent) in [
            ("n_aa_m0", self.n_aa_m0, self.n_sent_aa),
            ("n_aa_m1", self.n_aa_m1, self.n_sent_aa),
            ("n_vac_m0", self.n_vac_m0, self.n_sent_vac),
            ("n_vac_m1", self.n_vac_m1, self.n_sent_vac),
        ] {
            if clicks > sent {
                v.push(format!("{name} = {clicks} exceeds its emission count {sent}"));
            }
        }
        if self.n_aa_m0 + self.n_aa_m1 > self.n_sent_aa {
            v.push("exclusive |aa> monitor clicks exceed n_sent_aa".to_string());
        }
        if self.n_vac_m0 + self.n_vac_m1 > self.n_sent_vac {
            v.push("exclusive vacuum monitor clicks exceed n_sent_vac".to_string());
        }
        if v.is_empty() {
            Ok(self)
        } else {
            Err(Error::Precondition(v.join("; ")))
        }
    }

    /// Associative merge of two tallies.
    pub fn merge(self, other: CountRecord) -> CountRecord {
        CountRecord {
            rounds: self.rounds + other.rounds,
            n_z: self.n_z + other.n_z,
            n_sent_aa: self.n_sent_aa + other.n_sent_aa,
            n_sent_vac: self.n_sent_vac + other.n_sent_vac,
            n_aa_m0: self.n_aa_m0 + other.n_aa_m0,
            n_aa_m1: self.n_aa_m1 + other.n_aa_m1,
            n_vac_m0: self.n_vac_m0 + other.n_vac_m0,
            n_vac_m1: self.n_vac_m1 + other.n_vac_m1,
        }
    }
}

/// A point estimate with a two-sided interval and the probability that the
/// interval misses the true expectation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundedValue {
    pub observed: f64,
    pub lower: f64,
    pub upper: f64,
    pub failure_prob: f64,
}

impl BoundedValue {
    pub fn exact(value: f64) -> Self {
        BoundedValue {
            observed: value,
            lower: value,
            upper: value,
            failure_prob: f64::MIN_POSITIVE,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// Deviation allowance for a sum of `trials` bounded terms at failure
/// probability `eps`.
pub trait DeltaProvider: Send + Sync {
    fn delta(&self, trials: f64, eps: f64) -> Result<f64>;
}

/// `delta = sqrt(n/2 * ln(1/eps))`, the Hoeffding-Azuma form.
#[derive(Debug, Clone, Copy, Default)]
pub struct Hoeffding;

impl DeltaProvider for Hoeffding {
    fn delta(&self, trials: f64, eps: f64) -> Result<f64> {
        delta_hoeffding(trials, eps)
    }
}

pub fn delta_hoeffding(n: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Domain {
            what: "failure probability",
            value: eps,
            domain: "(0, 1)",
        });
    }
    if !(n >= 0.0) {
        return Err(Error::Domain {
            what: "trial count",
            value: n,
            domain: "[0, inf)",
        });
    }
    Ok((0.5 * n * (1.0 / eps).ln()).sqrt())
}

/// Two-sided interval on the expected click count given `observed` clicks
/// out of `n_emitted` emissions. The lower side is clamped at zero.
pub fn bound_expected_count(
    observed: f64,
    n_emitted: f64,
    eps: f64,
    provider: &dyn DeltaProvider,
) -> Result<BoundedValue> {
    if observed < 0.0 || observed > n_emitted {
        return Err(Error::Precondition(format!(
            "observed count {observed} outside [0, {n_emitted}]"
        )));
    }
    let delta = provider.delta(n_emitted, eps)?;
    Ok(BoundedValue {
        observed,
        lower: (observed - delta).max(0.0),
        upper: observed + delta,
        failure_prob: eps,
    })
}

/// Converts a count interval into a gain interval clamped to [0, 1].
pub fn bound_gain(count: &BoundedValue, n_emitted: f64) -> Result<BoundedValue> {
    if n_emitted <= 0.0 {
        return Err(Error::DivisionByZero("decoy class was never emitted"));
    }
    let scale = |x: f64| (x / n_emitted).clamp(0.0, 1.0);
    Ok(BoundedValue {
        observed: scale(count.observed),
        lower: scale(count.lower),
        upper: scale(count.upper),
        failure_prob: count.failure_prob,
    })
}
