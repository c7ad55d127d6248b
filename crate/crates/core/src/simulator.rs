//! Pulse-level Monte-Carlo simulation of the two-decoy protocol.
//!
//! Each round Alice emits one of four two-bin states. Bob's data detector
//! `T` is gated on both bins; the monitors `M0`/`M1` are gated on the window
//! where the interferometer overlaps the two bins of the round. Every gate
//! clicks through an independent dark count (probability `p_d`) or through
//! the signal (probability `1 - exp(-mean)` for a coherent mode of mean
//! photon number `mean`), so the overall click probability is
//! `1 - (1 - p_d) exp(-mean)`.
//!
//! Randomness: rounds are split into chunks of [`CHUNK_ROUNDS`]. Chunk `k`
//! draws from `ChaCha8Rng::seed_from_u64(seed)` switched to stream `k`, so a
//! session is reproducible regardless of how chunks are scheduled. Every
//! round consumes exactly [`DRAWS_PER_ROUND`] uniforms in both modes, which
//! makes a streaming run a pointwise suppression of the per-pair run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::concentration::CountRecord;
use crate::error::{Error, Result};
use crate::gains::{data_line_mean, monitor_line_mean, GainField, GainSet};
use crate::params::SystemParams;

pub const CHUNK_ROUNDS: u64 = 1 << 16;
pub const DRAWS_PER_ROUND: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StateKind {
    /// Pulse in the first bin.
    Z0,
    /// Pulse in the second bin.
    Z1,
    DecoyAA,
    DecoyVac,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmittedState {
    pub kind: StateKind,
    pub round_index: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DetectorId {
    DataT,
    MonM0,
    MonM1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TimeBin {
    Tau0,
    Tau1,
    Interference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectionEvent {
    pub round_index: u64,
    pub detector: DetectorId,
    pub time_bin: TimeBin,
    /// The signal alone would not have clicked.
    pub is_dark: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    #[default]
    PerPairIndependent,
    StreamingWithDeadtime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub rounds: u64,
    pub mode: SimMode,
}

/// Gate order within a round.
const GATES: [(DetectorId, TimeBin); 4] = [
    (DetectorId::DataT, TimeBin::Tau0),
    (DetectorId::DataT, TimeBin::Tau1),
    (DetectorId::MonM0, TimeBin::Interference),
    (DetectorId::MonM1, TimeBin::Interference),
];

/// Per-state mean photon numbers at each gate, plus the source and detector
/// constants the sampler needs.
#[derive(Debug, Clone, Copy)]
pub struct PulseModel {
    thresholds: [f64; 3],
    /// `1 - exp(-mean)` per state kind and gate.
    signal_click: [[f64; 4]; 4],
    dark: f64,
    round_period_s: f64,
    dead_time_s: f64,
}

impl PulseModel {
    pub fn new(params: &SystemParams) -> Self {
        let s = &params.source;
        let x = data_line_mean(params);
        let m = monitor_line_mean(params);
        let cos = params.receiver.phase_shift.cos();
        let lone = m / 4.0;
        let means = [
            [x, 0.0, lone, lone],
            [0.0, x, lone, lone],
            [x, x, m * (1.0 + cos) / 2.0, m * (1.0 - cos) / 2.0],
            [0.0; 4],
        ];
        let signal_click = means.map(|row| row.map(|mean: f64| -(-mean).exp_m1()));
        PulseModel {
            thresholds: [
                s.p_z0,
                s.p_z0 + s.p_z1,
                s.p_z0 + s.p_z1 + s.p_decoy_alpha_alpha,
            ],
            signal_click,
            dark: params.detectors.dark_count_prob,
            round_period_s: 1.0 / s.pulse_pair_rate,
            dead_time_s: params.detectors.dead_time_s,
        }
    }

    fn kind_of(&self, u: f64) -> StateKind {
        if u < self.thresholds[0] {
            StateKind::Z0
        } else if u < self.thresholds[1] {
            StateKind::Z1
        } else if u < self.thresholds[2] {
            StateKind::DecoyAA
        } else {
            StateKind::DecoyVac
        }
    }
}

fn kind_index(kind: StateKind) -> usize {
    match kind {
        StateKind::Z0 => 0,
        StateKind::Z1 => 1,
        StateKind::DecoyAA => 2,
        StateKind::DecoyVac => 3,
    }
}

/// One sampled round before any dead-time suppression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundOutcome {
    pub state: EmittedState,
    /// Signal-driven click per gate, in [`GATES`] order.
    pub signal: [bool; 4],
    /// Dark count per gate.
    pub dark: [bool; 4],
}

impl RoundOutcome {
    pub fn clicks(&self) -> [bool; 4] {
        std::array::from_fn(|g| self.signal[g] || self.dark[g])
    }

    pub fn events(&self) -> Vec<DetectionEvent> {
        let clicks = self.clicks();
        GATES
            .iter()
            .enumerate()
            .filter(|(g, _)| clicks[*g])
            .map(|(g, &(detector, time_bin))| DetectionEvent {
                round_index: self.state.round_index,
                detector,
                time_bin,
                is_dark: !self.signal[g],
            })
            .collect()
    }
}

pub fn sample_round<R: Rng>(model: &PulseModel, rng: &mut R, round_index: u64) -> RoundOutcome {
    let u: [f64; DRAWS_PER_ROUND] = std::array::from_fn(|_| rng.gen::<f64>());
    let kind = model.kind_of(u[0]);
    let p = &model.signal_click[kind_index(kind)];
    RoundOutcome {
        state: EmittedState { kind, round_index },
        signal: std::array::from_fn(|g| u[1 + 2 * g] < p[g]),
        dark: std::array::from_fn(|g| u[2 + 2 * g] < model.dark),
    }
}

/// Signal-state tallies that the count-log format does not carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SignalTally {
    pub n_sent_z0: u64,
    pub n_sent_z1: u64,
    /// Exclusive data-line clicks, indexed `[bit][bin]`.
    pub data: [[u64; 2]; 2],
    /// Exclusive monitor clicks, indexed `[bit][monitor]`.
    pub monitor: [[u64; 2]; 2],
}

impl SignalTally {
    fn merge(mut self, o: SignalTally) -> SignalTally {
        self.n_sent_z0 += o.n_sent_z0;
        self.n_sent_z1 += o.n_sent_z1;
        for i in 0..2 {
            for j in 0..2 {
                self.data[i][j] += o.data[i][j];
                self.monitor[i][j] += o.monitor[i][j];
            }
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SessionTally {
    pub record: CountRecord,
    pub signal: SignalTally,
}

impl SessionTally {
    pub fn merge(self, o: SessionTally) -> SessionTally {
        SessionTally {
            record: self.record.merge(o.record),
            signal: self.signal.merge(o.signal),
        }
    }

    fn add(&mut self, kind: StateKind, registered: [bool; 4]) {
        let r = &mut self.record;
        r.rounds += 1;
        match kind {
            StateKind::Z0 => self.signal.n_sent_z0 += 1,
            StateKind::Z1 => self.signal.n_sent_z1 += 1,
            StateKind::DecoyAA => r.n_sent_aa += 1,
            StateKind::DecoyVac => r.n_sent_vac += 1,
        }
        if registered.iter().filter(|&&c| c).count() != 1 {
            return;
        }
        let gate = registered.iter().position(|&c| c).unwrap_or_default();
        match (kind, gate) {
            (StateKind::Z0 | StateKind::Z1, _) => {
                let bit = kind_index(kind);
                if gate < 2 {
                    self.signal.data[bit][gate] += 1;
                    r.n_z += 1;
                } else {
                    self.signal.monitor[bit][gate - 2] += 1;
                }
            }
            (StateKind::DecoyAA, 2) => r.n_aa_m0 += 1,
            (StateKind::DecoyAA, 3) => r.n_aa_m1 += 1,
            (StateKind::DecoyVac, 2) => r.n_vac_m0 += 1,
            (StateKind::DecoyVac, 3) => r.n_vac_m1 += 1,
            _ => {}
        }
    }
}

/// Earliest time each detector can register again.
#[derive(Debug, Clone, Copy)]
struct DeadTimeState {
    free_at: [f64; 3],
}

impl DeadTimeState {
    fn new() -> Self {
        DeadTimeState {
            free_at: [f64::NEG_INFINITY; 3],
        }
    }

    fn register(&mut self, model: &PulseModel, round_index: u64, clicks: [bool; 4]) -> [bool; 4] {
        let start = round_index as f64 * model.round_period_s;
        let times = [start, start + 0.5 * model.round_period_s, start + 0.5 * model.round_period_s, start + 0.5 * model.round_period_s];
        let detector = [0usize, 0, 1, 2];
        let mut registered = [false; 4];
        for g in 0..4 {
            let d = detector[g];
            if clicks[g] && times[g] >= self.free_at[d] {
                registered[g] = true;
                self.free_at[d] = times[g] + model.dead_time_s;
            }
        }
        registered
    }
}

fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

fn chunk_span(cfg: &SimConfig, chunk: u64) -> (u64, u64) {
    let start = chunk * CHUNK_ROUNDS;
    (start, (start + CHUNK_ROUNDS).min(cfg.rounds))
}

/// Simulates `cfg.rounds` rounds and returns exact integer tallies.
pub fn simulate_session(params: &SystemParams, cfg: &SimConfig) -> SessionTally {
    let model = PulseModel::new(params);
    let chunks = cfg.rounds.div_ceil(CHUNK_ROUNDS);
    match cfg.mode {
        SimMode::PerPairIndependent => (0..chunks)
            .into_par_iter()
            .map(|chunk| {
                let mut rng = chunk_rng(cfg.seed, chunk);
                let mut tally = SessionTally::default();
                let (start, end) = chunk_span(cfg, chunk);
                for round in start..end {
                    let outcome = sample_round(&model, &mut rng, round);
                    tally.add(outcome.state.kind, outcome.clicks());
                }
                tally
            })
            .reduce(SessionTally::default, SessionTally::merge),
        SimMode::StreamingWithDeadtime => {
            let mut dead = DeadTimeState::new();
            let mut tally = SessionTally::default();
            for chunk in 0..chunks {
                let mut rng = chunk_rng(cfg.seed, chunk);
                let (start, end) = chunk_span(cfg, chunk);
                for round in start..end {
                    let outcome = sample_round(&model, &mut rng, round);
                    let registered = dead.register(&model, round, outcome.clicks());
                    tally.add(outcome.state.kind, registered);
                }
            }
            tally
        }
    }
}

/// Frequency estimates of the gains. A field is `None` when its state class
/// was never emitted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalGains {
    values: [Option<f64>; 12],
}

impl EmpiricalGains {
    pub fn get(&self, field: GainField) -> Result<f64> {
        self.values[field.index()].ok_or(Error::AbsentField(field))
    }

    pub fn is_present(&self, field: GainField) -> bool {
        self.values[field.index()].is_some()
    }

    /// Fills absent fields from `fallback`.
    pub fn or_else(&self, fallback: &GainSet) -> GainSet {
        let v = |f: GainField| self.values[f.index()].unwrap_or_else(|| fallback.get(f));
        GainSet {
            data_0z_tau0: v(GainField::Data0zTau0),
            data_0z_tau1: v(GainField::Data0zTau1),
            data_1z_tau0: v(GainField::Data1zTau0),
            data_1z_tau1: v(GainField::Data1zTau1),
            mon_alpha_alpha_m0: v(GainField::MonAlphaAlphaM0),
            mon_alpha_alpha_m1: v(GainField::MonAlphaAlphaM1),
            mon_vac_m0: v(GainField::MonVacM0),
            mon_vac_m1: v(GainField::MonVacM1),
            mon_0z_m0: v(GainField::Mon0zM0),
            mon_0z_m1: v(GainField::Mon0zM1),
            mon_1z_m0: v(GainField::Mon1zM0),
            mon_1z_m1: v(GainField::Mon1zM1),
        }
    }
}

/// Class-conditional click frequencies. Signal-state fields need the
/// simulator's [`SignalTally`]; a bare count log leaves them absent.
pub fn empirical_gains(record: &CountRecord, signal: Option<&SignalTally>) -> EmpiricalGains {
    let freq = |clicks: u64, sent: u64| (sent > 0).then(|| clicks as f64 / sent as f64);
    let mut values = [None; 12];
    values[GainField::MonAlphaAlphaM0.index()] = freq(record.n_aa_m0, record.n_sent_aa);
    values[GainField::MonAlphaAlphaM1.index()] = freq(record.n_aa_m1, record.n_sent_aa);
    values[GainField::MonVacM0.index()] = freq(record.n_vac_m0, record.n_sent_vac);
    values[GainField::MonVacM1.index()] = freq(record.n_vac_m1, record.n_sent_vac);
    if let Some(s) = signal {
        let sent = [s.n_sent_z0, s.n_sent_z1];
        let data = [
            [GainField::Data0zTau0, GainField::Data0zTau1],
            [GainField::Data1zTau0, GainField::Data1zTau1],
        ];
        let mon = [
            [GainField::Mon0zM0, GainField::Mon0zM1],
            [GainField::Mon1zM0, GainField::Mon1zM1],
        ];
        for bit in 0..2 {
            for j in 0..2 {
                values[data[bit][j].index()] = freq(s.data[bit][j], sent[bit]);
                values[mon[bit][j].index()] = freq(s.monitor[bit][j], sent[bit]);
            }
        }
    }
    EmpiricalGains { values }
}

impl SessionTally {
    pub fn empirical_gains(&self) -> EmpiricalGains {
        empirical_gains(&self.record, Some(&self.signal))
    }
}
