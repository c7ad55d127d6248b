//! Finite-key analysis of two-decoy coherent one-way QKD.
//!
//! The crate has three layers:
//!
//! * [`gains`] evaluates closed-form click probabilities for every emitted
//!   state, and [`simulator`] reproduces them pulse by pulse;
//! * [`concentration`] and [`finite_key`] turn observed counts into bounds
//!   on the phase-error rate and the extractable key length, chained
//!   together by [`pipeline`];
//! * [`scan`] sweeps a parameter, bisects for thresholds and writes curves.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod concentration;
pub mod error;
pub mod finite_key;
pub mod gains;
pub mod params;
pub mod pipeline;
pub mod scan;
pub mod simulator;
pub mod textio;

pub use concentration::{BoundedValue, CountRecord, DeltaProvider, Hoeffding};
pub use error::{Error, Result, ValidationError};
pub use finite_key::{AbortReason, KeyLength, KeyRateResult};
pub use gains::{GainField, GainSet, Monitor};
pub use params::{
    binary_entropy, channel_transmittance, ChannelParams, CrossTerm, DetectorParams, ModelOptions, MonitorMode,
    ReceiverParams, SecurityParams, SourceParams, SystemParams,
};
pub use scan::{Format, Metric, PipelineMode, ScanRow, ScanSpec, ScanVariable};
pub use simulator::{simulate_session, SessionTally, SimConfig, SimMode};
