//! Beamforming for full-duplex cell-free massive MIMO networks.
//!
//! Sum-MSE alternating optimization with perfect channel knowledge, and its
//! over-the-air counterpart that learns every update from three pilot slots
//! per iteration.

pub mod baselines;
pub mod config;
pub mod error;
pub mod experiment;
pub mod fixture;
pub mod metrics;
pub mod numerics;
pub mod ota;
pub mod perfect_csi;
pub mod topology;
pub mod validate;

pub use baselines::{SchemeId, SchemeRun};
pub use config::{DampingMode, NetworkConfig, ScalingRule, Schedule};
pub use error::{Error, Result};
pub use metrics::{BeamformerSet, EffectiveChannelCache, IterationMetrics, ResidualSi};
pub use topology::ChannelRealization;
