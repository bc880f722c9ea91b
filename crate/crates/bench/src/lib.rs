//! Shared inputs for the benchmarks.

use fdcf_core::experiment::drop_inputs;
use fdcf_core::ota::{NoiseKey, PilotBook};
use fdcf_core::{ChannelRealization, NetworkConfig};

pub struct Instance {
    pub cfg: NetworkConfig,
    pub chan: ChannelRealization,
    pub pilots: PilotBook,
    pub noise: NoiseKey,
}

/// Drop 0 of the given preset, trimmed to `iters` training iterations.
pub fn instance(base: NetworkConfig, iters: usize) -> Instance {
    let cfg = NetworkConfig { iters, ..base };
    let (chan, pilots, noise) = drop_inputs(&cfg, 0).expect("preset configurations are valid");
    Instance { cfg, chan, pilots, noise }
}
