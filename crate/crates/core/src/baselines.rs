//! The proposed scheme and its comparison schemes behind one interface.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::metrics::IterationMetrics;
use crate::ota::{run_ibt, IbtMode, NoiseKey, PilotBook, TxLog};
use crate::perfect_csi::{run_alt_opt, UpdateControls};
use crate::topology::ChannelRealization;

/// Fraction of the time each half-duplex direction is active.
pub const HD_SHARE: f64 = 0.5;

const HD_DL_LANE: u64 = 1;
const HD_UL_LANE: u64 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeId {
    Proposed,
    SeparateOta,
    LocalMmse,
    HalfDuplex,
    PerfectCsi,
}

impl SchemeId {
    pub const ALL: [SchemeId; 5] = [
        SchemeId::Proposed,
        SchemeId::SeparateOta,
        SchemeId::LocalMmse,
        SchemeId::HalfDuplex,
        SchemeId::PerfectCsi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::Proposed => "proposed",
            SchemeId::SeparateOta => "separate_ota",
            SchemeId::LocalMmse => "local_mmse",
            SchemeId::HalfDuplex => "half_duplex",
            SchemeId::PerfectCsi => "perfect_csi",
        }
    }

    /// Pilot symbols per training iteration, for schemes that train over the air.
    pub fn resources_per_iteration(self, tau: usize) -> Option<usize> {
        self.ibt_mode().map(|m| m.resources_per_iteration(tau))
    }

    fn ibt_mode(self) -> Option<IbtMode> {
        match self {
            SchemeId::Proposed => Some(IbtMode::Proposed),
            SchemeId::SeparateOta => Some(IbtMode::Separate),
            SchemeId::LocalMmse => Some(IbtMode::Local),
            SchemeId::HalfDuplex | SchemeId::PerfectCsi => None,
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        let id = match key.as_str() {
            "proposed" | "proposed_ota" => SchemeId::Proposed,
            "separate" | "separate_ota" | "seperate" => SchemeId::SeparateOta,
            "local" | "local_mmse" => SchemeId::LocalMmse,
            "hd" | "half_duplex" => SchemeId::HalfDuplex,
            "perfect" | "perfect_csi" => SchemeId::PerfectCsi,
            _ => return Err(Error::config("schemes", format!("unknown scheme `{s}`"))),
        };
        Ok(id)
    }
}

/// Metrics of one scheme on one drop.
#[derive(Clone, Debug)]
pub struct SchemeRun {
    pub metrics: Vec<IterationMetrics>,
    pub tx: TxLog,
}

/// Everything a scheme needs to run on one drop.
#[derive(Clone, Copy, Debug)]
pub struct DropContext<'a> {
    pub chan: &'a ChannelRealization,
    pub cfg: &'a NetworkConfig,
    pub ctl: &'a UpdateControls,
    pub pilots: &'a PilotBook,
    pub noise: NoiseKey,
}

pub fn run_scheme(id: SchemeId, ctx: &DropContext<'_>) -> Result<SchemeRun> {
    match id {
        SchemeId::Proposed => run_proposed(ctx),
        SchemeId::SeparateOta => run_separate_ota(ctx),
        SchemeId::LocalMmse => run_local_mmse(ctx),
        SchemeId::HalfDuplex => run_half_duplex(ctx),
        SchemeId::PerfectCsi => {
            let out = run_alt_opt(ctx.chan, ctx.cfg, ctx.ctl)?;
            Ok(SchemeRun { metrics: out.metrics, tx: TxLog::default() })
        }
    }
}

fn ibt(ctx: &DropContext<'_>, mode: IbtMode) -> Result<SchemeRun> {
    let out = run_ibt(ctx.chan, ctx.cfg, ctx.ctl, mode, ctx.pilots, ctx.noise)?;
    Ok(SchemeRun { metrics: out.metrics, tx: out.tx })
}

pub fn run_proposed(ctx: &DropContext<'_>) -> Result<SchemeRun> {
    ibt(ctx, IbtMode::Proposed)
}

/// Trained as if UE-to-UE channels did not exist, evaluated on the true ones.
pub fn run_separate_ota(ctx: &DropContext<'_>) -> Result<SchemeRun> {
    ibt(ctx, IbtMode::Separate)
}

/// No slot 3: each AP solves its local MMSE problem.
pub fn run_local_mmse(ctx: &DropContext<'_>) -> Result<SchemeRun> {
    ibt(ctx, IbtMode::Local)
}

/// DL and UL trained and served on orthogonal halves of the resources.
/// Neither half carries UE-to-UE or AP-to-AP interference.
pub fn run_half_duplex(ctx: &DropContext<'_>) -> Result<SchemeRun> {
    let cfg = ctx.cfg;
    let dl_cfg = NetworkConfig { k_ul: 0, ..cfg.clone() };
    let ul_cfg = NetworkConfig { k_dl: 0, ..cfg.clone() };
    let dl = run_ibt(
        &ctx.chan.downlink_only(),
        &dl_cfg,
        ctx.ctl,
        IbtMode::Proposed,
        &ctx.pilots.downlink_only(),
        ctx.noise.with_lane(HD_DL_LANE),
    )?;
    let ul = run_ibt(
        &ctx.chan.uplink_only(),
        &ul_cfg,
        ctx.ctl,
        IbtMode::Proposed,
        &ctx.pilots.uplink_only(),
        ctx.noise.with_lane(HD_UL_LANE),
    )?;
    let metrics = dl
        .metrics
        .iter()
        .zip(&ul.metrics)
        .map(|(d, u)| IterationMetrics::time_shared(d, u, HD_SHARE))
        .collect();
    let tx = TxLog {
        clip_events: dl.tx.clip_events + ul.tx.clip_events,
        max_power_ratio: dl.tx.max_power_ratio.max(ul.tx.max_power_ratio),
    };
    Ok(SchemeRun { metrics, tx })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    fn drop(cfg: &NetworkConfig, seed: u64) -> (ChannelRealization, PilotBook) {
        let chan = ChannelRealization::generate(cfg, &mut RngStream::new(seed, 1), &mut RngStream::new(seed, 2)).unwrap();
        let pilots = PilotBook::build(cfg, &mut RngStream::new(seed, 3)).unwrap();
        (chan, pilots)
    }

    #[test]
    fn names_round_trip() {
        for id in SchemeId::ALL {
            assert_eq!(id.name().parse::<SchemeId>().unwrap(), id);
        }
        assert_eq!("Seperate".parse::<SchemeId>().unwrap(), SchemeId::SeparateOta);
        assert!("bogus".parse::<SchemeId>().unwrap_err().is_config());
        assert_eq!(SchemeId::LocalMmse.resources_per_iteration(32), Some(64));
        assert_eq!(SchemeId::Proposed.resources_per_iteration(32), Some(96));
        assert_eq!(SchemeId::HalfDuplex.resources_per_iteration(32), None);
    }

    #[test]
    fn separate_equals_proposed_without_cross_link() {
        let cfg = NetworkConfig::desk();
        let (chan, pilots) = drop(&cfg, 1);
        let chan = chan.without_cross_link();
        let ctl = UpdateControls::from_config(&cfg);
        let ctx = DropContext { chan: &chan, cfg: &cfg, ctl: &ctl, pilots: &pilots, noise: NoiseKey::new(1, 0) };
        let a = run_proposed(&ctx).unwrap().metrics;
        let b = run_separate_ota(&ctx).unwrap().metrics;
        for (x, y) in a.iter().zip(&b) {
            assert!((x.sum_rate - y.sum_rate).abs() <= 1e-8 * x.sum_rate.abs().max(1.0));
        }
    }

    #[test]
    fn local_equals_proposed_on_single_ap_without_noise() {
        let cfg = NetworkConfig { b: 1, grid_side: 1, ..NetworkConfig::desk() }.noiseless();
        let (chan, pilots) = drop(&cfg, 2);
        let ctl = UpdateControls::from_config(&cfg);
        let ctx = DropContext { chan: &chan, cfg: &cfg, ctl: &ctl, pilots: &pilots, noise: NoiseKey::new(2, 0) };
        let a = run_proposed(&ctx).unwrap().metrics;
        let b = run_local_mmse(&ctx).unwrap().metrics;
        for (x, y) in a.iter().zip(&b) {
            for (p, q) in x.sinr_dl.iter().chain(&x.sinr_ul).zip(y.sinr_dl.iter().chain(&y.sinr_ul)) {
                assert!((p - q).abs() <= 1e-6 * p.abs().max(1.0), "{p} vs {q}");
            }
        }
    }

    #[test]
    fn half_duplex_halves_rates() {
        let cfg = NetworkConfig::desk();
        let (chan, pilots) = drop(&cfg, 3);
        let ctl = UpdateControls::from_config(&cfg);
        let ctx = DropContext { chan: &chan, cfg: &cfg, ctl: &ctl, pilots: &pilots, noise: NoiseKey::new(3, 0) };
        let run = run_half_duplex(&ctx).unwrap();
        assert_eq!(run.metrics.len(), cfg.iters + 1);
        for m in &run.metrics {
            assert_eq!(m.sinr_dl.len(), cfg.k_dl);
            assert_eq!(m.sinr_ul.len(), cfg.k_ul);
            for (g, r) in m.sinr_dl.iter().chain(&m.sinr_ul).zip(m.rate_dl.iter().chain(&m.rate_ul)) {
                assert!((r - 0.5 * (1.0 + g).log2()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn full_duplex_dominates_half_duplex_without_coupling() {
        let base = NetworkConfig { si_stat_eps: Some(0.0), ..NetworkConfig::desk() };
        let ctl = UpdateControls::from_config(&base);
        for seed in 0..5 {
            let (chan, pilots) = drop(&base, 10 + seed);
            let chan = chan.without_cross_link().without_ap_coupling();
            let ctx = DropContext { chan: &chan, cfg: &base, ctl: &ctl, pilots: &pilots, noise: NoiseKey::new(seed, 0) };
            let fd = run_perfect(&ctx);
            let hd_cfg = base.clone();
            let hd = {
                let dl_cfg = NetworkConfig { k_ul: 0, ..hd_cfg.clone() };
                let ul_cfg = NetworkConfig { k_dl: 0, ..hd_cfg };
                let dl = run_alt_opt(&chan.downlink_only(), &dl_cfg, &ctl).unwrap().metrics;
                let ul = run_alt_opt(&chan.uplink_only(), &ul_cfg, &ctl).unwrap().metrics;
                IterationMetrics::time_shared(dl.last().unwrap(), ul.last().unwrap(), HD_SHARE).sum_rate
            };
            assert!(fd >= hd - 1e-9, "seed {seed}: {fd} < {hd}");
        }
    }

    fn run_perfect(ctx: &DropContext<'_>) -> f64 {
        run_scheme(SchemeId::PerfectCsi, ctx).unwrap().metrics.last().unwrap().sum_rate
    }
}
