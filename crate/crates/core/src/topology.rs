//! AP grid, UE drops, large-scale fading and small-scale channel draws.

use sha2::{Digest, Sha256};

use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::numerics::{db_to_linear, draw_complex_gaussian, CMat, RngStream};

/// Planar position in meters.
pub type Point = [f64; 2];

/// Distances below this are clamped before the pathloss law is applied.
pub const MIN_DISTANCE_M: f64 = 1.0;

/// One Monte-Carlo drop: positions plus every channel matrix.
///
/// `h[b][k]` is the M×N channel from UE `k` to AP `b`; DL UEs occupy
/// `k < K_dl`, UL UE `u` sits at `K_dl + u`. `f[k][u]` is the N×N channel
/// between DL UE `k` and UL UE `u`. `s[b][c]` is the M×M coupling from the
/// transmitter of AP `c` into the receiver of AP `b`; `s[b][b]` is the
/// residual self-interference channel.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    pub h: Vec<Vec<CMat>>,
    pub f: Vec<Vec<CMat>>,
    pub s: Vec<Vec<CMat>>,
    pub ap_pos: Vec<Point>,
    pub ue_pos: Vec<Point>,
}

fn distance(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// APs on a `grid_side × grid_side` grid with spacing `isd`, centered in a
/// square of side `grid_side·isd`; UEs uniform in the same square.
pub fn generate_topology(cfg: &NetworkConfig, rng: &mut RngStream) -> (Vec<Point>, Vec<Point>) {
    let side = cfg.grid_side as f64 * cfg.isd;
    let mut ap_pos = Vec::with_capacity(cfg.b);
    for row in 0..cfg.grid_side {
        for col in 0..cfg.grid_side {
            ap_pos.push([(col as f64 + 0.5) * cfg.isd, (row as f64 + 0.5) * cfg.isd]);
        }
    }
    let ue_pos = (0..cfg.k_total())
        .map(|_| [rng.uniform() * side, rng.uniform() * side])
        .collect();
    (ap_pos, ue_pos)
}

/// Large-scale gain `10^((c − e·log₁₀ d)/10)` with `d` clamped to 1 m.
pub fn pathloss_linear(d: f64, cfg: &NetworkConfig) -> f64 {
    let d = d.max(MIN_DISTANCE_M);
    db_to_linear(cfg.pathloss_const_db - cfg.pathloss_exp * d.log10())
}

/// Draws every channel of one drop.
pub fn draw_channels(
    cfg: &NetworkConfig,
    ap_pos: &[Point],
    ue_pos: &[Point],
    rng: &mut RngStream,
) -> Result<ChannelRealization> {
    if ap_pos.len() != cfg.b || ue_pos.len() != cfg.k_total() {
        return Err(Error::contract(
            "draw_channels",
            format!(
                "expected {} APs and {} UEs, got {} and {}",
                cfg.b,
                cfg.k_total(),
                ap_pos.len(),
                ue_pos.len()
            ),
        ));
    }
    let mut h = Vec::with_capacity(cfg.b);
    for &ap in ap_pos {
        let mut row = Vec::with_capacity(cfg.k_total());
        for &ue in ue_pos {
            let var = pathloss_linear(distance(ap, ue), cfg);
            row.push(draw_complex_gaussian(rng, cfg.m, cfg.n, var)?);
        }
        h.push(row);
    }

    let iso = cfg.ue_isolation_linear();
    let mut f = Vec::with_capacity(cfg.k_dl);
    for k in 0..cfg.k_dl {
        let mut row = Vec::with_capacity(cfg.k_ul);
        for u in 0..cfg.k_ul {
            let d = distance(ue_pos[k], ue_pos[cfg.ul_index(u)]);
            row.push(draw_complex_gaussian(rng, cfg.n, cfg.n, pathloss_linear(d, cfg) * iso)?);
        }
        f.push(row);
    }

    let si = cfg.si_attenuation_linear();
    let mut s = Vec::with_capacity(cfg.b);
    for b in 0..cfg.b {
        let mut row = Vec::with_capacity(cfg.b);
        for c in 0..cfg.b {
            let var = if b == c {
                si
            } else {
                pathloss_linear(distance(ap_pos[b], ap_pos[c]), cfg)
            };
            row.push(draw_complex_gaussian(rng, cfg.m, cfg.m, var)?);
        }
        s.push(row);
    }

    Ok(ChannelRealization {
        h,
        f,
        s,
        ap_pos: ap_pos.to_vec(),
        ue_pos: ue_pos.to_vec(),
    })
}

impl ChannelRealization {
    /// Generates positions and channels from two independent streams.
    pub fn generate(
        cfg: &NetworkConfig,
        topo_rng: &mut RngStream,
        chan_rng: &mut RngStream,
    ) -> Result<Self> {
        let (ap, ue) = generate_topology(cfg, topo_rng);
        draw_channels(cfg, &ap, &ue, chan_rng)
    }

    pub fn num_aps(&self) -> usize {
        self.h.len()
    }

    pub fn k_dl(&self) -> usize {
        self.f.len()
    }

    pub fn k_ul(&self) -> usize {
        self.h.first().map_or(0, |r| r.len()) - self.k_dl()
    }

    pub fn h_dl(&self, b: usize, k: usize) -> &CMat {
        &self.h[b][k]
    }

    pub fn h_ul(&self, b: usize, u: usize) -> &CMat {
        &self.h[b][self.k_dl() + u]
    }

    /// Copy with every UE-to-UE channel set to zero.
    pub fn without_cross_link(&self) -> Self {
        let mut out = self.clone();
        for row in &mut out.f {
            for m in row {
                m.fill(num_complex::Complex64::new(0.0, 0.0));
            }
        }
        out
    }

    /// Copy with every AP-to-AP coupling (including self-interference) zero.
    pub fn without_ap_coupling(&self) -> Self {
        let mut out = self.clone();
        for row in &mut out.s {
            for m in row {
                m.fill(num_complex::Complex64::new(0.0, 0.0));
            }
        }
        out
    }

    /// Restriction to the DL UEs only, with AP coupling removed.
    pub fn downlink_only(&self) -> Self {
        let k_dl = self.k_dl();
        let mut out = self.without_ap_coupling();
        for row in &mut out.h {
            row.truncate(k_dl);
        }
        for row in &mut out.f {
            row.clear();
        }
        out.ue_pos.truncate(k_dl);
        out
    }

    /// Restriction to the UL UEs only, with AP coupling removed.
    pub fn uplink_only(&self) -> Self {
        let k_dl = self.k_dl();
        let mut out = self.without_ap_coupling();
        for row in &mut out.h {
            row.drain(..k_dl);
        }
        out.f.clear();
        out.ue_pos.drain(..k_dl);
        out
    }

    /// SHA-256 over the bit patterns of every matrix entry, as hex.
    pub fn checksum(&self) -> String {
        let mut hasher = Sha256::new();
        for set in [&self.h, &self.f, &self.s] {
            for row in set {
                for m in row {
                    hasher.update((m.nrows() as u64).to_le_bytes());
                    hasher.update((m.ncols() as u64).to_le_bytes());
                    for z in m.iter() {
                        hasher.update(z.re.to_bits().to_le_bytes());
                        hasher.update(z.im.to_bits().to_le_bytes());
                    }
                }
            }
        }
        for p in self.ap_pos.iter().chain(&self.ue_pos) {
            hasher.update(p[0].to_bits().to_le_bytes());
            hasher.update(p[1].to_bits().to_le_bytes());
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        [&self.h, &self.f, &self.s]
            .iter()
            .all(|set| set.iter().flatten().all(crate::numerics::is_finite_mat))
    }
}
