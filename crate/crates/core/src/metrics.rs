//! Effective channels, SINRs, MSEs and rates for a set of beamformers.

use serde::{Deserialize, Serialize};

use crate::config::NetworkConfig;
use crate::numerics::{add_outer, inner, is_finite_vec, zeros_mat, zeros_vec, CMat, CVec, Cx};
use crate::topology::ChannelRealization;

/// Current iterate of every beamformer in the network.
///
/// `w_dl[b][k]`: DL precoder of AP `b` for DL UE `k` (M). `v_dl[k]`: DL
/// combiner (N). `v_ul[u]`: UL precoder (N). `w_ul[b][u]`: UL combiner of AP
/// `b` for UL UE `u` (M).
#[derive(Clone, Debug, PartialEq)]
pub struct BeamformerSet {
    pub w_dl: Vec<Vec<CVec>>,
    pub v_dl: Vec<CVec>,
    pub v_ul: Vec<CVec>,
    pub w_ul: Vec<Vec<CVec>>,
}

impl BeamformerSet {
    pub fn zeros(cfg: &NetworkConfig) -> Self {
        BeamformerSet {
            w_dl: vec![vec![zeros_vec(cfg.m); cfg.k_dl]; cfg.b],
            v_dl: vec![zeros_vec(cfg.n); cfg.k_dl],
            v_ul: vec![zeros_vec(cfg.n); cfg.k_ul],
            w_ul: vec![vec![zeros_vec(cfg.m); cfg.k_ul]; cfg.b],
        }
    }

    /// Total DL transmit power of AP `b`.
    pub fn ap_power(&self, b: usize) -> f64 {
        self.w_dl[b].iter().map(|w| w.norm_squared()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.w_dl.iter().flatten().all(is_finite_vec)
            && self.w_ul.iter().flatten().all(is_finite_vec)
            && self.v_dl.iter().all(is_finite_vec)
            && self.v_ul.iter().all(is_finite_vec)
    }

    /// Checks every power budget with relative slack `rel`.
    pub fn is_power_feasible(&self, cfg: &NetworkConfig, rel: f64) -> bool {
        (0..self.w_dl.len()).all(|b| self.ap_power(b) <= cfg.rho_ap * (1.0 + rel))
            && self.v_ul.iter().all(|v| v.norm_squared() <= cfg.rho_ue * (1.0 + rel))
    }

    /// Largest absolute entry difference to another set of equal shape.
    pub fn max_abs_diff(&self, other: &BeamformerSet) -> f64 {
        let pairs = self
            .w_dl
            .iter()
            .flatten()
            .zip(other.w_dl.iter().flatten())
            .chain(self.v_dl.iter().zip(&other.v_dl))
            .chain(self.v_ul.iter().zip(&other.v_ul))
            .chain(self.w_ul.iter().flatten().zip(other.w_ul.iter().flatten()));
        pairs
            .map(|(a, b)| (a - b).camax())
            .fold(0.0, f64::max)
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.w_dl
            .iter()
            .flatten()
            .chain(&self.v_dl)
            .chain(&self.v_ul)
            .chain(self.w_ul.iter().flatten())
            .map(|v| v.camax())
            .fold(0.0, f64::max)
    }
}

/// Residual self-interference after digital cancellation.
#[derive(Clone, Debug, PartialEq)]
pub enum ResidualSi {
    /// `delta[b][i]`: leakage of DL symbol `i` left at AP `b`,
    /// i.e. `Σ_c S[b][c]·w_dl[c][i] − ĝ[b][i]`.
    Explicit { delta: Vec<Vec<CVec>> },
    /// Zero-mean residual with covariance `eps·I` at every AP, independent
    /// across APs and of the DL precoders.
    Statistical { eps: f64 },
}

impl ResidualSi {
    pub fn none() -> Self {
        ResidualSi::Statistical { eps: 0.0 }
    }

    /// Residual after subtracting the estimates `ghat[b][i]`.
    pub fn from_estimates(chan: &ChannelRealization, bf: &BeamformerSet, ghat: &[Vec<CVec>]) -> Self {
        let delta = (0..chan.num_aps())
            .map(|b| {
                (0..bf.v_dl.len())
                    .map(|i| leakage(chan, bf, b, i) - &ghat[b][i])
                    .collect()
            })
            .collect();
        ResidualSi::Explicit { delta }
    }

    /// Covariance `Ξ_b` of the residual at AP `b`.
    pub fn xi(&self, b: usize, m: usize) -> CMat {
        match self {
            ResidualSi::Explicit { delta } => {
                let mut acc = zeros_mat(m, m);
                for d in &delta[b] {
                    add_outer(&mut acc, d);
                }
                acc
            }
            ResidualSi::Statistical { eps } => CMat::identity(m, m) * Cx::new(*eps, 0.0),
        }
    }

    /// `Σ_i |Σ_b w[b]ᴴ·δ[b][i]|²` for a combiner spread over all APs.
    pub fn combined_power(&self, w: &[&CVec]) -> f64 {
        match self {
            ResidualSi::Explicit { delta } => {
                let k_dl = delta.first().map_or(0, |r| r.len());
                (0..k_dl)
                    .map(|i| {
                        w.iter()
                            .enumerate()
                            .map(|(b, wb)| inner(wb, &delta[b][i]))
                            .sum::<Cx>()
                            .norm_sqr()
                    })
                    .sum()
            }
            ResidualSi::Statistical { eps } => eps * w.iter().map(|wb| wb.norm_squared()).sum::<f64>(),
        }
    }
}

/// Exact SI leakage `Σ_c S[b][c]·w_dl[c][i]` of DL symbol `i` at AP `b`.
pub fn leakage(chan: &ChannelRealization, bf: &BeamformerSet, b: usize, i: usize) -> CVec {
    let m = chan.s[b][b].nrows();
    let mut acc = zeros_vec(m);
    for (c, s) in chan.s[b].iter().enumerate() {
        acc += s * &bf.w_dl[c][i];
    }
    acc
}

/// Every effective channel and covariance the block updates need.
#[derive(Clone, Debug)]
pub struct EffectiveChannelCache {
    /// `Σ_b H[b][k]ᴴ·w_dl[b][i]`, indexed `[k][i]`.
    pub h_dl: Vec<Vec<CVec>>,
    /// `F[k][u]ᴴ·v_ul[u]`, indexed `[k][u]`.
    pub f_ul: Vec<Vec<CVec>>,
    /// `H_ul[b][j]·v_ul[j]`, indexed `[b][j]`.
    pub h_ul: Vec<Vec<CVec>>,
    /// `H_dl[b][k]·v_dl[k]`, indexed `[b][k]`.
    pub hcheck_dl: Vec<Vec<CVec>>,
    /// `Σ_b H_ul[b][j]ᴴ·w_ul[b][u]`, indexed `[u][j]`: UL UE `j` as seen
    /// through the combiners of UL UE `u`.
    pub hcheck_ul: Vec<Vec<CVec>>,
    /// `F[k][u]·v_dl[k]`, indexed `[k][u]`.
    pub f_dl: Vec<Vec<CVec>>,
    pub phi_dl: Vec<Vec<CMat>>,
    pub phi_ul: Vec<Vec<CMat>>,
    pub xi: Vec<CMat>,
    /// `Σ_{c≠b} Φ_dl[b][c]·w_dl[c][k]`.
    pub xi_dl: Vec<Vec<CVec>>,
    /// `Σ_{c≠b} Φ_ul[b][c]·w_ul[c][u]`.
    pub xi_ul: Vec<Vec<CVec>>,
}

impl EffectiveChannelCache {
    pub fn build(chan: &ChannelRealization, bf: &BeamformerSet, si: &ResidualSi) -> Self {
        let nb = chan.num_aps();
        let k_dl = bf.v_dl.len();
        let k_ul = bf.v_ul.len();
        let m = chan.s[0][0].nrows();
        let n = bf
            .v_dl
            .first()
            .or(bf.v_ul.first())
            .map_or(0, |v| v.len());

        let h_dl: Vec<Vec<CVec>> = (0..k_dl)
            .map(|k| {
                (0..k_dl)
                    .map(|i| {
                        let mut acc = zeros_vec(n);
                        for b in 0..nb {
                            acc += chan.h_dl(b, k).ad_mul(&bf.w_dl[b][i]);
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        let f_ul = (0..k_dl)
            .map(|k| (0..k_ul).map(|u| chan.f[k][u].ad_mul(&bf.v_ul[u])).collect())
            .collect();
        let f_dl = (0..k_dl)
            .map(|k| (0..k_ul).map(|u| &chan.f[k][u] * &bf.v_dl[k]).collect())
            .collect();
        let h_ul: Vec<Vec<CVec>> = (0..nb)
            .map(|b| (0..k_ul).map(|j| chan.h_ul(b, j) * &bf.v_ul[j]).collect())
            .collect();
        let hcheck_dl: Vec<Vec<CVec>> = (0..nb)
            .map(|b| (0..k_dl).map(|k| chan.h_dl(b, k) * &bf.v_dl[k]).collect())
            .collect();
        let hcheck_ul = (0..k_ul)
            .map(|u| {
                (0..k_ul)
                    .map(|j| {
                        let mut acc = zeros_vec(n);
                        for b in 0..nb {
                            acc += chan.h_ul(b, j).ad_mul(&bf.w_ul[b][u]);
                        }
                        acc
                    })
                    .collect()
            })
            .collect();

        let phi = |vecs: &Vec<Vec<CVec>>, count: usize| -> Vec<Vec<CMat>> {
            (0..nb)
                .map(|b| {
                    (0..nb)
                        .map(|c| {
                            let mut acc = zeros_mat(m, m);
                            for i in 0..count {
                                acc.ger(Cx::new(1.0, 0.0), &vecs[b][i], &vecs[c][i].conjugate(), Cx::new(1.0, 0.0));
                            }
                            acc
                        })
                        .collect()
                })
                .collect()
        };
        let phi_dl = phi(&hcheck_dl, k_dl);
        let phi_ul = phi(&h_ul, k_ul);
        let xi = (0..nb).map(|b| si.xi(b, m)).collect();

        let cross = |phi: &Vec<Vec<CMat>>, w: &Vec<Vec<CVec>>, count: usize| -> Vec<Vec<CVec>> {
            (0..nb)
                .map(|b| {
                    (0..count)
                        .map(|k| {
                            let mut acc = zeros_vec(m);
                            for c in (0..nb).filter(|&c| c != b) {
                                acc += &phi[b][c] * &w[c][k];
                            }
                            acc
                        })
                        .collect()
                })
                .collect()
        };
        let xi_dl = cross(&phi_dl, &bf.w_dl, k_dl);
        let xi_ul = cross(&phi_ul, &bf.w_ul, k_ul);

        EffectiveChannelCache {
            h_dl,
            f_ul,
            h_ul,
            hcheck_dl,
            hcheck_ul,
            f_dl,
            phi_dl,
            phi_ul,
            xi,
            xi_dl,
            xi_ul,
        }
    }

    /// `Σ_b w_ul[b][u]ᴴ·h_ul[b][j]`.
    fn ul_gain(&self, bf: &BeamformerSet, u: usize, j: usize) -> Cx {
        (0..self.h_ul.len())
            .map(|b| inner(&bf.w_ul[b][u], &self.h_ul[b][j]))
            .sum()
    }

    /// Desired-signal and UE-to-UE interference powers at DL UE `k`, as
    /// they enter its combiner covariance.
    pub fn dl_interference_split(&self, k: usize) -> (f64, f64) {
        let sig = self.h_dl[k][k].norm_squared();
        let xint = self.f_ul[k].iter().map(|f| f.norm_squared()).sum();
        (sig, xint)
    }

    /// Same split for the precoder covariance of UL UE `u`.
    pub fn ul_interference_split(&self, u: usize) -> (f64, f64) {
        let sig = self.hcheck_ul[u][u].norm_squared();
        let xint = self.f_dl.iter().map(|row| row[u].norm_squared()).sum();
        (sig, xint)
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

pub fn sinr_dl(k: usize, cache: &EffectiveChannelCache, bf: &BeamformerSet, cfg: &NetworkConfig) -> f64 {
    let v = &bf.v_dl[k];
    if v.norm_squared() == 0.0 {
        return 0.0;
    }
    let sig = inner(v, &cache.h_dl[k][k]).norm_sqr();
    let mut den = cfg.sigma2_ue * v.norm_squared();
    for (i, h) in cache.h_dl[k].iter().enumerate() {
        if i != k {
            den += inner(v, h).norm_sqr();
        }
    }
    for f in &cache.f_ul[k] {
        den += inner(v, f).norm_sqr();
    }
    ratio(sig, den)
}

pub fn sinr_ul(
    u: usize,
    cache: &EffectiveChannelCache,
    bf: &BeamformerSet,
    si: &ResidualSi,
    cfg: &NetworkConfig,
) -> f64 {
    let w: Vec<&CVec> = bf.w_ul.iter().map(|row| &row[u]).collect();
    let wpow: f64 = w.iter().map(|x| x.norm_squared()).sum();
    if wpow == 0.0 {
        return 0.0;
    }
    let sig = cache.ul_gain(bf, u, u).norm_sqr();
    let mut den = cfg.sigma2_ap * wpow + si.combined_power(&w);
    for j in (0..bf.v_ul.len()).filter(|&j| j != u) {
        den += cache.ul_gain(bf, u, j).norm_sqr();
    }
    ratio(sig, den)
}

/// `E|v_kᴴ·y_k − d_k|²` in closed form.
pub fn mse_dl(k: usize, cache: &EffectiveChannelCache, bf: &BeamformerSet, cfg: &NetworkConfig) -> f64 {
    let v = &bf.v_dl[k];
    let mut acc = cfg.sigma2_ue * v.norm_squared() + 1.0;
    for h in &cache.h_dl[k] {
        acc += inner(v, h).norm_sqr();
    }
    for f in &cache.f_ul[k] {
        acc += inner(v, f).norm_sqr();
    }
    acc - 2.0 * inner(v, &cache.h_dl[k][k]).re
}

/// `E|Σ_b w_ul[b][u]ᴴ·ỹ_b − d_u|²` in closed form.
pub fn mse_ul(
    u: usize,
    cache: &EffectiveChannelCache,
    bf: &BeamformerSet,
    si: &ResidualSi,
    cfg: &NetworkConfig,
) -> f64 {
    let w: Vec<&CVec> = bf.w_ul.iter().map(|row| &row[u]).collect();
    let wpow: f64 = w.iter().map(|x| x.norm_squared()).sum();
    let mut acc = cfg.sigma2_ap * wpow + si.combined_power(&w) + 1.0;
    for j in 0..bf.v_ul.len() {
        acc += cache.ul_gain(bf, u, j).norm_sqr();
    }
    acc - 2.0 * cache.ul_gain(bf, u, u).re
}

pub fn sum_mse(cache: &EffectiveChannelCache, bf: &BeamformerSet, si: &ResidualSi, cfg: &NetworkConfig) -> f64 {
    let dl: f64 = (0..bf.v_dl.len()).map(|k| mse_dl(k, cache, bf, cfg)).sum();
    let ul: f64 = (0..bf.v_ul.len()).map(|u| mse_ul(u, cache, bf, si, cfg)).sum();
    dl + ul
}

/// Per-iteration performance snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationMetrics {
    pub iteration: usize,
    pub sinr_dl: Vec<f64>,
    pub sinr_ul: Vec<f64>,
    pub rate_dl: Vec<f64>,
    pub rate_ul: Vec<f64>,
    /// `Σ log₂(1+γ)` over all UEs, bits/s/Hz.
    pub sum_rate: f64,
    /// `Σ γ` over all UEs.
    pub sinr_sum: f64,
    pub sum_mse: f64,
}

impl IterationMetrics {
    pub fn from_sinrs(iteration: usize, sinr_dl: Vec<f64>, sinr_ul: Vec<f64>, sum_mse: f64) -> Self {
        let rate = |g: &f64| (1.0 + g).log2();
        let rate_dl: Vec<f64> = sinr_dl.iter().map(rate).collect();
        let rate_ul: Vec<f64> = sinr_ul.iter().map(rate).collect();
        let sinr_sum = sinr_dl.iter().chain(&sinr_ul).sum();
        let mut out = IterationMetrics {
            iteration,
            sinr_dl,
            sinr_ul,
            rate_dl,
            rate_ul,
            sum_rate: 0.0,
            sinr_sum,
            sum_mse,
        };
        out.sum_rate = sum_rate(&out);
        out
    }

    /// Combines a DL-only and a UL-only run that each occupy a `share` of
    /// the time. Rates are scaled by `share`; SINRs and MSEs are kept.
    pub fn time_shared(dl: &IterationMetrics, ul: &IterationMetrics, share: f64) -> Self {
        let rate = |g: &f64| share * (1.0 + g).log2();
        let rate_dl: Vec<f64> = dl.sinr_dl.iter().map(rate).collect();
        let rate_ul: Vec<f64> = ul.sinr_ul.iter().map(rate).collect();
        IterationMetrics {
            iteration: dl.iteration,
            sum_rate: rate_dl.iter().chain(&rate_ul).sum(),
            sinr_sum: dl.sinr_dl.iter().chain(&ul.sinr_ul).sum(),
            sinr_dl: dl.sinr_dl.clone(),
            sinr_ul: ul.sinr_ul.clone(),
            rate_dl,
            rate_ul,
            sum_mse: dl.sum_mse + ul.sum_mse,
        }
    }

    /// Evaluates every metric with the given channels and residual SI.
    pub fn evaluate(
        iteration: usize,
        chan: &ChannelRealization,
        bf: &BeamformerSet,
        si: &ResidualSi,
        cfg: &NetworkConfig,
    ) -> Self {
        let cache = EffectiveChannelCache::build(chan, bf, si);
        let sinr_dl = (0..bf.v_dl.len()).map(|k| sinr_dl(k, &cache, bf, cfg)).collect();
        let sinr_ul = (0..bf.v_ul.len()).map(|u| sinr_ul(u, &cache, bf, si, cfg)).collect();
        Self::from_sinrs(iteration, sinr_dl, sinr_ul, sum_mse(&cache, bf, si, cfg))
    }
}

/// `Σ_k log₂(1+γ_k) + Σ_u log₂(1+γ_u)`.
pub fn sum_rate(metrics: &IterationMetrics) -> f64 {
    metrics
        .sinr_dl
        .iter()
        .chain(&metrics.sinr_ul)
        .map(|g| (1.0 + g).log2())
        .sum()
}

/// Sum rate discounted by the training overhead: `(1 − t·r_ibt/r_tot)·R`,
/// clamped at zero once training consumes every resource.
pub fn effective_rate(rate: f64, iterations: usize, r_ibt: usize, r_tot: usize) -> f64 {
    let used = (iterations * r_ibt) as f64;
    let total = r_tot as f64;
    if used >= total {
        return 0.0;
    }
    rate * (total - used) / total
}
