//! Alternating sum-MSE minimization with global channel knowledge.

use crate::config::{DampingMode, NetworkConfig, Schedule};
use crate::error::{Error, Result};
use crate::metrics::{sum_mse, BeamformerSet, EffectiveChannelCache, IterationMetrics, ResidualSi};
use crate::numerics::{add_outer, bisect_power_multiplier, hermitian_solve, hermitian_solve_vec, zeros_vec, CMat, CVec, Cx};
use crate::topology::ChannelRealization;

/// Smallest step the interference-adaptive rule may take.
pub const MIN_ADAPTIVE_ALPHA: f64 = 0.1;

/// Knobs of the block updates and the driver.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpdateControls {
    pub nu_scale: f64,
    pub bisect_tol: f64,
    pub damping_mode: DampingMode,
    pub alpha_fixed: f64,
    pub ap_alpha: f64,
    pub schedule: Schedule,
    pub max_iters: usize,
}

impl UpdateControls {
    pub fn from_config(cfg: &NetworkConfig) -> Self {
        UpdateControls {
            nu_scale: cfg.nu_scale,
            bisect_tol: cfg.bisect_tol,
            damping_mode: cfg.damping_mode,
            alpha_fixed: cfg.alpha_fixed,
            ap_alpha: cfg.ap_step(),
            schedule: cfg.schedule,
            max_iters: cfg.iters,
        }
    }

    /// Undamped exact block-coordinate descent.
    pub fn exact(cfg: &NetworkConfig) -> Self {
        UpdateControls {
            damping_mode: DampingMode::Fixed,
            alpha_fixed: 1.0,
            ap_alpha: 1.0,
            schedule: Schedule::BlockCoordinate,
            ..Self::from_config(cfg)
        }
    }

    /// Step size for a UE whose update sees desired power `p_sig` and
    /// UE-to-UE interference power `p_xint`.
    pub fn ue_alpha(&self, p_sig: f64, p_xint: f64) -> f64 {
        match self.damping_mode {
            DampingMode::Fixed => self.alpha_fixed,
            DampingMode::InterferenceAdaptive => adaptive_alpha(p_sig, p_xint),
        }
    }
}

/// `P_sig/(P_sig + P_xint)` clamped to `[0.1, 1]`; a full step when there is
/// no UE-to-UE interference.
pub fn adaptive_alpha(p_sig: f64, p_xint: f64) -> f64 {
    if p_xint <= 0.0 {
        return 1.0;
    }
    (p_sig / (p_sig + p_xint)).clamp(MIN_ADAPTIVE_ALPHA, 1.0)
}

/// `(1−α)·old + α·candidate`.
pub fn damped_apply(old: &CVec, candidate: &CVec, alpha: f64) -> CVec {
    if alpha == 1.0 {
        return candidate.clone();
    }
    old * Cx::new(1.0 - alpha, 0.0) + candidate * Cx::new(alpha, 0.0)
}

pub(crate) fn ridge(a: &mut CMat, d: f64) {
    for i in 0..a.nrows() {
        a[(i, i)] += d;
    }
}

/// MMSE combiner of DL UE `k`.
pub fn update_v_dl(k: usize, cache: &EffectiveChannelCache, cfg: &NetworkConfig) -> Result<CVec> {
    let h = &cache.h_dl[k][k];
    if h.norm_squared() == 0.0 {
        return Ok(zeros_vec(h.len()));
    }
    let n = h.len();
    let mut a = CMat::zeros(n, n);
    for x in cache.h_dl[k].iter().chain(&cache.f_ul[k]) {
        add_outer(&mut a, x);
    }
    ridge(&mut a, cfg.sigma2_ue);
    hermitian_solve_vec(&a, h)
}

/// `(A + μI)⁻¹·r` with `μ ≥ 0` the smallest multiplier meeting `‖·‖² ≤ budget`.
pub(crate) fn constrained_solve(a: &CMat, r: &CMat, budget: f64, tol: f64) -> Result<(CMat, f64)> {
    let solve = |mu: f64| {
        let mut m = a.clone();
        ridge(&mut m, mu);
        hermitian_solve(&m, r)
    };
    let mu = bisect_power_multiplier(|mu| Ok(solve(mu)?.norm_squared()), budget, tol)?;
    Ok((solve(mu)?, mu))
}

/// MMSE precoder of UL UE `u` under its power budget. Also returns `μ_u`.
pub fn update_v_ul(
    u: usize,
    cache: &EffectiveChannelCache,
    ctl: &UpdateControls,
    cfg: &NetworkConfig,
) -> Result<(CVec, f64)> {
    let h = &cache.hcheck_ul[u][u];
    let n = h.len();
    if h.norm_squared() == 0.0 {
        return Ok((zeros_vec(n), 0.0));
    }
    let mut a = CMat::zeros(n, n);
    for row in &cache.hcheck_ul {
        add_outer(&mut a, &row[u]);
    }
    for row in &cache.f_dl {
        add_outer(&mut a, &row[u]);
    }
    let (x, mu) = constrained_solve(&a, &CMat::from_column_slice(n, 1, h.as_slice()), cfg.rho_ue, ctl.bisect_tol)?;
    Ok((CVec::from_column_slice(x.as_slice()), mu))
}

/// DL precoders of AP `b` for every DL UE, sharing one multiplier `λ_b`
/// for the per-AP power budget. Also returns `λ_b`.
pub fn update_w_dl_ap(
    b: usize,
    cache: &EffectiveChannelCache,
    ctl: &UpdateControls,
    cfg: &NetworkConfig,
) -> Result<(Vec<CVec>, f64)> {
    let k_dl = cache.hcheck_dl[b].len();
    let m = cache.phi_dl[b][b].nrows();
    if k_dl == 0 {
        return Ok((Vec::new(), 0.0));
    }
    let mut r = CMat::zeros(m, k_dl);
    for k in 0..k_dl {
        r.set_column(k, &(&cache.hcheck_dl[b][k] - &cache.xi_dl[b][k]));
    }
    let (x, lambda) = constrained_solve(&cache.phi_dl[b][b], &r, cfg.rho_ap, ctl.bisect_tol)?;
    Ok(((0..k_dl).map(|k| x.column(k).into_owned()).collect(), lambda))
}

/// `ν_b = nu_scale·trace(Ξ_b)/M`.
pub fn nu_b(xi: &CMat, nu_scale: f64) -> f64 {
    let m = xi.nrows() as f64;
    nu_scale * xi.trace().re / m
}

/// UL combiner of AP `b` for UL UE `u`, other APs' combiners held fixed.
pub fn update_w_ul_ap(
    b: usize,
    u: usize,
    cache: &EffectiveChannelCache,
    ctl: &UpdateControls,
    cfg: &NetworkConfig,
) -> Result<CVec> {
    let mut a = &cache.phi_ul[b][b] + &cache.xi[b];
    ridge(&mut a, nu_b(&cache.xi[b], ctl.nu_scale) + cfg.sigma2_ap);
    hermitian_solve_vec(&a, &(&cache.h_ul[b][u] - &cache.xi_ul[b][u]))
}

/// Deterministic starting point shared by every scheme.
///
/// DL precoders are matched filters toward each UE's all-ones reference
/// direction at equal power; UL precoders transmit on the first antenna at
/// full power; combiners are single-stream MMSE filters for those.
pub fn initialize(chan: &ChannelRealization, cfg: &NetworkConfig) -> BeamformerSet {
    let nb = chan.num_aps();
    let (k_dl, k_ul) = (chan.k_dl(), chan.k_ul());
    let ones = CVec::from_element(cfg.n, Cx::new(1.0, 0.0));
    let per_ue = (cfg.rho_ap / k_dl.max(1) as f64).sqrt();
    let w_dl: Vec<Vec<CVec>> = (0..nb)
        .map(|b| {
            (0..k_dl)
                .map(|k| {
                    let g = chan.h_dl(b, k) * &ones;
                    let norm = g.norm();
                    if norm == 0.0 {
                        g
                    } else {
                        g * Cx::new(per_ue / norm, 0.0)
                    }
                })
                .collect()
        })
        .collect();
    let mut e1 = zeros_vec(cfg.n);
    e1[0] = Cx::new(cfg.rho_ue.sqrt(), 0.0);
    let v_ul = vec![e1; k_ul];

    let v_dl = (0..k_dl)
        .map(|k| {
            let h: CVec = (0..nb).map(|b| chan.h_dl(b, k).ad_mul(&w_dl[b][k])).sum();
            let scale = h.norm_squared() + cfg.sigma2_ue;
            if scale == 0.0 {
                h
            } else {
                h / Cx::new(scale, 0.0)
            }
        })
        .collect();
    let h_ul: Vec<Vec<CVec>> = (0..nb)
        .map(|b| (0..k_ul).map(|u| chan.h_ul(b, u) * &v_ul[u]).collect())
        .collect();
    let w_ul = (0..nb)
        .map(|b| {
            (0..k_ul)
                .map(|u| {
                    let total: f64 = h_ul.iter().map(|row| row[u].norm_squared()).sum::<f64>() + cfg.sigma2_ap;
                    if total == 0.0 {
                        h_ul[b][u].clone()
                    } else {
                        &h_ul[b][u] / Cx::new(total, 0.0)
                    }
                })
                .collect()
        })
        .collect();
    BeamformerSet { w_dl, v_dl, v_ul, w_ul }
}

/// Result of [`run_alt_opt`].
#[derive(Clone, Debug)]
pub struct AltOptOutcome {
    pub beamformers: BeamformerSet,
    /// Initialization followed by one entry per iteration.
    pub metrics: Vec<IterationMetrics>,
    /// Sum MSE at the start and after each block stage (v_dl, v_ul, w_dl,
    /// w_ul) of every iteration.
    pub block_mse: Vec<f64>,
}

fn check_finite(bf: &BeamformerSet, iteration: usize, what: &str) -> Result<()> {
    if bf.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { iteration, what: what.to_string() })
    }
}

/// Runs the optimizer from [`initialize`].
pub fn run_alt_opt(chan: &ChannelRealization, cfg: &NetworkConfig, ctl: &UpdateControls) -> Result<AltOptOutcome> {
    run_alt_opt_observed(chan, cfg, ctl, initialize(chan, cfg), |_, _| {})
}

/// Runs the optimizer from `start`, calling `observe(t, bf)` with the
/// iterate after every iteration `t` (and `t = 0` for the start).
pub fn run_alt_opt_observed<F>(
    chan: &ChannelRealization,
    cfg: &NetworkConfig,
    ctl: &UpdateControls,
    start: BeamformerSet,
    mut observe: F,
) -> Result<AltOptOutcome>
where
    F: FnMut(usize, &BeamformerSet),
{
    let si = ResidualSi::Statistical { eps: cfg.stat_si_eps() };
    let mut bf = start;
    check_finite(&bf, 0, "initialization")?;
    let mse = |bf: &BeamformerSet| sum_mse(&EffectiveChannelCache::build(chan, bf, &si), bf, &si, cfg);
    let mut metrics = vec![IterationMetrics::evaluate(0, chan, &bf, &si, cfg)];
    let mut block_mse = vec![mse(&bf)];
    observe(0, &bf);

    for t in 1..=ctl.max_iters {
        match ctl.schedule {
            Schedule::Protocol => protocol_iteration(chan, cfg, ctl, &si, &mut bf, &mut block_mse, t)?,
            Schedule::BlockCoordinate => block_iteration(chan, cfg, ctl, &si, &mut bf, &mut block_mse, t)?,
        }
        metrics.push(IterationMetrics::evaluate(t, chan, &bf, &si, cfg));
        observe(t, &bf);
    }
    Ok(AltOptOutcome { beamformers: bf, metrics, block_mse })
}

fn v_dl_stage(cache: &EffectiveChannelCache, ctl: &UpdateControls, cfg: &NetworkConfig, bf: &mut BeamformerSet) -> Result<()> {
    for k in 0..bf.v_dl.len() {
        let cand = update_v_dl(k, cache, cfg)?;
        let (sig, xint) = cache.dl_interference_split(k);
        bf.v_dl[k] = damped_apply(&bf.v_dl[k], &cand, ctl.ue_alpha(sig, xint));
    }
    Ok(())
}

fn v_ul_stage(cache: &EffectiveChannelCache, ctl: &UpdateControls, cfg: &NetworkConfig, bf: &mut BeamformerSet) -> Result<()> {
    for u in 0..bf.v_ul.len() {
        let (cand, _) = update_v_ul(u, cache, ctl, cfg)?;
        let (sig, xint) = cache.ul_interference_split(u);
        bf.v_ul[u] = damped_apply(&bf.v_ul[u], &cand, ctl.ue_alpha(sig, xint));
    }
    Ok(())
}

fn w_dl_ap(b: usize, cache: &EffectiveChannelCache, ctl: &UpdateControls, cfg: &NetworkConfig, bf: &mut BeamformerSet) -> Result<()> {
    let (cand, _) = update_w_dl_ap(b, cache, ctl, cfg)?;
    for (w, c) in bf.w_dl[b].iter_mut().zip(&cand) {
        *w = damped_apply(w, c, ctl.ap_alpha);
    }
    Ok(())
}

fn w_ul_ap(b: usize, cache: &EffectiveChannelCache, ctl: &UpdateControls, cfg: &NetworkConfig, bf: &mut BeamformerSet) -> Result<()> {
    for u in 0..bf.v_ul.len() {
        let cand = update_w_ul_ap(b, u, cache, ctl, cfg)?;
        bf.w_ul[b][u] = damped_apply(&bf.w_ul[b][u], &cand, ctl.ap_alpha);
    }
    Ok(())
}

/// One iteration in the order information becomes available over the air:
/// DL combiners first, then UL precoders seeing the new DL combiners, then
/// all APs in parallel. UL combiners are fitted to the UL precoders that
/// were active at the start of the iteration.
fn protocol_iteration(
    chan: &ChannelRealization,
    cfg: &NetworkConfig,
    ctl: &UpdateControls,
    si: &ResidualSi,
    bf: &mut BeamformerSet,
    block_mse: &mut Vec<f64>,
    t: usize,
) -> Result<()> {
    let record = |bf: &BeamformerSet, trace: &mut Vec<f64>| {
        trace.push(sum_mse(&EffectiveChannelCache::build(chan, bf, si), bf, si, cfg));
    };
    let cache = EffectiveChannelCache::build(chan, bf, si);
    v_dl_stage(&cache, ctl, cfg, bf)?;
    check_finite(bf, t, "DL combiner")?;
    record(bf, block_mse);

    let snapshot = EffectiveChannelCache::build(chan, bf, si);
    let mut next = bf.clone();
    v_ul_stage(&snapshot, ctl, cfg, &mut next)?;
    bf.v_ul = next.v_ul.clone();
    check_finite(bf, t, "UL precoder")?;
    record(bf, block_mse);

    for b in 0..bf.w_dl.len() {
        w_dl_ap(b, &snapshot, ctl, cfg, &mut next)?;
    }
    bf.w_dl = next.w_dl.clone();
    check_finite(bf, t, "DL precoder")?;
    record(bf, block_mse);

    for b in 0..bf.w_ul.len() {
        w_ul_ap(b, &snapshot, ctl, cfg, &mut next)?;
    }
    bf.w_ul = next.w_ul;
    check_finite(bf, t, "UL combiner")?;
    record(bf, block_mse);
    Ok(())
}

/// One Gauss-Seidel sweep: every block sees the latest value of all others.
fn block_iteration(
    chan: &ChannelRealization,
    cfg: &NetworkConfig,
    ctl: &UpdateControls,
    si: &ResidualSi,
    bf: &mut BeamformerSet,
    block_mse: &mut Vec<f64>,
    t: usize,
) -> Result<()> {
    let build = |bf: &BeamformerSet| EffectiveChannelCache::build(chan, bf, si);

    v_dl_stage(&build(bf), ctl, cfg, bf)?;
    check_finite(bf, t, "DL combiner")?;
    let cache = build(bf);
    block_mse.push(sum_mse(&cache, bf, si, cfg));

    v_ul_stage(&cache, ctl, cfg, bf)?;
    check_finite(bf, t, "UL precoder")?;
    let mut cache = build(bf);
    block_mse.push(sum_mse(&cache, bf, si, cfg));

    for b in 0..bf.w_dl.len() {
        w_dl_ap(b, &cache, ctl, cfg, bf)?;
        cache = build(bf);
    }
    check_finite(bf, t, "DL precoder")?;
    block_mse.push(sum_mse(&cache, bf, si, cfg));

    for b in 0..bf.w_ul.len() {
        w_ul_ap(b, &cache, ctl, cfg, bf)?;
        cache = build(bf);
    }
    check_finite(bf, t, "UL combiner")?;
    block_mse.push(sum_mse(&cache, bf, si, cfg));
    Ok(())
}
