//! Over-the-air iterative bi-directional training.
//!
//! Every node updates its beamformer from pilot blocks it received itself.
//! One iteration uses three synchronous slots of `τ` symbols each:
//!
//! 1. APs send DL pilots through their DL precoders while UL UEs send UL
//!    pilots through their UL precoders. DL UEs learn their combiners; APs
//!    learn the UL channels and their self-interference leakage.
//! 2. DL UEs send DL pilots through their combiners while APs send UL pilots
//!    through their UL combiners. APs learn the effective DL channels; UL UEs
//!    learn their precoders.
//! 3. UEs retransmit what they received, projected onto their own pilot
//!    subspace, so every AP can measure its coupling with all other APs.

use serde::{Deserialize, Serialize};

use crate::config::{NetworkConfig, ScalingRule};
use crate::error::{Error, Result};
use crate::metrics::{BeamformerSet, IterationMetrics, ResidualSi};
use crate::numerics::{add_outer, check_pilot_block, draw_complex_gaussian, hermitian_solve, hermitian_solve_vec, CMat, CVec, Cx, RngStream};
use crate::perfect_csi::{constrained_solve, damped_apply, initialize, ridge, UpdateControls};
use crate::topology::ChannelRealization;

const NOISE_LABEL: u64 = 0x4E01;
const SLOT1: u64 = 1;
const SLOT2: u64 = 2;
const SLOT3: u64 = 3;

/// Relative power excess tolerated before a transmit block is clipped.
const CLIP_SLACK: f64 = 1e-9;

fn real(x: f64) -> Cx {
    Cx::new(x, 0.0)
}

/// Orthogonal pilot sequences: `P` for DL UEs, `Q` for UL UEs.
#[derive(Clone, Debug, PartialEq)]
pub struct PilotBook {
    pub tau: usize,
    pub p: CMat,
    pub q: CMat,
}

impl PilotBook {
    /// Distinct columns of the `τ`-point DFT basis in random order, with
    /// unit-modulus entries so that `[P,Q]ᴴ[P,Q] = τ·I`.
    pub fn build(cfg: &NetworkConfig, rng: &mut RngStream) -> Result<Self> {
        let need = cfg.k_dl + cfg.k_ul;
        if cfg.tau < need {
            return Err(Error::config(
                "tau",
                format!("tau must be ≥ K_dl+K_ul ({} < {need})", cfg.tau),
            ));
        }
        let mut freqs: Vec<usize> = (0..cfg.tau).collect();
        rng.shuffle(&mut freqs);
        let t = cfg.tau as f64;
        let block = |fs: &[usize]| {
            CMat::from_fn(cfg.tau, fs.len(), |n, j| {
                Cx::from_polar(1.0, -2.0 * std::f64::consts::PI * (n * fs[j]) as f64 / t)
            })
        };
        Self::from_blocks(block(&freqs[..cfg.k_dl]), block(&freqs[cfg.k_dl..need]))
    }

    pub fn from_blocks(p: CMat, q: CMat) -> Result<Self> {
        let tau = p.nrows();
        let mut stacked = CMat::zeros(tau, p.ncols() + q.ncols());
        stacked.columns_mut(0, p.ncols()).copy_from(&p);
        stacked.columns_mut(p.ncols(), q.ncols()).copy_from(&q);
        check_pilot_block(&stacked, tau)?;
        Ok(PilotBook { tau, p, q })
    }

    pub fn stacked(&self) -> CMat {
        let mut s = CMat::zeros(self.tau, self.p.ncols() + self.q.ncols());
        s.columns_mut(0, self.p.ncols()).copy_from(&self.p);
        s.columns_mut(self.p.ncols(), self.q.ncols()).copy_from(&self.q);
        s
    }

    pub fn p_col(&self, k: usize) -> CVec {
        self.p.column(k).into_owned()
    }

    pub fn q_col(&self, u: usize) -> CVec {
        self.q.column(u).into_owned()
    }

    pub fn downlink_only(&self) -> Self {
        PilotBook { tau: self.tau, p: self.p.clone(), q: CMat::zeros(self.tau, 0) }
    }

    pub fn uplink_only(&self) -> Self {
        PilotBook { tau: self.tau, p: CMat::zeros(self.tau, 0), q: self.q.clone() }
    }
}

/// Identifies the receiver-noise streams of one drop. Streams are keyed by
/// iteration and slot only, so every scheme run on the drop in the same
/// `lane` sees the same noise in the same slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NoiseKey {
    pub seed: u64,
    pub drop: u64,
    pub lane: u64,
}

impl NoiseKey {
    pub fn new(seed: u64, drop: u64) -> Self {
        NoiseKey { seed, drop, lane: 0 }
    }

    pub fn with_lane(self, lane: u64) -> Self {
        NoiseKey { lane, ..self }
    }

    fn stream(&self, iteration: usize, slot: u64) -> RngStream {
        RngStream::derived(self.seed, &[NOISE_LABEL, self.drop, self.lane, iteration as u64, slot])
    }
}

fn awgn(rng: &mut RngStream, rows: usize, cols: usize, var: f64) -> Result<CMat> {
    if var == 0.0 {
        return Ok(CMat::zeros(rows, cols));
    }
    draw_complex_gaussian(rng, rows, cols, var)
}

fn columns(vs: &[CVec], rows: usize) -> CMat {
    let mut m = CMat::zeros(rows, vs.len());
    for (j, v) in vs.iter().enumerate() {
        m.set_column(j, v);
    }
    m
}

/// Network-wide pilot scalings. Slot-2 blocks are divided by `√β₁` (APs)
/// and `√β₂` (UEs); slot-3 blocks by `√β₃`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OtaScaling {
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
}

impl OtaScaling {
    pub fn unit() -> Self {
        OtaScaling { beta1: 1.0, beta2: 1.0, beta3: 1.0 }
    }

    /// Slot-2 scaling for the beamformers about to be sounded.
    ///
    /// The adaptive rule uses one `β = β₁ = β₂` just large enough for the
    /// strongest slot-2 transmitter, which keeps every reconstruction
    /// consistent.
    pub fn for_slot2(bf: &BeamformerSet, cfg: &NetworkConfig) -> Self {
        match cfg.scaling {
            ScalingRule::Fixed => OtaScaling { beta1: cfg.beta1, beta2: cfg.beta2, beta3: 1.0 },
            ScalingRule::Adaptive => {
                let ap = bf
                    .w_ul
                    .iter()
                    .map(|row| row.iter().map(|w| w.norm_squared()).sum::<f64>() / cfg.rho_ap);
                let ue = bf.v_dl.iter().map(|v| v.norm_squared() / cfg.rho_ue);
                let beta = required_scale(ap.chain(ue));
                OtaScaling { beta1: beta, beta2: beta, beta3: 1.0 }
            }
        }
    }
}

/// Largest power-to-budget ratio, or 1 when nothing is transmitted.
fn required_scale(ratios: impl Iterator<Item = f64>) -> f64 {
    let m = ratios.fold(0.0, f64::max);
    if m > 0.0 && m.is_finite() {
        m
    } else {
        1.0
    }
}

/// Transmit-power bookkeeping across slots.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TxLog {
    /// Blocks that had to be scaled down to their budget.
    pub clip_events: usize,
    /// Largest `(‖X‖²_F/τ)/budget` actually transmitted.
    pub max_power_ratio: f64,
}

impl TxLog {
    fn transmit(&mut self, x: &mut CMat, budget: f64, tau: usize) {
        let mut ratio = x.norm_squared() / tau as f64 / budget;
        if ratio > 1.0 + CLIP_SLACK {
            *x *= real(ratio.sqrt().recip());
            self.clip_events += 1;
            ratio = x.norm_squared() / tau as f64 / budget;
        }
        self.max_power_ratio = self.max_power_ratio.max(ratio);
    }
}

#[derive(Clone, Debug)]
pub struct Slot1 {
    /// `[b]`: M×τ.
    pub y_ul: Vec<CMat>,
    /// `[k]`: N×τ at DL UE `k`.
    pub y_dl: Vec<CMat>,
}

#[derive(Clone, Debug)]
pub struct Slot2 {
    pub y_ul: Vec<CMat>,
    /// `[u]`: N×τ at UL UE `u`.
    pub y_dl: Vec<CMat>,
}

#[derive(Clone, Debug)]
pub struct Slot3 {
    pub y_ul: Vec<CMat>,
    /// Retransmissions of the DL UEs.
    pub x_dl: Vec<CMat>,
    /// Retransmissions of the UL UEs.
    pub x_ul: Vec<CMat>,
    pub beta3: f64,
}

/// APs sound their DL precoders on `P`, UL UEs their UL precoders on `Q`.
pub fn slot1(
    chan: &ChannelRealization,
    bf: &BeamformerSet,
    pilots: &PilotBook,
    cfg: &NetworkConfig,
    log: &mut TxLog,
    rng: &mut RngStream,
) -> Result<Slot1> {
    let (nb, k_dl, k_ul, tau) = (chan.num_aps(), chan.k_dl(), chan.k_ul(), pilots.tau);
    let x_dl: Vec<CMat> = (0..nb)
        .map(|b| {
            let mut x = columns(&bf.w_dl[b], cfg.m) * pilots.p.adjoint();
            log.transmit(&mut x, cfg.rho_ap, tau);
            x
        })
        .collect();
    let x_ul: Vec<CMat> = (0..k_ul)
        .map(|u| {
            let mut x = &bf.v_ul[u] * pilots.q.column(u).adjoint();
            log.transmit(&mut x, cfg.rho_ue, tau);
            x
        })
        .collect();

    let mut y_ul = Vec::with_capacity(nb);
    for b in 0..nb {
        let mut y = awgn(rng, cfg.m, tau, cfg.sigma2_ap)?;
        for (u, x) in x_ul.iter().enumerate() {
            y += chan.h_ul(b, u) * x;
        }
        for (c, x) in x_dl.iter().enumerate() {
            y += &chan.s[b][c] * x;
        }
        y_ul.push(y);
    }
    let mut y_dl = Vec::with_capacity(k_dl);
    for k in 0..k_dl {
        let mut y = awgn(rng, cfg.n, tau, cfg.sigma2_ue)?;
        for (b, x) in x_dl.iter().enumerate() {
            y += chan.h_dl(b, k).ad_mul(x);
        }
        for (u, x) in x_ul.iter().enumerate() {
            y += chan.f[k][u].ad_mul(x);
        }
        y_dl.push(y);
    }
    Ok(Slot1 { y_ul, y_dl })
}

/// DL UEs sound their combiners on `P`, APs their UL combiners on `Q`.
pub fn slot2(
    chan: &ChannelRealization,
    bf: &BeamformerSet,
    pilots: &PilotBook,
    scaling: &OtaScaling,
    cfg: &NetworkConfig,
    log: &mut TxLog,
    rng: &mut RngStream,
) -> Result<Slot2> {
    let (nb, k_dl, k_ul, tau) = (chan.num_aps(), chan.k_dl(), chan.k_ul(), pilots.tau);
    let x_dl: Vec<CMat> = (0..nb)
        .map(|b| {
            let mut x = columns(&bf.w_ul[b], cfg.m) * pilots.q.adjoint() / real(scaling.beta1.sqrt());
            log.transmit(&mut x, cfg.rho_ap, tau);
            x
        })
        .collect();
    let x_ul: Vec<CMat> = (0..k_dl)
        .map(|k| {
            let mut x = &bf.v_dl[k] * pilots.p.column(k).adjoint() / real(scaling.beta2.sqrt());
            log.transmit(&mut x, cfg.rho_ue, tau);
            x
        })
        .collect();

    let mut y_ul = Vec::with_capacity(nb);
    for b in 0..nb {
        let mut y = awgn(rng, cfg.m, tau, cfg.sigma2_ap)?;
        for (k, x) in x_ul.iter().enumerate() {
            y += chan.h_dl(b, k) * x;
        }
        for (c, x) in x_dl.iter().enumerate() {
            y += &chan.s[b][c] * x;
        }
        y_ul.push(y);
    }
    let mut y_dl = Vec::with_capacity(k_ul);
    for u in 0..k_ul {
        let mut y = awgn(rng, cfg.n, tau, cfg.sigma2_ue)?;
        for (b, x) in x_dl.iter().enumerate() {
            y += chan.h_ul(b, u).ad_mul(x);
        }
        for (k, x) in x_ul.iter().enumerate() {
            y += &chan.f[k][u] * x;
        }
        y_dl.push(y);
    }
    Ok(Slot2 { y_ul, y_dl })
}

/// UEs retransmit their slot-1/slot-2 receptions projected onto their own
/// pilot subspace and passed through their own beamformer.
///
/// DL UEs use their current combiners; UL UEs use the precoders they sounded
/// in slot 1, so that the UL cross terms match the UL channels the APs
/// learned in that slot.
#[allow(clippy::too_many_arguments)]
pub fn slot3(
    chan: &ChannelRealization,
    bf: &BeamformerSet,
    pilots: &PilotBook,
    s1: &Slot1,
    s2: &Slot2,
    scaling: &OtaScaling,
    cfg: &NetworkConfig,
    log: &mut TxLog,
    rng: &mut RngStream,
) -> Result<Slot3> {
    let (nb, k_dl, k_ul, tau) = (chan.num_aps(), chan.k_dl(), chan.k_ul(), pilots.tau);
    let t = tau as f64;
    let mut x_dl: Vec<CMat> = (0..k_dl)
        .map(|k| {
            let v = &bf.v_dl[k];
            let proj = (&s1.y_dl[k] * &pilots.p) * pilots.p.adjoint();
            v * (v.adjoint() * proj) / real(t * scaling.beta2.sqrt())
        })
        .collect();
    let mut x_ul: Vec<CMat> = (0..k_ul)
        .map(|u| {
            let v = &bf.v_ul[u];
            let proj = (&s2.y_dl[u] * &pilots.q) * pilots.q.adjoint();
            v * (v.adjoint() * proj) * real(scaling.beta1.sqrt() / t)
        })
        .collect();

    let beta3 = match cfg.scaling {
        ScalingRule::Fixed => 1.0,
        ScalingRule::Adaptive => {
            required_scale(x_dl.iter().chain(&x_ul).map(|x| x.norm_squared() / t / cfg.rho_ue))
        }
    };
    for x in x_dl.iter_mut().chain(x_ul.iter_mut()) {
        *x /= real(beta3.sqrt());
        log.transmit(x, cfg.rho_ue, tau);
    }

    let mut y_ul = Vec::with_capacity(nb);
    for b in 0..nb {
        let mut y = awgn(rng, cfg.m, tau, cfg.sigma2_ap)?;
        for (k, x) in x_dl.iter().enumerate() {
            y += chan.h_dl(b, k) * x;
        }
        for (u, x) in x_ul.iter().enumerate() {
            y += chan.h_ul(b, u) * x;
        }
        y_ul.push(y);
    }
    Ok(Slot3 { y_ul, x_dl, x_ul, beta3 })
}

/// SI leakage estimate `ĝ[b][i] = Y_b·p_i/τ` from the slot-1 reception.
pub fn estimate_si(i: usize, y_ul1: &CMat, pilots: &PilotBook) -> CVec {
    y_ul1 * pilots.p.column(i) / real(pilots.tau as f64)
}

pub fn estimate_all_si(s1: &Slot1, pilots: &PilotBook) -> Vec<Vec<CVec>> {
    s1.y_ul
        .iter()
        .map(|y| (0..pilots.p.ncols()).map(|i| estimate_si(i, y, pilots)).collect())
        .collect()
}

/// MMSE combiner of a DL UE from its slot-1 reception: `(Y·Yᴴ)⁻¹·Y·p_k`.
pub fn update_v_dl_ota(k: usize, y_dl1: &CMat, pilots: &PilotBook) -> Result<CVec> {
    hermitian_solve_vec(&(y_dl1 * y_dl1.adjoint()), &(y_dl1 * pilots.p.column(k)))
}

/// Desired-signal and UE-to-UE interference power seen by DL UE `k`.
fn dl_split(k: usize, y_dl1: &CMat, pilots: &PilotBook) -> (f64, f64) {
    let t2 = (pilots.tau * pilots.tau) as f64;
    let sig = (y_dl1 * pilots.p.column(k)).norm_squared() / t2;
    let xint = (y_dl1 * &pilots.q).norm_squared() / t2;
    (sig, xint)
}

/// UL precoder from the slot-2 reception under the UE power budget.
pub fn update_v_ul_ota(
    u: usize,
    y_dl2: &CMat,
    pilots: &PilotBook,
    scaling: &OtaScaling,
    ctl: &UpdateControls,
    cfg: &NetworkConfig,
) -> Result<(CVec, f64)> {
    let t = pilots.tau as f64;
    let a = y_dl2 * y_dl2.adjoint() * real(scaling.beta1 / t);
    let r = y_dl2 * pilots.q.column(u) * real(scaling.beta1.sqrt() / t);
    if r.norm_squared() == 0.0 {
        return Ok((CVec::zeros(r.len()), 0.0));
    }
    let (x, mu) = constrained_solve(&a, &CMat::from_column_slice(r.len(), 1, r.as_slice()), cfg.rho_ue, ctl.bisect_tol)?;
    Ok((CVec::from_column_slice(x.as_slice()), mu))
}

fn ul_split(u: usize, y_dl2: &CMat, pilots: &PilotBook, scaling: &OtaScaling) -> (f64, f64) {
    let t2 = (pilots.tau * pilots.tau) as f64;
    let sig = scaling.beta1 * (y_dl2 * pilots.q.column(u)).norm_squared() / t2;
    let xint = scaling.beta2 * (y_dl2 * &pilots.p).norm_squared() / t2;
    (sig, xint)
}

/// What one AP learns about a link direction from its own receptions.
#[derive(Clone, Debug)]
pub struct ApEstimates {
    /// Local Gram matrix `Φ[b][b]`.
    pub phi: CMat,
    /// Effective channel of each UE at this AP.
    pub h: Vec<CVec>,
    /// Reconstructed cross terms `Σ_{c≠b} Φ[b][c]·w[c]`, absent when slot 3
    /// is not used.
    pub cross: Option<Vec<CVec>>,
}

impl ApEstimates {
    /// `(Φ + d·I)` and the right-hand sides `h − ξ`.
    fn system(&self, d: f64) -> (CMat, CMat) {
        let mut a = self.phi.clone();
        ridge(&mut a, d);
        let m = self.phi.nrows();
        let mut r = columns(&self.h, m);
        if let Some(cross) = &self.cross {
            r -= columns(cross, m);
        }
        (a, r)
    }
}

fn ap_estimates(
    y_train: &CMat,
    y3: Option<&CMat>,
    w_old: &[CVec],
    block: &CMat,
    h_scale: f64,
    cross_scale: f64,
    tau: usize,
) -> ApEstimates {
    let m = y_train.nrows();
    let g = y_train * block;
    let h: Vec<CVec> = (0..block.ncols()).map(|k| g.column(k) * real(h_scale)).collect();
    let mut phi = CMat::zeros(m, m);
    for x in &h {
        add_outer(&mut phi, x);
    }
    let cross = y3.map(|y3| {
        let sigma = y3 * block * real(cross_scale / tau as f64);
        (0..block.ncols())
            .map(|k| sigma.column(k) - &phi * &w_old[k])
            .collect()
    });
    ApEstimates { phi, h, cross }
}

/// DL quantities at one AP from slots 2 and 3.
pub fn dl_ap_estimates(
    y_ul2: &CMat,
    y_ul3: Option<&CMat>,
    w_old: &[CVec],
    pilots: &PilotBook,
    scaling: &OtaScaling,
) -> ApEstimates {
    let t = pilots.tau as f64;
    ap_estimates(
        y_ul2,
        y_ul3,
        w_old,
        &pilots.p,
        scaling.beta2.sqrt() / t,
        (scaling.beta2 * scaling.beta3).sqrt(),
        pilots.tau,
    )
}

/// UL quantities at one AP from slots 1 and 3.
pub fn ul_ap_estimates(
    y_ul1: &CMat,
    y_ul3: Option<&CMat>,
    w_old: &[CVec],
    pilots: &PilotBook,
    scaling: &OtaScaling,
) -> ApEstimates {
    let t = pilots.tau as f64;
    ap_estimates(y_ul1, y_ul3, w_old, &pilots.q, 1.0 / t, scaling.beta3.sqrt(), pilots.tau)
}

/// DL precoders of one AP from its own receptions. Also returns the power
/// multiplier `λ ≥ 0`.
pub fn update_w_dl_ota(est: &ApEstimates, ctl: &UpdateControls, cfg: &NetworkConfig) -> Result<(Vec<CVec>, f64)> {
    if est.h.is_empty() {
        return Ok((Vec::new(), 0.0));
    }
    let (a, r) = est.system(0.0);
    let (x, lambda) = constrained_solve(&a, &r, cfg.rho_ap, ctl.bisect_tol)?;
    Ok(((0..x.ncols()).map(|k| x.column(k).into_owned()).collect(), lambda))
}

/// Effective regularizer `σ²_AP + ν_b + ε_SI` of the OTA UL combiner.
pub fn nu_bar(ctl: &UpdateControls, cfg: &NetworkConfig) -> f64 {
    let eps = cfg.ota_si_eps();
    cfg.sigma2_ap + ctl.nu_scale * eps + eps
}

/// UL combiners of one AP from its own receptions.
pub fn update_w_ul_ota(est: &ApEstimates, ctl: &UpdateControls, cfg: &NetworkConfig) -> Result<Vec<CVec>> {
    if est.h.is_empty() {
        return Ok(Vec::new());
    }
    let (a, r) = est.system(nu_bar(ctl, cfg));
    let x = hermitian_solve(&a, &r)?;
    Ok((0..x.ncols()).map(|u| x.column(u).into_owned()).collect())
}

/// Training variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IbtMode {
    /// All three slots on the true channels.
    Proposed,
    /// Training signals synthesized without UE-to-UE channels, as if UL and
    /// DL were trained apart.
    Separate,
    /// Slot 3 skipped; APs ignore the coupling with other APs.
    Local,
}

impl IbtMode {
    /// Pilot symbols spent per iteration.
    pub fn resources_per_iteration(self, tau: usize) -> usize {
        match self {
            IbtMode::Proposed | IbtMode::Separate => 3 * tau,
            IbtMode::Local => 2 * tau,
        }
    }
}

/// Result of [`run_ibt`].
#[derive(Clone, Debug)]
pub struct IbtOutcome {
    pub beamformers: BeamformerSet,
    /// Initialization followed by one entry per iteration, evaluated on the
    /// true channels.
    pub metrics: Vec<IterationMetrics>,
    pub tx: TxLog,
}

pub fn run_ibt(
    chan: &ChannelRealization,
    cfg: &NetworkConfig,
    ctl: &UpdateControls,
    mode: IbtMode,
    pilots: &PilotBook,
    noise: NoiseKey,
) -> Result<IbtOutcome> {
    run_ibt_observed(chan, cfg, ctl, mode, pilots, noise, initialize(chan, cfg), |_, _| {})
}

fn check_finite(bf: &BeamformerSet, iteration: usize, what: &str) -> Result<()> {
    if bf.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { iteration, what: what.to_string() })
    }
}

/// Runs training from `start`, calling `observe(t, bf)` after every
/// iteration (and with `t = 0` for the start).
///
/// Each iteration's metrics use the SI estimate the APs obtain from the
/// next slot 1, which sounds exactly the beamformers being evaluated.
#[allow(clippy::too_many_arguments)]
pub fn run_ibt_observed<F>(
    chan: &ChannelRealization,
    cfg: &NetworkConfig,
    ctl: &UpdateControls,
    mode: IbtMode,
    pilots: &PilotBook,
    noise: NoiseKey,
    start: BeamformerSet,
    mut observe: F,
) -> Result<IbtOutcome>
where
    F: FnMut(usize, &BeamformerSet),
{
    let train = match mode {
        IbtMode::Separate => chan.without_cross_link(),
        IbtMode::Proposed | IbtMode::Local => chan.clone(),
    };
    let (nb, k_dl, k_ul) = (chan.num_aps(), chan.k_dl(), chan.k_ul());
    let mut log = TxLog::default();
    let mut bf = start;
    check_finite(&bf, 0, "initialization")?;

    let evaluate = |t: usize, bf: &BeamformerSet, s1: &Slot1| {
        let si = ResidualSi::from_estimates(chan, bf, &estimate_all_si(s1, pilots));
        IterationMetrics::evaluate(t, chan, bf, &si, cfg)
    };
    let mut s1 = slot1(&train, &bf, pilots, cfg, &mut log, &mut noise.stream(1, SLOT1))?;
    let mut metrics = vec![evaluate(0, &bf, &s1)];
    observe(0, &bf);

    for t in 1..=ctl.max_iters {
        for k in 0..k_dl {
            let cand = update_v_dl_ota(k, &s1.y_dl[k], pilots)?;
            let (sig, xint) = dl_split(k, &s1.y_dl[k], pilots);
            bf.v_dl[k] = damped_apply(&bf.v_dl[k], &cand, ctl.ue_alpha(sig, xint));
        }
        check_finite(&bf, t, "DL combiner")?;

        let mut scaling = OtaScaling::for_slot2(&bf, cfg);
        let s2 = slot2(&train, &bf, pilots, &scaling, cfg, &mut log, &mut noise.stream(t, SLOT2))?;
        let mut v_ul_next = Vec::with_capacity(k_ul);
        for u in 0..k_ul {
            let (cand, _) = update_v_ul_ota(u, &s2.y_dl[u], pilots, &scaling, ctl, cfg)?;
            let (sig, xint) = ul_split(u, &s2.y_dl[u], pilots, &scaling);
            v_ul_next.push(damped_apply(&bf.v_ul[u], &cand, ctl.ue_alpha(sig, xint)));
        }

        let s3 = match mode {
            IbtMode::Local => None,
            IbtMode::Proposed | IbtMode::Separate => {
                let s3 = slot3(&train, &bf, pilots, &s1, &s2, &scaling, cfg, &mut log, &mut noise.stream(t, SLOT3))?;
                scaling.beta3 = s3.beta3;
                Some(s3)
            }
        };

        for b in 0..nb {
            let y3 = s3.as_ref().map(|s| &s.y_ul[b]);
            let dl = dl_ap_estimates(&s2.y_ul[b], y3, &bf.w_dl[b], pilots, &scaling);
            let (w_dl, _) = update_w_dl_ota(&dl, ctl, cfg)?;
            let ul = ul_ap_estimates(&s1.y_ul[b], y3, &bf.w_ul[b], pilots, &scaling);
            let w_ul = update_w_ul_ota(&ul, ctl, cfg)?;
            for (w, c) in bf.w_dl[b].iter_mut().zip(&w_dl) {
                *w = damped_apply(w, c, ctl.ap_alpha);
            }
            for (w, c) in bf.w_ul[b].iter_mut().zip(&w_ul) {
                *w = damped_apply(w, c, ctl.ap_alpha);
            }
        }
        bf.v_ul = v_ul_next;
        check_finite(&bf, t, "AP beamformers or UL precoder")?;

        s1 = slot1(&train, &bf, pilots, cfg, &mut log, &mut noise.stream(t + 1, SLOT1))?;
        metrics.push(evaluate(t, &bf, &s1));
        observe(t, &bf);
    }
    if log.max_power_ratio > 1.0 + 1e-6 {
        return Err(Error::contract(
            "run_ibt",
            format!("transmit power exceeded its budget by a factor {}", log.max_power_ratio),
        ));
    }
    Ok(IbtOutcome { beamformers: bf, metrics, tx: log })
}
