//! Quick invariant suite on desk-scale instances, run by `fdcf validate`.

use crate::baselines::SchemeId;
use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::experiment::{drop_inputs, emit_outputs, run_experiment, ExperimentSpec, Scale};
use crate::fixture;
use crate::metrics::{effective_rate, EffectiveChannelCache, ResidualSi};
use crate::numerics::{CMat, RngStream};
use crate::ota::{
    dl_ap_estimates, run_ibt, slot1, slot2, slot3, ul_ap_estimates, update_v_dl_ota, IbtMode, OtaScaling,
    PilotBook, TxLog,
};
use crate::perfect_csi::{initialize, run_alt_opt, update_v_dl, UpdateControls};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: impl Into<String>) -> Self {
        Check { name, passed, detail: detail.into() }
    }
}

const INSTANCES: u64 = 10;

fn pilot_gram() -> Result<Check> {
    let cfg = NetworkConfig::paper();
    let book = PilotBook::build(&cfg, &mut RngStream::new(cfg.seed, 0))?;
    let s = book.stacked();
    let k = cfg.k_total();
    let err = (s.adjoint() * &s - CMat::identity(k, k).scale(cfg.tau as f64)).camax();
    Ok(Check::new("pilot Gram equals tau*I (tau=32, K=16+16)", err <= 1e-10, format!("max error {err:.2e}")))
}

fn monotone_descent() -> Result<Check> {
    let cfg = NetworkConfig { nu_scale: 0.0, ..NetworkConfig::desk() };
    let ctl = UpdateControls::exact(&cfg);
    let mut worst = f64::NEG_INFINITY;
    for d in 0..INSTANCES {
        let (chan, _, _) = drop_inputs(&cfg, d)?;
        let out = run_alt_opt(&chan, &cfg, &ctl)?;
        for w in out.block_mse.windows(2) {
            worst = worst.max(w[1] - w[0]);
        }
    }
    Ok(Check::new("exact block updates never increase the sum MSE", worst <= 1e-9, format!("largest increase {worst:.2e}")))
}

fn ota_matches_perfect_csi() -> Result<Check> {
    let cfg = NetworkConfig { si_stat_eps: Some(0.0), ..NetworkConfig::desk().noiseless() };
    let mut worst: f64 = 0.0;
    for d in 0..INSTANCES {
        let (chan, pilots, _) = drop_inputs(&cfg, d)?;
        let chan = chan.without_ap_coupling();
        let bf = initialize(&chan, &cfg);
        let s1 = slot1(&chan, &bf, &pilots, &cfg, &mut TxLog::default(), &mut RngStream::new(0, 0))?;
        let cache = EffectiveChannelCache::build(&chan, &bf, &ResidualSi::none());
        for k in 0..cfg.k_dl {
            let ota = update_v_dl_ota(k, &s1.y_dl[k], &pilots)?;
            let pc = update_v_dl(k, &cache, &cfg)?;
            worst = worst.max((ota - &pc).norm() / pc.norm());
        }
    }
    Ok(Check::new("noiseless over-the-air DL combiner equals its perfect-CSI update", worst <= 1e-6, format!("largest relative error {worst:.2e}")))
}

fn nulling_and_reconstruction() -> Result<Check> {
    let cfg = NetworkConfig::desk().noiseless();
    let (mut leak, mut recon): (f64, f64) = (0.0, 0.0);
    for d in 0..INSTANCES {
        let (chan, pilots, _) = drop_inputs(&cfg, d)?;
        let bf = initialize(&chan, &cfg);
        let mut log = TxLog::default();
        let mut rng = RngStream::new(0, 0);
        let s1 = slot1(&chan, &bf, &pilots, &cfg, &mut log, &mut rng)?;
        let mut scaling = OtaScaling::for_slot2(&bf, &cfg);
        let s2 = slot2(&chan, &bf, &pilots, &scaling, &cfg, &mut log, &mut rng)?;
        let s3 = slot3(&chan, &bf, &pilots, &s1, &s2, &scaling, &cfg, &mut log, &mut rng)?;
        scaling.beta3 = s3.beta3;
        for x in &s3.x_dl {
            leak = leak.max((x * &pilots.q).norm() / x.norm().max(f64::MIN_POSITIVE));
        }
        for x in &s3.x_ul {
            leak = leak.max((x * &pilots.p).norm() / x.norm().max(f64::MIN_POSITIVE));
        }
        let cache = EffectiveChannelCache::build(&chan, &bf, &ResidualSi::none());
        for b in 0..cfg.b {
            let dl = dl_ap_estimates(&s2.y_ul[b], Some(&s3.y_ul[b]), &bf.w_dl[b], &pilots, &scaling);
            for (x, truth) in dl.cross.iter().flatten().zip(&cache.xi_dl[b]) {
                recon = recon.max((x - truth).norm() / truth.norm().max(f64::MIN_POSITIVE));
            }
            let ul = ul_ap_estimates(&s1.y_ul[b], Some(&s3.y_ul[b]), &bf.w_ul[b], &pilots, &scaling);
            for (x, truth) in ul.cross.iter().flatten().zip(&cache.xi_ul[b]) {
                recon = recon.max((x - truth).norm() / truth.norm().max(f64::MIN_POSITIVE));
            }
        }
    }
    Ok(Check::new(
        "slot-3 retransmissions null the opposing pilots and rebuild cross terms",
        leak <= 1e-12 && recon <= 1e-6,
        format!("leakage {leak:.2e}, reconstruction error {recon:.2e}"),
    ))
}

fn power_feasibility() -> Result<Check> {
    let cfg = NetworkConfig::desk();
    let ctl = UpdateControls::from_config(&cfg);
    let mut worst: f64 = 0.0;
    let mut feasible = true;
    for d in 0..INSTANCES {
        let (chan, pilots, noise) = drop_inputs(&cfg, d)?;
        let out = run_ibt(&chan, &cfg, &ctl, IbtMode::Proposed, &pilots, noise)?;
        worst = worst.max(out.tx.max_power_ratio);
        feasible &= out.beamformers.is_power_feasible(&cfg, 1e-6);
        feasible &= run_alt_opt(&chan, &cfg, &ctl)?.beamformers.is_power_feasible(&cfg, 1e-6);
    }
    Ok(Check::new(
        "beamformers and transmit blocks respect their power budgets",
        feasible && worst <= 1.0 + 1e-6,
        format!("largest transmit power ratio {worst:.6}"),
    ))
}

fn effective_rate_arithmetic() -> Check {
    let r = effective_rate(200.0, 20, 96, 10_000);
    Check::new("effective rate of 200 after 20 iterations at 96/10000 is 161.6", (r - 161.6).abs() < 1e-9, format!("{r}"))
}

fn fixture_round_trip() -> Result<Check> {
    let cfg = NetworkConfig::desk();
    let (chan, _, _) = drop_inputs(&cfg, 0)?;
    let back = fixture::parse(&fixture::dump(&chan))?;
    Ok(Check::new("channel dumps parse back bit for bit", back == chan, chan.checksum()))
}

fn determinism() -> Result<Check> {
    let dir = std::env::temp_dir().join(format!("fdcf-validate-{}", std::process::id()));
    let mut spec = ExperimentSpec::new(Scale::Desk);
    spec.drops = 4;
    spec.base.iters = 8;
    spec.schemes = SchemeId::ALL.to_vec();
    let mut bodies = Vec::new();
    for threads in [1, 4] {
        spec.threads = Some(threads);
        spec.output_dir = dir.join(format!("t{threads}"));
        let result = run_experiment(&spec)?;
        let files = emit_outputs(&result, &spec)?;
        let mut contents = Vec::new();
        for f in files {
            let body = std::fs::read(&f).map_err(|e| Error::io(&f, e))?;
            contents.push((f.file_name().map(|n| n.to_owned()), body));
        }
        bodies.push(contents);
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok(Check::new("outputs are byte-identical for 1 and 4 threads", bodies[0] == bodies[1], format!("{} files", bodies[0].len())))
}

/// Runs every check; an error inside a check counts as a failure.
pub fn run_validation() -> Vec<Check> {
    let checks: Vec<(&'static str, fn() -> Result<Check>)> = vec![
        ("pilot Gram", pilot_gram),
        ("monotone descent", monotone_descent),
        ("update equivalence", ota_matches_perfect_csi),
        ("nulling and reconstruction", nulling_and_reconstruction),
        ("power feasibility", power_feasibility),
        ("effective rate", || Ok(effective_rate_arithmetic())),
        ("fixture round trip", fixture_round_trip),
        ("determinism", determinism),
    ];
    checks
        .into_iter()
        .map(|(name, f)| f().unwrap_or_else(|e| Check::new(name, false, e.to_string())))
        .collect()
}
