//! Monte-Carlo experiments over independent drops and their CSV/JSON output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{run_scheme, DropContext, SchemeId};
use crate::config::{DampingMode, NetworkConfig, ScalingRule, Schedule};
use crate::error::{Error, Result};
use crate::metrics::{effective_rate, IterationMetrics};
use crate::numerics::{db_to_linear, dbm_to_watts, RngStream};
use crate::ota::{NoiseKey, PilotBook};
use crate::perfect_csi::UpdateControls;
use crate::topology::ChannelRealization;

const TOPOLOGY_LABEL: u64 = 0x7090;
const CHANNEL_LABEL: u64 = 0xC4A7;
const PILOT_LABEL: u64 = 0x9170;

pub const DEFAULT_R_TOT: [usize; 5] = [1000, 2500, 5000, 7500, 10000];

/// Schemes plotted in the iteration figure, in column order.
pub const FIG1_SCHEMES: [SchemeId; 4] =
    [SchemeId::Proposed, SchemeId::SeparateOta, SchemeId::LocalMmse, SchemeId::HalfDuplex];
/// Schemes plotted in the effective-rate figure, in column order.
pub const FIG2_SCHEMES: [SchemeId; 3] = [SchemeId::Proposed, SchemeId::SeparateOta, SchemeId::LocalMmse];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Desk,
    Paper,
}

impl Scale {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            other => Err(Error::config("scale", format!("expected `desk` or `paper`, got `{other}`"))),
        }
    }

    pub fn config(self) -> NetworkConfig {
        match self {
            Scale::Desk => NetworkConfig::desk(),
            Scale::Paper => NetworkConfig::paper(),
        }
    }

    pub fn default_drops(self) -> usize {
        match self {
            Scale::Desk => 20,
            Scale::Paper => 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub scale: Scale,
    pub base: NetworkConfig,
    pub schemes: Vec<SchemeId>,
    pub drops: usize,
    pub r_tot_grid: Vec<usize>,
    pub output_dir: PathBuf,
    /// Write the per-UE rate CDF files.
    pub emit_per_ue: bool,
    /// Worker threads; `None` lets the pool decide. Never affects results.
    pub threads: Option<usize>,
}

impl ExperimentSpec {
    pub fn new(scale: Scale) -> Self {
        ExperimentSpec {
            scale,
            base: scale.config(),
            schemes: FIG1_SCHEMES.to_vec(),
            drops: scale.default_drops(),
            r_tot_grid: DEFAULT_R_TOT.to_vec(),
            output_dir: PathBuf::from("out"),
            emit_per_ue: true,
            threads: None,
        }
    }

    /// Reads a `key = value` file. A `scale` line picks the preset the other
    /// keys modify, wherever it appears.
    pub fn from_file(path: &Path, scale: Option<Scale>) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse_with(&text, scale)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with(text, None)
    }

    /// Like [`ExperimentSpec::parse`], with `scale` taking precedence over
    /// any `scale` line in the text.
    pub fn parse_with(text: &str, scale: Option<Scale>) -> Result<Self> {
        let mut pairs = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}", n + 1), format!("expected key = value, got `{line}`")))?;
            pairs.push((k.trim().to_ascii_lowercase(), v.trim().to_string()));
        }
        let scale = match (scale, pairs.iter().rev().find(|(k, _)| k == "scale")) {
            (Some(s), _) => s,
            (None, Some((_, v))) => Scale::parse(v)?,
            (None, None) => Scale::Paper,
        };
        let mut spec = Self::new(scale);
        for (k, v) in pairs.iter().filter(|(k, _)| k != "scale") {
            spec.set(k, v)?;
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Applies one setting. Keys ending in `_db` or `_dbm` take logarithmic values.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let c = &mut self.base;
        let key = key.trim().to_ascii_lowercase();
        let v = value.trim();
        match key.as_str() {
            "b" => {
                let b: usize = num(&key, v)?;
                let side = (b as f64).sqrt().round() as usize;
                if side * side != b {
                    return Err(Error::config("B", format!("{b} APs cannot fill a square grid")));
                }
                c.b = b;
                c.grid_side = side;
            }
            "m" => c.m = num(&key, v)?,
            "n" => c.n = num(&key, v)?,
            "k_dl" => c.k_dl = num(&key, v)?,
            "k_ul" => c.k_ul = num(&key, v)?,
            "isd" => c.isd = num(&key, v)?,
            "rho_ap" => c.rho_ap = num(&key, v)?,
            "rho_ue" => c.rho_ue = num(&key, v)?,
            "rho_ap_dbm" => c.rho_ap = dbm_to_watts(num(&key, v)?),
            "rho_ue_dbm" => c.rho_ue = dbm_to_watts(num(&key, v)?),
            "sigma2_ap" => c.sigma2_ap = num(&key, v)?,
            "sigma2_ue" => c.sigma2_ue = num(&key, v)?,
            "sigma2_ap_dbm" => c.sigma2_ap = dbm_to_watts(num(&key, v)?),
            "sigma2_ue_dbm" => c.sigma2_ue = dbm_to_watts(num(&key, v)?),
            "noise_dbm" => {
                c.sigma2_ap = dbm_to_watts(num(&key, v)?);
                c.sigma2_ue = c.sigma2_ap;
            }
            "tau" => c.tau = num(&key, v)?,
            "ue_isolation_db" => c.ue_isolation_db = num(&key, v)?,
            "si_attenuation_db" => c.si_attenuation_db = num(&key, v)?,
            "pathloss_const_db" => c.pathloss_const_db = num(&key, v)?,
            "pathloss_exp" => c.pathloss_exp = num(&key, v)?,
            "iters" => c.iters = num(&key, v)?,
            "bisect_tol" => c.bisect_tol = num(&key, v)?,
            "damping_mode" => {
                c.damping_mode = match v {
                    "fixed" => DampingMode::Fixed,
                    "interference_adaptive" | "adaptive" => DampingMode::InterferenceAdaptive,
                    _ => return Err(Error::config(key, format!("unknown damping mode `{v}`"))),
                }
            }
            "alpha_fixed" => c.alpha_fixed = num(&key, v)?,
            "ap_alpha" => c.ap_alpha = optional(&key, v)?,
            "schedule" => {
                c.schedule = match v {
                    "protocol" => Schedule::Protocol,
                    "block_coordinate" => Schedule::BlockCoordinate,
                    _ => return Err(Error::config(key, format!("unknown schedule `{v}`"))),
                }
            }
            "nu_scale" => c.nu_scale = num(&key, v)?,
            "si_stat_eps" => c.si_stat_eps = optional(&key, v)?,
            "si_stat_eps_db" => c.si_stat_eps = Some(db_to_linear(num(&key, v)?) * c.sigma2_ap),
            "ota_si_eps" => c.ota_si_eps = optional(&key, v)?,
            "scaling" => {
                c.scaling = match v {
                    "fixed" => ScalingRule::Fixed,
                    "adaptive" => ScalingRule::Adaptive,
                    _ => return Err(Error::config(key, format!("unknown scaling rule `{v}`"))),
                }
            }
            "beta1" => c.beta1 = num(&key, v)?,
            "beta2" => c.beta2 = num(&key, v)?,
            "seed" => c.seed = num(&key, v)?,
            "drops" => self.drops = num(&key, v)?,
            "schemes" => {
                self.schemes = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?;
            }
            "r_tot_grid" => {
                self.r_tot_grid = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| num(&key, s))
                    .collect::<Result<_>>()?;
            }
            "output_dir" | "out" => self.output_dir = PathBuf::from(v),
            "emit_per_ue" => self.emit_per_ue = num(&key, v)?,
            "threads" => self.threads = Some(num(&key, v)?),
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.drops == 0 {
            return Err(Error::config("drops", "must be at least 1"));
        }
        if self.schemes.is_empty() {
            return Err(Error::config("schemes", "at least one scheme is required"));
        }
        if self.threads == Some(0) {
            return Err(Error::config("threads", "must be at least 1"));
        }
        if self.r_tot_grid.contains(&0) {
            return Err(Error::config("r_tot_grid", "budgets must be positive"));
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.base.seed
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.trim()
        .parse()
        .map_err(|e| Error::config(key, format!("cannot parse `{v}`: {e}")))
}

fn optional(key: &str, v: &str) -> Result<Option<f64>> {
    match v {
        "auto" | "default" | "" => Ok(None),
        _ => num(key, v).map(Some),
    }
}

/// Channels, pilots and noise seeds of one drop, all derived from the seed
/// and the drop index alone.
pub fn drop_inputs(cfg: &NetworkConfig, drop: u64) -> Result<(ChannelRealization, PilotBook, NoiseKey)> {
    let seed = cfg.seed;
    let chan = ChannelRealization::generate(
        cfg,
        &mut RngStream::derived(seed, &[TOPOLOGY_LABEL, drop]),
        &mut RngStream::derived(seed, &[CHANNEL_LABEL, drop]),
    )?;
    let pilots = PilotBook::build(cfg, &mut RngStream::derived(seed, &[PILOT_LABEL, drop]))?;
    Ok((chan, pilots, NoiseKey::new(seed, drop)))
}

/// Every scheme's metrics on one drop, in the order of `spec.schemes`.
#[derive(Clone, Debug)]
pub struct DropRecord {
    pub drop: u64,
    pub checksum: String,
    pub runs: Vec<Vec<IterationMetrics>>,
    pub clip_events: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DropFailure {
    pub drop: u64,
    pub scheme: Option<SchemeId>,
    pub message: String,
}

pub fn run_drop(spec: &ExperimentSpec, drop: u64) -> std::result::Result<DropRecord, DropFailure> {
    let fail = |scheme, e: Error| DropFailure { drop, scheme, message: e.to_string() };
    let cfg = &spec.base;
    let (chan, pilots, noise) = drop_inputs(cfg, drop).map_err(|e| fail(None, e))?;
    let ctl = UpdateControls::from_config(cfg);
    let ctx = DropContext { chan: &chan, cfg, ctl: &ctl, pilots: &pilots, noise };
    let mut runs = Vec::with_capacity(spec.schemes.len());
    let mut clip_events = Vec::with_capacity(spec.schemes.len());
    for &id in &spec.schemes {
        let run = run_scheme(id, &ctx).map_err(|e| fail(Some(id), e))?;
        if run.metrics.iter().any(|m| !m.sum_rate.is_finite()) {
            return Err(fail(Some(id), Error::NonFinite { iteration: 0, what: "sum rate".into() }));
        }
        runs.push(run.metrics);
        clip_events.push(run.tx.clip_events);
    }
    Ok(DropRecord { drop, checksum: chan.checksum(), runs, clip_events })
}

/// Per-scheme statistics over the successful drops.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SchemeAggregate {
    pub scheme: SchemeId,
    /// Mean sum rate for iterations `0..=iters`.
    pub mean: Vec<f64>,
    /// Standard error of `mean`.
    pub sem: Vec<f64>,
    /// Effective rate per entry of the budget grid; `None` for schemes
    /// without training overhead accounting.
    pub effective: Option<Vec<f64>>,
    /// Iteration count that attains each entry of `effective`.
    pub best_t: Option<Vec<usize>>,
    /// Per-UE rates at the final iteration, pooled over drops.
    pub ue_rates_dl: Vec<f64>,
    pub ue_rates_ul: Vec<f64>,
    pub clip_events: usize,
}

impl SchemeAggregate {
    pub fn final_mean(&self) -> f64 {
        *self.mean.last().unwrap_or(&f64::NAN)
    }

    pub fn final_sem(&self) -> f64 {
        *self.sem.last().unwrap_or(&f64::NAN)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggregateResult {
    pub schemes: Vec<SchemeAggregate>,
    pub r_tot_grid: Vec<usize>,
    pub drops_requested: usize,
    pub drops_ok: usize,
    pub failures: Vec<DropFailure>,
    pub checksums: Vec<(u64, String)>,
}

impl AggregateResult {
    pub fn scheme(&self, id: SchemeId) -> Option<&SchemeAggregate> {
        self.schemes.iter().find(|s| s.scheme == id)
    }
}

/// Best effective rate over the stopping iteration `t ∈ 1..=iters`.
pub fn best_effective_rate(curve: &[f64], r_ibt: usize, r_tot: usize) -> (f64, usize) {
    let mut best = (0.0, 1);
    for (t, &r) in curve.iter().enumerate().skip(1) {
        let e = effective_rate(r, t, r_ibt, r_tot);
        if e > best.0 {
            best = (e, t);
        }
    }
    best
}

fn mean_and_sem(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn aggregate(spec: &ExperimentSpec, records: &[DropRecord], failures: Vec<DropFailure>) -> AggregateResult {
    let iters = spec.base.iters;
    let mut schemes = Vec::with_capacity(spec.schemes.len());
    for (j, &id) in spec.schemes.iter().enumerate() {
        let mut mean = Vec::with_capacity(iters + 1);
        let mut sem = Vec::with_capacity(iters + 1);
        for t in 0..=iters {
            let samples: Vec<f64> = records.iter().map(|r| r.runs[j][t].sum_rate).collect();
            let (m, s) = if samples.is_empty() { (f64::NAN, f64::NAN) } else { mean_and_sem(&samples) };
            mean.push(m);
            sem.push(s);
        }
        let (effective, best_t) = match id.resources_per_iteration(spec.base.tau) {
            Some(r_ibt) => {
                let (e, t) = spec
                    .r_tot_grid
                    .iter()
                    .map(|&r_tot| best_effective_rate(&mean, r_ibt, r_tot))
                    .unzip();
                (Some(e), Some(t))
            }
            None => (None, None),
        };
        let last = |r: &DropRecord| r.runs[j].last().cloned();
        let ue_rates_dl = records.iter().filter_map(last).flat_map(|m| m.rate_dl).collect();
        let ue_rates_ul = records.iter().filter_map(last).flat_map(|m| m.rate_ul).collect();
        let clip_events = records.iter().map(|r| r.clip_events[j]).sum();
        schemes.push(SchemeAggregate { scheme: id, mean, sem, effective, best_t, ue_rates_dl, ue_rates_ul, clip_events });
    }
    AggregateResult {
        schemes,
        r_tot_grid: spec.r_tot_grid.clone(),
        drops_requested: spec.drops,
        drops_ok: records.len(),
        failures,
        checksums: records.iter().map(|r| (r.drop, r.checksum.clone())).collect(),
    }
}

/// Runs every drop on a worker pool and aggregates in drop order, so the
/// result does not depend on the thread count.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<AggregateResult> {
    spec.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = spec.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::config("threads", format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<_> = pool.install(|| {
        (0..spec.drops as u64)
            .into_par_iter()
            .map(|d| run_drop(spec, d))
            .collect()
    });
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => records.push(r),
            Err(f) => failures.push(f),
        }
    }
    Ok(aggregate(spec, &records, failures))
}

fn fmt_value(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x}")
    }
}

pub fn fig1_csv(result: &AggregateResult, iters: usize) -> String {
    let mut out = String::from("Itr,Proposed,Seperate,Local,HD\n");
    for t in 1..=iters {
        let _ = write!(out, "{t}");
        for id in FIG1_SCHEMES {
            let v = result.scheme(id).map_or(f64::NAN, |s| s.mean[t]);
            let _ = write!(out, ",{}", fmt_value(v));
        }
        out.push('\n');
    }
    out
}

pub fn perfect_csi_csv(agg: &SchemeAggregate) -> String {
    let mut out = String::from("Itr,PerfectCSI\n");
    for (t, v) in agg.mean.iter().enumerate().skip(1) {
        let _ = writeln!(out, "{t},{}", fmt_value(*v));
    }
    out
}

pub fn fig2_csv(result: &AggregateResult) -> String {
    let mut out = String::from("Res,Proposed,Seperate,Local\n");
    for (i, r_tot) in result.r_tot_grid.iter().enumerate() {
        let _ = write!(out, "{r_tot}");
        for id in FIG2_SCHEMES {
            let v = result
                .scheme(id)
                .and_then(|s| s.effective.as_ref())
                .map_or(f64::NAN, |e| e[i]);
            let _ = write!(out, ",{}", fmt_value(v));
        }
        out.push('\n');
    }
    out
}

/// Empirical CDF with a leading zero-probability point at the smallest sample.
pub fn cdf_csv(samples: &[f64]) -> String {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let mut out = String::from("x,y\n");
    if let Some(first) = xs.first() {
        let _ = writeln!(out, "{},0", fmt_value(*first));
    }
    let n = xs.len() as f64;
    for (i, x) in xs.iter().enumerate() {
        let _ = writeln!(out, "{},{}", fmt_value(*x), (i + 1) as f64 / n);
    }
    out
}

#[derive(Serialize)]
struct RunMeta<'a> {
    seed: u64,
    scale: Scale,
    config: &'a NetworkConfig,
    schemes: &'a [SchemeId],
    r_tot_grid: &'a [usize],
    drops_requested: usize,
    drops_ok: usize,
    drops_failed: usize,
    failures: &'a [DropFailure],
    final_mean: Vec<(SchemeId, f64)>,
    final_sem: Vec<(SchemeId, f64)>,
    best_t: Vec<(SchemeId, &'a [usize])>,
    clip_events: Vec<(SchemeId, usize)>,
    channel_checksums: &'a [(u64, String)],
}

pub fn run_meta_json(result: &AggregateResult, spec: &ExperimentSpec) -> String {
    let meta = RunMeta {
        seed: spec.seed(),
        scale: spec.scale,
        config: &spec.base,
        schemes: &spec.schemes,
        r_tot_grid: &spec.r_tot_grid,
        drops_requested: result.drops_requested,
        drops_ok: result.drops_ok,
        drops_failed: result.failures.len(),
        failures: &result.failures,
        final_mean: result.schemes.iter().map(|s| (s.scheme, s.final_mean())).collect(),
        final_sem: result.schemes.iter().map(|s| (s.scheme, s.final_sem())).collect(),
        best_t: result
            .schemes
            .iter()
            .filter_map(|s| s.best_t.as_deref().map(|t| (s.scheme, t)))
            .collect(),
        clip_events: result.schemes.iter().map(|s| (s.scheme, s.clip_events)).collect(),
        channel_checksums: &result.checksums,
    };
    let mut json = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    json.push('\n');
    json
}

/// Writes all output files and returns their paths.
pub fn emit_outputs(result: &AggregateResult, spec: &ExperimentSpec) -> Result<Vec<PathBuf>> {
    let dir = &spec.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = vec![
        ("fig1.csv".to_string(), fig1_csv(result, spec.base.iters)),
        ("fig2.csv".to_string(), fig2_csv(result)),
    ];
    if let Some(p) = result.scheme(SchemeId::PerfectCsi) {
        files.push(("fig1_perfect_csi.csv".to_string(), perfect_csi_csv(p)));
    }
    if spec.emit_per_ue {
        for s in &result.schemes {
            files.push((format!("fig3_{}_dl.csv", s.scheme), cdf_csv(&s.ue_rates_dl)));
            files.push((format!("fig3_{}_ul.csv", s.scheme), cdf_csv(&s.ue_rates_ul)));
        }
    }
    files.push(("run_meta.json".to_string(), run_meta_json(result, spec)));
    let mut written = Vec::with_capacity(files.len());
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(schemes: &[SchemeId], drops: usize) -> ExperimentSpec {
        let mut spec = ExperimentSpec::new(Scale::Desk);
        spec.schemes = schemes.to_vec();
        spec.drops = drops;
        spec.base.iters = 5;
        spec
    }

    #[test]
    fn empty_config_gives_paper_defaults() {
        let spec = ExperimentSpec::parse("# nothing here\n\n").unwrap();
        assert_eq!(spec.base, NetworkConfig::paper());
        assert_eq!(spec.drops, 100);
        assert_eq!(spec.r_tot_grid, DEFAULT_R_TOT.to_vec());
    }

    #[test]
    fn parse_applies_keys_and_units() {
        let text = "drops = 2\nB=9  # three by three\nrho_ap_dbm = 20\nschemes = proposed, local\nscale = desk\n";
        let spec = ExperimentSpec::parse(text).unwrap();
        assert_eq!(spec.drops, 2);
        assert_eq!((spec.base.b, spec.base.grid_side), (9, 3));
        assert!((spec.base.rho_ap - 0.1).abs() < 1e-15);
        assert_eq!(spec.base.m, 2);
        assert_eq!(spec.schemes, vec![SchemeId::Proposed, SchemeId::LocalMmse]);
        let paper = ExperimentSpec::parse_with(text, Some(Scale::Paper)).unwrap();
        assert_eq!(paper.base.m, 4);
    }

    #[test]
    fn parse_errors_name_the_field() {
        let cases = [
            ("tau = 8", "tau must be ≥ K_dl+K_ul"),
            ("B = 12", "`B`"),
            ("colour = blue", "`colour`"),
            ("drops = many", "`drops`"),
            ("no equals sign", "line 1"),
        ];
        for (text, needle) in cases {
            let err = ExperimentSpec::parse(text).unwrap_err();
            assert!(err.is_config());
            assert!(err.to_string().contains(needle), "{text}: {err}");
        }
        assert!(ExperimentSpec::from_file(Path::new("/nonexistent/cfg.toml"), None).unwrap_err().is_config());
    }

    #[test]
    fn single_drop_single_scheme_shape() {
        let spec = tiny(&[SchemeId::Proposed], 1);
        let res = run_experiment(&spec).unwrap();
        assert_eq!(res.drops_ok, 1);
        let s = &res.schemes[0];
        assert_eq!(s.mean.len(), 6);
        assert_eq!(s.ue_rates_dl.len(), spec.base.k_dl);
        assert_eq!(s.ue_rates_ul.len(), spec.base.k_ul);
        assert_eq!(s.effective.as_ref().unwrap().len(), 5);
        assert_eq!(fig1_csv(&res, 5).lines().count(), 6);
    }

    #[test]
    fn results_do_not_depend_on_threads() {
        let mut a = tiny(&FIG1_SCHEMES, 4);
        a.threads = Some(1);
        let mut b = a.clone();
        b.threads = Some(3);
        assert_eq!(run_experiment(&a).unwrap(), run_experiment(&b).unwrap());
    }

    #[test]
    fn effective_rate_table() {
        let curve = [5.0, 100.0, 150.0, 160.0];
        let (e, t) = best_effective_rate(&curve, 100, 1000);
        assert_eq!(t, 2);
        assert!((e - 120.0).abs() < 1e-12);
        assert_eq!(best_effective_rate(&curve, 100, 50), (0.0, 1));
    }

    #[test]
    fn cdf_is_monotone_from_zero_to_one() {
        let text = cdf_csv(&[3.0, 1.0, 2.0, 2.0]);
        let rows: Vec<(f64, f64)> = text
            .lines()
            .skip(1)
            .map(|l| {
                let (x, y) = l.split_once(',').unwrap();
                (x.parse().unwrap(), y.parse().unwrap())
            })
            .collect();
        assert_eq!(rows.first().unwrap(), &(1.0, 0.0));
        assert_eq!(rows.last().unwrap(), &(3.0, 1.0));
        assert!(rows.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1));
    }

    #[test]
    fn mean_and_sem_values() {
        let (m, s) = mean_and_sem(&[1.0, 2.0, 3.0, 4.0]);
        assert!((m - 2.5).abs() < 1e-15);
        assert!((s - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_and_sem(&[7.0]), (7.0, 0.0));
    }
}
