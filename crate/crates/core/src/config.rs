//! Scenario parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{db_to_linear, dbm_to_watts};

/// Step-size rule of the UE-side best-response updates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DampingMode {
    /// Every UE step uses `alpha_fixed`.
    Fixed,
    /// Step size from the UE's desired-signal versus UE-to-UE interference
    /// power, clamped to `[0.1, 1]`.
    InterferenceAdaptive,
}

/// Order in which the perfect-CSI driver visits its blocks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// Mirrors the information flow of the over-the-air protocol: APs update
    /// in parallel from one snapshot, and UL combiners use the UL precoders
    /// that were sounded at the start of the iteration.
    Protocol,
    /// Exact block-coordinate descent: APs are swept one at a time and every
    /// block sees the latest values of all others.
    BlockCoordinate,
}

/// Network-wide pilot scaling rule for slots 2 and 3.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingRule {
    /// `beta1`, `beta2` from the configuration; any transmit block that
    /// still exceeds its budget is clipped and the event counted.
    Fixed,
    /// One scale per iteration chosen so the strongest transmitter of each
    /// slot meets its budget with equality.
    Adaptive,
}

/// All scalar parameters of one scenario. Powers are linear watts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// AP count; always `grid_side²`.
    pub b: usize,
    /// Antennas per AP.
    pub m: usize,
    /// Antennas per UE.
    pub n: usize,
    pub k_dl: usize,
    pub k_ul: usize,
    pub grid_side: usize,
    /// Inter-site distance in meters.
    pub isd: f64,
    pub rho_ap: f64,
    pub rho_ue: f64,
    pub sigma2_ap: f64,
    pub sigma2_ue: f64,
    /// Pilot length in symbols.
    pub tau: usize,
    /// Extra UE-to-UE loss in dB; `-inf` disables the cross-link channel.
    pub ue_isolation_db: f64,
    /// Same-AP residual self-interference level in dB.
    pub si_attenuation_db: f64,
    pub pathloss_const_db: f64,
    pub pathloss_exp: f64,
    /// Training iterations.
    pub iters: usize,
    pub bisect_tol: f64,
    pub damping_mode: DampingMode,
    pub alpha_fixed: f64,
    /// Step size of the AP-side best-response updates; `None` means `1/B`,
    /// the largest step for which simultaneous AP updates cannot increase
    /// the sum MSE.
    pub ap_alpha: Option<f64>,
    pub schedule: Schedule,
    /// `ν_b = nu_scale·trace(Ξ_b)/M`.
    pub nu_scale: f64,
    /// Residual-SI variance of the statistical model used by the perfect-CSI
    /// benchmark; `None` means `sigma2_ap`.
    pub si_stat_eps: Option<f64>,
    /// Residual-SI variance proxy in the over-the-air UL combiner update;
    /// `None` means `M·sigma2_ap/tau`.
    pub ota_si_eps: Option<f64>,
    pub scaling: ScalingRule,
    pub beta1: f64,
    pub beta2: f64,
    pub seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self::paper()
    }
}

impl NetworkConfig {
    /// 16 APs on a 4×4 grid, 16+16 UEs, 4 antennas everywhere, τ = 32.
    pub fn paper() -> Self {
        NetworkConfig {
            b: 16,
            m: 4,
            n: 4,
            k_dl: 16,
            k_ul: 16,
            grid_side: 4,
            isd: 100.0,
            rho_ap: dbm_to_watts(30.0),
            rho_ue: dbm_to_watts(30.0),
            sigma2_ap: dbm_to_watts(-95.0),
            sigma2_ue: dbm_to_watts(-95.0),
            tau: 32,
            ue_isolation_db: -20.0,
            si_attenuation_db: -40.0,
            pathloss_const_db: -30.5,
            pathloss_exp: 37.0,
            iters: 20,
            bisect_tol: 1e-6,
            damping_mode: DampingMode::InterferenceAdaptive,
            alpha_fixed: 1.0,
            ap_alpha: None,
            schedule: Schedule::Protocol,
            nu_scale: 1.0,
            si_stat_eps: None,
            ota_si_eps: None,
            scaling: ScalingRule::Adaptive,
            beta1: 1.0,
            beta2: 1.0,
            seed: 1,
        }
    }

    /// Small instance that exercises every code path in seconds.
    pub fn desk() -> Self {
        NetworkConfig {
            b: 4,
            m: 2,
            n: 2,
            k_dl: 2,
            k_ul: 2,
            grid_side: 2,
            tau: 8,
            ..Self::paper()
        }
    }

    pub fn k_total(&self) -> usize {
        self.k_dl + self.k_ul
    }

    /// Index of UL UE `u` among all UEs (DL UEs come first).
    pub fn ul_index(&self, u: usize) -> usize {
        self.k_dl + u
    }

    pub fn stat_si_eps(&self) -> f64 {
        self.si_stat_eps.unwrap_or(self.sigma2_ap)
    }

    pub fn ota_si_eps(&self) -> f64 {
        self.ota_si_eps
            .unwrap_or(self.m as f64 * self.sigma2_ap / self.tau as f64)
    }

    pub fn ue_isolation_linear(&self) -> f64 {
        if self.ue_isolation_db == f64::NEG_INFINITY {
            0.0
        } else {
            db_to_linear(self.ue_isolation_db)
        }
    }

    pub fn si_attenuation_linear(&self) -> f64 {
        if self.si_attenuation_db == f64::NEG_INFINITY {
            0.0
        } else {
            db_to_linear(self.si_attenuation_db)
        }
    }

    /// Copy with both receiver noise powers set to zero.
    pub fn noiseless(&self) -> Self {
        NetworkConfig {
            sigma2_ap: 0.0,
            sigma2_ue: 0.0,
            ..self.clone()
        }
    }

    pub fn ap_step(&self) -> f64 {
        self.ap_alpha.unwrap_or(1.0 / self.b.max(1) as f64)
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("B", self.b),
            ("M", self.m),
            ("N", self.n),
            ("grid_side", self.grid_side),
            ("tau", self.tau),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::config(name, "must be at least 1"));
            }
        }
        if self.k_dl + self.k_ul == 0 {
            return Err(Error::config("K_dl", "at least one UE is required"));
        }
        if self.b != self.grid_side * self.grid_side {
            return Err(Error::config(
                "B",
                format!("B = {} is not grid_side² = {}", self.b, self.grid_side * self.grid_side),
            ));
        }
        if self.tau < self.k_dl + self.k_ul {
            return Err(Error::config(
                "tau",
                format!("tau must be ≥ K_dl+K_ul ({} < {})", self.tau, self.k_dl + self.k_ul),
            ));
        }
        let positive = [
            ("rho_ap", self.rho_ap),
            ("rho_ue", self.rho_ue),
            ("isd", self.isd),
            ("bisect_tol", self.bisect_tol),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(name, format!("must be positive and finite, got {v}")));
            }
        }
        let non_negative = [
            ("sigma2_ap", self.sigma2_ap),
            ("sigma2_ue", self.sigma2_ue),
            ("nu_scale", self.nu_scale),
            ("si_stat_eps", self.si_stat_eps.unwrap_or(0.0)),
            ("ota_si_eps", self.ota_si_eps.unwrap_or(0.0)),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::config(name, format!("must be non-negative, got {v}")));
            }
        }
        for (name, a) in [("alpha_fixed", self.alpha_fixed), ("ap_alpha", self.ap_step())] {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::config(name, format!("must lie in (0, 1], got {a}")));
            }
        }
        if self.ue_isolation_db.is_nan() || self.ue_isolation_db == f64::INFINITY {
            return Err(Error::config("ue_isolation_db", "must be finite or -inf"));
        }
        if self.si_attenuation_db.is_nan() || self.si_attenuation_db == f64::INFINITY {
            return Err(Error::config("si_attenuation_db", "must be finite or -inf"));
        }
        Ok(())
    }
}
