//! Scenario configuration: every knob of the simulated system in one
//! serde-loadable struct, with defaults matching the evaluation setup used
//! throughout the experiment suite.
//!
//! Distances, carrier, and large-scale fading laws describe a base station
//! serving K single-antenna users through an M-element array, assisted by a
//! Q-element transmissive/reflective surface, with a single sensing target
//! behind the surface. Element spacing (quarter-wavelength in both panel
//! directions) and the physical transmit/receive array split do not enter
//! the flat-fading channel statistics, so they are not configuration fields.
//!
//! Configs load from TOML; unknown keys are rejected so typos fail loudly
//! instead of silently falling back to defaults. Every field has a default,
//! so a config file only needs to name what it changes:
//!
//! ```toml
//! q = 64
//! xi_db = 12.0
//! trials = 200
//!
//! [bs_surface_loss]
//! c_db = -26.0
//! mu = 2.2
//! distance_m = 8.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::PathLossLaw;
use crate::signal::NoisePowers;
use crate::{Error, Result};

/// How the M-element echo snapshot is collapsed to the scalar per-symbol
/// observation the phase-difference estimators consume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EchoScalarization {
    /// Phase of the coherent sum across receive antennas (default; cheap
    /// and exact for a rank-one echo).
    #[default]
    CoherentSum,
    /// Project onto the dominant left singular vector of the snapshot
    /// matrix instead. Equivalent for a noiseless rank-one echo; slightly
    /// more robust when beams are badly mismatched.
    DominantSingularVector,
}

/// Complete description of one simulated deployment.
///
/// All powers are configured in dB (`*_db` keys) and converted to linear
/// scale by the accessor methods; distances are in metres, frequencies in
/// hertz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Base-station antennas M.
    pub m: usize,
    /// Downlink users K.
    pub k_users: usize,
    /// Surface elements Q.
    pub q: usize,
    /// When set, `validate` additionally requires Q to be a perfect square
    /// (a physical panel is usually √Q × √Q).
    pub require_square_q: bool,
    /// OFDM subcarriers N_s.
    pub n_subcarriers: usize,
    /// OFDM symbols per frame.
    pub n_ofdm_symbols: usize,
    /// Subcarrier spacing Δf in Hz.
    pub delta_f_hz: f64,
    /// Carrier frequency in Hz.
    pub f_c_hz: f64,
    /// Cyclic-prefix length as a fraction of the symbol core.
    pub cp_fraction: f64,
    /// Explicit OFDM symbol duration override in seconds. When absent the
    /// duration is derived as (1 + cp_fraction)/Δf.
    pub t_s_s: Option<f64>,

    /// Large-scale fading BS → user.
    pub bs_user_loss: PathLossLaw,
    /// Large-scale fading BS → surface.
    pub bs_surface_loss: PathLossLaw,
    /// Large-scale fading surface → target (one way).
    pub surface_target_loss: PathLossLaw,
    /// Large-scale fading surface → user.
    pub surface_user_loss: PathLossLaw,

    /// User receiver noise power in dB.
    pub sigma2_db: f64,
    /// Surface dynamic-noise power in dB.
    pub sigma_v2_db: f64,
    /// Radar receiver noise power in dB.
    pub sigma_r2_db: f64,

    /// Per-element amplification cap α_max (active surface).
    pub alpha_max: f64,
    /// Whether the surface is active (amplifying) or the passive baseline.
    pub active_surface: bool,
    /// Per-user SINR target ξ in dB.
    pub xi_db: f64,
    /// Base-station power budget P_BS (linear).
    pub p_bs: f64,

    /// Target angle seen from the surface, radians in [−π/2, π/2].
    pub theta_at_rad: f64,
    /// Draw one small-scale realization and reuse it on every subcarrier
    /// (instead of independent draws per subcarrier).
    pub flat_fading: bool,
    /// Deterministic per-subcarrier phase ramp applied to the
    /// surface–target link: subcarrier n gets e^{j·n·ramp}.
    pub h_at_phase_ramp_rad: f64,

    /// True target range in metres (baseline for sensing experiments).
    pub target_range_m: f64,
    /// True target radial velocity in km/h.
    pub target_velocity_kmh: f64,
    /// Relative standard deviation of the per-difference phase jitter
    /// applied in sensing trials.
    pub phase_jitter_rel: f64,
    /// How echo snapshots are reduced to scalars for phase estimation.
    pub echo_scalarization: EchoScalarization,
    /// Per-symbol data SNR in dB for the coded-free link experiments.
    pub link_snr_db: f64,

    /// Monte-Carlo trials per sweep point.
    pub trials: usize,
    /// Master seed; all per-trial streams derive from it.
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            m: 32,
            k_users: 4,
            q: 100,
            require_square_q: false,
            n_subcarriers: 64,
            n_ofdm_symbols: 32,
            delta_f_hz: 240e3,
            f_c_hz: 3e9,
            cp_fraction: 0.07,
            t_s_s: None,
            bs_user_loss: PathLossLaw {
                c_db: 28.0,
                mu: 3.67,
                distance_m: 50.0,
            },
            bs_surface_loss: PathLossLaw {
                c_db: -26.0,
                mu: 2.2,
                distance_m: 8.0,
            },
            surface_target_loss: PathLossLaw {
                c_db: 28.0,
                mu: 3.67,
                distance_m: 50.0,
            },
            surface_user_loss: PathLossLaw {
                c_db: 28.0,
                mu: 3.67,
                distance_m: 50.0,
            },
            sigma2_db: -40.0,
            sigma_v2_db: -40.0,
            sigma_r2_db: -58.0,
            alpha_max: 4.0,
            active_surface: true,
            xi_db: 10.0,
            p_bs: 1.0,
            theta_at_rad: std::f64::consts::FRAC_PI_6,
            flat_fading: false,
            h_at_phase_ramp_rad: 0.0,
            target_range_m: 50.0,
            target_velocity_kmh: 150.0,
            phase_jitter_rel: 0.01,
            echo_scalarization: EchoScalarization::CoherentSum,
            link_snr_db: 10.0,
            trials: 50,
            seed: 7,
        }
    }
}

impl ScenarioConfig {
    /// A small instance (Q = 8, M = 4, K = 2, 8 subcarriers) for tests that
    /// exercise logic rather than scale.
    pub fn default_small() -> ScenarioConfig {
        ScenarioConfig {
            m: 4,
            k_users: 2,
            q: 8,
            n_subcarriers: 8,
            n_ofdm_symbols: 4,
            trials: 10,
            ..ScenarioConfig::default()
        }
    }

    /// Carrier wavelength λ = c/f_c in metres.
    pub fn wavelength_m(&self) -> f64 {
        crate::sensing::SPEED_OF_LIGHT / self.f_c_hz
    }

    /// OFDM symbol duration in seconds: the explicit override when given,
    /// otherwise (1 + cp_fraction)/Δf.
    pub fn symbol_duration_s(&self) -> f64 {
        self.t_s_s
            .unwrap_or((1.0 + self.cp_fraction) / self.delta_f_hz)
    }

    /// SINR target ξ in linear scale.
    pub fn xi(&self) -> f64 {
        10f64.powf(self.xi_db / 10.0)
    }

    /// The three noise powers in linear scale.
    pub fn noise(&self) -> NoisePowers {
        NoisePowers::from_db(self.sigma2_db, self.sigma_v2_db, self.sigma_r2_db)
    }

    /// Target velocity in m/s.
    pub fn target_velocity_ms(&self) -> f64 {
        self.target_velocity_kmh / 3.6
    }

    /// Checks every field; collects all violations rather than stopping at
    /// the first.
    pub fn validate(&self) -> Result<()> {
        let mut violations = Vec::new();
        if self.m == 0 {
            violations.push("m must be at least 1".to_string());
        }
        if self.q == 0 {
            violations.push("q must be at least 1".to_string());
        }
        if self.require_square_q {
            let root = (self.q as f64).sqrt().round() as usize;
            if root * root != self.q {
                violations.push(format!("q = {} is not a perfect square", self.q));
            }
        }
        if self.n_subcarriers == 0 {
            violations.push("n_subcarriers must be at least 1".to_string());
        }
        if self.n_ofdm_symbols == 0 {
            violations.push("n_ofdm_symbols must be at least 1".to_string());
        }
        if !(self.delta_f_hz > 0.0) {
            violations.push(format!("delta_f_hz must be positive, got {}", self.delta_f_hz));
        }
        if !(self.f_c_hz > 0.0) {
            violations.push(format!("f_c_hz must be positive, got {}", self.f_c_hz));
        }
        if !(0.0..1.0).contains(&self.cp_fraction) {
            violations.push(format!(
                "cp_fraction must lie in [0, 1), got {}",
                self.cp_fraction
            ));
        }
        if let Some(ts) = self.t_s_s {
            if !(ts > 0.0) || !ts.is_finite() {
                violations.push(format!("t_s_s override must be positive, got {ts}"));
            }
        }
        for (name, law) in [
            ("bs_user_loss", &self.bs_user_loss),
            ("bs_surface_loss", &self.bs_surface_loss),
            ("surface_target_loss", &self.surface_target_loss),
            ("surface_user_loss", &self.surface_user_loss),
        ] {
            if let Err(e) = law.validate() {
                violations.push(format!("{name}: {e}"));
            }
        }
        for (name, db) in [
            ("sigma2_db", self.sigma2_db),
            ("sigma_v2_db", self.sigma_v2_db),
            ("sigma_r2_db", self.sigma_r2_db),
            ("xi_db", self.xi_db),
            ("link_snr_db", self.link_snr_db),
        ] {
            if !db.is_finite() {
                violations.push(format!("{name} must be finite, got {db}"));
            }
        }
        if !(self.alpha_max > 0.0) || !self.alpha_max.is_finite() {
            violations.push(format!(
                "alpha_max must be positive and finite, got {}",
                self.alpha_max
            ));
        }
        if !(self.p_bs > 0.0) || !self.p_bs.is_finite() {
            violations.push(format!("p_bs must be positive, got {}", self.p_bs));
        }
        if !(-std::f64::consts::FRAC_PI_2..=std::f64::consts::FRAC_PI_2)
            .contains(&self.theta_at_rad)
        {
            violations.push(format!(
                "theta_at_rad must lie in [−π/2, π/2], got {}",
                self.theta_at_rad
            ));
        }
        if !(self.target_range_m > 0.0) {
            violations.push(format!(
                "target_range_m must be positive, got {}",
                self.target_range_m
            ));
        }
        if !self.target_velocity_kmh.is_finite() {
            violations.push(format!(
                "target_velocity_kmh must be finite, got {}",
                self.target_velocity_kmh
            ));
        }
        if !(self.phase_jitter_rel >= 0.0) || !self.phase_jitter_rel.is_finite() {
            violations.push(format!(
                "phase_jitter_rel must be non-negative, got {}",
                self.phase_jitter_rel
            ));
        }
        if self.trials == 0 {
            violations.push("trials must be at least 1".to_string());
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(violations))
        }
    }

    /// Parses a config from TOML text and validates it.
    pub fn from_toml_str(text: &str) -> Result<ScenarioConfig> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads and validates a TOML config file.
    pub fn load(path: &Path) -> Result<ScenarioConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        ScenarioConfig::from_toml_str(&text)
    }
}
