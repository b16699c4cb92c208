//! Channel generation: large-scale path loss, Rayleigh small-scale fading,
//! and the line-of-sight steering-vector link from the surface to the radar
//! target.
//!
//! Geometry: a base station with M antennas talks to K single-antenna users
//! both directly and through a Q-element transmissive/reflective surface;
//! the radar target sits on the reflect side of the surface. Per subcarrier
//! `n` the links are
//!
//! * `G(n)` — BS → surface, Q×M, Rayleigh;
//! * `h_at(n)` — surface → target, Q, line of sight (scaled steering vector);
//! * `h_dk(n)` — BS → user k, M, Rayleigh;
//! * `t_k(n)` — surface → user k, Q, Rayleigh.
//!
//! All draws come from an explicit random stream, so realizations are pure
//! functions of `(config, stream state)`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c, CMat, CVec};
use crate::scenario::ScenarioConfig;
use crate::{Error, Result};

// ─── Large-scale fading ─────────────────────────────────────────────────────

/// Distance-dependent power-law attenuation: gain = 10^(c_db/10) · d^(−μ).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PathLossLaw {
    /// Reference gain in dB (applied at 1 m).
    pub c_db: f64,
    /// Path-loss exponent (dimensionless, ≥ 0).
    pub mu: f64,
    /// Link distance in meters (> 0).
    pub distance_m: f64,
}

impl PathLossLaw {
    /// Validates the law's invariants.
    pub fn validate(&self) -> Result<()> {
        if !(self.distance_m > 0.0) {
            return Err(Error::Domain(format!(
                "path-loss distance must be positive, got {} m",
                self.distance_m
            )));
        }
        if !(self.mu >= 0.0) {
            return Err(Error::Domain(format!(
                "path-loss exponent must be nonnegative, got {}",
                self.mu
            )));
        }
        if !self.c_db.is_finite() {
            return Err(Error::Domain(format!(
                "path-loss reference gain must be finite, got {} dB",
                self.c_db
            )));
        }
        Ok(())
    }
}

/// Linear power gain of a path-loss law: 10^(c_db/10) · d^(−μ).
pub fn path_loss(law: PathLossLaw) -> Result<f64> {
    law.validate()?;
    Ok(10f64.powf(law.c_db / 10.0) * law.distance_m.powf(-law.mu))
}

// ─── Line-of-sight link ─────────────────────────────────────────────────────

/// Uniform-linear-array steering vector: entry i = exp(−j·π·i·sin θ)
/// (half-wavelength element spacing), so entry 0 is exactly 1 and every
/// entry has unit modulus.
pub fn steering_vector(theta: f64, q: usize) -> Result<CVec> {
    if !(-std::f64::consts::FRAC_PI_2..=std::f64::consts::FRAC_PI_2).contains(&theta) {
        return Err(Error::Domain(format!(
            "steering angle {theta} rad outside [-π/2, π/2]"
        )));
    }
    if q == 0 {
        return Err(Error::Domain("steering vector needs q ≥ 1".into()));
    }
    let step = -std::f64::consts::PI * theta.sin();
    Ok(CVec::from_fn(q, |i, _| {
        Complex64::from_polar(1.0, step * i as f64)
    }))
}

/// Surface → target channel: √β_a times the steering vector toward the
/// target at angle θ. Every entry therefore has constant modulus √β_a.
pub fn surface_target_channel(theta: f64, beta_a: f64, q: usize) -> Result<CVec> {
    if !(beta_a > 0.0) {
        return Err(Error::Domain(format!(
            "target-link gain must be positive, got {beta_a}"
        )));
    }
    Ok(steering_vector(theta, q)?.scale(beta_a.sqrt()))
}

// ─── Small-scale fading ─────────────────────────────────────────────────────

/// One circularly-symmetric complex Gaussian draw with variance `beta`
/// (β/2 per real component).
#[inline]
fn complex_gaussian(beta: f64, rng: &mut impl Rng) -> Complex64 {
    let scale = (beta / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(scale * re, scale * im)
}

/// `rows × cols` matrix of i.i.d. CN(0, β) entries (Rayleigh-fading
/// amplitudes). Entries are drawn column by column in a fixed order, so a
/// given stream state always produces the same matrix.
pub fn sample_rayleigh(
    rows: usize,
    cols: usize,
    beta: f64,
    rng: &mut impl Rng,
) -> Result<CMat> {
    if !(beta > 0.0) {
        return Err(Error::Domain(format!(
            "fading variance must be positive, got {beta}"
        )));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for _col in 0..cols {
        for _row in 0..rows {
            data.push(complex_gaussian(beta, rng));
        }
    }
    Ok(CMat::from_vec(rows, cols, data))
}

fn sample_rayleigh_vec(len: usize, beta: f64, rng: &mut impl Rng) -> Result<CVec> {
    Ok(sample_rayleigh(len, 1, beta, rng)?.column(0).into_owned())
}

// ─── Per-subcarrier channel set ─────────────────────────────────────────────

/// All link realizations for one scenario, indexed by subcarrier.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    /// BS → surface, Q×M per subcarrier.
    pub g: Vec<CMat>,
    /// Surface → target, length Q per subcarrier (constant modulus √β_a).
    pub h_at: Vec<CVec>,
    /// BS → user direct links, `h_dk[n][k]` of length M.
    pub h_dk: Vec<Vec<CVec>>,
    /// Surface → user links, `t_k[n][k]` of length Q.
    pub t_k: Vec<Vec<CVec>>,
    /// Target angle seen from the surface, radians in [−π/2, π/2].
    pub theta_at: f64,
    /// Number of subcarriers (every container above has exactly this many
    /// entries).
    pub n_subcarriers: usize,
}

/// Borrowed view of one subcarrier's links — what the optimizers consume.
#[derive(Debug, Clone, Copy)]
pub struct SubcarrierChannels<'a> {
    /// BS → surface, Q×M.
    pub g: &'a CMat,
    /// Surface → target, length Q.
    pub h_at: &'a CVec,
    /// Direct BS → user links, K entries of length M.
    pub h_dk: &'a [CVec],
    /// Surface → user links, K entries of length Q.
    pub t_k: &'a [CVec],
}

impl ChannelSet {
    /// View of subcarrier `n`. Panics if `n` is out of range.
    pub fn at(&self, n: usize) -> SubcarrierChannels<'_> {
        SubcarrierChannels {
            g: &self.g[n],
            h_at: &self.h_at[n],
            h_dk: &self.h_dk[n],
            t_k: &self.t_k[n],
        }
    }

    /// Number of users (from the first subcarrier's direct links).
    pub fn n_users(&self) -> usize {
        self.h_dk.first().map_or(0, Vec::len)
    }
}

/// Draws one complete [`ChannelSet`] for the scenario.
///
/// Per subcarrier the draw order is fixed (G, then each user's direct link,
/// then each user's surface link), making the result a pure function of
/// `(cfg, stream state)`. In flat-fading mode a single realization is drawn
/// and shared by every subcarrier. `h_at` is identical across subcarriers
/// by default; `cfg.h_at_phase_ramp_rad` applies an `exp(j·n·ramp)` rotation
/// per subcarrier for frequency-domain echo experiments.
pub fn realize_channels(cfg: &ScenarioConfig, rng: &mut impl Rng) -> Result<ChannelSet> {
    cfg.validate()?;
    let beta_dk = path_loss(cfg.bs_user_loss)?;
    let beta_g = path_loss(cfg.bs_surface_loss)?;
    let beta_a = path_loss(cfg.surface_target_loss)?;
    let eta = path_loss(cfg.surface_user_loss)?;

    let h_at_base = surface_target_channel(cfg.theta_at_rad, beta_a, cfg.q)?;
    let draws = if cfg.flat_fading { 1 } else { cfg.n_subcarriers };

    let mut g = Vec::with_capacity(cfg.n_subcarriers);
    let mut h_dk = Vec::with_capacity(cfg.n_subcarriers);
    let mut t_k = Vec::with_capacity(cfg.n_subcarriers);
    for _ in 0..draws {
        g.push(sample_rayleigh(cfg.q, cfg.m, beta_g, rng)?);
        let mut direct = Vec::with_capacity(cfg.k_users);
        let mut via_surface = Vec::with_capacity(cfg.k_users);
        for _ in 0..cfg.k_users {
            direct.push(sample_rayleigh_vec(cfg.m, beta_dk, rng)?);
        }
        for _ in 0..cfg.k_users {
            via_surface.push(sample_rayleigh_vec(cfg.q, eta, rng)?);
        }
        h_dk.push(direct);
        t_k.push(via_surface);
    }
    while g.len() < cfg.n_subcarriers {
        g.push(g[0].clone());
        h_dk.push(h_dk[0].clone());
        t_k.push(t_k[0].clone());
    }

    let h_at = (0..cfg.n_subcarriers)
        .map(|n| &h_at_base * Complex64::from_polar(1.0, cfg.h_at_phase_ramp_rad * n as f64))
        .collect();

    Ok(ChannelSet {
        g,
        h_at,
        h_dk,
        t_k,
        theta_at: cfg.theta_at_rad,
        n_subcarriers: cfg.n_subcarriers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{standalone_stream, Purpose};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    // High-precision reference values for the path-loss law, evaluated with
    // 30-digit arithmetic and rounded to f64.
    const LOSS_28DB_50M_367: f64 = 3.670_963_649_657_204_5e-4;
    const LOSS_26DB_8M_22: f64 = 4.103_949_694_380_886;

    #[test]
    fn path_loss_identity_at_unit_distance_zero_db() {
        let law = PathLossLaw {
            c_db: 0.0,
            mu: 3.67,
            distance_m: 1.0,
        };
        assert_eq!(path_loss(law).unwrap(), 1.0);
    }

    #[test]
    fn path_loss_matches_high_precision_references() {
        let v1 = path_loss(PathLossLaw {
            c_db: 28.0,
            mu: 3.67,
            distance_m: 50.0,
        })
        .unwrap();
        assert_relative_eq!(v1, LOSS_28DB_50M_367, max_relative = 1e-14);

        let v2 = path_loss(PathLossLaw {
            c_db: 26.0,
            mu: 2.2,
            distance_m: 8.0,
        })
        .unwrap();
        assert_relative_eq!(v2, LOSS_26DB_8M_22, max_relative = 1e-14);
    }

    #[test]
    fn path_loss_rejects_nonpositive_distance() {
        let law = PathLossLaw {
            c_db: 0.0,
            mu: 2.0,
            distance_m: 0.0,
        };
        assert!(matches!(path_loss(law), Err(Error::Domain(_))));
    }

    #[test]
    fn steering_vector_known_angles() {
        let broadside = steering_vector(0.0, 4).unwrap();
        for entry in broadside.iter() {
            assert_relative_eq!(entry.re, 1.0, max_relative = 1e-15);
            assert_relative_eq!(entry.im, 0.0, epsilon = 1e-15);
        }

        let endfire = steering_vector(std::f64::consts::FRAC_PI_2, 2).unwrap();
        assert_relative_eq!(endfire[0].re, 1.0, max_relative = 1e-15);
        assert_relative_eq!(endfire[1].re, -1.0, max_relative = 1e-12);
        assert!(endfire[1].im.abs() < 1e-12);

        // sin(π/6) = 1/2 → entries [1, e^{−jπ/2}, e^{−jπ}] = [1, −j, −1].
        let oblique = steering_vector(std::f64::consts::FRAC_PI_6, 3).unwrap();
        assert!((oblique[0] - c(1.0, 0.0)).norm() < 1e-12);
        assert!((oblique[1] - c(0.0, -1.0)).norm() < 1e-12);
        assert!((oblique[2] - c(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn steering_vector_rejects_out_of_range_angle() {
        assert!(steering_vector(1.8, 4).is_err());
        assert!(steering_vector(0.0, 0).is_err());
    }

    #[test]
    fn surface_target_channel_scales_by_sqrt_gain() {
        let v = surface_target_channel(0.0, 4.0, 2).unwrap();
        assert!((v[0] - c(2.0, 0.0)).norm() < 1e-15);
        assert!((v[1] - c(2.0, 0.0)).norm() < 1e-15);
        assert!(surface_target_channel(0.0, 0.0, 2).is_err());

        // Composing with the path-loss oracle keeps constant modulus √β_a.
        let beta = path_loss(PathLossLaw {
            c_db: 28.0,
            mu: 3.67,
            distance_m: 50.0,
        })
        .unwrap();
        let v = surface_target_channel(std::f64::consts::FRAC_PI_6, beta, 8).unwrap();
        for entry in v.iter() {
            assert_relative_eq!(entry.norm(), beta.sqrt(), max_relative = 1e-13);
        }
    }

    #[test]
    fn rayleigh_moments_match_cn_law() {
        // Law of large numbers: over 10⁶ draws the empirical per-entry power
        // must be within 1% of β, and each real component's variance within
        // 1% of β/2 (relative).
        let mut rng = standalone_stream(7, 0, Purpose::Oracle);
        let beta = 1.0;
        let n = 1_000_000usize;
        let m = sample_rayleigh(n, 1, beta, &mut rng).unwrap();
        let mean_power: f64 = m.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
        assert!(
            (mean_power - beta).abs() < 0.01 * beta,
            "mean |entry|² = {mean_power}"
        );
        let var_re: f64 = m.iter().map(|z| z.re * z.re).sum::<f64>() / n as f64;
        let var_im: f64 = m.iter().map(|z| z.im * z.im).sum::<f64>() / n as f64;
        assert!((var_re - beta / 2.0).abs() < 0.01 * beta / 2.0);
        assert!((var_im - beta / 2.0).abs() < 0.01 * beta / 2.0);
    }

    #[test]
    fn rayleigh_is_deterministic_for_equal_stream_state() {
        let a = sample_rayleigh(5, 3, 0.7, &mut standalone_stream(3, 1, Purpose::Channels)).unwrap();
        let b = sample_rayleigh(5, 3, 0.7, &mut standalone_stream(3, 1, Purpose::Channels)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn realize_channels_container_shapes_follow_config() {
        let mut cfg = ScenarioConfig::default();
        cfg.q = 100;
        cfg.m = 32;
        cfg.n_subcarriers = 64;
        let mut rng = standalone_stream(1, 0, Purpose::Channels);
        let set = realize_channels(&cfg, &mut rng).unwrap();
        assert_eq!(set.g.len(), 64);
        assert_eq!(set.h_at.len(), 64);
        assert_eq!(set.h_dk.len(), 64);
        assert_eq!(set.t_k.len(), 64);
        assert_eq!(set.g[0].shape(), (100, 32));
        assert_eq!(set.h_dk[0].len(), cfg.k_users);
        assert_eq!(set.h_dk[0][0].len(), 32);
        assert_eq!(set.t_k[0][0].len(), 100);
    }

    #[test]
    fn realize_channels_broadside_target_gives_constant_h_at() {
        let mut cfg = ScenarioConfig::default();
        cfg.theta_at_rad = 0.0;
        cfg.q = 16;
        let mut rng = standalone_stream(2, 0, Purpose::Channels);
        let set = realize_channels(&cfg, &mut rng).unwrap();
        let first = set.h_at[0][0];
        for v in set.h_at[0].iter() {
            assert!((v - first).norm() < 1e-14);
        }
    }

    #[test]
    fn realize_channels_is_bit_deterministic() {
        let cfg = ScenarioConfig::default_small();
        let a = realize_channels(&cfg, &mut standalone_stream(9, 4, Purpose::Channels)).unwrap();
        let b = realize_channels(&cfg, &mut standalone_stream(9, 4, Purpose::Channels)).unwrap();
        assert_eq!(a.g, b.g);
        assert_eq!(a.h_dk, b.h_dk);
        assert_eq!(a.t_k, b.t_k);
        assert_eq!(a.h_at, b.h_at);
    }

    #[test]
    fn flat_fading_reuses_one_realization() {
        let mut cfg = ScenarioConfig::default_small();
        cfg.flat_fading = true;
        cfg.n_subcarriers = 8;
        let set =
            realize_channels(&cfg, &mut standalone_stream(5, 0, Purpose::Channels)).unwrap();
        assert_eq!(set.g[0], set.g[7]);
        assert_eq!(set.h_dk[0], set.h_dk[7]);
    }

    proptest! {
        #[test]
        fn steering_entries_have_unit_modulus(
            theta in -std::f64::consts::FRAC_PI_2..std::f64::consts::FRAC_PI_2,
            q in 1usize..40,
        ) {
            let v = steering_vector(theta, q).unwrap();
            for entry in v.iter() {
                prop_assert!((entry.norm() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn path_loss_monotone_in_distance_and_gain(
            d1 in 1.0f64..500.0,
            factor in 1.01f64..10.0,
            c_db in -40.0f64..40.0,
            mu in 0.1f64..5.0,
        ) {
            let near = path_loss(PathLossLaw { c_db, mu, distance_m: d1 }).unwrap();
            let far = path_loss(PathLossLaw { c_db, mu, distance_m: d1 * factor }).unwrap();
            prop_assert!(far < near, "loss must decrease with distance");
            let boosted = path_loss(PathLossLaw { c_db: c_db + 1.0, mu, distance_m: d1 }).unwrap();
            prop_assert!(boosted > near, "gain must increase with c_db");
        }
    }
}
