//! Transmit signal model, composite radar echo channels, and the two scalar
//! link metrics: radar SNR and per-user downlink SINR.
//!
//! The dual-function base station sends x = W_r s_r + W_c s_c, where W_r is
//! an M×M radar precoder and W_c an M×K communication precoder; with
//! unit-variance uncorrelated streams the transmit covariance is
//! R = W Wᴴ for the stacked W = [W_r, W_c].
//!
//! The radar echo path is BS → surface (G) → target (h_at) → surface → BS.
//! With Ψ_r = diag(𝛟_r) the reflect-side coefficient matrix and
//! Ḡ = Gᴴ·diag(h_at), the round trip collapses to the rank-one Hermitian
//! channel
//!
//! ```text
//! a   = Ḡ 𝛟_r = Gᴴ Ψ_r h_at            (one-way cascade, length M)
//! H_T = a aᴴ                            (echo channel, M×M, rank ≤ 1)
//! ```
//!
//! Active elements also inject amplified thermal ("dynamic") noise twice:
//! once on the outbound pass, which then bounces off the target
//! (H_v1 = a (Ψ_r h_at)ᴴ), and once on the return pass (H_v2 = Gᴴ Ψ_r).
//! These composites obey the exact structural identity H_T = H_v1 · G.
//!
//! Radar SNR is evaluated in covariance form; the passive surface baseline
//! injects no dynamic noise, so both σ_v² terms drop from its denominator.

use crate::linalg::{CMat, CVec};
use crate::{Error, Result};

// ─── Transmit side ──────────────────────────────────────────────────────────

/// Radar and communication precoders.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoders {
    /// Radar precoder W_r, M×M (columns are the radar streams).
    pub w_r: CMat,
    /// Communication precoder W_c, M×K (column k serves user k).
    pub w_c: CMat,
}

impl Precoders {
    /// Checks internal dimension consistency (W_r square, same row count as
    /// W_c).
    pub fn validate(&self) -> Result<()> {
        if self.w_r.nrows() != self.w_r.ncols() {
            return Err(Error::Dimension(format!(
                "radar precoder must be square, got {}×{}",
                self.w_r.nrows(),
                self.w_r.ncols()
            )));
        }
        if self.w_r.nrows() != self.w_c.nrows() {
            return Err(Error::Dimension(format!(
                "precoders disagree on antenna count: {} vs {}",
                self.w_r.nrows(),
                self.w_c.nrows()
            )));
        }
        Ok(())
    }

    /// Antenna count M.
    pub fn m(&self) -> usize {
        self.w_r.nrows()
    }

    /// User count K.
    pub fn k_users(&self) -> usize {
        self.w_c.ncols()
    }

    /// Stacked precoder W = [W_r, W_c], M×(M+K).
    pub fn stacked(&self) -> CMat {
        let m = self.m();
        let total = m + self.k_users();
        let mut w = CMat::zeros(m, total);
        w.view_mut((0, 0), (m, m)).copy_from(&self.w_r);
        w.view_mut((0, m), (m, self.k_users())).copy_from(&self.w_c);
        w
    }

    /// Total transmit power tr(W Wᴴ) = ‖W‖_F².
    pub fn total_power(&self) -> f64 {
        self.w_r.norm_squared() + self.w_c.norm_squared()
    }

    /// All-zero precoders for M antennas and K users.
    pub fn zeros(m: usize, k_users: usize) -> Precoders {
        Precoders {
            w_r: CMat::zeros(m, m),
            w_c: CMat::zeros(m, k_users),
        }
    }
}

/// Transmit covariance R = W_r W_rᴴ + Σ_k w_{c,k} w_{c,k}ᴴ (Hermitian PSD).
pub fn transmit_covariance(p: &Precoders) -> Result<CMat> {
    p.validate()?;
    Ok(&p.w_r * p.w_r.adjoint() + &p.w_c * p.w_c.adjoint())
}

// ─── Noise powers ───────────────────────────────────────────────────────────

/// The three noise powers of the model, in linear units.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NoisePowers {
    /// User receiver AWGN power σ².
    pub sigma2: f64,
    /// Surface dynamic-noise power σ_v² (injected only by active elements).
    pub sigma_v2: f64,
    /// Radar receiver noise power σ_r².
    pub sigma_r2: f64,
}

impl NoisePowers {
    /// Builds from dB values (power = 10^(dB/10)).
    pub fn from_db(sigma2_db: f64, sigma_v2_db: f64, sigma_r2_db: f64) -> NoisePowers {
        NoisePowers {
            sigma2: 10f64.powf(sigma2_db / 10.0),
            sigma_v2: 10f64.powf(sigma_v2_db / 10.0),
            sigma_r2: 10f64.powf(sigma_r2_db / 10.0),
        }
    }

    /// All powers strictly positive.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("σ²", self.sigma2),
            ("σ_v²", self.sigma_v2),
            ("σ_r²", self.sigma_r2),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!(
                    "noise power {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Dynamic-noise power as seen by the metrics: σ_v² for an active
    /// surface, exactly 0 for the passive baseline (whose elements inject
    /// no amplified noise).
    pub fn dynamic(&self, surface_active: bool) -> f64 {
        if surface_active {
            self.sigma_v2
        } else {
            0.0
        }
    }
}

// ─── Composite radar channels ───────────────────────────────────────────────

/// The three echo-path composites built from (G, Ψ_r, h_at).
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeRadarChannels {
    /// Signal round trip H_T = a aᴴ, M×M, Hermitian PSD of rank ≤ 1.
    pub h_t: CMat,
    /// Outbound dynamic-noise round trip H_v1 = a (Ψ_r h_at)ᴴ, M×Q.
    pub h_v1: CMat,
    /// Return-pass dynamic noise H_v2 = Gᴴ Ψ_r, M×Q.
    pub h_v2: CMat,
    /// One-way cascade a = Gᴴ Ψ_r h_at (kept because every consumer needs
    /// it and H_T determines it only up to phase).
    pub cascade: CVec,
}

/// Builds the composite echo channels for one subcarrier.
///
/// `phi_r` is the reflect-side coefficient vector, i.e. the diagonal of Ψ_r.
/// The exact structural identity H_T = H_v1 · G holds by construction.
pub fn composite_radar_channels(
    g: &CMat,
    phi_r: &CVec,
    h_at: &CVec,
) -> Result<CompositeRadarChannels> {
    let q = g.nrows();
    if phi_r.len() != q || h_at.len() != q {
        return Err(Error::Dimension(format!(
            "G is {q}×{}, but |𝛟_r| = {} and |h_at| = {}",
            g.ncols(),
            phi_r.len(),
            h_at.len()
        )));
    }
    // Ψ_r h_at: elementwise product of the diagonal with the target link.
    let psi_h = CVec::from_fn(q, |i, _| phi_r[i] * h_at[i]);
    let g_h = g.adjoint();
    let cascade = &g_h * &psi_h; // a = Gᴴ Ψ_r h_at
    let h_t = &cascade * cascade.adjoint();
    let h_v1 = &cascade * psi_h.adjoint();
    // Gᴴ Ψ_r scales column q of Gᴴ by 𝛟_r[q].
    let mut h_v2 = g_h;
    for (qi, mut col) in h_v2.column_iter_mut().enumerate() {
        col *= phi_r[qi];
    }
    Ok(CompositeRadarChannels {
        h_t,
        h_v1,
        h_v2,
        cascade,
    })
}

/// Radar SNR in covariance form:
///
/// ```text
///        tr(H_T W Wᴴ H_Tᴴ)
/// ─────────────────────────────────────────────
/// σ_v²‖H_v1‖_F² + σ_v²‖H_v2‖_F² + σ_r²·M
/// ```
///
/// For a passive surface both σ_v² terms vanish. The denominator is always
/// strictly positive because σ_r² > 0.
pub fn radar_snr(
    channels: &CompositeRadarChannels,
    p: &Precoders,
    noise: &NoisePowers,
    surface_active: bool,
) -> Result<f64> {
    p.validate()?;
    noise.validate()?;
    let m = channels.h_t.nrows();
    if p.m() != m {
        return Err(Error::Dimension(format!(
            "precoders have {} antennas, channels have {m}",
            p.m()
        )));
    }
    let w = p.stacked();
    let numerator = (&channels.h_t * &w).norm_squared();
    let dyn_noise = noise.dynamic(surface_active);
    let denominator = dyn_noise * channels.h_v1.norm_squared()
        + dyn_noise * channels.h_v2.norm_squared()
        + noise.sigma_r2 * m as f64;
    Ok(numerator / denominator)
}

// ─── User side ──────────────────────────────────────────────────────────────

/// Effective downlink channel of user k: u_k = h_dk + Gᴴ Ψ_t t_k ∈ Cᴹ
/// (direct path plus the transmit-side surface cascade). `phi_t` is the
/// diagonal of Ψ_t.
pub fn effective_user_channel(
    h_dk: &CVec,
    g: &CMat,
    phi_t: &CVec,
    t_k: &CVec,
) -> Result<CVec> {
    let q = g.nrows();
    if phi_t.len() != q || t_k.len() != q {
        return Err(Error::Dimension(format!(
            "G is {q}×{}, but |𝛟_t| = {} and |t_k| = {}",
            g.ncols(),
            phi_t.len(),
            t_k.len()
        )));
    }
    if h_dk.len() != g.ncols() {
        return Err(Error::Dimension(format!(
            "direct link has {} entries, expected {}",
            h_dk.len(),
            g.ncols()
        )));
    }
    let cascaded = CVec::from_fn(q, |i, _| phi_t[i] * t_k[i]);
    Ok(h_dk + g.adjoint() * cascaded)
}

/// Downlink SINR of user k:
///
/// ```text
///                  |u_kᴴ w_{c,k}|²
/// ───────────────────────────────────────────────────────────────
/// ‖u_kᴴ W_r‖² + Σ_{i≠k} |u_kᴴ w_{c,i}|² + σ_v²‖Ψ_tᴴ t_k‖² + σ²
/// ```
///
/// The σ_v² term is the transmit-side dynamic noise forwarded to the user;
/// it vanishes for a passive surface.
pub fn user_sinr(
    u_k: &CVec,
    p: &Precoders,
    phi_t: &CVec,
    t_k: &CVec,
    noise: &NoisePowers,
    k: usize,
    surface_active: bool,
) -> Result<f64> {
    p.validate()?;
    noise.validate()?;
    if k >= p.k_users() {
        return Err(Error::Dimension(format!(
            "user index {k} out of range for K = {}",
            p.k_users()
        )));
    }
    if u_k.len() != p.m() {
        return Err(Error::Dimension(format!(
            "effective channel has {} entries, expected {}",
            u_k.len(),
            p.m()
        )));
    }
    if phi_t.len() != t_k.len() {
        return Err(Error::Dimension(format!(
            "|𝛟_t| = {} but |t_k| = {}",
            phi_t.len(),
            t_k.len()
        )));
    }
    let desired = u_k.dotc(&p.w_c.column(k).into_owned()).norm_sqr();
    let radar_leak = (u_k.adjoint() * &p.w_r).norm_squared();
    let mut interference = 0.0;
    for i in 0..p.k_users() {
        if i != k {
            interference += u_k.dotc(&p.w_c.column(i).into_owned()).norm_sqr();
        }
    }
    let forwarded: f64 = phi_t
        .iter()
        .zip(t_k.iter())
        .map(|(psi, t)| psi.norm_sqr() * t.norm_sqr())
        .sum();
    let denom =
        radar_leak + interference + noise.dynamic(surface_active) * forwarded + noise.sigma2;
    Ok(desired / denom)
}

/// Dynamic-noise power forwarded to user k through the transmit side:
/// σ_v²·t_kᴴ Ψ_t Ψ_tᴴ t_k = σ_v²·Σ_q |𝛟_t,q|²·|t_k,q|² (0 when passive).
pub fn forwarded_dynamic_noise(
    phi_t: &CVec,
    t_k: &CVec,
    noise: &NoisePowers,
    surface_active: bool,
) -> f64 {
    let sum: f64 = phi_t
        .iter()
        .zip(t_k.iter())
        .map(|(psi, t)| psi.norm_sqr() * t.norm_sqr())
        .sum();
    noise.dynamic(surface_active) * sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::sample_rayleigh;
    use crate::linalg::c;
    use crate::rng::{standalone_stream, Purpose};
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn test_noise() -> NoisePowers {
        NoisePowers::from_db(-40.0, -40.0, -58.0)
    }

    fn random_setup(
        q: usize,
        m: usize,
        k: usize,
        seed: u64,
    ) -> (CMat, CVec, CVec, Precoders) {
        let mut rng = standalone_stream(seed, 0, Purpose::Oracle);
        let g = sample_rayleigh(q, m, 1.0, &mut rng).unwrap();
        let phi_r = sample_rayleigh(q, 1, 1.0, &mut rng).unwrap().column(0).into_owned();
        let h_at = sample_rayleigh(q, 1, 1.0, &mut rng).unwrap().column(0).into_owned();
        let p = Precoders {
            w_r: sample_rayleigh(m, m, 1.0, &mut rng).unwrap(),
            w_c: sample_rayleigh(m, k, 1.0, &mut rng).unwrap(),
        };
        (g, phi_r, h_at, p)
    }

    fn unit_vector(m: usize, idx: usize) -> CVec {
        let mut v = CVec::zeros(m);
        v[idx] = c(1.0, 0.0);
        v
    }

    // ─── transmit_covariance ────────────────────────────────────────────

    #[test]
    fn covariance_of_single_unit_stream_is_elementary_projector() {
        let p = Precoders {
            w_r: CMat::zeros(3, 3),
            w_c: CMat::from_columns(&[unit_vector(3, 0)]),
        };
        let r = transmit_covariance(&p).unwrap();
        let mut expected = CMat::zeros(3, 3);
        expected[(0, 0)] = c(1.0, 0.0);
        assert!((r - expected).norm() < 1e-15);
    }

    #[test]
    fn covariance_trace_equals_squared_frobenius_norm() {
        let (.., p) = random_setup(4, 4, 2, 1);
        let r = transmit_covariance(&p).unwrap();
        assert_relative_eq!(
            r.trace().re,
            p.stacked().norm_squared(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn covariance_matches_outer_product_summation_oracle() {
        let (.., p) = random_setup(4, 4, 3, 2);
        let r = transmit_covariance(&p).unwrap();
        // Brute-force sum over all stacked columns.
        let w = p.stacked();
        let mut oracle = CMat::zeros(4, 4);
        for col in w.column_iter() {
            let ci = col.into_owned();
            oracle += &ci * ci.adjoint();
        }
        assert!((&r - &oracle).norm() <= 1e-12 * oracle.norm());
        // Hermitian PSD: smallest eigenvalue above −1e−10.
        let min_eig = r
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::MAX, f64::min);
        assert!(min_eig >= -1e-10);
    }

    // ─── composite_radar_channels ───────────────────────────────────────

    #[test]
    fn zero_surface_zeroes_all_composites() {
        let (g, _, h_at, _) = random_setup(6, 3, 2, 3);
        let phi_r = CVec::zeros(6);
        let cc = composite_radar_channels(&g, &phi_r, &h_at).unwrap();
        assert_eq!(cc.h_t.norm(), 0.0);
        assert_eq!(cc.h_v1.norm(), 0.0);
        assert_eq!(cc.h_v2.norm(), 0.0);
    }

    #[test]
    fn echo_channel_factors_through_the_forward_link() {
        // Structural identity H_T = H_v1 · G, exact up to float rounding.
        for seed in 0..20 {
            let (g, phi_r, h_at, _) = random_setup(6, 3, 2, 100 + seed);
            let cc = composite_radar_channels(&g, &phi_r, &h_at).unwrap();
            let product = &cc.h_v1 * &g;
            assert!(
                (&product - &cc.h_t).norm() <= 1e-12 * cc.h_t.norm().max(1.0),
                "seed {seed}"
            );
        }
    }

    #[test]
    fn echo_channel_is_rank_one_hermitian_psd() {
        let (g, phi_r, h_at, _) = random_setup(8, 4, 2, 4);
        let cc = composite_radar_channels(&g, &phi_r, &h_at).unwrap();
        assert!((&cc.h_t - cc.h_t.adjoint()).norm() < 1e-12 * cc.h_t.norm());
        let svals = cc.h_t.clone().svd(false, false).singular_values;
        assert!(svals[0] > 0.0);
        for s in svals.iter().skip(1) {
            assert!(*s <= 1e-12 * svals[0], "rank must be ≤ 1");
        }
        // And it is the outer product of the cascade with itself.
        let outer = &cc.cascade * cc.cascade.adjoint();
        assert!((&outer - &cc.h_t).norm() < 1e-13 * cc.h_t.norm());
    }

    // ─── radar_snr ──────────────────────────────────────────────────────

    #[test]
    fn radar_snr_zero_for_zero_precoders_or_zero_surface() {
        let (g, phi_r, h_at, p) = random_setup(6, 3, 2, 5);
        let cc = composite_radar_channels(&g, &phi_r, &h_at).unwrap();
        let zeros = Precoders::zeros(3, 2);
        assert_eq!(radar_snr(&cc, &zeros, &test_noise(), true).unwrap(), 0.0);

        let cc0 = composite_radar_channels(&g, &CVec::zeros(6), &h_at).unwrap();
        assert_eq!(radar_snr(&cc0, &p, &test_noise(), true).unwrap(), 0.0);
    }

    #[test]
    fn radar_snr_matches_empirical_power_ratio() {
        // Simulate the echo equation directly: y = H_T W s + H_v1 v₁ +
        // H_v2 v₂ + n_r over 10⁵ draws and compare measured signal and
        // noise powers with the closed form. Tolerance 2% (Monte Carlo).
        let (g, phi_r, h_at, p) = random_setup(8, 4, 2, 6);
        let noise = test_noise();
        let cc = composite_radar_channels(&g, &phi_r, &h_at).unwrap();
        let w = p.stacked();
        let m = 4;
        let streams = w.ncols();

        let mut rng = standalone_stream(60, 0, Purpose::Oracle);
        let cn_vec = |len: usize, var: f64, rng: &mut rand_chacha::ChaCha12Rng| {
            let scale = (var / 2.0).sqrt();
            CVec::from_fn(len, |_, _| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                c(scale * re, scale * im)
            })
        };

        let trials = 100_000;
        let mut signal_power = 0.0;
        let mut noise_power = 0.0;
        for _ in 0..trials {
            let s = cn_vec(streams, 1.0, &mut rng);
            let x = &w * s;
            let v1 = cn_vec(8, noise.sigma_v2, &mut rng);
            let v2 = cn_vec(8, noise.sigma_v2, &mut rng);
            let nr = cn_vec(m, noise.sigma_r2, &mut rng);
            signal_power += (&cc.h_t * x).norm_squared();
            noise_power += (&cc.h_v1 * v1 + &cc.h_v2 * v2 + nr).norm_squared();
        }
        let measured = signal_power / noise_power;
        let formula = radar_snr(&cc, &p, &noise, true).unwrap();
        assert!(
            (measured - formula).abs() <= 0.02 * formula,
            "measured {measured}, formula {formula}"
        );
    }

    #[test]
    fn radar_snr_passive_mode_drops_dynamic_noise() {
        let (g, phi_r, h_at, p) = random_setup(6, 3, 2, 7);
        let cc = composite_radar_channels(&g, &phi_r, &h_at).unwrap();
        let noise = test_noise();
        let active = radar_snr(&cc, &p, &noise, true).unwrap();
        let passive = radar_snr(&cc, &p, &noise, false).unwrap();
        // Same numerator, strictly smaller denominator without σ_v² terms.
        let expected_passive =
            (&cc.h_t * p.stacked()).norm_squared() / (noise.sigma_r2 * 3.0);
        assert_relative_eq!(passive, expected_passive, max_relative = 1e-12);
        assert!(passive > active);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn radar_snr_invariant_to_unitary_stream_rotation(seed in 0u64..1000) {
            let (g, phi_r, h_at, p) = random_setup(6, 3, 2, seed);
            let cc = composite_radar_channels(&g, &phi_r, &h_at).unwrap();
            let snr = radar_snr(&cc, &p, &test_noise(), true).unwrap();

            // W → W·U with U unitary leaves W Wᴴ unchanged.
            let mut rng = standalone_stream(seed, 1, Purpose::Oracle);
            let z = sample_rayleigh(5, 5, 1.0, &mut rng).unwrap();
            let u = z.qr().q();
            let w = p.stacked() * u;
            let rotated = Precoders {
                w_r: w.view((0, 0), (3, 3)).into_owned(),
                w_c: w.view((0, 3), (3, 2)).into_owned(),
            };
            let snr_rot = radar_snr(&cc, &rotated, &test_noise(), true).unwrap();
            prop_assert!((snr - snr_rot).abs() <= 1e-9 * snr.max(1e-30));
        }

        #[test]
        fn radar_snr_scales_quadratically_with_precoder_gain(
            seed in 0u64..1000,
            scale in 0.1f64..10.0,
        ) {
            let (g, phi_r, h_at, p) = random_setup(6, 3, 2, seed);
            let cc = composite_radar_channels(&g, &phi_r, &h_at).unwrap();
            let noise = test_noise();
            let base = radar_snr(&cc, &p, &noise, true).unwrap();
            let scaled = Precoders {
                w_r: p.w_r.scale(scale),
                w_c: p.w_c.scale(scale),
            };
            let snr = radar_snr(&cc, &scaled, &noise, true).unwrap();
            prop_assert!((snr - scale * scale * base).abs() <= 1e-9 * snr.max(1e-30));
        }
    }

    // ─── effective_user_channel ─────────────────────────────────────────

    #[test]
    fn user_channel_reduces_to_direct_link_without_surface() {
        let (g, _, _, _) = random_setup(6, 3, 2, 8);
        let mut rng = standalone_stream(8, 1, Purpose::Oracle);
        let h_dk = sample_rayleigh(3, 1, 1.0, &mut rng).unwrap().column(0).into_owned();
        let t_k = sample_rayleigh(6, 1, 1.0, &mut rng).unwrap().column(0).into_owned();
        let u = effective_user_channel(&h_dk, &g, &CVec::zeros(6), &t_k).unwrap();
        assert!((&u - &h_dk).norm() < 1e-15);
    }

    #[test]
    fn user_channel_cascade_matches_column_oracle() {
        // h_dk = 0 and t_k = e₁ picks out column 1 of Gᴴ weighted by 𝛟_t[0].
        let (g, _, _, _) = random_setup(6, 3, 2, 9);
        let mut rng = standalone_stream(9, 1, Purpose::Oracle);
        let phi_t = sample_rayleigh(6, 1, 1.0, &mut rng).unwrap().column(0).into_owned();
        let u =
            effective_user_channel(&CVec::zeros(3), &g, &phi_t, &unit_vector(6, 0)).unwrap();
        let oracle = g.adjoint().column(0).into_owned() * phi_t[0];
        assert!((&u - &oracle).norm() <= 1e-14 * oracle.norm());
    }

    #[test]
    fn user_channel_linear_in_surface_link() {
        let (g, _, _, _) = random_setup(6, 3, 2, 10);
        let mut rng = standalone_stream(10, 1, Purpose::Oracle);
        let h_dk = sample_rayleigh(3, 1, 1.0, &mut rng).unwrap().column(0).into_owned();
        let phi_t = sample_rayleigh(6, 1, 1.0, &mut rng).unwrap().column(0).into_owned();
        let t1 = sample_rayleigh(6, 1, 1.0, &mut rng).unwrap().column(0).into_owned();
        let t2 = sample_rayleigh(6, 1, 1.0, &mut rng).unwrap().column(0).into_owned();
        let sum = effective_user_channel(&h_dk, &g, &phi_t, &(&t1 + &t2)).unwrap();
        let u1 = effective_user_channel(&h_dk, &g, &phi_t, &t1).unwrap();
        let u2 = effective_user_channel(&h_dk, &g, &phi_t, &t2).unwrap();
        // u(t₁+t₂) − u(t₁) − u(t₂) + h_dk = 0 (the direct part enters once).
        let residual = &sum - &u1 - &u2 + &h_dk;
        assert!(residual.norm() <= 1e-12 * sum.norm());
    }

    // ─── user_sinr ──────────────────────────────────────────────────────

    #[test]
    fn sinr_zero_when_precoder_orthogonal_to_channel() {
        let u = unit_vector(3, 0);
        let p = Precoders {
            w_r: CMat::zeros(3, 3),
            w_c: CMat::from_columns(&[unit_vector(3, 1)]),
        };
        let sinr = user_sinr(
            &u,
            &p,
            &CVec::zeros(4),
            &CVec::zeros(4),
            &test_noise(),
            0,
            true,
        )
        .unwrap();
        assert_eq!(sinr, 0.0);
    }

    #[test]
    fn sinr_interference_free_reduction() {
        // Single user, no radar precoder, no surface: SINR = |uᴴw|²/σ².
        let mut rng = standalone_stream(11, 0, Purpose::Oracle);
        let u = sample_rayleigh(3, 1, 1.0, &mut rng).unwrap().column(0).into_owned();
        let w = sample_rayleigh(3, 1, 1.0, &mut rng).unwrap().column(0).into_owned();
        let p = Precoders {
            w_r: CMat::zeros(3, 3),
            w_c: CMat::from_columns(&[w.clone()]),
        };
        let noise = test_noise();
        let sinr = user_sinr(&u, &p, &CVec::zeros(4), &CVec::zeros(4), &noise, 0, true).unwrap();
        assert_relative_eq!(
            sinr,
            u.dotc(&w).norm_sqr() / noise.sigma2,
            max_relative = 1e-12
        );
    }

    #[test]
    fn sinr_matches_term_by_term_oracle() {
        let q = 6;
        let m = 4;
        let k_users = 3;
        for seed in 0..20u64 {
            let (_, _, _, p) = random_setup(q, m, k_users, 200 + seed);
            let mut rng = standalone_stream(seed, 2, Purpose::Oracle);
            let phi_t = sample_rayleigh(q, 1, 1.0, &mut rng).unwrap().column(0).into_owned();
            let t_k = sample_rayleigh(q, 1, 1.0, &mut rng).unwrap().column(0).into_owned();
            let u = sample_rayleigh(m, 1, 1.0, &mut rng).unwrap().column(0).into_owned();
            let noise = test_noise();
            let k = (seed % k_users as u64) as usize;

            let sinr = user_sinr(&u, &p, &phi_t, &t_k, &noise, k, true).unwrap();

            // Oracle: every term summed explicitly, including the Ψ_t
            // quadratic form evaluated through the full diagonal matrix.
            let mut denom = 0.0;
            for col in p.w_r.column_iter() {
                denom += u.dotc(&col.into_owned()).norm_sqr();
            }
            for (i, col) in p.w_c.column_iter().enumerate() {
                if i != k {
                    denom += u.dotc(&col.into_owned()).norm_sqr();
                }
            }
            let psi_t = CMat::from_diagonal(&phi_t);
            denom += noise.sigma_v2 * (psi_t.adjoint() * &t_k).norm_squared();
            denom += noise.sigma2;
            let oracle = u.dotc(&p.w_c.column(k).into_owned()).norm_sqr() / denom;
            assert_relative_eq!(sinr, oracle, max_relative = 1e-12);
        }
    }

    #[test]
    fn sinr_invariant_to_per_stream_phase_rotation() {
        let (g, _, _, p) = random_setup(6, 4, 2, 12);
        let _ = g;
        let mut rng = standalone_stream(12, 3, Purpose::Oracle);
        let u = sample_rayleigh(4, 1, 1.0, &mut rng).unwrap().column(0).into_owned();
        let phi_t = sample_rayleigh(6, 1, 1.0, &mut rng).unwrap().column(0).into_owned();
        let t_k = sample_rayleigh(6, 1, 1.0, &mut rng).unwrap().column(0).into_owned();
        let noise = test_noise();
        let base = user_sinr(&u, &p, &phi_t, &t_k, &noise, 0, true).unwrap();

        let mut rotated = p.clone();
        for (i, mut col) in rotated.w_c.column_iter_mut().enumerate() {
            col *= Complex64::from_polar(1.0, 0.7 + i as f64);
        }
        let rot = user_sinr(&u, &rotated, &phi_t, &t_k, &noise, 0, true).unwrap();
        assert_relative_eq!(base, rot, max_relative = 1e-12);
    }
}
