//! OFDM modem, QPSK mapping, per-resource-element fading, frame dumps, and
//! the uncoded link bit-error trial.
//!
//! Both DFT directions are unitary (1/√N on each), so Parseval holds
//! exactly and noise variance is preserved between domains. The cyclic
//! prefix copies the last ⌈cp_fraction·N⌉ core samples in front of each
//! symbol.
//!
//! A propagation delay τ rotates subcarrier n by e^{−j2πnΔfτ}; a Doppler
//! shift f_d rotates OFDM symbol l by e^{+j2πf_d·l·T_s}. Both act per
//! resource element on the frequency-domain grid (rows = subcarriers,
//! columns = symbols), which is the standard CP-restored narrowband model.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};

use crate::linalg::{c, CMat};
use crate::{Error, Result};

const TAU: f64 = std::f64::consts::TAU;
const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Magic bytes opening every serialized frame dump.
pub const FRAME_MAGIC: [u8; 8] = *b"OFDMGRID";

// ─── Parameters and modem ───────────────────────────────────────────────────

/// Static OFDM numerology.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfdmParams {
    /// Subcarriers per symbol (DFT size).
    pub n_subcarriers: usize,
    /// Cyclic-prefix length as a fraction of the symbol core.
    pub cp_fraction: f64,
}

impl OfdmParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_subcarriers == 0 {
            return Err(Error::Dimension(
                "OFDM needs at least one subcarrier".to_string(),
            ));
        }
        if !(0.0..1.0).contains(&self.cp_fraction) {
            return Err(Error::Domain(format!(
                "cp_fraction must lie in [0, 1), got {}",
                self.cp_fraction
            )));
        }
        Ok(())
    }

    /// Cyclic-prefix length in samples, ⌈cp_fraction·N⌉.
    pub fn cp_len(&self) -> usize {
        (self.cp_fraction * self.n_subcarriers as f64).ceil() as usize
    }

    /// Samples per transmitted symbol including the prefix.
    pub fn symbol_len(&self) -> usize {
        self.n_subcarriers + self.cp_len()
    }
}

/// Reusable modulator/demodulator holding the planned transforms.
pub struct OfdmModem {
    params: OfdmParams,
    inverse: Arc<dyn Fft<f64>>,
    forward: Arc<dyn Fft<f64>>,
}

impl OfdmModem {
    pub fn new(params: OfdmParams) -> Result<OfdmModem> {
        params.validate()?;
        let mut planner = FftPlanner::new();
        Ok(OfdmModem {
            params,
            inverse: planner.plan_fft_inverse(params.n_subcarriers),
            forward: planner.plan_fft_forward(params.n_subcarriers),
        })
    }

    pub fn params(&self) -> OfdmParams {
        self.params
    }

    /// Frequency-domain grid (N×L) → time-domain samples, one unitary
    /// inverse DFT plus cyclic prefix per column, concatenated.
    pub fn modulate(&self, grid: &CMat) -> Result<Vec<Complex64>> {
        let n = self.params.n_subcarriers;
        if grid.nrows() != n {
            return Err(Error::Dimension(format!(
                "grid has {} rows, modem expects {n} subcarriers",
                grid.nrows()
            )));
        }
        let cp = self.params.cp_len();
        let scale = 1.0 / (n as f64).sqrt();
        let mut out = Vec::with_capacity(grid.ncols() * self.params.symbol_len());
        let mut core: Vec<Complex64> = Vec::with_capacity(n);
        for col in grid.column_iter() {
            core.clear();
            core.extend(col.iter().copied());
            self.inverse.process(&mut core);
            for s in core.iter_mut() {
                *s *= scale;
            }
            out.extend_from_slice(&core[n - cp..]);
            out.extend_from_slice(&core);
        }
        Ok(out)
    }

    /// Time-domain samples → frequency-domain grid, stripping each prefix
    /// and applying the unitary forward DFT.
    pub fn demodulate(&self, samples: &[Complex64], n_symbols: usize) -> Result<CMat> {
        let n = self.params.n_subcarriers;
        let sym_len = self.params.symbol_len();
        if samples.len() != n_symbols * sym_len {
            return Err(Error::Dimension(format!(
                "{} samples do not form {n_symbols} symbols of length {sym_len}",
                samples.len()
            )));
        }
        let cp = self.params.cp_len();
        let scale = 1.0 / (n as f64).sqrt();
        let mut grid = CMat::zeros(n, n_symbols);
        let mut core: Vec<Complex64> = Vec::with_capacity(n);
        for l in 0..n_symbols {
            let start = l * sym_len + cp;
            core.clear();
            core.extend_from_slice(&samples[start..start + n]);
            self.forward.process(&mut core);
            for (i, s) in core.iter().enumerate() {
                grid[(i, l)] = s * scale;
            }
        }
        Ok(grid)
    }
}

// ─── QPSK ───────────────────────────────────────────────────────────────────

/// Gray-mapped QPSK: bit pair (b₀, b₁) → ((1−2b₀) + j(1−2b₁))/√2, so
/// b₀ selects the real sign and b₁ the imaginary sign and neighbouring
/// quadrants differ in exactly one bit. Unit symbol energy.
pub fn qpsk_modulate(bits: &[u8]) -> Result<Vec<Complex64>> {
    if bits.len() % 2 != 0 {
        return Err(Error::Dimension(format!(
            "QPSK consumes bit pairs, got {} bits",
            bits.len()
        )));
    }
    if let Some(bad) = bits.iter().find(|b| **b > 1) {
        return Err(Error::Domain(format!("bits must be 0 or 1, got {bad}")));
    }
    Ok(bits
        .chunks_exact(2)
        .map(|pair| {
            c(
                (1.0 - 2.0 * pair[0] as f64) * FRAC_1_SQRT_2,
                (1.0 - 2.0 * pair[1] as f64) * FRAC_1_SQRT_2,
            )
        })
        .collect())
}

/// Hard-decision quadrant demapper, the maximum-likelihood rule for QPSK in
/// AWGN. Exact boundary ties resolve to bit 0.
pub fn qpsk_demodulate(symbols: &[Complex64]) -> Vec<u8> {
    let mut bits = Vec::with_capacity(symbols.len() * 2);
    for s in symbols {
        bits.push(u8::from(s.re < 0.0));
        bits.push(u8::from(s.im < 0.0));
    }
    bits
}

// ─── Per-resource-element fading ────────────────────────────────────────────

/// Doppler shift of a monostatic echo: f_d = 2v/λ.
pub fn doppler_shift_hz(velocity_ms: f64, wavelength_m: f64) -> f64 {
    2.0 * velocity_ms / wavelength_m
}

/// Applies delay and Doppler to a frequency-domain grid: entry (n, l) is
/// scaled by e^{−j2πnΔfτ}·e^{+j2πf_d·l·T_s}.
pub fn apply_delay_doppler(
    grid: &CMat,
    delay_s: f64,
    doppler_hz: f64,
    delta_f_hz: f64,
    t_s_s: f64,
) -> Result<CMat> {
    if !(delta_f_hz > 0.0) || !(t_s_s > 0.0) {
        return Err(Error::Domain(format!(
            "subcarrier spacing and symbol duration must be positive, got {delta_f_hz} and {t_s_s}"
        )));
    }
    if !delay_s.is_finite() || !doppler_hz.is_finite() {
        return Err(Error::Domain(format!(
            "delay and Doppler must be finite, got {delay_s} and {doppler_hz}"
        )));
    }
    let mut out = grid.clone();
    for l in 0..out.ncols() {
        let doppler = Complex64::from_polar(1.0, TAU * doppler_hz * l as f64 * t_s_s);
        for n in 0..out.nrows() {
            let delay = Complex64::from_polar(1.0, -TAU * n as f64 * delta_f_hz * delay_s);
            out[(n, l)] *= delay * doppler;
        }
    }
    Ok(out)
}

// ─── Frame dumps ────────────────────────────────────────────────────────────

/// Serializes a frequency-domain grid: 8-byte magic, then subcarrier and
/// symbol counts as little-endian u32, then per symbol (column) per
/// subcarrier the real and imaginary parts as little-endian f64.
pub fn encode_frame(grid: &CMat) -> Result<Vec<u8>> {
    let n: u32 = grid
        .nrows()
        .try_into()
        .map_err(|_| Error::Dimension(format!("{} subcarriers overflow a u32", grid.nrows())))?;
    let l: u32 = grid
        .ncols()
        .try_into()
        .map_err(|_| Error::Dimension(format!("{} symbols overflow a u32", grid.ncols())))?;
    let mut out = Vec::with_capacity(16 + grid.len() * 16);
    out.extend_from_slice(&FRAME_MAGIC);
    out.extend_from_slice(&n.to_le_bytes());
    out.extend_from_slice(&l.to_le_bytes());
    for col in grid.column_iter() {
        for v in col.iter() {
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    Ok(out)
}

/// Parses a frame dump produced by [`encode_frame`].
///
/// Rejects wrong magic, truncated headers, and any payload whose length
/// does not match the header exactly; never panics on malformed input
/// (dimension arithmetic is overflow-checked).
pub fn decode_frame(bytes: &[u8]) -> Result<CMat> {
    if bytes.len() < 16 {
        return Err(Error::Parse(format!(
            "frame dump header needs 16 bytes, got {}",
            bytes.len()
        )));
    }
    if bytes[..8] != FRAME_MAGIC {
        return Err(Error::Parse("frame dump magic mismatch".to_string()));
    }
    let n = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let l = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
    let expected = (n as u64)
        .checked_mul(l as u64)
        .and_then(|cells| cells.checked_mul(16))
        .and_then(|payload| payload.checked_add(16))
        .ok_or_else(|| Error::Parse("frame dimensions overflow".to_string()))?;
    if bytes.len() as u64 != expected {
        return Err(Error::Parse(format!(
            "frame dump of {n}×{l} resource elements needs {expected} bytes, got {}",
            bytes.len()
        )));
    }
    let mut grid = CMat::zeros(n, l);
    let mut offset = 16;
    for col in 0..l {
        for row in 0..n {
            let re = f64::from_le_bytes(bytes[offset..offset + 8].try_into().expect("8 bytes"));
            let im =
                f64::from_le_bytes(bytes[offset + 8..offset + 16].try_into().expect("8 bytes"));
            grid[(row, col)] = c(re, im);
            offset += 16;
        }
    }
    Ok(grid)
}

// ─── Uncoded link trial ─────────────────────────────────────────────────────

/// Outcome of one link trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkStats {
    pub bit_errors: u64,
    pub total_bits: u64,
}

impl LinkStats {
    pub fn ber(&self) -> f64 {
        if self.total_bits == 0 {
            0.0
        } else {
            self.bit_errors as f64 / self.total_bits as f64
        }
    }
}

/// One uncoded QPSK-OFDM frame through a delay–Doppler channel with AWGN at
/// the given per-symbol SNR.
///
/// Symbol 0 carries pilots (known at the receiver) from which a one-tap
/// per-subcarrier equalizer is estimated; that static estimate is applied
/// to every later symbol, so any Doppler rotation accumulated after symbol
/// 0 goes uncompensated — which is exactly the impairment this trial
/// measures. Bits are counted over the data symbols only.
#[allow(clippy::too_many_arguments)]
pub fn link_ber_trial(
    modem: &OfdmModem,
    n_symbols: usize,
    delta_f_hz: f64,
    t_s_s: f64,
    delay_s: f64,
    doppler_hz: f64,
    snr_db: f64,
    rng: &mut impl Rng,
) -> Result<LinkStats> {
    if n_symbols < 2 {
        return Err(Error::Dimension(
            "link trial needs one pilot symbol plus at least one data symbol".to_string(),
        ));
    }
    let n = modem.params().n_subcarriers;

    let bits: Vec<u8> = (0..2 * n * n_symbols)
        .map(|_| u8::from(rng.random::<bool>()))
        .collect();
    let symbols = qpsk_modulate(&bits)?;
    let tx_grid = CMat::from_fn(n, n_symbols, |row, col| symbols[col * n + row]);

    let faded = apply_delay_doppler(&tx_grid, delay_s, doppler_hz, delta_f_hz, t_s_s)?;
    let mut samples = modem.modulate(&faded)?;
    let noise_scale = (10f64.powf(-snr_db / 10.0) / 2.0).sqrt();
    for s in samples.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *s += c(noise_scale * re, noise_scale * im);
    }
    let rx_grid = modem.demodulate(&samples, n_symbols)?;

    // One-tap estimate from the pilot column: ĥ_n = y_{n,0}·x̄_{n,0} for
    // unit-energy pilots.
    let mut stats = LinkStats {
        bit_errors: 0,
        total_bits: 0,
    };
    for row in 0..n {
        let h_hat = rx_grid[(row, 0)] * tx_grid[(row, 0)].conj();
        for col in 1..n_symbols {
            let equalized = rx_grid[(row, col)] / h_hat;
            let decided = qpsk_demodulate(&[equalized]);
            let sent = &bits[2 * (col * n + row)..2 * (col * n + row) + 2];
            stats.total_bits += 2;
            stats.bit_errors += u64::from(decided[0] != sent[0]);
            stats.bit_errors += u64::from(decided[1] != sent[1]);
        }
    }
    Ok(stats)
}
