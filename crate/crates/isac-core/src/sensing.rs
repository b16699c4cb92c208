//! Range and velocity estimation from echo phase differences.
//!
//! The surface sweeps its reflect-side phase profile across subcarriers, so
//! the noiseless scalarized echo on subcarrier n has argument
//!
//! ```text
//! arg y(n) = n · (2πΔf·d/c + Σ_q Δφ_q^r) + const,
//! ```
//!
//! with the `+j` sign convention used throughout this crate and
//! Σ_q Δφ_q^r the telescoping sum of successive reflect-phase increments.
//! Subtracting that known surface contribution from each adjacent-subcarrier
//! phase difference leaves 2πΔf·d/c, which is linear in range; the same
//! construction across OFDM symbols (where the static surface contributes no
//! increment) leaves 2πf_d·T_s, linear in Doppler.
//!
//! All wrapped quantities live in (−π, π]. Range estimates are resolved into
//! [0, 2π) before scaling, giving the full unambiguous window c/Δf; Doppler
//! stays signed, so approaching and receding targets are distinguished.
//!
//! The estimators aggregate by the arithmetic mean of the wrapped per-pair
//! differences. That is accurate while the differences stay away from the
//! ±π wrap boundary, which the unambiguous-window check in the experiment
//! harness guarantees; it is not a general circular-mean implementation.

use num_complex::Complex64;

use crate::linalg::CMat;
use crate::scenario::EchoScalarization;
use crate::{Error, Result};

/// Propagation speed used for all range conversions, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

const TAU: f64 = std::f64::consts::TAU;

/// Wraps an angle to (−π, π].
pub fn wrap_to_pi(angle: f64) -> f64 {
    let wrapped = angle.rem_euclid(TAU);
    if wrapped > std::f64::consts::PI {
        wrapped - TAU
    } else {
        wrapped
    }
}

/// Phase advance from `earlier` to `later`, wrapped to (−π, π].
///
/// Either observation having zero magnitude makes the phase undefined and is
/// reported as a domain error rather than silently returning arg(0) = 0.
pub fn raw_phase_diff(earlier: Complex64, later: Complex64) -> Result<f64> {
    if earlier.norm_sqr() == 0.0 || later.norm_sqr() == 0.0 {
        return Err(Error::Domain(
            "phase difference of a zero-magnitude observation is undefined".to_string(),
        ));
    }
    Ok(wrap_to_pi((later * earlier.conj()).arg()))
}

/// Total phase advance the surface itself injects between adjacent
/// subcarriers: the sum of successive reflect-phase increments
/// Σ_q (φ_{q+1}^r − φ_q^r), taken on the raw (unwrapped) phases so it
/// telescopes to φ_Q^r − φ_1^r exactly.
pub fn ris_phase_increments(phi_r: &[f64]) -> Result<f64> {
    if phi_r.is_empty() {
        return Err(Error::Dimension(
            "reflect-phase profile must have at least one element".to_string(),
        ));
    }
    Ok(phi_r.windows(2).map(|w| w[1] - w[0]).sum())
}

/// Removes the known surface contribution from a raw adjacent-subcarrier
/// phase difference, wrapped back to (−π, π].
pub fn effective_phase_diff(raw_diff: f64, ris_increments: f64) -> f64 {
    wrap_to_pi(raw_diff - ris_increments)
}

/// Range from an effective adjacent-subcarrier phase difference:
/// d̂ = c·Δφ / (2π·Δf).
///
/// Purely linear — the caller chooses how Δφ is resolved. A difference in
/// [0, 2π) maps onto the full unambiguous window [0, c/Δf); a negative
/// difference yields a negative range.
pub fn estimate_range(delta_phi: f64, delta_f_hz: f64) -> Result<f64> {
    if !(delta_f_hz > 0.0) || !delta_f_hz.is_finite() {
        return Err(Error::Domain(format!(
            "subcarrier spacing must be positive and finite, got {delta_f_hz}"
        )));
    }
    Ok(SPEED_OF_LIGHT * delta_phi / (TAU * delta_f_hz))
}

/// Doppler shift from an adjacent-symbol phase difference:
/// f̂_d = Δφ / (2π·T_s). Signed, so the direction of motion survives.
pub fn estimate_doppler(delta_phi: f64, t_s_s: f64) -> Result<f64> {
    if !(t_s_s > 0.0) || !t_s_s.is_finite() {
        return Err(Error::Domain(format!(
            "symbol duration must be positive and finite, got {t_s_s}"
        )));
    }
    Ok(delta_phi / (TAU * t_s_s))
}

/// Radial velocity in km/h from a Doppler shift: v̂ = f_d·λ/2, converted
/// from m/s.
pub fn estimate_velocity(doppler_hz: f64, wavelength_m: f64) -> Result<f64> {
    if !(wavelength_m > 0.0) || !wavelength_m.is_finite() {
        return Err(Error::Domain(format!(
            "wavelength must be positive and finite, got {wavelength_m}"
        )));
    }
    Ok(doppler_hz * wavelength_m / 2.0 * 3.6)
}

/// Full range pipeline: wrapped per-pair differences, surface contribution
/// removed, averaged, resolved into [0, 2π), scaled to metres.
///
/// Needs at least two observations. The unambiguous window is c/Δf.
pub fn range_from_subcarrier_observations(
    observations: &[Complex64],
    ris_increments: f64,
    delta_f_hz: f64,
) -> Result<f64> {
    let mean = mean_effective_diff(observations, ris_increments)?;
    estimate_range(mean.rem_euclid(TAU), delta_f_hz)
}

/// Full velocity pipeline across OFDM symbols: the static surface adds no
/// per-symbol increment, so the raw differences are already effective.
/// Signed result in km/h.
pub fn velocity_from_symbol_observations(
    observations: &[Complex64],
    t_s_s: f64,
    wavelength_m: f64,
) -> Result<f64> {
    let mean = mean_effective_diff(observations, 0.0)?;
    estimate_velocity(estimate_doppler(mean, t_s_s)?, wavelength_m)
}

fn mean_effective_diff(observations: &[Complex64], ris_increments: f64) -> Result<f64> {
    if observations.len() < 2 {
        return Err(Error::Dimension(format!(
            "need at least two observations to form a phase difference, got {}",
            observations.len()
        )));
    }
    let mut sum = 0.0;
    for pair in observations.windows(2) {
        sum += effective_phase_diff(raw_phase_diff(pair[0], pair[1])?, ris_increments);
    }
    Ok(sum / (observations.len() - 1) as f64)
}

/// Collapses an M×N echo snapshot matrix (one column per subcarrier or
/// symbol) to the N scalars the phase estimators consume.
pub fn scalarize_echo(snapshots: &CMat, mode: EchoScalarization) -> Result<Vec<Complex64>> {
    if snapshots.ncols() == 0 || snapshots.nrows() == 0 {
        return Err(Error::Dimension(
            "echo snapshot matrix must be non-empty".to_string(),
        ));
    }
    match mode {
        EchoScalarization::CoherentSum => Ok(snapshots
            .column_iter()
            .map(|col| col.iter().sum())
            .collect()),
        EchoScalarization::DominantSingularVector => {
            let svd = snapshots.clone().svd(true, false);
            let u = svd.u.expect("left singular vectors requested");
            let u1 = u.column(0);
            Ok(snapshots
                .column_iter()
                .map(|col| u1.iter().zip(col.iter()).map(|(a, b)| a.conj() * b).sum())
                .collect())
        }
    }
}

/// Noiseless scalarized echo across subcarriers for a target at `range_m`:
/// y(n) = e^{j·(n·(2πΔf·d/c + ris_increments) + initial_phase)}.
///
/// This is the synthesis dual of [`range_from_subcarrier_observations`] and
/// the ground truth the sensing experiments perturb.
pub fn synthesize_range_observations(
    n_subcarriers: usize,
    range_m: f64,
    delta_f_hz: f64,
    ris_increments: f64,
    initial_phase: f64,
) -> Vec<Complex64> {
    let step = TAU * delta_f_hz * range_m / SPEED_OF_LIGHT + ris_increments;
    (0..n_subcarriers)
        .map(|n| Complex64::from_polar(1.0, n as f64 * step + initial_phase))
        .collect()
}

/// Noiseless scalarized echo across OFDM symbols for a Doppler shift
/// `doppler_hz`: y(l) = e^{j·(2π·f_d·l·T_s + initial_phase)}.
pub fn synthesize_doppler_observations(
    n_symbols: usize,
    doppler_hz: f64,
    t_s_s: f64,
    initial_phase: f64,
) -> Vec<Complex64> {
    (0..n_symbols)
        .map(|l| Complex64::from_polar(1.0, TAU * doppler_hz * l as f64 * t_s_s + initial_phase))
        .collect()
}
