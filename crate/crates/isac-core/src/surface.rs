//! The active simultaneously-transmitting-and-reflecting surface (ASTARS).
//!
//! Each of the Q elements splits incident energy between a transmit side and
//! a reflect side with amplitudes β_q^t, β_q^r coupled by
//! (β_q^t)² + (β_q^r)² = 1, applies independent phase shifts φ_q^t, φ_q^r,
//! and (in active mode) amplifies by α_q ≤ α_max. The per-side coefficient
//! vector has entries α_q·β_q^i·e^{jφ_q^i}; its diagonal matrix Ψ_i is what
//! the signal model applies.
//!
//! The passive baseline (a conventional STAR-RIS) keeps the same phases and
//! amplitude split but pins α_q = 1; downstream metric evaluation must also
//! drop the dynamic-noise terms that only active elements inject.
//!
//! The struct stores β^r and derives β^t = √(1−(β^r)²), so the energy
//! coupling cannot be violated by construction; [`SurfaceConfig::validate`]
//! exists for configurations loaded from external files.

use num_complex::Complex64;
use rand::Rng;

use crate::linalg::{CMat, CVec};
use crate::{Error, Result};

const TAU: f64 = std::f64::consts::TAU;

/// Which side of the surface a coefficient vector belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Energy passed through to the far side (serves the users).
    Transmit,
    /// Energy reflected back (serves the radar path).
    Reflect,
}

/// Per-element amplitudes, phases, and amplifying coefficients of the
/// surface.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceConfig {
    /// Reflect-side amplitudes β_q^r ∈ [0, 1]; the transmit side is derived.
    beta_r: Vec<f64>,
    /// Transmit-side phases φ_q^t ∈ [0, 2π).
    phi_t: Vec<f64>,
    /// Reflect-side phases φ_q^r ∈ [0, 2π).
    phi_r: Vec<f64>,
    /// Active amplifying coefficients α_q ∈ (0, α_max].
    alpha: Vec<f64>,
    /// Cap on every α_q.
    alpha_max: f64,
    /// False selects the passive STAR-RIS baseline (all α_q = 1, and the
    /// signal model zeroes the dynamic-noise terms).
    active: bool,
}

/// Wraps an angle into [0, 2π).
pub fn wrap_to_2pi(x: f64) -> f64 {
    let w = x.rem_euclid(TAU);
    // rem_euclid can return exactly 2π when x is a tiny negative number.
    if w >= TAU {
        0.0
    } else {
        w
    }
}

impl SurfaceConfig {
    /// Builds a configuration from raw per-element values, clamping nothing:
    /// out-of-range inputs are rejected via [`SurfaceConfig::validate`].
    pub fn new(
        beta_r: Vec<f64>,
        phi_t: Vec<f64>,
        phi_r: Vec<f64>,
        alpha: Vec<f64>,
        alpha_max: f64,
        active: bool,
    ) -> Result<Self> {
        let cfg = SurfaceConfig {
            beta_r,
            phi_t,
            phi_r,
            alpha,
            alpha_max,
            active,
        };
        cfg.ensure_valid()?;
        Ok(cfg)
    }

    /// Builds a configuration from explicit two-sided amplitudes, as found
    /// in external files. The energy coupling (β^t)² + (β^r)² = 1 is checked
    /// to 1e−9 and β^r is kept as the stored representation.
    pub fn from_two_sided(
        beta_t: &[f64],
        beta_r: Vec<f64>,
        phi_t: Vec<f64>,
        phi_r: Vec<f64>,
        alpha: Vec<f64>,
        alpha_max: f64,
        active: bool,
    ) -> Result<Self> {
        if beta_t.len() != beta_r.len() {
            return Err(Error::Dimension(format!(
                "beta_t has {} elements, beta_r has {}",
                beta_t.len(),
                beta_r.len()
            )));
        }
        let mut violations = Vec::new();
        for (q, (&bt, &br)) in beta_t.iter().zip(beta_r.iter()).enumerate() {
            let coupling = bt * bt + br * br;
            if (coupling - 1.0).abs() > 1e-9 {
                violations.push(format!(
                    "element {q}: (β^t)²+(β^r)² = {coupling} violates energy coupling"
                ));
            }
        }
        if !violations.is_empty() {
            return Err(Error::Validation(violations));
        }
        Self::new(beta_r, phi_t, phi_r, alpha, alpha_max, active)
    }

    /// Builds a configuration from a complex reflect-side coefficient vector
    /// (entries α_q·β_q^r·e^{jφ_q^r}) plus transmit-side phases: amplitudes
    /// are recovered as β_q^r = |entry|/α_q, clipped into [0, 1], and phases
    /// wrapped into [0, 2π). This is how the phase optimizer turns its
    /// decision vector back into a surface.
    pub fn from_reflect_coefficients(
        reflect: &CVec,
        phi_t: Vec<f64>,
        alpha: Vec<f64>,
        alpha_max: f64,
        active: bool,
    ) -> Result<Self> {
        if reflect.len() != alpha.len() || reflect.len() != phi_t.len() {
            return Err(Error::Dimension(format!(
                "reflect vector ({}), phi_t ({}), alpha ({}) must agree",
                reflect.len(),
                phi_t.len(),
                alpha.len()
            )));
        }
        let mut beta_r = Vec::with_capacity(reflect.len());
        let mut phi_r = Vec::with_capacity(reflect.len());
        for (entry, &a) in reflect.iter().zip(alpha.iter()) {
            if !(a > 0.0) {
                return Err(Error::Domain(format!(
                    "amplifying coefficient must be positive, got {a}"
                )));
            }
            beta_r.push((entry.norm() / a).clamp(0.0, 1.0));
            phi_r.push(wrap_to_2pi(entry.arg()));
        }
        let phi_t = phi_t.into_iter().map(wrap_to_2pi).collect();
        Self::new(beta_r, phi_t, phi_r, alpha, alpha_max, active)
    }

    /// Number of surface elements.
    pub fn q(&self) -> usize {
        self.beta_r.len()
    }

    /// True when the amplifying coefficients are in play.
    pub fn is_active(&self) -> bool {
        self.active
    }

    /// Cap on the amplifying coefficients.
    pub fn alpha_max(&self) -> f64 {
        self.alpha_max
    }

    /// Per-element amplifying coefficients.
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// Reflect-side amplitudes β_q^r.
    pub fn beta_r(&self) -> &[f64] {
        &self.beta_r
    }

    /// Transmit-side amplitudes β_q^t = √(1 − (β_q^r)²), derived so the
    /// energy coupling holds by construction.
    pub fn beta_t(&self) -> Vec<f64> {
        self.beta_r
            .iter()
            .map(|&br| (1.0 - br * br).max(0.0).sqrt())
            .collect()
    }

    /// Transmit-side phases φ_q^t.
    pub fn phi_t(&self) -> &[f64] {
        &self.phi_t
    }

    /// Reflect-side phases φ_q^r.
    pub fn phi_r(&self) -> &[f64] {
        &self.phi_r
    }

    /// Reports every violated invariant (empty = valid). Each entry names
    /// the element index involved.
    pub fn validate(&self) -> Vec<String> {
        let mut violations = Vec::new();
        let q = self.beta_r.len();
        for (name, len) in [
            ("phi_t", self.phi_t.len()),
            ("phi_r", self.phi_r.len()),
            ("alpha", self.alpha.len()),
        ] {
            if len != q {
                violations.push(format!("{name} has {len} entries, expected {q}"));
            }
        }
        if !violations.is_empty() {
            return violations; // element-wise checks would index out of range
        }
        if !(self.alpha_max > 0.0) {
            violations.push(format!("alpha_max must be positive, got {}", self.alpha_max));
        }
        for (idx, &br) in self.beta_r.iter().enumerate() {
            if !(0.0..=1.0).contains(&br) {
                violations.push(format!("element {idx}: β^r = {br} outside [0, 1]"));
            }
        }
        for (name, phases) in [("φ^t", &self.phi_t), ("φ^r", &self.phi_r)] {
            for (idx, &p) in phases.iter().enumerate() {
                if !(0.0..TAU).contains(&p) {
                    violations.push(format!("element {idx}: {name} = {p} outside [0, 2π)"));
                }
            }
        }
        for (idx, &a) in self.alpha.iter().enumerate() {
            if !(a > 0.0) {
                violations.push(format!("element {idx}: α = {a} must be positive"));
            } else if a > self.alpha_max + 1e-12 {
                violations.push(format!(
                    "element {idx}: α = {a} exceeds cap α_max = {}",
                    self.alpha_max
                ));
            }
            if !self.active && (a - 1.0).abs() > 1e-12 {
                violations.push(format!("element {idx}: passive surface requires α = 1, got {a}"));
            }
        }
        violations
    }

    /// [`SurfaceConfig::validate`] as a `Result`.
    pub fn ensure_valid(&self) -> Result<()> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(violations))
        }
    }

    /// Per-side coefficient vector with entries α_q·β_q^side·e^{jφ_q^side}.
    pub fn coefficient_vector(&self, side: Side) -> Result<CVec> {
        self.ensure_valid()?;
        let (amps, phases): (Vec<f64>, &[f64]) = match side {
            Side::Transmit => (self.beta_t(), &self.phi_t),
            Side::Reflect => (self.beta_r.clone(), &self.phi_r),
        };
        Ok(CVec::from_fn(self.q(), |i, _| {
            Complex64::from_polar(self.alpha[i] * amps[i], phases[i])
        }))
    }

    /// Diagonal coefficient matrix Ψ_side = diag(coefficient vector).
    pub fn psi(&self, side: Side) -> Result<CMat> {
        Ok(CMat::from_diagonal(&self.coefficient_vector(side)?))
    }

    /// Copy with α_q = 1 and active = false: the passive STAR-RIS baseline.
    /// Idempotent; phases and the amplitude split are untouched.
    pub fn passive_baseline(&self) -> SurfaceConfig {
        SurfaceConfig {
            beta_r: self.beta_r.clone(),
            phi_t: self.phi_t.clone(),
            phi_r: self.phi_r.clone(),
            alpha: vec![1.0; self.q()],
            alpha_max: self.alpha_max,
            active: false,
        }
    }

    /// Copy with the given reflect-side amplitudes (validated).
    pub fn with_beta_r(&self, beta_r: Vec<f64>) -> Result<SurfaceConfig> {
        SurfaceConfig::new(
            beta_r,
            self.phi_t.clone(),
            self.phi_r.clone(),
            self.alpha.clone(),
            self.alpha_max,
            self.active,
        )
    }
}

/// Draws a uniformly random configuration: phases uniform on [0, 2π), the
/// amplitude split via β^r ~ U[0, 1] with β^t derived, and α_q = α_max in
/// active mode (1 otherwise). Always passes validation by construction.
pub fn random_config(
    q: usize,
    alpha_max: f64,
    active: bool,
    rng: &mut impl Rng,
) -> Result<SurfaceConfig> {
    if q == 0 {
        return Err(Error::Domain("surface needs at least one element".into()));
    }
    let mut beta_r = Vec::with_capacity(q);
    let mut phi_t = Vec::with_capacity(q);
    let mut phi_r = Vec::with_capacity(q);
    for _ in 0..q {
        beta_r.push(rng.random::<f64>());
        phi_t.push(wrap_to_2pi(rng.random::<f64>() * TAU));
        phi_r.push(wrap_to_2pi(rng.random::<f64>() * TAU));
    }
    let alpha = vec![if active { alpha_max } else { 1.0 }; q];
    SurfaceConfig::new(beta_r, phi_t, phi_r, alpha, alpha_max, active)
}
