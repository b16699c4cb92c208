//! Link-level model and optimizers for an OFDM integrated
//! sensing-and-communication (ISAC) system aided by an active
//! simultaneously-transmitting-and-reflecting surface (ASTARS).
//!
//! The crate covers the full chain:
//!
//! * [`channel`] — large-scale path loss, Rayleigh fading, and the
//!   steering-vector line-of-sight link from the surface to the radar target;
//! * [`surface`] — the ASTARS element model: coupled transmit/reflect
//!   amplitudes, phases, and active amplifying coefficients;
//! * [`signal`] — the dual-function transmit signal, the composite echo
//!   channels, radar SNR, and per-user downlink SINR;
//! * [`beamform`] — transmit precoder optimization with SINR constraints,
//!   solved as a small semidefinite program by an interior-point method;
//! * [`phaseopt`] — surface coefficient optimization by a fractional
//!   (ratio-of-quadratics) transform with majorization-minimization;
//! * [`ofdm`] — the OFDM waveform chain, QPSK mapping, and a delay/Doppler
//!   channel for time-domain experiments;
//! * [`sensing`] — OFDM-radar range and velocity estimation from
//!   inter-subcarrier / inter-symbol phase differences;
//! * [`scenario`], [`alternation`], [`sweep`], [`report`] — configuration,
//!   the alternating optimization loop, Monte Carlo experiment sweeps, and
//!   CSV / plot-script / frame-dump I/O.
//!
//! Everything is deterministic: random quantities are drawn from streams
//! derived from the scenario seed and a structural address (see [`rng`]),
//! so identical configurations reproduce identical outputs byte for byte,
//! regardless of thread count.

pub mod alternation;
pub mod beamform;
pub mod channel;
pub mod linalg;
pub mod ofdm;
pub mod phaseopt;
pub mod report;
pub mod rng;
pub mod scenario;
pub mod sensing;
pub mod signal;
pub mod surface;
pub mod sweep;

use thiserror::Error;

/// Crate-wide error type.
///
/// The CLI maps [`Error::Infeasible`] to exit code 2 and every other variant
/// to exit code 1.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on a physical quantity was violated (negative distance,
    /// angle outside the array's field of view, non-positive gain, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Matrix/vector dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A configuration failed validation; each entry names one violated
    /// invariant, with the element index where applicable.
    #[error("invalid configuration: {}", format_violations(.0))]
    Validation(Vec<String>),

    /// The constraint set admits no solution. `most_violated` names the
    /// constraint with the largest violation at the best point found.
    #[error("infeasible: {most_violated} (violation {violation:.3e})")]
    Infeasible {
        most_violated: String,
        violation: f64,
    },

    /// An iterative algorithm broke one of its own guarantees (e.g. a
    /// monotone objective decreased beyond tolerance). Carries the objective
    /// trace for post-mortem inspection.
    #[error("algorithm fault: {message}; objective trace {trace:?}")]
    AlgorithmFault { message: String, trace: Vec<f64> },

    /// A numerical kernel failed to converge or produced a non-finite value.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Malformed input to one of the parsers (scenario config, CSV, frame
    /// dump).
    #[error("parse error: {0}")]
    Parse(String),

    /// File I/O failure, annotated with the path involved.
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn format_violations(violations: &[String]) -> String {
    violations.join("; ")
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
