//! Deterministic random-number streams.
//!
//! Every stochastic quantity in the simulator — channel realizations, random
//! surface initializations, echo noise, data bits — is drawn from a stream
//! derived from the scenario seed plus a structural *address*: which
//! experiment, which sweep point, which Monte Carlo trial, and what the draw
//! is for. Distinct addresses yield independent ChaCha12 generators, so the
//! execution order of trials (sequential, rayon, any thread count) can never
//! change a single drawn value.
//!
//! The derivation is a small sponge over splitmix64: absorb the address
//! fields one by one, then squeeze a 256-bit ChaCha key. splitmix64 is a
//! full-period 64-bit permutation with good avalanche behaviour, which is
//! all that is needed here (streams must be decorrelated, not
//! cryptographically hiding).

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// What a derived stream is used for.
///
/// Tagging the purpose keeps logically distinct draws independent even when
/// figure/point/trial coincide — e.g. the channel realization of trial 7 and
/// the echo noise of trial 7 come from unrelated streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    /// Small-scale fading draws for all links.
    Channels,
    /// Random initial surface configuration.
    SurfaceInit,
    /// Additive receiver noise on the sensing echo.
    EchoNoise,
    /// Residual-synchronization phase jitter on phase increments.
    PhaseJitter,
    /// Payload bits for BER experiments.
    DataBits,
    /// Additive receiver noise on the communication link.
    LinkNoise,
    /// Reserved for test oracles that need their own draws.
    Oracle,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Channels => 1,
            Purpose::SurfaceInit => 2,
            Purpose::EchoNoise => 3,
            Purpose::PhaseJitter => 4,
            Purpose::DataBits => 5,
            Purpose::LinkNoise => 6,
            Purpose::Oracle => 7,
        }
    }
}

/// Structural address of one random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamId {
    /// Experiment / figure identifier (0 for standalone runs).
    pub figure: u64,
    /// Index of the sweep point within the experiment.
    pub point: u64,
    /// Monte Carlo trial index.
    pub trial: u64,
    /// What the draws are used for.
    pub purpose: Purpose,
}

/// The splitmix64 state-update-and-output step (Steele, Lea & Flood 2014).
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the independent ChaCha12 stream for `(seed, id)`.
pub fn stream(seed: u64, id: StreamId) -> ChaCha12Rng {
    let mut state = seed;
    // Absorb each address field through the full permutation. The odd
    // multiplier spreads small consecutive integers (figure 2, 3, 4, ...)
    // across the whole state space before they are mixed in.
    for field in [id.figure, id.point, id.trial, id.purpose.tag()] {
        state ^= field.wrapping_mul(0xD1B5_4A32_D192_ED03);
        let _ = splitmix64(&mut state);
    }
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}

/// Stream for work outside any sweep (single `optimize` runs, unit tests).
pub fn standalone_stream(seed: u64, trial: u64, purpose: Purpose) -> ChaCha12Rng {
    stream(
        seed,
        StreamId {
            figure: 0,
            point: 0,
            trial,
            purpose,
        },
    )
}
