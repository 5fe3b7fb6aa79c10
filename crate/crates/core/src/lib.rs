//! Beta-encoders and golden ratio encoders under realistic imperfections.
//!
//! The crate models one-bit quantizers with a flaky zone, the four encoding
//! recursions (ideal and leaky beta-encoders, ideal and leaky golden ratio
//! encoders), reconstruction in a known or estimated base, recovery of an
//! unknown base from encoded bitstreams, structural checks on expansions of
//! zero, and the invariant-rectangle geometry that certifies quantizer
//! parameter ranges for the leaky golden ratio encoder.
//!
//! Bits are indexed from 1 in the mathematical notation used in the docs and
//! from 0 in slices: `bits[0]` is `b_1`.

pub mod decoder;
pub mod encoders;
mod error;
pub mod invariant_geometry;
pub mod polynomial;
pub mod quantizers;
pub mod recovery;
pub mod transversality;
pub mod zero_structure;

pub use error::{Error, Result};

pub use decoder::{decode_with_estimate, error_bound, partial_sum, ReconstructionReport};
pub use encoders::{
    beta_encode, beta_encode_leaky, effective_gamma, gre_encode, gre_encode_leaky,
    leak_for_gamma, EncodeResult, LeakParams, Scheme,
};
pub use polynomial::{poly_eval, TernaryPolynomial};
pub use quantizers::{q2_flaky, q_flaky, q_ideal, Bit, FlakyPolicy, PolicyState, QuantizerSpec};
pub use recovery::{
    difference_stream, first_root, recover_gamma_from_pair, recover_gamma_from_zero,
    required_bits, Guarantee, RecoveryResult, TransversalityContext,
};

/// The golden ratio `(1 + √5) / 2`.
pub const PHI: f64 = 1.618_033_988_749_895;

/// `1 / φ = φ − 1`, the base of the ideal golden ratio encoder.
pub const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Largest ρ for which δ-transversality of `{−1, 0, 1}` power series is known
/// to hold on `[0, ρ]`.
pub const TRANSVERSALITY_CEILING: f64 = 0.6491;
