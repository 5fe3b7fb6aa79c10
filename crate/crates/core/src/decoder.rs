//! Reconstruction from bitstreams in a known or estimated base.

use serde::Serialize;

use crate::error::{finite, Error, Result};
use crate::quantizers::Bit;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReconstructionReport {
    pub estimate: f64,
    pub bits_used: usize,
    pub base_used: f64,
    /// Worst-case `|x − estimate|` given the base uncertainty that was declared.
    pub bound: f64,
}

fn check_base(gamma: f64) -> Result<f64> {
    finite("gamma", gamma)?;
    if gamma > 0.0 && gamma < 1.0 {
        Ok(gamma)
    } else {
        Err(Error::InvalidParameter {
            name: "gamma",
            value: gamma,
            reason: "base must lie in (0, 1)",
        })
    }
}

/// `Σ_{j=1}^{n} b_j γ^j` by Horner's rule.
pub fn partial_sum(bits: &[Bit], gamma: f64, n: usize) -> Result<f64> {
    let gamma = check_base(gamma)?;
    if n > bits.len() {
        return Err(Error::TooFewBits {
            requested: n,
            available: bits.len(),
        });
    }
    let inner = bits[..n]
        .iter()
        .rev()
        .fold(0.0, |acc, b| acc * gamma + b.as_f64());
    Ok(inner * gamma)
}

/// Tail bound `γ^{n+1}/(1 − γ)` for an `n`-bit reconstruction.
pub fn error_bound(gamma: f64, n: usize) -> f64 {
    gamma.powi(n as i32 + 1) / (1.0 - gamma)
}

/// Decodes the first `n` bits in the estimated base `gamma_tilde`, taking the
/// estimate to be exact.
pub fn decode_with_estimate(
    bits: &[Bit],
    gamma_tilde: f64,
    n: usize,
) -> Result<ReconstructionReport> {
    decode_with_uncertainty(bits, gamma_tilde, n, 0.0)
}

/// Decodes in base `gamma_tilde` when the true base is only known to satisfy
/// `|γ − γ̃| ≤ base_uncertainty`.
///
/// With `g = γ̃ + Δ` the bound is `g^{n+1}/(1−g) + Δ/(1−g)²`: the tail of the
/// series plus `Σ_j |γ^j − γ̃^j| ≤ Δ Σ_j j g^{j−1}`.
pub fn decode_with_uncertainty(
    bits: &[Bit],
    gamma_tilde: f64,
    n: usize,
    base_uncertainty: f64,
) -> Result<ReconstructionReport> {
    let estimate = partial_sum(bits, gamma_tilde, n)?;
    finite("base uncertainty", base_uncertainty)?;
    if base_uncertainty < 0.0 {
        return Err(Error::InvalidParameter {
            name: "base uncertainty",
            value: base_uncertainty,
            reason: "must be non-negative",
        });
    }
    let g = gamma_tilde + base_uncertainty;
    let bound = if g >= 1.0 {
        f64::INFINITY
    } else {
        error_bound(g, n) + base_uncertainty / ((1.0 - g) * (1.0 - g))
    };
    Ok(ReconstructionReport {
        estimate,
        bits_used: n,
        base_used: gamma_tilde,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::INV_PHI;
    use proptest::prelude::*;

    fn naive(bits: &[Bit], gamma: f64, n: usize) -> f64 {
        (1..=n).map(|j| bits[j - 1].as_f64() * gamma.powi(j as i32)).sum()
    }

    #[test]
    fn single_bit() {
        assert_eq!(partial_sum(&[Bit::Plus], 0.5, 1).unwrap(), 0.5);
    }

    #[test]
    fn golden_identity() {
        let bits = [Bit::Plus, Bit::Minus, Bit::Minus];
        assert!(partial_sum(&bits, INV_PHI, 3).unwrap().abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(partial_sum(&[Bit::Plus], 1.0, 1).is_err());
        assert!(partial_sum(&[Bit::Plus], 0.0, 1).is_err());
        assert!(matches!(
            partial_sum(&[Bit::Plus], 0.5, 2),
            Err(Error::TooFewBits { requested: 2, available: 1 })
        ));
        assert_eq!(partial_sum(&[], 0.5, 0).unwrap(), 0.0);
    }

    #[test]
    fn error_bound_values() {
        assert_eq!(error_bound(0.5, 3), 0.125);
        // γ²/(1−γ) = 1 exactly at γ = φ⁻¹.
        assert!((error_bound(INV_PHI, 1) - 1.0).abs() < 1e-14);
        let b = error_bound(0.65, 32);
        let oracle = (0.65 / 0.35) * (32.0 * 0.65f64.ln()).exp();
        assert!((b / oracle - 1.0).abs() < 1e-12);
        assert!((b - 1.9e-6).abs() < 0.05e-6);
    }

    #[test]
    fn all_plus_geometric() {
        let bits = vec![Bit::Plus; 20];
        for n in 0..=20 {
            let r = decode_with_estimate(&bits, 0.5, n).unwrap();
            assert!((r.estimate - (1.0 - 0.5f64.powi(n as i32))).abs() < 1e-15);
            assert_eq!(r.bits_used, n);
        }
    }

    #[test]
    fn exact_estimate_reduces_to_partial_sum() {
        let bits = [Bit::Plus, Bit::Minus, Bit::Plus, Bit::Plus];
        let r = decode_with_estimate(&bits, 0.63, 4).unwrap();
        assert_eq!(r.estimate, partial_sum(&bits, 0.63, 4).unwrap());
        assert!((r.bound - error_bound(0.63, 4)).abs() < 1e-15);
    }

    #[test]
    fn uncertainty_widens_bound() {
        let bits = [Bit::Plus; 8];
        let tight = decode_with_uncertainty(&bits, 0.6, 8, 0.0).unwrap();
        let loose = decode_with_uncertainty(&bits, 0.6, 8, 1e-3).unwrap();
        assert!(loose.bound > tight.bound);
        assert!(decode_with_uncertainty(&bits, 0.6, 8, -1.0).is_err());
    }

    fn bit_vec(len: usize) -> impl Strategy<Value = Vec<Bit>> {
        prop::collection::vec(any::<bool>().prop_map(Bit::from_sign), len)
    }

    proptest! {
        #[test]
        fn horner_matches_naive(bits in bit_vec(64), gamma in 0.3f64..0.9, n in 0usize..=64) {
            let h = partial_sum(&bits, gamma, n).unwrap();
            prop_assert!((h - naive(&bits, gamma, n)).abs() < 1e-13);
        }

        #[test]
        fn uncertainty_bound_covers_true_base(
            bits in bit_vec(40),
            gamma in 0.6f64..0.7,
            shift in -1e-4f64..1e-4,
        ) {
            let truth = partial_sum(&bits, gamma, 40).unwrap();
            let r = decode_with_uncertainty(&bits, gamma + shift, 40, shift.abs()).unwrap();
            prop_assert!((r.estimate - truth).abs() <= r.bound);
        }
    }
}
