//! Structure of golden ratio expansions of zero.
//!
//! Started from `(u₀, u₁) = (0, 0)` with `α > ν`, the ideal-delay golden ratio
//! encoder returns to the origin every three steps, so its bits come in
//! blocks `(s, −s, −s)` and the associated polynomial factors as
//! `(1 − t − t²)·R(t)` with `R(t) = Σ_j ±t^{3j}`.

use serde::Serialize;

use crate::error::{finite, Error, Result};
use crate::polynomial::{poly_eval, TernaryPolynomial};
use crate::quantizers::Bit;
use crate::INV_PHI;

/// Lower bound on `|R(t)|` for `t < φ⁻¹`, attained in the limit `t → φ⁻¹`.
pub const RN_FLOOR: f64 = 0.691;
/// Lower bound on `|P′(φ⁻¹)|` for every factored zero polynomial.
pub const DERIVATIVE_FLOOR: f64 = 1.545;

/// `R(t) = Σ_j signs[j]·t^{3j}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FactoredZeroPoly {
    pub r_coeffs: Vec<i8>,
    pub n_blocks: usize,
}

impl FactoredZeroPoly {
    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        if signs.is_empty() || signs.iter().any(|s| s.abs() != 1) {
            return Err(Error::StructureViolation(
                "block signs must be a nonempty sequence of +1/-1".into(),
            ));
        }
        let mut r_coeffs = vec![0; 3 * (signs.len() - 1) + 1];
        for (j, &s) in signs.iter().enumerate() {
            r_coeffs[3 * j] = s;
        }
        Ok(Self {
            r_coeffs,
            n_blocks: signs.len(),
        })
    }

    pub fn signs(&self) -> impl Iterator<Item = i8> + '_ {
        self.r_coeffs.iter().step_by(3).copied()
    }

    pub fn value(&self, t: f64) -> f64 {
        let t3 = t * t * t;
        self.signs()
            .collect::<Vec<_>>()
            .iter()
            .rev()
            .fold(0.0, |acc, &s| acc * t3 + f64::from(s))
    }

    /// The product `(1 − t − t²)·R(t)` as a ternary polynomial.
    pub fn expand(&self) -> TernaryPolynomial {
        let mut c = Vec::with_capacity(3 * self.n_blocks);
        for s in self.signs() {
            c.extend([s, -s, -s]);
        }
        TernaryPolynomial::new(c).expect("block signs are +1/-1")
    }
}

/// Offset `o ∈ {0, 1, 2}` such that every complete block
/// `(b[o+3j], b[o+3j+1], b[o+3j+2])` reads `(s, −s, −s)`; the first offset
/// with at least one complete block that works is returned.
pub fn period3_alignment(bits: &[Bit]) -> Option<usize> {
    (0..3).find(|&o| {
        let blocks = bits.get(o..).map_or(0, |rest| rest.len() / 3);
        blocks > 0
            && bits[o..o + 3 * blocks]
                .chunks_exact(3)
                .all(|b| b[1] == -b[0] && b[2] == -b[0])
    })
}

pub fn check_period3(bits: &[Bit]) -> bool {
    period3_alignment(bits).is_some()
}

/// Divides `p` by `1 − t − t²` in integer arithmetic and checks that the
/// quotient has the sparse `Σ ±t^{3j}` form.
pub fn factor_zero_poly(p: &TernaryPolynomial) -> Result<FactoredZeroPoly> {
    let c: Vec<i64> = p.coeffs().iter().map(|&v| i64::from(v)).collect();
    let n = c.len() - 1;
    if n % 3 != 2 {
        return Err(Error::StructureViolation(format!(
            "degree {n} is not 2 mod 3"
        )));
    }
    let mut q = vec![0i64; n - 1];
    for i in 0..q.len() {
        let back1 = if i >= 1 { q[i - 1] } else { 0 };
        let back2 = if i >= 2 { q[i - 2] } else { 0 };
        q[i] = c[i] + back1 + back2;
    }
    for i in 0..=n {
        let at = |k: isize| -> i64 {
            usize::try_from(k).ok().and_then(|k| q.get(k)).copied().unwrap_or(0)
        };
        let i = i as isize;
        let product = at(i) - at(i - 1) - at(i - 2);
        if product != c[i as usize] {
            return Err(Error::StructureViolation(format!(
                "nonzero remainder at degree {i}"
            )));
        }
    }
    for (i, &v) in q.iter().enumerate() {
        let ok = if i % 3 == 0 { v.abs() == 1 } else { v == 0 };
        if !ok {
            return Err(Error::StructureViolation(format!(
                "quotient coefficient {v} at degree {i} breaks the ±t^(3j) form"
            )));
        }
    }
    Ok(FactoredZeroPoly {
        r_coeffs: q.iter().map(|&v| v as i8).collect(),
        n_blocks: q.len().div_ceil(3),
    })
}

/// `|R(t)|` together with the bound `1 − t³/(1 − t³)`; fails if the value
/// falls below the bound.
pub fn rn_magnitude_bound(r: &FactoredZeroPoly, t: f64) -> Result<(f64, f64)> {
    finite("t", t)?;
    if !(0.0..INV_PHI).contains(&t) {
        return Err(Error::InvalidParameter {
            name: "t",
            value: t,
            reason: "must lie in [0, 1/phi)",
        });
    }
    let t3 = t * t * t;
    let bound = 1.0 - t3 / (1.0 - t3);
    let value = r.value(t).abs();
    if value < bound * (1.0 - 1e-12) {
        return Err(Error::BoundViolated {
            what: "|R(t)|",
            value,
            bound,
        });
    }
    Ok((value, bound))
}

/// `|P′(φ⁻¹)|` for a factorable zero polynomial; fails below `1.545`.
pub fn derivative_bound_at_root(p: &TernaryPolynomial) -> Result<f64> {
    factor_zero_poly(p)?;
    let (_, d) = poly_eval(p, INV_PHI);
    let value = d.abs();
    if value < DERIVATIVE_FLOOR {
        return Err(Error::BoundViolated {
            what: "|P'(1/phi)|",
            value,
            bound: DERIVATIVE_FLOOR,
        });
    }
    Ok(value)
}
