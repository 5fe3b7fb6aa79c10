//! Polynomials with coefficients in `{−1, 0, +1}` and a `±1` constant term.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantizers::Bit;

/// `Σ c_i t^i` with `c_0 = ±1` and every `c_i ∈ {−1, 0, 1}`.
///
/// Trailing zero coefficients are kept, so `degree()` is the nominal degree
/// (the number of bits the polynomial was built from, minus one).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct TernaryPolynomial {
    coeffs: Vec<i8>,
}

impl TernaryPolynomial {
    pub fn new(coeffs: Vec<i8>) -> Result<Self> {
        match coeffs.first() {
            Some(1) | Some(-1) => {}
            _ => {
                return Err(Error::StructureViolation(
                    "constant term must be +1 or -1".into(),
                ))
            }
        }
        if let Some((i, c)) = coeffs.iter().enumerate().find(|(_, c)| c.abs() > 1) {
            return Err(Error::StructureViolation(format!(
                "coefficient {c} at index {i} is not in {{-1, 0, 1}}"
            )));
        }
        Ok(Self { coeffs })
    }

    /// `P(t) = b_1 + Σ_{j≥1} b_{j+1} t^j`.
    pub fn from_bits(bits: &[Bit]) -> Result<Self> {
        Self::new(bits.iter().map(|b| b.value()).collect())
    }

    pub fn coeffs(&self) -> &[i8] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// The polynomial cut down to degree `degree` (or unchanged if shorter).
    pub fn truncated(&self, degree: usize) -> Self {
        let len = (degree + 1).min(self.coeffs.len());
        Self {
            coeffs: self.coeffs[..len].to_vec(),
        }
    }

    pub fn negated(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn eval(&self, t: f64) -> (f64, f64) {
        poly_eval(self, t)
    }

    pub fn value(&self, t: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * t + f64::from(c))
    }

    /// Upper bound on the rounding error of [`Self::value`] at `t`.
    pub fn rounding_bound(&self, t: f64) -> f64 {
        let at = t.abs();
        let magnitude = self
            .coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * at + f64::from(c.abs()));
        2.0 * self.coeffs.len() as f64 * f64::EPSILON * magnitude
    }
}

impl TryFrom<Vec<i8>> for TernaryPolynomial {
    type Error = Error;

    fn try_from(coeffs: Vec<i8>) -> Result<Self> {
        Self::new(coeffs)
    }
}

impl From<TernaryPolynomial> for Vec<i8> {
    fn from(p: TernaryPolynomial) -> Self {
        p.coeffs
    }
}

impl fmt::Display for TernaryPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let sign = if c > 0 { '+' } else { '-' };
            if first {
                if c < 0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            match i {
                0 => write!(f, "1")?,
                1 => write!(f, "t")?,
                _ => write!(f, "t^{i}")?,
            }
        }
        Ok(())
    }
}

/// Value and derivative of `p` at `t`, by Horner's rule.
pub fn poly_eval(p: &TernaryPolynomial, t: f64) -> (f64, f64) {
    let mut value = 0.0;
    let mut derivative = 0.0;
    for &c in p.coeffs.iter().rev() {
        derivative = derivative * t + value;
        value = value * t + f64::from(c);
    }
    (value, derivative)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::INV_PHI;
    use proptest::prelude::*;

    #[test]
    fn golden_quadratic() {
        let p = TernaryPolynomial::new(vec![1, -1, -1]).unwrap();
        let (v, d) = poly_eval(&p, INV_PHI);
        assert!(v.abs() < 1e-15);
        assert!((d + 1.0 + 2.0 * INV_PHI).abs() < 1e-15);
        assert!((d + 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn double_root_at_one() {
        let p = TernaryPolynomial::new(vec![1, -1, -1, 1]).unwrap();
        assert_eq!(poly_eval(&p, 1.0), (0.0, 0.0));
    }

    #[test]
    fn validation() {
        assert!(TernaryPolynomial::new(vec![]).is_err());
        assert!(TernaryPolynomial::new(vec![0, 1]).is_err());
        assert!(TernaryPolynomial::new(vec![1, 2]).is_err());
        let p = TernaryPolynomial::try_from(vec![-1, 0, 1]).unwrap();
        assert_eq!(p.degree(), 2);
    }

    #[test]
    fn display_and_truncate() {
        let p = TernaryPolynomial::new(vec![1, -1, 0, 1]).unwrap();
        assert_eq!(p.to_string(), "1 - t + t^3");
        assert_eq!(p.truncated(1).coeffs(), &[1, -1]);
        assert_eq!(p.truncated(10), p);
        assert_eq!(p.negated().to_string(), "-1 + t - t^3");
    }

    fn ternary(len: usize) -> impl Strategy<Value = TernaryPolynomial> {
        (
            prop::bool::ANY,
            prop::collection::vec(-1i8..=1, len),
        )
            .prop_map(|(plus, tail)| {
                let mut c = vec![if plus { 1 } else { -1 }];
                c.extend(tail);
                TernaryPolynomial::new(c).unwrap()
            })
    }

    proptest! {
        #[test]
        fn matches_naive_sum(p in ternary(12), t in -1.0f64..1.0) {
            let (v, d) = poly_eval(&p, t);
            let nv: f64 = p.coeffs().iter().enumerate()
                .map(|(i, &c)| f64::from(c) * t.powi(i as i32)).sum();
            let nd: f64 = p.coeffs().iter().enumerate().skip(1)
                .map(|(i, &c)| i as f64 * f64::from(c) * t.powi(i as i32 - 1)).sum();
            prop_assert!((v - nv).abs() < 1e-14);
            prop_assert!((d - nd).abs() < 1e-13);
            prop_assert_eq!(v, p.value(t));
        }
    }
}
