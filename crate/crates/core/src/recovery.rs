//! Estimating the base `γ` of an encoder from its bitstreams.
//!
//! Two sources of a polynomial with a root at (approximately) `γ`:
//!
//! * an expansion of `0`: `P_n(t) = b_1 + Σ_{j≥1} b_{j+1} t^j`;
//! * a pair of expansions of `x` and `−x`: with `d_j = b_j + c_j` and `k` the
//!   number of leading zeros of `d`, `P̄(t) = Σ_i (d_{i+k+1}/2) t^i`.
//!
//! In both cases `γ` is approximated by the first positive root of the
//! polynomial. Below `0.6491` every polynomial with coefficients in
//! `{−1, 0, 1}` and constant term `±1` has at most one root and a derivative
//! bounded away from zero wherever it is small, which turns a small residual
//! into a small root error.

use serde::Serialize;

use crate::error::{finite, Error, Result};
use crate::polynomial::{poly_eval, TernaryPolynomial};
use crate::quantizers::Bit;
use crate::{INV_PHI, TRANSVERSALITY_CEILING};

/// Known transversality constant on `[0, 0.63]`.
pub const DELTA_063: f64 = 0.07;
/// Known transversality constant on `[0, 0.6491]`.
pub const DELTA_06491: f64 = 0.00008;

const NEWTON_START: f64 = 0.618;
const NEWTON_STEPS: usize = 10;
const NEWTON_MARGIN: f64 = 0.05;
const MIN_SLOPE: f64 = 1e-9;
const SCAN_STEP: f64 = 1e-3;

/// Bracket `[γ_low, γ_high]` for the unknown base and the transversality
/// constant `delta` valid on `[0, γ_high]`.
///
/// `search_high` is the right end of the root search. It defaults to
/// `0.6491`; raising it lets the same machinery produce estimates for bases
/// beyond the proven range, which are then reported as
/// [`Guarantee::EmpiricalOnly`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransversalityContext {
    pub gamma_low: f64,
    pub gamma_high: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub search_high: f64,
}

impl Default for TransversalityContext {
    fn default() -> Self {
        Self::new(INV_PHI, TRANSVERSALITY_CEILING).expect("default bracket is valid")
    }
}

impl TransversalityContext {
    /// Context for `γ ∈ [gamma_low, gamma_high]`. `delta` is `0.07` up to
    /// `γ_high = 0.63` and `0.00008` above, the smaller constant being the
    /// conservative choice between the two known anchors.
    pub fn new(gamma_low: f64, gamma_high: f64) -> Result<Self> {
        finite("gamma_low", gamma_low)?;
        finite("gamma_high", gamma_high)?;
        if !(gamma_low > 0.0) {
            return Err(Error::InvalidParameter {
                name: "gamma_low",
                value: gamma_low,
                reason: "must be positive",
            });
        }
        if gamma_high < gamma_low || gamma_high > TRANSVERSALITY_CEILING {
            return Err(Error::InvalidParameter {
                name: "gamma_high",
                value: gamma_high,
                reason: "must lie in [gamma_low, 0.6491]",
            });
        }
        let delta = if gamma_high <= 0.63 {
            DELTA_063
        } else {
            DELTA_06491
        };
        Ok(Self {
            gamma_low,
            gamma_high,
            delta,
            epsilon: TRANSVERSALITY_CEILING - gamma_high,
            search_high: TRANSVERSALITY_CEILING,
        })
    }

    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        finite("delta", delta)?;
        if delta <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "delta",
                value: delta,
                reason: "must be positive",
            });
        }
        self.delta = delta;
        Ok(self)
    }

    pub fn with_search_high(mut self, search_high: f64) -> Result<Self> {
        finite("search_high", search_high)?;
        if search_high < self.gamma_high || search_high >= 1.0 {
            return Err(Error::InvalidParameter {
                name: "search_high",
                value: search_high,
                reason: "must lie in [gamma_high, 1)",
            });
        }
        self.search_high = search_high;
        Ok(self)
    }

    /// Residual accepted for a root of a polynomial built from `n` bits.
    pub fn tolerance(&self, n: usize) -> f64 {
        self.gamma_low.powi(n as i32)
    }

    /// `γ^n / (δ(1 − γ))`, the guaranteed accuracy of an `n`-bit estimate.
    pub fn error_bound(&self, gamma: f64, n: usize) -> f64 {
        gamma.powi(n as i32) / (self.delta * (1.0 - gamma))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Guarantee {
    Proven,
    EmpiricalOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RecoveryResult {
    pub gamma_estimate: f64,
    pub poly_degree_used: usize,
    pub residual: f64,
    pub tolerance: f64,
    pub shift_k: Option<usize>,
    pub guarantee: Guarantee,
}

/// Number of leading zeros `k` of `d = b + c` and the polynomial
/// `Σ_i (d_{i+k+1}/2) t^i`. Streams of unequal length are cut to the shorter.
pub fn difference_stream(b: &[Bit], c: &[Bit]) -> Result<(TernaryPolynomial, usize)> {
    let len = b.len().min(c.len());
    let d: Vec<i8> = b[..len]
        .iter()
        .zip(&c[..len])
        .map(|(x, y)| (x.value() + y.value()) / 2)
        .collect();
    let k = d.iter().position(|&v| v != 0).ok_or(Error::NoSignal { len })?;
    let poly = TernaryPolynomial::new(d[k..].to_vec())?;
    Ok((poly, k))
}

/// Smallest `N` with `γ^{N+1} ≤ (1 − γ)εδ`, or `None` when `ε ≤ 0` leaves
/// no such `N`.
pub fn required_bits(ctx: &TransversalityContext, gamma: f64) -> Option<usize> {
    let target = (1.0 - gamma) * ctx.epsilon * ctx.delta;
    if !(target > 0.0) || !(gamma > 0.0 && gamma < 1.0) {
        return None;
    }
    let mut power = gamma;
    let mut n = 0;
    while power > target {
        power *= gamma;
        n += 1;
    }
    Some(n)
}

fn accepts(p: &TernaryPolynomial, t: f64, tol: f64) -> Option<f64> {
    let residual = p.value(t).abs();
    (residual <= tol.max(p.rounding_bound(t))).then_some(residual)
}

fn sign_change_before(p: &TernaryPolynomial, end: f64) -> Option<(f64, f64)> {
    let mut lo = 0.0;
    let mut vlo = p.value(lo);
    let steps = (end / SCAN_STEP).ceil() as usize;
    for i in 1..=steps {
        let hi = (i as f64 * SCAN_STEP).min(end);
        let vhi = p.value(hi);
        if vhi == 0.0 || (vlo > 0.0) != (vhi > 0.0) {
            return Some((lo, hi));
        }
        lo = hi;
        vlo = vhi;
    }
    None
}

fn bisect(p: &TernaryPolynomial, mut lo: f64, mut hi: f64) -> f64 {
    let positive_lo = p.value(lo) > 0.0;
    if p.value(hi) == 0.0 {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = p.value(mid);
        if v == 0.0 {
            return mid;
        }
        if (v > 0.0) == positive_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if p.value(lo).abs() <= p.value(hi).abs() {
        lo
    } else {
        hi
    }
}

fn newton(p: &TernaryPolynomial, limit: f64) -> Option<f64> {
    let mut x = NEWTON_START;
    for _ in 0..NEWTON_STEPS {
        let (v, d) = poly_eval(p, x);
        if v == 0.0 {
            return Some(x);
        }
        if d.abs() < MIN_SLOPE {
            return None;
        }
        x -= v / d;
        if !(0.0..=limit).contains(&x) {
            return None;
        }
    }
    Some(x)
}

/// First root of `p` in `[0, ctx.search_high]` with `|p(γ̃)| ≤ tol`.
///
/// Ten Newton steps from `0.618`; if a step leaves `[0, search_high + 0.05]`,
/// meets a slope below `1e−9`, or the end point fails the residual test, the
/// earliest sign change on a `10⁻³` grid is bisected instead. Residuals below
/// the rounding error of evaluating `p` are accepted.
pub fn first_root(p: &TernaryPolynomial, ctx: &TransversalityContext, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            value: tol,
            reason: "must be positive",
        });
    }
    let high = ctx.search_high;
    if let Some(x) = newton(p, high + NEWTON_MARGIN) {
        let in_range = (0.0..=high).contains(&x);
        // Above the ceiling there may be several roots; make sure x is the first.
        let first = x <= TRANSVERSALITY_CEILING || sign_change_before(p, x - SCAN_STEP).is_none();
        if in_range && first && accepts(p, x, tol).is_some() {
            return Ok(x);
        }
    }
    let no_root = Error::NoRoot {
        degree: p.degree(),
        ceiling: high,
    };
    let (lo, hi) = sign_change_before(p, high).ok_or(no_root.clone())?;
    let x = bisect(p, lo, hi);
    accepts(p, x, tol).map(|_| x).ok_or(no_root)
}

/// Root of `p` with the acceptance tolerance `ctx.gamma_low^n`, `n` being the
/// number of coefficients, and the matching guarantee flag.
pub fn recover_gamma(p: &TernaryPolynomial, ctx: &TransversalityContext) -> Result<RecoveryResult> {
    let n = p.degree() + 1;
    let tolerance = ctx.tolerance(n);
    let gamma = first_root(p, ctx, tolerance)?;
    let proven = ctx.gamma_high <= TRANSVERSALITY_CEILING
        && required_bits(ctx, ctx.gamma_high).is_some_and(|need| p.degree() >= need)
        && (ctx.gamma_low..=ctx.gamma_high).contains(&gamma);
    Ok(RecoveryResult {
        gamma_estimate: gamma,
        poly_degree_used: p.degree(),
        residual: p.value(gamma).abs(),
        tolerance,
        shift_k: None,
        guarantee: if proven {
            Guarantee::Proven
        } else {
            Guarantee::EmpiricalOnly
        },
    })
}

/// Base estimate from a single expansion of `0`.
pub fn recover_gamma_from_zero(bits: &[Bit], ctx: &TransversalityContext) -> Result<RecoveryResult> {
    recover_gamma(&TernaryPolynomial::from_bits(bits)?, ctx)
}

/// Base estimate from expansions `b` of `x` and `c` of `−x`.
pub fn recover_gamma_from_pair(
    b: &[Bit],
    c: &[Bit],
    ctx: &TransversalityContext,
) -> Result<RecoveryResult> {
    let (poly, k) = difference_stream(b, c)?;
    let mut result = recover_gamma(&poly, ctx)?;
    result.shift_k = Some(k);
    Ok(result)
}

/// Tries the pairs in order and returns the first successful estimate, along
/// with the shift `k` of every pair (`None` where `b + c ≡ 0`).
pub fn recover_gamma_from_pairs(
    pairs: &[(Vec<Bit>, Vec<Bit>)],
    ctx: &TransversalityContext,
) -> Result<(RecoveryResult, Vec<Option<usize>>)> {
    let shifts: Vec<Option<usize>> = pairs
        .iter()
        .map(|(b, c)| difference_stream(b, c).ok().map(|(_, k)| k))
        .collect();
    let mut last = Error::NoSignal { len: 0 };
    for (b, c) in pairs {
        match recover_gamma_from_pair(b, c, ctx) {
            Ok(result) => return Ok((result, shifts)),
            Err(e) => last = e,
        }
    }
    Err(last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoders::{gre_encode, gre_encode_leaky, LeakParams};
    use crate::quantizers::{FlakyPolicy, QuantizerSpec};
    use proptest::prelude::*;

    fn bits(values: &[i8]) -> Vec<Bit> {
        values.iter().map(|&v| Bit::from_value(v).unwrap()).collect()
    }

    fn poly(c: &[i8]) -> TernaryPolynomial {
        TernaryPolynomial::new(c.to_vec()).unwrap()
    }

    #[test]
    fn difference_hand_example() {
        let (p, k) = difference_stream(&bits(&[1, -1, -1, 1]), &bits(&[-1, 1, 1, 1])).unwrap();
        assert_eq!(k, 3);
        assert_eq!(p.coeffs(), &[1]);
    }

    #[test]
    fn difference_of_equal_streams() {
        let b = bits(&[-1, 1, 1, -1, 1]);
        let (p, k) = difference_stream(&b, &b).unwrap();
        assert_eq!(k, 0);
        assert_eq!(p.coeffs(), &[-1, 1, 1, -1, 1]);
    }

    #[test]
    fn difference_truncates_to_shorter() {
        let (p, k) = difference_stream(&bits(&[1, 1, 1]), &bits(&[-1, 1])).unwrap();
        assert_eq!((p.coeffs(), k), (&[1i8][..], 1));
    }

    #[test]
    fn ideal_pair_has_no_signal() {
        let q = QuantizerSpec::ideal(2.0).unwrap();
        let b = gre_encode(0.4, 40, &q).unwrap().bits;
        let c = gre_encode(-0.4, 40, &q).unwrap().bits;
        assert_eq!(difference_stream(&b, &c), Err(Error::NoSignal { len: 40 }));
        let ctx = TransversalityContext::default();
        assert!(matches!(
            recover_gamma_from_pair(&b, &c, &ctx),
            Err(Error::NoSignal { .. })
        ));
    }

    #[test]
    fn leaky_pair_difference_is_ternary() {
        let leak = LeakParams::uniform(0.95).unwrap();
        let q = QuantizerSpec::new(0.3, 2.0, FlakyPolicy::SeededRandom(11)).unwrap();
        let b = gre_encode_leaky(0.4, leak, 64, &q).unwrap().bits;
        let c = gre_encode_leaky(-0.4, leak, 64, &q).unwrap().bits;
        let (p, k) = difference_stream(&b, &c).unwrap();
        assert!(k < 64);
        assert_eq!(p.coeffs()[0].abs(), 1);
        assert!(p.coeffs().iter().all(|c| c.abs() <= 1));
    }

    #[test]
    fn golden_root() {
        let ctx = TransversalityContext::default();
        let r = first_root(&poly(&[1, -1, -1]), &ctx, 1e-12).unwrap();
        assert!((r - INV_PHI).abs() < 1e-12);
    }

    #[test]
    fn root_at_one_is_out_of_range() {
        let ctx = TransversalityContext::default();
        let err = first_root(&poly(&[1, -1, -1, 1]), &ctx, 1e-12).unwrap_err();
        assert!(matches!(err, Error::NoRoot { degree: 3, .. }));
    }

    #[test]
    fn bisection_fallback_finds_first_root() {
        // 1 − t only vanishes at t = 1.
        let ctx = TransversalityContext::default();
        assert!(first_root(&poly(&[1, -1]), &ctx, 1e-12).is_err());
        let p = poly(&[1, -1, -1, -1, -1, -1, -1, -1]);
        let r = first_root(&p, &ctx, 1e-12).unwrap();
        assert!(p.value(r).abs() < 1e-12);
        assert!(r > 0.5 && r < 0.51);
    }

    #[test]
    fn rejects_nonpositive_tolerance() {
        let ctx = TransversalityContext::default();
        assert!(first_root(&poly(&[1, -1, -1]), &ctx, 0.0).is_err());
    }

    #[test]
    fn extended_search_checks_earlier_roots() {
        let ctx = TransversalityContext::default().with_search_high(0.9).unwrap();
        let p = poly(&[1, -1, -1]);
        let r = first_root(&p, &ctx, 1e-12).unwrap();
        assert!((r - INV_PHI).abs() < 1e-12);
    }

    #[test]
    fn required_bits_examples() {
        let ctx = TransversalityContext::new(INV_PHI, 0.63).unwrap();
        assert_eq!(ctx.delta, 0.07);
        assert!((ctx.epsilon - 0.0191).abs() < 1e-12);
        let n = required_bits(&ctx, 0.63).unwrap();
        assert!(n <= 16);
        assert_eq!(n, oracle_bits(0.63, 0.0191, 0.07));

        let ctx = TransversalityContext::new(0.4, 0.5).unwrap();
        assert!((ctx.epsilon - 0.1491).abs() < 1e-12);
        let n = required_bits(&ctx, 0.5).unwrap();
        assert_eq!(n, oracle_bits(0.5, 0.1491, 0.07));
        // 0.5^7 = 0.0078 > 0.0052 so six bits are not enough.
        assert_eq!(n, 7);

        let wide = ctx.with_delta(10.0).unwrap();
        assert_eq!(required_bits(&wide, 0.1), Some(0));
        let edge = TransversalityContext::default();
        assert_eq!(required_bits(&edge, 0.6491), None);
    }

    fn oracle_bits(gamma: f64, eps: f64, delta: f64) -> usize {
        // Closed form: N + 1 ≥ log((1−γ)εδ) / log γ.
        let n = ((1.0 - gamma) * eps * delta).ln() / gamma.ln() - 1.0;
        n.ceil().max(0.0) as usize
    }

    #[test]
    fn context_validation() {
        assert!(TransversalityContext::new(0.6, 0.65).is_err());
        assert!(TransversalityContext::new(0.63, 0.62).is_err());
        assert!(TransversalityContext::new(0.0, 0.62).is_err());
        assert_eq!(TransversalityContext::new(0.6, 0.64).unwrap().delta, 0.00008);
        assert!(TransversalityContext::default().with_search_high(0.6).is_err());
        assert!(TransversalityContext::default().with_delta(0.0).is_err());
    }

    #[test]
    fn ideal_gre_zero_expansion() {
        let q = QuantizerSpec::new(0.3, 2.0, FlakyPolicy::SeededRandom(3)).unwrap();
        let bits = gre_encode(0.0, 48, &q).unwrap().bits;
        let r = recover_gamma_from_zero(&bits, &TransversalityContext::default()).unwrap();
        assert!((r.gamma_estimate - INV_PHI).abs() < 1e-6);
        assert!(r.residual <= r.tolerance.max(1e-13));
        // ε = 0 at the ceiling, so nothing is proven there.
        assert_eq!(r.guarantee, Guarantee::EmpiricalOnly);
        let ctx = TransversalityContext::new(0.6, 0.63).unwrap();
        let r = recover_gamma_from_zero(&bits, &ctx).unwrap();
        assert_eq!(r.guarantee, Guarantee::Proven);
    }

    #[test]
    fn leaky_zero_expansion_above_ceiling() {
        let leak = LeakParams::uniform(0.95).unwrap();
        let q = QuantizerSpec::new(0.3, 2.0, FlakyPolicy::SeededRandom(5)).unwrap();
        let bits = gre_encode_leaky(0.0, leak, 40, &q).unwrap().bits;
        let ctx = TransversalityContext::default().with_search_high(0.7).unwrap();
        assert_eq!(ctx.delta, 0.00008);
        let r = recover_gamma_from_zero(&bits, &ctx).unwrap();
        assert_eq!(r.guarantee, Guarantee::EmpiricalOnly);
        assert!((r.gamma_estimate - leak.effective_gamma()).abs() < 1e-3);
    }

    #[test]
    fn pair_recovery_records_shift() {
        let leak = LeakParams::uniform(0.96).unwrap();
        let gamma = leak.effective_gamma();
        let q = QuantizerSpec::new(0.3, 1.9, FlakyPolicy::SeededRandom(17)).unwrap();
        let b = gre_encode_leaky(0.25, leak, 100, &q).unwrap().bits;
        let c = gre_encode_leaky(-0.25, leak, 100, &q).unwrap().bits;
        let ctx = TransversalityContext::new(INV_PHI, 0.6491).unwrap();
        let r = recover_gamma_from_pair(&b, &c, &ctx).unwrap();
        assert!(r.shift_k.is_some());
        assert!((r.gamma_estimate - gamma).abs() < 1e-8);
    }

    #[test]
    fn multiple_pairs_skip_silent_ones() {
        let ideal = QuantizerSpec::ideal(2.0).unwrap();
        let flaky = QuantizerSpec::new(0.3, 2.0, FlakyPolicy::Toggle).unwrap();
        let silent = (
            gre_encode(0.3, 60, &ideal).unwrap().bits,
            gre_encode(-0.3, 60, &ideal).unwrap().bits,
        );
        let live = (
            gre_encode(0.3, 60, &flaky).unwrap().bits,
            gre_encode(-0.3, 60, &flaky).unwrap().bits,
        );
        let ctx = TransversalityContext::default();
        let (r, ks) = recover_gamma_from_pairs(&[silent.clone(), live], &ctx).unwrap();
        assert_eq!(ks[0], None);
        assert!(ks[1].is_some());
        assert_eq!(r.shift_k, ks[1]);
        assert!(recover_gamma_from_pairs(&[silent], &ctx).is_err());
    }

    fn ternary(len: usize) -> impl Strategy<Value = TernaryPolynomial> {
        (prop::bool::ANY, prop::collection::vec(-1i8..=1, len)).prop_map(|(plus, tail)| {
            let mut c = vec![if plus { 1 } else { -1 }];
            c.extend(tail);
            TernaryPolynomial::new(c).unwrap()
        })
    }

    proptest! {
        #[test]
        fn first_root_is_deterministic(p in ternary(20)) {
            let ctx = TransversalityContext::default();
            let a = first_root(&p, &ctx, 1e-10);
            let b = first_root(&p, &ctx, 1e-10);
            match (a, b) {
                (Ok(x), Ok(y)) => prop_assert_eq!(x.to_bits(), y.to_bits()),
                (Err(x), Err(y)) => prop_assert_eq!(x, y),
                _ => prop_assert!(false),
            }
        }

        #[test]
        fn accepted_roots_have_small_residual(p in ternary(24)) {
            let ctx = TransversalityContext::default();
            if let Ok(x) = first_root(&p, &ctx, 1e-10) {
                prop_assert!((0.0..=TRANSVERSALITY_CEILING).contains(&x));
                prop_assert!(p.value(x).abs() <= 1e-10);
                // No sign change strictly before the root.
                let grid = (x / 1e-3) as usize;
                let s0 = p.value(0.0) > 0.0;
                for i in 0..grid.saturating_sub(1) {
                    prop_assert_eq!(p.value(i as f64 * 1e-3) > 0.0, s0);
                }
            }
        }

        #[test]
        fn difference_is_ternary(
            b in prop::collection::vec(any::<bool>(), 1..80),
            c in prop::collection::vec(any::<bool>(), 1..80),
        ) {
            let b: Vec<Bit> = b.into_iter().map(Bit::from_sign).collect();
            let c: Vec<Bit> = c.into_iter().map(Bit::from_sign).collect();
            if let Ok((p, k)) = difference_stream(&b, &c) {
                prop_assert_eq!(p.coeffs()[0].abs(), 1);
                prop_assert!(p.coeffs().iter().all(|v| v.abs() <= 1));
                prop_assert_eq!(p.degree() + k + 1, b.len().min(c.len()));
            }
        }
    }
}
