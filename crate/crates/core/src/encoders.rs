//! The four encoding recursions.
//!
//! | scheme | recursion | reconstruction |
//! |---|---|---|
//! | beta | `u₁ = βx`, `u_{j+1} = β(u_j − b_j)`, `b_j = Q(u_j)` | `Σ b_j β^{−j}` |
//! | leaky beta | `u₁ = x`, `u_{j+1} = λβ(u_j − b_j)` | `Σ b_j γ^{j−1}`, `γ = 1/(λβ)` |
//! | GRE | `u₀ = 0`, `u₁ = x`, `u_{n+1} = u_n + u_{n−1} − b_n` | `Σ b_n φ^{−n}` |
//! | leaky GRE | `u_{n+1} = λ₁u_n + λ₁λ₂u_{n−1} − b_n` | `Σ b_n γ^n` |
//!
//! In both golden ratio encoders `b_{n+1} = Q_α^ν(u_n, u_{n+1})`, so one step
//! is exactly the piecewise affine map `(u, v) ↦ (v, λ₁λ₂u + λ₁v − Q(u, v))`.

use serde::{Deserialize, Serialize};

use crate::error::{finite, Error, Result};
use crate::quantizers::{q2_flaky, q_scalar, Bit, PolicyState, QuantizerSpec};
use crate::INV_PHI;

/// States whose magnitude exceeds this are treated as divergence.
pub const STATE_CEILING: f64 = 100.0;

/// Leak factors of the two delay elements of a golden ratio encoder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeakParams {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl LeakParams {
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        Ok(Self {
            lambda1: leak_factor("lambda1", lambda1)?,
            lambda2: leak_factor("lambda2", lambda2)?,
        })
    }

    /// Ideal delays, `λ₁ = λ₂ = 1`.
    pub fn ideal() -> Self {
        Self {
            lambda1: 1.0,
            lambda2: 1.0,
        }
    }

    pub fn uniform(lambda: f64) -> Result<Self> {
        Self::new(lambda, lambda)
    }

    pub fn effective_gamma(&self) -> f64 {
        effective_gamma(self.lambda1, self.lambda2)
    }
}

fn leak_factor(name: &'static str, value: f64) -> Result<f64> {
    finite(name, value)?;
    if value > 0.0 && value <= 1.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "leak factor must lie in (0, 1]",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Beta,
    LeakyBeta,
    Gre,
    LeakyGre,
}

/// Bits and state trace of one encoder run.
///
/// `states` holds `u₀ … u_{N+1}`. For the golden ratio encoders `u₀ = 0` and
/// `u₁ = x`; the beta-encoders have no `u₀` and store `0` in that slot, with
/// `u₁ = βx` (ideal) or `u₁ = x` (leaky).
#[derive(Clone, Debug, PartialEq)]
pub struct EncodeResult {
    pub scheme: Scheme,
    pub bits: Vec<Bit>,
    pub states: Vec<f64>,
    pub effective_gamma: f64,
}

impl EncodeResult {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Value represented by the first `n` bits in base `gamma`, using the
    /// weight convention of the scheme that produced them.
    pub fn value_in_base(&self, gamma: f64, n: usize) -> Result<f64> {
        let sum = crate::decoder::partial_sum(&self.bits, gamma, n)?;
        Ok(match self.scheme {
            Scheme::LeakyBeta => sum / gamma,
            _ => sum,
        })
    }

    pub fn max_abs_state(&self) -> f64 {
        self.states.iter().fold(0.0, |m, u| m.max(u.abs()))
    }
}

fn check_bit_count(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidParameter {
            name: "N",
            value: 0.0,
            reason: "at least one bit must be requested",
        })
    } else {
        Ok(())
    }
}

fn check_input(x: f64) -> Result<f64> {
    finite("x", x)?;
    if (-1.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(Error::InvalidParameter {
            name: "x",
            value: x,
            reason: "input must lie in [-1, 1]",
        })
    }
}

fn check_beta(beta: f64) -> Result<f64> {
    finite("beta", beta)?;
    if beta > 1.0 && beta <= 2.0 {
        Ok(beta)
    } else {
        Err(Error::InvalidParameter {
            name: "beta",
            value: beta,
            reason: "base must lie in (1, 2]",
        })
    }
}

fn guard(step: usize, u: f64) -> Result<f64> {
    if u.is_finite() && u.abs() <= STATE_CEILING {
        Ok(u)
    } else {
        Err(Error::StateDiverged {
            step,
            magnitude: u.abs(),
            ceiling: STATE_CEILING,
        })
    }
}

fn beta_recursion(
    scheme: Scheme,
    u1: f64,
    multiplier: f64,
    n: usize,
    q: &QuantizerSpec,
    policy: &mut PolicyState,
) -> Result<EncodeResult> {
    let mut bits = Vec::with_capacity(n);
    let mut states = Vec::with_capacity(n + 2);
    states.push(0.0);
    states.push(u1);
    let mut u = u1;
    for j in 1..=n {
        let b = q_scalar(u, q, policy)?;
        bits.push(b);
        u = guard(j + 1, multiplier * (u - b.as_f64()))?;
        states.push(u);
    }
    Ok(EncodeResult {
        scheme,
        bits,
        states,
        effective_gamma: 1.0 / multiplier,
    })
}

/// Beta-encoder `u₁ = βx`, `b_j = Q(u_j)`, `u_{j+1} = β(u_j − b_j)`.
///
/// With `q.nu ≤ ε` and `1 < β < (2+ε)/(1+ε)` the output satisfies
/// `|x − Σ_{j≤N} b_j β^{−j}| ≤ (1+ε)β^{−N}`.
pub fn beta_encode(x: f64, beta: f64, n: usize, q: &QuantizerSpec) -> Result<EncodeResult> {
    beta_encode_with(x, beta, n, q, &mut q.policy_state())
}

pub fn beta_encode_with(
    x: f64,
    beta: f64,
    n: usize,
    q: &QuantizerSpec,
    policy: &mut PolicyState,
) -> Result<EncodeResult> {
    let x = check_input(x)?;
    let beta = check_beta(beta)?;
    check_bit_count(n)?;
    beta_recursion(Scheme::Beta, beta * x, beta, n, q, policy)
}

/// Beta-encoder with a leaky integrator: `u₁ = x`, `u_{j+1} = λβ(u_j − b_j)`.
///
/// The bits expand `x` as `Σ_{j≥1} b_j γ^{j−1}` with `γ = 1/(λβ)`; see
/// [`leaky_beta_bound`].
pub fn beta_encode_leaky(
    x: f64,
    beta: f64,
    lambda: f64,
    n: usize,
    q: &QuantizerSpec,
) -> Result<EncodeResult> {
    beta_encode_leaky_with(x, beta, lambda, n, q, &mut q.policy_state())
}

pub fn beta_encode_leaky_with(
    x: f64,
    beta: f64,
    lambda: f64,
    n: usize,
    q: &QuantizerSpec,
    policy: &mut PolicyState,
) -> Result<EncodeResult> {
    let x = check_input(x)?;
    let beta = check_beta(beta)?;
    let lambda = leak_factor("lambda", lambda)?;
    check_bit_count(n)?;
    let effective = lambda * beta;
    if effective <= 1.0 {
        return Err(Error::InvalidParameter {
            name: "lambda*beta",
            value: effective,
            reason: "effective base must exceed 1",
        });
    }
    beta_recursion(Scheme::LeakyBeta, x, effective, n, q, policy)
}

/// Error bound `C·β̃^{−(n−1)}`, `C = 1/(β̃ − 1)`, for the first `n` bits of a
/// leaky beta-encoder run reconstructed as `Σ_{j≤n} b_j γ^{j−1}`.
pub fn leaky_beta_bound(effective_beta: f64, n: usize) -> f64 {
    effective_beta.powi(1 - n as i32) / (effective_beta - 1.0)
}

/// Ideal-delay golden ratio encoder; identical to [`gre_encode_leaky`] with
/// `λ₁ = λ₂ = 1`.
pub fn gre_encode(x: f64, n: usize, q: &QuantizerSpec) -> Result<EncodeResult> {
    gre_encode_leaky(x, LeakParams::ideal(), n, q)
}

pub fn gre_encode_with(
    x: f64,
    n: usize,
    q: &QuantizerSpec,
    policy: &mut PolicyState,
) -> Result<EncodeResult> {
    gre_encode_leaky_with(x, LeakParams::ideal(), n, q, policy)
}

/// Leaky golden ratio encoder.
///
/// For certified `(α, ν)` the bits satisfy
/// `|x − Σ_{n≤N} b_n γ^n| ≤ γ^{N+1}/(1 − γ)` with `γ = effective_gamma(λ₁, λ₂)`.
/// Fails with [`Error::StateDiverged`] once `|u_n|` exceeds [`STATE_CEILING`].
pub fn gre_encode_leaky(
    x: f64,
    leak: LeakParams,
    n: usize,
    q: &QuantizerSpec,
) -> Result<EncodeResult> {
    gre_encode_leaky_with(x, leak, n, q, &mut q.policy_state())
}

pub fn gre_encode_leaky_with(
    x: f64,
    leak: LeakParams,
    n: usize,
    q: &QuantizerSpec,
    policy: &mut PolicyState,
) -> Result<EncodeResult> {
    let x = check_input(x)?;
    check_bit_count(n)?;
    let scheme = if leak == LeakParams::ideal() {
        Scheme::Gre
    } else {
        Scheme::LeakyGre
    };
    gre_orbit(0.0, x, leak, n, q, policy).map(|(bits, states)| EncodeResult {
        scheme,
        bits,
        states,
        effective_gamma: leak.effective_gamma(),
    })
}

/// One step of the leaky GRE recursion on the state pair `(u, v)`; returns the
/// emitted bit and the next state `v'` so that the new pair is `(v, v')`.
#[inline]
pub fn gre_step(
    u: f64,
    v: f64,
    leak: LeakParams,
    q: &QuantizerSpec,
    policy: &mut PolicyState,
) -> Result<(Bit, f64)> {
    let b = q2_flaky(u, v, q, policy)?;
    let next = leak.lambda1 * v + leak.lambda1 * leak.lambda2 * u - b.as_f64();
    Ok((b, next))
}

/// Runs `n` GRE steps from an arbitrary initial pair.
pub(crate) fn gre_orbit(
    u0: f64,
    u1: f64,
    leak: LeakParams,
    n: usize,
    q: &QuantizerSpec,
    policy: &mut PolicyState,
) -> Result<(Vec<Bit>, Vec<f64>)> {
    let mut bits = Vec::with_capacity(n);
    let mut states = Vec::with_capacity(n + 2);
    states.push(u0);
    states.push(u1);
    let (mut u, mut v) = (u0, u1);
    for step in 1..=n {
        let (b, next) = gre_step(u, v, leak, q, policy)?;
        bits.push(b);
        let next = guard(step + 1, next)?;
        states.push(next);
        (u, v) = (v, next);
    }
    Ok((bits, states))
}

/// Base `γ` in which a leaky GRE bitstream expands its input: the positive
/// root of `λ₁λ₂γ² + λ₁γ − 1 = 0`.
pub fn effective_gamma(lambda1: f64, lambda2: f64) -> f64 {
    // 2 / (λ₁ + √(λ₁² + 4λ₁λ₂)) avoids the cancellation in the textbook form.
    2.0 / (lambda1 + (lambda1 * lambda1 + 4.0 * lambda1 * lambda2).sqrt())
}

/// Equal leak factors `λ₁ = λ₂ = φ⁻¹/γ` that produce the base `gamma`.
pub fn leak_for_gamma(gamma: f64) -> Result<LeakParams> {
    finite("gamma", gamma)?;
    if gamma < INV_PHI {
        return Err(Error::InvalidParameter {
            name: "gamma",
            value: gamma,
            reason: "bases below 1/phi would need leak factors above 1",
        });
    }
    LeakParams::uniform(INV_PHI / gamma)
}
