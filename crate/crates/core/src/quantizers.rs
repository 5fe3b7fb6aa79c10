//! One-bit quantizer models.
//!
//! Three forms are provided:
//!
//! * [`q_ideal`], the sign function with `Q(0) = −1`;
//! * [`q_flaky`], which agrees with the sign function outside the band
//!   `[−ν, ν)` and defers to a [`FlakyPolicy`] inside it;
//! * [`q2_flaky`], the two-input quantizer `Q_α^ν(u, v)` that applies
//!   [`q_flaky`] to `u + α·v`.
//!
//! The flaky band is half-open: `u = ν` always yields `+1` and `u = −ν`
//! belongs to the band, so the three branches partition the real line.

use std::fmt;
use std::ops::Neg;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{finite, Error, Result};

/// A single output bit, `−1` or `+1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bit {
    Minus,
    Plus,
}

impl Bit {
    pub fn value(self) -> i8 {
        match self {
            Bit::Minus => -1,
            Bit::Plus => 1,
        }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.value())
    }

    /// `+1` when `positive`, `−1` otherwise.
    pub fn from_sign(positive: bool) -> Self {
        if positive {
            Bit::Plus
        } else {
            Bit::Minus
        }
    }

    pub fn from_value(value: i8) -> Option<Self> {
        match value {
            -1 => Some(Bit::Minus),
            1 => Some(Bit::Plus),
            _ => None,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Bit::Minus => '-',
            Bit::Plus => '+',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            '-' => Some(Bit::Minus),
            '+' => Some(Bit::Plus),
            _ => None,
        }
    }
}

impl Neg for Bit {
    type Output = Bit;

    fn neg(self) -> Bit {
        match self {
            Bit::Minus => Bit::Plus,
            Bit::Plus => Bit::Minus,
        }
    }
}

impl fmt::Display for Bit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

/// How a flaky quantizer resolves inputs that fall inside its flaky band.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlakyPolicy {
    AlwaysMinus,
    AlwaysPlus,
    /// Alternates `−1, +1, −1, …` across successive flaky decisions.
    Toggle,
    /// Independent fair coin flips from a ChaCha stream seeded with the value.
    SeededRandom(u64),
}

impl FlakyPolicy {
    /// One representative of every policy kind, with the given seed for the
    /// random one.
    pub fn all(seed: u64) -> [FlakyPolicy; 4] {
        [
            FlakyPolicy::AlwaysMinus,
            FlakyPolicy::AlwaysPlus,
            FlakyPolicy::Toggle,
            FlakyPolicy::SeededRandom(seed),
        ]
    }
}

impl fmt::Display for FlakyPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlakyPolicy::AlwaysMinus => write!(f, "always-minus"),
            FlakyPolicy::AlwaysPlus => write!(f, "always-plus"),
            FlakyPolicy::Toggle => write!(f, "toggle"),
            FlakyPolicy::SeededRandom(seed) => write!(f, "random:{seed}"),
        }
    }
}

impl FromStr for FlakyPolicy {
    type Err = String;

    /// Parses `always-minus`, `always-plus`, `toggle` or `random:<seed>`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "always-minus" => Ok(FlakyPolicy::AlwaysMinus),
            "always-plus" => Ok(FlakyPolicy::AlwaysPlus),
            "toggle" => Ok(FlakyPolicy::Toggle),
            _ => match s.strip_prefix("random:") {
                Some(seed) => seed
                    .parse()
                    .map(FlakyPolicy::SeededRandom)
                    .map_err(|e| format!("bad seed in policy {s:?}: {e}")),
                None => Err(format!(
                    "unknown policy {s:?} (expected always-minus, always-plus, toggle or random:<seed>)"
                )),
            },
        }
    }
}

/// Mutable decision state of a [`FlakyPolicy`].
///
/// One instance belongs to one encoder run; it is not shared.
#[derive(Clone, Debug)]
pub struct PolicyState {
    policy: FlakyPolicy,
    next_toggle: Bit,
    rng: Option<ChaCha8Rng>,
    decisions: u64,
}

impl PolicyState {
    pub fn new(policy: FlakyPolicy) -> Self {
        let rng = match policy {
            FlakyPolicy::SeededRandom(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        Self {
            policy,
            next_toggle: Bit::Minus,
            rng,
            decisions: 0,
        }
    }

    pub fn policy(&self) -> FlakyPolicy {
        self.policy
    }

    /// Number of flaky-band decisions taken so far.
    pub fn decisions(&self) -> u64 {
        self.decisions
    }

    /// Resolves one input that landed in the flaky band.
    pub fn decide(&mut self) -> Bit {
        self.decisions += 1;
        match self.policy {
            FlakyPolicy::AlwaysMinus => Bit::Minus,
            FlakyPolicy::AlwaysPlus => Bit::Plus,
            FlakyPolicy::Toggle => {
                let bit = self.next_toggle;
                self.next_toggle = -bit;
                bit
            }
            FlakyPolicy::SeededRandom(_) => {
                let rng = self.rng.as_mut().expect("random policy always carries an rng");
                Bit::from_sign(rng.random::<bool>())
            }
        }
    }
}

/// Quantizer parameters: flaky tolerance `nu`, two-input amplifier `alpha`
/// and the flaky-band policy.
///
/// `nu = 0` is the ideal quantizer. For the scalar (beta-encoder) form that
/// means the sign function of [`q_ideal`]; for the two-input form it means
/// `Q_α(u, v) = +1` iff `u + α·v ≥ 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantizerSpec {
    pub nu: f64,
    pub alpha: f64,
    pub policy: FlakyPolicy,
}

impl QuantizerSpec {
    pub fn new(nu: f64, alpha: f64, policy: FlakyPolicy) -> Result<Self> {
        finite("nu", nu)?;
        finite("alpha", alpha)?;
        if nu < 0.0 {
            return Err(Error::InvalidParameter {
                name: "nu",
                value: nu,
                reason: "flaky tolerance must be non-negative",
            });
        }
        if alpha <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: alpha,
                reason: "amplifier must be positive",
            });
        }
        Ok(Self { nu, alpha, policy })
    }

    /// Ideal quantizer with the given amplifier.
    pub fn ideal(alpha: f64) -> Result<Self> {
        Self::new(0.0, alpha, FlakyPolicy::AlwaysMinus)
    }

    /// Ideal scalar quantizer; `alpha` is irrelevant for the scalar form.
    pub fn ideal_scalar() -> Self {
        Self {
            nu: 0.0,
            alpha: 1.0,
            policy: FlakyPolicy::AlwaysMinus,
        }
    }

    pub fn is_ideal(&self) -> bool {
        self.nu == 0.0
    }

    pub fn policy_state(&self) -> PolicyState {
        PolicyState::new(self.policy)
    }
}

/// Sign quantizer: `−1` for `u ≤ 0`, `+1` for `u > 0`.
pub fn q_ideal(u: f64) -> Result<Bit> {
    finite("quantizer input", u)?;
    Ok(Bit::from_sign(u > 0.0))
}

/// Flaky quantizer `Q^ν`: `−1` below `−ν`, `+1` from `ν` up, policy decision
/// on `[−ν, ν)`.
pub fn q_flaky(u: f64, spec: &QuantizerSpec, state: &mut PolicyState) -> Result<Bit> {
    finite("quantizer input", u)?;
    Ok(flaky_unchecked(u, spec.nu, state))
}

/// Two-input quantizer `Q_α^ν(u, v)`, i.e. [`q_flaky`] applied to `u + α·v`.
pub fn q2_flaky(u: f64, v: f64, spec: &QuantizerSpec, state: &mut PolicyState) -> Result<Bit> {
    finite("quantizer input u", u)?;
    finite("quantizer input v", v)?;
    Ok(flaky_unchecked(u + spec.alpha * v, spec.nu, state))
}

/// Scalar quantizer used by the beta-encoders: the sign function of
/// [`q_ideal`] when `spec.nu == 0`, [`q_flaky`] otherwise.
pub fn q_scalar(u: f64, spec: &QuantizerSpec, state: &mut PolicyState) -> Result<Bit> {
    if spec.is_ideal() {
        q_ideal(u)
    } else {
        q_flaky(u, spec, state)
    }
}

#[inline]
fn flaky_unchecked(s: f64, nu: f64, state: &mut PolicyState) -> Bit {
    if s >= nu {
        Bit::Plus
    } else if s < -nu {
        Bit::Minus
    } else {
        state.decide()
    }
}
