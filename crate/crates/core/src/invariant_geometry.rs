//! Invariant rectangles of the leaky golden ratio encoder.
//!
//! One encoder step is the piecewise affine map
//! `T(u, v) = (v, λ₁λ₂u + λ₁v − Q_α^ν(u, v))`. Its linear part has
//! eigenvalues `ε₁ > 1` and `−ε₂` with `0 < ε₂ < 1`; in the frame of unit
//! eigenvectors `Φ₁ ∝ (1, ε₁)` and `Φ₂ ∝ (−1, ε₂)` the two affine pieces are
//!
//! ```text
//! T₁: (a, c) ↦ (ε₁a − e₁, −ε₂c − e₂)    bit +1
//! T₂: (a, c) ↦ (ε₁a + e₁, −ε₂c + e₂)    bit −1
//! ```
//!
//! where `(0, 1) = e₁Φ₁ + e₂Φ₂`. The rectangle `|a| ≤ h − d`, `|c| ≤ r` is
//! mapped into itself, with margin `μ` in frame units, as long as `T₁` is only
//! applied where `a ≥ −d` and `T₂` only where `a ≤ d`. The flaky quantizer
//! respects that split when its uncertain strip `|u + αv| < ν` stays inside
//! `|a| ≤ d`, which is what bounds `α` from both sides.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::encoders::{gre_step, LeakParams};
use crate::error::{finite, Error, Result};
use crate::quantizers::{FlakyPolicy, PolicyState, QuantizerSpec};
use crate::{INV_PHI, PHI};

/// Largest tolerance for which a uniform `α` range exists over `[.9, 1]²`.
pub const DELTA_MAX: f64 = 0.5037;

const LEAK_MIN: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Eigensystem {
    pub eps1: f64,
    pub eps2: f64,
    pub s1: f64,
    pub s2: f64,
}

impl Eigensystem {
    pub fn phi1(&self) -> (f64, f64) {
        (1.0 / self.s1, self.eps1 / self.s1)
    }

    pub fn phi2(&self) -> (f64, f64) {
        (-1.0 / self.s2, self.eps2 / self.s2)
    }

    /// Coordinates `(a, c)` with `(u, v) = aΦ₁ + cΦ₂`.
    pub fn to_frame(&self, (u, v): (f64, f64)) -> (f64, f64) {
        let sum = self.eps1 + self.eps2;
        (
            self.s1 * (self.eps2 * u + v) / sum,
            self.s2 * (v - self.eps1 * u) / sum,
        )
    }

    pub fn from_frame(&self, (a, c): (f64, f64)) -> (f64, f64) {
        (
            a / self.s1 - c / self.s2,
            a * self.eps1 / self.s1 + c * self.eps2 / self.s2,
        )
    }

    /// Frame coordinates `(e₁, e₂)` of the input direction `(0, 1)`.
    pub fn input_direction(&self) -> (f64, f64) {
        let sum = self.eps1 + self.eps2;
        (self.s1 / sum, self.s2 / sum)
    }

    /// Sine of the angle between `Φ₁` and `Φ₂`. A margin of `μ` in frame
    /// units is a Euclidean margin of `μ·sin θ`.
    pub fn sin_angle(&self) -> f64 {
        let (p1, p2) = (self.phi1(), self.phi2());
        let cos = p1.0 * p2.0 + p1.1 * p2.1;
        (1.0 - cos * cos).sqrt()
    }
}

/// Eigenvalues `ε₁ = (λ₁ + s)/2`, `ε₂ = (s − λ₁)/2` with `s = √(λ₁² + 4λ₁λ₂)`.
pub fn eigensystem(leak: LeakParams) -> Eigensystem {
    let (l1, l2) = (leak.lambda1, leak.lambda2);
    let s = (l1 * l1 + 4.0 * l1 * l2).sqrt();
    let eps1 = 0.5 * (l1 + s);
    // ε₂ = λ₁λ₂/ε₁ avoids cancelling λ₁ against s.
    let eps2 = l1 * l2 / eps1;
    Eigensystem {
        eps1,
        eps2,
        s1: (1.0 + eps1 * eps1).sqrt(),
        s2: (1.0 + eps2 * eps2).sqrt(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InvariantRectangle {
    pub leak: LeakParams,
    pub mu: f64,
    pub eig: Eigensystem,
    pub h: f64,
    pub d: f64,
    pub l: f64,
    pub r: f64,
    /// Vertices in `(u, v)` coordinates, counter-clockwise from frame
    /// corner `(h − d, r)`.
    pub vertices: [(f64, f64); 4],
}

impl InvariantRectangle {
    /// Half-width `h − d` along `Φ₁`.
    pub fn half_width(&self) -> f64 {
        self.h - self.d
    }

    /// Frame-coordinate containment with absolute slack `tol`.
    pub fn contains(&self, point: (f64, f64), tol: f64) -> bool {
        let (a, c) = self.eig.to_frame(point);
        a.abs() <= self.half_width() + tol && c.abs() <= self.r + tol
    }
}

/// Rectangle parameters `h, d, l, r` for margin `mu`.
pub fn rectangle_params(leak: LeakParams, mu: f64) -> Result<InvariantRectangle> {
    finite("mu", mu)?;
    if mu < 0.0 {
        return Err(Error::InvalidParameter {
            name: "mu",
            value: mu,
            reason: "must be non-negative",
        });
    }
    let eig = eigensystem(leak);
    let Eigensystem { eps1, eps2, s1, s2 } = eig;
    let sum = eps1 + eps2;
    let h = 2.0 * mu / (1.0 - eps1) + 2.0 * s1 / (eps1 * (eps1 - 1.0) * sum);
    let d = mu / (1.0 - eps1) + s1 * (2.0 - eps1) / (eps1 * (eps1 - 1.0) * sum);
    let l = mu / (1.0 - eps2) + s2 * (2.0 - eps2) / (eps2 * (1.0 - eps2) * sum);
    let r = mu / (1.0 - eps2) + s2 / ((1.0 - eps2) * sum);
    if d <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "mu",
            value: mu,
            reason: "too large: the overlap region |a| <= d is empty",
        });
    }
    let w = h - d;
    let vertices = [(w, r), (-w, r), (-w, -r), (w, -r)].map(|p| eig.from_frame(p));
    Ok(InvariantRectangle {
        leak,
        mu,
        eig,
        h,
        d,
        l,
        r,
        vertices,
    })
}

/// Largest `μ` with `d > 0`: `s₁(2 − ε₁)/(ε₁(ε₁ + ε₂))`.
pub fn mu_max(leak: LeakParams) -> f64 {
    let e = eigensystem(leak);
    e.s1 * (2.0 - e.eps1) / (e.eps1 * (e.eps1 + e.eps2))
}

/// `s₁(2 − ε₁)/(ε₁ + ε₂)`, the largest `μ` for which the inputs
/// `{0} × [−1, 1]` start inside the rectangle.
pub fn input_cover_bound(leak: LeakParams) -> f64 {
    let e = eigensystem(leak);
    e.s1 * (2.0 - e.eps1) / (e.eps1 + e.eps2)
}

/// Lower bound for [`input_cover_bound`] over `[.9, 1]²` obtained by bounding
/// each factor separately: `√(1 + (0.9φ)²)(2 − φ)/√5`.
pub fn input_cover_uniform_bound() -> f64 {
    let eps1_min = LEAK_MIN * PHI;
    (1.0 + eps1_min * eps1_min).sqrt() * (2.0 - PHI) / 5f64.sqrt()
}

/// Numerator of the lower `α` bound.
fn lower_num(x: f64, y: f64, delta: f64) -> f64 {
    x * (x - 1.0) - (2.0 - x) * (1.0 - y) + delta * x * (x - 1.0) * (x + y) * (1.0 - y)
}

fn lower_den(x: f64, y: f64) -> f64 {
    x * ((2.0 - x) * (1.0 - y) + y * (x - 1.0))
}

/// `L(x, y)`, evaluated at `(ε₁, ε₂)` for the smallest admissible `α`.
pub fn lower_alpha(x: f64, y: f64, delta: f64) -> f64 {
    lower_num(x, y, delta) / lower_den(x, y)
}

/// `U(x, y)`, evaluated at `(ε₁, ε₁ + ε₂)` for the largest admissible `α`.
pub fn upper_alpha(x: f64, y: f64, delta: f64) -> f64 {
    (2.0 + x * y - 2.0 * y - delta * x * y * (x - 1.0) * (1.0 - y + x)) / (x * (y - 2.0))
}

fn check_delta(delta: f64) -> Result<f64> {
    finite("delta", delta)?;
    if (0.0..=DELTA_MAX).contains(&delta) {
        Ok(delta)
    } else {
        Err(Error::InvalidParameter {
            name: "delta",
            value: delta,
            reason: "tolerance must lie in [0, 0.5037]",
        })
    }
}

/// Admissible `α` range `[L, U]` for one leak pair and tolerance `delta`.
pub fn alpha_bounds(leak: LeakParams, delta: f64) -> Result<(f64, f64)> {
    let delta = check_delta(delta)?;
    let e = eigensystem(leak);
    let lower = lower_alpha(e.eps1, e.eps2, delta);
    let upper = upper_alpha(e.eps1, e.eps1 + e.eps2, delta);
    if lower > upper {
        return Err(Error::InadmissibleTolerance {
            delta,
            lower,
            upper,
        });
    }
    Ok((lower, upper))
}

/// Bounds valid for every `(λ₁, λ₂) ∈ [.9, 1]²`, from the extreme values of
/// `ε₁ ∈ [0.9φ, φ]`, `ε₂ ∈ [0.9φ⁻¹, φ⁻¹]` and `ε₁ + ε₂ ≤ √5`: the largest
/// numerator of `L` over the smallest denominator, and `U` at its minimum.
pub fn worst_case_alpha_bounds(delta: f64) -> (f64, f64) {
    let eps1_min = LEAK_MIN * PHI;
    let lower = lower_num(PHI, INV_PHI, delta) / lower_den(eps1_min, INV_PHI);
    let upper = upper_alpha(eps1_min, 5f64.sqrt(), delta);
    (lower, upper)
}

/// Tolerance at which the worst-case bounds meet. Both are affine in `δ`.
pub fn admissible_delta_endpoint() -> f64 {
    let (l0, u0) = worst_case_alpha_bounds(0.0);
    let (l1, u1) = worst_case_alpha_bounds(1.0);
    let (sl, su) = (l1 - l0, u1 - u0);
    (u0 - l0) / (sl - su)
}

/// The uniform range `[1.198(1 + δ), 2.281 − 0.952δ]`.
pub fn uniform_alpha_range(delta: f64) -> Result<(f64, f64)> {
    let delta = check_delta(delta)?;
    Ok((1.198 * (1.0 + delta), 2.281 - 0.952 * delta))
}

/// One step `(u, v) ↦ (v, λ₁λ₂u + λ₁v − Q_α^ν(u, v))`.
pub fn map_t(
    state: (f64, f64),
    leak: LeakParams,
    q: &QuantizerSpec,
    policy: &mut PolicyState,
) -> Result<(f64, f64)> {
    let (_, next) = gre_step(state.0, state.1, leak, q, policy)?;
    Ok((state.1, next))
}

/// Largest `|u_n|` along an unperturbed encoder orbit from `(0, x)`.
pub fn max_orbit_magnitude(
    x: f64,
    leak: LeakParams,
    q: &QuantizerSpec,
    steps: usize,
) -> Result<f64> {
    let mut policy = q.policy_state();
    let mut state = (0.0, x);
    let mut peak = x.abs();
    for _ in 0..steps {
        state = map_t(state, leak, q, &mut policy)?;
        peak = peak.max(state.1.abs());
        if !peak.is_finite() {
            break;
        }
    }
    Ok(peak)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitConfig {
    pub starts: usize,
    pub steps: usize,
    pub seed: u64,
    pub policies: Vec<FlakyPolicy>,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        Self {
            starts: 100,
            steps: 10_000,
            seed: 0,
            policies: FlakyPolicy::all(0).to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InvarianceCheck {
    /// Vertex images of both affine pieces lie `μ` inside the rectangle.
    Contraction,
    /// The flaky strip meets the rectangle only inside `|a| ≤ d`.
    FlakyStrip,
    /// Perturbed orbits from `{0} × [−1, 1]` never leave the rectangle.
    Orbits,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub check: InvarianceCheck,
    pub passed: bool,
    pub witness: Option<(f64, f64)>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub rect: InvariantRectangle,
    pub checks: Vec<CheckOutcome>,
}

impl InvarianceReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn outcome(check: InvarianceCheck, failure: Option<((f64, f64), String)>) -> CheckOutcome {
    match failure {
        None => CheckOutcome {
            check,
            passed: true,
            witness: None,
            detail: String::new(),
        },
        Some((witness, detail)) => CheckOutcome {
            check,
            passed: false,
            witness: Some(witness),
            detail,
        },
    }
}

fn affine_piece(rect: &InvariantRectangle, point: (f64, f64), bit: f64) -> (f64, f64) {
    let (l1, l2) = (rect.leak.lambda1, rect.leak.lambda2);
    (point.1, l1 * l2 * point.0 + l1 * point.1 - bit)
}

fn contraction_failure(rect: &InvariantRectangle) -> Option<((f64, f64), String)> {
    let w = rect.half_width();
    let d = rect.d.min(w);
    let tol = 1e-12 * (1.0 + w + rect.r);
    let pieces = [(1.0, -d, w), (-1.0, -w, d)];
    for (bit, a_lo, a_hi) in pieces {
        for a in [a_lo, a_hi] {
            for c in [-rect.r, rect.r] {
                let p = rect.eig.from_frame((a, c));
                let (a2, c2) = rect.eig.to_frame(affine_piece(rect, p, bit));
                if a2.abs() > w - rect.mu + tol || c2.abs() > rect.r - rect.mu + tol {
                    return Some((
                        p,
                        format!(
                            "bit {bit:+} maps frame vertex ({a:.6}, {c:.6}) to ({a2:.6}, {c2:.6}), \
                             outside the inset |a| <= {:.6}, |c| <= {:.6}",
                            w - rect.mu,
                            rect.r - rect.mu
                        ),
                    ));
                }
            }
        }
    }
    None
}

fn strip_failure(rect: &InvariantRectangle, q: &QuantizerSpec) -> Option<((f64, f64), String)> {
    let w = rect.half_width();
    if rect.d >= w {
        return None;
    }
    let s = |p: (f64, f64)| p.0 + q.alpha * p.1;
    for (sign, a_lo, a_hi) in [(1.0, rect.d, w), (-1.0, -w, -rect.d)] {
        for a in [a_lo, a_hi] {
            for c in [-rect.r, rect.r] {
                let p = rect.eig.from_frame((a, c));
                if sign * s(p) < q.nu {
                    return Some((
                        p,
                        format!(
                            "u + alpha*v = {:.6} at frame point ({a:.6}, {c:.6}) \
                             where the bit must be {sign:+}",
                            s(p)
                        ),
                    ));
                }
            }
        }
    }
    None
}

fn orbit_failure(
    rect: &InvariantRectangle,
    q: &QuantizerSpec,
    cfg: &OrbitConfig,
) -> Result<Option<((f64, f64), String)>> {
    let radius = rect.mu * rect.eig.sin_angle();
    let tol = 1e-9;
    for (pi, &policy) in cfg.policies.iter().enumerate() {
        let spec = QuantizerSpec { policy, ..*q };
        for k in 0..cfg.starts {
            let x = if cfg.starts == 1 {
                0.0
            } else {
                -1.0 + 2.0 * k as f64 / (cfg.starts - 1) as f64
            };
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(((pi as u64) << 32) | k as u64);
            let mut state = PolicyState::new(policy);
            let mut point = (0.0, x);
            for step in 0..=cfg.steps {
                if !rect.contains(point, tol) {
                    return Ok(Some((
                        point,
                        format!("orbit from (0, {x}) under {policy} leaves R at step {step}"),
                    )));
                }
                if step == cfg.steps {
                    break;
                }
                point = map_t(point, rect.leak, &spec, &mut state)?;
                if radius > 0.0 {
                    let angle = rng.random::<f64>() * std::f64::consts::TAU;
                    let len = radius * rng.random::<f64>().sqrt();
                    point.0 += len * angle.cos();
                    point.1 += len * angle.sin();
                }
            }
        }
    }
    Ok(None)
}

/// Runs the three invariance checks for margin `mu` and quantizer `q`.
///
/// The orbit check perturbs every step by a uniform draw from the Euclidean
/// disc of radius `μ·sin θ`, the largest disc that fits in the frame margin.
pub fn check_invariance(
    leak: LeakParams,
    mu: f64,
    q: &QuantizerSpec,
    cfg: &OrbitConfig,
) -> Result<InvarianceReport> {
    let rect = rectangle_params(leak, mu)?;
    let checks = vec![
        outcome(InvarianceCheck::Contraction, contraction_failure(&rect)),
        outcome(InvarianceCheck::FlakyStrip, strip_failure(&rect, q)),
        outcome(InvarianceCheck::Orbits, orbit_failure(&rect, q, cfg)?),
    ];
    Ok(InvarianceReport { rect, checks })
}
