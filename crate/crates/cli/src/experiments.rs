//! Experiment runners. Every trial draws from its own ChaCha stream keyed by
//! `(seed, N, trial, attempt)`, so results do not depend on execution order.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use robust_beta::invariant_geometry::{check_invariance, max_orbit_magnitude, InvarianceCheck, OrbitConfig};
use robust_beta::transversality::{transversality_oracle, TransversalityReport};
use robust_beta::zero_structure::{
    derivative_bound_at_root, factor_zero_poly, period3_alignment, rn_magnitude_bound,
};
use robust_beta::{
    decode_with_estimate, difference_stream, first_root, gre_encode, gre_encode_leaky,
    leak_for_gamma, recovery::recover_gamma, Error, FlakyPolicy, Guarantee, LeakParams,
    QuantizerSpec, Result, TernaryPolynomial, TransversalityContext, INV_PHI,
    TRANSVERSALITY_CEILING,
};

use crate::config::{ExperimentConfig, ExperimentKind};

/// Bits encoded beyond `N + 1` to absorb the leading zeros of a difference
/// stream.
pub const EXTRA_BITS: usize = 64;
/// Grid size on `[0, φ⁻¹)` for the `|R(t)|` check.
pub const RN_GRID: usize = 1000;

pub fn trial_rng(seed: u64, n: usize, trial: usize, attempt: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((n as u64) << 40) | ((attempt as u64) << 32) | trial as u64);
    rng
}

/// Random policies get a per-trial seed; deterministic ones are kept.
fn trial_policy(policy: FlakyPolicy, rng: &mut ChaCha8Rng) -> FlakyPolicy {
    match policy {
        FlakyPolicy::SeededRandom(s) => FlakyPolicy::SeededRandom(s ^ rng.random::<u64>()),
        other => other,
    }
}

fn draw(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        1 => vec![0.5 * (lo + hi)],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

/// Worst-case accuracy of an `n`-bit estimate of `gamma`, when one is known:
/// `δ = 0.07` up to `0.63` and `δ = 0.00008` up to `0.6491`.
pub fn proven_gamma_bound(gamma: f64, n: usize) -> Option<f64> {
    let high = if gamma <= 0.63 {
        0.63
    } else if gamma <= TRANSVERSALITY_CEILING {
        TRANSVERSALITY_CEILING
    } else {
        return None;
    };
    let ctx = TransversalityContext::new(INV_PHI, high).ok()?;
    Some(ctx.error_bound(gamma, n))
}

/// Recovery context for bases drawn from `cfg.gamma_range`.
pub fn recovery_context(cfg: &ExperimentConfig) -> Result<TransversalityContext> {
    let [lo, hi] = cfg.gamma_range;
    let ctx = if lo <= TRANSVERSALITY_CEILING {
        TransversalityContext::new(lo.max(INV_PHI), hi.min(TRANSVERSALITY_CEILING))?
    } else {
        TransversalityContext::default()
    };
    ctx.with_search_high(cfg.search_high())
}

/// Polynomial `P̄` of degree `degree` from the pair `(x, −x)`, or `None` when
/// the difference stream has no nonzero entry among the first
/// `EXTRA_BITS + 1` bits.
pub fn pair_polynomial(
    x: f64,
    leak: LeakParams,
    q: &QuantizerSpec,
    degree: usize,
) -> Result<Option<(TernaryPolynomial, usize)>> {
    let len = degree + 1 + EXTRA_BITS;
    let b = gre_encode_leaky(x, leak, len, q)?.bits;
    let c = gre_encode_leaky(-x, leak, len, q)?.bits;
    match difference_stream(&b, &c) {
        Ok((p, k)) if k <= EXTRA_BITS => Ok(Some((p.truncated(degree), k))),
        Ok(_) | Err(Error::NoSignal { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayTrial {
    pub n: usize,
    pub trial: usize,
    pub attempts: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub x: f64,
    pub x_fresh: f64,
    pub gamma_estimate: Option<f64>,
    pub gamma_error: Option<f64>,
    pub x_error_calibration: Option<f64>,
    pub x_error_fresh: Option<f64>,
    pub shift_k: Option<usize>,
    pub guarantee: Option<Guarantee>,
    /// Known worst-case `|γ − γ̃|` for this `γ` and `N`.
    pub gamma_bound: Option<f64>,
    pub failure: Option<String>,
}

impl DecayTrial {
    pub fn violates_bound(&self) -> bool {
        matches!((self.gamma_error, self.gamma_bound), (Some(e), Some(b)) if e > b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayRow {
    pub n: usize,
    pub trials: usize,
    pub worst_gamma_error: f64,
    pub worst_x_error_calibration: f64,
    pub worst_x_error_fresh: f64,
    pub proven: usize,
    pub bound_checked: usize,
    pub bound_violations: usize,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayReport {
    pub rows: Vec<DecayRow>,
    pub trials: Vec<DecayTrial>,
}

fn decay_trial(
    cfg: &ExperimentConfig,
    ctx: &TransversalityContext,
    n: usize,
    trial: usize,
) -> Result<DecayTrial> {
    let mut attempt = 0;
    loop {
        let mut rng = trial_rng(cfg.seed, n, trial, attempt);
        let gamma = draw(&mut rng, cfg.gamma_range);
        let x = rng.random_range(-1.0..=1.0);
        let alpha = draw(&mut rng, cfg.alpha_range());
        let x_fresh = rng.random_range(-1.0..=1.0);
        let policy = trial_policy(cfg.policy, &mut rng);
        let leak = leak_for_gamma(gamma)?;
        let q = QuantizerSpec::new(cfg.nu, alpha, policy)?;
        let mut out = DecayTrial {
            n,
            trial,
            attempts: attempt + 1,
            gamma,
            alpha,
            x,
            x_fresh,
            gamma_estimate: None,
            gamma_error: None,
            x_error_calibration: None,
            x_error_fresh: None,
            shift_k: None,
            guarantee: None,
            gamma_bound: proven_gamma_bound(gamma, n),
            failure: None,
        };
        let Some((p, k)) = pair_polynomial(x, leak, &q, n)? else {
            if attempt >= cfg.options.max_retries {
                out.failure = Some(format!("no signal after {} attempts", attempt + 1));
                return Ok(out);
            }
            attempt += 1;
            continue;
        };
        out.shift_k = Some(k);
        let r = match recover_gamma(&p, ctx) {
            Ok(r) => r,
            Err(e @ Error::NoRoot { .. }) => {
                out.failure = Some(e.to_string());
                return Ok(out);
            }
            Err(e) => return Err(e),
        };
        let decode = |value: f64| -> Result<f64> {
            let bits = gre_encode_leaky(value, leak, n, &q)?.bits;
            Ok((decode_with_estimate(&bits, r.gamma_estimate, n)?.estimate - value).abs())
        };
        out.gamma_estimate = Some(r.gamma_estimate);
        out.gamma_error = Some((r.gamma_estimate - gamma).abs());
        out.x_error_calibration = Some(decode(x)?);
        out.x_error_fresh = Some(decode(x_fresh)?);
        out.guarantee = Some(r.guarantee);
        return Ok(out);
    }
}

pub fn run_decay_recovery(cfg: &ExperimentConfig) -> Result<DecayReport> {
    let ctx = recovery_context(cfg)?;
    let mut rows = Vec::new();
    let mut trials = Vec::new();
    for &n in &cfg.bit_lengths {
        let batch = (0..cfg.trials)
            .map(|t| decay_trial(cfg, &ctx, n, t))
            .collect::<Result<Vec<_>>>()?;
        let worst = |f: fn(&DecayTrial) -> Option<f64>| {
            batch.iter().filter_map(f).fold(0.0, f64::max)
        };
        rows.push(DecayRow {
            n,
            trials: batch.len(),
            worst_gamma_error: worst(|t| t.gamma_error),
            worst_x_error_calibration: worst(|t| t.x_error_calibration),
            worst_x_error_fresh: worst(|t| t.x_error_fresh),
            proven: batch
                .iter()
                .filter(|t| t.guarantee == Some(Guarantee::Proven))
                .count(),
            bound_checked: batch
                .iter()
                .filter(|t| t.gamma_error.is_some() && t.gamma_bound.is_some())
                .count(),
            bound_violations: batch.iter().filter(|t| t.violates_bound()).count(),
            failures: batch.iter().filter(|t| t.failure.is_some()).count(),
        });
        trials.extend(batch);
    }
    Ok(DecayReport { rows, trials })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolyCurve {
    pub pair_id: usize,
    pub n: usize,
    pub x: f64,
    pub alpha: f64,
    pub shift_k: usize,
    pub first_root: Option<f64>,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolyReport {
    pub gamma: f64,
    pub curves: Vec<PolyCurve>,
    /// Pairs that produced no signal within the retry budget.
    pub failed_pairs: Vec<usize>,
}

pub fn run_poly_family(cfg: &ExperimentConfig) -> Result<PolyReport> {
    let gamma = cfg.options.gamma.unwrap_or(cfg.gamma_range[0]);
    let leak = leak_for_gamma(gamma)?;
    let ctx = recovery_context(cfg)?;
    let max_n = cfg.bit_lengths.iter().copied().max().unwrap_or(0);
    let ts = linspace(0.0, 1.0, cfg.options.samples);
    let mut curves = Vec::new();
    let mut failed_pairs = Vec::new();
    for pair_id in 0..cfg.trials {
        let mut found = None;
        for attempt in 0..=cfg.options.max_retries {
            let mut rng = trial_rng(cfg.seed, 0, pair_id, attempt);
            let x = rng.random_range(-1.0..=1.0);
            let alpha = draw(&mut rng, cfg.alpha_range());
            let policy = trial_policy(cfg.policy, &mut rng);
            let q = QuantizerSpec::new(cfg.nu, alpha, policy)?;
            if let Some((p, k)) = pair_polynomial(x, leak, &q, max_n)? {
                found = Some((x, alpha, p, k));
                break;
            }
        }
        let Some((x, alpha, p, k)) = found else {
            failed_pairs.push(pair_id);
            continue;
        };
        for &n in &cfg.bit_lengths {
            let pn = p.truncated(n);
            curves.push(PolyCurve {
                pair_id,
                n,
                x,
                alpha,
                shift_k: k,
                first_root: first_root(&pn, &ctx, ctx.tolerance(n + 1)).ok(),
                points: ts.iter().map(|&t| (t, pn.value(t))).collect(),
            });
        }
    }
    Ok(PolyReport {
        gamma,
        curves,
        failed_pairs,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepCell {
    pub lambda1: f64,
    pub lambda2: f64,
    pub alpha: f64,
    pub nu: f64,
    pub contraction: bool,
    pub flaky_strip: bool,
    pub orbits: bool,
    /// Largest `|u_n|` over all inputs and policies.
    pub max_abs_state: f64,
    pub bounded: bool,
}

impl SweepCell {
    pub fn passed(&self) -> bool {
        self.contraction && self.flaky_strip && self.orbits && self.bounded
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub mu: f64,
    pub steps: usize,
    pub inputs: Vec<f64>,
    pub state_limit: f64,
    pub cells: Vec<SweepCell>,
}

pub fn run_boundedness_sweep(cfg: &ExperimentConfig) -> Result<SweepReport> {
    let o = &cfg.options;
    let lambdas = if o.leak_grid == 1 {
        vec![1.0]
    } else {
        linspace(0.9, 1.0, o.leak_grid)
    };
    let [alo, ahi] = cfg.alpha_range();
    let alphas = linspace(alo, ahi, o.alpha_count);
    let inputs = if o.inputs == 1 {
        vec![0.0]
    } else {
        linspace(-1.0, 1.0, o.inputs)
    };
    let policies = FlakyPolicy::all(cfg.seed).to_vec();
    let orbit_cfg = OrbitConfig {
        starts: o.inputs,
        steps: o.steps,
        seed: cfg.seed,
        policies: policies.clone(),
    };
    let mut cells = Vec::new();
    for &l1 in &lambdas {
        for &l2 in &lambdas {
            let leak = LeakParams::new(l1, l2)?;
            for &alpha in &alphas {
                let q = QuantizerSpec::new(cfg.nu, alpha, FlakyPolicy::AlwaysMinus)?;
                let report = check_invariance(leak, o.mu, &q, &orbit_cfg)?;
                let passed = |c: InvarianceCheck| {
                    report.checks.iter().any(|o| o.check == c && o.passed)
                };
                let mut peak: f64 = 0.0;
                for &policy in &policies {
                    let q = QuantizerSpec { policy, ..q };
                    for &x in &inputs {
                        peak = peak.max(max_orbit_magnitude(x, leak, &q, o.steps)?);
                    }
                }
                cells.push(SweepCell {
                    lambda1: l1,
                    lambda2: l2,
                    alpha,
                    nu: cfg.nu,
                    contraction: passed(InvarianceCheck::Contraction),
                    flaky_strip: passed(InvarianceCheck::FlakyStrip),
                    orbits: passed(InvarianceCheck::Orbits),
                    max_abs_state: peak,
                    bounded: peak < o.state_limit,
                });
            }
        }
    }
    Ok(SweepReport {
        mu: o.mu,
        steps: o.steps,
        inputs,
        state_limit: o.state_limit,
        cells,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroRun {
    pub trial: usize,
    pub n: usize,
    pub policy: String,
    pub alpha: f64,
    pub alignment: Option<usize>,
    pub factored: bool,
    /// `|P(φ⁻¹)|` in floating point.
    pub residual_at_root: f64,
    pub derivative_at_root: Option<f64>,
    /// Smallest `|R(t)|` over the grid.
    pub rn_min: Option<f64>,
    /// Smallest `|R(t)| − (1 − t³/(1 − t³))` over the grid.
    pub rn_margin: Option<f64>,
    pub failure: Option<String>,
}

impl ZeroRun {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroReport {
    pub runs: Vec<ZeroRun>,
}

pub fn run_zero_structure(cfg: &ExperimentConfig) -> Result<ZeroReport> {
    let grid = linspace(0.0, INV_PHI, RN_GRID + 1);
    let grid = &grid[..RN_GRID];
    let mut runs = Vec::new();
    for &n in &cfg.bit_lengths {
        for trial in 0..cfg.trials {
            let mut rng = trial_rng(cfg.seed, n, trial, 0);
            let alpha = draw(&mut rng, cfg.alpha_range());
            let policy = trial_policy(cfg.policy, &mut rng);
            let q = QuantizerSpec::new(cfg.nu, alpha, policy)?;
            let bits = gre_encode(0.0, n, &q)?.bits;
            let p = TernaryPolynomial::from_bits(&bits)?;
            let mut run = ZeroRun {
                trial,
                n,
                policy: policy.to_string(),
                alpha,
                alignment: period3_alignment(&bits),
                factored: false,
                residual_at_root: p.value(INV_PHI).abs(),
                derivative_at_root: None,
                rn_min: None,
                rn_margin: None,
                failure: None,
            };
            let mut fail = |msg: String| {
                if run.failure.is_none() {
                    run.failure = Some(msg);
                }
            };
            if run.alignment != Some(0) {
                fail(format!("period-3 law fails (alignment {:?})", run.alignment));
            }
            if run.residual_at_root > 1e-10 {
                fail(format!("|P(1/phi)| = {:e}", run.residual_at_root));
            }
            match factor_zero_poly(&p) {
                Ok(r) => {
                    run.factored = true;
                    match derivative_bound_at_root(&p) {
                        Ok(d) => run.derivative_at_root = Some(d),
                        Err(e) => fail(e.to_string()),
                    }
                    let (mut least, mut margin) = (f64::INFINITY, f64::INFINITY);
                    for &t in grid {
                        match rn_magnitude_bound(&r, t) {
                            Ok((v, b)) => {
                                least = least.min(v);
                                margin = margin.min(v - b);
                            }
                            Err(e) => {
                                fail(e.to_string());
                                break;
                            }
                        }
                    }
                    run.rn_min = Some(least);
                    run.rn_margin = Some(margin);
                }
                Err(e) => fail(e.to_string()),
            }
            runs.push(run);
        }
    }
    Ok(ZeroReport { runs })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentOutput {
    DecayRecovery(DecayReport),
    PolyFamily(PolyReport),
    BoundednessSweep(SweepReport),
    ZeroStructure(ZeroReport),
    TransversalityScan(TransversalityReport),
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    Ok(match cfg.kind {
        ExperimentKind::DecayRecovery => ExperimentOutput::DecayRecovery(run_decay_recovery(cfg)?),
        ExperimentKind::PolyFamily => ExperimentOutput::PolyFamily(run_poly_family(cfg)?),
        ExperimentKind::BoundednessSweep => {
            ExperimentOutput::BoundednessSweep(run_boundedness_sweep(cfg)?)
        }
        ExperimentKind::ZeroStructure => ExperimentOutput::ZeroStructure(run_zero_structure(cfg)?),
        ExperimentKind::TransversalityScan => ExperimentOutput::TransversalityScan(
            transversality_oracle(cfg.options.max_degree, cfg.options.rho)?,
        ),
    })
}

fn yes(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

impl ExperimentOutput {
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        match self {
            ExperimentOutput::DecayRecovery(r) => {
                s.push_str(
                    "n,trials,worst_gamma_error,worst_x_error_calibration,worst_x_error_fresh,\
                     proven,bound_checked,bound_violations,failures\n",
                );
                for row in &r.rows {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{},{},{},{}",
                        row.n,
                        row.trials,
                        float(row.worst_gamma_error),
                        float(row.worst_x_error_calibration),
                        float(row.worst_x_error_fresh),
                        row.proven,
                        row.bound_checked,
                        row.bound_violations,
                        row.failures
                    );
                }
            }
            ExperimentOutput::PolyFamily(r) => {
                s.push_str("pair_id,n,t,value\n");
                for c in &r.curves {
                    for &(t, v) in &c.points {
                        let _ = writeln!(s, "{},{},{},{}", c.pair_id, c.n, float(t), float(v));
                    }
                }
            }
            ExperimentOutput::BoundednessSweep(r) => {
                s.push_str(
                    "lambda1,lambda2,alpha,nu,contraction,flaky_strip,orbits,max_abs_state,bounded,passed\n",
                );
                for c in &r.cells {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{},{},{},{},{}",
                        float(c.lambda1),
                        float(c.lambda2),
                        float(c.alpha),
                        float(c.nu),
                        yes(c.contraction),
                        yes(c.flaky_strip),
                        yes(c.orbits),
                        float(c.max_abs_state),
                        yes(c.bounded),
                        yes(c.passed())
                    );
                }
            }
            ExperimentOutput::ZeroStructure(r) => {
                s.push_str(
                    "trial,n,policy,alpha,alignment,factored,residual_at_root,derivative_at_root,rn_min,rn_margin,passed\n",
                );
                for z in &r.runs {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{},{},{},{},{},{}",
                        z.trial,
                        z.n,
                        z.policy,
                        float(z.alpha),
                        z.alignment.map(|a| a.to_string()).unwrap_or_default(),
                        yes(z.factored),
                        float(z.residual_at_root),
                        opt_float(z.derivative_at_root),
                        opt_float(z.rn_min),
                        opt_float(z.rn_margin),
                        yes(z.passed())
                    );
                }
            }
            ExperimentOutput::TransversalityScan(r) => {
                s.push_str("max_degree,rho,grid_step,instances,with_root,violations,unresolved\n");
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    r.max_degree,
                    float(r.rho),
                    float(r.grid_step),
                    r.instances,
                    r.with_root,
                    r.violations.len(),
                    r.unresolved.len()
                );
            }
        }
        s
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    /// One human-readable line for the terminal.
    pub fn summary(&self) -> String {
        match self {
            ExperimentOutput::DecayRecovery(r) => r
                .rows
                .iter()
                .map(|row| {
                    format!(
                        "N={}: worst |gamma - est| = {:.3e}, worst |x - est| = {:.3e}, failures {}",
                        row.n, row.worst_gamma_error, row.worst_x_error_fresh, row.failures
                    )
                })
                .collect::<Vec<_>>()
                .join("\n"),
            ExperimentOutput::PolyFamily(r) => format!(
                "{} curves at gamma = {}, {} pairs without signal",
                r.curves.len(),
                r.gamma,
                r.failed_pairs.len()
            ),
            ExperimentOutput::BoundednessSweep(r) => format!(
                "{} of {} cells pass",
                r.cells.iter().filter(|c| c.passed()).count(),
                r.cells.len()
            ),
            ExperimentOutput::ZeroStructure(r) => format!(
                "{} of {} zero expansions pass",
                r.runs.iter().filter(|z| z.passed()).count(),
                r.runs.len()
            ),
            ExperimentOutput::TransversalityScan(r) => format!(
                "{} instances, {} with a root, {} violations, {} unresolved",
                r.instances,
                r.with_root,
                r.violations.len(),
                r.unresolved.len()
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(kind: ExperimentKind) -> ExperimentConfig {
        ExperimentConfig::new(kind)
    }

    #[test]
    fn trial_streams_are_independent_of_order() {
        let a: u64 = trial_rng(7, 32, 3, 0).random();
        let _: u64 = trial_rng(7, 32, 2, 0).random();
        assert_eq!(a, trial_rng(7, 32, 3, 0).random::<u64>());
        assert_ne!(a, trial_rng(7, 32, 3, 1).random::<u64>());
        assert_ne!(a, trial_rng(7, 16, 3, 0).random::<u64>());
    }

    #[test]
    fn known_bounds() {
        let b = proven_gamma_bound(0.63, 32).unwrap();
        assert!((b - 0.63f64.powi(32) / (0.07 * 0.37)).abs() < 1e-18);
        assert!((b - 1.5e-5).abs() < 1e-6);
        assert!(proven_gamma_bound(0.64, 32).unwrap() > b);
        assert!(proven_gamma_bound(0.65, 32).is_none());
    }

    #[test]
    fn narrow_decay_run_meets_bound() {
        let mut c = cfg(ExperimentKind::DecayRecovery);
        c.trials = 20;
        c.gamma_range = [0.62, 0.63];
        let r = run_decay_recovery(&c).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0].bound_violations, 0);
        assert!(r.rows[0].worst_gamma_error <= 0.63f64.powi(32) / (0.07 * 0.37));
        assert_eq!(r.rows[0].bound_checked + r.rows[0].failures, 20);
    }

    #[test]
    fn decay_rows_follow_bit_lengths() {
        let mut c = cfg(ExperimentKind::DecayRecovery);
        c.trials = 10;
        c.bit_lengths = vec![8, 24];
        let r = run_decay_recovery(&c).unwrap();
        assert_eq!(r.rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![8, 24]);
        assert!(r.rows[1].worst_gamma_error < r.rows[0].worst_gamma_error);
        assert_eq!(r.trials.len(), 20);
    }

    #[test]
    fn poly_family_shapes() {
        let mut c = cfg(ExperimentKind::PolyFamily);
        c.trials = 3;
        c.bit_lengths = vec![0, 32];
        c.options.gamma = Some(0.64375);
        c.options.search_high = Some(0.7);
        let r = run_poly_family(&c).unwrap();
        assert!(r.failed_pairs.is_empty());
        assert_eq!(r.curves.len(), 6);
        for curve in &r.curves {
            assert_eq!(curve.points.len(), 500);
            if curve.n == 0 {
                let v = curve.points[0].1;
                assert!(v.abs() == 1.0 && curve.points.iter().all(|p| p.1 == v));
            } else {
                assert!((curve.first_root.unwrap() - 0.64375).abs() < 2e-3);
            }
        }
        let csv = ExperimentOutput::PolyFamily(r).to_csv();
        assert!(csv.starts_with("pair_id,n,t,value\n"));
        assert_eq!(csv.lines().count(), 1 + 6 * 500);
    }

    #[test]
    fn sweep_single_ideal_point_passes() {
        let mut c = cfg(ExperimentKind::BoundednessSweep);
        c.nu = 0.0;
        c.alpha_range = Some([2.0, 2.0]);
        c.options.leak_grid = 1;
        c.options.alpha_count = 1;
        c.options.steps = 2000;
        let r = run_boundedness_sweep(&c).unwrap();
        assert_eq!(r.cells.len(), 1);
        assert!(r.cells[0].passed(), "{:?}", r.cells[0]);
    }

    #[test]
    fn sweep_records_out_of_range_failures() {
        let mut c = cfg(ExperimentKind::BoundednessSweep);
        c.alpha_range = Some([3.0, 3.0]);
        c.options.leak_grid = 2;
        c.options.alpha_count = 1;
        c.options.steps = 500;
        let r = run_boundedness_sweep(&c).unwrap();
        // Leaky corners tolerate larger amplifiers; the ideal corner does not.
        let ideal = r.cells.iter().find(|c| c.lambda1 == 1.0 && c.lambda2 == 1.0).unwrap();
        assert!(!ideal.flaky_strip && !ideal.passed());
    }

    #[test]
    fn zero_structure_passes() {
        let mut c = cfg(ExperimentKind::ZeroStructure);
        c.trials = 4;
        c.bit_lengths = vec![60];
        let r = run_zero_structure(&c).unwrap();
        assert!(r.runs.iter().all(|z| z.passed()), "{:?}", r.runs);
        assert!(r.runs.iter().all(|z| z.derivative_at_root.unwrap() >= 1.545));
    }

    #[test]
    fn csv_headers_and_floats() {
        let mut c = cfg(ExperimentKind::TransversalityScan);
        c.options.max_degree = 3;
        let out = run_experiment(&c).unwrap();
        let csv = out.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "max_degree,rho,grid_step,instances,with_root,violations,unresolved"
        );
        let row = lines.next().unwrap();
        assert!(row.starts_with(&format!("3,{},", float(0.6491))), "{row}");
        assert_eq!(float(0.5), "5.0000000000000000e-1");
        assert!(out.to_json().contains("\"kind\": \"transversality_scan\""));
    }
}
