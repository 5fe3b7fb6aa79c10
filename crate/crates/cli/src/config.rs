//! Experiment configuration files (JSON).

use std::fmt;
use std::path::PathBuf;

use robust_beta::invariant_geometry::uniform_alpha_range;
use robust_beta::{FlakyPolicy, INV_PHI, TRANSVERSALITY_CEILING};
use serde::{Deserialize, Serialize};

/// Smallest base the experiments accept; lower bracket ends are raised to
/// `φ⁻¹` if they sit between this and `φ⁻¹`.
pub const GAMMA_FLOOR: f64 = 0.618;
/// Largest base the decay experiment accepts.
pub const GAMMA_CEILING: f64 = 0.75;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    DecayRecovery,
    PolyFamily,
    BoundednessSweep,
    ZeroStructure,
    TransversalityScan,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ExperimentKind::DecayRecovery => "decay_recovery",
            ExperimentKind::PolyFamily => "poly_family",
            ExperimentKind::BoundednessSweep => "boundedness_sweep",
            ExperimentKind::ZeroStructure => "zero_structure",
            ExperimentKind::TransversalityScan => "transversality_scan",
        };
        f.write_str(name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_bit_lengths")]
    pub bit_lengths: Vec<usize>,
    #[serde(default = "default_gamma_range")]
    pub gamma_range: [f64; 2],
    /// Defaults to `[1.7, 2]`, or to the certified range at `nu` for the
    /// boundedness sweep.
    #[serde(default)]
    pub alpha_range: Option<[f64; 2]>,
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default = "default_policy", with = "policy_text")]
    pub policy: FlakyPolicy,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub options: Options,
}

/// Knobs that only some experiment kinds read.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    /// Base of the polynomial family; defaults to the low end of `gamma_range`.
    pub gamma: Option<f64>,
    /// Points per sampled curve on `[0, 1]`.
    pub samples: usize,
    /// Right end of the root search; see [`ExperimentConfig::search_high`].
    pub search_high: Option<f64>,
    pub max_retries: usize,
    pub leak_grid: usize,
    pub alpha_count: usize,
    pub inputs: usize,
    pub steps: usize,
    pub mu: f64,
    /// `|u_n|` at or above this counts as an unbounded orbit.
    pub state_limit: f64,
    pub max_degree: usize,
    pub rho: f64,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            gamma: None,
            samples: 500,
            search_high: None,
            max_retries: 10,
            leak_grid: 11,
            alpha_count: 9,
            inputs: 5,
            steps: 10_000,
            mu: 0.0,
            state_limit: 5.0,
            max_degree: 12,
            rho: TRANSVERSALITY_CEILING,
        }
    }
}

fn default_trials() -> usize {
    100
}

fn default_bit_lengths() -> Vec<usize> {
    vec![32]
}

fn default_gamma_range() -> [f64; 2] {
    [GAMMA_FLOOR, 0.7]
}

fn default_nu() -> f64 {
    0.3
}

fn default_policy() -> FlakyPolicy {
    FlakyPolicy::SeededRandom(0)
}

/// Policies are written as `always-minus`, `always-plus`, `toggle` or
/// `random:<seed>`.
mod policy_text {
    use robust_beta::FlakyPolicy;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &FlakyPolicy, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(p)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<FlakyPolicy, D::Error> {
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl ExperimentConfig {
    /// Parses and validates a configuration; errors carry the line of the
    /// offending field.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| ConfigError {
            line: e.line(),
            message: e.to_string(),
        })?;
        cfg.validate().map_err(|(field, message)| ConfigError {
            line: field_line(text, field),
            message: format!("{field}: {message}"),
        })?;
        Ok(cfg.normalized())
    }

    /// Minimal configuration for `kind` with every other field at its default.
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            trials: default_trials(),
            bit_lengths: default_bit_lengths(),
            gamma_range: default_gamma_range(),
            alpha_range: None,
            nu: default_nu(),
            policy: default_policy(),
            seed: 0,
            output_path: None,
            options: Options::default(),
        }
    }

    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        let o = &self.options;
        if self.trials == 0 {
            return Err(("trials", "must be at least 1".into()));
        }
        if self.bit_lengths.is_empty() {
            return Err(("bit_lengths", "must not be empty".into()));
        }
        if let Some(&n) = self.bit_lengths.iter().find(|&&n| n > 1000) {
            return Err(("bit_lengths", format!("{n} exceeds the limit of 1000")));
        }
        ordered("gamma_range", self.gamma_range)?;
        let [lo, hi] = self.gamma_range;
        if !(lo > 0.0 && hi < 1.0) {
            return Err(("gamma_range", "must lie inside (0, 1)".into()));
        }
        if let Some(a) = self.alpha_range {
            ordered("alpha_range", a)?;
            if a[0] <= 0.0 {
                return Err(("alpha_range", "must be positive".into()));
            }
        }
        if !(self.nu.is_finite() && self.nu >= 0.0) {
            return Err(("nu", "must be a non-negative number".into()));
        }
        if o.samples < 2 {
            return Err(("samples", "need at least 2 points".into()));
        }
        if let Some(s) = o.search_high {
            if !(s > 0.0 && s < 1.0) {
                return Err(("search_high", "must lie in (0, 1)".into()));
            }
        }
        match self.kind {
            ExperimentKind::DecayRecovery | ExperimentKind::PolyFamily => {
                if lo < GAMMA_FLOOR || hi > GAMMA_CEILING {
                    return Err((
                        "gamma_range",
                        format!("must lie inside [{GAMMA_FLOOR}, {GAMMA_CEILING}]"),
                    ));
                }
                if let Some(g) = o.gamma {
                    if !(INV_PHI..=GAMMA_CEILING).contains(&g) {
                        return Err(("gamma", format!("must lie in [1/phi, {GAMMA_CEILING}]")));
                    }
                }
            }
            ExperimentKind::BoundednessSweep => {
                if o.leak_grid == 0 || o.alpha_count == 0 || o.inputs == 0 {
                    return Err(("options", "grid sizes must be positive".into()));
                }
                if self.alpha_range.is_none() {
                    uniform_alpha_range(self.nu).map_err(|e| ("nu", e.to_string()))?;
                }
                if !(o.mu.is_finite() && o.mu >= 0.0) {
                    return Err(("mu", "must be a non-negative number".into()));
                }
                if !(o.state_limit > 0.0) {
                    return Err(("state_limit", "must be positive".into()));
                }
            }
            ExperimentKind::ZeroStructure => {
                if let Some(&n) = self.bit_lengths.iter().find(|&&n| n % 3 != 0) {
                    return Err(("bit_lengths", format!("{n} is not a multiple of 3")));
                }
            }
            ExperimentKind::TransversalityScan => {
                if o.max_degree > robust_beta::transversality::MAX_DEGREE {
                    return Err(("max_degree", "enumeration is limited to degree 14".into()));
                }
                if !(o.rho > 0.0 && o.rho < 1.0) {
                    return Err(("rho", "must lie in (0, 1)".into()));
                }
            }
        }
        Ok(())
    }

    fn normalized(mut self) -> Self {
        if self.gamma_range[0] < INV_PHI && self.gamma_range[0] >= GAMMA_FLOOR {
            self.gamma_range[0] = INV_PHI;
            self.gamma_range[1] = self.gamma_range[1].max(INV_PHI);
        }
        self
    }

    /// `[low, high]` for `α`, with the per-kind default filled in.
    pub fn alpha_range(&self) -> [f64; 2] {
        match (self.alpha_range, self.kind) {
            (Some(a), _) => a,
            (None, ExperimentKind::BoundednessSweep) => {
                let (lo, hi) = uniform_alpha_range(self.nu).unwrap_or((1.198, 2.281));
                [lo, hi]
            }
            (None, _) => [1.7, 2.0],
        }
    }

    /// Right end of the root search for bases in `gamma_range`: `0.6491`
    /// while the range stays below it, `0.05` past the range otherwise.
    pub fn search_high(&self) -> f64 {
        self.options.search_high.unwrap_or_else(|| {
            let hi = self.gamma_range[1];
            if hi <= TRANSVERSALITY_CEILING {
                TRANSVERSALITY_CEILING
            } else {
                (hi + 0.05).min(0.95)
            }
        })
    }
}

fn ordered(field: &'static str, r: [f64; 2]) -> Result<(), (&'static str, String)> {
    if r.iter().all(|v| v.is_finite()) && r[0] <= r[1] {
        Ok(())
    } else {
        Err((field, format!("[{}, {}] is not an ordered range", r[0], r[1])))
    }
}

/// 1-based line of the first `"field"` key in `text`, or 1.
fn field_line(text: &str, field: &str) -> usize {
    let key = format!("\"{field}\"");
    text.lines()
        .position(|l| l.contains(&key))
        .map_or(1, |i| i + 1)
}
