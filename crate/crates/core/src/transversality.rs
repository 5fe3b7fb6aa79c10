//! Brute-force check that `{−1, 0, 1}` polynomials with constant term `±1`
//! have at most one root on `(0, ρ]`.
//!
//! Every polynomial of degree at most `d` is enumerated (only constant term
//! `+1`; negation does not move roots). Values on a grid of step `10⁻⁴` are
//! built incrementally along a depth-first walk over the coefficients, so a
//! leaf costs one vector add. Grid cells that may hold a root are settled with
//! derivative bounds: a cell is root-free when its end values have the same
//! sign and exceed what the Lipschitz constant allows, and holds exactly as
//! many roots as sign changes when `p′` cannot vanish on it. Anything else is
//! split in half, up to a fixed depth.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::polynomial::{poly_eval, TernaryPolynomial};

pub const DEFAULT_GRID_STEP: f64 = 1e-4;
pub const MAX_DEGREE: usize = 14;
const MAX_SPLITS: u32 = 40;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub poly: TernaryPolynomial,
    pub roots: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransversalityReport {
    pub max_degree: usize,
    pub rho: f64,
    pub grid_step: f64,
    /// Polynomials covered, counting both signs of the constant term.
    pub instances: u64,
    /// Polynomials (constant term `+1`) with at least one root in `(0, ρ]`.
    pub with_root: u64,
    pub violations: Vec<Violation>,
    /// Polynomials whose root count could not be settled.
    pub unresolved: Vec<TernaryPolynomial>,
}

impl TransversalityReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty() && self.unresolved.is_empty()
    }
}

pub fn transversality_oracle(max_degree: usize, rho: f64) -> Result<TransversalityReport> {
    transversality_oracle_with_step(max_degree, rho, DEFAULT_GRID_STEP)
}

pub fn transversality_oracle_with_step(
    max_degree: usize,
    rho: f64,
    step: f64,
) -> Result<TransversalityReport> {
    if max_degree > MAX_DEGREE {
        return Err(Error::InvalidParameter {
            name: "max_degree",
            value: max_degree as f64,
            reason: "enumeration is limited to degree 14",
        });
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidParameter {
            name: "rho",
            value: rho,
            reason: "must lie in (0, 1)",
        });
    }
    if !(step > 0.0 && step < rho) {
        return Err(Error::InvalidParameter {
            name: "step",
            value: step,
            reason: "must lie in (0, rho)",
        });
    }

    let mut grid: Vec<f64> = (0..)
        .map(|i| i as f64 * step)
        .take_while(|&t| t < rho - 0.5 * step)
        .collect();
    grid.push(rho);
    let powers: Vec<Vec<f64>> = (0..=max_degree)
        .map(|j| grid.iter().map(|t| t.powi(j as i32)).collect())
        .collect();

    let mut walk = Walk {
        max_degree,
        rho,
        grid: &grid,
        powers: &powers,
        coeffs: vec![0; max_degree + 1],
        levels: vec![vec![0.0; grid.len()]; max_degree + 1],
        report: TransversalityReport {
            max_degree,
            rho,
            grid_step: step,
            instances: 2 * 3u64.pow(max_degree as u32),
            with_root: 0,
            violations: Vec::new(),
            unresolved: Vec::new(),
        },
    };
    walk.coeffs[0] = 1;
    walk.levels[0].fill(1.0);
    if max_degree == 0 {
        walk.leaf(0);
    } else {
        walk.descend(1);
    }
    Ok(walk.report)
}

struct Walk<'a> {
    max_degree: usize,
    rho: f64,
    grid: &'a [f64],
    powers: &'a [Vec<f64>],
    coeffs: Vec<i8>,
    levels: Vec<Vec<f64>>,
    report: TransversalityReport,
}

impl Walk<'_> {
    fn descend(&mut self, level: usize) {
        for c in [-1i8, 0, 1] {
            self.coeffs[level] = c;
            let (done, rest) = self.levels.split_at_mut(level);
            let prev = &done[level - 1];
            let cur = &mut rest[0];
            let pw = &self.powers[level];
            let cf = f64::from(c);
            for ((v, p), w) in cur.iter_mut().zip(prev).zip(pw) {
                *v = p + cf * w;
            }
            if level == self.max_degree {
                self.leaf(level);
            } else {
                self.descend(level + 1);
            }
        }
    }

    fn leaf(&mut self, level: usize) {
        let values = &self.levels[level];
        let lipschitz: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, c)| j as f64 * f64::from(c.abs()) * self.rho.powi(j as i32 - 1))
            .sum();
        // Cells with a sign change always satisfy this too.
        let step = self.grid[1] - self.grid[0];
        let threshold = lipschitz * step * (1.0 + 1e-9);
        let suspicious = values
            .windows(2)
            .fold(false, |acc, w| acc | (w[0].abs() + w[1].abs() <= threshold));
        if !suspicious {
            return;
        }
        let poly = TernaryPolynomial::new(self.coeffs.clone()).expect("constant term is 1");
        let curvature: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .skip(2)
            .map(|(j, c)| (j * (j - 1)) as f64 * f64::from(c.abs()) * self.rho.powi(j as i32 - 2))
            .sum();
        let mut roots = Vec::new();
        let mut unresolved = false;
        for i in 0..values.len() - 1 {
            let (a, b) = (self.grid[i], self.grid[i + 1]);
            let (va, vb) = (values[i], values[i + 1]);
            if va.abs() + vb.abs() > lipschitz * (b - a) * (1.0 + 1e-9) {
                continue;
            }
            unresolved |= !count_cell(&poly, curvature, a, b, va, vb, 0, &mut roots);
        }
        if !roots.is_empty() {
            self.report.with_root += 1;
        }
        if unresolved {
            self.report.unresolved.push(poly);
        } else if roots.len() >= 2 {
            self.report.violations.push(Violation { poly, roots });
        }
    }
}

/// Adds the roots of `p` in `(a, b]` to `roots`; returns false if the cell
/// could not be settled.
#[allow(clippy::too_many_arguments)]
fn count_cell(
    p: &TernaryPolynomial,
    curvature: f64,
    a: f64,
    b: f64,
    va: f64,
    vb: f64,
    depth: u32,
    roots: &mut Vec<f64>,
) -> bool {
    let h = b - a;
    let (_, da) = poly_eval(p, a);
    let (_, db) = poly_eval(p, b);
    let change = (va > 0.0) != (vb > 0.0);
    if !change {
        let slope = 0.5 * (da.abs() + db.abs() + curvature * h);
        if va.abs() + vb.abs() > slope * h {
            return true;
        }
    }
    if da.abs().max(db.abs()) > curvature * h {
        if change {
            roots.push(refine(p, a, b, va));
        }
        return true;
    }
    if depth >= MAX_SPLITS {
        return false;
    }
    let m = 0.5 * (a + b);
    let vm = p.value(m);
    count_cell(p, curvature, a, m, va, vm, depth + 1, roots)
        && count_cell(p, curvature, m, b, vm, vb, depth + 1, roots)
}

fn refine(p: &TernaryPolynomial, mut a: f64, mut b: f64, va: f64) -> f64 {
    let positive = va > 0.0;
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        if (p.value(m) > 0.0) == positive {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
