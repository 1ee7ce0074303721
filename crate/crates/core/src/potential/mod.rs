//! Potentials on the shift space: the expression language, locally
//! constant tables, the family `φ_β = −β log H`, and a Hölder diagnostic.

pub mod expr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::shift_space::{
    count_cylinders, enumerate_cylinders, extend_to_point, CylinderSpace, ShiftError, Symbol, Word,
    ZeroOneMatrix,
};

pub use expr::{parse as parse_potential, EvalError, Expr, SyntaxError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PotentialError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Shift(#[from] ShiftError),
    #[error("evaluation failed on cylinder [{cylinder}]: {source}")]
    Evaluation { cylinder: Word, source: EvalError },
    #[error("table has {got} values but depth {depth} has {expected} cylinders")]
    TableLength {
        depth: usize,
        expected: usize,
        got: usize,
    },
    #[error("table value {value} on cylinder [{cylinder}] is not finite")]
    NonFinite { cylinder: Word, value: f64 },
    #[error("potential takes non-positive value {value} on cylinder [{cylinder}]")]
    NonPositivePotential { cylinder: Word, value: f64 },
    #[error("cannot lift a depth-{from} table to depth {to}")]
    DepthMismatch { from: usize, to: usize },
}

/// A real function constant on each depth-`d` cylinder.
#[derive(Debug, Clone, PartialEq)]
pub struct LocallyConstantPotential {
    space: CylinderSpace,
    values: Vec<f64>,
}

impl LocallyConstantPotential {
    /// `values` are given in the canonical (lexicographic) cylinder order.
    pub fn from_table(
        a: &ZeroOneMatrix,
        depth: usize,
        values: Vec<f64>,
    ) -> Result<Self, PotentialError> {
        let space = enumerate_cylinders(a, depth)?;
        Self::on_space(space, values)
    }

    pub fn on_space(space: CylinderSpace, values: Vec<f64>) -> Result<Self, PotentialError> {
        if values.len() != space.len() {
            return Err(PotentialError::TableLength {
                depth: space.depth(),
                expected: space.len(),
                got: values.len(),
            });
        }
        if let Some((i, &v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(PotentialError::NonFinite {
                cylinder: space.word(i).clone(),
                value: v,
            });
        }
        Ok(LocallyConstantPotential { space, values })
    }

    pub fn constant(a: &ZeroOneMatrix, c: f64) -> Result<Self, PotentialError> {
        Self::from_table(a, 1, vec![c; a.n()])
    }

    pub fn depth(&self) -> usize {
        self.space.depth()
    }

    pub fn space(&self) -> &CylinderSpace {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at any point (or word) of length at least `depth`.
    pub fn value_at(&self, point: &[Symbol]) -> Option<f64> {
        self.space.index_of_prefix(point).map(|i| self.values[i])
    }

    /// The same function tabulated on a finer cylinder space.
    pub fn lift_to(&self, target: &CylinderSpace) -> Result<Vec<f64>, PotentialError> {
        if target.depth() < self.depth() {
            return Err(PotentialError::DepthMismatch {
                from: self.depth(),
                to: target.depth(),
            });
        }
        Ok(target
            .words()
            .iter()
            .map(|w| {
                self.value_at(w.symbols())
                    .expect("prefix of admissible word")
            })
            .collect())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> LocallyConstantPotential {
        LocallyConstantPotential {
            space: self.space.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Tabulates `expr` on the depth-`d` cylinders by evaluating it at the
/// greedy minimal extension of each cylinder word.
pub fn discretize(
    expr: &Expr,
    a: &ZeroOneMatrix,
    depth: usize,
) -> Result<LocallyConstantPotential, PotentialError> {
    let space = enumerate_cylinders(a, depth)?;
    let len = depth.max(expr.depth());
    let values = space
        .words()
        .iter()
        .map(|w| {
            let point = extend_to_point(a, w, len);
            expr.eval(point.symbols())
                .map_err(|source| PotentialError::Evaluation {
                    cylinder: w.clone(),
                    source,
                })
        })
        .collect::<Result<Vec<_>, _>>()?;
    LocallyConstantPotential::on_space(space, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeReport {
    /// Infimum of the table.
    pub min: f64,
    /// Supremum of the table.
    pub max: f64,
    pub exceeds_one: bool,
}

pub fn range_and_positivity(h: &LocallyConstantPotential) -> RangeReport {
    let min = h.values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = h.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    RangeReport {
        min,
        max,
        exceeds_one: min > 1.0,
    }
}

/// `φ_β = −β log H`, cylinder by cylinder.
pub fn phi_beta(
    h: &LocallyConstantPotential,
    beta: f64,
) -> Result<LocallyConstantPotential, PotentialError> {
    if let Some((i, &v)) = h.values.iter().enumerate().find(|(_, &v)| v <= 0.0) {
        return Err(PotentialError::NonPositivePotential {
            cylinder: h.space.word(i).clone(),
            value: v,
        });
    }
    Ok(h.map(|v| -beta * v.ln()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderDiagnostic {
    pub theta: f64,
    /// Fitted exponent η in `osc_d ≈ K θ^{η d}`.
    pub exponent: f64,
    /// Fitted constant `K`; zero for constant expressions.
    pub constant: f64,
    /// Number of point pairs compared.
    pub samples: usize,
    /// `osc_d` for `d = 1, …, d_max`.
    pub oscillations: Vec<f64>,
    /// Oscillation vanished from some depth on.
    pub locally_constant: bool,
}

const EXHAUSTIVE_EXTENSIONS: u128 = 256;
const RANDOM_EXTENSIONS: usize = 32;

fn count_extensions(a: &ZeroOneMatrix, last: Symbol, extra: usize) -> u128 {
    let mut ending = vec![0u128; a.n()];
    ending[last as usize - 1] = 1;
    for _ in 0..extra {
        let mut next = vec![0u128; a.n()];
        for i in a.symbols() {
            for j in a.successors(i) {
                next[j as usize - 1] = next[j as usize - 1].saturating_add(ending[i as usize - 1]);
            }
        }
        ending = next;
    }
    ending.iter().fold(0u128, |s, &c| s.saturating_add(c))
}

fn all_extensions(a: &ZeroOneMatrix, w: &Word, len: usize, out: &mut Vec<Word>) {
    if w.len() >= len {
        out.push(w.clone());
        return;
    }
    for s in a.successors(w.last().expect("nonempty")) {
        all_extensions(a, &w.pushed(s), len, out);
    }
}

/// Deterministic sample of points (as long words) inside the cylinder `[w]`.
fn sample_points(a: &ZeroOneMatrix, w: &Word, len: usize, rng: &mut ChaCha8Rng) -> Vec<Word> {
    let last = w.last().expect("nonempty");
    if count_extensions(a, last, len - w.len()) <= EXHAUSTIVE_EXTENSIONS {
        let mut out = Vec::new();
        all_extensions(a, w, len, &mut out);
        return out;
    }
    let mut out = vec![extend_to_point(a, w, len)];
    let mut greedy_max = w.clone();
    while greedy_max.len() < len {
        let s = a.successors(greedy_max.last().unwrap()).last().unwrap();
        greedy_max = greedy_max.pushed(s);
    }
    out.push(greedy_max);
    for _ in 0..RANDOM_EXTENSIONS {
        let mut p = w.clone();
        while p.len() < len {
            let succ: Vec<Symbol> = a.successors(p.last().unwrap()).collect();
            p = p.pushed(succ[rng.random_range(0..succ.len())]);
        }
        out.push(p);
    }
    out
}

/// Estimates Hölder constants of `expr` for the metric `θ^{N(x,y)}` from the
/// decay of cylinder oscillations. Advisory only.
pub fn holder_diagnostic(
    expr: &Expr,
    a: &ZeroOneMatrix,
    theta: f64,
    d_max: usize,
) -> Result<HolderDiagnostic, PotentialError> {
    assert!(theta > 0.0 && theta < 1.0, "theta must lie in (0,1)");
    assert!(d_max >= 2, "need at least two depths");
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut oscillations = Vec::with_capacity(d_max);
    let mut samples = 0usize;
    for d in 1..=d_max {
        let len = d.max(expr.depth());
        if len == d {
            // expression is constant on every depth-d cylinder
            oscillations.push(0.0);
            continue;
        }
        if count_cylinders(a, d) > crate::shift_space::DEFAULT_CYLINDER_CAPACITY as u128 {
            break;
        }
        let space = enumerate_cylinders(a, d)?;
        let mut osc = 0.0f64;
        for w in space.words() {
            let points = sample_points(a, w, len, &mut rng);
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for p in &points {
                let v = expr
                    .eval(p.symbols())
                    .map_err(|source| PotentialError::Evaluation {
                        cylinder: w.clone(),
                        source,
                    })?;
                lo = lo.min(v);
                hi = hi.max(v);
            }
            samples += points.len() * (points.len() - 1) / 2;
            osc = osc.max(hi - lo);
        }
        oscillations.push(osc);
    }

    let locally_constant = oscillations.last().is_some_and(|&o| o == 0.0);
    let (exponent, constant) = if locally_constant {
        // exactly Hölder with η = 1; smallest admissible K
        let k = oscillations
            .iter()
            .enumerate()
            .map(|(i, &o)| o / theta.powi(i as i32 + 1))
            .fold(0.0, f64::max);
        (1.0, k)
    } else {
        let pts: Vec<(f64, f64)> = oscillations
            .iter()
            .enumerate()
            .filter(|(_, &o)| o > 0.0)
            .map(|(i, &o)| ((i + 1) as f64 * theta.ln(), o.ln()))
            .collect();
        let (slope, intercept) = least_squares(&pts);
        (slope.max(0.0), intercept.exp())
    };
    Ok(HolderDiagnostic {
        theta,
        exponent,
        constant,
        samples,
        oscillations,
        locally_constant,
    })
}

fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return (0.0, pts.first().map_or(0.0, |p| p.1));
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
