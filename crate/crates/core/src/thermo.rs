//! The map `β ↦ λ(β)` for `φ_β = −β log H`, its a-priori bounds, and the
//! unique inverse temperature `β*` with `λ(β*) = 1`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::potential::{phi_beta, range_and_positivity, LocallyConstantPotential, RangeReport};
use crate::shift_space::{q_function, ZeroOneMatrix};
use crate::transfer_op::{
    perron, structure_matrix, PerronData, PerronOptions, TransferError, TransferMatrix,
};

/// Relative slack allowed on every inequality check.
pub const INEQUALITY_SLACK: f64 = 1e-8;
pub const DEFAULT_BISECTION_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThermoError {
    #[error("potential minimum {min} does not exceed one")]
    HNotExceedingOne { min: f64 },
    #[error(
        "bisection did not reach |λ − 1| ≤ {tol:e} in {iterations} steps (bracket [{lo}, {hi}])"
    )]
    NoConvergence {
        tol: f64,
        iterations: usize,
        lo: f64,
        hi: f64,
    },
    #[error("bound violated: {name} (lhs {lhs}, rhs {rhs})")]
    InequalityViolation { name: String, lhs: f64, rhs: f64 },
    #[error("λ not strictly decreasing between β = {beta_lo} and β = {beta_hi}")]
    MonotonicityViolation { beta_lo: f64, beta_hi: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Transfer(#[from] TransferError),
}

/// A transition matrix, a potential `H`, and a fixed working depth `k`.
/// The sparsity pattern is built once; each `λ(β)` only reweights it.
#[derive(Debug, Clone)]
pub struct ThermoModel {
    a: ZeroOneMatrix,
    h: LocallyConstantPotential,
    structure: TransferMatrix,
    opts: PerronOptions,
    range: RangeReport,
    l_norm: f64,
}

impl ThermoModel {
    pub fn new(
        a: &ZeroOneMatrix,
        h: &LocallyConstantPotential,
        k: usize,
        opts: PerronOptions,
    ) -> Result<Self, ThermoError> {
        let structure = structure_matrix(a, k, h.depth())?;
        let range = range_and_positivity(h);
        if !(range.min > 0.0) {
            return Err(ThermoError::InvalidArgument(format!(
                "potential must be positive, minimum is {}",
                range.min
            )));
        }
        let l_norm = q_function(a).into_iter().max().expect("n ≥ 1") as f64;
        Ok(ThermoModel {
            a: a.clone(),
            h: h.clone(),
            structure,
            opts,
            range,
            l_norm,
        })
    }

    pub fn matrix(&self) -> &ZeroOneMatrix {
        &self.a
    }

    pub fn potential(&self) -> &LocallyConstantPotential {
        &self.h
    }

    pub fn depth(&self) -> usize {
        self.structure.depth()
    }

    pub fn options(&self) -> &PerronOptions {
        &self.opts
    }

    pub fn range(&self) -> RangeReport {
        self.range
    }

    /// `‖𝓛‖ = max_j Q(j)`.
    pub fn l_norm(&self) -> f64 {
        self.l_norm
    }

    pub fn transfer_matrix(&self, beta: f64) -> Result<TransferMatrix, ThermoError> {
        let phi = phi_beta(&self.h, beta).map_err(TransferError::from)?;
        Ok(self.structure.reweighted(&phi)?)
    }

    pub fn perron_at(&self, beta: f64) -> Result<PerronData, ThermoError> {
        Ok(perron(&self.transfer_matrix(beta)?, &self.opts)?)
    }

    pub fn lambda(&self, beta: f64) -> Result<f64, ThermoError> {
        Ok(self.perron_at(beta)?.lambda)
    }

    /// `M^{−β} ≤ λ(β) ≤ m^{−β}‖𝓛‖`.
    pub fn global_bounds(&self, beta: f64) -> (f64, f64) {
        (
            self.range.max.powf(-beta),
            self.range.min.powf(-beta) * self.l_norm,
        )
    }

    fn require_exceeds_one(&self) -> Result<(), ThermoError> {
        if self.range.exceeds_one {
            Ok(())
        } else {
            Err(ThermoError::HNotExceedingOne {
                min: self.range.min,
            })
        }
    }

    pub fn bounds_report(&self, beta: f64, delta: f64) -> Result<BoundsReport, ThermoError> {
        if !(delta > 0.0) || beta - delta < 0.0 {
            return Err(ThermoError::InvalidArgument(format!(
                "need δ > 0 and β − δ ≥ 0, got β = {beta}, δ = {delta}"
            )));
        }
        let (m, big_m) = (self.range.min, self.range.max);
        let below = self.lambda(beta - delta)?;
        let at = self.lambda(beta)?;
        let above = self.lambda(beta + delta)?;
        let (lo, hi) = self.global_bounds(beta);
        let raw = [
            ("sandwich_below_lower", m.powf(delta) * at, below),
            ("sandwich_below_upper", below, big_m.powf(delta) * at),
            ("sandwich_above_lower", big_m.powf(-delta) * at, above),
            ("sandwich_above_upper", above, m.powf(-delta) * at),
            ("global_lower", lo, at),
            ("global_upper", at, hi),
        ];
        let checks: Vec<InequalityCheck> = raw
            .iter()
            .map(|&(name, lhs, rhs)| InequalityCheck::new(name, lhs, rhs))
            .collect();
        let report = BoundsReport {
            beta,
            delta,
            lambda_below: below,
            lambda_at: at,
            lambda_above: above,
            checks,
        };
        if let Some(c) = report.checks.iter().find(|c| !c.holds) {
            return Err(ThermoError::InequalityViolation {
                name: c.name.clone(),
                lhs: c.lhs,
                rhs: c.rhs,
            });
        }
        Ok(report)
    }

    /// Bisection for `λ(β) = 1`. The upper end is found by doubling from
    /// `β = 1`, capped at `log‖𝓛‖ / log m` where `λ ≤ m^{−β}‖𝓛‖ ≤ 1`.
    /// Doubling keeps the evaluations near β*: far above it the spectral gap
    /// can close to round-off and power iteration stalls.
    pub fn beta_star(&self, max_iter: usize) -> Result<BetaStarResult, ThermoError> {
        self.require_exceeds_one()?;
        let tol = self.opts.tol;
        let mut lo = 0.0;
        let cap = self.l_norm.ln() / self.range.min.ln();
        let mut lam_lo = self.lambda(lo)?;
        let mut trace = Vec::new();
        if (lam_lo - 1.0).abs() <= tol {
            // only for the one-point shift, where λ(0) = 1
            return Ok(BetaStarResult {
                beta_star: 0.0,
                lambda_at: lam_lo,
                bracket: (0.0, 0.0),
                iterations: 0,
                depth_used: self.depth(),
                trace,
            });
        }
        if lam_lo < 1.0 {
            return Err(ThermoError::InequalityViolation {
                name: "initial_bracket".into(),
                lhs: lam_lo,
                rhs: 1.0,
            });
        }
        let mut hi = cap.min(1.0);
        let mut lam_hi = self.lambda(hi)?;
        while lam_hi > 1.0 + tol && hi < cap {
            (lo, lam_lo) = (hi, lam_hi);
            hi = (2.0 * hi).min(cap);
            lam_hi = self.lambda(hi)?;
        }
        if (lam_hi - 1.0).abs() <= tol {
            // e.g. constant H on a full shift, where the cap is attained
            return Ok(BetaStarResult {
                beta_star: hi,
                lambda_at: lam_hi,
                bracket: (lo, hi),
                iterations: 0,
                depth_used: self.depth(),
                trace,
            });
        }
        if lam_hi > 1.0 {
            return Err(ThermoError::InequalityViolation {
                name: "initial_bracket".into(),
                lhs: lam_lo,
                rhs: lam_hi,
            });
        }
        for it in 1..=max_iter {
            trace.push(BisectionStep {
                lo,
                hi,
                lambda_lo: lam_lo,
                lambda_hi: lam_hi,
            });
            let mid = 0.5 * (lo + hi);
            let lam = self.lambda(mid)?;
            if (lam - 1.0).abs() <= tol {
                return Ok(BetaStarResult {
                    beta_star: mid,
                    lambda_at: lam,
                    bracket: (lo, hi),
                    iterations: it,
                    depth_used: self.depth(),
                    trace,
                });
            }
            if lam > 1.0 {
                lo = mid;
                lam_lo = lam;
            } else {
                hi = mid;
                lam_hi = lam;
            }
        }
        Err(ThermoError::NoConvergence {
            tol,
            iterations: max_iter,
            lo,
            hi,
        })
    }

    pub fn lambda_curve(&self, grid: &[f64]) -> Result<LambdaCurve, ThermoError> {
        self.require_exceeds_one()?;
        if grid.is_empty() || grid[0] < 0.0 || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(ThermoError::InvalidArgument(
                "β grid must be nonempty, nonnegative and strictly increasing".into(),
            ));
        }
        let mut samples = Vec::with_capacity(grid.len());
        for &beta in grid {
            let lambda = self.lambda(beta)?;
            let (lower_bound, upper_bound) = self.global_bounds(beta);
            for c in [
                InequalityCheck::new("global_lower", lower_bound, lambda),
                InequalityCheck::new("global_upper", lambda, upper_bound),
            ] {
                if !c.holds {
                    return Err(ThermoError::InequalityViolation {
                        name: format!("{} at β = {beta}", c.name),
                        lhs: c.lhs,
                        rhs: c.rhs,
                    });
                }
            }
            samples.push(CurveSample {
                beta,
                lambda,
                lower_bound,
                upper_bound,
            });
        }
        if let Some(w) = samples.windows(2).find(|w| !(w[1].lambda < w[0].lambda)) {
            return Err(ThermoError::MonotonicityViolation {
                beta_lo: w[0].beta,
                beta_hi: w[1].beta,
            });
        }
        Ok(LambdaCurve {
            samples,
            m: self.range.min,
            big_m: self.range.max,
            l_norm: self.l_norm,
        })
    }
}

/// `lhs ≤ rhs` up to relative slack [`INEQUALITY_SLACK`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `(rhs − lhs) / |rhs|`; negative beyond the slack means violated.
    pub margin: f64,
    pub holds: bool,
}

impl InequalityCheck {
    pub fn new(name: &str, lhs: f64, rhs: f64) -> Self {
        let scale = rhs.abs().max(lhs.abs()).max(f64::MIN_POSITIVE);
        let margin = (rhs - lhs) / scale;
        InequalityCheck {
            name: name.to_string(),
            lhs,
            rhs,
            margin,
            holds: margin >= -INEQUALITY_SLACK,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub beta: f64,
    pub delta: f64,
    pub lambda_below: f64,
    pub lambda_at: f64,
    pub lambda_above: f64,
    pub checks: Vec<InequalityCheck>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectionStep {
    pub lo: f64,
    pub hi: f64,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaStarResult {
    pub beta_star: f64,
    pub lambda_at: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    pub depth_used: usize,
    #[serde(skip)]
    pub trace: Vec<BisectionStep>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub beta: f64,
    pub lambda: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaCurve {
    pub samples: Vec<CurveSample>,
    /// Infimum of `H`.
    pub m: f64,
    /// Supremum of `H`.
    pub big_m: f64,
    pub l_norm: f64,
}

impl LambdaCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("beta,lambda,lower_bound,upper_bound\n");
        for p in &self.samples {
            writeln!(
                s,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                p.beta, p.lambda, p.lower_bound, p.upper_bound
            )
            .expect("write to string");
        }
        s
    }
}

/// `λ(β)` for the depth-`k` restriction.
pub fn lambda_of_beta(
    a: &ZeroOneMatrix,
    h: &LocallyConstantPotential,
    beta: f64,
    k: usize,
    opts: PerronOptions,
) -> Result<f64, ThermoError> {
    ThermoModel::new(a, h, k, opts)?.lambda(beta)
}

pub fn bounds_report(
    a: &ZeroOneMatrix,
    h: &LocallyConstantPotential,
    beta: f64,
    delta: f64,
    k: usize,
    opts: PerronOptions,
) -> Result<BoundsReport, ThermoError> {
    ThermoModel::new(a, h, k, opts)?.bounds_report(beta, delta)
}

pub fn beta_star(
    a: &ZeroOneMatrix,
    h: &LocallyConstantPotential,
    k: usize,
    opts: PerronOptions,
    max_iter: usize,
) -> Result<BetaStarResult, ThermoError> {
    ThermoModel::new(a, h, k, opts)?.beta_star(max_iter)
}

pub fn lambda_curve(
    a: &ZeroOneMatrix,
    h: &LocallyConstantPotential,
    grid: &[f64],
    k: usize,
    opts: PerronOptions,
) -> Result<LambdaCurve, ThermoError> {
    ThermoModel::new(a, h, k, opts)?.lambda_curve(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const E: f64 = std::f64::consts::E;
    const GOLDEN: f64 = 1.618_033_988_749_895;

    fn opts() -> PerronOptions {
        PerronOptions::default()
    }

    #[test]
    fn lambda_examples() {
        let full = ZeroOneMatrix::full(2);
        let he = LocallyConstantPotential::constant(&full, E).unwrap();
        assert_abs_diff_eq!(
            lambda_of_beta(&full, &he, 2f64.ln(), 1, opts()).unwrap(),
            1.0,
            epsilon = 1e-12
        );

        let g = ZeroOneMatrix::golden_mean();
        let hg = LocallyConstantPotential::constant(&g, E).unwrap();
        assert_abs_diff_eq!(
            lambda_of_beta(&g, &hg, 0.0, 1, opts()).unwrap(),
            GOLDEN,
            epsilon = 1e-12
        );

        let n24 = LocallyConstantPotential::from_table(&full, 1, vec![2.0, 4.0]).unwrap();
        assert_abs_diff_eq!(
            lambda_of_beta(&full, &n24, 1.0, 1, opts()).unwrap(),
            0.75,
            epsilon = 1e-12
        );
    }

    #[test]
    fn scalar_potential_sandwich_is_tight() {
        let full = ZeroOneMatrix::full(2);
        let he = LocallyConstantPotential::constant(&full, E).unwrap();
        let r = bounds_report(&full, &he, 1.0, 0.3, 1, opts()).unwrap();
        assert_abs_diff_eq!(r.lambda_below, 0.3f64.exp() * r.lambda_at, epsilon = 1e-12);
        assert!(r.checks.iter().all(|c| c.holds));
    }

    #[test]
    fn two_valued_sandwich_is_strict() {
        let full = ZeroOneMatrix::full(2);
        let n24 = LocallyConstantPotential::from_table(&full, 1, vec![2.0, 4.0]).unwrap();
        let r = bounds_report(&full, &n24, 1.0, 0.25, 1, opts()).unwrap();
        // λ(β) = 2^{−β} + 4^{−β}
        let closed = |b: f64| 2f64.powf(-b) + 4f64.powf(-b);
        assert_abs_diff_eq!(r.lambda_below, closed(0.75), epsilon = 1e-12);
        assert_abs_diff_eq!(r.lambda_above, closed(1.25), epsilon = 1e-12);
        for c in &r.checks {
            assert!(c.margin > 1e-6, "{c:?}");
        }
        assert!(bounds_report(&full, &n24, 0.1, 0.25, 1, opts()).is_err());
    }

    #[test]
    fn beta_star_examples() {
        let full = ZeroOneMatrix::full(2);
        let he = LocallyConstantPotential::constant(&full, E).unwrap();
        let r = beta_star(&full, &he, 1, opts(), 200).unwrap();
        assert_abs_diff_eq!(r.beta_star, 2f64.ln(), epsilon = 1e-8);
        assert!(r.bracket.0 <= r.beta_star && r.beta_star <= r.bracket.1);

        let n24 = LocallyConstantPotential::from_table(&full, 1, vec![2.0, 4.0]).unwrap();
        let r = beta_star(&full, &n24, 1, opts(), 200).unwrap();
        assert_abs_diff_eq!(r.beta_star, GOLDEN.ln() / 2f64.ln(), epsilon = 1e-8);

        let g = ZeroOneMatrix::golden_mean();
        let hg = LocallyConstantPotential::constant(&g, E).unwrap();
        let r = beta_star(&g, &hg, 1, opts(), 200).unwrap();
        assert_abs_diff_eq!(r.beta_star, GOLDEN.ln(), epsilon = 1e-8);
    }

    #[test]
    fn bisection_keeps_bracket() {
        let g = ZeroOneMatrix::golden_mean();
        let h = LocallyConstantPotential::from_table(&g, 2, vec![1.5, 3.0, 2.2]).unwrap();
        let r = beta_star(&g, &h, 2, opts(), 200).unwrap();
        assert!(!r.trace.is_empty());
        for s in &r.trace {
            assert!(s.lambda_lo >= 1.0 && s.lambda_hi <= 1.0, "{s:?}");
        }
        assert!((r.lambda_at - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn h_not_exceeding_one() {
        let full = ZeroOneMatrix::full(2);
        let h = LocallyConstantPotential::from_table(&full, 1, vec![1.0, 3.0]).unwrap();
        assert!(matches!(
            beta_star(&full, &h, 1, opts(), 200),
            Err(ThermoError::HNotExceedingOne { .. })
        ));
        let h = LocallyConstantPotential::from_table(&full, 1, vec![1.0 + 1e-9, 3.0]).unwrap();
        assert!(
            ThermoModel::new(&full, &h, 1, opts())
                .unwrap()
                .range()
                .exceeds_one
        );
    }

    #[test]
    fn one_point_shift_has_zero_inverse_temperature() {
        let a = ZeroOneMatrix::full(1);
        let h = LocallyConstantPotential::constant(&a, 2.0).unwrap();
        let r = beta_star(&a, &h, 1, opts(), 200).unwrap();
        assert_eq!(r.beta_star, 0.0);
    }

    #[test]
    fn curve_closed_form_and_csv() {
        let full = ZeroOneMatrix::full(2);
        let he = LocallyConstantPotential::constant(&full, E).unwrap();
        let grid: Vec<f64> = (0..=10).map(|i| 0.2 * i as f64).collect();
        let c = lambda_curve(&full, &he, &grid, 1, opts()).unwrap();
        for s in &c.samples {
            assert_abs_diff_eq!(s.lambda, 2.0 * (-s.beta).exp(), epsilon = 1e-12);
        }
        let csv = c.to_csv();
        assert!(csv.starts_with("beta,lambda,lower_bound,upper_bound\n"));
        assert_eq!(csv.lines().count(), 12);
        let crossings = c
            .samples
            .windows(2)
            .filter(|w| (w[0].lambda - 1.0) * (w[1].lambda - 1.0) < 0.0)
            .count();
        assert_eq!(crossings, 1);
        assert!(lambda_curve(&full, &he, &[0.5, 0.5], 1, opts()).is_err());
    }
}
