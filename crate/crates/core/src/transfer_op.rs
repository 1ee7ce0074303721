//! Finite restrictions of the Ruelle transfer operator
//! `(𝓛_φ f)(x) = Σ_{σy = x} e^{φ(y)} f(y)` to depth-`k` cylinder functions,
//! their Perron triple `(λ, h, ν)`, and checks of the algebraic identities
//! relating `𝓛`, the shift endomorphism `α(f) = f∘σ`, and `Q = 𝓛(1)`.
//!
//! For a potential of depth `d ≤ k` the depth-`k` functions form an
//! invariant subspace, so the matrix below is an exact restriction. It
//! contains the constants, hence its spectral radius is the operator's `λ`.

use std::fmt::Write as _;
use std::ops::{Add, Mul};

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::potential::{phi_beta, LocallyConstantPotential, PotentialError};
use crate::shift_space::{
    enumerate_cylinders, primitivity, q_function, CylinderSpace, Primitivity, ShiftError, Word,
    ZeroOneMatrix,
};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransferError {
    #[error("potential depth {phi_depth} exceeds matrix depth {k}")]
    DepthMismatch { phi_depth: usize, k: usize },
    #[error("vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("power iteration did not converge in {iterations} sweeps (right residual {residual_right:e}, left residual {residual_left:e})")]
    NoConvergence {
        iterations: usize,
        residual_right: f64,
        residual_left: f64,
    },
    #[error("transition matrix is not primitive; the Perron triple is not guaranteed")]
    NotPrimitive,
    #[error("depth must be at least {0} for this check")]
    DepthTooSmall(usize),
    #[error(transparent)]
    Shift(#[from] ShiftError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

/// Sparse row storage of the depth-`k` restriction of `𝓛_φ`.
///
/// Entry `(w, v)` is present iff `v = a·w₀…w_{k−2}` for some `a` with
/// `A[a][w₀] = 1`; its weight is `e^{φ(v)}`.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    a: ZeroOneMatrix,
    space: CylinderSpace,
    phi_depth: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    /// Index of the potential cylinder each entry reads its weight from.
    slots: Vec<usize>,
    weights: Vec<f64>,
    primitive: bool,
}

/// The depth-`k` sparsity pattern with every weight equal to one (`φ ≡ 0`),
/// keyed for potentials of depth `phi_depth`.
pub fn structure_matrix(
    a: &ZeroOneMatrix,
    k: usize,
    phi_depth: usize,
) -> Result<TransferMatrix, TransferError> {
    if phi_depth > k {
        return Err(TransferError::DepthMismatch { phi_depth, k });
    }
    let space = enumerate_cylinders(a, k)?;
    let phi_space = enumerate_cylinders(a, phi_depth.max(1))?;
    let mut row_ptr = Vec::with_capacity(space.len() + 1);
    let mut cols = Vec::new();
    let mut slots = Vec::new();
    row_ptr.push(0);
    for w in space.words() {
        let head = w.first().expect("nonempty");
        let tail = w.prefix(k - 1);
        for p in a.predecessors(head) {
            let v = Word::new(vec![p]).concat(&tail);
            cols.push(space.index_of(&v).expect("admissible preimage"));
            slots.push(
                phi_space
                    .index_of_prefix(v.symbols())
                    .expect("admissible prefix"),
            );
        }
        row_ptr.push(cols.len());
    }
    let weights = vec![1.0; cols.len()];
    Ok(TransferMatrix {
        a: a.clone(),
        space,
        phi_depth: phi_depth.max(1),
        row_ptr,
        cols,
        slots,
        weights,
        primitive: matches!(primitivity(a), Primitivity::Primitive(_)),
    })
}

pub fn build_transfer_matrix(
    a: &ZeroOneMatrix,
    phi: &LocallyConstantPotential,
    k: usize,
) -> Result<TransferMatrix, TransferError> {
    structure_matrix(a, k, phi.depth())?.reweighted(phi)
}

impl TransferMatrix {
    /// Same pattern, weights `e^{φ}` from a potential of the keyed depth.
    /// Costs one pass over the nonzeros.
    pub fn reweighted(
        &self,
        phi: &LocallyConstantPotential,
    ) -> Result<TransferMatrix, TransferError> {
        if phi.depth() != self.phi_depth {
            return Err(TransferError::DepthMismatch {
                phi_depth: phi.depth(),
                k: self.phi_depth,
            });
        }
        let exp_phi: Vec<f64> = phi.values().iter().map(|v| v.exp()).collect();
        let mut m = self.clone();
        m.weights = self.slots.iter().map(|&s| exp_phi[s]).collect();
        Ok(m)
    }

    pub fn depth(&self) -> usize {
        self.space.depth()
    }

    pub fn space(&self) -> &CylinderSpace {
        &self.space
    }

    pub fn matrix(&self) -> &ZeroOneMatrix {
        &self.a
    }

    pub fn dim(&self) -> usize {
        self.space.len()
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn is_primitive(&self) -> bool {
        self.primitive
    }

    /// `(column, weight)` pairs of row `w`, columns ascending.
    pub fn row(&self, w: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[w]..self.row_ptr[w + 1];
        self.cols[r.clone()]
            .iter()
            .copied()
            .zip(self.weights[r].iter().copied())
    }

    fn check_dim(&self, len: usize) -> Result<(), TransferError> {
        if len != self.dim() {
            return Err(TransferError::DimensionMismatch {
                expected: self.dim(),
                got: len,
            });
        }
        Ok(())
    }

    /// `(Mf)(w) = Σ_v M(w,v) f(v)`; works for real and complex vectors.
    pub fn apply<T>(&self, f: &[T]) -> Result<Vec<T>, TransferError>
    where
        T: Copy + Zero + Add<Output = T> + Mul<f64, Output = T>,
    {
        self.check_dim(f.len())?;
        Ok(self.apply_unchecked(f))
    }

    fn apply_unchecked<T>(&self, f: &[T]) -> Vec<T>
    where
        T: Copy + Zero + Add<Output = T> + Mul<f64, Output = T>,
    {
        (0..self.dim())
            .map(|w| self.row(w).fold(T::zero(), |acc, (v, x)| acc + f[v] * x))
            .collect()
    }

    /// `(νᵀM)(v) = Σ_w ν(w) M(w,v)`.
    pub fn apply_transpose(&self, nu: &[f64]) -> Result<Vec<f64>, TransferError> {
        self.check_dim(nu.len())?;
        Ok(self.apply_transpose_unchecked(nu))
    }

    fn apply_transpose_unchecked(&self, nu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (w, &nw) in nu.iter().enumerate() {
            for (v, x) in self.row(w) {
                out[v] += nw * x;
            }
        }
        out
    }

    /// Coordinate-list dump, one `row col weight` line per entry.
    pub fn to_coordinate_list(&self) -> String {
        let mut s = String::new();
        for w in 0..self.dim() {
            for (v, x) in self.row(w) {
                writeln!(s, "{w} {v} {x:.16e}").expect("write to string");
            }
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerronOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for PerronOptions {
    fn default() -> Self {
        PerronOptions {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            seed: 0,
        }
    }
}

/// Leading eigenvalue with right eigenvector `h` and left eigenvector `ν`,
/// normalized so that `Σν = 1` and `Σ ν(w)h(w) = 1`.
///
/// Residuals are relative: `‖Mh − λh‖_∞ / (λ‖h‖_∞)` and `‖νM − λν‖₁ / λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerronData {
    pub lambda: f64,
    pub h: Vec<f64>,
    pub nu: Vec<f64>,
    pub residual_right: f64,
    pub residual_left: f64,
    pub iterations: usize,
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn residuals(m: &TransferMatrix, lambda: f64, h: &[f64], nu: &[f64]) -> (f64, f64) {
    let mh = m.apply_unchecked(h);
    let nm = m.apply_transpose_unchecked(nu);
    let hn = sup_norm(h);
    let rr = mh
        .iter()
        .zip(h)
        .fold(0.0f64, |r, (a, b)| r.max((a - lambda * b).abs()));
    let rl: f64 = nm.iter().zip(nu).map(|(a, b)| (a - lambda * b).abs()).sum();
    (rr / (lambda * hn), rl / (lambda * l1_norm(nu)))
}

/// Seeded start: the uniform vector plus jitter in `[0, 0.5)`.
fn jittered_start(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..dim).map(|_| 1.0 + 0.5 * rng.random::<f64>()).collect()
}

/// Power iteration on `M` and `Mᵀ` from the seeded default start.
pub fn perron(m: &TransferMatrix, opts: &PerronOptions) -> Result<PerronData, TransferError> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let h0 = jittered_start(m.dim(), &mut rng);
    let nu0 = jittered_start(m.dim(), &mut rng);
    perron_from(m, opts, h0, nu0)
}

/// Power iteration from caller-supplied positive starting vectors.
///
/// Converged when both relative residuals and the relative change of the
/// eigenvalue estimate between sweeps are at most `tol`.
pub fn perron_from(
    m: &TransferMatrix,
    opts: &PerronOptions,
    h0: Vec<f64>,
    nu0: Vec<f64>,
) -> Result<PerronData, TransferError> {
    if !m.primitive {
        return Err(TransferError::NotPrimitive);
    }
    m.check_dim(h0.len())?;
    m.check_dim(nu0.len())?;
    let tol = opts.tol;
    let mut h = h0;
    let mut nu = nu0;
    let s = sup_norm(&h);
    h.iter_mut().for_each(|x| *x /= s);
    let s = l1_norm(&nu);
    nu.iter_mut().for_each(|x| *x /= s);

    let mut lambda_prev = f64::NAN;
    let mut last = (f64::INFINITY, f64::INFINITY);
    for it in 1..=opts.max_iter {
        let mh = m.apply_unchecked(&h);
        let nm = m.apply_transpose_unchecked(&nu);
        let lambda = dot(&nu, &mh) / dot(&nu, &h);
        let rr = mh
            .iter()
            .zip(&h)
            .fold(0.0f64, |r, (a, b)| r.max((a - lambda * b).abs()));
        let rl: f64 = nm
            .iter()
            .zip(&nu)
            .map(|(a, b)| (a - lambda * b).abs())
            .sum();
        last = (rr / lambda, rl / lambda);

        let s = sup_norm(&mh);
        h = mh.into_iter().map(|x| x / s).collect();
        let s = l1_norm(&nm);
        nu = nm.into_iter().map(|x| x / s).collect();

        let settled = (lambda - lambda_prev).abs() <= tol * lambda;
        if last.0 <= tol && last.1 <= tol && settled {
            let lambda = dot(&nu, &m.apply_unchecked(&h)) / dot(&nu, &h);
            let c = dot(&nu, &h);
            h.iter_mut().for_each(|x| *x /= c);
            let (residual_right, residual_left) = residuals(m, lambda, &h, &nu);
            return Ok(PerronData {
                lambda,
                h,
                nu,
                residual_right,
                residual_left,
                iterations: it,
            });
        }
        lambda_prev = lambda;
    }
    Err(TransferError::NoConvergence {
        iterations: opts.max_iter,
        residual_right: last.0,
        residual_left: last.1,
    })
}

/// `‖M^k 1‖_∞^{1/k}`, renormalizing each step and accumulating log-norms.
///
/// Independent of the eigen-iteration. Note the `O(1/k)` bias: for
/// `M^k 1 ≈ λ^k h` the estimate is `λ ‖h‖_∞^{1/k}` (with `ν(h) = 1`).
pub fn lambda_by_iterate_norm(m: &TransferMatrix, k_iter: usize) -> f64 {
    assert!(k_iter >= 1);
    let mut v = vec![1.0; m.dim()];
    let mut log_sum = 0.0;
    for _ in 0..k_iter {
        v = m.apply_unchecked(&v);
        let s = sup_norm(&v);
        v.iter_mut().for_each(|x| *x /= s);
        log_sum += s.ln();
    }
    (log_sum / k_iter as f64).exp()
}

/// `dev_k = ‖λ^{−k} M^k g − ν(g) h‖_∞` for `k = 1, …, k_max`.
pub fn rpf_convergence_report(
    m: &TransferMatrix,
    p: &PerronData,
    g: &[f64],
    k_max: usize,
) -> Result<Vec<f64>, TransferError> {
    m.check_dim(g.len())?;
    let nu_g = dot(&p.nu, g);
    let mut v = g.to_vec();
    let mut devs = Vec::with_capacity(k_max);
    for _ in 0..k_max {
        v = m.apply_unchecked(&v);
        v.iter_mut().for_each(|x| *x /= p.lambda);
        devs.push(
            v.iter()
                .zip(&p.h)
                .fold(0.0f64, |d, (a, b)| d.max((a - nu_g * b).abs())),
        );
    }
    Ok(devs)
}

/// Largest pairwise ℓ₁ distance between the normalized left eigenvectors
/// obtained from `restarts` random positive starting vectors.
pub fn restart_spread(
    m: &TransferMatrix,
    opts: &PerronOptions,
    restarts: usize,
) -> Result<f64, TransferError> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut nus = Vec::with_capacity(restarts);
    for _ in 0..restarts {
        let h0: Vec<f64> = (0..m.dim()).map(|_| 1e-3 + rng.random::<f64>()).collect();
        let nu0: Vec<f64> = (0..m.dim()).map(|_| 1e-3 + rng.random::<f64>()).collect();
        nus.push(perron_from(m, opts, h0, nu0)?.nu);
    }
    let mut spread = 0.0f64;
    for i in 0..nus.len() {
        for j in i + 1..nus.len() {
            let d: f64 = nus[i].iter().zip(&nus[j]).map(|(a, b)| (a - b).abs()).sum();
            spread = spread.max(d);
        }
    }
    Ok(spread)
}

/// Depth-`k` and depth-`(k−1)` coordinates plus the maps between them.
struct DepthPair {
    fine: CylinderSpace,
    coarse: CylinderSpace,
    /// `fine` index → `coarse` index of `w₁…w_{k−1}` (the shift).
    shift_of: Vec<usize>,
    /// `fine` index → `coarse` index of `w₀…w_{k−2}` (the prefix).
    prefix_of: Vec<usize>,
    /// `coarse` index → some `fine` index extending it.
    child_of: Vec<usize>,
    /// `Q(w₀)` on `fine`.
    q: Vec<f64>,
}

impl DepthPair {
    fn new(a: &ZeroOneMatrix, k: usize) -> Result<Self, TransferError> {
        if k < 2 {
            return Err(TransferError::DepthTooSmall(2));
        }
        let fine = enumerate_cylinders(a, k)?;
        let coarse = enumerate_cylinders(a, k - 1)?;
        let shift_of = fine
            .words()
            .iter()
            .map(|w| coarse.index_of(&w.shifted()).expect("admissible"))
            .collect();
        let prefix_of = fine
            .words()
            .iter()
            .map(|w| coarse.index_of(&w.prefix(k - 1)).expect("admissible"))
            .collect();
        let child_of = coarse
            .words()
            .iter()
            .map(|u| {
                let s = a.successors(u.last().unwrap()).next().unwrap();
                fine.index_of(&u.pushed(s)).expect("admissible")
            })
            .collect();
        let qf = q_function(a);
        let q = fine
            .words()
            .iter()
            .map(|w| qf[w.first().unwrap() as usize - 1] as f64)
            .collect();
        Ok(DepthPair {
            fine,
            coarse,
            shift_of,
            prefix_of,
            child_of,
            q,
        })
    }

    /// `α(f) = f∘σ` from depth `k−1` to depth `k`.
    fn alpha(&self, f: &[f64]) -> Vec<f64> {
        self.shift_of.iter().map(|&i| f[i]).collect()
    }

    /// A depth-`(k−1)` function viewed at depth `k`.
    fn lift(&self, f: &[f64]) -> Vec<f64> {
        self.prefix_of.iter().map(|&i| f[i]).collect()
    }

    /// Reads a depth-`k` vector that is constant on depth-`(k−1)` cylinders.
    fn project(&self, g: &[f64]) -> Vec<f64> {
        self.child_of.iter().map(|&i| g[i]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub max_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityViolation {
    pub name: String,
    pub error: f64,
    pub witness: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub depth: usize,
    pub trials: usize,
    pub tol: f64,
    pub checks: Vec<IdentityCheck>,
    pub first_violation: Option<IdentityViolation>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.first_violation.is_none()
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

struct Tally {
    tol: f64,
    checks: Vec<IdentityCheck>,
    first_violation: Option<IdentityViolation>,
}

impl Tally {
    fn new(tol: f64, names: &[&str]) -> Self {
        Tally {
            tol,
            checks: names
                .iter()
                .map(|n| IdentityCheck {
                    name: n.to_string(),
                    max_error: 0.0,
                    passed: true,
                })
                .collect(),
            first_violation: None,
        }
    }

    fn record(&mut self, idx: usize, error: f64, witness: &[f64]) {
        let c = &mut self.checks[idx];
        c.max_error = c.max_error.max(error);
        if !(error <= self.tol) {
            c.passed = false;
            if self.first_violation.is_none() {
                self.first_violation = Some(IdentityViolation {
                    name: c.name.clone(),
                    error,
                    witness: witness.to_vec(),
                });
            }
        }
    }
}

/// Checks on random vectors, at depth `k ≥ 2`:
/// `α` is composition with the shift, `α(1) = 1`, `𝓛(1) = Q`, `L(1) = 1`
/// for `L = Q⁻¹𝓛`, `L(α(f)g) = f·L(g)`, and `E = α∘L` satisfies `E² = E`
/// and `E(α(f)) = α(f)`.
pub fn algebra_identity_suite(
    a: &ZeroOneMatrix,
    k: usize,
    trials: usize,
    tol: f64,
    seed: u64,
) -> Result<IdentityReport, TransferError> {
    let dp = DepthPair::new(a, k)?;
    let m = structure_matrix(a, k, 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nf = dp.fine.len();
    let nc = dp.coarse.len();
    let big_l = |g: &[f64]| -> Vec<f64> {
        m.apply_unchecked(g)
            .iter()
            .zip(&dp.q)
            .map(|(x, q)| x / q)
            .collect()
    };
    let e_op = |g: &[f64]| -> Vec<f64> { dp.alpha(&dp.project(&big_l(g))) };

    let mut t = Tally::new(
        tol,
        &[
            "alpha_is_shift_composition",
            "alpha_one_is_one",
            "transfer_of_one_is_q",
            "normalized_transfer_of_one_is_one",
            "transfer_identity",
            "expectation_idempotent",
            "expectation_fixes_alpha_range",
        ],
    );

    let ones_c = vec![1.0; nc];
    let ones_f = vec![1.0; nf];
    let a1 = dp.alpha(&ones_c);
    t.record(1, max_diff(&a1, &ones_f), &ones_c);
    let l1 = m.apply_unchecked(&ones_f);
    t.record(2, max_diff(&l1, &dp.q), &ones_f);
    t.record(3, max_diff(&big_l(&ones_f), &ones_f), &ones_f);

    for _ in 0..trials {
        let f: Vec<f64> = (0..nc).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g: Vec<f64> = (0..nf).map(|_| rng.random_range(-1.0..1.0)).collect();

        // α(f)(w) read directly from the word w₁…w_{k−1}
        let af = dp.alpha(&f);
        let direct: Vec<f64> = dp
            .fine
            .words()
            .iter()
            .map(|w| f[dp.coarse.index_of(&w.shifted()).unwrap()])
            .collect();
        t.record(0, max_diff(&af, &direct), &f);

        let afg: Vec<f64> = af.iter().zip(&g).map(|(x, y)| x * y).collect();
        let lhs = big_l(&afg);
        let rhs: Vec<f64> = dp
            .lift(&f)
            .iter()
            .zip(big_l(&g))
            .map(|(x, y)| x * y)
            .collect();
        t.record(4, max_diff(&lhs, &rhs), &g);

        let eg = e_op(&g);
        t.record(5, max_diff(&e_op(&eg), &eg), &g);
        t.record(6, max_diff(&e_op(&af), &af), &f);
    }
    Ok(IdentityReport {
        depth: k,
        trials,
        tol,
        checks: t.checks,
        first_violation: t.first_violation,
    })
}

/// Largest error over `trials` random depth-`k` vectors `f` of the pointwise
/// identity `Q⁻¹ 𝓛(H^{−β}·(Q∘σ)·f) = 𝓛_{φ_β}(f)`, i.e. the index factor of
/// the fixed-measure condition realized as `Q∘σ`.
pub fn index_identity_error(
    a: &ZeroOneMatrix,
    h: &LocallyConstantPotential,
    beta: f64,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<f64, TransferError> {
    let dp = DepthPair::new(a, k)?;
    let plain = structure_matrix(a, k, 1)?;
    let weighted = build_transfer_matrix(a, &phi_beta(h, beta)?, k)?;
    let h_pow = h.map(|v| v.powf(-beta)).lift_to(&dp.fine)?;
    let q_coarse = dp.project(&dp.q);
    let q_shift = dp.alpha(&q_coarse);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let f: Vec<f64> = (0..dp.fine.len())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let inner: Vec<f64> = (0..f.len()).map(|i| h_pow[i] * q_shift[i] * f[i]).collect();
        let lhs: Vec<f64> = plain
            .apply_unchecked(&inner)
            .iter()
            .zip(&dp.q)
            .map(|(x, q)| x / q)
            .collect();
        let rhs = weighted.apply_unchecked(&f);
        worst = worst.max(max_diff(&lhs, &rhs));
    }
    Ok(worst)
}
