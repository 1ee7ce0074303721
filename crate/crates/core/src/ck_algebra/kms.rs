use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{CkElement, CuntzKrieger, Monomial};
use crate::potential::{phi_beta, LocallyConstantPotential, PotentialError};
use crate::shift_space::{CylinderSpace, Word, ZeroOneMatrix};
use crate::thermo::{ThermoError, ThermoModel};
use crate::transfer_op::{PerronData, TransferError, TransferMatrix};

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("potential depth {potential} exceeds transfer depth {transfer}")]
    DepthMismatch { potential: usize, transfer: usize },
    #[error("eigenvector has length {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error(transparent)]
    Thermo(#[from] ThermoError),
}

/// The eigenmeasure `ν` of `𝓛*` on cylinder sets, with `ν(X) = 1`.
///
/// Depth-`k` masses come from the left Perron vector. Longer words use
/// `ν([w]) = λ⁻¹ e^{φ(w)} ν([σw])`, shorter ones sum over extensions.
#[derive(Debug, Clone)]
pub struct CylinderMeasure {
    a: ZeroOneMatrix,
    space: CylinderSpace,
    nu: Vec<f64>,
    lambda: f64,
    phi: LocallyConstantPotential,
}

impl CylinderMeasure {
    pub fn from_transfer(
        m: &TransferMatrix,
        p: &PerronData,
        phi: &LocallyConstantPotential,
    ) -> Result<Self, MeasureError> {
        if phi.depth() > m.depth() {
            return Err(MeasureError::DepthMismatch {
                potential: phi.depth(),
                transfer: m.depth(),
            });
        }
        if p.nu.len() != m.dim() {
            return Err(MeasureError::Dimension {
                expected: m.dim(),
                got: p.nu.len(),
            });
        }
        Ok(CylinderMeasure {
            a: m.matrix().clone(),
            space: m.space().clone(),
            nu: p.nu.clone(),
            lambda: p.lambda,
            phi: phi.clone(),
        })
    }

    /// Eigenmeasure for `φ_β = −β log H` at the model's depth.
    pub fn at_beta(model: &ThermoModel, beta: f64) -> Result<Self, MeasureError> {
        let m = model.transfer_matrix(beta)?;
        let p = model.perron_at(beta)?;
        let phi = phi_beta(model.potential(), beta)?;
        Self::from_transfer(&m, &p, &phi)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn depth(&self) -> usize {
        self.space.depth()
    }

    /// Masses of the depth-`k` cylinders in lexicographic order.
    pub fn base_masses(&self) -> &[f64] {
        &self.nu
    }

    /// `ν([w])`; zero for inadmissible words, one for the empty word.
    pub fn measure(&self, w: &Word) -> f64 {
        if w.is_empty() {
            return 1.0;
        }
        if !self.a.is_admissible(w) {
            return 0.0;
        }
        let k = self.space.depth();
        let s = w.symbols();
        if s.len() < k {
            let words = self.space.words();
            let lo = words.partition_point(|x| x.symbols() < s);
            let hi = words.partition_point(|x| &x.symbols()[..s.len()] <= s);
            return self.nu[lo..hi].iter().sum();
        }
        let excess = s.len() - k;
        let mut factor = 1.0;
        for i in 0..excess {
            let phi = self.phi.value_at(&s[i..]).expect("admissible suffix");
            factor *= phi.exp() / self.lambda;
        }
        let base = self
            .space
            .index_of_prefix(&s[excess..])
            .expect("admissible tail");
        factor * self.nu[base]
    }
}

/// `ψ = ν∘G`: the diagonal coefficient of `S_μ S_μ*` weighted by `ν([μ])`.
pub fn kms_state(measure: &CylinderMeasure, x: &CkElement) -> Complex64 {
    x.terms()
        .filter(|(m, _)| m.is_diagonal())
        .map(|(m, c)| c * measure.measure(&m.left))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KmsMargin {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub delta: f64,
    pub passed: bool,
}

/// Compares `ψ(ab)` with `ψ(b σ_{iβ}(a))`.
pub fn kms_condition_check(
    ck: &CuntzKrieger,
    measure: &CylinderMeasure,
    h: &LocallyConstantPotential,
    beta: f64,
    a: &CkElement,
    b: &CkElement,
    tol: f64,
) -> KmsMargin {
    let lhs = kms_state(measure, &ck.multiply(a, b));
    let rhs = kms_state(measure, &ck.multiply(b, &ck.modular_flow(a, h, beta)));
    let delta = (lhs - rhs).norm();
    KmsMargin {
        lhs,
        rhs,
        delta,
        passed: delta <= tol,
    }
}

fn random_word<R: Rng + ?Sized>(a: &ZeroOneMatrix, rng: &mut R, len: usize) -> Word {
    let mut s = Vec::with_capacity(len);
    if len == 0 {
        return Word::empty();
    }
    s.push(rng.random_range(1..=a.n() as u16));
    while s.len() < len {
        let next: Vec<u16> = a.successors(*s.last().unwrap()).collect();
        s.push(next[rng.random_range(0..next.len())]);
    }
    Word::new(s)
}

/// A uniformly sized random nonzero monomial with words of length at most `max_len`.
pub fn random_monomial<R: Rng + ?Sized>(
    ck: &CuntzKrieger,
    rng: &mut R,
    max_len: usize,
) -> Monomial {
    loop {
        let l = rng.random_range(0..=max_len);
        let r = rng.random_range(0..=max_len);
        let m = Monomial::new(
            random_word(ck.matrix(), rng, l),
            random_word(ck.matrix(), rng, r),
        );
        if ck.is_nonzero(&m) {
            return m;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::ThermoModel;
    use crate::transfer_op::PerronOptions;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn golden_model(k: usize) -> (ThermoModel, LocallyConstantPotential) {
        let a = ZeroOneMatrix::golden_mean();
        let h = LocallyConstantPotential::from_table(&a, 2, vec![1.5, 2.5, 4.0]).unwrap();
        (
            ThermoModel::new(&a, &h, k, PerronOptions::default()).unwrap(),
            h,
        )
    }

    #[test]
    fn golden_mean_zero_potential() {
        let a = ZeroOneMatrix::golden_mean();
        let one = LocallyConstantPotential::constant(&a, std::f64::consts::E).unwrap();
        let model = ThermoModel::new(&a, &one, 3, PerronOptions::default()).unwrap();
        let mu = CylinderMeasure::at_beta(&model, 0.0).unwrap();
        let g = (5f64.sqrt() - 1.0) / 2.0;
        assert!((mu.measure(&Word::from([1])) - g).abs() < 1e-10);
        assert!((mu.measure(&Word::from([2])) - g * g).abs() < 1e-10);
        assert_eq!(mu.measure(&Word::empty()), 1.0);
        assert_eq!(mu.measure(&Word::from([2, 2])), 0.0);
    }

    #[test]
    fn additivity_across_depths() {
        let (model, _) = golden_model(3);
        let mu = CylinderMeasure::at_beta(&model, 0.8).unwrap();
        let a = ZeroOneMatrix::golden_mean();
        for len in 0..6 {
            let space = crate::shift_space::enumerate_cylinders(&a, len.max(1)).unwrap();
            for w in space.words().iter().filter(|w| w.len() == len.max(1)) {
                let w = if len == 0 { Word::empty() } else { w.clone() };
                let children: f64 = a.symbols().map(|k| mu.measure(&w.pushed(k))).sum();
                assert!((mu.measure(&w) - children).abs() < 1e-10, "{w}");
            }
        }
    }

    #[test]
    fn kms_at_beta_star() {
        let (model, h) = golden_model(4);
        let b = model.beta_star(200).unwrap().beta_star;
        let mu = CylinderMeasure::at_beta(&model, b).unwrap();
        let ck = CuntzKrieger::new(model.matrix());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let x = ck.from_terms([(random_monomial(&ck, &mut rng, 4), Complex64::new(1.0, 0.0))]);
            let y = ck.from_terms([(random_monomial(&ck, &mut rng, 4), Complex64::new(1.0, 0.0))]);
            let r = kms_condition_check(&ck, &mu, &h, b, &x, &y, 1e-9);
            assert!(r.passed, "{x} {y} {r:?}");
        }
    }

    #[test]
    fn kms_fails_away_from_beta_star() {
        let (model, h) = golden_model(4);
        let b = model.beta_star(200).unwrap().beta_star;
        let mu = CylinderMeasure::at_beta(&model, b + 0.5).unwrap();
        let ck = CuntzKrieger::new(model.matrix());
        let r = kms_condition_check(
            &ck,
            &mu,
            &h,
            b + 0.5,
            &ck.generator(1),
            &ck.generator_adjoint(1),
            1e-9,
        );
        assert!(!r.passed);
    }
}
