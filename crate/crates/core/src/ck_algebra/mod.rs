//! Word calculus on the dense span of monomials `S_μ S_ρ*` in the
//! Cuntz-Krieger algebra `O_A`.
//!
//! Relations used: `S_i* S_j = 0` for `i ≠ j`, `S_i* S_i = Σ_k A[i][k] S_k S_k*`,
//! and `Σ_k S_k S_k* = 1`. Together they give the refinement identity
//!
//! ```text
//! S_μ S_ρ* = Σ_k g(μ,k) g(ρ,k) S_{μk} S_{ρk}*,   g(∅,k) = 1, g(w,k) = A[last w][k]
//! ```
//!
//! Monomials of one fixed pair of lengths `(|μ|, |ρ|)` are linearly
//! independent, so an element has a unique expansion at each refinement
//! level. The canonical form of an element is, per grade `|μ| − |ρ|`, the
//! expansion at the coarsest level at which one exists.

mod kms;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::potential::LocallyConstantPotential;
use crate::shift_space::{CylinderSpace, ShiftError, Symbol, Word, ZeroOneMatrix};

pub use kms::{
    kms_condition_check, kms_state, random_monomial, CylinderMeasure, KmsMargin, MeasureError,
};

/// `S_μ S_ρ*` with `left = μ` and `right = ρ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Monomial {
    pub left: Word,
    pub right: Word,
}

impl Monomial {
    pub fn new(left: Word, right: Word) -> Self {
        Monomial { left, right }
    }

    pub fn unit() -> Self {
        Monomial::new(Word::empty(), Word::empty())
    }

    pub fn is_diagonal(&self) -> bool {
        self.left == self.right
    }

    /// `|μ| − |ρ|`.
    pub fn grade(&self) -> i64 {
        self.left.len() as i64 - self.right.len() as i64
    }

    /// Refinement depth `min(|μ|, |ρ|)`.
    pub fn level(&self) -> usize {
        self.left.len().min(self.right.len())
    }

    pub fn adjoint(&self) -> Monomial {
        Monomial::new(self.right.clone(), self.left.clone())
    }
}

/// `mu|rho` with comma-separated symbols; `e` for the empty word.
impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.left, self.right)
    }
}

impl FromStr for Monomial {
    type Err = ShiftError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (l, r) = s
            .split_once('|')
            .ok_or_else(|| ShiftError::WordSyntax(s.to_string()))?;
        Ok(Monomial::new(l.parse()?, r.parse()?))
    }
}

/// A finite linear combination of nonzero monomials, kept canonical.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CkElement {
    terms: BTreeMap<Monomial, Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    pub left: String,
    pub right: String,
    pub re: f64,
    pub im: f64,
}

impl CkElement {
    pub fn zero() -> Self {
        CkElement::default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Complex64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> Complex64 {
        self.terms.get(m).copied().unwrap_or_default()
    }

    /// Swaps left and right words and conjugates coefficients.
    pub fn adjoint(&self) -> CkElement {
        CkElement {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.adjoint(), c.conj()))
                .collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> CkElement {
        if s == Complex64::default() {
            return CkElement::zero();
        }
        CkElement {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect(),
        }
    }

    /// Largest coefficient-wise distance; both sides must be canonical.
    pub fn max_distance(&self, other: &CkElement) -> f64 {
        let mut d = 0.0f64;
        for (m, c) in &self.terms {
            d = d.max((c - other.coefficient(m)).norm());
        }
        for (m, c) in &other.terms {
            if !self.terms.contains_key(m) {
                d = d.max(c.norm());
            }
        }
        d
    }

    pub fn to_records(&self) -> Vec<TermRecord> {
        self.terms
            .iter()
            .map(|(m, c)| TermRecord {
                left: m.left.to_string(),
                right: m.right.to_string(),
                re: c.re,
                im: c.im,
            })
            .collect()
    }
}

impl fmt::Display for CkElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({c})·[{m}]")?;
        }
        Ok(())
    }
}

/// The Cuntz-Krieger relations of a fixed matrix `A`.
#[derive(Debug, Clone)]
pub struct CuntzKrieger {
    a: ZeroOneMatrix,
}

impl CuntzKrieger {
    pub fn new(a: &ZeroOneMatrix) -> Self {
        CuntzKrieger { a: a.clone() }
    }

    pub fn matrix(&self) -> &ZeroOneMatrix {
        &self.a
    }

    #[inline]
    fn gate(&self, w: &Word, k: Symbol) -> bool {
        w.last().is_none_or(|l| self.a.get(l, k))
    }

    /// Both words admissible and, when both are nonempty, the source
    /// projections of their last letters overlap.
    pub fn is_nonzero(&self, m: &Monomial) -> bool {
        if !self.a.is_admissible(&m.left) || !self.a.is_admissible(&m.right) {
            return false;
        }
        match (m.left.last(), m.right.last()) {
            (Some(i), Some(j)) => self
                .a
                .symbols()
                .any(|k| self.a.get(i, k) && self.a.get(j, k)),
            _ => true,
        }
    }

    pub fn unit(&self) -> CkElement {
        self.monomial(Word::empty(), Word::empty())
    }

    /// `S_μ S_ρ*`, or zero when the monomial vanishes.
    pub fn monomial(&self, left: Word, right: Word) -> CkElement {
        self.from_terms([(Monomial::new(left, right), Complex64::new(1.0, 0.0))])
    }

    /// `S_j`.
    pub fn generator(&self, j: Symbol) -> CkElement {
        self.monomial(Word::new(vec![j]), Word::empty())
    }

    /// `S_j*`.
    pub fn generator_adjoint(&self, j: Symbol) -> CkElement {
        self.monomial(Word::empty(), Word::new(vec![j]))
    }

    /// `P_j = S_j S_j*`.
    pub fn projection(&self, j: Symbol) -> CkElement {
        self.monomial(Word::new(vec![j]), Word::new(vec![j]))
    }

    /// Builds the canonical form of `Σ c·m`; vanishing monomials are dropped.
    pub fn from_terms(&self, terms: impl IntoIterator<Item = (Monomial, Complex64)>) -> CkElement {
        let mut grades: BTreeMap<i64, Vec<(Monomial, Complex64)>> = BTreeMap::new();
        for (m, c) in terms {
            if c != Complex64::default() && self.is_nonzero(&m) {
                grades.entry(m.grade()).or_default().push((m, c));
            }
        }
        let mut out = BTreeMap::new();
        for (_, group) in grades {
            out.extend(self.canonical_grade(group));
        }
        CkElement { terms: out }
    }

    fn children(&self, m: &Monomial) -> Vec<(Symbol, Monomial)> {
        self.a
            .symbols()
            .filter(|&k| self.gate(&m.left, k) && self.gate(&m.right, k))
            .map(|k| (k, Monomial::new(m.left.pushed(k), m.right.pushed(k))))
            .collect()
    }

    fn refine_into(
        &self,
        m: Monomial,
        c: Complex64,
        level: usize,
        acc: &mut BTreeMap<Monomial, Complex64>,
    ) {
        if m.level() >= level {
            *acc.entry(m).or_default() += c;
            return;
        }
        let kids = self.children(&m);
        for (_, kid) in kids {
            self.refine_into(kid, c, level, acc);
        }
    }

    fn canonical_grade(&self, group: Vec<(Monomial, Complex64)>) -> BTreeMap<Monomial, Complex64> {
        let level = group.iter().map(|(m, _)| m.level()).max().unwrap_or(0);
        let mut current = BTreeMap::new();
        for (m, c) in group {
            self.refine_into(m, c, level, &mut current);
        }
        current.retain(|_, c| *c != Complex64::default());
        while let Some(coarser) = self.coarsen(&current) {
            current = coarser;
        }
        current
    }

    /// One level coarser, if every term belongs to a complete sibling group
    /// with a common coefficient.
    fn coarsen(
        &self,
        terms: &BTreeMap<Monomial, Complex64>,
    ) -> Option<BTreeMap<Monomial, Complex64>> {
        if terms.is_empty() {
            return None;
        }
        let mut parents: BTreeMap<Monomial, Vec<(Symbol, Complex64)>> = BTreeMap::new();
        for (m, c) in terms {
            let (l, r) = (m.left.last()?, m.right.last()?);
            if l != r {
                return None;
            }
            let parent = Monomial::new(
                m.left.prefix(m.left.len() - 1),
                m.right.prefix(m.right.len() - 1),
            );
            parents.entry(parent).or_default().push((l, *c));
        }
        let mut out = BTreeMap::new();
        for (parent, kids) in parents {
            let c0 = kids[0].1;
            if kids.iter().any(|&(_, c)| c != c0) {
                return None;
            }
            let expected: Vec<Symbol> =
                self.children(&parent).into_iter().map(|(k, _)| k).collect();
            let got: Vec<Symbol> = kids.iter().map(|&(k, _)| k).collect();
            if expected != got {
                return None;
            }
            out.insert(parent, c0);
        }
        Some(out)
    }

    /// Conditional expectation onto the diagonal: keeps the `μ = ρ` terms.
    /// The result is re-canonicalized, since dropping off-diagonal terms can
    /// complete a sibling group.
    pub fn expectation(&self, x: &CkElement) -> CkElement {
        self.from_terms(
            x.terms
                .iter()
                .filter(|(m, _)| m.is_diagonal())
                .map(|(m, c)| (m.clone(), *c)),
        )
    }

    pub fn add(&self, x: &CkElement, y: &CkElement) -> CkElement {
        self.from_terms(
            x.terms
                .iter()
                .chain(y.terms.iter())
                .map(|(m, c)| (m.clone(), *c)),
        )
    }

    pub fn sum<'a>(&self, xs: impl IntoIterator<Item = &'a CkElement>) -> CkElement {
        self.from_terms(
            xs.into_iter()
                .flat_map(|x| x.terms.iter().map(|(m, c)| (m.clone(), *c))),
        )
    }

    /// `(S_μ S_ρ*)(S_σ S_τ*)` as a list of monomials (before canonicalization).
    fn multiply_monomials(&self, x: &Monomial, y: &Monomial, out: &mut Vec<Monomial>) {
        let (mu, rho, sigma, tau) = (&x.left, &x.right, &y.left, &y.right);
        if let Some(u) = sigma.strip_prefix(rho).filter(|u| !u.is_empty()) {
            // S_ρ* S_{ρu} = S_u (the gate A[last ρ][u₀] holds since σ is admissible)
            if self.gate(mu, u.first().unwrap()) {
                out.push(Monomial::new(mu.concat(&u), tau.clone()));
            }
        } else if let Some(u) = rho.strip_prefix(sigma).filter(|u| !u.is_empty()) {
            if self.gate(tau, u.first().unwrap()) {
                out.push(Monomial::new(mu.clone(), tau.concat(&u)));
            }
        } else if rho == sigma {
            match rho.last() {
                None => out.push(Monomial::new(mu.clone(), tau.clone())),
                Some(l) => {
                    // S_ρ* S_ρ = Σ_k A[l][k] S_k S_k*, absorbed on both sides
                    for k in self.a.successors(l) {
                        if self.gate(mu, k) && self.gate(tau, k) {
                            out.push(Monomial::new(mu.pushed(k), tau.pushed(k)));
                        }
                    }
                }
            }
        }
    }

    pub fn multiply(&self, x: &CkElement, y: &CkElement) -> CkElement {
        let mut terms = Vec::new();
        let mut buf = Vec::new();
        for (mx, cx) in &x.terms {
            for (my, cy) in &y.terms {
                buf.clear();
                self.multiply_monomials(mx, my, &mut buf);
                let c = cx * cy;
                terms.extend(buf.drain(..).map(|m| (m, c)));
            }
        }
        self.from_terms(terms)
    }

    pub fn product<'a>(&self, xs: impl IntoIterator<Item = &'a CkElement>) -> CkElement {
        xs.into_iter()
            .fold(self.unit(), |acc, x| self.multiply(&acc, x))
    }

    /// `Σ_w f(w) S_w S_w*` for a table on the cylinders of `space`.
    pub fn embed_complex(&self, space: &CylinderSpace, values: &[Complex64]) -> CkElement {
        self.from_terms(
            space
                .words()
                .iter()
                .zip(values)
                .map(|(w, &c)| (Monomial::new(w.clone(), w.clone()), c)),
        )
    }

    pub fn embed_function(&self, f: &LocallyConstantPotential) -> CkElement {
        let values: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.embed_complex(f.space(), &values)
    }

    /// Applies the multiplicative map fixed by the images of `S_j` and
    /// `S_j*` (indexed by `j − 1`) to each monomial.
    fn apply_on_generators(
        &self,
        x: &CkElement,
        gen_images: &[CkElement],
        adj_images: &[CkElement],
    ) -> CkElement {
        let mut parts = Vec::with_capacity(x.len());
        for (m, c) in &x.terms {
            let mut acc = self.unit();
            for &s in m.left.symbols() {
                acc = self.multiply(&acc, &gen_images[s as usize - 1]);
            }
            for &s in m.right.symbols().iter().rev() {
                acc = self.multiply(&acc, &adj_images[s as usize - 1]);
            }
            parts.push(acc.scale(*c));
        }
        self.sum(parts.iter())
    }

    /// Automorphism with `S_j ↦ u·S_j` and `S_j* ↦ S_j*·v` for diagonal `u`, `v`.
    fn diagonal_twist(&self, x: &CkElement, u: &CkElement, v: &CkElement) -> CkElement {
        let gens: Vec<CkElement> = self
            .a
            .symbols()
            .map(|j| self.multiply(u, &self.generator(j)))
            .collect();
        let adjs: Vec<CkElement> = self
            .a
            .symbols()
            .map(|j| self.multiply(&self.generator_adjoint(j), v))
            .collect();
        self.apply_on_generators(x, &gens, &adjs)
    }

    /// Generalized gauge action: `γ_t(S_j) = H^{it} S_j`, `γ_t(S_j*) = S_j* H^{−it}`.
    pub fn gauge_action(&self, x: &CkElement, h: &LocallyConstantPotential, t: f64) -> CkElement {
        let phase = |sign: f64| -> Vec<Complex64> {
            h.values()
                .iter()
                .map(|&v| Complex64::from_polar(1.0, sign * t * v.ln()))
                .collect()
        };
        let u = self.embed_complex(h.space(), &phase(1.0));
        let v = self.embed_complex(h.space(), &phase(-1.0));
        self.diagonal_twist(x, &u, &v)
    }

    /// The gauge action continued to `t = iβ`:
    /// `σ_{iβ}(S_j) = H^{−β} S_j` and `σ_{iβ}(S_j*) = S_j* H^{β}`.
    pub fn modular_flow(
        &self,
        x: &CkElement,
        h: &LocallyConstantPotential,
        beta: f64,
    ) -> CkElement {
        let u = self.embed_function(&h.map(|v| v.powf(-beta)));
        let v = self.embed_function(&h.map(|v| v.powf(beta)));
        self.diagonal_twist(x, &u, &v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn w<const N: usize>(s: [Symbol; N]) -> Word {
        Word::from(s)
    }

    #[test]
    fn projection_is_idempotent() {
        let ck = CuntzKrieger::new(&ZeroOneMatrix::full(2));
        let p = ck.projection(1);
        assert_eq!(ck.multiply(&p, &p), p);
        let g = CuntzKrieger::new(&ZeroOneMatrix::golden_mean());
        let p = g.projection(1);
        assert_eq!(g.multiply(&p, &p), p);
    }

    #[test]
    fn orthogonal_ranges() {
        let ck = CuntzKrieger::new(&ZeroOneMatrix::full(2));
        assert!(ck
            .multiply(&ck.generator_adjoint(1), &ck.generator(2))
            .is_zero());
    }

    #[test]
    fn golden_mean_source_projection() {
        let ck = CuntzKrieger::new(&ZeroOneMatrix::golden_mean());
        let r = ck.multiply(&ck.generator_adjoint(2), &ck.generator(2));
        assert_eq!(r, ck.projection(1));
        let r = ck.multiply(&ck.generator_adjoint(1), &ck.generator(1));
        assert_eq!(r, ck.unit());
    }

    #[test]
    fn source_projection_times_adjoint() {
        // S₂*S₂ S₁* = P₁ S₁* = S₁ S_{11}* on the golden mean shift
        let ck = CuntzKrieger::new(&ZeroOneMatrix::golden_mean());
        let lhs = ck.product([
            &ck.generator_adjoint(2),
            &ck.generator(2),
            &ck.generator_adjoint(1),
        ]);
        assert_eq!(lhs, ck.monomial(w([1]), w([1, 1])));
        assert_ne!(lhs, ck.generator_adjoint(1));
    }

    #[test]
    fn partition_of_unity() {
        for a in [ZeroOneMatrix::full(3), ZeroOneMatrix::golden_mean()] {
            let ck = CuntzKrieger::new(&a);
            let projections: Vec<CkElement> = a.symbols().map(|j| ck.projection(j)).collect();
            assert_eq!(ck.sum(projections.iter()), ck.unit());
        }
    }

    #[test]
    fn single_child_coarsens() {
        // S_{21}S_{21}* = S₂ P₁ S₂* = S₂S₂* when A[2] = (1, 0)
        let ck = CuntzKrieger::new(&ZeroOneMatrix::golden_mean());
        assert_eq!(ck.monomial(w([2, 1]), w([2, 1])), ck.projection(2));
    }

    #[test]
    fn vanishing_monomials() {
        let ck = CuntzKrieger::new(&ZeroOneMatrix::golden_mean());
        assert!(ck.monomial(w([2, 2]), Word::empty()).is_zero());
        // A[2][·] and A[2][·] overlap only in 1, fine; inadmissible right word vanishes
        assert!(ck.monomial(w([1]), w([2, 2])).is_zero());
        assert!(!ck.monomial(w([2]), w([2])).is_zero());
    }

    #[test]
    fn adjoint_examples() {
        let ck = CuntzKrieger::new(&ZeroOneMatrix::full(2));
        assert_eq!(
            ck.monomial(w([1]), w([2])).adjoint(),
            ck.monomial(w([2]), w([1]))
        );
        assert_eq!(ck.unit().adjoint(), ck.unit());
        let x = ck.generator(1).scale(c(2.0, 1.0));
        assert_eq!(x.adjoint(), ck.generator_adjoint(1).scale(c(2.0, -1.0)));
        assert_eq!(x.adjoint().adjoint(), x);
    }

    #[test]
    fn expectation_examples() {
        let ck = CuntzKrieger::new(&ZeroOneMatrix::full(2));
        assert!(ck.expectation(&ck.monomial(w([1]), w([2]))).is_zero());
        assert_eq!(ck.expectation(&ck.projection(1)), ck.projection(1));
        let x = ck.add(
            &ck.projection(1).scale(c(2.0, 0.0)),
            &ck.monomial(w([1]), w([2])).scale(c(3.0, 0.0)),
        );
        assert_eq!(ck.expectation(&x), ck.projection(1).scale(c(2.0, 0.0)));
        let g = ck.expectation(&x);
        assert_eq!(ck.expectation(&g), g);
        // P_1 + P_2 + S_1 S_2* is canonical; its diagonal part collapses to 1
        let y = ck.sum([
            &ck.projection(1),
            &ck.projection(2),
            &ck.monomial(w([1]), w([2])),
        ]);
        assert_eq!(y.len(), 3);
        assert_eq!(ck.expectation(&y), ck.unit());
    }

    #[test]
    fn embed_examples() {
        let a = ZeroOneMatrix::full(2);
        let ck = CuntzKrieger::new(&a);
        let ind = LocallyConstantPotential::from_table(&a, 1, vec![1.0, 0.0]).unwrap();
        assert_eq!(ck.embed_function(&ind), ck.projection(1));
        let one = LocallyConstantPotential::constant(&a, 1.0).unwrap();
        assert_eq!(ck.embed_function(&one), ck.unit());

        let g = ZeroOneMatrix::golden_mean();
        let ckg = CuntzKrieger::new(&g);
        let f = LocallyConstantPotential::from_table(&g, 2, vec![1.0, 2.0, 3.0]).unwrap();
        let e = ckg.embed_function(&f);
        assert_eq!(e.len(), 3);
        assert_eq!(
            e.coefficient(&Monomial::new(w([1, 2]), w([1, 2]))),
            c(2.0, 0.0)
        );
    }

    #[test]
    fn embedding_is_multiplicative() {
        let g = ZeroOneMatrix::golden_mean();
        let ck = CuntzKrieger::new(&g);
        let f = LocallyConstantPotential::from_table(&g, 2, vec![1.5, 2.0, 3.0]).unwrap();
        let h = LocallyConstantPotential::from_table(&g, 1, vec![-1.0, 4.0]).unwrap();
        let space = f.space().clone();
        let hv = h.lift_to(&space).unwrap();
        let prod: Vec<f64> = f.values().iter().zip(&hv).map(|(x, y)| x * y).collect();
        let fg = LocallyConstantPotential::on_space(space, prod).unwrap();
        let lhs = ck.embed_function(&fg);
        let rhs = ck.multiply(&ck.embed_function(&f), &ck.embed_function(&h));
        assert!(lhs.max_distance(&rhs) < 1e-15, "{lhs} vs {rhs}");
    }

    #[test]
    fn gauge_examples() {
        let a = ZeroOneMatrix::full(2);
        let ck = CuntzKrieger::new(&a);
        let t = 0.37;
        let he = LocallyConstantPotential::constant(&a, std::f64::consts::E).unwrap();
        let r = ck.gauge_action(&ck.generator(1), &he, t);
        assert!(r.max_distance(&ck.generator(1).scale(Complex64::from_polar(1.0, t))) < 1e-15);
        assert_eq!(ck.gauge_action(&ck.unit(), &he, t), ck.unit());

        let n = LocallyConstantPotential::from_table(&a, 1, vec![2.0, 4.0]).unwrap();
        let r = ck.gauge_action(&ck.generator(2), &n, t);
        let expected = ck
            .generator(2)
            .scale(Complex64::from_polar(1.0, t * 4f64.ln()));
        assert!(r.max_distance(&expected) < 1e-15);
    }

    #[test]
    fn gauge_is_a_one_parameter_group() {
        let g = ZeroOneMatrix::golden_mean();
        let ck = CuntzKrieger::new(&g);
        let h = LocallyConstantPotential::from_table(&g, 2, vec![1.5, 2.0, 3.0]).unwrap();
        let x = ck.add(
            &ck.monomial(w([1, 2]), w([1])),
            &ck.monomial(w([2]), w([2, 1, 1])),
        );
        let lhs = ck.gauge_action(&ck.gauge_action(&x, &h, 0.3), &h, 0.5);
        let rhs = ck.gauge_action(&x, &h, 0.8);
        assert!(lhs.max_distance(&rhs) < 1e-13);
        assert!(ck.gauge_action(&x, &h, 0.0).max_distance(&x) < 1e-15);
    }

    #[test]
    fn modular_flow_examples() {
        let a = ZeroOneMatrix::full(2);
        let ck = CuntzKrieger::new(&a);
        let beta = 0.6;
        let he = LocallyConstantPotential::constant(&a, std::f64::consts::E).unwrap();
        let r = ck.modular_flow(&ck.generator(1), &he, beta);
        assert!(r.max_distance(&ck.generator(1).scale(c((-beta).exp(), 0.0))) < 1e-15);

        // constant H ≡ c scales S_μS_ρ* by c^{−β(|μ|−|ρ|)}
        let h3 = LocallyConstantPotential::constant(&a, 3.0).unwrap();
        let m = ck.monomial(w([1, 2, 2]), w([2]));
        let r = ck.modular_flow(&m, &h3, beta);
        assert!(r.max_distance(&m.scale(c(3f64.powf(-2.0 * beta), 0.0))) < 1e-14);

        let n = LocallyConstantPotential::from_table(&a, 1, vec![2.0, 4.0]).unwrap();
        let r = ck.modular_flow(&ck.generator(2), &n, beta);
        assert!(r.max_distance(&ck.generator(2).scale(c(4f64.powf(-beta), 0.0))) < 1e-15);

        let g = ZeroOneMatrix::golden_mean();
        let ckg = CuntzKrieger::new(&g);
        let h2 = LocallyConstantPotential::from_table(&g, 2, vec![1.5, 2.5, 4.0]).unwrap();
        let r = ckg.modular_flow(&ckg.generator(1), &h2, beta);
        let expected = ckg.add(
            &ckg.monomial(w([1, 1]), w([1]))
                .scale(c(1.5f64.powf(-beta), 0.0)),
            &ckg.monomial(w([1, 2]), w([2]))
                .scale(c(2.5f64.powf(-beta), 0.0)),
        );
        assert_eq!(r.len(), 2);
        assert!(r.max_distance(&expected) < 1e-15, "{r}");
    }

    #[test]
    fn monomial_syntax() {
        let m: Monomial = "1,2|e".parse().unwrap();
        assert_eq!(m, Monomial::new(w([1, 2]), Word::empty()));
        assert_eq!(m.to_string(), "1,2|e");
        assert!("1,2".parse::<Monomial>().is_err());
    }
}
