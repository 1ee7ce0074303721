//! Independent reference computations shared by the integration tests.
//! Nothing here calls the transfer-matrix or Perron code of the crate.
#![allow(dead_code)]

use nalgebra::DMatrix;
use ruelle_kms::potential::LocallyConstantPotential;
use ruelle_kms::shift_space::ZeroOneMatrix;

pub struct DeskExample {
    pub name: &'static str,
    pub a: ZeroOneMatrix,
    pub h: LocallyConstantPotential,
    pub k: usize,
}

pub fn full_euler(n: usize) -> DeskExample {
    let a = ZeroOneMatrix::full(n);
    let h = LocallyConstantPotential::constant(&a, std::f64::consts::E).unwrap();
    let name = ["full2-euler", "full3-euler", "full4-euler", "full5-euler"][n - 2];
    DeskExample { name, a, h, k: 2 }
}

pub fn full2_n24() -> DeskExample {
    let a = ZeroOneMatrix::full(2);
    let h = LocallyConstantPotential::from_table(&a, 1, vec![2.0, 4.0]).unwrap();
    DeskExample {
        name: "full2-n24",
        a,
        h,
        k: 2,
    }
}

pub fn golden_euler() -> DeskExample {
    let a = ZeroOneMatrix::golden_mean();
    let h = LocallyConstantPotential::constant(&a, std::f64::consts::E).unwrap();
    DeskExample {
        name: "golden-euler",
        a,
        h,
        k: 3,
    }
}

pub fn golden_depth2() -> DeskExample {
    let a = ZeroOneMatrix::golden_mean();
    let h = LocallyConstantPotential::from_table(&a, 2, vec![1.5, 2.5, 4.0]).unwrap();
    DeskExample {
        name: "golden-depth2",
        a,
        h,
        k: 3,
    }
}

/// The three examples with closed-form inverse temperatures.
pub fn named_examples() -> Vec<DeskExample> {
    vec![full_euler(2), full2_n24(), golden_euler()]
}

pub fn desk_examples() -> Vec<DeskExample> {
    let mut v: Vec<DeskExample> = (2..=5).map(full_euler).collect();
    v.push(full2_n24());
    v.push(golden_euler());
    v.push(golden_depth2());
    v
}

pub fn golden_ratio() -> f64 {
    (1.0 + 5f64.sqrt()) / 2.0
}

/// All admissible words of length `k`, by filtering every sequence.
pub fn brute_words(a: &ZeroOneMatrix, k: usize) -> Vec<Vec<u16>> {
    let n = a.n() as u16;
    let mut all: Vec<Vec<u16>> = vec![vec![]];
    for _ in 0..k {
        all = all
            .into_iter()
            .flat_map(|w| {
                (1..=n).map(move |s| {
                    let mut v = w.clone();
                    v.push(s);
                    v
                })
            })
            .collect();
    }
    all.into_iter()
        .filter(|w| w.windows(2).all(|p| a.get(p[0], p[1])))
        .collect()
}

/// Dense depth-`k` matrix of `f ↦ Σ_a e^{−β log H(ax)} f(ax)` written from
/// the definition: row `w`, column `v = a·w₀…w_{k−2}`.
pub fn dense_transfer(
    a: &ZeroOneMatrix,
    h: &LocallyConstantPotential,
    beta: f64,
    k: usize,
) -> (Vec<Vec<u16>>, DMatrix<f64>) {
    let words = brute_words(a, k);
    let d = h.depth();
    let mut m = DMatrix::zeros(words.len(), words.len());
    for (i, w) in words.iter().enumerate() {
        for s in 1..=a.n() as u16 {
            if !a.get(s, w[0]) {
                continue;
            }
            let mut v = vec![s];
            v.extend_from_slice(&w[..k - 1]);
            let j = words.iter().position(|x| *x == v).unwrap();
            // H at the point s·w, read from its first d symbols
            let mut point = vec![s];
            point.extend_from_slice(w);
            let hv = h.value_at(&point[..d]).unwrap();
            m[(i, j)] += (-beta * hv.ln()).exp();
        }
    }
    (words, m)
}

pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

pub fn dense_lambda(a: &ZeroOneMatrix, h: &LocallyConstantPotential, beta: f64, k: usize) -> f64 {
    spectral_radius(&dense_transfer(a, h, beta, k).1)
}

/// Root of `β ↦ dense_lambda(β) − 1` by bisection on a doubling bracket.
pub fn dense_beta_star(a: &ZeroOneMatrix, h: &LocallyConstantPotential, k: usize) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    while dense_lambda(a, h, hi, k) > 1.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dense_lambda(a, h, mid, k) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Brute-force boolean powers: the least `m ≤ limit` with `A^m > 0`.
pub fn brute_primitivity(a: &ZeroOneMatrix, limit: usize) -> Option<usize> {
    let n = a.n();
    let base = DMatrix::from_fn(n, n, |i, j| {
        if a.get(i as u16 + 1, j as u16 + 1) {
            1.0
        } else {
            0.0
        }
    });
    let mut p = base.clone();
    for m in 1..=limit {
        if p.iter().all(|&x| x > 0.0) {
            return Some(m);
        }
        p = (&p * &base).map(|x: f64| if x > 0.0 { 1.0 } else { 0.0 });
    }
    None
}
