//! Exhaustive grid oracles for two-qubit states, written independently of
//! the library's dephasing code.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::Matrix2;
use num_complex::Complex64 as C64;

use qcorr::DensityMatrix;

/// Qubit rotation used by the exhaustive grid.
pub fn rotation(theta: f64, phi: f64) -> Matrix2<C64> {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    Matrix2::new(
        C64::new(c, 0.0),
        -C64::from_polar(s, -phi),
        C64::from_polar(s, phi),
        C64::new(c, 0.0),
    )
}

pub fn grid_rotations(points: usize) -> Vec<Matrix2<C64>> {
    let mut out = Vec::with_capacity(points * points);
    for i in 0..points {
        for j in 0..points {
            out.push(rotation(i as f64 * PI / (points - 1) as f64, 2.0 * PI * j as f64 / points as f64));
        }
    }
    out
}

pub fn h(ps: impl IntoIterator<Item = f64>) -> f64 {
    ps.into_iter().filter(|&p| p > 0.0).map(|p| -p * p.log2()).sum()
}

pub fn qubit_entropy(m: &Matrix2<C64>) -> f64 {
    // Eigenvalues from trace and determinant; works for unnormalized blocks.
    let tr = (m[(0, 0)] + m[(1, 1)]).re;
    let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re;
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    h([tr / 2.0 + disc, tr / 2.0 - disc])
}

/// `min over the grid of I(ρ) − I(χ)`, measuring the first qubit.
pub fn delta_grid(rho: &DensityMatrix, points: usize) -> f64 {
    let m = rho.matrix();
    let s_a = rho.partial_trace(&[0]).unwrap().entropy();
    let base = s_a - rho.entropy();
    let mut best = f64::INFINITY;
    for u in grid_rotations(points) {
        // Unnormalized block entropies sum to H(p) + Σ pᵢ S(ρᵢ).
        let mut cond = 0.0;
        let mut probs = [0.0; 2];
        for i in 0..2 {
            let mut block = Matrix2::<C64>::zeros();
            for b in 0..2 {
                for bp in 0..2 {
                    let mut acc = C64::new(0.0, 0.0);
                    for a in 0..2 {
                        for ap in 0..2 {
                            acc += u[(a, i)].conj() * m[(2 * a + b, 2 * ap + bp)] * u[(ap, i)];
                        }
                    }
                    block[(b, bp)] = acc;
                }
            }
            probs[i] = (block[(0, 0)] + block[(1, 1)]).re;
            cond += qubit_entropy(&block);
        }
        best = best.min(base + cond - h(probs));
    }
    best
}

/// `min over the grid of S(χ) − S(ρ)`, dephasing both qubits.
pub fn red_grid(rho: &DensityMatrix, points: usize) -> f64 {
    let m = rho.matrix();
    let rotations = grid_rotations(points);
    let s_rho = rho.entropy();
    let mut best = f64::INFINITY;
    for ua in &rotations {
        // Rotate the first qubit once per outer point.
        let mut half = [[C64::new(0.0, 0.0); 4]; 4];
        for i in 0..2 {
            for b in 0..2 {
                for bp in 0..2 {
                    let mut acc = C64::new(0.0, 0.0);
                    for a in 0..2 {
                        for ap in 0..2 {
                            acc += ua[(a, i)].conj() * m[(2 * a + b, 2 * ap + bp)] * ua[(ap, i)];
                        }
                    }
                    half[i][2 * b + bp] = acc;
                }
            }
        }
        for ub in &rotations {
            let mut probs = [0.0; 4];
            for i in 0..2 {
                for j in 0..2 {
                    let mut acc = C64::new(0.0, 0.0);
                    for b in 0..2 {
                        for bp in 0..2 {
                            acc += ub[(b, j)].conj() * half[i][2 * b + bp] * ub[(bp, j)];
                        }
                    }
                    probs[2 * i + j] = acc.re;
                }
            }
            best = best.min(h(probs) - s_rho);
        }
    }
    best
}

/// `H₂(x)` in bits.
pub fn h2(x: f64) -> f64 {
    h([x, 1.0 - x])
}

/// Closed-form discord of the Werner state measured on one side.
pub fn werner_delta(p: f64) -> f64 {
    let t = |x: f64| if x > 0.0 { x * x.log2() } else { 0.0 };
    t(1.0 - p) / 4.0 - t(1.0 + p) / 2.0 + t(1.0 + 3.0 * p) / 4.0
}

/// Relative entropy of entanglement of the Werner state, by a fine grid over
/// the separable Bell-diagonal family `qΦ⁺ + (1−q)(I−Φ⁺)/3`, `q ≤ 1/2`.
pub fn werner_ree_grid(p: f64, points: usize) -> f64 {
    let top = (1.0 + 3.0 * p) / 4.0;
    let rest = (1.0 - p) / 4.0;
    let term = |a: f64, b: f64| if a > 0.0 { a * (a / b).log2() } else { 0.0 };
    (0..points)
        .map(|k| {
            let q = 0.5 * k as f64 / (points - 1) as f64;
            let lower = (1.0 - q) / 3.0;
            if q == 0.0 && top > 0.0 {
                return f64::INFINITY;
            }
            term(top, q) + 3.0 * term(rest, lower)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Exchanges the two qubits.
pub fn swap_qubits(rho: &DensityMatrix) -> DensityMatrix {
    let m = rho.matrix();
    let perm = |i: usize| (i % 2) * 2 + i / 2;
    let swapped = qcorr::linalg::CMatrix::from_fn(4, 4, |i, j| m[(perm(i), perm(j))]);
    DensityMatrix::validate(swapped, rho.layout().clone()).unwrap()
}
