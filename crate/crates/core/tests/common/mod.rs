// SPDX-License-Identifier: Apache-2.0

//! Hand-derived reference states for the parity protocol on `|+⟩|+⟩`.
//!
//! Kets are written as digit strings over `M1 M2 M3 M4 [C]`, three levels per
//! slot, first slot most significant. The matrices are built here directly
//! from those strings, without going through the library's layout code.

#![allow(dead_code)]

use ensemble_qip::statekit::{CMatrix, C64};

pub const SQRT2: f64 = std::f64::consts::SQRT_2;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn index(ket: &str) -> usize {
    ket.bytes().fold(0, |acc, b| acc * 3 + (b - b'0') as usize)
}

/// Amplitude vector for `Σ coeff |ket⟩` (all kets the same length).
pub fn ket(terms: &[(C64, &str)]) -> Vec<C64> {
    let slots = terms[0].1.len();
    let mut v = vec![c(0.0, 0.0); 3usize.pow(slots as u32)];
    for (coeff, k) in terms {
        v[index(k)] += coeff;
    }
    v
}

pub fn projector(v: &[C64]) -> CMatrix {
    CMatrix::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj())
}

pub fn basis_projector(k: &str) -> CMatrix {
    projector(&ket(&[(c(1.0, 0.0), k)]))
}

fn combine(terms: &[(f64, CMatrix)]) -> CMatrix {
    let n = terms[0].1.rows();
    terms
        .iter()
        .fold(CMatrix::zeros(n, n), |acc, (w, m)| &acc + &m.scale_real(*w))
}

/// State after the first check of block one.
pub fn rho1(eta: f64) -> CMatrix {
    let s = (2.0f64 / 7.0).sqrt();
    let h = 1.0 / SQRT2;
    let a1 = ket(&[
        (c(-s * h, 0.0), "00200"),
        (c(0.0, -s * h), "00011"),
        (c(-s * h, 0.0), "00110"),
        (c(s * h, 0.0), "01100"),
        (c(0.0, -s * h), "01001"),
        (c(s, 0.0), "01010"),
    ]);
    let n = 8.0 / (7.0 + eta);
    combine(&[
        (n * 7.0 / 8.0, projector(&a1)),
        (n * eta / 8.0, basis_projector("00002")),
    ])
}

/// State after the second check of block one.
pub fn rho2(eta: f64) -> CMatrix {
    let s = 1.0 / 6f64.sqrt();
    let a2 = ket(&[
        (c(-s, 0.0), "00110"),
        (c(0.0, s), "00011"),
        (c(0.0, -s), "01001"),
        (c(-s, 0.0), "01100"),
        (c(SQRT2 * s, 0.0), "01010"),
    ]);
    let n = 2.0 * (3.0 + eta);
    combine(&[
        (6.0 / n, projector(&a2)),
        (eta / n, basis_projector("00002")),
        (eta / n, basis_projector("00200")),
    ])
}

/// State after block one (rails M1, M3).
pub fn post_block(eta: f64) -> CMatrix {
    let s = 1.0 / 3f64.sqrt();
    let h = 1.0 / SQRT2;
    let af1 = ket(&[(c(s, 0.0), "10010"), (c(-s, 0.0), "01100"), (c(s, 0.0), "01010")]);
    let v = ket(&[(c(h, 0.0), "00200"), (c(-h, 0.0), "20000")]);
    let n = 3.0 + eta;
    combine(&[
        (3.0 / n, projector(&af1)),
        (eta / (2.0 * n), projector(&v)),
        (eta / (2.0 * n), basis_projector("10100")),
    ])
}

/// Final reduced state of the four modes.
pub fn final_modes(eta: f64) -> CMatrix {
    let h = 1.0 / SQRT2;
    let psi = ket(&[(c(h, 0.0), "1001"), (c(h, 0.0), "0110")]);
    let v1 = ket(&[(c(h, 0.0), "0020"), (c(-h, 0.0), "2000")]);
    let v2 = ket(&[(c(h, 0.0), "0002"), (c(-h, 0.0), "0200")]);
    let n = 1.0 + eta;
    let w = eta / (4.0 * n);
    combine(&[
        (1.0 / n, projector(&psi)),
        (w, projector(&v1)),
        (w, basis_projector("1010")),
        (w, projector(&v2)),
        (w, basis_projector("0101")),
    ])
}

/// Smallest max-norm distance between `a` and `b` over the sign gauges that
/// flip the phase of Fock level 2 in any subset of slots. Returns the distance
/// and the gauge mask (bit `k` set: slot `k`, most significant first).
pub fn gauge_distance(a: &CMatrix, b: &CMatrix, slots: usize) -> (f64, u32) {
    let n = a.rows();
    let digits: Vec<Vec<usize>> = (0..n)
        .map(|mut i| {
            let mut d = vec![0; slots];
            for k in (0..slots).rev() {
                d[k] = i % 3;
                i /= 3;
            }
            d
        })
        .collect();
    (0..1u32 << slots)
        .map(|mask| {
            let sign: Vec<f64> = digits
                .iter()
                .map(|d| {
                    let flips = (0..slots).filter(|&k| mask >> k & 1 == 1 && d[k] == 2).count();
                    if flips % 2 == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                })
                .collect();
            let mut worst: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    worst = worst.max((a[(i, j)] * (sign[i] * sign[j]) - b[(i, j)]).norm());
                }
            }
            (worst, mask)
        })
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .expect("at least one gauge")
}
