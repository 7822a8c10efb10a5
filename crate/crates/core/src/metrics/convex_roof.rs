// SPDX-License-Identifier: Apache-2.0

//! Convex roof of the pure-state 2-concurrence.
//!
//! Every ensemble decomposition of a rank-`r` state with `k` members is
//! `w_i = Σ_j U_ij √λ_j v_j` for an isometry `U` (`k × r`, `U†U = I`), with
//! `(λ_j, v_j)` the eigenpairs of ρ. The average
//! `Σ p_i C₂²(ψ_i) = Σ 2(p_i − Tr(M_i M_i†)²/p_i)`, `M_i` being `w_i` reshaped
//! across the cut, is minimized over `U` by L-BFGS on the complex Stiefel
//! manifold with a QR retraction.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statekit::{hermitian_eig, CMatrix, DensityMatrix, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConvexRoofOptions {
    /// Number of optimizer starts; the first is a slightly perturbed
    /// eigen-ensemble, the rest are random.
    pub starts: usize,
    /// Decomposition size `k`; `None` means `2r`.
    pub members: Option<usize>,
    pub max_iterations: usize,
    /// Stop once the Riemannian gradient norm drops below this.
    pub gradient_tol: f64,
    /// Or once the objective improves by less than this (relative) over
    /// `STALL_WINDOW` iterations.
    pub value_tol: f64,
    pub memory: usize,
    pub seed: u64,
    /// Eigenvalues below `rank_tol · λ_max` are dropped.
    pub rank_tol: f64,
    pub max_rank: usize,
}

impl Default for ConvexRoofOptions {
    fn default() -> Self {
        Self {
            starts: 8,
            members: None,
            max_iterations: 1000,
            gradient_tol: 1e-9,
            value_tol: 1e-9,
            memory: 12,
            seed: 0x5eed,
            rank_tol: 1e-12,
            max_rank: 25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartReport {
    pub value: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexRoofResult {
    /// Best (lowest) average found; an upper bound on the convex roof.
    pub value: f64,
    /// Largest minus smallest value over the starts.
    pub spread: f64,
    pub rank: usize,
    pub members: usize,
    /// `2 Tr ρ² − Tr ρ_A² − Tr ρ_B²`, a lower bound on the convex roof.
    pub lower_bound: f64,
    pub starts: Vec<StartReport>,
}

impl ConvexRoofResult {
    pub fn converged(&self) -> bool {
        self.starts.iter().any(|s| s.converged)
    }
}

const STALL_WINDOW: usize = 10;
/// Size of the perturbation applied to the eigen-ensemble start, which is
/// itself a critical point of the objective.
const FIRST_START_KICK: f64 = 1e-2;

/// Eigen-ensemble and the reshaping tables for one cut.
struct Problem {
    /// Columns `√λ_j v_j`, stored as `r` vectors.
    ensemble: Vec<Vec<C64>>,
    /// Full index of `(a, b)` is `bases[b] + offsets[a]`.
    offsets: Vec<usize>,
    bases: Vec<usize>,
}

impl Problem {
    fn members(&self, u: &CMatrix) -> Vec<Vec<C64>> {
        let n = self.ensemble[0].len();
        (0..u.rows())
            .map(|i| {
                let mut w = vec![C64::new(0.0, 0.0); n];
                for (j, f) in self.ensemble.iter().enumerate() {
                    let c = u[(i, j)];
                    if c == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for (wx, fx) in w.iter_mut().zip(f) {
                        *wx += c * fx;
                    }
                }
                w
            })
            .collect()
    }

    fn reshape(&self, w: &[C64]) -> CMatrix {
        CMatrix::from_fn(self.offsets.len(), self.bases.len(), |a, b| {
            w[self.bases[b] + self.offsets[a]]
        })
    }

    /// Objective and Euclidean gradient `2 ∂f/∂Ū`.
    fn evaluate(&self, u: &CMatrix, with_gradient: bool) -> (f64, Option<CMatrix>) {
        let members = self.members(u);
        let mut value = 0.0;
        let mut grad = with_gradient.then(|| CMatrix::zeros(u.rows(), u.cols()));
        for (i, w) in members.iter().enumerate() {
            let p: f64 = w.iter().map(|x| x.norm_sqr()).sum();
            if p <= f64::MIN_POSITIVE {
                continue;
            }
            let m = self.reshape(w);
            let mmd = &m * &m.adjoint();
            let t = mmd.frobenius_norm().powi(2);
            value += 2.0 * (p - t / p);
            let Some(g) = grad.as_mut() else { continue };
            // ∂f_i/∂w̄ = 2w(1 + T/p²) − 4 vec(M M† M)/p
            let mmdm = &mmd * &m;
            let mut gw = vec![C64::new(0.0, 0.0); w.len()];
            for (x, gx) in gw.iter_mut().enumerate() {
                *gx = w[x] * (2.0 * (1.0 + t / (p * p)));
            }
            for a in 0..self.offsets.len() {
                for b in 0..self.bases.len() {
                    gw[self.bases[b] + self.offsets[a]] -= mmdm[(a, b)] * (4.0 / p);
                }
            }
            for (j, f) in self.ensemble.iter().enumerate() {
                let s: C64 = gw.iter().zip(f).map(|(gx, fx)| gx * fx.conj()).sum();
                g[(i, j)] = s * 2.0;
            }
        }
        (value, grad)
    }
}

fn inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x.conj() * y).re)
        .sum()
}

fn axpy(alpha: f64, x: &CMatrix, y: &CMatrix) -> CMatrix {
    y + &x.scale_real(alpha)
}

/// Tangent-space projection at `u`: `Z − U herm(U†Z)`.
fn project(u: &CMatrix, z: &CMatrix) -> CMatrix {
    let sym = (&u.adjoint() * z).hermitian_part();
    z - &(u * &sym)
}

/// Q factor (positive diagonal R) of a tall matrix by modified Gram–Schmidt.
fn qr_retract(a: &CMatrix) -> CMatrix {
    let (k, r) = (a.rows(), a.cols());
    let mut q = a.clone();
    for j in 0..r {
        for l in 0..j {
            let dot: C64 = (0..k).map(|i| q[(i, l)].conj() * q[(i, j)]).sum();
            for i in 0..k {
                let ql = q[(i, l)];
                q[(i, j)] -= ql * dot;
            }
        }
        let norm = (0..k).map(|i| q[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..k {
            q[(i, j)] /= norm;
        }
    }
    q
}

fn optimize(problem: &Problem, start: CMatrix, opts: &ConvexRoofOptions) -> StartReport {
    let mut u = start;
    let (mut f, g) = problem.evaluate(&u, true);
    let mut g = project(&u, &g.expect("gradient requested"));
    let mut memory: Vec<(CMatrix, CMatrix, f64)> = Vec::new();
    let mut iterations = 0;
    let mut history = vec![f];
    let mut stalled = false;

    while iterations < opts.max_iterations {
        let gnorm = inner(&g, &g).sqrt();
        if gnorm < opts.gradient_tol {
            break;
        }
        iterations += 1;

        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(memory.len());
        for (s, y, rho) in memory.iter().rev() {
            let a = rho * inner(s, &q);
            q = axpy(-a, y, &q);
            alphas.push(a);
        }
        let gamma = memory
            .last()
            .map(|(s, y, _)| inner(s, y) / inner(y, y))
            .unwrap_or(1.0 / gnorm.max(1.0));
        let mut d = q.scale_real(gamma);
        for ((s, y, rho), a) in memory.iter().zip(alphas.into_iter().rev()) {
            let b = rho * inner(y, &d);
            d = axpy(a - b, s, &d);
        }
        d = project(&u, &d).scale_real(-1.0);
        let mut slope = inner(&g, &d);
        if slope >= 0.0 {
            memory.clear();
            d = g.scale_real(-1.0);
            slope = -gnorm * gnorm;
        }

        // Armijo backtracking along the retraction
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = qr_retract(&axpy(step, &d, &u));
            let (ft, _) = problem.evaluate(&trial, false);
            if ft <= f + 1e-4 * step * slope {
                accepted = Some((trial, ft));
                break;
            }
            step *= 0.5;
        }
        let Some((u_new, f_new)) = accepted else { break };

        let (_, g_new) = problem.evaluate(&u_new, true);
        let g_new = project(&u_new, &g_new.expect("gradient requested"));
        let s = project(&u_new, &d.scale_real(step));
        let y = &g_new - &project(&u_new, &g);
        // older pairs are left where they were; the search direction is
        // projected onto the current tangent space anyway
        let sy = inner(&s, &y);
        if sy > 1e-20 {
            memory.push((s, y, 1.0 / sy));
            if memory.len() > opts.memory {
                memory.remove(0);
            }
        }

        u = u_new;
        f = f_new;
        g = g_new;
        history.push(f);
        if history.len() > STALL_WINDOW {
            let old = history[history.len() - 1 - STALL_WINDOW];
            if old - f <= opts.value_tol * f.abs().max(1.0) {
                stalled = true;
                break;
            }
        }
    }

    let gradient_norm = inner(&g, &g).sqrt();
    StartReport {
        value: f.max(0.0),
        iterations,
        gradient_norm,
        converged: gradient_norm < opts.gradient_tol || stalled,
    }
}

/// `[I; 0] + scale·G` orthonormalized, `G` complex Gaussian; `scale = None`
/// gives a plain Gaussian start.
fn seeded_isometry(k: usize, r: usize, seed: u64, scale: Option<f64>) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = CMatrix::from_fn(k, r, |i, j| {
        let z = C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
        match scale {
            Some(s) => z * s + if i == j { 1.0 } else { 0.0 },
            None => z,
        }
    });
    qr_retract(&a)
}

/// Upper estimate of the convex roof of `2(1 − Tr ρ_A²)` across
/// `part_a | rest`.
pub fn convex_roof_c2(rho: &DensityMatrix, part_a: &[&str], opts: &ConvexRoofOptions) -> Result<ConvexRoofResult> {
    if opts.starts == 0 {
        return Err(Error::InvalidParameter(
            "at least one optimizer start is required".into(),
        ));
    }
    let layout = rho.layout();
    let pos = layout.positions(part_a)?;
    let idx = layout.local_index(&pos);

    let eig = hermitian_eig(&rho.matrix().hermitian_part())?;
    let lmax = eig.values.first().copied().unwrap_or(0.0);
    let ensemble: Vec<Vec<C64>> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > opts.rank_tol * lmax)
        .map(|(j, &l)| eig.vector(j).into_iter().map(|x| x * l.sqrt()).collect())
        .collect();
    let rank = ensemble.len();
    if rank == 0 {
        return Err(Error::NotNormalized(rho.trace()));
    }
    if rank > opts.max_rank {
        return Err(Error::InvalidParameter(format!(
            "state rank {rank} exceeds the configured bound {}",
            opts.max_rank
        )));
    }
    let members = opts.members.unwrap_or(2 * rank).max(rank);
    let problem = Problem {
        ensemble,
        offsets: idx.offsets,
        bases: idx.bases,
    };

    let starts: Vec<StartReport> = (0..opts.starts)
        .into_par_iter()
        .map(|s| {
            let seed = opts.seed.wrapping_add(s as u64);
            let kick = (s == 0).then_some(FIRST_START_KICK);
            let u0 = seeded_isometry(members, rank, seed, kick);
            optimize(&problem, u0, opts)
        })
        .collect();

    let value = starts.iter().map(|s| s.value).fold(f64::INFINITY, f64::min);
    let worst = starts.iter().map(|s| s.value).fold(f64::NEG_INFINITY, f64::max);

    let rest: Vec<&str> = layout.labels().into_iter().filter(|l| !part_a.contains(l)).collect();
    let purity_a = rho.partial_trace(part_a)?.purity();
    let purity_b = rho.partial_trace(&rest)?.purity();
    let lower_bound = (2.0 * rho.purity() - purity_a - purity_b).max(0.0);

    Ok(ConvexRoofResult {
        value,
        spread: worst - value,
        rank,
        members,
        lower_bound,
        starts,
    })
}
