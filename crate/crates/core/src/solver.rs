//! Many-body ground states.
//!
//! The production path is a restarted symmetric Lanczos iteration with full
//! reorthogonalization. Imaginary-time relaxation, `c ← e^{-HΔτ} c` followed
//! by renormalization, is kept as an independent cross-check; each step is
//! evaluated with a short Lanczos approximation of the propagator.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{validation, Error, Result};
use crate::fock::{Hamiltonian, ManyBodyState};
use crate::grid1p::{Grid, TrapSpec};
use crate::interaction::InteractionSpec;
use crate::model::Model;

const INITIAL_NOISE: f64 = 1e-3;
const INITIAL_SEED: u64 = 0x5eed_0001;
const DEGENERACY_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Krylov,
    ImaginaryTime,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Krylov => f.write_str("krylov"),
            Method::ImaginaryTime => f.write_str("imaginary_time"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub energy: f64,
    pub state: ManyBodyState,
    pub residual_norm: f64,
    /// Hamiltonian applications (Krylov) or propagation steps (imaginary time).
    pub iterations: usize,
    pub method: Method,
    /// Distance to the next Ritz value, when one was resolved.
    pub gap: Option<f64>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct KrylovOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Lanczos vectors kept before restarting from the current Ritz vector.
    pub restart: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
            restart: 150,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RelaxOptions {
    pub dtau: f64,
    /// Stop once the energy drops by less than this in one step.
    pub tol: f64,
    pub max_steps: usize,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self {
            dtau: 0.1,
            tol: 1e-13,
            max_steps: 200_000,
        }
    }
}

/// Unit weight on the all-in-orbital-0 configuration plus a small seeded
/// uniform perturbation, normalized.
pub fn initial_vector(dim: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(INITIAL_SEED);
    let mut v: Vec<f64> = (0..dim)
        .map(|_| INITIAL_NOISE * rng.random_range(-1.0..1.0))
        .collect();
    v[0] += 1.0;
    normalize(&mut v);
    v
}

/// [`initial_vector`], restricted to the even sector when `h` conserves total
/// parity (the bosonic ground state of a symmetric trap is even).
fn start_vector(h: &Hamiltonian) -> Vec<f64> {
    let mut v = initial_vector(h.dim());
    if h.conserves_parity() {
        let basis = h.basis();
        for (i, c) in v.iter_mut().enumerate() {
            if basis.parity(i) < 0 {
                *c = 0.0;
            }
        }
        normalize(&mut v);
    }
    v
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

fn tridiagonal(alphas: &[f64], betas: &[f64]) -> DMatrix<f64> {
    let m = alphas.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    t
}

/// Eigenpairs of the tridiagonal matrix sorted ascending.
fn ritz(alphas: &[f64], betas: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    sorted_eigen(tridiagonal(alphas, betas))
}

/// Eigenpairs of a dense symmetric matrix sorted ascending.
fn sorted_eigen(t: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let m = t.nrows();
    let eig = t.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(m, m);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Orthogonalize `w` against the stored Lanczos vectors, twice.
fn reorthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let o = dot(q, w);
            axpy(-o, q, w);
        }
    }
}

fn combine(vectors: &[Vec<f64>], coeffs: &DMatrix<f64>, column: usize, dim: usize) -> Vec<f64> {
    let mut x = vec![0.0; dim];
    for (k, q) in vectors.iter().enumerate() {
        axpy(coeffs[(k, column)], q, &mut x);
    }
    x
}

/// Lowest eigenpair of `h` to residual `‖Hc - Ec‖ <= tol`.
///
/// Lanczos with full reorthogonalization and thick restarts: when the basis
/// reaches `restart` vectors, the lowest third of the Ritz vectors and the
/// current residual direction are kept and the iteration continues.
pub fn ground_state_krylov(h: &Hamiltonian, opts: &KrylovOptions) -> Result<SolveReport> {
    if !(opts.tol > 0.0) || opts.max_iter == 0 || opts.restart < 2 {
        return Err(validation(
            "Krylov options need tol > 0, max_iter >= 1, restart >= 2",
        ));
    }
    let dim = h.dim();
    let cap = opts.restart.min(dim);
    let keep = (cap / 3).max(1);
    let mut vectors: Vec<Vec<f64>> = vec![start_vector(h)];
    // projected matrix, one spare row for the coupling of the next vector
    let mut t = DMatrix::<f64>::zeros(cap + 1, cap + 1);
    let mut matvecs = 0usize;
    let mut best_residual = f64::INFINITY;
    let mut hv = vec![0.0; dim];

    loop {
        let j = vectors.len() - 1;
        let mut w = vec![0.0; dim];
        h.apply(&vectors[j], &mut w)?;
        matvecs += 1;
        t[(j, j)] = dot(&vectors[j], &w);
        axpy(-t[(j, j)], &vectors[j], &mut w);
        for i in 0..j {
            if t[(i, j)] != 0.0 {
                axpy(-t[(i, j)], &vectors[i], &mut w);
            }
        }
        reorthogonalize(&mut w, &vectors);
        let b = norm(&w);
        let size = j + 1;

        let scale = (0..size).fold(1.0f64, |m, i| m.max(t[(i, i)].abs()));
        let breakdown = b <= 1e-14 * scale;
        let exhausted = matvecs >= opts.max_iter;
        let full = size >= cap;
        if !(breakdown || exhausted || full || size.is_multiple_of(4)) {
            t[(j + 1, j)] = b;
            t[(j, j + 1)] = b;
            w.iter_mut().for_each(|x| *x /= b);
            vectors.push(w);
            continue;
        }

        let (values, coeffs) = sorted_eigen(t.view((0, 0), (size, size)).into_owned());
        let estimate = b * coeffs[(size - 1, 0)].abs();
        if breakdown || exhausted || estimate < 0.1 * opts.tol {
            let mut x = combine(&vectors, &coeffs, 0, dim);
            normalize(&mut x);
            h.apply(&x, &mut hv)?;
            matvecs += 1;
            let energy = dot(&x, &hv);
            let residual = hv
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - energy * b).powi(2))
                .sum::<f64>()
                .sqrt();
            best_residual = best_residual.min(residual);
            if residual <= opts.tol {
                let gap = values.get(1).map(|v| v - values[0]);
                let state = ManyBodyState::new(h.basis().clone(), x)?;
                return Ok(SolveReport {
                    energy,
                    state,
                    residual_norm: residual,
                    iterations: matvecs,
                    method: Method::Krylov,
                    gap,
                    degenerate: gap.is_some_and(|g| g < DEGENERACY_THRESHOLD),
                });
            }
            if matvecs >= opts.max_iter {
                return Err(Error::NotConverged {
                    iterations: matvecs,
                    residual: best_residual,
                });
            }
            // the estimate was optimistic: start over from the Ritz vector
            vectors = vec![x];
            t.fill(0.0);
            continue;
        }
        if !full {
            t[(j + 1, j)] = b;
            t[(j, j + 1)] = b;
            w.iter_mut().for_each(|x| *x /= b);
            vectors.push(w);
            continue;
        }

        let kept: Vec<Vec<f64>> = (0..keep)
            .map(|c| combine(&vectors, &coeffs, c, dim))
            .collect();
        t.fill(0.0);
        for (i, &theta) in values.iter().take(keep).enumerate() {
            t[(i, i)] = theta;
            let coupling = b * coeffs[(size - 1, i)];
            t[(i, keep)] = coupling;
            t[(keep, i)] = coupling;
        }
        vectors = kept;
        w.iter_mut().for_each(|x| *x /= b);
        vectors.push(w);
    }
}

/// `e^{-τH} v` by a Lanczos approximation grown until the a-posteriori error
/// estimate drops below `tol · ‖v‖`.
pub fn propagate_imaginary(h: &Hamiltonian, v: &[f64], tau: f64, tol: f64) -> Result<Vec<f64>> {
    const MAX_KRYLOV: usize = 60;
    let dim = h.dim();
    let mut q0 = v.to_vec();
    let beta0 = normalize(&mut q0);
    if beta0 == 0.0 {
        return Ok(q0);
    }
    let mut vectors = vec![q0];
    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    loop {
        let j = alphas.len();
        let mut w = vec![0.0; dim];
        h.apply(&vectors[j], &mut w)?;
        let a = dot(&vectors[j], &w);
        alphas.push(a);
        axpy(-a, &vectors[j], &mut w);
        if j > 0 {
            axpy(-betas[j - 1], &vectors[j - 1], &mut w);
        }
        reorthogonalize(&mut w, &vectors);
        let b = norm(&w);

        let (values, vecs) = ritz(&alphas, &betas);
        // shift by the lowest Ritz value so the small exponential stays O(1)
        let shift = values[0];
        let m = alphas.len();
        let mut coeff = DVector::<f64>::zeros(m);
        for (k, &lam) in values.iter().enumerate() {
            let weight = vecs[(0, k)] * (-(lam - shift) * tau).exp();
            for r in 0..m {
                coeff[r] += vecs[(r, k)] * weight;
            }
        }
        let scale = alphas.iter().fold(1.0f64, |s, x| s.max(x.abs()));
        let err = b * coeff[m - 1].abs();
        if b <= 1e-14 * scale || err < tol || m >= MAX_KRYLOV.min(dim) {
            if m >= MAX_KRYLOV && err >= tol && b > 1e-14 * scale {
                return Err(Error::NotConverged {
                    iterations: m,
                    residual: err,
                });
            }
            let factor = beta0 * (-shift * tau).exp();
            let mut out = vec![0.0; dim];
            for (r, q) in vectors.iter().enumerate().take(m) {
                axpy(factor * coeff[r], q, &mut out);
            }
            return Ok(out);
        }
        betas.push(b);
        w.iter_mut().for_each(|x| *x /= b);
        vectors.push(w);
    }
}

/// Ground state by imaginary-time relaxation with per-step renormalization.
pub fn relax_imaginary_time(h: &Hamiltonian, opts: &RelaxOptions) -> Result<SolveReport> {
    if !(opts.dtau > 0.0) || !(opts.tol > 0.0) {
        return Err(validation("relaxation needs dtau > 0 and tol > 0"));
    }
    let dim = h.dim();
    let mut c = start_vector(h);
    let mut energy = h.expectation(&c)?;
    let mut steps = 0usize;
    loop {
        if steps >= opts.max_steps {
            return Err(Error::NotConverged {
                iterations: steps,
                residual: f64::NAN,
            });
        }
        let mut next = propagate_imaginary(h, &c, opts.dtau, 1e-15)?;
        normalize(&mut next);
        steps += 1;
        let e = h.expectation(&next)?;
        if e > energy + 1e-12 {
            return Err(Error::Stagnation {
                step: steps,
                increase: e - energy,
            });
        }
        let drop = energy - e;
        c = next;
        energy = e;
        if drop < opts.tol {
            break;
        }
    }
    let mut hc = vec![0.0; dim];
    h.apply(&c, &mut hc)?;
    let residual = hc
        .iter()
        .zip(&c)
        .map(|(a, b)| (a - energy * b).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(SolveReport {
        energy,
        state: ManyBodyState::new(h.basis().clone(), c)?,
        residual_norm: residual,
        iterations: steps,
        method: Method::ImaginaryTime,
        gap: None,
        degenerate: false,
    })
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub n_orbitals: usize,
    pub report: SolveReport,
}

/// Ground-state energy over nested orbital bases `n_list`.
pub fn convergence_sweep(
    n_particles: usize,
    n_list: &[usize],
    grid: &Grid,
    trap: TrapSpec,
    interaction: InteractionSpec,
    opts: &KrylovOptions,
) -> Result<Vec<SweepPoint>> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) || n_list[0] == 0 {
        return Err(validation(
            "orbital counts must be positive and strictly ascending",
        ));
    }
    let full = Model::build(grid, trap, interaction, *n_list.last().unwrap())?;
    convergence_sweep_model(n_particles, n_list, &full, opts)
}

/// As [`convergence_sweep`], truncating an already-built model.
pub fn convergence_sweep_model(
    n_particles: usize,
    n_list: &[usize],
    full: &Model,
    opts: &KrylovOptions,
) -> Result<Vec<SweepPoint>> {
    n_list
        .iter()
        .map(|&n| {
            let model = full.truncated(n)?;
            let report = ground_state_krylov(&model.hamiltonian(n_particles)?, opts)?;
            Ok(SweepPoint {
                n_orbitals: n,
                report,
            })
        })
        .collect()
}
