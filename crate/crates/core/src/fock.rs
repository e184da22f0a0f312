//! Symmetric occupation-number basis and the second-quantized Hamiltonian
//!
//! `H = Σ_k ε_k a†_k a_k + ½ Σ_{ijkl} V_ijkl a†_i a†_j a_l a_k`
//!
//! acting on coefficient vectors without storing the matrix. The two-body
//! term factors through the `(N-2)`-particle space: annihilating a pair from
//! every configuration gives a dense (lower state × pair) array, the pair
//! interaction is a small dense matrix on the pair index, and re-creating the
//! pair scatters back. Each step has a fixed summation order, so the action
//! is bit-reproducible.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{validation, Error, Result};
use crate::grid1p::OrbitalBasis;
use crate::interaction::{pair_count, pair_index, TwoBodyTensor};

/// Largest Fock dimension accepted.
pub const MAX_DIMENSION: u64 = 100_000_000;

/// Occupation counts `n_k` per orbital.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccupationVector(pub Vec<u8>);

impl OccupationVector {
    pub fn counts(&self) -> &[u8] {
        &self.0
    }

    pub fn particles(&self) -> usize {
        self.0.iter().map(|&c| c as usize).sum()
    }
}

/// `D(m, p)`: number of ways to put `p` bosons into `m` orbitals.
fn multiset_count(m: usize, p: usize) -> u128 {
    if m == 0 {
        return u128::from(p == 0);
    }
    // C(p + m - 1, p), exact in u128 for the sizes we admit
    let (top, k) = (p + m - 1, p.min(m - 1));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (top - i) as u128 / (i + 1) as u128;
    }
    acc
}

pub fn fock_dimension(n_particles: usize, n_orbitals: usize) -> u128 {
    multiset_count(n_orbitals, n_particles)
}

/// All `N`-boson configurations over `n` orbitals in descending lexicographic
/// order of the counts, e.g. `(2,0), (1,1), (0,2)`.
#[derive(Debug, Clone)]
pub struct FockBasis {
    n_particles: usize,
    n_orbitals: usize,
    // row-major, n_orbitals counts per state
    occupations: Vec<u8>,
    // table[m * (N+1) + p] = D(m, p)
    table: Vec<u64>,
}

pub fn enumerate_basis(n_particles: usize, n_orbitals: usize) -> Result<FockBasis> {
    if n_orbitals == 0 {
        return Err(validation("orbital count must be >= 1"));
    }
    FockBasis::with_particles(n_particles, n_orbitals)
}

impl FockBasis {
    /// Like [`enumerate_basis`] but admits `N = 0` for intermediate spaces.
    fn with_particles(n_particles: usize, n_orbitals: usize) -> Result<Self> {
        if n_orbitals == 0 {
            return Err(validation("orbital count must be >= 1"));
        }
        if n_particles > u8::MAX as usize {
            return Err(validation(format!(
                "particle count {n_particles} exceeds 255"
            )));
        }
        let dim = fock_dimension(n_particles, n_orbitals);
        if dim > MAX_DIMENSION as u128 {
            return Err(Error::DimensionOverflow {
                dim,
                limit: MAX_DIMENSION,
            });
        }
        let dim = dim as usize;
        let stride = n_particles + 1;
        let mut table = vec![0u64; (n_orbitals + 1) * stride];
        for m in 0..=n_orbitals {
            for p in 0..=n_particles {
                table[m * stride + p] = multiset_count(m, p) as u64;
            }
        }

        let mut occupations = Vec::with_capacity(dim * n_orbitals);
        let mut cur = vec![0u8; n_orbitals];
        cur[0] = n_particles as u8;
        loop {
            occupations.extend_from_slice(&cur);
            let last = n_orbitals - 1;
            let tail = cur[last];
            cur[last] = 0;
            match (0..last).rev().find(|&k| cur[k] > 0) {
                Some(k) => {
                    cur[k] -= 1;
                    cur[k + 1] = tail + 1;
                }
                None => break,
            }
        }
        debug_assert_eq!(occupations.len(), dim * n_orbitals);
        Ok(Self {
            n_particles,
            n_orbitals,
            occupations,
            table,
        })
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn n_orbitals(&self) -> usize {
        self.n_orbitals
    }

    pub fn len(&self) -> usize {
        self.occupations.len() / self.n_orbitals
    }

    pub fn is_empty(&self) -> bool {
        self.occupations.is_empty()
    }

    pub fn counts(&self, index: usize) -> &[u8] {
        &self.occupations[index * self.n_orbitals..(index + 1) * self.n_orbitals]
    }

    pub fn state(&self, index: usize) -> OccupationVector {
        OccupationVector(self.counts(index).to_vec())
    }

    pub fn states(&self) -> impl Iterator<Item = &[u8]> {
        self.occupations.chunks_exact(self.n_orbitals)
    }

    /// Ordinal of a configuration, by combinatorial ranking in `O(n)`.
    pub fn index_of(&self, counts: &[u8]) -> Option<usize> {
        if counts.len() != self.n_orbitals {
            return None;
        }
        let total: usize = counts.iter().map(|&c| c as usize).sum();
        if total != self.n_particles {
            return None;
        }
        Some(self.rank_unchecked(counts))
    }

    #[inline]
    fn rank_unchecked(&self, counts: &[u8]) -> usize {
        let stride = self.n_particles + 1;
        let n = self.n_orbitals;
        let mut remaining = self.n_particles;
        let mut rank = 0u64;
        for (k, &c) in counts[..n - 1].iter().enumerate() {
            let c = c as usize;
            if c < remaining {
                // configurations with more particles in orbital k come first
                rank += self.table[(n - k) * stride + (remaining - c - 1)];
            }
            remaining -= c;
            if remaining == 0 {
                break;
            }
        }
        rank as usize
    }

    /// Total parity `Π (-1)^{k n_k}` of configuration `index`.
    pub fn parity(&self, index: usize) -> i8 {
        let odd: usize = self
            .counts(index)
            .iter()
            .enumerate()
            .map(|(k, &c)| k * c as usize)
            .sum();
        if odd.is_multiple_of(2) {
            1
        } else {
            -1
        }
    }
}

/// Effect of creating one or two particles on each state of a lower basis:
/// `a†… |m⟩ = amp · |target⟩`.
struct CreationTable {
    width: usize,
    target: Vec<u32>,
    amp: Vec<f64>,
}

impl CreationTable {
    fn single(lower: &FockBasis, upper: &FockBasis) -> Self {
        let n = lower.n_orbitals();
        let mut target = Vec::with_capacity(lower.len() * n);
        let mut amp = Vec::with_capacity(lower.len() * n);
        let mut buf = vec![0u8; n];
        for m in lower.states() {
            for i in 0..n {
                buf.copy_from_slice(m);
                buf[i] += 1;
                target.push(upper.rank_unchecked(&buf) as u32);
                amp.push((buf[i] as f64).sqrt());
            }
        }
        Self {
            width: n,
            target,
            amp,
        }
    }

    fn pairs(lower: &FockBasis, upper: &FockBasis) -> Self {
        let n = lower.n_orbitals();
        let width = pair_count(n);
        let mut target = vec![0u32; lower.len() * width];
        let mut amp = vec![0.0; lower.len() * width];
        let mut buf = vec![0u8; n];
        for (mi, m) in lower.states().enumerate() {
            for i in 0..n {
                for j in i..n {
                    buf.copy_from_slice(m);
                    let a = if i == j {
                        let before = buf[i] as f64;
                        buf[i] += 2;
                        ((before + 1.0) * (before + 2.0)).sqrt()
                    } else {
                        buf[i] += 1;
                        buf[j] += 1;
                        (buf[i] as f64 * buf[j] as f64).sqrt()
                    };
                    let slot = mi * width + pair_index(i, j, n);
                    target[slot] = upper.rank_unchecked(&buf) as u32;
                    amp[slot] = a;
                }
            }
        }
        Self { width, target, amp }
    }

    /// Column `m` of the result holds the amplitudes `⟨m| a… |c⟩`.
    fn annihilate(&self, coeffs: &[f64]) -> DMatrix<f64> {
        let rows = self.target.len() / self.width;
        let mut data = vec![0.0; self.target.len()];
        data.par_chunks_mut(self.width)
            .enumerate()
            .for_each(|(m, col)| {
                let base = m * self.width;
                for (p, out) in col.iter_mut().enumerate() {
                    *out = self.amp[base + p] * coeffs[self.target[base + p] as usize];
                }
            });
        DMatrix::from_vec(self.width, rows, data)
    }

    fn create_into(&self, amplitudes: &DMatrix<f64>, out: &mut [f64]) {
        for (slot, v) in amplitudes.as_slice().iter().enumerate() {
            out[self.target[slot] as usize] += self.amp[slot] * v;
        }
    }
}

/// Coefficient vector over a [`FockBasis`].
#[derive(Debug, Clone)]
pub struct ManyBodyState {
    pub basis: Arc<FockBasis>,
    pub coeffs: Vec<f64>,
}

impl ManyBodyState {
    pub fn new(basis: Arc<FockBasis>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for a basis of {} states",
                coeffs.len(),
                basis.len()
            )));
        }
        Ok(Self { basis, coeffs })
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let norm = self.norm();
        if norm > 0.0 {
            self.coeffs.iter_mut().for_each(|c| *c /= norm);
        }
    }
}

/// Matrix-free many-body Hamiltonian over a fixed orbital basis.
pub struct Hamiltonian {
    basis: Arc<FockBasis>,
    diagonal: Vec<f64>,
    two_body: Option<(CreationTable, DMatrix<f64>)>,
    conserves_parity: bool,
}

impl Hamiltonian {
    pub fn new(basis: Arc<FockBasis>, energies: &[f64], tensor: &TwoBodyTensor) -> Result<Self> {
        let n = basis.n_orbitals();
        if energies.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} orbital energies for {n} orbitals",
                energies.len()
            )));
        }
        if tensor.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{}-orbital tensor for {n} orbitals",
                tensor.len()
            )));
        }
        let diagonal = basis
            .states()
            .map(|s| s.iter().zip(energies).map(|(&c, e)| c as f64 * e).sum())
            .collect();

        let mut largest = 0.0f64;
        let mut odd_largest = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let v = tensor.get(i, j, k, l).abs();
                        largest = largest.max(v);
                        if (i + j + k + l) % 2 == 1 {
                            odd_largest = odd_largest.max(v);
                        }
                    }
                }
            }
        }
        let conserves_parity = odd_largest <= 1e-12 * largest.max(1.0);

        let n_particles = basis.n_particles();
        let two_body = if n_particles >= 2 {
            let lower = FockBasis::with_particles(n_particles - 2, n)?;
            let table = CreationTable::pairs(&lower, &basis);
            let np = pair_count(n);
            let mut coupling = DMatrix::zeros(np, np);
            for i in 0..n {
                for j in i..n {
                    let out_weight = if i == j { 0.5 } else { 1.0 };
                    for k in 0..n {
                        for l in k..n {
                            let mut v = tensor.get(i, j, k, l);
                            if k != l {
                                v += tensor.get(i, j, l, k);
                            }
                            coupling[(pair_index(i, j, n), pair_index(k, l, n))] = out_weight * v;
                        }
                    }
                }
            }
            Some((table, coupling))
        } else {
            None
        };
        Ok(Self {
            basis,
            diagonal,
            two_body,
            conserves_parity,
        })
    }

    /// Assemble from an orbital basis, checking the tensor matches it.
    pub fn from_orbitals(
        basis: Arc<FockBasis>,
        orbitals: &OrbitalBasis,
        tensor: &TwoBodyTensor,
    ) -> Result<Self> {
        if orbitals.len() != basis.n_orbitals() {
            return Err(Error::DimensionMismatch(format!(
                "{} orbitals for a {}-orbital Fock basis",
                orbitals.len(),
                basis.n_orbitals()
            )));
        }
        Self::new(basis, orbitals.energies(), tensor)
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    /// Whether the interaction obeys parity selection, assuming orbital `k`
    /// has parity `(-1)^k`.
    pub fn conserves_parity(&self) -> bool {
        self.conserves_parity
    }

    /// `out = H c`.
    pub fn apply(&self, coeffs: &[f64], out: &mut [f64]) -> Result<()> {
        if coeffs.len() != self.dim() || out.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "vectors of length {}/{} for dimension {}",
                coeffs.len(),
                out.len(),
                self.dim()
            )));
        }
        for ((o, d), c) in out.iter_mut().zip(&self.diagonal).zip(coeffs) {
            *o = d * c;
        }
        if let Some((table, coupling)) = &self.two_body {
            let annihilated = table.annihilate(coeffs);
            let created = coupling * annihilated;
            table.create_into(&created, out);
        }
        Ok(())
    }

    pub fn expectation(&self, coeffs: &[f64]) -> Result<f64> {
        let mut hc = vec![0.0; coeffs.len()];
        self.apply(coeffs, &mut hc)?;
        Ok(coeffs.iter().zip(&hc).map(|(a, b)| a * b).sum())
    }
}

/// `H c` for a single state; builds the Hamiltonian on the fly.
pub fn hamiltonian_action(
    state: &ManyBodyState,
    orbitals: &OrbitalBasis,
    tensor: &TwoBodyTensor,
) -> Result<Vec<f64>> {
    let h = Hamiltonian::from_orbitals(state.basis.clone(), orbitals, tensor)?;
    let mut out = vec![0.0; state.coeffs.len()];
    h.apply(&state.coeffs, &mut out)?;
    Ok(out)
}

/// `⟨a†_i a_j⟩`, trace `N`.
pub fn one_body_expectations(state: &ManyBodyState) -> Result<DMatrix<f64>> {
    let basis = &state.basis;
    let n = basis.n_orbitals();
    if basis.n_particles() == 0 {
        return Ok(DMatrix::zeros(n, n));
    }
    let lower = FockBasis::with_particles(basis.n_particles() - 1, n)?;
    let table = CreationTable::single(&lower, basis);
    let y = table.annihilate(&state.coeffs);
    let gamma = &y * y.transpose();
    Ok(symmetrized(gamma))
}

/// `⟨a†_i a†_j a_l a_k⟩` as a symmetric matrix over the pairs `(i,j)` and
/// `(k,l)`.
#[derive(Debug, Clone)]
pub struct TwoBodyExpectations {
    n: usize,
    gram: DMatrix<f64>,
}

impl TwoBodyExpectations {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.gram[(pair_index(i, j, self.n), pair_index(k, l, self.n))]
    }

    /// `Σ_ij ⟨a†_i a†_j a_j a_i⟩ = N(N-1)`.
    pub fn pair_count_sum(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += self.get(i, j, j, i);
            }
        }
        s
    }
}

pub fn two_body_expectations(state: &ManyBodyState) -> Result<TwoBodyExpectations> {
    let basis = &state.basis;
    if basis.n_particles() < 2 {
        return Err(validation(
            "two-body expectations need at least two particles",
        ));
    }
    let n = basis.n_orbitals();
    let lower = FockBasis::with_particles(basis.n_particles() - 2, n)?;
    let table = CreationTable::pairs(&lower, basis);
    let w = table.annihilate(&state.coeffs);
    let gram = symmetrized(&w * w.transpose());
    Ok(TwoBodyExpectations { n, gram })
}

fn symmetrized(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}
