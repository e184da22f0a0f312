//! Reduced densities, natural occupations and derived diagnostics.
//!
//! Both the one- and two-body densities carry unit normalization.

use std::io::Write;

use nalgebra::DMatrix;

use crate::csv::Num;
use crate::error::{validation, Result};
use crate::fock::{one_body_expectations, two_body_expectations, ManyBodyState};
use crate::grid1p::OrbitalBasis;
use crate::interaction::delta_sigma;

const DEGENERATE_OCCUPATION: f64 = 1e-10;

/// Sampled real-space density on the orbital grid (or a subsample of it).
#[derive(Debug, Clone)]
pub struct DensityProfile {
    pub x: Vec<f64>,
    pub spacing: f64,
    pub values: Vec<f64>,
}

impl DensityProfile {
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spacing
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "x,rho1")?;
        for (x, v) in self.x.iter().zip(&self.values) {
            writeln!(out, "{},{}", Num(*x), Num(*v))?;
        }
        Ok(())
    }
}

/// `ρ2(x1, x2)` on a square grid; `values[a * len + b]` is at `(x[a], x[b])`.
#[derive(Debug, Clone)]
pub struct PairDensity {
    pub x: Vec<f64>,
    pub spacing: f64,
    pub values: Vec<f64>,
}

impl PairDensity {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn at(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.x.len() + b]
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spacing * self.spacing
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_diagonal(&self) -> f64 {
        (0..self.len())
            .map(|a| self.at(a, a))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "x1,x2,rho2")?;
        for (a, x1) in self.x.iter().enumerate() {
            for (b, x2) in self.x.iter().enumerate() {
                writeln!(out, "{},{},{}", Num(*x1), Num(*x2), Num(self.at(a, b)))?;
            }
        }
        Ok(())
    }
}

/// Unit-trace one-body density matrix in the orbital basis with its
/// spectral decomposition.
#[derive(Debug, Clone)]
pub struct OneBodyDensityMatrix {
    pub matrix: DMatrix<f64>,
    /// Descending.
    pub natural_occupations: Vec<f64>,
    /// Column `a` holds the orbital-basis coefficients of natural orbital `a`.
    pub natural_coefficients: DMatrix<f64>,
    /// Indices `a` whose occupation coincides with that of `a + 1`.
    pub degenerate_pairs: Vec<usize>,
}

impl OneBodyDensityMatrix {
    pub fn from_matrix(matrix: DMatrix<f64>) -> Self {
        let n = matrix.nrows();
        let eig = matrix.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let natural_occupations: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut natural_coefficients = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            let mut col = eig.eigenvectors.column(src).clone_owned();
            // largest-magnitude coefficient positive
            let (imax, _) = col
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |(bi, bv), (i, v)| {
                    if v.abs() > bv {
                        (i, v.abs())
                    } else {
                        (bi, bv)
                    }
                });
            if col[imax] < 0.0 {
                col = -col;
            }
            natural_coefficients.set_column(dst, &col);
        }
        let degenerate_pairs = natural_occupations
            .windows(2)
            .enumerate()
            .filter(|(_, w)| {
                (w[0] - w[1]).abs() < DEGENERATE_OCCUPATION && w[0] > DEGENERATE_OCCUPATION
            })
            .map(|(a, _)| a)
            .collect();
        Self {
            matrix,
            natural_occupations,
            natural_coefficients,
            degenerate_pairs,
        }
    }

    pub fn n0(&self) -> f64 {
        self.natural_occupations[0]
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// Natural orbital `a` sampled on the grid.
    pub fn natural_orbital(&self, a: usize, basis: &OrbitalBasis) -> Vec<f64> {
        let mut out = vec![0.0; basis.grid().num_points()];
        for i in 0..basis.len() {
            let c = self.natural_coefficients[(i, a)];
            for (o, p) in out.iter_mut().zip(basis.orbital(i)) {
                *o += c * p;
            }
        }
        out
    }

    /// `ρ1(x) = Σ_ij γ_ij φ_i(x) φ_j(x)`.
    pub fn profile(&self, basis: &OrbitalBasis) -> DensityProfile {
        let grid = basis.grid();
        let n = basis.len();
        let mut values = vec![0.0; grid.num_points()];
        for i in 0..n {
            for j in 0..n {
                let g = self.matrix[(i, j)];
                if g == 0.0 {
                    continue;
                }
                for ((v, a), b) in values
                    .iter_mut()
                    .zip(basis.orbital(i))
                    .zip(basis.orbital(j))
                {
                    *v += g * a * b;
                }
            }
        }
        DensityProfile {
            x: grid.points(),
            spacing: grid.spacing(),
            values,
        }
    }

    /// CSV with columns `a,n_a`.
    pub fn write_occupations<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "a,n_a")?;
        for (a, v) in self.natural_occupations.iter().enumerate() {
            writeln!(out, "{a},{}", Num(*v))?;
        }
        Ok(())
    }
}

pub fn one_body_density(
    state: &ManyBodyState,
    basis: &OrbitalBasis,
) -> Result<(OneBodyDensityMatrix, DensityProfile)> {
    if basis.len() != state.basis.n_orbitals() {
        return Err(validation("orbital basis does not match the state"));
    }
    let n_particles = state.basis.n_particles() as f64;
    let dm = OneBodyDensityMatrix::from_matrix(one_body_expectations(state)? / n_particles);
    let profile = dm.profile(basis);
    Ok((dm, profile))
}

/// `ρ2` on every `stride`-th grid point (default 4).
pub fn two_body_density(
    state: &ManyBodyState,
    basis: &OrbitalBasis,
    stride: Option<usize>,
) -> Result<PairDensity> {
    let np = state.basis.n_particles();
    if np < 2 {
        return Err(validation("two-body density needs at least two particles"));
    }
    if basis.len() != state.basis.n_orbitals() {
        return Err(validation("orbital basis does not match the state"));
    }
    let stride = stride.unwrap_or(4).max(1);
    let expectations = two_body_expectations(state)?;
    let grid = basis.grid();
    let n = basis.len();
    let samples: Vec<usize> = (0..grid.num_points()).step_by(stride).collect();
    let s = samples.len();

    // F[(i,k), a] = φ_i(x_a) φ_k(x_a) over ordered index pairs
    let products = DMatrix::from_fn(n * n, s, |row, a| {
        let (i, k) = (row / n, row % n);
        basis.orbital(i)[samples[a]] * basis.orbital(k)[samples[a]]
    });
    let norm = 1.0 / (np * (np - 1)) as f64;
    let coupling = DMatrix::from_fn(n * n, n * n, |r, c| {
        let (i, k) = (r / n, r % n);
        let (j, l) = (c / n, c % n);
        norm * expectations.get(i, j, k, l)
    });
    let rho = products.transpose() * (&coupling * &products);
    let mut values = vec![0.0; s * s];
    for a in 0..s {
        for b in 0..s {
            values[a * s + b] = 0.5 * (rho[(a, b)] + rho[(b, a)]);
        }
    }
    Ok(PairDensity {
        x: samples.iter().map(|&a| grid.x(a)).collect(),
        spacing: grid.spacing() * stride as f64,
        values,
    })
}

/// `⟨x⟩ = tr(ρ1 x)`.
pub fn displacement(dm: &OneBodyDensityMatrix, basis: &OrbitalBasis) -> f64 {
    let profile = dm.profile(basis);
    profile
        .x
        .iter()
        .zip(&profile.values)
        .map(|(x, r)| x * r)
        .sum::<f64>()
        * profile.spacing
}

/// `N(N-1)/2 ⟨00|δ_σ(x1-x2)|00⟩`: the derivative of the ground energy with
/// respect to a homogeneous coupling at zero coupling.
pub fn energy_slope_at_zero(n_particles: usize, basis: &OrbitalBasis, sigma: f64) -> f64 {
    let grid = basis.grid();
    let density: Vec<f64> = basis.orbital(0).iter().map(|p| p * p).collect();
    let dx = grid.spacing();
    let g = grid.num_points();
    let band = ((crate::interaction::TRUNCATION_WIDTHS * sigma / dx).ceil() as usize).min(g - 1);
    let kernel: Vec<f64> = (0..=band)
        .map(|d| delta_sigma(d as f64 * dx, sigma))
        .collect();
    let mut overlap = 0.0;
    for a in 0..g {
        let lo = a.saturating_sub(band);
        let hi = (a + band).min(g - 1);
        let mut acc = 0.0;
        for b in lo..=hi {
            acc += kernel[a.abs_diff(b)] * density[b];
        }
        overlap += density[a] * acc;
    }
    let pairs = (n_particles * n_particles.saturating_sub(1)) as f64 / 2.0;
    pairs * overlap * dx * dx
}

/// Ground energy and density of the fermionized limit: `N` free fermions in
/// the same trap.
pub fn tg_oracle(basis: &OrbitalBasis, n_particles: usize) -> Result<(f64, DensityProfile)> {
    if n_particles == 0 || basis.len() < n_particles {
        return Err(validation(format!(
            "Tonks-Girardeau oracle needs n >= N >= 1 (n={}, N={n_particles})",
            basis.len()
        )));
    }
    let energy = basis.energies()[..n_particles].iter().sum();
    let grid = basis.grid();
    let mut values = vec![0.0; grid.num_points()];
    for k in 0..n_particles {
        for (v, p) in values.iter_mut().zip(basis.orbital(k)) {
            *v += p * p / n_particles as f64;
        }
    }
    Ok((
        energy,
        DensityProfile {
            x: grid.points(),
            spacing: grid.spacing(),
            values,
        },
    ))
}

/// Local maxima that are strictly larger than `half_width` neighbours on each
/// side and above 5 % of the global maximum. A run of exactly equal samples
/// (a maximum straddled by a mirrored pair of grid points) counts once, with
/// the neighbourhood measured from the ends of the run.
pub fn count_humps(values: &[f64], half_width: usize) -> usize {
    let peak = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let floor = 0.05 * peak;
    let len = values.len();
    let mut count = 0;
    let mut start = 0;
    while start < len {
        let v = values[start];
        let mut end = start;
        while end + 1 < len && values[end + 1] == v {
            end += 1;
        }
        if v > floor {
            let left = (1..=half_width).all(|d| start.checked_sub(d).is_none_or(|b| v > values[b]));
            let right = (1..=half_width).all(|d| values.get(end + d).is_none_or(|&u| v > u));
            if left && right {
                count += 1;
            }
        }
        start = end + 1;
    }
    count
}
