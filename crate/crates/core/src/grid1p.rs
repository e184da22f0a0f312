//! Uniform position grid, trap potentials and the one-particle eigenbasis.
//!
//! The kinetic energy uses the sinc discrete-variable representation on the
//! uniform grid, which converges exponentially in the spacing for smooth
//! potentials. For an even number of points the symmetric grid is split into
//! even and odd parity blocks before the dense eigensolve, so every orbital
//! has exact parity.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;

use crate::csv::Num;
use crate::error::{validation, Error, Result};

/// Symmetric uniform grid on `[-x_max, x_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    x_max: f64,
    num_points: usize,
    spacing: f64,
}

pub fn make_grid(x_max: f64, num_points: usize) -> Result<Grid> {
    if !(x_max > 0.0) || !x_max.is_finite() {
        return Err(validation(format!(
            "grid extent must be positive, got {x_max}"
        )));
    }
    if num_points < 2 {
        return Err(validation(format!(
            "grid needs at least 2 points, got {num_points}"
        )));
    }
    Ok(Grid {
        x_max,
        num_points,
        spacing: 2.0 * x_max / (num_points - 1) as f64,
    })
}

impl Grid {
    pub fn x_min(&self) -> f64 {
        -self.x_max
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Position of grid point `a`. Mirrored points are computed from the same
    /// offset so that `x(a) + x(N-1-a)` is exactly zero.
    pub fn x(&self, a: usize) -> f64 {
        let mirror = self.num_points - 1 - a;
        if a <= mirror {
            -self.x_max + a as f64 * self.spacing
        } else {
            self.x_max - mirror as f64 * self.spacing
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.num_points).map(|a| self.x(a)).collect()
    }

    /// Trapezoid-free grid quadrature, matching the DVR inner product.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() * self.spacing
    }
}

/// Harmonic trap plus a central normalized Gaussian barrier `h δ_w(x)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TrapSpec {
    pub h: f64,
    pub w: f64,
}

impl TrapSpec {
    pub fn harmonic() -> Self {
        Self { h: 0.0, w: 0.5 }
    }

    pub fn double_well(h: f64) -> Self {
        Self { h, w: 0.5 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h >= 0.0) || !self.h.is_finite() {
            return Err(validation(format!(
                "barrier strength h must be >= 0, got {}",
                self.h
            )));
        }
        if !(self.w > 0.0) || !self.w.is_finite() {
            return Err(validation(format!(
                "barrier width w must be > 0, got {}",
                self.w
            )));
        }
        Ok(())
    }

    pub fn barrier(&self, x: f64) -> f64 {
        self.h * (-x * x / (2.0 * self.w * self.w)).exp() / ((2.0 * PI).sqrt() * self.w)
    }

    pub fn potential(&self, x: f64) -> f64 {
        0.5 * x * x + self.barrier(x)
    }
}

pub fn build_potential(grid: &Grid, trap: &TrapSpec) -> Vec<f64> {
    (0..grid.num_points())
        .map(|a| trap.potential(grid.x(a)))
        .collect()
}

/// Sinc-DVR kinetic matrix element for `-½ d²/dx²` between points `a` and `b`.
pub fn kinetic_element(a: usize, b: usize, spacing: f64) -> f64 {
    let pref = 1.0 / (2.0 * spacing * spacing);
    if a == b {
        pref * PI * PI / 3.0
    } else {
        let d = a as f64 - b as f64;
        let sign = if (a + b).is_multiple_of(2) { 1.0 } else { -1.0 };
        pref * 2.0 * sign / (d * d)
    }
}

/// Lowest one-particle eigenfunctions sampled on the grid, normalized so that
/// `Σ_a φ_i(x_a) φ_j(x_a) Δx = δ_ij`.
#[derive(Debug, Clone)]
pub struct OrbitalBasis {
    grid: Grid,
    energies: Vec<f64>,
    // row-major: orbital k occupies [k*G .. (k+1)*G)
    values: Vec<f64>,
}

impl OrbitalBasis {
    /// Wrap externally sampled orbitals, e.g. analytic functions in tests.
    /// The sign convention is applied but orthonormality is only checked.
    pub fn from_samples(grid: Grid, energies: Vec<f64>, orbitals: Vec<Vec<f64>>) -> Result<Self> {
        let g = grid.num_points();
        if energies.len() != orbitals.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} energies for {} orbitals",
                energies.len(),
                orbitals.len()
            )));
        }
        let mut values = Vec::with_capacity(g * orbitals.len());
        for (k, mut phi) in orbitals.into_iter().enumerate() {
            if phi.len() != g {
                return Err(Error::DimensionMismatch(format!(
                    "orbital {k} has {} samples on a {g}-point grid",
                    phi.len()
                )));
            }
            fix_sign(&mut phi);
            values.extend(phi);
        }
        Ok(Self {
            grid,
            energies,
            values,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn orbital(&self, k: usize) -> &[f64] {
        let g = self.grid.num_points();
        &self.values[k * g..(k + 1) * g]
    }

    /// The nested sub-basis of the lowest `n` orbitals.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n > self.len() {
            return Err(validation(format!(
                "cannot truncate {} orbitals to {n}",
                self.len()
            )));
        }
        let g = self.grid.num_points();
        Ok(Self {
            grid: self.grid.clone(),
            energies: self.energies[..n].to_vec(),
            values: self.values[..n * g].to_vec(),
        })
    }

    /// `Σ_a φ_i φ_j Δx` for all pairs.
    pub fn overlap(&self) -> DMatrix<f64> {
        let n = self.len();
        let dx = self.grid.spacing();
        DMatrix::from_fn(n, n, |i, j| dot(self.orbital(i), self.orbital(j)) * dx)
    }

    /// CSV with columns `x,U,phi0..phi{n-1}`.
    pub fn write_csv<W: Write>(&self, potential: &[f64], out: &mut W) -> std::io::Result<()> {
        write!(out, "x,U")?;
        for k in 0..self.len() {
            write!(out, ",phi{k}")?;
        }
        writeln!(out)?;
        for a in 0..self.grid.num_points() {
            write!(out, "{},{}", Num(self.grid.x(a)), Num(potential[a]))?;
            for k in 0..self.len() {
                write!(out, ",{}", Num(self.orbital(k)[a]))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Make the first sample of appreciable magnitude positive. Samples far out
/// in the classically forbidden tail are at rounding level and carry no sign.
fn fix_sign(phi: &mut [f64]) {
    let peak = phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return;
    }
    let threshold = 1e-6 * peak;
    if let Some(first) = phi.iter().find(|v| v.abs() > threshold) {
        if *first < 0.0 {
            phi.iter_mut().for_each(|v| *v = -*v);
        }
    }
}

/// Lowest `n` eigenpairs of `-½ d²/dx² + U` on the grid.
pub fn solve_1p(grid: &Grid, potential: &[f64], n: usize) -> Result<OrbitalBasis> {
    let g = grid.num_points();
    if potential.len() != g {
        return Err(Error::DimensionMismatch(format!(
            "potential has {} samples on a {g}-point grid",
            potential.len()
        )));
    }
    if n == 0 || n > g {
        return Err(validation(format!(
            "orbital count must be in 1..={g}, got {n}"
        )));
    }
    if potential.iter().any(|u| !u.is_finite()) {
        return Err(validation("potential must be finite on the grid"));
    }
    let dx = grid.spacing();

    // (energy, vector over the full grid with unit Euclidean norm)
    let mut pairs: Vec<(f64, Vec<f64>)> = if g.is_multiple_of(2) {
        let half = g / 2;
        let mut all = Vec::with_capacity(2 * half);
        for parity in [1.0, -1.0] {
            let block = DMatrix::from_fn(half, half, |a, b| {
                let mirror_b = g - 1 - b;
                let mut v = kinetic_element(a, b, dx) + parity * kinetic_element(a, mirror_b, dx);
                if a == b {
                    v += potential[a];
                }
                v
            });
            let eig = block.symmetric_eigen();
            let s = std::f64::consts::FRAC_1_SQRT_2;
            for (k, &e) in eig.eigenvalues.iter().enumerate() {
                let col = eig.eigenvectors.column(k);
                let mut full = vec![0.0; g];
                for a in 0..half {
                    full[a] = col[a] * s;
                    full[g - 1 - a] = parity * col[a] * s;
                }
                all.push((e, full));
            }
        }
        all
    } else {
        let h = DMatrix::from_fn(g, g, |a, b| {
            let mut v = kinetic_element(a, b, dx);
            if a == b {
                v += potential[a];
            }
            v
        });
        let eig = h.symmetric_eigen();
        eig.eigenvalues
            .iter()
            .enumerate()
            .map(|(k, &e)| (e, eig.eigenvectors.column(k).iter().copied().collect()))
            .collect()
    };

    if pairs.iter().any(|(e, _)| !e.is_finite()) {
        return Err(Error::Eigensolver("non-finite eigenvalue".into()));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.truncate(n);

    let norm = 1.0 / dx.sqrt();
    let mut energies = Vec::with_capacity(n);
    let mut orbitals = Vec::with_capacity(n);
    for (e, v) in pairs {
        energies.push(e);
        orbitals.push(v.into_iter().map(|c| c * norm).collect::<Vec<_>>());
    }

    let basis = OrbitalBasis::from_samples(grid.clone(), energies, orbitals)?;
    check_eigen_residuals(&basis, potential)?;
    Ok(basis)
}

fn check_eigen_residuals(basis: &OrbitalBasis, potential: &[f64]) -> Result<()> {
    let grid = basis.grid();
    let g = grid.num_points();
    let dx = grid.spacing();
    let kin: Vec<f64> = (0..g).map(|d| kinetic_element(0, d, dx)).collect();
    let mut worst = Vec::new();
    for k in 0..basis.len() {
        let phi = basis.orbital(k);
        let e = basis.energies()[k];
        let mut r2 = 0.0;
        for a in 0..g {
            let mut hv = potential[a] * phi[a];
            for (b, &p) in phi.iter().enumerate() {
                hv += kin[a.abs_diff(b)] * p;
            }
            let r = hv - e * phi[a];
            r2 += r * r;
        }
        let r = (r2 * dx).sqrt();
        let scale = 1.0 + e.abs();
        if !(r <= 1e-8 * scale) {
            worst.push(format!("k={k}: {r:.3e}"));
        }
    }
    if worst.is_empty() {
        Ok(())
    } else {
        Err(Error::Eigensolver(format!(
            "residual norms too large: {}",
            worst.join(", ")
        )))
    }
}

/// Build the potential for `trap` and solve for `n` orbitals.
pub fn trap_basis(grid: &Grid, trap: &TrapSpec, n: usize) -> Result<OrbitalBasis> {
    trap.validate()?;
    solve_1p(grid, &build_potential(grid, trap), n)
}
