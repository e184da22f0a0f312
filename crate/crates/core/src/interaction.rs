//! Mollified contact interaction with a centre-of-mass dependent coupling,
//! and its matrix elements over an orbital basis.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::csv::Num;
use crate::error::{validation, Error, Result};
use crate::grid1p::OrbitalBasis;

/// Kernel support in units of `sigma`.
pub const TRUNCATION_WIDTHS: f64 = 6.0;

/// `V(r, R) = g(R) δ_σ(r)` with `g(R) = g0 [1 + α tanh(R/L)]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct InteractionSpec {
    pub g0: f64,
    pub alpha: f64,
    #[serde(rename = "L")]
    pub length: f64,
    pub sigma: f64,
}

impl InteractionSpec {
    pub fn homogeneous(g0: f64) -> Self {
        Self {
            g0,
            alpha: 0.0,
            length: 1.0,
            sigma: 0.05,
        }
    }

    pub fn modulated(g0: f64, alpha: f64) -> Self {
        Self {
            alpha,
            ..Self::homogeneous(g0)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g0 >= 0.0) || !self.g0.is_finite() {
            return Err(validation(format!("g0 must be >= 0, got {}", self.g0)));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(validation(format!(
                "alpha must lie in [0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.length > 0.0) || !self.length.is_finite() {
            return Err(validation(format!(
                "modulation length L must be > 0, got {}",
                self.length
            )));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(validation(format!("sigma must be > 0, got {}", self.sigma)));
        }
        // the modulation must be slow on the scale of the collision radius
        if self.alpha > 0.0 && self.length < 10.0 * self.sigma * self.alpha {
            return Err(validation(format!(
                "modulation length L={} not slow compared to sigma*alpha={}",
                self.length,
                self.sigma * self.alpha
            )));
        }
        Ok(())
    }

    pub fn coupling_at(&self, center_of_mass: f64) -> f64 {
        g_of_r(center_of_mass, self)
    }
}

pub fn g_of_r(center_of_mass: f64, spec: &InteractionSpec) -> f64 {
    spec.g0 * (1.0 + spec.alpha * (center_of_mass / spec.length).tanh())
}

pub fn delta_sigma(r: f64, sigma: f64) -> f64 {
    (-r * r / (2.0 * sigma * sigma)).exp() / ((2.0 * PI).sqrt() * sigma)
}

/// Index of the unordered pair `(i, k)` with `i <= k` in row-major upper
/// triangle order.
#[inline]
pub fn pair_index(i: usize, k: usize, n: usize) -> usize {
    let (a, b) = if i <= k { (i, k) } else { (k, i) };
    a * n - a * (a + 1) / 2 + b
}

pub fn pair_count(n: usize) -> usize {
    n * (n + 1) / 2
}

/// `V_ijkl = ∫∫ φ_i(x) φ_k(x) V(x, y) φ_j(y) φ_l(y)`, stored as a symmetric
/// matrix over the pair densities `(i,k)` and `(j,l)`.
#[derive(Debug, Clone)]
pub struct TwoBodyTensor {
    n: usize,
    pairs: DMatrix<f64>,
}

impl TwoBodyTensor {
    pub fn zeros(n: usize) -> Self {
        let p = pair_count(n);
        Self {
            n,
            pairs: DMatrix::zeros(p, p),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.pairs[(pair_index(i, k, self.n), pair_index(j, l, self.n))]
    }

    /// Elements restricted to the lowest `n` orbitals.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n > self.n {
            return Err(validation(format!(
                "cannot truncate a {}-orbital tensor to {n}",
                self.n
            )));
        }
        let p = pair_count(n);
        let mut pairs = DMatrix::zeros(p, p);
        for (i, k) in upper_pairs(n) {
            for (j, l) in upper_pairs(n) {
                pairs[(pair_index(i, k, n), pair_index(j, l, n))] = self.get(i, j, k, l);
            }
        }
        Ok(Self { n, pairs })
    }

    /// Rows `i,j,k,l,value` for every element with `i<=k`, `j<=l`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "i,j,k,l,value")?;
        for (i, k) in upper_pairs(self.n) {
            for (j, l) in upper_pairs(self.n) {
                writeln!(out, "{i},{j},{k},{l},{}", Num(self.get(i, j, k, l)))?;
            }
        }
        Ok(())
    }
}

fn upper_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i..n).map(move |k| (i, k)))
}

/// Banded kernel `K(a, b) = g((x_a+x_b)/2) δ_σ(x_a-x_b) Δx`, stored per row as
/// offsets `-band..=band`.
struct BandedKernel {
    band: usize,
    rows: Vec<f64>,
}

impl BandedKernel {
    fn new(basis: &OrbitalBasis, spec: &InteractionSpec) -> Self {
        let grid = basis.grid();
        let g = grid.num_points();
        let dx = grid.spacing();
        let band = ((TRUNCATION_WIDTHS * spec.sigma / dx).floor() as usize).min(g - 1);
        let width = 2 * band + 1;
        let mut rows = vec![0.0; g * width];
        for a in 0..g {
            let xa = grid.x(a);
            for off in 0..width {
                let b = a as isize + off as isize - band as isize;
                if b < 0 || b >= g as isize {
                    continue;
                }
                let xb = grid.x(b as usize);
                rows[a * width + off] =
                    g_of_r(0.5 * (xa + xb), spec) * delta_sigma(xa - xb, spec.sigma) * dx;
            }
        }
        Self { band, rows }
    }

    fn apply(&self, f: &[f64], out: &mut [f64]) {
        let g = f.len();
        let width = 2 * self.band + 1;
        for a in 0..g {
            let lo = a.saturating_sub(self.band);
            let hi = (a + self.band).min(g - 1);
            let row = &self.rows[a * width..(a + 1) * width];
            let mut acc = 0.0;
            for b in lo..=hi {
                acc += row[b + self.band - a] * f[b];
            }
            out[a] = acc;
        }
    }
}

pub fn two_body_tensor(basis: &OrbitalBasis, spec: &InteractionSpec) -> Result<TwoBodyTensor> {
    spec.validate()?;
    let grid = basis.grid();
    let dx = grid.spacing();
    if dx > spec.sigma / 3.0 {
        return Err(Error::Resolution {
            spacing: dx,
            sigma: spec.sigma,
        });
    }
    let n = basis.len();
    if spec.g0 == 0.0 {
        return Ok(TwoBodyTensor::zeros(n));
    }
    let g = grid.num_points();
    let kernel = BandedKernel::new(basis, spec);
    let pair_list: Vec<(usize, usize)> = upper_pairs(n).collect();

    // pair densities P_ik(x) and their kernel images K·P_ik
    let products: Vec<Vec<f64>> = pair_list
        .par_iter()
        .map(|&(i, k)| {
            let (pi, pk) = (basis.orbital(i), basis.orbital(k));
            pi.iter().zip(pk).map(|(a, b)| a * b).collect()
        })
        .collect();
    let images: Vec<Vec<f64>> = products
        .par_iter()
        .map(|p| {
            let mut out = vec![0.0; g];
            kernel.apply(p, &mut out);
            out
        })
        .collect();

    let np = pair_list.len();
    let upper: Vec<Vec<f64>> = (0..np)
        .into_par_iter()
        .map(|r| {
            (r..np)
                .map(|c| crate::grid1p::dot(&products[r], &images[c]) * dx)
                .collect()
        })
        .collect();
    let mut pairs = DMatrix::zeros(np, np);
    for (r, row) in upper.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            pairs[(r, r + off)] = v;
            pairs[(r + off, r)] = v;
        }
    }
    Ok(TwoBodyTensor { n, pairs })
}
