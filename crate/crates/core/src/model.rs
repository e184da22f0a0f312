//! A trap, an interaction and the orbital data derived from them.

use std::sync::Arc;

use crate::error::{validation, Result};
use crate::fock::{enumerate_basis, Hamiltonian};
use crate::grid1p::{build_potential, solve_1p, Grid, OrbitalBasis, TrapSpec};
use crate::interaction::{two_body_tensor, InteractionSpec, TwoBodyTensor};

#[derive(Debug, Clone)]
pub struct Model {
    pub trap: TrapSpec,
    pub interaction: InteractionSpec,
    pub potential: Vec<f64>,
    pub orbitals: OrbitalBasis,
    pub tensor: TwoBodyTensor,
}

impl Model {
    pub fn build(
        grid: &Grid,
        trap: TrapSpec,
        interaction: InteractionSpec,
        n: usize,
    ) -> Result<Self> {
        trap.validate()?;
        interaction.validate()?;
        let potential = build_potential(grid, &trap);
        let orbitals = solve_1p(grid, &potential, n)?;
        let tensor = two_body_tensor(&orbitals, &interaction)?;
        Ok(Self {
            trap,
            interaction,
            potential,
            orbitals,
            tensor,
        })
    }

    /// Same trap, new interaction; reuses the orbitals.
    pub fn with_interaction(&self, interaction: InteractionSpec) -> Result<Self> {
        interaction.validate()?;
        let tensor = two_body_tensor(&self.orbitals, &interaction)?;
        Ok(Self {
            interaction,
            tensor,
            ..self.clone()
        })
    }

    /// The nested model over the lowest `n` orbitals.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        Ok(Self {
            trap: self.trap,
            interaction: self.interaction,
            potential: self.potential.clone(),
            orbitals: self.orbitals.truncated(n)?,
            tensor: self.tensor.truncated(n)?,
        })
    }

    pub fn n_orbitals(&self) -> usize {
        self.orbitals.len()
    }

    pub fn hamiltonian(&self, n_particles: usize) -> Result<Hamiltonian> {
        if n_particles == 0 {
            return Err(validation("particle count must be >= 1"));
        }
        let basis = Arc::new(enumerate_basis(n_particles, self.n_orbitals())?);
        Hamiltonian::from_orbitals(basis, &self.orbitals, &self.tensor)
    }
}
