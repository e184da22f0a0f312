//! Effective one-dimensional coupling from the transverse confinement.
//!
//! All lengths are measured in units of the longitudinal oscillator length,
//! energies in units of the longitudinal trap frequency.

use crate::error::{validation, Error, Result};

/// `-ζ(1/2)`, the constant in the confinement-induced shift of the 1D coupling.
pub const CONFINEMENT_CONSTANT: f64 = 1.460_354_508_809_586_8;

const POLE_GUARD: f64 = 1e-9;

/// Scattering length and transverse oscillator length, both relative to the
/// longitudinal length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub a0_scaled: f64,
    pub aperp_scaled: f64,
}

impl PhysicalParams {
    pub fn new(a0_scaled: f64, aperp_scaled: f64) -> Result<Self> {
        if !(a0_scaled >= 0.0) || !a0_scaled.is_finite() {
            return Err(validation(format!(
                "a0_scaled must be >= 0, got {a0_scaled}"
            )));
        }
        if !(aperp_scaled > 0.0) || !aperp_scaled.is_finite() {
            return Err(validation(format!(
                "aperp_scaled must be > 0, got {aperp_scaled}"
            )));
        }
        Ok(Self {
            a0_scaled,
            aperp_scaled,
        })
    }
}

/// Dimensionless 1D coupling `g' = 4 a0 / aperp^2 / (1 - C a0/aperp)`.
///
/// Past the resonance the result is negative; rejecting attractive couplings
/// is left to the caller.
pub fn coupling_strength_1d(p: PhysicalParams) -> Result<f64> {
    let ratio = p.a0_scaled / p.aperp_scaled;
    let denom = 1.0 - CONFINEMENT_CONSTANT * ratio;
    if denom.abs() < POLE_GUARD {
        return Err(Error::Resonance {
            distance: denom.abs(),
        });
    }
    Ok(4.0 * p.a0_scaled / (p.aperp_scaled * p.aperp_scaled) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(a0: f64, aperp: f64) -> f64 {
        coupling_strength_1d(PhysicalParams::new(a0, aperp).unwrap()).unwrap()
    }

    #[test]
    fn sodium_low_frequency_row() {
        let v = g(1.9e-3, 0.1);
        assert!((v - 0.78).abs() / 0.78 < 0.01, "{v}");
    }

    #[test]
    fn rubidium_past_resonance_is_negative() {
        let v = g(0.16, 0.1);
        assert!((v + 48.0).abs() / 48.0 < 0.02, "{v}");
    }

    #[test]
    fn zero_scattering_length() {
        assert_eq!(g(0.0, 0.1), 0.0);
    }

    #[test]
    fn pole_is_rejected() {
        let aperp = 0.1;
        let a0 = aperp / CONFINEMENT_CONSTANT;
        let err = coupling_strength_1d(PhysicalParams {
            a0_scaled: a0,
            aperp_scaled: aperp,
        });
        assert!(matches!(err, Err(Error::Resonance { .. })));
    }

    #[test]
    fn invalid_params() {
        assert!(PhysicalParams::new(-1e-3, 0.1).is_err());
        assert!(PhysicalParams::new(1e-3, 0.0).is_err());
    }

    #[test]
    fn increasing_below_resonance_and_diverging() {
        let aperp = 0.1;
        let pole = aperp / CONFINEMENT_CONSTANT;
        let mut prev = g(0.0, aperp);
        for k in 1..200 {
            let a0 = pole * (k as f64) / 200.0;
            let v = g(a0, aperp);
            assert!(v > prev);
            prev = v;
        }
        assert!(g(pole * (1.0 - 1e-6), aperp) > 1e6);
    }

    #[test]
    fn first_order_limit() {
        let aperp = 0.1;
        for &a0 in &[1e-6, 1e-5, 1e-4] {
            let lin = 4.0 * a0 / (aperp * aperp);
            // relative deviation is C a0/aperp to leading order
            let rel = (g(a0, aperp) - lin) / lin;
            let first = CONFINEMENT_CONSTANT * a0 / aperp;
            assert!((rel - first).abs() < 2.0 * first * first, "{rel}");
        }
    }
}
