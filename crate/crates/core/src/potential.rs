//! Potential energy specifications.

use crate::error::{Error, Result};
use crate::grid::Grid;
use serde::{Deserialize, Serialize};

/// Potential V(q). Named kinds act per axis and add up in 2D; tabulated
/// values are joint over the whole grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    Free,
    Harmonic { omega: f64 },
    /// V = a q² + b q⁴ per axis.
    Quartic { a: f64, b: f64 },
    Tabulated { values: Vec<f64> },
}

impl PotentialSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            PotentialSpec::Free => Ok(()),
            PotentialSpec::Harmonic { omega } => {
                if !omega.is_finite() {
                    return Err(Error::InvalidPotential("omega must be finite".into()));
                }
                Ok(())
            }
            PotentialSpec::Quartic { a, b } => {
                if !a.is_finite() || !b.is_finite() {
                    return Err(Error::InvalidPotential("coefficients must be finite".into()));
                }
                if *b < 0.0 {
                    return Err(Error::InvalidPotential(
                        "quartic coefficient b must be nonnegative (confining)".into(),
                    ));
                }
                Ok(())
            }
            PotentialSpec::Tabulated { values } => {
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidPotential(
                        "tabulated values must be finite".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Materialize V on the grid. `mass` enters only the harmonic kind
    /// (V = m ω² q²/2 per axis).
    pub fn evaluate_on(&self, grid: &Grid, mass: [f64; 2]) -> Result<Vec<f64>> {
        self.validate()?;
        let axis_term = |q: f64, k: usize| -> f64 {
            match self {
                PotentialSpec::Free => 0.0,
                PotentialSpec::Harmonic { omega } => 0.5 * mass[k] * omega * omega * q * q,
                PotentialSpec::Quartic { a, b } => a * q * q + b * q.powi(4),
                PotentialSpec::Tabulated { .. } => unreachable!(),
            }
        };
        match self {
            PotentialSpec::Tabulated { values } => {
                if values.len() != grid.len() {
                    return Err(Error::InvalidPotential(format!(
                        "tabulated length {} does not match grid size {}",
                        values.len(),
                        grid.len()
                    )));
                }
                Ok(values.clone())
            }
            _ => Ok((0..grid.len())
                .map(|idx| {
                    let q = grid.point(idx);
                    (0..grid.dim()).map(|k| axis_term(q[k], k)).sum()
                })
                .collect()),
        }
    }
}
