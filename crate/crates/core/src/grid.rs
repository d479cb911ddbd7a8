//! Uniform periodic grids over [-L/2, L/2) per axis.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Uniform periodic grid with the same length and point count per axis.
///
/// Points along each axis sit at q_i = -L/2 + i h with h = L/n, i = 0..n-1.
/// Arrays over the grid are row-major flat vectors of length n^dim; for
/// dim = 2 the flat index is `i0 * n + i1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    points_per_axis: usize,
    extent_per_axis: f64,
}

impl Grid {
    pub fn new(dim: usize, points_per_axis: usize, extent_per_axis: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dim must be 1 or 2, got {dim}")));
        }
        if points_per_axis < 64 || !points_per_axis.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 64, got {points_per_axis}"
            )));
        }
        if !(extent_per_axis > 0.0) || !extent_per_axis.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "extent per axis must be positive and finite, got {extent_per_axis}"
            )));
        }
        Ok(Grid {
            dim,
            points_per_axis,
            extent_per_axis,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis (n).
    pub fn n(&self) -> usize {
        self.points_per_axis
    }

    /// Domain length per axis (L).
    pub fn length(&self) -> f64 {
        self.extent_per_axis
    }

    /// Grid spacing h = L/n.
    pub fn spacing(&self) -> f64 {
        self.extent_per_axis / self.points_per_axis as f64
    }

    /// Total number of grid points n^dim.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell volume h^dim used as the Riemann quadrature weight.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Coordinate of point `i` along one axis.
    pub fn coord(&self, i: usize) -> f64 {
        -0.5 * self.extent_per_axis + i as f64 * self.spacing()
    }

    /// Coordinates of the flat index `idx` (second component 0 for dim = 1).
    pub fn point(&self, idx: usize) -> [f64; 2] {
        match self.dim {
            1 => [self.coord(idx), 0.0],
            _ => {
                let n = self.points_per_axis;
                [self.coord(idx / n), self.coord(idx % n)]
            }
        }
    }

    /// Wrap a coordinate into [-L/2, L/2).
    pub fn wrap(&self, x: f64) -> f64 {
        let l = self.extent_per_axis;
        let mut y = (x + 0.5 * l).rem_euclid(l) - 0.5 * l;
        // rem_euclid can round up to exactly l for inputs just below 0.
        if y >= 0.5 * l {
            y -= l;
        }
        y
    }

    /// Wrap a configuration point component-wise.
    pub fn wrap_point(&self, q: [f64; 2]) -> [f64; 2] {
        let mut out = q;
        for k in 0..self.dim {
            out[k] = self.wrap(q[k]);
        }
        out
    }

    pub fn same_as(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_times_points_is_extent() {
        let g = Grid::new(1, 256, 20.0).unwrap();
        assert_eq!(g.spacing() * g.n() as f64, g.length());
        assert_eq!(g.len(), 256);
        let g2 = Grid::new(2, 64, 10.0).unwrap();
        assert_eq!(g2.len(), 4096);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Grid::new(3, 64, 1.0).is_err());
        assert!(Grid::new(1, 60, 1.0).is_err());
        assert!(Grid::new(1, 32, 1.0).is_err());
        assert!(Grid::new(1, 64, -1.0).is_err());
    }

    #[test]
    fn wrap_stays_in_domain() {
        let g = Grid::new(1, 64, 10.0).unwrap();
        for &x in &[-5.0, 5.0, 12.3, -17.2, 4.999999, -1e-17] {
            let y = g.wrap(x);
            assert!((-5.0..5.0).contains(&y), "wrap({x}) = {y}");
        }
        assert_eq!(g.wrap(7.0), -3.0);
    }

    #[test]
    fn coords_cover_half_open_interval() {
        let g = Grid::new(1, 64, 16.0).unwrap();
        assert_eq!(g.coord(0), -8.0);
        assert!(g.coord(63) < 8.0);
        assert_eq!(g.point(5)[0], g.coord(5));
        let g2 = Grid::new(2, 64, 16.0).unwrap();
        assert_eq!(g2.point(65), [g2.coord(1), g2.coord(1)]);
    }
}
