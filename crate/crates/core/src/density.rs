//! Probability densities on grids, cumulative tables, and inverse-CDF
//! sampling.
//!
//! Grid values are treated as cell densities on node-centered cells
//! [q_i - h/2, q_i + h/2); the half cell to the left of the first node wraps
//! to the right end of the box. With this convention the cumulative at the
//! node boundaries reproduces the trapezoid rule, which kills the O(h)
//! midpoint bias that left-edge cells would put into KS statistics.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::trajectory::Ensemble;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Nonnegative density values over a grid.
#[derive(Debug, Clone)]
pub struct DensityGrid {
    grid: Grid,
    values: Vec<f64>,
    normalized: bool,
}

impl DensityGrid {
    pub(crate) fn new_unnormalized(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        DensityGrid {
            grid,
            values,
            normalized: false,
        }
    }

    /// Wrap external values, validating shape and nonnegativity.
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidGrid(format!(
                "density values must be finite and nonnegative, found {v}"
            )));
        }
        Ok(DensityGrid {
            grid,
            values,
            normalized: false,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Riemann sum Σ values · h^dim.
    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Rescale to unit mass. Fails on densities that are identically ~0.
    pub fn normalize(&self) -> Result<DensityGrid> {
        let max = self.values.iter().cloned().fold(0.0, f64::max);
        if max < 1e-300 {
            return Err(Error::DegenerateDensity(max));
        }
        let total = self.total_mass();
        let scale = 1.0 / total;
        let values = self.values.iter().map(|v| v * scale).collect();
        Ok(DensityGrid {
            grid: self.grid,
            values,
            normalized: true,
        })
    }

    /// Value at flat index.
    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    fn require_normalized(&self) -> Result<()> {
        if !self.normalized {
            return Err(Error::UnnormalizedDensity(self.total_mass()));
        }
        Ok(())
    }

    /// Draw `count` points with a seeded generator. 1D uses inverse-CDF
    /// sampling with linear interpolation inside cells; 2D samples the
    /// axis-0 marginal and then the conditional row.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Ensemble> {
        self.require_normalized()?;
        if count == 0 {
            return Err(Error::EmptyEnsemble);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = match self.grid.dim() {
            1 => {
                let cdf = CdfTable::from_density(self)?;
                (0..count)
                    .map(|_| [cdf.inverse(rng.gen::<f64>()), 0.0])
                    .collect()
            }
            _ => {
                let n = self.grid.n();
                let h = self.grid.spacing();
                // Marginal density along axis 0.
                let marginal: Vec<f64> = (0..n)
                    .map(|i| self.values[i * n..(i + 1) * n].iter().sum::<f64>() * h)
                    .collect();
                let marginal_cdf = CdfTable::from_values(self.grid, &marginal)?;
                let rows: Vec<Option<CdfTable>> = (0..n)
                    .map(|i| CdfTable::from_values(self.grid, &self.values[i * n..(i + 1) * n]).ok())
                    .collect();
                let mut points = Vec::with_capacity(count);
                for _ in 0..count {
                    let x = marginal_cdf.inverse(rng.gen::<f64>());
                    let i = nearest_cell(&self.grid, x);
                    let u1 = rng.gen::<f64>();
                    let y = match &rows[i] {
                        Some(row) => row.inverse(u1),
                        // Zero-mass row can only be hit through rounding at
                        // a cell boundary; fall back to the cell center.
                        None => self.grid.coord(i),
                    };
                    points.push([x, y]);
                }
                points
            }
        };
        Ok(Ensemble::new(points, seed))
    }
}

/// Index of the node-centered cell containing coordinate `x`.
pub(crate) fn nearest_cell(grid: &Grid, x: f64) -> usize {
    let n = grid.n();
    let h = grid.spacing();
    let u = (x + 0.5 * grid.length()) / h + 0.5;
    (u.floor() as i64).rem_euclid(n as i64) as usize
}

/// Piecewise-linear cumulative distribution over a 1D slice of grid values.
///
/// The table is built on node-centered cells, so it has n+1 intervals: a half
/// cell at each box edge (both carrying the density of node 0, which owns the
/// wrap-around cell) and n-1 full cells between.
#[derive(Debug, Clone)]
pub struct CdfTable {
    /// Interval breakpoints, length n+2, from -L/2 to L/2.
    breaks: Vec<f64>,
    /// Density inside each interval, length n+1.
    density: Vec<f64>,
    /// Cumulative mass at each breakpoint, length n+2, cumulative[0] = 0.
    cumulative: Vec<f64>,
    total: f64,
}

impl CdfTable {
    /// Build from a normalized 1D density grid.
    pub fn from_density(p: &DensityGrid) -> Result<Self> {
        if p.grid().dim() != 1 {
            return Err(Error::DimensionUnsupported {
                required: 1,
                actual: p.grid().dim(),
            });
        }
        Self::from_values(*p.grid(), p.values())
    }

    /// Build from raw per-node values (used for marginals and rows; `grid`
    /// supplies spacing and extent of the axis).
    pub(crate) fn from_values(grid: Grid, values: &[f64]) -> Result<Self> {
        let n = grid.n();
        debug_assert_eq!(values.len(), n);
        let h = grid.spacing();
        let half_l = 0.5 * grid.length();

        let mut breaks = Vec::with_capacity(n + 2);
        breaks.push(-half_l);
        for i in 0..n {
            breaks.push(-half_l + (i as f64 + 0.5) * h);
        }
        breaks.push(half_l);

        let mut density = Vec::with_capacity(n + 1);
        density.push(values[0]);
        density.extend_from_slice(&values[1..]);
        density.push(values[0]);

        let mut cumulative = Vec::with_capacity(n + 2);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for k in 0..=n {
            let width = breaks[k + 1] - breaks[k];
            acc += density[k] * width;
            cumulative.push(acc);
        }
        let total = acc;
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::DegenerateDensity(total));
        }
        Ok(CdfTable {
            breaks,
            density,
            cumulative,
            total,
        })
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// CDF value in [0, 1] at coordinate `q` (clamped to the box).
    pub fn eval(&self, q: f64) -> f64 {
        let first = self.breaks[0];
        let last = *self.breaks.last().unwrap();
        if q <= first {
            return 0.0;
        }
        if q >= last {
            return 1.0;
        }
        let k = match self
            .breaks
            .binary_search_by(|b| b.partial_cmp(&q).unwrap())
        {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let mass = self.cumulative[k] + self.density[k] * (q - self.breaks[k]);
        (mass / self.total).clamp(0.0, 1.0)
    }

    /// Inverse CDF: the coordinate whose cumulative probability is `u`,
    /// with linear interpolation inside cells. `u` in [0, 1).
    pub fn inverse(&self, u: f64) -> f64 {
        let target = u.clamp(0.0, 1.0) * self.total;
        // Last interval with cumulative <= target.
        let mut k = match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&target).unwrap())
        {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        k = k.min(self.density.len() - 1);
        // Skip zero-density intervals so the result stays inside support.
        while k + 1 < self.density.len() && self.density[k] == 0.0 && self.cumulative[k + 1] <= target
        {
            k += 1;
        }
        if self.density[k] == 0.0 {
            return self.breaks[k];
        }
        let q = self.breaks[k] + (target - self.cumulative[k]) / self.density[k];
        q.min(*self.breaks.last().unwrap())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavefunction::WaveFunction;

    fn grid1d(n: usize, l: f64) -> Grid {
        Grid::new(1, n, l).unwrap()
    }

    fn uniform_density(grid: Grid) -> DensityGrid {
        DensityGrid::from_values(grid, vec![1.0; grid.len()])
            .unwrap()
            .normalize()
            .unwrap()
    }

    #[test]
    fn normalize_sets_unit_mass() {
        let grid = grid1d(128, 10.0);
        let p = uniform_density(grid);
        assert!(p.is_normalized());
        assert!((p.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_rejects_degenerate() {
        let grid = grid1d(64, 1.0);
        let p = DensityGrid::from_values(grid, vec![0.0; grid.len()]).unwrap();
        assert!(matches!(p.normalize(), Err(Error::DegenerateDensity(_))));
    }

    #[test]
    fn sample_requires_normalized() {
        let grid = grid1d(64, 1.0);
        let p = DensityGrid::from_values(grid, vec![1.0; grid.len()]).unwrap();
        assert!(matches!(
            p.sample(10, 1),
            Err(Error::UnnormalizedDensity(_))
        ));
    }

    #[test]
    fn cdf_endpoints_and_symmetry() {
        let grid = grid1d(512, 20.0);
        let psi = WaveFunction::gaussian(grid, [0.0, 0.0], [1.0, 1.0], [0.0, 0.0]).unwrap();
        let p = psi.density_of().normalize().unwrap();
        let cdf = CdfTable::from_density(&p).unwrap();
        assert!(cdf.eval(-10.0) <= 1e-9);
        assert!((cdf.eval(10.0) - 1.0).abs() <= 1e-9);
        assert!((cdf.eval(0.0) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn cdf_is_monotone() {
        let grid = grid1d(128, 10.0);
        let psi = WaveFunction::gaussian(grid, [1.0, 0.0], [0.7, 1.0], [0.0, 0.0]).unwrap();
        let p = psi.density_of().normalize().unwrap();
        let cdf = CdfTable::from_density(&p).unwrap();
        let mut prev = -1.0;
        for i in 0..=1000 {
            let q = -5.0 + 10.0 * i as f64 / 1000.0;
            let f = cdf.eval(q);
            assert!(f >= prev);
            prev = f;
        }
    }

    #[test]
    fn inverse_round_trips_through_eval() {
        let grid = grid1d(128, 10.0);
        let psi = WaveFunction::gaussian(grid, [-0.5, 0.0], [0.9, 1.0], [0.0, 0.0]).unwrap();
        let p = psi.density_of().normalize().unwrap();
        let cdf = CdfTable::from_density(&p).unwrap();
        for i in 1..100 {
            let u = i as f64 / 100.0;
            let q = cdf.inverse(u);
            assert!((cdf.eval(q) - u).abs() < 1e-10, "u = {u}");
        }
    }

    #[test]
    fn degenerate_mass_stays_in_cell() {
        let grid = grid1d(64, 16.0);
        let mut values = vec![0.0; grid.len()];
        values[20] = 1.0;
        let p = DensityGrid::from_values(grid, values)
            .unwrap()
            .normalize()
            .unwrap();
        let e = p.sample(500, 7).unwrap();
        let center = grid.coord(20);
        let h = grid.spacing();
        for q in e.points() {
            assert!(q[0] >= center - h / 2.0 && q[0] <= center + h / 2.0);
        }
    }

    #[test]
    fn uniform_sample_mean_near_zero() {
        // CLT: se = (10/sqrt(12))/sqrt(1e5) ~ 0.0091, so 0.1 is ~11 sigma.
        let grid = grid1d(256, 10.0);
        let p = uniform_density(grid);
        let e = p.sample(100_000, 42).unwrap();
        let mean: f64 = e.points().iter().map(|q| q[0]).sum::<f64>() / e.len() as f64;
        assert!(mean.abs() < 0.1, "mean = {mean}");
    }

    #[test]
    fn fixed_seed_reproduces_samples() {
        let grid = grid1d(128, 10.0);
        let psi = WaveFunction::gaussian(grid, [0.0, 0.0], [1.0, 1.0], [0.0, 0.0]).unwrap();
        let p = psi.density_of().normalize().unwrap();
        let a = p.sample(1000, 99).unwrap();
        let b = p.sample(1000, 99).unwrap();
        assert_eq!(a.points(), b.points());
    }

    #[test]
    fn samples_lie_in_domain_2d() {
        let grid = Grid::new(2, 64, 12.0).unwrap();
        let psi = WaveFunction::gaussian(grid, [1.0, -0.5], [0.8, 1.2], [0.0, 0.0]).unwrap();
        let p = psi.density_of().normalize().unwrap();
        let e = p.sample(2000, 5).unwrap();
        for q in e.points() {
            assert!(q[0] >= -6.0 && q[0] < 6.0);
            assert!(q[1] >= -6.0 && q[1] < 6.0);
        }
    }

    #[test]
    fn marginal_of_2d_samples_matches_axis_density() {
        let grid = Grid::new(2, 64, 12.0).unwrap();
        let psi = WaveFunction::gaussian(grid, [0.5, -1.0], [0.9, 0.6], [0.0, 0.0]).unwrap();
        let p = psi.density_of().normalize().unwrap();
        let e = p.sample(50_000, 11).unwrap();
        // Compare empirical means with the density's means per axis.
        for axis in 0..2 {
            let mut num = 0.0;
            let mut den = 0.0;
            for idx in 0..grid.len() {
                let q = grid.point(idx);
                num += q[axis] * p.value(idx);
                den += p.value(idx);
            }
            let target = num / den;
            let emp: f64 = e.points().iter().map(|q| q[axis]).sum::<f64>() / e.len() as f64;
            assert!((emp - target).abs() < 0.02, "axis {axis}: {emp} vs {target}");
        }
    }
}
