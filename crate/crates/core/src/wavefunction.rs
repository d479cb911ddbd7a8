//! Complex wavefunctions on periodic grids with spectral derivatives.

use crate::density::DensityGrid;
use crate::error::{Error, Result};
use crate::fft;
use crate::grid::Grid;
use num_complex::Complex64;

/// Wave function sampled on a [`Grid`], with per-axis masses and hbar.
#[derive(Debug, Clone)]
pub struct WaveFunction {
    grid: Grid,
    amplitudes: Vec<Complex64>,
    mass: [f64; 2],
    hbar: f64,
}

impl WaveFunction {
    /// Wrap raw amplitudes. Rejects non-finite values and the all-zero state.
    pub fn new(grid: Grid, amplitudes: Vec<Complex64>, mass: [f64; 2], hbar: f64) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "amplitude count {} does not match grid size {}",
                amplitudes.len(),
                grid.len()
            )));
        }
        for (i, z) in amplitudes.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFiniteAmplitude(i));
            }
        }
        if !(hbar > 0.0) || !(mass[0] > 0.0) || (grid.dim() == 2 && !(mass[1] > 0.0)) {
            return Err(Error::InvalidGrid(
                "hbar and masses must be positive".into(),
            ));
        }
        let wf = WaveFunction {
            grid,
            amplitudes,
            mass,
            hbar,
        };
        if wf.l2_norm_sq_unchecked() == 0.0 {
            return Err(Error::TrivialWaveFunction);
        }
        Ok(wf)
    }

    /// Unit-mass, unit-hbar constructor used throughout the tests.
    pub fn with_units(grid: Grid, amplitudes: Vec<Complex64>) -> Result<Self> {
        Self::new(grid, amplitudes, [1.0, 1.0], 1.0)
    }

    /// Build from a pointwise function of the configuration coordinates.
    pub fn from_fn<F>(grid: Grid, mass: [f64; 2], hbar: f64, f: F) -> Result<Self>
    where
        F: Fn([f64; 2]) -> Complex64,
    {
        let amplitudes = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self::new(grid, amplitudes, mass, hbar)
    }

    /// Plane wave e^{i k x} along axis 0 with k = 2π m / L (mode index `m`).
    pub fn plane_wave(grid: Grid, mode: i64) -> Result<Self> {
        let k = 2.0 * std::f64::consts::PI * mode as f64 / grid.length();
        Self::from_fn(grid, [1.0, 1.0], 1.0, |q| {
            Complex64::from_polar(1.0, k * q[0])
        })
    }

    /// Gaussian packet |psi| ~ exp(-(x-c)²/(4σ²)) with linear phase slope
    /// k (momentum hbar·k), product form in 2D.
    pub fn gaussian(
        grid: Grid,
        center: [f64; 2],
        sigma: [f64; 2],
        phase_slope: [f64; 2],
    ) -> Result<Self> {
        Self::from_fn(grid, [1.0, 1.0], 1.0, |q| {
            let mut log_mag = 0.0;
            let mut phase = 0.0;
            for k in 0..grid.dim() {
                let dx = q[k] - center[k];
                log_mag -= dx * dx / (4.0 * sigma[k] * sigma[k]);
                phase += phase_slope[k] * q[k];
            }
            Complex64::from_polar(log_mag.exp(), phase)
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn mass(&self) -> [f64; 2] {
        self.mass
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Same grid/mass/hbar, new amplitudes (already validated callers only).
    pub(crate) fn with_amplitudes(&self, amplitudes: Vec<Complex64>) -> Self {
        WaveFunction {
            grid: self.grid,
            amplitudes,
            mass: self.mass,
            hbar: self.hbar,
        }
    }

    fn l2_norm_sq_unchecked(&self) -> f64 {
        let sum: f64 = self.amplitudes.iter().map(|z| z.norm_sqr()).sum();
        sum * self.grid.cell_volume()
    }

    /// Riemann-sum squared L2 norm: Σ|ψ|² h^dim.
    pub fn l2_norm_sq(&self) -> f64 {
        self.l2_norm_sq_unchecked()
    }

    /// Rescale to unit L2 norm. The all-zero state is rejected at
    /// construction, so this cannot divide by zero.
    pub fn normalize(&self) -> WaveFunction {
        let norm = self.l2_norm_sq().sqrt();
        let scale = 1.0 / norm;
        let amplitudes = self.amplitudes.iter().map(|z| z * scale).collect();
        self.with_amplitudes(amplitudes)
    }

    /// True when every amplitude has a bit-zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.amplitudes.iter().all(|z| z.im == 0.0)
    }

    /// Partial derivative of the given order along `axis`, computed by
    /// multiplying the spectrum with (ik)^order.
    ///
    /// The derivative of a real-valued function is real-valued; for inputs
    /// with exactly zero imaginary part the transform's residual imaginary
    /// rounding noise is cleared so that downstream currents vanish exactly
    /// on real states.
    pub fn spectral_derivative(&self, axis: usize, order: u32) -> Result<WaveFunction> {
        if !(1..=4).contains(&order) {
            return Err(Error::DerivativeOrder(order));
        }
        if axis >= self.grid.dim() {
            return Err(Error::AxisOutOfRange {
                axis,
                dim: self.grid.dim(),
            });
        }
        let was_real = self.is_real();
        let n = self.grid.n();
        let h = self.grid.spacing();
        let mut data = self.amplitudes.clone();
        fft::map_spectrum(&mut data, self.grid.dim(), n, h, |k, z| {
            let ik = Complex64::new(0.0, k[axis]);
            *z *= ik.powu(order);
        });
        if was_real {
            for z in data.iter_mut() {
                z.im = 0.0;
            }
        }
        Ok(self.with_amplitudes(data))
    }

    /// Pointwise |ψ|² as an unnormalized density.
    pub fn density_of(&self) -> DensityGrid {
        let values = self.amplitudes.iter().map(|z| z.norm_sqr()).collect();
        DensityGrid::new_unnormalized(self.grid, values)
    }

    /// Multiply by a complex constant.
    pub fn scaled(&self, c: Complex64) -> WaveFunction {
        let amplitudes = self.amplitudes.iter().map(|z| z * c).collect();
        self.with_amplitudes(amplitudes)
    }

    /// Complex conjugate (time reversal).
    pub fn conjugate(&self) -> WaveFunction {
        let amplitudes = self.amplitudes.iter().map(|z| z.conj()).collect();
        self.with_amplitudes(amplitudes)
    }

    /// Circular shift by whole cells along each axis.
    pub fn shift_cells(&self, shift: [i64; 2]) -> WaveFunction {
        let n = self.grid.n() as i64;
        let idx = |i: i64| -> usize { i.rem_euclid(n) as usize };
        let amplitudes = match self.grid.dim() {
            1 => (0..n)
                .map(|i| self.amplitudes[idx(i - shift[0])])
                .collect(),
            _ => {
                let mut out = Vec::with_capacity(self.grid.len());
                for i in 0..n {
                    for j in 0..n {
                        out.push(
                            self.amplitudes[idx(i - shift[0]) * n as usize + idx(j - shift[1])],
                        );
                    }
                }
                out
            }
        };
        self.with_amplitudes(amplitudes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn grid1d(n: usize, l: f64) -> Grid {
        Grid::new(1, n, l).unwrap()
    }

    fn constant(grid: Grid, value: Complex64) -> WaveFunction {
        WaveFunction::with_units(grid, vec![value; grid.len()]).unwrap()
    }

    #[test]
    fn norm_of_constant_is_extent() {
        let psi = constant(grid1d(128, 10.0), Complex64::new(1.0, 0.0));
        assert!((psi.l2_norm_sq() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn norm_is_homogeneous_of_degree_two() {
        let grid = grid1d(128, 8.0);
        let psi = WaveFunction::gaussian(grid, [0.3, 0.0], [0.8, 1.0], [1.5, 0.0]).unwrap();
        let c = Complex64::new(-2.0, 0.7);
        let scaled = psi.with_amplitudes(psi.amplitudes().iter().map(|z| z * c).collect());
        let expected = c.norm_sqr() * psi.l2_norm_sq();
        assert!((scaled.l2_norm_sq() - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn rejects_all_zero_and_non_finite() {
        let grid = grid1d(64, 1.0);
        let zeros = vec![Complex64::default(); grid.len()];
        assert!(matches!(
            WaveFunction::with_units(grid, zeros),
            Err(Error::TrivialWaveFunction)
        ));
        let mut bad = vec![Complex64::new(1.0, 0.0); grid.len()];
        bad[3] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(
            WaveFunction::with_units(grid, bad),
            Err(Error::NonFiniteAmplitude(3))
        ));
    }

    #[test]
    fn normalize_gives_unit_norm_and_is_idempotent() {
        let grid = grid1d(256, 20.0);
        let psi = WaveFunction::gaussian(grid, [0.0, 0.0], [1.0, 1.0], [0.0, 0.0]).unwrap();
        let unit = psi.normalize();
        assert!((unit.l2_norm_sq() - 1.0).abs() < 1e-12);
        let again = unit.normalize();
        for (a, b) in again.amplitudes().iter().zip(unit.amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn normalize_constant_two_on_unit_box() {
        let grid = grid1d(64, 1.0);
        let psi = constant(grid, Complex64::new(2.0, 0.0));
        let unit = psi.normalize();
        for z in unit.amplitudes() {
            assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn normalize_removes_scale_and_phase() {
        let grid = grid1d(256, 20.0);
        let base = WaveFunction::gaussian(grid, [0.0, 0.0], [1.0, 1.0], [0.0, 0.0])
            .unwrap()
            .normalize();
        let c = Complex64::new(0.0, 3.0);
        let scaled = base
            .with_amplitudes(base.amplitudes().iter().map(|z| z * c).collect())
            .normalize();
        let d_base = base.density_of();
        let d_scaled = scaled.density_of();
        for (a, b) in d_base.values().iter().zip(d_scaled.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_of_plane_wave_is_ik() {
        let grid = grid1d(128, 10.0);
        let psi = WaveFunction::plane_wave(grid, 4).unwrap();
        let k = 2.0 * std::f64::consts::PI * 4.0 / 10.0;
        let d = psi.spectral_derivative(0, 1).unwrap();
        for (dz, z) in d.amplitudes().iter().zip(psi.amplitudes()) {
            let expected = Complex64::new(0.0, k) * z;
            assert!((dz - expected).norm() < 1e-10);
        }
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let grid = grid1d(64, 5.0);
        let psi = constant(grid, Complex64::new(2.5, 0.0));
        for order in 1..=4 {
            let d = psi.spectral_derivative(0, order).unwrap();
            for z in d.amplitudes() {
                assert!(z.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn second_derivative_of_sine() {
        let grid = grid1d(128, 10.0);
        let k = 2.0 * std::f64::consts::PI / 10.0;
        let psi = WaveFunction::from_fn(grid, [1.0, 1.0], 1.0, |q| {
            Complex64::new((k * q[0]).sin(), 0.0)
        })
        .unwrap();
        let d2 = psi.spectral_derivative(0, 2).unwrap();
        for (dz, z) in d2.amplitudes().iter().zip(psi.amplitudes()) {
            assert!((dz.re + k * k * z.re).abs() < 1e-10);
            assert_eq!(dz.im, 0.0);
        }
    }

    #[test]
    fn derivative_rejects_bad_order_and_axis() {
        let grid = grid1d(64, 5.0);
        let psi = constant(grid, Complex64::new(1.0, 0.0));
        assert!(matches!(
            psi.spectral_derivative(0, 0),
            Err(Error::DerivativeOrder(0))
        ));
        assert!(matches!(
            psi.spectral_derivative(0, 5),
            Err(Error::DerivativeOrder(5))
        ));
        assert!(matches!(
            psi.spectral_derivative(1, 1),
            Err(Error::AxisOutOfRange { axis: 1, dim: 1 })
        ));
    }

    #[test]
    fn density_ignores_global_phase() {
        let grid = grid1d(128, 10.0);
        let real = WaveFunction::gaussian(grid, [0.0, 0.0], [1.0, 1.0], [0.0, 0.0]).unwrap();
        let phased = real.with_amplitudes(
            real.amplitudes()
                .iter()
                .map(|z| z * Complex64::from_polar(1.0, 0.77))
                .collect(),
        );
        let d0 = real.density_of();
        let d1 = phased.density_of();
        for (a, b) in d0.values().iter().zip(d1.values()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn density_of_single_cell() {
        let grid = grid1d(64, 1.0);
        let mut amps = vec![Complex64::default(); grid.len()];
        amps[17] = Complex64::new(2.0, 0.0);
        let psi = WaveFunction::with_units(grid, amps).unwrap();
        let d = psi.density_of();
        for (i, v) in d.values().iter().enumerate() {
            if i == 17 {
                assert_eq!(*v, 4.0);
            } else {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn normalized_density_integrates_to_one() {
        let grid = grid1d(256, 20.0);
        let psi = WaveFunction::gaussian(grid, [1.0, 0.0], [1.3, 1.0], [0.4, 0.0])
            .unwrap()
            .normalize();
        let d = psi.density_of();
        let total: f64 = d.values().iter().sum::<f64>() * grid.cell_volume();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn derivative_of_2d_gaussian_along_each_axis() {
        // Tolerance is set by the wrap-around seam amplitude, not the
        // transform itself.
        let grid = Grid::new(2, 64, 16.0).unwrap();
        let sigma = 1.0;
        let psi = WaveFunction::gaussian(grid, [0.0, 0.0], [sigma, sigma], [0.0, 0.0]).unwrap();
        for axis in 0..2 {
            let d = psi.spectral_derivative(axis, 1).unwrap();
            for idx in 0..grid.len() {
                let q = grid.point(idx);
                let expected = -q[axis] / (2.0 * sigma * sigma) * psi.amplitudes()[idx].re;
                assert!(
                    (d.amplitudes()[idx].re - expected).abs() < 1e-5,
                    "axis {axis} idx {idx}: {} vs {expected}",
                    d.amplitudes()[idx].re
                );
            }
        }
    }
}
