//! The guidance-equation velocity field v_k = (hbar/m_k) Im(ψ* ∂_k ψ)/|ψ|²
//! with node regularization, plus periodic cubic interpolation.

use crate::grid::Grid;
use crate::wavefunction::WaveFunction;

/// Default relative node regularization ε (the denominator gets ε·max|ψ|²).
pub const DEFAULT_NODE_EPSILON: f64 = 1e-12;

/// Velocity components on the grid.
#[derive(Debug, Clone)]
pub struct VelocityField {
    grid: Grid,
    components: [Vec<f64>; 2],
    epsilon: f64,
}

impl VelocityField {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        &self.components[axis]
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Value at flat grid index.
    pub fn at_index(&self, idx: usize) -> [f64; 2] {
        match self.grid.dim() {
            1 => [self.components[0][idx], 0.0],
            _ => [self.components[0][idx], self.components[1][idx]],
        }
    }

    /// Cubic interpolation at an off-grid configuration point.
    pub fn at_point(&self, q: [f64; 2]) -> [f64; 2] {
        let mut out = [0.0; 2];
        match self.grid.dim() {
            1 => {
                let st = Stencil1D::new(&self.grid, q[0]);
                out[0] = st.apply(&self.components[0]);
            }
            _ => {
                let st = Stencil2D::new(&self.grid, q);
                out[0] = st.apply(&self.components[0]);
                out[1] = st.apply(&self.components[1]);
            }
        }
        out
    }
}

/// Raw probability current J_k = (hbar/m_k) Im(ψ* ∂_k ψ), no regularization.
/// This is the ε-free numerator of the velocity field; it is smooth through
/// nodes and is what the continuity residual needs.
pub fn probability_current(psi: &WaveFunction) -> [Vec<f64>; 2] {
    let grid = psi.grid();
    let dim = grid.dim();
    let mut components = [Vec::new(), Vec::new()];
    for (axis, comp) in components.iter_mut().enumerate().take(dim) {
        let d = psi
            .spectral_derivative(axis, 1)
            .expect("axis < dim and order 1 are always valid");
        let scale = psi.hbar() / psi.mass()[axis];
        *comp = psi
            .amplitudes()
            .iter()
            .zip(d.amplitudes())
            .map(|(z, dz)| scale * (z.conj() * dz).im)
            .collect();
    }
    components
}

/// Velocity field with node regularization: J_k / (|ψ|² + ε max|ψ|²).
pub fn velocity_field(psi: &WaveFunction, epsilon: f64) -> VelocityField {
    let current = probability_current(psi);
    let density: Vec<f64> = psi.amplitudes().iter().map(|z| z.norm_sqr()).collect();
    let max = density.iter().cloned().fold(0.0, f64::max);
    velocity_from_current(*psi.grid(), current, &density, max, epsilon)
}

pub(crate) fn velocity_from_current(
    grid: Grid,
    current: [Vec<f64>; 2],
    density: &[f64],
    max_density: f64,
    epsilon: f64,
) -> VelocityField {
    let floor = epsilon * max_density;
    let mut components = current;
    for comp in components.iter_mut().take(grid.dim()) {
        for (v, &rho) in comp.iter_mut().zip(density) {
            *v /= rho + floor;
        }
    }
    VelocityField {
        grid,
        components,
        epsilon,
    }
}

/// Four-point Catmull-Rom stencil along one periodic axis.
#[derive(Debug, Clone, Copy)]
pub struct Stencil1D {
    pub idx: [usize; 4],
    pub w: [f64; 4],
}

impl Stencil1D {
    pub fn new(grid: &Grid, x: f64) -> Self {
        let n = grid.n();
        let h = grid.spacing();
        let u = (x + 0.5 * grid.length()) / h;
        let base = u.floor();
        let f = u - base;
        let i1 = (base as i64).rem_euclid(n as i64) as usize;
        let idx = [
            (i1 + n - 1) % n,
            i1,
            (i1 + 1) % n,
            (i1 + 2) % n,
        ];
        // Catmull-Rom weights; C¹ across cells, exact on quadratics,
        // (0,1,0,0) at f = 0.
        let w0 = ((-0.5 * f + 1.0) * f - 0.5) * f;
        let w1 = (1.5 * f - 2.5) * f * f + 1.0;
        let w2 = ((-1.5 * f + 2.0) * f + 0.5) * f;
        let w3 = (0.5 * f - 0.5) * f * f;
        Stencil1D {
            idx,
            w: [w0, w1, w2, w3],
        }
    }

    #[inline]
    pub fn apply(&self, values: &[f64]) -> f64 {
        self.w[0] * values[self.idx[0]]
            + self.w[1] * values[self.idx[1]]
            + self.w[2] * values[self.idx[2]]
            + self.w[3] * values[self.idx[3]]
    }
}

/// Separable bicubic stencil for row-major 2D grids.
#[derive(Debug, Clone, Copy)]
pub struct Stencil2D {
    rows: Stencil1D,
    cols: Stencil1D,
    n: usize,
}

impl Stencil2D {
    pub fn new(grid: &Grid, q: [f64; 2]) -> Self {
        Stencil2D {
            rows: Stencil1D::new(grid, q[0]),
            cols: Stencil1D::new(grid, q[1]),
            n: grid.n(),
        }
    }

    #[inline]
    pub fn apply(&self, values: &[f64]) -> f64 {
        let mut acc = 0.0;
        for a in 0..4 {
            let row = self.rows.idx[a] * self.n;
            let mut inner = 0.0;
            for b in 0..4 {
                inner += self.cols.w[b] * values[row + self.cols.idx[b]];
            }
            acc += self.rows.w[a] * inner;
        }
        acc
    }
}
