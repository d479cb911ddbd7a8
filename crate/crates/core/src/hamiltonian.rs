//! Discretized Hamiltonian H = -(hbar²/2m)Δ + V with a second-order
//! central-difference Laplacian on the periodic grid.

use crate::error::Result;
use crate::grid::Grid;
use crate::potential::PotentialSpec;

/// Real symmetric operator handle; applies in O(n^dim).
#[derive(Debug, Clone)]
pub struct DiscreteHamiltonian {
    grid: Grid,
    potential: Vec<f64>,
    hbar: f64,
    mass: [f64; 2],
}

impl DiscreteHamiltonian {
    pub fn new(spec: &PotentialSpec, grid: Grid, hbar: f64, mass: [f64; 2]) -> Result<Self> {
        let potential = spec.evaluate_on(&grid, mass)?;
        Ok(DiscreteHamiltonian {
            grid,
            potential,
            hbar,
            mass,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn mass(&self) -> [f64; 2] {
        self.mass
    }

    /// Hop coefficient hbar²/(2 m_k h²) along axis k.
    fn hop(&self, k: usize) -> f64 {
        let h = self.grid.spacing();
        self.hbar * self.hbar / (2.0 * self.mass[k] * h * h)
    }

    /// y = H x.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.grid.n();
        match self.grid.dim() {
            1 => {
                let t = self.hop(0);
                for i in 0..n {
                    let left = x[(i + n - 1) % n];
                    let right = x[(i + 1) % n];
                    y[i] = t * (2.0 * x[i] - left - right) + self.potential[i] * x[i];
                }
            }
            _ => {
                let t0 = self.hop(0);
                let t1 = self.hop(1);
                for i in 0..n {
                    let up = (i + n - 1) % n;
                    let down = (i + 1) % n;
                    for j in 0..n {
                        let lj = (j + n - 1) % n;
                        let rj = (j + 1) % n;
                        let c = i * n + j;
                        y[c] = t0 * (2.0 * x[c] - x[up * n + j] - x[down * n + j])
                            + t1 * (2.0 * x[c] - x[i * n + lj] - x[i * n + rj])
                            + self.potential[c] * x[c];
                    }
                }
            }
        }
    }

    /// Riemann inner product ⟨a, b⟩ = Σ a b h^dim.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * self.grid.cell_volume()
    }

    /// Factorized solver for (H - shift) x = b in 1D, where the matrix is
    /// cyclic tridiagonal. Uses Thomas elimination on a rank-one-corrected
    /// tridiagonal matrix plus the Sherman-Morrison update.
    pub fn shifted_solver(&self, shift: f64) -> CyclicSolver {
        assert_eq!(self.grid.dim(), 1, "shifted solver is 1D only");
        let n = self.grid.n();
        let t = self.hop(0);
        let off = -t; // sub- and super-diagonal entries
        let diag: Vec<f64> = (0..n)
            .map(|i| 2.0 * t + self.potential[i] - shift)
            .collect();

        // Corner entries couple index 0 and n-1 with value `off`.
        // A = B + u vᵀ with u = (gamma, 0, .., 0, off)ᵀ, v = (1, 0, .., 0, off/gamma)ᵀ,
        // where B is tridiagonal with b0 -= gamma and b_{n-1} -= off²/gamma.
        let gamma = -diag[0];
        let mut b = diag;
        b[0] -= gamma;
        b[n - 1] -= off * off / gamma;

        let mut solver = CyclicSolver {
            n,
            off,
            gamma,
            b,
            z: Vec::new(),
            denom: 0.0,
        };
        let mut u = vec![0.0; n];
        u[0] = gamma;
        u[n - 1] = off;
        let z = solver.thomas(&u);
        let v_dot_z = z[0] + off / gamma * z[n - 1];
        solver.denom = 1.0 + v_dot_z;
        solver.z = z;
        solver
    }
}

/// Prefactored cyclic tridiagonal solver for one fixed shift.
#[derive(Debug, Clone)]
pub struct CyclicSolver {
    n: usize,
    off: f64,
    gamma: f64,
    b: Vec<f64>,
    z: Vec<f64>,
    denom: f64,
}

impl CyclicSolver {
    fn thomas(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        c[0] = self.off / self.b[0];
        d[0] = rhs[0] / self.b[0];
        for i in 1..n {
            let m = self.b[i] - self.off * c[i - 1];
            c[i] = self.off / m;
            d[i] = (rhs[i] - self.off * d[i - 1]) / m;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        x
    }

    /// Solve (H - shift) x = rhs.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let y = self.thomas(rhs);
        let v_dot_y = y[0] + self.off / self.gamma * y[self.n - 1];
        let factor = v_dot_y / self.denom;
        y.iter()
            .zip(&self.z)
            .map(|(yi, zi)| yi - factor * zi)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid1d(n: usize, l: f64) -> Grid {
        Grid::new(1, n, l).unwrap()
    }

    #[test]
    fn constant_vector_in_kernel_of_free_hamiltonian() {
        let grid = grid1d(128, 10.0);
        let h = DiscreteHamiltonian::new(&PotentialSpec::Free, grid, 1.0, [1.0, 1.0]).unwrap();
        let x = vec![1.0; grid.len()];
        let mut y = vec![0.0; grid.len()];
        h.apply(&x, &mut y);
        for v in &y {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn constant_potential_acts_diagonally() {
        let grid = grid1d(64, 10.0);
        let spec = PotentialSpec::Tabulated {
            values: vec![7.0; grid.len()],
        };
        let h = DiscreteHamiltonian::new(&spec, grid, 1.0, [1.0, 1.0]).unwrap();
        let x = vec![1.0; grid.len()];
        let mut y = vec![0.0; grid.len()];
        h.apply(&x, &mut y);
        for v in &y {
            assert!((v - 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn operator_is_symmetric() {
        let grid = grid1d(128, 12.0);
        let h = DiscreteHamiltonian::new(
            &PotentialSpec::Quartic { a: 0.5, b: 0.1 },
            grid,
            1.0,
            [1.0, 1.0],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut ha = vec![0.0; grid.len()];
        let mut hb = vec![0.0; grid.len()];
        h.apply(&a, &mut ha);
        h.apply(&b, &mut hb);
        assert!((h.inner(&a, &hb) - h.inner(&ha, &b)).abs() < 1e-10);
    }

    #[test]
    fn symmetric_in_2d() {
        let grid = Grid::new(2, 64, 8.0).unwrap();
        let h = DiscreteHamiltonian::new(
            &PotentialSpec::Harmonic { omega: 1.0 },
            grid,
            1.0,
            [1.0, 2.0],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut ha = vec![0.0; grid.len()];
        let mut hb = vec![0.0; grid.len()];
        h.apply(&a, &mut ha);
        h.apply(&b, &mut hb);
        let lhs = h.inner(&a, &hb);
        let rhs = h.inner(&ha, &b);
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn cyclic_solver_inverts_shifted_operator() {
        let grid = grid1d(256, 20.0);
        let h = DiscreteHamiltonian::new(
            &PotentialSpec::Harmonic { omega: 1.0 },
            grid,
            1.0,
            [1.0, 1.0],
        )
        .unwrap();
        let shift = -1.0;
        let solver = h.shifted_solver(shift);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rhs: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = solver.solve(&rhs);
        let mut hx = vec![0.0; grid.len()];
        h.apply(&x, &mut hx);
        for i in 0..grid.len() {
            let residual = hx[i] - shift * x[i] - rhs[i];
            assert!(residual.abs() < 1e-9, "residual {residual} at {i}");
        }
    }
}
