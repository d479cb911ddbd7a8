//! Low eigenpairs of the discretized Hamiltonian and exact evolution in the
//! resulting eigenbasis.
//!
//! The solver runs Lanczos on (H - σ)⁻¹ with σ below the spectrum, applying
//! the inverse through the prefactored cyclic tridiagonal solve. Shift-invert
//! keeps the iteration count flat in the grid size, which matters because the
//! split-step cross-checks need grids up to n = 8192.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::hamiltonian::DiscreteHamiltonian;
use crate::wavefunction::WaveFunction;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Lowest-k eigenpairs of a 1D discrete Hamiltonian, orthonormal under the
/// Riemann inner product ⟨a,b⟩ = Σ a b h.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    grid: Grid,
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<Vec<f64>>,
    hbar: f64,
    mass: [f64; 2],
}

impl EigenSystem {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn count(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalue(&self, j: usize) -> f64 {
        self.eigenvalues[j]
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvector(&self, j: usize) -> &[f64] {
        &self.eigenvectors[j]
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn mass(&self) -> [f64; 2] {
        self.mass
    }

    /// Eigenvector as a (real) wave function.
    pub fn state(&self, j: usize) -> WaveFunction {
        let amps = self.eigenvectors[j]
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect();
        WaveFunction::new(self.grid, amps, self.mass, self.hbar)
            .expect("eigenvector is a valid state")
    }
}

/// Lowest `k` eigenpairs of `h` (1D). Eigenvectors are real with the
/// positive-mean sign convention (largest-magnitude entry positive when the
/// mean is numerically zero, as for odd modes).
pub fn solve_eigenbasis(h: &DiscreteHamiltonian, k: usize) -> Result<EigenSystem> {
    let grid = *h.grid();
    if grid.dim() != 1 {
        return Err(Error::DimensionUnsupported {
            required: 1,
            actual: grid.dim(),
        });
    }
    let n = grid.n();
    if k == 0 || k > n / 4 {
        return Err(Error::InvalidGrid(format!(
            "requested {k} eigenpairs; need 1 <= k <= n/4 = {}",
            n / 4
        )));
    }

    let min_v = h.potential().iter().cloned().fold(f64::INFINITY, f64::min);
    let shift = min_v - 1.0;
    let solver = h.shifted_solver(shift);

    // Deterministic generic start vector.
    let mut rng = ChaCha8Rng::seed_from_u64(0x51ED);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    normalize_l2(&mut v);

    let max_iter = n.min(8 * k + 120);
    let mut basis: Vec<Vec<f64>> = vec![v.clone()];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut prev: Vec<f64> = vec![0.0; n];
    let mut prev_beta = 0.0;

    let mut converged: Option<(Vec<f64>, DMatrix<f64>)> = None;
    for m in 1..=max_iter {
        let vj = basis.last().unwrap().clone();
        let mut w = solver.solve(&vj);
        let alpha: f64 = dot(&w, &vj);
        for i in 0..n {
            w[i] -= alpha * vj[i] + prev_beta * prev[i];
        }
        // Full reorthogonalization keeps the Ritz basis clean.
        for b in &basis {
            let c = dot(&w, b);
            for i in 0..n {
                w[i] -= c * b[i];
            }
        }
        alphas.push(alpha);
        let beta = dot(&w, &w).sqrt();

        let check = m >= 2 * k && (m % 5 == 0 || m == max_iter || beta < 1e-13);
        if check {
            let (theta, s) = ritz_pairs(&alphas, &betas);
            if theta.len() >= k {
                // Largest k Ritz values of the inverse operator are the
                // lowest eigenvalues of H; residual bound |beta * s_last|.
                let mut ok = true;
                for j in 0..k {
                    let col = theta.len() - 1 - j;
                    let bound = beta * s[(s.nrows() - 1, col)].abs();
                    if bound > 1e-11 * theta[col].abs() {
                        ok = false;
                        break;
                    }
                }
                if ok || beta < 1e-13 {
                    converged = Some((theta, s));
                    break;
                }
            }
            if beta < 1e-13 {
                break;
            }
        }

        if m < max_iter {
            betas.push(beta);
            prev = vj;
            prev_beta = beta;
            let mut next = w;
            let scale = 1.0 / beta;
            for x in next.iter_mut() {
                *x *= scale;
            }
            basis.push(next);
        }
    }

    let (theta, s) = match converged {
        Some(p) => p,
        None => {
            let (theta, s) = ritz_pairs(&alphas, &betas);
            if theta.len() < k {
                return Err(Error::EigenConvergence {
                    worst: f64::INFINITY,
                    iterations: max_iter,
                });
            }
            (theta, s)
        }
    };

    // Assemble the k lowest eigenpairs of H from the top Ritz pairs.
    let m = alphas.len();
    let mut pairs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(k);
    for j in 0..k {
        let col = theta.len() - 1 - j;
        let mut vec = vec![0.0; n];
        for (row, b) in basis.iter().take(m).enumerate() {
            let c = s[(row, col)];
            for i in 0..n {
                vec[i] += c * b[i];
            }
        }
        normalize_l2(&mut vec);
        // Rayleigh quotient on H refines the shift-inverted value.
        let mut hv = vec![0.0; n];
        h.apply(&vec, &mut hv);
        let e = dot(&vec, &hv);
        pairs.push((e, vec));
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    // Verify residuals against the discrete operator.
    let mut worst: f64 = 0.0;
    let mut hv = vec![0.0; n];
    for (e, vec) in &pairs {
        h.apply(vec, &mut hv);
        let r: f64 = hv
            .iter()
            .zip(vec)
            .map(|(hx, x)| (hx - e * x) * (hx - e * x))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(r);
    }
    if worst > 1e-7 {
        return Err(Error::EigenConvergence {
            worst,
            iterations: m,
        });
    }

    let h_cell = grid.spacing();
    let riemann_scale = 1.0 / h_cell.sqrt();
    let mut eigenvalues = Vec::with_capacity(k);
    let mut eigenvectors = Vec::with_capacity(k);
    for (e, mut vec) in pairs {
        fix_sign(&mut vec);
        for x in vec.iter_mut() {
            *x *= riemann_scale;
        }
        eigenvalues.push(e);
        eigenvectors.push(vec);
    }

    Ok(EigenSystem {
        grid,
        eigenvalues,
        eigenvectors,
        hbar: h.hbar(),
        mass: h.mass(),
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize_l2(v: &mut [f64]) {
    let norm = dot(v, v).sqrt();
    let scale = 1.0 / norm;
    for x in v.iter_mut() {
        *x *= scale;
    }
}

fn fix_sign(v: &mut [f64]) {
    let mean: f64 = v.iter().sum::<f64>() / v.len() as f64;
    let scale: f64 = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let flip = if mean.abs() > 1e-8 * scale {
        mean < 0.0
    } else {
        // Odd modes: pin the largest-magnitude entry positive.
        let idx = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        v[idx] < 0.0
    };
    if flip {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

fn ritz_pairs(alphas: &[f64], betas: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let m = alphas.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    // Sort ascending by eigenvalue.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let theta: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut s = DMatrix::zeros(m, m);
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..m {
            s[(row, new_col)] = eig.eigenvectors[(row, old_col)];
        }
    }
    (theta, s)
}

/// Normalized superposition over selected eigenstates.
#[derive(Debug, Clone)]
pub struct SuperpositionState {
    eigensystem: Arc<EigenSystem>,
    indices: Vec<usize>,
    moduli: Vec<f64>,
    phases: Vec<f64>,
}

impl SuperpositionState {
    pub fn new(
        eigensystem: Arc<EigenSystem>,
        indices: Vec<usize>,
        moduli: Vec<f64>,
        phases: Vec<f64>,
    ) -> Result<Self> {
        if indices.is_empty() || indices.len() != moduli.len() || indices.len() != phases.len() {
            return Err(Error::InvalidSuperposition(
                "indices, moduli, and phases must be equal-length and nonempty".into(),
            ));
        }
        for (pos, &j) in indices.iter().enumerate() {
            if j >= eigensystem.count() {
                return Err(Error::InvalidSuperposition(format!(
                    "index {j} exceeds eigensystem count {}",
                    eigensystem.count()
                )));
            }
            if indices[..pos].contains(&j) {
                return Err(Error::InvalidSuperposition(format!("duplicate index {j}")));
            }
        }
        if moduli.iter().any(|c| !(*c > 0.0)) {
            return Err(Error::InvalidSuperposition("moduli must be positive".into()));
        }
        let sum_sq: f64 = moduli.iter().map(|c| c * c).sum();
        if (sum_sq - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSuperposition(format!(
                "moduli squares sum to {sum_sq}, expected 1"
            )));
        }
        Ok(SuperpositionState {
            eigensystem,
            indices,
            moduli,
            phases,
        })
    }

    pub fn eigensystem(&self) -> &EigenSystem {
        &self.eigensystem
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn moduli(&self) -> &[f64] {
        &self.moduli
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// ψ_t = Σ c_j e^{iθ_j} e^{-i E_j t / hbar} φ_j, exact within the span.
    pub fn evolve(&self, t: f64) -> WaveFunction {
        let es = &self.eigensystem;
        let n = es.grid().len();
        let mut amps = vec![Complex64::default(); n];
        for ((&j, &c), &theta) in self.indices.iter().zip(&self.moduli).zip(&self.phases) {
            let phase = theta - es.eigenvalue(j) * t / es.hbar();
            let coeff = Complex64::from_polar(c, phase);
            let phi = es.eigenvector(j);
            for i in 0..n {
                amps[i] += coeff * phi[i];
            }
        }
        WaveFunction::new(*es.grid(), amps, es.mass(), es.hbar())
            .expect("superposition of eigenstates is a valid state")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialSpec;

    fn harmonic_system(n: usize, l: f64, k: usize) -> EigenSystem {
        let grid = Grid::new(1, n, l).unwrap();
        let h = DiscreteHamiltonian::new(
            &PotentialSpec::Harmonic { omega: 1.0 },
            grid,
            1.0,
            [1.0, 1.0],
        )
        .unwrap();
        solve_eigenbasis(&h, k).unwrap()
    }

    #[test]
    fn harmonic_ground_state_energy() {
        // Analytic oracle E_j = (j + 1/2) hbar omega. The second-order
        // stencil biases E_j by -(h²/24)<p⁴>, i.e. -3.1e-5 for E_0 and
        // -1.9e-4 for E_1 - E_0 at n = 512, L = 20.
        let es = harmonic_system(512, 20.0, 3);
        assert!((es.eigenvalue(0) - 0.5).abs() < 1e-4, "E0 = {}", es.eigenvalue(0));
        let gap = es.eigenvalue(1) - es.eigenvalue(0);
        assert!((gap - 1.0).abs() < 2.5e-4, "gap = {gap}");
    }

    #[test]
    fn harmonic_gap_at_finer_grid() {
        let es = harmonic_system(1024, 20.0, 2);
        let gap = es.eigenvalue(1) - es.eigenvalue(0);
        assert!((gap - 1.0).abs() < 1e-4, "gap = {gap}");
    }

    #[test]
    fn free_particle_has_zero_mode() {
        let grid = Grid::new(1, 256, 10.0).unwrap();
        let h = DiscreteHamiltonian::new(&PotentialSpec::Free, grid, 1.0, [1.0, 1.0]).unwrap();
        let es = solve_eigenbasis(&h, 1).unwrap();
        assert!(es.eigenvalue(0).abs() < 1e-9, "E0 = {}", es.eigenvalue(0));
    }

    #[test]
    fn eigenvectors_are_riemann_orthonormal() {
        let es = harmonic_system(256, 18.0, 6);
        let h = es.grid().spacing();
        for i in 0..6 {
            for j in 0..6 {
                let ip: f64 = es
                    .eigenvector(i)
                    .iter()
                    .zip(es.eigenvector(j))
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    * h;
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expected).abs() < 1e-8, "<{i},{j}> = {ip}");
            }
        }
    }

    #[test]
    fn residuals_certified_against_discrete_operator() {
        let grid = Grid::new(1, 512, 16.0).unwrap();
        let h = DiscreteHamiltonian::new(
            &PotentialSpec::Quartic { a: 0.5, b: 0.1 },
            grid,
            1.0,
            [1.0, 1.0],
        )
        .unwrap();
        let es = solve_eigenbasis(&h, 4).unwrap();
        let cell = grid.spacing();
        for j in 0..4 {
            let phi = es.eigenvector(j);
            let mut hphi = vec![0.0; grid.len()];
            h.apply(phi, &mut hphi);
            let res: f64 = hphi
                .iter()
                .zip(phi)
                .map(|(hx, x)| (hx - es.eigenvalue(j) * x).powi(2))
                .sum::<f64>()
                .sqrt()
                * cell.sqrt();
            assert!(res < 1e-6, "residual {res} for mode {j}");
        }
    }

    #[test]
    fn quartic_gap_ratio_avoids_small_rationals() {
        // Numerical stand-in for rational independence of the spectrum:
        // no p/q with p, q <= 20 within 1e-6 of the gap ratio.
        let grid = Grid::new(1, 512, 16.0).unwrap();
        let h = DiscreteHamiltonian::new(
            &PotentialSpec::Quartic { a: 0.5, b: 0.1 },
            grid,
            1.0,
            [1.0, 1.0],
        )
        .unwrap();
        let es = solve_eigenbasis(&h, 3).unwrap();
        let ratio = (es.eigenvalue(1) - es.eigenvalue(0)) / (es.eigenvalue(2) - es.eigenvalue(1));
        for p in 1..=20u32 {
            for q in 1..=20u32 {
                let r = p as f64 / q as f64;
                assert!(
                    (ratio - r).abs() > 1e-6,
                    "gap ratio {ratio} is within 1e-6 of {p}/{q}"
                );
            }
        }
    }

    #[test]
    fn rejects_k_beyond_quarter_grid() {
        let grid = Grid::new(1, 64, 10.0).unwrap();
        let h = DiscreteHamiltonian::new(&PotentialSpec::Free, grid, 1.0, [1.0, 1.0]).unwrap();
        assert!(solve_eigenbasis(&h, 17).is_err());
        assert!(solve_eigenbasis(&h, 16).is_ok());
    }

    #[test]
    fn superposition_validates_normalization() {
        let es = Arc::new(harmonic_system(256, 18.0, 3));
        assert!(SuperpositionState::new(
            es.clone(),
            vec![0, 1],
            vec![0.8, 0.7],
            vec![0.0, 0.0]
        )
        .is_err());
        assert!(SuperpositionState::new(
            es.clone(),
            vec![0, 0],
            vec![0.6, 0.8],
            vec![0.0, 0.0]
        )
        .is_err());
        assert!(SuperpositionState::new(es, vec![0, 1], vec![0.6, 0.8], vec![0.0, 0.0]).is_ok());
    }

    #[test]
    fn evolve_at_zero_reproduces_superposition() {
        let es = Arc::new(harmonic_system(256, 18.0, 3));
        let c = (0.5f64.sqrt(), 0.5f64.sqrt());
        let state = SuperpositionState::new(
            es.clone(),
            vec![0, 2],
            vec![c.0, c.1],
            vec![0.3, 1.2],
        )
        .unwrap();
        let psi = state.evolve(0.0);
        for i in 0..es.grid().len() {
            let expected = Complex64::from_polar(c.0, 0.3) * es.eigenvector(0)[i]
                + Complex64::from_polar(c.1, 1.2) * es.eigenvector(2)[i];
            assert!((psi.amplitudes()[i] - expected).norm() < 1e-13);
        }
    }

    #[test]
    fn single_eigenstate_density_is_stationary() {
        let es = Arc::new(harmonic_system(256, 18.0, 2));
        let state =
            SuperpositionState::new(es, vec![1], vec![1.0], vec![0.0]).unwrap();
        let d0 = state.evolve(0.0).density_of();
        let d1 = state.evolve(3.7).density_of();
        for (a, b) in d0.values().iter().zip(d1.values()) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
