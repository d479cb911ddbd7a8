//! Split-step (Strang) propagation of the Schrödinger equation.
//!
//! Each step is half-kick, spectral drift, half-kick, which is unitary up to
//! rounding and second-order accurate in dt. Steps are never fused across
//! the step loop so that running a+b steps is bit-identical to running a
//! steps and then b steps.

use crate::error::Result;
use crate::fft;
use crate::grid::Grid;
use crate::potential::PotentialSpec;
use crate::wavefunction::WaveFunction;
use num_complex::Complex64;

/// Precomputed per-point multipliers for one step size.
pub struct SplitStepPlan {
    grid: Grid,
    half_kick: Vec<Complex64>,
    drift: Vec<Complex64>,
    dt: f64,
}

impl SplitStepPlan {
    pub fn new(
        potential: &PotentialSpec,
        grid: Grid,
        hbar: f64,
        mass: [f64; 2],
        dt: f64,
    ) -> Result<Self> {
        let v = potential.evaluate_on(&grid, mass)?;
        let half_kick = v
            .iter()
            .map(|&vi| Complex64::from_polar(1.0, -vi * dt / (2.0 * hbar)))
            .collect();
        let n = grid.n();
        let h = grid.spacing();
        let mut drift = vec![Complex64::default(); grid.len()];
        match grid.dim() {
            1 => {
                for (i, d) in drift.iter_mut().enumerate() {
                    let k = fft::wavenumber(i, n, h);
                    let omega = hbar * k * k / (2.0 * mass[0]);
                    *d = Complex64::from_polar(1.0, -omega * dt);
                }
            }
            _ => {
                for i in 0..n {
                    let k0 = fft::wavenumber(i, n, h);
                    for j in 0..n {
                        let k1 = fft::wavenumber(j, n, h);
                        let omega =
                            hbar * (k0 * k0 / (2.0 * mass[0]) + k1 * k1 / (2.0 * mass[1]));
                        drift[i * n + j] = Complex64::from_polar(1.0, -omega * dt);
                    }
                }
            }
        }
        Ok(SplitStepPlan {
            grid,
            half_kick,
            drift,
            dt,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advance amplitudes by one step in place.
    pub fn step(&self, amps: &mut [Complex64]) {
        for (z, k) in amps.iter_mut().zip(&self.half_kick) {
            *z *= k;
        }
        self.drift_in_place(amps);
        for (z, k) in amps.iter_mut().zip(&self.half_kick) {
            *z *= k;
        }
    }

    fn drift_in_place(&self, amps: &mut [Complex64]) {
        let n = self.grid.n();
        match self.grid.dim() {
            1 => {
                fft::forward(amps);
                for (z, d) in amps.iter_mut().zip(&self.drift) {
                    *z *= d;
                }
                fft::inverse(amps);
            }
            _ => {
                for row in amps.chunks_exact_mut(n) {
                    fft::forward(row);
                }
                let mut col = vec![Complex64::default(); n];
                for j in 0..n {
                    for i in 0..n {
                        col[i] = amps[i * n + j];
                    }
                    fft::forward(&mut col);
                    for i in 0..n {
                        amps[i * n + j] = col[i];
                    }
                }
                for (z, d) in amps.iter_mut().zip(&self.drift) {
                    *z *= d;
                }
                for j in 0..n {
                    for i in 0..n {
                        col[i] = amps[i * n + j];
                    }
                    fft::inverse(&mut col);
                    for i in 0..n {
                        amps[i * n + j] = col[i];
                    }
                }
                for row in amps.chunks_exact_mut(n) {
                    fft::inverse(row);
                }
            }
        }
    }
}

/// Propagate `psi` through `steps` split steps of size `dt`.
pub fn propagate_split_step(
    psi: &WaveFunction,
    potential: &PotentialSpec,
    dt: f64,
    steps: usize,
) -> Result<WaveFunction> {
    let plan = SplitStepPlan::new(potential, *psi.grid(), psi.hbar(), psi.mass(), dt)?;
    let mut amps = psi.amplitudes().to_vec();
    for _ in 0..steps {
        plan.step(&mut amps);
    }
    Ok(psi.with_amplitudes(amps))
}

/// ⟨ψ, Hψ⟩ / ⟨ψ, ψ⟩ with the spectral kinetic term (the split-step
/// propagator's own Hamiltonian).
pub fn energy_expectation(psi: &WaveFunction, potential: &PotentialSpec) -> Result<f64> {
    let grid = *psi.grid();
    let v = potential.evaluate_on(&grid, psi.mass())?;
    let n = grid.n();
    let h = grid.spacing();
    let hbar = psi.hbar();
    let mass = psi.mass();

    let mut kinetic_amps = psi.amplitudes().to_vec();
    fft::map_spectrum(&mut kinetic_amps, grid.dim(), n, h, |k, z| {
        let t = hbar * hbar * (0..grid.dim())
            .map(|a| k[a] * k[a] / (2.0 * mass[a]))
            .sum::<f64>();
        *z *= t;
    });

    let mut num = 0.0;
    let mut den = 0.0;
    for (idx, z) in psi.amplitudes().iter().enumerate() {
        num += (z.conj() * kinetic_amps[idx]).re + v[idx] * z.norm_sqr();
        den += z.norm_sqr();
    }
    Ok(num / den)
}
