//! The experiment layer: pushforward equivariance checks, continuity
//! residuals, constants of motion, and the quasi-periodic time average.

use crate::density::{nearest_cell, CdfTable, DensityGrid};
use crate::eigen::SuperpositionState;
use crate::error::{Error, Result};
use crate::fft;
use crate::functionals::DensityFunctional;
use crate::record::EvolutionRecord;
use crate::trajectory::{advance_trajectory, evolve_ensemble, FlowConfig, Trajectory};
use crate::velocity::DEFAULT_NODE_EPSILON;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Histogram bins per axis for the L1 comparisons.
pub const HISTOGRAM_BINS: usize = 64;

/// Cells below this fraction of the frame's max |ψ|² are excluded from
/// residual norms; the continuity identity is singular at nodes.
pub const RESIDUAL_DENSITY_CUT: f64 = 1e-6;

/// Pass/fail thresholds for an equivariance check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Max KS distance at any checkpoint (1D).
    pub ks: f64,
    /// Max histogram L1 at any checkpoint (2D, also reported in 1D).
    pub l1: f64,
    /// Max tolerated node-degenerate fraction.
    pub excluded: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            ks: 0.01,
            l1: 0.05,
            excluded: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Too many members were excluded for the statistics to mean anything.
    Invalid,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointMetrics {
    pub t: f64,
    /// KS distance (1D records only).
    pub ks: Option<f64>,
    /// Histogram L1 distance.
    pub l1: f64,
}

/// Result of one pushforward equivariance experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquivarianceReport {
    pub functional: String,
    pub record: String,
    pub n_samples: usize,
    pub seed: u64,
    pub thresholds: Thresholds,
    pub series: Vec<CheckpointMetrics>,
    /// Time-max of the continuity-equation residual norm.
    pub residual_norm: f64,
    /// Max |ln G| drift over probe trajectories (1D records).
    pub g_drift: Option<f64>,
    pub excluded_fraction: f64,
    pub verdict: Verdict,
}

impl EquivarianceReport {
    pub fn max_ks(&self) -> f64 {
        self.series
            .iter()
            .filter_map(|m| m.ks)
            .fold(0.0, f64::max)
    }

    pub fn max_l1(&self) -> f64 {
        self.series.iter().map(|m| m.l1).fold(0.0, f64::max)
    }
}

/// One-sample Kolmogorov-Smirnov distance between samples and a target CDF.
pub fn ks_distance(samples: &[f64], cdf: &CdfTable) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut sup: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf.eval(x);
        sup = sup.max((f - i as f64 / n).abs());
        sup = sup.max((f - (i + 1) as f64 / n).abs());
    }
    Ok(sup)
}

/// L1 distance Σ|p - r| h^dim between two normalized densities on one grid.
pub fn l1_distance(p: &DensityGrid, r: &DensityGrid) -> Result<f64> {
    p.grid().same_as(r.grid())?;
    if !p.is_normalized() || !r.is_normalized() {
        return Err(Error::UnnormalizedDensity(f64::NAN));
    }
    Ok(p
        .values()
        .iter()
        .zip(r.values())
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        * p.grid().cell_volume())
}

/// Histogram L1 between sampled points and a target density, with cells
/// aggregated into HISTOGRAM_BINS per axis. Samples are assigned to bins
/// through their node-centered cell so both sides use the same partition.
pub fn histogram_l1(points: &[[f64; 2]], target: &DensityGrid) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let grid = target.grid();
    let n = grid.n();
    if n % HISTOGRAM_BINS != 0 {
        return Err(Error::InvalidGrid(format!(
            "grid n = {n} is not divisible into {HISTOGRAM_BINS} bins"
        )));
    }
    let per = n / HISTOGRAM_BINS;
    let cell = grid.cell_volume();
    let dim = grid.dim();

    let bins = HISTOGRAM_BINS.pow(dim as u32);
    let mut target_mass = vec![0.0; bins];
    for idx in 0..grid.len() {
        let b = match dim {
            1 => idx / per,
            _ => (idx / n / per) * HISTOGRAM_BINS + (idx % n) / per,
        };
        target_mass[b] += target.value(idx) * cell;
    }

    let mut empirical = vec![0.0; bins];
    let w = 1.0 / points.len() as f64;
    for q in points {
        let b = match dim {
            1 => nearest_cell(grid, q[0]) / per,
            _ => {
                (nearest_cell(grid, q[0]) / per) * HISTOGRAM_BINS + nearest_cell(grid, q[1]) / per
            }
        };
        empirical[b] += w;
    }

    Ok(target_mass
        .iter()
        .zip(&empirical)
        .map(|(a, b)| (a - b).abs())
        .sum())
}

/// Sample p^{ψ_0}, push the ensemble through the Bohm flow, and compare
/// against p^{ψ_t} at every checkpoint.
pub fn check_equivariance(
    f: &DensityFunctional,
    record: &EvolutionRecord,
    n_samples: usize,
    seed: u64,
    checkpoints: &[f64],
    cfg: &FlowConfig,
    thresholds: Thresholds,
) -> Result<EquivarianceReport> {
    if checkpoints.is_empty() {
        return Err(Error::InvalidFlowConfig("no checkpoints given".into()));
    }
    let mut sorted = checkpoints.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    if sorted[0] <= 0.0 {
        return Err(Error::InvalidFlowConfig(
            "checkpoints must be positive times".into(),
        ));
    }
    record.bracket(*sorted.last().unwrap())?;

    let dim = record.grid().dim();
    let p0 = f.eval_density(record.frame(0).psi())?;
    let mut ensemble = p0.sample(n_samples, seed)?;

    let mut series = Vec::with_capacity(sorted.len());
    let mut t_prev = 0.0;
    for &t in &sorted {
        ensemble = evolve_ensemble(&ensemble, record, t_prev, t, cfg)?;
        t_prev = t;
        let frame = record.frame_at_time(t)?;
        let target = f.eval_density(record.frame(frame).psi())?;
        let retained = ensemble.retained_points();
        let l1 = histogram_l1(&retained, &target)?;
        let ks = if dim == 1 {
            let xs: Vec<f64> = retained.iter().map(|q| q[0]).collect();
            Some(ks_distance(&xs, &CdfTable::from_density(&target)?)?)
        } else {
            None
        };
        series.push(CheckpointMetrics { t, ks, l1 });
    }

    let excluded_fraction = ensemble.excluded_fraction();
    let residual_norm = continuity_residual(f, record)?;
    let g_drift = if dim == 1 {
        // Probe trajectories start from a fresh draw of the initial density.
        let probes = p0.sample(ensemble.points().len().min(16), seed)?;
        let mut worst: f64 = 0.0;
        for &q0 in probes.points() {
            let traj = advance_trajectory(q0, record, 0.0, t_prev, cfg)?;
            match constant_of_motion_g(f, record, &traj) {
                Ok(d) => worst = worst.max(d),
                Err(Error::DensityUnderflow(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        Some(worst)
    } else {
        None
    };

    let metrics_ok = series.iter().all(|m| match m.ks {
        Some(ks) => ks <= thresholds.ks,
        None => m.l1 <= thresholds.l1,
    });
    let verdict = if excluded_fraction >= 0.01 {
        Verdict::Invalid
    } else if metrics_ok && excluded_fraction < thresholds.excluded {
        Verdict::Pass
    } else {
        Verdict::Fail
    };

    Ok(EquivarianceReport {
        functional: f.to_string(),
        record: record.id().to_string(),
        n_samples,
        seed,
        thresholds,
        series,
        residual_norm,
        g_drift,
        excluded_fraction,
        verdict,
    })
}

fn spectral_derivative_real(values: &[f64], dim: usize, n: usize, h: f64, axis: usize) -> Vec<f64> {
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft::map_spectrum(&mut data, dim, n, h, |k, z| {
        *z *= Complex64::new(0.0, k[axis]);
    });
    data.into_iter().map(|z| z.re).collect()
}

/// Time-max over interior frames of the l2 norm of the discrete continuity
/// residual ∂_t p + Σ_k ∂_k (v_k p), excluding near-node cells.
pub fn continuity_residual(f: &DensityFunctional, record: &EvolutionRecord) -> Result<f64> {
    if record.frame_count() < 3 {
        return Err(Error::TooFewFrames(record.frame_count(), 3));
    }
    let grid = record.grid();
    let n = grid.n();
    let h = grid.spacing();
    let dim = grid.dim();
    let cell = grid.cell_volume();
    let dt = record.dt_frame();
    let velocities = record.velocity_fields(DEFAULT_NODE_EPSILON);

    let densities: Vec<DensityGrid> = (0..record.frame_count())
        .map(|i| f.eval_density(record.frame(i).psi()))
        .collect::<Result<_>>()?;

    let mut worst: f64 = 0.0;
    for i in 1..record.frame_count() - 1 {
        let p_prev = densities[i - 1].values();
        let p_next = densities[i + 1].values();
        let p_here = densities[i].values();

        let mut residual: Vec<f64> = p_next
            .iter()
            .zip(p_prev)
            .map(|(a, b)| (a - b) / (2.0 * dt))
            .collect();
        for axis in 0..dim {
            let flux: Vec<f64> = velocities[i]
                .component(axis)
                .iter()
                .zip(p_here)
                .map(|(v, p)| v * p)
                .collect();
            let div = spectral_derivative_real(&flux, dim, n, h, axis);
            for (r, d) in residual.iter_mut().zip(&div) {
                *r += d;
            }
        }

        let frame = record.frame(i);
        let cut = RESIDUAL_DENSITY_CUT * frame.max_density();
        let norm_sq: f64 = residual
            .iter()
            .zip(frame.density())
            .filter(|(_, &rho)| rho >= cut)
            .map(|(r, _)| r * r)
            .sum::<f64>()
            * cell;
        worst = worst.max(norm_sq.sqrt());
    }
    Ok(worst)
}

/// Max drift of F(ψ_t, Q_t) along a trajectory, evaluated at frame times.
pub fn constant_of_motion_f(record: &EvolutionRecord, traj: &Trajectory) -> Result<f64> {
    if record.grid().dim() != 1 {
        return Err(Error::DimensionUnsupported {
            required: 1,
            actual: record.grid().dim(),
        });
    }
    let mut f0 = None;
    let mut drift: f64 = 0.0;
    for (t, q) in frame_aligned(record, traj) {
        let frame = record.frame_at_time(t)?;
        let p_e = record.frame(frame).psi().density_of().normalize()?;
        let f_t = CdfTable::from_density(&p_e)?.eval(q[0]);
        match f0 {
            None => f0 = Some(f_t),
            Some(f0) => drift = drift.max((f_t - f0).abs()),
        }
    }
    Ok(drift)
}

/// Max |ln G| drift along a trajectory, with G = p^{ψ_t}(Q_t)/p_e^{ψ_t}(Q_t).
pub fn constant_of_motion_g(
    f: &DensityFunctional,
    record: &EvolutionRecord,
    traj: &Trajectory,
) -> Result<f64> {
    let grid = record.grid();
    let mut ln_g0 = None;
    let mut drift: f64 = 0.0;
    for (t, q) in frame_aligned(record, traj) {
        let idx = record.frame_at_time(t)?;
        let psi = record.frame(idx).psi();
        let p = f.eval_density(psi)?;
        let p_e = psi.density_of().normalize()?;
        let (num, den) = match grid.dim() {
            1 => {
                let st = crate::velocity::Stencil1D::new(grid, q[0]);
                (st.apply(p.values()), st.apply(p_e.values()))
            }
            _ => {
                let st = crate::velocity::Stencil2D::new(grid, q);
                (st.apply(p.values()), st.apply(p_e.values()))
            }
        };
        if num <= 1e-300 || den <= 1e-300 {
            return Err(Error::DensityUnderflow(t));
        }
        let ln_g = num.ln() - den.ln();
        match ln_g0 {
            None => ln_g0 = Some(ln_g),
            Some(g0) => drift = drift.max((ln_g - g0).abs()),
        }
    }
    Ok(drift)
}

/// Trajectory samples that land on the record's frame lattice.
fn frame_aligned<'a>(
    record: &'a EvolutionRecord,
    traj: &'a Trajectory,
) -> impl Iterator<Item = (f64, [f64; 2])> + 'a {
    let dtf = record.dt_frame();
    traj.times()
        .iter()
        .zip(traj.positions())
        .filter(move |(t, _)| {
            let x = **t / dtf;
            (x - x.round()).abs() < 1e-9 * x.abs().max(1.0)
        })
        .map(|(t, q)| (*t, *q))
}

/// Time average (1/T)∫₀ᵀ |ψ_t|² dt by the trapezoid rule over `samples`
/// evenly spaced times. Exact eigenbasis evolution, so T can be large.
pub fn ergodic_time_average(
    state: &SuperpositionState,
    t_final: f64,
    samples: usize,
) -> Result<DensityGrid> {
    if samples < 2 || !(t_final > 0.0) {
        return Err(Error::InvalidFlowConfig(
            "time average needs t_final > 0 and at least 2 samples".into(),
        ));
    }
    let grid = *state.eigensystem().grid();
    let mut acc = vec![0.0; grid.len()];
    let dt = t_final / (samples - 1) as f64;
    for i in 0..samples {
        let t = i as f64 * dt;
        let w = if i == 0 || i == samples - 1 { 0.5 } else { 1.0 };
        let psi = state.evolve(t);
        for (a, z) in acc.iter_mut().zip(psi.amplitudes()) {
            *a += w * z.norm_sqr();
        }
    }
    let scale = 1.0 / (samples - 1) as f64;
    for a in acc.iter_mut() {
        *a *= scale;
    }
    DensityGrid::from_values(grid, acc)
}

/// Phase average Σ c_j² φ_j²(q): the stationary density of the uniform
/// phase distribution on the invariant torus.
pub fn phase_average(state: &SuperpositionState) -> DensityGrid {
    let es = state.eigensystem();
    let grid = *es.grid();
    let mut acc = vec![0.0; grid.len()];
    for (&j, &c) in state.indices().iter().zip(state.moduli()) {
        let phi = es.eigenvector(j);
        for (a, &x) in acc.iter_mut().zip(phi) {
            *a += c * c * x * x;
        }
    }
    DensityGrid::from_values(grid, acc).expect("eigenvector squares are finite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::wavefunction::WaveFunction;

    fn uniform_cdf(l: f64, n: usize) -> CdfTable {
        let grid = Grid::new(1, n, l).unwrap();
        let p = DensityGrid::from_values(grid, vec![1.0; grid.len()])
            .unwrap()
            .normalize()
            .unwrap();
        CdfTable::from_density(&p).unwrap()
    }

    #[test]
    fn ks_of_exact_quantiles_is_half_over_n() {
        let cdf = uniform_cdf(10.0, 128);
        let n = 200;
        let samples: Vec<f64> = (0..n)
            .map(|i| cdf.inverse((i as f64 + 0.5) / n as f64))
            .collect();
        let ks = ks_distance(&samples, &cdf).unwrap();
        assert!((ks - 0.5 / n as f64).abs() < 1e-12, "ks = {ks}");
    }

    #[test]
    fn ks_of_degenerate_mass_tends_to_one() {
        let cdf = uniform_cdf(10.0, 128);
        let samples = vec![-4.999; 1000];
        let ks = ks_distance(&samples, &cdf).unwrap();
        assert!(ks >= 1.0 - 1.0 / 1000.0 - 1e-3, "ks = {ks}");
    }

    #[test]
    fn ks_of_seeded_target_samples_is_small() {
        // Kolmogorov bound: P(KS > 1.36/sqrt(N)) ~ 5%; 0.01 at N = 1e5 is
        // ~3.2/sqrt(N), far into the tail.
        let grid = Grid::new(1, 512, 20.0).unwrap();
        let psi = WaveFunction::gaussian(grid, [0.0, 0.0], [1.0, 1.0], [0.0, 0.0])
            .unwrap()
            .normalize();
        let p = psi.density_of().normalize().unwrap();
        let cdf = CdfTable::from_density(&p).unwrap();
        let e = p.sample(100_000, 42).unwrap();
        let xs: Vec<f64> = e.points().iter().map(|q| q[0]).collect();
        let ks = ks_distance(&xs, &cdf).unwrap();
        assert!(ks <= 0.01, "ks = {ks}");
    }

    #[test]
    fn ks_rejects_empty() {
        let cdf = uniform_cdf(10.0, 128);
        assert!(matches!(
            ks_distance(&[], &cdf),
            Err(Error::EmptyEnsemble)
        ));
    }

    #[test]
    fn l1_identical_is_zero_and_disjoint_is_two() {
        let grid = Grid::new(1, 128, 10.0).unwrap();
        let mut a = vec![0.0; grid.len()];
        let mut b = vec![0.0; grid.len()];
        a[10] = 1.0;
        b[100] = 1.0;
        let pa = DensityGrid::from_values(grid, a).unwrap().normalize().unwrap();
        let pb = DensityGrid::from_values(grid, b).unwrap().normalize().unwrap();
        assert_eq!(l1_distance(&pa, &pa).unwrap(), 0.0);
        assert!((l1_distance(&pa, &pb).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn l1_uniform_vs_half_box() {
        let grid = Grid::new(1, 128, 10.0).unwrap();
        let uniform = DensityGrid::from_values(grid, vec![1.0; grid.len()])
            .unwrap()
            .normalize()
            .unwrap();
        let mut half = vec![0.0; grid.len()];
        for v in half.iter_mut().take(64) {
            *v = 2.0;
        }
        let half = DensityGrid::from_values(grid, half).unwrap().normalize().unwrap();
        assert!((l1_distance(&uniform, &half).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn l1_requires_same_grid_and_normalization() {
        let g1 = Grid::new(1, 128, 10.0).unwrap();
        let g2 = Grid::new(1, 128, 12.0).unwrap();
        let p1 = DensityGrid::from_values(g1, vec![1.0; g1.len()]).unwrap();
        let p1n = p1.normalize().unwrap();
        let p2 = DensityGrid::from_values(g2, vec![1.0; g2.len()])
            .unwrap()
            .normalize()
            .unwrap();
        assert!(l1_distance(&p1n, &p2).is_err());
        assert!(l1_distance(&p1n, &p1).is_err());
    }

    #[test]
    fn histogram_l1_of_matching_sample_is_small() {
        // Sampling noise: E[L1] ~ Σ_b sqrt(2 p_b / (π N)) ~ 0.03 for this
        // width; 0.05 leaves several sigma of headroom.
        let grid = Grid::new(2, 128, 16.0).unwrap();
        let psi = WaveFunction::gaussian(grid, [0.0, 0.0], [0.8, 0.8], [0.0, 0.0])
            .unwrap()
            .normalize();
        let p = psi.density_of().normalize().unwrap();
        let e = p.sample(100_000, 17).unwrap();
        let l1 = histogram_l1(e.points(), &p).unwrap();
        assert!(l1 <= 0.05, "l1 = {l1}");
    }
}
