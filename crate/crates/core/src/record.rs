//! Time-indexed wave function snapshots from a propagator run, with cached
//! currents and densities for trajectory integration.

use crate::eigen::SuperpositionState;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::potential::PotentialSpec;
use crate::propagate::SplitStepPlan;
use crate::velocity::{probability_current, velocity_from_current, Stencil1D, Stencil2D, VelocityField};
use crate::wavefunction::WaveFunction;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    SplitStep,
    Eigenbasis,
    Stationary,
    Analytic,
}

pub struct Frame {
    psi: WaveFunction,
    current: [Vec<f64>; 2],
    density: Vec<f64>,
    max_density: f64,
}

impl Frame {
    fn new(psi: WaveFunction) -> Frame {
        let current = probability_current(&psi);
        let density: Vec<f64> = psi.amplitudes().iter().map(|z| z.norm_sqr()).collect();
        let max_density = density.iter().cloned().fold(0.0, f64::max);
        Frame {
            psi,
            current,
            density,
            max_density,
        }
    }

    pub fn psi(&self) -> &WaveFunction {
        &self.psi
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn max_density(&self) -> f64 {
        self.max_density
    }

    pub fn current(&self) -> &[Vec<f64>; 2] {
        &self.current
    }
}

/// Frames at uniform spacing dt_frame starting at t = 0.
pub struct EvolutionRecord {
    id: String,
    frames: Vec<Frame>,
    dt_frame: f64,
    potential: PotentialSpec,
    provenance: Provenance,
}

impl EvolutionRecord {
    /// Wrap prebuilt frames. Checks the unitarity certificate: all frame
    /// norms must match the first within 1e-9.
    pub fn from_frames(
        id: impl Into<String>,
        frames: Vec<WaveFunction>,
        dt_frame: f64,
        potential: PotentialSpec,
        provenance: Provenance,
    ) -> Result<Self> {
        if frames.len() < 2 {
            return Err(Error::TooFewFrames(frames.len(), 2));
        }
        if !(dt_frame > 0.0) {
            return Err(Error::InvalidFlowConfig(format!(
                "frame interval must be positive, got {dt_frame}"
            )));
        }
        let grid = *frames[0].grid();
        let norm0 = frames[0].l2_norm_sq();
        for (i, f) in frames.iter().enumerate() {
            f.grid().same_as(&grid)?;
            let drift = (f.l2_norm_sq() - norm0).abs() / norm0;
            if drift > 1e-9 {
                return Err(Error::InvalidFlowConfig(format!(
                    "frame {i} norm drifted by {drift:.3e}; record is not unitary"
                )));
            }
        }
        Ok(EvolutionRecord {
            id: id.into(),
            frames: frames.into_iter().map(Frame::new).collect(),
            dt_frame,
            potential,
            provenance,
        })
    }

    /// Propagate with split steps, storing a frame every
    /// `steps_per_frame` steps.
    pub fn from_split_step(
        id: impl Into<String>,
        psi0: WaveFunction,
        potential: PotentialSpec,
        dt: f64,
        steps_per_frame: usize,
        frame_count: usize,
    ) -> Result<Self> {
        if steps_per_frame == 0 || frame_count < 2 {
            return Err(Error::InvalidFlowConfig(
                "need at least one step per frame and two frames".into(),
            ));
        }
        let plan = SplitStepPlan::new(&potential, *psi0.grid(), psi0.hbar(), psi0.mass(), dt)?;
        let mut frames = Vec::with_capacity(frame_count);
        let mut amps = psi0.amplitudes().to_vec();
        frames.push(psi0.clone());
        for _ in 1..frame_count {
            for _ in 0..steps_per_frame {
                plan.step(&mut amps);
            }
            frames.push(psi0.with_amplitudes(amps.clone()));
        }
        Self::from_frames(
            id,
            frames,
            dt * steps_per_frame as f64,
            potential,
            Provenance::SplitStep,
        )
    }

    /// Exact evolution of a superposition, sampled at uniform frames.
    pub fn from_eigenbasis(
        id: impl Into<String>,
        state: &SuperpositionState,
        potential: PotentialSpec,
        dt_frame: f64,
        frame_count: usize,
    ) -> Result<Self> {
        let frames: Vec<WaveFunction> = (0..frame_count)
            .map(|i| state.evolve(i as f64 * dt_frame))
            .collect();
        Self::from_frames(id, frames, dt_frame, potential, Provenance::Eigenbasis)
    }

    /// Constant frames for a stationary state. A real eigenstate evolves
    /// only by a global phase, which cancels identically in every density
    /// and current; the constant-frame record is its exact representation.
    pub fn stationary(
        id: impl Into<String>,
        psi: WaveFunction,
        potential: PotentialSpec,
        dt_frame: f64,
        frame_count: usize,
    ) -> Result<Self> {
        let frames = vec![psi; frame_count.max(2)];
        Self::from_frames(id, frames, dt_frame, potential, Provenance::Stationary)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn grid(&self) -> &Grid {
        self.frames[0].psi.grid()
    }

    pub fn potential(&self) -> &PotentialSpec {
        &self.potential
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn dt_frame(&self) -> f64 {
        self.dt_frame
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn t_final(&self) -> f64 {
        (self.frames.len() - 1) as f64 * self.dt_frame
    }

    pub fn frame(&self, i: usize) -> &Frame {
        &self.frames[i]
    }

    pub fn frame_time(&self, i: usize) -> f64 {
        i as f64 * self.dt_frame
    }

    /// Frame index at time `t` (must be on the frame lattice).
    pub fn frame_at_time(&self, t: f64) -> Result<usize> {
        let x = t / self.dt_frame;
        let i = x.round() as i64;
        if i < 0 || i as usize >= self.frames.len() || (x - i as f64).abs() > 1e-6 {
            return Err(Error::TimeOutOfRange {
                t,
                t0: 0.0,
                t1: self.t_final(),
            });
        }
        Ok(i as usize)
    }

    /// Bracketing frame indices and blend weight for arbitrary t in range.
    pub fn bracket(&self, t: f64) -> Result<(usize, usize, f64)> {
        let t1 = self.t_final();
        if !(0.0..=t1).contains(&t) {
            // Tolerate rounding just past the ends.
            if t > -1e-12 && t < 1e-12 {
                return Ok((0, 0, 0.0));
            }
            if (t - t1).abs() < 1e-9 * self.dt_frame.max(1.0) {
                let last = self.frames.len() - 1;
                return Ok((last, last, 0.0));
            }
            return Err(Error::TimeOutOfRange { t, t0: 0.0, t1 });
        }
        let x = t / self.dt_frame;
        let mut i = x.floor() as usize;
        if i >= self.frames.len() - 1 {
            i = self.frames.len() - 2;
        }
        Ok((i, i + 1, x - i as f64))
    }

    /// Velocity fields per frame for a given regularization.
    pub fn velocity_fields(&self, epsilon: f64) -> Vec<VelocityField> {
        self.frames
            .iter()
            .map(|f| {
                velocity_from_current(
                    *f.psi.grid(),
                    f.current.clone(),
                    &f.density,
                    f.max_density,
                    epsilon,
                )
            })
            .collect()
    }

    /// Density at (t, q): cubic in space on the bracketing frames, linear
    /// blend in time.
    pub fn density_at(&self, t: f64, q: [f64; 2]) -> Result<f64> {
        let (i0, i1, s) = self.bracket(t)?;
        let grid = self.grid();
        let value = match grid.dim() {
            1 => {
                let st = Stencil1D::new(grid, q[0]);
                (1.0 - s) * st.apply(&self.frames[i0].density) + s * st.apply(&self.frames[i1].density)
            }
            _ => {
                let st = Stencil2D::new(grid, q);
                (1.0 - s) * st.apply(&self.frames[i0].density) + s * st.apply(&self.frames[i1].density)
            }
        };
        Ok(value)
    }

    /// Linear-in-time blend of the per-frame max density.
    pub fn max_density_at(&self, t: f64) -> Result<f64> {
        let (i0, i1, s) = self.bracket(t)?;
        Ok((1.0 - s) * self.frames[i0].max_density + s * self.frames[i1].max_density)
    }
}

/// Velocity evaluation against a record: cubic in space on the two
/// bracketing frames' velocity fields, linear blend in time.
pub struct FlowSampler<'a> {
    record: &'a EvolutionRecord,
    velocities: Vec<VelocityField>,
    epsilon: f64,
}

impl<'a> FlowSampler<'a> {
    pub fn new(record: &'a EvolutionRecord, epsilon: f64) -> Self {
        FlowSampler {
            record,
            velocities: record.velocity_fields(epsilon),
            epsilon,
        }
    }

    pub fn record(&self) -> &EvolutionRecord {
        self.record
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn velocity_at(&self, t: f64, q: [f64; 2]) -> Result<[f64; 2]> {
        let (i0, i1, s) = self.record.bracket(t)?;
        let grid = self.record.grid();
        let mut out = [0.0; 2];
        match grid.dim() {
            1 => {
                let st = Stencil1D::new(grid, q[0]);
                let v0 = st.apply(self.velocities[i0].component(0));
                let v1 = st.apply(self.velocities[i1].component(0));
                out[0] = (1.0 - s) * v0 + s * v1;
            }
            _ => {
                let st = Stencil2D::new(grid, q);
                for axis in 0..2 {
                    let v0 = st.apply(self.velocities[i0].component(axis));
                    let v1 = st.apply(self.velocities[i1].component(axis));
                    out[axis] = (1.0 - s) * v0 + s * v1;
                }
            }
        }
        Ok(out)
    }

    /// Density and node threshold at (t, q) for the degeneracy flag.
    pub fn node_check(&self, t: f64, q: [f64; 2]) -> Result<bool> {
        let rho = self.record.density_at(t, q)?;
        let floor = self.epsilon * self.record.max_density_at(t)?;
        Ok(rho < floor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::velocity::DEFAULT_NODE_EPSILON;

    fn plane_wave_record(mode: i64) -> EvolutionRecord {
        let grid = Grid::new(1, 128, 16.0).unwrap();
        let psi = WaveFunction::plane_wave(grid, mode).unwrap();
        EvolutionRecord::from_split_step(
            "plane",
            psi,
            PotentialSpec::Free,
            1e-3,
            10,
            11,
        )
        .unwrap()
    }

    #[test]
    fn split_step_record_has_uniform_frames() {
        let rec = plane_wave_record(3);
        assert_eq!(rec.frame_count(), 11);
        assert!((rec.dt_frame() - 0.01).abs() < 1e-15);
        assert!((rec.t_final() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn velocity_at_matches_field_on_nodes_and_frames() {
        let rec = plane_wave_record(4);
        let sampler = FlowSampler::new(&rec, DEFAULT_NODE_EPSILON);
        let fields = rec.velocity_fields(DEFAULT_NODE_EPSILON);
        let q = rec.grid().point(17);
        let direct = fields[3].component(0)[17];
        let interp = sampler.velocity_at(rec.frame_time(3), q).unwrap()[0];
        assert_eq!(direct, interp);
    }

    #[test]
    fn plane_wave_velocity_constant_off_grid() {
        let rec = plane_wave_record(4);
        let k = 2.0 * std::f64::consts::PI * 4.0 / 16.0;
        let sampler = FlowSampler::new(&rec, DEFAULT_NODE_EPSILON);
        for &x in &[-7.99, -3.21, 0.013, 5.55] {
            let v = sampler.velocity_at(0.037, [x, 0.0]).unwrap()[0];
            assert!((v - k).abs() < 1e-8, "v({x}) = {v}");
        }
    }

    #[test]
    fn time_blend_is_linear() {
        // Two synthetic frames with fields v and 3v: midpoint gives 2v.
        let grid = Grid::new(1, 128, 16.0).unwrap();
        let one = WaveFunction::plane_wave(grid, 1).unwrap();
        let three = WaveFunction::plane_wave(grid, 3).unwrap();
        let rec = EvolutionRecord::from_frames(
            "blend",
            vec![one, three],
            0.5,
            PotentialSpec::Free,
            Provenance::Analytic,
        )
        .unwrap();
        let sampler = FlowSampler::new(&rec, DEFAULT_NODE_EPSILON);
        let k1 = 2.0 * std::f64::consts::PI / 16.0;
        let v = sampler.velocity_at(0.25, [1.3, 0.0]).unwrap()[0];
        assert!((v - 2.0 * k1).abs() < 1e-12, "v = {v}");
    }

    #[test]
    fn bracket_rejects_out_of_range() {
        let rec = plane_wave_record(1);
        assert!(rec.bracket(-0.5).is_err());
        assert!(rec.bracket(0.2).is_err());
        assert!(rec.bracket(0.05).is_ok());
    }

    #[test]
    fn non_unitary_frames_rejected() {
        let grid = Grid::new(1, 64, 10.0).unwrap();
        let a = WaveFunction::plane_wave(grid, 1).unwrap();
        let b = a.with_amplitudes(a.amplitudes().iter().map(|z| z * 1.01).collect());
        let err = EvolutionRecord::from_frames(
            "bad",
            vec![a, b],
            0.1,
            PotentialSpec::Free,
            Provenance::Analytic,
        );
        assert!(err.is_err());
    }
}
