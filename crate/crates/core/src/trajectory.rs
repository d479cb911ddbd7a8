//! Guidance-equation integration: single trajectories and ensembles pushed
//! through the interpolated velocity field with classic RK4.

use crate::error::{Error, Result};
use crate::record::{EvolutionRecord, FlowSampler};
use crate::velocity::DEFAULT_NODE_EPSILON;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Integration parameters. The integrator is fixed RK4; interpolation is
/// cubic in space and linear in time between stored frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub dt_flow: f64,
    /// Relative node regularization ε; the velocity denominator is
    /// |ψ|² + ε max|ψ|².
    pub node_epsilon: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            dt_flow: 2e-3,
            node_epsilon: DEFAULT_NODE_EPSILON,
        }
    }
}

impl FlowConfig {
    /// The step must tile the frame lattice: either dt_flow divides the
    /// frame interval (several steps per frame) or is an exact multiple of
    /// it (steps striding over stored frames, used by convergence studies).
    pub fn validate_against(&self, record: &EvolutionRecord) -> Result<()> {
        if !(self.dt_flow > 0.0) {
            return Err(Error::InvalidFlowConfig(format!(
                "dt_flow must be positive, got {}",
                self.dt_flow
            )));
        }
        if !(self.node_epsilon >= 0.0) {
            return Err(Error::InvalidFlowConfig(format!(
                "node_epsilon must be nonnegative, got {}",
                self.node_epsilon
            )));
        }
        let ratio = record.dt_frame() / self.dt_flow;
        let forward_ok = (ratio - ratio.round()).abs() < 1e-9 * ratio.max(1.0) && ratio >= 0.5;
        let inv = 1.0 / ratio;
        let backward_ok = (inv - inv.round()).abs() < 1e-9 * inv.max(1.0);
        if !forward_ok && !backward_ok {
            return Err(Error::InvalidFlowConfig(format!(
                "dt_flow {} does not tile the frame interval {}",
                self.dt_flow,
                record.dt_frame()
            )));
        }
        Ok(())
    }
}

/// A single integrated trajectory sampled at every integrator step.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    /// Positions wrapped into the box.
    positions: Vec<[f64; 2]>,
    /// Unwrapped positions for diagnostics across the periodic seam.
    unwrapped: Vec<[f64; 2]>,
    node_degenerate: bool,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.positions
    }

    pub fn unwrapped(&self) -> &[[f64; 2]] {
        &self.unwrapped
    }

    pub fn node_degenerate(&self) -> bool {
        self.node_degenerate
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_position(&self) -> [f64; 2] {
        *self.positions.last().unwrap()
    }
}

/// Sampled population of configurations.
#[derive(Debug, Clone)]
pub struct Ensemble {
    points: Vec<[f64; 2]>,
    seed: u64,
    node_degenerate: Vec<bool>,
}

impl Ensemble {
    pub fn new(points: Vec<[f64; 2]>, seed: u64) -> Self {
        let flags = vec![false; points.len()];
        Ensemble {
            points,
            seed,
            node_degenerate: flags,
        }
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn node_degenerate(&self) -> &[bool] {
        &self.node_degenerate
    }

    pub fn excluded_fraction(&self) -> f64 {
        let excluded = self.node_degenerate.iter().filter(|f| **f).count();
        excluded as f64 / self.points.len().max(1) as f64
    }

    /// Members that never went node-degenerate.
    pub fn retained_points(&self) -> Vec<[f64; 2]> {
        self.points
            .iter()
            .zip(&self.node_degenerate)
            .filter(|(_, flag)| !**flag)
            .map(|(p, _)| *p)
            .collect()
    }
}

fn step_count(t0: f64, t1: f64, dt: f64) -> Result<usize> {
    let span = t1 - t0;
    if span < 0.0 {
        return Err(Error::InvalidFlowConfig(format!(
            "t1 = {t1} precedes t0 = {t0}"
        )));
    }
    let x = span / dt;
    let steps = x.round();
    if (x - steps).abs() > 1e-6 {
        return Err(Error::InvalidFlowConfig(format!(
            "interval [{t0}, {t1}] is not a whole number of dt_flow = {dt} steps"
        )));
    }
    Ok(steps as usize)
}

/// Consecutive low-density steps before a trajectory is flagged.
const NODE_DEGENERATE_STEPS: usize = 10;

struct StepOutcome {
    q: [f64; 2],
    below: bool,
}

#[inline]
fn rk4_step(sampler: &FlowSampler<'_>, t: f64, dt: f64, q: [f64; 2]) -> Result<StepOutcome> {
    let below = sampler.node_check(t, q)?;
    let k1 = sampler.velocity_at(t, q)?;
    let half = 0.5 * dt;
    let q2 = [q[0] + half * k1[0], q[1] + half * k1[1]];
    let k2 = sampler.velocity_at(t + half, q2)?;
    let q3 = [q[0] + half * k2[0], q[1] + half * k2[1]];
    let k3 = sampler.velocity_at(t + half, q3)?;
    let q4 = [q[0] + dt * k3[0], q[1] + dt * k3[1]];
    let k4 = sampler.velocity_at(t + dt, q4)?;
    let sixth = dt / 6.0;
    Ok(StepOutcome {
        q: [
            q[0] + sixth * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            q[1] + sixth * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ],
        below,
    })
}

fn integrate_final(
    sampler: &FlowSampler<'_>,
    q0: [f64; 2],
    t0: f64,
    steps: usize,
    dt: f64,
) -> Result<([f64; 2], bool)> {
    let mut q = q0;
    let mut consecutive = 0usize;
    let mut flagged = false;
    for j in 0..steps {
        let t = t0 + j as f64 * dt;
        let out = rk4_step(sampler, t, dt, q)?;
        q = out.q;
        if out.below {
            consecutive += 1;
            if consecutive > NODE_DEGENERATE_STEPS {
                flagged = true;
            }
        } else {
            consecutive = 0;
        }
    }
    Ok((q, flagged))
}

/// Integrate one trajectory from `q0` across [t0, t1], recording every step.
pub fn advance_trajectory(
    q0: [f64; 2],
    record: &EvolutionRecord,
    t0: f64,
    t1: f64,
    cfg: &FlowConfig,
) -> Result<Trajectory> {
    cfg.validate_against(record)?;
    record.bracket(t0)?;
    record.bracket(t1)?;
    let steps = step_count(t0, t1, cfg.dt_flow)?;
    let sampler = FlowSampler::new(record, cfg.node_epsilon);
    let grid = record.grid();

    let mut times = Vec::with_capacity(steps + 1);
    let mut positions = Vec::with_capacity(steps + 1);
    let mut unwrapped = Vec::with_capacity(steps + 1);
    let mut q = q0;
    let mut consecutive = 0usize;
    let mut flagged = false;
    times.push(t0);
    positions.push(grid.wrap_point(q));
    unwrapped.push(q);
    for j in 0..steps {
        let t = t0 + j as f64 * cfg.dt_flow;
        let out = rk4_step(&sampler, t, cfg.dt_flow, q)?;
        q = out.q;
        if out.below {
            consecutive += 1;
            if consecutive > NODE_DEGENERATE_STEPS {
                flagged = true;
            }
        } else {
            consecutive = 0;
        }
        times.push(t0 + (j + 1) as f64 * cfg.dt_flow);
        positions.push(grid.wrap_point(q));
        unwrapped.push(q);
    }
    Ok(Trajectory {
        times,
        positions,
        unwrapped,
        node_degenerate: flagged,
    })
}

/// Push every ensemble member through the flow. Members evolve
/// independently against the shared read-only record, so the parallel
/// result is bit-identical to sequential evaluation and preserves order.
pub fn evolve_ensemble(
    ensemble: &Ensemble,
    record: &EvolutionRecord,
    t0: f64,
    t1: f64,
    cfg: &FlowConfig,
) -> Result<Ensemble> {
    if ensemble.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    cfg.validate_against(record)?;
    record.bracket(t0)?;
    record.bracket(t1)?;
    let steps = step_count(t0, t1, cfg.dt_flow)?;
    let sampler = FlowSampler::new(record, cfg.node_epsilon);
    let grid = record.grid();

    let results: Result<Vec<([f64; 2], bool)>> = ensemble
        .points
        .par_iter()
        .map(|&q0| integrate_final(&sampler, q0, t0, steps, cfg.dt_flow))
        .collect();
    let results = results?;

    let mut points = Vec::with_capacity(results.len());
    let mut flags = Vec::with_capacity(results.len());
    for ((q, flag), prior) in results.into_iter().zip(&ensemble.node_degenerate) {
        points.push(grid.wrap_point(q));
        flags.push(flag || *prior);
    }
    Ok(Ensemble {
        points,
        seed: ensemble.seed,
        node_degenerate: flags,
    })
}
