//! Experiment configuration: JSON in, validated objects out.

use anyhow::{bail, Context, Result};
use pilotwave::{
    solve_eigenbasis, DiscreteHamiltonian, EvolutionRecord, FlowConfig, Grid, PotentialSpec,
    SuperpositionState, Thresholds, WaveFunction,
};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub points_per_axis: usize,
    pub extent_per_axis: f64,
}

/// Potential selection; `tabulated` points at a `q,value` CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    Free,
    Harmonic { omega: f64 },
    Quartic { a: f64, b: f64 },
    Tabulated { path: PathBuf },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialStateConfig {
    /// Gaussian packet with optional linear phase (momentum) per axis.
    Gaussian {
        center: Vec<f64>,
        sigma: Vec<f64>,
        #[serde(default)]
        phase_slope: Vec<f64>,
    },
    /// Superposition over eigenstates of the configured potential.
    Superposition {
        indices: Vec<usize>,
        moduli: Vec<f64>,
        phases: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropagatorChoice {
    SplitStep,
    Eigenbasis,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_final: f64,
    pub dt: f64,
    pub frame_interval: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub count: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErgodicConfig {
    pub t_short: f64,
    pub t_long: f64,
    pub samples_short: usize,
    pub samples_long: usize,
}

impl Default for ErgodicConfig {
    fn default() -> Self {
        ErgodicConfig {
            t_short: 2000.0,
            t_long: 4000.0,
            samples_short: 8001,
            samples_long: 16001,
        }
    }
}

fn default_trajectory_count() -> usize {
    8
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    #[serde(default = "default_mass")]
    pub mass: Vec<f64>,
    pub potential: PotentialConfig,
    pub initial_state: InitialStateConfig,
    pub propagator: PropagatorChoice,
    pub time: TimeConfig,
    #[serde(default)]
    pub flow: FlowSection,
    pub functionals: Vec<String>,
    pub ensemble: EnsembleConfig,
    pub checkpoints: Vec<f64>,
    #[serde(default)]
    pub thresholds: ThresholdSection,
    #[serde(default)]
    pub ergodic: ErgodicConfig,
    #[serde(default = "default_trajectory_count")]
    pub trajectory_count: usize,
    pub output: PathBuf,
}

fn default_hbar() -> f64 {
    1.0
}

fn default_mass() -> Vec<f64> {
    vec![1.0, 1.0]
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    pub dt_flow: f64,
    pub node_epsilon: f64,
}

impl Default for FlowSection {
    fn default() -> Self {
        let f = FlowConfig::default();
        FlowSection {
            dt_flow: f.dt_flow,
            node_epsilon: f.node_epsilon,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSection {
    pub ks: f64,
    pub l1: f64,
    pub excluded: f64,
}

impl Default for ThresholdSection {
    fn default() -> Self {
        let t = Thresholds::default();
        ThresholdSection {
            ks: t.ks,
            l1: t.l1,
            excluded: t.excluded,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .with_context(|| format!("malformed config {}", path.display()))?;
        config.validate(path.parent().unwrap_or(Path::new(".")))?;
        Ok(config)
    }

    fn validate(&self, base: &Path) -> Result<()> {
        if self.mass.len() < self.grid.dim {
            bail!("mass needs {} entries", self.grid.dim);
        }
        if !(self.time.dt > 0.0 && self.time.frame_interval > 0.0 && self.time.t_final > 0.0) {
            bail!("time parameters must be positive");
        }
        let steps_per_frame = self.time.frame_interval / self.time.dt;
        if (steps_per_frame - steps_per_frame.round()).abs() > 1e-9 {
            bail!(
                "frame_interval {} is not a whole number of dt {} steps",
                self.time.frame_interval,
                self.time.dt
            );
        }
        let frames = self.time.t_final / self.time.frame_interval;
        if (frames - frames.round()).abs() > 1e-9 {
            bail!(
                "t_final {} is not a whole number of frame intervals {}",
                self.time.t_final,
                self.time.frame_interval
            );
        }
        for f in &self.functionals {
            f.parse::<pilotwave::DensityFunctional>()
                .map_err(|e| anyhow::anyhow!("bad functional `{f}`: {e}"))?;
        }
        if let PotentialConfig::Tabulated { path } = &self.potential {
            let resolved = base.join(path);
            if !resolved.exists() {
                bail!("tabulated potential file {} does not exist", resolved.display());
            }
        }
        for &t in &self.checkpoints {
            if !(t > 0.0 && t <= self.time.t_final + 1e-9) {
                bail!("checkpoint {t} outside (0, t_final]");
            }
        }
        if self.ensemble.count == 0 {
            bail!("ensemble count must be positive");
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Ok(Grid::new(
            self.grid.dim,
            self.grid.points_per_axis,
            self.grid.extent_per_axis,
        )?)
    }

    pub fn mass_pair(&self) -> [f64; 2] {
        let mut mass = [1.0, 1.0];
        for (k, m) in self.mass.iter().take(2).enumerate() {
            mass[k] = *m;
        }
        mass
    }

    pub fn flow_config(&self) -> FlowConfig {
        FlowConfig {
            dt_flow: self.flow.dt_flow,
            node_epsilon: self.flow.node_epsilon,
        }
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            ks: self.thresholds.ks,
            l1: self.thresholds.l1,
            excluded: self.thresholds.excluded,
        }
    }

    pub fn potential_spec(&self, base: &Path, grid: &Grid) -> Result<PotentialSpec> {
        Ok(match &self.potential {
            PotentialConfig::Free => PotentialSpec::Free,
            PotentialConfig::Harmonic { omega } => PotentialSpec::Harmonic { omega: *omega },
            PotentialConfig::Quartic { a, b } => PotentialSpec::Quartic { a: *a, b: *b },
            PotentialConfig::Tabulated { path } => {
                let values = pilotwave::io::read_potential_csv(&base.join(path), grid)?;
                PotentialSpec::Tabulated { values }
            }
        })
    }

    /// Eigen superposition when configured (needed by `eigenbasis` and
    /// `ergodic` runs).
    pub fn superposition(
        &self,
        grid: Grid,
        potential: &PotentialSpec,
    ) -> Result<Option<SuperpositionState>> {
        match &self.initial_state {
            InitialStateConfig::Superposition {
                indices,
                moduli,
                phases,
            } => {
                if grid.dim() != 1 {
                    bail!("eigen superpositions are 1D");
                }
                let h = DiscreteHamiltonian::new(potential, grid, self.hbar, self.mass_pair())?;
                let k = indices.iter().max().copied().unwrap_or(0) + 1;
                let es = Arc::new(solve_eigenbasis(&h, k)?);
                Ok(Some(SuperpositionState::new(
                    es,
                    indices.clone(),
                    moduli.clone(),
                    phases.clone(),
                )?))
            }
            _ => Ok(None),
        }
    }

    pub fn initial_wavefunction(
        &self,
        grid: Grid,
        potential: &PotentialSpec,
    ) -> Result<WaveFunction> {
        match &self.initial_state {
            InitialStateConfig::Gaussian {
                center,
                sigma,
                phase_slope,
            } => {
                let get = |v: &[f64], k: usize, name: &str| -> Result<f64> {
                    v.get(k)
                        .copied()
                        .with_context(|| format!("{name} needs {} entries", grid.dim()))
                };
                let mut c = [0.0; 2];
                let mut s = [1.0; 2];
                let mut p = [0.0; 2];
                for k in 0..grid.dim() {
                    c[k] = get(center, k, "center")?;
                    s[k] = get(sigma, k, "sigma")?;
                    p[k] = if phase_slope.is_empty() {
                        0.0
                    } else {
                        get(phase_slope, k, "phase_slope")?
                    };
                }
                Ok(WaveFunction::gaussian(grid, c, s, p)?.normalize())
            }
            InitialStateConfig::Superposition { .. } => {
                let state = self
                    .superposition(grid, potential)?
                    .expect("superposition config");
                Ok(state.evolve(0.0))
            }
        }
    }

    /// Build the evolution record the configured way.
    pub fn build_record(&self, base: &Path) -> Result<EvolutionRecord> {
        let grid = self.grid()?;
        let potential = self.potential_spec(base, &grid)?;
        let frames = (self.time.t_final / self.time.frame_interval).round() as usize + 1;
        let record = match self.propagator {
            PropagatorChoice::SplitStep => {
                let psi0 = self.initial_wavefunction(grid, &potential)?;
                let steps_per_frame = (self.time.frame_interval / self.time.dt).round() as usize;
                EvolutionRecord::from_split_step(
                    "config",
                    psi0,
                    potential,
                    self.time.dt,
                    steps_per_frame,
                    frames,
                )?
            }
            PropagatorChoice::Eigenbasis => {
                let state = self
                    .superposition(grid, &potential)?
                    .context("eigenbasis propagation needs a superposition initial state")?;
                EvolutionRecord::from_eigenbasis(
                    "config",
                    &state,
                    potential,
                    self.time.frame_interval,
                    frames,
                )?
            }
        };
        Ok(record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_json() -> serde_json::Value {
        serde_json::json!({
            "grid": { "dim": 1, "points_per_axis": 128, "extent_per_axis": 20.0 },
            "potential": { "kind": "harmonic", "omega": 1.0 },
            "initial_state": { "kind": "gaussian", "center": [0.0], "sigma": [1.0] },
            "propagator": "split_step",
            "time": { "t_final": 1.0, "dt": 0.001, "frame_interval": 0.02 },
            "functionals": ["equilibrium", "power:alpha=1"],
            "ensemble": { "count": 1000, "seed": 42 },
            "checkpoints": [0.5, 1.0],
            "output": "out"
        })
    }

    #[test]
    fn config_round_trips_losslessly() {
        let config: ExperimentConfig = serde_json::from_value(sample_json()).unwrap();
        let json = serde_json::to_string(&config).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        let again = serde_json::to_string(&back).unwrap();
        assert_eq!(json, again);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut v = sample_json();
        v["grid"]["bogus"] = serde_json::json!(1);
        assert!(serde_json::from_value::<ExperimentConfig>(v).is_err());
    }

    #[test]
    fn misaligned_frame_interval_is_rejected() {
        let mut v = sample_json();
        v["time"]["frame_interval"] = serde_json::json!(0.0015);
        let config: ExperimentConfig = serde_json::from_value(v).unwrap();
        assert!(config.validate(Path::new(".")).is_err());
    }

    #[test]
    fn bad_functional_is_rejected() {
        let mut v = sample_json();
        v["functionals"] = serde_json::json!(["power:alpha=oops"]);
        let config: ExperimentConfig = serde_json::from_value(v).unwrap();
        assert!(config.validate(Path::new(".")).is_err());
    }
}
