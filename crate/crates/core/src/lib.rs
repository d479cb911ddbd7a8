//! Bohmian dynamics on periodic grids and numerical tests of which density
//! functionals of the wave function are equivariant under the flow.
//!
//! The crate is organized around five layers:
//! - grids, wave functions, densities, and sampling ([`grid`],
//!   [`wavefunction`], [`density`]);
//! - two independent Schrödinger solvers: split-step spectral stepping and
//!   exact eigenbasis evolution from the finite-difference Hamiltonian
//!   ([`propagate`], [`hamiltonian`], [`eigen`]);
//! - the guidance-equation flow: velocity fields, trajectories, ensembles
//!   ([`velocity`], [`record`], [`trajectory`]);
//! - the density-functional families under test ([`functionals`]);
//! - the experiment layer: pushforward checks, continuity residuals,
//!   constants of motion, time averages ([`lab`], [`suite`]).

pub mod density;
pub mod eigen;
pub mod error;
pub mod fft;
pub mod functionals;
pub mod grid;
pub mod hamiltonian;
pub mod io;
pub mod lab;
pub mod potential;
pub mod propagate;
pub mod record;
pub mod suite;
pub mod trajectory;
pub mod velocity;
pub mod wavefunction;

pub use density::{CdfTable, DensityGrid};
pub use eigen::{solve_eigenbasis, EigenSystem, SuperpositionState};
pub use error::{Error, Result};
pub use functionals::{
    cdf_f, cdf_transport_density, equilibrium_cdf, estimate_h, DensityFunctional,
    TransportMeasure,
};
pub use grid::Grid;
pub use hamiltonian::DiscreteHamiltonian;
pub use lab::{
    check_equivariance, constant_of_motion_f, constant_of_motion_g, continuity_residual,
    ergodic_time_average, histogram_l1, ks_distance, l1_distance, phase_average,
    EquivarianceReport, Thresholds, Verdict,
};
pub use potential::PotentialSpec;
pub use propagate::{energy_expectation, propagate_split_step};
pub use record::{EvolutionRecord, FlowSampler, Provenance};
pub use trajectory::{advance_trajectory, evolve_ensemble, Ensemble, FlowConfig, Trajectory};
pub use velocity::{velocity_field, VelocityField, DEFAULT_NODE_EPSILON};
pub use wavefunction::WaveFunction;
