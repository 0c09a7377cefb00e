//! Single-excitation dynamics of artificial light harvesting by a dimerized
//! donor ring with Moebius (pi-flux) or periodic boundary condition.
//!
//! Energies and rates are dimensionless multiples of the donor-acceptor
//! coupling xi; times are the dimensionless product xi*t. See [`units`] for
//! conversion to picoseconds.
//!
//! The pipeline is
//! [`ring`] (site Hamiltonian, Bloch modes, coupling factors) ->
//! [`system`] (photon + acceptor + ring effective generator) ->
//! [`propagator`] (RK4 with loss bookkeeping, transfer efficiency) ->
//! [`analysis`] (sweeps, optimization, tail fits), with [`perturbation`]
//! providing the second-order analytic solution as an independent route.

pub mod analysis;
pub mod eigen;
pub mod error;
pub mod linalg;
pub mod optimize;
pub mod perturbation;
pub mod propagator;
pub mod ring;
pub mod system;
pub mod units;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

pub use analysis::{
    coupling_report, maximize_efficiency, sweep_detuning, sweep_detuning_perturbative,
    tail_decay_fit, CouplingRow, Execution, OptimizeParameter, Optimum, SweepResult, TailFit,
};
pub use perturbation::{
    perturbation_constants, perturbative_amplitudes, perturbative_efficiency,
    renormalized_frequencies, ww_rates, ww_rates_lorentzian, PerturbationSolution,
    RenormalizedFrequencies, WwRates,
};
pub use propagator::{
    acceptor_population, propagate, transfer_efficiency, AmplitudeState, EfficiencyResult,
    PropagationConfig, Termination, Trajectory,
};
pub use ring::{
    band_energy, band_gap, band_phase, gauge_phases, mode_table, momentum_grid, site_hamiltonian,
    Boundary, ModeEntry, ModeTable, RingSpec,
};
pub use eigen::dense_hermitian_eigenvalues;
pub use system::{
    assemble_momentum_generator, assemble_site_generator, pbc_effective_generator, Basis,
    BasisLabel, EffectiveGenerator, SystemSpec,
};
