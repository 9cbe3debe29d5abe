//! Tunneling-time observables for one-dimensional wave packets.
//!
//! What a barrier does to a transmitted packet is carried by two energy
//! derivatives of the transmission amplitude A at the packet's mean
//! momentum: the phase time tau_w (argument) and the amplitude time tau_a
//! (log modulus). `scattering` computes A on momentum grids by transfer
//! matrices, `times` differentiates it, `asymptotics` maps an initial
//! Wigner distribution to the transmitted coordinate distribution through
//! the causal propagator T(r, p), exactly and to first order in the
//! packet's momentum spread, and `tdse` is the independent split-operator
//! integrator the asymptotic chain is held against. `experiment` runs the
//! same computations from plain-text configs; the `ttime` binary wraps it.
//!
//! The examples are the guided tour:
//!
//! - `amplitudes`: transfer-matrix amplitudes against the rectangular
//!   closed form, and unitarity across the grid.
//! - `tunneling_times`: tau_w, tau_a, tau_bl over a width sweep, with the
//!   thin/thick crossover where the phase time turns negative.
//! - `causal_propagator`: T(r, p) columns, their causality figure, and the
//!   kernel mass identity against |A|^2.
//! - `transmitted_distribution`: exact kernel quadrature next to the
//!   first-order form near the free peak.
//! - `peak_shift_sweep`: the transmitted peak's advance over time, its
//!   sign change, and the half-height relation.
//! - `free_packet_baseline`: every method on a zero barrier, where the
//!   free marginal and spreading law are exact references.
//! - `tdse_cross_check`: grid evolution vs the asymptotic prediction for
//!   transmission and peak advance.
//! - `run_experiment`: the config-file front end driven from code.

pub mod asymptotics;
pub mod config;
pub mod error;
pub mod experiment;
pub mod potential;
pub mod report;
pub mod scattering;
pub mod tdse;
pub mod times;
pub mod wigner;

pub use asymptotics::{
    centered_q_grid, gaussian_first_order, gaussian_first_order_table, half_height_shift,
    peak_location, propagator_column, shift_observables, transmission_propagator,
    transmitted_exact, transmitted_first_order, transmitted_first_order_table, Method,
    PropagatorColumn, PropagatorOptions, ShiftObservables, TransmittedDistribution,
};
pub use num_complex::Complex64;

pub use config::Config;
pub use error::{Error, Result};
pub use experiment::{list_experiments, run_experiment, validate_config, ExperimentKind};
pub use potential::{Barrier, BarrierKind, Slab};
pub use report::{format_value, write_atomic, CsvTable, Summary};
pub use tdse::{
    evolve, evolve_with_snapshots, momentum_weighted_transmission, transmitted_observables,
    EvolutionSetup, Evolved, Snapshot, SpatialGrid, TransmittedObservables,
};

pub use scattering::{
    amplitude_pair, default_kappa_grid, rectangular_closed_form,
    rectangular_closed_form_polar, sigma_max_default, transmission_amplitude,
    transmission_amplitudes, uniform_grid, Amplitude, GridForm, ScatteringAmplitudes,
    DEFAULT_KAPPA_POINTS,
};
pub use times::{phase_derivative_diagnostics, tunneling_times, TunnelingTimes};
pub use wigner::{GaussianWignerState, SampledDistribution, StepTestDistribution};
