//! Vacuum electron-positron pair production in chirped laser pulses.
//!
//! Each longitudinal momentum mode is integrated independently as a
//! four-component ODE; spectra, densities and parameter scans are built on
//! top. Everything numeric is generic over [`scalar::Real`]; the aliases
//! below fix the working precision to `f64`.

pub mod config;
pub mod field;
pub mod grid;
pub mod io;
pub mod observables;
pub mod oracle;
pub mod rk;
pub mod scalar;
pub mod solver;
pub mod sweeps;

pub use rk::Method;

pub type ChirpedPulse = field::ChirpedPulse<f64>;
pub type FieldConfig = field::FieldConfig<f64>;
pub type ModeParams = solver::ModeParams<f64>;
pub type ModeState = solver::ModeState<f64>;
pub type SolverOptions = solver::SolverOptions<f64>;
pub type ModeResult = solver::ModeResult<f64>;
pub type MomentumGrid = grid::MomentumGrid<f64>;
pub type Spectrum = observables::Spectrum<f64>;
pub type DensityResult = observables::DensityResult<f64>;
pub type OracleOptions = oracle::OracleOptions<f64>;
pub type SweepSpec = sweeps::SweepSpec<f64>;
pub type SweepResult = sweeps::SweepResult<f64>;
