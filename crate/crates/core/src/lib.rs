//! Numerical laboratory for criticality-enhanced metrology near the triple
//! points of the anisotropic quantum Rabi model (aQRM) and of the
//! Jaynes–Cummings model with a squeezed mode.
//!
//! The crate is organized in layers:
//!
//! * [`fockspace`] — truncated Fock-space linear algebra (operators, states,
//!   Hermitian diagonalization, squeeze/displacement unitaries);
//! * [`models`] — Hamiltonian builders, closed-form normal-phase and
//!   superradiant-phase solutions, phase classification;
//! * [`qfi`] — quantum Fisher information estimators (analytic, perturbative,
//!   fidelity-based) and the photon-number signal-to-noise ratio;
//! * [`schedules`] — adiabatic modulation paths, gap-slaved ramp laws,
//!   quadrature time grids and closed-form scaling predictions;
//! * [`evolve`] — Schrödinger / Gaussian / Lindblad dynamics along a
//!   schedule, plus the perturbative excitation amplitude;
//! * [`driver`] — sweeps, scaling-law fits, figure-reproduction presets and
//!   the columnar output format used by the `tripoint` CLI.

pub mod driver;
pub mod evolve;
pub mod fockspace;
pub mod models;
pub mod qfi;
pub mod schedules;

use models::PhaseLabel;

/// Crate-wide error type.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A produced state lost more norm to truncation than tolerated.
    #[error("truncation failure: norm leakage {leakage:.3e} exceeds {limit:.3e} at n_max = {n_max}")]
    Truncation {
        leakage: f64,
        limit: f64,
        n_max: usize,
    },
    /// An operation requiring a Hermitian operator received a non-Hermitian one.
    #[error("operator is not Hermitian: max |M - M^dag| = {asymmetry:.3e}")]
    NotHermitian { asymmetry: f64 },
    /// Parameters lie in the wrong phase for the requested closed form.
    #[error("phase error: expected {expected}, found {found:?} at (g1, g2) = ({g1:.6e}, {g2:.6e})")]
    Phase {
        expected: &'static str,
        found: PhaseLabel,
        g1: f64,
        g2: f64,
    },
    /// Both superradiant conditions hold with g1*g2 = 0 off a triple point;
    /// the classification is reported rather than guessed.
    #[error("ambiguous region at (g1, g2) = ({g1:.6e}, {g2:.6e}): both superradiant conditions hold")]
    AmbiguousRegion { g1: f64, g2: f64 },
    /// The ground state is (numerically) degenerate.
    #[error("degenerate ground state: gap {gap:.3e} below threshold {threshold:.3e}")]
    DegenerateGround { gap: f64, threshold: f64 },
    /// A Richardson/step-halving iteration failed to converge.
    #[error("no convergence: estimates {first:.6e} and {second:.6e} disagree at the step floor")]
    NoConvergence { first: f64, second: f64 },
    /// Photon-number variance too small for a meaningful SNR.
    #[error("zero variance: var n = {var_n:.3e} below 1e-14")]
    ZeroVariance { var_n: f64 },
    /// A swept value lies outside the admissible range of a path variant.
    #[error("range error: {what} = {value:.6e} outside admissible ({lo:.6e}, {hi:.6e}]")]
    Range {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    /// The instantaneous gap vanished where a ramp rate was requested.
    #[error("gap closed at (g1, g2) = ({g1:.6e}, {g2:.6e})")]
    GapClosed { g1: f64, g2: f64 },
    /// A (path, ramp) combination with no defined closed-form prediction.
    #[error("unsupported path/ramp combination: {detail}")]
    UnsupportedCombo { detail: String },
    /// Adaptive quadrature failed to meet its convergence certificate.
    #[error("quadrature did not converge: last relative change {rel_change:.3e} (target {target:.3e})")]
    QuadratureNoConvergence { rel_change: f64, target: f64 },
    /// An integrator's order certificate failed.
    #[error("step rejected: error ratio {ratio:.3} under halving, expected >= {expected:.3}")]
    StepRejection { ratio: f64, expected: f64 },
    /// A density matrix developed unacceptable negativity.
    #[error("positivity failure: min eigenvalue {min_eig:.3e} below -1e-4")]
    Positivity { min_eig: f64 },
    /// Fit window contains too few samples.
    #[error("insufficient data: {n} samples in window, need >= {need}")]
    InsufficientData { n: usize, need: usize },
    /// Log-space fit received non-positive values.
    #[error("non-positive data: value {value:.6e} at index {index} cannot be log-transformed")]
    NonPositiveData { value: f64, index: usize },
    /// `reproduce` was asked for an unknown figure.
    #[error("unknown figure id: {id}")]
    UnknownFigure { id: String },
    /// Invalid configuration (CLI or config file).
    #[error("config error: {detail}")]
    Config { detail: String },
}

impl Error {
    /// Process exit code contract: 2 config, 3 physics-domain, 4 numerical
    /// certificate.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::UnknownFigure { .. } => 2,
            Error::Phase { .. }
            | Error::AmbiguousRegion { .. }
            | Error::Range { .. }
            | Error::GapClosed { .. }
            | Error::UnsupportedCombo { .. }
            | Error::ZeroVariance { .. }
            | Error::DegenerateGround { .. }
            | Error::InsufficientData { .. }
            | Error::NonPositiveData { .. } => 3,
            Error::Truncation { .. }
            | Error::NotHermitian { .. }
            | Error::NoConvergence { .. }
            | Error::QuadratureNoConvergence { .. }
            | Error::StepRejection { .. }
            | Error::Positivity { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
