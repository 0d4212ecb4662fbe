//! Self-similar solutions of the critical nonlinear Schrödinger equation
//!
//! ```text
//!     i Ψ_t + ΔΨ + |Ψ|^σ Ψ = 0,      σ = 4/n,   x ∈ R^n,  n ∈ {1,2,3},
//! ```
//!
//! built hydrodynamically: an elliptic amplitude profile A0 (ground
//! state, quadratic-potential ball profile, or linear-potential interval
//! profile) is married to a quadratic-phase velocity field V = a(t)x
//! (+ b(t)Λ), giving exact solutions whose width, amplitude and phase
//! follow closed-form time flows. The virial quadratic
//! M(t) = 4Ht² + M'(0)t + M(0) classifies decay vs. finite-time collapse
//! and pins the blow-up time; a split-step Fourier integrator provides
//! an independent check on every construction.
//!
//! Modules:
//! - [`fields`]: grids, wave fields, spectral derivatives, quadrature
//! - [`profile`]: shooting solvers for the amplitude profiles
//! - [`timeflow`]: virial coefficients, scale/phase flows, blow-up report
//! - [`constructor`]: assembly of Ψ(x,t) and the Madelung maps
//! - [`diagnostics`]: conserved functionals, inequalities, rate fitting
//! - [`splitstep`]: the direct Strang-splitting NLS integrator
//! - [`io`]: `.wfield`, CSV and JSON export

pub mod constructor;
pub mod diagnostics;
pub mod fields;
pub(crate) mod numerics;
pub mod profile;
pub(crate) mod spectral;
pub mod splitstep;
#[cfg(test)]
pub(crate) mod testkit;
pub mod timeflow;

pub use constructor::{
    build_general_solution, build_merle_solution, build_solution, initial_coefficients,
    madelung_compose, madelung_decompose, nls_residual, ConstructorError, SolutionSpec,
};
pub use diagnostics::{
    default_rate_window, fit_rate, functionals, hoelder_check, log_spaced_times,
    mass_threshold_check, DiagnosticsError, FunctionalReport, MassThreshold, RateFit,
};
pub use fields::{
    make_grid, quadrature_integrate, spectral_derivatives, FieldError, Grid, MadelungFields,
    SpectralDerivatives, WaveField,
};
pub use profile::{
    dirichlet_profile, ground_state, profile_residual, stark_profile_1d, Potential, ProfileError,
    ProfileParams, RadialProfile,
};
pub use splitstep::{
    compare, evolve, EvolveConfig, EvolveOutcome, RunRecord, SplitstepError, StopReason,
    DEFAULT_AMP_CEILING, DEFAULT_CONTAINMENT_THRESHOLD,
};
pub use timeflow::{
    a_closed_form, classify_blowup, functional_timeflow, general_timeflow, integrate_a_ode,
    phase_integral, profile_timeflow, q_lambda, virial_coefficients, AOdeTrajectory, BlowupRegime,
    BlowupReport, FlowMode, FunctionalFlow, TimeFlow, TimeflowError, VirialCoefficients,
};
