//! Shared fixtures for the unit tests: the expensive reference profiles
//! are solved once per test binary, and the potential-free collapse
//! coefficients are assembled the same way everywhere.

use std::sync::OnceLock;

use crate::constructor::SolutionSpec;
use crate::fields::{quadrature_integrate, WaveField};
use crate::profile::{dirichlet_profile, ground_state, RadialProfile};
use crate::timeflow::{profile_timeflow, virial_coefficients, VirialCoefficients};

static GS1: OnceLock<RadialProfile> = OnceLock::new();

/// The 1D decaying profile, solved to 1e-10.
pub fn gs1() -> &'static RadialProfile {
    GS1.get_or_init(|| ground_state(1, 1e-10).expect("ground state"))
}

static BALL: OnceLock<RadialProfile> = OnceLock::new();

/// Wall-cut profile with k = −0.5 placed well past its turning point:
/// √(γ0/|k|) ≈ 5.7 would never reach zero; radius 3 with γ0 = 16
/// catches the exponentially small tail of the soliton branch, so the
/// wall slope is ~3e−4 and the seam barely perturbs the functionals.
pub fn ball() -> &'static RadialProfile {
    BALL.get_or_init(|| dirichlet_profile(1, -0.5, 16.0, 3.0, 1e-8).expect("ball profile"))
}

/// Potential-free collapse coefficients: H[A0] = 0 analytically for the
/// decaying profile, so the chirp is the entire energy. Built from
/// exact scalings of m0 so that K lands on 0.0 in floating point
/// whenever a0 does (e.g. a0 = −1).
pub fn collapse_vc(profile: &RadialProfile, a0: f64) -> VirialCoefficients {
    let m0 = profile.second_moment();
    virial_coefficients(a0 * a0 * m0 / 4.0, m0, 2.0 * a0 * m0, profile.mass()).unwrap()
}

/// Decaying-profile scaling-family spec with the given chirp rate,
/// constant phase and center.
pub fn collapse_spec(a0: f64, theta: f64, x0: f64) -> SolutionSpec {
    let profile = gs1().clone();
    let vc = collapse_vc(&profile, a0);
    let flow = profile_timeflow(vc, 1.0, 1).unwrap();
    SolutionSpec::new(
        profile,
        flow,
        Some(vc),
        vec![x0],
        vec![0.0],
        theta,
        0.0,
        None,
        None,
    )
    .unwrap()
}

/// ∫|Ψ|² by the grid quadrature.
pub fn mass_of(field: &WaveField) -> f64 {
    let rho: Vec<f64> = field.values.iter().map(|v| v.norm_sqr()).collect();
    quadrature_integrate(&rho, &field.grid).unwrap()
}
