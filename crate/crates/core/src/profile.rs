//! Shooting solvers for the amplitude-profile equations
//!
//! ```text
//!   radial:    u'' + (n−1)/r · u' + u^{σ+1} = (k·r² + γ0) · u
//!   interval:  u''                + u^{σ+1} = (k1·x + γ0) · u     (1D)
//! ```
//!
//! with σ = 4/n. Three boundary-value problems are covered:
//!
//! - the **ground state** (k = 0, γ0 = 1, whole space): positive,
//!   radially decreasing, exponentially decaying — found by bisection on
//!   u(0) between "crosses zero" and "turns back up" trajectories;
//! - the **Dirichlet ball profile** (k ≤ 0): positive on [0, ρ) with
//!   u(ρ) = 0, found by driving the first zero of the u(0)-shot onto the
//!   ball radius, taking the first solution scanning u(0) upward;
//! - the **interval profile** (linear potential k1·x, 1D): positive on
//!   (−h, h) with u(±h) = 0, found by two-sided shooting matched at the
//!   peak.
//!
//! The radial solves bracket the shooting parameter with an adaptive
//! integrator, then run the bisection itself on the fixed-step
//! integrator that produces the final uniform nodes. Bisecting under any
//! *other* dynamics does not transfer: on wide intervals the trajectory
//! clings to a separatrix, so two integrators that agree to 1e−13 on any
//! single trajectory can still disagree noticeably about which shooting
//! parameter lands the endpoint — the parameter must be resolved under
//! the same arithmetic that generates the nodes.
//!
//! Note on `profile_residual`: the finite-difference defect floors at
//! the rounding level ε·u/h² of the second-derivative stencil, so the
//! measurable residual of an exact solution is limited by node spacing,
//! not by solver quality.

use serde::Serialize;
use std::fmt;

use crate::numerics::{
    hermite_cubic, integrate_adaptive, rk4_step, simpson_uniform, AdaptiveOptions,
};

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileError {
    /// Dimension outside 1–3 (or a 2D/3D request for the 1D-only solver).
    BadDimension(usize),
    /// Tolerance outside [1e−12, 1e−4].
    BadTolerance(f64),
    /// Non-positive ball radius / half-interval, or k > 0 where k ≤ 0 is
    /// required.
    BadPotential(String),
    /// No sign change found while scanning the shooting parameter over
    /// [lo, hi].
    BracketNotFound { lo: f64, hi: f64 },
    /// Bisection failed to land the boundary value.
    NoConvergence,
    /// The accepted trajectory is not positive on the interior.
    PositivityLost,
    /// Fewer nodes than the finite-difference stencil needs.
    TooFewNodes(usize),
}

impl fmt::Display for ProfileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileError::BadDimension(n) => write!(f, "unsupported dimension {n}"),
            ProfileError::BadTolerance(t) => {
                write!(f, "tolerance {t} outside [1e-12, 1e-4]")
            }
            ProfileError::BadPotential(msg) => write!(f, "{msg}"),
            ProfileError::BracketNotFound { lo, hi } => {
                write!(f, "no shooting bracket in scanned range [{lo}, {hi}]")
            }
            ProfileError::NoConvergence => write!(f, "shooting did not converge"),
            ProfileError::PositivityLost => {
                write!(f, "trajectory not positive on the interior")
            }
            ProfileError::TooFewNodes(n) => {
                write!(f, "need at least 5 nodes for the residual stencil, got {n}")
            }
        }
    }
}

impl std::error::Error for ProfileError {}

/// Potential on the right-hand side of the profile equation. Exactly one
/// form is active per profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    /// W(r) = k·r² + γ0, radial in any dimension.
    Quadratic { k: f64 },
    /// W(x) = k1·x + γ0 along the direction `lambda_dir` (1D solve).
    Linear { k1: f64, lambda_dir: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileParams {
    pub n: usize,
    /// Critical exponent, always 4/n.
    pub sigma: f64,
    /// Separation constant γ0.
    pub gamma0: f64,
    pub potential: Potential,
}

impl ProfileParams {
    pub fn k(&self) -> Option<f64> {
        match self.potential {
            Potential::Quadratic { k } => Some(k),
            Potential::Linear { .. } => None,
        }
    }

    pub fn k1(&self) -> Option<f64> {
        match self.potential {
            Potential::Quadratic { .. } => None,
            Potential::Linear { k1, .. } => Some(k1),
        }
    }

    /// Potential value at radius r (quadratic) or coordinate x (linear).
    pub fn potential_at(&self, s: f64) -> f64 {
        match self.potential {
            Potential::Quadratic { k } => k * s * s + self.gamma0,
            Potential::Linear { k1, .. } => k1 * s + self.gamma0,
        }
    }
}

/// A solved amplitude profile on uniform nodes.
///
/// For radial profiles `r_nodes` runs from 0; for the 1D interval
/// profile the nodes are the interval coordinates from −half_interval.
/// `u_center` records the shooting parameter that was found: u(0) for
/// radial solves, the left-end slope for the interval solve.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub params: ProfileParams,
    pub r_nodes: Vec<f64>,
    pub u_values: Vec<f64>,
    /// du/dr at the nodes (the integrator carries it anyway); used for
    /// cubic Hermite sampling and the gradient integrals.
    pub du_values: Vec<f64>,
    pub u_center: f64,
    /// Dirichlet ball radius / half-interval, or +∞ for the decaying
    /// ground state.
    pub support_radius: f64,
    /// Exponential decay rate continuing the profile beyond the last
    /// node (ground state only; compact profiles are zero outside).
    tail_rate: Option<f64>,
}

/// u^(σ+1), extended oddly to negative u so shooting trajectories that
/// dip below zero remain integrable for fractional σ.
fn power_sig1(u: f64, sigma: f64) -> f64 {
    if sigma == 4.0 {
        u * u * u * u * u
    } else if sigma == 2.0 {
        u * u * u
    } else {
        u.signum() * u.abs().powf(sigma + 1.0)
    }
}

/// Right-hand side of the radial equation as a first-order system
/// [u, u']' = [u', −(n−1)/r·u' + W(r)u − u^{σ+1}]; the coordinate
/// singularity at r = 0 is replaced by its series limit
/// u''(0) = (W(0)·u − u^{σ+1})/n.
fn radial_rhs(n: usize, sigma: f64, k: f64, gamma0: f64, r: f64, y: &[f64; 2]) -> [f64; 2] {
    let w = k * r * r + gamma0;
    let force = w * y[0] - power_sig1(y[0], sigma);
    if r == 0.0 {
        [y[1], force / n as f64]
    } else {
        [y[1], force - (n - 1) as f64 / r * y[1]]
    }
}

fn interval_rhs(sigma: f64, k1: f64, gamma0: f64, x: f64, y: &[f64; 2]) -> [f64; 2] {
    let w = k1 * x + gamma0;
    [y[1], w * y[0] - power_sig1(y[0], sigma)]
}

/// Which side of the shooting boundary a trajectory falls on.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Shot {
    Low,
    High,
}

/// Bisect `is_high` to floating-point resolution inside [lo, hi],
/// returning the Low side of the final machine-width bracket — a
/// parameter whose trajectory was actually verified to stay on the
/// surviving branch.
fn bisect_to_machine(mut lo: f64, mut hi: f64, mut is_high: impl FnMut(f64) -> bool) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if is_high(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// Widen a coarse bracket until classify(lo) = Low and classify(hi) =
/// High, so a bracket found under one integrator can seed a bisection
/// under another.
fn ensure_bracket(
    mut lo: f64,
    mut hi: f64,
    factor: f64,
    mut classify: impl FnMut(f64) -> Shot,
) -> Result<(f64, f64), ProfileError> {
    let (orig_lo, orig_hi) = (lo, hi);
    let mut guard = 0;
    while classify(lo) == Shot::High {
        lo /= factor;
        guard += 1;
        if guard > 60 {
            return Err(ProfileError::BracketNotFound {
                lo: orig_lo,
                hi: orig_hi,
            });
        }
    }
    guard = 0;
    while classify(hi) == Shot::Low {
        hi *= factor;
        guard += 1;
        if guard > 60 {
            return Err(ProfileError::BracketNotFound {
                lo: orig_lo,
                hi: orig_hi,
            });
        }
    }
    Ok((lo, hi))
}

fn validate_common(tol: f64) -> Result<(), ProfileError> {
    if !(1e-12..=1e-4).contains(&tol) {
        return Err(ProfileError::BadTolerance(tol));
    }
    Ok(())
}

/// Adaptive-integrator options used by the bracketing scans. The nominal
/// request is tol/100, but a shot trajectory loses up to e^r ·
/// (integration error) of endpoint accuracy, so the tolerance is pinned
/// near round-off regardless — it costs essentially nothing.
fn shot_opts(tol: f64) -> AdaptiveOptions {
    AdaptiveOptions {
        rel_tol: (tol / 100.0).min(1e-13),
        abs_tol: 1e-16,
        h_init: 1e-4,
        h_min: 1e-13,
        max_steps: 50_000_000,
    }
}

const GROUND_R_MAX: f64 = 60.0;
const FINAL_DR: f64 = 1e-4;
/// Trajectories are truncated once u drops below this fraction of u(0):
/// beyond that point shooting sensitivity (δβ·e^r) outruns every
/// attainable tolerance and the analytic tail takes over.
const TAIL_CUT_FRAC: f64 = 1e-7;

/// Ground-state classification: High = crossed zero, Low = turned back
/// upward (or survived to the window end).
fn classify_ground_adaptive(n: usize, sigma: f64, beta: f64, opts: &AdaptiveOptions) -> Shot {
    let rhs = |r: f64, y: &[f64; 2]| radial_rhs(n, sigma, 0.0, 1.0, r, y);
    let result = integrate_adaptive(rhs, 0.0, [beta, 0.0], GROUND_R_MAX, opts, |_, y| {
        y[0] > 0.0 && y[1] <= 0.0
    });
    match result {
        Ok((_, y)) => {
            if y[0] <= 0.0 {
                Shot::High
            } else {
                Shot::Low
            }
        }
        // Step-size underflow right at the separatrix: still positive.
        Err(_) => Shot::Low,
    }
}

/// Same classification under the fixed-step integrator that generates
/// the final nodes. The crossed/turned distinction must be resolved all
/// the way down: stopping early (say at the tail cutoff) would mislabel
/// slow crossers that pass through any finite band on their way to zero.
fn classify_ground_rk4(n: usize, sigma: f64, beta: f64, dr: f64) -> Shot {
    let rhs = |r: f64, y: &[f64; 2]| radial_rhs(n, sigma, 0.0, 1.0, r, y);
    let mut y = [beta, 0.0];
    let steps = (GROUND_R_MAX / dr) as usize;
    for i in 0..steps {
        y = rk4_step(&rhs, i as f64 * dr, &y, dr);
        if y[0] <= 0.0 {
            return Shot::High;
        }
        if y[1] > 0.0 {
            return Shot::Low;
        }
    }
    Shot::Low
}

/// Ground state of Δu + u^{σ+1} − u = 0 (σ = 4/n): positive, radially
/// decreasing, exponentially decaying. The tail beyond the integration
/// window is continued by the known decay u ~ r^{−(n−1)/2}·e^{−r}.
pub fn ground_state(n: usize, tol: f64) -> Result<RadialProfile, ProfileError> {
    if !(1..=3).contains(&n) {
        return Err(ProfileError::BadDimension(n));
    }
    validate_common(tol)?;
    let sigma = 4.0 / n as f64;
    let opts = shot_opts(tol);

    // Upward ladder from just above the constant equilibrium u ≡ 1.
    let mut lo = 1.05;
    if classify_ground_adaptive(n, sigma, lo, &opts) == Shot::High {
        return Err(ProfileError::BracketNotFound { lo, hi: lo });
    }
    let mut hi = None;
    let mut beta = lo * 1.25;
    while beta < 1e4 {
        match classify_ground_adaptive(n, sigma, beta, &opts) {
            Shot::High => {
                hi = Some(beta);
                break;
            }
            Shot::Low => lo = beta,
        }
        beta *= 1.25;
    }
    let hi = hi.ok_or(ProfileError::BracketNotFound { lo: 1.05, hi: 1e4 })?;

    let (lo, hi) = ensure_bracket(lo, hi, 1.25, |b| {
        classify_ground_rk4(n, sigma, b, FINAL_DR)
    })?;
    let beta = bisect_to_machine(lo, hi, |b| {
        classify_ground_rk4(n, sigma, b, FINAL_DR) == Shot::High
    });

    // Final pass on uniform nodes, truncated at the tail cutoff.
    let rhs = |r: f64, y: &[f64; 2]| radial_rhs(n, sigma, 0.0, 1.0, r, y);
    let cut = beta * TAIL_CUT_FRAC;
    let mut r_nodes = vec![0.0];
    let mut u = vec![beta];
    let mut du = vec![0.0];
    let mut y = [beta, 0.0];
    let steps = (GROUND_R_MAX / FINAL_DR) as usize;
    for i in 0..steps {
        y = rk4_step(&rhs, i as f64 * FINAL_DR, &y, FINAL_DR);
        if y[0] <= cut || y[1] > 0.0 {
            break;
        }
        r_nodes.push((i + 1) as f64 * FINAL_DR);
        u.push(y[0]);
        du.push(y[1]);
    }
    if u.len() < 8 {
        return Err(ProfileError::NoConvergence);
    }
    Ok(RadialProfile {
        params: ProfileParams {
            n,
            sigma,
            gamma0: 1.0,
            potential: Potential::Quadratic { k: 0.0 },
        },
        r_nodes,
        u_values: u,
        du_values: du,
        u_center: beta,
        support_radius: f64::INFINITY,
        tail_rate: Some(1.0),
    })
}

/// Dirichlet classification on [0, ball_radius]: High = crossed zero
/// inside the ball (or at its edge), Low = positive throughout,
/// including trajectories that diverge upward — those mean u(0) is still
/// too small.
#[allow(clippy::too_many_arguments)]
fn classify_dirichlet_adaptive(
    n: usize,
    sigma: f64,
    k: f64,
    gamma0: f64,
    radius: f64,
    beta: f64,
    opts: &AdaptiveOptions,
    cap: f64,
) -> Shot {
    let rhs = |r: f64, y: &[f64; 2]| radial_rhs(n, sigma, k, gamma0, r, y);
    let result = integrate_adaptive(rhs, 0.0, [beta, 0.0], radius, opts, |_, y| {
        y[0] > 0.0 && y[0] < cap
    });
    match result {
        Ok((_, y)) => {
            if y[0] <= 0.0 {
                Shot::High
            } else {
                Shot::Low
            }
        }
        Err(_) => Shot::Low,
    }
}

#[allow(clippy::too_many_arguments)]
fn classify_dirichlet_rk4(
    n: usize,
    sigma: f64,
    k: f64,
    gamma0: f64,
    beta: f64,
    dr: f64,
    steps: usize,
    cap: f64,
) -> Shot {
    let rhs = |r: f64, y: &[f64; 2]| radial_rhs(n, sigma, k, gamma0, r, y);
    let mut y = [beta, 0.0];
    for i in 0..steps {
        y = rk4_step(&rhs, i as f64 * dr, &y, dr);
        if y[0] <= 0.0 {
            return Shot::High;
        }
        if y[0] >= cap {
            return Shot::Low;
        }
    }
    Shot::Low
}

/// Positive radial profile of Δu + u^{σ+1} = (k·r² + γ0)u on a ball,
/// vanishing at the boundary: the first positive solution found scanning
/// u(0) upward.
pub fn dirichlet_profile(
    n: usize,
    k: f64,
    gamma0: f64,
    ball_radius: f64,
    tol: f64,
) -> Result<RadialProfile, ProfileError> {
    if !(1..=3).contains(&n) {
        return Err(ProfileError::BadDimension(n));
    }
    validate_common(tol)?;
    if k > 0.0 {
        return Err(ProfileError::BadPotential(format!(
            "quadratic potential strength must satisfy k <= 0, got {k}"
        )));
    }
    let radius_ok = ball_radius.is_finite() && ball_radius > 0.0;
    if !radius_ok {
        return Err(ProfileError::BadPotential(format!(
            "ball_radius must be positive, got {ball_radius}"
        )));
    }
    let sigma = 4.0 / n as f64;
    let opts = shot_opts(tol);
    let cap = 1e5;

    // Scan u(0) upward for the first Low→High transition; extend the
    // ladder downward if even the smallest start already crosses.
    let mut lo = 0.05 * gamma0.abs().max(0.1);
    let scan_start = lo;
    let mut tries = 0;
    while classify_dirichlet_adaptive(n, sigma, k, gamma0, ball_radius, lo, &opts, cap)
        == Shot::High
    {
        lo /= 4.0;
        tries += 1;
        if tries > 20 {
            return Err(ProfileError::BracketNotFound {
                lo,
                hi: scan_start,
            });
        }
    }
    let mut hi = None;
    let mut beta = lo * 1.15;
    while beta < 1e6 {
        match classify_dirichlet_adaptive(n, sigma, k, gamma0, ball_radius, beta, &opts, cap) {
            Shot::High => {
                hi = Some(beta);
                break;
            }
            Shot::Low => lo = beta,
        }
        beta *= 1.15;
    }
    let hi = hi.ok_or(ProfileError::BracketNotFound { lo: scan_start, hi: 1e6 })?;

    let steps = (ball_radius / FINAL_DR).round().max(64.0) as usize;
    let dr = ball_radius / steps as f64;
    let (lo, hi) = ensure_bracket(lo, hi, 1.15, |b| {
        classify_dirichlet_rk4(n, sigma, k, gamma0, b, dr, steps, cap)
    })?;
    let beta = bisect_to_machine(lo, hi, |b| {
        classify_dirichlet_rk4(n, sigma, k, gamma0, b, dr, steps, cap) == Shot::High
    });

    // Final pass over exactly the ball.
    let rhs = |r: f64, y: &[f64; 2]| radial_rhs(n, sigma, k, gamma0, r, y);
    let mut r_nodes = Vec::with_capacity(steps + 1);
    let mut u = Vec::with_capacity(steps + 1);
    let mut du = Vec::with_capacity(steps + 1);
    r_nodes.push(0.0);
    u.push(beta);
    du.push(0.0);
    let mut y = [beta, 0.0];
    for i in 0..steps {
        y = rk4_step(&rhs, i as f64 * dr, &y, dr);
        r_nodes.push((i + 1) as f64 * dr);
        u.push(y[0]);
        du.push(y[1]);
    }
    // The machine-width bisection leaves |u(ball_radius)| at the
    // round-off floor of the trajectory; the node is stored as computed
    // rather than clamped, so the residual stencils see a consistent
    // solution of the discrete dynamics.
    if u[steps].abs() > 1e-5 * beta {
        return Err(ProfileError::NoConvergence);
    }
    if u[..steps].iter().skip(1).any(|&v| v <= 0.0) {
        return Err(ProfileError::PositivityLost);
    }

    Ok(RadialProfile {
        params: ProfileParams {
            n,
            sigma,
            gamma0,
            potential: Potential::Quadratic { k },
        },
        r_nodes,
        u_values: u,
        du_values: du,
        u_center: beta,
        support_radius: ball_radius,
        tail_rate: None,
    })
}

/// Interval classification: High = trajectory crossed zero (or ran away
/// past the cap) before the right end — the slope is too large.
fn classify_stark_adaptive(
    sigma: f64,
    k1: f64,
    gamma0: f64,
    h_int: f64,
    slope: f64,
    opts: &AdaptiveOptions,
    cap: f64,
) -> Shot {
    let rhs = |x: f64, y: &[f64; 2]| interval_rhs(sigma, k1, gamma0, x, y);
    let result = integrate_adaptive(rhs, -h_int, [0.0, slope], h_int, opts, |x, y| {
        // The launch node itself has u = 0.
        x == -h_int || (y[0] > 0.0 && y[0] < cap)
    });
    match result {
        Ok((x, y)) => {
            if y[0] <= 0.0 && x < h_int || y[0] >= cap {
                Shot::High
            } else {
                Shot::Low
            }
        }
        Err(_) => Shot::Low,
    }
}

/// Fixed-step walk of the interval system: `steps` RK4 steps of signed
/// size `dx` from (x0, y0), returning all node states including the
/// start.
fn rk4_walk(
    rhs: &impl Fn(f64, &[f64; 2]) -> [f64; 2],
    x0: f64,
    y0: [f64; 2],
    dx: f64,
    steps: usize,
) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(y0);
    let mut y = y0;
    for i in 0..steps {
        y = rk4_step(rhs, x0 + i as f64 * dx, &y, dx);
        out.push(y);
    }
    out
}

/// 1D profile of u'' + u^{σ+1} = (k1·x + γ0)u on [−h, h] with Dirichlet
/// ends, positive inside.
///
/// Single shooting across the whole interval is hopeless here: the
/// trajectory climbs ~e^h from the wall value to the core and descends
/// again, so rounding committed in the core returns to the far wall
/// amplified by ~e^h while the endpoint's sensitivity to the launch
/// slope stays O(1) — on wide intervals the wall condition cannot pin
/// the slope to better than a few percent. Instead both walls are
/// launched exactly at u = 0 (left on slope sL, right on slope −sR),
/// each half is integrated in its well-conditioned direction, and
/// Newton drives the (u, u′) mismatch at an interior meeting node to
/// round-off. The wall-to-wall shot is still used once, at the
/// bracketing stage's slope, to seed sL, sR and the meeting node.
///
/// One limit is intrinsic to the problem rather than the method: the
/// trajectory's conserved-energy scale at the walls is ~e^{−2h}, so
/// once h is large enough that this dips toward the integrator's
/// round-off energy drift (h ≳ 14 in double precision for k1 = 0,
/// γ0 = 1), the returned curve still satisfies the equation to solver
/// accuracy but its peak position is only determined to
/// O(drift · e^{2h}).
pub fn stark_profile_1d(
    k1: f64,
    gamma0: f64,
    half_interval: f64,
    tol: f64,
) -> Result<RadialProfile, ProfileError> {
    validate_common(tol)?;
    let interval_ok = half_interval.is_finite() && half_interval > 0.0;
    if !interval_ok {
        return Err(ProfileError::BadPotential(format!(
            "half_interval must be positive, got {half_interval}"
        )));
    }
    let sigma = 4.0;
    let opts = shot_opts(tol);
    let cap = (10.0 * (k1.abs() * half_interval + gamma0.abs()).max(1.0)).max(1e4);

    // Coarse ladder on the left-end slope, then an adaptive bisection;
    // its answer is only a seed (see above), so its noise floor is fine.
    let mut lo = 1e-12;
    let mut hi = None;
    let mut slope = lo * 4.0;
    while slope < 1e8 {
        match classify_stark_adaptive(sigma, k1, gamma0, half_interval, slope, &opts, cap) {
            Shot::High => {
                hi = Some(slope);
                break;
            }
            Shot::Low => lo = slope,
        }
        slope *= 4.0;
    }
    let hi = hi.ok_or(ProfileError::BracketNotFound { lo: 1e-12, hi: 1e8 })?;
    let seed = bisect_to_machine(lo, hi, |s| {
        classify_stark_adaptive(sigma, k1, gamma0, half_interval, s, &opts, cap) == Shot::High
    });

    let span = 2.0 * half_interval;
    let steps = ((span / FINAL_DR).round() as usize).clamp(64, 400_000);
    let dx = span / steps as f64;
    let rhs = |x: f64, y: &[f64; 2]| interval_rhs(sigma, k1, gamma0, x, y);

    // Probe pass: locate the peak node and read off slope seeds.
    let probe = rk4_walk(&rhs, -half_interval, [0.0, seed], dx, steps);
    let mut m_idx = 0;
    let mut peak_seed = 0.0_f64;
    let mut right_seed = seed;
    for (i, y) in probe.iter().enumerate() {
        if i > 0 && y[0] <= 0.0 {
            break;
        }
        right_seed = y[1].abs().max(1e-300);
        if y[0] > peak_seed {
            peak_seed = y[0];
            m_idx = i;
        }
    }
    if m_idx == 0 || m_idx >= steps {
        return Err(ProfileError::NoConvergence);
    }
    let left_steps = m_idx;
    let right_steps = steps - m_idx;

    // Newton on (sL, sR): match value and derivative where the halves meet.
    let eval = |s_l: f64, s_r: f64| -> (Vec<[f64; 2]>, Vec<[f64; 2]>, [f64; 2]) {
        let left = rk4_walk(&rhs, -half_interval, [0.0, s_l], dx, left_steps);
        let right = rk4_walk(&rhs, half_interval, [0.0, -s_r], -dx, right_steps);
        let gap = [
            left[left_steps][0] - right[right_steps][0],
            left[left_steps][1] - right[right_steps][1],
        ];
        (left, right, gap)
    };

    let mut s_l = seed;
    let mut s_r = right_seed;
    let (mut left, mut right, mut gap) = eval(s_l, s_r);
    let gap_tol = 1e-11 * peak_seed.max(1e-300);
    let mut converged = false;
    for _ in 0..60 {
        let norm = gap[0].abs() + gap[1].abs();
        if norm <= gap_tol {
            converged = true;
            break;
        }
        let d_l = 1e-7 * s_l;
        let d_r = 1e-7 * s_r;
        let (_, _, gap_l) = eval(s_l + d_l, s_r);
        let (_, _, gap_r) = eval(s_l, s_r + d_r);
        let j00 = (gap_l[0] - gap[0]) / d_l;
        let j10 = (gap_l[1] - gap[1]) / d_l;
        let j01 = (gap_r[0] - gap[0]) / d_r;
        let j11 = (gap_r[1] - gap[1]) / d_r;
        let det = j00 * j11 - j01 * j10;
        if det == 0.0 || !det.is_finite() {
            return Err(ProfileError::NoConvergence);
        }
        let mut step_l = (gap[0] * j11 - gap[1] * j01) / det;
        let mut step_r = (j00 * gap[1] - j10 * gap[0]) / det;
        // Damp: halve the step until the residual actually shrinks and
        // both slopes stay positive.
        let mut accepted = false;
        for _ in 0..30 {
            let try_l = s_l - step_l;
            let try_r = s_r - step_r;
            if try_l > 0.0 && try_r > 0.0 {
                let (new_left, new_right, new_gap) = eval(try_l, try_r);
                if new_gap[0].abs() + new_gap[1].abs() < norm {
                    s_l = try_l;
                    s_r = try_r;
                    left = new_left;
                    right = new_right;
                    gap = new_gap;
                    accepted = true;
                    break;
                }
            }
            step_l *= 0.5;
            step_r *= 0.5;
        }
        if !accepted {
            // Stalled: accept if already near round-off, else fail.
            converged = gap[0].abs() + gap[1].abs() <= 1e-9 * peak_seed;
            break;
        }
    }
    if !converged {
        let norm = gap[0].abs() + gap[1].abs();
        if norm > 1e-9 * peak_seed {
            return Err(ProfileError::NoConvergence);
        }
    }

    // Stitch the halves; the left value wins at the meeting node.
    let mut r_nodes = Vec::with_capacity(steps + 1);
    let mut u = vec![0.0; steps + 1];
    let mut du = vec![0.0; steps + 1];
    for i in 0..=steps {
        r_nodes.push(-half_interval + i as f64 * dx);
    }
    for (i, y) in left.iter().enumerate() {
        u[i] = y[0];
        du[i] = y[1];
    }
    for (j, y) in right.iter().enumerate().take(right_steps) {
        u[steps - j] = y[0];
        du[steps - j] = y[1];
    }
    if u[1..steps].iter().any(|&v| v <= 0.0) {
        return Err(ProfileError::PositivityLost);
    }

    Ok(RadialProfile {
        params: ProfileParams {
            n: 1,
            sigma,
            gamma0,
            potential: Potential::Linear {
                k1,
                lambda_dir: vec![1.0],
            },
        },
        r_nodes,
        u_values: u,
        du_values: du,
        u_center: s_l,
        support_radius: half_interval,
        tail_rate: None,
    })
}

/// Max interior-node defect of the governing ODE, via 4th-order central
/// finite differences on the uniform nodes.
pub fn profile_residual(profile: &RadialProfile) -> Result<f64, ProfileError> {
    let m = profile.u_values.len();
    if m < 5 {
        return Err(ProfileError::TooFewNodes(m));
    }
    let h = profile.r_nodes[1] - profile.r_nodes[0];
    let u = &profile.u_values;
    let p = &profile.params;
    let mut worst = 0.0_f64;
    for i in 2..m - 2 {
        let d1 = (-u[i + 2] + 8.0 * u[i + 1] - 8.0 * u[i - 1] + u[i - 2]) / (12.0 * h);
        let d2 = (-u[i + 2] + 16.0 * u[i + 1] - 30.0 * u[i] + 16.0 * u[i - 1] - u[i - 2])
            / (12.0 * h * h);
        let s = profile.r_nodes[i];
        let friction = match p.potential {
            Potential::Quadratic { .. } if s > 0.0 => (p.n - 1) as f64 / s * d1,
            _ => 0.0,
        };
        let defect = d2 + friction + power_sig1(u[i], p.sigma) - p.potential_at(s) * u[i];
        worst = worst.max(defect.abs());
    }
    Ok(worst)
}

impl RadialProfile {
    /// True for the 1D interval (linear-potential) profile, whose nodes
    /// are signed coordinates rather than radii.
    pub fn is_interval(&self) -> bool {
        matches!(self.params.potential, Potential::Linear { .. })
    }

    /// Sample the profile at radius r (radial profiles) or coordinate x
    /// (interval profiles) by cubic Hermite interpolation on the nodes,
    /// the analytic exponential tail beyond the window, and zero outside
    /// compact support.
    pub fn evaluate(&self, s: f64) -> f64 {
        let first = self.r_nodes[0];
        let last = *self.r_nodes.last().unwrap();
        let s = if self.is_interval() { s } else { s.abs() };
        if s < first {
            return 0.0; // interval profile queried left of the box
        }
        if s > last {
            return match self.tail_rate {
                Some(rate) => {
                    let u_last = *self.u_values.last().unwrap();
                    let alg = (last / s).powf((self.params.n - 1) as f64 / 2.0);
                    u_last * alg * (-rate * (s - last)).exp()
                }
                None => 0.0,
            };
        }
        let h = self.r_nodes[1] - self.r_nodes[0];
        let cell = (((s - first) / h) as usize).min(self.u_values.len() - 2);
        let frac = (s - self.r_nodes[cell]) / h;
        hermite_cubic(
            self.u_values[cell],
            self.u_values[cell + 1],
            self.du_values[cell],
            self.du_values[cell + 1],
            frac,
            h,
        )
    }

    pub fn max_value(&self) -> f64 {
        self.u_values.iter().cloned().fold(0.0_f64, f64::max)
    }

    /// Node coordinate of the profile maximum.
    pub fn argmax(&self) -> f64 {
        let mut best = 0;
        for (i, v) in self.u_values.iter().enumerate() {
            if *v > self.u_values[best] {
                best = i;
            }
        }
        self.r_nodes[best]
    }

    /// Distance from the peak to where the profile first falls below
    /// half its maximum (minimum over both sides for interval profiles).
    pub fn half_max_width(&self) -> f64 {
        let half = 0.5 * self.max_value();
        let mut best = 0;
        for (i, v) in self.u_values.iter().enumerate() {
            if *v > self.u_values[best] {
                best = i;
            }
        }
        let h = self.r_nodes[1] - self.r_nodes[0];
        let mut right = f64::INFINITY;
        for i in best..self.u_values.len() {
            if self.u_values[i] < half {
                right = self.r_nodes[i] - self.r_nodes[best];
                break;
            }
        }
        if !self.is_interval() {
            return if right.is_finite() { right } else { h };
        }
        let mut left = f64::INFINITY;
        for i in (0..=best).rev() {
            if self.u_values[i] < half {
                left = self.r_nodes[best] - self.r_nodes[i];
                break;
            }
        }
        let w = right.min(left);
        if w.is_finite() {
            w
        } else {
            h
        }
    }

    fn surface_factor(&self) -> f64 {
        match self.params.n {
            1 => 2.0,
            2 => 2.0 * std::f64::consts::PI,
            _ => 4.0 * std::f64::consts::PI,
        }
    }

    /// ∫ f(u, u', s) dx over R^n: radial profiles get the surface-measure
    /// weight S_{n−1}·s^{n−1}, interval profiles integrate directly.
    fn weighted_integral(&self, mut f: impl FnMut(f64, f64, f64) -> f64) -> f64 {
        let h = self.r_nodes[1] - self.r_nodes[0];
        let vals: Vec<f64> = self
            .r_nodes
            .iter()
            .zip(self.u_values.iter().zip(&self.du_values))
            .map(|(&s, (&u, &du))| {
                let w = if self.is_interval() {
                    1.0
                } else {
                    s.powi(self.params.n as i32 - 1)
                };
                f(u, du, s) * w
            })
            .collect();
        let factor = if self.is_interval() {
            1.0
        } else {
            self.surface_factor()
        };
        factor * simpson_uniform(&vals, h)
    }

    /// ∫ u² over R^n (the squared L² norm).
    pub fn mass(&self) -> f64 {
        self.weighted_integral(|u, _, _| u * u)
    }

    pub fn l2_norm(&self) -> f64 {
        self.mass().sqrt()
    }

    /// ∫ |∇u|² over R^n.
    pub fn grad_norm_sq(&self) -> f64 {
        self.weighted_integral(|_, du, _| du * du)
    }

    /// ∫ u^p over R^n (u ≥ 0).
    pub fn power_integral(&self, p: f64) -> f64 {
        self.weighted_integral(|u, _, _| u.abs().powf(p))
    }

    /// ∫ u²·|x|² over R^n — the second moment about the profile center.
    pub fn second_moment(&self) -> f64 {
        self.weighted_integral(|u, _, s| u * u * s * s)
    }

    /// Energy functional H[u] = ‖∇u‖² − 2/(σ+2)·‖u‖_{σ+2}^{σ+2}.
    pub fn energy(&self) -> f64 {
        let sp2 = self.params.sigma + 2.0;
        self.grad_norm_sq() - 2.0 / sp2 * self.power_integral(sp2)
    }
}
