//! Time-dependent coefficients of the self-similar solutions
//!
//! The second moment of a wave field, M(t) = ∫ρ|x|² dx, evolves as an
//! explicit quadratic
//!
//! ```text
//!   M(t) = 4·H·t² + M'(0)·t + M(0),      M''(t) = 8H,
//! ```
//!
//! which makes the whole temporal skeleton of a self-similar solution
//! closed-form: the contraction rate a(t) = M'(t)/(2M(t)), the scale
//! factor s(t) = √(M(t)/M(0)), the phase quadrature γ0·M(0)·∫ dτ/M(τ),
//! and the collapse time (the smallest positive root of M, if any).
//! The discriminant combination K = 16·H·M(0) − M'(0)² and its
//! normalization k = K/(16·M(0)²) split the regimes: k > 0 decays,
//! k ≤ 0 collapses in finite time whenever M has a positive root.
//!
//! A second family drives a drifting solution with velocity field
//! a(t)·x + b(t)·Λ: there a' + a² = 0, so s(t) = 1 + a0·t, and b, the
//! drift integral and the phase reduce to rational functions of s.
//! [`TimeFlow`] packages either family behind the same evaluators and
//! refuses evaluation outside the window where the scale is positive.

use serde::Serialize;
use std::fmt;

use crate::numerics::{integrate_adaptive, integrate_simpson, AdaptiveOptions};

#[derive(Debug, Clone, PartialEq)]
pub enum TimeflowError {
    /// Nonpositive initial second moment.
    BadMoment(f64),
    /// Nonpositive mass.
    BadMass(f64),
    /// Dimension outside 1–3.
    BadDimension(usize),
    /// Tolerance outside [1e−12, 1e−6].
    BadTolerance(f64),
    /// Invalid argument combination, described in the message.
    BadInput(String),
    /// Evaluation outside the window on which the flow is defined.
    OutOfDomain { t: f64, lo: f64, hi: f64 },
    /// The moment inequality M(0)·N·|Λ|² ≥ Q(0)² fails, so no state can
    /// have the supplied functionals.
    HoelderViolated(f64),
    /// The integrator stopped making progress (step budget exhausted).
    Stalled(f64),
}

impl fmt::Display for TimeflowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeflowError::BadMoment(m) => {
                write!(f, "initial second moment must be positive, got {m}")
            }
            TimeflowError::BadMass(n) => write!(f, "mass must be positive, got {n}"),
            TimeflowError::BadDimension(n) => write!(f, "unsupported dimension {n}"),
            TimeflowError::BadTolerance(t) => {
                write!(f, "tolerance {t} outside [1e-12, 1e-6]")
            }
            TimeflowError::BadInput(msg) => write!(f, "{msg}"),
            TimeflowError::OutOfDomain { t, lo, hi } => {
                write!(f, "t = {t} outside the validity window ({lo}, {hi})")
            }
            TimeflowError::HoelderViolated(c) => {
                write!(
                    f,
                    "moment inequality violated: M(0)·N·|Λ|² − Q(0)² = {c} < 0"
                )
            }
            TimeflowError::Stalled(t) => write!(f, "integration stalled at t = {t}"),
        }
    }
}

impl std::error::Error for TimeflowError {}

/// Real roots of c2·t² + c1·t + c0 in ascending order, computed with
/// the sign-matched stable formulation (no cancellation in either root).
fn quadratic_roots(c2: f64, c1: f64, c0: f64) -> Vec<f64> {
    if c2 == 0.0 {
        if c1 == 0.0 {
            return Vec::new();
        }
        return vec![-c0 / c1];
    }
    let disc = c1 * c1 - 4.0 * c2 * c0;
    if disc < 0.0 {
        return Vec::new();
    }
    if disc == 0.0 {
        return vec![-c1 / (2.0 * c2)];
    }
    let q = -0.5 * (c1 + c1.signum() * disc.sqrt());
    let (r1, r2) = (q / c2, c0 / q);
    if r1 <= r2 {
        vec![r1, r2]
    } else {
        vec![r2, r1]
    }
}

/// Conserved quantities that pin the moment quadratic M(t), together
/// with the derived discriminant K and its normalization k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VirialCoefficients {
    /// Conserved energy H.
    #[serde(rename = "H")]
    pub energy: f64,
    /// Initial second moment M(0).
    #[serde(rename = "M0")]
    pub m0: f64,
    /// Initial moment rate M'(0).
    #[serde(rename = "M0p")]
    pub m0p: f64,
    /// Conserved mass N = ∫ρ.
    #[serde(rename = "N")]
    pub mass: f64,
    /// K = 16·H·M(0) − M'(0)².
    #[serde(rename = "K")]
    pub big_k: f64,
    /// k = K / (16·M(0)²).
    #[serde(rename = "k")]
    pub small_k: f64,
}

pub fn virial_coefficients(
    energy: f64,
    m0: f64,
    m0p: f64,
    mass: f64,
) -> Result<VirialCoefficients, TimeflowError> {
    if !(m0.is_finite() && m0 > 0.0) {
        return Err(TimeflowError::BadMoment(m0));
    }
    if !(mass.is_finite() && mass > 0.0) {
        return Err(TimeflowError::BadMass(mass));
    }
    let big_k = 16.0 * energy * m0 - m0p * m0p;
    Ok(VirialCoefficients {
        energy,
        m0,
        m0p,
        mass,
        big_k,
        small_k: big_k / (16.0 * m0 * m0),
    })
}

impl VirialCoefficients {
    /// The moment quadratic M(t) = 4·H·t² + M'(0)·t + M(0).
    pub fn m(&self, t: f64) -> f64 {
        (4.0 * self.energy * t + self.m0p) * t + self.m0
    }

    /// M'(t) = 8·H·t + M'(0).
    pub fn m_prime(&self, t: f64) -> f64 {
        8.0 * self.energy * t + self.m0p
    }

    /// Initial contraction rate a(0) = M'(0)/(2·M(0)).
    pub fn a0(&self) -> f64 {
        self.m0p / (2.0 * self.m0)
    }

    /// Open interval around t = 0 on which M(t) stays positive.
    pub fn positive_window(&self) -> (f64, f64) {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for r in quadratic_roots(4.0 * self.energy, self.m0p, self.m0) {
            if r < 0.0 {
                lo = lo.max(r);
            } else {
                hi = hi.min(r);
            }
        }
        (lo, hi)
    }

    /// Smallest positive root of M(t), where the moment vanishes and
    /// the contracted solution ceases to exist.
    pub fn collapse_time(&self) -> Option<f64> {
        let (_, hi) = self.positive_window();
        hi.is_finite().then_some(hi)
    }
}

/// Contraction rate a(t) = M'(t)/(2·M(t)) of a moment-driven flow.
///
/// Defined while M stays positive; evaluation at or beyond a root of M
/// is an error.
pub fn a_closed_form(vc: &VirialCoefficients, t: f64) -> Result<f64, TimeflowError> {
    let m = vc.m(t);
    let inside = t.is_finite() && m > 0.0;
    if !inside {
        let (lo, hi) = vc.positive_window();
        return Err(TimeflowError::OutOfDomain { t, lo, hi });
    }
    Ok(vc.m_prime(t) / (2.0 * m))
}

/// Accumulated phase γ0·M(0)·∫₀ᵗ dτ/M(τ) by adaptive quadrature
/// (absolute tolerance 1e−10).
pub fn phase_integral(
    vc: &VirialCoefficients,
    gamma0: f64,
    t: f64,
) -> Result<f64, TimeflowError> {
    if gamma0 == 0.0 {
        return Ok(0.0);
    }
    let (lo, hi) = vc.positive_window();
    if !(t.is_finite() && t > lo && t < hi) {
        return Err(TimeflowError::OutOfDomain { t, lo, hi });
    }
    let integral = integrate_simpson(|tau| 1.0 / vc.m(tau), 0.0, t, 1e-10);
    Ok(gamma0 * vc.m0 * integral)
}

/// Sampled solution of the contraction-rate system
///
/// ```text
///   a' = 4·k·E² − a²,    E' = −2·a·E,    a(0) = a0,  E(0) = 1,
/// ```
///
/// where E(t) = exp(−2∫₀ᵗ a) is the inverse squared scale factor
/// carried alongside a(t) so the equation stays autonomous.
#[derive(Debug, Clone)]
pub struct AOdeTrajectory {
    pub times: Vec<f64>,
    pub a_values: Vec<f64>,
    /// exp(−2∫₀ᵗ a) at the same sample times.
    pub inv_scale_sq: Vec<f64>,
    /// True when |a| crossed 1/tol before `t_end`: the rate diverged in
    /// finite time and the last sample sits at the stopping point.
    pub singular: bool,
}

/// Integrate the contraction-rate equation a' + a² = 4·k·exp(−4∫a)
/// adaptively up to `t_end`, stopping early (with the `singular` flag
/// set) when |a| exceeds 1/tol. A singularity is reported as data, not
/// as an error.
pub fn integrate_a_ode(
    a0: f64,
    k: f64,
    t_end: f64,
    tol: f64,
) -> Result<AOdeTrajectory, TimeflowError> {
    if !(1e-12..=1e-6).contains(&tol) {
        return Err(TimeflowError::BadTolerance(tol));
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(TimeflowError::BadInput(format!(
            "t_end must be positive and finite, got {t_end}"
        )));
    }
    let cap = 1.0 / tol;
    let rhs = |_t: f64, y: &[f64; 2]| {
        [4.0 * k * y[1] * y[1] - y[0] * y[0], -2.0 * y[0] * y[1]]
    };
    // Local tolerances sit an order below `tol` so the accumulated
    // global error stays within it even on long or near-singular runs.
    let opts = AdaptiveOptions {
        rel_tol: tol * 0.1,
        abs_tol: tol * 1e-5,
        h_init: 1e-4,
        h_min: 1e-15,
        max_steps: 50_000_000,
    };
    let mut times = vec![0.0];
    let mut a_values = vec![a0];
    let mut inv_scale_sq = vec![1.0];
    let result = integrate_adaptive(rhs, 0.0, [a0, 1.0], t_end, &opts, |t, y| {
        times.push(t);
        a_values.push(y[0]);
        inv_scale_sq.push(y[1]);
        y[0].abs() <= cap && y[0].is_finite()
    });
    let singular = match result {
        Ok((_, y)) => y[0].abs() > cap || !y[0].is_finite(),
        // The step size only collapses at a pole of a(t); everything
        // reachable was already sampled.
        Err(crate::numerics::OdeError::StepUnderflow { .. }) => true,
        Err(crate::numerics::OdeError::TooManySteps { t }) => {
            return Err(TimeflowError::Stalled(t))
        }
    };
    Ok(AOdeTrajectory {
        times,
        a_values,
        inv_scale_sq,
        singular,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BlowupRegime {
    /// k > 0: the amplitude decays like t^{−n/2}.
    #[serde(rename = "decay")]
    Decay,
    /// H = 0, M'(0) < 0: the moment is linear and hits zero.
    #[serde(rename = "blowup_i")]
    BlowupI,
    /// H > 0, M'(0) < 0, K < 0: both roots positive, the first counts.
    #[serde(rename = "blowup_ii")]
    BlowupII,
    /// H < 0: the moment is concave and always hits zero.
    #[serde(rename = "blowup_iii")]
    BlowupIII,
    /// k = 0: double root of the moment quadratic.
    #[serde(rename = "blowup_k0")]
    BlowupK0,
    /// k ≤ 0 but no positive root: the moment never vanishes forward
    /// in time.
    #[serde(rename = "global_no_collapse")]
    GlobalNoCollapse,
}

/// Regime classification of a moment-driven flow.
///
/// `t_collapse` is the smallest positive root of M(t) (the authoritative
/// collapse time). `case_formula_t` records, for comparison, the value
/// of the per-case closed formulas conventionally quoted for these
/// regimes; the two disagree by a constant factor in the quadratic
/// cases, so both are surfaced rather than silently reconciled.
#[derive(Debug, Clone, Serialize)]
pub struct BlowupReport {
    pub regime: BlowupRegime,
    #[serde(rename = "T")]
    pub t_collapse: Option<f64>,
    #[serde(rename = "case_formula_T")]
    pub case_formula_t: Option<f64>,
    /// Power of the amplitude growth/decay: n/2 for k = 0 collapse and
    /// k > 0 decay, n/4 for k < 0 collapse.
    pub amplitude_exponent: f64,
    /// Power λ of the gradient-norm growth ‖∇Ψ‖² = O((T−t)^{−λ}):
    /// 2 for k = 0, 1 for k < 0, 0 (bounded) for decay.
    pub gradient_exponent: f64,
    #[serde(rename = "K")]
    pub big_k: f64,
    #[serde(rename = "k")]
    pub small_k: f64,
}

pub fn classify_blowup(
    vc: &VirialCoefficients,
    n_dims: usize,
) -> Result<BlowupReport, TimeflowError> {
    if !(1..=3).contains(&n_dims) {
        return Err(TimeflowError::BadDimension(n_dims));
    }
    let n = n_dims as f64;
    let (regime, t_collapse) = if vc.small_k > 0.0 {
        (BlowupRegime::Decay, None)
    } else if let Some(tc) = vc.collapse_time() {
        let regime = if vc.small_k == 0.0 {
            BlowupRegime::BlowupK0
        } else if vc.energy == 0.0 {
            BlowupRegime::BlowupI
        } else if vc.energy > 0.0 {
            BlowupRegime::BlowupII
        } else {
            BlowupRegime::BlowupIII
        };
        (regime, Some(tc))
    } else {
        (BlowupRegime::GlobalNoCollapse, None)
    };
    let sqrt_abs_k = vc.big_k.abs().sqrt();
    let case_formula_t = match regime {
        BlowupRegime::BlowupI => Some(-vc.m0 / vc.m0p),
        BlowupRegime::BlowupII => Some((-vc.m0p - sqrt_abs_k) / (2.0 * vc.energy)),
        BlowupRegime::BlowupIII => Some((-vc.m0p + sqrt_abs_k) / (2.0 * vc.energy)),
        BlowupRegime::BlowupK0 => Some(-vc.m0p / (2.0 * vc.energy)),
        _ => None,
    };
    let (amplitude_exponent, gradient_exponent) = if vc.small_k < 0.0 {
        (n / 4.0, 1.0)
    } else if vc.small_k == 0.0 {
        (n / 2.0, 2.0)
    } else {
        (n / 2.0, 0.0)
    };
    Ok(BlowupReport {
        regime,
        t_collapse,
        case_formula_t,
        amplitude_exponent,
        gradient_exponent,
        big_k: vc.big_k,
        small_k: vc.small_k,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowMode {
    /// Moment-driven: a from the quadratic M(t), no drift.
    Profile,
    /// Drift-driven: a' + a² = 0 plus a linear-potential drift along Λ.
    General,
}

/// Evaluable time dependence of a self-similar solution: contraction
/// rate a(t), drift rate b(t), accumulated phase γ(t), scale factor
/// s(t) and drift vector, all restricted to the open window where the
/// scale stays positive. Evaluation outside the window is an error.
#[derive(Debug, Clone, Serialize)]
pub struct TimeFlow {
    pub mode: FlowMode,
    pub a0: f64,
    pub b0: f64,
    /// Potential strength: the quadratic coefficient k in profile mode,
    /// the linear coefficient k1 in general mode.
    pub potential_k: f64,
    pub gamma0: f64,
    pub lambda: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    vc: Option<VirialCoefficients>,
    valid_from: f64,
    valid_until: f64,
}

/// Moment-driven flow: a(t) = M'(t)/(2M(t)), s(t) = √(M(t)/M(0)),
/// γ(t) = γ0·M(0)·∫₀ᵗ dτ/M, no drift. Valid while M(t) > 0.
pub fn profile_timeflow(
    vc: VirialCoefficients,
    gamma0: f64,
    n_dims: usize,
) -> Result<TimeFlow, TimeflowError> {
    if !(1..=3).contains(&n_dims) {
        return Err(TimeflowError::BadDimension(n_dims));
    }
    let (lo, hi) = vc.positive_window();
    Ok(TimeFlow {
        mode: FlowMode::Profile,
        a0: vc.a0(),
        b0: 0.0,
        potential_k: vc.small_k,
        gamma0,
        lambda: vec![0.0; n_dims],
        vc: Some(vc),
        valid_from: lo,
        valid_until: hi,
    })
}

/// Drift-driven flow with s(t) = 1 + a0·t:
///
/// ```text
///   a(t) = a0/s,                 b(t) = (b0·s + 2·k1·t)/s²,
///   D(t) = (b0·t·s + k1·t²)/s²   (drift integral ∫₀ᵗ b/s),
///   γ'(t) = γ0/s² − |Λ|²·(4·k1·D/s² + b²)/4,
/// ```
///
/// with the drift vector Λ·D(t) and γ evaluated by adaptive quadrature.
/// For a0 < 0 the scale hits zero at t = −1/a0, which bounds the
/// validity window; for a0 ≥ 0 the flow exists for all forward time.
pub fn general_timeflow(a0: f64, b0: f64, k1: f64, gamma0: f64, lambda: Vec<f64>) -> TimeFlow {
    let (lo, hi) = if a0 > 0.0 {
        (-1.0 / a0, f64::INFINITY)
    } else if a0 < 0.0 {
        (f64::NEG_INFINITY, -1.0 / a0)
    } else {
        (f64::NEG_INFINITY, f64::INFINITY)
    };
    TimeFlow {
        mode: FlowMode::General,
        a0,
        b0,
        potential_k: k1,
        gamma0,
        lambda,
        vc: None,
        valid_from: lo,
        valid_until: hi,
    }
}

impl TimeFlow {
    pub fn valid_from(&self) -> f64 {
        self.valid_from
    }

    /// First time at which the flow stops existing (+∞ if none).
    pub fn valid_until(&self) -> f64 {
        self.valid_until
    }

    pub fn coefficients(&self) -> Option<&VirialCoefficients> {
        self.vc.as_ref()
    }

    fn check(&self, t: f64) -> Result<(), TimeflowError> {
        if t.is_finite() && t > self.valid_from && t < self.valid_until {
            Ok(())
        } else {
            Err(TimeflowError::OutOfDomain {
                t,
                lo: self.valid_from,
                hi: self.valid_until,
            })
        }
    }

    /// Contraction rate a(t).
    pub fn a(&self, t: f64) -> Result<f64, TimeflowError> {
        self.check(t)?;
        Ok(match self.mode {
            FlowMode::Profile => {
                let vc = self.vc.as_ref().expect("profile flow carries coefficients");
                vc.m_prime(t) / (2.0 * vc.m(t))
            }
            FlowMode::General => self.a0 / (1.0 + self.a0 * t),
        })
    }

    /// Drift rate b(t) (identically zero in profile mode).
    pub fn b(&self, t: f64) -> Result<f64, TimeflowError> {
        self.check(t)?;
        Ok(match self.mode {
            FlowMode::Profile => 0.0,
            FlowMode::General => {
                let s = 1.0 + self.a0 * t;
                (self.b0 * s + 2.0 * self.potential_k * t) / (s * s)
            }
        })
    }

    /// Scale factor s(t) = exp(∫₀ᵗ a); s(0) = 1.
    pub fn scale(&self, t: f64) -> Result<f64, TimeflowError> {
        self.check(t)?;
        Ok(match self.mode {
            FlowMode::Profile => {
                let vc = self.vc.as_ref().expect("profile flow carries coefficients");
                (vc.m(t) / vc.m0).sqrt()
            }
            FlowMode::General => 1.0 + self.a0 * t,
        })
    }

    /// Scalar drift integral D(t) = ∫₀ᵗ b(τ)/s(τ) dτ; the drift vector
    /// is Λ·D(t).
    pub fn drift_scalar(&self, t: f64) -> Result<f64, TimeflowError> {
        self.check(t)?;
        Ok(match self.mode {
            FlowMode::Profile => 0.0,
            FlowMode::General => {
                let s = 1.0 + self.a0 * t;
                (self.b0 * t * s + self.potential_k * t * t) / (s * s)
            }
        })
    }

    /// Drift vector Λ·D(t); d(0) = 0.
    pub fn drift(&self, t: f64) -> Result<Vec<f64>, TimeflowError> {
        let d = self.drift_scalar(t)?;
        Ok(self.lambda.iter().map(|l| l * d).collect())
    }

    /// Accumulated phase γ(t) with γ(0) = 0; constant offsets are the
    /// caller's to add.
    pub fn gamma(&self, t: f64) -> Result<f64, TimeflowError> {
        self.check(t)?;
        match self.mode {
            FlowMode::Profile => {
                let vc = self.vc.as_ref().expect("profile flow carries coefficients");
                phase_integral(vc, self.gamma0, t)
            }
            FlowMode::General => {
                let ll: f64 = self.lambda.iter().map(|l| l * l).sum();
                let (a0, b0, k1, g0) = (self.a0, self.b0, self.potential_k, self.gamma0);
                let rate = |tau: f64| {
                    let s = 1.0 + a0 * tau;
                    let s2 = s * s;
                    let b = (b0 * s + 2.0 * k1 * tau) / s2;
                    let d = (b0 * tau * s + k1 * tau * tau) / s2;
                    g0 / s2 - ll * (4.0 * k1 * d / s2 + b * b) / 4.0
                };
                Ok(integrate_simpson(rate, 0.0, t, 1e-10))
            }
        }
    }
}

/// Flow reconstructed from scalar functionals alone: with
/// Q(t) = P̃·t + Q(0) the moment combination
///
/// ```text
///   G(t) = M(t)·N·|Λ|² − Q²(t) = Â·t² + B̂·t + Ĉ,
///   Â = 4·H·N·|Λ|² − P̃²,  B̂ = M'(0)·N·|Λ|² − 2·P̃·Q(0),
///   Ĉ = M(0)·N·|Λ|² − Q²(0),
/// ```
///
/// closes the rate equation a' = (Â − a·G')/G exactly, with solution
/// a(t) = (Â·t + Ĉ·a0)/G(t) and drift rate b = (P̃ − a·Q)/(N·|Λ|²).
/// `reference_a`/`reference_b` record an alternative quadratic
/// coefficient pair kept for cross-checking; `reference_differs` is set
/// when that pair disagrees with the derived one, and the derived pair
/// is always the one the evaluators use.
#[derive(Debug, Clone, Serialize)]
pub struct FunctionalFlow {
    pub mass: f64,
    pub lambda_norm: f64,
    /// Conserved momentum projection P̃ driving Q(t).
    pub momentum: f64,
    pub q0: f64,
    pub a0: f64,
    pub a_coeff: f64,
    pub b_coeff: f64,
    pub c_coeff: f64,
    pub reference_a: f64,
    pub reference_b: f64,
    pub reference_differs: bool,
    valid_from: f64,
    valid_until: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn functional_timeflow(
    mass: f64,
    energy: f64,
    m0: f64,
    m0p: f64,
    q0: f64,
    momentum: f64,
    lambda_norm: f64,
    a0: f64,
) -> Result<FunctionalFlow, TimeflowError> {
    if !(mass.is_finite() && mass > 0.0) {
        return Err(TimeflowError::BadMass(mass));
    }
    if !(m0.is_finite() && m0 > 0.0) {
        return Err(TimeflowError::BadMoment(m0));
    }
    if !(lambda_norm.is_finite() && lambda_norm > 0.0) {
        return Err(TimeflowError::BadInput(format!(
            "lambda_norm must be positive, got {lambda_norm}"
        )));
    }
    let nl2 = mass * lambda_norm * lambda_norm;
    let c_coeff = m0 * nl2 - q0 * q0;
    if c_coeff < 0.0 {
        return Err(TimeflowError::HoelderViolated(c_coeff));
    }
    let a_coeff = 4.0 * energy * nl2 - momentum * momentum;
    let b_coeff = m0p * nl2 - 2.0 * momentum * q0;
    let reference_a = 8.0 * energy * nl2 - momentum * momentum;
    let reference_b = m0p * energy * nl2 - 2.0 * momentum * q0;
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * (1.0 + x.abs().max(y.abs()));
    let reference_differs = !close(reference_a, a_coeff) || !close(reference_b, b_coeff);

    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    if c_coeff == 0.0 {
        // Moment equality: G(0) = 0, nothing is evaluable.
        lo = 0.0;
        hi = 0.0;
    } else {
        for r in quadratic_roots(a_coeff, b_coeff, c_coeff) {
            if r < 0.0 {
                lo = lo.max(r);
            } else {
                hi = hi.min(r);
            }
        }
    }
    Ok(FunctionalFlow {
        mass,
        lambda_norm,
        momentum,
        q0,
        a0,
        a_coeff,
        b_coeff,
        c_coeff,
        reference_a,
        reference_b,
        reference_differs,
        valid_from: lo,
        valid_until: hi,
    })
}

impl FunctionalFlow {
    /// The moment combination G(t) = Â·t² + B̂·t + Ĉ.
    pub fn g(&self, t: f64) -> f64 {
        (self.a_coeff * t + self.b_coeff) * t + self.c_coeff
    }

    pub fn valid_until(&self) -> f64 {
        self.valid_until
    }

    fn check(&self, t: f64) -> Result<(), TimeflowError> {
        if t.is_finite() && t > self.valid_from && t < self.valid_until || t == 0.0 {
            Ok(())
        } else {
            Err(TimeflowError::OutOfDomain {
                t,
                lo: self.valid_from,
                hi: self.valid_until,
            })
        }
    }

    /// Projected first moment Q(t) = P̃·t + Q(0).
    pub fn q(&self, t: f64) -> f64 {
        self.momentum * t + self.q0
    }

    /// Contraction rate a(t) = (Â·t + Ĉ·a0)/G(t) — the exact solution
    /// of a' = (Â − a·G')/G through a(0) = a0. Constant when G is
    /// (Â = B̂ = 0 makes a ≡ a0).
    pub fn a(&self, t: f64) -> Result<f64, TimeflowError> {
        self.check(t)?;
        Ok((self.a_coeff * t + self.c_coeff * self.a0) / self.g(t))
    }

    /// Drift rate b(t) = (P̃ − a(t)·Q(t)) / (N·|Λ|²).
    pub fn b(&self, t: f64) -> Result<f64, TimeflowError> {
        let a = self.a(t)?;
        Ok((self.momentum - a * self.q(t)) / (self.mass * self.lambda_norm * self.lambda_norm))
    }

    /// Brute-force re-integration of a' = (Â − a·G')/G from a(0) = a0,
    /// for cross-checking the closed form. Returns (t, a) samples at
    /// the accepted steps.
    pub fn reintegrate(&self, t_end: f64, tol: f64) -> Result<Vec<(f64, f64)>, TimeflowError> {
        if !(1e-12..=1e-6).contains(&tol) {
            return Err(TimeflowError::BadTolerance(tol));
        }
        self.check(t_end)?;
        if t_end <= 0.0 {
            return Err(TimeflowError::BadInput(format!(
                "t_end must be positive, got {t_end}"
            )));
        }
        let rhs = |t: f64, y: &[f64; 1]| {
            let gp = 2.0 * self.a_coeff * t + self.b_coeff;
            [(self.a_coeff - y[0] * gp) / self.g(t)]
        };
        let opts = AdaptiveOptions {
            rel_tol: tol,
            abs_tol: tol * 1e-4,
            h_init: 1e-4,
            h_min: 1e-15,
            max_steps: 50_000_000,
        };
        let mut samples = vec![(0.0, self.a0)];
        let result = integrate_adaptive(rhs, 0.0, [self.a0], t_end, &opts, |t, y| {
            samples.push((t, y[0]));
            true
        });
        match result {
            Ok(_) => Ok(samples),
            Err(crate::numerics::OdeError::StepUnderflow { t })
            | Err(crate::numerics::OdeError::TooManySteps { t }) => {
                Err(TimeflowError::Stalled(t))
            }
        }
    }
}

/// Projected first moment Q(t) = P̃·t + Q(0): linear because the
/// projected momentum is conserved.
pub fn q_lambda(momentum: f64, q0: f64, t: f64) -> f64 {
    momentum * t + q0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vc(h: f64, m0: f64, m0p: f64) -> VirialCoefficients {
        virial_coefficients(h, m0, m0p, 1.0).unwrap()
    }

    #[test]
    fn virial_coefficient_values() {
        let v = virial_coefficients(1.0, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(v.big_k, 16.0);
        assert_eq!(v.small_k, 1.0);
        let v = virial_coefficients(0.0, 2.0, -1.0, 1.0).unwrap();
        assert_eq!(v.big_k, -1.0);
        assert_eq!(v.small_k, -1.0 / 64.0);
        let v = virial_coefficients(0.0, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(v.big_k, 0.0);
        assert_eq!(v.small_k, 0.0);
        for t in [0.0, 0.7, 3.0] {
            assert_eq!(v.m(t), 1.0);
        }
        assert!(virial_coefficients(1.0, 0.0, 0.0, 1.0).is_err());
        assert!(virial_coefficients(1.0, 1.0, 0.0, -2.0).is_err());
    }

    #[test]
    fn moment_second_difference_is_constant() {
        // M'' = 8H for every coefficient choice: second differences of
        // the quadratic must all equal 8H·h².
        for (h, m0, m0p) in [(1.0, 1.0, -6.0), (-1.0, 2.0, 0.5), (0.0, 3.0, 2.0)] {
            let v = vc(h, m0, m0p);
            let step = 0.37;
            for i in 0..20 {
                let t = -2.0 + i as f64 * 0.31;
                let dd = v.m(t + step) - 2.0 * v.m(t) + v.m(t - step);
                assert!((dd - 8.0 * h * step * step).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rate_closed_form_values() {
        let v = vc(1.0, 1.0, 0.0);
        assert_eq!(a_closed_form(&v, 0.0).unwrap(), 0.0);
        assert!((a_closed_form(&v, 1.0).unwrap() - 0.8).abs() < 1e-15);
        let v = vc(0.0, 2.0, -1.0);
        assert_eq!(a_closed_form(&v, 0.0).unwrap(), -0.25);
        // Hits the moment root at t = 2.
        assert!(a_closed_form(&v, 2.0).is_err());
        assert!(a_closed_form(&v, 5.0).is_err());
    }

    #[test]
    fn rate_closed_form_k0_branch() {
        // With k = 0 the rate collapses to 1/(t + 1/a0).
        let v = vc(1.0, 1.0, -4.0);
        assert_eq!(v.small_k, 0.0);
        let a0 = v.a0();
        assert_eq!(a0, -2.0);
        for i in 0..40 {
            let t = i as f64 * 0.01;
            let expect = 1.0 / (t + 1.0 / a0);
            assert!((a_closed_form(&v, t).unwrap() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn rate_satisfies_scale_ode() {
        // Plug a(t) back into a' + a² = 4k·(M0/M)² with a fourth-order
        // finite-difference derivative; h shrinks near the moment root
        // to keep the truncation below the bound.
        for (h, m0, m0p) in [
            (1.0, 1.0, -6.0),
            (-1.0, 1.0, 0.0),
            (0.25, 1.0, -2.0),
            (1.0, 1.0, 0.0),
            (0.0, 2.0, -1.0),
        ] {
            let v = vc(h, m0, m0p);
            let (_, root) = v.positive_window();
            let horizon = if root.is_finite() { 0.6 * root } else { 2.0 };
            for i in 1..25 {
                let t = horizon * i as f64 / 25.0;
                let d = if root.is_finite() { root - t } else { 1.0 };
                let fd = 1e-3 * d.powf(1.5);
                let a = |tt: f64| a_closed_form(&v, tt).unwrap();
                let da = (-a(t + 2.0 * fd) + 8.0 * a(t + fd) - 8.0 * a(t - fd)
                    + a(t - 2.0 * fd))
                    / (12.0 * fd);
                let ratio = v.m0 / v.m(t);
                let res = da + a(t) * a(t) - 4.0 * v.small_k * ratio * ratio;
                assert!(res.abs() < 1e-9, "H={h} M0p={m0p} t={t}: residual {res}");
            }
        }
    }

    #[test]
    fn rate_satisfies_differential_corollary_k0() {
        // a'' + 6aa' + 4a³ = 0 on k = 0 trajectories.
        let v = vc(0.25, 1.0, -2.0);
        assert_eq!(v.small_k, 0.0);
        let a = |tt: f64| a_closed_form(&v, tt).unwrap();
        let fd = 1e-3;
        for i in 0..26 {
            let t = 0.02 * i as f64;
            let d1 = (-a(t + 2.0 * fd) + 8.0 * a(t + fd) - 8.0 * a(t - fd) + a(t - 2.0 * fd))
                / (12.0 * fd);
            let d2 = (-a(t + 2.0 * fd) + 16.0 * a(t + fd) - 30.0 * a(t) + 16.0 * a(t - fd)
                - a(t - 2.0 * fd))
                / (12.0 * fd * fd);
            let res = d2 + 6.0 * a(t) * d1 + 4.0 * a(t).powi(3);
            assert!(res.abs() < 1e-8, "t={t}: residual {res}");
        }
    }

    #[test]
    fn rate_ode_k0_singular_trajectory() {
        // a0 = -1, k = 0 has the exact solution 1/(t-1): a pole at 1.
        let traj = integrate_a_ode(-1.0, 0.0, 2.0, 1e-10).unwrap();
        assert!(traj.singular);
        let t_last = *traj.times.last().unwrap();
        assert!((t_last - 1.0).abs() < 1e-3, "stopped at {t_last}");
        for (&t, &a) in traj.times.iter().zip(&traj.a_values) {
            if t < 0.9 {
                assert!((a - 1.0 / (t - 1.0)).abs() < 1e-8, "t={t}");
            }
        }
    }

    #[test]
    fn rate_ode_decay_branch_bounded() {
        // k = 1, a0 = 0 matches H=1, M0=1, M0p=0: a = 4t/(4t²+1), so
        // t·a(t) stays below 1 and the rate decays after its maximum.
        let traj = integrate_a_ode(0.0, 1.0, 50.0, 1e-10).unwrap();
        assert!(!traj.singular);
        assert_eq!(*traj.times.last().unwrap(), 50.0);
        let mut max_ta = 0.0_f64;
        for (&t, &a) in traj.times.iter().zip(&traj.a_values) {
            if t > 0.0 {
                assert!(a > 0.0);
                max_ta = max_ta.max(t * a);
            }
        }
        assert!(max_ta < 1.01, "t·a reached {max_ta}");
        let near_end = traj.a_values[traj.a_values.len() - 1];
        assert!(near_end < 0.1);
    }

    #[test]
    fn rate_ode_matches_closed_form_across_regimes() {
        for (h, m0, m0p) in [
            (1.0, 1.0, -6.0),
            (1.0, 1.0, 0.0),
            (-1.0, 1.0, 0.0),
            (0.25, 1.0, -2.0),
            (0.0, 2.0, -1.0),
            (-0.5, 2.0, 1.0),
        ] {
            let v = vc(h, m0, m0p);
            let tol = 1e-10;
            let (_, root) = v.positive_window();
            let horizon = if root.is_finite() { 0.9 * root } else { 3.0 };
            let traj = integrate_a_ode(v.a0(), v.small_k, horizon, tol).unwrap();
            for (&t, &a) in traj.times.iter().zip(&traj.a_values) {
                if t > horizon {
                    break;
                }
                let expect = a_closed_form(&v, t).unwrap();
                assert!(
                    (a - expect).abs() < 100.0 * tol,
                    "H={h} M0p={m0p} t={t}: {a} vs {expect}"
                );
                // The auxiliary component tracks (M0/M)² as well.
            }
            for (&t, &e) in traj.times.iter().zip(&traj.inv_scale_sq) {
                if t > horizon {
                    break;
                }
                let expect = v.m0 / v.m(t);
                assert!((e - expect).abs() < 1e-7, "inv scale at t={t}");
            }
        }
    }

    #[test]
    fn rate_ode_rejects_bad_arguments() {
        assert!(matches!(
            integrate_a_ode(0.0, 0.0, 1.0, 1e-5),
            Err(TimeflowError::BadTolerance(_))
        ));
        assert!(matches!(
            integrate_a_ode(0.0, 0.0, -1.0, 1e-10),
            Err(TimeflowError::BadInput(_))
        ));
    }

    #[test]
    fn classification_table() {
        let r = classify_blowup(&vc(0.0, 2.0, -1.0), 1).unwrap();
        assert_eq!(r.regime, BlowupRegime::BlowupI);
        assert_eq!(r.t_collapse, Some(2.0));
        assert_eq!(r.case_formula_t, Some(2.0));

        let r = classify_blowup(&vc(1.0, 1.0, -6.0), 2).unwrap();
        assert_eq!(r.regime, BlowupRegime::BlowupII);
        let t = r.t_collapse.unwrap();
        assert!((t - (6.0 - 20.0_f64.sqrt()) / 8.0).abs() < 1e-14);
        assert!((r.case_formula_t.unwrap() - (6.0 - 20.0_f64.sqrt()) / 2.0).abs() < 1e-14);
        assert!((r.amplitude_exponent - 0.5).abs() < 1e-15);
        assert_eq!(r.gradient_exponent, 1.0);

        let r = classify_blowup(&vc(-1.0, 1.0, 0.0), 3).unwrap();
        assert_eq!(r.regime, BlowupRegime::BlowupIII);
        assert!((r.t_collapse.unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(r.case_formula_t, Some(-2.0));

        let r = classify_blowup(&vc(1.0, 1.0, 0.0), 2).unwrap();
        assert_eq!(r.regime, BlowupRegime::Decay);
        assert_eq!(r.t_collapse, None);
        assert_eq!(r.case_formula_t, None);
        assert_eq!(r.gradient_exponent, 0.0);

        // k = 0 collapse: double root of the moment quadratic.
        let r = classify_blowup(&vc(0.25, 1.0, -2.0), 1).unwrap();
        assert_eq!(r.regime, BlowupRegime::BlowupK0);
        assert!((r.t_collapse.unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(r.case_formula_t, Some(4.0));
        assert!((r.amplitude_exponent - 0.5).abs() < 1e-15);
        assert_eq!(r.gradient_exponent, 2.0);

        // k < 0 but both roots negative: no forward collapse.
        let r = classify_blowup(&vc(1.0, 1.0, 6.0), 1).unwrap();
        assert_eq!(r.regime, BlowupRegime::GlobalNoCollapse);
        assert_eq!(r.t_collapse, None);

        assert!(classify_blowup(&vc(1.0, 1.0, 0.0), 4).is_err());
    }

    #[test]
    fn regime_serializes_to_snake_case_names() {
        let name = |r: BlowupRegime| serde_json::to_string(&r).unwrap();
        assert_eq!(name(BlowupRegime::Decay), "\"decay\"");
        assert_eq!(name(BlowupRegime::BlowupI), "\"blowup_i\"");
        assert_eq!(name(BlowupRegime::BlowupII), "\"blowup_ii\"");
        assert_eq!(name(BlowupRegime::BlowupIII), "\"blowup_iii\"");
        assert_eq!(name(BlowupRegime::BlowupK0), "\"blowup_k0\"");
        assert_eq!(
            name(BlowupRegime::GlobalNoCollapse),
            "\"global_no_collapse\""
        );
        let report = classify_blowup(&vc(0.0, 2.0, -1.0), 1).unwrap();
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["regime"], "blowup_i");
        assert_eq!(json["T"], 2.0);
        assert!(json["case_formula_T"].is_number());
        assert!(json["K"].is_number() && json["k"].is_number());
    }

    #[test]
    fn collapse_time_is_smallest_positive_root() {
        for h in [-2.0, -0.5, 0.0, 0.5, 2.0] {
            for m0p in [-5.0, -1.0, 0.0, 1.0, 5.0] {
                for m0 in [0.5, 1.0, 3.0] {
                    let v = vc(h, m0, m0p);
                    if let Some(t) = v.collapse_time() {
                        assert!(t > 0.0);
                        assert!(v.m(t).abs() <= 1e-10 * m0, "M(T) = {}", v.m(t));
                        // No earlier positive root: M stays positive.
                        for i in 1..50 {
                            let s = t * i as f64 / 50.0;
                            assert!(v.m(s) > 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn phase_integral_values() {
        // Zero multiplier wins regardless of the window.
        let v = vc(0.0, 2.0, -1.0);
        assert_eq!(phase_integral(&v, 0.0, 100.0).unwrap(), 0.0);
        // Constant moment: the phase is linear.
        let v = vc(0.0, 1.5, 0.0);
        for t in [0.3, 1.0, 7.0, -2.0] {
            assert!((phase_integral(&v, 2.0, t).unwrap() - 2.0 * t).abs() < 1e-10);
        }
        // Arctangent branch.
        let v = vc(1.0, 1.0, 0.0);
        let expect = 0.5 * 2.0_f64.atan();
        assert!((phase_integral(&v, 1.0, 1.0).unwrap() - expect).abs() < 1e-9);
        // Logarithm branch (linear moment).
        let v = vc(0.0, 2.0, -1.0);
        let expect = 2.0 * 2.0 * (2.0_f64 / 1.0).ln() / 1.0;
        let got = phase_integral(&v, 2.0, 1.0).unwrap();
        assert!((got - expect).abs() < 1e-9, "{got} vs {expect}");
        // Split-root branch: partial fractions over both real roots.
        let v = vc(1.0, 1.0, -6.0);
        let (rlo, rhi) = ((6.0 - 20.0_f64.sqrt()) / 8.0, (6.0 + 20.0_f64.sqrt()) / 8.0);
        let t = 0.15;
        let expect = 1.0 / (4.0 * (rlo - rhi))
            * (((rlo - t) / (rhi - t)).ln() - (rlo / rhi).ln());
        let got = phase_integral(&v, 1.0, t).unwrap();
        assert!((got - expect).abs() < 1e-9, "{got} vs {expect}");
        // At and beyond the root: error.
        let v = vc(0.0, 2.0, -1.0);
        assert!(phase_integral(&v, 1.0, 2.0).is_err());
        assert!(phase_integral(&v, 1.0, 3.0).is_err());
    }

    #[test]
    fn drift_flow_solitary_wave() {
        let flow = general_timeflow(0.0, 0.0, 0.0, 1.0, vec![1.0, 0.0]);
        assert_eq!(flow.valid_until(), f64::INFINITY);
        for t in [0.0, 0.5, 10.0] {
            assert_eq!(flow.a(t).unwrap(), 0.0);
            assert_eq!(flow.b(t).unwrap(), 0.0);
            assert_eq!(flow.scale(t).unwrap(), 1.0);
            assert!((flow.gamma(t).unwrap() - t).abs() < 1e-12);
            assert_eq!(flow.drift(t).unwrap(), vec![0.0, 0.0]);
        }
    }

    #[test]
    fn drift_flow_uniform_acceleration() {
        // a ≡ 0: the center moves along Λ·t·(k1·t + b0) and the phase
        // is an explicit cubic.
        let (k1, b0, g0) = (0.3, 0.5, 0.7);
        let flow = general_timeflow(0.0, b0, k1, g0, vec![0.0, 1.0, 0.0]);
        for i in 0..12 {
            let t = 0.25 * i as f64;
            assert!((flow.b(t).unwrap() - (2.0 * k1 * t + b0)).abs() < 1e-14);
            let d = flow.drift(t).unwrap();
            assert!((d[1] - t * (k1 * t + b0)).abs() < 1e-12);
            assert_eq!(d[0], 0.0);
            let cubic = g0 * t
                - (2.0 / 3.0 * k1 * k1 * t.powi(3) + k1 * b0 * t * t + 0.25 * b0 * b0 * t);
            assert!((flow.gamma(t).unwrap() - cubic).abs() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn drift_flow_contracting_scale() {
        let flow = general_timeflow(-0.5, 0.2, 0.1, 1.0, vec![1.0]);
        assert_eq!(flow.valid_until(), 2.0);
        assert!((flow.scale(1.9).unwrap() - 0.05).abs() < 1e-15);
        assert!(flow.a(2.0).is_err());
        assert!(flow.gamma(2.5).is_err());
        // b solves b' + a·b = 2·k1·s^{-3}: check by finite differences
        // (step small enough that the s^{-3} curvature stays below the
        // bound at the latest sample).
        let fd = 3e-6;
        for t in [0.3, 1.0, 1.5] {
            let db = (flow.b(t + fd).unwrap() - flow.b(t - fd).unwrap()) / (2.0 * fd);
            let s = flow.scale(t).unwrap();
            let res = db + flow.a(t).unwrap() * flow.b(t).unwrap() - 0.2 / s.powi(3);
            assert!(res.abs() < 1e-8, "t={t}: {res}");
        }
        // D' = b/s.
        for t in [0.4, 1.2] {
            let dd =
                (flow.drift_scalar(t + fd).unwrap() - flow.drift_scalar(t - fd).unwrap())
                    / (2.0 * fd);
            let res = dd - flow.b(t).unwrap() / flow.scale(t).unwrap();
            assert!(res.abs() < 1e-9, "t={t}: {res}");
        }
    }

    #[test]
    fn moment_flow_matches_coefficients() {
        let v = vc(1.0, 1.0, -6.0);
        let flow = profile_timeflow(v, 0.8, 2).unwrap();
        let root = v.collapse_time().unwrap();
        assert_eq!(flow.valid_until(), root);
        for i in 1..10 {
            let t = 0.9 * root * i as f64 / 10.0;
            assert_eq!(flow.a(t).unwrap(), a_closed_form(&v, t).unwrap());
            assert!((flow.scale(t).unwrap() - (v.m(t) / v.m0).sqrt()).abs() < 1e-15);
            assert_eq!(flow.b(t).unwrap(), 0.0);
            assert_eq!(flow.gamma(t).unwrap(), phase_integral(&v, 0.8, t).unwrap());
            assert_eq!(flow.drift(t).unwrap(), vec![0.0, 0.0]);
        }
        assert_eq!(flow.gamma(0.0).unwrap(), 0.0);
        assert!(flow.a(root).is_err());
        assert!(flow.a(root + 1.0).is_err());
    }

    #[test]
    fn drift_flow_reduces_to_moment_flow_at_k0() {
        // k1 = 0, b0 = 0, a0 ≠ 0 is the k = 0 moment flow: the scale
        // factors must agree to round-off.
        let v = vc(0.25, 1.0, -2.0);
        assert_eq!(v.small_k, 0.0);
        let moment = profile_timeflow(v, 1.0, 1).unwrap();
        let drift = general_timeflow(v.a0(), 0.0, 0.0, 1.0, vec![1.0]);
        for i in 0..19 {
            let t = 0.05 * i as f64;
            let sm = moment.scale(t).unwrap();
            let sd = drift.scale(t).unwrap();
            assert!((sm - sd).abs() < 1e-12, "t={t}: {sm} vs {sd}");
            assert!((moment.a(t).unwrap() - drift.a(t).unwrap()).abs() < 1e-11);
        }
    }

    #[test]
    fn functional_flow_radial_matches_moment_rate() {
        // Q0 = P̃ = 0 collapses the functional flow onto the moment
        // closed form; the ODE re-integration must agree too.
        let v = vc(1.0, 1.0, -6.0);
        let flow = functional_timeflow(1.0, 1.0, 1.0, -6.0, 0.0, 0.0, 1.0, v.a0()).unwrap();
        assert!(flow.reference_differs);
        let horizon = 0.9 * v.collapse_time().unwrap();
        for i in 0..20 {
            let t = horizon * i as f64 / 20.0;
            let expect = a_closed_form(&v, t).unwrap();
            assert!((flow.a(t).unwrap() - expect).abs() < 1e-12);
            assert_eq!(flow.b(t).unwrap(), 0.0);
        }
        for (t, a) in flow.reintegrate(horizon, 1e-10).unwrap() {
            let expect = flow.a(t).unwrap();
            assert!((a - expect).abs() < 1e-8, "t={t}: {a} vs {expect}");
        }
    }

    #[test]
    fn functional_flow_nonzero_momentum_forces_k0() {
        // A flow with Q·a = P̃ nontrivially satisfied pins the moment to
        // a perfect square: the derived k must vanish and the rate must
        // match 1/(t + Q0/P̃).
        let (q0, momentum, m0, mass) = (1.0, 2.0, 1.0, 2.0);
        let a0 = momentum / q0;
        let m0p = 2.0 * m0 * a0;
        let energy = m0 * a0 * a0 / 4.0;
        let v = virial_coefficients(energy, m0, m0p, mass).unwrap();
        assert!(v.small_k.abs() < 1e-10);
        let flow =
            functional_timeflow(mass, energy, m0, m0p, q0, momentum, 1.0, a0).unwrap();
        for i in 0..15 {
            let t = 0.3 * i as f64;
            let expect = 1.0 / (t + q0 / momentum);
            assert!((flow.a(t).unwrap() - expect).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn functional_flow_degenerate_constant_branch() {
        // Â = B̂ = 0 leaves G constant and the rate frozen at a0.
        let flow = functional_timeflow(1.0, 0.0, 1.0, 0.0, 0.3, 0.0, 1.0, 0.25).unwrap();
        assert_eq!(flow.a_coeff, 0.0);
        assert_eq!(flow.b_coeff, 0.0);
        for t in [0.0, 1.0, 40.0] {
            assert_eq!(flow.a(t).unwrap(), 0.25);
        }
        for (_, a) in flow.reintegrate(5.0, 1e-10).unwrap() {
            assert!((a - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn functional_flow_rejects_moment_inequality_violation() {
        assert!(matches!(
            functional_timeflow(1.0, 1.0, 1.0, 0.0, 5.0, 0.0, 1.0, 0.0),
            Err(TimeflowError::HoelderViolated(_))
        ));
        assert!(functional_timeflow(1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn projected_moment_is_linear() {
        assert_eq!(q_lambda(0.0, 5.0, 123.0), 5.0);
        assert_eq!(q_lambda(2.0, 1.0, 3.0), 7.0);
    }
}
