//! Integral functionals of a field snapshot — mass, momentum (in both
//! the wave and hydrodynamic pictures), energy, moment of inertia and
//! its rate, the direction-weighted first moment — plus power-law rate
//! fitting against a reference time.
//!
//! Everything is measured from the discrete field by spectral
//! derivatives and the grid quadrature; nothing here assumes the field
//! came from a constructed family, which is what makes these reports
//! usable as acceptance checks for the direct integrator as well.

use std::error::Error;
use std::fmt;

use serde::Serialize;

use crate::constructor::ConstructorError;
use crate::fields::{quadrature_integrate, spectral_derivatives, FieldError, WaveField};
use crate::numerics::fit_line;

/// Largest boundary density (as a fraction of the peak) a field may
/// carry before its functionals are considered contaminated by the
/// periodic wrap-around.
const CONTAINMENT_LIMIT: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum DiagnosticsError {
    /// Boundary density too large relative to the peak: the field
    /// touches the edge of the box and the integrals are not trustworthy.
    NotContained { boundary_ratio: f64, limit: f64 },
    BadInput(String),
    Inner(ConstructorError),
    Field(FieldError),
}

impl fmt::Display for DiagnosticsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagnosticsError::NotContained {
                boundary_ratio,
                limit,
            } => write!(
                f,
                "field is not contained: boundary density is {boundary_ratio:.3e} of the peak \
                 (limit {limit:.0e})"
            ),
            DiagnosticsError::BadInput(why) => write!(f, "bad diagnostics input: {why}"),
            DiagnosticsError::Inner(e) => write!(f, "{e}"),
            DiagnosticsError::Field(e) => write!(f, "{e}"),
        }
    }
}

impl Error for DiagnosticsError {}

impl From<ConstructorError> for DiagnosticsError {
    fn from(e: ConstructorError) -> DiagnosticsError {
        DiagnosticsError::Inner(e)
    }
}

impl From<FieldError> for DiagnosticsError {
    fn from(e: FieldError) -> DiagnosticsError {
        DiagnosticsError::Field(e)
    }
}

/// Every scalar and vector functional of one snapshot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalReport {
    /// Mass ∫|Ψ|².
    pub n: f64,
    /// Wave-picture momentum Im ∫ Ψ∇Ψ̄, one entry per dimension.
    pub p: Vec<f64>,
    /// Hydrodynamic momentum ∫ρV. Evaluated as the momentum density
    /// 2·Im(Ψ̄∇Ψ) integrated over the whole grid — the product ρV needs
    /// no division and vanishes with the amplitude, so no mask enters.
    pub p_tilde: Vec<f64>,
    /// Energy ‖∇Ψ‖² − (2/(σ+2))·∫|Ψ|^{σ+2}.
    pub h: f64,
    /// The same energy assembled from the hydrodynamic fields:
    /// ∫(ρ|V|²/4 + |∇A|² − 2ρ^{(σ+2)/2}/(σ+2)) with A = ρ^{1/2}. The
    /// velocity term is evaluated as (ρV)²/(4ρ) from the momentum
    /// density — it vanishes quadratically in vacuum, so no mask is
    /// needed, and clipping it at a mask would lose an O(floor·‖V‖²·N)
    /// tail that swamps the H agreement for chirped fields.
    pub h_hydro: f64,
    /// Moment of inertia ∫|x|²ρ.
    pub m: f64,
    /// Its rate 2∫(x,V)ρ, again via the momentum density.
    pub mp: f64,
    /// Direction-weighted moment ∫(x,Λ)ρ for the supplied Λ.
    pub q: f64,
    /// ‖∇Ψ‖².
    pub grad_norm_sq: f64,
    /// max|Ψ| — the peak-amplitude tracker.
    pub amp_max: f64,
}

/// Measure every functional of one snapshot. `lambda` is the direction
/// for Q. `floor` is the density fraction below which pointwise phase
/// data would be untrusted; it is validated for interface parity with
/// the Madelung maps, but every integral here is assembled from
/// division-free momentum densities, so no mask ever clips them.
pub fn functionals(
    field: &WaveField,
    lambda: &[f64],
    floor: f64,
) -> Result<FunctionalReport, DiagnosticsError> {
    let grid = &field.grid;
    let ndims = grid.n_dims();
    if lambda.len() != ndims {
        return Err(DiagnosticsError::BadInput(format!(
            "lambda has {} components, the field lives in {ndims}",
            lambda.len()
        )));
    }
    if !lambda.iter().all(|v| v.is_finite()) {
        return Err(DiagnosticsError::BadInput(
            "lambda must be finite".into(),
        ));
    }
    let boundary_ratio = field.boundary_density_ratio();
    if boundary_ratio >= CONTAINMENT_LIMIT {
        return Err(DiagnosticsError::NotContained {
            boundary_ratio,
            limit: CONTAINMENT_LIMIT,
        });
    }
    if !(floor.is_finite() && floor > 0.0) {
        return Err(DiagnosticsError::BadInput(format!(
            "mask floor must be a positive fraction of the peak density, got {floor}"
        )));
    }
    if field.max_abs() == 0.0 {
        return Err(DiagnosticsError::BadInput(
            "cannot measure an identically-zero field".into(),
        ));
    }
    let sigma = 4.0 / ndims as f64;
    let rho: Vec<f64> = field.values.iter().map(|v| v.norm_sqr()).collect();
    let derivs = spectral_derivatives(field);

    let len = grid.len();
    let mut p = Vec::with_capacity(ndims);
    let mut p_tilde = Vec::with_capacity(ndims);
    let mut mp_density = vec![0.0; len];
    let mut vel_density = vec![0.0; len];
    for d in 0..ndims {
        let mut p_density = vec![0.0; len];
        let mut pt_density = vec![0.0; len];
        for i in 0..len {
            let v = field.values[i];
            let g = derivs.gradient[d][i];
            p_density[i] = (v * g.conj()).im;
            // Half the momentum density ρ·V_d.
            let im = (v.conj() * g).im;
            pt_density[i] = 2.0 * im;
            mp_density[i] += 2.0 * grid.coords(i)[d] * pt_density[i];
            // ρ·V_d²/4 = im²/ρ — decays with ρ, so vacuum needs no guard
            // beyond skipping exact zeros.
            if rho[i] > 0.0 {
                vel_density[i] += im * im / rho[i];
            }
        }
        p.push(quadrature_integrate(&p_density, grid)?);
        p_tilde.push(quadrature_integrate(&pt_density, grid)?);
    }

    let mut m_density = vec![0.0; len];
    let mut q_density = vec![0.0; len];
    let mut pow_density = vec![0.0; len];
    let mut grad_density = vec![0.0; len];
    for i in 0..len {
        let coords = grid.coords(i);
        let density = rho[i];
        let mut r2 = 0.0;
        let mut along = 0.0;
        for d in 0..ndims {
            r2 += coords[d] * coords[d];
            along += coords[d] * lambda[d];
            grad_density[i] += derivs.gradient[d][i].norm_sqr();
        }
        m_density[i] = density * r2;
        q_density[i] = density * along;
        pow_density[i] = density.powf((sigma + 2.0) / 2.0);
    }
    let n = quadrature_integrate(&rho, grid)?;
    let m = quadrature_integrate(&m_density, grid)?;
    let q = quadrature_integrate(&q_density, grid)?;
    let mp = quadrature_integrate(&mp_density, grid)?;
    let power = quadrature_integrate(&pow_density, grid)?;
    let grad_norm_sq = quadrature_integrate(&grad_density, grid)?;
    let vel_term = quadrature_integrate(&vel_density, grid)?;

    // |∇ρ|²/(4ρ) evaluated as |∇A|² with A = ρ^{1/2}: identical where
    // ρ > 0 and free of 0/0 in vacuum.
    let amp_field = WaveField::new(
        grid.clone(),
        rho.iter().map(|&r| r.sqrt().into()).collect(),
        field.time_tag,
    )?;
    let amp_derivs = spectral_derivatives(&amp_field);
    let mut amp_grad_density = vec![0.0; len];
    for d in 0..ndims {
        for i in 0..len {
            amp_grad_density[i] += amp_derivs.gradient[d][i].norm_sqr();
        }
    }
    let amp_grad = quadrature_integrate(&amp_grad_density, grid)?;

    let h = grad_norm_sq - 2.0 / (sigma + 2.0) * power;
    let h_hydro = vel_term + amp_grad - 2.0 / (sigma + 2.0) * power;

    Ok(FunctionalReport {
        n,
        p,
        p_tilde,
        h,
        h_hydro,
        m,
        mp,
        q,
        grad_norm_sq,
        amp_max: field.max_abs(),
    })
}

/// The moment inequality Q² ≤ |Λ|²·N·M, with a small slack for
/// round-off. States that violate it cannot exist, so a `false` means
/// the report was not measured from a genuine field.
pub fn hoelder_check(report: &FunctionalReport, lambda: &[f64]) -> bool {
    let ll: f64 = lambda.iter().map(|l| l * l).sum();
    let bound = ll * report.n * report.m;
    report.q * report.q <= bound + 1e-12 * bound.abs().max(1.0)
}

/// Ordering of ‖Ψ‖_{L²} against a reference norm (the decaying
/// profile's, for the global-existence threshold).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MassThreshold {
    Below,
    Equal,
    Above,
}

/// Compare the snapshot's L² norm √N to `ground_state_norm`, with a
/// 1e-6 relative band counting as equal.
pub fn mass_threshold_check(report: &FunctionalReport, ground_state_norm: f64) -> MassThreshold {
    let norm = report.n.sqrt();
    if (norm - ground_state_norm).abs() <= 1e-6 * ground_state_norm {
        MassThreshold::Equal
    } else if norm < ground_state_norm {
        MassThreshold::Below
    } else {
        MassThreshold::Above
    }
}

/// A fitted power law value ≈ C·(T−t)^{−λ}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    /// The exponent λ̂ (positive for growth toward T).
    pub exponent: f64,
    /// ln C of the fitted law.
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
}

/// Default fitting window: late enough for the asymptotics to dominate,
/// early enough that a field on a reasonable grid is still resolved.
pub fn default_rate_window(t_star: f64) -> (f64, f64) {
    (0.5 * t_star, 0.9 * t_star)
}

/// `count` sample times whose distances to `t_star` are geometrically
/// spaced between the window edges, ascending.
pub fn log_spaced_times(
    t_star: f64,
    window: (f64, f64),
    count: usize,
) -> Result<Vec<f64>, DiagnosticsError> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo < hi && hi < t_star) {
        return Err(DiagnosticsError::BadInput(format!(
            "need a window below the reference time, got ({lo}, {hi}) against {t_star}"
        )));
    }
    if count < 2 {
        return Err(DiagnosticsError::BadInput(format!(
            "need at least 2 sample times, got {count}"
        )));
    }
    let tau0 = t_star - lo;
    let tau1 = t_star - hi;
    let ratio = (tau1 / tau0).powf(1.0 / (count - 1) as f64);
    Ok((0..count)
        .map(|i| t_star - tau0 * ratio.powi(i as i32))
        .collect())
}

/// Least-squares fit of log(value) against −log(t_star − t) over the
/// samples inside `window`. Needs at least 8 in-window samples, all
/// before `t_star` with positive values.
pub fn fit_rate(
    series: &[(f64, f64)],
    t_star: f64,
    window: (f64, f64),
) -> Result<RateFit, DiagnosticsError> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo < hi && t_star.is_finite()) {
        return Err(DiagnosticsError::BadInput(format!(
            "degenerate fit window ({lo}, {hi})"
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(t, value) in series {
        if !(lo..=hi).contains(&t) {
            continue;
        }
        if t >= t_star {
            return Err(DiagnosticsError::BadInput(format!(
                "sample at t = {t} is not before the reference time {t_star}"
            )));
        }
        if !(value.is_finite() && value > 0.0) {
            return Err(DiagnosticsError::BadInput(format!(
                "cannot fit a log law through the value {value} at t = {t}"
            )));
        }
        xs.push(-(t_star - t).ln());
        ys.push(value.ln());
    }
    if xs.len() < 8 {
        return Err(DiagnosticsError::BadInput(format!(
            "need at least 8 in-window samples, got {}",
            xs.len()
        )));
    }
    let (intercept, slope) = fit_line(&xs, &ys);
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let mut ss_tot = 0.0;
    let mut ss_res = 0.0;
    for (&x, &y) in xs.iter().zip(ys.iter()) {
        ss_tot += (y - my) * (y - my);
        let r = y - (intercept + slope * x);
        ss_res += r * r;
    }
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else if ss_res <= f64::EPSILON {
        1.0
    } else {
        0.0
    };
    Ok(RateFit {
        exponent: slope,
        intercept,
        r_squared,
        window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    use num_complex::Complex64;

    use crate::constructor::{build_general_solution, build_solution, SolutionSpec};
    use crate::fields::make_grid;
    use crate::testkit::{ball, collapse_spec, gs1};
    use crate::timeflow::{general_timeflow, profile_timeflow};

    #[test]
    fn ground_state_report_matches_closed_forms() {
        let grid = make_grid(1, 512, 16.0).unwrap();
        let field = WaveField::from_fn(grid, 0.0, |x| {
            Complex64::new(gs1().evaluate(x[0].abs()), 0.0)
        })
        .unwrap();
        let report = functionals(&field, &[1.0], 1e-8).unwrap();
        let mass = 3f64.sqrt() * PI / 2.0;
        assert!(
            (report.n - mass).abs() <= 1e-8 * mass,
            "N = {} vs {}",
            report.n,
            mass
        );
        assert!(report.h.abs() < 1e-5, "H = {:.3e}", report.h);
        let peak = 3f64.powf(0.25);
        assert!(
            (report.amp_max - peak).abs() < 1e-9,
            "peak {} vs {}",
            report.amp_max,
            peak
        );
        // A real radial field carries no momentum and no weighted moment.
        assert!(report.p[0].abs() < 1e-12);
        assert!(report.p_tilde[0].abs() < 1e-12);
        assert!(report.q.abs() < 1e-12);
        assert!(report.mp.abs() < 1e-12);
        assert!(report.m > 0.0 && report.grad_norm_sq > 0.0);
        assert!(
            (report.h - report.h_hydro).abs() <= 1e-8 * (report.h.abs() + report.grad_norm_sq)
        );
        assert!(hoelder_check(&report, &[1.0]));
        assert_eq!(
            mass_threshold_check(&report, gs1().l2_norm()),
            MassThreshold::Equal
        );
    }

    #[test]
    fn boosted_gaussian_matches_closed_forms() {
        // Ψ = exp(−(x−x̄)²/2)·exp(i·k0·x) with x̄ on a grid node and k0
        // commensurate with the box, so every functional has a closed
        // form: N = √π, P = −k0·N, P̃ = 2k0·N, M = √π(1/2 + x̄²),
        // Q = x̄√π, M' = 4k0·x̄·√π, H = √π(1/2 + k0²) − √(π/3)/3.
        let grid = make_grid(1, 512, 10.0).unwrap();
        let center = 0.625; // 16 grid cells
        let k0 = PI / 2.0; // period 4 divides the box length 20
        let field = WaveField::from_fn(grid, 0.0, |x| {
            let y = x[0] - center;
            Complex64::from_polar((-y * y / 2.0).exp(), k0 * x[0])
        })
        .unwrap();
        let report = functionals(&field, &[1.0], 1e-8).unwrap();

        let n = PI.sqrt();
        let checks = [
            ("N", report.n, n),
            ("P", report.p[0], -k0 * n),
            ("P~", report.p_tilde[0], 2.0 * k0 * n),
            ("M", report.m, n * (0.5 + center * center)),
            ("Q", report.q, center * n),
            ("M'", report.mp, 4.0 * k0 * center * n),
            (
                "H",
                report.h,
                n * (0.5 + k0 * k0) - (PI / 3.0).sqrt() / 3.0,
            ),
        ];
        for (name, got, want) in checks {
            assert!(
                (got - want).abs() <= 1e-9 * want.abs().max(1.0),
                "{name}: {got} vs {want}"
            );
        }
        for d in 0..1 {
            assert!(
                (report.p_tilde[d] + 2.0 * report.p[d]).abs()
                    <= 1e-9 * report.p_tilde[d].abs().max(1e-300),
                "momentum pictures disagree"
            );
        }
        assert!(
            (report.h - report.h_hydro).abs() <= 1e-8 * (report.h.abs() + report.grad_norm_sq)
        );
        assert!(hoelder_check(&report, &[1.0]));
    }

    #[test]
    fn report_tracks_the_constructed_flow() {
        let spec = collapse_spec(-1.0, 0.0, 0.0);
        let vc = spec.vc.unwrap();
        let grid = make_grid(1, 2048, 16.0).unwrap();
        let report_at = |t: f64| {
            let field = build_solution(&spec, t, &grid).unwrap();
            functionals(&field, &[1.0], 1e-8).unwrap()
        };
        let mut n_first = None;
        for &t in &[0.1, 0.4, 0.7] {
            let report = report_at(t);
            // Mass constancy across snapshots.
            let n0 = *n_first.get_or_insert(report.n);
            assert!((report.n - n0).abs() <= 1e-10 * n0);
            // The moment quadratic and its rate.
            let m_exact = vc.m(t);
            assert!(
                (report.m - m_exact).abs() <= 1e-8 * m_exact,
                "t = {t}: M = {} vs {}",
                report.m,
                m_exact
            );
            let mp_exact = vc.m_prime(t);
            assert!(
                (report.mp - mp_exact).abs() <= 1e-7 * mp_exact.abs(),
                "t = {t}: M' = {} vs {}",
                report.mp,
                mp_exact
            );
            // Conserved energy.
            assert!(
                (report.h - vc.energy).abs() <= 1e-8 * (vc.energy.abs() + report.grad_norm_sq),
                "t = {t}: H = {} vs {}",
                report.h,
                vc.energy
            );
            assert!(
                (report.h - report.h_hydro).abs()
                    <= 1e-8 * (report.h.abs() + report.grad_norm_sq)
            );
            // M' measured two ways: the report's integral against a
            // centered difference of M(t) — exact for a quadratic.
            let delta = 1e-4;
            let fd = (report_at(t + delta).m - report_at(t - delta).m) / (2.0 * delta);
            assert!(
                (report.mp - fd).abs() <= 1e-5 * report.mp.abs(),
                "t = {t}: M' integral {} vs finite difference {}",
                report.mp,
                fd
            );
        }
    }

    #[test]
    fn hoelder_inequality_saturates_and_rejects() {
        // A hand-built report that no field can produce.
        let fake = FunctionalReport {
            n: 1.0,
            p: vec![0.0],
            p_tilde: vec![0.0],
            h: 0.0,
            h_hydro: 0.0,
            m: 1.0,
            mp: 0.0,
            q: 3.0,
            grad_norm_sq: 0.0,
            amp_max: 1.0,
        };
        assert!(!hoelder_check(&fake, &[1.0]));

        // A narrow bump far from the origin approaches equality:
        // Q²/(N·M) = x̄²/(x̄² + var) → 1 as the width shrinks.
        let grid = make_grid(1, 1024, 16.0).unwrap();
        let field = WaveField::from_fn(grid, 0.0, |x| {
            let y = (x[0] - 6.0) / 0.3;
            Complex64::new((-y * y / 2.0).exp(), 0.0)
        })
        .unwrap();
        let report = functionals(&field, &[1.0], 1e-8).unwrap();
        assert!(hoelder_check(&report, &[1.0]));
        let ratio = report.q * report.q / (report.n * report.m);
        assert!(
            (0.99..1.0).contains(&ratio),
            "saturation ratio {ratio} should approach 1 from below"
        );
    }

    #[test]
    fn mass_threshold_orders_profiles() {
        let grid = make_grid(1, 512, 16.0).unwrap();
        let norm = gs1().l2_norm();

        let half = WaveField::from_fn(grid.clone(), 0.0, |x| {
            Complex64::new(0.5 * gs1().evaluate(x[0].abs()), 0.0)
        })
        .unwrap();
        let report = functionals(&half, &[1.0], 1e-8).unwrap();
        assert_eq!(mass_threshold_check(&report, norm), MassThreshold::Below);

        // A quadratic chirp moves no mass.
        let chirped = build_solution(&collapse_spec(-1.0, 0.0, 0.0), 0.0, &grid).unwrap();
        let report = functionals(&chirped, &[1.0], 1e-8).unwrap();
        assert_eq!(mass_threshold_check(&report, norm), MassThreshold::Equal);

        // The wall-cut profile carries more mass than the decaying one.
        let confined = WaveField::from_fn(grid, 0.0, |x| {
            Complex64::new(ball().evaluate(x[0].abs()), 0.0)
        })
        .unwrap();
        let report = functionals(&confined, &[1.0], 1e-8).unwrap();
        assert_eq!(mass_threshold_check(&report, norm), MassThreshold::Above);
    }

    #[test]
    fn fit_rate_recovers_exact_power_laws() {
        let t_star = 1.0;
        let window = default_rate_window(t_star);
        let times = log_spaced_times(t_star, window, 32).unwrap();
        assert_eq!(times.len(), 32);
        assert!((times[0] - window.0).abs() < 1e-12);
        assert!((times[31] - window.1).abs() < 1e-12);
        assert!(times.windows(2).all(|w| w[0] < w[1]));

        let c = 2.7;
        let series: Vec<(f64, f64)> = times
            .iter()
            .map(|&t| (t, c * (t_star - t).powf(-1.5)))
            .collect();
        let fit = fit_rate(&series, t_star, window).unwrap();
        assert!(
            (fit.exponent - 1.5).abs() < 1e-10,
            "exponent {}",
            fit.exponent
        );
        assert!(
            (fit.intercept - c.ln()).abs() < 1e-10,
            "intercept {}",
            fit.intercept
        );
        assert!(fit.r_squared > 1.0 - 1e-12);
        assert_eq!(fit.window, window);

        // Guards: too few samples, nonpositive values, samples at or
        // past the reference time, backwards window.
        assert!(fit_rate(&series[..7], t_star, window).is_err());
        let mut bad = series.clone();
        bad[3].1 = 0.0;
        assert!(fit_rate(&bad, t_star, window).is_err());
        assert!(fit_rate(&[(0.6, 1.0); 9], 0.55, (0.5, 0.9)).is_err());
        assert!(fit_rate(&series, t_star, (0.9, 0.5)).is_err());
        assert!(log_spaced_times(1.0, (0.9, 0.5), 8).is_err());
        assert!(log_spaced_times(1.0, (0.5, 1.1), 8).is_err());
    }

    /// Peak amplitude and gradient norm of the two collapse regimes,
    /// fitted against the exact blow-up time: the potential-free family
    /// contracts like (T−t), the confined one like (T−t)^{1/2}, and the
    /// measured exponents must say so.
    #[test]
    fn constructed_rates_hit_the_advertised_exponents() {
        // Potential-free: amp ~ (T−t)^{-1/2}, ‖∇Ψ‖² ~ (T−t)^{-2}.
        let spec = collapse_spec(-1.0, 0.0, 0.0);
        let t_star = spec.vc.unwrap().collapse_time().unwrap();
        let grid = make_grid(1, 8192, 12.0).unwrap();
        let times =
            log_spaced_times(t_star, (0.85 * t_star, 0.97 * t_star), 16).unwrap();
        let mut amp_series = Vec::new();
        let mut grad_series = Vec::new();
        for &t in &times {
            let field = build_solution(&spec, t, &grid).unwrap();
            let report = functionals(&field, &[1.0], 1e-8).unwrap();
            amp_series.push((t, report.amp_max));
            grad_series.push((t, report.grad_norm_sq));
        }
        let amp = fit_rate(&amp_series, t_star, (0.85 * t_star, 0.97 * t_star)).unwrap();
        assert!(
            (amp.exponent - 0.5).abs() <= 0.02 * 0.5,
            "free-collapse amplitude exponent {}",
            amp.exponent
        );
        let grad = fit_rate(&grad_series, t_star, (0.85 * t_star, 0.97 * t_star)).unwrap();
        assert!(
            (grad.exponent - 2.0).abs() <= 0.02 * 2.0,
            "free-collapse gradient exponent {}",
            grad.exponent
        );

        // Confined (wall-cut profile, k = −0.5): the moment has a simple
        // root, so amp ~ (T−t)^{-1/4} and ‖∇Ψ‖² ~ (T−t)^{-1}.
        let profile = ball().clone();
        let vc = crate::constructor::initial_coefficients(&profile, -1.0).unwrap();
        let flow = profile_timeflow(vc, profile.params.gamma0, 1).unwrap();
        let spec = SolutionSpec::new(
            profile,
            flow,
            Some(vc),
            vec![0.0],
            vec![0.0],
            0.0,
            0.0,
            None,
            None,
        )
        .unwrap();
        let t_star = vc.collapse_time().unwrap();
        let grid = make_grid(1, 2048, 6.0).unwrap();
        let window = (0.85 * t_star, 0.97 * t_star);
        let times = log_spaced_times(t_star, window, 16).unwrap();
        let mut amp_series = Vec::new();
        let mut grad_series = Vec::new();
        for &t in &times {
            let field = build_solution(&spec, t, &grid).unwrap();
            let report = functionals(&field, &[1.0], 1e-8).unwrap();
            amp_series.push((t, report.amp_max));
            grad_series.push((t, report.grad_norm_sq));
        }
        let amp = fit_rate(&amp_series, t_star, window).unwrap();
        assert!(
            (amp.exponent - 0.25).abs() <= 0.05 * 0.25,
            "confined-collapse amplitude exponent {}",
            amp.exponent
        );
        let grad = fit_rate(&grad_series, t_star, window).unwrap();
        assert!(
            (grad.exponent - 1.0).abs() <= 0.05,
            "confined-collapse gradient exponent {}",
            grad.exponent
        );
    }

    #[test]
    fn weighted_moment_grows_linearly_under_drift() {
        // Drifting solitary wave: Q(t) = N·b0·t/… with constant P̃, so
        // the Q series must be a straight line with slope (P̃, Λ).
        let flow = general_timeflow(0.0, 0.5, 0.0, 1.0, vec![1.0]);
        let spec = SolutionSpec::new(
            gs1().clone(),
            flow,
            None,
            vec![0.0],
            vec![0.0],
            0.0,
            0.0,
            None,
            None,
        )
        .unwrap();
        let grid = make_grid(1, 1024, 16.0).unwrap();
        let mut ts = Vec::new();
        let mut qs = Vec::new();
        let mut slope_expected = None;
        for i in 0..9 {
            let t = 0.2 * i as f64;
            let field = build_general_solution(&spec, t, &grid).unwrap();
            let report = functionals(&field, &[1.0], 1e-8).unwrap();
            slope_expected.get_or_insert(report.p_tilde[0]);
            ts.push(t);
            qs.push(report.q);
        }
        let slope_expected = slope_expected.unwrap();
        let (intercept, slope) = {
            let fit = fit_line(&ts, &qs);
            (fit.0, fit.1)
        };
        assert!(
            (slope - slope_expected).abs() <= 1e-6 * slope_expected.abs(),
            "Q slope {slope} vs momentum {slope_expected}"
        );
        assert!(intercept.abs() <= 1e-8 * slope_expected.abs());
        // And the line really is a line.
        for (&t, &q) in ts.iter().zip(qs.iter()) {
            assert!((q - (intercept + slope * t)).abs() <= 1e-8 * slope_expected.abs());
        }
    }
}
