//! Small numerical kernels shared by the solvers: an embedded adaptive
//! Runge–Kutta integrator (Cash–Karp 4(5)), a fixed-step RK4 path
//! integrator, adaptive Simpson quadrature, cubic Hermite interpolation
//! and a least-squares line fit.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum OdeError {
    /// Step size collapsed below the floor before reaching the target time.
    StepUnderflow { t: f64 },
    /// Step budget exhausted before reaching the target time.
    TooManySteps { t: f64 },
}

impl fmt::Display for OdeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OdeError::StepUnderflow { t } => {
                write!(f, "step size underflow at t = {t}")
            }
            OdeError::TooManySteps { t } => {
                write!(f, "step budget exhausted at t = {t}")
            }
        }
    }
}

impl std::error::Error for OdeError {}

#[derive(Debug, Clone)]
pub struct AdaptiveOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            h_init: 1e-3,
            h_min: 1e-14,
            max_steps: 2_000_000,
        }
    }
}

/// One Cash–Karp step from `(t, y)` with size `h`.
///
/// Returns the fifth-order solution and the error ratio
/// `max_i |e_i| / (abs_tol + rel_tol·|y_i|)`; the step is acceptable
/// when the ratio is at most one.
fn cash_karp_step<const N: usize>(
    f: &impl Fn(f64, &[f64; N]) -> [f64; N],
    t: f64,
    y: &[f64; N],
    h: f64,
    opts: &AdaptiveOptions,
) -> ([f64; N], f64) {
    const C: [f64; 6] = [0.0, 0.2, 0.3, 0.6, 1.0, 0.875];
    const A: [[f64; 5]; 6] = [
        [0.0, 0.0, 0.0, 0.0, 0.0],
        [0.2, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0],
        [0.3, -0.9, 1.2, 0.0, 0.0],
        [-11.0 / 54.0, 2.5, -70.0 / 27.0, 35.0 / 27.0, 0.0],
        [
            1631.0 / 55296.0,
            175.0 / 512.0,
            575.0 / 13824.0,
            44275.0 / 110592.0,
            253.0 / 4096.0,
        ],
    ];
    const B5: [f64; 6] = [
        37.0 / 378.0,
        0.0,
        250.0 / 621.0,
        125.0 / 594.0,
        0.0,
        512.0 / 1771.0,
    ];
    const B4: [f64; 6] = [
        2825.0 / 27648.0,
        0.0,
        18575.0 / 48384.0,
        13525.0 / 55296.0,
        277.0 / 14336.0,
        0.25,
    ];

    let mut k = [[0.0; N]; 6];
    k[0] = f(t, y);
    for stage in 1..6 {
        let mut arg = *y;
        for (j, kj) in k.iter().enumerate().take(stage) {
            let a = A[stage][j];
            if a != 0.0 {
                for i in 0..N {
                    arg[i] += h * a * kj[i];
                }
            }
        }
        k[stage] = f(t + C[stage] * h, &arg);
    }

    let mut y5 = *y;
    let mut y4 = *y;
    for (j, kj) in k.iter().enumerate() {
        for i in 0..N {
            y5[i] += h * B5[j] * kj[i];
            y4[i] += h * B4[j] * kj[i];
        }
    }

    let mut ratio = 0.0_f64;
    for i in 0..N {
        let scale = opts.abs_tol + opts.rel_tol * y[i].abs().max(y5[i].abs());
        ratio = ratio.max((y5[i] - y4[i]).abs() / scale);
    }
    (y5, ratio)
}

/// Integrate `y' = f(t, y)` forward from `(t0, y0)` to `t_end` with
/// adaptive step control. `on_step` sees every accepted step; returning
/// `false` stops the integration early (the state reached so far is
/// returned, distinguishable by its time stamp).
pub fn integrate_adaptive<const N: usize>(
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &AdaptiveOptions,
    mut on_step: impl FnMut(f64, &[f64; N]) -> bool,
) -> Result<(f64, [f64; N]), OdeError> {
    debug_assert!(t_end >= t0);
    let mut t = t0;
    let mut y = y0;
    let mut h = opts.h_init.min(t_end - t0);
    let mut steps = 0usize;

    while t < t_end {
        if h > t_end - t {
            h = t_end - t;
        }
        let (y5, ratio) = cash_karp_step(&f, t, &y, h, opts);
        if ratio <= 1.0 {
            t += h;
            y = y5;
            if !on_step(t, &y) {
                return Ok((t, y));
            }
            h *= (0.9 * ratio.powf(-0.2)).clamp(1.0, 5.0);
        } else {
            h *= (0.9 * ratio.powf(-0.25)).max(0.1);
        }
        if h < opts.h_min && t < t_end {
            return Err(OdeError::StepUnderflow { t });
        }
        steps += 1;
        if steps > opts.max_steps {
            return Err(OdeError::TooManySteps { t });
        }
    }
    Ok((t, y))
}

/// Classic fixed-step RK4 from `t0` over `n_steps` steps of size `h`,
/// recording the state at every node (`n_steps + 1` entries).
pub fn rk4_path<const N: usize>(
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    h: f64,
    n_steps: usize,
) -> Vec<[f64; N]> {
    let mut out = Vec::with_capacity(n_steps + 1);
    let mut y = y0;
    out.push(y);
    for step in 0..n_steps {
        let t = t0 + step as f64 * h;
        y = rk4_step(&f, t, &y, h);
        out.push(y);
    }
    out
}

/// One classic RK4 step of size `h` from `(t, y)`.
pub fn rk4_step<const N: usize>(
    f: &impl Fn(f64, &[f64; N]) -> [f64; N],
    t: f64,
    y: &[f64; N],
    h: f64,
) -> [f64; N] {
    let k1 = f(t, y);
    let mut arg = *y;
    for i in 0..N {
        arg[i] = y[i] + 0.5 * h * k1[i];
    }
    let k2 = f(t + 0.5 * h, &arg);
    for i in 0..N {
        arg[i] = y[i] + 0.5 * h * k2[i];
    }
    let k3 = f(t + 0.5 * h, &arg);
    for i in 0..N {
        arg[i] = y[i] + h * k3[i];
    }
    let k4 = f(t + h, &arg);
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Composite Simpson rule on uniformly spaced samples (spacing `h`).
/// An even interval count uses pure Simpson; otherwise the last three
/// intervals are closed with the 3/8 rule.
pub fn simpson_uniform(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * h * (values[0] + values[1]),
        3 => h / 3.0 * (values[0] + 4.0 * values[1] + values[2]),
        _ => {
            let intervals = n - 1;
            if intervals.is_multiple_of(2) {
                let mut acc = values[0] + values[n - 1];
                for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
                    acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
                }
                h / 3.0 * acc
            } else {
                // Simpson over the even-count head, 3/8 over the last
                // three intervals.
                let head = simpson_uniform(&values[..n - 3], h);
                let tail = 3.0 * h / 8.0
                    * (values[n - 4]
                        + 3.0 * values[n - 3]
                        + 3.0 * values[n - 2]
                        + values[n - 1]);
                head + tail
            }
        }
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute
/// tolerance `tol`.
pub fn integrate_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson(fa, fm, fb, a, b);
    recurse(&f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Cubic Hermite basis evaluation on one cell: values `y0, y1` and
/// derivatives `m0, m1` at the cell ends, `s ∈ [0, 1]` the normalized
/// position, `h` the cell width.
pub fn hermite_cubic(y0: f64, y1: f64, m0: f64, m1: f64, s: f64, h: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0
        + (s3 - 2.0 * s2 + s) * h * m0
        + (-2.0 * s3 + 3.0 * s2) * y1
        + (s3 - s2) * h * m1
}

/// Least-squares straight line `y ≈ intercept + slope·x`.
///
/// Panics if fewer than two samples are supplied (caller bug).
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert!(xs.len() == ys.len() && xs.len() >= 2, "need >= 2 samples");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adaptive_rk_matches_exponential() {
        // y' = -2ty, y(0) = 1 has the closed form exp(-t^2).
        let opts = AdaptiveOptions::default();
        let (t, y) = integrate_adaptive(
            |t, y: &[f64; 1]| [-2.0 * t * y[0]],
            0.0,
            [1.0],
            2.0,
            &opts,
            |_, _| true,
        )
        .unwrap();
        assert_eq!(t, 2.0);
        assert!((y[0] - (-4.0_f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn adaptive_rk_two_component_rotation() {
        // Harmonic oscillator: (cos t, -sin t) after a full period.
        let opts = AdaptiveOptions::default();
        let (_, y) = integrate_adaptive(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [1.0, 0.0],
            2.0 * std::f64::consts::PI,
            &opts,
            |_, _| true,
        )
        .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-10);
        assert!(y[1].abs() < 1e-10);
    }

    #[test]
    fn adaptive_rk_early_stop_reports_partial_time() {
        let opts = AdaptiveOptions::default();
        let (t, y) = integrate_adaptive(
            |_, y: &[f64; 1]| [y[0]],
            0.0,
            [1.0],
            10.0,
            &opts,
            |_, y| y[0] < 5.0,
        )
        .unwrap();
        assert!(t < 10.0);
        assert!(y[0] >= 5.0);
    }

    #[test]
    fn simpson_uniform_even_and_odd_interval_counts() {
        // sin on [0, pi] integrates to 2; try both parities of node count.
        for n in [129usize, 130, 257, 258] {
            let h = std::f64::consts::PI / (n - 1) as f64;
            let vals: Vec<f64> = (0..n).map(|i| (i as f64 * h).sin()).collect();
            let v = simpson_uniform(&vals, h);
            assert!((v - 2.0).abs() < 1e-8, "n={n}: {v}");
        }
    }

    #[test]
    fn rk4_path_fourth_order_convergence() {
        // Error against exp(1) should shrink ~16x when the step halves.
        let f = |_: f64, y: &[f64; 1]| [y[0]];
        let coarse = rk4_path(f, 0.0, [1.0], 1.0 / 64.0, 64);
        let fine = rk4_path(f, 0.0, [1.0], 1.0 / 128.0, 128);
        let e = std::f64::consts::E;
        let ec = (coarse.last().unwrap()[0] - e).abs();
        let ef = (fine.last().unwrap()[0] - e).abs();
        assert!(ec / ef > 14.0 && ec / ef < 18.0, "ratio {}", ec / ef);
    }

    #[test]
    fn simpson_gaussian_and_singular_edge() {
        let v = integrate_simpson(|x| (-x * x).exp(), -10.0, 10.0, 1e-13);
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-12);
        // Smooth but sharply peaked integrand.
        let v = integrate_simpson(|x| 1.0 / (1.0 + 400.0 * x * x), -1.0, 1.0, 1e-12);
        let exact = (20.0_f64).atan() / 10.0;
        assert!((v - exact).abs() < 1e-11);
    }

    #[test]
    fn hermite_reproduces_cubics() {
        // p(x) = x^3 - 2x + 1 on the cell [1, 1.5].
        let p = |x: f64| x * x * x - 2.0 * x + 1.0;
        let dp = |x: f64| 3.0 * x * x - 2.0;
        let (a, h) = (1.0, 0.5);
        for i in 0..=10 {
            let s = i as f64 / 10.0;
            let v = hermite_cubic(p(a), p(a + h), dp(a), dp(a + h), s, h);
            assert!((v - p(a + s * h)).abs() < 1e-13);
        }
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let xs: Vec<f64> = (0..20).map(|i| 0.3 * i as f64 - 2.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 4.25 - 1.75 * x).collect();
        let (b, m) = fit_line(&xs, &ys);
        assert!((b - 4.25).abs() < 1e-12);
        assert!((m + 1.75).abs() < 1e-12);
    }
}
