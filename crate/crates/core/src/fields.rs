//! Periodic Cartesian grids, complex wave fields on them, spectral
//! differentiation and quadrature.
//!
//! The periodic box [−L, L)^n stands in for R^n: every scenario must
//! choose L large enough that the fields of interest decay below
//! round-off at the boundary, which makes the rectangle rule spectrally
//! accurate and the Fourier derivatives exact up to truncation.
//!
//! Data layout is row-major over equal axes:
//!
//! ```text
//!   idx = (i_0 · N + i_1) · N + i_2      x_d = −L + i_d · h,  h = 2L/N
//! ```
//!
//! Wavenumbers follow the FFT's native ordering: index j maps to the
//! signed integer m = j (j < N/2) or j − N (j ≥ N/2), with k = (π/L)·m.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::spectral::FftEngine;

#[derive(Debug, Clone, PartialEq)]
pub enum FieldError {
    /// Dimension outside 1–3.
    DimsOutOfRange(usize),
    /// Points per dimension not a power of two at least 8.
    BadPointCount(usize),
    /// Half-width not strictly positive (or not finite).
    BadHalfWidth(f64),
    /// Sample buffer does not match the grid.
    LengthMismatch { expected: usize, got: usize },
    /// A non-finite value where a finite one is required.
    NonFinite,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldError::DimsOutOfRange(n) => write!(f, "n_dims must be 1, 2 or 3, got {n}"),
            FieldError::BadPointCount(n) => {
                write!(f, "points_per_dim must be a power of two >= 8, got {n}")
            }
            FieldError::BadHalfWidth(l) => write!(f, "half_width must be positive, got {l}"),
            FieldError::LengthMismatch { expected, got } => {
                write!(f, "buffer length {got} does not match grid size {expected}")
            }
            FieldError::NonFinite => write!(f, "non-finite value in field data"),
        }
    }
}

impl std::error::Error for FieldError {}

/// Uniform periodic sampling of the box [−L, L)^n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n_dims: usize,
    points_per_dim: usize,
    half_width: f64,
}

impl Grid {
    pub fn new(n_dims: usize, points_per_dim: usize, half_width: f64) -> Result<Grid, FieldError> {
        if !(1..=3).contains(&n_dims) {
            return Err(FieldError::DimsOutOfRange(n_dims));
        }
        if points_per_dim < 8 || !points_per_dim.is_power_of_two() {
            return Err(FieldError::BadPointCount(points_per_dim));
        }
        let width_ok = half_width.is_finite() && half_width > 0.0;
        if !width_ok {
            return Err(FieldError::BadHalfWidth(half_width));
        }
        Ok(Grid {
            n_dims,
            points_per_dim,
            half_width,
        })
    }

    pub fn n_dims(&self) -> usize {
        self.n_dims
    }

    pub fn points_per_dim(&self) -> usize {
        self.points_per_dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Node spacing h = 2L/N, identical along every axis.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points_per_dim as f64
    }

    /// Total number of nodes N^n.
    pub fn len(&self) -> usize {
        self.points_per_dim.pow(self.n_dims as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of node index i along one axis.
    pub fn axis_coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    /// Row-major decomposition of a flat index into per-axis indices.
    /// Unused trailing entries are zero.
    pub fn axis_indices(&self, idx: usize) -> [usize; 3] {
        let n = self.points_per_dim;
        let mut out = [0usize; 3];
        let mut rest = idx;
        for d in (0..self.n_dims).rev() {
            out[d] = rest % n;
            rest /= n;
        }
        out
    }

    /// Cartesian coordinates of a flat index; unused trailing entries 0.
    pub fn coords(&self, idx: usize) -> [f64; 3] {
        let ids = self.axis_indices(idx);
        let mut out = [0.0; 3];
        for d in 0..self.n_dims {
            out[d] = self.axis_coord(ids[d]);
        }
        out
    }

    /// Per-axis wavenumber table in FFT ordering (Nyquist mode carries
    /// its negative-side value −(N/2)·π/L; odd-derivative multipliers
    /// must zero it separately).
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.points_per_dim;
        let base = std::f64::consts::PI / self.half_width;
        (0..n)
            .map(|j| {
                let m = if j < n / 2 {
                    j as i64
                } else {
                    j as i64 - n as i64
                };
                base * m as f64
            })
            .collect()
    }

    /// True when the flat index lies on the outermost layer of nodes in
    /// any direction.
    pub fn on_boundary(&self, idx: usize) -> bool {
        let n = self.points_per_dim;
        let ids = self.axis_indices(idx);
        (0..self.n_dims).any(|d| ids[d] == 0 || ids[d] == n - 1)
    }
}

/// Spec-named constructor for [`Grid`].
pub fn make_grid(n_dims: usize, points_per_dim: usize, half_width: f64) -> Result<Grid, FieldError> {
    Grid::new(n_dims, points_per_dim, half_width)
}

/// A complex field sampled on a [`Grid`], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    pub grid: Grid,
    pub values: Vec<Complex64>,
    /// The time this snapshot is meant to represent.
    pub time_tag: f64,
}

impl WaveField {
    pub fn new(grid: Grid, values: Vec<Complex64>, time_tag: f64) -> Result<WaveField, FieldError> {
        if values.len() != grid.len() {
            return Err(FieldError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if !values.iter().all(|v| v.re.is_finite() && v.im.is_finite()) || !time_tag.is_finite() {
            return Err(FieldError::NonFinite);
        }
        Ok(WaveField {
            grid,
            values,
            time_tag,
        })
    }

    /// Build a field by evaluating `f` at every node.
    pub fn from_fn(
        grid: Grid,
        time_tag: f64,
        mut f: impl FnMut(&[f64]) -> Complex64,
    ) -> Result<WaveField, FieldError> {
        let values = (0..grid.len())
            .map(|i| f(&grid.coords(i)[..grid.n_dims()]))
            .collect();
        WaveField::new(grid, values, time_tag)
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.norm_sqr())
            .fold(0.0_f64, f64::max)
            .sqrt()
    }

    /// Largest boundary-layer density as a fraction of the peak density.
    /// Zero fields report 0 (they are trivially contained).
    pub fn boundary_density_ratio(&self) -> f64 {
        let peak = self
            .values
            .iter()
            .map(|v| v.norm_sqr())
            .fold(0.0_f64, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0_f64;
        for (i, v) in self.values.iter().enumerate() {
            if self.grid.on_boundary(i) {
                worst = worst.max(v.norm_sqr());
            }
        }
        worst / peak
    }
}

/// Density/velocity (Madelung) view of a wave field. The `mask` marks
/// nodes whose density clears the phase-validity floor; velocity values
/// off the mask are zeroed, never extrapolated.
#[derive(Debug, Clone, PartialEq)]
pub struct MadelungFields {
    pub grid: Grid,
    pub rho: Vec<f64>,
    pub velocity: Vec<Vec<f64>>,
    pub mask: Vec<bool>,
}

/// Gradient and Laplacian of a field, both spectral.
#[derive(Debug, Clone)]
pub struct SpectralDerivatives {
    /// One component per dimension.
    pub gradient: Vec<Vec<Complex64>>,
    pub laplacian: Vec<Complex64>,
}

/// Spectral ∇ and Δ of a field: one forward transform, then one inverse
/// per output. Exact for trigonometric polynomials the grid resolves.
pub fn spectral_derivatives(field: &WaveField) -> SpectralDerivatives {
    let grid = &field.grid;
    let n = grid.points_per_dim();
    let dims = grid.n_dims();
    let k = grid.wavenumbers();
    let mut engine = FftEngine::new(grid);

    let mut spectrum = field.values.clone();
    engine.forward(&mut spectrum);

    let mut laplacian = spectrum.clone();
    for (idx, v) in laplacian.iter_mut().enumerate() {
        let ids = grid.axis_indices(idx);
        let mut k_sq = 0.0;
        for d in 0..dims {
            k_sq += k[ids[d]] * k[ids[d]];
        }
        *v *= -k_sq;
    }
    engine.inverse(&mut laplacian);

    let mut gradient = Vec::with_capacity(dims);
    for d in 0..dims {
        let mut comp = spectrum.clone();
        for (idx, v) in comp.iter_mut().enumerate() {
            let j = grid.axis_indices(idx)[d];
            // The Nyquist mode has no signed partner; its odd-derivative
            // multiplier is zeroed.
            let kd = if j == n / 2 { 0.0 } else { k[j] };
            *v = Complex64::new(0.0, kd) * *v;
        }
        engine.inverse(&mut comp);
        gradient.push(comp);
    }

    SpectralDerivatives {
        gradient,
        laplacian,
    }
}

/// Rectangle-rule integral h^n Σ samples — spectrally accurate for the
/// smooth, decaying (or periodic) integrands in scope.
pub fn quadrature_integrate(scalar_samples: &[f64], grid: &Grid) -> Result<f64, FieldError> {
    if scalar_samples.len() != grid.len() {
        return Err(FieldError::LengthMismatch {
            expected: grid.len(),
            got: scalar_samples.len(),
        });
    }
    let h_pow = grid.spacing().powi(grid.n_dims() as i32);
    Ok(h_pow * scalar_samples.iter().sum::<f64>())
}
