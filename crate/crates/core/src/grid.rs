//! Uniform periodic grids, sampled fields, and Fourier-multiplier calculus.
//!
//! Fields live on `[-L/2, L/2)` with periodic wrap. Derivatives and the other
//! translation-invariant operators are applied as Fourier multipliers; all
//! integrals use the rectangle rule, which is spectrally exact for smooth
//! periodic integrands.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(n), p.plan_fft_inverse(n))
    })
}

/// A uniform periodic grid on `[-L/2, L/2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    length: f64,
    n: usize,
}

impl Grid {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "point count must be a power of two >= 8, got {n}"
            )));
        }
        Ok(Self { length, n })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        -0.5 * self.length + j as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Signed angular wavenumber of FFT slot `j`. The Nyquist slot gets `-pi/h`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        let n = self.n as isize;
        let j = j as isize;
        let m = if j < n / 2 { j } else { j - n };
        2.0 * PI * m as f64 / self.length
    }

    pub fn nyquist_index(&self) -> usize {
        self.n / 2
    }

    /// Largest resolved wavenumber `pi/h`.
    pub fn k_max(&self) -> f64 {
        PI / self.spacing()
    }

    /// Map a displacement onto its periodic representative in `[-L/2, L/2)`.
    pub fn wrap(&self, d: f64) -> f64 {
        d - self.length * ((d + 0.5 * self.length) / self.length).floor()
    }

    pub fn zeros(&self) -> GridFunction {
        GridFunction {
            grid: *self,
            values: vec![0.0; self.n],
        }
    }

    pub fn constant(&self, v: f64) -> GridFunction {
        GridFunction {
            grid: *self,
            values: vec![v; self.n],
        }
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            grid: *self,
            values: (0..self.n).map(|j| f(self.x(j))).collect(),
        }
    }

    /// The coordinate field `x` itself.
    pub fn coordinate(&self) -> GridFunction {
        self.sample(|x| x)
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Grid(L={}, N={})", self.length, self.n)
    }
}

/// Real samples of a field on a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::RejectedInput(format!(
                "expected {} samples, got {}",
                grid.n_points(),
                values.len()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::RejectedInput(format!("non-finite sample at index {j}")));
        }
        Ok(Self { grid, values })
    }

    /// Construct without the finiteness scan. Lengths must already agree.
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n_points());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    fn check_finite(&self) -> Result<()> {
        if let Some(j) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::RejectedInput(format!("non-finite sample at index {j}")));
        }
        Ok(())
    }

    fn same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                left: self.grid.to_string(),
                right: other.grid.to_string(),
            });
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise map that also sees the grid coordinate.
    pub fn map_with_x(&self, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        let g = self.grid;
        GridFunction::from_raw(g, self.values.iter().enumerate().map(|(j, &v)| f(g.x(j), v)).collect())
    }

    /// Pointwise binary map. Panics when the grids differ.
    pub fn zip_map(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        assert_eq!(self.grid, other.grid, "zip_map on mismatched grids");
        GridFunction::from_raw(
            self.grid,
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        )
    }

    pub fn scale(&self, s: f64) -> GridFunction {
        self.map(|v| s * v)
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &GridFunction) -> GridFunction {
        self.zip_map(other, |a, b| a + s * b)
    }

    /// Rectangle-rule `L^2` pairing. Panics when the grids differ.
    pub fn dot(&self, other: &GridFunction) -> f64 {
        assert_eq!(self.grid, other.grid, "dot on mismatched grids");
        self.grid.spacing() * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Checked `L^2` pairing `h * sum f_j g_j`.
    pub fn inner_product(&self, other: &GridFunction) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self.dot(other))
    }

    pub fn integral(&self) -> f64 {
        self.grid.spacing() * self.values.iter().sum::<f64>()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn norm_l2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_l1(&self) -> f64 {
        self.grid.spacing() * self.values.iter().map(|v| v.abs()).sum::<f64>()
    }

    pub fn norm_sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `||(x - center) f||_1` with the displacement taken periodically.
    pub fn moment_l1(&self, center: f64) -> f64 {
        let g = self.grid;
        g.spacing()
            * self
                .values
                .iter()
                .enumerate()
                .map(|(j, v)| (g.wrap(g.x(j) - center) * v).abs())
                .sum::<f64>()
    }

    /// `sqrt(||f||^2 + ||f'||^2)`.
    pub fn sobolev_norm_h1(&self) -> f64 {
        let spec = self.spectrum();
        let g = self.grid;
        let n = g.n_points() as f64;
        // Parseval: h * sum |f_j|^2 = (L / N^2) * sum |F_k|^2.
        let nyq = g.nyquist_index();
        let s: f64 = spec
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let k = if j == nyq { 0.0 } else { g.wavenumber(j) };
                (1.0 + k * k) * c.norm_sqr()
            })
            .sum();
        (g.length() * s / (n * n)).sqrt()
    }

    /// Unnormalized forward DFT of the samples.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let (fwd, _) = plans(self.len());
        let mut buf: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fwd.process(&mut buf);
        buf
    }

    /// Inverse of [`GridFunction::spectrum`], keeping the real part.
    pub fn from_spectrum(grid: Grid, mut spec: Vec<Complex64>) -> GridFunction {
        let (_, inv) = plans(grid.n_points());
        inv.process(&mut spec);
        let scale = 1.0 / grid.n_points() as f64;
        GridFunction::from_raw(grid, spec.iter().map(|c| c.re * scale).collect())
    }

    /// Apply a Fourier multiplier `m(k, is_nyquist)`.
    pub fn apply_multiplier(&self, m: impl Fn(f64, bool) -> Complex64) -> GridFunction {
        let g = self.grid;
        let nyq = g.nyquist_index();
        let mut spec = self.spectrum();
        for (j, c) in spec.iter_mut().enumerate() {
            *c *= m(g.wavenumber(j), j == nyq);
        }
        GridFunction::from_spectrum(g, spec)
    }

    /// Spectral derivative of order 1, 2 or 3.
    pub fn derivative(&self, order: u32) -> Result<GridFunction> {
        if !(1..=3).contains(&order) {
            return Err(Error::RejectedInput(format!(
                "derivative order must be 1, 2 or 3, got {order}"
            )));
        }
        self.check_finite()?;
        Ok(self.d(order))
    }

    /// Unchecked spectral derivative of any order.
    pub(crate) fn d(&self, order: u32) -> GridFunction {
        let odd = order % 2 == 1;
        self.apply_multiplier(|k, nyq| {
            if odd && nyq {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, k).powu(order)
            }
        })
    }

    /// Translate by an arbitrary distance: `g(x) = f(x - shift)`.
    pub fn shift(&self, shift: f64) -> GridFunction {
        self.apply_multiplier(|k, nyq| {
            if nyq {
                Complex64::new((k * shift).cos(), 0.0)
            } else {
                Complex64::from_polar(1.0, -k * shift)
            }
        })
    }

    /// Zero every mode with `|k| > fraction * k_max`.
    pub fn dealias(&self, fraction: f64) -> GridFunction {
        let cut = fraction * self.grid.k_max();
        self.apply_multiplier(|k, _| {
            if k.abs() > cut {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(1.0, 0.0)
            }
        })
    }

    /// Index of the largest `|f_j|` refined by a parabola through its neighbours.
    pub fn peak(&self) -> (f64, f64) {
        let n = self.len();
        let (j, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bj, bv), (j, v)| {
                if v.abs() > bv {
                    (j, v.abs())
                } else {
                    (bj, bv)
                }
            });
        let ym = self.values[(j + n - 1) % n];
        let y0 = self.values[j];
        let yp = self.values[(j + 1) % n];
        let denom = ym - 2.0 * y0 + yp;
        let (offset, value) = if denom.abs() > 0.0 {
            let t = 0.5 * (ym - yp) / denom;
            let t = t.clamp(-1.0, 1.0);
            (t, y0 - 0.25 * (ym - yp) * t)
        } else {
            (0.0, y0)
        };
        let h = self.grid.spacing();
        (self.grid.wrap(self.grid.x(j) + offset * h), value)
    }
}

impl Add for &GridFunction {
    type Output = GridFunction;
    fn add(self, rhs: &GridFunction) -> GridFunction {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &GridFunction {
    type Output = GridFunction;
    fn sub(self, rhs: &GridFunction) -> GridFunction {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &GridFunction {
    type Output = GridFunction;
    fn mul(self, rhs: f64) -> GridFunction {
        self.scale(rhs)
    }
}

impl Mul for &GridFunction {
    type Output = GridFunction;
    fn mul(self, rhs: &GridFunction) -> GridFunction {
        self.zip_map(rhs, |a, b| a * b)
    }
}

impl Neg for &GridFunction {
    type Output = GridFunction;
    fn neg(self) -> GridFunction {
        self.map(|v| -v)
    }
}

/// Spectral derivative `d^order f / dx^order`, order in 1..=3.
pub fn derivative(f: &GridFunction, order: u32) -> Result<GridFunction> {
    f.derivative(order)
}

/// Rectangle-rule `L^2` pairing; errors when the grids differ.
pub fn inner_product(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    f.inner_product(g)
}

/// `H^1` norm `sqrt(||f||^2 + ||f'||^2)`.
pub fn sobolev_norm_h1(f: &GridFunction) -> f64 {
    f.sobolev_norm_h1()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(80.0, 500).is_err());
        assert!(Grid::new(80.0, 4).is_err());
        assert!(Grid::new(-1.0, 64).is_err());
        let g = Grid::new(80.0, 512).unwrap();
        assert!(g.points().windows(2).all(|w| w[1] > w[0]));
        assert_eq!(g.x(0), -40.0);
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let g = Grid::new(80.0, 64).unwrap();
        for order in 1..=3 {
            let d = g.constant(1.0).derivative(order).unwrap();
            assert!(d.norm_sup() < 1e-14);
        }
    }

    #[test]
    fn derivative_of_sine() {
        let g = Grid::new(80.0, 128).unwrap();
        let w = 2.0 * PI / 80.0;
        let f = g.sample(|x| (w * x).sin());
        let d = f.derivative(1).unwrap();
        let exact = g.sample(|x| w * (w * x).cos());
        assert!((&d - &exact).norm_sup() < 1e-14);
        let d3 = f.derivative(3).unwrap();
        let exact3 = g.sample(|x| -w.powi(3) * (w * x).cos());
        assert!((&d3 - &exact3).norm_sup() < 1e-12);
    }

    #[test]
    fn derivative_rejects_bad_input() {
        let g = Grid::new(10.0, 16).unwrap();
        assert!(g.zeros().derivative(4).is_err());
        let mut v = vec![0.0; 16];
        v[3] = f64::NAN;
        assert!(GridFunction::new(g, v.clone()).is_err());
        let bad = GridFunction::from_raw(g, v);
        assert!(matches!(bad.derivative(1), Err(Error::RejectedInput(_))));
    }

    #[test]
    fn inner_product_of_ones_is_length() {
        let g = Grid::new(80.0, 512).unwrap();
        let one = g.constant(1.0);
        assert!((one.inner_product(&one).unwrap() - 80.0).abs() < 1e-12);
        let other = Grid::new(40.0, 512).unwrap().constant(1.0);
        assert!(matches!(one.inner_product(&other), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn h1_norm_of_single_mode() {
        assert_eq!(Grid::new(5.0, 8).unwrap().zeros().sobolev_norm_h1(), 0.0);
        for n in [8, 16, 64] {
            let g = Grid::new(2.0 * PI, n).unwrap();
            let f = g.sample(|x| x.sin());
            assert!((f.sobolev_norm_h1() - (2.0 * PI).sqrt()).abs() < 1e-13);
        }
    }

    #[test]
    fn shift_matches_resampling() {
        let g = Grid::new(40.0, 256).unwrap();
        let f = g.sample(|x| (-(x * x) / 4.0).exp());
        let s = f.shift(1.37);
        let exact = g.sample(|x| (-((x - 1.37) * (x - 1.37)) / 4.0).exp());
        assert!((&s - &exact).norm_sup() < 1e-12);
    }

    #[test]
    fn wrap_is_periodic() {
        let g = Grid::new(10.0, 16).unwrap();
        assert!((g.wrap(7.0) - (-3.0)).abs() < 1e-15);
        assert!((g.wrap(-5.0) - (-5.0)).abs() < 1e-15);
        assert!((g.wrap(5.0) - (-5.0)).abs() < 1e-15);
        assert!((g.wrap(-13.0) - (-3.0)).abs() < 1e-15);
    }

    #[test]
    fn peak_interpolates() {
        let g = Grid::new(40.0, 512).unwrap();
        let f = g.sample(|x| 2.0 / (1.0 + (x - 0.321).powi(2)));
        let (x, v) = f.peak();
        assert!((x - 0.321).abs() < 1e-3);
        assert!((v - 2.0).abs() < 1e-4);
    }
}
