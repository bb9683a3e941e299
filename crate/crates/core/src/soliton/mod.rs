//! Solitary waves `Q_{c,a}`, their tangent vectors, and the stability
//! coefficient `delta'(c)`.
//!
//! Power nonlinearities `f(u) = u^p` use the closed form
//! `Q_c(x) = c^{1/(p-1)} A sech^{2/(p-1)}((p-1) sqrt(c) x / 2)` with
//! `A = ((p+1)/2)^{1/(p-1)}`. Other nonlinearities go through
//! [`construct_general`], a renormalized spectral fixed-point iteration.

mod general;
mod nonlinearity;

pub use general::{construct_general, GeneralOptions};
pub use nonlinearity::{CustomNonlinearity, Nonlinearity};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::regsym::RegularizationParam;

/// Compact interval `I` of admissible speeds.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SpeedInterval {
    pub lo: f64,
    pub hi: f64,
}

impl SpeedInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::Precondition(format!(
                "speed interval must satisfy 0 < lo <= hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, c: f64) -> bool {
        c >= self.lo && c <= self.hi
    }

    /// `n` equally spaced speeds covering the interval.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![0.5 * (self.lo + self.hi)];
        }
        (0..n)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (n - 1) as f64)
            .collect()
    }
}

impl Default for SpeedInterval {
    fn default() -> Self {
        Self { lo: 0.5, hi: 2.0 }
    }
}

/// A point `(c, a)` on the soliton manifold together with the regularization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolitonParams {
    pub c: f64,
    pub a: f64,
    pub alpha: RegularizationParam,
}

impl SolitonParams {
    pub fn new(c: f64, a: f64, alpha: RegularizationParam) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Precondition(format!("speed must be positive, got c = {c}")));
        }
        if !a.is_finite() {
            return Err(Error::Precondition(format!("centre must be finite, got a = {a}")));
        }
        Ok(Self { c, a, alpha })
    }

    pub fn check_interval(&self, interval: &SpeedInterval) -> Result<()> {
        if !interval.contains(self.c) {
            return Err(Error::IntervalExit {
                c: self.c,
                lo: interval.lo,
                hi: interval.hi,
                time: None,
            });
        }
        Ok(())
    }
}

/// Closed-form `c = 1` profile of `f(u) = u^p` and its first two derivatives.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PowerShape {
    p: f64,
    amplitude: f64,
    kappa: f64,
    exponent: f64,
}

impl PowerShape {
    pub(crate) fn new(p: u32) -> Self {
        let p = p as f64;
        Self {
            p,
            amplitude: ((p + 1.0) / 2.0).powf(1.0 / (p - 1.0)),
            kappa: 0.5 * (p - 1.0),
            exponent: 2.0 / (p - 1.0),
        }
    }

    fn sech(z: f64) -> f64 {
        let z = z.abs();
        if z > 700.0 {
            0.0
        } else {
            let e = (-z).exp();
            2.0 * e / (1.0 + e * e)
        }
    }

    pub(crate) fn q(&self, s: f64) -> f64 {
        self.amplitude * Self::sech(self.kappa * s).powf(self.exponent)
    }

    pub(crate) fn dq(&self, s: f64) -> f64 {
        let z = self.kappa * s;
        -self.amplitude * self.exponent * self.kappa * Self::sech(z).powf(self.exponent) * z.tanh()
    }

    pub(crate) fn d2q(&self, s: f64) -> f64 {
        let q = self.q(s);
        q - q.powf(self.p)
    }

    fn beta(&self) -> f64 {
        1.0 / (self.p - 1.0)
    }

    /// `Q_c(y)`.
    pub(crate) fn value(&self, c: f64, y: f64) -> f64 {
        c.powf(self.beta()) * self.q(c.sqrt() * y)
    }

    /// `d/dy Q_c(y)`.
    pub(crate) fn dx(&self, c: f64, y: f64) -> f64 {
        c.powf(self.beta() + 0.5) * self.dq(c.sqrt() * y)
    }

    /// `d/dc Q_c(y)`.
    pub(crate) fn dc(&self, c: f64, y: f64) -> f64 {
        let b = self.beta();
        let rc = c.sqrt();
        let s = rc * y;
        b * c.powf(b - 1.0) * self.q(s) + c.powf(b) * self.dq(s) * y / (2.0 * rc)
    }

    /// `d^2/dc^2 Q_c(y)`.
    pub(crate) fn dcc(&self, c: f64, y: f64) -> f64 {
        let b = self.beta();
        let rc = c.sqrt();
        let s = rc * y;
        let ds = y / (2.0 * rc);
        let dds = -0.25 * y * c.powf(-1.5);
        b * (b - 1.0) * c.powf(b - 2.0) * self.q(s)
            + 2.0 * b * c.powf(b - 1.0) * self.dq(s) * ds
            + c.powf(b) * (self.d2q(s) * ds * ds + self.dq(s) * dds)
    }
}

/// Profile, tangent vectors and second speed derivative at one point of the manifold.
#[derive(Clone, Debug)]
pub struct SolitonFields {
    pub c: f64,
    pub a: f64,
    /// `Q_{c,a}`
    pub q: GridFunction,
    /// `zeta^tr = -d_x Q_{c,a}`
    pub zeta_tr: GridFunction,
    /// `zeta^n = d_c Q_{c,a}`
    pub zeta_n: GridFunction,
    /// `d_c^2 Q_{c,a}`
    pub d2q_dc2: GridFunction,
}

/// The two-parameter family `{Q_{c,a}}` for a given nonlinearity and grid.
#[derive(Clone, Debug)]
pub struct SolitonFamily {
    grid: Grid,
    nl: Nonlinearity,
    shape: Option<PowerShape>,
    general: GeneralOptions,
}

impl SolitonFamily {
    pub fn new(grid: Grid, nl: Nonlinearity) -> Result<Self> {
        nl.check_origin()?;
        let shape = nl.power_exponent().map(PowerShape::new);
        Ok(Self {
            grid,
            nl,
            shape,
            general: GeneralOptions::default(),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nl
    }

    fn check_c(c: f64) -> Result<()> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Precondition(format!("speed must be positive, got c = {c}")));
        }
        Ok(())
    }

    fn sample_centered(&self, a: f64, f: impl Fn(f64) -> f64) -> GridFunction {
        let g = self.grid;
        g.sample(|x| f(g.wrap(x - a)))
    }

    fn general_centered(&self, c: f64) -> Result<GridFunction> {
        construct_general(c, &self.nl, &self.grid, &self.general)
    }

    /// `Q_{c,a}` sampled on the grid.
    pub fn profile(&self, c: f64, a: f64) -> Result<GridFunction> {
        Self::check_c(c)?;
        match &self.shape {
            Some(s) => Ok(self.sample_centered(a, |y| s.value(c, y))),
            None => Ok(self.general_centered(c)?.shift(a)),
        }
    }

    /// `zeta^tr = -d_x Q_{c,a}`.
    pub fn tangent_translation(&self, c: f64, a: f64) -> Result<GridFunction> {
        Self::check_c(c)?;
        match &self.shape {
            Some(s) => Ok(self.sample_centered(a, |y| -s.dx(c, y))),
            None => Ok(-&self.profile(c, a)?.d(1)),
        }
    }

    fn fd_step(c: f64) -> f64 {
        1e-4 * c
    }

    /// `zeta^n = d_c Q_{c,a}`; centred difference with step `1e-4 c` for general `f`.
    pub fn tangent_scaling(&self, c: f64, a: f64) -> Result<GridFunction> {
        Self::check_c(c)?;
        match &self.shape {
            Some(s) => Ok(self.sample_centered(a, |y| s.dc(c, y))),
            None => {
                let h = Self::fd_step(c);
                let plus = self.general_centered(c + h)?;
                let minus = self.general_centered(c - h)?;
                Ok((&plus - &minus).scale(0.5 / h).shift(a))
            }
        }
    }

    /// Everything the modulation equations need at `(c, a)`.
    pub fn fields(&self, c: f64, a: f64) -> Result<SolitonFields> {
        Self::check_c(c)?;
        match &self.shape {
            Some(s) => Ok(SolitonFields {
                c,
                a,
                q: self.sample_centered(a, |y| s.value(c, y)),
                zeta_tr: self.sample_centered(a, |y| -s.dx(c, y)),
                zeta_n: self.sample_centered(a, |y| s.dc(c, y)),
                d2q_dc2: self.sample_centered(a, |y| s.dcc(c, y)),
            }),
            None => {
                let h = Self::fd_step(c);
                let q0 = self.general_centered(c)?;
                let plus = self.general_centered(c + h)?;
                let minus = self.general_centered(c - h)?;
                let h2 = 1e-3 * c;
                let plus2 = self.general_centered(c + h2)?;
                let minus2 = self.general_centered(c - h2)?;
                let zeta_n = (&plus - &minus).scale(0.5 / h).shift(a);
                let d2 = plus2
                    .zip_map(&q0, |p, q| p - 2.0 * q)
                    .axpy(1.0, &minus2)
                    .scale(1.0 / (h2 * h2))
                    .shift(a);
                let q = q0.shift(a);
                Ok(SolitonFields {
                    c,
                    a,
                    zeta_tr: -&q.d(1),
                    q,
                    zeta_n,
                    d2q_dc2: d2,
                })
            }
        }
    }

    /// Peak height of `Q_c`.
    pub fn peak_height(&self, c: f64) -> Result<f64> {
        match &self.shape {
            Some(s) => Ok(c.powf(1.0 / (s.p - 1.0)) * s.amplitude),
            None => Ok(self.general_centered(c)?.norm_sup()),
        }
    }

    /// Invert the peak height for the speed: `c = (peak / A)^{p-1}` for powers,
    /// secant iteration on [`SolitonFamily::peak_height`] otherwise.
    pub fn speed_from_peak(&self, peak: f64) -> Result<f64> {
        if !(peak > 0.0) {
            return Err(Error::Precondition(format!(
                "cannot infer a speed from non-positive peak {peak}"
            )));
        }
        if let Some(s) = &self.shape {
            return Ok((peak / s.amplitude).powf(s.p - 1.0));
        }
        let (mut c0, mut c1) = (1.0, 1.2);
        let mut r0 = self.peak_height(c0)? - peak;
        for _ in 0..60 {
            let r1 = self.peak_height(c1)? - peak;
            if r1.abs() < 1e-12 * peak {
                return Ok(c1);
            }
            let next = (c1 - r1 * (c1 - c0) / (r1 - r0)).max(0.05 * c1);
            c0 = c1;
            r0 = r1;
            c1 = next;
        }
        Err(Error::NoConvergence {
            iterations: 60,
            residual: r0.abs(),
            history: vec![],
        })
    }

    /// `delta(c) = P(Q_c)` and its speed derivative.
    pub fn delta(&self, c: f64) -> Result<DeltaReport> {
        Self::check_c(c)?;
        let q = self.profile(c, 0.0)?;
        let delta = 0.5 * q.dot(&q);
        let h = Self::fd_step(c);
        let dp = 0.5 * self.profile(c + h, 0.0)?.norm_l2().powi(2);
        let dm = 0.5 * self.profile(c - h, 0.0)?.norm_l2().powi(2);
        let fd = (dp - dm) / (2.0 * h);
        let closed = self.shape.map(|s| (5.0 - s.p) / (2.0 * (s.p - 1.0)) * delta / c);
        let delta_prime = closed.unwrap_or(fd);
        let report = DeltaReport {
            c,
            delta,
            delta_prime,
            delta_prime_fd: fd,
        };
        if delta_prime <= 1e-12 * delta.max(1.0) {
            return Err(Error::StabilityViolated { c, delta_prime });
        }
        Ok(report)
    }

    /// Largest `|Q_c|` within the outer eighth of the box on either side of
    /// the antipode of the centre; the truncation-quality indicator.
    pub fn tail_size(&self, c: f64) -> Result<f64> {
        let q = self.profile(c, 0.0)?;
        let g = self.grid;
        Ok(q.values()
            .iter()
            .enumerate()
            .filter(|(j, _)| g.x(*j).abs() >= 0.5 * g.length() * 0.999)
            .fold(0.0f64, |m, (_, v)| m.max(v.abs())))
    }
}

/// Output of [`SolitonFamily::delta`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeltaReport {
    pub c: f64,
    pub delta: f64,
    /// Closed form for powers, finite difference otherwise.
    pub delta_prime: f64,
    /// Centred difference of the quadrature `delta`, always computed.
    pub delta_prime_fd: f64,
}

/// `Q_{c,a}` for the given parameters.
pub fn profile(params: &SolitonParams, nl: &Nonlinearity, grid: &Grid) -> Result<GridFunction> {
    SolitonFamily::new(*grid, nl.clone())?.profile(params.c, params.a)
}

/// `zeta^tr = -d_x Q_{c,a}`.
pub fn tangent_translation(params: &SolitonParams, nl: &Nonlinearity, grid: &Grid) -> Result<GridFunction> {
    SolitonFamily::new(*grid, nl.clone())?.tangent_translation(params.c, params.a)
}

/// `zeta^n = d_c Q_{c,a}`.
pub fn tangent_scaling(params: &SolitonParams, nl: &Nonlinearity, grid: &Grid) -> Result<GridFunction> {
    SolitonFamily::new(*grid, nl.clone())?.tangent_scaling(params.c, params.a)
}

/// `(delta(c), delta'(c))`; errors when `delta'(c) <= 0`.
pub fn delta_and_derivative(c: f64, nl: &Nonlinearity, grid: &Grid) -> Result<DeltaReport> {
    SolitonFamily::new(*grid, nl.clone())?.delta(c)
}

/// Residual `-Q'' + c Q - f(Q)` of the scalar field equation.
pub fn field_equation_residual(q: &GridFunction, c: f64, nl: &Nonlinearity) -> GridFunction {
    let d2 = q.d(2);
    q.zip_map(&d2, |v, v2| -v2 + c * v - nl.f(v))
}
