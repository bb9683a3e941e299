use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A user-supplied nonlinearity: `f`, its first two derivatives, and the
/// antiderivative `F` with `F(0) = 0`.
#[derive(Clone)]
pub struct CustomNonlinearity {
    pub name: String,
    pub f: ScalarFn,
    pub df: ScalarFn,
    pub d2f: ScalarFn,
    pub antiderivative: ScalarFn,
}

/// The local nonlinearity `f` in `u_t = -(u_xx + f(u) - b u)_x`.
#[derive(Clone)]
pub enum Nonlinearity {
    /// `f(u) = u^p`.
    Power(u32),
    /// `f(u) = sum_k a_k u^k`, stored as `(k, a_k)` pairs.
    Polynomial(Vec<(u32, f64)>),
    Custom(CustomNonlinearity),
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nonlinearity::Power(p) => write!(f, "Power({p})"),
            Nonlinearity::Polynomial(t) => write!(f, "Polynomial({t:?})"),
            Nonlinearity::Custom(c) => write!(f, "Custom({})", c.name),
        }
    }
}

fn poly_eval(terms: &[(u32, f64)], u: f64, deriv: u32) -> f64 {
    terms
        .iter()
        .map(|&(k, a)| {
            if k < deriv {
                return 0.0;
            }
            let fall: f64 = (0..deriv).map(|i| (k - i) as f64).product();
            a * fall * u.powi((k - deriv) as i32)
        })
        .sum()
}

impl Nonlinearity {
    pub fn power(p: u32) -> Result<Self> {
        if p < 2 {
            return Err(Error::Precondition(format!(
                "power nonlinearity needs p >= 2 so that f'(0) = 0, got p = {p}"
            )));
        }
        Ok(Nonlinearity::Power(p))
    }

    pub fn polynomial(terms: &[(u32, f64)]) -> Self {
        Nonlinearity::Polynomial(terms.to_vec())
    }

    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        antiderivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Nonlinearity::Custom(CustomNonlinearity {
            name: name.into(),
            f: Arc::new(f),
            df: Arc::new(df),
            d2f: Arc::new(d2f),
            antiderivative: Arc::new(antiderivative),
        })
    }

    /// Exponent of a pure power nonlinearity.
    pub fn power_exponent(&self) -> Option<u32> {
        match self {
            Nonlinearity::Power(p) => Some(*p),
            _ => None,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Nonlinearity::Power(p) => format!("u^{p}"),
            Nonlinearity::Polynomial(t) => t
                .iter()
                .map(|(k, a)| format!("{a}*u^{k}"))
                .collect::<Vec<_>>()
                .join("+"),
            Nonlinearity::Custom(c) => c.name.clone(),
        }
    }

    pub fn f(&self, u: f64) -> f64 {
        match self {
            Nonlinearity::Power(p) => u.powi(*p as i32),
            Nonlinearity::Polynomial(t) => poly_eval(t, u, 0),
            Nonlinearity::Custom(c) => (c.f)(u),
        }
    }

    pub fn df(&self, u: f64) -> f64 {
        match self {
            Nonlinearity::Power(p) => *p as f64 * u.powi(*p as i32 - 1),
            Nonlinearity::Polynomial(t) => poly_eval(t, u, 1),
            Nonlinearity::Custom(c) => (c.df)(u),
        }
    }

    pub fn d2f(&self, u: f64) -> f64 {
        match self {
            Nonlinearity::Power(p) => {
                let p = *p as i32;
                (p * (p - 1)) as f64 * u.powi(p - 2)
            }
            Nonlinearity::Polynomial(t) => poly_eval(t, u, 2),
            Nonlinearity::Custom(c) => (c.d2f)(u),
        }
    }

    /// `F(u) = int_0^u f`.
    pub fn antiderivative(&self, u: f64) -> f64 {
        match self {
            Nonlinearity::Power(p) => u.powi(*p as i32 + 1) / (*p as f64 + 1.0),
            Nonlinearity::Polynomial(t) => t
                .iter()
                .map(|&(k, a)| a * u.powi(k as i32 + 1) / (k as f64 + 1.0))
                .sum(),
            Nonlinearity::Custom(c) => (c.antiderivative)(u),
        }
    }

    /// Require `f(0) = f'(0) = 0` and `F(0) = 0`.
    pub fn check_origin(&self) -> Result<()> {
        let (f0, df0, big_f0) = (self.f(0.0), self.df(0.0), self.antiderivative(0.0));
        if f0.abs() > 1e-12 || df0.abs() > 1e-12 {
            return Err(Error::Precondition(format!(
                "nonlinearity {} must satisfy f(0) = f'(0) = 0 (got f(0) = {f0:e}, f'(0) = {df0:e})",
                self.name()
            )));
        }
        if big_f0.abs() > 1e-12 {
            return Err(Error::Precondition(format!(
                "antiderivative of {} must vanish at 0 (got {big_f0:e})",
                self.name()
            )));
        }
        Ok(())
    }

    /// Numerical check of the existence conditions on `g(u) = -c u + f(u)`:
    /// `g(0) = 0`, `g(s)/s -> -c + f'(0) < 0`, and a first positive zero
    /// `u*` of `G(u) = int_0^u g` with `g(u*) > 0`. Returns `u*`.
    pub fn check_existence(&self, c: f64) -> Result<f64> {
        self.check_origin()?;
        if c <= 0.0 {
            return Err(Error::Precondition(format!("speed must be positive, got {c}")));
        }
        if -c + self.df(0.0) >= 0.0 {
            return Err(Error::Precondition(format!(
                "g(s)/s -> {} is not negative at c = {c}",
                -c + self.df(0.0)
            )));
        }
        let big_g = |u: f64| -0.5 * c * u * u + self.antiderivative(u);
        // Log-spaced scan of (1e-6, 1e6) for the first sign change of G.
        let samples = 4000;
        let mut prev = (1e-6, big_g(1e-6));
        for i in 1..=samples {
            let u = 1e-6 * 1e12f64.powf(i as f64 / samples as f64);
            let gu = big_g(u);
            if prev.1 < 0.0 && gu >= 0.0 {
                let (mut lo, mut hi) = (prev.0, u);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if big_g(mid) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let root = 0.5 * (lo + hi);
                let g_root = -c * root + self.f(root);
                if g_root <= 0.0 {
                    return Err(Error::Precondition(format!(
                        "g(u*) = {g_root:e} is not positive at u* = {root}"
                    )));
                }
                return Ok(root);
            }
            prev = (u, gu);
        }
        Err(Error::Precondition(format!(
            "G(u) = int_0^u (-c s + f(s)) ds has no positive zero for c = {c}"
        )))
    }
}
