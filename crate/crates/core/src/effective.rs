//! Reduced dynamics for the centre and speed:
//! `(a', c') = (c - b(t,a), 0) + b_x(t,a) delta(c) / delta'(c)^2 (-m(c)^2 / 2, delta'(c))`,
//! `m(c) = int d_c Q_c`. The second term is the first-order correction.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::pde::BottomProfile;
use crate::soliton::{Nonlinearity, SolitonFamily, SpeedInterval};

/// Which right-hand side to integrate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EffectiveForm {
    /// `(c - b, 0)`
    Leading,
    /// leading law plus the `b_x` correction
    #[default]
    Corrected,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EffectiveState {
    pub t: f64,
    pub a: f64,
    pub c: f64,
}

/// `delta(c)`, `delta'(c)` and `m(c) = int zeta^n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coefficients {
    pub delta: f64,
    pub delta_prime: f64,
    pub mass_n: f64,
}

/// Speed-dependent coefficients: closed form for powers, quadrature otherwise.
#[derive(Clone, Debug)]
pub enum CoefficientSource {
    Power(u32),
    Numeric(SolitonFamily),
}

impl CoefficientSource {
    pub fn new(nl: &Nonlinearity, grid: &Grid) -> Result<Self> {
        match nl.power_exponent() {
            Some(p) => Ok(Self::Power(p)),
            None => Ok(Self::Numeric(SolitonFamily::new(*grid, nl.clone())?)),
        }
    }

    pub fn at(&self, c: f64) -> Result<Coefficients> {
        match self {
            Self::Power(p) => Ok(power_coefficients(*p, c)),
            Self::Numeric(fam) => {
                let d = fam.delta(c)?;
                Ok(Coefficients {
                    delta: d.delta,
                    delta_prime: d.delta_prime,
                    mass_n: fam.tangent_scaling(c, 0.0)?.integral(),
                })
            }
        }
    }
}

/// `||Q_1||_2^2` for `f(u) = u^p`.
pub fn power_norm_sq(p: u32) -> f64 {
    let p = p as f64;
    let amp = ((p + 1.0) / 2.0).powf(1.0 / (p - 1.0));
    let m = 2.0 / (p - 1.0);
    // int sech^{2m}(k x) dx = sqrt(pi) Gamma(m) / (k Gamma(m + 1/2)), k = (p-1)/2
    amp * amp * m * std::f64::consts::PI.sqrt() * gamma(m) / gamma(m + 0.5)
}

/// `int Q_1` for `f(u) = u^p`.
pub fn power_integral(p: u32) -> f64 {
    let p = p as f64;
    let amp = ((p + 1.0) / 2.0).powf(1.0 / (p - 1.0));
    let m = 1.0 / (p - 1.0);
    amp * 2.0 / (p - 1.0) * std::f64::consts::PI.sqrt() * gamma(m) / gamma(m + 0.5)
}

/// Closed-form `delta`, `delta'` and `int zeta^n` for `f(u) = u^p`.
pub fn power_coefficients(p: u32, c: f64) -> Coefficients {
    let pf = p as f64;
    let e = (5.0 - pf) / (2.0 * (pf - 1.0));
    let delta = 0.5 * power_norm_sq(p) * c.powf(e);
    // int Q_c = c^{1/(p-1) - 1/2} int Q_1
    let k = 1.0 / (pf - 1.0) - 0.5;
    Coefficients {
        delta,
        delta_prime: e * delta / c,
        mass_n: k * c.powf(k - 1.0) * power_integral(p),
    }
}

/// Effective right-hand side `(a', c')`.
pub fn rhs(
    state: &EffectiveState,
    b: &dyn BottomProfile,
    coeffs: &CoefficientSource,
    form: EffectiveForm,
) -> Result<(f64, f64)> {
    let lead = (state.c - b.b(state.t, state.a), 0.0);
    if form == EffectiveForm::Leading {
        return Ok(lead);
    }
    let k = coeffs.at(state.c)?;
    if k.delta_prime <= 0.0 {
        return Err(Error::StabilityViolated {
            c: state.c,
            delta_prime: k.delta_prime,
        });
    }
    let w = b.b_x(state.t, state.a) * k.delta / (k.delta_prime * k.delta_prime);
    Ok((lead.0 - 0.5 * w * k.mass_n * k.mass_n, w * k.delta_prime))
}

/// Integrated path; `exited` marks a stop at the interval boundary.
#[derive(Clone, Debug)]
pub struct EffectivePath {
    pub states: Vec<EffectiveState>,
    pub exited: bool,
}

/// Classical RK4 from `state0` to `t_end`, recording every `stride` steps.
pub fn integrate(
    state0: EffectiveState,
    b: &dyn BottomProfile,
    coeffs: &CoefficientSource,
    form: EffectiveForm,
    interval: &SpeedInterval,
    t_end: f64,
    dt: f64,
    stride: usize,
) -> Result<EffectivePath> {
    if !(dt > 0.0) || stride == 0 {
        return Err(Error::Config(format!(
            "need dt > 0 and stride >= 1, got dt = {dt}, stride = {stride}"
        )));
    }
    let steps = ((t_end - state0.t) / dt).round().max(0.0) as usize;
    let mut s = state0;
    let mut states = vec![s];
    let f = |st: &EffectiveState| rhs(st, b, coeffs, form);
    for i in 0..steps {
        let at = |s: &EffectiveState, h: f64, k: (f64, f64)| EffectiveState {
            t: s.t + h,
            a: s.a + h * k.0,
            c: s.c + h * k.1,
        };
        let k1 = f(&s)?;
        let k2 = f(&at(&s, 0.5 * dt, k1))?;
        let k3 = f(&at(&s, 0.5 * dt, k2))?;
        let k4 = f(&at(&s, dt, k3))?;
        s = EffectiveState {
            t: state0.t + (i + 1) as f64 * dt,
            a: s.a + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            c: s.c + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        };
        if !interval.contains(s.c) {
            states.push(s);
            return Ok(EffectivePath { states, exited: true });
        }
        if (i + 1) % stride == 0 || i + 1 == steps {
            states.push(s);
        }
    }
    Ok(EffectivePath { states, exited: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::Bottom;

    #[test]
    fn kdv_coefficients() {
        let k = power_coefficients(2, 1.0);
        assert!((k.delta - 3.0).abs() < 1e-12);
        assert!((k.delta_prime - 4.5).abs() < 1e-12);
        assert!((k.mass_n - 3.0).abs() < 1e-12);
        let k = power_coefficients(2, 2.0);
        assert!((k.mass_n - 3.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!(power_coefficients(3, 1.3).mass_n.abs() < 1e-14);
    }

    #[test]
    fn numeric_matches_closed_form() {
        let grid = Grid::new(80.0, 512).unwrap();
        let nl = Nonlinearity::polynomial(&[(2, 1.0)]);
        let num = CoefficientSource::new(&nl, &grid).unwrap().at(1.2).unwrap();
        let exact = power_coefficients(2, 1.2);
        assert!((num.delta - exact.delta).abs() < 1e-7);
        assert!((num.delta_prime - exact.delta_prime).abs() < 1e-5);
        assert!((num.mass_n - exact.mass_n).abs() < 1e-5);
    }

    #[test]
    fn kdv_right_hand_side() {
        let src = CoefficientSource::Power(2);
        let b = Bottom::StaticBump {
            eps_a: 0.02,
            eps_x: 0.1,
        };
        let s = EffectiveState {
            t: 0.0,
            a: -3.0,
            c: 1.4,
        };
        let (da, dc) = rhs(&s, &b, &src, EffectiveForm::Corrected).unwrap();
        let bx = b.b_x(0.0, -3.0);
        assert!((dc - 2.0 * 1.4 / 3.0 * bx).abs() < 1e-14);
        assert!((da - (1.4 - b.b(0.0, -3.0) - 2.0 / 3.0 * bx / 1.4f64.sqrt())).abs() < 1e-14);
        assert_eq!(
            rhs(&s, &Bottom::Zero, &src, EffectiveForm::Corrected).unwrap(),
            (1.4, 0.0)
        );
        let flat = Bottom::Flat { level: 0.2 };
        let (da, dc) = rhs(&s, &flat, &src, EffectiveForm::Corrected).unwrap();
        assert!((da - 1.2).abs() < 1e-15 && dc == 0.0);
    }

    #[test]
    fn free_flow_is_linear_and_order_four() {
        let src = CoefficientSource::Power(2);
        let iv = SpeedInterval::default();
        let s0 = EffectiveState {
            t: 0.0,
            a: -10.0,
            c: 1.0,
        };
        let p = integrate(s0, &Bottom::Zero, &src, EffectiveForm::Corrected, &iv, 5.0, 0.01, 100).unwrap();
        let last = p.states.last().unwrap();
        assert!((last.a + 5.0).abs() < 1e-12);
        let b = Bottom::StaticBump { eps_a: 0.1, eps_x: 0.3 };
        let run = |dt| {
            let p = integrate(s0, &b, &src, EffectiveForm::Corrected, &iv, 20.0, dt, 1).unwrap();
            *p.states.last().unwrap()
        };
        let (r1, r2, r3) = (run(0.4), run(0.2), run(0.1));
        let ratio = ((r1.a - r2.a).abs() + (r1.c - r2.c).abs()) / ((r2.a - r3.a).abs() + (r2.c - r3.c).abs());
        assert!(ratio > 12.0, "{ratio}");
    }
}
