//! Hamiltonian, momentum, Lagrangian, Lyapunov functional, the nonlinear
//! remainders and the exact rate identities along trajectories.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::hessian::Hessian;
use crate::modulation::ModulationState;
use crate::pde::{BottomProfile, Trajectory};
use crate::soliton::{Nonlinearity, SolitonFamily};

/// `H_b(u) = int (u_x^2 / 2 - F(u) + b u^2 / 2)`.
pub fn hamiltonian(u: &GridFunction, b: &dyn BottomProfile, t: f64, nl: &Nonlinearity) -> f64 {
    let ux = u.d(1);
    let g = u.grid();
    let h = g.spacing();
    (0..g.n_points())
        .map(|j| {
            let v = u.values()[j];
            let d = ux.values()[j];
            0.5 * d * d - nl.antiderivative(v) + 0.5 * b.b(t, g.x(j)) * v * v
        })
        .sum::<f64>()
        * h
}

/// `P(u) = ||u||^2 / 2`.
pub fn momentum(u: &GridFunction) -> f64 {
    0.5 * u.dot(u)
}

/// `int u`.
pub fn mass(u: &GridFunction) -> f64 {
    u.integral()
}

/// `Lambda_c(u) = int (u_x^2 / 2 + c u^2 / 2 - F(u))`.
pub fn lagrangian(u: &GridFunction, c: f64, nl: &Nonlinearity) -> f64 {
    let ux = u.d(1);
    let h = u.grid().spacing();
    u.values()
        .iter()
        .zip(ux.values())
        .map(|(&v, &d)| 0.5 * d * d + 0.5 * c * v * v - nl.antiderivative(v))
        .sum::<f64>()
        * h
}

/// First variation `-u'' + c u - f(u)`.
pub fn lagrangian_gradient(u: &GridFunction, c: f64, nl: &Nonlinearity) -> GridFunction {
    crate::soliton::field_equation_residual(u, c, nl)
}

/// `N(xi)` and `N'(xi)` at the soliton `q`.
#[derive(Clone, Debug)]
pub struct Remainders {
    /// `-int [F(Q+xi) - F(Q) - f(Q) xi - f'(Q) xi^2 / 2]`
    pub n: f64,
    /// `-(f(Q+xi) - f(Q) - f'(Q) xi)`
    pub n_prime: GridFunction,
    /// False when `||xi||_{H^1} > 1`, outside the range of the standard bounds.
    pub in_range: bool,
}

pub fn remainders(xi: &GridFunction, q: &GridFunction, nl: &Nonlinearity) -> Remainders {
    let h = xi.grid().spacing();
    let n = -xi
        .values()
        .iter()
        .zip(q.values())
        .map(|(&x, &qv)| nl.antiderivative(qv + x) - nl.antiderivative(qv) - nl.f(qv) * x - 0.5 * nl.df(qv) * x * x)
        .sum::<f64>()
        * h;
    let n_prime = xi.zip_map(q, |x, qv| -(nl.f(qv + x) - nl.f(qv) - nl.df(qv) * x));
    Remainders {
        n,
        n_prime,
        in_range: xi.sobolev_norm_h1() <= 1.0,
    }
}

/// The pieces of `M_c = Lambda_c(Q + xi) - Lambda_c(Q) + b'(a) <(x - a) Q, xi>`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LyapunovValue {
    pub value: f64,
    /// `<L_Q xi, xi> / 2`
    pub quadratic: f64,
    /// `N(xi)`
    pub remainder: f64,
    /// `b'(a) <(x - a) Q, xi>`
    pub linear: f64,
    /// `<Lambda'(Q), xi>`, zero up to discretization
    pub first_variation: f64,
}

impl LyapunovValue {
    /// `quadratic + remainder + linear + first_variation`, equal to `value` up to roundoff.
    pub fn expansion(&self) -> f64 {
        self.quadratic + self.remainder + self.linear + self.first_variation
    }
}

/// `M_c` at parameters `(c, a)` for the field `u`.
pub fn lyapunov_at(
    u: &GridFunction,
    c: f64,
    a: f64,
    b: &dyn BottomProfile,
    t: f64,
    nl: &Nonlinearity,
) -> Result<LyapunovValue> {
    let fam = SolitonFamily::new(*u.grid(), nl.clone())?;
    let q = fam.profile(c, a)?;
    let xi = u - &q;
    let g = *u.grid();
    let bprime = b.b_x(t, a);
    let weighted = q.map_with_x(|x, v| g.wrap(x - a) * v);
    let linear = bprime * weighted.dot(&xi);
    let value = lagrangian(u, c, nl) - lagrangian(&q, c, nl) + linear;
    let hess = Hessian::new(&q, c, a, nl);
    let quadratic = 0.5 * hess.quadratic_form(&xi);
    let remainder = remainders(&xi, &q, nl).n;
    let first_variation = lagrangian_gradient(&q, c, nl).dot(&xi);
    Ok(LyapunovValue {
        value,
        quadratic,
        remainder,
        linear,
        first_variation,
    })
}

/// `M_c` at an extracted modulation state.
pub fn lyapunov(
    u: &GridFunction,
    state: &ModulationState,
    b: &dyn BottomProfile,
    t: f64,
    nl: &Nonlinearity,
) -> Result<LyapunovValue> {
    lyapunov_at(u, state.c, state.a, b, t, nl)
}

/// Functional values of one snapshot.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FunctionalReport {
    pub t: f64,
    pub hamiltonian: f64,
    pub momentum: f64,
    pub mass: f64,
    /// `Lambda_c(u)` when a speed is supplied
    pub lagrangian: Option<f64>,
    pub lyapunov: Option<f64>,
}

impl FunctionalReport {
    pub fn evaluate(
        u: &GridFunction,
        b: &dyn BottomProfile,
        t: f64,
        nl: &Nonlinearity,
        state: Option<&ModulationState>,
    ) -> Result<Self> {
        let (lagrangian, lyapunov_value) = match state {
            Some(s) => (
                Some(self::lagrangian(u, s.c, nl)),
                Some(lyapunov(u, s, b, t, nl)?.value),
            ),
            None => (None, None),
        };
        Ok(Self {
            t,
            hamiltonian: hamiltonian(u, b, t, nl),
            momentum: momentum(u),
            mass: mass(u),
            lagrangian,
            lyapunov: lyapunov_value,
        })
    }
}

/// `1/2 int b u^2`.
pub fn potential_momentum(u: &GridFunction, b: &dyn BottomProfile, t: f64) -> f64 {
    0.5 * u.map_with_x(|x, v| b.b(t, x) * v * v).integral()
}

/// Right-hand sides of the three rate identities at one snapshot:
/// `dH_b/dt`, `dP/dt`, `d/dt (1/2 int b u^2)`.
pub fn predicted_rates(u: &GridFunction, b: &dyn BottomProfile, t: f64, nl: &Nonlinearity) -> [f64; 3] {
    let g = *u.grid();
    let ux = u.d(1);
    let h = g.spacing();
    let (mut dh, mut dp, mut dw) = (0.0, 0.0, 0.0);
    for j in 0..g.n_points() {
        let x = g.x(j);
        let v = u.values()[j];
        let d = ux.values()[j];
        let bt = b.b_t(t, x);
        let bx = b.b_x(t, x);
        let bxx = b.b_xx(t, x);
        dh += 0.5 * bt * v * v;
        dp += 0.5 * bx * v * v;
        dw += 0.5 * v * v * bt + bx * (v * nl.f(v) - 1.5 * d * d - nl.antiderivative(v)) - bxx * v * d;
    }
    [dh * h, dp * h, dw * h]
}

/// One identity's worst defect along a trajectory.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RateResidual {
    pub max_abs: f64,
    /// `max |measured - predicted| / max_t |predicted|`; the absolute defect when nothing moves
    pub max_rel: f64,
    pub max_predicted: f64,
}

/// Residuals of the conservation and rate identities.
#[derive(Clone, Debug, Serialize)]
pub struct RateReport {
    pub mass: RateResidual,
    pub hamiltonian: RateResidual,
    pub momentum: RateResidual,
    pub potential_momentum: RateResidual,
    /// finite-difference order used in time
    pub order: usize,
    /// `(t, measured - predicted)` for the three identities at each interior row
    #[serde(skip)]
    pub defects: Vec<(f64, [f64; 3])>,
}

impl RateReport {
    pub fn worst_relative(&self) -> f64 {
        [self.hamiltonian, self.momentum, self.potential_momentum]
            .iter()
            .map(|r| r.max_rel)
            .fold(0.0, f64::max)
    }
}

fn residual(measured: &[f64], predicted: &[f64], floor: f64) -> RateResidual {
    let max_predicted = predicted.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let max_abs = measured
        .iter()
        .zip(predicted)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let denom = max_predicted.max(floor);
    RateResidual {
        max_abs,
        max_rel: if denom > 0.0 { max_abs / denom } else { max_abs },
        max_predicted,
    }
}

/// Compare centred time differences of `H_b`, `P`, `1/2 int b u^2` and `int u`
/// with the exact rates. Uses fourth-order differences with five or more
/// snapshots, second-order with three or four. Requires a uniform stride.
pub fn rate_identities(series: &Trajectory, b: &dyn BottomProfile, nl: &Nonlinearity) -> Result<RateReport> {
    let n = series.len();
    if n < 3 {
        return Err(Error::Precondition(format!(
            "rate identities need at least 3 snapshots, got {n}"
        )));
    }
    let dt = series.times[1] - series.times[0];
    if series
        .times
        .windows(2)
        .any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs().max(1.0))
    {
        return Err(Error::Precondition(
            "rate identities need a uniform output stride".into(),
        ));
    }
    let values: Vec<[f64; 4]> = series
        .times
        .iter()
        .zip(&series.states)
        .map(|(&t, u)| {
            [
                hamiltonian(u, b, t, nl),
                momentum(u),
                potential_momentum(u, b, t),
                mass(u),
            ]
        })
        .collect();
    let order = if n >= 5 { 4 } else { 2 };
    let idx: Vec<usize> = if order == 4 {
        (2..n - 2).collect()
    } else {
        (1..n - 1).collect()
    };
    let deriv = |k: usize, i: usize| -> f64 {
        if order == 4 {
            (values[i - 2][k] - 8.0 * values[i - 1][k] + 8.0 * values[i + 1][k] - values[i + 2][k]) / (12.0 * dt)
        } else {
            (values[i + 1][k] - values[i - 1][k]) / (2.0 * dt)
        }
    };
    let predicted: Vec<[f64; 3]> = idx
        .iter()
        .map(|&i| predicted_rates(&series.states[i], b, series.times[i], nl))
        .collect();
    let measured = |k: usize| idx.iter().map(|&i| deriv(k, i)).collect::<Vec<_>>();
    let column = |k: usize| predicted.iter().map(|p| p[k]).collect::<Vec<_>>();
    let zeros = vec![0.0; idx.len()];
    let (m0, m1, m2) = (measured(0), measured(1), measured(2));
    let defects = idx
        .iter()
        .enumerate()
        .map(|(r, &i)| {
            let p = predicted[r];
            (series.times[i], [m0[r] - p[0], m1[r] - p[1], m2[r] - p[2]])
        })
        .collect();
    Ok(RateReport {
        hamiltonian: residual(&m0, &column(0), 0.0),
        momentum: residual(&m1, &column(1), 0.0),
        potential_momentum: residual(&m2, &column(2), 0.0),
        mass: residual(&measured(3), &zeros, 0.0),
        order,
        defects,
    })
}

/// Largest deviation of a functional from its initial value along a trajectory.
pub fn drift(series: &Trajectory, f: impl Fn(f64, &GridFunction) -> f64) -> f64 {
    let first = f(series.times[0], &series.states[0]);
    series
        .times
        .iter()
        .zip(&series.states)
        .map(|(&t, u)| (f(t, u) - first).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::pde::Bottom;

    fn q1() -> (GridFunction, Nonlinearity) {
        let grid = Grid::new(80.0, 512).unwrap();
        let nl = Nonlinearity::power(2).unwrap();
        let q = SolitonFamily::new(grid, nl.clone()).unwrap().profile(1.0, 0.0).unwrap();
        (q, nl)
    }

    #[test]
    fn values_at_soliton() {
        let (q, nl) = q1();
        let zero = q.grid().zeros();
        assert_eq!(hamiltonian(&zero, &Bottom::Zero, 0.0, &nl), 0.0);
        assert!((hamiltonian(&q, &Bottom::Zero, 0.0, &nl) + 1.8).abs() < 1e-10);
        assert!((momentum(&q) - 3.0).abs() < 1e-10);
        assert!((mass(&q) - 6.0).abs() < 1e-10);
        let flat = Bottom::Flat { level: 0.3 };
        let d = hamiltonian(&q, &flat, 0.0, &nl) - hamiltonian(&q, &Bottom::Zero, 0.0, &nl);
        assert!((d - 0.3 * momentum(&q)).abs() < 1e-12);
        assert_eq!(lagrangian(&zero, 1.0, &nl), 0.0);
        assert!(lagrangian_gradient(&q, 1.0, &nl).norm_l2() < 1e-8);
    }

    #[test]
    fn gradient_and_hessian_consistency() {
        let (q, nl) = q1();
        let g = *q.grid();
        let u = q.map_with_x(|x, v| v + 0.1 * (-(x - 1.0).powi(2)).exp());
        let v = g.sample(|x| (0.3 * x).sin() * (-x * x / 20.0).exp());
        let eps = 1e-4;
        let fd = (lagrangian(&u.axpy(eps, &v), 1.0, &nl) - lagrangian(&u.axpy(-eps, &v), 1.0, &nl)) / (2.0 * eps);
        assert!((fd - lagrangian_gradient(&u, 1.0, &nl).dot(&v)).abs() < 1e-8);
        let second = (lagrangian(&q.axpy(eps, &v), 1.0, &nl) - 2.0 * lagrangian(&q, 1.0, &nl)
            + lagrangian(&q.axpy(-eps, &v), 1.0, &nl))
            / (eps * eps);
        let hess = Hessian::new(&q, 1.0, 0.0, &nl);
        assert!((second - hess.quadratic_form(&v)).abs() < 1e-5);
    }

    #[test]
    fn remainder_derivative_matches() {
        let (q, nl) = q1();
        let g = *q.grid();
        let xi = g.sample(|x| 0.2 * (-(x + 0.5).powi(2)).exp());
        let v = g.sample(|x| (-(x * x) / 3.0).exp() * x);
        let eps = 1e-5;
        let fd = (remainders(&xi.axpy(eps, &v), &q, &nl).n - remainders(&xi.axpy(-eps, &v), &q, &nl).n) / (2.0 * eps);
        let r = remainders(&xi, &q, &nl);
        assert!((fd - r.n_prime.dot(&v)).abs() < 1e-9);
        let z = remainders(&g.zeros(), &q, &nl);
        assert_eq!(z.n, 0.0);
        assert_eq!(z.n_prime.norm_sup(), 0.0);
    }

    #[test]
    fn lyapunov_expansion_is_exact() {
        let (q, nl) = q1();
        let u = q.map_with_x(|x, v| v + 0.01 * (-(x - 0.4).powi(2)).exp());
        let b = Bottom::StaticBump {
            eps_a: 0.02,
            eps_x: 0.1,
        };
        let m = lyapunov_at(&u, 1.0, 0.3, &b, 0.0, &nl).unwrap();
        assert!((m.value - m.expansion()).abs() < 1e-12);
        let at_q = lyapunov_at(&q, 1.0, 0.0, &b, 0.0, &nl).unwrap();
        assert!(at_q.value.abs() < 1e-14);
    }
}
