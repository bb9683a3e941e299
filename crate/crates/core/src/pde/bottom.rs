//! Bottom profiles `b(t, x)` with exact derivatives and declared scales.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};

/// Amplitude, inverse length and inverse time scales of a bottom profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scales {
    pub eps_a: f64,
    pub eps_x: f64,
    pub eps_t: f64,
}

/// A bottom `b(t, x)` together with the derivatives the diagnostics need.
pub trait BottomProfile: Send + Sync {
    fn b(&self, t: f64, x: f64) -> f64;
    fn b_x(&self, t: f64, x: f64) -> f64;
    fn b_xx(&self, t: f64, x: f64) -> f64;
    fn b_t(&self, t: f64, x: f64) -> f64;
    fn b_xt(&self, t: f64, x: f64) -> f64;
    fn scales(&self) -> Scales;
    fn tag(&self) -> &'static str;

    /// True when `b_t` vanishes identically.
    fn is_static(&self) -> bool {
        false
    }

    fn on_grid(&self, grid: &Grid, t: f64) -> GridFunction {
        grid.sample(|x| self.b(t, x))
    }
}

/// The shipped families.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Bottom {
    Zero,
    /// `eps_a exp(-(eps_x x)^2 / 2)`
    StaticBump {
        eps_a: f64,
        eps_x: f64,
    },
    /// `eps_a tanh(eps_x (x - v t))` with `v = eps_t / eps_x`
    MovingRamp {
        eps_a: f64,
        eps_x: f64,
        eps_t: f64,
    },
    /// constant `b = level`
    Flat {
        level: f64,
    },
}

fn sech2(z: f64) -> f64 {
    let c = z.cosh();
    if c.is_finite() {
        1.0 / (c * c)
    } else {
        0.0
    }
}

impl Bottom {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && (0.0..=1.0).contains(&v);
        let good = match *self {
            Bottom::Zero => true,
            Bottom::StaticBump { eps_a, eps_x } => ok(eps_a) && ok(eps_x) && eps_x > 0.0,
            Bottom::MovingRamp { eps_a, eps_x, eps_t } => ok(eps_a) && ok(eps_x) && ok(eps_t) && eps_x > 0.0,
            Bottom::Flat { level } => level.is_finite(),
        };
        if good {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "bottom scales must lie in [0, 1] with eps_x > 0: {self:?}"
            )))
        }
    }

    fn ramp_arg(eps_x: f64, eps_t: f64, t: f64, x: f64) -> f64 {
        eps_x * x - eps_t * t
    }
}

impl BottomProfile for Bottom {
    fn b(&self, t: f64, x: f64) -> f64 {
        match *self {
            Bottom::Zero => 0.0,
            Bottom::StaticBump { eps_a, eps_x } => eps_a * (-0.5 * (eps_x * x).powi(2)).exp(),
            Bottom::MovingRamp { eps_a, eps_x, eps_t } => eps_a * Self::ramp_arg(eps_x, eps_t, t, x).tanh(),
            Bottom::Flat { level } => level,
        }
    }

    fn b_x(&self, t: f64, x: f64) -> f64 {
        match *self {
            Bottom::Zero | Bottom::Flat { .. } => 0.0,
            Bottom::StaticBump { eps_a, eps_x } => -eps_a * eps_x * eps_x * x * (-0.5 * (eps_x * x).powi(2)).exp(),
            Bottom::MovingRamp { eps_a, eps_x, eps_t } => eps_a * eps_x * sech2(Self::ramp_arg(eps_x, eps_t, t, x)),
        }
    }

    fn b_xx(&self, t: f64, x: f64) -> f64 {
        match *self {
            Bottom::Zero | Bottom::Flat { .. } => 0.0,
            Bottom::StaticBump { eps_a, eps_x } => {
                let z = eps_x * x;
                eps_a * eps_x * eps_x * (z * z - 1.0) * (-0.5 * z * z).exp()
            }
            Bottom::MovingRamp { eps_a, eps_x, eps_t } => {
                let z = Self::ramp_arg(eps_x, eps_t, t, x);
                -2.0 * eps_a * eps_x * eps_x * sech2(z) * z.tanh()
            }
        }
    }

    fn b_t(&self, t: f64, x: f64) -> f64 {
        match *self {
            Bottom::MovingRamp { eps_a, eps_x, eps_t } => -eps_a * eps_t * sech2(Self::ramp_arg(eps_x, eps_t, t, x)),
            _ => 0.0,
        }
    }

    fn b_xt(&self, t: f64, x: f64) -> f64 {
        match *self {
            Bottom::MovingRamp { eps_a, eps_x, eps_t } => {
                let z = Self::ramp_arg(eps_x, eps_t, t, x);
                2.0 * eps_a * eps_x * eps_t * sech2(z) * z.tanh()
            }
            _ => 0.0,
        }
    }

    fn scales(&self) -> Scales {
        match *self {
            Bottom::Zero => Scales {
                eps_a: 0.0,
                eps_x: 0.0,
                eps_t: 0.0,
            },
            Bottom::StaticBump { eps_a, eps_x } => Scales {
                eps_a,
                eps_x,
                eps_t: 0.0,
            },
            Bottom::MovingRamp { eps_a, eps_x, eps_t } => Scales { eps_a, eps_x, eps_t },
            Bottom::Flat { level } => Scales {
                eps_a: level.abs(),
                eps_x: 0.0,
                eps_t: 0.0,
            },
        }
    }

    fn tag(&self) -> &'static str {
        match self {
            Bottom::Zero => "zero",
            Bottom::StaticBump { .. } => "static-bump",
            Bottom::MovingRamp { .. } => "moving-ramp",
            Bottom::Flat { .. } => "flat",
        }
    }

    fn is_static(&self) -> bool {
        !matches!(self, Bottom::MovingRamp { .. })
    }
}

/// Largest ratio `|d_t^n d_x^m b| / (eps_a eps_t^n eps_x^m)` over a sampled
/// `(t, x)` lattice; the declared scales hold when this is at most 1.
pub fn check_scales(b: &dyn BottomProfile, grid: &Grid, times: &[f64]) -> f64 {
    let s = b.scales();
    let mut worst: f64 = 0.0;
    let mut test = |value: f64, bound: f64| {
        let r = if bound > 0.0 {
            value.abs() / bound
        } else if value.abs() > 1e-300 {
            f64::INFINITY
        } else {
            0.0
        };
        worst = worst.max(r);
    };
    for &t in times {
        for j in 0..grid.n_points() {
            let x = grid.x(j);
            test(b.b(t, x), s.eps_a);
            test(b.b_x(t, x), s.eps_a * s.eps_x);
            test(b.b_xx(t, x), s.eps_a * s.eps_x * s.eps_x);
            test(b.b_t(t, x), s.eps_a * s.eps_t);
            test(b.b_xt(t, x), s.eps_a * s.eps_t * s.eps_x);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let h = 1e-4;
        (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
    }

    #[test]
    fn derivatives_match_differences() {
        let profiles = [
            Bottom::StaticBump {
                eps_a: 0.02,
                eps_x: 0.1,
            },
            Bottom::MovingRamp {
                eps_a: 0.05,
                eps_x: 0.2,
                eps_t: 0.01,
            },
        ];
        for b in profiles {
            for (t, x) in [(0.0, 0.3), (3.0, -7.1), (11.0, 12.5)] {
                assert!((b.b_x(t, x) - fd(|y| b.b(t, y), x)).abs() < 1e-10);
                assert!((b.b_xx(t, x) - fd(|y| b.b_x(t, y), x)).abs() < 1e-10);
                assert!((b.b_t(t, x) - fd(|s| b.b(s, x), t)).abs() < 1e-10);
                assert!((b.b_xt(t, x) - fd(|s| b.b_x(s, x), t)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn shipped_profiles_respect_scales() {
        let grid = Grid::new(160.0, 1024).unwrap();
        let times = [0.0, 5.0, 50.0];
        for b in [
            Bottom::Zero,
            Bottom::StaticBump {
                eps_a: 0.02,
                eps_x: 0.1,
            },
            Bottom::MovingRamp {
                eps_a: 0.05,
                eps_x: 0.2,
                eps_t: 0.01,
            },
        ] {
            assert!(check_scales(&b, &grid, &times) <= 1.0, "{b:?}");
        }
    }

    #[test]
    fn bad_scales_rejected() {
        assert!(Bottom::StaticBump { eps_a: 2.0, eps_x: 0.1 }.validate().is_err());
        assert!(Bottom::MovingRamp {
            eps_a: 0.1,
            eps_x: 0.0,
            eps_t: 0.0
        }
        .validate()
        .is_err());
    }
}
