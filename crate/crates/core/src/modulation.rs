//! Symplectic decomposition `u = Q_{c,a} + xi` with
//! `xi` orthogonal to `K_{Q,alpha} zeta^tr = -Q` and `K_{Q,alpha} zeta^n = (d_x + alpha)^{-1} zeta^n`.
//!
//! The parameters solve `F(a, c) = (<Q - u, -Q>, <Q - u, v2>) = 0` by damped
//! Newton with the exact Jacobian `Omega + A`.

use nalgebra::{Matrix2, Vector2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::hessian::{anisotropic_split, coercivity, CoercivityOptions};
use crate::regsym::{apply_k, apply_reg_inverse, RegularizationParam};
use crate::soliton::{Nonlinearity, SolitonFamily, SolitonFields, SolitonParams, SpeedInterval};

/// `Omega = [[<zt, -Q>, <zn, -Q>], [<zt, v2>, <zn, v2>]]`, `v2 = (d_x + alpha)^{-1} zn`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct OmegaMatrix {
    pub c: f64,
    pub alpha: f64,
    pub entries: [[f64; 2]; 2],
    pub determinant: f64,
    /// `(1/delta'^2) [[m^2/2, delta'], [-delta', 0]]` with `m = int zeta^n`
    pub leading_inverse: [[f64; 2]; 2],
    pub delta_prime: f64,
    /// `||Omega^{-1} - leading_inverse||` in the Frobenius norm
    pub inverse_defect: f64,
    /// `(inf_I delta')^2 / 2`
    pub determinant_floor: f64,
}

impl OmegaMatrix {
    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(
            self.entries[0][0],
            self.entries[0][1],
            self.entries[1][0],
            self.entries[1][1],
        )
    }
}

/// `inf_I delta'` from nine speeds spread over the interval.
pub fn inf_delta_prime(family: &SolitonFamily, interval: &SpeedInterval) -> Result<f64> {
    interval
        .grid(9)
        .into_iter()
        .map(|c| family.delta(c).map(|d| d.delta_prime))
        .try_fold(f64::INFINITY, |m, d| d.map(|d| m.min(d)))
}

fn omega_from_fields(f: &SolitonFields, v2: &GridFunction) -> [[f64; 2]; 2] {
    [
        [-f.zeta_tr.dot(&f.q), -f.zeta_n.dot(&f.q)],
        [f.zeta_tr.dot(v2), f.zeta_n.dot(v2)],
    ]
}

/// Build `Omega` and compare its inverse with the leading-order form.
pub fn omega_matrix(
    params: &SolitonParams,
    nl: &Nonlinearity,
    grid: &Grid,
    interval: &SpeedInterval,
) -> Result<OmegaMatrix> {
    let fam = SolitonFamily::new(*grid, nl.clone())?;
    let dp = fam.delta(params.c)?.delta_prime;
    let f = fam.fields(params.c, params.a)?;
    let alpha = params.alpha.value();
    let v2 = apply_reg_inverse(&f.zeta_n, params.alpha);
    let entries = omega_from_fields(&f, &v2);
    let m = Matrix2::new(entries[0][0], entries[0][1], entries[1][0], entries[1][1]);
    let det = m.determinant();
    let mass = f.zeta_n.integral();
    let lead = Matrix2::new(0.5 * mass * mass, dp, -dp, 0.0) / (dp * dp);
    let floor = 0.5 * inf_delta_prime(&fam, interval)?.powi(2);
    let inv = m.try_inverse();
    let defect = inv.map(|i| (i - lead).norm()).unwrap_or(f64::INFINITY);
    let out = OmegaMatrix {
        c: params.c,
        alpha,
        entries,
        determinant: det,
        leading_inverse: [[lead[(0, 0)], lead[(0, 1)]], [lead[(1, 0)], lead[(1, 1)]]],
        delta_prime: dp,
        inverse_defect: defect,
        determinant_floor: floor,
    };
    if det < floor {
        return Err(Error::AlphaInadmissible {
            alpha,
            reason: format!("det Omega = {det:.6} is below the floor {floor:.6}"),
        });
    }
    Ok(out)
}

/// `K_{Q,alpha} g = K P g + (d_x + alpha)^{-1} (g - P g)`, `P` the projection on `zeta^tr`.
pub fn apply_k_q_alpha(g: &GridFunction, fields: &SolitonFields, alpha: RegularizationParam) -> Result<GridFunction> {
    let zt = &fields.zeta_tr;
    let pg = zt.scale(g.dot(zt) / zt.dot(zt));
    let rest = g - &pg;
    Ok(&apply_k(&pg)? + &apply_reg_inverse(&rest, alpha))
}

/// Newton stopping rule and tube.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions {
    /// converged when both normalized residuals are below this
    pub tol: f64,
    pub max_iter: usize,
    /// accept a stalled iteration whose residuals are below this
    pub stall_tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            max_iter: 50,
            stall_tol: 1e-11,
        }
    }
}

/// Extracted parameters, fluctuation and its split.
#[derive(Clone, Debug, Serialize)]
pub struct ModulationState {
    pub t: f64,
    /// centre, lifted to the line by [`Modulator::track`]
    pub a: f64,
    pub c: f64,
    #[serde(skip)]
    pub xi: GridFunction,
    #[serde(skip)]
    pub xi_b: GridFunction,
    #[serde(skip)]
    pub xi_g: GridFunction,
    pub xi_h1: f64,
    pub xi_g_h1: f64,
    pub xi_b_h1: f64,
    /// `|<xi, K zeta_i>| / (||u|| ||K zeta_i||)`
    pub residuals: [f64; 2],
    pub newton_iters: usize,
}

struct Eval {
    f: Vector2<f64>,
    norm: f64,
    res: [f64; 2],
}

/// Stateful decomposer: holds the family, the tube, and a cache of the
/// coercivity minimizer used for the `xi_b + xi_g` split.
#[derive(Clone, Debug)]
pub struct Modulator {
    family: SolitonFamily,
    alpha: RegularizationParam,
    pub interval: SpeedInterval,
    /// `H^1` tube radius; default `0.1 alpha^{1/2}`
    pub tube_radius: f64,
    pub newton: NewtonOptions,
    /// recompute the minimizer when `c` moves by more than this (relative)
    pub eta_refresh: f64,
    pub coercivity: CoercivityOptions,
    /// compute the `xi_b + xi_g` split
    pub split: bool,
    eta_cache: Option<(f64, GridFunction)>,
}

impl Modulator {
    pub fn new(grid: Grid, nl: Nonlinearity, alpha: RegularizationParam) -> Result<Self> {
        Ok(Self {
            family: SolitonFamily::new(grid, nl)?,
            alpha,
            interval: SpeedInterval::default(),
            tube_radius: 0.1 * alpha.value().sqrt(),
            newton: NewtonOptions::default(),
            eta_refresh: 1e-3,
            coercivity: CoercivityOptions::default(),
            split: true,
            eta_cache: None,
        })
    }

    pub fn family(&self) -> &SolitonFamily {
        &self.family
    }

    pub fn alpha(&self) -> RegularizationParam {
        self.alpha
    }

    fn grid(&self) -> Grid {
        *self.family.grid()
    }

    fn evaluate(&self, u: &GridFunction, a: f64, c: f64) -> Result<(Eval, SolitonFields, GridFunction)> {
        let f = self.family.fields(c, a)?;
        let v2 = apply_reg_inverse(&f.zeta_n, self.alpha);
        let d = &f.q - u;
        let fv = Vector2::new(-d.dot(&f.q), d.dot(&v2));
        let un = u.norm_l2().max(f64::MIN_POSITIVE);
        let res = [fv[0].abs() / (un * f.q.norm_l2()), fv[1].abs() / (un * v2.norm_l2())];
        Ok((
            Eval {
                f: fv,
                norm: res[0].max(res[1]),
                res,
            },
            f,
            v2,
        ))
    }

    /// `F(a, c)` for the field `u`.
    pub fn residual(&self, u: &GridFunction, a: f64, c: f64) -> Result<Vector2<f64>> {
        Ok(self.evaluate(u, a, c)?.0.f)
    }

    /// Exact Jacobian `d F / d(a, c) = Omega + A`.
    pub fn jacobian(&self, u: &GridFunction, a: f64, c: f64) -> Result<Matrix2<f64>> {
        let (_, f, v2) = self.evaluate(u, a, c)?;
        Ok(self.jacobian_from(u, &f, &v2))
    }

    fn jacobian_from(&self, u: &GridFunction, f: &SolitonFields, v2: &GridFunction) -> Matrix2<f64> {
        let o = omega_from_fields(f, v2);
        let d = &f.q - u;
        let dv2_da = apply_reg_inverse(&(-&f.zeta_n.d(1)), self.alpha);
        let dv2_dc = apply_reg_inverse(&f.d2q_dc2, self.alpha);
        let a_corr = Matrix2::new(-d.dot(&f.zeta_tr), -d.dot(&f.zeta_n), d.dot(&dv2_da), d.dot(&dv2_dc));
        Matrix2::new(o[0][0], o[0][1], o[1][0], o[1][1]) + a_corr
    }

    /// Initial guess from the interpolated peak of `u`.
    pub fn peak_guess(&self, u: &GridFunction) -> Result<(f64, f64)> {
        let (a, peak) = u.peak();
        Ok((a, self.family.speed_from_peak(peak)?))
    }

    /// Newton solve for `(a, c)` without the split or the tube check.
    pub fn solve(&self, u: &GridFunction, guess: Option<(f64, f64)>) -> Result<(f64, f64, usize, [f64; 2])> {
        let (mut a, mut c) = match guess {
            Some(g) => g,
            None => self.peak_guess(u)?,
        };
        let grid = self.grid();
        a = grid.wrap(a);
        let (mut ev, mut f, mut v2) = self.evaluate(u, a, c)?;
        for it in 0..=self.newton.max_iter {
            if ev.norm <= self.newton.tol {
                return Ok((a, c, it, ev.res));
            }
            if it == self.newton.max_iter {
                break;
            }
            let j = self.jacobian_from(u, &f, &v2);
            let Some(step) = j.lu().solve(&(-ev.f)) else {
                break;
            };
            let mut lambda = 1.0;
            let mut accepted = None;
            for _ in 0..30 {
                let (an, cn) = (grid.wrap(a + lambda * step[0]), c + lambda * step[1]);
                if cn > 0.0 {
                    if let Ok(trial) = self.evaluate(u, an, cn) {
                        if trial.0.norm < ev.norm {
                            accepted = Some((an, cn, trial));
                            break;
                        }
                    }
                }
                lambda *= 0.5;
            }
            match accepted {
                Some((an, cn, trial)) => {
                    a = an;
                    c = cn;
                    (ev, f, v2) = trial;
                }
                None => {
                    if ev.norm <= self.newton.stall_tol {
                        return Ok((a, c, it, ev.res));
                    }
                    break;
                }
            }
        }
        let xi = u - &self.family.profile(c.max(1e-6), a)?;
        Err(Error::TubeExit {
            xi_h1: xi.sobolev_norm_h1(),
            radius: self.tube_radius,
            time: None,
        })
    }

    fn eta_at(&mut self, c: f64, a: f64) -> Result<GridFunction> {
        let stale = match &self.eta_cache {
            Some((c0, _)) => ((c - c0) / c0).abs() > self.eta_refresh,
            None => true,
        };
        if stale {
            let params = SolitonParams::new(c, 0.0, self.alpha)?;
            let r = coercivity(
                &params,
                self.family.nonlinearity(),
                self.family.grid(),
                &self.coercivity,
            )?;
            self.eta_cache = Some((c, r.eta));
        }
        let eta = &self.eta_cache.as_ref().expect("filled above").1;
        let shifted = eta.shift(a);
        Ok(shifted.scale(1.0 / shifted.norm_l2()))
    }

    /// Decompose one field; `guess` defaults to the peak estimate.
    pub fn decompose(&mut self, u: &GridFunction, guess: Option<(f64, f64)>) -> Result<ModulationState> {
        let (a, c, iters, residuals) = self.solve(u, guess)?;
        if !self.interval.contains(c) {
            return Err(Error::IntervalExit {
                c,
                lo: self.interval.lo,
                hi: self.interval.hi,
                time: None,
            });
        }
        let q = self.family.profile(c, a)?;
        let xi = u - &q;
        let xi_h1 = xi.sobolev_norm_h1();
        if xi_h1 > self.tube_radius {
            return Err(Error::TubeExit {
                xi_h1,
                radius: self.tube_radius,
                time: None,
            });
        }
        let (xi_b, xi_g) = if self.split {
            let eta = self.eta_at(c, a)?;
            anisotropic_split(&xi, &eta)?
        } else {
            (self.grid().zeros(), xi.clone())
        };
        Ok(ModulationState {
            t: 0.0,
            a,
            c,
            xi_h1,
            xi_g_h1: xi_g.sobolev_norm_h1(),
            xi_b_h1: xi_b.sobolev_norm_h1(),
            xi,
            xi_b,
            xi_g,
            residuals,
            newton_iters: iters,
        })
    }

    /// Decompose a time series, warm-starting each solve from a linear
    /// extrapolation of the previous two states and lifting `a` to the line.
    pub fn track(&mut self, times: &[f64], states: &[GridFunction]) -> Result<Vec<ModulationState>> {
        match self.track_until_exit(times, states) {
            (out, None) => Ok(out),
            (_, Some(e)) => Err(e),
        }
    }

    /// Like [`Modulator::track`], but keeps the states decomposed before the
    /// first failure and returns that failure alongside them.
    pub fn track_until_exit(
        &mut self,
        times: &[f64],
        states: &[GridFunction],
    ) -> (Vec<ModulationState>, Option<Error>) {
        let grid = self.grid();
        let mut out: Vec<ModulationState> = Vec::with_capacity(states.len());
        for (&t, u) in times.iter().zip(states) {
            let guess = match out.len() {
                0 => None,
                1 => Some((out[0].a, out[0].c)),
                n => {
                    let (p, q) = (&out[n - 1], &out[n - 2]);
                    let dt_prev = p.t - q.t;
                    let r = if dt_prev != 0.0 { (t - p.t) / dt_prev } else { 1.0 };
                    Some((p.a + r * (p.a - q.a), p.c + r * (p.c - q.c)))
                }
            };
            let mut s = match self.decompose(u, guess) {
                Ok(s) => s,
                Err(e) => return (out, Some(e.at(t))),
            };
            s.t = t;
            if let Some(prev) = out.last() {
                s.a = prev.a + grid.wrap(s.a - prev.a);
            }
            out.push(s);
        }
        (out, None)
    }
}

/// One-shot decomposition with default tube and interval.
pub fn decompose(
    u: &GridFunction,
    nl: &Nonlinearity,
    alpha: RegularizationParam,
    initial_guess: Option<(f64, f64)>,
) -> Result<ModulationState> {
    Modulator::new(*u.grid(), nl.clone(), alpha)?.decompose(u, initial_guess)
}
