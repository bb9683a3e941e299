//! Constrained minimization of `<L_Q xi, xi>` over unit `xi` orthogonal to
//! `Q_{c,a}` and `(d_x + alpha)^{-1} zeta^n`, and the anisotropic split it induces.

use nalgebra::{DMatrix, Matrix2, SymmetricEigen, Vector2};
use num_complex::Complex64;
use serde::Serialize;

use super::lobpcg::{lobpcg_lowest, LobpcgOptions};
use super::Hessian;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::regsym::apply_reg_inverse;
use crate::soliton::{Nonlinearity, SolitonFamily, SolitonParams};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoercivityOptions {
    pub lobpcg: LobpcgOptions,
    /// Tolerance for the `H^1`-weighted problem behind the good-direction constant.
    pub good_tol: f64,
}

impl Default for CoercivityOptions {
    fn default() -> Self {
        Self {
            lobpcg: LobpcgOptions::default(),
            good_tol: 1e-8,
        }
    }
}

/// Orthonormal basis (Gram-Schmidt, repeated once) of the given fields.
pub(crate) fn orthonormalize(vs: &[&GridFunction]) -> Vec<GridFunction> {
    let mut out: Vec<GridFunction> = Vec::new();
    for v in vs {
        let mut w = (*v).clone();
        for _ in 0..2 {
            for e in &out {
                w = w.axpy(-w.dot(e), e);
            }
        }
        let n = w.norm_l2();
        if n > 1e-14 {
            out.push(w.scale(1.0 / n));
        }
    }
    out
}

pub(crate) fn project_out(v: &GridFunction, basis: &[GridFunction]) -> GridFunction {
    let mut w = v.clone();
    for e in basis {
        w = w.axpy(-w.dot(e), e);
    }
    w
}

/// Minimizer of the constrained problem and the quantities derived from it.
#[derive(Clone, Debug, Serialize)]
pub struct CoercivityResult {
    pub c: f64,
    pub alpha: f64,
    /// `sigma(c, alpha)`
    pub sigma: f64,
    #[serde(skip)]
    pub eta: GridFunction,
    /// `gamma = <eta, zeta^tr> / ||zeta^tr||^2`
    pub gamma: f64,
    /// `||eta - gamma zeta^tr||_2`
    pub eta_perp_norm: f64,
    pub eta_h1: f64,
    pub beta: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// `||L eta - beta eta - beta1 Q - beta2 v2||_2`
    pub euler_lagrange_residual: f64,
    /// `|<eta, Q>|`, `|<eta, v2>| / ||v2||`
    pub constraint_residuals: [f64; 2],
    /// good-direction constant `C_3`
    pub c3: f64,
    /// bad-direction constant `sigma / (alpha ||eta||_{H^1}^2)`
    pub c_weak: f64,
    pub iterations: usize,
    #[serde(skip)]
    pub(crate) constraints: Vec<GridFunction>,
    #[serde(skip)]
    pub(crate) hessian: Hessian,
}

impl CoercivityResult {
    /// Project an arbitrary field onto the admissible set `{Q, v2}^perp`.
    pub fn make_admissible(&self, xi: &GridFunction) -> GridFunction {
        project_out(xi, &self.constraints)
    }

    pub fn hessian(&self) -> &Hessian {
        &self.hessian
    }

    /// Check the anisotropic lower bound and the vanishing cross term on samples.
    pub fn check_anisotropic(&self, samples: &[GridFunction]) -> Result<AnisotropicCheck> {
        let l_eta = self.hessian.apply(&self.eta);
        let mut worst_ratio = f64::INFINITY;
        let mut max_cross: f64 = 0.0;
        for s in samples {
            let xi = self.make_admissible(s);
            let (xb, xg) = anisotropic_split(&xi, &self.eta)?;
            let lhs = self.hessian.quadratic_form(&xi);
            let rhs = self.c3 * xg.sobolev_norm_h1().powi(2) + self.c_weak * self.alpha * xb.sobolev_norm_h1().powi(2);
            worst_ratio = worst_ratio.min(lhs / rhs);
            let n = xg.norm_l2();
            if n > 0.0 {
                max_cross = max_cross.max(l_eta.dot(&xg).abs() / n);
            }
        }
        Ok(AnisotropicCheck {
            samples: samples.len(),
            worst_ratio,
            max_cross_term: max_cross,
        })
    }
}

/// Outcome of [`CoercivityResult::check_anisotropic`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AnisotropicCheck {
    pub samples: usize,
    /// `min <L xi, xi> / (C_3 ||xi_g||^2 + C alpha ||xi_b||^2)`; at least 1 when the bound holds
    pub worst_ratio: f64,
    /// `max |<L eta, xi_g>| / ||xi_g||`
    pub max_cross_term: f64,
}

/// `xi_b = <xi, eta> eta`, `xi_g = xi - xi_b`.
pub fn anisotropic_split(xi: &GridFunction, eta: &GridFunction) -> Result<(GridFunction, GridFunction)> {
    let n = eta.norm_l2();
    if (n - 1.0).abs() > 1e-8 {
        return Err(Error::Precondition(format!("eta must have unit norm, got {n}")));
    }
    let xb = eta.scale(xi.dot(eta));
    let xg = xi - &xb;
    Ok((xb, xg))
}

struct Setup {
    q: GridFunction,
    zeta_tr: GridFunction,
    v2: GridFunction,
    hessian: Hessian,
}

fn setup(params: &SolitonParams, nl: &Nonlinearity, grid: &Grid) -> Result<Setup> {
    let fam = SolitonFamily::new(*grid, nl.clone())?;
    fam.delta(params.c)?;
    let f = fam.fields(params.c, params.a)?;
    let v2 = apply_reg_inverse(&f.zeta_n, params.alpha);
    let hessian = Hessian::new(&f.q, params.c, params.a, nl);
    Ok(Setup {
        q: f.q,
        zeta_tr: f.zeta_tr,
        v2,
        hessian,
    })
}

/// Solve the constrained problem with LOBPCG preconditioned by `(-d_x^2 + c)^{-1}`.
pub fn coercivity(
    params: &SolitonParams,
    nl: &Nonlinearity,
    grid: &Grid,
    opts: &CoercivityOptions,
) -> Result<CoercivityResult> {
    let s = setup(params, nl, grid)?;
    let c = params.c;
    let alpha = params.alpha.value();
    let constraints = orthonormalize(&[&s.q, &s.v2]);
    let proj = |v: &GridFunction| project_out(v, &constraints);
    let pre = |v: &GridFunction| v.apply_multiplier(|k, _| Complex64::new(1.0 / (k * k + c), 0.0));
    let res = lobpcg_lowest(|v| s.hessian.apply(v), pre, proj, &s.zeta_tr, &opts.lobpcg)?;
    let sigma = res.value;
    if sigma <= 0.0 {
        return Err(Error::StabilityViolated { c, delta_prime: sigma });
    }
    if sigma >= c {
        return Err(Error::AlphaInadmissible {
            alpha,
            reason: format!("sigma = {sigma:.4e} is not below the essential spectrum onset c = {c}"),
        });
    }
    let mut eta = res.vector;
    if eta.dot(&s.zeta_tr) < 0.0 {
        eta = eta.scale(-1.0);
    }

    let l_eta = s.hessian.apply(&eta);
    let beta = l_eta.dot(&eta);
    let r = l_eta.axpy(-beta, &eta);
    let gram = Matrix2::new(s.q.dot(&s.q), s.v2.dot(&s.q), s.q.dot(&s.v2), s.v2.dot(&s.v2));
    let rhs = Vector2::new(r.dot(&s.q), r.dot(&s.v2));
    let sol = gram
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Eigensolver("singular constraint Gram matrix".into()))?;
    let (beta1, beta2) = (sol[0], sol[1]);
    let el = r.axpy(-beta1, &s.q).axpy(-beta2, &s.v2).norm_l2();

    let zt2 = s.zeta_tr.dot(&s.zeta_tr);
    let gamma = eta.dot(&s.zeta_tr) / zt2;
    let eta_perp_norm = eta.axpy(-gamma, &s.zeta_tr).norm_l2();
    let eta_h1 = eta.sobolev_norm_h1();

    let c3 = good_constant(&s.hessian, &[&s.q, &s.v2, &eta], opts.good_tol)?;
    Ok(CoercivityResult {
        c,
        alpha,
        sigma,
        gamma,
        eta_perp_norm,
        eta_h1,
        beta,
        beta1,
        beta2,
        euler_lagrange_residual: el,
        constraint_residuals: [eta.dot(&s.q).abs(), eta.dot(&s.v2).abs() / s.v2.norm_l2()],
        c3,
        c_weak: sigma / (alpha * eta_h1 * eta_h1),
        iterations: res.iterations,
        eta,
        constraints,
        hessian: s.hessian,
    })
}

/// `min <L xi, xi> / ||xi||_{H^1}^2` over `xi` orthogonal to `exclude`.
///
/// Solved as the lowest eigenvalue of `B^{-1/2} L B^{-1/2}`, `B = 1 - d_x^2`,
/// on the complement of `B^{-1/2} exclude`.
pub fn good_constant(hessian: &Hessian, exclude: &[&GridFunction], tol: f64) -> Result<f64> {
    let half = |v: &GridFunction| v.apply_multiplier(|k, _| Complex64::new((1.0 + k * k).powf(-0.5), 0.0));
    let w: Vec<GridFunction> = exclude.iter().map(|e| half(e)).collect();
    let refs: Vec<&GridFunction> = w.iter().collect();
    let basis = orthonormalize(&refs);
    let proj = |v: &GridFunction| project_out(v, &basis);
    let op = |v: &GridFunction| half(&hessian.apply(&half(v)));
    let grid = *hessian.grid();
    let a = hessian.a;
    let start = grid.sample(|x| {
        let y = grid.wrap(x - a);
        (1.0 + 0.3 * y) * (-0.25 * y * y).exp()
    });
    let opts = LobpcgOptions { tol, max_iter: 5000 };
    Ok(lobpcg_lowest(op, |v| v.clone(), proj, &start, &opts)?.value)
}

/// `sigma` from a dense eigensolve of `P L P + mu V V^T` (grid sizes up to 2048).
pub fn coercivity_dense(params: &SolitonParams, nl: &Nonlinearity, grid: &Grid) -> Result<f64> {
    let n = grid.n_points();
    if n > 2048 {
        return Err(Error::Precondition(format!(
            "dense coercivity needs N <= 2048, got {n}"
        )));
    }
    let s = setup(params, nl, grid)?;
    let h = grid.spacing();
    let basis = orthonormalize(&[&s.q, &s.v2]);
    let vecs: Vec<Vec<f64>> = basis
        .iter()
        .map(|e| e.values().iter().map(|v| v * h.sqrt()).collect())
        .collect();
    let mut p = DMatrix::<f64>::identity(n, n);
    for v in &vecs {
        for i in 0..n {
            for j in 0..n {
                p[(i, j)] -= v[i] * v[j];
            }
        }
    }
    let l = s.hessian.dense();
    let mut m = &p * l * &p;
    let mu = 1e6;
    for v in &vecs {
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] += mu * v[i] * v[j];
            }
        }
    }
    let m = 0.5 * (&m + m.transpose());
    let eig = SymmetricEigen::try_new(m, 1e-14, 0)
        .ok_or_else(|| Error::Eigensolver("dense eigensolver did not converge".into()))?;
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Rayleigh quotient of the trial field `zeta^tr + l2 v2 + l3 Q` made admissible.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TestFunctionBound {
    pub lambda2: f64,
    pub lambda3: f64,
    pub rayleigh: f64,
    /// `rayleigh / alpha`
    pub ratio: f64,
}

pub fn test_function_bound(params: &SolitonParams, nl: &Nonlinearity, grid: &Grid) -> Result<TestFunctionBound> {
    let s = setup(params, nl, grid)?;
    let m = Matrix2::new(s.v2.dot(&s.q), s.q.dot(&s.q), s.v2.dot(&s.v2), s.q.dot(&s.v2));
    let rhs = -Vector2::new(s.zeta_tr.dot(&s.q), s.zeta_tr.dot(&s.v2));
    let sol = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Precondition("trial-function system is singular".into()))?;
    let xi = s.zeta_tr.axpy(sol[0], &s.v2).axpy(sol[1], &s.q);
    let rayleigh = s.hessian.quadratic_form(&xi) / xi.dot(&xi);
    Ok(TestFunctionBound {
        lambda2: sol[0],
        lambda3: sol[1],
        rayleigh,
        ratio: rayleigh / params.alpha.value(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regsym::RegularizationParam;

    fn params(alpha: f64) -> SolitonParams {
        SolitonParams::new(1.0, 0.0, RegularizationParam::new(alpha).unwrap()).unwrap()
    }

    #[test]
    fn iterative_matches_dense() {
        let grid = Grid::new(160.0, 512).unwrap();
        let nl = Nonlinearity::power(2).unwrap();
        let p = params(0.2);
        let it = coercivity(&p, &nl, &grid, &CoercivityOptions::default()).unwrap();
        let dense = coercivity_dense(&p, &nl, &grid).unwrap();
        assert!(
            (it.sigma - dense).abs() < 1e-8 * dense.abs().max(1.0),
            "{} vs {dense}",
            it.sigma
        );
        assert!((it.beta - it.sigma).abs() < 1e-8);
        assert!(it.euler_lagrange_residual < 1e-8);
        assert!(it.constraint_residuals.iter().all(|&r| r < 1e-10));
        assert!(it.c3 > 0.0 && it.c_weak > 0.0);
    }

    #[test]
    fn split_is_orthogonal() {
        let grid = Grid::new(40.0, 128).unwrap();
        let eta = grid.sample(|x| (-x * x).exp());
        let eta = eta.scale(1.0 / eta.norm_l2());
        let (b, g) = anisotropic_split(&eta, &eta).unwrap();
        assert!((&b - &eta).norm_sup() < 1e-15 && g.norm_sup() < 1e-15);
        let odd = grid.sample(|x| x * (-x * x).exp());
        let (b, g) = anisotropic_split(&odd, &eta).unwrap();
        assert!(b.norm_sup() < 1e-15 && (&g - &odd).norm_sup() < 1e-15);
        assert!(anisotropic_split(&odd, &odd).is_err());
    }

    #[test]
    fn trial_function_is_admissible_and_small() {
        let grid = Grid::new(640.0, 4096).unwrap();
        let nl = Nonlinearity::power(2).unwrap();
        let p = params(0.1);
        let t = test_function_bound(&p, &nl, &grid).unwrap();
        let r = coercivity(&p, &nl, &grid, &CoercivityOptions::default()).unwrap();
        assert!(t.rayleigh >= r.sigma * (1.0 - 1e-9));
        assert!(t.ratio < 10.0);
    }
}
