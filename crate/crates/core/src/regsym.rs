//! The antiderivative `K` and its regularization `(d_x + alpha)^{-1}`.
//!
//! On the periodic grid the regularized inverse is the Fourier multiplier
//! `1/(ik + alpha)`. It coincides with the line kernel
//! `int_{-inf}^x g(y) e^{alpha(y-x)} dy` up to the wrap-around factor
//! `exp(-alpha L)`, so the line statements are only checked on boxes with
//! `alpha L` large.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridFunction;

/// Regularization strength, `0 < alpha <= 1`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
pub struct RegularizationParam(f64);

impl RegularizationParam {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::AlphaInadmissible {
                alpha,
                reason: "must satisfy 0 < alpha <= 1".into(),
            });
        }
        Ok(Self(alpha))
    }

    /// `alpha = (eps_a eps_x)^s`, requiring `0 < s < 1/2`.
    pub fn from_rule(eps_a: f64, eps_x: f64, s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 0.5) {
            return Err(Error::Config(format!("alpha exponent s must lie in (0, 1/2), got {s}")));
        }
        Self::new((eps_a * eps_x).powf(s))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// Relative zero-mean tolerance of [`apply_k`].
pub const ZERO_MEAN_TOL: f64 = 1e-10;

fn periodic_antiderivative(f: &GridFunction) -> GridFunction {
    let g = f.apply_multiplier(|k, nyq| {
        if k == 0.0 || nyq {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, -1.0 / k)
        }
    });
    let left = g.values()[0];
    g.map(|v| v - left)
}

/// `K f = int_{-L/2}^x f` for zero-mean `f`.
pub fn apply_k(f: &GridFunction) -> Result<GridFunction> {
    let total = f.integral();
    let l1 = f.norm_l1();
    if total.abs() > ZERO_MEAN_TOL * l1.max(f64::MIN_POSITIVE) {
        return Err(Error::RejectedInput(format!(
            "K needs a zero-mean input for a periodic result: int f = {total:.6e} (|f|_1 = {l1:.6e})"
        )));
    }
    Ok(periodic_antiderivative(f))
}

/// Line antiderivative `int_{-L/2}^x f`, without the zero-mean requirement.
/// The result is not periodic when `int f != 0`.
pub fn antiderivative_line(f: &GridFunction) -> GridFunction {
    let m = f.mean();
    let g = f.grid();
    let left = 0.5 * g.length();
    let periodic = periodic_antiderivative(&f.map(|v| v - m));
    periodic.map_with_x(|x, v| v + m * (x + left))
}

/// `(d_x + alpha)^{-1} f` as the multiplier `1/(ik + alpha)`.
pub fn apply_reg_inverse(f: &GridFunction, alpha: RegularizationParam) -> GridFunction {
    let a = alpha.value();
    f.apply_multiplier(|k, nyq| {
        if nyq {
            Complex64::new(a / (k * k + a * a), 0.0)
        } else {
            Complex64::new(1.0, 0.0) / Complex64::new(a, k)
        }
    })
}

/// Constant in the `L^2` and weighted bounds: `||e^{-alpha s} 1_{s>0}||_2 = (2 alpha)^{-1/2}`.
pub const YOUNG_CONSTANT: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Required decay `exp(-alpha L / 4)` for the periodic box to stand in for the line.
pub const WRAP_TOL: f64 = 1e-6;

/// Clause (6) holds when `|R| <= REMAINDER_K (||phi||_1 + ||x phi||_1)^2` at
/// `alpha` and `alpha / 2`, one constant for every field and alpha.
pub const REMAINDER_K: f64 = 0.5;

/// Measured sides of each clause of the regularized inverse.
#[derive(Clone, Debug, Serialize)]
pub struct RegInverseReport {
    pub alpha: f64,
    /// max of the two commutation defects and the translation defect
    pub commutation_error: f64,
    pub sup_norm: f64,
    pub l1_norm: f64,
    /// `||d_a^{-1} phi||_2 alpha^{1/2} / ||phi||_1`
    pub l2_constant: f64,
    /// smallest `C` making the weighted bound hold
    pub weighted_constant: f64,
    pub inner_defect: f64,
    pub inner_bound: f64,
    pub inner_special_defect: f64,
    pub inner_special_bound: f64,
    /// `||d_a^{-1} phi||^2 - (int phi)^2 / (2 alpha)` at `alpha`
    pub leading_remainder: f64,
    /// same at `alpha / 2`
    pub leading_remainder_half: f64,
    /// `(||phi||_1 + ||x phi||_1)^2`
    pub remainder_scale: f64,
    pub clauses: [bool; 6],
}

impl RegInverseReport {
    pub fn all_pass(&self) -> bool {
        self.clauses.iter().all(|&c| c)
    }

    /// Flat `key=value` lines.
    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        let v = serde_json::to_value(self).expect("report serializes");
        if let serde_json::Value::Object(map) = v {
            for (k, v) in map {
                let _ = writeln!(s, "{k}={v}");
            }
        }
        s
    }
}

fn leading_remainder(phi: &GridFunction, alpha: f64) -> Result<f64> {
    let inv = apply_reg_inverse(phi, RegularizationParam::new(alpha)?);
    let m = phi.integral();
    Ok(inv.dot(&inv) - m * m / (2.0 * alpha))
}

/// Evaluate every clause of the regularized inverse for `phi`, `psi`.
///
/// Weights `x` are taken about the box centre. Errors when the box is too
/// short for `alpha / 2` or when `phi`, `psi` are not negligible at the edges.
pub fn check_reg_inverse(
    phi: &GridFunction,
    psi: &GridFunction,
    alpha: RegularizationParam,
) -> Result<RegInverseReport> {
    if phi.grid() != psi.grid() {
        return Err(Error::GridMismatch {
            left: phi.grid().to_string(),
            right: psi.grid().to_string(),
        });
    }
    let grid = *phi.grid();
    let a = alpha.value();
    let wrap = (-0.25 * a * grid.length()).exp();
    if wrap > WRAP_TOL {
        return Err(Error::Precondition(format!(
            "box too short for alpha/2 = {}: exp(-alpha L/4) = {wrap:.3e} > {WRAP_TOL:e}",
            0.5 * a
        )));
    }
    for (name, f) in [("phi", phi), ("psi", psi)] {
        let edge = f.values()[0].abs().max(f.values()[grid.n_points() - 1].abs());
        if edge > 1e-12 * f.norm_sup().max(f64::MIN_POSITIVE) {
            return Err(Error::Precondition(format!(
                "{name} is not negligible at the box edge ({edge:.3e})"
            )));
        }
    }

    let inv = apply_reg_inverse(phi, alpha);
    let scale = phi.norm_sup().max(f64::MIN_POSITIVE);
    let lhs = phi.d(1);
    let d_inv = inv.d(1);
    let inv_d = apply_reg_inverse(&lhs, alpha);
    let rhs = phi.axpy(-a, &inv);
    let shift = 37 % grid.n_points();
    let rot = |f: &GridFunction| {
        let mut v = f.values().to_vec();
        v.rotate_right(shift);
        GridFunction::from_raw(grid, v)
    };
    let trans = (&apply_reg_inverse(&rot(phi), alpha) - &rot(&inv)).norm_sup();
    let commutation_error = (&d_inv - &rhs).norm_sup().max((&inv_d - &rhs).norm_sup()).max(trans) / scale;

    let l1 = phi.norm_l1();
    let sup_norm = inv.norm_sup();

    let l2_constant = inv.norm_l2() * a.sqrt() / l1;

    let x = grid.coordinate();
    let xinv = (&x * &inv).norm_l2();
    let xphi = phi.moment_l1(0.0);
    let xpsi = psi.moment_l1(0.0);
    let weighted_constant = xinv / (a.powf(-1.5) * l1 + a.powf(-0.5) * xphi);

    let k_psi = antiderivative_line(psi);
    let inv_psi = apply_reg_inverse(psi, alpha);
    let inner_defect = (phi.dot(&inv_psi) - phi.dot(&k_psi)).abs();
    let inner_bound = a * (l1 * xpsi + xphi * psi.norm_l1());
    let m = phi.integral();
    let inner_special_defect = (phi.dot(&inv) - 0.5 * m * m).abs();
    let inner_special_bound = 2.0 * a * l1 * xphi;

    let r = leading_remainder(phi, a)?;
    let r_half = leading_remainder(phi, 0.5 * a)?;
    let remainder_scale = (l1 + xphi).powi(2);
    let bounded = r.abs().max(r_half.abs()) <= REMAINDER_K * remainder_scale;

    let slack = 1.0 + 1e-9;
    let clauses = [
        commutation_error <= 1e-9,
        sup_norm <= l1 * slack,
        l2_constant <= YOUNG_CONSTANT * slack,
        weighted_constant <= YOUNG_CONSTANT * slack,
        inner_defect <= inner_bound * slack + 1e-12 && inner_special_defect <= inner_special_bound * slack + 1e-12,
        bounded,
    ];
    Ok(RegInverseReport {
        alpha: a,
        commutation_error,
        sup_norm,
        l1_norm: l1,
        l2_constant,
        weighted_constant,
        inner_defect,
        inner_bound,
        inner_special_defect,
        inner_special_bound,
        leading_remainder: r,
        leading_remainder_half: r_half,
        remainder_scale,
        clauses,
    })
}

/// Box length giving `alpha L = 72` rounded to a multiple of 32; the size used
/// by the clause sweeps.
pub fn reg_inverse_box_length(alpha: f64) -> f64 {
    (72.0 / alpha / 32.0).ceil() * 32.0
}
