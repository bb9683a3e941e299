//! The linearized operator `L_Q = -d_x^2 + c - f'(Q_{c,a})`, its spectrum and
//! the constrained coercivity problem.

mod coercivity;
mod lobpcg;

pub use coercivity::{
    anisotropic_split, coercivity, coercivity_dense, good_constant, test_function_bound, AnisotropicCheck,
    CoercivityOptions, CoercivityResult, TestFunctionBound,
};
pub use lobpcg::{lobpcg_lowest, LobpcgOptions, LobpcgResult};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::soliton::{Nonlinearity, SolitonFamily, SolitonParams};

/// `L_Q` at a fixed soliton, with the potential `c - f'(Q)` sampled once.
#[derive(Clone, Debug)]
pub struct Hessian {
    pub c: f64,
    pub a: f64,
    potential: GridFunction,
}

impl Hessian {
    pub fn new(q: &GridFunction, c: f64, a: f64, nl: &Nonlinearity) -> Self {
        Self {
            c,
            a,
            potential: q.map(|v| c - nl.df(v)),
        }
    }

    pub fn from_params(params: &SolitonParams, nl: &Nonlinearity, grid: &Grid) -> Result<Self> {
        let fam = SolitonFamily::new(*grid, nl.clone())?;
        let q = fam.profile(params.c, params.a)?;
        Ok(Self::new(&q, params.c, params.a, nl))
    }

    pub fn grid(&self) -> &Grid {
        self.potential.grid()
    }

    pub fn potential(&self) -> &GridFunction {
        &self.potential
    }

    pub fn apply(&self, v: &GridFunction) -> GridFunction {
        let d2 = v.d(2);
        GridFunction::from_raw(
            *v.grid(),
            v.values()
                .iter()
                .zip(d2.values())
                .zip(self.potential.values())
                .map(|((&u, &u2), &w)| -u2 + w * u)
                .collect(),
        )
    }

    /// `<L v, v>`.
    pub fn quadratic_form(&self, v: &GridFunction) -> f64 {
        self.apply(v).dot(v)
    }

    /// Dense matrix of `L_Q` in the grid basis (symmetric).
    pub fn dense(&self) -> DMatrix<f64> {
        let g = self.grid();
        let mut m = fourier_second_derivative(g).scale(-1.0);
        for (j, &w) in self.potential.values().iter().enumerate() {
            m[(j, j)] += w;
        }
        m
    }
}

/// `L_Q v` at the soliton described by `params`.
pub fn apply_hessian(v: &GridFunction, params: &SolitonParams, nl: &Nonlinearity) -> Result<GridFunction> {
    Ok(Hessian::from_params(params, nl, v.grid())?.apply(v))
}

/// Dense Fourier second-derivative matrix on an even grid.
pub fn fourier_second_derivative(grid: &Grid) -> DMatrix<f64> {
    let n = grid.n_points();
    let h = 2.0 * std::f64::consts::PI / n as f64;
    let scale = (2.0 * std::f64::consts::PI / grid.length()).powi(2);
    DMatrix::from_fn(n, n, |i, j| {
        let v = if i == j {
            -std::f64::consts::PI.powi(2) / (3.0 * h * h) - 1.0 / 6.0
        } else {
            let d = i as isize - j as isize;
            let sign = if d.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let s = (0.5 * d as f64 * h).sin();
            -sign / (2.0 * s * s)
        };
        v * scale
    })
}

/// Fraction of mass of an eigenvector within `|x - a| < L/4` above which it
/// counts as localized.
pub const LOCALIZED_MASS: f64 = 0.9;

/// Lowest part of the spectrum of `L_Q`.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    pub c: f64,
    pub eigenvalues: Vec<f64>,
    pub localized: Vec<bool>,
    pub negative_count: usize,
    /// `||L zeta^tr||_2 / ||zeta^tr||_2`
    pub zero_mode_residual: f64,
    /// `|cos|` between the eigenvector nearest 0 and `zeta^tr`
    pub zero_mode_cosine: f64,
    /// first non-localized eigenvalue
    pub essential_onset: f64,
    pub min_gap: f64,
    pub ground_state: Vec<f64>,
}

impl SpectralReport {
    /// Localized eigenvalues (other than the zero mode) below `c`.
    pub fn localized_below_c(&self) -> bool {
        self.eigenvalues
            .iter()
            .zip(&self.localized)
            .filter(|(_, &l)| l)
            .all(|(&e, _)| e < self.c)
    }
}

/// Lowest `k <= 10` eigenpairs of the dense discretization of `L_Q`.
pub fn spectrum(params: &SolitonParams, nl: &Nonlinearity, grid: &Grid, k: usize) -> Result<SpectralReport> {
    if k == 0 || k > 10 {
        return Err(Error::Precondition(format!("k must lie in 1..=10, got {k}")));
    }
    let fam = SolitonFamily::new(*grid, nl.clone())?;
    let q = fam.profile(params.c, params.a)?;
    let zt = fam.tangent_translation(params.c, params.a)?;
    let hess = Hessian::new(&q, params.c, params.a, nl);
    let eig = SymmetricEigen::try_new(hess.dense(), 1e-14, 0)
        .ok_or_else(|| Error::Eigensolver("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..grid.n_points()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    let quarter = 0.25 * grid.length();
    let is_localized = |col: usize| {
        let v = eig.eigenvectors.column(col);
        let (mut inner, mut total) = (0.0, 0.0);
        for j in 0..grid.n_points() {
            let w = v[j] * v[j];
            total += w;
            if grid.wrap(grid.x(j) - params.a).abs() < quarter {
                inner += w;
            }
        }
        inner >= LOCALIZED_MASS * total
    };

    let eigenvalues: Vec<f64> = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
    let localized: Vec<bool> = order[..k].iter().map(|&i| is_localized(i)).collect();
    let tol = 1e-6;
    let negative_count = eigenvalues.iter().filter(|&&e| e < -tol).count();
    let essential_onset = order
        .iter()
        .find(|&&i| !is_localized(i))
        .map(|&i| eig.eigenvalues[i])
        .ok_or_else(|| Error::Eigensolver("no extended eigenvector found".into()))?;

    let zero_idx = order[..k]
        .iter()
        .copied()
        .min_by(|&i, &j| eig.eigenvalues[i].abs().total_cmp(&eig.eigenvalues[j].abs()))
        .expect("k >= 1");
    let v = eig.eigenvectors.column(zero_idx);
    let zn = zt.norm_l2() / grid.spacing().sqrt();
    let cosine = (v.iter().zip(zt.values()).map(|(a, b)| a * b).sum::<f64>() / zn).abs();
    let zero_mode_residual = hess.apply(&zt).norm_l2() / zt.norm_l2();

    let min_gap = eigenvalues
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let g0 = eig.eigenvectors.column(order[0]);
    let sign = if g0.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    let norm = grid.spacing().sqrt();
    Ok(SpectralReport {
        c: params.c,
        eigenvalues,
        localized,
        negative_count,
        zero_mode_residual,
        zero_mode_cosine: cosine,
        essential_onset,
        min_gap,
        ground_state: g0.iter().map(|v| sign * v / norm).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regsym::RegularizationParam;

    fn setup() -> (Grid, Nonlinearity, SolitonParams) {
        (
            Grid::new(80.0, 512).unwrap(),
            Nonlinearity::power(2).unwrap(),
            SolitonParams::new(1.0, 0.0, RegularizationParam::new(0.1).unwrap()).unwrap(),
        )
    }

    #[test]
    fn kernel_and_scaling_identities() {
        let (grid, nl, params) = setup();
        let fam = SolitonFamily::new(grid, nl.clone()).unwrap();
        let f = fam.fields(1.0, 0.0).unwrap();
        let lzt = apply_hessian(&f.zeta_tr, &params, &nl).unwrap();
        assert!(lzt.norm_l2() < 1e-7);
        let lzn = apply_hessian(&f.zeta_n, &params, &nl).unwrap();
        assert!((&lzn + &f.q).norm_l2() < 1e-6);
    }

    #[test]
    fn self_adjoint_and_high_modes() {
        let (grid, nl, params) = setup();
        let h = Hessian::from_params(&params, &nl, &grid).unwrap();
        let u = grid.sample(|x| (-(x - 1.0).powi(2) / 4.0).exp());
        let v = grid.sample(|x| x * (-x * x / 9.0).exp());
        assert!((h.apply(&u).dot(&v) - u.dot(&h.apply(&v))).abs() < 1e-10);
        let k = 2.0 * std::f64::consts::PI * 120.0 / 80.0;
        let w = grid.sample(|x| (k * x).cos());
        let rq = h.quadratic_form(&w) / w.dot(&w);
        assert!((rq / (k * k + 1.0) - 1.0).abs() < 0.01);
    }

    #[test]
    fn dense_matches_spectral_operator() {
        let grid = Grid::new(20.0, 64).unwrap();
        let d2 = fourier_second_derivative(&grid);
        let f = grid.sample(|x| (-x * x).exp());
        let a = d2 * nalgebra::DVector::from_column_slice(f.values());
        let b = f.d(2);
        for j in 0..64 {
            assert!((a[j] - b.values()[j]).abs() < 1e-10);
        }
    }

    #[test]
    fn spectrum_structure() {
        let (grid, nl, params) = setup();
        let r = spectrum(&params, &nl, &grid, 4).unwrap();
        assert_eq!(r.negative_count, 1);
        assert!((r.eigenvalues[0] + 1.25).abs() < 1e-4);
        assert!(r.eigenvalues[1].abs() < 1e-7);
        assert!((r.eigenvalues[2] - 0.75).abs() < 1e-4);
        assert!(r.zero_mode_residual < 1e-7);
        assert!(r.zero_mode_cosine > 1.0 - 1e-6);
        assert!(r.localized_below_c());
        assert!((r.essential_onset / params.c - 1.0).abs() < 0.05);
        assert!(r.min_gap > 1e-6);
    }
}
