//! Renormalized spectral fixed-point (Petviashvili) construction of `Q_c`
//! for nonlinearities without a closed-form profile.

use num_complex::Complex64;

use super::{field_equation_residual, Nonlinearity};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};

/// Stopping rule for [`construct_general`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneralOptions {
    /// Declare convergence once the sup-norm field-equation residual is below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Residual accepted when the iteration cap is hit first.
    pub accept: f64,
}

impl Default for GeneralOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
            accept: 1e-8,
        }
    }
}

fn symmetrize(q: &GridFunction) -> GridFunction {
    let v = q.values();
    let n = v.len();
    // x_j = -L/2 + j h reflects to x_{N-j}; j = 0 is its own image.
    let sym: Vec<f64> = (0..n).map(|j| 0.5 * (v[j] + v[(n - j) % n])).collect();
    GridFunction::from_raw(*q.grid(), sym)
}

/// Even, positive, decaying solution of `-Q'' + c Q = f(Q)` centred at 0.
///
/// The Berestycki-Lions conditions are checked first; the first zero `u*` of
/// `G(u) = int_0^u (f - c s)` is the peak height and seeds a `sech^2` guess.
pub fn construct_general(c: f64, nl: &Nonlinearity, grid: &Grid, opts: &GeneralOptions) -> Result<GridFunction> {
    let peak = nl.check_existence(c)?;
    let rc = c.sqrt();
    let mut q = grid.sample(|x| {
        let s = 1.0 / (0.5 * rc * x).cosh();
        peak * s * s
    });
    let symbol = |k: f64| k * k + c;
    let mut history = Vec::new();
    for _ in 0..opts.max_iter {
        let fq = q.map(|v| nl.f(v));
        let qhat = q.spectrum();
        let fhat = fq.spectrum();
        let g = *grid;
        let mut num = 0.0;
        let mut den = 0.0;
        for (j, (a, b)) in qhat.iter().zip(fhat.iter()).enumerate() {
            let m = symbol(g.wavenumber(j));
            num += m * a.norm_sqr();
            den += (b * a.conj()).re;
        }
        if den <= 0.0 {
            return Err(Error::NoConvergence {
                iterations: history.len(),
                residual: f64::INFINITY,
                history,
            });
        }
        let s = num / den;
        let pq: f64 = q.values().iter().map(|&v| v * v * nl.df(v)).sum();
        let fqq: f64 = q.values().iter().map(|&v| v * nl.f(v)).sum();
        let p_eff = if fqq > 0.0 { pq / fqq } else { 2.0 };
        let gamma = if p_eff > 1.0 + 1e-6 { p_eff / (p_eff - 1.0) } else { 2.0 };
        let factor = s.powf(gamma);
        let next: Vec<Complex64> = fhat
            .iter()
            .enumerate()
            .map(|(j, b)| b * (factor / symbol(g.wavenumber(j))))
            .collect();
        q = symmetrize(&GridFunction::from_spectrum(g, next));
        let r = field_equation_residual(&q, c, nl).norm_sup();
        history.push(r);
        if !r.is_finite() {
            break;
        }
        if r <= opts.tol {
            return Ok(q);
        }
    }
    match history.last() {
        Some(&r) if r <= opts.accept => Ok(q),
        _ => Err(Error::NoConvergence {
            iterations: history.len(),
            residual: history.last().copied().unwrap_or(f64::INFINITY),
            history,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::soliton::SolitonFamily;

    #[test]
    fn reproduces_closed_forms() {
        let grid = Grid::new(80.0, 512).unwrap();
        for (p, c) in [(2u32, 1.0), (3, 1.0), (2, 1.7)] {
            let closed = SolitonFamily::new(grid, Nonlinearity::power(p).unwrap())
                .unwrap()
                .profile(c, 0.0)
                .unwrap();
            let poly = Nonlinearity::polynomial(&[(p, 1.0)]);
            let q = construct_general(c, &poly, &grid, &GeneralOptions::default()).unwrap();
            assert!((&q - &closed).norm_sup() < 1e-7, "p={p} c={c}");
        }
    }

    #[test]
    fn mixed_polynomial_converges() {
        let grid = Grid::new(80.0, 512).unwrap();
        let nl = Nonlinearity::polynomial(&[(2, 1.0), (3, 0.3)]);
        let q = construct_general(1.0, &nl, &grid, &GeneralOptions::default()).unwrap();
        assert!(field_equation_residual(&q, 1.0, &nl).norm_sup() < 1e-8);
        assert!(q.values().iter().all(|&v| v > -1e-12));
    }

    #[test]
    fn rejects_linear_term() {
        let grid = Grid::new(80.0, 256).unwrap();
        let nl = Nonlinearity::polynomial(&[(1, 1.0)]);
        assert!(matches!(
            construct_general(1.0, &nl, &grid, &GeneralOptions::default()),
            Err(Error::Precondition(_))
        ));
    }
}
