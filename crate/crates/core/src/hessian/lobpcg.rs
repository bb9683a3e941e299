//! Single-vector preconditioned LOBPCG for the lowest eigenpair of a
//! symmetric operator on grid functions.

use nalgebra::{Matrix3, SymmetricEigen};

use crate::error::{Error, Result};
use crate::grid::GridFunction;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LobpcgOptions {
    /// Stop when `||A x - lambda x|| <= tol` for unit `x`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LobpcgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 3000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LobpcgResult {
    pub value: f64,
    pub vector: GridFunction,
    pub residual: f64,
    pub iterations: usize,
}

fn normalize(v: &GridFunction) -> Option<GridFunction> {
    let n = v.norm_l2();
    (n > 0.0 && n.is_finite()).then(|| v.scale(1.0 / n))
}

/// Lowest eigenpair of `op` restricted to the range of the projector `proj`.
///
/// `op` must be symmetric in the `L^2` pairing on that range and `precond`
/// should be positive definite. Both are composed with `proj` internally.
pub fn lobpcg_lowest(
    op: impl Fn(&GridFunction) -> GridFunction,
    precond: impl Fn(&GridFunction) -> GridFunction,
    proj: impl Fn(&GridFunction) -> GridFunction,
    start: &GridFunction,
    opts: &LobpcgOptions,
) -> Result<LobpcgResult> {
    let mut x = normalize(&proj(start))
        .ok_or_else(|| Error::Eigensolver("starting vector vanishes after projection".into()))?;
    let mut ax = proj(&op(&x));
    let mut lambda = ax.dot(&x);
    let mut p: Option<GridFunction> = None;
    let mut residual = f64::INFINITY;
    for it in 0..opts.max_iter {
        let r = ax.axpy(-lambda, &x);
        residual = r.norm_l2();
        if residual <= opts.tol {
            return Ok(LobpcgResult {
                value: lambda,
                vector: x,
                residual,
                iterations: it,
            });
        }
        let w = proj(&precond(&r));
        // Orthonormal basis of span{x, w, p} by twice-repeated Gram-Schmidt.
        let mut basis = vec![x.clone()];
        let mut images = vec![ax.clone()];
        let candidates = std::iter::once(w).chain(p.take());
        for v in candidates {
            let Some(mut v) = normalize(&v) else { continue };
            for _ in 0..2 {
                for b in &basis {
                    v = v.axpy(-v.dot(b), b);
                }
            }
            if v.norm_l2() > 1e-8 {
                if let Some(u) = normalize(&v) {
                    images.push(proj(&op(&u)));
                    basis.push(u);
                }
            }
        }
        let m = basis.len();
        let mut gram = Matrix3::<f64>::identity();
        for i in 0..m {
            for j in 0..m {
                gram[(i, j)] = 0.5 * (images[i].dot(&basis[j]) + images[j].dot(&basis[i]));
            }
        }
        let sub = gram.view((0, 0), (m, m)).into_owned();
        let eig = SymmetricEigen::new(sub);
        let imin = (0..m)
            .min_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]))
            .expect("nonempty");
        let y = eig.eigenvectors.column(imin);
        let combine = |vs: &[GridFunction], from: usize| {
            let mut acc = vs[0].grid().zeros();
            for i in from..m {
                acc = acc.axpy(y[i], &vs[i]);
            }
            acc
        };
        let new_p = combine(&basis, 1);
        let xn = combine(&basis, 0);
        let norm = xn.norm_l2();
        x = xn.scale(1.0 / norm);
        ax = combine(&images, 0).scale(1.0 / norm);
        lambda = ax.dot(&x);
        p = Some(new_p);
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual,
        history: vec![lambda],
    })
}
