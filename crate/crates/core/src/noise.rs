//! Seeded smooth perturbations.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};

/// Shape of a random perturbation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    /// largest wavenumber carried
    pub k_cut: f64,
    /// target `||.||_{H^1}`
    pub h1_norm: f64,
    /// optional Gaussian window `(centre, width)`
    pub window: Option<(f64, f64)>,
}

/// Random Fourier modes `0 < k <= k_cut` with a `1 - (k/k_cut)^2` taper,
/// windowed and rescaled to the requested `H^1` norm. Identical seeds give
/// identical fields.
pub fn band_limited(grid: &Grid, seed: u64, spec: &NoiseSpec) -> Result<GridFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample(grid, &mut rng, spec)
}

/// `count` independent draws from one stream.
pub fn band_limited_batch(grid: &Grid, seed: u64, spec: &NoiseSpec, count: usize) -> Result<Vec<GridFunction>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| sample(grid, &mut rng, spec)).collect()
}

fn sample(grid: &Grid, rng: &mut ChaCha8Rng, spec: &NoiseSpec) -> Result<GridFunction> {
    if !(spec.k_cut > 0.0) || !(spec.h1_norm >= 0.0) {
        return Err(Error::Config(format!(
            "noise needs k_cut > 0 and h1_norm >= 0, got {} and {}",
            spec.k_cut, spec.h1_norm
        )));
    }
    let n = grid.n_points();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    let mut any = false;
    for (j, slot) in coeffs.iter_mut().enumerate().take(n / 2).skip(1) {
        let k = grid.wavenumber(j);
        let amp: f64 = rng.random_range(-1.0..1.0);
        let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        if k <= spec.k_cut {
            let taper = 1.0 - (k / spec.k_cut).powi(2);
            *slot = Complex64::from_polar(amp * taper, phase);
            any = true;
        }
    }
    if !any {
        return Err(Error::Config(format!(
            "k_cut = {} keeps no mode on a box of length {}",
            spec.k_cut,
            grid.length()
        )));
    }
    let mut field = GridFunction::from_spectrum(*grid, coeffs);
    if let Some((centre, width)) = spec.window {
        field = field.map_with_x(|x, v| {
            let y = grid.wrap(x - centre) / width;
            v * (-0.5 * y * y).exp()
        });
    }
    let norm = field.sobolev_norm_h1();
    if norm == 0.0 {
        return Ok(field);
    }
    Ok(field.scale(spec.h1_norm / norm))
}
