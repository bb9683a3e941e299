//! Randomized invariants of the building blocks.

use proptest::prelude::*;

use bkdv::functionals::{mass, momentum};
use bkdv::modulation::Modulator;
use bkdv::noise::{band_limited, NoiseSpec};
use bkdv::pde::{evolve, Bottom, SolverConfig};
use bkdv::regsym::{apply_reg_inverse, RegularizationParam};
use bkdv::soliton::{Nonlinearity, SolitonFamily};
use bkdv::Grid;

fn grid() -> Grid {
    Grid::new(80.0, 512).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reg_inverse_undoes_shifted_derivative(seed in 0u64..1000, alpha in 0.02f64..1.0) {
        let g = grid();
        let spec = NoiseSpec { k_cut: 3.0, h1_norm: 1.0, window: Some((0.0, 6.0)) };
        let phi = band_limited(&g, seed, &spec).unwrap();
        let a = RegularizationParam::new(alpha).unwrap();
        let w = apply_reg_inverse(&phi, a);
        let back = &w.derivative(1).unwrap() + &w.scale(alpha);
        prop_assert!((&back - &phi).norm_sup() < 1e-10 * phi.norm_sup().max(1.0));
    }

    #[test]
    fn kdv_scaling_law(c in 0.5f64..2.0, a in -10.0f64..10.0) {
        let fam = SolitonFamily::new(Grid::new(120.0, 1024).unwrap(), Nonlinearity::power(2).unwrap()).unwrap();
        let q = fam.profile(c, a).unwrap();
        let expected = q.grid().sample(|x| {
            let y = q.grid().wrap(x - a);
            1.5 * c / (0.5 * c.sqrt() * y).cosh().powi(2)
        });
        prop_assert!((&q - &expected).norm_sup() < 1e-12);
    }

    #[test]
    fn delta_is_half_the_squared_norm(p in 2u32..5, c in 0.5f64..2.0) {
        let fam = SolitonFamily::new(Grid::new(120.0, 2048).unwrap(), Nonlinearity::power(p).unwrap()).unwrap();
        let q = fam.profile(c, 0.0).unwrap();
        let d = fam.delta(c).unwrap();
        prop_assert!((d.delta - momentum(&q)).abs() < 1e-9 * d.delta);
        prop_assert!((d.delta_prime - d.delta_prime_fd).abs() < 1e-5 * d.delta_prime.abs().max(1.0));
    }

    #[test]
    fn noise_is_reproducible_and_scaled(seed in any::<u64>(), norm in 1e-6f64..1.0) {
        let g = grid();
        let spec = NoiseSpec { k_cut: 2.0, h1_norm: norm, window: None };
        let a = band_limited(&g, seed, &spec).unwrap();
        let b = band_limited(&g, seed, &spec).unwrap();
        prop_assert_eq!(a.values(), b.values());
        prop_assert!((a.sobolev_norm_h1() - norm).abs() < 1e-12 * norm);
    }

    #[test]
    fn decomposition_recovers_parameters(c in 0.7f64..1.6, a in -15.0f64..15.0) {
        let g = Grid::new(160.0, 1024).unwrap();
        let nl = Nonlinearity::power(2).unwrap();
        let fam = SolitonFamily::new(g, nl.clone()).unwrap();
        let mut m = Modulator::new(g, nl, RegularizationParam::new(0.1).unwrap()).unwrap();
        let s = m.decompose(&fam.profile(c, a).unwrap(), None).unwrap();
        prop_assert!((s.c - c).abs() < 1e-10);
        prop_assert!((s.a - a).abs() < 1e-10);
        prop_assert!(s.xi_h1 < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn mass_is_conserved_for_any_bump(eps_a in 0.0f64..0.05, eps_x in 0.05f64..0.3, seed in 0u64..100) {
        let g = grid();
        let nl = Nonlinearity::power(2).unwrap();
        let spec = NoiseSpec { k_cut: 1.0, h1_norm: 0.1, window: Some((0.0, 10.0)) };
        let u0 = &SolitonFamily::new(g, nl.clone()).unwrap().profile(1.0, -10.0).unwrap()
            + &band_limited(&g, seed, &spec).unwrap();
        let cfg = SolverConfig { dt: 2e-3, t_end: 2.0, output_stride: 250, dealias: 2.0 / 3.0 };
        let tr = evolve(&u0, &cfg, &Bottom::StaticBump { eps_a, eps_x }, &nl).unwrap();
        let m0 = mass(&u0);
        for u in &tr.states {
            prop_assert!((mass(u) - m0).abs() < 1e-11);
        }
    }
}
