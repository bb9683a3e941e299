//! Long flat-bottom runs: orbital stability, convergence in time and space.

use bkdv::modulation::Modulator;
use bkdv::noise::{band_limited, NoiseSpec};
use bkdv::pde::{evolve, Bottom, SolverConfig};
use bkdv::regsym::RegularizationParam;
use bkdv::soliton::{Nonlinearity, SolitonFamily};
use bkdv::{Grid, GridFunction};

const ORBIT_RADIUS: f64 = 0.05;

fn perturbed(grid: Grid, amplitude: f64) -> GridFunction {
    let fam = SolitonFamily::new(grid, Nonlinearity::power(2).unwrap()).unwrap();
    let spec = NoiseSpec {
        k_cut: 2.0,
        h1_norm: amplitude,
        window: Some((-30.0, 8.0)),
    };
    &fam.profile(1.0, -30.0).unwrap() + &band_limited(&grid, 11, &spec).unwrap()
}

#[test]
fn perturbed_soliton_stays_near_the_family() {
    let grid = Grid::new(160.0, 1024).unwrap();
    let nl = Nonlinearity::power(2).unwrap();
    let u0 = perturbed(grid, 0.01);
    let cfg = SolverConfig {
        dt: 2e-3,
        t_end: 50.0,
        output_stride: 500,
        dealias: 2.0 / 3.0,
    };
    let tr = evolve(&u0, &cfg, &Bottom::Zero, &nl).unwrap();
    let mut m = Modulator::new(grid, nl, RegularizationParam::new(0.1).unwrap()).unwrap();
    m.tube_radius = 1.0;
    let states = m.track(&tr.times, &tr.states).unwrap();
    let worst = states.iter().map(|s| s.xi_h1).fold(0.0, f64::max);
    assert!(worst <= ORBIT_RADIUS, "distance to the family reached {worst}");
    let last = states.last().unwrap();
    assert!((last.c - 1.0).abs() < 0.05, "speed drifted to {}", last.c);
}

#[test]
fn halving_dt_gains_third_order() {
    let grid = Grid::new(80.0, 512).unwrap();
    let nl = Nonlinearity::power(2).unwrap();
    let fam = SolitonFamily::new(grid, nl.clone()).unwrap();
    let u0 = &fam.profile(1.2, 0.0).unwrap() + &fam.profile(0.6, -15.0).unwrap();
    let run = |dt: f64| {
        let cfg = SolverConfig {
            dt,
            t_end: 5.0,
            output_stride: (5.0 / dt).round() as usize,
            dealias: 2.0 / 3.0,
        };
        evolve(
            &u0,
            &cfg,
            &Bottom::StaticBump {
                eps_a: 0.05,
                eps_x: 0.2,
            },
            &nl,
        )
        .unwrap()
        .last()
        .unwrap()
        .1
        .clone()
    };
    let (coarse, mid, fine) = (run(0.02), run(0.01), run(0.005));
    let e1 = (&coarse - &fine).sobolev_norm_h1();
    let e2 = (&mid - &fine).sobolev_norm_h1();
    assert!(e1 / e2 >= 8.0, "ratio {}", e1 / e2);
}

/// Terminal states on `n` and `2n` points of the same box, compared on the coarse grid.
fn doubling_gap(length: f64, n: usize) -> f64 {
    let nl = Nonlinearity::power(2).unwrap();
    let cfg = SolverConfig {
        dt: 2e-3,
        t_end: 10.0,
        output_stride: 5000,
        dealias: 2.0 / 3.0,
    };
    let b = Bottom::StaticBump {
        eps_a: 0.02,
        eps_x: 0.1,
    };
    let end = |n: usize| {
        let g = Grid::new(length, n).unwrap();
        let u0 = SolitonFamily::new(g, nl.clone())
            .unwrap()
            .profile(1.0, -0.125 * length)
            .unwrap();
        evolve(&u0, &cfg, &b, &nl).unwrap().last().unwrap().1.clone()
    };
    let (lo, hi) = (end(n), end(2 * n));
    let hi_on_lo = GridFunction::new(*lo.grid(), hi.values().iter().step_by(2).copied().collect()).unwrap();
    (&lo - &hi_on_lo).sobolev_norm_h1()
}

#[test]
fn resolution_independence() {
    for (length, n) in [(80.0, 512), (160.0, 1024)] {
        let d = doubling_gap(length, n);
        assert!(d <= 1e-8, "L={length}: N={n} vs N={} differ by {d}", 2 * n);
    }
}
