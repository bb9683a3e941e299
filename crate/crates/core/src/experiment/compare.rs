//! PDE evolution, modulation tracking and the effective ODE from the same start.

use std::path::Path;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::output::{cell, line_plot, write_csv, Series};
use super::{all_pass, Check};
use crate::effective::{integrate, CoefficientSource, EffectivePath, EffectiveState};
use crate::error::{Error, Result};
use crate::functionals::{drift, hamiltonian, lyapunov, mass, momentum, rate_identities, RateReport};
use crate::grid::GridFunction;
use crate::modulation::{ModulationState, Modulator};
use crate::noise::{band_limited, NoiseSpec};
use crate::pde::{dump_snapshots, evolve, Trajectory};
use crate::soliton::SolitonFamily;

pub const MODULATION_COLUMNS: [&str; 9] = ["t", "a", "c", "xi_h1", "xig_h1", "xib_h1", "res1", "res2", "iters"];
pub const EFFECTIVE_COLUMNS: [&str; 3] = ["t", "a_eff", "c_eff"];
pub const FUNCTIONAL_COLUMNS: [&str; 8] = ["t", "H_b", "P", "mass", "M_c", "res_H", "res_P", "res_W"];

/// Summary of one comparison run.
#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub alpha: f64,
    /// `T_1` from the configured window constant
    pub validity_window: f64,
    /// requested final time
    pub t_end: f64,
    /// last time the solution was decomposed inside the tube
    pub t0: f64,
    /// why tracking stopped early
    pub exit: Option<String>,
    pub max_a_error: f64,
    pub max_c_error: f64,
    /// `max(max_a_error, max_c_error)`
    pub param_error: f64,
    pub param_bound: f64,
    pub sup_xi_h1: f64,
    pub sup_xi_g_h1: f64,
    pub sup_xi_b_h1: f64,
    pub xi_bound: f64,
    /// `sup ||xi_g|| / sup ||xi||`
    pub xi_g_ratio: f64,
    pub xi_g_bound: f64,
    /// largest Newton count after the first snapshot
    pub max_newton_iters: usize,
    pub max_orthogonality: f64,
    pub mass_drift: f64,
    pub hamiltonian_drift: f64,
    pub momentum_drift: f64,
    pub lyapunov_drift: f64,
    pub rates: Option<RateReport>,
    /// `c(T_0) - c(0)` from the PDE
    pub c_shift: f64,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// Everything a comparison produces.
pub struct ComparisonRun {
    pub report: ComparisonReport,
    pub trajectory: Trajectory,
    pub modulation: Vec<ModulationState>,
    pub effective: EffectivePath,
}

/// Soliton plus the configured seeded perturbation.
pub fn initial_data(cfg: &ExperimentConfig) -> Result<GridFunction> {
    let grid = cfg.grid.build()?;
    let fam = SolitonFamily::new(grid, cfg.nonlinearity()?)?;
    let init = &cfg.initial;
    let q = fam.profile(init.c0, init.a0)?;
    if init.perturbation == 0.0 {
        return Ok(q);
    }
    let spec = NoiseSpec {
        k_cut: init.band,
        h1_norm: init.perturbation,
        window: Some((init.a0, init.noise_width)),
    };
    Ok(&q + &band_limited(&grid, init.seed, &spec)?)
}

/// Run the comparison; write CSVs and `summary.json` under `out` when given.
pub fn run_compare(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<ComparisonRun> {
    cfg.validate()?;
    let nl = cfg.nonlinearity()?;
    let grid = cfg.grid.build()?;
    let b = cfg.bottom;
    let alpha = cfg.alpha()?;
    let t_end = cfg.final_time()?;
    let solver = cfg.solver_config(t_end)?;
    let u0 = initial_data(cfg)?;
    let traj = evolve(&u0, &solver, &b, &nl)?;

    let mut modulator = Modulator::new(grid, nl.clone(), alpha)?;
    modulator.interval = cfg.interval()?;
    if let Some(r) = cfg.modulation.tube_radius {
        modulator.tube_radius = r;
    }
    modulator.split = cfg.modulation.split;
    let (states, exit) = modulator.track_until_exit(&traj.times, &traj.states);
    if states.is_empty() {
        return Err(exit.unwrap_or_else(|| Error::Precondition("empty trajectory".into())));
    }
    let t0 = states.last().map(|s| s.t).unwrap_or(0.0);
    let tracked = Trajectory {
        times: traj.times[..states.len()].to_vec(),
        states: traj.states[..states.len()].to_vec(),
    };

    let spacing = solver.dt * solver.output_stride as f64;
    let sub = (spacing / cfg.effective.dt).ceil().max(1.0) as usize;
    let coeffs = CoefficientSource::new(&nl, &grid)?;
    let start = EffectiveState {
        t: 0.0,
        a: states[0].a,
        c: states[0].c,
    };
    let path = integrate(
        start,
        &b,
        &coeffs,
        cfg.effective.form,
        &cfg.interval()?,
        t0,
        spacing / sub as f64,
        sub,
    )?;

    let mut max_a: f64 = 0.0;
    let mut max_c: f64 = 0.0;
    for (s, e) in states.iter().zip(&path.states) {
        debug_assert!((s.t - e.t).abs() < 1e-9 * spacing.max(1.0));
        max_a = max_a.max((s.a - e.a).abs());
        max_c = max_c.max((s.c - e.c).abs());
    }

    let sup = |f: fn(&ModulationState) -> f64| states.iter().map(f).fold(0.0, f64::max);
    let sup_xi = sup(|s| s.xi_h1);
    let sup_g = sup(|s| s.xi_g_h1);
    let sup_b = sup(|s| s.xi_b_h1);
    let max_iters = states.iter().skip(1).map(|s| s.newton_iters).max().unwrap_or(0);
    let max_orth = sup(|s| s.residuals[0].max(s.residuals[1]));

    let lyap: Vec<f64> = tracked
        .states
        .iter()
        .zip(&states)
        .map(|(u, s)| lyapunov(u, s, &b, s.t, &nl).map(|l| l.value))
        .collect::<Result<_>>()?;
    let rates = if tracked.len() >= 3 {
        Some(rate_identities(&tracked, &b, &nl)?)
    } else {
        None
    };

    let a = alpha.value();
    let tol = &cfg.tolerances;
    let param_bound = tol.param_abs.unwrap_or(tol.param_k * a * a * t0);
    let window = cfg.validity_window()?;
    let param_error = max_a.max(max_c);
    let xi_g_ratio = if sup_xi > 0.0 { sup_g / sup_xi } else { 0.0 };
    let mut checks = vec![
        Check::at_most("window within validity window", t0, window * (1.0 + 1e-12)),
        Check::at_least("stayed in tube to t_end", t0, t_end - 1e-9 * t_end.max(1.0))
            .with_detail(exit.as_ref().map(|e| e.to_string()).unwrap_or_default()),
        Check::at_most("parameter error", param_error, param_bound),
        Check::at_most("sup xi H1", sup_xi, tol.xi_k * a),
        Check::at_most("orthogonality residual", max_orth, tol.orthogonality),
        Check::at_most(
            "warm-started Newton iterations",
            max_iters as f64,
            tol.newton_iters as f64,
        ),
    ];
    // the split bound concerns the forced fluctuation; added noise sits in xi_g
    if cfg.modulation.split && cfg.initial.perturbation == 0.0 {
        checks.push(Check::at_most("xi_g / xi ratio", xi_g_ratio, tol.xi_g_k * a.sqrt()));
    }
    let pass = all_pass(&checks);

    let report = ComparisonReport {
        alpha: a,
        validity_window: window,
        t_end,
        t0,
        exit: exit.map(|e| e.to_string()),
        max_a_error: max_a,
        max_c_error: max_c,
        param_error,
        param_bound,
        sup_xi_h1: sup_xi,
        sup_xi_g_h1: sup_g,
        sup_xi_b_h1: sup_b,
        xi_bound: tol.xi_k * a,
        xi_g_ratio,
        xi_g_bound: tol.xi_g_k * a.sqrt(),
        max_newton_iters: max_iters,
        max_orthogonality: max_orth,
        mass_drift: drift(&tracked, |_, u| mass(u)),
        hamiltonian_drift: drift(&tracked, |t, u| hamiltonian(u, &b, t, &nl)),
        momentum_drift: drift(&tracked, |_, u| momentum(u)),
        lyapunov_drift: lyap.iter().map(|v| (v - lyap[0]).abs()).fold(0.0, f64::max),
        rates,
        c_shift: states.last().map(|s| s.c - states[0].c).unwrap_or(0.0),
        checks,
        pass,
    };

    let run = ComparisonRun {
        report,
        trajectory: tracked,
        modulation: states,
        effective: path,
    };
    if let Some(dir) = out {
        write_outputs(cfg, &run, &lyap, dir)?;
    }
    Ok(run)
}

fn write_outputs(cfg: &ExperimentConfig, run: &ComparisonRun, lyap: &[f64], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let f = |v: f64| cell(Some(v));
    let rows: Vec<Vec<String>> = run
        .modulation
        .iter()
        .map(|s| {
            vec![
                f(s.t),
                f(s.a),
                f(s.c),
                f(s.xi_h1),
                f(s.xi_g_h1),
                f(s.xi_b_h1),
                f(s.residuals[0]),
                f(s.residuals[1]),
                s.newton_iters.to_string(),
            ]
        })
        .collect();
    write_csv(&dir.join("modulation.csv"), &MODULATION_COLUMNS, &rows)?;

    let rows: Vec<Vec<String>> = run
        .effective
        .states
        .iter()
        .map(|e| vec![f(e.t), f(e.a), f(e.c)])
        .collect();
    write_csv(&dir.join("effective.csv"), &EFFECTIVE_COLUMNS, &rows)?;

    let nl = cfg.nonlinearity()?;
    let b = cfg.bottom;
    let defects = run.report.rates.as_ref().map(|r| r.defects.as_slice()).unwrap_or(&[]);
    let rows: Vec<Vec<String>> = run
        .trajectory
        .times
        .iter()
        .zip(&run.trajectory.states)
        .zip(lyap)
        .map(|((&t, u), &m)| {
            let d = defects.iter().find(|(td, _)| *td == t).map(|(_, d)| *d);
            vec![
                f(t),
                f(hamiltonian(u, &b, t, &nl)),
                f(momentum(u)),
                f(mass(u)),
                f(m),
                cell(d.map(|d| d[0])),
                cell(d.map(|d| d[1])),
                cell(d.map(|d| d[2])),
            ]
        })
        .collect();
    write_csv(&dir.join("functionals.csv"), &FUNCTIONAL_COLUMNS, &rows)?;

    let json = serde_json::to_string_pretty(&run.report).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(dir.join("summary.json"), json + "\n")?;

    if cfg.outputs.svg {
        let pde: Vec<(f64, f64)> = run.modulation.iter().map(|s| (s.t, s.c)).collect();
        let ode: Vec<(f64, f64)> = run.effective.states.iter().map(|e| (e.t, e.c)).collect();
        let svg = line_plot(
            "speed",
            "t",
            &[
                Series {
                    label: "c (PDE)",
                    points: pde,
                },
                Series {
                    label: "c_eff",
                    points: ode,
                },
            ],
        );
        std::fs::write(dir.join("speed.svg"), svg)?;
        let xi: Vec<(f64, f64)> = run.modulation.iter().map(|s| (s.t, s.xi_h1)).collect();
        let xg: Vec<(f64, f64)> = run.modulation.iter().map(|s| (s.t, s.xi_g_h1)).collect();
        let svg = line_plot(
            "fluctuation",
            "t",
            &[
                Series {
                    label: "|xi|_H1",
                    points: xi,
                },
                Series {
                    label: "|xi_g|_H1",
                    points: xg,
                },
            ],
        );
        std::fs::write(dir.join("fluctuation.svg"), svg)?;
    }
    if cfg.outputs.snapshots {
        let t = cfg.final_time()?;
        dump_snapshots(&dir.join("snapshots.bin"), &run.trajectory, &cfg.solver_config(t)?)?;
    }
    Ok(())
}
