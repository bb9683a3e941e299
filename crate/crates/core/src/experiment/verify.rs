//! Property suites over a speed grid and an alpha sweep.

use serde::Serialize;

use super::config::ExperimentConfig;
use super::{all_pass, Check};
use crate::error::{Error, Result};
use crate::functionals::remainders;
use crate::grid::{Grid, GridFunction};
use crate::hessian::{coercivity, spectrum, test_function_bound, CoercivityOptions};
use crate::modulation::{omega_matrix, Modulator};
use crate::noise::{band_limited, band_limited_batch, NoiseSpec};
use crate::pde::{evolve, Bottom, SolverConfig};
use crate::regsym::{check_reg_inverse, reg_inverse_box_length, RegularizationParam};
use crate::soliton::{Nonlinearity, SolitonFamily, SolitonParams};

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl VerifyReport {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// Run every suite. A failed stability gate stops the run there, since
/// nothing downstream is defined without `delta' > 0`.
pub fn run_verify(cfg: &ExperimentConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let mut checks = stability_gate(cfg)?;
    if all_pass(&checks) {
        checks.extend(regularized_inverse_suite(cfg)?);
        checks.extend(omega_suite(cfg)?);
        checks.extend(spectrum_suite(cfg)?);
        checks.extend(coercivity_suite(cfg)?);
        checks.extend(decomposition_suite(cfg)?);
        checks.extend(remainder_slope_suite(cfg)?);
    }
    let pass = all_pass(&checks);
    Ok(VerifyReport { checks, pass })
}

fn speeds(cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    Ok(cfg.interval()?.grid(cfg.verify.speeds))
}

/// `delta'(c) > 0` on the speed grid.
pub fn stability_gate(cfg: &ExperimentConfig) -> Result<Vec<Check>> {
    let fam = SolitonFamily::new(cfg.verify.spectrum_grid.build()?, cfg.nonlinearity()?)?;
    let mut worst = f64::INFINITY;
    for c in speeds(cfg)? {
        match fam.delta(c) {
            Ok(d) => worst = worst.min(d.delta_prime),
            Err(e @ Error::StabilityViolated { .. }) => {
                return Ok(vec![Check::failed("stability gate delta'(c) > 0", e.to_string())]);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(vec![Check {
        name: "stability gate delta'(c) > 0".into(),
        pass: worst > 0.0,
        value: worst,
        bound: 0.0,
        detail: String::new(),
    }])
}

fn clause_grid(alpha: f64) -> Result<Grid> {
    let length = reg_inverse_box_length(alpha);
    let n = ((length / 0.2).ceil() as usize).next_power_of_two();
    Grid::new(length, n)
}

/// All clauses for Gaussian and soliton-based fields over the clause alpha
/// sweep, plus the spread of the clause (6) remainder across the sweep.
pub fn regularized_inverse_suite(cfg: &ExperimentConfig) -> Result<Vec<Check>> {
    let nl = cfg.nonlinearity()?;
    let names = ["gaussian", "gaussian/odd", "Q/Q", "zeta_n/Q"];
    let mut remainders: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    let mut checks = Vec::new();
    for &a in &cfg.verify.clause_alphas {
        let grid = clause_grid(a)?;
        let alpha = RegularizationParam::new(a)?;
        let fam = SolitonFamily::new(grid, nl.clone())?;
        let f = fam.fields(1.0, 0.0)?;
        let g = grid.sample(|x| (-x * x).exp());
        let odd = grid.sample(|x| x * (-x * x).exp());
        let pairs = [(&g, &g), (&g, &odd), (&f.q, &f.q), (&f.zeta_n, &f.q)];
        for (i, (phi, psi)) in pairs.into_iter().enumerate() {
            let r = check_reg_inverse(phi, psi, alpha)?;
            remainders[i].push(r.leading_remainder.abs().max(r.leading_remainder_half.abs()) / r.remainder_scale);
            let failed: Vec<String> = r
                .clauses
                .iter()
                .enumerate()
                .filter(|(_, ok)| !**ok)
                .map(|(k, _)| (k + 1).to_string())
                .collect();
            checks.push(Check {
                name: format!("regularized inverse clauses [{}, alpha={a}]", names[i]),
                pass: failed.is_empty(),
                value: failed.len() as f64,
                bound: 0.0,
                detail: if failed.is_empty() {
                    String::new()
                } else {
                    format!("failed clauses {}", failed.join(","))
                },
            });
        }
    }
    let worst = remainders.iter().flatten().fold(0.0f64, |m, r| m.max(*r));
    checks.push(Check::at_most(
        "regularized inverse clause 6 remainder |R| / (|phi|_1 + |x phi|_1)^2 across the sweep",
        worst,
        cfg.tolerances.remainder_k,
    ));
    Ok(checks)
}

/// Determinant floor and `||Omega^{-1} - leading|| <= K alpha` with one `K`.
pub fn omega_suite(cfg: &ExperimentConfig) -> Result<Vec<Check>> {
    let nl = cfg.nonlinearity()?;
    let grid = cfg.verify.coercivity_grid.build()?;
    let interval = cfg.interval()?;
    let mut worst_det = f64::INFINITY;
    let mut worst_k: f64 = 0.0;
    let mut failures = Vec::new();
    for &a in &cfg.verify.alphas {
        let alpha = RegularizationParam::new(a)?;
        for c in speeds(cfg)? {
            match omega_matrix(&SolitonParams::new(c, 0.0, alpha)?, &nl, &grid, &interval) {
                Ok(o) => {
                    worst_det = worst_det.min(o.determinant / o.determinant_floor);
                    worst_k = worst_k.max(o.inverse_defect / a);
                }
                Err(e @ Error::AlphaInadmissible { .. }) => failures.push(format!("c={c}, alpha={a}: {e}")),
                Err(e) => return Err(e),
            }
        }
    }
    let det = if failures.is_empty() {
        Check::at_least("Omega determinant floor (inf delta')^2/2", worst_det, 1.0)
            .with_detail("value is min det / floor")
    } else {
        Check::failed("Omega determinant floor (inf delta')^2/2", failures.join("; "))
    };
    Ok(vec![
        det,
        Check::at_most(
            "Omega inverse leading form defect / alpha",
            worst_k,
            cfg.tolerances.omega_k,
        ),
    ])
}

/// Ground state of `-Q'' + c Q - Q^p` for power nonlinearities:
/// `-c (p + 3)(p - 1) / 4`.
pub fn ground_state_power(p: u32, c: f64) -> f64 {
    let p = p as f64;
    -c * (p + 3.0) * (p - 1.0) / 4.0
}

/// Negative eigenvalue count, kernel, ground state and localized spectrum.
pub fn spectrum_suite(cfg: &ExperimentConfig) -> Result<Vec<Check>> {
    let nl = cfg.nonlinearity()?;
    let grid = cfg.verify.spectrum_grid.build()?;
    let alpha = RegularizationParam::new(cfg.verify.alphas[0])?;
    let tol = &cfg.tolerances;
    let mut checks = Vec::new();
    let mut neg_ok = true;
    let mut worst_res: f64 = 0.0;
    let mut worst_cos: f64 = 0.0;
    let mut below = true;
    let mut worst_ground: f64 = 0.0;
    for c in speeds(cfg)? {
        let r = spectrum(&SolitonParams::new(c, 0.0, alpha)?, &nl, &grid, 6)?;
        neg_ok &= r.negative_count == 1;
        worst_res = worst_res.max(r.zero_mode_residual);
        worst_cos = worst_cos.max(1.0 - r.zero_mode_cosine);
        below &= r.localized_below_c();
        if let Nonlinearity::Power(p) = nl {
            worst_ground = worst_ground.max((r.eigenvalues[0] - ground_state_power(p, c)).abs());
        }
    }
    checks.push(Check {
        name: "Hessian has exactly one negative eigenvalue".into(),
        pass: neg_ok,
        value: if neg_ok { 1.0 } else { 0.0 },
        bound: 1.0,
        detail: String::new(),
    });
    checks.push(Check::at_most(
        "Hessian zero-mode residual",
        worst_res,
        tol.zero_mode_residual,
    ));
    checks.push(Check::at_most(
        "Hessian zero-mode 1 - cosine",
        worst_cos,
        tol.zero_mode_cosine,
    ));
    checks.push(Check {
        name: "Hessian localized eigenvalues below c".into(),
        pass: below,
        value: if below { 1.0 } else { 0.0 },
        bound: 1.0,
        detail: String::new(),
    });
    if matches!(nl, Nonlinearity::Power(_)) {
        checks.push(Check::at_most(
            "Hessian ground state vs closed form",
            worst_ground,
            tol.ground_state,
        ));
    }
    Ok(checks)
}

/// Constrained coercivity on the speed grid and alpha sweep.
pub fn coercivity_suite(cfg: &ExperimentConfig) -> Result<Vec<Check>> {
    let nl = cfg.nonlinearity()?;
    let grid = cfg.verify.coercivity_grid.build()?;
    let tol = &cfg.tolerances;
    let opts = CoercivityOptions::default();
    let spec = NoiseSpec {
        k_cut: 2.0,
        h1_norm: 1.0,
        window: Some((0.0, 10.0)),
    };
    let samples = band_limited_batch(&grid, cfg.initial.seed, &spec, cfg.verify.samples)?;
    let (mut s_lo, mut s_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut eta: f64 = 0.0;
    let mut ratio = f64::INFINITY;
    let mut beta: f64 = 0.0;
    let mut cross: f64 = 0.0;
    let mut c3 = f64::INFINITY;
    let mut trial = f64::INFINITY;
    let mut failures = Vec::new();
    for &a in &cfg.verify.alphas {
        let alpha = RegularizationParam::new(a)?;
        for c in speeds(cfg)? {
            let params = SolitonParams::new(c, 0.0, alpha)?;
            let r = match coercivity(&params, &nl, &grid, &opts) {
                Ok(r) => r,
                Err(e) => {
                    failures.push(format!("c={c}, alpha={a}: {e}"));
                    continue;
                }
            };
            s_lo = s_lo.min(r.sigma / a);
            s_hi = s_hi.max(r.sigma / a);
            eta = eta.max(r.eta_perp_norm / a.sqrt());
            beta = beta.max((r.beta - r.sigma).abs());
            c3 = c3.min(r.c3);
            let an = r.check_anisotropic(&samples)?;
            ratio = ratio.min(an.worst_ratio);
            cross = cross.max(an.max_cross_term);
            let tb = test_function_bound(&params, &nl, &grid)?;
            trial = trial.min(tb.rayleigh / r.sigma);
        }
    }
    let [lo, hi] = tol.sigma_band;
    let mut checks = vec![
        Check {
            name: "coercivity sigma/alpha band".into(),
            pass: failures.is_empty() && s_lo >= lo && s_hi <= hi,
            value: s_lo,
            bound: lo,
            detail: if failures.is_empty() {
                format!("range [{s_lo:.4}, {s_hi:.4}] vs [{lo}, {hi}]")
            } else {
                format!("range [{s_lo:.4}, {s_hi:.4}] vs [{lo}, {hi}]; {}", failures.join("; "))
            },
        },
        Check::at_most("coercivity ||eta_perp|| / alpha^(1/2)", eta, tol.eta_k),
        Check::at_least("coercivity anisotropic bound ratio", ratio, 1.0),
        Check::at_most("coercivity |beta - sigma|", beta, tol.beta),
        Check::at_most("coercivity cross term <L eta, xi_g>", cross, tol.cross_term),
        Check::at_least("coercivity good-direction constant", c3, tol.c3_min),
    ];
    checks.push(
        Check::at_least("coercivity trial function Rayleigh / sigma", trial, 1.0 - 1e-9)
            .with_detail("the minimizer lies below every admissible trial field"),
    );
    Ok(checks)
}

/// Exact recovery, post-Newton orthogonality, warm-started iteration counts
/// along a trajectory, and a basin-of-uniqueness test.
pub fn decomposition_suite(cfg: &ExperimentConfig) -> Result<Vec<Check>> {
    let nl = cfg.nonlinearity()?;
    let grid = cfg.verify.decomposition_grid.build()?;
    let tol = &cfg.tolerances;
    let fam = SolitonFamily::new(grid, nl.clone())?;
    let interval = cfg.interval()?;
    let mut recovery: f64 = 0.0;
    let mut orth: f64 = 0.0;
    let mut iters = 0usize;
    let mut basin: f64 = 0.0;
    let noise = NoiseSpec {
        k_cut: 2.0,
        h1_norm: 1e-3,
        window: Some((0.0, 8.0)),
    };
    let bump = Bottom::StaticBump {
        eps_a: 0.02,
        eps_x: 0.1,
    };
    for &a in &cfg.verify.alphas {
        let alpha = RegularizationParam::new(a)?;
        let mut m = Modulator::new(grid, nl.clone(), alpha)?;
        m.interval = interval;
        m.split = false;
        for c in [
            interval.lo + 0.1 * (interval.hi - interval.lo),
            1.0,
            interval.hi - 0.1 * (interval.hi - interval.lo),
        ] {
            let u = fam.profile(c, 3.7)?;
            let s = m.decompose(&u, None)?;
            recovery = recovery.max((s.a - 3.7).abs()).max((s.c - c).abs());
            orth = orth.max(s.residuals[0]).max(s.residuals[1]);
        }

        let u0 = &fam.profile(1.0, -10.0)?
            + &band_limited(
                &grid,
                cfg.initial.seed,
                &NoiseSpec {
                    window: Some((-10.0, 8.0)),
                    ..noise
                },
            )?;
        let solver = SolverConfig {
            dt: 2e-3,
            t_end: 10.0,
            output_stride: 250,
            dealias: 2.0 / 3.0,
        };
        let traj = evolve(&u0, &solver, &bump, &nl)?;
        let states = m.track(&traj.times, &traj.states)?;
        for s in &states {
            orth = orth.max(s.residuals[0]).max(s.residuals[1]);
        }
        iters = iters.max(states.iter().skip(1).map(|s| s.newton_iters).max().unwrap_or(0));

        let u = &fam.profile(1.0, 0.0)? + &band_limited(&grid, cfg.initial.seed.wrapping_add(1), &noise)?;
        let reference = m.decompose(&u, Some((0.0, 1.0)))?;
        for guess in [(0.8, 1.15), (-0.8, 0.85), (0.5, 0.9), (-0.5, 1.1)] {
            let s = m.decompose(&u, Some(guess))?;
            basin = basin.max((s.a - reference.a).abs()).max((s.c - reference.c).abs());
        }
    }
    Ok(vec![
        Check::at_most("decomposition exact-soliton recovery", recovery, tol.recovery),
        Check::at_most("decomposition orthogonality residual", orth, tol.orthogonality),
        Check::at_most(
            "decomposition warm-started Newton iterations",
            iters as f64,
            tol.newton_iters as f64,
        ),
        Check::at_most("decomposition uniqueness basin spread", basin, tol.recovery),
    ])
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

/// Sizes of `N'(xi)`, `N'(xi) + f''(Q) xi^2 / 2` and `N(xi)` along `xi = s xi_hat`.
#[derive(Clone, Debug, Serialize)]
pub struct RemainderSlopes {
    pub norms: Vec<f64>,
    pub n_prime: Vec<f64>,
    pub n_prime_cubic: Vec<f64>,
    pub n: Vec<f64>,
    pub slope_n_prime: f64,
    /// `None` when the cubic part vanishes identically (`f''' = 0`)
    pub slope_n_prime_cubic: Option<f64>,
    pub slope_n: f64,
}

pub fn remainder_slopes(nl: &Nonlinearity, grid: &Grid, seed: u64, norms: &[f64]) -> Result<RemainderSlopes> {
    let q = SolitonFamily::new(*grid, nl.clone())?.profile(1.0, 0.0)?;
    let spec = NoiseSpec {
        k_cut: 2.0,
        h1_norm: 1.0,
        window: Some((0.0, 4.0)),
    };
    let hat = band_limited(grid, seed, &spec)?;
    let mut out = RemainderSlopes {
        norms: norms.to_vec(),
        n_prime: Vec::new(),
        n_prime_cubic: Vec::new(),
        n: Vec::new(),
        slope_n_prime: f64::NAN,
        slope_n_prime_cubic: None,
        slope_n: f64::NAN,
    };
    for &s in norms {
        let xi = hat.scale(s);
        let r = remainders(&xi, &q, nl);
        let half: GridFunction = xi.zip_map(&q, |x, qv| 0.5 * nl.d2f(qv) * x * x);
        out.n_prime.push(r.n_prime.norm_l2());
        out.n_prime_cubic.push((&r.n_prime + &half).norm_l2());
        out.n.push(r.n.abs());
    }
    out.slope_n_prime = loglog_slope(norms, &out.n_prime);
    out.slope_n = loglog_slope(norms, &out.n);
    let scale = out.n_prime.iter().fold(0.0f64, |m, v| m.max(*v));
    let cubic_max = out.n_prime_cubic.iter().fold(0.0f64, |m, v| m.max(*v));
    if cubic_max > 1e-12 * scale.max(1.0) {
        out.slope_n_prime_cubic = Some(loglog_slope(norms, &out.n_prime_cubic));
    }
    Ok(out)
}

pub fn remainder_slope_suite(cfg: &ExperimentConfig) -> Result<Vec<Check>> {
    let grid = cfg.verify.decomposition_grid.build()?;
    let r = remainder_slopes(&cfg.nonlinearity()?, &grid, cfg.initial.seed, &cfg.verify.slope_norms)?;
    let [quad, cubic] = cfg.tolerances.slopes;
    let cubic_check = match r.slope_n_prime_cubic {
        Some(s) => Check::at_least("remainder slope N' + f''(Q) xi^2/2", s, cubic),
        None => Check {
            name: "remainder slope N' + f''(Q) xi^2/2".into(),
            pass: true,
            value: f64::INFINITY,
            bound: cubic,
            detail: "vanishes identically since f''' = 0".into(),
        },
    };
    Ok(vec![
        Check::at_least("remainder slope N'", r.slope_n_prime, quad),
        cubic_check,
        Check::at_least("remainder slope N", r.slope_n, cubic),
    ])
}
