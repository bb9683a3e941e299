//! Independent comparison runs over one configuration axis.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::compare::run_compare;
use super::config::{ExperimentConfig, SweepAxis};
use super::output::{cell, write_csv};
use crate::error::{Error, Result};
use crate::parallel::map_par;
use crate::pde::Bottom;

pub const SWEEP_COLUMNS: [&str; 12] = [
    "value",
    "alpha",
    "window",
    "t0",
    "param_error",
    "sup_xi_h1",
    "sup_xig_h1",
    "sup_xib_h1",
    "c_shift",
    "window_ratio",
    "pass",
    "error",
];

/// One row of the aggregated sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub alpha: Option<f64>,
    pub window: Option<f64>,
    pub t0: Option<f64>,
    pub param_error: Option<f64>,
    pub sup_xi_h1: Option<f64>,
    pub sup_xi_g_h1: Option<f64>,
    pub sup_xi_b_h1: Option<f64>,
    pub c_shift: Option<f64>,
    /// `t0 (eps_t + eps_x + alpha) / c3`
    pub window_ratio: Option<f64>,
    pub pass: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
    /// least-squares slope of `log sup ||xi_g||` against `log alpha`
    pub xi_g_exponent: Option<f64>,
    /// least-squares slope of `log sup ||xi||` against `log alpha`
    pub xi_exponent: Option<f64>,
    pub pass: bool,
}

/// Copy of `base` with the axis set to `value`.
pub fn apply_axis(base: &ExperimentConfig, axis: SweepAxis, value: f64) -> Result<ExperimentConfig> {
    let mut cfg = base.clone();
    let bad = |what: &str| Err(Error::Config(format!("sweep axis {axis:?} needs {what}")));
    match axis {
        SweepAxis::EpsA => match &mut cfg.bottom {
            Bottom::StaticBump { eps_a, .. } | Bottom::MovingRamp { eps_a, .. } => *eps_a = value,
            _ => return bad("a bump or ramp bottom"),
        },
        SweepAxis::EpsX => match &mut cfg.bottom {
            Bottom::StaticBump { eps_x, .. } | Bottom::MovingRamp { eps_x, .. } => *eps_x = value,
            _ => return bad("a bump or ramp bottom"),
        },
        SweepAxis::EpsT => match &mut cfg.bottom {
            Bottom::MovingRamp { eps_t, .. } => *eps_t = value,
            _ => return bad("a moving-ramp bottom"),
        },
        SweepAxis::Alpha => {
            cfg.modulation.alpha = Some(value);
            cfg.modulation.s = None;
        }
        SweepAxis::S => {
            cfg.modulation.s = Some(value);
            cfg.modulation.alpha = None;
        }
        SweepAxis::Points => {
            if value.fract() != 0.0 || value < 8.0 {
                return bad("integer point counts");
            }
            cfg.grid.points = value as usize;
        }
    }
    cfg.sweep = None;
    cfg.validate()?;
    Ok(cfg)
}

fn slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

/// Run every value concurrently; failures are recorded and the sweep goes on.
/// Each run writes into `out/<index>/` when `out` is given.
pub fn run_sweep(base: &ExperimentConfig, axis: SweepAxis, values: &[f64], out: Option<&Path>) -> Result<SweepReport> {
    let jobs: Vec<(usize, f64)> = values.iter().copied().enumerate().collect();
    let rows = map_par(&jobs, |&(i, value)| {
        let dir: Option<PathBuf> = out.map(|o| o.join(format!("run{i:03}")));
        let outcome = apply_axis(base, axis, value).and_then(|cfg| {
            let run = run_compare(&cfg, dir.as_deref())?;
            let sc = crate::pde::BottomProfile::scales(&cfg.bottom);
            Ok((run.report, sc, cfg.window.c3))
        });
        match outcome {
            Ok((r, sc, c3)) => SweepRow {
                value,
                alpha: Some(r.alpha),
                window: Some(r.validity_window),
                t0: Some(r.t0),
                param_error: Some(r.param_error),
                sup_xi_h1: Some(r.sup_xi_h1),
                sup_xi_g_h1: Some(r.sup_xi_g_h1),
                sup_xi_b_h1: Some(r.sup_xi_b_h1),
                c_shift: Some(r.c_shift),
                window_ratio: Some(r.t0 * (sc.eps_t + sc.eps_x + r.alpha) / c3),
                pass: r.pass,
                error: None,
            },
            Err(e) => SweepRow {
                value,
                alpha: None,
                window: None,
                t0: None,
                param_error: None,
                sup_xi_h1: None,
                sup_xi_g_h1: None,
                sup_xi_b_h1: None,
                c_shift: None,
                window_ratio: None,
                pass: false,
                error: Some(e.to_string()),
            },
        }
    });
    let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.error.is_none()).collect();
    let alphas: Vec<f64> = ok.iter().filter_map(|r| r.alpha).collect();
    let xg: Vec<f64> = ok.iter().filter_map(|r| r.sup_xi_g_h1).collect();
    let xs: Vec<f64> = ok.iter().filter_map(|r| r.sup_xi_h1).collect();
    let report = SweepReport {
        axis,
        xi_g_exponent: slope(&alphas, &xg),
        xi_exponent: slope(&alphas, &xs),
        pass: rows.iter().all(|r| r.pass),
        rows,
    };
    if let Some(o) = out {
        std::fs::create_dir_all(o)?;
        let csv_rows: Vec<Vec<String>> = report
            .rows
            .iter()
            .map(|r| {
                vec![
                    cell(Some(r.value)),
                    cell(r.alpha),
                    cell(r.window),
                    cell(r.t0),
                    cell(r.param_error),
                    cell(r.sup_xi_h1),
                    cell(r.sup_xi_g_h1),
                    cell(r.sup_xi_b_h1),
                    cell(r.c_shift),
                    cell(r.window_ratio),
                    r.pass.to_string(),
                    r.error.clone().unwrap_or_default(),
                ]
            })
            .collect();
        write_csv(&o.join("sweep.csv"), &SWEEP_COLUMNS, &csv_rows)?;
        let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(o.join("sweep.json"), json + "\n")?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_edits() {
        let base = ExperimentConfig::static_bump(0.02);
        let c = apply_axis(&base, SweepAxis::EpsA, 0.01).unwrap();
        assert_eq!(
            c.bottom,
            Bottom::StaticBump {
                eps_a: 0.01,
                eps_x: 0.1
            }
        );
        let c = apply_axis(&base, SweepAxis::Alpha, 0.3).unwrap();
        assert_eq!(c.alpha().unwrap().value(), 0.3);
        assert!(apply_axis(&base, SweepAxis::EpsT, 0.1).is_err());
        assert!(apply_axis(&base, SweepAxis::Points, 500.5).is_err());
    }

    #[test]
    fn slope_fit() {
        let x = [0.1, 0.2, 0.4];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.5)).collect();
        assert!((slope(&x, &y).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn failures_are_recorded() {
        let mut base = ExperimentConfig::static_bump(0.02);
        base.grid = crate::experiment::config::GridConfig {
            length: 80.0,
            points: 256,
        };
        base.initial.a0 = -20.0;
        base.solver.t_end = Some(1.0);
        let r = run_sweep(&base, SweepAxis::Points, &[256.0, 100.0], None).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert!(r.rows[0].error.is_none(), "{:?}", r.rows[0].error);
        assert!(r.rows[1].error.is_some());
        assert!(!r.pass);
    }
}
