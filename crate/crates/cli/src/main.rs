//! `bkdv`: verification suites, PDE/ODE comparisons and sweeps from TOML configs.
//!
//! Exit status is 0 when every check passes, 1 when a check fails and 2 on
//! runtime or configuration errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use bkdv::experiment::config::SweepAxis;
use bkdv::experiment::output::{cell, write_csv};
use bkdv::experiment::{run_compare, run_sweep, run_verify, Check, ExperimentConfig};
use bkdv::oracles::{check_records, run_all_oracles, write_table};
use bkdv::parallel::configure_threads;
use bkdv::soliton::SolitonFamily;

#[derive(Parser, Debug)]
#[command(name = "bkdv", version, about = "Solitary waves over a variable bottom")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML experiment file; the reference static-bump setup when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// overrides `initial.seed`
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// worker threads (0 = all cores)
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the analytic and spectral checks
    Verify {
        /// also recompute the oracle table (slow)
        #[arg(long)]
        oracles: bool,
    },
    /// Evolve the PDE, track the modulation and compare with the reduced ODE
    Compare,
    /// Repeat `compare` along one axis
    Sweep {
        /// overrides `sweep.axis`
        #[arg(long, value_enum)]
        axis: Option<Axis>,
        /// overrides `sweep.values`
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
    },
    /// Write the profile and its tangent vectors as CSV
    ProfileDump {
        /// speed; `initial.c0` when omitted
        #[arg(long)]
        c: Option<f64>,
        /// centre; `initial.a0` when omitted
        #[arg(long)]
        a: Option<f64>,
    },
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum Axis {
    EpsA,
    EpsX,
    EpsT,
    Alpha,
    S,
    Points,
}

impl From<Axis> for SweepAxis {
    fn from(a: Axis) -> Self {
        match a {
            Axis::EpsA => SweepAxis::EpsA,
            Axis::EpsX => SweepAxis::EpsX,
            Axis::EpsT => SweepAxis::EpsT,
            Axis::Alpha => SweepAxis::Alpha,
            Axis::S => SweepAxis::S,
            Axis::Points => SweepAxis::Points,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let mut msg = String::new();
            for cause in e.chain().map(|c| c.to_string()) {
                if !msg.contains(&cause) {
                    msg = if msg.is_empty() {
                        cause
                    } else {
                        format!("{msg}: {cause}")
                    };
                }
            }
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load(common: &Common) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ExperimentConfig::static_bump(0.02),
    };
    if let Some(s) = common.seed {
        cfg.initial.seed = s;
    }
    Ok(cfg)
}

fn print_checks(checks: &[Check]) {
    for c in checks {
        println!("{}", c.line());
    }
}

fn write_json(dir: &Path, name: &str, value: &impl serde::Serialize) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)?;
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(dir.join(name), text + "\n").with_context(|| format!("writing {name}"))?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    configure_threads(cli.common.threads)?;
    let cfg = load(&cli.common)?;
    let out = cli.common.out.as_deref();
    match cli.command {
        Command::Verify { oracles } => {
            let report = run_verify(&cfg)?;
            print_checks(&report.checks);
            let mut pass = report.pass;
            if let Some(dir) = out {
                write_json(dir, "verify.json", &report)?;
            }
            if oracles {
                let records = run_all_oracles()?;
                for r in &records {
                    let tag = if r.agrees() { "PASS" } else { "FAIL" };
                    println!(
                        "{tag} oracle {} [{}] error={:e} tol={:e}",
                        r.name, r.inputs, r.error, r.tolerance
                    );
                }
                if let Some(dir) = out {
                    std::fs::write(dir.join("records.txt"), write_table(&records))?;
                }
                pass &= check_records(&records).is_ok();
            }
            println!("{}", if pass { "verify: PASS" } else { "verify: FAIL" });
            Ok(pass)
        }
        Command::Compare => {
            let run = run_compare(&cfg, out)?;
            let r = &run.report;
            print_checks(&r.checks);
            println!(
                "alpha={:.6} window={:.3} t0={:.3} param_error={:.3e} sup_xi={:.3e} c_shift={:.3e}",
                r.alpha, r.validity_window, r.t0, r.param_error, r.sup_xi_h1, r.c_shift
            );
            if let Some(e) = &r.exit {
                println!("tracking stopped: {e}");
            }
            println!("{}", if r.pass { "compare: PASS" } else { "compare: FAIL" });
            Ok(r.pass)
        }
        Command::Sweep { axis, values } => {
            let from_cfg = cfg.sweep.clone();
            let axis = match (axis, &from_cfg) {
                (Some(a), _) => a.into(),
                (None, Some(s)) => s.axis,
                (None, None) => bail!("no sweep axis: pass --axis or add a [sweep] table"),
            };
            let values = match (values, &from_cfg) {
                (Some(v), _) => v,
                (None, Some(s)) => s.values.clone(),
                (None, None) => bail!("no sweep values: pass --values or add a [sweep] table"),
            };
            if values.is_empty() {
                bail!("sweep values are empty");
            }
            let report = run_sweep(&cfg, axis, &values, out)?;
            for row in &report.rows {
                match &row.error {
                    Some(e) => println!("FAIL value={:e} error: {e}", row.value),
                    None => println!(
                        "{} value={:e} alpha={:.6} t0={:.3} param_error={:.3e} sup_xi={:.3e}",
                        if row.pass { "PASS" } else { "FAIL" },
                        row.value,
                        row.alpha.unwrap_or(f64::NAN),
                        row.t0.unwrap_or(f64::NAN),
                        row.param_error.unwrap_or(f64::NAN),
                        row.sup_xi_h1.unwrap_or(f64::NAN),
                    ),
                }
            }
            if let Some(k) = report.xi_exponent {
                println!("fitted exponent of sup ||xi|| in alpha: {k:.3}");
            }
            println!("{}", if report.pass { "sweep: PASS" } else { "sweep: FAIL" });
            Ok(report.pass)
        }
        Command::ProfileDump { c, a } => {
            let c = c.unwrap_or(cfg.initial.c0);
            let a = a.unwrap_or(cfg.initial.a0);
            let grid = cfg.grid.build()?;
            let fam = SolitonFamily::new(grid, cfg.nonlinearity()?)?;
            let f = fam.fields(c, a)?;
            let rows: Vec<Vec<String>> = grid
                .points()
                .iter()
                .enumerate()
                .map(|(j, &x)| {
                    [
                        x,
                        f.q.values()[j],
                        f.zeta_tr.values()[j],
                        f.zeta_n.values()[j],
                        f.d2q_dc2.values()[j],
                    ]
                    .iter()
                    .map(|v| cell(Some(*v)))
                    .collect()
                })
                .collect();
            let dir = out.unwrap_or(Path::new("."));
            std::fs::create_dir_all(dir)?;
            let path = dir.join("profile.csv");
            write_csv(&path, &["x", "Q", "zeta_tr", "zeta_n", "d2Q_dc2"], &rows)?;
            let delta = fam.delta(c)?;
            println!("wrote {} (c={c}, a={a}, delta={:.12e})", path.display(), delta.delta);
            Ok(true)
        }
    }
}
