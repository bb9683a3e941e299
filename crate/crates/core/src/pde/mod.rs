//! Time integration of `u_t = -(u_xx + f(u) - b(t, x) u)_x` on the periodic grid.
//!
//! Fourth-order exponential Runge-Kutta (ETDRK4): the stiff `-u_xxx` part is
//! integrated exactly in Fourier space, the flux `-(f(u) - b u)_x` enters
//! through the stage combination, with phi-functions evaluated by contour
//! averaging. Products are dealiased with the two-thirds rule.

mod bottom;

pub use bottom::{check_scales, Bottom, BottomProfile, Scales};

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::soliton::Nonlinearity;

/// Time-stepping parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    /// steps between stored snapshots
    pub output_stride: usize,
    /// keep modes with `|k| <= dealias k_max`
    #[serde(default = "default_dealias")]
    pub dealias: f64,
}

fn default_dealias() -> f64 {
    2.0 / 3.0
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 10.0,
            output_stride: 100,
            dealias: default_dealias(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0) {
            return Err(Error::Config(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if self.output_stride == 0 {
            return Err(Error::Config("output_stride must be at least 1".into()));
        }
        if !(self.dealias > 0.0 && self.dealias <= 1.0) {
            return Err(Error::Config(format!(
                "dealias fraction must lie in (0, 1], got {}",
                self.dealias
            )));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Snapshots `u(t_i)` at the output stride.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<GridFunction>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &GridFunction)> {
        self.times.last().copied().zip(self.states.last())
    }
}

/// Largest stable advective number `dt k |f'(u) - b|` for the explicit stages.
pub const ADVECTIVE_LIMIT: f64 = 2.8;

/// ETDRK4 stepper with coefficients and FFT plans precomputed for one `dt`.
pub struct Stepper<'a> {
    grid: Grid,
    dt: f64,
    nl: &'a Nonlinearity,
    bottom: &'a dyn BottomProfile,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    e: Vec<Complex64>,
    e2: Vec<Complex64>,
    q: Vec<Complex64>,
    f1: Vec<Complex64>,
    f2: Vec<Complex64>,
    f3: Vec<Complex64>,
    /// `-i k` with dealiasing and the Nyquist mode folded in
    flux: Vec<Complex64>,
    static_b: Option<Vec<f64>>,
    xs: Vec<f64>,
    scratch: Vec<Complex64>,
}

const CONTOUR_POINTS: usize = 32;

impl<'a> Stepper<'a> {
    pub fn new(grid: Grid, dt: f64, dealias: f64, bottom: &'a dyn BottomProfile, nl: &'a Nonlinearity) -> Self {
        let n = grid.n_points();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let roots: Vec<Complex64> = (0..CONTOUR_POINTS)
            .map(|m| Complex64::from_polar(1.0, PI * (m as f64 + 0.5) / CONTOUR_POINTS as f64 * 2.0))
            .collect();
        let cut = dealias * grid.k_max();
        let nyq = grid.nyquist_index();
        let mut s = Self {
            grid,
            dt,
            nl,
            bottom,
            fwd,
            inv,
            e: Vec::with_capacity(n),
            e2: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
            f1: Vec::with_capacity(n),
            f2: Vec::with_capacity(n),
            f3: Vec::with_capacity(n),
            flux: Vec::with_capacity(n),
            static_b: bottom
                .is_static()
                .then(|| (0..n).map(|j| bottom.b(0.0, grid.x(j))).collect()),
            xs: grid.points(),
            scratch: vec![Complex64::new(0.0, 0.0); n],
        };
        for j in 0..n {
            let k = if j == nyq { 0.0 } else { grid.wavenumber(j) };
            let lin = Complex64::new(0.0, k * k * k);
            let z = lin * dt;
            s.e.push(z.exp());
            s.e2.push((z * 0.5).exp());
            let (mut q, mut f1, mut f2, mut f3) = (
                Complex64::default(),
                Complex64::default(),
                Complex64::default(),
                Complex64::default(),
            );
            for r in &roots {
                let lr = z + r;
                let ex = lr.exp();
                let l3 = lr * lr * lr;
                q += ((lr * 0.5).exp() - 1.0) / lr;
                f1 += (-4.0 - lr + ex * (4.0 - 3.0 * lr + lr * lr)) / l3;
                f2 += (2.0 + lr + ex * (lr - 2.0)) / l3;
                f3 += (-4.0 - 3.0 * lr - lr * lr + ex * (4.0 - lr)) / l3;
            }
            let w = dt / CONTOUR_POINTS as f64;
            s.q.push(q * w);
            s.f1.push(f1 * w);
            s.f2.push(f2 * w);
            s.f3.push(f3 * w);
            let keep = j != nyq && grid.wavenumber(j).abs() <= cut;
            s.flux.push(if keep {
                Complex64::new(0.0, -grid.wavenumber(j))
            } else {
                Complex64::default()
            });
        }
        s
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn to_physical(&mut self, v: &[Complex64]) -> Vec<f64> {
        self.scratch.copy_from_slice(v);
        self.inv.process(&mut self.scratch);
        let s = 1.0 / self.grid.n_points() as f64;
        self.scratch.iter().map(|c| c.re * s).collect()
    }

    /// Spectrum of `-(f(u) - b u)_x`; returns the physical sup norm as well.
    fn nonlinear(&mut self, v: &[Complex64], t: f64) -> (Vec<Complex64>, f64) {
        let u = self.to_physical(v);
        let mut sup: f64 = 0.0;
        for (j, &uj) in u.iter().enumerate() {
            let b = match &self.static_b {
                Some(bs) => bs[j],
                None => self.bottom.b(t, self.xs[j]),
            };
            sup = if uj.is_finite() { sup.max(uj.abs()) } else { f64::NAN };
            self.scratch[j] = Complex64::new(self.nl.f(uj) - b * uj, 0.0);
        }
        self.fwd.process(&mut self.scratch);
        let out = self.scratch.iter().zip(&self.flux).map(|(a, m)| a * m).collect();
        (out, sup)
    }

    /// Advance the spectrum `v` from `t` to `t + dt`; returns the sup norm at `t`.
    pub fn advance(&mut self, v: &mut [Complex64], t: f64) -> f64 {
        let dt = self.dt;
        let (nv, sup) = self.nonlinear(v, t);
        let a: Vec<Complex64> = (0..v.len()).map(|j| self.e2[j] * v[j] + self.q[j] * nv[j]).collect();
        let (na, _) = self.nonlinear(&a, t + 0.5 * dt);
        let b: Vec<Complex64> = (0..v.len()).map(|j| self.e2[j] * v[j] + self.q[j] * na[j]).collect();
        let (nb, _) = self.nonlinear(&b, t + 0.5 * dt);
        let c: Vec<Complex64> = (0..v.len())
            .map(|j| self.e2[j] * a[j] + self.q[j] * (2.0 * nb[j] - nv[j]))
            .collect();
        let (nc, _) = self.nonlinear(&c, t + dt);
        for j in 0..v.len() {
            v[j] = self.e[j] * v[j] + nv[j] * self.f1[j] + 2.0 * (na[j] + nb[j]) * self.f2[j] + nc[j] * self.f3[j];
        }
        sup
    }

    pub fn forward_spectrum(&mut self, u: &GridFunction) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = u.values().iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fwd.process(&mut buf);
        buf
    }

    pub fn field(&mut self, v: &[Complex64]) -> GridFunction {
        let vals = self.to_physical(v);
        GridFunction::from_raw(self.grid, vals)
    }
}

/// One ETDRK4 step of size `dt` (negative `dt` integrates backwards).
pub fn step(u: &GridFunction, t: f64, dt: f64, b: &dyn BottomProfile, nl: &Nonlinearity) -> Result<GridFunction> {
    if !u.is_finite() {
        return Err(Error::BlowUp {
            time: t,
            reason: "non-finite input".into(),
        });
    }
    let mut s = Stepper::new(*u.grid(), dt, default_dealias(), b, nl);
    let mut v = s.forward_spectrum(u);
    s.advance(&mut v, t);
    let out = s.field(&v);
    if !out.is_finite() {
        return Err(Error::BlowUp {
            time: t + dt,
            reason: "non-finite values after one step".into(),
        });
    }
    Ok(out)
}

/// Advective stability number `dt * k_cut * max|f'(u0) - b|`.
pub fn advective_number(u0: &GridFunction, config: &SolverConfig, b: &dyn BottomProfile, nl: &Nonlinearity) -> f64 {
    let g = u0.grid();
    let speed = u0.map_with_x(|x, v| (nl.df(v) - b.b(0.0, x)).abs()).norm_sup();
    config.dt * config.dealias * g.k_max() * speed
}

/// Integrate from `t = 0`, storing `u0` (dealiased) and every `output_stride`-th step.
pub fn evolve(
    u0: &GridFunction,
    config: &SolverConfig,
    b: &dyn BottomProfile,
    nl: &Nonlinearity,
) -> Result<Trajectory> {
    config.validate()?;
    if !u0.is_finite() {
        return Err(Error::RejectedInput("initial data is not finite".into()));
    }
    let cfl = advective_number(u0, config, b, nl);
    if cfl > ADVECTIVE_LIMIT {
        return Err(Error::Precondition(format!(
            "dt = {} too large: advective number {cfl:.3} exceeds {ADVECTIVE_LIMIT}",
            config.dt
        )));
    }
    let grid = *u0.grid();
    let mut stepper = Stepper::new(grid, config.dt, config.dealias, b, nl);
    let start = u0.dealias(config.dealias);
    let limit = 1e3 * start.norm_sup().max(f64::MIN_POSITIVE);
    let mut v = stepper.forward_spectrum(&start);
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![start],
    };
    let steps = config.steps();
    for i in 0..steps {
        let t = i as f64 * config.dt;
        let sup = stepper.advance(&mut v, t);
        if !(sup <= limit) {
            return Err(Error::BlowUp {
                time: t,
                reason: format!("sup norm {sup:.3e} exceeds {limit:.3e}"),
            });
        }
        if (i + 1) % config.output_stride == 0 || i + 1 == steps {
            let u = stepper.field(&v);
            let tn = (i + 1) as f64 * config.dt;
            let sup = u.norm_sup();
            if !u.is_finite() || sup > limit {
                return Err(Error::BlowUp {
                    time: tn,
                    reason: format!("sup norm {sup:.3e} exceeds {limit:.3e}"),
                });
            }
            traj.times.push(tn);
            traj.states.push(u);
        }
    }
    Ok(traj)
}

/// Sidecar describing a binary snapshot file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub format: String,
    pub length: f64,
    pub n_points: usize,
    pub rows: usize,
    pub solver: SolverConfig,
}

/// Write rows of `t` followed by `N` samples, all little-endian `f64`, to
/// `path`, and a JSON sidecar to `path.json`.
pub fn dump_snapshots(path: &Path, traj: &Trajectory, config: &SolverConfig) -> Result<()> {
    let grid = match traj.states.first() {
        Some(u) => *u.grid(),
        None => return Err(Error::Precondition("empty trajectory".into())),
    };
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for (t, u) in traj.times.iter().zip(&traj.states) {
        f.write_all(&t.to_le_bytes())?;
        for v in u.values() {
            f.write_all(&v.to_le_bytes())?;
        }
    }
    f.flush()?;
    let header = SnapshotHeader {
        format: "rows of (t, u_0..u_{N-1}) as little-endian f64".into(),
        length: grid.length(),
        n_points: grid.n_points(),
        rows: traj.len(),
        solver: *config,
    };
    let mut side = path.as_os_str().to_owned();
    side.push(".json");
    std::fs::write(side, serde_json::to_string_pretty(&header).expect("header serializes"))?;
    Ok(())
}

/// Read a file written by [`dump_snapshots`].
pub fn load_snapshots(path: &Path) -> Result<Trajectory> {
    let mut side = path.as_os_str().to_owned();
    side.push(".json");
    let header: SnapshotHeader = serde_json::from_str(&std::fs::read_to_string(side)?)
        .map_err(|e| Error::Config(format!("bad snapshot sidecar: {e}")))?;
    let grid = Grid::new(header.length, header.n_points)?;
    let bytes = std::fs::read(path)?;
    let row = 8 * (header.n_points + 1);
    if bytes.len() != row * header.rows {
        return Err(Error::Config("snapshot file size does not match its sidecar".into()));
    }
    let read = |i: usize| f64::from_le_bytes(bytes[8 * i..8 * i + 8].try_into().expect("8 bytes"));
    let mut traj = Trajectory::default();
    for r in 0..header.rows {
        let base = r * (header.n_points + 1);
        traj.times.push(read(base));
        traj.states.push(GridFunction::new(
            grid,
            (0..header.n_points).map(|j| read(base + 1 + j)).collect(),
        )?);
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::soliton::SolitonFamily;

    #[test]
    fn zero_stays_zero() {
        let grid = Grid::new(80.0, 128).unwrap();
        let nl = Nonlinearity::power(2).unwrap();
        let cfg = SolverConfig {
            dt: 1e-2,
            t_end: 1.0,
            output_stride: 10,
            ..Default::default()
        };
        let tr = evolve(&grid.zeros(), &cfg, &Bottom::Zero, &nl).unwrap();
        assert!(tr.states.iter().all(|u| u.norm_sup() == 0.0));
        assert_eq!(tr.len(), 11);
    }

    #[test]
    fn airy_phase_is_exact() {
        let grid = Grid::new(2.0 * PI, 32).unwrap();
        let nl = Nonlinearity::polynomial(&[]);
        let k = 3.0;
        let u0 = grid.sample(|x| (k * x).cos());
        let t = 0.37;
        let cfg = SolverConfig {
            dt: t / 10.0,
            t_end: t,
            output_stride: 10,
            dealias: 1.0,
        };
        let tr = evolve(&u0, &cfg, &Bottom::Zero, &nl).unwrap();
        // u_t = -u_xxx: cos(k x) -> cos(k x + k^3 t)
        let exact = grid.sample(|x| (k * x + k * k * k * t).cos());
        assert!((tr.states.last().unwrap() - &exact).norm_sup() < 1e-12);
    }

    #[test]
    fn soliton_translates() {
        let grid = Grid::new(80.0, 512).unwrap();
        let nl = Nonlinearity::power(2).unwrap();
        let fam = SolitonFamily::new(grid, nl.clone()).unwrap();
        let q = fam.profile(1.0, -5.0).unwrap();
        let cfg = SolverConfig {
            dt: 1e-3,
            t_end: 2.0,
            output_stride: 500,
            ..Default::default()
        };
        let tr = evolve(&q, &cfg, &Bottom::Zero, &nl).unwrap();
        let exact = fam.profile(1.0, -3.0).unwrap();
        assert!((tr.states.last().unwrap() - &exact).sobolev_norm_h1() < 1e-7);
    }

    #[test]
    fn forward_backward_returns() {
        let grid = Grid::new(80.0, 256).unwrap();
        let nl = Nonlinearity::power(2).unwrap();
        let u0 = SolitonFamily::new(grid, nl.clone())
            .unwrap()
            .profile(1.0, 0.0)
            .unwrap()
            .dealias(2.0 / 3.0);
        let b = Bottom::MovingRamp {
            eps_a: 0.05,
            eps_x: 0.1,
            eps_t: 0.01,
        };
        let mut errs = vec![];
        for dt in [0.02, 0.01] {
            let f = step(&u0, 0.0, dt, &b, &nl).unwrap();
            let back = step(&f, dt, -dt, &b, &nl).unwrap();
            errs.push((&back - &u0).norm_l2());
        }
        assert!(errs[0] / errs[1] > 16.0, "{errs:?}");
    }

    #[test]
    fn blow_up_and_cfl_are_reported() {
        let grid = Grid::new(80.0, 256).unwrap();
        let nl = Nonlinearity::power(2).unwrap();
        let big = grid.sample(|x| 50.0 * (-x * x).exp());
        let cfg = SolverConfig {
            dt: 0.1,
            t_end: 1.0,
            output_stride: 1,
            ..Default::default()
        };
        assert!(matches!(
            evolve(&big, &cfg, &Bottom::Zero, &nl),
            Err(Error::Precondition(_))
        ));
        let mut nan = vec![0.0; 256];
        nan[3] = f64::NAN;
        let nan = GridFunction::from_raw(grid, nan);
        assert!(step(&nan, 0.0, 0.01, &Bottom::Zero, &nl).is_err());
    }

    #[test]
    fn snapshot_round_trip() {
        let grid = Grid::new(20.0, 16).unwrap();
        let traj = Trajectory {
            times: vec![0.0, 0.5],
            states: vec![grid.sample(|x| x), grid.sample(|x| x * x)],
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("snap.bin");
        dump_snapshots(&p, &traj, &SolverConfig::default()).unwrap();
        assert_eq!(std::fs::metadata(&p).unwrap().len(), 2 * 17 * 8);
        let back = load_snapshots(&p).unwrap();
        assert_eq!(back.times, traj.times);
        assert_eq!(back.states, traj.states);
    }
}
