//! TOML experiment configuration. Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::effective::EffectiveForm;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::pde::{Bottom, BottomProfile, SolverConfig};
use crate::regsym::RegularizationParam;
use crate::soliton::{Nonlinearity, SpeedInterval};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub nonlinearity: NonlinearityConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default = "zero_bottom")]
    pub bottom: Bottom,
    #[serde(default)]
    pub modulation: ModulationConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub effective: EffectiveConfig,
    #[serde(default)]
    pub window: WindowConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

fn zero_bottom() -> Bottom {
    Bottom::Zero
}

/// Exactly one of `power` and `polynomial`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityConfig {
    pub power: Option<u32>,
    /// `(k, a_k)` pairs of `f(u) = sum a_k u^k`
    pub polynomial: Option<Vec<(u32, f64)>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub length: f64,
    pub points: usize,
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.length, self.points)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub dt: f64,
    /// defaults to the validity window `T_1`
    pub t_end: Option<f64>,
    pub output_stride: usize,
    #[serde(default = "two_thirds")]
    pub dealias: f64,
}

fn two_thirds() -> f64 {
    2.0 / 3.0
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            dt: 2e-3,
            t_end: None,
            output_stride: 250,
            dealias: two_thirds(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulationConfig {
    /// fixed regularization
    pub alpha: Option<f64>,
    /// rule `alpha = (eps_a eps_x)^s`, `0 < s < 1/2`
    pub s: Option<f64>,
    /// defaults to `0.1 sqrt(alpha)`
    pub tube_radius: Option<f64>,
    #[serde(default = "default_interval")]
    pub interval: [f64; 2],
    #[serde(default = "yes")]
    pub split: bool,
}

fn default_interval() -> [f64; 2] {
    [0.5, 2.0]
}

fn yes() -> bool {
    true
}

impl Default for ModulationConfig {
    fn default() -> Self {
        Self {
            alpha: None,
            s: Some(0.25),
            tube_radius: None,
            interval: default_interval(),
            split: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub c0: f64,
    pub a0: f64,
    /// `H^1` size of the added noise
    #[serde(default)]
    pub perturbation: f64,
    #[serde(default)]
    pub seed: u64,
    /// largest wavenumber in the noise
    #[serde(default = "default_band")]
    pub band: f64,
    /// width of the Gaussian window around `a0`
    #[serde(default = "default_noise_window")]
    pub noise_width: f64,
}

fn default_band() -> f64 {
    2.0
}

fn default_noise_window() -> f64 {
    8.0
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            c0: 1.0,
            a0: 0.0,
            perturbation: 0.0,
            seed: 0,
            band: default_band(),
            noise_width: default_noise_window(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectiveConfig {
    #[serde(default)]
    pub form: EffectiveForm,
    /// largest RK4 step
    #[serde(default = "default_ode_dt")]
    pub dt: f64,
}

fn default_ode_dt() -> f64 {
    0.05
}

impl Default for EffectiveConfig {
    fn default() -> Self {
        Self {
            form: EffectiveForm::Corrected,
            dt: default_ode_dt(),
        }
    }
}

/// `T_1 = c3 / (eps_t + eps_x + alpha)`; with the alpha rule `alpha = (eps_a eps_x)^s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub c3: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self { c3: 15.0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub svg: bool,
    #[serde(default)]
    pub snapshots: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// points of the speed grid over the interval
    pub speeds: usize,
    /// alpha sweep for the decomposition and coercivity checks
    pub alphas: Vec<f64>,
    /// alpha sweep for the regularized-inverse clauses
    pub clause_alphas: Vec<f64>,
    pub spectrum_grid: GridConfig,
    pub coercivity_grid: GridConfig,
    pub decomposition_grid: GridConfig,
    /// random admissible fields per `(c, alpha)`
    pub samples: usize,
    /// perturbation sizes for the remainder slopes
    pub slope_norms: Vec<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            speeds: 9,
            alphas: vec![0.1, 0.05, 0.025],
            clause_alphas: vec![0.2, 0.1, 0.05, 0.025],
            spectrum_grid: GridConfig {
                length: 80.0,
                points: 512,
            },
            coercivity_grid: GridConfig {
                length: 1280.0,
                points: 8192,
            },
            decomposition_grid: GridConfig {
                length: 160.0,
                points: 1024,
            },
            samples: 100,
            slope_norms: vec![1e-1, 1e-2, 1e-3, 1e-4],
        }
    }
}

/// Pinned thresholds. The regression bounds were measured once on the
/// reference runs and frozen with margin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// `sup ||xi||_{H^1} <= xi_k alpha`
    pub xi_k: f64,
    /// `max |Delta a|, |Delta c| <= param_k alpha^2 T`
    pub param_k: f64,
    /// absolute parameter bound, used instead of `param_k` when set
    pub param_abs: Option<f64>,
    /// `sup ||xi_g|| / sup ||xi|| <= xi_g_k alpha^{1/2}`
    pub xi_g_k: f64,
    /// `sigma / alpha` band
    pub sigma_band: [f64; 2],
    /// `||Omega^{-1} - leading|| <= omega_k alpha`
    pub omega_k: f64,
    /// `||eta_perp|| <= eta_k alpha^{1/2}`
    pub eta_k: f64,
    /// lower bound for the good-direction constant
    pub c3_min: f64,
    /// clause (6): `|R| <= remainder_k (||phi||_1 + ||x phi||_1)^2`
    pub remainder_k: f64,
    pub zero_mode_residual: f64,
    pub zero_mode_cosine: f64,
    pub ground_state: f64,
    pub beta: f64,
    pub cross_term: f64,
    pub recovery: f64,
    pub orthogonality: f64,
    pub newton_iters: usize,
    /// slopes for `N'` and for the cubic remainders
    pub slopes: [f64; 2],
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            xi_k: 0.06,
            param_k: 6e-4,
            param_abs: None,
            xi_g_k: 2.5,
            sigma_band: [1.0, 6.0],
            omega_k: 4.0,
            eta_k: 3.0,
            c3_min: 0.2,
            remainder_k: crate::regsym::REMAINDER_K,
            zero_mode_residual: 1e-7,
            zero_mode_cosine: 1e-6,
            ground_state: 1e-4,
            beta: 1e-8,
            cross_term: 1e-9,
            recovery: 1e-10,
            orthogonality: 1e-11,
            newton_iters: 5,
            slopes: [1.98, 2.98],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    /// bottom amplitude
    EpsA,
    /// bottom inverse length
    EpsX,
    /// bottom inverse time (moving ramp)
    EpsT,
    /// fixed regularization
    Alpha,
    /// exponent of the alpha rule
    S,
    /// grid points
    Points,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.nonlinearity()?;
        self.grid.build()?;
        self.bottom.validate()?;
        self.solver_config(1.0)?;
        self.interval()?;
        match (self.modulation.alpha, self.modulation.s) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "set either modulation.alpha or modulation.s, not both".into(),
                ))
            }
            (None, None) => return Err(Error::Config("set modulation.alpha or modulation.s".into())),
            _ => {}
        }
        self.alpha()?;
        if !(self.window.c3 > 0.0) {
            return Err(Error::Config(format!(
                "window.c3 must be positive, got {}",
                self.window.c3
            )));
        }
        if !(self.effective.dt > 0.0) {
            return Err(Error::Config(format!(
                "effective.dt must be positive, got {}",
                self.effective.dt
            )));
        }
        if self.verify.speeds < 2 {
            return Err(Error::Config("verify.speeds must be at least 2".into()));
        }
        for &a in self.verify.alphas.iter().chain(&self.verify.clause_alphas) {
            RegularizationParam::new(a)?;
        }
        if let Some(sw) = &self.sweep {
            if sw.values.is_empty() {
                return Err(Error::Config("sweep.values is empty".into()));
            }
        }
        Ok(())
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity> {
        match (&self.nonlinearity.power, &self.nonlinearity.polynomial) {
            (Some(p), None) => Nonlinearity::power(*p),
            (None, Some(terms)) if !terms.is_empty() => Ok(Nonlinearity::polynomial(terms)),
            _ => Err(Error::Config(
                "nonlinearity needs exactly one of `power` or a non-empty `polynomial`".into(),
            )),
        }
    }

    pub fn interval(&self) -> Result<SpeedInterval> {
        let [lo, hi] = self.modulation.interval;
        SpeedInterval::new(lo, hi)
    }

    /// The regularization, either fixed or from the rule.
    pub fn alpha(&self) -> Result<RegularizationParam> {
        if let Some(a) = self.modulation.alpha {
            return RegularizationParam::new(a);
        }
        let s = self.modulation.s.unwrap_or(0.25);
        let sc = self.bottom.scales();
        if !(sc.eps_a > 0.0 && sc.eps_x > 0.0) {
            return Err(Error::Config(
                "the alpha rule needs eps_a > 0 and eps_x > 0; set modulation.alpha instead".into(),
            ));
        }
        RegularizationParam::from_rule(sc.eps_a, sc.eps_x, s)
    }

    /// `T_1 = c3 / (eps_t + eps_x + alpha)`.
    pub fn validity_window(&self) -> Result<f64> {
        let sc = self.bottom.scales();
        Ok(self.window.c3 / (sc.eps_t + sc.eps_x + self.alpha()?.value()))
    }

    /// Final time: `solver.t_end` or the window, rounded down to the output stride.
    pub fn final_time(&self) -> Result<f64> {
        let t = match self.solver.t_end {
            Some(t) => t,
            None => self.validity_window()?,
        };
        let chunk = self.solver.dt * self.solver.output_stride as f64;
        Ok((t / chunk + 1e-9).floor() * chunk)
    }

    pub fn solver_config(&self, t_end: f64) -> Result<SolverConfig> {
        let s = SolverConfig {
            dt: self.solver.dt,
            t_end,
            output_stride: self.solver.output_stride,
            dealias: self.solver.dealias,
        };
        s.validate()?;
        Ok(s)
    }

    /// The reference static-bump experiment.
    pub fn static_bump(eps_a: f64) -> Self {
        Self {
            nonlinearity: NonlinearityConfig {
                power: Some(2),
                polynomial: None,
            },
            grid: GridConfig {
                length: 160.0,
                points: 1024,
            },
            solver: SolverSection::default(),
            bottom: Bottom::StaticBump { eps_a, eps_x: 0.1 },
            modulation: ModulationConfig::default(),
            initial: InitialConfig {
                a0: -40.0,
                ..InitialConfig::default()
            },
            effective: EffectiveConfig::default(),
            window: WindowConfig::default(),
            outputs: OutputConfig::default(),
            verify: VerifyConfig::default(),
            tolerances: Tolerances::default(),
            sweep: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[nonlinearity]
power = 2

[grid]
length = 160.0
points = 1024

[bottom]
family = "static-bump"
eps_a = 0.02
eps_x = 0.1

[modulation]
s = 0.25

[initial]
c0 = 1.0
a0 = -40.0
"#;

    #[test]
    fn parses_and_derives() {
        let cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(cfg, ExperimentConfig::static_bump(0.02));
        let a = cfg.alpha().unwrap().value();
        assert!((a - 0.002f64.powf(0.25)).abs() < 1e-15);
        assert_eq!(cfg.final_time().unwrap(), 48.0);
        let back = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_keys_fail() {
        let bad = SAMPLE.replace("a0 = -40.0", "a0 = -40.0\nphase = 1.0");
        assert!(matches!(ExperimentConfig::from_toml(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn rule_exponent_checked() {
        let bad = SAMPLE.replace("s = 0.25", "s = 0.5");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
        let both = SAMPLE.replace("s = 0.25", "s = 0.25\nalpha = 0.1");
        assert!(ExperimentConfig::from_toml(&both).is_err());
        let flat = SAMPLE.replace(
            "family = \"static-bump\"\neps_a = 0.02\neps_x = 0.1",
            "family = \"zero\"",
        );
        assert!(ExperimentConfig::from_toml(&flat).is_err());
    }
}
