//! JSON experiment configuration and the symbolic data presets.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{KernelPair, TimeGrid};
use crate::solver::{Forcing, Nonlinearity, ProblemSpec, SolverConfig, TimeKernels};
use crate::spatial::{CoefficientField, Mesh1D};
use crate::verify::SuiteOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Solve,
    VerifySuite,
    Convergence,
    ContractionPair,
    KernelLab,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

/// Spatial profile on `(0, L)`. `center` and `width` of a bump are fractions of `L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Zero,
    Constant {
        value: f64,
    },
    /// `offset + amplitude sin(modes pi x / L)`
    Sine {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one_mode")]
        modes: u32,
        #[serde(default)]
        offset: f64,
    },
    /// `offset + amplitude (1 - s^2)^2` for `|s| < 1`, `s = (x / L - center) / width`
    Bump {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "half")]
        center: f64,
        #[serde(default = "quarter")]
        width: f64,
        #[serde(default)]
        offset: f64,
    },
    /// Piecewise constant in `x`, breakpoints in absolute coordinates.
    Piecewise {
        breaks: Vec<f64>,
        values: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

fn quarter() -> f64 {
    0.25
}

fn one_mode() -> u32 {
    1
}

impl Profile {
    pub fn validate(&self, field: &str) -> Result<()> {
        let bad = |reason: String| Err(Error::Config(format!("{field}: {reason}")));
        match self {
            Self::Zero => Ok(()),
            Self::Constant { value } if !value.is_finite() => bad("value must be finite".into()),
            Self::Sine { modes: 0, .. } => bad("modes must be positive".into()),
            Self::Bump { width, .. } if !(*width > 0.0) => bad(format!("width must be positive, got {width}")),
            Self::Piecewise { breaks, values } if values.len() != breaks.len() + 1 => {
                bad("piecewise needs one more value than breakpoints".into())
            }
            Self::Piecewise { breaks, .. } if breaks.windows(2).any(|p| p[1] <= p[0]) => {
                bad("piecewise breakpoints must be strictly increasing".into())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: f64, length: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Constant { value } => *value,
            Self::Sine {
                amplitude,
                modes,
                offset,
            } => offset + amplitude * (*modes as f64 * PI * x / length).sin(),
            Self::Bump {
                amplitude,
                center,
                width,
                offset,
            } => {
                let s = (x / length - center) / width;
                offset + if s.abs() < 1.0 { amplitude * (1.0 - s * s).powi(2) } else { 0.0 }
            }
            Self::Piecewise { breaks, values } => values[breaks.iter().take_while(|b| x >= **b).count()],
        }
    }

    /// Closed range of the profile over `[0, L]`.
    pub fn range(&self) -> (f64, f64) {
        let spread = |offset: f64, a: f64| (offset + a.min(0.0), offset + a.max(0.0));
        match self {
            Self::Zero => (0.0, 0.0),
            Self::Constant { value } => (*value, *value),
            Self::Sine {
                amplitude,
                modes,
                offset,
            } => {
                if *modes == 1 {
                    spread(*offset, *amplitude)
                } else {
                    (offset - amplitude.abs(), offset + amplitude.abs())
                }
            }
            Self::Bump { amplitude, offset, .. } => spread(*offset, *amplitude),
            Self::Piecewise { values, .. } => (
                values.iter().copied().fold(f64::INFINITY, f64::min),
                values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ),
        }
    }
}

/// Kernel pair, or `local` for the classical time derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelConfig {
    Fractional { alpha: f64 },
    Tempered { alpha: f64, tempering: f64 },
    DistributedOrder,
    Local,
}

impl KernelConfig {
    pub fn pair(&self) -> Result<Option<KernelPair>> {
        Ok(match *self {
            Self::Fractional { alpha } => Some(KernelPair::fractional(alpha)?),
            Self::Tempered { alpha, tempering } => Some(KernelPair::tempered(alpha, tempering)?),
            Self::DistributedOrder => Some(KernelPair::DistributedOrder),
            Self::Local => None,
        })
    }

    pub fn kernels(&self, grid: TimeGrid) -> Result<TimeKernels> {
        match self.pair()? {
            Some(pair) => TimeKernels::from_pair(pair, grid),
            None => Ok(TimeKernels::local(grid)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhiConfig {
    Linear {
        #[serde(default = "one")]
        slope: f64,
    },
    /// `|r|^{m-1} r`
    Power { exponent: f64 },
}

impl PhiConfig {
    pub fn build(&self) -> Result<Nonlinearity> {
        match *self {
            Self::Linear { slope } => Nonlinearity::linear(slope),
            Self::Power { exponent } => Nonlinearity::power(exponent),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default = "one")]
    pub length: f64,
    #[serde(default = "one")]
    pub horizon: f64,
    pub cells: usize,
    pub steps: usize,
    pub kernel: KernelConfig,
    pub phi: PhiConfig,
    pub u0: Profile,
    #[serde(default = "zero_profile")]
    pub f: Profile,
    #[serde(default = "unit_profile")]
    pub a: Profile,
}

fn zero_profile() -> Profile {
    Profile::Zero
}

fn unit_profile() -> Profile {
    Profile::Constant { value: 1.0 }
}

impl ProblemConfig {
    /// Builds the problem; `u0` is set to zero on the boundary nodes and `f` is constant in time.
    pub fn build(&self) -> Result<ProblemSpec> {
        self.u0.validate("problem.u0")?;
        self.f.validate("problem.f")?;
        self.a.validate("problem.a")?;
        let mesh = Mesh1D::new(self.length, self.cells)?;
        let grid = TimeGrid::new(self.horizon, self.steps)?;
        let length = self.length;
        let mut u0: Vec<f64> = mesh.nodes().iter().map(|x| self.u0.eval(*x, length)).collect();
        u0[0] = 0.0;
        u0[self.cells] = 0.0;
        let forcing = match &self.f {
            Profile::Zero => Forcing::Zero,
            p => {
                let p = p.clone();
                Forcing::field(move |_, x| p.eval(x, length))
            }
        };
        ProblemSpec::new(
            mesh,
            grid,
            self.kernel.kernels(grid)?,
            self.coefficient()?,
            self.phi.build()?,
            u0,
            forcing,
        )
    }

    fn coefficient(&self) -> Result<CoefficientField> {
        let field = match &self.a {
            Profile::Constant { value } => CoefficientField::constant(*value),
            Profile::Piecewise { breaks, values } => CoefficientField::piecewise(breaks.clone(), values.clone()),
            p => {
                let (lo, hi) = p.range();
                let p = p.clone();
                let length = self.length;
                CoefficientField::from_fn(move |_, x| p.eval(x, length), lo, hi)
            }
        };
        field.map_err(|e| Error::Config(format!("problem.a: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            formats: vec![Format::Csv, Format::Json],
        }
    }
}

/// Refinement study against the exact linear solution; level `i` uses `2^i` times the base steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceOptions {
    pub levels: usize,
    /// Also double the cells at each level.
    pub refine_space: bool,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        Self {
            levels: 1,
            refine_space: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContractionOptions {
    pub trials: usize,
    pub delta: f64,
}

impl Default for ContractionOptions {
    fn default() -> Self {
        Self { trials: 10, delta: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelLabOptions {
    pub gamma: f64,
}

impl Default for KernelLabOptions {
    fn default() -> Self {
        Self { gamma: 1.0 }
    }
}

/// Top-level config. `seed` overrides `suite.seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub suite: SuiteOptions,
    #[serde(default)]
    pub convergence: ConvergenceOptions,
    #[serde(default)]
    pub contraction: ContractionOptions,
    #[serde(default)]
    pub kernel_lab: KernelLabOptions,
}

impl ExperimentConfig {
    /// Parses JSON, reporting the dotted path of the offending field and its position.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                Error::Config(inner.to_string())
            } else {
                Error::Config(format!("{path}: {inner}"))
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_value(value: serde_json::Value) -> Result<Self> {
        Self::from_json(&value.to_string())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate().map_err(|e| Error::Config(format!("solver: {e}")))?;
        if self.output.formats.is_empty() {
            return Err(Error::Config("output.formats: must name at least one format".into()));
        }
        if self.convergence.levels == 0 {
            return Err(Error::Config("convergence.levels: must be positive".into()));
        }
        if self.mode == Mode::Convergence && !matches!(self.problem.kernel, KernelConfig::Fractional { .. }) {
            return Err(Error::Config("problem.kernel: convergence mode needs the fractional family".into()));
        }
        if self.contraction.trials == 0 {
            return Err(Error::Config("contraction.trials: must be positive".into()));
        }
        Ok(())
    }

    pub fn wants(&self, format: Format) -> bool {
        self.output.formats.contains(&format)
    }
}
