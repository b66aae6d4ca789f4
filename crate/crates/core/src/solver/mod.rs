//! Implicit time marching for `d/dt (k * [u - u0]) - (a phi(u)_x)_x = f`.
//!
//! Each step solves `k[1] u + K(a) phi_eps(u) = f_n + history` on the interior
//! nodes. The frozen-coefficient map uses per-cell secant slopes of
//! `phi_eps`, so `K(a * slope(w)) w = K(a) phi_eps(w)` and its fixed point is
//! exactly the nonlinear step equation. Degenerate laws are solved along a
//! decreasing `eps` schedule with warm starts.

mod nonlinearity;

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use nonlinearity::{Law, Nonlinearity};

use crate::error::{invalid, Error, Result};
use crate::kernels::{sample_cell_averages, DiscreteKernel, KernelPair, KernelSide, TimeGrid};
use crate::nonlocal::NonlocalOperator;
use crate::spatial::{space_time_norms, stiffness_from_cells, CoefficientField, Mesh1D, Norms, Tridiagonal};

/// Discrete `(k, l)` driving the time derivative.
#[derive(Debug, Clone)]
pub struct TimeKernels {
    pub k: DiscreteKernel,
    pub l: DiscreteKernel,
    pub pair: Option<KernelPair>,
}

impl TimeKernels {
    pub fn from_pair(pair: KernelPair, grid: TimeGrid) -> Result<Self> {
        Ok(Self {
            k: sample_cell_averages(&pair, KernelSide::K, grid)?,
            l: sample_cell_averages(&pair, KernelSide::L, grid)?,
            pair: Some(pair),
        })
    }

    /// `k = delta`, `l = 1`: the time derivative becomes the backward difference quotient.
    pub fn local(grid: TimeGrid) -> Self {
        Self {
            k: DiscreteKernel::dirac(grid),
            l: DiscreteKernel::ones(grid),
            pair: None,
        }
    }

    /// `||k||_{L1((0,T))}`.
    pub fn k_norm(&self) -> f64 {
        self.k.l1_norm()
    }

    pub fn l_norm(&self) -> f64 {
        self.l.l1_norm()
    }
}

type FieldFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Right-hand side `f(t, x)`, evaluated at the step's right endpoint.
#[derive(Clone, Default)]
pub enum Forcing {
    #[default]
    Zero,
    Field(FieldFn),
    /// Full node rows `f[n][0..=Nx]`, `n = 0..=N`.
    Table(Vec<Vec<f64>>),
}

impl std::fmt::Debug for Forcing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Field(_) => write!(f, "Field"),
            Self::Table(rows) => write!(f, "Table({} rows)", rows.len()),
        }
    }
}

impl Forcing {
    pub fn field<F>(f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self::Field(Arc::new(f))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero)
    }

    /// Full node row at step `n`.
    pub fn row(&self, mesh: &Mesh1D, grid: &TimeGrid, n: usize) -> Vec<f64> {
        match self {
            Self::Zero => vec![0.0; mesh.cells() + 1],
            Self::Field(f) => {
                let t = grid.node(n);
                mesh.nodes().iter().map(|x| f(t, *x)).collect()
            }
            Self::Table(rows) => rows[n].clone(),
        }
    }

    /// All rows `n = 0..=N`.
    pub fn rows(&self, mesh: &Mesh1D, grid: &TimeGrid) -> Vec<Vec<f64>> {
        (0..=grid.steps()).map(|n| self.row(mesh, grid, n)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub mesh: Mesh1D,
    pub grid: TimeGrid,
    pub kernels: TimeKernels,
    pub coeff: CoefficientField,
    pub phi: Nonlinearity,
    /// Full node vector; both boundary entries must vanish.
    pub u0: Vec<f64>,
    pub forcing: Forcing,
}

impl ProblemSpec {
    pub fn new(
        mesh: Mesh1D,
        grid: TimeGrid,
        kernels: TimeKernels,
        coeff: CoefficientField,
        phi: Nonlinearity,
        u0: Vec<f64>,
        forcing: Forcing,
    ) -> Result<Self> {
        let spec = Self {
            mesh,
            grid,
            kernels,
            coeff,
            phi,
            u0,
            forcing,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mesh.cells() < 3 {
            return Err(invalid("cells", format!("need Nx >= 3, got {}", self.mesh.cells())));
        }
        if self.kernels.k.grid() != self.grid || self.kernels.l.grid() != self.grid {
            return Err(invalid("kernels", "kernel grid differs from the time grid"));
        }
        NonlocalOperator::new(self.kernels.k.clone())?;
        let nodes = self.mesh.cells() + 1;
        if self.u0.len() != nodes {
            return Err(Error::GridMismatch {
                expected: nodes,
                found: self.u0.len(),
            });
        }
        if self.u0.iter().any(|x| !x.is_finite()) {
            return Err(invalid("u0", "must be finite"));
        }
        if self.u0[0] != 0.0 || self.u0[nodes - 1] != 0.0 {
            return Err(invalid("u0", "must vanish at the boundary nodes"));
        }
        if let Forcing::Table(rows) = &self.forcing {
            if rows.len() != self.grid.steps() + 1 {
                return Err(Error::GridMismatch {
                    expected: self.grid.steps() + 1,
                    found: rows.len(),
                });
            }
            if let Some(r) = rows.iter().find(|r| r.len() != nodes) {
                return Err(Error::GridMismatch {
                    expected: nodes,
                    found: r.len(),
                });
            }
        }
        self.phi.validate()
    }

    pub fn u0_sup(&self) -> f64 {
        self.u0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Truncation {
    Fixed { bound: f64 },
    Adaptive { safety: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Linearization {
    Picard,
    Newton,
}

pub const MAX_ESCALATIONS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub picard_tol: f64,
    pub picard_maxit: usize,
    pub damping: f64,
    pub eps_schedule: Vec<f64>,
    pub truncation: Truncation,
    pub linearization: Linearization,
}

/// `1, 1/4, 1/16, ...` while above `1e-6`, then `1e-6`.
pub fn default_eps_schedule() -> Vec<f64> {
    let mut s: Vec<f64> = (0..).map(|k| 0.25f64.powi(k)).take_while(|e| *e > 1e-6).collect();
    s.push(1e-6);
    s
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            picard_tol: 1e-10,
            picard_maxit: 200,
            damping: 1.0,
            eps_schedule: default_eps_schedule(),
            truncation: Truncation::Adaptive { safety: 1.5 },
            linearization: Linearization::Picard,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.picard_tol > 0.0) {
            return Err(invalid("picard_tol", "must be positive"));
        }
        if self.picard_maxit == 0 {
            return Err(invalid("picard_maxit", "must be positive"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(invalid("damping", format!("must lie in (0, 1], got {}", self.damping)));
        }
        if self.eps_schedule.is_empty() || self.eps_schedule.iter().any(|e| !(*e > 0.0)) {
            return Err(invalid("eps_schedule", "must be a nonempty list of positive values"));
        }
        if self.eps_schedule.windows(2).any(|p| p[1] >= p[0]) {
            return Err(invalid("eps_schedule", "must be strictly decreasing"));
        }
        match self.truncation {
            Truncation::Fixed { bound } if !(bound > 0.0) => {
                Err(invalid("truncation", "fixed bound must be positive"))
            }
            Truncation::Adaptive { safety } if !(safety > 1.0) => {
                Err(invalid("truncation", "adaptive safety factor must exceed 1"))
            }
            _ => Ok(()),
        }
    }

    /// Initial truncation bound `safety (1 + max(R, |u0|_inf))` or the fixed value.
    pub fn initial_bound(&self, spec: &ProblemSpec) -> f64 {
        match self.truncation {
            Truncation::Fixed { bound } => bound,
            Truncation::Adaptive { safety } => safety * (1.0 + spec.phi.threshold().max(spec.u0_sup())),
        }
    }
}

/// Data for one implicit step with the history already summed.
pub struct StepProblem<'a> {
    pub mesh: &'a Mesh1D,
    pub phi: &'a Nonlinearity,
    pub n: usize,
    pub diag: f64,
    /// Coefficient per cell at `t_n`.
    pub a: Vec<f64>,
    /// `f_n + history` on the interior nodes.
    pub rhs: Vec<f64>,
}

/// Result of a nonlinear step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// Interior values.
    pub u: Vec<f64>,
    pub iterations: usize,
    /// Last relative update.
    pub residual: f64,
    pub damping: f64,
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

impl<'a> StepProblem<'a> {
    /// Builds step `n` from the solved prefix `u[0..n]` (full node rows).
    pub fn new(spec: &'a ProblemSpec, phi: &'a Nonlinearity, n: usize, prefix: &[Vec<f64>]) -> Result<Self> {
        let op = NonlocalOperator::new(spec.kernels.k.clone())?;
        Self::with_operator(spec, &op, phi, n, prefix)
    }

    fn with_operator(
        spec: &'a ProblemSpec,
        op: &NonlocalOperator,
        phi: &'a Nonlinearity,
        n: usize,
        prefix: &[Vec<f64>],
    ) -> Result<Self> {
        if prefix.len() != n {
            return Err(invalid("prefix", format!("expected {n} rows, got {}", prefix.len())));
        }
        let (diag, hist) = op.implicit_split_field(prefix)?;
        let f = spec.forcing.row(&spec.mesh, &spec.grid, n);
        let inner = spec.mesh.interior();
        let rhs = (0..inner).map(|r| f[r + 1] + hist[r + 1]).collect();
        Ok(Self {
            mesh: &spec.mesh,
            phi,
            n,
            diag,
            a: spec.coeff.sample(&spec.mesh, spec.grid.node(n))?,
            rhs,
        })
    }

    /// Per-cell secant slopes of `phi` at the interior iterate `w`.
    pub fn slopes(&self, w: &[f64]) -> Vec<f64> {
        let full = self.mesh.with_boundary(w);
        full.windows(2).map(|p| self.phi.secant(p[0], p[1])).collect()
    }

    /// `(diag I + K(a * slope)) u = rhs` for given per-cell slopes.
    pub fn linear_step(&self, slopes: &[f64]) -> Result<Vec<f64>> {
        if slopes.len() != self.a.len() {
            return Err(Error::GridMismatch {
                expected: self.a.len(),
                found: slopes.len(),
            });
        }
        if let Some(c) = slopes.iter().position(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(invalid("slopes", format!("slope in cell {} is not positive", c + 1)));
        }
        let b: Vec<f64> = self.a.iter().zip(slopes).map(|(a, s)| a * s).collect();
        stiffness_from_cells(self.mesh, &b)?.shifted(self.diag).solve(&self.rhs)
    }

    /// `diag u + K(a) phi(u) - rhs`.
    pub fn residual(&self, u: &[f64]) -> Vec<f64> {
        let v: Vec<f64> = u.iter().map(|x| self.phi.phi(*x)).collect();
        let kv = stiffness_from_cells(self.mesh, &self.a).expect("cell count matches mesh").mul(&v);
        (0..u.len()).map(|i| self.diag * u[i] + kv[i] - self.rhs[i]).collect()
    }

    /// Damped fixed-point iteration on the frozen-coefficient map.
    pub fn picard(&self, config: &SolverConfig, guess: &[f64]) -> Result<StepOutcome> {
        if self.phi.is_affine() {
            let slopes = vec![self.phi.dphi(0.0); self.a.len()];
            return Ok(StepOutcome {
                u: self.linear_step(&slopes)?,
                iterations: 1,
                residual: 0.0,
                damping: config.damping,
            });
        }
        let mut theta = config.damping;
        let mut history = Vec::new();
        for attempt in 0..2 {
            let mut w = guess.to_vec();
            history.clear();
            for it in 1..=config.picard_maxit {
                let s = self.linear_step(&self.slopes(&w))?;
                let next: Vec<f64> = s.iter().zip(&w).map(|(s, w)| theta * s + (1.0 - theta) * w).collect();
                let delta = next.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                let rel = if delta == 0.0 { 0.0 } else { delta / sup(&next).max(f64::MIN_POSITIVE) };
                history.push(rel);
                w = next;
                if rel <= config.picard_tol {
                    return Ok(StepOutcome {
                        u: w,
                        iterations: it,
                        residual: rel,
                        damping: theta,
                    });
                }
            }
            if attempt == 0 {
                theta *= 0.5;
            }
        }
        let keep = history.len().saturating_sub(10);
        Err(Error::NonConvergence {
            step: self.n,
            eps: self.phi.eps(),
            residuals: history.split_off(keep),
        })
    }

    /// Newton on `r -> diag r + K(a) phi(r)` with backtracking on the residual norm.
    pub fn newton(&self, config: &SolverConfig, guess: &[f64]) -> Result<StepOutcome> {
        let k = stiffness_from_cells(self.mesh, &self.a)?;
        let mut u = guess.to_vec();
        let mut res = self.residual(&u);
        let mut history = Vec::new();
        for it in 1..=config.picard_maxit {
            let d: Vec<f64> = u.iter().map(|x| self.phi.dphi(*x)).collect();
            let n = u.len();
            let jac = Tridiagonal {
                lower: (0..n).map(|r| if r > 0 { k.lower[r] * d[r - 1] } else { 0.0 }).collect(),
                diag: (0..n).map(|r| self.diag + k.diag[r] * d[r]).collect(),
                upper: (0..n).map(|r| if r + 1 < n { k.upper[r] * d[r + 1] } else { 0.0 }).collect(),
            };
            let step = jac.solve(&res)?;
            let r0 = sup(&res);
            let mut lambda = 1.0;
            let mut next;
            let mut next_res;
            loop {
                next = u.iter().zip(&step).map(|(u, s)| u - lambda * s).collect::<Vec<_>>();
                next_res = self.residual(&next);
                if sup(&next_res) <= r0 || lambda < 1e-6 {
                    break;
                }
                lambda *= 0.5;
            }
            let delta = next.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let rel = if delta == 0.0 { 0.0 } else { delta / sup(&next).max(f64::MIN_POSITIVE) };
            history.push(rel);
            u = next;
            res = next_res;
            if rel <= config.picard_tol {
                return Ok(StepOutcome {
                    u,
                    iterations: it,
                    residual: rel,
                    damping: lambda,
                });
            }
        }
        let keep = history.len().saturating_sub(10);
        Err(Error::NonConvergence {
            step: self.n,
            eps: self.phi.eps(),
            residuals: history.split_off(keep),
        })
    }
}

/// Frozen-coefficient solve for step `n` of `spec` with nonlinearity `phi`.
pub fn linear_step(
    spec: &ProblemSpec,
    phi: &Nonlinearity,
    n: usize,
    slopes: &[f64],
    prefix: &[Vec<f64>],
) -> Result<Vec<f64>> {
    StepProblem::new(spec, phi, n, prefix)?.linear_step(slopes)
}

/// One nonlinear step with the configured linearization, starting from `guess` (interior).
pub fn picard_step(
    spec: &ProblemSpec,
    config: &SolverConfig,
    phi: &Nonlinearity,
    n: usize,
    prefix: &[Vec<f64>],
    guess: &[f64],
) -> Result<StepOutcome> {
    let step = StepProblem::new(spec, phi, n, prefix)?;
    match config.linearization {
        Linearization::Picard => step.picard(config, guess),
        Linearization::Newton => step.newton(config, guess),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub n: usize,
    pub iterations: usize,
    pub residual: f64,
    pub eps: f64,
    pub damping: f64,
}

/// Summary of one run of the `eps` schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub eps: f64,
    pub total_iterations: usize,
    pub max_iterations: usize,
    /// `|u|_{L_inf(Omega_T)}` of this stage.
    pub sup: f64,
    /// `|u - u_prev|_{L2(Omega_T)}` against the previous stage; absent for the first.
    pub diff_l2: Option<f64>,
    pub diff_linf: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub mesh: Mesh1D,
    pub grid: TimeGrid,
    /// `u[n][i]`, full node rows.
    pub u: Vec<Vec<f64>>,
    /// `phi_eps(u)` with the final stage's nonlinearity.
    pub v: Vec<Vec<f64>>,
    pub steps: Vec<StepDiagnostics>,
    pub stages: Vec<StageSummary>,
    pub eps: f64,
    pub truncation_bound: f64,
    pub truncation_active: bool,
    pub escalations: usize,
    /// Final nonlinearity (truncated and shifted).
    pub phi: Nonlinearity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSummary {
    pub steps: usize,
    pub cells: usize,
    pub horizon: f64,
    pub length: f64,
    pub eps: f64,
    pub norms: Norms,
    pub total_iterations: usize,
    pub max_iterations: usize,
    pub truncation_bound: f64,
    pub truncation_active: bool,
    pub escalations: usize,
    pub stages: Vec<StageSummary>,
}

impl Solution {
    pub fn sup(&self) -> f64 {
        self.u.iter().map(|r| sup(r)).fold(0.0, f64::max)
    }

    pub fn norms(&self) -> Result<Norms> {
        space_time_norms(&self.mesh, &self.grid, &self.u)
    }

    /// CSV with columns `n,t,i,x,u,v`, one row per space-time node.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,t,i,x,u,v\n");
        let xs = self.mesh.nodes();
        for (n, (row, vrow)) in self.u.iter().zip(&self.v).enumerate() {
            let t = self.grid.node(n);
            for (i, x) in xs.iter().enumerate() {
                let _ = writeln!(out, "{n},{t},{i},{x},{},{}", row[i], vrow[i]);
            }
        }
        out
    }

    pub fn summary(&self) -> Result<SolutionSummary> {
        Ok(SolutionSummary {
            steps: self.grid.steps(),
            cells: self.mesh.cells(),
            horizon: self.grid.horizon(),
            length: self.mesh.length(),
            eps: self.eps,
            norms: self.norms()?,
            total_iterations: self.steps.iter().map(|s| s.iterations).sum(),
            max_iterations: self.steps.iter().map(|s| s.iterations).max().unwrap_or(0),
            truncation_bound: self.truncation_bound,
            truncation_active: self.truncation_active,
            escalations: self.escalations,
            stages: self.stages.clone(),
        })
    }
}

struct StageRun {
    u: Vec<Vec<f64>>,
    steps: Vec<StepDiagnostics>,
}

fn march(
    spec: &ProblemSpec,
    config: &SolverConfig,
    op: &NonlocalOperator,
    phi: &Nonlinearity,
    warm: Option<&[Vec<f64>]>,
) -> Result<StageRun> {
    let steps = spec.grid.steps();
    let inner = spec.mesh.interior();
    let mut u = Vec::with_capacity(steps + 1);
    u.push(spec.u0.clone());
    let mut diags = Vec::with_capacity(steps);
    for n in 1..=steps {
        let step = StepProblem::with_operator(spec, op, phi, n, &u)?;
        let guess = match warm {
            Some(w) => w[n][1..=inner].to_vec(),
            None => u[n - 1][1..=inner].to_vec(),
        };
        let out = match config.linearization {
            Linearization::Picard => step.picard(config, &guess)?,
            Linearization::Newton => step.newton(config, &guess)?,
        };
        diags.push(StepDiagnostics {
            n,
            iterations: out.iterations,
            residual: out.residual,
            eps: phi.eps(),
            damping: out.damping,
        });
        u.push(spec.mesh.with_boundary(&out.u));
    }
    Ok(StageRun { u, steps: diags })
}

/// Full solve: `eps`-continuation for degenerate laws, a single `eps = 0` run otherwise,
/// with adaptive escalation of the truncation bound.
pub fn solve(spec: &ProblemSpec, config: &SolverConfig) -> Result<Solution> {
    spec.validate()?;
    config.validate()?;
    let op = NonlocalOperator::new(spec.kernels.k.clone())?;
    let schedule: Vec<f64> = if spec.phi.is_degenerate() {
        config.eps_schedule.clone()
    } else {
        vec![0.0]
    };
    let mut bound = config.initial_bound(spec);
    let mut escalations = 0;
    loop {
        let truncated = spec.phi.truncate(bound)?;
        let mut stages: Vec<StageSummary> = Vec::with_capacity(schedule.len());
        let mut prev: Option<StageRun> = None;
        let mut phi = truncated.clone();
        for &eps in &schedule {
            phi = if eps > 0.0 { truncated.regularize(eps)? } else { truncated.clone() };
            let run = march(spec, config, &op, &phi, prev.as_ref().map(|p| p.u.as_slice()))?;
            let (diff_l2, diff_linf) = match &prev {
                Some(p) => {
                    let d: Vec<Vec<f64>> = run
                        .u
                        .iter()
                        .zip(&p.u)
                        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
                        .collect();
                    let n = space_time_norms(&spec.mesh, &spec.grid, &d)?;
                    (Some(n.l2), Some(n.linf))
                }
                None => (None, None),
            };
            stages.push(StageSummary {
                eps,
                total_iterations: run.steps.iter().map(|s| s.iterations).sum(),
                max_iterations: run.steps.iter().map(|s| s.iterations).max().unwrap_or(0),
                sup: run.u.iter().map(|r| sup(r)).fold(0.0, f64::max),
                diff_l2,
                diff_linf,
            });
            prev = Some(run);
        }
        let run = prev.expect("schedule is nonempty");
        let peak = run.u.iter().map(|r| sup(r)).fold(0.0, f64::max);
        let reached = peak >= bound * (1.0 - 1e-6);
        if let (Truncation::Adaptive { safety }, true) = (config.truncation, reached) {
            if escalations == MAX_ESCALATIONS {
                return Err(Error::TruncationBudget { escalations, bound });
            }
            escalations += 1;
            bound *= safety;
            continue;
        }
        let v = run
            .u
            .iter()
            .map(|row| row.iter().map(|x| phi.phi(*x)).collect())
            .collect();
        return Ok(Solution {
            mesh: spec.mesh,
            grid: spec.grid,
            u: run.u,
            v,
            steps: run.steps,
            stages,
            eps: phi.eps(),
            truncation_bound: bound,
            truncation_active: reached,
            escalations,
            phi,
        });
    }
}

/// `h sum_i Phi(u_i)` over the node vector.
pub fn primitive_mass(phi: &Nonlinearity, u: &[f64], mesh: &Mesh1D) -> f64 {
    mesh.h() * u.iter().map(|x| phi.primitive(*x)).sum::<f64>()
}
