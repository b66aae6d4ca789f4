//! Executable checks for the quantitative statements: kernel structure,
//! discrete convexity, `L_inf` and energy bounds, `L1` contraction and the
//! time-translation estimate, plus the Mittag-Leffler oracle.

mod benchmark;
mod checks;
mod hypotheses;
mod mittag_leffler;

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

pub use benchmark::{exact_amplitudes, exact_linear_benchmark, linear_sine_problem, BenchmarkRow};
pub use checks::{
    continuation_check, convexity_suite, energy_check, l1_contraction_check, lag_norms, linfty_check,
    translation_modulus_check, translation_sweep,
};
pub use hypotheses::{bounded_data_exponents, check_exponents, DataHypotheses};
pub use mittag_leffler::{mittag_leffler, mittag_leffler_series, SERIES_RADIUS};

use crate::error::Result;
use crate::kernels::{regularized_kernel, resolvent_kernel, verify_pc_pair, DiscreteKernel, KernelPair, TimeGrid, TOL_NN};
use crate::nonlocal::NonlocalOperator;
use crate::report::{CheckEntry, Report};
use crate::solver::{solve, Forcing, Nonlinearity, ProblemSpec, SolverConfig, TimeKernels};
use crate::spatial::{CoefficientField, Mesh1D};

/// Fractional porous-medium problem: `alpha = 1/2`, `phi = r^3` (`R = 1`, `mu = 3`),
/// `u0 = sin(pi x)`, `f = 0`, `a = 1` on `(0, 1) x (0, 1)`.
pub fn tfpm_preset(steps: usize, cells: usize) -> Result<ProblemSpec> {
    let mesh = Mesh1D::new(1.0, cells)?;
    let grid = TimeGrid::new(1.0, steps)?;
    let mut u0: Vec<f64> = mesh.nodes().iter().map(|x| (PI * x).sin()).collect();
    u0[0] = 0.0;
    u0[cells] = 0.0;
    ProblemSpec::new(
        mesh,
        grid,
        TimeKernels::from_pair(KernelPair::fractional(0.5)?, grid)?,
        CoefficientField::constant(1.0)?,
        Nonlinearity::power(3.0)?,
        u0,
        Forcing::Zero,
    )
}

/// Structure of the discrete resolvent family for `gamma l` and of `k_gamma = k * h_gamma`.
pub fn resolvent_report(k: &DiscreteKernel, l: &DiscreteKernel, gamma: f64) -> Result<Report> {
    let start = Instant::now();
    let res = resolvent_kernel(l, gamma)?;
    let kg = regularized_kernel(k, &res)?;
    let proportional = res
        .h
        .weights()
        .iter()
        .zip(res.r.weights())
        .map(|(h, r)| (h - gamma * r).abs() / h.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    let s_range = res
        .s
        .weights()
        .iter()
        .map(|s| (s - 1.0).max(-s).max(0.0))
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    let mut r = Report::new();
    r.push(CheckEntry::at_most("resolvent_h_nonnegative", res.h.negativity_defect(), 0.0, 1e-12).timed(elapsed));
    r.push(CheckEntry::at_most("resolvent_r_nonnegative", res.r.negativity_defect(), 0.0, TOL_NN));
    r.push(CheckEntry::at_most("resolvent_s_nonincreasing", res.s.monotonicity_defect(), 0.0, TOL_NN));
    r.push(CheckEntry::at_most("resolvent_s_unit_range", s_range, 0.0, TOL_NN));
    r.push(CheckEntry::at_most("resolvent_h_proportional", proportional, 0.0, 1e-13).with("gamma", gamma));
    r.push(
        CheckEntry::flag("regularized_kernel_admissible", !kg.flagged())
            .with("negativity_defect", kg.negativity_defect)
            .with("monotonicity_defect", kg.monotonicity_defect),
    );
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Steps of the separate grid used for the kernel-pair identity.
    pub kernel_steps: usize,
    pub pc_tol: f64,
    pub resolvent_gamma: f64,
    pub convexity_trials: usize,
    pub lags: Vec<usize>,
    /// Amplitude of the seeded perturbation for the contraction pair.
    pub contraction_delta: f64,
    /// Number of trailing `eps` stages whose differences must not grow.
    pub continuation_tail: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            kernel_steps: 4096,
            pc_tol: 5e-3,
            resolvent_gamma: 1.0,
            convexity_trials: 100,
            lags: vec![1, 2, 4, 8],
            contraction_delta: 0.05,
            continuation_tail: 3,
        }
    }
}

/// Seeded perturbation of a problem: a smooth bump added to `u0` and a constant added to `f`.
pub fn perturbed_problem(spec: &ProblemSpec, rng: &mut ChaCha8Rng, delta: f64) -> Result<ProblemSpec> {
    let length = spec.mesh.length();
    let center = rng.gen_range(0.2..0.8) * length;
    let width = rng.gen_range(0.05..0.25) * length;
    let amp = delta * rng.gen_range(-1.0..=1.0);
    let shift = delta * rng.gen_range(-1.0..=1.0);
    let cells = spec.mesh.cells();
    let mut u0: Vec<f64> = spec
        .mesh
        .nodes()
        .iter()
        .zip(&spec.u0)
        .map(|(x, u)| {
            let s = (x - center) / width;
            u + if s.abs() < 1.0 { amp * (1.0 - s * s).powi(2) } else { 0.0 }
        })
        .collect();
    u0[0] = 0.0;
    u0[cells] = 0.0;
    let forcing = Forcing::Table(
        spec.forcing
            .rows(&spec.mesh, &spec.grid)
            .into_iter()
            .map(|row| row.into_iter().map(|f| f + shift).collect())
            .collect(),
    );
    let mut out = spec.clone();
    out.u0 = u0;
    out.forcing = forcing;
    out.validate()?;
    Ok(out)
}

/// Full suite on one problem: kernel checks, a solve, and every estimate on the solution.
pub fn verify_suite(spec: &ProblemSpec, config: &SolverConfig, options: &SuiteOptions) -> Result<Report> {
    let mut report = Report::new();
    if let Some(pair) = spec.kernels.pair {
        let start = Instant::now();
        let fine = TimeGrid::new(spec.grid.horizon(), options.kernel_steps)?;
        let mut pc = verify_pc_pair(&pair, fine, options.pc_tol)?;
        let elapsed = start.elapsed();
        for c in &mut pc.checks {
            c.runtime = elapsed;
        }
        report.extend(pc);
        let p = pair.integrability_exponent();
        report.push(match bounded_data_exponents(p) {
            Ok(h) => CheckEntry::flag("data_hypotheses", true)
                .with("p", h.p)
                .with("q1", h.q1)
                .with("beta", h.beta),
            Err(e) => CheckEntry::flag("data_hypotheses", false).with_note(e.to_string()),
        });
    }
    report.extend(resolvent_report(&spec.kernels.k, &spec.kernels.l, options.resolvent_gamma)?);
    let op = NonlocalOperator::new(spec.kernels.k.clone())?;
    report.push(convexity_suite(&op, options.convexity_trials, options.seed)?);

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let other = perturbed_problem(spec, &mut rng, options.contraction_delta)?;
    let start = Instant::now();
    let (sol, sol2) = rayon::join(|| solve(spec, config), || solve(&other, config));
    let (sol, sol2) = (sol?, sol2?);
    let solve_time = start.elapsed();

    report.extend(linfty_check(&sol, spec)?);
    report.push(
        CheckEntry::flag("truncation_inactive", !sol.truncation_active)
            .with("bound", sol.truncation_bound)
            .with("sup_u", sol.sup())
            .timed(solve_time),
    );
    report.push(energy_check(&sol, spec)?);
    report.extend(translation_sweep(&sol, spec, &options.lags)?);
    report.push(continuation_check(&sol, options.continuation_tail));
    let f1 = spec.forcing.rows(&spec.mesh, &spec.grid);
    let f2 = other.forcing.rows(&other.mesh, &other.grid);
    report.push(l1_contraction_check(&sol, &sol2, &spec.kernels.l, &f1, &f2, &spec.u0, &other.u0)?);

    let ml = mittag_leffler(0.5, -1.0)?;
    let oracle = std::f64::consts::E * erfc(1.0);
    report.push(
        CheckEntry::at_most("mittag_leffler_identity", (ml - oracle).abs() / oracle, 0.0, 1e-10).with("value", ml),
    );
    Ok(report)
}
