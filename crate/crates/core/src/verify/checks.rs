//! Discrete versions of the a-priori estimates, each returned as a report entry.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::kernels::DiscreteKernel;
use crate::nonlocal::{ConvexFn, NonlocalOperator};
use crate::report::{CheckEntry, Report, SIGN_SLACK};
use crate::solver::{primitive_mass, ProblemSpec, Solution};
use crate::spatial::{hminus1_norm, norms, space_time_norms};

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Scalar comparison function `z` with `D z = F`, `z[0] = 0`, from the step recursion.
fn scalar_response(op: &NonlocalOperator, forcing: &[f64]) -> Result<Vec<f64>> {
    let mut z = vec![0.0; forcing.len()];
    for n in 1..forcing.len() {
        let (diag, hist) = op.implicit_split(&z[..n])?;
        z[n] = (forcing[n] + hist) / diag;
    }
    Ok(z)
}

/// `L_inf` checks: finiteness of `C* = |u|_inf / (1 + max(R, |u0|_inf))` and
/// the discrete comparison bound `|u|_inf <= |u0|_inf + max_n z_n`, where `z`
/// solves the scalar scheme with data `|f_n|_inf` (so `z = 0` when `f = 0`).
pub fn linfty_check(sol: &Solution, spec: &ProblemSpec) -> Result<Report> {
    let start = Instant::now();
    let peak = sol.sup();
    let u0 = spec.u0_sup();
    let c_star = peak / (1.0 + spec.phi.threshold().max(u0));
    let op = NonlocalOperator::new(spec.kernels.k.clone())?;
    let forcing: Vec<f64> = spec
        .forcing
        .rows(&spec.mesh, &spec.grid)
        .iter()
        .map(|r| sup(r))
        .collect();
    let z = scalar_response(&op, &forcing)?;
    let zmax = z.iter().copied().fold(0.0, f64::max);
    let mut report = Report::new();
    report.push(
        CheckEntry::flag("linfty_constant_finite", c_star.is_finite())
            .with("c_star", c_star)
            .with("sup_u", peak)
            .timed(start.elapsed()),
    );
    report.push(
        CheckEntry::at_most("linfty_comparison_bound", peak, u0 + zmax, SIGN_SLACK)
            .with("forcing_response", zmax)
            .timed(start.elapsed()),
    );
    Ok(report)
}

/// Both solutions must live on the same grids.
fn same_grids(a: &Solution, b: &Solution) -> Result<()> {
    if a.mesh != b.mesh || a.grid != b.grid {
        return Err(invalid("solutions", "solutions live on different grids"));
    }
    Ok(())
}

fn row_difference(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect())
        .collect()
}

/// `|u1 - u2|_{L1(Omega_T)} <= T |u01 - u02|_{L1(Omega)} + |l|_{L1(0,T)} |f1 - f2|_{L1(Omega_T)}`.
///
/// The form printed without the forcing factor is kept under `measured.rhs_displayed`.
pub fn l1_contraction_check(
    sol1: &Solution,
    sol2: &Solution,
    l: &DiscreteKernel,
    f1: &[Vec<f64>],
    f2: &[Vec<f64>],
    u01: &[f64],
    u02: &[f64],
) -> Result<CheckEntry> {
    let start = Instant::now();
    same_grids(sol1, sol2)?;
    if l.grid() != sol1.grid {
        return Err(invalid("l", "kernel grid differs from the solution grid"));
    }
    let (mesh, grid) = (sol1.mesh, sol1.grid);
    let lhs = space_time_norms(&mesh, &grid, &row_difference(&sol1.u, &sol2.u))?.l1;
    let du0: Vec<f64> = u01.iter().zip(u02).map(|(a, b)| a - b).collect();
    let du0_l1 = norms(&mesh, &du0)?.l1;
    let df_l1 = space_time_norms(&mesh, &grid, &row_difference(f1, f2))?.l1;
    let t = grid.horizon();
    let l1 = l.l1_norm();
    let rhs = t * du0_l1 + l1 * df_l1;
    Ok(CheckEntry::inequality("l1_contraction", lhs, rhs)
        .with("rhs_displayed", t * du0_l1 + l1)
        .with("l_norm", l1)
        .with("du0_l1", du0_l1)
        .with("df_l1", df_l1)
        .with_note("checked in the form with the |f1 - f2| factor")
        .timed(start.elapsed()))
}

/// `tau sum_n |v_n|_{H1}^2 <= (2/nu) |k|_1 h sum Phi_eps(u0) + (C_P^2 / nu^2) |f|^2_{L2(Omega_T)}`, `C_P = L / pi`.
pub fn energy_check(sol: &Solution, spec: &ProblemSpec) -> Result<CheckEntry> {
    let start = Instant::now();
    let grad = space_time_norms(&sol.mesh, &sol.grid, &sol.v)?.grad_l2;
    let lhs = grad * grad;
    let nu = spec.coeff.nu();
    let k1 = spec.kernels.k_norm();
    let mass = primitive_mass(&sol.phi, &spec.u0, &spec.mesh);
    let f = space_time_norms(&spec.mesh, &spec.grid, &spec.forcing.rows(&spec.mesh, &spec.grid))?.l2;
    let cp = spec.mesh.poincare_constant();
    let rhs = 2.0 / nu * k1 * mass + cp * cp / (nu * nu) * f * f;
    Ok(CheckEntry::inequality("energy", lhs, rhs)
        .with("k_norm", k1)
        .with("primitive_mass", mass)
        .with("forcing_l2", f)
        .with("nu", nu)
        .timed(start.elapsed()))
}

/// `|l(. + h) - l|_{L1(0, T-h)}` and `|l|_{L1(0, h)}` for `h = lag tau`, from cell averages.
pub fn lag_norms(l: &DiscreteKernel, lag: usize) -> (f64, f64) {
    let tau = l.grid().tau();
    let w = l.weights();
    let n = w.len();
    let shift = tau * (0..n.saturating_sub(lag)).map(|j| (w[j + lag] - w[j]).abs()).sum::<f64>();
    let head = tau * w[..lag.min(n)].iter().sum::<f64>();
    (shift, head)
}

/// Translation bound at lag `h = lag * tau`:
/// `|u(. + h) - u|_{L2(0,T-h; H^-1)} <= 2 m (|l(. + h) - l|_1 + |l|_{L1(0,h)})`,
/// with `m = |u|_{L2(H1_0)} + |d/dt k*(u - u0)|_{L2(H^-1)}`.
pub fn translation_modulus_check(sol: &Solution, spec: &ProblemSpec, lag: usize) -> Result<CheckEntry> {
    let start = Instant::now();
    let grid = sol.grid;
    if lag > grid.steps() {
        return Err(invalid("lag", format!("{lag} exceeds the number of steps")));
    }
    let mesh = sol.mesh;
    let tau = grid.tau();
    let interior = |row: &Vec<f64>| row[1..mesh.cells()].to_vec();
    let op = NonlocalOperator::new(spec.kernels.k.clone())?;
    let d = op.apply_field(&sol.u, &spec.u0)?;
    let mut v_sq = 0.0;
    for row in d.iter().skip(1) {
        let n = hminus1_norm(&mesh, &interior(row))?;
        v_sq += tau * n * n;
    }
    let u_h1 = space_time_norms(&mesh, &grid, &sol.u)?.grad_l2;
    let m = u_h1 + v_sq.sqrt();
    let mut lhs_sq = 0.0;
    for n in 1..=grid.steps() - lag {
        let diff: Vec<f64> = interior(&sol.u[n + lag])
            .iter()
            .zip(interior(&sol.u[n]))
            .map(|(a, b)| a - b)
            .collect();
        let nn = hminus1_norm(&mesh, &diff)?;
        lhs_sq += tau * nn * nn;
    }
    let (shift, head) = lag_norms(&spec.kernels.l, lag);
    let rhs = 2.0 * m * (shift + head);
    Ok(CheckEntry::inequality(format!("translation_lag_{lag}"), lhs_sq.sqrt(), rhs)
        .with("lag", lag as f64 * tau)
        .with("m", m)
        .with("l_shift", shift)
        .with("l_head", head)
        .timed(start.elapsed()))
}

/// Translation checks over a lag sweep plus monotonicity of the bound in the lag.
pub fn translation_sweep(sol: &Solution, spec: &ProblemSpec, lags: &[usize]) -> Result<Report> {
    if lags.is_empty() || lags.windows(2).any(|p| p[1] <= p[0]) {
        return Err(invalid("lags", "must be a nonempty increasing list"));
    }
    let mut report = Report::new();
    let entries = lags
        .iter()
        .map(|&lag| translation_modulus_check(sol, spec, lag))
        .collect::<Result<Vec<_>>>()?;
    let rhs: Vec<f64> = entries.iter().map(|e| e.rhs).collect();
    let monotone = rhs.windows(2).all(|p| p[1] >= p[0] - SIGN_SLACK);
    let first = rhs[0];
    let last = *rhs.last().expect("nonempty");
    report.extend(Report { checks: entries });
    report.push(CheckEntry::flag("translation_rhs_monotone", monotone));
    report.push(
        CheckEntry::at_most("translation_rhs_ratio", first / last, 1.0, 0.0)
            .with("rhs_first", first)
            .with("rhs_last", last),
    );
    Ok(report)
}

/// Minimal discrete convexity margin over seeded random `(H, v)` pairs, scaled by `1 + |v|_inf^2`.
pub fn convexity_suite(op: &NonlocalOperator, trials: usize, seed: u64) -> Result<CheckEntry> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = op.grid().steps() + 1;
    let mut worst = f64::INFINITY;
    for trial in 0..trials {
        let h = match trial % 3 {
            0 => ConvexFn::Square,
            1 => ConvexFn::SmoothAbs {
                eps: rng.gen_range(0.01..1.0),
            },
            _ => ConvexFn::Exp,
        };
        let v: Vec<f64> = if rng.gen_bool(0.5) {
            (0..len).map(|_| rng.gen_range(-1.0..=1.0)).collect()
        } else {
            let mut x: f64 = rng.gen_range(-1.0..=1.0);
            (0..len)
                .map(|_| {
                    x = (x + rng.gen_range(-0.2..=0.2)).clamp(-1.0, 1.0);
                    x
                })
                .collect()
        };
        let margin = op.convexity_margin(&h, &v, v[0])?;
        worst = worst.min(margin / (1.0 + sup(&v).powi(2)));
    }
    Ok(CheckEntry::at_most("convexity", 0.0, worst, SIGN_SLACK)
        .with("trials", trials as f64)
        .with("seed", seed as f64)
        .timed(start.elapsed()))
}

/// Differences between successive `eps` stages must not grow over the last `count` stages.
pub fn continuation_check(sol: &Solution, count: usize) -> CheckEntry {
    let diffs: Vec<f64> = sol.stages.iter().filter_map(|s| s.diff_l2).collect();
    let tail = &diffs[diffs.len().saturating_sub(count)..];
    let worst = tail.windows(2).map(|p| p[1] - p[0]).fold(f64::NEG_INFINITY, f64::max);
    let entry = if tail.len() < 2 {
        CheckEntry::flag("eps_continuation", true).with_note("fewer than two stage differences")
    } else {
        CheckEntry::at_most("eps_continuation", worst.max(0.0), 0.0, SIGN_SLACK)
    };
    tail.iter()
        .enumerate()
        .fold(entry, |e, (i, d)| e.with(&format!("diff_{i}"), *d))
}
