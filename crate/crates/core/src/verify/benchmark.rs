//! Separation-of-variables benchmark for the linear problem
//! `d/dt (g_{1-alpha} * [u - u0]) - u_xx = 0`, `u0 = sin(pi x / L)`,
//! with exact solution `E_alpha(-(pi/L)^2 t^alpha) sin(pi x / L)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::kernels::{KernelPair, TimeGrid};
use crate::solver::{solve, Forcing, Nonlinearity, ProblemSpec, SolverConfig, TimeKernels};
use crate::spatial::{norms, CoefficientField, Mesh1D};
use crate::verify::mittag_leffler;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub steps: usize,
    pub cells: usize,
    /// Max over all space-time nodes.
    pub linf_error: f64,
    /// `L2(Omega)` error at `t = T`.
    pub final_l2_error: f64,
    /// Error of the previous row divided by this row's; absent for the first row.
    pub linf_ratio: Option<f64>,
    pub l2_ratio: Option<f64>,
}

/// Linear fractional problem with sine initial data on `(0, length) x (0, horizon)`.
pub fn linear_sine_problem(alpha: f64, length: f64, horizon: f64, steps: usize, cells: usize) -> Result<ProblemSpec> {
    let mesh = Mesh1D::new(length, cells)?;
    let grid = TimeGrid::new(horizon, steps)?;
    let mut u0: Vec<f64> = mesh.nodes().iter().map(|x| (PI * x / length).sin()).collect();
    u0[0] = 0.0;
    u0[cells] = 0.0;
    ProblemSpec::new(
        mesh,
        grid,
        TimeKernels::from_pair(KernelPair::fractional(alpha)?, grid)?,
        CoefficientField::constant(1.0)?,
        Nonlinearity::linear(1.0)?,
        u0,
        Forcing::Zero,
    )
}

/// Amplitude `E_alpha(-(pi/L)^2 t^alpha)` at every time node.
pub fn exact_amplitudes(alpha: f64, length: f64, grid: &TimeGrid) -> Result<Vec<f64>> {
    let lam = (PI / length).powi(2);
    grid.nodes()
        .iter()
        .map(|t| mittag_leffler(alpha, -lam * t.powf(alpha)))
        .collect()
}

pub fn exact_linear_benchmark(
    alpha: f64,
    length: f64,
    horizon: f64,
    resolutions: &[(usize, usize)],
) -> Result<Vec<BenchmarkRow>> {
    let mut rows: Vec<BenchmarkRow> = Vec::with_capacity(resolutions.len());
    for &(steps, cells) in resolutions {
        let spec = linear_sine_problem(alpha, length, horizon, steps, cells)?;
        let sol = solve(&spec, &SolverConfig::default())?;
        let amp = exact_amplitudes(alpha, length, &spec.grid)?;
        let mut linf: f64 = 0.0;
        let mut last = Vec::new();
        for (n, row) in sol.u.iter().enumerate() {
            let err: Vec<f64> = row.iter().zip(&spec.u0).map(|(u, s)| u - amp[n] * s).collect();
            linf = err.iter().fold(linf, |m, e| m.max(e.abs()));
            last = err;
        }
        let l2 = norms(&spec.mesh, &last)?.l2;
        let prev = rows.last();
        rows.push(BenchmarkRow {
            steps,
            cells,
            linf_error: linf,
            final_l2_error: l2,
            linf_ratio: prev.map(|p| p.linf_error / linf),
            l2_ratio: prev.map(|p| p.final_l2_error / l2),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_data_is_exact() {
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let amp = exact_amplitudes(0.5, 1.0, &grid).unwrap();
        assert_eq!(amp[0], 1.0);
    }

    #[test]
    fn final_errors_shrink_under_refinement() {
        // the sup over all nodes is dominated by the initial layer and stalls for small alpha
        for alpha in [0.1, 0.9] {
            let rows = exact_linear_benchmark(alpha, 1.0, 1.0, &[(32, 16), (64, 32), (128, 64)]).unwrap();
            assert!(rows.windows(2).all(|p| p[1].final_l2_error < p[0].final_l2_error), "{rows:?}");
            assert!(rows[0].linf_ratio.is_none());
        }
    }
}
