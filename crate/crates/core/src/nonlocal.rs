//! Discrete nonlocal derivative `d/dt (k * [v - v0])` on node trajectories.
//!
//! With `v` interpolated linearly between nodes, `k * dv/dt` integrated over
//! cell averages of `k` gives the L1-type form
//! `D[n] = sum_{j=1..n} k[n-j+1] (v[j] - v[j-1])`.
//! Nonnegative nonincreasing weights make it a positive combination of
//! `v[n] - v[j]`, which is what the discrete convexity inequality needs.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernels::{DiscreteKernel, TimeGrid, TOL_NN};

const START_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct NonlocalOperator {
    kernel: DiscreteKernel,
}

impl NonlocalOperator {
    /// Rejects kernels that are not nonnegative and nonincreasing within [`TOL_NN`].
    pub fn new(kernel: DiscreteKernel) -> Result<Self> {
        let neg = kernel.negativity_defect();
        if neg > TOL_NN {
            return Err(invalid("kernel", format!("negative weight (defect {neg:e})")));
        }
        let mono = kernel.monotonicity_defect();
        if mono > TOL_NN {
            return Err(invalid("kernel", format!("weights increase (defect {mono:e})")));
        }
        Ok(Self { kernel })
    }

    pub fn kernel(&self) -> &DiscreteKernel {
        &self.kernel
    }

    pub fn grid(&self) -> TimeGrid {
        self.kernel.grid()
    }

    fn check_trajectory(&self, len: usize) -> Result<()> {
        let expected = self.grid().steps() + 1;
        if len != expected {
            return Err(Error::GridMismatch {
                expected,
                found: len,
            });
        }
        Ok(())
    }

    /// `D[0..=N]` with `D[0] = 0`.
    pub fn apply(&self, v: &[f64], v0: f64) -> Result<Vec<f64>> {
        self.check_trajectory(v.len())?;
        if (v[0] - v0).abs() > START_TOL * (1.0 + v0.abs()) {
            return Err(Error::InitialMismatch {
                expected: v0,
                found: v[0],
            });
        }
        let k = self.kernel.weights();
        let dv: Vec<f64> = v.windows(2).map(|p| p[1] - p[0]).collect();
        let mut d = vec![0.0; v.len()];
        for n in 1..v.len() {
            let mut acc = 0.0;
            for j in 1..=n {
                acc += k[n - j] * dv[j - 1];
            }
            d[n] = acc;
        }
        Ok(d)
    }

    /// Applies the operator to every spatial node of a trajectory `u[n][i]`.
    pub fn apply_field(&self, u: &[Vec<f64>], u0: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_trajectory(u.len())?;
        let width = u0.len();
        if let Some(row) = u.iter().find(|row| row.len() != width) {
            return Err(Error::GridMismatch {
                expected: width,
                found: row.len(),
            });
        }
        let mut out = vec![vec![0.0; width]; u.len()];
        let mut column = vec![0.0; u.len()];
        for i in 0..width {
            for (c, row) in column.iter_mut().zip(u) {
                *c = row[i];
            }
            let d = self.apply(&column, u0[i])?;
            for (row, d) in out.iter_mut().zip(d) {
                row[i] = d;
            }
        }
        Ok(out)
    }

    /// Splits `D[n] = diag * v[n] - rhs_history` for a known prefix `v[0..n]`.
    pub fn implicit_split(&self, history: &[f64]) -> Result<(f64, f64)> {
        let n = history.len();
        if n == 0 || n > self.grid().steps() {
            return Err(invalid("history", format!("prefix length {n} outside 1..=N")));
        }
        let k = self.kernel.weights();
        let mut rhs = k[0] * history[n - 1];
        for j in 1..n {
            rhs -= k[n - j] * (history[j] - history[j - 1]);
        }
        Ok((k[0], rhs))
    }

    /// Node-vector version of [`implicit_split`](Self::implicit_split).
    pub fn implicit_split_field(&self, history: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
        let n = history.len();
        if n == 0 || n > self.grid().steps() {
            return Err(invalid("history", format!("prefix length {n} outside 1..=N")));
        }
        let k = self.kernel.weights();
        let mut rhs: Vec<f64> = history[n - 1].iter().map(|v| k[0] * v).collect();
        for j in 1..n {
            let w = k[n - j];
            for ((r, a), b) in rhs.iter_mut().zip(&history[j]).zip(&history[j - 1]) {
                *r -= w * (a - b);
            }
        }
        Ok((k[0], rhs))
    }

    /// `min_n [H'(v[n]) D_v[n] - D_{H(v)}[n]]` over `n = 1..N`.
    pub fn convexity_margin(&self, h: &ConvexFn, v: &[f64], v0: f64) -> Result<f64> {
        let dv = self.apply(v, v0)?;
        let hv: Vec<f64> = v.iter().map(|x| h.value(*x)).collect();
        let dh = self.apply(&hv, h.value(v0))?;
        Ok((1..v.len())
            .map(|n| h.derivative(v[n]) * dv[n] - dh[n])
            .fold(f64::INFINITY, f64::min))
    }
}

/// Convex test functions with closed-form derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexFn {
    Linear { slope: f64 },
    Square,
    /// `sqrt(y^2 + eps^2) - eps`
    SmoothAbs { eps: f64 },
    Exp,
}

impl ConvexFn {
    pub fn value(&self, y: f64) -> f64 {
        match *self {
            Self::Linear { slope } => slope * y,
            Self::Square => y * y,
            Self::SmoothAbs { eps } => y.hypot(eps) - eps,
            Self::Exp => y.exp(),
        }
    }

    pub fn derivative(&self, y: f64) -> f64 {
        match *self {
            Self::Linear { slope } => slope,
            Self::Square => 2.0 * y,
            Self::SmoothAbs { eps } => y / y.hypot(eps),
            Self::Exp => y.exp(),
        }
    }
}
