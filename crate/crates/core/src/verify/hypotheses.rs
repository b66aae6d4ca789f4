//! Integrability exponents for the data `u0`, `f` under which the `L_inf` bound holds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `p' / q1 + d / (2 q2) = 1 - beta`; infinite exponents are `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataHypotheses {
    pub p: f64,
    pub q1: f64,
    pub q2: f64,
    pub beta: f64,
    pub d: usize,
}

fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

fn ratio(a: f64, q: f64) -> f64 {
    if q.is_infinite() {
        0.0
    } else {
        a / q
    }
}

pub fn check_exponents(p: f64, q1: f64, q2: f64, d: usize) -> Result<DataHypotheses> {
    if !(p > 1.0) {
        return Err(Error::Hypothesis(format!("p = {p} must exceed 1")));
    }
    if d == 0 {
        return Err(Error::Hypothesis("dimension must be positive".into()));
    }
    for (name, q) in [("q1", q1), ("q2", q2)] {
        if !(q >= 1.0) {
            return Err(Error::Hypothesis(format!("{name} = {q} must lie in [1, inf]")));
        }
    }
    let pc = if p.is_infinite() { 1.0 } else { conjugate(p) };
    let beta = 1.0 - ratio(pc, q1) - ratio(d as f64, 2.0 * q2);
    let tol = 1e-12;
    if d == 1 {
        if !(beta > 0.0 && beta < 0.5) {
            return Err(Error::Hypothesis(format!("beta = {beta} outside (0, 1/2) for d = 1")));
        }
        let lo = pc / (1.0 - beta);
        let hi = 2.0 * pc / (1.0 - 2.0 * beta);
        if q1 < lo * (1.0 - tol) || q1 > hi * (1.0 + tol) {
            return Err(Error::Hypothesis(format!("q1 = {q1} outside [{lo}, {hi}]")));
        }
    } else {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::Hypothesis(format!("beta = {beta} outside (0, 1) for d = {d}")));
        }
        let lo1 = pc / (1.0 - beta);
        if q1 < lo1 * (1.0 - tol) {
            return Err(Error::Hypothesis(format!("q1 = {q1} below {lo1}")));
        }
        let lo2 = d as f64 / (2.0 * (1.0 - beta));
        if q2 < lo2 * (1.0 - tol) {
            return Err(Error::Hypothesis(format!("q2 = {q2} below {lo2}")));
        }
    }
    Ok(DataHypotheses { p, q1, q2, beta, d })
}

/// Admissible exponents in `d = 1` for bounded `f`: `q2 = inf`, `beta = 1/4`, `q1 = p' / (1 - beta)`.
pub fn bounded_data_exponents(p: f64) -> Result<DataHypotheses> {
    if !(p > 1.0) {
        return Err(Error::Hypothesis(format!("p = {p} must exceed 1")));
    }
    let q1 = conjugate(p) / 0.75;
    check_exponents(p, q1, f64::INFINITY, 1)
}
