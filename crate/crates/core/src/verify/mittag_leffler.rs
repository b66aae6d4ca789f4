//! One-parameter Mittag-Leffler function on the negative real axis.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quad;

/// Radius below which the power series is summed directly.
pub const SERIES_RADIUS: f64 = 1.0;

/// Neumaier-compensated power series `sum_k z^k / Gamma(alpha k + 1)`, with at most `max_terms` terms.
pub fn mittag_leffler_series(alpha: f64, z: f64, max_terms: usize) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    let mut pow = 1.0_f64;
    for k in 0..max_terms {
        let arg = alpha * k as f64 + 1.0;
        if arg > 170.0 {
            break;
        }
        let term = if k == 0 { 1.0 } else { pow / gamma(arg) };
        let t = sum + term;
        comp += if sum.abs() >= term.abs() {
            (sum - t) + term
        } else {
            (term - t) + sum
        };
        sum = t;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) && k > 2 {
            break;
        }
        pow *= z;
    }
    sum + comp
}

/// `E_alpha(z)` for `alpha in (0, 1]` and `z <= 0`.
///
/// The series is used for `|z| <= 1`. Beyond that, the representation
/// `E_alpha(-x) = sin(alpha pi)/(alpha pi) int_0^inf exp(-(rho x)^{1/alpha}) / (rho^2 + 2 rho cos(alpha pi) + 1) drho`
/// is integrated after the substitution `sigma = rho x`, which keeps the
/// exponential factor independent of `x`.
pub fn mittag_leffler(alpha: f64, z: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::MittagLeffler(format!("alpha = {alpha} outside (0, 1]")));
    }
    if !(z <= 0.0 && z.is_finite()) {
        return Err(Error::MittagLeffler(format!("argument {z} must be finite and nonpositive")));
    }
    if alpha == 1.0 {
        return Ok(z.exp());
    }
    if -z <= SERIES_RADIUS {
        return Ok(mittag_leffler_series(alpha, z, 400));
    }
    let x = -z;
    let c = (alpha * PI).cos();
    let upper = 745f64.powf(alpha);
    let integrand = |s: f64| (-s.powf(1.0 / alpha)).exp() * x * x / (s * s + 2.0 * s * x * c + x * x);
    // near alpha = 1 the denominator has a sharp minimum of width x sin(alpha pi) at sigma = x
    let w = x * (alpha * PI).sin();
    let mut cuts = vec![0.0, (x - w).max(0.0), x, x + w, upper];
    cuts.iter_mut().for_each(|c| *c = c.min(upper));
    cuts.dedup();
    let mut total = 0.0;
    for p in cuts.windows(2) {
        total += match quad::integrate(integrand, p[0], p[1], 1e-300, 1e-13, 8000) {
            Ok(v) => v,
            // error estimates stall at rounding level; accept those
            Err(f) if f.error <= 1e-11 * f.estimate.abs() => f.estimate,
            Err(f) => {
                return Err(Error::MittagLeffler(format!(
                    "quadrature failed at z = {z} (error {:e})",
                    f.error
                )))
            }
        };
    }
    Ok((alpha * PI).sin() / (alpha * PI * x) * total)
}
