//! The constitutive function `phi`, its truncation outside `[-M, M]` and the
//! `eps`-perturbation `phi + eps id`.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::quad;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Law {
    Linear {
        slope: f64,
    },
    /// `|r|^{m-1} r`
    Power {
        exponent: f64,
    },
    Custom {
        phi: ScalarFn,
        dphi: ScalarFn,
        /// Global lower bound on `phi'`, if positive.
        lower_slope: Option<f64>,
    },
}

impl fmt::Debug for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Linear { slope } => write!(f, "Linear({slope})"),
            Self::Power { exponent } => write!(f, "Power({exponent})"),
            Self::Custom { lower_slope, .. } => write!(f, "Custom(lower_slope = {lower_slope:?})"),
        }
    }
}

impl Law {
    fn phi(&self, r: f64) -> f64 {
        match self {
            Self::Linear { slope } => slope * r,
            Self::Power { exponent } => r.abs().powf(exponent - 1.0) * r,
            Self::Custom { phi, .. } => phi(r),
        }
    }

    fn dphi(&self, r: f64) -> f64 {
        match self {
            Self::Linear { slope } => *slope,
            Self::Power { exponent } => {
                if *exponent == 1.0 {
                    1.0
                } else {
                    exponent * r.abs().powf(exponent - 1.0)
                }
            }
            Self::Custom { dphi, .. } => dphi(r),
        }
    }

    fn primitive(&self, r: f64) -> f64 {
        match self {
            Self::Linear { slope } => 0.5 * slope * r * r,
            Self::Power { exponent } => r.abs().powf(exponent + 1.0) / (exponent + 1.0),
            Self::Custom { phi, .. } => {
                let (a, b, sign) = if r >= 0.0 { (0.0, r, 1.0) } else { (r, 0.0, -1.0) };
                let i = quad::integrate(|s| phi(s), a, b, 1e-15, 1e-12, 200).unwrap_or_else(|f| f.estimate);
                sign * i
            }
        }
    }

    fn lower_slope(&self) -> f64 {
        match self {
            Self::Linear { slope } => *slope,
            Self::Power { exponent } => {
                if *exponent == 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Custom { lower_slope, .. } => lower_slope.unwrap_or(0.0),
        }
    }
}

/// `phi` with the structural data `mu`, `R` of the growth condition
/// `phi'(r) >= mu` for `|r| >= R`, an optional truncation bound and an `eps`-shift.
#[derive(Debug, Clone)]
pub struct Nonlinearity {
    law: Law,
    mu: f64,
    threshold: f64,
    bound: Option<f64>,
    eps: f64,
}

impl Nonlinearity {
    pub fn linear(slope: f64) -> Result<Self> {
        if !(slope > 0.0 && slope.is_finite()) {
            return Err(invalid("slope", format!("must be positive, got {slope}")));
        }
        Ok(Self {
            law: Law::Linear { slope },
            mu: slope,
            threshold: 0.0,
            bound: None,
            eps: 0.0,
        })
    }

    /// Porous-medium law `|r|^{m-1} r` with `R = 1` and `mu = m`.
    pub fn power(exponent: f64) -> Result<Self> {
        if !(exponent >= 1.0 && exponent.is_finite()) {
            return Err(invalid("exponent", format!("must be at least 1, got {exponent}")));
        }
        Ok(Self {
            law: Law::Power { exponent },
            mu: exponent,
            threshold: 1.0,
            bound: None,
            eps: 0.0,
        })
    }

    pub fn custom<F, G>(phi: F, dphi: G, mu: f64, threshold: f64, lower_slope: Option<f64>) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let n = Self {
            law: Law::Custom {
                phi: Arc::new(phi),
                dphi: Arc::new(dphi),
                lower_slope,
            },
            mu,
            threshold,
            bound: None,
            eps: 0.0,
        };
        n.validate()?;
        Ok(n)
    }

    /// Replaces `R` and `mu`; validated against the law.
    pub fn with_growth(mut self, threshold: f64, mu: f64) -> Result<Self> {
        self.threshold = threshold;
        self.mu = mu;
        self.validate()?;
        Ok(self)
    }

    pub fn law(&self) -> &Law {
        &self.law
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn bound(&self) -> Option<f64> {
        self.bound
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// True when `phi` is affine, so that the frozen-coefficient problem does not depend on the iterate.
    pub fn is_affine(&self) -> bool {
        matches!(self.law, Law::Linear { .. })
            || matches!(self.law, Law::Power { exponent } if exponent == 1.0)
    }

    /// Global lower bound on the slope, including `eps`.
    pub fn lower_slope(&self) -> f64 {
        self.law.lower_slope() + self.eps
    }

    /// True when `phi'` has no positive lower bound before the `eps`-shift.
    pub fn is_degenerate(&self) -> bool {
        self.law.lower_slope() <= 0.0
    }

    pub fn phi(&self, r: f64) -> f64 {
        let base = match self.bound {
            Some(m) if r > m => self.law.phi(m) + self.law.dphi(m) * (r - m),
            Some(m) if r < -m => self.law.phi(-m) + self.law.dphi(-m) * (r + m),
            _ => self.law.phi(r),
        };
        base + self.eps * r
    }

    pub fn dphi(&self, r: f64) -> f64 {
        let base = match self.bound {
            Some(m) if r > m => self.law.dphi(m),
            Some(m) if r < -m => self.law.dphi(-m),
            _ => self.law.dphi(r),
        };
        base + self.eps
    }

    /// `Phi(r) = int_0^r phi(s) ds`.
    pub fn primitive(&self, r: f64) -> f64 {
        let base = match self.bound {
            Some(m) if r > m => {
                let d = r - m;
                self.law.primitive(m) + self.law.phi(m) * d + 0.5 * self.law.dphi(m) * d * d
            }
            Some(m) if r < -m => {
                let d = r + m;
                self.law.primitive(-m) + self.law.phi(-m) * d + 0.5 * self.law.dphi(-m) * d * d
            }
            _ => self.law.primitive(r),
        };
        base + 0.5 * self.eps * r * r
    }

    /// `(phi(b) - phi(a)) / (b - a)`, or `phi'` at the midpoint when `a` and `b` nearly coincide.
    ///
    /// Clipped below at [`lower_slope`](Self::lower_slope) so rounding cannot
    /// produce a slope outside the admissible range.
    pub fn secant(&self, a: f64, b: f64) -> f64 {
        let d = b - a;
        let s = if d.abs() <= 1e-7 * (1.0 + a.abs() + b.abs()) {
            self.dphi(0.5 * (a + b))
        } else {
            (self.phi(b) - self.phi(a)) / d
        };
        s.max(self.lower_slope())
    }

    /// `phi` on `[-M, M]`, continued affinely with matching value and slope outside.
    ///
    /// `M` should exceed `R`; smaller values are accepted but the growth bound
    /// then only holds in the truncated sense.
    pub fn truncate(&self, bound: f64) -> Result<Self> {
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(invalid("bound", format!("must be positive, got {bound}")));
        }
        let mut t = self.clone();
        t.bound = Some(bound);
        Ok(t)
    }

    /// `phi + eps id`.
    pub fn regularize(&self, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(invalid("eps", format!("must be positive, got {eps}")));
        }
        let mut r = self.clone();
        r.eps += eps;
        Ok(r)
    }

    /// `max phi'` over `[-M, M]` for a truncated law, sampled on 401 points.
    pub fn slope_bound(&self) -> Option<f64> {
        let m = self.bound?;
        Some(
            (0..=400)
                .map(|k| self.dphi(-m + 2.0 * m * k as f64 / 400.0))
                .fold(0.0, f64::max),
        )
    }

    /// Sampled structural checks: `phi(0) = 0`, `phi' >= 0`, growth beyond `R`, `Phi' = phi`.
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(invalid("mu", format!("must be positive, got {}", self.mu)));
        }
        if !(self.threshold >= 0.0 && self.threshold.is_finite()) {
            return Err(invalid("threshold", format!("must be nonnegative, got {}", self.threshold)));
        }
        if self.phi(0.0).abs() > 1e-14 {
            return Err(invalid("phi", format!("phi(0) = {} must vanish", self.phi(0.0))));
        }
        let span = self.threshold + 2.0;
        for k in 0..=200 {
            let r = -span + 2.0 * span * k as f64 / 200.0;
            let d = self.dphi(r);
            if !(d >= 0.0) {
                return Err(invalid("phi", format!("phi'({r}) = {d} is negative")));
            }
            if r.abs() >= self.threshold && d < self.mu * (1.0 - 1e-12) {
                return Err(invalid(
                    "mu",
                    format!("phi'({r}) = {d} below mu = {} outside [-R, R]", self.mu),
                ));
            }
            let step = 1e-5 * (1.0 + r.abs());
            let fd = (self.primitive(r + step) - self.primitive(r - step)) / (2.0 * step);
            if (fd - self.phi(r)).abs() > 1e-6 * (1.0 + self.phi(r).abs()) {
                return Err(invalid("phi", format!("primitive derivative mismatch at r = {r}")));
            }
        }
        Ok(())
    }
}
