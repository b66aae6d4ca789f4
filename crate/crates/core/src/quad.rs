//! Quadrature rules and the few special functions the kernel families need.
//!
//! Gamma-type functions come from `statrs`; the exponential integral is
//! evaluated here because only its scaled form `e^t E1(t)` is ever needed.

use std::f64::consts::PI;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Gauss–Kronrod panel: (integral, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = hw * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kron * hw, ((kron - gauss) * hw).abs())
}

/// Outcome of an adaptive integration that ran out of budget.
#[derive(Debug, Clone, Copy)]
pub struct QuadFailure {
    pub estimate: f64,
    pub error: f64,
}

/// Globally adaptive Gauss–Kronrod integration on `[a, b]`.
///
/// Panels with the largest error estimate are bisected until the summed
/// estimate drops below `max(abs_tol, rel_tol * |I|)` or `max_panels` is hit.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<f64, QuadFailure> {
    if a == b {
        return Ok(0.0);
    }
    let (i0, e0) = gk15(&f, a, b);
    let mut panels = vec![(a, b, i0, e0)];
    let mut total = i0;
    let mut err = e0;
    while err > abs_tol.max(rel_tol * total.abs()) {
        if panels.len() >= max_panels {
            return Err(QuadFailure {
                estimate: total,
                error: err,
            });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, p)| {
                if p.3 > acc.1 {
                    (i, p.3)
                } else {
                    acc
                }
            });
        let (pa, pb, pi, pe) = panels.swap_remove(worst);
        let mid = 0.5 * (pa + pb);
        let (li, le) = gk15(&f, pa, mid);
        let (ri, re) = gk15(&f, mid, pb);
        total += li + ri - pi;
        err += le + re - pe;
        panels.push((pa, mid, li, le));
        panels.push((mid, pb, ri, re));
        // re-sum occasionally so cancellation in the running totals cannot drift
        if panels.len() % 64 == 0 {
            total = panels.iter().map(|p| p.2).sum();
            err = panels.iter().map(|p| p.3).sum();
        }
    }
    Ok(panels.iter().map(|p| p.2).sum())
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// `e^t E1(t)` for `t > 0`.
pub fn scaled_exp_integral(t: f64) -> f64 {
    debug_assert!(t > 0.0);
    if t <= 1.0 {
        (t.exp()) * (-EULER_GAMMA - t.ln() + exp_integral_series(t))
    } else {
        // modified Lentz on the continued fraction of e^t E1(t)
        let tiny = 1e-300;
        let mut b = t + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..1000 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h
    }
}

/// `sum_{k>=1} (-1)^{k+1} t^k / (k k!)`, so that `E1(t) = -gamma - ln t + series`.
fn exp_integral_series(t: f64) -> f64 {
    let mut sum = 0.0;
    let mut fact = 1.0;
    let mut pow = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        fact *= kf;
        pow *= -t;
        let term = -pow / (kf * fact);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Antiderivative of `e^t E1(t)` normalised to vanish at `t = 0`.
///
/// Uses `d/dt [e^t E1(t) + ln t] = e^t E1(t)` and the limit `-gamma` at zero.
pub fn scaled_exp_integral_primitive(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t <= 1.0 {
        -(t.exp_m1()) * (EULER_GAMMA + t.ln()) + t.exp() * exp_integral_series(t)
    } else {
        scaled_exp_integral(t) + t.ln() + EULER_GAMMA
    }
}

/// `integral_a^b e^t E1(t) dt` without cancellation for large arguments.
pub fn scaled_exp_integral_between(a: f64, b: f64) -> f64 {
    if a > 1.0 {
        scaled_exp_integral(b) - scaled_exp_integral(a) + ((b - a) / a).ln_1p()
    } else {
        scaled_exp_integral_primitive(b) - scaled_exp_integral_primitive(a)
    }
}
