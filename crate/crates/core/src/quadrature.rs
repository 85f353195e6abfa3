//! Gauss–Legendre rules and an adaptive Gauss–Kronrod integrator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nodes and weights of an `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes the rule by Newton iteration on the Legendre polynomial `P_n`.
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 || order > 256 {
            return Err(Error::config(format!(
                "Gauss-Legendre order {order} out of range 1..=256"
            )));
        }
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
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
            if d.is_finite() {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(GaussLegendre { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Applies the rule on `[a, b]`, stopping at the first error.
    pub fn integrate<F>(&self, a: f64, b: f64, mut f: F) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x)?;
        }
        Ok(acc * half)
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Composite Gauss–Legendre settings used for the continuous part of
/// Lebesgue–Stieltjes integrals: `panels` equal panels per linear piece,
/// each integrated with an `order`-point rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    pub order: usize,
    pub panels: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig { order: 8, panels: 64 }
    }
}

impl QuadConfig {
    pub fn new(order: usize, panels: usize) -> Result<Self> {
        if panels == 0 {
            return Err(Error::config("panel count must be positive"));
        }
        GaussLegendre::new(order)?;
        Ok(QuadConfig { order, panels })
    }
}

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
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// 15-point Kronrod estimate and its difference from the embedded 7-point Gauss rule.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, (kronrod - gauss).abs() * h)
}

/// Adaptive Gauss–Kronrod (7/15) integration by recursive bisection until the
/// local error estimate falls below `abs_tol + rel_tol·|I|`.
pub fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut stack = vec![(a, b, 0u32)];
    let (whole, _) = gk15(&f, a, b);
    let scale = whole.abs();
    let mut total = 0.0;
    while let Some((lo, hi, depth)) = stack.pop() {
        let (est, err) = gk15(&f, lo, hi);
        if !est.is_finite() || !err.is_finite() {
            return Err(Error::Numeric(format!("non-finite integrand on [{lo}, {hi}]")));
        }
        let width_share = (hi - lo).abs() / (b - a).abs();
        let allowed = (abs_tol + rel_tol * scale.max(est.abs())) * width_share.max(1e-3);
        if err <= allowed || depth >= 50 {
            if depth >= 50 && err > 1e3 * allowed {
                return Err(Error::Numeric(format!(
                    "adaptive quadrature failed to converge on [{lo}, {hi}]"
                )));
            }
            total += est;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    Ok(total)
}
