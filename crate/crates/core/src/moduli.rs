//! Osgood moduli, the iterated-logarithm family `ω_k`, numerical Osgood
//! checks and the Bihari-type bound built on `Ω(r) = ∫_{u0}^r ds/ω(s)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::derivator::Derivator;
use crate::error::{Error, Result};
use crate::quadrature;

/// `exp` applied `k` times.
pub fn exp_iter(k: u32, t: f64) -> Result<f64> {
    if !t.is_finite() {
        return Err(Error::domain(format!("exp_iter of non-finite {t}")));
    }
    let mut x = t;
    for j in 1..=k {
        x = x.exp();
        if !x.is_finite() {
            return Err(Error::Overflow(format!("exp^[{j}]({t}) exceeds f64 range")));
        }
    }
    Ok(x)
}

/// `log` applied `k ≥ 1` times; needs `t > exp^[k-1](0)`.
pub fn log_iter(k: u32, t: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::domain("log_iter needs k >= 1"));
    }
    let mut x = t;
    for j in 1..=k {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::domain(format!(
                "log^[{k}]({t}) undefined: argument of the {j}-th log is {x}"
            )));
        }
        x = x.ln();
    }
    Ok(x)
}

/// Largest supported index of the `ω_k` family; `e_4` is far beyond `f64`.
pub const OMEGA_K_MAX: u32 = 3;

/// `ω_k(t) = t·∏_{j=1}^k log^[j](1/t)` on `(0, 1/e_k)`, 0 at 0, and the constant
/// `(1/e_k²)·∏_{j=1}^k e_j` from `1/e_k` on, where `e_j = exp^[j](1)`.
pub fn omega_k(k: u32, t: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::domain("omega_k needs k >= 1"));
    }
    if k > OMEGA_K_MAX {
        return Err(Error::Overflow(format!(
            "omega_k with k = {k}: e_{k} does not fit in f64 (k <= {OMEGA_K_MAX})"
        )));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::domain(format!(
            "omega_k argument {t} must be a finite nonnegative real"
        )));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let e_k = exp_iter(k, 1.0)?;
    if t < 1.0 / e_k {
        let mut log = -t.ln();
        let mut prod = log;
        for _ in 2..=k {
            log = log.ln();
            prod *= log;
        }
        Ok(t * prod)
    } else {
        Ok(omega_k_plateau(k))
    }
}

fn omega_k_plateau(k: u32) -> f64 {
    let mut prod = 1.0;
    let mut e = 1.0f64;
    for _ in 1..=k {
        e = e.exp();
        prod *= e;
    }
    prod / (e * e)
}

/// A modulus of continuity `ω: [0, ∞) → [0, ∞)`.
#[derive(Clone)]
pub struct OsgoodModulus {
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    name: String,
    known_osgood: Option<bool>,
}

impl fmt::Debug for OsgoodModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OsgoodModulus")
            .field("name", &self.name)
            .field("known_osgood", &self.known_osgood)
            .finish()
    }
}

impl OsgoodModulus {
    pub fn new<F>(name: impl Into<String>, eval: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        OsgoodModulus {
            eval: Arc::new(eval),
            name: name.into(),
            known_osgood: None,
        }
    }

    pub fn with_known_osgood(mut self, known: bool) -> Self {
        self.known_osgood = Some(known);
        self
    }

    /// `ω(s) = s`.
    pub fn linear() -> Self {
        OsgoodModulus::new("linear", |s| s).with_known_osgood(true)
    }

    /// `ω(s) = s^p`, `p > 0`.
    pub fn power(p: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::config(format!("power modulus needs p > 0, got {p}")));
        }
        Ok(OsgoodModulus::new(format!("power({p})"), move |s: f64| s.powf(p)).with_known_osgood(p >= 1.0))
    }

    pub fn omega_k(k: u32) -> Result<Self> {
        omega_k(k, 0.0)?;
        Ok(
            OsgoodModulus::new(format!("omega_k({k})"), move |s| omega_k(k, s).unwrap_or(f64::NAN))
                .with_known_osgood(true),
        )
    }

    pub fn eval(&self, s: f64) -> f64 {
        (self.eval)(s)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn known_osgood(&self) -> Option<bool> {
        self.known_osgood
    }

    /// Checks `ω(0) = 0`, positivity and monotonicity on a logarithmic grid of `(0, 1e6]`.
    pub fn validate_sampled(&self) -> Result<()> {
        let zero = self.eval(0.0);
        if zero != 0.0 {
            return Err(Error::config(format!("{}: omega(0) = {zero}, expected 0", self.name)));
        }
        let mut prev = 0.0;
        for k in 0..=360 {
            let s = 10f64.powf(-30.0 + k as f64 / 10.0);
            let v = self.eval(s);
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!(
                    "{}: omega({s:e}) = {v} is not positive",
                    self.name
                )));
            }
            if v < prev {
                return Err(Error::config(format!("{}: omega decreases near s = {s:e}", self.name)));
            }
            prev = v;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OsgoodVerdict {
    Divergent,
    Convergent,
    Inconclusive,
}

impl fmt::Display for OsgoodVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OsgoodVerdict::Divergent => "DIVERGENT",
            OsgoodVerdict::Convergent => "CONVERGENT",
            OsgoodVerdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

/// Partial Osgood integrals `I(ε_m) = ∫_{ε_m}^{u0} ds/ω(s)` and the verdict
/// drawn from their growth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OsgoodReport {
    pub modulus: String,
    pub u0: f64,
    pub verdict: OsgoodVerdict,
    pub epsilons: Vec<f64>,
    pub partial_integrals: Vec<f64>,
    /// `I(ε_{m+1}) − I(ε_m)`.
    pub increments: Vec<f64>,
    /// Ratios of consecutive increments over the decades used for the verdict.
    pub tail_ratios: Vec<f64>,
}

pub const OSGOOD_DECADES: i32 = 12;
const TAIL_DECADES: usize = 6;
const CONVERGENT_RATIO: f64 = 0.5;
const FLAT_RATIO: f64 = 1.0 - 1e-6;
const SLOW_DECAY_RATIO: f64 = 0.84;

/// `∫_a^b ds/ω(s)` computed in the variable `x = ln s`.
fn reciprocal_integral(omega: &OsgoodModulus, a: f64, b: f64) -> Result<f64> {
    let bad = std::cell::Cell::new(None);
    let integrand = |x: f64| {
        let s = x.exp();
        let w = omega.eval(s);
        if !(w > 0.0 && w.is_finite()) {
            bad.set(Some((s, w)));
            return 0.0;
        }
        s / w
    };
    let (sign, lo, hi) = if a <= b { (1.0, a, b) } else { (-1.0, b, a) };
    let v = quadrature::adaptive(integrand, lo.ln(), hi.ln(), 1e-15, 1e-12)?;
    if let Some((s, w)) = bad.get() {
        return Err(Error::Numeric(format!(
            "{}: omega({s:e}) = {w} is not a positive finite value",
            omega.name()
        )));
    }
    Ok(sign * v)
}

/// Numerical test of `lim_{ε→0+} ∫_ε^{u0} ds/ω(s) = +∞`.
///
/// Over `ε_m = 10^-m`, `m = 1..12`, the increments `D_m = I(ε_{m+1}) − I(ε_m)`
/// of the last six decades decide the verdict: CONVERGENT when every ratio
/// `D_{m+1}/D_m` is below 0.5, DIVERGENT when the increments do not decay at
/// all or decay ever more slowly (ratios strictly increasing, the last one at
/// least 0.84), INCONCLUSIVE otherwise.
pub fn osgood_check(omega: &OsgoodModulus, u0: f64) -> Result<OsgoodReport> {
    if !(u0 > 0.0 && u0.is_finite()) {
        return Err(Error::domain(format!("u0 = {u0} must be positive")));
    }
    let epsilons: Vec<f64> = (1..=OSGOOD_DECADES).map(|m| 10f64.powi(-m)).collect();
    let mut partial = Vec::with_capacity(epsilons.len());
    partial.push(reciprocal_integral(omega, epsilons[0], u0)?);
    let mut increments = Vec::with_capacity(epsilons.len() - 1);
    for w in epsilons.windows(2) {
        let d = reciprocal_integral(omega, w[1], w[0])?;
        increments.push(d);
        partial.push(partial.last().copied().unwrap_or(0.0) + d);
    }
    let tail = &increments[increments.len() - TAIL_DECADES..];
    let tail_ratios: Vec<f64> = tail.windows(2).map(|w| w[1] / w[0]).collect();

    let last = *tail_ratios.last().expect("six decades give five ratios");
    let verdict = if tail_ratios.iter().all(|&r| r < CONVERGENT_RATIO) {
        OsgoodVerdict::Convergent
    } else if tail_ratios.iter().all(|&r| r >= FLAT_RATIO)
        || (tail_ratios.windows(2).all(|w| w[1] > w[0]) && last >= SLOW_DECAY_RATIO)
    {
        OsgoodVerdict::Divergent
    } else {
        OsgoodVerdict::Inconclusive
    };
    Ok(OsgoodReport {
        modulus: omega.name().to_string(),
        u0,
        verdict,
        epsilons,
        partial_integrals: partial,
        increments,
        tail_ratios,
    })
}

const TABLE_HALF_WIDTH: f64 = 40.0;
const TABLE_INTERVALS: usize = 2048;
/// Smallest `dΩ/d ln r` per unit `|Ω|` kept in the table.
const INVERSE_RESOLUTION: f64 = 1e-6;

/// Tabulated `Ω(r) = ∫_{u0}^r ds/ω(s)` and its inverse.
///
/// Nodes are uniform in `x = ln r` over `ln u0 ± 40`. Between nodes Ω is a
/// monotone cubic Hermite interpolant whose node slopes are the exact
/// derivative `dΩ/dx = r/ω(r)`.
#[derive(Debug, Clone)]
pub struct OmegaTransform {
    u0: f64,
    modulus: OsgoodModulus,
    xs: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl OmegaTransform {
    pub fn new(modulus: OsgoodModulus, u0: f64) -> Result<Self> {
        if !(u0 > 0.0 && u0.is_finite()) {
            return Err(Error::domain(format!("u0 = {u0} must be positive")));
        }
        let center = u0.ln();
        let half = TABLE_INTERVALS / 2;
        let step = TABLE_HALF_WIDTH / half as f64;
        let xs: Vec<f64> = (0..=TABLE_INTERVALS)
            .map(|i| center + (i as f64 - half as f64) * step)
            .collect();
        let mut values = vec![0.0; xs.len()];
        for i in half + 1..xs.len() {
            values[i] = values[i - 1] + reciprocal_integral(&modulus, xs[i - 1].exp(), xs[i].exp())?;
        }
        for i in (0..half).rev() {
            values[i] = values[i + 1] - reciprocal_integral(&modulus, xs[i].exp(), xs[i + 1].exp())?;
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("Omega table has non-finite value {v}")));
        }
        let raw_slopes: Vec<f64> = xs
            .iter()
            .map(|x| {
                let r = x.exp();
                r / modulus.eval(r)
            })
            .collect();
        // Where Ω saturates (α or β finite) it flattens out below what f64 can
        // invert to 1e-8 in r; the table keeps the run of nodes around u0 that
        // are strictly increasing and resolved.
        let usable = |i: usize| raw_slopes[i] >= INVERSE_RESOLUTION * values[i].abs();
        let mut hi = half;
        while hi < TABLE_INTERVALS && values[hi + 1] > values[hi] && usable(hi + 1) {
            hi += 1;
        }
        let mut lo = half;
        while lo > 0 && values[lo - 1] < values[lo] && usable(lo - 1) {
            lo -= 1;
        }
        if hi == half || lo == half {
            return Err(Error::Numeric("Omega is not strictly increasing around u0".into()));
        }
        let xs = xs[lo..=hi].to_vec();
        let values = values[lo..=hi].to_vec();
        let mut slopes = raw_slopes[lo..=hi].to_vec();
        // Fritsch–Carlson limiter.
        for i in 0..xs.len() - 1 {
            let secant = (values[i + 1] - values[i]) / step;
            let a = slopes[i] / secant;
            let b = slopes[i + 1] / secant;
            let s = a * a + b * b;
            if s > 9.0 {
                let tau = 3.0 / s.sqrt();
                slopes[i] = tau * a * secant;
                slopes[i + 1] = tau * b * secant;
            }
        }
        Ok(OmegaTransform {
            u0,
            modulus,
            xs,
            values,
            slopes,
        })
    }

    pub fn u0(&self) -> f64 {
        self.u0
    }

    pub fn modulus(&self) -> &OsgoodModulus {
        &self.modulus
    }

    /// Tabulated range `[r_lo, r_hi]`.
    pub fn range(&self) -> (f64, f64) {
        (self.xs[0].exp(), self.xs[self.last()].exp())
    }

    /// Estimate of `α = lim_{r→0+} Ω(r)`, the table's lowest value.
    pub fn alpha(&self) -> f64 {
        self.values[0]
    }

    /// Estimate of `β = lim_{r→∞} Ω(r)`, the table's highest value.
    pub fn beta(&self) -> f64 {
        self.values[self.last()]
    }

    fn last(&self) -> usize {
        self.xs.len() - 1
    }

    fn step(&self) -> f64 {
        self.xs[1] - self.xs[0]
    }

    fn hermite(&self, i: usize, x: f64) -> f64 {
        let h = self.step();
        let s = (x - self.xs[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.values[i] + h10 * h * self.slopes[i] + h01 * self.values[i + 1] + h11 * h * self.slopes[i + 1]
    }

    fn at_log(&self, x: f64) -> f64 {
        let i = (((x - self.xs[0]) / self.step()).floor().max(0.0) as usize).min(self.last() - 1);
        self.hermite(i, x)
    }

    /// `Ω(r)` for `r` in the tabulated range.
    pub fn eval(&self, r: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        if !(r >= lo && r <= hi) {
            return Err(Error::domain(format!(
                "r = {r:e} outside the tabulated range [{lo:e}, {hi:e}]"
            )));
        }
        if r == self.u0 {
            return Ok(0.0);
        }
        Ok(self.at_log(r.ln()))
    }

    /// `Ω⁻¹(v)` by bisection on the monotone interpolant.
    pub fn inverse(&self, v: f64) -> Result<f64> {
        let (a, b) = (self.alpha(), self.beta());
        if !(v >= a && v <= b) {
            return Err(Error::domain(format!(
                "{v} outside the tabulated range of Omega [{a}, {b}]"
            )));
        }
        if v == 0.0 {
            return Ok(self.u0);
        }
        let i = self.values.partition_point(|&w| w <= v).clamp(1, self.last()) - 1;
        let (mut lo, mut hi) = (self.xs[i], self.xs[i + 1]);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.hermite(i, mid) < v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((0.5 * (lo + hi)).exp())
    }
}

/// `t ↦ Ω⁻¹(Ω(κ) + h(t) − h(a))` on `[a, b]`.
#[derive(Debug, Clone)]
pub struct BihariBound {
    kappa: f64,
    omega_kappa: f64,
    h: Derivator,
    a: f64,
    b: f64,
    h_a: f64,
    transform: OmegaTransform,
}

impl BihariBound {
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= self.a && t <= self.b) {
            return Err(Error::domain(format!("t = {t} outside [{}, {}]", self.a, self.b)));
        }
        self.at_rise(self.h.eval(t)? - self.h_a)
    }

    /// Right limit of the bound at `t ∈ [a, b)`.
    pub fn eval_right(&self, t: f64) -> Result<f64> {
        if !(t >= self.a && t < self.b) {
            return Err(Error::domain(format!("t = {t} outside [{}, {})", self.a, self.b)));
        }
        self.at_rise(self.h.eval_right(t)? - self.h_a)
    }

    fn at_rise(&self, rise: f64) -> Result<f64> {
        if rise == 0.0 {
            return Ok(self.kappa);
        }
        self.transform.inverse(self.omega_kappa + rise)
    }
}

/// The Bihari-type bound; requires `Ω(κ) + h(b) − h(a) < β`.
pub fn bihari_bound(kappa: f64, h: &Derivator, a: f64, b: f64, transform: &OmegaTransform) -> Result<BihariBound> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::domain(format!("kappa = {kappa} must be positive")));
    }
    if !(a <= b) {
        return Err(Error::domain(format!("[{a}, {b}] is empty")));
    }
    let omega_kappa = transform.eval(kappa)?;
    let h_a = h.eval(a)?;
    let value = omega_kappa + h.eval(b)? - h_a;
    let beta = transform.beta();
    if !(value < beta) {
        return Err(Error::BoundInapplicable { value, beta });
    }
    Ok(BihariBound {
        kappa,
        omega_kappa,
        h: h.clone(),
        a,
        b,
        h_a,
        transform: transform.clone(),
    })
}
