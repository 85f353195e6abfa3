//! Numerical Stieltjes derivatives and the fundamental theorem of calculus
//! round trip.

use serde::{Deserialize, Serialize};

use crate::derivator::Derivator;
use crate::error::{Error, Result};
use crate::measure::Integrator;
use crate::quadrature::QuadConfig;

/// A real function sampled pointwise.
///
/// Implementors that know their right-hand jumps exactly (indefinite
/// integrals, derivators) report them through [`SampledFunction::right_increment`],
/// which turns the jump quotient into exact arithmetic.
pub trait SampledFunction {
    fn value(&self, t: f64) -> Result<f64>;

    /// `f(s) − f(t)`.
    fn difference(&self, s: f64, t: f64) -> Result<f64> {
        Ok(self.value(s)? - self.value(t)?)
    }

    /// Exact `f(t+) − f(t)` when available.
    fn right_increment(&self, _t: f64) -> Option<Result<f64>> {
        None
    }
}

impl<F: Fn(f64) -> f64> SampledFunction for F {
    fn value(&self, t: f64) -> Result<f64> {
        Ok(self(t))
    }
}

impl SampledFunction for Derivator {
    fn value(&self, t: f64) -> Result<f64> {
        self.eval(t)
    }

    fn right_increment(&self, t: f64) -> Option<Result<f64>> {
        Some(self.jump(t))
    }
}

/// Step sizes and acceptance rule for difference quotients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferencingConfig {
    pub h_sequence: Vec<f64>,
    pub richardson: bool,
    pub tol_match: f64,
}

impl Default for DifferencingConfig {
    fn default() -> Self {
        DifferencingConfig {
            h_sequence: (4..=20).map(|k| 0.5f64.powi(k)).collect(),
            richardson: true,
            tol_match: 1e-6,
        }
    }
}

impl DifferencingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.h_sequence.len() < 2 {
            return Err(Error::config("h_sequence needs at least two steps"));
        }
        if self.h_sequence.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::config("steps must be positive"));
        }
        if self.h_sequence.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(Error::config("steps must be strictly decreasing"));
        }
        if !(self.tol_match > 0.0) {
            return Err(Error::config("tol_match must be positive"));
        }
        Ok(())
    }
}

/// Guard below which `|g(s) − g(t)|` is treated as numerically constant.
const FLAT_GUARD: f64 = 1e-14;

/// The `g`-derivative of `f` at `t`.
///
/// At a jump of `g` this is the exact quotient `(f(t+) − f(t)) / Δg(t)`, with
/// `f(t+)` taken from the function when it knows it and extrapolated over the
/// step sequence otherwise. At continuity points of `g`, one-sided quotients
/// are formed on each usable side, accelerated when `richardson` is set, and
/// must agree within `tol_match`; their average is returned.
pub fn stieltjes_derivative<F>(f: &F, g: &Derivator, t: f64, cfg: &DifferencingConfig) -> Result<f64>
where
    F: SampledFunction + ?Sized,
{
    cfg.validate()?;
    let delta = g.jump(t)?;
    if g.classify().in_constancy(t) {
        return Err(Error::DerivativeUndefined {
            t,
            reason: "t lies in the constancy set of g".into(),
        });
    }
    if delta > 0.0 {
        let increment = match f.right_increment(t) {
            Some(inc) => inc?,
            None => right_limit_increment(f, g, t, cfg)?,
        };
        return Ok(increment / delta);
    }

    let right = one_sided(f, g, t, 1.0, cfg)?;
    let left = one_sided(f, g, t, -1.0, cfg)?;
    match (left, right) {
        (Some(l), Some(r)) => {
            let scale = 1.0f64.max(l.abs()).max(r.abs());
            if (l - r).abs() <= cfg.tol_match * scale {
                Ok(0.5 * (l + r))
            } else {
                Err(Error::NoDerivative { t, left: l, right: r })
            }
        }
        (Some(v), None) | (None, Some(v)) => Ok(v),
        (None, None) => Err(Error::DerivativeUndefined {
            t,
            reason: "g is numerically constant on every trial step".into(),
        }),
    }
}

/// Estimates `f(t+) − f(t)` from `f(t+h) − f(t)` over the step sequence.
fn right_limit_increment<F>(f: &F, g: &Derivator, t: f64, cfg: &DifferencingConfig) -> Result<f64>
where
    F: SampledFunction + ?Sized,
{
    let upper = g.window().1;
    let mut pts = Vec::new();
    for &h in &cfg.h_sequence {
        let s = t + h;
        if s < upper && s > t {
            pts.push((h, f.difference(s, t)?));
        }
    }
    if pts.len() < 2 {
        return Err(Error::RightLimit {
            t,
            spread: f64::INFINITY,
        });
    }
    let n = pts.len();
    let (estimate, previous) = if cfg.richardson && n >= 4 {
        (
            extrapolate_to_zero(&pts[n - 3..]),
            extrapolate_to_zero(&pts[n - 4..n - 1]),
        )
    } else {
        (pts[n - 1].1, pts[n - 2].1)
    };
    let spread = (estimate - previous).abs();
    if !estimate.is_finite() || spread > cfg.tol_match * (1.0 + estimate.abs()) {
        return Err(Error::RightLimit { t, spread });
    }
    Ok(estimate)
}

/// Value at `h = 0` of the polynomial interpolating the given points.
fn extrapolate_to_zero(pts: &[(f64, f64)]) -> f64 {
    let mut acc = 0.0;
    for (i, &(hi, vi)) in pts.iter().enumerate() {
        let mut basis = 1.0;
        for (j, &(hj, _)) in pts.iter().enumerate() {
            if i != j {
                basis *= hj / (hj - hi);
            }
        }
        acc += vi * basis;
    }
    acc
}

/// One-sided limit of `(f(s) − f(t)) / (g(s) − g(t))` for `s = t + side·h`.
/// `None` when no step on this side is usable.
fn one_sided<F>(f: &F, g: &Derivator, t: f64, side: f64, cfg: &DifferencingConfig) -> Result<Option<f64>>
where
    F: SampledFunction + ?Sized,
{
    let (lower, upper) = g.window();
    let gt = g.eval(t)?;
    let breakpoints = g.breakpoints();
    // Steps that straddle a slope change of g mix the two pieces; they are
    // used only when no step stays on one piece.
    let mut pts: Vec<(f64, f64)> = Vec::new();
    let mut straddling: Vec<(f64, f64)> = Vec::new();
    for &h in &cfg.h_sequence {
        let s = t + side * h;
        if s < lower || s > upper || s == t {
            continue;
        }
        let (a, b) = if side > 0.0 { (t, s) } else { (s, t) };
        if !g.jumps_in(a, b).is_empty() {
            continue;
        }
        let dg = g.eval(s)? - gt;
        if dg.abs() < FLAT_GUARD {
            continue;
        }
        let k = breakpoints.partition_point(|&p| p <= a);
        let q = (h, f.difference(s, t)? / dg);
        if k < breakpoints.len() && breakpoints[k] < b {
            straddling.push(q);
        } else {
            pts.push(q);
        }
    }
    if pts.is_empty() {
        pts = straddling;
    }
    Ok(match pts.len() {
        0 => None,
        1 => Some(pts[0].1),
        _ if cfg.richardson => {
            let accel: Vec<f64> = pts
                .windows(2)
                .map(|w| {
                    let ((h0, q0), (h1, q1)) = (w[0], w[1]);
                    (h0 * q1 - h1 * q0) / (h0 - h1)
                })
                .collect();
            Some(most_stable(&accel))
        }
        _ => {
            let raw: Vec<f64> = pts.iter().map(|p| p.1).collect();
            Some(most_stable(&raw))
        }
    })
}

/// Element of the sequence that agrees best with its predecessor.
fn most_stable(seq: &[f64]) -> f64 {
    if seq.len() == 1 {
        return seq[0];
    }
    let mut best = (f64::INFINITY, seq[seq.len() - 1]);
    for w in seq.windows(2) {
        let d = (w[1] - w[0]).abs();
        if d < best.0 {
            best = (d, w[1]);
        }
    }
    best.1
}

/// `F(t) = ∫_{[a,t)} f dg` on `[a, R]`.
pub struct IndefiniteIntegral<'g, F> {
    g: &'g Derivator,
    f: F,
    a: f64,
    integrator: Integrator,
}

impl<'g, F> IndefiniteIntegral<'g, F>
where
    F: Fn(f64) -> f64,
{
    pub fn start(&self) -> f64 {
        self.a
    }

    fn check(&self, t: f64) -> Result<()> {
        let upper = self.g.window().1;
        if t >= self.a && t <= upper {
            Ok(())
        } else {
            Err(Error::domain(format!("t = {t} outside [{}, {upper}]", self.a)))
        }
    }
}

/// Builds `F(t) = ∫_{[a,t)} f dg` with default quadrature.
pub fn indefinite_integral<F>(f: F, g: &Derivator, a: f64) -> Result<IndefiniteIntegral<'_, F>>
where
    F: Fn(f64) -> f64,
{
    indefinite_integral_with(f, g, a, QuadConfig::default())
}

pub fn indefinite_integral_with<F>(f: F, g: &Derivator, a: f64, quad: QuadConfig) -> Result<IndefiniteIntegral<'_, F>>
where
    F: Fn(f64) -> f64,
{
    let (lower, upper) = g.window();
    if !(a >= lower && a < upper) {
        return Err(Error::domain(format!("lower limit {a} outside [{lower}, {upper})")));
    }
    Ok(IndefiniteIntegral {
        g,
        f,
        a,
        integrator: Integrator::new(quad)?,
    })
}

impl<F> SampledFunction for IndefiniteIntegral<'_, F>
where
    F: Fn(f64) -> f64,
{
    fn value(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        self.integrator.integrate(self.g, |s| Ok((self.f)(s)), self.a, t)
    }

    fn difference(&self, s: f64, t: f64) -> Result<f64> {
        self.check(s)?;
        self.check(t)?;
        let f = |x: f64| Ok((self.f)(x));
        if s >= t {
            self.integrator.integrate(self.g, f, t, s)
        } else {
            Ok(-self.integrator.integrate(self.g, f, s, t)?)
        }
    }

    fn right_increment(&self, t: f64) -> Option<Result<f64>> {
        Some(self.check(t).and_then(|_| {
            let delta = self.g.jump(t)?;
            if delta == 0.0 {
                return Ok(0.0);
            }
            let v = (self.f)(t);
            if v.is_finite() {
                Ok(v * delta)
            } else {
                Err(Error::Integrand { t, value: v })
            }
        }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    Continuity,
    Jump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FtcSample {
    pub t: f64,
    pub kind: SampleKind,
    pub expected: f64,
    pub recovered: Option<f64>,
    pub error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// Outcome of differentiating `∫_{[a,·)} f dg` back and comparing with `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FtcReport {
    pub a: f64,
    pub b: f64,
    pub samples: Vec<FtcSample>,
    /// Sample points inside the constancy set, where no derivative is defined.
    pub skipped_constancy: Vec<f64>,
    pub max_abs_error_continuity: f64,
    pub max_rel_error_jump: f64,
    pub tolerance_continuity: f64,
    pub tolerance_jump_relative: f64,
    /// Points whose error exceeds the tolerance or whose derivative failed.
    pub failures: Vec<f64>,
}

impl FtcReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub const FTC_TOL_CONTINUITY: f64 = 1e-5;
pub const FTC_TOL_JUMP_RELATIVE: f64 = 1e-12;

/// Builds `F = ∫_{[a,·)} f dg`, samples `sample_count` midpoints of a uniform
/// partition of `[a, b)` together with every jump of `g` in `[a, b)`, and
/// compares `F'_g` with `f`.
pub fn check_ftc<F>(f: F, g: &Derivator, a: f64, b: f64, sample_count: usize) -> Result<FtcReport>
where
    F: Fn(f64) -> f64 + Copy,
{
    if !(a < b) || b > g.window().1 || a < g.window().0 {
        return Err(Error::domain(format!("[{a}, {b}) is not inside the window")));
    }
    let big_f = indefinite_integral(f, g, a)?;
    let cfg = DifferencingConfig::default();
    let classes = g.classify();

    let mut points: Vec<(f64, SampleKind)> = (0..sample_count)
        .map(|k| {
            let t = a + (k as f64 + 0.5) * (b - a) / sample_count as f64;
            (t, SampleKind::Continuity)
        })
        .filter(|&(t, _)| g.jump_unchecked(t) == 0.0)
        .collect();
    points.extend(g.jumps_in(a, b).iter().map(|j| (j.at, SampleKind::Jump)));
    points.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut report = FtcReport {
        a,
        b,
        samples: Vec::with_capacity(points.len()),
        skipped_constancy: Vec::new(),
        max_abs_error_continuity: 0.0,
        max_rel_error_jump: 0.0,
        tolerance_continuity: FTC_TOL_CONTINUITY,
        tolerance_jump_relative: FTC_TOL_JUMP_RELATIVE,
        failures: Vec::new(),
    };
    for (t, kind) in points {
        if classes.in_constancy(t) {
            report.skipped_constancy.push(t);
            continue;
        }
        let expected = f(t);
        let sample = match stieltjes_derivative(&big_f, g, t, &cfg) {
            Ok(d) => {
                let error = (d - expected).abs();
                let failed = match kind {
                    SampleKind::Continuity => {
                        report.max_abs_error_continuity = report.max_abs_error_continuity.max(error);
                        error > FTC_TOL_CONTINUITY
                    }
                    SampleKind::Jump => {
                        let rel = error / expected.abs().max(f64::MIN_POSITIVE);
                        let rel = if error == 0.0 { 0.0 } else { rel };
                        report.max_rel_error_jump = report.max_rel_error_jump.max(rel);
                        rel > FTC_TOL_JUMP_RELATIVE
                    }
                };
                FtcSample {
                    t,
                    kind,
                    expected,
                    recovered: Some(d),
                    error,
                    failure: failed.then(|| "error above tolerance".to_string()),
                }
            }
            Err(e) => FtcSample {
                t,
                kind,
                expected,
                recovered: None,
                error: f64::INFINITY,
                failure: Some(e.to_string()),
            },
        };
        if sample.failure.is_some() {
            report.failures.push(t);
        }
        report.samples.push(sample);
    }
    Ok(report)
}
