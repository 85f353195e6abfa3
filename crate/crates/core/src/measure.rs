//! Lebesgue–Stieltjes measures of finite unions of half-open intervals and
//! the LS integral against a [`Derivator`].

use serde::{Deserialize, Serialize};

use crate::derivator::Derivator;
use crate::error::{Error, Result};
use crate::quadrature::{GaussLegendre, QuadConfig};

/// Finite family of half-open intervals `[a, b)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct IntervalCover {
    intervals: Vec<(f64, f64)>,
}

impl TryFrom<Vec<(f64, f64)>> for IntervalCover {
    type Error = Error;
    fn try_from(v: Vec<(f64, f64)>) -> Result<Self> {
        IntervalCover::new(v)
    }
}

impl From<IntervalCover> for Vec<(f64, f64)> {
    fn from(c: IntervalCover) -> Self {
        c.intervals
    }
}

impl IntervalCover {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        if let Some(&(a, b)) = intervals
            .iter()
            .find(|(a, b)| !(a.is_finite() && b.is_finite() && a < b))
        {
            return Err(Error::domain(format!("[{a}, {b}) is not a nonempty interval")));
        }
        Ok(IntervalCover { intervals })
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Membership of `t` in the union.
    pub fn contains(&self, t: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a <= t && t < b)
    }

    /// Connected-component decomposition of the union: sort by left end and
    /// merge overlapping or touching intervals.
    pub fn disjointify(&self) -> IntervalCover {
        let mut sorted = self.intervals.clone();
        sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(sorted.len());
        for (a, b) in sorted {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        IntervalCover { intervals: merged }
    }
}

/// `μ_g([a, b)) = g(b) − g(a)`.
pub fn measure_interval(g: &Derivator, a: f64, b: f64) -> Result<f64> {
    if !(a < b) {
        return Err(Error::domain(format!("[{a}, {b}) is empty or malformed")));
    }
    Ok(g.eval(b)? - g.eval(a)?)
}

pub fn disjointify(cover: &IntervalCover) -> IntervalCover {
    cover.disjointify()
}

/// `μ_g` of the union of a finite cover, computed on its disjoint decomposition.
pub fn outer_measure(g: &Derivator, cover: &IntervalCover) -> Result<f64> {
    let (lower, upper) = g.window();
    if let Some(&(a, b)) = cover.intervals().iter().find(|&&(a, b)| a < lower || b > upper) {
        return Err(Error::domain(format!(
            "[{a}, {b}) leaves the window [{lower}, {upper}]"
        )));
    }
    cover
        .disjointify()
        .intervals()
        .iter()
        .map(|&(a, b)| measure_interval(g, a, b))
        .sum()
}

/// Reusable Lebesgue–Stieltjes integrator: composite Gauss–Legendre on each
/// linear piece of the continuous part plus the exact atomic sum.
#[derive(Debug, Clone)]
pub struct Integrator {
    rule: GaussLegendre,
    panels: usize,
}

impl Default for Integrator {
    fn default() -> Self {
        Integrator::new(QuadConfig::default()).expect("default quadrature is valid")
    }
}

impl Integrator {
    pub fn new(quad: QuadConfig) -> Result<Self> {
        if quad.panels == 0 {
            return Err(Error::config("panel count must be positive"));
        }
        Ok(Integrator {
            rule: GaussLegendre::new(quad.order)?,
            panels: quad.panels,
        })
    }

    /// `∫_{[a,b)} f dg`; the atom at `a` is included and the one at `b` excluded.
    pub fn integrate<F>(&self, g: &Derivator, mut f: F, a: f64, b: f64) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let mut total = self.integrate_continuous(g, &mut f, a, b)?;
        for j in g.jumps_in(a, b) {
            total += finite(j.at, f(j.at)?)? * j.size;
        }
        Ok(total)
    }

    /// Integral of `f` against the continuous part of `g` over `[a, b)`, atoms left out.
    pub fn integrate_continuous<F>(&self, g: &Derivator, mut f: F, a: f64, b: f64) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let (lower, upper) = g.window();
        if !(a >= lower && b <= upper && a <= b) {
            return Err(Error::domain(format!(
                "[{a}, {b}) is not a subinterval of [{lower}, {upper}]"
            )));
        }
        if a == b {
            return Ok(0.0);
        }
        let mut checked = |t: f64| finite(t, f(t)?);
        let bp = g.breakpoints();
        let slopes = g.slopes();
        let first = bp.partition_point(|&x| x <= a).saturating_sub(1);
        let mut total = 0.0;
        for k in first..slopes.len() {
            let (s0, s1, slope) = (bp[k], bp[k + 1], slopes[k]);
            if s0 >= b {
                break;
            }
            if slope == 0.0 || s1 <= a {
                continue;
            }
            let lo = s0.max(a);
            let hi = s1.min(b);
            let width = (hi - lo) / self.panels as f64;
            let mut piece = 0.0;
            for p in 0..self.panels {
                let p0 = lo + p as f64 * width;
                let p1 = if p + 1 == self.panels { hi } else { p0 + width };
                piece += self.rule.integrate(p0, p1, &mut checked)?;
            }
            total += slope * piece;
        }
        Ok(total)
    }
}

fn finite(t: f64, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Integrand { t, value: v })
    }
}

/// `∫_{[a,b)} f dg` with the given quadrature settings.
pub fn integrate<F>(g: &Derivator, f: F, a: f64, b: f64, quad: QuadConfig) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    Integrator::new(quad)?.integrate(g, |t| Ok(f(t)), a, b)
}
