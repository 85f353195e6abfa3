//! Nondecreasing, left-continuous derivators on a bounded working window.
//!
//! A [`Derivator`] is stored as an anchor value `g(L)`, a piecewise-linear
//! continuous part with nonnegative slopes, and finitely many positive jumps
//! strictly inside the window. The jump at `d` is attributed to the right:
//! `g(d)` excludes it and `g(d+)` includes it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A jump of size `size > 0` located at `at`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, f64)", into = "(f64, f64)")]
pub struct Jump {
    pub at: f64,
    pub size: f64,
}

impl From<(f64, f64)> for Jump {
    fn from((at, size): (f64, f64)) -> Self {
        Jump { at, size }
    }
}

impl From<Jump> for (f64, f64) {
    fn from(j: Jump) -> Self {
        (j.at, j.size)
    }
}

/// Serialized form of a derivator: window, anchor, breakpoint/slope arrays and
/// a jump list of `[position, size]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DerivatorRepr {
    pub window: (f64, f64),
    #[serde(default)]
    pub anchor: f64,
    pub breakpoints: Vec<f64>,
    pub slopes: Vec<f64>,
    #[serde(default)]
    pub jumps: Vec<Jump>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "DerivatorRepr", into = "DerivatorRepr")]
pub struct Derivator {
    lower: f64,
    upper: f64,
    anchor: f64,
    breakpoints: Vec<f64>,
    slopes: Vec<f64>,
    jumps: Vec<Jump>,
    /// Continuous increase from `L` up to each breakpoint.
    cont_prefix: Vec<f64>,
    /// `jump_prefix[j]` is the total size of `jumps[..j]`.
    jump_prefix: Vec<f64>,
}

impl TryFrom<DerivatorRepr> for Derivator {
    type Error = Error;

    fn try_from(r: DerivatorRepr) -> Result<Self> {
        Derivator::new(r.window, r.anchor, r.breakpoints, r.slopes, r.jumps)
    }
}

impl From<Derivator> for DerivatorRepr {
    fn from(g: Derivator) -> Self {
        DerivatorRepr {
            window: (g.lower, g.upper),
            anchor: g.anchor,
            breakpoints: g.breakpoints,
            slopes: g.slopes,
            jumps: g.jumps,
        }
    }
}

impl Derivator {
    /// Builds and validates a derivator.
    ///
    /// `breakpoints` must start at `L`, end at `R` and be strictly increasing;
    /// `slopes[k]` applies on `[b_k, b_{k+1})`. Jumps must be sorted, strictly
    /// increasing in position, inside `(L, R)`, with positive size.
    pub fn new(
        window: (f64, f64),
        anchor: f64,
        breakpoints: Vec<f64>,
        slopes: Vec<f64>,
        jumps: Vec<Jump>,
    ) -> Result<Self> {
        let (lower, upper) = window;
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::config(format!("invalid window [{lower}, {upper}]")));
        }
        if !anchor.is_finite() {
            return Err(Error::config("anchor must be finite"));
        }
        if breakpoints.len() < 2 {
            return Err(Error::config("at least two breakpoints are required"));
        }
        if breakpoints[0] != lower || *breakpoints.last().unwrap() != upper {
            return Err(Error::config(
                "breakpoints must start at the window's left end and finish at its right end",
            ));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::config("breakpoints must be strictly increasing"));
        }
        if slopes.len() != breakpoints.len() - 1 {
            return Err(Error::config(format!(
                "expected {} slopes for {} breakpoints, got {}",
                breakpoints.len() - 1,
                breakpoints.len(),
                slopes.len()
            )));
        }
        if let Some(s) = slopes.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(Error::config(format!("slope {s} is not a nonnegative real")));
        }
        for j in &jumps {
            if !(j.at > lower && j.at < upper) {
                return Err(Error::config(format!(
                    "jump at {} is not strictly inside ({lower}, {upper})",
                    j.at
                )));
            }
            if !(j.size.is_finite() && j.size > 0.0) {
                return Err(Error::config(format!(
                    "jump at {} has non-positive size {}",
                    j.at, j.size
                )));
            }
        }
        if jumps.windows(2).any(|w| !(w[0].at < w[1].at)) {
            return Err(Error::config("jump positions must be strictly increasing"));
        }

        let mut cont_prefix = Vec::with_capacity(breakpoints.len());
        cont_prefix.push(0.0);
        for (k, s) in slopes.iter().enumerate() {
            let prev = cont_prefix[k];
            cont_prefix.push(prev + s * (breakpoints[k + 1] - breakpoints[k]));
        }
        let mut jump_prefix = Vec::with_capacity(jumps.len() + 1);
        jump_prefix.push(0.0);
        for (i, j) in jumps.iter().enumerate() {
            jump_prefix.push(jump_prefix[i] + j.size);
        }
        if !cont_prefix.last().unwrap().is_finite() || !jump_prefix.last().unwrap().is_finite() {
            return Err(Error::config("total variation is not finite"));
        }

        Ok(Derivator {
            lower,
            upper,
            anchor,
            breakpoints,
            slopes,
            jumps,
            cont_prefix,
            jump_prefix,
        })
    }

    /// `g(t) = t` on `[L, R]`.
    pub fn identity(lower: f64, upper: f64) -> Result<Self> {
        Self::new((lower, upper), lower, vec![lower, upper], vec![1.0], vec![])
    }

    /// Constant derivator with value `value`.
    pub fn constant(lower: f64, upper: f64, value: f64) -> Result<Self> {
        Self::new((lower, upper), value, vec![lower, upper], vec![0.0], vec![])
    }

    /// Derivator with zero continuous part and the given jumps.
    pub fn pure_jumps(lower: f64, upper: f64, anchor: f64, jumps: Vec<Jump>) -> Result<Self> {
        Self::new((lower, upper), anchor, vec![lower, upper], vec![0.0], jumps)
    }

    /// Returns a copy with an extra jump; fails if a jump already sits at `at`.
    pub fn with_jump(&self, at: f64, size: f64) -> Result<Self> {
        let mut jumps = self.jumps.clone();
        if jumps.iter().any(|j| j.at == at) {
            return Err(Error::config(format!("a jump already exists at {at}")));
        }
        jumps.push(Jump { at, size });
        jumps.sort_by(|a, b| a.at.total_cmp(&b.at));
        Self::new(
            self.window(),
            self.anchor,
            self.breakpoints.clone(),
            self.slopes.clone(),
            jumps,
        )
    }

    /// The same function on a smaller window `[lower, upper]`. A jump at
    /// `upper` is dropped (it does not affect values on the window); a jump at
    /// `lower` cannot be represented and is an error.
    pub fn restrict(&self, lower: f64, upper: f64) -> Result<Self> {
        if !(lower >= self.lower && upper <= self.upper && lower < upper) {
            return Err(Error::config(format!(
                "[{lower}, {upper}] is not a subwindow of [{}, {}]",
                self.lower, self.upper
            )));
        }
        if self.jump_unchecked(lower) > 0.0 {
            return Err(Error::config(format!(
                "cannot restrict to a window starting at the jump {lower}"
            )));
        }
        if lower == self.lower && upper == self.upper {
            return Ok(self.clone());
        }
        let mut breakpoints = vec![lower];
        breakpoints.extend(self.breakpoints.iter().copied().filter(|&b| b > lower && b < upper));
        breakpoints.push(upper);
        let slopes = breakpoints
            .windows(2)
            .map(|w| self.slopes[self.segment_index(0.5 * (w[0] + w[1]))])
            .collect();
        let jumps = self
            .jumps
            .iter()
            .copied()
            .filter(|j| j.at > lower && j.at < upper)
            .collect();
        Self::new((lower, upper), self.eval(lower)?, breakpoints, slopes, jumps)
    }

    pub fn window(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    /// Iterates `(start, end, slope)` over the linear pieces.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.slopes)
            .map(|(w, &s)| (w[0], w[1], s))
    }

    fn check_closed(&self, t: f64) -> Result<()> {
        if t >= self.lower && t <= self.upper {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "t = {t} outside window [{}, {}]",
                self.lower, self.upper
            )))
        }
    }

    fn check_half_open(&self, t: f64) -> Result<()> {
        if t >= self.lower && t < self.upper {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "t = {t} outside [{}, {})",
                self.lower, self.upper
            )))
        }
    }

    /// Index of the segment `[b_k, b_{k+1})` containing `t`; `R` maps to the last one.
    fn segment_index(&self, t: f64) -> usize {
        let k = self.breakpoints.partition_point(|&b| b <= t);
        k.saturating_sub(1).min(self.slopes.len() - 1)
    }

    fn cont_increment_unchecked(&self, t: f64) -> f64 {
        let k = self.segment_index(t);
        self.cont_prefix[k] + self.slopes[k] * (t - self.breakpoints[k])
    }

    /// `g(t)`: anchor plus the continuous increase on `[L, t]` plus every jump
    /// strictly before `t`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        self.check_closed(t)?;
        let jumps_before = self.jumps.partition_point(|j| j.at < t);
        Ok(self.anchor + self.cont_increment_unchecked(t) + self.jump_prefix[jumps_before])
    }

    /// `g(t+) = g(t) + Δg(t)`.
    pub fn eval_right(&self, t: f64) -> Result<f64> {
        self.check_half_open(t)?;
        let jumps_upto = self.jumps.partition_point(|j| j.at <= t);
        Ok(self.anchor + self.cont_increment_unchecked(t) + self.jump_prefix[jumps_upto])
    }

    /// `Δg(t)`, matched by exact position equality.
    pub fn jump(&self, t: f64) -> Result<f64> {
        self.check_half_open(t)?;
        Ok(self.jump_unchecked(t))
    }

    pub(crate) fn jump_unchecked(&self, t: f64) -> f64 {
        match self.jumps.binary_search_by(|j| j.at.total_cmp(&t)) {
            Ok(i) => self.jumps[i].size,
            Err(_) => 0.0,
        }
    }

    /// Value of the continuous part `anchor + ∫ slope` at `t` (no jumps).
    pub fn continuous_part(&self, t: f64) -> Result<f64> {
        self.check_closed(t)?;
        Ok(self.anchor + self.cont_increment_unchecked(t))
    }

    /// Slope of the continuous part on the segment containing `t` (right-hand slope).
    pub fn slope_at(&self, t: f64) -> Result<f64> {
        self.check_closed(t)?;
        Ok(self.slopes[self.segment_index(t)])
    }

    /// Jumps located in `[a, b)`.
    pub fn jumps_in(&self, a: f64, b: f64) -> &[Jump] {
        let lo = self.jumps.partition_point(|j| j.at < a);
        let hi = self.jumps.partition_point(|j| j.at < b);
        &self.jumps[lo..hi]
    }

    /// True when the continuous part has zero slope everywhere.
    pub fn is_pure_jump(&self) -> bool {
        self.slopes.iter().all(|&s| s == 0.0)
    }

    /// Pointwise sum `ĝ = g_1 + … + g_n` of derivators sharing one window.
    ///
    /// Breakpoints are merged, slopes added, and jumps at the same stored
    /// position merged by exact equality.
    pub fn sum(gs: &[Derivator]) -> Result<Derivator> {
        let first = gs
            .first()
            .ok_or_else(|| Error::config("cannot sum an empty list of derivators"))?;
        let window = first.window();
        if let Some(g) = gs.iter().find(|g| g.window() != window) {
            return Err(Error::config(format!(
                "window mismatch: {:?} vs {:?}",
                g.window(),
                window
            )));
        }

        let mut breakpoints: Vec<f64> = gs.iter().flat_map(|g| g.breakpoints.iter().copied()).collect();
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();

        let slopes = breakpoints
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                gs.iter().map(|g| g.slopes[g.segment_index(mid)]).sum()
            })
            .collect();

        let mut jumps: Vec<Jump> = gs.iter().flat_map(|g| g.jumps.iter().copied()).collect();
        jumps.sort_by(|a, b| a.at.total_cmp(&b.at));
        let mut merged: Vec<Jump> = Vec::with_capacity(jumps.len());
        for j in jumps {
            match merged.last_mut() {
                Some(last) if last.at == j.at => last.size += j.size,
                _ => merged.push(j),
            }
        }

        let anchor = gs.iter().map(|g| g.anchor).sum();
        Derivator::new(window, anchor, breakpoints, slopes, merged)
    }

    /// Builds the canonical representative `g_{C,D}` of a classification.
    ///
    /// Slope 0 on the constancy intervals and 1 elsewhere; the `n`-th
    /// discontinuity (in the classification's enumeration order) carries
    /// `weights[n]`, or `2^{-n}` (1-based) when no weights are given. When
    /// `0 ∈ [L, R]` the anchor makes `g(t) = sgn(t)·m([0,t] \ C) + Σ_{d_n<t} w_n`;
    /// otherwise `g(L) = 0`.
    pub fn from_classification(c: &Classification, window: (f64, f64), weights: Option<&[f64]>) -> Result<Derivator> {
        let (lower, upper) = window;
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::config(format!("invalid window [{lower}, {upper}]")));
        }
        for &(a, b) in &c.constancy {
            if a < lower || b > upper {
                return Err(Error::config(format!(
                    "constancy interval ({a}, {b}) leaves the window"
                )));
            }
        }
        for &d in &c.discontinuities {
            if !(d > lower && d < upper) {
                return Err(Error::config(format!(
                    "discontinuity {d} is not strictly inside the window"
                )));
            }
        }
        let weights: Vec<f64> = match weights {
            Some(w) => {
                if w.len() != c.discontinuities.len() {
                    return Err(Error::config(format!(
                        "{} weights given for {} discontinuities",
                        w.len(),
                        c.discontinuities.len()
                    )));
                }
                if let Some(x) = w.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
                    return Err(Error::config(format!("weight {x} is not positive")));
                }
                if !w.iter().sum::<f64>().is_finite() {
                    return Err(Error::config("weights must have a finite sum"));
                }
                w.to_vec()
            }
            None => (1..=c.discontinuities.len()).map(|n| 0.5f64.powi(n as i32)).collect(),
        };

        let mut breakpoints = vec![lower, upper];
        for &(a, b) in &c.constancy {
            breakpoints.push(a);
            breakpoints.push(b);
        }
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        let slopes = breakpoints
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                if c.in_constancy(mid) {
                    0.0
                } else {
                    1.0
                }
            })
            .collect();

        let mut jumps: Vec<Jump> = c
            .discontinuities
            .iter()
            .zip(&weights)
            .map(|(&at, &size)| Jump { at, size })
            .collect();
        jumps.sort_by(|a, b| a.at.total_cmp(&b.at));

        let unanchored = Derivator::new(window, 0.0, breakpoints, slopes, jumps)?;
        let anchor = if lower <= 0.0 && 0.0 <= upper {
            -unanchored.cont_increment_unchecked(0.0)
        } else {
            0.0
        };
        Ok(Derivator { anchor, ..unanchored })
    }

    /// The pair `(C_g ∩ (L,R), D_g)`: maximal open intervals of zero slope
    /// containing no jump, and the jump positions.
    pub fn classify(&self) -> Classification {
        let mut runs: Vec<(f64, f64)> = Vec::new();
        for (a, b, s) in self.segments() {
            if s != 0.0 {
                continue;
            }
            match runs.last_mut() {
                Some(last) if last.1 == a => last.1 = b,
                _ => runs.push((a, b)),
            }
        }
        let mut constancy = Vec::with_capacity(runs.len());
        for (a, b) in runs {
            let mut start = a;
            for j in self.jumps.iter().filter(|j| j.at > a && j.at < b) {
                constancy.push((start, j.at));
                start = j.at;
            }
            constancy.push((start, b));
        }
        Classification {
            constancy,
            discontinuities: self.jumps.iter().map(|j| j.at).collect(),
        }
    }
}

/// Finite description of a derivator's topology class: the constancy set
/// `C_g` (as disjoint open intervals) and the discontinuity set `D_g`.
///
/// Discontinuities keep the order they were supplied in; that order is the
/// enumeration used for default weights in [`Derivator::from_classification`].
/// Equality compares both parts as sets.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ClassificationRepr", into = "ClassificationRepr")]
pub struct Classification {
    constancy: Vec<(f64, f64)>,
    discontinuities: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassificationRepr {
    #[serde(default)]
    pub constancy: Vec<(f64, f64)>,
    #[serde(default)]
    pub discontinuities: Vec<f64>,
}

impl TryFrom<ClassificationRepr> for Classification {
    type Error = Error;
    fn try_from(r: ClassificationRepr) -> Result<Self> {
        Classification::new(r.constancy, r.discontinuities)
    }
}

impl From<Classification> for ClassificationRepr {
    fn from(c: Classification) -> Self {
        ClassificationRepr {
            constancy: c.constancy,
            discontinuities: c.discontinuities,
        }
    }
}

impl Classification {
    pub fn new(mut constancy: Vec<(f64, f64)>, discontinuities: Vec<f64>) -> Result<Self> {
        for &(a, b) in &constancy {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::config(format!("invalid constancy interval ({a}, {b})")));
            }
        }
        constancy.sort_by(|x, y| x.0.total_cmp(&y.0));
        if constancy.windows(2).any(|w| w[0].1 > w[1].0) {
            return Err(Error::config("constancy intervals overlap"));
        }
        let mut sorted = discontinuities.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.iter().any(|d| !d.is_finite()) {
            return Err(Error::config("discontinuities must be finite"));
        }
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("discontinuities must be distinct"));
        }
        let c = Classification {
            constancy,
            discontinuities,
        };
        if let Some(d) = c.discontinuities.iter().find(|&&d| c.in_constancy(d)) {
            return Err(Error::config(format!(
                "discontinuity {d} lies inside a constancy interval"
            )));
        }
        Ok(c)
    }

    /// Constancy intervals sorted by left end.
    pub fn constancy(&self) -> &[(f64, f64)] {
        &self.constancy
    }

    /// Discontinuities in enumeration order.
    pub fn discontinuities(&self) -> &[f64] {
        &self.discontinuities
    }

    pub fn sorted_discontinuities(&self) -> Vec<f64> {
        let mut d = self.discontinuities.clone();
        d.sort_by(f64::total_cmp);
        d
    }

    /// Membership in the open constancy set.
    pub fn in_constancy(&self, t: f64) -> bool {
        let i = self.constancy.partition_point(|&(a, _)| a < t);
        i > 0 && t < self.constancy[i - 1].1
    }

    pub fn is_discontinuity(&self, t: f64) -> bool {
        self.discontinuities.contains(&t)
    }
}

impl PartialEq for Classification {
    fn eq(&self, other: &Self) -> bool {
        self.constancy == other.constancy && self.sorted_discontinuities() == other.sorted_discontinuities()
    }
}
