//! Derivator topologies compared through their `(C_g, D_g)` classifications,
//! plus sampled ε–δ diagnostics for g-continuity.

use serde::{Deserialize, Serialize};

use crate::derivator::Derivator;
use crate::error::{Error, Result};

fn same_window(g1: &Derivator, g2: &Derivator) -> Result<()> {
    if g1.window() == g2.window() {
        Ok(())
    } else {
        Err(Error::config(format!(
            "window mismatch: {:?} vs {:?}",
            g1.window(),
            g2.window()
        )))
    }
}

/// Whether `g1` is `g2`-continuous: `C_{g2} ⊆ C_{g1}` and `D_{g1} ⊆ D_{g2}`.
///
/// Both inclusions use exact endpoint comparison.
pub fn is_relatively_continuous(g1: &Derivator, g2: &Derivator) -> Result<bool> {
    same_window(g1, g2)?;
    let c1 = g1.classify();
    let c2 = g2.classify();
    let constancy_ok = c2
        .constancy()
        .iter()
        .all(|&(a, b)| c1.constancy().iter().any(|&(c, d)| c <= a && b <= d));
    let jumps_ok = c1.discontinuities().iter().all(|&d| c2.is_discontinuity(d));
    Ok(constancy_ok && jumps_ok)
}

/// Whether `g1` and `g2` induce the same topology, i.e. have equal classifications.
pub fn topologies_equal(g1: &Derivator, g2: &Derivator) -> Result<bool> {
    same_window(g1, g2)?;
    Ok(g1.classify() == g2.classify())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ContinuityVerdict {
    /// A sample violated the ε bound even for the smallest δ tried.
    Refuted,
    /// No violation found. This is evidence, not a proof.
    Consistent,
}

/// One probe `(t, ε)` of a sampled continuity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub t: f64,
    pub epsilon: f64,
    pub verdict: ContinuityVerdict,
    /// Largest δ on the ladder for which every sample passed.
    pub largest_consistent_delta: Option<f64>,
    /// A sample `s` violating the bound at the smallest δ, when refuted.
    pub witness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub probes: Vec<ProbeResult>,
    pub deltas: Vec<f64>,
    pub samples_per_probe: usize,
}

impl ContinuityReport {
    pub fn any_refuted(&self) -> bool {
        self.probes.iter().any(|p| p.verdict == ContinuityVerdict::Refuted)
    }
}

const GRID_POINTS: usize = 2001;
const LOCAL_LEVELS: i32 = 50;

fn delta_ladder() -> Vec<f64> {
    (1..=8).map(|k| 10f64.powi(-k)).collect()
}

fn sample_points(window: (f64, f64), t: f64) -> Vec<f64> {
    let (lower, upper) = window;
    let mut pts: Vec<f64> = (0..GRID_POINTS)
        .map(|k| lower + (upper - lower) * k as f64 / (GRID_POINTS - 1) as f64)
        .collect();
    for j in 1..=LOCAL_LEVELS {
        let h = 0.5f64.powi(j);
        for s in [t - h, t + h] {
            if s >= lower && s <= upper {
                pts.push(s);
            }
        }
    }
    pts
}

fn run_probes<F, G>(f: &F, window: (f64, f64), probes: &[(f64, f64)], gap: G) -> Result<ContinuityReport>
where
    F: Fn(f64) -> f64,
    G: Fn(f64, f64) -> Result<f64>,
{
    let deltas = delta_ladder();
    let mut out = Vec::with_capacity(probes.len());
    let mut samples_per_probe = 0;
    for &(t, epsilon) in probes {
        if !(t >= window.0 && t <= window.1) {
            return Err(Error::domain(format!("probe {t} outside the window")));
        }
        if !(epsilon > 0.0) {
            return Err(Error::config(format!("epsilon {epsilon} must be positive")));
        }
        let ft = f(t);
        let samples = sample_points(window, t);
        samples_per_probe = samples_per_probe.max(samples.len());
        // (distance in g, violates the ε bound) for each sample
        let mut checked = Vec::with_capacity(samples.len());
        for s in samples {
            let d = gap(s, t)?;
            let fs = f(s);
            let bad = !((fs - ft).abs() < epsilon);
            checked.push((d, bad, s));
        }
        let violation = |delta: f64| checked.iter().find(|(d, bad, _)| *d < delta && *bad).map(|c| c.2);
        let largest_consistent_delta = deltas.iter().copied().find(|&dl| violation(dl).is_none());
        let witness = violation(*deltas.last().expect("ladder is nonempty"));
        out.push(ProbeResult {
            t,
            epsilon,
            verdict: if witness.is_some() {
                ContinuityVerdict::Refuted
            } else {
                ContinuityVerdict::Consistent
            },
            largest_consistent_delta,
            witness,
        });
    }
    Ok(ContinuityReport {
        probes: out,
        deltas,
        samples_per_probe,
    })
}

/// Sampled test of g-continuity of `f` at each probe `(t, ε)`.
///
/// For δ on the ladder `10^-1 … 10^-8`, every sample `s` (a uniform grid on the
/// window plus the points `t ± 2^-j`) with `|g(s) − g(t)| < δ` must satisfy
/// `|f(s) − f(t)| < ε`. Can refute continuity, never prove it.
pub fn check_g_continuity_sampled<F>(f: F, g: &Derivator, probes: &[(f64, f64)]) -> Result<ContinuityReport>
where
    F: Fn(f64) -> f64,
{
    run_probes(&f, g.window(), probes, |s, t| Ok((g.eval(s)? - g.eval(t)?).abs()))
}

/// Same test with the distance `max_i |g_i(s) − g_i(t)|` of a derivator vector.
pub fn check_vec_g_continuity_sampled<F>(f: F, gs: &[Derivator], probes: &[(f64, f64)]) -> Result<ContinuityReport>
where
    F: Fn(f64) -> f64,
{
    let first = gs.first().ok_or_else(|| Error::config("empty derivator vector"))?;
    for g in gs {
        same_window(first, g)?;
    }
    run_probes(&f, first.window(), probes, |s, t| {
        let mut m: f64 = 0.0;
        for g in gs {
            m = m.max((g.eval(s)? - g.eval(t)?).abs());
        }
        Ok(m)
    })
}
