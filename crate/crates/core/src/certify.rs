//! Horizons, a-priori bounds and sampled uniqueness evidence for [`IVProblem`]s
//! that declare a modulus `ω` and weight `φ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::derivator::{Derivator, Jump};
use crate::error::{Error, Result};
use crate::measure::Integrator;
use crate::moduli::{bihari_bound, osgood_check, BihariBound, OmegaTransform, OsgoodReport, OsgoodVerdict};
use crate::solver::{sup_distance, IVProblem, ModulusSpec, SolutionTrace, TimeFn, Weight};

fn spec(p: &IVProblem) -> Result<&ModulusSpec> {
    p.modulus()
        .ok_or_else(|| Error::config("the problem declares no modulus"))
}

/// `ĝ = g_1 + … + g_n` on the intersection of the component windows.
pub fn sum_derivator(p: &IVProblem) -> Result<Derivator> {
    let lower = p
        .derivators()
        .iter()
        .map(|g| g.window().0)
        .fold(f64::NEG_INFINITY, f64::max);
    let upper = p
        .derivators()
        .iter()
        .map(|g| g.window().1)
        .fold(f64::INFINITY, f64::min);
    let restricted = p
        .derivators()
        .iter()
        .map(|g| g.restrict(lower, upper))
        .collect::<Result<Vec<_>>>()?;
    Derivator::sum(&restricted)
}

const WEIGHT_CELLS: usize = 512;

/// `ḡ(t) = ∫_{[t0,t)} φ dĝ`, constant before `t0`.
///
/// With `φ ≡ 1` this is `ĝ` shifted to vanish at `t0`. Otherwise the
/// continuous part is integrated exactly over a fine partition of
/// `[t0, t0 + T]` (so node values are exact up to quadrature) and linear in
/// between; atoms carry `φ(d)·Δĝ(d)`.
pub fn weighted_derivator(p: &IVProblem, phi: &Weight) -> Result<Derivator> {
    let hat = sum_derivator(p)?;
    let (lower, _) = hat.window();
    let (t0, end) = (p.t0(), p.end());

    let mut nodes: Vec<f64> = (0..=WEIGHT_CELLS)
        .map(|k| t0 + (end - t0) * k as f64 / WEIGHT_CELLS as f64)
        .collect();
    *nodes.last_mut().expect("nonempty") = end;
    nodes.extend(hat.breakpoints().iter().copied().filter(|&b| b > t0 && b < end));
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();

    let check = |t: f64| -> Result<f64> {
        let v = phi.eval(t);
        if v.is_finite() && v >= 0.0 {
            Ok(v)
        } else {
            Err(Error::config(format!(
                "weight phi({t}) = {v} is not a nonnegative real"
            )))
        }
    };
    let integrator = Integrator::default();
    let mut breakpoints = Vec::with_capacity(nodes.len() + 1);
    let mut slopes = Vec::with_capacity(nodes.len());
    if lower < t0 {
        breakpoints.push(lower);
        slopes.push(0.0);
    }
    breakpoints.extend_from_slice(&nodes);
    for w in nodes.windows(2) {
        let mass = if phi.is_one() {
            hat.continuous_part(w[1])? - hat.continuous_part(w[0])?
        } else {
            integrator.integrate_continuous(&hat, check, w[0], w[1])?
        };
        slopes.push((mass / (w[1] - w[0])).max(0.0));
    }
    let mut jumps = Vec::new();
    for j in hat.jumps_in(t0, end) {
        let size = check(j.at)? * j.size;
        if size > 0.0 {
            if j.at <= lower {
                return Err(Error::config(format!(
                    "jump of the sum derivator at t0 = {} sits on the window edge",
                    j.at
                )));
            }
            jumps.push(Jump { at: j.at, size });
        }
    }
    Derivator::new((lower, end), 0.0, breakpoints, slopes, jumps)
}

/// Cumulative `Σ_i ∫_{[t0,s)} |f_i(s', x0)| dg_i(s')` at each node of `nodes` (starting at t0).
fn forcing_integrals(p: &IVProblem, nodes: &[f64]) -> Result<Vec<f64>> {
    let integrator = Integrator::default();
    let x0 = p.x0();
    let mut out = vec![0.0; nodes.len()];
    for (i, g) in p.derivators().iter().enumerate() {
        let mut acc = 0.0;
        for k in 1..nodes.len() {
            acc += integrator.integrate(g, |s| Ok(p.eval_rhs(i, s, x0)?.abs()), nodes[k - 1], nodes[k])?;
            out[k] += acc;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonReport {
    pub sigma: f64,
    pub radius: f64,
    pub omega_at_radius: f64,
    /// `μ_ḡ([t0, t0 + σ))`.
    pub weighted_measure: f64,
    /// `Σ_i ∫_{[t0,t0+σ)} |f_i(s, x0)| dg_i(s)`.
    pub forcing: f64,
    /// `radius − (omega_at_radius·weighted_measure + forcing)`, positive when certified.
    pub slack: f64,
    pub candidates: usize,
}

const HORIZON_CANDIDATES: usize = 256;

/// Largest `σ = T·j/256` with `ω(R)·μ_ḡ([t0, t0+σ)) + Σ_i ∫_{[t0,t0+σ)} |f_i(s, x0)| dg_i(s) < R`.
pub fn horizon_for_ball(p: &IVProblem) -> Result<HorizonReport> {
    let radius = p
        .ball_radius()
        .ok_or_else(|| Error::config("the problem declares no ball radius"))?;
    let spec = spec(p)?;
    let gbar = weighted_derivator(p, &spec.phi)?;
    let omega_at_radius = spec.omega.eval(radius);
    if !(omega_at_radius >= 0.0 && omega_at_radius.is_finite()) {
        return Err(Error::config(format!(
            "omega({radius}) = {omega_at_radius} is not a nonnegative real"
        )));
    }
    let t0 = p.t0();
    let nodes: Vec<f64> = (0..=HORIZON_CANDIDATES)
        .map(|j| {
            if j == HORIZON_CANDIDATES {
                p.end()
            } else {
                t0 + p.horizon() * j as f64 / HORIZON_CANDIDATES as f64
            }
        })
        .collect();
    let forcing = forcing_integrals(p, &nodes)?;
    let g_t0 = gbar.eval(t0)?;
    let mut best: Option<HorizonReport> = None;
    let mut best_slack = f64::NEG_INFINITY;
    for j in 1..nodes.len() {
        let weighted_measure = gbar.eval(nodes[j])? - g_t0;
        let slack = radius - (omega_at_radius * weighted_measure + forcing[j]);
        best_slack = best_slack.max(slack);
        if slack > 0.0 {
            best = Some(HorizonReport {
                sigma: nodes[j] - t0,
                radius,
                omega_at_radius,
                weighted_measure,
                forcing: forcing[j],
                slack,
                candidates: HORIZON_CANDIDATES,
            });
        }
    }
    best.ok_or(Error::NoCertifiedHorizon { best_slack })
}

/// The a-priori bound `‖x(t) − x0‖ ≤ h(t) = Ω⁻¹(Ω(κ) + ḡ(t) − ḡ(t0))` on `[t0, t1]`.
#[derive(Debug, Clone)]
pub struct AprioriBound {
    pub t0: f64,
    pub t1: f64,
    /// `∫_{[t0,t1)} max_i |f_i(s, x0)| dĝ(s)`.
    pub kappa: f64,
    /// κ actually used; raised to the lower end of the Ω table when κ is tiny.
    pub kappa_used: f64,
    bound: BihariBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub t1: f64,
    pub kappa: f64,
    pub points_checked: usize,
    /// Largest `‖x(t) − x0‖ − h(t)` over the checked points.
    pub max_excess: f64,
    pub passed: bool,
}

impl AprioriBound {
    pub fn eval(&self, t: f64) -> Result<f64> {
        self.bound.eval(t)
    }

    pub fn eval_right(&self, t: f64) -> Result<f64> {
        self.bound.eval_right(t)
    }

    /// Checks a trace against the bound at every grid point in `[t0, t1]`,
    /// post-jump states included, with additive tolerance `tol`.
    pub fn check_trace(&self, trace: &SolutionTrace, x0: &[f64], tol: f64) -> Result<BoundCheck> {
        let mut points = 0;
        let mut max_excess = f64::NEG_INFINITY;
        for (k, &t) in trace.grid.iter().enumerate() {
            if t > self.t1 {
                break;
            }
            max_excess = max_excess.max(sup_distance(&trace.values[k], x0) - self.eval(t)?);
            points += 1;
            if let Some(post) = &trace.post_jump[k] {
                if t < self.t1 {
                    max_excess = max_excess.max(sup_distance(post, x0) - self.eval_right(t)?);
                    points += 1;
                }
            }
        }
        Ok(BoundCheck {
            t1: self.t1,
            kappa: self.kappa,
            points_checked: points,
            max_excess,
            passed: max_excess <= tol,
        })
    }
}

/// Builds the a-priori bound, halving `t1` from `t0 + T` until the Bihari
/// precondition holds.
pub fn apriori_bound(p: &IVProblem) -> Result<AprioriBound> {
    let spec = spec(p)?;
    let osgood = osgood_check(&spec.omega, spec.u0)?;
    if osgood.verdict != OsgoodVerdict::Divergent {
        return Err(Error::config(format!(
            "modulus {} is not confirmed Osgood (verdict {})",
            spec.omega.name(),
            osgood.verdict
        )));
    }
    let transform = OmegaTransform::new(spec.omega.clone(), spec.u0)?;
    let hat = sum_derivator(p)?;
    let gbar = weighted_derivator(p, &spec.phi)?;
    let integrator = Integrator::default();
    let t0 = p.t0();
    let x0 = p.x0();
    let sup_rhs = |s: f64| -> Result<f64> {
        let mut m: f64 = 0.0;
        for i in 0..p.dim() {
            m = m.max(p.eval_rhs(i, s, x0)?.abs());
        }
        Ok(m)
    };
    let mut t1 = p.end();
    let mut last_err = None;
    for _ in 0..60 {
        let kappa = integrator.integrate(&hat, sup_rhs, t0, t1)?;
        let kappa_used = kappa.max(transform.range().0);
        match bihari_bound(kappa_used, &gbar, t0, t1, &transform) {
            Ok(bound) => {
                return Ok(AprioriBound {
                    t0,
                    t1,
                    kappa,
                    kappa_used,
                    bound,
                })
            }
            Err(e @ Error::BoundInapplicable { .. }) => {
                last_err = Some(e);
                t1 = t0 + 0.5 * (t1 - t0);
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.expect("loop ran"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UniquenessVerdict {
    #[serde(rename = "OSGOOD-UNIQUE")]
    OsgoodUnique,
    #[serde(rename = "MONTEL-TONELLI-UNIQUE")]
    MontelTonelliUnique,
    #[serde(rename = "UNVERIFIED")]
    Unverified,
}

impl std::fmt::Display for UniquenessVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            UniquenessVerdict::OsgoodUnique => "OSGOOD-UNIQUE",
            UniquenessVerdict::MontelTonelliUnique => "MONTEL-TONELLI-UNIQUE",
            UniquenessVerdict::Unverified => "UNVERIFIED",
        })
    }
}

/// A sample where `|f_i(t,x) − f_i(t,y)| ≤ φ(t)·ω(‖x − y‖)` failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzWitness {
    pub component: usize,
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub difference: f64,
    pub allowed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub verdict: UniquenessVerdict,
    /// Always true: the inequality is only spot-checked.
    pub sampled: bool,
    pub osgood: Option<OsgoodReport>,
    pub samples: usize,
    pub sample_radius: f64,
    pub violations: usize,
    pub witness: Option<LipschitzWitness>,
    /// `∫_{[t0,t0+T)} φ dg_i` per component, when a weight function is declared.
    pub phi_integrals: Option<Vec<f64>>,
    pub notes: Vec<String>,
}

pub const DEFAULT_CERTIFICATE_SAMPLES: usize = 10_000;

fn uniform_ball(rng: &mut ChaCha8Rng, center: &[f64], radius: f64) -> Vec<f64> {
    center
        .iter()
        .map(|c| c + radius * rng.random_range(-1.0..=1.0))
        .collect()
}

/// Sampled evidence for uniqueness under the declared `(ω, φ)`.
///
/// The Osgood condition on `ω` must be numerically DIVERGENT, and the
/// inequality `|f_i(t,x) − f_i(t,y)| ≤ φ(t)·ω(‖x − y‖)` must hold on `samples`
/// random `(t, x, y)` in `[t0, t0+T) × B̄(x0, r)²`, half of them pairs at
/// log-uniform distances down to `1e-12`. `r` is the ball radius, or
/// `max(1, ‖x0‖)` without one.
pub fn uniqueness_certificate(p: &IVProblem, samples: usize, seed: u64) -> Result<UniquenessReport> {
    let mut notes = vec!["sampled evidence, not a proof".to_string()];
    let radius = p
        .ball_radius()
        .unwrap_or_else(|| p.x0().iter().fold(1.0f64, |m, v| m.max(v.abs())));
    let Some(spec) = p.modulus() else {
        notes.push("no modulus declared".into());
        return Ok(UniquenessReport {
            verdict: UniquenessVerdict::Unverified,
            sampled: true,
            osgood: None,
            samples: 0,
            sample_radius: radius,
            violations: 0,
            witness: None,
            phi_integrals: None,
            notes,
        });
    };
    let osgood = osgood_check(&spec.omega, spec.u0)?;
    let mut verdict_ok = osgood.verdict == OsgoodVerdict::Divergent;
    if !verdict_ok {
        notes.push(format!(
            "Osgood check on {} returned {}",
            spec.omega.name(),
            osgood.verdict
        ));
    }

    let phi_integrals = match &spec.phi {
        Weight::One => None,
        Weight::Function(phi) => {
            let integrator = Integrator::default();
            let mut ints = Vec::with_capacity(p.dim());
            for g in p.derivators() {
                let v = integrator.integrate(
                    g,
                    |t| {
                        let v = phi(t);
                        if v >= 0.0 {
                            Ok(v)
                        } else {
                            Err(Error::Integrand { t, value: v })
                        }
                    },
                    p.t0(),
                    p.end(),
                );
                match v {
                    Ok(v) => ints.push(v),
                    Err(e) => {
                        verdict_ok = false;
                        notes.push(format!("phi is not g-integrable: {e}"));
                        ints.push(f64::NAN);
                    }
                }
            }
            Some(ints)
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut witness: Option<LipschitzWitness> = None;
    let mut worst = 0.0;
    let x0 = p.x0();
    for k in 0..samples {
        let t = p.t0() + p.horizon() * rng.random::<f64>();
        let x = uniform_ball(&mut rng, x0, radius);
        let y = if k % 2 == 0 {
            uniform_ball(&mut rng, x0, radius)
        } else {
            let scale = 10f64.powf(-12.0 * rng.random::<f64>());
            x.iter()
                .zip(x0)
                .map(|(xi, ci)| (xi + scale * rng.random_range(-1.0..=1.0)).clamp(ci - radius, ci + radius))
                .collect()
        };
        let allowed = spec.phi.eval(t) * spec.omega.eval(sup_distance(&x, &y));
        for i in 0..p.dim() {
            let (fx, fy) = match (p.eval_rhs(i, t, &x), p.eval_rhs(i, t, &y)) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(e), _) | (_, Err(e)) => {
                    violations += 1;
                    notes.push(format!("rhs evaluation failed: {e}"));
                    continue;
                }
            };
            let difference = (fx - fy).abs();
            let excess = difference - allowed - 1e-12 * (1.0 + fx.abs() + fy.abs());
            if !(excess <= 0.0) {
                violations += 1;
                if excess > worst || witness.is_none() {
                    worst = excess;
                    witness = Some(LipschitzWitness {
                        component: i + 1,
                        t,
                        x: x.clone(),
                        y: y.clone(),
                        difference,
                        allowed,
                    });
                }
            }
        }
    }
    let verdict = if !verdict_ok || violations > 0 {
        UniquenessVerdict::Unverified
    } else if spec.phi.is_one() {
        UniquenessVerdict::OsgoodUnique
    } else {
        UniquenessVerdict::MontelTonelliUnique
    };
    Ok(UniquenessReport {
        verdict,
        sampled: true,
        osgood: Some(osgood),
        samples,
        sample_radius: radius,
        violations,
        witness,
        phi_integrals,
        notes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationWitness {
    pub component: usize,
    pub t: f64,
    pub x: Vec<f64>,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaratheodoryReport {
    pub radius: f64,
    pub samples: usize,
    pub violations: usize,
    pub witness: Option<DominationWitness>,
    pub passed: bool,
    pub sampled: bool,
}

/// Sampled check of `|f_i(t, x)| ≤ h_i(t)` on `[t0, t0+T) × B̄(x0, r)`.
///
/// Besides `samples` random points, every vertex of the ball (for up to ten
/// components) is paired with a uniform time grid.
pub fn caratheodory_bound_check(
    p: &IVProblem,
    r: f64,
    bounds: &[TimeFn],
    samples: usize,
    seed: u64,
) -> Result<CaratheodoryReport> {
    if !(r > 0.0) {
        return Err(Error::config(format!("radius {r} must be positive")));
    }
    if bounds.len() != p.dim() {
        return Err(Error::config(format!(
            "{} bounds for {} components",
            bounds.len(),
            p.dim()
        )));
    }
    let x0 = p.x0();
    let n = p.dim();
    let mut points: Vec<(f64, Vec<f64>)> = Vec::new();
    if n <= 10 {
        for mask in 0u32..(1 << n) {
            let v: Vec<f64> = (0..n)
                .map(|i| if mask >> i & 1 == 1 { x0[i] + r } else { x0[i] - r })
                .collect();
            for j in 0..16 {
                points.push((p.t0() + p.horizon() * j as f64 / 16.0, v.clone()));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let t = p.t0() + p.horizon() * rng.random::<f64>();
        points.push((t, uniform_ball(&mut rng, x0, r)));
    }
    let mut violations = 0;
    let mut witness = None;
    let mut worst = f64::NEG_INFINITY;
    for (t, x) in &points {
        for (i, bound_at) in bounds.iter().enumerate() {
            let value = p.eval_rhs(i, *t, x)?;
            let bound = bound_at(*t);
            let excess = value.abs() - bound;
            if !(excess <= 1e-12 * (1.0 + bound.abs())) {
                violations += 1;
                if excess > worst {
                    worst = excess;
                    witness = Some(DominationWitness {
                        component: i + 1,
                        t: *t,
                        x: x.clone(),
                        value,
                        bound,
                    });
                }
            }
        }
    }
    Ok(CaratheodoryReport {
        radius: r,
        samples: points.len(),
        violations,
        witness,
        passed: violations == 0,
        sampled: true,
    })
}
