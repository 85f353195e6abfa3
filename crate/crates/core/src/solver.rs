//! Systems `x'_{g_i}(t) = f_i(t, x(t))`, `x(t0) = x0`, where every component
//! is differentiated with respect to its own derivator.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::derivator::Derivator;
use crate::error::{Error, Result};
use crate::measure::Integrator;
use crate::moduli::OsgoodModulus;
use crate::quadrature::QuadConfig;

/// Right-hand side of one component, `f_i(t, x)`.
pub type Rhs = Arc<dyn Fn(f64, &[f64]) -> Result<f64> + Send + Sync>;

/// Nonnegative scalar function of time.
pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The weight `φ` in `|f_i(t,x) − f_i(t,y)| ≤ φ(t)·ω(‖x − y‖)`.
#[derive(Clone)]
pub enum Weight {
    One,
    Function(TimeFn),
}

impl Weight {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Weight::One => 1.0,
            Weight::Function(f) => f(t),
        }
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Weight::One)
    }
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::One => f.write_str("One"),
            Weight::Function(_) => f.write_str("Function(..)"),
        }
    }
}

/// A declared modulus `ω`, weight `φ` and the anchor `u0` of `Ω`.
#[derive(Debug, Clone)]
pub struct ModulusSpec {
    pub omega: OsgoodModulus,
    pub phi: Weight,
    pub u0: f64,
}

/// An initial value problem on `[t0, t0 + horizon]`.
#[derive(Clone)]
pub struct IVProblem {
    t0: f64,
    horizon: f64,
    x0: Vec<f64>,
    derivators: Vec<Derivator>,
    rhs: Vec<Rhs>,
    ball_radius: Option<f64>,
    modulus: Option<ModulusSpec>,
}

impl fmt::Debug for IVProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IVProblem")
            .field("t0", &self.t0)
            .field("horizon", &self.horizon)
            .field("x0", &self.x0)
            .field("derivators", &self.derivators)
            .field("ball_radius", &self.ball_radius)
            .field("modulus", &self.modulus)
            .finish_non_exhaustive()
    }
}

impl IVProblem {
    pub fn new(t0: f64, horizon: f64, x0: Vec<f64>, derivators: Vec<Derivator>, rhs: Vec<Rhs>) -> Result<Self> {
        if !(t0.is_finite() && horizon.is_finite() && horizon > 0.0) {
            return Err(Error::config(format!(
                "need finite t0 and horizon > 0, got {t0}, {horizon}"
            )));
        }
        let n = x0.len();
        if n == 0 {
            return Err(Error::config("x0 must have at least one component"));
        }
        if derivators.len() != n || rhs.len() != n {
            return Err(Error::config(format!(
                "dimension mismatch: {n} initial values, {} derivators, {} right-hand sides",
                derivators.len(),
                rhs.len()
            )));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("x0 must be finite"));
        }
        let end = t0 + horizon;
        for (i, g) in derivators.iter().enumerate() {
            let (lower, upper) = g.window();
            if t0 < lower || end > upper {
                return Err(Error::config(format!(
                    "derivator {} has window [{lower}, {upper}] which does not contain [{t0}, {end}]",
                    i + 1
                )));
            }
        }
        Ok(IVProblem {
            t0,
            horizon,
            x0,
            derivators,
            rhs,
            ball_radius: None,
            modulus: None,
        })
    }

    pub fn with_ball(mut self, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::config(format!("ball radius {radius} must be positive")));
        }
        self.ball_radius = Some(radius);
        Ok(self)
    }

    pub fn with_modulus(mut self, spec: ModulusSpec) -> Result<Self> {
        if !(spec.u0 > 0.0 && spec.u0.is_finite()) {
            return Err(Error::config(format!("u0 = {} must be positive", spec.u0)));
        }
        self.modulus = Some(spec);
        Ok(self)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn end(&self) -> f64 {
        self.t0 + self.horizon
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    pub fn derivators(&self) -> &[Derivator] {
        &self.derivators
    }

    pub fn rhs(&self) -> &[Rhs] {
        &self.rhs
    }

    pub fn ball_radius(&self) -> Option<f64> {
        self.ball_radius
    }

    pub fn modulus(&self) -> Option<&ModulusSpec> {
        self.modulus.as_ref()
    }

    /// `f_i(t, x)`, rejecting non-finite values.
    pub fn eval_rhs(&self, i: usize, t: f64, x: &[f64]) -> Result<f64> {
        let v = (self.rhs[i])(t, x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numeric(format!("f_{}({t}, {x:?}) = {v} is not finite", i + 1)))
        }
    }

    fn check_ball(&self, t: f64, x: &[f64]) -> Result<()> {
        if let Some(radius) = self.ball_radius {
            let distance = sup_distance(x, &self.x0);
            if !(distance <= radius) {
                return Err(Error::DomainExit { t, radius, distance });
            }
        }
        Ok(())
    }

    /// Whether any component's derivator jumps at `t`.
    fn jumps_at(&self, t: f64) -> bool {
        self.derivators.iter().any(|g| g.jump_unchecked(t) > 0.0)
    }
}

pub(crate) fn sup_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Uniform partition of `[t0, t0 + σ]` into `n_steps` cells, refined by every
/// jump point in `[t0, t0 + σ)`; sorted and deduplicated by exact comparison.
pub fn build_grid(p: &IVProblem, sigma: f64, n_steps: usize) -> Result<Vec<f64>> {
    if !(sigma > 0.0 && sigma <= p.horizon) {
        return Err(Error::config(format!("sigma = {sigma} must lie in (0, {}]", p.horizon)));
    }
    if n_steps == 0 {
        return Err(Error::config("n_steps must be at least 1"));
    }
    let end = p.t0 + sigma;
    let mut grid: Vec<f64> = (0..n_steps).map(|k| p.t0 + sigma * k as f64 / n_steps as f64).collect();
    grid.push(end);
    for g in &p.derivators {
        grid.extend(g.jumps_in(p.t0, end).iter().map(|j| j.at));
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(grid)
}

fn check_grid(p: &IVProblem, grid: &[f64]) -> Result<()> {
    if grid.len() < 2 || grid[0] != p.t0 {
        return Err(Error::config("grid must start at t0 and have at least two points"));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::config("grid must be strictly increasing"));
    }
    let end = *grid.last().expect("nonempty");
    if end > p.end() {
        return Err(Error::config(format!(
            "grid ends at {end}, beyond t0 + T = {}",
            p.end()
        )));
    }
    for g in &p.derivators {
        if let Some(j) = g
            .jumps_in(p.t0, end)
            .iter()
            .find(|j| grid.binary_search_by(|x| x.total_cmp(&j.at)).is_err())
        {
            return Err(Error::config(format!("grid misses the jump at {}", j.at)));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Euler,
    Picard,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Euler => "euler",
            Method::Picard => "picard",
        })
    }
}

/// A computed solution on a grid `t0 = τ_0 < … < τ_N = t0 + σ`.
///
/// `values[k]` is `x(τ_k)`; the last one is the left limit at `t0 + σ`.
/// `post_jump[k]` holds `x(τ_k⁺)` whenever some derivator jumps at `τ_k < t0 + σ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionTrace {
    pub grid: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub post_jump: Vec<Option<Vec<f64>>>,
    pub method: Method,
    /// Per-component residual of the integral equation.
    pub residual: Vec<f64>,
    pub iterations: Option<usize>,
}

impl SolutionTrace {
    pub fn final_value(&self) -> &[f64] {
        self.values.last().expect("a trace has at least two points")
    }

    /// State just after `τ_k`: the post-jump value when there is one.
    pub fn right_value(&self, k: usize) -> &[f64] {
        self.post_jump[k].as_deref().unwrap_or(&self.values[k])
    }

    /// Sup-norm distance to another trace on the same grid, post-jump states included.
    pub fn distance(&self, other: &SolutionTrace) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::config("traces live on different grids"));
        }
        let mut d: f64 = 0.0;
        for k in 0..self.grid.len() {
            d = d.max(sup_distance(&self.values[k], &other.values[k]));
            d = d.max(sup_distance(self.right_value(k), other.right_value(k)));
        }
        Ok(d)
    }
}

/// Quadrature used inside grid cells: the iterates are piecewise linear, so a
/// single 4-point panel per cell is ample.
fn cell_integrator() -> Integrator {
    Integrator::new(QuadConfig { order: 4, panels: 1 }).expect("valid rule")
}

/// Forward scheme: at each `τ_k` the exact impulse `x_i + f_i(τ_k, x)·Δg_i(τ_k)`
/// is applied with the pre-jump state, then an explicit Euler step driven by
/// the increment of the continuous part of `g_i`, evaluated at the post-jump state.
pub fn solve_euler(p: &IVProblem, grid: &[f64]) -> Result<SolutionTrace> {
    check_grid(p, grid)?;
    let n = p.dim();
    let mut values = Vec::with_capacity(grid.len());
    let mut post_jump = Vec::with_capacity(grid.len());
    let mut x = p.x0.clone();
    values.push(x.clone());
    let mut y = vec![0.0; n];
    for w in grid.windows(2) {
        let (tau, next) = (w[0], w[1]);
        y.copy_from_slice(&x);
        let mut jumped = false;
        for (i, g) in p.derivators.iter().enumerate() {
            let delta = g.jump_unchecked(tau);
            if delta > 0.0 {
                y[i] = x[i] + p.eval_rhs(i, tau, &x)? * delta;
                jumped = true;
            }
        }
        if jumped {
            p.check_ball(tau, &y)?;
            post_jump.push(Some(y.clone()));
        } else {
            post_jump.push(None);
        }
        for (i, g) in p.derivators.iter().enumerate() {
            let dc = g.continuous_part(next)? - g.continuous_part(tau)?;
            x[i] = if dc == 0.0 {
                y[i]
            } else {
                y[i] + p.eval_rhs(i, tau, &y)? * dc
            };
        }
        p.check_ball(next, &x)?;
        values.push(x.clone());
    }
    post_jump.push(None);
    let mut trace = SolutionTrace {
        grid: grid.to_vec(),
        values,
        post_jump,
        method: Method::Euler,
        residual: vec![],
        iterations: None,
    };
    trace.residual = residual(p, &trace)?;
    Ok(trace)
}

/// Applies `x ↦ x0 + ∫_{[t0,·)} f(s, x(s)) dg(s)` to a trace, returning new
/// values and post-jump states. Atoms use the pre-jump state; inside cells the
/// trace is interpolated linearly from the post-jump value.
/// Grid values and post-jump states of one iterate.
type Iterate = (Vec<Vec<f64>>, Vec<Option<Vec<f64>>>);

fn picard_map(
    p: &IVProblem,
    grid: &[f64],
    values: &[Vec<f64>],
    post: &[Option<Vec<f64>>],
    integrator: &Integrator,
) -> Result<Iterate> {
    let n = p.dim();
    let mut new_values = Vec::with_capacity(grid.len());
    let mut new_post = Vec::with_capacity(grid.len());
    let mut acc = p.x0.clone();
    new_values.push(acc.clone());
    let mut xs = vec![0.0; n];
    for k in 0..grid.len() - 1 {
        let (tau, next) = (grid[k], grid[k + 1]);
        let left = post[k].as_deref().unwrap_or(&values[k]);
        let right = &values[k + 1];
        let width = next - tau;
        let mut jump_state = None;
        for (i, g) in p.derivators.iter().enumerate() {
            let delta = g.jump_unchecked(tau);
            if delta > 0.0 {
                let after = acc[i] + p.eval_rhs(i, tau, &values[k])? * delta;
                jump_state.get_or_insert_with(|| acc.clone())[i] = after;
            }
        }
        if let Some(state) = &jump_state {
            acc.copy_from_slice(state);
        }
        for (i, g) in p.derivators.iter().enumerate() {
            let cell = integrator.integrate_continuous(
                g,
                |s| {
                    let theta = (s - tau) / width;
                    for j in 0..n {
                        xs[j] = left[j] + theta * (right[j] - left[j]);
                    }
                    p.eval_rhs(i, s, &xs)
                },
                tau,
                next,
            )?;
            acc[i] += cell;
        }
        new_post.push(jump_state);
        new_values.push(acc.clone());
    }
    new_post.push(None);
    Ok((new_values, new_post))
}

/// Picard iteration on the integral equation, starting from the constant
/// iterate `x0`. Stops when the sup-norm change is at most `tol`.
pub fn solve_picard(p: &IVProblem, grid: &[f64], tol: f64, max_iter: usize) -> Result<SolutionTrace> {
    solve_picard_from(p, grid, tol, max_iter, None)
}

/// [`solve_picard`] with an optional starting trace on the same grid.
pub fn solve_picard_from(
    p: &IVProblem,
    grid: &[f64],
    tol: f64,
    max_iter: usize,
    start: Option<&SolutionTrace>,
) -> Result<SolutionTrace> {
    check_grid(p, grid)?;
    if !(tol > 0.0) {
        return Err(Error::config(format!("tol = {tol} must be positive")));
    }
    if max_iter == 0 {
        return Err(Error::config("max_iter must be at least 1"));
    }
    let (mut values, mut post) = match start {
        Some(tr) => {
            if tr.grid != grid {
                return Err(Error::config("starting trace lives on a different grid"));
            }
            (tr.values.clone(), tr.post_jump.clone())
        }
        None => {
            let post = grid
                .iter()
                .enumerate()
                .map(|(k, &t)| (k + 1 < grid.len() && p.jumps_at(t)).then(|| p.x0.clone()))
                .collect();
            (vec![p.x0.clone(); grid.len()], post)
        }
    };
    let integrator = cell_integrator();
    let mut last_change = f64::INFINITY;
    for iteration in 1..=max_iter {
        let (new_values, new_post) = picard_map(p, grid, &values, &post, &integrator)?;
        let mut change = vec![0.0f64; p.dim()];
        for k in 0..grid.len() {
            for (i, c) in change.iter_mut().enumerate() {
                *c = c.max((new_values[k][i] - values[k][i]).abs());
                if let (Some(a), Some(b)) = (&new_post[k], &post[k]) {
                    *c = c.max((a[i] - b[i]).abs());
                }
            }
        }
        for k in 0..grid.len() {
            p.check_ball(grid[k], &new_values[k])?;
            if let Some(s) = &new_post[k] {
                p.check_ball(grid[k], s)?;
            }
        }
        values = new_values;
        post = new_post;
        last_change = change.iter().copied().fold(0.0, f64::max);
        if last_change <= tol {
            return Ok(SolutionTrace {
                grid: grid.to_vec(),
                values,
                post_jump: post,
                method: Method::Picard,
                residual: change,
                iterations: Some(iteration),
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        last_change,
    })
}

/// Per component, `max_k |x_i(τ_k) − x0_i − ∫_{[t0,τ_k)} f_i(s, x(s)) dg_i(s)|`
/// with the trace interpolated as in Picard iteration. Post-jump states are
/// checked against the same integral over `[t0, τ_k]`.
pub fn residual(p: &IVProblem, trace: &SolutionTrace) -> Result<Vec<f64>> {
    check_grid(p, &trace.grid)?;
    if trace.values.len() != trace.grid.len() || trace.post_jump.len() != trace.grid.len() {
        return Err(Error::config("trace arrays do not match its grid"));
    }
    let (integral, integral_post) = picard_map(p, &trace.grid, &trace.values, &trace.post_jump, &cell_integrator())?;
    let mut out = vec![0.0f64; p.dim()];
    for k in 0..trace.grid.len() {
        for (i, r) in out.iter_mut().enumerate() {
            *r = r.max((trace.values[k][i] - integral[k][i]).abs());
            if let (Some(a), Some(b)) = (&trace.post_jump[k], &integral_post[k]) {
                *r = r.max((a[i] - b[i]).abs());
            }
        }
    }
    Ok(out)
}

/// Euler against Picard on a grid and on its refinement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub n_steps: usize,
    pub distance: f64,
    pub refined_distance: f64,
    /// `distance / refined_distance`.
    pub refinement_ratio: f64,
    pub euler_final: Vec<f64>,
    pub picard_final: Vec<f64>,
}

pub fn compare_methods(p: &IVProblem, n_steps: usize, tol: f64, max_iter: usize) -> Result<CompareReport> {
    let run = |n: usize| -> Result<(f64, SolutionTrace, SolutionTrace)> {
        let grid = build_grid(p, p.horizon, n)?;
        let e = solve_euler(p, &grid)?;
        let q = solve_picard(p, &grid, tol, max_iter)?;
        Ok((e.distance(&q)?, e, q))
    };
    let (distance, e, q) = run(n_steps)?;
    let (refined_distance, _, _) = run(2 * n_steps)?;
    Ok(CompareReport {
        n_steps,
        distance,
        refined_distance,
        refinement_ratio: distance / refined_distance,
        euler_final: e.final_value().to_vec(),
        picard_final: q.final_value().to_vec(),
    })
}
