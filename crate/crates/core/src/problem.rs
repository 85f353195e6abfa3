//! The declarative JSON problem file.
//!
//! ```json
//! {
//!   "version": 1,
//!   "derivators": {
//!     "g": { "window": [0, 2], "breakpoints": [0, 2], "slopes": [1], "jumps": [[1, 1]] },
//!     "h": { "window": [0, 2], "classification": { "discontinuities": [1, 0.5] } }
//!   },
//!   "problem": {
//!     "t0": 0, "horizon": 2, "x0": [1],
//!     "components": [ { "derivator": "g", "rhs": "x1" } ],
//!     "ball_radius": 100,
//!     "modulus": { "builtin": "omega_k", "k": 1 },
//!     "phi": "1", "u0": 0.5
//!   },
//!   "solver": { "method": "picard", "n_steps": 1000, "tol": 1e-10, "max_iter": 500 },
//!   "output": { "trace": "trace.csv", "summary": "summary.json" }
//! }
//! ```
//!
//! A modulus is `{"builtin": "linear"}`, `{"builtin": "omega_k", "k": 1..3}`,
//! `{"builtin": "power", "p": p}` or `{"expr": "..."}`, where the expression is
//! written in the variable `t`. `phi` is an expression in `t`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::derivator::{Classification, Derivator, DerivatorRepr};
use crate::error::{Error, Result};
use crate::expr::{parse, parse_scalar};
use crate::moduli::{OsgoodModulus, OMEGA_K_MAX};
use crate::solver::{IVProblem, Method, ModulusSpec, Rhs, Weight};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub version: u32,
    pub derivators: BTreeMap<String, DerivatorDef>,
    pub problem: ProblemDef,
    #[serde(default)]
    pub solver: SolverDef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputDef>,
}

/// Either an explicit piecewise-linear representation or a classification
/// `(C, D)` with optional jump weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DerivatorDef {
    Classified(ClassifiedDef),
    Piecewise(DerivatorRepr),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifiedDef {
    pub window: (f64, f64),
    pub classification: ClassificationDef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassificationDef {
    #[serde(default)]
    pub constancy: Vec<(f64, f64)>,
    #[serde(default)]
    pub discontinuities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDef {
    pub t0: f64,
    pub horizon: f64,
    pub x0: Vec<f64>,
    pub components: Vec<ComponentDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus: Option<ModulusDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentDef {
    pub derivator: String,
    pub rhs: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulusDef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverDef {
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "default_n_steps")]
    pub n_steps: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_method() -> Method {
    Method::Picard
}

fn default_n_steps() -> usize {
    1000
}

fn default_tol() -> f64 {
    1e-10
}

fn default_max_iter() -> usize {
    500
}

impl Default for SolverDef {
    fn default() -> Self {
        SolverDef {
            method: default_method(),
            n_steps: default_n_steps(),
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputDef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<PathBuf>,
}

/// A validated problem ready for the solvers.
#[derive(Debug, Clone)]
pub struct LoadedProblem {
    pub problem: IVProblem,
    pub solver: SolverDef,
    pub output: OutputDef,
    /// Derivator name driving each component.
    pub component_derivators: Vec<String>,
    pub derivators: BTreeMap<String, Derivator>,
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Schema(format!("cannot read file: {e}")))?;
        Self::from_json(&text)
    }

    /// Builds every named derivator.
    pub fn build_derivators(&self) -> Result<BTreeMap<String, Derivator>> {
        self.derivators
            .iter()
            .map(|(name, def)| {
                def.build()
                    .map(|g| (name.clone(), g))
                    .map_err(|e| Error::Schema(format!("derivator `{name}`: {e}")))
            })
            .collect()
    }

    pub fn build(&self) -> Result<LoadedProblem> {
        if self.version != FORMAT_VERSION {
            return Err(Error::Schema(format!(
                "unsupported version {}, expected {FORMAT_VERSION}",
                self.version
            )));
        }
        let derivators = self.build_derivators()?;
        let p = &self.problem;
        let n = p.x0.len();
        if p.components.len() != n {
            return Err(Error::Schema(format!(
                "x0 has {n} entries but {} components are given",
                p.components.len()
            )));
        }
        let mut gs = Vec::with_capacity(n);
        let mut rhs: Vec<Rhs> = Vec::with_capacity(n);
        for (i, c) in p.components.iter().enumerate() {
            let g = derivators
                .get(&c.derivator)
                .ok_or_else(|| Error::Schema(format!("component {}: undefined derivator `{}`", i + 1, c.derivator)))?;
            gs.push(g.clone());
            let tree = parse(&c.rhs, n).map_err(|e| Error::Schema(format!("component {} rhs: {e}", i + 1)))?;
            rhs.push(Arc::new(move |t, x: &[f64]| tree.eval(t, x)));
        }
        let mut problem = IVProblem::new(p.t0, p.horizon, p.x0.clone(), gs, rhs).map_err(schema)?;
        if let Some(r) = p.ball_radius {
            problem = problem.with_ball(r).map_err(schema)?;
        }
        match (&p.modulus, &p.phi, p.u0) {
            (None, None, None) => {}
            (Some(m), _, _) => {
                let omega = m.build().map_err(|e| Error::Schema(format!("modulus: {e}")))?;
                let phi = match &p.phi {
                    None => Weight::One,
                    Some(src) => build_weight(src, problem.t0(), problem.end())?,
                };
                let u0 = p.u0.unwrap_or(0.5);
                problem = problem.with_modulus(ModulusSpec { omega, phi, u0 }).map_err(schema)?;
            }
            (None, _, _) => return Err(Error::Schema("phi and u0 need a modulus".into())),
        }
        let s = &self.solver;
        if s.n_steps == 0 || !(s.tol > 0.0) || s.max_iter == 0 {
            return Err(Error::Schema(
                "solver needs n_steps >= 1, tol > 0 and max_iter >= 1".into(),
            ));
        }
        Ok(LoadedProblem {
            problem,
            solver: s.clone(),
            output: self.output.clone().unwrap_or_default(),
            component_derivators: p.components.iter().map(|c| c.derivator.clone()).collect(),
            derivators,
        })
    }
}

/// Reads and validates a problem file.
pub fn load_problem(path: &Path) -> Result<LoadedProblem> {
    ProblemFile::read(path)?.build()
}

/// The `derivators` block of any JSON document, other keys ignored.
#[derive(Debug, Clone, Deserialize)]
struct DerivatorBlock {
    derivators: BTreeMap<String, DerivatorDef>,
}

/// Reads only the named derivators of a file; a whole problem file works too.
pub fn load_derivators(path: &Path) -> Result<BTreeMap<String, Derivator>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Schema(format!("cannot read {}: {e}", path.display())))?;
    let block: DerivatorBlock =
        serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
    block
        .derivators
        .iter()
        .map(|(name, def)| {
            def.build()
                .map(|g| (name.clone(), g))
                .map_err(|e| Error::Schema(format!("derivator `{name}`: {e}")))
        })
        .collect()
}

fn schema(e: Error) -> Error {
    match e {
        Error::Schema(_) => e,
        other => Error::Schema(other.to_string()),
    }
}

impl DerivatorDef {
    pub fn build(&self) -> Result<Derivator> {
        match self {
            DerivatorDef::Piecewise(r) => Derivator::try_from(r.clone()),
            DerivatorDef::Classified(c) => {
                let cls = Classification::new(
                    c.classification.constancy.clone(),
                    c.classification.discontinuities.clone(),
                )?;
                Derivator::from_classification(&cls, c.window, c.weights.as_deref())
            }
        }
    }
}

impl ModulusDef {
    pub fn build(&self) -> Result<OsgoodModulus> {
        let m = match (self.builtin.as_deref(), &self.expr) {
            (Some(_), Some(_)) => return Err(Error::Schema("give either `builtin` or `expr`, not both".into())),
            (None, None) => return Err(Error::Schema("modulus needs `builtin` or `expr`".into())),
            (None, Some(src)) => {
                if self.k.is_some() || self.p.is_some() {
                    return Err(Error::Schema("`k` and `p` only apply to builtin moduli".into()));
                }
                expression_modulus(src)?
            }
            (Some(name), None) => match (name, self.k, self.p) {
                ("linear", None, None) => OsgoodModulus::linear(),
                ("omega_k", Some(k), None) => OsgoodModulus::omega_k(k)?,
                ("power", None, Some(p)) => OsgoodModulus::power(p)?,
                ("omega_k", _, _) => return Err(Error::Schema(format!("omega_k needs only `k` in 1..={OMEGA_K_MAX}"))),
                ("power", _, _) => return Err(Error::Schema("power needs only `p`".into())),
                ("linear", _, _) => return Err(Error::Schema("linear takes no parameters".into())),
                (other, _, _) => return Err(Error::Schema(format!("unknown builtin modulus `{other}`"))),
            },
        };
        m.validate_sampled()?;
        Ok(m)
    }
}

/// A modulus from a command-line style name: `linear`, `omega_k(k)`,
/// `power(p)`, or else an expression in `t`.
pub fn modulus_from_text(text: &str) -> Result<OsgoodModulus> {
    let text = text.trim();
    let call = |name: &str| {
        text.strip_prefix(name)
            .and_then(|r| r.trim_start().strip_prefix('('))
            .and_then(|r| r.strip_suffix(')'))
            .map(str::trim)
    };
    let m = if text == "linear" {
        OsgoodModulus::linear()
    } else if let Some(k) = call("omega_k").filter(|a| !a.contains(',')) {
        let k: u32 = k
            .parse()
            .map_err(|_| Error::config(format!("bad omega_k index `{k}`")))?;
        OsgoodModulus::omega_k(k)?
    } else if let Some(p) = call("power") {
        let p: f64 = p
            .parse()
            .map_err(|_| Error::config(format!("bad power exponent `{p}`")))?;
        OsgoodModulus::power(p)?
    } else {
        expression_modulus(text)?
    };
    m.validate_sampled()?;
    Ok(m)
}

fn expression_modulus(src: &str) -> Result<OsgoodModulus> {
    let tree = parse_scalar(src)?;
    Ok(OsgoodModulus::new(src, move |s| {
        tree.eval_scalar(s).unwrap_or(f64::NAN)
    }))
}

/// `φ` must evaluate to a finite nonnegative value on `[t0, end]`; checked on a
/// grid of 1025 points.
fn build_weight(src: &str, t0: f64, end: f64) -> Result<Weight> {
    let tree = parse_scalar(src).map_err(|e| Error::Schema(format!("phi: {e}")))?;
    for j in 0..=1024 {
        let t = t0 + (end - t0) * j as f64 / 1024.0;
        let v = tree.eval_scalar(t).map_err(|e| Error::Schema(format!("phi: {e}")))?;
        if v < 0.0 {
            return Err(Error::Schema(format!("phi({t}) = {v} is negative")));
        }
    }
    Ok(Weight::Function(Arc::new(move |t| {
        tree.eval_scalar(t).unwrap_or(f64::NAN)
    })))
}

#[cfg(test)]
mod tests {
    use super::*;

    const IMPULSIVE: &str = r#"{
        "version": 1,
        "derivators": { "g": { "window": [0, 2], "breakpoints": [0, 2], "slopes": [1], "jumps": [[1, 1]] } },
        "problem": { "t0": 0, "horizon": 2, "x0": [1], "components": [ { "derivator": "g", "rhs": "x1" } ] },
        "solver": { "method": "euler", "n_steps": 200 }
    }"#;

    #[test]
    fn loads_the_impulsive_problem() {
        let lp = ProblemFile::from_json(IMPULSIVE).unwrap().build().unwrap();
        assert_eq!(lp.problem.dim(), 1);
        assert_eq!(lp.solver.method, Method::Euler);
        assert_eq!(lp.solver.tol, 1e-10);
        assert_eq!(lp.problem.derivators()[0].jump(1.0).unwrap(), 1.0);
        assert_eq!(lp.problem.eval_rhs(0, 0.3, &[2.5]).unwrap(), 2.5);
    }

    #[test]
    fn classified_derivators_and_moduli() {
        let text = r#"{
            "version": 1,
            "derivators": {
                "h": { "window": [0, 2], "classification": { "constancy": [[0.25, 0.5]], "discontinuities": [1] }, "weights": [0.5] }
            },
            "problem": {
                "t0": 0, "horizon": 2, "x0": [0, 0],
                "components": [ { "derivator": "h", "rhs": "omega_k(1, norm_inf(x))" },
                                { "derivator": "h", "rhs": "(1+t)*omega_k(1, norm_inf(x))" } ],
                "modulus": { "builtin": "omega_k", "k": 1 }, "phi": "1+t", "u0": 0.3
            }
        }"#;
        let lp = ProblemFile::from_json(text).unwrap().build().unwrap();
        let g = &lp.problem.derivators()[0];
        assert_eq!(g.jump(1.0).unwrap(), 0.5);
        assert_eq!(g.slope_at(0.3).unwrap(), 0.0);
        let m = lp.problem.modulus().unwrap();
        assert_eq!(m.u0, 0.3);
        assert_eq!(m.phi.eval(1.0), 2.0);
    }

    #[test]
    fn schema_errors() {
        let bad = |text: &str| match ProblemFile::from_json(text).and_then(|f| f.build()) {
            Err(e @ Error::Schema(_)) => e.to_string(),
            other => panic!("unexpected {other:?}"),
        };
        let missing = IMPULSIVE.replace(r#""derivator": "g""#, r#""derivator": "q""#);
        assert!(bad(&missing).contains("undefined derivator `q`"));
        assert!(bad(&IMPULSIVE.replace(r#""version": 1"#, r#""version": 7"#)).contains("version"));
        assert!(bad(&IMPULSIVE.replace(r#""rhs": "x1""#, r#""rhs": "x2""#)).contains("component 1 rhs"));
        assert!(bad(&IMPULSIVE.replace(r#""n_steps": 200"#, r#""n_steps": 200, "color": 1"#)).contains("color"));
        assert!(bad(&IMPULSIVE.replace("[[1, 1]]", "[[1, -1]]")).contains("derivator `g`"));
        assert!(bad(&IMPULSIVE.replace(r#""horizon": 2"#, r#""horizon": 3"#)).contains("window"));
        assert!(bad(&IMPULSIVE.replace(r#""x0": [1]"#, r#""x0": [1, 2]"#)).contains("components"));
    }

    #[test]
    fn modulus_text_forms() {
        assert_eq!(modulus_from_text("linear").unwrap().eval(2.0), 2.0);
        assert_eq!(modulus_from_text("omega_k(2)").unwrap().name(), "omega_k(2)");
        assert_eq!(modulus_from_text("power(0.5)").unwrap().eval(4.0), 2.0);
        assert_eq!(modulus_from_text("sqrt(t)").unwrap().eval(9.0), 3.0);
        assert!(modulus_from_text("omega_k(7)").is_err());
        assert!(modulus_from_text("1 + t").is_err());
    }

    #[test]
    fn file_round_trips_through_json() {
        let f = ProblemFile::from_json(IMPULSIVE).unwrap();
        let again = ProblemFile::from_json(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(f, again);
    }
}
