//! Python bindings for `stieltjes-core`.

use std::cell::RefCell;
use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;
use stieltjes_core as core;
use stieltjes_core::{Classification, Error, Jump, Method};

fn to_py_err(e: Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

/// Reports cross the boundary as plain dicts.
fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Calls a Python `f(t) -> float`, remembering the first exception so it can
/// be re-raised once the core routine returns.
struct Callback<'a, 'py> {
    f: &'a Bound<'py, PyAny>,
    err: RefCell<Option<PyErr>>,
}

impl<'a, 'py> Callback<'a, 'py> {
    fn new(f: &'a Bound<'py, PyAny>) -> Self {
        Callback {
            f,
            err: RefCell::new(None),
        }
    }

    fn call(&self, t: f64) -> f64 {
        match self.f.call1((t,)).and_then(|v| v.extract::<f64>()) {
            Ok(v) => v,
            Err(e) => {
                self.err.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    }

    fn finish<T>(self, r: core::Result<T>) -> PyResult<T> {
        match self.err.into_inner() {
            Some(e) => Err(e),
            None => r.map_err(to_py_err),
        }
    }
}

/// Nondecreasing left-continuous piecewise-linear function with jumps.
#[pyclass(frozen, from_py_object, module = "stieltjes")]
#[derive(Clone)]
struct Derivator {
    inner: core::Derivator,
}

#[pymethods]
impl Derivator {
    #[new]
    #[pyo3(signature = (window, breakpoints, slopes, jumps = Vec::new(), anchor = 0.0))]
    fn new(
        window: (f64, f64),
        breakpoints: Vec<f64>,
        slopes: Vec<f64>,
        jumps: Vec<(f64, f64)>,
        anchor: f64,
    ) -> PyResult<Self> {
        let jumps = jumps.into_iter().map(|(at, size)| Jump { at, size }).collect();
        core::Derivator::new(window, anchor, breakpoints, slopes, jumps)
            .map(|inner| Derivator { inner })
            .map_err(to_py_err)
    }

    #[staticmethod]
    fn identity(lower: f64, upper: f64) -> PyResult<Self> {
        core::Derivator::identity(lower, upper)
            .map(|inner| Derivator { inner })
            .map_err(to_py_err)
    }

    /// Canonical derivator with the given constancy intervals and discontinuities.
    #[staticmethod]
    #[pyo3(signature = (constancy, discontinuities, window, weights = None))]
    fn from_classification(
        constancy: Vec<(f64, f64)>,
        discontinuities: Vec<f64>,
        window: (f64, f64),
        weights: Option<Vec<f64>>,
    ) -> PyResult<Self> {
        let c = Classification::new(constancy, discontinuities).map_err(to_py_err)?;
        core::Derivator::from_classification(&c, window, weights.as_deref())
            .map(|inner| Derivator { inner })
            .map_err(to_py_err)
    }

    /// Pointwise sum of derivators on a common window.
    #[staticmethod]
    fn sum(parts: Vec<Derivator>) -> PyResult<Self> {
        let gs: Vec<core::Derivator> = parts.into_iter().map(|d| d.inner).collect();
        core::Derivator::sum(&gs)
            .map(|inner| Derivator { inner })
            .map_err(to_py_err)
    }

    #[getter]
    fn window(&self) -> (f64, f64) {
        self.inner.window()
    }

    #[getter]
    fn jumps(&self) -> Vec<(f64, f64)> {
        self.inner.jumps().iter().map(|j| (j.at, j.size)).collect()
    }

    fn __call__(&self, t: f64) -> PyResult<f64> {
        self.eval(t)
    }

    fn eval(&self, t: f64) -> PyResult<f64> {
        self.inner.eval(t).map_err(to_py_err)
    }

    fn eval_right(&self, t: f64) -> PyResult<f64> {
        self.inner.eval_right(t).map_err(to_py_err)
    }

    fn jump(&self, t: f64) -> PyResult<f64> {
        self.inner.jump(t).map_err(to_py_err)
    }

    /// `(constancy_intervals, discontinuities)`.
    fn classify(&self) -> (Vec<(f64, f64)>, Vec<f64>) {
        let c = self.inner.classify();
        (c.constancy().to_vec(), c.discontinuities().to_vec())
    }

    /// Outer measure of a union of half-open intervals `[a, b)`.
    fn measure(&self, cover: Vec<(f64, f64)>) -> PyResult<f64> {
        let cover = core::IntervalCover::new(cover).map_err(to_py_err)?;
        core::outer_measure(&self.inner, &cover).map_err(to_py_err)
    }

    /// `∫_{[a,b)} f dg`.
    fn integrate(&self, f: &Bound<'_, PyAny>, a: f64, b: f64) -> PyResult<f64> {
        let cb = Callback::new(f);
        let r = core::Integrator::default().integrate(&self.inner, |t| Ok(cb.call(t)), a, b);
        cb.finish(r)
    }

    /// Stieltjes derivative of `f` at `t`.
    fn derivative(&self, f: &Bound<'_, PyAny>, t: f64) -> PyResult<f64> {
        let cb = Callback::new(f);
        let fun = |s: f64| cb.call(s);
        let r = core::stieltjes_derivative(&fun, &self.inner, t, &core::DifferencingConfig::default());
        cb.finish(r)
    }

    /// Fundamental-theorem check of `f` against this derivator on `[a, b)`.
    #[pyo3(signature = (f, a = None, b = None, samples = 64))]
    fn check_ftc(
        &self,
        py: Python<'_>,
        f: &Bound<'_, PyAny>,
        a: Option<f64>,
        b: Option<f64>,
        samples: usize,
    ) -> PyResult<Py<PyAny>> {
        let (lower, upper) = self.inner.window();
        let cb = Callback::new(f);
        let r = core::check_ftc(
            |s| cb.call(s),
            &self.inner,
            a.unwrap_or(lower),
            b.unwrap_or(upper),
            samples,
        );
        to_py(py, &cb.finish(r)?)
    }

    fn __repr__(&self) -> String {
        let (a, b) = self.inner.window();
        format!("Derivator(window=({a}, {b}), jumps={})", self.inner.jumps().len())
    }
}

/// Solution of an initial value problem on a grid.
#[pyclass(frozen, module = "stieltjes")]
struct Trace {
    inner: core::SolutionTrace,
}

#[pymethods]
impl Trace {
    #[getter]
    fn grid(&self) -> Vec<f64> {
        self.inner.grid.clone()
    }

    #[getter]
    fn values(&self) -> Vec<Vec<f64>> {
        self.inner.values.clone()
    }

    /// `x(t+)` at grid points where some derivator jumps, else `None`.
    #[getter]
    fn post_jump(&self) -> Vec<Option<Vec<f64>>> {
        self.inner.post_jump.clone()
    }

    #[getter]
    fn final_value(&self) -> Vec<f64> {
        self.inner.final_value().to_vec()
    }

    #[getter]
    fn residual(&self) -> Vec<f64> {
        self.inner.residual.clone()
    }

    #[getter]
    fn iterations(&self) -> Option<usize> {
        self.inner.iterations
    }

    #[getter]
    fn method(&self) -> String {
        self.inner.method.to_string()
    }

    fn __len__(&self) -> usize {
        self.inner.grid.len()
    }
}

/// A system `x_i' = f_i(t, x)` where component `i` is differentiated against its own derivator.
#[pyclass(frozen, module = "stieltjes")]
struct Problem {
    inner: core::IVProblem,
    solver: core::problem::SolverDef,
}

#[pymethods]
impl Problem {
    /// `rhs[i]` is a Python callable `f(t, x) -> float`.
    #[new]
    fn new(t0: f64, horizon: f64, x0: Vec<f64>, derivators: Vec<Derivator>, rhs: Vec<Py<PyAny>>) -> PyResult<Self> {
        let rhs = rhs
            .into_iter()
            .enumerate()
            .map(|(i, f)| -> core::Rhs {
                Arc::new(move |t, x| {
                    Python::attach(|py| f.call1(py, (t, x.to_vec())).and_then(|v| v.extract::<f64>(py)))
                        .map_err(|e| Error::Numeric(format!("rhs {}: {e}", i + 1)))
                })
            })
            .collect();
        let gs = derivators.into_iter().map(|d| d.inner).collect();
        core::IVProblem::new(t0, horizon, x0, gs, rhs)
            .map(|inner| Problem {
                inner,
                solver: Default::default(),
            })
            .map_err(to_py_err)
    }

    /// Loads a JSON problem file.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        core::load_problem(&path).map(Problem::from_loaded).map_err(to_py_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        core::ProblemFile::from_json(text)
            .and_then(|f| f.build())
            .map(Problem::from_loaded)
            .map_err(to_py_err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn t0(&self) -> f64 {
        self.inner.t0()
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.inner.horizon()
    }

    /// Solves on `[t0, t0 + sigma]`; unset arguments fall back to the problem
    /// file's solver block.
    #[pyo3(signature = (method = None, n_steps = None, tol = None, max_iter = None, sigma = None))]
    fn solve(
        &self,
        py: Python<'_>,
        method: Option<&str>,
        n_steps: Option<usize>,
        tol: Option<f64>,
        max_iter: Option<usize>,
        sigma: Option<f64>,
    ) -> PyResult<Trace> {
        let method = match method {
            None => self.solver.method,
            Some("euler") => Method::Euler,
            Some("picard") => Method::Picard,
            Some(other) => return Err(PyValueError::new_err(format!("unknown method `{other}`"))),
        };
        let n = n_steps.unwrap_or(self.solver.n_steps);
        let tol = tol.unwrap_or(self.solver.tol);
        let max_iter = max_iter.unwrap_or(self.solver.max_iter);
        let p = &self.inner;
        let trace = py.detach(|| -> core::Result<_> {
            let grid = core::build_grid(p, sigma.unwrap_or(p.horizon()), n)?;
            match method {
                Method::Euler => core::solve_euler(p, &grid),
                Method::Picard => core::solve_picard(p, &grid, tol, max_iter),
            }
        });
        trace.map(|inner| Trace { inner }).map_err(to_py_err)
    }

    /// Sampled uniqueness certificate as a dict.
    #[pyo3(signature = (samples = 10_000, seed = 0))]
    fn uniqueness_certificate(&self, py: Python<'_>, samples: usize, seed: u64) -> PyResult<Py<PyAny>> {
        let r = py.detach(|| core::uniqueness_certificate(&self.inner, samples, seed));
        to_py(py, &r.map_err(to_py_err)?)
    }

    /// Largest certified horizon for the declared ball.
    fn horizon_for_ball(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let r = py.detach(|| core::horizon_for_ball(&self.inner));
        to_py(py, &r.map_err(to_py_err)?)
    }

    /// Checks `trace` against the a-priori bound.
    #[pyo3(signature = (trace, tol = 1e-6))]
    fn check_bound(&self, py: Python<'_>, trace: &Trace, tol: f64) -> PyResult<Py<PyAny>> {
        let r = core::apriori_bound(&self.inner).and_then(|b| b.check_trace(&trace.inner, self.inner.x0(), tol));
        to_py(py, &r.map_err(to_py_err)?)
    }
}

impl Problem {
    fn from_loaded(lp: core::LoadedProblem) -> Self {
        Problem {
            inner: lp.problem,
            solver: lp.solver,
        }
    }
}

#[pyfunction]
fn omega_k(k: u32, t: f64) -> PyResult<f64> {
    core::omega_k(k, t).map_err(to_py_err)
}

/// Osgood check for `linear`, `omega_k(k)`, `power(p)` or an expression in `t`.
#[pyfunction]
#[pyo3(signature = (modulus, u0 = 0.5))]
fn osgood_check(py: Python<'_>, modulus: &str, u0: f64) -> PyResult<Py<PyAny>> {
    let omega = core::modulus_from_text(modulus).map_err(to_py_err)?;
    to_py(py, &core::osgood_check(&omega, u0).map_err(to_py_err)?)
}

/// Every `first`-continuous function is `second`-continuous.
#[pyfunction]
fn is_relatively_continuous(first: &Derivator, second: &Derivator) -> PyResult<bool> {
    core::is_relatively_continuous(&first.inner, &second.inner).map_err(to_py_err)
}

#[pyfunction]
fn topologies_equal(first: &Derivator, second: &Derivator) -> PyResult<bool> {
    core::topologies_equal(&first.inner, &second.inner).map_err(to_py_err)
}

/// Disjoint union of half-open intervals with the same points.
#[pyfunction]
fn disjointify(cover: Vec<(f64, f64)>) -> PyResult<Vec<(f64, f64)>> {
    let cover = core::IntervalCover::new(cover).map_err(to_py_err)?;
    Ok(cover.disjointify().intervals().to_vec())
}

/// Evaluates an expression in `t` and `x1..xn`.
#[pyfunction]
#[pyo3(signature = (source, t, x = Vec::new()))]
fn eval_expr(source: &str, t: f64, x: Vec<f64>) -> PyResult<f64> {
    let tree = if x.is_empty() {
        core::parse_scalar(source)
    } else {
        core::parse(source, x.len())
    }
    .map_err(to_py_err)?;
    tree.eval(t, &x).map_err(to_py_err)
}

#[pymodule]
fn stieltjes(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Derivator>()?;
    m.add_class::<Trace>()?;
    m.add_class::<Problem>()?;
    m.add_function(wrap_pyfunction!(omega_k, m)?)?;
    m.add_function(wrap_pyfunction!(osgood_check, m)?)?;
    m.add_function(wrap_pyfunction!(is_relatively_continuous, m)?)?;
    m.add_function(wrap_pyfunction!(topologies_equal, m)?)?;
    m.add_function(wrap_pyfunction!(disjointify, m)?)?;
    m.add_function(wrap_pyfunction!(eval_expr, m)?)?;
    Ok(())
}
