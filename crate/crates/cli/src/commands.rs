use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use stieltjes_core::certify::DEFAULT_CERTIFICATE_SAMPLES;
use stieltjes_core::measure::IntervalCover;
use stieltjes_core::{
    apriori_bound, build_grid, check_ftc, compare_methods, horizon_for_ball, is_relatively_continuous, load_derivators,
    load_problem, modulus_from_text, osgood_check, outer_measure, parse_scalar, solve_euler, solve_picard,
    topologies_equal, uniqueness_certificate, BoundCheck, Classification, CompareReport, Derivator, Error, FtcReport,
    HorizonReport, Integrator, LoadedProblem, Method, OsgoodReport, UniquenessReport,
};

use crate::output::{emit, to_json, trace_csv, write_file, CliError, CliResult};
use crate::{ClassifyArgs, CompareArgs, FtcArgs, MeasureArgs, OsgoodArgs, SolveArgs, SolverFlags};

/// A certificate that could not be produced is reported, not fatal.
#[derive(Serialize)]
#[serde(untagged)]
enum Outcome<T> {
    Ok(T),
    Failed { error: String },
}

impl<T> From<Result<T, Error>> for Outcome<T> {
    fn from(r: Result<T, Error>) -> Self {
        match r {
            Ok(v) => Outcome::Ok(v),
            Err(e) => Outcome::Failed { error: e.to_string() },
        }
    }
}

#[derive(Serialize)]
struct Certificates {
    horizon: Option<Outcome<HorizonReport>>,
    uniqueness: Outcome<UniquenessReport>,
}

#[derive(Serialize)]
struct SolveSummary {
    problem: String,
    method: Method,
    n_steps: usize,
    t0: f64,
    /// Length of the solution interval actually used.
    sigma: f64,
    grid_points: usize,
    iterations: Option<usize>,
    residual: Vec<f64>,
    /// `x((t0 + sigma)-)`.
    final_value: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificates: Option<Certificates>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bound: Option<Outcome<BoundCheck>>,
}

fn load(path: &Path, flags: &SolverFlags) -> CliResult<LoadedProblem> {
    let mut lp = load_problem(path)?;
    if let Some(n) = flags.grid {
        lp.solver.n_steps = n;
    }
    if let Some(tol) = flags.tol {
        lp.solver.tol = tol;
    }
    if let Some(m) = flags.max_iter {
        lp.solver.max_iter = m;
    }
    if lp.solver.n_steps == 0 || lp.solver.tol.is_nan() || lp.solver.tol <= 0.0 || lp.solver.max_iter == 0 {
        return Err(CliError::validation(
            "--grid and --max-iter must be positive, --tol > 0",
        ));
    }
    Ok(lp)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "problem".into())
}

pub fn solve(args: SolveArgs) -> CliResult<()> {
    if args.jobs == 0 {
        return Err(CliError::validation("--jobs must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| CliError::validation(format!("cannot start {} jobs: {e}", args.jobs)))?;
    let results: Vec<CliResult<()>> = pool.install(|| args.files.par_iter().map(|f| solve_one(f, &args)).collect());
    let mut worst: Option<CliError> = None;
    for (file, r) in args.files.iter().zip(results) {
        if let Err(e) = r {
            let e = e.context(&file.display().to_string());
            if args.files.len() > 1 {
                eprintln!("error: {}", e.message);
            }
            if worst.as_ref().is_none_or(|w| e.code > w.code) {
                worst = Some(e);
            }
        }
    }
    match worst {
        Some(e) if args.files.len() > 1 => Err(CliError {
            code: e.code,
            message: "some problems failed".into(),
        }),
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn solve_one(path: &Path, args: &SolveArgs) -> CliResult<()> {
    let mut lp = load(path, &args.solver)?;
    if let Some(m) = args.method {
        lp.solver.method = m;
    }
    let p = &lp.problem;
    let horizon = match (p.ball_radius(), p.modulus()) {
        (Some(_), Some(_)) => Some(horizon_for_ball(p)?),
        _ => None,
    };
    let sigma = horizon.as_ref().map_or(p.horizon(), |h| h.sigma);
    let grid = build_grid(p, sigma, lp.solver.n_steps)?;
    let trace = match lp.solver.method {
        Method::Euler => solve_euler(p, &grid)?,
        Method::Picard => solve_picard(p, &grid, lp.solver.tol, lp.solver.max_iter)?,
    };

    let certificates = args.certify.then(|| Certificates {
        horizon: p.ball_radius().map(|_| match &horizon {
            Some(h) => Outcome::Ok(h.clone()),
            None => horizon_for_ball(p).into(),
        }),
        uniqueness: uniqueness_certificate(p, DEFAULT_CERTIFICATE_SAMPLES, args.seed).into(),
    });
    let bound = args.bound.then(|| {
        apriori_bound(p)
            .and_then(|b| b.check_trace(&trace, p.x0(), 1e-6))
            .into()
    });

    let summary = SolveSummary {
        problem: stem(path),
        method: lp.solver.method,
        n_steps: lp.solver.n_steps,
        t0: p.t0(),
        sigma,
        grid_points: trace.grid.len(),
        iterations: trace.iterations,
        residual: trace.residual.clone(),
        final_value: trace.final_value().to_vec(),
        certificates,
        bound,
    };

    let (csv_path, json_path) = output_paths(path, &lp, args.out.as_deref());
    if let Some(csv_path) = csv_path {
        write_file(&csv_path, &trace_csv(&trace)?)?;
    }
    emit(&to_json(&summary), json_path.as_deref())
}

/// With `--out DIR`: `DIR/<stem>.csv` and `DIR/<stem>.json`. Otherwise the
/// file's `output` block, relative to the problem file; no summary path means
/// stdout.
fn output_paths(path: &Path, lp: &LoadedProblem, out: Option<&Path>) -> (Option<PathBuf>, Option<PathBuf>) {
    if let Some(dir) = out {
        let s = stem(path);
        return (Some(dir.join(format!("{s}.csv"))), Some(dir.join(format!("{s}.json"))));
    }
    let base = path.parent().unwrap_or(Path::new(""));
    (
        lp.output.trace.as_ref().map(|p| base.join(p)),
        lp.output.summary.as_ref().map(|p| base.join(p)),
    )
}

#[derive(Serialize)]
struct CompareSummary {
    problem: String,
    #[serde(flatten)]
    report: CompareReport,
}

pub fn compare(args: CompareArgs) -> CliResult<()> {
    let lp = load(&args.file, &args.solver).map_err(|e| e.context(&args.file.display().to_string()))?;
    let report = compare_methods(&lp.problem, lp.solver.n_steps, lp.solver.tol, lp.solver.max_iter)?;
    let summary = CompareSummary {
        problem: stem(&args.file),
        report,
    };
    emit(&to_json(&summary), args.out.as_deref())
}

fn derivator<'a>(all: &'a BTreeMap<String, Derivator>, name: &str) -> CliResult<&'a Derivator> {
    all.get(name)
        .ok_or_else(|| CliError::validation(format!("no derivator named `{name}`")))
}

#[derive(Serialize)]
struct MeasureReport {
    derivator: String,
    cover: IntervalCover,
    disjoint: IntervalCover,
    measure: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    integrand: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    integral: Option<f64>,
}

pub fn measure(args: MeasureArgs) -> CliResult<()> {
    let all = load_derivators(&args.file)?;
    let g = derivator(&all, &args.derivator)?;
    let cover: IntervalCover =
        serde_json::from_str(&args.cover).map_err(|e| CliError::validation(format!("--cover: {e}")))?;
    let measure = outer_measure(g, &cover)?;
    let disjoint = cover.disjointify();
    let integral = match &args.integrand {
        None => None,
        Some(src) => {
            let f = parse_scalar(src).map_err(|e| CliError::from(e).context("--integrand"))?;
            let mut total = 0.0;
            for &(a, b) in disjoint.intervals() {
                total += Integrator::default().integrate(g, |t| f.eval_scalar(t), a, b)?;
            }
            Some(total)
        }
    };
    let report = MeasureReport {
        derivator: args.derivator,
        cover,
        disjoint,
        measure,
        integrand: args.integrand,
        integral,
    };
    emit(&to_json(&report), args.out.as_deref())
}

#[derive(Serialize)]
struct Relation {
    first: String,
    second: String,
    /// Every `first`-continuous function is `second`-continuous.
    relatively_continuous: Option<bool>,
    equal_topologies: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

#[derive(Serialize)]
struct ClassifyReport {
    classifications: BTreeMap<String, Classification>,
    relations: Vec<Relation>,
}

pub fn classify(args: ClassifyArgs) -> CliResult<()> {
    let all = load_derivators(&args.file)?;
    let classifications = all.iter().map(|(k, g)| (k.clone(), g.classify())).collect();
    let mut relations = Vec::new();
    for (a, ga) in &all {
        for (b, gb) in &all {
            if a == b {
                continue;
            }
            let rel = match (is_relatively_continuous(ga, gb), topologies_equal(ga, gb)) {
                (Ok(r), Ok(e)) => Relation {
                    first: a.clone(),
                    second: b.clone(),
                    relatively_continuous: Some(r),
                    equal_topologies: Some(e),
                    note: None,
                },
                (Err(e), _) | (_, Err(e)) => Relation {
                    first: a.clone(),
                    second: b.clone(),
                    relatively_continuous: None,
                    equal_topologies: None,
                    note: Some(e.to_string()),
                },
            };
            relations.push(rel);
        }
    }
    emit(
        &to_json(&ClassifyReport {
            classifications,
            relations,
        }),
        args.out.as_deref(),
    )
}

pub fn check_osgood(args: OsgoodArgs) -> CliResult<()> {
    let omega = modulus_from_text(&args.modulus).map_err(|e| CliError::from(e).context("modulus"))?;
    let report = osgood_check(&omega, args.u0)?;
    print!("{}", osgood_table(&report));
    if let Some(path) = &args.out {
        write_file(path, to_json(&report).as_bytes())?;
    }
    Ok(())
}

fn osgood_table(r: &OsgoodReport) -> String {
    let mut s = format!("modulus {}  u0 = {}\n", r.modulus, r.u0);
    s.push_str(&format!(
        "{:>12}  {:>24}  {:>24}\n",
        "epsilon", "integral(eps..u0)", "increment"
    ));
    for (i, (eps, val)) in r.epsilons.iter().zip(&r.partial_integrals).enumerate() {
        let inc = if i == 0 {
            String::new()
        } else {
            format!("{:.16e}", r.increments[i - 1])
        };
        s.push_str(&format!("{eps:>12.0e}  {val:>24.16e}  {inc:>24}\n"));
    }
    let ratios: Vec<String> = r.tail_ratios.iter().map(|q| format!("{q:.4}")).collect();
    s.push_str(&format!("tail ratios: {}\n", ratios.join(" ")));
    s.push_str(&format!("verdict: {}\n", r.verdict));
    s
}

pub fn ftc_check(args: FtcArgs) -> CliResult<()> {
    let all = load_derivators(&args.file)?;
    let g = derivator(&all, &args.derivator)?;
    let f = parse_scalar(&args.f).map_err(|e| CliError::from(e).context("--f"))?;
    let (lower, upper) = g.window();
    let a = args.from.unwrap_or(lower);
    let b = args.to.unwrap_or(upper);
    let fun = |t: f64| f.eval_scalar(t).unwrap_or(f64::NAN);
    let report: FtcReport = check_ftc(fun, g, a, b, args.samples)?;
    emit(&to_json(&report), args.out.as_deref())
}
