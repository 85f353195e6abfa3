//! Acceptance run: one `[PASS]`/`[FAIL]` line per criterion, nonzero exit on
//! any failure.

use std::f64::consts::E;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stieltjes_core::certify::UniquenessVerdict;
use stieltjes_core::{
    apriori_bound, bihari_bound, build_grid, check_ftc, check_g_continuity_sampled, horizon_for_ball,
    is_relatively_continuous, load_problem, omega_k, osgood_check, outer_measure, solve_euler, solve_picard,
    topologies_equal, uniqueness_certificate, Classification, Derivator, IVProblem, IntervalCover, Jump, Method,
    OmegaTransform, OsgoodModulus, OsgoodVerdict, ProblemFile, Rhs, SolutionTrace,
};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("1. measure-sum identity", measure_sum_identity),
        ("2. disjointification", disjointification),
        ("3. FTC round trip", ftc_round_trip),
        ("4. classification bijection", classification_bijection),
        ("5. relative-continuity law", relative_continuity_law),
        ("6. omega_k family", omega_k_family),
        ("7. impulsive oracle", impulsive_oracle),
        ("8. classical limit", classical_limit),
        ("9. Bihari/Gronwall closed form", bihari_closed_form),
        ("10. a-priori bound on fixtures", apriori_bound_on_fixtures),
        ("11. omega_k example problem", omega_k_example),
        ("12. CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {name}: {detail} ({secs:.2} s)"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail} ({secs:.2} s)");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s(e: stieltjes_core::Error) -> String {
    e.to_string()
}

/// Random derivator on `window`: up to 6 pieces, a third of them flat, up to 5 jumps.
fn random_derivator(rng: &mut ChaCha8Rng, window: (f64, f64)) -> Derivator {
    let (lo, hi) = window;
    let grid = |k: u32| lo + (hi - lo) * k as f64 / 1024.0;
    let mut cuts: Vec<u32> = (0..rng.random_range(0..6)).map(|_| rng.random_range(1..1024)).collect();
    cuts.sort_unstable();
    cuts.dedup();
    let mut bps = vec![lo];
    bps.extend(cuts.iter().map(|&k| grid(k)));
    bps.push(hi);
    let slopes = (0..bps.len() - 1)
        .map(|_| {
            if rng.random_bool(1.0 / 3.0) {
                0.0
            } else {
                rng.random_range(0.01..3.0)
            }
        })
        .collect();
    let mut at: Vec<u32> = (0..rng.random_range(0..6)).map(|_| rng.random_range(1..1024)).collect();
    at.sort_unstable();
    at.dedup();
    let jumps = at
        .into_iter()
        .map(|k| Jump {
            at: grid(k),
            size: rng.random_range(0.01..2.0),
        })
        .collect();
    Derivator::new(window, rng.random_range(-3.0..3.0), bps, slopes, jumps).unwrap()
}

fn random_cover(rng: &mut ChaCha8Rng, window: (f64, f64)) -> IntervalCover {
    let (lo, hi) = window;
    let n = rng.random_range(1..10);
    let intervals = (0..n)
        .map(|_| {
            let a = rng.random_range(lo..hi);
            let b = (a + rng.random_range(1e-3..0.5 * (hi - lo))).min(hi);
            if b > a {
                (a, b)
            } else {
                (a - 1e-3, a)
            }
        })
        .collect();
    IntervalCover::new(intervals).unwrap()
}

fn measure_sum_identity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let window = (-2.0, 3.0);
    let mut worst: f64 = 0.0;
    let start = Instant::now();
    for _ in 0..200 {
        let gs: Vec<Derivator> = (0..3).map(|_| random_derivator(&mut rng, window)).collect();
        let hat = Derivator::sum(&gs).map_err(e2s)?;
        for _ in 0..50 {
            let c = random_cover(&mut rng, window);
            let lhs = outer_measure(&hat, &c).map_err(e2s)?;
            let rhs: f64 = gs
                .iter()
                .map(|g| outer_measure(g, &c))
                .sum::<Result<f64, _>>()
                .map_err(e2s)?;
            worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1.0));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst <= 1e-10, || format!("max relative error {worst:e}"))?;
    ensure(secs < 10.0, || format!("took {secs:.2} s"))?;
    Ok(format!("10000 covers, max relative error {worst:.2e}"))
}

fn disjointification() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let window = (0.0, 4.0);
    let mut covers = 0;
    for _ in 0..20 {
        let g = random_derivator(&mut rng, window);
        for _ in 0..25 {
            let c = random_cover(&mut rng, window);
            let d = c.disjointify();
            covers += 1;
            let mut probes: Vec<f64> = (0..10_000).map(|_| rng.random_range(window.0..window.1)).collect();
            for &(a, b) in c.intervals() {
                probes.extend([a, b, a.next_down(), b.next_down(), a.next_up()]);
            }
            if let Some(t) = probes.iter().find(|&&t| c.contains(t) != d.contains(t)) {
                return Err(format!("membership differs at {t}"));
            }
            let length = |cv: &IntervalCover| -> Result<f64, String> {
                cv.intervals()
                    .iter()
                    .map(|&(a, b)| Ok(g.eval(b).map_err(e2s)? - g.eval(a).map_err(e2s)?))
                    .sum()
            };
            let (before, after) = (length(&c)?, length(&d)?);
            ensure(after <= before + 1e-12 * before.abs().max(1.0), || {
                format!("g-length grew from {before} to {after}")
            })?;
        }
    }
    Ok(format!("{covers} covers over 20 derivators"))
}

fn ftc_round_trip() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let window = (-1.0, 2.0);
    let (mut cont, mut jump): (f64, f64) = (0.0, 0.0);
    for case in 0..50 {
        let g = random_derivator(&mut rng, window);
        let (c0, c1, w, ph, c2) = (
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(0.5..4.0),
            rng.random_range(0.0..6.0),
            rng.random_range(-1.0..1.0),
        );
        let f = move |t: f64| c0 + c1 * (w * t + ph).sin() + c2 * (0.5 * t).exp();
        let r = check_ftc(f, &g, window.0, window.1, 32).map_err(e2s)?;
        ensure(r.passed(), || format!("case {case}: failures at {:?}", r.failures))?;
        cont = cont.max(r.max_abs_error_continuity);
        jump = jump.max(r.max_rel_error_jump);
    }
    Ok(format!(
        "50 pairs, continuity error {cont:.2e} (tol 1e-5), jump relative error {jump:.2e} (tol 1e-12)"
    ))
}

/// Maximal valid classification on `window`.
fn random_classification(rng: &mut ChaCha8Rng, window: (f64, f64)) -> Classification {
    let (lo, hi) = window;
    let mut cuts: Vec<f64> = (0..rng.random_range(1..9))
        .map(|_| lo + (hi - lo) * rng.random_range(1..2000) as f64 / 2000.0)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let disc: Vec<f64> = cuts.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
    let mut edges = vec![lo];
    edges.extend(&cuts);
    edges.push(hi);
    let mut constancy: Vec<(f64, f64)> = Vec::new();
    for w in edges.windows(2) {
        if !rng.random_bool(0.5) {
            continue;
        }
        match constancy.last_mut() {
            Some(last) if last.1 == w[0] && !disc.contains(&w[0]) => last.1 = w[1],
            _ => constancy.push((w[0], w[1])),
        }
    }
    let mut order = disc;
    // Enumeration order need not be sorted.
    order.sort_by(|a, b| b.total_cmp(a));
    Classification::new(constancy, order).unwrap()
}

fn classification_bijection() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let window = (-1.0, 3.0);
    for case in 0..100 {
        let c = random_classification(&mut rng, window);
        let weights: Option<Vec<f64>> = rng.random_bool(0.5).then(|| {
            c.discontinuities()
                .iter()
                .map(|_| rng.random_range(0.01..1.0))
                .collect()
        });
        let g = Derivator::from_classification(&c, window, weights.as_deref()).map_err(e2s)?;
        ensure(g.classify() == c, || {
            format!("case {case}: {c:?} came back as {:?}", g.classify())
        })?;
        let again = Derivator::from_classification(&c, window, None).map_err(e2s)?;
        ensure(topologies_equal(&g, &again).map_err(e2s)?, || {
            format!("case {case}: copies differ")
        })?;
    }

    let n_max = 20;
    let d: Vec<f64> = (1..=n_max).map(|n| 1.0 / n as f64).collect();
    let expected = Classification::new(vec![], d.clone()).map_err(e2s)?;
    let built = Derivator::from_classification(&expected, (0.0, 2.0), None).map_err(e2s)?;
    let jumps = d.iter().rev().enumerate().map(|(i, &at)| Jump {
        at,
        size: 0.5f64.powi((n_max - i) as i32),
    });
    let explicit = Derivator::new((0.0, 2.0), 0.0, vec![0.0, 2.0], vec![1.0], jumps.collect()).map_err(e2s)?;
    ensure(explicit.classify() == expected, || {
        "explicit example misclassified".into()
    })?;
    ensure(built.classify() == expected, || {
        "example from its classification misclassified".into()
    })?;
    for t in [0.1, 0.3, 0.75, 1.5] {
        ensure(built.eval(t).map_err(e2s)? == explicit.eval(t).map_err(e2s)?, || {
            format!("example differs at {t}")
        })?;
    }
    Ok(format!(
        "100 random classifications exact; t + sum 2^-n at 1/n (n <= {n_max}) gives (empty, {{1/n}})"
    ))
}

/// A pair `(g1, g2)` on `window` where the inclusions hold by construction,
/// or are broken on purpose.
fn related_pair(rng: &mut ChaCha8Rng, window: (f64, f64), broken: bool) -> (Derivator, Derivator) {
    let c1 = random_classification(rng, window);
    let mut c2_intervals: Vec<(f64, f64)> = Vec::new();
    for &(a, b) in c1.constancy() {
        if rng.random_bool(0.6) {
            c2_intervals.push(if rng.random_bool(0.5) {
                (a, 0.5 * (a + b))
            } else {
                (a, b)
            });
        }
    }
    let mut d2: Vec<f64> = c1.discontinuities().to_vec();
    let c2_probe = Classification::new(c2_intervals.clone(), vec![]).unwrap();
    for _ in 0..rng.random_range(0..3) {
        let t = window.0 + (window.1 - window.0) * rng.random_range(1..2000) as f64 / 2000.0;
        if !c2_probe.in_constancy(t) && !d2.contains(&t) {
            d2.push(t);
        }
    }
    let mut d1: Vec<f64> = c1.discontinuities().to_vec();
    let mut c2 = c2_intervals;
    if broken {
        if rng.random_bool(0.5) {
            // A jump of g1 that g2 does not have.
            let t = (1..2000)
                .map(|k| window.0 + (window.1 - window.0) * k as f64 / 2000.0)
                .find(|t| !c1.in_constancy(*t) && !d2.contains(t) && !d1.contains(t))
                .unwrap();
            d1.push(t);
        } else {
            // A flat stretch of g2 where g1 increases.
            let free = (1..400)
                .map(|k| window.0 + (window.1 - window.0) * k as f64 / 400.0)
                .find(|&a| {
                    let b = a + (window.1 - window.0) / 400.0;
                    (0..=8).all(|j| {
                        let s = a + (b - a) * j as f64 / 8.0;
                        !c1.in_constancy(s) && !c1.constancy().iter().any(|&(l, r)| l == s || r == s)
                    }) && !d2.iter().any(|&d| d > a && d < b)
                        && !c2.iter().any(|&(l, r)| l < b && a < r)
                });
            match free {
                Some(a) => c2.push((a, a + (window.1 - window.0) / 400.0)),
                None => {
                    let t = window.0 + 0.37 * (window.1 - window.0);
                    if !c1.in_constancy(t) && !d2.contains(&t) && !d1.contains(&t) {
                        d1.push(t);
                    }
                }
            }
        }
    }
    let c1 = Classification::new(c1.constancy().to_vec(), d1).unwrap();
    let c2 = Classification::new(c2, d2).unwrap();
    (
        Derivator::from_classification(&c1, window, None).unwrap(),
        Derivator::from_classification(&c2, window, None).unwrap(),
    )
}

fn relative_continuity_law() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let window = (0.0, 4.0);
    let (mut declared, mut refuted_undeclared) = (0, 0);
    for case in 0..50 {
        let (g1, g2) = related_pair(&mut rng, window, case % 2 == 1);
        let continuous = is_relatively_continuous(&g1, &g2).map_err(e2s)?;
        let mut probes: Vec<(f64, f64)> = g1.jumps().iter().map(|j| (j.at, 0.5 * j.size)).collect();
        for &(a, b) in g2.classify().constancy() {
            probes.push((0.5 * (a + b), 1e-3));
            probes.push((a, 1e-3));
        }
        for _ in 0..8 {
            probes.push((rng.random_range(window.0..window.1), 1e-3));
        }
        let f = |t: f64| g1.eval(t).unwrap();
        let report = check_g_continuity_sampled(f, &g2, &probes).map_err(e2s)?;
        if continuous {
            declared += 1;
            ensure(!report.any_refuted(), || {
                format!("pair {case} declared continuous but refuted")
            })?;
        } else if report.any_refuted() {
            refuted_undeclared += 1;
        }
    }
    ensure(declared > 0, || "no pair was declared continuous".into())?;
    Ok(format!(
        "50 pairs, {declared} declared continuous and none refuted; {refuted_undeclared} of {} others refuted by sampling",
        50 - declared
    ))
}

fn omega_k_family() -> Check {
    let v = omega_k(1, 1.0 / E).map_err(e2s)?;
    ensure((v - 1.0 / E).abs() <= 1e-12, || format!("omega_1(1/e) = {v}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for k in 1..=3 {
        for _ in 0..100_000 {
            let x = rng.random_range(-14.0f64..1.0).exp2() * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let y = if rng.random_bool(0.5) {
                x + rng.random_range(-30.0f64..0.0).exp2()
            } else {
                rng.random_range(-14.0f64..1.0).exp2() * if rng.random_bool(0.5) { 1.0 } else { -1.0 }
            };
            let lhs = (omega_k(k, x.abs()).map_err(e2s)? - omega_k(k, y.abs()).map_err(e2s)?).abs();
            let rhs = omega_k(k, (x - y).abs()).map_err(e2s)?;
            let slack = 4.0 * f64::EPSILON * (omega_k(k, x.abs()).unwrap() + omega_k(k, y.abs()).unwrap());
            ensure(lhs <= rhs + slack, || format!("k={k}: x={x}, y={y}: {lhs} > {rhs}"))?;
        }
    }
    let mut verdicts = Vec::new();
    for k in 1..=3 {
        let r = osgood_check(&OsgoodModulus::omega_k(k).map_err(e2s)?, 0.5).map_err(e2s)?;
        ensure(r.verdict == OsgoodVerdict::Divergent, || {
            format!("omega_{k}: {}", r.verdict)
        })?;
        verdicts.push(format!("omega_{k} {}", r.verdict));
    }
    let r = osgood_check(&OsgoodModulus::power(0.5).map_err(e2s)?, 0.5).map_err(e2s)?;
    ensure(r.verdict == OsgoodVerdict::Convergent, || {
        format!("sqrt: {}", r.verdict)
    })?;
    verdicts.push(format!("sqrt {}", r.verdict));
    Ok(format!(
        "omega_1(1/e) error {:.1e}; 3e5 subadditivity pairs; {}",
        (v - 1.0 / E).abs(),
        verdicts.join(", ")
    ))
}

fn rhs(f: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static) -> Rhs {
    Arc::new(move |t, x| Ok(f(t, x)))
}

fn impulsive_oracle() -> Check {
    let start = Instant::now();
    let g = Derivator::identity(0.0, 2.0)
        .map_err(e2s)?
        .with_jump(1.0, 1.0)
        .map_err(e2s)?;
    let p = IVProblem::new(0.0, 2.0, vec![1.0], vec![g], vec![rhs(|_, x| x[0])]).map_err(e2s)?;
    let grid = build_grid(&p, 2.0, 10_000).map_err(e2s)?;
    let exact = 2.0 * E * E;
    let euler = solve_euler(&p, &grid).map_err(e2s)?;
    let picard = solve_picard(&p, &grid, 1e-10, 200).map_err(e2s)?;
    let err_e = (euler.final_value()[0] - exact).abs() / exact;
    let err_p = (picard.final_value()[0] - exact).abs() / exact;
    ensure(err_e <= 5e-3 && err_p <= 5e-3, || {
        format!("relative errors {err_e:e} / {err_p:e}")
    })?;

    // Pure jumps: x(t+) = x(t) + f(t, x(t))·Δ is the whole dynamics.
    let jumps = vec![
        Jump { at: 0.3, size: 0.5 },
        Jump { at: 0.8, size: 1.25 },
        Jump { at: 1.7, size: 0.1 },
    ];
    let g = Derivator::pure_jumps(0.0, 2.0, 0.0, jumps.clone()).map_err(e2s)?;
    let p = IVProblem::new(
        0.0,
        2.0,
        vec![0.7, -1.2],
        vec![g.clone(), g],
        vec![rhs(|t, x| x[0] * x[1].sin() + t), rhs(|_, x| x[0] - x[1] * x[1])],
    )
    .map_err(e2s)?;
    let grid = build_grid(&p, 2.0, 7).map_err(e2s)?;
    let mut x: Vec<f64> = vec![0.7, -1.2];
    for j in &jumps {
        let f0 = x[0] * x[1].sin() + j.at;
        let f1 = x[0] - x[1] * x[1];
        x = vec![x[0] + f0 * j.size, x[1] + f1 * j.size];
    }
    for (name, trace) in [
        ("euler", solve_euler(&p, &grid).map_err(e2s)?),
        ("picard", solve_picard(&p, &grid, 1e-14, 50).map_err(e2s)?),
    ] {
        let err = trace.distance_to(&x);
        ensure(err <= 4.0 * f64::EPSILON * 10.0, || {
            format!("pure jumps ({name}): error {err:e}")
        })?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 5.0, || format!("took {secs:.2} s"))?;
    Ok(format!(
        "relative error Euler {err_e:.2e}, Picard {err_p:.2e} (tol 5e-3); pure jumps exact"
    ))
}

trait FinalDistance {
    fn distance_to(&self, x: &[f64]) -> f64;
}

impl FinalDistance for SolutionTrace {
    fn distance_to(&self, x: &[f64]) -> f64 {
        self.final_value()
            .iter()
            .zip(x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn classical_limit() -> Check {
    let g = Derivator::identity(0.0, 1.0).map_err(e2s)?;
    let p = IVProblem::new(0.0, 1.0, vec![1.0], vec![g], vec![rhs(|_, x| x[0])]).map_err(e2s)?;
    let euler_steps = 20_000;
    let euler = solve_euler(&p, &build_grid(&p, 1.0, euler_steps).map_err(e2s)?).map_err(e2s)?;
    let picard = solve_picard(&p, &build_grid(&p, 1.0, 1000).map_err(e2s)?, 1e-12, 200).map_err(e2s)?;
    let err_e = (euler.final_value()[0] - E).abs();
    let err_p = (picard.final_value()[0] - E).abs();
    ensure(err_e <= 1e-4 && err_p <= 1e-4, || {
        format!("errors {err_e:e} / {err_p:e}")
    })?;
    Ok(format!(
        "|x(1) - e|: Euler ({euler_steps} steps) {err_e:.2e}, Picard (1000 steps) {err_p:.2e}"
    ))
}

fn bihari_closed_form() -> Check {
    let h = Derivator::new(
        (0.0, 3.0),
        0.0,
        vec![0.0, 1.0, 2.0, 3.0],
        vec![0.5, 0.0, 2.0],
        vec![Jump { at: 0.5, size: 0.75 }, Jump { at: 2.5, size: 1.5 }],
    )
    .map_err(e2s)?;
    let transform = OmegaTransform::new(OsgoodModulus::linear(), 1.0).map_err(e2s)?;
    let kappa = 0.7;
    let (a, b) = (0.2, 3.0);
    let bound = bihari_bound(kappa, &h, a, b, &transform).map_err(e2s)?;
    let ha = h.eval(a).map_err(e2s)?;
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let t = a + (b - a) * i as f64 / 99.0;
        let expected = kappa * (h.eval(t).map_err(e2s)? - ha).exp();
        worst = worst.max((bound.eval(t).map_err(e2s)? - expected).abs() / expected);
    }
    ensure(worst <= 1e-8, || format!("max relative error {worst:e}"))?;
    Ok(format!("100 points, max relative error {worst:.2e} (tol 1e-8)"))
}

fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn apriori_bound_on_fixtures() -> Check {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(fixtures_dir())
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    entries.sort();
    let (mut checked, mut skipped) = (Vec::new(), 0);
    for path in entries {
        let Ok(lp) = load_problem(&path) else {
            skipped += 1;
            continue;
        };
        let p = &lp.problem;
        let Ok(bound) = apriori_bound(p) else {
            skipped += 1;
            continue;
        };
        let sigma = match (p.ball_radius(), p.modulus()) {
            (Some(_), Some(_)) => horizon_for_ball(p).map_err(e2s)?.sigma,
            _ => p.horizon(),
        };
        let grid = build_grid(p, sigma, lp.solver.n_steps).map_err(e2s)?;
        let trace = match lp.solver.method {
            Method::Euler => solve_euler(p, &grid),
            Method::Picard => solve_picard(p, &grid, lp.solver.tol, lp.solver.max_iter),
        };
        let Ok(trace) = trace else {
            skipped += 1;
            continue;
        };
        let check = bound.check_trace(&trace, p.x0(), 1e-6).map_err(e2s)?;
        let name = path.file_stem().unwrap().to_string_lossy().into_owned();
        ensure(check.passed, || format!("{name}: excess {:e}", check.max_excess))?;
        checked.push(name);
    }
    ensure(!checked.is_empty(), || "no fixture admits the bound".into())?;
    Ok(format!(
        "bound holds on {} ({} fixtures not applicable)",
        checked.join(", "),
        skipped
    ))
}

fn omega_k_example() -> Check {
    let mut out = Vec::new();
    for k in 1..=3 {
        let text = format!(
            r#"{{
            "version": 1,
            "derivators": {{
                "a": {{ "window": [0, 1], "breakpoints": [0, 0.4, 1], "slopes": [1, 3], "jumps": [[0.25, 0.5], [0.5, 1]] }},
                "b": {{ "window": [0, 1], "classification": {{ "constancy": [[0.1, 0.3]], "discontinuities": [0.5, 0.75] }} }},
                "c": {{ "window": [0, 1], "breakpoints": [0, 1], "slopes": [0], "jumps": [[0.2, 1], [0.6, 2]] }}
            }},
            "problem": {{
                "t0": 0, "horizon": 1, "x0": [0, 0, 0],
                "components": [
                    {{ "derivator": "a", "rhs": "(2 + sin(40*t) + heaviside(t - 0.5)) * omega_k({k}, norm_inf(x))" }},
                    {{ "derivator": "b", "rhs": "(2 + sin(40*t) + heaviside(t - 0.5)) * omega_k({k}, norm_inf(x))" }},
                    {{ "derivator": "c", "rhs": "(2 + sin(40*t) + heaviside(t - 0.5)) * omega_k({k}, norm_inf(x))" }}
                ],
                "modulus": {{ "builtin": "omega_k", "k": {k} }},
                "phi": "2 + sin(40*t) + heaviside(t - 0.5)",
                "u0": 0.5
            }},
            "solver": {{ "method": "picard", "n_steps": 500, "tol": 1e-12, "max_iter": 50 }}
        }}"#
        );
        let lp = ProblemFile::from_json(&text).and_then(|f| f.build()).map_err(e2s)?;
        let p = &lp.problem;
        let grid = build_grid(p, 1.0, lp.solver.n_steps).map_err(e2s)?;
        let trace = solve_picard(p, &grid, lp.solver.tol, lp.solver.max_iter).map_err(e2s)?;
        let all_zero = trace
            .values
            .iter()
            .chain(trace.post_jump.iter().flatten())
            .all(|v| v.iter().all(|&x| x == 0.0));
        ensure(all_zero, || format!("k={k}: Picard left zero"))?;
        let cert = uniqueness_certificate(p, 10_000, k as u64).map_err(e2s)?;
        ensure(cert.verdict == UniquenessVerdict::MontelTonelliUnique, || {
            format!("k={k}: verdict {} ({:?})", cert.verdict, cert.notes)
        })?;
        out.push(format!("k={k} x = 0 exactly, {}", cert.verdict));
    }
    Ok(out.join("; "))
}

fn cli_determinism() -> Check {
    let bin = env!("CARGO_BIN_EXE_stieltjes");
    let files = [
        "impulsive.json",
        "zero_rhs.json",
        "smooth.json",
        "omega_k_example.json",
        "riccati_ball.json",
    ];
    let dirs: Vec<tempfile::TempDir> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    for (i, dir) in dirs.iter().enumerate() {
        let mut cmd = Command::new(bin);
        cmd.args([
            "solve",
            "--certify",
            "--bound",
            "--jobs",
            &(1 + 2 * i).to_string(),
            "--out",
        ])
        .arg(dir.path());
        for f in files {
            cmd.arg(fixtures_dir().join(f));
        }
        let out = cmd.output().map_err(|e| e.to_string())?;
        ensure(out.status.success(), || {
            String::from_utf8_lossy(&out.stderr).into_owned()
        })?;
    }
    let osgood = |k: u32| {
        Command::new(bin)
            .args(["check-osgood", &format!("omega_k({k})")])
            .output()
            .map(|o| o.stdout)
    };
    let mut compared = 0;
    for f in files {
        let stem = f.trim_end_matches(".json");
        for ext in ["csv", "json"] {
            let name = format!("{stem}.{ext}");
            let first = std::fs::read(dirs[0].path().join(&name)).map_err(|e| e.to_string())?;
            for d in &dirs[1..] {
                let other = std::fs::read(d.path().join(&name)).map_err(|e| e.to_string())?;
                ensure(first == other, || format!("{name} differs between runs"))?;
                compared += 1;
            }
        }
    }
    ensure(
        osgood(2).map_err(|e| e.to_string())? == osgood(2).map_err(|e| e.to_string())?,
        || "check-osgood output differs".into(),
    )?;
    Ok(format!(
        "{compared} output pairs byte-identical across 3 runs (jobs 1, 3, 5)"
    ))
}
