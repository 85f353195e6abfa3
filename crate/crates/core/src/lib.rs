//! Numerical Stieltjes calculus with nondecreasing left-continuous derivators:
//! Lebesgue–Stieltjes measures and integrals, Stieltjes derivatives, topology
//! classification, Osgood moduli and a solver for systems in which every
//! component is driven by its own derivator.

// `!(a < b)` style guards are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod derivator;
pub mod error;
pub mod expr;
pub mod measure;
pub mod moduli;
pub mod problem;
pub mod quadrature;
pub mod solver;
pub mod stieltjes;
pub mod topology;

pub use certify::{
    apriori_bound, caratheodory_bound_check, horizon_for_ball, uniqueness_certificate, AprioriBound, BoundCheck,
    CaratheodoryReport, HorizonReport, UniquenessReport, UniquenessVerdict,
};
pub use derivator::{Classification, Derivator, DerivatorRepr, Jump};
pub use error::{Error, Result};
pub use expr::{eval_expr, parse, parse_scalar, ExprTree};
pub use measure::{disjointify, integrate, measure_interval, outer_measure, Integrator, IntervalCover};
pub use moduli::{
    bihari_bound, exp_iter, log_iter, omega_k, osgood_check, BihariBound, OmegaTransform, OsgoodModulus, OsgoodReport,
    OsgoodVerdict,
};
pub use problem::{load_derivators, load_problem, modulus_from_text, LoadedProblem, ProblemFile};
pub use quadrature::QuadConfig;
pub use solver::{
    build_grid, compare_methods, residual, solve_euler, solve_picard, solve_picard_from, CompareReport, IVProblem,
    Method, ModulusSpec, Rhs, SolutionTrace, TimeFn, Weight,
};
pub use stieltjes::{
    check_ftc, indefinite_integral, stieltjes_derivative, DifferencingConfig, FtcReport, SampledFunction,
};
pub use topology::{
    check_g_continuity_sampled, check_vec_g_continuity_sampled, is_relatively_continuous, topologies_equal,
    ContinuityReport, ContinuityVerdict,
};
