//! Monotone finite-difference solver and certificate toolkit for Dirichlet
//! problems of the form
//!
//! ```text
//!     -F(Du, D^2 u) + b(x) |Du|^beta + lambda |u|^alpha u = f(x)   in  Omega,
//!      u = phi                                                     on  dOmega,
//! ```
//!
//! where `F` is positively homogeneous in the gradient with exponent
//! `alpha > -1` and uniformly elliptic in the Hessian slot. The singular
//! (`alpha < 0`) and degenerate (`alpha > 0`) regimes are both supported,
//! with `beta` anywhere in `(0, alpha + 2]` including the critical endpoint.
//!
//! The crate does three jobs:
//!
//! * **solve**: a monotone upwind scheme with explicit pseudo-time marching,
//!   gradient regularisation driven to zero by continuation, and sub/super
//!   solution brackets maintained at every iterate ([`scheme`]).
//! * **certify**: numerical certificates for the structural facts the scheme
//!   relies on, such as barrier residual signs on dense samples, comparison
//!   of ordered iterates, boundary modulus fits, and Hopf quotients
//!   ([`barrier`], [`certify`]).
//! * **manufacture**: exact right-hand sides for chosen solutions through a
//!   small symbolic expression language with one-sided derivative handling
//!   at kinks ([`expr`]).
//!
//! # Examples
//!
//! Each major capability has a runnable example:
//!
//! | example | shows |
//! |---------|-------|
//! | `operator_basics` | extremal operators, gradient weights, branch selection |
//! | `expressions` | parsing, evaluation, symbolic differentiation, kink warnings |
//! | `manufacture_rhs` | building an exact right-hand side for a chosen solution |
//! | `global_barrier` | logarithmic barrier construction and residual certification |
//! | `solve_1d` | solving a two-point problem and checking convergence under refinement |
//! | `comparison_and_uniqueness` | ordered data produce ordered solutions, fixed-point uniqueness |
//! | `sandwich_hopf` | boundary sandwich via barriers and a Hopf lower bound at the wall |
//! | `radial_ball` | radially symmetric solves on balls through the 1d reduction |
//!
//! Run one with `cargo run --release --example solve_1d`.
//!
//! The `viscofd` binary wraps the same machinery behind `solve`, `verify`,
//! `sweep`, and `manufacture` subcommands driven by TOML configs; see the
//! crate README for the schema.

pub mod barrier;
pub mod certify;
pub mod cli;
pub mod config;
pub mod domain;
pub mod expr;
pub mod operator;
pub mod problem;
pub mod report;
pub mod scheme;
pub mod suite;

pub use barrier::{
    barrier_constants, boundary_barrier, critical_beta_rescale, global_barrier,
    hopf_c_from_invariants, minimal_kappa, BarrierBranch, BarrierConstants, BarrierError,
    BarrierSide, BoundaryBarrier, GlobalBarrier, HopfBarrier,
};
pub use certify::{
    classical_check, comparison_probe, modulus_fit, sandwich_check, strong_max_probe,
    zero_gradient_check, CertifyError, Classification, ComparisonReport, HopfQuotient, ModulusFit,
    ModulusKind, SampleRecord, SandwichFit, StrongMaxReport, ViscosityReport, ZeroGradientOutcome,
};
pub use domain::{DistanceProfile, Domain, DomainError, DomainKind, Grid, GridFunction};
pub use scheme::{
    assemble_residual, bracket_from_barriers, eps_stages, solve, solve_from, zeta_solve, Bracket,
    EpsRule, SchemeError, SolveParams, SolveReport, StageReport,
};
pub use config::{ConfigError, RunConfig};
pub use report::{fingerprint, fmt_f64, write_csv, Report};
pub use problem::{Coefficient, ProblemError, ProblemSpec};
pub use suite::{
    comparison_suite, manufacture_rhs, manufactured_problem, manufactured_sweep, solve_ladder,
    CaseOutcome, CaseReport, ManufacturedRhs, SuiteReport, SweepRow,
};
pub use expr::{differentiate, Axis, Derivative, Expr, ExprError};
pub use operator::{
    gradient_weight, operator_value, pucci_minus, pucci_plus, radial_operator_value,
    EllipticityPair, ExponentProfile, GradientVector, OperatorError, OperatorVariant, SymMatrix,
    ZeroOrderTerm,
};
