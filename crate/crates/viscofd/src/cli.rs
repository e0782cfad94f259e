//! Command line front end: solve, verify, sweep and manufacture
//! subcommands over one TOML config.
//!
//! Exit codes: 0 success; 2 config or usage error (the message names the
//! offending key); 3 solver non-convergence; 4 at least one certificate
//! check failed.
//!
//! Artifacts land in the directory resolved from `--out`, then the config's
//! `output.directory`, then `VISCOFD_OUT`, then the current directory. The
//! `--format` flag restricts artifacts to one class. Reports are
//! deterministic: same config and seed, byte-identical body.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use crate::barrier::HopfBarrier;
use crate::certify::{
    classical_check, modulus_fit, sandwich_check, strong_max_probe, zero_gradient_check,
    CertifyError, ModulusKind,
};
use crate::config::{
    CandidateSide, CheckKind, FormatKind, ModulusConfig, RunConfig,
};
use crate::domain::{Grid, GridFunction};
use crate::expr::Expr;
use crate::problem::ProblemSpec;
use crate::report::{fmt_f64, write_csv, Report};
use crate::scheme::{assemble_residual, bracket_from_barriers, eps_stages, solve, solve_from};
use crate::suite::{comparison_suite, manufacture_rhs, manufactured_sweep};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVE: i32 = 3;
pub const EXIT_CERTIFICATE: i32 = 4;

#[derive(Parser)]
#[command(
    name = "viscofd",
    version,
    about = "Monotone solver and certificate checks for singular and degenerate elliptic Dirichlet problems"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Output directory for artifacts
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for randomized suites, overriding the config
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Write only this artifact class
    #[arg(long, global = true, value_enum, value_name = "csv|report")]
    format: Option<FormatArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Report,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the configured problem and write the solution artifacts
    Solve { config: PathBuf },
    /// Run the configured certificate checks
    Verify { config: PathBuf },
    /// Solve across grid.hs and report observed convergence rates
    Sweep { config: PathBuf },
    /// Build the exact right hand side for a candidate field
    Manufacture { expr: String, config: PathBuf },
}

/// Entry point for the binary; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    let ctx = Ctx {
        out: cli.out.clone(),
        seed: cli.seed,
        format: cli.format.map(|f| match f {
            FormatArg::Csv => FormatKind::Csv,
            FormatArg::Report => FormatKind::Report,
        }),
    };
    match &cli.cmd {
        Cmd::Solve { config } => cmd_solve(config, &ctx),
        Cmd::Verify { config } => cmd_verify(config, &ctx),
        Cmd::Sweep { config } => cmd_sweep(config, &ctx),
        Cmd::Manufacture { expr, config } => cmd_manufacture(expr, config, &ctx),
    }
}

struct Ctx {
    out: Option<PathBuf>,
    seed: Option<u64>,
    format: Option<FormatKind>,
}

impl Ctx {
    fn out_dir(&self, cfg: &RunConfig) -> PathBuf {
        resolve_out(self.out.as_deref(), cfg.output.directory.as_deref(), std::env::var_os("VISCOFD_OUT"))
    }

    fn wants(&self, cfg: &RunConfig, kind: FormatKind) -> bool {
        match self.format {
            Some(f) => f == kind,
            None => cfg.output.formats.is_empty() || cfg.output.formats.contains(&kind),
        }
    }
}

fn resolve_out(flag: Option<&Path>, cfg_dir: Option<&Path>, env: Option<OsString>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = cfg_dir {
        return p.to_path_buf();
    }
    if let Some(v) = env {
        if !v.is_empty() {
            return PathBuf::from(v);
        }
    }
    PathBuf::from(".")
}

fn fail_config(msg: impl std::fmt::Display) -> i32 {
    eprintln!("config error: {msg}");
    EXIT_CONFIG
}

fn load_problem(path: &Path) -> Result<(RunConfig, ProblemSpec), i32> {
    let cfg = RunConfig::load(path).map_err(fail_config)?;
    let prob = cfg.to_problem().map_err(fail_config)?;
    Ok((cfg, prob))
}

fn single_grid(cfg: &RunConfig, prob: &ProblemSpec) -> Result<std::sync::Arc<Grid>, i32> {
    let h = cfg
        .grid
        .h
        .ok_or_else(|| fail_config("grid.h is required for this command"))?;
    Grid::build(*prob.domain(), h).map_err(fail_config)
}

/// Solution table: line grids use `x,u,residual`, plane grids
/// `x,y,u,residual`.
fn solution_rows(u: &GridFunction, residual: &GridFunction) -> (&'static str, Vec<String>) {
    let grid = u.grid();
    let plane = grid.ny() > 1;
    let header = if plane { "x,y,u,residual" } else { "x,u,residual" };
    let rows = (0..grid.node_count())
        .map(|i| {
            let c = grid.coord(i);
            let (uv, rv) = (u.values()[i], residual.values()[i]);
            if plane {
                format!("{},{},{},{}", fmt_f64(c[0]), fmt_f64(c[1]), fmt_f64(uv), fmt_f64(rv))
            } else {
                format!("{},{},{}", fmt_f64(c[0]), fmt_f64(uv), fmt_f64(rv))
            }
        })
        .collect();
    (header, rows)
}

fn residual_rows(residual: &GridFunction) -> (&'static str, Vec<String>) {
    let grid = residual.grid();
    let plane = grid.ny() > 1;
    let header = if plane { "x,y,residual" } else { "x,residual" };
    let rows = (0..grid.node_count())
        .map(|i| {
            let c = grid.coord(i);
            let rv = residual.values()[i];
            if plane {
                format!("{},{},{}", fmt_f64(c[0]), fmt_f64(c[1]), fmt_f64(rv))
            } else {
                format!("{},{}", fmt_f64(c[0]), fmt_f64(rv))
            }
        })
        .collect();
    (header, rows)
}

fn push_stages(report: &mut Report, rep: &crate::scheme::SolveReport) {
    for (k, st) in rep.stages.iter().enumerate() {
        report.push(format!(
            "stage {k} eps {} sweeps {} residual {}",
            fmt_f64(st.eps),
            st.sweeps,
            fmt_f64(st.residual)
        ));
    }
    report.push(format!(
        "solve sweeps_total {} final_eps {} final_residual {} converged true",
        rep.sweeps_total,
        fmt_f64(rep.final_eps),
        fmt_f64(rep.final_residual)
    ));
}

fn cmd_solve(path: &Path, ctx: &Ctx) -> i32 {
    let t0 = Instant::now();
    let (cfg, prob) = match load_problem(path) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let grid = match single_grid(&cfg, &prob) {
        Ok(g) => g,
        Err(code) => return code,
    };
    let params = cfg.solve_params();
    let dir = ctx.out_dir(&cfg);
    let mut report = Report::new("solve", &cfg.echo());

    let (u, rep) = match solve(&prob, &grid, params) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("solver failed: {e}");
            report.push(format!("solve converged false error {e}"));
            if ctx.wants(&cfg, FormatKind::Report) {
                let _ = report.write(&dir, "solve.report", Some(t0.elapsed().as_millis()));
            }
            return EXIT_SOLVE;
        }
    };
    let residual = match assemble_residual(&prob, &u, rep.final_eps, params.monotone_b) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("solver failed: {e}");
            return EXIT_SOLVE;
        }
    };
    push_stages(&mut report, &rep);

    match cfg.oracle() {
        Err(e) => return fail_config(e),
        Ok(Some(oracle)) => {
            let mut err: f64 = 0.0;
            for i in 0..grid.node_count() {
                let c = grid.coord(i);
                err = err.max((u.values()[i] - oracle.eval(c[0], c[1])).abs());
            }
            report.push(format!("error_vs_oracle {}", fmt_f64(err)));
            println!("error vs oracle: {}", fmt_f64(err));
        }
        Ok(None) => {}
    }

    if ctx.wants(&cfg, FormatKind::Csv) {
        let (header, rows) = solution_rows(&u, &residual);
        match write_csv(&dir, "solution.csv", header, rows) {
            Ok(_) => report.artifact("solution.csv"),
            Err(e) => {
                eprintln!("cannot write artifact: {e}");
                return EXIT_SOLVE;
            }
        }
        let (header, rows) = residual_rows(&residual);
        match write_csv(&dir, "residual.csv", header, rows) {
            Ok(_) => report.artifact("residual.csv"),
            Err(e) => {
                eprintln!("cannot write artifact: {e}");
                return EXIT_SOLVE;
            }
        }
    }
    if ctx.wants(&cfg, FormatKind::Report) {
        if let Err(e) = report.write(&dir, "solve.report", Some(t0.elapsed().as_millis())) {
            eprintln!("cannot write report: {e}");
            return EXIT_SOLVE;
        }
    }
    println!(
        "converged: sweeps {} final residual {}",
        rep.sweeps_total,
        fmt_f64(rep.final_residual)
    );
    EXIT_OK
}

fn cmd_sweep(path: &Path, ctx: &Ctx) -> i32 {
    let t0 = Instant::now();
    let (cfg, prob) = match load_problem(path) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let hs = match &cfg.grid.hs {
        Some(hs) if hs.len() >= 3 => hs.clone(),
        _ => return fail_config("grid.hs with at least 3 levels is required for sweep"),
    };
    let params = cfg.solve_params();
    let dir = ctx.out_dir(&cfg);
    let mut report = Report::new("sweep", &cfg.echo());
    let oracle = match cfg.oracle() {
        Ok(v) => v,
        Err(e) => return fail_config(e),
    };

    // (h, error, log2 rate) rows; the error is vs the oracle when one is
    // known and the certified bracket width otherwise
    let mut rows: Vec<(f64, f64, Option<f64>)> = Vec::new();
    match &oracle {
        Some(or) => {
            let sweep = match manufactured_sweep(&prob, or, &hs, &params) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("solver failed: {e}");
                    return EXIT_SOLVE;
                }
            };
            for r in &sweep {
                rows.push((r.h, r.err_inf, r.rate.map(f64::log2)));
                report.push(format!(
                    "level h {} error {} rate {} sweeps {} residual {}",
                    fmt_f64(r.h),
                    fmt_f64(r.err_inf),
                    r.rate.map_or("_".to_string(), |v| fmt_f64(v.log2())),
                    r.sweeps,
                    fmt_f64(r.residual)
                ));
            }
        }
        None => {
            let mut prev: Option<f64> = None;
            for &h in &hs {
                let grid = match Grid::build(*prob.domain(), h) {
                    Ok(g) => g,
                    Err(e) => return fail_config(e),
                };
                let eps_list =
                    match eps_stages(params.eps_rule, params.continuation_steps, h) {
                        Ok(l) => l,
                        Err(e) => return fail_config(e),
                    };
                let width = match bracket_from_barriers(&prob, &grid, &eps_list, params.monotone_b)
                {
                    Ok(b) => b.gap(),
                    Err(e) => {
                        eprintln!("solver failed: {e}");
                        return EXIT_SOLVE;
                    }
                };
                let rate = prev.map(|p| (p / width).log2());
                rows.push((h, width, rate));
                report.push(format!(
                    "level h {} error {} rate {}",
                    fmt_f64(h),
                    fmt_f64(width),
                    rate.map_or("_".to_string(), fmt_f64)
                ));
                prev = Some(width);
            }
        }
    }

    if ctx.wants(&cfg, FormatKind::Csv) {
        let csv_rows = rows
            .iter()
            .map(|(h, e, r)| {
                format!("{},{},{}", fmt_f64(*h), fmt_f64(*e), r.map_or(String::new(), fmt_f64))
            })
            .collect::<Vec<_>>();
        match write_csv(&dir, "sweep.csv", "h,error,rate", csv_rows) {
            Ok(_) => report.artifact("sweep.csv"),
            Err(e) => {
                eprintln!("cannot write artifact: {e}");
                return EXIT_SOLVE;
            }
        }
    }
    if ctx.wants(&cfg, FormatKind::Report) {
        if let Err(e) = report.write(&dir, "sweep.report", Some(t0.elapsed().as_millis())) {
            eprintln!("cannot write report: {e}");
            return EXIT_SOLVE;
        }
    }
    for (h, e, r) in &rows {
        println!(
            "h {:10} error {:24} rate {}",
            fmt_f64(*h),
            fmt_f64(*e),
            r.map_or("_".to_string(), fmt_f64)
        );
    }
    EXIT_OK
}

fn cmd_manufacture(expr_src: &str, path: &Path, ctx: &Ctx) -> i32 {
    let t0 = Instant::now();
    let (cfg, prob) = match load_problem(path) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let u = match Expr::parse(expr_src) {
        Ok(u) => u,
        Err(e) => return fail_config(e),
    };
    let man = match manufacture_rhs(&u, &prob) {
        Ok(m) => m,
        Err(e) => return fail_config(e),
    };
    let dir = ctx.out_dir(&cfg);
    let mut report = Report::new("manufacture", &cfg.echo());
    report.push(format!("field {}", man.f));
    for p in &man.singular_points {
        report.push(format!("singular {} {}", fmt_f64(p[0]), fmt_f64(p[1])));
    }
    report.push(format!("kink_warning {}", man.kink_warning));

    println!("f = {}", man.f);
    for p in &man.singular_points {
        println!("singular point at ({}, {})", fmt_f64(p[0]), fmt_f64(p[1]));
    }
    if man.kink_warning {
        println!("kink warning: f is exact only away from derivative kinks");
    }

    if ctx.wants(&cfg, FormatKind::Csv) {
        if let Some(h) = cfg.grid.h {
            let grid = match Grid::build(*prob.domain(), h) {
                Ok(g) => g,
                Err(e) => return fail_config(e),
            };
            let plane = grid.ny() > 1;
            let header = if plane { "x,y,f" } else { "x,f" };
            let rows = (0..grid.node_count())
                .map(|i| {
                    let c = grid.coord(i);
                    let v = man.f.eval(c[0], c[1]);
                    if plane {
                        format!("{},{},{}", fmt_f64(c[0]), fmt_f64(c[1]), fmt_f64(v))
                    } else {
                        format!("{},{}", fmt_f64(c[0]), fmt_f64(v))
                    }
                })
                .collect::<Vec<_>>();
            match write_csv(&dir, "field.csv", header, rows) {
                Ok(_) => report.artifact("field.csv"),
                Err(e) => {
                    eprintln!("cannot write artifact: {e}");
                    return EXIT_SOLVE;
                }
            }
        }
    }
    if ctx.wants(&cfg, FormatKind::Report) {
        if let Err(e) = report.write(&dir, "manufacture.report", Some(t0.elapsed().as_millis())) {
            eprintln!("cannot write report: {e}");
            return EXIT_SOLVE;
        }
    }
    EXIT_OK
}

struct CheckRun {
    report: Report,
    csv_rows: Vec<String>,
    all_pass: bool,
    instance: String,
}

impl CheckRun {
    fn push(&mut self, name: CheckKind, pass: bool, detail: String) {
        let verdict = if pass { "pass" } else { "fail" };
        let line = format!("check {name} instance {} {verdict} {detail}", self.instance);
        println!("{line}");
        self.report.push(line);
        self.csv_rows.push(format!("{name},{verdict},{detail}"));
        self.all_pass &= pass;
    }
}

fn cmd_verify(path: &Path, ctx: &Ctx) -> i32 {
    let t0 = Instant::now();
    let (cfg, prob) = match load_problem(path) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let checks = cfg.verify.checks.clone();
    if checks.is_empty() {
        return fail_config("verify.checks must request at least one check");
    }
    let params = cfg.solve_params();
    let seed = ctx.seed.unwrap_or(cfg.verify.seed);
    let needs_grid = checks.iter().any(|c| {
        matches!(
            c,
            CheckKind::Classical
                | CheckKind::Uniqueness
                | CheckKind::Sandwich
                | CheckKind::Modulus
                | CheckKind::StrongMax
        )
    });
    let grid = if needs_grid {
        match single_grid(&cfg, &prob) {
            Ok(g) => Some(g),
            Err(code) => return code,
        }
    } else {
        None
    };
    let candidate = match &cfg.verify.candidate_expr {
        Some(src) => match Expr::parse(src) {
            Ok(e) => Some(e),
            Err(e) => return fail_config(format!("candidate_expr: {e}")),
        },
        None => None,
    };
    if checks.iter().any(|c| matches!(c, CheckKind::Classical | CheckKind::ZeroGradient))
        && candidate.is_none()
    {
        return fail_config("verify.candidate_expr is required for classical and zero_gradient");
    }

    let mut run = CheckRun {
        report: Report::new("verify", &cfg.echo()),
        csv_rows: Vec::new(),
        all_pass: true,
        instance: String::new(),
    };
    run.instance = format!("{:016x}", run.report.instance());

    // one discrete solve shared by the solution-based probes
    let needs_solution = checks.iter().any(|c| {
        matches!(c, CheckKind::Sandwich | CheckKind::Modulus | CheckKind::StrongMax)
    });
    let solved: Option<Result<GridFunction, String>> = if needs_solution {
        let grid = grid.as_ref().expect("grid required above");
        Some(solve(&prob, grid, params).map(|(u, _)| u).map_err(|e| e.to_string()))
    } else {
        None
    };

    for check in &checks {
        match check {
            CheckKind::Classical => {
                let grid = grid.as_ref().expect("grid required above");
                let cand = candidate.as_ref().expect("candidate required above");
                let points: Vec<[f64; 2]> =
                    grid.interior_indices().map(|i| grid.coord(i)).collect();
                match classical_check(cand, &prob, &points, cfg.verify.probe_radius) {
                    Ok(rep) => {
                        let slack = 1e-9 * (1.0 + prob.f_sup());
                        let exact_tol = 1e-8 * (1.0 + prob.f_sup());
                        let (pass, worst) = match cfg.verify.candidate_side {
                            CandidateSide::Super => {
                                let m = rep.min_margin();
                                (rep.records.iter().all(|r| r.margin >= -slack), m)
                            }
                            CandidateSide::Sub => {
                                let m = rep
                                    .records
                                    .iter()
                                    .map(|r| r.margin)
                                    .fold(f64::NEG_INFINITY, f64::max);
                                (rep.records.iter().all(|r| r.margin <= slack), m)
                            }
                            CandidateSide::Exact => {
                                let m = rep
                                    .records
                                    .iter()
                                    .map(|r| r.margin.abs())
                                    .fold(0.0_f64, f64::max);
                                (m <= exact_tol, m)
                            }
                        };
                        run.push(
                            *check,
                            pass,
                            format!(
                                "margin {} points {} kink {}",
                                fmt_f64(worst),
                                rep.records.len(),
                                rep.kink_warning
                            ),
                        );
                    }
                    Err(e) => return fail_config(e),
                }
            }
            CheckKind::ZeroGradient => {
                let zg = match &cfg.verify.zero_gradient {
                    Some(z) => z,
                    None => return fail_config("verify.zero_gradient table is required"),
                };
                let cand = candidate.as_ref().expect("candidate required above");
                match zero_gradient_check(cand, &prob, [zg.x, zg.y], zg.q, zg.big_c) {
                    Ok(out) => run.push(
                        *check,
                        out.pass,
                        format!(
                            "margin {} q_min {} at {} {}",
                            fmt_f64(out.margin),
                            fmt_f64(out.q_min),
                            fmt_f64(zg.x),
                            fmt_f64(zg.y)
                        ),
                    ),
                    Err(e @ CertifyError::NotStrictMinimum { .. }) => {
                        run.push(*check, false, format!("reason {e}"));
                    }
                    Err(e) => return fail_config(e),
                }
            }
            CheckKind::Comparison => {
                let rep = comparison_suite(seed, cfg.verify.comparison_count, &params);
                let pass = rep.all_pass();
                let detail = format!(
                    "cases {} failures {} worst_excess {}",
                    rep.cases.len(),
                    rep.failure_count(),
                    fmt_f64(rep.worst_excess())
                );
                for c in rep.cases.iter().filter(|c| !c.passed()) {
                    run.report.push(format!(
                        "comparison_case {} domain {} alpha {} beta {} b {} outcome {:?}",
                        c.index,
                        c.domain_kind,
                        fmt_f64(c.alpha),
                        fmt_f64(c.beta),
                        fmt_f64(c.b_const),
                        c.outcome
                    ));
                }
                run.push(*check, pass, detail);
            }
            CheckKind::Uniqueness => {
                let grid = grid.as_ref().expect("grid required above");
                let gap = (|| -> Result<f64, String> {
                    let eps_list =
                        eps_stages(params.eps_rule, params.continuation_steps, grid.h())
                            .map_err(|e| e.to_string())?;
                    let bracket =
                        bracket_from_barriers(&prob, grid, &eps_list, params.monotone_b)
                            .map_err(|e| e.to_string())?;
                    let (lo, _) = solve_from(&prob, bracket.lower.clone(), &bracket, params)
                        .map_err(|e| e.to_string())?;
                    let (hi, _) = solve_from(&prob, bracket.upper.clone(), &bracket, params)
                        .map_err(|e| e.to_string())?;
                    Ok(lo.max_diff(&hi))
                })();
                match gap {
                    Ok(g) => run.push(
                        *check,
                        g <= cfg.verify.uniqueness_tol,
                        format!("gap {} tol {}", fmt_f64(g), fmt_f64(cfg.verify.uniqueness_tol)),
                    ),
                    Err(e) => run.push(*check, false, format!("reason solve failed: {e}")),
                }
            }
            CheckKind::Sandwich => match solved.as_ref().expect("solved above") {
                Ok(u) => match sandwich_check(u) {
                    Ok(fit) => {
                        let pass = fit.c_low > 0.0 && fit.c_high.is_finite();
                        run.push(
                            *check,
                            pass,
                            format!(
                                "c_low {} c_high {}",
                                fmt_f64(fit.c_low),
                                fmt_f64(fit.c_high)
                            ),
                        );
                    }
                    Err(e) => run.push(*check, false, format!("reason {e}")),
                },
                Err(e) => run.push(*check, false, format!("reason solve failed: {e}")),
            },
            CheckKind::Modulus => match solved.as_ref().expect("solved above") {
                Ok(u) => {
                    let kind = match &cfg.verify.modulus {
                        ModulusConfig::Lipschitz => ModulusKind::Lipschitz,
                        ModulusConfig::Holder(h) => ModulusKind::Holder { gamma: h.gamma },
                        ModulusConfig::Omega(o) => ModulusKind::CappedOmega { tau: o.tau },
                    };
                    let radii = cfg
                        .verify
                        .modulus_radii
                        .clone()
                        .unwrap_or_else(|| vec![0.5 * prob.domain().inradius()]);
                    for r in radii {
                        let fit = modulus_fit(u, r, kind);
                        let (p, q) = fit.pair;
                        let pc = u.grid().coord(p);
                        let qc = u.grid().coord(q);
                        run.push(
                            *check,
                            fit.constant.is_finite(),
                            format!(
                                "radius {} constant {} pair {} {} {} {}",
                                fmt_f64(r),
                                fmt_f64(fit.constant),
                                fmt_f64(pc[0]),
                                fmt_f64(pc[1]),
                                fmt_f64(qc[0]),
                                fmt_f64(qc[1])
                            ),
                        );
                    }
                }
                Err(e) => run.push(*check, false, format!("reason solve failed: {e}")),
            },
            CheckKind::StrongMax => match solved.as_ref().expect("solved above") {
                Ok(u) => {
                    let rep = strong_max_probe(u);
                    let floor = match cfg.verify.strong_max_floor {
                        Some(f) => f,
                        None => match hopf_floor(&prob, rep.interior_min) {
                            Ok(f) => f,
                            Err(e) => return fail_config(e),
                        },
                    };
                    let ztol = 1e-12 * (1.0 + rep.sup_abs);
                    let pass = rep.dichotomy_holds(floor, ztol);
                    run.push(
                        *check,
                        pass,
                        format!(
                            "interior_min {} min_quotient {} floor {}",
                            fmt_f64(rep.interior_min),
                            fmt_f64(rep.min_quotient()),
                            fmt_f64(floor)
                        ),
                    );
                }
                Err(e) => run.push(*check, false, format!("reason solve failed: {e}")),
            },
        }
    }

    let dir = ctx.out_dir(&cfg);
    if ctx.wants(&cfg, FormatKind::Csv) {
        match write_csv(&dir, "certificates.csv", "check,verdict,detail", run.csv_rows.clone()) {
            Ok(_) => run.report.artifact("certificates.csv"),
            Err(e) => {
                eprintln!("cannot write artifact: {e}");
                return EXIT_SOLVE;
            }
        }
    }
    if ctx.wants(&cfg, FormatKind::Report) {
        if let Err(e) = run.report.write(&dir, "verify.report", Some(t0.elapsed().as_millis())) {
            eprintln!("cannot write report: {e}");
            return EXIT_SOLVE;
        }
    }
    if run.all_pass {
        EXIT_OK
    } else {
        EXIT_CERTIFICATE
    }
}

/// Half the inward-derivative level the Hopf barrier certifies on a crown
/// of half the inradius: delta c R e^(-cR) halved.
fn hopf_floor(prob: &ProblemSpec, interior_min: f64) -> Result<f64, String> {
    let dom = prob.domain();
    let r = 0.5 * dom.inradius();
    let delta_cap = if interior_min > 0.0 { interior_min } else { 1.0 };
    let bar = HopfBarrier::on_crown(dom, prob, delta_cap, dom.center(), r)
        .map_err(|e| format!("hopf floor: {e}"))?;
    Ok(0.5 * bar.delta * bar.c * bar.r * (-bar.c * bar.r).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_directory_resolution_order() {
        let flag = PathBuf::from("/tmp/flag");
        let cfg = PathBuf::from("/tmp/cfg");
        assert_eq!(
            resolve_out(Some(&flag), Some(&cfg), Some("env".into())),
            PathBuf::from("/tmp/flag")
        );
        assert_eq!(
            resolve_out(None, Some(&cfg), Some("env".into())),
            PathBuf::from("/tmp/cfg")
        );
        assert_eq!(resolve_out(None, None, Some("env".into())), PathBuf::from("env"));
        assert_eq!(resolve_out(None, None, Some("".into())), PathBuf::from("."));
        assert_eq!(resolve_out(None, None, None), PathBuf::from("."));
    }

    #[test]
    fn solution_table_shape_follows_the_grid() {
        let dom = crate::domain::Domain::interval(-1.0, 1.0).unwrap();
        let grid = Grid::build(dom, 0.25).unwrap();
        let u = GridFunction::constant(grid.clone(), 1.0);
        let r = GridFunction::constant(grid, 0.0);
        let (header, rows) = solution_rows(&u, &r);
        assert_eq!(header, "x,u,residual");
        assert_eq!(rows.len(), 9);
        assert_eq!(rows[4], "0,1,0");

        let dom = crate::domain::Domain::rectangle([0.0, 0.0], [1.0, 1.0]).unwrap();
        let grid = Grid::build(dom, 0.125).unwrap();
        let u = GridFunction::constant(grid.clone(), 2.0);
        let r = GridFunction::constant(grid, 0.5);
        let (header, rows) = solution_rows(&u, &r);
        assert_eq!(header, "x,y,u,residual");
        assert_eq!(rows.len(), 81);
        assert!(rows[40].starts_with("0.5,0.5,2,"));
    }

}
