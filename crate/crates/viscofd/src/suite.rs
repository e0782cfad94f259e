//! Manufactured data and randomized cross-checks built on the solver.
//!
//! `manufacture_rhs` closes the loop between the symbolic and discrete
//! layers: given a candidate field u it assembles the exact right hand side
//! f so that u solves the equation, using symbolic derivatives throughout.
//! Solving the manufactured problem and comparing against u then measures
//! pure discretization error, which is what the refinement sweep reports.
//!
//! `comparison_suite` draws random well-posed instance pairs whose data are
//! strictly ordered and checks that the discrete solutions inherit the
//! order. With the default monotone first-order term every instance must
//! pass; running the same suite with `monotone_b = false` is the negative
//! control that shows the ordering is earned by the scheme, not by the
//! test.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::certify::comparison_probe;
use crate::domain::{Domain, DomainKind, Grid, GridFunction};
use crate::expr::{
    abs, add, differentiate, div, emax, emin, mul, neg, num, pow, sign, sqrt, sub, Axis, Expr,
};
use crate::operator::{EllipticityPair, ExponentProfile, OperatorVariant};
use crate::problem::{ProblemError, ProblemSpec};
use crate::scheme::{
    bracket_from_barriers, eps_stages, solve, solve_from, SchemeError, SolveParams, SolveReport,
};

/// Exact right hand side for a candidate field, with the points where the
/// field degenerates.
#[derive(Debug, Clone)]
pub struct ManufacturedRhs {
    pub f: Expr,
    /// Points where the gradient of u vanishes while the gradient weight is
    /// singular (alpha < 0), plus the ball center, whose angular term is a
    /// 0/0 limit in the radial chart. f must be read as a limit there.
    pub singular_points: Vec<[f64; 2]>,
    /// True when a symbolic derivative passed through a kink (abs, min,
    /// max), so f is only almost-everywhere exact.
    pub kink_warning: bool,
}

/// Assemble f so that the candidate u solves the interior equation of
/// `prob` exactly. Only the coefficients, exponents and geometry of `prob`
/// are read; its f field is ignored.
pub fn manufacture_rhs(u: &Expr, prob: &ProblemSpec) -> Result<ManufacturedRhs, ProblemError> {
    let dom = *prob.domain();
    let radial = matches!(dom.kind(), DomainKind::Ball { .. });
    if (dom.dim() == 1 || radial) && u.uses_axis(Axis::Y) {
        let what = if radial { "the radial coordinate" } else { "x" };
        return Err(ProblemError::FieldUsesY { field: "u", what });
    }
    let profile = prob.profile();
    let (alpha, beta, lambda) = (profile.alpha(), profile.beta(), profile.lambda());
    let pair = prob.pair();
    let variant = prob.variant();
    let ext = |e: Expr| -> Expr {
        match variant {
            OperatorVariant::PucciPlus => emax(mul(num(pair.a()), e.clone()), mul(num(pair.big_a()), e)),
            OperatorVariant::PucciMinus => {
                emin(mul(num(pair.a()), e.clone()), mul(num(pair.big_a()), e))
            }
            OperatorVariant::Trace => e,
        }
    };

    let mut kink = false;
    let dx = differentiate(u, Axis::X);
    kink |= dx.kink_warning;
    let dxx = differentiate(&dx.expr, Axis::X);
    kink |= dxx.kink_warning;

    let mut dy_expr = None;
    let (gradsq, principal) = match dom.kind() {
        DomainKind::Interval { .. } => {
            (mul(dx.expr.clone(), dx.expr.clone()), ext(dxx.expr.clone()))
        }
        DomainKind::Ball { .. } => {
            let n = f64::from(dom.ambient_dim());
            let angular = div(dx.expr.clone(), Expr::Var(Axis::X));
            let principal = add(ext(dxx.expr.clone()), mul(num(n - 1.0), ext(angular)));
            (mul(dx.expr.clone(), dx.expr.clone()), principal)
        }
        DomainKind::Rectangle { .. } => {
            let dy = differentiate(u, Axis::Y);
            kink |= dy.kink_warning;
            let dxy = differentiate(&dx.expr, Axis::Y);
            kink |= dxy.kink_warning;
            let dyy = differentiate(&dy.expr, Axis::Y);
            kink |= dyy.kink_warning;
            let gradsq = add(
                mul(dx.expr.clone(), dx.expr.clone()),
                mul(dy.expr.clone(), dy.expr.clone()),
            );
            // eigenvalues of the 2x2 Hessian; the extremal operators act on
            // them one at a time
            let principal = match variant {
                OperatorVariant::Trace => add(dxx.expr.clone(), dyy.expr.clone()),
                _ => {
                    let half_tr = mul(num(0.5), add(dxx.expr.clone(), dyy.expr.clone()));
                    let half_gap = mul(num(0.5), sub(dxx.expr.clone(), dyy.expr.clone()));
                    let disc = sqrt(add(
                        mul(half_gap.clone(), half_gap),
                        mul(dxy.expr.clone(), dxy.expr.clone()),
                    ));
                    add(ext(sub(half_tr.clone(), disc.clone())), ext(add(half_tr, disc)))
                }
            };
            dy_expr = Some(dy.expr);
            (gradsq, principal)
        }
    };

    let mag = sqrt(gradsq);
    let second_order = if alpha == 0.0 {
        principal
    } else {
        mul(pow(mag.clone(), num(alpha)), principal)
    };
    let first_order = mul(prob.b_expr().clone(), pow(mag, num(beta)));
    let zero_order = if alpha == 0.0 {
        mul(num(lambda), u.clone())
    } else {
        mul(num(lambda), mul(sign(u.clone()), pow(abs(u.clone()), num(1.0 + alpha))))
    };
    let f = add(add(neg(second_order), first_order), zero_order);
    let singular_points = singular_scan(&dom, alpha, &dx.expr, dy_expr.as_ref());
    Ok(ManufacturedRhs { f, singular_points, kink_warning: kink })
}

fn singular_scan(dom: &Domain, alpha: f64, dx: &Expr, dy: Option<&Expr>) -> Vec<[f64; 2]> {
    let mut out: Vec<[f64; 2]> = Vec::new();
    if matches!(dom.kind(), DomainKind::Ball { .. }) {
        out.push([0.0, 0.0]);
    }
    if alpha < 0.0 {
        match dom.kind() {
            DomainKind::Interval { lo, hi } => scan_line(dx, *lo, *hi, &mut out),
            DomainKind::Ball { radius, .. } => scan_line(dx, 0.0, *radius, &mut out),
            DomainKind::Rectangle { lo, hi } => {
                let steps = 100;
                for i in 0..=steps {
                    let x = lo[0] + (hi[0] - lo[0]) * f64::from(i) / f64::from(steps);
                    for j in 0..=steps {
                        let y = lo[1] + (hi[1] - lo[1]) * f64::from(j) / f64::from(steps);
                        let g = dx.eval(x, y).hypot(dy.expect("2d field").eval(x, y));
                        if g.is_finite() && g <= 1e-11 {
                            out.push([x, y]);
                        }
                    }
                }
            }
        }
    }
    out.sort_by(|p, q| p[0].total_cmp(&q[0]).then(p[1].total_cmp(&q[1])));
    out.dedup_by(|p, q| (p[0] - q[0]).hypot(p[1] - q[1]) <= 1e-8);
    out
}

/// Flag sample points with a vanishing derivative and bisect every sign
/// change down to its root.
fn scan_line(g: &Expr, lo: f64, hi: f64, out: &mut Vec<[f64; 2]>) {
    let steps = 2000;
    let at = |x: f64| g.eval_1d(x);
    let mut prev = at(lo);
    if prev.is_finite() && prev.abs() <= 1e-11 {
        out.push([lo, 0.0]);
    }
    for k in 1..=steps {
        let x = lo + (hi - lo) * f64::from(k) / f64::from(steps);
        let cur = at(x);
        if cur.is_finite() && cur.abs() <= 1e-11 {
            out.push([x, 0.0]);
        } else if prev.is_finite() && cur.is_finite() && prev * cur < 0.0 {
            let (mut a, mut b) = (x - (hi - lo) / f64::from(steps), x);
            let mut fa = prev;
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                let fm = at(m);
                if fm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if fa * fm < 0.0 {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            out.push([0.5 * (a + b), 0.0]);
        }
        prev = cur;
    }
}

/// Build the full problem whose exact solution is u: the manufactured f in
/// the interior and u itself as the boundary datum.
pub fn manufactured_problem(
    u: &Expr,
    domain: Domain,
    profile: ExponentProfile,
    pair: EllipticityPair,
    variant: OperatorVariant,
    b_field: Expr,
) -> Result<(ProblemSpec, ManufacturedRhs), ProblemError> {
    let probe = ProblemSpec::new(
        domain,
        profile,
        pair,
        variant,
        b_field.clone(),
        num(0.0),
        u.clone(),
    )?;
    let man = manufacture_rhs(u, &probe)?;
    let prob = ProblemSpec::new(domain, profile, pair, variant, b_field, man.f.clone(), u.clone())?;
    Ok((prob, man))
}

/// One grid level of a refinement sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub h: f64,
    /// Sup norm of the nodal error against the exact field.
    pub err_inf: f64,
    /// Error ratio against the previous row, absent on the first.
    pub rate: Option<f64>,
    pub sweeps: u64,
    pub residual: f64,
}

/// Solve the same problem across a list of spacings. Line grids (intervals
/// and radial balls) are warm started from the coarser levels: the previous
/// solution is interpolated onto the fine grid, sharpened by Richardson
/// extrapolation against the level before it when the spacings halve, and
/// marched in a single stage at the final regularization since the start
/// already sits in the basin. Cold levels keep the full continuation.
/// Starts are clamped into the certified bracket, so the warm path changes
/// iteration counts, never the certificate.
pub fn solve_ladder(
    prob: &ProblemSpec,
    hs: &[f64],
    params: &SolveParams,
) -> Result<Vec<(GridFunction, SolveReport)>, SchemeError> {
    let mut out: Vec<(GridFunction, SolveReport)> = Vec::with_capacity(hs.len());
    for (level, &h) in hs.iter().enumerate() {
        let grid = Grid::build(*prob.domain(), h)?;
        let warm = out.last().and_then(|(c, _)| prolong_line(c, &grid));
        let solved = match warm {
            Some(mut start_vals) => {
                // first-order error halves per level, so extrapolating two
                // prolonged levels cancels the leading term of the start
                if level >= 2 {
                    let mid = &out[level - 1].0;
                    let second = prolong_line(&out[level - 2].0, mid.grid())
                        .and_then(|v| {
                            let on_mid =
                                GridFunction::from_values(mid.grid().clone(), v).ok()?;
                            prolong_line(&on_mid, &grid)
                        });
                    if let Some(coarse_vals) = second {
                        for (s, c) in start_vals.iter_mut().zip(&coarse_vals) {
                            *s = 1.5 * *s - 0.5 * c;
                        }
                    }
                }
                let warm_params = SolveParams { continuation_steps: 1, ..*params };
                let eps_list =
                    eps_stages(warm_params.eps_rule, warm_params.continuation_steps, h)?;
                let bracket =
                    bracket_from_barriers(prob, &grid, &eps_list, warm_params.monotone_b)?;
                let clamped: Vec<f64> = start_vals
                    .iter()
                    .zip(bracket.lower.values().iter().zip(bracket.upper.values()))
                    .map(|(v, (lo, up))| v.clamp(*lo, *up))
                    .collect();
                let start = GridFunction::from_values(grid.clone(), clamped)
                    .expect("prolongation length matches the fine grid");
                solve_from(prob, start, &bracket, warm_params)?
            }
            None => solve(prob, &grid, *params)?,
        };
        out.push(solved);
    }
    Ok(out)
}

/// Error-vs-oracle rows across a refinement ladder.
pub fn manufactured_sweep(
    prob: &ProblemSpec,
    u_exact: &Expr,
    hs: &[f64],
    params: &SolveParams,
) -> Result<Vec<SweepRow>, SchemeError> {
    let solved = solve_ladder(prob, hs, params)?;
    let mut rows: Vec<SweepRow> = Vec::with_capacity(hs.len());
    let mut prev_err = f64::NAN;
    for (&h, (u_h, rep)) in hs.iter().zip(&solved) {
        let grid = u_h.grid();
        let mut err: f64 = 0.0;
        for i in 0..grid.node_count() {
            let c = grid.coord(i);
            err = err.max((u_h.values()[i] - u_exact.eval(c[0], c[1])).abs());
        }
        let rate = if rows.is_empty() { None } else { Some(prev_err / err) };
        rows.push(SweepRow {
            h,
            err_inf: err,
            rate,
            sweeps: rep.sweeps_total,
            residual: rep.final_residual,
        });
        prev_err = err;
    }
    Ok(rows)
}

/// Nodes of a once-halved line grid interleave the coarse nodes, so the
/// prolongation is exact at even indices and averages at odd ones.
fn prolong_line(coarse: &GridFunction, fine: &Grid) -> Option<Vec<f64>> {
    let cg = coarse.grid();
    if cg.domain() != fine.domain() || cg.ny() != 1 || fine.ny() != 1 {
        return None;
    }
    let cn = cg.nx();
    if fine.nx() != 2 * cn - 1 {
        return None;
    }
    let cv = coarse.values();
    let out = (0..fine.nx())
        .map(|i| {
            if i.is_multiple_of(2) {
                cv[i / 2]
            } else {
                0.5 * (cv[i / 2] + cv[i / 2 + 1])
            }
        })
        .collect();
    Some(out)
}

/// One randomized ordering instance: the same operator with two right hand
/// sides separated by a fixed gap and a shared boundary datum.
#[derive(Debug, Clone)]
pub struct CaseReport {
    pub index: usize,
    pub domain_kind: &'static str,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub a: f64,
    pub big_a: f64,
    pub variant: OperatorVariant,
    pub b_const: f64,
    pub f_const: f64,
    pub phi_slope: f64,
    /// Largest interior excess u - v allowed before the case counts as an
    /// ordering violation.
    pub threshold: f64,
    pub outcome: CaseOutcome,
}

#[derive(Debug, Clone)]
pub enum CaseOutcome {
    /// Interior excess stayed within the threshold.
    Ordered { max_excess: f64 },
    Violated { max_excess: f64, at: [f64; 2] },
    /// The named solve (\"sub\" or \"super\") did not converge; counts as a
    /// failure since a monotone march cannot leave its bracket.
    SolveFailed { which: &'static str, message: String },
}

impl CaseReport {
    pub fn passed(&self) -> bool {
        matches!(self.outcome, CaseOutcome::Ordered { .. })
    }
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub cases: Vec<CaseReport>,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.cases.iter().all(CaseReport::passed)
    }

    pub fn failure_count(&self) -> usize {
        self.cases.iter().filter(|c| !c.passed()).count()
    }

    pub fn worst_excess(&self) -> f64 {
        self.cases
            .iter()
            .filter_map(|c| match c.outcome {
                CaseOutcome::Ordered { max_excess } | CaseOutcome::Violated { max_excess, .. } => {
                    Some(max_excess)
                }
                CaseOutcome::SolveFailed { .. } => None,
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Draw `count` random instances and check each pair of solutions for the
/// ordering the continuous comparison principle predicts. The draw is fully
/// determined by `seed`. Geometry cycles through interval, ball and
/// rectangle; exponents, ellipticity bounds, coefficient sizes and the
/// boundary slope are drawn wide enough to stress the first-order term,
/// which is where a non-monotone discretization breaks first.
pub fn comparison_suite(seed: u64, count: usize, params: &SolveParams) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::with_capacity(count);
    for index in 0..count {
        let alpha: f64 = rng.gen_range(-0.75..1.2);
        let beta = rng.gen_range(0.3..(alpha + 2.0).min(2.2) * 0.999);
        let lambda = rng.gen_range(0.5..2.0);
        let a = rng.gen_range(0.5..1.0);
        let big_a = rng.gen_range(1.0..2.0);
        let variant = match rng.gen_range(0..3u32) {
            0 => OperatorVariant::PucciPlus,
            1 => OperatorVariant::PucciMinus,
            _ => OperatorVariant::Trace,
        };
        let b_const = rng.gen_range(-12.0..12.0);
        let f_const = rng.gen_range(0.3..1.5);
        let phi_slope = rng.gen_range(-3.0..3.0);
        let (domain, h, domain_kind) = match index % 3 {
            0 => (Domain::interval(-1.0, 1.0).expect("valid interval"), 0.25, "interval"),
            1 => (Domain::ball([0.0, 0.0], 1.0).expect("valid ball"), 0.125, "ball"),
            _ => {
                (Domain::rectangle([0.0, 0.0], [1.0, 1.0]).expect("valid rectangle"), 0.125,
                 "rectangle")
            }
        };
        let threshold = 10.0 * params.residual_tol * (1.0 + f_const);
        let outcome = run_case(
            domain, alpha, beta, lambda, a, big_a, variant, b_const, f_const, phi_slope, h,
            threshold, params,
        );
        cases.push(CaseReport {
            index,
            domain_kind,
            alpha,
            beta,
            lambda,
            a,
            big_a,
            variant,
            b_const,
            f_const,
            phi_slope,
            threshold,
            outcome,
        });
    }
    SuiteReport { cases }
}

#[allow(clippy::too_many_arguments)]
fn run_case(
    domain: Domain,
    alpha: f64,
    beta: f64,
    lambda: f64,
    a: f64,
    big_a: f64,
    variant: OperatorVariant,
    b_const: f64,
    f_const: f64,
    phi_slope: f64,
    h: f64,
    threshold: f64,
    params: &SolveParams,
) -> CaseOutcome {
    let build = |f_value: f64| -> Result<ProblemSpec, ProblemError> {
        let profile = ExponentProfile::new(alpha, beta, lambda).expect("draw within bounds");
        let pair = EllipticityPair::new(a, big_a).expect("draw within bounds");
        ProblemSpec::new(
            domain,
            profile,
            pair,
            variant,
            num(b_const),
            num(f_value),
            mul(num(phi_slope), Expr::Var(Axis::X)),
        )
    };
    let solve_one = |f_value: f64| -> Result<GridFunction, String> {
        let prob = build(f_value).map_err(|e| e.to_string())?;
        let grid = Grid::build(domain, h).map_err(|e| e.to_string())?;
        let (u, _) = solve(&prob, &grid, *params).map_err(|e| e.to_string())?;
        Ok(u)
    };
    let u = match solve_one(f_const - 0.1) {
        Ok(u) => u,
        Err(message) => return CaseOutcome::SolveFailed { which: "sub", message },
    };
    let v = match solve_one(f_const) {
        Ok(v) => v,
        Err(message) => return CaseOutcome::SolveFailed { which: "super", message },
    };
    match comparison_probe(&u, &v) {
        Ok(rep) => {
            if rep.max_excess <= threshold {
                CaseOutcome::Ordered { max_excess: rep.max_excess }
            } else {
                CaseOutcome::Violated { max_excess: rep.max_excess, at: u.grid().coord(rep.at) }
            }
        }
        Err(e) => CaseOutcome::SolveFailed { which: "probe", message: e.to_string() },
    }
}
