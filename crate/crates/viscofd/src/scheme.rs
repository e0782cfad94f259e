//! Monotone finite-difference discretization and the marching solver.
//!
//! The discrete operator at an interior node is
//!
//! ```text
//!   R_i(u) = -[w_hi S_i+ - w_lo S_i-] + b_i (G_b^2 + eps^2)^(beta/2)
//!            + lambda zeta(u_i) - f_i
//! ```
//!
//! where `S_i` is a frame-extremal second difference (the discrete version
//! of the extremal operator), split into positive and negative parts, and
//! the gradient magnitudes come from one-sided differences combined so that
//! every term is nonincreasing in neighbor values. That monotonicity is the
//! load-bearing property here: it makes sub and supersolution brackets
//! invariant under the marching update and is what the comparison
//! certificates ultimately rest on. A centered-difference variant of the
//! first-order term is kept behind a flag as a negative control; it is NOT
//! monotone and the certificates are expected to catch it.
//!
//! The solver marches in pseudo-time with a per-node step chosen from a
//! local slope bound, treating the zero-order term implicitly so that the
//! stiff singular regime `alpha < 0` cannot oscillate through u = 0. The
//! gradient regularization eps is driven to its final value over a few
//! continuation stages, each warm-started from the last.

use crate::barrier::{global_barrier, BarrierError, BarrierSide};
use crate::domain::{DomainError, DomainKind, Grid, GridFunction};
use crate::operator::{pow_sq, OperatorVariant, ZeroOrderTerm};
use crate::problem::ProblemSpec;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemeError {
    #[error(transparent)]
    Barrier(#[from] BarrierError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("grid domain does not match the problem domain")]
    GridMismatch,
    #[error("regularization eps must be positive, got {eps}")]
    NonpositiveEps { eps: f64 },
    #[error("iterate left the bracket at sweep {sweep} even at dt factor {dt_factor}")]
    BracketViolated { sweep: u64, dt_factor: f64 },
    #[error("could not certify discrete bracket signs by constant lifts (worst residual {worst})")]
    BracketLift { worst: f64 },
    #[error("stage stalled after {sweeps} sweeps: residual {residual} above tolerance {tol}")]
    Stalled { sweeps: u64, residual: f64, tol: f64 },
}

/// How the final gradient regularization is tied to the grid spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsRule {
    /// `eps = factor * h`; the default ties the regularization error to the
    /// scheme's own first-order consistency.
    H { factor: f64 },
    /// `eps = factor * h^power`.
    HPow { factor: f64, power: f64 },
    /// Fixed eps independent of the grid.
    Const { value: f64 },
}

impl EpsRule {
    pub fn final_eps(&self, h: f64) -> f64 {
        match *self {
            EpsRule::H { factor } => factor * h,
            EpsRule::HPow { factor, power } => factor * h.powf(power),
            EpsRule::Const { value } => value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveParams {
    /// Fraction of the stability limit used for each node's pseudo-time step.
    pub dt_factor: f64,
    /// Sweep cap per continuation stage.
    pub max_iters: u64,
    /// Interior residual tolerance, scaled internally by (1 + |f|).
    pub residual_tol: f64,
    /// Number of continuation stages from sqrt(h) down to the final eps.
    pub continuation_steps: u32,
    pub eps_rule: EpsRule,
    /// True for the Godunov first-order term; false switches to the
    /// centered magnitude (non-monotone negative control).
    pub monotone_b: bool,
    /// Cadence (in sweeps) of residual checks and step-size refreshes.
    pub check_every: u32,
}

impl Default for SolveParams {
    fn default() -> Self {
        Self {
            dt_factor: 0.85,
            max_iters: 3_000_000,
            residual_tol: 1e-8,
            continuation_steps: 4,
            eps_rule: EpsRule::H { factor: 1.0 },
            monotone_b: true,
            check_every: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageReport {
    pub eps: f64,
    pub sweeps: u64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub stages: Vec<StageReport>,
    pub sweeps_total: u64,
    pub final_eps: f64,
    pub final_residual: f64,
    pub dt_factor_final: f64,
    pub bracket_lift: f64,
}

/// Ordered discrete sub and supersolution pair with certified residual
/// signs at every continuation stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Bracket {
    pub lower: GridFunction,
    pub upper: GridFunction,
    /// Total constant lift that was needed to make the signs exact.
    pub lift: f64,
}

impl Bracket {
    pub fn gap(&self) -> f64 {
        self.upper.max_diff(&self.lower)
    }
}

/// Continuation schedule: geometric from `max(sqrt(h), eps_final)` down to
/// `eps_final` over the requested number of stages.
pub fn eps_stages(rule: EpsRule, steps: u32, h: f64) -> Result<Vec<f64>, SchemeError> {
    let eps_final = rule.final_eps(h);
    if !(eps_final > 0.0 && eps_final.is_finite()) {
        return Err(SchemeError::NonpositiveEps { eps: eps_final });
    }
    let eps0 = h.sqrt().max(eps_final);
    if steps <= 1 || eps0 <= eps_final * (1.0 + 1e-12) {
        return Ok(vec![eps_final]);
    }
    let q = (eps_final / eps0).powf(1.0 / (steps - 1) as f64);
    Ok((0..steps)
        .map(|k| if k + 1 == steps { eps_final } else { eps0 * q.powi(k as i32) })
        .collect())
}

/// Root of `w + c |w|^(1+alpha) sign(w) = rhs`; strictly monotone in w, so
/// the root is unique and has the sign of rhs.
pub fn zeta_solve(rhs: f64, c: f64, alpha: f64) -> f64 {
    debug_assert!(c >= 0.0);
    if c == 0.0 || rhs == 0.0 {
        return rhs;
    }
    if alpha == 0.0 {
        return rhs / (1.0 + c);
    }
    let r = rhs.abs();
    if alpha == 1.0 {
        // t + c t^2 = r, stable quadratic form
        return (2.0 * r / (1.0 + (1.0 + 4.0 * c * r).sqrt())).copysign(rhs);
    }
    if alpha == -0.5 {
        // t + c sqrt(t) = r is quadratic in sqrt(t)
        let x = 2.0 * r / (c + (c * c + 4.0 * r).sqrt());
        return (x * x).copysign(rhs);
    }
    let t = if alpha > 0.0 {
        // c t^(1+alpha) + t = r, convex in t, root below r
        power_linear_root(c, 1.0 + alpha, 1.0, r, r)
    } else {
        // the root can be exponentially small in t, so substitute
        // s = t^(1+alpha): s^q + c s = r with q > 1 is convex and the root
        // stays well scaled; the residual is identical in either variable
        let q = 1.0 / (1.0 + alpha);
        let hi = pow_sq(r * r, 0.5 * (1.0 + alpha)).min(r / c);
        let s = power_linear_root(1.0, q, c, r, hi);
        pow_sq(s * s, 0.5 * q)
    };
    t.copysign(rhs)
}

/// Unique root of `a x^p + b x = r` on `[0, hi]` for `p >= 1`, `a, b >= 0`,
/// assuming the residual at hi is nonnegative. Safeguarded Newton; the left
/// side is convex so the iteration cannot escape the bracket for long.
fn power_linear_root(a_coef: f64, p: f64, b_coef: f64, r: f64, hi0: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, hi0);
    let mut x = hi0;
    for _ in 0..120 {
        let f = a_coef * pow_sq(x * x, 0.5 * p) + b_coef * x - r;
        if f.abs() <= 1e-15 * (1.0 + r) {
            return x;
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let fp = a_coef * p * pow_sq(x * x, 0.5 * (p - 1.0)) + b_coef;
        let xn = x - f / fp;
        x = if xn.is_finite() && xn > lo && xn < hi { xn } else { 0.5 * (lo + hi) };
        if hi - lo <= f64::EPSILON * hi0 {
            return x;
        }
    }
    x
}

enum Stencil {
    Line,
    Radial { n_curv: f64 },
    Plane,
}

/// Precomputed per-grid data for the discrete operator. `apply` returns the
/// derivative part A_i (everything except the zero-order term and f) plus a
/// local bound on |dA_i/du_i| for step-size control.
struct Disc {
    grid: Arc<Grid>,
    stencil: Stencil,
    nx: usize,
    inv_h: f64,
    inv_h2: f64,
    a: f64,
    big_a: f64,
    /// Hessian-slot weight entering slope bounds: 1 for the trace variant.
    wa: f64,
    variant: OperatorVariant,
    alpha: f64,
    beta: f64,
    lambda: f64,
    monotone_b: bool,
    sqrt_dim: f64,
    zot: ZeroOrderTerm,
    f: Vec<f64>,
    b: Vec<f64>,
    phi: Vec<f64>,
    r: Vec<f64>,
    interior: Vec<usize>,
}

impl Disc {
    fn new(prob: &ProblemSpec, grid: &Arc<Grid>, monotone_b: bool) -> Self {
        let n = grid.node_count();
        let mut f = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        let mut phi = Vec::with_capacity(n);
        let mut r = Vec::with_capacity(n);
        for idx in 0..n {
            let c = grid.coord(idx);
            f.push(prob.f_at(c[0], c[1]));
            b.push(prob.b_at(c[0], c[1]));
            phi.push(prob.phi_at(c[0], c[1]));
            r.push(c[0]);
        }
        let (stencil, sqrt_dim) = match grid.domain().kind() {
            DomainKind::Interval { .. } => (Stencil::Line, 1.0),
            DomainKind::Ball { .. } => {
                (Stencil::Radial { n_curv: (grid.domain().ambient_dim() - 1) as f64 }, 1.0)
            }
            DomainKind::Rectangle { .. } => (Stencil::Plane, std::f64::consts::SQRT_2),
        };
        let pair = prob.pair();
        let variant = prob.variant();
        let profile = prob.profile();
        Disc {
            grid: grid.clone(),
            stencil,
            nx: grid.nx(),
            inv_h: 1.0 / grid.h(),
            inv_h2: 1.0 / (grid.h() * grid.h()),
            a: pair.a(),
            big_a: pair.big_a(),
            wa: if variant == OperatorVariant::Trace { 1.0 } else { pair.big_a() },
            variant,
            alpha: profile.alpha(),
            beta: profile.beta(),
            lambda: profile.lambda(),
            monotone_b,
            sqrt_dim,
            zot: prob.zero_order(),
            f,
            b,
            phi,
            r,
            interior: grid.interior_indices().collect(),
        }
    }

    /// Per-eigenvalue extremal weighting of one directional second difference.
    #[inline]
    fn ext(&self, x: f64) -> f64 {
        match self.variant {
            OperatorVariant::PucciPlus => (self.a * x).max(self.big_a * x),
            OperatorVariant::PucciMinus => (self.a * x).min(self.big_a * x),
            OperatorVariant::Trace => x,
        }
    }

    #[inline]
    fn apply(&self, u: &[f64], idx: usize, eps: f64) -> (f64, f64) {
        match self.stencil {
            Stencil::Line => self.apply_line(u, idx, eps),
            Stencil::Radial { n_curv } => self.apply_radial(u, idx, eps, n_curv),
            Stencil::Plane => self.apply_plane(u, idx, eps),
        }
    }

    #[inline]
    fn apply_line(&self, u: &[f64], i: usize, eps: f64) -> (f64, f64) {
        let (um, u0, up) = (u[i - 1], u[i], u[i + 1]);
        let dp = (up - u0) * self.inv_h;
        let dm = (u0 - um) * self.inv_h;
        let gi = dp.max(-dm).max(0.0);
        let gd = dm.max(-dp).max(0.0);
        let s = self.ext((up - 2.0 * u0 + um) * self.inv_h2);
        let cen = 0.5 * (up - um) * self.inv_h;
        self.tail(gi * gi, gd * gd, cen * cen, s, 2.0 * self.wa * self.inv_h2, self.b[i], eps)
    }

    #[inline]
    fn apply_radial(&self, u: &[f64], i: usize, eps: f64, n_curv: f64) -> (f64, f64) {
        if i == 0 {
            // center: reflection neighbor, curvature limit makes the second
            // difference an (n)-fold eigenvalue
            let dp = (u[1] - u[0]) * self.inv_h;
            let v2 = 2.0 * dp * self.inv_h;
            let gi = dp.max(0.0);
            let gd = (-dp).max(0.0);
            let nn = n_curv + 1.0;
            let s = nn * self.ext(v2);
            let s_slope = nn * 2.0 * self.wa * self.inv_h2;
            return self.tail(gi * gi, gd * gd, 0.0, s, s_slope, self.b[0], eps);
        }
        let (um, u0, up) = (u[i - 1], u[i], u[i + 1]);
        let dp = (up - u0) * self.inv_h;
        let dm = (u0 - um) * self.inv_h;
        let gi = dp.max(-dm).max(0.0);
        let gd = dm.max(-dp).max(0.0);
        let rad = self.r[i];
        // forward difference in the curvature slot keeps the scheme
        // monotone; centered would not
        let mu = dp / rad;
        let s = self.ext((up - 2.0 * u0 + um) * self.inv_h2) + n_curv * self.ext(mu);
        let s_slope = 2.0 * self.wa * self.inv_h2 + n_curv * self.wa * self.inv_h / rad;
        let cen = 0.5 * (up - um) * self.inv_h;
        self.tail(gi * gi, gd * gd, cen * cen, s, s_slope, self.b[i], eps)
    }

    #[inline]
    fn apply_plane(&self, u: &[f64], idx: usize, eps: f64) -> (f64, f64) {
        let nx = self.nx;
        let u0 = u[idx];
        let (ul, ur) = (u[idx - 1], u[idx + 1]);
        let (ud, uu) = (u[idx - nx], u[idx + nx]);
        let (udl, udr) = (u[idx - nx - 1], u[idx - nx + 1]);
        let (uul, uur) = (u[idx + nx - 1], u[idx + nx + 1]);
        let dpx = (ur - u0) * self.inv_h;
        let dmx = (u0 - ul) * self.inv_h;
        let dpy = (uu - u0) * self.inv_h;
        let dmy = (u0 - ud) * self.inv_h;
        let gxi = dpx.max(-dmx).max(0.0);
        let gxd = dmx.max(-dpx).max(0.0);
        let gyi = dpy.max(-dmy).max(0.0);
        let gyd = dmy.max(-dpy).max(0.0);
        let dxx = (ur - 2.0 * u0 + ul) * self.inv_h2;
        let dyy = (uu - 2.0 * u0 + ud) * self.inv_h2;
        // diagonal directions have spacing sqrt(2) h
        let dd1 = (udl - 2.0 * u0 + uur) * (0.5 * self.inv_h2);
        let dd2 = (udr - 2.0 * u0 + uul) * (0.5 * self.inv_h2);
        let axis = self.ext(dxx) + self.ext(dyy);
        let s = match self.variant {
            OperatorVariant::PucciPlus => axis.max(self.ext(dd1) + self.ext(dd2)),
            OperatorVariant::PucciMinus => axis.min(self.ext(dd1) + self.ext(dd2)),
            OperatorVariant::Trace => dxx + dyy,
        };
        let cx = 0.5 * (ur - ul) * self.inv_h;
        let cy = 0.5 * (uu - ud) * self.inv_h;
        self.tail(
            gxi * gxi + gyi * gyi,
            gxd * gxd + gyd * gyd,
            cx * cx + cy * cy,
            s,
            4.0 * self.wa * self.inv_h2,
            self.b[idx],
            eps,
        )
    }

    #[inline]
    #[allow(clippy::too_many_arguments)]
    fn tail(
        &self,
        gi2: f64,
        gd2: f64,
        cen2: f64,
        s: f64,
        s_slope: f64,
        b_i: f64,
        eps: f64,
    ) -> (f64, f64) {
        let e2 = eps * eps;
        let wi = pow_sq(gi2 + e2, 0.5 * self.alpha);
        let wd = pow_sq(gd2 + e2, 0.5 * self.alpha);
        // w_hi must be nondecreasing and w_lo nonincreasing in neighbors
        let (whi, wlo, gh2, gl2) =
            if self.alpha >= 0.0 { (wi, wd, gi2, gd2) } else { (wd, wi, gd2, gi2) };
        let sp = s.max(0.0);
        let sm = (-s).max(0.0);
        let gb2 = if self.monotone_b {
            if b_i >= 0.0 {
                gd2
            } else {
                gi2
            }
        } else {
            cen2
        };
        let a_val = -(whi * sp - wlo * sm) + b_i * pow_sq(gb2 + e2, 0.5 * self.beta);

        let aw = self.alpha.abs() * self.sqrt_dim * self.inv_h;
        let dwh = aw * whi * gh2.sqrt() / (gh2 + e2);
        let dwl = aw * wlo * gl2.sqrt() / (gl2 + e2);
        let db = b_i.abs() * self.beta * pow_sq(gb2 + e2, 0.5 * (self.beta - 1.0))
            * self.sqrt_dim
            * self.inv_h;
        let active_w = if s >= 0.0 { whi } else { wlo };
        let l = active_w * s_slope + dwh * sp + dwl * sm + db;
        (a_val, l)
    }

    fn residual_at(&self, u: &[f64], idx: usize, eps: f64) -> f64 {
        if self.grid.is_boundary(idx) {
            return u[idx] - self.phi[idx];
        }
        let (a_val, _) = self.apply(u, idx, eps);
        a_val + self.zot.value(u[idx]) - self.f[idx]
    }

    fn interior_residual_norm(&self, u: &[f64], eps: f64) -> f64 {
        let mut worst = 0.0_f64;
        for &idx in &self.interior {
            let (a_val, _) = self.apply(u, idx, eps);
            let r = a_val + self.zot.value(u[idx]) - self.f[idx];
            worst = worst.max(r.abs());
        }
        worst
    }

    fn fill_dts(&self, u: &[f64], eps: f64, dt_factor: f64, dts: &mut [f64]) {
        for &idx in &self.interior {
            let (_, l) = self.apply(u, idx, eps);
            debug_assert!(l > 0.0 && l.is_finite());
            dts[idx] = dt_factor / l;
        }
    }
}

/// Residual field of a candidate: operator rows at interior nodes,
/// `u - phi` rows on the boundary.
pub fn assemble_residual(
    prob: &ProblemSpec,
    u: &GridFunction,
    eps: f64,
    monotone_b: bool,
) -> Result<GridFunction, SchemeError> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(SchemeError::NonpositiveEps { eps });
    }
    let grid = u.grid().clone();
    check_grid(prob, &grid)?;
    let disc = Disc::new(prob, &grid, monotone_b);
    let vals = u.values();
    let out: Vec<f64> = (0..grid.node_count()).map(|i| disc.residual_at(vals, i, eps)).collect();
    Ok(GridFunction::from_values(grid, out).expect("length matches by construction"))
}

fn check_grid(prob: &ProblemSpec, grid: &Grid) -> Result<(), SchemeError> {
    if grid.domain() != prob.domain() {
        return Err(SchemeError::GridMismatch);
    }
    Ok(())
}

/// Discrete bracket from the global barrier pair: the supersolution is the
/// barrier at level |f| raised by the boundary datum's positive part, the
/// subsolution its mirror image, and both get exact residual signs at every
/// continuation eps through constant lifts (shifts only move the zero-order
/// term, which is strictly increasing, so a large enough lift always
/// certifies).
pub fn bracket_from_barriers(
    prob: &ProblemSpec,
    grid: &Arc<Grid>,
    eps_list: &[f64],
    monotone_b: bool,
) -> Result<Bracket, SchemeError> {
    check_grid(prob, grid)?;
    for &e in eps_list {
        if e.is_nan() || e <= 0.0 {
            return Err(SchemeError::NonpositiveEps { eps: e });
        }
    }
    let disc = Disc::new(prob, grid, monotone_b);
    let n = grid.node_count();
    let mut phi_plus = 0.0_f64;
    let mut phi_minus = 0.0_f64;
    for idx in grid.boundary_indices() {
        phi_plus = phi_plus.max(disc.phi[idx]);
        phi_minus = phi_minus.max(-disc.phi[idx]);
    }
    // the zero bracket is exact only when the first-order term vanishes
    // too: at eps > 0 the regularized b-term gives the zero function the
    // strictly positive residual b eps^beta, so it is no subsolution
    if prob.f_sup() == 0.0 && phi_plus == 0.0 && phi_minus == 0.0 && prob.b_sup() == 0.0 {
        let zero = GridFunction::constant(grid.clone(), 0.0);
        return Ok(Bracket { lower: zero.clone(), upper: zero, lift: 0.0 });
    }
    let (mut upper, mut lower) = if prob.f_sup() > 0.0 {
        let bar = global_barrier(prob, prob.f_sup(), BarrierSide::Super)?;
        let up: Vec<f64> =
            (0..n).map(|i| bar.value_from_distance(grid.node_distance(i)) + phi_plus).collect();
        let lo: Vec<f64> = up.iter().map(|&v| -(v - phi_plus) - phi_minus).collect();
        (up, lo)
    } else {
        (vec![phi_plus; n], vec![-phi_minus; n])
    };
    let lift_up = certify_lift(&disc, &mut upper, 1.0, eps_list)?;
    let lift_down = certify_lift(&disc, &mut lower, -1.0, eps_list)?;
    Ok(Bracket {
        lower: GridFunction::from_values(grid.clone(), lower).expect("length matches"),
        upper: GridFunction::from_values(grid.clone(), upper).expect("length matches"),
        lift: lift_up.max(lift_down),
    })
}

fn certify_lift(
    disc: &Disc,
    vals: &mut [f64],
    sign: f64,
    eps_list: &[f64],
) -> Result<f64, SchemeError> {
    let worst_signed = |vals: &[f64]| -> f64 {
        let mut worst = f64::INFINITY;
        for &eps in eps_list {
            for &idx in &disc.interior {
                let (a_val, _) = disc.apply(vals, idx, eps);
                let r = a_val + disc.zot.value(vals[idx]) - disc.f[idx];
                worst = worst.min(sign * r);
            }
        }
        worst
    };
    let mut total = 0.0;
    let mut worst = worst_signed(vals);
    if worst >= 0.0 {
        return Ok(0.0);
    }
    let mut step = 1.05 * ((-worst) / disc.lambda).powf(1.0 / (1.0 + disc.alpha));
    for _ in 0..64 {
        for v in vals.iter_mut() {
            *v += sign * step;
        }
        total += step;
        worst = worst_signed(vals);
        if worst >= 0.0 {
            return Ok(total);
        }
        step *= 2.0;
    }
    Err(SchemeError::BracketLift { worst })
}

/// Solve from the lower bracket; the standard entry point.
pub fn solve(
    prob: &ProblemSpec,
    grid: &Arc<Grid>,
    params: SolveParams,
) -> Result<(GridFunction, SolveReport), SchemeError> {
    let eps_list = eps_stages(params.eps_rule, params.continuation_steps, grid.h())?;
    let bracket = bracket_from_barriers(prob, grid, &eps_list, params.monotone_b)?;
    let start = bracket.lower.clone();
    solve_from(prob, start, &bracket, params)
}

/// March the scheme from an explicit start inside a certified bracket.
pub fn solve_from(
    prob: &ProblemSpec,
    start: GridFunction,
    bracket: &Bracket,
    params: SolveParams,
) -> Result<(GridFunction, SolveReport), SchemeError> {
    let grid = start.grid().clone();
    check_grid(prob, &grid)?;
    if bracket.lower.grid().as_ref() != grid.as_ref() || bracket.upper.grid().as_ref() != grid.as_ref()
    {
        return Err(SchemeError::GridMismatch);
    }
    let eps_list = eps_stages(params.eps_rule, params.continuation_steps, grid.h())?;
    let disc = Disc::new(prob, &grid, params.monotone_b);
    let mut u = start.values().to_vec();
    for idx in grid.boundary_indices() {
        u[idx] = disc.phi[idx];
    }
    let lower = bracket.lower.values();
    let upper = bracket.upper.values();
    let scale = lower.iter().chain(upper.iter()).fold(0.0_f64, |m, v| m.max(v.abs()));
    let slack = 1e-12 * (1.0 + scale);
    for i in 0..u.len() {
        if u[i] < lower[i] - slack || u[i] > upper[i] + slack {
            return Err(SchemeError::BracketViolated { sweep: 0, dt_factor: params.dt_factor });
        }
        u[i] = u[i].clamp(lower[i], upper[i]);
    }
    let tol_eff = params.residual_tol * (1.0 + prob.f_sup());
    let mut dt_factor = params.dt_factor;
    let mut stages = Vec::with_capacity(eps_list.len());
    let mut sweeps_total = 0;
    let n_stages = eps_list.len();
    for (k, &eps) in eps_list.iter().enumerate() {
        let stage_tol = if k + 1 == n_stages { tol_eff } else { tol_eff * 100.0 };
        let st = march_stage(
            &disc,
            &mut u,
            lower,
            upper,
            slack,
            eps,
            stage_tol,
            &params,
            &mut dt_factor,
        )?;
        sweeps_total += st.sweeps;
        stages.push(st);
    }
    let final_eps = *eps_list.last().expect("at least one stage");
    let final_residual = stages.last().expect("at least one stage").residual;
    let report = SolveReport {
        stages,
        sweeps_total,
        final_eps,
        final_residual,
        dt_factor_final: dt_factor,
        bracket_lift: bracket.lift,
    };
    Ok((GridFunction::from_values(grid, u).expect("length matches"), report))
}

#[allow(clippy::too_many_arguments)]
fn march_stage(
    disc: &Disc,
    u: &mut [f64],
    lower: &[f64],
    upper: &[f64],
    slack: f64,
    eps: f64,
    tol: f64,
    params: &SolveParams,
    dt_factor: &mut f64,
) -> Result<StageReport, SchemeError> {
    let mut dts = vec![0.0; u.len()];
    let check = params.check_every.max(1) as u64;
    let mut sweep: u64 = 0;
    loop {
        if sweep.is_multiple_of(check) {
            let res = disc.interior_residual_norm(u, eps);
            if res <= tol {
                return Ok(StageReport { eps, sweeps: sweep, residual: res });
            }
            if sweep >= params.max_iters {
                return Err(SchemeError::Stalled { sweeps: sweep, residual: res, tol });
            }
            disc.fill_dts(u, eps, *dt_factor, &mut dts);
        }
        let forward = sweep.is_multiple_of(2);
        let mut violated = false;
        let count = disc.interior.len();
        for k in 0..count {
            let idx = if forward { disc.interior[k] } else { disc.interior[count - 1 - k] };
            let (a_val, _) = disc.apply(u, idx, eps);
            let rhs = u[idx] - dts[idx] * (a_val - disc.f[idx]);
            let w = zeta_solve(rhs, dts[idx] * disc.lambda, disc.alpha);
            if w < lower[idx] - slack || w > upper[idx] + slack {
                violated = true;
            }
            u[idx] = w.clamp(lower[idx], upper[idx]);
        }
        if violated {
            *dt_factor *= 0.5;
            if *dt_factor < params.dt_factor / 64.0 {
                return Err(SchemeError::BracketViolated { sweep, dt_factor: *dt_factor });
            }
            disc.fill_dts(u, eps, *dt_factor, &mut dts);
        }
        sweep += 1;
    }
}
