//! Pointwise and global certificates on computed or closed-form candidates.
//!
//! Everything here is a probe: it takes a candidate (an expression or a grid
//! function), evaluates a theorem's hypothesis or conclusion at many points,
//! and reports quantified margins instead of a bare boolean. The checks
//! cover the pointwise sub/supersolution inequalities (including the
//! zero-gradient criterion that replaces them where the weight is singular),
//! discrete comparison, modulus-of-continuity fits, distance sandwiches, and
//! the strong maximum principle with Hopf quotients at the boundary.

use crate::barrier::BarrierSide;
use crate::domain::{DomainKind, GridFunction};
use crate::expr::{differentiate, Axis, Expr};
use crate::operator::{pow_sq, radial_operator_value, GradientVector, SymMatrix};
use crate::problem::{ProblemError, ProblemSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Gradient magnitudes below this count as vanishing.
const GRAD_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    #[error("grid functions live on different grids")]
    GridMismatch,
    #[error("boundary ordering fails at node {at}: u exceeds v by {gap}")]
    BoundaryOrderViolated { at: usize, gap: f64 },
    #[error("test exponent q = {q} is below the admissible minimum {q_min}")]
    QTooSmall { q: f64, q_min: f64 },
    #[error("({x}, {y}) is not a strict local minimum of the probe function (center {w_center}, sampled {w_probe})")]
    NotStrictMinimum { x: f64, y: f64, w_center: f64, w_probe: f64 },
    #[error("zero-gradient criterion applies only to alpha in (-1, 0), got {alpha}")]
    AlphaNotSingular { alpha: f64 },
    #[error("candidate is negative at interior node {at}: {value}")]
    SignViolation { at: usize, value: f64 },
    #[error("sample point ({x}, {y}) lies outside the open domain")]
    PointOutsideDomain { x: f64, y: f64 },
    #[error("candidate is not twice differentiable at ({x}, {y})")]
    NotDifferentiable { x: f64, y: f64 },
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// Nonvanishing gradient: the inequality is evaluated with the
    /// candidate's own derivatives.
    Classical,
    /// Gradient vanishes at the point but not nearby.
    ZeroGradient,
    /// Gradient vanishes on a whole neighborhood sample.
    LocallyConstant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRecord {
    pub point: [f64; 2],
    pub classification: Classification,
    /// Signed residual: `>= 0` is the supersolution side.
    pub margin: f64,
    pub side: BarrierSide,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViscosityReport {
    pub records: Vec<SampleRecord>,
    /// True when a symbolic derivative passed through a kink (abs, sign,
    /// min, max); margins at such points are one-sided values.
    pub kink_warning: bool,
}

impl ViscosityReport {
    pub fn min_margin(&self) -> f64 {
        self.records.iter().fold(f64::INFINITY, |m, r| m.min(r.margin))
    }

    pub fn all_classical(&self) -> bool {
        self.records.iter().all(|r| r.classification == Classification::Classical)
    }
}

/// Evaluate the pointwise inequality at each sample with the candidate's own
/// derivatives. Points where the gradient vanishes fall back to the
/// zero-order margin `lambda zeta(u) - f`, which is the quantity the
/// zero-gradient criterion bounds; the locally-constant classification uses
/// a derivative sweep over a ball of radius `probe_radius`.
pub fn classical_check(
    u: &Expr,
    prob: &ProblemSpec,
    points: &[[f64; 2]],
    probe_radius: f64,
) -> Result<ViscosityReport, CertifyError> {
    let dom = prob.domain();
    let two_d = matches!(dom.kind(), DomainKind::Rectangle { .. });
    let radial = matches!(dom.kind(), DomainKind::Ball { .. });

    let dx = differentiate(u, Axis::X);
    let dxx = differentiate(&dx.expr, Axis::X);
    let mut kink = dx.kink_warning || dxx.kink_warning;
    let (dy, dxy, dyy) = if two_d {
        let dy = differentiate(u, Axis::Y);
        let dxy = differentiate(&dx.expr, Axis::Y);
        let dyy = differentiate(&dy.expr, Axis::Y);
        kink = kink || dy.kink_warning || dxy.kink_warning || dyy.kink_warning;
        (Some(dy), Some(dxy), Some(dyy))
    } else {
        (None, None, None)
    };

    let grad_norm = |x: f64, y: f64| -> f64 {
        let gx = dx.expr.eval(x, y);
        match &dy {
            Some(d) => (gx * gx + d.expr.eval(x, y) * d.expr.eval(x, y)).sqrt(),
            None => gx.abs(),
        }
    };

    let mut records = Vec::with_capacity(points.len());
    for &pt in points {
        let [x, y] = pt;
        if !point_in_open_domain(dom, pt) {
            return Err(CertifyError::PointOutsideDomain { x, y });
        }
        let uval = u.eval(x, y);
        let gnorm = grad_norm(x, y);
        let margin;
        let classification;
        if gnorm <= GRAD_TOL {
            let flat = probe_points(dom, pt, probe_radius)
                .into_iter()
                .all(|[px, py]| grad_norm(px, py) <= GRAD_TOL);
            classification =
                if flat { Classification::LocallyConstant } else { Classification::ZeroGradient };
            margin = prob.zero_order().value(uval) - prob.f_at(x, y);
        } else {
            classification = Classification::Classical;
            margin = if radial {
                if x <= GRAD_TOL {
                    // a radial C2 function has zero slope at the center
                    return Err(CertifyError::NotDifferentiable { x, y });
                }
                let v1 = dx.expr.eval(x, y);
                let v2 = dxx.expr.eval(x, y);
                let f_part = radial_operator_value(
                    x,
                    v1,
                    v2,
                    dom.ambient_dim(),
                    prob.variant(),
                    prob.pair(),
                    prob.profile().alpha(),
                    0.0,
                )
                .map_err(ProblemError::from)?;
                let b_part = prob.b_at(x, y) * pow_sq(v1 * v1, 0.5 * prob.profile().beta());
                -f_part + b_part + prob.zero_order().value(uval) - prob.f_at(x, y)
            } else if two_d {
                let p = GradientVector::two_d(
                    dx.expr.eval(x, y),
                    dy.as_ref().expect("2d").expr.eval(x, y),
                    0.0,
                )
                .map_err(ProblemError::from)?;
                let m = SymMatrix::sym_2d(
                    dxx.expr.eval(x, y),
                    dxy.as_ref().expect("2d").expr.eval(x, y),
                    dyy.as_ref().expect("2d").expr.eval(x, y),
                );
                prob.residual_at(x, y, uval, &p, &m)?
            } else {
                let p = GradientVector::one_d(dx.expr.eval(x, y), 0.0)
                    .map_err(ProblemError::from)?;
                let m = SymMatrix::one_d(dxx.expr.eval(x, y));
                prob.residual_at(x, y, uval, &p, &m)?
            };
        }
        let side = if margin >= 0.0 { BarrierSide::Super } else { BarrierSide::Sub };
        records.push(SampleRecord { point: pt, classification, margin, side });
    }
    Ok(ViscosityReport { records, kink_warning: kink })
}

fn point_in_open_domain(dom: &crate::domain::Domain, pt: [f64; 2]) -> bool {
    match *dom.kind() {
        DomainKind::Ball { radius, .. } => pt[0] >= 0.0 && pt[0] < radius,
        _ => dom.contains(pt[0], pt[1]) && dom.true_distance(pt[0], pt[1]) > 0.0,
    }
}

/// Probe ring inside the domain around `pt`; respects each geometry's
/// coordinate convention (radial coordinate for balls).
fn probe_points(dom: &crate::domain::Domain, pt: [f64; 2], radius: f64) -> Vec<[f64; 2]> {
    let radii = [radius, 0.5 * radius, 0.25 * radius];
    let mut out = Vec::new();
    match *dom.kind() {
        DomainKind::Interval { .. } => {
            for r in radii {
                for s in [-1.0, 1.0] {
                    let q = [pt[0] + s * r, 0.0];
                    if point_in_open_domain(dom, q) {
                        out.push(q);
                    }
                }
            }
        }
        DomainKind::Ball { .. } => {
            for r in radii {
                for s in [-1.0, 1.0] {
                    let q = [pt[0] + s * r, 0.0];
                    if q[0] >= 0.0 && point_in_open_domain(dom, q) {
                        out.push(q);
                    }
                }
            }
        }
        DomainKind::Rectangle { .. } => {
            for r in radii {
                for k in 0..16 {
                    let th = std::f64::consts::TAU * k as f64 / 16.0;
                    let q = [pt[0] + r * th.cos(), pt[1] + r * th.sin()];
                    if point_in_open_domain(dom, q) {
                        out.push(q);
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroGradientOutcome {
    pub pass: bool,
    /// `lambda zeta(v(x_bar)) - f(x_bar)`; nonnegative means the
    /// supersolution conclusion holds at the vanishing-gradient point.
    pub margin: f64,
    pub q_min: f64,
}

/// The singular-regime replacement for touching by smooth test functions:
/// if `v + C|x - x_bar|^q` has a strict local minimum at `x_bar` with q at
/// least `(alpha+2)/(alpha+1)`, a supersolution must satisfy
/// `f(x_bar) <= lambda zeta(v(x_bar))`. A negative margin certifies that v
/// is NOT a supersolution near the point.
pub fn zero_gradient_check(
    v: &Expr,
    prob: &ProblemSpec,
    x_bar: [f64; 2],
    q: f64,
    big_c: f64,
) -> Result<ZeroGradientOutcome, CertifyError> {
    let alpha = prob.profile().alpha();
    if !(-1.0 < alpha && alpha < 0.0) {
        return Err(CertifyError::AlphaNotSingular { alpha });
    }
    let q_min = (alpha + 2.0) / (alpha + 1.0);
    if q < q_min {
        return Err(CertifyError::QTooSmall { q, q_min });
    }
    let dom = prob.domain();
    if !point_in_open_domain(dom, x_bar) {
        return Err(CertifyError::PointOutsideDomain { x: x_bar[0], y: x_bar[1] });
    }
    let dist = match *dom.kind() {
        DomainKind::Ball { radius, .. } => radius - x_bar[0],
        _ => dom.true_distance(x_bar[0], x_bar[1]),
    };
    let probe = (0.5 * dist).min(0.1);
    let w = |p: [f64; 2]| -> f64 {
        let dxp = p[0] - x_bar[0];
        let dyp = p[1] - x_bar[1];
        v.eval(p[0], p[1]) + big_c * pow_sq(dxp * dxp + dyp * dyp, 0.5 * q)
    };
    let w0 = w(x_bar);
    for p in probe_points(dom, x_bar, probe) {
        let wp = w(p);
        if wp <= w0 {
            return Err(CertifyError::NotStrictMinimum {
                x: p[0],
                y: p[1],
                w_center: w0,
                w_probe: wp,
            });
        }
    }
    let margin = prob.zero_order().value(v.eval(x_bar[0], x_bar[1])) - prob.f_at(x_bar[0], x_bar[1]);
    Ok(ZeroGradientOutcome { pass: margin >= 0.0, margin, q_min })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonReport {
    /// Max over interior nodes of `u - v`; nonpositive means ordered.
    pub max_excess: f64,
    pub at: usize,
}

/// Discrete comparison probe: boundary ordering is a precondition, interior
/// ordering is the conclusion being measured.
pub fn comparison_probe(
    u_h: &GridFunction,
    v_h: &GridFunction,
) -> Result<ComparisonReport, CertifyError> {
    let grid = u_h.grid();
    if grid.as_ref() != v_h.grid().as_ref() {
        return Err(CertifyError::GridMismatch);
    }
    let scale = u_h.inf_norm().max(v_h.inf_norm());
    let slack = 1e-12 * (1.0 + scale);
    for idx in grid.boundary_indices() {
        let gap = u_h.values()[idx] - v_h.values()[idx];
        if gap > slack {
            return Err(CertifyError::BoundaryOrderViolated { at: idx, gap });
        }
    }
    let mut max_excess = f64::NEG_INFINITY;
    let mut at = 0;
    for idx in grid.interior_indices() {
        let d = u_h.values()[idx] - v_h.values()[idx];
        if d > max_excess {
            max_excess = d;
            at = idx;
        }
    }
    Ok(ComparisonReport { max_excess, at })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModulusKind {
    Lipschitz,
    Holder { gamma: f64 },
    /// `omega(s) = s - s^(1+tau) / (2(1+tau))` up to its cap point
    /// `s0 = (1+tau)^(1/tau)`, constant afterwards.
    CappedOmega { tau: f64 },
}

impl ModulusKind {
    pub fn omega(&self, s: f64) -> f64 {
        match *self {
            ModulusKind::Lipschitz => s,
            ModulusKind::Holder { gamma } => s.powf(gamma),
            ModulusKind::CappedOmega { tau } => {
                let s0 = (1.0 + tau).powf(1.0 / tau);
                let t = s.min(s0);
                t - t.powf(1.0 + tau) / (2.0 * (1.0 + tau))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulusFit {
    pub kind: ModulusKind,
    /// Restriction radius: only nodes within this distance of the domain
    /// center enter the pair search.
    pub radius: f64,
    /// Least constant c with |u(x) - u(y)| <= c omega(|x - y|) over the
    /// searched pairs.
    pub constant: f64,
    pub pair: (usize, usize),
    pub pairs_checked: u64,
    pub exhaustive: bool,
}

const EXHAUSTIVE_NODE_CAP: usize = 10_000;
const SAMPLED_PAIRS: u64 = 1_000_000;

/// Fit the least modulus constant over node pairs in the radius-r region
/// around the domain center. Exhaustive below 10^4 nodes, seeded uniform
/// pairs beyond, so results are deterministic either way.
pub fn modulus_fit(u_h: &GridFunction, r: f64, kind: ModulusKind) -> ModulusFit {
    let grid = u_h.grid();
    let center = grid.domain().center();
    let in_region = |idx: usize| -> bool {
        let c = grid.coord(idx);
        match grid.domain().kind() {
            // radial grids store the distance from the center directly
            DomainKind::Ball { .. } => c[0] <= r,
            _ => {
                let dx = c[0] - center[0];
                let dy = c[1] - center[1];
                (dx * dx + dy * dy).sqrt() <= r
            }
        }
    };
    let nodes: Vec<usize> = (0..grid.node_count()).filter(|&i| in_region(i)).collect();
    let mut best = 0.0_f64;
    let mut pair = (0usize, 0usize);
    let mut checked = 0u64;
    let ratio = |i: usize, j: usize| -> f64 {
        let ci = grid.coord(i);
        let cj = grid.coord(j);
        let dx = ci[0] - cj[0];
        let dy = ci[1] - cj[1];
        let s = (dx * dx + dy * dy).sqrt();
        if s == 0.0 {
            return 0.0;
        }
        (u_h.values()[i] - u_h.values()[j]).abs() / kind.omega(s)
    };
    let exhaustive = nodes.len() <= EXHAUSTIVE_NODE_CAP;
    if exhaustive {
        for a in 0..nodes.len() {
            for b in (a + 1)..nodes.len() {
                let q = ratio(nodes[a], nodes[b]);
                checked += 1;
                if q > best {
                    best = q;
                    pair = (nodes[a], nodes[b]);
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x6d6f_6475);
        for _ in 0..SAMPLED_PAIRS {
            let a = nodes[rng.gen_range(0..nodes.len())];
            let b = nodes[rng.gen_range(0..nodes.len())];
            if a == b {
                continue;
            }
            let q = ratio(a, b);
            checked += 1;
            if q > best {
                best = q;
                pair = (a, b);
            }
        }
    }
    ModulusFit { kind, radius: r, constant: best, pair, pairs_checked: checked, exhaustive }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichFit {
    /// Largest c with `c d(x) <= u(x)` over interior nodes.
    pub c_low: f64,
    /// Smallest C with `u(x) <= C d(x)` over interior nodes.
    pub c_high: f64,
    pub at_low: usize,
    pub at_high: usize,
}

/// Distance sandwich for the positivity regime (`f >= f0 > 0`, zero datum):
/// the solution should be comparable to the boundary distance from both
/// sides.
pub fn sandwich_check(u_h: &GridFunction) -> Result<SandwichFit, CertifyError> {
    let grid = u_h.grid();
    let slack = 1e-12 * (1.0 + u_h.inf_norm());
    let mut c_low = f64::INFINITY;
    let mut c_high = f64::NEG_INFINITY;
    let (mut at_low, mut at_high) = (0usize, 0usize);
    for idx in grid.interior_indices() {
        let v = u_h.values()[idx];
        if v < -slack {
            return Err(CertifyError::SignViolation { at: idx, value: v });
        }
        let d = grid.node_distance(idx);
        debug_assert!(d > 0.0);
        let q = v / d;
        if q < c_low {
            c_low = q;
            at_low = idx;
        }
        if q > c_high {
            c_high = q;
            at_high = idx;
        }
    }
    Ok(SandwichFit { c_low, c_high, at_low, at_high })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopfQuotient {
    pub boundary_idx: usize,
    pub inward_idx: usize,
    /// Inward difference quotient `(u(x_b + h n_in) - u(x_b)) / |h n_in|`.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrongMaxReport {
    /// Minimum over nodes at distance >= the collar width from the boundary.
    pub interior_min: f64,
    pub interior_min_at: usize,
    pub deep_node_count: usize,
    /// One quotient per boundary node where the candidate vanishes.
    pub quotients: Vec<HopfQuotient>,
    pub sup_abs: f64,
}

impl StrongMaxReport {
    /// The dichotomy: either strictly positive inside with uniformly
    /// positive inward quotients at boundary zeros, or identically zero.
    pub fn dichotomy_holds(&self, quotient_floor: f64, zero_tol: f64) -> bool {
        if self.sup_abs <= zero_tol {
            return true;
        }
        self.interior_min > 0.0 && self.quotients.iter().all(|q| q.value >= quotient_floor)
    }

    pub fn min_quotient(&self) -> f64 {
        self.quotients.iter().fold(f64::INFINITY, |m, q| m.min(q.value))
    }
}

/// Strong maximum principle probe: deep-interior minimum plus inward
/// difference quotients at every boundary node where the candidate
/// vanishes.
pub fn strong_max_probe(u_h: &GridFunction) -> StrongMaxReport {
    let grid = u_h.grid();
    let vals = u_h.values();
    let collar = grid.domain().collar_width();
    let sup_abs = u_h.inf_norm();
    let ztol = 1e-12 * (1.0 + sup_abs);

    let mut interior_min = f64::INFINITY;
    let mut interior_min_at = 0usize;
    let mut deep = 0usize;
    for idx in grid.interior_indices() {
        if grid.node_distance(idx) >= collar {
            deep += 1;
            if vals[idx] < interior_min {
                interior_min = vals[idx];
                interior_min_at = idx;
            }
        }
    }
    if deep == 0 {
        // collar covers the whole grid; fall back to all interior nodes
        for idx in grid.interior_indices() {
            deep += 1;
            if vals[idx] < interior_min {
                interior_min = vals[idx];
                interior_min_at = idx;
            }
        }
    }

    let nx = grid.nx();
    let h = grid.h();
    let mut quotients = Vec::new();
    for idx in grid.boundary_indices() {
        if vals[idx].abs() > ztol {
            continue;
        }
        let (inward, dist) = match grid.domain().kind() {
            DomainKind::Rectangle { .. } => {
                let i = idx % nx;
                let j = idx / nx;
                let di: isize = if i == 0 {
                    1
                } else if i == nx - 1 {
                    -1
                } else {
                    0
                };
                let dj: isize = if j == 0 {
                    1
                } else if j == grid.ny() - 1 {
                    -1
                } else {
                    0
                };
                let step = di + dj * nx as isize;
                let norm = (((di * di + dj * dj) as f64).sqrt()) * h;
                ((idx as isize + step) as usize, norm)
            }
            _ => {
                if idx == 0 {
                    (1, h)
                } else {
                    (idx - 1, h)
                }
            }
        };
        quotients.push(HopfQuotient {
            boundary_idx: idx,
            inward_idx: inward,
            value: (vals[inward] - vals[idx]) / dist,
        });
    }
    StrongMaxReport { interior_min, interior_min_at, deep_node_count: deep, quotients, sup_abs }
}
