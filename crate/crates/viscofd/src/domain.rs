//! Domain geometry, distance-to-boundary profiles, grids.
//!
//! Distance to the boundary is only C² near the wall; further in it hits
//! the medial axis. Barrier constructions need a globally C² surrogate, so
//! the profile returned here is an extended distance `dt = delta0 * S(d/delta0)`
//! with `S(t) = t` for `t <= 1` (collar fidelity: the true distance, exact
//! gradient of norm one, exact Hessian) and a C² monotone blend that goes
//! flat at `t = 1.25`, capping at `S = 17/15`. Where the true distance is
//! kinked (medial axis) the factor `S' = 0` has already killed the gradient
//! and Hessian, except along rectangle ridge lines entering the corners;
//! those carry a deterministic face choice and are excluded from collar
//! bounds per the corner convention below.

use crate::expr::{self, Expr};
use crate::operator::SymMatrix;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("domain bounds are degenerate or non-finite")]
    BadBounds,
    #[error("collar width must lie in (0, 0.8 * inradius], got {collar} with inradius {inradius}")]
    CollarTooWide { collar: f64, inradius: f64 },
    #[error("point ({x}, {y}) lies outside the domain closure")]
    OutsideDomain { x: f64, y: f64 },
    #[error("grid spacing {h} too coarse for collar width {collar} (need h < collar)")]
    SpacingTooCoarse { h: f64, collar: f64 },
    #[error("rectangle y extent {len_y} is not a whole multiple of the shared spacing {h}")]
    IncommensurableRect { len_y: f64, h: f64 },
    #[error("grid function length {got} does not match grid node count {want}")]
    LengthMismatch { got: usize, want: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainKind {
    Interval { lo: f64, hi: f64 },
    Rectangle { lo: [f64; 2], hi: [f64; 2] },
    /// 2d disc; solved through the radial reduction, so its grids are 1d in
    /// the radius and field expressions read `x` as the radial coordinate.
    Ball { center: [f64; 2], radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    kind: DomainKind,
    collar: f64,
    hess_bound: f64,
}

/// Extended distance and its derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceProfile {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: SymMatrix,
    /// True distance below the collar width; there value/grad/hess are the
    /// exact distance function.
    pub in_collar: bool,
}

// cap blend on [1, 1.25]: S'(1 + s/4) = (1 - s^2)^2
fn blend(t: f64) -> (f64, f64, f64) {
    if t <= 1.0 {
        (t, 1.0, 0.0)
    } else if t >= 1.25 {
        (17.0 / 15.0, 0.0, 0.0)
    } else {
        let s = 4.0 * (t - 1.0);
        let s2 = s * s;
        let val = 1.0 + 0.25 * (s - 2.0 * s2 * s / 3.0 + s2 * s2 * s / 5.0);
        let d1 = (1.0 - s2) * (1.0 - s2);
        let d2 = -16.0 * s * (1.0 - s2);
        (val, d1, d2)
    }
}

impl Domain {
    pub fn interval(lo: f64, hi: f64) -> Result<Self, DomainError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(DomainError::BadBounds);
        }
        let kind = DomainKind::Interval { lo, hi };
        Self::with_default_collar(kind)
    }

    pub fn rectangle(lo: [f64; 2], hi: [f64; 2]) -> Result<Self, DomainError> {
        let ok = lo.iter().chain(hi.iter()).all(|v| v.is_finite())
            && lo[0] < hi[0]
            && lo[1] < hi[1];
        if !ok {
            return Err(DomainError::BadBounds);
        }
        Self::with_default_collar(DomainKind::Rectangle { lo, hi })
    }

    pub fn ball(center: [f64; 2], radius: f64) -> Result<Self, DomainError> {
        if !(center[0].is_finite() && center[1].is_finite() && radius.is_finite() && radius > 0.0)
        {
            return Err(DomainError::BadBounds);
        }
        Self::with_default_collar(DomainKind::Ball { center, radius })
    }

    fn with_default_collar(kind: DomainKind) -> Result<Self, DomainError> {
        let inr = Self::inradius_of(&kind);
        Self::assemble(kind, 0.75 * inr)
    }

    /// Same domain with an explicit collar width; must not exceed
    /// 0.8 * inradius so the blend region stays inside the domain.
    pub fn with_collar(&self, collar: f64) -> Result<Self, DomainError> {
        Self::assemble(self.kind, collar)
    }

    fn assemble(kind: DomainKind, collar: f64) -> Result<Self, DomainError> {
        let inr = Self::inradius_of(&kind);
        if !(collar.is_finite() && collar > 0.0 && collar <= 0.8 * inr) {
            return Err(DomainError::CollarTooWide { collar, inradius: inr });
        }
        let hess_bound = match kind {
            DomainKind::Interval { .. } | DomainKind::Rectangle { .. } => 0.0,
            DomainKind::Ball { radius, .. } => 1.0 / (radius - collar),
        };
        Ok(Self { kind, collar, hess_bound })
    }

    #[inline]
    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            DomainKind::Interval { .. } => 1,
            _ => 2,
        }
    }

    /// Spatial dimension of the equation; a ball counts as 2 even though
    /// its grid is the 1d radial one.
    pub fn ambient_dim(&self) -> u32 {
        match self.kind {
            DomainKind::Interval { .. } => 1,
            _ => 2,
        }
    }

    fn inradius_of(kind: &DomainKind) -> f64 {
        match *kind {
            DomainKind::Interval { lo, hi } => 0.5 * (hi - lo),
            DomainKind::Rectangle { lo, hi } => 0.5 * (hi[0] - lo[0]).min(hi[1] - lo[1]),
            DomainKind::Ball { radius, .. } => radius,
        }
    }

    pub fn inradius(&self) -> f64 {
        Self::inradius_of(&self.kind)
    }

    #[inline]
    pub fn collar_width(&self) -> f64 {
        self.collar
    }

    /// Bound on the distance Hessian norm inside the collar (0 for flat
    /// boundaries, curvature bound for the ball).
    #[inline]
    pub fn hess_bound(&self) -> f64 {
        self.hess_bound
    }

    pub fn center(&self) -> [f64; 2] {
        match self.kind {
            DomainKind::Interval { lo, hi } => [0.5 * (lo + hi), 0.0],
            DomainKind::Rectangle { lo, hi } => [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])],
            DomainKind::Ball { center, .. } => center,
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let tol = 1e-12 * (1.0 + self.inradius());
        match self.kind {
            DomainKind::Interval { lo, hi } => x >= lo - tol && x <= hi + tol,
            DomainKind::Rectangle { lo, hi } => {
                x >= lo[0] - tol && x <= hi[0] + tol && y >= lo[1] - tol && y <= hi[1] + tol
            }
            DomainKind::Ball { center, radius } => {
                f64::hypot(x - center[0], y - center[1]) <= radius + tol
            }
        }
    }

    /// True (unextended) distance to the boundary.
    pub fn true_distance(&self, x: f64, y: f64) -> f64 {
        match self.kind {
            DomainKind::Interval { lo, hi } => (x - lo).min(hi - x),
            DomainKind::Rectangle { lo, hi } => (x - lo[0])
                .min(hi[0] - x)
                .min(y - lo[1])
                .min(hi[1] - y),
            DomainKind::Ball { center, radius } => {
                radius - f64::hypot(x - center[0], y - center[1])
            }
        }
    }

    /// Extended distance profile; see the module doc for the extension.
    pub fn distance_profile(&self, x: f64, y: f64) -> Result<DistanceProfile, DomainError> {
        if !self.contains(x, y) {
            return Err(DomainError::OutsideDomain { x, y });
        }
        let d = self.true_distance(x, y).max(0.0);
        // raw gradient and Hessian of the true distance, one-sided at ties
        let (grad, hess) = match self.kind {
            DomainKind::Interval { lo, hi } => {
                let g = if x - lo <= hi - x { 1.0 } else { -1.0 };
                ([g, 0.0], SymMatrix::one_d(0.0))
            }
            DomainKind::Rectangle { lo, hi } => {
                // nearest face, x faces win ties, lower face wins within an axis
                let cands = [
                    (x - lo[0], [1.0, 0.0]),
                    (hi[0] - x, [-1.0, 0.0]),
                    (y - lo[1], [0.0, 1.0]),
                    (hi[1] - y, [0.0, -1.0]),
                ];
                let mut best = cands[0];
                for c in &cands[1..] {
                    if c.0 < best.0 {
                        best = *c;
                    }
                }
                (best.1, SymMatrix::sym_2d(0.0, 0.0, 0.0))
            }
            DomainKind::Ball { center, radius } => {
                let dx = x - center[0];
                let dy = y - center[1];
                let rho = f64::hypot(dx, dy);
                if rho < 1e-14 * radius {
                    // center: S' = 0 multiplies everything anyway
                    ([0.0, 0.0], SymMatrix::sym_2d(0.0, 0.0, 0.0))
                } else {
                    let nx = dx / rho;
                    let ny = dy / rho;
                    // hess d = -(I - n (x) n)/rho
                    let h = SymMatrix::sym_2d(
                        -(1.0 - nx * nx) / rho,
                        (nx * ny) / rho,
                        -(1.0 - ny * ny) / rho,
                    );
                    ([-nx, -ny], h)
                }
            }
        };
        let t = d / self.collar;
        let (s, s1, s2) = blend(t);
        let value = self.collar * s;
        let g = [s1 * grad[0], s1 * grad[1]];
        let hq = s2 / self.collar;
        let hess_ext = match self.dim() {
            1 => SymMatrix::one_d(s1 * 0.0 + hq * grad[0] * grad[0]),
            _ => {
                let base = hess.scale(s1);
                let rank1 = SymMatrix::sym_2d(
                    hq * grad[0] * grad[0],
                    hq * grad[0] * grad[1],
                    hq * grad[1] * grad[1],
                );
                base.add(&rank1).expect("same dimension")
            }
        };
        Ok(DistanceProfile { value, grad: g, hess: hess_ext, in_collar: d < self.collar })
    }

    /// True distance as an expression over the field variables (for ball
    /// domains `x` is the radial coordinate). Kinked along medial axes;
    /// certification differentiates branch-wise, this form is for
    /// evaluation and dumps.
    pub fn distance_expr(&self) -> Expr {
        let x = Expr::Var(crate::expr::Axis::X);
        let y = Expr::Var(crate::expr::Axis::Y);
        match self.kind {
            DomainKind::Interval { lo, hi } => expr::emin(
                expr::sub(x.clone(), expr::num(lo)),
                expr::sub(expr::num(hi), x),
            ),
            DomainKind::Rectangle { lo, hi } => expr::emin(
                expr::emin(
                    expr::sub(x.clone(), expr::num(lo[0])),
                    expr::sub(expr::num(hi[0]), x),
                ),
                expr::emin(
                    expr::sub(y.clone(), expr::num(lo[1])),
                    expr::sub(expr::num(hi[1]), y),
                ),
            ),
            DomainKind::Ball { radius, .. } => expr::sub(expr::num(radius), x),
        }
    }
}

/// Uniform grid over a domain. Interval and ball domains produce 1d node
/// lines (for the ball, in the radius with the center as node 0); rectangles
/// produce a tensor grid in row-major order (`idx = j * nx + i`).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    domain: Domain,
    h: f64,
    nx: usize,
    ny: usize,
}

impl Grid {
    pub fn build(domain: Domain, h: f64) -> Result<Arc<Grid>, DomainError> {
        if !(h.is_finite() && h > 0.0 && h < domain.collar_width()) {
            return Err(DomainError::SpacingTooCoarse { h, collar: domain.collar_width() });
        }
        let snap = |len: f64| -> (usize, f64) {
            let n = (len / h).round().max(2.0) as usize;
            (n, len / n as f64)
        };
        let (nx, ny, h) = match domain.kind {
            DomainKind::Interval { lo, hi } => {
                let (n, h) = snap(hi - lo);
                (n + 1, 1, h)
            }
            DomainKind::Rectangle { lo, hi } => {
                // one spacing for both axes; the y extent must be a multiple
                let (n, hx) = snap(hi[0] - lo[0]);
                let len_y = hi[1] - lo[1];
                let my = (len_y / hx).round().max(2.0) as usize;
                if (len_y - my as f64 * hx).abs() > 1e-9 * len_y {
                    return Err(DomainError::IncommensurableRect { len_y, h: hx });
                }
                (n + 1, my + 1, hx)
            }
            DomainKind::Ball { radius, .. } => {
                let (n, h) = snap(radius);
                (n + 1, 1, h)
            }
        };
        Ok(Arc::new(Grid { domain, h, nx, ny }))
    }

    #[inline]
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.nx
    }

    #[inline]
    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn node_count(&self) -> usize {
        self.nx * self.ny
    }

    /// Field coordinates of a node: (x,) for 1d, (x, y) for rectangles,
    /// (r,) for ball grids.
    pub fn coord(&self, idx: usize) -> [f64; 2] {
        match self.domain.kind {
            DomainKind::Interval { lo, .. } => [lo + idx as f64 * self.h, 0.0],
            DomainKind::Rectangle { lo, .. } => {
                let i = idx % self.nx;
                let j = idx / self.nx;
                [lo[0] + i as f64 * self.h, lo[1] + j as f64 * self.h]
            }
            DomainKind::Ball { .. } => [idx as f64 * self.h, 0.0],
        }
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        match self.domain.kind {
            DomainKind::Interval { .. } => idx == 0 || idx == self.nx - 1,
            DomainKind::Rectangle { .. } => {
                let i = idx % self.nx;
                let j = idx / self.nx;
                i == 0 || i == self.nx - 1 || j == 0 || j == self.ny - 1
            }
            // only the outer rim; the center is an interior node
            DomainKind::Ball { .. } => idx == self.nx - 1,
        }
    }

    pub fn interior_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.node_count()).filter(move |&i| !self.is_boundary(i))
    }

    pub fn boundary_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.node_count()).filter(move |&i| self.is_boundary(i))
    }

    /// Distance from a node to the boundary (true distance, not extended).
    pub fn node_distance(&self, idx: usize) -> f64 {
        let c = self.coord(idx);
        match self.domain.kind {
            DomainKind::Ball { radius, .. } => radius - c[0],
            _ => self.domain.true_distance(c[0], c[1]),
        }
    }
}

/// Nodal values over a shared grid. Value-semantic: cloning snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn constant(grid: Arc<Grid>, v: f64) -> Self {
        let n = grid.node_count();
        Self { grid, values: vec![v; n] }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.node_count())
            .map(|i| {
                let c = grid.coord(i);
                f(c[0], c[1])
            })
            .collect();
        Self { grid, values }
    }

    pub fn from_values(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self, DomainError> {
        if values.len() != grid.node_count() {
            return Err(DomainError::LengthMismatch {
                got: values.len(),
                want: grid.node_count(),
            });
        }
        Ok(Self { grid, values })
    }

    #[inline]
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn inf_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_diff(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Largest interior excess of self over other (positive means ordering
    /// violated somewhere inside).
    pub fn max_interior_excess(&self, other: &GridFunction) -> f64 {
        self.grid
            .interior_indices()
            .map(|i| self.values[i] - other.values[i])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}
