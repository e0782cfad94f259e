//! Explicit sub and supersolutions with certified constants.
//!
//! The global barrier is `phi = min(log(1 + C d), log(1 + kappa))` built so
//! that `-|Dphi|^alpha M+(D^2 phi) - |b| |Dphi|^beta + lambda phi^(1+alpha)`
//! stays above a requested level on the log branch, while the constant
//! branch clears the level through the zero-order term alone. Every
//! emitted barrier re-verifies its own residual sign on a dense sample
//! sweep before it is returned; constants are never trusted untested.
//!
//! All certificates here are sign-free in b (they use |b| only) and are
//! checked against the extremal envelope `M+`, which dominates every
//! operator variant this crate ships provided the ellipticity pair brackets
//! the trace case.

use crate::domain::{Domain, DomainKind};
use crate::expr::{self, Expr};
use crate::operator::{
    gradient_weight, pow_sq, pucci_plus, EllipticityPair, GradientVector,
    OperatorVariant, SymMatrix,
};
use crate::problem::ProblemSpec;
use thiserror::Error;

/// Multiplier applied to every strict inequality so certificates carry a
/// quantitative margin.
pub const SAFETY: f64 = 1.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BarrierError {
    #[error("beta = alpha + 2 with nonzero b needs the rescaled construction")]
    CriticalBeta { alpha: f64, beta: f64 },
    #[error(
        "trace variant is only dominated by the extremal envelope when a <= 1 <= A, got a = {a}, A = {big_a}"
    )]
    VariantNotDominated { a: f64, big_a: f64 },
    #[error("requested level must be positive, got {level}")]
    NonpositiveLevel { level: f64 },
    #[error("crown with center ({cx}, {cy}) and radius {r} does not fit inside the domain")]
    CrownOutsideDomain { cx: f64, cy: f64, r: f64 },
    #[error("delta = {delta} too large, needs delta < {max}")]
    DeltaTooLarge { delta: f64, max: f64 },
    #[error("boundary datum deviates from affine by {max_dev}; this barrier needs affine data")]
    NonAffineBoundaryDatum { max_dev: f64 },
    #[error("certificate sweep failed: {what} (worst margin {margin} at d = {at})")]
    CertificationFailed { what: String, margin: f64, at: f64 },
}

/// The constants behind one global barrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierConstants {
    pub kappa: f64,
    pub c_big: f64,
    pub delta0: f64,
    pub m_level: f64,
    pub safety: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarrierSide {
    Super,
    Sub,
}

/// Smallest kappa with `lambda log(1+kappa)^(1+alpha) = m`, by bisection.
pub fn minimal_kappa(lambda: f64, alpha: f64, m_level: f64) -> f64 {
    assert!(lambda > 0.0 && m_level > 0.0 && alpha > -1.0);
    let g = |k: f64| lambda * pow_sq((1.0 + k).ln().powi(2), 0.5 * (1.0 + alpha)) - m_level;
    let mut hi = 1.0;
    while g(hi) <= 0.0 {
        hi *= 2.0;
        assert!(hi.is_finite());
    }
    let mut lo = 0.0;
    while hi - lo > 1e-12 * (1.0 + hi) {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The four lower bounds the slope constant C must clear: boundary reach
/// (the cap must engage inside the collar), curvature loss, the first-order
/// term, and the level itself.
#[allow(clippy::too_many_arguments)]
pub fn c_lower_bounds(
    kappa: f64,
    delta0: f64,
    pair: EllipticityPair,
    n: u32,
    c1: f64,
    b_sup: f64,
    m_level: f64,
    alpha: f64,
    beta: f64,
) -> [f64; 4] {
    let a = pair.a();
    let big_a = pair.big_a();
    let k2 = 1.0 + 2.0 * kappa;
    let reach = 2.0 * kappa / delta0;
    let curvature = 2.0 * k2 * big_a * n as f64 * c1 / a;
    let first_order = if b_sup == 0.0 {
        0.0
    } else {
        let expo = 2.0 + alpha - beta;
        if expo <= 0.0 {
            // only reachable through the rescaled path, which guarantees
            // b_sup < a/4 so the condition holds independent of C
            assert!(2.0 * b_sup < 0.5 * a, "critical beta requires the rescale");
            0.0
        } else {
            k2 * (4.0 * b_sup / a).powf(1.0 / expo)
        }
    };
    let level = k2 * (4.0 * m_level / a).powf(1.0 / (2.0 + alpha));
    [reach, curvature, first_order, level]
}

#[allow(clippy::too_many_arguments)]
fn constants_for(
    lambda: f64,
    alpha: f64,
    beta: f64,
    pair: EllipticityPair,
    n: u32,
    c1: f64,
    delta0: f64,
    b_sup: f64,
    m_level: f64,
) -> BarrierConstants {
    let kappa = SAFETY * minimal_kappa(lambda, alpha, m_level);
    let bounds = c_lower_bounds(kappa, delta0, pair, n, c1, b_sup, m_level, alpha, beta);
    let c_big = SAFETY * bounds.iter().fold(0.0_f64, |m, &b| m.max(b));
    BarrierConstants { kappa, c_big, delta0, m_level, safety: SAFETY }
}

/// Constants for the non-critical construction. `beta = alpha + 2` is only
/// accepted with `b = 0`; otherwise use [`critical_beta_rescale`] (or
/// [`global_barrier`], which dispatches).
pub fn barrier_constants(
    prob: &ProblemSpec,
    m_level: f64,
) -> Result<BarrierConstants, BarrierError> {
    if m_level.is_nan() || m_level <= 0.0 {
        return Err(BarrierError::NonpositiveLevel { level: m_level });
    }
    let profile = prob.profile();
    if profile.beta_is_critical() && prob.b_sup() > 0.0 {
        return Err(BarrierError::CriticalBeta {
            alpha: profile.alpha(),
            beta: profile.beta(),
        });
    }
    check_domination(prob)?;
    let dom = prob.domain();
    Ok(constants_for(
        profile.lambda(),
        profile.alpha(),
        profile.beta(),
        prob.pair(),
        dom.ambient_dim(),
        dom.hess_bound(),
        dom.collar_width(),
        prob.b_sup(),
        m_level,
    ))
}

fn check_domination(prob: &ProblemSpec) -> Result<(), BarrierError> {
    let pair = prob.pair();
    if prob.variant() == OperatorVariant::Trace && !(pair.a() <= 1.0 && pair.big_a() >= 1.0) {
        return Err(BarrierError::VariantNotDominated { a: pair.a(), big_a: pair.big_a() });
    }
    Ok(())
}

/// Which smooth branch of the barrier is active at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarrierBranch {
    Log,
    Cap,
}

/// `scale * min(log(1 + C d), log(1 + kappa))`, signed by side.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalBarrier {
    constants: BarrierConstants,
    side: BarrierSide,
    /// 1 for the plain construction, the rescale epsilon on the critical path.
    scale: f64,
    rescale_eps: Option<f64>,
    domain: Domain,
    pair: EllipticityPair,
    alpha: f64,
    beta: f64,
    lambda: f64,
    /// |b| bound of the original problem (certificates are sign-free).
    b_sup: f64,
    worst_log_margin: f64,
    cap_margin: f64,
}

impl GlobalBarrier {
    #[inline]
    pub fn constants(&self) -> &BarrierConstants {
        &self.constants
    }

    #[inline]
    pub fn side(&self) -> BarrierSide {
        self.side
    }

    #[inline]
    pub fn rescale_eps(&self) -> Option<f64> {
        self.rescale_eps
    }

    /// Barrier value at the cap (its sup in absolute value).
    pub fn cap_value(&self) -> f64 {
        self.scale * (1.0 + self.constants.kappa).ln()
    }

    /// Worst certified margin over the log-branch sweep.
    #[inline]
    pub fn worst_log_margin(&self) -> f64 {
        self.worst_log_margin
    }

    /// Margin of the constant branch: `lambda cap^(1+alpha) - level`.
    #[inline]
    pub fn cap_margin(&self) -> f64 {
        self.cap_margin
    }

    fn sign(&self) -> f64 {
        match self.side {
            BarrierSide::Super => 1.0,
            BarrierSide::Sub => -1.0,
        }
    }

    pub fn value_at(&self, x: f64, y: f64) -> Result<f64, crate::domain::DomainError> {
        let prof = self.domain.distance_profile(x, y)?;
        let c = self.constants.c_big;
        let raw = (1.0 + c * prof.value).ln().min((1.0 + self.constants.kappa).ln());
        Ok(self.sign() * self.scale * raw)
    }

    /// Value as a function of the true boundary distance. Exact everywhere:
    /// the cap engages strictly inside the collar, so the extended and
    /// true distances give the same minimum.
    pub fn value_from_distance(&self, d: f64) -> f64 {
        let c = self.constants.c_big;
        let raw = (1.0 + c * d).ln().min((1.0 + self.constants.kappa).ln());
        self.sign() * self.scale * raw
    }

    pub fn branch_at(&self, x: f64, y: f64) -> Result<BarrierBranch, crate::domain::DomainError> {
        let prof = self.domain.distance_profile(x, y)?;
        Ok(if self.constants.c_big * prof.value < self.constants.kappa {
            BarrierBranch::Log
        } else {
            BarrierBranch::Cap
        })
    }

    /// Distance at which the log branch hands over to the cap.
    pub fn crossover_distance(&self) -> f64 {
        self.constants.kappa / self.constants.c_big
    }

    /// Supersolution margin at a point:
    /// `-|Dphi|^alpha M+(D^2 phi) - |b| |Dphi|^beta + lambda phi^(1+alpha) - level`,
    /// computed from exact branch derivatives. By the sign symmetry of the
    /// construction the sub side certifies with the same number, so the
    /// margin is reported for the positive branch regardless of side. The
    /// cap branch has zero gradient and is certified through the
    /// locally-constant rule (zero-order term only).
    pub fn residual_margin_at(
        &self,
        x: f64,
        y: f64,
    ) -> Result<(f64, BarrierBranch), crate::domain::DomainError> {
        let prof = self.domain.distance_profile(x, y)?;
        let c = self.constants.c_big;
        if c * prof.value >= self.constants.kappa {
            return Ok((self.cap_margin, BarrierBranch::Cap));
        }
        let w0 = c / (1.0 + c * prof.value);
        let s = self.scale;
        let (p, m) = match self.domain.dim() {
            1 => {
                let g = s * w0 * prof.grad[0];
                let h = s * (w0 * prof.hess.trace()
                    - w0 * w0 * prof.grad[0] * prof.grad[0]);
                (
                    GradientVector::one_d(g, 0.0).expect("finite"),
                    SymMatrix::one_d(h),
                )
            }
            _ => {
                let gx = s * w0 * prof.grad[0];
                let gy = s * w0 * prof.grad[1];
                let he = prof.hess.scale(s * w0);
                let rank1 = SymMatrix::sym_2d(
                    s * w0 * w0 * prof.grad[0] * prof.grad[0],
                    s * w0 * w0 * prof.grad[0] * prof.grad[1],
                    s * w0 * w0 * prof.grad[1] * prof.grad[1],
                );
                let m = he.add(&rank1.scale(-1.0)).expect("same dim");
                (GradientVector::two_d(gx, gy, 0.0).expect("finite"), m)
            }
        };
        let value = s * (1.0 + c * prof.value).ln();
        let margin = self.super_margin(value, &p, &m);
        Ok((margin, BarrierBranch::Log))
    }

    fn super_margin(&self, value: f64, p: &GradientVector, m: &SymMatrix) -> f64 {
        let w = gradient_weight(p, self.alpha).expect("log branch has nonzero gradient");
        let mag_sq = p.norm_sq();
        let q = -w * pucci_plus(m, self.pair) - self.b_sup * pow_sq(mag_sq, 0.5 * self.beta)
            + self.lambda * pow_sq(value * value, 0.5 * (1.0 + self.alpha));
        q - self.constants.m_level_original(self.rescale_eps, self.alpha)
    }

    /// The barrier as a closed-form expression over the field variables
    /// (exact for evaluation; kinked at the branch interface and medial
    /// axis, so certification uses branch derivatives instead).
    pub fn expr(&self) -> Expr {
        let c = self.constants.c_big;
        let cap = (1.0 + self.constants.kappa).ln();
        let d = self.domain.distance_expr();
        let log_branch = expr::log(expr::add(
            expr::num(1.0),
            expr::mul(expr::num(c), d),
        ));
        let body = expr::emin(log_branch, expr::num(cap));
        expr::mul(expr::num(self.sign() * self.scale), body)
    }
}

impl BarrierConstants {
    fn m_level_original(&self, rescale_eps: Option<f64>, alpha: f64) -> f64 {
        match rescale_eps {
            // constants were built at level m/eps^(1+alpha); undo for the
            // margin of the scaled function
            Some(eps) => self.m_level * pow_sq(eps * eps, 0.5 * (1.0 + alpha)),
            None => self.m_level,
        }
    }
}

const SWEEP_POINTS: usize = 1000;

fn sweep_line(domain: &Domain) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
    // (x, y, d): walk inward from the boundary along a normal line
    let (x0, y0, dx, dy, reach) = match *domain.kind() {
        DomainKind::Interval { lo, hi } => (lo, 0.0, 1.0, 0.0, hi - lo),
        DomainKind::Rectangle { lo, hi } => {
            let ymid = 0.5 * (lo[1] + hi[1]);
            (lo[0], ymid, 1.0, 0.0, hi[0] - lo[0])
        }
        DomainKind::Ball { center, radius } => (center[0] + radius, center[1], -1.0, 0.0, radius),
    };
    (1..=SWEEP_POINTS).map(move |k| {
        let d = reach * 0.5 * k as f64 / (SWEEP_POINTS as f64 + 1.0);
        (x0 + dx * d, y0 + dy * d, d)
    })
}

fn certify_global(bar: &mut GlobalBarrier) -> Result<(), BarrierError> {
    let cap = bar.cap_value();
    let level = bar
        .constants
        .m_level_original(bar.rescale_eps, bar.alpha);
    bar.cap_margin =
        bar.lambda * pow_sq(cap * cap, 0.5 * (1.0 + bar.alpha)) - level;
    if bar.cap_margin < 0.0 {
        return Err(BarrierError::CertificationFailed {
            what: "constant branch below level".into(),
            margin: bar.cap_margin,
            at: f64::INFINITY,
        });
    }
    let cross = bar.crossover_distance();
    let mut worst = f64::INFINITY;
    let mut worst_d = 0.0;
    for (x, y, d) in sweep_line(&bar.domain) {
        if d >= cross {
            continue;
        }
        let (m, branch) = bar
            .residual_margin_at(x, y)
            .expect("sweep stays inside the domain");
        debug_assert_eq!(branch, BarrierBranch::Log);
        if m < worst {
            worst = m;
            worst_d = d;
        }
    }
    // points arbitrarily close to the interface, one-sided from the log side
    for frac in [0.9, 0.99, 0.999, 0.9999] {
        let d = cross * frac;
        if let Some((x, y)) = point_at_distance(&bar.domain, d) {
            let (m, _) = bar.residual_margin_at(x, y).expect("inside");
            if m < worst {
                worst = m;
                worst_d = d;
            }
        }
    }
    bar.worst_log_margin = worst;
    if worst < 0.0 {
        return Err(BarrierError::CertificationFailed {
            what: "log branch residual below level".into(),
            margin: worst,
            at: worst_d,
        });
    }
    Ok(())
}

fn point_at_distance(domain: &Domain, d: f64) -> Option<(f64, f64)> {
    match *domain.kind() {
        DomainKind::Interval { lo, hi } => (d < hi - lo).then_some((lo + d, 0.0)),
        DomainKind::Rectangle { lo, hi } => {
            (d < hi[0] - lo[0]).then_some((lo[0] + d, 0.5 * (lo[1] + hi[1])))
        }
        DomainKind::Ball { center, radius } => {
            (d < radius).then_some((center[0] + radius - d, center[1]))
        }
    }
}

/// Global barrier for the requested level. Dispatches to the rescaled
/// construction at the critical exponent `beta = alpha + 2` with nonzero b.
pub fn global_barrier(
    prob: &ProblemSpec,
    m_level: f64,
    side: BarrierSide,
) -> Result<GlobalBarrier, BarrierError> {
    if prob.profile().beta_is_critical() && prob.b_sup() > 0.0 {
        let (_, bar) = critical_beta_rescale_side(prob, m_level, side)?;
        return Ok(bar);
    }
    let constants = barrier_constants(prob, m_level)?;
    let profile = prob.profile();
    let mut bar = GlobalBarrier {
        constants,
        side,
        scale: 1.0,
        rescale_eps: None,
        domain: *prob.domain(),
        pair: prob.pair(),
        alpha: profile.alpha(),
        beta: profile.beta(),
        lambda: profile.lambda(),
        b_sup: prob.b_sup(),
        worst_log_margin: f64::NAN,
        cap_margin: f64::NAN,
    };
    certify_global(&mut bar)?;
    Ok(bar)
}

/// Construction at the critical exponent: the barrier is `eps * phi` where
/// `phi` is built for the modified problem with first-order bound
/// `eps |b| = a/(4 safety)` at level `m/eps^(1+alpha)`. All three terms are
/// homogeneous, so the scaled function certifies at the original level for
/// the original |b|; the sweep below re-verifies that directly rather than
/// trusting the homogeneity argument.
pub fn critical_beta_rescale(
    prob: &ProblemSpec,
    m_level: f64,
) -> Result<(f64, GlobalBarrier), BarrierError> {
    critical_beta_rescale_side(prob, m_level, BarrierSide::Super)
}

fn critical_beta_rescale_side(
    prob: &ProblemSpec,
    m_level: f64,
    side: BarrierSide,
) -> Result<(f64, GlobalBarrier), BarrierError> {
    if m_level.is_nan() || m_level <= 0.0 {
        return Err(BarrierError::NonpositiveLevel { level: m_level });
    }
    check_domination(prob)?;
    let profile = prob.profile();
    let (alpha, beta, lambda) = (profile.alpha(), profile.beta(), profile.lambda());
    if prob.b_sup() == 0.0 {
        // no first-order term: the plain construction applies even at the
        // critical exponent
        let bar = global_barrier(prob, m_level, side)?;
        return Ok((1.0, bar));
    }
    let a = prob.pair().a();
    let eps = a / (4.0 * SAFETY * prob.b_sup());
    let b_mod = prob.b_sup() * eps;
    let m_mod = m_level / pow_sq(eps * eps, 0.5 * (1.0 + alpha));
    let dom = prob.domain();
    let constants = constants_for(
        lambda,
        alpha,
        beta,
        prob.pair(),
        dom.ambient_dim(),
        dom.hess_bound(),
        dom.collar_width(),
        b_mod,
        m_mod,
    );
    let mut bar = GlobalBarrier {
        constants,
        side,
        scale: eps,
        rescale_eps: Some(eps),
        domain: *dom,
        pair: prob.pair(),
        alpha,
        beta,
        lambda,
        b_sup: prob.b_sup(),
        worst_log_margin: f64::NAN,
        cap_margin: f64::NAN,
    };
    certify_global(&mut bar)?;
    Ok((eps, bar))
}

/// Exponential wall barrier for the Hopf inequality, living on the annulus
/// between `r/2` and `r` around a center: `v(rad) = delta (e^(-c rad) - e^(-c r))`,
/// positive inside, vanishing on the outer sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopfBarrier {
    pub center: [f64; 2],
    pub r: f64,
    pub delta: f64,
    pub c: f64,
    pub n: u32,
    worst_margin: f64,
}

/// The slope constant the structural inequalities alone ask for (before
/// sweep escalation): `c > 2 (N-1) A / (r a)` against curvature, and for
/// subcritical beta `(a/2) c^(2+alpha-beta) > |b|`.
pub fn hopf_c_from_invariants(
    n: u32,
    r: f64,
    pair: EllipticityPair,
    alpha: f64,
    beta: f64,
    b_sup: f64,
) -> f64 {
    let curvature = 2.0 * (n.saturating_sub(1)) as f64 * pair.big_a() / (r * pair.a());
    let first_order = if b_sup > 0.0 && beta < alpha + 2.0 {
        (2.0 * b_sup / pair.a()).powf(1.0 / (2.0 + alpha - beta))
    } else {
        0.0
    };
    SAFETY * curvature.max(first_order).max(1.0 / r)
}

impl HopfBarrier {
    /// Barrier on an explicit crown; errs if the outer ball leaves the domain.
    pub fn on_crown(
        dom: &Domain,
        prob: &ProblemSpec,
        delta_cap: f64,
        center: [f64; 2],
        r: f64,
    ) -> Result<Self, BarrierError> {
        if !crown_fits(dom, center, r) {
            return Err(BarrierError::CrownOutsideDomain { cx: center[0], cy: center[1], r });
        }
        let profile = prob.profile();
        let (alpha, beta) = (profile.alpha(), profile.beta());
        let pair = prob.pair();
        let b_sup = prob.b_sup();
        let n = dom.ambient_dim();
        let delta = if profile.beta_is_critical() && b_sup > 0.0 {
            // invariant delta^(1+alpha-beta) (a/2) > |b| reads (a/2)/delta > |b|
            delta_cap.min(0.9 * pair.a() / (2.0 * b_sup))
        } else {
            delta_cap
        };
        let mut c = hopf_c_from_invariants(n, r, pair, alpha, beta, b_sup);
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..40 {
            match hopf_sweep(c, delta, r, n, pair, alpha, beta, b_sup) {
                Ok(margin) => {
                    return Ok(Self { center, r, delta, c, n, worst_margin: margin });
                }
                Err(m) => {
                    worst = m;
                    c *= 1.25;
                }
            }
        }
        Err(BarrierError::CertificationFailed {
            what: "wall subsolution sweep never became negative (small slopes with beta < 1 + alpha cannot be escalated away)".into(),
            margin: worst,
            at: r,
        })
    }

    /// Auto-geometry: centered at the domain center with the inscribed
    /// radius, so the outer sphere touches the boundary.
    pub fn auto(dom: &Domain, prob: &ProblemSpec, delta_cap: f64) -> Result<Self, BarrierError> {
        Self::on_crown(dom, prob, delta_cap, dom.center(), dom.inradius())
    }

    #[inline]
    pub fn inner_radius(&self) -> f64 {
        0.5 * self.r
    }

    pub fn value(&self, rad: f64) -> f64 {
        self.delta * ((-self.c * rad).exp() - (-self.c * self.r).exp())
    }

    pub fn slope(&self, rad: f64) -> f64 {
        -self.delta * self.c * (-self.c * rad).exp()
    }

    /// Certified margin: the most positive (worst) value of the wall
    /// operator over the sweep; negative means certified.
    #[inline]
    pub fn worst_margin(&self) -> f64 {
        self.worst_margin
    }

    /// Boundary slope prediction `delta c r e^(-c r)` used as the Hopf
    /// quotient yardstick.
    pub fn prediction(&self) -> f64 {
        self.delta * self.c * self.r * (-self.c * self.r).exp()
    }

    /// Quotients at boundary zeros are compared against half the prediction.
    pub fn threshold(&self) -> f64 {
        0.5 * self.prediction()
    }
}

fn crown_fits(dom: &Domain, center: [f64; 2], r: f64) -> bool {
    if r.is_nan() || r <= 0.0 {
        return false;
    }
    let tol = 1e-12 * (1.0 + dom.inradius());
    match *dom.kind() {
        DomainKind::Interval { lo, hi } => center[0] - r >= lo - tol && center[0] + r <= hi + tol,
        DomainKind::Rectangle { lo, hi } => {
            center[0] - r >= lo[0] - tol
                && center[0] + r <= hi[0] + tol
                && center[1] - r >= lo[1] - tol
                && center[1] + r <= hi[1] + tol
        }
        DomainKind::Ball { center: c0, radius } => {
            f64::hypot(center[0] - c0[0], center[1] - c0[1]) + r <= radius + tol
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn hopf_sweep(
    c: f64,
    delta: f64,
    r: f64,
    n: u32,
    pair: EllipticityPair,
    alpha: f64,
    beta: f64,
    b_sup: f64,
) -> Result<f64, f64> {
    // subsolution check: -|v'|^alpha (a v'' + A (n-1) v'/rad) + |b| |v'|^beta < 0
    // on [r/2, r]; returns the worst (largest) value, Ok when negative
    let mut worst = f64::NEG_INFINITY;
    for k in 0..=SWEEP_POINTS {
        let rad = 0.5 * r + 0.5 * r * k as f64 / SWEEP_POINTS as f64;
        let e = (-c * rad).exp();
        let v1 = -delta * c * e;
        let v2 = delta * c * c * e;
        let w = pow_sq(v1 * v1, 0.5 * alpha);
        let fpart = pair.a() * v2 + pair.big_a() * (n.saturating_sub(1)) as f64 * v1 / rad;
        let val = -w * fpart + b_sup * pow_sq(v1 * v1, 0.5 * beta);
        worst = worst.max(val);
    }
    if worst < 0.0 {
        Ok(worst)
    } else {
        Err(worst)
    }
}

/// Wall-neighborhood supersolution for boundary continuity estimates, on
/// the model half-ball `{|x| <= 1, d >= 0}` with the wall on `d = 0`:
///
/// ```text
///   w = log(1 + C d) + psi + ((|x| - r)_+)^3 / (1 - r)^3,   C = 2/delta
/// ```
///
/// with `psi` the problem's affine boundary datum. Certified on the collar
/// `{d < delta}`: residual sweep of the forced equation at |f| level, the
/// wall dominance `w >= log 3 >= u_bound` on `{d = delta}`, and the slope
/// floor `|Dw| >= 1/(3 delta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryBarrier {
    pub r: f64,
    pub delta: f64,
    pub c_big: f64,
    /// affine datum coefficients (constant, slope in s, slope in d)
    pub psi: [f64; 3],
    pub u_bound: f64,
    worst_margin: f64,
    grad_floor: f64,
}

pub fn boundary_barrier(
    prob: &ProblemSpec,
    r: f64,
    delta: f64,
    u_bound: f64,
) -> Result<BoundaryBarrier, BarrierError> {
    assert!(0.0 < r && r < 1.0, "r must lie in (0, 1)");
    check_domination(prob)?;
    let max_delta = (1.0 - r) / 9.0;
    if !(delta > 0.0 && delta < max_delta) {
        return Err(BarrierError::DeltaTooLarge { delta, max: max_delta });
    }
    let profile = prob.profile();
    let (alpha, beta) = (profile.alpha(), profile.beta());
    let a = prob.pair().a();
    let b_sup = prob.b_sup();
    if profile.beta_is_critical() && b_sup > 0.0 {
        // feasibility from the critical-case smallness condition
        // b < a 2^(beta - 2 alpha - 4) = a 2^(-alpha - 2) at beta = alpha + 2
        let cap = a * (2.0f64).powf(-alpha - 2.0) / SAFETY;
        if b_sup >= cap {
            return Err(BarrierError::CertificationFailed {
                what: format!(
                    "critical-exponent wall barrier needs |b| < {cap}, got {b_sup}"
                ),
                margin: cap - b_sup,
                at: 0.0,
            });
        }
    }
    let psi = affine_datum(prob)?;
    let c_big = 2.0 / delta;

    // wall dominance: log(1 + C delta) = log 3 must clear the stated bound
    let log3 = 3.0f64.ln();
    if log3 < u_bound {
        return Err(BarrierError::CertificationFailed {
            what: format!("wall value log 3 cannot dominate u_bound = {u_bound}"),
            margin: log3 - u_bound,
            at: delta,
        });
    }
    // the affine part must not eat the log slope
    let psi_slope = f64::hypot(psi[1], psi[2]);
    if 1.0 / (3.0 * delta) <= 2.0 * psi_slope {
        return Err(BarrierError::CertificationFailed {
            what: format!("affine datum slope {psi_slope} too steep for delta = {delta}"),
            margin: 1.0 / (3.0 * delta) - 2.0 * psi_slope,
            at: delta,
        });
    }

    let n = prob.domain().ambient_dim();
    let pair = prob.pair();
    let f_sup = prob.f_sup();
    let mut worst = f64::INFINITY;
    let mut worst_at = 0.0;
    let mut grad_floor = f64::INFINITY;
    // sweep the collar: d in (0, delta), s in (-1, 1) model coordinates
    let s_samples: &[f64] = if n == 1 { &[0.0] } else { &[-0.95, -0.6, -0.3, 0.0, 0.3, 0.6, 0.95] };
    for &s in s_samples {
        for k in 1..=SWEEP_POINTS {
            let d = delta * k as f64 / (SWEEP_POINTS as f64 + 1.0);
            if s * s + d * d >= 1.0 {
                continue;
            }
            let (grad, hess) = wall_derivatives(c_big, r, psi, s, d, n);
            let gnorm = f64::hypot(grad[0], grad[1]);
            grad_floor = grad_floor.min(gnorm);
            let (p, m) = if n == 1 {
                (
                    GradientVector::one_d(grad[1], 0.0).expect("finite"),
                    SymMatrix::one_d(hess.2),
                )
            } else {
                (
                    GradientVector::two_d(grad[0], grad[1], 0.0).expect("finite"),
                    SymMatrix::sym_2d(hess.0, hess.1, hess.2),
                )
            };
            let w = gradient_weight(&p, alpha).expect("positive slope");
            let q = -w * pucci_plus(&m, pair) - b_sup * pow_sq(p.norm_sq(), 0.5 * beta);
            let margin = q - f_sup;
            if margin < worst {
                worst = margin;
                worst_at = d;
            }
        }
    }
    if worst < 0.0 {
        return Err(BarrierError::CertificationFailed {
            what: "wall supersolution sweep fell below the forcing level".into(),
            margin: worst,
            at: worst_at,
        });
    }
    if grad_floor < 1.0 / (3.0 * delta) {
        return Err(BarrierError::CertificationFailed {
            what: "slope floor 1/(3 delta) violated on the collar".into(),
            margin: grad_floor - 1.0 / (3.0 * delta),
            at: delta,
        });
    }
    Ok(BoundaryBarrier { r, delta, c_big, psi, u_bound, worst_margin: worst, grad_floor })
}

// gradient and Hessian of w in model coordinates (s tangential, d normal)
fn wall_derivatives(
    c: f64,
    r: f64,
    psi: [f64; 3],
    s: f64,
    d: f64,
    n: u32,
) -> ([f64; 2], (f64, f64, f64)) {
    let w0 = c / (1.0 + c * d);
    let mut gs = psi[1];
    let mut gd = w0 + psi[2];
    let mut hss = 0.0;
    let mut hsd = 0.0;
    let hdd = -w0 * w0;
    let rho = f64::hypot(s, d);
    if rho > r {
        let q = (rho - r) / (1.0 - r);
        let coef = 3.0 * q * q / (1.0 - r);
        let (ns, nd) = (s / rho, d / rho);
        gs += coef * ns;
        gd += coef * nd;
        let coef2 = 6.0 * q / ((1.0 - r) * (1.0 - r));
        let tang = coef / rho;
        if n >= 2 {
            hss += coef2 * ns * ns + tang * (1.0 - ns * ns);
            hsd += coef2 * ns * nd - tang * ns * nd;
        }
        // dd entry of the cubic
        return (
            [gs, gd],
            (hss, hsd, hdd + coef2 * nd * nd + tang * (1.0 - nd * nd)),
        );
    }
    ([gs, gd], (hss, hsd, hdd))
}

impl BoundaryBarrier {
    /// Value in model coordinates (s tangential along the wall, d normal).
    pub fn value(&self, s: f64, d: f64) -> f64 {
        let rho = f64::hypot(s, d);
        let cubic = if rho > self.r {
            let q = (rho - self.r) / (1.0 - self.r);
            q * q * q
        } else {
            0.0
        };
        (1.0 + self.c_big * d).ln() + self.psi[0] + self.psi[1] * s + self.psi[2] * d + cubic
    }

    /// Worst certified supersolution margin over the collar sweep.
    #[inline]
    pub fn worst_margin(&self) -> f64 {
        self.worst_margin
    }

    /// Smallest gradient norm seen on the collar sweep.
    #[inline]
    pub fn grad_floor(&self) -> f64 {
        self.grad_floor
    }
}

fn affine_datum(prob: &ProblemSpec) -> Result<[f64; 3], BarrierError> {
    // the datum must be affine: second differences vanish on samples
    let phi = prob.phi_expr();
    let two_d = prob.domain().dim() == 2;
    let h = 0.125;
    let mut max_dev: f64 = 0.0;
    for i in -3..=3 {
        let x = i as f64 * 0.25;
        for j in -3..=3i32 {
            if !two_d && j != 0 {
                continue;
            }
            let y = j as f64 * 0.25;
            let dxx = phi.eval(x + h, y) - 2.0 * phi.eval(x, y) + phi.eval(x - h, y);
            max_dev = max_dev.max(dxx.abs());
            if two_d {
                let dyy = phi.eval(x, y + h) - 2.0 * phi.eval(x, y) + phi.eval(x, y - h);
                let dxy = phi.eval(x + h, y + h) - phi.eval(x + h, y - h)
                    - phi.eval(x - h, y + h)
                    + phi.eval(x - h, y - h);
                max_dev = max_dev.max(dyy.abs()).max(dxy.abs() * 0.25);
            }
        }
    }
    if max_dev > 1e-9 {
        return Err(BarrierError::NonAffineBoundaryDatum { max_dev });
    }
    let p0 = phi.eval(0.0, 0.0);
    let px = phi.eval(0.5, 0.0) - phi.eval(-0.5, 0.0);
    if !two_d {
        // one ambient coordinate: it runs along the wall normal
        return Ok([p0, 0.0, px]);
    }
    let py = phi.eval(0.0, 0.5) - phi.eval(0.0, -0.5);
    Ok([p0, px, py])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::operator::{ExponentProfile, OperatorVariant};

    fn problem(
        alpha: f64,
        beta: f64,
        lambda: f64,
        a: f64,
        big_a: f64,
        b: &str,
        f: &str,
    ) -> ProblemSpec {
        let dom = Domain::interval(-1.0, 1.0).unwrap();
        ProblemSpec::new(
            dom,
            ExponentProfile::new(alpha, beta, lambda).unwrap(),
            EllipticityPair::new(a, big_a).unwrap(),
            OperatorVariant::PucciPlus,
            Expr::parse(b).unwrap(),
            Expr::parse(f).unwrap(),
            Expr::parse("0").unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn minimal_kappa_matches_closed_form() {
        // log(1+k) = 1 and log(1+k)^2 = 4 have closed-form roots
        let k1 = minimal_kappa(1.0, 0.0, 1.0);
        assert!((k1 - (std::f64::consts::E - 1.0)).abs() < 1e-9, "got {k1}");
        let k2 = minimal_kappa(1.0, 1.0, 4.0);
        assert!((k2 - (std::f64::consts::E.powi(2) - 1.0)).abs() < 1e-8, "got {k2}");
    }

    #[test]
    fn c_bounds_worked_example() {
        // alpha=0, beta=1, a=1, A=2, N=1, C1=0, |b|=0.5, kappa=1.8,
        // M=1, delta0=1: reach 3.6, curvature 0, first-order 9.2, level 9.2
        let pair = EllipticityPair::new(1.0, 2.0).unwrap();
        let b = c_lower_bounds(1.8, 1.0, pair, 1, 0.0, 0.5, 1.0, 0.0, 1.0);
        assert!((b[0] - 3.6).abs() < 1e-12);
        assert_eq!(b[1], 0.0);
        assert!((b[2] - 9.2).abs() < 1e-12);
        assert!((b[3] - 9.2).abs() < 1e-12);
        let c = SAFETY * b.iter().fold(0.0f64, |m, &x| m.max(x));
        assert!((c - SAFETY * 9.2).abs() < 1e-12);
    }

    #[test]
    fn global_barrier_basic_certificates() {
        let prob = problem(0.0, 1.0, 1.0, 1.0, 2.0, "0.5", "0");
        let bar = global_barrier(&prob, 1.0, BarrierSide::Super).unwrap();
        assert!(bar.worst_log_margin() >= 0.0);
        assert!(bar.cap_margin() >= 0.0);
        // vanishes on the boundary
        assert!(bar.value_at(1.0, 0.0).unwrap().abs() < 1e-12);
        assert!(bar.value_at(-1.0, 0.0).unwrap().abs() < 1e-12);
        // positive inside, capped at the plateau value
        let mid = bar.value_at(0.0, 0.0).unwrap();
        assert!(mid > 0.0 && (mid - bar.cap_value()).abs() < 1e-12);
        // margin of the log branch is comfortably positive near the wall
        let (m, br) = bar.residual_margin_at(0.99, 0.0).unwrap();
        assert_eq!(br, BarrierBranch::Log);
        assert!(m > 0.0);
    }

    #[test]
    fn sub_side_is_negated_super() {
        let prob = problem(0.5, 1.0, 2.0, 1.0, 2.0, "1", "0");
        let sup = global_barrier(&prob, 2.0, BarrierSide::Super).unwrap();
        let sub = global_barrier(&prob, 2.0, BarrierSide::Sub).unwrap();
        for x in [-0.97, -0.5, 0.0, 0.33, 0.9] {
            let vs = sup.value_at(x, 0.0).unwrap();
            let vb = sub.value_at(x, 0.0).unwrap();
            assert!((vs + vb).abs() < 1e-14);
        }
    }

    #[test]
    fn cap_branch_margin_is_the_constant_rule() {
        let prob = problem(0.0, 1.0, 1.0, 1.0, 2.0, "0.5", "0");
        let bar = global_barrier(&prob, 1.0, BarrierSide::Super).unwrap();
        // at the center the cap is active; margin = lambda cap - level
        let (m, br) = bar.residual_margin_at(0.0, 0.0).unwrap();
        assert_eq!(br, BarrierBranch::Cap);
        assert!((m - (bar.cap_value() - 1.0)).abs() < 1e-12);
        // kappa has safety over the minimal root, so the margin is positive
        assert!(m > 0.0);
    }

    #[test]
    fn barrier_expr_matches_value() {
        let prob = problem(0.0, 1.0, 1.0, 1.0, 2.0, "0.5", "0");
        let bar = global_barrier(&prob, 1.0, BarrierSide::Super).unwrap();
        let e = bar.expr();
        for x in [-0.99, -0.7, 0.0, 0.42, 0.9999] {
            let ev = e.eval_1d(x);
            let bv = bar.value_at(x, 0.0).unwrap();
            assert!((ev - bv).abs() < 1e-12, "at {x}: {ev} vs {bv}");
        }
    }

    #[test]
    fn critical_beta_requires_rescale_in_plain_constants() {
        let prob = problem(0.0, 2.0, 1.0, 1.0, 2.0, "2", "0");
        assert!(matches!(
            barrier_constants(&prob, 1.0),
            Err(BarrierError::CriticalBeta { .. })
        ));
        // but the zero-b critical case falls through
        let prob0 = problem(0.0, 2.0, 1.0, 1.0, 2.0, "0", "0");
        assert!(barrier_constants(&prob0, 1.0).is_ok());
    }

    #[test]
    fn critical_rescale_constant_and_certificate() {
        let prob = problem(0.0, 2.0, 1.0, 1.0, 2.0, "2", "0");
        let (eps, bar) = critical_beta_rescale(&prob, 1.0).unwrap();
        // eps = a/(4 safety |b|): the safety-free value is 1/8
        assert!((eps - 1.0 / (4.0 * SAFETY * 2.0)).abs() < 1e-15);
        assert!((eps * SAFETY - 0.125).abs() < 1e-12);
        assert_eq!(bar.rescale_eps(), Some(eps));
        // the scaled barrier certifies at the original level with |b| = 2
        assert!(bar.worst_log_margin() >= 0.0);
        assert!(bar.cap_margin() >= 0.0);
        assert!(bar.value_at(1.0, 0.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn global_barrier_dispatches_critical() {
        let prob = problem(-0.3, 1.7, 1.5, 1.0, 2.0, "1 + x/2", "0");
        let bar = global_barrier(&prob, 0.7, BarrierSide::Super).unwrap();
        assert!(bar.rescale_eps().is_some());
        assert!(bar.worst_log_margin() >= 0.0);
    }

    #[test]
    fn trace_variant_needs_bracketing_pair() {
        let dom = Domain::interval(-1.0, 1.0).unwrap();
        let prob = ProblemSpec::new(
            dom,
            ExponentProfile::new(0.0, 1.0, 1.0).unwrap(),
            EllipticityPair::new(2.0, 3.0).unwrap(),
            OperatorVariant::Trace,
            Expr::parse("0").unwrap(),
            Expr::parse("0").unwrap(),
            Expr::parse("0").unwrap(),
        )
        .unwrap();
        assert!(matches!(
            global_barrier(&prob, 1.0, BarrierSide::Super),
            Err(BarrierError::VariantNotDominated { .. })
        ));
    }

    #[test]
    fn barrier_on_ball_certifies_with_curvature() {
        let dom = Domain::ball([0.0, 0.0], 1.0).unwrap();
        let prob = ProblemSpec::new(
            dom,
            ExponentProfile::new(0.0, 1.0, 1.0).unwrap(),
            EllipticityPair::new(1.0, 2.0).unwrap(),
            OperatorVariant::PucciPlus,
            Expr::parse("1").unwrap(),
            Expr::parse("0").unwrap(),
            Expr::parse("0").unwrap(),
        )
        .unwrap();
        let bar = global_barrier(&prob, 1.0, BarrierSide::Super).unwrap();
        assert!(bar.worst_log_margin() >= 0.0);
        // boundary zero in Cartesian coordinates
        assert!(bar.value_at(0.0, 1.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn hopf_invariant_slope_worked_example() {
        // N=2, r=1, A=2, a=1: curvature bound 4, with safety 4.4
        let pair = EllipticityPair::new(1.0, 2.0).unwrap();
        let c = hopf_c_from_invariants(2, 1.0, pair, 0.0, 1.0, 1.0);
        assert!((c - 4.4).abs() < 1e-12, "got {c}");
    }

    #[test]
    fn hopf_barrier_certifies_after_escalation() {
        let dom = Domain::ball([0.0, 0.0], 2.0).unwrap();
        let prob = ProblemSpec::new(
            dom,
            ExponentProfile::new(0.0, 1.0, 1.0).unwrap(),
            EllipticityPair::new(1.0, 2.0).unwrap(),
            OperatorVariant::PucciPlus,
            Expr::parse("1").unwrap(),
            Expr::parse("1").unwrap(),
            Expr::parse("0").unwrap(),
        )
        .unwrap();
        let hb = HopfBarrier::on_crown(&dom, &prob, 0.5, [0.0, 0.0], 1.0).unwrap();
        // the invariant slope 4.4 is not enough at inner radii; the
        // certified slope must exceed it
        assert!(hb.c > 4.4);
        assert!(hb.worst_margin() < 0.0);
        // sign pattern of the wall profile
        assert!(hb.value(1.0).abs() < 1e-15);
        assert!(hb.value(0.6) > 0.0);
        assert!(hb.slope(1.0) < 0.0);
        assert!((hb.slope(1.0).abs() - hb.delta * hb.c * (-hb.c).exp()).abs() < 1e-15);
        // prediction matches its formula
        assert!((hb.prediction() - hb.delta * hb.c * 1.0 * (-hb.c * 1.0).exp()).abs() < 1e-15);
        assert_eq!(hb.threshold(), 0.5 * hb.prediction());
    }

    #[test]
    fn hopf_auto_geometry_on_interval() {
        let dom = Domain::interval(-1.0, 1.0).unwrap();
        let prob = ProblemSpec::new(
            dom,
            ExponentProfile::new(0.0, 1.0, 1.0).unwrap(),
            EllipticityPair::new(1.0, 2.0).unwrap(),
            OperatorVariant::PucciPlus,
            Expr::parse("1").unwrap(),
            Expr::parse("1").unwrap(),
            Expr::parse("0").unwrap(),
        )
        .unwrap();
        let hb = HopfBarrier::auto(&dom, &prob, 0.5).unwrap();
        assert_eq!(hb.r, 1.0);
        assert_eq!(hb.n, 1);
        assert!(hb.worst_margin() < 0.0);
    }

    #[test]
    fn hopf_crown_must_fit() {
        let dom = Domain::ball([0.0, 0.0], 1.0).unwrap();
        let prob = ProblemSpec::new(
            dom,
            ExponentProfile::new(0.0, 1.0, 1.0).unwrap(),
            EllipticityPair::new(1.0, 2.0).unwrap(),
            OperatorVariant::PucciPlus,
            Expr::parse("0").unwrap(),
            Expr::parse("0").unwrap(),
            Expr::parse("0").unwrap(),
        )
        .unwrap();
        assert!(matches!(
            HopfBarrier::on_crown(&dom, &prob, 0.5, [0.5, 0.0], 1.0),
            Err(BarrierError::CrownOutsideDomain { .. })
        ));
    }

    #[test]
    fn boundary_barrier_certificates() {
        let prob = problem(0.0, 1.0, 1.0, 1.0, 2.0, "0.5", "1");
        let bb = boundary_barrier(&prob, 0.5, 0.05, 1.0).unwrap();
        assert_eq!(bb.c_big, 40.0);
        // wall dominance at d = delta: log(1 + C delta) = log 3
        assert!((bb.value(0.0, bb.delta) - 3.0f64.ln()).abs() < 1e-12);
        assert!(bb.value(0.0, bb.delta) >= 1.0);
        assert!(bb.worst_margin() >= 0.0);
        assert!(bb.grad_floor() >= 1.0 / (3.0 * bb.delta));
        // value on the wall away from the cubic zone is just psi = 0
        assert_eq!(bb.value(0.2, 0.0), 0.0);
        // cubic kicks in past |x| = r
        assert!(bb.value(0.9, 0.0) > 0.0);
    }

    #[test]
    fn boundary_barrier_delta_gate() {
        let prob = problem(0.0, 1.0, 1.0, 1.0, 2.0, "0", "0");
        assert!(matches!(
            boundary_barrier(&prob, 0.5, 0.06, 1.0),
            Err(BarrierError::DeltaTooLarge { .. })
        ));
    }

    #[test]
    fn boundary_barrier_rejects_curved_datum() {
        let dom = Domain::interval(-1.0, 1.0).unwrap();
        let prob = ProblemSpec::new(
            dom,
            ExponentProfile::new(0.0, 1.0, 1.0).unwrap(),
            EllipticityPair::new(1.0, 2.0).unwrap(),
            OperatorVariant::PucciPlus,
            Expr::parse("0").unwrap(),
            Expr::parse("0").unwrap(),
            Expr::parse("x^2").unwrap(),
        )
        .unwrap();
        assert!(matches!(
            boundary_barrier(&prob, 0.5, 0.05, 1.0),
            Err(BarrierError::NonAffineBoundaryDatum { .. })
        ));
    }

    #[test]
    fn boundary_barrier_accepts_affine_datum() {
        let dom = Domain::interval(-1.0, 1.0).unwrap();
        let prob = ProblemSpec::new(
            dom,
            ExponentProfile::new(0.0, 1.0, 1.0).unwrap(),
            EllipticityPair::new(1.0, 2.0).unwrap(),
            OperatorVariant::PucciPlus,
            Expr::parse("0").unwrap(),
            Expr::parse("1").unwrap(),
            Expr::parse("0.3 + 0.5*x").unwrap(),
        )
        .unwrap();
        let bb = boundary_barrier(&prob, 0.5, 0.05, 1.0).unwrap();
        assert!((bb.psi[0] - 0.3).abs() < 1e-12);
        assert_eq!(bb.psi[1], 0.0);
        assert!((bb.psi[2] - 0.5).abs() < 1e-12);
    }
}
