//! Problem data: the equation
//!
//! ```text
//!     -F(Du, D^2 u) + b(x) |Du|^beta + lambda |u|^alpha u = f(x)
//! ```
//!
//! bundled with its domain and validated once at construction. Coefficient
//! bounds that the barrier and scheme constants need (|b|, |f| suprema, a
//! Lipschitz bound for b) are estimated here by dense sampling of the
//! closed-form fields unless the caller supplies sharper ones.

use crate::domain::{Domain, DomainKind};
use crate::expr::{differentiate, Axis, Expr};
use crate::operator::{
    gradient_weight, operator_value, pow_sq, EllipticityPair, ExponentProfile, GradientVector,
    OperatorError, OperatorVariant, SymMatrix, ZeroOrderTerm,
};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("lambda must be strictly positive for the solver and comparison paths, got {lambda}")]
    LambdaNotPositive { lambda: f64 },
    #[error("field {field} uses variable y but the domain is one dimensional in {what}")]
    FieldUsesY { field: &'static str, what: &'static str },
    #[error("field {field} is unbounded or undefined on the domain sample sweep (at {x}, {y})")]
    UnboundedCoefficient { field: &'static str, x: f64, y: f64 },
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// A coefficient field with its sampled bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient {
    pub expr: Expr,
    pub sup: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    domain: Domain,
    profile: ExponentProfile,
    pair: EllipticityPair,
    variant: OperatorVariant,
    b: Coefficient,
    f: Coefficient,
    phi: Expr,
    phi_sup: f64,
    b_lipschitz: f64,
}

const SWEEP_1D: usize = 4097;
const SWEEP_2D: usize = 193;

impl ProblemSpec {
    pub fn new(
        domain: Domain,
        profile: ExponentProfile,
        pair: EllipticityPair,
        variant: OperatorVariant,
        b_field: Expr,
        f_field: Expr,
        phi_field: Expr,
    ) -> Result<Self, ProblemError> {
        if profile.lambda() <= 0.0 {
            return Err(ProblemError::LambdaNotPositive { lambda: profile.lambda() });
        }
        let radial = matches!(domain.kind(), DomainKind::Ball { .. });
        if domain.dim() == 1 || radial {
            let what = if radial { "the radial coordinate" } else { "x" };
            for (name, e) in [("b", &b_field), ("f", &f_field), ("phi", &phi_field)] {
                if e.uses_axis(Axis::Y) {
                    return Err(ProblemError::FieldUsesY { field: name, what });
                }
            }
        }
        let b_sup = sample_sup(&domain, &b_field, "b")?;
        let f_sup = sample_sup(&domain, &f_field, "f")?;
        let phi_sup = sample_sup(&domain, &phi_field, "phi")?;
        let b_lipschitz = sample_grad_sup(&domain, &b_field, "b")?;
        Ok(Self {
            domain,
            profile,
            pair,
            variant,
            b: Coefficient { expr: b_field, sup: b_sup },
            f: Coefficient { expr: f_field, sup: f_sup },
            phi: phi_field,
            phi_sup,
            b_lipschitz,
        })
    }

    /// Replace the sampled Lipschitz estimate for b with a known bound.
    pub fn with_b_lipschitz(mut self, bound: f64) -> Self {
        self.b_lipschitz = bound;
        self
    }

    #[inline]
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    #[inline]
    pub fn profile(&self) -> ExponentProfile {
        self.profile
    }

    #[inline]
    pub fn pair(&self) -> EllipticityPair {
        self.pair
    }

    #[inline]
    pub fn variant(&self) -> OperatorVariant {
        self.variant
    }

    #[inline]
    pub fn b_expr(&self) -> &Expr {
        &self.b.expr
    }

    #[inline]
    pub fn f_expr(&self) -> &Expr {
        &self.f.expr
    }

    #[inline]
    pub fn phi_expr(&self) -> &Expr {
        &self.phi
    }

    /// Sampled sup of |b| over the domain.
    #[inline]
    pub fn b_sup(&self) -> f64 {
        self.b.sup
    }

    /// Sampled sup of |f| over the domain.
    #[inline]
    pub fn f_sup(&self) -> f64 {
        self.f.sup
    }

    #[inline]
    pub fn phi_sup(&self) -> f64 {
        self.phi_sup
    }

    /// Lipschitz bound for b (sampled sup of |grad b| unless overridden).
    #[inline]
    pub fn b_lipschitz(&self) -> f64 {
        self.b_lipschitz
    }

    pub fn zero_order(&self) -> ZeroOrderTerm {
        ZeroOrderTerm::new(self.profile.lambda(), self.profile.alpha())
            .expect("validated profile")
    }

    #[inline]
    pub fn b_at(&self, x: f64, y: f64) -> f64 {
        self.b.expr.eval(x, y)
    }

    #[inline]
    pub fn f_at(&self, x: f64, y: f64) -> f64 {
        self.f.expr.eval(x, y)
    }

    #[inline]
    pub fn phi_at(&self, x: f64, y: f64) -> f64 {
        self.phi.eval(x, y)
    }

    /// Pointwise residual
    /// `-F(p, M) + b(x) (|p|^2 + eps^2)^(beta/2) + lambda |u|^alpha u - f(x)`.
    ///
    /// Sign convention: `<= 0` is the subsolution inequality, `>= 0` the
    /// supersolution one. The singular case (alpha < 0, |p| = 0, eps = 0)
    /// is an error; such points are governed by the locally-constant test
    /// branch, not by a value of F.
    pub fn residual_at(
        &self,
        x: f64,
        y: f64,
        u_val: f64,
        p: &GradientVector,
        m: &SymMatrix,
    ) -> Result<f64, ProblemError> {
        let alpha = self.profile.alpha();
        let beta = self.profile.beta();
        let f_part = operator_value(p, m, self.variant, self.pair, alpha)?;
        let mag_sq = p.norm_sq() + p.eps() * p.eps();
        let b_part = self.b_at(x, y) * pow_sq(mag_sq, 0.5 * beta);
        let zo = self.zero_order().value(u_val);
        Ok(-f_part + b_part + zo - self.f_at(x, y))
    }

    /// The same residual without the forcing term and with |b| instead of
    /// b: the worst-case form barrier certificates are checked against.
    pub fn barrier_residual_at(
        &self,
        u_val: f64,
        p: &GradientVector,
        m: &SymMatrix,
    ) -> Result<f64, ProblemError> {
        let alpha = self.profile.alpha();
        let beta = self.profile.beta();
        let f_part = operator_value(p, m, self.variant, self.pair, alpha)?;
        let mag_sq = p.norm_sq() + p.eps() * p.eps();
        let b_part = self.b.sup * pow_sq(mag_sq, 0.5 * beta);
        let zo = self.zero_order().value(u_val);
        Ok(-f_part - b_part + zo)
    }

    /// Regularized first-order magnitude `(|p|^2 + eps^2)^(beta/2)`.
    pub fn beta_magnitude(&self, p: &GradientVector) -> f64 {
        let mag_sq = p.norm_sq() + p.eps() * p.eps();
        pow_sq(mag_sq, 0.5 * self.profile.beta())
    }

    /// Gradient weight for this problem's alpha.
    pub fn weight(&self, p: &GradientVector) -> Result<f64, ProblemError> {
        Ok(gradient_weight(p, self.profile.alpha())?)
    }
}

fn sample_points(domain: &Domain) -> Vec<(f64, f64)> {
    match *domain.kind() {
        DomainKind::Interval { lo, hi } => (0..SWEEP_1D)
            .map(|i| (lo + (hi - lo) * i as f64 / (SWEEP_1D - 1) as f64, 0.0))
            .collect(),
        DomainKind::Ball { radius, .. } => (0..SWEEP_1D)
            .map(|i| (radius * i as f64 / (SWEEP_1D - 1) as f64, 0.0))
            .collect(),
        DomainKind::Rectangle { lo, hi } => {
            let mut pts = Vec::with_capacity(SWEEP_2D * SWEEP_2D);
            for j in 0..SWEEP_2D {
                let yv = lo[1] + (hi[1] - lo[1]) * j as f64 / (SWEEP_2D - 1) as f64;
                for i in 0..SWEEP_2D {
                    let xv = lo[0] + (hi[0] - lo[0]) * i as f64 / (SWEEP_2D - 1) as f64;
                    pts.push((xv, yv));
                }
            }
            pts
        }
    }
}

fn sample_sup(domain: &Domain, e: &Expr, field: &'static str) -> Result<f64, ProblemError> {
    let mut sup: f64 = 0.0;
    for (x, y) in sample_points(domain) {
        let v = e.eval(x, y);
        if !v.is_finite() {
            return Err(ProblemError::UnboundedCoefficient { field, x, y });
        }
        sup = sup.max(v.abs());
    }
    Ok(sup)
}

fn sample_grad_sup(domain: &Domain, e: &Expr, field: &'static str) -> Result<f64, ProblemError> {
    let dx = differentiate(e, Axis::X).expr;
    let dy = if domain.dim() == 2 && !matches!(domain.kind(), DomainKind::Ball { .. }) {
        Some(differentiate(e, Axis::Y).expr)
    } else {
        None
    };
    let mut sup: f64 = 0.0;
    for (x, y) in sample_points(domain) {
        let gx = dx.eval(x, y);
        let gy = dy.as_ref().map_or(0.0, |d| d.eval(x, y));
        let g = f64::hypot(gx, gy);
        if !g.is_finite() {
            // kinks of |.|-type fields produce one-sided values, not
            // unbounded slopes; a genuine infinity means the bound fails
            return Err(ProblemError::UnboundedCoefficient { field, x, y });
        }
        sup = sup.max(g);
    }
    Ok(sup)
}
