//! Pointwise operator kernels.
//!
//! Everything here is a pure function of its arguments. The canonical
//! operators are `F(p, M) = |p|^alpha G(M)` where `G` is one of the two
//! Pucci extremal operators or the trace; these carry the full structure
//! the rest of the crate relies on (degree-alpha homogeneity in the
//! gradient, degree-one positive homogeneity and uniform ellipticity in
//! the Hessian slot).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("gradient weight is singular: |p| = 0 with eps = 0 and alpha < 0")]
    SingularGradient,
    #[error("ellipticity pair must satisfy 0 < a <= A, got a = {a}, A = {big_a}")]
    InvalidEllipticity { a: f64, big_a: f64 },
    #[error("alpha must be finite and > -1, got {alpha}")]
    AlphaOutOfRange { alpha: f64 },
    #[error("beta must lie in (0, alpha + 2], got beta = {beta} with alpha = {alpha}")]
    BetaOutOfRange { beta: f64, alpha: f64 },
    #[error("lambda must be finite and >= 0, got {lambda}")]
    NegativeLambda { lambda: f64 },
    #[error("dimension mismatch: gradient is {p_dim}d, matrix is {m_dim}d")]
    DimensionMismatch { p_dim: usize, m_dim: usize },
    #[error("radial reduction requires r > 0, got {r}")]
    InvalidRadius { r: f64 },
    #[error("regularization eps must be finite and >= 0, got {eps}")]
    InvalidRegularization { eps: f64 },
}

/// `base_sq^half_exp` with fast paths for the exponents the scheme hits on
/// every node. `base_sq` must be nonnegative; this is `|x|^(2*half_exp)`
/// written so callers never need the square root of the base first.
#[inline]
pub(crate) fn pow_sq(base_sq: f64, half_exp: f64) -> f64 {
    debug_assert!(base_sq >= 0.0);
    if half_exp == 0.0 {
        1.0
    } else if half_exp == 0.5 {
        base_sq.sqrt()
    } else if half_exp == 1.0 {
        base_sq
    } else if half_exp == -0.5 {
        1.0 / base_sq.sqrt()
    } else if half_exp == 0.25 {
        base_sq.sqrt().sqrt()
    } else if half_exp == -0.25 {
        1.0 / base_sq.sqrt().sqrt()
    } else {
        base_sq.powf(half_exp)
    }
}

/// Uniform ellipticity bounds `0 < a <= A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPair")]
pub struct EllipticityPair {
    a: f64,
    big_a: f64,
}

#[derive(Deserialize)]
struct RawPair {
    a: f64,
    #[serde(rename = "A", alias = "big_a")]
    big_a: f64,
}

impl TryFrom<RawPair> for EllipticityPair {
    type Error = OperatorError;
    fn try_from(r: RawPair) -> Result<Self, OperatorError> {
        EllipticityPair::new(r.a, r.big_a)
    }
}

impl EllipticityPair {
    pub fn new(a: f64, big_a: f64) -> Result<Self, OperatorError> {
        if !(a.is_finite() && big_a.is_finite() && 0.0 < a && a <= big_a) {
            return Err(OperatorError::InvalidEllipticity { a, big_a });
        }
        Ok(Self { a, big_a })
    }

    #[inline]
    pub fn a(&self) -> f64 {
        self.a
    }

    /// The upper bound, written `A` in math contexts.
    #[inline]
    pub fn big_a(&self) -> f64 {
        self.big_a
    }
}

/// Exponents of the equation: gradient power `alpha > -1`, first-order
/// power `beta` in `(0, alpha + 2]`, zero-order coefficient `lambda >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile")]
pub struct ExponentProfile {
    alpha: f64,
    beta: f64,
    lambda: f64,
}

#[derive(Deserialize)]
struct RawProfile {
    alpha: f64,
    beta: f64,
    lambda: f64,
}

impl TryFrom<RawProfile> for ExponentProfile {
    type Error = OperatorError;
    fn try_from(r: RawProfile) -> Result<Self, OperatorError> {
        ExponentProfile::new(r.alpha, r.beta, r.lambda)
    }
}

impl ExponentProfile {
    pub fn new(alpha: f64, beta: f64, lambda: f64) -> Result<Self, OperatorError> {
        if !alpha.is_finite() || alpha <= -1.0 {
            return Err(OperatorError::AlphaOutOfRange { alpha });
        }
        if !beta.is_finite() || beta <= 0.0 || beta > alpha + 2.0 {
            return Err(OperatorError::BetaOutOfRange { beta, alpha });
        }
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(OperatorError::NegativeLambda { lambda });
        }
        Ok(Self { alpha, beta, lambda })
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn beta(&self) -> f64 {
        self.beta
    }

    #[inline]
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// True at the critical first-order endpoint `beta = alpha + 2`, where
    /// barrier constructions need a preliminary rescaling.
    #[inline]
    pub fn beta_is_critical(&self) -> bool {
        self.beta == self.alpha + 2.0
    }
}

/// Symmetric matrix in dimension 1 or 2, upper triangle stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMatrix {
    dim: u8,
    // 1d: [m, _, _]; 2d: [m11, m12, m22]
    m: [f64; 3],
}

impl SymMatrix {
    pub fn one_d(m: f64) -> Self {
        Self { dim: 1, m: [m, 0.0, 0.0] }
    }

    pub fn sym_2d(m11: f64, m12: f64, m22: f64) -> Self {
        Self { dim: 2, m: [m11, m12, m22] }
    }

    pub fn diag_2d(d1: f64, d2: f64) -> Self {
        Self::sym_2d(d1, 0.0, d2)
    }

    pub fn zero(dim: usize) -> Self {
        match dim {
            1 => Self::one_d(0.0),
            _ => Self::sym_2d(0.0, 0.0, 0.0),
        }
    }

    pub fn identity_2d() -> Self {
        Self::sym_2d(1.0, 0.0, 1.0)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn trace(&self) -> f64 {
        match self.dim {
            1 => self.m[0],
            _ => self.m[0] + self.m[2],
        }
    }

    pub fn scale(&self, t: f64) -> Self {
        Self { dim: self.dim, m: [self.m[0] * t, self.m[1] * t, self.m[2] * t] }
    }

    pub fn add(&self, other: &SymMatrix) -> Result<Self, OperatorError> {
        if self.dim != other.dim {
            return Err(OperatorError::DimensionMismatch {
                p_dim: self.dim(),
                m_dim: other.dim(),
            });
        }
        Ok(Self {
            dim: self.dim,
            m: [self.m[0] + other.m[0], self.m[1] + other.m[1], self.m[2] + other.m[2]],
        })
    }

    /// Eigenvalues ascending. Closed form: in 2d the pair is
    /// `mean -+ sqrt(((m11-m22)/2)^2 + m12^2)`.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let (e, n) = self.eigs();
        e[..n].to_vec()
    }

    #[inline]
    fn eigs(&self) -> ([f64; 2], usize) {
        match self.dim {
            1 => ([self.m[0], 0.0], 1),
            _ => {
                let mean = 0.5 * (self.m[0] + self.m[2]);
                let d = f64::hypot(0.5 * (self.m[0] - self.m[2]), self.m[1]);
                ([mean - d, mean + d], 2)
            }
        }
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> f64 {
        let (e, n) = self.eigs();
        e[..n].iter().fold(0.0, |acc, &x| acc.max(x.abs()))
    }
}

/// Gradient with its regularization parameter. `eps = 0` means exact
/// evaluation; schemes pass the continuation value `eps(h) > 0` instead so
/// singular weights stay finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientVector {
    dim: u8,
    p: [f64; 2],
    eps: f64,
}

impl GradientVector {
    pub fn one_d(p: f64, eps: f64) -> Result<Self, OperatorError> {
        Self::check_eps(eps)?;
        Ok(Self { dim: 1, p: [p, 0.0], eps })
    }

    pub fn two_d(px: f64, py: f64, eps: f64) -> Result<Self, OperatorError> {
        Self::check_eps(eps)?;
        Ok(Self { dim: 2, p: [px, py], eps })
    }

    fn check_eps(eps: f64) -> Result<(), OperatorError> {
        if !eps.is_finite() || eps < 0.0 {
            return Err(OperatorError::InvalidRegularization { eps });
        }
        Ok(())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn eps(&self) -> f64 {
        self.eps
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.p[0] * self.p[0] + self.p[1] * self.p[1]
    }

    /// Regularized magnitude `sqrt(|p|^2 + eps^2)`.
    #[inline]
    pub fn magnitude(&self) -> f64 {
        (self.norm_sq() + self.eps * self.eps).sqrt()
    }

    pub fn scale(&self, t: f64) -> Self {
        Self { dim: self.dim, p: [self.p[0] * t, self.p[1] * t], eps: self.eps }
    }
}

/// Which extremal combination of the Hessian eigenvalues `F` applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorVariant {
    PucciPlus,
    PucciMinus,
    Trace,
}

impl std::fmt::Display for OperatorVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OperatorVariant::PucciPlus => "pucci_plus",
            OperatorVariant::PucciMinus => "pucci_minus",
            OperatorVariant::Trace => "trace",
        })
    }
}

/// `M+(M) = A * (sum of positive eigenvalues) + a * (sum of negative ones)`.
pub fn pucci_plus(m: &SymMatrix, pair: EllipticityPair) -> f64 {
    let (e, n) = m.eigs();
    let mut acc = 0.0;
    for &lam in &e[..n] {
        acc += if lam > 0.0 { pair.big_a() * lam } else { pair.a() * lam };
    }
    acc
}

/// `M-(M) = a * (sum of positive eigenvalues) + A * (sum of negative ones)`.
/// Satisfies `pucci_minus(M) = -pucci_plus(-M)` exactly.
pub fn pucci_minus(m: &SymMatrix, pair: EllipticityPair) -> f64 {
    let (e, n) = m.eigs();
    let mut acc = 0.0;
    for &lam in &e[..n] {
        acc += if lam > 0.0 { pair.a() * lam } else { pair.big_a() * lam };
    }
    acc
}

/// `(|p|^2 + eps^2)^(alpha/2)`.
///
/// With `eps = 0` this is the exact degree-alpha weight; the singular case
/// (`|p| = 0`, `alpha < 0`) is an error the caller must own, since the
/// equation's own meaning at such points is the locally-constant test
/// function branch rather than a value of `F`.
pub fn gradient_weight(p: &GradientVector, alpha: f64) -> Result<f64, OperatorError> {
    if !alpha.is_finite() || alpha <= -1.0 {
        return Err(OperatorError::AlphaOutOfRange { alpha });
    }
    let base_sq = p.norm_sq() + p.eps * p.eps;
    if base_sq == 0.0 {
        return match alpha.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Less) => Err(OperatorError::SingularGradient),
            Some(std::cmp::Ordering::Equal) => Ok(1.0),
            _ => Ok(0.0),
        };
    }
    Ok(pow_sq(base_sq, 0.5 * alpha))
}

/// `F(p, M) = (|p|^2 + eps^2)^(alpha/2) * G(M)` with `G` chosen by `variant`.
pub fn operator_value(
    p: &GradientVector,
    m: &SymMatrix,
    variant: OperatorVariant,
    pair: EllipticityPair,
    alpha: f64,
) -> Result<f64, OperatorError> {
    if p.dim() != m.dim() {
        return Err(OperatorError::DimensionMismatch { p_dim: p.dim(), m_dim: m.dim() });
    }
    let w = gradient_weight(p, alpha)?;
    let g = match variant {
        OperatorVariant::PucciPlus => pucci_plus(m, pair),
        OperatorVariant::PucciMinus => pucci_minus(m, pair),
        OperatorVariant::Trace => m.trace(),
    };
    Ok(w * g)
}

/// `F` along a radial profile `v(r)`: the Hessian of `v(|x|)` has
/// eigenvalue `v''` once and `v'/r` with multiplicity `n - 1`, and the
/// gradient magnitude is `|v'|`. Returns the `F` part only; first and
/// zero order terms are the caller's.
#[allow(clippy::too_many_arguments)]
pub fn radial_operator_value(
    r: f64,
    v1: f64,
    v2: f64,
    n: u32,
    variant: OperatorVariant,
    pair: EllipticityPair,
    alpha: f64,
    eps: f64,
) -> Result<f64, OperatorError> {
    if !(r.is_finite() && r > 0.0) {
        return Err(OperatorError::InvalidRadius { r });
    }
    let p = GradientVector::one_d(v1, eps)?;
    let w = gradient_weight(&p, alpha)?;
    let curv = v1 / r;
    let mult = (n.max(1) - 1) as f64;
    let g = match variant {
        OperatorVariant::PucciPlus => {
            let head = if v2 > 0.0 { pair.big_a() * v2 } else { pair.a() * v2 };
            let tail = if curv > 0.0 { pair.big_a() * curv } else { pair.a() * curv };
            head + mult * tail
        }
        OperatorVariant::PucciMinus => {
            let head = if v2 > 0.0 { pair.a() * v2 } else { pair.big_a() * v2 };
            let tail = if curv > 0.0 { pair.a() * curv } else { pair.big_a() * curv };
            head + mult * tail
        }
        OperatorVariant::Trace => v2 + mult * curv,
    };
    Ok(w * g)
}

/// The strictly increasing zero-order map `u -> lambda |u|^alpha u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroOrderTerm {
    lambda: f64,
    alpha: f64,
}

impl ZeroOrderTerm {
    pub fn new(lambda: f64, alpha: f64) -> Result<Self, OperatorError> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(OperatorError::NegativeLambda { lambda });
        }
        if !alpha.is_finite() || alpha <= -1.0 {
            return Err(OperatorError::AlphaOutOfRange { alpha });
        }
        Ok(Self { lambda, alpha })
    }

    #[inline]
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `lambda |u|^alpha u`. Exponent `1 + alpha > 0`, so the value at
    /// `u = 0` is 0 for every admissible alpha.
    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        let mag = pow_sq(u * u, 0.5 * (1.0 + self.alpha));
        self.lambda * mag.copysign(u)
    }

    /// `d/du`: `lambda (1 + alpha) |u|^alpha`. Unbounded at 0 when
    /// `alpha < 0` (returns +inf there; root finders must bracket).
    #[inline]
    pub fn derivative(&self, u: f64) -> f64 {
        if u == 0.0 {
            return match self.alpha.partial_cmp(&0.0) {
                Some(std::cmp::Ordering::Less) => f64::INFINITY,
                Some(std::cmp::Ordering::Equal) => self.lambda,
                _ => 0.0,
            };
        }
        self.lambda * (1.0 + self.alpha) * pow_sq(u * u, 0.5 * self.alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(a: f64, big_a: f64) -> EllipticityPair {
        EllipticityPair::new(a, big_a).unwrap()
    }

    #[test]
    fn pucci_plus_mixed_spectrum() {
        let m = SymMatrix::diag_2d(2.0, -3.0);
        assert_eq!(pucci_plus(&m, pair(1.0, 2.0)), 1.0);
    }

    #[test]
    fn pucci_plus_zero_and_identity() {
        assert_eq!(pucci_plus(&SymMatrix::zero(2), pair(1.0, 2.0)), 0.0);
        assert_eq!(pucci_plus(&SymMatrix::identity_2d(), pair(1.0, 2.0)), 4.0);
    }

    #[test]
    fn pucci_minus_mixed_and_negative() {
        let m = SymMatrix::diag_2d(2.0, -3.0);
        assert_eq!(pucci_minus(&m, pair(1.0, 2.0)), -4.0);
        let neg_id = SymMatrix::diag_2d(-1.0, -1.0);
        assert_eq!(pucci_minus(&neg_id, pair(1.0, 2.0)), -4.0);
    }

    #[test]
    fn pucci_duality_spot_checks() {
        let cases = [
            SymMatrix::sym_2d(1.5, -0.7, -2.2),
            SymMatrix::sym_2d(0.0, 3.0, 0.0),
            SymMatrix::one_d(-5.0),
        ];
        let pr = pair(0.5, 3.0);
        for m in cases {
            let neg = m.scale(-1.0);
            assert!((pucci_plus(&neg, pr) + pucci_minus(&m, pr)).abs() < 1e-14);
        }
    }

    #[test]
    fn off_diagonal_eigenvalues() {
        // [[0, 3], [3, 0]] has eigenvalues -3, 3
        let m = SymMatrix::sym_2d(0.0, 3.0, 0.0);
        let e = m.eigenvalues();
        assert!((e[0] + 3.0).abs() < 1e-14);
        assert!((e[1] - 3.0).abs() < 1e-14);
        assert_eq!(m.spectral_norm(), 3.0);
    }

    #[test]
    fn gradient_weight_examples() {
        let p = GradientVector::two_d(3.0, 4.0, 0.0).unwrap();
        assert_eq!(gradient_weight(&p, 1.0).unwrap(), 5.0);

        for v in [0.0, 0.3, -7.0] {
            let p = GradientVector::one_d(v, 0.0).unwrap();
            assert_eq!(gradient_weight(&p, 0.0).unwrap(), 1.0);
        }

        let p = GradientVector::two_d(0.0, 0.0, 0.1).unwrap();
        let w = gradient_weight(&p, -0.5).unwrap();
        assert!((w - 10.0_f64.sqrt()).abs() < 1e-12, "got {w}");
        assert!((w - 3.16228).abs() < 1e-5);
    }

    #[test]
    fn gradient_weight_singular_cases() {
        let p = GradientVector::one_d(0.0, 0.0).unwrap();
        assert_eq!(gradient_weight(&p, -0.5), Err(OperatorError::SingularGradient));
        // degenerate direction: weight vanishes instead of blowing up
        assert_eq!(gradient_weight(&p, 0.7).unwrap(), 0.0);
    }

    #[test]
    fn operator_value_examples() {
        let pr = pair(1.0, 2.0);
        let m = SymMatrix::diag_2d(2.0, -3.0);
        let p1 = GradientVector::two_d(1.0, 0.0, 0.0).unwrap();
        let v1 = operator_value(&p1, &m, OperatorVariant::PucciPlus, pr, 1.0).unwrap();
        assert_eq!(v1, 1.0);

        let p2 = GradientVector::two_d(2.0, 0.0, 0.0).unwrap();
        let v2 = operator_value(&p2, &m, OperatorVariant::PucciPlus, pr, 1.0).unwrap();
        assert_eq!(v2, 2.0);

        let p3 = GradientVector::two_d(1.0, 1.0, 0.0).unwrap();
        let m2 = SymMatrix::diag_2d(2.0, 2.0);
        let v3 = operator_value(&p3, &m2, OperatorVariant::Trace, pr, 0.0).unwrap();
        assert_eq!(v3, 4.0);
    }

    #[test]
    fn operator_value_dimension_mismatch() {
        let p = GradientVector::one_d(1.0, 0.0).unwrap();
        let m = SymMatrix::identity_2d();
        let r = operator_value(&p, &m, OperatorVariant::Trace, pair(1.0, 1.0), 0.0);
        assert!(matches!(r, Err(OperatorError::DimensionMismatch { .. })));
    }

    #[test]
    fn radial_parabola() {
        // v(r) = R^2 - r^2: v' = -2r, v'' = -2; at r = 0.5 both Hessian
        // eigenvalues are -2 and the plus operator gives -4 with a = 1.
        let v = radial_operator_value(
            0.5,
            -1.0,
            -2.0,
            2,
            OperatorVariant::PucciPlus,
            pair(1.0, 2.0),
            0.0,
            0.0,
        )
        .unwrap();
        assert_eq!(v, -4.0);
    }

    #[test]
    fn radial_minus_branch_matches_split_form() {
        // v'' > 0 > v' is the shape of an exponential wall profile; there
        // the minus operator is a*v'' + A*(n-1)*v'/r.
        let (r, v1, v2, a, big_a) = (0.8, -2.0, 1.5, 1.0, 2.0);
        let got = radial_operator_value(
            r,
            v1,
            v2,
            2,
            OperatorVariant::PucciMinus,
            pair(a, big_a),
            0.0,
            0.0,
        )
        .unwrap();
        assert!((got - (a * v2 + big_a * v1 / r)).abs() < 1e-14);
    }

    #[test]
    fn radial_one_d_has_no_curvature_term() {
        let with_n1 = radial_operator_value(
            0.3,
            5.0,
            -1.0,
            1,
            OperatorVariant::Trace,
            pair(1.0, 1.0),
            0.0,
            0.0,
        )
        .unwrap();
        assert_eq!(with_n1, -1.0);
    }

    #[test]
    fn radial_rejects_nonpositive_radius() {
        let r = radial_operator_value(
            0.0,
            1.0,
            1.0,
            2,
            OperatorVariant::Trace,
            pair(1.0, 1.0),
            0.0,
            0.0,
        );
        assert!(matches!(r, Err(OperatorError::InvalidRadius { .. })));
    }

    #[test]
    fn exponent_profile_validation() {
        assert!(ExponentProfile::new(-0.5, 1.0, 1.0).is_ok());
        // critical endpoint included
        let crit = ExponentProfile::new(0.5, 2.5, 1.0).unwrap();
        assert!(crit.beta_is_critical());
        assert!(matches!(
            ExponentProfile::new(-1.0, 0.5, 1.0),
            Err(OperatorError::AlphaOutOfRange { .. })
        ));
        assert!(matches!(
            ExponentProfile::new(0.0, 2.5, 1.0),
            Err(OperatorError::BetaOutOfRange { .. })
        ));
        assert!(matches!(
            ExponentProfile::new(0.0, 0.0, 1.0),
            Err(OperatorError::BetaOutOfRange { .. })
        ));
        assert!(matches!(
            ExponentProfile::new(0.0, 1.0, -0.1),
            Err(OperatorError::NegativeLambda { .. })
        ));
    }

    #[test]
    fn ellipticity_pair_validation() {
        assert!(EllipticityPair::new(1.0, 1.0).is_ok());
        assert!(EllipticityPair::new(2.0, 1.0).is_err());
        assert!(EllipticityPair::new(0.0, 1.0).is_err());
        assert!(EllipticityPair::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn zero_order_term_values() {
        let z = ZeroOrderTerm::new(2.0, -0.5).unwrap();
        assert_eq!(z.value(0.0), 0.0);
        // 2 * |4|^(-1/2) * 4 = 2 * 2 = 4
        assert!((z.value(4.0) - 4.0).abs() < 1e-14);
        assert!((z.value(-4.0) + 4.0).abs() < 1e-14);
        assert_eq!(z.derivative(0.0), f64::INFINITY);

        let lin = ZeroOrderTerm::new(3.0, 0.0).unwrap();
        assert_eq!(lin.value(1.5), 4.5);
        assert_eq!(lin.derivative(0.0), 3.0);

        let deg = ZeroOrderTerm::new(1.0, 1.0).unwrap();
        assert_eq!(deg.value(-2.0), -4.0);
        assert_eq!(deg.derivative(0.0), 0.0);
    }

    #[test]
    fn zero_order_monotone_on_samples() {
        let z = ZeroOrderTerm::new(0.7, -0.9).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for i in -40..=40 {
            let u = i as f64 * 0.25;
            let v = z.value(u);
            assert!(v >= prev, "not nondecreasing at u = {u}");
            prev = v;
        }
    }

    #[test]
    fn pow_sq_fast_paths_agree_with_powf() {
        for &b in &[0.0, 1e-8, 0.3, 1.0, 7.5] {
            for &e in &[0.0, 0.25, 0.5, 1.0, -0.25, -0.5, 0.37, -0.81] {
                let fast = pow_sq(b, e);
                let slow = b.powf(e);
                if slow.is_finite() {
                    assert!(
                        (fast - slow).abs() <= 1e-12 * (1.0 + slow.abs()),
                        "b={b}, e={e}: {fast} vs {slow}"
                    );
                } else {
                    assert!(!fast.is_finite());
                }
            }
        }
    }
}
