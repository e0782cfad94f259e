//! Run configuration: one TOML file describes the problem, the grid, the
//! solver knobs, the verification checks and the output layout.
//!
//! Unknown keys are hard errors everywhere. A typo like `bta = 2` silently
//! ignored would hand out certificates for a different equation, so every
//! table rejects keys it does not know, including the nested rule and
//! domain variants.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::Domain;
use crate::expr::Expr;
use crate::operator::{EllipticityPair, ExponentProfile, OperatorVariant};
use crate::problem::ProblemSpec;
use crate::scheme::{EpsRule, SolveParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config invalid: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub domain: DomainConfig,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub a: f64,
    #[serde(rename = "A")]
    pub big_a: f64,
    pub variant: OperatorVariant,
    pub b_expr: String,
    pub f_expr: String,
    pub phi_expr: String,
    /// Exact solution when one is known; solve and sweep report errors
    /// against it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_expr: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainConfig {
    Interval(IntervalConfig),
    Rectangle(RectangleConfig),
    Ball(BallConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalConfig {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectangleConfig {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallConfig {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Spacing for single-grid commands.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    /// Spacing list for refinement sweeps, finest last.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: u64,
    #[serde(default = "default_steps")]
    pub continuation_steps: u32,
    #[serde(default = "default_dt_factor")]
    pub dt_factor: f64,
    #[serde(default = "default_eps_rule")]
    pub eps_rule: EpsRuleConfig,
    /// False switches the first-order quotient to the centered negative
    /// control, which forfeits the monotonicity certificates.
    #[serde(default = "default_true")]
    pub upwind: bool,
}

fn default_tol() -> f64 {
    1e-8
}
fn default_max_iters() -> u64 {
    3_000_000
}
fn default_steps() -> u32 {
    4
}
fn default_dt_factor() -> f64 {
    0.85
}
fn default_eps_rule() -> EpsRuleConfig {
    EpsRuleConfig::H(HRuleConfig { factor: 1.0 })
}
fn default_true() -> bool {
    true
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_iters: default_max_iters(),
            continuation_steps: default_steps(),
            dt_factor: default_dt_factor(),
            eps_rule: default_eps_rule(),
            upwind: default_true(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsRuleConfig {
    H(HRuleConfig),
    HPow(HPowRuleConfig),
    Const(ConstRuleConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HRuleConfig {
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HPowRuleConfig {
    pub factor: f64,
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstRuleConfig {
    pub value: f64,
}

impl EpsRuleConfig {
    pub fn to_rule(&self) -> EpsRule {
        match self {
            EpsRuleConfig::H(r) => EpsRule::H { factor: r.factor },
            EpsRuleConfig::HPow(r) => EpsRule::HPow { factor: r.factor, power: r.power },
            EpsRuleConfig::Const(r) => EpsRule::Const { value: r.value },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Classical,
    ZeroGradient,
    Comparison,
    Uniqueness,
    Sandwich,
    Modulus,
    StrongMax,
}

impl std::fmt::Display for CheckKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CheckKind::Classical => "classical",
            CheckKind::ZeroGradient => "zero_gradient",
            CheckKind::Comparison => "comparison",
            CheckKind::Uniqueness => "uniqueness",
            CheckKind::Sandwich => "sandwich",
            CheckKind::Modulus => "modulus",
            CheckKind::StrongMax => "strong_max",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default)]
    pub checks: Vec<CheckKind>,
    /// Candidate field for the classical and zero-gradient checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate_expr: Option<String>,
    /// Which one-sided certificate the classical check asserts.
    #[serde(default = "default_side")]
    pub candidate_side: CandidateSide,
    #[serde(default = "default_probe_radius")]
    pub probe_radius: f64,
    #[serde(default = "default_comparison_count")]
    pub comparison_count: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_uniqueness_tol")]
    pub uniqueness_tol: f64,
    /// Radii for the modulus fit; defaults to half the inradius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus_radii: Option<Vec<f64>>,
    #[serde(default = "default_modulus")]
    pub modulus: ModulusConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_gradient: Option<ZeroGradientConfig>,
    /// Override for the strong-maximum inward quotient floor; defaults to
    /// half the Hopf barrier prediction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strong_max_floor: Option<f64>,
}

/// Sign convention for classical-check margins: a supersolution wants every
/// margin nonnegative, a subsolution nonpositive, an exact solution keeps
/// them at round-off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateSide {
    Super,
    Sub,
    Exact,
}

fn default_side() -> CandidateSide {
    CandidateSide::Super
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            checks: Vec::new(),
            candidate_expr: None,
            candidate_side: default_side(),
            probe_radius: default_probe_radius(),
            comparison_count: default_comparison_count(),
            seed: default_seed(),
            uniqueness_tol: default_uniqueness_tol(),
            modulus_radii: None,
            modulus: default_modulus(),
            zero_gradient: None,
            strong_max_floor: None,
        }
    }
}

fn default_probe_radius() -> f64 {
    0.05
}
fn default_comparison_count() -> usize {
    50
}
fn default_seed() -> u64 {
    7
}
fn default_uniqueness_tol() -> f64 {
    1e-6
}
fn default_modulus() -> ModulusConfig {
    ModulusConfig::Lipschitz
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulusConfig {
    Lipschitz,
    Holder(HolderConfig),
    Omega(OmegaConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderConfig {
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaConfig {
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZeroGradientConfig {
    pub x: f64,
    #[serde(default)]
    pub y: f64,
    pub q: f64,
    pub big_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormatKind {
    Csv,
    Report,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Artifact directory. Resolution order: the --out flag, then this
    /// key, then the VISCOFD_OUT environment variable, then the current
    /// directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    /// Artifact classes to write; empty means both.
    #[serde(default)]
    pub formats: Vec<FormatKind>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Canonical echo: re-parsing the returned text yields an equal config.
    pub fn echo(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn to_domain(&self) -> Result<Domain, ConfigError> {
        let d = match &self.problem.domain {
            DomainConfig::Interval(iv) => Domain::interval(iv.lo, iv.hi),
            DomainConfig::Rectangle(r) => Domain::rectangle(r.lo, r.hi),
            DomainConfig::Ball(b) => Domain::ball(b.center, b.radius),
        };
        d.map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    fn parse_expr(src: &str, key: &str) -> Result<Expr, ConfigError> {
        Expr::parse(src).map_err(|e| ConfigError::Invalid(format!("{key}: {e}")))
    }

    pub fn to_problem(&self) -> Result<ProblemSpec, ConfigError> {
        let p = &self.problem;
        let domain = self.to_domain()?;
        let profile = ExponentProfile::new(p.alpha, p.beta, p.lambda)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let pair = EllipticityPair::new(p.a, p.big_a)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let b = Self::parse_expr(&p.b_expr, "b_expr")?;
        let f = Self::parse_expr(&p.f_expr, "f_expr")?;
        let phi = Self::parse_expr(&p.phi_expr, "phi_expr")?;
        ProblemSpec::new(domain, profile, pair, p.variant, b, f, phi)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn oracle(&self) -> Result<Option<Expr>, ConfigError> {
        match &self.problem.oracle_expr {
            None => Ok(None),
            Some(src) => Self::parse_expr(src, "oracle_expr").map(Some),
        }
    }

    pub fn solve_params(&self) -> SolveParams {
        let s = &self.solver;
        SolveParams {
            dt_factor: s.dt_factor,
            max_iters: s.max_iters,
            residual_tol: s.tol,
            continuation_steps: s.continuation_steps,
            eps_rule: s.eps_rule.to_rule(),
            monotone_b: s.upwind,
            ..SolveParams::default()
        }
    }
}
