//! Overdetermined free-boundary problems for steady planar Euler flows with
//! constant vorticity on annuli.
//!
//! Three problems are covered:
//!
//! * **single phase** — `Δψ = γ` between a fixed inner circle `r = λ` (where
//!   `ψ = 1`) and a free outer boundary `r = 1 + η(θ)` carrying both `ψ = 0`
//!   and `|∇ψ|² = Q`;
//! * **two phase** — vorticity `γ₁` inside `r < λ`, `γ₂` outside, transmission
//!   conditions across `r = λ`, free outer boundary with `|∇ψ|² = Q`;
//! * **pair** — both boundaries `r = λ + ξ(θ)` and `r = 1 + η(θ)` are free and
//!   carry Dirichlet plus Neumann data.
//!
//! The crate provides the radial (trivial) solutions, closed-form dispersion
//! relations, a Chebyshev/cosine spectral solver on perturbed annuli, and
//! Newton-based branch continuation and stability solves.

pub mod continuation;
pub mod diagram;
pub mod dispersion;
pub mod elliptic;
mod error;
pub mod geometry;
pub mod linalg;
pub mod radial;
pub mod verify;

pub use error::{Error, Result};

/// Which of the three overdetermined problems is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Single,
    TwoPhase,
    Pair,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Single => "single",
            ProblemKind::TwoPhase => "two_phase",
            ProblemKind::Pair => "pair",
        }
    }
}

impl std::str::FromStr for ProblemKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" | "single_phase" => Ok(ProblemKind::Single),
            "two_phase" | "two-phase" | "twophase" => Ok(ProblemKind::TwoPhase),
            "pair" => Ok(ProblemKind::Pair),
            other => Err(Error::Config(format!("unknown problem kind `{other}`"))),
        }
    }
}

/// A problem instance: kind plus the parameters that define its trivial state.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "problem", rename_all = "snake_case")]
pub enum Problem {
    Single { lambda: f64, gamma: f64 },
    TwoPhase { lambda: f64, gamma1: f64, gamma2: f64 },
    Pair { lambda: f64, gamma: f64 },
}

impl Problem {
    pub fn kind(&self) -> ProblemKind {
        match self {
            Problem::Single { .. } => ProblemKind::Single,
            Problem::TwoPhase { .. } => ProblemKind::TwoPhase,
            Problem::Pair { .. } => ProblemKind::Pair,
        }
    }

    pub fn lambda(&self) -> f64 {
        match *self {
            Problem::Single { lambda, .. } | Problem::TwoPhase { lambda, .. } | Problem::Pair { lambda, .. } => lambda,
        }
    }

    /// The bifurcation parameter: `γ`, or `γ₂` for the two-phase problem.
    pub fn parameter(&self) -> f64 {
        match *self {
            Problem::Single { gamma, .. } | Problem::Pair { gamma, .. } => gamma,
            Problem::TwoPhase { gamma2, .. } => gamma2,
        }
    }

    pub fn with_parameter(&self, p: f64) -> Problem {
        match *self {
            Problem::Single { lambda, .. } => Problem::Single { lambda, gamma: p },
            Problem::Pair { lambda, .. } => Problem::Pair { lambda, gamma: p },
            Problem::TwoPhase { lambda, gamma1, .. } => Problem::TwoPhase { lambda, gamma1, gamma2: p },
        }
    }

    pub fn profile(&self) -> Result<radial::RadialProfile> {
        match *self {
            Problem::Single { lambda, gamma } | Problem::Pair { lambda, gamma } => radial::RadialProfile::single(lambda, gamma),
            Problem::TwoPhase { lambda, gamma1, gamma2 } => radial::RadialProfile::two_phase(lambda, gamma1, gamma2),
        }
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 && lambda < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("inner radius must lie in (0,1), got {lambda}")))
    }
}
