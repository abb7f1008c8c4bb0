//! Newton solves on the boundary coefficients: stability under perturbed
//! Neumann data and continuation of bifurcating branches.

mod branch;
mod newton;
mod stability;
mod system;

pub use branch::*;
pub use newton::*;
pub use stability::*;
pub use system::*;

use serde::{Deserialize, Serialize};

use crate::elliptic::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationConfig {
    /// Cosine modes of each free boundary.
    pub order: usize,
    /// Upper bound for the adaptive truncation.
    pub max_order: usize,
    /// Enlarge the truncation when the top quarter of the modes carries more than this.
    pub tail_energy: f64,
    /// Grid residual a branch point must reach; the truncation is enlarged otherwise.
    pub residual_tol: f64,
    pub solver: SolverConfig,
    pub newton: NewtonOptions,
    /// Form of the Neumann condition in stability solves.
    pub form: NeumannForm,
    /// Smallest sub-step, relative to the nominal step, before a branch is abandoned.
    pub min_step_fraction: f64,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            order: 16,
            max_order: 64,
            tail_energy: 1e-8,
            residual_tol: 1e-9,
            solver: SolverConfig::default(),
            newton: NewtonOptions::default(),
            form: NeumannForm::Squared,
            min_step_fraction: 1.0 / 64.0,
        }
    }
}

impl ContinuationConfig {
    pub fn validate(&self) -> crate::Result<()> {
        self.solver.validate()?;
        if self.order < 4 || self.max_order < self.order || self.max_order > self.solver.n_angular / 2 {
            return Err(crate::Error::Config(format!(
                "truncation {}..={} incompatible with {} angular points",
                self.order, self.max_order, self.solver.n_angular
            )));
        }
        Ok(())
    }
}
