//! Boundary-coefficient unknowns and the projected overdetermined residual.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::elliptic::{solve, FieldKind, SolverConfig};
use crate::geometry::{project_half_grid, AnnulusGeometry, CosineSeries};
use crate::radial::{bernoulli_q, neumann_constants};
use crate::{Problem, Result};

/// How the Neumann condition enters the residual on a free boundary carrying
/// a Bernoulli condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeumannForm {
    /// `f² − Q − ρ`.
    Squared,
    /// `f − q − ρ` with the signed flux `q` of the trivial solution.
    Signed,
}

/// Point in the unknown space, decoded.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub gamma: f64,
    pub eta: CosineSeries,
    pub xi: CosineSeries,
    /// Corrections of the boundary constants (outer, inner).
    pub delta: (f64, f64),
}

/// Unknowns: optional vorticity, free cosine modes of `η` (and `ξ` for the
/// two-boundary problem), and one constant correction per free boundary,
/// paired with the mean of the residual on that boundary.
#[derive(Debug, Clone)]
pub struct BoundarySystem {
    pub problem: Problem,
    pub order: usize,
    pub gamma_free: bool,
    pub eta_pins: Vec<(usize, f64)>,
    pub xi_pins: Vec<(usize, f64)>,
    pub rho_out: CosineSeries,
    pub rho_in: CosineSeries,
    pub form: NeumannForm,
    pub solver: SolverConfig,
}

/// What an entry of the unknown vector stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unknown {
    Gamma,
    Eta(usize),
    Xi(usize),
    DeltaOuter,
    DeltaInner,
}

impl BoundarySystem {
    pub fn new(problem: Problem, order: usize, solver: SolverConfig) -> Self {
        Self {
            problem,
            order,
            gamma_free: false,
            eta_pins: Vec::new(),
            xi_pins: Vec::new(),
            rho_out: CosineSeries::zeros(order),
            rho_in: CosineSeries::zeros(order),
            form: NeumannForm::Squared,
            solver,
        }
    }

    fn is_pair(&self) -> bool {
        matches!(self.problem, Problem::Pair { .. })
    }

    fn pinned(pins: &[(usize, f64)], k: usize) -> Option<f64> {
        pins.iter().find(|(m, _)| *m == k).map(|(_, v)| *v)
    }

    pub fn unknowns(&self) -> Vec<Unknown> {
        let mut u = Vec::new();
        if self.gamma_free {
            u.push(Unknown::Gamma);
        }
        for k in 1..=self.order {
            if Self::pinned(&self.eta_pins, k).is_none() {
                u.push(Unknown::Eta(k));
            }
        }
        if self.is_pair() {
            for k in 1..=self.order {
                if Self::pinned(&self.xi_pins, k).is_none() {
                    u.push(Unknown::Xi(k));
                }
            }
        }
        u.push(Unknown::DeltaOuter);
        if self.is_pair() {
            u.push(Unknown::DeltaInner);
        }
        u
    }

    pub fn n_equations(&self) -> usize {
        if self.is_pair() {
            2 * (self.order + 1)
        } else {
            self.order + 1
        }
    }

    /// Mode index an unknown refers to (0 for scalars).
    pub fn mode_of(&self, index: usize) -> usize {
        match self.unknowns()[index] {
            Unknown::Eta(k) | Unknown::Xi(k) => k,
            _ => 0,
        }
    }

    pub fn decode(&self, x: &DVector<f64>) -> State {
        let mut st = State {
            gamma: self.problem.parameter(),
            eta: CosineSeries::zeros(self.order),
            xi: CosineSeries::zeros(self.order),
            delta: (0.0, 0.0),
        };
        for &(k, v) in &self.eta_pins {
            st.eta.set_coeff(k, v);
        }
        for &(k, v) in &self.xi_pins {
            st.xi.set_coeff(k, v);
        }
        for (i, u) in self.unknowns().into_iter().enumerate() {
            match u {
                Unknown::Gamma => st.gamma = x[i],
                Unknown::Eta(k) => st.eta.set_coeff(k, x[i]),
                Unknown::Xi(k) => st.xi.set_coeff(k, x[i]),
                Unknown::DeltaOuter => st.delta.0 = x[i],
                Unknown::DeltaInner => st.delta.1 = x[i],
            }
        }
        st
    }

    pub fn encode(&self, st: &State) -> DVector<f64> {
        let u = self.unknowns();
        DVector::from_iterator(
            u.len(),
            u.into_iter().map(|u| match u {
                Unknown::Gamma => st.gamma,
                Unknown::Eta(k) => st.eta.coeff(k),
                Unknown::Xi(k) => st.xi.coeff(k),
                Unknown::DeltaOuter => st.delta.0,
                Unknown::DeltaInner => st.delta.1,
            }),
        )
    }

    /// Constants the traces are compared with at vorticity `gamma`.
    pub fn reference(&self, gamma: f64) -> (f64, f64) {
        let lambda = self.problem.lambda();
        match (self.problem, self.form) {
            (Problem::Single { .. }, NeumannForm::Squared) => (bernoulli_q(lambda, gamma), 0.0),
            (Problem::Single { .. }, NeumannForm::Signed) => (neumann_constants(lambda, gamma).0, 0.0),
            (Problem::TwoPhase { .. }, NeumannForm::Squared) => (gamma * gamma / 4.0, 0.0),
            (Problem::TwoPhase { .. }, NeumannForm::Signed) => (gamma / 2.0, 0.0),
            (Problem::Pair { .. }, _) => neumann_constants(lambda, gamma),
        }
    }

    /// Bernoulli data of a solved state: `Q` for a single free boundary,
    /// `(q_out, q_in)` for the pair problem.
    pub fn bernoulli(&self, st: &State) -> Vec<f64> {
        let (r_out, r_in) = self.reference(st.gamma);
        match (self.problem, self.form) {
            (Problem::Pair { .. }, _) => vec![r_out + st.delta.0, r_in + st.delta.1],
            (_, NeumannForm::Squared) => vec![r_out + st.delta.0],
            (_, NeumannForm::Signed) => vec![(r_out + st.delta.0).powi(2)],
        }
    }

    /// Residual samples on the outer (and inner) boundary half grid.
    pub fn samples(&self, st: &State) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
        let lambda = self.problem.lambda();
        let (geom, kind) = match self.problem {
            Problem::Single { .. } => {
                (AnnulusGeometry::with_outer(lambda, st.eta.clone())?, FieldKind::SinglePhase { gamma: st.gamma })
            }
            Problem::TwoPhase { gamma1, .. } => (
                AnnulusGeometry::with_outer(lambda, st.eta.clone())?,
                FieldKind::TwoPhase { gamma1, gamma2: st.gamma },
            ),
            Problem::Pair { .. } => (
                AnnulusGeometry::new(lambda, st.eta.clone(), st.xi.clone())?,
                FieldKind::SinglePhase { gamma: st.gamma },
            ),
        };
        let sol = solve(&geom, kind, &self.solver)?;
        let (r_out, r_in) = self.reference(st.gamma);
        let theta = &sol.map.theta;
        let squared = self.form == NeumannForm::Squared && !self.is_pair();
        let outer: Vec<f64> = sol
            .outer_trace
            .iter()
            .zip(theta)
            .map(|(f, &t)| {
                let lhs = if squared { f * f } else { *f };
                lhs - r_out - st.delta.0 - self.rho_out.eval(t)
            })
            .collect();
        let inner = if self.is_pair() {
            let tr = sol.inner_trace.as_ref().expect("Dirichlet solves carry an inner trace");
            Some(tr.iter().zip(theta).map(|(f, &t)| f - r_in - st.delta.1 - self.rho_in.eval(t)).collect())
        } else {
            None
        };
        Ok((outer, inner))
    }

    fn project(&self, samples: &[f64], out: &mut Vec<f64>) -> Result<()> {
        let (modes, mean) = project_half_grid(samples, self.order)?;
        out.push(mean);
        out.extend_from_slice(modes.coeffs());
        Ok(())
    }

    /// Mean and modes `1..=K` of every residual trace.
    pub fn residual(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let st = self.decode(x);
        let (outer, inner) = self.samples(&st)?;
        let mut v = Vec::with_capacity(self.n_equations());
        self.project(&outer, &mut v)?;
        if let Some(inner) = inner {
            self.project(&inner, &mut v)?;
        }
        Ok(DVector::from_vec(v))
    }

    /// Pointwise sup of the residual samples (including untracked modes).
    pub fn grid_sup(&self, st: &State) -> Result<f64> {
        let (outer, inner) = self.samples(st)?;
        Ok(outer.iter().chain(inner.iter().flatten()).map(|v| v.abs()).fold(0.0, f64::max))
    }
}
