//! Shape derivatives for single-mode boundary perturbations: closed-form
//! harmonic fields and a finite-difference check on the fixed annulus.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dispersion::{harmonic_coeffs_single, harmonic_coeffs_two_phase, pair_harmonic_coeffs};
use crate::geometry::{AnnulusGeometry, CosineSeries};
use crate::{Error, Problem, Result};

use super::{solve, FieldKind, SolverConfig, SpectralSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Outer,
    Inner,
}

/// Mode-`k` shape derivative `ψ'(r,θ) = R(r) cos(kθ)` for a unit perturbation
/// `cos(kθ)` of one boundary: `R(r) = a r^{−k} + b r^k` on the annulus and
/// `core r^k` in the two-phase core disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeMode {
    pub k: usize,
    pub lambda: f64,
    pub a: f64,
    pub b: f64,
    pub core: Option<f64>,
}

impl ShapeMode {
    pub fn radial(&self, r: f64) -> f64 {
        match self.core {
            Some(d) if r < self.lambda => d * r.powi(self.k as i32),
            _ => self.a * r.powi(-(self.k as i32)) + self.b * r.powi(self.k as i32),
        }
    }

    pub fn value(&self, r: f64, theta: f64) -> f64 {
        self.radial(r) * (self.k as f64 * theta).cos()
    }
}

pub fn shape_derivative_closed(problem: &Problem, k: usize, boundary: Boundary) -> Result<ShapeMode> {
    let lambda = problem.lambda();
    let (a, b, core) = match (*problem, boundary) {
        (Problem::Single { gamma, .. }, Boundary::Outer) => {
            let (a, b) = harmonic_coeffs_single(k, lambda, gamma)?;
            (a, b, None)
        }
        (Problem::TwoPhase { gamma1, gamma2, .. }, Boundary::Outer) => {
            let (d, e, f) = harmonic_coeffs_two_phase(k, lambda, gamma1, gamma2)?;
            (e, f, Some(d))
        }
        (Problem::Pair { gamma, .. }, Boundary::Outer) => {
            let c = pair_harmonic_coeffs(k, lambda, gamma)?;
            (c.outer_a, c.outer_b, None)
        }
        (Problem::Pair { gamma, .. }, Boundary::Inner) => {
            let c = pair_harmonic_coeffs(k, lambda, gamma)?;
            (c.inner_c, c.inner_d, None)
        }
        (_, Boundary::Inner) => {
            return Err(Error::Config(format!("the {} problem has a fixed inner boundary", problem.kind().name())))
        }
    };
    Ok(ShapeMode { k, lambda, a, b, core })
}

fn field_kind(problem: &Problem) -> FieldKind {
    match *problem {
        Problem::Single { gamma, .. } | Problem::Pair { gamma, .. } => FieldKind::SinglePhase { gamma },
        Problem::TwoPhase { gamma1, gamma2, .. } => FieldKind::TwoPhase { gamma1, gamma2 },
    }
}

fn perturbed(problem: &Problem, outer: &CosineSeries, inner: &CosineSeries, t: f64, config: &SolverConfig) -> Result<SpectralSolution> {
    let geom = AnnulusGeometry::new(problem.lambda(), outer.scaled(t), inner.scaled(t))?;
    solve(&geom, field_kind(problem), config)
}

/// Finite-difference shape derivative on the concentric collocation grid:
/// `(ψ_t ∘ (Id + tΦ) − ψ_0)/t − ∂_r ψ_0 · h_r`, where the displacement
/// `h_r = (1−s) h_in + s h_out` is the flattening map's radial velocity.
/// First order in `t`.
pub fn shape_derivative_fd(
    problem: &Problem,
    outer: &CosineSeries,
    inner: &CosineSeries,
    t: f64,
    config: &SolverConfig,
) -> Result<DMatrix<f64>> {
    if problem.kind() == crate::ProblemKind::TwoPhase && !inner.is_zero() {
        return Err(Error::Config("the two-phase interface is fixed".into()));
    }
    if !(t > 0.0) {
        return Err(Error::Config(format!("finite-difference step must be positive, got {t}")));
    }
    let zero = CosineSeries::zeros(1);
    let base = perturbed(problem, &zero, &zero, 0.0, config)?;
    let moved = perturbed(problem, outer, inner, t, config)?;
    Ok(fd_from(&base, &moved, outer, inner, t))
}

fn fd_from(base: &SpectralSolution, moved: &SpectralSolution, outer: &CosineSeries, inner: &CosineSeries, t: f64) -> DMatrix<f64> {
    let ur = base.radial_derivative();
    let map = &base.map;
    DMatrix::from_fn(map.n_radial, map.n_theta(), |i, j| {
        let th = map.theta[j];
        let s = map.s[i];
        let h = (1.0 - s) * inner.eval(th) + s * outer.eval(th);
        (moved.values[(i, j)] - base.values[(i, j)]) / t - ur[(i, j)] * h
    })
}

/// One Richardson pass `2 D(t/2) − D(t)`, second order in `t`.
pub fn shape_derivative_richardson(
    problem: &Problem,
    outer: &CosineSeries,
    inner: &CosineSeries,
    t: f64,
    config: &SolverConfig,
) -> Result<DMatrix<f64>> {
    let full = shape_derivative_fd(problem, outer, inner, t, config)?;
    let half = shape_derivative_fd(problem, outer, inner, t / 2.0, config)?;
    Ok(half * 2.0 - full)
}

/// `max |field − mode|` over the concentric collocation grid of `λ`.
pub fn shape_error(field: &DMatrix<f64>, mode: &ShapeMode, config: &SolverConfig) -> Result<f64> {
    let map = crate::geometry::FlatteningMap::new(&AnnulusGeometry::concentric(mode.lambda)?, config.n_radial, config.n_angular)?;
    let mut worst: f64 = 0.0;
    for j in 0..map.n_theta() {
        for i in 0..map.n_radial {
            worst = worst.max((field[(i, j)] - mode.value(map.r(i, j), map.theta[j])).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::neumann_constants;

    #[test]
    fn closed_form_boundary_values() {
        let single = Problem::Single { lambda: 0.5, gamma: -6.0 };
        let m = shape_derivative_closed(&single, 3, Boundary::Outer).unwrap();
        let (qo, qi) = neumann_constants(0.5, -6.0);
        assert!(m.radial(0.5).abs() < 1e-14);
        assert!((m.radial(1.0) + qo).abs() < 1e-13);
        let pair = Problem::Pair { lambda: 0.5, gamma: -6.0 };
        let m = shape_derivative_closed(&pair, 2, Boundary::Inner).unwrap();
        assert!(m.radial(1.0).abs() < 1e-14);
        // ψ' = −ψ_r ξ with ψ_r(λ) = −q_in
        assert!((m.radial(0.5) - qi).abs() < 1e-12);
        assert!(shape_derivative_closed(&single, 2, Boundary::Inner).is_err());
    }

    #[test]
    fn zero_direction_gives_zero_field() {
        let p = Problem::Single { lambda: 0.5, gamma: 0.0 };
        let z = CosineSeries::zeros(2);
        let f = shape_derivative_fd(&p, &z, &z, 1e-4, &SolverConfig::default()).unwrap();
        assert!(f.amax() < 1e-9);
    }

    #[test]
    fn fd_matches_closed_form_single_mode_one() {
        let p = Problem::Single { lambda: 0.5, gamma: 0.0 };
        let cfg = SolverConfig::default();
        let e = CosineSeries::single_mode(1, 1.0, 1);
        let f = shape_derivative_fd(&p, &e, &CosineSeries::zeros(1), 1e-4, &cfg).unwrap();
        let m = shape_derivative_closed(&p, 1, Boundary::Outer).unwrap();
        assert!(shape_error(&f, &m, &cfg).unwrap() < 1e-3);
    }
}
