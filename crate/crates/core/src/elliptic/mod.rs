//! Spectral solver on perturbed annuli and the overdetermined residual maps
//! built from its boundary traces.

mod curvature;
mod shape;
mod solver;

pub use curvature::*;
pub use shape::*;
pub use solver::*;

use serde::{Deserialize, Serialize};

use crate::geometry::{project_half_grid, AnnulusGeometry, CosineSeries};
use crate::radial::{bernoulli_q, bernoulli_q_two_phase, neumann_constants};
use crate::Result;

/// Boundary residual split into its mean and zero-mean cosine part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualTrace {
    pub mean: f64,
    pub modes: CosineSeries,
    /// `max_j |mean + Σ modes cos(kθ_j)|` on the angular grid.
    pub sup_norm: f64,
    /// `max_j |samples_j|` before truncation.
    pub grid_sup: f64,
    /// Largest pointwise difference between the samples and the truncated reconstruction.
    pub tail: f64,
}

impl ResidualTrace {
    /// Decompose half-grid samples `θ_j = πj/M`.
    pub fn from_samples(samples: &[f64], order: usize) -> Result<Self> {
        let (modes, mean) = project_half_grid(samples, order)?;
        let m = (samples.len() - 1) as f64;
        let (mut sup, mut grid_sup, mut tail) = (0.0f64, 0.0f64, 0.0f64);
        for (j, v) in samples.iter().enumerate() {
            let rec = mean + modes.eval(std::f64::consts::PI * j as f64 / m);
            sup = sup.max(rec.abs());
            grid_sup = grid_sup.max(v.abs());
            tail = tail.max((v - rec).abs());
        }
        Ok(Self { mean, modes, sup_norm: sup, grid_sup, tail })
    }

    pub fn coeff(&self, k: usize) -> f64 {
        if k == 0 {
            self.mean
        } else {
            self.modes.coeff(k)
        }
    }
}

fn outer_geometry(lambda: f64, eta: &CosineSeries) -> Result<AnnulusGeometry> {
    AnnulusGeometry::with_outer(lambda, eta.clone())
}

/// `f² − Q^γ` on the outer boundary of the single-phase problem.
pub fn residual_g(lambda: f64, gamma: f64, eta: &CosineSeries, config: &SolverConfig) -> Result<ResidualTrace> {
    let sol = solve_dirichlet(&outer_geometry(lambda, eta)?, gamma, config)?;
    let q = bernoulli_q(lambda, gamma);
    let samples: Vec<f64> = sol.outer_trace.iter().map(|f| f * f - q).collect();
    ResidualTrace::from_samples(&samples, config.modes)
}

/// `F² − γ₂²/4` on the outer boundary of the two-phase problem.
pub fn residual_h(lambda: f64, gamma1: f64, gamma2: f64, eta: &CosineSeries, config: &SolverConfig) -> Result<ResidualTrace> {
    let sol = solve_transmission(&outer_geometry(lambda, eta)?, gamma1, gamma2, config)?;
    let q = bernoulli_q_two_phase(gamma2);
    let samples: Vec<f64> = sol.outer_trace.iter().map(|f| f * f - q).collect();
    ResidualTrace::from_samples(&samples, config.modes)
}

/// Signed flux residuals `(f_out − q_out, f_in − q_in)` of the two-boundary problem.
pub fn residual_cal_g(
    lambda: f64,
    gamma: f64,
    eta: &CosineSeries,
    xi: &CosineSeries,
    config: &SolverConfig,
) -> Result<(ResidualTrace, ResidualTrace)> {
    let geom = AnnulusGeometry::new(lambda, eta.clone(), xi.clone())?;
    let sol = solve_dirichlet(&geom, gamma, config)?;
    let (q_out, q_in) = neumann_constants(lambda, gamma);
    let outer: Vec<f64> = sol.outer_trace.iter().map(|f| f - q_out).collect();
    let inner: Vec<f64> = sol
        .inner_trace
        .as_ref()
        .expect("single-phase solutions carry an inner trace")
        .iter()
        .map(|f| f - q_in)
        .collect();
    Ok((ResidualTrace::from_samples(&outer, config.modes)?, ResidualTrace::from_samples(&inner, config.modes)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::{matrix_mk, sigma_k, Sigma_k};
    use crate::radial::RadialProfile;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    #[test]
    fn concentric_dirichlet_matches_closed_form() {
        let lam = 0.5;
        for &g in &[0.0, -6.0] {
            let sol = solve_dirichlet(&AnnulusGeometry::concentric(lam).unwrap(), g, &cfg()).unwrap();
            let p = RadialProfile::single(lam, g).unwrap();
            assert!(sol.max_error_against(|r, _| p.stream(r).unwrap()) < 1e-10);
            let (qo, qi) = neumann_constants(lam, g);
            assert!(sol.outer_trace.iter().all(|f| (f - qo).abs() < 1e-10));
            assert!(sol.inner_trace.as_ref().unwrap().iter().all(|f| (f - qi).abs() < 1e-10));
        }
    }

    #[test]
    fn concentric_transmission_matches_closed_form() {
        let lam = 0.5;
        for &(g1, g2) in &[(1.0, 1.0), (1.0, 3.0), (-2.0, 0.5)] {
            let sol = solve_transmission(&AnnulusGeometry::concentric(lam).unwrap(), g1, g2, &cfg()).unwrap();
            let p = RadialProfile::two_phase(lam, g1, g2).unwrap();
            assert!(sol.max_error_against(|r, _| p.stream(r).unwrap()) < 1e-10);
            assert!((sol.core_value(0.0, 0.0).unwrap() - p.stream(0.0).unwrap()).abs() < 1e-10);
            assert!(sol.outer_trace.iter().all(|f| (f * f - g2 * g2 / 4.0).abs() < 1e-10));
        }
    }

    /// Circle centred at `(d, 0)` whose polar graph `r(θ)` has unit mean, as a
    /// cosine series together with its radius.
    fn shifted_circle(d: f64, order: usize) -> (CosineSeries, f64) {
        let n = 4 * order + 8;
        let graph = |rho: f64| -> Vec<f64> {
            (0..n)
                .map(|j| {
                    let t = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                    d * t.cos() + (rho * rho - d * d * t.sin().powi(2)).sqrt()
                })
                .collect()
        };
        let mut rho = 1.0;
        for _ in 0..50 {
            let mean = graph(rho).iter().sum::<f64>() / n as f64;
            rho += 1.0 - mean;
        }
        let samples: Vec<f64> = graph(rho).iter().map(|r| r - 1.0).collect();
        let (series, mean) = crate::geometry::project_to_cosines(&samples, order).unwrap();
        assert!(mean.abs() < 1e-15);
        (series, rho)
    }

    #[test]
    fn equal_phases_reproduce_shifted_disk() {
        let (lam, g, d) = (0.4, 2.0, 0.05);
        let (eta, rho) = shifted_circle(d, 24);
        let geom = AnnulusGeometry::with_outer(lam, eta).unwrap();
        let sol = solve_transmission(&geom, g, g, &cfg()).unwrap();
        let exact = |r: f64, t: f64| g * ((r * t.cos() - d).powi(2) + (r * t.sin()).powi(2) - rho * rho) / 4.0;
        assert!(sol.max_error_against(exact) < 1e-10, "{}", sol.max_error_against(exact));
        assert!((sol.core_value(0.0, 0.0).unwrap() - exact(0.0, 0.0)).abs() < 1e-10);
        // |∇ψ| = γρ/2 on the shifted circle
        assert!(sol.outer_trace.iter().all(|f| (f - g * rho / 2.0).abs() < 1e-9));
    }

    #[test]
    fn perturbed_solution_satisfies_pde() {
        let eta = CosineSeries::new(vec![0.03, -0.01]).unwrap();
        let xi = CosineSeries::new(vec![0.0, 0.02]).unwrap();
        let geom = AnnulusGeometry::new(0.5, eta, xi).unwrap();
        let sol = solve_dirichlet(&geom, -3.0, &cfg()).unwrap();
        assert!(sol.interior_residual() < 1e-8, "{}", sol.interior_residual());
    }

    #[test]
    fn trivial_residuals_vanish() {
        let z = CosineSeries::zeros(4);
        let g = residual_g(0.5, -6.0, &z, &cfg()).unwrap();
        assert!(g.sup_norm < 1e-10 && g.tail < 1e-10);
        let h = residual_h(0.5, 1.0, 3.0, &z, &cfg()).unwrap();
        assert!(h.sup_norm < 1e-10);
        let (o, i) = residual_cal_g(0.5, 0.0, &z, &z, &cfg()).unwrap();
        assert!(o.sup_norm < 1e-10 && i.sup_norm < 1e-10);
    }

    #[test]
    fn linear_response_matches_dispersion() {
        let (lam, g, k, eps) = (0.5, -6.0, 2, 1e-4);
        let c = cfg();
        let plus = residual_g(lam, g, &CosineSeries::single_mode(k, eps, 4), &c).unwrap();
        let minus = residual_g(lam, g, &CosineSeries::single_mode(k, -eps, 4), &c).unwrap();
        let fd = (plus.coeff(k) - minus.coeff(k)) / (2.0 * eps);
        let (qo, _) = neumann_constants(lam, g);
        let exact = 2.0 * qo * sigma_k(k, lam, g).unwrap();
        assert!((fd - exact).abs() < 1e-6 * exact.abs(), "{fd} vs {exact}");

        let (g1, g2) = (1.0, 3.0);
        let plus = residual_h(lam, g1, g2, &CosineSeries::single_mode(k, eps, 4), &c).unwrap();
        let minus = residual_h(lam, g1, g2, &CosineSeries::single_mode(k, -eps, 4), &c).unwrap();
        let fd = (plus.coeff(k) - minus.coeff(k)) / (2.0 * eps);
        let exact = g2 * Sigma_k(k, lam, g1, g2).unwrap();
        assert!((fd - exact).abs() < 1e-6 * exact.abs(), "{fd} vs {exact}");

        let m = matrix_mk(k, lam, g).unwrap();
        let z = CosineSeries::zeros(4);
        let e = CosineSeries::single_mode(k, eps, 4);
        let (po, pi) = residual_cal_g(lam, g, &z, &e, &c).unwrap();
        let (mo, mi) = residual_cal_g(lam, g, &z, &e.scaled(-1.0), &c).unwrap();
        let col = ((po.coeff(k) - mo.coeff(k)) / (2.0 * eps), (pi.coeff(k) - mi.coeff(k)) / (2.0 * eps));
        assert!((col.0 - m.b).abs() < 1e-6 * m.b.abs(), "{} vs {}", col.0, m.b);
        assert!((col.1 - m.d).abs() < 1e-6 * m.d.abs(), "{} vs {}", col.1, m.d);
    }

    #[test]
    fn residual_trace_bookkeeping() {
        let m = 16;
        let samples: Vec<f64> = (0..=m)
            .map(|j| {
                let t = std::f64::consts::PI * j as f64 / m as f64;
                0.5 + 2.0 * (3.0 * t).cos()
            })
            .collect();
        let r = ResidualTrace::from_samples(&samples, 6).unwrap();
        assert!((r.mean - 0.5).abs() < 1e-14 && (r.coeff(3) - 2.0).abs() < 1e-14);
        assert!((r.sup_norm - 2.5).abs() < 1e-12 && r.tail < 1e-13);
    }
}
