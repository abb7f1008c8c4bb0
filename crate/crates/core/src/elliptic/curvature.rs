//! Splitting `Δψ = ∂_ννψ + H ∂_νψ + Δ_τψ` on the outer boundary.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::SpectralSolution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureDecomposition {
    pub theta: Vec<f64>,
    /// Curvature of `r = 1 + η(θ)`; the unit circle has `H = 1`.
    pub curvature: Vec<f64>,
    pub normal_flux: Vec<f64>,
    /// Laplace–Beltrami of the boundary trace of `ψ` (zero on a Dirichlet level set).
    pub tangential_laplacian: Vec<f64>,
    /// `γ − H ∂_νψ − Δ_τψ`.
    pub normal_second: Vec<f64>,
    /// `nᵀ ∇²ψ n` evaluated from the collocation Hessian.
    pub normal_second_direct: Vec<f64>,
    /// `max |normal_second − normal_second_direct|`.
    pub consistency: f64,
}

impl CurvatureDecomposition {
    /// `max − min` of `∂_ννψ` over the boundary.
    pub fn normal_second_variation(&self) -> f64 {
        let max = self.normal_second.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = self.normal_second.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }

    pub fn curvature_deviation(&self, reference: f64) -> f64 {
        self.curvature.iter().map(|h| (h - reference).abs()).fold(0.0, f64::max)
    }
}

pub fn curvature_decomposition(sol: &SpectralSolution) -> CurvatureDecomposition {
    let map = &sol.map;
    let disc = sol.discretization();
    let d = disc.derivatives(&sol.values);
    let last = map.n_radial - 1;
    let gamma = sol.kind.annulus_vorticity();
    let trace: DVector<f64> = sol.values.row(last).transpose();
    let g1 = &disc.cos.d1 * &trace;
    let g2 = &disc.cos.d2 * &trace;
    let nt = map.n_theta();
    let mut out = CurvatureDecomposition {
        theta: map.theta.clone(),
        curvature: Vec::with_capacity(nt),
        normal_flux: sol.outer_trace.clone(),
        tangential_laplacian: Vec::with_capacity(nt),
        normal_second: Vec::with_capacity(nt),
        normal_second_direct: Vec::with_capacity(nt),
        consistency: 0.0,
    };
    for j in 0..nt {
        let eta = &map.geometry.eta;
        let th = map.theta[j];
        let (r, r1, r2) = (1.0 + eta.eval(th), eta.eval_d1(th), eta.eval_d2(th));
        let jac2 = r * r + r1 * r1;
        let jac = jac2.sqrt();
        let h = (r * r + 2.0 * r1 * r1 - r * r2) / (jac2 * jac);
        let jac_ratio = (r * r1 + r1 * r2) / jac2;
        let lap_t = (g2[j] - jac_ratio * g1[j]) / jac2;
        let f = sol.outer_trace[j];
        let identity = gamma - h * f - lap_t;

        // polar Hessian at s = 1
        let (w, w1) = (map.w[j], map.w1[j]);
        let b = map.r_theta(last, j);
        let s_t = -b / w;
        let s_tt = -map.r_theta_theta(last, j) / w + 2.0 * b * w1 / (w * w);
        let (us, uss, ut, utt, ust) = (d.us[(last, j)], d.uss[(last, j)], d.ut[(last, j)], d.utt[(last, j)], d.ust[(last, j)]);
        let u_r = us / w;
        let u_rr = uss / (w * w);
        let u_t = ut + s_t * us;
        let u_rt = (ust + s_t * uss) / w - us * w1 / (w * w);
        let u_tt = utt + 2.0 * s_t * ust + s_t * s_t * uss + s_tt * us;
        let h_rr = u_rr;
        let h_rt = u_rt / r - u_t / (r * r);
        let h_tt = u_tt / (r * r) + u_r / r;
        let (nr, nt_) = (1.0 / (1.0 + r1 * r1 / (r * r)).sqrt(), -r1 / r / (1.0 + r1 * r1 / (r * r)).sqrt());
        let direct = nr * nr * h_rr + 2.0 * nr * nt_ * h_rt + nt_ * nt_ * h_tt;

        out.consistency = out.consistency.max((identity - direct).abs());
        out.curvature.push(h);
        out.tangential_laplacian.push(lap_t);
        out.normal_second.push(identity);
        out.normal_second_direct.push(direct);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::{solve_dirichlet, solve_transmission, SolverConfig};
    use crate::geometry::{AnnulusGeometry, CosineSeries};
    use crate::radial::RadialProfile;

    #[test]
    fn concentric_circle() {
        let geom = AnnulusGeometry::concentric(0.5).unwrap();
        let sol = solve_transmission(&geom, 1.0, 3.0, &SolverConfig::default()).unwrap();
        let c = curvature_decomposition(&sol);
        assert!(c.curvature_deviation(1.0) < 1e-12);
        assert!(c.tangential_laplacian.iter().all(|v| v.abs() < 1e-12));
        // ψ_rr(1) = γ₂/2
        assert!(c.normal_second.iter().all(|v| (v - 1.5).abs() < 1e-9));
        assert!(c.consistency < 1e-8);

        let sol = solve_dirichlet(&geom, -6.0, &SolverConfig::default()).unwrap();
        let c = curvature_decomposition(&sol);
        let rr = RadialProfile::single(0.5, -6.0).unwrap().stream_rr(1.0).unwrap();
        assert!(c.normal_second.iter().all(|v| (v - rr).abs() < 1e-9));
    }

    #[test]
    fn perturbed_boundary_identity_holds() {
        let eta = CosineSeries::new(vec![0.0, 0.03, 0.01]).unwrap();
        let geom = AnnulusGeometry::with_outer(0.5, eta.clone()).unwrap();
        let sol = solve_dirichlet(&geom, 2.0, &SolverConfig::default()).unwrap();
        let c = curvature_decomposition(&sol);
        assert!(c.consistency < 1e-7, "{}", c.consistency);
        assert!(c.tangential_laplacian.iter().all(|v| v.abs() < 1e-10));
        // ellipse-like check of the curvature formula by finite differences of the tangent angle
        let th = 0.7;
        let pt = |t: f64| {
            let r = 1.0 + eta.eval(t);
            (r * t.cos(), r * t.sin())
        };
        let h = 1e-4;
        let (a, b, cc) = (pt(th - h), pt(th), pt(th + h));
        let ang = |p: (f64, f64), q: (f64, f64)| (q.1 - p.1).atan2(q.0 - p.0);
        let ds = ((cc.0 - a.0).hypot(cc.1 - a.1)) / 2.0;
        let kappa = (ang(b, cc) - ang(a, b)) / ds;
        let m = sol.map.n_theta() - 1;
        let j = (0..=m).find(|&j| (sol.map.theta[j] - th).abs() < 1e-12);
        if let Some(j) = j {
            assert!((c.curvature[j] - kappa).abs() < 1e-5);
        }
        let exact = {
            let (r, r1, r2) = (1.0 + eta.eval(th), eta.eval_d1(th), eta.eval_d2(th));
            (r * r + 2.0 * r1 * r1 - r * r2) / (r * r + r1 * r1).powf(1.5)
        };
        assert!((exact - kappa).abs() < 1e-5);
    }
}
