use annular_euler::dispersion::*;
use annular_euler::elliptic::{solve_dirichlet, solve_transmission, SolverConfig};
use annular_euler::geometry::*;
use annular_euler::radial::*;
use proptest::prelude::*;

fn coeffs(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 1..=max)
}

proptest! {
    #[test]
    fn cosine_projection_round_trip(c in coeffs(20)) {
        let f = CosineSeries::new(c.clone()).unwrap();
        let n = 128;
        let samples: Vec<f64> = (0..n).map(|j| f.eval(2.0 * std::f64::consts::PI * j as f64 / n as f64)).collect();
        let (g, mean) = project_to_cosines(&samples, c.len()).unwrap();
        prop_assert!(mean.abs() < 1e-14);
        for k in 1..=c.len() {
            prop_assert!((g.coeff(k) - c[k - 1]).abs() < 1e-13);
        }
    }

    #[test]
    fn odd_functions_project_to_zero(c in coeffs(10)) {
        let n = 128;
        let samples: Vec<f64> = (0..n)
            .map(|j| {
                let t = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                c.iter().enumerate().map(|(k, a)| a * ((k + 1) as f64 * t).sin()).sum()
            })
            .collect();
        let (g, mean) = project_to_cosines(&samples, 20).unwrap();
        prop_assert!(mean.abs() < 1e-12);
        prop_assert!(g.coeffs().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn radial_ode_holds(lambda in 0.05f64..0.95, gamma in -50.0f64..50.0, u in 0.0f64..1.0) {
        let p = RadialProfile::single(lambda, gamma).unwrap();
        let r = lambda + u * (1.0 - lambda);
        let res = p.stream_rr(r).unwrap() + p.stream_r(r).unwrap() / r - gamma;
        let scale = 1.0 + gamma.abs() + log_coefficient(lambda, gamma).abs() / (r * r);
        prop_assert!(res.abs() < 1e-13 * scale, "{res}");
    }

    #[test]
    fn two_phase_ode_and_jumps(lambda in 0.05f64..0.95, g1 in -20.0f64..20.0, g2 in -20.0f64..20.0, u in 0.0f64..1.0) {
        let p = RadialProfile::two_phase(lambda, g1, g2).unwrap();
        let scale = 1.0 + g1.abs() + g2.abs();
        for (r, g) in [((1e-3 + 0.998 * u) * lambda, g1), (lambda + u * (1.0 - lambda), g2)] {
            let res = p.stream_rr(r).unwrap() + p.stream_r(r).unwrap() / r - g;
            prop_assert!(res.abs() < 1e-12 * scale);
        }
        let (below, above) = (lambda * (1.0 - 1e-15), lambda * (1.0 + 1e-15));
        prop_assert!((p.stream(below).unwrap() - p.stream(above).unwrap()).abs() < 1e-13 * scale);
        // the flux weighted by the inverse vorticity is continuous; here ψ_r/γ is the same on both sides
        if g1 != 0.0 && g2 != 0.0 {
            let (fb, fa) = (p.stream_r(below).unwrap() / g1, p.stream_r(above).unwrap() / g2);
            prop_assert!((fb - fa).abs() < 1e-13 * (1.0 + fa.abs()));
        }
    }

    #[test]
    fn bernoulli_constant_is_squared_flux(lambda in 0.05f64..0.95, gamma in -50.0f64..50.0) {
        let p = RadialProfile::single(lambda, gamma).unwrap();
        let f = p.stream_r(1.0).unwrap();
        prop_assert!((bernoulli_q(lambda, gamma) - f * f).abs() <= 1e-12 * (f * f).max(1.0));
    }

    #[test]
    fn sigma_path_independence(k in 1usize..200, lambda in 0.05f64..0.95, gamma in -100.0f64..100.0) {
        let a = sigma_k(k, lambda, gamma).unwrap();
        let b = sigma_k_closed(k, lambda, gamma).unwrap();
        // both evaluations round at the scale of their largest terms
        let (ca, cb) = harmonic_coeffs_single(k, lambda, gamma).unwrap();
        let scale = k as f64 * (ca.abs() + cb.abs()) + log_coefficient(lambda, gamma).abs() + gamma.abs();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(scale), "{a} vs {b}");
    }

    #[test]
    fn roots_are_kernels(k in 1usize..100, lambda in 0.1f64..0.9, g1 in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0]) {
        let g = gamma_star_single(k, lambda).unwrap();
        prop_assert!(sigma_k(k, lambda, g).unwrap().abs() < 1e-9);
        let g2 = gamma2_star(k, lambda, g1).unwrap();
        if let Ok(s) = Sigma_k(k, lambda, g1, g2) {
            let slope = sigma_two_phase_slope(k, lambda, g1, g2).unwrap();
            prop_assert!(s.abs() <= 1e-13 * slope.abs() * g2.abs().max(1e-300), "{s}");
        }
        let m = matrix_mk(k, lambda, 0.0).unwrap();
        for root in roots_of_det(&m).real_roots() {
            let at = m.at(root);
            let scale = at.a.abs().max(at.b.abs()).max(at.c.abs()).max(at.d.abs());
            prop_assert!(at.det().abs() <= 1e-12 * scale * scale);
        }
    }

    #[test]
    fn pair_kernel_is_not_a_translation(k in 2usize..20, lambda in 0.1f64..0.9) {
        let m = matrix_mk(k, lambda, 0.0).unwrap();
        for root in roots_of_det(&m).real_roots() {
            let (alpha, beta) = m.at(root).null_vector();
            prop_assert!((alpha - beta).abs() > 1e-6 * alpha.abs().max(beta.abs()));
        }
    }

    #[test]
    fn mode_one_pair_matrix_kills_translations(lambda in 0.05f64..0.95, gamma in -50.0f64..50.0) {
        let m = matrix_mk(1, lambda, gamma).unwrap();
        let scale = m.a.abs().max(m.c.abs()).max(1.0);
        prop_assert!((m.a + m.b).abs() < 1e-12 * scale && (m.c + m.d).abs() < 1e-12 * scale);
    }
}

#[test]
fn mode_one_single_phase_root_lies_below_minus_four() {
    for i in 1..200 {
        let lambda = i as f64 / 200.0;
        assert!(gamma_star_single(1, lambda).unwrap() < -4.0);
    }
}

/// The sign pattern claimed for higher single-phase roots does not hold; keep
/// one explicit counterexample so a regression in the closed form is noticed.
#[test]
fn higher_mode_roots_change_sign() {
    let g = gamma_star_single(2, 0.5).unwrap();
    assert!(g < 0.0);
    assert!(sigma_k(2, 0.5, g).unwrap().abs() < 1e-12);
    assert!(gamma_star_single(3, 0.3).unwrap() > 0.0);
}

#[test]
fn concentric_flattening_has_no_angular_dependence() {
    let map = FlatteningMap::new(&AnnulusGeometry::concentric(0.4).unwrap(), 16, 32).unwrap();
    for i in 0..map.n_radial {
        for j in 0..map.n_theta() {
            assert_eq!(map.r_theta(i, j), 0.0);
            assert_eq!(map.r_theta_theta(i, j), 0.0);
        }
    }
}

#[test]
fn traces_are_resolution_independent() {
    let eta = CosineSeries::single_mode(1, 0.01, 1);
    let geom = AnnulusGeometry::with_outer(0.5, eta).unwrap();
    let base = SolverConfig::default();
    let fine = SolverConfig { n_radial: 2 * base.n_radial, n_angular: 2 * base.n_angular, ..base };
    for two_phase in [false, true] {
        let (a, b) = if two_phase {
            (solve_transmission(&geom, 1.0, 3.0, &base).unwrap(), solve_transmission(&geom, 1.0, 3.0, &fine).unwrap())
        } else {
            (solve_dirichlet(&geom, -6.0, &base).unwrap(), solve_dirichlet(&geom, -6.0, &fine).unwrap())
        };
        let ca = project_half_grid(&a.outer_trace, 24).unwrap();
        let cb = project_half_grid(&b.outer_trace, 24).unwrap();
        assert!((ca.1 - cb.1).abs() < 1e-9);
        let diff = ca.0.sub(&cb.0).l1_norm();
        assert!(diff < 1e-9, "two_phase={two_phase}: {diff:e}");
    }
}
