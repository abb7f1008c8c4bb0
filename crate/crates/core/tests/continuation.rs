use annular_euler::continuation::*;
use annular_euler::dispersion::*;
use annular_euler::geometry::CosineSeries;
use annular_euler::{Error, Problem};

fn cfg() -> ContinuationConfig {
    ContinuationConfig { order: 8, ..ContinuationConfig::default() }
}

#[test]
fn zero_perturbation_keeps_the_annulus() {
    let z = CosineSeries::zeros(8);
    let r = newton_solve_g(0.5, -2.0, &z, None, &cfg()).unwrap();
    assert!(r.eta.sup_norm() < 1e-12);
    let q = annular_euler::radial::bernoulli_q(0.5, -2.0);
    assert!((r.bernoulli[0] - q).abs() < 1e-10);
    let r = newton_solve_cal_g(0.5, 0.0, &z, &z, None, &cfg()).unwrap();
    assert!(r.response_norm() < 1e-12);
}

#[test]
fn near_bifurcation_is_rejected_with_the_mode() {
    let g = gamma_star_single(2, 0.5).unwrap() * (1.0 + 5e-4);
    let rho = CosineSeries::single_mode(2, 1e-3, 8);
    match newton_solve_g(0.5, g, &rho, None, &cfg()) {
        Err(Error::Degenerate { mode, .. }) => assert_eq!(mode, 2),
        other => panic!("expected a degeneracy error, got {other:?}"),
    }
}

#[test]
fn two_boundary_first_order_map_at_zero_vorticity() {
    for k in [2usize, 3] {
        let rho = CosineSeries::single_mode(k, 1e-4, 8);
        let r = newton_solve_cal_g(0.5, 0.0, &rho, &CosineSeries::zeros(8), None, &cfg()).unwrap();
        let (e, x) = matrix_mk(k, 0.5, 0.0).unwrap().solve((1e-4, 0.0)).unwrap();
        let xi = r.xi.as_ref().unwrap();
        let err = (r.eta.coeff(k) - e).hypot(xi.coeff(k) - x) / e.hypot(x);
        assert!(err < 1e-4, "k={k}: {err:e}");
    }
}

#[test]
fn two_phase_response_follows_dispersion() {
    let rho = CosineSeries::single_mode(3, 1e-4, 8);
    let r = newton_solve_h(0.5, 1.0, 3.0, &rho, None, &cfg()).unwrap();
    let expected = 1e-4 / (3.0 * Sigma_k(3, 0.5, 1.0, 3.0).unwrap());
    assert!((r.eta.coeff(3) - expected).abs() < 1e-3 * expected.abs());
}

#[test]
fn detection_reproduces_pair_roots() {
    let roots = gamma_star_pair(3, 0.3).unwrap().real_roots();
    let found = detect_bifurcation(&Problem::Pair { lambda: 0.3, gamma: 0.0 }, 3, (-30.0, 30.0)).unwrap();
    assert_eq!(found.len(), roots.len());
    for f in found {
        let c = f.closed_form.expect("matched to a closed form");
        assert!((f.bisection - c).abs() <= 1e-10 * c.abs().max(1.0));
    }
}

#[test]
fn branch_is_parameterised_by_the_kernel_amplitude() {
    let g0 = gamma_star_single(2, 0.5).unwrap();
    let b = trace_branch(&Problem::Single { lambda: 0.5, gamma: g0 }, 2, g0, -0.004, 4, &cfg()).unwrap();
    assert_eq!(b.points.len(), 5);
    assert_eq!(b.points[0].gamma, g0);
    assert!(b.points[0].eta.is_zero());
    for w in b.points.windows(2) {
        assert!(w[1].s < w[0].s);
    }
    for p in &b.points {
        assert_eq!(p.eta.coeff(2), p.s);
        assert!(p.residual_sup < 1e-9);
    }
    let rep = verify_branch_nontriviality(&b, 1e-9);
    assert!(rep.nontrivial && rep.not_annulus, "{:#?}", rep.points);
    assert!(rep.points[0].eta_sup == 0.0);
}
