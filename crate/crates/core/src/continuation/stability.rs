//! Free boundaries under perturbed Neumann data, solved by Newton's method at
//! fixed vorticity, with the first-order prediction from the dispersion
//! relations.

use serde::{Deserialize, Serialize};

use super::newton::newton;
use super::system::{BoundarySystem, NeumannForm, State};
use super::ContinuationConfig;
use crate::dispersion::{gamma2_star, gamma_star_single, matrix_mk, roots_of_det, sigma_k, Sigma_k};
use crate::geometry::CosineSeries;
use crate::radial::neumann_constants;
use crate::{Error, Problem, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityResult {
    pub rho: CosineSeries,
    pub rho_inner: Option<CosineSeries>,
    pub eta: CosineSeries,
    pub xi: Option<CosineSeries>,
    /// First-order response predicted by the closed-form linearization.
    pub predicted: CosineSeries,
    pub predicted_xi: Option<CosineSeries>,
    /// `Q`, or `(q_out, q_in)` for the two-boundary problem.
    pub bernoulli: Vec<f64>,
    pub form: NeumannForm,
    pub newton_iters: usize,
    pub residual_sup: f64,
}

impl StabilityResult {
    /// `max(‖η − predicted‖_sup, ‖ξ − predicted_ξ‖_sup)`.
    pub fn first_order_defect(&self) -> f64 {
        let outer = self.eta.sub(&self.predicted).sup_norm();
        match (&self.xi, &self.predicted_xi) {
            (Some(x), Some(p)) => outer.max(x.sub(p).sup_norm()),
            _ => outer,
        }
    }

    /// Largest mode-`k` deviation from the prediction.
    pub fn mode_defect(&self, k: usize) -> f64 {
        let outer = (self.eta.coeff(k) - self.predicted.coeff(k)).abs();
        match (&self.xi, &self.predicted_xi) {
            (Some(x), Some(p)) => outer.max((x.coeff(k) - p.coeff(k)).abs()),
            _ => outer,
        }
    }

    pub fn response_norm(&self) -> f64 {
        let outer = self.eta.sup_norm();
        self.xi.as_ref().map_or(outer, |x| outer.max(x.sup_norm()))
    }
}

fn near(gamma: f64, root: f64) -> bool {
    (gamma - root).abs() <= 1e-3 * root.abs().max(1.0)
}

/// Rejects vorticities within `10⁻³` (relative) of a bifurcation value of any
/// represented mode.
pub fn check_nondegenerate_single(lambda: f64, gamma: f64, order: usize) -> Result<()> {
    for k in 1..=order {
        let root = gamma_star_single(k, lambda)?;
        if near(gamma, root) {
            return Err(Error::Degenerate {
                mode: k,
                detail: format!("γ = {gamma} lies within 1e-3 of the mode-{k} bifurcation value {root}"),
            });
        }
    }
    Ok(())
}

/// As [`check_nondegenerate_single`]; at `γ₂ = γ₁` exactly the mode-1 kernel is
/// a rigid translation and is removed by a gauge instead.
pub fn check_nondegenerate_two_phase(lambda: f64, gamma1: f64, gamma2: f64, order: usize) -> Result<()> {
    for k in 1..=order {
        // also raises on the pole of the transmission system
        Sigma_k(k, lambda, gamma1, gamma2)?;
        if k == 1 && gamma2 == gamma1 {
            continue;
        }
        let root = gamma2_star(k, lambda, gamma1)?;
        if near(gamma2, root) {
            return Err(Error::Degenerate {
                mode: k,
                detail: format!("γ₂ = {gamma2} lies within 1e-3 of the mode-{k} bifurcation value {root}"),
            });
        }
    }
    Ok(())
}

/// Mode 1 always carries the translation kernel; the remaining direction
/// must be nondegenerate. Modes `k ≥ 2` must keep away from the real zeros of
/// the determinant.
pub fn check_nondegenerate_pair(lambda: f64, gamma: f64, order: usize) -> Result<()> {
    let m1 = matrix_mk(1, lambda, gamma)?;
    let scale = m1.a.abs().max(m1.b.abs()).max(m1.c.abs()).max(m1.d.abs());
    if m1.b.hypot(m1.d) <= 1e-12 * scale {
        return Err(Error::Degenerate { mode: 1, detail: "inner mode-1 column vanishes".into() });
    }
    for k in 2..=order {
        let m = matrix_mk(k, lambda, 0.0)?;
        for root in roots_of_det(&m).real_roots() {
            if near(gamma, root) {
                return Err(Error::Degenerate {
                    mode: k,
                    detail: format!("γ = {gamma} lies within 1e-3 of the mode-{k} root {root} of det M"),
                });
            }
        }
    }
    Ok(())
}

fn jacobian_check<'a>(sys: &'a BoundarySystem) -> impl Fn(&nalgebra::DMatrix<f64>, f64, f64, &nalgebra::DVector<f64>) -> Result<()> + 'a {
    move |_, smin, smax, weakest| {
        if smin <= 1e-9 * smax {
            let (idx, _) = weakest
                .iter()
                .enumerate()
                .fold((0, 0.0), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
            return Err(Error::Degenerate {
                mode: sys.mode_of(idx),
                detail: format!("Jacobian singular values span [{smin:.3e}, {smax:.3e}]"),
            });
        }
        Ok(())
    }
}

fn run(sys: &BoundarySystem, initial: State, cfg: &ContinuationConfig) -> Result<(State, usize, f64)> {
    let x0 = sys.encode(&initial);
    let report = newton(|x| sys.residual(x), x0, &cfg.newton, jacobian_check(sys))?;
    let st = sys.decode(&report.x);
    let sup = sys.grid_sup(&st)?;
    Ok((st, report.iterations, sup))
}

fn initial_state(sys: &BoundarySystem, eta: Option<&CosineSeries>, xi: Option<&CosineSeries>) -> State {
    let mut st = sys.decode(&nalgebra::DVector::zeros(sys.unknowns().len()));
    if let Some(e) = eta {
        st.eta = e.resized(sys.order);
    }
    if let Some(x) = xi {
        st.xi = x.resized(sys.order);
    }
    for &(k, v) in &sys.eta_pins {
        st.eta.set_coeff(k, v);
    }
    st
}

fn check_rho(rho: &CosineSeries, order: usize) -> Result<()> {
    if rho.coeffs().iter().skip(order).any(|c| *c != 0.0) {
        return Err(Error::Config(format!("Neumann perturbation has modes above the truncation order {order}")));
    }
    Ok(())
}

/// Single-phase free outer boundary with `|∇ψ|² = Q + ρ` (or `∂_νψ = q + ρ`).
pub fn newton_solve_g(
    lambda: f64,
    gamma: f64,
    rho: &CosineSeries,
    initial: Option<&CosineSeries>,
    cfg: &ContinuationConfig,
) -> Result<StabilityResult> {
    let k_max = cfg.order;
    check_rho(rho, k_max)?;
    check_nondegenerate_single(lambda, gamma, k_max)?;
    let mut sys = BoundarySystem::new(Problem::Single { lambda, gamma }, k_max, cfg.solver);
    sys.rho_out = rho.resized(k_max);
    sys.form = cfg.form;
    let (q_out, _) = neumann_constants(lambda, gamma);
    let mut predicted = CosineSeries::zeros(k_max);
    for k in 1..=k_max {
        let slope = match cfg.form {
            NeumannForm::Squared => 2.0 * q_out * sigma_k(k, lambda, gamma)?,
            NeumannForm::Signed => sigma_k(k, lambda, gamma)?,
        };
        predicted.set_coeff(k, rho.coeff(k) / slope);
    }
    let (st, iters, sup) = run(&sys, initial_state(&sys, initial, None), cfg)?;
    Ok(StabilityResult {
        rho: rho.clone(),
        rho_inner: None,
        bernoulli: sys.bernoulli(&st),
        eta: st.eta,
        xi: None,
        predicted,
        predicted_xi: None,
        form: cfg.form,
        newton_iters: iters,
        residual_sup: sup,
    })
}

/// Two-phase free outer boundary under a perturbed Bernoulli condition.
pub fn newton_solve_h(
    lambda: f64,
    gamma1: f64,
    gamma2: f64,
    rho: &CosineSeries,
    initial: Option<&CosineSeries>,
    cfg: &ContinuationConfig,
) -> Result<StabilityResult> {
    let k_max = cfg.order;
    check_rho(rho, k_max)?;
    check_nondegenerate_two_phase(lambda, gamma1, gamma2, k_max)?;
    let mut sys = BoundarySystem::new(Problem::TwoPhase { lambda, gamma1, gamma2 }, k_max, cfg.solver);
    sys.rho_out = rho.resized(k_max);
    sys.form = cfg.form;
    let translation = gamma1 == gamma2;
    if translation {
        sys.eta_pins = vec![(1, 0.0)];
    }
    let mut predicted = CosineSeries::zeros(k_max);
    for k in 1..=k_max {
        if k == 1 && translation {
            continue;
        }
        let slope = match cfg.form {
            NeumannForm::Squared => gamma2 * Sigma_k(k, lambda, gamma1, gamma2)?,
            NeumannForm::Signed => Sigma_k(k, lambda, gamma1, gamma2)?,
        };
        predicted.set_coeff(k, rho.coeff(k) / slope);
    }
    let (st, iters, sup) = run(&sys, initial_state(&sys, initial, None), cfg)?;
    Ok(StabilityResult {
        rho: rho.clone(),
        rho_inner: None,
        bernoulli: sys.bernoulli(&st),
        eta: st.eta,
        xi: None,
        predicted,
        predicted_xi: None,
        form: cfg.form,
        newton_iters: iters,
        residual_sup: sup,
    })
}

/// Both boundaries free, `∂_νψ = q_out + ρ_out` outside and `q_in + ρ_in` inside.
/// The translation kernel is removed by fixing the mode-1 coefficient of `η` at 0.
pub fn newton_solve_cal_g(
    lambda: f64,
    gamma: f64,
    rho_out: &CosineSeries,
    rho_in: &CosineSeries,
    initial: Option<(&CosineSeries, &CosineSeries)>,
    cfg: &ContinuationConfig,
) -> Result<StabilityResult> {
    let k_max = cfg.order;
    check_rho(rho_out, k_max)?;
    check_rho(rho_in, k_max)?;
    check_nondegenerate_pair(lambda, gamma, k_max)?;
    let mut sys = BoundarySystem::new(Problem::Pair { lambda, gamma }, k_max, cfg.solver);
    sys.rho_out = rho_out.resized(k_max);
    sys.rho_in = rho_in.resized(k_max);
    sys.form = NeumannForm::Signed;
    sys.eta_pins = vec![(1, 0.0)];
    let mut pe = CosineSeries::zeros(k_max);
    let mut px = CosineSeries::zeros(k_max);
    for k in 1..=k_max {
        let m = matrix_mk(k, lambda, gamma)?;
        let rhs = (rho_out.coeff(k), rho_in.coeff(k));
        if k == 1 {
            // least squares in the inner coefficient alone
            let x = (m.b * rhs.0 + m.d * rhs.1) / (m.b * m.b + m.d * m.d);
            px.set_coeff(1, x);
            continue;
        }
        let (e, x) = m
            .solve(rhs)
            .ok_or_else(|| Error::Degenerate { mode: k, detail: "mode matrix is singular".into() })?;
        pe.set_coeff(k, e);
        px.set_coeff(k, x);
    }
    let init = initial_state(&sys, initial.map(|p| p.0), initial.map(|p| p.1));
    let (st, iters, sup) = run(&sys, init, cfg)?;
    Ok(StabilityResult {
        rho: rho_out.clone(),
        rho_inner: Some(rho_in.clone()),
        bernoulli: sys.bernoulli(&st),
        eta: st.eta,
        xi: Some(st.xi),
        predicted: pe,
        predicted_xi: Some(px),
        form: NeumannForm::Signed,
        newton_iters: iters,
        residual_sup: sup,
    })
}
