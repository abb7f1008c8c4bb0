//! Bifurcation detection and branch tracing from the concentric annulus.

use serde::{Deserialize, Serialize};

use super::newton::newton;
use super::system::{BoundarySystem, NeumannForm, State};
use super::ContinuationConfig;
use crate::dispersion::{gamma2_star, gamma_star_pair, gamma_star_single, matrix_mk, sigma_k, PairRoots};
use crate::geometry::CosineSeries;
use crate::{Error, Problem, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectedRoot {
    /// Root located by sign changes and bisection of the dispersion function.
    pub bisection: f64,
    /// Closed-form bifurcation value nearest to it, if any lies within `10⁻⁶`.
    pub closed_form: Option<f64>,
}

/// Continuous function whose zeros are the mode-`k` bifurcation values.
fn dispersion_function(problem: &Problem, k: usize) -> Result<Box<dyn Fn(f64) -> f64>> {
    let lambda = problem.lambda();
    Ok(match *problem {
        Problem::Single { .. } => {
            sigma_k(k, lambda, 0.0)?;
            Box::new(move |g| sigma_k(k, lambda, g).unwrap_or(f64::NAN))
        }
        Problem::TwoPhase { gamma1, .. } => {
            // Σ_k has a pole next to its root; use Σ_k times its denominator
            let kf = k as f64;
            let p2 = (2.0 * kf * lambda.ln()).exp();
            Box::new(move |g2| {
                let den = 2.0 * ((gamma1 + g2) + p2 * (gamma1 - g2));
                2.0 * kf * g2 * (gamma1 - g2) * p2 + (1.0 - kf) * g2 / 2.0 * den
            })
        }
        Problem::Pair { .. } => {
            if k == 1 {
                return Err(Error::Degenerate {
                    mode: 1,
                    detail: "the mode-1 determinant vanishes for every γ (translation kernel)".into(),
                });
            }
            let m = matrix_mk(k, lambda, 0.0)?;
            Box::new(move |g| m.at(g).det())
        }
    })
}

fn closed_forms(problem: &Problem, k: usize) -> Result<Vec<f64>> {
    let lambda = problem.lambda();
    Ok(match *problem {
        Problem::Single { .. } => vec![gamma_star_single(k, lambda)?],
        Problem::TwoPhase { gamma1, .. } => vec![gamma2_star(k, lambda, gamma1)?],
        Problem::Pair { .. } => match gamma_star_pair(k, lambda)? {
            PairRoots::Identical => Vec::new(),
            r => r.real_roots(),
        },
    })
}

/// Locate the mode-`k` bifurcation values inside `interval` by sampling the
/// dispersion function and bisecting every sign change. For the two-phase
/// problem the parameter is `γ₂` and the trivial zero `γ₂ = 0` (vanishing
/// outer flux) is skipped.
pub fn detect_bifurcation(problem: &Problem, k: usize, interval: (f64, f64)) -> Result<Vec<DetectedRoot>> {
    let (lo, hi) = interval;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Config(format!("invalid search interval [{lo}, {hi}]")));
    }
    let f = dispersion_function(problem, k)?;
    let n = 4000;
    let grid: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&g| f(g)).collect();
    let closed = closed_forms(problem, k)?;
    let mut roots = Vec::new();
    for i in 0..n {
        let (a, b) = (vals[i], vals[i + 1]);
        if !(a.is_finite() && b.is_finite()) {
            continue;
        }
        let root = if a == 0.0 {
            grid[i]
        } else if a.signum() != b.signum() && b != 0.0 {
            crate::dispersion::bisect(&f, grid[i], grid[i + 1], 0.0)?
        } else {
            continue;
        };
        if matches!(problem, Problem::TwoPhase { .. }) && root.abs() <= 1e-12 * (hi - lo) {
            continue;
        }
        let closed_form = closed.iter().cloned().find(|c| (c - root).abs() <= 1e-6 * c.abs().max(1.0));
        roots.push(DetectedRoot { bisection: root, closed_form });
    }
    if vals[n] == 0.0 {
        let root = grid[n];
        let closed_form = closed.iter().cloned().find(|c| (c - root).abs() <= 1e-6 * c.abs().max(1.0));
        roots.push(DetectedRoot { bisection: root, closed_form });
    }
    if roots.is_empty() {
        return Err(Error::NotFound(format!(
            "no mode-{k} bifurcation value of the {} problem in [{lo}, {hi}]",
            problem.kind().name()
        )));
    }
    Ok(roots)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub step: usize,
    /// Coefficient of `cos(k₀θ)` in `η`.
    pub s: f64,
    pub gamma: f64,
    pub eta: CosineSeries,
    pub xi: Option<CosineSeries>,
    /// `Q` for one free boundary, `(q_out, q_in)` for two.
    pub bernoulli: Vec<f64>,
    pub residual_sup: f64,
    pub newton_iters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub problem: Problem,
    pub k0: usize,
    pub gamma0: f64,
    /// `β/α` of the linear kernel direction (two-boundary problem).
    pub kernel_ratio: Option<f64>,
    pub order: usize,
    pub points: Vec<BranchPoint>,
    /// Why tracing stopped early, if it did.
    pub termination: Option<String>,
}

fn system_for(problem: &Problem, k0: usize, gamma0: f64, order: usize, cfg: &ContinuationConfig) -> BoundarySystem {
    let base = problem.with_parameter(gamma0);
    let mut sys = BoundarySystem::new(base, order, cfg.solver);
    sys.form = NeumannForm::Squared;
    match problem {
        Problem::Pair { .. } => {
            sys.form = NeumannForm::Signed;
            // translations exist at every γ, so mode-1 branches hold γ fixed
            sys.gamma_free = k0 != 1;
            sys.eta_pins = if k0 == 1 { vec![(1, 0.0)] } else { vec![(k0, 0.0), (1, 0.0)] };
        }
        _ => {
            sys.gamma_free = true;
            sys.eta_pins = vec![(k0, 0.0)];
        }
    }
    sys
}

fn set_amplitude(sys: &mut BoundarySystem, k0: usize, s: f64) {
    for pin in sys.eta_pins.iter_mut() {
        if pin.0 == k0 {
            pin.1 = s;
        }
    }
}

/// Flat view `[γ, η…, ξ…, δ_out, δ_in]` used for extrapolation.
fn flatten_state(st: &State, order: usize) -> Vec<f64> {
    let mut v = vec![st.gamma];
    v.extend((1..=order).map(|k| st.eta.coeff(k)));
    v.extend((1..=order).map(|k| st.xi.coeff(k)));
    v.push(st.delta.0);
    v.push(st.delta.1);
    v
}

fn unflatten_state(v: &[f64], order: usize) -> State {
    let eta = CosineSeries::new(v[1..=order].to_vec()).expect("finite coefficients");
    let xi = CosineSeries::new(v[order + 1..=2 * order].to_vec()).expect("finite coefficients");
    State { gamma: v[0], eta, xi, delta: (v[2 * order + 1], v[2 * order + 2]) }
}

fn top_quartile_energy(st: &State, order: usize) -> f64 {
    let from = order - order / 4 + 1;
    (from..=order).map(|k| st.eta.coeff(k).powi(2) + st.xi.coeff(k).powi(2)).sum::<f64>().sqrt()
}

struct Corrected {
    state: State,
    iterations: usize,
}

fn correct(sys: &BoundarySystem, guess: &State, cfg: &ContinuationConfig) -> Result<Corrected> {
    let x0 = sys.encode(guess);
    let report = newton(|x| sys.residual(x), x0, &cfg.newton, |_, _, _, _| Ok(()))?;
    Ok(Corrected { state: sys.decode(&report.x), iterations: report.iterations })
}

/// Trace the branch bifurcating from `(γ₀, η = 0)` in mode `k₀` for
/// `s = 0, ds, …, n_steps·ds`, where `s` is the pinned `cos(k₀θ)` coefficient
/// of `η`. Predictor: kernel direction for the first step, secant afterwards;
/// corrector: Newton in the remaining unknowns. Failed steps are subdivided
/// down to `ds · cfg.min_step_fraction`.
pub fn trace_branch(
    problem: &Problem,
    k0: usize,
    gamma0: f64,
    ds: f64,
    n_steps: usize,
    cfg: &ContinuationConfig,
) -> Result<Branch> {
    if k0 == 0 || k0 > cfg.order {
        return Err(Error::Config(format!("mode {k0} outside 1..={}", cfg.order)));
    }
    if !(ds != 0.0 && ds.is_finite()) {
        return Err(Error::Config(format!("invalid step {ds}")));
    }
    let lambda = problem.lambda();
    let kernel_ratio = match problem {
        Problem::Pair { .. } => {
            let m = matrix_mk(k0, lambda, gamma0)?;
            Some(m.null_vector().1)
        }
        _ => None,
    };
    let mut order = cfg.order;
    let mut sys = system_for(problem, k0, gamma0, order, cfg);
    let origin = State {
        gamma: gamma0,
        eta: CosineSeries::zeros(order),
        xi: CosineSeries::zeros(order),
        delta: (0.0, 0.0),
    };
    let first = correct(&sys, &origin, cfg)?;
    let mut points = vec![BranchPoint {
        step: 0,
        s: 0.0,
        gamma: first.state.gamma,
        eta: first.state.eta.clone(),
        xi: kernel_ratio.map(|_| first.state.xi.clone()),
        bernoulli: sys.bernoulli(&first.state),
        residual_sup: sys.grid_sup(&first.state)?,
        newton_iters: first.iterations,
    }];
    // history of (s, flattened state) for the secant predictor
    let mut hist: Vec<(f64, Vec<f64>)> = vec![(0.0, flatten_state(&first.state, order))];
    let mut termination = None;
    'steps: for step in 1..=n_steps {
        let target = ds * step as f64;
        let mut h = ds;
        let mut s_now = hist.last().expect("history is never empty").0;
        while (target - s_now).abs() > 1e-15 * ds.abs() {
            let s_next = if (target - s_now).abs() <= h.abs() * (1.0 + 1e-12) { target } else { s_now + h };
            let guess = predict(&hist, s_next, order, k0, kernel_ratio);
            set_amplitude(&mut sys, k0, s_next);
            match correct(&sys, &guess, cfg) {
                Ok(c) => {
                    hist.push((s_next, flatten_state(&c.state, order)));
                    s_now = s_next;
                    if s_next == target {
                        // spectral adequacy: enlarge the truncation while the tail carries
                        // energy or unresolved modes keep the grid residual up
                        let mut c = c;
                        let mut sup = sys.grid_sup(&c.state)?;
                        while (top_quartile_energy(&c.state, order) > cfg.tail_energy || sup > cfg.residual_tol)
                            && 2 * order <= cfg.max_order
                        {
                            order *= 2;
                            sys = system_for(problem, k0, gamma0, order, cfg);
                            set_amplitude(&mut sys, k0, s_next);
                            let mut g = c.state.clone();
                            g.eta = g.eta.resized(order);
                            g.xi = g.xi.resized(order);
                            c = correct(&sys, &g, cfg)?;
                            hist = hist.iter().map(|(s, v)| (*s, resize_flat(v, order / 2, order))).collect();
                            let last = hist.len() - 1;
                            hist[last].1 = flatten_state(&c.state, order);
                            sup = sys.grid_sup(&c.state)?;
                        }
                        points.push(BranchPoint {
                            step,
                            s: s_next,
                            gamma: c.state.gamma,
                            eta: c.state.eta.clone(),
                            xi: kernel_ratio.map(|_| c.state.xi.clone()),
                            bernoulli: sys.bernoulli(&c.state),
                            residual_sup: sup,
                            newton_iters: c.iterations,
                        });
                    }
                }
                Err(e) => {
                    h *= 0.5;
                    if h.abs() < ds.abs() * cfg.min_step_fraction {
                        termination = Some(format!("step {step} at s = {s_next:.6e} failed below the minimum step: {e}"));
                        break 'steps;
                    }
                }
            }
        }
    }
    Ok(Branch { problem: problem.with_parameter(gamma0), k0, gamma0, kernel_ratio, order, points, termination })
}

fn resize_flat(v: &[f64], old: usize, new: usize) -> Vec<f64> {
    let st = unflatten_state(v, old);
    let st = State { eta: st.eta.resized(new), xi: st.xi.resized(new), ..st };
    flatten_state(&st, new)
}

fn predict(hist: &[(f64, Vec<f64>)], s: f64, order: usize, k0: usize, ratio: Option<f64>) -> State {
    let n = hist.len();
    if n == 1 {
        let mut st = unflatten_state(&hist[0].1, order);
        st.eta.set_coeff(k0, s);
        if let Some(r) = ratio {
            st.xi.set_coeff(k0, s * r);
        }
        return st;
    }
    let (s1, v1) = &hist[n - 1];
    let (s0, v0) = &hist[n - 2];
    let t = (s - s1) / (s1 - s0);
    let v: Vec<f64> = v1.iter().zip(v0).map(|(a, b)| a + t * (a - b)).collect();
    unflatten_state(&v, order)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCheck {
    pub s: f64,
    pub eta_sup: f64,
    pub xi_sup: Option<f64>,
    /// `√Σ_{k≠k₀} (η_k² + ξ_k²)`
    pub off_mode_norm: f64,
    /// `‖η‖_sup ≥ 0.9 |s|` (the kernel is normalised to a unit `k₀` coefficient).
    pub leading_order_dominant: bool,
    /// Distance of the outer boundary from its best-fitting circle.
    pub circle_defect: f64,
    pub inner_circle_defect: Option<f64>,
    pub residual_sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NontrivialityReport {
    pub k0: usize,
    pub points: Vec<PointCheck>,
    /// `off_mode_norm(s_max) / off_mode_norm(s_max/2)`; close to 4 when the
    /// non-kernel content is quadratic in `s`.
    pub off_mode_halving_ratio: Option<f64>,
    /// Every `s ≠ 0` point has a nonzero, leading-order dominated boundary
    /// perturbation and a residual below `tol`.
    pub nontrivial: bool,
    /// Every `s ≠ 0` outer boundary is far from a circle (`defect > 10⁻¹⁰`).
    pub not_annulus: bool,
}

/// Best circle `x² + y² + Dx + F = 0` (centre on the symmetry axis) through the
/// graph `r = c + f(θ)`; returns the largest radial misfit.
pub fn circle_fit_defect(base: f64, f: &CosineSeries) -> f64 {
    let n = 720;
    let pts: Vec<(f64, f64)> = (0..=n)
        .map(|j| {
            let t = std::f64::consts::PI * j as f64 / n as f64;
            let r = base + f.eval(t);
            (r * t.cos(), r * t.sin())
        })
        .collect();
    // least squares for (D, F): D x + F = −(x² + y²)
    let (mut sxx, mut sx, mut sxr, mut sr) = (0.0, 0.0, 0.0, 0.0);
    let m = pts.len() as f64;
    for &(x, y) in &pts {
        let rr = -(x * x + y * y);
        sxx += x * x;
        sx += x;
        sxr += x * rr;
        sr += rr;
    }
    let det = sxx * m - sx * sx;
    let d = (sxr * m - sx * sr) / det;
    let ff = (sxx * sr - sx * sxr) / det;
    let cx = -d / 2.0;
    let rho = (cx * cx - ff).max(0.0).sqrt();
    pts.iter().map(|&(x, y)| ((x - cx).hypot(y) - rho).abs()).fold(0.0, f64::max)
}

pub fn verify_branch_nontriviality(branch: &Branch, tol: f64) -> NontrivialityReport {
    let k0 = branch.k0;
    let lambda = branch.problem.lambda();
    let points: Vec<PointCheck> = branch
        .points
        .iter()
        .map(|p| {
            let off_eta: f64 = p.eta.coeffs().iter().enumerate().filter(|(i, _)| i + 1 != k0).map(|(_, c)| c * c).sum();
            let off_xi: f64 = p.xi.as_ref().map_or(0.0, |x| {
                x.coeffs().iter().enumerate().filter(|(i, _)| i + 1 != k0).map(|(_, c)| c * c).sum()
            });
            let eta_sup = p.eta.sup_norm();
            PointCheck {
                s: p.s,
                eta_sup,
                xi_sup: p.xi.as_ref().map(|x| x.sup_norm()),
                off_mode_norm: (off_eta + off_xi).sqrt(),
                leading_order_dominant: eta_sup >= 0.9 * p.s.abs(),
                circle_defect: circle_fit_defect(1.0, &p.eta),
                inner_circle_defect: p.xi.as_ref().map(|x| circle_fit_defect(lambda, x)),
                residual_sup: p.residual_sup,
            }
        })
        .collect();
    let off_mode_halving_ratio = points.last().and_then(|last| {
        points
            .iter()
            .find(|p| (p.s - last.s / 2.0).abs() <= 1e-12 * last.s.abs().max(1e-300) && p.s != 0.0)
            .map(|half| last.off_mode_norm / half.off_mode_norm)
    });
    let moving = points.iter().filter(|p| p.s != 0.0);
    let nontrivial = moving.clone().all(|p| p.eta_sup > 0.0 && p.leading_order_dominant && p.residual_sup < tol);
    let not_annulus = moving.clone().all(|p| p.circle_defect > 1e-10);
    NontrivialityReport { k0, points, off_mode_halving_ratio, nontrivial, not_annulus }
}
