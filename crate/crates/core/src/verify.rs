//! Acceptance checks. Every criterion is a list of named sub-checks with
//! explicit tolerances; disagreements between a printed closed form and the
//! computed value go into a discrepancy log instead of being hidden.

use serde::{Deserialize, Serialize};

use crate::continuation::{
    newton_solve_cal_g, newton_solve_g, newton_solve_h, trace_branch, verify_branch_nontriviality, detect_bifurcation,
    ContinuationConfig, NeumannForm, StabilityResult,
};
use crate::diagram::{diagram, DiagramRow, DIAGRAM_MODES, LAMBDA_GRID};
use crate::dispersion::{
    det_mk0_display, gamma2_star, gamma_pair_one_display, gamma_star_pair, gamma_star_single, matrix_mk,
    matrix_mk_literal, roots_of_det, sigma_k, sigma_two_phase_slope, Sigma_k, PairRoots,
};
use crate::elliptic::{
    curvature_decomposition, residual_cal_g, residual_g, residual_h, shape_derivative_closed, shape_derivative_fd,
    shape_error, solve, solve_dirichlet, solve_transmission, Boundary, FieldKind, SolverConfig,
};
use crate::geometry::{AnnulusGeometry, CosineSeries};
use crate::radial::{neumann_constants, RadialProfile};
use crate::{Problem, ProblemKind, Result};

/// Deliberate corruption of one oracle constant, used to show that the
/// corresponding criterion notices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mutation {
    /// Zero-vorticity closed form of `σ_k` (criterion 2).
    ZeroVorticitySigma,
    /// Reference value `γ₁` of the mode-1 two-phase root (criterion 3).
    TwoPhaseModeOne,
    /// Log coefficient of the concentric single-phase stream function (criterion 5).
    TrivialStream,
    /// Transversality constant `−γ₁λ²/2` (criterion 8).
    Transversality,
}

impl std::str::FromStr for Mutation {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero_vorticity_sigma" => Ok(Mutation::ZeroVorticitySigma),
            "two_phase_mode_one" => Ok(Mutation::TwoPhaseModeOne),
            "trivial_stream" => Ok(Mutation::TrivialStream),
            "transversality" => Ok(Mutation::Transversality),
            other => Err(crate::Error::Config(format!("unknown mutation `{other}`"))),
        }
    }
}

/// Relative size of an injected typo.
const TYPO: f64 = 1e-3;

/// Sub-checks that cannot pass because the claimed statement is false for the
/// exact operator, with the reason. They are evaluated literally regardless.
pub const KNOWN_UNATTAINABLE: &[(&str, &str)] = &[
    ("1.higher_mode_roots_positive", "γ_k* is negative for many (k, λ) with k ≥ 2"),
    ("3.root_residual_absolute", "Σ_k has a pole within O(λ^{2k}) of γ_{2k}*; the rounded root cannot reach |Σ_k| < 1e-9"),
    ("4.det_positive", "the mode-1 matrix annihilates the translation direction, so det M_{1,0} = 0"),
    ("4.det_matches_display", "the printed det(M_{k,0}) matches neither the printed entries nor the derived matrix"),
    ("4.mode_one_roots_match", "det M_{1,γ} vanishes identically; there are no isolated mode-1 roots"),
    ("10.single_phase_literal_map", "the first-order map τ_k/σ_k omits the factor 2 q_out of the linearization"),
    ("10.two_phase_first_order", "at γ₁ = γ₂ = 1 the second-order response is ≈ 1.7‖ρ‖², above 1e-5‖ρ‖ at ‖ρ‖ = 1e-3"),
    ("11.mode_one_branch_variation", "the mode-1 two-phase branch consists of translated disks, where ∂_ννψ is constant"),
];

pub fn is_known_unattainable(id: &str) -> bool {
    KNOWN_UNATTAINABLE.iter().any(|(k, _)| *k == id)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: usize,
    pub title: String,
    pub checks: Vec<Check>,
}

impl CriterionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub criterion: usize,
    pub quantity: String,
    pub claimed: String,
    pub computed: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub criteria: Vec<CriterionReport>,
    pub discrepancies: Vec<Discrepancy>,
    pub known_unattainable: Vec<String>,
    pub mutation: Option<Mutation>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed())
    }

    /// Failing sub-checks that are not on the known list.
    pub fn unexpected_failures(&self) -> Vec<String> {
        self.criteria
            .iter()
            .flat_map(|c| c.failed_checks())
            .filter(|c| !is_known_unattainable(&c.id))
            .map(|c| c.id.clone())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[derive(Default)]
pub struct VerifyOptions {
    pub solver: SolverConfig,
    pub continuation: ContinuationConfig,
    pub mutation: Option<Mutation>,
    /// Criteria to run; empty means all.
    pub only: Vec<usize>,
}


pub const CRITERIA: [(usize, &str); 11] = [
    (1, "single-phase dispersion roots"),
    (2, "zero-vorticity positivity"),
    (3, "two-phase roots"),
    (4, "two-boundary mode matrix"),
    (5, "solver fidelity on concentric annuli"),
    (6, "linearization oracles"),
    (7, "shape-derivative convergence"),
    (8, "transversality"),
    (9, "branch tracing"),
    (10, "stability under Neumann perturbations"),
    (11, "rigidity consistency"),
];

struct Ctx<'a> {
    opts: &'a VerifyOptions,
    log: Vec<Discrepancy>,
}

impl Ctx<'_> {
    fn typo(&self, m: Mutation, v: f64) -> f64 {
        if self.opts.mutation == Some(m) {
            v * (1.0 + TYPO)
        } else {
            v
        }
    }

    fn discrepancy(&mut self, criterion: usize, quantity: impl Into<String>, claimed: impl Into<String>, computed: impl Into<String>) {
        self.log.push(Discrepancy { criterion, quantity: quantity.into(), claimed: claimed.into(), computed: computed.into() });
    }
}

fn check(id: &str, passed: bool, detail: impl Into<String>) -> Check {
    Check { id: id.to_string(), passed, detail: detail.into() }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}

/// Turns an evaluation error into a failed check instead of aborting the run.
fn guarded(id: &str, r: Result<Check>) -> Check {
    r.unwrap_or_else(|e| check(id, false, format!("evaluation failed: {e}")))
}

pub fn run_verification(opts: &VerifyOptions) -> VerificationReport {
    let mut ctx = Ctx { opts, log: Vec::new() };
    let mut criteria = Vec::new();
    for (id, title) in CRITERIA {
        if !opts.only.is_empty() && !opts.only.contains(&id) {
            continue;
        }
        let checks = match id {
            1 => criterion_1(&mut ctx),
            2 => criterion_2(&mut ctx),
            3 => criterion_3(&mut ctx),
            4 => criterion_4(&mut ctx),
            5 => criterion_5(&mut ctx),
            6 => criterion_6(&mut ctx),
            7 => criterion_7(&mut ctx),
            8 => criterion_8(&mut ctx),
            9 => criterion_9(&mut ctx),
            10 => criterion_10(&mut ctx),
            _ => criterion_11(&mut ctx),
        };
        criteria.push(CriterionReport { id, title: title.to_string(), checks });
    }
    VerificationReport {
        criteria,
        discrepancies: ctx.log,
        known_unattainable: KNOWN_UNATTAINABLE.iter().map(|(k, _)| k.to_string()).collect(),
        mutation: opts.mutation,
    }
}

fn table_check(id: &str, rows: Result<Vec<DiagramRow>>, expected: usize) -> Check {
    match rows {
        Ok(rows) => {
            let finite = rows.iter().all(|r| r.gamma_root.is_none_or(f64::is_finite) && r.gamma_root_2.is_none_or(f64::is_finite));
            check(id, rows.len() == expected && finite, format!("{} rows, all finite: {finite}", rows.len()))
        }
        Err(e) => check(id, false, format!("table generation failed: {e}")),
    }
}

fn criterion_1(ctx: &mut Ctx) -> Vec<Check> {
    let mut worst: f64 = 0.0;
    let mut mode_one_max = f64::NEG_INFINITY;
    let mut negative = Vec::new();
    let mut errors = Vec::new();
    for &lambda in &LAMBDA_GRID {
        for &k in &DIAGRAM_MODES {
            let g = match gamma_star_single(k, lambda).and_then(|g| Ok((g, sigma_k(k, lambda, g)?))) {
                Ok((g, s)) => {
                    worst = worst.max(s.abs());
                    g
                }
                Err(e) => {
                    errors.push(format!("k={k}, λ={lambda}: {e}"));
                    continue;
                }
            };
            if k == 1 {
                mode_one_max = mode_one_max.max(g);
            } else if g <= 0.0 {
                negative.push((k, lambda, g));
            }
        }
    }
    for &(k, lambda, g) in &negative {
        ctx.discrepancy(1, format!("γ_{k}*(λ={lambda})"), "γ_k* > 0 for k ≥ 2", format!("{g:.12e}"));
    }
    let shown: Vec<String> = negative.iter().take(4).map(|(k, l, g)| format!("k={k} λ={l}: {g:.4}")).collect();
    vec![
        check(
            "1.root_residual",
            errors.is_empty() && worst < 1e-9,
            format!("max |σ_k(γ_k*)| = {worst:.3e} (tol 1e-9){}", if errors.is_empty() { String::new() } else { format!("; errors: {errors:?}") }),
        ),
        check("1.mode_one_below_minus_four", mode_one_max < -4.0, format!("max_λ γ_1* = {mode_one_max:.6}")),
        check(
            "1.higher_mode_roots_positive",
            negative.is_empty(),
            format!("{} of {} roots with k ≥ 2 are ≤ 0, e.g. {shown:?}", negative.len(), LAMBDA_GRID.len() * (DIAGRAM_MODES.len() - 1)),
        ),
        table_check(
            "1.diagram_table",
            diagram(ProblemKind::Single, &LAMBDA_GRID, &DIAGRAM_MODES, 0.0),
            LAMBDA_GRID.len() * DIAGRAM_MODES.len(),
        ),
    ]
}

fn criterion_2(ctx: &mut Ctx) -> Vec<Check> {
    let mut worst: f64 = 0.0;
    let mut min_value = f64::INFINITY;
    for &lambda in &LAMBDA_GRID {
        for k in 1..=100usize {
            let kf = k as f64;
            let p2 = (2.0 * kf * lambda.ln()).exp();
            let closed = ctx.typo(Mutation::ZeroVorticitySigma, ((1.0 - kf) * p2 - kf - 1.0) / (lambda.ln() * (1.0 - p2)));
            match sigma_k(k, lambda, 0.0) {
                Ok(v) => {
                    worst = worst.max(rel(v, closed));
                    min_value = min_value.min(v);
                }
                Err(_) => min_value = f64::NAN,
            }
        }
    }
    vec![
        check("2.closed_form", worst <= 1e-12, format!("max relative deviation {worst:.3e} (tol 1e-12)")),
        check("2.positive", min_value > 0.0, format!("min σ_k(0, λ) = {min_value:.6e}")),
    ]
}

fn criterion_3(ctx: &mut Ctx) -> Vec<Check> {
    let mut worst_one: f64 = 0.0;
    let mut worst_bisect: f64 = 0.0;
    let mut worst_abs: f64 = 0.0;
    let mut worst_backward: f64 = 0.0;
    let mut worst_at = (0, 0.0, 0.0);
    let mut errors = Vec::new();
    for &g1 in &[-2.0, 1.0, 3.0] {
        for &lambda in &LAMBDA_GRID {
            let reference = ctx.typo(Mutation::TwoPhaseModeOne, g1);
            match gamma2_star(1, lambda, g1) {
                Ok(r) => worst_one = worst_one.max(rel(r, reference)),
                Err(e) => errors.push(e.to_string()),
            }
            let problem = Problem::TwoPhase { lambda, gamma1: g1, gamma2: 0.0 };
            let span = 4.0 * g1.abs();
            match detect_bifurcation(&problem, 1, (-span - 0.37, span + 0.41)) {
                Ok(roots) => {
                    let best = roots.iter().map(|r| rel(r.bisection, reference)).fold(f64::INFINITY, f64::min);
                    worst_bisect = worst_bisect.max(best);
                }
                Err(e) => errors.push(e.to_string()),
            }
            for &k in &DIAGRAM_MODES {
                let r = gamma2_star(k, lambda, g1).and_then(|g2| {
                    Ok((g2, Sigma_k(k, lambda, g1, g2)?, sigma_two_phase_slope(k, lambda, g1, g2)?))
                });
                match r {
                    Ok((g2, s, slope)) => {
                        if s.abs() > worst_abs {
                            worst_abs = s.abs();
                            worst_at = (k, lambda, g1);
                        }
                        worst_backward = worst_backward.max(s.abs() / (slope.abs() * g2.abs()));
                    }
                    Err(e) => errors.push(format!("k={k}, λ={lambda}, γ₁={g1}: {e}")),
                }
            }
        }
    }
    if worst_abs >= 1e-9 {
        ctx.discrepancy(
            3,
            format!("|Σ_{}(γ_2k*)| at λ={}, γ₁={}", worst_at.0, worst_at.1, worst_at.2),
            "< 1e-9",
            format!("{worst_abs:.3e} (backward error of the rounded root ≤ {worst_backward:.1e})"),
        );
    }
    let normalised = diagram(ProblemKind::TwoPhase, &LAMBDA_GRID, &DIAGRAM_MODES, 1.0);
    let unit_row = normalised
        .as_ref()
        .map(|rows| rows.iter().filter(|r| r.k == 1).all(|r| r.gamma_root.is_some_and(|v| (v - 1.0).abs() <= 1e-12)))
        .unwrap_or(false);
    let err_note = if errors.is_empty() { String::new() } else { format!("; errors: {errors:?}") };
    vec![
        check("3.mode_one_root", errors.is_empty() && worst_one <= 1e-12, format!("max relative |γ_21* − γ₁| = {worst_one:.3e}{err_note}")),
        check("3.mode_one_bisection", worst_bisect <= 1e-12, format!("bisection of the dispersion numerator: max relative deviation {worst_bisect:.3e}")),
        check(
            "3.root_residual_absolute",
            errors.is_empty() && worst_abs < 1e-9,
            format!("max |Σ_k(γ_2k*)| = {worst_abs:.3e} at (k, λ, γ₁) = {worst_at:?} (tol 1e-9)"),
        ),
        check(
            "3.root_backward_error",
            errors.is_empty() && worst_backward <= 1e-13,
            format!("max |Σ_k| / (|∂Σ_k/∂γ₂| |γ_2k*|) = {worst_backward:.3e} (tol 1e-13)"),
        ),
        check("3.normalised_diagram", unit_row, "k = 1 row of γ_2k*/γ₁ equals 1"),
    ]
}

fn criterion_4(ctx: &mut Ctx) -> Vec<Check> {
    let mut min_det = f64::INFINITY;
    let mut min_at = (0, 0.0);
    let mut worst_display: f64 = 0.0;
    let mut worst_root_det: f64 = 0.0;
    let mut errors = Vec::new();
    for k in 1..=20usize {
        let mut worst_k = (0.0, 0.0, 0.0, 0.0);
        for &lambda in &LAMBDA_GRID {
            let m = match matrix_mk(k, lambda, 0.0) {
                Ok(m) => m,
                Err(e) => {
                    errors.push(e.to_string());
                    continue;
                }
            };
            let det = m.det();
            if det < min_det {
                min_det = det;
                min_at = (k, lambda);
            }
            if let Ok(display) = det_mk0_display(k, lambda) {
                let r = rel(det, display);
                worst_display = worst_display.max(r);
                if r > worst_k.0 {
                    worst_k = (r, lambda, display, det);
                }
            }
            let roots = match roots_of_det(&m) {
                PairRoots::Identical => {
                    let (a, b) = gamma_pair_one_display(lambda);
                    vec![a, b]
                }
                r => r.real_roots(),
            };
            for g in roots {
                worst_root_det = worst_root_det.max(m.at(g).det().abs());
            }
        }
        if worst_k.0 > 1e-8 {
            ctx.discrepancy(
                4,
                format!("det M_{{{k},0}} at λ={}", worst_k.1),
                format!("{:.12e}", worst_k.2),
                format!("{:.12e} (relative deviation {:.3e})", worst_k.3, worst_k.0),
            );
        }
    }
    let mut worst_roots: f64 = 0.0;
    let mut worst_literal: f64 = 0.0;
    for &lambda in &LAMBDA_GRID {
        let (a, b) = gamma_pair_one_display(lambda);
        match gamma_star_pair(1, lambda) {
            Ok(PairRoots::Real { star, star_star }) => {
                worst_roots = worst_roots.max(rel(star, a).max(rel(star_star, b)).min(rel(star, b).max(rel(star_star, a))));
            }
            Ok(other) => {
                worst_roots = f64::INFINITY;
                if lambda == 0.5 {
                    ctx.discrepancy(4, "mode-1 bifurcation values at λ=0.5", format!("{a:.12e}, {b:.12e}"), format!("{other:?}"));
                }
            }
            Err(e) => errors.push(e.to_string()),
        }
        if let Ok(lit) = matrix_mk_literal(1, lambda, 0.0) {
            let rr = roots_of_det(&lit).real_roots();
            let d = if rr.len() == 2 {
                rel(rr[0], a).max(rel(rr[1], b)).min(rel(rr[0], b).max(rel(rr[1], a)))
            } else {
                f64::INFINITY
            };
            worst_literal = worst_literal.max(d);
        }
    }
    let err_note = if errors.is_empty() { String::new() } else { format!("; errors: {errors:?}") };
    vec![
        check("4.det_positive", min_det > 0.0, format!("min det M_{{k,0}} = {min_det:.3e} at (k, λ) = {min_at:?}{err_note}")),
        check("4.det_matches_display", worst_display <= 1e-8, format!("max relative deviation from the printed closed form {worst_display:.3e}")),
        check("4.det_vanishes_at_roots", worst_root_det < 1e-8, format!("max |det M_{{k,γ}}| over real roots, k ≤ 20: {worst_root_det:.3e}")),
        check("4.mode_one_roots_match", worst_roots <= 1e-10, format!("max relative deviation of the mode-1 roots {worst_roots:.3e}")),
        check(
            "4.printed_entries_mode_one_roots",
            worst_literal <= 1e-10,
            format!("roots of the matrix with the printed entries: max relative deviation {worst_literal:.3e}"),
        ),
        table_check("4.diagram_table", diagram(ProblemKind::Pair, &LAMBDA_GRID, &DIAGRAM_MODES, 0.0), LAMBDA_GRID.len() * DIAGRAM_MODES.len()),
    ]
}

fn criterion_5(ctx: &mut Ctx) -> Vec<Check> {
    let lambda = 0.5;
    let cfg = ctx.opts.solver;
    let mut out = Vec::new();
    let gstar = gamma_star_single(1, lambda).unwrap_or(f64::NAN);
    for (name, gamma) in [("0", 0.0), ("-6", -6.0), ("gamma_star", gstar)] {
        let id = format!("5.single_gamma_{name}");
        let c = ctx.typo(Mutation::TrivialStream, (4.0 + (1.0 - lambda * lambda) * gamma) / (4.0 * lambda.ln()));
        let exact = move |r: f64, _t: f64| c * r.ln() - gamma * (1.0 - r * r) / 4.0;
        out.push(guarded(
            &id,
            AnnulusGeometry::concentric(lambda).and_then(|g| solve_dirichlet(&g, gamma, &cfg)).map(|sol| {
                let err = sol.max_error_against(exact);
                check(&id, err < 1e-10, format!("γ = {gamma:.6}: sup error {err:.3e} (tol 1e-10)"))
            }),
        ));
    }
    for (g1, g2) in [(1.0, 1.0), (1.0, 3.0)] {
        let id = format!("5.two_phase_{g1}_{g2}");
        out.push(guarded(
            &id,
            (|| {
                let sol = solve_transmission(&AnnulusGeometry::concentric(lambda)?, g1, g2, &cfg)?;
                let annulus = sol.max_error_against(|r, _| -(1.0 - r * r) * g2 / 4.0);
                let profile = RadialProfile::two_phase(lambda, g1, g2)?;
                let mut core: f64 = 0.0;
                for i in 0..=8 {
                    let r = lambda * i as f64 / 8.0;
                    for j in 0..4 {
                        let t = 0.7 * j as f64;
                        let v = sol.core_value(r, t).unwrap_or(f64::NAN);
                        core = core.max((v - profile.stream(r)?).abs());
                    }
                }
                let err = annulus.max(core);
                Ok(check(&id, err < 1e-10, format!("annulus error {annulus:.3e}, core error {core:.3e} (tol 1e-10)")))
            })(),
        ));
    }
    out
}

/// One Richardson pass on forward differences: `2 D(t/2) − D(t)`.
fn richardson<F: Fn(f64) -> Result<Vec<f64>>>(f: F, t: f64) -> Result<Vec<f64>> {
    let f0 = f(0.0)?;
    let full = f(t)?;
    let half = f(t / 2.0)?;
    Ok(f0
        .iter()
        .zip(full.iter().zip(&half))
        .map(|(a, (b, c))| 2.0 * (c - a) / (t / 2.0) - (b - a) / t)
        .collect())
}

fn vec_rel(fd: &[f64], exact: &[f64]) -> f64 {
    let diff: f64 = fd.iter().zip(exact).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = exact.iter().map(|b| b * b).sum::<f64>().sqrt();
    diff / norm
}

fn criterion_6(ctx: &mut Ctx) -> Vec<Check> {
    let cfg = ctx.opts.solver;
    let t = 1e-4;
    let (g1, g2) = (1.0, 3.0);
    let mut worst = [0.0f64; 3];
    let mut errors = Vec::new();
    for &lambda in &[0.3, 0.5, 0.7] {
        for k in 1..=3usize {
            let dir = |a: f64| CosineSeries::single_mode(k, a, k);
            let zero = CosineSeries::zeros(k);
            let res = (|| -> Result<[f64; 3]> {
                let mut single: f64 = 0.0;
                let mut pair: f64 = 0.0;
                for gamma in [0.0, -6.0] {
                    let (q_out, _) = neumann_constants(lambda, gamma);
                    let g_fd = richardson(|a| Ok(vec![residual_g(lambda, gamma, &dir(a), &cfg)?.coeff(k)]), t)?;
                    single = single.max(rel(g_fd[0], 2.0 * q_out * sigma_k(k, lambda, gamma)?));
                    let m = matrix_mk(k, lambda, gamma)?;
                    let col_eta = richardson(
                        |a| {
                            let (o, i) = residual_cal_g(lambda, gamma, &dir(a), &zero, &cfg)?;
                            Ok(vec![o.coeff(k), i.coeff(k)])
                        },
                        t,
                    )?;
                    let col_xi = richardson(
                        |a| {
                            let (o, i) = residual_cal_g(lambda, gamma, &zero, &dir(a), &cfg)?;
                            Ok(vec![o.coeff(k), i.coeff(k)])
                        },
                        t,
                    )?;
                    for (fd, exact) in [(col_eta[0], m.a), (col_eta[1], m.c), (col_xi[0], m.b), (col_xi[1], m.d)] {
                        pair = pair.max(rel(fd, exact));
                    }
                }
                let h_fd = richardson(|a| Ok(vec![residual_h(lambda, g1, g2, &dir(a), &cfg)?.coeff(k)]), t)?;
                let two = rel(h_fd[0], g2 * Sigma_k(k, lambda, g1, g2)?);
                Ok([single, two, pair])
            })();
            match res {
                Ok(r) => {
                    for (w, v) in worst.iter_mut().zip(r) {
                        *w = w.max(v);
                    }
                }
                Err(e) => errors.push(format!("k={k}, λ={lambda}: {e}")),
            }
        }
    }
    let ok = errors.is_empty();
    let note = if ok { String::new() } else { format!("; errors: {errors:?}") };
    vec![
        check("6.single_phase", ok && worst[0] <= 1e-5, format!("γ ∈ {{0, −6}}: max relative error vs 2 q_out σ_k {:.3e} (tol 1e-5){note}", worst[0])),
        check("6.two_phase", ok && worst[1] <= 1e-5, format!("(γ₁, γ₂) = ({g1}, {g2}): max relative error vs γ₂Σ_k {:.3e} (tol 1e-5)", worst[1])),
        check("6.two_boundary", ok && worst[2] <= 1e-5, format!("γ ∈ {{0, −6}}: max entrywise relative error vs M_{{k,γ}} {:.3e} (tol 1e-5)", worst[2])),
    ]
}

fn criterion_7(ctx: &mut Ctx) -> Vec<Check> {
    let cfg = ctx.opts.solver;
    let cases = [
        ("7.single_phase", Problem::Single { lambda: 0.5, gamma: -6.0 }, Boundary::Outer),
        ("7.two_phase", Problem::TwoPhase { lambda: 0.5, gamma1: 1.0, gamma2: 3.0 }, Boundary::Outer),
        ("7.two_boundary_outer", Problem::Pair { lambda: 0.5, gamma: -6.0 }, Boundary::Outer),
        ("7.two_boundary_inner", Problem::Pair { lambda: 0.5, gamma: -6.0 }, Boundary::Inner),
    ];
    cases
        .iter()
        .map(|&(id, problem, boundary)| {
            guarded(
                id,
                (|| {
                    let mut ratios = Vec::new();
                    let mut finals = Vec::new();
                    for k in 1..=3usize {
                        let mode = shape_derivative_closed(&problem, k, boundary)?;
                        let dir = CosineSeries::single_mode(k, 1.0, k);
                        let zero = CosineSeries::zeros(k);
                        let (outer, inner) = match boundary {
                            Boundary::Outer => (&dir, &zero),
                            Boundary::Inner => (&zero, &dir),
                        };
                        let e_coarse = shape_error(&shape_derivative_fd(&problem, outer, inner, 2e-5, &cfg)?, &mode, &cfg)?;
                        let e_fine = shape_error(&shape_derivative_fd(&problem, outer, inner, 1e-5, &cfg)?, &mode, &cfg)?;
                        ratios.push(e_coarse / e_fine);
                        finals.push(e_fine);
                    }
                    let ok = ratios.iter().all(|r| (1.8..=2.2).contains(r)) && finals.iter().all(|e| *e < 1e-3);
                    Ok(check(id, ok, format!("k = 1..3: halving ratios {ratios:.4?} (in [1.8, 2.2]), errors at t = 1e-5 {finals:?} (tol 1e-3)")))
                })(),
            )
        })
        .collect()
}

/// Mode-`k` directional derivative of a residual at `η = 0` (central difference).
fn mode_derivative<F: Fn(&CosineSeries) -> Result<f64>>(f: F, k: usize, eps: f64) -> Result<f64> {
    let plus = f(&CosineSeries::single_mode(k, eps, k))?;
    let minus = f(&CosineSeries::single_mode(k, -eps, k))?;
    Ok((plus - minus) / (2.0 * eps))
}

fn criterion_8(ctx: &mut Ctx) -> Vec<Check> {
    let cfg = ctx.opts.solver;
    let (g1, lambda) = (1.0, 0.5);
    let (eps, h) = (1e-4, 1e-3);
    let two_phase = (|| {
        let lin = |g2: f64| mode_derivative(|e| Ok(residual_h(lambda, g1, g2, e, &cfg)?.coeff(1)), 1, eps);
        let mixed = (lin(g1 + h)? - lin(g1 - h)?) / (2.0 * h);
        let claimed = ctx.typo(Mutation::Transversality, -g1 * lambda * lambda / 2.0);
        let r = rel(mixed, claimed);
        Ok(check("8.two_phase_value", r <= 1e-4, format!("∂_γ₂∂_η H[1, cos θ] = {mixed:.9} vs {claimed:.9}: relative {r:.3e} (tol 1e-4)")))
    })();
    let single = (|| -> Result<(f64, f64, f64)> {
        let gstar = gamma_star_single(1, lambda)?;
        let lin = |g: f64| mode_derivative(|e| Ok(residual_g(lambda, g, e, &cfg)?.coeff(1)), 1, eps);
        let mixed = (lin(gstar + h)? - lin(gstar - h)?) / (2.0 * h);
        let (l, l2) = (lambda.ln(), lambda * lambda);
        let printed = l2 * (-2.0 * l - 1.0 + l2) * (4.0 + (1.0 - l2 + 2.0 * l) * gstar) / (4.0 * l * l * (1.0 - l2));
        let (q_out, _) = neumann_constants(lambda, gstar);
        // the printed value is stated for the flux of unspecified orientation
        let expected_sign = q_out.signum() * printed.signum();
        Ok((mixed, printed, expected_sign))
    })();
    let single_check = match single {
        Ok((mixed, printed, sign)) => {
            if rel(mixed, printed) > 1e-4 {
                ctx.discrepancy(8, "single-phase mixed derivative ∂_γ∂_ηG(γ*,0)[1, cos θ] at λ=0.5", format!("{printed:.9}"), format!("{mixed:.9}"));
            }
            check(
                "8.single_phase_sign",
                mixed.abs() > 1e-6 && mixed.signum() == sign,
                format!("FD mixed derivative {mixed:.6} (nonzero, expected sign {sign:+}); printed value {printed:.6}"),
            )
        }
        Err(e) => check("8.single_phase_sign", false, format!("evaluation failed: {e}")),
    };
    vec![guarded("8.two_phase_value", two_phase), single_check]
}

fn criterion_9(ctx: &mut Ctx) -> Vec<Check> {
    let cfg = ctx.opts.continuation;
    let lambda = 0.5;
    let (ds, n) = (0.002, 20);
    let mut out = Vec::new();
    let setups: [(&str, Result<(Problem, f64)>); 3] = [
        (
            "single_phase",
            detect_bifurcation(&Problem::Single { lambda, gamma: 0.0 }, 1, (-40.0, -4.0))
                .map(|r| (Problem::Single { lambda, gamma: r[0].bisection }, r[0].bisection)),
        ),
        (
            "two_phase",
            detect_bifurcation(&Problem::TwoPhase { lambda, gamma1: 1.0, gamma2: 0.0 }, 1, (-3.3, 3.7))
                .map(|r| (Problem::TwoPhase { lambda, gamma1: 1.0, gamma2: r[0].bisection }, r[0].bisection)),
        ),
        ("two_boundary", {
            // every γ carries the translation kernel; the branch is anchored at the printed mode-1 value
            let g = gamma_pair_one_display(lambda).1;
            Ok((Problem::Pair { lambda, gamma: g }, g))
        }),
    ];
    for (name, setup) in setups {
        let id = format!("9.{name}");
        let res = setup.and_then(|(problem, g0)| {
            let branch = trace_branch(&problem, 1, g0, ds, n, &cfg)?;
            let report = verify_branch_nontriviality(&branch, 1e-9);
            let max_res = branch.points.iter().map(|p| p.residual_sup).fold(0.0, f64::max);
            let complete = branch.points.len() == n + 1;
            let g_dev = (branch.points[0].gamma - g0).abs();
            let ratio = report.off_mode_halving_ratio.unwrap_or(f64::NAN);
            let mut checks = vec![
                check(
                    &format!("{id}.residual"),
                    complete && max_res < 1e-9,
                    format!("{} points, max residual {max_res:.3e} (tol 1e-9){}", branch.points.len(), branch.termination.as_deref().map(|t| format!("; {t}")).unwrap_or_default()),
                ),
                check(&format!("{id}.origin"), g_dev <= 1e-6, format!("|γ(0) − γ₀| = {g_dev:.3e} with γ₀ = {g0:.12}")),
                check(&format!("{id}.off_mode_quadratic"), (3.5..=4.5).contains(&ratio), format!("off-mode norm ratio s = 0.04 vs 0.02: {ratio:.4}")),
            ];
            if let (Some(kr), Some(last)) = (branch.kernel_ratio, branch.points.last()) {
                let traced = last.xi.as_ref().map_or(f64::NAN, |x| x.coeff(1)) / last.eta.coeff(1);
                let r = rel(traced, kr);
                checks.push(check(&format!("{id}.kernel_ratio"), r <= 1e-3, format!("traced β₁/α₁ = {traced:.8}, null vector {kr:.8}: relative {r:.3e}")));
            }
            Ok(checks)
        });
        match res {
            Ok(c) => out.extend(c),
            Err(e) => out.push(check(&format!("{id}.residual"), false, format!("tracing failed: {e}"))),
        }
    }
    out
}

fn stability_pair(ctx: &Ctx, amp: f64) -> Result<[StabilityResult; 3]> {
    let cfg = ContinuationConfig { form: NeumannForm::Squared, ..ctx.opts.continuation };
    let lambda = 0.5;
    let rho = CosineSeries::single_mode(2, amp, 2);
    let zero = CosineSeries::zeros(2);
    Ok([
        newton_solve_g(lambda, 0.0, &rho, None, &cfg)?,
        newton_solve_h(lambda, 1.0, 1.0, &rho, None, &cfg)?,
        newton_solve_cal_g(lambda, 0.0, &rho, &zero, None, &cfg)?,
    ])
}

fn criterion_10(ctx: &mut Ctx) -> Vec<Check> {
    let amp = 1e-3;
    let (full, half) = match (stability_pair(ctx, amp), stability_pair(ctx, amp / 2.0)) {
        (Ok(f), Ok(h)) => (f, h),
        (Err(e), _) | (_, Err(e)) => return vec![check("10.solves", false, format!("stability solve failed: {e}"))],
    };
    let bound = 1e-5 * amp;
    let mut out = Vec::new();
    let literal = (|| -> Result<f64> {
        let s2 = sigma_k(2, 0.5, 0.0)?;
        let predicted = CosineSeries::single_mode(2, amp / s2, 2);
        Ok(full[0].eta.sub(&predicted).sup_norm())
    })();
    out.push(match literal {
        Ok(d) => {
            if d > bound {
                ctx.discrepancy(10, "single-phase η at ρ = 1e-3 cos 2θ", "(τ_2/σ_2) cos 2θ", format!("deviation {d:.3e}; (τ_2/(2 q_out σ_2)) cos 2θ deviates by {:.3e}", full[0].first_order_defect()));
            }
            check("10.single_phase_literal_map", d <= bound, format!("‖η − (τ₂/σ₂)cos2θ‖ = {d:.3e} (tol {bound:.1e})"))
        }
        Err(e) => check("10.single_phase_literal_map", false, format!("evaluation failed: {e}")),
    });
    let d = full[0].first_order_defect();
    out.push(check("10.single_phase_first_order", d <= bound, format!("‖η − (τ₂/(2q_out σ₂))cos2θ‖ = {d:.3e} (tol {bound:.1e})")));
    let d = full[1].first_order_defect();
    out.push(check("10.two_phase_first_order", d <= bound, format!("γ₁ = γ₂ = 1: ‖η − (τ₂/Σ₂)cos2θ‖ = {d:.3e} (tol {bound:.1e})")));
    let p = &full[2];
    let got = [p.eta.coeff(2), p.xi.as_ref().map_or(f64::NAN, |x| x.coeff(2))];
    let want = [p.predicted.coeff(2), p.predicted_xi.as_ref().map_or(f64::NAN, |x| x.coeff(2))];
    let r = vec_rel(&got, &want);
    out.push(check("10.two_boundary_first_order", r <= 1e-4, format!("mode-2 (η, ξ) = {got:?} vs M_{{2,0}}⁻¹τ = {want:?}: relative {r:.3e} (tol 1e-4)")));
    for (i, name) in ["single_phase", "two_phase", "two_boundary"].iter().enumerate() {
        let shrink = full[i].first_order_defect() / half[i].first_order_defect();
        let linear = full[i].response_norm() / half[i].response_norm();
        out.push(check(
            &format!("10.{name}_halving"),
            (3.5..=4.5).contains(&shrink) && (1.9..=2.1).contains(&linear),
            format!("defect ratio {shrink:.4} (in [3.5, 4.5]), response ratio {linear:.4} (in [1.9, 2.1])"),
        ));
    }
    out
}

fn criterion_11(ctx: &mut Ctx) -> Vec<Check> {
    let cfg = ctx.opts.solver;
    let lambda = 0.5;
    let g1 = 1.0;
    let mut out = Vec::new();
    out.push(guarded(
        "11.trivial_decomposition",
        (|| {
            let sol = solve_transmission(&AnnulusGeometry::concentric(lambda)?, g1, 3.0, &cfg)?;
            let cd = curvature_decomposition(&sol);
            let h = cd.curvature_deviation(1.0);
            let v = cd.normal_second_variation();
            Ok(check("11.trivial_decomposition", h < 1e-8 && v < 1e-8, format!("max |H − 1| = {h:.3e}, variation of ∂_ννψ = {v:.3e} (tol 1e-8)")))
        })(),
    ));
    let branch_variation = |k0: usize, g0: f64| -> Result<(f64, f64, f64)> {
        let b = trace_branch(&Problem::TwoPhase { lambda, gamma1: g1, gamma2: g0 }, k0, g0, 0.01, 5, &ctx.opts.continuation)?;
        let last = b.points.last().ok_or_else(|| crate::Error::Solver("empty branch".into()))?;
        if b.points.len() != 6 {
            return Err(crate::Error::Solver(b.termination.clone().unwrap_or_else(|| "branch ended early".into())));
        }
        let geom = AnnulusGeometry::with_outer(lambda, last.eta.clone())?;
        let sol = solve(&geom, FieldKind::TwoPhase { gamma1: g1, gamma2: last.gamma }, &cfg)?;
        let cd = curvature_decomposition(&sol);
        Ok((last.s, cd.normal_second_variation(), cd.consistency))
    };
    out.push(guarded(
        "11.mode_one_branch_variation",
        branch_variation(1, g1).map(|(s, v, c)| {
            check("11.mode_one_branch_variation", v > 1e-4, format!("k₀ = 1 branch at s = {s}: variation of ∂_ννψ = {v:.3e} (needs > 1e-4); identity residual {c:.1e}"))
        }),
    ));
    out.push(guarded(
        "11.nontrivial_branch_variation",
        gamma2_star(2, lambda, g1).and_then(|g0| branch_variation(2, g0)).map(|(s, v, c)| {
            check(
                "11.nontrivial_branch_variation",
                v > 1e-4 && c < 1e-6,
                format!("k₀ = 2 branch at s = {s}: variation of ∂_ννψ = {v:.3e} (needs > 1e-4); identity residual {c:.1e}"),
            )
        }),
    ));
    out
}

/// One line per criterion, `PASS`/`FAIL` followed by failing sub-check ids.
pub fn summary_lines(report: &VerificationReport) -> Vec<String> {
    report
        .criteria
        .iter()
        .map(|c| {
            let failed: Vec<String> = c
                .failed_checks()
                .map(|f| if is_known_unattainable(&f.id) { format!("{} (known)", f.id) } else { f.id.clone() })
                .collect();
            if failed.is_empty() {
                format!("criterion {:>2} PASS  {}", c.id, c.title)
            } else {
                format!("criterion {:>2} FAIL  {}  [{}]", c.id, c.title, failed.join(", "))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn only(ids: &[usize], mutation: Option<Mutation>) -> VerificationReport {
        run_verification(&VerifyOptions { only: ids.to_vec(), mutation, ..VerifyOptions::default() })
    }

    #[test]
    fn closed_form_criteria_run() {
        let r = only(&[2], None);
        assert_eq!(r.criteria.len(), 1);
        assert!(r.passed(), "{:?}", r.criteria);
    }

    #[test]
    fn mutations_are_detected() {
        for (id, m) in [(2, Mutation::ZeroVorticitySigma), (3, Mutation::TwoPhaseModeOne), (5, Mutation::TrivialStream)] {
            let r = only(&[id], Some(m));
            assert!(!r.criteria[0].passed(), "mutation {m:?} not detected");
        }
    }

    #[test]
    fn mutation_names_parse() {
        assert_eq!("transversality".parse::<Mutation>().unwrap(), Mutation::Transversality);
        assert!("nope".parse::<Mutation>().is_err());
    }
}
