//! Chebyshev (radial) × cosine (angular) collocation of `Δψ = γ` on the
//! flattened annulus, solved with GMRES preconditioned by the mode-diagonal
//! operator of the mean annulus.

use nalgebra::{DMatrix, DVector, Dyn, LU};
use serde::{Deserialize, Serialize};

use crate::geometry::{AnnulusGeometry, FlatteningMap};
use crate::linalg::{chebyshev_d1, gmres, HalfGridCosine};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub n_radial: usize,
    /// Angular points on the full circle; the even half grid uses `n_angular/2 + 1`.
    pub n_angular: usize,
    /// Cosine modes kept in residual traces.
    pub modes: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { n_radial: 48, n_angular: 128, modes: 32, tol: 1e-14, max_iter: 600, restart: 80 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_radial < 4 || self.n_angular < 4 || !self.n_angular.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "resolution {}×{} invalid (radial ≥ 4, angular even ≥ 4)",
                self.n_radial, self.n_angular
            )));
        }
        if self.modes == 0 || self.modes > self.n_angular / 2 {
            return Err(Error::Config(format!(
                "{} modes cannot be resolved on {} angular points",
                self.modes, self.n_angular
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("solver tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Inner boundary condition at `s = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldKind {
    /// `Δψ = γ`, `ψ = 1` on the inner boundary.
    SinglePhase { gamma: f64 },
    /// Vorticity `γ₁` in the disk `r < λ` (eliminated through its exact
    /// harmonic expansion), `γ₂` in the annulus.
    TwoPhase { gamma1: f64, gamma2: f64 },
}

impl FieldKind {
    pub fn annulus_vorticity(&self) -> f64 {
        match *self {
            FieldKind::SinglePhase { gamma } => gamma,
            FieldKind::TwoPhase { gamma2, .. } => gamma2,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub gmres_iterations: usize,
    /// relative residual of the row-equilibrated system
    pub relative_residual: f64,
    pub backward_error: f64,
}

/// Collocation derivatives of a grid field.
#[derive(Debug, Clone)]
pub struct FieldDerivatives {
    pub us: DMatrix<f64>,
    pub uss: DMatrix<f64>,
    pub ut: DMatrix<f64>,
    pub utt: DMatrix<f64>,
    pub ust: DMatrix<f64>,
}

pub(crate) struct Discretization {
    pub d1: DMatrix<f64>,
    pub d2: DMatrix<f64>,
    pub cos: HalfGridCosine,
    d1t_theta: DMatrix<f64>,
    d2t_theta: DMatrix<f64>,
}

impl Discretization {
    pub fn new(n_radial: usize, m: usize) -> Self {
        let d1 = chebyshev_d1(n_radial);
        let d2 = &d1 * &d1;
        let cos = HalfGridCosine::new(m);
        let d1t_theta = cos.d1.transpose();
        let d2t_theta = cos.d2.transpose();
        Self { d1, d2, cos, d1t_theta, d2t_theta }
    }

    pub fn derivatives(&self, u: &DMatrix<f64>) -> FieldDerivatives {
        let us = &self.d1 * u;
        let uss = &self.d2 * u;
        let ut = u * &self.d1t_theta;
        let utt = u * &self.d2t_theta;
        let ust = &us * &self.d1t_theta;
        FieldDerivatives { us, uss, ut, utt, ust }
    }
}

/// Metric coefficients of `Δ` in `(s, θ)`:
/// `Δu = c_ss u_ss + c_s u_s + c_θθ u_θθ + c_sθ u_sθ`.
pub(crate) struct Metric {
    pub css: DMatrix<f64>,
    pub cs: DMatrix<f64>,
    pub ctt: DMatrix<f64>,
    pub cst: DMatrix<f64>,
}

impl Metric {
    pub fn new(map: &FlatteningMap) -> Self {
        let (n, nt) = (map.n_radial, map.n_theta());
        let mut css = DMatrix::zeros(n, nt);
        let mut cs = DMatrix::zeros(n, nt);
        let mut ctt = DMatrix::zeros(n, nt);
        let mut cst = DMatrix::zeros(n, nt);
        for j in 0..nt {
            let (w, w1) = (map.w[j], map.w1[j]);
            for i in 0..n {
                let r = map.r(i, j);
                let b = map.r_theta(i, j);
                let s_tt = -map.r_theta_theta(i, j) / w + 2.0 * b * w1 / (w * w);
                let ir2 = 1.0 / (r * r);
                css[(i, j)] = 1.0 / (w * w) + ir2 * b * b / (w * w);
                cs[(i, j)] = 1.0 / (r * w) + ir2 * s_tt;
                ctt[(i, j)] = ir2;
                cst[(i, j)] = -2.0 * ir2 * b / w;
            }
        }
        Self { css, cs, ctt, cst }
    }
}

struct Operator<'a> {
    disc: &'a Discretization,
    metric: Metric,
    kind: FieldKind,
    lambda: f64,
    inv_w0: Vec<f64>,
    n: usize,
    nt: usize,
    precond: Vec<LU<f64, Dyn, Dyn>>,
    /// row equilibration: every scaled row has absolute sum about one
    row_scale: DMatrix<f64>,
    analysis_t: DMatrix<f64>,
    synthesis_t: DMatrix<f64>,
}

impl<'a> Operator<'a> {
    fn new(disc: &'a Discretization, map: &FlatteningMap, kind: FieldKind) -> Result<Self> {
        let (n, nt) = (map.n_radial, map.n_theta());
        let metric = Metric::new(map);
        let a_mean = map.a.iter().sum::<f64>() / nt as f64;
        let w_mean = map.w.iter().sum::<f64>() / nt as f64;
        let lambda = map.geometry.lambda;
        let mut precond = Vec::with_capacity(nt);
        for m in 0..nt {
            let mf = m as f64;
            let mut l = DMatrix::<f64>::zeros(n, n);
            for i in 1..n - 1 {
                let r = a_mean + map.s[i] * w_mean;
                for c in 0..n {
                    l[(i, c)] = disc.d2[(i, c)] / (w_mean * w_mean) + disc.d1[(i, c)] / (r * w_mean);
                }
                l[(i, i)] -= mf * mf / (r * r);
            }
            l[(n - 1, n - 1)] = 1.0;
            match kind {
                FieldKind::SinglePhase { .. } => l[(0, 0)] = 1.0,
                FieldKind::TwoPhase { gamma1, gamma2 } => {
                    for c in 0..n {
                        l[(0, c)] = gamma1 * disc.d1[(0, c)] / w_mean;
                    }
                    l[(0, 0)] -= gamma2 * mf / lambda;
                }
            }
            let lu = l.lu();
            if !lu.is_invertible() {
                return Err(Error::Solver(format!("mean-annulus operator singular at mode {m}")));
            }
            precond.push(lu);
        }
        let abs_sum = |d: &DMatrix<f64>, i: usize| d.row(i).iter().map(|v| v.abs()).sum::<f64>();
        let mmax = (nt - 1) as f64;
        let mut row_scale = DMatrix::from_element(n, nt, 1.0);
        for j in 0..nt {
            for i in 1..n - 1 {
                let (r1, r2) = (abs_sum(&disc.d1, i), abs_sum(&disc.d2, i));
                row_scale[(i, j)] = 1.0
                    / (metric.css[(i, j)] * r2
                        + metric.cs[(i, j)].abs() * r1
                        + metric.ctt[(i, j)] * mmax * mmax
                        + metric.cst[(i, j)].abs() * r1 * mmax);
            }
            if let FieldKind::TwoPhase { gamma1, gamma2 } = kind {
                row_scale[(0, j)] = 1.0 / (gamma1.abs() * abs_sum(&disc.d1, 0) / map.w[j] + gamma2.abs() * mmax / lambda);
            }
        }
        Ok(Self {
            row_scale,
            disc,
            metric,
            kind,
            lambda,
            inv_w0: map.w.iter().map(|w| 1.0 / w).collect(),
            n,
            nt,
            precond,
            analysis_t: disc.cos.analysis.transpose(),
            synthesis_t: disc.cos.synthesis.transpose(),
        })
    }

    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let u = DMatrix::from_column_slice(self.n, self.nt, v.as_slice());
        let d = &self.disc;
        let us = &d.d1 * &u;
        let uss = &d.d2 * &u;
        let utt = &u * &d.d2t_theta;
        let ust = &us * &d.d1t_theta;
        let mut out = self.metric.css.component_mul(&uss);
        out += self.metric.cs.component_mul(&us);
        out += self.metric.ctt.component_mul(&utt);
        out += self.metric.cst.component_mul(&ust);
        let last = self.n - 1;
        for j in 0..self.nt {
            out[(last, j)] = u[(last, j)];
        }
        match self.kind {
            FieldKind::SinglePhase { .. } => {
                for j in 0..self.nt {
                    out[(0, j)] = u[(0, j)];
                }
            }
            FieldKind::TwoPhase { gamma1, gamma2 } => {
                let row: DVector<f64> = u.row(0).transpose();
                let dtn = &d.cos.dtn * row;
                for j in 0..self.nt {
                    out[(0, j)] = gamma1 * us[(0, j)] * self.inv_w0[j] - gamma2 / self.lambda * dtn[j];
                }
            }
        }
        out.component_mul_assign(&self.row_scale);
        DVector::from_column_slice(out.as_slice())
    }

    fn precondition(&self, v: &DVector<f64>) -> DVector<f64> {
        let u = DMatrix::from_column_slice(self.n, self.nt, v.as_slice()).component_div(&self.row_scale);
        let mut modes = &u * &self.analysis_t;
        for m in 0..self.nt {
            let col: DVector<f64> = modes.column(m).into_owned();
            let x = self.precond[m].solve(&col).expect("factor checked invertible");
            modes.set_column(m, &x);
        }
        let out = modes * &self.synthesis_t;
        DVector::from_column_slice(out.as_slice())
    }

    fn rhs(&self) -> DVector<f64> {
        let mut b = DMatrix::from_element(self.n, self.nt, self.kind.annulus_vorticity());
        let inner = match self.kind {
            FieldKind::SinglePhase { .. } => 1.0,
            FieldKind::TwoPhase { gamma1, gamma2 } => gamma1 * gamma2 * self.lambda / 2.0,
        };
        for j in 0..self.nt {
            b[(self.n - 1, j)] = 0.0;
            b[(0, j)] = inner;
        }
        b.component_mul_assign(&self.row_scale);
        DVector::from_column_slice(b.as_slice())
    }
}

/// Solved stream function on a (possibly perturbed) annulus.
#[derive(Debug, Clone)]
pub struct SpectralSolution {
    pub map: FlatteningMap,
    /// `values[(i, j)] = ψ(s_i, θ_j)`.
    pub values: DMatrix<f64>,
    pub kind: FieldKind,
    /// Signed normal derivative on the outer boundary (outward normal).
    pub outer_trace: Vec<f64>,
    /// Signed normal derivative on the inner boundary, normal pointing out of
    /// the annulus; absent for the two-phase interface.
    pub inner_trace: Option<Vec<f64>>,
    /// Two-phase only: `ψ₁ = γ₁r²/4 + Σ_m h_m (r/λ)^m cos(mθ)` in the core disk.
    pub core_modes: Option<Vec<f64>>,
    pub stats: SolveStats,
}

pub fn solve_dirichlet(geometry: &AnnulusGeometry, gamma: f64, config: &SolverConfig) -> Result<SpectralSolution> {
    solve(geometry, FieldKind::SinglePhase { gamma }, config)
}

pub fn solve_transmission(
    geometry: &AnnulusGeometry,
    gamma1: f64,
    gamma2: f64,
    config: &SolverConfig,
) -> Result<SpectralSolution> {
    if !geometry.xi.is_zero() {
        return Err(Error::Geometry("the two-phase interface is the fixed circle r = λ".into()));
    }
    if gamma1 == 0.0 {
        return Err(Error::Config("inner vorticity γ₁ must be nonzero".into()));
    }
    solve(geometry, FieldKind::TwoPhase { gamma1, gamma2 }, config)
}

pub fn solve(geometry: &AnnulusGeometry, kind: FieldKind, config: &SolverConfig) -> Result<SpectralSolution> {
    config.validate()?;
    let map = FlatteningMap::new(geometry, config.n_radial, config.n_angular)?;
    let disc = Discretization::new(map.n_radial, map.n_theta() - 1);
    let op = Operator::new(&disc, &map, kind)?;
    let b = op.rhs();
    let (x, st) = gmres(
        |v| op.apply(v),
        |v| op.precondition(v),
        &b,
        None,
        config.tol,
        1.0,
        config.restart,
        config.max_iter,
    )
    .map_err(|e| match e {
        Error::Solver(msg) => Error::Solver(format!(
            "{msg}; geometry distortion max|η'|={:.3e}, max|ξ'|={:.3e}, min width {:.4}",
            map.w1.iter().chain(map.a1.iter()).map(|x| x.abs()).fold(0.0, f64::max),
            map.a1.iter().map(|x| x.abs()).fold(0.0, f64::max),
            map.w.iter().cloned().fold(f64::INFINITY, f64::min)
        )),
        other => other,
    })?;
    let values = DMatrix::from_column_slice(map.n_radial, map.n_theta(), x.as_slice());
    let stats = SolveStats {
        gmres_iterations: st.iterations,
        relative_residual: st.relative_residual,
        backward_error: st.backward_error,
    };
    Ok(SpectralSolution::assemble(map, values, kind, stats, &disc))
}

impl SpectralSolution {
    fn assemble(map: FlatteningMap, values: DMatrix<f64>, kind: FieldKind, stats: SolveStats, disc: &Discretization) -> Self {
        let d = disc.derivatives(&values);
        let (n, nt) = (map.n_radial, map.n_theta());
        let last = n - 1;
        let outer_trace = (0..nt)
            .map(|j| {
                let w = map.w[j];
                let rr = map.r(last, j);
                let rt = map.r_theta(last, j);
                let u_r = d.us[(last, j)] / w;
                let u_t = d.ut[(last, j)] - rt / w * d.us[(last, j)];
                (u_r - rt / (rr * rr) * u_t) / (1.0 + rt * rt / (rr * rr)).sqrt()
            })
            .collect();
        let (inner_trace, core_modes) = match kind {
            FieldKind::SinglePhase { .. } => {
                let inner = (0..nt)
                    .map(|j| {
                        let w = map.w[j];
                        let (a, a1) = (map.a[j], map.a1[j]);
                        let u_r = d.us[(0, j)] / w;
                        let u_t = d.ut[(0, j)] - a1 / w * d.us[(0, j)];
                        -(u_r - a1 / (a * a) * u_t) / (1.0 + a1 * a1 / (a * a)).sqrt()
                    })
                    .collect();
                (Some(inner), None)
            }
            FieldKind::TwoPhase { gamma1, .. } => {
                let row: DVector<f64> = values.row(0).transpose();
                let mut h = &disc.cos.analysis * row;
                let lam = map.geometry.lambda;
                h[0] -= gamma1 * lam * lam / 4.0;
                (None, Some(h.iter().cloned().collect()))
            }
        };
        Self { map, values, kind, outer_trace, inner_trace, core_modes, stats }
    }

    pub(crate) fn discretization(&self) -> Discretization {
        Discretization::new(self.map.n_radial, self.map.n_theta() - 1)
    }

    pub fn derivatives(&self) -> FieldDerivatives {
        self.discretization().derivatives(&self.values)
    }

    /// `max |Δψ − γ|` over interior collocation points.
    pub fn interior_residual(&self) -> f64 {
        let d = self.derivatives();
        let metric = Metric::new(&self.map);
        let gamma = self.kind.annulus_vorticity();
        let mut worst: f64 = 0.0;
        for j in 0..self.map.n_theta() {
            for i in 1..self.map.n_radial - 1 {
                let lap = metric.css[(i, j)] * d.uss[(i, j)]
                    + metric.cs[(i, j)] * d.us[(i, j)]
                    + metric.ctt[(i, j)] * d.utt[(i, j)]
                    + metric.cst[(i, j)] * d.ust[(i, j)];
                worst = worst.max((lap - gamma).abs());
            }
        }
        worst
    }

    /// `∂ψ/∂r` at every collocation point.
    pub fn radial_derivative(&self) -> DMatrix<f64> {
        let d = self.derivatives();
        let mut out = d.us;
        for j in 0..self.map.n_theta() {
            let w = self.map.w[j];
            for i in 0..self.map.n_radial {
                out[(i, j)] /= w;
            }
        }
        out
    }

    /// Core-disk value for the two-phase problem (`r ≤ λ`).
    pub fn core_value(&self, r: f64, theta: f64) -> Option<f64> {
        let (h, gamma1) = match (self.core_modes.as_ref(), self.kind) {
            (Some(h), FieldKind::TwoPhase { gamma1, .. }) => (h, gamma1),
            _ => return None,
        };
        let rho = r / self.map.geometry.lambda;
        let mut v = gamma1 * r * r / 4.0;
        let mut pw = 1.0;
        for (m, hm) in h.iter().enumerate() {
            v += hm * pw * (m as f64 * theta).cos();
            pw *= rho;
        }
        Some(v)
    }

    /// `max |ψ − f(r, θ)|` over the collocation grid.
    pub fn max_error_against<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.map.n_theta() {
            for i in 0..self.map.n_radial {
                worst = worst.max((self.values[(i, j)] - f(self.map.r(i, j), self.map.theta[j])).abs());
            }
        }
        worst
    }

    /// Self-describing export: grid metadata, field values, boundary traces.
    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<Vec<f64>> = (0..self.map.n_radial).map(|i| self.values.row(i).iter().cloned().collect()).collect();
        serde_json::json!({
            "kind": self.kind,
            "lambda": self.map.geometry.lambda,
            "eta": self.map.geometry.eta,
            "xi": self.map.geometry.xi,
            "n_radial": self.map.n_radial,
            "n_angular": self.map.n_angular,
            "s": self.map.s,
            "theta": self.map.theta,
            "values": rows,
            "outer_trace": self.outer_trace,
            "inner_trace": self.inner_trace,
            "core_modes": self.core_modes,
            "stats": self.stats,
        })
    }
}
