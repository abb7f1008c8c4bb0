//! Cosine-series boundary perturbations, perturbed annuli and the flattening
//! map onto the reference rectangle `(s, θ) ∈ [0,1] × [0,π]`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{check_lambda, Error, Result};

/// Even, zero-mean boundary perturbation `f(θ) = Σ_{k=1}^{K} a_k cos(kθ)`.
///
/// `coeffs[0]` holds `a_1`; there is no constant term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct CosineSeries {
    coeffs: Vec<f64>,
}

impl CosineSeries {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if let Some(bad) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::Config(format!("coefficient a_{} is not finite", bad + 1)));
        }
        Ok(Self { coeffs })
    }

    pub fn zeros(order: usize) -> Self {
        Self { coeffs: vec![0.0; order] }
    }

    /// `amplitude · cos(kθ)` padded with zeros up to `order`.
    pub fn single_mode(k: usize, amplitude: f64, order: usize) -> Self {
        assert!(k >= 1, "mode index starts at 1");
        let mut coeffs = vec![0.0; order.max(k)];
        coeffs[k - 1] = amplitude;
        Self { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `cos(kθ)`, zero beyond the truncation.
    pub fn coeff(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.coeffs.get(k - 1).copied().unwrap_or(0.0)
    }

    pub fn set_coeff(&mut self, k: usize, value: f64) {
        assert!(k >= 1);
        if k > self.coeffs.len() {
            self.coeffs.resize(k, 0.0);
        }
        self.coeffs[k - 1] = value;
    }

    /// Truncate or zero-pad to `order` modes.
    pub fn resized(&self, order: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(order, 0.0);
        Self { coeffs }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * factor).collect() }
    }

    pub fn add(&self, other: &CosineSeries) -> Self {
        let n = self.order().max(other.order());
        Self { coeffs: (1..=n).map(|k| self.coeff(k) + other.coeff(k)).collect() }
    }

    pub fn sub(&self, other: &CosineSeries) -> Self {
        self.add(&other.scaled(-1.0))
    }

    pub fn eval(&self, theta: f64) -> f64 {
        eval_series(self, theta)
    }

    pub fn eval_d1(&self, theta: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let k = (i + 1) as f64;
                -k * a * (k * theta).sin()
            })
            .sum()
    }

    pub fn eval_d2(&self, theta: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let k = (i + 1) as f64;
                -k * k * a * (k * theta).cos()
            })
            .sum()
    }

    /// `Σ |a_k|`, an upper bound for the sup norm.
    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    /// `(Σ a_k²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Sup norm sampled on a fine grid over `[0, π]`.
    pub fn sup_norm(&self) -> f64 {
        let n = 16 * self.order().max(8);
        (0..=n)
            .map(|j| self.eval(PI * j as f64 / n as f64).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_value(&self) -> f64 {
        let n = 16 * self.order().max(8);
        (0..=n).map(|j| self.eval(PI * j as f64 / n as f64)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        let n = 16 * self.order().max(8);
        (0..=n).map(|j| self.eval(PI * j as f64 / n as f64)).fold(f64::INFINITY, f64::min)
    }
}

pub fn eval_series(f: &CosineSeries, theta: f64) -> f64 {
    f.coeffs
        .iter()
        .enumerate()
        .map(|(i, a)| a * (((i + 1) as f64) * theta).cos())
        .sum()
}

/// Discrete cosine projection of samples on the uniform grid
/// `θ_j = 2πj/N`, `j = 0..N`. Returns the first `order` coefficients and the
/// mean.
pub fn project_to_cosines(samples: &[f64], order: usize) -> Result<(CosineSeries, f64)> {
    let n = samples.len();
    if n < 2 * order + 1 {
        return Err(Error::Config(format!(
            "{n} samples cannot resolve {order} cosine modes (need at least {})",
            2 * order + 1
        )));
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let coeffs = (1..=order)
        .map(|k| {
            let s: f64 = samples
                .iter()
                .enumerate()
                .map(|(j, f)| f * (2.0 * PI * (k * j) as f64 / nf).cos())
                .sum();
            // the Nyquist mode on an even grid carries weight 1/N
            if 2 * k == n {
                s / nf
            } else {
                2.0 * s / nf
            }
        })
        .collect();
    Ok((CosineSeries { coeffs }, mean))
}

/// Projection of even-function samples on the half grid `θ_j = πj/M`,
/// `j = 0..=M` (trapezoidal rule, equivalent to a full grid of `2M` points).
pub fn project_half_grid(samples: &[f64], order: usize) -> Result<(CosineSeries, f64)> {
    if samples.len() < 2 {
        return Err(Error::Config("half-grid projection needs at least two samples".into()));
    }
    let m = samples.len() - 1;
    if order > m {
        return Err(Error::Config(format!(
            "{} half-grid samples cannot resolve {order} cosine modes",
            samples.len()
        )));
    }
    let weight = |j: usize| if j == 0 || j == m { 0.5 } else { 1.0 };
    let mf = m as f64;
    let mean = samples.iter().enumerate().map(|(j, f)| weight(j) * f).sum::<f64>() / mf;
    let coeffs = (1..=order)
        .map(|k| {
            let s: f64 = samples
                .iter()
                .enumerate()
                .map(|(j, f)| weight(j) * f * (PI * (k * j) as f64 / mf).cos())
                .sum();
            if k == m {
                s / mf
            } else {
                2.0 * s / mf
            }
        })
        .collect();
    Ok((CosineSeries { coeffs }, mean))
}

/// Annulus `{λ + ξ(θ) < r < 1 + η(θ)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusGeometry {
    pub lambda: f64,
    pub eta: CosineSeries,
    pub xi: CosineSeries,
}

impl AnnulusGeometry {
    pub fn new(lambda: f64, eta: CosineSeries, xi: CosineSeries) -> Result<Self> {
        check_lambda(lambda).map_err(|e| Error::Geometry(e.to_string()))?;
        let g = Self { lambda, eta, xi };
        g.validate()?;
        Ok(g)
    }

    pub fn concentric(lambda: f64) -> Result<Self> {
        Self::new(lambda, CosineSeries::default(), CosineSeries::default())
    }

    pub fn with_outer(lambda: f64, eta: CosineSeries) -> Result<Self> {
        Self::new(lambda, eta, CosineSeries::default())
    }

    pub fn validate(&self) -> Result<()> {
        let outer_min = 1.0 + self.eta.min_value();
        let inner_max = self.lambda + self.xi.max_value();
        let inner_min = self.lambda + self.xi.min_value();
        if inner_min <= 0.0 {
            return Err(Error::Geometry(format!(
                "inner boundary reaches the origin (min radius {inner_min:.6})"
            )));
        }
        if outer_min <= inner_max {
            return Err(Error::Geometry(format!(
                "boundaries overlap: min outer radius {outer_min:.6} <= max inner radius {inner_max:.6}"
            )));
        }
        Ok(())
    }

    pub fn inner_radius(&self, theta: f64) -> f64 {
        self.lambda + self.xi.eval(theta)
    }

    pub fn outer_radius(&self, theta: f64) -> f64 {
        1.0 + self.eta.eval(theta)
    }
}

/// Chebyshev–Gauss–Lobatto nodes on `[0,1]`, ascending.
pub fn chebyshev_nodes(n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n).map(|i| 0.5 * (1.0 - (PI * i as f64 / (n - 1) as f64).cos())).collect()
}

/// Collocation grid and metric terms of
/// `r(s,θ) = (λ+ξ(θ))(1−s) + (1+η(θ))s`.
///
/// Angular nodes live on the half grid `θ_j = πj/M` with `M = n_angular/2`;
/// even symmetry supplies the other half.
#[derive(Debug, Clone)]
pub struct FlatteningMap {
    pub geometry: AnnulusGeometry,
    pub n_radial: usize,
    pub n_angular: usize,
    pub s: Vec<f64>,
    pub theta: Vec<f64>,
    /// inner radius `a(θ)` and derivatives
    pub a: Vec<f64>,
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
    /// width `w(θ) = 1 + η − a` and derivatives
    pub w: Vec<f64>,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
}

pub fn flatten(geometry: &AnnulusGeometry, n_radial: usize, n_angular: usize) -> Result<FlatteningMap> {
    FlatteningMap::new(geometry, n_radial, n_angular)
}

impl FlatteningMap {
    pub fn new(geometry: &AnnulusGeometry, n_radial: usize, n_angular: usize) -> Result<Self> {
        if n_radial < 4 {
            return Err(Error::Config(format!("radial resolution {n_radial} below 4")));
        }
        if n_angular < 4 || !n_angular.is_multiple_of(2) {
            return Err(Error::Config(format!("angular resolution {n_angular} must be even and >= 4")));
        }
        geometry.validate()?;
        let m = n_angular / 2;
        let theta: Vec<f64> = (0..=m).map(|j| PI * j as f64 / m as f64).collect();
        let (eta, xi, lam) = (&geometry.eta, &geometry.xi, geometry.lambda);
        let a: Vec<f64> = theta.iter().map(|&t| lam + xi.eval(t)).collect();
        let a1: Vec<f64> = theta.iter().map(|&t| xi.eval_d1(t)).collect();
        let a2: Vec<f64> = theta.iter().map(|&t| xi.eval_d2(t)).collect();
        let w: Vec<f64> = theta.iter().zip(&a).map(|(&t, a)| 1.0 + eta.eval(t) - a).collect();
        let w1: Vec<f64> = theta.iter().zip(&a1).map(|(&t, a1)| eta.eval_d1(t) - a1).collect();
        let w2: Vec<f64> = theta.iter().zip(&a2).map(|(&t, a2)| eta.eval_d2(t) - a2).collect();
        if let Some(j) = w.iter().position(|&w| w <= 0.0) {
            return Err(Error::Geometry(format!("boundaries cross at θ = {:.6}", theta[j])));
        }
        Ok(Self {
            geometry: geometry.clone(),
            n_radial,
            n_angular,
            s: chebyshev_nodes(n_radial),
            theta,
            a,
            a1,
            a2,
            w,
            w1,
            w2,
        })
    }

    pub fn n_theta(&self) -> usize {
        self.theta.len()
    }

    pub fn r(&self, i: usize, j: usize) -> f64 {
        self.a[j] + self.s[i] * self.w[j]
    }

    pub fn r_s(&self, j: usize) -> f64 {
        self.w[j]
    }

    pub fn r_theta(&self, i: usize, j: usize) -> f64 {
        self.a1[j] + self.s[i] * self.w1[j]
    }

    pub fn r_theta_theta(&self, i: usize, j: usize) -> f64 {
        self.a2[j] + self.s[i] * self.w2[j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn eval_examples() {
        assert_eq!(CosineSeries::zeros(5).eval(1.234), 0.0);
        assert_eq!(CosineSeries::new(vec![1.0]).unwrap().eval(0.0), 1.0);
        let f = CosineSeries::new(vec![0.3, -0.1]).unwrap();
        assert_abs_diff_eq!(f.eval(PI / 3.0), 0.2, epsilon = 1e-15);
    }

    #[test]
    fn projection_examples() {
        let n = 64;
        let grid: Vec<f64> = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
        let s: Vec<f64> = grid.iter().map(|t| (3.0 * t).cos()).collect();
        let (c, mean) = project_to_cosines(&s, 8).unwrap();
        assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-14);
        for k in 1..=8 {
            assert_abs_diff_eq!(c.coeff(k), if k == 3 { 1.0 } else { 0.0 }, epsilon = 1e-14);
        }
        let (c, mean) = project_to_cosines(&vec![5.0; n], 8).unwrap();
        assert!(c.is_zero() || c.l1_norm() < 1e-13);
        assert_abs_diff_eq!(mean, 5.0, epsilon = 1e-14);
        let s: Vec<f64> = grid.iter().map(|t| 2.0 * t.cos() + (2.0 * t).cos()).collect();
        let (c, _) = project_to_cosines(&s, 4).unwrap();
        // quadrature oracle: trapezoid integral (1/π)∫ f cos kθ dθ by midpoint refinement
        for k in 1..=4 {
            let m = 20_000;
            let q: f64 = (0..m)
                .map(|i| {
                    let t = 2.0 * PI * (i as f64 + 0.5) / m as f64;
                    (2.0 * t.cos() + (2.0 * t).cos()) * (k as f64 * t).cos()
                })
                .sum::<f64>()
                * (2.0 * PI / m as f64)
                / PI;
            assert_abs_diff_eq!(c.coeff(k), q, epsilon = 1e-9);
        }
        assert!(matches!(project_to_cosines(&[1.0; 6], 3), Err(Error::Config(_))));
    }

    #[test]
    fn flatten_examples() {
        let g = AnnulusGeometry::concentric(0.5).unwrap();
        let m = flatten(&g, 8, 16).unwrap();
        for i in 0..8 {
            for j in 0..m.n_theta() {
                assert_abs_diff_eq!(m.r(i, j), 0.5 + 0.5 * m.s[i], epsilon = 1e-15);
                assert_eq!(m.r_theta(i, j), 0.0);
                assert_eq!(m.r_theta_theta(i, j), 0.0);
            }
        }
        let eps = 0.05;
        let g = AnnulusGeometry::with_outer(0.5, CosineSeries::single_mode(1, eps, 1)).unwrap();
        let m = flatten(&g, 8, 16).unwrap();
        for j in 0..m.n_theta() {
            assert_abs_diff_eq!(m.r(7, j), 1.0 + eps * m.theta[j].cos(), epsilon = 1e-15);
        }
        let bad = AnnulusGeometry::new(
            0.5,
            CosineSeries::single_mode(1, 0.5, 1),
            CosineSeries::single_mode(1, 0.6, 1),
        );
        assert!(matches!(bad, Err(Error::Geometry(_))));
    }
}
