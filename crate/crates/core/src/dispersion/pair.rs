//! Two-free-boundary problem: the 2×2 mode-`k` linearization of the signed
//! flux residuals with respect to the outer and inner boundary amplitudes.
//!
//! [`matrix_mk`] is derived directly from the boundary-value problems and is
//! the one used throughout. [`matrix_mk_literal`] transcribes the long
//! published entries verbatim; it disagrees with the derived matrix in three
//! entries and is kept only so the discrepancy can be reported.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use super::{check_mode, lpow, DispersionRecord};
use crate::radial::neumann_constants;
use crate::{check_lambda, Result};

/// Entries `(A B; C D)` and their affine parts `X = X₁γ + X₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearizedMatrix2 {
    pub k: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub c1: f64,
    pub c2: f64,
    pub d1: f64,
    pub d2: f64,
}

impl LinearizedMatrix2 {
    fn from_affine(k: usize, lambda: f64, gamma: f64, parts: [f64; 8]) -> Self {
        let [a1, a2, b1, b2, c1, c2, d1, d2] = parts;
        Self {
            k,
            lambda,
            gamma,
            a: a1 * gamma + a2,
            b: b1 * gamma + b2,
            c: c1 * gamma + c2,
            d: d1 * gamma + d2,
            a1,
            a2,
            b1,
            b2,
            c1,
            c2,
            d1,
            d2,
        }
    }

    /// Same affine family evaluated at another vorticity.
    pub fn at(&self, gamma: f64) -> Self {
        Self::from_affine(
            self.k,
            self.lambda,
            gamma,
            [self.a1, self.a2, self.b1, self.b2, self.c1, self.c2, self.d1, self.d2],
        )
    }

    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.a, self.b, self.c, self.d)
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    /// `(A₁D₁ − B₁C₁, J, A₂D₂ − B₂C₂)` with `det = q₂γ² − Jγ + q₀`.
    pub fn det_quadratic(&self) -> (f64, f64, f64) {
        let q2 = self.a1 * self.d1 - self.b1 * self.c1;
        let j = self.b2 * self.c1 + self.c2 * self.b1 - self.a2 * self.d1 - self.a1 * self.d2;
        let q0 = self.a2 * self.d2 - self.b2 * self.c2;
        (q2, j, q0)
    }

    /// Magnitude used to decide whether quadratic coefficients vanish.
    fn coefficient_scale(&self) -> f64 {
        [self.a1, self.a2, self.b1, self.b2, self.c1, self.c2, self.d1, self.d2]
            .iter()
            .map(|x| x.abs())
            .fold(0.0, f64::max)
            .powi(2)
    }

    /// Right singular vector of the smallest singular value, scaled so that
    /// the first component is 1 when possible.
    pub fn null_vector(&self) -> (f64, f64) {
        let svd = self.matrix().svd(false, true);
        let v_t = svd.v_t.expect("requested V^T");
        let (imin, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
        let (x, y) = (v_t[(imin, 0)], v_t[(imin, 1)]);
        if x.abs() > 1e-300 {
            (1.0, y / x)
        } else {
            (x, y)
        }
    }

    /// Singular values, largest first.
    pub fn singular_values(&self) -> (f64, f64) {
        let s = self.matrix().singular_values();
        (s[0].max(s[1]), s[0].min(s[1]))
    }

    pub fn solve(&self, rhs: (f64, f64)) -> Option<(f64, f64)> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(((self.d * rhs.0 - self.b * rhs.1) / det, (self.a * rhs.1 - self.c * rhs.0) / det))
    }
}

/// Mode coefficients of the shape derivative for the two-boundary problem:
/// `(𝒜, ℬ)` for a unit outer perturbation and `(𝒞, 𝒟)` for a unit inner one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCoeffs {
    pub outer_a: f64,
    pub outer_b: f64,
    pub inner_c: f64,
    pub inner_d: f64,
}

/// Coefficients from the Dirichlet data `ψ' = −ψ_r η` on `r = 1` and
/// `ψ' = −ψ_r ξ` on `r = λ` (radial displacement of each boundary).
pub fn pair_harmonic_coeffs(k: usize, lambda: f64, gamma: f64) -> Result<PairCoeffs> {
    check_mode(k)?;
    check_lambda(lambda)?;
    let (q_out, q_in) = neumann_constants(lambda, gamma);
    let (p, p2) = (lpow(lambda, k), lpow(lambda, 2 * k));
    let outer_b = -q_out / (1.0 - p2);
    let outer_a = -outer_b * p2;
    // ψ_r(λ) = −q_in, so the inner datum is q_in ξ
    let inner_c = q_in * p / (1.0 - p2);
    Ok(PairCoeffs { outer_a, outer_b, inner_c, inner_d: -inner_c })
}

/// Coefficients exactly as printed; the inner pair carries the opposite sign
/// to [`pair_harmonic_coeffs`].
pub fn pair_harmonic_coeffs_literal(k: usize, lambda: f64, gamma: f64) -> Result<PairCoeffs> {
    check_mode(k)?;
    check_lambda(lambda)?;
    let (l, l2) = (lambda.ln(), lambda * lambda);
    let (p, p2) = (lpow(lambda, k), lpow(lambda, 2 * k));
    let den_out = 4.0 * l * (1.0 - p2);
    let outer_a = (2.0 * gamma * p2 * l + 4.0 * p2 + gamma * (1.0 - l2) * p2) / den_out;
    let outer_b = (-2.0 * gamma * l - 4.0 - gamma * (1.0 - l2)) / den_out;
    // 1/(λ^{−k} − λ^k) = λ^k/(1 − λ^{2k})
    let num_in = 2.0 * gamma * l2 * l + 4.0 + gamma * (1.0 - l2);
    let inner_c = num_in * p / (4.0 * lambda * l * (1.0 - p2));
    Ok(PairCoeffs { outer_a, outer_b, inner_c, inner_d: -inner_c })
}

/// Derived mode-`k` matrix of the signed-flux residuals (outer normal `+e_r`,
/// inner normal `−e_r`, both pointing out of the fluid).
pub fn matrix_mk(k: usize, lambda: f64, gamma: f64) -> Result<LinearizedMatrix2> {
    check_mode(k)?;
    check_lambda(lambda)?;
    let kf = k as f64;
    let l = lambda.ln();
    let (p, p2) = (lpow(lambda, k), lpow(lambda, 2 * k));
    let ratio = (1.0 + p2) / (1.0 - p2);
    let off = p / (1.0 - p2);
    // affine parts of C = (4+(1−λ²)γ)/(4 ln λ)
    let (c0, c1) = (1.0 / l, (1.0 - lambda * lambda) / (4.0 * l));
    // q_out, q_in, ψ_rr(1), ψ_rr(λ) as (slope, offset)
    let q_out = (c1 + 0.5, c0);
    let q_in = (-(c1 / lambda + lambda / 2.0), -c0 / lambda);
    let rr_out = (-c1 + 0.5, -c0);
    let rr_in = (-c1 / (lambda * lambda) + 0.5, -c0 / (lambda * lambda));
    let entry_a = |q: f64, rr: f64| -kf * q * ratio + rr;
    let entry_b = |qi: f64| -2.0 * kf * qi * off;
    let entry_c = |qo: f64| 2.0 * kf * qo * off / lambda;
    let entry_d = |qi: f64, rr: f64| kf / lambda * qi * ratio - rr;
    Ok(LinearizedMatrix2::from_affine(
        k,
        lambda,
        gamma,
        [
            entry_a(q_out.0, rr_out.0),
            entry_a(q_out.1, rr_out.1),
            entry_b(q_in.0),
            entry_b(q_in.1),
            entry_c(q_out.0),
            entry_c(q_out.1),
            entry_d(q_in.0, rr_in.0),
            entry_d(q_in.1, rr_in.1),
        ],
    ))
}

/// The published affine entries `A₁…D₂`, transcribed term by term.
pub fn matrix_mk_literal(k: usize, lambda: f64, gamma: f64) -> Result<LinearizedMatrix2> {
    check_mode(k)?;
    check_lambda(lambda)?;
    let kf = k as f64;
    let (l, l2) = (lambda.ln(), lambda * lambda);
    let (p, p2) = (lpow(lambda, k), lpow(lambda, 2 * k));
    // λ^k − λ^{−k} = −(1 − λ^{2k})/λ^k
    let diff = -(1.0 - p2) / p;
    let a1 = (-2.0 * kf * l * (p2 + 1.0) - kf * (1.0 - l2) * (p2 + 1.0) + (2.0 * l - 1.0 + l2) * (1.0 - p2))
        / (4.0 * l * (1.0 - p2));
    let a2 = (kf * (p2 + 1.0) + 1.0 - p2) / ((p2 - 1.0) * l);
    let b1 = (2.0 * kf * l2 * l + kf * (1.0 - l2)) / (2.0 * lambda * l * diff);
    let b2 = 2.0 * kf / (lambda * l * diff);
    let pm1 = p / lambda;
    let c1 = (2.0 * kf * pm1 * l + kf * (1.0 - l2) * pm1) / (2.0 * l * (p2 - 1.0));
    let c2 = 2.0 * kf * pm1 / (l * (p2 - 1.0));
    // λ^{1−k} + λ^{1+k} and λ^{−k−1} + λ^{k−1}, each divided by (λ^k − λ^{−k})
    let s1 = lambda * (1.0 + p2) / (p2 - 1.0);
    let s2 = (1.0 + p2) / (lambda * (p2 - 1.0));
    let d1 = (2.0 * kf * lambda * l * s1 + kf * lambda * (1.0 - l2) * s2 + (2.0 * l2 * l - 1.0 + l2))
        / (4.0 * l2 * l);
    let d2 = ((kf - 1.0) * p2 + (kf + 1.0)) / (l2 * l * (p2 - 1.0));
    Ok(LinearizedMatrix2::from_affine(k, lambda, gamma, [a1, a2, b1, b2, c1, c2, d1, d2]))
}

/// The explicitly printed `M_{1,γ}`.
pub fn matrix_m1_display(lambda: f64, gamma: f64) -> Result<Matrix2<f64>> {
    check_lambda(lambda)?;
    let (l, l2) = (lambda.ln(), lambda * lambda);
    let a = ((2.0 * l2 * l + 1.0 - l2) * gamma + 4.0) / (2.0 * l * (l2 - 1.0));
    let b = ((2.0 * l2 * l + 1.0 - l2) * gamma + 4.0) / (2.0 * lambda * l * (lambda - 1.0 / lambda));
    let c = ((2.0 * l + 1.0 - l2) * gamma + 4.0) / (2.0 * l * (l2 - 1.0));
    let d = ((2.0 * l2 * l + 1.0 / l2 - 1.0) * gamma + 4.0 / l2) / (2.0 * lambda * l * (lambda - 1.0 / lambda));
    Ok(Matrix2::new(a, b, c, d))
}

/// The printed closed form claimed for `det(M_{k,0})`.
pub fn det_mk0_display(k: usize, lambda: f64) -> Result<f64> {
    check_mode(k)?;
    check_lambda(lambda)?;
    let kf = k as f64;
    let l = lambda.ln();
    let p2 = lpow(lambda, 2 * k);
    // multiply numerator and denominator by λ^k to avoid λ^{−k}
    let num = (kf * kf - 2.0 * kf + 1.0) * p2 * p2 + 2.0 * (kf * kf - 1.0) * p2 + (3.0 * kf + 1.0);
    let den = lambda * lambda * l * l * (p2 - 1.0) * (p2 - 1.0);
    Ok(num / den)
}

/// The two mode-1 bifurcation values printed for the two-boundary problem.
pub fn gamma_pair_one_display(lambda: f64) -> (f64, f64) {
    let (l, l2) = (lambda.ln(), lambda * lambda);
    let star = 4.0 / (l2 - 2.0 * l2 * l - 1.0);
    let star_star = (4.0 - 4.0 / l2) / (2.0 * l2 * l + 1.0 / l2 + l2 - 2.0 - 2.0 * l);
    (star, star_star)
}

/// Zeros of `det M_{k,γ}` as a quadratic in `γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PairRoots {
    /// `star = (J + √disc)/(2q₂)`, `star_star = (J − √disc)/(2q₂)`.
    Real { star: f64, star_star: f64 },
    /// Negative discriminant: no real bifurcation at this `(k, λ)`.
    Complex { re: f64, im: f64 },
    /// Leading coefficient vanishes; a single root remains.
    Linear { root: f64 },
    /// The determinant vanishes for every `γ`.
    Identical,
}

impl PairRoots {
    pub fn real_roots(&self) -> Vec<f64> {
        match *self {
            PairRoots::Real { star, star_star } => vec![star, star_star],
            PairRoots::Linear { root } => vec![root],
            _ => Vec::new(),
        }
    }
}

pub fn roots_of_det(m: &LinearizedMatrix2) -> PairRoots {
    let (q2, j, q0) = m.det_quadratic();
    let scale = m.coefficient_scale();
    let tiny = 1e-12 * scale;
    if q2.abs() <= tiny {
        if j.abs() <= tiny {
            return if q0.abs() <= tiny { PairRoots::Identical } else { PairRoots::Complex { re: f64::NAN, im: f64::NAN } };
        }
        return PairRoots::Linear { root: q0 / j };
    }
    let disc = j * j - 4.0 * q2 * q0;
    if disc < 0.0 {
        return PairRoots::Complex { re: j / (2.0 * q2), im: (-disc).sqrt() / (2.0 * q2).abs() };
    }
    // cancellation-free pair: one root from the quadratic formula, the other from Vieta
    let sq = disc.sqrt();
    if j == 0.0 && sq == 0.0 {
        return PairRoots::Real { star: 0.0, star_star: 0.0 };
    }
    let big = 0.5 * (j + if j >= 0.0 { sq } else { -sq });
    let (r1, r2) = (big / q2, q0 / big);
    // `star` carries +√disc
    let (star, star_star) = if j >= 0.0 { (r1, r2) } else { (r2, r1) };
    PairRoots::Real { star, star_star }
}

/// Bifurcation vorticities of the two-boundary problem at mode `k`.
pub fn gamma_star_pair(k: usize, lambda: f64) -> Result<PairRoots> {
    Ok(roots_of_det(&matrix_mk(k, lambda, 0.0)?))
}

pub fn dispersion_pair(k: usize, lambda: f64, gamma: f64) -> Result<DispersionRecord> {
    let m = matrix_mk(k, lambda, gamma)?;
    Ok(DispersionRecord { k, lambda, gamma, value: m.det(), roots: roots_of_det(&m).real_roots() })
}
