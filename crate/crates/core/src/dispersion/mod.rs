//! Closed-form linearizations at the concentric annulus: harmonic mode
//! coefficients, dispersion relations and bifurcation vorticities.
//!
//! Powers `λ^{±k}` only ever enter through `λ^k` and `λ^{2k}`, evaluated as
//! `exp(k ln λ)`, so every formula stays finite up to [`MAX_MODE`].

mod pair;

pub use pair::*;

use serde::{Deserialize, Serialize};

use crate::radial::log_coefficient;
use crate::{check_lambda, Error, Result};

/// Largest mode index accepted by the closed forms.
pub const MAX_MODE: usize = 512;

pub(crate) fn check_mode(k: usize) -> Result<()> {
    if k == 0 || k > MAX_MODE {
        Err(Error::Domain(format!("mode index must lie in 1..={MAX_MODE}, got {k}")))
    } else {
        Ok(())
    }
}

/// `λ^n` for a possibly large integer `n`.
pub(crate) fn lpow(lambda: f64, n: usize) -> f64 {
    if n <= 64 {
        lambda.powi(n as i32)
    } else {
        (n as f64 * lambda.ln()).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionRecord {
    pub k: usize,
    pub lambda: f64,
    /// Vorticity parameter the value was evaluated at (`γ`, or `γ₂` for two-phase).
    pub gamma: f64,
    pub value: f64,
    pub roots: Vec<f64>,
}

// ---------------------------------------------------------------- single phase

/// Coefficients `(A_k, B_k)` of the shape-derivative mode `A_k r^{−k} + B_k r^k`
/// for a unit outer perturbation `cos(kθ)`.
pub fn harmonic_coeffs_single(k: usize, lambda: f64, gamma: f64) -> Result<(f64, f64)> {
    check_mode(k)?;
    check_lambda(lambda)?;
    let l = lambda.ln();
    let p2 = lpow(lambda, 2 * k);
    let den = 4.0 * l * (1.0 - p2);
    let a = (2.0 * gamma * p2 * l + 4.0 * p2 + gamma * (1.0 - lambda * lambda) * p2) / den;
    let b = (-2.0 * gamma * l - 4.0 - gamma * (1.0 - lambda * lambda)) / den;
    Ok((a, b))
}

/// Single-phase dispersion value assembled from the mode coefficients.
pub fn sigma_k(k: usize, lambda: f64, gamma: f64) -> Result<f64> {
    let (a, b) = harmonic_coeffs_single(k, lambda, gamma)?;
    let kf = k as f64;
    Ok(-kf * a + kf * b - (log_coefficient(lambda, gamma) - gamma / 2.0))
}

/// Single-phase dispersion value from the fully simplified rational expression.
pub fn sigma_k_closed(k: usize, lambda: f64, gamma: f64) -> Result<f64> {
    check_mode(k)?;
    check_lambda(lambda)?;
    let (kf, l, om) = (k as f64, lambda.ln(), 1.0 - lambda * lambda);
    let p2 = lpow(lambda, 2 * k);
    let num = kf * (4.0 + gamma * om + 2.0 * gamma * l) * (1.0 + p2) + (4.0 + gamma * om - 2.0 * gamma * l) * (1.0 - p2);
    Ok(-num / (4.0 * l * (1.0 - p2)))
}

/// `σ_k` at `γ = 0`: `((1−k)λ^{2k} − k − 1)/(ln λ (1 − λ^{2k}))`.
pub fn sigma_k_zero_vorticity(k: usize, lambda: f64) -> Result<f64> {
    check_mode(k)?;
    check_lambda(lambda)?;
    let kf = k as f64;
    let p2 = lpow(lambda, 2 * k);
    Ok(((1.0 - kf) * p2 - kf - 1.0) / (lambda.ln() * (1.0 - p2)))
}

/// `g_k(γ)`, a nonzero multiple of `σ_k` that is affine in `γ`.
pub fn g_k(k: usize, lambda: f64, gamma: f64) -> Result<f64> {
    check_mode(k)?;
    check_lambda(lambda)?;
    let (kf, l, om) = (k as f64, lambda.ln(), 1.0 - lambda * lambda);
    let p2 = lpow(lambda, 2 * k);
    Ok(kf * (4.0 + gamma * om + 2.0 * gamma * l) * (1.0 + p2) + (4.0 + gamma * om - 2.0 * gamma * l) * (1.0 - p2))
}

/// The unique zero `γ_k*` of `σ_k`.
pub fn gamma_star_single(k: usize, lambda: f64) -> Result<f64> {
    check_mode(k)?;
    check_lambda(lambda)?;
    let (kf, l, om) = (k as f64, lambda.ln(), 1.0 - lambda * lambda);
    let p2 = lpow(lambda, 2 * k);
    let num = -4.0 * (kf + kf * p2 + 1.0 - p2);
    let den = (om + 2.0 * l) * (kf + kf * p2) + (om - 2.0 * l) * (1.0 - p2);
    Ok(num / den)
}

/// `γ* = 4/(λ² − 2λ² ln λ − 1)`, the mode-1 root in its short form.
pub fn gamma_star_one(lambda: f64) -> f64 {
    let l2 = lambda * lambda;
    4.0 / (l2 - 2.0 * l2 * lambda.ln() - 1.0)
}

pub fn dispersion_single(k: usize, lambda: f64, gamma: f64) -> Result<DispersionRecord> {
    Ok(DispersionRecord {
        k,
        lambda,
        gamma,
        value: sigma_k(k, lambda, gamma)?,
        roots: vec![gamma_star_single(k, lambda)?],
    })
}

// ---------------------------------------------------------------- two phase

/// `2γ₂(λ^{−2k}−1) + 2γ₁(λ^{−2k}+1)`, scaled by `λ^{2k}` to stay finite.
/// Grouped as `(γ₁+γ₂) + λ^{2k}(γ₁−γ₂)` so that the sum is exact near the
/// pole `γ₂ ≈ −γ₁`.
fn two_phase_denominator(p2: f64, gamma1: f64, gamma2: f64) -> f64 {
    2.0 * ((gamma1 + gamma2) + p2 * (gamma1 - gamma2))
}

/// Coefficients `(D_k, E_k, F_k)`: inner mode `D_k r^k`, outer mode
/// `E_k r^{−k} + F_k r^k`, for a unit outer perturbation `cos(kθ)`.
pub fn harmonic_coeffs_two_phase(k: usize, lambda: f64, gamma1: f64, gamma2: f64) -> Result<(f64, f64, f64)> {
    check_mode(k)?;
    check_lambda(lambda)?;
    let p2 = lpow(lambda, 2 * k);
    let den = two_phase_denominator(p2, gamma1, gamma2);
    let scale = gamma1.abs() + gamma2.abs();
    if !(den.abs() > 1e-14 * scale * p2) {
        return Err(Error::Degenerate {
            mode: k,
            detail: format!("transmission system is singular at (λ, γ₁, γ₂) = ({lambda}, {gamma1}, {gamma2})"),
        });
    }
    let jump = gamma2 * gamma2 - gamma1 * gamma2;
    let d = (1.0 - p2) * jump / den - gamma2 / 2.0;
    let e = jump * p2 / den;
    let f = -jump * p2 / den - gamma2 / 2.0;
    Ok((d, e, f))
}

/// Two-phase dispersion value `Σ_k = −kE_k + kF_k + γ₂/2`.
#[allow(non_snake_case)]
pub fn Sigma_k(k: usize, lambda: f64, gamma1: f64, gamma2: f64) -> Result<f64> {
    let (_, e, f) = harmonic_coeffs_two_phase(k, lambda, gamma1, gamma2)?;
    let kf = k as f64;
    Ok(-kf * e + kf * f + gamma2 / 2.0)
}

/// `h_k(γ₂)`, whose zeros coincide with those of `Σ_k`.
pub fn h_k(k: usize, lambda: f64, gamma1: f64, gamma2: f64) -> Result<f64> {
    check_mode(k)?;
    check_lambda(lambda)?;
    let kf = k as f64;
    let p2 = lpow(lambda, 2 * k);
    let den = two_phase_denominator(p2, gamma1, gamma2);
    Ok(2.0 * kf * (gamma1 * gamma2 - gamma2 * gamma2) * p2 / den + (1.0 - kf) * gamma2 / 2.0)
}

/// `∂Σ_k/∂γ₂`. Near `γ_{2k}*` the slope grows like `k λ^{−2k}` because a
/// pole of `Σ_k` sits within `O(λ^{2k})` of the root.
pub fn sigma_two_phase_slope(k: usize, lambda: f64, gamma1: f64, gamma2: f64) -> Result<f64> {
    harmonic_coeffs_two_phase(k, lambda, gamma1, gamma2)?;
    let kf = k as f64;
    let p2 = lpow(lambda, 2 * k);
    let den = two_phase_denominator(p2, gamma1, gamma2);
    let num = gamma2 * (gamma1 - gamma2);
    let dnum = gamma1 - 2.0 * gamma2;
    let dden = 2.0 * (1.0 - p2);
    Ok((1.0 - kf) / 2.0 + 2.0 * kf * p2 * (dnum * den - num * dden) / (den * den))
}

/// Bifurcation vorticity `γ₂ = γ_{2k}*` of the two-phase problem.
pub fn gamma2_star(k: usize, lambda: f64, gamma1: f64) -> Result<f64> {
    check_mode(k)?;
    check_lambda(lambda)?;
    if k == 1 {
        return Ok(gamma1);
    }
    let kf = k as f64;
    let p2 = lpow(lambda, 2 * k);
    let num = (1.0 - kf) * (1.0 + p2) + 2.0 * kf * p2;
    let den = (1.0 - kf) * (1.0 - p2) - 2.0 * kf * p2;
    Ok(-num / den * gamma1)
}

pub fn dispersion_two_phase(k: usize, lambda: f64, gamma1: f64, gamma2: f64) -> Result<DispersionRecord> {
    Ok(DispersionRecord {
        k,
        lambda,
        gamma: gamma2,
        value: Sigma_k(k, lambda, gamma1, gamma2)?,
        roots: vec![gamma2_star(k, lambda, gamma1)?],
    })
}

/// Bisection on a continuous scalar function; used for root detection where
/// no closed form is assumed.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return Err(Error::NotFound(format!("no sign change of the function on [{lo}, {hi}]")));
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || (hi - lo).abs() <= tol * (1.0 + mid.abs()) {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

    #[test]
    fn single_mode_coefficients() {
        for &(k, lam, g) in &[(1, 0.3, 0.0), (2, 0.5, -6.0), (7, 0.8, 3.0)] {
            let (a, b) = harmonic_coeffs_single(k, lam, g).unwrap();
            let (lk, lmk) = (lam.powi(k as i32), lam.powi(-(k as i32)));
            assert!((a * lmk + b * lk).abs() < 1e-12 * (a.abs() * lmk + b.abs() * lk));
            let rhs = -g / 2.0 - (4.0 + g * (1.0 - lam * lam)) / (4.0 * lam.ln());
            assert_relative_eq!(a + b, rhs, max_relative = 1e-13);
        }
        // boundary system S(1) = −q_out, S(λ) = 0
        let (k, lam, g) = (2, 0.5f64, -6.0);
        let q_out = crate::radial::neumann_constants(lam, g).0;
        let m = Matrix2::new(1.0, 1.0, lam.powi(-2), lam.powi(2));
        let sol = m.lu().solve(&Vector2::new(-q_out, 0.0)).unwrap();
        let (a, b) = harmonic_coeffs_single(k, lam, g).unwrap();
        assert_relative_eq!(a, sol[0], max_relative = 1e-12);
        assert_relative_eq!(b, sol[1], max_relative = 1e-12);
    }

    #[test]
    fn sigma_examples() {
        for k in 1..=30 {
            for &lam in &[0.2, 0.5, 0.9] {
                let s0 = sigma_k(k, lam, 0.0).unwrap();
                assert_relative_eq!(s0, sigma_k_zero_vorticity(k, lam).unwrap(), max_relative = 1e-12);
                assert!(s0 > 0.0);
                let gs = gamma_star_single(k, lam).unwrap();
                assert!(sigma_k(k, lam, gs).unwrap().abs() < 1e-9);
            }
        }
        let a = sigma_k(1, 0.5, -10.0).unwrap();
        let b = sigma_k_closed(1, 0.5, -10.0).unwrap();
        assert!(a.is_finite());
        assert_relative_eq!(a, b, max_relative = 1e-13);
    }

    #[test]
    fn gamma_star_sign_and_bisection() {
        for i in 1..=9 {
            let lam = i as f64 / 10.0;
            let g1 = gamma_star_single(1, lam).unwrap();
            assert!(g1 < -4.0);
            assert_relative_eq!(g1, gamma_star_one(lam), max_relative = 1e-12);
            for &k in &[2, 3, 5, 10, 20, 100] {
                let gk = gamma_star_single(k, lam).unwrap();
                assert!(sigma_k(k, lam, gk).unwrap().abs() < 1e-9);
                // g_k is affine, so bisection on any bracket containing the root finds it
                let root = bisect(|g| g_k(k, lam, g).unwrap(), -1e6, 1e6, 1e-15).unwrap();
                assert_relative_eq!(root, gk, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn two_phase_coefficients() {
        let (k, lam, g1, g2) = (2, 0.5f64, 1.0, 3.0);
        let (d, e, f) = harmonic_coeffs_two_phase(k, lam, g1, g2).unwrap();
        assert_relative_eq!(e + f, -g2 / 2.0, max_relative = 1e-14);
        // outer value, continuity, flux continuity
        let kf = k as f64;
        let m = Matrix3::new(
            0.0, 1.0, 1.0,
            lam.powf(kf), -lam.powf(-kf), -lam.powf(kf),
            kf * lam.powf(kf - 1.0) / g1, kf * lam.powf(-kf - 1.0) / g2, -kf * lam.powf(kf - 1.0) / g2,
        );
        let sol = m.lu().solve(&Vector3::new(-g2 / 2.0, 0.0, 0.0)).unwrap();
        assert_relative_eq!(d, sol[0], max_relative = 1e-12);
        assert_relative_eq!(e, sol[1], max_relative = 1e-12);
        assert_relative_eq!(f, sol[2], max_relative = 1e-12);
        assert_relative_eq!(d * lam.powi(2), e * lam.powi(-2) + f * lam.powi(2), max_relative = 1e-13);

        let (d, e, f) = harmonic_coeffs_two_phase(4, 0.3, 2.5, 2.5).unwrap();
        assert_eq!(e, 0.0);
        assert_relative_eq!(f, -1.25);
        assert_relative_eq!(d, -1.25);
    }

    #[test]
    fn two_phase_roots() {
        for &lam in &[0.2, 0.6] {
            assert_eq!(gamma2_star(1, lam, 1.7).unwrap(), 1.7);
            assert!(Sigma_k(1, lam, 1.7, 1.7).unwrap().abs() < 1e-15);
            for k in 2..=40 {
                let g = gamma2_star(k, lam, 1.0).unwrap();
                // Σ_k is steep at its root, so judge the root by its backward error
                let v = Sigma_k(k, lam, 1.0, g).unwrap();
                let slope = sigma_two_phase_slope(k, lam, 1.0, g).unwrap();
                assert!(v.abs() <= 1e-13 * slope.abs() * g.abs(), "k={k} λ={lam}: {v} slope {slope}");
                if k <= 4 {
                    assert!(v.abs() < 1e-9);
                }
                assert_relative_eq!(gamma2_star(k, lam, -3.0).unwrap(), -3.0 * g, max_relative = 1e-14);
            }
        }
        let s = Sigma_k(3, 0.6, 1.0, 2.0).unwrap();
        let h = h_k(3, 0.6, 1.0, 2.0).unwrap();
        // after eliminating E_k + F_k = −γ₂/2 the two expressions coincide
        assert_relative_eq!(s, h, max_relative = 1e-12);
    }

    #[test]
    fn large_modes_stay_finite() {
        for &lam in &[0.1, 0.9] {
            for &k in &[100, 300, MAX_MODE] {
                assert!(sigma_k(k, lam, -3.0).unwrap().is_finite());
                assert!(gamma_star_single(k, lam).unwrap().is_finite());
                assert!(gamma2_star(k, lam, 1.0).unwrap().is_finite());
            }
        }
        assert!(sigma_k(MAX_MODE + 1, 0.5, 0.0).is_err());
    }
}
