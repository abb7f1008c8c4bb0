//! Small dense helpers: Chebyshev differentiation, half-grid cosine
//! transforms, restarted GMRES and SVD least squares.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// First-derivative Chebyshev–Gauss–Lobatto matrix on `[0,1]` for the nodes
/// returned by [`crate::geometry::chebyshev_nodes`].
pub fn chebyshev_d1(n: usize) -> DMatrix<f64> {
    assert!(n >= 2);
    let nn = n - 1;
    // standard nodes x_i = cos(πi/nn) run from 1 down to −1; s = (1 − x)/2
    let x: Vec<f64> = (0..n).map(|i| (PI * i as f64 / nn as f64).cos()).collect();
    let c = |i: usize| {
        let base = if i == 0 || i == nn { 2.0 } else { 1.0 };
        if i.is_multiple_of(2) {
            base
        } else {
            -base
        }
    };
    let mut d = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                d[(i, j)] = c(i) / c(j) / (x[i] - x[j]);
            }
        }
    }
    // negative-sum trick keeps constants in the kernel to rounding
    for i in 0..n {
        let s: f64 = (0..n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -s;
    }
    // d/ds = −2 d/dx
    d * -2.0
}

/// Cosine transforms on the half grid `θ_j = πj/M`, `j = 0..=M`
/// (type-I DCT: `f_j = Σ_m c_m cos(mθ_j)`).
#[derive(Debug, Clone)]
pub struct HalfGridCosine {
    pub m: usize,
    /// values → coefficients
    pub analysis: DMatrix<f64>,
    /// coefficients → values
    pub synthesis: DMatrix<f64>,
    /// values → values of the first θ-derivative
    pub d1: DMatrix<f64>,
    /// values → values of the second θ-derivative
    pub d2: DMatrix<f64>,
    /// values → values of the Dirichlet-to-Neumann map of the unit disk (mode m ↦ m)
    pub dtn: DMatrix<f64>,
}

impl HalfGridCosine {
    pub fn new(m: usize) -> Self {
        assert!(m >= 2);
        let n = m + 1;
        let mf = m as f64;
        let synthesis = DMatrix::from_fn(n, n, |j, k| (PI * (j * k) as f64 / mf).cos());
        let analysis = DMatrix::from_fn(n, n, |k, j| {
            let wj = if j == 0 || j == m { 0.5 } else { 1.0 };
            let gk = if k == 0 || k == m { 0.5 } else { 1.0 };
            2.0 / mf * gk * wj * (PI * (j * k) as f64 / mf).cos()
        });
        let deriv1 = DMatrix::from_fn(n, n, |j, k| {
            // the Nyquist mode has no odd counterpart on this grid
            if k == m {
                0.0
            } else {
                -(k as f64) * (PI * (j * k) as f64 / mf).sin()
            }
        });
        let deriv2 = DMatrix::from_fn(n, n, |j, k| -((k * k) as f64) * (PI * (j * k) as f64 / mf).cos());
        let dtn_modes = DMatrix::from_fn(n, n, |j, k| k as f64 * (PI * (j * k) as f64 / mf).cos());
        let d1 = &deriv1 * &analysis;
        let d2 = &deriv2 * &analysis;
        let dtn = &dtn_modes * &analysis;
        Self { m, analysis, synthesis, d1, d2, dtn }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GmresStats {
    pub iterations: usize,
    /// `‖b − A x‖ / ‖b‖`
    pub relative_residual: f64,
    /// `‖b − A x‖ / (‖b‖ + ‖A‖ ‖x‖)` with the caller's estimate of `‖A‖`
    pub backward_error: f64,
}

/// Right-preconditioned restarted GMRES for `A x = b`.
///
/// `apply` computes `A v`, `precond` computes `M⁻¹ v`, `a_norm` estimates
/// `‖A‖`. Stops once the normwise backward error
/// `‖b − A x‖ / (‖b‖ + ‖A‖‖x‖)` drops below `tol`, or when progress stalls.
#[allow(clippy::too_many_arguments)]
pub fn gmres<A, P>(
    apply: A,
    precond: P,
    b: &DVector<f64>,
    x0: Option<DVector<f64>>,
    tol: f64,
    a_norm: f64,
    restart: usize,
    max_iter: usize,
) -> Result<(DVector<f64>, GmresStats)>
where
    A: Fn(&DVector<f64>) -> DVector<f64>,
    P: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = b.len();
    let bnorm = b.norm();
    if bnorm == 0.0 {
        return Ok((DVector::zeros(n), GmresStats::default()));
    }
    let mut x = x0.unwrap_or_else(|| DVector::zeros(n));
    // size of the solution, used before any iterate exists
    let x_guess = precond(b).norm();
    let mut total = 0;
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    loop {
        let r = b - apply(&x);
        let rnorm = r.norm();
        let rel = rnorm / bnorm;
        let xnorm = x.norm();
        let backward = rnorm / (bnorm + a_norm * xnorm);
        let stats = GmresStats { iterations: total, relative_residual: rel, backward_error: backward };
        if backward <= tol {
            return Ok((x, stats));
        }
        if backward < 0.5 * best {
            best = backward;
            stalled = 0;
        } else {
            stalled += 1;
            // rounding floor: accept when close to the requested tolerance
            if stalled >= 2 {
                if backward <= 1e3 * tol {
                    return Ok((x, stats));
                }
                return Err(Error::Solver(format!(
                    "GMRES stagnated at backward error {backward:.3e} after {total} iterations"
                )));
            }
        }
        if total >= max_iter {
            return Err(Error::Solver(format!(
                "GMRES reached {max_iter} iterations with relative residual {rel:.3e}"
            )));
        }
        let target = tol * (bnorm + a_norm * xnorm.max(x_guess));
        let m = restart.min(max_iter - total).max(1);
        let mut v: Vec<DVector<f64>> = Vec::with_capacity(m + 1);
        let mut z: Vec<DVector<f64>> = Vec::with_capacity(m);
        let mut h = DMatrix::<f64>::zeros(m + 1, m);
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = DVector::<f64>::zeros(m + 1);
        g[0] = rnorm;
        v.push(r / rnorm);
        let mut used = 0;
        for j in 0..m {
            let zj = precond(&v[j]);
            let mut w = apply(&zj);
            z.push(zj);
            // modified Gram–Schmidt, twice for stability
            for _ in 0..2 {
                for (i, vi) in v.iter().enumerate() {
                    let hij = vi.dot(&w);
                    h[(i, j)] += hij;
                    w.axpy(-hij, vi, 1.0);
                }
            }
            let wn = w.norm();
            h[(j + 1, j)] = wn;
            for i in 0..j {
                let t = cs[i] * h[(i, j)] + sn[i] * h[(i + 1, j)];
                h[(i + 1, j)] = -sn[i] * h[(i, j)] + cs[i] * h[(i + 1, j)];
                h[(i, j)] = t;
            }
            let (hjj, hj1) = (h[(j, j)], h[(j + 1, j)]);
            let den = hjj.hypot(hj1);
            if den == 0.0 {
                used = j;
                break;
            }
            cs[j] = hjj / den;
            sn[j] = hj1 / den;
            h[(j, j)] = den;
            h[(j + 1, j)] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            used = j + 1;
            total += 1;
            if g[j + 1].abs() <= 0.5 * target || wn == 0.0 {
                break;
            }
            v.push(w / wn);
        }
        if used == 0 {
            return Err(Error::Solver("GMRES breakdown".into()));
        }
        // back substitution on the triangular Hessenberg block
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let s: f64 = ((i + 1)..used).map(|k| h[(i, k)] * y[k]).sum();
            y[i] = (g[i] - s) / h[(i, i)];
        }
        for (i, yi) in y.iter().enumerate() {
            x.axpy(*yi, &z[i], 1.0);
        }
    }
}

/// Minimum-norm least-squares solution of `A x ≈ b` via SVD, discarding
/// singular values below `rcond · σ_max`. Also returns `(σ_min, σ_max)` of the
/// retained spectrum and the full smallest singular value.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, rcond: f64) -> Result<(DVector<f64>, f64, f64)> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let x = svd
        .solve(b, rcond * smax)
        .map_err(|e| Error::Solver(format!("least-squares solve failed: {e}")))?;
    Ok((x, smin, smax))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::chebyshev_nodes;

    #[test]
    fn chebyshev_differentiates_polynomials_exactly() {
        let n = 12;
        let s = chebyshev_nodes(n);
        let d = chebyshev_d1(n);
        let f = DVector::from_iterator(n, s.iter().map(|x| x.powi(5) - 2.0 * x));
        let df = &d * f;
        for (i, x) in s.iter().enumerate() {
            assert!((df[i] - (5.0 * x.powi(4) - 2.0)).abs() < 1e-11);
        }
    }

    #[test]
    fn cosine_transforms_round_trip() {
        let t = HalfGridCosine::new(16);
        let theta: Vec<f64> = (0..=16).map(|j| PI * j as f64 / 16.0).collect();
        let f = DVector::from_iterator(17, theta.iter().map(|x| 1.0 + 0.5 * (3.0 * x).cos() - (7.0 * x).cos()));
        let c = &t.analysis * &f;
        assert!((c[0] - 1.0).abs() < 1e-14 && (c[3] - 0.5).abs() < 1e-14 && (c[7] + 1.0).abs() < 1e-14);
        let back = &t.synthesis * &c;
        assert!((back - &f).amax() < 1e-13);
        let d2 = &t.d2 * &f;
        for (j, x) in theta.iter().enumerate() {
            let exact = -4.5 * (3.0 * x).cos() + 49.0 * (7.0 * x).cos();
            assert!((d2[j] - exact).abs() < 1e-11);
        }
        let d1 = &t.d1 * &f;
        for (j, x) in theta.iter().enumerate() {
            let exact = -1.5 * (3.0 * x).sin() + 7.0 * (7.0 * x).sin();
            assert!((d1[j] - exact).abs() < 1e-11);
        }
    }

    #[test]
    fn gmres_solves_small_system() {
        let n = 30;
        let a = DMatrix::from_fn(n, n, |i, j| if i == j { 4.0 + i as f64 * 0.1 } else { 1.0 / (1.0 + (i + 2 * j) as f64) });
        let b = DVector::from_fn(n, |i, _| (i as f64).sin());
        let (x, stats) = gmres(|v| &a * v, |v| v.clone(), &b, None, 1e-15, 5.0, 10, 500).unwrap();
        assert!((&a * &x - &b).norm() <= 1e-12 * b.norm());
        assert!(stats.iterations > 0);
    }
}
