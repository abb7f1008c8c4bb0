//! Damped Newton iteration with a finite-difference Jacobian and SVD steps.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::lstsq;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    /// Converged once `‖F‖_∞ ≤ tol`.
    pub tol: f64,
    /// Residual level accepted when rounding stops further progress.
    pub accept: f64,
    pub max_iter: usize,
    /// Relative forward-difference step, `h_j = fd_step · max(1, |x_j|)`.
    pub fd_step: f64,
    /// Step halvings tried before the Jacobian is refreshed or the iteration fails.
    pub max_halvings: usize,
    /// Reuse the Jacobian while the residual contracts by at least this factor.
    pub chord_contraction: f64,
    /// Relative singular-value cutoff of the least-squares step.
    pub rcond: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-11, accept: 1e-9, max_iter: 30, fd_step: 1e-6, max_halvings: 2, chord_contraction: 0.2, rcond: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonReport {
    pub x: DVector<f64>,
    pub residual: DVector<f64>,
    pub iterations: usize,
    pub jacobian_evaluations: usize,
    /// Smallest and largest singular value of the last Jacobian.
    pub singular_range: (f64, f64),
    /// Right singular vector belonging to the smallest singular value.
    pub weakest_direction: DVector<f64>,
}

fn sup(v: &DVector<f64>) -> f64 {
    v.amax()
}

/// Forward-difference Jacobian, columns evaluated in parallel.
pub fn fd_jacobian<F>(f: &F, x: &DVector<f64>, fx: &DVector<f64>, rel_step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>> + Sync,
{
    let n = x.len();
    let cols: Vec<Result<DVector<f64>>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let h = rel_step * x[j].abs().max(1.0);
            let mut xp = x.clone();
            xp[j] += h;
            // use the representable step
            let h = xp[j] - x[j];
            Ok((f(&xp)? - fx) / h)
        })
        .collect();
    let mut jac = DMatrix::zeros(fx.len(), n);
    for (j, c) in cols.into_iter().enumerate() {
        jac.set_column(j, &c?);
    }
    Ok(jac)
}

struct Factor {
    jac: DMatrix<f64>,
    smin: f64,
    smax: f64,
    weakest: DVector<f64>,
}

fn analyse(jac: DMatrix<f64>) -> Factor {
    let svd = jac.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let (imin, smin) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    // a wide system has a nontrivial null space the SVD above does not list
    let (smin, weakest) = if jac.nrows() < jac.ncols() {
        (0.0, DVector::zeros(jac.ncols()))
    } else {
        (smin, v_t.row(imin).transpose())
    };
    Factor { jac, smin, smax, weakest }
}

/// Solve `F(x) = 0` (in the least-squares sense when `F` has more components
/// than `x`). Every accepted step decreases `‖F‖_∞`; at most
/// `max_halvings` halvings are tried per step.
///
/// `check` inspects the first Jacobian and may reject the problem (e.g. as
/// degenerate) before any step is taken.
pub fn newton<F, C>(f: F, x0: DVector<f64>, opts: &NewtonOptions, check: C) -> Result<NewtonReport>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>> + Sync,
    C: Fn(&DMatrix<f64>, f64, f64, &DVector<f64>) -> Result<()>,
{
    let mut x = x0;
    let mut fx = f(&x)?;
    let mut norm = sup(&fx);
    let mut factor: Option<Factor> = None;
    let mut fresh = false;
    let mut jac_evals = 0;
    let mut iterations = 0;
    let mut last_range = (f64::NAN, f64::NAN);
    let mut weakest = DVector::zeros(x.len());
    while norm > opts.tol {
        if iterations >= opts.max_iter {
            if norm <= opts.accept {
                break;
            }
            return Err(Error::Divergence { iters: iterations, residual: norm });
        }
        if factor.is_none() {
            let jac = fd_jacobian(&f, &x, &fx, opts.fd_step)?;
            jac_evals += 1;
            let fac = analyse(jac);
            if jac_evals == 1 {
                check(&fac.jac, fac.smin, fac.smax, &fac.weakest)?;
            }
            last_range = (fac.smin, fac.smax);
            weakest = fac.weakest.clone();
            factor = Some(fac);
            fresh = true;
        }
        let fac = factor.as_ref().expect("factor set above");
        let (dx, _, _) = lstsq(&fac.jac, &(-&fx), opts.rcond)?;
        let mut accepted = None;
        let mut alpha = 1.0;
        for _ in 0..=opts.max_halvings {
            let trial = &x + &dx * alpha;
            // a trial step may leave the admissible set (crossing boundaries)
            if let Ok(ft) = f(&trial) {
                let nt = sup(&ft);
                if nt < norm {
                    accepted = Some((trial, ft, nt));
                    break;
                }
            }
            alpha *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((xn, fnew, nn)) => {
                let contraction = nn / norm;
                x = xn;
                fx = fnew;
                norm = nn;
                if contraction > opts.chord_contraction {
                    factor = None;
                }
                fresh = false;
            }
            None => {
                if fresh {
                    if norm <= opts.accept {
                        break;
                    }
                    return Err(Error::Divergence { iters: iterations, residual: norm });
                }
                // stale Jacobian: refresh and try again
                factor = None;
            }
        }
    }
    Ok(NewtonReport {
        x,
        residual: fx,
        iterations,
        jacobian_evaluations: jac_evals,
        singular_range: last_range,
        weakest_direction: weakest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_nonlinear_system() {
        let f = |x: &DVector<f64>| -> Result<DVector<f64>> {
            Ok(DVector::from_vec(vec![x[0] * x[0] + x[1] - 3.0, x[0] - x[1] * x[1] + 1.0]))
        };
        let r = newton(f, DVector::from_vec(vec![1.0, 1.0]), &NewtonOptions::default(), |_, _, _, _| Ok(())).unwrap();
        assert!(r.residual.amax() <= 1e-11);
        // independent check of the returned point
        let (a, b) = (r.x[0], r.x[1]);
        assert!((a * a + b - 3.0).abs() < 1e-10 && (a - b * b + 1.0).abs() < 1e-10, "{:?}", r.x);
    }

    #[test]
    fn overdetermined_consistent_system() {
        let f = |x: &DVector<f64>| -> Result<DVector<f64>> {
            Ok(DVector::from_vec(vec![x[0].exp() - 2.0, 2.0 * (x[0].exp() - 2.0), x[0] + x[1]]))
        };
        let r = newton(f, DVector::from_vec(vec![0.0, 0.0]), &NewtonOptions::default(), |_, _, _, _| Ok(())).unwrap();
        assert!((r.x[0] - 2f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn check_hook_can_reject() {
        let f = |x: &DVector<f64>| -> Result<DVector<f64>> { Ok(DVector::from_vec(vec![x[0] * x[0] + 1.0])) };
        let r = newton(f, DVector::from_vec(vec![0.0]), &NewtonOptions::default(), |_, smin, _, _| {
            if smin < 1e-3 {
                Err(Error::Degenerate { mode: 0, detail: "singular".into() })
            } else {
                Ok(())
            }
        });
        assert!(matches!(r, Err(Error::Degenerate { .. })));
    }
}
