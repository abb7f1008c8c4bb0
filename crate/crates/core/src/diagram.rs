//! Bifurcation values over a grid of inner radii, one row per `(k, λ)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::{gamma2_star, gamma_star_pair, gamma_star_single, PairRoots};
use crate::{ProblemKind, Result};

pub const LAMBDA_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
pub const DIAGRAM_MODES: [usize; 7] = [1, 2, 3, 5, 10, 20, 100];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagramRow {
    pub k: usize,
    pub lambda: f64,
    /// `γ_k*`; for the two-phase problem the ratio `γ_{2k}*/γ₁`.
    pub gamma_root: Option<f64>,
    /// Second root of the two-boundary problem.
    pub gamma_root_2: Option<f64>,
}

fn row(kind: ProblemKind, k: usize, lambda: f64, gamma1: f64) -> Result<DiagramRow> {
    let (gamma_root, gamma_root_2) = match kind {
        ProblemKind::Single => (Some(gamma_star_single(k, lambda)?), None),
        ProblemKind::TwoPhase => (Some(gamma2_star(k, lambda, gamma1)? / gamma1), None),
        ProblemKind::Pair => match gamma_star_pair(k, lambda)? {
            PairRoots::Real { star, star_star } => (Some(star), Some(star_star)),
            PairRoots::Linear { root } => (Some(root), None),
            PairRoots::Complex { .. } | PairRoots::Identical => (None, None),
        },
    };
    Ok(DiagramRow { k, lambda, gamma_root, gamma_root_2 })
}

/// Rows ordered by `k`, then `λ`. `gamma1` is only used by the two-phase
/// problem and must be nonzero there.
pub fn diagram(kind: ProblemKind, lambdas: &[f64], modes: &[usize], gamma1: f64) -> Result<Vec<DiagramRow>> {
    if kind == ProblemKind::TwoPhase && gamma1 == 0.0 {
        return Err(crate::Error::Config("the two-phase diagram is normalised by γ₁, which must be nonzero".into()));
    }
    let cells: Vec<(usize, f64)> = modes.iter().flat_map(|&k| lambdas.iter().map(move |&l| (k, l))).collect();
    cells.par_iter().map(|&(k, l)| row(kind, k, l, gamma1)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_follow_grid_order() {
        let rows = diagram(ProblemKind::Single, &LAMBDA_GRID, &DIAGRAM_MODES, 0.0).unwrap();
        assert_eq!(rows.len(), 63);
        assert_eq!((rows[0].k, rows[0].lambda), (1, 0.1));
        assert_eq!((rows[9].k, rows[9].lambda), (2, 0.1));
        assert!(rows.iter().filter(|r| r.k == 1).all(|r| r.gamma_root.unwrap() < -4.0));
    }

    #[test]
    fn two_phase_mode_one_is_normalised_to_one() {
        let rows = diagram(ProblemKind::TwoPhase, &LAMBDA_GRID, &[1, 2], -2.0).unwrap();
        assert!(rows.iter().filter(|r| r.k == 1).all(|r| r.gamma_root == Some(1.0)));
        assert!(diagram(ProblemKind::TwoPhase, &LAMBDA_GRID, &[1], 0.0).is_err());
    }

    #[test]
    fn pair_mode_one_has_no_isolated_roots() {
        let rows = diagram(ProblemKind::Pair, &[0.5], &[1, 2], 0.0).unwrap();
        assert_eq!(rows[0].gamma_root, None);
        assert!(rows[1].gamma_root.is_some() || rows[1].gamma_root_2.is_none());
    }
}
