//! Radially symmetric (trivial) solutions and their boundary constants.

use serde::{Deserialize, Serialize};

use crate::{check_lambda, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Vorticity {
    SinglePhase { gamma: f64 },
    TwoPhase { gamma1: f64, gamma2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub lambda: f64,
    pub vorticity: Vorticity,
}

impl RadialProfile {
    pub fn single(lambda: f64, gamma: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self { lambda, vorticity: Vorticity::SinglePhase { gamma } })
    }

    pub fn two_phase(lambda: f64, gamma1: f64, gamma2: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self { lambda, vorticity: Vorticity::TwoPhase { gamma1, gamma2 } })
    }

    fn check_radius(&self, r: f64) -> Result<()> {
        let lo = match self.vorticity {
            Vorticity::SinglePhase { .. } => self.lambda,
            Vorticity::TwoPhase { .. } => 0.0,
        };
        // allow a rounding-sized overshoot so that grid endpoints evaluate cleanly
        let slack = 1e-14;
        if r.is_finite() && r >= lo - slack && r <= 1.0 + slack {
            Ok(())
        } else {
            Err(Error::Domain(format!("radius {r} outside [{lo}, 1]")))
        }
    }

    /// `ψ(r)`.
    pub fn stream(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        let lam = self.lambda;
        Ok(match self.vorticity {
            Vorticity::SinglePhase { gamma } => {
                log_coefficient(lam, gamma) * r.ln() - gamma * (1.0 - r * r) / 4.0
            }
            Vorticity::TwoPhase { gamma1, gamma2 } => {
                if r < lam {
                    -((1.0 - lam * lam) * gamma2 + (lam * lam - r * r) * gamma1) / 4.0
                } else {
                    -(1.0 - r * r) * gamma2 / 4.0
                }
            }
        })
    }

    /// `ψ'(r)`; at the two-phase interface the outer one-sided value is returned.
    pub fn stream_r(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        Ok(match self.vorticity {
            Vorticity::SinglePhase { gamma } => log_coefficient(self.lambda, gamma) / r + gamma * r / 2.0,
            Vorticity::TwoPhase { gamma1, gamma2 } => {
                if r < self.lambda {
                    gamma1 * r / 2.0
                } else {
                    gamma2 * r / 2.0
                }
            }
        })
    }

    /// `ψ''(r)`.
    pub fn stream_rr(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        Ok(match self.vorticity {
            Vorticity::SinglePhase { gamma } => -log_coefficient(self.lambda, gamma) / (r * r) + gamma / 2.0,
            Vorticity::TwoPhase { gamma1, gamma2 } => {
                if r < self.lambda {
                    gamma1 / 2.0
                } else {
                    gamma2 / 2.0
                }
            }
        })
    }

    /// Vorticity at radius `r`.
    pub fn gamma_at(&self, r: f64) -> f64 {
        match self.vorticity {
            Vorticity::SinglePhase { gamma } => gamma,
            Vorticity::TwoPhase { gamma1, gamma2 } => {
                if r < self.lambda {
                    gamma1
                } else {
                    gamma2
                }
            }
        }
    }

    /// Signed normal derivative on the outer circle (outward normal `+e_r`).
    pub fn outer_flux(&self) -> f64 {
        self.stream_r(1.0).expect("r = 1 is always in range")
    }

    /// Bernoulli constant `|∇ψ|²` on the outer circle.
    pub fn bernoulli(&self) -> f64 {
        match self.vorticity {
            Vorticity::SinglePhase { gamma } => bernoulli_q(self.lambda, gamma),
            Vorticity::TwoPhase { gamma2, .. } => bernoulli_q_two_phase(gamma2),
        }
    }
}

/// `C = (4 + (1−λ²)γ)/(4 ln λ)`, the coefficient of `ln r` in the single-phase profile.
pub fn log_coefficient(lambda: f64, gamma: f64) -> f64 {
    (4.0 + (1.0 - lambda * lambda) * gamma) / (4.0 * lambda.ln())
}

pub fn trivial_stream(p: &RadialProfile, r: f64) -> Result<f64> {
    p.stream(r)
}

/// `Q^γ` of the single-phase problem.
pub fn bernoulli_q(lambda: f64, gamma: f64) -> f64 {
    let q = log_coefficient(lambda, gamma) + gamma / 2.0;
    q * q
}

/// `Q^{γ₂} = γ₂²/4` of the two-phase problem.
pub fn bernoulli_q_two_phase(gamma2: f64) -> f64 {
    gamma2 * gamma2 / 4.0
}

/// Signed normal derivatives `(q_out, q_in)` of the single-phase profile on
/// `r = 1` (normal `+e_r`) and `r = λ` (normal `−e_r`, pointing out of the fluid).
pub fn neumann_constants(lambda: f64, gamma: f64) -> (f64, f64) {
    let c = log_coefficient(lambda, gamma);
    (c + gamma / 2.0, -(c / lambda + gamma * lambda / 2.0))
}

/// The vorticity at which `Q^γ` vanishes (outer flux is zero).
pub fn gamma_stagnant(lambda: f64) -> f64 {
    4.0 / (lambda * lambda - 2.0 * lambda.ln() - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn dirichlet_values() {
        for &g in &[0.0, -6.0, 3.5] {
            let p = RadialProfile::single(0.4, g).unwrap();
            assert!(p.stream(1.0).unwrap().abs() < 1e-15);
            assert!((p.stream(0.4).unwrap() - 1.0).abs() < 1e-14);
        }
        assert!(matches!(RadialProfile::single(0.5, 0.0).unwrap().stream(0.3), Err(Error::Domain(_))));
    }

    /// RK4 shooting for ψ'' + ψ'/r = γ from r = λ with the slope chosen to hit ψ(1) = 0.
    fn shoot(lambda: f64, gamma: f64, r_eval: f64) -> f64 {
        let integrate = |slope: f64, r_end: f64| {
            let n = 20_000;
            let h = (r_end - lambda) / n as f64;
            let f = |r: f64, y: [f64; 2]| [y[1], gamma - y[1] / r];
            let mut y = [1.0, slope];
            let mut r = lambda;
            for _ in 0..n {
                let k1 = f(r, y);
                let k2 = f(r + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
                let k3 = f(r + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
                let k4 = f(r + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
                y[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
                y[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
                r += h;
            }
            y[0]
        };
        // the end value is affine in the slope
        let e0 = integrate(0.0, 1.0);
        let e1 = integrate(1.0, 1.0);
        let slope = -e0 / (e1 - e0);
        integrate(slope, r_eval)
    }

    #[test]
    fn shooting_oracle() {
        let p = RadialProfile::single(0.5, 0.0).unwrap();
        let exact = 0.75f64.ln() / 0.5f64.ln();
        assert_relative_eq!(p.stream(0.75).unwrap(), exact, max_relative = 1e-14);
        assert_relative_eq!(shoot(0.5, 0.0, 0.75), exact, max_relative = 1e-10);
        let p = RadialProfile::single(0.5, -6.0).unwrap();
        assert_relative_eq!(p.stream(0.75).unwrap(), shoot(0.5, -6.0, 0.75), max_relative = 1e-10);
    }

    #[test]
    fn two_phase_centre_value() {
        let (lam, g1, g2) = (0.6, 1.5, -2.0);
        let p = RadialProfile::two_phase(lam, g1, g2).unwrap();
        let expected = -((1.0 - lam * lam) * g2 + lam * lam * g1) / 4.0;
        assert_relative_eq!(p.stream(0.0).unwrap(), expected, max_relative = 1e-15);
    }

    #[test]
    fn bernoulli_examples() {
        let lam: f64 = 0.3;
        assert_relative_eq!(bernoulli_q(lam, 0.0), 1.0 / lam.ln().powi(2), max_relative = 1e-15);
        assert!(bernoulli_q(lam, gamma_stagnant(lam)) < 1e-28);
        let p = RadialProfile::single(0.5, -6.0).unwrap();
        assert_relative_eq!(bernoulli_q(0.5, -6.0), p.stream_r(1.0).unwrap().powi(2), max_relative = 1e-14);
        assert_eq!(bernoulli_q_two_phase(0.0), 0.0);
        assert_eq!(bernoulli_q_two_phase(2.0), 1.0);
        assert_eq!(bernoulli_q_two_phase(-3.0), 2.25);
    }

    #[test]
    fn neumann_examples() {
        let (qo, qi) = neumann_constants(0.5, 0.0);
        assert_relative_eq!(qo, 1.0 / 0.5f64.ln(), max_relative = 1e-15);
        assert_relative_eq!(qi, -1.0 / (0.5 * 0.5f64.ln()), max_relative = 1e-15);
        assert!(qo < 0.0 && qi > 0.0);
        // central differences of the profile
        let p = RadialProfile::single(0.5, -6.0).unwrap();
        let h = 1e-5;
        let fd_in = (p.stream(0.5 + h).unwrap() - p.stream(0.5).unwrap()) / h;
        let fd_in2 = (p.stream(0.5 + 2.0 * h).unwrap() - p.stream(0.5).unwrap()) / (2.0 * h);
        let richardson = 2.0 * fd_in - fd_in2;
        let (_, qi) = neumann_constants(0.5, -6.0);
        assert_relative_eq!(qi, -richardson, max_relative = 1e-8);
    }
}
