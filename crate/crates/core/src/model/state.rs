use super::PhysicalParams;
use crate::error::{QbmError, Result};
use crate::C64;
use std::f64::consts::PI;

/// Relative slack accepted on `Sigma <= 4F` before a state counts as
/// non-positive. Absorbs roundoff in long integrations.
pub const POSITIVITY_SLACK: f64 = 1e-9;

/// Five-parameter Gaussian density matrix
///
/// `<x|rho|y> = sqrt(S/2 pi hbar) exp[-S (u-q)^2/2hbar - F s^2/2hbar
///              - i r S (u-q) s/2hbar + i p s/hbar]`
///
/// with `u = (x+y)/2`, `s = x-y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    pub sigma: f64,
    pub f: f64,
    pub r: f64,
    pub q: f64,
    pub p: f64,
}

impl GaussianState {
    pub fn new(sigma: f64, f: f64, r: f64, q: f64, p: f64) -> Result<Self> {
        let s = GaussianState { sigma, f, r, q, p };
        s.validate()?;
        Ok(s)
    }

    /// Pure minimum-uncertainty state (`F = Sigma/4`, `r = 0`).
    pub fn pure(sigma: f64, q: f64, p: f64) -> Result<Self> {
        Self::new(sigma, sigma / 4.0, 0.0, q, p)
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.sigma, self.f, self.r, self.q, self.p].iter().all(|v| v.is_finite());
        if !all_finite {
            return Err(QbmError::ConstraintViolation("non-finite Gaussian parameter".into()));
        }
        if self.sigma <= 0.0 {
            return Err(QbmError::ConstraintViolation(format!("Sigma = {} <= 0", self.sigma)));
        }
        if self.f <= 0.0 {
            return Err(QbmError::ConstraintViolation(format!("F = {} <= 0", self.f)));
        }
        if self.sigma > 4.0 * self.f * (1.0 + POSITIVITY_SLACK) {
            return Err(QbmError::ConstraintViolation(format!("Sigma = {} exceeds 4F = {}", self.sigma, 4.0 * self.f)));
        }
        Ok(())
    }

    /// The state moved to a new phase-space centre.
    pub fn centred_at(&self, q: f64, p: f64) -> Self {
        GaussianState { q, p, ..*self }
    }
}

/// Second moments and centre of a Gaussian state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSet {
    pub dq2: f64,
    pub dp2: f64,
    pub cpq: f64,
    pub q: f64,
    pub p: f64,
}

impl MomentSet {
    /// Wigner-function area `sqrt(dq2 dp2 - cpq^2)`.
    pub fn area(&self) -> f64 {
        (self.dq2 * self.dp2 - self.cpq * self.cpq).max(0.0).sqrt()
    }

    pub fn purity(&self, hbar: f64) -> f64 {
        hbar / (2.0 * self.area())
    }
}

pub fn moments_from_params(state: &GaussianState, params: &PhysicalParams) -> Result<MomentSet> {
    state.validate()?;
    let hbar = params.hbar();
    let GaussianState { sigma, f, r, q, p } = *state;
    Ok(MomentSet { dq2: hbar / sigma, dp2: hbar * f * (1.0 + sigma * r * r / (4.0 * f)), cpq: -hbar * r / 2.0, q, p })
}

pub fn params_from_moments(m: &MomentSet, params: &PhysicalParams) -> Result<GaussianState> {
    let hbar = params.hbar();
    if !(m.dq2 > 0.0) || !(m.dp2 > 0.0) {
        return Err(QbmError::ConstraintViolation("moment variances must be positive".into()));
    }
    let a2 = m.dq2 * m.dp2 - m.cpq * m.cpq;
    let bound = hbar / 2.0;
    if a2 < bound * bound * (1.0 - 2.0 * POSITIVITY_SLACK) {
        return Err(QbmError::SubquantumMoments { area: a2.max(0.0).sqrt(), bound });
    }
    let sigma = hbar / m.dq2;
    let r = -2.0 * m.cpq / hbar;
    let f = m.dp2 / hbar - sigma * r * r / 4.0;
    GaussianState::new(sigma, f, r, m.q, m.p)
}

/// Returns `(Tr rho^2, A)` with `A = (hbar/2) sqrt(4F/Sigma)`.
pub fn purity_and_area(state: &GaussianState, params: &PhysicalParams) -> Result<(f64, f64)> {
    state.validate()?;
    let ratio = state.sigma / (4.0 * state.f);
    let area = 0.5 * params.hbar() / ratio.sqrt();
    Ok((ratio.sqrt(), area))
}

/// Kernel value at mean coordinate `u` and difference coordinate `s`.
pub fn eval_density(state: &GaussianState, params: &PhysicalParams, u: f64, s: f64) -> C64 {
    let hbar = params.hbar();
    let GaussianState { sigma, f, r, q, p } = *state;
    let d = u - q;
    let re = -sigma * d * d / (2.0 * hbar) - f * s * s / (2.0 * hbar);
    let im = -r * sigma * d * s / (2.0 * hbar) + p * s / hbar;
    (sigma / (2.0 * PI * hbar)).sqrt() * C64::new(re, im).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> PhysicalParams {
        PhysicalParams::new(1.0, 0.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn pure_state_moments() {
        let m = moments_from_params(&GaussianState::new(2.0, 0.5, 0.0, 0.0, 0.0).unwrap(), &unit()).unwrap();
        assert!((m.dq2 - 0.5).abs() < 1e-15);
        assert!((m.dp2 - 0.5).abs() < 1e-15);
        assert_eq!(m.cpq, 0.0);
        assert!((m.area() - 0.5).abs() < 1e-15);
        assert!((m.purity(1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_states_rejected() {
        assert!(GaussianState::new(0.0, 1.0, 0.0, 0.0, 0.0).is_err());
        assert!(GaussianState::new(1.0, 0.0, 0.0, 0.0, 0.0).is_err());
        assert!(GaussianState::new(4.1, 1.0, 0.0, 0.0, 0.0).is_err());
        let bad = GaussianState { sigma: 5.0, f: 1.0, r: 0.0, q: 0.0, p: 0.0 };
        assert!(moments_from_params(&bad, &unit()).is_err());
    }

    #[test]
    fn subquantum_moments_rejected() {
        let m = MomentSet { dq2: 1.0, dp2: 0.2, cpq: 0.0, q: 0.0, p: 0.0 };
        assert!(matches!(params_from_moments(&m, &unit()), Err(QbmError::SubquantumMoments { .. })));
    }

    #[test]
    fn inverse_of_pure_case() {
        let m = MomentSet { dq2: 0.5, dp2: 0.5, cpq: 0.0, q: 0.0, p: 0.0 };
        let s = params_from_moments(&m, &unit()).unwrap();
        assert!((s.sigma - 2.0).abs() < 1e-15 && (s.f - 0.5).abs() < 1e-15 && s.r == 0.0);
    }

    #[test]
    fn density_peak_and_symmetry() {
        let s = GaussianState::new(2.0 * PI, PI, 0.3, 0.4, -1.1).unwrap();
        let v = eval_density(&s, &unit(), 0.4, 0.0);
        assert!((v.re - 1.0).abs() < 1e-14 && v.im.abs() < 1e-14);
        let a = eval_density(&s, &unit(), 0.9, 0.7);
        let b = eval_density(&s, &unit(), 0.9, -0.7);
        assert!((a - b.conj()).norm() < 1e-15);
    }
}
