use crate::error::{QbmError, Result};

/// Closed family of one-dimensional potentials with exact derivatives.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialModel {
    Free,
    /// `V = slope * x`.
    Linear {
        slope: f64,
    },
    /// `V = m_omega2 * x^2 / 2`.
    Harmonic {
        m_omega2: f64,
    },
    /// `V = m_omega2 * x^2 / 2 + eta4 * x^4`.
    Quartic {
        m_omega2: f64,
        eta4: f64,
    },
    /// `V = sum_k coeffs[k] * x^k`, degree at most 8.
    Polynomial {
        coeffs: Vec<f64>,
    },
}

pub const MAX_POLYNOMIAL_DEGREE: usize = 8;

impl PotentialModel {
    pub fn harmonic(m_omega2: f64) -> Result<Self> {
        if !(m_omega2 >= 0.0) {
            return Err(QbmError::InvalidParameter("harmonic coefficient must be non-negative".into()));
        }
        Ok(PotentialModel::Harmonic { m_omega2 })
    }

    pub fn quartic(m_omega2: f64, eta4: f64) -> Result<Self> {
        if !(eta4 >= 0.0) || !m_omega2.is_finite() {
            return Err(QbmError::InvalidParameter("quartic coefficient must be non-negative".into()));
        }
        if eta4 == 0.0 && m_omega2 < 0.0 {
            return Err(QbmError::InvalidParameter("inverted oscillator is unbounded below".into()));
        }
        Ok(PotentialModel::Quartic { m_omega2, eta4 })
    }

    /// Polynomial potential. The highest non-zero coefficient must belong to
    /// an even power and be positive so that V is bounded below.
    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() > MAX_POLYNOMIAL_DEGREE + 1 {
            return Err(QbmError::InvalidParameter(format!("polynomial degree exceeds {MAX_POLYNOMIAL_DEGREE}")));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(QbmError::InvalidParameter("polynomial coefficients must be finite".into()));
        }
        if let Some(deg) = coeffs.iter().rposition(|&c| c != 0.0) {
            if deg >= 1 && (deg % 2 == 1 || coeffs[deg] < 0.0) {
                return Err(QbmError::InvalidParameter("polynomial potential is unbounded below".into()));
            }
        }
        Ok(PotentialModel::Polynomial { coeffs })
    }

    /// Returns `(V, V', V'')` at `x`.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        match self {
            PotentialModel::Free => (0.0, 0.0, 0.0),
            PotentialModel::Linear { slope } => (slope * x, *slope, 0.0),
            PotentialModel::Harmonic { m_omega2 } => (0.5 * m_omega2 * x * x, m_omega2 * x, *m_omega2),
            PotentialModel::Quartic { m_omega2, eta4 } => {
                let x2 = x * x;
                (0.5 * m_omega2 * x2 + eta4 * x2 * x2, m_omega2 * x + 4.0 * eta4 * x2 * x, m_omega2 + 12.0 * eta4 * x2)
            }
            PotentialModel::Polynomial { coeffs } => {
                // Horner for the value and both derivatives at once.
                let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
                for &c in coeffs.iter().rev() {
                    d2 = d2 * x + 2.0 * d1;
                    d1 = d1 * x + v;
                    v = v * x + c;
                }
                (v, d1, d2)
            }
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }

    pub fn force(&self, x: f64) -> f64 {
        -self.eval(x).1
    }

    /// True when V'' is independent of x, so the Gaussian ansatz is exact.
    pub fn is_quadratic(&self) -> bool {
        match self {
            PotentialModel::Free | PotentialModel::Linear { .. } | PotentialModel::Harmonic { .. } => true,
            PotentialModel::Quartic { eta4, .. } => *eta4 == 0.0,
            PotentialModel::Polynomial { coeffs } => coeffs.iter().skip(3).all(|&c| c == 0.0),
        }
    }

    /// Curvature at the origin, used to pick an oscillation time scale.
    pub fn curvature_at_origin(&self) -> f64 {
        self.eval(0.0).2
    }
}

/// Free-function form of [`PotentialModel::eval`].
pub fn eval_potential(pot: &PotentialModel, x: f64) -> (f64, f64, f64) {
    pot.eval(x)
}
