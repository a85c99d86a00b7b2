use crate::error::{QbmError, Result};

/// Bath and system constants in dimensionless working units.
///
/// The diffusion constant `D = 2 M gamma kT` is derived on demand and can
/// never drift out of sync with the other fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    mass: f64,
    gamma: f64,
    kt: f64,
    hbar: f64,
    eta: f64,
}

impl PhysicalParams {
    pub fn new(mass: f64, gamma: f64, kt: f64, hbar: f64) -> Result<Self> {
        let p = PhysicalParams { mass, gamma, kt, hbar, eta: 0.0 };
        p.validate()?;
        Ok(p)
    }

    /// Returns a copy with the Dekker momentum-diffusion coefficient set.
    pub fn with_eta(self, eta: f64) -> Result<Self> {
        let p = PhysicalParams { eta, ..self };
        p.validate()?;
        Ok(p)
    }

    pub fn with_hbar(self, hbar: f64) -> Result<Self> {
        let p = PhysicalParams { hbar, ..self };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        let checks = [
            (self.mass > 0.0 && self.mass.is_finite(), "mass must be positive"),
            (self.hbar > 0.0 && self.hbar.is_finite(), "hbar must be positive"),
            (self.gamma >= 0.0 && self.gamma.is_finite(), "gamma must be non-negative"),
            (self.kt >= 0.0 && self.kt.is_finite(), "kT must be non-negative"),
            (self.eta >= 0.0 && self.eta.is_finite(), "eta must be non-negative"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(QbmError::InvalidParameter(msg.into()));
            }
        }
        Ok(())
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn kt(&self) -> f64 {
        self.kt
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Position-space diffusion constant `D = 2 M gamma kT`.
    pub fn diffusion(&self) -> f64 {
        2.0 * self.mass * self.gamma * self.kt
    }

    /// Smallest Dekker coefficient that makes the generator of Lindblad form,
    /// from `D * eta >= (gamma hbar / 2)^2`.
    pub fn dekker_minimum_eta(&self) -> f64 {
        let d = self.diffusion();
        if self.gamma == 0.0 {
            0.0
        } else if d == 0.0 {
            f64::INFINITY
        } else {
            (self.gamma * self.hbar).powi(2) / (4.0 * d)
        }
    }

    /// Thermal time `hbar / kT` below which the Markov approximation is suspect.
    pub fn thermal_time(&self) -> f64 {
        if self.kt == 0.0 {
            f64::INFINITY
        } else {
            self.hbar / self.kt
        }
    }
}
