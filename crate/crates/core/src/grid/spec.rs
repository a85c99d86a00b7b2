use crate::error::{QbmError, Result};
use crate::model::{moments_from_params, GaussianState, PhysicalParams};
use std::f64::consts::PI;

/// Lattice `u_i = -L_u + i du`, `s_j = -L_s + j ds`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n_u: usize,
    n_s: usize,
    l_u: f64,
    l_s: f64,
}

fn check_size(n: usize, name: &str) -> Result<()> {
    if n < 32 || !n.is_power_of_two() {
        return Err(QbmError::InvalidParameter(format!("{name} = {n} must be a power of two and at least 32")));
    }
    Ok(())
}

impl GridSpec {
    pub fn new(n_u: usize, n_s: usize, l_u: f64, l_s: f64) -> Result<Self> {
        check_size(n_u, "N_u")?;
        check_size(n_s, "N_s")?;
        if !(l_u > 0.0 && l_u.is_finite()) || !(l_s > 0.0 && l_s.is_finite()) {
            return Err(QbmError::InvalidParameter("grid half-extents must be positive".into()));
        }
        Ok(GridSpec { n_u, n_s, l_u, l_s })
    }

    /// Square grid whose (u, s) lattice interleaves two (x, y) lattices of
    /// spacing `ds = 2 du`, so kernels map onto matrices.
    pub fn matrix_compatible(n: usize, l_u: f64) -> Result<Self> {
        Self::new(n, n, l_u, 2.0 * l_u)
    }

    pub fn n_u(&self) -> usize {
        self.n_u
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn l_u(&self) -> f64 {
        self.l_u
    }

    pub fn l_s(&self) -> f64 {
        self.l_s
    }

    pub fn len(&self) -> usize {
        self.n_u * self.n_s
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn du(&self) -> f64 {
        2.0 * self.l_u / self.n_u as f64
    }

    pub fn ds(&self) -> f64 {
        2.0 * self.l_s / self.n_s as f64
    }

    pub fn u(&self, i: usize) -> f64 {
        -self.l_u + i as f64 * self.du()
    }

    pub fn s(&self, j: usize) -> f64 {
        -self.l_s + j as f64 * self.ds()
    }

    /// Column index of `s = 0`.
    pub fn zero_index(&self) -> usize {
        self.n_s / 2
    }

    /// Index of `-s_j` (periodic, so `j = 0` maps to itself).
    pub fn mirror_index(&self, j: usize) -> usize {
        (self.n_s - j) % self.n_s
    }

    pub fn k_u(&self, m: usize) -> f64 {
        fft_frequency(m, self.n_u, self.du())
    }

    pub fn k_s(&self, m: usize) -> f64 {
        fft_frequency(m, self.n_s, self.ds())
    }

    /// Largest resolvable `s`-wavenumber `pi / ds`.
    pub fn k_s_max(&self) -> f64 {
        PI / self.ds()
    }

    pub fn is_matrix_compatible(&self) -> bool {
        self.n_u == self.n_s && (self.l_s - 2.0 * self.l_u).abs() <= 1e-12 * self.l_s
    }

    /// Guards a Gaussian state against truncation and aliasing.
    pub fn check_fits(&self, state: &GaussianState, params: &PhysicalParams) -> Result<()> {
        let m = moments_from_params(state, params)?;
        let hbar = params.hbar();
        let width_u = m.dq2.sqrt();
        if state.q.abs() + 6.0 * width_u >= self.l_u {
            return Err(QbmError::Aliasing(format!(
                "|q| + 6 sqrt(dq2) = {} must stay below L_u = {}",
                state.q.abs() + 6.0 * width_u,
                self.l_u
            )));
        }
        let width_s = (hbar / (2.0 * state.f)).sqrt() * (1.0 + state.r.abs());
        if 6.0 * width_s >= self.l_s {
            return Err(QbmError::Aliasing(format!(
                "6 sqrt(hbar/2F)(1+|r|) = {} must stay below L_s = {}",
                6.0 * width_s,
                self.l_s
            )));
        }
        let p_scale = state.p.abs() + m.dp2.sqrt();
        if self.k_s_max() <= 5.0 * p_scale / hbar {
            return Err(QbmError::Aliasing(format!(
                "s-Nyquist pi/ds = {} must exceed 5 (|p| + sqrt(dp2))/hbar = {}",
                self.k_s_max(),
                5.0 * p_scale / hbar
            )));
        }
        if width_u < 1.5 * self.du() {
            return Err(QbmError::Aliasing(format!("sqrt(dq2) = {width_u} is unresolved by du = {}", self.du())));
        }
        Ok(())
    }
}

/// Angular frequency of FFT bin `m` on `n` points of spacing `h`. The
/// Nyquist bin maps to the negative frequency.
pub(crate) fn fft_frequency(m: usize, n: usize, h: f64) -> f64 {
    let mc = if m < n / 2 { m as f64 } else { m as f64 - n as f64 };
    2.0 * PI * mc / (n as f64 * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_coordinates() {
        let g = GridSpec::new(64, 32, 4.0, 2.0).unwrap();
        assert_eq!(g.du(), 0.125);
        assert_eq!(g.ds(), 0.125);
        assert_eq!(g.u(0), -4.0);
        assert_eq!(g.s(g.zero_index()), 0.0);
        assert_eq!(g.mirror_index(0), 0);
        assert_eq!(g.s(g.mirror_index(3)), -g.s(3));
    }

    #[test]
    fn size_validation() {
        assert!(GridSpec::new(16, 32, 1.0, 1.0).is_err());
        assert!(GridSpec::new(48, 32, 1.0, 1.0).is_err());
        assert!(GridSpec::new(32, 32, 0.0, 1.0).is_err());
    }

    #[test]
    fn fit_guards() {
        let p = PhysicalParams::new(1.0, 0.0, 0.0, 1.0).unwrap();
        let g = GridSpec::new(256, 256, 12.0, 12.0).unwrap();
        assert!(g.check_fits(&GaussianState::pure(2.0, 0.0, 0.0).unwrap(), &p).is_ok());
        // sqrt(dq2) = L_u
        let wide = GaussianState::pure(1.0 / 144.0, 0.0, 0.0).unwrap();
        assert!(matches!(g.check_fits(&wide, &p), Err(QbmError::Aliasing(_))));
        let fast = GaussianState::pure(2.0, 0.0, 40.0).unwrap();
        assert!(matches!(g.check_fits(&fast, &p), Err(QbmError::Aliasing(_))));
    }

    #[test]
    fn frequencies() {
        assert_eq!(fft_frequency(0, 8, 1.0), 0.0);
        assert!((fft_frequency(1, 8, 1.0) - PI / 4.0).abs() < 1e-15);
        assert!((fft_frequency(4, 8, 1.0) + PI).abs() < 1e-15);
        assert!((fft_frequency(7, 8, 1.0) + PI / 4.0).abs() < 1e-15);
    }
}
