//! Mapping between `(u, s)` kernels and `(x, y)` matrices.
//!
//! On a matrix-compatible grid (`n_u = n_s = n`, `L_s = 2 L_u`) the points
//! with `i + j` even form the lattice `x_a = -L_u + a dx` (lattice A) and
//! the points with `i + j` odd form the half-shifted lattice
//! `x_a = -L_u + (a + 1/2) dx` (lattice B), both with `dx = ds` and `n/2`
//! sites. A kernel therefore carries two independent matrix discretisations
//! of the same operator; `M_ab = K dx` so that matrix products approximate
//! operator composition.

use super::{Fft2, GridOperator, GridSpec};
use crate::error::{QbmError, Result};
use crate::C64;
use nalgebra::DMatrix;

pub type LatticeMatrix = DMatrix<C64>;

fn check(spec: &GridSpec) -> Result<()> {
    if !spec.is_matrix_compatible() {
        return Err(QbmError::Geometry(format!(
            "need n_u = n_s and L_s = 2 L_u, got {}x{} with L_u = {}, L_s = {}",
            spec.n_u(),
            spec.n_s(),
            spec.l_u(),
            spec.l_s()
        )));
    }
    Ok(())
}

/// Grid indices of matrix entry `(a, b)`; `shift` is 0 for lattice A and 1
/// for lattice B.
#[inline]
fn site(n: usize, a: usize, b: usize, shift: usize) -> (usize, usize) {
    (a + b + shift, a + n / 2 - b)
}

fn extract(k: &GridOperator, shift: usize) -> LatticeMatrix {
    let spec = k.spec();
    let n = spec.n_s();
    let d = n / 2;
    let dx = spec.ds();
    DMatrix::from_fn(d, d, |a, b| {
        let (i, j) = site(n, a, b, shift);
        k.values()[i * n + j] * dx
    })
}

/// Lattice-A matrix of a kernel.
pub fn to_matrix(k: &GridOperator) -> Result<LatticeMatrix> {
    check(k.spec())?;
    Ok(extract(k, 0))
}

/// Lattice-A and lattice-B matrices of a kernel.
pub fn to_matrix_pair(k: &GridOperator) -> Result<(LatticeMatrix, LatticeMatrix)> {
    check(k.spec())?;
    Ok((extract(k, 0), extract(k, 1)))
}

fn check_dims(m: &LatticeMatrix, spec: &GridSpec) -> Result<()> {
    let d = spec.n_s() / 2;
    if m.nrows() != d || m.ncols() != d {
        return Err(QbmError::Geometry(format!("matrix is {}x{}, lattice needs {d}x{d}", m.nrows(), m.ncols())));
    }
    Ok(())
}

fn is_hermitian(m: &LatticeMatrix) -> bool {
    let scale = m.iter().fold(0.0f64, |s, v| s.max(v.norm())).max(1e-300);
    let d = m.nrows();
    for a in 0..d {
        for b in 0..=a {
            if (m[(a, b)] - m[(b, a)].conj()).norm() > 1e-10 * scale {
                return false;
            }
        }
    }
    true
}

/// Kernel from matrices on both lattices. Sites outside the `|x|, |y| < L_u`
/// square are zero.
pub fn from_matrices(a: &LatticeMatrix, b: &LatticeMatrix, spec: &GridSpec) -> Result<GridOperator> {
    check(spec)?;
    check_dims(a, spec)?;
    check_dims(b, spec)?;
    let n = spec.n_s();
    let d = n / 2;
    let inv_dx = 1.0 / spec.ds();
    let mut values = vec![C64::default(); spec.len()];
    for (shift, m) in [(0usize, a), (1usize, b)] {
        for ia in 0..d {
            for ib in 0..d {
                let (i, j) = site(n, ia, ib, shift);
                values[i * n + j] = m[(ia, ib)] * inv_dx;
            }
        }
    }
    GridOperator::new(*spec, values, is_hermitian(a) && is_hermitian(b))
}

/// Kernel from a lattice-A matrix. Lattice B is filled by band-limited
/// half-sample interpolation along `u` at fixed `s`.
pub fn from_matrix(a: &LatticeMatrix, spec: &GridSpec) -> Result<GridOperator> {
    check(spec)?;
    check_dims(a, spec)?;
    let n = spec.n_s();
    let d = n / 2;
    let inv_dx = 1.0 / spec.ds();
    let mut values = vec![C64::default(); spec.len()];
    for ia in 0..d {
        for ib in 0..d {
            let (i, j) = site(n, ia, ib, 0);
            values[i * n + j] = a[(ia, ib)] * inv_dx;
        }
    }
    // At fixed j, lattice-A rows are i = p, p+2, ... with p = j mod 2; the
    // lattice-B rows sit halfway between them.
    let fft = Fft2::new(1, d);
    let mut col = vec![C64::default(); d];
    let shift: Vec<C64> = (0..d)
        .map(|m| {
            if m == d / 2 {
                C64::new(0.0, 0.0)
            } else {
                let mc = if m < d / 2 { m as f64 } else { m as f64 - d as f64 };
                C64::from_polar(1.0 / d as f64, std::f64::consts::PI * mc / d as f64)
            }
        })
        .collect();
    let mut out = values.clone();
    for j in 1..n {
        let p = j % 2;
        for (k, c) in col.iter_mut().enumerate() {
            *c = values[(2 * k + p) * n + j];
        }
        fft.rows_forward(&mut col);
        for (c, s) in col.iter_mut().zip(&shift) {
            *c *= s;
        }
        fft.rows_inverse(&mut col);
        for (k, c) in col.iter().enumerate() {
            let i = (2 * k + p + 1) % n;
            out[i * n + j] = *c;
        }
    }
    // Restrict lattice B to the square |x|, |y| < L_u like from_matrices.
    let mut mask = vec![false; spec.len()];
    for ia in 0..d {
        for ib in 0..d {
            for shift in 0..2 {
                let (i, j) = site(n, ia, ib, shift);
                mask[i * n + j] = true;
            }
        }
    }
    for (v, keep) in out.iter_mut().zip(&mask) {
        if !keep {
            *v = C64::default();
        }
    }
    GridOperator::new(*spec, out, is_hermitian(a))
}

/// Real eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &LatticeMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Trace norm: sum of |eigenvalues| for Hermitian input, sum of singular
/// values otherwise.
pub fn trace_norm(m: &LatticeMatrix) -> f64 {
    if is_hermitian(m) {
        let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
        hermitian_eigenvalues(&h).iter().map(|v| v.abs()).sum()
    } else {
        m.clone().svd(false, false).singular_values.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::sample_gaussian;
    use crate::model::{GaussianState, PhysicalParams};

    fn setup() -> (GridSpec, PhysicalParams) {
        (GridSpec::matrix_compatible(128, 8.0).unwrap(), PhysicalParams::new(1.0, 0.0, 0.0, 1.0).unwrap())
    }

    #[test]
    fn trace_is_preserved() {
        let (spec, params) = setup();
        let k = sample_gaussian(&GaussianState::new(1.0, 1.0, 0.5, 0.7, -0.3).unwrap(), &params, spec);
        let (a, b) = to_matrix_pair(&k).unwrap();
        assert!((a.trace() - k.trace()).norm() < 1e-10);
        assert!(((a.trace() + b.trace()) * 0.5 - k.trace()).norm() < 1e-12);
    }

    #[test]
    fn pure_state_matrix_is_projector() {
        let (spec, params) = setup();
        let k = sample_gaussian(&GaussianState::pure(2.0, 0.5, 1.0).unwrap(), &params, spec);
        let a = to_matrix(&k).unwrap();
        assert!(((&a * &a).trace() - C64::new(1.0, 0.0)).norm() < 1e-6);
        let ev = hermitian_eigenvalues(&a);
        assert!((ev[ev.len() - 1] - 1.0).abs() < 1e-6);
        assert!((trace_norm(&a) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn round_trip_on_both_lattices() {
        let (spec, params) = setup();
        let k = sample_gaussian(&GaussianState::new(1.0, 1.0, 0.3, -0.5, 0.8).unwrap(), &params, spec);
        let (a, b) = to_matrix_pair(&k).unwrap();
        let back = from_matrices(&a, &b, &spec).unwrap();
        assert!(back.hs_distance(&k).unwrap() < 1e-10);
        let interp = from_matrix(&a, &spec).unwrap();
        assert!(interp.hs_distance(&k).unwrap() < 1e-8);
        assert!((to_matrix(&interp).unwrap() - &a).norm() < 1e-13 * a.norm());
    }

    #[test]
    fn incompatible_grid_rejected() {
        let spec = GridSpec::new(64, 64, 4.0, 4.0).unwrap();
        let k = GridOperator::identity(spec);
        assert!(matches!(to_matrix(&k), Err(QbmError::Geometry(_))));
    }

    #[test]
    fn identity_maps_to_identity() {
        let (spec, _) = setup();
        let a = to_matrix(&GridOperator::identity(spec)).unwrap();
        assert!((a - DMatrix::identity(64, 64)).norm() < 1e-12);
    }
}
