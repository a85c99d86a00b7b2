use super::GridSpec;
use crate::error::{QbmError, Result};
use crate::model::{eval_density, GaussianState, PhysicalParams};
use crate::C64;
use rayon::prelude::*;

/// Discretised operator kernel `K(u_i, s_j) = <u+s/2|K|u-s/2>`, row-major
/// over `(u, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridOperator {
    spec: GridSpec,
    values: Vec<C64>,
    hermitian_hint: bool,
}

impl GridOperator {
    pub fn new(spec: GridSpec, values: Vec<C64>, hermitian_hint: bool) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(QbmError::GridMismatch(format!(
                "{} values for a {}x{} grid",
                values.len(),
                spec.n_u(),
                spec.n_s()
            )));
        }
        Ok(GridOperator { spec, values, hermitian_hint })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        GridOperator { spec, values: vec![C64::default(); spec.len()], hermitian_hint: true }
    }

    /// Identity on the box: a column `1/ds` at `s = 0`.
    pub fn identity(spec: GridSpec) -> Self {
        let mut op = Self::zeros(spec);
        let j0 = spec.zero_index();
        let v = 1.0 / spec.ds();
        for i in 0..spec.n_u() {
            op.values[i * spec.n_s() + j0] = C64::new(v, 0.0);
        }
        op
    }

    /// Samples `f(u, s)` on the lattice.
    pub fn from_fn(spec: GridSpec, hermitian_hint: bool, f: impl Fn(f64, f64) -> C64 + Sync) -> Self {
        let n_s = spec.n_s();
        let mut values = vec![C64::default(); spec.len()];
        values.par_chunks_mut(n_s).enumerate().for_each(|(i, row)| {
            let u = spec.u(i);
            for (j, v) in row.iter_mut().enumerate() {
                *v = f(u, spec.s(j));
            }
        });
        GridOperator { spec, values, hermitian_hint }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn hermitian_hint(&self) -> bool {
        self.hermitian_hint
    }

    pub fn set_hermitian_hint(&mut self, hint: bool) {
        self.hermitian_hint = hint;
    }

    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.values[i * self.spec.n_s() + j]
    }

    pub fn row(&self, i: usize) -> &[C64] {
        let n = self.spec.n_s();
        &self.values[i * n..(i + 1) * n]
    }

    pub(crate) fn ensure_same_grid(&self, other: &GridOperator) -> Result<()> {
        if self.spec != other.spec {
            return Err(QbmError::GridMismatch("operators live on different lattices".into()));
        }
        Ok(())
    }

    /// `Tr K = du * sum_i K(u_i, 0)`.
    pub fn trace(&self) -> C64 {
        let j0 = self.spec.zero_index();
        let n_s = self.spec.n_s();
        let sum: C64 = (0..self.spec.n_u()).map(|i| self.values[i * n_s + j0]).sum();
        sum * self.spec.du()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// `max |K(u,-s) - conj K(u,s)| / max |K|`.
    pub fn hermiticity_residual(&self) -> f64 {
        let n_s = self.spec.n_s();
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.spec.n_u() {
            let row = &self.values[i * n_s..(i + 1) * n_s];
            for j in 1..n_s {
                worst = worst.max((row[n_s - j] - row[j].conj()).norm());
            }
        }
        worst / scale
    }

    /// Hermitian conjugate `K^+(u, s) = conj K(u, -s)`.
    pub fn adjoint(&self) -> GridOperator {
        let n_s = self.spec.n_s();
        let mut out = self.clone();
        for i in 0..self.spec.n_u() {
            for j in 0..n_s {
                out.values[i * n_s + j] = self.values[i * n_s + self.spec.mirror_index(j)].conj();
            }
        }
        out
    }

    /// `(A, B) = Tr(A^+ B) = du ds sum conj(A) B`.
    pub fn hs_inner(&self, other: &GridOperator) -> Result<C64> {
        self.ensure_same_grid(other)?;
        let s: C64 = self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum();
        Ok(s * self.spec.du() * self.spec.ds())
    }

    pub fn hs_norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (s * self.spec.du() * self.spec.ds()).sqrt()
    }

    pub fn hs_distance(&self, other: &GridOperator) -> Result<f64> {
        self.ensure_same_grid(other)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()).sum();
        Ok((s * self.spec.du() * self.spec.ds()).sqrt())
    }

    /// `Tr(A B) = du ds sum_{i,j} A(u_i, -s_j) B(u_i, s_j)`.
    pub fn trace_product(&self, other: &GridOperator) -> Result<C64> {
        self.ensure_same_grid(other)?;
        let n_s = self.spec.n_s();
        let mut total = C64::default();
        for i in 0..self.spec.n_u() {
            let a = &self.values[i * n_s..(i + 1) * n_s];
            let b = &other.values[i * n_s..(i + 1) * n_s];
            for j in 0..n_s {
                total += a[self.spec.mirror_index(j)] * b[j];
            }
        }
        Ok(total * self.spec.du() * self.spec.ds())
    }

    pub fn scaled(&self, c: C64) -> GridOperator {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out.hermitian_hint = self.hermitian_hint && c.im == 0.0;
        out
    }

    pub fn add(&self, other: &GridOperator) -> Result<GridOperator> {
        self.ensure_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        GridOperator::new(self.spec, values, self.hermitian_hint && other.hermitian_hint)
    }

    pub fn sub(&self, other: &GridOperator) -> Result<GridOperator> {
        self.ensure_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        GridOperator::new(self.spec, values, self.hermitian_hint && other.hermitian_hint)
    }
}

/// Samples a Gaussian state without fit checks.
pub fn sample_gaussian(state: &GaussianState, params: &PhysicalParams, spec: GridSpec) -> GridOperator {
    let (st, pa) = (*state, *params);
    GridOperator::from_fn(spec, true, move |u, s| eval_density(&st, &pa, u, s))
}

/// Samples a Gaussian state after checking that it fits the lattice.
pub fn init_from_gaussian(state: &GaussianState, params: &PhysicalParams, spec: GridSpec) -> Result<GridOperator> {
    state.validate()?;
    spec.check_fits(state, params)?;
    Ok(sample_gaussian(state, params, spec))
}

/// HS distance between a grid kernel and a sampled Gaussian.
pub fn hs_distance_to_gaussian(k: &GridOperator, state: &GaussianState, params: &PhysicalParams) -> Result<f64> {
    state.validate()?;
    let g = sample_gaussian(state, params, *k.spec());
    k.hs_distance(&g)
}
