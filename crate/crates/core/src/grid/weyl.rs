use super::{Fft2, GridOperator, GridSpec};
use crate::error::{QbmError, Result};
use crate::model::PhysicalParams;
use crate::C64;
use std::f64::consts::PI;

/// Weyl symbol `f(u_i, xi_c)` on the lattice conjugate to `s`, with
/// `xi_c = hbar * 2 pi (c - n_s/2) / (n_s ds)`, row-major over `(u, xi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolTable {
    spec: GridSpec,
    hbar: f64,
    values: Vec<C64>,
}

impl SymbolTable {
    pub fn new(spec: GridSpec, hbar: f64, values: Vec<C64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(QbmError::GridMismatch("symbol table size does not match the grid".into()));
        }
        Ok(SymbolTable { spec, hbar, values })
    }

    /// Tabulates a real function `f(x, xi)`.
    pub fn from_fn(spec: GridSpec, hbar: f64, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(spec.len());
        for i in 0..spec.n_u() {
            let u = spec.u(i);
            for c in 0..spec.n_s() {
                values.push(C64::new(f(u, xi_of(&spec, hbar, c)), 0.0));
            }
        }
        SymbolTable { spec, hbar, values }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn xi(&self, c: usize) -> f64 {
        xi_of(&self.spec, self.hbar, c)
    }

    pub fn dxi(&self) -> f64 {
        self.hbar * 2.0 * PI / (self.spec.n_s() as f64 * self.spec.ds())
    }

    pub fn at(&self, i: usize, c: usize) -> C64 {
        self.values[i * self.spec.n_s() + c]
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.im.abs()))
    }

    pub fn min_real(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, v| m.min(v.re))
    }

    pub fn max_real(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, v| m.max(v.re))
    }

    /// `(1/2 pi hbar) * integral f du dxi`.
    pub fn phase_space_integral(&self) -> C64 {
        let s: C64 = self.values.iter().sum();
        s * self.spec.du() * self.dxi() / (2.0 * PI * self.hbar)
    }
}

fn xi_of(spec: &GridSpec, hbar: f64, c: usize) -> f64 {
    hbar * 2.0 * PI * (c as f64 - 0.5 * spec.n_s() as f64) / (spec.n_s() as f64 * spec.ds())
}

fn alt_sign(m: usize) -> f64 {
    if m.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `f(u, xi) = sum_j ds exp(-i xi s_j / hbar) K(u, s_j)`.
pub fn weyl_symbol(k: &GridOperator, params: &PhysicalParams) -> SymbolTable {
    let spec = *k.spec();
    let n = spec.n_s();
    let half = n / 2;
    let fft = Fft2::new(spec.n_u(), n);
    let mut buf = k.values().to_vec();
    fft.rows_forward(&mut buf);
    let ds = spec.ds();
    let mut values = vec![C64::default(); spec.len()];
    for i in 0..spec.n_u() {
        for c in 0..n {
            // centred index c holds bin m = c - n/2 (mod n); s_0 = -L gives (-1)^m
            let m = (c + half) % n;
            values[i * n + c] = buf[i * n + m] * (ds * alt_sign(c + half));
        }
    }
    SymbolTable { spec, hbar: params.hbar(), values }
}

/// Inverse of [`weyl_symbol`]. A real table gives an exactly Hermitian kernel.
pub fn weyl_quantize(table: &SymbolTable, params: &PhysicalParams, spec: &GridSpec) -> Result<GridOperator> {
    if table.spec() != spec {
        return Err(QbmError::GridMismatch("symbol table built for a different lattice".into()));
    }
    if (table.hbar() - params.hbar()).abs() > 1e-14 * params.hbar() {
        return Err(QbmError::GridMismatch(format!(
            "symbol xi-grid uses hbar = {}, parameters use {}",
            table.hbar(),
            params.hbar()
        )));
    }
    let n = spec.n_s();
    let half = n / 2;
    let mut buf = vec![C64::default(); spec.len()];
    for i in 0..spec.n_u() {
        for c in 0..n {
            let m = (c + half) % n;
            buf[i * n + m] = table.values[i * n + c] * alt_sign(c + half);
        }
    }
    Fft2::new(spec.n_u(), n).rows_inverse(&mut buf);
    let scale = 1.0 / (n as f64 * spec.ds());
    buf.iter_mut().for_each(|v| *v *= scale);
    let hermitian = table.max_imag() <= 1e-12 * table.values.iter().fold(0.0f64, |m, v| m.max(v.norm())).max(1e-300);
    GridOperator::new(*spec, buf, hermitian)
}
