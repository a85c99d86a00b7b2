use super::GridOperator;
use crate::error::{QbmError, Result};
use crate::model::PhysicalParams;
use crate::C64;
use rustfft::FftPlanner;

/// Moments of a (not necessarily normalised) Hermitian kernel. Centre and
/// second moments are normalised by the trace; `purity` is `Tr K^2 / (Tr K)^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables {
    pub trace: f64,
    pub hs_norm: f64,
    pub q: f64,
    pub p: f64,
    pub dq2: f64,
    pub dp2: f64,
    pub cpq: f64,
    pub purity: f64,
}

impl Observables {
    pub fn area(&self) -> f64 {
        (self.dq2 * self.dp2 - self.cpq * self.cpq).max(0.0).sqrt()
    }
}

/// First and second spectral `s`-derivatives at `s = 0` for every row.
fn s_derivatives_at_zero(k: &GridOperator) -> Vec<(C64, C64)> {
    let spec = k.spec();
    let n = spec.n_s();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut buf = vec![C64::default(); n];
    let mut scratch = vec![C64::default(); fft.get_inplace_scratch_len()];
    (0..spec.n_u())
        .map(|i| {
            buf.copy_from_slice(k.row(i));
            fft.process_with_scratch(&mut buf, &mut scratch);
            let (mut d1, mut d2) = (C64::default(), C64::default());
            for (m, f) in buf.iter().enumerate() {
                // Evaluation at j = n/2 picks up (-1)^m.
                let sgn = if m % 2 == 0 { 1.0 } else { -1.0 };
                let km = spec.k_s(m);
                if m != n / 2 {
                    d1 += f * C64::new(0.0, km) * sgn;
                }
                d2 -= f * (km * km * sgn);
            }
            (d1 / n as f64, d2 / n as f64)
        })
        .collect()
}

pub fn observables(k: &GridOperator, params: &PhysicalParams) -> Result<Observables> {
    if !k.hermitian_hint() {
        return Err(QbmError::Misuse("moments requested for a non-Hermitian kernel".into()));
    }
    let spec = k.spec();
    let hbar = params.hbar();
    let du = spec.du();
    let j0 = spec.zero_index();
    let trace = k.trace().re;
    if trace == 0.0 {
        return Err(QbmError::DegenerateInput("kernel has zero trace".into()));
    }
    let diag: Vec<f64> = (0..spec.n_u()).map(|i| k.at(i, j0).re).collect();
    let q = du * (0..spec.n_u()).map(|i| spec.u(i) * diag[i]).sum::<f64>() / trace;
    let dq2 = du * (0..spec.n_u()).map(|i| (spec.u(i) - q).powi(2) * diag[i]).sum::<f64>() / trace;

    let ders = s_derivatives_at_zero(k);
    let i_hbar = C64::new(0.0, -hbar);
    let p = (i_hbar * du * ders.iter().map(|d| d.0).sum::<C64>()).re / trace;
    let p2 = (-hbar * hbar * du * ders.iter().map(|d| d.1).sum::<C64>()).re / trace;
    let xp = (i_hbar * du * (0..spec.n_u()).map(|i| ders[i].0 * spec.u(i)).sum::<C64>()).re / trace;
    let hs_norm = k.hs_norm();
    Ok(Observables {
        trace,
        hs_norm,
        q,
        p,
        dq2,
        dp2: p2 - p * p,
        cpq: xp - q * p,
        purity: hs_norm * hs_norm / (trace * trace),
    })
}
