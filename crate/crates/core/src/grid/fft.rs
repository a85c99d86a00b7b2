use crate::C64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Row/column FFT plans for a row-major `n_rows x n_cols` array.
/// Transforms are unnormalised in both directions.
#[derive(Clone)]
pub struct Fft2 {
    n_rows: usize,
    n_cols: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("n_rows", &self.n_rows).field("n_cols", &self.n_cols).finish()
    }
}

fn run_rows(plan: &Arc<dyn Fft<f64>>, data: &mut [C64], width: usize) {
    data.par_chunks_mut(width).for_each_init(
        || vec![C64::default(); plan.get_inplace_scratch_len()],
        |scratch, row| plan.process_with_scratch(row, scratch),
    );
}

fn transpose(src: &[C64], dst: &mut [C64], rows: usize, cols: usize) {
    dst.par_chunks_mut(rows).enumerate().for_each(|(c, out)| {
        for (r, v) in out.iter_mut().enumerate() {
            *v = src[r * cols + c];
        }
    });
}

impl Fft2 {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            n_rows,
            n_cols,
            row_fwd: planner.plan_fft_forward(n_cols),
            row_inv: planner.plan_fft_inverse(n_cols),
            col_fwd: planner.plan_fft_forward(n_rows),
            col_inv: planner.plan_fft_inverse(n_rows),
        }
    }

    /// Forward transform of every row.
    pub fn rows_forward(&self, data: &mut [C64]) {
        run_rows(&self.row_fwd, data, self.n_cols);
    }

    pub fn rows_inverse(&self, data: &mut [C64]) {
        run_rows(&self.row_inv, data, self.n_cols);
    }

    fn columns(&self, data: &mut [C64], plan: &Arc<dyn Fft<f64>>) {
        let mut t = vec![C64::default(); data.len()];
        transpose(data, &mut t, self.n_rows, self.n_cols);
        run_rows(plan, &mut t, self.n_rows);
        transpose(&t, data, self.n_cols, self.n_rows);
    }

    pub fn forward(&self, data: &mut [C64]) {
        self.rows_forward(data);
        self.columns(data, &self.col_fwd);
    }

    pub fn inverse(&self, data: &mut [C64]) {
        self.columns(data, &self.col_inv);
        self.rows_inverse(data);
    }

    pub fn row_plan(&self) -> &Arc<dyn Fft<f64>> {
        &self.row_fwd
    }
}
