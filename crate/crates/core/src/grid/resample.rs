use crate::C64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

/// Interpolation used for the `s -> lambda s` remap of the dissipation step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Resampler {
    /// Band-limited trigonometric interpolation evaluated by a chirp-z
    /// transform. Exact for band-limited rows.
    #[default]
    Spectral,
    /// Local cubic Catmull-Rom interpolation, zero outside the lattice.
    CatmullRom,
}

/// Replaces a periodic row `f_j` sampled at `s_j = -L + j ds` by
/// `f(lambda s_j)`. Points with `|lambda s_j| > L` become zero; for an
/// expansion the row magnitude at the lattice edge is reported as the size
/// of the discarded continuation.
#[derive(Clone)]
pub struct ScaleRemap {
    n: usize,
    lambda: f64,
    kind: Resampler,
    positions: Vec<f64>,
    inside: Vec<bool>,
    /// Edge samples whose continuation beyond the lattice is needed.
    outgoing: Vec<bool>,
    spectral: Option<Chirp>,
}

impl std::fmt::Debug for ScaleRemap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScaleRemap")
            .field("n", &self.n)
            .field("lambda", &self.lambda)
            .field("kind", &self.kind)
            .finish()
    }
}

#[derive(Clone)]
struct Chirp {
    fwd_n: Arc<dyn Fft<f64>>,
    fwd_2n: Arc<dyn Fft<f64>>,
    inv_2n: Arc<dyn Fft<f64>>,
    pre: Vec<C64>,
    kernel: Vec<C64>,
    post: Vec<C64>,
    nyquist: Vec<C64>,
}

/// Scratch buffers for one row; reuse across rows of the same remap.
pub struct RemapScratch {
    a: Vec<C64>,
    fft: Vec<C64>,
}

impl ScaleRemap {
    pub fn new(n: usize, lambda: f64, kind: Resampler) -> Self {
        let c = 0.5 * (1.0 - lambda) * n as f64;
        let positions: Vec<f64> = (0..n).map(|j| lambda * j as f64 + c).collect();
        let inside = positions.iter().map(|&t| (0.0..=n as f64).contains(&t)).collect();
        let outgoing = (0..n).map(|j| lambda > 1.0 && (j < 2 || j + 2 >= n)).collect();
        let spectral = match kind {
            Resampler::Spectral => Some(Chirp::new(n, lambda, &positions)),
            Resampler::CatmullRom => None,
        };
        ScaleRemap { n, lambda, kind, positions, inside, outgoing, spectral }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn scratch(&self) -> RemapScratch {
        let len = match &self.spectral {
            Some(ch) => ch
                .fwd_n
                .get_inplace_scratch_len()
                .max(ch.fwd_2n.get_inplace_scratch_len())
                .max(ch.inv_2n.get_inplace_scratch_len()),
            None => 0,
        };
        RemapScratch { a: vec![C64::default(); 2 * self.n], fft: vec![C64::default(); len] }
    }

    /// Remaps `row` in place and returns the largest magnitude that fell
    /// outside the lattice and was zeroed.
    pub fn apply(&self, row: &mut [C64], scratch: &mut RemapScratch) -> f64 {
        debug_assert_eq!(row.len(), self.n);
        let lost = row.iter().zip(&self.outgoing).filter(|(_, &o)| o).fold(0.0f64, |m, (v, _)| m.max(v.norm()));
        match &self.spectral {
            Some(ch) => ch.apply(row, scratch, &self.inside),
            None => self.apply_cubic(row, &mut scratch.a),
        }
        lost
    }

    fn apply_cubic(&self, row: &mut [C64], buf: &mut [C64]) {
        let n = self.n as isize;
        buf[..self.n].copy_from_slice(row);
        let get = |k: isize| -> C64 {
            if (0..n).contains(&k) {
                buf[k as usize]
            } else {
                C64::default()
            }
        };
        for (j, out) in row.iter_mut().enumerate() {
            let t = self.positions[j];
            let i = t.floor() as isize;
            let x = t - i as f64;
            let (p0, p1, p2, p3) = (get(i - 1), get(i), get(i + 1), get(i + 2));
            let v = p1
                + (p2 - p0) * (0.5 * x)
                + (p0 * 2.0 - p1 * 5.0 + p2 * 4.0 - p3) * (0.5 * x * x)
                + (p1 * 3.0 - p0 - p2 * 3.0 + p3) * (0.5 * x * x * x);
            *out = if self.inside[j] { v } else { C64::default() };
        }
    }
}

impl Chirp {
    fn new(n: usize, lambda: f64, positions: &[f64]) -> Self {
        let mut planner = FftPlanner::new();
        let nf = n as f64;
        let l = 2 * n;
        // w^(x^2/2) with w = exp(2 pi i lambda / n)
        let half_chirp = |x: f64| C64::from_polar(1.0, PI * lambda * x * x / nf);
        let pre = (0..n)
            .map(|mp| {
                let mc = mp as f64 - 0.5 * nf;
                C64::from_polar(1.0, PI * mc * (1.0 - lambda)) * half_chirp(mp as f64)
            })
            .collect();
        let mut kernel = vec![C64::default(); l];
        kernel[0] = C64::new(1.0, 0.0);
        for k in 1..n {
            let b = half_chirp(k as f64).conj();
            kernel[k] = b;
            kernel[l - k] = b;
        }
        let fwd_2n = planner.plan_fft_forward(l);
        fwd_2n.process(&mut kernel);
        let post = (0..n)
            .map(|j| {
                let jf = j as f64;
                half_chirp(jf) * C64::from_polar(1.0, -PI * lambda * jf) / (nf * l as f64)
            })
            .collect();
        let nyquist = positions.iter().map(|&t| C64::new(0.0, (PI * t).sin() / nf)).collect();
        Chirp {
            fwd_n: planner.plan_fft_forward(n),
            fwd_2n,
            inv_2n: planner.plan_fft_inverse(l),
            pre,
            kernel,
            post,
            nyquist,
        }
    }

    fn apply(&self, row: &mut [C64], scratch: &mut RemapScratch, inside: &[bool]) {
        let n = row.len();
        let half = n / 2;
        self.fwd_n.process_with_scratch(row, &mut scratch.fft);
        let f_nyq = row[half];
        // Centred bin m' = m + n/2 holds FFT bin (m' + n/2) mod n.
        let a = &mut scratch.a;
        for mp in 0..n {
            a[mp] = row[(mp + half) % n] * self.pre[mp];
        }
        a[n..].iter_mut().for_each(|v| *v = C64::default());
        self.fwd_2n.process_with_scratch(a, &mut scratch.fft);
        for (v, k) in a.iter_mut().zip(&self.kernel) {
            *v *= k;
        }
        self.inv_2n.process_with_scratch(a, &mut scratch.fft);
        for j in 0..n {
            row[j] = if inside[j] { a[j] * self.post[j] + f_nyq * self.nyquist[j] } else { C64::default() };
        }
    }
}
