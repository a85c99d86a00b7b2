//! Smeared phase-space quasiprojectors
//!
//! `P = (1/2 pi hbar) * integral over the cell of rho(Sigma, F, r, q, p) dq dp`,
//!
//! plus the quality measures that compare them with true projectors, and
//! the classical transport of cells.

use crate::error::{QbmError, Result};
use crate::gaussian::{classical_flow, integrate, Direction};
use crate::grid::{
    to_matrix, trace_norm, weyl_quantize, GridOperator, GridSpec, PropagationDirection, Propagator, PropagatorConfig,
    SupportReport, SymbolTable,
};
use crate::model::{CellShape, GaussianState, PhaseSpaceCell, PhysicalParams, PotentialModel};
use crate::C64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Gaussian smearing parameters `(Sigma, F, r)`; the centre is integrated
/// over the cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Smearing {
    pub sigma: f64,
    pub f: f64,
    pub r: f64,
}

impl Smearing {
    pub fn new(sigma: f64, f: f64, r: f64) -> Result<Self> {
        GaussianState::new(sigma, f, r, 0.0, 0.0)?;
        Ok(Smearing { sigma, f, r })
    }

    /// Pure coherent-state smearing, `F = Sigma/4`.
    pub fn max_resolution(sigma: f64) -> Result<Self> {
        Self::new(sigma, sigma / 4.0, 0.0)
    }

    pub fn from_state(s: &GaussianState) -> Self {
        Smearing { sigma: s.sigma, f: s.f, r: s.r }
    }

    pub fn at(&self, q: f64, p: f64) -> GaussianState {
        GaussianState { sigma: self.sigma, f: self.f, r: self.r, q, p }
    }

    /// Wigner area `A = (hbar/2) sqrt(4F/Sigma)`.
    pub fn area(&self, hbar: f64) -> f64 {
        0.5 * hbar * (4.0 * self.f / self.sigma).sqrt()
    }

    /// Symbol edge widths `(sqrt(hbar/Sigma), sqrt(dp2))`.
    fn widths(&self, hbar: f64) -> (f64, f64) {
        let dp2 = hbar * self.f * (1.0 + self.sigma * self.r * self.r / (4.0 * self.f));
        ((hbar / self.sigma).sqrt(), dp2.sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConstructionPath {
    /// Erf symbol for rectangles with `r = 0`, quadrature otherwise.
    #[default]
    Auto,
    ErfSymbol,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    pub path: ConstructionPath,
    /// Margin length `l`; `None` uses [`default_margin_length`].
    pub margin_length: Option<f64>,
    /// Reject cells whose margin fraction reaches 1.
    pub require_regular: bool,
    /// Upper bound on q-quadrature nodes times `n_s`.
    pub max_quadrature_entries: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            path: ConstructionPath::Auto,
            margin_length: None,
            require_regular: true,
            max_quadrature_entries: 1 << 26,
        }
    }
}

/// Margin of a cell in the smearing metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginReport {
    pub l: f64,
    /// Margin area `[M]` in phase-space units.
    pub margin_area: f64,
    /// `[M] / [Gamma]`.
    pub epsilon: f64,
    /// Smallest corner-rounding radius in metric units.
    pub min_curvature_radius: f64,
    pub regular: bool,
}

#[derive(Debug, Clone)]
pub struct Quasiprojector {
    cell: PhaseSpaceCell,
    smearing: Smearing,
    kernel: GridOperator,
    margin: MarginReport,
}

impl Quasiprojector {
    pub fn cell(&self) -> &PhaseSpaceCell {
        &self.cell
    }

    pub fn smearing(&self) -> &Smearing {
        &self.smearing
    }

    pub fn kernel(&self) -> &GridOperator {
        &self.kernel
    }

    pub fn into_kernel(self) -> GridOperator {
        self.kernel
    }

    pub fn margin(&self) -> &MarginReport {
        &self.margin
    }

    pub fn epsilon(&self) -> f64 {
        self.margin.epsilon
    }

    /// Box identity minus this projector.
    pub fn complement(&self) -> GridOperator {
        GridOperator::identity(*self.kernel.spec()).sub(&self.kernel).expect("same lattice")
    }
}

fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Metric scale factors: metric coordinates are `(x sx, p sy)`.
fn metric_scales(s: &Smearing, hbar: f64) -> (f64, f64) {
    let sx = (s.sigma / (4.0 * hbar)).sqrt();
    let sy = (hbar / (4.0 * s.f * (1.0 + s.sigma * s.r * s.r / (4.0 * s.f)))).sqrt();
    (sx, sy)
}

/// Smallest margin length compatible with `exp(-2 l^2) < eps(l)`, i.e. the
/// solution of `l = sqrt(ln(1/eps)/2)` with `eps` the margin fraction at `l`.
pub fn default_margin_length(cell: &PhaseSpaceCell, smearing: &Smearing, params: &PhysicalParams) -> f64 {
    let gap = |l: f64| {
        cell_margin_epsilon(cell, smearing, params, l)
            .map(|m| m.epsilon - (-2.0 * l * l).exp())
            .unwrap_or(f64::INFINITY)
    };
    let (mut lo, mut hi) = (1e-3, 4.0);
    if gap(hi) < 0.0 {
        return hi;
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

fn segment_distance(px: f64, py: f64, a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { (((px - a.0) * dx + (py - a.1) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    ((px - a.0 - t * dx).powi(2) + (py - a.1 - t * dy).powi(2)).sqrt()
}

/// Largest fillet radius that fits each corner, in metric units.
fn min_corner_radius(v: &[(f64, f64)]) -> f64 {
    let n = v.len();
    let mut worst = f64::INFINITY;
    for i in 0..n {
        let prev = v[(i + n - 1) % n];
        let cur = v[i];
        let next = v[(i + 1) % n];
        let e1 = (cur.0 - prev.0, cur.1 - prev.1);
        let e2 = (next.0 - cur.0, next.1 - cur.1);
        let (l1, l2) = ((e1.0 * e1.0 + e1.1 * e1.1).sqrt(), (e2.0 * e2.0 + e2.1 * e2.1).sqrt());
        if l1 == 0.0 || l2 == 0.0 {
            continue;
        }
        let turn = (e1.0 * e2.1 - e1.1 * e2.0).atan2(e1.0 * e2.0 + e1.1 * e2.1).abs();
        if turn < 1e-12 {
            continue;
        }
        let r = 0.5 * l1.min(l2) * (0.5 * (PI - turn)).tan();
        worst = worst.min(r);
    }
    worst
}

/// Area of the points within metric distance `l` of the cell boundary,
/// by rasterising the boundary strip.
pub fn cell_margin_epsilon(
    cell: &PhaseSpaceCell,
    smearing: &Smearing,
    params: &PhysicalParams,
    l: f64,
) -> Result<MarginReport> {
    if !(l > 0.0) {
        return Err(QbmError::InvalidParameter("margin length must be positive".into()));
    }
    let (sx, sy) = metric_scales(smearing, params.hbar());
    let verts: Vec<(f64, f64)> = cell.vertices().iter().map(|&(q, p)| (q * sx, p * sy)).collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &verts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let extent = (x1 - x0).max(y1 - y0) + 2.0 * l;
    let h = (l / 8.0).max(extent / 3000.0);
    let (ox, oy) = (x0 - l - h, y0 - l - h);
    let nx = ((x1 - x0 + 2.0 * l) / h).ceil() as usize + 3;
    let ny = ((y1 - y0 + 2.0 * l) / h).ceil() as usize + 3;
    let mut hit = vec![false; nx * ny];
    let n = verts.len();
    for e in 0..n {
        let (a, b) = (verts[e], verts[(e + 1) % n]);
        let ix0 = (((a.0.min(b.0) - l - ox) / h).floor().max(0.0)) as usize;
        let ix1 = ((((a.0.max(b.0) + l - ox) / h).ceil()) as usize).min(nx - 1);
        let iy0 = (((a.1.min(b.1) - l - oy) / h).floor().max(0.0)) as usize;
        let iy1 = ((((a.1.max(b.1) + l - oy) / h).ceil()) as usize).min(ny - 1);
        for iy in iy0..=iy1 {
            let py = oy + (iy as f64 + 0.5) * h;
            for ix in ix0..=ix1 {
                let idx = iy * nx + ix;
                if !hit[idx] && segment_distance(ox + (ix as f64 + 0.5) * h, py, a, b) < l {
                    hit[idx] = true;
                }
            }
        }
    }
    let count = hit.iter().filter(|&&x| x).count();
    let margin_area = count as f64 * h * h / (sx * sy);
    let epsilon = margin_area / cell.volume();
    let min_curvature_radius = min_corner_radius(&verts);
    let regular = epsilon < 1.0 && (-2.0 * l * l).exp() <= epsilon && min_curvature_radius > l;
    Ok(MarginReport { l, margin_area, epsilon, min_curvature_radius, regular })
}

/// Gauss-Legendre nodes and weights on [-1, 1].
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut x = (PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

fn check_cell_fits(cell: &PhaseSpaceCell, sm: &Smearing, params: &PhysicalParams, spec: &GridSpec) -> Result<()> {
    let hbar = params.hbar();
    let (wq, wp) = sm.widths(hbar);
    let (q0, q1, p0, p1) = cell.bounding_box();
    let qmax = q0.abs().max(q1.abs()) + 5.0 * wq;
    let pmax = p0.abs().max(p1.abs()) + 5.0 * wp;
    if qmax >= spec.l_u() {
        return Err(QbmError::Aliasing(format!(
            "cell reaches |q| = {qmax} including smearing, beyond L_u = {}",
            spec.l_u()
        )));
    }
    let p_nyq = hbar * spec.k_s_max();
    if pmax >= p_nyq {
        return Err(QbmError::Aliasing(format!(
            "cell reaches |p| = {pmax} including smearing, beyond hbar pi/ds = {p_nyq}"
        )));
    }
    let s_width = 6.0 * (hbar / sm.f).sqrt() * (1.0 + sm.r.abs());
    if s_width >= spec.l_s() {
        return Err(QbmError::Aliasing(format!("smearing coherence length {s_width} exceeds L_s = {}", spec.l_s())));
    }
    Ok(())
}

fn erf_symbol_kernel(
    cell: &PhaseSpaceCell,
    sm: &Smearing,
    params: &PhysicalParams,
    spec: &GridSpec,
) -> Result<GridOperator> {
    let (q1, q2, p1, p2) = match cell.shape() {
        CellShape::Rectangle { q1, q2, p1, p2 } => (*q1, *q2, *p1, *p2),
        CellShape::Polygon(_) => {
            return Err(QbmError::Misuse("the erf symbol path needs a rectangle".into()));
        }
    };
    if sm.r != 0.0 {
        return Err(QbmError::Misuse("the erf symbol path needs r = 0".into()));
    }
    let hbar = params.hbar();
    let a = (sm.sigma / (2.0 * hbar)).sqrt();
    let b = 1.0 / (2.0 * hbar * sm.f).sqrt();
    let table = SymbolTable::from_fn(*spec, hbar, |x, xi| {
        0.25 * (erf((x - q1) * a) - erf((x - q2) * a)) * (erf((xi - p1) * b) - erf((xi - p2) * b))
    });
    weyl_quantize(&table, params, spec)
}

/// Momentum integral of `exp(i p s / hbar)` over the interval list.
fn interval_transform(intervals: &[(f64, f64)], s: f64, hbar: f64) -> C64 {
    intervals
        .iter()
        .map(|&(a, b)| {
            let half = 0.5 * (b - a) * s / hbar;
            let sinc = if half.abs() < 1e-8 { 1.0 - half * half / 6.0 } else { half.sin() / half };
            C64::from_polar((b - a) * sinc, 0.5 * (a + b) * s / hbar)
        })
        .sum()
}

fn quadrature_kernel(
    cell: &PhaseSpaceCell,
    sm: &Smearing,
    params: &PhysicalParams,
    spec: &GridSpec,
    max_entries: usize,
) -> Result<GridOperator> {
    let hbar = params.hbar();
    let (wq, _) = sm.widths(hbar);
    let s_eff = (6.0 * (hbar / sm.f).sqrt()).min(spec.l_s());
    let panel = wq.min(2.0 * PI * hbar / s_eff) / 2.0;
    let gl8 = gauss_legendre(8);
    let gl4 = gauss_legendre(4);
    let bps = cell.q_breakpoints();
    let mut nodes: Vec<(f64, f64)> = Vec::new();
    for w in bps.windows(2) {
        let (a, b) = (w[0], w[1]);
        let k = ((b - a) / panel).ceil().max(1.0) as usize;
        let h = (b - a) / k as f64;
        let rule = if h > 0.5 * panel { &gl8 } else { &gl4 };
        for m in 0..k {
            let c = a + (m as f64 + 0.5) * h;
            for &(x, w) in rule {
                nodes.push((c + 0.5 * h * x, 0.5 * h * w));
            }
        }
    }
    let n_s = spec.n_s();
    if nodes.len() * n_s > max_entries {
        return Err(QbmError::MemoryBudget { required: nodes.len() * n_s, limit: max_entries });
    }
    // Per-node s-profile: exp(-F s^2 / 2 hbar) times the momentum transform.
    let profiles: Vec<Vec<C64>> = nodes
        .par_iter()
        .map(|&(q, _)| {
            let iv = cell.p_intervals(q);
            (0..n_s)
                .map(|j| {
                    let s = spec.s(j);
                    interval_transform(&iv, s, hbar) * (-sm.f * s * s / (2.0 * hbar)).exp()
                })
                .collect()
        })
        .collect();
    let norm = (sm.sigma / (2.0 * PI * hbar)).sqrt() / (2.0 * PI * hbar);
    let cutoff = 9.0 * wq;
    let ds = spec.ds();
    let s0 = spec.s(0);
    let mut values = vec![C64::default(); spec.len()];
    values.par_chunks_mut(n_s).enumerate().for_each(|(i, row)| {
        let u = spec.u(i);
        for ((q, w), prof) in nodes.iter().zip(&profiles) {
            let d = u - q;
            if d.abs() > cutoff {
                continue;
            }
            let amp = w * norm * (-sm.sigma * d * d / (2.0 * hbar)).exp();
            if sm.r == 0.0 {
                for (v, g) in row.iter_mut().zip(prof) {
                    *v += g * amp;
                }
            } else {
                let beta = -sm.r * sm.sigma * d / (2.0 * hbar);
                let mut phase = C64::from_polar(amp, beta * s0);
                let rot = C64::from_polar(1.0, beta * ds);
                for (v, g) in row.iter_mut().zip(prof) {
                    *v += g * phase;
                    phase *= rot;
                }
            }
        }
    });
    GridOperator::new(*spec, values, true)
}

pub fn build_projector(
    cell: &PhaseSpaceCell,
    smearing: &Smearing,
    params: &PhysicalParams,
    spec: &GridSpec,
) -> Result<Quasiprojector> {
    build_projector_with(cell, smearing, params, spec, &BuildOptions::default())
}

pub fn build_projector_with(
    cell: &PhaseSpaceCell,
    smearing: &Smearing,
    params: &PhysicalParams,
    spec: &GridSpec,
    opts: &BuildOptions,
) -> Result<Quasiprojector> {
    Smearing::new(smearing.sigma, smearing.f, smearing.r)?;
    cell.check_quantum_scale(params.hbar())?;
    check_cell_fits(cell, smearing, params, spec)?;
    let l = opts.margin_length.unwrap_or_else(|| default_margin_length(cell, smearing, params));
    let margin = cell_margin_epsilon(cell, smearing, params, l)?;
    if opts.require_regular && margin.epsilon >= 1.0 {
        return Err(QbmError::IrregularCell { epsilon: margin.epsilon });
    }
    let use_erf = match opts.path {
        ConstructionPath::ErfSymbol => true,
        ConstructionPath::Quadrature => false,
        ConstructionPath::Auto => cell.is_rectangle() && smearing.r == 0.0,
    };
    let kernel = if use_erf {
        erf_symbol_kernel(cell, smearing, params, spec)?
    } else {
        quadrature_kernel(cell, smearing, params, spec, opts.max_quadrature_entries)?
    };
    Ok(Quasiprojector { cell: cell.clone(), smearing: *smearing, kernel, margin })
}

pub fn projector_trace(p: &Quasiprojector) -> f64 {
    p.kernel.trace().re
}

/// `Tr |P - P^2|` on the lattice-A matrix.
pub fn idempotency_defect(p: &Quasiprojector) -> Result<f64> {
    operator_idempotency_defect(&p.kernel)
}

pub fn operator_idempotency_defect(k: &GridOperator) -> Result<f64> {
    let m = to_matrix(k)?;
    let d = &m - &m * &m;
    Ok(trace_norm(&d))
}

/// `Tr |P - P'|` for two smearings of the same cell.
pub fn projector_distance(a: &Quasiprojector, b: &Quasiprojector) -> Result<f64> {
    if a.cell != b.cell {
        return Err(QbmError::Misuse("projector_distance compares projectors on one cell".into()));
    }
    let d = to_matrix(&a.kernel.sub(&b.kernel)?)?;
    Ok(trace_norm(&d))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductDefect {
    /// `Tr |P1 P2 - P12|`, or `Tr |P1 P2|` when the cells do not overlap.
    pub defect: f64,
    /// `([Gamma]/2 pi hbar) (hbar/LP)^(1/2)` for the first cell.
    pub bound_ref: f64,
    pub empty_intersection: bool,
}

pub fn product_defect(
    p1: &Quasiprojector,
    p2: &Quasiprojector,
    p12: Option<&Quasiprojector>,
    params: &PhysicalParams,
) -> Result<ProductDefect> {
    let m1 = to_matrix(&p1.kernel)?;
    let m2 = to_matrix(&p2.kernel)?;
    let mut prod = &m1 * &m2;
    if let Some(p) = p12 {
        prod -= to_matrix(&p.kernel)?;
    }
    let hbar = params.hbar();
    let cell = &p1.cell;
    Ok(ProductDefect {
        defect: trace_norm(&prod),
        bound_ref: cell.volume() / (2.0 * PI * hbar) * (hbar / cell.scale_product()).sqrt(),
        empty_intersection: p12.is_none(),
    })
}

/// Transports the cell boundary along the classical damped flow.
pub fn transport_cell(
    cell: &PhaseSpaceCell,
    pot: &PotentialModel,
    params: &PhysicalParams,
    t: f64,
) -> Result<(PhaseSpaceCell, f64)> {
    transport_cell_directed(cell, pot, params, t, Direction::Forward)
}

/// As [`transport_cell`]; `Backward` follows the flow in reverse time, which
/// is where Heisenberg-evolved projectors go.
pub fn transport_cell_directed(
    cell: &PhaseSpaceCell,
    pot: &PotentialModel,
    params: &PhysicalParams,
    t: f64,
    dir: Direction,
) -> Result<(PhaseSpaceCell, f64)> {
    if !(t >= 0.0) {
        return Err(QbmError::InvalidParameter("transport time must be non-negative".into()));
    }
    if t == 0.0 {
        return Ok((cell.clone(), 1.0));
    }
    let dt = (1e-3f64).min(t / 16.0);
    let moved: Vec<(f64, f64)> =
        cell.boundary_samples(256).par_iter().map(|&(q, p)| classical_flow(q, p, pot, params, t, dt, dir)).collect();
    let out = cell.reshaped(moved.clone()).map_err(|e| match e {
        QbmError::InvalidParameter(_) => QbmError::NonRegularEvolution { polygon: moved },
        other => other,
    })?;
    let ratio = out.volume() / cell.volume();
    Ok((out, ratio))
}

/// Largest relative kernel magnitude the Heisenberg step may discard at the
/// lattice edge before a comparison is refused.
pub const SUPPORT_SLACK: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct TransportComparison {
    pub hs_gap: f64,
    /// `eps' Tr P` with `eps' = (A(t)/LP)^(1/2)`.
    pub bound_ref: f64,
    pub epsilon_prime: f64,
    pub area_t: f64,
    pub cell_t: PhaseSpaceCell,
    pub smearing_t: Smearing,
    pub evolved: GridOperator,
    pub support: SupportReport,
}

/// Smearing carried along the backward Gaussian equations from the cell
/// centroid.
pub fn backward_smearing(
    p: &Quasiprojector,
    pot: &PotentialModel,
    params: &PhysicalParams,
    t: f64,
) -> Result<Smearing> {
    if t == 0.0 {
        return Ok(p.smearing);
    }
    let (q, pc) = p.cell.centroid();
    let dt = (1e-3f64).min(t / 16.0);
    let tr = integrate(&p.smearing.at(q, pc), pot, params, t, dt, Direction::Backward)?;
    Ok(Smearing::from_state(&tr.last().state))
}

/// Evolves `P` in the Heisenberg picture for time `t` and compares it with
/// the quasiprojector on the backward-transported cell.
pub fn evolved_projector_comparison(
    p: &Quasiprojector,
    pot: &PotentialModel,
    params: &PhysicalParams,
    t: f64,
    dt: f64,
) -> Result<TransportComparison> {
    let spec = *p.kernel.spec();
    let steps = (t / dt).round() as usize;
    let mut evolved = p.kernel.clone();
    let mut support = SupportReport::default();
    if steps > 0 {
        let cfg =
            PropagatorConfig::new(t / steps as f64, crate::grid::Scheme::Strang, PropagationDirection::HeisenbergM)?;
        let prop = Propagator::new(spec, pot, params, cfg)?;
        support = prop.evolve(&mut evolved, steps)?;
        if support.relative_lost > SUPPORT_SLACK {
            return Err(QbmError::Breakdown {
                time: t,
                reason: format!(
                    "Heisenberg evolution pushed relative magnitude {:.3e} past the s-lattice edge",
                    support.relative_lost
                ),
            });
        }
    }
    let smearing_t = backward_smearing(p, pot, params, t)?;
    let (cell_t, _) = transport_cell_directed(&p.cell, pot, params, t, Direction::Backward)?;
    let hs_gap = hs_gap_to_cell(&evolved, &cell_t, &smearing_t, params)?;
    let area_t = smearing_t.area(params.hbar());
    let epsilon_prime = (area_t / p.cell.scale_product()).sqrt();
    Ok(TransportComparison {
        hs_gap,
        bound_ref: epsilon_prime * projector_trace(p),
        epsilon_prime,
        area_t,
        cell_t,
        smearing_t,
        evolved,
        support,
    })
}

/// HS distance between a kernel and the quasiprojector on `cell`.
pub fn hs_gap_to_cell(
    k: &GridOperator,
    cell: &PhaseSpaceCell,
    smearing: &Smearing,
    params: &PhysicalParams,
) -> Result<f64> {
    let opts = BuildOptions { require_regular: false, ..BuildOptions::default() };
    let reference = build_projector_with(cell, smearing, params, k.spec(), &opts)?;
    k.hs_distance(&reference.kernel)
}

/// `mu = (1 + eps_after)/(1 + eps_before)`.
pub fn effective_growth_mu(eps_before: f64, eps_after: f64) -> Result<f64> {
    for e in [eps_before, eps_after] {
        if !(e > 0.0 && e < 1.0) {
            return Err(QbmError::InvalidParameter(format!("epsilon {e} must lie in (0, 1)")));
        }
    }
    Ok((1.0 + eps_after) / (1.0 + eps_before))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [4, 8] {
            let rule = gauss_legendre(n);
            let w: f64 = rule.iter().map(|r| r.1).sum();
            assert!((w - 2.0).abs() < 1e-14);
            let x6: f64 = rule.iter().map(|r| r.1 * r.0.powi(6)).sum();
            assert!((x6 - 2.0 / 7.0).abs() < 1e-14);
        }
    }

    #[test]
    fn interval_transform_limits() {
        let v = interval_transform(&[(-1.0, 2.0)], 0.0, 1.0);
        assert!((v - C64::new(3.0, 0.0)).norm() < 1e-15);
        let s = 0.7;
        let exact = (C64::new(0.0, 2.0 * s).exp() - C64::new(0.0, -s).exp()) / C64::new(0.0, s);
        assert!((interval_transform(&[(-1.0, 2.0)], s, 1.0) - exact).norm() < 1e-14);
    }

    #[test]
    fn growth_mu() {
        assert_eq!(effective_growth_mu(0.1, 0.1).unwrap(), 1.0);
        assert!((effective_growth_mu(0.05, 0.15).unwrap() - 1.15 / 1.05).abs() < 1e-15);
        assert!(effective_growth_mu(0.0, 0.1).is_err());
    }

    #[test]
    fn corner_radius_of_square_and_circle() {
        let sq = vec![(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)];
        assert!((min_corner_radius(&sq) - 1.0).abs() < 1e-12);
        let circle: Vec<(f64, f64)> = (0..512)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / 512.0;
                (3.0 * a.cos(), 3.0 * a.sin())
            })
            .collect();
        assert!((min_corner_radius(&circle) - 3.0).abs() < 1e-3);
    }
}
