use super::resample::{RemapScratch, Resampler, ScaleRemap};
use super::{Fft2, GridOperator, GridSpec};
use crate::error::{QbmError, Result};
use crate::model::{PhysicalParams, PotentialModel};
use crate::C64;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    Lie,
    #[default]
    Strang,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PropagationDirection {
    /// Density matrices, generator L.
    #[default]
    SchrodingerL,
    /// Observables and projectors, generator M (the trace dual of L).
    HeisenbergM,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub direction: PropagationDirection,
    /// Apply the Dekker momentum-diffusion term `eta d_u^2` when `eta > 0`.
    pub include_eta: bool,
    pub resampler: Resampler,
}

impl PropagatorConfig {
    pub fn new(dt: f64, scheme: Scheme, direction: PropagationDirection) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(QbmError::InvalidParameter(format!("time step must be positive, got {dt}")));
        }
        Ok(PropagatorConfig { dt, scheme, direction, include_eta: false, resampler: Resampler::Spectral })
    }

    pub fn with_eta(mut self, include: bool) -> Self {
        self.include_eta = include;
        self
    }

    pub fn with_resampler(mut self, r: Resampler) -> Self {
        self.resampler = r;
        self
    }
}

/// Support diagnostics of the Heisenberg `s`-expansion, which can push
/// kernel values past the lattice edge.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SupportReport {
    /// Largest magnitude zeroed by the remap.
    pub max_lost: f64,
    /// `max_lost` relative to the kernel's largest magnitude at that step.
    pub relative_lost: f64,
}

impl SupportReport {
    fn merge(&mut self, other: SupportReport) {
        self.max_lost = self.max_lost.max(other.max_lost);
        self.relative_lost = self.relative_lost.max(other.relative_lost);
    }
}

/// Exact solution of the dissipation and diffusion terms over one
/// sub-interval: rescale `s`, multiply by a Gaussian in `s`, scale by a
/// constant.
#[derive(Debug, Clone)]
struct DissipationBlock {
    remap: Option<ScaleRemap>,
    envelope: Vec<f64>,
    prefactor: f64,
}

impl DissipationBlock {
    fn new(
        spec: &GridSpec,
        params: &PhysicalParams,
        tau: f64,
        dir: PropagationDirection,
        resampler: Resampler,
    ) -> Self {
        let g = params.gamma();
        let c = params.diffusion() / (params.hbar() * params.hbar());
        // Effective diffusion time: the integral of the squared characteristic.
        let (lambda, tau_eff, prefactor) = match dir {
            PropagationDirection::SchrodingerL => {
                let lam = (-2.0 * g * tau).exp();
                let te = if g > 0.0 { -(-4.0 * g * tau).exp_m1() / (4.0 * g) } else { tau };
                (lam, te, 1.0)
            }
            PropagationDirection::HeisenbergM => {
                let lam = (2.0 * g * tau).exp();
                let te = if g > 0.0 { (4.0 * g * tau).exp_m1() / (4.0 * g) } else { tau };
                (lam, te, lam)
            }
        };
        let remap = (g > 0.0).then(|| ScaleRemap::new(spec.n_s(), lambda, resampler));
        let envelope = (0..spec.n_s()).map(|j| (-c * spec.s(j).powi(2) * tau_eff).exp()).collect();
        DissipationBlock { remap, envelope, prefactor }
    }

    fn apply(&self, values: &mut [C64], n_s: usize) -> SupportReport {
        let lost = values
            .par_chunks_mut(n_s)
            .map_init(
                || self.remap.as_ref().map(|r| r.scratch()),
                |scratch: &mut Option<RemapScratch>, row| {
                    let mut lost: f64 = 0.0;
                    let mut peak: f64 = 0.0;
                    if let (Some(r), Some(sc)) = (&self.remap, scratch.as_mut()) {
                        peak = row.iter().fold(0.0, |m, v| m.max(v.norm()));
                        lost = r.apply(row, sc);
                    }
                    for (v, e) in row.iter_mut().zip(&self.envelope) {
                        *v *= e * self.prefactor;
                    }
                    (lost, peak)
                },
            )
            .collect::<Vec<_>>();
        let max_lost = lost.iter().fold(0.0f64, |m, x| m.max(x.0));
        let peak = lost.iter().fold(0.0f64, |m, x| m.max(x.1));
        SupportReport { max_lost, relative_lost: if peak > 0.0 { max_lost / peak } else { 0.0 } }
    }
}

/// Split-step propagator with all factors precomputed for one configuration.
#[derive(Debug, Clone)]
pub struct Propagator {
    spec: GridSpec,
    cfg: PropagatorConfig,
    fft: Fft2,
    /// Potential phase over the outer sub-step (dt for Lie, dt/2 for Strang).
    potential: Vec<C64>,
    /// Kinetic and Dekker multiplier over dt in the 2-D Fourier domain,
    /// including the 1/(n_u n_s) normalisation.
    kinetic: Vec<C64>,
    /// Dissipation block over dt (Lie) or dt/2 (Strang).
    dissipation: DissipationBlock,
}

impl Propagator {
    pub fn new(spec: GridSpec, pot: &PotentialModel, params: &PhysicalParams, cfg: PropagatorConfig) -> Result<Self> {
        if !(cfg.dt > 0.0) {
            return Err(QbmError::InvalidParameter("time step must be positive".into()));
        }
        let hbar = params.hbar();
        let mass = params.mass();
        let sign = match cfg.direction {
            PropagationDirection::SchrodingerL => -1.0,
            PropagationDirection::HeisenbergM => 1.0,
        };
        let outer = match cfg.scheme {
            Scheme::Lie => cfg.dt,
            Scheme::Strang => 0.5 * cfg.dt,
        };
        let (n_u, n_s) = (spec.n_u(), spec.n_s());

        let mut potential = vec![C64::default(); spec.len()];
        potential.par_chunks_mut(n_s).enumerate().for_each(|(i, row)| {
            let u = spec.u(i);
            for (j, v) in row.iter_mut().enumerate() {
                let s = spec.s(j);
                let dv = pot.value(u + 0.5 * s) - pot.value(u - 0.5 * s);
                *v = C64::from_polar(1.0, sign * dv * outer / hbar);
            }
        });

        let eta = if cfg.include_eta { params.eta() } else { 0.0 };
        let norm = 1.0 / (n_u * n_s) as f64;
        let mut kinetic = vec![C64::default(); spec.len()];
        kinetic.par_chunks_mut(n_s).enumerate().for_each(|(mu, row)| {
            let ku = spec.k_u(mu);
            // The Nyquist bins carry no mixed phase so that the discrete
            // Heisenberg step is the exact adjoint of the Schrodinger one.
            let ku_mixed = if mu == n_u / 2 { 0.0 } else { ku };
            let damp = (-eta * ku * ku * cfg.dt).exp() * norm;
            for (ms, v) in row.iter_mut().enumerate() {
                let ks = if ms == n_s / 2 { 0.0 } else { spec.k_s(ms) };
                *v = C64::from_polar(damp, sign * hbar * ku_mixed * ks * cfg.dt / mass);
            }
        });

        let dissipation = DissipationBlock::new(&spec, params, outer_dissipation(cfg), cfg.direction, cfg.resampler);
        Ok(Propagator { spec, cfg, fft: Fft2::new(n_u, n_s), potential, kinetic, dissipation })
    }

    pub fn config(&self) -> &PropagatorConfig {
        &self.cfg
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    fn apply_potential(&self, v: &mut [C64]) {
        v.par_iter_mut().zip(self.potential.par_iter()).for_each(|(a, b)| *a *= b);
    }

    fn apply_kinetic(&self, v: &mut [C64]) {
        self.fft.forward(v);
        v.par_iter_mut().zip(self.kinetic.par_iter()).for_each(|(a, b)| *a *= b);
        self.fft.inverse(v);
    }

    /// One time step in the configured direction.
    pub fn step(&self, k: &mut GridOperator) -> Result<SupportReport> {
        if k.spec() != &self.spec {
            return Err(QbmError::GridMismatch("operator and propagator lattices differ".into()));
        }
        let n_s = self.spec.n_s();
        let v = k.values_mut();
        let mut rep = SupportReport::default();
        match (self.cfg.scheme, self.cfg.direction) {
            (Scheme::Lie, PropagationDirection::SchrodingerL) => {
                self.apply_potential(v);
                self.apply_kinetic(v);
                rep.merge(self.dissipation.apply(v, n_s));
            }
            (Scheme::Lie, PropagationDirection::HeisenbergM) => {
                rep.merge(self.dissipation.apply(v, n_s));
                self.apply_kinetic(v);
                self.apply_potential(v);
            }
            (Scheme::Strang, _) => {
                self.apply_potential(v);
                rep.merge(self.dissipation.apply(v, n_s));
                self.apply_kinetic(v);
                rep.merge(self.dissipation.apply(v, n_s));
                self.apply_potential(v);
            }
        }
        Ok(rep)
    }

    /// `n` consecutive steps.
    pub fn evolve(&self, k: &mut GridOperator, n: usize) -> Result<SupportReport> {
        let mut rep = SupportReport::default();
        for _ in 0..n {
            rep.merge(self.step(k)?);
        }
        Ok(rep)
    }
}

fn outer_dissipation(cfg: PropagatorConfig) -> f64 {
    match cfg.scheme {
        Scheme::Lie => cfg.dt,
        Scheme::Strang => 0.5 * cfg.dt,
    }
}

/// One Schrodinger-picture step.
pub fn step_l(
    k: &GridOperator,
    pot: &PotentialModel,
    params: &PhysicalParams,
    cfg: &PropagatorConfig,
) -> Result<GridOperator> {
    if cfg.direction != PropagationDirection::SchrodingerL {
        return Err(QbmError::Misuse("step_l needs a Schrodinger-direction configuration".into()));
    }
    let prop = Propagator::new(*k.spec(), pot, params, *cfg)?;
    let mut out = k.clone();
    prop.step(&mut out)?;
    Ok(out)
}

/// One Heisenberg-picture step, with support-loss diagnostics.
pub fn step_m(
    k: &GridOperator,
    pot: &PotentialModel,
    params: &PhysicalParams,
    cfg: &PropagatorConfig,
) -> Result<(GridOperator, SupportReport)> {
    if cfg.direction != PropagationDirection::HeisenbergM {
        return Err(QbmError::Misuse("step_m needs a Heisenberg-direction configuration".into()));
    }
    let prop = Propagator::new(*k.spec(), pot, params, *cfg)?;
    let mut out = k.clone();
    let rep = prop.step(&mut out)?;
    Ok((out, rep))
}
