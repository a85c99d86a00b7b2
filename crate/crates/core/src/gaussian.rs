//! Five-parameter Gaussian dynamics in the Schrodinger and Heisenberg
//! pictures, fixed-step RK4, and closed-form comparators.

use crate::error::{QbmError, Result};
use crate::model::{
    moments_from_params, purity_and_area, GaussianState, MomentSet, PhysicalParams, PotentialModel, POSITIVITY_SLACK,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Schrodinger picture, density matrices.
    Forward,
    /// Heisenberg picture, evolved projectors.
    Backward,
}

/// Time derivative of `(Sigma, F, r, q, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateRate {
    pub sigma: f64,
    pub f: f64,
    pub r: f64,
    pub q: f64,
    pub p: f64,
}

type Vec5 = [f64; 5];

fn pack(s: &GaussianState) -> Vec5 {
    [s.sigma, s.f, s.r, s.q, s.p]
}

fn unpack(y: &Vec5) -> GaussianState {
    GaussianState { sigma: y[0], f: y[1], r: y[2], q: y[3], p: y[4] }
}

fn rhs_raw(y: &Vec5, pot: &PotentialModel, params: &PhysicalParams, dir: Direction) -> Vec5 {
    let [sigma, f, r, q, p] = *y;
    let m = params.mass();
    let g = params.gamma();
    let hbar = params.hbar();
    let d = params.diffusion();
    let (_, v1, v2) = pot.eval(q);
    match dir {
        Direction::Forward => [
            sigma * sigma * r / m,
            sigma * f * r / m - 4.0 * g * f + 2.0 * d / hbar,
            -sigma * r * r / (2.0 * m) - 2.0 * f / m - 2.0 * g * r + 2.0 * v2 / sigma,
            p / m,
            -v1 - 2.0 * g * p,
        ],
        Direction::Backward => [
            -sigma * sigma * r / m,
            -sigma * f * r / m + 4.0 * g * f + 2.0 * d / hbar,
            sigma * r * r / (2.0 * m) + 2.0 * f / m + 2.0 * g * r - 2.0 * v2 / sigma,
            -p / m,
            2.0 * g * p + v1,
        ],
    }
}

fn to_rate(y: Vec5) -> StateRate {
    StateRate { sigma: y[0], f: y[1], r: y[2], q: y[3], p: y[4] }
}

pub fn forward_rhs(state: &GaussianState, pot: &PotentialModel, params: &PhysicalParams) -> Result<StateRate> {
    state.validate()?;
    Ok(to_rate(rhs_raw(&pack(state), pot, params, Direction::Forward)))
}

pub fn backward_rhs(state: &GaussianState, pot: &PotentialModel, params: &PhysicalParams) -> Result<StateRate> {
    state.validate()?;
    Ok(to_rate(rhs_raw(&pack(state), pot, params, Direction::Backward)))
}

fn rk4_step(y: &Vec5, h: f64, pot: &PotentialModel, params: &PhysicalParams, dir: Direction) -> Vec5 {
    let add = |a: &Vec5, b: &Vec5, s: f64| -> Vec5 {
        let mut o = *a;
        for i in 0..5 {
            o[i] += s * b[i];
        }
        o
    };
    let k1 = rhs_raw(y, pot, params, dir);
    let k2 = rhs_raw(&add(y, &k1, 0.5 * h), pot, params, dir);
    let k3 = rhs_raw(&add(y, &k2, 0.5 * h), pot, params, dir);
    let k4 = rhs_raw(&add(y, &k3, h), pot, params, dir);
    let mut o = *y;
    for i in 0..5 {
        o[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    o
}

fn breakdown_reason(y: &Vec5) -> Option<String> {
    let [sigma, f, ..] = *y;
    if !y.iter().all(|v| v.is_finite()) {
        Some("non-finite Gaussian parameter".into())
    } else if sigma <= 0.0 {
        Some(format!("Sigma collapsed to {sigma}"))
    } else if f <= 0.0 {
        Some(format!("F collapsed to {f}"))
    } else if sigma > 4.0 * f * (1.0 + POSITIVITY_SLACK) {
        Some(format!("positivity lost: Sigma = {sigma} > 4F = {}", 4.0 * f))
    } else {
        None
    }
}

/// One sample of an integrated trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub state: GaussianState,
    pub moments: MomentSet,
    pub area: f64,
    pub purity: f64,
    /// Phase-space Jacobian: 1 forward, `exp(2 gamma t)` backward.
    pub jacobian: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<TrajectorySample>,
    dt: f64,
    direction: Direction,
    error_estimate: f64,
}

impl Trajectory {
    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectory always holds the initial sample")
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// Max difference between this run and a run at half the step size,
    /// compared at the shared sample times.
    pub fn error_estimate(&self) -> f64 {
        self.error_estimate
    }
}

fn run_rk4(
    initial: &GaussianState,
    pot: &PotentialModel,
    params: &PhysicalParams,
    t_final: f64,
    dt: f64,
    dir: Direction,
) -> Result<Vec<(f64, Vec5)>> {
    let n = ((t_final / dt) - 1e-9).ceil().max(1.0) as usize;
    let mut out = Vec::with_capacity(n + 1);
    let mut y = pack(initial);
    out.push((0.0, y));
    for k in 0..n {
        let t0 = k as f64 * dt;
        let h = if k + 1 == n { t_final - t0 } else { dt };
        y = rk4_step(&y, h, pot, params, dir);
        let t = if k + 1 == n { t_final } else { (k + 1) as f64 * dt };
        if let Some(reason) = breakdown_reason(&y) {
            return Err(QbmError::Breakdown { time: t, reason });
        }
        out.push((t, y));
    }
    Ok(out)
}

/// Fixed-step RK4 integration sampled every `dt`, with a step-halving error
/// estimate.
pub fn integrate(
    initial: &GaussianState,
    pot: &PotentialModel,
    params: &PhysicalParams,
    t_final: f64,
    dt: f64,
    direction: Direction,
) -> Result<Trajectory> {
    if !(dt > 0.0) || !(t_final > 0.0) {
        return Err(QbmError::InvalidParameter("integration needs dt > 0 and t_final > 0".into()));
    }
    initial.validate()?;
    let coarse = run_rk4(initial, pot, params, t_final, dt, direction)?;
    let fine = run_rk4(initial, pot, params, t_final, 0.5 * dt, direction)?;

    let mut error_estimate: f64 = 0.0;
    for (t, y) in &coarse {
        // Fine samples sit at every half step; pick the one at the same time.
        let idx = fine.binary_search_by(|(tf, _)| tf.total_cmp(t)).unwrap_or_else(|i| i.min(fine.len() - 1));
        let yf = &fine[idx].1;
        for i in 0..5 {
            error_estimate = error_estimate.max((y[i] - yf[i]).abs());
        }
    }

    let gamma = params.gamma();
    let samples = coarse
        .into_iter()
        .map(|(t, y)| {
            let state = unpack(&y);
            let moments = moments_from_params(&state, params)?;
            let (purity, area) = purity_and_area(&state, params)?;
            let jacobian = match direction {
                Direction::Forward => 1.0,
                Direction::Backward => (2.0 * gamma * t).exp(),
            };
            Ok(TrajectorySample { t, state, moments, area, purity, jacobian })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(Trajectory { samples, dt, direction, error_estimate })
}

/// Default step `min(1e-3, 1/(1e4 gamma), period/1e3)`.
pub fn default_time_step(params: &PhysicalParams, pot: &PotentialModel) -> f64 {
    let mut dt: f64 = 1e-3;
    if params.gamma() > 0.0 {
        dt = dt.min(1.0 / (1e4 * params.gamma()));
    }
    let k = pot.curvature_at_origin();
    if k > 0.0 {
        let period = 2.0 * std::f64::consts::PI / (k / params.mass()).sqrt();
        dt = dt.min(period / 1e3);
    }
    dt
}

/// Three-point derivative on a possibly non-uniform stencil.
fn centred_derivative(t: [f64; 3], f: [f64; 3]) -> f64 {
    let h1 = t[1] - t[0];
    let h2 = t[2] - t[1];
    -h2 / (h1 * (h1 + h2)) * f[0] + (h2 - h1) / (h1 * h2) * f[1] + h1 / (h2 * (h1 + h2)) * f[2]
}

/// Largest residual of the second-moment ODEs along a forward trajectory,
/// using centred differences of the sampled moments.
pub fn moment_rhs_check(traj: &Trajectory, pot: &PotentialModel, params: &PhysicalParams) -> Result<f64> {
    if traj.direction() != Direction::Forward {
        return Err(QbmError::Misuse("moment check needs a forward trajectory".into()));
    }
    let s = traj.samples();
    if s.len() < 3 {
        return Err(QbmError::InsufficientData { needed: 3, got: s.len() });
    }
    let m = params.mass();
    let g = params.gamma();
    let d = params.diffusion();
    let mut worst: f64 = 0.0;
    for i in 1..s.len() - 1 {
        let t = [s[i - 1].t, s[i].t, s[i + 1].t];
        let pick = |f: fn(&MomentSet) -> f64| [f(&s[i - 1].moments), f(&s[i].moments), f(&s[i + 1].moments)];
        let dq2 = centred_derivative(t, pick(|x| x.dq2));
        let dp2 = centred_derivative(t, pick(|x| x.dp2));
        let cpq = centred_derivative(t, pick(|x| x.cpq));
        let mo = &s[i].moments;
        let v2 = pot.eval(mo.q).2;
        let r1 = dq2 - 2.0 * mo.cpq / m;
        let r2 = dp2 - (-4.0 * g * mo.dp2 - 2.0 * mo.cpq * v2 + 2.0 * d);
        let r3 = cpq - (mo.dp2 / m - 2.0 * g * mo.cpq - mo.dq2 * v2);
        worst = worst.max(r1.abs()).max(r2.abs()).max(r3.abs());
    }
    Ok(worst)
}

/// Localization measure `(Sigma + 4F)/(Sigma F)` and whether it exceeds the
/// threshold.
pub fn validity_monitor(state: &GaussianState, _params: &PhysicalParams, threshold: f64) -> (f64, bool) {
    let loc = (state.sigma + 4.0 * state.f) / (state.sigma * state.f);
    (loc, loc > threshold)
}

pub fn area_trajectory(traj: &Trajectory) -> Vec<(f64, f64)> {
    traj.samples().iter().map(|s| (s.t, s.area)).collect()
}

/// Short-time reference `A(t) = sqrt(hbar^2/4 + (32/3)(gamma kT/hbar)^2 t^4)`.
pub fn short_time_comparator(params: &PhysicalParams, t: f64) -> f64 {
    let h = params.hbar();
    let c = params.gamma() * params.kt() / h;
    (0.25 * h * h + 32.0 / 3.0 * c * c * t.powi(4)).sqrt()
}

/// Weak-coupling relaxation of the position variance towards `kT/(M w^2)`.
pub fn weak_coupling_comparator(params: &PhysicalParams, omega: f64, dq2_unitary: impl Fn(f64) -> f64, t: f64) -> f64 {
    let decay = (-2.0 * params.gamma() * t).exp();
    let plateau = params.kt() / (params.mass() * omega * omega);
    dq2_unitary(t) * decay + plateau * (1.0 - decay)
}

/// Pure state whose Wigner area has zero slope at t = 0 under the bath:
/// `Sigma_0 = 4 M kT / hbar`.
pub fn thermally_matched_state(params: &PhysicalParams, q: f64, p: f64) -> Result<GaussianState> {
    let sigma = 4.0 * params.mass() * params.kt() / params.hbar();
    GaussianState::pure(sigma, q, p)
}

/// Classical phase-space flow with linear damping, integrated by RK4.
/// The backward direction runs the same flow with time reversed.
pub fn classical_flow(
    q: f64,
    p: f64,
    pot: &PotentialModel,
    params: &PhysicalParams,
    t: f64,
    dt: f64,
    dir: Direction,
) -> (f64, f64) {
    let m = params.mass();
    let g = params.gamma();
    let sign = match dir {
        Direction::Forward => 1.0,
        Direction::Backward => -1.0,
    };
    let f = |q: f64, p: f64| (sign * p / m, sign * (-pot.eval(q).1 - 2.0 * g * p));
    let n = ((t / dt) - 1e-9).ceil().max(0.0) as usize;
    let (mut q, mut p) = (q, p);
    for k in 0..n {
        let h = if k + 1 == n { t - k as f64 * dt } else { dt };
        let (a1, b1) = f(q, p);
        let (a2, b2) = f(q + 0.5 * h * a1, p + 0.5 * h * b1);
        let (a3, b3) = f(q + 0.5 * h * a2, p + 0.5 * h * b2);
        let (a4, b4) = f(q + h * a3, p + h * b3);
        q += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        p += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
    }
    (q, p)
}

/// Least-squares fit of `y = c x^k` on log-log axes; returns `(k, c)`.
pub fn power_law_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(QbmError::InsufficientData { needed: 2, got: x.len().min(y.len()) });
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(QbmError::DegenerateInput("power-law fit needs positive data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(QbmError::DegenerateInput("power-law fit needs distinct abscissae".into()));
    }
    let k = sxy / sxx;
    Ok((k, (my - k * mx).exp()))
}
