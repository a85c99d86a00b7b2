//! One function per scenario tag. Each writes its CSV tables into the output
//! directory and returns the summary document.

use crate::config::{ExperimentConfig, Scenario};
use crate::error::CliError;
use crate::output::{Cell, OutputDir};
use qbm_core::gaussian::{area_trajectory, integrate, power_law_fit, short_time_comparator, Direction, Trajectory};
use qbm_core::grid::{
    hs_distance_to_gaussian, init_from_gaussian, observables, GridOperator, GridSpec, PropagationDirection, Propagator,
    PropagatorConfig,
};
use qbm_core::histories::{
    binary_partition, conditional_probability, consistency_epsilon, decoherence_epsilon,
    decoherence_functional_two_time, n_time_functional, DecoherenceTable, HistoryAlphabet, HistoryConfig,
    MAX_TABLE_ENTRIES,
};
use qbm_core::projector::{
    build_projector, evolved_projector_comparison, idempotency_defect, product_defect, projector_distance,
    projector_trace, transport_cell, Smearing,
};
use qbm_core::{PhaseSpaceCell, PhysicalParams, PotentialModel, QbmError};
use rayon::prelude::*;
use serde_json::{json, Value};
use std::f64::consts::PI;

pub fn run_scenario(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<Value, CliError> {
    match cfg.scenario {
        Scenario::GaussianVsGrid => gaussian_vs_grid(cfg, out),
        Scenario::Equilibrium => equilibrium(cfg, out),
        Scenario::HbarSweep => hbar_sweep(cfg, out),
        Scenario::ProjectorQuality => projector_quality(cfg, out),
        Scenario::ProjectorTransport => projector_transport(cfg, out),
        Scenario::HistoriesTwoTime => histories_two_time(cfg, out),
        Scenario::HistoriesNTime => histories_n_time(cfg, out),
        Scenario::AreaGrowth => area_growth(cfg, out),
    }
}

/// Human-readable description of what a scenario computes and writes.
pub fn describe(s: Scenario) -> &'static str {
    match s {
        Scenario::GaussianVsGrid => {
            "Evolves the initial Gaussian with the moment ODEs and the grid solver side by side.\n\
             needs: params, potential, initial, grid, time.t_final, time.dt\n\
             writes: traj.csv (t, q, p, Sigma, F, r, dq2, dp2, cpq, A, purity, hs_gap), traj.gp,\n\
             summary.json, and rho_final.bin/.json when snapshot = true"
        }
        Scenario::Equilibrium => {
            "Runs a harmonic oscillator with bath towards its fixed point and compares the variances\n\
             with kT/(M w^2) and M kT.\n\
             needs: params, potential (harmonic), initial, grid, time.t_final, time.dt\n\
             writes: equilibrium.csv (t, dq2_ode, dp2_ode, dq2_grid, dp2_grid), summary.json"
        }
        Scenario::HbarSweep => {
            "Grid-vs-Gaussian distance at a fixed time for each hbar in sweep.hbar, plus a power-law fit.\n\
             needs: params, potential, initial, grid, time.t_final, time.dt, sweep\n\
             writes: sweep.csv (hbar, t_fixed, hs_gap), sweep.gp, summary.json"
        }
        Scenario::ProjectorQuality => {
            "Builds a quasiprojector per cell and measures trace, idempotency defect, distance to\n\
             alternative smearings and pairwise product defects.\n\
             needs: params, cells, grid; optional smearing, alt_smearings\n\
             writes: quality.csv, distances.csv, products.csv, summary.json"
        }
        Scenario::ProjectorTransport => {
            "Evolves each cell's quasiprojector in the Heisenberg picture and compares it with the\n\
             projector on the classically transported cell at each time in time.times.\n\
             needs: params, potential, cells, grid, time.times, time.dt\n\
             writes: transport.csv (cell, t, hs_gap, bound_ref, epsilon_prime, area_t, area_ratio, lost), summary.json"
        }
        Scenario::HistoriesTwoTime => {
            "Decoherence functional for two-time histories with binary partitions {P, 1-P}.\n\
             needs: params, potential, initial, cells (2, or 1 with transport_cells), matrix-compatible grid,\n\
             time.times (2), time.dt\n\
             writes: dtable.csv (alpha, alpha_prime, re_D, im_D), summary.json (kappa, p_conditional, ...)"
        }
        Scenario::HistoriesNTime => {
            "Decoherence functional for n-time histories with binary partitions at every time.\n\
             needs: params, potential, initial, cells (n, or 1 with transport_cells), matrix-compatible grid,\n\
             time.times, time.dt\n\
             writes: dtable.csv (alpha, alpha_prime, re_D, im_D), summary.json (kappa, labels, ...)"
        }
        Scenario::AreaGrowth => {
            "Wigner-area growth A(t) from the moment ODEs against the short-time reference.\n\
             needs: params, potential, initial, time.t_final, time.dt\n\
             writes: area.csv (t, A, A_short_ref, purity, dq2, dp2), area.gp, summary.json"
        }
    }
}

/// Integrator step that lands exactly on `t_final`.
fn exact_steps(t_final: f64, dt: f64) -> (usize, f64) {
    let n = (t_final / dt).round().max(1.0) as usize;
    (n, t_final / n as f64)
}

fn propagator(
    cfg: &ExperimentConfig,
    spec: GridSpec,
    pot: &PotentialModel,
    params: &PhysicalParams,
    dt: f64,
    dir: PropagationDirection,
) -> Result<Propagator, CliError> {
    let pc = PropagatorConfig::new(dt, cfg.scheme.into(), dir)?.with_eta(params.eta() > 0.0);
    Ok(Propagator::new(spec, pot, params, pc)?)
}

fn sampled(n: usize, every: usize, last: usize) -> bool {
    n.is_multiple_of(every) || n == last
}

fn gaussian_vs_grid(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<Value, CliError> {
    let params = cfg.physical_params()?;
    let pot = cfg.potential()?;
    let spec = cfg.grid_spec()?;
    let st = cfg.initial_state()?;
    let (steps, dt) = exact_steps(cfg.t_final(), cfg.time.dt);
    let traj = integrate(&st, &pot, &params, cfg.t_final(), dt, Direction::Forward)?;
    let mut k = init_from_gaussian(&st, &params, spec)?;
    let prop = propagator(cfg, spec, &pot, &params, dt, PropagationDirection::SchrodingerL)?;
    let mut rows = Vec::new();
    let mut max_gap: f64 = 0.0;
    for (n, s) in traj.samples().iter().enumerate() {
        if n > 0 {
            prop.step(&mut k)?;
        }
        if !sampled(n, cfg.time.sample_every, steps) {
            continue;
        }
        let gap = hs_distance_to_gaussian(&k, &s.state, &params)?;
        max_gap = max_gap.max(gap);
        let m = &s.moments;
        rows.push(
            [
                s.t,
                s.state.q,
                s.state.p,
                s.state.sigma,
                s.state.f,
                s.state.r,
                m.dq2,
                m.dp2,
                m.cpq,
                s.area,
                s.purity,
                gap,
            ]
            .map(Cell::from)
            .to_vec(),
        );
    }
    out.write_csv(
        "traj.csv",
        &["t", "q", "p", "Sigma", "F", "r", "dq2", "dp2", "cpq", "A", "purity", "hs_gap"],
        &rows,
    )?;
    out.write_gnuplot("traj.gp", "traj.csv", 1, &[(12, "hs_gap")], false)?;
    if cfg.snapshot {
        out.write_snapshot("rho_final", &k, &params, cfg.t_final())?;
    }
    let o = observables(&k, &params)?;
    Ok(json!({
        "steps": steps,
        "dt": dt,
        "max_hs_gap": max_gap,
        "final_grid": { "trace": o.trace, "q": o.q, "p": o.p, "dq2": o.dq2, "dp2": o.dp2, "cpq": o.cpq, "purity": o.purity },
    }))
}

fn equilibrium(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<Value, CliError> {
    let params = cfg.physical_params()?;
    let pot = cfg.potential()?;
    if !matches!(pot, PotentialModel::Harmonic { .. }) {
        return Err(CliError::Field {
            path: "potential".into(),
            message: "equilibrium needs a harmonic potential".into(),
        });
    }
    let k_spring = pot.curvature_at_origin();
    let spec = cfg.grid_spec()?;
    let st = cfg.initial_state()?;
    let (steps, dt) = exact_steps(cfg.t_final(), cfg.time.dt);
    let traj = integrate(&st, &pot, &params, cfg.t_final(), dt, Direction::Forward)?;
    let mut k = init_from_gaussian(&st, &params, spec)?;
    let prop = propagator(cfg, spec, &pot, &params, dt, PropagationDirection::SchrodingerL)?;
    let mut rows = Vec::new();
    let mut last = (0.0, 0.0);
    for (n, s) in traj.samples().iter().enumerate() {
        if n > 0 {
            prop.step(&mut k)?;
        }
        if !sampled(n, cfg.time.sample_every, steps) {
            continue;
        }
        let o = observables(&k, &params)?;
        last = (o.dq2, o.dp2);
        rows.push([s.t, s.moments.dq2, s.moments.dp2, o.dq2, o.dp2].map(Cell::from).to_vec());
    }
    out.write_csv("equilibrium.csv", &["t", "dq2_ode", "dp2_ode", "dq2_grid", "dp2_grid"], &rows)?;
    let target_q = params.kt() / k_spring;
    let target_p = params.mass() * params.kt();
    let end = traj.last().moments;
    let rel = |a: f64, b: f64| (a - b).abs() / b;
    Ok(json!({
        "dq2_target": target_q,
        "dp2_target": target_p,
        "ode": { "dq2": end.dq2, "dp2": end.dp2, "rel_err_dq2": rel(end.dq2, target_q), "rel_err_dp2": rel(end.dp2, target_p) },
        "grid": { "dq2": last.0, "dp2": last.1, "rel_err_dq2": rel(last.0, target_q), "rel_err_dp2": rel(last.1, target_p) },
    }))
}

fn hbar_sweep(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<Value, CliError> {
    let base = cfg.physical_params()?;
    let pot = cfg.potential()?;
    let grid = cfg.grid.clone().expect("validated");
    let sweep = cfg.sweep.clone().expect("validated");
    let st = cfg.initial_state()?;
    let t = cfg.t_final();
    let (steps, dt) = exact_steps(t, cfg.time.dt);
    let ode_dt = sweep.ode_dt.unwrap_or(dt / 10.0);
    let gaps: Vec<f64> = sweep
        .hbar
        .par_iter()
        .map(|&h| -> Result<f64, CliError> {
            let params = base.with_hbar(h)?;
            let l_s = match sweep.l_s_per_sqrt_hbar {
                Some(c) => grid.l_s.max(c * h.sqrt()),
                None => grid.l_s,
            };
            let spec = GridSpec::new(grid.n_u, grid.n_s, grid.l_u, l_s)?;
            let mut k = init_from_gaussian(&st, &params, spec)?;
            propagator(cfg, spec, &pot, &params, dt, PropagationDirection::SchrodingerL)?.evolve(&mut k, steps)?;
            let g = integrate(&st, &pot, &params, t, ode_dt, Direction::Forward)?;
            Ok(hs_distance_to_gaussian(&k, &g.last().state, &params)?)
        })
        .collect::<Result<_, _>>()?;
    let rows: Vec<Vec<Cell>> =
        sweep.hbar.iter().zip(&gaps).map(|(&h, &g)| vec![h.into(), t.into(), g.into()]).collect();
    out.write_csv("sweep.csv", &["hbar", "t_fixed", "hs_gap"], &rows)?;
    out.write_gnuplot("sweep.gp", "sweep.csv", 1, &[(3, "hs_gap")], true)?;
    let (exponent, prefactor) = power_law_fit(&sweep.hbar, &gaps)?;
    let mut order: Vec<usize> = (0..gaps.len()).collect();
    order.sort_by(|&a, &b| sweep.hbar[a].total_cmp(&sweep.hbar[b]));
    let monotone = order.windows(2).all(|w| gaps[w[0]] < gaps[w[1]]);
    Ok(
        json!({ "t_fixed": t, "hs_gaps": gaps, "monotone_in_hbar": monotone, "fitted_exponent": exponent, "fitted_prefactor": prefactor }),
    )
}

fn projector_quality(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<Value, CliError> {
    let params = cfg.physical_params()?;
    let spec = cfg.grid_spec()?;
    let sm = cfg.smearing()?;
    let alts = cfg.alt_smearing_list()?;
    let cells = cfg.cell_list()?;
    let hbar = params.hbar();
    let projectors = cells.iter().map(|c| build_projector(c, &sm, &params, &spec)).collect::<Result<Vec<_>, _>>()?;
    let mut quality = Vec::new();
    let mut distances = Vec::new();
    let mut worst_defect_ratio: f64 = 0.0;
    let mut worst_distance_ratio: f64 = 0.0;
    for (i, (c, p)) in cells.iter().zip(&projectors).enumerate() {
        let tr = projector_trace(p);
        let eps = (hbar / c.scale_product()).sqrt();
        let defect = idempotency_defect(p)?;
        worst_defect_ratio = worst_defect_ratio.max(defect / (eps * tr));
        quality.push(vec![
            i.into(),
            tr.into(),
            (c.volume() / (2.0 * PI * hbar)).into(),
            eps.into(),
            p.epsilon().into(),
            defect.into(),
            (defect / (eps * tr)).into(),
        ]);
        for (j, alt) in alts.iter().enumerate() {
            let q = build_projector(c, alt, &params, &spec)?;
            let eps_alt = (alt.area(hbar) / c.scale_product()).sqrt();
            let d = projector_distance(p, &q)?;
            let ratio = d / ((eps + eps_alt) * tr);
            worst_distance_ratio = worst_distance_ratio.max(ratio);
            distances.push(vec![i.into(), j.into(), d.into(), ratio.into()]);
        }
    }
    out.write_csv(
        "quality.csv",
        &["cell", "trace", "trace_expected", "epsilon", "margin_epsilon", "defect", "defect_ratio"],
        &quality,
    )?;
    out.write_csv("distances.csv", &["cell", "alt_smearing", "distance", "bound_ratio"], &distances)?;
    let mut products = Vec::new();
    for a in 0..projectors.len() {
        for b in a + 1..projectors.len() {
            let pd = product_defect(&projectors[a], &projectors[b], None, &params)?;
            products.push(vec![
                a.into(),
                b.into(),
                pd.defect.into(),
                pd.bound_ref.into(),
                usize::from(pd.empty_intersection).into(),
            ]);
        }
    }
    out.write_csv("products.csv", &["cell_a", "cell_b", "defect", "bound_ref", "empty_intersection"], &products)?;
    Ok(
        json!({ "cells": cells.len(), "max_defect_ratio": worst_defect_ratio, "max_distance_ratio": worst_distance_ratio }),
    )
}

fn projector_transport(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<Value, CliError> {
    let params = cfg.physical_params()?;
    let pot = cfg.potential()?;
    let spec = cfg.grid_spec()?;
    let sm = cfg.smearing()?;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for (i, c) in cfg.cell_list()?.iter().enumerate() {
        let p = build_projector(c, &sm, &params, &spec)?;
        for &t in &cfg.time.times {
            let (_, area_ratio) = transport_cell(c, &pot, &params, t)?;
            let cmp = evolved_projector_comparison(&p, &pot, &params, t, cfg.time.dt)?;
            if cmp.bound_ref > 0.0 {
                worst = worst.max(cmp.hs_gap / cmp.bound_ref);
            }
            rows.push(vec![
                i.into(),
                t.into(),
                cmp.hs_gap.into(),
                cmp.bound_ref.into(),
                cmp.epsilon_prime.into(),
                cmp.area_t.into(),
                area_ratio.into(),
                cmp.support.relative_lost.into(),
            ]);
        }
    }
    out.write_csv(
        "transport.csv",
        &["cell", "t", "hs_gap", "bound_ref", "epsilon_prime", "area_t", "area_ratio", "lost"],
        &rows,
    )?;
    Ok(json!({ "max_gap_over_bound": worst }))
}

/// `(A(t)/LP)^(1/2)` with `A` from the smearing evolved backwards over `span`.
fn epsilon_ref(
    sm: &Smearing,
    pot: &PotentialModel,
    params: &PhysicalParams,
    span: f64,
    lp: f64,
) -> Result<f64, CliError> {
    let traj: Trajectory =
        integrate(&sm.at(0.0, 0.0), pot, params, span, (span / 100.0).min(1e-3), Direction::Backward)?;
    Ok((traj.last().area / lp).sqrt())
}

/// One cell per history time, either from the config or by transporting the
/// first cell forward between consecutive times.
fn history_cells(
    cfg: &ExperimentConfig,
    pot: &PotentialModel,
    params: &PhysicalParams,
) -> Result<Vec<PhaseSpaceCell>, CliError> {
    let mut cells = cfg.cell_list()?;
    if cfg.transport_cells {
        let times = &cfg.time.times;
        for w in times.windows(2) {
            let (next, _) = transport_cell(cells.last().expect("one cell"), pot, params, w[1] - w[0])?;
            cells.push(next);
        }
    }
    Ok(cells)
}

fn dtable_rows(table: &DecoherenceTable) -> Vec<Vec<Cell>> {
    let n = table.history_count();
    let mut rows = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let d = table.value(a, b);
            rows.push(vec![a.into(), b.into(), d.re.into(), d.im.into()]);
        }
    }
    rows
}

struct HistorySetup {
    params: PhysicalParams,
    pot: PotentialModel,
    sm: Smearing,
    rho0: GridOperator,
    partitions: Vec<Vec<GridOperator>>,
    cells: Vec<PhaseSpaceCell>,
    pc: PropagatorConfig,
}

fn history_setup(cfg: &ExperimentConfig) -> Result<HistorySetup, CliError> {
    let params = cfg.physical_params()?;
    let pot = cfg.potential()?;
    let spec = cfg.grid_spec()?;
    let sm = cfg.smearing()?;
    let rho0 = init_from_gaussian(&cfg.initial_state()?, &params, spec)?;
    let cells = history_cells(cfg, &pot, &params)?;
    let partitions = cells
        .iter()
        .map(|c| Ok(binary_partition(build_projector(c, &sm, &params, &spec)?.kernel())))
        .collect::<Result<Vec<_>, CliError>>()?;
    let pc = PropagatorConfig::new(cfg.time.dt, cfg.scheme.into(), PropagationDirection::SchrodingerL)?
        .with_eta(params.eta() > 0.0);
    Ok(HistorySetup { params, pot, sm, rho0, partitions, cells, pc })
}

fn table_summary(table: &DecoherenceTable, cfg: &ExperimentConfig, h: &HistorySetup) -> Result<Value, CliError> {
    let lp = h.cells[0].scale_product();
    let mut eps = Vec::new();
    for w in cfg.time.times.windows(2) {
        eps.push(epsilon_ref(&h.sm, &h.pot, &h.params, w[1] - w[0], lp)?);
    }
    // Probability of ending in the first cell given that the history
    // started in it; absent when that marginal vanishes.
    let cond = conditional_probability(table, 0, 0).ok();
    Ok(json!({
        "kappa": consistency_epsilon(table)?,
        "decoherence_epsilon": decoherence_epsilon(table)?,
        "epsilon_ref": eps,
        "epsilon_ref_max": eps.iter().cloned().fold(0.0, f64::max),
        "p_conditional": cond.map(|c| c.raw),
        "p_conditional_clipped": cond.map(|c| c.value),
        "probabilities": table.probabilities(),
        "probability_sum": table.probability_sum(),
        "hermiticity_residual": table.hermiticity_residual(),
        "warnings": table.warnings(),
        "cell_volumes": h.cells.iter().map(|c| c.volume()).collect::<Vec<_>>(),
    }))
}

fn histories_two_time(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<Value, CliError> {
    let h = history_setup(cfg)?;
    let t = &cfg.time.times;
    let table = decoherence_functional_two_time(
        &h.partitions[0],
        &h.partitions[1],
        &h.rho0,
        &h.pot,
        &h.params,
        t[0],
        t[1],
        &h.pc,
    )?;
    out.write_csv("dtable.csv", &["alpha", "alpha_prime", "re_D", "im_D"], &dtable_rows(&table))?;
    table_summary(&table, cfg, &h)
}

fn histories_n_time(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<Value, CliError> {
    // Refuse before any projector is built; binary partitions give 2^n
    // histories.
    let n_hist = 1usize.checked_shl(cfg.time.times.len() as u32).unwrap_or(usize::MAX);
    let entries = n_hist.saturating_mul(n_hist);
    if entries > MAX_TABLE_ENTRIES {
        return Err(QbmError::CostGuard { entries, limit: MAX_TABLE_ENTRIES }.into());
    }
    let h = history_setup(cfg)?;
    let alphabet = HistoryAlphabet::new(cfg.time.times.clone(), h.partitions.clone())?;
    let table = n_time_functional(&alphabet, &h.rho0, &h.pot, &h.params, &HistoryConfig::new(h.pc))?;
    out.write_csv("dtable.csv", &["alpha", "alpha_prime", "re_D", "im_D"], &dtable_rows(&table))?;
    let mut summary = table_summary(&table, cfg, &h)?;
    let labels: Vec<Vec<usize>> = (0..table.history_count()).map(|i| table.labels(i)).collect();
    summary["labels"] = json!(labels);
    Ok(summary)
}

fn area_growth(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<Value, CliError> {
    let params = cfg.physical_params()?;
    let pot = cfg.potential()?;
    let st = cfg.initial_state()?;
    let (steps, dt) = exact_steps(cfg.t_final(), cfg.time.dt);
    let traj = integrate(&st, &pot, &params, cfg.t_final(), dt, Direction::Forward)?;
    let area = area_trajectory(&traj);
    let mut rows = Vec::new();
    for (n, (s, &(t, a))) in traj.samples().iter().zip(&area).enumerate() {
        if sampled(n, cfg.time.sample_every, steps) {
            rows.push(
                [t, a, short_time_comparator(&params, t), s.purity, s.moments.dq2, s.moments.dp2]
                    .map(Cell::from)
                    .to_vec(),
            );
        }
    }
    out.write_csv("area.csv", &["t", "A", "A_short_ref", "purity", "dq2", "dp2"], &rows)?;
    out.write_gnuplot("area.gp", "area.csv", 1, &[(2, "A"), (3, "A_short_ref")], false)?;
    let monotone = area.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-12);
    Ok(json!({ "final_area": area.last().map(|x| x.1), "non_decreasing": monotone }))
}
