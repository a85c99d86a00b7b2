use qbm_core::gaussian::{integrate, Direction};
use qbm_core::grid::{
    init_from_gaussian, GridOperator, GridSpec, PropagationDirection, Propagator, PropagatorConfig, Scheme,
};
use qbm_core::histories::*;
use qbm_core::projector::*;
use qbm_core::{GaussianState, PhaseSpaceCell, PhysicalParams, PotentialModel, QbmError};
use std::f64::consts::PI;

struct Setup {
    params: PhysicalParams,
    pot: PotentialModel,
    spec: GridSpec,
    rho0: GridOperator,
    cfg: PropagatorConfig,
    sm: Smearing,
}

fn setup() -> Setup {
    let params = PhysicalParams::new(1.0, 0.1, 2.0, 1.0).unwrap();
    let pot = PotentialModel::harmonic(1.0).unwrap();
    let spec = GridSpec::matrix_compatible(256, 14.0).unwrap();
    let rho0 = init_from_gaussian(&GaussianState::pure(1.0, 6.0, 0.0).unwrap(), &params, spec).unwrap();
    let cfg = PropagatorConfig::new(0.02, Scheme::Strang, PropagationDirection::SchrodingerL).unwrap();
    Setup { params, pot, spec, rho0, cfg, sm: Smearing::max_resolution(2.0).unwrap() }
}

fn projector(s: &Setup, cell: &PhaseSpaceCell) -> GridOperator {
    build_projector(cell, &s.sm, &s.params, &s.spec).unwrap().into_kernel()
}

fn smearing_area(s: &Setup, span: f64) -> f64 {
    let tr = integrate(&s.sm.at(0.0, 0.0), &s.pot, &s.params, span, 1e-3, Direction::Backward).unwrap();
    tr.last().area
}

#[test]
fn identity_first_partition_gives_single_time_probabilities() {
    let s = setup();
    let cell = PhaseSpaceCell::rectangle(-2.0, 8.0, -5.0, 5.0).unwrap();
    let p2 = binary_partition(&projector(&s, &cell));
    let id = vec![GridOperator::identity(s.spec)];
    let t = decoherence_functional_two_time(&id, &p2, &s.rho0, &s.pot, &s.params, 0.2, 0.6, &s.cfg).unwrap();
    let mut rho = s.rho0.clone();
    let steps = (0.6f64 / 0.02).round() as usize;
    Propagator::new(s.spec, &s.pot, &s.params, s.cfg).unwrap().evolve(&mut rho, steps).unwrap();
    for (b, p) in p2.iter().enumerate() {
        let direct = p.trace_product(&rho).unwrap();
        assert!((t.value(b, b) - direct).norm() < 1e-8, "{} vs {direct}", t.value(b, b));
    }
}

#[test]
fn classical_flow_histories_decohere() {
    let s = setup();
    let (t1, t2) = (0.0, 0.5 * PI);
    let g1 = PhaseSpaceCell::rectangle(-10.0, 10.0, -10.0, 10.0).unwrap();
    let (g2, _) = transport_cell(&g1, &s.pot, &s.params, t2 - t1).unwrap();
    let first = binary_partition(&projector(&s, &g1));
    let second = binary_partition(&projector(&s, &g2));
    let t = decoherence_functional_two_time(&first, &second, &s.rho0, &s.pot, &s.params, t1, t2, &s.cfg).unwrap();

    assert!((t.probability_sum() - 1.0).abs() < 2e-3, "{}", t.probability_sum());
    assert!(t.hermiticity_residual() < 1e-8);
    assert!(t.diagonal_imag_residue() < 1e-6);
    assert!(t.probabilities().iter().all(|&p| p > -1e-4));
    assert!(t.warnings().is_empty());

    let eps = (smearing_area(&s, t2 - t1) / g1.scale_product()).sqrt();
    let kappa = consistency_epsilon(&t).unwrap();
    let cond = conditional_probability(&t, 0, 0).unwrap();
    println!("eps {eps}, kappa {kappa}, p {}", cond.raw);
    assert!(kappa <= 3.0 * eps);
    assert!(cond.value >= 1.0 - 2.0 * eps);

    // The state sits near (0, -5) at t2. A decoy whose edge cuts through it
    // is less consistent; one far from it is almost never reached.
    let cutting = PhaseSpaceCell::rectangle(-10.0, 10.0, -5.0, 10.0).unwrap();
    let far = PhaseSpaceCell::rectangle(-10.0, 10.0, 0.0, 10.0).unwrap();
    for (decoy, cuts) in [(cutting, true), (far, false)] {
        let decoy_p = binary_partition(&projector(&s, &decoy));
        let td = decoherence_functional_two_time(&first, &decoy_p, &s.rho0, &s.pot, &s.params, t1, t2, &s.cfg).unwrap();
        let kd = consistency_epsilon(&td).unwrap();
        let cd = conditional_probability(&td, 0, 0).unwrap();
        println!("decoy kappa {kd}, p {}", cd.raw);
        assert!(kappa < kd);
        if !cuts {
            assert!(cd.value <= 0.05);
        }
    }
}

#[test]
fn full_box_is_certain() {
    let s = setup();
    let g1 = PhaseSpaceCell::rectangle(-10.0, 10.0, -10.0, 10.0).unwrap();
    let first = binary_partition(&projector(&s, &g1));
    let second = vec![GridOperator::identity(s.spec)];
    let t = decoherence_functional_two_time(&first, &second, &s.rho0, &s.pot, &s.params, 0.0, 0.5, &s.cfg).unwrap();
    let c = conditional_probability(&t, 0, 0).unwrap();
    assert!((c.raw - 1.0).abs() < 1e-6, "{}", c.raw);
}

#[test]
fn coarsening_adds_blocks() {
    let s = setup();
    let left = PhaseSpaceCell::rectangle(-10.0, 5.0, -10.0, 10.0).unwrap();
    let right = PhaseSpaceCell::rectangle(5.0, 10.0, -10.0, 10.0).unwrap();
    let pl = projector(&s, &left);
    let pr = projector(&s, &right);
    let rest = GridOperator::identity(s.spec).sub(&pl).unwrap().sub(&pr).unwrap();
    let fine = vec![pl.clone(), pr.clone(), rest.clone()];
    let coarse = vec![pl.add(&pr).unwrap(), rest];
    let g2 = PhaseSpaceCell::rectangle(-8.0, 2.0, -9.0, 1.0).unwrap();
    let second = binary_partition(&projector(&s, &g2));
    let tf = decoherence_functional_two_time(&fine, &second, &s.rho0, &s.pot, &s.params, 0.0, 1.0, &s.cfg).unwrap();
    let tc = decoherence_functional_two_time(&coarse, &second, &s.rho0, &s.pot, &s.params, 0.0, 1.0, &s.cfg).unwrap();
    // History index = 2 alpha + beta; merged alpha in {0, 1} maps to 0.
    let merge = |a: usize| if a < 2 { 0 } else { 1 };
    for ca in 0..2 {
        for cb in 0..2 {
            for beta in 0..2 {
                let mut sum = qbm_core::C64::default();
                for a in (0..3).filter(|&a| merge(a) == ca) {
                    for b in (0..3).filter(|&b| merge(b) == cb) {
                        sum += tf.value(2 * a + beta, 2 * b + beta);
                    }
                }
                let c = tc.value(2 * ca + beta, 2 * cb + beta);
                assert!((sum - c).norm() < 1e-9, "{sum} vs {c}");
            }
        }
    }
}

#[test]
fn kappa_grows_as_cells_shrink() {
    let mut s = setup();
    s.rho0 = init_from_gaussian(&GaussianState::pure(1.0, 2.0, 0.0).unwrap(), &s.params, s.spec).unwrap();
    let mut last = 0.0;
    for side in [12.0, 6.0, 3.5, 2.5] {
        let g1 = PhaseSpaceCell::rectangle(2.0 - 0.5 * side, 2.0 + 0.5 * side, -0.5 * side, 0.5 * side).unwrap();
        let (g2, _) = transport_cell(&g1, &s.pot, &s.params, 1.0).unwrap();
        let first = binary_partition(&projector(&s, &g1));
        let second = binary_partition(&projector(&s, &g2));
        let t = decoherence_functional_two_time(&first, &second, &s.rho0, &s.pot, &s.params, 0.0, 1.0, &s.cfg).unwrap();
        let kappa = consistency_epsilon(&t).unwrap();
        println!("side {side}: kappa {kappa}");
        assert!(kappa > last);
        last = kappa;
    }
    assert!(last > 0.05);
}

#[test]
fn three_time_chain() {
    let s = setup();
    let times = vec![0.0, 0.5 * PI, PI];
    let g1 = PhaseSpaceCell::rectangle(-10.0, 10.0, -10.0, 10.0).unwrap();
    let (g2, _) = transport_cell(&g1, &s.pot, &s.params, times[1]).unwrap();
    let (g3, _) = transport_cell(&g2, &s.pot, &s.params, times[2] - times[1]).unwrap();
    let parts: Vec<Vec<GridOperator>> = [&g1, &g2, &g3].iter().map(|g| binary_partition(&projector(&s, g))).collect();
    let alphabet = HistoryAlphabet::new(times.clone(), parts.clone()).unwrap();
    let t = n_time_functional(&alphabet, &s.rho0, &s.pot, &s.params, &HistoryConfig::new(s.cfg)).unwrap();
    let eps =
        times.windows(2).map(|w| (smearing_area(&s, w[1] - w[0]) / g1.scale_product()).sqrt()).fold(0.0, f64::max);
    let kappa = consistency_epsilon(&t).unwrap();
    println!("chain eps {eps}, kappa {kappa}");
    assert!(kappa <= 3.0 * eps);
    // The intermediate projectors enter squared, so the diagonal sum misses
    // 1 by twice the margin weight at t2, a sum-rule error of order eps.
    assert!((t.probability_sum() - 1.0).abs() < eps, "{}", t.probability_sum());
    // Branch through the complement at the middle time.
    let p_mid_out = t.value(alphabet.history_index(&[0, 1, 0]).unwrap(), alphabet.history_index(&[0, 1, 0]).unwrap());
    assert!(p_mid_out.re <= 2.0 * eps);

    let diag = n_time_functional(
        &alphabet,
        &s.rho0,
        &s.pot,
        &s.params,
        &HistoryConfig::new(s.cfg).with_mode(TableMode::DiagonalOnly),
    )
    .unwrap();
    for a in 0..8 {
        assert!((diag.value(a, a) - t.value(a, a)).norm() < 1e-12);
    }
    assert!(matches!(consistency_epsilon(&diag), Err(QbmError::Misuse(_))));
}

#[test]
fn two_time_equals_chain_of_length_two() {
    let s = setup();
    let g1 = PhaseSpaceCell::rectangle(-10.0, 10.0, -10.0, 10.0).unwrap();
    let g2 = PhaseSpaceCell::rectangle(-5.0, 9.0, -9.0, 5.0).unwrap();
    let a = binary_partition(&projector(&s, &g1));
    let b = binary_partition(&projector(&s, &g2));
    let t2 = decoherence_functional_two_time(&a, &b, &s.rho0, &s.pot, &s.params, 0.1, 0.7, &s.cfg).unwrap();
    let alphabet = HistoryAlphabet::new(vec![0.1, 0.7], vec![a, b]).unwrap();
    let tn = n_time_functional(&alphabet, &s.rho0, &s.pot, &s.params, &HistoryConfig::new(s.cfg)).unwrap();
    assert_eq!(t2.matrix(), tn.matrix());
}

#[test]
fn cost_guard_refuses_large_tables() {
    let s = setup();
    let id = GridOperator::identity(s.spec);
    let half = id.scaled(qbm_core::C64::new(0.5, 0.0));
    let parts = vec![vec![half.clone(), half.clone()]; 7];
    let times: Vec<f64> = (0..7).map(|k| k as f64).collect();
    let alphabet = HistoryAlphabet::new(times, parts).unwrap();
    let err = n_time_functional(&alphabet, &s.rho0, &s.pot, &s.params, &HistoryConfig::new(s.cfg)).unwrap_err();
    assert!(matches!(err, QbmError::CostGuard { entries: 16384, .. }));
}

#[test]
fn incomplete_partition_rejected() {
    let s = setup();
    let g1 = PhaseSpaceCell::rectangle(-10.0, 10.0, -10.0, 10.0).unwrap();
    let err = HistoryAlphabet::new(vec![0.0], vec![vec![projector(&s, &g1)]]).unwrap_err();
    assert!(matches!(err, QbmError::ConstraintViolation(_)));
}

#[test]
fn cold_bath_warns() {
    let s = setup();
    let cold = PhysicalParams::new(1.0, 0.1, 0.0, 1.0).unwrap();
    let g1 = PhaseSpaceCell::rectangle(-10.0, 10.0, -10.0, 10.0).unwrap();
    let a = binary_partition(&projector(&s, &g1));
    let t = decoherence_functional_two_time(&a, &a, &s.rho0, &s.pot, &cold, 0.0, 0.2, &s.cfg).unwrap();
    assert_eq!(t.warnings().len(), 1);
    assert!(!t.markov_guards()[0].applicable);
}
