//! Decoherence functional for phase-space histories.
//!
//! A history is a sequence of cell indices `(alpha_1, ..., alpha_n)` at times
//! `t_1 < ... < t_n`. The functional is built in the Schrodinger picture: the
//! state is evolved to `t_1`, sandwiched between the projectors of the two
//! histories, evolved to `t_2`, sandwiched again and so on; at the final time
//! the two histories must agree and the entry is `Tr(P_alpha X)`.

use crate::error::{QbmError, Result};
use crate::grid::{
    from_matrices, to_matrix_pair, GridOperator, LatticeMatrix, PropagationDirection, Propagator, PropagatorConfig,
};
use crate::model::{PhysicalParams, PotentialModel};
use crate::C64;
use nalgebra::DMatrix;
use rayon::prelude::*;

/// Default relative tolerance on `|| sum_alpha P_alpha - I ||_HS`.
pub const DEFAULT_PARTITION_TOLERANCE: f64 = 1e-3;

/// Largest number of table entries a full table may hold.
pub const MAX_TABLE_ENTRIES: usize = 10_000;

/// Spacing between projection times measured against `hbar/kT`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovGuard {
    pub spacing: f64,
    /// `spacing / (hbar/kT)`; zero when `kT = 0`.
    pub ratio: f64,
    pub ok: bool,
    /// False at zero temperature, where the thermal time is infinite.
    pub applicable: bool,
}

pub fn markov_guard(params: &PhysicalParams, spacing: f64) -> Result<MarkovGuard> {
    if !(spacing > 0.0) {
        return Err(QbmError::InvalidParameter(format!("time spacing must be positive, got {spacing}")));
    }
    let tau = params.thermal_time();
    if !tau.is_finite() {
        return Ok(MarkovGuard { spacing, ratio: 0.0, ok: false, applicable: false });
    }
    let ratio = spacing / tau;
    Ok(MarkovGuard { spacing, ratio, ok: ratio > 1.0, applicable: true })
}

/// Projection times and, at each time, the list of projectors.
#[derive(Debug, Clone)]
pub struct HistoryAlphabet {
    times: Vec<f64>,
    partitions: Vec<Vec<GridOperator>>,
}

impl HistoryAlphabet {
    /// Checks that each list sums to the box identity within
    /// [`DEFAULT_PARTITION_TOLERANCE`].
    pub fn new(times: Vec<f64>, partitions: Vec<Vec<GridOperator>>) -> Result<Self> {
        Self::with_tolerance(times, partitions, Some(DEFAULT_PARTITION_TOLERANCE))
    }

    /// `None` skips the completeness check, for deliberately partial lists.
    pub fn with_tolerance(times: Vec<f64>, partitions: Vec<Vec<GridOperator>>, tol: Option<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != partitions.len() {
            return Err(QbmError::InvalidParameter(format!(
                "{} times but {} projector lists",
                times.len(),
                partitions.len()
            )));
        }
        if times[0] < 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(QbmError::InvalidParameter("projection times must be non-negative and increasing".into()));
        }
        if partitions.iter().any(|p| p.is_empty()) {
            return Err(QbmError::InvalidParameter("empty projector list".into()));
        }
        let spec = *partitions[0][0].spec();
        if !spec.is_matrix_compatible() {
            return Err(QbmError::Geometry("history projectors need a matrix-compatible lattice".into()));
        }
        for p in partitions.iter().flatten() {
            p.ensure_same_grid(&partitions[0][0])?;
        }
        let alphabet = HistoryAlphabet { times, partitions };
        if let Some(tol) = tol {
            for k in 0..alphabet.len() {
                let defect = alphabet.partition_defect(k)?;
                if defect > tol {
                    return Err(QbmError::ConstraintViolation(format!(
                        "projectors at time index {k} miss the identity by {defect:.3e} (relative HS)"
                    )));
                }
            }
        }
        Ok(alphabet)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn partition(&self, k: usize) -> &[GridOperator] {
        &self.partitions[k]
    }

    /// Number of histories, the product of the list sizes.
    pub fn history_count(&self) -> usize {
        self.partitions.iter().map(|p| p.len()).product()
    }

    /// `|| sum P - I ||_HS / || I ||_HS` at time index `k`.
    pub fn partition_defect(&self, k: usize) -> Result<f64> {
        let list = &self.partitions[k];
        let id = GridOperator::identity(*list[0].spec());
        let mut sum = GridOperator::zeros(*list[0].spec());
        for p in list {
            sum = sum.add(p)?;
        }
        Ok(sum.hs_distance(&id)? / id.hs_norm())
    }

    /// Smallest gap between consecutive projection times, if there are two.
    pub fn min_spacing(&self) -> Option<f64> {
        self.times.windows(2).map(|w| w[1] - w[0]).reduce(f64::min)
    }

    /// Flat index of a history, first time most significant.
    pub fn history_index(&self, labels: &[usize]) -> Result<usize> {
        if labels.len() != self.len() {
            return Err(QbmError::InvalidParameter("history length does not match the alphabet".into()));
        }
        let mut idx = 0;
        for (k, &a) in labels.iter().enumerate() {
            let m = self.partitions[k].len();
            if a >= m {
                return Err(QbmError::InvalidParameter(format!("label {a} out of range at time index {k}")));
            }
            idx = idx * m + a;
        }
        Ok(idx)
    }

    pub fn history_labels(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.len()];
        for k in (0..self.len()).rev() {
            let m = self.partitions[k].len();
            out[k] = idx % m;
            idx /= m;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TableMode {
    #[default]
    FullTable,
    /// Only `D(alpha, alpha)`; consistency cannot be assessed.
    DiagonalOnly,
}

/// `D(alpha, alpha')` over all histories of an alphabet.
#[derive(Debug, Clone)]
pub struct DecoherenceTable {
    sizes: Vec<usize>,
    mode: TableMode,
    d: DMatrix<C64>,
    guards: Vec<MarkovGuard>,
    warnings: Vec<String>,
}

impl DecoherenceTable {
    /// Builds a table directly from values, for inspection and testing.
    pub fn from_values(sizes: Vec<usize>, d: DMatrix<C64>) -> Result<Self> {
        let n: usize = sizes.iter().product();
        if d.nrows() != n || d.ncols() != n {
            return Err(QbmError::InvalidParameter(format!("table must be {n}x{n}")));
        }
        Ok(DecoherenceTable { sizes, mode: TableMode::FullTable, d, guards: Vec::new(), warnings: Vec::new() })
    }

    pub fn mode(&self) -> TableMode {
        self.mode
    }

    pub fn history_count(&self) -> usize {
        self.d.nrows()
    }

    /// Number of projectors at each time.
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn value(&self, a: usize, b: usize) -> C64 {
        self.d[(a, b)]
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.d
    }

    /// Raw diagonal probabilities `Re D(alpha, alpha)`.
    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.history_count()).map(|a| self.d[(a, a)].re).collect()
    }

    pub fn probability_sum(&self) -> f64 {
        self.probabilities().iter().sum()
    }

    /// Largest `|Im D(alpha, alpha)|`.
    pub fn diagonal_imag_residue(&self) -> f64 {
        (0..self.history_count()).fold(0.0, |m, a| m.max(self.d[(a, a)].im.abs()))
    }

    /// Largest `|D(a, b) - conj D(b, a)|`.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.history_count();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                worst = worst.max((self.d[(a, b)] - self.d[(b, a)].conj()).norm());
            }
        }
        worst
    }

    pub fn markov_guards(&self) -> &[MarkovGuard] {
        &self.guards
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Labels of history `idx`, first time first.
    pub fn labels(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.sizes.len()];
        for k in (0..self.sizes.len()).rev() {
            out[k] = idx % self.sizes[k];
            idx /= self.sizes[k];
        }
        out
    }

    fn off_diagonal_ratio(&self, f: impl Fn(C64) -> f64) -> Result<f64> {
        if self.mode == TableMode::DiagonalOnly {
            return Err(QbmError::Misuse("consistency needs a full table".into()));
        }
        let total = self.probability_sum();
        if total.abs() < 1e-300 {
            return Err(QbmError::DegenerateInput("diagonal of the decoherence table sums to zero".into()));
        }
        let n = self.history_count();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    worst = worst.max(f(self.d[(a, b)]));
                }
            }
        }
        Ok(worst / total)
    }
}

/// `kappa = max_{a != b} |Re D(a, b)| / sum_a D(a, a)`.
pub fn consistency_epsilon(table: &DecoherenceTable) -> Result<f64> {
    table.off_diagonal_ratio(|v| v.re.abs())
}

/// As [`consistency_epsilon`] with `|D|`, the stricter decoherence measure.
pub fn decoherence_epsilon(table: &DecoherenceTable) -> Result<f64> {
    table.off_diagonal_ratio(|v| v.norm())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalProbability {
    pub raw: f64,
    /// `raw` clipped to [0, 1].
    pub value: f64,
    pub clipped: bool,
}

/// Probability of ending in cell `to` at the last time given cell `from` at
/// the first time, summing over intermediate labels.
pub fn conditional_probability(table: &DecoherenceTable, from: usize, to: usize) -> Result<ConditionalProbability> {
    let first = table.sizes[0];
    let last = *table.sizes.last().expect("non-empty alphabet");
    if from >= first || to >= last {
        return Err(QbmError::InvalidParameter(format!("labels ({from}, {to}) out of range")));
    }
    let probs = table.probabilities();
    let (mut joint, mut marginal) = (0.0, 0.0);
    for (idx, p) in probs.iter().enumerate() {
        let labels = table.labels(idx);
        if labels[0] == from {
            marginal += p;
            if labels[labels.len() - 1] == to {
                joint += p;
            }
        }
    }
    if marginal.abs() < 1e-300 {
        return Err(QbmError::UndefinedConditional(from));
    }
    let raw = joint / marginal;
    let value = raw.clamp(0.0, 1.0);
    Ok(ConditionalProbability { raw, value, clipped: value != raw })
}

/// The evolution settings shared by every branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryConfig {
    pub propagator: PropagatorConfig,
    pub mode: TableMode,
}

impl HistoryConfig {
    pub fn new(propagator: PropagatorConfig) -> Self {
        HistoryConfig { propagator, mode: TableMode::FullTable }
    }

    pub fn with_mode(mut self, mode: TableMode) -> Self {
        self.mode = mode;
        self
    }
}

type MatrixPair = (LatticeMatrix, LatticeMatrix);

struct Engine<'a> {
    alphabet: &'a HistoryAlphabet,
    matrices: Vec<Vec<MatrixPair>>,
    /// Propagator and step count from each projection time to the next.
    legs: Vec<(Propagator, usize)>,
    mode: TableMode,
}

fn leg(
    span: f64,
    pot: &PotentialModel,
    params: &PhysicalParams,
    base: &PropagatorConfig,
    spec: crate::grid::GridSpec,
) -> Result<(Propagator, usize)> {
    let steps = ((span / base.dt).round() as usize).max(1);
    let cfg = PropagatorConfig { dt: span / steps as f64, ..*base };
    Ok((Propagator::new(spec, pot, params, cfg)?, steps))
}

impl Engine<'_> {
    fn sandwich(&self, k: usize, a: usize, b: usize, x: &GridOperator) -> Result<GridOperator> {
        let (xa, xb) = to_matrix_pair(x)?;
        let (pa, pb) = (&self.matrices[k][a], &self.matrices[k][b]);
        let ya = &pa.0 * xa * &pb.0;
        let yb = &pa.1 * xb * &pb.1;
        let mut y = from_matrices(&ya, &yb, x.spec())?;
        y.set_hermitian_hint(a == b && x.hermitian_hint());
        Ok(y)
    }

    /// Entries `(prefix_a, prefix_b, D)` for all continuations of the pair
    /// of history prefixes whose operator at time index `k` is `x`.
    fn descend(&self, k: usize, x: &GridOperator) -> Result<Vec<(usize, usize, C64)>> {
        let list = self.alphabet.partition(k);
        let m = list.len();
        if k + 1 == self.alphabet.len() {
            return (0..m).map(|a| Ok((a, a, list[a].trace_product(x)?))).collect();
        }
        let pairs: Vec<(usize, usize)> = match self.mode {
            TableMode::FullTable => (0..m).flat_map(|a| (0..m).map(move |b| (a, b))).collect(),
            TableMode::DiagonalOnly => (0..m).map(|a| (a, a)).collect(),
        };
        let tail: usize = (k + 1..self.alphabet.len()).map(|j| self.alphabet.partition(j).len()).product();
        let branches: Vec<Result<Vec<(usize, usize, C64)>>> = pairs
            .par_iter()
            .map(|&(a, b)| {
                let mut y = self.sandwich(k, a, b, x)?;
                let (prop, steps) = &self.legs[k];
                prop.evolve(&mut y, *steps)?;
                let sub = self.descend(k + 1, &y)?;
                Ok(sub.into_iter().map(|(sa, sb, v)| (a * tail + sa, b * tail + sb, v)).collect())
            })
            .collect();
        let mut out = Vec::new();
        for b in branches {
            out.extend(b?);
        }
        Ok(out)
    }
}

/// Decoherence functional over an alphabet, starting from `rho0` at time 0.
pub fn n_time_functional(
    alphabet: &HistoryAlphabet,
    rho0: &GridOperator,
    pot: &PotentialModel,
    params: &PhysicalParams,
    cfg: &HistoryConfig,
) -> Result<DecoherenceTable> {
    if cfg.propagator.direction != PropagationDirection::SchrodingerL {
        return Err(QbmError::Misuse("histories evolve states with the Schrodinger generator".into()));
    }
    let spec = *rho0.spec();
    rho0.ensure_same_grid(&alphabet.partition(0)[0])?;
    let n = alphabet.history_count();
    if cfg.mode == TableMode::FullTable && n.saturating_mul(n) > MAX_TABLE_ENTRIES {
        return Err(QbmError::CostGuard { entries: n.saturating_mul(n), limit: MAX_TABLE_ENTRIES });
    }
    let matrices = (0..alphabet.len())
        .map(|k| alphabet.partition(k).iter().map(to_matrix_pair).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let times = alphabet.times();
    let legs =
        times.windows(2).map(|w| leg(w[1] - w[0], pot, params, &cfg.propagator, spec)).collect::<Result<Vec<_>>>()?;
    let mut guards = Vec::new();
    let mut warnings = Vec::new();
    for w in times.windows(2) {
        let g = markov_guard(params, w[1] - w[0])?;
        if !g.applicable {
            warnings.push(format!(
                "spacing {:.4} at zero temperature: Markov time is infinite, guard not applicable",
                g.spacing
            ));
        } else if !g.ok {
            warnings.push(format!("spacing {:.4} is only {:.3} thermal times hbar/kT", g.spacing, g.ratio));
        }
        guards.push(g);
    }

    let mut rho = rho0.clone();
    if times[0] > 0.0 {
        let (prop, steps) = leg(times[0], pot, params, &cfg.propagator, spec)?;
        prop.evolve(&mut rho, steps)?;
    }
    let engine = Engine { alphabet, matrices, legs: legs.into_iter().collect(), mode: cfg.mode };
    let entries = engine.descend(0, &rho)?;
    let mut d = DMatrix::from_element(n, n, C64::default());
    for (a, b, v) in entries {
        d[(a, b)] = v;
    }
    Ok(DecoherenceTable {
        sizes: (0..alphabet.len()).map(|k| alphabet.partition(k).len()).collect(),
        mode: cfg.mode,
        d,
        guards,
        warnings,
    })
}

/// Two-time functional `D((alpha, beta), (alpha', beta'))`. The lists need
/// not be complete partitions.
#[allow(clippy::too_many_arguments)]
pub fn decoherence_functional_two_time(
    first: &[GridOperator],
    second: &[GridOperator],
    rho0: &GridOperator,
    pot: &PotentialModel,
    params: &PhysicalParams,
    t1: f64,
    t2: f64,
    cfg: &PropagatorConfig,
) -> Result<DecoherenceTable> {
    if !(t2 > t1) {
        return Err(QbmError::InvalidParameter(format!("need t2 > t1, got {t1} and {t2}")));
    }
    let alphabet = HistoryAlphabet::with_tolerance(vec![t1, t2], vec![first.to_vec(), second.to_vec()], None)?;
    n_time_functional(&alphabet, rho0, pot, params, &HistoryConfig::new(*cfg))
}

/// `[P, I - P]`.
pub fn binary_partition(p: &GridOperator) -> Vec<GridOperator> {
    let complement = GridOperator::identity(*p.spec()).sub(p).expect("same lattice");
    vec![p.clone(), complement]
}
