//! The commute/anti-commute channel-discrimination task.
//!
//! Pairs `(U_i, V_j)` are drawn from a ten-element gate set and either commute or
//! anti-commute; the task is to announce which, using each gate once. A quantum SWITCH
//! does this perfectly. Any causally ordered strategy is bounded by a worst-case success
//! probability of [`BOUND_MIN`] and a uniform average of [`BOUND_MEAN`].

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::su2::{anticommutator, commutator, pauli, Ket2, Matrix2, Pauli};
use crate::switch::port_probabilities;

/// Upper bound on `min p_s` for causally ordered strategies (certified externally by SDP).
pub const BOUND_MIN: f64 = 0.841;
/// Upper bound on the uniform average of `p_s` for causally ordered strategies.
pub const BOUND_MEAN: f64 = 0.904;
/// Number of pairs that commute or anti-commute.
pub const N_PAIRS: usize = 52;
/// Operator-norm tolerance for classifying pairs.
pub const CLASSIFY_TOL: f64 = 1e-10;

pub const GATE_LABELS: [&str; 10] = [
    "I", "X", "Y", "Z", "(X+Y)/sqrt2", "(X-Y)/sqrt2", "(X+Z)/sqrt2", "(X-Z)/sqrt2",
    "(Y+Z)/sqrt2", "(Y-Z)/sqrt2",
];

/// `{1, X, Y, Z, (X±Y)/√2, (X±Z)/√2, (Y±Z)/√2}`, indexed 0..9 in that order.
#[derive(Clone, Debug)]
pub struct GateSet {
    gates: [Matrix2; 10],
}

impl Default for GateSet {
    fn default() -> Self {
        Self::new()
    }
}

impl GateSet {
    pub fn new() -> Self {
        let (x, y, z) = (pauli(Pauli::X), pauli(Pauli::Y), pauli(Pauli::Z));
        let s = FRAC_1_SQRT_2;
        Self {
            gates: [
                pauli(Pauli::I),
                x,
                y,
                z,
                (x + y) * s,
                (x - y) * s,
                (x + z) * s,
                (x - z) * s,
                (y + z) * s,
                (y - z) * s,
            ],
        }
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, index: usize) -> Result<&Matrix2> {
        self.gates
            .get(index)
            .ok_or_else(|| Error::InvalidInput(format!("gate index {index} out of range 0..9")))
    }

    pub fn gates(&self) -> &[Matrix2; 10] {
        &self.gates
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PairClass {
    Commute,
    Anticommute,
    Neither,
}

impl PairClass {
    pub fn label(&self) -> &'static str {
        match self {
            PairClass::Commute => "commute",
            PairClass::Anticommute => "anticommute",
            PairClass::Neither => "neither",
        }
    }
}

impl fmt::Display for PairClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

pub fn classify_matrices(u: &Matrix2, v: &Matrix2) -> PairClass {
    if commutator(u, v).operator_norm() < CLASSIFY_TOL {
        PairClass::Commute
    } else if anticommutator(u, v).operator_norm() < CLASSIFY_TOL {
        PairClass::Anticommute
    } else {
        PairClass::Neither
    }
}

pub fn classify(i: usize, j: usize) -> Result<PairClass> {
    let set = GateSet::new();
    Ok(classify_matrices(set.get(i)?, set.get(j)?))
}

/// A pair of gate indices together with its class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Pair {
    pub i: usize,
    pub j: usize,
    pub class: PairClass,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairSets {
    pub commuting: Vec<Pair>,
    pub anticommuting: Vec<Pair>,
}

impl PairSets {
    /// All 52 task pairs in row-major `(i, j)` order.
    pub fn all(&self) -> Vec<Pair> {
        let mut all: Vec<Pair> = self
            .commuting
            .iter()
            .chain(self.anticommuting.iter())
            .copied()
            .collect();
        all.sort_by_key(|p| (p.i, p.j));
        all
    }
}

pub fn enumerate_pairs() -> PairSets {
    let set = GateSet::new();
    let mut commuting = Vec::new();
    let mut anticommuting = Vec::new();
    for i in 0..set.len() {
        for j in 0..set.len() {
            let class = classify_matrices(&set.gates[i], &set.gates[j]);
            let pair = Pair { i, j, class };
            match class {
                PairClass::Commute => commuting.push(pair),
                PairClass::Anticommute => anticommuting.push(pair),
                PairClass::Neither => {}
            }
        }
    }
    PairSets {
        commuting,
        anticommuting,
    }
}

/// Any way of producing outcome probabilities `(p_commute, p_anticommute)` for a pair.
pub trait ProbabilitySource {
    fn probabilities(&self, i: usize, j: usize) -> Result<(f64, f64)>;
}

/// The ideal quantum SWITCH acting on a fixed target state.
#[derive(Clone, Debug)]
pub struct IdealSource {
    gates: GateSet,
    target: Ket2,
}

impl IdealSource {
    pub fn new(target: Ket2) -> Self {
        Self {
            gates: GateSet::new(),
            target,
        }
    }
}

impl Default for IdealSource {
    fn default() -> Self {
        Self::new(Ket2::plus())
    }
}

impl ProbabilitySource for IdealSource {
    fn probabilities(&self, i: usize, j: usize) -> Result<(f64, f64)> {
        port_probabilities(self.gates.get(i)?, self.gates.get(j)?, &self.target)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateOrder {
    AThenB,
    BThenA,
}

/// Definite-order single-use strategy: apply both gates in a fixed order to the target and
/// always announce "commute".
#[derive(Clone, Debug)]
pub struct FixedOrderSource {
    gates: GateSet,
    target: Ket2,
    order: GateOrder,
}

impl FixedOrderSource {
    pub fn new(order: GateOrder, target: Ket2) -> Self {
        Self {
            gates: GateSet::new(),
            target,
            order,
        }
    }
}

impl ProbabilitySource for FixedOrderSource {
    fn probabilities(&self, i: usize, j: usize) -> Result<(f64, f64)> {
        let (u, v) = (self.gates.get(i)?, self.gates.get(j)?);
        let product = match self.order {
            GateOrder::AThenB => *v * *u,
            GateOrder::BThenA => *u * *v,
        };
        // The output state is discarded; the guess is fixed, so all weight sits on "commute".
        let norm = product.apply(&self.target).norm().powi(2);
        Ok((norm, 0.0))
    }
}

/// Probabilities taken from a table, e.g. efficiency-corrected simulated counts.
#[derive(Clone, Debug, Default)]
pub struct TableSource {
    table: BTreeMap<(usize, usize), (f64, f64)>,
}

impl TableSource {
    pub fn insert(&mut self, i: usize, j: usize, p_commute: f64, p_anticommute: f64) {
        self.table.insert((i, j), (p_commute, p_anticommute));
    }
}

impl FromIterator<((usize, usize), (f64, f64))> for TableSource {
    fn from_iter<T: IntoIterator<Item = ((usize, usize), (f64, f64))>>(iter: T) -> Self {
        Self {
            table: iter.into_iter().collect(),
        }
    }
}

impl ProbabilitySource for TableSource {
    fn probabilities(&self, i: usize, j: usize) -> Result<(f64, f64)> {
        self.table
            .get(&(i, j))
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("no probabilities recorded for ({i}, {j})")))
    }
}

/// Probability of announcing the correct class for pair `(i, j)`.
pub fn success_probability(i: usize, j: usize, source: &dyn ProbabilitySource) -> Result<f64> {
    let (p_commute, p_anti) = source.probabilities(i, j)?;
    match classify(i, j)? {
        PairClass::Commute => Ok(p_commute),
        PairClass::Anticommute => Ok(p_anti),
        PairClass::Neither => Err(Error::InvalidInput(format!(
            "pair ({i}, {j}) neither commutes nor anti-commutes"
        ))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairScore {
    pub i: usize,
    pub j: usize,
    pub class: PairClass,
    pub p_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TaskReport {
    pub scores: Vec<PairScore>,
    pub min: f64,
    pub mean: f64,
    pub bound_min: f64,
    pub bound_mean: f64,
}

impl TaskReport {
    pub fn from_scores(scores: Vec<PairScore>) -> Self {
        let min = scores.iter().map(|s| s.p_s).fold(f64::INFINITY, f64::min);
        let mean = scores.iter().map(|s| s.p_s).sum::<f64>() / scores.len().max(1) as f64;
        Self {
            scores,
            min,
            mean,
            bound_min: BOUND_MIN,
            bound_mean: BOUND_MEAN,
        }
    }

    pub fn beats_min_bound(&self) -> bool {
        self.min > BOUND_MIN
    }

    pub fn beats_mean_bound(&self) -> bool {
        self.mean > BOUND_MEAN
    }
}

/// Scores every task pair with `source`.
pub fn task_report(source: &dyn ProbabilitySource) -> Result<TaskReport> {
    let scores = enumerate_pairs()
        .all()
        .into_iter()
        .map(|p| {
            Ok(PairScore {
                i: p.i,
                j: p.j,
                class: p.class,
                p_s: success_probability(p.i, p.j, source)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TaskReport::from_scores(scores))
}

/// Per-pair success of the fixed-order baseline.
pub fn fixed_order_success(order: GateOrder) -> Result<TaskReport> {
    task_report(&FixedOrderSource::new(order, Ket2::plus()))
}
