//! Choi–Jamiołkowski picture of the discrimination task: the causal witness `S` and
//! process matrices on `A_I ⊗ A_O ⊗ B_I ⊗ B_O ⊗ C` (each factor a qubit, 32 dimensions).
//!
//! A gate `U` is represented by `|U>> = (1 ⊗ U) Σ_k |k>|k>`, so `<in, out|U>> = U[out][in]`.
//! Process matrices keep the target input as `|ψ*>`, which makes
//! `tr[(|U>><<U| ⊗ |V>><<V| ⊗ |±><±|) W]` the plain circuit probability.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::discrimination::{enumerate_pairs, GateOrder, GateSet, PairClass, N_PAIRS};
use crate::error::{Error, Result};
use crate::su2::{pauli, rot, Axis, Ket2, Matrix2, Pauli};
use crate::switch::port_probabilities;

pub const DIM: usize = 32;
/// Largest tolerated deviation between a process matrix and the circuit simulator.
pub const ORACLE_TOL: f64 = 1e-9;
pub const PSD_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `|U>>` as four amplitudes indexed `2·in + out`.
pub fn double_ket(u: &Matrix2) -> [Complex64; 4] {
    [u.get(0, 0), u.get(1, 0), u.get(0, 1), u.get(1, 1)]
}

/// Outcome of the final control measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ControlOutcome {
    Plus,
    Minus,
}

impl ControlOutcome {
    fn ket(self) -> [Complex64; 2] {
        let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
        match self {
            ControlOutcome::Plus => [s, s],
            ControlOutcome::Minus => [s, -s],
        }
    }

    pub fn for_class(class: PairClass) -> Option<Self> {
        match class {
            PairClass::Commute => Some(ControlOutcome::Plus),
            PairClass::Anticommute => Some(ControlOutcome::Minus),
            PairClass::Neither => None,
        }
    }
}

/// `|U>> ⊗ |V>> ⊗ |c>` in the `A_I, A_O, B_I, B_O, C` ordering.
fn instrument_vector(u: &Matrix2, v: &Matrix2, outcome: ControlOutcome) -> DVector<Complex64> {
    let (du, dv, c) = (double_ket(u), double_ket(v), outcome.ket());
    DVector::from_fn(DIM, |idx, _| {
        let a = idx >> 3;
        let b = (idx >> 1) & 3;
        du[a] * dv[b] * c[idx & 1]
    })
}

fn quadratic_form(m: &DMatrix<Complex64>, g: &DVector<Complex64>) -> f64 {
    (g.adjoint() * m * g)[(0, 0)].re
}

fn hermiticity_defect(m: &DMatrix<Complex64>) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn min_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    sym.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WitnessTerm {
    pub i: usize,
    pub j: usize,
    pub class: PairClass,
    pub weight: f64,
}

/// `S = (1/N) Σ q_ij G±^{ij}` with `G±^{ij} = |U_i>><<U_i| ⊗ |V_j>><<V_j| ⊗ |±><±|`.
#[derive(Clone, Debug)]
pub struct WitnessOperator {
    matrix: DMatrix<Complex64>,
    terms: Vec<WitnessTerm>,
}

impl WitnessOperator {
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Weights for all 100 ordered pairs; `Neither` pairs carry weight 0.
    pub fn terms(&self) -> &[WitnessTerm] {
        &self.terms
    }

    pub fn nonzero_terms(&self) -> usize {
        self.terms.iter().filter(|t| t.weight != 0.0).count()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.matrix)
    }

    /// `tr[S W]`.
    pub fn evaluate(&self, w: &ProcessMatrix) -> f64 {
        (&self.matrix * &w.matrix).trace().re
    }
}

pub fn build_witness() -> WitnessOperator {
    let set = GateSet::new();
    let mut matrix = DMatrix::from_element(DIM, DIM, ZERO);
    let mut terms = Vec::with_capacity(100);
    for i in 0..10 {
        for j in 0..10 {
            let (u, v) = (&set.gates()[i], &set.gates()[j]);
            let class = crate::discrimination::classify_matrices(u, v);
            let weight = match ControlOutcome::for_class(class) {
                Some(outcome) => {
                    let g = instrument_vector(u, v, outcome);
                    matrix += &g * g.adjoint();
                    1.0
                }
                None => 0.0,
            };
            terms.push(WitnessTerm {
                i,
                j,
                class,
                weight,
            });
        }
    }
    matrix /= Complex64::new(N_PAIRS as f64, 0.0);
    WitnessOperator { matrix, terms }
}

/// How gates and the target input enter a [`ProcessMatrix`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CjConvention {
    /// `|U>> = (1 ⊗ U) Σ_k |kk>` with the target input stored complex-conjugated.
    IdentityOnInputConjugateTarget,
}

impl CjConvention {
    pub fn tag(&self) -> &'static str {
        match self {
            CjConvention::IdentityOnInputConjugateTarget => "cj:(1xU)|kk>;target:conj",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProcessKind {
    Switch,
    FixedOrder(GateOrder),
}

/// A process matrix on `A_I ⊗ A_O ⊗ B_I ⊗ B_O ⊗ C`.
#[derive(Clone, Debug)]
pub struct ProcessMatrix {
    matrix: DMatrix<Complex64>,
    target: Ket2,
    kind: ProcessKind,
    convention: CjConvention,
}

impl ProcessMatrix {
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn target(&self) -> Ket2 {
        self.target
    }

    pub fn kind(&self) -> ProcessKind {
        self.kind
    }

    pub fn convention(&self) -> CjConvention {
        self.convention
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.matrix)
    }

    /// Probability of `outcome` when `U` sits in slot A and `V` in slot B.
    pub fn probability(&self, u: &Matrix2, v: &Matrix2, outcome: ControlOutcome) -> f64 {
        quadratic_form(&self.matrix, &instrument_vector(u, v, outcome))
    }

    /// Largest deviation from the circuit-level SWITCH over the given gate pairs.
    pub fn oracle_residual(&self, pairs: &[(Matrix2, Matrix2)]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (u, v) in pairs {
            let (p_plus, p_minus) = self.reference_probabilities(u, v)?;
            worst = worst
                .max((self.probability(u, v, ControlOutcome::Plus) - p_plus).abs())
                .max((self.probability(u, v, ControlOutcome::Minus) - p_minus).abs());
        }
        Ok(worst)
    }

    fn reference_probabilities(&self, u: &Matrix2, v: &Matrix2) -> Result<(f64, f64)> {
        match self.kind {
            ProcessKind::Switch => port_probabilities(u, v, &self.target),
            ProcessKind::FixedOrder(order) => {
                let product = match order {
                    GateOrder::AThenB => *v * *u,
                    GateOrder::BThenA => *u * *v,
                };
                Ok((product.apply(&self.target).norm().powi(2), 0.0))
            }
        }
    }
}

/// Amplitude of each order on each control component: `weights[c] = [UV, VU]`.
type BranchWeights = [[Complex64; 2]; 2];

/// Pure branch vectors `|w_f>` for each target-future basis state `f`.
fn branch_vectors(psi: &Ket2, weights: &BranchWeights) -> Vec<DVector<Complex64>> {
    let psi_c = psi.conj().amplitudes();
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    (0..2)
        .map(|f| {
            DVector::from_fn(DIM, |idx, _| {
                let (ai, ao, bi, bo, c) = (
                    idx >> 4,
                    (idx >> 3) & 1,
                    (idx >> 2) & 1,
                    (idx >> 1) & 1,
                    idx & 1,
                );
                // B then A: psi into B_I, B_O wired to A_I, A_O to the future.
                let uv = psi_c[bi] * delta(bo, ai) * delta(ao, f);
                // A then B: psi into A_I, A_O wired to B_I, B_O to the future.
                let vu = psi_c[ai] * delta(ao, bi) * delta(bo, f);
                weights[c][0] * uv + weights[c][1] * vu
            })
        })
        .collect()
}

fn probe_pairs() -> Vec<(Matrix2, Matrix2)> {
    let set = GateSet::new();
    let mut out = Vec::new();
    for i in 0..10 {
        for j in 0..10 {
            out.push((set.gates()[i], set.gates()[j]));
        }
    }
    for k in 0..12 {
        let s = k as f64;
        let u = rot(Axis::Z, 0.9 * s) * rot(Axis::Y, 1.7 * s + 0.3) * rot(Axis::Z, 0.4 - s);
        let v = rot(Axis::X, 1.1 * s + 0.5) * rot(Axis::Z, 2.3 * s) * pauli(Pauli::Y);
        out.push((u, v));
    }
    out
}

fn assemble(psi: &Ket2, kind: ProcessKind, weights: &BranchWeights) -> Result<ProcessMatrix> {
    if (psi.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidState("target input is not normalized".into()));
    }
    let mut matrix = DMatrix::from_element(DIM, DIM, ZERO);
    for w in branch_vectors(psi, weights) {
        matrix += &w * w.adjoint();
    }
    let process = ProcessMatrix {
        matrix,
        target: *psi,
        kind,
        convention: CjConvention::IdentityOnInputConjugateTarget,
    };
    let lowest = process.min_eigenvalue();
    if lowest < -PSD_TOL {
        return Err(Error::Construction(format!(
            "process matrix has eigenvalue {lowest:e}"
        )));
    }
    let residual = process.oracle_residual(&probe_pairs())?;
    if residual > ORACLE_TOL {
        return Err(Error::Construction(format!(
            "process matrix deviates from its circuit by {residual:e}"
        )));
    }
    Ok(process)
}

/// The SWITCH process with control `|+>`, measured after a Hadamard, and target
/// input `psi`.
pub fn build_switch_process_matrix(psi: &Ket2) -> Result<ProcessMatrix> {
    let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
    assemble(psi, ProcessKind::Switch, &[[s, ZERO], [ZERO, s]])
}

/// A definite-order process whose control is left in `|+>`, so it always announces
/// "commute".
pub fn build_fixed_order_process_matrix(order: GateOrder, psi: &Ket2) -> Result<ProcessMatrix> {
    let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let row = match order {
        GateOrder::AThenB => [ZERO, s],
        GateOrder::BThenA => [s, ZERO],
    };
    assemble(psi, ProcessKind::FixedOrder(order), &[row, row])
}

/// `tr[S W_SWITCH]` for the default target `|+>`.
pub fn switch_witness_value() -> Result<f64> {
    Ok(build_witness().evaluate(&build_switch_process_matrix(&Ket2::plus())?))
}

/// Mean ideal success probability over the 52 task pairs, the quantity `tr[S W]` equals.
pub fn ideal_mean_success() -> Result<f64> {
    let set = GateSet::new();
    let pairs = enumerate_pairs().all();
    let mut total = 0.0;
    for p in &pairs {
        let (plus, minus) = port_probabilities(&set.gates()[p.i], &set.gates()[p.j], &Ket2::plus())?;
        total += if p.class == PairClass::Commute { plus } else { minus };
    }
    Ok(total / pairs.len() as f64)
}
