//! Ideal two-qubit gate layer.
//!
//! Matrices are written in the logical basis `|00⟩, |01⟩, |10⟩, |11⟩` with
//! qubit 1 as the left tensor factor. Global phases are kept as written; use
//! [`equal_up_to_global_phase`] where a comparison should ignore them.
//!
//! For two qubits a single Grover iteration is exact, so [`grover_sequence`]
//! contains exactly one oracle call.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::linalg::{self, tensor, ComplexMatrix, ComplexVector, LinalgError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GateError {
    #[error("target item must be in 0..=3, got {0}")]
    InvalidTarget(i64),
    #[error("logical state must have 4 normalized amplitudes")]
    InvalidLogicalState,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// The marked item `|τ⟩`, an index into the logical basis.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct TargetItem(u8);

impl TargetItem {
    pub const ALL: [TargetItem; 4] = [TargetItem(0), TargetItem(1), TargetItem(2), TargetItem(3)];

    pub fn new(value: i64) -> Result<Self, GateError> {
        match value {
            0..=3 => Ok(Self(value as u8)),
            _ => Err(GateError::InvalidTarget(value)),
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Logical bit of qubit 1 (the high bit).
    pub fn qubit1(self) -> bool {
        self.0 & 0b10 != 0
    }

    /// Logical bit of qubit 2 (the low bit).
    pub fn qubit2(self) -> bool {
        self.0 & 0b01 != 0
    }

    pub fn label(self) -> &'static str {
        ["00", "01", "10", "11"][self.index()]
    }
}

impl TryFrom<i64> for TargetItem {
    type Error = GateError;
    fn try_from(value: i64) -> Result<Self, GateError> {
        Self::new(value)
    }
}

impl fmt::Display for TargetItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{}⟩", self.label())
    }
}

/// Normalized two-qubit register state.
#[derive(Clone, Debug, PartialEq)]
pub struct LogicalState(ComplexVector);

impl LogicalState {
    pub fn new(v: ComplexVector) -> Result<Self, GateError> {
        if v.len() != 4 || !v.is_normalized(1e-10) {
            return Err(GateError::InvalidLogicalState);
        }
        Ok(Self(v))
    }

    pub fn basis(item: TargetItem) -> Self {
        Self(ComplexVector::basis(4, item.index()))
    }

    pub fn vector(&self) -> &ComplexVector {
        &self.0
    }

    pub fn probabilities(&self) -> [f64; 4] {
        let p = self.0.probabilities();
        [p[0], p[1], p[2], p[3]]
    }

    pub fn probability_of(&self, item: TargetItem) -> f64 {
        self.0[item.index()].norm_sqr()
    }

    pub fn most_likely(&self) -> TargetItem {
        let p = self.probabilities();
        let idx = (0..4).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap_or(0);
        TargetItem(idx as u8)
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn hadamard() -> ComplexMatrix {
    let h = FRAC_1_SQRT_2;
    ComplexMatrix::from_real_rows(&[[h, h], [h, -h]])
}

/// `|0⟩ → cos(θ/2)|0⟩ + i sin(θ/2)|1⟩`, `|1⟩ → i sin(θ/2)|0⟩ + cos(θ/2)|1⟩`.
pub fn x_rot(theta: f64) -> ComplexMatrix {
    let (s, co) = (theta / 2.0).sin_cos();
    ComplexMatrix::from_rows(&[[c(co, 0.0), c(0.0, s)], [c(0.0, s), c(co, 0.0)]])
}

/// `diag(e^{-iθ/2}, e^{iθ/2})`.
pub fn z_rot(theta: f64) -> ComplexMatrix {
    ComplexMatrix::from_diag(&[C64::from_polar(1.0, -theta / 2.0), C64::from_polar(1.0, theta / 2.0)])
}

/// Real rotation about y: `[[cos α/2, -sin α/2], [sin α/2, cos α/2]]`.
pub fn y_rot(alpha: f64) -> ComplexMatrix {
    let (s, co) = (alpha / 2.0).sin_cos();
    ComplexMatrix::from_real_rows(&[[co, -s], [s, co]])
}

/// Final single-qubit layer, `X(-π)·H`.
pub fn s_gate() -> ComplexMatrix {
    let h = FRAC_1_SQRT_2;
    ComplexMatrix::from_rows(&[[c(0.0, -h), c(0.0, h)], [c(0.0, -h), c(0.0, -h)]])
}

/// Oracle-preparation layer, `H·X(-θ)`.
pub fn p_gate(theta: f64) -> ComplexMatrix {
    let h = FRAC_1_SQRT_2;
    let m = C64::from_polar(h, -theta / 2.0);
    let p = C64::from_polar(h, theta / 2.0);
    ComplexMatrix::from_rows(&[[m, m], [p, -p]])
}

/// Controlled phase: `diag(1, 1, 1, -1)`.
pub fn i_qpg() -> ComplexMatrix {
    ComplexMatrix::from_diag(&[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)])
}

/// `I - 2|τ⟩⟨τ|`.
pub fn oracle_reflection(target: TargetItem) -> ComplexMatrix {
    let mut m = ComplexMatrix::identity(4);
    m[(target.index(), target.index())] = c(-1.0, 0.0);
    m
}

/// Z-rotation angles `(θ₁, θ₂)` that turn the phase gate into the oracle for `target`.
pub fn oracle_angles(target: TargetItem) -> (f64, f64) {
    match target.value() {
        0 => (PI, PI),
        1 => (0.0, PI),
        2 => (PI, 0.0),
        _ => (0.0, 0.0),
    }
}

/// `Z₁(θ₁) Z₂(θ₂) · I_QPG`, the oracle up to a global phase.
pub fn oracle_from_phase_gate(target: TargetItem) -> ComplexMatrix {
    let (t1, t2) = oracle_angles(target);
    &tensor(&z_rot(t1), &z_rot(t2)) * &i_qpg()
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub enum GateStep {
    /// `P₁(θ₁) ⊗ P₂(θ₂)`
    Prepare { theta1: f64, theta2: f64 },
    PhaseGate,
    HadamardBoth,
    /// `S₁ ⊗ S₂`
    FinalRotation,
}

impl GateStep {
    pub fn matrix(&self) -> ComplexMatrix {
        match *self {
            GateStep::Prepare { theta1, theta2 } => tensor(&p_gate(theta1), &p_gate(theta2)),
            GateStep::PhaseGate => i_qpg(),
            GateStep::HadamardBoth => tensor(&hadamard(), &hadamard()),
            GateStep::FinalRotation => tensor(&s_gate(), &s_gate()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GateStep::Prepare { .. } => "P",
            GateStep::PhaseGate => "QPG",
            GateStep::HadamardBoth => "H",
            GateStep::FinalRotation => "S",
        }
    }
}

/// Gates applied first to last.
#[derive(Clone, Debug, PartialEq)]
pub struct GateSequence {
    pub steps: Vec<GateStep>,
}

impl GateSequence {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Product of all steps, last step leftmost.
    pub fn unitary(&self) -> ComplexMatrix {
        self.steps
            .iter()
            .fold(ComplexMatrix::identity(4), |acc, step| &step.matrix() * &acc)
    }

    /// Applies the first `count` steps to `state`.
    pub fn apply_prefix(&self, state: &ComplexVector, count: usize) -> Result<ComplexVector, LinalgError> {
        self.steps
            .iter()
            .take(count)
            .try_fold(state.clone(), |s, step| linalg::apply(&step.matrix(), &s))
    }
}

/// `S · I_QPG · H · I_QPG · P(θ₁, θ₂)`, as a list ordered in time.
pub fn grover_sequence(target: TargetItem) -> GateSequence {
    let (theta1, theta2) = oracle_angles(target);
    GateSequence {
        steps: vec![
            GateStep::Prepare { theta1, theta2 },
            GateStep::PhaseGate,
            GateStep::HadamardBoth,
            GateStep::PhaseGate,
            GateStep::FinalRotation,
        ],
    }
}

/// Runs the ideal Grover search from `|00⟩`.
pub fn run_ideal(target: TargetItem) -> LogicalState {
    let seq = grover_sequence(target);
    let out = seq
        .apply_prefix(&ComplexVector::basis(4, 0), seq.len())
        .expect("4x4 gates on a 4-vector");
    LogicalState(out)
}

pub use crate::linalg::equal_up_to_global_phase;
