//! Pulse-level simulation of the full search sequence.
//!
//! Single-qubit gates are compiled into resonant Rabi pulses and Stark phase
//! shifts, both treated as instantaneous. The two phase gates are cavity
//! collisions of duration `π/λ`, evolved under either the exact coupling or
//! the effective collision Hamiltonian.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cavity::{
    self, atomic_marginal, logical_levels, vacuum_marginal, AtomicPopulations, CavityError, CollisionModel,
    CouplingParams, PhysicalBasis, PhysicalState,
};
use crate::gates::{oracle_angles, z_rot, TargetItem};
use crate::linalg::{self, ComplexMatrix, LinalgError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("sweep needs at least one point")]
    EmptySweep,
    #[error(transparent)]
    Cavity(#[from] CavityError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

impl ExperimentError {
    /// Whether the failure comes from the numerics rather than the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            ExperimentError::Linalg(LinalgError::NotUnitary { .. } | LinalgError::NotHermitian { .. })
                | ExperimentError::Cavity(CavityError::Linalg(
                    LinalgError::NotUnitary { .. } | LinalgError::NotHermitian { .. }
                ))
        )
    }
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

/// Which pulse parameters a duration error rescales.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum ErrorModel {
    /// Only resonant Rabi rotation angles are scaled by `1 + ε`.
    RabiOnly,
    /// Rabi angles and Stark phase shifts are both scaled.
    AllAngles,
}

impl FromStr for ErrorModel {
    type Err = ExperimentError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rabi_only" => Ok(ErrorModel::RabiOnly),
            "all_angles" => Ok(ErrorModel::AllAngles),
            other => Err(ExperimentError::InvalidConfig(format!(
                "unknown error model '{other}' (expected 'rabi_only' or 'all_angles')"
            ))),
        }
    }
}

impl fmt::Display for ErrorModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorModel::RabiOnly => "rabi_only",
            ErrorModel::AllAngles => "all_angles",
        })
    }
}

/// How the final state is scored against the target.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash)]
pub enum FidelityMeasure {
    /// Probability of the target atomic level pair, field traced out.
    #[default]
    AtomicMarginal,
    /// Probability of the target level pair with the cavity in vacuum.
    TargetVacuum,
}

impl FromStr for FidelityMeasure {
    type Err = ExperimentError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "marginal" => Ok(FidelityMeasure::AtomicMarginal),
            "target_vacuum" => Ok(FidelityMeasure::TargetVacuum),
            other => Err(ExperimentError::InvalidConfig(format!(
                "unknown fidelity measure '{other}' (expected 'marginal' or 'target_vacuum')"
            ))),
        }
    }
}

impl fmt::Display for FidelityMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FidelityMeasure::AtomicMarginal => "marginal",
            FidelityMeasure::TargetVacuum => "target_vacuum",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    /// Vacuum Rabi frequency Ω/2π in Hz.
    pub omega_over_2pi: f64,
    pub delta_over_omega: f64,
    pub target: TargetItem,
    /// Fractional pulse-duration error; positive values lengthen pulses.
    pub epsilon: f64,
    pub n_max: usize,
    pub collision_model: CollisionModel,
    pub error_model: ErrorModel,
    pub fidelity_measure: FidelityMeasure,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            omega_over_2pi: 5.0e4,
            delta_over_omega: 4.0,
            target: TargetItem::ALL[3],
            epsilon: 0.0,
            n_max: 2,
            collision_model: CollisionModel::Exact,
            error_model: ErrorModel::RabiOnly,
            fidelity_measure: FidelityMeasure::AtomicMarginal,
        }
    }
}

impl ExperimentConfig {
    pub const MAX_ABS_EPSILON: f64 = 0.5;

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ExperimentError::InvalidConfig(msg));
        if !(self.omega_over_2pi.is_finite() && self.omega_over_2pi > 0.0) {
            return bad(format!("omega_over_2pi must be positive, got {}", self.omega_over_2pi));
        }
        if !(self.delta_over_omega.is_finite() && self.delta_over_omega >= 1.0) {
            return bad(format!("delta_over_omega must be at least 1, got {}", self.delta_over_omega));
        }
        if !(self.epsilon.is_finite() && self.epsilon.abs() <= Self::MAX_ABS_EPSILON) {
            return bad(format!("|epsilon| must be at most 0.5, got {}", self.epsilon));
        }
        if self.n_max < 1 {
            return bad(format!("n_max must be at least 1, got {}", self.n_max));
        }
        Ok(())
    }

    pub fn coupling(&self) -> Result<CouplingParams> {
        Ok(CouplingParams::from_hz(self.omega_over_2pi, self.delta_over_omega)?)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum AtomId {
    One,
    Two,
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub enum PulseOp {
    /// Resonant microwave pulse of area `angle` about the equatorial axis at
    /// `axis_phase` (0 = x, π/2 = y).
    Rabi { angle: f64, axis_phase: f64, atom: AtomId },
    /// Stark-induced phase shift `Z(angle)`.
    StarkZ { angle: f64, atom: AtomId },
    /// Cavity-assisted collision.
    Collision { duration: f64 },
}

/// `exp(-i α/2 (cos φ σx + sin φ σy))` on the qubit levels.
pub fn rabi_rotation(angle: f64, axis_phase: f64) -> ComplexMatrix {
    let (s, c) = (angle / 2.0).sin_cos();
    let off = C64::new(0.0, -s);
    ComplexMatrix::from_rows(&[
        [C64::new(c, 0.0), off * C64::from_polar(1.0, -axis_phase)],
        [off * C64::from_polar(1.0, axis_phase), C64::new(c, 0.0)],
    ])
}

impl PulseOp {
    /// The 2x2 qubit matrix of a single-qubit pulse, or `None` for a collision.
    pub fn qubit_matrix(&self) -> Option<(AtomId, ComplexMatrix)> {
        match *self {
            PulseOp::Rabi { angle, axis_phase, atom } => Some((atom, rabi_rotation(angle, axis_phase))),
            PulseOp::StarkZ { angle, atom } => Some((atom, z_rot(angle))),
            PulseOp::Collision { .. } => None,
        }
    }
}

const Y_AXIS: f64 = FRAC_PI_2;
const MINUS_Y_AXIS: f64 = -FRAC_PI_2;

/// Compiles the search for `target` into pulses, in time order.
///
/// Up to global phases, each single-qubit layer is built as
///
/// ```text
/// S    = R_y(π/2)
/// H    = Z(π) · R_y(-π/2)
/// P(θ) = Z(θ + π) · R_y(-π/2)
/// ```
///
/// with `R_y(-π/2)` realised as a π/2 pulse about `-y`. A duration error
/// scales pulse areas by `1 + epsilon`; under [`ErrorModel::AllAngles`]
/// the Stark phases are scaled too. Collisions are never rescaled.
pub fn compile_pulses(
    target: TargetItem,
    epsilon: f64,
    error_model: ErrorModel,
    collision_time: f64,
) -> Vec<PulseOp> {
    let area = 1.0 + epsilon;
    let stark = match error_model {
        ErrorModel::RabiOnly => 1.0,
        ErrorModel::AllAngles => 1.0 + epsilon,
    };
    let (theta1, theta2) = oracle_angles(target);
    let mut ops = Vec::with_capacity(14);

    for (atom, theta) in [(AtomId::One, theta1), (AtomId::Two, theta2)] {
        ops.push(PulseOp::Rabi { angle: FRAC_PI_2 * area, axis_phase: MINUS_Y_AXIS, atom });
        ops.push(PulseOp::StarkZ { angle: (theta + PI) * stark, atom });
    }
    ops.push(PulseOp::Collision { duration: collision_time });
    for atom in [AtomId::One, AtomId::Two] {
        ops.push(PulseOp::Rabi { angle: FRAC_PI_2 * area, axis_phase: MINUS_Y_AXIS, atom });
        ops.push(PulseOp::StarkZ { angle: PI * stark, atom });
    }
    ops.push(PulseOp::Collision { duration: collision_time });
    for atom in [AtomId::One, AtomId::Two] {
        ops.push(PulseOp::Rabi { angle: FRAC_PI_2 * area, axis_phase: Y_AXIS, atom });
    }
    ops
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Timing {
    /// Durations of the collision segments, in order.
    pub collisions: Vec<f64>,
    pub gate_time: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub target: TargetItem,
    pub fidelity: f64,
    pub populations: AtomicPopulations,
    pub timing: Timing,
    pub leaked_photon_probability: f64,
    /// Atomic populations with the cavity in vacuum.
    pub vacuum_populations: AtomicPopulations,
    pub final_state: PhysicalState,
}

/// Executes a pulse list from `|g₁g₂, 0⟩`.
pub fn execute_pulses(pulses: &[PulseOp], config: &ExperimentConfig) -> Result<RunResult> {
    config.validate()?;
    let params = config.coupling()?;
    let basis = PhysicalBasis::new(config.n_max)?;
    let gate_time = cavity::qpg_gate_time(&params)?;
    let h = cavity::hamiltonian(&params, &basis, config.collision_model);

    let mut propagators: Vec<(f64, ComplexMatrix)> = Vec::new();
    let mut collisions = Vec::new();
    let mut state = PhysicalState::ground(basis);

    for op in pulses {
        match *op {
            PulseOp::Collision { duration } => {
                if !(duration > 0.0) {
                    return Err(ExperimentError::InvalidConfig(format!(
                        "collision duration must be positive, got {duration}"
                    )));
                }
                let u = match propagators.iter().find(|(d, _)| *d == duration) {
                    Some((_, u)) => u,
                    None => {
                        propagators.push((duration, linalg::propagator(&h, duration)?));
                        &propagators.last().expect("just pushed").1
                    }
                };
                state = state.apply(u)?;
                if config.collision_model == CollisionModel::Exact {
                    state = cavity::to_atomic_frame(&state, &params, duration);
                }
                collisions.push(duration);
            }
            _ => {
                let (atom, m) = op.qubit_matrix().expect("single-qubit pulse");
                let lifted = match atom {
                    AtomId::One => basis.lift_atom1(&m)?,
                    AtomId::Two => basis.lift_atom2(&m)?,
                };
                state = state.apply(&lifted)?;
            }
        }
    }

    let populations = atomic_marginal(&state);
    let vacuum_populations = vacuum_marginal(&state);
    let fidelity = match config.fidelity_measure {
        FidelityMeasure::AtomicMarginal => populations.logical(config.target),
        FidelityMeasure::TargetVacuum => vacuum_populations.logical(config.target),
    };
    let total = collisions.iter().sum();
    Ok(RunResult {
        target: config.target,
        fidelity,
        populations,
        timing: Timing { collisions, gate_time, total },
        leaked_photon_probability: state.photon_probability(),
        vacuum_populations,
        final_state: state,
    })
}

/// Full pulse-level run of the search.
pub fn run_physical(config: &ExperimentConfig) -> Result<RunResult> {
    config.validate()?;
    let params = config.coupling()?;
    let gate_time = cavity::qpg_gate_time(&params)?;
    let pulses = compile_pulses(config.target, config.epsilon, config.error_model, gate_time);
    execute_pulses(&pulses, config)
}

/// Fidelity against pulse error, one run per `epsilon`, in input order.
pub fn sweep_error(config: &ExperimentConfig, epsilons: &[f64]) -> Result<Vec<(f64, f64)>> {
    if epsilons.is_empty() {
        return Err(ExperimentError::EmptySweep);
    }
    epsilons
        .par_iter()
        .map(|&epsilon| {
            let cfg = ExperimentConfig { epsilon, ..config.clone() };
            run_physical(&cfg).map(|r| (epsilon, r.fidelity))
        })
        .collect()
}

/// Exact-model fidelity at `ε = 0` against the ratio δ/Ω.
pub fn sweep_detuning(config: &ExperimentConfig, ratios: &[f64]) -> Result<Vec<(f64, f64)>> {
    if ratios.is_empty() {
        return Err(ExperimentError::EmptySweep);
    }
    ratios
        .par_iter()
        .map(|&ratio| {
            let cfg = ExperimentConfig {
                delta_over_omega: ratio,
                epsilon: 0.0,
                collision_model: CollisionModel::Exact,
                ..config.clone()
            };
            run_physical(&cfg).map(|r| (ratio, r.fidelity))
        })
        .collect()
}

/// Published two-gate interaction time, kept for comparison.
pub const QUOTED_TWO_GATE_TIME: f64 = 2.5e-4;
/// Published total time spent in the mode, kept for comparison.
pub const QUOTED_MODE_TIME: f64 = 1.2e-4;
/// Above this fraction of the photon lifetime the budget is flagged.
pub const LIFETIME_WARN_RATIO: f64 = 0.5;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FeasibilityFlag {
    Pass,
    Warn,
}

impl fmt::Display for FeasibilityFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeasibilityFlag::Pass => "pass",
            FeasibilityFlag::Warn => "warn",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub omega_over_2pi: f64,
    pub delta_over_omega: f64,
    pub lambda_over_2pi: f64,
    pub gate_time_s: f64,
    pub two_gate_time_s: f64,
    /// Time budget used for the velocity and lifetime checks.
    pub total_time_s: f64,
    pub interaction_length_m: f64,
    pub velocity_m_per_s: f64,
    pub photon_lifetime_s: f64,
    pub lifetime_ratio: f64,
    pub flag: FeasibilityFlag,
    pub quoted_two_gate_time_s: f64,
    pub quoted_mode_time_s: f64,
}

impl FeasibilityReport {
    /// Human-readable remarks on how the computed times compare with the
    /// quoted ones.
    pub fn notes(&self) -> Vec<String> {
        let mut notes = Vec::new();
        if (self.two_gate_time_s - self.quoted_two_gate_time_s).abs() > 1e-9 {
            notes.push(format!(
                "computed two-gate time {:.3e} s differs from the quoted {:.3e} s",
                self.two_gate_time_s, self.quoted_two_gate_time_s
            ));
        }
        if (self.two_gate_time_s - self.quoted_mode_time_s).abs() > 1e-9 {
            notes.push(format!(
                "quoted total mode interaction time {:.3e} s is inconsistent with both the computed {:.3e} s and the quoted {:.3e} s",
                self.quoted_mode_time_s, self.two_gate_time_s, self.quoted_two_gate_time_s
            ));
        }
        notes
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows = [
            ("omega/2pi [Hz]", format!("{:.6e}", self.omega_over_2pi)),
            ("delta/omega", format!("{:.6e}", self.delta_over_omega)),
            ("lambda/2pi [Hz]", format!("{:.6e}", self.lambda_over_2pi)),
            ("gate time [s]", format!("{:.6e}", self.gate_time_s)),
            ("two-gate time [s]", format!("{:.6e}", self.two_gate_time_s)),
            ("time budget [s]", format!("{:.6e}", self.total_time_s)),
            ("interaction length [m]", format!("{:.6e}", self.interaction_length_m)),
            ("atomic velocity [m/s]", format!("{:.6e}", self.velocity_m_per_s)),
            ("photon lifetime [s]", format!("{:.6e}", self.photon_lifetime_s)),
            ("budget / lifetime", format!("{:.6e}", self.lifetime_ratio)),
            ("flag", self.flag.to_string()),
        ];
        for (k, v) in rows {
            writeln!(f, "{k:<24} {v}")?;
        }
        for note in self.notes() {
            writeln!(f, "note: {note}")?;
        }
        Ok(())
    }
}

/// Timing budget and beam velocity for a collision sequence of two gates.
///
/// `total_time` overrides the two-gate time as the budget used for the
/// velocity and lifetime checks.
pub fn feasibility_report(
    omega_over_2pi: f64,
    delta_over_omega: f64,
    interaction_length: f64,
    photon_lifetime: f64,
    total_time: Option<f64>,
) -> Result<FeasibilityReport> {
    let inputs = [
        ("omega_over_2pi", omega_over_2pi),
        ("delta_over_omega", delta_over_omega),
        ("interaction_length", interaction_length),
        ("photon_lifetime", photon_lifetime),
        ("total_time", total_time.unwrap_or(1.0)),
    ];
    for (name, v) in inputs {
        if !(v.is_finite() && v > 0.0) {
            return Err(ExperimentError::InvalidConfig(format!("{name} must be positive, got {v}")));
        }
    }
    let params = CouplingParams::from_hz(omega_over_2pi, delta_over_omega)?;
    let gate_time = cavity::qpg_gate_time(&params)?;
    let two_gate_time = 2.0 * gate_time;
    let budget = total_time.unwrap_or(two_gate_time);
    let lifetime_ratio = budget / photon_lifetime;
    Ok(FeasibilityReport {
        omega_over_2pi,
        delta_over_omega,
        lambda_over_2pi: params.lambda() / (2.0 * PI),
        gate_time_s: gate_time,
        two_gate_time_s: two_gate_time,
        total_time_s: budget,
        interaction_length_m: interaction_length,
        velocity_m_per_s: interaction_length / budget,
        photon_lifetime_s: photon_lifetime,
        lifetime_ratio,
        flag: if lifetime_ratio < LIFETIME_WARN_RATIO { FeasibilityFlag::Pass } else { FeasibilityFlag::Warn },
        quoted_two_gate_time_s: QUOTED_TWO_GATE_TIME,
        quoted_mode_time_s: QUOTED_MODE_TIME,
    })
}

/// Target level pair as a label such as `e1i2`.
pub fn level_label(item: TargetItem) -> String {
    let (a1, a2) = logical_levels(item);
    format!("{a1}{a2}")
}
