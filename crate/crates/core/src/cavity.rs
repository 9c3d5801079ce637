//! Two Rydberg atoms coupled to one detuned cavity mode.
//!
//! Basis: atom 1 in `{g, e}`, atom 2 in `{g, i, e}`, photon number `0..=n_max`,
//! ordered row-major as `(atom 1, atom 2, field)`. Atom 2's `i` level does
//! not couple to the mode; its `e` level is kept because the cavity-mediated
//! exchange `|e₁g₂⟩ ↔ |g₁e₂⟩` populates it.
//!
//! Qubit 1 is `g₁ ≡ 0`, `e₁ ≡ 1`; qubit 2 is `g₂ ≡ 0`, `i₂ ≡ 1`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::gates::{LogicalState, TargetItem};
use crate::linalg::{self, tensor_all, ComplexMatrix, ComplexVector, LinalgError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CavityError {
    #[error("invalid coupling parameters: {0}")]
    InvalidCoupling(String),
    #[error("Fock cutoff must be at least 1, got {0}")]
    InvalidCutoff(usize),
    #[error("lambda must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("unknown collision model '{0}' (expected 'exact' or 'effective')")]
    InvalidModel(String),
    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, CavityError>;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Atom1Level {
    G,
    E,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Atom2Level {
    G,
    I,
    E,
}

impl Atom1Level {
    pub const ALL: [Atom1Level; 2] = [Atom1Level::G, Atom1Level::E];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_excited(self) -> bool {
        self == Atom1Level::E
    }

    pub fn from_bit(bit: bool) -> Self {
        if bit { Atom1Level::E } else { Atom1Level::G }
    }
}

impl Atom2Level {
    pub const ALL: [Atom2Level; 3] = [Atom2Level::G, Atom2Level::I, Atom2Level::E];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_excited(self) -> bool {
        self == Atom2Level::E
    }

    pub fn from_bit(bit: bool) -> Self {
        if bit { Atom2Level::I } else { Atom2Level::G }
    }
}

impl fmt::Display for Atom1Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Atom1Level::G => "g1",
            Atom1Level::E => "e1",
        })
    }
}

impl fmt::Display for Atom2Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Atom2Level::G => "g2",
            Atom2Level::I => "i2",
            Atom2Level::E => "e2",
        })
    }
}

/// Atomic level pair of a logical basis state.
pub fn logical_levels(item: TargetItem) -> (Atom1Level, Atom2Level) {
    (Atom1Level::from_bit(item.qubit1()), Atom2Level::from_bit(item.qubit2()))
}

/// Truncated product basis of the two atoms and the cavity mode.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct PhysicalBasis {
    n_max: usize,
}

impl PhysicalBasis {
    pub const ATOM1_DIM: usize = 2;
    pub const ATOM2_DIM: usize = 3;

    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(CavityError::InvalidCutoff(n_max));
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn fock_dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn dim(&self) -> usize {
        Self::ATOM1_DIM * Self::ATOM2_DIM * self.fock_dim()
    }

    pub fn subsystem_dims(&self) -> [usize; 3] {
        [Self::ATOM1_DIM, Self::ATOM2_DIM, self.fock_dim()]
    }

    pub fn index(&self, a1: Atom1Level, a2: Atom2Level, photons: usize) -> usize {
        debug_assert!(photons <= self.n_max);
        (a1.index() * Self::ATOM2_DIM + a2.index()) * self.fock_dim() + photons
    }

    /// Inverse of [`PhysicalBasis::index`].
    pub fn labels(&self, index: usize) -> (Atom1Level, Atom2Level, usize) {
        let photons = index % self.fock_dim();
        let atoms = index / self.fock_dim();
        (
            Atom1Level::ALL[atoms / Self::ATOM2_DIM],
            Atom2Level::ALL[atoms % Self::ATOM2_DIM],
            photons,
        )
    }

    /// Total excitation number `a†a + Σ_j |e_j⟩⟨e_j|` of a basis state.
    pub fn excitations(&self, index: usize) -> usize {
        let (a1, a2, n) = self.labels(index);
        n + a1.is_excited() as usize + a2.is_excited() as usize
    }

    pub fn excitation_operator(&self) -> ComplexMatrix {
        let diag: Vec<C64> = (0..self.dim())
            .map(|i| C64::new(self.excitations(i) as f64, 0.0))
            .collect();
        ComplexMatrix::from_diag(&diag)
    }

    fn field_identity(&self) -> ComplexMatrix {
        ComplexMatrix::identity(self.fock_dim())
    }

    fn annihilation(&self) -> ComplexMatrix {
        let mut a = ComplexMatrix::zeros(self.fock_dim(), self.fock_dim());
        for n in 1..self.fock_dim() {
            a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
        }
        a
    }

    /// Lifts a 2x2 operator on qubit 1 (`{g₁, e₁}`).
    pub fn lift_atom1(&self, u: &ComplexMatrix) -> Result<ComplexMatrix> {
        Ok(linalg::embed(u, &self.subsystem_dims(), 0)?)
    }

    /// Lifts a 2x2 operator on qubit 2 (`{g₂, i₂}`), identity on `e₂`.
    pub fn lift_atom2(&self, u: &ComplexMatrix) -> Result<ComplexMatrix> {
        if u.dims() != (2, 2) {
            return Err(LinalgError::DimensionMismatch { expected: 2, got: u.rows() }.into());
        }
        let mut m = ComplexMatrix::identity(Self::ATOM2_DIM);
        for i in 0..2 {
            for j in 0..2 {
                m[(i, j)] = u[(i, j)];
            }
        }
        Ok(linalg::embed(&m, &self.subsystem_dims(), 1)?)
    }
}

fn proj1(level: Atom1Level) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(2, 2);
    m[(level.index(), level.index())] = C64::new(1.0, 0.0);
    m
}

fn proj2(level: Atom2Level) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(3, 3);
    m[(level.index(), level.index())] = C64::new(1.0, 0.0);
    m
}

/// `|g⟩⟨e|` on atom 1.
fn lower1() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(2, 2);
    m[(Atom1Level::G.index(), Atom1Level::E.index())] = C64::new(1.0, 0.0);
    m
}

/// `|g⟩⟨e|` on atom 2.
fn lower2() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(3, 3);
    m[(Atom2Level::G.index(), Atom2Level::E.index())] = C64::new(1.0, 0.0);
    m
}

/// Vacuum Rabi frequency Ω, detuning δ = ω₀ − ω and the derived
/// collision rate λ = Ω²/4δ, all in rad/s.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct CouplingParams {
    omega: f64,
    delta: f64,
    lambda: f64,
}

impl CouplingParams {
    /// Below this δ/Ω ratio the effective description is considered rough.
    pub const DISPERSIVE_WARN_RATIO: f64 = 4.0;

    pub fn new(omega: f64, delta: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(CavityError::InvalidCoupling(format!("omega must be positive, got {omega}")));
        }
        if !delta.is_finite() || delta / omega < 1.0 {
            return Err(CavityError::InvalidCoupling(format!(
                "delta/omega must be at least 1, got {}",
                delta / omega
            )));
        }
        Ok(Self { omega, delta, lambda: omega * omega / (4.0 * delta) })
    }

    /// From `Ω/2π` in Hz and the ratio δ/Ω.
    pub fn from_hz(omega_over_2pi: f64, delta_over_omega: f64) -> Result<Self> {
        let omega = 2.0 * PI * omega_over_2pi;
        Self::new(omega, delta_over_omega * omega)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn detuning_ratio(&self) -> f64 {
        self.delta / self.omega
    }

    pub fn is_well_dispersive(&self) -> bool {
        self.detuning_ratio() >= Self::DISPERSIVE_WARN_RATIO
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum CollisionModel {
    Exact,
    Effective,
}

impl FromStr for CollisionModel {
    type Err = CavityError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(CollisionModel::Exact),
            "effective" => Ok(CollisionModel::Effective),
            other => Err(CavityError::InvalidModel(other.to_string())),
        }
    }
}

impl fmt::Display for CollisionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CollisionModel::Exact => "exact",
            CollisionModel::Effective => "effective",
        })
    }
}

/// Rotating-wave two-atom coupling in the frame rotating at the cavity
/// frequency:
///
/// ```text
/// H = δ Σ_j |e_j⟩⟨e_j| + (Ω/2) Σ_j (a† S_j⁻ + a S_j⁺)
/// ```
pub fn hamiltonian_exact(p: &CouplingParams, basis: &PhysicalBasis) -> ComplexMatrix {
    let one = C64::new(1.0, 0.0);
    let i1 = ComplexMatrix::identity(2);
    let i2 = ComplexMatrix::identity(3);
    let ifield = basis.field_identity();
    let a = basis.annihilation();
    let ad = a.adjoint();

    let excited = tensor_all(&[&proj1(Atom1Level::E), &i2, &ifield])
        .add(&tensor_all(&[&i1, &proj2(Atom2Level::E), &ifield]))
        .expect("same dims");

    // a† S⁻ for both atoms; the a S⁺ half is its adjoint
    let emit = tensor_all(&[&lower1(), &i2, &ad])
        .add(&tensor_all(&[&i1, &lower2(), &ad]))
        .expect("same dims");
    let coupling = emit.add(&emit.adjoint()).expect("same dims");

    excited
        .scaled(one * p.delta)
        .add(&coupling.scaled(one * (p.omega / 2.0)))
        .expect("same dims")
}

/// Atomic basis of the effective collision Hamiltonian.
pub const EFFECTIVE_BASIS: [(Atom1Level, Atom2Level); 5] = [
    (Atom1Level::G, Atom2Level::G),
    (Atom1Level::G, Atom2Level::I),
    (Atom1Level::E, Atom2Level::G),
    (Atom1Level::G, Atom2Level::E),
    (Atom1Level::E, Atom2Level::I),
];

/// Positions of the logical states `|g₁g₂⟩, |g₁i₂⟩, |e₁g₂⟩, |e₁i₂⟩` in [`EFFECTIVE_BASIS`].
pub const EFFECTIVE_LOGICAL_INDICES: [usize; 4] = [0, 1, 2, 4];

/// `λ [Σ_j |e_j⟩⟨e_j| + S₁⁺S₂⁻ + S₁⁻S₂⁺]` on [`EFFECTIVE_BASIS`].
pub fn hamiltonian_effective(p: &CouplingParams) -> ComplexMatrix {
    let lam = C64::new(p.lambda, 0.0);
    let mut h = ComplexMatrix::zeros(5, 5);
    for (k, (a1, a2)) in EFFECTIVE_BASIS.iter().enumerate() {
        let n_exc = a1.is_excited() as u8 + a2.is_excited() as u8;
        h[(k, k)] = lam * f64::from(n_exc);
    }
    h[(2, 3)] = lam;
    h[(3, 2)] = lam;
    h
}

/// The effective Hamiltonian on the full physical basis, acting trivially
/// on the field.
pub fn hamiltonian_effective_full(p: &CouplingParams, basis: &PhysicalBasis) -> ComplexMatrix {
    let lam = C64::new(p.lambda, 0.0);
    let i1 = ComplexMatrix::identity(2);
    let i2 = ComplexMatrix::identity(3);
    let ifield = basis.field_identity();

    let shift = tensor_all(&[&proj1(Atom1Level::E), &i2, &ifield])
        .add(&tensor_all(&[&i1, &proj2(Atom2Level::E), &ifield]))
        .expect("same dims");
    // S₁⁻ S₂⁺
    let hop = tensor_all(&[&lower1(), &lower2().adjoint(), &ifield]);
    let exchange = hop.add(&hop.adjoint()).expect("same dims");
    shift.add(&exchange).expect("same dims").scaled(lam)
}

pub fn hamiltonian(p: &CouplingParams, basis: &PhysicalBasis, model: CollisionModel) -> ComplexMatrix {
    match model {
        CollisionModel::Exact => hamiltonian_exact(p, basis),
        CollisionModel::Effective => hamiltonian_effective_full(p, basis),
    }
}

/// Collision time giving `λt = π`.
pub fn qpg_gate_time(p: &CouplingParams) -> Result<f64> {
    if !(p.lambda > 0.0) {
        return Err(CavityError::NonPositiveLambda(p.lambda));
    }
    Ok(PI / p.lambda)
}

/// `diag(1, 1, 1, -1)` over `|g₁g₂⟩, |g₁i₂⟩, |e₁g₂⟩, |e₁i₂⟩`.
pub fn effective_qpg_unitary() -> ComplexMatrix {
    crate::gates::i_qpg()
}

/// Normalized state over a [`PhysicalBasis`].
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalState {
    basis: PhysicalBasis,
    amps: ComplexVector,
}

impl PhysicalState {
    pub const NORM_TOL: f64 = 1e-10;

    pub fn new(basis: PhysicalBasis, amps: ComplexVector) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(LinalgError::DimensionMismatch { expected: basis.dim(), got: amps.len() }.into());
        }
        if !amps.is_normalized(Self::NORM_TOL) {
            return Err(CavityError::NotNormalized(amps.norm_sqr()));
        }
        Ok(Self { basis, amps })
    }

    pub fn basis_state(basis: PhysicalBasis, a1: Atom1Level, a2: Atom2Level, photons: usize) -> Self {
        Self { basis, amps: ComplexVector::basis(basis.dim(), basis.index(a1, a2, photons)) }
    }

    /// `|g₁g₂, 0⟩`.
    pub fn ground(basis: PhysicalBasis) -> Self {
        Self::basis_state(basis, Atom1Level::G, Atom2Level::G, 0)
    }

    /// Places a logical register state on the atomic levels with the cavity in vacuum.
    pub fn from_logical(state: &LogicalState, basis: PhysicalBasis) -> Self {
        let mut amps = ComplexVector::zeros(basis.dim());
        for item in TargetItem::ALL {
            let (a1, a2) = logical_levels(item);
            amps[basis.index(a1, a2, 0)] = state.vector()[item.index()];
        }
        Self { basis, amps }
    }

    pub fn basis(&self) -> &PhysicalBasis {
        &self.basis
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amps
    }

    pub fn amplitude(&self, a1: Atom1Level, a2: Atom2Level, photons: usize) -> C64 {
        self.amps[self.basis.index(a1, a2, photons)]
    }

    /// Applies a unitary on the full physical space.
    pub fn apply(&self, u: &ComplexMatrix) -> Result<Self> {
        Ok(Self { basis: self.basis, amps: linalg::apply(u, &self.amps)? })
    }

    pub fn mean_excitations(&self) -> f64 {
        self.amps
            .probabilities()
            .iter()
            .enumerate()
            .map(|(i, p)| p * self.basis.excitations(i) as f64)
            .sum()
    }

    /// Probability of finding at least one photon in the mode.
    pub fn photon_probability(&self) -> f64 {
        self.amps
            .probabilities()
            .iter()
            .enumerate()
            .filter(|(i, _)| self.basis.labels(*i).2 > 0)
            .map(|(_, p)| p)
            .sum()
    }

    pub fn overlap_probability(&self, other: &Self) -> Result<f64> {
        Ok(linalg::overlap_probability(&self.amps, &other.amps)?)
    }
}

/// Evolves `s` for a time `t` under the selected collision Hamiltonian.
pub fn evolve_collision(
    s: &PhysicalState,
    p: &CouplingParams,
    t: f64,
    model: CollisionModel,
) -> Result<PhysicalState> {
    let u = linalg::propagator(&hamiltonian(p, &s.basis, model), t)?;
    s.apply(&u)
}

/// Removes the free precession `e^{-iδNt}` accumulated in the cavity frame.
///
/// `N` commutes with the exact Hamiltonian, so this maps a cavity-frame
/// state onto the frame rotating at the atomic frequency, where the
/// resonant pulses are defined. It is a no-op whenever `δt` is a multiple
/// of 2π.
pub fn to_atomic_frame(s: &PhysicalState, p: &CouplingParams, t: f64) -> PhysicalState {
    let mut amps = s.amps.clone();
    for i in 0..amps.len() {
        let n = s.basis.excitations(i) as f64;
        amps[i] *= C64::from_polar(1.0, p.delta * n * t);
    }
    PhysicalState { basis: s.basis, amps }
}

/// Detection probabilities of each atomic level pair, traced over the field.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicPopulations {
    table: [[f64; 3]; 2],
}

impl AtomicPopulations {
    pub fn get(&self, a1: Atom1Level, a2: Atom2Level) -> f64 {
        self.table[a1.index()][a2.index()]
    }

    pub fn logical(&self, item: TargetItem) -> f64 {
        let (a1, a2) = logical_levels(item);
        self.get(a1, a2)
    }

    pub fn logical_table(&self) -> [f64; 4] {
        TargetItem::ALL.map(|t| self.logical(t))
    }

    pub fn total(&self) -> f64 {
        self.table.iter().flatten().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Atom1Level, Atom2Level, f64)> + '_ {
        Atom1Level::ALL
            .into_iter()
            .flat_map(|a1| Atom2Level::ALL.into_iter().map(move |a2| (a1, a2)))
            .map(|(a1, a2)| (a1, a2, self.get(a1, a2)))
    }
}

pub fn atomic_marginal(s: &PhysicalState) -> AtomicPopulations {
    let mut table = [[0.0; 3]; 2];
    for (i, p) in s.amps.probabilities().into_iter().enumerate() {
        let (a1, a2, _) = s.basis.labels(i);
        table[a1.index()][a2.index()] += p;
    }
    AtomicPopulations { table }
}

/// Like [`atomic_marginal`] but keeping only the zero-photon components.
pub fn vacuum_marginal(s: &PhysicalState) -> AtomicPopulations {
    let mut table = [[0.0; 3]; 2];
    for (i, p) in s.amps.probabilities().into_iter().enumerate() {
        let (a1, a2, n) = s.basis.labels(i);
        if n == 0 {
            table[a1.index()][a2.index()] += p;
        }
    }
    AtomicPopulations { table }
}
