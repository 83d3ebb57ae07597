//! Brute-force phase S-matrices: assemble the piecewise-constant Hamiltonian,
//! exponentiate it, and go to the interaction picture of `H0`.
//!
//! Each phase is exponentiated on the factors it actually couples and then
//! lifted with identities. [`oracle_smatrix_full`] skips that shortcut and
//! works on the whole truncated space; the two are compared in the tests.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fock::{
    annihilator, creator, engine_hamiltonian, engine_identity, engine_matrices, gell_mann,
    lift_cold_engine, lift_engine, lift_engine_warm, number_operator, oscillator_identity,
    FockCutoff, Operator, ProductSpace,
};
use crate::linalg::{eigh, exp_hermitian};
use crate::pulse::Side;
use crate::{cis, CVector, CycleParams, Error, PulseMode, Result};

/// Tolerance of the truncation guard.
pub const TRUNCATION_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    /// Engine coupled to the cold oscillator.
    ColdContact,
    /// Field on the `e ↔ f` transition.
    PulseA,
    /// Field on the `g ↔ e` transition.
    PulseB,
    /// Engine coupled to the warm oscillator.
    WarmContact,
}

impl Phase {
    pub const ALL: [Phase; 4] = [
        Phase::ColdContact,
        Phase::PulseA,
        Phase::PulseB,
        Phase::WarmContact,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Phase::ColdContact => "1",
            Phase::PulseA => "2a",
            Phase::PulseB => "2b",
            Phase::WarmContact => "3",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Phase::ALL
            .into_iter()
            .find(|p| p.label() == s.trim())
            .ok_or_else(|| Error::InvalidParameter(format!("unknown phase '{s}'")))
    }
}

/// One constant stretch of the schedule: a single coupling switched on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseSpec {
    pub phase: Phase,
    pub duration: f64,
}

impl PhaseSpec {
    pub fn new(phase: Phase, duration: f64) -> Result<Self> {
        if !(duration >= 0.0 && duration.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "phase {phase} duration {duration} must be >= 0"
            )));
        }
        Ok(PhaseSpec { phase, duration })
    }

    /// Duration taken from the cycle parameters.
    pub fn from_params(phase: Phase, params: &CycleParams) -> Self {
        let duration = match phase {
            Phase::ColdContact => params.tau1,
            Phase::PulseA => params.pulse_a_duration(),
            Phase::PulseB => params.pulse_b_duration(),
            Phase::WarmContact => params.tau3,
        };
        PhaseSpec { phase, duration }
    }
}

/// `H0 = ω1 a†a + H_gef + ω3 c†c` on the full space.
pub fn free_hamiltonian(params: &CycleParams, space: &ProductSpace) -> Operator {
    let cold = number_operator(space.cold).scale(crate::re(params.omega1));
    let warm = number_operator(space.warm).scale(crate::re(params.omega3));
    let ic = oscillator_identity(space.cold);
    let iw = oscillator_identity(space.warm);
    let ie = engine_identity();
    cold.kron(&ie).kron(&iw)
        + ic.kron(&engine_hamiltonian(params.mu, params.delta))
            .kron(&iw)
        + ic.kron(&ie).kron(&warm)
}

/// Free and driven Hamiltonians on the factors a phase acts on:
/// `cold ⊗ engine`, `engine`, or `engine ⊗ warm`.
fn active_pair(phase: Phase, params: &CycleParams, space: &ProductSpace) -> (Operator, Operator) {
    let h_gef = engine_hamiltonian(params.mu, params.delta);
    let em = engine_matrices();
    let r = crate::re;
    match phase {
        Phase::ColdContact => {
            let c = space.cold;
            let free = number_operator(c)
                .scale(r(params.omega1))
                .kron(&engine_identity())
                + oscillator_identity(c).kron(&h_gef);
            let valve = (creator(c).kron(&em.e_plus) + annihilator(c).kron(&em.e_minus))
                .scale(r(params.kappa12));
            let driven = &free + &valve;
            (free, driven)
        }
        Phase::WarmContact => {
            let w = space.warm;
            let free = h_gef.kron(&oscillator_identity(w))
                + engine_identity().kron(&number_operator(w).scale(r(params.omega3)));
            let valve = (em.f_plus.kron(&creator(w)) + em.f_minus.kron(&annihilator(w)))
                .scale(r(params.kappa23));
            let driven = &free + &valve;
            (free, driven)
        }
        Phase::PulseA => {
            let field = gell_mann(6).unwrap().scale(r(params.eps_a));
            (h_gef.clone(), &h_gef + &field)
        }
        Phase::PulseB => {
            let field = gell_mann(1).unwrap().scale(r(-params.eps_b));
            (h_gef.clone(), &h_gef + &field)
        }
    }
}

fn lift(phase: Phase, op: &Operator, space: &ProductSpace) -> Operator {
    match phase {
        Phase::ColdContact => lift_cold_engine(op, space),
        Phase::WarmContact => lift_engine_warm(op, space),
        Phase::PulseA | Phase::PulseB => lift_engine(op, space),
    }
}

fn require_hermitian(h: Operator) -> Result<Operator> {
    let defect = h.hermiticity_defect();
    if defect != 0.0 {
        return Err(Error::NotHermitian(defect));
    }
    Ok(h)
}

/// Hamiltonian active during a phase. Contacts are returned on the full
/// space; pulses only on the engine factor, the oscillators being inert.
pub fn assemble_hamiltonian(
    spec: &PhaseSpec,
    params: &CycleParams,
    space: &ProductSpace,
) -> Result<Operator> {
    let h = match spec.phase {
        Phase::PulseA | Phase::PulseB => active_pair(spec.phase, params, space).1,
        _ => full_hamiltonian(spec, params, space),
    };
    require_hermitian(h)
}

/// Hamiltonian of a phase on the full space, oscillator energies included.
pub fn full_hamiltonian(spec: &PhaseSpec, params: &CycleParams, space: &ProductSpace) -> Operator {
    let (free, driven) = active_pair(spec.phase, params, space);
    free_hamiltonian(params, space) + lift(spec.phase, &(&driven - &free), space)
}

/// `e^{-itH}`
pub fn unitary_exponential(h: &Operator, t: f64) -> Result<Operator> {
    Operator::new(exp_hermitian(h.matrix(), t)?, h.signature().to_vec())
}

/// `e^{iτH0}` of a diagonal `H0`.
fn free_phase(h0: &Operator, tau: f64) -> Operator {
    let m = h0.matrix();
    let d = CVector::from_iterator(m.nrows(), (0..m.nrows()).map(|i| cis(tau * m[(i, i)].re)));
    Operator::new(crate::CMatrix::from_diagonal(&d), h0.signature().to_vec()).unwrap()
}

/// `e^{iτH0}e^{-iτH}` restricted to the factors the phase couples.
pub fn active_smatrix(
    spec: &PhaseSpec,
    params: &CycleParams,
    space: &ProductSpace,
) -> Result<Operator> {
    let (free, driven) = active_pair(spec.phase, params, space);
    let driven = require_hermitian(driven)?;
    Ok(&free_phase(&free, spec.duration) * &unitary_exponential(&driven, spec.duration)?)
}

/// `e^{iτH0}e^{-iτH}` on the full space.
pub fn oracle_smatrix(
    spec: &PhaseSpec,
    params: &CycleParams,
    space: &ProductSpace,
) -> Result<Operator> {
    Ok(lift(
        spec.phase,
        &active_smatrix(spec, params, space)?,
        space,
    ))
}

/// Same as [`oracle_smatrix`] without using the tensor structure.
/// Closed-form S-matrix of one phase, lifted to `space`.
pub fn analytic_smatrix(phase: Phase, params: &CycleParams, space: &ProductSpace) -> Operator {
    let op = match phase {
        Phase::ColdContact => crate::pulse::s1(params, space.cold),
        Phase::PulseA => crate::pulse::s2a(params),
        Phase::PulseB => crate::pulse::s2b(params),
        Phase::WarmContact => crate::pulse::s3(params, space.warm),
    };
    lift(phase, &op, space)
}

pub fn oracle_smatrix_full(
    spec: &PhaseSpec,
    params: &CycleParams,
    space: &ProductSpace,
) -> Result<Operator> {
    let h = require_hermitian(full_hamiltonian(spec, params, space))?;
    let h0 = free_hamiltonian(params, space);
    Ok(&free_phase(&h0, spec.duration) * &unitary_exponential(&h, spec.duration)?)
}

/// Oracle phase S-matrices of one cycle with finite pulses.
#[derive(Clone, Debug)]
pub struct OraclePhases {
    pub s1: Operator,
    pub s2: Operator,
    pub s3: Operator,
}

impl OraclePhases {
    pub fn new(params: &CycleParams, space: &ProductSpace) -> Result<Self> {
        if params.pulse_mode != PulseMode::Finite {
            return Err(Error::InvalidParameter(
                "the oracle integrates finite pulses only".into(),
            ));
        }
        let s = |phase| oracle_smatrix(&PhaseSpec::from_params(phase, params), params, space);
        Ok(OraclePhases {
            s1: s(Phase::ColdContact)?,
            s2: &s(Phase::PulseB)? * &s(Phase::PulseA)?,
            s3: s(Phase::WarmContact)?,
        })
    }

    /// `S2† S3 S2 S1`
    pub fn cycle(&self) -> Operator {
        &(&(&self.s2.adjoint() * &self.s3) * &self.s2) * &self.s1
    }
}

/// Squared norm carried by basis states with more than `quanta_bound` quanta.
pub fn weight_beyond(v: &CVector, space: &ProductSpace, quanta_bound: usize) -> f64 {
    v.iter()
        .enumerate()
        .filter(|(i, _)| space.quanta(*i) > quanta_bound)
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

/// Fails if a quanta-conserving evolution moved weight across the quanta
/// bound, i.e. if the truncation influenced the result.
pub fn truncation_guard(
    before: &CVector,
    after: &CVector,
    space: &ProductSpace,
    quanta_bound: usize,
) -> Result<f64> {
    let change = (weight_beyond(after, space, quanta_bound)
        - weight_beyond(before, space, quanta_bound))
    .abs();
    if change > TRUNCATION_TOLERANCE {
        return Err(Error::TruncationEdge(change));
    }
    Ok(change)
}

/// Evolves a state through one phase with the oracle. Contact phases are
/// checked with [`truncation_guard`]; pulses never touch the oscillators.
pub fn evolve(
    spec: &PhaseSpec,
    params: &CycleParams,
    space: &ProductSpace,
    quanta_bound: usize,
    state: &CVector,
) -> Result<CVector> {
    let after = oracle_smatrix(spec, params, space)?.apply(state);
    if matches!(spec.phase, Phase::ColdContact | Phase::WarmContact) {
        truncation_guard(state, &after, space, quanta_bound)?;
    }
    Ok(after)
}

/// Eigenvalues `(E_n⁻, E_n⁺)` of the contact Hamiltonian on the `n`-th
/// dressed doublet, computed numerically.
pub fn doublet_spectrum(side: Side, n: usize, params: &CycleParams) -> Result<(f64, f64)> {
    use crate::fock::EngineLevel::{E, F, G};
    let cutoff = FockCutoff::new(n + 1);
    let space = ProductSpace::new(cutoff, cutoff);
    let (phase, idx) = match side {
        Side::Cold => (
            Phase::ColdContact,
            [n * 3 + E.index(), (n + 1) * 3 + G.index()],
        ),
        Side::Warm => (
            Phase::WarmContact,
            [
                F.index() * cutoff.dim() + n,
                E.index() * cutoff.dim() + n + 1,
            ],
        ),
    };
    let h = active_pair(phase, params, &space).1;
    let (vals, _) = eigh(h.compress(&idx).matrix())?;
    Ok((vals[0], vals[1]))
}

/// Random cycle parameters: couplings log-uniform in `[0.01, 3]`, frequencies
/// and pulse fields log-uniform in `[0.1, 5]`, durations uniform in `[0, 10]`.
pub fn random_params<R: Rng + ?Sized>(rng: &mut R, mode: PulseMode) -> CycleParams {
    let mut log_uniform = |lo: f64, hi: f64| (rng.random_range(lo.ln()..hi.ln())).exp();
    let (omega1, omega3, mu, delta) = (
        log_uniform(0.1, 5.0),
        log_uniform(0.1, 5.0),
        log_uniform(0.1, 5.0),
        log_uniform(0.1, 5.0),
    );
    let (kappa12, kappa23) = (log_uniform(0.01, 3.0), log_uniform(0.01, 3.0));
    let (eps_a, eps_b) = (log_uniform(0.1, 5.0), log_uniform(0.1, 5.0));
    let mut duration = || rng.random_range(0.0..10.0);
    CycleParams {
        omega1,
        omega3,
        mu,
        delta,
        kappa12,
        kappa23,
        eps_a,
        eps_b,
        tau1: duration(),
        tau3: duration(),
        tau_a: Some(duration()),
        tau_b: Some(duration()),
        pulse_mode: mode,
    }
}

/// Reproducible sequence of [`random_params`] draws.
pub fn parameter_draws(seed: u64, count: usize, mode: PulseMode) -> Vec<CycleParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_params(&mut rng, mode)).collect()
}
