//! Energy bookkeeping of the cycle: the cold-oscillator transfer operator
//! `D`, the work done in each phase, and the flow direction of every term of
//! the composed S-matrix.
//!
//! Two cycle orderings appear. `D` and the flow table refer to `S = S4S3S2S1`
//! (cold contact first). The work operators refer to the cycle started at the
//! pumping phase, `S' = S1S4S3S2`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::fock::{
    annihilator, creator, engine_matrices, lift_cold_engine, lift_engine, lift_engine_warm,
    number_operator, oscillator_identity, EngineLevel, Factor, FockCutoff, Operator, ProductSpace,
};
use crate::linalg::eigh;
use crate::oracle::free_hamiltonian;
use crate::pulse::{
    compose_cycle, dressed_coefficients, s_eff, CycleOrdering, LiftedPhases, Side, ValveDiagonals,
    ValveTerms, TWO_PATH_TOLERANCE,
};
use crate::{re, CMatrix, CVector, CycleParams, Error, PulseMode, Result, C64, I};

fn prod(ops: &[&Operator]) -> Operator {
    let mut it = ops.iter();
    let first = (*it.next().expect("empty product")).clone();
    it.fold(first, |acc, op| &acc * *op)
}

fn require_strong(params: &CycleParams, what: &'static str) -> Result<()> {
    if params.pulse_mode != PulseMode::StrongLimit {
        return Err(Error::RequiresStrongLimit(what));
    }
    Ok(())
}

fn check_paths(check: &'static str, a: &Operator, b: &Operator, keep: &[usize]) -> Result<f64> {
    let dev = a.compress(keep).distance(&b.compress(keep));
    if !(dev <= TWO_PATH_TOLERANCE) {
        return Err(Error::PathMismatch {
            check,
            deviation: dev,
            tolerance: TWO_PATH_TOLERANCE,
        });
    }
    Ok(dev)
}

/// Ladder operators of one oscillator with the valve diagonals in both
/// combinations.
struct Ladder {
    down: Operator,
    up: Operator,
    exchange: Operator,
    stay_plus: Operator,
    stay_minus: Operator,
}

impl Ladder {
    fn new(side: Side, params: &CycleParams, cutoff: FockCutoff) -> Self {
        let d = ValveDiagonals::new(side, params, cutoff);
        Ladder {
            down: annihilator(cutoff),
            up: creator(cutoff),
            exchange: d.exchange_op(),
            stay_plus: d.stay_plus(),
            stay_minus: d.stay_minus(),
        }
    }
}

/// Closed form of `D` on `cold ⊗ engine`.
pub fn transfer_closed_form(params: &CycleParams, cutoff: FockCutoff) -> Operator {
    let l = Ladder::new(Side::Cold, params, cutoff);
    let em = engine_matrices();
    let (a, ad, b) = (&l.down, &l.up, &l.exchange);
    prod(&[a, ad, b, b]).kron(&em.e2) - prod(&[ad, b, b, a]).kron(&em.e1)
        + prod(&[ad, a, ad, &l.stay_plus, b])
            .kron(&em.e_plus)
            .scale(I)
        - prod(&[&l.stay_minus, b, a, ad, a])
            .kron(&em.e_minus)
            .scale(I)
}

/// The one-cycle change of the cold number operator.
#[derive(Clone, Debug)]
pub struct TransferOperator {
    pub space: ProductSpace,
    pub quanta_bound: usize,
    /// `S† a†a S - a†a` on the full truncated space.
    pub operator: Operator,
    /// The closed form, lifted.
    pub closed_form: Operator,
    pub path_deviation: f64,
}

impl TransferOperator {
    /// The `2×2` block on `span{|n+1, g, k⟩, |n, e, k⟩}`.
    pub fn block(&self, n: usize, k: usize) -> Result<CMatrix> {
        if n + 1 + k > self.quanta_bound {
            return Err(Error::DimensionMismatch(format!(
                "block n = {n}, k = {k} exceeds quanta bound {}",
                self.quanta_bound
            )));
        }
        let idx = [
            self.space.index(n + 1, EngineLevel::G, k),
            self.space.index(n, EngineLevel::E, k),
        ];
        Ok(crate::fock::compress(self.operator.matrix(), &idx))
    }
}

/// Builds `D` by conjugation with the composed cycle and checks it against
/// the closed form on the retained space.
pub fn transfer_operator(params: &CycleParams, quanta_bound: usize) -> Result<TransferOperator> {
    require_strong(params, "transfer operator")?;
    let cycle = compose_cycle(params, quanta_bound)?;
    let space = cycle.space;
    let n = number_operator(space.cold).kron(&Operator::identity(vec![
        Factor::Engine,
        Factor::Oscillator(space.warm.dim()),
    ]));
    let s = &cycle.operator;
    let operator = &prod(&[&s.adjoint(), &n, s]) - &n;
    let closed_form = lift_cold_engine(&transfer_closed_form(params, space.cold), &space);
    let keep = cycle.retained();
    let path_deviation = check_paths(
        "D conjugation vs closed form",
        &operator,
        &closed_form,
        &keep,
    )?;
    let herm = operator.compress(&keep).hermiticity_defect();
    if herm > TWO_PATH_TOLERANCE {
        return Err(Error::NotHermitian(herm));
    }
    Ok(TransferOperator {
        space,
        quanta_bound,
        operator,
        closed_form,
        path_deviation,
    })
}

/// Sign of an eigenvalue branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

impl std::str::FromStr for Branch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+" | "plus" => Ok(Branch::Plus),
            "-" | "minus" => Ok(Branch::Minus),
            other => Err(Error::InvalidParameter(format!("unknown branch '{other}'"))),
        }
    }
}

/// Closed-form eigen-data of `D` on `span{|n+1, g⟩, |n, e⟩}`.
///
/// With `r = sin(τ1λ_n)sin(2θ_n)` the eigenvalues are `ρ = ±r`. The
/// eigenvector of `ρ = σr` is `(u, σ + r)` with
/// `u = sin(τ1λ_n)cos(2θ_n) - i cos(τ1λ_n)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransferSpectrumEntry {
    pub n: usize,
    pub rho_plus: f64,
    pub rho_minus: f64,
    pub u: C64,
    pub v_plus: C64,
    pub v_minus: C64,
}

impl TransferSpectrumEntry {
    pub fn rho(&self, branch: Branch) -> f64 {
        match branch {
            Branch::Plus => self.rho_plus,
            Branch::Minus => self.rho_minus,
        }
    }

    /// Unnormalized `(u, v)` exactly as given by the closed form.
    pub fn raw(&self, branch: Branch) -> [C64; 2] {
        match branch {
            Branch::Plus => [self.u, self.v_plus],
            Branch::Minus => [self.u, self.v_minus],
        }
    }

    /// Unit eigenvector. When the closed form degenerates to zero (`σr = -1`)
    /// the solution of the other eigen-equation, `(σ - r, ū)`, is used.
    pub fn normalized(&self, branch: Branch) -> [C64; 2] {
        let sigma = branch.sign();
        let r = self.rho_plus;
        let first = self.raw(branch);
        let second = [re(sigma - r), self.u.conj()];
        let n1 = first[0].norm_sqr() + first[1].norm_sqr();
        let n2 = second[0].norm_sqr() + second[1].norm_sqr();
        let (v, n) = if n1 >= n2 { (first, n1) } else { (second, n2) };
        let s = 1.0 / n.sqrt();
        [v[0] * s, v[1] * s]
    }
}

pub fn transfer_spectrum(n: usize, params: &CycleParams) -> TransferSpectrumEntry {
    let c = dressed_coefficients(Side::Cold, n, params);
    let (s, co) = (params.tau1 * c.half_splitting).sin_cos();
    let r = s * (2.0 * c.angle).sin();
    TransferSpectrumEntry {
        n,
        rho_plus: r,
        rho_minus: -r,
        u: C64::new(s * (2.0 * c.angle).cos(), -co),
        v_plus: re(1.0 + r),
        v_minus: re(-1.0 + r),
    }
}

/// `S_eff† a†a S_eff - a†a` and its comparison with `D`. Returns the
/// deviations of `S_eff†a†aS_eff` from `D + a†a` and of `D + a†a` from
/// `S†a†aS`, both on the retained space.
pub fn effective_consistency(params: &CycleParams, quanta_bound: usize) -> Result<(f64, f64)> {
    let d = transfer_operator(params, quanta_bound)?;
    let space = d.space;
    let keep = space.retained(quanta_bound);
    let se = lift_cold_engine(&s_eff(params, space.cold), &space);
    let n = lift_cold_engine(
        &number_operator(space.cold).kron(&Operator::identity(vec![Factor::Engine])),
        &space,
    );
    let via_eff = prod(&[&se.adjoint(), &n, &se]);
    let closed = &d.closed_form + &n;
    let via_cycle = &d.operator + &n;
    let first = via_eff.compress(&keep).distance(&closed.compress(&keep));
    let second = closed.compress(&keep).distance(&via_cycle.compress(&keep));
    Ok((first, second))
}

/// `2·diag(μ, δ, -μ-δ)` on the engine.
pub fn pump_work(params: &CycleParams) -> Operator {
    let (m, d) = (params.mu, params.delta);
    Operator::diagonal(&[2.0 * m, 2.0 * d, -2.0 * (m + d)], Factor::Engine)
}

/// Unit pulse-work operator on `engine ⊗ warm`; `ΔE2 + ΔE4 = 2(μ-δ)·W`.
pub fn pulse_work_unit(params: &CycleParams, cutoff: FockCutoff) -> Operator {
    let l = Ladder::new(Side::Warm, params, cutoff);
    let em = engine_matrices();
    let (c, cd, y) = (&l.down, &l.up, &l.exchange);
    em.e1.kron(&prod(&[cd, y, y, c])) - em.e2.kron(&prod(&[y, y, c, cd]))
        + em.e_plus
            .kron(&prod(&[cd, &l.stay_plus, c, cd, y]))
            .scale(I)
        - em.e_minus
            .kron(&prod(&[y, c, cd, &l.stay_minus, c]))
            .scale(I)
}

/// The four phase energy changes of the cycle started at the pumping phase,
/// each built from its definition and checked against its closed form.
///
/// `de1` is `S1†H0S1 - H0`. In the bookkeeping of `S' = S1S4S3S2` it enters
/// conjugated by `S4S3S2`.
#[derive(Clone, Debug)]
pub struct WorkOperators {
    pub space: ProductSpace,
    pub quanta_bound: usize,
    pub de1: Operator,
    pub de2: Operator,
    pub de3: Operator,
    pub de4: Operator,
    /// Definition vs closed form, per phase, on the retained space.
    pub deviations: [f64; 4],
}

impl WorkOperators {
    /// `ΔE2 + ΔE4`
    pub fn pulse_work(&self) -> Operator {
        &self.de2 + &self.de4
    }
}

pub fn work_operators(params: &CycleParams, quanta_bound: usize) -> Result<WorkOperators> {
    require_strong(params, "work operators")?;
    params.validate()?;
    let space = ProductSpace::for_quanta_bound(quanta_bound);
    let keep = space.retained(quanta_bound);
    let h0 = free_hamiltonian(params, &space);
    let ph = LiftedPhases::new(params, &space);
    let (s1, s2, s3) = (&ph.s1, &ph.s2, &ph.s3);
    let (s1d, s2d, s3d) = (s1.adjoint(), s2.adjoint(), s3.adjoint());

    let de1 = &prod(&[&s1d, &h0, s1]) - &h0;
    let de2 = &prod(&[&s2d, &h0, s2]) - &h0;
    let de3 = prod(&[&s2d, &(&prod(&[&s3d, &h0, s3]) - &h0), s2]);
    let de4 = prod(&[&s2d, &s3d, &(&prod(&[s2, &h0, &s2d]) - &h0), s3, s2]);

    let l1 = Ladder::new(Side::Cold, params, space.cold);
    let l3 = Ladder::new(Side::Warm, params, space.warm);
    let em = engine_matrices();
    let cold_detuning = re(params.cold_detuning());
    let warm_detuning = re(params.warm_detuning());
    let (a, ad, b) = (&l1.down, &l1.up, &l1.exchange);
    let closed1 = lift_cold_engine(
        &(prod(&[b, b, a, ad]).kron(&em.e2) - prod(&[ad, b, b, a]).kron(&em.e1)
            + prod(&[ad, b, a, ad, &l1.stay_plus])
                .kron(&em.e_plus)
                .scale(I)
            - prod(&[b, a, ad, &l1.stay_minus, a])
                .kron(&em.e_minus)
                .scale(I))
        .scale(cold_detuning),
        &space,
    );
    let closed2 = lift_engine(&pump_work(params), &space);
    let (c, cd, y) = (&l3.down, &l3.up, &l3.exchange);
    let closed3 = lift_engine_warm(
        &(em.e2.kron(&prod(&[c, cd, y, y]))
            - em.e1.kron(&prod(&[cd, y, y, c]))
            - em.e_plus
                .kron(&prod(&[cd, &l3.stay_plus, c, cd, y]))
                .scale(I)
            + em.e_minus
                .kron(&prod(&[&l3.stay_minus, c, cd, y, c]))
                .scale(I))
        .scale(warm_detuning),
        &space,
    );
    let unit = lift_engine_warm(&pulse_work_unit(params, space.warm), &space);
    let closed4 = &unit.scale(re(2.0 * (params.mu - params.delta))) - &closed2;

    let deviations = [
        check_paths("phase-1 work", &de1, &closed1, &keep)?,
        check_paths("phase-2 work", &de2, &closed2, &keep)?,
        check_paths("phase-3 work", &de3, &closed3, &keep)?,
        check_paths("phase-4 work", &de4, &closed4, &keep)?,
    ];
    Ok(WorkOperators {
        space,
        quanta_bound,
        de1,
        de2,
        de3,
        de4,
        deviations,
    })
}

/// Eigenvalues of `ΔE2 + ΔE4` on `span{|g, n+1⟩, |e, n⟩}` (warm index):
/// `scale · (±unit)` with `unit = sin(τ3ξ_n)sin(2φ_n)`, `scale = 2(μ - δ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PulseWorkEntry {
    pub n: usize,
    pub unit: f64,
    pub scale: f64,
}

impl PulseWorkEntry {
    /// `(+, -)` eigenvalues of the full operator.
    pub fn eigenvalues(&self) -> (f64, f64) {
        (self.scale * self.unit, -self.scale * self.unit)
    }
}

pub fn pulse_work_spectrum(n: usize, params: &CycleParams) -> PulseWorkEntry {
    let c = dressed_coefficients(Side::Warm, n, params);
    PulseWorkEntry {
        n,
        unit: c.exchange_amplitude(params.tau3),
        scale: 2.0 * (params.mu - params.delta),
    }
}

/// `2×2` block of an operator on `span{|m, g, n+1⟩, |m, e, n⟩}`.
pub fn warm_doublet_block(op: &Operator, space: &ProductSpace, m: usize, n: usize) -> CMatrix {
    let idx = [
        space.index(m, EngineLevel::G, n + 1),
        space.index(m, EngineLevel::E, n),
    ];
    crate::fock::compress(op.matrix(), &idx)
}

/// Energy balance of one pumping-first cycle for a state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bookkeeping {
    /// `⟨ψ|S'†H0S' - H0|ψ⟩`
    pub total: f64,
    /// Phase contributions in cycle order 2, 3, 4, 1.
    pub pump: f64,
    pub warm_valve: f64,
    pub pump_down: f64,
    pub cold_valve: f64,
}

impl Bookkeeping {
    pub fn residual(&self) -> f64 {
        (self.total - (self.pump + self.warm_valve + self.pump_down + self.cold_valve)).abs()
    }
}

/// Splits the energy change of `S' = S1S4S3S2` into its phases.
pub fn energy_bookkeeping(
    params: &CycleParams,
    work: &WorkOperators,
    psi: &CVector,
) -> Result<Bookkeeping> {
    if psi.len() != work.space.dim() {
        return Err(Error::DimensionMismatch(
            "state does not match work operators".into(),
        ));
    }
    let space = &work.space;
    let ph = LiftedPhases::new(params, space);
    let s = ph.cycle(CycleOrdering::PumpFirst);
    let u3 = prod(&[&ph.s4, &ph.s3, &ph.s2]);
    let h0 = free_hamiltonian(params, space);
    let total_op = &prod(&[&s.adjoint(), &h0, &s]) - &h0;
    let ev = |op: &Operator| psi.dotc(&op.apply(psi)).re;
    Ok(Bookkeeping {
        total: ev(&total_op),
        pump: ev(&work.de2),
        warm_valve: ev(&work.de3),
        pump_down: ev(&work.de4),
        cold_valve: ev(&prod(&[&u3.adjoint(), &work.de1, &u3])),
    })
}

/// Direction of energy flow across one link of the chain
/// `cold HO - engine - warm HO`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flow {
    None,
    TowardEngine,
    AwayFromEngine,
}

/// One row of the flow table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FlowLabel {
    pub term: &'static str,
    pub cold: Flow,
    pub warm: Flow,
}

impl FlowLabel {
    /// Arrows left to right: cold HO, engine, warm HO.
    pub fn arrows(&self) -> (&'static str, &'static str) {
        let cold = match self.cold {
            Flow::None => "---",
            Flow::TowardEngine => "→",
            Flow::AwayFromEngine => "←",
        };
        let warm = match self.warm {
            Flow::None => "---",
            Flow::TowardEngine => "←",
            Flow::AwayFromEngine => "→",
        };
        (cold, warm)
    }
}

impl fmt::Display for FlowLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (c, w) = self.arrows();
        write!(f, "{:<40} {:^5} {:^5}", self.term, c, w)
    }
}

pub const FLOW_TERMS: [&str; 8] = [
    "a†(A−iC)a ⊗ E1 ⊗ c†(Z−iV)c",
    "a†B ⊗ E+ ⊗ c†(Z−iV)c",
    "Ba ⊗ E1 ⊗ c†Y",
    "aa†(A+iC) ⊗ E+ ⊗ c†Y",
    "a†(A−iC)a ⊗ E− ⊗ Yc",
    "a†B ⊗ E2 ⊗ Yc",
    "Ba ⊗ E− ⊗ cc†(Z+iV)",
    "aa†(A+iC) ⊗ E2 ⊗ cc†(Z+iV)",
];

/// Reference arrow assignments.
pub fn reference_flows() -> [FlowLabel; 8] {
    use Flow::{AwayFromEngine as Away, None as No, TowardEngine as Toward};
    let arrows = [
        (No, No),
        (Away, No),
        (Toward, Away),
        (No, Away),
        (No, Toward),
        (Away, Toward),
        (Toward, No),
        (No, No),
    ];
    std::array::from_fn(|i| FlowLabel {
        term: FLOW_TERMS[i],
        cold: arrows[i].0,
        warm: arrows[i].1,
    })
}

/// Shift `s` with `[n, M] = sM`, or `None` if `M` is not a ladder monomial.
fn number_shift(n: &Operator, m: &Operator) -> Option<i32> {
    let comm = n.commutator(m);
    let norm = m.matrix().norm_squared();
    if norm == 0.0 {
        return None;
    }
    let s = comm.matrix().dotc(m.matrix()).re / norm;
    let rounded = s.round();
    let residual = (comm.matrix() - m.matrix() * re(rounded)).norm();
    (residual <= 1e-12 * norm.sqrt()).then_some(rounded as i32)
}

fn cold_flow(shift: i32) -> Option<Flow> {
    match shift {
        0 => Some(Flow::None),
        -1 => Some(Flow::TowardEngine),
        1 => Some(Flow::AwayFromEngine),
        _ => None,
    }
}

fn warm_flow(shift: i32) -> Option<Flow> {
    match shift {
        0 => Some(Flow::None),
        -1 => Some(Flow::TowardEngine),
        1 => Some(Flow::AwayFromEngine),
        _ => None,
    }
}

/// Classifies the eight monomials of the composed S-matrix by how they shift
/// the two oscillator number operators and checks the result against
/// [`reference_flows`].
pub fn classify_flows() -> Result<Vec<FlowLabel>> {
    let params = CycleParams {
        omega1: 1.7,
        omega3: 2.3,
        mu: 0.6,
        delta: 0.45,
        kappa12: 0.37,
        kappa23: 0.52,
        tau1: 1.3,
        tau3: 0.9,
        ..Default::default()
    };
    let cutoff = FockCutoff::new(4);
    let cold = ValveTerms::new(Side::Cold, &params, cutoff);
    let warm = ValveTerms::new(Side::Warm, &params, cutoff);
    let em = engine_matrices();
    let monomials = [
        (&cold.lowered_stay, &em.e1, &warm.lowered_stay),
        (&cold.raise_exchange, &em.e_plus, &warm.lowered_stay),
        (&cold.lower_exchange, &em.e1, &warm.raise_exchange),
        (&cold.raised_stay, &em.e_plus, &warm.raise_exchange),
        (&cold.lowered_stay, &em.e_minus, &warm.lower_exchange),
        (&cold.raise_exchange, &em.e2, &warm.lower_exchange),
        (&cold.lower_exchange, &em.e_minus, &warm.raised_stay),
        (&cold.raised_stay, &em.e2, &warm.raised_stay),
    ];
    let ie = Operator::identity(vec![Factor::Engine]);
    let id = oscillator_identity(cutoff);
    let n_cold = number_operator(cutoff).kron(&ie).kron(&id);
    let n_warm = id.kron(&ie).kron(&number_operator(cutoff));
    let reference = reference_flows();
    let mut out = Vec::with_capacity(8);
    for (i, (c, e, w)) in monomials.into_iter().enumerate() {
        let m = c.kron(e).kron(w);
        let shift = |n: &Operator| {
            number_shift(n, &m).ok_or_else(|| {
                Error::FlowMismatch(format!("{} is not a ladder monomial", FLOW_TERMS[i]))
            })
        };
        let label = FlowLabel {
            term: FLOW_TERMS[i],
            cold: cold_flow(shift(&n_cold)?).ok_or_else(|| {
                Error::FlowMismatch(format!("{}: cold shift out of range", FLOW_TERMS[i]))
            })?,
            warm: warm_flow(shift(&n_warm)?).ok_or_else(|| {
                Error::FlowMismatch(format!("{}: warm shift out of range", FLOW_TERMS[i]))
            })?,
        };
        if label != reference[i] {
            return Err(Error::FlowMismatch(format!(
                "{}: computed {:?}/{:?}, table {:?}/{:?}",
                label.term, label.cold, label.warm, reference[i].cold, reference[i].warm
            )));
        }
        out.push(label);
    }
    Ok(out)
}

/// `S_w† c†c S_w - c†c` for the cycle started at the warm contact,
/// `S_w = S2S1S4S3`.
pub fn warm_transfer_operator(params: &CycleParams, quanta_bound: usize) -> Result<Operator> {
    require_strong(params, "warm transfer operator")?;
    params.validate()?;
    let space = ProductSpace::for_quanta_bound(quanta_bound);
    let s = LiftedPhases::new(params, &space).cycle(CycleOrdering::WarmFirst);
    let n = lift_engine_warm(
        &Operator::identity(vec![Factor::Engine]).kron(&number_operator(space.warm)),
        &space,
    );
    Ok(&prod(&[&s.adjoint(), &n, &s]) - &n)
}

/// Where one cycle sends a negative-eigenvalue eigenvector of `D`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NegativeSubspaceReport {
    pub n: usize,
    pub rho: f64,
    /// Weights of `Sψ` on the negative, zero and positive eigenspaces of `D`.
    pub negative: f64,
    pub kernel: f64,
    pub positive: f64,
    /// `⟨Sψ|D|Sψ⟩`
    pub next_transfer: f64,
}

/// Starts from the `ρ < 0` eigenvector of block `n` (warm oscillator empty)
/// and decomposes its image under `S` in the eigenbasis of `D`.
pub fn negative_subspace_experiment(
    params: &CycleParams,
    n: usize,
    quanta_bound: usize,
) -> Result<NegativeSubspaceReport> {
    let d = transfer_operator(params, quanta_bound)?;
    if n + 1 > quanta_bound {
        return Err(Error::DimensionMismatch(format!(
            "block {n} needs quanta bound > {n}"
        )));
    }
    let entry = transfer_spectrum(n, params);
    let branch = if entry.rho_plus <= 0.0 {
        Branch::Plus
    } else {
        Branch::Minus
    };
    let [u, v] = entry.normalized(branch);
    let space = d.space;
    let mut psi = CVector::zeros(space.dim());
    psi[space.index(n + 1, EngineLevel::G, 0)] = u;
    psi[space.index(n, EngineLevel::E, 0)] = v;

    let cycle = compose_cycle(params, quanta_bound)?;
    let keep = cycle.retained();
    let image = cycle.operator.apply(&psi);
    let d_ret = crate::fock::compress(d.operator.matrix(), &keep);
    let d_ret = (&d_ret + d_ret.adjoint()) * re(0.5);
    let (vals, vecs) = eigh(&d_ret)?;
    let img = CVector::from_iterator(keep.len(), keep.iter().map(|&i| image[i]));
    let coeffs = vecs.adjoint() * &img;
    let (mut neg, mut zero, mut pos) = (0.0, 0.0, 0.0);
    for (val, c) in vals.iter().zip(coeffs.iter()) {
        let w = c.norm_sqr();
        if *val < -1e-9 {
            neg += w;
        } else if *val > 1e-9 {
            pos += w;
        } else {
            zero += w;
        }
    }
    Ok(NegativeSubspaceReport {
        n,
        rho: entry.rho(branch),
        negative: neg,
        kernel: zero,
        positive: pos,
        next_transfer: img.dotc(&(&d_ret * &img)).re,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn generic() -> CycleParams {
        CycleParams {
            omega1: 1.7,
            omega3: 2.3,
            mu: 0.6,
            delta: 0.45,
            kappa12: 0.37,
            kappa23: 0.52,
            tau1: 1.3,
            tau3: 0.9,
            ..Default::default()
        }
    }

    #[test]
    fn transfer_two_ways() {
        let d = transfer_operator(&generic(), 6).unwrap();
        assert!(d.path_deviation < 1e-12);
        let g0 = d.space.basis_vector(0, EngineLevel::G, 0);
        assert!(d.operator.apply(&g0).norm() < 1e-13);
        let g0w = d.space.basis_vector(0, EngineLevel::G, 3);
        assert!(d.closed_form.apply(&g0w).norm() < 1e-13);
        let finite = generic().with_mode(PulseMode::Finite);
        assert!(matches!(
            transfer_operator(&finite, 3),
            Err(Error::RequiresStrongLimit(_))
        ));
    }

    #[test]
    fn transfer_blocks_match_closed_form() {
        let p = generic();
        let d = transfer_operator(&p, 6).unwrap();
        for n in 0..6 {
            let blk = d.block(n, 0).unwrap();
            let (vals, vecs) = eigh(&blk).unwrap();
            let e = transfer_spectrum(n, &p);
            let r = e.rho_plus.abs();
            assert!((vals[0] + r).abs() < 1e-12 && (vals[1] - r).abs() < 1e-12);
            assert!(blk.trace().norm() < 1e-12);
            for branch in [Branch::Plus, Branch::Minus] {
                let [u, v] = e.normalized(branch);
                let x = CVector::from_vec(vec![u, v]);
                assert!((&blk * &x - &x * re(e.rho(branch))).norm() < 1e-12);
                let col = if (e.rho(branch) < 0.0) == (vals[0] < vals[1]) {
                    0
                } else {
                    1
                };
                assert!((vecs.column(col).dotc(&x).norm() - 1.0).abs() < 1e-10);
                let [ru, rv] = e.raw(branch);
                let raw = CVector::from_vec(vec![ru, rv]);
                assert!((&blk * &raw - &raw * re(e.rho(branch))).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn resonant_transfer() {
        let p = CycleParams {
            omega1: 2.0,
            mu: 1.0,
            kappa12: 1.0,
            tau1: FRAC_PI_2,
            ..Default::default()
        };
        let e = transfer_spectrum(0, &p);
        assert!((e.rho_plus.abs() - 1.0).abs() < 1e-15);
        // one branch of the closed-form vector vanishes; the fallback does not
        let x = e.normalized(Branch::Minus);
        assert!(((x[0].norm_sqr() + x[1].norm_sqr()) - 1.0).abs() < 1e-15);
        let blk = transfer_operator(&p, 2).unwrap().block(0, 0).unwrap();
        let xv = CVector::from_vec(x.to_vec());
        assert!((&blk * &xv - &xv * re(e.rho_minus)).norm() < 1e-12);

        let still = CycleParams {
            tau1: 0.0,
            ..generic()
        };
        for n in 0..5 {
            assert_eq!(transfer_spectrum(n, &still).rho_plus, 0.0);
        }
    }

    #[test]
    fn effective_matrix_chain() {
        let (a, b) = effective_consistency(&generic(), 5).unwrap();
        assert!(a < 1e-12 && b < 1e-12, "{a} {b}");
    }

    #[test]
    fn work_closed_forms() {
        let p = generic();
        let w = work_operators(&p, 5).unwrap();
        assert!(
            w.deviations.iter().all(|d| *d < 1e-11),
            "{:?}",
            w.deviations
        );
        let p = CycleParams {
            mu: 1.0,
            delta: 0.5,
            ..generic()
        };
        let m = pump_work(&p);
        assert_eq!(m.matrix()[(0, 0)].re, 2.0);
        assert_eq!(m.matrix()[(1, 1)].re, 1.0);
        assert_eq!(m.matrix()[(2, 2)].re, -3.0);
    }

    #[test]
    fn resonant_valves_cost_nothing() {
        let p = CycleParams {
            omega1: 1.2,
            omega3: 0.9,
            ..generic()
        };
        let w = work_operators(&p, 4).unwrap();
        let keep = w.space.retained(4);
        assert!(w.de1.compress(&keep).matrix().norm() < 1e-12);
        assert!(w.de3.compress(&keep).matrix().norm() < 1e-12);

        let p = CycleParams {
            delta: 0.6,
            ..generic()
        };
        let w = work_operators(&p, 4).unwrap();
        assert!((&w.de4 + &w.de2).compress(&keep).matrix().norm() < 1e-12);
    }

    #[test]
    fn pulse_work_pairs() {
        let p = generic();
        let w = work_operators(&p, 5).unwrap();
        let sum = w.pulse_work();
        for n in 0..4 {
            let e = pulse_work_spectrum(n, &p);
            let (vals, _) = eigh(&warm_doublet_block(&sum, &w.space, 0, n)).unwrap();
            let (hi, lo) = e.eigenvalues();
            let (hi, lo) = (hi.max(lo), hi.min(lo));
            assert!((vals[0] - lo).abs() < 1e-12 && (vals[1] - hi).abs() < 1e-12);
            assert!((vals[0] + vals[1]).abs() < 1e-12);
        }
        let res = CycleParams {
            omega3: 1.0,
            delta: 0.5,
            kappa23: 1.0,
            tau3: FRAC_PI_2,
            ..generic()
        };
        assert!((pulse_work_spectrum(0, &res).unit.abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bookkeeping_adds_up() {
        let p = generic();
        let w = work_operators(&p, 4).unwrap();
        let keep = w.space.retained(4);
        let mut psi = CVector::zeros(w.space.dim());
        for (j, &i) in keep.iter().enumerate() {
            psi[i] = C64::new((j as f64 * 0.7).sin(), (j as f64 * 1.3).cos());
        }
        let psi = psi.normalize();
        let b = energy_bookkeeping(&p, &w, &psi).unwrap();
        assert!(b.residual() < 1e-10, "{b:?}");
    }

    #[test]
    fn table_one() {
        let flows = classify_flows().unwrap();
        assert_eq!(flows.as_slice(), reference_flows().as_slice());
        assert_eq!(flows[2].arrows(), ("→", "→"));
        assert_eq!(flows[5].arrows(), ("←", "←"));
        assert_eq!(flows[0].arrows(), ("---", "---"));
    }

    #[test]
    fn warm_ordering_and_negative_subspace() {
        let p = generic();
        let dw = warm_transfer_operator(&p, 4).unwrap();
        let keep = ProductSpace::for_quanta_bound(4).retained(4);
        assert!(dw.compress(&keep).hermiticity_defect() < 1e-12);
        let r = negative_subspace_experiment(&p, 1, 5).unwrap();
        assert!(r.rho <= 0.0);
        assert!((r.negative + r.kernel + r.positive - 1.0).abs() < 1e-10);
    }
}
