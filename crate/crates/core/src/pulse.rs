//! Analytic S-matrices of the four cycle phases and their composition.
//!
//! Sign convention: the valves are `+κ12(a†E₊ + aE₋)` and `+κ23(F₊c† + F₋c)`.
//! Mixing angles `θ_n`, `φ_n` are reported as the positive angles
//! `tan θ_n = 2κ√(n+1)/(2λ_n + ω - 2μ)`; with the `+κ` valves the exchange
//! diagonals `B` and `Y` then carry a minus sign, which the evolution oracle
//! confirms. Every other closed form is used exactly as derived.

use std::f64::consts::FRAC_PI_2;

use crate::fock::{
    annihilator, compress, creator, engine_matrices, lift_cold_engine, lift_engine,
    lift_engine_warm, oscillator_identity, vacuum_projector, Factor, FockCutoff, Operator,
    ProductSpace,
};
use crate::{cis, re, CMatrix, CycleParams, Error, PulseMode, Result, C64, I};

/// Tolerance of the built-in two-path self-checks.
pub const TWO_PATH_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Cold,
    Warm,
}

/// Dressed-doublet data of one Fock index: half splitting (`λ_n` or `ξ_n`)
/// and mixing angle (`θ_n` or `φ_n`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DressedCoefficients {
    pub half_splitting: f64,
    pub angle: f64,
}

impl DressedCoefficients {
    pub fn new(coupling: f64, detuning: f64, n: usize) -> Self {
        let g = 2.0 * coupling * ((n + 1) as f64).sqrt();
        let half_splitting = 0.5 * g.hypot(detuning);
        let denom = 2.0 * half_splitting + detuning;
        // denom vanishes only for zero coupling below resonance
        let angle = if denom == 0.0 {
            FRAC_PI_2
        } else {
            (g / denom).atan()
        };
        DressedCoefficients {
            half_splitting,
            angle,
        }
    }

    /// `sin(τλ)·sin 2θ`, the exchange amplitude after a contact of length `tau`.
    pub fn exchange_amplitude(&self, tau: f64) -> f64 {
        (tau * self.half_splitting).sin() * (2.0 * self.angle).sin()
    }
}

fn side_constants(side: Side, params: &CycleParams) -> (f64, f64, f64) {
    match side {
        Side::Cold => (params.kappa12, params.cold_detuning(), params.tau1),
        Side::Warm => (params.kappa23, params.warm_detuning(), params.tau3),
    }
}

pub fn dressed_coefficients(side: Side, n: usize, params: &CycleParams) -> DressedCoefficients {
    let (k, d, _) = side_constants(side, params);
    DressedCoefficients::new(k, d, n)
}

/// `(E_n⁻, E_n⁺)` of the valve Hamiltonian restricted to the `n`-th doublet:
/// `span{|n,e⟩, |n+1,g⟩}` (cold) or `span{|f,n⟩, |e,n+1⟩}` (warm).
pub fn dressed_energies(side: Side, n: usize, params: &CycleParams) -> (f64, f64) {
    let c = dressed_coefficients(side, n, params);
    let centre = match side {
        Side::Cold => (n as f64 + 0.5) * params.omega1,
        Side::Warm => (n as f64 + 0.5) * params.omega3 + params.mu + params.delta,
    };
    (centre - c.half_splitting, centre + c.half_splitting)
}

/// The three Fock-diagonal operators of a valve S-matrix (`A, B, C` on the
/// cold side, `Z, Y, V` on the warm side).
#[derive(Clone, Debug, PartialEq)]
pub struct ValveDiagonals {
    /// `cos(τλ_n)/(n+1)`
    pub stay_cos: Vec<f64>,
    /// `sin(τλ_n)cos(2θ_n)/(n+1)`
    pub stay_sin: Vec<f64>,
    /// `-sin(τλ_n)sin(2θ_n)/√(n+1)`
    pub exchange: Vec<f64>,
}

impl ValveDiagonals {
    pub fn new(side: Side, params: &CycleParams, cutoff: FockCutoff) -> Self {
        let (k, d, tau) = side_constants(side, params);
        let mut out = ValveDiagonals {
            stay_cos: Vec::with_capacity(cutoff.dim()),
            stay_sin: Vec::with_capacity(cutoff.dim()),
            exchange: Vec::with_capacity(cutoff.dim()),
        };
        for n in 0..cutoff.dim() {
            let c = DressedCoefficients::new(k, d, n);
            let np1 = (n + 1) as f64;
            let (s, co) = (tau * c.half_splitting).sin_cos();
            out.stay_cos.push(co / np1);
            out.stay_sin.push(s * (2.0 * c.angle).cos() / np1);
            out.exchange.push(-s * (2.0 * c.angle).sin() / np1.sqrt());
        }
        out
    }

    fn factor(&self) -> Factor {
        Factor::Oscillator(self.stay_cos.len())
    }

    pub fn cos_op(&self) -> Operator {
        Operator::diagonal(&self.stay_cos, self.factor())
    }

    pub fn sin_op(&self) -> Operator {
        Operator::diagonal(&self.stay_sin, self.factor())
    }

    pub fn exchange_op(&self) -> Operator {
        Operator::diagonal(&self.exchange, self.factor())
    }

    /// `A - iC` (or `Z - iV`)
    pub fn stay_minus(&self) -> Operator {
        self.cos_op() - self.sin_op().scale(I)
    }

    /// `A + iC` (or `Z + iV`)
    pub fn stay_plus(&self) -> Operator {
        self.cos_op() + self.sin_op().scale(I)
    }
}

/// Ladder-dressed pieces shared by S1, S3, the composed S and S_eff.
pub(crate) struct ValveTerms {
    /// `b†(A - iC)b`
    pub(crate) lowered_stay: Operator,
    /// `bb†(A + iC)`
    pub(crate) raised_stay: Operator,
    /// `b†B`
    pub(crate) raise_exchange: Operator,
    /// `Bb`
    pub(crate) lower_exchange: Operator,
    pub(crate) vacuum: Operator,
    pub(crate) identity: Operator,
}

impl ValveTerms {
    pub(crate) fn new(side: Side, params: &CycleParams, cutoff: FockCutoff) -> Self {
        let diag = ValveDiagonals::new(side, params, cutoff);
        let b = annihilator(cutoff);
        let bd = creator(cutoff);
        ValveTerms {
            lowered_stay: &(&bd * &diag.stay_minus()) * &b,
            raised_stay: &(&b * &bd) * &diag.stay_plus(),
            raise_exchange: &bd * &diag.exchange_op(),
            lower_exchange: &diag.exchange_op() * &b,
            vacuum: vacuum_projector(cutoff),
            identity: oscillator_identity(cutoff),
        }
    }
}

/// Phase 1: engine in contact with the cold oscillator for `τ1`.
/// Acts on `cold ⊗ engine`.
pub fn s1(params: &CycleParams, cutoff: FockCutoff) -> Operator {
    let t = ValveTerms::new(Side::Cold, params, cutoff);
    let em = engine_matrices();
    let p = cis(0.5 * params.tau1 * params.cold_detuning());
    (t.lowered_stay.kron(&em.e1) + t.raise_exchange.kron(&em.e_plus).scale(I)).scale(p)
        + (t.lower_exchange.kron(&em.e_minus).scale(I) + t.raised_stay.kron(&em.e2)).scale(p.conj())
        + t.vacuum.kron(&em.e1)
        + t.identity.kron(&em.e3)
}

/// Phase 3: engine in contact with the warm oscillator for `τ3`.
/// Acts on `engine ⊗ warm`.
pub fn s3(params: &CycleParams, cutoff: FockCutoff) -> Operator {
    let t = ValveTerms::new(Side::Warm, params, cutoff);
    let em = engine_matrices();
    let q = cis(0.5 * params.tau3 * params.warm_detuning());
    em.e1.kron(&t.identity)
        + em.e2.kron(&t.vacuum)
        + (em.e2.kron(&t.lowered_stay) + em.f_plus.kron(&t.raise_exchange).scale(I)).scale(q)
        + (em.f_minus.kron(&t.lower_exchange).scale(I) + em.e3.kron(&t.raised_stay)).scale(q.conj())
}

fn engine3(entries: [[C64; 3]; 3]) -> Operator {
    Operator::from_parts(
        CMatrix::from_fn(3, 3, |i, j| entries[i][j]),
        vec![Factor::Engine],
    )
}

const Z0: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

pub fn s2a_strong_limit() -> Operator {
    engine3([[ONE, Z0, Z0], [Z0, Z0, -I], [Z0, -I, Z0]])
}

pub fn s2b_strong_limit() -> Operator {
    engine3([[Z0, I, Z0], [I, Z0, Z0], [Z0, Z0, ONE]])
}

pub fn s2_strong_limit() -> Operator {
    engine3([[Z0, Z0, ONE], [I, Z0, Z0], [Z0, -I, Z0]])
}

/// `[cos(τw) - i sin(τw)σ3]·[cos(τ/T) + iT sin(τ/T)(w σ3 + x σ1)]`, the
/// interaction-picture propagator of a square pulse on a two-level pair
/// split by `2w` and driven with `x`.
fn pulse_pair(w: f64, x: f64, tau: f64) -> [[C64; 2]; 2] {
    let period = 1.0 / w.hypot(x);
    let (sw, cw) = (tau * w).sin_cos();
    let (sr, cr) = (tau / period).sin_cos();
    let free = [[C64::new(cw, -sw), Z0], [Z0, C64::new(cw, sw)]];
    let it = I * (period * sr);
    let rot = [[re(cr) + it * w, it * x], [it * x, re(cr) - it * w]];
    let mut out = [[Z0; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = free[i][0] * rot[0][j] + free[i][1] * rot[1][j];
        }
    }
    out
}

/// First pulse of phase 2, inverting `e ↔ f`.
pub fn s2a(params: &CycleParams) -> Operator {
    match params.pulse_mode {
        PulseMode::StrongLimit => s2a_strong_limit(),
        PulseMode::Finite => {
            let m = pulse_pair(params.delta, -params.eps_a, params.pulse_a_duration());
            engine3([
                [ONE, Z0, Z0],
                [Z0, m[0][0], m[0][1]],
                [Z0, m[1][0], m[1][1]],
            ])
        }
    }
}

/// Second pulse of phase 2, inverting `g ↔ e`.
pub fn s2b(params: &CycleParams) -> Operator {
    match params.pulse_mode {
        PulseMode::StrongLimit => s2b_strong_limit(),
        PulseMode::Finite => {
            let m = pulse_pair(params.mu, params.eps_b, params.pulse_b_duration());
            engine3([
                [m[0][0], m[0][1], Z0],
                [m[1][0], m[1][1], Z0],
                [Z0, Z0, ONE],
            ])
        }
    }
}

/// Pumping up: `S2 = S2b·S2a`.
pub fn s2(params: &CycleParams) -> Operator {
    match params.pulse_mode {
        PulseMode::StrongLimit => s2_strong_limit(),
        PulseMode::Finite => &s2b(params) * &s2a(params),
    }
}

/// Pumping down, the inverse of phase 2.
pub fn s4(params: &CycleParams) -> Operator {
    s2(params).adjoint()
}

/// Largest entrywise deviation of the finite quarter-period `S2` from its
/// strong limit, with both fields scaled by `10^k` for `k = 0..decades`.
/// Fields start at no less than `10(|μ| + |δ|)` so the sweep begins in the
/// large-field regime.
pub fn strong_limit_sweep(params: &CycleParams, decades: usize) -> Vec<(f64, f64)> {
    let limit = s2_strong_limit();
    let floor = 10.0 * (params.mu.abs() + params.delta.abs());
    let (eps_a, eps_b) = (params.eps_a.max(floor), params.eps_b.max(floor));
    (0..decades)
        .map(|k| {
            let scale = 10f64.powi(k as i32);
            let p = CycleParams {
                eps_a: eps_a * scale,
                eps_b: eps_b * scale,
                tau_a: None,
                tau_b: None,
                pulse_mode: PulseMode::Finite,
                ..*params
            };
            let diff = s2(&p).matrix() - limit.matrix();
            (scale, diff.iter().map(|z| z.norm()).fold(0.0, f64::max))
        })
        .collect()
}

/// Closed-form finite `S2a` for a quarter-period pulse.
pub fn quarter_period_s2a(params: &CycleParams) -> Operator {
    let (t, d, e) = (params.period_a(), params.delta, params.eps_a);
    let ph = cis(-params.pulse_a_duration() * d);
    let it = I * t;
    engine3([
        [ONE, Z0, Z0],
        [Z0, it * d * ph, -it * e * ph],
        [Z0, -it * e * ph.conj(), -it * d * ph.conj()],
    ])
}

/// Closed-form finite `S2b` for a quarter-period pulse.
pub fn quarter_period_s2b(params: &CycleParams) -> Operator {
    let (t, m, e) = (params.period_b(), params.mu, params.eps_b);
    let ph = cis(-params.pulse_b_duration() * m);
    let it = I * t;
    engine3([
        [it * m * ph, it * e * ph, Z0],
        [it * e * ph.conj(), -it * m * ph.conj(), Z0],
        [Z0, Z0, ONE],
    ])
}

/// Closed-form finite `S2` for quarter-period pulses. The `(f, f)` phase is
/// `e^{+iτ_a δ}`, as the product `S2b·S2a` requires.
pub fn quarter_period_s2(params: &CycleParams) -> Operator {
    let (ta, tb) = (params.period_a(), params.period_b());
    let (ua, ub) = (params.pulse_a_duration(), params.pulse_b_duration());
    let (m, d, ea, eb) = (params.mu, params.delta, params.eps_a, params.eps_b);
    let r = |x: f64| re(x);
    engine3([
        [
            I * tb * m * cis(-ub * m),
            r(-ta * tb * eb * d) * cis(-ua * d - ub * m),
            r(ta * tb * ea * eb) * cis(-ua * d - ub * m),
        ],
        [
            I * tb * eb * cis(ub * m),
            r(ta * tb * m * d) * cis(-ua * d + ub * m),
            r(-ta * tb * m * ea) * cis(-ua * d + ub * m),
        ],
        [Z0, -I * ta * ea * cis(ua * d), -I * ta * d * cis(ua * d)],
    ])
}

/// Order in which the four phases are applied within one cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CycleOrdering {
    /// `S4 S3 S2 S1`: cold contact first (transfer analysis).
    ColdFirst,
    /// `S1 S4 S3 S2`: pumping first (work accounting).
    PumpFirst,
    /// `S2 S1 S4 S3`: warm contact first.
    WarmFirst,
}

/// The four phase S-matrices lifted to the full space.
#[derive(Clone, Debug)]
pub struct LiftedPhases {
    pub s1: Operator,
    pub s2: Operator,
    pub s3: Operator,
    pub s4: Operator,
}

impl LiftedPhases {
    pub fn new(params: &CycleParams, space: &ProductSpace) -> Self {
        let s2 = lift_engine(&s2(params), space);
        LiftedPhases {
            s1: lift_cold_engine(&s1(params, space.cold), space),
            s4: s2.adjoint(),
            s2,
            s3: lift_engine_warm(&s3(params, space.warm), space),
        }
    }

    pub fn cycle(&self, ordering: CycleOrdering) -> Operator {
        let LiftedPhases { s1, s2, s3, s4 } = self;
        match ordering {
            CycleOrdering::ColdFirst => &(&(s4 * s3) * s2) * s1,
            CycleOrdering::PumpFirst => &(&(s1 * s4) * s3) * s2,
            CycleOrdering::WarmFirst => &(&(s2 * s1) * s4) * s3,
        }
    }
}

/// Literal product `S4·S3·S2·S1` on the full space.
pub fn product_cycle(params: &CycleParams, space: &ProductSpace) -> Operator {
    LiftedPhases::new(params, space).cycle(CycleOrdering::ColdFirst)
}

/// Term-by-term closed form of the composed S-matrix with strong-limit
/// pulses.
pub fn closed_form_cycle(params: &CycleParams, space: &ProductSpace) -> Result<Operator> {
    if params.pulse_mode != PulseMode::StrongLimit {
        return Err(Error::RequiresStrongLimit("closed-form composed S-matrix"));
    }
    let cold = ValveTerms::new(Side::Cold, params, space.cold);
    let warm = ValveTerms::new(Side::Warm, params, space.warm);
    let em = engine_matrices();
    let p = cis(0.5 * params.tau1 * params.cold_detuning());
    let q = cis(0.5 * params.tau3 * params.warm_detuning());
    let (pc, qc) = (p.conj(), q.conj());
    let k3 = |c: &Operator, e: &Operator, w: &Operator| c.kron(e).kron(w);

    // cold ⊗ engine brackets that recur with different warm factors
    let stay_g = cold.lowered_stay.kron(&em.e1) + cold.raise_exchange.kron(&em.e_plus).scale(I);
    let from_e = cold.lower_exchange.kron(&em.e1) - cold.raised_stay.kron(&em.e_plus).scale(I);
    let to_e = cold.raise_exchange.kron(&em.e2) - cold.lowered_stay.kron(&em.e_minus).scale(I);
    let stay_e = cold.lower_exchange.kron(&em.e_minus).scale(I) + cold.raised_stay.kron(&em.e2);

    let terms = [
        k3(&cold.identity, &em.e3, &warm.identity),
        k3(&cold.vacuum, &em.e1, &warm.vacuum),
        stay_g.kron(&warm.vacuum).scale(p),
        k3(&cold.vacuum, &em.e1, &warm.lowered_stay).scale(q),
        k3(&cold.vacuum, &em.e_minus, &warm.lower_exchange).scale(-I * qc),
        stay_g.kron(&warm.lowered_stay).scale(q * p),
        from_e.kron(&warm.raise_exchange).scale(q * pc),
        to_e.kron(&warm.lower_exchange).scale(qc * p),
        stay_e.kron(&warm.raised_stay).scale(qc * pc),
    ];
    let mut iter = terms.into_iter();
    let first = iter.next().unwrap();
    Ok(iter.fold(first, |acc, t| acc + t))
}

/// One-cycle S-matrix on the full space of a quanta bound.
#[derive(Clone, Debug)]
pub struct ComposedCycle {
    pub space: ProductSpace,
    pub quanta_bound: usize,
    /// Product-path operator on the full truncated space.
    pub operator: Operator,
    /// Deviation of the closed form from the product on the retained space;
    /// `None` for finite pulses, where only the product is available.
    pub path_deviation: Option<f64>,
}

impl ComposedCycle {
    pub fn retained(&self) -> Vec<usize> {
        self.space.retained(self.quanta_bound)
    }

    /// Compression onto the retained space.
    pub fn retained_block(&self) -> CMatrix {
        compress(self.operator.matrix(), &self.retained())
    }
}

/// Builds `S = S4 S3 S2 S1` and, for strong-limit pulses, checks it against
/// the closed form.
pub fn compose_cycle(params: &CycleParams, quanta_bound: usize) -> Result<ComposedCycle> {
    params.validate()?;
    let space = ProductSpace::for_quanta_bound(quanta_bound);
    let operator = product_cycle(params, &space);
    let path_deviation = match params.pulse_mode {
        PulseMode::Finite => None,
        PulseMode::StrongLimit => {
            let closed = closed_form_cycle(params, &space)?;
            let keep = space.retained(quanta_bound);
            let dev = operator.compress(&keep).distance(&closed.compress(&keep));
            if !(dev <= TWO_PATH_TOLERANCE) {
                return Err(Error::PathMismatch {
                    check: "composed S product vs closed form",
                    deviation: dev,
                    tolerance: TWO_PATH_TOLERANCE,
                });
            }
            Some(dev)
        }
    };
    Ok(ComposedCycle {
        space,
        quanta_bound,
        operator,
        path_deviation,
    })
}

/// Effective cold-side S-matrix: S1 without its detuning phases, on
/// `cold ⊗ engine` with the `f` level left untouched.
pub fn s_eff(params: &CycleParams, cutoff: FockCutoff) -> Operator {
    let t = ValveTerms::new(Side::Cold, params, cutoff);
    let em = engine_matrices();
    (&t.vacuum + &t.lowered_stay).kron(&em.e1)
        + t.raise_exchange.kron(&em.e_plus).scale(I)
        + t.lower_exchange.kron(&em.e_minus).scale(I)
        + t.raised_stay.kron(&em.e2)
        + t.identity.kron(&em.e3)
}

/// Residuals of the diagonal-operator identities behind the unitarity of
/// S_eff and the transfer operator.
#[derive(Clone, Copy, Debug)]
pub struct ValveIdentityDefects {
    /// `‖bb†B² + (bb†)²(A²+C²) - I‖` (cold side)
    pub raised: f64,
    /// `‖G + b†B²b + b†bb†(A²+C²)b - I‖` (cold side)
    pub lowered: f64,
    /// `‖cc†(Z²+V²) + Y² - Σ(n+1)⁻¹|n⟩⟨n|‖` (warm side)
    pub warm_sum: f64,
    /// `max(‖cc†X - I‖, ‖G3 + c†Xc - I‖)`
    pub warm_resolution: f64,
}

/// Evaluated on Fock states below the cutoff, where `bb†` is exact.
pub fn valve_identity_defects(params: &CycleParams, cutoff: FockCutoff) -> ValveIdentityDefects {
    let keep: Vec<usize> = (0..cutoff.n_max()).collect();
    let d = |op: Operator, target: &Operator| op.compress(&keep).distance(&target.compress(&keep));
    let id = oscillator_identity(cutoff);
    let b = annihilator(cutoff);
    let bd = creator(cutoff);
    let bbd = &b * &bd;

    let cold = ValveDiagonals::new(Side::Cold, params, cutoff);
    let (a, bb, c) = (cold.cos_op(), cold.exchange_op(), cold.sin_op());
    let a2c2 = &(&a * &a) + &(&c * &c);
    let b2 = &bb * &bb;
    let raised = d(&(&bbd * &b2) + &(&(&bbd * &bbd) * &a2c2), &id);
    let lowered = d(
        &(&vacuum_projector(cutoff) + &(&(&bd * &b2) * &b))
            + &(&(&(&(&bd * &b) * &bd) * &a2c2) * &b),
        &id,
    );

    let warm = ValveDiagonals::new(Side::Warm, params, cutoff);
    let (z, y, v) = (warm.cos_op(), warm.exchange_op(), warm.sin_op());
    let x = &(&bbd * &(&(&z * &z) + &(&v * &v))) + &(&y * &y);
    let harmonic: Vec<f64> = (0..cutoff.dim()).map(|n| 1.0 / (n + 1) as f64).collect();
    let warm_sum = d(
        x.clone(),
        &Operator::diagonal(&harmonic, Factor::Oscillator(cutoff.dim())),
    );
    let warm_resolution =
        d(&bbd * &x, &id).max(d(&vacuum_projector(cutoff) + &(&(&bd * &x) * &b), &id));

    ValveIdentityDefects {
        raised,
        lowered,
        warm_sum,
        warm_resolution,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{engine_identity, lift_cold_engine, quanta_operator, EngineLevel};
    use std::f64::consts::FRAC_PI_4;

    fn generic() -> CycleParams {
        CycleParams {
            omega1: 2.0,
            mu: 0.7,
            kappa12: 0.3,
            tau1: 1.5,
            ..Default::default()
        }
    }

    #[test]
    fn dressed_decoupled_and_resonant() {
        let p = CycleParams {
            kappa12: 0.0,
            omega1: 3.0,
            mu: 1.0,
            ..Default::default()
        };
        for n in 0..5 {
            let c = dressed_coefficients(Side::Cold, n, &p);
            assert_eq!(c.half_splitting, 0.5);
            assert_eq!(c.angle, 0.0);
        }
        let p = CycleParams {
            kappa12: 1.0,
            omega1: 2.0,
            mu: 1.0,
            ..Default::default()
        };
        let c = dressed_coefficients(Side::Cold, 0, &p);
        assert!((c.half_splitting - 1.0).abs() < 1e-15);
        assert!((c.angle - FRAC_PI_4).abs() < 1e-15);

        // below resonance with no coupling the doublet is unmixed the other way round
        let p = CycleParams {
            kappa12: 0.0,
            omega1: 1.0,
            mu: 1.0,
            ..Default::default()
        };
        assert_eq!(dressed_coefficients(Side::Cold, 3, &p).angle, FRAC_PI_2);
    }

    #[test]
    fn mixing_angle_forms_agree() {
        let p = generic();
        for n in 0..12 {
            let c = dressed_coefficients(Side::Cold, n, &p);
            let reciprocal = (2.0 * c.half_splitting + 2.0 * p.mu - p.omega1)
                / (2.0 * p.kappa12 * ((n + 1) as f64).sqrt());
            assert!((c.angle.tan() - reciprocal).abs() < 1e-14, "n = {n}");
            let alt = (p.kappa12.powi(2) * (n + 1) as f64 + (p.mu - 0.5 * p.omega1).powi(2)).sqrt();
            assert!((alt - c.half_splitting).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_duration_and_zero_coupling_are_identity() {
        let c = FockCutoff::new(6);
        let id = Operator::identity(vec![Factor::Oscillator(7), Factor::Engine]);
        let keep: Vec<usize> = (0..18).collect(); // cold occupation < 6 keeps b b† exact
        let p = CycleParams {
            tau1: 0.0,
            tau3: 0.0,
            ..generic()
        };
        assert!(s1(&p, c).compress(&keep).distance(&id.compress(&keep)) < 1e-14);
        let p = CycleParams {
            kappa12: 0.0,
            kappa23: 0.0,
            ..generic()
        };
        assert!(s1(&p, c).compress(&keep).distance(&id.compress(&keep)) < 1e-14);
        let id3 = Operator::identity(vec![Factor::Engine, Factor::Oscillator(7)]);
        let keep3: Vec<usize> = (0..21).filter(|i| i % 7 < 6).collect();
        assert!(s3(&p, c).compress(&keep3).distance(&id3.compress(&keep3)) < 1e-14);
        let p = CycleParams {
            tau3: 0.0,
            ..generic()
        };
        assert!(s3(&p, c).compress(&keep3).distance(&id3.compress(&keep3)) < 1e-14);
    }

    #[test]
    fn s1_fixes_ground_state() {
        let c = FockCutoff::new(4);
        let s = s1(&generic(), c);
        let g = s.matrix().column(0).into_owned();
        assert!((g[0] - re(1.0)).norm() < 1e-15);
        assert!(g.iter().skip(1).all(|z| z.norm() == 0.0));
    }

    #[test]
    fn valve_matrices_commute_with_quanta() {
        let qb = 6;
        let space = ProductSpace::for_quanta_bound(qb);
        let n = quanta_operator(&space);
        let keep = space.retained(qb);
        let phases = LiftedPhases::new(&generic(), &space);
        for s in [&phases.s1, &phases.s3] {
            assert!(
                n.commutator(s)
                    .compress(&keep)
                    .distance(&Operator::zeros(vec![Factor::Subspace(keep.len())]))
                    < 1e-12
            );
        }
        // the pulses change the quanta count
        let c = n.commutator(&phases.s2).compress(&keep);
        assert!(c.matrix().norm() > 1.0);
    }

    #[test]
    fn strong_limit_tables() {
        let s2 = s2_strong_limit();
        assert!((&s2b_strong_limit() * &s2a_strong_limit()).distance(&s2) == 0.0);
        let s4 = s2.adjoint();
        let expected_s4 = engine3([[Z0, -I, Z0], [Z0, Z0, I], [ONE, Z0, Z0]]);
        assert_eq!(s4, expected_s4);
        let em = engine_matrices();
        let conj = |x: &Operator| &(&s4 * x) * &s2;
        assert_eq!(conj(&em.e1), em.e3);
        assert_eq!(conj(&em.e2), em.e1);
        assert_eq!(conj(&em.e3), em.e2);
        assert_eq!(conj(&em.f_plus), -em.e_plus.clone());
        assert_eq!(conj(&em.f_minus), -em.e_minus.clone());
    }

    fn finite(eps_a: f64, eps_b: f64) -> CycleParams {
        CycleParams {
            eps_a,
            eps_b,
            mu: 0.6,
            delta: 0.45,
            pulse_mode: PulseMode::Finite,
            ..Default::default()
        }
    }

    #[test]
    fn finite_pulses_match_closed_forms() {
        for (ea, eb) in [(1.3, 0.8), (0.2, 3.0), (7.0, 7.0)] {
            let p = finite(ea, eb);
            assert!(s2a(&p).distance(&quarter_period_s2a(&p)) < 1e-12);
            assert!(s2b(&p).distance(&quarter_period_s2b(&p)) < 1e-12);
            assert!(s2(&p).distance(&quarter_period_s2(&p)) < 1e-12);
            let id = engine_identity();
            for u in [s2a(&p), s2b(&p), s2(&p)] {
                assert!((&u.adjoint() * &u).distance(&id) < 1e-14);
            }
            assert!((&s4(&p) * &s2(&p)).distance(&id) < 1e-14);
            assert_eq!(s4(&p), s2(&p).adjoint());
        }
    }

    #[test]
    fn ff_phase_of_the_pulse_product() {
        // an (f,f) element carrying e^{-iτ_a δ} would not match the product
        let p = finite(1.3, 0.8);
        let naive = -I * p.period_a() * p.delta * cis(-p.pulse_a_duration() * p.delta);
        let product = s2(&p).matrix()[(2, 2)];
        assert!((naive - product).norm() > 0.1);
        assert!((naive.conj() * -1.0 - product).norm() < 1e-14);
    }

    #[test]
    fn strong_pulse_limit_converges() {
        let mut last = f64::INFINITY;
        for k in 1..6 {
            let eps = 10f64.powi(k);
            let p = finite(eps, eps);
            let err = s2(&p).distance(&s2_strong_limit());
            assert!(err < last, "error not decreasing at eps = {eps}");
            assert!(err < 5.0 * (p.mu + p.delta) / eps);
            last = err;
            let ea = s2a(&p).matrix() - s2a_strong_limit().matrix();
            assert!(ea.iter().all(|z| z.norm() < 2.0 * p.delta / eps));
        }
        let sweep = strong_limit_sweep(&CycleParams::default(), 5);
        assert!(sweep.windows(2).all(|w| w[1].1 < 0.5 * w[0].1), "{sweep:?}");
    }

    #[test]
    fn composed_cycle_two_paths() {
        for qb in [1, 4, 7] {
            let c = compose_cycle(&CycleParams::default(), qb).unwrap();
            assert!(c.path_deviation.unwrap() < 1e-12);
            let ground = c.space.index(0, EngineLevel::G, 0);
            let col = c.operator.matrix().column(ground);
            assert!((col[ground] - re(1.0)).norm() < 1e-14);
            assert!(col.norm() - 1.0 < 1e-14);
        }
        let fin = compose_cycle(&CycleParams::default().with_mode(PulseMode::Finite), 3).unwrap();
        assert!(fin.path_deviation.is_none());
        assert!(closed_form_cycle(
            &CycleParams::default().with_mode(PulseMode::Finite),
            &fin.space
        )
        .is_err());
    }

    #[test]
    fn s_eff_reproduces_s1_up_to_phases() {
        let p = CycleParams {
            omega1: 1.4,
            mu: 0.7,
            ..generic()
        };
        let c = FockCutoff::new(5);
        // at resonance the detuning phases are 1
        assert!(s_eff(&p, c).distance(&s1(&p, c)) < 1e-15);
        let p = CycleParams {
            tau1: 0.0,
            ..generic()
        };
        let keep: Vec<usize> = (0..15).collect();
        let id = Operator::identity(vec![Factor::Oscillator(6), Factor::Engine]);
        assert!(s_eff(&p, c).compress(&keep).distance(&id.compress(&keep)) < 1e-15);
        let space = ProductSpace::for_quanta_bound(5);
        let lifted = lift_cold_engine(&s_eff(&generic(), c), &space);
        let keep = space.retained(5);
        let u = lifted.compress(&keep);
        assert!(
            (&u.adjoint() * &u).distance(&Operator::identity(vec![Factor::Subspace(keep.len())]))
                < 1e-13
        );
    }

    #[test]
    fn diagonal_identities() {
        let d = valve_identity_defects(&CycleParams::default(), FockCutoff::new(20));
        assert!(d.raised < 1e-13 && d.lowered < 1e-13);
        assert!(d.warm_sum < 1e-13 && d.warm_resolution < 1e-13);
    }
}
