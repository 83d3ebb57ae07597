//! Many consecutive cycles on a pure state, with per-cycle observables.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::energy::{transfer_spectrum, Branch};
use crate::fock::{EngineLevel, Operator, ProductSpace};
use crate::linalg::{eigh, UnitaryEigen};
use crate::pulse::{compose_cycle, ComposedCycle};
use crate::sectors::{f_states, leakage, sector_basis, LEAKAGE_TOLERANCE};
use crate::{cis, re, CMatrix, CVector, CycleParams, Error, PulseMode, Result, C64};

/// Eigenvalues of reduced density matrices below this are treated as zero.
pub const ENTROPY_CLIP: f64 = 1e-12;

const NORM_TOLERANCE: f64 = 1e-12;

/// Normalized state supported on the retained space of a quanta bound.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    space: ProductSpace,
    quanta_bound: usize,
    amplitudes: CVector,
}

impl StateVector {
    pub fn new(space: ProductSpace, quanta_bound: usize, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for a space of dimension {}",
                amplitudes.len(),
                space.dim()
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InitialState(format!("norm {norm} is not 1")));
        }
        let outside: f64 = amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| space.quanta(*i) > quanta_bound)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        if outside > 0.0 {
            return Err(Error::InitialState(format!(
                "weight {outside:.3e} beyond quanta bound {quanta_bound}"
            )));
        }
        Ok(StateVector {
            space,
            quanta_bound,
            amplitudes,
        })
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn space(&self) -> &ProductSpace {
        &self.space
    }

    pub fn quanta_bound(&self) -> usize {
        self.quanta_bound
    }
}

/// Basis label `|m, level, k⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Label {
    pub cold: usize,
    pub level: EngineLevel,
    pub warm: usize,
}

impl FromStr for Label {
    type Err = Error;

    /// `m,level,k`, e.g. `1,g,0`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = || Error::InitialState(format!("expected 'm,level,k', got '{s}'"));
        if parts.len() != 3 {
            return Err(bad());
        }
        Ok(Label {
            cold: parts[0].parse().map_err(|_| bad())?,
            level: parts[1].parse().map_err(|_| bad())?,
            warm: parts[2].parse().map_err(|_| bad())?,
        })
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.cold, self.level, self.warm)
    }
}

/// Recipe for an initial state.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialSpec {
    Product(Label),
    /// Amplitudes are normalized on construction.
    Superposition(Vec<(C64, Label)>),
    /// Eigenvector of the transfer operator on `span{|n+1,g⟩, |n,e⟩}`,
    /// times the warm Fock state `|warm⟩`.
    TransferEigenvector {
        n: usize,
        branch: Branch,
        warm: usize,
    },
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec::Product(Label {
            cold: 0,
            level: EngineLevel::G,
            warm: 0,
        })
    }
}

/// `re`, `re+imi`, `re-imi` or `imi`.
pub fn parse_complex(s: &str) -> Option<C64> {
    let s = s.trim();
    if let Some(body) = s.strip_suffix('i') {
        // split at the last sign that is not part of an exponent
        let bytes = body.as_bytes();
        let split = (1..bytes.len()).rev().find(|&i| {
            (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E')
        });
        return match split {
            Some(i) => Some(C64::new(body[..i].parse().ok()?, body[i..].parse().ok()?)),
            None => Some(C64::new(
                0.0,
                if body.is_empty() {
                    1.0
                } else {
                    body.parse().ok()?
                },
            )),
        };
    }
    s.parse().ok().map(re)
}

/// Inverse of [`parse_complex`]; round-trips exactly.
pub fn format_complex(z: C64) -> String {
    if z.im.is_sign_negative() {
        format!("{:?}{:?}i", z.re, z.im)
    } else {
        format!("{:?}+{:?}i", z.re, z.im)
    }
}

impl FromStr for InitialSpec {
    type Err = Error;

    /// `m,level,k` or `product:m,level,k`;
    /// `superposition:m,l,k=amp;m,l,k=amp;...`;
    /// `transfer:n,+|-,k`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, body) = s.split_once(':').unwrap_or(("product", s));
        match kind.trim() {
            "product" => Ok(InitialSpec::Product(body.parse()?)),
            "superposition" => {
                let terms = body
                    .split(';')
                    .filter(|t| !t.trim().is_empty())
                    .map(|t| {
                        let (label, amp) = t.split_once('=').unwrap_or((t, "1"));
                        let amp = parse_complex(amp)
                            .ok_or_else(|| Error::InitialState(format!("bad amplitude '{amp}'")))?;
                        Ok((amp, label.parse()?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(InitialSpec::Superposition(terms))
            }
            "transfer" => {
                let parts: Vec<&str> = body.split(',').map(str::trim).collect();
                let bad = || Error::InitialState(format!("expected 'transfer:n,+|-,k', got '{s}'"));
                if parts.len() != 3 {
                    return Err(bad());
                }
                Ok(InitialSpec::TransferEigenvector {
                    n: parts[0].parse().map_err(|_| bad())?,
                    branch: parts[1].parse().map_err(|_| bad())?,
                    warm: parts[2].parse().map_err(|_| bad())?,
                })
            }
            other => Err(Error::InitialState(format!(
                "unknown initial state kind '{other}'"
            ))),
        }
    }
}

impl fmt::Display for InitialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialSpec::Product(l) => write!(f, "product:{l}"),
            InitialSpec::Superposition(terms) => {
                f.write_str("superposition:")?;
                for (i, (a, l)) in terms.iter().enumerate() {
                    if i > 0 {
                        f.write_str(";")?;
                    }
                    write!(f, "{l}={}", format_complex(*a))?;
                }
                Ok(())
            }
            InitialSpec::TransferEigenvector { n, branch, warm } => {
                let b = match branch {
                    Branch::Plus => "+",
                    Branch::Minus => "-",
                };
                write!(f, "transfer:{n},{b},{warm}")
            }
        }
    }
}

pub fn make_initial_state(
    spec: &InitialSpec,
    params: &CycleParams,
    quanta_bound: usize,
) -> Result<StateVector> {
    let space = ProductSpace::for_quanta_bound(quanta_bound);
    let mut v = CVector::zeros(space.dim());
    let mut put = |l: &Label, amp: C64| -> Result<()> {
        let q = l.cold + l.level.quanta() + l.warm;
        if q > quanta_bound {
            return Err(Error::InitialState(format!(
                "|{l}⟩ carries {q} quanta, above the bound {quanta_bound}"
            )));
        }
        v[space.index(l.cold, l.level, l.warm)] += amp;
        Ok(())
    };
    match spec {
        InitialSpec::Product(l) => put(l, re(1.0))?,
        InitialSpec::Superposition(terms) => {
            for (a, l) in terms {
                put(l, *a)?;
            }
        }
        InitialSpec::TransferEigenvector { n, branch, warm } => {
            let [u, w] = transfer_spectrum(*n, params).normalized(*branch);
            put(
                &Label {
                    cold: n + 1,
                    level: EngineLevel::G,
                    warm: *warm,
                },
                u,
            )?;
            put(
                &Label {
                    cold: *n,
                    level: EngineLevel::E,
                    warm: *warm,
                },
                w,
            )?;
        }
    }
    let norm = v.norm();
    if !(norm > 1e-300) || !norm.is_finite() {
        return Err(Error::InitialState("state cannot be normalized".into()));
    }
    StateVector::new(space, quanta_bound, v / re(norm))
}

/// `Sψ`
pub fn step_cycle(state: &StateVector, s: &Operator) -> Result<StateVector> {
    if s.dim() != state.amplitudes.len() {
        return Err(Error::DimensionMismatch(
            "S-matrix does not match the state".into(),
        ));
    }
    let next = s.apply(&state.amplitudes);
    let drift = (next.norm() - 1.0).abs();
    if drift > NORM_TOLERANCE {
        return Err(Error::InitialState(format!(
            "S changed the norm by {drift:.3e}"
        )));
    }
    Ok(StateVector {
        amplitudes: next,
        ..state.clone()
    })
}

/// Observables after one cycle (ħ = 1, entropies in nats).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CycleRecord {
    pub cycle: usize,
    /// `ω1⟨a†a⟩`
    pub cold_energy: f64,
    /// `ω3⟨c†c⟩`
    pub warm_energy: f64,
    pub p_g: f64,
    pub p_e: f64,
    pub p_f: f64,
    /// `⟨N⟩`
    pub quanta: f64,
    pub norm: f64,
    pub entropy_cold: f64,
    pub entropy_engine: f64,
    pub entropy_warm: f64,
    /// `|⟨ψ0|ψ⟩|`
    pub return_amplitude: f64,
}

impl CycleRecord {
    pub const COLUMNS: [(&'static str, &'static str); 12] = [
        ("cycle", "1"),
        ("cold_energy", "hbar*omega"),
        ("warm_energy", "hbar*omega"),
        ("p_g", "1"),
        ("p_e", "1"),
        ("p_f", "1"),
        ("quanta", "quanta"),
        ("norm", "1"),
        ("entropy_cold", "nat"),
        ("entropy_engine", "nat"),
        ("entropy_warm", "nat"),
        ("return_amplitude", "1"),
    ];

    pub fn values(&self) -> [f64; 12] {
        [
            self.cycle as f64,
            self.cold_energy,
            self.warm_energy,
            self.p_g,
            self.p_e,
            self.p_f,
            self.quanta,
            self.norm,
            self.entropy_cold,
            self.entropy_engine,
            self.entropy_warm,
            self.return_amplitude,
        ]
    }
}

/// Von Neumann entropy of a density matrix, eigenvalues below
/// [`ENTROPY_CLIP`] dropped.
pub fn von_neumann_entropy(rho: &CMatrix) -> f64 {
    let h = (rho + rho.adjoint()) * re(0.5);
    let (vals, _) = eigh(&h).expect("symmetrized matrix is Hermitian");
    vals.into_iter()
        .filter(|&p| p > ENTROPY_CLIP)
        .map(|p| -p * p.ln())
        .sum::<f64>()
        .max(0.0)
}

/// Reduced density matrices of the three factors.
pub fn reduced_density_matrices(state: &StateVector) -> [CMatrix; 3] {
    let space = state.space;
    let (dc, dw) = (space.cold.dim(), space.warm.dim());
    let psi = &state.amplitudes;
    let amp = |m: usize, l: usize, k: usize| psi[(m * 3 + l) * dw + k];
    let mut cold = CMatrix::zeros(dc, dc);
    let mut engine = CMatrix::zeros(3, 3);
    let mut warm = CMatrix::zeros(dw, dw);
    for m in 0..dc {
        for l in 0..3 {
            for k in 0..dw {
                let x = amp(m, l, k);
                if x.norm_sqr() == 0.0 {
                    continue;
                }
                for m2 in 0..dc {
                    cold[(m2, m)] += amp(m2, l, k) * x.conj();
                }
                for l2 in 0..3 {
                    engine[(l2, l)] += amp(m, l2, k) * x.conj();
                }
                for k2 in 0..dw {
                    warm[(k2, k)] += amp(m, l, k2) * x.conj();
                }
            }
        }
    }
    [cold, engine, warm]
}

pub fn observe(
    state: &StateVector,
    params: &CycleParams,
    cycle: usize,
    initial: &StateVector,
) -> CycleRecord {
    let space = state.space;
    let psi = &state.amplitudes;
    let (mut cold_n, mut warm_n, mut quanta) = (0.0, 0.0, 0.0);
    let mut pops = [0.0; 3];
    for (i, a) in psi.iter().enumerate() {
        let w = a.norm_sqr();
        if w == 0.0 {
            continue;
        }
        let (m, l, k) = space.label(i);
        cold_n += w * m as f64;
        warm_n += w * k as f64;
        quanta += w * (m + l.quanta() + k) as f64;
        pops[l.index()] += w;
    }
    let [rc, re_, rw] = reduced_density_matrices(state);
    CycleRecord {
        cycle,
        cold_energy: params.omega1 * cold_n,
        warm_energy: params.omega3 * warm_n,
        p_g: pops[0],
        p_e: pops[1],
        p_f: pops[2],
        quanta,
        norm: psi.norm(),
        entropy_cold: von_neumann_entropy(&rc),
        entropy_engine: von_neumann_entropy(&re_),
        entropy_warm: von_neumann_entropy(&rw),
        return_amplitude: initial.amplitudes.dotc(psi).norm(),
    }
}

/// One diagonalized invariant block of the composed S-matrix.
#[derive(Clone, Debug)]
struct Block {
    indices: Vec<usize>,
    phases: Vec<f64>,
    vectors: CMatrix,
}

/// Powers of the composed S-matrix from its per-sector eigenphases. The
/// `f` states are fixed points and are left alone.
#[derive(Clone, Debug)]
pub struct CyclePropagator {
    space: ProductSpace,
    quanta_bound: usize,
    blocks: Vec<Block>,
}

impl CyclePropagator {
    pub fn new(cycle: &ComposedCycle) -> Result<Self> {
        let s = &cycle.operator;
        let mut blocks = Vec::new();
        for n in 0..=cycle.quanta_bound {
            let basis = sector_basis(n, &cycle.space)?;
            let l = leakage(s, &basis);
            if l > LEAKAGE_TOLERANCE {
                return Err(Error::Leakage {
                    leakage: l,
                    tolerance: LEAKAGE_TOLERANCE,
                });
            }
            let eig = UnitaryEigen::new(&crate::fock::compress(s.matrix(), &basis.indices));
            blocks.push(Block {
                indices: basis.indices,
                phases: eig.phases,
                vectors: eig.vectors,
            });
        }
        for i in f_states(&cycle.space, cycle.quanta_bound) {
            let col = s.matrix().column(i);
            let moved = (col.norm_squared() - col[i].norm_sqr()).max(0.0).sqrt()
                + (col[i] - re(1.0)).norm();
            if moved > LEAKAGE_TOLERANCE {
                return Err(Error::Leakage {
                    leakage: moved,
                    tolerance: LEAKAGE_TOLERANCE,
                });
            }
        }
        Ok(CyclePropagator {
            space: cycle.space,
            quanta_bound: cycle.quanta_bound,
            blocks,
        })
    }

    /// Eigenphases of the sector `n` block.
    pub fn sector_phases(&self, n: usize) -> Option<&[f64]> {
        self.blocks.get(n).map(|b| b.phases.as_slice())
    }

    /// Eigen-coordinates of a state, one vector per sector.
    fn coordinates(&self, psi: &CVector) -> Vec<CVector> {
        self.blocks
            .iter()
            .map(|b| {
                let x = CVector::from_iterator(b.indices.len(), b.indices.iter().map(|&i| psi[i]));
                b.vectors.adjoint() * x
            })
            .collect()
    }

    fn power_from(&self, psi: &CVector, coords: &[CVector], k: usize) -> CVector {
        // f components are fixed; sector components are overwritten below
        let mut out = psi.clone();
        for (b, c) in self.blocks.iter().zip(coords) {
            let rotated = CVector::from_iterator(
                c.len(),
                c.iter().zip(&b.phases).map(|(x, p)| x * cis(k as f64 * p)),
            );
            let y = &b.vectors * rotated;
            for (&i, v) in b.indices.iter().zip(y.iter()) {
                out[i] = *v;
            }
        }
        out
    }

    /// `Sᵏψ`
    pub fn power(&self, state: &StateVector, k: usize) -> Result<StateVector> {
        if state.space != self.space || state.quanta_bound != self.quanta_bound {
            return Err(Error::DimensionMismatch(
                "state and propagator spaces differ".into(),
            ));
        }
        let coords = self.coordinates(&state.amplitudes);
        Ok(StateVector {
            amplitudes: self.power_from(&state.amplitudes, &coords, k),
            ..state.clone()
        })
    }
}

/// Precomputed composed cycle ready to drive trajectories.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub params: CycleParams,
    pub cycle: ComposedCycle,
    pub propagator: CyclePropagator,
}

impl Simulation {
    /// Requires strong-limit pulses: with finite pulses the composed cycle
    /// does not conserve the number of quanta.
    pub fn new(params: &CycleParams, quanta_bound: usize) -> Result<Self> {
        if params.pulse_mode != PulseMode::StrongLimit {
            return Err(Error::RequiresStrongLimit("multi-cycle simulation"));
        }
        let cycle = compose_cycle(params, quanta_bound)?;
        let propagator = CyclePropagator::new(&cycle)?;
        Ok(Simulation {
            params: *params,
            cycle,
            propagator,
        })
    }

    pub fn quanta_bound(&self) -> usize {
        self.cycle.quanta_bound
    }

    /// Records for cycles `0..=n_cycles`.
    pub fn run(&self, initial: &StateVector, n_cycles: usize) -> Result<Vec<CycleRecord>> {
        let mut out = Vec::with_capacity(n_cycles + 1);
        self.for_each(initial, n_cycles, |r| out.push(r))?;
        Ok(out)
    }

    /// Streams the records instead of collecting them.
    pub fn for_each(
        &self,
        initial: &StateVector,
        n_cycles: usize,
        mut sink: impl FnMut(CycleRecord),
    ) -> Result<()> {
        let p = &self.propagator;
        if initial.space != p.space || initial.quanta_bound != p.quanta_bound {
            return Err(Error::DimensionMismatch(
                "initial state does not match the simulation".into(),
            ));
        }
        let coords = p.coordinates(&initial.amplitudes);
        for k in 0..=n_cycles {
            let amplitudes = if k == 0 {
                initial.amplitudes.clone()
            } else {
                p.power_from(&initial.amplitudes, &coords, k)
            };
            let state = StateVector {
                amplitudes,
                ..initial.clone()
            };
            sink(observe(&state, &self.params, k, initial));
        }
        Ok(())
    }

    /// Same trajectory by repeated multiplication with S.
    pub fn run_by_multiplication(
        &self,
        initial: &StateVector,
        n_cycles: usize,
    ) -> Result<Vec<CycleRecord>> {
        let mut state = initial.clone();
        let mut out = vec![observe(&state, &self.params, 0, initial)];
        for k in 1..=n_cycles {
            state = step_cycle(&state, &self.cycle.operator)?;
            out.push(observe(&state, &self.params, k, initial));
        }
        Ok(out)
    }
}

/// Builds a simulation and runs it from the given initial state.
pub fn run(
    initial: &InitialSpec,
    params: &CycleParams,
    quanta_bound: usize,
    n_cycles: usize,
) -> Result<Vec<CycleRecord>> {
    let sim = Simulation::new(params, quanta_bound)?;
    let state = make_initial_state(initial, params, quanta_bound)?;
    sim.run(&state, n_cycles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::transfer_operator;
    use std::f64::consts::{FRAC_PI_2, LN_2};

    fn label(cold: usize, level: EngineLevel, warm: usize) -> Label {
        Label { cold, level, warm }
    }

    #[test]
    fn parse_specs() {
        let s: InitialSpec = "1,e,2".parse().unwrap();
        assert_eq!(s, InitialSpec::Product(label(1, EngineLevel::E, 2)));
        let s: InitialSpec = "superposition:1,g,0=1;0,e,0=0.5-2i".parse().unwrap();
        assert_eq!(s.to_string().parse::<InitialSpec>().unwrap(), s);
        let s: InitialSpec = "transfer:3,-,1".parse().unwrap();
        assert_eq!(
            s,
            InitialSpec::TransferEigenvector {
                n: 3,
                branch: Branch::Minus,
                warm: 1
            }
        );
        assert_eq!(s.to_string(), "transfer:3,-,1");
        assert!("nope:1".parse::<InitialSpec>().is_err());
        assert!("1,x,0".parse::<InitialSpec>().is_err());
    }

    #[test]
    fn complex_round_trip() {
        for z in [
            C64::new(1.5, -2.0),
            C64::new(-1e-300, 3e10),
            C64::new(0.1, 0.0),
            C64::new(-0.0, -0.0),
        ] {
            let back = parse_complex(&format_complex(z)).unwrap();
            assert_eq!(back, z);
        }
        assert_eq!(parse_complex("2i"), Some(C64::new(0.0, 2.0)));
        assert_eq!(parse_complex("1e-3-4e-2i"), Some(C64::new(1e-3, -4e-2)));
        assert_eq!(parse_complex("x"), None);
    }

    #[test]
    fn initial_states() {
        let p = CycleParams::default();
        let g = make_initial_state(&InitialSpec::default(), &p, 3).unwrap();
        assert_eq!(g.amplitudes()[0], re(1.0));
        let sup = InitialSpec::Superposition(vec![
            (re(1.0), label(1, EngineLevel::G, 0)),
            (re(1.0), label(0, EngineLevel::E, 0)),
        ]);
        let s = make_initial_state(&sup, &p, 3).unwrap();
        assert!((s.amplitudes().norm() - 1.0).abs() < 1e-15);
        let r = observe(&s, &p, 0, &s);
        assert!((r.entropy_engine - LN_2).abs() < 1e-12);
        assert!((r.quanta - 1.0).abs() < 1e-15);
        assert!(make_initial_state(&"3,f,0".parse().unwrap(), &p, 3).is_err());
        assert!(make_initial_state(&InitialSpec::Superposition(vec![]), &p, 3).is_err());
    }

    #[test]
    fn resonant_negative_eigenvector() {
        let p = CycleParams {
            omega1: 2.0,
            mu: 1.0,
            kappa12: 1.0,
            tau1: FRAC_PI_2,
            ..Default::default()
        };
        let spec = InitialSpec::TransferEigenvector {
            n: 0,
            branch: Branch::Minus,
            warm: 0,
        };
        let s = make_initial_state(&spec, &p, 3).unwrap();
        let d = transfer_operator(&p, 3).unwrap();
        let rho = s.amplitudes().dotc(&d.operator.apply(s.amplitudes())).re;
        assert!((rho + 1.0).abs() < 1e-12);
    }

    #[test]
    fn observe_product_state() {
        let p = CycleParams::default();
        let s = make_initial_state(&"2,e,1".parse().unwrap(), &p, 4).unwrap();
        let r = observe(&s, &p, 0, &s);
        assert_eq!(r.quanta, 4.0);
        assert_eq!((r.p_g, r.p_e, r.p_f), (0.0, 1.0, 0.0));
        assert_eq!(r.cold_energy, 2.0 * p.omega1);
        assert_eq!(r.entropy_cold + r.entropy_engine + r.entropy_warm, 0.0);
        assert_eq!(r.return_amplitude, 1.0);
    }

    #[test]
    fn powers_match_multiplication() {
        let p = CycleParams::default();
        let sim = Simulation::new(&p, 4).unwrap();
        let spec: InitialSpec = "superposition:1,g,2=1;0,e,1=0.3+0.4i;2,f,0=0.5;0,g,0=0.2"
            .parse()
            .unwrap();
        let s = make_initial_state(&spec, &p, 4).unwrap();
        let a = sim.run(&s, 30).unwrap();
        let b = sim.run_by_multiplication(&s, 30).unwrap();
        for (x, y) in a.iter().zip(&b) {
            for (u, v) in x.values().iter().zip(y.values()) {
                assert!((u - v).abs() < 1e-10, "{x:?} vs {y:?}");
            }
        }
    }

    #[test]
    fn ground_and_f_states_are_fixed() {
        let p = CycleParams::default();
        let sim = Simulation::new(&p, 3).unwrap();
        for spec in ["0,g,0", "1,f,0", "0,f,1"] {
            let s = make_initial_state(&spec.parse().unwrap(), &p, 3).unwrap();
            let recs = sim.run(&s, 5).unwrap();
            assert_eq!(recs.len(), 6);
            assert!(recs
                .iter()
                .all(|r| (r.return_amplitude - 1.0).abs() < 1e-12));
            let next = step_cycle(&s, &sim.cycle.operator).unwrap();
            assert!((next.amplitudes() - s.amplitudes()).norm() < 1e-12);
        }
        let s = make_initial_state(&InitialSpec::default(), &p, 3).unwrap();
        assert_eq!(sim.run(&s, 0).unwrap().len(), 1);
    }

    #[test]
    fn first_cycle_transfer() {
        let p = CycleParams::default();
        let qb = 5;
        let sim = Simulation::new(&p, qb).unwrap();
        let d = transfer_operator(&p, qb).unwrap();
        let spec: InitialSpec = "superposition:2,g,1=1;1,e,1=0.7i;1,g,0=0.2"
            .parse()
            .unwrap();
        let s = make_initial_state(&spec, &p, qb).unwrap();
        let recs = sim.run(&s, 1).unwrap();
        let expect = s.amplitudes().dotc(&d.operator.apply(s.amplitudes())).re;
        assert!(((recs[1].cold_energy - recs[0].cold_energy) / p.omega1 - expect).abs() < 1e-10);
    }

    #[test]
    fn finite_pulses_rejected() {
        let p = CycleParams::default().with_mode(PulseMode::Finite);
        assert!(matches!(
            Simulation::new(&p, 2),
            Err(Error::RequiresStrongLimit(_))
        ));
    }
}
