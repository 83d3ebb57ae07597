//! Command-line front end: `verify`, `spectrum`, `simulate`, `table1`.
//!
//! Settings come from built-in defaults, then an optional flat `key = value`
//! config file, then command-line flags. Exit status is 0 on success, 1 when
//! a check fails (or on I/O errors) and 2 for invalid configuration.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{
    classify_flows, effective_consistency, energy_bookkeeping, pulse_work_spectrum,
    reference_flows, transfer_operator, transfer_spectrum, warm_doublet_block, work_operators,
    FlowLabel,
};
use crate::fock::{EngineLevel, FockCutoff, Operator, ProductSpace};
use crate::linalg::eigh;
use crate::oracle::{
    active_smatrix, analytic_smatrix, oracle_smatrix, parameter_draws, Phase, PhaseSpec,
};
use crate::pulse::{
    dressed_coefficients, quarter_period_s2a, quarter_period_s2b, product_cycle, strong_limit_sweep,
    valve_identity_defects, Side,
};
use crate::sectors::{leakage, project, sector_basis, sector_spectrum};
use crate::simulate::{make_initial_state, InitialSpec, Simulation};
use crate::{CVector, CycleParams, Error, PulseMode, Result, C64};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INVALID_CONFIG: i32 = 2;

/// Entry-wise tolerance for the quarter-period pulse closed forms.
const CLOSED_FORM_TOLERANCE: f64 = 1e-12;

#[derive(Parser, Debug)]
#[command(
    name = "qcycle",
    version,
    about = "Three-level engine between two oscillators: checks, spectra and trajectories"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub args: RunArgs,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Run every consistency check and report deviations.
    Verify,
    /// Dressed-state data, transfer and work eigenvalues, sector eigenphases.
    Spectrum,
    /// Drive many cycles and record observables per cycle.
    Simulate,
    /// Energy-flow direction of each term of the cycle S-matrix.
    Table1,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Default, Clone)]
pub struct RunArgs {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub quanta_bound: Option<usize>,
    #[arg(long, global = true)]
    pub cycles: Option<usize>,
    /// Output file (stdout if absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// `m,level,k`, `superposition:m,l,k=amp;...` or `transfer:n,+|-,k`.
    #[arg(long, global = true)]
    pub initial: Option<String>,
    #[arg(long, global = true)]
    pub tol_operator: Option<f64>,
    #[arg(long, global = true)]
    pub tol_oracle: Option<f64>,
    #[arg(long, global = true)]
    pub tol_drift: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub omega1: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub omega3: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub kappa12: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub kappa23: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub tau1: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub tau3: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub eps_a: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub eps_b: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub tau_a: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub tau_b: Option<f64>,
    /// `finite` or `strong_limit`.
    #[arg(long, global = true)]
    pub pulse_mode: Option<PulseMode>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    pub operator: f64,
    pub oracle: f64,
    pub drift: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            operator: 1e-10,
            oracle: 1e-9,
            drift: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub params: CycleParams,
    pub quanta_bound: usize,
    pub n_cycles: usize,
    pub initial: InitialSpec,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: CycleParams::default(),
            quanta_bound: 6,
            n_cycles: 100,
            initial: InitialSpec::default(),
            out: None,
            format: None,
            seed: 1,
            tolerances: Tolerances::default(),
        }
    }
}

fn config_err(key: &str, value: &str, what: &str) -> Error {
    Error::Config(format!("{key}: '{value}' {what}"))
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let float = || {
            value
                .parse::<f64>()
                .map_err(|_| config_err(key, value, "is not a number"))
        };
        let int = || {
            value
                .parse::<usize>()
                .map_err(|_| config_err(key, value, "is not a non-negative integer"))
        };
        match key {
            "quanta_bound" => self.quanta_bound = int()?,
            "cycles" => self.n_cycles = int()?,
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| config_err(key, value, "is not a seed"))?
            }
            "initial" => {
                self.initial = value
                    .parse()
                    .map_err(|e: Error| Error::Config(e.to_string()))?
            }
            "out" => self.out = Some(PathBuf::from(value)),
            "format" => {
                self.format = Some(
                    Format::from_str(value, true)
                        .map_err(|_| config_err(key, value, "is not csv or json"))?,
                )
            }
            "tol_operator" => self.tolerances.operator = float()?,
            "tol_oracle" => self.tolerances.oracle = float()?,
            "tol_drift" => self.tolerances.drift = float()?,
            _ => self.params.set(key, value)?,
        }
        Ok(())
    }

    /// Parses a config document: one `key = value` per line, `#` comments.
    pub fn apply_document(&mut self, text: &str) -> Result<()> {
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", no + 1)))?;
            self.set(k.trim(), v).map_err(|e| {
                Error::Config(format!(
                    "line {}: {}",
                    no + 1,
                    e.to_string().trim_start_matches("config: ")
                ))
            })?;
        }
        Ok(())
    }

    pub fn from_args(args: &RunArgs) -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &args.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            cfg.apply_document(&text)?;
        }
        let p = &mut cfg.params;
        let floats = [
            (&mut p.omega1, args.omega1),
            (&mut p.omega3, args.omega3),
            (&mut p.mu, args.mu),
            (&mut p.delta, args.delta),
            (&mut p.kappa12, args.kappa12),
            (&mut p.kappa23, args.kappa23),
            (&mut p.tau1, args.tau1),
            (&mut p.tau3, args.tau3),
            (&mut p.eps_a, args.eps_a),
            (&mut p.eps_b, args.eps_b),
        ];
        for (slot, v) in floats {
            if let Some(v) = v {
                *slot = v;
            }
        }
        if args.tau_a.is_some() {
            p.tau_a = args.tau_a;
        }
        if args.tau_b.is_some() {
            p.tau_b = args.tau_b;
        }
        if let Some(m) = args.pulse_mode {
            p.pulse_mode = m;
        }
        if let Some(v) = args.quanta_bound {
            cfg.quanta_bound = v;
        }
        if let Some(v) = args.cycles {
            cfg.n_cycles = v;
        }
        if let Some(v) = &args.out {
            cfg.out = Some(v.clone());
        }
        if let Some(v) = args.format {
            cfg.format = Some(v);
        }
        if let Some(v) = args.seed {
            cfg.seed = v;
        }
        if let Some(v) = &args.initial {
            cfg.initial = v.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
        }
        let t = &mut cfg.tolerances;
        for (slot, v) in [
            (&mut t.operator, args.tol_operator),
            (&mut t.oracle, args.tol_oracle),
            (&mut t.drift, args.tol_drift),
        ] {
            if let Some(v) = v {
                *slot = v;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.params
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.quanta_bound < 1 {
            return Err(Error::Config("quanta_bound must be at least 1".into()));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("tol_operator", t.operator),
            ("tol_oracle", t.oracle),
            ("tol_drift", t.drift),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

/// Exit status belonging to an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::InvalidParameter(_)
        | Error::InitialState(_)
        | Error::RequiresStrongLimit(_)
        | Error::DimensionMismatch(_)
        | Error::GellMannIndex(_) => EXIT_INVALID_CONFIG,
        _ => EXIT_CHECK_FAILED,
    }
}

/// One line of the verification report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    fn new(name: &str, deviation: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            deviation,
            tolerance,
            passed: deviation <= tolerance,
            note: None,
        }
    }

    fn failed(name: &str, tolerance: f64, err: &Error) -> Self {
        let deviation = match err {
            Error::PathMismatch { deviation, .. } => *deviation,
            Error::Leakage { leakage, .. } => *leakage,
            _ => f64::INFINITY,
        };
        Check {
            name: name.into(),
            deviation,
            tolerance,
            passed: false,
            note: Some(err.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub quanta_bound: usize,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            EXIT_OK
        } else {
            EXIT_CHECK_FAILED
        }
    }
}

/// Closed form of the composed S-matrix used by the two-path check.
pub type ClosedForm = fn(&CycleParams, &ProductSpace) -> Result<Operator>;

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |a, b| {
        if b.is_nan() || a.is_nan() {
            f64::NAN
        } else {
            a.max(b)
        }
    })
}

fn entry_deviation(a: &Operator, b: &Operator) -> f64 {
    max_of((a.matrix() - b.matrix()).iter().map(|z| z.norm()))
}

struct Suite {
    checks: Vec<Check>,
}

impl Suite {
    fn run(&mut self, name: &str, tolerance: f64, f: impl FnOnce() -> Result<f64>) {
        self.checks.push(match f() {
            Ok(d) => Check::new(name, d, tolerance),
            Err(e) => Check::failed(name, tolerance, &e),
        });
    }
}

fn random_retained_state(
    rng: &mut ChaCha8Rng,
    space: &ProductSpace,
    quanta_bound: usize,
) -> CVector {
    let mut v = CVector::zeros(space.dim());
    for i in space.retained(quanta_bound) {
        v[i] = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    }
    v.normalize()
}

/// Runs the verification suite with the library's closed-form S-matrix.
pub fn verify(cfg: &RunConfig) -> VerifyReport {
    verify_with(cfg, crate::pulse::closed_form_cycle)
}

/// Runs the verification suite with a caller-supplied closed form for the
/// composed S-matrix.
pub fn verify_with(cfg: &RunConfig, closed_form: ClosedForm) -> VerifyReport {
    let qb = cfg.quanta_bound;
    let tol = cfg.tolerances;
    let finite = CycleParams {
        pulse_mode: PulseMode::Finite,
        ..cfg.params
    };
    let strong = CycleParams {
        pulse_mode: PulseMode::StrongLimit,
        ..cfg.params
    };
    let mut suite = Suite { checks: Vec::new() };

    // oracle comparisons at the configured point plus a few seeded draws
    let oracle_qb = qb.min(6);
    let space_o = ProductSpace::for_quanta_bound(oracle_qb);
    let keep_o = space_o.retained(oracle_qb);
    let mut points = vec![finite];
    points.extend(parameter_draws(cfg.seed, 4, PulseMode::Finite));
    for phase in Phase::ALL {
        suite.run(&format!("oracle phase {phase}"), tol.oracle, || {
            let mut worst: f64 = 0.0;
            for p in &points {
                let spec = PhaseSpec::from_params(phase, p);
                let oracle = oracle_smatrix(&spec, p, &space_o)?;
                let analytic = analytic_smatrix(phase, p, &space_o);
                worst = worst.max(
                    oracle
                        .compress(&keep_o)
                        .distance(&analytic.compress(&keep_o)),
                );
            }
            Ok(worst)
        });
    }
    suite.run("quarter-period pulse closed forms", CLOSED_FORM_TOLERANCE, || {
        let p = CycleParams {
            tau_a: None,
            tau_b: None,
            ..finite
        };
        let space = ProductSpace::for_quanta_bound(0);
        let a = active_smatrix(&PhaseSpec::from_params(Phase::PulseA, &p), &p, &space)?;
        let b = active_smatrix(&PhaseSpec::from_params(Phase::PulseB, &p), &p, &space)?;
        Ok(entry_deviation(&a, &quarter_period_s2a(&p)).max(entry_deviation(&b, &quarter_period_s2b(&p))))
    });
    suite.run("strong-limit convergence (worst decade ratio)", 0.5, || {
        let scaled = CycleParams {
            eps_a: if strong.eps_a == 0.0 {
                1.0
            } else {
                strong.eps_a
            },
            eps_b: if strong.eps_b == 0.0 {
                1.0
            } else {
                strong.eps_b
            },
            ..strong
        };
        let sweep = strong_limit_sweep(&scaled, 5);
        Ok(max_of(sweep.windows(2).map(|w| w[1].1 / w[0].1)))
    });

    let space = ProductSpace::for_quanta_bound(qb);
    let keep = space.retained(qb);
    let product = product_cycle(&strong, &space);
    suite.run("composed S two paths", tol.operator, || {
        let closed = closed_form(&strong, &space)?;
        Ok(product.compress(&keep).distance(&closed.compress(&keep)))
    });
    suite.run("ground state fixed", 1e-12, || {
        let g = space.basis_vector(0, EngineLevel::G, 0);
        Ok((product.apply(&g) - &g).norm())
    });
    suite.run("sector leakage", tol.operator, || {
        Ok(max_of((0..=qb).map(|n| {
            leakage(&product, &sector_basis(n, &space).unwrap())
        })))
    });
    suite.run("sector unitarity", tol.operator, || {
        let mut worst: f64 = 0.0;
        for n in 0..=qb {
            let b = sector_basis(n, &space)?;
            let blk = project(&product, &b);
            let id = Operator::identity(blk.signature().to_vec());
            worst = worst.max((&blk.adjoint() * &blk).distance(&id));
            for z in sector_spectrum(&product, &b)? {
                worst = worst.max((z.norm() - 1.0).abs());
            }
        }
        Ok(worst)
    });

    match transfer_operator(&strong, qb) {
        Ok(d) => {
            suite
                .checks
                .push(Check::new("D two paths", d.path_deviation, tol.operator));
            suite.run("D spectrum closed form", tol.operator, || {
                let mut worst: f64 = 0.0;
                for n in 0..qb {
                    let (vals, _) = eigh(&d.block(n, 0)?)?;
                    let r = transfer_spectrum(n, &strong).rho_plus.abs();
                    worst = worst.max((vals[0] + r).abs()).max((vals[1] - r).abs());
                }
                Ok(worst)
            });
            suite.run("D annihilates |0,g>", tol.operator, || {
                Ok(d.operator
                    .apply(&space.basis_vector(0, EngineLevel::G, 0))
                    .norm())
            });
        }
        Err(e) => suite
            .checks
            .push(Check::failed("D two paths", tol.operator, &e)),
    }
    suite.run("S_eff chain", tol.operator, || {
        let (a, b) = effective_consistency(&strong, qb)?;
        Ok(a.max(b))
    });
    match work_operators(&strong, qb) {
        Ok(w) => {
            suite.checks.push(Check::new(
                "work operators closed forms",
                max_of(w.deviations),
                tol.operator,
            ));
            suite.run("pulse work spectrum", tol.operator, || {
                let sum = w.pulse_work();
                let mut worst: f64 = 0.0;
                for n in 0..qb {
                    let (vals, _) = eigh(&warm_doublet_block(&sum, &space, 0, n))?;
                    let (hi, lo) = pulse_work_spectrum(n, &strong).eigenvalues();
                    worst = worst
                        .max((vals[0] - hi.min(lo)).abs())
                        .max((vals[1] - hi.max(lo)).abs());
                }
                Ok(worst)
            });
            suite.run("energy bookkeeping", tol.oracle, || {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                let psi = random_retained_state(&mut rng, &space, qb);
                Ok(energy_bookkeeping(&strong, &w, &psi)?.residual())
            });
        }
        Err(e) => suite.checks.push(Check::failed(
            "work operators closed forms",
            tol.operator,
            &e,
        )),
    }
    suite.run("valve identities", 1e-12, || {
        let d = valve_identity_defects(&strong, FockCutoff::new(20));
        Ok(max_of([d.raised, d.lowered, d.warm_sum, d.warm_resolution]))
    });
    suite.run("table 1", 0.0, || {
        let flows = classify_flows()?;
        Ok(flows
            .iter()
            .zip(reference_flows())
            .filter(|(a, b)| **a != *b)
            .count() as f64)
    });

    match Simulation::new(&strong, qb).and_then(|sim| {
        let s0 = make_initial_state(&cfg.initial, &strong, qb)?;
        Ok((sim.run(&s0, cfg.n_cycles)?, s0))
    }) {
        Ok((records, _)) => {
            let first = records[0];
            suite.checks.push(Check::new(
                "trajectory norm drift",
                max_of(records.iter().map(|r| (r.norm - first.norm).abs())),
                tol.drift,
            ));
            suite.checks.push(Check::new(
                "trajectory quanta drift",
                max_of(records.iter().map(|r| (r.quanta - first.quanta).abs())),
                tol.drift,
            ));
            let dims = [space.cold.dim() as f64, 3.0, space.warm.dim() as f64];
            let violation = max_of(records.iter().flat_map(|r| {
                [r.entropy_cold, r.entropy_engine, r.entropy_warm]
                    .into_iter()
                    .zip(dims)
                    .map(|(s, d)| (-s).max(s - d.ln()).max(0.0))
            }));
            suite
                .checks
                .push(Check::new("entropy bounds", violation, 1e-12));
            if matches!(cfg.initial, InitialSpec::Product(_)) {
                let s0 = first.entropy_cold + first.entropy_engine + first.entropy_warm;
                suite
                    .checks
                    .push(Check::new("product state entropy at cycle 0", s0, 1e-12));
            }
        }
        Err(e) => suite
            .checks
            .push(Check::failed("trajectory", tol.drift, &e)),
    }
    VerifyReport {
        quanta_bound: qb,
        checks: suite.checks,
    }
}

/// One row of `spectrum`: closed-form data of Fock index / sector `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub n: usize,
    pub lambda: f64,
    pub theta: f64,
    pub xi: f64,
    pub phi: f64,
    pub rho_plus: f64,
    pub rho_minus: f64,
    pub work_plus: f64,
    pub work_minus: f64,
    /// Eigenphases of the composed S-matrix on `H_n`, ascending.
    pub sector_phases: Vec<f64>,
}

impl SpectrumRow {
    pub const HEADER: [&'static str; 10] = [
        "n[1]",
        "lambda[energy]",
        "theta[rad]",
        "xi[energy]",
        "phi[rad]",
        "rho_plus[quanta]",
        "rho_minus[quanta]",
        "work_plus[energy]",
        "work_minus[energy]",
        "sector_phases[rad]",
    ];

    pub fn to_csv(&self) -> String {
        let phases: Vec<String> = self
            .sector_phases
            .iter()
            .map(|p| format!("{p:?}"))
            .collect();
        format!(
            "{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{}",
            self.n,
            self.lambda,
            self.theta,
            self.xi,
            self.phi,
            self.rho_plus,
            self.rho_minus,
            self.work_plus,
            self.work_minus,
            phases.join(";")
        )
    }

    pub fn from_csv(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.trim_end().split(',').collect();
        if f.len() != 10 {
            return Err(Error::Config(format!(
                "spectrum row has {} fields",
                f.len()
            )));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Config(format!("bad number '{s}'")))
        };
        Ok(SpectrumRow {
            n: f[0]
                .parse()
                .map_err(|_| Error::Config(format!("bad index '{}'", f[0])))?,
            lambda: num(f[1])?,
            theta: num(f[2])?,
            xi: num(f[3])?,
            phi: num(f[4])?,
            rho_plus: num(f[5])?,
            rho_minus: num(f[6])?,
            work_plus: num(f[7])?,
            work_minus: num(f[8])?,
            sector_phases: if f[9].is_empty() {
                Vec::new()
            } else {
                f[9].split(';').map(num).collect::<Result<_>>()?
            },
        })
    }
}

pub fn spectrum_rows(params: &CycleParams, quanta_bound: usize) -> Result<Vec<SpectrumRow>> {
    if params.pulse_mode != PulseMode::StrongLimit {
        return Err(Error::RequiresStrongLimit("sector spectra"));
    }
    let cycle = crate::pulse::compose_cycle(params, quanta_bound)?;
    (0..=quanta_bound)
        .map(|n| {
            let cold = dressed_coefficients(Side::Cold, n, params);
            let warm = dressed_coefficients(Side::Warm, n, params);
            let t = transfer_spectrum(n, params);
            let (work_plus, work_minus) = pulse_work_spectrum(n, params).eigenvalues();
            let mut sector_phases: Vec<f64> =
                sector_spectrum(&cycle.operator, &sector_basis(n, &cycle.space)?)?
                    .into_iter()
                    .map(|z| z.arg())
                    .collect();
            sector_phases.sort_by(f64::total_cmp);
            Ok(SpectrumRow {
                n,
                lambda: cold.half_splitting,
                theta: cold.angle,
                xi: warm.half_splitting,
                phi: warm.angle,
                rho_plus: t.rho_plus,
                rho_minus: t.rho_minus,
                work_plus,
                work_minus,
                sector_phases,
            })
        })
        .collect()
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_report(report: &VerifyReport, format: Option<Format>, out: &mut dyn Write) -> Result<()> {
    match format {
        Some(Format::Json) => {
            serde_json::to_writer_pretty(&mut *out, report)?;
            writeln!(out)?;
        }
        Some(Format::Csv) => {
            writeln!(out, "check,deviation[1],tolerance[1],passed")?;
            for c in &report.checks {
                writeln!(
                    out,
                    "{},{:?},{:?},{}",
                    c.name, c.deviation, c.tolerance, c.passed
                )?;
            }
        }
        None => {
            for c in &report.checks {
                writeln!(
                    out,
                    "{} {:<46} deviation {:>10.3e}  tolerance {:>8.1e}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.deviation,
                    c.tolerance
                )?;
                if let Some(n) = &c.note {
                    writeln!(out, "     {n}")?;
                }
            }
        }
    }
    Ok(())
}

fn write_flows(flows: &[FlowLabel], format: Option<Format>, out: &mut dyn Write) -> Result<()> {
    match format {
        Some(Format::Json) => {
            #[derive(Serialize)]
            struct Row<'a> {
                term: &'a str,
                cold: &'a str,
                warm: &'a str,
            }
            let rows: Vec<Row> = flows
                .iter()
                .map(|f| {
                    let (cold, warm) = f.arrows();
                    Row {
                        term: f.term,
                        cold,
                        warm,
                    }
                })
                .collect();
            serde_json::to_writer_pretty(&mut *out, &rows)?;
            writeln!(out)?;
        }
        Some(Format::Csv) => {
            writeln!(out, "term,cold,warm")?;
            for f in flows {
                let (c, w) = f.arrows();
                writeln!(out, "{},{c},{w}", f.term)?;
            }
        }
        None => {
            for f in flows {
                writeln!(out, "{f}")?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulationMetadata<'a> {
    params: &'a CycleParams,
    quanta_bound: usize,
    cycles: usize,
    initial: String,
    units: &'static str,
    entropy_log_base: &'static str,
}

fn cmd_simulate(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let sim = Simulation::new(&cfg.params, cfg.quanta_bound)?;
    let s0 = make_initial_state(&cfg.initial, &cfg.params, cfg.quanta_bound)?;
    let records = sim.run(&s0, cfg.n_cycles)?;
    match cfg.format.unwrap_or(Format::Csv) {
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                metadata: SimulationMetadata<'a>,
                records: &'a [crate::simulate::CycleRecord],
            }
            let doc = Doc {
                metadata: SimulationMetadata {
                    params: &cfg.params,
                    quanta_bound: cfg.quanta_bound,
                    cycles: cfg.n_cycles,
                    initial: cfg.initial.to_string(),
                    units: "hbar = 1",
                    entropy_log_base: "e",
                },
                records: &records,
            };
            serde_json::to_writer_pretty(&mut *out, &doc)?;
            writeln!(out)?;
        }
        Format::Csv => {
            let header: Vec<String> = crate::simulate::CycleRecord::COLUMNS
                .iter()
                .map(|(n, u)| format!("{n}[{u}]"))
                .collect();
            writeln!(out, "{}", header.join(","))?;
            for r in &records {
                let vals: Vec<String> = r
                    .values()
                    .iter()
                    .enumerate()
                    .map(|(i, v)| {
                        if i == 0 {
                            format!("{}", r.cycle)
                        } else {
                            format!("{v:?}")
                        }
                    })
                    .collect();
                writeln!(out, "{}", vals.join(","))?;
            }
        }
    }
    Ok(())
}

fn cmd_spectrum(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let rows = spectrum_rows(&cfg.params, cfg.quanta_bound)?;
    match cfg.format.unwrap_or(Format::Csv) {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, &rows)?;
            writeln!(out)?;
        }
        Format::Csv => {
            writeln!(out, "{}", SpectrumRow::HEADER.join(","))?;
            for r in &rows {
                writeln!(out, "{}", r.to_csv())?;
            }
        }
    }
    Ok(())
}

/// Runs one command and returns its exit status. Diagnostics go to `err`.
pub fn execute(command: Command, cfg: &RunConfig, err: &mut dyn Write) -> i32 {
    let result = (|| -> Result<i32> {
        let mut out = open_output(cfg.out.as_deref())?;
        let code = match command {
            Command::Verify => {
                let report = verify(cfg);
                write_report(&report, cfg.format, &mut *out)?;
                if let Some(c) = report.first_failure() {
                    writeln!(err, "check failed: {}", c.name)?;
                }
                report.exit_code()
            }
            Command::Spectrum => {
                cmd_spectrum(cfg, &mut *out)?;
                EXIT_OK
            }
            Command::Simulate => {
                cmd_simulate(cfg, &mut *out)?;
                EXIT_OK
            }
            Command::Table1 => {
                let flows = classify_flows()?;
                write_flows(&flows, cfg.format, &mut *out)?;
                let reference = reference_flows();
                match flows.iter().zip(&reference).find(|(a, b)| a != b) {
                    Some((got, want)) => {
                        writeln!(err, "table 1 mismatch: computed {got}, expected {want}")?;
                        EXIT_CHECK_FAILED
                    }
                    None if flows.len() != reference.len() => EXIT_CHECK_FAILED,
                    None => EXIT_OK,
                }
            }
        };
        out.flush()?;
        Ok(code)
    })();
    result.unwrap_or_else(|e| {
        let _ = writeln!(err, "error: {e}");
        exit_code(&e)
    })
}

/// Parses `args` (program name first) and runs the selected command.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_INVALID_CONFIG
            } else {
                EXIT_OK
            };
        }
    };
    let mut stderr = io::stderr().lock();
    match RunConfig::from_args(&cli.args) {
        Ok(cfg) => execute(cli.command, &cfg, &mut stderr),
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_INVALID_CONFIG
        }
    }
}
