//! Physical and pulse parameters of one engine cycle (units with ħ = 1).

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseMode {
    /// Square pulses of finite field strength.
    Finite,
    /// Infinitely strong, infinitely short pulses.
    StrongLimit,
}

impl fmt::Display for PulseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PulseMode::Finite => "finite",
            PulseMode::StrongLimit => "strong_limit",
        })
    }
}

impl FromStr for PulseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "finite" => Ok(PulseMode::Finite),
            "strong_limit" | "strong" => Ok(PulseMode::StrongLimit),
            other => Err(Error::InvalidParameter(format!(
                "unknown pulse mode '{other}'"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleParams {
    /// Cold oscillator frequency.
    pub omega1: f64,
    /// Warm oscillator frequency.
    pub omega3: f64,
    /// Engine levels sit at `-μ, μ, μ + 2δ`.
    pub mu: f64,
    pub delta: f64,
    /// Cold valve coupling.
    pub kappa12: f64,
    /// Warm valve coupling.
    pub kappa23: f64,
    /// Cold contact duration.
    pub tau1: f64,
    /// Warm contact duration.
    pub tau3: f64,
    /// Field of the pulse driving `e ↔ f`.
    pub eps_a: f64,
    /// Field of the pulse driving `g ↔ e`.
    pub eps_b: f64,
    /// Pulse durations; `None` selects the quarter period `½πT`.
    pub tau_a: Option<f64>,
    pub tau_b: Option<f64>,
    pub pulse_mode: PulseMode,
}

impl Default for CycleParams {
    fn default() -> Self {
        CycleParams {
            omega1: 2.0,
            omega3: 1.6,
            mu: 0.7,
            delta: 0.45,
            kappa12: 0.3,
            kappa23: 0.4,
            tau1: 1.5,
            tau3: 2.0,
            eps_a: 5.0,
            eps_b: 5.0,
            tau_a: None,
            tau_b: None,
            pulse_mode: PulseMode::StrongLimit,
        }
    }
}

impl CycleParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("omega1", self.omega1),
            ("omega3", self.omega3),
            ("mu", self.mu),
            ("delta", self.delta),
            ("kappa12", self.kappa12),
            ("kappa23", self.kappa23),
            ("tau1", self.tau1),
            ("tau3", self.tau3),
            ("eps_a", self.eps_a),
            ("eps_b", self.eps_b),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {v} is not finite"
                )));
            }
        }
        for (name, v) in [
            ("tau1", Some(self.tau1)),
            ("tau3", Some(self.tau3)),
            ("tau_a", self.tau_a),
            ("tau_b", self.tau_b),
        ] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "duration {name} = {v} must be >= 0"
                    )));
                }
            }
        }
        if self.pulse_mode == PulseMode::Finite {
            if self.delta == 0.0 && self.eps_a == 0.0 {
                return Err(Error::InvalidParameter(
                    "pulse a has zero Rabi frequency".into(),
                ));
            }
            if self.mu == 0.0 && self.eps_b == 0.0 {
                return Err(Error::InvalidParameter(
                    "pulse b has zero Rabi frequency".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn with_mode(mut self, mode: PulseMode) -> Self {
        self.pulse_mode = mode;
        self
    }

    /// `ω1 - 2μ`, zero at cold resonance.
    pub fn cold_detuning(&self) -> f64 {
        self.omega1 - 2.0 * self.mu
    }

    /// `ω3 - 2δ`, zero at warm resonance.
    pub fn warm_detuning(&self) -> f64 {
        self.omega3 - 2.0 * self.delta
    }

    /// `T_a = 1/√(δ² + ε_a²)`
    pub fn period_a(&self) -> f64 {
        1.0 / self.delta.hypot(self.eps_a)
    }

    /// `T_b = 1/√(μ² + ε_b²)`
    pub fn period_b(&self) -> f64 {
        1.0 / self.mu.hypot(self.eps_b)
    }

    pub fn pulse_a_duration(&self) -> f64 {
        self.tau_a.unwrap_or(FRAC_PI_2 * self.period_a())
    }

    pub fn pulse_b_duration(&self) -> f64 {
        self.tau_b.unwrap_or(FRAC_PI_2 * self.period_b())
    }

    /// Whether both pulses last exactly a quarter period.
    pub fn quarter_period_pulses(&self) -> bool {
        let qa = FRAC_PI_2 * self.period_a();
        let qb = FRAC_PI_2 * self.period_b();
        (self.pulse_a_duration() - qa).abs() <= 1e-15 * qa.max(1.0)
            && (self.pulse_b_duration() - qb).abs() <= 1e-15 * qb.max(1.0)
    }

    /// Looks up a field by its config key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let num = || -> Result<f64> {
            value
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("{key}: '{value}' is not a number")))
        };
        match key {
            "omega1" => self.omega1 = num()?,
            "omega3" => self.omega3 = num()?,
            "mu" => self.mu = num()?,
            "delta" => self.delta = num()?,
            "kappa12" => self.kappa12 = num()?,
            "kappa23" => self.kappa23 = num()?,
            "tau1" => self.tau1 = num()?,
            "tau3" => self.tau3 = num()?,
            "eps_a" => self.eps_a = num()?,
            "eps_b" => self.eps_b = num()?,
            "tau_a" | "tau_b" => {
                // `none` selects the quarter-period pulse
                let v = if value.trim() == "none" {
                    None
                } else {
                    Some(num()?)
                };
                if key == "tau_a" {
                    self.tau_a = v;
                } else {
                    self.tau_b = v;
                }
            }
            "pulse_mode" => {
                self.pulse_mode = value
                    .parse()
                    .map_err(|e: Error| Error::Config(e.to_string()))?
            }
            _ => return Err(Error::Config(format!("unknown parameter '{key}'"))),
        }
        Ok(())
    }

    pub const KEYS: [&'static str; 13] = [
        "omega1",
        "omega3",
        "mu",
        "delta",
        "kappa12",
        "kappa23",
        "tau1",
        "tau3",
        "eps_a",
        "eps_b",
        "tau_a",
        "tau_b",
        "pulse_mode",
    ];
}
