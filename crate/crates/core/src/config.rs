//! Model configuration, regime presets and the system Hamiltonian.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bath::{BathSpec, Scheme};
use crate::error::{Error, Result};
use crate::qops::{sigma, Axis, ComplexOperator, DensityMatrix, C64};

/// Energy splitting `ε` and tunneling `Δ` of one qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Qubit {
    pub epsilon: f64,
    pub delta: f64,
}

/// Initial state of the two qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialState {
    /// `|11⟩`
    Ground,
    /// `|00⟩`
    Excited,
    /// `|++⟩`
    PlusPlus,
    /// Explicit 4×4 density matrix.
    Custom(ComplexOperator),
}

impl InitialState {
    pub fn density_matrix(&self) -> Result<DensityMatrix> {
        match self {
            InitialState::Ground => DensityMatrix::basis(4, 3),
            InitialState::Excited => DensityMatrix::basis(4, 0),
            InitialState::PlusPlus => DensityMatrix::pure(&[C64::new(0.5, 0.0); 4]),
            InitialState::Custom(op) => {
                if op.dim() != 4 {
                    return Err(Error::config("run.initial", "custom initial state must be 4x4"));
                }
                DensityMatrix::new(op.clone()).map_err(|e| Error::config("run.initial", e.to_string()))
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InitialState::Ground => "ground",
            InitialState::Excited => "excited",
            InitialState::PlusPlus => "plusplus",
            InitialState::Custom(_) => "custom",
        }
    }
}

/// Which backend(s) a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Heom,
    Rcm,
    Both,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Heom => "heom",
            Method::Rcm => "rcm",
            Method::Both => "both",
        })
    }
}

/// Discretization and solver settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Numerics {
    /// Bose-function terms per bath beyond the Drude pole.
    pub k: usize,
    pub scheme: Scheme,
    /// Hierarchy truncation tier.
    pub l: usize,
    /// Fock levels per reaction-coordinate mode.
    pub m: usize,
    /// Reaction-coordinate frequency in units of the bath cutoff.
    pub rc_ratio: f64,
    pub rtol: f64,
    pub atol: f64,
    pub rcm_rtol: f64,
    pub rcm_atol: f64,
    pub t_max: f64,
    pub dt: f64,
    /// Upper bound on the memory of hierarchy states and operators.
    pub memory_budget_mb: usize,
    /// Evaluate the HEOM right-hand side on the thread pool.
    pub parallel: bool,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            k: 4,
            scheme: Scheme::Pade,
            l: 6,
            m: 8,
            rc_ratio: 8.0,
            rtol: 1e-8,
            atol: 1e-10,
            rcm_rtol: 1e-8,
            rcm_atol: 1e-10,
            t_max: 30.0,
            dt: 0.05,
            memory_budget_mb: 4096,
            parallel: true,
        }
    }
}

impl Numerics {
    /// Output grid `0, dt, 2dt, …, t_max`.
    pub fn time_grid(&self) -> Vec<f64> {
        let n = (self.t_max / self.dt).round() as usize;
        let mut grid: Vec<f64> = (0..=n).map(|i| i as f64 * self.dt).collect();
        if let Some(last) = grid.last_mut() {
            if (*last - self.t_max).abs() < 1e-9 * self.t_max.max(1.0) {
                *last = self.t_max;
            }
        }
        grid
    }
}

/// The complete physical problem plus numerical settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub qubit1: Qubit,
    pub qubit2: Qubit,
    /// Inter-qubit XX+YY coupling.
    pub j: f64,
    pub bath1: BathSpec,
    pub bath2: BathSpec,
    pub initial: InitialState,
    pub method: Method,
    pub numerics: Numerics,
}

/// Named parameter sets.
pub const PRESETS: [&str; 9] = [
    "WWW", "WSW", "SWS", "SSS", "figure2", "ness-WWW", "ness-WSW", "ness-SWS", "ness-SSS",
];

impl ModelConfig {
    /// Looks up a preset by name (case-sensitive for the regime letters).
    pub fn preset(name: &str) -> Result<Self> {
        let weak = 0.05 / PI;
        let strong = 2.5 / PI;
        let (ness, regime) = match name.strip_prefix("ness-") {
            Some(r) => (true, r),
            None => (false, name),
        };
        if regime == "figure2" && !ness {
            let a = 0.2 / PI;
            return Ok(Self {
                qubit1: Qubit { epsilon: 0.5, delta: 1.0 },
                qubit2: Qubit { epsilon: 0.4, delta: 1.0 },
                j: 0.1 / PI,
                bath1: BathSpec { alpha: a, cutoff: 0.05, temperature: 1.04 },
                bath2: BathSpec { alpha: a, cutoff: 0.10, temperature: 1.39 },
                initial: InitialState::Excited,
                method: Method::Both,
                numerics: Numerics::default(),
            });
        }
        let (bath_strong, j_strong) = match regime {
            "WWW" => (false, false),
            "WSW" => (false, true),
            "SWS" => (true, false),
            "SSS" => (true, true),
            _ => {
                return Err(Error::config(
                    "preset",
                    format!("unknown preset `{name}`; known presets: {}", PRESETS.join(", ")),
                ))
            }
        };
        let (w, s) = if ness { (0.01 / PI, 1.5 / PI) } else { (weak, strong) };
        let alpha = if bath_strong { s } else { w };
        let j = if j_strong { s } else { w };
        let (t1, t2) = if ness { (1.0, 1.39) } else { (1.04, 1.39) };
        Ok(Self {
            qubit1: Qubit { epsilon: 1.0, delta: 2.0 },
            qubit2: Qubit { epsilon: 0.75, delta: 1.6 },
            j,
            bath1: BathSpec { alpha, cutoff: 0.10, temperature: t1 },
            bath2: BathSpec { alpha, cutoff: 0.16, temperature: t2 },
            initial: InitialState::Excited,
            method: Method::Heom,
            numerics: Numerics::default(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |key: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(key, format!("value must be finite, got {v}")))
            }
        };
        finite("system.epsilon1", self.qubit1.epsilon)?;
        finite("system.delta1", self.qubit1.delta)?;
        finite("system.epsilon2", self.qubit2.epsilon)?;
        finite("system.delta2", self.qubit2.delta)?;
        finite("system.J", self.j)?;
        for (name, b) in [("bath1", &self.bath1), ("bath2", &self.bath2)] {
            finite(&format!("{name}.alpha"), b.alpha)?;
            finite(&format!("{name}.cutoff"), b.cutoff)?;
            finite(&format!("{name}.temperature"), b.temperature)?;
            if b.alpha < 0.0 {
                return Err(Error::config(format!("{name}.alpha"), "coupling must be >= 0"));
            }
            if b.cutoff <= 0.0 {
                return Err(Error::config(format!("{name}.cutoff"), "cutoff must be > 0"));
            }
            if b.temperature <= 0.0 {
                return Err(Error::config(format!("{name}.temperature"), "temperature must be > 0"));
            }
        }
        let n = &self.numerics;
        let positive = |key: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(key, format!("value must be finite and > 0, got {v}")))
            }
        };
        positive("numerics.rtol", n.rtol)?;
        positive("numerics.atol", n.atol)?;
        positive("numerics.rcm_rtol", n.rcm_rtol)?;
        positive("numerics.rcm_atol", n.rcm_atol)?;
        positive("numerics.rc_ratio", n.rc_ratio)?;
        positive("run.t_max", n.t_max)?;
        positive("run.dt", n.dt)?;
        if n.dt > n.t_max {
            return Err(Error::config("run.dt", "time step exceeds t_max"));
        }
        if n.m < 2 {
            return Err(Error::config("numerics.M", "at least 2 Fock levels are required"));
        }
        if n.memory_budget_mb == 0 {
            return Err(Error::config("numerics.memory_budget_mb", "budget must be positive"));
        }
        self.initial.density_matrix()?;
        Ok(())
    }

    pub fn equal_temperatures(&self) -> bool {
        self.bath1.temperature == self.bath2.temperature
    }

    pub fn memory_budget_bytes(&self) -> usize {
        self.numerics.memory_budget_mb.saturating_mul(1 << 20)
    }

    /// Sets one value by its `section.key` path, as used in config files.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let num = || parse_real(key, value);
        let int = || {
            value
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::config(key, format!("expected a non-negative integer, got `{value}`")))
        };
        match key {
            "system.epsilon1" => self.qubit1.epsilon = num()?,
            "system.delta1" => self.qubit1.delta = num()?,
            "system.epsilon2" => self.qubit2.epsilon = num()?,
            "system.delta2" => self.qubit2.delta = num()?,
            "system.J" => self.j = num()?,
            "bath1.alpha" => self.bath1.alpha = num()?,
            "bath1.cutoff" => self.bath1.cutoff = num()?,
            "bath1.temperature" => self.bath1.temperature = num()?,
            "bath2.alpha" => self.bath2.alpha = num()?,
            "bath2.cutoff" => self.bath2.cutoff = num()?,
            "bath2.temperature" => self.bath2.temperature = num()?,
            "numerics.K" => self.numerics.k = int()?,
            "numerics.scheme" => {
                self.numerics.scheme = value.trim().parse().map_err(|e: Error| Error::config(key, e.to_string()))?
            }
            "numerics.L" => self.numerics.l = int()?,
            "numerics.M" => self.numerics.m = int()?,
            "numerics.rc_ratio" => self.numerics.rc_ratio = num()?,
            "numerics.rtol" => self.numerics.rtol = num()?,
            "numerics.atol" => self.numerics.atol = num()?,
            "numerics.rcm_rtol" => self.numerics.rcm_rtol = num()?,
            "numerics.rcm_atol" => self.numerics.rcm_atol = num()?,
            "numerics.memory_budget_mb" => self.numerics.memory_budget_mb = int()?,
            "numerics.parallel" => {
                self.numerics.parallel = match value.trim() {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    _ => return Err(Error::config(key, format!("expected a boolean, got `{value}`"))),
                }
            }
            "run.t_max" => self.numerics.t_max = num()?,
            "run.dt" => self.numerics.dt = num()?,
            "run.method" => {
                self.method = match value.trim() {
                    "heom" => Method::Heom,
                    "rcm" => Method::Rcm,
                    "both" => Method::Both,
                    _ => return Err(Error::config(key, format!("expected heom, rcm or both, got `{value}`"))),
                }
            }
            "run.initial" => {
                self.initial = match value.trim() {
                    "ground" => InitialState::Ground,
                    "excited" => InitialState::Excited,
                    "plusplus" => InitialState::PlusPlus,
                    other => {
                        // custom: 16 real parts then optionally 16 imaginary parts, row-major
                        let vals: Vec<f64> = other
                            .split(|c: char| c == ',' || c.is_whitespace())
                            .filter(|s| !s.is_empty())
                            .map(|s| parse_real(key, s))
                            .collect::<Result<_>>()?;
                        let entries: Vec<C64> = match vals.len() {
                            16 => vals.iter().map(|&r| C64::new(r, 0.0)).collect(),
                            32 => (0..16).map(|i| C64::new(vals[i], vals[16 + i])).collect(),
                            _ => {
                                return Err(Error::config(
                                    key,
                                    "expected ground, excited, plusplus, or 16 (real) or 32 (real then imaginary) numbers",
                                ))
                            }
                        };
                        let op = ComplexOperator::from_row_major(4, entries)
                            .map_err(|e| Error::config(key, e.to_string()))?;
                        InitialState::Custom(op)
                    }
                }
            }
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    /// Current value of a key rendered as a string (inverse of [`set`](Self::set)).
    pub fn get(&self, key: &str) -> Result<String> {
        let n = &self.numerics;
        Ok(match key {
            "system.epsilon1" => fmt_real(self.qubit1.epsilon),
            "system.delta1" => fmt_real(self.qubit1.delta),
            "system.epsilon2" => fmt_real(self.qubit2.epsilon),
            "system.delta2" => fmt_real(self.qubit2.delta),
            "system.J" => fmt_real(self.j),
            "bath1.alpha" => fmt_real(self.bath1.alpha),
            "bath1.cutoff" => fmt_real(self.bath1.cutoff),
            "bath1.temperature" => fmt_real(self.bath1.temperature),
            "bath2.alpha" => fmt_real(self.bath2.alpha),
            "bath2.cutoff" => fmt_real(self.bath2.cutoff),
            "bath2.temperature" => fmt_real(self.bath2.temperature),
            "numerics.K" => n.k.to_string(),
            "numerics.scheme" => n.scheme.to_string(),
            "numerics.L" => n.l.to_string(),
            "numerics.M" => n.m.to_string(),
            "numerics.rc_ratio" => fmt_real(n.rc_ratio),
            "numerics.rtol" => fmt_real(n.rtol),
            "numerics.atol" => fmt_real(n.atol),
            "numerics.rcm_rtol" => fmt_real(n.rcm_rtol),
            "numerics.rcm_atol" => fmt_real(n.rcm_atol),
            "numerics.memory_budget_mb" => n.memory_budget_mb.to_string(),
            "numerics.parallel" => n.parallel.to_string(),
            "run.t_max" => fmt_real(n.t_max),
            "run.dt" => fmt_real(n.dt),
            "run.method" => self.method.to_string(),
            "run.initial" => match &self.initial {
                InitialState::Custom(op) => {
                    let re: Vec<String> = op.as_slice().iter().map(|z| fmt_real(z.re)).collect();
                    let im: Vec<String> = op.as_slice().iter().map(|z| fmt_real(z.im)).collect();
                    format!("{} {}", re.join(" "), im.join(" "))
                }
                other => other.name().to_string(),
            },
            _ => return Err(Error::config(key, "unknown key")),
        })
    }
}

/// Every key accepted by [`ModelConfig::set`], in file order.
pub const CONFIG_KEYS: [&str; 26] = [
    "system.epsilon1",
    "system.delta1",
    "system.epsilon2",
    "system.delta2",
    "system.J",
    "bath1.alpha",
    "bath1.cutoff",
    "bath1.temperature",
    "bath2.alpha",
    "bath2.cutoff",
    "bath2.temperature",
    "numerics.K",
    "numerics.scheme",
    "numerics.L",
    "numerics.M",
    "numerics.rc_ratio",
    "numerics.rtol",
    "numerics.atol",
    "numerics.rcm_rtol",
    "numerics.rcm_atol",
    "numerics.memory_budget_mb",
    "numerics.parallel",
    "run.t_max",
    "run.dt",
    "run.method",
    "run.initial",
];

fn fmt_real(v: f64) -> String {
    // shortest representation that round-trips
    format!("{v:?}")
}

/// Parses a real number, also accepting `x/pi`, `x*pi` and `pi`.
pub fn parse_real(key: &str, value: &str) -> Result<f64> {
    let s = value.trim();
    let bad = || Error::config(key, format!("expected a number, got `{value}`"));
    let v = if s == "pi" {
        PI
    } else if let Some(x) = s.strip_suffix("/pi") {
        x.trim().parse::<f64>().map_err(|_| bad())? / PI
    } else if let Some(x) = s.strip_suffix("*pi") {
        x.trim().parse::<f64>().map_err(|_| bad())? * PI
    } else {
        s.parse::<f64>().map_err(|_| bad())?
    };
    if !v.is_finite() {
        return Err(Error::config(key, format!("value must be finite, got `{value}`")));
    }
    Ok(v)
}

/// `ε_i/2 σ_z^{(i)} + Δ_i/2 σ_x^{(i)}` for qubit `site` (1 or 2).
pub fn qubit_hamiltonian(cfg: &ModelConfig, site: usize) -> ComplexOperator {
    let q = if site == 1 { cfg.qubit1 } else { cfg.qubit2 };
    let z = sigma(Axis::Z, site).scale(C64::new(0.5 * q.epsilon, 0.0));
    let x = sigma(Axis::X, site).scale(C64::new(0.5 * q.delta, 0.0));
    &z + &x
}

/// `J (σ_x σ_x + σ_y σ_y)`
pub fn interaction_hamiltonian(cfg: &ModelConfig) -> ComplexOperator {
    let xx = sigma(Axis::X, 1).matmul(&sigma(Axis::X, 2));
    let yy = sigma(Axis::Y, 1).matmul(&sigma(Axis::Y, 2));
    (&xx + &yy).scale(C64::new(cfg.j, 0.0))
}

/// `H_S = Σᵢ (εᵢ/2 σ_z^{(i)} + Δᵢ/2 σ_x^{(i)}) + J(σ_x^{(1)}σ_x^{(2)} + σ_y^{(1)}σ_y^{(2)})`
pub fn build_system_hamiltonian(cfg: &ModelConfig) -> ComplexOperator {
    let h = &qubit_hamiltonian(cfg, 1) + &qubit_hamiltonian(cfg, 2);
    &h + &interaction_hamiltonian(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qops::hermitian_eigenvalues;

    fn zero_model() -> ModelConfig {
        let mut cfg = ModelConfig::preset("WWW").unwrap();
        cfg.qubit1 = Qubit { epsilon: 0.0, delta: 0.0 };
        cfg.qubit2 = Qubit { epsilon: 0.0, delta: 0.0 };
        cfg.j = 0.0;
        cfg
    }

    #[test]
    fn zero_parameters_give_zero_hamiltonian() {
        assert_eq!(build_system_hamiltonian(&zero_model()).max_abs(), 0.0);
    }

    #[test]
    fn epsilon1_only() {
        let mut cfg = zero_model();
        cfg.qubit1.epsilon = 2.0;
        let h = build_system_hamiltonian(&cfg);
        let expected = ComplexOperator::diagonal(&[1.0, 1.0, -1.0, -1.0].map(|x| C64::new(x, 0.0)));
        assert_eq!(h, expected);
    }

    #[test]
    fn hamiltonian_is_real_symmetric() {
        let h = build_system_hamiltonian(&ModelConfig::preset("figure2").unwrap());
        assert!(h.is_hermitian(0.0));
        assert!(h.as_slice().iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn figure2_spectrum() {
        // frozen from an independent dense eigensolver
        let h = build_system_hamiltonian(&ModelConfig::preset("figure2").unwrap());
        let ev = hermitian_eigenvalues(&h).unwrap();
        let expected = [
            -1.0716778615538938,
            -0.06886230096473389,
            0.01598932744699987,
            1.1245508350716276,
        ];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{ev:?}");
        }
    }

    #[test]
    fn presets() {
        let www = ModelConfig::preset("WWW").unwrap();
        assert_eq!(www.bath1.temperature, 1.04);
        assert_eq!(www.bath2.temperature, 1.39);
        assert_eq!(www.qubit1, Qubit { epsilon: 1.0, delta: 2.0 });
        assert_eq!(www.qubit2, Qubit { epsilon: 0.75, delta: 1.6 });
        assert!((www.bath1.cutoff - 0.1).abs() < 1e-15);
        assert!((www.bath2.cutoff - 0.16).abs() < 1e-15);
        assert_eq!(www.bath1.alpha, 0.05 / PI);
        assert_eq!(www.j, 0.05 / PI);
        let sws = ModelConfig::preset("SWS").unwrap();
        assert_eq!(sws.bath1.alpha, 2.5 / PI);
        assert_eq!(sws.bath2.alpha, 2.5 / PI);
        assert_eq!(sws.j, 0.05 / PI);
        assert_eq!(sws.qubit1, www.qubit1);
        let wsw = ModelConfig::preset("WSW").unwrap();
        assert_eq!((wsw.bath1.alpha, wsw.j), (0.05 / PI, 2.5 / PI));
        let sss = ModelConfig::preset("SSS").unwrap();
        assert_eq!((sss.bath1.alpha, sss.j), (2.5 / PI, 2.5 / PI));
        let f2 = ModelConfig::preset("figure2").unwrap();
        assert_eq!((f2.qubit1.delta, f2.qubit1.epsilon), (1.0, 0.5));
        assert_eq!((f2.qubit2.delta, f2.qubit2.epsilon), (1.0, 0.4));
        assert_eq!(f2.j, 0.1 / PI);
        assert_eq!((f2.bath1.cutoff, f2.bath2.cutoff), (0.05, 0.10));
        assert_eq!(f2.initial, InitialState::Excited);
        let n = ModelConfig::preset("ness-SWS").unwrap();
        assert_eq!((n.bath1.alpha, n.j, n.bath1.temperature), (1.5 / PI, 0.01 / PI, 1.0));
        assert!(ModelConfig::preset("XYZ").is_err());
        for p in PRESETS {
            ModelConfig::preset(p).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn set_and_get_round_trip() {
        let mut cfg = ModelConfig::preset("WWW").unwrap();
        cfg.set("bath1.alpha", "0.2/pi").unwrap();
        assert_eq!(cfg.bath1.alpha, 0.2 / PI);
        cfg.set("run.initial", "plusplus").unwrap();
        cfg.set("numerics.scheme", "matsubara").unwrap();
        let mut copy = ModelConfig::preset("SSS").unwrap();
        for key in CONFIG_KEYS {
            copy.set(key, &cfg.get(key).unwrap()).unwrap();
        }
        assert_eq!(copy, cfg);
    }

    #[test]
    fn set_rejects_bad_input() {
        let mut cfg = ModelConfig::preset("WWW").unwrap();
        assert!(matches!(cfg.set("bath1.alhpa", "1"), Err(Error::Config { .. })));
        assert!(cfg.set("bath1.alpha", "abc").is_err());
        assert!(cfg.set("bath1.alpha", "inf").is_err());
        assert!(cfg.set("numerics.L", "-1").is_err());
        cfg.set("bath2.temperature", "0").unwrap();
        match cfg.validate() {
            Err(Error::Config { key, .. }) => assert_eq!(key, "bath2.temperature"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn custom_initial_state() {
        let mut cfg = ModelConfig::preset("WWW").unwrap();
        cfg.set("run.initial", "0.5 0 0 0  0 0 0 0  0 0 0 0  0 0 0 0.5").unwrap();
        let rho = cfg.initial.density_matrix().unwrap();
        assert_eq!(rho.get(3, 3).re, 0.5);
        cfg.set("run.initial", "1 0 0 0  0 0 0 0  0 0 0 0  0 0 0 1").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn time_grid_endpoints() {
        let n = Numerics { t_max: 30.0, dt: 0.05, ..Default::default() };
        let g = n.time_grid();
        assert_eq!(g.len(), 601);
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), 30.0);
    }
}
