//! Coherence, distinguishability, entropy and current observables.

use serde::{Deserialize, Serialize};

use crate::config::{build_system_hamiltonian, interaction_hamiltonian, qubit_hamiltonian, ModelConfig};
use crate::error::{Error, Result};
use crate::heom::{first_tier_sum, Hierarchy, HierarchyState};
use crate::ode::OdeStats;
use crate::qops::{hermitian_eigenvalues, sigma, Axis, ComplexOperator, DensityMatrix, C64, LOG_FLOOR};

/// Tolerance of the built-in current self-checks.
pub const SELF_CHECK_TOL: f64 = 1e-10;

/// Which backend produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodTag {
    Heom,
    Rcm,
    /// Closed-system reference evolution.
    Exact,
}

impl std::fmt::Display for MethodTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MethodTag::Heom => "heom",
            MethodTag::Rcm => "rcm",
            MethodTag::Exact => "exact",
        })
    }
}

/// Provenance and diagnostics of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub config: ModelConfig,
    pub method: MethodTag,
    /// Number of ADOs (HEOM) or supersystem dimension (RCM).
    pub size: usize,
    pub stats: OdeStats,
    /// Smallest eigenvalue of any recorded reduced state.
    pub min_eigenvalue: f64,
    pub warnings: Vec<String>,
}

/// Reduced states on a time grid, plus first-tier interaction energies when
/// produced by HEOM with `L ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// `(Q_SB₁, Q_SB₂)` per time.
    pub qsb: Option<Vec<[C64; 2]>>,
    pub meta: TrajectoryMeta,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `Re Tr(ρ(t) O)` at every time.
    pub fn expectation(&self, op: &ComplexOperator) -> Vec<f64> {
        self.states.iter().map(|r| r.expectation(op).re).collect()
    }

    /// `⟨σ_z^{(site)}⟩(t)`
    pub fn sigma_z(&self, site: usize) -> Vec<f64> {
        self.expectation(&sigma(Axis::Z, site))
    }

    pub fn coherence(&self) -> Vec<f64> {
        self.states.iter().map(l1_coherence).collect()
    }

    pub fn entropy(&self) -> Vec<f64> {
        self.states.iter().map(von_neumann_entropy).collect()
    }
}

/// `Σ_{i≠j} |ρ_ij|` in the computational basis.
pub fn l1_coherence(rho: &DensityMatrix) -> f64 {
    let d = rho.dim();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                s += rho.get(i, j).norm();
            }
        }
    }
    s
}

/// `½ Σ |λ_i(ρ₁ − ρ₂)|`
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::arg(format!(
            "trace distance between {}- and {}-dimensional states",
            a.dim(),
            b.dim()
        )));
    }
    let diff = (a.as_op() - b.as_op()).hermitian_part();
    Ok(0.5 * hermitian_eigenvalues(&diff)?.iter().map(|x| x.abs()).sum::<f64>())
}

/// Discrete non-Markovianity witness of a trace-distance series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlpWitness {
    /// Sum of all positive increments.
    pub measure: f64,
    /// Number of maximal runs of consecutive increases.
    pub revivals: usize,
}

pub fn blp_witness(series: &[f64]) -> Result<BlpWitness> {
    if series.len() < 2 {
        return Err(Error::arg("the witness needs at least two samples"));
    }
    let mut measure = 0.0;
    let mut revivals = 0;
    let mut rising = false;
    for w in series.windows(2) {
        let inc = w[1] - w[0];
        if inc > 0.0 {
            measure += inc;
            if !rising {
                revivals += 1;
            }
            rising = true;
        } else {
            rising = false;
        }
    }
    Ok(BlpWitness { measure, revivals })
}

/// `−Σ p log p` in nats, with `0 log 0 = 0`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    rho.eigenvalues()
        .into_iter()
        .map(|p| {
            let p = p.max(0.0);
            -p * p.max(LOG_FLOOR).ln()
        })
        .sum::<f64>()
        .max(0.0)
}

/// Entropy production at equal bath temperatures:
/// `Σ(t) = S(t) − S(0) − β (Q_S(t) + Q_SB₁(t) + Q_SB₂(t))`, with every `Q`
/// measured relative to `t = 0` and the interaction energies taken from the
/// real part of the first-tier ADO sums.
pub fn entropy_production(traj: &TrajectoryRecord, beta: f64) -> Result<Vec<f64>> {
    let cfg = &traj.meta.config;
    if !cfg.equal_temperatures() {
        return Err(Error::Contract(format!(
            "equal-temperature form only: T1 = {}, T2 = {}",
            cfg.bath1.temperature, cfg.bath2.temperature
        )));
    }
    let t_bath = cfg.bath1.temperature;
    if !((beta * t_bath - 1.0).abs() <= 1e-12) {
        return Err(Error::Contract(format!("beta = {beta} does not match the bath temperature {t_bath}")));
    }
    let qsb = traj
        .qsb
        .as_ref()
        .ok_or_else(|| Error::Contract("entropy production needs first-tier ADO data (HEOM with L >= 1)".into()))?;
    if traj.is_empty() {
        return Ok(Vec::new());
    }
    let h = build_system_hamiltonian(cfg);
    let rho0 = &traj.states[0];
    let s0 = von_neumann_entropy(rho0);
    let e0 = rho0.expectation(&h).re;
    let q0 = qsb[0][0].re + qsb[0][1].re;
    Ok(traj
        .states
        .iter()
        .zip(qsb)
        .map(|(rho, q)| {
            let ds = von_neumann_entropy(rho) - s0;
            let qs = rho.expectation(&h).re - e0;
            let dqsb = q[0].re + q[1].re - q0;
            ds - beta * (qs + dqsb)
        })
        .collect())
}

/// Largest `|Im Q_SB|` along a trajectory; a consistency diagnostic.
pub fn qsb_imaginary_residue(traj: &TrajectoryRecord) -> Option<f64> {
    traj.qsb
        .as_ref()
        .map(|q| q.iter().flat_map(|p| p.iter().map(|z| z.im.abs())).fold(0.0, f64::max))
}

fn pauli2(a: Axis, b: Axis) -> ComplexOperator {
    sigma(a, 1).matmul(&sigma(b, 2))
}

fn check(name: &str, expr: f64, direct: f64) -> Result<f64> {
    if (expr - direct).abs() > SELF_CHECK_TOL * (1.0 + direct.abs()) {
        return Err(Error::Internal(format!(
            "{name}: Pauli form {expr:e} disagrees with the commutator form {direct:e}"
        )));
    }
    Ok(expr)
}

/// `J₂₁ = i⟨[H₁₂, H₁]⟩ = Δ₁J⟨σ_z^{(1)}σ_y^{(2)}⟩ − ε₁J⟨σ_x^{(1)}σ_y^{(2)} − σ_y^{(1)}σ_x^{(2)}⟩`,
/// the energy current from qubit 2 into qubit 1.
pub fn heat_current_j21(rho: &DensityMatrix, cfg: &ModelConfig) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::arg("heat current needs a two-qubit state"));
    }
    let (e1, d1, j) = (cfg.qubit1.epsilon, cfg.qubit1.delta, cfg.j);
    let zy = rho.expectation(&pauli2(Axis::Z, Axis::Y)).re;
    let xy = rho.expectation(&pauli2(Axis::X, Axis::Y)).re;
    let yx = rho.expectation(&pauli2(Axis::Y, Axis::X)).re;
    let expr = d1 * j * zy - e1 * j * (xy - yx);
    let h12 = interaction_hamiltonian(cfg);
    let h1 = qubit_hamiltonian(cfg, 1);
    let direct = (C64::new(0.0, 1.0) * rho.expectation(&h12.commutator(&h1))).re;
    check("heat current", expr, direct)
}

/// `j₁₂ = −Δ₁⟨σ_y^{(1)}⟩ + 2J⟨σ_x^{(1)}σ_y^{(2)} − σ_y^{(1)}σ_x^{(2)}⟩`, the rate of
/// change of `⟨σ_z^{(1)}⟩` due to tunneling and the inter-qubit coupling.
pub fn spin_current_j12(rho: &DensityMatrix, cfg: &ModelConfig) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::arg("spin current needs a two-qubit state"));
    }
    let (d1, j) = (cfg.qubit1.delta, cfg.j);
    let y1 = rho.expectation(&sigma(Axis::Y, 1)).re;
    let xy = rho.expectation(&pauli2(Axis::X, Axis::Y)).re;
    let yx = rho.expectation(&pauli2(Axis::Y, Axis::X)).re;
    let expr = -d1 * y1 + 2.0 * j * (xy - yx);
    let h = &qubit_hamiltonian(cfg, 1) + &interaction_hamiltonian(cfg);
    let direct = (C64::new(0.0, -1.0) * rho.expectation(&h.commutator(&sigma(Axis::Z, 1)))).re;
    check("spin current", expr, direct)
}

fn bath_flux(h: &Hierarchy, state: &HierarchyState, bath: usize, target: &ComplexOperator) -> Result<C64> {
    if bath != 1 && bath != 2 {
        return Err(Error::arg(format!("bath must be 1 or 2, got {bath}")));
    }
    if h.tier_limit() == 0 {
        return Err(Error::Contract("bath currents need first-tier ADOs (L >= 1)".into()));
    }
    let x = first_tier_sum(h, state, bath)?;
    let q = h.coupling_operator(bath - 1);
    Ok(C64::new(0.0, -1.0) * target.trace_product(&q.commutator(&x)))
}

/// Energy current from bath `i` into the two-qubit system,
/// `−i Tr(H_S [Q_i, Σ_k ρ_{e_k}])`. In a steady state the two bath currents
/// cancel.
pub fn bath_side_current(h: &Hierarchy, state: &HierarchyState, bath: usize) -> Result<f64> {
    let hs = build_system_hamiltonian(h.config());
    Ok(bath_flux(h, state, bath, &hs)?.re)
}

/// Energy current from bath `i` into qubit `i` alone,
/// `−i Tr(H_i [Q_i, Σ_k ρ_{e_k}])`. In a steady state it balances the
/// inter-qubit current at that node, e.g. `J₂₁ + node_current(1) = 0`.
pub fn node_current(h: &Hierarchy, state: &HierarchyState, bath: usize) -> Result<f64> {
    if bath != 1 && bath != 2 {
        return Err(Error::arg(format!("bath must be 1 or 2, got {bath}")));
    }
    let hi = qubit_hamiltonian(h.config(), bath);
    Ok(bath_flux(h, state, bath, &hi)?.re)
}

/// Steady-state summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NessReport {
    pub rho_ness: DensityMatrix,
    pub coherence: f64,
    pub j21: f64,
    pub j12: f64,
    /// Energy currents from bath 1 and bath 2 into the system.
    pub bath_currents: [f64; 2],
    /// Energy currents from bath 1 into qubit 1 and bath 2 into qubit 2.
    pub node_currents: [f64; 2],
    pub residual: f64,
    pub converged: bool,
    /// `||J₂₁| − (ε₁/2)|j₁₂||`, which vanishes at weak coupling when `Δ₁ = 0`.
    pub relation_discrepancy: f64,
    /// `max(|J₂₁|, ε₁|j₁₂|/2)`
    pub relation_scale: f64,
}

impl NessReport {
    pub fn from_steady_state(h: &Hierarchy, state: &HierarchyState, residual: f64, converged: bool) -> Result<Self> {
        let cfg = h.config();
        let rho = DensityMatrix::from_dynamics(&state.system())?;
        let j21 = heat_current_j21(&rho, cfg)?;
        let j12 = spin_current_j12(&rho, cfg)?;
        let half = 0.5 * cfg.qubit1.epsilon.abs() * j12.abs();
        Ok(Self {
            coherence: l1_coherence(&rho),
            j21,
            j12,
            relation_discrepancy: (j21.abs() - half).abs(),
            relation_scale: j21.abs().max(half),
            bath_currents: [bath_side_current(h, state, 1)?, bath_side_current(h, state, 2)?],
            node_currents: [node_current(h, state, 1)?, node_current(h, state, 2)?],
            rho_ness: rho,
            residual,
            converged,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, LN_2};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn plusplus() -> DensityMatrix {
        DensityMatrix::pure(&[c(0.5); 4]).unwrap()
    }

    fn bell() -> DensityMatrix {
        DensityMatrix::pure(&[c(FRAC_1_SQRT_2), c(0.0), c(0.0), c(FRAC_1_SQRT_2)]).unwrap()
    }

    #[test]
    fn coherence_examples() {
        assert_eq!(l1_coherence(&DensityMatrix::basis(4, 0).unwrap()), 0.0);
        assert!((l1_coherence(&plusplus()) - 3.0).abs() < 1e-15);
        assert!((l1_coherence(&bell()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn trace_distance_examples() {
        let a = DensityMatrix::basis(4, 0).unwrap();
        let b = DensityMatrix::basis(4, 3).unwrap();
        assert!(trace_distance(&a, &a).unwrap().abs() < 1e-15);
        assert!((trace_distance(&a, &b).unwrap() - 1.0).abs() < 1e-14);
        assert!((trace_distance(&a, &plusplus()).unwrap() - 3f64.sqrt() / 2.0).abs() < 1e-14);
        assert!(trace_distance(&a, &DensityMatrix::maximally_mixed(2)).is_err());
    }

    #[test]
    fn blp_examples() {
        assert_eq!(blp_witness(&[1.0, 0.8, 0.5, 0.1]).unwrap(), BlpWitness { measure: 0.0, revivals: 0 });
        let w = blp_witness(&[1.0, 0.5, 0.7, 0.3]).unwrap();
        assert!((w.measure - 0.2).abs() < 1e-15);
        assert_eq!(w.revivals, 1);
        let w = blp_witness(&[0.0, 0.1, 0.2, 0.1, 0.3, 0.3, 0.4]).unwrap();
        assert_eq!(w.revivals, 3);
        assert!(blp_witness(&[1.0]).is_err());
    }

    #[test]
    fn entropy_examples() {
        assert!(von_neumann_entropy(&bell()).abs() < 1e-12);
        assert!((von_neumann_entropy(&DensityMatrix::maximally_mixed(4)) - 4f64.ln()).abs() < 1e-14);
        let half = DensityMatrix::new(ComplexOperator::diagonal(&[c(0.5), c(0.5), c(0.0), c(0.0)])).unwrap();
        assert!((von_neumann_entropy(&half) - LN_2).abs() < 1e-14);
    }

    #[test]
    fn currents_vanish_without_coupling_or_coherence() {
        let mut cfg = ModelConfig::preset("WWW").unwrap();
        let rho = plusplus();
        let diag = DensityMatrix::new(ComplexOperator::diagonal(&[c(0.1), c(0.2), c(0.3), c(0.4)])).unwrap();
        assert_eq!(heat_current_j21(&diag, &cfg).unwrap(), 0.0);
        cfg.j = 0.0;
        assert_eq!(heat_current_j21(&rho, &cfg).unwrap(), 0.0);
        cfg.qubit1.delta = 0.0;
        assert_eq!(spin_current_j12(&rho, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn currents_on_a_complex_state() {
        let amps = [c(0.5), C64::new(0.3, 0.5), C64::new(0.5, -0.2), c(0.1)];
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let amps: Vec<C64> = amps.iter().map(|a| a / norm).collect();
        let rho = DensityMatrix::pure(&amps).unwrap();
        let cfg = ModelConfig::preset("WSW").unwrap();
        let j21 = heat_current_j21(&rho, &cfg).unwrap();
        let j12 = spin_current_j12(&rho, &cfg).unwrap();
        assert!(j21.abs() > 1e-3);
        assert!(j12.abs() > 1e-3);
    }

    #[test]
    fn delta_zero_proportionality_is_exact_for_any_state() {
        let s = 0.5;
        let rho = DensityMatrix::pure(&[c(s), C64::new(0.3, s), C64::new(s, -0.2), c(0.1)]).unwrap();
        let mut cfg = ModelConfig::preset("WWW").unwrap();
        cfg.qubit1.delta = 0.0;
        let j21 = heat_current_j21(&rho, &cfg).unwrap();
        let j12 = spin_current_j12(&rho, &cfg).unwrap();
        assert!((j21.abs() - 0.5 * cfg.qubit1.epsilon * j12.abs()).abs() < 1e-14);
    }
}
