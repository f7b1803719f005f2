//! Reaction-coordinate mapping.
//!
//! Each Drude-Lorentz bath is replaced by one damped harmonic mode (the
//! reaction coordinate) coupled to the qubit's `σ_z`, plus a residual Ohmic
//! bath acting on the mode's position. The qubits and both truncated modes
//! form a supersystem whose Born-Markov master equation is integrated in the
//! eigenbasis of the supersystem Hamiltonian.
//!
//! Basis ordering is `qubits ⊗ RC₁ ⊗ RC₂`, with Fock level 0 first.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par, Side};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::BathSpec;
use crate::config::{build_system_hamiltonian, ModelConfig};
use crate::error::{Error, Result};
use crate::observables::{MethodTag, TrajectoryMeta, TrajectoryRecord};
use crate::ode::{self, OdeOptions, OdeSystem};
use crate::qops::{sigma, trace_out_trailing, Axis, ComplexOperator, DensityMatrix, C64};

/// Reduced-state eigenvalue below which positivity loss is reported.
pub const RCM_POSITIVITY_TOL: f64 = 1e-3;
/// Largest tolerated population of the top Fock level of either mode.
pub const TRUNCATION_TOL: f64 = 1e-4;

/// One reaction coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RcMode {
    /// Mode frequency.
    pub frequency: f64,
    /// Qubit–mode coupling `λ`.
    pub coupling: f64,
    /// Strength `γ` of the residual Ohmic density `J_RC(ω) = γω`.
    pub damping: f64,
}

impl RcMode {
    /// Spectral density the qubit sees through the damped mode:
    /// `λ²γω / ((Ω² − ω²)² + γ²ω²)`.
    pub fn effective_spectral_density(&self, omega: f64) -> f64 {
        let o2 = self.frequency * self.frequency;
        let d = o2 - omega * omega;
        let g = self.damping * omega;
        if self.coupling == 0.0 {
            return 0.0;
        }
        self.coupling * self.coupling * self.damping * omega / (d * d + g * g)
    }

    /// Residual density `J_RC(ω) = γω`.
    pub fn residual_spectral_density(&self, omega: f64) -> f64 {
        self.damping * omega
    }
}

/// Mapped parameters of both baths: mode 1 has frequency `Ω`, mode 2 `Γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RcParams {
    pub rc1: RcMode,
    pub rc2: RcMode,
}

impl RcParams {
    pub fn from_config(cfg: &ModelConfig) -> Result<Self> {
        let r = cfg.numerics.rc_ratio;
        Ok(Self {
            rc1: map_rc_parameters(&cfg.bath1, r)?,
            rc2: map_rc_parameters(&cfg.bath2, r)?,
        })
    }

    pub fn mode(&self, bath: usize) -> &RcMode {
        if bath == 0 {
            &self.rc1
        } else {
            &self.rc2
        }
    }
}

/// Maps a Drude-Lorentz bath onto a reaction coordinate of frequency
/// `Ω = ratio·ω_c`, coupling `λ = Ω√α` and residual strength `γ = Ω²/ω_c`.
///
/// The effective density then tends to the Drude-Lorentz form as the ratio
/// grows; its relative deviation on `ω ≤ 10ω_c` falls below 5% for
/// `ratio ≳ 6`. A decoupled bath (`α = 0`) maps to `λ = γ = 0`.
pub fn map_rc_parameters(spec: &BathSpec, ratio: f64) -> Result<RcMode> {
    spec.validate()?;
    if !(ratio.is_finite() && ratio > 0.0) {
        return Err(Error::arg(format!("RC frequency ratio must be positive, got {ratio}")));
    }
    let frequency = ratio * spec.cutoff;
    if spec.alpha == 0.0 {
        return Ok(RcMode { frequency, coupling: 0.0, damping: 0.0 });
    }
    Ok(RcMode {
        frequency,
        coupling: frequency * spec.alpha.sqrt(),
        damping: frequency * frequency / spec.cutoff,
    })
}

/// Largest relative deviation of the effective density from the original one
/// on `n` log-spaced points of `[0.01ω_c, 10ω_c]`.
pub fn spectral_reconstruction_error(spec: &BathSpec, mode: &RcMode, n: usize) -> f64 {
    let (lo, hi) = ((0.01 * spec.cutoff).ln(), (10.0 * spec.cutoff).ln());
    (0..n.max(2))
        .map(|i| {
            let w = (lo + (hi - lo) * i as f64 / (n.max(2) - 1) as f64).exp();
            let j = crate::bath::spectral_density(spec, w);
            if j == 0.0 {
                mode.effective_spectral_density(w).abs()
            } else {
                ((mode.effective_spectral_density(w) - j) / j).abs()
            }
        })
        .fold(0.0, f64::max)
}

fn ladder(m: usize) -> ComplexOperator {
    ComplexOperator::from_fn(m, |i, j| {
        if j == i + 1 {
            C64::new((j as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

fn position(m: usize, frequency: f64) -> ComplexOperator {
    let a = ladder(m);
    (&a + &a.dagger()).scale(C64::new(1.0 / (2.0 * frequency).sqrt(), 0.0))
}

fn number(m: usize) -> ComplexOperator {
    ComplexOperator::diagonal(&(0..m).map(|n| C64::new(n as f64, 0.0)).collect::<Vec<_>>())
}

/// Truncated Gibbs state of a mode of frequency `ω` at temperature `T`.
pub fn thermal_oscillator(frequency: f64, temperature: f64, m: usize) -> Result<DensityMatrix> {
    if m == 0 || !(frequency > 0.0 && temperature > 0.0) {
        return Err(Error::arg("thermal oscillator needs M ≥ 1 and positive frequency and temperature"));
    }
    let w: Vec<f64> = (0..m).map(|n| (-(n as f64) * frequency / temperature).exp()).collect();
    let z: f64 = w.iter().sum();
    DensityMatrix::new(ComplexOperator::diagonal(
        &w.iter().map(|p| C64::new(p / z, 0.0)).collect::<Vec<_>>(),
    ))
}

/// Qubits plus two truncated reaction coordinates.
#[derive(Debug, Clone)]
pub struct Supersystem {
    config: ModelConfig,
    rc: RcParams,
    m: usize,
    hamiltonian: ComplexOperator,
    energies: Vec<f64>,
    /// Eigenvectors as columns.
    basis: ComplexOperator,
    basis_real: Mat<f64>,
    coupling: [ComplexOperator; 2],
}

impl Supersystem {
    pub fn fock_levels(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        4 * self.m * self.m
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &RcParams {
        &self.rc
    }

    /// `H'` in the product basis.
    pub fn hamiltonian(&self) -> &ComplexOperator {
        &self.hamiltonian
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn eigenvectors(&self) -> &ComplexOperator {
        &self.basis
    }

    /// Residual-bath coupling operator of mode `bath` (0 or 1): the mode's
    /// position, in the product basis.
    pub fn coupling_operator(&self, bath: usize) -> &ComplexOperator {
        &self.coupling[bath]
    }

    /// `V† A V`
    pub fn to_eigenbasis(&self, a: &ComplexOperator) -> ComplexOperator {
        self.basis.dagger().matmul(&a.matmul(&self.basis))
    }

    /// `V A V†`
    pub fn from_eigenbasis(&self, a: &ComplexOperator) -> ComplexOperator {
        self.basis.matmul(&a.matmul(&self.basis.dagger()))
    }

    /// Largest `‖H'v − Ev‖₂` over all eigenpairs.
    pub fn eigen_residual(&self) -> f64 {
        let hv = self.hamiltonian.matmul(&self.basis);
        let d = self.dim();
        (0..d)
            .map(|k| {
                (0..d)
                    .map(|i| (hv[(i, k)] - self.basis[(i, k)] * self.energies[k]).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Operator `I₄ ⊗ |n⟩⟨n| ⊗ I` (bath 0) or `I₄ ⊗ I ⊗ |n⟩⟨n|` (bath 1).
    pub fn level_projector(&self, bath: usize, level: usize) -> ComplexOperator {
        let m = self.m;
        let mut p = ComplexOperator::zeros(m);
        p[(level, level)] = C64::new(1.0, 0.0);
        let id = ComplexOperator::identity(m);
        let mode = if bath == 0 { p.kron(&id) } else { id.kron(&p) };
        ComplexOperator::identity(4).kron(&mode)
    }
}

/// Builds `H' = H_S + Ω(c†c + ½) + Γ(d†d + ½) + λ₁σ_z⁽¹⁾Q₁ + λ₂σ_z⁽²⁾X₁`
/// with `M` Fock levels per mode, and diagonalizes it.
pub fn build_supersystem(cfg: &ModelConfig, rc: &RcParams, m: usize) -> Result<Supersystem> {
    if m < 2 {
        return Err(Error::arg(format!("Fock truncation must be at least 2, got {m}")));
    }
    let d = 4 * m * m;
    // H', its eigenvectors and the coupling operators, all dense
    let bytes = 6usize.saturating_mul(d * d).saturating_mul(std::mem::size_of::<C64>());
    let budget = cfg.memory_budget_bytes();
    if bytes > budget {
        return Err(Error::Resource {
            what: format!("supersystem of dimension {d}"),
            required: bytes,
            budget,
        });
    }
    let id_m = ComplexOperator::identity(m);
    let id_q = ComplexOperator::identity(4);
    let q1 = id_q.kron(&position(m, rc.rc1.frequency)).kron(&id_m);
    let x1 = id_q.kron(&id_m.kron(&position(m, rc.rc2.frequency)));
    let half = ComplexOperator::identity(m).scale(C64::new(0.5, 0.0));
    let osc1 = id_q.kron(&(&number(m) + &half).kron(&id_m)).scale(C64::new(rc.rc1.frequency, 0.0));
    let osc2 = id_q.kron(&id_m.kron(&(&number(m) + &half))).scale(C64::new(rc.rc2.frequency, 0.0));
    let id_modes = ComplexOperator::identity(m * m);
    let hs = build_system_hamiltonian(cfg).kron(&id_modes);
    let c1 = sigma(Axis::Z, 1).kron(&id_modes).matmul(&q1).scale(C64::new(rc.rc1.coupling, 0.0));
    let c2 = sigma(Axis::Z, 2).kron(&id_modes).matmul(&x1).scale(C64::new(rc.rc2.coupling, 0.0));
    let hamiltonian = &(&(&hs + &osc1) + &osc2) + &(&c1 + &c2);
    if hamiltonian.as_slice().iter().any(|z| z.im != 0.0) {
        return Err(Error::Internal("supersystem Hamiltonian is not real".into()));
    }
    let real = Mat::<f64>::from_fn(d, d, |i, j| hamiltonian[(i, j)].re);
    let evd = real
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numeric(format!("supersystem eigendecomposition failed: {e:?}")))?;
    let energies: Vec<f64> = (0..d).map(|i| evd.S()[i]).collect();
    let basis_real = evd.U().to_owned();
    let basis = ComplexOperator::from_fn(d, |i, j| C64::new(basis_real[(i, j)], 0.0));
    Ok(Supersystem {
        config: cfg.clone(),
        rc: *rc,
        m,
        hamiltonian,
        energies,
        basis,
        basis_real,
        coupling: [q1, x1],
    })
}

/// Dissipator operators of both residual baths, in the eigenbasis of `H'`.
#[derive(Debug, Clone)]
pub struct RcDissipator {
    pub chi: [ComplexOperator; 2],
    pub theta: [ComplexOperator; 2],
    /// Coupling operators `S_ν` in the eigenbasis.
    pub coupling: [ComplexOperator; 2],
}

/// `γΔ coth(βΔ/2)`, continued to `2γ/β` at `Δ = 0`.
fn chi_weight(damping: f64, beta: f64, gap: f64) -> f64 {
    let x = 0.5 * beta * gap;
    if x.abs() < 1e-8 {
        2.0 * damping / beta
    } else {
        damping * gap / x.tanh()
    }
}

/// `χ = ½ Σ_{kl} J_RC(Δ_kl) coth(βΔ_kl/2) S_kl |k⟩⟨l|` and
/// `Θ = ½ Σ_{kl} J_RC(Δ_kl) S_kl |k⟩⟨l|` with `Δ_kl = E_k − E_l`, for a
/// coupling operator `S` given in the eigenbasis of the energies `E`.
///
/// `χ` is Hermitian; `Θ` is anti-Hermitian because `J_RC` is odd.
pub fn dissipator_pair(
    energies: &[f64],
    coupling: &ComplexOperator,
    damping: f64,
    beta: f64,
) -> Result<(ComplexOperator, ComplexOperator)> {
    let d = energies.len();
    if coupling.dim() != d {
        return Err(Error::arg("coupling operator and spectrum differ in dimension"));
    }
    if !(beta > 0.0 && beta.is_finite()) || damping < 0.0 {
        return Err(Error::arg("dissipator needs finite positive β and nonnegative damping"));
    }
    let rows: Vec<(Vec<C64>, Vec<C64>)> = (0..d)
        .into_par_iter()
        .map(|k| {
            (0..d)
                .map(|l| {
                    let gap = energies[k] - energies[l];
                    let s = coupling[(k, l)];
                    (s * (0.5 * chi_weight(damping, beta, gap)), s * (0.5 * damping * gap))
                })
                .unzip()
        })
        .collect();
    let chi = ComplexOperator::from_fn(d, |k, l| rows[k].0[l]);
    let theta = ComplexOperator::from_fn(d, |k, l| rows[k].1[l]);
    Ok((chi, theta))
}

/// Builds `χ_ν`, `Θ_ν` for both residual baths at temperatures `T₁`, `T₂`.
pub fn build_rc_dissipator(sys: &Supersystem, t1: f64, t2: f64) -> Result<RcDissipator> {
    let mut chi = Vec::with_capacity(2);
    let mut theta = Vec::with_capacity(2);
    let mut coupling = Vec::with_capacity(2);
    for (bath, t) in [(0, t1), (1, t2)] {
        let s = sys.to_eigenbasis(sys.coupling_operator(bath)).hermitian_part();
        let (c, th) = dissipator_pair(&sys.energies, &s, sys.rc.mode(bath).damping, 1.0 / t)?;
        chi.push(c);
        theta.push(th);
        coupling.push(s);
    }
    let two = |v: Vec<ComplexOperator>| -> [ComplexOperator; 2] { v.try_into().expect("two baths") };
    Ok(RcDissipator { chi: two(chi), theta: two(theta), coupling: two(coupling) })
}

/// Real sparse matrix in compressed-row form.
#[derive(Debug, Clone)]
struct SparseReal {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseReal {
    fn from_real_part(a: &ComplexOperator) -> Self {
        let d = a.dim();
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for i in 0..d {
            for j in 0..d {
                let v = a[(i, j)].re;
                if v != 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(vals.len());
        }
        Self { row_ptr, cols, vals }
    }

    fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    /// `out += c·(A X − X A)` for symmetric `A` and column-major `X`.
    fn add_commutator(&self, x: &[C64], c: C64, d: usize, out: &mut [C64]) {
        for j in 0..d {
            let oc = &mut out[j * d..(j + 1) * d];
            for i in 0..d {
                let mut acc = C64::new(0.0, 0.0);
                for (k, v) in self.row(i) {
                    acc += x[j * d + k] * v;
                }
                oc[i] += c * acc;
            }
            // (X A)[:, j] = Σ_k A_kj X[:, k] = Σ_k A_jk X[:, k]
            for (k, v) in self.row(j) {
                let xk = &x[k * d..(k + 1) * d];
                let cv = c * v;
                for i in 0..d {
                    oc[i] -= cv * xk[i];
                }
            }
        }
    }
}

/// The supersystem master equation on column-stacked product-basis states.
///
/// `H'` and the mode positions are sparse and real in the product basis, and
/// with real eigenvectors `χ` is symmetric and `Θ` antisymmetric. For
/// Hermitian `ρ` this gives `ρ(χ + Θ) = ((χ − Θ)ρ)†`, so each bath costs one
/// dense real product per call.
pub struct RcmGenerator {
    d: usize,
    hamiltonian: SparseReal,
    coupling: Vec<SparseReal>,
    /// `χ_ν − Θ_ν` in the product basis, stacked by rows.
    stacked: Mat<f64>,
    par: Par,
}

impl RcmGenerator {
    pub fn new(sys: &Supersystem, diss: &RcDissipator, parallel: bool) -> Result<Self> {
        let d = sys.dim();
        if sys.hamiltonian.as_slice().iter().any(|z| z.im != 0.0) {
            return Err(Error::Internal("supersystem Hamiltonian is not real".into()));
        }
        let v = &sys.basis_real;
        let mut coupling = Vec::new();
        let mut blocks = Vec::new();
        for nu in 0..2 {
            if diss.chi[nu].max_abs() == 0.0 && diss.theta[nu].max_abs() == 0.0 {
                continue;
            }
            let a = &diss.chi[nu] - &diss.theta[nu];
            if a.as_slice().iter().any(|z| z.im.abs() > 1e-12 * a.max_abs()) {
                return Err(Error::Internal("dissipator is not real in a real eigenbasis".into()));
            }
            let a = Mat::<f64>::from_fn(d, d, |i, j| a[(i, j)].re);
            blocks.push(v * &a * v.transpose());
            coupling.push(SparseReal::from_real_part(sys.coupling_operator(nu)));
        }
        let stacked = Mat::<f64>::from_fn(d * blocks.len(), d, |i, j| blocks[i / d][(i % d, j)]);
        Ok(Self {
            d,
            hamiltonian: SparseReal::from_real_part(&sys.hamiltonian),
            coupling,
            stacked,
            par: if parallel { Par::rayon(0) } else { Par::Seq },
        })
    }

    /// `−i[H', ρ] − Σ_ν [S_ν, [χ_ν, ρ]] + Σ_ν [S_ν, {Θ_ν, ρ}]` for Hermitian `ρ`.
    pub fn apply(&self, y: &[C64], dy: &mut [C64]) {
        let d = self.d;
        dy.fill(C64::new(0.0, 0.0));
        self.hamiltonian.add_commutator(y, C64::new(0.0, -1.0), d, dy);
        let nb = self.coupling.len();
        if nb == 0 {
            return;
        }
        let re = Mat::<f64>::from_fn(d, d, |i, j| y[j * d + i].re);
        let im = Mat::<f64>::from_fn(d, d, |i, j| y[j * d + i].im);
        let mut wr = Mat::<f64>::zeros(nb * d, d);
        let mut wi = Mat::<f64>::zeros(nb * d, d);
        matmul(wr.as_mut(), Accum::Replace, self.stacked.as_ref(), re.as_ref(), 1.0, self.par);
        matmul(wi.as_mut(), Accum::Replace, self.stacked.as_ref(), im.as_ref(), 1.0, self.par);
        let mut z = vec![C64::new(0.0, 0.0); d * d];
        for (nu, s) in self.coupling.iter().enumerate() {
            let o = nu * d;
            // Z = ρ(χ + Θ) − (χ − Θ)ρ = W† − W with W = (χ − Θ)ρ
            for j in 0..d {
                for i in 0..d {
                    z[j * d + i] = C64::new(wr[(o + j, i)] - wr[(o + i, j)], -wi[(o + j, i)] - wi[(o + i, j)]);
                }
            }
            s.add_commutator(&z, C64::new(1.0, 0.0), d, dy);
        }
    }
}

impl OdeSystem for RcmGenerator {
    fn dim(&self) -> usize {
        self.d * self.d
    }

    fn rhs(&self, _t: f64, y: &[C64], dy: &mut [C64]) {
        self.apply(y, dy);
    }
}

/// Integrator settings of the supersystem propagation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RcmOptions {
    pub ode: OdeOptions,
    pub parallel: bool,
}

impl RcmOptions {
    pub fn from_config(cfg: &ModelConfig) -> Self {
        Self {
            ode: OdeOptions {
                rtol: cfg.numerics.rcm_rtol,
                atol: cfg.numerics.rcm_atol,
                ..OdeOptions::default()
            },
            parallel: cfg.numerics.parallel,
        }
    }
}

/// `ρ_S ⊗ ρ_th(Ω, T₁) ⊗ ρ_th(Γ, T₂)`
pub fn initial_supersystem_state(sys: &Supersystem, rho_system: &DensityMatrix) -> Result<DensityMatrix> {
    if rho_system.dim() != 4 {
        return Err(Error::arg("system state must be a two-qubit density matrix"));
    }
    let cfg = &sys.config;
    let r1 = thermal_oscillator(sys.rc.rc1.frequency, cfg.bath1.temperature, sys.m)?;
    let r2 = thermal_oscillator(sys.rc.rc2.frequency, cfg.bath2.temperature, sys.m)?;
    Ok(DensityMatrix::product(&DensityMatrix::product(rho_system, &r1), &r2))
}

/// Integrates the supersystem master equation from `rho0` and records the reduced two-qubit state at every grid time.
///
/// Positivity loss of the reduced state beyond [`RCM_POSITIVITY_TOL`] and a
/// top-Fock-level population above [`TRUNCATION_TOL`] at the final time are
/// reported as warnings.
pub fn rcm_propagate(
    sys: &Supersystem,
    diss: &RcDissipator,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    opts: &RcmOptions,
) -> Result<TrajectoryRecord> {
    let d = sys.dim();
    if rho0.dim() != d {
        return Err(Error::arg(format!(
            "initial state has dimension {}, supersystem has {d}",
            rho0.dim()
        )));
    }
    let generator = RcmGenerator::new(sys, diss, opts.parallel)?;
    let y0 = rho0.as_op().column_stacked();
    let mut times = Vec::with_capacity(t_grid.len());
    let mut states = Vec::with_capacity(t_grid.len());
    let mut min_eig = f64::INFINITY;
    let mut last = ComplexOperator::zeros(d);
    let stats = ode::integrate(&generator, &y0, t_grid, &opts.ode, |t, y| {
        let full = ComplexOperator::from_column_stacked(d, y);
        let reduced = trace_out_trailing(&full, 4)?;
        let rho = DensityMatrix::from_dynamics(&reduced).map_err(|e| match e {
            Error::Numeric(msg) => Error::Numeric(format!("{msg} at t = {t}")),
            other => other,
        })?;
        min_eig = min_eig.min(rho.min_eigenvalue());
        times.push(t);
        states.push(rho);
        if times.len() == t_grid.len() {
            last = full;
        }
        Ok(())
    })?;
    let mut warnings = Vec::new();
    if min_eig < -RCM_POSITIVITY_TOL {
        warnings.push(format!("reduced state lost positivity: minimum eigenvalue {min_eig:e}"));
    }
    for bath in 0..2 {
        let top = last.trace_product(&sys.level_projector(bath, sys.m - 1)).re;
        if top > TRUNCATION_TOL {
            warnings.push(format!(
                "reaction coordinate {} holds population {top:.3e} in its top Fock level; increase M",
                bath + 1
            ));
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(TrajectoryRecord {
        times,
        states,
        qsb: None,
        meta: TrajectoryMeta {
            config: sys.config.clone(),
            method: MethodTag::Rcm,
            size: d,
            stats,
            min_eigenvalue: min_eig,
            warnings,
        },
    })
}

/// Maps, builds and propagates a configuration from its initial state over
/// `t_grid` with the truncation `numerics.M`.
pub fn run_rcm(cfg: &ModelConfig, t_grid: &[f64]) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    let rc = RcParams::from_config(cfg)?;
    let sys = build_supersystem(cfg, &rc, cfg.numerics.m)?;
    let diss = build_rc_dissipator(&sys, cfg.bath1.temperature, cfg.bath2.temperature)?;
    let rho0 = initial_supersystem_state(&sys, &cfg.initial.density_matrix()?)?;
    rcm_propagate(&sys, &diss, &rho0, t_grid, &RcmOptions::from_config(cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qops::hermitian_eigenvalues;

    fn small_cfg() -> ModelConfig {
        let mut cfg = ModelConfig::preset("figure2").unwrap();
        cfg.numerics.m = 3;
        cfg
    }

    #[test]
    fn zero_coupling_maps_to_decoupled_mode() {
        let spec = BathSpec::new(0.0, 0.1, 1.0).unwrap();
        let m = map_rc_parameters(&spec, 8.0).unwrap();
        assert_eq!(m.coupling, 0.0);
        assert_eq!(m.damping, 0.0);
        assert!(m.frequency > 0.0);
        assert_eq!(m.effective_spectral_density(0.3), 0.0);
    }

    #[test]
    fn effective_density_tracks_drude_lorentz() {
        let spec = BathSpec::new(0.2 / std::f64::consts::PI, 0.05, 1.04).unwrap();
        let m = map_rc_parameters(&spec, 8.0).unwrap();
        assert!(spectral_reconstruction_error(&spec, &m, 400) <= 0.05);
        let coarse = map_rc_parameters(&spec, 2.0).unwrap();
        assert!(spectral_reconstruction_error(&spec, &coarse, 400) > 0.05);
    }

    #[test]
    fn supersystem_dimension_and_hermiticity() {
        let cfg = small_cfg();
        let rc = RcParams::from_config(&cfg).unwrap();
        let sys = build_supersystem(&cfg, &rc, 3).unwrap();
        assert_eq!(sys.dim(), 36);
        assert!(sys.hamiltonian().hermiticity_error() <= 1e-12);
        assert!(sys.eigen_residual() <= 1e-10);
        assert!(build_supersystem(&cfg, &rc, 1).is_err());
    }

    #[test]
    fn decoupled_spectrum_is_a_sum() {
        let mut cfg = small_cfg();
        cfg.bath1.alpha = 0.0;
        cfg.bath2.alpha = 0.0;
        let rc = RcParams::from_config(&cfg).unwrap();
        let m = 3;
        let sys = build_supersystem(&cfg, &rc, m).unwrap();
        let qubit = hermitian_eigenvalues(&build_system_hamiltonian(&cfg)).unwrap();
        let mut expected = Vec::new();
        for e in &qubit {
            for n in 0..m {
                for k in 0..m {
                    expected.push(e + rc.rc1.frequency * (n as f64 + 0.5) + rc.rc2.frequency * (k as f64 + 0.5));
                }
            }
        }
        expected.sort_by(f64::total_cmp);
        for (a, b) in sys.energies().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn diagonal_coupling_uses_only_the_degenerate_limit() {
        let energies = [0.0, 0.5, 1.5];
        let s = ComplexOperator::diagonal(&[C64::new(1.0, 0.0), C64::new(-2.0, 0.0), C64::new(0.5, 0.0)]);
        let (chi, theta) = dissipator_pair(&energies, &s, 0.3, 2.0).unwrap();
        for k in 0..3 {
            let expected = 0.5 * 2.0 * 0.3 / 2.0 * s[(k, k)].re;
            assert!((chi[(k, k)].re - expected).abs() < 1e-15);
        }
        assert_eq!(theta.max_abs(), 0.0);
    }

    #[test]
    fn zero_damping_gives_zero_dissipator() {
        let mut cfg = small_cfg();
        cfg.bath1.alpha = 0.0;
        cfg.bath2.alpha = 0.0;
        let rc = RcParams::from_config(&cfg).unwrap();
        let sys = build_supersystem(&cfg, &rc, 3).unwrap();
        let diss = build_rc_dissipator(&sys, 1.0, 1.0).unwrap();
        for nu in 0..2 {
            assert_eq!(diss.chi[nu].max_abs(), 0.0);
            assert_eq!(diss.theta[nu].max_abs(), 0.0);
        }
    }

    #[test]
    fn chi_is_hermitian_and_theta_antihermitian() {
        let cfg = small_cfg();
        let rc = RcParams::from_config(&cfg).unwrap();
        let sys = build_supersystem(&cfg, &rc, 3).unwrap();
        let diss = build_rc_dissipator(&sys, 1.04, 1.39).unwrap();
        for nu in 0..2 {
            assert!(diss.chi[nu].hermiticity_error() < 1e-12);
            let th = &diss.theta[nu];
            assert!((th + &th.dagger()).max_abs() < 1e-12);
        }
    }

    #[test]
    fn thermal_oscillator_is_normalized_gibbs() {
        let r = thermal_oscillator(0.5, 1.0, 4).unwrap();
        assert!((r.as_op().trace().re - 1.0).abs() < 1e-15);
        assert!((r.get(1, 1).re / r.get(0, 0).re - (-0.5f64).exp()).abs() < 1e-15);
        assert!(thermal_oscillator(0.5, 0.0, 4).is_err());
    }

    #[test]
    fn generator_preserves_trace() {
        let cfg = small_cfg();
        let rc = RcParams::from_config(&cfg).unwrap();
        let sys = build_supersystem(&cfg, &rc, 3).unwrap();
        let diss = build_rc_dissipator(&sys, 1.04, 1.39).unwrap();
        let g = RcmGenerator::new(&sys, &diss, false).unwrap();
        let d = sys.dim();
        let x = ComplexOperator::from_fn(d, |i, j| C64::new(((i * d + j) as f64 * 0.37).sin(), ((i * d + j) as f64 * 0.11).cos()));
        let y = x.hermitian_part().column_stacked();
        let mut dy = vec![C64::new(0.0, 0.0); d * d];
        g.apply(&y, &mut dy);
        let tr: C64 = (0..d).map(|k| dy[k * d + k]).sum();
        assert!(tr.norm() < 1e-12, "{tr}");
    }

    #[test]
    fn generator_matches_direct_commutator_form() {
        let cfg = small_cfg();
        let rc = RcParams::from_config(&cfg).unwrap();
        let sys = build_supersystem(&cfg, &rc, 2).unwrap();
        let diss = build_rc_dissipator(&sys, 1.04, 1.39).unwrap();
        let g = RcmGenerator::new(&sys, &diss, false).unwrap();
        let d = sys.dim();
        let rho = ComplexOperator::from_fn(d, |i, j| C64::new((0.3 * (i + 2 * j) as f64).cos(), (0.7 * (i * j) as f64).sin()))
            .hermitian_part();
        let mut expected = sys.hamiltonian().commutator(&rho).scale(C64::new(0.0, -1.0));
        for nu in 0..2 {
            let s = sys.coupling_operator(nu);
            let chi = sys.from_eigenbasis(&diss.chi[nu]);
            let theta = sys.from_eigenbasis(&diss.theta[nu]);
            expected = &expected - &s.commutator(&chi.commutator(&rho));
            expected = &expected + &s.commutator(&theta.anticommutator(&rho));
        }
        let mut dy = vec![C64::new(0.0, 0.0); d * d];
        g.apply(&rho.column_stacked(), &mut dy);
        let got = ComplexOperator::from_column_stacked(d, &dy);
        assert!((&got - &expected).max_abs() < 1e-12 * expected.max_abs().max(1.0));
    }
}
