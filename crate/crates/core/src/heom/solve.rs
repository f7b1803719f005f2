use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use serde::{Deserialize, Serialize};

use super::hierarchy::Hierarchy;
use super::liouvillian::{assemble_liouvillian, SparseLiouvillian};
use super::rhs::{HeomGenerator, HierarchyState, ADO_LEN};
use crate::error::{Error, Result};
use crate::krylov::gmres;
use crate::observables::{MethodTag, TrajectoryMeta, TrajectoryRecord};
use crate::ode::{self, OdeOptions};
use crate::qops::{ComplexOperator, DensityMatrix, C64, POSITIVITY_TOL};

/// Residual above which a steady state is reported as unconverged.
pub const STEADY_STATE_TOL: f64 = 1e-8;

/// Integrator settings for hierarchy propagation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationOptions {
    pub ode: OdeOptions,
    pub parallel: bool,
}

impl PropagationOptions {
    pub fn from_hierarchy(h: &Hierarchy) -> Self {
        let n = &h.config().numerics;
        Self {
            ode: OdeOptions {
                rtol: n.rtol,
                atol: n.atol,
                ..OdeOptions::default()
            },
            parallel: n.parallel,
        }
    }
}

fn trace_q(h: &Hierarchy, y: &[C64], p: usize, bath: usize) -> C64 {
    let q = h.q_diag[bath];
    let base = p * ADO_LEN;
    (0..4).map(|a| y[base + a * 4 + a] * q[a]).sum::<C64>() * h.ado_scale[p]
}

/// `Σ_k Tr[Q_i ρ_{e_k}]` directly from a raw state vector.
fn qsb_from_slice(h: &Hierarchy, y: &[C64], bath: usize) -> C64 {
    h.modes
        .iter()
        .enumerate()
        .filter(|(_, md)| md.bath == bath)
        .filter_map(|(k, _)| h.first_tier(k).map(|p| trace_q(h, y, p, bath)))
        .sum()
}

/// `Σ_k ρ_{e_k}` over the exponents of bath `i` (1 or 2), the reduced
/// operator `Tr_B(B_i ρ)`.
pub fn first_tier_sum(h: &Hierarchy, state: &HierarchyState, bath: usize) -> Result<ComplexOperator> {
    if bath != 1 && bath != 2 {
        return Err(Error::arg(format!("bath must be 1 or 2, got {bath}")));
    }
    if h.tier_limit() == 0 {
        return Err(Error::Contract("first-tier ADOs do not exist at L = 0".into()));
    }
    if state.len() != h.len() {
        return Err(Error::arg("state does not belong to this hierarchy"));
    }
    let mut acc = ComplexOperator::zeros(4);
    for (k, md) in h.modes.iter().enumerate() {
        if md.bath == bath - 1 {
            let p = h.first_tier(k).expect("L >= 1");
            acc += &state.ado(h, p);
        }
    }
    Ok(acc)
}

/// `Q_SB_i = Σ_k Tr[σ_z^{(i)} ρ_{e_k}]`, the system-bath interaction energy of bath `i`.
pub fn first_tier_expectation(h: &Hierarchy, state: &HierarchyState, bath: usize) -> Result<C64> {
    let x = first_tier_sum(h, state, bath)?;
    Ok(h.coupling_operator(bath - 1).trace_product(&x))
}

/// Propagates from the factorized initial condition `ρ_0 = ρ₀` over
/// `t_grid` (which must start at 0) with tolerances from the hierarchy's
/// configuration.
pub fn propagate(
    h: &Hierarchy,
    hamiltonian: &ComplexOperator,
    rho0: &DensityMatrix,
    t_grid: &[f64],
) -> Result<TrajectoryRecord> {
    if t_grid.first() != Some(&0.0) {
        return Err(Error::arg("time grid must start at 0"));
    }
    let state = HierarchyState::initial(h, rho0)?;
    propagate_state(h, hamiltonian, &state, t_grid, &PropagationOptions::from_hierarchy(h)).map(|(r, _)| r)
}

/// Propagates an arbitrary hierarchy state and also returns the final state.
pub fn propagate_state(
    h: &Hierarchy,
    hamiltonian: &ComplexOperator,
    state: &HierarchyState,
    t_grid: &[f64],
    opts: &PropagationOptions,
) -> Result<(TrajectoryRecord, HierarchyState)> {
    if state.len() != h.len() {
        return Err(Error::arg("state does not belong to this hierarchy"));
    }
    let generator = HeomGenerator::new(h, hamiltonian)?.with_parallel(opts.parallel);
    let mut times = Vec::with_capacity(t_grid.len());
    let mut states = Vec::with_capacity(t_grid.len());
    let mut qsb = Vec::with_capacity(t_grid.len());
    let mut min_eig = f64::INFINITY;
    let mut last = state.data.clone();
    let stats = ode::integrate(&generator, &state.data, t_grid, &opts.ode, |t, y| {
        let rho = ComplexOperator::from_column_stacked(4, &y[..ADO_LEN]);
        let rho = DensityMatrix::from_dynamics(&rho).map_err(|e| match e {
            Error::Numeric(msg) => Error::Numeric(format!("{msg} at t = {t}")),
            other => other,
        })?;
        min_eig = min_eig.min(rho.min_eigenvalue());
        times.push(t);
        states.push(rho);
        if h.tier_limit() > 0 {
            qsb.push([qsb_from_slice(h, y, 0), qsb_from_slice(h, y, 1)]);
        }
        if times.len() == t_grid.len() {
            last.copy_from_slice(y);
        }
        Ok(())
    })?;
    let mut warnings: Vec<String> = h.expansions.iter().flat_map(|e| e.warnings.iter().cloned()).collect();
    if min_eig < -POSITIVITY_TOL {
        let msg = format!("reduced state lost positivity: minimum eigenvalue {min_eig:e}");
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let record = TrajectoryRecord {
        times,
        states,
        qsb: (h.tier_limit() > 0).then_some(qsb),
        meta: TrajectoryMeta {
            config: h.config().clone(),
            method: MethodTag::Heom,
            size: h.len(),
            stats,
            min_eigenvalue: min_eig,
            warnings,
        },
    };
    Ok((record, HierarchyState { data: last }))
}

/// Which linear solver produced a steady state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinearSolver {
    SparseLu,
    Gmres,
}

/// A steady state of the full hierarchy.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub state: HierarchyState,
    /// `‖L x‖∞`
    pub residual: f64,
    pub converged: bool,
    pub solver: LinearSolver,
}

fn residual_inf(l: &SparseLiouvillian, x: &[C64]) -> f64 {
    let mut y = vec![C64::new(0.0, 0.0); x.len()];
    l.matvec(x, &mut y);
    y.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Rows of the constrained system: the generator with its first row
/// (the `(0,0)` entry of `ρ_0`) replaced by the trace functional.
fn constrained_triplets(l: &SparseLiouvillian) -> Vec<Triplet<usize, usize, C64>> {
    let one = C64::new(1.0, 0.0);
    let mut t: Vec<Triplet<usize, usize, C64>> = [0usize, 5, 10, 15].iter().map(|&c| Triplet::new(0, c, one)).collect();
    t.extend(l.triplets().filter(|&(i, _, _)| i != 0).map(|(i, j, v)| Triplet::new(i, j, v)));
    t
}

fn constrained_matvec(l: &SparseLiouvillian, x: &[C64], y: &mut [C64]) {
    l.matvec(x, y);
    y[0] = x[0] + x[5] + x[10] + x[15];
}

fn solve_lu(l: &SparseLiouvillian) -> Result<Vec<C64>> {
    let n = l.dim();
    let a = SparseColMat::<usize, C64>::try_new_from_triplets(n, n, &constrained_triplets(l))
        .map_err(|e| Error::Numeric(format!("could not build sparse matrix: {e:?}")))?;
    let lu = a
        .sp_lu()
        .map_err(|e| Error::Numeric(format!("sparse LU failed: {e:?}")))?;
    let mut b = vec![C64::new(0.0, 0.0); n];
    b[0] = C64::new(1.0, 0.0);
    let mut x = Mat::<C64>::from_fn(n, 1, |i, _| b[i]);
    lu.solve_in_place(x.as_mut());
    let mut xv: Vec<C64> = (0..n).map(|i| x[(i, 0)]).collect();
    // two rounds of iterative refinement
    let mut r = vec![C64::new(0.0, 0.0); n];
    for _ in 0..2 {
        constrained_matvec(l, &xv, &mut r);
        let mut d = Mat::<C64>::from_fn(n, 1, |i, _| b[i] - r[i]);
        lu.solve_in_place(d.as_mut());
        for i in 0..n {
            xv[i] += d[(i, 0)];
        }
    }
    if xv.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Numeric("sparse LU produced a non-finite solution (singular system)".into()));
    }
    Ok(xv)
}

fn solve_gmres(l: &SparseLiouvillian, n_ados: usize) -> Result<Vec<C64>> {
    let n = l.dim();
    // block-Jacobi preconditioner on the 16×16 ADO blocks
    let mut inverses = Vec::with_capacity(n_ados);
    for p in 0..n_ados {
        let off = p * ADO_LEN;
        let block = Mat::<C64>::from_fn(ADO_LEN, ADO_LEN, |i, j| {
            if p == 0 && i == 0 {
                if [0, 5, 10, 15].contains(&j) {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            } else {
                l.get(off + i, off + j)
            }
        });
        inverses.push(block.partial_piv_lu().inverse());
    }
    let precond = |x: &[C64], y: &mut [C64]| {
        for (p, inv) in inverses.iter().enumerate() {
            let off = p * ADO_LEN;
            for i in 0..ADO_LEN {
                y[off + i] = (0..ADO_LEN).map(|j| inv[(i, j)] * x[off + j]).sum();
            }
        }
    };
    let mut b = vec![C64::new(0.0, 0.0); n];
    b[0] = C64::new(1.0, 0.0);
    let r = gmres(|x, y| constrained_matvec(l, x, y), precond, &b, 1e-13, 80, 20_000)?;
    Ok(r.x)
}

/// Solves `L x = 0` with `Tr ρ_0 = 1` by replacing one row of the generator
/// with the trace functional. A sparse LU factorization is tried first and
/// restarted GMRES with a block-Jacobi preconditioner is the fallback.
pub fn steady_state(h: &Hierarchy, hamiltonian: &ComplexOperator) -> Result<SteadyState> {
    let cfg = h.config();
    if cfg.bath1.alpha == 0.0 && cfg.bath2.alpha == 0.0 {
        return Err(Error::arg("steady state needs at least one coupled bath"));
    }
    let l = assemble_liouvillian(h, hamiltonian)?;
    let (x, solver) = match solve_lu(&l) {
        Ok(x) => (x, LinearSolver::SparseLu),
        Err(e) => {
            log::warn!("{e}; falling back to GMRES");
            (solve_gmres(&l, h.len())?, LinearSolver::Gmres)
        }
    };
    let mut x = x;
    let mut residual = residual_inf(&l, &x);
    if residual > STEADY_STATE_TOL && solver == LinearSolver::SparseLu {
        if let Ok(y) = solve_gmres(&l, h.len()) {
            let r2 = residual_inf(&l, &y);
            if r2 < residual {
                x = y;
                residual = r2;
            }
        }
    }
    let trace: C64 = [0, 5, 10, 15].iter().map(|&i| x[i]).sum();
    if !((trace - C64::new(1.0, 0.0)).norm() < 1e-6) {
        return Err(Error::Numeric(format!(
            "steady-state solve is ill-conditioned: trace {trace}, residual {residual:e}"
        )));
    }
    let converged = residual <= STEADY_STATE_TOL;
    if !converged {
        log::warn!("steady-state residual {residual:e} exceeds {STEADY_STATE_TOL:e}");
    }
    Ok(SteadyState {
        state: HierarchyState { data: x },
        residual,
        converged,
        solver,
    })
}

/// Reduced system state of a steady state.
pub fn steady_state_density(ss: &SteadyState) -> Result<DensityMatrix> {
    DensityMatrix::from_dynamics(&ss.state.system())
}
