use rayon::prelude::*;

use super::hierarchy::{Hierarchy, NONE};
use crate::error::{Error, Result};
use crate::ode::OdeSystem;
use crate::qops::{ComplexOperator, DensityMatrix, C64};

/// Entries per ADO (a 4×4 operator, column-stacked).
pub const ADO_LEN: usize = 16;

/// All ADOs of a hierarchy, stored contiguously in index order. Each ADO is
/// column-stacked: entry `(a, b)` of ADO `p` sits at `p·16 + b·4 + a`.
///
/// With a scaled hierarchy the stored ADOs are the rescaled ones; use
/// [`HierarchyState::ado`] to get the physical operator.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyState {
    pub(crate) data: Vec<C64>,
}

impl HierarchyState {
    pub fn zeros(h: &Hierarchy) -> Self {
        Self {
            data: vec![C64::new(0.0, 0.0); h.len() * ADO_LEN],
        }
    }

    /// Factorized initial condition: `ρ_0 = ρ₀`, all other ADOs zero.
    pub fn initial(h: &Hierarchy, rho0: &DensityMatrix) -> Result<Self> {
        if rho0.dim() != 4 {
            return Err(Error::arg("initial state must be 4x4"));
        }
        let mut s = Self::zeros(h);
        s.data[..ADO_LEN].copy_from_slice(&rho0.as_op().column_stacked());
        Ok(s)
    }

    pub fn from_vec(h: &Hierarchy, data: Vec<C64>) -> Result<Self> {
        if data.len() != h.len() * ADO_LEN {
            return Err(Error::arg(format!(
                "state has {} entries, hierarchy needs {}",
                data.len(),
                h.len() * ADO_LEN
            )));
        }
        Ok(Self { data })
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len() / ADO_LEN
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Physical ADO `p` (undoing any rescaling).
    pub fn ado(&self, h: &Hierarchy, p: usize) -> ComplexOperator {
        let scale = h.ado_scale[p];
        let v: Vec<C64> = self.data[p * ADO_LEN..(p + 1) * ADO_LEN].iter().map(|z| z * scale).collect();
        ComplexOperator::from_column_stacked(4, &v)
    }

    /// The zeroth-tier ADO, i.e. the reduced system state.
    pub fn system(&self) -> ComplexOperator {
        ComplexOperator::from_column_stacked(4, &self.data[..ADO_LEN])
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Precomputed coefficient tables of the ADO equations of motion.
#[derive(Debug, Clone)]
pub struct HeomGenerator<'a> {
    pub(crate) h: &'a Hierarchy,
    /// `H_S` row-major.
    pub(crate) ham: [C64; 16],
    /// Per bath, `−i (q_a − q_b)` in column-stacked order.
    pub(crate) up_coef: [[C64; 16]; 2],
    /// Per mode, `−i (c q_a − c* q_b)` in column-stacked order.
    pub(crate) down_coef: Vec<[C64; 16]>,
    /// `H_S` row-major when it is real.
    ham_real: Option<[f64; 16]>,
    /// Per mode, `c` when it is real.
    real_coefficient: Vec<Option<f64>>,
    pub parallel: bool,
}

impl<'a> HeomGenerator<'a> {
    pub fn new(h: &'a Hierarchy, hamiltonian: &ComplexOperator) -> Result<Self> {
        if hamiltonian.dim() != 4 {
            return Err(Error::arg(format!(
                "system Hamiltonian must be 4x4, got {0}x{0}",
                hamiltonian.dim()
            )));
        }
        let mi = C64::new(0.0, -1.0);
        let mut ham = [C64::new(0.0, 0.0); 16];
        ham.copy_from_slice(hamiltonian.as_slice());
        let mut up_coef = [[C64::new(0.0, 0.0); 16]; 2];
        for (bath, coef) in up_coef.iter_mut().enumerate() {
            let q = h.q_diag[bath];
            for b in 0..4 {
                for a in 0..4 {
                    coef[b * 4 + a] = mi * (q[a] - q[b]);
                }
            }
        }
        let down_coef = h
            .modes
            .iter()
            .map(|md| {
                let q = h.q_diag[md.bath];
                let c = md.coefficient;
                let mut coef = [C64::new(0.0, 0.0); 16];
                for b in 0..4 {
                    for a in 0..4 {
                        coef[b * 4 + a] = mi * (c * q[a] - c.conj() * q[b]);
                    }
                }
                coef
            })
            .collect();
        let ham_real = ham.iter().all(|z| z.im == 0.0).then(|| ham.map(|z| z.re));
        let real_coefficient = h.modes.iter().map(|md| (md.coefficient.im == 0.0).then_some(md.coefficient.re)).collect();
        Ok(Self {
            h,
            ham,
            up_coef,
            down_coef,
            ham_real,
            real_coefficient,
            parallel: false,
        })
    }

    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    #[inline]
    fn ado_rhs(&self, p: usize, y: &[C64], out: &mut [C64]) {
        let h = self.h;
        let m = h.modes.len();
        let r: &[C64; ADO_LEN] = y[p * ADO_LEN..(p + 1) * ADO_LEN].try_into().unwrap();
        let out: &mut [C64; ADO_LEN] = out.try_into().unwrap();
        let gamma = h.damping[p];
        match &self.ham_real {
            Some(hm) => {
                for b in 0..4 {
                    for a in 0..4 {
                        let mut acc = C64::new(0.0, 0.0);
                        for c in 0..4 {
                            acc += r[b * 4 + c] * hm[a * 4 + c] - r[c * 4 + a] * hm[c * 4 + b];
                        }
                        out[b * 4 + a] = C64::new(acc.im, -acc.re) - gamma * r[b * 4 + a];
                    }
                }
            }
            None => {
                let hm = &self.ham;
                for b in 0..4 {
                    for a in 0..4 {
                        let mut acc = C64::new(0.0, 0.0);
                        for c in 0..4 {
                            acc += hm[a * 4 + c] * r[b * 4 + c] - r[c * 4 + a] * hm[c * 4 + b];
                        }
                        out[b * 4 + a] = C64::new(acc.im, -acc.re) - gamma * r[b * 4 + a];
                    }
                }
            }
        }
        // terms whose superoperator is a real multiple of −i[Q_i, ·]
        let mut comm = [[C64::new(0.0, 0.0); ADO_LEN]; 2];
        let base = p * m;
        for k in 0..m {
            let bath = h.modes[k].bath;
            let q = h.up[base + k];
            if q != NONE {
                let f = h.up_factor[base + k];
                let u: &[C64; ADO_LEN] = y[q as usize * ADO_LEN..(q as usize + 1) * ADO_LEN].try_into().unwrap();
                let acc = &mut comm[bath];
                for e in 0..ADO_LEN {
                    acc[e] += u[e] * f;
                }
            }
            let q = h.down[base + k];
            if q != NONE {
                let f = h.down_factor[base + k];
                let d: &[C64; ADO_LEN] = y[q as usize * ADO_LEN..(q as usize + 1) * ADO_LEN].try_into().unwrap();
                match self.real_coefficient[k] {
                    Some(c) => {
                        let w = c * f;
                        let acc = &mut comm[bath];
                        for e in 0..ADO_LEN {
                            acc[e] += d[e] * w;
                        }
                    }
                    None => {
                        let coef = &self.down_coef[k];
                        for e in 0..ADO_LEN {
                            out[e] += coef[e] * d[e] * f;
                        }
                    }
                }
            }
        }
        for (bath, acc) in comm.iter().enumerate() {
            let coef = &self.up_coef[bath];
            for e in 0..ADO_LEN {
                out[e] += coef[e] * acc[e];
            }
        }
    }

    /// Writes `dy/dt` for the whole hierarchy. Serial and parallel
    /// evaluation perform the same arithmetic per ADO and agree bitwise.
    pub fn apply(&self, y: &[C64], dy: &mut [C64]) {
        debug_assert_eq!(y.len(), self.h.len() * ADO_LEN);
        if self.parallel && self.h.len() >= 64 {
            dy.par_chunks_mut(ADO_LEN)
                .enumerate()
                .with_min_len(32)
                .for_each(|(p, out)| self.ado_rhs(p, y, out));
        } else {
            for (p, out) in dy.chunks_mut(ADO_LEN).enumerate() {
                self.ado_rhs(p, y, out);
            }
        }
    }
}

impl OdeSystem for HeomGenerator<'_> {
    fn dim(&self) -> usize {
        self.h.len() * ADO_LEN
    }

    fn rhs(&self, _t: f64, y: &[C64], dy: &mut [C64]) {
        self.apply(y, dy);
    }
}

/// Time derivative of every ADO:
///
/// ```text
/// dρ_n/dt = −i[H_S, ρ_n] − (Σ n_k ν_k) ρ_n − i Σ_k [Q_k, ρ_{n+e_k}]
///           − i Σ_k n_k (c_k Q_k ρ_{n−e_k} − c_k* ρ_{n−e_k} Q_k)
/// ```
pub fn heom_rhs(h: &Hierarchy, hamiltonian: &ComplexOperator, state: &HierarchyState) -> Result<HierarchyState> {
    if state.data.len() != h.len() * ADO_LEN {
        return Err(Error::arg(format!(
            "state has {} entries, hierarchy needs {}",
            state.data.len(),
            h.len() * ADO_LEN
        )));
    }
    let g = HeomGenerator::new(h, hamiltonian)?;
    let mut out = HierarchyState::zeros(h);
    g.apply(&state.data, &mut out.data);
    Ok(out)
}
