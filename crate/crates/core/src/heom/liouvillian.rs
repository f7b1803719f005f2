use std::collections::BTreeMap;

use super::hierarchy::{Hierarchy, NONE};
use super::rhs::{HeomGenerator, ADO_LEN};
use crate::error::{Error, Result};
use crate::qops::{ComplexOperator, C64};

/// The hierarchy generator as a sparse matrix in compressed-row form, acting
/// on the concatenated column-stacked ADOs.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseLiouvillian {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<C64>,
}

impl SparseLiouvillian {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Entries `(col, value)` of one row.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[a..b].iter().map(|&c| c as usize).zip(self.vals[a..b].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.row(i).find(|&(c, _)| c == j).map(|(_, v)| v).unwrap_or(C64::new(0.0, 0.0))
    }

    /// `y = L x`
    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            *yi = acc;
        }
    }

    /// All entries as `(row, col, value)` triplets in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    /// Dense row-major copy; intended for small hierarchies.
    pub fn to_dense(&self) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.n * self.n];
        for (i, j, v) in self.triplets() {
            out[i * self.n + j] = v;
        }
        out
    }
}

/// Upper bound on the stored entries of the assembled generator.
pub fn estimated_nnz(n_ados: usize, modes: usize) -> usize {
    n_ados.saturating_mul(ADO_LEN).saturating_mul(7 + 2 * modes)
}

/// Assembles the generator whose product with a vectorized state equals
/// [`heom_rhs`](super::heom_rhs) on that state.
pub fn assemble_liouvillian(h: &Hierarchy, hamiltonian: &ComplexOperator) -> Result<SparseLiouvillian> {
    let g = HeomGenerator::new(h, hamiltonian)?;
    let m = h.n_modes();
    let nnz = estimated_nnz(h.len(), m);
    let bytes = nnz.saturating_mul(std::mem::size_of::<C64>() + 4);
    let budget = h.config.memory_budget_bytes();
    if bytes > budget {
        return Err(Error::Resource {
            what: format!("sparse generator with up to {nnz} entries"),
            required: bytes,
            budget,
        });
    }
    let n = h.len() * ADO_LEN;
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::with_capacity(nnz);
    let mut vals = Vec::with_capacity(nnz);
    row_ptr.push(0);
    let mi = C64::new(0.0, -1.0);
    let mut row: BTreeMap<usize, C64> = BTreeMap::new();
    for p in 0..h.len() {
        let off = p * ADO_LEN;
        for b in 0..4 {
            for a in 0..4 {
                let e = b * 4 + a;
                row.clear();
                for c in 0..4 {
                    *row.entry(off + b * 4 + c).or_default() += mi * g.ham[a * 4 + c];
                    *row.entry(off + c * 4 + a).or_default() -= mi * g.ham[c * 4 + b];
                }
                *row.entry(off + e).or_default() -= h.damping[p];
                for k in 0..m {
                    let q = h.up[p * m + k];
                    if q != NONE {
                        let v = g.up_coef[h.modes[k].bath][e] * h.up_factor[p * m + k];
                        *row.entry(q as usize * ADO_LEN + e).or_default() += v;
                    }
                    let q = h.down[p * m + k];
                    if q != NONE {
                        let v = g.down_coef[k][e] * h.down_factor[p * m + k];
                        *row.entry(q as usize * ADO_LEN + e).or_default() += v;
                    }
                }
                for (&col, &v) in &row {
                    if v != C64::new(0.0, 0.0) {
                        cols.push(col as u32);
                        vals.push(v);
                    }
                }
                row_ptr.push(vals.len());
            }
        }
    }
    Ok(SparseLiouvillian { n, row_ptr, cols, vals })
}
