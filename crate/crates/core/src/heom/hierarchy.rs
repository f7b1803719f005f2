use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::bath::{correlation_expansion, BathExpansion, Scheme};
use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::qops::{sigma, Axis, ComplexOperator, C64};

/// Marker for an absent neighbor.
pub const NONE: u32 = u32::MAX;

/// Working vectors the integrator keeps per state entry; used for the
/// memory estimate.
const INTEGRATOR_VECTORS: usize = 20;

/// Multi-index `n⃗ = {n_{i,k}}` of one auxiliary density operator.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AdoIndex {
    pub counts: Vec<u8>,
}

impl AdoIndex {
    pub fn tier(&self) -> usize {
        self.counts.iter().map(|&c| c as usize).sum()
    }
}

/// One exponential of one bath's correlation function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    /// 0 for bath 1, 1 for bath 2.
    pub bath: usize,
    pub coefficient: C64,
    pub rate: C64,
}

/// `binomial(n, k)`, saturating at `usize::MAX`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

/// Number of ADOs for `modes` exponents truncated at tier `l`.
pub fn ado_count(modes: usize, l: usize) -> usize {
    binomial(modes + l, l)
}

/// The truncated hierarchy: index set, neighbor tables, bath terms and the
/// coupling operators `Q₁ = σ_z⊗I`, `Q₂ = I⊗σ_z`.
///
/// Indices are ordered by tier, and within a tier in descending
/// lexicographic order of the counts, so index 0 is always the physical
/// state and the `M` tier-1 indices follow in mode order.
#[derive(Debug, Clone, PartialEq)]
pub struct Hierarchy {
    pub(crate) config: ModelConfig,
    pub(crate) l: usize,
    pub(crate) expansions: [BathExpansion; 2],
    pub(crate) modes: Vec<Mode>,
    pub(crate) counts: Vec<u8>,
    pub(crate) up: Vec<u32>,
    pub(crate) down: Vec<u32>,
    pub(crate) damping: Vec<C64>,
    pub(crate) scaled: bool,
    /// Per (ADO, mode) multiplier of the coupling to the tier above.
    pub(crate) up_factor: Vec<f64>,
    /// Per (ADO, mode) multiplier of the coupling to the tier below.
    pub(crate) down_factor: Vec<f64>,
    /// Per ADO: physical ADO = `ado_scale` × stored ADO.
    pub(crate) ado_scale: Vec<f64>,
    pub(crate) q_diag: [[f64; 4]; 2],
}

/// Build options beyond the model configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HierarchyOptions {
    pub k: usize,
    pub l: usize,
    pub scheme: Scheme,
    /// Store ADOs rescaled by `1/sqrt(Π n! |c|^n)`; mathematically
    /// equivalent, better conditioned for deep hierarchies.
    pub scaled: bool,
    pub memory_budget_bytes: usize,
}

impl HierarchyOptions {
    pub fn from_config(cfg: &ModelConfig) -> Self {
        Self {
            k: cfg.numerics.k,
            l: cfg.numerics.l,
            scheme: cfg.numerics.scheme,
            scaled: false,
            memory_budget_bytes: cfg.memory_budget_bytes(),
        }
    }
}

/// Estimated bytes needed to propagate a hierarchy of `n_ados` with `modes`
/// exponents.
pub fn estimated_bytes(n_ados: usize, modes: usize) -> usize {
    let state = n_ados.saturating_mul(16 * std::mem::size_of::<C64>());
    let tables = n_ados.saturating_mul(modes).saturating_mul(2 * 4 + 2 * 8 + 1);
    state.saturating_mul(INTEGRATOR_VECTORS).saturating_add(tables)
}

fn enumerate(modes: usize, l: usize) -> Vec<Vec<u8>> {
    fn rec(pos: usize, remaining: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if pos == cur.len() {
            out.push(cur.clone());
            return;
        }
        for n in 0..=remaining {
            cur[pos] = n as u8;
            rec(pos + 1, remaining - n, cur, out);
        }
        cur[pos] = 0;
    }
    let mut out = Vec::new();
    let mut cur = vec![0u8; modes];
    rec(0, l, &mut cur, &mut out);
    out.sort_by(|a, b| {
        let ta: usize = a.iter().map(|&x| x as usize).sum();
        let tb: usize = b.iter().map(|&x| x as usize).sum();
        ta.cmp(&tb).then_with(|| b.cmp(a))
    });
    out
}

impl Hierarchy {
    /// Builds the hierarchy for `cfg` with the settings in `cfg.numerics`.
    pub fn build(cfg: &ModelConfig) -> Result<Self> {
        Self::build_with(cfg, HierarchyOptions::from_config(cfg))
    }

    pub fn build_with(cfg: &ModelConfig, opts: HierarchyOptions) -> Result<Self> {
        cfg.validate()?;
        let e1 = correlation_expansion(&cfg.bath1, opts.k, opts.scheme)?;
        let e2 = correlation_expansion(&cfg.bath2, opts.k, opts.scheme)?;
        Self::from_expansions(cfg, [e1, e2], opts)
    }

    /// Builds a hierarchy from explicit expansions (their specs are not
    /// checked against `cfg`).
    pub fn from_expansions(cfg: &ModelConfig, expansions: [BathExpansion; 2], opts: HierarchyOptions) -> Result<Self> {
        let l = opts.l;
        if l > u8::MAX as usize {
            return Err(Error::arg(format!("truncation tier {l} is too deep")));
        }
        let modes: Vec<Mode> = expansions
            .iter()
            .enumerate()
            .flat_map(|(bath, e)| {
                // an uncoupled bath contributes no exponents
                e.terms.iter().filter(|t| t.coefficient != C64::new(0.0, 0.0)).map(move |t| Mode {
                    bath,
                    coefficient: t.coefficient,
                    rate: t.rate,
                })
            })
            .collect();
        if modes.iter().any(|m| !(m.rate.re > 0.0)) {
            return Err(Error::arg("every expansion rate must have a positive real part"));
        }
        let m = modes.len();
        let n_expected = ado_count(m, l);
        let bytes = estimated_bytes(n_expected, m);
        if bytes > opts.memory_budget_bytes || n_expected >= NONE as usize {
            return Err(Error::Resource {
                what: format!("hierarchy with {n_expected} ADOs ({m} exponents, tier {l})"),
                required: bytes,
                budget: opts.memory_budget_bytes,
            });
        }
        let indices = enumerate(m, l);
        debug_assert_eq!(indices.len(), n_expected);
        let n = indices.len();
        let position: HashMap<&[u8], u32> = indices
            .iter()
            .enumerate()
            .map(|(p, v)| (v.as_slice(), p as u32))
            .collect();
        let mut counts = Vec::with_capacity(n * m);
        let mut up = vec![NONE; n * m];
        let mut down = vec![NONE; n * m];
        let mut damping = Vec::with_capacity(n);
        let mut probe = vec![0u8; m];
        for (p, v) in indices.iter().enumerate() {
            counts.extend_from_slice(v);
            damping.push(
                v.iter()
                    .zip(&modes)
                    .map(|(&c, md)| md.rate * c as f64)
                    .sum::<C64>(),
            );
            for k in 0..m {
                probe.copy_from_slice(v);
                if (v.iter().map(|&x| x as usize).sum::<usize>()) < l {
                    probe[k] += 1;
                    up[p * m + k] = position[probe.as_slice()];
                    probe[k] -= 1;
                }
                if v[k] > 0 {
                    probe[k] -= 1;
                    down[p * m + k] = position[probe.as_slice()];
                }
            }
        }

        let mut up_factor = vec![0.0; n * m];
        let mut down_factor = vec![0.0; n * m];
        let mut ado_scale = vec![1.0; n];
        for p in 0..n {
            for k in 0..m {
                let nk = counts[p * m + k] as f64;
                let cabs = modes[k].coefficient.norm();
                if opts.scaled {
                    if cabs > 0.0 {
                        up_factor[p * m + k] = ((nk + 1.0) * cabs).sqrt();
                        down_factor[p * m + k] = (nk / cabs).sqrt();
                    }
                    ado_scale[p] *= (factorial(counts[p * m + k]) * cabs.powi(counts[p * m + k] as i32)).sqrt();
                } else {
                    up_factor[p * m + k] = 1.0;
                    down_factor[p * m + k] = nk;
                }
            }
        }
        let diag = |op: &ComplexOperator| [0, 1, 2, 3].map(|i| op[(i, i)].re);
        let q_diag = [diag(&sigma(Axis::Z, 1)), diag(&sigma(Axis::Z, 2))];
        Ok(Self {
            config: cfg.clone(),
            l,
            expansions,
            modes,
            counts,
            up,
            down,
            damping,
            scaled: opts.scaled,
            up_factor,
            down_factor,
            ado_scale,
            q_diag,
        })
    }

    pub fn len(&self) -> usize {
        self.damping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.damping.is_empty()
    }

    pub fn tier_limit(&self) -> usize {
        self.l
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn expansions(&self) -> &[BathExpansion; 2] {
        &self.expansions
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn is_scaled(&self) -> bool {
        self.scaled
    }

    pub fn index(&self, p: usize) -> AdoIndex {
        let m = self.n_modes();
        AdoIndex {
            counts: self.counts[p * m..(p + 1) * m].to_vec(),
        }
    }

    pub fn indices(&self) -> impl Iterator<Item = AdoIndex> + '_ {
        (0..self.len()).map(|p| self.index(p))
    }

    /// Position of a multi-index, if it is part of the hierarchy.
    pub fn position(&self, idx: &AdoIndex) -> Option<usize> {
        let m = self.n_modes();
        if idx.counts.len() != m {
            return None;
        }
        (0..self.len()).find(|&p| self.counts[p * m..(p + 1) * m] == idx.counts[..])
    }

    /// Position of `n⃗ + ê_k`, if retained.
    pub fn up(&self, p: usize, k: usize) -> Option<usize> {
        let v = self.up[p * self.n_modes() + k];
        (v != NONE).then_some(v as usize)
    }

    /// Position of `n⃗ − ê_k`, if it exists.
    pub fn down(&self, p: usize, k: usize) -> Option<usize> {
        let v = self.down[p * self.n_modes() + k];
        (v != NONE).then_some(v as usize)
    }

    /// Position of the tier-1 ADO `ê_k`.
    pub fn first_tier(&self, k: usize) -> Option<usize> {
        self.up(0, k)
    }

    /// `Σ n_k ν_k` of ADO `p`.
    pub fn damping(&self, p: usize) -> C64 {
        self.damping[p]
    }

    /// The coupling operator of bath `i` (0-based).
    pub fn coupling_operator(&self, bath: usize) -> ComplexOperator {
        sigma(Axis::Z, bath + 1)
    }
}

fn factorial(n: u8) -> f64 {
    (1..=n as u32).map(f64::from).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::Scheme;

    fn opts(k: usize, l: usize) -> HierarchyOptions {
        HierarchyOptions {
            k,
            l,
            scheme: Scheme::Pade,
            scaled: false,
            memory_budget_bytes: 1 << 34,
        }
    }

    fn www() -> ModelConfig {
        ModelConfig::preset("WWW").unwrap()
    }

    #[test]
    fn tier_zero_has_one_ado() {
        for k in 0..4 {
            assert_eq!(Hierarchy::build_with(&www(), opts(k, 0)).unwrap().len(), 1);
        }
    }

    #[test]
    fn counts_match_binomial() {
        assert_eq!(Hierarchy::build_with(&www(), opts(4, 2)).unwrap().len(), 66);
        assert_eq!(binomial(16, 6), 8008);
        for (k, l) in [(0, 3), (1, 2), (2, 3), (1, 5)] {
            let h = Hierarchy::build_with(&www(), opts(k, l)).unwrap();
            assert_eq!(h.len(), ado_count(2 * (k + 1), l));
        }
    }

    #[test]
    fn ordering_and_neighbors() {
        let h = Hierarchy::build_with(&www(), opts(1, 3)).unwrap();
        let m = h.n_modes();
        assert!(h.index(0).counts.iter().all(|&c| c == 0));
        for k in 0..m {
            let p = h.first_tier(k).unwrap();
            assert_eq!(p, k + 1);
            assert_eq!(h.index(p).tier(), 1);
            assert_eq!(h.index(p).counts[k], 1);
        }
        for p in 0..h.len() {
            let idx = h.index(p);
            for k in 0..m {
                if let Some(q) = h.up(p, k) {
                    assert_eq!(h.down(q, k), Some(p));
                    assert_eq!(h.index(q).tier(), idx.tier() + 1);
                } else {
                    assert_eq!(idx.tier(), h.tier_limit());
                }
                if let Some(q) = h.down(p, k) {
                    assert_eq!(h.up(q, k), Some(p));
                } else {
                    assert_eq!(idx.counts[k], 0);
                }
            }
            assert_eq!(h.position(&idx), Some(p));
        }
        let tiers: Vec<usize> = h.indices().map(|i| i.tier()).collect();
        assert!(tiers.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn builds_are_identical() {
        let a = Hierarchy::build_with(&www(), opts(2, 3)).unwrap();
        let b = Hierarchy::build_with(&www(), opts(2, 3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn memory_budget_is_enforced() {
        let mut o = opts(4, 6);
        o.memory_budget_bytes = 1 << 20;
        match Hierarchy::build_with(&www(), o) {
            Err(Error::Resource { what, required, budget }) => {
                assert!(what.contains("8008"));
                assert!(required > budget);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn damping_is_sum_of_rates() {
        let h = Hierarchy::build_with(&www(), opts(1, 2)).unwrap();
        for p in 0..h.len() {
            let idx = h.index(p);
            let expected: f64 = idx.counts.iter().zip(h.modes()).map(|(&c, md)| c as f64 * md.rate.re).sum();
            assert!((h.damping(p).re - expected).abs() < 1e-12);
            assert!(h.damping(p).re >= 0.0);
        }
    }
}
