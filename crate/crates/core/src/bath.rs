//! Drude-Lorentz baths and their exponential decompositions.
//!
//! The spectral density is `J(ω) = α ω ω_c / (ω² + ω_c²)` and the bath
//! correlation function
//!
//! ```text
//! C(t) = (1/π) ∫₀^∞ J(ω) [coth(βω/2) cos ωt − i sin ωt] dω
//! ```
//!
//! is approximated by `Σ_k c_k e^{−ν_k t}`. The first term is always the
//! Drude pole `ν₀ = ω_c`; the remaining `K` terms come from poles of the
//! Bose function, either at the Matsubara frequencies or at the poles of a
//! `[N−1/N]` Padé approximant.
//!
//! For a Drude-Lorentz bath `Re C(t)` diverges logarithmically as `t → 0`,
//! because `J(ω) coth(βω/2) ~ αω_c/ω` at large `ω`. The oracle therefore
//! refuses `t = 0` and the reconstruction metric samples `t > 0` only.

use std::f64::consts::PI;

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qops::C64;
use crate::quadrature::{fourier_integral, integrate, FourierWeight};

/// Relative tolerance of the quadrature oracle.
pub const ORACLE_REL_TOL: f64 = 1e-8;
/// Number of samples in the reconstruction grid.
pub const RECONSTRUCTION_POINTS: usize = 200;
/// Reconstruction error above which an expansion is reported as unconverged.
pub const RECONSTRUCTION_TOL: f64 = 1e-4;

/// A Drude-Lorentz bath at a fixed temperature (`ħ = k_B = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    /// Dimensionless coupling strength.
    pub alpha: f64,
    /// Cutoff frequency.
    pub cutoff: f64,
    pub temperature: f64,
}

impl BathSpec {
    pub fn new(alpha: f64, cutoff: f64, temperature: f64) -> Result<Self> {
        let spec = Self {
            alpha,
            cutoff,
            temperature,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::arg(format!("bath coupling must be finite and >= 0, got {}", self.alpha)));
        }
        if !(self.cutoff.is_finite() && self.cutoff > 0.0) {
            return Err(Error::arg(format!("bath cutoff must be finite and > 0, got {}", self.cutoff)));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::arg(format!(
                "bath temperature must be finite and > 0, got {}",
                self.temperature
            )));
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.temperature
    }
}

/// `J(ω) = α ω ω_c / (ω² + ω_c²)`; odd in `ω`.
pub fn spectral_density(spec: &BathSpec, omega: f64) -> f64 {
    spec.alpha * omega * spec.cutoff / (omega * omega + spec.cutoff * spec.cutoff)
}

/// Brute-force quadrature of the bath correlation function at `t ≠ 0`.
///
/// Negative times are accepted and satisfy `C(−t) = C(t)*` by construction.
/// At `t = 0` the real part diverges and a numeric error is returned.
pub fn correlation_oracle(spec: &BathSpec, t: f64) -> Result<C64> {
    spec.validate()?;
    if !t.is_finite() {
        return Err(Error::arg("correlation time must be finite"));
    }
    if t == 0.0 {
        return Err(Error::Numeric(
            "Re C(t) of a Drude-Lorentz bath diverges logarithmically at t = 0".into(),
        ));
    }
    if spec.alpha == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let tau = t.abs();
    let sign = t.signum();
    // Split J coth = J (coth − 1) + J. The first piece decays like e^{−βω}
    // and is integrated on a finite window; the second is a pure Fourier
    // integral with a 1/ω tail.
    let excess = |w: f64| {
        let x = spec.beta() * w;
        let bose2 = if x < 1e-8 { 2.0 / x.max(f64::MIN_POSITIVE) } else { 2.0 / x.exp_m1() };
        if w == 0.0 {
            2.0 * spec.alpha / (spec.beta() * spec.cutoff)
        } else {
            spectral_density(spec, w) * bose2 * (w * tau).cos()
        }
    };
    let scale = spec.alpha * spec.cutoff;
    let window = 60.0 * spec.temperature;
    let cells = ((window * tau / PI).ceil() as usize).clamp(1, 20_000);
    let width = window / cells as f64;
    let mut re_thermal = 0.0;
    for j in 0..cells {
        let a = j as f64 * width;
        re_thermal += integrate(excess, a, a + width, 1e-16 * scale, ORACLE_REL_TOL * 1e-3, 2000)?.value;
    }
    let j = |w: f64| spectral_density(spec, w);
    let re_vac = fourier_integral(j, FourierWeight::Cos, tau, ORACLE_REL_TOL * 1e-2, 1e-16 * scale)?.value;
    let im = -fourier_integral(j, FourierWeight::Sin, tau, ORACLE_REL_TOL * 1e-2, 1e-16 * scale)?.value;
    Ok(C64::new((re_thermal + re_vac) / PI, sign * im / PI))
}

/// Expansion scheme for the Bose function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Matsubara,
    Pade,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Matsubara => "matsubara",
            Scheme::Pade => "pade",
        })
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "matsubara" => Ok(Scheme::Matsubara),
            "pade" | "padé" => Ok(Scheme::Pade),
            other => Err(Error::arg(format!("unknown expansion scheme `{other}`"))),
        }
    }
}

/// One exponential `c e^{−ν t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionTerm {
    pub coefficient: C64,
    pub rate: C64,
}

/// Exponential decomposition of a bath correlation function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathExpansion {
    pub spec: BathSpec,
    pub scheme: Scheme,
    /// Number of terms beyond the Drude pole.
    pub k: usize,
    /// Drude pole first, then the Bose-function poles in ascending order.
    pub terms: Vec<ExpansionTerm>,
    /// Diagnostics raised while building the expansion.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl BathExpansion {
    /// `Σ c_k e^{−ν_k t}`
    pub fn evaluate(&self, t: f64) -> C64 {
        self.terms
            .iter()
            .map(|term| term.coefficient * (-term.rate * t).exp())
            .sum()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Poles and residues of the `[N−1/N]` Padé approximant of the Bose
/// function, in the form `1/(1−e^{−x}) ≈ 1/x + 1/2 + Σ_j 2 κ_j x/(x² + ξ_j²)`.
/// Returns `(κ, ξ)` with `ξ` ascending.
pub fn pade_poles(n: usize) -> (Vec<f64>, Vec<f64>) {
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let tridiag_eigs = |size: usize, off: &dyn Fn(usize) -> f64| -> Vec<f64> {
        if size == 0 {
            return Vec::new();
        }
        let m = Mat::<f64>::from_fn(size, size, |i, j| {
            if j == i + 1 {
                off(i)
            } else if i == j + 1 {
                off(j)
            } else {
                0.0
            }
        });
        let mut ev = m
            .self_adjoint_eigenvalues(Side::Lower)
            .expect("symmetric tridiagonal eigenproblem");
        ev.sort_by(f64::total_cmp);
        ev
    };
    let ev = tridiag_eigs(2 * n, &|k| 1.0 / (((2 * k + 5) * (2 * k + 3)) as f64).sqrt());
    let xi: Vec<f64> = ev[..n].iter().map(|v| -2.0 / v).collect();
    let ev = tridiag_eigs(2 * n - 1, &|k| 1.0 / (((2 * k + 7) * (2 * k + 5)) as f64).sqrt());
    let chi: Vec<f64> = ev[..n - 1].iter().map(|v| -2.0 / v).collect();
    let prefactor = 0.5 * n as f64 * (2 * (n + 1) + 1) as f64;
    let kappa = (0..n)
        .map(|j| {
            let mut v = prefactor;
            for k in 0..n - 1 {
                let delta = if j == k { 1.0 } else { 0.0 };
                v *= (chi[k] * chi[k] - xi[j] * xi[j]) / (xi[k] * xi[k] - xi[j] * xi[j] + delta);
            }
            let delta = if j == n - 1 { 1.0 } else { 0.0 };
            v / (xi[n - 1] * xi[n - 1] - xi[j] * xi[j] + delta)
        })
        .collect();
    (kappa, xi)
}

/// Approximant of `coth(x/2)` used by each scheme with `k` poles.
///
/// Matsubara: `2/x + Σ_{j≤k} 4x/(x² + (2πj)²)`. Padé: `2/x + Σ 4κ_j x/(x² + ξ_j²)`.
pub fn coth_approximant(scheme: Scheme, k: usize, x: f64) -> f64 {
    let mut v = 2.0 / x;
    match scheme {
        Scheme::Matsubara => {
            for j in 1..=k {
                let nu = 2.0 * PI * j as f64;
                v += 4.0 * x / (x * x + nu * nu);
            }
        }
        Scheme::Pade => {
            let (kappa, xi) = pade_poles(k);
            for (kap, x0) in kappa.iter().zip(&xi) {
                v += 4.0 * kap * x / (x * x + x0 * x0);
            }
        }
    }
    v
}

fn pole_term(spec: &BathSpec, residue: f64, nu: f64) -> ExpansionTerm {
    // Residue of J(ω)coth(βω/2) at ω = −iν for a pole of coth with unit
    // weight `residue`: c = (2 residue / β) α ω_c ν / (ν² − ω_c²).
    let wc = spec.cutoff;
    let c = 2.0 * residue * spec.alpha * wc * nu / (spec.beta() * (nu * nu - wc * wc));
    ExpansionTerm {
        coefficient: C64::new(c, 0.0),
        rate: C64::new(nu, 0.0),
    }
}

/// Exponential decomposition of the bath correlation function with `k` terms
/// beyond the Drude pole.
pub fn correlation_expansion(spec: &BathSpec, k: usize, scheme: Scheme) -> Result<BathExpansion> {
    spec.validate()?;
    let beta = spec.beta();
    let wc = spec.cutoff;
    let half = 0.5 * spec.alpha * wc;
    let cot = 1.0 / (0.5 * beta * wc).tan();
    let mut terms = vec![ExpansionTerm {
        coefficient: C64::new(half * cot, -half),
        rate: C64::new(wc, 0.0),
    }];
    match scheme {
        Scheme::Matsubara => {
            for j in 1..=k {
                let nu = 2.0 * PI * j as f64 / beta;
                terms.push(pole_term(spec, 1.0, nu));
            }
        }
        Scheme::Pade => {
            let (kappa, xi) = pade_poles(k);
            for (kap, x0) in kappa.iter().zip(&xi) {
                terms.push(pole_term(spec, *kap, x0 / beta));
            }
        }
    }
    let mut warnings = Vec::new();
    if terms.iter().any(|t| !(t.coefficient.re.is_finite() && t.coefficient.im.is_finite())) {
        return Err(Error::Numeric(format!(
            "expansion coefficients are not finite (a Bose pole coincides with the cutoff {wc})"
        )));
    }
    if k == 0 {
        let dropped = matsubara_tail_weight(spec, 0);
        let kept = (terms[0].coefficient / terms[0].rate).norm();
        if dropped > RECONSTRUCTION_TOL * kept {
            let msg = format!(
                "K = 0 at T = {} (cutoff {wc}): dropped Matsubara weight is {:.2e} of the Drude term; expansion is likely unconverged",
                spec.temperature,
                dropped / kept
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }
    Ok(BathExpansion {
        spec: *spec,
        scheme,
        k,
        terms,
        warnings,
    })
}

/// `Σ_{j>k} |c_j|/ν_j` over Matsubara terms, the integrated weight dropped by
/// truncating after `k` terms.
fn matsubara_tail_weight(spec: &BathSpec, k: usize) -> f64 {
    let mut total = 0.0;
    for j in (k + 1)..(k + 20_000) {
        let nu = 2.0 * PI * j as f64 / spec.beta();
        let term = pole_term(spec, 1.0, nu);
        total += term.coefficient.norm() / nu;
    }
    total
}

/// The time grid on which expansions are compared to the oracle:
/// `t_j = j (10/ω_c) / 200` for `j = 1..=200`.
pub fn reconstruction_grid(spec: &BathSpec) -> Vec<f64> {
    let t_max = 10.0 / spec.cutoff;
    (1..=RECONSTRUCTION_POINTS)
        .map(|j| j as f64 * t_max / RECONSTRUCTION_POINTS as f64)
        .collect()
}

/// Oracle values on [`reconstruction_grid`].
pub fn oracle_on_grid(spec: &BathSpec) -> Result<Vec<(f64, C64)>> {
    reconstruction_grid(spec)
        .into_iter()
        .map(|t| correlation_oracle(spec, t).map(|c| (t, c)))
        .collect()
}

/// `max_j |Σ c e^{−ν t_j} − C(t_j)| / max_j |C(t_j)|` on precomputed oracle samples.
pub fn reconstruction_error_against(expansion: &BathExpansion, samples: &[(f64, C64)]) -> f64 {
    let norm = samples.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max);
    let worst = samples
        .iter()
        .map(|(t, c)| (expansion.evaluate(*t) - c).norm())
        .fold(0.0, f64::max);
    if norm == 0.0 {
        worst
    } else {
        worst / norm
    }
}

/// Reconstruction error of an expansion against the quadrature oracle.
pub fn reconstruction_error(expansion: &BathExpansion) -> Result<f64> {
    let samples = oracle_on_grid(&expansion.spec)?;
    Ok(reconstruction_error_against(expansion, &samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn www1() -> BathSpec {
        BathSpec::new(0.05 / PI, 0.1, 1.04).unwrap()
    }

    #[test]
    fn spectral_density_values() {
        let s = BathSpec::new(1.0, 0.1, 1.0).unwrap();
        assert_eq!(spectral_density(&s, 0.0), 0.0);
        assert!((spectral_density(&s, 0.2) - 0.4).abs() < 1e-15);
        for &(a, wc) in &[(0.3, 0.05), (2.0, 7.0)] {
            let s = BathSpec::new(a, wc, 1.0).unwrap();
            assert!((spectral_density(&s, wc) - a / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn spec_validation() {
        assert!(BathSpec::new(-0.1, 1.0, 1.0).is_err());
        assert!(BathSpec::new(0.1, 0.0, 1.0).is_err());
        assert!(BathSpec::new(0.1, 1.0, 0.0).is_err());
        assert!(BathSpec::new(f64::NAN, 1.0, 1.0).is_err());
    }

    #[test]
    fn oracle_rejects_zero_time() {
        assert!(matches!(correlation_oracle(&www1(), 0.0), Err(Error::Numeric(_))));
    }

    #[test]
    fn oracle_imaginary_part_matches_drude_residue() {
        // Im C(t) = −(α ω_c / 2) e^{−ω_c t}, independent of temperature
        let s = www1();
        for &t in &[1e-3, 0.7, 15.0] {
            let c = correlation_oracle(&s, t).unwrap();
            let exact = -0.5 * s.alpha * s.cutoff * (-s.cutoff * t).exp();
            assert!((c.im - exact).abs() < 1e-8 * exact.abs(), "t={t}: {} vs {exact}", c.im);
        }
    }

    #[test]
    fn pade_poles_n1_and_n2() {
        // one pole: matches the x/6 term of the coth series, ξ² = 60, κ = 5/2
        let (kappa, xi) = pade_poles(1);
        assert_eq!(kappa.len(), 1);
        assert!((xi[0] - 60f64.sqrt()).abs() < 1e-12);
        assert!((kappa[0] - 2.5).abs() < 1e-12);
        let (kappa, xi) = pade_poles(4);
        assert!(xi.windows(2).all(|w| w[0] < w[1]));
        assert!(kappa.iter().all(|&k| k > 0.0));
        // lowest Padé pole sits just above the first Matsubara frequency
        assert!((xi[0] - 2.0 * PI).abs() < 1e-6);
    }

    #[test]
    fn expansion_structure() {
        let s = www1();
        let m = correlation_expansion(&s, 3, Scheme::Matsubara).unwrap();
        assert_eq!(m.terms.len(), 4);
        assert_eq!(m.terms[0].rate, C64::new(s.cutoff, 0.0));
        for (j, t) in m.terms.iter().enumerate().skip(1) {
            assert!((t.rate.re - 2.0 * PI * j as f64 * s.temperature).abs() < 1e-12);
        }
        let p = correlation_expansion(&s, 4, Scheme::Pade).unwrap();
        assert!(p.terms.iter().all(|t| t.rate.re > 0.0));
        assert!(p.warnings.is_empty());
    }

    #[test]
    fn low_temperature_k0_warns() {
        let cold = BathSpec::new(0.1, 1.0, 0.05).unwrap();
        let e = correlation_expansion(&cold, 0, Scheme::Pade).unwrap();
        assert_eq!(e.warnings.len(), 1);
        let e = correlation_expansion(&cold, 2, Scheme::Pade).unwrap();
        assert!(e.warnings.is_empty());
    }

    #[test]
    fn pade_bose_approximant_beats_matsubara() {
        for k in 1..=6 {
            let mut worst_p = 0.0f64;
            let mut worst_m = 0.0f64;
            for i in 1..=400 {
                let x = 0.05 * i as f64;
                let exact = 1.0 / (0.5 * x).tanh();
                worst_p = worst_p.max((coth_approximant(Scheme::Pade, k, x) - exact).abs());
                worst_m = worst_m.max((coth_approximant(Scheme::Matsubara, k, x) - exact).abs());
            }
            assert!(worst_p < worst_m, "k={k}: pade {worst_p:e} matsubara {worst_m:e}");
        }
    }

    #[test]
    fn zero_coupling_expansion_vanishes() {
        let s = BathSpec::new(0.0, 0.1, 1.0).unwrap();
        let e = correlation_expansion(&s, 4, Scheme::Pade).unwrap();
        assert!(e.terms.iter().all(|t| t.coefficient.norm() == 0.0));
        assert_eq!(correlation_oracle(&s, 1.0).unwrap(), C64::new(0.0, 0.0));
    }
}
