//! Adaptive quadrature used by the correlation-function oracle.
//!
//! Two routines: globally adaptive Gauss-Kronrod (7/15 points) on finite
//! intervals, and a Fourier-integral scheme for `∫₀^∞ f(ω) cos(ωt) dω` and the
//! sine analogue. The latter integrates half-period cells one at a time and
//! accelerates the alternating partial sums with Wynn's epsilon algorithm.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Result of a quadrature with its error estimate.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss-Kronrod integration of `f` over `[a, b]`.
///
/// Stops when the summed error estimate is below `max(abs_tol, rel_tol·|I|)`.
pub fn integrate(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> Result<QuadResult> {
    let (value, error) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let (mut total, mut total_err) = (value, error);
    let mut evaluations = 15;
    while total_err > abs_tol.max(rel_tol * total.abs()) {
        if heap.len() >= max_segments {
            return Err(Error::Numeric(format!(
                "adaptive quadrature on [{a}, {b}] did not converge: estimate {total:e}, error {total_err:e} after {evaluations} evaluations"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        evaluations += 30;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // resum to shed the cancellation accumulated by incremental updates
    let value = heap.iter().map(|s| s.value).sum();
    let error = heap.iter().map(|s| s.error).sum();
    Ok(QuadResult { value, error, evaluations })
}

/// Wynn epsilon extrapolation of a sequence of partial sums. Returns the
/// extrapolated limit and the change between the last two estimates.
pub fn wynn_epsilon(partial_sums: &[f64]) -> (f64, f64) {
    let n = partial_sums.len();
    if n < 3 {
        let last = *partial_sums.last().unwrap_or(&0.0);
        let prev = if n >= 2 { partial_sums[n - 2] } else { 0.0 };
        return (last, (last - prev).abs());
    }
    // e[k] holds column k of the epsilon table for the current diagonal sweep
    let mut prev_col: Vec<f64> = vec![0.0; n + 1];
    let mut col: Vec<f64> = partial_sums.to_vec();
    let mut estimates = Vec::new();
    let mut k = 0;
    while col.len() > 1 {
        let mut next = Vec::with_capacity(col.len() - 1);
        for j in 0..col.len() - 1 {
            let diff = col[j + 1] - col[j];
            let base = if k == 0 { 0.0 } else { prev_col[j + 1] };
            if diff == 0.0 || !diff.is_finite() {
                next.push(f64::INFINITY);
            } else {
                next.push(base + 1.0 / diff);
            }
        }
        prev_col = col;
        col = next;
        k += 1;
        if k % 2 == 0 {
            if let Some(&v) = col.last() {
                if v.is_finite() {
                    estimates.push(v);
                }
            }
        }
    }
    match estimates.len() {
        0 => {
            let last = partial_sums[n - 1];
            (last, (last - partial_sums[n - 2]).abs())
        }
        1 => {
            let last = partial_sums[n - 1];
            (estimates[0], (estimates[0] - last).abs())
        }
        m => (estimates[m - 1], (estimates[m - 1] - estimates[m - 2]).abs()),
    }
}

/// Oscillatory weight of a Fourier integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FourierWeight {
    Cos,
    Sin,
}

/// `∫₀^∞ f(ω) w(ωt) dω` for a smooth `f` decaying at least like `1/ω`.
///
/// `t` must be positive. The integral is split into cells of length `π/t`,
/// each integrated adaptively, and the partial sums are extrapolated.
pub fn fourier_integral(
    f: impl Fn(f64) -> f64,
    weight: FourierWeight,
    t: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<QuadResult> {
    if !(t > 0.0) {
        return Err(Error::arg("fourier_integral requires t > 0"));
    }
    let g = |w: f64| {
        let osc = match weight {
            FourierWeight::Cos => (w * t).cos(),
            FourierWeight::Sin => (w * t).sin(),
        };
        f(w) * osc
    };
    let cell = PI / t;
    let mut partial = Vec::new();
    let mut sum = 0.0;
    let mut evaluations = 0;
    let mut quad_error = 0.0;
    let mut last_estimate = f64::NAN;
    const MIN_CELLS: usize = 12;
    const MAX_CELLS: usize = 400;
    for k in 0..MAX_CELLS {
        let a = k as f64 * cell;
        let r = integrate(&g, a, a + cell, abs_tol * 1e-3, rel_tol * 1e-2, 2000)?;
        evaluations += r.evaluations;
        quad_error += r.error;
        sum += r.value;
        partial.push(sum);
        if partial.len() >= MIN_CELLS {
            // Keep the table short; the tail of the sequence carries the
            // asymptotic alternation the extrapolation relies on.
            let window = &partial[partial.len().saturating_sub(24)..];
            let (est, change) = wynn_epsilon(window);
            let scale = est.abs().max(abs_tol);
            let stable = (est - last_estimate).abs() <= rel_tol * scale;
            if change <= rel_tol * scale && stable {
                return Ok(QuadResult {
                    value: est,
                    error: change + quad_error,
                    evaluations,
                });
            }
            last_estimate = est;
        }
    }
    Err(Error::Numeric(format!(
        "Fourier integral at t = {t} did not converge after {MAX_CELLS} cells (last estimate {last_estimate:e})"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, 1e-14, 1e-14, 10).unwrap();
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0);
        assert!((r.value - exact).abs() < 1e-13);
    }

    #[test]
    fn peaked_integrand() {
        // ∫₀¹⁰ 1/(x² + 1e-4) dx = 100·atan(1000)
        let r = integrate(|x| 1.0 / (x * x + 1e-4), 0.0, 10.0, 1e-14, 1e-12, 500).unwrap();
        let exact = 100.0 * (1000.0f64).atan();
        assert!((r.value - exact).abs() / exact < 1e-11);
    }

    #[test]
    fn nonconvergence_is_reported() {
        let r = integrate(|x| 1.0 / (x - 1.0 / 3.0).abs().sqrt(), -1.0, 1.0, 1e-15, 1e-15, 8);
        assert!(matches!(r, Err(Error::Numeric(_))));
    }

    #[test]
    fn wynn_accelerates_alternating_harmonic() {
        let mut s = 0.0;
        let sums: Vec<f64> = (1..=20)
            .map(|k| {
                s += if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
                s
            })
            .collect();
        let (est, _) = wynn_epsilon(&sums);
        assert!((est - 2f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn fourier_sine_of_lorentzian_tail() {
        // ∫₀^∞ ω/(ω²+a²) sin(ωt) dω = (π/2) e^{−at}
        let a = 0.3;
        for &t in &[0.5, 3.0, 20.0] {
            let r = fourier_integral(|w| w / (w * w + a * a), FourierWeight::Sin, t, 1e-10, 1e-14).unwrap();
            let exact = 0.5 * PI * (-a * t).exp();
            assert!((r.value - exact).abs() < 1e-9 * exact.max(1e-3), "t={t}: {} vs {exact}", r.value);
        }
    }

    #[test]
    fn fourier_cosine_of_lorentzian() {
        // ∫₀^∞ cos(ωt)/(ω²+a²) dω = π e^{−at} / (2a)
        let a = 2.0;
        let t = 1.5;
        let r = fourier_integral(|w| 1.0 / (w * w + a * a), FourierWeight::Cos, t, 1e-10, 1e-14).unwrap();
        let exact = PI * (-a * t).exp() / (2.0 * a);
        assert!((r.value - exact).abs() < 1e-10);
    }
}
