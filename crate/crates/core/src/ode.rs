//! Dormand-Prince 5(4) integrator with dense output.
//!
//! Step-size control follows the PI controller of Hairer, Nørsett and
//! Wanner; grid points are filled by the fourth-order continuous extension
//! of the method, so requested output times never constrain the step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qops::C64;

/// A linear or nonlinear system `dy/dt = f(t, y)` over complex vectors.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]);
}

/// Integrator tolerances and limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; chosen automatically when `None`.
    pub h0: Option<f64>,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            h0: None,
            max_step: f64::INFINITY,
            max_steps: 10_000_000,
        }
    }
}

/// Work counters of one integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OdeStats {
    pub rhs_evaluations: usize,
    pub accepted: usize,
    pub rejected: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn axpy_into(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for i in 0..out.len() {
        let mut acc = C64::new(0.0, 0.0);
        for (a, k) in terms {
            acc += k[i] * *a;
        }
        out[i] = y[i] + acc * h;
    }
}

fn error_norm(err: &[C64], y0: &[C64], y1: &[C64], opts: &OdeOptions) -> f64 {
    let n = err.len().max(1);
    let mut acc = 0.0;
    for i in 0..err.len() {
        let sc = opts.atol + opts.rtol * y0[i].norm().max(y1[i].norm());
        let r = err[i].norm() / sc;
        acc += r * r;
    }
    (acc / n as f64).sqrt()
}

/// Integrates `sys` from `t_grid[0]` through every point of `t_grid`,
/// calling `observe(t, y)` at each grid time (including the first).
///
/// The grid must be nondecreasing.
pub fn integrate<S: OdeSystem + ?Sized>(
    sys: &S,
    y0: &[C64],
    t_grid: &[f64],
    opts: &OdeOptions,
    mut observe: impl FnMut(f64, &[C64]) -> Result<()>,
) -> Result<OdeStats> {
    let n = sys.dim();
    if y0.len() != n {
        return Err(Error::arg(format!("initial state has length {}, system expects {n}", y0.len())));
    }
    if t_grid.is_empty() {
        return Err(Error::arg("time grid is empty"));
    }
    if t_grid.windows(2).any(|w| !(w[1] >= w[0])) || t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::arg("time grid must be finite and sorted"));
    }
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(Error::arg("tolerances must be positive"));
    }
    let mut stats = OdeStats::default();
    let mut t = t_grid[0];
    let t_end = *t_grid.last().unwrap();
    let mut y = y0.to_vec();
    observe(t, &y)?;
    let mut next_out = 1;
    while next_out < t_grid.len() && t_grid[next_out] <= t {
        observe(t_grid[next_out], &y)?;
        next_out += 1;
    }
    if next_out == t_grid.len() {
        return Ok(stats);
    }

    let zero = C64::new(0.0, 0.0);
    let mut k1 = vec![zero; n];
    let mut k2 = vec![zero; n];
    let mut k3 = vec![zero; n];
    let mut k4 = vec![zero; n];
    let mut k5 = vec![zero; n];
    let mut k6 = vec![zero; n];
    let mut k7 = vec![zero; n];
    let mut ytmp = vec![zero; n];
    let mut ynew = vec![zero; n];
    let mut err = vec![zero; n];
    let mut dense = vec![vec![zero; n]; 5];
    let mut yout = vec![zero; n];

    sys.rhs(t, &y, &mut k1);
    stats.rhs_evaluations += 1;

    let mut h = match opts.h0 {
        Some(h) if h > 0.0 => h,
        _ => {
            stats.rhs_evaluations += 1;
            initial_step(sys, t, &y, &k1, opts, &mut ytmp, &mut k2)
        }
    }
    .min(opts.max_step)
    .min(t_end - t);

    let safe = 0.9;
    let beta = 0.04;
    let expo1 = 0.2 - beta * 0.75;
    let (fac_min, fac_max): (f64, f64) = (0.2, 10.0);
    let mut err_old: f64 = 1e-4;
    let mut last_rejected = false;

    while t < t_end {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::Integration {
                t,
                step: h,
                error_estimate: f64::NAN,
            });
        }
        let h_min = 16.0 * f64::EPSILON * t.abs().max(1e-300);
        if h < h_min || !h.is_finite() {
            return Err(Error::Integration {
                t,
                step: h,
                error_estimate: err_old,
            });
        }
        if t + 1.01 * h >= t_end {
            h = t_end - t;
        }
        axpy_into(&mut ytmp, &y, h, &[(A21, &k1)]);
        sys.rhs(t + C2 * h, &ytmp, &mut k2);
        axpy_into(&mut ytmp, &y, h, &[(A31, &k1), (A32, &k2)]);
        sys.rhs(t + C3 * h, &ytmp, &mut k3);
        axpy_into(&mut ytmp, &y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        sys.rhs(t + C4 * h, &ytmp, &mut k4);
        axpy_into(&mut ytmp, &y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        sys.rhs(t + C5 * h, &ytmp, &mut k5);
        axpy_into(&mut ytmp, &y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        sys.rhs(t + h, &ytmp, &mut k6);
        axpy_into(&mut ynew, &y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        sys.rhs(t + h, &ynew, &mut k7);
        stats.rhs_evaluations += 6;
        for i in 0..n {
            err[i] = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
        }
        let e = error_norm(&err, &y, &ynew, opts);
        if !e.is_finite() {
            stats.rejected += 1;
            h *= fac_min;
            last_rejected = true;
            continue;
        }
        let fac11 = e.powf(expo1);
        if e <= 1.0 {
            let mut fac = fac11 / err_old.powf(beta);
            fac = (1.0 / fac_max).max((1.0 / fac_min).min(fac / safe));
            let mut h_new = h / fac;
            if last_rejected {
                h_new = h_new.min(h);
            }
            err_old = e.max(1e-4);
            stats.accepted += 1;

            let t_new = t + h;
            if next_out < t_grid.len() && t_grid[next_out] <= t_new {
                for i in 0..n {
                    let dy = ynew[i] - y[i];
                    let bspl = k1[i] * h - dy;
                    dense[0][i] = y[i];
                    dense[1][i] = dy;
                    dense[2][i] = bspl;
                    dense[3][i] = dy - k7[i] * h - bspl;
                    dense[4][i] = (k1[i] * D1 + k3[i] * D3 + k4[i] * D4 + k5[i] * D5 + k6[i] * D6 + k7[i] * D7) * h;
                }
                while next_out < t_grid.len() && t_grid[next_out] <= t_new {
                    let tq = t_grid[next_out];
                    if tq == t_new {
                        observe(tq, &ynew)?;
                    } else {
                        let th = (tq - t) / h;
                        let th1 = 1.0 - th;
                        for i in 0..n {
                            yout[i] = dense[0][i]
                                + (dense[1][i] + (dense[2][i] + (dense[3][i] + dense[4][i] * th1) * th) * th1) * th;
                        }
                        observe(tq, &yout)?;
                    }
                    next_out += 1;
                }
            }
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);
            t = t_new;
            h = h_new.min(opts.max_step);
            last_rejected = false;
        } else {
            stats.rejected += 1;
            h /= (1.0 / fac_min).min(fac11 / safe);
            last_rejected = true;
        }
    }
    Ok(stats)
}

fn initial_step<S: OdeSystem + ?Sized>(
    sys: &S,
    t: f64,
    y: &[C64],
    f0: &[C64],
    opts: &OdeOptions,
    ytmp: &mut [C64],
    f1: &mut [C64],
) -> f64 {
    let n = y.len().max(1) as f64;
    let sc = |i: usize| opts.atol + opts.rtol * y[i].norm();
    let d0 = (y.iter().enumerate().map(|(i, v)| (v.norm() / sc(i)).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (f0.iter().enumerate().map(|(i, v)| (v.norm() / sc(i)).powi(2)).sum::<f64>() / n).sqrt();
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(opts.max_step);
    for i in 0..y.len() {
        ytmp[i] = y[i] + f0[i] * h0;
    }
    sys.rhs(t + h0, ytmp, f1);
    let d2 = (f1
        .iter()
        .zip(f0)
        .enumerate()
        .map(|(i, (a, b))| ((a - b).norm() / sc(i)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (1e-6f64).max(h0 * 1e-3)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(opts.max_step)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rotation {
        omega: f64,
    }
    impl OdeSystem for Rotation {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, _t: f64, y: &[C64], dy: &mut [C64]) {
            dy[0] = C64::new(0.0, -self.omega) * y[0];
        }
    }

    struct Decay;
    impl OdeSystem for Decay {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
            dy[0] = -y[0];
            dy[1] = C64::new(t.cos(), 0.0);
        }
    }

    #[test]
    fn phase_rotation_on_grid() {
        let sys = Rotation { omega: 2.3 };
        let grid: Vec<f64> = (0..=100).map(|i| 0.37 * i as f64).collect();
        let mut worst = 0.0f64;
        let opts = OdeOptions { rtol: 1e-11, atol: 1e-13, ..Default::default() };
        integrate(&sys, &[C64::new(1.0, 0.0)], &grid, &opts, |t, y| {
            let exact = C64::new(0.0, -2.3 * t).exp();
            worst = worst.max((y[0] - exact).norm());
            Ok(())
        })
        .unwrap();
        assert!(worst < 1e-8, "worst {worst:e}");
    }

    #[test]
    fn dense_output_between_steps() {
        let grid: Vec<f64> = (0..=500).map(|i| 0.01 * i as f64).collect();
        let mut worst = 0.0f64;
        let stats = integrate(&Decay, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], &grid, &OdeOptions::default(), |t, y| {
            worst = worst.max((y[0].re - (-t).exp()).abs()).max((y[1].re - t.sin()).abs());
            Ok(())
        })
        .unwrap();
        assert!(worst < 1e-7, "worst {worst:e}");
        // far fewer steps than output points
        assert!(stats.accepted < 200);
    }

    #[test]
    fn grid_with_repeats_and_single_point() {
        let mut seen = Vec::new();
        integrate(&Decay, &[C64::new(1.0, 0.0); 2], &[0.0, 0.0, 1.0, 1.0], &OdeOptions::default(), |t, _| {
            seen.push(t);
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, vec![0.0, 0.0, 1.0, 1.0]);
        let mut count = 0;
        integrate(&Decay, &[C64::new(1.0, 0.0); 2], &[3.0], &OdeOptions::default(), |_, _| {
            count += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(count, 1);
    }

    #[test]
    fn bad_inputs() {
        let y = [C64::new(1.0, 0.0); 2];
        assert!(integrate(&Decay, &y[..1], &[0.0, 1.0], &OdeOptions::default(), |_, _| Ok(())).is_err());
        assert!(integrate(&Decay, &y, &[1.0, 0.0], &OdeOptions::default(), |_, _| Ok(())).is_err());
    }

    struct Blowup;
    impl OdeSystem for Blowup {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, _t: f64, y: &[C64], dy: &mut [C64]) {
            dy[0] = y[0] * y[0];
        }
    }

    #[test]
    fn step_underflow_reports_time() {
        let r = integrate(&Blowup, &[C64::new(1.0, 0.0)], &[0.0, 2.0], &OdeOptions::default(), |_, _| Ok(()));
        match r {
            Err(Error::Integration { t, .. }) => assert!((t - 1.0).abs() < 1e-2, "t = {t}"),
            other => panic!("expected integration error, got {other:?}"),
        }
    }
}
