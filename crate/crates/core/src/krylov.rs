//! Restarted GMRES with right preconditioning.

use crate::error::{Error, Result};
use crate::qops::C64;

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone)]
pub struct KrylovResult {
    pub x: Vec<C64>,
    /// `‖b − A x‖₂ / ‖b‖₂`
    pub relative_residual: f64,
    pub iterations: usize,
}

/// Solves `A x = b` by GMRES(`restart`) with right preconditioner `M⁻¹`.
pub fn gmres(
    matvec: impl Fn(&[C64], &mut [C64]),
    precond: impl Fn(&[C64], &mut [C64]),
    b: &[C64],
    tol: f64,
    restart: usize,
    max_iterations: usize,
) -> Result<KrylovResult> {
    let n = b.len();
    let zero = C64::new(0.0, 0.0);
    let bnorm = norm(b);
    let mut x = vec![zero; n];
    if bnorm == 0.0 {
        return Ok(KrylovResult { x, relative_residual: 0.0, iterations: 0 });
    }
    let m = restart.max(1);
    let mut r = vec![zero; n];
    let mut w = vec![zero; n];
    let mut z = vec![zero; n];
    let mut iterations = 0;
    let mut rel;
    while iterations < max_iterations {
        matvec(&x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let beta = norm(&r);
        rel = beta / bnorm;
        if rel <= tol {
            break;
        }
        let mut v: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
        v.push(r.iter().map(|z| z / beta).collect());
        let mut hmat = vec![vec![zero; m]; m + 1];
        let mut cs = vec![zero; m];
        let mut sn = vec![zero; m];
        let mut g = vec![zero; m + 1];
        g[0] = C64::new(beta, 0.0);
        let mut k_used = 0;
        for k in 0..m {
            precond(&v[k], &mut z);
            matvec(&z, &mut w);
            for j in 0..=k {
                let hjk = dot(&v[j], &w);
                hmat[j][k] = hjk;
                for i in 0..n {
                    w[i] -= hjk * v[j][i];
                }
            }
            let hnext = norm(&w);
            hmat[k + 1][k] = C64::new(hnext, 0.0);
            // apply previous rotations
            for j in 0..k {
                let t = cs[j].conj() * hmat[j][k] + sn[j].conj() * hmat[j + 1][k];
                hmat[j + 1][k] = -sn[j] * hmat[j][k] + cs[j] * hmat[j + 1][k];
                hmat[j][k] = t;
            }
            let (a, bb) = (hmat[k][k], hmat[k + 1][k]);
            let den = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if den == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = a / den;
            sn[k] = bb / den;
            hmat[k][k] = C64::new(den, 0.0);
            hmat[k + 1][k] = zero;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k].conj() * g[k];
            iterations += 1;
            k_used = k + 1;
            rel = g[k + 1].norm() / bnorm;
            if rel <= tol || hnext == 0.0 || iterations >= max_iterations {
                break;
            }
            v.push(w.iter().map(|z| z / hnext).collect());
        }
        // back substitution
        let mut y = vec![zero; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= hmat[i][j] * y[j];
            }
            y[i] = s / hmat[i][i];
        }
        let mut update = vec![zero; n];
        for (j, yj) in y.iter().enumerate() {
            for i in 0..n {
                update[i] += yj * v[j][i];
            }
        }
        precond(&update, &mut z);
        for i in 0..n {
            x[i] += z[i];
        }
        if k_used == 0 {
            break;
        }
    }
    matvec(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let true_rel = norm(&r) / bnorm;
    if !true_rel.is_finite() {
        return Err(Error::Numeric("GMRES produced a non-finite iterate".into()));
    }
    Ok(KrylovResult {
        x,
        relative_residual: true_rel,
        iterations,
    })
}
