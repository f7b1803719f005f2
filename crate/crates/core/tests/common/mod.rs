#![allow(dead_code)]

use std::io::Write;

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spinboson::qops::{ComplexOperator, DensityMatrix, C64};

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn one_norm(a: &Mat<C64>) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn mul(a: &Mat<C64>, b: &Mat<C64>) -> Mat<C64> {
    let mut out = Mat::<C64>::zeros(a.nrows(), b.ncols());
    matmul(out.as_mut(), Accum::Replace, a.as_ref(), b.as_ref(), c(1.0), Par::Seq);
    out
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
pub fn expm(a: &Mat<C64>) -> Mat<C64> {
    let n = a.nrows();
    let norm = one_norm(a);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scale = c(0.5f64.powi(squarings as i32));
    let x = Mat::<C64>::from_fn(n, n, |i, j| a[(i, j)] * scale);
    let mut result = Mat::<C64>::identity(n, n);
    let mut term = Mat::<C64>::identity(n, n);
    for k in 1..=30 {
        term = mul(&term, &x);
        let inv = c(1.0 / k as f64);
        term = Mat::<C64>::from_fn(n, n, |i, j| term[(i, j)] * inv);
        result = &result + &term;
        if one_norm(&term) < 1e-18 * one_norm(&result) {
            break;
        }
    }
    for _ in 0..squarings {
        result = mul(&result, &result);
    }
    result
}

pub fn to_mat(op: &ComplexOperator) -> Mat<C64> {
    let d = op.dim();
    Mat::<C64>::from_fn(d, d, |i, j| op[(i, j)])
}

pub fn from_mat(m: &Mat<C64>) -> ComplexOperator {
    ComplexOperator::from_fn(m.nrows(), |i, j| m[(i, j)])
}

pub fn matvec(a: &Mat<C64>, x: &[C64]) -> Vec<C64> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)] * x[j]).sum())
        .collect()
}

/// `U(t) ρ U(t)†` with `U(t) = exp(−iHt)` on an evenly spaced grid
/// `0, dt, …, (n−1)dt`.
pub fn unitary_trajectory(h: &ComplexOperator, rho0: &ComplexOperator, dt: f64, n: usize) -> Vec<ComplexOperator> {
    let d = h.dim();
    let gen = Mat::<C64>::from_fn(d, d, |i, j| h[(i, j)] * C64::new(0.0, -dt));
    let step = expm(&gen);
    let step_dag = step.adjoint().to_owned();
    let mut rho = to_mat(rho0);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 {
            rho = mul(&mul(&step, &rho), &step_dag);
        }
        out.push(from_mat(&rho));
    }
    out
}

/// A random full-rank density matrix `G G† / Tr(G G†)`.
pub fn random_density(rng: &mut impl Rng, d: usize) -> DensityMatrix {
    let g = ComplexOperator::from_fn(d, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let p = g.matmul(&g.dagger());
    let tr = p.trace().re;
    let p = p.scale(c(1.0 / tr)).hermitian_part();
    DensityMatrix::new(p).unwrap()
}

/// Prints one acceptance verdict line and returns whether it passed.
/// Written straight to stderr so the line survives libtest's output capture.
pub fn verdict(name: &str, pass: bool, detail: &str) -> bool {
    let line = format!("\n{} {name}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    pass
}
