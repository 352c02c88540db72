//! Flat-simplex moment integrals behind the model's correlation.
//!
//! With `u` uniform on the (d-1)-simplex (equivalently `u_ν = |⟨ν|λ⟩|²` for a
//! unitarily invariant hidden state) the model needs
//!
//! * `J₀ = E[u₁ · 1{u₁ > 1/d}]`
//! * `J₁ = E[u₁² · 1{u₁ > 1/d}]`
//! * `J_ν = E[u₁ u_ν · 1{u₁ > 1/d}] = (J₀ - J₁)/(d-1)` for `ν ≥ 2`
//!
//! Closed forms are checked two independent ways: exact Gauss–Legendre
//! quadrature of the one-dimensional marginal `(d-1)(1-u)^(d-2)`, and
//! Monte Carlo over flat Dirichlet samples.

use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Ket;
use crate::stream::{merge_all, run_streams, MeanAccumulator};
use crate::werner::simulated_alpha;

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::Domain(format!("simplex dimension must be at least 2, got {d}")));
    }
    Ok(())
}

pub fn j0_closed(d: usize) -> Result<f64> {
    check_dim(d)?;
    let df = d as f64;
    let q = 1.0 - 1.0 / df;
    Ok(q.powi(d as i32 - 1) / df + q.powi(d as i32) / df)
}

pub fn j1_closed(d: usize) -> Result<f64> {
    check_dim(d)?;
    let df = d as f64;
    let q = 1.0 - 1.0 / df;
    let bracket = 1.0 / (df * df) + 2.0 / (df * df) * q + 2.0 / (df * (df + 1.0)) * q * q;
    Ok(bracket * q.powi(d as i32 - 1))
}

/// `(d²J₁ − dJ₀)/(d−1)`.
pub fn alpha_from_moments(d: usize, j0: f64, j1: f64) -> f64 {
    let df = d as f64;
    (df * df * j1 - df * j0) / (df - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimplexMoments {
    pub d: usize,
    pub j0: f64,
    pub j1: f64,
    pub jnu: f64,
    pub alpha: f64,
}

impl SimplexMoments {
    pub fn closed(d: usize) -> Result<Self> {
        let j0 = j0_closed(d)?;
        let j1 = j1_closed(d)?;
        Ok(SimplexMoments {
            d,
            j0,
            j1,
            jnu: (j0 - j1) / (d as f64 - 1.0),
            alpha: alpha_from_moments(d, j0, j1),
        })
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`; exact for polynomials of
/// degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(x), p0 = P_{n-1}(x)
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `∫_{1/d}^{1} u^power · (d-1)(1-u)^(d-2) du` by a Gauss rule that is exact
/// for this polynomial integrand.
pub fn marginal_moment_quadrature(d: usize, power: u32) -> Result<f64> {
    check_dim(d)?;
    let degree = power as usize + d - 2;
    let n = degree / 2 + 1;
    let (nodes, weights) = gauss_legendre(n);
    let (a, b) = (1.0 / d as f64, 1.0);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    let df = d as f64;
    Ok(nodes
        .iter()
        .zip(&weights)
        .map(|(t, w)| {
            let u = mid + half * t;
            w * u.powi(power as i32) * (df - 1.0) * (1.0 - u).powi(d as i32 - 2)
        })
        .sum::<f64>()
        * half)
}

/// Monte Carlo estimates with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplexEstimate {
    pub d: usize,
    pub samples: usize,
    pub j0: f64,
    pub j0_se: f64,
    pub j1: f64,
    pub j1_se: f64,
    /// `ν = 2`.
    pub jnu: f64,
    pub jnu_se: f64,
    /// `ν = d`, for the symmetry check.
    pub jnu_last: f64,
    pub jnu_last_se: f64,
    /// Mean and SE of `u₁u₂·1 − (u₁ − u₁²)·1/(d−1)`, whose expectation is zero.
    pub consistency: f64,
    pub consistency_se: f64,
    /// Mean and SE of `u₁u₂·1 − u₁u_d·1`.
    pub symmetry: f64,
    pub symmetry_se: f64,
}

impl SimplexEstimate {
    pub fn alpha(&self) -> f64 {
        alpha_from_moments(self.d, self.j0, self.j1)
    }
}

/// Flat Dirichlet draw: normalised unit-rate exponentials.
pub fn sample_flat_simplex<R: Rng + ?Sized>(d: usize, rng: &mut R, out: &mut [f64]) {
    debug_assert_eq!(out.len(), d);
    let mut total = 0.0;
    for u in out.iter_mut() {
        let e: f64 = rng.sample(Exp1);
        *u = e;
        total += e;
    }
    out.iter_mut().for_each(|u| *u /= total);
}

pub fn moments_mc(d: usize, n_samples: usize, seed: u64, workers: usize) -> Result<SimplexEstimate> {
    check_dim(d)?;
    if n_samples == 0 {
        return Err(Error::Domain("moments_mc needs at least one sample".into()));
    }
    let threshold = 1.0 / d as f64;
    let inv = 1.0 / (d as f64 - 1.0);
    let parts = run_streams(seed, n_samples, workers, |rng, share| {
        let mut acc = MeanAccumulator::new(6);
        let mut u = vec![0.0; d];
        for _ in 0..share {
            sample_flat_simplex(d, rng, &mut u);
            let gate = if u[0] > threshold { 1.0 } else { 0.0 };
            let j0 = u[0] * gate;
            let j1 = u[0] * u[0] * gate;
            let j2 = u[0] * u[1] * gate;
            let jd = u[0] * u[d - 1] * gate;
            acc.push(&[j0, j1, j2, jd, j2 - (j0 - j1) * inv, j2 - jd]);
        }
        acc
    });
    let acc = merge_all(parts, 6);
    let m = acc.means();
    let se = acc.std_errors();
    Ok(SimplexEstimate {
        d,
        samples: n_samples,
        j0: m[0],
        j0_se: se[0],
        j1: m[1],
        j1_se: se[1],
        jnu: m[2],
        jnu_se: se[2],
        jnu_last: m[3],
        jnu_last_se: se[3],
        consistency: m[4],
        consistency_se: se[4],
        symmetry: m[5],
        symmetry_se: se[5],
    })
}

fn check_pair(p: &Ket, q: &Ket) -> Result<usize> {
    if p.len() != q.len() {
        return Err(Error::dim(p.len(), q.len()));
    }
    check_dim(p.len())?;
    Ok(p.len())
}

/// `x y (J₀−J₁)/(d−1) + α x y |⟨p|q⟩|²/d` with `α` from the moments.
pub fn jij(x: f64, p: &Ket, y: f64, q: &Ket) -> Result<f64> {
    let d = check_pair(p, q)?;
    let m = SimplexMoments::closed(d)?;
    let o = p.dotc(q).norm_sqr();
    Ok(x * y * m.jnu + m.alpha * x * y * o / d as f64)
}

/// The model's joint probability for rank-one pieces `x|p⟩⟨p|`, `y|q⟩⟨q|`:
/// `((d−1+α)/(d²(d−1))) x y − (α/(d(d−1))) |⟨p|q⟩|² x y`.
pub fn model_correlation_closed(x: f64, p: &Ket, y: f64, q: &Ket) -> Result<f64> {
    let d = check_pair(p, q)?;
    Ok(correlation_from_overlap(d, simulated_alpha(d)?, x, y, p.dotc(q).norm_sqr()))
}

#[inline]
pub(crate) fn correlation_from_overlap(d: usize, alpha: f64, x: f64, y: f64, overlap_sq: f64) -> f64 {
    let df = d as f64;
    (df - 1.0 + alpha) / (df * df * (df - 1.0)) * x * y - alpha / (df * (df - 1.0)) * overlap_sq * x * y
}
