//! The hidden-variable model.
//!
//! A shared hidden state `|λ⟩` is drawn from the unitarily invariant measure
//! on unit vectors of `C^d`. Given `λ`, Alice and Bob answer independently:
//!
//! * **Alice** considers the rank-one pieces `x_i|p_i⟩⟨p_i|` with
//!   `|⟨λ|p_i⟩|² > 1/d`. Piece `i` is accepted with probability
//!   `x_i|⟨λ|p_i⟩|²`; if none is, she falls back to outcome `i` with
//!   probability `x_i/d`.
//! * **Bob** answers `j` with probability `y_j(1 − |⟨λ|q_j⟩|²)/(d − 1)`.
//!
//! Averaged over `λ` this reproduces `Tr(ρ A_i ⊗ B_j)` for the Werner state
//! with `α = simulated_alpha(d)`. General POVM elements are handled through their
//! fixed rank-one refinement, with child outcomes reported as the parent.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{overlap_sq, Ket, Povm, TOL_NORM};
use crate::random::complex_gaussian;
use crate::simplex::correlation_from_overlap;
use crate::stream::{merge_all, run_streams, MeanAccumulator};
use crate::table::JointTable;
use crate::werner::simulated_alpha;

#[derive(Debug, Clone, PartialEq)]
pub struct HiddenState {
    vector: Ket,
}

impl HiddenState {
    pub fn new(vector: Ket) -> Result<Self> {
        let norm = vector.norm();
        if (norm - 1.0).abs() > TOL_NORM {
            return Err(Error::Domain(format!("hidden state norm {norm} is not 1")));
        }
        Ok(HiddenState { vector })
    }

    pub fn vector(&self) -> &Ket {
        &self.vector
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }
}

/// Outcome probabilities of one party for a fixed hidden state, one entry per
/// fine-grained outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalResponse {
    pub outcome_probs: Vec<f64>,
}

impl LocalResponse {
    /// Sums fine-grained probabilities into `povm`'s raw outcomes.
    pub fn aggregate(&self, povm: &Povm) -> Vec<f64> {
        let mut raw = vec![0.0; povm.len()];
        for (p, f) in self.outcome_probs.iter().zip(povm.fine_grained()) {
            raw[f.outcome] += p;
        }
        raw
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ModelConfig {
    pub seed: u64,
    pub n_lambda: usize,
    pub workers: usize,
    /// Value of the step function at zero. Kept `false`: acceptance needs a
    /// strictly larger overlap than `1/d`.
    pub theta_at_zero: bool,
}

impl ModelConfig {
    pub fn new(seed: u64, n_lambda: usize, workers: usize) -> Self {
        ModelConfig {
            seed,
            n_lambda,
            workers,
            theta_at_zero: false,
        }
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::new(0, 1_000_000, 1)
    }
}

pub fn sample_lambda<R: Rng + ?Sized>(d: usize, rng: &mut R) -> HiddenState {
    let mut buf = vec![Complex64::default(); d];
    sample_lambda_into(rng, &mut buf);
    HiddenState {
        vector: Ket::from_vec(buf),
    }
}

/// Normalised i.i.d. complex Gaussians, written into `out`.
pub fn sample_lambda_into<R: Rng + ?Sized>(rng: &mut R, out: &mut [Complex64]) {
    let mut norm_sq = 0.0;
    for z in out.iter_mut() {
        *z = complex_gaussian(rng);
        norm_sq += z.norm_sqr();
    }
    let inv = norm_sq.sqrt().recip();
    out.iter_mut().for_each(|z| *z *= inv);
}

/// Fine-grained POVM flattened into contiguous buffers for the sampling loop.
struct FlatPovm {
    d: usize,
    outcomes: usize,
    parent: Vec<usize>,
    weight: Vec<f64>,
    directions: Vec<Complex64>,
}

impl FlatPovm {
    fn new(povm: &Povm) -> Self {
        let fg = povm.fine_grained();
        FlatPovm {
            d: povm.dim(),
            outcomes: povm.len(),
            parent: fg.iter().map(|f| f.outcome).collect(),
            weight: fg.iter().map(|f| f.element.weight).collect(),
            directions: fg
                .iter()
                .flat_map(|f| f.element.direction.iter().copied())
                .collect(),
        }
    }

    fn children(&self) -> usize {
        self.weight.len()
    }

    fn overlaps(&self, lambda: &[Complex64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = overlap_sq(lambda, &self.directions[k * self.d..(k + 1) * self.d]);
        }
    }

    /// Alice's fine-grained probabilities from precomputed overlaps.
    fn alice(&self, overlaps: &[f64], theta_at_zero: bool, out: &mut [f64]) {
        let threshold = 1.0 / self.d as f64;
        let mut accepted_total = 0.0;
        for ((o, w), slot) in overlaps.iter().zip(&self.weight).zip(out.iter_mut()) {
            let gate = *o > threshold || (theta_at_zero && *o == threshold);
            *slot = if gate { w * o } else { 0.0 };
            accepted_total += *slot;
        }
        let rejection = (1.0 - accepted_total).max(0.0);
        let df = self.d as f64;
        for (slot, w) in out.iter_mut().zip(&self.weight) {
            *slot += rejection * w / df;
        }
    }

    fn bob(&self, overlaps: &[f64], out: &mut [f64]) {
        let scale = 1.0 / (self.d as f64 - 1.0);
        for ((o, w), slot) in overlaps.iter().zip(&self.weight).zip(out.iter_mut()) {
            *slot = w * (1.0 - o) * scale;
        }
    }

    fn aggregate(&self, fine: &[f64], raw: &mut [f64]) {
        raw.iter_mut().for_each(|r| *r = 0.0);
        for (p, parent) in fine.iter().zip(&self.parent) {
            raw[*parent] += p;
        }
    }
}

fn check_lambda(povm: &Povm, lambda: &HiddenState) -> Result<()> {
    if povm.dim() != lambda.dim() {
        return Err(Error::dim(povm.dim(), lambda.dim()));
    }
    Ok(())
}

fn check_pair(a: &Povm, b: &Povm) -> Result<usize> {
    if a.dim() != b.dim() {
        return Err(Error::dim(a.dim(), b.dim()));
    }
    if a.dim() < 2 {
        return Err(Error::Domain("the model needs d >= 2".into()));
    }
    Ok(a.dim())
}

pub fn alice_response(povm: &Povm, lambda: &HiddenState) -> Result<LocalResponse> {
    alice_response_with(povm, lambda, false)
}

pub fn alice_response_with(povm: &Povm, lambda: &HiddenState, theta_at_zero: bool) -> Result<LocalResponse> {
    check_lambda(povm, lambda)?;
    let flat = FlatPovm::new(povm);
    let mut overlaps = vec![0.0; flat.children()];
    flat.overlaps(lambda.vector.as_slice(), &mut overlaps);
    let mut out = vec![0.0; flat.children()];
    flat.alice(&overlaps, theta_at_zero, &mut out);
    Ok(LocalResponse { outcome_probs: out })
}

pub fn bob_response(povm: &Povm, lambda: &HiddenState) -> Result<LocalResponse> {
    check_lambda(povm, lambda)?;
    if povm.dim() < 2 {
        return Err(Error::Domain("Bob's response needs d >= 2".into()));
    }
    let flat = FlatPovm::new(povm);
    let mut overlaps = vec![0.0; flat.children()];
    flat.overlaps(lambda.vector.as_slice(), &mut overlaps);
    let mut out = vec![0.0; flat.children()];
    flat.bob(&overlaps, &mut out);
    Ok(LocalResponse { outcome_probs: out })
}

/// Per-λ raw response pair for both parties, reusing scratch buffers.
struct ResponsePair {
    a: FlatPovm,
    b: FlatPovm,
    theta_at_zero: bool,
    lambda: Vec<Complex64>,
    overlaps_a: Vec<f64>,
    overlaps_b: Vec<f64>,
    fine_a: Vec<f64>,
    fine_b: Vec<f64>,
    raw_a: Vec<f64>,
    raw_b: Vec<f64>,
}

impl ResponsePair {
    fn new(povm_a: &Povm, povm_b: &Povm, theta_at_zero: bool) -> Self {
        let a = FlatPovm::new(povm_a);
        let b = FlatPovm::new(povm_b);
        ResponsePair {
            lambda: vec![Complex64::default(); a.d],
            overlaps_a: vec![0.0; a.children()],
            overlaps_b: vec![0.0; b.children()],
            fine_a: vec![0.0; a.children()],
            fine_b: vec![0.0; b.children()],
            raw_a: vec![0.0; a.outcomes],
            raw_b: vec![0.0; b.outcomes],
            a,
            b,
            theta_at_zero,
        }
    }

    fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        sample_lambda_into(rng, &mut self.lambda);
        self.a.overlaps(&self.lambda, &mut self.overlaps_a);
        self.b.overlaps(&self.lambda, &mut self.overlaps_b);
        self.a.alice(&self.overlaps_a, self.theta_at_zero, &mut self.fine_a);
        self.b.bob(&self.overlaps_b, &mut self.fine_b);
        self.a.aggregate(&self.fine_a, &mut self.raw_a);
        self.b.aggregate(&self.fine_b, &mut self.raw_b);
    }
}

/// Averages `Pr(A_i|λ) Pr(B_j|λ)` over `n_lambda` hidden states.
pub fn joint_prob_mc(povm_a: &Povm, povm_b: &Povm, config: &ModelConfig) -> Result<JointTable> {
    check_pair(povm_a, povm_b)?;
    if config.n_lambda == 0 {
        return Err(Error::Domain("n_lambda must be at least 1".into()));
    }
    let (rows, cols) = (povm_a.len(), povm_b.len());
    let width = rows * cols;
    let parts = run_streams(config.seed, config.n_lambda, config.workers, |rng, share| {
        let mut pair = ResponsePair::new(povm_a, povm_b, config.theta_at_zero);
        let mut acc = MeanAccumulator::new(width);
        let mut products = vec![0.0; width];
        for _ in 0..share {
            pair.draw(rng);
            for (i, pa) in pair.raw_a.iter().enumerate() {
                for (j, pb) in pair.raw_b.iter().enumerate() {
                    products[i * cols + j] = pa * pb;
                }
            }
            acc.push(&products);
        }
        acc
    });
    let acc = merge_all(parts, width);
    Ok(JointTable::new(rows, cols, acc.means()).with_std_errors(acc.std_errors()))
}

fn pick<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    for (k, p) in probs.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return k;
        }
    }
    // rounding left the cumulative sum a hair below 1
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1)
}

/// Per-run realisation: draw `λ`, then each party's outcome independently.
pub fn simulate_runs(
    povm_a: &Povm,
    povm_b: &Povm,
    n_runs: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<(usize, usize)>> {
    check_pair(povm_a, povm_b)?;
    let parts = run_streams(seed, n_runs, workers, |rng, share| {
        let mut pair = ResponsePair::new(povm_a, povm_b, false);
        (0..share)
            .map(|_| {
                pair.draw(rng);
                let i = pick(&pair.raw_a, rng);
                let j = pick(&pair.raw_b, rng);
                (i, j)
            })
            .collect::<Vec<_>>()
    });
    Ok(parts.into_iter().flatten().collect())
}

/// Relative frequencies of simulated runs with binomial standard errors.
pub fn run_frequencies(runs: &[(usize, usize)], rows: usize, cols: usize) -> JointTable {
    let mut counts = vec![0usize; rows * cols];
    for (i, j) in runs {
        counts[i * cols + j] += 1;
    }
    let n = runs.len() as f64;
    let probs: Vec<f64> = counts.iter().map(|c| *c as f64 / n).collect();
    let se = probs.iter().map(|p| (p * (1.0 - p) / n).sqrt()).collect();
    JointTable::new(rows, cols, probs).with_std_errors(se)
}

/// Exact model prediction, summing the rank-one closed form over children.
pub fn joint_prob_closed(povm_a: &Povm, povm_b: &Povm) -> Result<JointTable> {
    let d = check_pair(povm_a, povm_b)?;
    let alpha = simulated_alpha(d)?;
    let (rows, cols) = (povm_a.len(), povm_b.len());
    let mut probs = vec![0.0; rows * cols];
    for fa in povm_a.fine_grained() {
        for fb in povm_b.fine_grained() {
            let o = fa.element.direction.dotc(&fb.element.direction).norm_sqr();
            probs[fa.outcome * cols + fb.outcome] +=
                correlation_from_overlap(d, alpha, fa.element.weight, fb.element.weight, o);
        }
    }
    Ok(JointTable::new(rows, cols, probs))
}
