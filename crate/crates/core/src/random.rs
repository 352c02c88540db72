//! Random unitaries, measurements, channels and hidden states.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channels::KrausChannel;
use crate::error::Result;
use crate::linalg::{validate_povm, Ket, Operator, Povm};

/// A standard complex Gaussian (unit variance per real component).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<Complex64> {
    // column-major fill, stable order for reproducibility
    DMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Uniform (unitarily invariant) unit vector in C^d.
pub fn unit_ket<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Ket {
    let v = Ket::from_fn(dim, |_, _| complex_gaussian(rng));
    let norm = v.norm();
    v.map(|z| z / norm)
}

/// `rows × cols` matrix with orthonormal columns, Haar distributed
/// (QR of a Gaussian matrix with the phases of `R`'s diagonal removed).
pub fn isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<Complex64> {
    assert!(rows >= cols, "isometry needs rows >= cols");
    let qr = gaussian_matrix(rows, cols, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..cols {
        let diag = r[(k, k)];
        let norm = diag.norm();
        if norm > 0.0 {
            let phase = diag / norm;
            q.column_mut(k).iter_mut().for_each(|z| *z *= phase);
        }
    }
    q
}

pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<Complex64> {
    isometry(dim, dim, rng)
}

/// A random Hermitian operator with Gaussian entries.
pub fn hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Operator {
    let g = gaussian_matrix(dim, dim, rng);
    Operator::new((&g + g.adjoint()).map(|z| z * 0.5)).expect("square")
}

/// Projective measurement in a Haar-random orthonormal basis.
pub fn projective_povm<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Povm> {
    Povm::projective(&haar_unitary(dim, rng))
}

/// `outcomes` rank-one elements `|w_k⟩⟨w_k|` taken from the rows of a random
/// `outcomes × dim` isometry; projective when `outcomes == dim`.
pub fn rank_one_povm<R: Rng + ?Sized>(dim: usize, outcomes: usize, rng: &mut R) -> Result<Povm> {
    let v = isometry(outcomes, dim, rng);
    let elements = (0..outcomes)
        .map(|k| {
            let w: Ket = v.row(k).adjoint();
            Operator::projector(&w)
        })
        .collect();
    validate_povm(elements)
}

/// `outcomes` full-rank-ish elements `S^{-1/2} G_k S^{-1/2}` with `G_k`
/// Wishart of random rank and `S = Σ G_k`.
pub fn general_povm<R: Rng + ?Sized>(dim: usize, outcomes: usize, rng: &mut R) -> Result<Povm> {
    let mut ranks: Vec<usize> = (0..outcomes).map(|_| rng.random_range(1..=dim)).collect();
    // total rank below dim would leave the sum singular
    let mut k = 0;
    while ranks.iter().sum::<usize>() < dim {
        ranks[k % outcomes] = (ranks[k % outcomes] + 1).min(dim);
        k += 1;
    }
    let seeds: Vec<Operator> = ranks
        .iter()
        .map(|&rank| {
            let x = gaussian_matrix(dim, rank, rng);
            Operator::new(&x * x.adjoint()).expect("square")
        })
        .collect();
    let total = seeds.iter().fold(Operator::zeros(dim), |acc, g| &acc + g);
    let inv = total.inverse_sqrt()?;
    let elements = seeds
        .iter()
        .map(|g| {
            let a = &(&inv * g) * &inv;
            // exact Hermitian symmetrisation
            Operator::new((a.matrix() + a.matrix().adjoint()).map(|z| z * 0.5)).expect("square")
        })
        .collect();
    validate_povm(elements)
}

/// Channel with `n_kraus` operators cut from a Haar `(n_kraus·d) × d` isometry.
pub fn kraus_channel<R: Rng + ?Sized>(dim: usize, n_kraus: usize, rng: &mut R) -> Result<KrausChannel> {
    let v = isometry(n_kraus * dim, dim, rng);
    let ops = (0..n_kraus)
        .map(|k| Operator::new(v.rows(k * dim, dim).into_owned()).expect("square"))
        .collect();
    KrausChannel::new(ops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::TOL_COMPLETE;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in 2..6 {
            let u = haar_unitary(d, &mut rng);
            let err = (&u.adjoint() * &u - DMatrix::<Complex64>::identity(d, d)).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(err < 1e-12);
        }
    }

    #[test]
    fn random_measurements_are_complete() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for d in 2..6 {
            assert_eq!(rank_one_povm(d, d + 2, &mut rng).unwrap().len(), d + 2);
            let g = general_povm(d, 3, &mut rng).unwrap();
            let w: f64 = g.fine_grained().iter().map(|f| f.element.weight).sum();
            assert!((w - d as f64).abs() < TOL_COMPLETE);
            assert!(kraus_channel(d, 3, &mut rng).is_ok());
        }
    }
}
