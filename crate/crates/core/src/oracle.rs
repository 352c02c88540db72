//! Quantum-mechanical ground truth by direct trace arithmetic on `d² × d²`
//! operators. Nothing here knows about the hidden-variable model.

use crate::error::{Error, Result};
use crate::linalg::{Operator, Povm, TOL_EIG};
use crate::table::JointTable;

/// Local dimension of a bipartite operator on `C^d ⊗ C^d`.
pub fn local_dim(rho: &Operator) -> Result<usize> {
    let n = rho.dim();
    let d = (n as f64).sqrt().round() as usize;
    if d * d != n {
        return Err(Error::Domain(format!("{n} is not a square dimension")));
    }
    Ok(d)
}

/// `Tr(ρ (A_i ⊗ B_j))` for every outcome pair.
pub fn born_prob(rho: &Operator, povm_a: &Povm, povm_b: &Povm) -> Result<JointTable> {
    let expected = povm_a.dim() * povm_b.dim();
    if rho.dim() != expected {
        return Err(Error::dim(expected, rho.dim()));
    }
    let (rows, cols) = (povm_a.len(), povm_b.len());
    let mut probs = Vec::with_capacity(rows * cols);
    for a in povm_a.elements() {
        for b in povm_b.elements() {
            let ab = a.tensor(b);
            // Tr(ρ X) = Σ_{kl} ρ_kl X_lk
            let t = rho
                .matrix()
                .iter()
                .zip(ab.matrix().transpose().iter())
                .map(|(r, x)| r * x)
                .sum::<num_complex::Complex64>();
            debug_assert!(t.im.abs() < 1e-10, "imaginary residue {}", t.im);
            probs.push(t.re);
        }
    }
    Ok(JointTable::new(rows, cols, probs))
}

/// Which tensor factor to transpose.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

pub fn partial_transpose(rho: &Operator, subsystem: Subsystem) -> Result<Operator> {
    let d = local_dim(rho)?;
    let n = d * d;
    let m = nalgebra::DMatrix::from_fn(n, n, |row, col| {
        let (a, b) = (row / d, row % d);
        let (a2, b2) = (col / d, col % d);
        match subsystem {
            Subsystem::B => rho.get(a * d + b2, a2 * d + b),
            Subsystem::A => rho.get(a2 * d + b, a * d + b2),
        }
    });
    Operator::new(m)
}

/// Peres–Horodecki test: every partial-transpose eigenvalue `≥ −TOL_EIG`.
pub fn is_ppt(rho: &Operator) -> Result<bool> {
    if !rho.is_hermitian() {
        return Err(Error::NotHermitian {
            max_deviation: rho.hermitian_deviation(),
        });
    }
    Ok(partial_transpose(rho, Subsystem::B)?.min_eigenvalue() >= -TOL_EIG)
}

fn check_dichotomic(povm: &Povm) -> Result<()> {
    if povm.dim() != 2 {
        return Err(Error::dim(2, povm.dim()));
    }
    if povm.len() != 2 {
        return Err(Error::Domain(format!("CHSH needs two-outcome measurements, got {}", povm.len())));
    }
    Ok(())
}

/// `E(a,b) = Σ_{ij} s_i s_j P(i,j)` with outcome 0 ↦ +1 and outcome 1 ↦ −1.
pub fn correlator(rho: &Operator, a: &Povm, b: &Povm) -> Result<f64> {
    let t = born_prob(rho, a, b)?;
    Ok(t.get(0, 0) + t.get(1, 1) - t.get(0, 1) - t.get(1, 0))
}

/// `E(a0,b0) + E(a0,b1) + E(a1,b0) − E(a1,b1)` on a two-qubit state.
pub fn chsh_value(rho: &Operator, a0: &Povm, a1: &Povm, b0: &Povm, b1: &Povm) -> Result<f64> {
    for m in [a0, a1, b0, b1] {
        check_dichotomic(m)?;
    }
    if rho.dim() != 4 {
        return Err(Error::dim(4, rho.dim()));
    }
    Ok(correlator(rho, a0, b0)? + correlator(rho, a0, b1)? + correlator(rho, a1, b0)?
        - correlator(rho, a1, b1)?)
}

/// Qubit ket with Bloch vector `(sin θ cos φ, sin θ sin φ, cos θ)`.
pub fn bloch_ket(theta: f64, phi: f64) -> crate::linalg::Ket {
    use crate::linalg::c;
    crate::linalg::Ket::from_vec(vec![
        c((theta / 2.0).cos(), 0.0),
        num_complex::Complex64::from_polar((theta / 2.0).sin(), phi),
    ])
}

/// The standard optimal settings: `a0 = z`, `a1 = x`, `b0,b1 = (z ± x)/√2`.
pub fn tsirelson_settings() -> [Povm; 4] {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
    [
        Povm::binary(&bloch_ket(0.0, 0.0)),
        Povm::binary(&bloch_ket(FRAC_PI_2, 0.0)),
        Povm::binary(&bloch_ket(FRAC_PI_4, 0.0)),
        Povm::binary(&bloch_ket(-FRAC_PI_4, 0.0)),
    ]
    .map(|p| p.expect("projective"))
}
