//! Local Kraus channels and the transfer of the model to transformed states.
//!
//! If `ρ₂ = Σ (M_k ⊗ N_l) ρ₁ (M_k ⊗ N_l)†` then running the model for `ρ₁`
//! on the pulled-back measurements `A'_i = Σ_k M_k† A_i M_k` and
//! `B'_j = Σ_l N_l† B_j N_l` reproduces `Tr((A_i ⊗ B_j) ρ₂)`. The hidden
//! states and their distribution are unchanged.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lhv::{joint_prob_mc, ModelConfig};
use crate::linalg::{validate_povm, Operator, Povm, TOL_COMPLETE};
use crate::table::JointTable;

#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    dim: usize,
    kraus_ops: Vec<Operator>,
}

impl KrausChannel {
    pub fn new(kraus_ops: Vec<Operator>) -> Result<Self> {
        let Some(first) = kraus_ops.first() else {
            return Err(Error::InvalidChannel { deviation: 1.0 });
        };
        let dim = first.dim();
        if let Some(bad) = kraus_ops.iter().find(|m| m.dim() != dim) {
            return Err(Error::dim(dim, bad.dim()));
        }
        let total = kraus_ops
            .iter()
            .fold(Operator::zeros(dim), |acc, m| &acc + &(&m.dagger() * m));
        let deviation = total.max_abs_diff(&Operator::identity(dim))?;
        if deviation > TOL_COMPLETE {
            return Err(Error::InvalidChannel { deviation });
        }
        Ok(KrausChannel { dim, kraus_ops })
    }

    pub fn identity(dim: usize) -> Self {
        KrausChannel {
            dim,
            kraus_ops: vec![Operator::identity(dim)],
        }
    }

    pub fn unitary(u: Operator) -> Result<Self> {
        KrausChannel::new(vec![u])
    }

    /// `ρ ↦ Tr(ρ) I/d` via the `d²` Weyl operators `X^a Z^b / d`.
    pub fn fully_depolarizing(dim: usize) -> Self {
        let omega = |k: usize| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / dim as f64);
        let scale = 1.0 / dim as f64;
        let mut ops = Vec::with_capacity(dim * dim);
        for a in 0..dim {
            for b in 0..dim {
                // (X^a Z^b)|j⟩ = ω^{bj} |j + a⟩
                let m = DMatrix::from_fn(dim, dim, |row, col| {
                    if row == (col + a) % dim {
                        omega(b * col % dim) * scale
                    } else {
                        Complex64::default()
                    }
                });
                ops.push(Operator::new(m).expect("square"));
            }
        }
        KrausChannel { dim, kraus_ops: ops }
    }

    /// Qubit depolarizing channel `{√(1−p) I, √(p/3) σ_x, √(p/3) σ_y, √(p/3) σ_z}`.
    pub fn qubit_depolarizing(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("depolarizing probability {p} outside [0, 1]")));
        }
        let z = Complex64::default();
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let s = (p / 3.0).sqrt();
        KrausChannel::new(vec![
            Operator::identity(2).scale((1.0 - p).sqrt()),
            Operator::from_row_slice(2, &[z, one, one, z]).scale(s),
            Operator::from_row_slice(2, &[z, -i, i, z]).scale(s),
            Operator::from_row_slice(2, &[one, z, z, -one]).scale(s),
        ])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus_ops(&self) -> &[Operator] {
        &self.kraus_ops
    }

    /// Heisenberg-picture action `A ↦ Σ M† A M`.
    pub fn adjoint_apply(&self, op: &Operator) -> Result<Operator> {
        if op.dim() != self.dim {
            return Err(Error::dim(self.dim, op.dim()));
        }
        Ok(self
            .kraus_ops
            .iter()
            .fold(Operator::zeros(self.dim), |acc, m| &acc + &(&(&m.dagger() * op) * m)))
    }
}

/// `{Σ_k M_k† A_i M_k}`, validated and fine-grained.
pub fn pullback_measurement(povm: &Povm, channel: &KrausChannel) -> Result<Povm> {
    let elements = povm
        .elements()
        .iter()
        .map(|a| {
            let pulled = channel.adjoint_apply(a)?;
            // Hermitian up to rounding; symmetrise before validation
            Operator::new((pulled.matrix() + pulled.matrix().adjoint()).map(|z| z * 0.5))
        })
        .collect::<Result<Vec<_>>>()?;
    validate_povm(elements)
}

/// `Σ_{kl} (M_k ⊗ N_l) ρ (M_k ⊗ N_l)†`.
pub fn apply_channel_to_state(
    rho: &Operator,
    channel_a: &KrausChannel,
    channel_b: &KrausChannel,
) -> Result<Operator> {
    let n = channel_a.dim * channel_b.dim;
    if rho.dim() != n {
        return Err(Error::dim(n, rho.dim()));
    }
    let mut out = Operator::zeros(n);
    for m in &channel_a.kraus_ops {
        for k in &channel_b.kraus_ops {
            let mk = m.tensor(k);
            out = &out + &(&(&mk * rho) * &mk.dagger());
        }
    }
    Ok(out)
}

/// The transferred model: the base model run on pulled-back measurements.
pub fn extended_model_prob(
    povm_a: &Povm,
    povm_b: &Povm,
    channel_a: &KrausChannel,
    channel_b: &KrausChannel,
    config: &ModelConfig,
) -> Result<JointTable> {
    let a = pullback_measurement(povm_a, channel_a)?;
    let b = pullback_measurement(povm_b, channel_b)?;
    joint_prob_mc(&a, &b, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::basis_ket;
    use crate::random;
    use crate::werner::WernerState;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_incomplete_channels() {
        let half = Operator::identity(2).scale(0.5);
        assert!(matches!(KrausChannel::new(vec![half]), Err(Error::InvalidChannel { .. })));
        assert!(KrausChannel::new(vec![]).is_err());
        assert!(matches!(
            KrausChannel::new(vec![Operator::identity(2), Operator::zeros(3)]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn identity_channel_leaves_measurement_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let povm = random::general_povm(3, 3, &mut rng).unwrap();
        let pulled = pullback_measurement(&povm, &KrausChannel::identity(3)).unwrap();
        for (a, b) in povm.elements().iter().zip(pulled.elements()) {
            assert!(a.max_abs_diff(b).unwrap() < 1e-15);
        }
    }

    #[test]
    fn unitary_channel_conjugates() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = Operator::new(random::haar_unitary(2, &mut rng)).unwrap();
        let povm = random::rank_one_povm(2, 3, &mut rng).unwrap();
        let pulled = pullback_measurement(&povm, &KrausChannel::unitary(u.clone()).unwrap()).unwrap();
        for (a, b) in povm.elements().iter().zip(pulled.elements()) {
            let expected = &(&u.dagger() * a) * &u;
            assert!(expected.max_abs_diff(b).unwrap() < 1e-12);
        }
    }

    #[test]
    fn depolarized_projective_measurement_stays_valid() {
        let ch = KrausChannel::qubit_depolarizing(0.3).unwrap();
        let povm = Povm::binary(&basis_ket(2, 0)).unwrap();
        let pulled = pullback_measurement(&povm, &ch).unwrap();
        let traces: f64 = pulled.elements().iter().map(|e| e.trace().re).sum();
        assert!((traces - 2.0).abs() < 1e-12);
        assert!(pulled.elements().iter().all(|e| e.is_psd()));
        // p = 0.3 shrinks the Bloch vector by 1 − 4p/3 = 0.6
        assert!((pulled.elements()[0].get(0, 0).re - 0.8).abs() < 1e-12);
    }

    #[test]
    fn full_depolarization_is_complete_for_all_d() {
        for d in 2..=4 {
            let ch = KrausChannel::fully_depolarizing(d);
            assert_eq!(ch.kraus_ops().len(), d * d);
            assert!(KrausChannel::new(ch.kraus_ops().to_vec()).is_ok());
        }
    }

    #[test]
    fn state_transformations() {
        let rho = WernerState::simulated(2).unwrap().materialize();
        let id = KrausChannel::identity(2);
        assert!(apply_channel_to_state(&rho, &id, &id).unwrap().max_abs_diff(&rho).unwrap() < 1e-15);

        let out = apply_channel_to_state(&rho, &KrausChannel::fully_depolarizing(2), &id).unwrap();
        assert!(out.max_abs_diff(&Operator::identity(4).scale(0.25)).unwrap() < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = Operator::new(random::haar_unitary(2, &mut rng)).unwrap();
        let v = Operator::new(random::haar_unitary(2, &mut rng)).unwrap();
        let out = apply_channel_to_state(
            &rho,
            &KrausChannel::unitary(u.clone()).unwrap(),
            &KrausChannel::unitary(v.clone()).unwrap(),
        )
        .unwrap();
        let uv = u.tensor(&v);
        let expected = &(&uv * &rho) * &uv.dagger();
        assert!(out.max_abs_diff(&expected).unwrap() < 1e-14);
        assert!(apply_channel_to_state(&rho, &KrausChannel::identity(3), &id).is_err());
    }

    #[test]
    fn random_channels_output_density_operators() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for d in [2usize, 3] {
            let rho = WernerState::simulated(d).unwrap().materialize();
            let a = random::kraus_channel(d, 2, &mut rng).unwrap();
            let b = random::kraus_channel(d, 3, &mut rng).unwrap();
            let out = apply_channel_to_state(&rho, &a, &b).unwrap();
            assert!(out.is_psd());
            assert!((out.trace().re - 1.0).abs() < 1e-12);
        }
    }
}
