//! Generalized Werner states `α·2P_anti/(d(d-1)) + (1-α)·I/d²`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::Operator;

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::Domain(format!("local dimension must be at least 2, got {d}")));
    }
    Ok(())
}

/// The mixing weight for which the hidden-variable model is exact:
/// `(d-1)^(d-1) d^(-d) (3d-1) / (d+1)`.
pub fn simulated_alpha(d: usize) -> Result<f64> {
    check_dim(d)?;
    let df = d as f64;
    let alpha = (df - 1.0).powi(d as i32 - 1) * df.powi(-(d as i32)) * (3.0 * df - 1.0) / (df + 1.0);
    assert!(alpha > 1.0 / (df + 1.0), "alpha({d}) is not above the separability threshold");
    Ok(alpha)
}

/// Mixing weight above which the state is entangled.
pub fn entanglement_threshold(d: usize) -> f64 {
    1.0 / (d as f64 + 1.0)
}

/// The exchange operator on `C^d ⊗ C^d`.
pub fn swap(d: usize) -> Operator {
    let n = d * d;
    let m = DMatrix::from_fn(n, n, |row, col| {
        let (a, b) = (row / d, row % d);
        if col == b * d + a {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::default()
        }
    });
    Operator::new(m).expect("square")
}

/// `(I - SWAP)/2`.
pub fn antisymmetric_projector(d: usize) -> Result<Operator> {
    check_dim(d)?;
    Ok((&Operator::identity(d * d) - &swap(d)).scale(0.5))
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct WernerState {
    d: usize,
    alpha: f64,
}

impl WernerState {
    pub fn new(d: usize, alpha: f64) -> Result<Self> {
        check_dim(d)?;
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        Ok(WernerState { d, alpha })
    }

    /// The state the hidden-variable model simulates.
    pub fn simulated(d: usize) -> Result<Self> {
        WernerState::new(d, simulated_alpha(d)?)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn is_entangled(&self) -> bool {
        self.alpha > entanglement_threshold(self.d)
    }

    /// `Tr(ρ · x|p⟩⟨p| ⊗ y|q⟩⟨q|)` given `|⟨p|q⟩|²`, without building ρ.
    pub fn rank_one_expectation(&self, x: f64, y: f64, overlap_sq: f64) -> f64 {
        let d = self.d as f64;
        x * y * (self.alpha * (1.0 - overlap_sq) / (d * (d - 1.0)) + (1.0 - self.alpha) / (d * d))
    }

    pub fn materialize(&self) -> Operator {
        let d = self.d as f64;
        let anti = antisymmetric_projector(self.d).expect("validated");
        let n = self.d * self.d;
        &anti.scale(self.alpha * 2.0 / (d * (d - 1.0)))
            + &Operator::identity(n).scale((1.0 - self.alpha) / (d * d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis_ket, spectral_decompose, Ket};
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn alpha_values_by_hand() {
        // (1/3)·1·(1/4)·5 and (1/4)·4·(1/27)·8
        assert!((simulated_alpha(2).unwrap() - 5.0 / 12.0).abs() < 1e-15);
        assert!((simulated_alpha(3).unwrap() - 8.0 / 27.0).abs() < 1e-15);
        assert!(simulated_alpha(2).unwrap() > 1.0 / 3.0);
        assert!(simulated_alpha(1).is_err());
        for d in 2..=8 {
            let a = simulated_alpha(d).unwrap();
            assert!(a > entanglement_threshold(d) && a <= 1.0);
        }
    }

    #[test]
    fn antisymmetric_projector_properties() {
        for d in 2..=4 {
            let p = antisymmetric_projector(d).unwrap();
            assert!((&p * &p).max_abs_diff(&p).unwrap() < 1e-14);
            assert!(p.hermitian_deviation() < 1e-15);
            assert!((p.trace().re - (d * (d - 1)) as f64 / 2.0).abs() < 1e-14);
        }
        let p = antisymmetric_projector(2).unwrap();
        // |01⟩ is index 1
        let out = p.matrix() * basis_ket(4, 1);
        let expected = Ket::from_vec(vec![
            Complex64::default(),
            Complex64::new(0.5, 0.0),
            Complex64::new(-0.5, 0.0),
            Complex64::default(),
        ]);
        assert!((out - expected).norm() < 1e-15);
    }

    #[test]
    fn materialize_special_cases() {
        let mixed = WernerState::new(3, 0.0).unwrap().materialize();
        assert!(mixed.max_abs_diff(&Operator::identity(9).scale(1.0 / 9.0)).unwrap() < 1e-15);

        let singlet = WernerState::new(2, 1.0).unwrap().materialize();
        let s = Ket::from_vec(vec![
            Complex64::default(),
            Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            Complex64::new(-std::f64::consts::FRAC_1_SQRT_2, 0.0),
            Complex64::default(),
        ]);
        assert!(singlet.max_abs_diff(&Operator::projector(&s)).unwrap() < 1e-15);

        let rho = WernerState::simulated(2).unwrap().materialize();
        assert!((rho.trace().re - 1.0).abs() < 1e-14);
        let eig = spectral_decompose(&rho).unwrap();
        assert!(eig.iter().all(|(l, _)| *l >= -1e-12));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(WernerState::new(2, 1.5).is_err());
        assert!(WernerState::new(2, -0.1).is_err());
        assert!(WernerState::new(1, 0.5).is_err());
    }

    #[test]
    fn commutes_with_local_unitary_twirl() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in 2..=4 {
            let rho = WernerState::simulated(d).unwrap().materialize();
            let u = Operator::new(random::haar_unitary(d, &mut rng)).unwrap();
            let uu = u.tensor(&u);
            let lhs = &uu * &rho;
            let rhs = &rho * &uu;
            assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-8);
        }
    }

    #[test]
    fn closed_rank_one_expectation_matches_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for d in 2..=5 {
            let w = WernerState::new(d, 0.37).unwrap();
            let rho = w.materialize();
            for _ in 0..5 {
                let p = random::unit_ket(d, &mut rng);
                let q = random::unit_ket(d, &mut rng);
                let op = Operator::projector(&p).tensor(&Operator::projector(&q));
                let direct = (&rho * &op).trace().re;
                let o = p.dotc(&q).norm_sqr();
                assert!((direct - w.rank_one_expectation(1.0, 1.0, o)).abs() < 1e-12);
            }
        }
    }
}
