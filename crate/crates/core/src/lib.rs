//! A local hidden variable model that reproduces the statistics of arbitrary
//! single POV measurements on a family of entangled generalized Werner
//! states, together with the tools used to check it.
//!
//! * [`linalg`]: complex operators, canonical spectral decomposition, POVMs.
//! * [`werner`]: the Werner family and the simulated mixing weight.
//! * [`simplex`]: simplex moment integrals, closed forms and oracles.
//! * [`lhv`]: hidden-state sampling and the two parties' response rules.
//! * [`channels`]: local Kraus channels and model transfer.
//! * [`oracle`]: Born-rule probabilities, PPT test, CHSH.
//! * [`estimator`]: name-addressable joint-probability estimators.
//! * [`verify`]: the self-verification suite.

pub mod channels;
pub mod error;
pub mod estimator;
pub mod lhv;
pub mod linalg;
pub mod oracle;
pub mod random;
pub mod simplex;
pub mod stream;
pub mod table;
pub mod verify;
pub mod werner;

pub use error::{Error, PovmDefect, Result};
pub use estimator::{EstimatorRegistry, Experiment, JointEstimator, RunSettings};
pub use linalg::{Ket, Operator, Povm};
pub use table::JointTable;
pub use werner::WernerState;
