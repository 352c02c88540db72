//! Interchangeable joint-probability estimators, selectable by name.
//!
//! Every way of producing a table `P(i, j)` for an [`Experiment`] (the exact
//! model prediction, the sampled model, per-run simulation, the quantum
//! oracle) implements [`JointEstimator`] and is looked up in an
//! [`EstimatorRegistry`]. The CLI picks columns by registry name.

use crate::channels::{apply_channel_to_state, pullback_measurement, KrausChannel};
use crate::error::{Error, Result};
use crate::lhv::{joint_prob_closed, joint_prob_mc, run_frequencies, simulate_runs, ModelConfig};
use crate::linalg::{Operator, Povm};
use crate::oracle::born_prob;
use crate::table::JointTable;
use crate::werner::WernerState;

/// A pair of measurements on a Werner state, optionally preceded by local
/// channels on each side.
#[derive(Debug, Clone)]
pub struct Experiment {
    state: WernerState,
    povm_a: Povm,
    povm_b: Povm,
    channels: Option<(KrausChannel, KrausChannel)>,
    model_a: Povm,
    model_b: Povm,
}

impl Experiment {
    pub fn new(state: WernerState, povm_a: Povm, povm_b: Povm) -> Result<Self> {
        for p in [&povm_a, &povm_b] {
            if p.dim() != state.d() {
                return Err(Error::dim(state.d(), p.dim()));
            }
        }
        Ok(Experiment {
            model_a: povm_a.clone(),
            model_b: povm_b.clone(),
            state,
            povm_a,
            povm_b,
            channels: None,
        })
    }

    pub fn with_channels(mut self, channel_a: KrausChannel, channel_b: KrausChannel) -> Result<Self> {
        self.model_a = pullback_measurement(&self.povm_a, &channel_a)?;
        self.model_b = pullback_measurement(&self.povm_b, &channel_b)?;
        self.channels = Some((channel_a, channel_b));
        Ok(self)
    }

    pub fn state(&self) -> &WernerState {
        &self.state
    }

    pub fn povm_a(&self) -> &Povm {
        &self.povm_a
    }

    pub fn povm_b(&self) -> &Povm {
        &self.povm_b
    }

    pub fn channels(&self) -> Option<&(KrausChannel, KrausChannel)> {
        self.channels.as_ref()
    }

    /// The measurements the base model actually answers (pulled back through
    /// the channels when present).
    pub fn model_measurements(&self) -> (&Povm, &Povm) {
        (&self.model_a, &self.model_b)
    }

    /// The state whose statistics the experiment targets: the Werner state,
    /// or its image under the channels.
    pub fn target_state(&self) -> Result<Operator> {
        let rho = self.state.materialize();
        match &self.channels {
            Some((a, b)) => apply_channel_to_state(&rho, a, b),
            None => Ok(rho),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSettings {
    pub seed: u64,
    pub n_lambda: usize,
    pub n_runs: usize,
    pub workers: usize,
}

impl RunSettings {
    fn model_config(&self) -> ModelConfig {
        ModelConfig::new(self.seed, self.n_lambda, self.workers)
    }
}

pub trait JointEstimator: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn estimate(&self, experiment: &Experiment, settings: &RunSettings) -> Result<JointTable>;
}

struct ClosedForm;

impl JointEstimator for ClosedForm {
    fn name(&self) -> &'static str {
        "closed"
    }
    fn description(&self) -> &'static str {
        "exact model prediction, rank-one closed form summed over fine-grained children"
    }
    fn estimate(&self, e: &Experiment, _: &RunSettings) -> Result<JointTable> {
        let (a, b) = e.model_measurements();
        joint_prob_closed(a, b)
    }
}

struct SampledModel;

impl JointEstimator for SampledModel {
    fn name(&self) -> &'static str {
        "lhv-mc"
    }
    fn description(&self) -> &'static str {
        "model response products averaged over sampled hidden states"
    }
    fn estimate(&self, e: &Experiment, s: &RunSettings) -> Result<JointTable> {
        let (a, b) = e.model_measurements();
        joint_prob_mc(a, b, &s.model_config())
    }
}

struct SimulatedRuns;

impl JointEstimator for SimulatedRuns {
    fn name(&self) -> &'static str {
        "lhv-runs"
    }
    fn description(&self) -> &'static str {
        "empirical frequencies of simulated runs with sampled outcomes"
    }
    fn estimate(&self, e: &Experiment, s: &RunSettings) -> Result<JointTable> {
        let (a, b) = e.model_measurements();
        if s.n_runs == 0 {
            return Err(Error::Domain("lhv-runs needs at least one run".into()));
        }
        let runs = simulate_runs(a, b, s.n_runs, s.seed, s.workers)?;
        Ok(run_frequencies(&runs, a.len(), b.len()))
    }
}

struct Born;

impl JointEstimator for Born {
    fn name(&self) -> &'static str {
        "born"
    }
    fn description(&self) -> &'static str {
        "quantum prediction Tr(rho A_i x B_j) on the target state"
    }
    fn estimate(&self, e: &Experiment, _: &RunSettings) -> Result<JointTable> {
        born_prob(&e.target_state()?, e.povm_a(), e.povm_b())
    }
}

struct BornPullback;

impl JointEstimator for BornPullback {
    fn name(&self) -> &'static str {
        "born-pullback"
    }
    fn description(&self) -> &'static str {
        "quantum prediction of the pulled-back measurements on the untransformed Werner state"
    }
    fn estimate(&self, e: &Experiment, _: &RunSettings) -> Result<JointTable> {
        let (a, b) = e.model_measurements();
        born_prob(&e.state().materialize(), a, b)
    }
}

pub struct EstimatorRegistry {
    entries: Vec<Box<dyn JointEstimator>>,
}

impl EstimatorRegistry {
    pub fn empty() -> Self {
        EstimatorRegistry { entries: Vec::new() }
    }

    pub fn with_builtins() -> Self {
        let mut r = EstimatorRegistry::empty();
        r.register(Box::new(SimulatedRuns));
        r.register(Box::new(SampledModel));
        r.register(Box::new(ClosedForm));
        r.register(Box::new(Born));
        r.register(Box::new(BornPullback));
        r
    }

    /// Adds `estimator`, replacing any entry with the same name in place.
    pub fn register(&mut self, estimator: Box<dyn JointEstimator>) {
        match self.entries.iter().position(|e| e.name() == estimator.name()) {
            Some(k) => self.entries[k] = estimator,
            None => self.entries.push(estimator),
        }
    }

    pub fn get(&self, name: &str) -> Result<&dyn JointEstimator> {
        self.entries
            .iter()
            .find(|e| e.name() == name)
            .map(|e| e.as_ref())
            .ok_or_else(|| Error::UnknownEstimator(name.to_string()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn JointEstimator> {
        self.entries.iter().map(|e| e.as_ref())
    }
}

impl Default for EstimatorRegistry {
    fn default() -> Self {
        EstimatorRegistry::with_builtins()
    }
}
