//! Deterministic minibatch training for both heads, with per-interval
//! accuracy/loss metrics on the train and validation splits.
//!
//! Given a seed, initialization, shuffling and therefore the whole parameter
//! trajectory are reproducible; two runs with the same inputs emit identical
//! metrics.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::data::Dataset;
use crate::encoding::EncodingTable;
use crate::hierarchy::{Hierarchy, NodeId};
use crate::inference::{predict, ConditionalScores, PredictionMode};
use crate::loss::{hierarchical_loss, onehot_loss, LossValue};
use crate::model::{Head, Model, ModelArch, ModelError, Optimizer, OptimizerKind};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("label '{0}' is not a labeled class of the hierarchy")]
    LabelNotInHierarchy(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Knobs for one training run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    /// Metrics are recorded every this many steps; must divide `steps`.
    pub eval_interval: usize,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    /// Hidden layer width; `None` trains the linear model.
    pub hidden: Option<usize>,
    /// How the hierarchical head turns scores into a class during
    /// evaluation. The baseline head ignores it.
    pub mode: PredictionMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 2000,
            batch_size: 64,
            eval_interval: 200,
            optimizer: OptimizerKind::Adam,
            learning_rate: 0.001,
            hidden: None,
            mode: PredictionMode::Mlnp,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), TrainError> {
        let mut problems = Vec::new();
        if self.steps == 0 {
            problems.push("steps must be positive".to_owned());
        }
        if self.batch_size == 0 {
            problems.push("batch_size must be positive".to_owned());
        }
        if self.eval_interval == 0 {
            problems.push("eval_interval must be positive".to_owned());
        } else if !self.steps.is_multiple_of(self.eval_interval) {
            problems.push(format!(
                "steps ({}) must be a multiple of eval_interval ({})",
                self.steps, self.eval_interval
            ));
        }
        // NaN fails this comparison too
        if self.learning_rate.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            problems.push("learning_rate must be positive".to_owned());
        }
        if self.hidden == Some(0) {
            problems.push("hidden width must be positive".to_owned());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(TrainError::InvalidConfig(problems.join("; ")))
        }
    }
}

/// Metrics snapshot taken at one evaluation interval.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalRecord {
    pub step: usize,
    pub train_accuracy: f64,
    pub train_loss: f64,
    pub val_accuracy: f64,
    pub val_loss: f64,
}

/// Accuracy and mean per-sample loss on one dataset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalStats {
    pub accuracy: f64,
    pub mean_loss: f64,
    pub correct: usize,
    pub total: usize,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: Model,
    pub records: Vec<EvalRecord>,
}

/// Per-head lookup state shared by the train loop and evaluation.
struct HeadContext<'h> {
    h: &'h Hierarchy,
    head: Head,
    encodings: Option<EncodingTable>,
    class_index: Vec<Option<usize>>,
}

impl<'h> HeadContext<'h> {
    fn new(h: &'h Hierarchy, head: Head) -> Self {
        let mut class_index = vec![None; h.node_count()];
        for (i, &s) in h.labeled().iter().enumerate() {
            class_index[s.index()] = Some(i);
        }
        Self {
            h,
            head,
            encodings: match head {
                Head::Hierarchical => Some(EncodingTable::new(h)),
                Head::Baseline => None,
            },
            class_index,
        }
    }

    fn output_dim(&self) -> usize {
        match self.head {
            Head::Hierarchical => self.h.node_count(),
            Head::Baseline => self.h.labeled().len(),
        }
    }

    fn loss(&self, label: NodeId, out: &[f64]) -> LossValue {
        match self.head {
            Head::Hierarchical => {
                let (enc, mask) = self
                    .encodings
                    .as_ref()
                    .expect("hierarchical context has encodings")
                    .get(label)
                    .expect("labels were validated against the labeled subset");
                hierarchical_loss(enc.values(), mask.values(), out)
                    .expect("all vectors span the node set")
            }
            Head::Baseline => {
                let target = self.class_index[label.index()]
                    .expect("labels were validated against the labeled subset");
                onehot_loss(target, out).expect("target index lies inside the labeled subset")
            }
        }
    }

    fn predict(&self, out: Vec<f64>, mode: PredictionMode) -> NodeId {
        match self.head {
            Head::Hierarchical => {
                let cond = ConditionalScores::new(self.h, out)
                    .expect("model output spans the node set");
                predict(self.h, &cond, mode).expect("labeled subset is non-empty")
            }
            Head::Baseline => {
                let mut best = 0;
                for (i, &v) in out.iter().enumerate() {
                    if v > out[best] {
                        best = i;
                    }
                }
                self.h.labeled()[best]
            }
        }
    }

    fn evaluate(&self, model: &Model, ds: &Dataset, mode: PredictionMode) -> Result<EvalStats, TrainError> {
        let mut correct = 0;
        let mut loss_sum = 0.0;
        for (x, label) in ds.iter() {
            let out = model.forward(x)?;
            loss_sum += self.loss(label, &out).value;
            if self.predict(out, mode) == label {
                correct += 1;
            }
        }
        Ok(EvalStats {
            accuracy: correct as f64 / ds.len() as f64,
            mean_loss: loss_sum / ds.len() as f64,
            correct,
            total: ds.len(),
        })
    }

    fn check_labels(&self, ds: &Dataset) -> Result<(), TrainError> {
        if ds.is_empty() {
            return Err(TrainError::EmptyDataset);
        }
        for (_, label) in ds.iter() {
            if label.index() >= self.h.node_count() || !self.h.is_labeled(label) {
                return Err(TrainError::LabelNotInHierarchy(
                    if label.index() < self.h.node_count() {
                        self.h.name(label).to_owned()
                    } else {
                        format!("#{}", label.index())
                    },
                ));
            }
        }
        Ok(())
    }
}

/// Accuracy and mean loss of a trained model on a dataset.
///
/// The hierarchical head marginalizes its outputs and predicts under `mode`;
/// the baseline head takes the plain argmax over labeled classes.
pub fn evaluate(
    model: &Model,
    head: Head,
    h: &Hierarchy,
    ds: &Dataset,
    mode: PredictionMode,
) -> Result<EvalStats, TrainError> {
    let ctx = HeadContext::new(h, head);
    ctx.check_labels(ds)?;
    ctx.evaluate(model, ds, mode)
}

/// Trains a fresh model of the configured architecture for `cfg.steps`
/// minibatch steps, recording metrics on both splits every
/// `cfg.eval_interval` steps.
///
/// Everything stochastic (initialization, shuffling) is driven by `seed`;
/// identical inputs produce an identical outcome.
pub fn train(
    cfg: &TrainConfig,
    h: &Hierarchy,
    train_set: &Dataset,
    val_set: &Dataset,
    head: Head,
    seed: u64,
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    let ctx = HeadContext::new(h, head);
    ctx.check_labels(train_set)?;
    ctx.check_labels(val_set)?;
    if val_set.dim() != train_set.dim() {
        return Err(TrainError::InvalidConfig(format!(
            "train dim {} != validation dim {}",
            train_set.dim(),
            val_set.dim()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let arch = cfg.hidden.map_or(ModelArch::Linear, ModelArch::Hidden);
    let mut model = Model::init(arch, train_set.dim(), ctx.output_dim(), &mut rng);
    let mut opt = Optimizer::new(cfg.optimizer, cfg.learning_rate, &model);

    let mut order: Vec<usize> = (0..train_set.len()).collect();
    order.shuffle(&mut rng);
    let mut cursor = 0;

    let mut records = Vec::with_capacity(cfg.steps / cfg.eval_interval);
    for step in 1..=cfg.steps {
        let mut grads = model.zero_gradients();
        for _ in 0..cfg.batch_size {
            if cursor == order.len() {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            let i = order[cursor];
            cursor += 1;
            let x = train_set.feature(i);
            let out = model.forward(x)?;
            let loss = ctx.loss(train_set.label(i), &out);
            grads.accumulate(&model.backward(x, &loss.gradient)?);
        }
        grads.scale(1.0 / cfg.batch_size as f64);
        opt.step(&mut model, &grads)?;

        if step.is_multiple_of(cfg.eval_interval) {
            let train_stats = ctx.evaluate(&model, train_set, cfg.mode)?;
            let val_stats = ctx.evaluate(&model, val_set, cfg.mode)?;
            records.push(EvalRecord {
                step,
                train_accuracy: train_stats.accuracy,
                train_loss: train_stats.mean_loss,
                val_accuracy: val_stats.accuracy,
                val_loss: val_stats.mean_loss,
            });
        }
    }
    Ok(TrainOutcome { model, records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SynthConfig};
    use crate::encoding::loss_mask;

    fn synth() -> (Hierarchy, Dataset, Dataset) {
        let cfg = SynthConfig {
            depth: 2,
            branching: 2,
            samples_per_leaf: 20,
            dim: 4,
            level_scale: 3.0,
            noise: 0.5,
            seed: 5,
        };
        let (h, ds) = generate_synthetic(&cfg).unwrap();
        let (train, val) = ds.stratified_split(0.5, 5).unwrap();
        let train = train.standardize().unwrap();
        let val = val
            .apply_standardization(train.standardization().unwrap())
            .unwrap();
        (h, train, val)
    }

    fn quick_cfg() -> TrainConfig {
        TrainConfig {
            steps: 50,
            batch_size: 8,
            eval_interval: 25,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn records_land_on_the_interval_grid() {
        let (h, train_set, val_set) = synth();
        let out = train(&quick_cfg(), &h, &train_set, &val_set, Head::Hierarchical, 1).unwrap();
        let steps: Vec<usize> = out.records.iter().map(|r| r.step).collect();
        assert_eq!(steps, vec![25, 50]);
    }

    #[test]
    fn same_seed_reproduces_run_exactly() {
        let (h, train_set, val_set) = synth();
        for head in [Head::Hierarchical, Head::Baseline] {
            let a = train(&quick_cfg(), &h, &train_set, &val_set, head, 9).unwrap();
            let b = train(&quick_cfg(), &h, &train_set, &val_set, head, 9).unwrap();
            assert_eq!(a.model, b.model);
            assert_eq!(a.records, b.records);
            let c = train(&quick_cfg(), &h, &train_set, &val_set, head, 10).unwrap();
            assert_ne!(a.model, c.model);
        }
    }

    #[test]
    fn masked_outputs_contribute_no_parameter_gradient() {
        let (h, train_set, _) = synth();
        let ctx = HeadContext::new(&h, Head::Hierarchical);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let model = Model::init(ModelArch::Linear, train_set.dim(), h.node_count(), &mut rng);
        let x = train_set.feature(0);
        let label = train_set.label(0);
        let out = model.forward(x).unwrap();
        let loss = ctx.loss(label, &out);
        let grads = model.backward(x, &loss.gradient).unwrap();
        let mask = loss_mask(&h, label);
        for s in h.node_ids() {
            if !mask.is_set(s) {
                let row = &grads.output.weights
                    [s.index() * train_set.dim()..(s.index() + 1) * train_set.dim()];
                assert!(row.iter().all(|&g| g == 0.0), "unmasked row must be zero");
                assert_eq!(grads.output.bias[s.index()], 0.0);
            }
        }
    }

    #[test]
    fn rejects_labels_outside_the_labeled_subset() {
        let (h, train_set, val_set) = synth();
        let root = h.node_id("root").unwrap();
        let bad = Dataset::from_parts(vec![vec![0.0; 4]], vec![root]).unwrap();
        let err = train(&quick_cfg(), &h, &bad, &val_set, Head::Hierarchical, 0).unwrap_err();
        assert!(matches!(err, TrainError::LabelNotInHierarchy(name) if name == "root"));
        let err = evaluate(
            &train(&quick_cfg(), &h, &train_set, &val_set, Head::Baseline, 0)
                .unwrap()
                .model,
            Head::Baseline,
            &h,
            &bad,
            PredictionMode::Mlnp,
        )
        .unwrap_err();
        assert!(matches!(err, TrainError::LabelNotInHierarchy(_)));
    }

    #[test]
    fn rejects_bad_configs() {
        let (h, train_set, val_set) = synth();
        for cfg in [
            TrainConfig { steps: 0, ..quick_cfg() },
            TrainConfig { batch_size: 0, ..quick_cfg() },
            TrainConfig { eval_interval: 7, ..quick_cfg() },
            TrainConfig { learning_rate: 0.0, ..quick_cfg() },
            TrainConfig { hidden: Some(0), ..quick_cfg() },
        ] {
            let err = train(&cfg, &h, &train_set, &val_set, Head::Baseline, 0).unwrap_err();
            assert!(matches!(err, TrainError::InvalidConfig(_)), "{cfg:?}");
        }
    }
}
