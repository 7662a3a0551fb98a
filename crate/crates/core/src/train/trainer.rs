//! Training and evaluation loops, and premise ranking.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::dag::FormulaDag;
use crate::nets::{embed_pair, embed_single, Forward, Mode, Model, ModelConfig, PoolingKind};
use crate::tensor::{Scalar, Tape};

use super::loss::{bce_loss, bce_scalar};
use super::{Adam, Dataset, TrainError, Vocabulary};

const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, Copy)]
pub struct TrainOptions {
    pub epochs: usize,
    pub seed: u64,
    pub batch_size: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            epochs: 5,
            seed: 0,
            batch_size: 16,
        }
    }
}

/// One line of the metrics log.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_loss: f64,
    pub dev_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub accuracy: f64,
    pub loss: f64,
    pub n: usize,
    /// Per-example probabilities, in dataset order.
    pub scores: Vec<f64>,
}

/// Trains a fresh model: seeded shuffled minibatches, Adam with default
/// settings, per-epoch dev evaluation, and best-dev parameter retention
/// (first best epoch wins ties). Zero epochs returns the initialization.
pub fn train<T: Scalar>(
    config: ModelConfig,
    train_data: &Dataset,
    dev_data: &Dataset,
    opts: &TrainOptions,
) -> Result<(Model<T>, Vec<EpochMetrics>), TrainError> {
    assert!(opts.batch_size > 0, "batch size must be positive");
    let vocab = Vocabulary::build(train_data);
    let mut model: Model<T> = Model::init(config, vocab, opts.seed);
    let mut adam: Adam<T> = Adam::new();
    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    let mut metrics = Vec::new();
    let mut best: Option<(f64, crate::nets::ParameterStore<T>)> = None;

    for epoch in 1..=opts.epochs {
        let mut order: Vec<usize> = (0..train_data.len()).collect();
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut seen = 0usize;
        for batch in order.chunks(opts.batch_size) {
            let loss = train_batch(&mut model, &mut adam, train_data, batch)?;
            epoch_loss += loss * batch.len() as f64;
            seen += batch.len();
        }
        let dev = evaluate(&model, dev_data)?;
        metrics.push(EpochMetrics {
            epoch,
            train_loss: epoch_loss / seen.max(1) as f64,
            dev_loss: dev.loss,
            dev_accuracy: dev.accuracy,
        });
        let is_better = best.as_ref().map(|(acc, _)| dev.accuracy > *acc).unwrap_or(true);
        if is_better {
            best = Some((dev.accuracy, model.params.clone()));
        }
    }

    if let Some((_, params)) = best {
        model.params = params;
    }
    Ok((model, metrics))
}

fn train_batch<T: Scalar>(
    model: &mut Model<T>,
    adam: &mut Adam<T>,
    data: &Dataset,
    batch: &[usize],
) -> Result<f64, TrainError> {
    let tape: Tape<T> = Tape::new();
    let view = model.params.tracked(&tape);
    let fwd = Forward::new(&view, Mode::Train);
    let mut preds = Vec::with_capacity(batch.len());
    let mut labels = Vec::with_capacity(batch.len());
    for &i in batch {
        let ex = &data.examples[i];
        preds.push(embed_pair(
            &ex.premise,
            &ex.conjecture,
            &model.vocab,
            &model.config,
            &fwd,
        )?);
        labels.push(ex.label);
    }
    let loss = bce_loss(&preds, &labels)?;
    let loss_value = loss.item().to_f64();
    tape.backward(&loss)?;

    let mut grads: BTreeMap<String, Vec<T>> = BTreeMap::new();
    for name in model.params.trainable_names() {
        if let Some(g) = tape.grad(view.get(&name)) {
            grads.insert(name, g.data().to_vec());
        }
    }
    adam.step(&mut model.params, &grads);

    let momentum = T::from_f64(BN_MOMENTUM);
    for (site, mean, var) in fwd.take_bn_stats() {
        model.params.update_running_stats(&site, &mean, &var, momentum);
    }
    Ok(loss_value)
}

/// Frozen-parameter evaluation: per-example probabilities, mean BCE loss,
/// and accuracy at the fixed 0.5 threshold.
pub fn evaluate<T: Scalar>(model: &Model<T>, dataset: &Dataset) -> Result<EvalReport, TrainError> {
    if dataset.is_empty() {
        return Err(TrainError::EmptyEvaluation);
    }
    let view = model.params.frozen();
    let fwd = Forward::new(&view, Mode::Eval);
    let mut scores = Vec::with_capacity(dataset.len());
    let mut loss = 0.0;
    let mut correct = 0usize;
    for ex in &dataset.examples {
        let p = embed_pair(&ex.premise, &ex.conjecture, &model.vocab, &model.config, &fwd)?
            .item()
            .to_f64();
        loss += bce_scalar(p, ex.label);
        let predicted = if p > 0.5 { 1u8 } else { 0u8 };
        if predicted == ex.label {
            correct += 1;
        }
        scores.push(p);
    }
    let n = dataset.len();
    Ok(EvalReport {
        accuracy: correct as f64 / n as f64,
        loss: loss / n as f64,
        n,
        scores,
    })
}

/// Scores every premise against one conjecture and sorts by descending
/// score, ties by ascending premise id. The conjecture embedding is reused
/// across the pool except under AttDagPool, where attention depends on the
/// premise.
pub fn rank_premises<T: Scalar>(
    model: &Model<T>,
    conjecture: &FormulaDag,
    premises: &[FormulaDag],
) -> Result<Vec<(usize, f64)>, TrainError> {
    let view = model.params.frozen();
    let fwd = Forward::new(&view, Mode::Eval);
    let mut scored: Vec<(usize, f64)> = Vec::with_capacity(premises.len());
    if model.config.pooling == PoolingKind::AttDagPool {
        for (id, premise) in premises.iter().enumerate() {
            let p = embed_pair(premise, conjecture, &model.vocab, &model.config, &fwd)?
                .item()
                .to_f64();
            scored.push((id, p));
        }
    } else {
        let g_c = embed_single(conjecture, &model.vocab, &model.config, &fwd)?;
        for (id, premise) in premises.iter().enumerate() {
            let g_p = embed_single(premise, &model.vocab, &model.config, &fwd)?;
            let p = crate::nets::classify_pair(&g_p, &g_c, &fwd)?.item().to_f64();
            scored.push((id, p));
        }
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(scored)
}
