//! The mini-batch training loop.

use crate::error::{Error, Result};
use crate::eval::auc_from_scores;
use crate::features::FeatureSequence;
use crate::rng::Rng;

use super::adam::{adam_step, AdamState, TrainConfig};
use super::model::{loss_and_gradients, predict, Model, ParamSet};

/// Loss and training AUC after one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    /// AUC of the model on the training set after the epoch's updates;
    /// NaN when the training set holds a single class.
    pub train_auc: f64,
}

/// Trains in place: per epoch, shuffle with a generator derived from
/// (seed, epoch), sweep mini-batches (the last one may be smaller), average
/// gradients over each batch, and apply one Adam step per batch.
///
/// Fully deterministic for a fixed `cfg.seed`: the shuffle order, batch
/// boundaries, and the fixed accumulation order make two runs bitwise
/// identical.
pub fn train(
    model: &mut Model,
    train_set: &[FeatureSequence],
    cfg: &TrainConfig,
) -> Result<Vec<EpochStats>> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    let mut labels = Vec::with_capacity(train_set.len());
    for seq in train_set {
        if seq.seq_len() != model.config.seq_len || seq.feature_dim() != model.config.input_dim {
            return Err(Error::ShapeMismatch(format!(
                "clip {}: {} steps x {} features, model expects {} x {}",
                seq.clip_id,
                seq.seq_len(),
                seq.feature_dim(),
                model.config.seq_len,
                model.config.input_dim
            )));
        }
        labels.push(seq.label.class_index()?);
    }

    // optional inverse-frequency class weights, normalized to mean 1
    let n = train_set.len() as f64;
    let class_weights = if cfg.class_weighting {
        let positives = labels.iter().filter(|&&c| c == 1).count() as f64;
        let negatives = n - positives;
        if positives == 0.0 || negatives == 0.0 {
            return Err(Error::InvalidArgument(
                "class weighting needs both classes in the training set".into(),
            ));
        }
        [n / (2.0 * negatives), n / (2.0 * positives)]
    } else {
        [1.0, 1.0]
    };

    let bool_labels: Vec<bool> = labels.iter().map(|&c| c == 1).collect();
    let mut state = AdamState::new(&model.config);
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..train_set.len()).collect();
        Rng::from_stream(cfg.seed, epoch as u64).shuffle(&mut order);

        let mut loss_sum = 0.0;
        for (batch_index, batch) in order.chunks(cfg.batch_size).enumerate() {
            let mut grads = ParamSet::zeros(&model.config);
            let mut batch_loss = 0.0;
            for &idx in batch {
                let seq = &train_set[idx];
                let inputs: Vec<&[f64]> =
                    seq.vectors.iter().map(|v| v.values.as_slice()).collect();
                let (loss, _) = loss_and_gradients(
                    model,
                    &inputs,
                    labels[idx],
                    class_weights[labels[idx]],
                    &mut grads,
                );
                batch_loss += loss;
            }
            if !batch_loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: batch_index,
                });
            }
            grads.scale(1.0 / batch.len() as f64);
            adam_step(&mut model.params, &grads, &mut state, cfg)?;
            loss_sum += batch_loss;
        }

        let scores = predict(model, train_set)?;
        let train_auc = auc_from_scores(&scores, &bool_labels).unwrap_or(f64::NAN);
        history.push(EpochStats {
            epoch,
            mean_loss: loss_sum / n,
            train_auc,
        });
    }
    Ok(history)
}
