//! Adam training of the grounding model and held-out evaluation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{argmax, GroundingModel, LossParts, PreparedScene};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// The learning rate is multiplied by `decay` every `decay_every` epochs.
    pub decay: f64,
    pub decay_every: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Seeds the per-epoch shuffling.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 32,
            learning_rate: 0.002,
            decay: 0.9,
            decay_every: 5,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.decay_every == 0 {
            return Err(Error::usage("batch size and decay period must be positive"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::usage("learning rate must be finite and >= 0"));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::usage("decay must lie in (0, 1]"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.epsilon > 0.0) {
            return Err(Error::usage("invalid Adam constants"));
        }
        Ok(())
    }

    /// Learning rate used during `epoch` (0-based).
    pub fn rate_at(&self, epoch: usize) -> f64 {
        self.learning_rate * self.decay.powi((epoch / self.decay_every) as i32)
    }
}

/// Training loss of one epoch, averaged over its examples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub learning_rate: f64,
    pub loss: LossParts,
}

/// Minimizes the joint loss with Adam over shuffled mini-batches, calling
/// `on_epoch` after every epoch.
pub fn train_toy(
    model: &mut GroundingModel,
    dataset: &[PreparedScene],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<Vec<EpochLog>> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::usage("training needs at least one scene"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let shapes: Vec<usize> = model.tensors().iter().map(|(_, t)| t.data.len()).collect();
    let mut m: Vec<Vec<f64>> = shapes.iter().map(|&n| vec![0.0; n]).collect();
    let mut v = m.clone();
    let mut step = 0i32;
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut logs = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let lr = cfg.rate_at(epoch);
        order.shuffle(&mut rng);
        let mut sums = [0.0; 3];
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<PreparedScene> = chunk.iter().map(|&i| dataset[i].clone()).collect();
            let (loss, grads) = model.loss_and_gradient(&batch, true).map_err(|e| match e {
                Error::Numeric(msg) => Error::numeric(format!("training diverged in epoch {}: {msg}", epoch + 1)),
                other => other,
            })?;
            let w = batch.len() as f64 / dataset.len() as f64;
            sums[0] += w * loss.audio;
            sums[1] += w * loss.omd;
            sums[2] += w * loss.ground;

            step += 1;
            if lr == 0.0 {
                continue;
            }
            let bc1 = 1.0 - cfg.beta1.powi(step);
            let bc2 = 1.0 - cfg.beta2.powi(step);
            for (((_, param), g), (mi, vi)) in model
                .tensors_mut()
                .iter_mut()
                .zip(&grads)
                .zip(m.iter_mut().zip(v.iter_mut()))
            {
                for k in 0..param.data.len() {
                    let gk = g.data[k];
                    mi[k] = cfg.beta1 * mi[k] + (1.0 - cfg.beta1) * gk;
                    vi[k] = cfg.beta2 * vi[k] + (1.0 - cfg.beta2) * gk * gk;
                    param.data[k] -= lr * (mi[k] / bc1) / ((vi[k] / bc2).sqrt() + cfg.epsilon);
                }
            }
        }
        let log = EpochLog {
            epoch: epoch + 1,
            learning_rate: lr,
            loss: LossParts::combine(sums[0], sums[1], sums[2], model.config().loss_weights),
        };
        if !log.loss.total.is_finite() || model.tensors().iter().any(|(_, t)| !t.is_finite()) {
            return Err(Error::numeric(format!("training diverged in epoch {}", epoch + 1)));
        }
        on_epoch(&log);
        logs.push(log);
    }
    Ok(logs)
}

/// Precision, recall and F1 of one class (or pooled over classes).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Prf {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl Prf {
    pub fn precision(&self) -> f64 {
        ratio(self.true_positives, self.true_positives + self.false_positives)
    }
    pub fn recall(&self) -> f64 {
        ratio(self.true_positives, self.true_positives + self.false_negatives)
    }
    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Held-out metrics of the full inference pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub scenes: usize,
    pub audio_accuracy: f64,
    /// Mention detection per class.
    pub omd_per_class: Vec<Prf>,
    /// Mention detection pooled over every (scene, class) decision.
    pub omd_micro: Prf,
    /// Fraction of scenes whose chosen object is the target.
    pub candidate_accuracy: f64,
    /// Scenes where the predicted class had no object in the scene.
    pub no_candidate: usize,
}

impl EvalReport {
    /// Unweighted mean of the per-class precision, recall and F1.
    pub fn omd_macro(&self) -> (f64, f64, f64) {
        let n = self.omd_per_class.len() as f64;
        let sum = |f: fn(&Prf) -> f64| self.omd_per_class.iter().map(f).sum::<f64>() / n;
        (sum(Prf::precision), sum(Prf::recall), sum(Prf::f1))
    }
}

pub fn evaluate(model: &GroundingModel, dataset: &[PreparedScene]) -> Result<EvalReport> {
    if dataset.is_empty() {
        return Err(Error::usage("evaluation needs at least one scene"));
    }
    let k = model.config().num_classes;
    let mut per_class = vec![Prf::default(); k];
    let mut audio_hits = 0;
    let mut ground_hits = 0;
    let mut no_candidate = 0;
    for scene in dataset {
        let probs = model.classify_audio(&scene.audio)?;
        if argmax(&probs) == scene.target_class {
            audio_hits += 1;
        }
        let detected = model.detect_mentions(&scene.audio, model.config().omd_threshold)?;
        for (c, prf) in per_class.iter_mut().enumerate() {
            match (detected.contains(&c), scene.mentioned.contains(&c)) {
                (true, true) => prf.true_positives += 1,
                (true, false) => prf.false_positives += 1,
                (false, true) => prf.false_negatives += 1,
                (false, false) => {}
            }
        }
        let g = model.ground_prepared(scene)?;
        match g.winner {
            Some(w) if w == scene.target_index => ground_hits += 1,
            Some(_) => {}
            None => no_candidate += 1,
        }
    }
    let micro = per_class.iter().fold(Prf::default(), |acc, p| Prf {
        true_positives: acc.true_positives + p.true_positives,
        false_positives: acc.false_positives + p.false_positives,
        false_negatives: acc.false_negatives + p.false_negatives,
    });
    let n = dataset.len() as f64;
    Ok(EvalReport {
        scenes: dataset.len(),
        audio_accuracy: audio_hits as f64 / n,
        omd_per_class: per_class,
        omd_micro: micro,
        candidate_accuracy: ground_hits as f64 / n,
        no_candidate,
    })
}
