//! Training loop, run configuration and gradient checking.
//!
//! One step draws a batch from a per-epoch shuffled order, backpropagates the
//! batch loss and applies one optimizer update with the warmup-scaled
//! learning rates (the encoder and the head keep separate base rates). At
//! every evaluation point the validation loss and pooled F1 are appended to
//! the trace, and the parameters with the best validation F1 are the ones
//! returned and checkpointed. All randomness is derived from the config seed,
//! so identical inputs reproduce identical runs bit for bit.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::head::argmax_classes;
use super::optim::{warmup_scale, RAdam};
use super::{ClassifierHead, Grads, LocalEncoder, ModelError, PunctModel, TrainSample};
use crate::eval::{ConfusionCounts, EvalReport};
use crate::seed::rng_for;
use crate::slotmask::LabeledSequence;

/// Hyperparameters of one training run. The defaults are the full-scale
/// recipe: learning rates 1e-4 (head) and 3e-5 (encoder), 300 warmup steps,
/// batches of 4, sequence budget of 256 encoder tokens and roughly 9000
/// iterations. `encoder_dim` and `head_hidden` size the bundled trainable
/// encoder and the tanh layer of the head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub head_lr: f64,
    pub encoder_lr: f64,
    pub warmup_steps: u64,
    pub batch_size: usize,
    pub max_steps: u64,
    pub seq_len: usize,
    pub encoder_dim: usize,
    pub head_hidden: usize,
    pub eval_every: u64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            head_lr: 1e-4,
            encoder_lr: 3e-5,
            warmup_steps: 300,
            batch_size: 4,
            max_steps: 9000,
            seq_len: 256,
            encoder_dim: 64,
            head_hidden: 1568,
            eval_every: 250,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Slots that fit into one window: every word costs two tokens (itself
    /// plus its mask) and BOS/EOS cost two more.
    pub fn window_slots(&self) -> usize {
        self.seq_len.saturating_sub(2) / 2
    }

    /// Sets one field from its `key=value` form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ModelError> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ModelError>
        where
            T::Err: std::fmt::Display,
        {
            value
                .trim()
                .parse()
                .map_err(|e| ModelError::BadConfigValue {
                    key: key.to_string(),
                    reason: format!("{e}"),
                })
        }
        match key.trim() {
            "head_lr" => self.head_lr = parse(key, value)?,
            "encoder_lr" => self.encoder_lr = parse(key, value)?,
            "warmup_steps" => self.warmup_steps = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "max_steps" => self.max_steps = parse(key, value)?,
            "seq_len" => self.seq_len = parse(key, value)?,
            "encoder_dim" => self.encoder_dim = parse(key, value)?,
            "head_hidden" => self.head_hidden = parse(key, value)?,
            "eval_every" => self.eval_every = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            other => {
                return Err(ModelError::UnknownConfigKey {
                    key: other.to_string(),
                })
            }
        }
        Ok(())
    }

    /// Applies `key=value` lines on top of the defaults. `#` starts a
    /// comment, blank lines are skipped.
    pub fn from_kv_text(text: &str) -> Result<TrainConfig, ModelError> {
        let mut cfg = TrainConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ModelError::BadConfigLine { line: idx + 1 })?;
            cfg.set(key, value)?;
        }
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ModelError> {
        let positive: [(&str, u64); 5] = [
            ("batch_size", self.batch_size as u64),
            ("max_steps", self.max_steps),
            ("encoder_dim", self.encoder_dim as u64),
            ("head_hidden", self.head_hidden as u64),
            ("seq_len", self.seq_len as u64),
        ];
        for (key, value) in positive {
            if value == 0 {
                return Err(ModelError::BadConfigValue {
                    key: key.to_string(),
                    reason: "must be positive".to_string(),
                });
            }
        }
        if self.seq_len < 4 {
            return Err(ModelError::BadConfigValue {
                key: "seq_len".to_string(),
                reason: "needs room for BOS, a word, its mask and EOS".to_string(),
            });
        }
        Ok(())
    }
}

/// One row of the training trace. `train_loss` is the mean batch loss since
/// the previous row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub step: u64,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_f1: f64,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub trace: Vec<TraceRow>,
    pub best_step: u64,
    pub best_val_f1: f64,
    pub final_train_loss: f64,
}

fn validation_scores(model: &PunctModel, samples: &[TrainSample]) -> (f64, f64) {
    if samples.is_empty() {
        return (0.0, 0.0);
    }
    let loss = model.loss(samples);
    let mut counts = ConfusionCounts::default();
    for sample in samples {
        let preds = argmax_classes(&model.logits(sample));
        counts.observe_all(&sample.labels, &preds);
    }
    (loss, EvalReport::from_counts(counts).overall.f1)
}

fn write_trace(path: &Path, trace: &[TraceRow]) -> Result<(), ModelError> {
    let mut out = String::from("step,train_loss,val_loss,val_f1\n");
    for row in trace {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.step, row.train_loss, row.val_loss, row.val_f1
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Trains a model from scratch on `train_seqs`. Every sequence must already
/// fit the token budget — window long ones first. Returns the parameters
/// with the best validation F1 (the final ones when `valid_seqs` is empty)
/// and the trace. When `out_dir` is given, the returned model, the config,
/// and the trace are written there (`encoder.json`, `head.json`,
/// `classes.json`, `train_config.json`, `trace.csv`).
pub fn train(
    cfg: &TrainConfig,
    train_seqs: &[LabeledSequence],
    valid_seqs: &[LabeledSequence],
    out_dir: Option<&Path>,
) -> Result<(PunctModel, TrainReport), ModelError> {
    cfg.validate()?;
    if train_seqs.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    let encoder = LocalEncoder::fit(
        train_seqs,
        cfg.encoder_dim,
        cfg.seq_len,
        &mut rng_for(cfg.seed, "encoder-init"),
    );
    let head = ClassifierHead::new(
        LocalEncoder::dim(&encoder),
        cfg.head_hidden,
        &mut rng_for(cfg.seed, "head-init"),
    );
    let mut model = PunctModel::new(encoder, head);

    let samples: Vec<TrainSample> = train_seqs
        .iter()
        .map(|s| model.prepare(s))
        .collect::<Result<_, _>>()?;
    let val_samples: Vec<TrainSample> = valid_seqs
        .iter()
        .map(|s| model.prepare(s))
        .collect::<Result<_, _>>()?;

    let mut optimizer = RAdam::new();
    let mut order: Vec<usize> = Vec::new();
    let mut epoch: u64 = 0;
    let mut trace = Vec::new();
    let mut window_loss_sum = 0.0;
    let mut window_loss_n = 0u64;
    let mut best: Option<(u64, f64, PunctModel)> = None;
    let mut final_train_loss = 0.0;

    for step in 1..=cfg.max_steps {
        let mut batch = Vec::with_capacity(cfg.batch_size);
        while batch.len() < cfg.batch_size {
            if order.is_empty() {
                order = (0..samples.len()).collect();
                order.shuffle(&mut rng_for(cfg.seed, &format!("train-order-{epoch}")));
                epoch += 1;
            }
            batch.push(samples[order.pop().unwrap()].clone());
        }

        let (loss, grads) = model.forward_backward(&batch);
        if !loss.is_finite() {
            return Err(ModelError::NonFiniteLoss { step });
        }
        window_loss_sum += loss;
        window_loss_n += 1;
        final_train_loss = loss;

        let scale = warmup_scale(step, cfg.warmup_steps);
        let mut updates = model.param_updates(&grads, cfg.encoder_lr * scale, cfg.head_lr * scale);
        optimizer.step(&mut updates);

        let eval_now = step == cfg.max_steps || (cfg.eval_every > 0 && step % cfg.eval_every == 0);
        if eval_now {
            let (val_loss, val_f1) = validation_scores(&model, &val_samples);
            trace.push(TraceRow {
                step,
                train_loss: window_loss_sum / window_loss_n as f64,
                val_loss,
                val_f1,
            });
            window_loss_sum = 0.0;
            window_loss_n = 0;
            if !val_samples.is_empty()
                && best
                    .as_ref()
                    .map_or(true, |&(_, best_f1, _)| val_f1 > best_f1)
            {
                best = Some((step, val_f1, model.clone()));
            }
        }
    }

    let (best_step, best_val_f1, best_model) = match best {
        Some((step, f1, m)) => (step, f1, m),
        None => (cfg.max_steps, 0.0, model),
    };
    let report = TrainReport {
        trace,
        best_step,
        best_val_f1,
        final_train_loss,
    };

    if let Some(dir) = out_dir {
        best_model.save(dir)?;
        std::fs::write(
            dir.join("train_config.json"),
            serde_json::to_string_pretty(cfg)?,
        )?;
        write_trace(&dir.join("trace.csv"), &report.trace)?;
    }
    Ok((best_model, report))
}

#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport {
    pub points: usize,
    pub max_rel_err: f64,
}

fn param_flat_mut(model: &mut PunctModel, slot: usize) -> &mut [f64] {
    match slot {
        0 => model.encoder.emb.as_slice_mut(),
        1 => model.encoder.pos.as_slice_mut(),
        2 => model.encoder.w_prev.as_slice_mut(),
        3 => model.encoder.w_self.as_slice_mut(),
        4 => model.encoder.w_next.as_slice_mut(),
        5 => model.encoder.b.as_slice_mut(),
        6 => model.head.w1.as_slice_mut(),
        7 => model.head.b1.as_slice_mut(),
        8 => model.head.w2.as_slice_mut(),
        9 => model.head.b2.as_slice_mut(),
        _ => unreachable!("10 parameter tensors"),
    }
    .expect("standard layout")
}

fn grad_flat(grads: &Grads, slot: usize) -> &[f64] {
    match slot {
        0 => grads.encoder.emb.as_slice(),
        1 => grads.encoder.pos.as_slice(),
        2 => grads.encoder.w_prev.as_slice(),
        3 => grads.encoder.w_self.as_slice(),
        4 => grads.encoder.w_next.as_slice(),
        5 => grads.encoder.b.as_slice(),
        6 => grads.head.w1.as_slice(),
        7 => grads.head.b1.as_slice(),
        8 => grads.head.w2.as_slice(),
        9 => grads.head.b2.as_slice(),
        _ => unreachable!("10 parameter tensors"),
    }
    .expect("standard layout")
}

/// Compares backprop gradients against central finite differences at
/// `points` randomly chosen parameters and reports the worst relative error.
pub fn gradient_check(
    model: &mut PunctModel,
    samples: &[TrainSample],
    points: usize,
    seed: u64,
) -> GradCheckReport {
    let (_, grads) = model.forward_backward(samples);
    let mut rng = rng_for(seed, "grad-check");
    let mut max_rel_err = 0.0_f64;
    for _ in 0..points {
        let slot = rng.gen_range(0..10);
        let len = grad_flat(&grads, slot).len();
        let idx = rng.gen_range(0..len);
        let analytic = grad_flat(&grads, slot)[idx];

        let original = param_flat_mut(model, slot)[idx];
        let h = 1e-5 * original.abs().max(1.0);
        param_flat_mut(model, slot)[idx] = original + h;
        let up = model.loss(samples);
        param_flat_mut(model, slot)[idx] = original - h;
        let down = model.loss(samples);
        param_flat_mut(model, slot)[idx] = original;

        let fd = (up - down) / (2.0 * h);
        let rel = (fd - analytic).abs() / (fd.abs() + analytic.abs()).max(1e-8);
        max_rel_err = max_rel_err.max(rel);
    }
    GradCheckReport {
        points,
        max_rel_err,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::Lang;
    use crate::slotmask::PunctClass;
    use PunctClass::{C, O, P, Q};

    fn seq(words: &[&str], labels: &[PunctClass]) -> LabeledSequence {
        LabeledSequence::new(
            Lang::En,
            words.iter().map(|s| s.to_string()).collect(),
            labels.to_vec(),
        )
        .unwrap()
    }

    /// The label of a slot is fully determined by the word before it.
    fn word_coded_corpus() -> Vec<LabeledSequence> {
        let coded = [("wo", O), ("wc", C), ("wp", P), ("wq", Q)];
        let mut out = Vec::new();
        for (w1, l1) in coded {
            for (w2, l2) in coded {
                out.push(seq(&[w1, w2], &[l1, l2]));
            }
        }
        out
    }

    fn micro_config(seed: u64) -> TrainConfig {
        TrainConfig {
            head_lr: 0.05,
            encoder_lr: 0.02,
            warmup_steps: 10,
            batch_size: 4,
            max_steps: 300,
            seq_len: 16,
            encoder_dim: 8,
            head_hidden: 16,
            eval_every: 50,
            seed,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn micro_task_trains_to_high_f1() {
        let corpus = word_coded_corpus();
        let cfg = micro_config(11);
        let (_, report) = train(&cfg, &corpus, &corpus, None).unwrap();
        assert!(
            report.best_val_f1 >= 0.95,
            "best validation F1 {} after {} steps",
            report.best_val_f1,
            cfg.max_steps
        );
        let first = &report.trace[0];
        let last = report.trace.last().unwrap();
        assert!(last.val_loss < first.val_loss);
    }

    #[test]
    fn identical_seeds_reproduce_the_run_exactly() {
        let corpus = word_coded_corpus();
        let cfg = micro_config(21);
        let (model_a, report_a) = train(&cfg, &corpus, &corpus, None).unwrap();
        let (model_b, report_b) = train(&cfg, &corpus, &corpus, None).unwrap();
        assert_eq!(report_a.trace, report_b.trace);
        let words: Vec<String> = vec!["wq".into(), "wo".into(), "wp".into()];
        assert_eq!(
            model_a.predict(&words).unwrap(),
            model_b.predict(&words).unwrap()
        );

        let mut other = micro_config(22);
        other.max_steps = cfg.max_steps;
        let (_, report_c) = train(&other, &corpus, &corpus, None).unwrap();
        assert_ne!(report_a.trace, report_c.trace);
    }

    #[test]
    fn checkpoints_land_in_the_output_directory() {
        let corpus = word_coded_corpus();
        let mut cfg = micro_config(31);
        cfg.max_steps = 60;
        let dir = tempfile::tempdir().unwrap();
        let (model, report) = train(&cfg, &corpus, &corpus, Some(dir.path())).unwrap();
        for file in [
            "encoder.json",
            "head.json",
            "classes.json",
            "train_config.json",
            "trace.csv",
        ] {
            assert!(dir.path().join(file).exists(), "{file} missing");
        }
        let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
        assert!(trace.starts_with("step,train_loss,val_loss,val_f1\n"));
        assert_eq!(trace.lines().count(), 1 + report.trace.len());
        // The checkpoint holds the returned (best) model.
        let loaded = PunctModel::load(dir.path()).unwrap();
        let words: Vec<String> = vec!["wc".into(), "wq".into()];
        assert_eq!(
            model.predict(&words).unwrap(),
            loaded.predict(&words).unwrap()
        );
    }

    #[test]
    fn non_finite_loss_aborts_training() {
        let corpus = word_coded_corpus();
        let mut cfg = micro_config(41);
        cfg.head_lr = f64::NAN;
        cfg.encoder_lr = f64::NAN;
        let err = train(&cfg, &corpus, &corpus, None).unwrap_err();
        assert!(
            matches!(err, ModelError::NonFiniteLoss { step: 2 }),
            "{err}"
        );
    }

    #[test]
    fn empty_train_set_is_an_error() {
        let cfg = micro_config(51);
        assert!(matches!(
            train(&cfg, &[], &[], None),
            Err(ModelError::EmptyTrainingSet)
        ));
    }

    #[test]
    fn backprop_matches_finite_differences() {
        let corpus = word_coded_corpus();
        let cfg = micro_config(61);
        let encoder = LocalEncoder::fit(
            &corpus,
            cfg.encoder_dim,
            cfg.seq_len,
            &mut rng_for(cfg.seed, "encoder-init"),
        );
        let head = ClassifierHead::new(
            LocalEncoder::dim(&encoder),
            cfg.head_hidden,
            &mut rng_for(cfg.seed, "head-init"),
        );
        let mut model = PunctModel::new(encoder, head);
        let samples: Vec<TrainSample> = corpus
            .iter()
            .take(4)
            .map(|s| model.prepare(s).unwrap())
            .collect();
        let report = gradient_check(&mut model, &samples, 40, 7);
        assert!(
            report.max_rel_err < 1e-6,
            "worst relative error {}",
            report.max_rel_err
        );
    }

    #[test]
    fn config_kv_round_trip() {
        let text = "\
# comment
head_lr = 0.01
batch_size=8
seed = 42   # trailing comment
";
        let cfg = TrainConfig::from_kv_text(text).unwrap();
        assert_eq!(cfg.head_lr, 0.01);
        assert_eq!(cfg.batch_size, 8);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.encoder_lr, TrainConfig::default().encoder_lr);

        assert!(matches!(
            TrainConfig::from_kv_text("bogus_key = 1"),
            Err(ModelError::UnknownConfigKey { .. })
        ));
        assert!(matches!(
            TrainConfig::from_kv_text("head_lr = fast"),
            Err(ModelError::BadConfigValue { .. })
        ));
        assert!(matches!(
            TrainConfig::from_kv_text("just words"),
            Err(ModelError::BadConfigLine { line: 1 })
        ));
    }

    #[test]
    fn window_budget_from_token_budget() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.seq_len, 256);
        assert_eq!(cfg.window_slots(), 127);
        let tiny = TrainConfig { seq_len: 4, ..cfg };
        assert_eq!(tiny.window_slots(), 1);
    }

    #[test]
    fn zero_batch_size_is_rejected() {
        let corpus = word_coded_corpus();
        let mut cfg = micro_config(71);
        cfg.batch_size = 0;
        assert!(matches!(
            train(&cfg, &corpus, &corpus, None),
            Err(ModelError::BadConfigValue { .. })
        ));
    }
}
