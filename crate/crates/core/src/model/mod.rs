//! Slot classifier: encoder, head, optimizer and training loop.
//!
//! The model reads the masked token layout produced from a word sequence
//! (`[BOS, w1, MASK, w2, MASK, ..., EOS]`), encodes it, gathers the encoder
//! output at the mask positions and classifies each gathered state into one
//! of the four slot classes. Loss is cross-entropy averaged over the mask
//! positions of each sample, then averaged over the batch — word positions
//! never contribute. Everything is `f64`, single-threaded and seeded, so a
//! given configuration reproduces bit-identical runs.

mod encoder;
mod head;
mod optim;
mod train;

pub use encoder::{EncoderCheckpoint, EncoderGrads, EncoderPass, LocalEncoder, LOCAL_ENCODER_KIND};
pub use head::{
    argmax_classes, cross_entropy_grad, cross_entropy_mean, softmax_rows, ClassifierHead,
    HeadGrads, NUM_CLASSES,
};
pub use optim::{warmup_scale, ParamUpdate, RAdam};
pub use train::{gradient_check, train, GradCheckReport, TraceRow, TrainConfig, TrainReport};

use std::path::Path;

use ndarray::Array2;

use crate::slotmask::{LabeledSequence, PunctClass};

/// Reserved token ids; the vocabulary proper starts at [`NUM_SPECIALS`].
pub const PAD_ID: usize = 0;
pub const BOS_ID: usize = 1;
pub const EOS_ID: usize = 2;
pub const MASK_ID: usize = 3;
pub const UNK_ID: usize = 4;
pub const NUM_SPECIALS: usize = 5;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("sequence needs {needed} encoder tokens but the limit is {limit}; window it first")]
    TooLong { needed: usize, limit: usize },
    #[error("training needs a non-empty train set")]
    EmptyTrainingSet,
    #[error("training diverged: non-finite loss at step {step}")]
    NonFiniteLoss { step: u64 },
    #[error("unsupported encoder kind {kind:?}")]
    UnknownEncoderKind { kind: String },
    #[error("checkpoint field {field}: {reason}")]
    BadCheckpoint { field: &'static str, reason: String },
    #[error("unknown config key {key:?}")]
    UnknownConfigKey { key: String },
    #[error("config key {key}: {reason}")]
    BadConfigValue { key: String, reason: String },
    #[error("config line {line}: expected key=value")]
    BadConfigLine { line: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("checkpoint JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// What the pipeline needs from an encoder. The bundled [`LocalEncoder`]
/// implements it; a pretrained multilingual transformer can stand behind the
/// same trait for full-scale runs.
pub trait Encoder {
    /// Hidden-state width.
    fn dim(&self) -> usize;
    /// Hard limit on the token positions one pass may use.
    fn max_tokens(&self) -> usize;
    /// Word sequence to token ids in the masked layout.
    fn token_ids(&self, words: &[String]) -> Vec<usize>;
    /// Token ids to hidden states, one row per token.
    fn hidden_states(&self, ids: &[usize]) -> Array2<f64>;
}

impl Encoder for LocalEncoder {
    fn dim(&self) -> usize {
        LocalEncoder::dim(self)
    }

    fn max_tokens(&self) -> usize {
        LocalEncoder::max_tokens(self)
    }

    fn token_ids(&self, words: &[String]) -> Vec<usize> {
        LocalEncoder::token_ids(self, words)
    }

    fn hidden_states(&self, ids: &[usize]) -> Array2<f64> {
        self.forward(ids).h
    }
}

/// Token index of the mask for slot `k` in the masked layout.
pub fn slot_position(k: usize) -> usize {
    2 * k + 2
}

/// A tokenized training/validation sample: ids in the masked layout plus one
/// label per mask.
#[derive(Debug, Clone)]
pub struct TrainSample {
    pub ids: Vec<usize>,
    pub labels: Vec<PunctClass>,
}

/// Encoder plus classification head.
#[derive(Debug, Clone)]
pub struct PunctModel {
    pub encoder: LocalEncoder,
    pub head: ClassifierHead,
}

/// Gradients for every parameter tensor of a [`PunctModel`].
pub struct Grads {
    pub encoder: EncoderGrads,
    pub head: HeadGrads,
}

impl PunctModel {
    pub fn new(encoder: LocalEncoder, head: ClassifierHead) -> PunctModel {
        assert_eq!(LocalEncoder::dim(&encoder), head.dim());
        PunctModel { encoder, head }
    }

    /// Tokenizes a labeled sequence, checking it fits the encoder.
    pub fn prepare(&self, seq: &LabeledSequence) -> Result<TrainSample, ModelError> {
        let ids = self.encoder.token_ids(&seq.words);
        if ids.len() > self.encoder.max_tokens() {
            return Err(ModelError::TooLong {
                needed: ids.len(),
                limit: self.encoder.max_tokens(),
            });
        }
        Ok(TrainSample {
            ids,
            labels: seq.labels.clone(),
        })
    }

    /// Gathers the hidden-state rows at the mask positions: row `k` of the
    /// result speaks for slot `k`. Rows at word positions are dropped here,
    /// which is what keeps them out of the loss.
    pub fn gather_slots(&self, hidden: &Array2<f64>, n_slots: usize) -> Array2<f64> {
        let mut out = Array2::zeros((n_slots, hidden.ncols()));
        for k in 0..n_slots {
            out.row_mut(k).assign(&hidden.row(slot_position(k)));
        }
        out
    }

    /// Per-slot logits for one sample.
    pub fn logits(&self, sample: &TrainSample) -> Array2<f64> {
        let hidden = self.encoder.forward(&sample.ids).h;
        let gathered = self.gather_slots(&hidden, sample.labels.len());
        self.head.forward(&gathered).1
    }

    /// Mean cross-entropy of one sample given precomputed hidden states.
    /// Exposed separately so tests can verify that word-position states have
    /// no influence on the loss.
    pub fn loss_from_hidden(&self, hidden: &Array2<f64>, labels: &[PunctClass]) -> f64 {
        let gathered = self.gather_slots(hidden, labels.len());
        let (_, logits) = self.head.forward(&gathered);
        cross_entropy_mean(&logits, labels)
    }

    /// Batch loss: mean over samples of each sample's mean slot loss.
    pub fn loss(&self, samples: &[TrainSample]) -> f64 {
        if samples.is_empty() {
            return 0.0;
        }
        samples
            .iter()
            .map(|s| {
                let hidden = self.encoder.forward(&s.ids).h;
                self.loss_from_hidden(&hidden, &s.labels)
            })
            .sum::<f64>()
            / samples.len() as f64
    }

    /// Batch loss and gradients in one pass.
    pub fn forward_backward(&self, samples: &[TrainSample]) -> (f64, Grads) {
        let mut grads = Grads {
            encoder: self.encoder.zero_grads(),
            head: self.head.zero_grads(),
        };
        let batch = samples.len().max(1) as f64;
        let mut total_loss = 0.0;
        for sample in samples {
            let pass = self.encoder.forward(&sample.ids);
            let n_slots = sample.labels.len();
            let gathered = self.gather_slots(&pass.h, n_slots);
            let (z, logits) = self.head.forward(&gathered);
            total_loss += cross_entropy_mean(&logits, &sample.labels);

            let scale = 1.0 / (batch * n_slots.max(1) as f64);
            let d_logits = cross_entropy_grad(&logits, &sample.labels, scale);
            let d_gathered = self
                .head
                .backward(&gathered, &z, &d_logits, &mut grads.head);

            // Scatter slot-row gradients back to their token positions.
            let mut d_h = Array2::zeros(pass.h.raw_dim());
            for k in 0..n_slots {
                d_h.row_mut(slot_position(k)).assign(&d_gathered.row(k));
            }
            self.encoder
                .backward(&sample.ids, &pass, &d_h, &mut grads.encoder);
        }
        (total_loss / batch, grads)
    }

    /// Predicts one class per slot. Ties go to the lowest class index.
    pub fn predict(&self, words: &[String]) -> Result<Vec<PunctClass>, ModelError> {
        let ids = self.encoder.token_ids(words);
        if ids.len() > self.encoder.max_tokens() {
            return Err(ModelError::TooLong {
                needed: ids.len(),
                limit: self.encoder.max_tokens(),
            });
        }
        let hidden = self.encoder.forward(&ids).h;
        let gathered = self.gather_slots(&hidden, words.len());
        let (_, logits) = self.head.forward(&gathered);
        Ok(argmax_classes(&logits))
    }

    /// Parameter/gradient pairs in a fixed order, with the encoder and head
    /// learning rates attached. The order must stay stable across steps
    /// because optimizer state is positional.
    pub fn param_updates<'a>(
        &'a mut self,
        grads: &'a Grads,
        encoder_lr: f64,
        head_lr: f64,
    ) -> Vec<ParamUpdate<'a>> {
        let flat2 = |a: &'a mut Array2<f64>| a.as_slice_mut().expect("standard layout");
        let enc = &mut self.encoder;
        let head = &mut self.head;
        vec![
            ParamUpdate {
                lr: encoder_lr,
                value: flat2(&mut enc.emb),
                grad: grads.encoder.emb.as_slice().unwrap(),
            },
            ParamUpdate {
                lr: encoder_lr,
                value: flat2(&mut enc.pos),
                grad: grads.encoder.pos.as_slice().unwrap(),
            },
            ParamUpdate {
                lr: encoder_lr,
                value: flat2(&mut enc.w_prev),
                grad: grads.encoder.w_prev.as_slice().unwrap(),
            },
            ParamUpdate {
                lr: encoder_lr,
                value: flat2(&mut enc.w_self),
                grad: grads.encoder.w_self.as_slice().unwrap(),
            },
            ParamUpdate {
                lr: encoder_lr,
                value: flat2(&mut enc.w_next),
                grad: grads.encoder.w_next.as_slice().unwrap(),
            },
            ParamUpdate {
                lr: encoder_lr,
                value: enc.b.as_slice_mut().unwrap(),
                grad: grads.encoder.b.as_slice().unwrap(),
            },
            ParamUpdate {
                lr: head_lr,
                value: flat2(&mut head.w1),
                grad: grads.head.w1.as_slice().unwrap(),
            },
            ParamUpdate {
                lr: head_lr,
                value: head.b1.as_slice_mut().unwrap(),
                grad: grads.head.b1.as_slice().unwrap(),
            },
            ParamUpdate {
                lr: head_lr,
                value: flat2(&mut head.w2),
                grad: grads.head.w2.as_slice().unwrap(),
            },
            ParamUpdate {
                lr: head_lr,
                value: head.b2.as_slice_mut().unwrap(),
                grad: grads.head.b2.as_slice().unwrap(),
            },
        ]
    }

    /// Writes `encoder.json`, `head.json` and `classes.json` into `dir`
    /// (created if missing).
    pub fn save(&self, dir: &Path) -> Result<(), ModelError> {
        std::fs::create_dir_all(dir)?;
        let enc = serde_json::to_string(&self.encoder.to_checkpoint())?;
        std::fs::write(dir.join("encoder.json"), enc)?;
        let head = serde_json::to_string(&HeadCheckpoint::from(&self.head))?;
        std::fs::write(dir.join("head.json"), head)?;
        let classes = serde_json::to_string(&PunctClass::ALL)?;
        std::fs::write(dir.join("classes.json"), classes)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<PunctModel, ModelError> {
        let classes: Vec<PunctClass> =
            serde_json::from_str(&std::fs::read_to_string(dir.join("classes.json"))?)?;
        if classes != PunctClass::ALL {
            return Err(ModelError::BadCheckpoint {
                field: "classes",
                reason: format!("checkpoint class order {classes:?} does not match this build"),
            });
        }
        let enc: EncoderCheckpoint =
            serde_json::from_str(&std::fs::read_to_string(dir.join("encoder.json"))?)?;
        let encoder = LocalEncoder::from_checkpoint(enc)?;
        let head: HeadCheckpoint =
            serde_json::from_str(&std::fs::read_to_string(dir.join("head.json"))?)?;
        let head = head.into_head()?;
        if head.dim() != LocalEncoder::dim(&encoder) {
            return Err(ModelError::BadCheckpoint {
                field: "head",
                reason: format!(
                    "head expects dim {} but the encoder is {}",
                    head.dim(),
                    LocalEncoder::dim(&encoder)
                ),
            });
        }
        Ok(PunctModel { encoder, head })
    }
}

#[derive(serde::Serialize, serde::Deserialize)]
struct HeadCheckpoint {
    w1: Vec<Vec<f64>>,
    b1: Vec<f64>,
    w2: Vec<Vec<f64>>,
    b2: Vec<f64>,
}

impl From<&ClassifierHead> for HeadCheckpoint {
    fn from(head: &ClassifierHead) -> HeadCheckpoint {
        HeadCheckpoint {
            w1: mat_rows(&head.w1),
            b1: head.b1.to_vec(),
            w2: mat_rows(&head.w2),
            b2: head.b2.to_vec(),
        }
    }
}

impl HeadCheckpoint {
    fn into_head(self) -> Result<ClassifierHead, ModelError> {
        let head = ClassifierHead {
            w1: mat_from_rows(self.w1, "w1")?,
            b1: ndarray::Array1::from_vec(self.b1),
            w2: mat_from_rows(self.w2, "w2")?,
            b2: ndarray::Array1::from_vec(self.b2),
        };
        if head.w2.dim() != (head.hidden(), NUM_CLASSES)
            || head.b1.len() != head.hidden()
            || head.b2.len() != NUM_CLASSES
        {
            return Err(ModelError::BadCheckpoint {
                field: "head",
                reason: "inconsistent tensor shapes".to_string(),
            });
        }
        Ok(head)
    }
}

pub(crate) fn mat_rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

pub(crate) fn mat_from_rows(
    rows: Vec<Vec<f64>>,
    field: &'static str,
) -> Result<Array2<f64>, ModelError> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(ModelError::BadCheckpoint {
            field,
            reason: "ragged matrix".to_string(),
        });
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((nrows, ncols), flat).map_err(|e| ModelError::BadCheckpoint {
        field,
        reason: e.to_string(),
    })
}
