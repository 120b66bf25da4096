//! Bundled trainable encoder.
//!
//! A deliberately small context model: token embedding plus learned position
//! embedding, followed by one tanh layer that mixes each position with its
//! immediate neighbours. That is enough context to read the word before and
//! after every mask token, which is what the slot classes depend on, while
//! keeping training fast, dependency-free and exactly reproducible. A
//! pretrained multilingual transformer can replace it behind the same
//! [`Encoder`](super::Encoder) trait for full-scale runs; checkpoints carry a
//! `kind` tag so loaders can tell implementations apart.

use std::collections::{BTreeSet, HashMap};

use ndarray::{s, Array1, Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::head::xavier;
use super::{ModelError, BOS_ID, EOS_ID, MASK_ID, NUM_SPECIALS, UNK_ID};
use crate::slotmask::LabeledSequence;

/// The checkpoint tag for this implementation.
pub const LOCAL_ENCODER_KIND: &str = "local";

#[derive(Debug, Clone)]
pub struct LocalEncoder {
    words: Vec<String>, // id - NUM_SPECIALS -> word
    lookup: HashMap<String, usize>,
    max_tokens: usize,
    pub(crate) emb: Array2<f64>,    // vocab x dim
    pub(crate) pos: Array2<f64>,    // max_tokens x dim
    pub(crate) w_prev: Array2<f64>, // dim x dim
    pub(crate) w_self: Array2<f64>,
    pub(crate) w_next: Array2<f64>,
    pub(crate) b: Array1<f64>, // dim
}

/// Forward-pass cache needed for backprop: summed input embeddings and the
/// tanh outputs.
pub struct EncoderPass {
    pub x: Array2<f64>,
    pub h: Array2<f64>,
}

/// Gradients, same shapes as the parameters.
#[derive(Debug, Clone)]
pub struct EncoderGrads {
    pub emb: Array2<f64>,
    pub pos: Array2<f64>,
    pub w_prev: Array2<f64>,
    pub w_self: Array2<f64>,
    pub w_next: Array2<f64>,
    pub b: Array1<f64>,
}

/// Row `t` holds `x[t-1]`; row 0 is zero.
fn shift_down(x: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(x.raw_dim());
    let n = x.nrows();
    if n > 1 {
        out.slice_mut(s![1.., ..]).assign(&x.slice(s![..n - 1, ..]));
    }
    out
}

/// Row `t` holds `x[t+1]`; the last row is zero.
fn shift_up(x: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(x.raw_dim());
    let n = x.nrows();
    if n > 1 {
        out.slice_mut(s![..n - 1, ..]).assign(&x.slice(s![1.., ..]));
    }
    out
}

impl LocalEncoder {
    /// Builds the vocabulary from every distinct word in `corpus` (sorted,
    /// so ids do not depend on input order) and initializes the weights.
    pub fn fit(
        corpus: &[LabeledSequence],
        dim: usize,
        max_tokens: usize,
        rng: &mut ChaCha8Rng,
    ) -> LocalEncoder {
        let vocab: BTreeSet<&str> = corpus
            .iter()
            .flat_map(|seq| seq.words.iter().map(String::as_str))
            .collect();
        let words: Vec<String> = vocab.into_iter().map(String::from).collect();
        LocalEncoder::with_vocab(words, dim, max_tokens, rng)
    }

    fn with_vocab(
        words: Vec<String>,
        dim: usize,
        max_tokens: usize,
        rng: &mut ChaCha8Rng,
    ) -> LocalEncoder {
        let lookup = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i + NUM_SPECIALS))
            .collect();
        let vocab_size = words.len() + NUM_SPECIALS;
        LocalEncoder {
            words,
            lookup,
            max_tokens,
            emb: Array2::from_shape_fn((vocab_size, dim), |_| rng.gen_range(-0.1..0.1)),
            pos: Array2::from_shape_fn((max_tokens, dim), |_| rng.gen_range(-0.1..0.1)),
            w_prev: xavier(dim, dim, rng),
            w_self: xavier(dim, dim, rng),
            w_next: xavier(dim, dim, rng),
            b: Array1::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn max_tokens(&self) -> usize {
        self.max_tokens
    }

    pub fn vocab_size(&self) -> usize {
        self.emb.nrows()
    }

    /// Token ids for a word sequence in the masked layout:
    /// `[BOS, w1, MASK, w2, MASK, ..., wn, MASK, EOS]`. Unknown words map to
    /// the UNK id.
    pub fn token_ids(&self, words: &[String]) -> Vec<usize> {
        let mut ids = Vec::with_capacity(2 + 2 * words.len());
        ids.push(BOS_ID);
        for word in words {
            ids.push(self.lookup.get(word.as_str()).copied().unwrap_or(UNK_ID));
            ids.push(MASK_ID);
        }
        ids.push(EOS_ID);
        ids
    }

    /// Forward pass. `ids` must fit within `max_tokens`.
    pub fn forward(&self, ids: &[usize]) -> EncoderPass {
        assert!(
            ids.len() <= self.max_tokens,
            "sequence longer than the position table"
        );
        let dim = self.dim();
        let mut x = Array2::zeros((ids.len(), dim));
        for (t, &id) in ids.iter().enumerate() {
            let mut row = x.row_mut(t);
            row.assign(&self.emb.row(id));
            row += &self.pos.row(t);
        }
        let mut pre = shift_down(&x).dot(&self.w_prev.t());
        pre += &x.dot(&self.w_self.t());
        pre += &shift_up(&x).dot(&self.w_next.t());
        pre += &self.b;
        let h = pre.mapv(f64::tanh);
        EncoderPass { x, h }
    }

    /// Backward pass; accumulates parameter gradients into `grads`.
    pub fn backward(
        &self,
        ids: &[usize],
        pass: &EncoderPass,
        d_h: &Array2<f64>,
        grads: &mut EncoderGrads,
    ) {
        let n = ids.len();
        let mut d_pre = d_h.clone();
        d_pre.zip_mut_with(&pass.h, |d, &hv| *d *= 1.0 - hv * hv);

        let x_prev = shift_down(&pass.x);
        let x_next = shift_up(&pass.x);
        grads.w_prev += &d_pre.t().dot(&x_prev);
        grads.w_self += &d_pre.t().dot(&pass.x);
        grads.w_next += &d_pre.t().dot(&x_next);
        grads.b += &d_pre.sum_axis(Axis(0));

        // x_t feeds h_{t+1} through w_prev, h_t through w_self and h_{t-1}
        // through w_next.
        let via_prev = d_pre.dot(&self.w_prev);
        let via_self = d_pre.dot(&self.w_self);
        let via_next = d_pre.dot(&self.w_next);
        let mut d_x = via_self;
        if n > 1 {
            let mut head = d_x.slice_mut(s![..n - 1, ..]);
            head += &via_prev.slice(s![1.., ..]);
            let mut tail = d_x.slice_mut(s![1.., ..]);
            tail += &via_next.slice(s![..n - 1, ..]);
        }

        for (t, &id) in ids.iter().enumerate() {
            let row = d_x.row(t);
            let mut e = grads.emb.row_mut(id);
            e += &row;
            let mut p = grads.pos.row_mut(t);
            p += &row;
        }
    }

    pub fn zero_grads(&self) -> EncoderGrads {
        EncoderGrads {
            emb: Array2::zeros(self.emb.raw_dim()),
            pos: Array2::zeros(self.pos.raw_dim()),
            w_prev: Array2::zeros(self.w_prev.raw_dim()),
            w_self: Array2::zeros(self.w_self.raw_dim()),
            w_next: Array2::zeros(self.w_next.raw_dim()),
            b: Array1::zeros(self.b.raw_dim()),
        }
    }

    pub fn to_checkpoint(&self) -> EncoderCheckpoint {
        EncoderCheckpoint {
            kind: LOCAL_ENCODER_KIND.to_string(),
            dim: self.dim(),
            max_tokens: self.max_tokens,
            words: self.words.clone(),
            emb: super::mat_rows(&self.emb),
            pos: super::mat_rows(&self.pos),
            w_prev: super::mat_rows(&self.w_prev),
            w_self: super::mat_rows(&self.w_self),
            w_next: super::mat_rows(&self.w_next),
            b: self.b.to_vec(),
        }
    }

    pub fn from_checkpoint(ckpt: EncoderCheckpoint) -> Result<LocalEncoder, ModelError> {
        if ckpt.kind != LOCAL_ENCODER_KIND {
            return Err(ModelError::UnknownEncoderKind { kind: ckpt.kind });
        }
        let lookup: HashMap<String, usize> = ckpt
            .words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i + NUM_SPECIALS))
            .collect();
        let enc = LocalEncoder {
            lookup,
            max_tokens: ckpt.max_tokens,
            emb: super::mat_from_rows(ckpt.emb, "emb")?,
            pos: super::mat_from_rows(ckpt.pos, "pos")?,
            w_prev: super::mat_from_rows(ckpt.w_prev, "w_prev")?,
            w_self: super::mat_from_rows(ckpt.w_self, "w_self")?,
            w_next: super::mat_from_rows(ckpt.w_next, "w_next")?,
            b: Array1::from_vec(ckpt.b),
            words: ckpt.words,
        };
        if enc.emb.nrows() != enc.words.len() + NUM_SPECIALS {
            return Err(ModelError::BadCheckpoint {
                field: "emb",
                reason: format!(
                    "{} embedding rows for {} words plus {} specials",
                    enc.emb.nrows(),
                    enc.words.len(),
                    NUM_SPECIALS
                ),
            });
        }
        if enc.pos.nrows() != enc.max_tokens
            || enc.emb.ncols() != enc.dim()
            || enc.pos.ncols() != enc.dim()
            || enc.w_prev.dim() != (enc.dim(), enc.dim())
            || enc.w_self.dim() != (enc.dim(), enc.dim())
            || enc.w_next.dim() != (enc.dim(), enc.dim())
        {
            return Err(ModelError::BadCheckpoint {
                field: "encoder",
                reason: "inconsistent tensor shapes".to_string(),
            });
        }
        Ok(enc)
    }
}

/// Serialized form of [`LocalEncoder`]. The five special token ids are
/// implicit; `words` lists ids `5..` in order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EncoderCheckpoint {
    pub kind: String,
    pub dim: usize,
    pub max_tokens: usize,
    pub words: Vec<String>,
    pub emb: Vec<Vec<f64>>,
    pub pos: Vec<Vec<f64>>,
    pub w_prev: Vec<Vec<f64>>,
    pub w_self: Vec<Vec<f64>>,
    pub w_next: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::Lang;
    use crate::seed::rng_for;
    use crate::slotmask::PunctClass;

    fn corpus() -> Vec<LabeledSequence> {
        vec![LabeledSequence::new(
            Lang::En,
            vec!["b".into(), "a".into(), "c".into()],
            vec![PunctClass::O, PunctClass::C, PunctClass::P],
        )
        .unwrap()]
    }

    #[test]
    fn token_ids_follow_masked_layout() {
        let mut rng = rng_for(1, "enc-test");
        let enc = LocalEncoder::fit(&corpus(), 4, 16, &mut rng);
        // Vocabulary is sorted: a, b, c -> ids 5, 6, 7.
        let ids = enc.token_ids(&["a".to_string(), "zzz".to_string()]);
        assert_eq!(ids, vec![BOS_ID, 5, MASK_ID, UNK_ID, MASK_ID, EOS_ID]);
        assert_eq!(enc.vocab_size(), 3 + NUM_SPECIALS);
    }

    #[test]
    fn fit_is_deterministic_in_the_seed() {
        let a = LocalEncoder::fit(&corpus(), 4, 16, &mut rng_for(9, "enc-init"));
        let b = LocalEncoder::fit(&corpus(), 4, 16, &mut rng_for(9, "enc-init"));
        assert_eq!(a.emb, b.emb);
        assert_eq!(a.w_prev, b.w_prev);
        let c = LocalEncoder::fit(&corpus(), 4, 16, &mut rng_for(10, "enc-init"));
        assert_ne!(a.emb, c.emb);
    }

    #[test]
    fn forward_shapes_and_range() {
        let mut rng = rng_for(2, "enc-test");
        let enc = LocalEncoder::fit(&corpus(), 8, 32, &mut rng);
        let ids = enc.token_ids(&["a".to_string(), "b".to_string(), "c".to_string()]);
        let pass = enc.forward(&ids);
        assert_eq!(pass.h.dim(), (8, 8));
        assert!(pass.h.iter().all(|&v| (-1.0..=1.0).contains(&v)));
    }

    #[test]
    fn checkpoint_round_trips_bitwise() {
        let mut rng = rng_for(3, "enc-test");
        let enc = LocalEncoder::fit(&corpus(), 6, 20, &mut rng);
        let json = serde_json::to_string(&enc.to_checkpoint()).unwrap();
        let back: EncoderCheckpoint = serde_json::from_str(&json).unwrap();
        let loaded = LocalEncoder::from_checkpoint(back).unwrap();
        assert_eq!(enc.emb, loaded.emb);
        assert_eq!(enc.pos, loaded.pos);
        assert_eq!(enc.w_prev, loaded.w_prev);
        assert_eq!(enc.b, loaded.b);
        assert_eq!(
            enc.token_ids(&["c".to_string()]),
            loaded.token_ids(&["c".to_string()])
        );
    }

    #[test]
    fn checkpoint_rejects_other_kinds() {
        let mut rng = rng_for(4, "enc-test");
        let enc = LocalEncoder::fit(&corpus(), 4, 16, &mut rng);
        let mut ckpt = enc.to_checkpoint();
        ckpt.kind = "transformer".to_string();
        assert!(matches!(
            LocalEncoder::from_checkpoint(ckpt),
            Err(ModelError::UnknownEncoderKind { .. })
        ));
    }
}
