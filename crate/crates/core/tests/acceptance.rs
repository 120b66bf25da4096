//! Acceptance suite: nine end-to-end checks, one test and one printed
//! verdict line each. Run with `cargo test --test acceptance -- --nocapture`
//! to see the lines; any failure panics before its PASS is printed.
//!
//! The full-scale reference scores shipped in the evaluation fixture require
//! fine-tuning a large pretrained encoder on the original corpora and are a
//! documented target for such runs (±2.0 F1 points), not something this
//! suite reproduces. Here everything is desk-scale: exhaustive oracles,
//! arithmetic identities, and a synthetic grammar small enough to train in
//! seconds.

mod common;

use std::time::Instant;

use ndarray::Array2;

use maskpunct_core::dataset::{shuffle_merge, subword_view, window_samples};
use maskpunct_core::eval::{pooled_recall, score, EvalReport};
use maskpunct_core::inference::{predict_windowed, punctuate, SlotPredictor, WindowPolicy};
use maskpunct_core::model::{
    cross_entropy_mean, gradient_check, slot_position, train, ClassifierHead, Encoder,
    LocalEncoder, PunctModel, TrainConfig,
};
use maskpunct_core::seed::rng_for;
use maskpunct_core::segment::{segment_cjk, CharSplitter, Lexicon, SegmentationMode, Segmenter};
use maskpunct_core::slotmask::{apply_labels, extract_labels, LabeledSequence, PunctClass};
use maskpunct_core::Lang;
use rand::Rng;

use common::{
    brute_force_segment, generate, toy_english, toy_malay, toy_mandarin, ToyGrammar, WordCodedStub,
};

fn pass(number: u32, name: &str) {
    println!("ACCEPTANCE {number} ({name}): PASS");
}

/// Overall F1 of `model` on `seqs`, windowing to the model's capacity.
fn windowed_overall_f1(model: &PunctModel, seqs: &[LabeledSequence]) -> f64 {
    let windows = window_samples(seqs, model.max_slots().max(1)).expect("sequences window cleanly");
    let mut refs = Vec::with_capacity(windows.len());
    let mut preds = Vec::with_capacity(windows.len());
    for window in windows {
        let labels = model.predict(&window.words).expect("window fits the model");
        preds.push(
            LabeledSequence::new(window.lang, window.words.clone(), labels)
                .expect("predictions are valid labels"),
        );
        refs.push(window);
    }
    EvalReport::from_counts(score(&refs, &preds).expect("aligned word streams"))
        .overall
        .f1
}

fn toy_config() -> TrainConfig {
    TrainConfig {
        head_lr: 0.05,
        encoder_lr: 0.02,
        warmup_steps: 20,
        batch_size: 4,
        max_steps: 1200,
        seq_len: 64,
        encoder_dim: 16,
        head_hidden: 32,
        eval_every: 200,
        seed: 1,
    }
}

// -------------------------------------------------------------------------
// 1. Rendering labels and reading them back is lossless.

#[test]
fn acceptance_1_label_roundtrip() {
    const SENTENCES_PER_LANG: usize = 1200;
    const TIME_BUDGET_SECS: f64 = 10.0;
    let started = Instant::now();

    let classes = [PunctClass::O, PunctClass::C, PunctClass::P, PunctClass::Q];
    let latin = "abcdefghijklmnopqrstuvwxyz";
    let cjk = "的一了我你他们好吗学习喜欢时间工作今天明天什么地方可以"
        .chars()
        .collect::<Vec<char>>();
    let zh_lexicon = Lexicon::builtin_zh();

    for lang in [Lang::En, Lang::Ms, Lang::Zh] {
        let mut rng = rng_for(2024, &format!("roundtrip-{}", lang.code()));
        let lexicon = (lang == Lang::Zh).then_some(&zh_lexicon);
        let segmenter = Segmenter::new(lang, SegmentationMode::Word, lexicon);
        for _ in 0..SENTENCES_PER_LANG {
            let n = rng.gen_range(1..=12);
            let words: Vec<String> = (0..n)
                .map(|_| {
                    if lang == Lang::Zh {
                        (0..rng.gen_range(1..=3))
                            .map(|_| cjk[rng.gen_range(0..cjk.len())])
                            .collect()
                    } else {
                        let len = rng.gen_range(1..=8);
                        (0..len)
                            .map(|_| latin.as_bytes()[rng.gen_range(0..latin.len())] as char)
                            .collect()
                    }
                })
                .collect();
            let labels: Vec<PunctClass> = (0..n).map(|_| classes[rng.gen_range(0..4)]).collect();

            let text = apply_labels(&words, &labels, lang).expect("valid toy words");
            let extraction = extract_labels(&text, &segmenter).expect("extraction succeeds");
            assert_eq!(extraction.dropped_glyphs, 0, "no strays in rendered text");
            let rendered = apply_labels(&extraction.seq.words, &extraction.seq.labels, lang)
                .expect("re-rendering succeeds");
            assert_eq!(rendered, text, "round trip must be exact ({lang:?})");
            if lang != Lang::Zh {
                // Whitespace segmentation recovers the exact word stream too.
                assert_eq!(extraction.seq.words, words);
                assert_eq!(extraction.seq.labels, labels);
            }
        }
    }

    let elapsed = started.elapsed().as_secs_f64();
    assert!(
        elapsed < TIME_BUDGET_SECS,
        "took {elapsed:.1}s, budget {TIME_BUDGET_SECS}s"
    );
    pass(1, "label-roundtrip");
}

// -------------------------------------------------------------------------
// 2. The segmentation dynamic program equals brute-force enumeration.

#[test]
fn acceptance_2_segmenter_oracle() {
    const MAX_LEN: usize = 8;
    const TIME_BUDGET_SECS: f64 = 5.0;
    let started = Instant::now();

    // Frequencies engineered so real score ties occur: "ab" and "ba" have
    // equal mass, so strings like "aba" have two maximum-score paths and the
    // tie-break itself is exercised.
    let lexicon = Lexicon::from_entries([
        ("a", 4u64),
        ("b", 2),
        ("c", 1),
        ("ab", 5),
        ("ba", 5),
        ("bc", 2),
        ("ca", 3),
        ("aa", 16),
        ("abc", 3),
        ("bca", 2),
        ("cc", 2),
    ])
    .expect("valid toy lexicon");

    let alphabet = ['a', 'b', 'c'];
    let mut checked = 0usize;
    let mut strings: Vec<String> = alphabet.iter().map(|c| c.to_string()).collect();
    for _ in 1..MAX_LEN {
        let mut next = Vec::with_capacity(strings.len() * alphabet.len());
        for s in &strings {
            for c in alphabet {
                let mut t = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        for text in &strings {
            assert_eq!(
                segment_cjk(text, &lexicon),
                brute_force_segment(text, &lexicon),
                "disagreement on {text:?}"
            );
            checked += 1;
        }
        strings = next;
    }
    for text in &strings {
        assert_eq!(
            segment_cjk(text, &lexicon),
            brute_force_segment(text, &lexicon),
            "disagreement on {text:?}"
        );
        checked += 1;
    }
    assert_eq!(checked, 9840, "all strings of length 1..=8 over 3 symbols");

    let elapsed = started.elapsed().as_secs_f64();
    assert!(
        elapsed < TIME_BUDGET_SECS,
        "took {elapsed:.1}s, budget {TIME_BUDGET_SECS}s"
    );
    pass(2, "segmenter-oracle");
}

// -------------------------------------------------------------------------
// 3. Metric arithmetic: the hand fixture and the micro-recall identity.

#[test]
fn acceptance_3_metric_arithmetic() {
    const TOLERANCE_PP: f64 = 0.05;
    use PunctClass::{C, O, P, Q};

    let words: Vec<String> = ["w1", "w2", "w3", "w4", "w5"]
        .iter()
        .map(|w| w.to_string())
        .collect();
    let refs = vec![LabeledSequence::new(Lang::En, words.clone(), vec![P, C, O, Q, P]).unwrap()];
    let preds = vec![LabeledSequence::new(Lang::En, words, vec![P, O, O, Q, C]).unwrap()];
    let report = EvalReport::from_counts(score(&refs, &preds).unwrap());
    let overall = report.overall;
    assert!((overall.precision * 100.0 - 66.7).abs() < TOLERANCE_PP);
    assert!((overall.recall * 100.0 - 50.0).abs() < TOLERANCE_PP);
    assert!((overall.f1 * 100.0 - 57.1).abs() < TOLERANCE_PP);

    // Support-weighted per-class recalls pool to the published overall
    // recalls: English supports 1100/1185/46, Mandarin 446/1227/89
    // (period/comma/question).
    let english = pooled_recall(&[(0.867, 1100), (0.785, 1185), (0.817, 46)]) * 100.0;
    assert!((english - 82.4).abs() < TOLERANCE_PP, "got {english}");
    let mandarin = pooled_recall(&[(0.803, 446), (0.800, 1227), (0.887, 89)]) * 100.0;
    assert!((mandarin - 80.5).abs() < TOLERANCE_PP, "got {mandarin}");

    pass(3, "metric-arithmetic");
}

// -------------------------------------------------------------------------
// 4. Loss reads mask slots only, and uniform logits cost ln 4 per slot.

#[test]
fn acceptance_4_loss_masking() {
    const LN4_TOLERANCE: f64 = 1e-9;
    use PunctClass::{C, O, P, Q};

    let seq = LabeledSequence::new(
        Lang::En,
        ["alpha", "bravo", "echo", "delta", "kilo"]
            .iter()
            .map(|w| w.to_string())
            .collect(),
        vec![O, C, O, Q, P],
    )
    .unwrap();
    let encoder = LocalEncoder::fit(std::slice::from_ref(&seq), 12, 16, &mut rng_for(4, "enc"));
    let head = ClassifierHead::new(12, 20, &mut rng_for(4, "head"));
    let model = PunctModel::new(encoder, head);
    let sample = model.prepare(&seq).unwrap();

    let hidden = model.encoder.hidden_states(&sample.ids);
    let baseline = model.loss_from_hidden(&hidden, &sample.labels);

    // Overwrite every row that is not a mask slot; the loss must not move by
    // a single bit.
    let mask_rows: Vec<usize> = (0..sample.labels.len()).map(slot_position).collect();
    let mut perturbed = hidden.clone();
    for row in 0..perturbed.nrows() {
        if !mask_rows.contains(&row) {
            perturbed.row_mut(row).fill(1234.5);
        }
    }
    let shifted = model.loss_from_hidden(&perturbed, &sample.labels);
    assert_eq!(
        baseline.to_bits(),
        shifted.to_bits(),
        "non-slot rows leaked into the loss"
    );

    let uniform = Array2::<f64>::zeros((7, 4));
    let labels = vec![O, C, P, Q, O, P, C];
    let loss = cross_entropy_mean(&uniform, &labels);
    assert!((loss - 4.0_f64.ln()).abs() < LN4_TOLERANCE, "got {loss}");

    pass(4, "loss-masking");
}

// -------------------------------------------------------------------------
// 5. Backprop matches central finite differences.

#[test]
fn acceptance_5_gradient_check() {
    const POINTS: usize = 20;
    const MAX_REL_ERR: f64 = 1e-4;

    let seqs = generate(&toy_english(), 3, 2, 99);
    let encoder = LocalEncoder::fit(&seqs, 10, 32, &mut rng_for(5, "enc"));
    let head = ClassifierHead::new(10, 14, &mut rng_for(5, "head"));
    let mut model = PunctModel::new(encoder, head);
    let samples: Vec<_> = seqs.iter().map(|s| model.prepare(s).unwrap()).collect();

    let report = gradient_check(&mut model, &samples, POINTS, 5);
    assert_eq!(report.points, POINTS);
    assert!(
        report.max_rel_err <= MAX_REL_ERR,
        "worst relative error {} exceeds {MAX_REL_ERR}",
        report.max_rel_err
    );

    pass(5, "gradient-check");
}

// -------------------------------------------------------------------------
// 6. The synthetic grammar trains to F1 >= 0.90, and multilingual training
//    holds up against each monolingual run.

#[test]
fn acceptance_6_toy_end_to_end() {
    const MIN_F1: f64 = 0.90;
    const MONO_HEADROOM: f64 = 0.02;
    const TIME_BUDGET_SECS: f64 = 600.0;
    let started = Instant::now();

    let grammars = [toy_english(), toy_malay(), toy_mandarin()];
    let cfg = toy_config();
    assert!(cfg.max_steps <= 2000, "criterion caps the step budget");

    let train_sets: Vec<Vec<LabeledSequence>> =
        grammars.iter().map(|g| generate(g, 100, 4, 11)).collect();
    let valid_sets: Vec<Vec<LabeledSequence>> =
        grammars.iter().map(|g| generate(g, 24, 4, 12)).collect();
    let test_sets: Vec<Vec<LabeledSequence>> =
        grammars.iter().map(|g| generate(g, 30, 4, 13)).collect();

    // One multilingual model over the shuffled union.
    let merged_train = shuffle_merge(train_sets.clone(), cfg.seed);
    let merged_valid = shuffle_merge(valid_sets.clone(), cfg.seed);
    let (multi, _) = train(&cfg, &merged_train, &merged_valid, None).expect("training runs");

    for (index, grammar) in grammars.iter().enumerate() {
        let multi_f1 = windowed_overall_f1(&multi, &test_sets[index]);
        assert!(
            multi_f1 >= MIN_F1,
            "multilingual {} F1 {multi_f1:.3} below {MIN_F1}",
            grammar.lang.code()
        );

        let (mono, _) =
            train(&cfg, &train_sets[index], &valid_sets[index], None).expect("training runs");
        let mono_f1 = windowed_overall_f1(&mono, &test_sets[index]);
        assert!(
            multi_f1 >= mono_f1 - MONO_HEADROOM,
            "{}: multilingual {multi_f1:.3} fell more than {MONO_HEADROOM} below \
             monolingual {mono_f1:.3}",
            grammar.lang.code()
        );
    }

    let elapsed = started.elapsed().as_secs_f64();
    assert!(
        elapsed < TIME_BUDGET_SECS,
        "took {elapsed:.0}s, budget {TIME_BUDGET_SECS}s"
    );
    pass(6, "toy-end-to-end");
}

// -------------------------------------------------------------------------
// 7. Word-level slots beat character-level slots on the Mandarin analogue.

#[test]
fn acceptance_7_ablation_direction() {
    let grammar: ToyGrammar = toy_mandarin();
    let cfg = toy_config();

    let train_seqs = generate(&grammar, 120, 4, 21);
    let valid_seqs = generate(&grammar, 24, 4, 22);
    let test_seqs = generate(&grammar, 40, 4, 23);

    let splitter = CharSplitter;
    let sub_train = subword_view(&train_seqs, &splitter).unwrap();
    let sub_valid = subword_view(&valid_seqs, &splitter).unwrap();
    let sub_test = subword_view(&test_seqs, &splitter).unwrap();

    let windows = |seqs: &[LabeledSequence]| window_samples(seqs, cfg.window_slots()).unwrap();
    let (word_model, _) =
        train(&cfg, &windows(&train_seqs), &windows(&valid_seqs), None).expect("word run");
    let (subword_model, _) =
        train(&cfg, &windows(&sub_train), &windows(&sub_valid), None).expect("subword run");

    let word_f1 = windowed_overall_f1(&word_model, &test_seqs);
    let subword_f1 = windowed_overall_f1(&subword_model, &sub_test);
    assert!(
        word_f1 > subword_f1,
        "word-level F1 {word_f1:.3} must beat character-level F1 {subword_f1:.3}"
    );

    pass(7, "ablation-direction");
}

// -------------------------------------------------------------------------
// 8. Same seed, same bits: training traces, weights, and outputs.

#[test]
fn acceptance_8_determinism() {
    let grammar = toy_english();
    let train_seqs = generate(&grammar, 40, 3, 31);
    let valid_seqs = generate(&grammar, 10, 3, 32);
    let cfg = TrainConfig {
        max_steps: 300,
        eval_every: 100,
        ..toy_config()
    };

    let dirs = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (model_a, report_a) = train(&cfg, &train_seqs, &valid_seqs, Some(dirs.0.path())).unwrap();
    let (model_b, report_b) = train(&cfg, &train_seqs, &valid_seqs, Some(dirs.1.path())).unwrap();

    // Metric traces agree bit for bit (serialized form is injective on bits).
    assert_eq!(
        serde_json::to_string(&report_a.trace).unwrap(),
        serde_json::to_string(&report_b.trace).unwrap()
    );
    for file in ["encoder.json", "head.json", "trace.csv"] {
        assert_eq!(
            std::fs::read(dirs.0.path().join(file)).unwrap(),
            std::fs::read(dirs.1.path().join(file)).unwrap(),
            "{file} differs between identically seeded runs"
        );
    }

    // And restoration output bytes agree, run to run and model to model.
    let segmenter = Segmenter::new(Lang::En, SegmentationMode::Word, None);
    let policy = WindowPolicy::for_predictor(&model_a);
    let text = "alpha and bravo echo stop kilo delta lima eh alpha bravo over";
    let first = punctuate(text, &segmenter, &model_a, &policy).unwrap().text;
    let second = punctuate(text, &segmenter, &model_a, &policy).unwrap().text;
    let cross = punctuate(text, &segmenter, &model_b, &policy).unwrap().text;
    assert_eq!(first, second);
    assert_eq!(first, cross);

    pass(8, "determinism");
}

// -------------------------------------------------------------------------
// 9. Windowing is invisible for an order-insensitive predictor.

#[test]
fn acceptance_9_windowing_transparency() {
    const WORDS: usize = 5000;

    let code_words = ["wo", "wc", "wp", "wq"];
    let words: Vec<String> = (0..WORDS)
        .map(|i| code_words[(i * 7 + 3) % 4].to_string())
        .collect();

    let stub = WordCodedStub { max: 128 };
    let unwindowed = stub.predict(Lang::En, &words).unwrap();
    for policy in [
        WindowPolicy::new(64, 16).unwrap(),
        WindowPolicy::new(97, 32).unwrap(),
    ] {
        let windowed = predict_windowed(&stub, Lang::En, &words, &policy).unwrap();
        assert_eq!(
            windowed, unwindowed,
            "stitching changed labels ({policy:?})"
        );
    }

    // The same holds end to end through text restoration.
    let segmenter = Segmenter::new(Lang::En, SegmentationMode::Word, None);
    let text = words.join(" ");
    let narrow = punctuate(
        &text,
        &segmenter,
        &stub,
        &WindowPolicy::new(64, 16).unwrap(),
    )
    .unwrap()
    .text;
    let wide = punctuate(
        &text,
        &segmenter,
        &stub,
        &WindowPolicy::new(97, 32).unwrap(),
    )
    .unwrap()
    .text;
    assert_eq!(narrow, wide);

    pass(9, "windowing-transparency");
}
