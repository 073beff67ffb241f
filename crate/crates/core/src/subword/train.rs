use std::collections::HashMap;
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use rand::distributions::{Distribution, Uniform, WeightedIndex};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{SubwordConfig, SubwordModel};
use super::ngrams::ngram_buckets;
use crate::dictionary::BigramCorpus;
use crate::{Error, Result};

const INIT_STREAM: u64 = 0;
const SHUFFLE_STREAM: u64 = 1;
const WORKER_STREAM: u64 = 2;

/// Linear decay from the initial rate to zero over `total_updates`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LearningRate {
    pub initial: f64,
    pub total_updates: u64,
}

impl LearningRate {
    /// Rate used for update number `step` (0-based); zero once `step`
    /// reaches `total_updates`.
    pub fn rate_at(&self, step: u64) -> f64 {
        if step >= self.total_updates {
            return 0.0;
        }
        self.initial * (1.0 - step as f64 / self.total_updates as f64)
    }
}

/// Distinct corpus words with occurrence counts over both columns, most
/// frequent first, ties in order of first appearance.
fn corpus_vocab(corpus: &BigramCorpus) -> (Vec<String>, Vec<u64>) {
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut seen: Vec<(&str, u64)> = Vec::new();
    for (l, r) in &corpus.lines {
        for w in [l.as_str(), r.as_str()] {
            match index.get(w) {
                Some(&i) => seen[i].1 += 1,
                None => {
                    index.insert(w, seen.len());
                    seen.push((w, 1));
                }
            }
        }
    }
    // stable sort keeps first-appearance order among equal counts
    seen.sort_by_key(|e| std::cmp::Reverse(e.1));
    seen.into_iter().map(|(w, c)| (w.to_owned(), c)).unzip()
}

/// Untrained model over the corpus vocabulary: input rows uniform in
/// `[-1/dim, 1/dim]`, output rows zero.
pub(crate) fn initialize(corpus: &BigramCorpus, config: &SubwordConfig) -> Result<SubwordModel> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let (words, counts) = corpus_vocab(corpus);
    let dim = config.dim;
    let bound = 1.0 / dim as f32;
    let dist = Uniform::new_inclusive(-bound, bound);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(INIT_STREAM);
    let word_input: Vec<f32> = (0..words.len() * dim).map(|_| dist.sample(&mut rng)).collect();
    let ngram_len = usize::try_from(config.bucket_count * dim as u64)
        .map_err(|_| Error::Validation("bucket_count * dim overflows".to_owned()))?;
    let ngram_input: Vec<f32> = (0..ngram_len).map(|_| dist.sample(&mut rng)).collect();
    let output = vec![0f32; words.len() * dim];
    SubwordModel::from_parts(config.clone(), words, counts, word_input, ngram_input, output)
}

/// Train a skipgram model with negative sampling on `corpus`.
///
/// Each line `(a, b)` is one update predicting `b` from the n-gram
/// representation of `a`. With `threads > 1` workers update the shared
/// parameters without locking, so results are only reproducible with a
/// single thread.
pub fn train(corpus: &BigramCorpus, config: &SubwordConfig, threads: usize) -> Result<SubwordModel> {
    let model = initialize(corpus, config)?;
    fit(model, corpus, threads)
}

struct SharedMatrix {
    data: Vec<AtomicU32>,
    dim: usize,
}

impl SharedMatrix {
    fn new(data: Vec<f32>, dim: usize) -> Self {
        SharedMatrix {
            data: data.into_iter().map(|v| AtomicU32::new(v.to_bits())).collect(),
            dim,
        }
    }

    fn into_inner(self) -> Vec<f32> {
        self.data
            .into_iter()
            .map(|v| f32::from_bits(v.into_inner()))
            .collect()
    }

    fn row(&self, idx: usize) -> &[AtomicU32] {
        &self.data[idx * self.dim..(idx + 1) * self.dim]
    }

    fn add_row_to(&self, idx: usize, acc: &mut [f32]) {
        for (a, v) in acc.iter_mut().zip(self.row(idx)) {
            *a += f32::from_bits(v.load(Ordering::Relaxed));
        }
    }

    fn read_row(&self, idx: usize, out: &mut [f32]) {
        for (o, v) in out.iter_mut().zip(self.row(idx)) {
            *o = f32::from_bits(v.load(Ordering::Relaxed));
        }
    }

    fn add_scaled(&self, idx: usize, delta: &[f32], scale: f32) {
        for (v, d) in self.row(idx).iter().zip(delta) {
            let cur = f32::from_bits(v.load(Ordering::Relaxed));
            v.store((cur + scale * d).to_bits(), Ordering::Relaxed);
        }
    }
}

struct Params {
    word_input: SharedMatrix,
    ngram_input: SharedMatrix,
    output: SharedMatrix,
}

struct Example {
    word: usize,
    buckets: Vec<usize>,
}

struct Worker<'a> {
    params: &'a Params,
    examples: &'a [Example],
    negatives: usize,
    sampler: Option<&'a WeightedIndex<f64>>,
    rng: ChaCha8Rng,
    hidden: Vec<f32>,
    grad: Vec<f32>,
    out_row: Vec<f32>,
}

impl Worker<'_> {
    /// One negative-sampling update. Every input row receives the full
    /// hidden-layer gradient, as in the reference skipgram implementation.
    fn step(&mut self, input: usize, context: usize, lr: f32) -> f32 {
        let example = &self.examples[input];
        let p = self.params;

        self.hidden.iter_mut().for_each(|v| *v = 0.0);
        p.word_input.add_row_to(example.word, &mut self.hidden);
        for &b in &example.buckets {
            p.ngram_input.add_row_to(b, &mut self.hidden);
        }
        let scale = 1.0 / (1 + example.buckets.len()) as f32;
        self.hidden.iter_mut().for_each(|v| *v *= scale);
        self.grad.iter_mut().for_each(|v| *v = 0.0);

        let mut loss = self.update_output(context, true, lr);
        if let Some(sampler) = self.sampler {
            for _ in 0..self.negatives {
                let neg = loop {
                    let n = sampler.sample(&mut self.rng);
                    if n != context {
                        break n;
                    }
                };
                loss += self.update_output(neg, false, lr);
            }
        }

        p.word_input.add_scaled(example.word, &self.grad, 1.0);
        for &b in &example.buckets {
            p.ngram_input.add_scaled(b, &self.grad, 1.0);
        }
        loss
    }

    fn update_output(&mut self, target: usize, label: bool, lr: f32) -> f32 {
        self.params.output.read_row(target, &mut self.out_row);
        let score: f32 = self.out_row.iter().zip(&self.hidden).map(|(u, h)| u * h).sum();
        let prob = 1.0 / (1.0 + (-score).exp());
        let alpha = lr * (if label { 1.0 } else { 0.0 } - prob);
        for (g, u) in self.grad.iter_mut().zip(&self.out_row) {
            *g += alpha * u;
        }
        self.params.output.add_scaled(target, &self.hidden, alpha);
        if label {
            -prob.max(f32::MIN_POSITIVE).ln()
        } else {
            -(1.0 - prob).max(f32::MIN_POSITIVE).ln()
        }
    }
}

/// Continue training `model` on `corpus`, whose words must all be in the
/// model vocabulary.
pub(crate) fn fit(model: SubwordModel, corpus: &BigramCorpus, threads: usize) -> Result<SubwordModel> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let threads = threads.max(1);
    let config = model.config.clone();
    let dim = config.dim;

    let pairs = corpus
        .lines
        .iter()
        .map(|(l, r)| match (model.word_id(l), model.word_id(r)) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Error::Validation(format!(
                "corpus pair ({:?}, {:?}) is outside the model vocabulary",
                l, r
            ))),
        })
        .collect::<Result<Vec<_>>>()?;

    let examples: Vec<Example> = model
        .words
        .iter()
        .enumerate()
        .map(|(word, w)| Example {
            word,
            buckets: ngram_buckets(w, config.min_n, config.max_n, config.bucket_count),
        })
        .collect();

    let sampler = if model.words.len() > 1 {
        let weights = model.counts.iter().map(|&c| (c as f64).powf(0.75));
        Some(WeightedIndex::new(weights).map_err(|e| Error::Validation(e.to_string()))?)
    } else {
        None
    };

    let SubwordModel {
        words,
        counts,
        word_input,
        ngram_input,
        output,
        ..
    } = model;
    let params = Params {
        word_input: SharedMatrix::new(word_input, dim),
        ngram_input: SharedMatrix::new(ngram_input, dim),
        output: SharedMatrix::new(output, dim),
    };

    let schedule = LearningRate {
        initial: config.learning_rate,
        total_updates: (config.epochs * pairs.len()) as u64,
    };
    let progress = AtomicU64::new(0);

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
    shuffle_rng.set_stream(SHUFFLE_STREAM);

    let mut workers: Vec<Worker> = (0..threads)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(WORKER_STREAM + t as u64);
            Worker {
                params: &params,
                examples: &examples,
                negatives: config.negatives,
                sampler: sampler.as_ref(),
                rng,
                hidden: vec![0.0; dim],
                grad: vec![0.0; dim],
                out_row: vec![0.0; dim],
            }
        })
        .collect();

    let mut order: Vec<usize> = (0..pairs.len()).collect();
    for _ in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let run = |worker: &mut Worker, shard: &[usize]| {
            for &line in shard {
                let step = progress.fetch_add(1, Ordering::Relaxed);
                let lr = schedule.rate_at(step) as f32;
                let (a, b) = pairs[line];
                worker.step(a, b, lr);
            }
        };
        if threads == 1 {
            run(&mut workers[0], &order);
        } else {
            let shard_len = order.len().div_ceil(threads);
            std::thread::scope(|scope| {
                for (worker, shard) in workers.iter_mut().zip(order.chunks(shard_len)) {
                    scope.spawn(|| run(worker, shard));
                }
            });
        }
    }
    drop(workers);

    SubwordModel::from_parts(
        config,
        words,
        counts,
        params.word_input.into_inner(),
        params.ngram_input.into_inner(),
        params.output.into_inner(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subword::objective;

    fn corpus(lines: &[(&str, &str)]) -> BigramCorpus {
        BigramCorpus {
            lines: lines.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
        }
    }

    fn small_config(seed: u64) -> SubwordConfig {
        SubwordConfig {
            dim: 8,
            bucket_count: 1000,
            seed,
            ..SubwordConfig::default()
        }
    }

    #[test]
    fn schedule_reaches_zero() {
        let lr = LearningRate {
            initial: 0.05,
            total_updates: 10,
        };
        assert_eq!(lr.rate_at(0), 0.05);
        assert!(lr.rate_at(9) > 0.0);
        assert_eq!(lr.rate_at(10), 0.0);
        for s in 0..10 {
            assert!(lr.rate_at(s + 1) < lr.rate_at(s));
        }
    }

    #[test]
    fn vocab_is_sorted_by_count() {
        let c = corpus(&[("b", "a"), ("a", "a"), ("c", "b")]);
        let (words, counts) = corpus_vocab(&c);
        assert_eq!(words, ["a", "b", "c"]);
        assert_eq!(counts, [3, 2, 1]);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let err = train(&BigramCorpus::default(), &small_config(1), 1).unwrap_err();
        assert!(matches!(err, Error::EmptyCorpus));
    }

    #[test]
    fn initialization_is_bounded_and_output_zero() {
        let c = corpus(&[("xx", "yy")]);
        let m = initialize(&c, &small_config(4)).unwrap();
        assert!(m.word_input.iter().chain(&m.ngram_input).all(|v| v.abs() <= 1.0 / 8.0));
        assert!(m.output.iter().all(|&v| v == 0.0));
    }

    fn rows_f64(m: &SubwordModel, word: &str) -> Vec<Vec<f64>> {
        let id = m.word_id(word).unwrap();
        std::iter::once(m.word_input_row(id))
            .chain(m.buckets(word).into_iter().map(|b| m.ngram_row(b)))
            .map(|r| r.iter().map(|&v| f64::from(v)).collect())
            .collect()
    }

    fn out_f64(m: &SubwordModel, word: &str) -> Vec<f64> {
        m.output_row(m.word_id(word).unwrap()).iter().map(|&v| f64::from(v)).collect()
    }

    #[test]
    fn one_update_decreases_the_loss() {
        // with two words every negative sample is the input word itself
        let c = corpus(&[("xylo", "yarn")]);
        let config = SubwordConfig {
            epochs: 1,
            learning_rate: 0.01,
            ..small_config(11)
        };
        let before = initialize(&c, &config).unwrap();
        // output rows start at zero, so give them a value first
        let warm = fit(before.clone(), &c, 1).unwrap();
        let after = fit(warm.clone(), &c, 1).unwrap();
        let loss = |m: &SubwordModel| {
            let neg = out_f64(m, "xylo");
            objective::loss(&rows_f64(m, "xylo"), &out_f64(m, "yarn"), &vec![neg; 5])
        };
        assert!(loss(&warm) < loss(&before));
        assert!(loss(&after) < loss(&warm));
    }

    #[test]
    fn update_follows_the_analytic_gradient() {
        let c = corpus(&[("xylo", "yarn")]);
        // a single negative, so no output row is updated twice in one step
        let config = SubwordConfig {
            epochs: 1,
            negatives: 1,
            learning_rate: 0.5,
            ..small_config(5)
        };
        let warm = fit(initialize(&c, &config).unwrap(), &c, 1).unwrap();
        let after = fit(warm.clone(), &c, 1).unwrap();
        let rows = rows_f64(&warm, "xylo");
        let neg = out_f64(&warm, "xylo");
        let g = objective::gradients(&rows, &out_f64(&warm, "yarn"), &[neg]);
        let lr = 0.5;
        let n_rows = rows.len() as f64;
        // input rows move by -lr * dL/dh, i.e. n_rows times the per-row gradient
        let id = warm.word_id("xylo").unwrap();
        for k in 0..8 {
            let delta = f64::from(after.word_input_row(id)[k] - warm.word_input_row(id)[k]);
            let expected = -lr * g.input_row[k] * n_rows;
            assert!((delta - expected).abs() <= 1e-3 * expected.abs() + 1e-9, "{delta} vs {expected}");
        }
        let yid = warm.word_id("yarn").unwrap();
        for k in 0..8 {
            let delta = f64::from(after.output_row(yid)[k] - warm.output_row(yid)[k]);
            let expected = -lr * g.positive[k];
            assert!((delta - expected).abs() <= 1e-3 * expected.abs() + 1e-9, "{delta} vs {expected}");
        }
    }

    #[test]
    fn single_thread_is_deterministic() {
        let c = corpus(&[("«aap»", "‹monkey›"), ("‹monkey›", "«aap»"), ("«aap»", "«aap»")]);
        let a = train(&c, &small_config(7), 1).unwrap();
        let b = train(&c, &small_config(7), 1).unwrap();
        assert_eq!(a, b);
        let other = train(&c, &small_config(8), 1).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn multithreaded_training_stays_finite() {
        let lines: Vec<(String, String)> = (0..200)
            .map(|i| (format!("w{}", i % 17), format!("w{}", (i * 7) % 17)))
            .collect();
        let c = BigramCorpus { lines };
        let m = train(&c, &small_config(3), 4).unwrap();
        assert!(m.word_input.iter().chain(&m.ngram_input).chain(&m.output).all(|v| v.is_finite()));
    }
}
