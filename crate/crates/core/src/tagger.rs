//! Unsupervised word-class induction with a first-order HMM.
//!
//! The model is trained by Baum-Welch (EM) on the corpus, one chain per
//! sentence, and decodes with Viterbi. Rare types are mapped to a shared
//! unknown-word class before training. The E-step runs over fixed-size
//! sentence chunks whose statistics are merged in chunk order, so training
//! is bit-for-bit reproducible for any number of workers.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus_io::Corpus;
use crate::error::{Error, Result};
use crate::par;

const FORMAT_HEADER: &str = "paradigm-hmm 1";
const SENTENCES_PER_CHUNK: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TaggerConfig {
    pub states: usize,
    pub iters: usize,
    pub seed: u64,
    /// Types seen fewer times than this are treated as unknown.
    pub unk_threshold: usize,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        TaggerConfig {
            states: 8,
            iters: 20,
            seed: 0,
            unk_threshold: 2,
        }
    }
}

/// HMM parameters. Matrices are row-major; the emission matrix has one
/// column per known type plus a final column for unknown words.
#[derive(Clone, Debug, PartialEq)]
pub struct HmmModel {
    states: usize,
    types: Vec<String>,
    index: HashMap<String, usize>,
    initial: Vec<f64>,
    transition: Vec<f64>,
    emission: Vec<f64>,
}

/// A trained model with the log-likelihood before each EM update and after
/// the last one.
#[derive(Clone, Debug)]
pub struct Training {
    pub model: HmmModel,
    pub log_likelihoods: Vec<f64>,
}

/// Tag index per corpus token.
pub type TagSequence = Vec<usize>;

impl HmmModel {
    pub fn states(&self) -> usize {
        self.states
    }

    pub fn types(&self) -> &[String] {
        &self.types
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn transition_row(&self, from: usize) -> &[f64] {
        &self.transition[from * self.states..(from + 1) * self.states]
    }

    fn columns(&self) -> usize {
        self.types.len() + 1
    }

    pub fn emission_row(&self, state: usize) -> &[f64] {
        let cols = self.columns();
        &self.emission[state * cols..(state + 1) * cols]
    }

    /// Emission column of `word`; unknown words share the last column.
    pub fn observation(&self, word: &str) -> usize {
        self.index.get(word).copied().unwrap_or(self.types.len())
    }

    pub fn emission_prob(&self, state: usize, word: &str) -> f64 {
        self.emission_row(state)[self.observation(word)]
    }

    fn emit(&self, state: usize, obs: usize) -> f64 {
        self.emission[state * self.columns() + obs]
    }

    /// Every distribution is non-negative and sums to one within `tol`.
    pub fn is_normalized(&self, tol: f64) -> bool {
        let ok = |row: &[f64]| {
            row.iter().all(|&p| p >= 0.0 && p.is_finite())
                && (row.iter().sum::<f64>() - 1.0).abs() <= tol
        };
        ok(&self.initial)
            && (0..self.states).all(|k| ok(self.transition_row(k)) && ok(self.emission_row(k)))
    }

    fn random(states: usize, types: Vec<String>, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols = types.len() + 1;
        let mut noisy = |n: usize| -> Vec<f64> {
            let mut row: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
            normalize(&mut row);
            row
        };
        let initial = noisy(states);
        let transition = (0..states).flat_map(|_| noisy(states)).collect();
        let emission = (0..states).flat_map(|_| noisy(cols)).collect();
        let index = types
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        HmmModel {
            states,
            types,
            index,
            initial,
            transition,
            emission,
        }
    }

    /// Viterbi decoding of every sentence. Ties go to the lower state index.
    pub fn tag(&self, corpus: &Corpus) -> TagSequence {
        let obs: Vec<usize> = corpus
            .tokens()
            .iter()
            .map(|t| self.observation(t))
            .collect();
        let ranges = corpus.sentence_ranges();
        let paths = par::map(&ranges, |r| self.viterbi(&obs[r.clone()]));
        paths.into_iter().flatten().collect()
    }

    fn viterbi(&self, obs: &[usize]) -> Vec<usize> {
        let k = self.states;
        if obs.is_empty() {
            return Vec::new();
        }
        let ln = |p: f64| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY };
        let mut score: Vec<f64> = (0..k)
            .map(|s| ln(self.initial[s]) + ln(self.emit(s, obs[0])))
            .collect();
        let mut back = vec![0usize; obs.len() * k];
        for (t, &o) in obs.iter().enumerate().skip(1) {
            let mut next = vec![f64::NEG_INFINITY; k];
            for s in 0..k {
                let mut best = f64::NEG_INFINITY;
                let mut arg = 0;
                for (p, &prev) in score.iter().enumerate() {
                    let v = prev + ln(self.transition[p * k + s]);
                    if v > best {
                        best = v;
                        arg = p;
                    }
                }
                next[s] = best + ln(self.emit(s, o));
                back[t * k + s] = arg;
            }
            score = next;
        }
        let mut state = 0;
        for s in 1..k {
            if score[s] > score[state] {
                state = s;
            }
        }
        let mut path = vec![0; obs.len()];
        for t in (0..obs.len()).rev() {
            path[t] = state;
            state = back[t * k + state];
        }
        path
    }

    /// Versioned text dump; floats use shortest round-trip notation.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let row = |out: &mut String, values: &[f64]| {
            let cells: Vec<String> = values.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        };
        let _ = writeln!(out, "{FORMAT_HEADER}");
        let _ = writeln!(out, "states {}", self.states);
        let _ = writeln!(out, "types {}", self.types.len());
        for t in &self.types {
            let _ = writeln!(out, "{t}");
        }
        out.push_str("initial\n");
        row(&mut out, &self.initial);
        out.push_str("transition\n");
        for k in 0..self.states {
            row(&mut out, self.transition_row(k));
        }
        out.push_str("emission\n");
        for k in 0..self.states {
            row(&mut out, self.emission_row(k));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::ModelFormat(msg.to_owned());
        let mut lines = text.lines();
        let mut next = |what: &str| lines.next().ok_or_else(|| bad(&format!("missing {what}")));
        if next("header")? != FORMAT_HEADER {
            return Err(bad("unsupported header"));
        }
        let count = |line: &str, key: &str| -> Result<usize> {
            line.strip_prefix(key)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| bad(&format!("expected `{key} <n>`")))
        };
        let states = count(next("states")?, "states")?;
        let n_types = count(next("types")?, "types")?;
        let mut types = Vec::with_capacity(n_types);
        for _ in 0..n_types {
            types.push(next("type")?.to_owned());
        }
        let parse_row = |line: &str, len: usize| -> Result<Vec<f64>> {
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad("unparsable number"))?;
            if row.len() != len {
                return Err(bad("row has the wrong length"));
            }
            Ok(row)
        };
        let mut section = |name: &str, rows: usize, len: usize| -> Result<Vec<f64>> {
            if next(name)? != name {
                return Err(bad(&format!("expected section `{name}`")));
            }
            let mut values = Vec::with_capacity(rows * len);
            for _ in 0..rows {
                values.extend(parse_row(next(name)?, len)?);
            }
            Ok(values)
        };
        let initial = section("initial", 1, states)?;
        let transition = section("transition", states, states)?;
        let emission = section("emission", states, n_types + 1)?;
        let index = types
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(HmmModel {
            states,
            types,
            index,
            initial,
            transition,
            emission,
        })
    }
}

fn normalize(row: &mut [f64]) -> bool {
    let sum: f64 = row.iter().sum();
    if sum > 0.0 && sum.is_finite() {
        row.iter_mut().for_each(|v| *v /= sum);
        true
    } else {
        false
    }
}

/// Expected counts gathered from one chunk of sentences.
struct ChunkStats {
    log_likelihood: f64,
    initial: Vec<f64>,
    transition: Vec<f64>,
    /// (observation, per-state expected counts), in first-seen order.
    emission: Vec<(usize, Vec<f64>)>,
}

fn expected_counts(model: &HmmModel, obs: &[usize], ranges: &[Range<usize>]) -> ChunkStats {
    let k = model.states;
    let mut stats = ChunkStats {
        log_likelihood: 0.0,
        initial: vec![0.0; k],
        transition: vec![0.0; k * k],
        emission: Vec::new(),
    };
    let mut slot_of: HashMap<usize, usize> = HashMap::new();
    for range in ranges {
        let o = &obs[range.clone()];
        let n = o.len();
        if n == 0 {
            continue;
        }
        // scaled forward pass
        let mut alpha = vec![0.0; n * k];
        let mut scale = vec![0.0; n];
        for s in 0..k {
            alpha[s] = model.initial[s] * model.emit(s, o[0]);
        }
        for t in 0..n {
            if t > 0 {
                for s in 0..k {
                    let mut acc = 0.0;
                    for p in 0..k {
                        acc += alpha[(t - 1) * k + p] * model.transition[p * k + s];
                    }
                    alpha[t * k + s] = acc * model.emit(s, o[t]);
                }
            }
            let c: f64 = alpha[t * k..(t + 1) * k].iter().sum();
            scale[t] = c;
            if c > 0.0 {
                alpha[t * k..(t + 1) * k].iter_mut().for_each(|a| *a /= c);
            }
        }
        if scale.iter().any(|&c| c <= 0.0) {
            // Impossible under the current model; contributes nothing.
            stats.log_likelihood = f64::NEG_INFINITY;
            continue;
        }
        stats.log_likelihood += scale.iter().map(|c| c.ln()).sum::<f64>();

        // scaled backward pass
        let mut beta = vec![1.0; n * k];
        for t in (0..n - 1).rev() {
            for s in 0..k {
                let mut acc = 0.0;
                for q in 0..k {
                    acc += model.transition[s * k + q]
                        * model.emit(q, o[t + 1])
                        * beta[(t + 1) * k + q];
                }
                beta[t * k + s] = acc / scale[t + 1];
            }
        }

        for t in 0..n {
            let slot = *slot_of.entry(o[t]).or_insert_with(|| {
                stats.emission.push((o[t], vec![0.0; k]));
                stats.emission.len() - 1
            });
            for s in 0..k {
                let gamma = alpha[t * k + s] * beta[t * k + s];
                stats.emission[slot].1[s] += gamma;
                if t == 0 {
                    stats.initial[s] += gamma;
                }
            }
            if t + 1 < n {
                for p in 0..k {
                    let a = alpha[t * k + p] / scale[t + 1];
                    for q in 0..k {
                        stats.transition[p * k + q] += a
                            * model.transition[p * k + q]
                            * model.emit(q, o[t + 1])
                            * beta[(t + 1) * k + q];
                    }
                }
            }
        }
    }
    stats
}

/// One E-step over the whole corpus: total log-likelihood and merged counts.
fn e_step(model: &HmmModel, obs: &[usize], ranges: &[Range<usize>]) -> (f64, HmmModel) {
    let chunks = par::map_chunks(ranges, SENTENCES_PER_CHUNK, |chunk| {
        expected_counts(model, obs, chunk)
    });
    let k = model.states;
    let cols = model.columns();
    let mut counts = model.clone();
    counts.initial = vec![0.0; k];
    counts.transition = vec![0.0; k * k];
    counts.emission = vec![0.0; k * cols];
    let mut ll = 0.0;
    for chunk in chunks {
        ll += chunk.log_likelihood;
        for (a, b) in counts.initial.iter_mut().zip(&chunk.initial) {
            *a += b;
        }
        for (a, b) in counts.transition.iter_mut().zip(&chunk.transition) {
            *a += b;
        }
        for (o, per_state) in chunk.emission {
            for (s, v) in per_state.into_iter().enumerate() {
                counts.emission[s * cols + o] += v;
            }
        }
    }
    (ll, counts)
}

/// M-step: normalize expected counts; rows without mass keep their old values.
fn m_step(model: &mut HmmModel, counts: HmmModel) {
    let k = model.states;
    let cols = model.columns();
    let mut initial = counts.initial;
    if normalize(&mut initial) {
        model.initial = initial;
    }
    for s in 0..k {
        let mut row = counts.transition[s * k..(s + 1) * k].to_vec();
        if normalize(&mut row) {
            model.transition[s * k..(s + 1) * k].copy_from_slice(&row);
        }
        let mut row = counts.emission[s * cols..(s + 1) * cols].to_vec();
        if normalize(&mut row) {
            model.emission[s * cols..(s + 1) * cols].copy_from_slice(&row);
        }
    }
}

/// Train an HMM tagger. `on_iteration` sees the iteration number, the model
/// after that update, and the log-likelihood of the model before it.
pub fn train_hmm_with(
    corpus: &Corpus,
    config: &TaggerConfig,
    mut on_iteration: impl FnMut(usize, &HmmModel, f64),
) -> Result<Training> {
    if corpus.len() < 2 {
        return Err(Error::CorpusTooShort(corpus.len()));
    }
    if config.iters == 0 || config.states == 0 {
        return Err(Error::Config(
            "tagger needs at least one state and one iteration".into(),
        ));
    }
    let vocab = corpus.vocabulary();
    let known: Vec<String> = vocab
        .iter()
        .filter(|(_, c)| *c >= config.unk_threshold)
        .map(|(t, _)| t.to_owned())
        .collect();
    let mut model = HmmModel::random(config.states, known, config.seed);
    let obs: Vec<usize> = corpus
        .tokens()
        .iter()
        .map(|t| model.observation(t))
        .collect();
    let ranges = corpus.sentence_ranges();

    let mut log_likelihoods = Vec::with_capacity(config.iters + 1);
    for it in 0..config.iters {
        let (ll, counts) = e_step(&model, &obs, &ranges);
        m_step(&mut model, counts);
        log_likelihoods.push(ll);
        on_iteration(it + 1, &model, ll);
    }
    let (ll, _) = e_step(&model, &obs, &ranges);
    log_likelihoods.push(ll);
    Ok(Training {
        model,
        log_likelihoods,
    })
}

pub fn train_hmm(corpus: &Corpus, config: &TaggerConfig) -> Result<Training> {
    train_hmm_with(corpus, config, |_, _, _| {})
}

pub fn tag_corpus(model: &HmmModel, corpus: &Corpus) -> TagSequence {
    model.tag(corpus)
}

/// `token<TAB>tag` per line, with a blank line between sentences.
pub fn tagged_corpus_tsv(corpus: &Corpus, tags: &[usize]) -> String {
    let mut out = String::new();
    for (i, r) in corpus.sentence_ranges().into_iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for t in r {
            let _ = writeln!(out, "{}\t{}", corpus.tokens()[t], tags[t]);
        }
    }
    out
}
