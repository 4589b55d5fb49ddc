//! Additional lemma retrieval.
//!
//! A vocabulary word is taken as a new lemma when enough of the retained edit
//! trees turn it into other attested words. Lemmas found in round `it` carry
//! weight `theta_nl^it`; the given lemmas have weight 1.

use std::collections::HashMap;

use crate::corpus_io::Vocabulary;
use crate::discovery::{find_candidates, retain_frequent_trees, CandidateMap, FrequentTrees};
use crate::edit_tree::EditTree;
use crate::error::{Error, Result};
use crate::par;

#[derive(Clone, Debug, PartialEq)]
pub struct LexEntry {
    pub lemma: String,
    /// Confidence weight, always `theta_nl^iteration`.
    pub weight: f64,
    /// 0 for given lemmas, `i` for lemmas found in round `i`.
    pub iteration: u32,
}

/// A lexicon whose entries carry confidence weights. Given lemmas come first,
/// in input order, followed by discovered lemmas in discovery order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightedLexicon {
    entries: Vec<LexEntry>,
    index: HashMap<String, usize>,
}

impl WeightedLexicon {
    /// Lexicon of given lemmas, all with weight 1. Duplicates are dropped.
    pub fn from_gold<I, S>(lemmas: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut lex = WeightedLexicon::default();
        for lemma in lemmas {
            lex.push(lemma.into(), 1.0, 0);
        }
        lex
    }

    fn push(&mut self, lemma: String, weight: f64, iteration: u32) -> bool {
        if self.index.contains_key(&lemma) {
            return false;
        }
        self.index.insert(lemma.clone(), self.entries.len());
        self.entries.push(LexEntry {
            lemma,
            weight,
            iteration,
        });
        true
    }

    /// Add lemmas discovered in round `iteration` with weight `theta_nl^iteration`.
    /// Lemmas already present are left untouched. Returns the number added.
    pub fn add_discovered<I, S>(&mut self, lemmas: I, iteration: u32, theta_nl: f64) -> usize
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let weight = lemma_weight(theta_nl, iteration);
        lemmas
            .into_iter()
            .map(|l| self.push(l.into(), weight, iteration))
            .filter(|added| *added)
            .count()
    }

    pub fn entries(&self) -> &[LexEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, lemma: &str) -> bool {
        self.index.contains_key(lemma)
    }

    pub fn weight(&self, lemma: &str) -> Option<f64> {
        self.index.get(lemma).map(|&i| self.entries[i].weight)
    }

    pub fn position(&self, lemma: &str) -> Option<usize> {
        self.index.get(lemma).copied()
    }

    /// Sum of all weights; equals the lexicon size when every lemma is given.
    pub fn effective_size(&self) -> f64 {
        self.entries.iter().map(|e| e.weight).sum()
    }

    pub fn gold(&self) -> impl Iterator<Item = &LexEntry> + '_ {
        self.entries.iter().filter(|e| e.iteration == 0)
    }
}

/// Confidence of a lemma found in bootstrap round `iteration` (0 = gold).
pub fn lemma_weight(theta_nl: f64, iteration: u32) -> f64 {
    theta_nl.powi(iteration as i32)
}

/// Minimum number of productive trees a new lemma must exceed.
pub fn lambda_nl(phi_nl: f64, tree_count: usize) -> f64 {
    f64::max(3.0, phi_nl * tree_count as f64)
}

/// Words of `vocab` outside `lexicon` for which more than `lambda_nl(|trees|)`
/// trees produce another attested word. Output is in vocabulary order.
pub fn discover_new_lemmas(
    vocab: &Vocabulary,
    trees: &[EditTree],
    lexicon: &WeightedLexicon,
    phi_nl: f64,
) -> Vec<String> {
    if trees.is_empty() {
        return Vec::new();
    }
    let threshold = lambda_nl(phi_nl, trees.len());
    let hits = par::map(vocab.types(), |word| {
        if lexicon.contains(word) {
            return false;
        }
        let chars: Vec<char> = word.chars().collect();
        let mut out = String::new();
        let mut count = 0usize;
        for tree in trees {
            out.clear();
            if tree.apply_chars(&chars, &mut out) && vocab.contains(&out) {
                count += 1;
            }
        }
        count as f64 > threshold
    });
    vocab
        .types()
        .iter()
        .zip(hits)
        .filter(|(_, hit)| *hit)
        .map(|(w, _)| w.clone())
        .collect()
}

/// Parameters consumed by the bootstrap loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BootstrapParams {
    pub lambda_p: f64,
    pub phi_fc: f64,
    pub phi_nl: f64,
    pub theta_nl: f64,
}

/// Lemmas discovered in one round.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundLog {
    pub iteration: u32,
    pub weight: f64,
    pub discovered: Vec<String>,
}

/// State carried from one bootstrap round to the next.
#[derive(Clone, Debug)]
pub struct BootstrapState {
    pub lexicon: WeightedLexicon,
    pub candidates: CandidateMap,
    pub frequent: FrequentTrees,
    pub rounds: Vec<RoundLog>,
}

impl BootstrapState {
    /// Candidate search and tree retention on `lexicon`, with no bootstrapping.
    pub fn initial(
        vocab: &Vocabulary,
        lexicon: WeightedLexicon,
        params: &BootstrapParams,
    ) -> Result<Self> {
        let candidates = find_candidates(&lexicon, vocab, params.lambda_p)?;
        let frequent = retain_frequent_trees(&candidates, &lexicon, params.phi_fc)?;
        Ok(BootstrapState {
            lexicon,
            candidates,
            frequent,
            rounds: Vec::new(),
        })
    }

    pub fn trees(&self) -> &[EditTree] {
        &self.frequent.trees
    }

    /// Run one round: discover lemmas, then rebuild candidates and trees on
    /// the enlarged lexicon. A round that finds nothing leaves the state as is
    /// apart from logging an empty round.
    pub fn step(mut self, vocab: &Vocabulary, params: &BootstrapParams) -> Result<Self> {
        let iteration = self.rounds.len() as u32 + 1;
        let found = discover_new_lemmas(vocab, self.trees(), &self.lexicon, params.phi_nl);
        let weight = lemma_weight(params.theta_nl, iteration);
        log::info!(
            "bootstrap round {iteration}: {} new lemma(s) at weight {weight}",
            found.len()
        );
        self.rounds.push(RoundLog {
            iteration,
            weight,
            discovered: found.clone(),
        });
        if found.is_empty() {
            return Ok(self);
        }
        self.lexicon
            .add_discovered(found, iteration, params.theta_nl);
        self.candidates = find_candidates(&self.lexicon, vocab, params.lambda_p)?;
        self.frequent = retain_frequent_trees(&self.candidates, &self.lexicon, params.phi_fc)?;
        Ok(self)
    }

    /// TSV of discovered lemmas: round, lemma, weight.
    pub fn discovered_tsv(&self) -> String {
        let mut out = String::new();
        for round in &self.rounds {
            for lemma in &round.discovered {
                out.push_str(&format!("{}\t{lemma}\t{}\n", round.iteration, round.weight));
            }
        }
        out
    }
}

/// Candidate search and tree retention followed by `k` bootstrap rounds.
pub fn bootstrap_iterate(
    vocab: &Vocabulary,
    lexicon: WeightedLexicon,
    params: &BootstrapParams,
    k: usize,
) -> Result<BootstrapState> {
    if !(params.theta_nl > 0.0 && params.theta_nl <= 1.0) {
        return Err(Error::Config(format!(
            "theta_nl must lie in (0, 1], got {}",
            params.theta_nl
        )));
    }
    let mut state = BootstrapState::initial(vocab, lexicon, params)?;
    for _ in 0..k {
        state = state.step(vocab, params)?;
    }
    Ok(state)
}
