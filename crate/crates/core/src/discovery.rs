//! Paradigm candidate search and frequent edit tree retention.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::Write as _;

use crate::bootstrap::WeightedLexicon;
use crate::corpus_io::Vocabulary;
use crate::edit_tree::{lcs_chars, EditTree};
use crate::error::{Error, Result};
use crate::par;

/// Paradigm candidates for every lexicon entry, aligned with the lexicon order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CandidateMap {
    per_lemma: Vec<(String, Vec<String>)>,
}

impl CandidateMap {
    pub fn get(&self, lemma: &str) -> Option<&[String]> {
        self.per_lemma
            .iter()
            .find(|(l, _)| l == lemma)
            .map(|(_, c)| c.as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[String])> + '_ {
        self.per_lemma
            .iter()
            .map(|(l, c)| (l.as_str(), c.as_slice()))
    }

    /// Total number of (lemma, candidate) pairs.
    pub fn pair_count(&self) -> usize {
        self.per_lemma.iter().map(|(_, c)| c.len()).sum()
    }
}

/// `|LCS(lemma, word)| / |lemma| > lambda_p`, evaluated on code points.
pub fn is_candidate(lemma: &[char], word: &[char], lambda_p: f64) -> bool {
    // The LCS can never exceed the shorter string.
    if (lemma.len().min(word.len()) as f64) <= lambda_p * lemma.len() as f64 {
        return false;
    }
    lcs_chars(lemma, word).len as f64 / lemma.len() as f64 > lambda_p
}

/// Collect, for every lemma, the vocabulary words passing the LCS ratio test.
pub fn find_candidates(
    lexicon: &WeightedLexicon,
    vocab: &Vocabulary,
    lambda_p: f64,
) -> Result<CandidateMap> {
    if !(0.0..1.0).contains(&lambda_p) {
        return Err(Error::Config(format!(
            "lambda_p must lie in [0, 1), got {lambda_p}"
        )));
    }
    if lexicon.entries().iter().any(|e| e.lemma.is_empty()) {
        return Err(Error::EmptyLemma);
    }
    let words: Vec<Vec<char>> = vocab.types().iter().map(|w| w.chars().collect()).collect();
    let per_lemma = par::map(lexicon.entries(), |entry| {
        let lemma: Vec<char> = entry.lemma.chars().collect();
        let cands = words
            .iter()
            .zip(vocab.types())
            .filter(|(w, _)| is_candidate(&lemma, w, lambda_p))
            .map(|(_, w)| w.clone())
            .collect();
        (entry.lemma.clone(), cands)
    });
    Ok(CandidateMap { per_lemma })
}

/// Weighted frequency of a tree and the (lemma, form) pairs it was built from.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TreeStats {
    pub weight: f64,
    pub support: Vec<(String, String)>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TreeCensus {
    stats: HashMap<EditTree, TreeStats>,
}

impl TreeCensus {
    pub fn get(&self, tree: &EditTree) -> Option<&TreeStats> {
        self.stats.get(tree)
    }

    pub fn len(&self) -> usize {
        self.stats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stats.is_empty()
    }

    /// All trees, by descending weight, then by their s-expression.
    pub fn ranked(&self) -> Vec<(&EditTree, &TreeStats)> {
        let mut keyed: Vec<(String, &EditTree, &TreeStats)> = self
            .stats
            .iter()
            .map(|(t, s)| (t.to_string(), t, s))
            .collect();
        keyed.sort_by(|a, b| rank_order(a.2.weight, &a.0, b.2.weight, &b.0));
        keyed.into_iter().map(|(_, t, s)| (t, s)).collect()
    }

    /// Diagnostics TSV: tree, weighted count, number of supporting pairs.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (tree, stats) in self.ranked() {
            let _ = writeln!(out, "{tree}\t{}\t{}", stats.weight, stats.support.len());
        }
        out
    }
}

fn rank_order(wa: f64, sa: &str, wb: f64, sb: &str) -> Ordering {
    wb.total_cmp(&wa).then_with(|| sa.cmp(sb))
}

/// Frequency threshold for trees given the (effective) lexicon size.
pub fn lambda_fc(phi_fc: f64, lexicon_size: f64) -> f64 {
    f64::max(2.0, phi_fc * lexicon_size)
}

/// The retained trees together with the full census they were selected from.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FrequentTrees {
    /// Retained trees, by descending weight, then s-expression.
    pub trees: Vec<EditTree>,
    pub census: TreeCensus,
    pub threshold: f64,
}

/// Build a tree for every (lemma, candidate) pair, weight it by the lemma's
/// confidence, and keep trees whose total weight reaches `lambda_fc`.
pub fn retain_frequent_trees(
    candidates: &CandidateMap,
    lexicon: &WeightedLexicon,
    phi_fc: f64,
) -> Result<FrequentTrees> {
    if !(phi_fc.is_finite() && phi_fc > 0.0) {
        return Err(Error::Config(format!(
            "phi_fc must be positive and finite, got {phi_fc}"
        )));
    }
    let built = par::map(&candidates.per_lemma, |(lemma, forms)| {
        let lemma_chars: Vec<char> = lemma.chars().collect();
        forms
            .iter()
            .map(|f| {
                let form: Vec<char> = f.chars().collect();
                EditTree::construct_chars(&lemma_chars, &form)
            })
            .collect::<Vec<_>>()
    });

    // Sequential reduction in lexicon order keeps float sums reproducible.
    let mut stats: HashMap<EditTree, TreeStats> = HashMap::new();
    for ((lemma, forms), trees) in candidates.per_lemma.iter().zip(built) {
        let weight = lexicon.weight(lemma).unwrap_or(1.0);
        for (form, tree) in forms.iter().zip(trees) {
            let entry = stats.entry(tree).or_default();
            entry.weight += weight;
            entry.support.push((lemma.clone(), form.clone()));
        }
    }
    let census = TreeCensus { stats };
    let threshold = lambda_fc(phi_fc, lexicon.effective_size());
    let trees = census
        .ranked()
        .into_iter()
        .filter(|(_, s)| s.weight >= threshold)
        .map(|(t, _)| t.clone())
        .collect();
    Ok(FrequentTrees {
        trees,
        census,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus_io::Corpus;

    fn vocab(words: &str) -> Vocabulary {
        Corpus::parse(words, true).vocabulary()
    }

    #[test]
    fn candidate_ratio_test() {
        let lex = WeightedLexicon::from_gold(["study"]);
        let v = vocab("studied monkey");
        let c = find_candidates(&lex, &v, 0.5).unwrap();
        assert_eq!(c.get("study").unwrap(), ["studied"]);
        // ratio for monkey: only `y` is shared, 1/5
        assert!(!is_candidate(
            &"study".chars().collect::<Vec<_>>(),
            &"monkey".chars().collect::<Vec<_>>(),
            0.5
        ));
    }

    #[test]
    fn zero_threshold_accepts_any_shared_character() {
        let lex = WeightedLexicon::from_gold(["study"]);
        let c = find_candidates(&lex, &vocab("monkey xxx"), 0.0).unwrap();
        assert_eq!(c.get("study").unwrap(), ["monkey"]);
    }

    #[test]
    fn ratio_is_strict() {
        // LCS "ab" over a four-letter lemma is exactly 0.5
        let lex = WeightedLexicon::from_gold(["abcd"]);
        let c = find_candidates(&lex, &vocab("abxx"), 0.5).unwrap();
        assert!(c.get("abcd").unwrap().is_empty());
        let c = find_candidates(&lex, &vocab("abxx"), 0.49).unwrap();
        assert_eq!(c.get("abcd").unwrap(), ["abxx"]);
    }

    #[test]
    fn lemma_itself_is_a_candidate() {
        let lex = WeightedLexicon::from_gold(["walk"]);
        let c = find_candidates(&lex, &vocab("walk walked"), 0.5).unwrap();
        assert_eq!(c.get("walk").unwrap(), ["walk", "walked"]);
    }

    #[test]
    fn bad_arguments() {
        let lex = WeightedLexicon::from_gold([""]);
        assert!(matches!(
            find_candidates(&lex, &vocab("a"), 0.5),
            Err(Error::EmptyLemma)
        ));
        let lex = WeightedLexicon::from_gold(["a"]);
        assert!(find_candidates(&lex, &vocab("a"), 1.0).is_err());
        assert!(find_candidates(&lex, &vocab("a"), -0.1).is_err());
    }

    #[test]
    fn threshold_arithmetic() {
        assert_eq!(lambda_fc(0.05, 100.0), 5.0);
        assert_eq!(lambda_fc(0.05, 10.0), 2.0);
    }

    #[test]
    fn shared_suffixation_survives() {
        // Toy corpus {walk, work, walked, worked}; enumerating all trees by hand:
        // walk->walk, work->work (identity), walk->walked, work->worked (+ed),
        // walk->work, work->walk, walk->worked, work->walked are the candidate pairs.
        let lex = WeightedLexicon::from_gold(["walk", "work"]);
        let v = vocab("walk work walked worked");
        let c = find_candidates(&lex, &v, 0.5).unwrap();
        assert_eq!(c.get("walk").unwrap(), ["walk", "walked"]);
        assert_eq!(c.get("work").unwrap(), ["work", "worked"]);
        let f = retain_frequent_trees(&c, &lex, 0.05).unwrap();
        assert_eq!(f.threshold, 2.0);
        let plus_ed = EditTree::construct("work", "worked");
        assert_eq!(f.census.get(&plus_ed).unwrap().weight, 2.0);
        assert!(f.trees.contains(&plus_ed));
        assert!(f.trees.contains(&EditTree::identity()));
        assert_eq!(f.trees.len(), 2);
    }

    #[test]
    fn singletons_are_dropped() {
        let lex = WeightedLexicon::from_gold(["walk", "sing"]);
        let v = vocab("walked sang");
        let c = find_candidates(&lex, &v, 0.4).unwrap();
        let f = retain_frequent_trees(&c, &lex, 0.05).unwrap();
        assert_eq!(f.census.len(), 2);
        assert!(f.trees.is_empty());
    }

    #[test]
    fn weights_accumulate() {
        let mut lex = WeightedLexicon::from_gold(["walk"]);
        lex.add_discovered(["talk"], 1, 0.5);
        lex.add_discovered(["jump"], 2, 0.5);
        let v = vocab("walked talked jumped");
        let c = find_candidates(&lex, &v, 0.5).unwrap();
        let f = retain_frequent_trees(&c, &lex, 0.05).unwrap();
        let plus_ed = EditTree::construct("walk", "walked");
        assert_eq!(f.census.get(&plus_ed).unwrap().weight, 1.75);
        assert_eq!(f.census.get(&plus_ed).unwrap().support.len(), 3);
        // effective size 1.75 keeps the floor of 2, so the tree is dropped
        assert_eq!(f.threshold, 2.0);
        assert!(f.trees.is_empty());
    }

    #[test]
    fn census_tsv_is_ranked() {
        let lex = WeightedLexicon::from_gold(["walk", "work"]);
        let v = vocab("walk work walked worked");
        let c = find_candidates(&lex, &v, 0.5).unwrap();
        let f = retain_frequent_trees(&c, &lex, 0.05).unwrap();
        let tsv = f.census.to_tsv();
        let first = tsv.lines().next().unwrap();
        assert!(first.ends_with("\t2\t2"));
    }
}
