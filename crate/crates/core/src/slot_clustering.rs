//! Grouping edit trees into paradigm slots.
//!
//! Each slot starts as a single tree. A slot is described by the tag tuples
//! seen in a window around corpus occurrences of the forms it produces.
//! Slots are merged greedily by cosine similarity of those descriptions, but
//! only when no lemma is realized by both slots: one lemma has at most one
//! form per slot.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::bootstrap::WeightedLexicon;
use crate::corpus_io::{Corpus, Vocabulary};
use crate::edit_tree::EditTree;
use crate::error::{Error, Result};
use crate::par;

/// Dense tag-tuple counts, indexed by the tuple read as a base-`states` number.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn zeros(dim: usize) -> Self {
        FeatureVector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Cosine similarity clamped to [0, 1]; 0 if either vector is all zeros.
pub fn slot_similarity(a: &FeatureVector, b: &FeatureVector) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let dot: f64 = a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum();
    (dot / (na * nb)).clamp(0.0, 1.0)
}

/// Per-type histograms of the tag tuples around each occurrence.
///
/// A window is only counted when it lies entirely inside one sentence.
#[derive(Clone, Debug)]
pub struct ContextIndex {
    dim: usize,
    by_type: HashMap<String, Vec<(usize, u32)>>,
}

impl ContextIndex {
    pub fn new(corpus: &Corpus, tags: &[usize], states: usize, half_window: usize) -> Self {
        let width = 2 * half_window + 1;
        let dim = states.pow(width as u32);
        let tokens = corpus.tokens();
        let ranges = corpus.sentence_ranges();
        let shards = par::map_chunks(&ranges, 256, |sentences| {
            let mut local: BTreeMap<&str, BTreeMap<usize, u32>> = BTreeMap::new();
            for r in sentences {
                if r.len() < width {
                    continue;
                }
                for center in r.start + half_window..r.end - half_window {
                    let tuple = tags[center - half_window..=center + half_window]
                        .iter()
                        .fold(0usize, |acc, &t| acc * states + t);
                    *local
                        .entry(tokens[center].as_str())
                        .or_default()
                        .entry(tuple)
                        .or_default() += 1;
                }
            }
            local
        });
        let mut merged: BTreeMap<&str, BTreeMap<usize, u32>> = BTreeMap::new();
        for shard in shards {
            for (word, hist) in shard {
                let entry = merged.entry(word).or_default();
                for (tuple, c) in hist {
                    *entry.entry(tuple).or_default() += c;
                }
            }
        }
        let by_type = merged
            .into_iter()
            .map(|(w, h)| (w.to_owned(), h.into_iter().collect()))
            .collect();
        ContextIndex { dim, by_type }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Features of a form set where each form contributes its weight per occurrence.
    pub fn features(&self, forms: &BTreeMap<String, f64>) -> FeatureVector {
        let mut v = FeatureVector::zeros(self.dim);
        for (form, &weight) in forms {
            if let Some(hist) = self.by_type.get(form) {
                for &(tuple, count) in hist {
                    v.0[tuple] += weight * count as f64;
                }
            }
        }
        v
    }
}

/// Features of one form set computed directly from a corpus and its tags.
pub fn extract_slot_features(
    corpus: &Corpus,
    tags: &[usize],
    states: usize,
    half_window: usize,
    forms: &BTreeMap<String, f64>,
) -> FeatureVector {
    ContextIndex::new(corpus, tags, states, half_window).features(forms)
}

/// A candidate paradigm slot.
#[derive(Clone, Debug, PartialEq)]
pub struct SlotState {
    pub id: usize,
    /// Indices into the tree list the grouping was run on.
    pub trees: Vec<usize>,
    /// Lexicon positions of the lemmas realized by this slot.
    pub lemmas: BTreeSet<usize>,
    /// Produced forms with the summed weight of the lemmas producing them.
    pub forms: BTreeMap<String, f64>,
    /// (lexicon position, tree index, form) for every realized lemma.
    pub productions: Vec<(usize, usize, String)>,
    pub features: FeatureVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MergeEvent {
    pub kept: usize,
    pub absorbed: usize,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grouping {
    /// Slots in ascending id order.
    pub slots: Vec<SlotState>,
    pub merges: Vec<MergeEvent>,
}

impl Grouping {
    /// One line per merge: kept id, absorbed id, score.
    pub fn merge_log(&self) -> String {
        let mut out = String::new();
        for m in &self.merges {
            let _ = writeln!(out, "merge\t{}\t{}\t{}", m.kept, m.absorbed, m.score);
        }
        out
    }
}

/// For each tree, the lexicon entries it maps onto an attested word.
fn tree_productions(
    trees: &[EditTree],
    lexicon: &WeightedLexicon,
    vocab: &Vocabulary,
) -> Vec<Vec<(usize, String)>> {
    let lemmas: Vec<Vec<char>> = lexicon
        .entries()
        .iter()
        .map(|e| e.lemma.chars().collect())
        .collect();
    par::map(trees, |tree| {
        let mut out = Vec::new();
        let mut buf = String::new();
        for (i, lemma) in lemmas.iter().enumerate() {
            buf.clear();
            if tree.apply_chars(lemma, &mut buf) && vocab.contains(&buf) {
                out.push((i, buf.clone()));
            }
        }
        out
    })
}

/// Inputs shared by every grouping run over one corpus.
pub struct GroupingInput<'a> {
    pub trees: &'a [EditTree],
    pub lexicon: &'a WeightedLexicon,
    pub vocab: &'a Vocabulary,
    pub contexts: &'a ContextIndex,
}

/// Greedy agglomeration of trees into slots.
pub fn group_surface_changes(input: &GroupingInput<'_>, lambda_s: f64) -> Result<Grouping> {
    if !(lambda_s > 0.0 && lambda_s < 1.0) {
        return Err(Error::Config(format!(
            "lambda_s must lie in (0, 1), got {lambda_s}"
        )));
    }
    let productions = tree_productions(input.trees, input.lexicon, input.vocab);
    let mut slots: Vec<Option<SlotState>> = productions
        .into_iter()
        .enumerate()
        .map(|(id, prods)| {
            let mut forms = BTreeMap::new();
            let mut lemmas = BTreeSet::new();
            for (lemma, form) in &prods {
                lemmas.insert(*lemma);
                *forms.entry(form.clone()).or_insert(0.0) += input.lexicon.entries()[*lemma].weight;
            }
            let features = input.contexts.features(&forms);
            Some(SlotState {
                id,
                trees: vec![id],
                lemmas,
                forms,
                productions: prods.into_iter().map(|(l, f)| (l, id, f)).collect(),
                features,
            })
        })
        .collect();

    let n = slots.len();
    let disjoint = |a: &SlotState, b: &SlotState| a.lemmas.is_disjoint(&b.lemmas);
    let mut eligible = vec![false; n * n];
    let mut score = vec![0.0; n * n];
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .collect();
    let initial = par::map(&pairs, |&(a, b)| {
        let (sa, sb) = (slots[a].as_ref().unwrap(), slots[b].as_ref().unwrap());
        if disjoint(sa, sb) {
            Some(slot_similarity(&sa.features, &sb.features))
        } else {
            None
        }
    });
    for (&(a, b), s) in pairs.iter().zip(initial) {
        if let Some(s) = s {
            eligible[a * n + b] = true;
            score[a * n + b] = s;
        }
    }

    let mut merges = Vec::new();
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..n {
            if slots[a].is_none() {
                continue;
            }
            for b in a + 1..n {
                if slots[b].is_none() || !eligible[a * n + b] {
                    continue;
                }
                let s = score[a * n + b];
                if best.is_none_or(|(_, _, bs)| s > bs) {
                    best = Some((a, b, s));
                }
            }
        }
        let Some((a, b, s)) = best else { break };
        if s <= lambda_s {
            break;
        }
        let absorbed = slots[b].take().unwrap();
        let kept = slots[a].as_mut().unwrap();
        kept.trees.extend(absorbed.trees);
        kept.trees.sort_unstable();
        kept.lemmas.extend(absorbed.lemmas);
        for (form, w) in absorbed.forms {
            *kept.forms.entry(form).or_insert(0.0) += w;
        }
        kept.productions.extend(absorbed.productions);
        kept.productions.sort();
        kept.features = input.contexts.features(&kept.forms);
        merges.push(MergeEvent {
            kept: a,
            absorbed: b,
            score: s,
        });

        let kept = slots[a].as_ref().unwrap();
        for c in 0..n {
            if c == a || slots[c].is_none() {
                continue;
            }
            let (lo, hi) = (a.min(c), a.max(c));
            let other = slots[c].as_ref().unwrap();
            let ok = disjoint(kept, other);
            eligible[lo * n + hi] = ok;
            score[lo * n + hi] = if ok {
                slot_similarity(&kept.features, &other.features)
            } else {
                0.0
            };
        }
    }
    Ok(Grouping {
        slots: slots.into_iter().flatten().collect(),
        merges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_examples() {
        let v = FeatureVector(vec![1.0, 1.0, 0.0]);
        let w = FeatureVector(vec![1.0, 0.0, 0.0]);
        assert!((slot_similarity(&v, &w) - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!((slot_similarity(&v, &v) - 1.0).abs() < 1e-12);
        let o = FeatureVector(vec![0.0, 0.0, 1.0]);
        assert_eq!(slot_similarity(&w, &o), 0.0);
        assert_eq!(slot_similarity(&w, &FeatureVector::zeros(3)), 0.0);
    }

    #[test]
    fn window_feature_increment() {
        // tags: N=0, V=1; "he stopped working" tagged [N, V, V]
        let corpus = Corpus::parse("he stopped working", true);
        let tags = [0, 1, 1];
        let forms = BTreeMap::from([("stopped".to_owned(), 1.0)]);
        let f = extract_slot_features(&corpus, &tags, 8, 1, &forms);
        assert_eq!(f.dim(), 512);
        let idx = 8 + 1; // [0, 1, 1] in base 8
        assert_eq!(f.0[idx], 1.0);
        assert_eq!(f.0.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn boundary_windows_are_skipped() {
        let corpus = Corpus::parse("stopped here\nthen stopped", true);
        let forms = BTreeMap::from([("stopped".to_owned(), 1.0)]);
        let f = extract_slot_features(&corpus, &[0, 1, 2, 3], 8, 1, &forms);
        assert!(f.is_zero());
    }

    #[test]
    fn absent_forms_give_zero_vector() {
        let corpus = Corpus::parse("a b c", true);
        let forms = BTreeMap::from([("zzz".to_owned(), 1.0)]);
        assert!(extract_slot_features(&corpus, &[0, 0, 0], 8, 1, &forms).is_zero());
    }

    #[test]
    fn shared_form_sums_producer_weights() {
        // "x" is produced by two lemmas of weight 1 and 0.5
        let corpus = Corpus::parse("a x b", true);
        let trees = [
            EditTree::construct("xa", "x"),
            EditTree::construct("xb", "x"),
        ];
        let mut lexicon = WeightedLexicon::from_gold(["xa"]);
        lexicon.add_discovered(["xb"], 1, 0.5);
        let vocab = corpus.vocabulary();
        let contexts = ContextIndex::new(&corpus, &[0, 1, 2], 8, 1);
        // the two trees both map their lemma onto "x"; put them in one slot by hand
        let prods = tree_productions(&trees, &lexicon, &vocab);
        assert_eq!(prods[0], [(0, "x".to_owned())]);
        let mut forms = BTreeMap::new();
        for (l, f) in prods.iter().flatten() {
            *forms.entry(f.clone()).or_insert(0.0) += lexicon.entries()[*l].weight;
        }
        let f = contexts.features(&forms);
        assert_eq!(f.0[8 + 2], 1.5);
    }

    fn grouping_fixture() -> (
        Corpus,
        Vec<usize>,
        Vocabulary,
        WeightedLexicon,
        Vec<EditTree>,
    ) {
        // Two past-tense allomorphs (+ed after consonants, +d after e) share
        // the context "he _ it"; the present "+s" sits in "she _ them".
        let text = "he worked it\nhe continued it\nhe walked it\nhe loved it\n\
                    she works them\nshe continues them\nshe walks them\nshe loves them\n\
                    she loved them";
        let corpus = Corpus::parse(text, true);
        let tags: Vec<usize> = corpus
            .tokens()
            .iter()
            .map(|t| match t.as_str() {
                "he" => 0,
                "she" => 1,
                "it" => 2,
                "them" => 3,
                w if w.ends_with('s') => 5,
                _ => 4,
            })
            .collect();
        let vocab = corpus.vocabulary();
        let lexicon = WeightedLexicon::from_gold(["work", "continue", "walk", "love"]);
        let trees = vec![
            EditTree::construct("work", "worked"),
            EditTree::construct("continue", "continued"),
            EditTree::construct("work", "works"),
        ];
        (corpus, tags, vocab, lexicon, trees)
    }

    #[test]
    fn allomorphs_merge_and_overlapping_lemmas_do_not() {
        let (corpus, tags, vocab, lexicon, trees) = grouping_fixture();
        let contexts = ContextIndex::new(&corpus, &tags, 8, 1);
        let input = GroupingInput {
            trees: &trees,
            lexicon: &lexicon,
            vocab: &vocab,
            contexts: &contexts,
        };
        let g = group_surface_changes(&input, 0.3).unwrap();
        assert_eq!(g.slots.len(), 2);
        assert_eq!(g.slots[0].trees, [0, 1]);
        assert_eq!(g.slots[1].trees, [2]);
        assert_eq!(g.merges.len(), 1);
        assert!((g.merges[0].score - 2.0 / 5f64.sqrt()).abs() < 1e-12);
        assert_eq!(g.merge_log().lines().count(), 1);

        // +ed and +s share lemmas (work, walk), so they can never merge, even at a tiny threshold
        let g = group_surface_changes(&input, 1e-9).unwrap();
        assert_eq!(g.slots.len(), 2);

        // cosine of the two past slots is 4 / (2 * sqrt 5) ~ 0.894
        let g = group_surface_changes(&input, 0.9).unwrap();
        assert_eq!(g.slots.len(), 3);
        assert!(g.merges.is_empty());
    }

    #[test]
    fn rejects_bad_threshold() {
        let (corpus, tags, vocab, lexicon, trees) = grouping_fixture();
        let contexts = ContextIndex::new(&corpus, &tags, 8, 1);
        let input = GroupingInput {
            trees: &trees,
            lexicon: &lexicon,
            vocab: &vocab,
            contexts: &contexts,
        };
        assert!(group_surface_changes(&input, 0.0).is_err());
        assert!(group_surface_changes(&input, 1.0).is_err());
    }
}
