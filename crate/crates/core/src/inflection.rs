//! Affix-editing inflection: a reimplementation of the classic shared-task
//! baseline that learns prefix and stem+suffix rewrite rules per slot.
//!
//! A (lemma, form) pair is aligned on its longest common substring. The
//! material before it yields one prefix rule. The stem and the material
//! after it yield one suffix rule per split point inside the stem, from the
//! stem's right edge leftwards, so `work -> worked` gives `"" -> "ed"`,
//! `"k" -> "ked"`, ..., `"work" -> "worked"`. Generation applies the longest
//! matching suffix rule, then the longest matching prefix rule.

use std::collections::BTreeMap;
use std::fmt::{self, Display, Write as _};

use crate::edit_tree::lcs_chars;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingTriple<S> {
    pub slot: S,
    pub lemma: String,
    pub form: String,
    pub weight: f64,
}

/// Rewrite rules of one slot: (old, new) -> support.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AffixRules {
    pub prefix: BTreeMap<(String, String), f64>,
    pub suffix: BTreeMap<(String, String), f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Prefix,
    Suffix,
}

impl AffixRules {
    fn best<'a>(
        rules: &'a BTreeMap<(String, String), f64>,
        word: &str,
        side: Side,
    ) -> Option<(&'a str, &'a str)> {
        let mut best: Option<(&str, &str, usize, f64)> = None;
        for ((old, new), &support) in rules {
            let fits = match side {
                Side::Prefix => word.starts_with(old.as_str()),
                Side::Suffix => word.ends_with(old.as_str()),
            };
            if !fits {
                continue;
            }
            let len = old.chars().count();
            let better = match best {
                None => true,
                Some((_, bnew, blen, bsup)) => len
                    .cmp(&blen)
                    .then(support.total_cmp(&bsup))
                    .then_with(|| bnew.cmp(new.as_str()))
                    .is_gt(),
            };
            if better {
                best = Some((old, new, len, support));
            }
        }
        best.map(|(o, n, _, _)| (o, n))
    }

    /// Apply the best suffix rule, then the best prefix rule; copies the
    /// input through any step where no rule matches.
    pub fn inflect(&self, lemma: &str) -> String {
        let mut word = lemma.to_owned();
        if let Some((old, new)) = Self::best(&self.suffix, &word, Side::Suffix) {
            word.truncate(word.len() - old.len());
            word.push_str(new);
        }
        if let Some((old, new)) = Self::best(&self.prefix, &word, Side::Prefix) {
            word = format!("{new}{}", &word[old.len()..]);
        }
        word
    }
}

/// Rules for every slot.
#[derive(Clone, Debug, PartialEq)]
pub struct RuleTable<S: Ord> {
    slots: BTreeMap<S, AffixRules>,
}

impl<S: Ord> Default for RuleTable<S> {
    fn default() -> Self {
        RuleTable {
            slots: BTreeMap::new(),
        }
    }
}

impl<S: Ord + Clone> RuleTable<S> {
    pub fn slots(&self) -> impl Iterator<Item = (&S, &AffixRules)> + '_ {
        self.slots.iter()
    }

    pub fn get(&self, slot: &S) -> Option<&AffixRules> {
        self.slots.get(slot)
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }
}

impl<S: Ord + Clone + Display> RuleTable<S> {
    pub fn inflect(&self, slot: &S, lemma: &str) -> Result<String> {
        self.slots
            .get(slot)
            .map(|rules| rules.inflect(lemma))
            .ok_or_else(|| Error::UnknownSlot(slot.to_string()))
    }

    /// TSV: slot, kind, old, new, support.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (slot, rules) in &self.slots {
            for (kind, table) in [("prefix", &rules.prefix), ("suffix", &rules.suffix)] {
                for ((old, new), support) in table {
                    let _ = writeln!(out, "{slot}\t{kind}\t{old}\t{new}\t{support}");
                }
            }
        }
        out
    }
}

/// Learn rules from (slot, lemma, form, weight) triples. With `weighted`
/// off every triple counts 1 towards its rules' support.
pub fn extract_affix_rules<S, I>(training: I, weighted: bool) -> RuleTable<S>
where
    S: Ord + Clone + fmt::Debug,
    I: IntoIterator<Item = TrainingTriple<S>>,
{
    let mut table = RuleTable::default();
    for t in training {
        let rules = table.slots.entry(t.slot.clone()).or_default();
        let lemma: Vec<char> = t.lemma.chars().collect();
        let form: Vec<char> = t.form.chars().collect();
        let lcs = lcs_chars(&lemma, &form);
        if lcs.len == 0 {
            log::warn!(
                "slot {:?}: `{}` and `{}` share no substring; pair skipped",
                t.slot,
                t.lemma,
                t.form
            );
            continue;
        }
        let support = if weighted { t.weight } else { 1.0 };
        let text = |c: &[char]| -> String { c.iter().collect() };
        *rules
            .prefix
            .entry((text(&lemma[..lcs.start_x]), text(&form[..lcs.start_y])))
            .or_insert(0.0) += support;

        let lemma_tail = &lemma[lcs.start_x + lcs.len..];
        let form_tail = &form[lcs.start_y + lcs.len..];
        let stem = &lemma[lcs.start_x..lcs.start_x + lcs.len];
        for k in 0..=stem.len() {
            let kept = &stem[stem.len() - k..];
            let old = text(kept) + &text(lemma_tail);
            let new = text(kept) + &text(form_tail);
            *rules.suffix.entry((old, new)).or_insert(0.0) += support;
        }
    }
    table
}
