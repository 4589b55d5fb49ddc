//! A toy agglutinative language with known paradigms.
//!
//! Lemmas are three random CV syllables plus a class marker: class 0 ends in
//! `r` and takes the slot suffix `a`+C as is, class 1 ends in `e` and drops
//! the suffix vowel (`tale` -> `talek`, like English `continue` -> `continued`),
//! and classes 2.. end in `i`, `u`, `o`, `y` and replace that vowel with the
//! suffix. Every sentence is one form wrapped in its slot's particle
//! (`ka talek ka`), so the tag contexts of a slot's forms agree across
//! classes. Bare lemmas never occur.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus_io::{Corpus, GoldTable};
use crate::error::{Error, Result};

const STEM_CONSONANTS: &[char] = &[
    'b', 'd', 'f', 'g', 'h', 'j', 'k', 'l', 'm', 'n', 'p', 's', 't', 'v', 'w', 'z',
];
const VOWELS: &[char] = &['a', 'e', 'i', 'o', 'u'];
const SUFFIX_CONSONANTS: &[char] = &['k', 'm', 's', 'n', 't', 'l', 'r', 'p', 'v', 'z', 'g', 'd'];
const CLASS_ENDINGS: &[&str] = &["r", "e", "i", "u", "o", "y"];
const FUNCTION_CONSONANTS: &[char] = &[
    'l', 'm', 'n', 't', 'k', 's', 'v', 'r', 'p', 'd', 'g', 'b', 'z',
];
const STEM_SYLLABLES: usize = 3;
const SENTENCE_LEN: usize = 3;

pub const MAX_SLOTS: usize = SUFFIX_CONSONANTS.len();
pub const MAX_CLASSES: usize = CLASS_ENDINGS.len();

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SynthSpec {
    pub slots: usize,
    pub lemmas: usize,
    pub classes: usize,
    /// Upper bound on the corpus length in tokens.
    pub tokens: usize,
    pub seed: u64,
}

impl SynthSpec {
    /// Fewest tokens that fit one occurrence of every form.
    pub fn min_tokens(&self) -> usize {
        self.slots * self.lemmas * SENTENCE_LEN
    }

    fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Synthetic(m));
        if !(2..=MAX_SLOTS).contains(&self.slots) {
            return fail(format!(
                "slot count must lie in 2..={MAX_SLOTS}, got {}",
                self.slots
            ));
        }
        if !(2..=MAX_CLASSES).contains(&self.classes) {
            return fail(format!(
                "class count must lie in 2..={MAX_CLASSES}, got {}",
                self.classes
            ));
        }
        if self.lemmas < self.classes {
            return fail(format!(
                "need at least one lemma per class ({} lemmas, {} classes)",
                self.lemmas, self.classes
            ));
        }
        let capacity = STEM_CONSONANTS.len().pow(STEM_SYLLABLES as u32)
            * VOWELS.len().pow(STEM_SYLLABLES as u32);
        if self.lemmas > capacity / 4 {
            return fail(format!("at most {} lemmas are supported", capacity / 4));
        }
        if self.min_tokens() > self.tokens {
            return fail(format!(
                "{} slots x {} lemmas need at least {} tokens, got {}",
                self.slots,
                self.lemmas,
                self.min_tokens(),
                self.tokens
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticLanguage {
    pub sentences: Vec<Vec<String>>,
    pub lexicon: Vec<String>,
    /// Class of each lexicon entry.
    pub classes: Vec<usize>,
    pub gold: GoldTable,
}

/// Label of slot `s` in the gold table.
pub fn slot_label(s: usize) -> String {
    format!("SLOT{}", s + 1)
}

/// The particle before and after every form of slot `s`.
pub fn slot_particle(s: usize) -> String {
    let c = FUNCTION_CONSONANTS[s / VOWELS.len()];
    let v = VOWELS[s % VOWELS.len()];
    format!("{c}{v}")
}

/// Form of `lemma` (of class `class`) in slot `s`.
pub fn inflect(lemma: &str, class: usize, s: usize) -> String {
    let c = SUFFIX_CONSONANTS[s];
    match class {
        0 => format!("{lemma}a{c}"),
        1 => format!("{lemma}{c}"),
        _ => {
            let mut stem = lemma.to_owned();
            stem.pop();
            format!("{stem}a{c}")
        }
    }
}

impl SyntheticLanguage {
    pub fn corpus_text(&self) -> String {
        let mut out = String::new();
        for s in &self.sentences {
            out.push_str(&s.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn lexicon_text(&self) -> String {
        let mut out = String::new();
        for l in &self.lexicon {
            out.push_str(l);
            out.push('\n');
        }
        out
    }

    pub fn corpus(&self) -> Corpus {
        Corpus::from_sentences(self.sentences.iter())
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }

    /// Write `corpus.txt`, `lexicon.txt` and `gold.tsv` into `dir`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<[PathBuf; 3]> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = [
            (dir.join("corpus.txt"), self.corpus_text()),
            (dir.join("lexicon.txt"), self.lexicon_text()),
            (dir.join("gold.tsv"), self.gold.to_tsv()),
        ];
        for (path, text) in &files {
            std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
        }
        let [(a, _), (b, _), (c, _)] = files;
        Ok([a, b, c])
    }
}

fn random_stem(rng: &mut ChaCha8Rng) -> String {
    (0..STEM_SYLLABLES)
        .flat_map(|_| {
            [
                *STEM_CONSONANTS.choose(rng).unwrap(),
                *VOWELS.choose(rng).unwrap(),
            ]
        })
        .collect()
}

pub fn generate_synthetic_language(spec: &SynthSpec) -> Result<SyntheticLanguage> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut stems: Vec<String> = Vec::with_capacity(spec.lemmas);
    while stems.len() < spec.lemmas {
        let stem = random_stem(&mut rng);
        if !stems.contains(&stem) {
            stems.push(stem);
        }
    }
    let classes: Vec<usize> = (0..spec.lemmas).map(|i| i % spec.classes).collect();
    let lexicon: Vec<String> = stems
        .iter()
        .zip(&classes)
        .map(|(stem, &c)| format!("{stem}{}", CLASS_ENDINGS[c]))
        .collect();

    let mut gold = GoldTable::new();
    let mut forms: Vec<(usize, String)> = Vec::new();
    for (lemma, &class) in lexicon.iter().zip(&classes) {
        for s in 0..spec.slots {
            let form = inflect(lemma, class, s);
            gold.insert(lemma, &slot_label(s), &form);
            forms.push((s, form));
        }
    }

    // every form once, then uniform fill
    let mut picks: Vec<usize> = (0..forms.len()).collect();
    let budget = spec.tokens / SENTENCE_LEN;
    while picks.len() < budget {
        picks.push(rng.gen_range(0..forms.len()));
    }
    picks.shuffle(&mut rng);

    let particles: Vec<String> = (0..spec.slots).map(slot_particle).collect();
    let sentences = picks
        .into_iter()
        .map(|p| {
            let (s, form) = &forms[p];
            vec![particles[*s].clone(), form.clone(), particles[*s].clone()]
        })
        .collect();

    Ok(SyntheticLanguage {
        sentences,
        lexicon,
        classes,
        gold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edit_tree::EditTree;
    use std::collections::BTreeSet;

    const SPEC: SynthSpec = SynthSpec {
        slots: 4,
        lemmas: 30,
        classes: 2,
        tokens: 20_000,
        seed: 7,
    };

    #[test]
    fn shape() {
        let lang = generate_synthetic_language(&SPEC).unwrap();
        assert_eq!(lang.gold.slot_labels().len(), 4);
        assert_eq!(lang.lexicon.len(), 30);
        assert_eq!(lang.gold.entries().len(), 30);
        assert!(lang.token_count() <= 20_000);
        assert!(lang.token_count() > 19_000);
    }

    #[test]
    fn deterministic() {
        let a = generate_synthetic_language(&SPEC).unwrap();
        let b = generate_synthetic_language(&SPEC).unwrap();
        assert_eq!(a.corpus_text(), b.corpus_text());
        assert_eq!(a.gold.to_tsv(), b.gold.to_tsv());
        let c = generate_synthetic_language(&SynthSpec { seed: 8, ..SPEC }).unwrap();
        assert_ne!(a.corpus_text(), c.corpus_text());
    }

    #[test]
    fn every_form_occurs_and_no_lemma_does() {
        for spec in [
            SPEC,
            SynthSpec {
                tokens: SPEC.min_tokens(),
                classes: 3,
                ..SPEC
            },
        ] {
            let lang = generate_synthetic_language(&spec).unwrap();
            let vocab = lang.corpus().vocabulary();
            for row in lang.gold.entries().values() {
                for form in row.values() {
                    assert!(vocab.count(form) >= 1, "{form} missing");
                }
            }
            assert!(lang.lexicon.iter().all(|l| !vocab.contains(l)));
        }
    }

    #[test]
    fn classes_give_distinct_trees_per_slot() {
        let lang = generate_synthetic_language(&SynthSpec { classes: 4, ..SPEC }).unwrap();
        let mut trees = BTreeSet::new();
        for (lemma, row) in lang.gold.entries() {
            for form in row.values() {
                trees.insert(EditTree::construct(lemma, form));
            }
        }
        assert_eq!(trees.len(), 4 * 4);
    }

    #[test]
    fn slot_contexts() {
        let lang = generate_synthetic_language(&SPEC).unwrap();
        for sentence in &lang.sentences {
            let s = lang
                .gold
                .entries()
                .values()
                .flat_map(|r| r.iter())
                .find(|(_, f)| **f == sentence[1])
                .map(|(label, _)| label[4..].parse::<usize>().unwrap() - 1)
                .unwrap();
            assert_eq!(sentence[0], slot_particle(s));
            assert_eq!(sentence[2], slot_particle(s));
        }
        let particles: BTreeSet<String> = (0..MAX_SLOTS).map(slot_particle).collect();
        assert_eq!(particles.len(), MAX_SLOTS);
    }

    #[test]
    fn allomorphs() {
        assert_eq!(inflect("talar", 0, 0), "talarak");
        assert_eq!(inflect("tale", 1, 0), "talek");
        assert_eq!(inflect("tali", 2, 1), "talam");
    }

    #[test]
    fn rejects_inconsistent_requests() {
        for bad in [
            SynthSpec { slots: 1, ..SPEC },
            SynthSpec { classes: 1, ..SPEC },
            SynthSpec {
                tokens: SPEC.min_tokens() - 1,
                ..SPEC
            },
            SynthSpec { lemmas: 1, ..SPEC },
            SynthSpec {
                slots: MAX_SLOTS + 1,
                ..SPEC
            },
        ] {
            assert!(matches!(
                generate_synthetic_language(&bad),
                Err(Error::Synthetic(_))
            ));
        }
    }

    #[test]
    fn writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let lang = generate_synthetic_language(&SPEC).unwrap();
        let [corpus, lexicon, gold] = lang.write_to(dir.path()).unwrap();
        let (c, _) = crate::corpus_io::load_corpus(&corpus, true).unwrap();
        assert_eq!(c.len(), lang.token_count());
        assert_eq!(
            crate::corpus_io::load_lexicon(&lexicon, true).unwrap(),
            lang.lexicon
        );
        assert_eq!(crate::corpus_io::load_gold(&gold, true).unwrap(), lang.gold);
    }
}
