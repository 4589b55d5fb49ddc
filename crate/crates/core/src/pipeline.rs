//! End-to-end runs of the paradigm completion systems.
//!
//! pcs-i      frequent edit trees, each one a slot
//! pcs-ii-a/b pcs-i on a lexicon grown by one or two bootstrap rounds
//! pcs-iii    trees grouped into slots by tag context; affix rules trained on
//!            each slot's attested pairs generate every cell
//! pcs-ii+iii pcs-iii on the bootstrapped lexicon
//! lb         lemma copied into `lb_slots` slots
//! conll17-k  affix rules trained on `conll17_k` gold paradigms

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bootstrap::{bootstrap_iterate, BootstrapState, WeightedLexicon};
use crate::config::{Config, Mode};
use crate::corpus_io::{
    load_corpus, load_gold, load_lexicon, write_predictions, Corpus, GoldTable, Paradigms,
    Vocabulary,
};
use crate::error::{Error, Result};
use crate::evaluation::{bmacc, lemma_baseline, Score};
use crate::inflection::{extract_affix_rules, RuleTable, TrainingTriple};
use crate::par;
use crate::slot_clustering::{group_surface_changes, ContextIndex, Grouping, GroupingInput};
use crate::tagger::{train_hmm, HmmModel, TagSequence};

/// Everything a run reads.
#[derive(Clone, Debug)]
pub struct Inputs {
    pub corpus: Corpus,
    pub vocab: Vocabulary,
    pub lexicon: Vec<String>,
    pub gold: Option<GoldTable>,
}

impl Inputs {
    pub fn new(corpus: Corpus, lexicon: Vec<String>, gold: Option<GoldTable>) -> Self {
        let vocab = corpus.vocabulary();
        Inputs {
            corpus,
            vocab,
            lexicon,
            gold,
        }
    }

    pub fn load(
        corpus: impl AsRef<Path>,
        lexicon: impl AsRef<Path>,
        gold: Option<&Path>,
        lowercase: bool,
    ) -> Result<Self> {
        let (corpus, vocab) = load_corpus(corpus, lowercase)?;
        let lexicon = load_lexicon(lexicon, lowercase)?;
        let gold = gold.map(|g| load_gold(g, lowercase)).transpose()?;
        Ok(Inputs {
            corpus,
            vocab,
            lexicon,
            gold,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageTime {
    pub stage: &'static str,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub mode: Mode,
    pub tokens: usize,
    pub types: usize,
    pub lemmas: usize,
    /// Lemmas added by bootstrapping.
    pub discovered: usize,
    /// Frequent edit trees.
    pub trees: usize,
    /// Predicted paradigm size (slots before syncretic merging).
    pub slots: usize,
    pub timings: Vec<StageTime>,
    pub merge_log: String,
    pub score: Option<Score>,
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "mode: {}", self.mode)?;
        writeln!(f, "corpus: {} tokens, {} types", self.tokens, self.types)?;
        writeln!(
            f,
            "lexicon: {} lemmas (+{} discovered)",
            self.lemmas, self.discovered
        )?;
        writeln!(f, "edit trees: {}", self.trees)?;
        writeln!(f, "predicted paradigm size M: {}", self.slots)?;
        for t in &self.timings {
            writeln!(f, "time {:<10} {:.3}s", t.stage, t.seconds)?;
        }
        if !self.merge_log.is_empty() {
            writeln!(f, "merge log:")?;
            f.write_str(&self.merge_log)?;
        }
        if let Some(score) = &self.score {
            write!(f, "{score}")?;
        }
        Ok(())
    }
}

/// A run's predictions plus the intermediate results worth dumping.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub predictions: Paradigms,
    pub report: RunReport,
    pub bootstrap: Option<BootstrapState>,
    pub model: Option<HmmModel>,
    pub tags: Option<TagSequence>,
    pub grouping: Option<Grouping>,
    pub rules: Option<RuleTable<usize>>,
}

#[cfg(not(target_arch = "wasm32"))]
mod clock {
    pub struct Clock(std::time::Instant);

    impl Clock {
        pub fn start() -> Self {
            Clock(std::time::Instant::now())
        }

        pub fn seconds(&self) -> f64 {
            self.0.elapsed().as_secs_f64()
        }
    }
}

#[cfg(target_arch = "wasm32")]
mod clock {
    /// No monotonic clock on bare wasm; timings read zero.
    pub struct Clock;

    impl Clock {
        pub fn start() -> Self {
            Clock
        }

        pub fn seconds(&self) -> f64 {
            0.0
        }
    }
}

struct Timer(Vec<StageTime>);

impl Timer {
    fn stage<T>(&mut self, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        log::info!("stage {stage}");
        let clock = clock::Clock::start();
        let out = f().map_err(|e| e.in_stage(stage))?;
        self.0.push(StageTime {
            stage,
            seconds: clock.seconds(),
        });
        Ok(out)
    }
}

/// Run the configured mode on loaded inputs.
pub fn run(inputs: &Inputs, config: &Config) -> Result<RunOutput> {
    config.validate()?;
    par::with_workers(config.workers, || run_inner(inputs, config))
}

fn run_inner(inputs: &Inputs, config: &Config) -> Result<RunOutput> {
    let mut timer = Timer(Vec::new());
    let mut out = RunOutput {
        predictions: Paradigms::new(),
        report: RunReport {
            mode: config.mode,
            tokens: inputs.corpus.len(),
            types: inputs.vocab.len(),
            lemmas: inputs.lexicon.len(),
            discovered: 0,
            trees: 0,
            slots: 0,
            timings: Vec::new(),
            merge_log: String::new(),
            score: None,
        },
        bootstrap: None,
        model: None,
        tags: None,
        grouping: None,
        rules: None,
    };

    match config.mode {
        Mode::Eval => {
            return Err(Error::Config(
                "mode eval scores an existing prediction file; use the eval command".into(),
            ))
        }
        Mode::Lb => {
            out.predictions = lemma_baseline(&inputs.lexicon, config.lb_slots);
            out.report.slots = config.lb_slots;
        }
        Mode::Conll17K => {
            let gold = inputs
                .gold
                .as_ref()
                .ok_or_else(|| Error::Config("mode conll17-k needs a gold table".into()))?;
            let rules = timer.stage("rules", || Ok(conll17_rules(gold, config)))?;
            let ids: Vec<usize> = (1..=gold.slot_labels().len()).collect();
            out.predictions = timer.stage("generate", || {
                generate(&inputs.lexicon, &ids, &rules, inputs, config)
            })?;
            out.report.slots = ids.len();
            out.rules = Some(rules);
        }
        mode => {
            let state = timer.stage("discover", || {
                bootstrap_iterate(
                    &inputs.vocab,
                    WeightedLexicon::from_gold(&inputs.lexicon),
                    &config.bootstrap_params(),
                    config.iterations(),
                )
            })?;
            out.report.discovered = state.lexicon.len() - inputs.lexicon.len();
            out.report.trees = state.trees().len();
            if mode.clusters() {
                run_clustering(inputs, config, &state, &mut timer, &mut out)?;
            } else {
                out.predictions = timer.stage("generate", || {
                    Ok(apply_trees(&inputs.lexicon, &state, inputs, config))
                })?;
                out.report.slots = state.trees().len();
            }
            out.bootstrap = Some(state);
        }
    }

    if let Some(gold) = &inputs.gold {
        out.report.score = Some(timer.stage("evaluate", || bmacc(gold, &out.predictions))?);
    }
    out.report.timings = timer.0;
    Ok(out)
}

/// One slot per tree; a cell is filled wherever the tree applies.
fn apply_trees(
    lexicon: &[String],
    state: &BootstrapState,
    inputs: &Inputs,
    config: &Config,
) -> Paradigms {
    let rows = par::map(lexicon, |lemma| {
        let row: BTreeMap<usize, String> = state
            .trees()
            .iter()
            .enumerate()
            .filter_map(|(i, tree)| tree.apply(lemma).map(|form| (i + 1, form)))
            .filter(|(_, form)| !config.attested_only || inputs.vocab.contains(form))
            .collect();
        (lemma.clone(), row)
    });
    rows.into_iter().collect()
}

fn run_clustering(
    inputs: &Inputs,
    config: &Config,
    state: &BootstrapState,
    timer: &mut Timer,
    out: &mut RunOutput,
) -> Result<()> {
    let training = timer.stage("tag", || train_hmm(&inputs.corpus, &config.tagger()))?;
    let tags = training.model.tag(&inputs.corpus);
    let contexts = timer.stage("contexts", || {
        Ok(ContextIndex::new(
            &inputs.corpus,
            &tags,
            config.tagger_states,
            config.half_window(),
        ))
    })?;
    let grouping = timer.stage("cluster", || {
        group_surface_changes(
            &GroupingInput {
                trees: state.trees(),
                lexicon: &state.lexicon,
                vocab: &inputs.vocab,
                contexts: &contexts,
            },
            config.lambda_s,
        )
    })?;

    let entries = state.lexicon.entries();
    let rules = timer.stage("rules", || {
        let triples = grouping.slots.iter().enumerate().flat_map(|(i, slot)| {
            slot.productions
                .iter()
                .map(move |(lemma, _, form)| TrainingTriple {
                    slot: i + 1,
                    lemma: entries[*lemma].lemma.clone(),
                    form: form.clone(),
                    weight: entries[*lemma].weight,
                })
        });
        Ok(extract_affix_rules(triples, config.weighted_rules))
    })?;
    let slot_ids: Vec<usize> = (1..=grouping.slots.len()).collect();
    out.predictions = timer.stage("generate", || {
        generate(&inputs.lexicon, &slot_ids, &rules, inputs, config)
    })?;

    out.report.slots = grouping.slots.len();
    out.report.merge_log = grouping.merge_log();
    out.model = Some(training.model);
    out.tags = Some(tags);
    out.grouping = Some(grouping);
    out.rules = Some(rules);
    Ok(())
}

/// Inflect every lemma for every slot. Slots without rules are skipped.
fn generate(
    lexicon: &[String],
    slots: &[usize],
    rules: &RuleTable<usize>,
    inputs: &Inputs,
    config: &Config,
) -> Result<Paradigms> {
    let rows = par::map(lexicon, |lemma| {
        let row: BTreeMap<usize, String> = slots
            .iter()
            .filter_map(|&id| rules.get(&id).map(|r| (id, r.inflect(lemma))))
            .filter(|(_, form)| !config.attested_only || inputs.vocab.contains(form))
            .collect();
        (lemma.clone(), row)
    });
    Ok(rows.into_iter().collect())
}

/// Rules learned from `conll17_k` gold paradigms drawn with the run seed.
/// Gold slot labels are numbered from 1 in sorted order.
fn conll17_rules(gold: &GoldTable, config: &Config) -> RuleTable<usize> {
    let ids: BTreeMap<String, usize> = gold
        .slot_labels()
        .into_iter()
        .enumerate()
        .map(|(i, l)| (l, i + 1))
        .collect();
    let ids = &ids;
    let lemmas: Vec<&str> = gold.lemmas().collect();
    let k = config.conll17_k.min(lemmas.len());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut picked = sample(&mut rng, lemmas.len(), k).into_vec();
    picked.sort_unstable();
    let triples = picked.into_iter().flat_map(|i| {
        let lemma = lemmas[i];
        gold.entries()[lemma]
            .iter()
            .map(move |(slot, form)| TrainingTriple {
                slot: ids[slot],
                lemma: lemma.to_owned(),
                form: form.clone(),
                weight: 1.0,
            })
    });
    extract_affix_rules(triples, false)
}

/// Load inputs, run, and write predictions to `out_path`.
pub fn run_pipeline(
    config: &Config,
    corpus_path: impl AsRef<Path>,
    lexicon_path: impl AsRef<Path>,
    gold_path: Option<&Path>,
    out_path: impl AsRef<Path>,
) -> Result<RunOutput> {
    let inputs = Inputs::load(corpus_path, lexicon_path, gold_path, config.lowercase)
        .map_err(|e| e.in_stage("load"))?;
    let out = run(&inputs, config)?;
    write_predictions(&out.predictions, out_path).map_err(|e| e.in_stage("write"))?;
    Ok(out)
}

/// Diagnostic files a run can leave next to its predictions.
pub fn diagnostics(out: &RunOutput, corpus: &Corpus) -> Vec<(&'static str, String)> {
    let mut files = vec![("report.txt", out.report.to_string())];
    if let Some(score) = &out.report.score {
        files.push(("score.txt", score.to_kv()));
    }
    if let Some(state) = &out.bootstrap {
        files.push(("trees.tsv", state.frequent.census.to_tsv()));
        files.push(("discovered.tsv", state.discovered_tsv()));
    }
    if let Some(tags) = &out.tags {
        files.push(("tagged.tsv", crate::tagger::tagged_corpus_tsv(corpus, tags)));
    }
    if let Some(model) = &out.model {
        files.push(("hmm.txt", model.to_text()));
    }
    if let Some(grouping) = &out.grouping {
        files.push(("merges.tsv", grouping.merge_log()));
        let mut slots = String::new();
        for (i, slot) in grouping.slots.iter().enumerate() {
            let trees: Vec<String> = slot
                .trees
                .iter()
                .map(|&t| {
                    out.bootstrap
                        .as_ref()
                        .map_or(t.to_string(), |b| b.trees()[t].to_string())
                })
                .collect();
            let _ = writeln!(slots, "{}\t{}", i + 1, trees.join("\t"));
        }
        files.push(("slots.tsv", slots));
    }
    if let Some(rules) = &out.rules {
        files.push(("rules.tsv", rules.to_tsv()));
    }
    files
}
