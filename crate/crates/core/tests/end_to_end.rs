use std::collections::{BTreeMap, HashMap};

use paradigm::config::{Config, Mode};
use paradigm::corpus_io::format_predictions;
use paradigm::pipeline::{run, Inputs};
use paradigm::synthetic::{generate_synthetic_language, SynthSpec, SyntheticLanguage};
use paradigm::tagger::{train_hmm, TaggerConfig};

fn language(seed: u64, classes: usize) -> SyntheticLanguage {
    generate_synthetic_language(&SynthSpec {
        slots: 4,
        lemmas: 30,
        classes,
        tokens: 20_000,
        seed,
    })
    .unwrap()
}

fn inputs(lang: &SyntheticLanguage) -> Inputs {
    Inputs::new(lang.corpus(), lang.lexicon.clone(), Some(lang.gold.clone()))
}

fn mode(mode: Mode) -> Config {
    Config {
        mode,
        ..Config::default()
    }
}

#[test]
fn forms_of_a_slot_share_a_tag() {
    let lang = language(7, 2);
    let corpus = lang.corpus();
    let model = train_hmm(&corpus, &TaggerConfig::default()).unwrap().model;
    let tags = model.tag(&corpus);

    let slot_of: HashMap<&str, &str> = lang
        .gold
        .entries()
        .values()
        .flat_map(|row| {
            row.iter()
                .map(|(slot, form)| (form.as_str(), slot.as_str()))
        })
        .collect();
    let mut counts: BTreeMap<&str, HashMap<usize, usize>> = BTreeMap::new();
    for (token, tag) in corpus.tokens().iter().zip(&tags) {
        if let Some(slot) = slot_of.get(token.as_str()) {
            *counts.entry(slot).or_default().entry(*tag).or_default() += 1;
        }
    }
    for (slot, by_tag) in counts {
        let total: usize = by_tag.values().sum();
        let top = *by_tag.values().max().unwrap();
        let share = top as f64 / total as f64;
        assert!(share >= 0.8, "{slot}: majority tag covers {share}");
    }
}

#[test]
fn recovers_the_paradigm_size() {
    for (seed, classes) in [(7, 2), (1, 3), (4, 2)] {
        let out = run(&inputs(&language(seed, classes)), &mode(Mode::PcsIIandIII)).unwrap();
        let score = out.report.score.unwrap();
        assert_eq!(out.report.slots, 4, "seed {seed}");
        assert!(score.micro_acc >= 0.9, "seed {seed}: {score}");
        assert_eq!(out.report.merge_log.lines().count(), 4 * (classes - 1));
    }
}

#[test]
fn pcs_i_keeps_one_slot_per_allomorph() {
    let out = run(&inputs(&language(7, 2)), &mode(Mode::PcsI)).unwrap();
    assert_eq!(out.report.trees, 8);
    assert_eq!(out.report.slots, 8);
    let score = out.report.score.unwrap();
    // each allomorph slot is right for half the lemmas and the rest is penalized
    assert_eq!(score.m, 8);
    assert!(score.micro_acc < 0.6, "{score}");
}

#[test]
fn mode_lattice_on_synthetic_data() {
    let inputs = inputs(&language(7, 2));
    let pcs_i = run(&inputs, &mode(Mode::PcsI)).unwrap().predictions;
    let pcs_iii = run(&inputs, &mode(Mode::PcsIII)).unwrap().predictions;
    for (m, base) in [
        (Mode::PcsIIa, &pcs_i),
        (Mode::PcsIIb, &pcs_i),
        (Mode::PcsIIandIII, &pcs_iii),
    ] {
        let config = Config {
            bootstrap_iterations: Some(0),
            ..mode(m)
        };
        assert_eq!(&run(&inputs, &config).unwrap().predictions, base, "{m}");
    }
}

#[test]
fn slot_count_is_monotone_in_lambda_s() {
    let inputs = inputs(&language(3, 3));
    let mut previous = 0;
    for lambda_s in [0.05, 0.3, 0.6, 0.9, 0.99, 0.999_999] {
        let config = Config {
            lambda_s,
            ..mode(Mode::PcsIII)
        };
        let out = run(&inputs, &config).unwrap();
        assert!(out.report.slots >= previous, "lambda_s {lambda_s}");
        previous = out.report.slots;
        for line in out.report.merge_log.lines() {
            let score: f64 = line.rsplit('\t').next().unwrap().parse().unwrap();
            assert!(score > lambda_s);
        }
    }
}

#[test]
fn predictions_cover_the_gold_lexicon_only() {
    let lang = language(7, 2);
    let out = run(&inputs(&lang), &mode(Mode::PcsIIandIII)).unwrap();
    let keys: Vec<&String> = out.predictions.keys().collect();
    let mut lexicon: Vec<&String> = lang.lexicon.iter().collect();
    lexicon.sort();
    assert_eq!(keys, lexicon);
}

#[test]
fn repeated_runs_are_identical() {
    let inputs = inputs(&language(9, 2));
    let first = format_predictions(&run(&inputs, &mode(Mode::PcsIIandIII)).unwrap().predictions);
    for workers in [1, 2, 8] {
        let config = Config {
            workers: Some(workers),
            ..mode(Mode::PcsIIandIII)
        };
        let again = format_predictions(&run(&inputs, &config).unwrap().predictions);
        assert_eq!(first, again, "workers {workers}");
    }
}

#[test]
fn baselines_on_synthetic_data() {
    let inputs = inputs(&language(7, 2));
    let lb = run(&inputs, &mode(Mode::Lb)).unwrap().report.score.unwrap();
    assert_eq!((lb.m, lb.micro_acc), (1, 0.0));

    // one paradigm teaches one class only
    let one = run(&inputs, &mode(Mode::Conll17K))
        .unwrap()
        .report
        .score
        .unwrap();
    let all = Config {
        conll17_k: 30,
        ..mode(Mode::Conll17K)
    };
    let all = run(&inputs, &all).unwrap().report.score.unwrap();
    assert!(one.micro_acc < all.micro_acc);
    assert_eq!(all.micro_acc, 1.0);
}
