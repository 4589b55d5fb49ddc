//! Browser bindings for three operations: edit-tree construction and
//! application, affix-rule learning, and a full clustering run on a
//! synthetic language. Every function returns a JSON string; failures are
//! reported as `{"error": "..."}`.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use paradigm::config::{Config, Mode};
use paradigm::edit_tree::{longest_common_substring, EditTree};
use paradigm::inflection::{extract_affix_rules, TrainingTriple};
use paradigm::pipeline::{run, Inputs};
use paradigm::synthetic::{generate_synthetic_language, SynthSpec};

fn respond(result: Result<Value, String>) -> String {
    match result {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

/// Build the edit tree mapping `source` to `target` and apply it to `probe`.
pub fn edit_tree_value(source: &str, target: &str, probe: &str) -> Value {
    let tree = EditTree::construct(source, target);
    let lcs = longest_common_substring(source, target);
    let stem: String = source.chars().skip(lcs.start_x).take(lcs.len).collect();
    json!({
        "tree": tree.to_string(),
        "size": tree.size(),
        "stem": stem,
        "probe": probe,
        "applied": tree.apply(probe),
    })
}

#[wasm_bindgen]
pub fn edit_tree(source: &str, target: &str, probe: &str) -> String {
    edit_tree_value(source, target, probe).to_string()
}

/// Learn affix rules from `lemma form [slot]` lines and inflect `queries`
/// (whitespace separated) for every slot.
pub fn learn_rules_value(pairs: &str, queries: &str) -> Result<Value, String> {
    let mut triples = Vec::new();
    for (n, line) in pairs.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields[..] {
            [] => continue,
            [lemma, form] | [lemma, form, _] => triples.push(TrainingTriple {
                slot: fields.get(2).unwrap_or(&"1").to_string(),
                lemma: lemma.to_owned(),
                form: form.to_owned(),
                weight: 1.0,
            }),
            _ => return Err(format!("line {}: expected `lemma form [slot]`", n + 1)),
        }
    }
    if triples.is_empty() {
        return Err("no training pairs".into());
    }
    let table = extract_affix_rules(triples, true);
    let mut slots = Vec::new();
    for (slot, rules) in table.slots() {
        let list = |kind: &str, m: &std::collections::BTreeMap<(String, String), f64>| {
            m.iter()
                .map(|((old, new), support)| json!({ "kind": kind, "old": old, "new": new, "support": support }))
                .collect::<Vec<_>>()
        };
        let mut all = list("prefix", &rules.prefix);
        all.extend(list("suffix", &rules.suffix));
        let forms: Vec<Value> = queries
            .split_whitespace()
            .map(|q| json!({ "lemma": q, "form": rules.inflect(q) }))
            .collect();
        slots.push(json!({ "slot": slot, "rules": all, "inflections": forms }));
    }
    Ok(json!({ "slots": slots }))
}

#[wasm_bindgen]
pub fn learn_rules(pairs: &str, queries: &str) -> String {
    respond(learn_rules_value(pairs, queries))
}

/// Generate a synthetic language and run pcs-iii on it at threshold `lambda_s`.
pub fn synthetic_run_value(
    slots: usize,
    lemmas: usize,
    classes: usize,
    tokens: usize,
    seed: u64,
    lambda_s: f64,
) -> Result<Value, String> {
    let spec = SynthSpec {
        slots,
        lemmas,
        classes,
        tokens,
        seed,
    };
    let lang = generate_synthetic_language(&spec).map_err(|e| e.to_string())?;
    let inputs = Inputs::new(lang.corpus(), lang.lexicon.clone(), Some(lang.gold.clone()));
    let config = Config {
        mode: Mode::PcsIII,
        lambda_s,
        ..Config::default()
    };
    let out = run(&inputs, &config).map_err(|e| e.to_string())?;
    let score = out.report.score.as_ref().expect("gold was given");

    let trees = out.bootstrap.as_ref().map(|b| b.trees()).unwrap_or(&[]);
    let groups: Vec<Value> = out
        .grouping
        .iter()
        .flat_map(|g| g.slots.iter())
        .enumerate()
        .map(|(i, s)| {
            json!({
                "id": i + 1,
                "trees": s.trees.iter().map(|&t| trees[t].to_string()).collect::<Vec<_>>(),
                "lemmas": s.lemmas.len(),
            })
        })
        .collect();
    let merges: Vec<Value> = out
        .grouping
        .iter()
        .flat_map(|g| g.merges.iter())
        .map(|m| json!({ "kept": m.kept, "absorbed": m.absorbed, "score": m.score }))
        .collect();
    let sample: Vec<Value> = lang
        .lexicon
        .iter()
        .take(4)
        .map(|lemma| {
            let gold: Vec<&String> = lang.gold.entries()[lemma].values().collect();
            let predicted: Vec<&String> = out.predictions[lemma].values().collect();
            json!({ "lemma": lemma, "gold": gold, "predicted": predicted })
        })
        .collect();
    Ok(json!({
        "tokens": out.report.tokens,
        "trees": out.report.trees,
        "m": out.report.slots,
        "n": score.n,
        "macro": score.macro_acc,
        "micro": score.micro_acc,
        "slots": groups,
        "merges": merges,
        "sample": sample,
        "corpus_head": lang.sentences.iter().take(6).map(|s| s.join(" ")).collect::<Vec<_>>(),
    }))
}

#[wasm_bindgen]
pub fn synthetic_run(
    slots: usize,
    lemmas: usize,
    classes: usize,
    tokens: usize,
    seed: u64,
    lambda_s: f64,
) -> String {
    respond(synthetic_run_value(
        slots, lemmas, classes, tokens, seed, lambda_s,
    ))
}
