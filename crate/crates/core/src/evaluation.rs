//! Best-match accuracy (BMAcc) and the lemma-copy baseline.
//!
//! Predicted slots are anonymous, so scoring first finds the assignment of
//! predicted to gold slots that maximizes the number (micro) or the per-slot
//! rate (macro) of correct forms, and then normalizes by the larger of the two
//! slot counts, which penalizes predicting too few or too many slots.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};

use crate::corpus_io::{GoldTable, Paradigms};
use crate::error::{Error, Result};

/// lemma -> (slot -> form)
pub type Table<K> = BTreeMap<String, BTreeMap<K, String>>;

/// Collapse slots whose columns agree on every lemma (a missing cell only
/// agrees with a missing cell). The smallest slot key of each group is kept.
/// Returns the reduced table and the groups of merged keys.
pub fn merge_syncretic_slots<K>(table: &Table<K>) -> (Table<K>, Vec<Vec<K>>)
where
    K: Ord + Clone,
{
    let mut keys: Vec<&K> = table.values().flat_map(|row| row.keys()).collect();
    keys.sort();
    keys.dedup();

    let mut groups: Vec<Vec<K>> = Vec::new();
    let mut by_column: HashMap<Vec<Option<&str>>, usize> = HashMap::new();
    for key in keys {
        let column: Vec<Option<&str>> = table
            .values()
            .map(|row| row.get(key).map(String::as_str))
            .collect();
        match by_column.get(&column) {
            Some(&g) => groups[g].push(key.clone()),
            None => {
                by_column.insert(column, groups.len());
                groups.push(vec![key.clone()]);
            }
        }
    }
    let dropped: Vec<&K> = groups.iter().flat_map(|g| g.iter().skip(1)).collect();
    let reduced = table
        .iter()
        .map(|(lemma, row)| {
            let row = row
                .iter()
                .filter(|(k, _)| !dropped.contains(k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect();
            (lemma.clone(), row)
        })
        .collect();
    (reduced, groups)
}

/// A maximum-weight matching of rows to columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Matching {
    /// (row, column) pairs in increasing row order.
    pub pairs: Vec<(usize, usize)>,
    pub total: f64,
}

/// Exact maximum-weight full matching on an `N x M` matrix; the matching has
/// `min(N, M)` pairs. Uses the O(n^2 m) shortest augmenting path form of the
/// Hungarian method.
pub fn best_match(weights: &[Vec<f64>]) -> Matching {
    let n = weights.len();
    let m = weights.first().map_or(0, Vec::len);
    if n == 0 || m == 0 {
        return Matching {
            pairs: Vec::new(),
            total: 0.0,
        };
    }
    let transposed = n > m;
    let (rows, cols) = if transposed { (m, n) } else { (n, m) };
    let cost = |i: usize, j: usize| {
        if transposed {
            -weights[j][i]
        } else {
            -weights[i][j]
        }
    };

    // 1-based potentials; column 0 is a sentinel.
    let mut u = vec![0.0f64; rows + 1];
    let mut v = vec![0.0f64; cols + 1];
    let mut owner = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    for i in 1..=rows {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut pairs: Vec<(usize, usize)> = (1..=cols)
        .filter(|&j| owner[j] != 0)
        .map(|j| {
            let (r, c) = (owner[j] - 1, j - 1);
            if transposed {
                (c, r)
            } else {
                (r, c)
            }
        })
        .collect();
    pairs.sort_unstable();
    let total = pairs.iter().map(|&(i, j)| weights[i][j]).sum();
    Matching { pairs, total }
}

/// One gold slot paired with a predicted slot in the macro matching.
#[derive(Clone, Debug, PartialEq)]
pub struct SlotMatch {
    pub gold: String,
    pub predicted: usize,
    pub correct: usize,
    pub gold_count: usize,
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Score {
    pub macro_acc: f64,
    pub micro_acc: f64,
    /// Gold slots after merging syncretic columns.
    pub n: usize,
    /// Predicted slots after merging syncretic columns.
    pub m: usize,
    pub matched: Vec<SlotMatch>,
}

impl Score {
    /// `key=value` lines.
    pub fn to_kv(&self) -> String {
        let mut out = format!(
            "macro={}\nmicro={}\nN={}\nM={}\n",
            self.macro_acc, self.micro_acc, self.n, self.m
        );
        for s in &self.matched {
            let _ = writeln!(
                out,
                "slot.{}={}:{}/{}:{}",
                s.gold, s.predicted, s.correct, s.gold_count, s.accuracy
            );
        }
        out
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "BMAcc macro / micro: {:.2} / {:.2} ({})",
            100.0 * self.macro_acc,
            100.0 * self.micro_acc,
            self.m
        )?;
        writeln!(
            f,
            "gold slots N = {}, predicted slots M = {}",
            self.n, self.m
        )?;
        for s in &self.matched {
            writeln!(
                f,
                "  {:<24} <- {:>4}  {:>5}/{:<5} {:6.2}%",
                s.gold,
                s.predicted,
                s.correct,
                s.gold_count,
                100.0 * s.accuracy
            )?;
        }
        Ok(())
    }
}

/// Macro- and micro-averaged best-match accuracy of `pred` against `gold`.
pub fn bmacc(gold: &GoldTable, pred: &Paradigms) -> Result<Score> {
    if gold.is_empty() {
        return Err(Error::EmptyGold);
    }
    let (gold_table, _) = merge_syncretic_slots(gold.entries());
    let (pred_table, _) = merge_syncretic_slots(pred);

    let gold_slots: Vec<String> = {
        let mut s: Vec<String> = gold_table
            .values()
            .flat_map(|r| r.keys().cloned())
            .collect();
        s.sort();
        s.dedup();
        s
    };
    let pred_slots: Vec<usize> = {
        let mut s: Vec<usize> = pred_table
            .values()
            .flat_map(|r| r.keys().copied())
            .collect();
        s.sort_unstable();
        s.dedup();
        s
    };
    let (n, m) = (gold_slots.len(), pred_slots.len());
    if m == 0 {
        return Ok(Score {
            macro_acc: 0.0,
            micro_acc: 0.0,
            n,
            m,
            matched: Vec::new(),
        });
    }

    let mut gold_count = vec![0usize; n];
    let mut correct = vec![vec![0usize; m]; n];
    for (lemma, row) in &gold_table {
        let predicted = pred_table.get(lemma);
        for (i, slot) in gold_slots.iter().enumerate() {
            let Some(form) = row.get(slot) else { continue };
            gold_count[i] += 1;
            if let Some(p) = predicted {
                for (j, id) in pred_slots.iter().enumerate() {
                    if p.get(id) == Some(form) {
                        correct[i][j] += 1;
                    }
                }
            }
        }
    }
    let acc: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..m)
                .map(|j| correct[i][j] as f64 / gold_count[i] as f64)
                .collect()
        })
        .collect();
    let counts: Vec<Vec<f64>> = correct
        .iter()
        .map(|r| r.iter().map(|&c| c as f64).collect())
        .collect();

    let denom = n.max(m) as f64;
    let macro_match = best_match(&acc);
    let micro_match = best_match(&counts);
    let total_gold: usize = gold_count.iter().sum();
    let micro_correct: usize = micro_match.pairs.iter().map(|&(i, j)| correct[i][j]).sum();

    Ok(Score {
        macro_acc: macro_match.total / denom,
        micro_acc: (n as f64 / denom) * micro_correct as f64 / total_gold as f64,
        n,
        m,
        matched: macro_match
            .pairs
            .iter()
            .map(|&(i, j)| SlotMatch {
                gold: gold_slots[i].clone(),
                predicted: pred_slots[j],
                correct: correct[i][j],
                gold_count: gold_count[i],
                accuracy: acc[i][j],
            })
            .collect(),
    })
}

/// Default slot count of the lemma-copy baseline when the true paradigm size
/// is not known.
pub const LB_DEV_SLOTS: usize = 48;

/// Predict the lemma itself for slots `1..=slot_count` of every lemma.
pub fn lemma_baseline<S: AsRef<str>>(lexicon: &[S], slot_count: usize) -> Paradigms {
    lexicon
        .iter()
        .map(|l| {
            let l = l.as_ref().to_owned();
            let row = (1..=slot_count).map(|s| (s, l.clone())).collect();
            (l, row)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Maximum over every injective assignment of the smaller side.
    fn brute_force(w: &[Vec<f64>]) -> f64 {
        let n = w.len();
        let m = w[0].len();
        fn go(w: &[Vec<f64>], row: usize, used: &mut Vec<bool>, transposed: bool) -> f64 {
            let (n, m) = if transposed {
                (w[0].len(), w.len())
            } else {
                (w.len(), w[0].len())
            };
            if row == n {
                return 0.0;
            }
            let mut best = f64::NEG_INFINITY;
            for c in 0..m {
                if used[c] {
                    continue;
                }
                used[c] = true;
                let x = if transposed { w[c][row] } else { w[row][c] };
                best = best.max(x + go(w, row + 1, used, transposed));
                used[c] = false;
            }
            best
        }
        if n <= m {
            go(w, 0, &mut vec![false; m], false)
        } else {
            go(w, 0, &mut vec![false; n], true)
        }
    }

    fn gold(rows: &[(&str, &str, &str)]) -> GoldTable {
        let mut g = GoldTable::new();
        for (l, f, s) in rows {
            g.insert(l, s, f);
        }
        g
    }

    fn pred(rows: &[(&str, &str, usize)]) -> Paradigms {
        let mut p = Paradigms::new();
        for (l, f, s) in rows {
            p.entry(l.to_string())
                .or_default()
                .insert(*s, f.to_string());
        }
        p
    }

    #[test]
    fn matching_small_cases() {
        let m = best_match(&[vec![3.0]]);
        assert_eq!(m.pairs, [(0, 0)]);
        let diag = vec![
            vec![9.0, 1.0, 0.0],
            vec![1.0, 9.0, 1.0],
            vec![0.0, 1.0, 9.0],
        ];
        assert_eq!(best_match(&diag).pairs, [(0, 0), (1, 1), (2, 2)]);
        assert_eq!(best_match(&[]).pairs, []);
        let wide = vec![vec![1.0, 5.0, 2.0]];
        assert_eq!(best_match(&wide).pairs, [(0, 1)]);
        let tall = vec![vec![1.0], vec![5.0], vec![2.0]];
        assert_eq!(best_match(&tall).pairs, [(1, 0)]);
    }

    #[test]
    fn matching_against_brute_force_5x4() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let w: Vec<Vec<f64>> = (0..5)
                .map(|_| (0..4).map(|_| rng.gen_range(0.0..1.0)).collect())
                .collect();
            let got = best_match(&w);
            assert_eq!(got.pairs.len(), 4);
            assert!((got.total - brute_force(&w)).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn matching_is_a_valid_optimum(
            w in (1usize..=6, 1usize..=6).prop_flat_map(|(n, m)| {
                proptest::collection::vec(proptest::collection::vec(0u8..10, m), n)
            })
        ) {
            let w: Vec<Vec<f64>> = w.iter().map(|r| r.iter().map(|&x| x as f64).collect()).collect();
            let got = best_match(&w);
            let (n, m) = (w.len(), w[0].len());
            prop_assert_eq!(got.pairs.len(), n.min(m));
            let mut rows: Vec<usize> = got.pairs.iter().map(|p| p.0).collect();
            let mut cols: Vec<usize> = got.pairs.iter().map(|p| p.1).collect();
            rows.dedup();
            cols.sort_unstable();
            cols.dedup();
            prop_assert_eq!(rows.len(), n.min(m));
            prop_assert_eq!(cols.len(), n.min(m));
            prop_assert_eq!(got.total, brute_force(&w));
        }
    }

    #[test]
    fn syncretic_merge() {
        let g = gold(&[
            ("walk", "walked", "V;PST"),
            ("walk", "walked", "V.PTCP;PST"),
            ("walk", "walks", "V;3SG"),
            ("go", "went", "V;PST"),
            ("go", "went", "V.PTCP;PST"),
            ("go", "goes", "V;3SG"),
        ]);
        let (reduced, groups) = merge_syncretic_slots(g.entries());
        assert_eq!(reduced["walk"].len(), 2);
        assert!(groups.contains(&vec!["V.PTCP;PST".to_string(), "V;PST".to_string()]));

        let distinct = pred(&[("a", "x", 1), ("a", "y", 2)]);
        let (reduced, _) = merge_syncretic_slots(&distinct);
        assert_eq!(reduced, distinct);

        let triple = pred(&[("a", "x", 1), ("a", "x", 2), ("a", "x", 3), ("b", "y", 1)]);
        let (reduced, _) = merge_syncretic_slots(&triple);
        // slot 1 differs from 2 and 3 on lemma b; 2 and 3 are identical
        assert_eq!(reduced["a"].len(), 2);
        let triple = pred(&[("a", "x", 1), ("a", "x", 2), ("a", "x", 3)]);
        assert_eq!(merge_syncretic_slots(&triple).0["a"].len(), 1);

        // a missing cell does not match a present one
        let partial = pred(&[("a", "x", 1), ("a", "x", 2), ("b", "y", 1)]);
        assert_eq!(merge_syncretic_slots(&partial).0["a"].len(), 2);
    }

    #[test]
    fn perfect_and_empty() {
        let g = gold(&[
            ("walk", "walked", "PST"),
            ("walk", "walks", "3SG"),
            ("talk", "talked", "PST"),
            ("talk", "talks", "3SG"),
        ]);
        let p = pred(&[
            ("walk", "walked", 2),
            ("walk", "walks", 1),
            ("talk", "talked", 2),
            ("talk", "talks", 1),
        ]);
        let s = bmacc(&g, &p).unwrap();
        assert_eq!((s.macro_acc, s.micro_acc, s.n, s.m), (1.0, 1.0, 2, 2));
        let s = bmacc(&g, &Paradigms::new()).unwrap();
        assert_eq!((s.macro_acc, s.micro_acc), (0.0, 0.0));
        assert!(matches!(
            bmacc(&GoldTable::new(), &p),
            Err(Error::EmptyGold)
        ));
    }

    #[test]
    fn one_of_two_slots() {
        let g = gold(&[
            ("walk", "walked", "PST"),
            ("walk", "walks", "3SG"),
            ("talk", "talked", "PST"),
            ("talk", "talks", "3SG"),
        ]);
        let p = pred(&[("walk", "walked", 1), ("talk", "talked", 1)]);
        let s = bmacc(&g, &p).unwrap();
        // matchings: {PST<-1} gives 1 + nothing; {3SG<-1} gives 0
        assert_eq!(s.macro_acc, 0.5);
        assert_eq!(s.micro_acc, 0.5);
        assert_eq!((s.n, s.m), (2, 1));
    }

    #[test]
    fn lemma_copy_scores_zero_when_no_form_equals_lemma() {
        let g = gold(&[("walk", "walked", "PST"), ("talk", "talks", "3SG")]);
        let lb = lemma_baseline(&["walk", "talk"], 5);
        assert_eq!(lb["walk"].len(), 5);
        let s = bmacc(&g, &lb).unwrap();
        assert_eq!(s.m, 1);
        assert_eq!((s.macro_acc, s.micro_acc), (0.0, 0.0));
    }

    #[test]
    fn lemma_copy_hits_identity_slot() {
        let g = gold(&[
            ("walk", "walk", "NFIN"),
            ("walk", "walked", "PST"),
            ("talk", "talk", "NFIN"),
            ("talk", "talked", "PST"),
        ]);
        let s = bmacc(&g, &lemma_baseline(&["walk", "talk"], LB_DEV_SLOTS)).unwrap();
        assert_eq!(s.matched[0].gold, "NFIN");
        assert_eq!(s.matched[0].accuracy, 1.0);
        assert_eq!(s.macro_acc, 0.5);
    }

    #[test]
    fn missing_gold_cells_are_not_counted() {
        let g = gold(&[
            ("walk", "walked", "PST"),
            ("talk", "talked", "PST"),
            ("talk", "talks", "3SG"),
        ]);
        let p = pred(&[
            ("walk", "walked", 1),
            ("walk", "walks", 2),
            ("talk", "talked", 1),
            ("talk", "talks", 2),
        ]);
        let s = bmacc(&g, &p).unwrap();
        assert_eq!((s.macro_acc, s.micro_acc), (1.0, 1.0));
    }

    #[test]
    fn report_formats() {
        let g = gold(&[("walk", "walked", "PST")]);
        let p = pred(&[("walk", "walked", 7)]);
        let s = bmacc(&g, &p).unwrap();
        assert!(s
            .to_string()
            .starts_with("BMAcc macro / micro: 100.00 / 100.00 (1)"));
        assert!(s.to_kv().contains("slot.PST=7:1/1:1\n"));
    }
}
