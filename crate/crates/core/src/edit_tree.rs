//! Edit trees: recursive descriptions of how one string is rewritten into
//! another.
//!
//! A tree is built by locating the longest common substring of the two
//! strings, keeping it, and recursing on the material to its left and right.
//! When the two strings share no character, the tree simply replaces one with
//! the other. Because only the *lengths* of the flanking segments and the
//! replaced strings are stored, a tree generalizes to other inputs: the tree
//! built from `work -> worked` appends `ed` to anything.

use std::fmt;

/// Longest common substring of two strings, in code points.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lcs {
    pub len: usize,
    pub start_x: usize,
    pub start_y: usize,
}

/// Longest common substring of `x` and `y`, measured in code points.
///
/// Ties are broken by the smallest start in `x`, then the smallest start in `y`.
pub fn longest_common_substring(x: &str, y: &str) -> Lcs {
    let x: Vec<char> = x.chars().collect();
    let y: Vec<char> = y.chars().collect();
    lcs_chars(&x, &y)
}

pub(crate) fn lcs_chars(x: &[char], y: &[char]) -> Lcs {
    let mut best = Lcs {
        len: 0,
        start_x: 0,
        start_y: 0,
    };
    if x.is_empty() || y.is_empty() {
        return best;
    }
    // prev[j + 1] = length of the common suffix of x[..i] and y[..=j]
    let mut prev = vec![0usize; y.len() + 1];
    let mut cur = vec![0usize; y.len() + 1];
    for (i, &cx) in x.iter().enumerate() {
        for (j, &cy) in y.iter().enumerate() {
            cur[j + 1] = if cx == cy { prev[j] + 1 } else { 0 };
            // Scanning ends in increasing x, then y, and only replacing on a
            // strictly longer match yields the leftmost-in-x, leftmost-in-y tie rule.
            if cur[j + 1] > best.len {
                best = Lcs {
                    len: cur[j + 1],
                    start_x: i + 1 - cur[j + 1],
                    start_y: j + 1 - cur[j + 1],
                };
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    best
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EditTree {
    /// Applies only to exactly `old`, producing `new`.
    Replace { old: String, new: String },
    /// Keeps the middle of the input; `left` rewrites the first `prefix_len`
    /// code points and `right` the last `suffix_len` code points.
    Match {
        prefix_len: usize,
        suffix_len: usize,
        left: Box<EditTree>,
        right: Box<EditTree>,
    },
}

impl EditTree {
    /// Build the tree that rewrites `x` into `y`.
    pub fn construct(x: &str, y: &str) -> EditTree {
        let x: Vec<char> = x.chars().collect();
        let y: Vec<char> = y.chars().collect();
        Self::construct_chars(&x, &y)
    }

    pub(crate) fn construct_chars(x: &[char], y: &[char]) -> EditTree {
        let lcs = lcs_chars(x, y);
        if lcs.len == 0 {
            return EditTree::Replace {
                old: x.iter().collect(),
                new: y.iter().collect(),
            };
        }
        let x_end = lcs.start_x + lcs.len;
        let y_end = lcs.start_y + lcs.len;
        EditTree::Match {
            prefix_len: lcs.start_x,
            suffix_len: x.len() - x_end,
            left: Box::new(Self::construct_chars(&x[..lcs.start_x], &y[..lcs.start_y])),
            right: Box::new(Self::construct_chars(&x[x_end..], &y[y_end..])),
        }
    }

    /// The tree that returns any input unchanged.
    pub fn identity() -> EditTree {
        EditTree::Match {
            prefix_len: 0,
            suffix_len: 0,
            left: Box::new(EditTree::empty_replace()),
            right: Box::new(EditTree::empty_replace()),
        }
    }

    fn empty_replace() -> EditTree {
        EditTree::Replace {
            old: String::new(),
            new: String::new(),
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == EditTree::identity()
    }

    /// Apply the tree to `x`; `None` when the tree is not applicable.
    pub fn apply(&self, x: &str) -> Option<String> {
        let chars: Vec<char> = x.chars().collect();
        let mut out = String::with_capacity(x.len() + 8);
        self.apply_chars(&chars, &mut out).then_some(out)
    }

    pub(crate) fn apply_chars(&self, x: &[char], out: &mut String) -> bool {
        match self {
            EditTree::Replace { old, new } => {
                if old.chars().eq(x.iter().copied()) {
                    out.push_str(new);
                    true
                } else {
                    false
                }
            }
            EditTree::Match {
                prefix_len,
                suffix_len,
                left,
                right,
            } => {
                if x.len() < prefix_len + suffix_len {
                    return false;
                }
                let mid_end = x.len() - suffix_len;
                if !left.apply_chars(&x[..*prefix_len], out) {
                    return false;
                }
                out.extend(&x[*prefix_len..mid_end]);
                right.apply_chars(&x[mid_end..], out)
            }
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            EditTree::Replace { .. } => 1,
            EditTree::Match { left, right, .. } => 1 + left.size() + right.size(),
        }
    }
}

/// S-expression rendering, e.g. `(match 3 6 (rep "naj" "") (rep "" ""))`.
impl fmt::Display for EditTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EditTree::Replace { old, new } => write!(f, "(rep {old:?} {new:?})"),
            EditTree::Match {
                prefix_len,
                suffix_len,
                left,
                right,
            } => write!(f, "(match {prefix_len} {suffix_len} {left} {right})"),
        }
    }
}
