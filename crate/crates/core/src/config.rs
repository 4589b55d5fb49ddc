//! Run configuration. Loaded from a TOML file; every field has a default, and
//! the CLI overrides individual fields by flags of the same name.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bootstrap::BootstrapParams;
use crate::error::{Error, Result};
use crate::evaluation::LB_DEV_SLOTS;
use crate::tagger::TaggerConfig;

/// Which system to run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Every frequent edit tree is its own slot.
    #[serde(rename = "pcs-i")]
    PcsI,
    /// PCS-I after one bootstrap round.
    #[serde(rename = "pcs-ii-a")]
    PcsIIa,
    /// PCS-I after two bootstrap rounds.
    #[serde(rename = "pcs-ii-b")]
    PcsIIb,
    /// Trees grouped into slots by context, forms generated by affix rules.
    #[serde(rename = "pcs-iii")]
    PcsIII,
    /// PCS-III on the bootstrapped lexicon.
    #[default]
    #[serde(rename = "pcs-ii+iii")]
    PcsIIandIII,
    /// Lemma-copy baseline.
    #[serde(rename = "lb")]
    Lb,
    /// Affix rules trained on `conll17_k` gold paradigms.
    #[serde(rename = "conll17-k")]
    Conll17K,
    /// Score an existing prediction file.
    #[serde(rename = "eval")]
    Eval,
}

impl Mode {
    pub const ALL: [Mode; 8] = [
        Mode::PcsI,
        Mode::PcsIIa,
        Mode::PcsIIb,
        Mode::PcsIII,
        Mode::PcsIIandIII,
        Mode::Lb,
        Mode::Conll17K,
        Mode::Eval,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::PcsI => "pcs-i",
            Mode::PcsIIa => "pcs-ii-a",
            Mode::PcsIIb => "pcs-ii-b",
            Mode::PcsIII => "pcs-iii",
            Mode::PcsIIandIII => "pcs-ii+iii",
            Mode::Lb => "lb",
            Mode::Conll17K => "conll17-k",
            Mode::Eval => "eval",
        }
    }

    /// Bootstrap rounds run when the config does not say otherwise.
    pub fn default_iterations(self) -> usize {
        match self {
            Mode::PcsIIa | Mode::PcsIIandIII => 1,
            Mode::PcsIIb => 2,
            _ => 0,
        }
    }

    /// Whether slots come from context clustering rather than one per tree.
    pub fn clusters(self) -> bool {
        matches!(self, Mode::PcsIII | Mode::PcsIIandIII)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Mode::ALL.iter().map(|m| m.name()).collect();
                Error::Config(format!(
                    "unknown mode `{s}` (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub mode: Mode,
    /// Minimum LCS ratio for a (lemma, word) candidate pair.
    pub lambda_p: f64,
    /// Fraction of the effective lexicon size a tree needs to be kept.
    pub phi_fc: f64,
    /// Fraction of kept trees a word must be explained by to become a lemma.
    pub phi_nl: f64,
    /// Weight decay per bootstrap round.
    pub theta_nl: f64,
    /// Minimum cosine similarity for merging two slots.
    pub lambda_s: f64,
    /// Tag window length 2d+1; must be odd.
    pub window: usize,
    /// Overrides the mode's number of bootstrap rounds.
    pub bootstrap_iterations: Option<usize>,
    pub tagger_states: usize,
    pub tagger_iters: usize,
    pub seed: u64,
    pub unk_threshold: usize,
    /// Slot count of the lemma-copy baseline.
    pub lb_slots: usize,
    /// Number of gold paradigms the conll17-k skyline trains on.
    pub conll17_k: usize,
    /// Use lemma weights as rule supports; otherwise every pair counts 1.
    pub weighted_rules: bool,
    /// Drop generated forms that never occur in the corpus.
    pub attested_only: bool,
    pub lowercase: bool,
    /// Thread cap; unset means one per core.
    pub workers: Option<usize>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            mode: Mode::default(),
            lambda_p: 0.5,
            phi_fc: 0.05,
            phi_nl: 0.2,
            theta_nl: 0.5,
            lambda_s: 0.3,
            window: 3,
            bootstrap_iterations: None,
            tagger_states: 8,
            tagger_iters: 20,
            seed: 0,
            unk_threshold: 2,
            lb_slots: LB_DEV_SLOTS,
            conll17_k: 1,
            weighted_rules: true,
            attested_only: false,
            lowercase: true,
            workers: None,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: String| if ok { Ok(()) } else { Err(Error::Config(msg)) };
        check(
            (0.0..1.0).contains(&self.lambda_p),
            format!("lambda_p must lie in [0, 1), got {}", self.lambda_p),
        )?;
        check(
            self.phi_fc > 0.0 && self.phi_fc.is_finite(),
            format!("phi_fc must be positive and finite, got {}", self.phi_fc),
        )?;
        check(
            self.phi_nl >= 0.0 && self.phi_nl.is_finite(),
            format!(
                "phi_nl must be finite and non-negative, got {}",
                self.phi_nl
            ),
        )?;
        check(
            self.theta_nl > 0.0 && self.theta_nl <= 1.0,
            format!("theta_nl must lie in (0, 1], got {}", self.theta_nl),
        )?;
        check(
            self.lambda_s > 0.0 && self.lambda_s < 1.0,
            format!("lambda_s must lie in (0, 1), got {}", self.lambda_s),
        )?;
        check(
            self.window % 2 == 1,
            format!("window must be odd, got {}", self.window),
        )?;
        check(
            self.tagger_states >= 1,
            "tagger_states must be at least 1".into(),
        )?;
        check(self.lb_slots >= 1, "lb_slots must be at least 1".into())?;
        check(self.conll17_k >= 1, "conll17_k must be at least 1".into())?;
        check(self.workers != Some(0), "workers must be at least 1".into())?;
        // the feature space has states^window dimensions
        let dim = (self.tagger_states as u128).checked_pow(self.window as u32);
        check(
            dim.is_some_and(|d| d <= 1 << 24),
            format!(
                "tagger_states^window = {}^{} is too large a feature space",
                self.tagger_states, self.window
            ),
        )
    }

    pub fn iterations(&self) -> usize {
        self.bootstrap_iterations
            .unwrap_or_else(|| self.mode.default_iterations())
    }

    pub fn half_window(&self) -> usize {
        self.window / 2
    }

    pub fn bootstrap_params(&self) -> BootstrapParams {
        BootstrapParams {
            lambda_p: self.lambda_p,
            phi_fc: self.phi_fc,
            phi_nl: self.phi_nl,
            theta_nl: self.theta_nl,
        }
    }

    pub fn tagger(&self) -> TaggerConfig {
        TaggerConfig {
            states: self.tagger_states,
            iters: self.tagger_iters,
            seed: self.seed,
            unk_threshold: self.unk_threshold,
        }
    }
}
