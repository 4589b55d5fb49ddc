use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use paradigm::config::{Config, Mode};
use paradigm::corpus_io::{load_corpus, load_gold, read_predictions};
use paradigm::evaluation::bmacc;
use paradigm::pipeline::{diagnostics, run, run_pipeline, Inputs};
use paradigm::synthetic::{generate_synthetic_language, SynthSpec};
use paradigm::tagger::{tagged_corpus_tsv, train_hmm_with, HmmModel};
use paradigm::{Error, Result};

/// Unsupervised morphological paradigm completion.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Complete the paradigms of a lexicon from a corpus.
    Run {
        #[command(flatten)]
        io: RunIo,
        /// Prediction TSV to write.
        #[arg(long)]
        out: PathBuf,
        /// Directory for trees, discovered lemmas, tags, merges and rules.
        #[arg(long)]
        dump_dir: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Score a prediction file against a gold table.
    Eval {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// Print key=value lines instead of the table.
        #[arg(long)]
        kv: bool,
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        lowercase: bool,
    },
    /// Generate a synthetic language: corpus.txt, lexicon.txt, gold.tsv.
    Synth {
        #[arg(long, default_value_t = 4)]
        slots: usize,
        #[arg(long, default_value_t = 30)]
        lemmas: usize,
        #[arg(long, default_value_t = 2)]
        classes: usize,
        #[arg(long, default_value_t = 20_000)]
        tokens: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Train the HMM tagger (or load a model) and tag a corpus.
    Tag {
        #[arg(long)]
        corpus: PathBuf,
        /// Tagged corpus TSV: token, tag.
        #[arg(long)]
        out: PathBuf,
        /// Use this model instead of training one.
        #[arg(long)]
        model_in: Option<PathBuf>,
        #[arg(long)]
        model_out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Learn the affix rules of a run and write them as TSV.
    RulesDump {
        #[command(flatten)]
        io: RunIo,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

#[derive(Args)]
struct RunIo {
    /// One tokenized sentence per line.
    #[arg(long)]
    corpus: PathBuf,
    /// One lemma per line.
    #[arg(long)]
    lexicon: PathBuf,
    /// Gold table to score against.
    #[arg(long)]
    gold: Option<PathBuf>,
}

/// Config fields; each flag overrides the config file.
#[derive(Args)]
struct ConfigArgs {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// pcs-i, pcs-ii-a, pcs-ii-b, pcs-iii, pcs-ii+iii, lb, conll17-k
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    lambda_p: Option<f64>,
    #[arg(long)]
    phi_fc: Option<f64>,
    #[arg(long)]
    phi_nl: Option<f64>,
    #[arg(long)]
    theta_nl: Option<f64>,
    #[arg(long)]
    lambda_s: Option<f64>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    bootstrap_iterations: Option<usize>,
    #[arg(long)]
    tagger_states: Option<usize>,
    #[arg(long)]
    tagger_iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    unk_threshold: Option<usize>,
    #[arg(long)]
    lb_slots: Option<usize>,
    #[arg(long)]
    conll17_k: Option<usize>,
    #[arg(long)]
    weighted_rules: Option<bool>,
    #[arg(long)]
    attested_only: Option<bool>,
    #[arg(long)]
    lowercase: Option<bool>,
    /// Thread cap (default: one per core).
    #[arg(long)]
    workers: Option<usize>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<Config> {
        let mut c = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    c.$field = v;
                }
            )*};
        }
        set!(
            mode,
            lambda_p,
            phi_fc,
            phi_nl,
            theta_nl,
            lambda_s,
            window,
            tagger_states,
            tagger_iters,
            seed,
            unk_threshold,
            lb_slots,
            conll17_k,
            weighted_rules,
            attested_only,
            lowercase
        );
        if self.bootstrap_iterations.is_some() {
            c.bootstrap_iterations = self.bootstrap_iterations;
        }
        if self.workers.is_some() {
            c.workers = self.workers;
        }
        c.validate()?;
        Ok(c)
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            io,
            out,
            dump_dir,
            config,
        } => {
            let config = config.resolve()?;
            let result = run_pipeline(&config, &io.corpus, &io.lexicon, io.gold.as_deref(), &out)?;
            print!("{}", result.report);
            if let Some(dir) = dump_dir {
                fs::create_dir_all(&dir).map_err(|e| Error::Io {
                    path: dir.clone(),
                    source: e,
                })?;
                let (corpus, _) = load_corpus(&io.corpus, config.lowercase)?;
                for (name, text) in diagnostics(&result, &corpus) {
                    write(&dir.join(name), &text)?;
                }
            }
        }
        Command::Eval {
            gold,
            pred,
            kv,
            lowercase,
        } => {
            let gold = load_gold(&gold, lowercase)?;
            let score = bmacc(&gold, &read_predictions(&pred)?)?;
            if kv {
                print!("{}", score.to_kv());
            } else {
                print!("{score}");
            }
        }
        Command::Synth {
            slots,
            lemmas,
            classes,
            tokens,
            seed,
            out_dir,
        } => {
            let lang = generate_synthetic_language(&SynthSpec {
                slots,
                lemmas,
                classes,
                tokens,
                seed,
            })?;
            for path in lang.write_to(&out_dir)? {
                println!("{}", path.display());
            }
        }
        Command::Tag {
            corpus,
            out,
            model_in,
            model_out,
            config,
        } => {
            let config = config.resolve()?;
            let (corpus, _) = load_corpus(&corpus, config.lowercase)?;
            let model = match model_in {
                Some(path) => {
                    let text =
                        fs::read_to_string(&path).map_err(|e| Error::Io { path, source: e })?;
                    HmmModel::from_text(&text)?
                }
                None => {
                    let training = train_hmm_with(&corpus, &config.tagger(), |it, _, ll| {
                        log::info!("em iteration {it}: log-likelihood {ll}");
                    })?;
                    training.model
                }
            };
            if let Some(path) = model_out {
                write(&path, &model.to_text())?;
            }
            write(&out, &tagged_corpus_tsv(&corpus, &model.tag(&corpus)))?;
        }
        Command::RulesDump { io, out, config } => {
            let config = config.resolve()?;
            if !(config.mode.clusters() || config.mode == Mode::Conll17K) {
                return Err(Error::Config(format!(
                    "mode {} learns no affix rules; use pcs-iii, pcs-ii+iii or conll17-k",
                    config.mode
                )));
            }
            let inputs = Inputs::load(
                &io.corpus,
                &io.lexicon,
                io.gold.as_deref(),
                config.lowercase,
            )?;
            let result = run(&inputs, &config)?;
            write(&out, &result.rules.map(|r| r.to_tsv()).unwrap_or_default())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
