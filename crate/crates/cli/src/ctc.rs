use std::path::{Path, PathBuf};

use sgk_core::ctc::{ctc_loss, ctc_prefix_logprob, Posteriorgram, Vocabulary};
use sgk_core::decode::{
    estimate_prior, greedy_decode, labelsync_beam, timesync_beam, CountLm, DecodeConfig, LabelPrior,
    LanguageModel, UniformLm,
};
use sgk_core::{Error, Result};

use crate::io::{read_posteriors, read_text, read_vocab};
use crate::{fixed, Report};

#[derive(Debug, clap::Args)]
pub struct Inputs {
    /// Posteriorgram text file (natural-log probabilities, blank first).
    #[arg(long)]
    posteriors: PathBuf,
    /// Vocabulary file; line 1 must be <blank>.
    #[arg(long)]
    vocab: PathBuf,
}

#[derive(Debug, clap::Subcommand)]
pub enum Command {
    /// Negative log-probability of a label sequence.
    Loss {
        #[command(flatten)]
        inputs: Inputs,
        /// File of whitespace-separated label tokens.
        #[arg(long)]
        labels: PathBuf,
    },
    /// Log-probability that the output starts with the given labels.
    Prefix {
        #[command(flatten)]
        inputs: Inputs,
        /// File of whitespace-separated label tokens (may be empty).
        #[arg(long)]
        labels: PathBuf,
    },
    /// Decode the most likely label sequence.
    Decode {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_enum, default_value_t = Mode::Greedy)]
        mode: Mode,
        /// Count LM file ("n-gram<TAB>count" lines).
        #[arg(long)]
        lm: Option<PathBuf>,
        /// Add-alpha smoothing constant for the count LM.
        #[arg(long, default_value_t = 1.0)]
        lm_alpha: f64,
        #[arg(long)]
        lm_scale: Option<f64>,
        /// Directory of posteriorgram files used to estimate the label prior.
        #[arg(long)]
        prior_from: Option<PathBuf>,
        #[arg(long)]
        prior_scale: Option<f64>,
        #[arg(long)]
        beam: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Greedy,
    TimeSync,
    LabelSync,
}

fn load(inputs: &Inputs) -> Result<(Vocabulary, Posteriorgram)> {
    let vocab = read_vocab(&inputs.vocab)?;
    let p = read_posteriors(&inputs.posteriors, &vocab)?;
    Ok((vocab, p))
}

fn read_labels(path: &Path, vocab: &Vocabulary) -> Result<Vec<usize>> {
    vocab
        .encode(&read_text(path)?)
        .map_err(|e| Error::data(format!("{}: {e}", path.display())))
}

fn read_prior(dir: &Path, vocab: &Vocabulary) -> Result<LabelPrior> {
    let mut paths = std::fs::read_dir(dir)
        .map_err(|e| Error::data(format!("{}: {e}", dir.display())))?
        .map(|entry| entry.map(|e| e.path()))
        .collect::<std::io::Result<Vec<_>>>()?;
    paths.retain(|p| p.is_file());
    paths.sort();
    let grams = paths
        .iter()
        .map(|p| read_posteriors(p, vocab))
        .collect::<Result<Vec<_>>>()?;
    if grams.is_empty() {
        return Err(Error::data(format!("{}: no posteriorgram files", dir.display())));
    }
    estimate_prior(&grams)
}

pub fn run(cmd: Command) -> Result<(String, Report)> {
    match cmd {
        Command::Loss { inputs, labels } => {
            let (vocab, p) = load(&inputs)?;
            let labels = read_labels(&labels, &vocab)?;
            let loss = ctc_loss(&p, &labels)?;
            if !loss.is_finite() {
                return Err(Error::numeric("target sequence is infeasible for this posteriorgram"));
            }
            Ok(("ctc loss".into(), Report::new().line(format!("LOSS={}", fixed(loss))).field("loss", loss)))
        }
        Command::Prefix { inputs, labels } => {
            let (vocab, p) = load(&inputs)?;
            let labels = read_labels(&labels, &vocab)?;
            let logp = ctc_prefix_logprob(&p, &labels)?;
            Ok(("ctc prefix".into(), Report::new().line(format!("LOGP={}", fixed(logp))).field("logp", logp)))
        }
        Command::Decode {
            inputs,
            mode,
            lm,
            lm_alpha,
            lm_scale,
            prior_from,
            prior_scale,
            beam,
        } => {
            let (vocab, p) = load(&inputs)?;
            let defaults = DecodeConfig::default();
            let cfg = DecodeConfig {
                beam_size: beam.unwrap_or(defaults.beam_size),
                lm_scale: lm_scale.unwrap_or(defaults.lm_scale),
                prior_scale: prior_scale.unwrap_or(defaults.prior_scale),
            };
            cfg.validate()?;
            let searched = lm.is_some() || lm_scale.is_some() || beam.is_some();
            let prior_flags = prior_from.is_some() || prior_scale.is_some();
            if mode == Mode::Greedy && (searched || prior_flags) {
                return Err(Error::usage("greedy mode takes no --lm, --lm-scale, --beam or prior flags"));
            }
            if mode == Mode::LabelSync && prior_flags {
                return Err(Error::usage("label-sync mode does not apply a prior"));
            }
            if prior_scale.is_some_and(|s| s > 0.0) && prior_from.is_none() {
                return Err(Error::usage("--prior-scale needs --prior-from"));
            }
            if cfg.lm_scale > 0.0 && lm.is_none() {
                return Err(Error::usage("--lm-scale needs --lm"));
            }
            let lm: Box<dyn LanguageModel> = match &lm {
                Some(path) => Box::new(
                    CountLm::parse_counts(&read_text(path)?, &vocab, lm_alpha)
                        .map_err(|e| match e {
                            Error::Data(m) => Error::data(format!("{}: {m}", path.display())),
                            other => other,
                        })?,
                ),
                None => Box::new(UniformLm::new(vocab.num_labels())),
            };
            let prior = prior_from.as_deref().map(|d| read_prior(d, &vocab)).transpose()?;
            let (labels, score) = match mode {
                Mode::Greedy => (greedy_decode(&p), None),
                Mode::TimeSync => {
                    let h = timesync_beam(&p, lm.as_ref(), prior.as_ref(), &cfg)?;
                    (h.labels, Some(h.score))
                }
                Mode::LabelSync => {
                    let h = labelsync_beam(&p, lm.as_ref(), &cfg)?;
                    (h.labels, Some(h.score))
                }
            };
            let hyp = vocab.decode(&labels);
            let mut report = Report::new().line(format!("HYP={hyp}")).field("hyp", hyp.clone());
            if let Some(s) = score {
                report = report.field("score", s);
            }
            Ok(("ctc decode".into(), report))
        }
    }
}
