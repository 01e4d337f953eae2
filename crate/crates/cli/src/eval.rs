use std::path::PathBuf;

use sgk_core::decode::{lm_perplexity, CountLm};
use sgk_core::metrics::{corpus_wer, tokenize};
use sgk_core::{Error, Result};

use crate::io::{read_text, read_vocab};
use crate::{fixed, Report};

#[derive(Debug, clap::Subcommand)]
pub enum Command {
    /// Corpus word error rate of line-aligned reference and hypothesis files.
    Wer {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        hyp: PathBuf,
    },
    /// Perplexity of a count LM on a text (one sentence per line).
    Ppl {
        #[arg(long)]
        lm: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        text: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        lm_alpha: f64,
    },
}

fn lines(text: &str) -> Vec<&str> {
    let mut v: Vec<&str> = text.lines().collect();
    // a trailing empty line is the file terminator, not a sentence
    while v.last().is_some_and(|l| l.trim().is_empty()) {
        v.pop();
    }
    v
}

pub fn run(cmd: Command) -> Result<(String, Report)> {
    match cmd {
        Command::Wer { reference, hyp } => {
            let r = read_text(&reference)?;
            let h = read_text(&hyp)?;
            let (r, h) = (lines(&r), lines(&h));
            if r.len() != h.len() {
                return Err(Error::data(format!(
                    "reference has {} lines but hypothesis has {}",
                    r.len(),
                    h.len()
                )));
            }
            let pairs: Vec<(Vec<&str>, Vec<&str>)> =
                r.iter().zip(&h).map(|(a, b)| (tokenize(a), tokenize(b))).collect();
            if pairs.iter().all(|(a, _)| a.is_empty()) {
                return Err(Error::data("reference contains no words"));
            }
            let (c, rate) = corpus_wer(&pairs)?;
            let report = Report::new()
                .line(format!(
                    "WER={} S={} D={} I={} N={}",
                    fixed(rate),
                    c.substitutions,
                    c.deletions,
                    c.insertions,
                    c.ref_len
                ))
                .field("wer", rate)
                .field("substitutions", c.substitutions)
                .field("deletions", c.deletions)
                .field("insertions", c.insertions)
                .field("ref_words", c.ref_len);
            Ok(("eval wer".into(), report))
        }
        Command::Ppl {
            lm,
            vocab,
            text,
            lm_alpha,
        } => {
            let vocab = read_vocab(&vocab)?;
            let lm = CountLm::parse_counts(&read_text(&lm)?, &vocab, lm_alpha)?;
            let text = read_text(&text)?;
            let corpus = lines(&text)
                .iter()
                .map(|l| vocab.encode(l))
                .collect::<Result<Vec<_>>>()?;
            if corpus.is_empty() {
                return Err(Error::data("text contains no sentences"));
            }
            let ppl = lm_perplexity(&lm, &corpus)?;
            Ok(("eval ppl".into(), Report::new().line(format!("PPL={}", fixed(ppl))).field("ppl", ppl)))
        }
    }
}
