use std::path::PathBuf;

use serde::Deserialize;
use serde_json::Value;
use sgk_core::ssl::{
    cca_corrs, cca_similarity, contrastive_loss, diversity_loss, mutual_information, CodebookUsage,
    ContrastiveBatch, DEFAULT_REGULARIZATION,
};
use sgk_core::{Error, Result};

use crate::io::{read_features, read_int_labels, read_text};
use crate::{fixed, Globals, Report};

#[derive(Debug, clap::Subcommand)]
pub enum Command {
    /// Canonical correlations between two feature matrices with aligned rows.
    Cca {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        /// Covariance regularization.
        #[arg(long, default_value_t = DEFAULT_REGULARIZATION)]
        reg: f64,
    },
    /// Mutual information between k-means clusters of features and labels.
    Mi {
        #[arg(long)]
        features: PathBuf,
        /// One integer label per line, aligned with the feature rows.
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        k: usize,
    },
    /// Contrastive and diversity losses of a JSON batch.
    SslLosses {
        /// JSON object with context, target, negatives, temperature and usage.
        #[arg(long)]
        input: PathBuf,
        /// Weight of the diversity term in the combined objective.
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SslInput {
    context: Vec<f64>,
    target: Vec<f64>,
    #[serde(default)]
    negatives: Vec<Vec<f64>>,
    temperature: f64,
    usage: Vec<Vec<f64>>,
}

pub fn run(cmd: Command, g: &Globals) -> Result<(String, Report)> {
    match cmd {
        Command::Cca { x, y, reg } => {
            let corrs = cca_corrs(&read_features(&x)?, &read_features(&y)?, reg)?;
            let sim = cca_similarity(&corrs);
            let list: Vec<String> = corrs.iter().map(|c| fixed(*c)).collect();
            let report = Report::new()
                .line(format!("CCA={} CORRS={}", fixed(sim), list.join(",")))
                .field("cca", sim)
                .field("correlations", corrs);
            Ok(("analyze cca".into(), report))
        }
        Command::Mi { features, labels, k } => {
            let mi = mutual_information(&read_features(&features)?, &read_int_labels(&labels)?, k, g.seed)?;
            Ok(("analyze mi".into(), Report::new().line(format!("MI={}", fixed(mi))).field("mi", mi)))
        }
        Command::SslLosses { input, alpha } => {
            if !alpha.is_finite() {
                return Err(Error::usage("--alpha must be finite"));
            }
            let raw: SslInput = serde_json::from_str(&read_text(&input)?)
                .map_err(|e| Error::data(format!("{}: {e}", input.display())))?;
            let batch = ContrastiveBatch {
                context: raw.context,
                target: raw.target,
                negatives: raw.negatives,
                temperature: raw.temperature,
            };
            if !(batch.temperature > 0.0 && batch.temperature.is_finite()) {
                return Err(Error::data("temperature must be a finite value > 0"));
            }
            let contrastive = contrastive_loss(&batch)?;
            let diversity = diversity_loss(&CodebookUsage::new(raw.usage).map_err(|e| match e {
                Error::Usage(m) => Error::data(m),
                other => other,
            })?);
            let total = contrastive + alpha * diversity;
            let report = Report::new()
                .line(format!(
                    "CONTRASTIVE={} DIVERSITY={} TOTAL={}",
                    fixed(contrastive),
                    fixed(diversity),
                    fixed(total)
                ))
                .field("contrastive", contrastive)
                .field("diversity", diversity)
                .field("alpha", alpha)
                .field("total", Value::from(total));
            Ok(("analyze ssl-losses".into(), report))
        }
    }
}
