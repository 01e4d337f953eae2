use std::io::BufReader;
use std::path::{Path, PathBuf};

use sgk_core::grounding::{
    evaluate, generate_scenes, read_checkpoint, read_scenes, train_toy, write_checkpoint, write_scenes,
    GeneratorConfig, GroundingModel, ModelConfig, PreparedScene, Scene, TrainConfig,
};
use sgk_core::{Error, Result};

use crate::io::{read_bytes, write_bytes};
use crate::{fixed, Globals, Report};

#[derive(Debug, clap::Subcommand)]
pub enum Command {
    /// Generate a synthetic scene dataset (JSON lines).
    Gen {
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 2000)]
        num_scenes: usize,
        #[arg(long, default_value_t = 6)]
        num_classes: usize,
    },
    /// Train the toy grounding model and write a checkpoint.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 6)]
        num_classes: usize,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
    },
    /// Report candidate-selection accuracy and auxiliary metrics.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Print the selected object of every scene.
    Infer {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
}

fn load_scenes(path: &Path) -> Result<Vec<Scene>> {
    let bytes = read_bytes(path)?;
    let scenes = read_scenes(BufReader::new(bytes.as_slice()))
        .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    if scenes.is_empty() {
        return Err(Error::data(format!("{}: no scenes", path.display())));
    }
    Ok(scenes)
}

fn load_model(path: &Path) -> Result<GroundingModel> {
    read_checkpoint(read_bytes(path)?.as_slice()).map_err(|e| match e {
        Error::Data(m) => Error::data(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn prepare(model: &GroundingModel, scenes: &[Scene]) -> Result<Vec<PreparedScene>> {
    scenes
        .iter()
        .enumerate()
        .map(|(i, s)| {
            model.prepare(s).map_err(|e| match e {
                Error::Usage(m) | Error::Data(m) => Error::data(format!("scene {}: {m}", i + 1)),
                other => other,
            })
        })
        .collect()
}

pub fn run(cmd: Command, g: &Globals) -> Result<(String, Report)> {
    match cmd {
        Command::Gen {
            output,
            num_scenes,
            num_classes,
        } => {
            let cfg = GeneratorConfig {
                num_scenes,
                num_classes,
                seed: g.seed,
                ..Default::default()
            };
            let scenes = generate_scenes(&cfg)?;
            let mut out = Vec::new();
            write_scenes(&scenes, &mut out)?;
            write_bytes(&output, &out)?;
            Ok((
                "ground gen".into(),
                Report::new()
                    .line(format!("SCENES={}", scenes.len()))
                    .field("scenes", scenes.len())
                    .field("output", output.display().to_string()),
            ))
        }
        Command::Train {
            data,
            output,
            num_classes,
            epochs,
            batch_size,
            learning_rate,
        } => {
            let config = ModelConfig {
                num_classes,
                ..Default::default()
            };
            let mut model = GroundingModel::new(config, g.seed)?;
            let scenes = prepare(&model, &load_scenes(&data)?)?;
            let defaults = TrainConfig::default();
            let cfg = TrainConfig {
                epochs: epochs.unwrap_or(defaults.epochs),
                batch_size: batch_size.unwrap_or(defaults.batch_size),
                learning_rate: learning_rate.unwrap_or(defaults.learning_rate),
                seed: g.seed,
                ..defaults
            };
            let quiet = g.quiet;
            let logs = train_toy(&mut model, &scenes, &cfg, |log| {
                if !quiet {
                    eprintln!(
                        "epoch {} lr {:.6} loss {:.6} (audio {:.6}, omd {:.6}, ground {:.6})",
                        log.epoch + 1,
                        log.learning_rate,
                        log.loss.total,
                        log.loss.audio,
                        log.loss.omd,
                        log.loss.ground
                    );
                }
            })?;
            let mut out = Vec::new();
            write_checkpoint(&model, &mut out)?;
            write_bytes(&output, &out)?;
            let losses: Vec<f64> = logs.iter().map(|l| l.loss.total).collect();
            let last = losses.last().copied().unwrap_or(f64::NAN);
            let mut report = Report::new().field("epoch_losses", losses).field("parameters", model.num_parameters());
            report = if logs.is_empty() {
                report.line("LOSS=none")
            } else {
                report.line(format!("LOSS={}", fixed(last))).field("loss", last)
            };
            Ok(("ground train".into(), report))
        }
        Command::Eval { model, data } => {
            let model = load_model(&model)?;
            let scenes = prepare(&model, &load_scenes(&data)?)?;
            let r = evaluate(&model, &scenes)?;
            let (_, _, macro_f1) = r.omd_macro();
            let report = Report::new()
                .line(format!(
                    "ACC={} AUDIO_ACC={} OMD_F1={} N={}",
                    fixed(r.candidate_accuracy),
                    fixed(r.audio_accuracy),
                    fixed(r.omd_micro.f1()),
                    r.scenes
                ))
                .field("candidate_accuracy", r.candidate_accuracy)
                .field("audio_accuracy", r.audio_accuracy)
                .field("omd_micro_precision", r.omd_micro.precision())
                .field("omd_micro_recall", r.omd_micro.recall())
                .field("omd_micro_f1", r.omd_micro.f1())
                .field("omd_macro_f1", macro_f1)
                .field("no_candidate", r.no_candidate)
                .field("scenes", r.scenes);
            Ok(("ground eval".into(), report))
        }
        Command::Infer { model, data } => {
            let model = load_model(&model)?;
            let scenes = prepare(&model, &load_scenes(&data)?)?;
            let mut report = Report::new();
            let mut rows = Vec::new();
            for (i, s) in scenes.iter().enumerate() {
                let gr = model.ground_prepared(s)?;
                let winner = gr.winner.map_or("none".to_string(), |w| w.to_string());
                let mentions: Vec<String> = gr.mentions.iter().map(|m| m.to_string()).collect();
                report = report.line(format!(
                    "SCENE={} CLASS={} MENTIONS={} OBJECT={}",
                    i,
                    gr.predicted_class,
                    if mentions.is_empty() { "-".to_string() } else { mentions.join(",") },
                    winner
                ));
                rows.push(serde_json::json!({
                    "scene": i,
                    "predicted_class": gr.predicted_class,
                    "mentions": gr.mentions,
                    "candidates": gr.grouping.candidates,
                    "distribution": gr.distribution,
                    "object": gr.winner,
                }));
            }
            Ok(("ground infer".into(), report.field("scenes", rows)))
        }
    }
}
