use std::fs;
use std::path::Path;

use sgk_core::ctc::{Posteriorgram, Vocabulary};
use sgk_core::dsp::FeatureMatrix;
use sgk_core::{Error, Result};

fn with_path(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| with_path(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    let bytes = read_bytes(path)?;
    String::from_utf8(bytes).map_err(|_| Error::data(format!("{}: not valid UTF-8", path.display())))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| with_path(path, e))
}

fn in_file(path: &Path, e: Error) -> Error {
    match e {
        Error::Data(m) => Error::data(format!("{}: {m}", path.display())),
        other => other,
    }
}

pub fn read_vocab(path: &Path) -> Result<Vocabulary> {
    Vocabulary::parse(&read_text(path)?).map_err(|e| in_file(path, e))
}

/// Reads a posteriorgram and checks it against the vocabulary size.
pub fn read_posteriors(path: &Path, vocab: &Vocabulary) -> Result<Posteriorgram> {
    let p = Posteriorgram::parse(read_text(path)?.as_bytes()).map_err(|e| in_file(path, e))?;
    if p.num_labels() != vocab.extended_size() {
        return Err(Error::data(format!(
            "{}: {} symbols per frame but the vocabulary has {} (blank included)",
            path.display(),
            p.num_labels(),
            vocab.extended_size()
        )));
    }
    Ok(p)
}

pub fn read_features(path: &Path) -> Result<FeatureMatrix> {
    FeatureMatrix::read_any(&read_bytes(path)?).map_err(|e| in_file(path, e))
}

/// One integer per line; blank lines are skipped.
pub fn read_int_labels(path: &Path) -> Result<Vec<i64>> {
    read_text(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse()
                .map_err(|_| Error::data(format!("{} line {}: bad label {l:?}", path.display(), i + 1)))
        })
        .collect()
}
