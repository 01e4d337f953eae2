use std::path::PathBuf;

use sgk_core::dsp::{
    mfcc, normalize_wave, spec_augment, wav::read_wav, FrameSpec, MaskSpec, MelFilterbank, DEFAULT_CEPSTRA,
    DEFAULT_FILTERS,
};
use sgk_core::{Error, Result};

use crate::io::{read_bytes, write_bytes};
use crate::{Globals, Report};

const DEFAULT_TIME_MASK: usize = 10;
const DEFAULT_FREQ_MASK: usize = 4;

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Write the binary layout instead of text.
    #[arg(long)]
    binary: bool,
    #[arg(long, default_value_t = DEFAULT_FILTERS)]
    filters: usize,
    #[arg(long, default_value_t = DEFAULT_CEPSTRA)]
    cepstra: usize,
    /// Apply one time mask and one frequency mask (seeded by --seed).
    #[arg(long)]
    augment: bool,
    /// Maximum time-mask width in frames.
    #[arg(long)]
    tm: Option<usize>,
    /// Maximum frequency-mask width in coefficients.
    #[arg(long)]
    fm: Option<usize>,
}

pub fn run(a: &Args, g: &Globals) -> Result<Report> {
    if !a.augment && (a.tm.is_some() || a.fm.is_some()) {
        return Err(Error::usage("--tm and --fm require --augment"));
    }
    let spec = FrameSpec::default();
    let fb = MelFilterbank::new(a.filters, spec.fft_size, 16000)?;
    if a.cepstra == 0 || a.cepstra > a.filters {
        return Err(Error::usage(format!(
            "--cepstra {} must lie in 1..={} (the filter count)",
            a.cepstra, a.filters
        )));
    }
    let wave = read_wav(read_bytes(&a.input)?.as_slice())?;
    let mut feats = mfcc(&normalize_wave(&wave)?, &spec, &fb, a.cepstra)?;
    if a.augment {
        let m = MaskSpec::new(
            a.tm.unwrap_or(DEFAULT_TIME_MASK),
            a.fm.unwrap_or(DEFAULT_FREQ_MASK),
            g.seed,
        );
        feats = spec_augment(&feats, &m);
    }
    let mut out = Vec::new();
    if a.binary {
        feats.write_binary(&mut out)?;
    } else {
        feats.write_text(&mut out)?;
    }
    write_bytes(&a.output, &out)?;
    Ok(Report::new()
        .line(format!("FRAMES={} DIM={}", feats.num_frames, feats.dim))
        .field("frames", feats.num_frames)
        .field("dim", feats.dim)
        .field("output", a.output.display().to_string()))
}
