//! Speech decoding and audio-guided grounding numerics.
//!
//! - [`dsp`]: MFCC front end and SpecAugment.
//! - [`ctc`]: CTC collapse, forward-backward, prefix probabilities.
//! - [`decode`]: greedy, time-synchronous and label-synchronous CTC search,
//!   language models, attention-decoder search.
//! - [`metrics`]: word error rate.
//! - [`grounding`]: toy-scale audio-guided 3D grounding model.
//! - [`ssl`]: contrastive/diversity objectives, CCA and mutual information.

pub mod ctc;
pub mod decode;
pub mod dsp;
pub mod error;
pub mod grounding;
pub mod logspace;
pub mod metrics;
pub mod ssl;

pub use error::{Error, Result};
