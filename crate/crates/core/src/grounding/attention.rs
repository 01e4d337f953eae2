//! Audio-guided multi-head attention.
//!
//! Per head, `q_i = W_q o_i + W_q^a a`, `k_j = W_k o_j + W_k^a a`,
//! `v_j = W_v o_j + W_v^a a`, `alpha_i = softmax_j(q_i . k_j / sqrt(d_h))` and
//! `o'_i = sum_j alpha_ij v_j`; the heads are concatenated and mapped by `W_o`.
//! Matrices are stored input-major, so `W_q o_i` is `o_i^T . wq`.

use super::tape::{Tape, Tensor, Var};
use crate::error::{Error, Result};

/// Projections of one head: object maps are `d x d_h`, audio maps `d_a x d_h`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams {
    pub wq: Tensor,
    pub wk: Tensor,
    pub wv: Tensor,
    pub wq_audio: Tensor,
    pub wk_audio: Tensor,
    pub wv_audio: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    pub heads: Vec<HeadParams>,
    /// `(h * d_h) x d`.
    pub wo: Tensor,
}

impl AttentionParams {
    /// `(d, d_a, d_h)`, after checking every shape.
    pub fn dims(&self) -> Result<(usize, usize, usize)> {
        let first = self
            .heads
            .first()
            .ok_or_else(|| Error::usage("attention needs at least one head"))?;
        let (d, dh) = first.wq.shape();
        let da = first.wq_audio.rows;
        for h in &self.heads {
            for w in [&h.wq, &h.wk, &h.wv] {
                if w.shape() != (d, dh) {
                    return Err(Error::usage("object projections disagree in shape"));
                }
            }
            for w in [&h.wq_audio, &h.wk_audio, &h.wv_audio] {
                if w.shape() != (da, dh) {
                    return Err(Error::usage("audio projections disagree in shape"));
                }
            }
        }
        if self.wo.shape() != (self.heads.len() * dh, d) {
            return Err(Error::usage("output projection must map h * d_h back to d"));
        }
        Ok((d, da, dh))
    }
}

/// Output rows plus a flag set when there was nothing to attend to, in which
/// case every row is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionOutput {
    pub rows: Vec<Vec<f64>>,
    pub no_keys: bool,
}

/// Tape handles of one head's projections.
pub(crate) struct HeadVars {
    pub wq: Var,
    pub wk: Var,
    pub wv: Var,
    pub wq_audio: Var,
    pub wk_audio: Var,
    pub wv_audio: Var,
}

pub(crate) struct AttentionVars {
    pub heads: Vec<HeadVars>,
    pub wo: Var,
    pub d_head: usize,
}

impl AttentionVars {
    pub fn from_params(tape: &mut Tape, p: &AttentionParams) -> Self {
        let heads = p
            .heads
            .iter()
            .map(|h| HeadVars {
                wq: tape.leaf(h.wq.clone()),
                wk: tape.leaf(h.wk.clone()),
                wv: tape.leaf(h.wv.clone()),
                wq_audio: tape.leaf(h.wq_audio.clone()),
                wk_audio: tape.leaf(h.wk_audio.clone()),
                wv_audio: tape.leaf(h.wv_audio.clone()),
            })
            .collect();
        Self {
            heads,
            wo: tape.leaf(p.wo.clone()),
            d_head: p.wo.rows / p.heads.len(),
        }
    }
}

/// `queries` is `n x d`, `keys` is `m x d` with `m >= 1`, `audio` is `1 x d_a`.
pub(crate) fn attend(tape: &mut Tape, queries: Var, keys: Var, audio: Var, p: &AttentionVars) -> Var {
    let scale = 1.0 / (p.d_head as f64).sqrt();
    let mut outputs = Vec::with_capacity(p.heads.len());
    for h in &p.heads {
        let project = |tape: &mut Tape, x: Var, w: Var, wa: Var| {
            let xo = tape.matmul(x, w);
            let xa = tape.matmul(audio, wa);
            tape.add_row(xo, xa)
        };
        let q = project(tape, queries, h.wq, h.wq_audio);
        let k = project(tape, keys, h.wk, h.wk_audio);
        let v = project(tape, keys, h.wv, h.wv_audio);
        let scores = tape.matmul_t(q, k);
        let scores = tape.scale(scores, scale);
        let alpha = tape.softmax_rows(scores);
        outputs.push(tape.matmul(alpha, v));
    }
    let concat = tape.concat_cols(&outputs);
    tape.matmul(concat, p.wo)
}

/// Audio-guided attention of `queries` over `keys` (pass the same rows for
/// self-attention). An empty key set yields zero rows and `no_keys`.
pub fn audio_guided_attention(
    queries: &[Vec<f64>],
    keys: &[Vec<f64>],
    audio: &[f64],
    params: &AttentionParams,
) -> Result<AttentionOutput> {
    let (d, da, _) = params.dims()?;
    if audio.len() != da {
        return Err(Error::usage(format!("audio has {} values, expected {da}", audio.len())));
    }
    if queries.iter().chain(keys).any(|r| r.len() != d) {
        return Err(Error::usage(format!("object features must have {d} values")));
    }
    if keys.is_empty() {
        return Ok(AttentionOutput {
            rows: vec![vec![0.0; d]; queries.len()],
            no_keys: true,
        });
    }
    if queries.is_empty() {
        return Ok(AttentionOutput {
            rows: vec![],
            no_keys: false,
        });
    }
    let mut tape = Tape::new();
    let vars = AttentionVars::from_params(&mut tape, params);
    let q = tape.leaf(Tensor::from_rows(queries, d));
    let k = tape.leaf(Tensor::from_rows(keys, d));
    let a = tape.leaf(Tensor::row_vector(audio));
    let out = attend(&mut tape, q, k, a, &vars);
    Ok(AttentionOutput {
        rows: tape.value(out).to_rows(),
        no_keys: false,
    })
}

/// Attention weights of every head, `heads x queries x keys`.
pub fn attention_weights(
    queries: &[Vec<f64>],
    keys: &[Vec<f64>],
    audio: &[f64],
    params: &AttentionParams,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let (d, da, dh) = params.dims()?;
    if audio.len() != da || queries.iter().chain(keys).any(|r| r.len() != d) {
        return Err(Error::usage("attention inputs do not match the parameter shapes"));
    }
    if keys.is_empty() {
        return Err(Error::usage("attention weights need at least one key"));
    }
    let mut tape = Tape::new();
    let q_in = tape.leaf(Tensor::from_rows(queries, d));
    let k_in = tape.leaf(Tensor::from_rows(keys, d));
    let a = tape.leaf(Tensor::row_vector(audio));
    let mut out = Vec::new();
    for h in &params.heads {
        let mut project = |x: Var, w: &Tensor, wa: &Tensor| {
            let w = tape.leaf(w.clone());
            let wa = tape.leaf(wa.clone());
            let xo = tape.matmul(x, w);
            let xa = tape.matmul(a, wa);
            tape.add_row(xo, xa)
        };
        let q = project(q_in, &h.wq, &h.wq_audio);
        let k = project(k_in, &h.wk, &h.wk_audio);
        let s = tape.matmul_t(q, k);
        let s = tape.scale(s, 1.0 / (dh as f64).sqrt());
        let alpha = tape.softmax_rows(s);
        out.push(tape.value(alpha).to_rows());
    }
    Ok(out)
}
