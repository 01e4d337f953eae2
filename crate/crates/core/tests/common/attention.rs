use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sgk_core::grounding::{generate_scenes, AttentionParams, GeneratorConfig, HeadParams, Scene, Tensor};

pub fn scenes(n: usize, seed: u64) -> Vec<Scene> {
    generate_scenes(&GeneratorConfig {
        num_scenes: n,
        seed,
        ..Default::default()
    })
    .unwrap()
}

pub fn random_tensor(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    Tensor::from_vec(rows, cols, (0..rows * cols).map(|_| r.gen_range(-1.0..1.0)).collect())
}

pub fn random_params(r: &mut ChaCha8Rng, d: usize, da: usize, dh: usize, heads: usize) -> AttentionParams {
    AttentionParams {
        heads: (0..heads)
            .map(|_| HeadParams {
                wq: random_tensor(r, d, dh),
                wk: random_tensor(r, d, dh),
                wv: random_tensor(r, d, dh),
                wq_audio: random_tensor(r, da, dh),
                wk_audio: random_tensor(r, da, dh),
                wv_audio: random_tensor(r, da, dh),
            })
            .collect(),
        wo: random_tensor(r, heads * dh, d),
    }
}

/// Direct evaluation with plain loops over the per-head formulas.
pub fn straight_line(q_objs: &[Vec<f64>], kv_objs: &[Vec<f64>], a: &[f64], p: &AttentionParams) -> Vec<Vec<f64>> {
    let h = p.heads.len();
    let dh = p.heads[0].wq.cols;
    let d = p.wo.cols;
    let proj = |x: &[f64], w: &Tensor, ax: &[f64], wa: &Tensor, c: usize| {
        let mut s = 0.0;
        for r in 0..x.len() {
            s += x[r] * w.data[r * w.cols + c];
        }
        for r in 0..ax.len() {
            s += ax[r] * wa.data[r * wa.cols + c];
        }
        s
    };
    let mut out = Vec::new();
    for oi in q_objs {
        let mut concat = vec![0.0; h * dh];
        for (hi, hp) in p.heads.iter().enumerate() {
            let q: Vec<f64> = (0..dh).map(|c| proj(oi, &hp.wq, a, &hp.wq_audio, c)).collect();
            let mut scores = Vec::new();
            let mut values = Vec::new();
            for oj in kv_objs {
                let k: Vec<f64> = (0..dh).map(|c| proj(oj, &hp.wk, a, &hp.wk_audio, c)).collect();
                let v: Vec<f64> = (0..dh).map(|c| proj(oj, &hp.wv, a, &hp.wv_audio, c)).collect();
                let mut dot = 0.0;
                for c in 0..dh {
                    dot += q[c] * k[c];
                }
                scores.push(dot / (dh as f64).sqrt());
                values.push(v);
            }
            let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = scores.iter().map(|s| (s - m).exp()).sum();
            for (j, s) in scores.iter().enumerate() {
                let alpha = (s - m).exp() / z;
                for c in 0..dh {
                    concat[hi * dh + c] += alpha * values[j][c];
                }
            }
        }
        let row: Vec<f64> = (0..d)
            .map(|c| (0..h * dh).map(|r| concat[r] * p.wo.data[r * d + c]).sum())
            .collect();
        out.push(row);
    }
    out
}

pub fn random_rows(r: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| r.gen_range(-1.0..1.0)).collect()).collect()
}

pub fn permuted(scene: &Scene, perm: &[usize]) -> Scene {
    let mut s = scene.clone();
    s.objects = perm.iter().map(|&i| scene.objects[i].clone()).collect();
    s.utterance.target_index = perm.iter().position(|&i| i == scene.utterance.target_index).unwrap();
    s
}
