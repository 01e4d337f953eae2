//! The grounding model: audio classifier, mention-detection heads, audio-guided
//! self/cross-attention stacks and the per-candidate grounding head.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::attention::{attend, AttentionParams, AttentionVars, HeadParams, HeadVars};
use super::scene::{object_feature_stub, scene_audio, Scene, SceneObject, StubConfig};
use super::tape::{Gradients, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::logspace::softmax;

/// Architecture and loss settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub num_classes: usize,
    pub stub: StubConfig,
    pub heads: usize,
    pub d_head: usize,
    /// Layers in each of the self- and cross-attention stacks.
    pub attn_layers: usize,
    /// Hidden widths shared by every MLP.
    pub hidden: Vec<usize>,
    pub omd_threshold: f64,
    /// `(lambda_a, lambda_b, lambda_c)`.
    pub loss_weights: [f64; 3],
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            num_classes: 6,
            stub: StubConfig::default(),
            heads: 2,
            d_head: 16,
            attn_layers: 1,
            hidden: vec![64],
            omd_threshold: 0.5,
            loss_weights: [1.0; 3],
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let s = &self.stub;
        if self.num_classes < 2 {
            return Err(Error::usage("the model needs at least 2 classes"));
        }
        if s.d_obj == 0 || s.d_audio == 0 || self.heads == 0 || self.d_head == 0 {
            return Err(Error::usage("model dimensions must be positive"));
        }
        if self.hidden.iter().any(|&h| h == 0) {
            return Err(Error::usage("hidden widths must be positive"));
        }
        if !(self.omd_threshold > 0.0 && self.omd_threshold < 1.0) {
            return Err(Error::usage("mention threshold must lie strictly between 0 and 1"));
        }
        if self.loss_weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::usage("loss weights must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Indices of `(weight, bias)` pairs.
type MlpLayout = Vec<(usize, usize)>;

#[derive(Debug, Clone)]
struct AttnLayout {
    heads: Vec<[usize; 6]>,
    wo: usize,
}

#[derive(Debug, Clone)]
struct Layout {
    audio_cls: MlpLayout,
    omd: MlpLayout,
    self_attn: Vec<AttnLayout>,
    cross_attn: Vec<AttnLayout>,
    head: MlpLayout,
}

/// Trainable parameters plus the fixed configuration.
#[derive(Debug, Clone)]
pub struct GroundingModel {
    config: ModelConfig,
    tensors: Vec<(String, Tensor)>,
    layout: Layout,
}

struct Builder<'a> {
    tensors: Vec<(String, Tensor)>,
    rng: &'a mut ChaCha8Rng,
}

impl Builder<'_> {
    fn add(&mut self, name: String, rows: usize, cols: usize, std: f64) -> usize {
        let data = if std == 0.0 {
            vec![0.0; rows * cols]
        } else {
            let normal = Normal::new(0.0, std).expect("positive std");
            (0..rows * cols).map(|_| normal.sample(self.rng)).collect()
        };
        self.tensors.push((name, Tensor::from_vec(rows, cols, data)));
        self.tensors.len() - 1
    }

    fn mlp(&mut self, prefix: &str, input: usize, hidden: &[usize], output: usize) -> MlpLayout {
        let mut widths = vec![input];
        widths.extend_from_slice(hidden);
        widths.push(output);
        widths
            .windows(2)
            .enumerate()
            .map(|(l, w)| {
                let std = (2.0 / w[0] as f64).sqrt();
                let wi = self.add(format!("{prefix}.{l}.w"), w[0], w[1], std);
                let bi = self.add(format!("{prefix}.{l}.b"), 1, w[1], 0.0);
                (wi, bi)
            })
            .collect()
    }

    fn attention(&mut self, prefix: &str, d: usize, da: usize, heads: usize, dh: usize) -> AttnLayout {
        let heads = (0..heads)
            .map(|h| {
                let mut idx = [0; 6];
                for (slot, (name, rows)) in
                    [("wq", d), ("wk", d), ("wv", d), ("wq_audio", da), ("wk_audio", da), ("wv_audio", da)]
                        .into_iter()
                        .enumerate()
                {
                    let std = (1.0 / rows as f64).sqrt();
                    idx[slot] = self.add(format!("{prefix}.head{h}.{name}"), rows, dh, std);
                }
                idx
            })
            .collect::<Vec<_>>();
        let rows = heads.len() * dh;
        let wo = self.add(format!("{prefix}.wo"), rows, d, (1.0 / rows as f64).sqrt());
        AttnLayout { heads, wo }
    }
}

fn build(config: &ModelConfig, rng: &mut ChaCha8Rng) -> (Vec<(String, Tensor)>, Layout) {
    let d = config.stub.object_dim();
    let da = config.stub.d_audio;
    let mut b = Builder {
        tensors: Vec::new(),
        rng,
    };
    let audio_cls = b.mlp("audio_cls", da, &config.hidden, config.num_classes);
    let omd = b.mlp("omd", da, &config.hidden, config.num_classes);
    let self_attn = (0..config.attn_layers)
        .map(|l| b.attention(&format!("self{l}"), d, da, config.heads, config.d_head))
        .collect();
    let cross_attn = (0..config.attn_layers)
        .map(|l| b.attention(&format!("cross{l}"), d, da, config.heads, config.d_head))
        .collect();
    let head = b.mlp("ground", d, &config.hidden, 1);
    (
        b.tensors,
        Layout {
            audio_cls,
            omd,
            self_attn,
            cross_attn,
            head,
        },
    )
}

/// Candidate and relational object indices of a scene.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grouping {
    pub candidates: Vec<usize>,
    pub relational: Vec<usize>,
}

impl Grouping {
    /// True when no object matches the target class.
    pub fn no_candidates(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Candidates are the objects of `target_class`; relational objects are those
/// of the other mentioned classes. Both keep scene order.
pub fn group_objects(objects: &[SceneObject], target_class: usize, mentioned: &BTreeSet<usize>) -> Grouping {
    let classes: Vec<usize> = objects.iter().map(|o| o.class_id).collect();
    group_by_class(&classes, target_class, mentioned)
}

/// Classes whose mention probability reaches `threshold`.
pub fn threshold_mentions(probs: &[f64], threshold: f64) -> Result<BTreeSet<usize>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::usage("mention threshold must lie strictly between 0 and 1"));
    }
    Ok(probs
        .iter()
        .enumerate()
        .filter(|(_, &p)| p >= threshold)
        .map(|(c, _)| c)
        .collect())
}

/// Object features and audio of a scene, computed once.
#[derive(Debug, Clone)]
pub struct PreparedScene {
    pub audio: Vec<f64>,
    pub features: Vec<Vec<f64>>,
    pub classes: Vec<usize>,
    pub target_class: usize,
    pub mentioned: BTreeSet<usize>,
    pub target_index: usize,
}

/// Result of the full inference pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct Grounding {
    pub predicted_class: usize,
    pub mentions: BTreeSet<usize>,
    pub grouping: Grouping,
    /// Probability per candidate, in `grouping.candidates` order.
    pub distribution: Vec<f64>,
    /// Scene index of the chosen object; `None` when there was no candidate.
    pub winner: Option<usize>,
    /// Set when cross-attention had no relational object to attend to.
    pub no_relational: bool,
}

/// The three loss terms and their weighted total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub total: f64,
    pub audio: f64,
    pub omd: f64,
    pub ground: f64,
}

impl LossParts {
    pub fn combine(audio: f64, omd: f64, ground: f64, weights: [f64; 3]) -> Self {
        Self {
            total: weights[0] * audio + weights[1] * omd + weights[2] * ground,
            audio,
            omd,
            ground,
        }
    }
}

impl GroundingModel {
    /// Randomly initialized model.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (tensors, layout) = build(&config, &mut rng);
        Ok(Self {
            config,
            tensors,
            layout,
        })
    }

    /// Model with the given parameters, which must match the layout of
    /// `config` by name and shape.
    pub fn from_tensors(config: ModelConfig, tensors: Vec<(String, Tensor)>) -> Result<Self> {
        let mut model = Self::new(config, 0)?;
        if tensors.len() != model.tensors.len() {
            return Err(Error::data(format!(
                "expected {} parameter tensors, found {}",
                model.tensors.len(),
                tensors.len()
            )));
        }
        for ((name, t), (want_name, want)) in tensors.into_iter().zip(model.tensors.iter_mut()) {
            if name != *want_name || t.shape() != want.shape() {
                return Err(Error::data(format!(
                    "parameter {name} {:?} does not match {want_name} {:?}",
                    t.shape(),
                    want.shape()
                )));
            }
            if !t.is_finite() {
                return Err(Error::data(format!("parameter {name} is not finite")));
            }
            *want = t;
        }
        Ok(model)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn tensors(&self) -> &[(String, Tensor)] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [(String, Tensor)] {
        &mut self.tensors
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors.iter().map(|(_, t)| t.data.len()).sum()
    }

    /// Zeroes the audio classifier, mention heads and grounding head.
    pub fn zero_heads(&mut self) {
        let layers: Vec<(usize, usize)> = self
            .layout
            .audio_cls
            .iter()
            .chain(&self.layout.omd)
            .chain(&self.layout.head)
            .cloned()
            .collect();
        for (w, b) in layers {
            self.tensors[w].1.data.iter_mut().for_each(|x| *x = 0.0);
            self.tensors[b].1.data.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    fn attention_params(&self, layout: &AttnLayout) -> AttentionParams {
        let t = |i: usize| self.tensors[i].1.clone();
        AttentionParams {
            heads: layout
                .heads
                .iter()
                .map(|h| HeadParams {
                    wq: t(h[0]),
                    wk: t(h[1]),
                    wv: t(h[2]),
                    wq_audio: t(h[3]),
                    wk_audio: t(h[4]),
                    wv_audio: t(h[5]),
                })
                .collect(),
            wo: t(layout.wo),
        }
    }

    pub fn self_attention(&self, layer: usize) -> Option<AttentionParams> {
        self.layout.self_attn.get(layer).map(|l| self.attention_params(l))
    }

    pub fn cross_attention(&self, layer: usize) -> Option<AttentionParams> {
        self.layout.cross_attn.get(layer).map(|l| self.attention_params(l))
    }

    /// Computes object representations and the audio vector of a scene.
    pub fn prepare(&self, scene: &Scene) -> Result<PreparedScene> {
        scene.validate(self.config.num_classes)?;
        let features = scene
            .objects
            .iter()
            .map(|o| object_feature_stub(o, &self.config.stub).map(|r| r.feature))
            .collect::<Result<Vec<_>>>()?;
        let u = &scene.utterance;
        Ok(PreparedScene {
            audio: scene_audio(u, scene.seed, self.config.stub.d_audio),
            features,
            classes: scene.objects.iter().map(|o| o.class_id).collect(),
            target_class: u.target_class,
            mentioned: u.mentioned_classes.clone(),
            target_index: u.target_index,
        })
    }

    fn check_audio(&self, audio: &[f64]) -> Result<()> {
        if audio.len() != self.config.stub.d_audio || audio.iter().any(|x| !x.is_finite()) {
            return Err(Error::usage(format!(
                "audio feature must hold {} finite values",
                self.config.stub.d_audio
            )));
        }
        Ok(())
    }

    /// Target-class distribution for an audio vector.
    pub fn classify_audio(&self, audio: &[f64]) -> Result<Vec<f64>> {
        self.check_audio(audio)?;
        let mut f = Forward::new(self);
        let a = f.tape.leaf(Tensor::row_vector(audio));
        let logits = f.mlp(a, &self.layout.audio_cls);
        Ok(softmax(&f.tape.value(logits).data))
    }

    /// Per-class mention probabilities.
    pub fn mention_probs(&self, audio: &[f64]) -> Result<Vec<f64>> {
        self.check_audio(audio)?;
        let mut f = Forward::new(self);
        let a = f.tape.leaf(Tensor::row_vector(audio));
        let logits = f.mlp(a, &self.layout.omd);
        Ok(f
            .tape
            .value(logits)
            .data
            .iter()
            .map(|&z| 1.0 / (1.0 + (-z).exp()))
            .collect())
    }

    /// Classes whose mention probability reaches `threshold`.
    pub fn detect_mentions(&self, audio: &[f64], threshold: f64) -> Result<BTreeSet<usize>> {
        threshold_mentions(&self.mention_probs(audio)?, threshold)
    }

    /// Candidate distribution for a given grouping. Returns the distribution
    /// and whether cross-attention had nothing to attend to.
    pub fn candidate_distribution(&self, scene: &PreparedScene, grouping: &Grouping) -> Result<(Vec<f64>, bool)> {
        if grouping.candidates.is_empty() {
            return Ok((Vec::new(), grouping.relational.is_empty()));
        }
        let mut f = Forward::new(self);
        let a = f.tape.leaf(Tensor::row_vector(&scene.audio));
        let (logits, no_rel) = f.ground_logits(scene, grouping, a);
        Ok((softmax(&f.tape.value(logits).data), no_rel))
    }

    /// Full inference: classify the audio, detect mentions, group objects by
    /// the predicted classes, attend and score the candidates.
    pub fn ground_prepared(&self, scene: &PreparedScene) -> Result<Grounding> {
        let probs = self.classify_audio(&scene.audio)?;
        let predicted_class = argmax(&probs);
        let mut mentions = self.detect_mentions(&scene.audio, self.config.omd_threshold)?;
        mentions.remove(&predicted_class);
        let grouping = group_by_class(&scene.classes, predicted_class, &mentions);
        let (distribution, no_relational) = self.candidate_distribution(scene, &grouping)?;
        let winner = (!distribution.is_empty()).then(|| grouping.candidates[argmax(&distribution)]);
        Ok(Grounding {
            predicted_class,
            mentions,
            grouping,
            distribution,
            winner,
            no_relational,
        })
    }

    pub fn ground(&self, scene: &Scene) -> Result<Grounding> {
        self.ground_prepared(&self.prepare(scene)?)
    }

    /// Batch-mean loss terms of the training objective, with ground-truth
    /// grouping.
    pub fn joint_loss(&self, scenes: &[PreparedScene]) -> Result<LossParts> {
        Ok(self.loss_and_gradient(scenes, false)?.0)
    }

    /// Loss terms and, when requested, the gradient of the total with
    /// respect to every parameter tensor (in [`Self::tensors`] order).
    pub fn loss_and_gradient(&self, scenes: &[PreparedScene], with_grad: bool) -> Result<(LossParts, Vec<Tensor>)> {
        if scenes.is_empty() {
            return Err(Error::usage("the loss needs at least one scene"));
        }
        let n = scenes.len() as f64;
        let [la, lb, lc] = self.config.loss_weights;
        let mut parts = [0.0; 3];
        let mut grads: Vec<Tensor> = if with_grad {
            self.tensors.iter().map(|(_, t)| Tensor::zeros(t.rows, t.cols)).collect()
        } else {
            Vec::new()
        };
        for scene in scenes {
            if scene.audio.len() != self.config.stub.d_audio {
                return Err(Error::usage("scene audio does not match the model"));
            }
            let mut f = Forward::new(self);
            let a = f.tape.leaf(Tensor::row_vector(&scene.audio));

            let cls_logits = f.mlp(a, &self.layout.audio_cls);
            let l_audio = f.tape.cross_entropy(cls_logits, &[scene.target_class]);

            let omd_logits = f.mlp(a, &self.layout.omd);
            let targets: Vec<f64> = (0..self.config.num_classes)
                .map(|c| if scene.mentioned.contains(&c) { 1.0 } else { 0.0 })
                .collect();
            let l_omd = f.tape.bce_logits(omd_logits, Tensor::row_vector(&targets));

            let grouping = group_by_class(&scene.classes, scene.target_class, &scene.mentioned);
            let target_pos = grouping
                .candidates
                .iter()
                .position(|&i| i == scene.target_index)
                .ok_or_else(|| Error::data("target object is not among the candidates"))?;
            let (ground_logits, _) = f.ground_logits(scene, &grouping, a);
            let l_ground = f.tape.cross_entropy(ground_logits, &[target_pos]);

            let ta = f.tape.scale(l_audio, la);
            let tb = f.tape.scale(l_omd, lb);
            let tc = f.tape.scale(l_ground, lc);
            let tab = f.tape.add(ta, tb);
            let total = f.tape.add(tab, tc);

            for (p, v) in parts.iter_mut().zip([l_audio, l_omd, l_ground]) {
                *p += f.tape.value(v).data[0] / n;
            }
            if with_grad {
                let g = f.tape.backward(total);
                f.accumulate(&g, &mut grads, 1.0 / n);
            }
        }
        let loss = LossParts::combine(parts[0], parts[1], parts[2], self.config.loss_weights);
        if !loss.total.is_finite() {
            return Err(Error::numeric("loss is not finite"));
        }
        Ok((loss, grads))
    }
}

fn group_by_class(classes: &[usize], target: usize, mentioned: &BTreeSet<usize>) -> Grouping {
    let mut g = Grouping {
        candidates: Vec::new(),
        relational: Vec::new(),
    };
    for (i, &c) in classes.iter().enumerate() {
        if c == target {
            g.candidates.push(i);
        } else if mentioned.contains(&c) {
            g.relational.push(i);
        }
    }
    g
}

/// First index of the maximum.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// One forward pass: a tape with every parameter registered as a leaf.
struct Forward<'m> {
    model: &'m GroundingModel,
    tape: Tape,
    vars: Vec<Var>,
}

impl<'m> Forward<'m> {
    fn new(model: &'m GroundingModel) -> Self {
        let mut tape = Tape::new();
        let vars = model.tensors.iter().map(|(_, t)| tape.leaf(t.clone())).collect();
        Self { model, tape, vars }
    }

    fn mlp(&mut self, x: Var, layers: &[(usize, usize)]) -> Var {
        let mut h = x;
        for (l, &(w, b)) in layers.iter().enumerate() {
            let z = self.tape.matmul(h, self.vars[w]);
            h = self.tape.add_row(z, self.vars[b]);
            if l + 1 < layers.len() {
                h = self.tape.relu(h);
            }
        }
        h
    }

    fn attention_vars(&self, layout: &AttnLayout) -> AttentionVars {
        AttentionVars {
            heads: layout
                .heads
                .iter()
                .map(|h| HeadVars {
                    wq: self.vars[h[0]],
                    wk: self.vars[h[1]],
                    wv: self.vars[h[2]],
                    wq_audio: self.vars[h[3]],
                    wk_audio: self.vars[h[4]],
                    wv_audio: self.vars[h[5]],
                })
                .collect(),
            wo: self.vars[layout.wo],
            d_head: self.model.config.d_head,
        }
    }

    /// `1 x candidates` logits of the grounding head on `O + O' + O''`.
    fn ground_logits(&mut self, scene: &PreparedScene, grouping: &Grouping, audio: Var) -> (Var, bool) {
        let d = self.model.config.stub.object_dim();
        let rows = |idx: &[usize]| idx.iter().map(|&i| scene.features[i].clone()).collect::<Vec<_>>();
        let o = self.tape.leaf(Tensor::from_rows(&rows(&grouping.candidates), d));

        let mut o_self = o;
        for layer in &self.model.layout.self_attn {
            let vars = self.attention_vars(layer);
            o_self = attend(&mut self.tape, o_self, o_self, audio, &vars);
        }

        let no_rel = grouping.relational.is_empty();
        let o_cross = if no_rel {
            self.tape.leaf(Tensor::zeros(grouping.candidates.len(), d))
        } else {
            let r = self.tape.leaf(Tensor::from_rows(&rows(&grouping.relational), d));
            let mut q = o;
            for layer in &self.model.layout.cross_attn {
                let vars = self.attention_vars(layer);
                q = attend(&mut self.tape, q, r, audio, &vars);
            }
            q
        };

        let sum = self.tape.add(o, o_self);
        let agg = self.tape.add(sum, o_cross);
        let scores = self.mlp(agg, &self.model.layout.head);
        (self.tape.transpose(scores), no_rel)
    }

    fn accumulate(&self, g: &Gradients, into: &mut [Tensor], weight: f64) {
        for (acc, v) in into.iter_mut().zip(&self.vars) {
            if let Some(t) = g.get(*v) {
                for (a, x) in acc.data.iter_mut().zip(&t.data) {
                    *a += weight * x;
                }
            }
        }
    }
}
