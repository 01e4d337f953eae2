//! Scene objects, the backbone stubs and the seeded synthetic-scene generator.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One segmented object: `K x 6` points (xyz in meters, rgb in `[0, 1]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<[f64; 6]>,
    pub class_id: usize,
    /// Center xyz followed by size xyz.
    pub bbox: [f64; 6],
    /// Precomputed object representation, used when `points` is elided.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature: Option<Vec<f64>>,
}

impl SceneObject {
    /// Builds an object whose box is derived from its points.
    pub fn from_points(points: Vec<[f64; 6]>, class_id: usize) -> Result<Self> {
        let bbox = bbox_of(&points)?;
        Ok(Self {
            points,
            class_id,
            bbox,
            feature: None,
        })
    }

    pub fn center(&self) -> [f64; 3] {
        [self.bbox[0], self.bbox[1], self.bbox[2]]
    }
}

/// Center (per-axis mean) and size (per-axis extent) of a point set.
pub fn bbox_of(points: &[[f64; 6]]) -> Result<[f64; 6]> {
    if points.is_empty() {
        return Err(Error::data("object has no points"));
    }
    let sorted = canonical_order(points);
    let mut out = [0.0; 6];
    for axis in 0..3 {
        let mean = sorted.iter().map(|p| p[axis]).sum::<f64>() / points.len() as f64;
        let max = points.iter().map(|p| p[axis]).fold(f64::NEG_INFINITY, f64::max);
        let min = points.iter().map(|p| p[axis]).fold(f64::INFINITY, f64::min);
        out[axis] = mean;
        out[axis + 3] = max - min;
    }
    Ok(out)
}

/// Sorting before summation makes pooled statistics exactly independent of
/// point order.
fn canonical_order(points: &[[f64; 6]]) -> Vec<[f64; 6]> {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    sorted
}

/// Spatial relation between the target and the mentioned anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    LeftOf = 0,
    RightOf = 1,
    NearestTo = 2,
}

impl Relation {
    pub const COUNT: usize = 3;

    pub fn from_id(id: usize) -> Result<Self> {
        match id {
            0 => Ok(Self::LeftOf),
            1 => Ok(Self::RightOf),
            2 => Ok(Self::NearestTo),
            _ => Err(Error::data(format!("unknown relation id {id}"))),
        }
    }
}

/// What the spoken description says.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub target_class: usize,
    pub mentioned_classes: BTreeSet<usize>,
    pub relation_id: usize,
    pub target_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub objects: Vec<SceneObject>,
    pub utterance: Utterance,
    pub seed: u64,
}

impl Scene {
    /// Checks the internal consistency of the utterance against the objects.
    pub fn validate(&self, num_classes: usize) -> Result<()> {
        let u = &self.utterance;
        let target = self.objects.get(u.target_index).ok_or_else(|| {
            Error::data(format!(
                "target_index {} out of range for {} objects",
                u.target_index,
                self.objects.len()
            ))
        })?;
        if target.class_id != u.target_class {
            return Err(Error::data("target_index does not point at an object of target_class"));
        }
        Relation::from_id(u.relation_id)?;
        for o in &self.objects {
            if o.class_id >= num_classes {
                return Err(Error::data(format!(
                    "class id {} out of range for {num_classes} classes",
                    o.class_id
                )));
            }
            if o.bbox.iter().any(|x| !x.is_finite())
                || o.points.iter().flatten().any(|x| !x.is_finite())
            {
                return Err(Error::data("non-finite object geometry"));
            }
        }
        for c in &u.mentioned_classes {
            if !self.objects.iter().any(|o| o.class_id == *c) {
                return Err(Error::data(format!("mentioned class {c} is not present in the scene")));
            }
        }
        Ok(())
    }
}

/// Dimensions and seed of the fixed backbone stubs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StubConfig {
    pub d_obj: usize,
    pub d_lab: usize,
    pub d_audio: usize,
    pub embed_seed: u64,
}

impl Default for StubConfig {
    fn default() -> Self {
        Self {
            d_obj: 32,
            d_lab: 8,
            d_audio: 32,
            embed_seed: 0,
        }
    }
}

impl StubConfig {
    /// Length of an object representation.
    pub fn object_dim(&self) -> usize {
        self.d_obj + self.d_lab + 6
    }
}

/// `[o_obj, o_label, o_center, o_size]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectRepresentation {
    pub feature: Vec<f64>,
    d_obj: usize,
    d_lab: usize,
}

impl ObjectRepresentation {
    pub fn obj(&self) -> &[f64] {
        &self.feature[..self.d_obj]
    }
    pub fn label(&self) -> &[f64] {
        &self.feature[self.d_obj..self.d_obj + self.d_lab]
    }
    pub fn center(&self) -> &[f64] {
        let s = self.d_obj + self.d_lab;
        &self.feature[s..s + 3]
    }
    pub fn size(&self) -> &[f64] {
        let s = self.d_obj + self.d_lab + 3;
        &self.feature[s..s + 3]
    }
}

const POOLED_STATS: usize = 12;

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Object representation from the seeded stand-in backbone: a fixed random
/// projection of pooled statistics of the unit-ball-normalized points, a
/// fixed embedding row for the class, then the box center and size.
/// Objects without points must carry a precomputed `feature`.
pub fn object_feature_stub(obj: &SceneObject, cfg: &StubConfig) -> Result<ObjectRepresentation> {
    if obj.points.is_empty() {
        let feature = obj
            .feature
            .clone()
            .ok_or_else(|| Error::data("object has neither points nor a precomputed feature"))?;
        if feature.len() != cfg.object_dim() || feature.iter().any(|x| !x.is_finite()) {
            return Err(Error::data(format!(
                "precomputed feature must hold {} finite values",
                cfg.object_dim()
            )));
        }
        return Ok(ObjectRepresentation {
            feature,
            d_obj: cfg.d_obj,
            d_lab: cfg.d_lab,
        });
    }

    let bbox = bbox_of(&obj.points)?;
    let sorted = canonical_order(&obj.points);
    let k = sorted.len() as f64;
    let normalized: Vec<[f64; 6]> = {
        let shifted: Vec<[f64; 6]> = sorted
            .iter()
            .map(|p| [p[0] - bbox[0], p[1] - bbox[1], p[2] - bbox[2], p[3], p[4], p[5]])
            .collect();
        let radius = shifted
            .iter()
            .map(|p| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt())
            .fold(0.0, f64::max);
        let inv = if radius > 0.0 { 1.0 / radius } else { 0.0 };
        shifted
            .iter()
            .map(|p| [p[0] * inv, p[1] * inv, p[2] * inv, p[3], p[4], p[5]])
            .collect()
    };
    let mut stats = [0.0; POOLED_STATS];
    for axis in 0..3 {
        stats[axis] = normalized.iter().map(|p| p[axis]).sum::<f64>() / k;
        stats[3 + axis] = normalized.iter().map(|p| p[axis]).fold(f64::NEG_INFINITY, f64::max);
        stats[6 + axis] = normalized.iter().map(|p| p[axis]).fold(f64::INFINITY, f64::min);
        stats[9 + axis] = normalized.iter().map(|p| p[3 + axis]).sum::<f64>() / k;
    }

    let mut feature = Vec::with_capacity(cfg.object_dim());
    let mut proj = stream_rng(cfg.embed_seed, 0);
    let scale = 1.0 / (POOLED_STATS as f64).sqrt();
    for _ in 0..cfg.d_obj {
        let v: f64 = stats.iter().map(|s| s * gaussian(&mut proj) * scale).sum();
        feature.push(v);
    }
    feature.extend(label_embedding(obj.class_id, cfg));
    feature.extend_from_slice(&bbox);
    Ok(ObjectRepresentation {
        feature,
        d_obj: cfg.d_obj,
        d_lab: cfg.d_lab,
    })
}

fn label_embedding(class_id: usize, cfg: &StubConfig) -> Vec<f64> {
    let mut rng = stream_rng(cfg.embed_seed, 1 + class_id as u64);
    (0..cfg.d_lab).map(|_| gaussian(&mut rng)).collect()
}

/// Seed of the fixed tables that stand in for the audio encoder.
const AUDIO_TABLE_SEED: u64 = 0x5eed_a0d1;
/// Standard deviation of the per-utterance audio noise.
pub const AUDIO_NOISE: f64 = 0.1;

fn audio_row(kind: u64, index: usize, d_audio: usize) -> Vec<f64> {
    let mut rng = stream_rng(AUDIO_TABLE_SEED, (kind << 32) | index as u64);
    (0..d_audio).map(|_| gaussian(&mut rng)).collect()
}

/// Audio vector of an utterance: fixed embeddings of the target class, each
/// mentioned class and the relation, plus seeded noise.
pub fn scene_audio(utterance: &Utterance, seed: u64, d_audio: usize) -> Vec<f64> {
    let mut a = audio_row(0, utterance.target_class, d_audio);
    let rows = utterance
        .mentioned_classes
        .iter()
        .map(|&c| audio_row(1, c, d_audio))
        .chain(std::iter::once(audio_row(2, utterance.relation_id, d_audio)));
    for row in rows {
        for (x, y) in a.iter_mut().zip(row) {
            *x += y;
        }
    }
    let mut noise = stream_rng(seed, u64::MAX);
    for x in &mut a {
        *x += AUDIO_NOISE * gaussian(&mut noise);
    }
    a
}

/// Settings of the synthetic-scene generator.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub num_scenes: usize,
    pub num_classes: usize,
    pub points_per_object: usize,
    pub min_objects: usize,
    pub max_objects: usize,
    /// Target-class distribution; uniform when `None`.
    pub class_prior: Option<Vec<f64>>,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            num_scenes: 2000,
            num_classes: 6,
            points_per_object: 16,
            min_objects: 3,
            max_objects: 10,
            class_prior: None,
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    fn validate(&self) -> Result<Vec<f64>> {
        if self.num_classes < 2 {
            return Err(Error::usage("the generator needs at least 2 classes"));
        }
        if self.points_per_object < 1 {
            return Err(Error::usage("objects need at least one point"));
        }
        if self.min_objects < 3 || self.max_objects < self.min_objects || self.max_objects > 10 {
            return Err(Error::usage("object counts must satisfy 3 <= min <= max <= 10"));
        }
        if self.num_classes == 2 && self.min_objects > 5 {
            return Err(Error::usage(
                "with 2 classes a scene holds at most 4 candidates plus the anchor",
            ));
        }
        let prior = match &self.class_prior {
            None => vec![1.0 / self.num_classes as f64; self.num_classes],
            Some(p) => {
                let total: f64 = p.iter().sum();
                if p.len() != self.num_classes || p.iter().any(|x| !(*x >= 0.0)) || !(total > 0.0) {
                    return Err(Error::usage("class prior must hold one non-negative weight per class"));
                }
                p.iter().map(|x| x / total).collect()
            }
        };
        Ok(prior)
    }
}

/// Per-class size (xyz extent) and color.
fn class_geometry(class_id: usize) -> ([f64; 3], [f64; 3]) {
    let mut rng = stream_rng(AUDIO_TABLE_SEED ^ 0x6e0, class_id as u64);
    let size = [rng.gen_range(0.2..0.8), rng.gen_range(0.2..0.8), rng.gen_range(0.3..1.2)];
    let color = [rng.gen(), rng.gen(), rng.gen()];
    (size, color)
}

fn sample_object(rng: &mut ChaCha8Rng, class_id: usize, xy: [f64; 2], k: usize) -> Result<SceneObject> {
    let (base_size, color) = class_geometry(class_id);
    let size: Vec<f64> = base_size.iter().map(|s| s * rng.gen_range(0.9..1.1)).collect();
    let points = (0..k)
        .map(|_| {
            let mut p = [0.0; 6];
            p[0] = xy[0] + (rng.gen::<f64>() - 0.5) * size[0];
            p[1] = xy[1] + (rng.gen::<f64>() - 0.5) * size[1];
            p[2] = rng.gen::<f64>() * size[2];
            for c in 0..3 {
                p[3 + c] = (color[c] + 0.05 * gaussian(rng)).clamp(0.0, 1.0);
            }
            p
        })
        .collect();
    SceneObject::from_points(points, class_id)
}

fn planar_distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// True when `target` is the only candidate satisfying `relation` with
/// respect to `anchor` (box centers, horizontal plane).
pub fn relation_holds(relation: Relation, anchor: [f64; 3], target: [f64; 3], others: &[[f64; 3]]) -> bool {
    match relation {
        Relation::LeftOf => target[0] < anchor[0] && others.iter().all(|o| o[0] > anchor[0]),
        Relation::RightOf => target[0] > anchor[0] && others.iter().all(|o| o[0] < anchor[0]),
        Relation::NearestTo => {
            let d = planar_distance(target, anchor);
            others.iter().all(|o| planar_distance(*o, anchor) > 2.0 * d)
        }
    }
}

fn generate_one(seed: u64, cfg: &GeneratorConfig, prior: &[f64]) -> Result<Scene> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target_class = {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut chosen = cfg.num_classes - 1;
        for (c, p) in prior.iter().enumerate() {
            acc += p;
            if u < acc {
                chosen = c;
                break;
            }
        }
        chosen
    };
    let anchor_class = {
        let c = rng.gen_range(0..cfg.num_classes - 1);
        if c >= target_class {
            c + 1
        } else {
            c
        }
    };
    let relation = Relation::from_id(rng.gen_range(0..Relation::COUNT))?;
    let max_objects = if cfg.num_classes == 2 {
        cfg.max_objects.min(5)
    } else {
        cfg.max_objects
    };
    let num_objects = rng.gen_range(cfg.min_objects..=max_objects);
    let num_candidates = if cfg.num_classes == 2 {
        num_objects - 1
    } else {
        rng.gen_range(2..=(num_objects - 1).min(4))
    };
    let num_distractors = num_objects - 1 - num_candidates;

    loop {
        let anchor_xy = [rng.gen_range(1.5..2.5), rng.gen_range(1.5..2.5)];
        let mut candidate_xy = Vec::with_capacity(num_candidates);
        for i in 0..num_candidates {
            let xy = match relation {
                Relation::LeftOf | Relation::RightOf => {
                    let side = if (i == 0) == (relation == Relation::LeftOf) { -1.0 } else { 1.0 };
                    [anchor_xy[0] + side * rng.gen_range(0.4..1.4), rng.gen_range(0.3..3.7)]
                }
                Relation::NearestTo => {
                    let r = if i == 0 {
                        rng.gen_range(0.5..0.9)
                    } else {
                        rng.gen_range(1.9..2.5)
                    };
                    let angle = rng.gen_range(0.0..std::f64::consts::TAU);
                    [anchor_xy[0] + r * angle.cos(), anchor_xy[1] + r * angle.sin()]
                }
            };
            candidate_xy.push(xy);
        }

        let k = cfg.points_per_object;
        let anchor = sample_object(&mut rng, anchor_class, anchor_xy, k)?;
        let candidates: Vec<SceneObject> = candidate_xy
            .iter()
            .map(|&xy| sample_object(&mut rng, target_class, xy, k))
            .collect::<Result<_>>()?;
        let mut distractors = Vec::with_capacity(num_distractors);
        for _ in 0..num_distractors {
            let mut c = rng.gen_range(0..cfg.num_classes - 2);
            for taken in [target_class.min(anchor_class), target_class.max(anchor_class)] {
                if c >= taken {
                    c += 1;
                }
            }
            let xy = [rng.gen_range(0.3..3.7), rng.gen_range(0.3..3.7)];
            distractors.push(sample_object(&mut rng, c, xy, k)?);
        }

        let others: Vec<[f64; 3]> = candidates[1..].iter().map(SceneObject::center).collect();
        if !relation_holds(relation, anchor.center(), candidates[0].center(), &others) {
            continue;
        }

        let mut objects: Vec<(bool, SceneObject)> = vec![(false, anchor)];
        objects.extend(candidates.into_iter().enumerate().map(|(i, o)| (i == 0, o)));
        objects.extend(distractors.into_iter().map(|o| (false, o)));
        objects.shuffle(&mut rng);
        let target_index = objects.iter().position(|(t, _)| *t).expect("target placed");
        return Ok(Scene {
            objects: objects.into_iter().map(|(_, o)| o).collect(),
            utterance: Utterance {
                target_class,
                mentioned_classes: BTreeSet::from([anchor_class]),
                relation_id: relation as usize,
                target_index,
            },
            seed,
        });
    }
}

/// Deterministic synthetic dataset. Each scene holds one anchor object of
/// the mentioned class, at least two objects of the target class and
/// distractors of other classes; the relation singles out the target.
pub fn generate_scenes(cfg: &GeneratorConfig) -> Result<Vec<Scene>> {
    let prior = cfg.validate()?;
    let mut seeds = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.num_scenes)
        .map(|_| generate_one(seeds.gen(), cfg, &prior))
        .collect()
}

/// Writes one JSON object per line.
pub fn write_scenes<W: Write>(scenes: &[Scene], mut out: W) -> Result<()> {
    for s in scenes {
        let line = serde_json::to_string(s).map_err(|e| Error::data(e.to_string()))?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Reads a JSON-lines dataset; blank lines are skipped.
pub fn read_scenes<R: BufRead>(input: R) -> Result<Vec<Scene>> {
    let mut scenes = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(|e| match e.kind() {
            std::io::ErrorKind::InvalidData => Error::data(format!("line {}: not UTF-8", n + 1)),
            _ => Error::Io(e),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let scene: Scene =
            serde_json::from_str(&line).map_err(|e| Error::data(format!("line {}: {e}", n + 1)))?;
        scenes.push(scene);
    }
    Ok(scenes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> GeneratorConfig {
        GeneratorConfig {
            num_scenes: 20,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn same_seed_same_dataset() {
        let a = generate_scenes(&small(4)).unwrap();
        let b = generate_scenes(&small(4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_scenes(&small(5)).unwrap());
    }

    #[test]
    fn scenes_are_valid() {
        for s in generate_scenes(&small(9)).unwrap() {
            s.validate(6).unwrap();
            assert!((3..=10).contains(&s.objects.len()));
            let n = s
                .objects
                .iter()
                .filter(|o| o.class_id == s.utterance.target_class)
                .count();
            assert!(n >= 2);
        }
    }

    #[test]
    fn unsatisfiable_configs() {
        let bad = [
            GeneratorConfig { num_classes: 1, ..small(0) },
            GeneratorConfig { points_per_object: 0, ..small(0) },
            GeneratorConfig { min_objects: 2, ..small(0) },
            GeneratorConfig { max_objects: 11, ..small(0) },
            GeneratorConfig { class_prior: Some(vec![1.0; 5]), ..small(0) },
        ];
        for cfg in bad {
            assert!(matches!(generate_scenes(&cfg), Err(Error::Usage(_))));
        }
    }

    #[test]
    fn two_classes_supported() {
        let cfg = GeneratorConfig { num_classes: 2, max_objects: 5, ..small(1) };
        for s in generate_scenes(&cfg).unwrap() {
            s.validate(2).unwrap();
        }
    }

    #[test]
    fn jsonl_round_trip() {
        let scenes = generate_scenes(&small(2)).unwrap();
        let mut buf = Vec::new();
        write_scenes(&scenes, &mut buf).unwrap();
        let back = read_scenes(buf.as_slice()).unwrap();
        assert_eq!(scenes, back);
    }

    #[test]
    fn elided_points_use_feature() {
        let cfg = StubConfig::default();
        let obj = SceneObject {
            points: vec![],
            class_id: 1,
            bbox: [0.0; 6],
            feature: Some(vec![0.5; cfg.object_dim()]),
        };
        assert_eq!(object_feature_stub(&obj, &cfg).unwrap().feature, vec![0.5; 46]);
        let missing = SceneObject { feature: None, ..obj.clone() };
        assert!(object_feature_stub(&missing, &cfg).is_err());
        let short = SceneObject { feature: Some(vec![0.0; 3]), ..obj };
        assert!(object_feature_stub(&short, &cfg).is_err());
    }

    #[test]
    fn audio_is_deterministic() {
        let u = Utterance {
            target_class: 2,
            mentioned_classes: BTreeSet::from([4]),
            relation_id: 1,
            target_index: 0,
        };
        assert_eq!(scene_audio(&u, 7, 32), scene_audio(&u, 7, 32));
        assert_ne!(scene_audio(&u, 7, 32), scene_audio(&u, 8, 32));
    }
}
