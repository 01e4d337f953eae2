//! Audio-driven 3D visual grounding at toy scale: backbone stubs, audio
//! classification, object mention detection, object grouping, audio-guided
//! attention, the grounding head, the joint objective and a synthetic-scene
//! generator.

mod attention;
mod checkpoint;
mod model;
mod scene;
pub mod tape;
mod train;

pub use attention::{attention_weights, audio_guided_attention, AttentionOutput, AttentionParams, HeadParams};
pub use checkpoint::{read_checkpoint, write_checkpoint, FORMAT_VERSION, MAGIC};
pub use model::{
    group_objects, threshold_mentions, Grounding, GroundingModel, Grouping, LossParts, ModelConfig,
    PreparedScene,
};
pub use scene::{
    bbox_of, generate_scenes, object_feature_stub, read_scenes, relation_holds, scene_audio, write_scenes,
    GeneratorConfig, ObjectRepresentation, Relation, Scene, SceneObject, StubConfig, Utterance, AUDIO_NOISE,
};
pub use tape::Tensor;
pub use train::{evaluate, train_toy, EpochLog, EvalReport, Prf, TrainConfig};
