//! Formula-shaped recurrent policies assembled from shared per-token sub-networks.

mod checkpoint;
mod loss;
mod model;
mod params;
mod tape;

pub use checkpoint::{Checkpoint, CheckpointError, OptimizerSnapshot, MAGIC, VERSION};
pub use loss::{
    discounted_returns, loss_and_gradients, loss_with_targets, targets, LossConfig, LossError, LossParts, StepRecord,
};
pub use model::{
    argmax, softmax, token_keys, token_name, Architecture, AsmNode, AssembleError, Assembly, Cell, CraftExtractor,
    EpisodeState, ExtractorKind, FlatParams, Model, ModelConfig, StepOutput, TokenParams,
};
pub use params::{ConvParams, GruParams, LinearParams, ParamEntry, ParamStore};
pub use tape::{NodeId, Tape};
