//! Edge-contrastive user embeddings.
//!
//! A user is represented by one linear map per feature block, concatenated
//! and passed through dense layers to a `d`-vector. Each edge type has its
//! own `d x d` projection (a source/target pair when direction matters), and
//! training pulls projected endpoints of observed edges together. Since the
//! representation reads features only, unseen users can be embedded too.

mod checkpoint;
mod loss;
mod model;
mod tensor;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use loss::{cosine, mnr_loss, triplet_loss};
pub use model::{Activation, Architecture, DirectionRole, EdgeSide, EmbedModel, Embeddings};
pub use tensor::{Params, TensorSpec};
pub use train::{train, Batch, LossKind, Objective, TrainConfig, TrainReport, Weighting};
