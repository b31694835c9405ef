//! Toy two-view self-supervised learning: MLP encoder/projector, InfoNCE and
//! VICReg with analytic gradients, Adam, and the adaptive α interpolation.

mod adam;
mod alpha;
mod checkpoint;
mod loss;
mod mlp;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use alpha::{compute_alpha, AlphaSchedule};
pub use checkpoint::{decode_model, encode_model, load_model, save_model};
pub use loss::{adadim_loss, info_nce_loss, vicreg_loss, AdaDimOutput, LossConfig, LossOutput, VicregOutput, VicregTerms};
pub use mlp::{backward, forward, ForwardCache, ForwardPass, Gradients, Layer, LayerGrad, MlpModel};
pub use train::{
    augment, evaluate_representations, train, train_on, write_trajectory_csv, AlphaMode, DataSource, RunConfig,
    TrainOutcome, TrajectoryRecord, TRAJECTORY_HEADER,
};
