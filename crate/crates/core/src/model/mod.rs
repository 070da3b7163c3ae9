//! Toy pose-transfer model: per-patch extractors and generator around the
//! pNR layer, two discriminators, the four-term loss, Adam and the
//! training loops.

mod adam;
mod checkpoint;
mod config;
mod loss;
mod net;
mod train;

pub use adam::{AdamParams, AdamState};
pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::{DataConfig, Mode, TrainConfig};
pub use loss::{
    disc_loss_on_tape, gen_gan_loss_on_tape, l1_on_tape, loss_gan, loss_l1, perceptual_on_tape, total_loss,
    total_loss_on_tape, LossComponents, LossWeights,
};
pub use net::{
    appearance_on_tape, extract_appearance, extract_pose, generate_image, generate_on_tape, pose_on_tape, Activation,
    Arch, Dense, DiscriminatorNodes, GeneratorNodes, Mlp, MlpNodes, ModelParams, Side, NET_NAMES,
};
pub use train::{heldout_l1, infer, infer_multishot, Sample, StepReport, Trainer};
