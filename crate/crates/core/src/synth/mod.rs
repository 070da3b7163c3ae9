//! Seeded synthetic data: planted regression instances and toy person
//! images with pose heatmaps.

mod regression;
mod rng;
mod store;
mod toy;

pub use regression::{gen_regression_instance, RegressionInstance, SynthSpec};
pub use rng::SeededRng;
pub use store::{read_dataset, write_dataset, MANIFEST_FILE};
pub use toy::{
    gen_toy_dataset, render_pose_heatmap, Keypoints, Palette, Split, ToyDataset, ToyIdentity, ToySample, ToyView,
    BACKGROUND, HEATMAP_SIGMA, IMAGE_CHANNELS, IMAGE_SIZE, JOINTS,
};
