//! Synthetic FDD channel datasets and domain transforms.

mod dataset;
mod geometry;
mod transform;

pub use dataset::{
    generate_dataset, mean_channel, sample_seed, split_dir, Dataset, Manifest, Split, ARRAY_DTYPE, ARRAY_LAYOUT,
    DATASET_FORMAT_VERSION,
};
pub use geometry::{generate_sample, los_component, steering_vector, CMatrix, ChannelSample, GeometryConfig};
pub use transform::{to_delay, to_frequency};
