//! Analog CSI feedback: a convolutional autoencoder whose bottleneck symbols
//! are sent uncoded over the uplink, with the channel and MRC inside the
//! training graph as fixed layers.

mod link;
mod model;
mod spec;
mod train;

pub use link::{features_to_symbols, group_features, link_backward, link_forward, symbols_to_features, LinkTrace};
pub use model::{analog_forward, analog_forward_batch, build_analog_model, uplink_taps, AnalogModel, FeatureCodec};
pub use spec::{spec_for_overhead, AnalogModelSpec, REFERENCE_WIDTH};
pub use train::{loss_and_grad, train_analog, train_analog_with, AnalogCheckpoint, AnalogMeta, EpochReport};
