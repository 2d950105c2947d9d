//! Digital CSI feedback: a quantized-latent autoencoder trained for a
//! rate-distortion tradeoff, an arithmetic coder over a learned factorized
//! Laplace model, and a capacity-threshold feedback channel with mean-channel
//! fallback.

mod coder;
mod entropy;
mod model;
mod train;

pub use coder::{Bitstream, Decoder, Encoder, FreqTable, FREQ_TOTAL};
pub use entropy::{bits, bits_and_grad, scale_of, symbol_probabilities, BitsGrad, MIN_SCALE};
pub use model::{
    build_digital_model, decode_symbols, digital_decode, digital_encode, digital_encode_batch, digital_reconstruct,
    digital_transmit, estimated_bits, latent_symbols, quantize, DigitalCodec, DigitalModel, DigitalModelSpec,
    LatentCoder, DEFAULT_ALPHABET_BOUND,
};
pub use train::{
    dither_for, evaluate_digital, rd_loss_and_grad, train_digital, train_digital_with, DigitalCheckpoint,
    DigitalEpochReport, DigitalMeta,
};
