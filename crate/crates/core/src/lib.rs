//! Hide encrypted semantic records inside images with edge-adaptive LSB
//! embedding, then retrieve and rank a stego corpus with ontology-expanded
//! keyword queries.
//!
//! The modules follow the pipeline: [`imaging`] loads lossless rasters,
//! [`edges`] classifies pixels as edge or smooth, [`payload`] seals a
//! [`SemanticRecord`] into four keyed blocks, [`stego`] writes those blocks
//! into the image quadrants, [`semantics`] and [`retrieval`] annotate, expand
//! and rank, and [`metrics`] measures the distortion.

pub mod bits;
pub mod edges;
mod error;
pub mod imaging;
pub mod metrics;
pub mod payload;
pub mod retrieval;
pub mod semantics;
pub mod stego;
pub mod synth;

pub use error::{Error, Result};
pub use imaging::{load_image, save_image, ImageRaster};
pub use payload::{EncryptionKey, SemanticRecord, StegoKey};
pub use stego::{esha_embed, esha_extract, EmbedConfig, StegoImage};
