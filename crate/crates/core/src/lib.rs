//! Class-incremental point-cloud classification that replays samples drawn
//! from per-class statistical shape models instead of stored exemplars.
//!
//! Modules, bottom-up:
//!
//! - [`geometry`]: normalization, farthest point sampling, correspondence
//! - [`shapemodel`]: mean + modes per class, sampling, `MIR3` persistence
//! - [`network`]: mini point network with hand-written backpropagation
//! - [`losses`]: cross-entropy, distillation, focal loss, GMR penalty
//! - [`continual`]: task schedule, session training, evaluation, metrics
//! - [`data`]: synthetic benchmark, OFF reader, cloud cache, manifests
//! - [`cli`]: the `shapecl` subcommands

pub mod cli;
pub mod config;
pub mod continual;
pub mod data;
pub mod error;
pub mod geometry;
mod io;
pub mod linalg;
pub mod losses;
pub mod network;
pub mod optim;
pub mod rng;
pub mod shapemodel;

pub use error::{Error, Result};
