//! `MIR3` binary model files and the JSON model manifest.
//!
//! Layout, all integers u32 little-endian, all reals f64 little-endian:
//!
//! ```text
//! "MIR3" | version | n | k | len(class_id) | class_id (UTF-8)
//! mean (n*3) | modes (k*n*3) | sigmas (k)
//! ```
//!
//! Matrices are row-major.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Footprint, ShapeModel};
use crate::error::{Error, Result};
use crate::io::{ByteReader, ByteWriter};

pub const MODEL_MAGIC: [u8; 4] = *b"MIR3";
pub const MODEL_VERSION: u32 = 1;

pub fn write_model(model: &ShapeModel) -> Result<Vec<u8>> {
    model.validate()?;
    let mut w = ByteWriter::with_header(MODEL_MAGIC, MODEL_VERSION);
    w.u32(model.n() as u32);
    w.u32(model.k() as u32);
    w.string(&model.class_id);
    for p in &model.mean {
        w.f64s(p);
    }
    for mode in &model.modes {
        for p in mode {
            w.f64s(p);
        }
    }
    w.f64s(&model.sigmas);
    Ok(w.finish())
}

pub fn read_model(bytes: &[u8]) -> Result<ShapeModel> {
    let mut r = ByteReader::with_header(bytes, MODEL_MAGIC, MODEL_VERSION)?;
    let n = r.u32()? as usize;
    let k = r.u32()? as usize;
    let class_id = r.string()?;
    // refuse to allocate for a header that the payload cannot back
    r.expect_remaining(8 * (3 * n * (k + 1) + k))?;
    let mean = r.points(n)?;
    let modes = (0..k).map(|_| r.points(n)).collect::<Result<Vec<_>>>()?;
    let sigmas = r.f64_vec(k)?;
    r.finish()?;
    Ok(ShapeModel {
        class_id,
        mean,
        modes,
        sigmas,
    })
}

pub fn save_model(model: &ShapeModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = write_model(model)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ShapeModel> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_model(&bytes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifestEntry {
    pub class_id: String,
    pub path: String,
    pub units: usize,
    pub floats: usize,
}

/// Index of model files written for a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub models: Vec<ModelManifestEntry>,
    pub total: Footprint,
}

impl ModelManifest {
    pub fn from_entries(models: Vec<ModelManifestEntry>) -> Self {
        let total = models.iter().fold(
            Footprint {
                units: 0,
                floats: 0,
            },
            |acc, e| Footprint {
                units: acc.units + e.units,
                floats: acc.floats + e.floats,
            },
        );
        Self { models, total }
    }
}
