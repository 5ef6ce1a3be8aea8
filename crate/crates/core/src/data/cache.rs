//! `MIRP` point-cloud cache: `"MIRP" | version u32 | n u32 | n*3 f64`, all
//! little-endian, row-major.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::io::{ByteReader, ByteWriter};

pub const CLOUD_MAGIC: [u8; 4] = *b"MIRP";
pub const CLOUD_VERSION: u32 = 1;

pub fn write_cloud(pc: &PointCloud) -> Vec<u8> {
    let mut w = ByteWriter::with_header(CLOUD_MAGIC, CLOUD_VERSION);
    w.u32(pc.len() as u32);
    for p in &pc.points {
        w.f64s(p);
    }
    w.finish()
}

pub fn read_cloud(bytes: &[u8]) -> Result<PointCloud> {
    let mut r = ByteReader::with_header(bytes, CLOUD_MAGIC, CLOUD_VERSION)?;
    let n = r.u32()? as usize;
    r.expect_remaining(n * 24)?;
    let points = r.points(n)?;
    Ok(PointCloud::new(points))
}

pub fn save_cloud(pc: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_cloud(pc)).map_err(|e| Error::io(path, e))
}

pub fn load_cloud(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_cloud(&bytes)
}
