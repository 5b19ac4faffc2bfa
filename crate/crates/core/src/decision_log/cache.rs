//! Binary cube cache.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic        4 bytes  "DDD1"
//! flags        u8       bit 0: prediction array present
//! n_models     u32
//! n_epochs     u32
//! n_images     u32
//! models       n_models × (u32 len, id bytes, u32 len, condition bytes)
//! epochs       n_epochs × u32
//! images       n_images × (u32 len, id bytes, u32 true_label)
//! correctness  n_models × n_epochs planes, ceil(n_images / 8) bytes each;
//!              image i of a plane is bit (i % 8) of byte (i / 8), LSB first
//! predictions  optional, n_models × n_epochs × n_images u32, same plane order
//! checksum     u64 FNV-1a over every preceding byte
//! ```

use std::fs;
use std::path::Path;

use super::cube::{DecisionCube, ImageInfo, ModelInfo};
use crate::bits::BitPlane;
use crate::error::{Error, Result};
use crate::seed::fnv1a;

pub const CACHE_MAGIC: &[u8; 4] = b"DDD1";
const FLAG_PREDICTIONS: u8 = 1;

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len() as u32);
    out.extend_from_slice(s.as_bytes());
}

pub fn write_cache(cube: &DecisionCube) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CACHE_MAGIC);
    out.push(if cube.has_predictions() { FLAG_PREDICTIONS } else { 0 });
    put_u32(&mut out, cube.n_models() as u32);
    put_u32(&mut out, cube.n_epochs() as u32);
    put_u32(&mut out, cube.n_images() as u32);
    for m in cube.models() {
        put_str(&mut out, &m.id);
        put_str(&mut out, &m.condition);
    }
    for &e in cube.epochs() {
        put_u32(&mut out, e);
    }
    for im in cube.images() {
        put_str(&mut out, &im.id);
        put_u32(&mut out, im.true_label);
    }
    for plane in cube.planes() {
        out.extend_from_slice(&plane.to_bytes());
    }
    if let Some(preds) = cube.raw_predictions() {
        out.reserve(preds.len() * 4);
        for &p in preds {
            put_u32(&mut out, p);
        }
    }
    let sum = fnv1a(&out);
    out.extend_from_slice(&sum.to_le_bytes());
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::CorruptCache("unexpected end of data".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| Error::CorruptCache("invalid UTF-8 in id table".into()))
    }
}

pub fn read_cache(bytes: &[u8]) -> Result<DecisionCube> {
    if bytes.len() < CACHE_MAGIC.len() || &bytes[..4] != CACHE_MAGIC {
        return Err(Error::CorruptCache("bad magic number".into()));
    }
    if bytes.len() < 4 + 8 {
        return Err(Error::CorruptCache("truncated".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().expect("8 bytes"));
    if fnv1a(body) != stored {
        return Err(Error::CorruptCache("checksum mismatch".into()));
    }
    let mut r = Reader { buf: body, pos: 4 };
    let flags = r.take(1)?[0];
    if flags & !FLAG_PREDICTIONS != 0 {
        return Err(Error::CorruptCache(format!("unknown flags {flags:#04x}")));
    }
    let nm = r.u32()? as usize;
    let ne = r.u32()? as usize;
    let ni = r.u32()? as usize;
    let mut models = Vec::with_capacity(nm.min(1 << 16));
    for _ in 0..nm {
        let id = r.string()?;
        let condition = r.string()?;
        models.push(ModelInfo { id, condition });
    }
    let epochs = (0..ne).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
    let mut images = Vec::with_capacity(ni.min(1 << 20));
    for _ in 0..ni {
        let id = r.string()?;
        let true_label = r.u32()?;
        images.push(ImageInfo { id, true_label });
    }
    let plane_bytes = ni.div_ceil(8);
    let mut planes = Vec::with_capacity(nm * ne);
    for _ in 0..nm * ne {
        let plane = BitPlane::from_bytes(r.take(plane_bytes)?, ni)
            .ok_or_else(|| Error::CorruptCache("nonzero padding bits".into()))?;
        planes.push(plane);
    }
    let predictions = if flags & FLAG_PREDICTIONS != 0 {
        let n = nm * ne * ni;
        let raw = r.take(n.checked_mul(4).ok_or_else(|| Error::CorruptCache("size overflow".into()))?)?;
        Some(
            raw.chunks_exact(4)
                .map(|c| u32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect(),
        )
    } else {
        None
    };
    if r.pos != body.len() {
        return Err(Error::CorruptCache("trailing bytes".into()));
    }
    DecisionCube::from_parts(models, epochs, images, planes, predictions)
        .map_err(|e| Error::CorruptCache(e.to_string()))
}

pub fn save_cache(cube: &DecisionCube, path: &Path) -> Result<()> {
    fs::write(path, write_cache(cube))?;
    Ok(())
}

pub fn load_cache(path: &Path) -> Result<DecisionCube> {
    read_cache(&fs::read(path)?)
}
