//! Checkpoint file format.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic   8 bytes  b"STRATCKP"
//! version u32      currently 1
//! count   u32      number of parameters
//! table   count entries:
//!           name_len u16, name utf-8 bytes,
//!           rank u8, dims rank * u32
//! data    raw 32-bit little-endian floats, parameters in table order
//! ```

use crate::error::{CoreError, Result};
use crate::params::ParamSet;
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"STRATCKP";
pub const VERSION: u32 = 1;

pub fn save<T: Scalar>(params: &ParamSet<T>, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(params.len() as u32).to_le_bytes())?;
    for (name, t) in params.iter() {
        let bytes = name.as_bytes();
        if bytes.len() > u16::MAX as usize {
            return Err(CoreError::Checkpoint(format!("parameter name too long: {name}")));
        }
        w.write_all(&(bytes.len() as u16).to_le_bytes())?;
        w.write_all(bytes)?;
        let shape = t.shape();
        w.write_all(&[shape.len() as u8])?;
        for &d in shape {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
    }
    for (_, t) in params.iter() {
        for v in t.data() {
            w.write_all(&(v.to_f64_lossy() as f32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load<T: Scalar>(path: &Path) -> Result<ParamSet<T>> {
    let file = std::fs::File::open(path)?;
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CoreError::Checkpoint(format!(
            "bad magic in {}: not a checkpoint file",
            path.display()
        )));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(CoreError::Checkpoint(format!(
            "unsupported checkpoint version {version} (expected {VERSION})"
        )));
    }
    let count = read_u32(&mut r)? as usize;

    let mut table = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = read_u16(&mut r)? as usize;
        let mut name_bytes = vec![0u8; name_len];
        r.read_exact(&mut name_bytes)?;
        let name = String::from_utf8(name_bytes)
            .map_err(|_| CoreError::Checkpoint("non-utf8 parameter name".into()))?;
        let mut rank = [0u8; 1];
        r.read_exact(&mut rank)?;
        let mut shape = Vec::with_capacity(rank[0] as usize);
        for _ in 0..rank[0] {
            shape.push(read_u32(&mut r)? as usize);
        }
        table.push((name, shape));
    }

    let mut params = ParamSet::new();
    for (name, shape) in table {
        let numel: usize = shape.iter().product();
        let mut bytes = vec![0u8; numel * 4];
        r.read_exact(&mut bytes)?;
        let data: Vec<T> = bytes
            .chunks_exact(4)
            .map(|c| T::cast(f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64))
            .collect();
        params.insert(&name, Tensor::new(&shape, data)?)?;
    }
    Ok(params)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u16<R: Read>(r: &mut R) -> Result<u16> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b)?;
    Ok(u16::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_preserves_order_names_shapes_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let mut params: ParamSet<f32> = ParamSet::new();
        params
            .insert("b.bias", Tensor::from_fn(&[3], |i| i as f32 - 1.5))
            .unwrap();
        params
            .insert("a.weight", Tensor::from_fn(&[2, 2], |i| i as f32 * 0.25))
            .unwrap();
        save(&params, &path).unwrap();
        let loaded: ParamSet<f32> = load(&path).unwrap();
        assert_eq!(loaded.names(), params.names());
        for (name, t) in params.iter() {
            assert_eq!(loaded.get(name).unwrap(), t);
        }
    }

    #[test]
    fn rejects_non_checkpoint_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.bin");
        std::fs::write(&path, b"not a checkpoint at all").unwrap();
        assert!(load::<f32>(&path).is_err());
    }
}
