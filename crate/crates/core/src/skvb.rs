//! SKVB vector interchange files.
//!
//! A record is the magic `SKVB`, a version byte `0x01`, a dtype byte (`0` = f32,
//! `1` = f64), a little-endian `u64` element count and the little-endian payload.
//! A file holds one or more records back to back.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use crate::error::{invalid, Result};

pub const MAGIC: [u8; 4] = *b"SKVB";
pub const VERSION: u8 = 0x01;

#[derive(Clone, Debug, PartialEq)]
pub enum VectorData {
    F32(Vec<f32>),
    F64(Vec<f64>),
}

impl VectorData {
    pub fn len(&self) -> usize {
        match self {
            VectorData::F32(v) => v.len(),
            VectorData::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtype(&self) -> u8 {
        match self {
            VectorData::F32(_) => 0,
            VectorData::F64(_) => 1,
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            VectorData::F32(v) => v.iter().map(|&x| x as f64).collect(),
            VectorData::F64(v) => v.clone(),
        }
    }
}

impl From<Vec<f64>> for VectorData {
    fn from(v: Vec<f64>) -> Self {
        VectorData::F64(v)
    }
}

impl From<Vec<f32>> for VectorData {
    fn from(v: Vec<f32>) -> Self {
        VectorData::F32(v)
    }
}

pub fn write_record<W: Write>(w: &mut W, v: &VectorData) -> Result<()> {
    w.write_all(&MAGIC)?;
    w.write_all(&[VERSION, v.dtype()])?;
    w.write_all(&(v.len() as u64).to_le_bytes())?;
    match v {
        VectorData::F32(x) => x.iter().try_for_each(|e| w.write_all(&e.to_le_bytes()))?,
        VectorData::F64(x) => x.iter().try_for_each(|e| w.write_all(&e.to_le_bytes()))?,
    }
    Ok(())
}

/// Next record, or `None` at a clean end of input.
pub fn read_record<R: Read>(r: &mut R) -> Result<Option<VectorData>> {
    let mut head = [0u8; 14];
    let mut got = 0;
    while got < head.len() {
        match r.read(&mut head[got..]) {
            Ok(0) => break,
            Ok(k) => got += k,
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    if got == 0 {
        return Ok(None);
    }
    if got < head.len() {
        return invalid(format!("truncated SKVB header ({got} of 14 bytes)"));
    }
    if head[..4] != MAGIC {
        return invalid("bad SKVB magic");
    }
    if head[4] != VERSION {
        return invalid(format!("unsupported SKVB version {}", head[4]));
    }
    let len = u64::from_le_bytes(head[6..14].try_into().expect("8 bytes"));
    let len = usize::try_from(len).map_err(|_| crate::Error::InvalidArgument(format!("SKVB length {len} too large")))?;
    let width = match head[5] {
        0 => 4,
        1 => 8,
        d => return invalid(format!("unknown SKVB dtype {d}")),
    };
    let bytes = len
        .checked_mul(width)
        .ok_or_else(|| crate::Error::InvalidArgument(format!("SKVB length {len} too large")))?;
    let mut payload = Vec::new();
    r.take(bytes as u64).read_to_end(&mut payload)?;
    if payload.len() != bytes {
        return invalid(format!("truncated SKVB payload ({} of {bytes} bytes)", payload.len()));
    }
    Ok(Some(if width == 4 {
        VectorData::F32(payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect())
    } else {
        VectorData::F64(payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }))
}

pub fn read_all<R: Read>(r: &mut R) -> Result<Vec<VectorData>> {
    let mut out = Vec::new();
    while let Some(v) = read_record(r)? {
        out.push(v);
    }
    Ok(out)
}

pub fn write_file(path: impl AsRef<Path>, vectors: &[VectorData]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for v in vectors {
        write_record(&mut w, v)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_file(path: impl AsRef<Path>) -> Result<Vec<VectorData>> {
    read_all(&mut BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let mut buf = Vec::new();
        write_record(&mut buf, &VectorData::F32(vec![1.0, -2.0])).unwrap();
        assert_eq!(&buf[..6], b"SKVB\x01\x00");
        assert_eq!(&buf[6..14], &2u64.to_le_bytes());
        assert_eq!(&buf[14..18], &1.0f32.to_le_bytes());
        assert_eq!(buf.len(), 22);
    }

    #[test]
    fn round_trip_multiple_records() {
        let recs = vec![
            VectorData::F64(vec![0.5, f64::MIN_POSITIVE, -1e300]),
            VectorData::F32(vec![]),
            VectorData::F32(vec![3.25; 7]),
        ];
        let mut buf = Vec::new();
        recs.iter().for_each(|r| write_record(&mut buf, r).unwrap());
        assert_eq!(read_all(&mut buf.as_slice()).unwrap(), recs);
    }

    #[test]
    fn malformed_input_is_rejected() {
        let mut buf = Vec::new();
        write_record(&mut buf, &VectorData::F64(vec![1.0, 2.0])).unwrap();
        assert!(read_all(&mut &buf[..buf.len() - 1]).is_err());
        assert!(read_all(&mut &buf[..10]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_all(&mut bad.as_slice()).is_err());
        let mut bad = buf.clone();
        bad[4] = 2;
        assert!(read_all(&mut bad.as_slice()).is_err());
        let mut bad = buf;
        bad[5] = 9;
        assert!(read_all(&mut bad.as_slice()).is_err());
    }
}
