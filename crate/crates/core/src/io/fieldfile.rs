//! Binary snapshot format.
//!
//! All integers and floats are little-endian.
//!
//! | offset | size | content                                   |
//! |-------:|-----:|-------------------------------------------|
//! | 0      | 4    | magic `TFLD`                              |
//! | 4      | 4    | format version (u32, currently 1)         |
//! | 8      | 4    | dimension `d` (u32)                       |
//! | 12     | 4    | modes per axis `n` (u32)                  |
//! | 16     | 4    | rank code: 0 scalar, 1 vector, 2 matrix   |
//! | 20     | 8    | time (f64)                                |
//! | 28     | 8    | regularization level δ (f64)              |
//! | 36     | 8·c·nᵈ | samples (f64), component-major          |
//! | end    | 4    | CRC-32 (IEEE) of every preceding byte     |
//!
//! Within a component, samples are row-major: the last axis varies
//! fastest, grid point `(i₁, …, i_d)` sitting at `x = 2π i / n`. A matrix
//! field stores its `d²` entries row by row. A trajectory file is a plain
//! concatenation of records.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::evolution::Trajectory;
use crate::spectral::{Field, Rank, TorusGrid};

pub const MAGIC: &[u8; 4] = b"TFLD";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 36;
const TRAILER_LEN: usize = 4;

/// A decoded record.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldRecord {
    pub field: Field,
    pub time: f64,
    pub delta: f64,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::FieldFile(msg.into())
}

/// Appends one record for `field` to `out`.
pub fn encode_field(out: &mut Vec<u8>, field: &Field, time: f64, delta: f64) {
    let g = field.grid();
    let start = out.len();
    out.reserve(HEADER_LEN + 8 * field.n_components() * g.len() + TRAILER_LEN);
    out.extend_from_slice(MAGIC);
    for v in [VERSION, g.d() as u32, g.n() as u32, field.rank().code()] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&time.to_le_bytes());
    out.extend_from_slice(&delta.to_le_bytes());
    for c in field.components() {
        for v in c {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out[start..]);
    out.extend_from_slice(&crc.to_le_bytes());
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().expect("four bytes"))
}

fn f64_at(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().expect("eight bytes"))
}

/// Decodes the record at the start of `bytes`, returning it with the number
/// of bytes consumed.
pub fn decode_field(bytes: &[u8]) -> Result<(FieldRecord, usize)> {
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!(
            "truncated header ({} of {HEADER_LEN} bytes)",
            bytes.len()
        )));
    }
    if &bytes[..4] != MAGIC {
        return Err(bad("bad magic, not a field file"));
    }
    let version = u32_at(bytes, 4);
    if version != VERSION {
        return Err(bad(format!(
            "version mismatch: file has {version}, reader supports {VERSION}"
        )));
    }
    let (d, n, code) = (
        u32_at(bytes, 8) as usize,
        u32_at(bytes, 12) as usize,
        u32_at(bytes, 16),
    );
    let grid = TorusGrid::new(d, n).map_err(|e| bad(format!("bad grid in header: {e}")))?;
    let rank = Rank::from_code(code).ok_or_else(|| bad(format!("unknown rank code {code}")))?;
    let ncomp = rank.components(d);
    let payload = 8 * ncomp * grid.len();
    let total = HEADER_LEN + payload + TRAILER_LEN;
    if bytes.len() < total {
        return Err(bad(format!(
            "truncated record ({} of {total} bytes)",
            bytes.len()
        )));
    }
    let stored = u32_at(bytes, HEADER_LEN + payload);
    let actual = crc32fast::hash(&bytes[..HEADER_LEN + payload]);
    if stored != actual {
        return Err(bad(format!(
            "checksum mismatch (stored {stored:08x}, computed {actual:08x})"
        )));
    }
    let comps = (0..ncomp)
        .map(|c| {
            let base = HEADER_LEN + 8 * c * grid.len();
            (0..grid.len())
                .map(|i| f64_at(bytes, base + 8 * i))
                .collect()
        })
        .collect();
    let field = Field::from_components(grid, rank, comps)?;
    let rec = FieldRecord {
        field,
        time: f64_at(bytes, 20),
        delta: f64_at(bytes, 28),
    };
    Ok((rec, total))
}

/// Writes through a temporary sibling and a rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn save_field(path: &Path, field: &Field, time: f64, delta: f64) -> Result<()> {
    let mut buf = Vec::new();
    encode_field(&mut buf, field, time, delta);
    write_atomic(path, &buf)
}

/// Reads a single-record file; trailing bytes are an error.
pub fn load_field(path: &Path) -> Result<FieldRecord> {
    let bytes = fs::read(path)?;
    let (rec, used) = decode_field(&bytes)?;
    if used != bytes.len() {
        return Err(bad(format!(
            "{} trailing bytes after the record",
            bytes.len() - used
        )));
    }
    Ok(rec)
}

/// One record per snapshot, stamped with its time.
pub fn encode_trajectory(tr: &Trajectory, delta: f64) -> Vec<u8> {
    let mut buf = Vec::new();
    for (i, s) in tr.states().iter().enumerate() {
        encode_field(&mut buf, s, tr.time(i), delta);
    }
    buf
}

/// Inverse of [`encode_trajectory`]; the step is recovered from the time
/// stamps, which must be `i · dt` exactly as written.
pub fn decode_trajectory(bytes: &[u8], dt: f64) -> Result<(Trajectory, f64)> {
    let mut states = Vec::new();
    let mut at = 0;
    let mut delta = f64::NAN;
    while at < bytes.len() {
        let (rec, used) = decode_field(&bytes[at..])?;
        let expect = states.len() as f64 * dt;
        if rec.time.to_bits() != expect.to_bits() {
            return Err(bad(format!(
                "snapshot {} has time {}, expected {expect}",
                states.len(),
                rec.time
            )));
        }
        if states.is_empty() {
            delta = rec.delta;
        } else if rec.delta.to_bits() != delta.to_bits() {
            return Err(bad("snapshots disagree on delta"));
        }
        states.push(rec.field);
        at += used;
    }
    if states.is_empty() {
        return Err(bad("empty trajectory file"));
    }
    Ok((Trajectory::new(dt, states)?, delta))
}

pub fn save_trajectory(path: &Path, tr: &Trajectory, delta: f64) -> Result<()> {
    write_atomic(path, &encode_trajectory(tr, delta))
}

pub fn load_trajectory(path: &Path, dt: f64) -> Result<(Trajectory, f64)> {
    decode_trajectory(&fs::read(path)?, dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Field {
        let g = TorusGrid::new(2, 4).unwrap();
        Field::vector_from_fn(g, |x| [x[0].sin() - 0.25, (x[0] + 2.0 * x[1]).cos(), 0.0])
    }

    #[test]
    fn header_layout_is_fixed() {
        let f = sample();
        let mut b = Vec::new();
        encode_field(&mut b, &f, 0.5, 1e-3);
        assert_eq!(b.len(), 36 + 8 * 2 * 16 + 4);
        assert_eq!(&b[..4], b"TFLD");
        assert_eq!(b[4..20], [1, 0, 0, 0, 2, 0, 0, 0, 4, 0, 0, 0, 1, 0, 0, 0]);
        assert_eq!(b[20..28], 0.5f64.to_le_bytes());
        assert_eq!(b[28..36], 1e-3f64.to_le_bytes());
        // second sample of the first component is grid point (0, 1)
        assert_eq!(b[44..52], f.comp(0)[1].to_le_bytes());
        let crc = crc32fast::hash(&b[..b.len() - 4]);
        assert_eq!(b[b.len() - 4..], crc.to_le_bytes());
    }

    #[test]
    fn corruption_is_detected() {
        let mut b = Vec::new();
        encode_field(&mut b, &sample(), 0.0, 0.0);
        let mut flipped = b.clone();
        flipped[100] ^= 1;
        assert!(
            matches!(decode_field(&flipped), Err(Error::FieldFile(m)) if m.contains("checksum"))
        );
        let mut v2 = b.clone();
        v2[4] = 2;
        assert!(matches!(decode_field(&v2), Err(Error::FieldFile(m)) if m.contains("version")));
        assert!(
            matches!(decode_field(&b[..HEADER_LEN]), Err(Error::FieldFile(m)) if m.contains("truncated"))
        );
        assert!(
            matches!(decode_field(&b[..20]), Err(Error::FieldFile(m)) if m.contains("truncated"))
        );
        let mut rank = b.clone();
        rank[16] = 7;
        assert!(matches!(decode_field(&rank), Err(Error::FieldFile(m)) if m.contains("rank")));
    }

    #[test]
    fn trajectory_round_trip() {
        let f = sample();
        let tr = Trajectory::new(0.1, vec![f.clone(), f.scaled(2.0), f.scaled(-0.5)]).unwrap();
        let (back, delta) = decode_trajectory(&encode_trajectory(&tr, 1e-4), 0.1).unwrap();
        assert_eq!(back, tr);
        assert_eq!(delta, 1e-4);
        assert!(decode_trajectory(&encode_trajectory(&tr, 0.0), 0.2).is_err());
    }
}
