//! Little-endian binary formats: `LCF1` field snapshots and `LCB1`
//! boundary controls.
//!
//! `LCF1`: magic, kind tag (u32), nx, ny, component count (u32 each), time
//! (f64); face fields then list `(rows, cols)` per component as u32 pairs.
//! The payload stores each component array in turn, row-major, as f64.
//!
//! `LCB1`: magic, m (u64), number of time levels (u64), then the triples
//! `h[j][n]` with `j` the slow index.

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::grid::{CellField, FaceField, Grid, ScalarField, VectorField3};
use crate::state::DirectorBC;

pub const FIELD_MAGIC: [u8; 4] = *b"LCF1";
pub const CONTROL_MAGIC: [u8; 4] = *b"LCB1";
/// Allowed `| |h| - 1 |` for stored control triples.
pub const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic bytes {found:?}, expected {expected:?}")]
    MagicMismatch { expected: [u8; 4], found: [u8; 4] },
    #[error("file truncated at byte offset {offset} (needed {needed} more bytes)")]
    Truncated { offset: usize, needed: usize },
    #[error("control triple (j = {j}, n = {n}) has norm {norm}")]
    NormViolation { j: usize, n: usize, norm: f64 },
    #[error("malformed header: {0}")]
    Header(String),
    #[error("{len} trailing bytes after payload")]
    Trailing { len: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Payload kind of a snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum FieldKind {
    Scalar = 0,
    Director = 1,
    Velocity = 2,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldData {
    Scalar(ScalarField),
    Director(VectorField3),
    Velocity(FaceField),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub nx: usize,
    pub ny: usize,
    pub time: f64,
    pub data: FieldData,
}

impl FieldSnapshot {
    pub fn kind(&self) -> FieldKind {
        match self.data {
            FieldData::Scalar(_) => FieldKind::Scalar,
            FieldData::Director(_) => FieldKind::Director,
            FieldData::Velocity(_) => FieldKind::Velocity,
        }
    }

    pub fn scalar(grid: &Grid, f: &ScalarField, time: f64) -> Self {
        Self { nx: grid.nx(), ny: grid.ny(), time, data: FieldData::Scalar(f.clone()) }
    }

    pub fn director(grid: &Grid, f: &VectorField3, time: f64) -> Self {
        Self { nx: grid.nx(), ny: grid.ny(), time, data: FieldData::Director(f.clone()) }
    }

    pub fn velocity(grid: &Grid, u: &FaceField, time: f64) -> Self {
        Self { nx: grid.nx(), ny: grid.ny(), time, data: FieldData::Velocity(u.clone()) }
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        let left = self.buf.len() - self.pos;
        if left < n {
            return Err(FormatError::Truncated { offset: self.buf.len(), needed: n - left });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn magic(&mut self, expected: [u8; 4]) -> Result<(), FormatError> {
        let found: [u8; 4] = self.take(4)?.try_into().expect("4 bytes");
        if found != expected {
            return Err(FormatError::MagicMismatch { expected, found });
        }
        Ok(())
    }

    fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64, FormatError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, FormatError> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| FormatError::Header("payload size overflows".into()))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }

    fn finish(&self) -> Result<(), FormatError> {
        match self.buf.len() - self.pos {
            0 => Ok(()),
            len => Err(FormatError::Trailing { len }),
        }
    }
}

fn put_f64s(out: &mut Vec<u8>, vals: impl IntoIterator<Item = f64>) {
    for v in vals {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn planar<const C: usize>(f: &CellField<C>) -> impl Iterator<Item = f64> + '_ {
    (0..C).flat_map(move |c| f.data.iter().map(move |v| v[c]))
}

fn from_planar<const C: usize>(nx: usize, ny: usize, vals: &[f64]) -> CellField<C> {
    let n = nx * ny;
    CellField { nx, ny, data: (0..n).map(|k| std::array::from_fn(|c| vals[c * n + k])).collect() }
}

pub fn encode_field(s: &FieldSnapshot) -> Vec<u8> {
    let comps: u32 = match s.data {
        FieldData::Scalar(_) => 1,
        FieldData::Director(_) => 3,
        FieldData::Velocity(_) => 2,
    };
    let mut out = Vec::new();
    out.extend_from_slice(&FIELD_MAGIC);
    for v in [s.kind() as u32, s.nx as u32, s.ny as u32, comps] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&s.time.to_le_bytes());
    match &s.data {
        FieldData::Scalar(f) => put_f64s(&mut out, planar(f)),
        FieldData::Director(f) => put_f64s(&mut out, planar(f)),
        FieldData::Velocity(u) => {
            for v in [s.ny as u32, s.nx as u32 + 1, s.ny as u32 + 1, s.nx as u32] {
                out.extend_from_slice(&v.to_le_bytes());
            }
            put_f64s(&mut out, u.data.iter().copied());
        }
    }
    out
}

pub fn decode_field(buf: &[u8]) -> Result<FieldSnapshot, FormatError> {
    let mut c = Cursor { buf, pos: 0 };
    c.magic(FIELD_MAGIC)?;
    let kind = c.u32()?;
    let (nx, ny, comps) = (c.u32()? as usize, c.u32()? as usize, c.u32()? as usize);
    let time = c.f64()?;
    let expect = |want: usize| {
        if comps == want {
            Ok(())
        } else {
            Err(FormatError::Header(format!("kind {kind} needs {want} components, header says {comps}")))
        }
    };
    let data = match kind {
        0 => {
            expect(1)?;
            FieldData::Scalar(from_planar(nx, ny, &c.f64s(nx * ny)?))
        }
        1 => {
            expect(3)?;
            FieldData::Director(from_planar(nx, ny, &c.f64s(3 * nx * ny)?))
        }
        2 => {
            expect(2)?;
            let dims = [c.u32()?, c.u32()?, c.u32()?, c.u32()?].map(|v| v as usize);
            if dims != [ny, nx + 1, ny + 1, nx] {
                return Err(FormatError::Header(format!("face dimensions {dims:?} do not match {nx} x {ny}")));
            }
            let n = (nx + 1) * ny + nx * (ny + 1);
            FieldData::Velocity(FaceField { nx, ny, data: c.f64s(n)? })
        }
        k => return Err(FormatError::Header(format!("unknown field kind {k}"))),
    };
    c.finish()?;
    Ok(FieldSnapshot { nx, ny, time, data })
}

pub fn encode_control(h: &DirectorBC) -> Vec<u8> {
    let (m, levels) = (h.m(), h.levels());
    let mut out = Vec::with_capacity(20 + 24 * m * levels);
    out.extend_from_slice(&CONTROL_MAGIC);
    out.extend_from_slice(&(m as u64).to_le_bytes());
    out.extend_from_slice(&(levels as u64).to_le_bytes());
    for j in 0..m {
        for n in 0..levels {
            put_f64s(&mut out, h.row(n)[j]);
        }
    }
    out
}

pub fn decode_control(buf: &[u8]) -> Result<DirectorBC, FormatError> {
    let mut c = Cursor { buf, pos: 0 };
    c.magic(CONTROL_MAGIC)?;
    let (m, levels) = (c.u64()? as usize, c.u64()? as usize);
    if m == 0 || levels == 0 {
        return Err(FormatError::Header(format!("empty control ({m} samples, {levels} levels)")));
    }
    let vals = c.f64s(m.checked_mul(levels).and_then(|x| x.checked_mul(3)).ok_or_else(|| FormatError::Header("size overflows".into()))?)?;
    c.finish()?;
    let mut rows = vec![vec![[0.0; 3]; m]; levels];
    for j in 0..m {
        for (n, row) in rows.iter_mut().enumerate() {
            let k = 3 * (j * levels + n);
            let v = [vals[k], vals[k + 1], vals[k + 2]];
            let norm = crate::state::norm3(&v);
            if !((norm - 1.0).abs() <= NORM_TOL) {
                return Err(FormatError::NormViolation { j, n, norm });
            }
            row[j] = v;
        }
    }
    Ok(DirectorBC::from_rows(rows))
}

fn read_all(path: &Path) -> Result<Vec<u8>, FormatError> {
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    Ok(buf)
}

fn write_all(path: &Path, bytes: &[u8]) -> Result<(), FormatError> {
    std::fs::File::create(path)?.write_all(bytes)?;
    Ok(())
}

pub fn write_field(path: &Path, s: &FieldSnapshot) -> Result<(), FormatError> {
    write_all(path, &encode_field(s))
}

pub fn read_field(path: &Path) -> Result<FieldSnapshot, FormatError> {
    decode_field(&read_all(path)?)
}

pub fn write_control(path: &Path, h: &DirectorBC) -> Result<(), FormatError> {
    write_all(path, &encode_control(h))
}

pub fn read_control(path: &Path) -> Result<DirectorBC, FormatError> {
    decode_control(&read_all(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{forward_problem, unit_spec, Preset};

    fn bits(v: &[f64]) -> Vec<u64> {
        v.iter().map(|x| x.to_bits()).collect()
    }

    #[test]
    fn snapshots_round_trip_bit_exact() {
        let pr = forward_problem(Preset::Driven, unit_spec(6, 3, 0.2)).unwrap();
        let traj = pr.simulate().unwrap();
        let s = &traj.states[2];
        let g = &pr.grid;
        for snap in [FieldSnapshot::velocity(g, &s.u, s.t), FieldSnapshot::director(g, &s.d, s.t), FieldSnapshot::scalar(g, &s.p, s.t)] {
            let bytes = encode_field(&snap);
            let back = decode_field(&bytes).unwrap();
            assert_eq!(back.time.to_bits(), snap.time.to_bits());
            match (&back.data, &snap.data) {
                (FieldData::Velocity(a), FieldData::Velocity(b)) => assert_eq!(bits(&a.data), bits(&b.data)),
                (FieldData::Director(a), FieldData::Director(b)) => assert_eq!(a, b),
                (FieldData::Scalar(a), FieldData::Scalar(b)) => assert_eq!(a, b),
                _ => panic!("kind changed"),
            }
            assert_eq!(encode_field(&back), bytes);
        }
        let bytes = encode_field(&FieldSnapshot::director(g, &s.d, 0.5));
        assert_eq!(bytes.len(), 4 + 16 + 8 + 6 * 6 * 3 * 8);
    }

    #[test]
    fn control_round_trip_and_errors() {
        let pr = forward_problem(Preset::Driven, unit_spec(6, 3, 0.2)).unwrap();
        let bytes = encode_control(&pr.bc);
        let back = decode_control(&bytes).unwrap();
        assert_eq!(back, pr.bc);
        assert_eq!(encode_control(&back), bytes);
        assert_eq!(bytes.len(), 20 + 24 * 24 * 4);
        // first triple is h[0][0], second h[0][1]
        assert_eq!(f64::from_le_bytes(bytes[44..52].try_into().unwrap()), pr.bc.row(1)[0][0]);

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_control(&bad), Err(FormatError::MagicMismatch { .. })));
        assert!(matches!(decode_field(&bytes), Err(FormatError::MagicMismatch { .. })));

        let cut = &bytes[..bytes.len() - 5];
        match decode_control(cut) {
            Err(FormatError::Truncated { offset, needed }) => assert_eq!((offset, needed), (cut.len(), 5)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(decode_control(&bytes[..10]), Err(FormatError::Truncated { offset: 10, .. })));

        let mut off = bytes.clone();
        off[20..28].copy_from_slice(&2.0f64.to_le_bytes());
        assert!(matches!(decode_control(&off), Err(FormatError::NormViolation { j: 0, n: 0, .. })));

        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(decode_control(&long), Err(FormatError::Trailing { len: 1 })));
    }

    #[test]
    fn file_round_trip() {
        let pr = forward_problem(Preset::Hemisphere, unit_spec(5, 2, 0.2)).unwrap();
        let dir = std::env::temp_dir().join(format!("lcb-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("h.lcb");
        write_control(&p, &pr.bc).unwrap();
        assert_eq!(read_control(&p).unwrap(), pr.bc);
        let f = dir.join("d.lcf");
        write_field(&f, &FieldSnapshot::director(&pr.grid, &pr.init.d0, 0.0)).unwrap();
        assert_eq!(read_field(&f).unwrap().data, FieldData::Director(pr.init.d0.clone()));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
