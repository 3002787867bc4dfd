//! Binary field snapshots.
//!
//! Layout, all little-endian: magic `EMH1`, version `u32`, dims `3 x u64`,
//! spacings `3 x f64`, time `f64`, constants `(hbar, c, eps0, l)` as `f64`,
//! then `G_a` as `(re, im)` pairs, component-major with z fastest.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::field::{GridSpec, SpinorField};

pub const MAGIC: &[u8; 4] = b"EMH1";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 3 * 8 + 3 * 8 + 8 + 4 * 8;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub t: f64,
    pub consts: PhysicalConstants,
    pub spinor: SpinorField,
}

impl FieldSnapshot {
    pub fn grid(&self) -> GridSpec {
        self.spinor.grid
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let grid = self.spinor.grid;
        let mut out = Vec::with_capacity(HEADER_LEN + grid.len() * 48);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        for d in grid.dims {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        let k = self.consts;
        for v in grid.spacing.iter().chain(&[self.t, k.hbar, k.c, k.eps0, k.l]) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for a in 0..3 {
            for g in &self.spinor.g {
                out.extend_from_slice(&g[a].re.to_le_bytes());
                out.extend_from_slice(&g[a].im.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Snapshot(format!("truncated header ({} bytes)", bytes.len())));
        }
        if &bytes[..4] != MAGIC {
            return Err(Error::Snapshot(format!("bad magic {:?}", &bytes[..4])));
        }
        let mut cur = Cursor { bytes, pos: 4 };
        let version = u32::from_le_bytes(cur.take());
        if version != VERSION {
            return Err(Error::Snapshot(format!("unsupported version {version}")));
        }
        let dims = [0; 3].map(|_| u64::from_le_bytes(cur.take()));
        let spacing = [0; 3].map(|_| cur.f64());
        let t = cur.f64();
        let consts = PhysicalConstants {
            hbar: cur.f64(),
            c: cur.f64(),
            eps0: cur.f64(),
            l: cur.f64(),
        };
        let dims = dims.map(|d| usize::try_from(d).unwrap_or(usize::MAX));
        let n = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .filter(|n| n.checked_mul(48).is_some_and(|b| HEADER_LEN + b == bytes.len()))
            .ok_or_else(|| Error::Snapshot(format!("payload size does not match dims {dims:?}")))?;
        let grid = GridSpec { dims, spacing };
        grid.validate().map_err(|e| Error::Snapshot(e.to_string()))?;
        let mut g = vec![Vector3::<Complex64>::zeros(); n];
        for a in 0..3 {
            for v in g.iter_mut() {
                v[a] = Complex64::new(cur.f64(), cur.f64());
            }
        }
        Ok(Self {
            t,
            consts,
            spinor: SpinorField { grid, g },
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .map_err(|e| Error::Snapshot(format!("{}: {e}", path.display())))?
            .read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let out = self.bytes[self.pos..self.pos + N].try_into().expect("length checked");
        self.pos += N;
        out
    }

    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FieldSnapshot {
        let grid = GridSpec::new([2, 1, 3], [0.5, 1.0, 0.25]).unwrap();
        let g = (0..6)
            .map(|p| Vector3::from_fn(|a, _| Complex64::new(p as f64 + 0.1 * a as f64, -(a as f64) / 3.0)))
            .collect();
        FieldSnapshot {
            t: 0.125,
            consts: PhysicalConstants {
                eps0: 2.0,
                ..Default::default()
            },
            spinor: SpinorField { grid, g },
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let s = sample();
        let bytes = s.to_bytes();
        assert_eq!(bytes.len(), HEADER_LEN + 6 * 48);
        let back = FieldSnapshot::from_bytes(&bytes).unwrap();
        assert_eq!(back.to_bytes(), bytes);
        assert_eq!(back, s);
    }

    #[test]
    fn component_major_layout() {
        let bytes = sample().to_bytes();
        // first value of the second component block: G_0 at point 0
        let off = HEADER_LEN + 6 * 16;
        let re = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
        assert_eq!(re, 0.1);
    }

    #[test]
    fn rejects_corruption() {
        let mut bytes = sample().to_bytes();
        assert!(FieldSnapshot::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        bytes[0] = b'X';
        assert!(matches!(FieldSnapshot::from_bytes(&bytes), Err(Error::Snapshot(_))));
    }
}
