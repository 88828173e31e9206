//! Binary snapshots of a perturbation field.
//!
//! Layout, all little-endian:
//!
//! | bytes | content                     |
//! |-------|-----------------------------|
//! | 8     | magic `BRTHLAB\0`           |
//! | 4     | format version (`u32`)      |
//! | 4     | scheme code (`u32`)         |
//! | 8     | box length `L` (`f64`)      |
//! | 8     | point count `N` (`u64`)     |
//! | 8     | time `t` (`f64`)            |
//! | 8     | Sobolev index `s` (`f64`)   |
//! | 16 N  | `(Re w, Im w)` per point    |

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid1D, PerturbationField};
use crate::solver::Scheme;

pub const MAGIC: [u8; 8] = *b"BRTHLAB\0";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 4 + 8 * 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub t: f64,
    pub s: f64,
    pub scheme: Scheme,
    pub field: PerturbationField,
}

impl Checkpoint {
    pub fn write_to(&self, mut out: impl Write) -> Result<()> {
        let grid = self.field.grid();
        let mut buf = Vec::with_capacity(HEADER_LEN + 16 * grid.points());
        buf.extend_from_slice(&MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&self.scheme.code().to_le_bytes());
        buf.extend_from_slice(&grid.length().to_le_bytes());
        buf.extend_from_slice(&(grid.points() as u64).to_le_bytes());
        buf.extend_from_slice(&self.t.to_le_bytes());
        buf.extend_from_slice(&self.s.to_le_bytes());
        for z in self.field.samples() {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        out.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(mut input: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        if bytes.len() < HEADER_LEN {
            return Err(Error::Checkpoint(format!("truncated header ({} bytes)", bytes.len())));
        }
        if bytes[..8] != MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
        let version = u32_at(8);
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let scheme = Scheme::from_code(u32_at(12))
            .ok_or_else(|| Error::Checkpoint(format!("unknown scheme code {}", u32_at(12))))?;
        let length = f64_at(16);
        let points = usize::try_from(u64_at(24)).map_err(|_| Error::Checkpoint("point count overflow".into()))?;
        let t = f64_at(32);
        let s = f64_at(40);
        let expected = points
            .checked_mul(16)
            .and_then(|p| p.checked_add(HEADER_LEN))
            .ok_or_else(|| Error::Checkpoint("point count overflow".into()))?;
        if bytes.len() != expected {
            return Err(Error::Checkpoint(format!("expected {expected} bytes, found {}", bytes.len())));
        }
        let grid = Grid1D::new(length, points).map_err(|e| Error::Checkpoint(e.to_string()))?;
        let samples = bytes[HEADER_LEN..]
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                    f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
                )
            })
            .collect();
        Ok(Self { t, s, scheme, field: PerturbationField::new(grid, samples)? })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}
