//! Output files. Every file is written to a temporary sibling and renamed
//! into place, so a reader never sees a partial file.

use std::io::Write;
use std::path::Path;

use oldroyd_core::diagnostics::DiagnosticsRecord;
use oldroyd_core::FlowState;
use serde::Serialize;

use crate::error::{CliError, Result};

pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}

/// CSV bytes with a header row taken from the field names of `T`.
pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.into_error()))
}

pub fn write_records(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    atomic_write(path, &csv_bytes(records)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}

/// Binary snapshot layout, all little-endian:
///
/// ```text
/// b"OBSF" | u32 version | u32 d | u32 n | u32 components | u32 flags | f64 t | f64 samples...
/// ```
///
/// Components are `u₁..u_d` followed by the upper triangle of `τ` in row-major
/// order; each holds `n^d` physical samples in row-major grid order.
pub mod snapshot {
    use oldroyd_core::field::sym_len;
    use oldroyd_core::spectral::inverse_transform;

    use super::*;

    pub const MAGIC: &[u8; 4] = b"OBSF";
    pub const VERSION: u32 = 1;
    /// Samples are physical-space values.
    pub const FLAG_PHYSICAL: u32 = 1;

    #[derive(Debug, Clone, PartialEq)]
    pub struct Snapshot {
        pub d: u32,
        pub n: u32,
        pub flags: u32,
        pub t: f64,
        pub components: Vec<Vec<f64>>,
    }

    impl Snapshot {
        pub fn from_state(state: &FlowState) -> Result<Self> {
            let grid = state.grid();
            let components = state.fields().map(inverse_transform).collect::<oldroyd_core::Result<Vec<_>>>()?;
            Ok(Self { d: grid.dim() as u32, n: grid.n() as u32, flags: FLAG_PHYSICAL, t: state.t, components })
        }

        pub fn encode(&self) -> Vec<u8> {
            let len: usize = self.components.iter().map(Vec::len).sum();
            let mut out = Vec::with_capacity(32 + 8 * len);
            out.extend_from_slice(MAGIC);
            for v in [VERSION, self.d, self.n, self.components.len() as u32, self.flags] {
                out.extend_from_slice(&v.to_le_bytes());
            }
            out.extend_from_slice(&self.t.to_le_bytes());
            for c in &self.components {
                for x in c {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
            out
        }

        pub fn decode(bytes: &[u8]) -> Result<Self> {
            let bad = |m: &str| CliError::Config(vec![format!("malformed snapshot: {m}")]);
            if bytes.len() < 32 || &bytes[..4] != MAGIC {
                return Err(bad("missing header"));
            }
            let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().expect("4 bytes"));
            let (version, d, n, count, flags) = (word(0), word(1), word(2), word(3), word(4));
            if version != VERSION {
                return Err(bad(&format!("unsupported version {version}")));
            }
            if !(d == 2 || d == 3) || count as usize != d as usize + sym_len(d as usize) {
                return Err(bad("inconsistent dimension or component count"));
            }
            let t = f64::from_le_bytes(bytes[24..32].try_into().expect("8 bytes"));
            let per = (n as usize).pow(d);
            if bytes.len() != 32 + 8 * per * count as usize {
                return Err(bad("payload length does not match header"));
            }
            let components = (0..count as usize)
                .map(|c| {
                    (0..per)
                        .map(|i| {
                            let at = 32 + 8 * (c * per + i);
                            f64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"))
                        })
                        .collect()
                })
                .collect();
            Ok(Self { d, n, flags, t, components })
        }
    }
}
