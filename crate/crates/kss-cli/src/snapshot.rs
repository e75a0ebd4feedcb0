//! KSSF field snapshots: a fixed 64-byte header followed by the raw field
//! values as little-endian f64 in row-major order, last axis fastest. One
//! file per field per snapshot time.
//!
//! Header layout (all integers little-endian):
//!   bytes  0..4   magic "KSSF"
//!   bytes  4..8   format version (u32, currently 1)
//!   bytes  8..12  dimension (u32, 2 or 3)
//!   bytes 12..36  cells per axis (3 x u64; unused axes are 1)
//!   bytes 36..40  field kind tag (u32)
//!   bytes 40..64  zero padding

use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use kss_core::{Grid, ScalarField, SimState};

pub const MAGIC: &[u8; 4] = b"KSSF";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 64;

/// Field kind tags. Velocity components are stored at cell centers
/// (face-averaged), so every snapshot of a run shares one shape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    N = 0,
    C = 1,
    P = 2,
    Ux = 3,
    Uy = 4,
    Uz = 5,
}

impl FieldKind {
    pub fn tag(self) -> u32 {
        self as u32
    }

    pub fn from_tag(tag: u32) -> Option<FieldKind> {
        match tag {
            0 => Some(FieldKind::N),
            1 => Some(FieldKind::C),
            2 => Some(FieldKind::P),
            3 => Some(FieldKind::Ux),
            4 => Some(FieldKind::Uy),
            5 => Some(FieldKind::Uz),
            _ => None,
        }
    }

    pub fn file_stem(self) -> &'static str {
        match self {
            FieldKind::N => "n",
            FieldKind::C => "c",
            FieldKind::P => "p",
            FieldKind::Ux => "ux",
            FieldKind::Uy => "uy",
            FieldKind::Uz => "uz",
        }
    }
}

#[derive(Debug)]
pub enum SnapshotError {
    Io(std::io::Error),
    Format(String),
}

impl fmt::Display for SnapshotError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SnapshotError::Io(e) => write!(f, "snapshot io: {e}"),
            SnapshotError::Format(m) => write!(f, "snapshot format: {m}"),
        }
    }
}

impl std::error::Error for SnapshotError {}

impl From<std::io::Error> for SnapshotError {
    fn from(e: std::io::Error) -> Self {
        SnapshotError::Io(e)
    }
}

fn header(grid: Grid, kind: FieldKind) -> [u8; HEADER_LEN] {
    let mut h = [0u8; HEADER_LEN];
    h[0..4].copy_from_slice(MAGIC);
    h[4..8].copy_from_slice(&VERSION.to_le_bytes());
    h[8..12].copy_from_slice(&(grid.dim() as u32).to_le_bytes());
    for d in 0..3 {
        let cells = if d < grid.dim() { grid.cells(d) as u64 } else { 1 };
        h[12 + 8 * d..20 + 8 * d].copy_from_slice(&cells.to_le_bytes());
    }
    h[36..40].copy_from_slice(&kind.tag().to_le_bytes());
    h
}

/// Write one cell-centered field. Values are already stored last axis
/// fastest, so they stream out directly.
pub fn write_field(
    path: &Path,
    grid: Grid,
    kind: FieldKind,
    values: &[f64],
) -> Result<(), SnapshotError> {
    if values.len() != grid.cell_count() {
        return Err(SnapshotError::Format(format!(
            "value count {} does not match grid ({} cells)",
            values.len(),
            grid.cell_count()
        )));
    }
    let mut f = File::create(path)?;
    f.write_all(&header(grid, kind))?;
    let mut buf = Vec::with_capacity(values.len() * 8);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    f.write_all(&buf)?;
    f.sync_all()?;
    Ok(())
}

/// Parsed snapshot file.
pub struct Snapshot {
    pub dim: u32,
    pub cells: [u64; 3],
    pub kind: FieldKind,
    pub values: Vec<f64>,
}

pub fn read_field(path: &Path) -> Result<Snapshot, SnapshotError> {
    let mut f = File::open(path)?;
    let mut h = [0u8; HEADER_LEN];
    f.read_exact(&mut h)?;
    if &h[0..4] != MAGIC {
        return Err(SnapshotError::Format("bad magic".into()));
    }
    let version = u32::from_le_bytes(h[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(SnapshotError::Format(format!("unsupported version {version}")));
    }
    let dim = u32::from_le_bytes(h[8..12].try_into().unwrap());
    if dim != 2 && dim != 3 {
        return Err(SnapshotError::Format(format!("bad dimension {dim}")));
    }
    let mut cells = [1u64; 3];
    for d in 0..3 {
        cells[d] = u64::from_le_bytes(h[12 + 8 * d..20 + 8 * d].try_into().unwrap());
    }
    let tag = u32::from_le_bytes(h[36..40].try_into().unwrap());
    let kind = FieldKind::from_tag(tag)
        .ok_or_else(|| SnapshotError::Format(format!("unknown field kind tag {tag}")))?;
    if h[40..].iter().any(|&b| b != 0) {
        return Err(SnapshotError::Format("nonzero header padding".into()));
    }
    let count = (cells[0] * cells[1] * cells[2]) as usize;
    let mut raw = Vec::new();
    f.read_to_end(&mut raw)?;
    if raw.len() != count * 8 {
        return Err(SnapshotError::Format(format!(
            "payload is {} bytes, expected {}",
            raw.len(),
            count * 8
        )));
    }
    let values = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Snapshot {
        dim,
        cells,
        kind,
        values,
    })
}

/// Face-averaged cell-centered copy of one velocity component.
fn centered_component(state: &SimState, axis: usize) -> Vec<f64> {
    let grid = state.n.grid();
    let mut out = vec![0.0; grid.cell_count()];
    let shape = grid.face_shape(axis);
    let comp = state.u.comp(axis);
    let nc = grid.counts();
    let mut k = 0;
    for i0 in 0..nc[0] {
        for i1 in 0..nc[1] {
            for i2 in 0..nc[2] {
                let i = [i0, i1, i2];
                let mut hi = i;
                hi[axis] += 1;
                out[k] = 0.5 * (comp[flat(shape, i)] + comp[flat(shape, hi)]);
                k += 1;
            }
        }
    }
    out
}

fn flat(shape: [usize; 3], i: [usize; 3]) -> usize {
    (i[0] * shape[1] + i[1]) * shape[2] + i[2]
}

fn scalar_values(s: &ScalarField) -> &[f64] {
    s.values()
}

/// Write every field of a state under `dir` with names like `n_t0.250000.kssf`.
pub fn write_state(dir: &Path, state: &SimState, t: f64) -> Result<(), SnapshotError> {
    let grid = state.n.grid();
    let stamp = format!("{t:.6}");
    let scalar_fields: [(FieldKind, &ScalarField); 3] = [
        (FieldKind::N, &state.n),
        (FieldKind::C, &state.c),
        (FieldKind::P, &state.p),
    ];
    for (kind, field) in scalar_fields {
        let path = dir.join(format!("{}_t{stamp}.kssf", kind.file_stem()));
        write_field(&path, grid, kind, scalar_values(field))?;
    }
    let vec_kinds = [FieldKind::Ux, FieldKind::Uy, FieldKind::Uz];
    for (axis, kind) in vec_kinds.into_iter().enumerate().take(grid.dim()) {
        let path = dir.join(format!("{}_t{stamp}.kssf", kind.file_stem()));
        write_field(&path, grid, kind, &centered_component(state, axis))?;
    }
    Ok(())
}
