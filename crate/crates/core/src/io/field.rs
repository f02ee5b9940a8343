use crate::error::{Error, Result};
use crate::refsolver::GridState;
use num_complex::Complex64 as C64;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

pub const FIELD_MAGIC: &[u8; 4] = b"MBO1";
pub const FIELD_VERSION: u32 = 1;
/// Complex128 stored as interleaved little-endian `(re, im)` pairs.
pub const DTYPE_COMPLEX128: u8 = 0;

/// Encode a row-major complex array.
pub fn encode_field(dims: &[usize], data: &[C64]) -> Result<Vec<u8>> {
    let n: usize = dims.iter().product();
    if n != data.len() {
        return Err(Error::Format(format!("dims {dims:?} hold {n} values, got {}", data.len())));
    }
    let mut out = Vec::with_capacity(13 + 8 * dims.len() + 16 * n);
    out.extend_from_slice(FIELD_MAGIC);
    out.extend_from_slice(&FIELD_VERSION.to_le_bytes());
    out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for &d in dims {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    out.push(DTYPE_COMPLEX128);
    for v in data {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    Ok(out)
}

fn take<'a>(bytes: &'a [u8], pos: &mut usize, n: usize) -> Result<&'a [u8]> {
    let s = bytes.get(*pos..*pos + n).ok_or_else(|| Error::Format(format!("field truncated at byte {}", *pos)))?;
    *pos += n;
    Ok(s)
}

/// Decode a field written by [`encode_field`].
pub fn decode_field(bytes: &[u8]) -> Result<(Vec<usize>, Vec<C64>)> {
    let mut pos = 0;
    if take(bytes, &mut pos, 4)? != FIELD_MAGIC {
        return Err(Error::Format("missing MBO1 magic".into()));
    }
    let u32_at = |pos: &mut usize| -> Result<u32> { Ok(u32::from_le_bytes(take(bytes, pos, 4)?.try_into().unwrap())) };
    let version = u32_at(&mut pos)?;
    if version != FIELD_VERSION {
        return Err(Error::Format(format!("field version {version}, expected {FIELD_VERSION}")));
    }
    let rank = u32_at(&mut pos)? as usize;
    let mut dims = Vec::with_capacity(rank);
    for _ in 0..rank {
        dims.push(u64::from_le_bytes(take(bytes, &mut pos, 8)?.try_into().unwrap()) as usize);
    }
    let dtype = take(bytes, &mut pos, 1)?[0];
    if dtype != DTYPE_COMPLEX128 {
        return Err(Error::Format(format!("unknown dtype tag {dtype}")));
    }
    let n: usize = dims.iter().product();
    let payload = take(bytes, &mut pos, 16 * n)?;
    if pos != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes after payload", bytes.len() - pos)));
    }
    let data = payload
        .chunks_exact(16)
        .map(|c| C64::new(f64::from_le_bytes(c[..8].try_into().unwrap()), f64::from_le_bytes(c[8..].try_into().unwrap())))
        .collect();
    Ok((dims, data))
}

pub fn write_field(path: &Path, dims: &[usize], data: &[C64]) -> Result<()> {
    let bytes = encode_field(dims, data)?;
    fs::write(path, bytes).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_field(path: &Path) -> Result<(Vec<usize>, Vec<C64>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    decode_field(&bytes)
}

/// Sidecar path: `state.mbo` -> `state.mbo.meta`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// Text metadata for a grid state: one `key = value` line each.
pub fn state_metadata(state: &GridState) -> String {
    let g = &state.grid;
    let mut s = String::new();
    let _ = writeln!(s, "format = MBO1");
    let _ = writeln!(s, "dims = {:?}", g.dims());
    for (name, axes) in [("x", g.x_axes()), ("y", g.y_axes())] {
        for (i, a) in axes.iter().enumerate() {
            let _ = writeln!(s, "{name}{} = [{:.17e}, {:.17e}) points {}", i + 1, a.min, a.max, a.points);
        }
    }
    let _ = writeln!(s, "levels = {}", g.levels());
    let _ = writeln!(s, "frame = {}", state.frame);
    let _ = writeln!(s, "h = {:.17e}", state.h);
    let _ = writeln!(s, "time = {:.17e}", state.time);
    s
}

/// Write the state as an MBO1 field plus its sidecar; returns both paths.
pub fn write_state(path: &Path, state: &GridState) -> Result<(PathBuf, PathBuf)> {
    write_field(path, &state.grid.dims(), &state.data)?;
    let meta = sidecar_path(path);
    fs::write(&meta, state_metadata(state)).map_err(|e| Error::io(meta.display().to_string(), e))?;
    Ok((path.to_path_buf(), meta))
}
