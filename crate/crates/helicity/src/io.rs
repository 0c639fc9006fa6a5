//! File formats: filament JSON, binary grids with a JSON header line, JSON
//! reports, diagnostics CSV and the output manifest.
//!
//! Grid files are one line of JSON
//! `{"shape":[nx,ny,nz],"origin":[..],"spacing":[..],"components":c,"dtype":d}`
//! followed by `\n` and the raw little-endian payload, x-fastest with the
//! components of each node stored together. `dtype` is `"f64-le"` for real
//! vector grids (masked nodes are written as NaN) or `"c128-le"` for complex
//! fields (real part then imaginary part).

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use helicity_core::{Filament, GridSpec, Vec3, VectorGrid};

use crate::gpe::ComplexField3D;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io { path: path.to_path_buf(), source }
}

fn json_err(path: &Path) -> impl FnOnce(serde_json::Error) -> IoError + '_ {
    move |source| IoError::Json { path: path.to_path_buf(), source }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FilamentFile {
    filaments: Vec<Filament>,
}

pub fn filaments_to_string(filaments: &[Filament]) -> String {
    let mut s = serde_json::to_string_pretty(&FilamentFile { filaments: filaments.to_vec() }).expect("serializable");
    s.push('\n');
    s
}

pub fn filaments_from_str(s: &str) -> Result<Vec<Filament>, serde_json::Error> {
    serde_json::from_str::<FilamentFile>(s).map(|f| f.filaments)
}

pub fn write_filaments(path: &Path, filaments: &[Filament]) -> Result<(), IoError> {
    fs::write(path, filaments_to_string(filaments)).map_err(io_err(path))
}

/// Reads and validates a filament file.
pub fn read_filaments(path: &Path) -> Result<Vec<Filament>, IoError> {
    let s = fs::read_to_string(path).map_err(io_err(path))?;
    filaments_from_str(&s).map_err(json_err(path))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut s = serde_json::to_string_pretty(value).map_err(json_err(path))?;
    s.push('\n');
    fs::write(path, s).map_err(io_err(path))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    let s = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&s).map_err(json_err(path))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridHeader {
    pub shape: [usize; 3],
    pub origin: [f64; 3],
    pub spacing: [f64; 3],
    pub components: usize,
    pub dtype: String,
}

impl GridHeader {
    fn spec(&self) -> GridSpec {
        GridSpec::new(self.shape, Vec3::from(self.origin), self.spacing)
    }

    fn scalars(&self) -> usize {
        let per = if self.dtype == "c128-le" { 2 } else { 1 };
        self.shape.iter().product::<usize>() * self.components * per
    }
}

fn write_grid(path: &Path, header: &GridHeader, values: impl Iterator<Item = f64>) -> Result<(), IoError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let line = serde_json::to_string(header).map_err(json_err(path))?;
    w.write_all(line.as_bytes()).map_err(io_err(path))?;
    w.write_all(b"\n").map_err(io_err(path))?;
    for v in values {
        w.write_all(&v.to_le_bytes()).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn read_grid(path: &Path) -> Result<(GridHeader, Vec<f64>), IoError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut r = BufReader::new(file);
    let mut line = String::new();
    r.read_line(&mut line).map_err(io_err(path))?;
    let header: GridHeader = serde_json::from_str(line.trim_end()).map_err(json_err(path))?;
    if header.dtype != "f64-le" && header.dtype != "c128-le" {
        return Err(IoError::Format { path: path.into(), msg: format!("unknown dtype {:?}", header.dtype) });
    }
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(io_err(path))?;
    let expect = header.scalars() * 8;
    if bytes.len() != expect {
        return Err(IoError::Format { path: path.into(), msg: format!("payload is {} bytes, expected {expect}", bytes.len()) });
    }
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((header, values))
}

pub fn write_vector_grid(path: &Path, grid: &VectorGrid) -> Result<(), IoError> {
    let header = GridHeader {
        shape: grid.spec.shape,
        origin: grid.spec.origin.to_array(),
        spacing: grid.spec.spacing,
        components: 3,
        dtype: "f64-le".into(),
    };
    let values = (0..grid.spec.len()).flat_map(|i| {
        let v = if grid.is_valid_at(i) { grid.data[i].to_array() } else { [f64::NAN; 3] };
        v.into_iter()
    });
    write_grid(path, &header, values)
}

/// Reads a 3-component real grid; NaN nodes become masked.
pub fn read_vector_grid(path: &Path) -> Result<VectorGrid, IoError> {
    let (header, values) = read_grid(path)?;
    if header.dtype != "f64-le" || header.components != 3 {
        return Err(IoError::Format { path: path.into(), msg: "expected a 3-component f64-le grid".into() });
    }
    let spec = header.spec();
    let mut grid = VectorGrid::zeros(spec);
    let mut mask = vec![true; spec.len()];
    for (i, c) in values.chunks_exact(3).enumerate() {
        if c.iter().any(|v| v.is_nan()) {
            mask[i] = false;
        } else {
            grid.data[i] = Vec3::new(c[0], c[1], c[2]);
        }
    }
    if mask.iter().any(|m| !m) {
        grid.mask = Some(mask);
    }
    Ok(grid)
}

pub fn write_complex_field(path: &Path, field: &ComplexField3D) -> Result<(), IoError> {
    let header = GridHeader {
        shape: field.shape(),
        origin: field.origin().to_array(),
        spacing: [field.spacing(); 3],
        components: 1,
        dtype: "c128-le".into(),
    };
    write_grid(path, &header, field.data.iter().flat_map(|c| [c.re, c.im]))
}

/// Reads a `c128-le` snapshot. The time is not stored and is set to zero.
pub fn read_complex_field(path: &Path) -> Result<ComplexField3D, IoError> {
    let (header, values) = read_grid(path)?;
    if header.dtype != "c128-le" || header.components != 1 {
        return Err(IoError::Format { path: path.into(), msg: "expected a 1-component c128-le grid".into() });
    }
    let h = header.spacing[0];
    if header.spacing.iter().any(|s| *s != h) {
        return Err(IoError::Format { path: path.into(), msg: "complex fields need equal spacing on all axes".into() });
    }
    let data = values.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
    ComplexField3D::from_parts(header.shape, h, Vec3::from(header.origin), data, 0.0)
        .map_err(|e| IoError::Format { path: path.into(), msg: e.to_string() })
}

/// One diagnostics row of a GPE run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub norm: f64,
    pub energy: f64,
    pub total_length: f64,
    pub lk_sum: i64,
}

pub const DIAGNOSTICS_HEADER: &str = "t,norm,energy,total_length,lk_sum";

pub fn diagnostics_csv(rows: &[DiagnosticsRow]) -> String {
    let mut s = String::from(DIAGNOSTICS_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!("{},{:e},{:e},{:e},{}\n", r.t, r.norm, r.energy, r.total_length, r.lk_sum));
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
}

pub fn sha256_file(path: &Path) -> Result<(String, u64), IoError> {
    let mut file = fs::File::open(path).map_err(io_err(path))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut total = 0u64;
    loop {
        let n = file.read(&mut buf).map_err(io_err(path))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        total += n as u64;
    }
    Ok((hex::encode(hasher.finalize()), total))
}

/// Hashes `files` (relative to `dir`) and writes `dir/manifest.json`,
/// sorted by path.
pub fn write_manifest(dir: &Path, files: &[PathBuf]) -> Result<Manifest, IoError> {
    let mut files = files.to_vec();
    files.sort();
    files.dedup();
    let mut entries = Vec::with_capacity(files.len());
    for rel in files {
        let (sha256, bytes) = sha256_file(&dir.join(&rel))?;
        let path = rel.to_string_lossy().replace('\\', "/");
        entries.push(ManifestEntry { path, bytes, sha256 });
    }
    let manifest = Manifest { files: entries };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}
