//! MetaImage (`.mhd` header + raw payload) reading and writing.
//!
//! Honored header keys: `NDims` (must be 3), `DimSize`, `ElementSpacing`
//! (defaults to `1 1 1`), `ElementType` (`MET_UCHAR` or `MET_FLOAT`) and
//! `ElementDataFile` (path relative to the header). Other keys are ignored.
//! Payloads are little-endian with x varying fastest. The writer always
//! emits `MET_FLOAT`.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use byteorder::{ByteOrder, LittleEndian};
use usspeckle_core::Volume3D;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("payload size mismatch: expected {expected} bytes, found {actual}")]
    PayloadSizeMismatch { expected: usize, actual: usize },
    #[error("unsupported element type {0}")]
    UnsupportedElementType(String),
    #[error(transparent)]
    Volume(#[from] usspeckle_core::Error),
}

impl IoError {
    fn io(path: &Path, source: io::Error) -> Self {
        IoError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ElementType {
    UChar,
    Float,
}

#[derive(Debug)]
struct Header {
    dims: [usize; 3],
    spacing: [f64; 3],
    element: ElementType,
    data_file: String,
}

fn parse_triple<T: std::str::FromStr>(key: &str, value: &str) -> Result<[T; 3], IoError> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    let bad = || IoError::MalformedHeader(format!("{key} must hold three numbers, got `{value}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let mut out = Vec::with_capacity(3);
    for p in parts {
        out.push(p.parse::<T>().map_err(|_| bad())?);
    }
    out.try_into().map_err(|_| bad())
}

fn parse_header(text: &str) -> Result<Header, IoError> {
    let mut ndims = None;
    let mut dims = None;
    let mut spacing = [1.0; 3];
    let mut element = None;
    let mut data_file = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            IoError::MalformedHeader(format!("line {} is not `key = value`", lineno + 1))
        })?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "NDims" => {
                ndims = Some(value.parse::<usize>().map_err(|_| {
                    IoError::MalformedHeader(format!("NDims must be an integer, got `{value}`"))
                })?)
            }
            "DimSize" => dims = Some(parse_triple::<usize>(key, value)?),
            "ElementSpacing" => spacing = parse_triple::<f64>(key, value)?,
            "ElementType" => {
                element = Some(match value {
                    "MET_UCHAR" => ElementType::UChar,
                    "MET_FLOAT" => ElementType::Float,
                    other => return Err(IoError::UnsupportedElementType(other.to_string())),
                })
            }
            "ElementDataFile" => data_file = Some(value.to_string()),
            _ => {}
        }
    }
    match ndims {
        Some(3) => {}
        Some(n) => {
            return Err(IoError::MalformedHeader(format!(
                "NDims must be 3, got {n}"
            )))
        }
        None => return Err(IoError::MalformedHeader("missing NDims".into())),
    }
    let dims = dims.ok_or_else(|| IoError::MalformedHeader("missing DimSize".into()))?;
    if dims.contains(&0) {
        return Err(IoError::MalformedHeader(format!(
            "DimSize {dims:?} must be positive"
        )));
    }
    if spacing.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(IoError::MalformedHeader(format!(
            "ElementSpacing {spacing:?} must be positive"
        )));
    }
    let element = element.ok_or_else(|| IoError::MalformedHeader("missing ElementType".into()))?;
    let data_file =
        data_file.ok_or_else(|| IoError::MalformedHeader("missing ElementDataFile".into()))?;
    if data_file.eq_ignore_ascii_case("LOCAL") || data_file.starts_with("LIST") {
        return Err(IoError::MalformedHeader(format!(
            "ElementDataFile `{data_file}` is not supported; use a separate raw file"
        )));
    }
    Ok(Header {
        dims,
        spacing,
        element,
        data_file,
    })
}

pub fn load_volume(path: impl AsRef<Path>) -> Result<Volume3D, IoError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    let header = parse_header(&text)?;
    let raw_path = path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(&header.data_file);
    let bytes = fs::read(&raw_path).map_err(|e| IoError::io(&raw_path, e))?;
    let n: usize = header.dims.iter().product();
    let width = match header.element {
        ElementType::UChar => 1,
        ElementType::Float => 4,
    };
    let expected = n * width;
    if bytes.len() != expected {
        return Err(IoError::PayloadSizeMismatch {
            expected,
            actual: bytes.len(),
        });
    }
    let data = match header.element {
        ElementType::UChar => bytes.iter().map(|&b| f64::from(b)).collect(),
        ElementType::Float => bytes
            .chunks_exact(4)
            .map(|c| f64::from(LittleEndian::read_f32(c)))
            .collect(),
    };
    Ok(Volume3D::new(header.dims, header.spacing, data)?)
}

/// Writes `path` (header) and a sibling `.raw` payload as 32-bit floats.
///
/// Intensities are rounded to `f32`; volumes loaded from float files
/// round-trip bit-exactly.
pub fn save_volume(v: &Volume3D, path: impl AsRef<Path>) -> Result<(), IoError> {
    let path = path.as_ref();
    let raw_path = path.with_extension("raw");
    let raw_name = raw_path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| IoError::MalformedHeader(format!("bad output path {}", path.display())))?
        .to_string();

    let mut bytes = vec![0u8; v.len() * 4];
    for (chunk, &x) in bytes.chunks_exact_mut(4).zip(v.data()) {
        LittleEndian::write_f32(chunk, x as f32);
    }
    fs::write(&raw_path, &bytes).map_err(|e| IoError::io(&raw_path, e))?;

    let [nx, ny, nz] = v.dims();
    let [sx, sy, sz] = v.spacing();
    let mut f = fs::File::create(path).map_err(|e| IoError::io(path, e))?;
    write!(
        f,
        "ObjectType = Image\n\
         NDims = 3\n\
         BinaryData = True\n\
         BinaryDataByteOrderMSB = False\n\
         DimSize = {nx} {ny} {nz}\n\
         ElementSpacing = {sx} {sy} {sz}\n\
         ElementType = MET_FLOAT\n\
         ElementDataFile = {raw_name}\n"
    )
    .map_err(|e| IoError::io(path, e))?;
    Ok(())
}

/// `.mhd` files directly inside `dir`, sorted by name.
pub fn list_volumes(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, IoError> {
    let dir = dir.as_ref();
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| IoError::io(dir, e))? {
        let p = entry.map_err(|e| IoError::io(dir, e))?.path();
        if p.extension().is_some_and(|e| e == "mhd") {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}
