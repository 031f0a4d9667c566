//! File formats. Every float is written with 17 significant digits, which is
//! enough for an exact round trip of any `f64`.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::conformal::ConformalKillingField;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridSpec};
use crate::surface::StarShapedHypersurface;

/// Pretty JSON with floats in `d.dddddddddddddddde±x` form.
pub struct ExactFloatFormatter<'a> {
    inner: PrettyFormatter<'a>,
}

impl Default for ExactFloatFormatter<'_> {
    fn default() -> Self {
        ExactFloatFormatter {
            inner: PrettyFormatter::new(),
        }
    }
}

impl Formatter for ExactFloatFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object_value(writer)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, ExactFloatFormatter::default());
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

/// A float with 17 significant digits, for CSV cells.
pub fn format_float(value: f64) -> String {
    format!("{value:.16e}")
}

/// Write `contents` to a sibling temporary file and rename it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(contents)?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_json(value)?.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMeta {
    pub name: String,
    #[serde(default)]
    pub params: serde_json::Value,
}

/// `{ "grid": {n_theta, n_phi}, "f": [...], "meta": {name, params} }`, `f` row-major
/// with colatitude rings outermost.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurfaceFile {
    pub grid: GridSpec,
    pub f: Vec<f64>,
    #[serde(default)]
    pub meta: SurfaceMeta,
}

impl SurfaceFile {
    pub fn new(surface: &StarShapedHypersurface, meta: SurfaceMeta) -> Self {
        SurfaceFile {
            grid: surface.spec(),
            f: surface.radius().values().to_vec(),
            meta,
        }
    }

    pub fn to_surface(&self) -> Result<StarShapedHypersurface> {
        let grid = Grid::new(self.grid)?;
        StarShapedHypersurface::from_values(grid, self.f.clone())
    }
}

pub fn write_surface(path: &Path, surface: &StarShapedHypersurface, meta: SurfaceMeta) -> Result<()> {
    write_json(path, &SurfaceFile::new(surface, meta))
}

pub fn read_surface(path: &Path) -> Result<(StarShapedHypersurface, SurfaceMeta)> {
    let file: SurfaceFile = read_json(path)?;
    Ok((file.to_surface()?, file.meta))
}

pub fn read_ckf(path: &Path) -> Result<ConformalKillingField> {
    let raw: ConformalKillingField = read_json(path)?;
    ConformalKillingField::new(raw.v, raw.s_lower, raw.mu, raw.b)
}
