//! Matrix files (CSV, NPY), JSON report documents and SVG heatmaps.

mod heatmap;
pub mod npy;
mod report;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::data::{sample_row_indices, DataMatrix};
use crate::error::{Error, Result};
use crate::rng::RngSeed;

pub use heatmap::{colormap, emit_heatmap, render_heatmap};
pub use npy::Dtype;
pub use report::{CommandRecord, ReportDocument, ReportResults, Timing, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    Npy,
}

impl MatrixFormat {
    /// `.npy` means NPY; anything else is read as CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("npy") => MatrixFormat::Npy,
            _ => MatrixFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixFileHeader {
    pub dtype: Dtype,
    pub shape: (usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeaderMode {
    /// The first record is a header iff one of its fields is not a number.
    #[default]
    Auto,
    Present,
    Absent,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnRef {
    Name(String),
    Index(usize),
}

impl std::str::FromStr for ColumnRef {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(s.parse()
            .map(ColumnRef::Index)
            .unwrap_or_else(|_| ColumnRef::Name(s.to_string())))
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    pub format: Option<MatrixFormat>,
    pub header: HeaderMode,
    /// CSV column holding integer class labels; removed from the features.
    pub label_column: Option<ColumnRef>,
    /// Keep a seeded random subset of this many rows.
    pub sample: Option<(usize, RngSeed)>,
}

#[derive(Debug, Clone, Copy)]
pub struct SaveOptions {
    pub format: Option<MatrixFormat>,
    pub dtype: Dtype,
    pub create_dirs: bool,
}

impl Default for SaveOptions {
    fn default() -> Self {
        SaveOptions {
            format: None,
            dtype: Dtype::F64,
            create_dirs: false,
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::MalformedHeader { reason, .. } => Error::MalformedHeader {
            path: path.to_path_buf(),
            reason,
        },
        Error::Io { source, .. } => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    }
}

pub fn load_matrix(path: impl AsRef<Path>, options: &LoadOptions) -> Result<DataMatrix> {
    let path = path.as_ref();
    let format = options
        .format
        .unwrap_or_else(|| MatrixFormat::from_path(path));
    let file = File::open(path).map_err(io_err(path))?;
    let m = match format {
        MatrixFormat::Npy => {
            if options.label_column.is_some() {
                return Err(Error::Unsupported("label columns in npy input".into()));
            }
            let (h, values) = npy::read(BufReader::new(file)).map_err(|e| with_path(e, path))?;
            DataMatrix::new(h.shape.0, h.shape.1, values)?
        }
        MatrixFormat::Csv => {
            read_csv(BufReader::new(file), options).map_err(|e| with_path(e, path))?
        }
    };
    match options.sample {
        Some((n, seed)) if n < m.n_rows() => {
            m.select_rows(&sample_row_indices(m.n_rows(), n, seed)?)
        }
        _ => Ok(m),
    }
}

pub fn read_csv<R: std::io::Read>(reader: R, options: &LoadOptions) -> Result<DataMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records().peekable();

    let first = match records.peek() {
        Some(Ok(r)) => Some(r.clone()),
        Some(Err(_)) => None,
        None => return Err(Error::Shape("empty csv".into())),
    };
    let header: Option<Vec<String>> = match (options.header, &first) {
        (HeaderMode::Absent, _) | (HeaderMode::Auto, None) => None,
        (HeaderMode::Present, Some(r)) => Some(r.iter().map(|s| s.trim().to_string()).collect()),
        (HeaderMode::Present, None) => return Err(Error::Shape("unreadable csv header".into())),
        (HeaderMode::Auto, Some(r)) => r
            .iter()
            .any(|f| f.trim().parse::<f64>().is_err())
            .then(|| r.iter().map(|s| s.trim().to_string()).collect()),
    };
    if header.is_some() {
        records.next();
    }

    let label_idx = match &options.label_column {
        None => None,
        Some(ColumnRef::Index(i)) => Some(*i),
        Some(ColumnRef::Name(name)) => Some(
            header
                .as_ref()
                .and_then(|h| h.iter().position(|c| c == name))
                .ok_or_else(|| Error::InvalidParameter(format!("no column named {name:?}")))?,
        ),
    };

    let mut width = None;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for rec in records {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        let w = *width.get_or_insert(rec.len());
        if rec.len() != w {
            return Err(Error::Shape(format!(
                "line {line} has {} fields, expected {w}",
                rec.len()
            )));
        }
        for (c, field) in rec.iter().enumerate() {
            let field = field.trim();
            if Some(c) == label_idx {
                let l = field
                    .parse::<i64>()
                    .or_else(|_| field.parse::<f64>().map(|v| v as i64))
                    .map_err(|_| Error::NonNumeric {
                        row: line,
                        col: c + 1,
                        value: field.to_string(),
                    })?;
                labels.push(l);
                continue;
            }
            let v: f64 = field.parse().map_err(|_| Error::NonNumeric {
                row: line,
                col: c + 1,
                value: field.to_string(),
            })?;
            values.push(v);
        }
    }
    let width = width.ok_or_else(|| Error::Shape("csv has no data rows".into()))?;
    if let Some(i) = label_idx {
        if i >= width {
            return Err(Error::InvalidParameter(format!(
                "label column {i} outside {width} columns"
            )));
        }
    }
    let n_cols = width - label_idx.map_or(0, |_| 1);
    let n_rows = if n_cols == 0 {
        0
    } else {
        values.len() / n_cols
    };
    let m = DataMatrix::new(n_rows, n_cols, values)?;
    if label_idx.is_some() {
        m.with_labels(labels)
    } else {
        Ok(m)
    }
}

/// CSV output: a header `x0,x1,...` (plus `label` when rows are labeled) and
/// shortest round-trip decimal values.
pub fn write_csv<W: Write>(w: W, x: &DataMatrix) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut head: Vec<String> = (0..x.n_cols()).map(|j| format!("x{j}")).collect();
    if x.labels().is_some() {
        head.push("label".into());
    }
    wtr.write_record(&head)?;
    for (i, r) in x.rows().enumerate() {
        let mut rec: Vec<String> = r.iter().map(|v| v.to_string()).collect();
        if let Some(l) = x.labels() {
            rec.push(l[i].to_string());
        }
        wtr.write_record(&rec)?;
    }
    wtr.flush().map_err(|e| Error::Io {
        path: PathBuf::new(),
        source: e,
    })?;
    Ok(())
}

pub fn save_matrix(x: &DataMatrix, path: impl AsRef<Path>, options: &SaveOptions) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        if !parent.exists() {
            if options.create_dirs {
                fs::create_dir_all(parent).map_err(io_err(parent))?;
            } else {
                return Err(Error::Io {
                    path: parent.to_path_buf(),
                    source: std::io::Error::new(
                        std::io::ErrorKind::NotFound,
                        "directory does not exist",
                    ),
                });
            }
        }
    }
    let file = BufWriter::new(File::create(path).map_err(io_err(path))?);
    match options
        .format
        .unwrap_or_else(|| MatrixFormat::from_path(path))
    {
        MatrixFormat::Npy => npy::write(file, options.dtype, x.n_rows(), x.n_cols(), x.values())
            .map_err(io_err(path)),
        MatrixFormat::Csv => write_csv(file, x).map_err(|e| with_path(e, path)),
    }
}
