//! Checkpoint ingestion and result emission.
//!
//! A checkpoint is a TOML manifest listing one matrix file per consecutive
//! layer pair. Matrix files use the NMFA binary layout:
//!
//! ```text
//! offset 0   4 bytes  magic "NMFA"
//! offset 4   u32 LE   format version (1)
//! offset 8   u64 LE   rows
//! offset 16  u64 LE   cols
//! offset 24  rows*cols f32 LE, row-major
//! ```
//!
//! Files ending in `.csv` are read as plain comma-separated matrices instead.
//! All text output is UTF-8, comma-separated, LF-terminated.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::analysis::AnalysisConfig;
use crate::emergence::EmergenceSeries;
use crate::error::{Error, Result};
use crate::mfa::Spectrum;
use crate::net_model::LayeredNetwork;
use crate::sampling::AggregateSpectrum;

pub const NMFA_MAGIC: &[u8; 4] = b"NMFA";
pub const NMFA_VERSION: u32 = 1;
pub const MANIFEST_VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub format_version: u32,
    pub epoch: u64,
    pub layers: Vec<String>,
    /// Matrix files, relative to the manifest's directory.
    pub matrices: Vec<PathBuf>,
    /// `[rows, cols]` of each matrix.
    pub shapes: Vec<[usize; 2]>,
}

impl CheckpointManifest {
    pub fn check(&self, path: &Path) -> Result<()> {
        if self.format_version != MANIFEST_VERSION {
            return Err(Error::format(
                path,
                format!("unsupported manifest version {}", self.format_version),
            ));
        }
        if self.layers.len() < 2 {
            return Err(Error::Structural(format!(
                "{}: manifest lists {} layers, need at least 2",
                path.display(),
                self.layers.len()
            )));
        }
        if self.matrices.len() != self.layers.len() - 1 || self.shapes.len() != self.matrices.len() {
            return Err(Error::Structural(format!(
                "{}: {} layers need {} matrices, manifest lists {} files and {} shapes",
                path.display(),
                self.layers.len(),
                self.layers.len() - 1,
                self.matrices.len(),
                self.shapes.len()
            )));
        }
        for (j, pair) in self.shapes.windows(2).enumerate() {
            if pair[0][1] != pair[1][0] {
                return Err(Error::Structural(format!(
                    "{}: matrix {j} has {} columns but matrix {} has {} rows",
                    path.display(),
                    pair[0][1],
                    j + 1,
                    pair[1][0]
                )));
            }
        }
        if let Some(j) = self.shapes.iter().position(|s| s[0] == 0 || s[1] == 0) {
            return Err(Error::Structural(format!("{}: matrix {j} is empty", path.display())));
        }
        Ok(())
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.shapes[0][0]];
        sizes.extend(self.shapes.iter().map(|s| s[1]));
        sizes
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub network: LayeredNetwork,
    pub epoch: u64,
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<CheckpointManifest> {
    let text = String::from_utf8(read(path)?)
        .map_err(|_| Error::format(path, "manifest is not valid UTF-8"))?;
    let manifest: CheckpointManifest =
        toml::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    manifest.check(path)?;
    Ok(manifest)
}

/// Reads an NMFA matrix, checking its header against the expected shape.
pub fn read_nmfa(path: &Path, expected: Option<[usize; 2]>) -> Result<Array2<f64>> {
    let bytes = read(path)?;
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(path, format!("truncated header ({} bytes)", bytes.len())));
    }
    if &bytes[0..4] != NMFA_MAGIC {
        return Err(Error::format(path, "bad magic bytes"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != NMFA_VERSION {
        return Err(Error::format(path, format!("unsupported matrix version {version}")));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    let cols = u64::from_le_bytes(bytes[16..24].try_into().expect("8 bytes"));
    let (rows, cols) = (rows as usize, cols as usize);
    if let Some([r, c]) = expected {
        if (r, c) != (rows, cols) {
            return Err(Error::format(
                path,
                format!("header declares {rows}x{cols}, manifest expects {r}x{c}"),
            ));
        }
    }
    let want = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::format(path, "declared size overflows"))?;
    if bytes.len() != want {
        return Err(Error::format(
            path,
            format!("file has {} bytes, header implies {want}", bytes.len()),
        ));
    }
    let mut values = Vec::with_capacity(rows * cols);
    for (k, chunk) in bytes[HEADER_LEN..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
        if !v.is_finite() {
            return Err(Error::Data(format!(
                "{}: non-finite value at row {}, col {}",
                path.display(),
                k / cols,
                k % cols
            )));
        }
        values.push(f64::from(v));
    }
    Ok(Array2::from_shape_vec((rows, cols), values).expect("length checked"))
}

pub fn write_nmfa(path: &Path, matrix: &Array2<f64>) -> Result<()> {
    let mut bytes = Vec::with_capacity(HEADER_LEN + 4 * matrix.len());
    bytes.extend_from_slice(NMFA_MAGIC);
    bytes.extend_from_slice(&NMFA_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(matrix.nrows() as u64).to_le_bytes());
    bytes.extend_from_slice(&(matrix.ncols() as u64).to_le_bytes());
    for &v in matrix.iter() {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_csv_matrix(path: &Path, expected: Option<[usize; 2]>) -> Result<Array2<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::format(path, e.to_string()))?;
    let mut values = Vec::new();
    let mut rows = 0usize;
    let mut cols = None;
    for record in reader.records() {
        let record = record.map_err(|e| Error::format(path, e.to_string()))?;
        if cols.is_some_and(|c| c != record.len()) {
            return Err(Error::format(path, format!("row {rows} has {} columns", record.len())));
        }
        cols = Some(record.len());
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::format(path, format!("row {rows}, col {c}: cannot parse {field:?}")))?;
            if !v.is_finite() {
                return Err(Error::Data(format!(
                    "{}: non-finite value at row {rows}, col {c}",
                    path.display()
                )));
            }
            values.push(v);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::format(path, "empty matrix"))?;
    if let Some([r, c]) = expected {
        if (r, c) != (rows, cols) {
            return Err(Error::format(
                path,
                format!("file holds {rows}x{cols}, manifest expects {r}x{c}"),
            ));
        }
    }
    Ok(Array2::from_shape_vec((rows, cols), values).expect("rectangular"))
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Loads every matrix listed by a manifest. Shapes are checked before any matrix is read.
pub fn load_checkpoint(manifest_path: &Path) -> Result<Checkpoint> {
    let manifest = read_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new(""));
    let weights = manifest
        .matrices
        .iter()
        .zip(&manifest.shapes)
        .map(|(file, &shape)| {
            let path = base.join(file);
            if is_csv(&path) {
                read_csv_matrix(&path, Some(shape))
            } else {
                read_nmfa(&path, Some(shape))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let network = LayeredNetwork::with_sizes(
        manifest.layer_sizes(),
        weights,
        Some(manifest.layers.clone()),
    )?;
    Ok(Checkpoint {
        network,
        epoch: manifest.epoch,
    })
}

/// Writes `<stem>.toml` plus one `<stem>_m<j>.nmfa` per matrix into `dir`; returns the manifest path.
pub fn save_checkpoint(net: &LayeredNetwork, epoch: u64, dir: &Path, stem: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut matrices = Vec::new();
    for (j, w) in net.weights().iter().enumerate() {
        let name = PathBuf::from(format!("{stem}_m{j}.nmfa"));
        write_nmfa(&dir.join(&name), w)?;
        matrices.push(name);
    }
    let layers = match net.labels() {
        Some(l) => l.to_vec(),
        None => (0..net.num_layers()).map(|l| format!("layer{l}")).collect(),
    };
    let manifest = CheckpointManifest {
        format_version: MANIFEST_VERSION,
        epoch,
        layers,
        matrices,
        shapes: net.weights().iter().map(|w| [w.nrows(), w.ncols()]).collect(),
    };
    let path = dir.join(format!("{stem}.toml"));
    let text = toml::to_string(&manifest).map_err(|e| Error::format(&path, e.to_string()))?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub library_version: String,
    pub edge_exponent: f64,
    pub epsilon_w: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub horizon: usize,
    /// `null` means unbounded within the horizon.
    pub d_threshold: Option<f64>,
    pub q_grid: Vec<f64>,
    pub r_max: u32,
    pub mass_floor: crate::mfa::MassFloor,
    pub fit_window: crate::mfa::FitWindow,
    pub nodes_per_layer: usize,
    pub samples: usize,
    pub seed: u64,
    pub estimator: Option<crate::paths::EstimatorParams>,
    pub log_base: String,
    pub radius_rounding: String,
    pub epoch: Option<u64>,
    pub input: Option<String>,
}

impl RunMetadata {
    pub fn from_config(config: &AnalysisConfig) -> Self {
        RunMetadata {
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            edge_exponent: config.transform.exponent,
            epsilon_w: config.transform.epsilon_w,
            lambda: config.distance.lambda,
            gamma: config.distance.gamma,
            horizon: config.distance.horizon,
            d_threshold: config.distance.d_threshold,
            q_grid: config.grid.values().to_vec(),
            r_max: config.r_max,
            mass_floor: config.floor,
            fit_window: config.window,
            nodes_per_layer: config.plan.nodes_per_layer,
            samples: config.plan.num_samples,
            seed: config.plan.seed,
            estimator: config.estimator,
            log_base: "e".to_string(),
            radius_rounding: "nearest, halves up, clamped to [1, r_max]".to_string(),
            epoch: None,
            input: None,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let bytes = read(path)?;
    serde_json::from_slice(&bytes).map_err(|e| Error::format(path, e.to_string()))
}

/// Sidecar path for a spectrum file: `x.spectrum.csv` -> `x.spectrum.meta.json`.
pub fn metadata_path(spectrum_path: &Path) -> PathBuf {
    spectrum_path.with_extension("meta.json")
}

pub enum SpectrumView<'a> {
    Single(&'a Spectrum),
    Aggregate(&'a AggregateSpectrum),
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(path, format!("{other:?}")),
    }
}

/// Writes the spectrum CSV and its metadata sidecar.
pub fn emit_spectrum(view: SpectrumView<'_>, path: &Path, metadata: &RunMetadata) -> Result<()> {
    let mut w = csv_writer(path)?;
    let row = |vals: &[f64]| vals.iter().map(|v| v.to_string()).collect::<Vec<_>>();
    match view {
        SpectrumView::Single(s) => {
            w.write_record(["q", "tau", "alpha", "f_alpha"]).map_err(|e| csv_err(path, e))?;
            for k in 0..s.q.len() {
                w.write_record(row(&[s.q[k], s.tau[k], s.alpha[k], s.f_alpha[k]]))
                    .map_err(|e| csv_err(path, e))?;
            }
        }
        SpectrumView::Aggregate(a) => {
            w.write_record(["q", "tau", "alpha", "f_alpha", "tau_std", "alpha_std", "f_std"])
                .map_err(|e| csv_err(path, e))?;
            for k in 0..a.q.len() {
                w.write_record(row(&[
                    a.q[k],
                    a.tau_mean[k],
                    a.alpha_mean[k],
                    a.f_mean[k],
                    a.tau_std[k],
                    a.alpha_std[k],
                    a.f_std[k],
                ]))
                .map_err(|e| csv_err(path, e))?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    write_json(&metadata_path(path), metadata)
}

/// Columns of a spectrum CSV; the `*_std` columns are present only for aggregates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpectrumColumns {
    pub q: Vec<f64>,
    pub tau: Vec<f64>,
    pub alpha: Vec<f64>,
    pub f_alpha: Vec<f64>,
    pub tau_std: Option<Vec<f64>>,
    pub alpha_std: Option<Vec<f64>>,
    pub f_std: Option<Vec<f64>>,
}

fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut columns = vec![Vec::new(); header.len()];
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e))?;
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::format(path, format!("row {line}, column {}: cannot parse {field:?}", header[c]))
            })?;
            columns[c].push(v);
        }
    }
    Ok((header, columns))
}

pub fn read_spectrum_csv(path: &Path) -> Result<SpectrumColumns> {
    let (header, mut cols) = read_table(path)?;
    let single = ["q", "tau", "alpha", "f_alpha"];
    let full = ["q", "tau", "alpha", "f_alpha", "tau_std", "alpha_std", "f_std"];
    if header != single && header != full {
        return Err(Error::format(path, format!("unexpected header {header:?}")));
    }
    let mut take = |i: usize| std::mem::take(&mut cols[i]);
    let mut out = SpectrumColumns {
        q: take(0),
        tau: take(1),
        alpha: take(2),
        f_alpha: take(3),
        ..SpectrumColumns::default()
    };
    if header.len() == full.len() {
        out.tau_std = Some(take(4));
        out.alpha_std = Some(take(5));
        out.f_std = Some(take(6));
    }
    Ok(out)
}

pub fn emit_emergence(series: &EmergenceSeries, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["epoch", "alpha0", "width", "E"]).map_err(|e| csv_err(path, e))?;
    for p in &series.points {
        w.write_record([
            p.record.epoch.to_string(),
            p.record.alpha0.to_string(),
            p.record.width.to_string(),
            p.emergence.to_string(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Rows of an emergence CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmergenceRow {
    pub epoch: u64,
    pub alpha0: f64,
    pub width: f64,
    pub emergence: f64,
}

pub fn read_emergence_csv(path: &Path) -> Result<Vec<EmergenceRow>> {
    let (header, cols) = read_table(path)?;
    if header != ["epoch", "alpha0", "width", "E"] {
        return Err(Error::format(path, format!("unexpected header {header:?}")));
    }
    Ok((0..cols[0].len())
        .map(|k| EmergenceRow {
            epoch: cols[0][k] as u64,
            alpha0: cols[1][k],
            width: cols[2][k],
            emergence: cols[3][k],
        })
        .collect())
}

/// Writes rows of `(name, value)` columns with a header; used for small tabular side outputs.
pub fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Appends `text` to a file, creating it if needed.
pub fn append_line(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    writeln!(f, "{text}").map_err(|e| Error::io(path, e))
}
