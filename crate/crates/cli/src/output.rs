//! CSV tables and raw field snapshots.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use cnlse_core::ComplexFieldSet;

use crate::error::CliError;

/// Comma-separated table with a header row and LF line endings. Numbers use
/// the shortest representation that parses back to the same `f64`.
pub struct Table {
    writer: csv::Writer<fs::File>,
    path: PathBuf,
}

impl Table {
    pub fn create(dir: &Path, name: &str, header: &[String]) -> Result<Self, CliError> {
        let path = dir.join(name);
        let writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)
            .map_err(|e| CliError::io(&format!("cannot create {}", path.display()), e))?;
        let mut table = Self { writer, path };
        table.row(header.iter().cloned())?;
        Ok(table)
    }

    pub fn row(&mut self, fields: impl IntoIterator<Item = String>) -> Result<(), CliError> {
        self.writer
            .write_record(fields.into_iter().collect::<Vec<_>>())
            .map_err(|e| CliError::io(&format!("cannot write {}", self.path.display()), e))
    }

    pub fn finish(mut self) -> Result<PathBuf, CliError> {
        self.writer
            .flush()
            .map_err(|e| CliError::io(&format!("cannot write {}", self.path.display()), e))?;
        Ok(self.path)
    }
}

/// Shortest round-tripping form; scientific outside `[1e-4, 1e16)`.
pub fn num(v: f64) -> String {
    let m = v.abs();
    if m != 0.0 && m.is_finite() && !(1e-4..1e16).contains(&m) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// `prefix_1 .. prefix_q`.
pub fn columns(prefix: &str, q: usize) -> impl Iterator<Item = String> + '_ {
    (1..=q).map(move |k| format!("{prefix}_{k}"))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(&format!("cannot create {}", dir.display()), e))
}

/// Writes `<stem>.f64` (little-endian `f64`, interleaved re/im, species
/// rows in order) and the `<stem>.txt` sidecar describing it.
pub fn write_snapshot(dir: &Path, stem: &str, fields: &ComplexFieldSet, t: f64, system: &str) -> Result<PathBuf, CliError> {
    let data_path = dir.join(format!("{stem}.f64"));
    let (q, n) = fields.data().dim();
    let mut bytes = Vec::with_capacity(q * n * 16);
    for c in fields.data().iter() {
        bytes.extend_from_slice(&c.re.to_le_bytes());
        bytes.extend_from_slice(&c.im.to_le_bytes());
    }
    fs::write(&data_path, bytes).map_err(|e| CliError::io(&format!("cannot write {}", data_path.display()), e))?;
    let grid = fields.grid();
    let sidecar = format!(
        "file = {stem}.f64\nsystem = {system}\nt = {t}\nspecies = {q}\nn_points = {n}\nx_min = {}\nx_max = {}\n\
         dtype = f64\nbyte_order = little-endian\nlayout = species-major rows, interleaved (re, im) per node\n",
        grid.x_min(),
        grid.x_max()
    );
    let side_path = dir.join(format!("{stem}.txt"));
    let mut f = fs::File::create(&side_path).map_err(|e| CliError::io(&format!("cannot write {}", side_path.display()), e))?;
    f.write_all(sidecar.as_bytes())
        .map_err(|e| CliError::io(&format!("cannot write {}", side_path.display()), e))?;
    Ok(data_path)
}

/// Reads a snapshot written by [`write_snapshot`] back as `(re, im)` pairs.
pub fn read_snapshot(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(&format!("cannot read {}", path.display()), e))?;
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            (re, im)
        })
        .collect())
}
