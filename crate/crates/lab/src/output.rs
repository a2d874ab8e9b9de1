//! Artifact writers. Everything written here is a pure function of the
//! config, so reruns are byte-identical.

use anyhow::{Context, Result};
use frac_helmholtz::{Field64, Space};
use serde::Serialize;
use serde_json::json;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

pub struct Artifacts {
    dir: PathBuf,
    hash: String,
    written: Vec<String>,
    snapshots: bool,
}

/// Shortest round-trip decimal, `nan`/`inf` spelled out.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

impl Artifacts {
    pub fn new(dir: &Path, hash: String, snapshots: bool) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            hash,
            written: Vec::new(),
            snapshots,
        })
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.dir.join(name)
    }

    /// Header row, records, then `# config_hash=<sha256>`.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let mut inner = w.into_inner().map_err(|e| anyhow::anyhow!("flushing {}: {}", path.display(), e.error()))?;
        writeln!(inner, "# config_hash={}", self.hash)?;
        inner.flush()?;
        Ok(())
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }

    /// Raw little-endian complex64 (two `f32` per point, row-major with the
    /// last axis fastest) plus a JSON sidecar with the grid metadata.
    pub fn snapshot(&mut self, stem: &str, field: &Field64) -> Result<()> {
        if !self.snapshots {
            return Ok(());
        }
        let field = match field.space() {
            Space::Physical => field.clone(),
            Space::Spectral => field.from_spectrum()?,
        };
        let g = field.grid();
        let bin = format!("{stem}.c64");
        let path = self.path(&bin);
        let mut w = BufWriter::new(File::create(&path).with_context(|| format!("writing {}", path.display()))?);
        for z in field.values() {
            w.write_all(&(z.re as f32).to_le_bytes())?;
            w.write_all(&(z.im as f32).to_le_bytes())?;
        }
        w.flush()?;
        let sidecar = json!({
            "file": bin,
            "dtype": "complex64",
            "byte_order": "little",
            "layout": "row-major, last axis fastest",
            "dim": g.dim(),
            "points_per_axis": g.points_per_axis(),
            "box_length": g.box_length(),
            "spacing": g.spacing(),
            "origin": -g.box_length() / 2.0,
            "config_hash": self.hash,
        });
        self.json(&format!("{stem}.json"), &sidecar)
    }
}

/// Reads a snapshot back as `(re, im)` pairs.
pub fn read_snapshot(path: &Path) -> Result<Vec<(f32, f32)>> {
    let bytes = fs::read(path)?;
    anyhow::ensure!(bytes.len() % 8 == 0, "{} is not a complex64 array", path.display());
    Ok(bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            (re, im)
        })
        .collect())
}
