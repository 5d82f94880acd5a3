use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use crate::config::Failure;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Output directory of one command run.
pub struct Out {
    dir: PathBuf,
    seed: u64,
}

impl Out {
    pub fn new(dir: PathBuf, seed: u64) -> Result<Self, Failure> {
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Out { dir, seed })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// CSV with a version/seed comment line, a header row and `rows`.
    pub fn csv<I>(&self, name: &str, header: &[String], rows: I) -> Result<PathBuf, Failure>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let path = self.path(name);
        let mut file = BufWriter::new(
            File::create(&path).with_context(|| format!("creating {}", path.display()))?,
        );
        writeln!(file, "# pyptail {VERSION} seed={}", self.seed)?;
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file);
        w.write_record(header).context("writing csv")?;
        for row in rows {
            w.write_record(&row).context("writing csv")?;
        }
        w.flush()?;
        Ok(path)
    }

    /// Pretty JSON with a trailing newline.
    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, Failure> {
        let path = self.path(name);
        write_json(&path, value)?;
        Ok(path)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut file = BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    );
    serde_json::to_writer_pretty(&mut file, value).context("writing json")?;
    writeln!(file)?;
    file.flush()?;
    Ok(())
}

/// Header fields shared by every JSON output.
#[derive(Serialize)]
pub struct Stamp<'a, T: Serialize> {
    pub pyptail_version: &'a str,
    pub command: &'a str,
    pub seed: u64,
    #[serde(flatten)]
    pub body: T,
}

impl<'a, T: Serialize> Stamp<'a, T> {
    pub fn new(command: &'a str, seed: u64, body: T) -> Self {
        Stamp {
            pyptail_version: VERSION,
            command,
            seed,
            body,
        }
    }
}

/// Shortest round-trip text of a number; empty for NaN (an undefined value).
pub fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

/// `points` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect()
}
