use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// The `--out` file, or stdout when absent.
pub fn open(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn csv_writer(out: Option<&Path>) -> Result<csv::Writer<Box<dyn Write>>> {
    Ok(csv::Writer::from_writer(open(out)?))
}

/// `<out>.json` next to the data file; skipped when writing to stdout.
pub fn sidecar<T: Serialize>(out: Option<&Path>, value: &T) -> Result<Option<PathBuf>> {
    let Some(out) = out else {
        log::info!("no --out given; sidecar report not written");
        return Ok(None);
    };
    let path = out.with_extension("json");
    let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(file), value)?;
    Ok(Some(path))
}
