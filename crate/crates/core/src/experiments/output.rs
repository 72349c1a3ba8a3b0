use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SweepResult;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 8] = [
    "sweep_var",
    "rate_admm",
    "rate_optimal",
    "rate_offload_only",
    "rate_local_only",
    "iters_mean",
    "iters_sd",
    "seed",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::invalid("format", format!("unknown format `{other}`"))),
        }
    }
}

/// 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_bytes(result: &SweepResult, path: &Path) -> Result<Vec<u8>> {
    let csv_err = |source| Error::Csv {
        path: path.into(),
        source,
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for p in &result.points {
        w.write_record([
            num(p.sweep_var),
            num(p.rate_admm),
            p.rate_optimal.map(num).unwrap_or_default(),
            num(p.rate_offload_only),
            num(p.rate_local_only),
            num(p.iters_mean),
            num(p.iters_sd),
            result.seed.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Io {
        path: path.into(),
        source: e.into_error(),
    })
}

/// Writes `result` to `path` through a temporary sibling file, so a failed
/// write never leaves a truncated file behind.
pub fn write_results(result: &SweepResult, path: impl AsRef<Path>, format: Format) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format {
        Format::Csv => csv_bytes(result, path)?,
        Format::Json => {
            let mut b = serde_json::to_vec_pretty(result).map_err(|source| Error::Json {
                path: path.into(),
                source,
            })?;
            b.push(b'\n');
            b
        }
    };
    let tmp = temp_sibling(path);
    let io = |p: &Path| {
        let p = p.to_path_buf();
        move |source| Error::Io { path: p, source }
    };
    let mut f = fs::File::create(&tmp).map_err(io(&tmp))?;
    let written = f.write_all(&bytes).and_then(|_| f.sync_all());
    drop(f);
    if let Err(e) = written.map_err(io(&tmp)) {
        let _ = fs::remove_file(&tmp);
        return Err(e);
    }
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io(path)(e)
    })
}

fn temp_sibling(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(format!(".tmp{}", std::process::id()));
    path.with_file_name(name)
}

pub fn read_results_json(path: impl AsRef<Path>) -> Result<SweepResult> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.into(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })
}
