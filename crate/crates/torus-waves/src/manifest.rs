//! Schema-versioned JSON persistence for run artifacts, the lattice cache
//! file, and CSV export of per-trial rows.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use torus_waves_core::lattice::{Dim, LatticeSet};

use crate::harness::{MCReport, RunArtifact, RunConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("schema version {found} is not readable by this build (expected {expected})")]
    SchemaMismatch { found: u32, expected: u32 },
    #[error("io failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON in {path} at line {line}, column {column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid lattice cache: {0}")]
    BadCache(String),
}

fn io_err(path: &Path, source: std::io::Error) -> ManifestError {
    ManifestError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, e: &serde_json::Error) -> ManifestError {
    ManifestError::Parse {
        path: path.display().to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

#[derive(Serialize, Deserialize)]
struct VersionProbe {
    schema_version: u32,
}

#[derive(Serialize, Deserialize)]
struct ManifestFile {
    schema_version: u32,
    #[serde(flatten)]
    artifact: RunArtifact,
}

/// Canonical JSON encoding of a run manifest (pretty, trailing newline);
/// deterministic for a given artifact.
pub fn manifest_json(config: &RunConfig, report: &MCReport) -> String {
    let file = ManifestFile {
        schema_version: SCHEMA_VERSION,
        artifact: RunArtifact {
            config: config.clone(),
            report: report.clone(),
        },
    };
    let mut s = serde_json::to_string_pretty(&file).expect("manifest serializes");
    s.push('\n');
    s
}

pub fn save_manifest(
    path: &Path,
    config: &RunConfig,
    report: &MCReport,
) -> Result<(), ManifestError> {
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(manifest_json(config, report).as_bytes())
        .map_err(|e| io_err(path, e))
}

pub fn load_manifest(path: &Path) -> Result<RunArtifact, ManifestError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    // check the version gate before insisting on the full shape
    let probe: VersionProbe = serde_json::from_str(&text).map_err(|e| parse_err(path, &e))?;
    if probe.schema_version != SCHEMA_VERSION {
        return Err(ManifestError::SchemaMismatch {
            found: probe.schema_version,
            expected: SCHEMA_VERSION,
        });
    }
    let file: ManifestFile = serde_json::from_str(&text).map_err(|e| parse_err(path, &e))?;
    Ok(file.artifact)
}

/// CSV rows (trial, count, certified), header included.
pub fn trials_csv(report: &MCReport) -> String {
    let mut out = String::from("trial,count,certified\n");
    for row in &report.trials {
        out.push_str(&format!("{},{},{}\n", row.trial, row.count, row.certified));
    }
    out
}

pub fn save_trials_csv(path: &Path, report: &MCReport) -> Result<(), ManifestError> {
    fs::write(path, trials_csv(report)).map_err(|e| io_err(path, e))
}

/// Lattice cache file: `{d, m, points: [[..d ints..]], N}`.
#[derive(Serialize, Deserialize)]
struct LatticeCache {
    d: u8,
    m: u64,
    points: Vec<Vec<i64>>,
    #[serde(rename = "N")]
    n: usize,
}

pub fn lattice_cache_json(lattice: &LatticeSet) -> String {
    let d = lattice.dim().as_usize();
    let cache = LatticeCache {
        d: d as u8,
        m: lattice.level(),
        points: lattice.points().iter().map(|p| p[..d].to_vec()).collect(),
        n: lattice.len(),
    };
    let mut s = serde_json::to_string_pretty(&cache).expect("cache serializes");
    s.push('\n');
    s
}

pub fn save_lattice_cache(path: &Path, lattice: &LatticeSet) -> Result<(), ManifestError> {
    fs::write(path, lattice_cache_json(lattice)).map_err(|e| io_err(path, e))
}

pub fn load_lattice_cache(path: &Path) -> Result<LatticeSet, ManifestError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let cache: LatticeCache = serde_json::from_str(&text).map_err(|e| parse_err(path, &e))?;
    let d = Dim::try_from(cache.d).map_err(|e| ManifestError::BadCache(e.to_string()))?;
    let points: Vec<[i64; 3]> = cache
        .points
        .iter()
        .map(|p| {
            let mut q = [0i64; 3];
            for (i, c) in p.iter().take(3).enumerate() {
                q[i] = *c;
            }
            q
        })
        .collect();
    if points.len() != cache.n {
        return Err(ManifestError::BadCache(format!(
            "N={} but {} points listed",
            cache.n,
            points.len()
        )));
    }
    LatticeSet::from_points(d, cache.m, points).map_err(|e| ManifestError::BadCache(e.to_string()))
}
