//! Planted synthetic bundles and on-disk formats.
//!
//! A bundle directory holds `manifest.json` and one file per matrix,
//! `R_1.mtx.txt … R_N.mtx.txt`. Matrix files are either dense text (first
//! line `rows cols`, then one row per line with 17 significant digits) or
//! Matrix Market coordinate files, which are densified on load.
//!
//! A factorization directory holds `G.txt`, `S_1.txt …`, `trace.csv` and
//! `summary.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::distributions::Uniform;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ConvergenceTrace, Coords, DataBundle, Factorization, Matrix, SolverConfig, StopReason};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const BUNDLE_FORMAT: &str = "snmtf-bundle/1";
pub const DEFAULT_DENSITY: f64 = 0.65;
pub const DEFAULT_COUNT: usize = 5;

/// Range of the non-zero entries of planted `G` and `S_i`.
const PLANTED_LOW: f64 = 0.1;
const PLANTED_HIGH: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub label: String,
    pub n: usize,
    pub count: usize,
    /// Matrix file names, in order.
    pub matrices: Vec<String>,
    pub norm_sq_total: f64,
    /// `"dense"` or `"matrix_market"`.
    pub matrix_format: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planted_k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
}

/// Planted benchmark: `R_i = G S_i Gᵀ` with `G` (`n × k`) supported on `k`
/// contiguous disjoint row groups, so its columns are orthogonal.
///
/// Group sizes are `⌊n/k⌋`, the remainder going to the first groups. Every
/// `S_i` keeps each upper-triangular entry (diagonal included) with
/// probability `density` and is mirrored. Non-zero entries are uniform on
/// `[0.1, 1)`.
pub fn generate_synthetic(
    n: usize,
    k: usize,
    count: usize,
    density: f64,
    seed: u64,
) -> Result<(DataBundle, Factorization)> {
    if k == 0 || n == 0 || count == 0 {
        return Err(Error::InvalidArgument("n, K and N must be positive".into()));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!("K = {k} exceeds n = {n}")));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidArgument(format!("density {density} not in (0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = Uniform::new(PLANTED_LOW, PLANTED_HIGH);
    let mut g = Array2::zeros((n, k));
    let (base, extra) = (n / k, n % k);
    let mut row = 0;
    for j in 0..k {
        let size = base + usize::from(j < extra);
        for r in row..row + size {
            g[[r, j]] = rng.sample(values);
        }
        row += size;
    }
    let s: Vec<Matrix> = (0..count)
        .map(|_| {
            let mut m = Array2::zeros((k, k));
            for a in 0..k {
                for b in a..k {
                    if rng.gen_bool(density) {
                        let v = rng.sample(values);
                        m[[a, b]] = v;
                        m[[b, a]] = v;
                    }
                }
            }
            m
        })
        .collect();
    let r = s.iter().map(|si| crate::model::reconstruct(&g, si)).collect();
    let label = format!("synthetic-n{n}-K{k}-s{seed}");
    let bundle = DataBundle::new_symmetrized(label, r)?;
    Ok((bundle, Factorization::native(g, s)?))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Dense text rendering with 17 significant digits.
pub fn format_dense(m: &Matrix) -> String {
    let mut out = format!("{} {}\n", m.nrows(), m.ncols());
    for row in m.rows() {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            first = false;
            write!(out, "{v:.16e}").expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

pub fn write_dense(m: &Matrix, path: &Path) -> Result<()> {
    write(path, &format_dense(m))
}

/// Reads a dense text or Matrix Market file.
pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let text = read(path)?;
    if text.trim_start().starts_with("%%MatrixMarket") {
        parse_matrix_market(&text).map_err(|msg| Error::parse(path, msg))
    } else {
        parse_dense(&text).map_err(|msg| Error::parse(path, msg))
    }
}

fn parse_usize(tok: Option<&str>, what: &str) -> std::result::Result<usize, String> {
    tok.ok_or_else(|| format!("missing {what}"))?
        .parse()
        .map_err(|e| format!("bad {what}: {e}"))
}

fn parse_f64(tok: &str) -> std::result::Result<f64, String> {
    tok.parse().map_err(|e| format!("bad value '{tok}': {e}"))
}

fn parse_dense(text: &str) -> std::result::Result<Matrix, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or("empty file")?;
    let mut dims = header.split_whitespace();
    let rows = parse_usize(dims.next(), "row count")?;
    let cols = parse_usize(dims.next(), "column count")?;
    let mut data = Vec::with_capacity(rows * cols);
    for (r, line) in lines.enumerate() {
        let before = data.len();
        for tok in line.split_whitespace() {
            data.push(parse_f64(tok)?);
        }
        if data.len() - before != cols {
            return Err(format!("row {} has {} values, expected {cols}", r + 1, data.len() - before));
        }
    }
    if data.len() != rows * cols {
        return Err(format!("expected {rows} rows, found {}", data.len() / cols.max(1)));
    }
    Array2::from_shape_vec((rows, cols), data).map_err(|e| e.to_string())
}

fn parse_matrix_market(text: &str) -> std::result::Result<Matrix, String> {
    let mut lines = text.lines();
    let banner = lines.next().ok_or("empty file")?.to_ascii_lowercase();
    let fields: Vec<&str> = banner.split_whitespace().collect();
    if fields.len() < 5 || fields[1] != "matrix" || fields[2] != "coordinate" {
        return Err(format!("unsupported Matrix Market header '{banner}'"));
    }
    let pattern = match fields[3] {
        "real" | "integer" | "double" => false,
        "pattern" => true,
        other => return Err(format!("unsupported field type '{other}'")),
    };
    let symmetric = match fields[4] {
        "general" => false,
        "symmetric" => true,
        other => return Err(format!("unsupported symmetry '{other}'")),
    };
    let mut body = lines.filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('%'));
    let size = body.next().ok_or("missing size line")?;
    let mut dims = size.split_whitespace();
    let rows = parse_usize(dims.next(), "row count")?;
    let cols = parse_usize(dims.next(), "column count")?;
    let nnz = parse_usize(dims.next(), "entry count")?;
    let mut m = Array2::zeros((rows, cols));
    let mut seen = 0;
    for line in body {
        let mut t = line.split_whitespace();
        let r = parse_usize(t.next(), "row index")?;
        let c = parse_usize(t.next(), "column index")?;
        if r == 0 || c == 0 || r > rows || c > cols {
            return Err(format!("entry ({r}, {c}) outside {rows}x{cols}"));
        }
        let v = if pattern {
            1.0
        } else {
            parse_f64(t.next().ok_or("missing value")?)?
        };
        m[[r - 1, c - 1]] += v;
        if symmetric && r != c {
            m[[c - 1, r - 1]] += v;
        }
        seen += 1;
    }
    if seen != nnz {
        return Err(format!("expected {nnz} entries, found {seen}"));
    }
    Ok(m)
}

fn matrix_file(i: usize) -> String {
    format!("R_{}.mtx.txt", i + 1)
}

/// Writes a bundle as dense text; `planted` factors are stored alongside as
/// `planted_G.txt` and `planted_S_i.txt`.
pub fn save_bundle(
    bundle: &DataBundle,
    dir: &Path,
    planted: Option<&Factorization>,
    generator: Option<(u64, f64)>,
) -> Result<Manifest> {
    create_dir(dir)?;
    let matrices: Vec<String> = (0..bundle.count()).map(matrix_file).collect();
    for (name, m) in matrices.iter().zip(bundle.matrices()) {
        write_dense(m, &dir.join(name))?;
    }
    if let Some(p) = planted {
        write_dense(&p.g, &dir.join("planted_G.txt"))?;
        for (i, s) in p.s.iter().enumerate() {
            write_dense(s, &dir.join(format!("planted_S_{}.txt", i + 1)))?;
        }
    }
    let manifest = Manifest {
        format: BUNDLE_FORMAT.into(),
        label: bundle.label().into(),
        n: bundle.order(),
        count: bundle.count(),
        matrices,
        norm_sq_total: bundle.norm_sq_total(),
        matrix_format: "dense".into(),
        planted_k: planted.map(Factorization::rank),
        seed: generator.map(|g| g.0),
        density: generator.map(|g| g.1),
    };
    let path = dir.join(MANIFEST_FILE);
    write(&path, &(serde_json::to_string_pretty(&manifest)? + "\n"))?;
    Ok(manifest)
}

pub fn load_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let manifest: Manifest =
        serde_json::from_str(&read(&path)?).map_err(|e| Error::parse(&path, e.to_string()))?;
    if manifest.format != BUNDLE_FORMAT {
        return Err(Error::parse(&path, format!("unknown format tag '{}'", manifest.format)));
    }
    if manifest.matrices.len() != manifest.count || manifest.count == 0 {
        return Err(Error::parse(
            &path,
            format!("count {} does not match {} matrix files", manifest.count, manifest.matrices.len()),
        ));
    }
    Ok(manifest)
}

/// Loads and validates a bundle directory. With `symmetrize`, every `R_i`
/// is replaced by `(R_i + R_iᵀ)/2` before validation.
pub fn load_bundle(dir: &Path, symmetrize: bool) -> Result<DataBundle> {
    let manifest = load_manifest(dir)?;
    let mut matrices = Vec::with_capacity(manifest.count);
    for name in &manifest.matrices {
        let path = dir.join(name);
        let m = read_matrix(&path)?;
        if m.nrows() != manifest.n || m.ncols() != manifest.n {
            return Err(Error::InvalidData(format!(
                "{} is {}x{}, manifest says order {}",
                path.display(),
                m.nrows(),
                m.ncols(),
                manifest.n
            )));
        }
        matrices.push(m);
    }
    if symmetrize {
        DataBundle::new_symmetrized(manifest.label, matrices)
    } else {
        DataBundle::new(manifest.label, matrices)
    }
}

/// Planted factors stored next to a generated bundle, if any.
pub fn load_planted(dir: &Path) -> Result<Option<Factorization>> {
    let g_path = dir.join("planted_G.txt");
    if !g_path.exists() {
        return Ok(None);
    }
    let g = read_matrix(&g_path)?;
    let s = read_numbered(dir, "planted_S_")?;
    Ok(Some(Factorization::native(g, s)?))
}

fn read_numbered(dir: &Path, prefix: &str) -> Result<Vec<Matrix>> {
    let mut out = Vec::new();
    loop {
        let path = dir.join(format!("{prefix}{}.txt", out.len() + 1));
        if !path.exists() {
            return Ok(out);
        }
        out.push(read_matrix(&path)?);
    }
}

/// `summary.json` of a solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub bundle: String,
    pub method: String,
    pub init: String,
    pub config: SolverConfig,
    pub stop_reason: StopReason,
    pub final_se: Option<f64>,
    pub final_mse: Option<f64>,
    pub iterations: usize,
    pub seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

pub fn write_trace_csv(trace: &ConvergenceTrace, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    for r in &trace.records {
        w.serialize(r)?;
    }
    if trace.records.is_empty() {
        w.write_record(["iteration", "se", "mse", "elapsed_seconds"])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(path, format!("{other:?}")),
    }
}

pub fn write_summary(summary: &RunSummary, path: &Path) -> Result<()> {
    write(path, &(serde_json::to_string_pretty(summary)? + "\n"))
}

pub fn read_summary(path: &Path) -> Result<RunSummary> {
    serde_json::from_str(&read(path)?).map_err(|e| Error::parse(path, e.to_string()))
}

/// Writes `G.txt`, `S_i.txt`, `trace.csv` and `summary.json`. Only native
/// factorizations are accepted.
pub fn save_factorization(
    fact: &Factorization,
    trace: &ConvergenceTrace,
    summary: &RunSummary,
    dir: &Path,
) -> Result<()> {
    if fact.coords != Coords::Native {
        return Err(Error::Coords {
            expected: Coords::Native,
            found: fact.coords,
        });
    }
    create_dir(dir)?;
    write_dense(&fact.g, &dir.join("G.txt"))?;
    for (i, s) in fact.s.iter().enumerate() {
        write_dense(s, &dir.join(format!("S_{}.txt", i + 1)))?;
    }
    write_trace_csv(trace, &dir.join("trace.csv"))?;
    write_summary(summary, &dir.join("summary.json"))
}

pub fn load_factorization(dir: &Path) -> Result<Factorization> {
    let g = read_matrix(&dir.join("G.txt"))?;
    let s = read_numbered(dir, "S_")?;
    if s.is_empty() {
        return Err(Error::InvalidData(format!("no S_1.txt in {}", dir.display())));
    }
    Factorization::native(g, s)
}

/// Sub-directories of `root` that hold a bundle manifest, sorted by name.
pub fn find_bundles(root: &Path) -> Result<Vec<PathBuf>> {
    if root.join(MANIFEST_FILE).exists() {
        return Ok(vec![root.to_path_buf()]);
    }
    let mut out = Vec::new();
    for entry in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let path = entry.map_err(|e| Error::io(root, e))?.path();
        if path.join(MANIFEST_FILE).exists() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}
