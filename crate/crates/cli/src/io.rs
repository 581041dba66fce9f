//! On-disk formats.
//!
//! Problem files are binary: magic `TRPB`, format version (u32), `n` and `k`
//! (u64), `θ` (f64), then `A`, `B` (`n×n`) and `D` (`n×k`) as row-major f64,
//! everything little-endian. Datasets are directories holding a
//! `manifest.csv` (`kind,file,rows,cols`), one headerless CSV per view with
//! one row per feature and one column per sample, and a labels CSV with one
//! integer per line. Text output writes floats in shortest round-trip form.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use trace_ratio::linalg::SymmetricMatrix;
use trace_ratio::multiview::MultiViewDataset;
use trace_ratio::problem::TraceRatioProblem;
use trace_ratio::{Error, Result};

pub const PROBLEM_MAGIC: [u8; 4] = *b"TRPB";
pub const PROBLEM_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 8 + 8;

pub const MANIFEST: &str = "manifest.csv";

fn format_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Format { path: path.to_path_buf(), msg: msg.into() }
}

pub fn encode_problem(p: &TraceRatioProblem<f64>) -> Vec<u8> {
    let (n, k) = (p.n(), p.k());
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * (2 * n * n + n * k));
    buf.extend_from_slice(&PROBLEM_MAGIC);
    buf.extend_from_slice(&PROBLEM_VERSION.to_le_bytes());
    buf.extend_from_slice(&(n as u64).to_le_bytes());
    buf.extend_from_slice(&(k as u64).to_le_bytes());
    buf.extend_from_slice(&p.theta().to_le_bytes());
    for m in [p.a().as_matrix(), p.b().as_matrix(), p.d()] {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                buf.extend_from_slice(&m[(i, j)].to_le_bytes());
            }
        }
    }
    buf
}

pub fn decode_problem(bytes: &[u8], path: &Path) -> Result<TraceRatioProblem<f64>> {
    if bytes.len() < HEADER_LEN {
        return Err(format_err(path, "file too short for a problem header"));
    }
    if bytes[..4] != PROBLEM_MAGIC {
        return Err(format_err(path, "not a problem file (bad magic)"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != PROBLEM_VERSION {
        return Err(format_err(path, format!("unsupported format version {version}")));
    }
    let n = usize::try_from(u64_at(8)).map_err(|_| format_err(path, "n does not fit in memory"))?;
    let k = usize::try_from(u64_at(16)).map_err(|_| format_err(path, "k does not fit in memory"))?;
    let theta = f64_at(24);
    let expected = n
        .checked_mul(n)
        .and_then(|nn| nn.checked_mul(2))
        .and_then(|v| v.checked_add(n.checked_mul(k)?))
        .and_then(|v| v.checked_mul(8))
        .and_then(|v| v.checked_add(HEADER_LEN))
        .ok_or_else(|| format_err(path, "dimensions overflow"))?;
    if bytes.len() != expected {
        return Err(format_err(
            path,
            format!("expected {expected} bytes for n = {n}, k = {k}, found {}", bytes.len()),
        ));
    }
    let mut offset = HEADER_LEN;
    let mut read = |rows: usize, cols: usize| {
        let m = DMatrix::from_fn(rows, cols, |i, j| f64_at(offset + 8 * (i * cols + j)));
        offset += 8 * rows * cols;
        m
    };
    let a = read(n, n);
    let b = read(n, n);
    let d = read(n, k);
    let wrap = |e: Error| format_err(path, e.to_string());
    TraceRatioProblem::new(SymmetricMatrix::new(a).map_err(wrap)?, SymmetricMatrix::new(b).map_err(wrap)?, d, theta, k)
        .map_err(wrap)
}

pub fn write_problem(path: &Path, p: &TraceRatioProblem<f64>) -> Result<()> {
    fs::write(path, encode_problem(p))?;
    Ok(())
}

pub fn read_problem(path: &Path) -> Result<TraceRatioProblem<f64>> {
    let bytes = fs::read(path).map_err(|e| format_err(path, e.to_string()))?;
    decode_problem(&bytes, path)
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// CSV file opened with a `# ...` provenance line.
pub struct CsvOut {
    path: PathBuf,
    writer: csv::Writer<fs::File>,
}

impl CsvOut {
    pub fn create(path: &Path, comment: &str, header: Option<&[&str]>) -> Result<Self> {
        let mut file = fs::File::create(path).map_err(|e| format_err(path, e.to_string()))?;
        writeln!(file, "# {comment}").map_err(|e| format_err(path, e.to_string()))?;
        let writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        let mut out = Self { path: path.to_path_buf(), writer };
        if let Some(h) = header {
            out.row(h)?;
        }
        Ok(out)
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(|e| format_err(&self.path, e.to_string()))
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush().map_err(|e| format_err(&self.path, e.to_string()))
    }
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| format_err(path, e.to_string()))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

/// Headerless numeric CSV as a matrix.
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, rec) in reader(path)?.records().enumerate() {
        let rec = rec.map_err(|e| format_err(path, e.to_string()))?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(c, field)| {
                field
                    .parse::<f64>()
                    .map_err(|_| format_err(path, format!("row {}, column {}: `{field}` is not a number", r + 1, c + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(format_err(
                    path,
                    format!("row {} has {} columns, row 1 has {}", r + 1, row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

pub fn write_matrix_csv(path: &Path, comment: &str, m: &DMatrix<f64>) -> Result<()> {
    let mut out = CsvOut::create(path, comment, None)?;
    for i in 0..m.nrows() {
        out.row((0..m.ncols()).map(|j| fmt_f64(m[(i, j)])))?;
    }
    out.finish()
}

fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let mut labels = Vec::new();
    for (r, rec) in reader(path)?.records().enumerate() {
        let rec = rec.map_err(|e| format_err(path, e.to_string()))?;
        for field in rec.iter() {
            let v = field
                .parse::<usize>()
                .map_err(|_| format_err(path, format!("line {}: `{field}` is not a class index", r + 1)))?;
            labels.push(v);
        }
    }
    Ok(labels)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub kind: String,
    pub file: String,
    pub rows: usize,
    pub cols: usize,
}

fn read_manifest(dir: &Path) -> Result<Vec<ManifestEntry>> {
    let path = dir.join(MANIFEST);
    let mut rdr = reader(&path)?;
    let mut entries = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| format_err(&path, e.to_string()))?;
        if r == 0 && rec.get(0) == Some("kind") {
            continue;
        }
        if rec.len() != 4 {
            return Err(format_err(&path, format!("line {}: expected kind,file,rows,cols", r + 1)));
        }
        let num = |i: usize| {
            rec[i]
                .parse::<usize>()
                .map_err(|_| format_err(&path, format!("line {}: `{}` is not a count", r + 1, &rec[i])))
        };
        entries.push(ManifestEntry { kind: rec[0].to_string(), file: rec[1].to_string(), rows: num(2)?, cols: num(3)? });
    }
    Ok(entries)
}

pub fn read_dataset(dir: &Path) -> Result<MultiViewDataset<f64>> {
    let manifest = read_manifest(dir)?;
    let mut views = Vec::new();
    let mut labels = None;
    for e in &manifest {
        let path = dir.join(&e.file);
        match e.kind.as_str() {
            "view" => {
                let z = read_matrix_csv(&path)?;
                if z.shape() != (e.rows, e.cols) {
                    return Err(format_err(
                        &path,
                        format!(
                            "view {} is {}×{}, manifest says {}×{}",
                            views.len(),
                            z.nrows(),
                            z.ncols(),
                            e.rows,
                            e.cols
                        ),
                    ));
                }
                views.push(z);
            }
            "labels" => {
                if labels.is_some() {
                    return Err(format_err(&dir.join(MANIFEST), "more than one labels entry"));
                }
                let l = read_labels(&path)?;
                if l.len() != e.rows * e.cols {
                    return Err(format_err(
                        &path,
                        format!("{} labels, manifest says {}", l.len(), e.rows * e.cols),
                    ));
                }
                labels = Some((l, path));
            }
            other => return Err(format_err(&dir.join(MANIFEST), format!("unknown entry kind `{other}`"))),
        }
    }
    let (labels, labels_path) = labels.ok_or_else(|| format_err(&dir.join(MANIFEST), "no labels entry"))?;
    if views.is_empty() {
        return Err(format_err(&dir.join(MANIFEST), "no view entries"));
    }
    for (s, z) in views.iter().enumerate() {
        if z.ncols() != labels.len() {
            let file = &manifest.iter().filter(|e| e.kind == "view").nth(s).unwrap().file;
            return Err(format_err(
                &dir.join(file),
                format!("view {s} has {} samples, labels have {}", z.ncols(), labels.len()),
            ));
        }
    }
    MultiViewDataset::new(views, labels).map_err(|e| format_err(&labels_path, e.to_string()))
}

pub fn write_dataset(dir: &Path, comment: &str, ds: &MultiViewDataset<f64>) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut manifest = CsvOut::create(&dir.join(MANIFEST), comment, Some(&["kind", "file", "rows", "cols"]))?;
    for (s, z) in ds.views().iter().enumerate() {
        let file = format!("view{s}.csv");
        write_matrix_csv(&dir.join(&file), comment, z)?;
        manifest.row(["view".to_string(), file, z.nrows().to_string(), z.ncols().to_string()])?;
    }
    let mut labels = CsvOut::create(&dir.join("labels.csv"), comment, None)?;
    for l in ds.labels() {
        labels.row([l.to_string()])?;
    }
    labels.finish()?;
    manifest.row(["labels".to_string(), "labels.csv".to_string(), ds.n_samples().to_string(), "1".to_string()])?;
    manifest.finish()
}

/// Lowercase hex of the first 8 bytes of SHA-256 over `canonical`.
pub fn config_hash(canonical: &str) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(canonical.as_bytes());
    digest[..8].iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn ensure_dir(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| format_err(dir, e.to_string()))?;
    Ok(dir.to_path_buf())
}
