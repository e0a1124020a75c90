//! File formats.
//!
//! Text outputs start with a comment block: a `# scarid <version> <command>`
//! line followed by one `#@ key = value` line per configuration key. Readers
//! skip every line starting with `#`.
//!
//! | file | layout |
//! |------|--------|
//! | basis text | one bitstring per line, most significant site first, in basis order |
//! | shot CSV | `initial_state,t_index,t,bitstring`, one row per shot, `t_index` counts from 0 |
//! | trajectory CSV | `initial_state,t,observable,value` |
//! | distance matrix CSV | header row of labels, then one row of values per label |
//! | embedding CSV | `t,x1,x2[,x3..]`, one row per snapshot |
//! | scan CSV | `initial_state,t1,t2,d_hat,degenerate,ci_low,ci_high,reason` |
//! | report CSV | `initial_state,d_hat,flagged` |
//! | boxplot CSV | `kind,label,value` with kinds `point`, `flier`, `q1`, `median`, `q3`, `low_fence`, `high_fence`, `whisker_low`, `whisker_high` |
//!
//! Binary files are little-endian: an 8-byte magic, a `u32` header length,
//! the UTF-8 header (the same comment block as text files), then
//!
//! * state dump (`SCARIDS1`): `u64` snapshot count `n`, `u64` dimension `D`,
//!   `n` `f64` times, then `n` blocks of `D` `(re, im)` `f64` pairs, row =
//!   basis index;
//! * distance matrix (`SCARIDM1`): `u64` size `n`, `n` labels each as a
//!   `u32` byte length plus UTF-8, then `n²` `f64` values row-major.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use scarid_core::detect::DetectionReport;
use scarid_core::dynamics::{Complex64, QuenchTrajectory, StateVector};
use scarid_core::hilbert::BitString;
use scarid_core::idest::ScaleScan;
use scarid_core::mds::Coords;
use scarid_core::metric::DistanceMatrix;
use scarid_core::sampling::SampleSet;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const EMBED_PREFIX: &str = "#@ ";
pub const STATE_MAGIC: &[u8; 8] = b"SCARIDS1";
pub const MATRIX_MAGIC: &[u8; 8] = b"SCARIDM1";

pub fn is_embedded_line(line: &str) -> bool {
    line.starts_with(EMBED_PREFIX)
}

/// The `key = value` lines of an embedded configuration block.
pub fn strip_embedded(text: &str) -> String {
    text.lines().filter_map(|l| l.strip_prefix(EMBED_PREFIX)).flat_map(|l| [l, "\n"]).collect()
}

/// Comment block echoing the configuration.
pub fn header(cfg: &RunConfig, command: &str) -> String {
    let mut out = format!("# scarid {} {command}\n", env!("CARGO_PKG_VERSION"));
    for (k, v) in cfg.entries() {
        out.push_str(&format!("{EMBED_PREFIX}{k} = {v}\n"));
    }
    out
}

/// Header text of a binary file, if `bytes` starts with a known magic.
pub fn binary_header_text(bytes: &[u8]) -> Option<String> {
    if bytes.len() < 12 || !(bytes.starts_with(STATE_MAGIC) || bytes.starts_with(MATRIX_MAGIC)) {
        return None;
    }
    let n = u32::from_le_bytes(bytes[8..12].try_into().ok()?) as usize;
    String::from_utf8(bytes.get(12..12 + n)?.to_vec()).ok()
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn finish(path: &Path, mut w: impl Write) -> CliResult<()> {
    w.flush().map_err(|e| CliError::io(path, e))
}

fn csv_writer(path: &Path, header: &str) -> CliResult<csv::Writer<BufWriter<File>>> {
    let mut w = create(path)?;
    w.write_all(header.as_bytes()).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(w))
}

fn csv_reader(path: &Path) -> CliResult<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file))
}

fn parse_bits(path: &Path, raw: &str) -> CliResult<BitString> {
    raw.trim().parse().map_err(|e| CliError::format(path, format!("bad bitstring '{raw}': {e}")))
}

fn parse_f64(path: &Path, raw: &str) -> CliResult<f64> {
    raw.trim().parse().map_err(|_| CliError::format(path, format!("bad number '{raw}'")))
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    finish(path, w)
}

pub fn write_basis(path: &Path, header: &str, states: &[BitString]) -> CliResult<()> {
    let mut w = create(path)?;
    let mut text = String::from(header);
    for s in states {
        text.push_str(&format!("{s}\n"));
    }
    w.write_all(text.as_bytes()).map_err(|e| CliError::io(path, e))?;
    finish(path, w)
}

pub fn read_basis(path: &Path) -> CliResult<Vec<BitString>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(|l| parse_bits(path, l)).collect()
}

pub fn write_shots(path: &Path, header: &str, sets: &[SampleSet]) -> CliResult<()> {
    let mut w = csv_writer(path, header)?;
    w.write_record(["initial_state", "t_index", "t", "bitstring"])?;
    for set in sets {
        let initial = set.initial.to_string();
        for (k, (t, shots)) in set.times.iter().zip(&set.records).enumerate() {
            let (k, t) = (k.to_string(), t.to_string());
            for s in shots {
                w.write_record([initial.as_str(), &k, &t, &s.to_string()])?;
            }
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Shots grouped by initial state, in order of first appearance.
pub fn read_shots(path: &Path) -> CliResult<Vec<(BitString, Vec<BitString>)>> {
    let mut reader = csv_reader(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| CliError::format(path, format!("missing column {name}")))
    };
    let (ci, cb) = (col("initial_state")?, col("bitstring")?);
    let mut groups: Vec<(BitString, Vec<BitString>)> = Vec::new();
    let mut index: HashMap<BitString, usize> = HashMap::new();
    for row in reader.records() {
        let row = row?;
        let initial = parse_bits(path, &row[ci])?;
        let bits = parse_bits(path, &row[cb])?;
        let g = *index.entry(initial).or_insert_with(|| {
            groups.push((initial, Vec::new()));
            groups.len() - 1
        });
        groups[g].1.push(bits);
    }
    Ok(groups)
}

pub struct TrajectoryRow {
    pub initial: BitString,
    pub t: f64,
    pub observable: &'static str,
    pub value: f64,
}

pub fn write_trajectory(path: &Path, header: &str, rows: &[TrajectoryRow]) -> CliResult<()> {
    let mut w = csv_writer(path, header)?;
    w.write_record(["initial_state", "t", "observable", "value"])?;
    for r in rows {
        w.write_record([r.initial.to_string(), r.t.to_string(), r.observable.to_string(), r.value.to_string()])?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn binary_prefix(magic: &[u8; 8], header: &str) -> Vec<u8> {
    let mut out = magic.to_vec();
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    out
}

struct Cursor<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn open(path: &'a Path, bytes: &'a [u8], magic: &[u8; 8]) -> CliResult<Self> {
        if !bytes.starts_with(magic) {
            return Err(CliError::format(path, "wrong magic"));
        }
        let mut c = Cursor { path, bytes, pos: 8 };
        let n = c.u32()? as usize;
        c.take(n)?;
        Ok(c)
    }

    fn take(&mut self, n: usize) -> CliResult<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let Some(end) = end else {
            return Err(CliError::format(self.path, "truncated file"));
        };
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> CliResult<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> CliResult<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> CliResult<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn count(&mut self, per_item: usize) -> CliResult<usize> {
        let n = self.u64()? as usize;
        if n.saturating_mul(per_item) > self.bytes.len() - self.pos {
            return Err(CliError::format(self.path, "count exceeds file size"));
        }
        Ok(n)
    }
}

pub fn write_state_dump(path: &Path, header: &str, traj: &QuenchTrajectory) -> CliResult<()> {
    let dim = traj.states.first().map_or(0, StateVector::dim);
    let mut out = binary_prefix(STATE_MAGIC, header);
    out.extend_from_slice(&(traj.len() as u64).to_le_bytes());
    out.extend_from_slice(&(dim as u64).to_le_bytes());
    for t in &traj.times {
        out.extend_from_slice(&t.to_le_bytes());
    }
    for s in &traj.states {
        for a in &s.amplitudes {
            out.extend_from_slice(&a.re.to_le_bytes());
            out.extend_from_slice(&a.im.to_le_bytes());
        }
    }
    let mut w = create(path)?;
    w.write_all(&out).map_err(|e| CliError::io(path, e))?;
    finish(path, w)
}

pub fn read_state_dump(path: &Path) -> CliResult<Vec<StateVector>> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let mut c = Cursor::open(path, &bytes, STATE_MAGIC)?;
    let n = c.count(8)?;
    let dim = c.count(0)?;
    let mut times = Vec::with_capacity(n);
    for _ in 0..n {
        times.push(c.f64()?);
    }
    let mut out = Vec::with_capacity(n);
    for t in times {
        let mut amps = Vec::with_capacity(dim);
        for _ in 0..dim {
            amps.push(Complex64::new(c.f64()?, c.f64()?));
        }
        let mut s = StateVector::from_amplitudes(amps);
        s.time = t;
        out.push(s);
    }
    Ok(out)
}

pub fn write_matrix_csv(path: &Path, header: &str, m: &DistanceMatrix) -> CliResult<()> {
    let mut w = csv_writer(path, header)?;
    w.write_record(m.labels())?;
    for row in m.values().chunks(m.len().max(1)) {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_matrix_bin(path: &Path, header: &str, m: &DistanceMatrix) -> CliResult<()> {
    let mut out = binary_prefix(MATRIX_MAGIC, header);
    out.extend_from_slice(&(m.len() as u64).to_le_bytes());
    for l in m.labels() {
        out.extend_from_slice(&(l.len() as u32).to_le_bytes());
        out.extend_from_slice(l.as_bytes());
    }
    for v in m.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let mut w = create(path)?;
    w.write_all(&out).map_err(|e| CliError::io(path, e))?;
    finish(path, w)
}

/// Read either matrix format, told apart by the binary magic.
pub fn read_matrix(path: &Path) -> CliResult<DistanceMatrix> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    if bytes.starts_with(MATRIX_MAGIC) {
        let mut c = Cursor::open(path, &bytes, MATRIX_MAGIC)?;
        let n = c.count(4)?;
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let len = c.u32()? as usize;
            let raw = c.take(len)?;
            labels.push(String::from_utf8(raw.to_vec()).map_err(|_| CliError::format(path, "label not UTF-8"))?);
        }
        let mut values = Vec::with_capacity(n * n);
        for _ in 0..n * n {
            values.push(c.f64()?);
        }
        return DistanceMatrix::from_values(labels, values).map_err(|e| CliError::format(path, e.to_string()));
    }
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(bytes.as_slice());
    let labels: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut values = Vec::with_capacity(labels.len() * labels.len());
    for row in reader.records() {
        for v in row?.iter() {
            values.push(parse_f64(path, v)?);
        }
    }
    DistanceMatrix::from_values(labels, values).map_err(|e| CliError::format(path, e.to_string()))
}

/// Time of a `t=<value>` label, or the label itself.
fn time_column(label: &str) -> String {
    let tail = label.rsplit_once("t=").map_or(label, |(_, t)| t);
    match tail.parse::<f64>() {
        Ok(t) => t.to_string(),
        Err(_) => label.to_string(),
    }
}

pub fn write_embedding_csv(path: &Path, header: &str, labels: &[String], coords: &Coords) -> CliResult<()> {
    let mut w = csv_writer(path, header)?;
    let mut head = vec![String::from("t")];
    head.extend((1..=coords.ncols()).map(|k| format!("x{k}")));
    w.write_record(&head)?;
    for (i, label) in labels.iter().enumerate() {
        let mut row = vec![time_column(label)];
        row.extend((0..coords.ncols()).map(|k| coords[(i, k)].to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_scan_csv(path: &Path, header: &str, scans: &[(BitString, ScaleScan)]) -> CliResult<()> {
    let mut w = csv_writer(path, header)?;
    w.write_record(["initial_state", "t1", "t2", "d_hat", "degenerate", "ci_low", "ci_high", "reason"])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (initial, scan) in scans {
        for e in &scan.estimates {
            let reason = e.degenerate.and_then(|d| serde_json::to_value(d).ok());
            let reason = reason.as_ref().and_then(|v| v.as_str()).unwrap_or("").to_string();
            w.write_record([
                initial.to_string(),
                e.t1.to_string(),
                e.t2.to_string(),
                e.d_hat.to_string(),
                e.is_degenerate().to_string(),
                opt(e.ci.map(|c| c.0)),
                opt(e.ci.map(|c| c.1)),
                reason,
            ])?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_report_csv(path: &Path, header: &str, report: &DetectionReport) -> CliResult<()> {
    let mut w = csv_writer(path, header)?;
    w.write_record(["initial_state", "d_hat", "flagged"])?;
    for o in &report.outcomes {
        let d = o.d_hat().map(|d| d.to_string()).unwrap_or_default();
        w.write_record([o.state.to_string(), d, report.is_flagged(&o.state).to_string()])?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_boxplot_csv(path: &Path, header: &str, report: &DetectionReport) -> CliResult<()> {
    let mut w = csv_writer(path, header)?;
    w.write_record(["kind", "label", "value"])?;
    for o in &report.outcomes {
        if let Some(d) = o.d_hat().filter(|d| d.is_finite()) {
            w.write_record(["point".to_string(), o.state.to_string(), d.to_string()])?;
        }
    }
    if let Some(b) = &report.boxplot {
        for (l, v) in &b.fliers {
            w.write_record(["flier", l.as_str(), &v.to_string()])?;
        }
        for (kind, v) in [
            ("q1", b.q1),
            ("median", b.median),
            ("q3", b.q3),
            ("low_fence", b.low_fence),
            ("high_fence", b.high_fence),
            ("whisker_low", b.whisker_low),
            ("whisker_high", b.whisker_high),
        ] {
            w.write_record([kind, "", &v.to_string()])?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}
