//! Run configuration.
//!
//! A config file is flat text with one `key = value` pair per line. Blank
//! lines and lines starting with `#` are ignored. Every key has a flag of the
//! same name with `_` spelled `-` (`error_rate` is `--error-rate`), and flags
//! override the file.
//!
//! Every output embeds the resolved configuration, so any output file can be
//! passed back through `--config` to repeat the run.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use scarid_core::detect::PipelineConfig;
use scarid_core::dynamics::TimeGrid;
use scarid_core::hilbert::{BitString, Boundary, DEFAULT_MAX_LENGTH};
use scarid_core::idest::{PlateauRule, ScanOptions};
use scarid_core::metric::DistanceKind;
use scarid_core::sampling::ReadoutChannel;

use crate::error::{CliError, CliResult};
use crate::formats;

/// Every recognised key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("length", "chain length L, 2..=20 (default 10)"),
    ("boundary", "pbc or obc (default pbc)"),
    ("rabi", "Rabi frequency (default 1)"),
    ("t_start", "start of the time window (default 0)"),
    ("t_end", "end of the time window (default 10)"),
    ("timesteps", "number of evenly spaced times in (t_start, t_end] (default 20)"),
    ("shots", "shots per timestep (default 500)"),
    ("error_rate", "symmetric readout flip probability, [0, 0.5) (default 0)"),
    ("error_rate_01", "ground-to-excited flip probability, overrides error_rate"),
    ("error_rate_10", "excited-to-ground flip probability, overrides error_rate"),
    ("t2_min", "smallest outer radius of the scale scan (default 2)"),
    ("t2_max", "largest outer radius of the scale scan (default max(2, L/2))"),
    ("plateau_window", "minimum number of consecutive scales in a plateau (default 3)"),
    ("plateau_tolerance", "maximum spread of estimates inside a plateau (default 0.15)"),
    ("bootstrap", "bootstrap resamples per scale (default 0, id-scan 200)"),
    ("weak_fraction", "quantile below which unflagged states are listed as weak (default 0.1)"),
    ("seed", "RNG seed (default: drawn at random and recorded)"),
    ("jobs", "worker threads, 0 for all cores (default 0)"),
    ("output_dir", "directory for output files (default scarid-out)"),
    ("state", "initial state: z2, z2prime, z3, ground or a bitstring (default z2)"),
    ("states", "comma-separated initial states or all (detect default all, others: state)"),
    ("distance", "pem or hs (default pem)"),
    ("dim", "embedding dimension (default 2)"),
    ("max_iter", "SMACOF iteration cap (default 500)"),
    ("tol", "SMACOF relative stress tolerance (default 1e-9)"),
    ("mds_mode", "separate or joint (default separate)"),
    ("matrix_format", "csv, bin or both (default csv)"),
    ("dump_states", "evolve also writes the binary state dump (default false)"),
    ("input", "input file for mds (distance matrix) or id-scan (shot CSV)"),
];

pub type Entries = BTreeMap<String, String>;

/// Description of `key` from [`KEYS`].
pub fn key_help(key: &str) -> &'static str {
    KEYS.iter().find(|(k, _)| *k == key).map_or("", |(_, h)| h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MdsMode {
    Separate,
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    Bin,
    Both,
}

impl MatrixFormat {
    pub fn csv(self) -> bool {
        matches!(self, MatrixFormat::Csv | MatrixFormat::Both)
    }

    pub fn bin(self) -> bool {
        matches!(self, MatrixFormat::Bin | MatrixFormat::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedSource {
    Given,
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub length: usize,
    pub boundary: Boundary,
    pub rabi: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub timesteps: usize,
    pub shots: usize,
    pub error_rate: f64,
    pub error_rate_01: Option<f64>,
    pub error_rate_10: Option<f64>,
    pub t2_min: u32,
    pub t2_max: Option<u32>,
    pub plateau_window: usize,
    pub plateau_tolerance: f64,
    pub bootstrap: Option<usize>,
    pub weak_fraction: f64,
    pub seed: Option<u64>,
    pub seed_source: SeedSource,
    pub jobs: usize,
    pub output_dir: PathBuf,
    pub state: String,
    pub states: Option<String>,
    pub distance: DistanceKind,
    pub dim: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub mds_mode: MdsMode,
    pub matrix_format: MatrixFormat,
    pub dump_states: bool,
    pub input: Option<PathBuf>,
    /// Keys set by the file or a flag rather than defaulted.
    pub explicit: BTreeSet<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            length: 10,
            boundary: Boundary::Periodic,
            rabi: 1.0,
            t_start: 0.0,
            t_end: 10.0,
            timesteps: 20,
            shots: 500,
            error_rate: 0.0,
            error_rate_01: None,
            error_rate_10: None,
            t2_min: 2,
            t2_max: None,
            plateau_window: 3,
            plateau_tolerance: 0.15,
            bootstrap: None,
            weak_fraction: 0.1,
            seed: None,
            seed_source: SeedSource::Given,
            jobs: 0,
            output_dir: PathBuf::from("scarid-out"),
            state: String::from("z2"),
            states: None,
            distance: DistanceKind::Pem,
            dim: 2,
            max_iter: 500,
            tol: 1e-9,
            mds_mode: MdsMode::Separate,
            matrix_format: MatrixFormat::Csv,
            dump_states: false,
            input: None,
            explicit: BTreeSet::new(),
        }
    }
}

fn value<T: std::str::FromStr>(key: &str, raw: &str) -> CliResult<T>
where
    T::Err: std::fmt::Display,
{
    raw.parse().map_err(|e| CliError::usage(format!("invalid value '{raw}' for {key}: {e}")))
}

fn choice<T: Copy>(key: &str, raw: &str, options: &[(&str, T)]) -> CliResult<T> {
    let lower = raw.to_ascii_lowercase();
    options.iter().find(|(name, _)| *name == lower).map(|o| o.1).ok_or_else(|| {
        let names: Vec<&str> = options.iter().map(|o| o.0).collect();
        CliError::usage(format!("invalid value '{raw}' for {key}: expected one of {}", names.join(", ")))
    })
}

/// Parse `key = value` lines.
pub fn parse_entries(text: &str, origin: &str) -> CliResult<Entries> {
    let mut out = Entries::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::usage(format!("{origin}:{}: expected 'key = value'", n + 1)));
        };
        let key = k.trim();
        if !KEYS.iter().any(|(name, _)| *name == key) {
            return Err(CliError::usage(format!("{origin}:{}: unknown key '{key}'", n + 1)));
        }
        out.insert(key.to_string(), v.trim().to_string());
    }
    Ok(out)
}

/// Read a config file, or the configuration embedded in any output file.
pub fn load_file(path: &Path) -> CliResult<Entries> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let origin = path.display().to_string();
    if let Some(text) = formats::binary_header_text(&bytes) {
        return parse_entries(&formats::strip_embedded(&text), &origin);
    }
    let text = String::from_utf8(bytes).map_err(|_| CliError::usage(format!("{origin}: not UTF-8")))?;
    if text.trim_start().starts_with('{') {
        let json: serde_json::Value = serde_json::from_str(&text)?;
        let Some(obj) = json.get("config").and_then(|c| c.as_object()) else {
            return Err(CliError::usage(format!("{origin}: JSON without a 'config' object")));
        };
        let mut lines = String::new();
        for (k, v) in obj {
            let v = v.as_str().map(str::to_string).unwrap_or_else(|| v.to_string());
            lines.push_str(&format!("{k} = {v}\n"));
        }
        return parse_entries(&lines, &origin);
    }
    if text.lines().any(formats::is_embedded_line) {
        return parse_entries(&formats::strip_embedded(&text), &origin);
    }
    parse_entries(&text, &origin)
}

impl RunConfig {
    /// Apply file entries, then flag entries, then validate.
    pub fn resolve(file: &Entries, flags: &Entries) -> CliResult<Self> {
        let mut cfg = RunConfig::default();
        for layer in [file, flags] {
            for (k, v) in layer {
                cfg.set(k, v)?;
            }
        }
        cfg.finish()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, raw: &str) -> CliResult<()> {
        match key {
            "length" => self.length = value(key, raw)?,
            "boundary" => {
                self.boundary = choice(
                    key,
                    raw,
                    &[
                        ("pbc", Boundary::Periodic),
                        ("periodic", Boundary::Periodic),
                        ("obc", Boundary::Open),
                        ("open", Boundary::Open),
                    ],
                )?
            }
            "rabi" => self.rabi = value(key, raw)?,
            "t_start" => self.t_start = value(key, raw)?,
            "t_end" => self.t_end = value(key, raw)?,
            "timesteps" => self.timesteps = value(key, raw)?,
            "shots" => self.shots = value(key, raw)?,
            "error_rate" => self.error_rate = value(key, raw)?,
            "error_rate_01" => self.error_rate_01 = Some(value(key, raw)?),
            "error_rate_10" => self.error_rate_10 = Some(value(key, raw)?),
            "t2_min" => self.t2_min = value(key, raw)?,
            "t2_max" => self.t2_max = Some(value(key, raw)?),
            "plateau_window" => self.plateau_window = value(key, raw)?,
            "plateau_tolerance" => self.plateau_tolerance = value(key, raw)?,
            "bootstrap" => self.bootstrap = Some(value(key, raw)?),
            "weak_fraction" => self.weak_fraction = value(key, raw)?,
            "seed" => self.seed = Some(value(key, raw)?),
            "jobs" => self.jobs = value(key, raw)?,
            "output_dir" => self.output_dir = PathBuf::from(raw),
            "state" => self.state = raw.to_string(),
            "states" => self.states = Some(raw.to_string()),
            "distance" => {
                self.distance = choice(key, raw, &[("pem", DistanceKind::Pem), ("hs", DistanceKind::HilbertSchmidt)])?
            }
            "dim" => self.dim = value(key, raw)?,
            "max_iter" => self.max_iter = value(key, raw)?,
            "tol" => self.tol = value(key, raw)?,
            "mds_mode" => {
                self.mds_mode = choice(key, raw, &[("separate", MdsMode::Separate), ("joint", MdsMode::Joint)])?
            }
            "matrix_format" => {
                self.matrix_format = choice(
                    key,
                    raw,
                    &[("csv", MatrixFormat::Csv), ("bin", MatrixFormat::Bin), ("both", MatrixFormat::Both)],
                )?
            }
            "dump_states" => self.dump_states = value(key, raw)?,
            "input" => self.input = Some(PathBuf::from(raw)),
            _ => return Err(CliError::usage(format!("unknown key '{key}'"))),
        }
        self.explicit.insert(key.to_string());
        Ok(())
    }

    fn finish(&mut self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Usage(msg));
        if !(2..=DEFAULT_MAX_LENGTH).contains(&self.length) {
            return bad(format!("length must lie in 2..={DEFAULT_MAX_LENGTH}, got {}", self.length));
        }
        if !(self.rabi.is_finite() && self.rabi != 0.0) {
            return bad("rabi must be finite and nonzero".into());
        }
        if !(self.t_start.is_finite() && self.t_end.is_finite() && self.t_end > self.t_start) {
            return bad("t_end must exceed t_start".into());
        }
        if self.timesteps == 0 || self.shots == 0 {
            return bad("timesteps and shots must be at least 1".into());
        }
        for rate in [Some(self.error_rate), self.error_rate_01, self.error_rate_10].into_iter().flatten() {
            if !(0.0..0.5).contains(&rate) {
                return bad(format!("error rates must lie in [0, 0.5), got {rate}"));
            }
        }
        let t2_max = self.t2_max.unwrap_or((self.length as u32 / 2).max(2));
        if self.t2_min < 2 || t2_max < self.t2_min || t2_max as usize > self.length {
            return bad(format!("scale range must satisfy 2 <= t2_min <= t2_max <= L, got {}..={t2_max}", self.t2_min));
        }
        self.t2_max = Some(t2_max);
        if self.plateau_window == 0 || !(self.plateau_tolerance > 0.0) {
            return bad("plateau_window and plateau_tolerance must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.weak_fraction) {
            return bad("weak_fraction must lie in [0, 1]".into());
        }
        if self.dim == 0 || self.max_iter == 0 || !(self.tol > 0.0) {
            return bad("dim, max_iter and tol must be positive".into());
        }
        if self.seed.is_none() {
            self.seed = Some(rand::random());
            self.seed_source = SeedSource::Random;
        }
        if self.jobs == 0 {
            self.jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("seed is resolved")
    }

    pub fn bootstrap_or(&self, default: usize) -> usize {
        self.bootstrap.unwrap_or(default)
    }

    /// The resolved configuration as `key = value` pairs, in [`KEYS`] order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let b = |v: bool| v.to_string();
        let mut out: Vec<(&'static str, String)> = vec![
            ("length", self.length.to_string()),
            ("boundary", if self.boundary.is_periodic() { "pbc" } else { "obc" }.into()),
            ("rabi", self.rabi.to_string()),
            ("t_start", self.t_start.to_string()),
            ("t_end", self.t_end.to_string()),
            ("timesteps", self.timesteps.to_string()),
            ("shots", self.shots.to_string()),
            ("error_rate", self.error_rate.to_string()),
        ];
        if let Some(r) = self.error_rate_01 {
            out.push(("error_rate_01", r.to_string()));
        }
        if let Some(r) = self.error_rate_10 {
            out.push(("error_rate_10", r.to_string()));
        }
        out.extend([
            ("t2_min", self.t2_min.to_string()),
            ("t2_max", self.t2_max.map(|t| t.to_string()).unwrap_or_default()),
            ("plateau_window", self.plateau_window.to_string()),
            ("plateau_tolerance", self.plateau_tolerance.to_string()),
        ]);
        if let Some(n) = self.bootstrap {
            out.push(("bootstrap", n.to_string()));
        }
        out.extend([
            ("weak_fraction", self.weak_fraction.to_string()),
            ("seed", self.seed.map(|s| s.to_string()).unwrap_or_default()),
            ("jobs", self.jobs.to_string()),
            ("output_dir", self.output_dir.display().to_string()),
            ("state", self.state.clone()),
        ]);
        if let Some(s) = &self.states {
            out.push(("states", s.clone()));
        }
        out.extend([
            ("distance", if self.distance == DistanceKind::Pem { "pem" } else { "hs" }.into()),
            ("dim", self.dim.to_string()),
            ("max_iter", self.max_iter.to_string()),
            ("tol", self.tol.to_string()),
            ("mds_mode", if self.mds_mode == MdsMode::Joint { "joint" } else { "separate" }.into()),
            (
                "matrix_format",
                match self.matrix_format {
                    MatrixFormat::Csv => "csv",
                    MatrixFormat::Bin => "bin",
                    MatrixFormat::Both => "both",
                }
                .into(),
            ),
            ("dump_states", b(self.dump_states)),
        ]);
        if let Some(p) = &self.input {
            out.push(("input", p.display().to_string()));
        }
        out
    }

    pub fn time_grid(&self) -> TimeGrid {
        TimeGrid { start: self.t_start, end: self.t_end, steps: self.timesteps }
    }

    pub fn channel(&self) -> CliResult<ReadoutChannel> {
        let up = self.error_rate_01.unwrap_or(self.error_rate);
        let down = self.error_rate_10.unwrap_or(self.error_rate);
        Ok(ReadoutChannel::asymmetric(up, down)?)
    }

    pub fn t2_values(&self) -> Vec<u32> {
        (self.t2_min..=self.t2_max.expect("t2_max is resolved")).collect()
    }

    pub fn plateau(&self) -> PlateauRule {
        PlateauRule { min_window: self.plateau_window, tolerance: self.plateau_tolerance }
    }

    pub fn scan_options(&self, bootstrap: usize) -> ScanOptions {
        ScanOptions {
            t2_values: self.t2_values(),
            plateau: self.plateau(),
            upper: 4.0 * self.length as f64,
            bootstrap,
            ci_band: (0.16, 0.84),
            seed: self.seed(),
        }
    }

    /// Initial states named by `states`, or `None` for all basis states.
    /// Without `states`, single-trajectory commands fall back to `state`.
    pub fn state_list(&self, all_by_default: bool) -> CliResult<Option<Vec<BitString>>> {
        let raw = match &self.states {
            Some(s) => s.clone(),
            None if all_by_default => return Ok(None),
            None => self.state.clone(),
        };
        if raw.trim().eq_ignore_ascii_case("all") {
            return Ok(None);
        }
        raw.split(',').map(|s| resolve_state(s.trim(), self.length)).collect::<CliResult<Vec<_>>>().map(Some)
    }

    pub fn initial_state(&self) -> CliResult<BitString> {
        resolve_state(&self.state, self.length)
    }

    pub fn pipeline(&self) -> CliResult<PipelineConfig> {
        Ok(PipelineConfig {
            length: self.length,
            boundary: self.boundary,
            rabi: self.rabi,
            times: self.time_grid(),
            shots: self.shots,
            channel: self.channel()?,
            seed: self.seed(),
            t2_values: self.t2_values(),
            plateau: self.plateau(),
            bootstrap: self.bootstrap_or(0),
            initial_states: self.state_list(true)?,
            weak_fraction: self.weak_fraction,
            max_length: DEFAULT_MAX_LENGTH,
        })
    }
}

/// Named product states or an explicit bitstring (most significant site first).
pub fn resolve_state(name: &str, length: usize) -> CliResult<BitString> {
    let bits = match name.to_ascii_lowercase().as_str() {
        "z2" | "neel" => BitString::z2(length),
        "z2prime" | "z2'" | "z2p" => BitString::z2_prime(length),
        "z3" => BitString::z3(length),
        "ground" | "zero" | "polarized" => BitString::ground(length),
        _ => name.parse::<BitString>().map_err(|e| CliError::usage(format!("invalid initial state '{name}': {e}")))?,
    };
    if bits.len() != length {
        return Err(CliError::usage(format!("initial state '{name}' has {} sites but length is {length}", bits.len())));
    }
    Ok(bits)
}
