//! The unsupervised sweep: quench every product state, measure, estimate the
//! intrinsic dimension of the shots and flag the low outliers.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::Serialize;

use crate::dynamics::{build_pxp, diagonalize, quench, EigenDecomposition, TimeGrid};
use crate::hilbert::{enumerate_basis_with_max, BitString, Boundary, ConstrainedBasis, DEFAULT_MAX_LENGTH};
use crate::idest::{default_t2_values, scan_scales, PlateauRule, ScaleScan, ScanOptions};
use crate::sampling::{sample_trajectory, ReadoutChannel};
use crate::stats::{quantile_sorted, sorted};
use crate::{Error, Result};

/// How quartiles are computed; echoed in every report.
pub const QUARTILE_CONVENTION: &str = "linear interpolation between closest order statistics at position (n-1)q";

/// Quartiles, whiskers and fliers of a labelled sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxplotSummary {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub iqr: f64,
    pub low_fence: f64,
    pub high_fence: f64,
    /// Smallest value not below `q1 − 1.5 IQR`.
    pub whisker_low: f64,
    /// Largest value not above `q3 + 1.5 IQR`.
    pub whisker_high: f64,
    pub fliers: Vec<(String, f64)>,
}

pub fn boxplot_summary(values: &[(String, f64)]) -> Result<BoxplotSummary> {
    if values.len() < 4 {
        return Err(Error::TooFewValues { needed: 4, got: values.len() });
    }
    let raw: Vec<f64> = values.iter().map(|v| v.1).collect();
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("boxplot values must be finite".into()));
    }
    let s = sorted(&raw);
    let q1 = quantile_sorted(&s, 0.25);
    let median = quantile_sorted(&s, 0.5);
    let q3 = quantile_sorted(&s, 0.75);
    let iqr = q3 - q1;
    let low_fence = q1 - 1.5 * iqr;
    let high_fence = q3 + 1.5 * iqr;
    let inside = s.iter().copied().filter(|v| (low_fence..=high_fence).contains(v));
    let whisker_low = inside.clone().fold(f64::INFINITY, f64::min);
    let whisker_high = inside.fold(f64::NEG_INFINITY, f64::max);
    let fliers = values.iter().filter(|(_, v)| *v < low_fence || *v > high_fence).cloned().collect();
    Ok(BoxplotSummary { q1, median, q3, iqr, low_fence, high_fence, whisker_low, whisker_high, fliers })
}

/// Labels of the fliers below the lower whisker.
pub fn flag_scars(summary: &BoxplotSummary) -> Vec<String> {
    summary.fliers.iter().filter(|(_, v)| *v < summary.whisker_low).map(|(l, _)| l.clone()).collect()
}

/// Everything a sweep needs; every field is echoed into the report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub length: usize,
    pub boundary: Boundary,
    pub rabi: f64,
    pub times: TimeGrid,
    pub shots: usize,
    pub channel: ReadoutChannel,
    pub seed: u64,
    pub t2_values: Vec<u32>,
    pub plateau: PlateauRule,
    pub bootstrap: usize,
    /// Quenches to run; `None` means every basis state.
    pub initial_states: Option<Vec<BitString>>,
    /// Fraction of the lowest non-flagged estimates listed as weak candidates.
    pub weak_fraction: f64,
    pub max_length: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            length: 10,
            boundary: Boundary::Periodic,
            rabi: 1.0,
            times: TimeGrid::default(),
            shots: 500,
            channel: ReadoutChannel::noiseless(),
            seed: 0,
            t2_values: default_t2_values(10),
            plateau: PlateauRule::default(),
            bootstrap: 0,
            initial_states: None,
            weak_fraction: 0.1,
            max_length: DEFAULT_MAX_LENGTH,
        }
    }
}

impl PipelineConfig {
    pub fn scan_options(&self) -> ScanOptions {
        ScanOptions {
            t2_values: self.t2_values.clone(),
            plateau: self.plateau,
            upper: 4.0 * self.length as f64,
            bootstrap: self.bootstrap,
            ci_band: (0.16, 0.84),
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.times.validate()?;
        if self.shots == 0 {
            return Err(Error::InvalidArgument("shots must be at least 1".into()));
        }
        ReadoutChannel::asymmetric(self.channel.ground_to_excited, self.channel.excited_to_ground)?;
        if !(self.rabi.is_finite() && self.rabi != 0.0) {
            return Err(Error::InvalidArgument("rabi frequency must be finite and nonzero".into()));
        }
        if self.t2_values.is_empty() || self.t2_values.iter().any(|&t| t < 2 || t as usize > self.length) {
            return Err(Error::InvalidArgument(alloc::format!("t2 values must lie in 2..={}", self.length)));
        }
        if self.plateau.min_window == 0 || !(self.plateau.tolerance > 0.0) {
            return Err(Error::InvalidArgument("plateau window and tolerance must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.weak_fraction) {
            return Err(Error::InvalidArgument("weak fraction must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Basis, spectrum and time grid shared by every quench of a sweep.
#[derive(Debug, Clone)]
pub struct PipelineContext {
    pub config: PipelineConfig,
    pub basis: ConstrainedBasis,
    pub eig: EigenDecomposition,
    pub times: Vec<f64>,
    pub initial_states: Vec<BitString>,
}

impl PipelineContext {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        let basis = enumerate_basis_with_max(config.length, config.boundary, config.max_length)?;
        let eig = diagonalize(&build_pxp(&basis, config.rabi))?;
        let times = config.times.points();
        let initial_states = match &config.initial_states {
            Some(list) => {
                for s in list {
                    basis.require_index(s)?;
                }
                list.clone()
            }
            None => basis.states().to_vec(),
        };
        Ok(Self { config, basis, eig, times, initial_states })
    }

    /// Number of quenches in the sweep.
    pub fn len(&self) -> usize {
        self.initial_states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.initial_states.is_empty()
    }

    /// Quench, sample and estimate for the `item`-th initial state.
    pub fn analyze(&self, item: usize) -> StateOutcome {
        let initial = self.initial_states[item];
        let basis_index = self.basis.index_of(&initial).unwrap_or(item);
        let result = self.run_one(initial, basis_index);
        StateOutcome {
            basis_index,
            state: initial,
            scan: result.as_ref().ok().cloned(),
            error: result.err().map(|e| e.to_string()),
        }
    }

    fn run_one(&self, initial: BitString, basis_index: usize) -> Result<ScaleScan> {
        let cfg = &self.config;
        let traj = quench(&self.basis, &self.eig, initial, &self.times)?;
        let samples = sample_trajectory(&self.basis, &traj, cfg.shots, cfg.channel, cfg.seed, basis_index as u64)?;
        scan_scales(&samples.pooled(), &cfg.scan_options(), &alloc::format!("{initial}"))
    }
}

/// Result of one quench of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateOutcome {
    pub basis_index: usize,
    pub state: BitString,
    pub scan: Option<ScaleScan>,
    pub error: Option<String>,
}

impl StateOutcome {
    pub fn d_hat(&self) -> Option<f64> {
        self.scan.as_ref().map(|s| s.d_hat)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionReport {
    pub config: PipelineConfig,
    pub quartile_convention: &'static str,
    pub outcomes: Vec<StateOutcome>,
    pub boxplot: Option<BoxplotSummary>,
    pub scar_candidates: Vec<String>,
    pub weak_candidates: Vec<String>,
    /// `(state, reason)` for quenches excluded from the boxplot.
    pub failures: Vec<(String, String)>,
}

impl DetectionReport {
    pub fn d_hat_of(&self, state: &BitString) -> Option<f64> {
        self.outcomes.iter().find(|o| o.state == *state).and_then(StateOutcome::d_hat)
    }

    pub fn is_flagged(&self, state: &BitString) -> bool {
        let label = alloc::format!("{state}");
        self.scar_candidates.contains(&label)
    }
}

/// Aggregate per-state outcomes (in any order) into a report ordered by basis index.
pub fn summarize(config: PipelineConfig, mut outcomes: Vec<StateOutcome>) -> DetectionReport {
    outcomes.sort_by_key(|o| o.basis_index);
    let mut values = Vec::new();
    let mut failures = Vec::new();
    for o in &outcomes {
        let label = alloc::format!("{}", o.state);
        match (&o.scan, &o.error) {
            (Some(scan), _) if scan.d_hat.is_finite() => values.push((label, scan.d_hat)),
            (_, Some(err)) => failures.push((label, err.clone())),
            _ => failures.push((label, String::from("non-finite estimate"))),
        }
    }
    let boxplot = match boxplot_summary(&values) {
        Ok(b) => Some(b),
        Err(e) => {
            failures.push((String::from("<boxplot>"), e.to_string()));
            None
        }
    };
    let scar_candidates = boxplot.as_ref().map(flag_scars).unwrap_or_default();
    let weak_candidates = if values.is_empty() {
        Vec::new()
    } else {
        let s = sorted(&values.iter().map(|v| v.1).collect::<Vec<_>>());
        let cut = quantile_sorted(&s, config.weak_fraction);
        values.iter().filter(|(l, v)| *v <= cut && !scar_candidates.contains(l)).map(|(l, _)| l.clone()).collect()
    };
    DetectionReport {
        config,
        quartile_convention: QUARTILE_CONVENTION,
        outcomes,
        boxplot,
        scar_candidates,
        weak_candidates,
        failures,
    }
}

/// Single-threaded sweep.
pub fn run_pipeline(config: PipelineConfig) -> Result<DetectionReport> {
    let ctx = PipelineContext::new(config)?;
    let outcomes = (0..ctx.len()).map(|i| ctx.analyze(i)).collect();
    Ok(summarize(ctx.config, outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn labelled(v: &[f64]) -> Vec<(String, f64)> {
        v.iter().enumerate().map(|(i, &x)| (alloc::format!("s{i}"), x)).collect()
    }

    #[test]
    fn five_values() {
        let b = boxplot_summary(&labelled(&[1., 2., 3., 4., 5.])).unwrap();
        assert_eq!((b.q1, b.median, b.q3), (2.0, 3.0, 4.0));
        assert!(b.fliers.is_empty());
        assert_eq!((b.whisker_low, b.whisker_high), (1.0, 5.0));
    }

    #[test]
    fn constant_values() {
        let b = boxplot_summary(&labelled(&[2.; 5])).unwrap();
        assert_eq!((b.q1, b.median, b.q3, b.iqr), (2.0, 2.0, 2.0, 0.0));
        let mut v = labelled(&[2.; 5]);
        v.push((String::from("odd"), 2.01));
        let b = boxplot_summary(&v).unwrap();
        assert_eq!(b.fliers, [(String::from("odd"), 2.01)]);
        assert!(flag_scars(&b).is_empty());
    }

    #[test]
    fn scar_like_low_flier() {
        let b = boxplot_summary(&labelled(&[1.2, 2.0, 2.1, 1.9, 2.0, 2.2, 1.95])).unwrap();
        assert_abs_diff_eq!(b.q1, 1.925, epsilon = 1e-12);
        assert_abs_diff_eq!(b.q3, 2.05, epsilon = 1e-12);
        assert_eq!(flag_scars(&b), ["s0"]);
        assert_eq!(b.whisker_low, 1.9);
    }

    #[test]
    fn high_fliers_are_not_scars() {
        let b = boxplot_summary(&labelled(&[2.0, 2.1, 1.9, 2.0, 2.05, 9.0])).unwrap();
        assert_eq!(b.fliers.len(), 1);
        assert!(flag_scars(&b).is_empty());
    }

    #[test]
    fn too_few_values() {
        assert!(matches!(boxplot_summary(&labelled(&[1., 2., 3.])), Err(Error::TooFewValues { .. })));
    }

    #[test]
    fn config_validation() {
        let mut c = PipelineConfig::default();
        assert!(c.validate().is_ok());
        c.t2_values = alloc::vec![11];
        assert!(c.validate().is_err());
        let c = PipelineConfig { shots: 0, ..Default::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn small_sweep_is_deterministic() {
        let config = PipelineConfig {
            length: 6,
            shots: 40,
            times: TimeGrid { start: 0.0, end: 5.0, steps: 5 },
            t2_values: (2..=6).collect(),
            seed: 4,
            ..Default::default()
        };
        let a = run_pipeline(config.clone()).unwrap();
        let b = run_pipeline(config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.outcomes.len(), 18);
        assert!(a.outcomes.windows(2).all(|w| w[0].basis_index < w[1].basis_index));
    }
}
