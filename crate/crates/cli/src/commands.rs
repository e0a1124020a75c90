//! One function per subcommand. Each writes its files into `output_dir` and
//! a short human-readable summary to `out`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Value};

use scarid_core::detect::{summarize, PipelineContext};
use scarid_core::dynamics::{
    build_pxp, diagonalize, fidelity, quench, revival_peaks, state_domain_wall_density, EigenDecomposition,
    QuenchTrajectory, StateVector,
};
use scarid_core::hilbert::{enumerate_basis, BitString, ConstrainedBasis};
use scarid_core::idest::{scan_scales, ScaleScan};
use scarid_core::mds::{embed, embedding_spread, procrustes_align, Coords, Embedding, SmacofOptions};
use scarid_core::metric::{trajectory_distance_matrix, DistanceMatrix};
use scarid_core::sampling::{sample_trajectory, SampleSet};
use scarid_core::stats::median;

use crate::config::{MdsMode, RunConfig, SeedSource};
use crate::error::{CliError, CliResult};
use crate::formats::{self, TrajectoryRow};
use crate::parallel;

fn say(out: &mut dyn Write, line: impl std::fmt::Display) -> CliResult<()> {
    writeln!(out, "{line}").map_err(|e| CliError::io("<stdout>", e))
}

/// Configuration object embedded in JSON outputs (string values, readable by `--config`).
pub fn config_json(cfg: &RunConfig) -> Value {
    Value::Object(cfg.entries().into_iter().map(|(k, v)| (k.to_string(), Value::String(v))).collect())
}

fn meta_json(cfg: &RunConfig, command: &str, started: Instant) -> Value {
    json!({
        "tool": "scarid",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "seed": cfg.seed(),
        "seed_source": if cfg.seed_source == SeedSource::Random { "random" } else { "given" },
        "jobs": cfg.jobs,
        "elapsed_seconds": started.elapsed().as_secs_f64(),
    })
}

fn output(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.output_dir.join(name)
}

struct Model {
    basis: ConstrainedBasis,
    eig: EigenDecomposition,
}

fn model(cfg: &RunConfig) -> CliResult<Model> {
    let basis = enumerate_basis(cfg.length, cfg.boundary)?;
    let eig = diagonalize(&build_pxp(&basis, cfg.rabi))?;
    Ok(Model { basis, eig })
}

fn selected_states(cfg: &RunConfig, basis: &ConstrainedBasis) -> CliResult<Vec<BitString>> {
    let list = cfg.state_list(false)?.unwrap_or_else(|| basis.states().to_vec());
    for s in &list {
        basis.require_index(s)?;
    }
    Ok(list)
}

fn file_stem(state: &BitString) -> String {
    format!("embedding_{state}.csv")
}

pub fn basis(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    if !cfg.explicit.contains("length") {
        return Err(CliError::usage("basis requires --length (or `length` in the config file)"));
    }
    let basis = enumerate_basis(cfg.length, cfg.boundary)?;
    formats::write_basis(&output(cfg, "basis.txt"), &formats::header(cfg, "basis"), basis.states())?;
    for s in basis.states() {
        say(out, s)?;
    }
    Ok(())
}

pub fn evolve(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let m = model(cfg)?;
    let initial = cfg.initial_state()?;
    let psi0 = StateVector::basis_state(&m.basis, &initial)?;
    let mut times = vec![cfg.t_start];
    times.extend(cfg.time_grid().points());
    let traj = quench(&m.basis, &m.eig, initial, &times)?;
    let mut rows = Vec::with_capacity(2 * traj.len());
    let mut fid = Vec::with_capacity(traj.len());
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let f = fidelity(&psi0, s)?;
        fid.push((*t, f));
        rows.push(TrajectoryRow {
            initial,
            t: *t,
            observable: "domain_wall_density",
            value: state_domain_wall_density(&m.basis, s),
        });
        rows.push(TrajectoryRow { initial, t: *t, observable: "fidelity", value: f });
    }
    let header = formats::header(cfg, "evolve");
    let path = output(cfg, "trajectory.csv");
    formats::write_trajectory(&path, &header, &rows)?;
    say(out, format_args!("wrote {}", path.display()))?;
    if cfg.dump_states {
        let dump = output(cfg, "states.bin");
        formats::write_state_dump(&dump, &header, &traj)?;
        say(out, format_args!("wrote {}", dump.display()))?;
    }
    let peaks = revival_peaks(&fid, 0.5);
    say(out, format_args!("{initial}: {} fidelity peaks above 0.5", peaks.len()))
}

fn sample_states(cfg: &RunConfig, m: &Model, states: &[BitString]) -> CliResult<Vec<SampleSet>> {
    let times = cfg.time_grid().points();
    let channel = cfg.channel()?;
    states
        .par_iter()
        .map(|&s| {
            let traj = quench(&m.basis, &m.eig, s, &times)?;
            let index = m.basis.require_index(&s)? as u64;
            Ok(sample_trajectory(&m.basis, &traj, cfg.shots, channel, cfg.seed(), index)?)
        })
        .collect()
}

pub fn sample(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let m = model(cfg)?;
    let states = selected_states(cfg, &m.basis)?;
    let sets = sample_states(cfg, &m, &states)?;
    let path = output(cfg, "shots.csv");
    formats::write_shots(&path, &formats::header(cfg, "sample"), &sets)?;
    let total: usize = sets.iter().map(SampleSet::total_shots).sum();
    say(out, format_args!("wrote {total} shots for {} initial states to {}", sets.len(), path.display()))
}

fn write_matrix(
    cfg: &RunConfig,
    header: &str,
    stem: &str,
    matrix: &DistanceMatrix,
    out: &mut dyn Write,
) -> CliResult<()> {
    if cfg.matrix_format.csv() {
        let path = output(cfg, &format!("{stem}.csv"));
        formats::write_matrix_csv(&path, header, matrix)?;
        say(out, format_args!("wrote {}", path.display()))?;
    }
    if cfg.matrix_format.bin() {
        let path = output(cfg, &format!("{stem}.bin"));
        formats::write_matrix_bin(&path, header, matrix)?;
        say(out, format_args!("wrote {}", path.display()))?;
    }
    Ok(())
}

pub fn pem_matrix(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let m = model(cfg)?;
    let initial = cfg.initial_state()?;
    let traj = quench(&m.basis, &m.eig, initial, &cfg.time_grid().points())?;
    let matrix = parallel::trajectory_matrix(&m.basis, &traj, cfg.distance)?;
    write_matrix(cfg, &formats::header(cfg, "pem-matrix"), "distance_matrix", &matrix, out)?;
    say(out, format_args!("{initial}: mean off-diagonal distance {:.6}", matrix.mean_off_diagonal()))
}

fn embedding_json(label: &str, e: &Embedding, spread: f64, file: &Path) -> Value {
    json!({
        "initial_state": label,
        "stress": e.stress,
        "iterations": e.iterations,
        "converged": e.converged,
        "spread": spread,
        "file": file.file_name().map(|f| f.to_string_lossy().into_owned()),
    })
}

/// `spread(Z2) / median spread of the other states`, when both are present.
fn scar_spread_ratio(length: usize, spreads: &[(BitString, f64)]) -> Option<(f64, f64)> {
    let z2 = BitString::z2(length);
    let z2p = BitString::z2_prime(length);
    let scar = spreads.iter().find(|(s, _)| *s == z2)?.1;
    let thermal: Vec<f64> = spreads.iter().filter(|(s, _)| *s != z2 && *s != z2p).map(|p| p.1).collect();
    if thermal.is_empty() {
        return None;
    }
    let med = median(&thermal);
    Some((med, scar / med))
}

pub fn mds(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let started = Instant::now();
    let header = formats::header(cfg, "mds");
    let options = SmacofOptions { max_iter: cfg.max_iter, tol: cfg.tol };
    if let Some(input) = &cfg.input {
        let matrix = formats::read_matrix(input)?;
        let e = embed(&matrix, cfg.dim, options)?;
        let spread = embedding_spread(&e.coords);
        let path = output(cfg, "embedding.csv");
        formats::write_embedding_csv(&path, &header, matrix.labels(), &e.coords)?;
        let summary = json!({
            "config": config_json(cfg),
            "meta": meta_json(cfg, "mds", started),
            "embeddings": [embedding_json("", &e, spread, &path)],
        });
        formats::write_json(&output(cfg, "embedding.json"), &summary)?;
        return say(out, format_args!("stress {:.6e}, spread {spread:.6}", e.stress));
    }

    let m = model(cfg)?;
    let states = selected_states(cfg, &m.basis)?;
    let times = cfg.time_grid().points();
    let trajs: Vec<QuenchTrajectory> =
        states.iter().map(|&s| quench(&m.basis, &m.eig, s, &times)).collect::<Result<_, _>>()?;
    let mut results: Vec<(BitString, Embedding, Coords)> = Vec::new();
    let mut joint_stress = None;
    match cfg.mds_mode {
        MdsMode::Separate => {
            let embedded = |traj: &QuenchTrajectory, par: bool| -> CliResult<Embedding> {
                let matrix = if par {
                    parallel::trajectory_matrix(&m.basis, traj, cfg.distance)?
                } else {
                    trajectory_distance_matrix(&m.basis, traj, cfg.distance)?
                };
                Ok(embed(&matrix, cfg.dim, options)?)
            };
            let embeddings: Vec<Embedding> = if trajs.len() == 1 {
                vec![embedded(&trajs[0], true)?]
            } else {
                trajs.par_iter().map(|t| embedded(t, false)).collect::<CliResult<_>>()?
            };
            let reference = embeddings[0].coords.clone();
            for (s, e) in states.iter().zip(embeddings) {
                let aligned = procrustes_align(&reference, &e.coords)?;
                results.push((*s, e, aligned));
            }
        }
        MdsMode::Joint => {
            let matrix = parallel::joint_matrix(&m.basis, &trajs, cfg.distance)?;
            let e = embed(&matrix, cfg.dim, options)?;
            joint_stress = Some(e.stress);
            let n = times.len();
            for (k, s) in states.iter().enumerate() {
                let coords = e.coords.rows(k * n, n).into_owned();
                let part = Embedding {
                    coords: coords.clone(),
                    stress: e.stress,
                    iterations: e.iterations,
                    converged: e.converged,
                    history: Vec::new(),
                };
                results.push((*s, part, coords));
            }
        }
    }

    let labels: Vec<String> = times.iter().map(|&t| scarid_core::metric::time_label(t)).collect();
    let mut entries = Vec::new();
    let mut spreads = Vec::new();
    for (s, e, coords) in &results {
        let path = output(cfg, &file_stem(s));
        formats::write_embedding_csv(&path, &header, &labels, coords)?;
        let spread = embedding_spread(&e.coords);
        spreads.push((*s, spread));
        entries.push(embedding_json(&s.to_string(), e, spread, &path));
    }
    let ratio = scar_spread_ratio(cfg.length, &spreads);
    let summary = json!({
        "config": config_json(cfg),
        "meta": meta_json(cfg, "mds", started),
        "mode": if cfg.mds_mode == MdsMode::Joint { "joint" } else { "separate" },
        "joint_stress": joint_stress,
        "embeddings": entries,
        "thermal_median_spread": ratio.map(|r| r.0),
        "scar_spread_ratio": ratio.map(|r| r.1),
    });
    formats::write_json(&output(cfg, "embedding.json"), &summary)?;
    say(out, format_args!("embedded {} trajectories into {}", results.len(), cfg.output_dir.display()))?;
    if let Some((med, r)) = ratio {
        say(out, format_args!("spread(Z2) / median thermal spread = {r:.4} (median {med:.4})"))?;
    }
    Ok(())
}

fn scan_json(state: &BitString, scan: &ScaleScan) -> Value {
    let plateau = scan.plateau.map(|p| {
        json!({
            "start": p.start,
            "end": p.end,
            "t2_low": scan.estimates[p.start].t2,
            "t2_high": scan.estimates[p.end - 1].t2,
            "d_hat": p.d_hat,
        })
    });
    json!({
        "initial_state": state.to_string(),
        "d_hat": scan.d_hat,
        "no_plateau": scan.no_plateau,
        "plateau": plateau,
        "estimates": scan.estimates,
    })
}

pub fn id_scan(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let started = Instant::now();
    let mut cfg = cfg.clone();
    cfg.bootstrap = Some(cfg.bootstrap_or(200));
    let groups: Vec<(BitString, Vec<BitString>)> = match &cfg.input {
        Some(path) => formats::read_shots(path)?,
        None => {
            let m = model(&cfg)?;
            let states = selected_states(&cfg, &m.basis)?;
            sample_states(&cfg, &m, &states)?.into_iter().map(|s| (s.initial, s.pooled())).collect()
        }
    };
    if groups.is_empty() {
        return Err(CliError::usage("no shots to scan"));
    }
    let options = cfg.scan_options(cfg.bootstrap_or(200));
    let results: Vec<(BitString, Result<ScaleScan, String>)> = groups
        .par_iter()
        .map(|(s, shots)| (*s, scan_scales(shots, &options, &s.to_string()).map_err(|e| e.to_string())))
        .collect();
    let ok: Vec<(BitString, ScaleScan)> =
        results.iter().filter_map(|(s, r)| r.as_ref().ok().map(|scan| (*s, scan.clone()))).collect();
    let failures: Vec<Value> = results
        .iter()
        .filter_map(|(s, r)| r.as_ref().err().map(|e| json!({"initial_state": s.to_string(), "error": e})))
        .collect();
    let header = formats::header(&cfg, "id-scan");
    formats::write_scan_csv(&output(&cfg, "scan.csv"), &header, &ok)?;
    let summary = json!({
        "config": config_json(&cfg),
        "meta": meta_json(&cfg, "id-scan", started),
        "scans": ok.iter().map(|(s, scan)| scan_json(s, scan)).collect::<Vec<_>>(),
        "failures": failures,
    });
    formats::write_json(&output(&cfg, "scan.json"), &summary)?;
    for (s, scan) in &ok {
        let tag = if scan.no_plateau { " (no plateau)" } else { "" };
        say(out, format_args!("{s}: d_hat = {:.4}{tag}", scan.d_hat))?;
    }
    for f in &failures {
        say(
            out,
            format_args!("{}: {}", f["initial_state"].as_str().unwrap_or("?"), f["error"].as_str().unwrap_or("?")),
        )?;
    }
    if ok.is_empty() {
        return Err(CliError::Core(scarid_core::Error::AllScalesDegenerate(String::from("every initial state"))));
    }
    Ok(())
}

pub fn detect(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let started = Instant::now();
    let mut cfg = cfg.clone();
    cfg.bootstrap = Some(cfg.bootstrap_or(0));
    let ctx = PipelineContext::new(cfg.pipeline()?)?;
    let outcomes = parallel::sweep(&ctx);
    let report = summarize(ctx.config.clone(), outcomes);
    let estimated = report.outcomes.iter().filter(|o| o.d_hat().is_some()).count();
    let no_plateau = report.outcomes.iter().filter(|o| o.scan.as_ref().is_some_and(|s| s.no_plateau)).count();
    let total = report.outcomes.len();
    let header = formats::header(&cfg, "detect");
    let summary = json!({
        "config": config_json(&cfg),
        "meta": meta_json(&cfg, "detect", started),
        "summary": {
            "states": total,
            "estimated": estimated,
            "degenerate": total - estimated,
            "no_plateau": no_plateau,
            "scar_candidates": report.scar_candidates,
            "weak_candidates": report.weak_candidates,
        },
        "report": report,
    });
    formats::write_json(&output(&cfg, "report.json"), &summary)?;
    formats::write_report_csv(&output(&cfg, "report.csv"), &header, &report)?;
    formats::write_boxplot_csv(&output(&cfg, "boxplot.csv"), &header, &report)?;
    say(out, format_args!("{estimated} of {total} states estimated, {} degenerate", total - estimated))?;
    if report.boxplot.is_none() {
        say(out, "too few estimates for a boxplot; no states flagged")?;
    }
    say(out, format_args!("flagged: {}", report.scar_candidates.join(" ")))?;
    Ok(())
}
