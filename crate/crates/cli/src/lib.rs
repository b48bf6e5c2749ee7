//! Experiment pipelines behind the `qrlcs` command-line tool.
//!
//! Every pipeline writes its CSV and JSON outputs into one directory. CSV rows
//! carry the config hash and seed, and all randomness is seeded, so reruns
//! reproduce files byte for byte.

pub mod config;
pub mod error;
pub mod probes;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use qrlcs_core::metrology::{control_offset, fit_scaling, time_factorized, PriorSpec};
use qrlcs_core::noise::noisy_preparation_fidelity;
use qrlcs_core::rl::{self, EpisodeRecord};
use qrlcs_core::{GateSequence, ModelSpec, NoiseConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{ExperimentConfig, ModelConfig, NoiseSweepConfig, NONCRITICAL_FIELD};
pub use error::{CliError, CliResult};
use probes::{exact_cfi, exact_qfi, global_k, probe_quality};

pub const SEQUENCE_FILE: &str = "sequence.json";
pub const HISTORY_FILE: &str = "history.csv";
pub const TRAIN_SUMMARY_FILE: &str = "train_summary.json";
pub const NOISE_SWEEP_FILE: &str = "noise_sweep.csv";
pub const COMPARE_FILE: &str = "compare.csv";
pub const COMPARE_FITS_FILE: &str = "compare_fits.json";

/// Default prior for global sensing when the config has none.
pub fn default_prior() -> PriorSpec {
    PriorSpec::uniform(0.0, 0.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ScanMode {
    LocalQfi,
    LocalCfi,
    Global,
}

impl ScanMode {
    pub fn name(self) -> &'static str {
        match self {
            ScanMode::LocalQfi => "local_qfi",
            ScanMode::LocalCfi => "local_cfi",
            ScanMode::Global => "global",
        }
    }
}

/// Power-law fit as written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub points: Vec<(usize, f64)>,
}

impl FitReport {
    pub fn from_points(points: &[(usize, f64)]) -> CliResult<Self> {
        let fit = fit_scaling(points)?;
        Ok(Self {
            exponent: fit.exponent,
            prefactor: fit.prefactor(),
            r_squared: fit.r_squared,
            points: fit.points,
        })
    }
}

/// Fits need three sizes; smaller grids skip the fit.
fn optional_fit(points: &[(usize, f64)]) -> CliResult<Option<FitReport>> {
    if points.len() < 3 {
        Ok(None)
    } else {
        FitReport::from_points(points).map(Some)
    }
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Numerical(format!("cannot encode output: {e}")))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn load_sequence(path: &Path) -> CliResult<GateSequence> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(GateSequence::from_json(&text)?)
}

fn check_sequence(cfg: &ExperimentConfig, seq: &GateSequence) -> CliResult<()> {
    if seq.model.kind != cfg.model.kind {
        return Err(CliError::Validation(format!(
            "sequence was trained on {:?} but the config describes {:?}",
            seq.model.kind, cfg.model.kind
        )));
    }
    Ok(())
}

/// Runs `f` for every size in the grid, in parallel, keeping grid order.
fn per_size<T, F>(cfg: &ExperimentConfig, f: F) -> CliResult<Vec<T>>
where
    T: Send,
    F: Fn(usize, ModelSpec) -> CliResult<T> + Sync,
{
    cfg.l_grid
        .par_iter()
        .map(|&l| f(l, cfg.model.spec(l)))
        .collect()
}

// ---------------------------------------------------------------- train

#[derive(Debug, Clone, Serialize)]
struct HistoryRow<'a> {
    config_hash: &'a str,
    seed: u64,
    episode: usize,
    #[serde(rename = "return")]
    ret: f64,
    final_fidelity: f64,
    depth_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub config_hash: String,
    pub seed: u64,
    pub l_train: usize,
    pub fidelity: f64,
    pub success: bool,
    pub first_success: Option<usize>,
    pub depth: usize,
    pub t_p: f64,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub summary: TrainSummary,
    pub sequence: GateSequence,
    pub history: Vec<EpisodeRecord>,
}

/// Trains at `l_train` and writes the sequence, history and summary.
/// Training that misses the threshold still writes its outputs.
pub fn run_train(cfg: &ExperimentConfig, out: &Path) -> CliResult<TrainReport> {
    cfg.validate()?;
    ensure_dir(out)?;
    let hash = cfg.hash();
    let spec = cfg.model.spec(cfg.train.l_train);
    let outcome = rl::train(&cfg.train, &spec)?;
    outcome.sequence.save(out.join(SEQUENCE_FILE))?;
    let rows: Vec<HistoryRow> = outcome
        .history
        .iter()
        .map(|h| HistoryRow {
            config_hash: &hash,
            seed: cfg.train.seed,
            episode: h.episode,
            ret: h.ret,
            final_fidelity: h.final_fidelity,
            depth_used: h.depth_used,
        })
        .collect();
    write_csv(&out.join(HISTORY_FILE), &rows)?;
    let summary = TrainSummary {
        config_hash: hash.clone(),
        seed: cfg.train.seed,
        l_train: cfg.train.l_train,
        fidelity: outcome.fidelity,
        success: outcome.success,
        first_success: outcome.first_success,
        depth: outcome.sequence.depth(),
        t_p: outcome.sequence.preparation_time(),
    };
    write_json(&out.join(TRAIN_SUMMARY_FILE), &summary)?;
    Ok(TrainReport {
        summary,
        sequence: outcome.sequence,
        history: outcome.history,
    })
}

// ----------------------------------------------------------------- scan

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub config_hash: String,
    pub seed: u64,
    pub mode: String,
    pub kind: String,
    pub l: usize,
    /// Control field of the probe (the offset `B` in global mode).
    pub h: f64,
    pub value: f64,
    pub prep_fidelity: f64,
    pub t_p: f64,
    pub time_factorized: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ScanReport {
    pub rows: Vec<ScanRow>,
    pub fit: Option<FitReport>,
}

pub fn scan_file(mode: ScanMode) -> String {
    format!("scan_{}.csv", mode.name())
}

pub fn scan_fit_file(mode: ScanMode) -> String {
    format!("fit_{}.json", mode.name())
}

/// Fisher information (or `𝒦` in global mode) of the probe at every size.
///
/// Without a sequence the probes are exact ground states. With one, each
/// probe is the replayed program and enters through its preparation
/// fidelity, with `t_p = D·τ_g`.
pub fn run_scan(
    cfg: &ExperimentConfig,
    seq: Option<&GateSequence>,
    mode: ScanMode,
    out: &Path,
) -> CliResult<ScanReport> {
    cfg.validate()?;
    if let Some(s) = seq {
        check_sequence(cfg, s)?;
    }
    ensure_dir(out)?;
    let hash = cfg.hash();
    let prior = cfg.prior.clone().unwrap_or_else(default_prior);
    let offset = control_offset(&prior, cfg.model.critical_field())?;
    let kind = match (mode, seq) {
        (ScanMode::LocalQfi, None) => "qfi",
        (ScanMode::LocalQfi, Some(_)) => "effective_qfi",
        (ScanMode::LocalCfi, _) => "cfi",
        (ScanMode::Global, _) => "global_uncertainty",
    };
    let rows = per_size(cfg, |l, spec| {
        let (f, t_p) = probe_quality(seq, &spec)?;
        let (h, value) = match mode {
            ScanMode::LocalQfi => (spec.field, f * exact_qfi(&spec, cfg.delta)?),
            ScanMode::LocalCfi => (
                spec.field,
                f * exact_cfi(
                    &spec,
                    cfg.delta,
                    cfg.measurement.basis,
                    cfg.measurement.granularity,
                )?,
            ),
            ScanMode::Global => (offset, global_k(&spec, offset, &prior, f, cfg.delta)?),
        };
        let time_factorized = match mode {
            ScanMode::Global => None,
            _ if t_p > 0.0 => Some(time_factorized(value, t_p)?),
            _ => None,
        };
        Ok(ScanRow {
            config_hash: hash.clone(),
            seed: cfg.seed,
            mode: mode.name().into(),
            kind: kind.into(),
            l,
            h,
            value,
            prep_fidelity: f,
            t_p,
            time_factorized,
        })
    })?;
    write_csv(&out.join(scan_file(mode)), &rows)?;
    let points: Vec<(usize, f64)> = rows.iter().map(|r| (r.l, r.value)).collect();
    let fit = optional_fit(&points)?;
    if let Some(fit) = &fit {
        write_json(&out.join(scan_fit_file(mode)), fit)?;
    }
    Ok(ScanReport { rows, fit })
}

// ---------------------------------------------------------- noise sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRow {
    pub config_hash: String,
    pub seed: u64,
    pub sigma: f64,
    pub lambda: f64,
    pub l: usize,
    pub shots: usize,
    pub clean_fidelity: f64,
    pub mean_fidelity: f64,
    pub std_fidelity: f64,
    /// `(F_clean − mean F_noisy) / F_clean`.
    pub drop: f64,
    pub capped_draws: usize,
    /// `mean F_noisy · CFI` of the exact probe.
    pub effective_cfi: f64,
    /// Fitted exponent of `effective_cfi` over the size grid at this noise level.
    pub exponent: Option<f64>,
}

/// Noisy replays of the sequence over the `(σ, λ)` grid of the config.
pub fn run_noise_sweep(
    cfg: &ExperimentConfig,
    seq: &GateSequence,
    out: &Path,
) -> CliResult<Vec<NoiseRow>> {
    cfg.validate()?;
    check_sequence(cfg, seq)?;
    let base = cfg.noise.clone().ok_or_else(|| {
        CliError::Validation("noise-sweep needs a `noise` section in the config".into())
    })?;
    let grid = cfg.noise_sweep.clone().unwrap_or_default();
    ensure_dir(out)?;
    let hash = cfg.hash();
    let clean = per_size(cfg, |_, spec| {
        let (f, _) = probe_quality(Some(seq), &spec)?;
        let cfi = exact_cfi(
            &spec,
            cfg.delta,
            cfg.measurement.basis,
            cfg.measurement.granularity,
        )?;
        Ok((f, cfi))
    })?;
    let mut rows = Vec::new();
    for &sigma in &grid.sigmas {
        for &lambda in &grid.lambdas {
            let noise = NoiseConfig {
                duration_sigma: sigma,
                crosstalk_lambda: lambda,
                ..base.clone()
            };
            let mut block = Vec::with_capacity(cfg.l_grid.len());
            for (&l, &(f_clean, cfi)) in cfg.l_grid.iter().zip(&clean) {
                let stats = noisy_preparation_fidelity(seq, &cfg.model.spec(l), &noise, grid.shots)?;
                block.push(NoiseRow {
                    config_hash: hash.clone(),
                    seed: noise.seed,
                    sigma,
                    lambda,
                    l,
                    shots: stats.shots,
                    clean_fidelity: f_clean,
                    mean_fidelity: stats.mean,
                    std_fidelity: stats.std,
                    drop: (f_clean - stats.mean) / f_clean,
                    capped_draws: stats.capped_draws,
                    effective_cfi: stats.mean * cfi,
                    exponent: None,
                });
            }
            let points: Vec<(usize, f64)> = block.iter().map(|r| (r.l, r.effective_cfi)).collect();
            let exponent = optional_fit(&points)?.map(|f| f.exponent);
            if let Some(e) = exponent {
                if !e.is_finite() {
                    return Err(CliError::Numerical(format!(
                        "non-finite exponent at sigma = {sigma}, lambda = {lambda}"
                    )));
                }
            }
            block.iter_mut().for_each(|r| r.exponent = exponent);
            rows.extend(block);
        }
    }
    write_csv(&out.join(NOISE_SWEEP_FILE), &rows)?;
    Ok(rows)
}

// -------------------------------------------------------------- compare

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub config_hash: String,
    pub seed: u64,
    pub protocol: String,
    pub l: usize,
    pub h: f64,
    pub value: f64,
    pub t_p: f64,
    pub time_factorized: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesFits {
    pub raw: Option<FitReport>,
    pub time_factorized: Option<FitReport>,
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    pub fits: BTreeMap<String, SeriesFits>,
}

pub const PROTOCOLS: [&str; 3] = ["qrlcs", "exact_critical", "noncritical"];

/// Three probes over the size grid:
/// - `qrlcs`: the learned program, `F · F_Q` with fixed `t_p = D·τ_g`;
/// - `exact_critical`: the exact critical ground state reached adiabatically,
///   `t_p = L`;
/// - `noncritical`: the exact ground state at field 1.5, gapped, so `t_p = 1`
///   at every size.
///
/// Without a sequence one is trained from the config first.
pub fn run_compare(
    cfg: &ExperimentConfig,
    seq: Option<&GateSequence>,
    out: &Path,
) -> CliResult<CompareReport> {
    cfg.validate()?;
    let trained;
    let seq = match seq {
        Some(s) => {
            check_sequence(cfg, s)?;
            s
        }
        None => {
            let spec = cfg.model.spec(cfg.train.l_train);
            trained = rl::train(&cfg.train, &spec)?.sequence;
            &trained
        }
    };
    ensure_dir(out)?;
    let hash = cfg.hash();
    let per_l = per_size(cfg, |l, spec| {
        let (f, t_qrlcs) = probe_quality(Some(seq), &spec)?;
        let q_crit = exact_qfi(&spec, cfg.delta)?;
        let off = spec.with_field(NONCRITICAL_FIELD);
        let q_off = exact_qfi(&off, cfg.delta)?;
        let series = [
            (spec.field, f * q_crit, t_qrlcs),
            (spec.field, q_crit, l as f64),
            (NONCRITICAL_FIELD, q_off, 1.0),
        ];
        series
            .iter()
            .zip(PROTOCOLS)
            .map(|(&(h, value, t_p), protocol)| {
                Ok(CompareRow {
                    config_hash: hash.clone(),
                    seed: cfg.seed,
                    protocol: protocol.into(),
                    l,
                    h,
                    value,
                    t_p,
                    time_factorized: if t_p > 0.0 {
                        Some(time_factorized(value, t_p)?)
                    } else {
                        None
                    },
                })
            })
            .collect::<CliResult<Vec<_>>>()
    })?;
    let mut rows = Vec::with_capacity(3 * per_l.len());
    for protocol in PROTOCOLS {
        rows.extend(per_l.iter().flatten().filter(|r| r.protocol == protocol).cloned());
    }
    let mut fits = BTreeMap::new();
    for protocol in PROTOCOLS {
        let series: Vec<&CompareRow> = rows.iter().filter(|r| r.protocol == protocol).collect();
        let raw: Vec<(usize, f64)> = series.iter().map(|r| (r.l, r.value)).collect();
        let tf: Option<Vec<(usize, f64)>> = series
            .iter()
            .map(|r| r.time_factorized.map(|v| (r.l, v)))
            .collect();
        fits.insert(
            protocol.to_string(),
            SeriesFits {
                raw: optional_fit(&raw)?,
                time_factorized: match tf {
                    Some(points) => optional_fit(&points)?,
                    None => None,
                },
            },
        );
    }
    write_csv(&out.join(COMPARE_FILE), &rows)?;
    write_json(&out.join(COMPARE_FITS_FILE), &fits)?;
    Ok(CompareReport { rows, fits })
}

// ------------------------------------------------------------------ fit

/// Fits `column` against the `l` column of any CSV with a header row.
pub fn run_fit(input: &Path, column: &str, out: Option<&Path>) -> CliResult<FitReport> {
    let mut reader = csv::Reader::from_path(input)
        .map_err(|e| CliError::Io(format!("{}: {e}", input.display())))?;
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Validation(format!("{}: no `{name}` column", input.display()))
        })
    };
    let (il, iv) = (find("l")?, find(column)?);
    let mut points = Vec::new();
    for (n, rec) in reader.records().enumerate() {
        let rec = rec?;
        let parse_err = |what: &str| {
            CliError::Validation(format!("{}: row {}: bad {what}", input.display(), n + 1))
        };
        let l: usize = rec[il].trim().parse().map_err(|_| parse_err("l"))?;
        let v: f64 = rec[iv].trim().parse().map_err(|_| parse_err(column))?;
        points.push((l, v));
    }
    let report = FitReport::from_points(&points)?;
    if let Some(path) = out {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            ensure_dir(dir)?;
        }
        write_json(path, &report)?;
    }
    Ok(report)
}

/// Output directory: the flag wins over the config.
pub fn output_dir(cfg: &ExperimentConfig, flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_dir.clone())
}
