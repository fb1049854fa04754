use std::path::PathBuf;

use comet_core::angle::wrap180;
use comet_core::array_model::{oracle_relative_phase, vna_measure};
use comet_core::calibration::initial_lut;
use comet_core::comet::fold_phase;
use comet_core::{ArrayConfig, AxisOverride, CodeSet, CometEngine, SimulatedArray, SweepOptions};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::output::{max_abs, rms, write_csv, write_json};
use crate::{load_codes, prepared_scenario, CliResult, ExtractArgs};

/// Commanded phases within this distance of a Cartesian axis count as near-axis.
pub const NEAR_AXIS_DEG: f64 = 10.0;

/// One `(trial, phase_index, element)` row of `extraction.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionRow {
    pub trial: u32,
    pub seed: u64,
    pub phase_index: usize,
    pub commanded_deg: f64,
    pub element: usize,
    pub axis_mode: String,
    pub i_word: i32,
    pub q_word: i32,
    pub a_i: f64,
    pub a_q: f64,
    pub gamma_deg: f64,
    pub alpha_deg: Option<f64>,
    pub theta_deg: f64,
    pub gain_db: f64,
    pub oracle_gain_db: f64,
    pub oracle_theta_deg: f64,
    pub gain_error_db: f64,
    pub phase_error_deg: f64,
    pub confident: bool,
    pub frame: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub count: usize,
    pub rms_gain_error_db: f64,
    pub rms_phase_error_deg: f64,
    pub max_abs_gain_error_db: f64,
    pub max_abs_phase_error_deg: f64,
}

impl ErrorStats {
    fn of<'a>(rows: impl Iterator<Item = &'a ExtractionRow> + Clone) -> Self {
        Self {
            count: rows.clone().count(),
            rms_gain_error_db: rms(rows.clone().map(|r| r.gain_error_db)),
            rms_phase_error_deg: rms(rows.clone().map(|r| r.phase_error_deg)),
            max_abs_gain_error_db: max_abs(rows.clone().map(|r| r.gain_error_db)),
            max_abs_phase_error_deg: max_abs(rows.map(|r| r.phase_error_deg)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial: u32,
    pub seed: u64,
    pub frames: usize,
    pub pd_readings: u64,
    pub errors: ErrorStats,
    /// Over commanded phases within 10° of a Cartesian axis.
    pub near_axis: ErrorStats,
    pub mean_solver_residual: f64,
    pub max_solver_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionSummary {
    pub scenario: String,
    pub bits: u32,
    pub n_phase: usize,
    pub n_elements: usize,
    pub axis: String,
    pub code_length: usize,
    pub trials: u32,
    pub pd_readings_per_trial: u64,
    pub frames_per_trial: usize,
    /// Rows whose extraction lacked a phase reference (one channel at zero),
    /// where nominal quadrature was assumed.
    pub unreferenced_rows: usize,
    pub pooled: ErrorStats,
    pub near_axis: ErrorStats,
    pub per_element: Vec<ErrorStats>,
    pub per_trial: Vec<TrialSummary>,
}

#[derive(Debug, Clone)]
pub struct ExtractOutcome {
    pub summary: ExtractionSummary,
    pub rows: Vec<ExtractionRow>,
    pub files: Vec<PathBuf>,
    pub log: Vec<String>,
}

fn near_axis(commanded_deg: f64) -> bool {
    fold_phase(commanded_deg) <= NEAR_AXIS_DEG
}

fn run_trial(
    cfg: &ArrayConfig,
    codes: &CodeSet,
    trial: u32,
    n_phase: usize,
    axis: AxisOverride,
) -> CliResult<(Vec<ExtractionRow>, TrialSummary)> {
    let n = cfg.n_elements;
    let lut = initial_lut(n, 1.0, n_phase)?;
    let mut engine = CometEngine::new(SimulatedArray::new(cfg.clone())?, codes.clone())?;
    let all: Vec<usize> = (0..n_phase).collect();
    let sweep = engine.extract_sweep(&lut.entries, &all, &SweepOptions { n_phase, axis })?;
    let mut rows = Vec::with_capacity(n_phase * n);
    for state in &sweep.states {
        for (k, e) in state.elements.iter().enumerate() {
            let word = lut.entries[k][state.phase_index];
            let truth = vna_measure(cfg, k, &word)?;
            let oracle_theta = oracle_relative_phase(cfg, k, &word)?.unwrap_or(0.0);
            rows.push(ExtractionRow {
                trial,
                seed: cfg.rng_seed,
                phase_index: state.phase_index,
                commanded_deg: state.commanded_deg,
                element: k,
                axis_mode: state.axis_mode.to_string(),
                i_word: word.i_signed(),
                q_word: word.q_signed(),
                a_i: e.a_i,
                a_q: e.a_q,
                gamma_deg: e.gamma_deg,
                alpha_deg: e.alpha_deg,
                theta_deg: e.theta_deg,
                gain_db: e.gain_db(),
                oracle_gain_db: truth.gain_db,
                oracle_theta_deg: oracle_theta,
                gain_error_db: e.gain_db() - truth.gain_db,
                phase_error_deg: wrap180(e.theta_deg - oracle_theta),
                confident: e.confident,
                frame: state.frame,
            });
        }
    }
    let residuals = &sweep.residuals;
    let summary = TrialSummary {
        trial,
        seed: cfg.rng_seed,
        frames: sweep.frames,
        pd_readings: sweep.pd_readings,
        errors: ErrorStats::of(rows.iter()),
        near_axis: ErrorStats::of(rows.iter().filter(|r| near_axis(r.commanded_deg))),
        mean_solver_residual: residuals.iter().sum::<f64>() / residuals.len().max(1) as f64,
        max_solver_residual: residuals.iter().copied().fold(0.0, f64::max),
    };
    Ok((rows, summary))
}

/// Full-grid extraction sweep over `trials` seeds, joined with the oracle.
/// Writes `extraction.csv` and `extraction_summary.json`.
pub fn cmd_extract(args: &ExtractArgs) -> CliResult<ExtractOutcome> {
    let p = &args.pipeline;
    if args.trials == 0 {
        return Err(crate::CliError::Usage("--trials must be at least 1".into()));
    }
    let base = prepared_scenario(p)?;
    let codes = load_codes(p, base.n_elements)?;
    let n_phase = 1usize << p.bits;
    let axis: AxisOverride = args.axis.into();

    let results: Vec<_> = (0..args.trials)
        .into_par_iter()
        .map(|t| {
            let mut cfg = base.clone();
            cfg.rng_seed = base.rng_seed.wrapping_add(u64::from(t));
            run_trial(&cfg, &codes, t, n_phase, axis)
        })
        .collect::<CliResult<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut per_trial = Vec::new();
    for (r, s) in results {
        rows.extend(r);
        per_trial.push(s);
    }
    let summary = ExtractionSummary {
        scenario: base.name.clone(),
        bits: p.bits,
        n_phase,
        n_elements: base.n_elements,
        axis: format!("{:?}", args.axis).to_lowercase(),
        code_length: codes.length(),
        trials: args.trials,
        pd_readings_per_trial: per_trial[0].pd_readings,
        frames_per_trial: per_trial[0].frames,
        unreferenced_rows: rows.iter().filter(|r| !r.confident).count(),
        pooled: ErrorStats::of(rows.iter()),
        near_axis: ErrorStats::of(rows.iter().filter(|r| near_axis(r.commanded_deg))),
        per_element: (0..base.n_elements).map(|k| ErrorStats::of(rows.iter().filter(move |r| r.element == k))).collect(),
        per_trial,
    };
    let files = vec![
        write_csv(&p.common.out, "extraction.csv", &rows)?,
        write_json(&p.common.out, "extraction_summary.json", &summary)?,
    ];
    let log = vec![
        format!("scenario {}, {} states x {} elements, {} trial(s)", summary.scenario, n_phase, base.n_elements, args.trials),
        format!("PD readings per trial: {} in {} frames", summary.pd_readings_per_trial, summary.frames_per_trial),
        format!(
            "pooled RMS error: {:.4} dB gain, {:.4} deg phase (max {:.4} dB, {:.4} deg)",
            summary.pooled.rms_gain_error_db,
            summary.pooled.rms_phase_error_deg,
            summary.pooled.max_abs_gain_error_db,
            summary.pooled.max_abs_phase_error_deg
        ),
    ];
    Ok(ExtractOutcome { summary, rows, files, log })
}
