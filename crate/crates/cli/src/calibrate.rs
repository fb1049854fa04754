use std::path::PathBuf;

use comet_core::calibration::{initial_lut, LutMetrics};
use comet_core::{calibrate_array, CalibrationOptions, CalibrationReport, CometEngine, Lut, SimulatedArray, TargetPolicy};
use serde::Serialize;

use crate::output::{write_csv, write_json, write_text};
use crate::{load_codes, prepared_scenario, CalibrateArgs, CliError, CliResult};

/// One `(element, phase_index)` row of `calibration_comparison.csv`.
#[derive(Debug, Clone, Serialize)]
struct ComparisonRow {
    element: usize,
    phase_index: usize,
    commanded_deg: f64,
    pre_i: i32,
    pre_q: i32,
    pre_gain_db: f64,
    pre_phase_deg: f64,
    pre_phase_error_deg: f64,
    post_i: i32,
    post_q: i32,
    post_gain_db: f64,
    post_phase_deg: f64,
    post_phase_error_deg: f64,
}

#[derive(Debug, Clone, Serialize)]
struct TraceRow {
    phase_index: usize,
    element: usize,
    step: usize,
    evm: f64,
}

#[derive(Debug, Clone)]
pub struct CalibrateOutcome {
    pub lut: Lut,
    pub report: CalibrationReport,
    pub files: Vec<PathBuf>,
    pub log: Vec<String>,
}

fn comparison(pre_lut: &Lut, post_lut: &Lut, pre: &LutMetrics, post: &LutMetrics) -> Vec<ComparisonRow> {
    let n_phase = post_lut.n_phase();
    let mut rows = Vec::with_capacity(post_lut.n_elements() * n_phase);
    for k in 0..post_lut.n_elements() {
        for p in 0..n_phase {
            let (a, b) = (pre_lut.entries[k][p], post_lut.entries[k][p]);
            rows.push(ComparisonRow {
                element: k,
                phase_index: p,
                commanded_deg: 360.0 * p as f64 / n_phase as f64,
                pre_i: a.i_signed(),
                pre_q: a.q_signed(),
                pre_gain_db: pre.gain_db[k][p],
                pre_phase_deg: pre.phase_deg[k][p],
                pre_phase_error_deg: pre.phase_error_deg[k][p],
                post_i: b.i_signed(),
                post_q: b.q_signed(),
                post_gain_db: post.gain_db[k][p],
                post_phase_deg: post.phase_deg[k][p],
                post_phase_error_deg: post.phase_error_deg[k][p],
            });
        }
    }
    rows
}

/// Calibrate a `2^bits`-state LUT. Writes `lut.json`, `calibration_report.json`,
/// `calibration_comparison.csv` and, with `--trace`, `calibration_trace.csv`.
pub fn cmd_calibrate(args: &CalibrateArgs) -> CliResult<CalibrateOutcome> {
    let p = &args.pipeline;
    if !(args.target_fraction > 0.0 && args.target_fraction <= 1.0) {
        return Err(CliError::Usage("--target-fraction must be in (0, 1]".into()));
    }
    let cfg = prepared_scenario(p)?;
    let codes = load_codes(p, cfg.n_elements)?;
    let n_phase = 1usize << p.bits;
    let options = CalibrationOptions {
        max_iterations: args.max_iterations,
        t_frame: args.t_frame,
        target_policy: TargetPolicy::FractionOfWeakest(args.target_fraction),
    };
    let mut engine = CometEngine::new(SimulatedArray::new(cfg.clone())?, codes)?;
    let (lut, report) = calibrate_array(&mut engine, &cfg, n_phase, &options)?;

    let out = &p.common.out;
    let mut lut_json = lut.to_json()?;
    lut_json.push('\n');
    let pre_lut = initial_lut(cfg.n_elements, args.target_fraction, n_phase)?;
    let mut files = vec![
        write_text(out, "lut.json", &lut_json)?,
        write_json(out, "calibration_report.json", &report)?,
        write_csv(out, "calibration_comparison.csv", &comparison(&pre_lut, &lut, &report.pre, &report.post))?,
    ];
    if args.trace {
        let trace: Vec<TraceRow> = report
            .states
            .iter()
            .flat_map(|s| {
                s.evm_trace.iter().enumerate().flat_map(move |(element, t)| {
                    t.iter().enumerate().map(move |(step, &evm)| TraceRow { phase_index: s.phase_index, element, step, evm })
                })
            })
            .collect();
        files.push(write_csv(out, "calibration_trace.csv", &trace)?);
    }

    let b = &report.time_budget;
    let mut log = vec![
        format!("scenario {}, {} elements, {} phase states", report.scenario, report.n_elements, n_phase),
        format!("target amplitude {:.6}", report.target_amplitude),
        format!(
            "pre:  {:.3} dB RMS gain, {:.3} deg RMS phase, {:.3} dB peak-to-peak",
            report.pre.rms_gain_error_db, report.pre.rms_phase_error_deg, report.pre.peak_to_peak_gain_db
        ),
        format!(
            "post: {:.3} dB RMS gain, {:.3} deg RMS phase, {:.3} dB peak-to-peak",
            report.post.rms_gain_error_db, report.post.rms_phase_error_deg, report.post.peak_to_peak_gain_db
        ),
        format!(
            "time budget: {} s/frame x {} frames/iteration x {:.3} iterations x {} states = {:.3} s",
            b.t_frame, b.n_state, b.n_iteration, b.n_phase, b.t_total
        ),
        format!("frames {}, PD readings {}", report.frames, report.pd_readings),
    ];
    if !report.unconverged.is_empty() {
        log.push(format!("unconverged states (iteration cap): {:?}", report.unconverged));
    }
    Ok(CalibrateOutcome { lut, report, files, log })
}
