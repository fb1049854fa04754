use std::path::PathBuf;

use comet_core::{evaluate_lut, Lut, LutMetrics};
use serde::Serialize;

use crate::output::{write_csv, write_json};
use crate::{io_err, load_scenario, CliResult, ReportArgs};

#[derive(Debug, Clone, Serialize)]
struct ResponseRow {
    element: usize,
    phase_index: usize,
    commanded_deg: f64,
    i_word: i32,
    q_word: i32,
    gain_db: f64,
    phase_deg: f64,
    phase_error_deg: f64,
}

#[derive(Debug, Clone)]
pub struct ReportOutcome {
    pub metrics: LutMetrics,
    pub files: Vec<PathBuf>,
    pub log: Vec<String>,
}

/// Score a LUT file against the scenario oracle. Writes `lut_report.json` and
/// `lut_response.csv`.
pub fn cmd_report(args: &ReportArgs) -> CliResult<ReportOutcome> {
    let cfg = load_scenario(&args.scenario)?;
    let lut = Lut::from_json(&std::fs::read_to_string(&args.lut).map_err(io_err(&args.lut))?)?;
    let metrics = evaluate_lut(&cfg, &lut)?;
    let n_phase = lut.n_phase();
    let rows: Vec<ResponseRow> = (0..lut.n_elements())
        .flat_map(|k| (0..n_phase).map(move |p| (k, p)))
        .map(|(k, p)| ResponseRow {
            element: k,
            phase_index: p,
            commanded_deg: 360.0 * p as f64 / n_phase as f64,
            i_word: lut.entries[k][p].i_signed(),
            q_word: lut.entries[k][p].q_signed(),
            gain_db: metrics.gain_db[k][p],
            phase_deg: metrics.phase_deg[k][p],
            phase_error_deg: metrics.phase_error_deg[k][p],
        })
        .collect();
    let files = vec![
        write_json(&args.common.out, "lut_report.json", &metrics)?,
        write_csv(&args.common.out, "lut_response.csv", &rows)?,
    ];
    let mut log = vec![format!(
        "{:.3} dB RMS gain, {:.3} deg RMS phase, {:.3} dB peak-to-peak, {:.3} deg max phase error",
        metrics.rms_gain_error_db, metrics.rms_phase_error_deg, metrics.peak_to_peak_gain_db, metrics.max_abs_phase_error_deg
    )];
    if metrics.pathological {
        log.push("warning: LUT is not a usable phase table (zero responses or phase errors beyond 90 deg)".into());
    }
    Ok(ReportOutcome { metrics, files, log })
}
