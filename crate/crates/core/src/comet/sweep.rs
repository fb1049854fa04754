//! Phase sweeps: extract every commanded state of a settings table while
//! reusing each frame for all of the states it realizes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::extract::{extract_elements, fold_phase, select_axis, AxisCalibration, ElementExtraction};
use super::frame::{AxisMode, Frame};
use super::{CometEngine, FrameMeasurement};
use crate::array_model::{MeasurementBackend, PhaseShifterWord};
use crate::error::{invalid, Result};

/// Basis selection for a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisOverride {
    #[default]
    Auto,
    Normal,
    Rotated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    /// Phase states in the table; commanded phase of index `p` is `360·p/n_phase`.
    pub n_phase: usize,
    pub axis: AxisOverride,
}

impl SweepOptions {
    pub fn new(n_phase: usize) -> Self {
        Self { n_phase, axis: AxisOverride::Auto }
    }

    pub fn commanded_deg(&self, index: usize) -> f64 {
        360.0 * index as f64 / self.n_phase as f64
    }

    /// Basis for a commanded state. `Auto` applies the axis partition to the
    /// folded phase so that all four states sharing a frame agree.
    pub fn mode_for(&self, index: usize) -> AxisMode {
        match self.axis {
            AxisOverride::Auto => select_axis(fold_phase(self.commanded_deg(index))),
            AxisOverride::Normal => AxisMode::Normal,
            AxisOverride::Rotated => AxisMode::Rotated,
        }
    }
}

/// Extraction of one commanded phase state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepState {
    pub phase_index: usize,
    pub commanded_deg: f64,
    pub axis_mode: AxisMode,
    /// Index of the frame (in acquisition order) that measured this state.
    pub frame: usize,
    pub elements: Vec<ElementExtraction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Ordered by phase index.
    pub states: Vec<SweepState>,
    pub axis_cal: Option<AxisCalibration>,
    pub frames: usize,
    pub pd_readings: u64,
    /// Solver residual of each frame, in acquisition order.
    pub residuals: Vec<f64>,
}

impl<B: MeasurementBackend> CometEngine<B> {
    /// Extract the states `phase_indexes` of `table` (`table[element][phase]`).
    ///
    /// Frames are taken in ascending phase order; a frame also fills in every
    /// other requested state whose words appear among its four code states
    /// for all elements. Rotated frames share one axis calibration, whose
    /// frame doubles as the measurement of the I-axis states.
    pub fn extract_sweep(
        &mut self,
        table: &[Vec<PhaseShifterWord>],
        phase_indexes: &[usize],
        options: &SweepOptions,
    ) -> Result<SweepResult> {
        let n = self.n_elements();
        if table.len() != n {
            return Err(invalid(format!("settings table has {} rows for {n} elements", table.len())));
        }
        if options.n_phase == 0 {
            return Err(invalid("n_phase must be positive"));
        }
        for &p in phase_indexes {
            if p >= options.n_phase || table.iter().any(|row| p >= row.len()) {
                return Err(invalid(format!("phase index {p} not covered by the settings table")));
            }
        }
        let start_readings = self.readings_taken();
        let mut pending: Vec<usize> = phase_indexes.to_vec();
        pending.sort_unstable();
        pending.dedup();

        let mut covered: BTreeMap<usize, SweepState> = BTreeMap::new();
        let mut residuals = Vec::new();

        let needs_rotated = pending.iter().any(|&p| options.mode_for(p) == AxisMode::Rotated);
        let axis_cal = if needs_rotated {
            let (cal, frame, m) = self.estimate_alpha_with_frame()?;
            residuals.push(m.phasors.residual);
            let frame_no = residuals.len() - 1;
            self.cover(table, &pending, options, &frame, &m, Some(&cal), frame_no, &mut covered)?;
            Some(cal)
        } else {
            None
        };

        for &p in &pending {
            if covered.contains_key(&p) {
                continue;
            }
            let mode = options.mode_for(p);
            let targets: Vec<PhaseShifterWord> = table.iter().map(|row| row[p]).collect();
            let frame = self.build_frame(&targets, mode)?;
            let m = self.measure_frame(&frame)?;
            residuals.push(m.phasors.residual);
            let frame_no = residuals.len() - 1;
            self.cover(table, &pending, options, &frame, &m, axis_cal.as_ref(), frame_no, &mut covered)?;
            debug_assert!(covered.contains_key(&p));
        }

        Ok(SweepResult {
            states: covered.into_values().collect(),
            axis_cal,
            frames: residuals.len(),
            pd_readings: self.readings_taken() - start_readings,
            residuals,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn cover(
        &self,
        table: &[Vec<PhaseShifterWord>],
        pending: &[usize],
        options: &SweepOptions,
        frame: &Frame,
        m: &FrameMeasurement,
        axis_cal: Option<&AxisCalibration>,
        frame_no: usize,
        covered: &mut BTreeMap<usize, SweepState>,
    ) -> Result<()> {
        let mode = frame.axis_mode();
        let ext = extract_elements(&m.phasors, mode, frame.channel_signs(), axis_cal)?;
        for &p in pending {
            if covered.contains_key(&p) || options.mode_for(p) != mode {
                continue;
            }
            let states: Option<Vec<_>> =
                table.iter().enumerate().map(|(n, row)| frame.state_of(n, &row[p])).collect();
            if let Some(states) = states {
                covered.insert(
                    p,
                    SweepState {
                        phase_index: p,
                        commanded_deg: options.commanded_deg(p),
                        axis_mode: mode,
                        frame: frame_no,
                        elements: ext.elements.iter().zip(states).map(|(e, s)| e.for_state(s)).collect(),
                    },
                );
            }
        }
        Ok(())
    }
}
