//! The CoMET measurement pipeline: modulation frames, correlation
//! demodulation, phasor recovery, per-element extraction and phase sweeps.

mod extract;
mod frame;
mod solver;
mod sweep;

pub use extract::{
    extract_elements, fold_phase, select_axis, AxisCalibration, ElementExtraction, ExtractionResult,
    NOMINAL_ALPHA_DEG,
};
pub use frame::{
    build_frame, demodulate_frame, run_frame, AxisMode, CodeState, CorrelationMatrix, Frame, WordRounding,
};
pub use solver::{solve_phasors, ChannelPhasors, SolverOptions};
pub use sweep::{AxisOverride, SweepOptions, SweepResult, SweepState};

use crate::array_model::{MeasurementBackend, PhaseShifterWord};
use crate::codes::CodeSet;
use crate::angle::wrap180;
use crate::error::{invalid, Result};

/// Demodulated and solved output of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMeasurement {
    pub correlations: CorrelationMatrix,
    pub phasors: ChannelPhasors,
}

/// Drives a measurement backend through CoMET frames with a fixed code set.
///
/// Every frame gets the next sequential frame id, which the simulator uses
/// to select an independent noise stream.
#[derive(Debug, Clone)]
pub struct CometEngine<B> {
    backend: B,
    codes: CodeSet,
    solver: SolverOptions,
    rounding: WordRounding,
    next_frame_id: u64,
}

impl<B: MeasurementBackend> CometEngine<B> {
    pub fn new(backend: B, codes: CodeSet) -> Result<Self> {
        if codes.channels() != 2 * backend.n_elements() {
            return Err(invalid(format!(
                "code set has {} channels, array of {} elements needs {}",
                codes.channels(),
                backend.n_elements(),
                2 * backend.n_elements()
            )));
        }
        Ok(Self {
            backend,
            codes,
            solver: SolverOptions::default(),
            rounding: WordRounding::default(),
            next_frame_id: 0,
        })
    }

    pub fn with_solver_options(mut self, options: SolverOptions) -> Self {
        self.solver = options;
        self
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }

    pub fn backend_mut(&mut self) -> &mut B {
        &mut self.backend
    }

    pub fn into_backend(self) -> B {
        self.backend
    }

    pub fn codes(&self) -> &CodeSet {
        &self.codes
    }

    pub fn n_elements(&self) -> usize {
        self.backend.n_elements()
    }

    pub fn frames_run(&self) -> u64 {
        self.next_frame_id
    }

    pub fn readings_taken(&self) -> u64 {
        self.backend.readings_taken()
    }

    /// Detector square-law coefficient; 1 when the backend cannot report it,
    /// in which case amplitudes are in arbitrary but consistent units.
    pub fn detector_scale(&self) -> f64 {
        self.backend.detector_scale().unwrap_or(1.0)
    }

    pub fn build_frame(&self, targets: &[PhaseShifterWord], mode: AxisMode) -> Result<Frame> {
        build_frame(targets, mode, &self.codes, self.rounding)
    }

    /// Acquire, demodulate and solve one frame.
    pub fn measure_frame(&mut self, frame: &Frame) -> Result<FrameMeasurement> {
        let id = self.next_frame_id;
        self.next_frame_id += 1;
        let readings = run_frame(&mut self.backend, frame, id)?;
        let correlations =
            demodulate_frame(&readings, &self.codes, self.detector_scale(), frame.channel_signs())?;
        let phasors = solve_phasors(&correlations, &self.solver)?;
        Ok(FrameMeasurement { correlations, phasors })
    }

    /// Measure `targets` in one frame and extract every element.
    pub fn measure(
        &mut self,
        targets: &[PhaseShifterWord],
        mode: AxisMode,
        axis_cal: Option<&AxisCalibration>,
    ) -> Result<ExtractionResult> {
        let frame = self.build_frame(targets, mode)?;
        let m = self.measure_frame(&frame)?;
        extract_elements(&m.phasors, mode, frame.channel_signs(), axis_cal)
    }

    /// Rotated-basis angle of each element, from one rotated frame with every
    /// element at its full-scale I-axis word.
    pub fn estimate_alpha(&mut self) -> Result<AxisCalibration> {
        Ok(self.estimate_alpha_with_frame()?.0)
    }

    pub(crate) fn estimate_alpha_with_frame(
        &mut self,
    ) -> Result<(AxisCalibration, Frame, FrameMeasurement)> {
        let targets = vec![PhaseShifterWord::i_axis(); self.n_elements()];
        let frame = self.build_frame(&targets, AxisMode::Rotated)?;
        let m = self.measure_frame(&frame)?;
        let uncorrected = extract_elements(
            &m.phasors,
            AxisMode::Rotated,
            frame.channel_signs(),
            Some(&AxisCalibration { alpha_deg: vec![0.0; self.n_elements()] }),
        )?;
        // The I-axis word reads -alpha in the rotated basis.
        let alpha_deg = uncorrected
            .elements
            .iter()
            .map(|e| wrap180(-e.theta_deg))
            .collect();
        Ok((AxisCalibration { alpha_deg }, frame, m))
    }
}
