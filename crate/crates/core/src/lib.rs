//! Code-multiplexed element transfer measurement and LUT calibration for
//! phased arrays built from I/Q vector-modulator phase shifters.
//!
//! The pipeline: [`codes`] builds orthogonal binary codes whose pairwise
//! products stay orthogonal, [`array_model`] simulates the array and its
//! scalar power detector, [`comet`] turns code-modulated detector readings
//! into per-element gain and phase, and [`calibration`] searches the setting
//! lattice for an equalized phase look-up table.

pub mod angle;
pub mod array_model;
pub mod calibration;
pub mod codes;
pub mod comet;
pub mod error;

pub use array_model::{
    ArrayConfig, DetectorModel, ElementTruth, ImperfectionRanges, MeasurementBackend, PhaseShifterWord,
    SimulatedArray,
};
pub use calibration::{
    calibrate_array, calibrate_state, evaluate_lut, evm, initial_lut, neighbor_states, CalibrationOptions,
    CalibrationReport, Lut, LutMetrics, StateCalibration, TargetPolicy, TargetVector, TimeBudget,
};
pub use codes::{select_ocp_set, verify_ocp, BinaryCode, CodeSet, OcpVerification};
pub use comet::{
    AxisCalibration, AxisMode, AxisOverride, CodeState, CometEngine, ElementExtraction, ExtractionResult,
    SweepOptions, SweepResult,
};
pub use error::{CometError, Result};
