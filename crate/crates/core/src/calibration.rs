//! Closed-loop LUT calibration: per-element error-vector-magnitude descent
//! over the signed I/Q setting lattice, driven by CoMET extractions, and
//! scoring of LUTs against the noiseless oracle.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array_model::{vna_measure, ArrayConfig, MeasurementBackend, PhaseShifterWord, MAX_MAGNITUDE};
use crate::comet::{select_axis, AxisCalibration, AxisMode, CometEngine};
use crate::angle::{wrap180, wrap360};
use crate::error::{invalid, CometError, Result};

/// Desired element response for one phase state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetVector {
    pub amplitude: f64,
    pub theta_deg: f64,
}

impl TargetVector {
    pub fn new(amplitude: f64, theta_deg: f64) -> Result<Self> {
        if !(amplitude > 0.0) {
            return Err(invalid("target amplitude must be > 0"));
        }
        Ok(Self { amplitude, theta_deg })
    }

    pub fn a_i(&self) -> f64 {
        self.amplitude * self.theta_deg.to_radians().cos()
    }

    pub fn a_q(&self) -> f64 {
        self.amplitude * self.theta_deg.to_radians().sin()
    }

    pub fn complex(&self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.theta_deg.to_radians())
    }
}

/// Error-vector magnitude between an extracted `(amplitude, theta)` and the
/// desired vector.
pub fn evm(amplitude: f64, theta_deg: f64, desired: &TargetVector) -> f64 {
    let t = theta_deg.to_radians();
    (amplitude * t.cos() - desired.a_i()).hypot(amplitude * t.sin() - desired.a_q())
}

/// Lattice offsets `(Δi, Δq)` in evaluation order.
pub const NEIGHBOR_OFFSETS: [(i32, i32); 8] =
    [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];

/// Word one lattice step away, or `None` when clamping leaves it unchanged.
pub fn offset_word(word: &PhaseShifterWord, (di, dq): (i32, i32)) -> Option<PhaseShifterWord> {
    let (i, q) = word.signed();
    let n = PhaseShifterWord::from_signed(i + di, q + dq);
    (n != *word).then_some(n)
}

/// The distinct signed-lattice neighbors of `word` (at most eight).
pub fn neighbor_states(word: &PhaseShifterWord) -> Vec<PhaseShifterWord> {
    let mut out: Vec<PhaseShifterWord> = Vec::with_capacity(8);
    for off in NEIGHBOR_OFFSETS {
        if let Some(n) = offset_word(word, off) {
            if !out.contains(&n) {
                out.push(n);
            }
        }
    }
    out
}

/// Per-element phase look-up table for one gain setting.
#[derive(Debug, Clone, PartialEq)]
pub struct Lut {
    pub target_amplitude: f64,
    pub scenario: String,
    pub seed: u64,
    /// `entries[element][phase]`.
    pub entries: Vec<Vec<PhaseShifterWord>>,
}

/// JSON layout of a [`Lut`]; words are `[i_signed, q_signed]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LutDocument {
    pub n_elements: usize,
    pub n_phase: usize,
    pub target_amplitude: f64,
    #[serde(default)]
    pub scenario: String,
    #[serde(default)]
    pub seed: u64,
    pub entries: Vec<Vec<[i32; 2]>>,
}

impl Lut {
    pub fn n_elements(&self) -> usize {
        self.entries.len()
    }

    pub fn n_phase(&self) -> usize {
        self.entries.first().map_or(0, Vec::len)
    }

    pub fn to_document(&self) -> LutDocument {
        LutDocument {
            n_elements: self.n_elements(),
            n_phase: self.n_phase(),
            target_amplitude: self.target_amplitude,
            scenario: self.scenario.clone(),
            seed: self.seed,
            entries: self
                .entries
                .iter()
                .map(|row| row.iter().map(|w| [w.i_signed(), w.q_signed()]).collect())
                .collect(),
        }
    }

    pub fn from_document(doc: &LutDocument) -> Result<Self> {
        if doc.entries.len() != doc.n_elements {
            return Err(invalid("LUT row count does not match n_elements"));
        }
        if !doc.n_phase.is_power_of_two() {
            return Err(invalid(format!("n_phase {} is not a power of two", doc.n_phase)));
        }
        let m = i32::from(MAX_MAGNITUDE);
        let mut entries = Vec::with_capacity(doc.n_elements);
        for row in &doc.entries {
            if row.len() != doc.n_phase {
                return Err(invalid("LUT row length does not match n_phase"));
            }
            let mut words = Vec::with_capacity(row.len());
            for &[i, q] in row {
                if i.abs() > m || q.abs() > m {
                    return Err(invalid(format!("LUT entry ({i}, {q}) outside ±{m}")));
                }
                words.push(PhaseShifterWord::from_signed(i, q));
            }
            entries.push(words);
        }
        Ok(Self { target_amplitude: doc.target_amplitude, scenario: doc.scenario.clone(), seed: doc.seed, entries })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_document(&serde_json::from_str(text)?)
    }
}

/// Ideal-interpolator LUT: phase `p` maps to the lattice point nearest
/// `31·r·(cos θ, sin θ)`, `θ = 360·p/n_phase`, for every element.
pub fn initial_lut(n_elements: usize, fraction_of_full_scale: f64, n_phase: usize) -> Result<Lut> {
    if !(fraction_of_full_scale > 0.0) {
        return Err(invalid("target fraction must be > 0"));
    }
    if fraction_of_full_scale > 1.0 {
        return Err(CometError::InfeasibleTarget { target: fraction_of_full_scale, max: 1.0 });
    }
    if n_phase == 0 || !n_phase.is_power_of_two() {
        return Err(invalid(format!("n_phase {n_phase} is not a power of two")));
    }
    let radius = f64::from(MAX_MAGNITUDE) * fraction_of_full_scale;
    let row: Vec<PhaseShifterWord> = (0..n_phase)
        .map(|p| {
            let t = (360.0 * p as f64 / n_phase as f64).to_radians();
            PhaseShifterWord::from_signed((radius * t.cos()).round() as i32, (radius * t.sin()).round() as i32)
        })
        .collect();
    Ok(Lut {
        target_amplitude: fraction_of_full_scale,
        scenario: String::new(),
        seed: 0,
        entries: vec![row; n_elements],
    })
}


/// Oracle-measured quality of a LUT.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LutMetrics {
    /// RMS of gain about the mean gain over all elements and states, dB.
    pub rms_gain_error_db: f64,
    /// RMS phase error about the commanded grid, after normalizing each
    /// element's response to its phase-index-0 entry, degrees.
    pub rms_phase_error_deg: f64,
    pub max_abs_phase_error_deg: f64,
    /// Max minus min gain over all elements and states, dB.
    pub peak_to_peak_gain_db: f64,
    pub mean_gain_db: f64,
    /// The table is unusable as a phase LUT (zero responses, or errors
    /// beyond ±90°).
    pub pathological: bool,
    /// `gain_db[element][phase]`.
    pub gain_db: Vec<Vec<f64>>,
    /// Normalized phase response, `[0, 360)`.
    pub phase_deg: Vec<Vec<f64>>,
    /// Phase error about the commanded grid, `(-180, 180]`.
    pub phase_error_deg: Vec<Vec<f64>>,
}

/// Score `lut` against the noiseless oracle of `config`.
pub fn evaluate_lut(config: &ArrayConfig, lut: &Lut) -> Result<LutMetrics> {
    if lut.n_elements() != config.n_elements {
        return Err(invalid("LUT element count does not match scenario"));
    }
    let n_phase = lut.n_phase();
    if n_phase == 0 {
        return Err(invalid("empty LUT"));
    }
    let mut gain_db = Vec::with_capacity(lut.n_elements());
    let mut phase_deg = Vec::with_capacity(lut.n_elements());
    let mut phase_error_deg = Vec::with_capacity(lut.n_elements());
    let mut pathological = false;
    for (n, row) in lut.entries.iter().enumerate() {
        let readings = row.iter().map(|w| vna_measure(config, n, w)).collect::<Result<Vec<_>>>()?;
        let reference = readings[0].phase_deg;
        let mut g = Vec::with_capacity(n_phase);
        let mut ph = Vec::with_capacity(n_phase);
        let mut err = Vec::with_capacity(n_phase);
        for (p, r) in readings.iter().enumerate() {
            g.push(r.gain_db);
            match (r.phase_deg, reference) {
                (Some(x), Some(x0)) => {
                    let rel = wrap360(x - x0);
                    ph.push(rel);
                    err.push(wrap180(rel - 360.0 * p as f64 / n_phase as f64));
                }
                _ => {
                    pathological = true;
                    ph.push(f64::NAN);
                    err.push(f64::NAN);
                }
            }
        }
        gain_db.push(g);
        phase_deg.push(ph);
        phase_error_deg.push(err);
    }
    let all_gain: Vec<f64> = gain_db.iter().flatten().copied().collect();
    let all_err: Vec<f64> = phase_error_deg.iter().flatten().copied().collect();
    let count = all_gain.len() as f64;
    let mean_gain_db = all_gain.iter().sum::<f64>() / count;
    let rms_gain_error_db = (all_gain.iter().map(|g| (g - mean_gain_db).powi(2)).sum::<f64>() / count).sqrt();
    let rms_phase_error_deg = (all_err.iter().map(|e| e * e).sum::<f64>() / count).sqrt();
    let max_abs_phase_error_deg = all_err.iter().map(|e| e.abs()).fold(0.0, f64::max);
    let max_g = all_gain.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_g = all_gain.iter().copied().fold(f64::INFINITY, f64::min);
    pathological |= !rms_phase_error_deg.is_finite() || max_abs_phase_error_deg > 90.0 || !min_g.is_finite();
    Ok(LutMetrics {
        rms_gain_error_db,
        rms_phase_error_deg,
        max_abs_phase_error_deg,
        peak_to_peak_gain_db: max_g - min_g,
        mean_gain_db,
        pathological,
        gain_db,
        phase_deg,
        phase_error_deg,
    })
}

/// Total calibration time: `t_frame · n_state · n_iteration · n_phase`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeBudget {
    pub t_frame: f64,
    pub n_state: usize,
    pub n_iteration: f64,
    pub n_phase: usize,
    pub t_total: f64,
}

impl TimeBudget {
    pub fn new(t_frame: f64, n_state: usize, n_iteration: f64, n_phase: usize) -> Self {
        Self { t_frame, n_state, n_iteration, n_phase, t_total: t_frame * n_state as f64 * n_iteration * n_phase as f64 }
    }
}

/// Frames per local-search iteration: the current words plus one frame per
/// lattice offset.
pub const FRAMES_PER_ITERATION: usize = 1 + NEIGHBOR_OFFSETS.len();

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    pub max_iterations: usize,
    /// Seconds per CoMET frame, used only for the time budget.
    pub t_frame: f64,
    pub target_policy: TargetPolicy,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self { max_iterations: 25, t_frame: 0.01, target_policy: TargetPolicy::default() }
    }
}

/// How the equalized target amplitude is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetPolicy {
    /// This fraction of the weakest element's full-scale amplitude.
    FractionOfWeakest(f64),
    /// A fixed linear amplitude.
    Fixed(f64),
}

impl Default for TargetPolicy {
    fn default() -> Self {
        TargetPolicy::FractionOfWeakest(0.9)
    }
}

/// Outcome of the local search for one phase state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateCalibration {
    pub phase_index: usize,
    pub theta_des_deg: f64,
    pub axis_mode: AxisMode,
    pub words: Vec<PhaseShifterWord>,
    /// EVM of each final word, from the last measurement of it.
    pub evm: Vec<f64>,
    /// Extracted amplitude / phase of each final word.
    pub amplitude: Vec<f64>,
    pub theta_deg: Vec<f64>,
    pub iterations: usize,
    pub moves: Vec<usize>,
    pub converged: bool,
    /// Per element: EVM at the start word followed by every accepted move.
    pub evm_trace: Vec<Vec<f64>>,
    pub frames: usize,
}

impl Serialize for PhaseShifterWord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.i_signed(), self.q_signed()].serialize(s)
    }
}

impl<'de> Deserialize<'de> for PhaseShifterWord {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [i, q] = <[i32; 2]>::deserialize(d)?;
        let m = i32::from(MAX_MAGNITUDE);
        if i.abs() > m || q.abs() > m {
            return Err(serde::de::Error::custom(format!("word ({i}, {q}) outside ±{m}")));
        }
        Ok(PhaseShifterWord::from_signed(i, q))
    }
}

/// Iterative lattice descent for all elements in parallel at one phase state.
///
/// Each iteration measures the current words, then one frame per lattice
/// offset in which every unconverged element sits at that offset. An element
/// moves to its best neighbor only if that neighbor strictly beats both the
/// current measurement and its last accepted EVM; an element with no such
/// neighbor is converged and stays put.
pub fn calibrate_state<B: MeasurementBackend>(
    engine: &mut CometEngine<B>,
    phase_index: usize,
    targets: &[TargetVector],
    start_words: &[PhaseShifterWord],
    axis_cal: Option<&AxisCalibration>,
    options: &CalibrationOptions,
) -> Result<StateCalibration> {
    let n = engine.n_elements();
    if targets.len() != n || start_words.len() != n {
        return Err(invalid("targets and start words must cover every element"));
    }
    if options.max_iterations == 0 {
        return Err(invalid("max_iterations must be positive"));
    }
    let theta_des_deg = targets[0].theta_deg;
    let mode = select_axis(theta_des_deg);
    let mut words = start_words.to_vec();
    let mut converged = vec![false; n];
    let mut last_accepted = vec![f64::INFINITY; n];
    let mut moves = vec![0; n];
    let mut evm_trace: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut evm_now = vec![0.0; n];
    let mut amplitude = vec![0.0; n];
    let mut theta = vec![0.0; n];
    let mut iterations = 0;
    let mut frames = 0;

    while iterations < options.max_iterations {
        iterations += 1;
        let current = engine.measure(&words, mode, axis_cal)?;
        frames += 1;
        for (k, e) in current.elements.iter().enumerate() {
            evm_now[k] = evm(e.amplitude, e.theta_deg, &targets[k]);
            amplitude[k] = e.amplitude;
            theta[k] = e.theta_deg;
            if evm_trace[k].is_empty() {
                evm_trace[k].push(evm_now[k]);
                last_accepted[k] = evm_now[k];
            }
        }
        let mut best: Vec<Option<(f64, PhaseShifterWord, f64, f64)>> = vec![None; n];
        for off in NEIGHBOR_OFFSETS {
            let candidates: Vec<Option<PhaseShifterWord>> = (0..n)
                .map(|k| if converged[k] { None } else { offset_word(&words[k], off) })
                .collect();
            let trial: Vec<PhaseShifterWord> =
                candidates.iter().zip(&words).map(|(c, w)| c.unwrap_or(*w)).collect();
            let r = engine.measure(&trial, mode, axis_cal)?;
            frames += 1;
            for k in 0..n {
                let Some(cand) = candidates[k] else { continue };
                let e = &r.elements[k];
                let value = evm(e.amplitude, e.theta_deg, &targets[k]);
                let bound = best[k].map_or(evm_now[k].min(last_accepted[k]), |b| b.0);
                if value < bound {
                    best[k] = Some((value, cand, e.amplitude, e.theta_deg));
                }
            }
        }
        for k in 0..n {
            if converged[k] {
                continue;
            }
            match best[k] {
                Some((value, word, a, t)) => {
                    words[k] = word;
                    last_accepted[k] = value;
                    evm_now[k] = value;
                    amplitude[k] = a;
                    theta[k] = t;
                    evm_trace[k].push(value);
                    moves[k] += 1;
                }
                None => converged[k] = true,
            }
        }
        if converged.iter().all(|&c| c) {
            break;
        }
    }
    Ok(StateCalibration {
        phase_index,
        theta_des_deg,
        axis_mode: mode,
        words,
        evm: evm_now,
        amplitude,
        theta_deg: theta,
        iterations,
        moves,
        converged: converged.iter().all(|&c| c),
        evm_trace,
        frames,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub scenario: String,
    pub n_elements: usize,
    pub n_phase: usize,
    pub target_amplitude: f64,
    /// Largest uniform amplitude each element can reach, from CoMET.
    pub full_scale_amplitude: Vec<f64>,
    pub axis_cal: AxisCalibration,
    pub pre: LutMetrics,
    pub post: LutMetrics,
    pub states: Vec<StateCalibration>,
    pub unconverged: Vec<usize>,
    pub time_budget: TimeBudget,
    pub frames: u64,
    pub pd_readings: u64,
}

/// Full closed-loop calibration of an `n_phase`-state LUT.
///
/// The initial LUT is the ideal-interpolator inverse at the chosen target
/// fraction; each state after the first starts from the previous state's
/// result shifted by the initial LUT's step between the two states.
pub fn calibrate_array<B: MeasurementBackend>(
    engine: &mut CometEngine<B>,
    config: &ArrayConfig,
    n_phase: usize,
    options: &CalibrationOptions,
) -> Result<(Lut, CalibrationReport)> {
    let n = engine.n_elements();
    if config.n_elements != n {
        return Err(invalid("scenario does not match the backend element count"));
    }
    let start_frames = engine.frames_run();
    let start_readings = engine.readings_taken();
    let axis_cal = engine.estimate_alpha()?;

    let m = MAX_MAGNITUDE as i32;
    let fs = engine.measure(&vec![PhaseShifterWord::from_signed(m, m); n], AxisMode::Normal, None)?;
    // Inscribed radius of the reachable parallelogram.
    let full_scale_amplitude: Vec<f64> = fs
        .elements
        .iter()
        .map(|e| e.a_i.min(e.a_q) * e.gamma_deg.to_radians().sin().abs())
        .collect();
    let weakest = full_scale_amplitude.iter().copied().fold(f64::INFINITY, f64::min);
    let target_amplitude = match options.target_policy {
        TargetPolicy::FractionOfWeakest(f) => f * weakest,
        TargetPolicy::Fixed(a) => a,
    };
    if !(target_amplitude > 0.0) || target_amplitude > weakest {
        return Err(CometError::InfeasibleTarget { target: target_amplitude, max: weakest });
    }

    let mut initial = initial_lut(n, target_amplitude / weakest, n_phase)?;
    initial.target_amplitude = target_amplitude;
    initial.scenario = config.name.clone();
    initial.seed = config.rng_seed;

    let mut states: Vec<StateCalibration> = Vec::with_capacity(n_phase);
    for p in 0..n_phase {
        let theta = 360.0 * p as f64 / n_phase as f64;
        let targets = vec![TargetVector::new(target_amplitude, theta)?; n];
        let start: Vec<PhaseShifterWord> = match states.last() {
            None => initial.entries.iter().map(|row| row[0]).collect(),
            Some(prev) => (0..n)
                .map(|k| {
                    let (pi, pq) = prev.words[k].signed();
                    let (ai, aq) = initial.entries[k][p - 1].signed();
                    let (bi, bq) = initial.entries[k][p].signed();
                    PhaseShifterWord::from_signed(pi + bi - ai, pq + bq - aq)
                })
                .collect(),
        };
        states.push(calibrate_state(engine, p, &targets, &start, Some(&axis_cal), options)?);
    }

    let lut = Lut {
        target_amplitude,
        scenario: config.name.clone(),
        seed: config.rng_seed,
        entries: (0..n).map(|k| states.iter().map(|s| s.words[k]).collect()).collect(),
    };
    let pre = evaluate_lut(config, &initial)?;
    let post = evaluate_lut(config, &lut)?;
    let avg_iterations = states.iter().map(|s| s.iterations as f64).sum::<f64>() / n_phase as f64;
    let report = CalibrationReport {
        scenario: config.name.clone(),
        n_elements: n,
        n_phase,
        target_amplitude,
        full_scale_amplitude,
        axis_cal,
        pre,
        post,
        unconverged: states.iter().filter(|s| !s.converged).map(|s| s.phase_index).collect(),
        states,
        time_budget: TimeBudget::new(options.t_frame, FRAMES_PER_ITERATION, avg_iterations, n_phase),
        frames: engine.frames_run() - start_frames,
        pd_readings: engine.readings_taken() - start_readings,
    };
    Ok((lut, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn w(i: i32, q: i32) -> PhaseShifterWord {
        PhaseShifterWord::from_signed(i, q)
    }

    #[test]
    fn evm_examples() {
        let d = TargetVector::new(1.0, 0.0).unwrap();
        assert_eq!(evm(1.0, 0.0, &d), 0.0);
        let d90 = TargetVector::new(1.0, 90.0).unwrap();
        assert_abs_diff_eq!(evm(1.0, 0.0, &d90), 2f64.sqrt(), epsilon = 1e-15);
        let t = 10f64.to_radians();
        let direct = ((0.9 * t.cos() - 1.0).powi(2) + (0.9 * t.sin()).powi(2)).sqrt();
        assert_abs_diff_eq!(evm(0.9, 10.0, &d), direct, epsilon = 1e-15);
    }

    #[test]
    fn neighbors_interior_corner_and_sign_crossing() {
        assert_eq!(neighbor_states(&w(10, 10)).len(), 8);
        let corner = neighbor_states(&w(31, 31));
        assert_eq!(corner.len(), 3);
        assert!(corner.contains(&w(30, 30)) && corner.contains(&w(30, 31)) && corner.contains(&w(31, 30)));
        let crossing = neighbor_states(&w(0, 5));
        assert!(crossing.contains(&PhaseShifterWord::new(-1, 1, 1, 5).unwrap()));
        assert!(crossing.iter().all(|n| n.i_magnitude() != 0 || n.i_polarity() == 1));
    }

    #[test]
    fn initial_lut_examples() {
        let lut = initial_lut(2, 1.0, 8).unwrap();
        assert_eq!(lut.entries[0][0], w(31, 0));
        assert_eq!(lut.entries[1][1], w(22, 22));
        let half = initial_lut(1, 0.5, 4).unwrap();
        assert_eq!(half.entries[0][1], w(0, 16));
        assert!(matches!(initial_lut(1, 1.2, 4), Err(CometError::InfeasibleTarget { .. })));
        assert!(initial_lut(1, 0.5, 6).is_err());
    }

    #[test]
    fn time_budget_identity() {
        let t = TimeBudget::new(0.01, 9, 3.0, 128);
        assert_abs_diff_eq!(t.t_total, 34.56, epsilon = 1e-12);
        assert_eq!(t.t_total, t.t_frame * t.n_state as f64 * t.n_iteration * t.n_phase as f64);
    }

    #[test]
    fn lut_document_round_trip_and_validation() {
        let lut = initial_lut(3, 0.9, 16).unwrap();
        assert_eq!(Lut::from_json(&lut.to_json().unwrap()).unwrap(), lut);
        let mut doc = lut.to_document();
        doc.entries[1][2] = [40, 0];
        assert!(Lut::from_document(&doc).is_err());
        let mut doc = lut.to_document();
        doc.entries.pop();
        assert!(Lut::from_document(&doc).is_err());
    }

    #[test]
    fn evaluate_ideal_initial_lut() {
        let cfg = ArrayConfig::ideal(2);
        let lut = initial_lut(2, 1.0, 128).unwrap();
        let m = evaluate_lut(&cfg, &lut).unwrap();
        assert!(!m.pathological);
        assert!(m.rms_phase_error_deg < 1.5, "{}", m.rms_phase_error_deg);
        assert_abs_diff_eq!(m.phase_deg[0][0], 0.0);
    }

    #[test]
    fn constant_lut_is_pathological() {
        let cfg = ArrayConfig::ideal(2);
        let mut lut = initial_lut(2, 1.0, 16).unwrap();
        for row in &mut lut.entries {
            row.iter_mut().for_each(|x| *x = w(31, 0));
        }
        let m = evaluate_lut(&cfg, &lut).unwrap();
        assert!(m.pathological);
        assert!(m.rms_phase_error_deg > 90.0);
    }
}
