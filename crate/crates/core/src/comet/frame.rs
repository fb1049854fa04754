//! Modulation frames: per-chip programming of every element for one code
//! period, acquisition through a backend, and demodulation into pairwise
//! correlations.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array_model::{MeasurementBackend, PhaseShifterWord};
use crate::codes::{demodulate, pair_count, pair_position, CodeSet};
use crate::error::{invalid, CometError, Result};

/// Modulation basis used for a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisMode {
    /// Codes flip the physical I and Q polarity bits.
    Normal,
    /// Codes flip components along axes rotated by 45°.
    Rotated,
}

impl std::fmt::Display for AxisMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AxisMode::Normal => "normal",
            AxisMode::Rotated => "rotated",
        })
    }
}

/// Joint value of an element's two channel codes on one chip.
///
/// `PlusPlus` is always the target state of a frame; the other three are
/// its reflections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CodeState {
    PlusPlus,
    PlusMinus,
    MinusPlus,
    MinusMinus,
}

impl CodeState {
    pub const ALL: [CodeState; 4] =
        [CodeState::PlusPlus, CodeState::PlusMinus, CodeState::MinusPlus, CodeState::MinusMinus];

    pub fn from_chips(c1: i8, c2: i8) -> Self {
        match (c1 > 0, c2 > 0) {
            (true, true) => CodeState::PlusPlus,
            (true, false) => CodeState::PlusMinus,
            (false, true) => CodeState::MinusPlus,
            (false, false) => CodeState::MinusMinus,
        }
    }

    pub fn signs(self) -> (f64, f64) {
        match self {
            CodeState::PlusPlus => (1.0, 1.0),
            CodeState::PlusMinus => (1.0, -1.0),
            CodeState::MinusPlus => (-1.0, 1.0),
            CodeState::MinusMinus => (-1.0, -1.0),
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Rounding applied when a rotated-basis state is mapped back to the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WordRounding {
    /// Nearest integer, halves away from zero.
    #[default]
    Nearest,
    Truncate,
}

impl WordRounding {
    fn apply(self, x: f64) -> i32 {
        match self {
            WordRounding::Nearest => x.round() as i32,
            WordRounding::Truncate => x.trunc() as i32,
        }
    }
}

/// One complete code period of modulation states.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    axis_mode: AxisMode,
    target_words: Vec<PhaseShifterWord>,
    /// Sign of each channel's target component; channel `2n` / `2n+1`.
    channel_signs: Vec<i8>,
    /// Realized word per element for each [`CodeState`].
    state_words: Vec<[PhaseShifterWord; 4]>,
    chip_settings: Vec<Vec<PhaseShifterWord>>,
}

impl Frame {
    pub fn axis_mode(&self) -> AxisMode {
        self.axis_mode
    }

    pub fn target_words(&self) -> &[PhaseShifterWord] {
        &self.target_words
    }

    pub fn channel_signs(&self) -> &[i8] {
        &self.channel_signs
    }

    pub fn chip_settings(&self) -> &[Vec<PhaseShifterWord>] {
        &self.chip_settings
    }

    pub fn n_elements(&self) -> usize {
        self.target_words.len()
    }

    pub fn len(&self) -> usize {
        self.chip_settings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chip_settings.is_empty()
    }

    pub fn state_word(&self, element: usize, state: CodeState) -> PhaseShifterWord {
        self.state_words[element][state.index()]
    }

    /// The code state of `element` that realizes `word`, if any.
    pub fn state_of(&self, element: usize, word: &PhaseShifterWord) -> Option<CodeState> {
        CodeState::ALL.into_iter().find(|&s| self.state_word(element, s) == *word)
    }
}

fn sign_of(v: i32) -> i8 {
    if v < 0 {
        -1
    } else {
        1
    }
}

/// The four realized words and channel signs for one element.
fn element_states(
    target: &PhaseShifterWord,
    mode: AxisMode,
    rounding: WordRounding,
) -> ([PhaseShifterWord; 4], [i8; 2]) {
    let (i, q) = target.signed();
    match mode {
        AxisMode::Normal => {
            let states = CodeState::ALL.map(|s| {
                let (c1, c2) = s.signs();
                PhaseShifterWord::from_signed(c1 as i32 * i, c2 as i32 * q)
            });
            (states, [sign_of(i), sign_of(q)])
        }
        AxisMode::Rotated => {
            // Components along the 45° and 135° axes of the lattice.
            let a_ir = f64::from(i + q) * FRAC_1_SQRT_2;
            let a_qr = f64::from(q - i) * FRAC_1_SQRT_2;
            let states = CodeState::ALL.map(|s| {
                let (c1, c2) = s.signs();
                let x = (c1 * a_ir - c2 * a_qr) * FRAC_1_SQRT_2;
                let y = (c1 * a_ir + c2 * a_qr) * FRAC_1_SQRT_2;
                PhaseShifterWord::from_signed(rounding.apply(x), rounding.apply(y))
            });
            (states, [sign_of(i + q), sign_of(q - i)])
        }
    }
}

/// Lay out per-chip settings for `targets` under the channel codes of
/// `code_set` (channel `2n` is element `n`'s I-like axis, `2n+1` its Q-like
/// axis).
pub fn build_frame(
    targets: &[PhaseShifterWord],
    axis_mode: AxisMode,
    code_set: &CodeSet,
    rounding: WordRounding,
) -> Result<Frame> {
    if code_set.channels() != 2 * targets.len() {
        return Err(invalid(format!(
            "code set has {} channels but {} elements need {}",
            code_set.channels(),
            targets.len(),
            2 * targets.len()
        )));
    }
    let mut state_words = Vec::with_capacity(targets.len());
    let mut channel_signs = Vec::with_capacity(2 * targets.len());
    for t in targets {
        let (states, signs) = element_states(t, axis_mode, rounding);
        state_words.push(states);
        channel_signs.extend_from_slice(&signs);
    }
    let chip_settings = (0..code_set.length())
        .map(|j| {
            (0..targets.len())
                .map(|n| {
                    let s = CodeState::from_chips(
                        code_set.code(2 * n).chips()[j],
                        code_set.code(2 * n + 1).chips()[j],
                    );
                    state_words[n][s.index()]
                })
                .collect()
        })
        .collect();
    Ok(Frame {
        axis_mode,
        target_words: targets.to_vec(),
        channel_signs,
        state_words,
        chip_settings,
    })
}

/// Program every chip of `frame` and collect one detector reading per chip.
pub fn run_frame<B: MeasurementBackend + ?Sized>(
    backend: &mut B,
    frame: &Frame,
    frame_id: u64,
) -> Result<Vec<f64>> {
    let wrap = |chip: usize| move |e: CometError| CometError::Backend { chip, message: e.to_string() };
    backend.begin_frame(frame_id, &frame.chip_settings).map_err(wrap(0))?;
    let mut readings = Vec::with_capacity(frame.len());
    for (j, settings) in frame.chip_settings.iter().enumerate() {
        backend.program(settings).map_err(wrap(j))?;
        readings.push(backend.read_detector().map_err(wrap(j))?);
    }
    Ok(readings)
}

/// Demodulated pairwise correlations, one per unordered channel pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    n_channels: usize,
    chi: Vec<f64>,
}

impl CorrelationMatrix {
    pub fn from_fn(n_channels: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut chi = Vec::with_capacity(pair_count(n_channels));
        for k in 0..n_channels {
            for l in k + 1..n_channels {
                chi.push(f(k, l));
            }
        }
        Self { n_channels, chi }
    }

    /// Exact correlations `Re(v_k · conj(v_l))` of known phasors.
    pub fn from_phasors(v: &[Complex64]) -> Self {
        Self::from_fn(v.len(), |k, l| (v[k] * v[l].conj()).re)
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    /// Correlation of channels `k != l`.
    pub fn get(&self, k: usize, l: usize) -> f64 {
        let (a, b) = if k < l { (k, l) } else { (l, k) };
        self.chi[pair_position(self.n_channels, a, b)]
    }

    /// Upper-triangle values in `(0,1), (0,2), …, (K-2,K-1)` order.
    pub fn values(&self) -> &[f64] {
        &self.chi
    }

    pub fn len(&self) -> usize {
        self.chi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chi.is_empty()
    }
}

/// Correlate readings with every channel-pair product code.
///
/// The square-law term of the detector produces `2·square_coeff·Re(u_k·conj(u_l))`
/// on product `(k, l)`; `detector_scale` is that `square_coeff`. Each value is
/// also multiplied by the two channel signs so that the result describes
/// positive-amplitude basis phasors.
pub fn demodulate_frame(
    readings: &[f64],
    code_set: &CodeSet,
    detector_scale: f64,
    channel_signs: &[i8],
) -> Result<CorrelationMatrix> {
    if readings.len() != code_set.length() {
        return Err(invalid(format!(
            "{} readings for code length {}",
            readings.len(),
            code_set.length()
        )));
    }
    if channel_signs.len() != code_set.channels() {
        return Err(invalid("channel sign count does not match code set"));
    }
    if !(detector_scale > 0.0) {
        return Err(invalid("detector scale must be positive"));
    }
    let k = code_set.channels();
    let mut chi = Vec::with_capacity(pair_count(k));
    for a in 0..k {
        for b in a + 1..k {
            let raw = demodulate(readings, code_set.product(a, b))?;
            let sign = f64::from(channel_signs[a] * channel_signs[b]);
            chi.push(sign * raw / (2.0 * detector_scale));
        }
    }
    Ok(CorrelationMatrix { n_channels: k, chi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array_model::{ArrayConfig, SimulatedArray};
    use crate::codes::select_ocp_set;

    fn w(i: i32, q: i32) -> PhaseShifterWord {
        PhaseShifterWord::from_signed(i, q)
    }

    #[test]
    fn normal_mode_flips_polarity_only() {
        let set = select_ocp_set(16, 2).unwrap();
        let f = build_frame(&[w(20, 10)], AxisMode::Normal, &set, WordRounding::Nearest).unwrap();
        assert_eq!(f.state_word(0, CodeState::MinusPlus), PhaseShifterWord::new(-1, 20, 1, 10).unwrap());
        for (j, chips) in f.chip_settings().iter().enumerate() {
            let c1 = set.code(0).chips()[j];
            let c2 = set.code(1).chips()[j];
            assert_eq!(chips[0], w(20 * i32::from(c1), 10 * i32::from(c2)));
            assert_eq!(chips[0].i_magnitude(), 20);
            assert_eq!(chips[0].q_magnitude(), 10);
        }
    }

    #[test]
    fn rotated_states_of_zero_degree_target() {
        let set = select_ocp_set(16, 2).unwrap();
        let f = build_frame(&[w(31, 0)], AxisMode::Rotated, &set, WordRounding::Nearest).unwrap();
        assert_eq!(f.state_word(0, CodeState::PlusPlus), w(31, 0));
        // reflection of 0° across the 45° axis
        assert_eq!(f.state_word(0, CodeState::PlusMinus), w(0, 31));
        assert_eq!(f.state_word(0, CodeState::MinusPlus), w(0, -31));
        assert_eq!(f.state_word(0, CodeState::MinusMinus), w(-31, 0));
    }

    fn state_angles(f: &Frame) -> Vec<f64> {
        CodeState::ALL
            .iter()
            .map(|&s| {
                let (i, q) = f.state_word(0, s).signed();
                f64::from(q).atan2(f64::from(i)).to_degrees().rem_euclid(360.0)
            })
            .collect()
    }

    #[test]
    fn states_of_45_degree_target() {
        let set = select_ocp_set(16, 2).unwrap();
        // Reflections across the physical axes.
        let f = build_frame(&[w(22, 22)], AxisMode::Normal, &set, WordRounding::Nearest).unwrap();
        assert_eq!(state_angles(&f), vec![45.0, 315.0, 135.0, 225.0]);
        // A 45° target lies on the rotated I axis: its rotated Q component
        // vanishes and the reflections collapse onto ±45°.
        let f = build_frame(&[w(22, 22)], AxisMode::Rotated, &set, WordRounding::Nearest).unwrap();
        assert_eq!(state_angles(&f), vec![45.0, 45.0, 225.0, 225.0]);
    }

    #[test]
    fn rotated_states_are_lattice_reflections() {
        let set = select_ocp_set(16, 2).unwrap();
        for (i, q) in [(31, 3), (-7, 29), (12, -30), (0, 31), (5, 5)] {
            let f = build_frame(&[w(i, q)], AxisMode::Rotated, &set, WordRounding::Nearest).unwrap();
            assert_eq!(f.state_word(0, CodeState::PlusPlus), w(i, q));
            assert_eq!(f.state_word(0, CodeState::PlusMinus), w(q, i));
            assert_eq!(f.state_word(0, CodeState::MinusPlus), w(-q, -i));
            assert_eq!(f.state_word(0, CodeState::MinusMinus), w(-i, -q));
        }
    }

    #[test]
    fn channel_count_mismatch() {
        let set = select_ocp_set(64, 4).unwrap();
        assert!(build_frame(&[w(1, 1)], AxisMode::Normal, &set, WordRounding::Nearest).is_err());
    }

    #[test]
    fn run_frame_counts_and_repeats() {
        let set = select_ocp_set(256, 16).unwrap();
        let mut cfg = ArrayConfig::ideal(8);
        cfg.noise_sigma = 0.01;
        cfg.rng_seed = 4;
        let f = build_frame(&[w(20, 9); 8], AxisMode::Normal, &set, WordRounding::Nearest).unwrap();
        let mut sim = SimulatedArray::new(cfg.clone()).unwrap();
        let a = run_frame(&mut sim, &f, 3).unwrap();
        assert_eq!(a.len(), 256);
        assert_eq!(sim.readings_taken(), 256);
        let mut sim2 = SimulatedArray::new(cfg).unwrap();
        assert_eq!(run_frame(&mut sim2, &f, 3).unwrap(), a);
    }

    #[test]
    fn zero_words_give_constant_offset() {
        let set = select_ocp_set(64, 4).unwrap();
        let mut cfg = ArrayConfig::ideal(2);
        cfg.detector.offset = 0.3;
        let f = build_frame(&[w(0, 0); 2], AxisMode::Normal, &set, WordRounding::Nearest).unwrap();
        let mut sim = SimulatedArray::new(cfg).unwrap();
        let r = run_frame(&mut sim, &f, 0).unwrap();
        assert!(r.iter().all(|&x| x == 0.3));
    }

    /// Forward-simulate two ideal channels with the given phasors by driving
    /// the detector directly with the code-multiplexed sum.
    fn two_channel_chi(v: [Complex64; 2]) -> f64 {
        let set = select_ocp_set(16, 2).unwrap();
        let readings: Vec<f64> = (0..16)
            .map(|j| (v[0] * set.code(0).chip(j) + v[1] * set.code(1).chip(j)).norm_sqr())
            .collect();
        demodulate_frame(&readings, &set, 1.0, &[1, 1]).unwrap().get(0, 1)
    }

    #[test]
    fn demodulation_two_channel_examples() {
        let chi = two_channel_chi([Complex64::new(1.0, 0.0), Complex64::i()]);
        assert!(chi.abs() < 1e-15);
        let chi = two_channel_chi([Complex64::new(1.0, 0.0), Complex64::from_polar(1.0, 60f64.to_radians())]);
        assert!((chi - 0.5).abs() < 1e-14);
    }

    #[test]
    fn demodulate_frame_length_mismatch() {
        let set = select_ocp_set(16, 2).unwrap();
        assert!(demodulate_frame(&[0.0; 8], &set, 1.0, &[1, 1]).is_err());
    }

    #[test]
    fn correlation_matrix_has_all_pairs() {
        let v: Vec<Complex64> = (0..16).map(|k| Complex64::from_polar(1.0, k as f64)).collect();
        let m = CorrelationMatrix::from_phasors(&v);
        assert_eq!(m.len(), 16 * 15 / 2);
        assert_eq!(m.get(3, 9), m.get(9, 3));
        assert!((m.get(3, 9) - (6.0f64).cos()).abs() < 1e-12);
    }
}
