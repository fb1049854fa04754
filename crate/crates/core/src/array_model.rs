//! Ground-truth model of a vector-interpolator phased array under test.
//!
//! Everything is phasor-domain: the detector output is the RF-cycle average
//! of the combined signal, so the carrier never appears. Each element is a
//! pair of signed VGAs (I and Q) feeding an imperfect quadrature basis,
//! rotated by the element's path phase and test-injection offset.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, CometError, Result};

pub const MAX_MAGNITUDE: u8 = 31;
pub const FULLSCALE_HEADROOM: f64 = 1.2;

/// Quantized vector-interpolator setting: a polarity bit and a 5-bit
/// magnitude for each of the I and Q VGAs.
///
/// Magnitude-0 axes are always stored with positive polarity so that equal
/// physical states compare equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhaseShifterWord {
    i_polarity: i8,
    i_magnitude: u8,
    q_polarity: i8,
    q_magnitude: u8,
}

impl PhaseShifterWord {
    pub fn new(i_polarity: i8, i_magnitude: u8, q_polarity: i8, q_magnitude: u8) -> Result<Self> {
        if i_polarity.abs() != 1 || q_polarity.abs() != 1 {
            return Err(invalid("polarity must be +1 or -1"));
        }
        if i_magnitude > MAX_MAGNITUDE || q_magnitude > MAX_MAGNITUDE {
            return Err(invalid(format!(
                "magnitudes ({i_magnitude}, {q_magnitude}) exceed {MAX_MAGNITUDE}"
            )));
        }
        Ok(Self::from_signed(
            i32::from(i_polarity) * i32::from(i_magnitude),
            i32::from(q_polarity) * i32::from(q_magnitude),
        ))
    }

    /// Build from signed values, clamping each to `[-31, 31]`.
    pub fn from_signed(i_signed: i32, q_signed: i32) -> Self {
        let m = i32::from(MAX_MAGNITUDE);
        let (i, q) = (i_signed.clamp(-m, m), q_signed.clamp(-m, m));
        let pol = |v: i32| if v < 0 { -1 } else { 1 };
        Self {
            i_polarity: pol(i),
            i_magnitude: i.unsigned_abs() as u8,
            q_polarity: pol(q),
            q_magnitude: q.unsigned_abs() as u8,
        }
    }

    /// Full-scale I-axis word, the 0° state of an ideal interpolator.
    pub fn i_axis() -> Self {
        Self::from_signed(i32::from(MAX_MAGNITUDE), 0)
    }

    pub fn zero() -> Self {
        Self::from_signed(0, 0)
    }

    pub fn i_polarity(&self) -> i8 {
        self.i_polarity
    }
    pub fn i_magnitude(&self) -> u8 {
        self.i_magnitude
    }
    pub fn q_polarity(&self) -> i8 {
        self.q_polarity
    }
    pub fn q_magnitude(&self) -> u8 {
        self.q_magnitude
    }

    pub fn i_signed(&self) -> i32 {
        i32::from(self.i_polarity) * i32::from(self.i_magnitude)
    }

    pub fn q_signed(&self) -> i32 {
        i32::from(self.q_polarity) * i32::from(self.q_magnitude)
    }

    pub fn signed(&self) -> (i32, i32) {
        (self.i_signed(), self.q_signed())
    }

    /// Same magnitudes, polarities multiplied by the given signs.
    pub fn with_signs(&self, i_sign: i8, q_sign: i8) -> Self {
        Self::from_signed(self.i_signed() * i32::from(i_sign), self.q_signed() * i32::from(q_sign))
    }
}

impl std::fmt::Display for PhaseShifterWord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let p = |s: i8| if s < 0 { '-' } else { '+' };
        write!(
            f,
            "({},{},{},{})",
            p(self.i_polarity),
            self.i_magnitude,
            p(self.q_polarity),
            self.q_magnitude
        )
    }
}

fn default_one() -> f64 {
    1.0
}

/// Hidden imperfections of one array element. Angles are in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementTruth {
    #[serde(default = "default_one")]
    pub path_gain: f64,
    #[serde(default)]
    pub path_phase: f64,
    /// Q basis sits at `90° + quadrature_error` from the I basis.
    #[serde(default)]
    pub quadrature_error: f64,
    #[serde(default)]
    pub injection_offset: f64,
    #[serde(default = "default_one")]
    pub i_gain_mismatch: f64,
    #[serde(default = "default_one")]
    pub q_gain_mismatch: f64,
    /// VGA law bend: amplitude ∝ `(m/31)^(1+β)`.
    #[serde(default)]
    pub vga_exponent: f64,
}

impl Default for ElementTruth {
    fn default() -> Self {
        Self {
            path_gain: 1.0,
            path_phase: 0.0,
            quadrature_error: 0.0,
            injection_offset: 0.0,
            i_gain_mismatch: 1.0,
            q_gain_mismatch: 1.0,
            vga_exponent: 0.0,
        }
    }
}

impl ElementTruth {
    fn validate(&self, n: usize) -> Result<()> {
        let bad = |what: &str| Err(CometError::Scenario(format!("element {n}: {what}")));
        if !(self.path_gain > 0.0) {
            return bad("path_gain must be > 0");
        }
        if !(self.quadrature_error.abs() < 45.0) {
            return bad("|quadrature_error| must be < 45°");
        }
        if !(self.i_gain_mismatch > 0.0 && self.q_gain_mismatch > 0.0) {
            return bad("gain mismatch factors must be > 0");
        }
        if !(self.vga_exponent > -1.0) {
            return bad("vga_exponent must be > -1");
        }
        if !(self.path_phase.is_finite() && self.injection_offset.is_finite()) {
            return bad("phases must be finite");
        }
        Ok(())
    }

    /// Signed VGA amplitude for one axis.
    fn vga(&self, polarity: i8, magnitude: u8, mismatch: f64) -> f64 {
        let frac = f64::from(magnitude) / f64::from(MAX_MAGNITUDE);
        f64::from(polarity) * mismatch * frac.powf(1.0 + self.vga_exponent)
    }

    /// Common rotation and scale applied to both VGA outputs.
    pub fn path_phasor(&self) -> Complex64 {
        Complex64::from_polar(self.path_gain, (self.path_phase + self.injection_offset).to_radians())
    }

    /// Direction of the Q basis relative to the I basis.
    pub fn q_basis(&self) -> Complex64 {
        Complex64::from_polar(1.0, (90.0 + self.quadrature_error).to_radians())
    }
}

/// Square-law power detector with an optional residual linear term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub square_coeff: f64,
    #[serde(default)]
    pub linear_coeff: f64,
    #[serde(default)]
    pub offset: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self { square_coeff: 1.0, linear_coeff: 0.0, offset: 0.0 }
    }
}

impl DetectorModel {
    /// Noise-free, unquantized detector output.
    pub fn ideal_reading(&self, sum: Complex64) -> f64 {
        let mag = sum.norm();
        self.square_coeff * mag * mag + self.linear_coeff * mag + self.offset
    }
}

/// Full simulated array: element truths plus detector, ADC and noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    #[serde(default)]
    pub name: String,
    pub n_elements: usize,
    pub elements: Vec<ElementTruth>,
    #[serde(default)]
    pub detector: DetectorModel,
    /// `None` means an ideal (infinite-resolution) ADC.
    #[serde(default)]
    pub adc_bits: Option<u32>,
    /// Detector-output noise standard deviation relative to the frame full scale.
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default)]
    pub carrier_note: String,
}

impl ArrayConfig {
    /// `n` perfect elements, ideal detector, no noise, infinite ADC.
    pub fn ideal(n: usize) -> Self {
        Self {
            name: "ideal".into(),
            n_elements: n,
            elements: vec![ElementTruth::default(); n],
            detector: DetectorModel::default(),
            adc_bits: None,
            noise_sigma: 0.0,
            rng_seed: 0,
            carrier_note: String::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_elements < 2 {
            return Err(CometError::Scenario("n_elements must be >= 2".into()));
        }
        if self.elements.len() != self.n_elements {
            return Err(CometError::Scenario(format!(
                "n_elements = {} but {} element records given",
                self.n_elements,
                self.elements.len()
            )));
        }
        for (n, e) in self.elements.iter().enumerate() {
            e.validate(n)?;
        }
        if !(self.detector.square_coeff > 0.0) {
            return Err(CometError::Scenario("detector square_coeff must be > 0".into()));
        }
        if let Some(bits) = self.adc_bits {
            if !(4..=24).contains(&bits) {
                return Err(CometError::Scenario(format!("adc_bits {bits} outside [4, 24]")));
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(CometError::Scenario("noise_sigma must be finite and >= 0".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Seeded random imperfections, each drawn uniformly within `ranges`.
    pub fn randomized(n: usize, ranges: &ImperfectionRanges, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sym = |half: f64| if half > 0.0 { rng.random_range(-half..=half) } else { 0.0 };
        let db = |x: f64| 10f64.powf(x / 20.0);
        let elements = (0..n)
            .map(|_| ElementTruth {
                path_gain: db(sym(ranges.path_gain_db)),
                path_phase: sym(180.0),
                quadrature_error: sym(ranges.quadrature_error),
                injection_offset: sym(ranges.injection_offset),
                i_gain_mismatch: db(sym(ranges.gain_mismatch_db)),
                q_gain_mismatch: db(sym(ranges.gain_mismatch_db)),
                vga_exponent: sym(ranges.vga_exponent),
            })
            .collect();
        Self {
            name: format!("randomized-{seed}"),
            n_elements: n,
            elements,
            detector: DetectorModel::default(),
            adc_bits: None,
            noise_sigma: 0.0,
            rng_seed: seed,
            carrier_note: String::new(),
        }
    }
}

/// Half-widths of the uniform distributions used by [`ArrayConfig::randomized`].
#[derive(Debug, Clone, PartialEq)]
pub struct ImperfectionRanges {
    pub path_gain_db: f64,
    pub quadrature_error: f64,
    pub injection_offset: f64,
    pub gain_mismatch_db: f64,
    pub vga_exponent: f64,
}

impl Default for ImperfectionRanges {
    fn default() -> Self {
        Self {
            path_gain_db: 1.0,
            quadrature_error: 5.0,
            injection_offset: 30.0,
            gain_mismatch_db: 1.0,
            vga_exponent: 0.0,
        }
    }
}

/// Complex response of one element at a given word, in the array frame.
pub fn element_phasor(truth: &ElementTruth, word: &PhaseShifterWord) -> Complex64 {
    let i = truth.vga(word.i_polarity, word.i_magnitude, truth.i_gain_mismatch);
    let q = truth.vga(word.q_polarity, word.q_magnitude, truth.q_gain_mismatch);
    truth.path_phasor() * (Complex64::new(i, 0.0) + truth.q_basis() * q)
}

/// Lossless combiner; combiner loss is folded into each element's path gain.
pub fn combine(phasors: &[Complex64]) -> Complex64 {
    phasors.iter().sum()
}

/// Round `raw` to the nearest of `2^bits` levels spaced `fullscale / 2^bits`
/// apart, clamping to the ADC range. Returns the level value and whether it
/// saturated.
pub fn quantize(raw: f64, bits: u32, fullscale: f64) -> (f64, bool) {
    let levels = 1u64 << bits;
    let step = fullscale / levels as f64;
    let top = (levels - 1) as f64;
    let code = (raw / step).round();
    if code < 0.0 {
        (0.0, true)
    } else if code > top {
        (top * step, true)
    } else {
        (code * step, false)
    }
}

/// One digitized detector sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub reading: f64,
    pub saturated: bool,
}

/// Square-law detection, additive gaussian noise and ADC quantization.
pub fn detect<R: Rng + ?Sized>(
    sum: Complex64,
    config: &ArrayConfig,
    fullscale: f64,
    rng: &mut R,
) -> Detection {
    let mut raw = config.detector.ideal_reading(sum);
    if config.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, config.noise_sigma * fullscale)
            .expect("noise sigma validated finite and non-negative");
        raw += normal.sample(rng);
    }
    match config.adc_bits {
        Some(bits) => {
            let (reading, saturated) = quantize(raw, bits, fullscale);
            Detection { reading, saturated }
        }
        None => Detection { reading: raw, saturated: false },
    }
}

fn check_settings(config: &ArrayConfig, settings: &[PhaseShifterWord]) -> Result<()> {
    if settings.len() != config.n_elements {
        return Err(invalid(format!(
            "{} settings for {} elements",
            settings.len(),
            config.n_elements
        )));
    }
    Ok(())
}

/// Combined phasor for one set of element words.
pub fn combined_phasor(config: &ArrayConfig, settings: &[PhaseShifterWord]) -> Result<Complex64> {
    check_settings(config, settings)?;
    Ok(config.elements.iter().zip(settings).map(|(t, w)| element_phasor(t, w)).sum())
}

/// Program all elements for one chip interval and read the detector once.
pub fn run_chip<R: Rng + ?Sized>(
    settings: &[PhaseShifterWord],
    config: &ArrayConfig,
    fullscale: f64,
    rng: &mut R,
) -> Result<Detection> {
    Ok(detect(combined_phasor(config, settings)?, config, fullscale, rng))
}

/// ADC full scale for a frame: headroom over the largest noiseless reading.
pub fn frame_fullscale(config: &ArrayConfig, chips: &[Vec<PhaseShifterWord>]) -> Result<f64> {
    let mut max = 0.0f64;
    for settings in chips {
        max = max.max(config.detector.ideal_reading(combined_phasor(config, settings)?));
    }
    Ok(if max > 0.0 { FULLSCALE_HEADROOM * max } else { 1.0 })
}

/// Noiseless truth measurement of a single element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VnaReading {
    /// `f64::NEG_INFINITY` for a zero response.
    pub gain_db: f64,
    /// `None` when the response is exactly zero.
    pub phase_deg: Option<f64>,
}

/// Gain and phase of element `n` at `word`, straight from the model.
pub fn vna_measure(config: &ArrayConfig, element: usize, word: &PhaseShifterWord) -> Result<VnaReading> {
    let truth = config
        .elements
        .get(element)
        .ok_or_else(|| invalid(format!("element {element} out of range")))?;
    let v = element_phasor(truth, word);
    let mag = v.norm();
    if mag == 0.0 {
        return Ok(VnaReading { gain_db: f64::NEG_INFINITY, phase_deg: None });
    }
    Ok(VnaReading { gain_db: 20.0 * mag.log10(), phase_deg: Some(v.arg().to_degrees()) })
}

/// Oracle phase of `word` relative to the element's own full-scale I-axis
/// response, wrapped to `[0°, 360°)`.
pub fn oracle_relative_phase(config: &ArrayConfig, element: usize, word: &PhaseShifterWord) -> Result<Option<f64>> {
    let reference = vna_measure(config, element, &PhaseShifterWord::i_axis())?;
    let here = vna_measure(config, element, word)?;
    Ok(match (here.phase_deg, reference.phase_deg) {
        (Some(p), Some(r)) => Some(crate::angle::wrap360(p - r)),
        _ => None,
    })
}

/// Hardware seam: anything that can program per-chip settings and return
/// one scalar detector reading per chip.
pub trait MeasurementBackend {
    fn n_elements(&self) -> usize;

    /// Called before each frame with every chip's settings. Real hardware may
    /// ignore it; the simulator uses it to auto-range its ADC and to select
    /// the frame's noise stream.
    fn begin_frame(&mut self, _frame_id: u64, _chips: &[Vec<PhaseShifterWord>]) -> Result<()> {
        Ok(())
    }

    fn program(&mut self, settings: &[PhaseShifterWord]) -> Result<()>;

    fn read_detector(&mut self) -> Result<f64>;

    /// Detector `|·|²` coefficient when known, used to report absolute gain.
    fn detector_scale(&self) -> Option<f64> {
        None
    }

    /// Total detector readings taken so far.
    fn readings_taken(&self) -> u64;
}

/// Simulator implementation of [`MeasurementBackend`].
#[derive(Debug, Clone)]
pub struct SimulatedArray {
    config: ArrayConfig,
    rng: ChaCha8Rng,
    fullscale: Option<f64>,
    current: Vec<PhaseShifterWord>,
    readings: u64,
    saturations: u64,
}

impl SimulatedArray {
    pub fn new(config: ArrayConfig) -> Result<Self> {
        config.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        let current = vec![PhaseShifterWord::zero(); config.n_elements];
        Ok(Self { config, rng, fullscale: None, current, readings: 0, saturations: 0 })
    }

    pub fn config(&self) -> &ArrayConfig {
        &self.config
    }

    pub fn saturations(&self) -> u64 {
        self.saturations
    }

    pub fn fullscale(&self) -> Option<f64> {
        self.fullscale
    }
}

impl MeasurementBackend for SimulatedArray {
    fn n_elements(&self) -> usize {
        self.config.n_elements
    }

    fn begin_frame(&mut self, frame_id: u64, chips: &[Vec<PhaseShifterWord>]) -> Result<()> {
        self.fullscale = Some(frame_fullscale(&self.config, chips)?);
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.rng_seed);
        rng.set_stream(frame_id);
        self.rng = rng;
        Ok(())
    }

    fn program(&mut self, settings: &[PhaseShifterWord]) -> Result<()> {
        check_settings(&self.config, settings)?;
        self.current.copy_from_slice(settings);
        Ok(())
    }

    fn read_detector(&mut self) -> Result<f64> {
        let fullscale = match self.fullscale {
            Some(fs) => fs,
            None => frame_fullscale(&self.config, std::slice::from_ref(&self.current))?,
        };
        let d = run_chip(&self.current, &self.config, fullscale, &mut self.rng)?;
        self.readings += 1;
        if d.saturated {
            self.saturations += 1;
        }
        Ok(d.reading)
    }

    fn detector_scale(&self) -> Option<f64> {
        Some(self.config.detector.square_coeff)
    }

    fn readings_taken(&self) -> u64 {
        self.readings
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn w(i: i32, q: i32) -> PhaseShifterWord {
        PhaseShifterWord::from_signed(i, q)
    }

    #[test]
    fn word_validation_and_canonical_zero() {
        assert!(PhaseShifterWord::new(1, 32, 1, 0).is_err());
        assert!(PhaseShifterWord::new(0, 3, 1, 0).is_err());
        let a = PhaseShifterWord::new(-1, 0, 1, 5).unwrap();
        let b = PhaseShifterWord::new(1, 0, 1, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.i_polarity(), 1);
        assert_eq!(w(-40, 40).signed(), (-31, 31));
    }

    #[test]
    fn ideal_axes() {
        let t = ElementTruth::default();
        let v = element_phasor(&t, &w(31, 0));
        assert_abs_diff_eq!(v.re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-15);
        let v = element_phasor(&t, &w(0, 31));
        assert_abs_diff_eq!(v.norm(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.arg().to_degrees(), 90.0, epsilon = 1e-12);
    }

    #[test]
    fn quadrature_error_tilts_q_axis() {
        let t = ElementTruth { quadrature_error: 5.0, ..Default::default() };
        let v = element_phasor(&t, &w(0, 31));
        assert_abs_diff_eq!(v.arg().to_degrees(), 95.0, epsilon = 1e-12);
    }

    #[test]
    fn polarity_flip_negates_only_its_axis() {
        let t = ElementTruth {
            quadrature_error: 3.0,
            i_gain_mismatch: 1.1,
            vga_exponent: 0.2,
            path_phase: 40.0,
            ..Default::default()
        };
        let both = element_phasor(&t, &w(17, 9));
        let i_only = element_phasor(&t, &w(17, 0));
        let q_only = element_phasor(&t, &w(0, 9));
        assert_abs_diff_eq!((both - i_only - q_only).norm(), 0.0, epsilon = 1e-14);
        let flipped = element_phasor(&t, &w(-17, 9));
        assert_abs_diff_eq!((flipped - (q_only - i_only)).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn combine_examples() {
        let a = Complex64::new(1.0, 0.0);
        assert_abs_diff_eq!(combine(&[a, -a]).norm(), 0.0);
        let s = combine(&[a, Complex64::i()]);
        assert_abs_diff_eq!(s.norm(), 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.arg().to_degrees(), 45.0, epsilon = 1e-12);
        assert_eq!(combine(&[a]), a);
    }

    #[test]
    fn detect_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut cfg = ArrayConfig::ideal(2);
        cfg.detector.offset = 0.25;
        assert_eq!(detect(Complex64::new(0.0, 0.0), &cfg, 1.0, &mut rng).reading, 0.25);
        cfg.detector.offset = 0.0;
        assert_eq!(detect(Complex64::new(0.0, 2.0), &cfg, 1.0, &mut rng).reading, 4.0);
    }

    #[test]
    fn quantize_picks_nearest_of_four_levels() {
        // Levels at 0, 1, 2, 3 for 2 bits over a full scale of 4.
        let levels = [0.0, 1.0, 2.0, 3.0];
        let raw = 2.6;
        let nearest = levels
            .iter()
            .copied()
            .min_by(|a: &f64, b: &f64| (a - raw).abs().total_cmp(&(b - raw).abs()))
            .unwrap();
        assert_eq!(quantize(raw, 2, 4.0), (nearest, false));
        assert_eq!(nearest, 3.0);
        assert_eq!(quantize(9.0, 2, 4.0), (3.0, true));
        assert_eq!(quantize(-1.0, 2, 4.0), (0.0, true));
    }

    #[test]
    fn run_chip_two_ideal_elements() {
        let cfg = ArrayConfig::ideal(2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = run_chip(&[w(31, 0), w(31, 0)], &cfg, 1.0, &mut rng).unwrap();
        assert_abs_diff_eq!(d.reading, 4.0, epsilon = 1e-12);
        let d = run_chip(&[w(0, 0), w(0, 0)], &cfg, 1.0, &mut rng).unwrap();
        assert_eq!(d.reading, 0.0);
        assert!(run_chip(&[w(0, 0)], &cfg, 1.0, &mut rng).is_err());
    }

    #[test]
    fn run_chip_matches_hand_composition() {
        let mut cfg = ArrayConfig::randomized(3, &ImperfectionRanges { vga_exponent: 0.3, ..Default::default() }, 7);
        cfg.detector = DetectorModel { square_coeff: 0.7, linear_coeff: 0.1, offset: 0.05 };
        let words = [w(12, -5), w(-31, 31), w(0, 20)];
        let phasors: Vec<Complex64> =
            cfg.elements.iter().zip(&words).map(|(t, x)| element_phasor(t, x)).collect();
        let sum = combine(&phasors);
        let expected = 0.7 * sum.norm_sqr() + 0.1 * sum.norm() + 0.05;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = run_chip(&words, &cfg, 1.0, &mut rng).unwrap();
        assert_abs_diff_eq!(d.reading, expected, epsilon = 1e-12);
    }

    #[test]
    fn vna_examples() {
        let cfg = ArrayConfig::ideal(2);
        let r = vna_measure(&cfg, 0, &w(31, 0)).unwrap();
        assert_abs_diff_eq!(r.gain_db, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.phase_deg.unwrap(), 0.0, epsilon = 1e-12);

        let r = vna_measure(&cfg, 1, &w(22, 22)).unwrap();
        let expected = 20.0 * (2f64.sqrt() * 22.0 / 31.0).log10();
        assert_abs_diff_eq!(r.gain_db, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(r.phase_deg.unwrap(), 45.0, epsilon = 1e-12);

        let r = vna_measure(&cfg, 0, &PhaseShifterWord::new(-1, 0, 1, 0).unwrap()).unwrap();
        assert_eq!(r.gain_db, f64::NEG_INFINITY);
        assert!(r.phase_deg.is_none());
        assert!(vna_measure(&cfg, 2, &w(1, 1)).is_err());
    }

    #[test]
    fn simulator_is_deterministic_per_frame_stream() {
        let mut cfg = ArrayConfig::randomized(4, &ImperfectionRanges::default(), 3);
        cfg.noise_sigma = 0.01;
        cfg.adc_bits = Some(12);
        let chips = vec![vec![w(20, 5); 4], vec![w(-3, 31); 4]];
        let run = |id| {
            let mut sim = SimulatedArray::new(cfg.clone()).unwrap();
            sim.begin_frame(id, &chips).unwrap();
            chips
                .iter()
                .map(|c| {
                    sim.program(c).unwrap();
                    sim.read_detector().unwrap()
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(5), run(5));
        assert_ne!(run(5), run(6));
    }

    #[test]
    fn scenario_validation() {
        let mut cfg = ArrayConfig::ideal(2);
        cfg.elements[1].quadrature_error = 50.0;
        assert!(cfg.validate().is_err());
        let mut cfg = ArrayConfig::ideal(2);
        cfg.adc_bits = Some(2);
        assert!(cfg.validate().is_err());
        let cfg = ArrayConfig::ideal(1);
        assert!(cfg.validate().is_err());
        let cfg = ArrayConfig::ideal(3);
        assert_eq!(ArrayConfig::from_json(&cfg.to_json().unwrap()).unwrap(), cfg);
    }
}
