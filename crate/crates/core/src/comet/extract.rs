//! Per-element gain and phase from gauge-fixed channel phasors.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::frame::{AxisMode, CodeState};
use super::solver::ChannelPhasors;
use crate::angle::{wrap180, wrap360};
use crate::error::{invalid, Result};

/// Nominal rotation of the rotated basis.
pub const NOMINAL_ALPHA_DEG: f64 = 45.0;

/// Measured rotation of each element's rotated basis, in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisCalibration {
    pub alpha_deg: Vec<f64>,
}

impl AxisCalibration {
    pub fn nominal(n_elements: usize) -> Self {
        Self { alpha_deg: vec![NOMINAL_ALPHA_DEG; n_elements] }
    }
}

/// Recovered response of one element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementExtraction {
    pub a_i: f64,
    pub a_q: f64,
    /// Angle from the I-like channel to the Q-like channel.
    pub gamma_deg: f64,
    /// Signs of the target along the two channels.
    pub signs: [i8; 2],
    pub state: CodeState,
    /// Phase of the reported state relative to the element's own I axis, `[0, 360)`.
    pub theta_deg: f64,
    /// Linear amplitude of the reported state.
    pub amplitude: f64,
    pub axis_mode: AxisMode,
    /// Basis rotation applied in rotated mode.
    pub alpha_deg: Option<f64>,
    pub confident: bool,
}

impl ElementExtraction {
    /// Composite vector of a code state, relative to the I-like channel.
    pub fn basis_vector(&self, state: CodeState) -> Complex64 {
        let (c1, c2) = state.signs();
        let s1 = f64::from(self.signs[0]) * c1;
        let s2 = f64::from(self.signs[1]) * c2;
        Complex64::new(s1 * self.a_i, 0.0) + Complex64::from_polar(s2 * self.a_q, self.gamma_deg.to_radians())
    }

    /// The same channel measurement re-read for another of the frame's states.
    pub fn for_state(&self, state: CodeState) -> Self {
        let w = self.basis_vector(state);
        let rotation = self.alpha_deg.unwrap_or(0.0);
        Self {
            state,
            theta_deg: wrap360(w.arg().to_degrees() + rotation),
            amplitude: w.norm(),
            ..self.clone()
        }
    }

    pub fn gain_db(&self) -> f64 {
        20.0 * self.amplitude.log10()
    }

    pub fn complex(&self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.theta_deg.to_radians())
    }
}

/// Extraction for every element of one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub axis_mode: AxisMode,
    pub elements: Vec<ElementExtraction>,
    pub solver_residual: f64,
}



/// Turn channel phasors into per-element amplitudes, quadrature angle and
/// composite phase of the frame's target state.
///
/// `signs` are the frame's channel signs. In rotated mode the composite phase
/// is shifted by `alpha` (nominal 45° when no calibration is given) so that it
/// is reported in the element's physical frame.
pub fn extract_elements(
    phasors: &ChannelPhasors,
    axis_mode: AxisMode,
    signs: &[i8],
    axis_cal: Option<&AxisCalibration>,
) -> Result<ExtractionResult> {
    let k = phasors.n_channels();
    if !k.is_multiple_of(2) || signs.len() != k {
        return Err(invalid("channel count must be even and match the sign list"));
    }
    let n_elements = k / 2;
    if let Some(cal) = axis_cal {
        if cal.alpha_deg.len() != n_elements {
            return Err(invalid("axis calibration size does not match element count"));
        }
    }
    let elements = (0..n_elements)
        .map(|n| {
            let (vi, vq) = (phasors.v[2 * n], phasors.v[2 * n + 1]);
            let alpha_deg = match axis_mode {
                AxisMode::Normal => None,
                AxisMode::Rotated => {
                    Some(axis_cal.map_or(NOMINAL_ALPHA_DEG, |c| c.alpha_deg[n]))
                }
            };
            let confident = !(phasors.low_confidence[2 * n] || phasors.low_confidence[2 * n + 1]);
            // With one channel missing its phase carries no reference; assume
            // nominal quadrature.
            let gamma_deg = if confident { wrap180((vq.arg() - vi.arg()).to_degrees()) } else { 90.0 };
            let base = ElementExtraction {
                a_i: vi.norm(),
                a_q: vq.norm(),
                gamma_deg,
                signs: [signs[2 * n], signs[2 * n + 1]],
                state: CodeState::PlusPlus,
                theta_deg: 0.0,
                amplitude: 0.0,
                axis_mode,
                alpha_deg,
                confident,
            };
            base.for_state(CodeState::PlusPlus)
        })
        .collect();
    Ok(ExtractionResult { axis_mode, elements, solver_residual: phasors.residual })
}

/// Basis to use for a commanded phase: normal near 45°/135°/225°/315°,
/// rotated within 22.5° of the Cartesian axes.
pub fn select_axis(theta_target_deg: f64) -> AxisMode {
    let m = theta_target_deg.rem_euclid(90.0);
    if (22.5..67.5).contains(&m) {
        AxisMode::Normal
    } else {
        AxisMode::Rotated
    }
}

/// Fold a phase into `[0°, 45°]`; every state sharing a frame with it (in
/// either basis) folds to the same value.
pub fn fold_phase(theta_deg: f64) -> f64 {
    let m = theta_deg.rem_euclid(90.0);
    m.min(90.0 - m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn phasors(v: Vec<Complex64>) -> ChannelPhasors {
        let k = v.len();
        ChannelPhasors {
            v,
            gauge_channel: 0,
            reflected: false,
            low_confidence: vec![false; k],
            residual: 0.0,
            relative_residual: 0.0,
            completion_iters: 0,
            refine_iters: 0,
        }
    }

    fn one(a_i: f64, a_q: f64, gamma: f64) -> ElementExtraction {
        let p = phasors(vec![
            Complex64::new(a_i, 0.0),
            Complex64::from_polar(a_q, gamma.to_radians()),
            Complex64::new(1.0, 0.0),
            Complex64::i(),
        ]);
        extract_elements(&p, AxisMode::Normal, &[1; 4], None).unwrap().elements[0].clone()
    }

    #[test]
    fn composite_examples() {
        let e = one(1.0, 1.0, 90.0);
        assert_abs_diff_eq!(e.theta_deg, 45.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.amplitude, 2f64.sqrt(), epsilon = 1e-12);

        let e = one(1.0, 0.0, 37.0);
        assert_abs_diff_eq!(e.theta_deg, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.amplitude, 1.0, epsilon = 1e-12);

        let e = one(0.7, 0.7, 95.0);
        let w = Complex64::new(0.7, 0.0) + Complex64::from_polar(0.7, 95f64.to_radians());
        assert_abs_diff_eq!(e.theta_deg, w.arg().to_degrees(), epsilon = 1e-12);
        assert_abs_diff_eq!(e.theta_deg, 47.5, epsilon = 1e-12);
        assert_abs_diff_eq!(e.amplitude, w.norm(), epsilon = 1e-12);
    }

    #[test]
    fn other_states_are_quadrant_reflections() {
        let e = one(1.0, 0.5, 90.0);
        let p = (0.5f64).atan().to_degrees();
        assert_abs_diff_eq!(e.for_state(CodeState::PlusMinus).theta_deg, 360.0 - p, epsilon = 1e-12);
        assert_abs_diff_eq!(e.for_state(CodeState::MinusPlus).theta_deg, 180.0 - p, epsilon = 1e-12);
        assert_abs_diff_eq!(e.for_state(CodeState::MinusMinus).theta_deg, 180.0 + p, epsilon = 1e-12);
    }

    #[test]
    fn rotated_mode_adds_alpha() {
        let p = phasors(vec![
            Complex64::new(0.7, 0.0),
            Complex64::from_polar(0.7, 90f64.to_radians()),
            Complex64::new(1.0, 0.0),
            Complex64::i(),
        ]);
        let cal = AxisCalibration { alpha_deg: vec![44.0, 45.0] };
        let r = extract_elements(&p, AxisMode::Rotated, &[1, -1, 1, 1], Some(&cal)).unwrap();
        // s = (+, -): composite at -45° in the rotated basis.
        assert_abs_diff_eq!(r.elements[0].theta_deg, 359.0, epsilon = 1e-12);
        assert_eq!(r.elements[0].alpha_deg, Some(44.0));
    }

    #[test]
    fn select_axis_partition() {
        assert_eq!(select_axis(45.0), AxisMode::Normal);
        assert_eq!(select_axis(0.0), AxisMode::Rotated);
        assert_eq!(select_axis(22.5), AxisMode::Normal);
        assert_eq!(select_axis(67.5), AxisMode::Rotated);
        assert_eq!(select_axis(-45.0), AxisMode::Normal);
        assert_eq!(select_axis(181.0), AxisMode::Rotated);
    }

    #[test]
    fn folding() {
        assert_eq!(fold_phase(67.5), 22.5);
        assert_eq!(fold_phase(100.0), 10.0);
        assert_eq!(fold_phase(-10.0), 10.0);
        assert_eq!(fold_phase(45.0), 45.0);
    }
}
