//! Fixtures shared by the pipeline benchmarks.

use comet_core::comet::CorrelationMatrix;
use comet_core::{select_ocp_set, ArrayConfig, CometEngine, ImperfectionRanges, PhaseShifterWord, SimulatedArray};
use num_complex::Complex64;

/// Engine over a seeded 8-element array with default imperfections and
/// board-like detector noise.
pub fn noisy_engine(seed: u64) -> CometEngine<SimulatedArray> {
    let mut cfg = ArrayConfig::randomized(8, &ImperfectionRanges::default(), seed);
    cfg.adc_bits = Some(12);
    cfg.noise_sigma = 0.015;
    CometEngine::new(SimulatedArray::new(cfg).unwrap(), select_ocp_set(256, 16).unwrap()).unwrap()
}

/// Eight words spread around the circle.
pub fn spread_words() -> Vec<PhaseShifterWord> {
    (0..8)
        .map(|n| {
            let t = (45.0 * n as f64 + 10.0f64).to_radians();
            PhaseShifterWord::from_signed((28.0 * t.cos()).round() as i32, (28.0 * t.sin()).round() as i32)
        })
        .collect()
}

/// Exact rank-2 correlations of `k` deterministic phasors.
pub fn rank_two_correlations(k: usize) -> CorrelationMatrix {
    let v: Vec<Complex64> = (0..k)
        .map(|c| Complex64::from_polar(0.5 + 0.05 * c as f64, (37.0 * c as f64).to_radians()))
        .collect();
    CorrelationMatrix::from_phasors(&v)
}
