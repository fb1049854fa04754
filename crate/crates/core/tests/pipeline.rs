use comet_core::array_model::{oracle_relative_phase, vna_measure};
use comet_core::calibration::initial_lut;
use comet_core::comet::AxisOverride;
use comet_core::{select_ocp_set, ArrayConfig, CometEngine, ImperfectionRanges, SimulatedArray, SweepOptions};

fn engine(config: ArrayConfig) -> CometEngine<SimulatedArray> {
    let n = config.n_elements;
    CometEngine::new(SimulatedArray::new(config).unwrap(), select_ocp_set(256, 2 * n).unwrap()).unwrap()
}

fn wrap180(d: f64) -> f64 {
    (d + 180.0).rem_euclid(360.0) - 180.0
}

/// Largest gain (dB) and phase (deg) error of a full sweep against the oracle.
fn sweep_errors(config: &ArrayConfig, axis: AxisOverride) -> (f64, f64, u64, usize) {
    let n = config.n_elements;
    let lut = initial_lut(n, 1.0, 128).unwrap();
    let mut eng = engine(config.clone());
    let opts = SweepOptions { n_phase: 128, axis };
    let all: Vec<usize> = (0..128).collect();
    let r = eng.extract_sweep(&lut.entries, &all, &opts).unwrap();
    assert_eq!(r.states.len(), 128);
    let (mut g, mut p) = (0.0f64, 0.0f64);
    for s in &r.states {
        for (k, e) in s.elements.iter().enumerate() {
            let word = lut.entries[k][s.phase_index];
            let truth = vna_measure(config, k, &word).unwrap();
            let phase = oracle_relative_phase(config, k, &word).unwrap().unwrap();
            if !e.confident {
                assert_ne!(axis, AxisOverride::Auto, "auto sweep produced an unreferenced state");
                continue;
            }
            g = g.max((e.gain_db() - truth.gain_db).abs());
            p = p.max(wrap180(e.theta_deg - phase).abs());
        }
    }
    (g, p, r.pd_readings, r.frames)
}

#[test]
fn ideal_sweep_matches_oracle_with_8192_readings() {
    let (g, p, readings, frames) = sweep_errors(&ArrayConfig::ideal(8), AxisOverride::Auto);
    println!("ideal: gain {g:e} dB, phase {p:e} deg, {readings} readings in {frames} frames");
    assert!(g < 0.01 && p < 0.05);
    assert_eq!(readings, 8192);
    assert_eq!(frames, 32);
}

#[test]
fn imperfect_sweep_matches_oracle() {
    for seed in [1, 2, 3] {
        let cfg = ArrayConfig::randomized(8, &ImperfectionRanges::default(), seed);
        for axis in [AxisOverride::Auto, AxisOverride::Normal, AxisOverride::Rotated] {
            let (g, p, _, _) = sweep_errors(&cfg, axis);
            println!("seed {seed} {axis:?}: gain {g:e} dB, phase {p:e} deg");
            assert!(g < 0.01 && p < 0.05, "seed {seed} {axis:?}: {g} {p}");
        }
    }
}
