//! Recovery of per-channel phasors from their pairwise correlations.
//!
//! The off-diagonal correlations are `Re(v_k · conj(v_l)) = x_k · x_l` with
//! `x_k = (Re v_k, Im v_k)`, so the full (unknown-diagonal) matrix is
//! `X·Xᵀ` for a `K×2` real `X`. The solver completes the diagonal by
//! alternating rank-2 PSD projection, then polishes `X` with damped
//! Gauss–Newton (Levenberg–Marquardt) on the measured entries, and finally
//! fixes the global rotation and reflection that scalar detection cannot see.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::frame::CorrelationMatrix;
use crate::angle::wrap180;
use crate::error::{invalid, CometError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub max_completion_iters: usize,
    /// Stop completion once the diagonal moves less than this times the trace.
    pub completion_tol: f64,
    pub max_refine_iters: usize,
    /// Channels below this fraction of the largest amplitude are low-confidence.
    pub amp_floor: f64,
    /// Hard failure above this residual norm relative to the data norm.
    pub failure_tolerance: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_completion_iters: 200,
            completion_tol: 1e-10,
            max_refine_iters: 100,
            amp_floor: 1e-3,
            failure_tolerance: 0.25,
        }
    }
}

/// Recovered channel phasors in a fixed gauge.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPhasors {
    pub v: Vec<Complex64>,
    /// Channel whose phase was set to zero.
    pub gauge_channel: usize,
    /// Whether the solution was conjugated to satisfy the Q-leads-I rule.
    pub reflected: bool,
    pub low_confidence: Vec<bool>,
    /// Root-sum-square of `chi - Re(v_k conj v_l)` over all pairs.
    pub residual: f64,
    pub relative_residual: f64,
    pub completion_iters: usize,
    pub refine_iters: usize,
}

impl ChannelPhasors {
    pub fn n_channels(&self) -> usize {
        self.v.len()
    }
}


/// Indices of the two largest eigenvalues.
fn top_two(values: &DVector<f64>) -> (usize, usize) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    (idx[0], idx[1])
}

/// Best rank-2 PSD factor `X` (K×2) of a symmetric matrix.
fn rank2_factor(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let (a, b) = top_two(&eig.eigenvalues);
    let k = m.nrows();
    let mut x = DMatrix::zeros(k, 2);
    for (col, idx) in [a, b].into_iter().enumerate() {
        let lambda = eig.eigenvalues[idx].max(0.0);
        let s = lambda.sqrt();
        for r in 0..k {
            x[(r, col)] = s * eig.eigenvectors[(r, idx)];
        }
    }
    x
}

fn residuals(chi: &CorrelationMatrix, x: &[f64]) -> Vec<f64> {
    let k = chi.n_channels();
    let mut r = Vec::with_capacity(chi.len());
    for a in 0..k {
        for b in a + 1..k {
            let model = x[2 * a] * x[2 * b] + x[2 * a + 1] * x[2 * b + 1];
            r.push(chi.get(a, b) - model);
        }
    }
    r
}

fn cost(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Levenberg–Marquardt on the flattened `X`; returns iterations used.
fn refine(chi: &CorrelationMatrix, x: &mut Vec<f64>, max_iters: usize) -> usize {
    let k = chi.n_channels();
    let n = 2 * k;
    let data_scale = chi.values().iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    let mut r = residuals(chi, x);
    let mut c = cost(&r);
    let mut mu = 1e-3;
    let mut iters = 0;
    while iters < max_iters {
        if c <= 1e-30 * data_scale {
            break;
        }
        iters += 1;
        // Normal equations J^T J and gradient J^T r with J = d(model)/dx.
        let mut jtj = DMatrix::<f64>::zeros(n, n);
        let mut jtr = DVector::<f64>::zeros(n);
        let mut p = 0;
        for a in 0..k {
            for b in a + 1..k {
                let grads = [
                    (2 * a, x[2 * b]),
                    (2 * a + 1, x[2 * b + 1]),
                    (2 * b, x[2 * a]),
                    (2 * b + 1, x[2 * a + 1]),
                ];
                for &(i, gi) in &grads {
                    jtr[i] += gi * r[p];
                    for &(j, gj) in &grads {
                        jtj[(i, j)] += gi * gj;
                    }
                }
                p += 1;
            }
        }
        let mut improved = false;
        for _ in 0..30 {
            let mut lhs = jtj.clone();
            for i in 0..n {
                lhs[(i, i)] += mu * (jtj[(i, i)] + 1e-12 * data_scale.sqrt());
            }
            let Some(chol) = lhs.cholesky() else {
                mu *= 10.0;
                continue;
            };
            let step = chol.solve(&jtr);
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a + s).collect();
            let tr = residuals(chi, &trial);
            let tc = cost(&tr);
            if tc < c {
                let small = step.norm() <= 1e-15 * (1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt());
                *x = trial;
                r = tr;
                let rel_drop = (c - tc) / c;
                c = tc;
                mu = (mu / 3.0).max(1e-12);
                improved = !(small || rel_drop < 1e-15);
                break;
            }
            mu *= 4.0;
        }
        if !improved {
            break;
        }
    }
    iters
}

/// A channel's component orthogonal to every other channel never enters the
/// data; when the others are collinear, keep the minimum-norm choice (zero).
fn drop_unobserved_components(x: &mut [f64]) {
    let k = x.len() / 2;
    for c in 0..k {
        let (mut g00, mut g01, mut g11) = (0.0, 0.0, 0.0);
        for l in (0..k).filter(|&l| l != c) {
            let (a, b) = (x[2 * l], x[2 * l + 1]);
            g00 += a * a;
            g01 += a * b;
            g11 += b * b;
        }
        let trace = g00 + g11;
        let det = g00 * g11 - g01 * g01;
        if trace <= 0.0 || det > 1e-12 * trace * trace {
            continue;
        }
        // Principal direction of the other rows.
        let angle = 0.5 * (2.0 * g01).atan2(g00 - g11);
        let (u0, u1) = (angle.cos(), angle.sin());
        let along = x[2 * c] * u0 + x[2 * c + 1] * u1;
        x[2 * c] = along * u0;
        x[2 * c + 1] = along * u1;
    }
}

/// Solve for channel phasors `v` minimizing `Σ (chi_kl − Re(v_k conj v_l))²`.
pub fn solve_phasors(chi: &CorrelationMatrix, options: &SolverOptions) -> Result<ChannelPhasors> {
    let k = chi.n_channels();
    if k < 4 {
        return Err(invalid(format!("solver needs at least 4 channels, got {k}")));
    }

    let mut m = DMatrix::<f64>::zeros(k, k);
    for a in 0..k {
        for b in a + 1..k {
            m[(a, b)] = chi.get(a, b);
            m[(b, a)] = chi.get(a, b);
        }
    }
    for a in 0..k {
        m[(a, a)] = (0..k).filter(|&b| b != a).map(|b| m[(a, b)].abs()).fold(0.0, f64::max);
    }

    let mut completion_iters = 0;
    let mut x_mat = rank2_factor(&m);
    while completion_iters < options.max_completion_iters {
        completion_iters += 1;
        let projected = &x_mat * x_mat.transpose();
        let mut change = 0.0;
        for a in 0..k {
            change += (projected[(a, a)] - m[(a, a)]).abs();
            m[(a, a)] = projected[(a, a)];
        }
        let trace: f64 = (0..k).map(|a| m[(a, a)]).sum();
        x_mat = rank2_factor(&m);
        if change <= options.completion_tol * trace.abs() || trace == 0.0 {
            break;
        }
    }

    let mut x: Vec<f64> = (0..k).flat_map(|r| [x_mat[(r, 0)], x_mat[(r, 1)]]).collect();
    let refine_iters = refine(chi, &mut x, options.max_refine_iters);
    drop_unobserved_components(&mut x);

    let r = residuals(chi, &x);
    let residual = cost(&r).sqrt();
    let data_norm = chi.values().iter().map(|v| v * v).sum::<f64>().sqrt();
    let relative_residual = if data_norm > 0.0 { residual / data_norm } else { 0.0 };
    if !x.iter().all(|v| v.is_finite()) || !residual.is_finite() {
        return Err(CometError::SolverFailed { residual: f64::NAN, tolerance: options.failure_tolerance });
    }
    if relative_residual > options.failure_tolerance {
        return Err(CometError::SolverFailed { residual: relative_residual, tolerance: options.failure_tolerance });
    }

    let mut v: Vec<Complex64> = (0..k).map(|c| Complex64::new(x[2 * c], x[2 * c + 1])).collect();
    let max_amp = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let low_confidence: Vec<bool> =
        v.iter().map(|z| max_amp == 0.0 || z.norm() < options.amp_floor * max_amp).collect();

    let gauge_channel = low_confidence.iter().position(|&low| !low).unwrap_or(0);
    if v[gauge_channel].norm() > 0.0 {
        let rot = v[gauge_channel].conj() / v[gauge_channel].norm();
        for z in &mut v {
            *z *= rot;
        }
    }

    let mut leads: Vec<f64> = (0..k / 2)
        .filter(|&n| !low_confidence[2 * n] && !low_confidence[2 * n + 1])
        .map(|n| wrap180((v[2 * n + 1].arg() - v[2 * n].arg()).to_degrees()))
        .collect();
    leads.sort_by(f64::total_cmp);
    let reflected = if leads.is_empty() {
        false
    } else {
        let mid = leads.len() / 2;
        let median = if leads.len() % 2 == 1 { leads[mid] } else { 0.5 * (leads[mid - 1] + leads[mid]) };
        median < 0.0
    };
    if reflected {
        for z in &mut v {
            *z = z.conj();
        }
    }

    Ok(ChannelPhasors {
        v,
        gauge_channel,
        reflected,
        low_confidence,
        residual,
        relative_residual,
        completion_iters,
        refine_iters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn polar(a: f64, deg: f64) -> Complex64 {
        Complex64::from_polar(a, deg.to_radians())
    }

    /// Gauge-align `truth` the same way the solver does, for comparison.
    fn aligned(truth: &[Complex64], reflect: bool) -> Vec<Complex64> {
        let rot = truth[0].conj() / truth[0].norm();
        truth.iter().map(|z| if reflect { (z * rot).conj() } else { z * rot }).collect()
    }

    #[test]
    fn four_channel_example_fits_exactly() {
        // Six equations for seven free parameters: the fit is exact but not
        // unique, so check reproduction of the data and the gauge rules.
        let truth = [polar(1.0, 0.0), polar(1.0, 90.0), polar(0.5, 30.0), polar(0.8, 120.0)];
        let chi = CorrelationMatrix::from_phasors(&truth);
        let sol = solve_phasors(&chi, &SolverOptions::default()).unwrap();
        assert!(sol.residual < 1e-9, "residual {}", sol.residual);
        let refit = CorrelationMatrix::from_phasors(&sol.v);
        for (a, b) in refit.values().iter().zip(chi.values()) {
            assert!((a - b).abs() < 1e-9);
        }
        assert_eq!(sol.v[0].im, 0.0);
        assert!(sol.v[0].re > 0.0);
        assert!(wrap180((sol.v[1].arg() - sol.v[0].arg()).to_degrees()) > 0.0);
    }

    #[test]
    fn recovers_six_channel_example() {
        let truth = [
            polar(1.0, 0.0),
            polar(1.0, 90.0),
            polar(0.5, 30.0),
            polar(0.8, 120.0),
            polar(0.7, -75.0),
            polar(0.6, 20.0),
        ];
        let chi = CorrelationMatrix::from_phasors(&truth);
        let sol = solve_phasors(&chi, &SolverOptions::default()).unwrap();
        assert!(sol.residual < 1e-9, "residual {}", sol.residual);
        for (got, want) in sol.v.iter().zip(aligned(&truth, false)) {
            assert!((got - want).norm() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn reflection_rule_restores_q_lead() {
        // Conjugated data is indistinguishable; the solver must pick the
        // branch where Q leads I.
        let truth = [
            polar(1.0, 10.0),
            polar(0.9, 95.0),
            polar(0.7, -40.0),
            polar(0.6, 52.0),
            polar(0.5, 200.0),
            polar(0.8, 275.0),
        ];
        let conj: Vec<Complex64> = truth.iter().map(|z| z.conj()).collect();
        let sol = solve_phasors(&CorrelationMatrix::from_phasors(&conj), &SolverOptions::default()).unwrap();
        for (got, want) in sol.v.iter().zip(aligned(&truth, false)) {
            assert!((got - want).norm() < 1e-9);
        }
    }

    #[test]
    fn zero_data_is_all_low_confidence() {
        let chi = CorrelationMatrix::from_fn(4, |_, _| 0.0);
        let sol = solve_phasors(&chi, &SolverOptions::default()).unwrap();
        assert!(sol.low_confidence.iter().all(|&b| b));
        assert_eq!(sol.residual, 0.0);
    }

    #[test]
    fn collinear_phasors_have_no_imaginary_part() {
        let truth =
            [polar(1.0, 25.0), polar(0.4, 25.0), polar(0.8, 205.0), polar(0.3, 25.0), polar(0.6, 205.0), polar(0.9, 25.0)];
        let sol = solve_phasors(&CorrelationMatrix::from_phasors(&truth), &SolverOptions::default()).unwrap();
        assert!(sol.residual < 1e-9);
        for (got, want) in sol.v.iter().zip(aligned(&truth, false)) {
            assert!(got.im.abs() < 1e-9);
            assert!((got - want).norm() < 1e-9);
        }
    }

    #[test]
    fn too_few_channels() {
        let chi = CorrelationMatrix::from_fn(2, |_, _| 1.0);
        assert!(matches!(solve_phasors(&chi, &SolverOptions::default()), Err(CometError::InvalidArgument(_))));
    }

    #[test]
    fn inconsistent_data_fails_hard() {
        // Far from any rank-2 matrix.
        let chi = CorrelationMatrix::from_fn(8, |k, l| ((7 * k + 13 * l) as f64).sin() * if (k * l) % 3 == 0 { 1.0 } else { -2.0 });
        let opts = SolverOptions { failure_tolerance: 1e-6, ..Default::default() };
        assert!(matches!(solve_phasors(&chi, &opts), Err(CometError::SolverFailed { .. })));
    }

    #[test]
    fn low_amplitude_channel_is_flagged() {
        let truth = [polar(1.0, 0.0), polar(1.0, 90.0), polar(1e-5, 30.0), polar(0.8, 120.0), polar(0.5, 70.0), polar(0.9, 160.0)];
        let sol = solve_phasors(&CorrelationMatrix::from_phasors(&truth), &SolverOptions::default()).unwrap();
        assert_eq!(sol.low_confidence, vec![false, false, true, false, false, false]);
    }
}
