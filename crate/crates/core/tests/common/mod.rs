#![allow(dead_code)]

use figeight::loop_space::{channel_len, slot_mode, Axis, LoopPath, Series, TangentField};
use figeight::solver::seed_figure_eight_scaled;
use figeight::{continue_branch, detect_crossings, solve, BifurcationEvent, ContinuationConfig, Family, IrrepLabel, Potential, SolveConfig};
use figeight::symmetry::Projector;
use nalgebra::DVector;
use proptest::prelude::*;

/// Coordinate vector length for `n` modes.
pub fn dim(n: usize) -> usize {
    6 * channel_len(n)
}

/// Figure-eight-like loop with wiggles decaying like `1/m²`; `noise` entries lie in `[-1, 1]`.
pub fn wiggly_eight(period: f64, n: usize, noise: &[f64], size: f64) -> LoopPath {
    let base = seed_figure_eight_scaled(period, n, size, 0.35 * size);
    let scale = 0.02 * size * period.sqrt();
    let wiggle = DVector::from_fn(dim(n), |i, _| {
        let m = slot_mode(i % channel_len(n)).max(1) as f64;
        noise[i] * scale / (m * m)
    });
    base.with_coords(base.coords() + wiggle)
}

pub fn field(like: &LoopPath, values: &[f64]) -> TangentField {
    let n = like.n_modes();
    let c = DVector::from_fn(dim(n), |i, _| values[i] / (slot_mode(i % channel_len(n)).max(1) as f64).powi(2));
    TangentField::from_coords(like.period(), n, c).unwrap()
}

pub fn unit_values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0f64..1.0, dim(n))
}

/// Lagrange's rotating equilateral triangle with side `rho`, one turn per period.
pub fn lagrange_triangle(period: f64, n: usize, rho: f64) -> LoopPath {
    let mut q = LoopPath::zeros(period, n);
    let r = rho / 3f64.sqrt();
    for k in 0..3 {
        let phase = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
        // r (cos(ωt + φ), sin(ωt + φ))
        q.set_cos(k, Axis::X, 1, r * phase.cos());
        q.set_sin(k, Axis::X, 1, -r * phase.sin());
        q.set_cos(k, Axis::Y, 1, r * phase.sin());
        q.set_sin(k, Axis::Y, 1, r * phase.cos());
    }
    q
}

/// The `V` crossing of the homogeneous family at unit period.
pub fn v_event(n: usize) -> BifurcationEvent {
    let pot = Potential::homogeneous(1.0).unwrap();
    let q = solve(
        &seed_figure_eight_scaled(1.0, n, 0.31, 0.1),
        &pot,
        &SolveConfig::default().with_projector(Projector::PD6),
    )
    .unwrap()
    .path;
    let branch = continue_branch(&q, Family::Homogeneous { period: 1.0 }, 1.0, (0.95, 1.0), -1.0, &ContinuationConfig::default()).unwrap();
    detect_crossings(&branch).unwrap().into_iter().find(|e| e.label == IrrepLabel::V).expect("V crossing below a = 1")
}
