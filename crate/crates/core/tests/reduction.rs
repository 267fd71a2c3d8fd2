mod common;

use common::v_event;
use figeight::loop_space::{orthonormal_span, trivial_modes, Series};
use figeight::reduction::{epsilon_first_order, retained_modes};
use figeight::{event_at, hessian, ls_coefficients, spectrum, IrrepLabel, ReductionConfig};
use nalgebra::DVector;

/// `ε₁ = −½ H⁻¹ R₂` on the complement of the trivial and critical modes,
/// by a dense solve instead of the eigen-expansion.
#[test]
fn first_order_correction_matches_a_dense_solve() {
    let e = v_event(12);
    let pot = e.potential().unwrap();
    let q = &e.path;
    let spec = spectrum(q, &pot).unwrap();
    let modes = retained_modes(&spec, &e.fields).unwrap();
    let phi = &e.fields[0];
    let eps = &modes.vectors * epsilon_first_order(phi, &modes, &pot, q).unwrap();

    let mut excluded: Vec<DVector<f64>> = trivial_modes(q).unwrap().iter().map(|f| f.coords().clone()).collect();
    excluded.extend(e.fields.iter().map(|f| f.coords().clone()));
    let ex = orthonormal_span(&excluded, 1e-10);
    assert_eq!(ex.ncols(), 6);
    // Complement: the trailing left singular vectors of the excluded span.
    let full = nalgebra::SVD::new(ex.clone() * ex.transpose(), true, false);
    let mut order: Vec<usize> = (0..full.singular_values.len()).collect();
    order.sort_by(|&a, &b| full.singular_values[a].total_cmp(&full.singular_values[b]));
    let u = full.u.unwrap();
    let keep: Vec<_> = order[..q.coords().len() - 6].iter().map(|&j| u.column(j).into_owned()).collect();
    let c = nalgebra::DMatrix::from_columns(&keep);

    let h = hessian(q, &pot).unwrap();
    let r2 = figeight::action::bracket_representer(q, &pot, &[phi, phi]).unwrap();
    let reduced = c.transpose() * h.matrix() * &c;
    let dense = &c * reduced.lu().solve(&(c.transpose() * r2.coords())).unwrap() * -0.5;
    assert!((&dense - &eps).norm() <= 1e-8 * dense.norm(), "{:e} vs {:e}", (&dense - &eps).norm(), dense.norm());
}

/// The quartic coefficient settles geometrically as the truncation grows.
#[test]
fn quartic_coefficient_converges_in_the_truncation() {
    let a4: Vec<f64> = [20, 24, 28]
        .iter()
        .map(|&n| {
            let red = ls_coefficients(&v_event(n), &ReductionConfig::default()).unwrap();
            red.a4[0]
        })
        .collect();
    let d1 = (a4[1] - a4[0]).abs();
    let d2 = (a4[2] - a4[1]).abs();
    assert!(d2 <= 0.1 * d1, "A4 = {a4:?}");
    assert!(d2 <= 2e-4 * a4[2].abs(), "A4 = {a4:?}");
}

/// Rebuilding a crossing from its stored loop reproduces the detected one.
#[test]
fn event_at_reproduces_a_detected_crossing() {
    let e = v_event(12);
    let again = event_at(e.family, e.xi0, &e.path, IrrepLabel::V, e.kappa_slope).unwrap();
    assert_eq!(again.label, IrrepLabel::V);
    assert_eq!(again.d(), 2);
    assert!((again.eigenvalue - e.eigenvalue).abs() <= 1e-8 * e.hessian_norm);
    // Same critical plane: projecting one basis on the other keeps its norm.
    let plane: Vec<DVector<f64>> = e.fields.iter().map(|f| f.coords().clone()).collect();
    let basis = orthonormal_span(&plane, 1e-10);
    for f in &again.fields {
        assert!(((basis.transpose() * f.coords()).norm() - 1.0).abs() <= 1e-6);
    }
    assert!(event_at(e.family, e.xi0, &e.path, IrrepLabel::II, 1.0).is_ok_and(|x| x.label == IrrepLabel::II));
}
