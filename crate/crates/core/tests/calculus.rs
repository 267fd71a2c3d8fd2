mod common;

use common::{field, lagrange_triangle, unit_values, wiggly_eight};
use figeight::loop_space::Series;
use figeight::{action, angular_momentum, bracket, gradient, hessian, Potential};
use proptest::prelude::*;
use std::f64::consts::PI;

const N: usize = 8;

fn potentials() -> impl Strategy<Value = Potential> {
    prop_oneof![
        (0.3f64..3.0).prop_map(|a| Potential::homogeneous(a).unwrap()),
        Just(Potential::LennardJones),
    ]
}

/// LJ loops need separations near the well, homogeneous ones any scale.
fn sized(pot: &Potential) -> f64 {
    match pot {
        Potential::LennardJones => 1.6,
        _ => 1.0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Circular equilibrium of the homogeneous potential: `ω² = 3ρ^{-a-2}`.
    #[test]
    fn lagrange_triangle_is_stationary_homogeneous(a in 0.3f64..3.0, period in 0.5f64..3.0) {
        let pot = Potential::homogeneous(a).unwrap();
        let w = 2.0 * PI / period;
        let rho = (3.0 / (w * w)).powf(1.0 / (a + 2.0));
        let q = lagrange_triangle(period, N, rho);
        let s = period * (0.5 * w * w * rho * rho + 3.0 * rho.powf(-a) / a);
        prop_assert!((action(&q, &pot).unwrap() - s).abs() <= 1e-12 * s.abs());
        prop_assert!(gradient(&q, &pot).unwrap().norm() <= 1e-10 * q.norm() * w * w);
        prop_assert!((angular_momentum(&q) - w * rho * rho).abs() <= 1e-12 * w * rho * rho);
    }

    /// The same with the Lennard-Jones force `U'(ρ) = −6ρ⁻⁷ + 12ρ⁻¹³`.
    #[test]
    fn lagrange_triangle_is_stationary_lennard_jones(rho in 1.2f64..3.0) {
        let pot = Potential::LennardJones;
        let w = (3.0 * (6.0 * rho.powi(-7) - 12.0 * rho.powi(-13)) / rho).sqrt();
        let period = 2.0 * PI / w;
        let q = lagrange_triangle(period, N, rho);
        let s = period * (0.5 * w * w * rho * rho + 3.0 * (rho.powi(-6) - rho.powi(-12)));
        prop_assert!((action(&q, &pot).unwrap() - s).abs() <= 1e-12 * s.abs());
        prop_assert!(gradient(&q, &pot).unwrap().norm() <= 1e-10 * q.norm() * w * w);
    }

    #[test]
    fn gradient_is_the_derivative_of_the_action(
        pot in potentials(), period in 0.8f64..2.5, noise in unit_values(N), dir in unit_values(N)
    ) {
        let q = wiggly_eight(period, N, &noise, sized(&pot));
        let v = field(&q, &dir).normalized().unwrap();
        let g = gradient(&q, &pot).unwrap();
        let h = 1e-4 * q.norm();
        let fd = (action(&q.displaced(&v, h), &pot).unwrap() - action(&q.displaced(&v, -h), &pot).unwrap()) / (2.0 * h);
        let exact = g.coords().dot(v.coords());
        prop_assert!((fd - exact).abs() <= 1e-6 * (1.0 + g.norm()), "fd {fd} exact {exact}");
    }

    #[test]
    fn hessian_is_symmetric_and_differentiates_the_gradient(
        pot in potentials(), noise in unit_values(N), dir in unit_values(N)
    ) {
        let q = wiggly_eight(1.3, N, &noise, sized(&pot));
        let hm = hessian(&q, &pot).unwrap();
        let m = hm.matrix();
        prop_assert!((m - m.transpose()).norm() <= 1e-12 * m.norm());
        let v = field(&q, &dir).normalized().unwrap();
        let h = 1e-5 * q.norm();
        let fd = (gradient(&q.displaced(&v, h), &pot).unwrap().coords() - gradient(&q.displaced(&v, -h), &pot).unwrap().coords()) / (2.0 * h);
        let exact = m * v.coords();
        prop_assert!((fd - &exact).norm() <= 1e-5 * exact.norm());
    }

    #[test]
    fn cubic_bracket_is_symmetric_and_differentiates_the_hessian(
        pot in potentials(), noise in unit_values(N), a in unit_values(N), b in unit_values(N), c in unit_values(N)
    ) {
        let q = wiggly_eight(1.1, N, &noise, sized(&pot));
        let (f, g, k) = (field(&q, &a), field(&q, &b), field(&q, &c));
        let fgk = bracket(&q, &pot, &[&f, &g, &k]).unwrap();
        for perm in [[&g, &f, &k], [&k, &g, &f], [&f, &k, &g]] {
            let other = bracket(&q, &pot, &perm).unwrap();
            prop_assert!((other - fgk).abs() <= 1e-11 * (1.0 + fgk.abs()));
        }
        let kn = k.normalized().unwrap();
        let h = 1e-5 * q.norm();
        let quad = |p: &figeight::LoopPath| {
            let m = hessian(p, &pot).unwrap();
            f.coords().dot(&(m.matrix() * g.coords()))
        };
        let fd = (quad(&q.displaced(&kn, h)) - quad(&q.displaced(&kn, -h))) / (2.0 * h);
        let exact = fgk / k.norm();
        prop_assert!((fd - exact).abs() <= 1e-5 * (1.0 + exact.abs()), "fd {fd} exact {exact}");
    }
}
