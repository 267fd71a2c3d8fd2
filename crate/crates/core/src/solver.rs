//! Newton iteration for stationary loops, optionally restricted to the
//! invariant subspace of a projector.
//!
//! Directions generated by translations, rotation and time shift are null
//! directions of the Hessian at every solution. Whenever they survive in the
//! working subspace they are removed by bordering the Newton matrix with
//! their (restricted, orthonormalised) span.

use nalgebra::{DMatrix, DVector};

use crate::action::{gradient_on, hessian_on, min_pair_distance_on, Potential};
use crate::error::{Error, Result};
use crate::loop_space::{orthonormal_span, trivial_modes, Axis, Collocation, LoopPath, Series};
use crate::symmetry::{project, Projector, SparseBasis};

/// Newton controls.
#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub max_iterations: usize,
    /// Target for `‖∇S‖`.
    pub tolerance: f64,
    /// Largest accepted Newton step norm.
    pub trust_radius: f64,
    /// Restrict the iteration to the invariant subspace of this projector.
    pub projector: Option<Projector>,
    pub zero_modes: ZeroModePolicy,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            tolerance: 1e-10,
            trust_radius: 0.5,
            projector: None,
            zero_modes: ZeroModePolicy::Border,
        }
    }
}

impl SolveConfig {
    pub fn with_projector(mut self, p: Projector) -> Self {
        self.projector = Some(p);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) || !(self.trust_radius > 0.0) || self.max_iterations == 0 {
            return Err(Error::InvalidConfig(
                "tolerance, trust radius and iteration budget must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Treatment of the symmetry null directions in the Newton matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroModePolicy {
    /// Augment the Newton matrix with the trivial-mode constraints.
    Border,
    /// Leave the matrix as is (only sensible when no trivial mode survives).
    Ignore,
}

/// Converged loop plus iteration diagnostics.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub path: LoopPath,
    pub iterations: usize,
    pub gradient_norm: f64,
}

/// Working subspace of a solve.
pub(crate) struct Frame {
    pub basis: SparseBasis,
}

impl Frame {
    pub fn new(n_modes: usize, projector: Option<Projector>) -> Self {
        let basis = match projector {
            Some(p) => p.basis(n_modes),
            None => SparseBasis::identity(n_modes),
        };
        Frame { basis }
    }

    /// Orthonormal trivial directions inside the subspace, in subspace coordinates.
    pub fn trivial_border(&self, path: &LoopPath) -> Result<DMatrix<f64>> {
        let modes = trivial_modes(path)?;
        let restricted: Vec<DVector<f64>> = modes
            .iter()
            .map(|t| self.basis.restrict(t.coords()))
            .filter(|v| v.norm() > 0.5)
            .collect();
        let k = self.basis.rank();
        if restricted.is_empty() {
            return Ok(DMatrix::zeros(k, 0));
        }
        Ok(orthonormal_span(&restricted, 1e-6))
    }
}

/// Solve `[A Z; Zᵀ 0][x; μ] = [b; 0]`.
pub(crate) fn bordered_solve(a: &DMatrix<f64>, z: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let (k, r) = (a.nrows(), z.ncols());
    let mut m = DMatrix::zeros(k + r, k + r);
    m.view_mut((0, 0), (k, k)).copy_from(a);
    if r > 0 {
        m.view_mut((0, k), (k, r)).copy_from(z);
        m.view_mut((k, 0), (r, k)).copy_from(&z.transpose());
    }
    let mut rhs = DVector::zeros(k + r);
    rhs.rows_mut(0, k).copy_from(b);
    let sol = m
        .lu()
        .solve(&rhs)
        .filter(|s| s.iter().all(|x| x.is_finite()))
        .ok_or_else(|| Error::Singular(near_null_report(a, z)))?;
    Ok(sol.rows(0, k).into_owned())
}

fn near_null_report(a: &DMatrix<f64>, z: &DMatrix<f64>) -> String {
    let eig = a.clone().symmetric_eigenvalues();
    let smallest = eig.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
    format!(
        "smallest |eigenvalue| {smallest:e} in a {}-dimensional subspace with {} bordered trivial modes",
        a.nrows(),
        z.ncols()
    )
}

fn check_collision_free(path: &LoopPath, pot: &Potential, grid: &Collocation) -> Result<()> {
    gradient_on(grid, path, pot).map(|_| ())
}

/// Newton's method for `∇S = 0`.
pub fn solve(initial: &LoopPath, pot: &Potential, cfg: &SolveConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let grid = Collocation::for_series(initial);
    let frame = Frame::new(initial.n_modes(), cfg.projector);
    let mut q = match cfg.projector {
        Some(p) => project(p, initial),
        None => initial.clone(),
    };
    check_collision_free(&q, pot, &grid)?;
    let mut g = gradient_on(&grid, &q, pot)?;
    let mut gnorm = g.norm();
    for it in 0..=cfg.max_iterations {
        if gnorm <= cfg.tolerance {
            return Ok(SolveReport {
                path: q,
                iterations: it,
                gradient_norm: gnorm,
            });
        }
        if it == cfg.max_iterations {
            break;
        }
        let h = frame.basis.compress(hessian_on(&grid, &q, pot)?.matrix());
        let gs = frame.basis.restrict(g.coords());
        let z = match cfg.zero_modes {
            ZeroModePolicy::Border => frame.trivial_border(&q)?,
            ZeroModePolicy::Ignore => DMatrix::zeros(gs.len(), 0),
        };
        let mut dy = bordered_solve(&h, &z, &(-&gs))?;
        let step = dy.norm();
        if step > cfg.trust_radius {
            dy *= cfg.trust_radius / step;
        }
        let dx = frame.basis.lift(&dy);
        // Backtrack on the gradient norm; collisions count as rejections.
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..12 {
            let trial = q.with_coords(q.coords() + &dx * alpha);
            if let Ok(gt) = gradient_on(&grid, &trial, pot) {
                let n = gt.norm();
                if n.is_finite() && (n < gnorm || n <= cfg.tolerance) {
                    accepted = Some((trial, gt, n));
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((trial, gt, n)) => {
                q = trial;
                g = gt;
                gnorm = n;
            }
            None => {
                return Err(Error::NoConvergence {
                    iterations: it + 1,
                    residual: gnorm,
                })
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_iterations,
        residual: gnorm,
    })
}

/// Minimise the action inside the projector subspace by a shifted Newton
/// iteration (Levenberg–Marquardt with a trust radius), then polish with
/// plain Newton.
pub fn minimize(initial: &LoopPath, pot: &Potential, cfg: &SolveConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let grid = Collocation::for_series(initial);
    let frame = Frame::new(initial.n_modes(), cfg.projector);
    let mut q = match cfg.projector {
        Some(p) => project(p, initial),
        None => initial.clone(),
    };
    let mut s = crate::action::action_on(&grid, &q, pot)?;
    let mut radius = cfg.trust_radius;
    let budget = cfg.max_iterations * 10;
    for it in 0..budget {
        let g = gradient_on(&grid, &q, pot)?;
        let gnorm = g.norm();
        if gnorm <= cfg.tolerance {
            return Ok(SolveReport {
                path: q,
                iterations: it,
                gradient_norm: gnorm,
            });
        }
        let h = frame.basis.compress(hessian_on(&grid, &q, pot)?.matrix());
        let z = frame.trivial_border(&q)?;
        // Complement of the trivial directions inside the subspace.
        let k = h.nrows();
        let mut cols: Vec<DVector<f64>> = (0..z.ncols()).map(|j| z.column(j).into_owned()).collect();
        cols.extend((0..k).map(|i| {
            let mut e = DVector::zeros(k);
            e[i] = 1.0;
            e
        }));
        let full = orthonormal_span(&cols, 1e-8);
        let w = full.columns(z.ncols(), full.ncols() - z.ncols()).into_owned();
        let hw = w.transpose() * &h * &w;
        let gw = w.transpose() * frame.basis.restrict(g.coords());
        let eig = hw.clone().symmetric_eigen();
        let coef = eig.eigenvectors.transpose() * &gw;
        let lmin = eig.eigenvalues.min();
        let step_for = |mu: f64| -> DVector<f64> {
            let scaled = DVector::from_iterator(coef.len(), coef.iter().zip(eig.eigenvalues.iter()).map(|(c, l)| -c / (l + mu)));
            &eig.eigenvectors * scaled
        };
        // Smallest shift that makes the model convex and the step fit the radius.
        let mut mu = if lmin > 0.0 { 0.0 } else { -lmin * 1.01 + 1e-8 };
        let mut dz = step_for(mu);
        let mut growth = 1e-3 * eig.eigenvalues.amax().max(1.0);
        while dz.norm() > radius {
            mu += growth;
            growth *= 2.0;
            dz = step_for(mu);
        }
        let predicted = gw.dot(&dz) + 0.5 * dz.dot(&(&hw * &dz));
        let dx = frame.basis.lift(&(&w * &dz));
        let trial = q.with_coords(q.coords() + dx);
        // A local minimiser must not jump across the repulsive core.
        let approach = min_pair_distance_on(&grid, &trial) / min_pair_distance_on(&grid, &q);
        let st = if approach < 0.7 {
            None
        } else {
            crate::action::action_on(&grid, &trial, pot).ok()
        };
        match st {
            Some(st) if st < s || (mu == 0.0 && (st - s).abs() <= 1e-13 * s.abs().max(1.0)) => {
                let ratio = if predicted < 0.0 { (st - s) / predicted } else { 1.0 };
                if ratio > 0.75 {
                    radius = (radius * 2.0).min(10.0 * cfg.trust_radius);
                } else if ratio < 0.25 {
                    radius *= 0.5;
                }
                q = trial;
                s = st;
            }
            _ => {
                radius *= 0.25;
                if radius < 1e-14 {
                    break;
                }
            }
        }
    }
    // Final polish with the bordered Newton solver.
    let polish = SolveConfig {
        max_iterations: cfg.max_iterations,
        ..cfg.clone()
    };
    solve(&q, pot, &polish)
}

/// Choreographic lemniscate `r_0(t) = (A sin ωt, B sin 2ωt)`, `r_k(t) = r_0(t + kT/3)`,
/// projected onto the fully symmetric subspace.
pub fn seed_figure_eight_scaled(period: f64, n_modes: usize, width: f64, height: f64) -> LoopPath {
    let mut q = LoopPath::zeros(period, n_modes);
    for k in 0..3 {
        let shift = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
        // sin(m(ωt + φ)) = sin(mωt)cos(mφ) + cos(mωt)sin(mφ)
        q.set_sin(k, Axis::X, 1, width * shift.cos());
        q.set_cos(k, Axis::X, 1, width * shift.sin());
        if n_modes >= 2 {
            q.set_sin(k, Axis::Y, 2, height * (2.0 * shift).cos());
            q.set_cos(k, Axis::Y, 2, height * (2.0 * shift).sin());
        }
    }
    project(Projector::PD6, &q)
}

/// Newton seed for the homogeneous potential with `a = 1` and `T = 1`.
pub fn seed_figure_eight(n_modes: usize) -> LoopPath {
    seed_figure_eight_scaled(1.0, n_modes, 0.31, 0.1)
}

/// Seed for the Lennard-Jones local minimiser of period `period`. The
/// shape is the long-period one, where the `r⁻⁶` tail dominates and sizes
/// scale like `T^{1/4}`.
pub fn seed_lennard_jones(period: f64, n_modes: usize) -> LoopPath {
    let scale = (period / 20.0).powf(0.25);
    seed_figure_eight_scaled(period, n_modes, 1.6 * scale, 0.78 * scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::gradient;
    use crate::symmetry::{symmetry_residual, GroupElement};

    #[test]
    fn seed_is_symmetric_and_collision_free() {
        let q = seed_figure_eight(16);
        assert!((project(Projector::PD6, &q).coords() - q.coords()).amax() < 1e-12);
        let mut min = f64::INFINITY;
        for j in 0..1000 {
            let r = q.evaluate(j as f64 / 1000.0);
            for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                min = min.min((r[a][0] - r[b][0]).hypot(r[a][1] - r[b][1]));
            }
        }
        assert!(min > 0.1, "min separation {min}");
    }

    #[test]
    fn newton_finds_the_eight() {
        let pot = Potential::homogeneous(1.0).unwrap();
        let cfg = SolveConfig::default().with_projector(Projector::PD6);
        let rep = solve(&seed_figure_eight(16), &pot, &cfg).unwrap();
        assert!(rep.iterations <= 15);
        assert!(gradient(&rep.path, &pot).unwrap().norm() <= 1e-10);
        assert!(symmetry_residual(GroupElement::B, &rep.path) < 1e-8);
        // Restarting from the solution is a fixed point.
        let again = solve(&rep.path, &pot, &SolveConfig::default()).unwrap();
        assert!(again.iterations <= 1);
    }

    #[test]
    fn bordered_solve_respects_constraints() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 2.0, 3.0]));
        let z = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let b = DVector::from_vec(vec![0.0, 4.0, 3.0]);
        let x = bordered_solve(&a, &z, &b).unwrap();
        assert!((x - DVector::from_vec(vec![0.0, 2.0, 1.0])).norm() < 1e-14);
    }
}
