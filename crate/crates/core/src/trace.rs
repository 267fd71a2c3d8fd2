//! Following the solutions that branch off at a crossing.
//!
//! A bifurcated loop is parametrised by its projection `r = ⟨q − q_o, φ⟩` on
//! the critical direction; for fixed `r` the parameter is an unknown, so the
//! trivial branch (which has `r = 0`) cannot satisfy the constraint.

use nalgebra::DVector;

use crate::action::{action, angular_momentum, hessian, Potential};
use crate::bifurcation::BifurcationEvent;
use crate::continuation::{ContinuationConfig, Engine};
use crate::error::{Error, Result};
use crate::loop_space::{LoopPath, Series};
use crate::reduction::{predict_bifurcation, BranchPrediction, LSReduction, Side};
use crate::spectrum::{sector_spectrum, spectrum};
use crate::symmetry::{apply, symmetry_residual, BifurcationPattern, BifurcationType, GroupElement, Projector};

/// Offsets and solver limits for a trace.
#[derive(Debug, Clone)]
pub struct TraceConfig {
    /// Index into the event's pattern list (the second one selects the `P_MS` class of `VI`).
    pub pattern: usize,
    pub side: Side,
    /// Smallest `|ξ − ξ₀|` targeted.
    pub first_offset: f64,
    /// Largest `|ξ − ξ₀|` targeted.
    pub reach: f64,
    /// Ratio between successive offsets.
    pub growth: f64,
    /// Largest radius relative to `‖q_o‖`.
    pub max_radius: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            pattern: 0,
            side: Side::Both,
            first_offset: 1e-4,
            reach: 1e-2,
            growth: 1.5,
            max_radius: 0.05,
            tolerance: 1e-10,
            max_iterations: 12,
        }
    }
}

impl TraceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.first_offset > 0.0 && self.reach >= self.first_offset && self.growth > 1.0) {
            return Err(Error::InvalidConfig("trace offsets must satisfy 0 < first ≤ reach and growth > 1".into()));
        }
        Ok(())
    }
}

/// One solution on a bifurcated branch.
#[derive(Debug, Clone)]
pub struct TracedPoint {
    pub param: f64,
    /// Projection on the critical direction.
    pub radius: f64,
    pub path: LoopPath,
    pub action: f64,
    /// Distance to the symmetric loop at the same parameter (to the turning
    /// point itself for a fold, where no symmetric partner persists).
    pub distance: f64,
    pub angular_momentum: f64,
    /// Largest residual over the elements the branch should keep.
    pub invariance: f64,
    /// Smallest residual over the elements the branch should break.
    pub breaking: f64,
}

/// Bifurcated branch with its scaling fit.
#[derive(Debug, Clone)]
pub struct TracedBranch {
    pub pattern: BifurcationPattern,
    pub prediction: BranchPrediction,
    pub xi0: f64,
    pub param_name: &'static str,
    pub points: Vec<TracedPoint>,
    /// Slope of `log distance` against `log |ξ − ξ₀|`.
    pub exponent: f64,
    /// Sides of `ξ₀` on which solutions were found.
    pub sides: Side,
}

struct Setup {
    pattern: BifurcationPattern,
    prediction: BranchPrediction,
    engine: Engine,
    trivial: Engine,
    /// Constraint normal in `(y, ξ)` and the critical direction's offset.
    normal: DVector<f64>,
    y_o: DVector<f64>,
    root_period: f64,
}

fn setup(event: &BifurcationEvent, red: &LSReduction, pattern_index: usize, tol: f64, iterations: usize) -> Result<Setup> {
    let pattern = *event.patterns.get(pattern_index).ok_or_else(|| {
        Error::InvalidConfig(format!("pattern {pattern_index} does not exist for {}", event.label))
    })?;
    let prediction = predict_bifurcation(red, &pattern)?;
    let cfg = ContinuationConfig {
        projector: Some(pattern.projector),
        watch: None,
        tolerance: tol,
        max_corrector_iterations: iterations,
        ..ContinuationConfig::default()
    };
    let engine = Engine::new(event.family, event.n_modes(), &cfg);
    let trivial = Engine::new(
        event.family,
        event.n_modes(),
        &ContinuationConfig {
            projector: Some(Projector::PD6),
            ..cfg.clone()
        },
    );
    let phi = red.direction(prediction.angles[0]);
    let phi_sub = engine.frame.basis.restrict(phi.coords());
    if (phi_sub.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::Classification(format!(
            "critical direction is not invariant under {} (projected norm {})",
            pattern.projector,
            phi_sub.norm()
        )));
    }
    let root_period = event.path.period();
    let k = engine.dim();
    let mut normal = DVector::zeros(k + 1);
    normal.rows_mut(0, k).copy_from(&(phi_sub * root_period.sqrt()));
    let y_o = engine.state_of(&event.path);
    Ok(Setup {
        pattern,
        prediction,
        engine,
        trivial,
        normal,
        y_o,
        root_period,
    })
}

impl Setup {
    fn target(&self, r: f64) -> f64 {
        let k = self.engine.dim();
        r + self.normal.rows(0, k).dot(&self.y_o)
    }

    fn distance(&self, path: &LoopPath, reference: &LoopPath) -> f64 {
        let scaled = |q: &LoopPath| q.coords() / q.period().sqrt();
        (scaled(path) - scaled(reference)).norm() * path.period().sqrt()
    }

    fn symmetry(&self, path: &LoopPath) -> (f64, f64) {
        let keep = self.pattern.projector.elements();
        let scale = path.norm().max(1.0);
        let mut invariance = 0.0f64;
        let mut breaking = f64::INFINITY;
        for g in GroupElement::all() {
            let res = symmetry_residual(g, path) / scale;
            if keep.contains(&g) {
                invariance = invariance.max(res);
            } else {
                breaking = breaking.min(res);
            }
        }
        (invariance, breaking)
    }
}

/// Trace a bifurcated branch on the requested side of the crossing.
pub fn trace_bifurcated_branch(event: &BifurcationEvent, red: &LSReduction, cfg: &TraceConfig) -> Result<TracedBranch> {
    cfg.validate()?;
    let s = setup(event, red, cfg.pattern, cfg.tolerance, cfg.max_iterations)?;
    let pred = &s.prediction;
    let fold = s.pattern.kind == BifurcationType::Fold;
    // Offset sides to visit. A fold has both halves on one side, told apart
    // by the sign of the radius.
    let offset_sides: Vec<f64> = match (pred.side, cfg.side) {
        _ if fold => vec![1.0],
        (Side::Both, Side::Both) => vec![1.0, -1.0],
        (Side::Both, Side::Above) | (Side::Above, Side::Above) | (Side::Above, Side::Both) => vec![1.0],
        (Side::Both, Side::Below) | (Side::Below, Side::Below) | (Side::Below, Side::Both) => vec![-1.0],
        (have, _) => {
            return Err(Error::NoBranch(format!(
                "no branch on this side: pattern {} ({}) exists only {} {} = {:.6}",
                event.label,
                s.pattern.kind.name(),
                have.name(),
                event.family.param_name(),
                event.xi0
            )))
        }
    };
    let k = s.engine.dim();
    let sqrt_t = s.root_period.sqrt();
    let phi_sub = s.normal.rows(0, k) / s.root_period;
    let z_sub = s.engine.frame.basis.restrict(red.correction(pred.angles[0])?.coords()) / sqrt_t;
    let r_cap = cfg.max_radius * event.path.norm();

    // Radius schedules. Order-1 radii change sign with the offset; at order
    // 2 and at a fold both radius signs are followed, which exposes every
    // nearby solution of the pattern subspace.
    let mut runs: Vec<Vec<f64>> = Vec::new();
    for &side in &offset_sides {
        if fold {
            for sign in [1.0, -1.0] {
                let probe = sign * r_cap / 100.0;
                let y_seed = &s.y_o + &phi_sub * probe - &z_sub * (0.5 * probe * probe);
                runs.push(match s.engine.correct(y_seed, event.xi0, &s.normal, s.target(probe)) {
                    Ok((_, xi, _)) if xi != event.xi0 => fold_schedule(probe, (xi - event.xi0).abs(), cfg),
                    _ => vec![probe],
                });
            }
        } else {
            let radii = radius_schedule(pred, side, cfg, r_cap);
            if pred.order >= 2 {
                runs.push(radii.iter().map(|r| -r).collect());
            }
            runs.push(radii);
        }
    }

    let mut points = Vec::new();
    for radii in runs {
        let mut prev: Option<(DVector<f64>, f64, f64)> = None;
        let mut reference = event.path.clone();
        let mut attempted = Vec::new();
        let mut found = 0;
        for r in radii {
            attempted.push(r);
            let (y_seed, xi_seed) = match &prev {
                None => (&s.y_o + &phi_sub * r - &z_sub * (0.5 * r * r), event.xi0 + pred.offset(r)),
                Some((y, xi, r_prev)) => {
                    let t = r / r_prev;
                    (&s.y_o + (y - &s.y_o) * t, event.xi0 + (xi - event.xi0) * t.powi(pred.order as i32))
                }
            };
            let solved = s.engine.correct(y_seed, xi_seed, &s.normal, s.target(r));
            let (y, xi) = match solved {
                Ok((y, xi, _)) => (y, xi),
                Err(Error::NoConvergence { .. })
                | Err(Error::Singular(_))
                | Err(Error::Collision { .. })
                | Err(Error::InvalidPotential(_)) => break,
                Err(e) => return Err(e),
            };
            let path = s.engine.path(&y, xi);
            let pot = event.family.potential(xi)?;
            let distance = if fold {
                s.distance(&path, &event.path)
            } else {
                reference = s.trivial.solve_at(&reference, xi)?;
                s.distance(&path, &reference)
            };
            let (invariance, breaking) = s.symmetry(&path);
            points.push(TracedPoint {
                param: xi,
                radius: r,
                action: action(&path, &pot)?,
                angular_momentum: angular_momentum(&path),
                path,
                distance,
                invariance,
                breaking,
            });
            found += 1;
            prev = Some((y, xi, r));
        }
        if found == 0 {
            return Err(Error::NoBranch(format!(
                "Newton failed from every seed; attempted radii {attempted:?}"
            )));
        }
    }
    let exponent = scaling_exponent(&points, event.xi0);
    let above = points.iter().any(|p| p.param > event.xi0);
    let below = points.iter().any(|p| p.param < event.xi0);
    let sides = match (above, below) {
        (true, true) => Side::Both,
        (true, false) => Side::Above,
        _ => Side::Below,
    };
    if fold && cfg.side != Side::Both && cfg.side != sides {
        return Err(Error::NoBranch(format!(
            "no branch on this side: the fold at {} = {:.6} turns back {}",
            event.family.param_name(),
            event.xi0,
            sides.name()
        )));
    }
    Ok(TracedBranch {
        pattern: s.pattern,
        prediction: s.prediction,
        xi0: event.xi0,
        param_name: event.family.param_name(),
        points,
        exponent,
        sides,
    })
}

/// Radii whose predicted offsets grow geometrically from `first_offset` to
/// `reach`, limited to `r_cap`; when the cap binds the schedule spans two
/// decades below it.
fn radius_schedule(pred: &BranchPrediction, sign: f64, cfg: &TraceConfig, r_cap: f64) -> Vec<f64> {
    let (Some(lo), Some(hi)) = (pred.radius_for_offset(sign * cfg.first_offset), pred.radius_for_offset(sign * cfg.reach))
    else {
        return Vec::new();
    };
    let ratio = cfg.growth.powf(1.0 / pred.order as f64);
    let hi_abs = hi.abs().min(r_cap);
    let lo_abs = if lo.abs() < hi_abs { lo.abs() } else { hi_abs / 100.0 };
    let steps = ((hi_abs / lo_abs).ln() / ratio.ln()).floor() as usize;
    (0..=steps).map(|j| lo.signum() * lo_abs * ratio.powi(j as i32)).collect()
}

/// Radii for a fold, where the offset grows like `r²`; calibrated by one
/// probe radius and its offset.
fn fold_schedule(probe: f64, probe_offset: f64, cfg: &TraceConfig) -> Vec<f64> {
    let mut out = Vec::new();
    let mut off = cfg.first_offset;
    while off <= cfg.reach * (1.0 + 1e-12) {
        out.push(probe * (off / probe_offset).sqrt());
        off *= cfg.growth;
    }
    out
}

/// Least-squares slope of `log distance` against `log |ξ − ξ₀|`.
pub fn scaling_exponent(points: &[TracedPoint], xi0: f64) -> f64 {
    let data: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.param != xi0 && p.distance > 0.0)
        .map(|p| ((p.param - xi0).abs().ln(), p.distance.ln()))
        .collect();
    let n = data.len() as f64;
    if data.len() < 2 {
        return f64::NAN;
    }
    let (sx, sy) = data.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (num, den) = data
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx) * (x - mx)));
    num / den
}

/// Hessian eigenvalues at a bifurcated loop compared with the perturbative prediction.
#[derive(Debug, Clone)]
pub struct EigenvalueCheck {
    /// Critical eigenvalue on the symmetric branch at `param`.
    pub kappa: f64,
    pub param: f64,
    pub radius: f64,
    pub predicted: Vec<f64>,
    /// Nontrivial eigenvalues of smallest magnitude at the bifurcated loop, ascending.
    pub measured: Vec<f64>,
    pub action_difference: f64,
    pub predicted_action_difference: f64,
    /// Largest relative deviation of the eigenvalues.
    pub eigenvalue_error: f64,
    pub action_error: f64,
    pub path: LoopPath,
}

/// Move along the symmetric branch until the critical eigenvalue equals
/// `kappa` (sign chosen where the branch exists), solve for the bifurcated
/// loop there and compare its small eigenvalues with the prediction.
pub fn eigenvalue_check(event: &BifurcationEvent, red: &LSReduction, pattern: usize, kappa: f64) -> Result<EigenvalueCheck> {
    let s = setup(event, red, pattern, 1e-11, 12)?;
    let pred = &s.prediction;
    let kappa = match pred.kappa_side {
        Side::Below => -kappa.abs(),
        _ => kappa.abs(),
    };
    let set = crate::spectrum::SectorSet::new(crate::symmetry::SymmetryGroup::D6, event.n_modes());
    let basis = set
        .get(event.sector)
        .ok_or_else(|| Error::Classification(format!("sector {} is not tracked", event.sector)))?;
    let critical = |q: &LoopPath, xi: f64| -> Result<f64> {
        let pot = event.family.potential(xi)?;
        let h = hessian(q, &pot)?;
        let spec = sector_spectrum(h.matrix(), q, event.sector, basis)?;
        Ok(spec.values[event.index])
    };
    // Secant iteration for κ(ξ) = kappa.
    let (mut xa, mut ka) = (event.xi0, event.eigenvalue);
    let mut xb = event.xi0 + kappa / event.kappa_slope;
    let mut q = s.trivial.solve_at(&event.path, xb)?;
    let mut kb = critical(&q, xb)?;
    for _ in 0..30 {
        if (kb - kappa).abs() <= 1e-6 * kappa.abs() {
            break;
        }
        let xn = xb - (kb - kappa) * (xb - xa) / (kb - ka);
        xa = xb;
        ka = kb;
        xb = xn;
        q = s.trivial.solve_at(&q, xb)?;
        kb = critical(&q, xb)?;
    }
    if (kb - kappa).abs() > 1e-3 * kappa.abs() {
        return Err(Error::Bisection {
            lo: xa,
            hi: xb,
            reason: format!("critical eigenvalue {kb:e} did not reach {kappa:e}"),
        });
    }
    let r = pred
        .radius(kappa)
        .ok_or_else(|| Error::NoBranch("prediction has no branch at this κ".into()))?;
    let pot = event.family.potential(xb)?;
    let phi = red.direction(pred.angles[0]);
    let seed = q.displaced(&phi, r).displaced(&red.correction(pred.angles[0])?, -0.5 * r * r);
    let cfg = crate::solver::SolveConfig {
        tolerance: 1e-11,
        ..crate::solver::SolveConfig::default().with_projector(s.pattern.projector)
    };
    let q_b = crate::solver::solve(&seed, &pot, &cfg)?.path;
    let separation = s.distance(&q_b, &q);
    if separation < 0.5 * r.abs() {
        return Err(Error::NoBranch(format!(
            "Newton returned to the symmetric loop (separation {separation:e}, radius {r:e})"
        )));
    }
    let spec = spectrum(&q_b, &pot)?;
    let mut small: Vec<f64> = spec
        .nontrivial()
        .flat_map(|p| std::iter::repeat_n(p.value, p.multiplicity()))
        .collect();
    small.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let predicted: Vec<f64> = {
        let mut v: Vec<f64> = pred.eigenvalue_coefficients().iter().map(|c| c * kappa).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let mut measured: Vec<f64> = small.into_iter().take(predicted.len()).collect();
    measured.sort_by(f64::total_cmp);
    let eigenvalue_error = predicted
        .iter()
        .zip(&measured)
        .map(|(p, m)| if *p == 0.0 { m.abs() / kappa.abs() } else { (m - p).abs() / p.abs() })
        .fold(0.0, f64::max);
    let action_difference = action(&q_b, &pot)? - action(&q, &pot)?;
    let predicted_action_difference = pred.action_coefficient * kappa.powi(if pred.order == 1 { 3 } else { 2 });
    Ok(EigenvalueCheck {
        kappa: kb,
        param: xb,
        radius: r,
        predicted,
        measured,
        action_error: (action_difference - predicted_action_difference).abs() / predicted_action_difference.abs(),
        action_difference,
        predicted_action_difference,
        eigenvalue_error,
        path: q_b,
    })
}

/// Distinct images of a loop under the twelve group elements.
pub fn symmetry_copies(q: &LoopPath) -> Vec<LoopPath> {
    let tol = 1e-8 * q.norm().max(1.0);
    let mut out: Vec<LoopPath> = Vec::new();
    for g in GroupElement::all() {
        let image = apply(g, q);
        if out.iter().all(|c| (c.coords() - image.coords()).norm() > tol) {
            out.push(image);
        }
    }
    out
}

/// Solve for the bifurcated loop at a given parameter, starting from a traced point.
pub fn solve_bifurcated_at(point: &TracedPoint, pattern: &BifurcationPattern, pot: &Potential, period: f64) -> Result<LoopPath> {
    let seed = point.path.with_period(period);
    let cfg = crate::solver::SolveConfig {
        tolerance: 1e-11,
        ..crate::solver::SolveConfig::default().with_projector(pattern.projector)
    };
    Ok(crate::solver::solve(&seed, pot, &cfg)?.path)
}
