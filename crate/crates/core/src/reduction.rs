//! Reduced action near a crossing.
//!
//! Writing a loop near the crossing as `q_o + r φ(θ) + Σ ε_α ψ_α`, where `φ`
//! spans the critical eigenspace and `ψ_α` the remaining nontrivial
//! eigenvectors, and eliminating the `ε_α` gives
//! `S_LS(r, θ) = κ r²/2 + Σ A_n(θ) rⁿ/n!`. The low coefficients follow from
//! brackets; the sixth is read off from a direct evaluation of `S_LS`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::action::{action, bracket, bracket_representer, gradient, hessian, Potential};
use crate::bifurcation::BifurcationEvent;
use crate::error::{Error, Result};
use crate::loop_space::{orthonormal_span, trivial_modes, LoopPath, Series, TangentField};
use crate::solver::bordered_solve;
use crate::spectrum::{spectrum, ClassifiedSpectrum};
use crate::symmetry::{apply, rotated_field, BifurcationPattern, GroupElement, IrrepLabel};

/// Eigenvalues below this fraction of the Hessian norm cannot be retained.
pub const DEGENERACY_FLOOR: f64 = 1e-8;

/// Nontrivial eigenpairs outside the critical eigenspace.
#[derive(Debug, Clone)]
pub struct RetainedModes {
    /// Eigenvalues in ascending order of magnitude.
    pub values: DVector<f64>,
    /// Unit eigenvectors as columns, in loop coordinates.
    pub vectors: DMatrix<f64>,
}

impl RetainedModes {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The `k` modes of smallest magnitude.
    pub fn truncated(&self, k: usize) -> RetainedModes {
        let k = k.min(self.len());
        RetainedModes {
            values: self.values.rows(0, k).into_owned(),
            vectors: self.vectors.columns(0, k).into_owned(),
        }
    }
}

/// Every nontrivial eigenvector of `spec` not lying in the span of `critical`.
pub fn retained_modes(spec: &ClassifiedSpectrum, critical: &[TangentField]) -> Result<RetainedModes> {
    let crit: Vec<DVector<f64>> = critical.iter().map(|f| f.coords().clone()).collect();
    let crit = orthonormal_span(&crit, 1e-10);
    let floor = DEGENERACY_FLOOR * spec.hessian_norm;
    let mut kept: Vec<(f64, DVector<f64>)> = Vec::new();
    let mut excluded = 0;
    for pair in spec.nontrivial() {
        let overlap: f64 = pair.fields.iter().map(|f| (crit.transpose() * f.coords()).norm_squared()).sum();
        if overlap > 0.5 * pair.multiplicity() as f64 {
            excluded += pair.multiplicity();
            continue;
        }
        if pair.value.abs() < floor {
            return Err(Error::Eigen(format!(
                "retained eigenvalue {:e} is below the degeneracy floor {floor:e}",
                pair.value
            )));
        }
        kept.extend(pair.fields.iter().map(|f| (pair.value, f.coords().clone())));
    }
    if excluded != critical.len() {
        return Err(Error::Eigen(format!(
            "critical eigenspace of dimension {} matched {excluded} eigenvectors",
            critical.len()
        )));
    }
    kept.sort_by(|a, b| a.0.abs().total_cmp(&b.0.abs()));
    let dim = kept.first().map_or(0, |k| k.1.len());
    let mut vectors = DMatrix::zeros(dim, kept.len());
    for (j, (_, v)) in kept.iter().enumerate() {
        vectors.set_column(j, v);
    }
    Ok(RetainedModes {
        values: DVector::from_iterator(kept.len(), kept.iter().map(|k| k.0)),
        vectors,
    })
}

/// First-order elimination coefficients `ε_α / r = −⟨φ²ψ_α⟩ / (2λ_α)`.
pub fn epsilon_first_order(phi: &TangentField, modes: &RetainedModes, pot: &Potential, q_o: &LoopPath) -> Result<DVector<f64>> {
    let r2 = bracket_representer(q_o, pot, &[phi, phi])?;
    let w = modes.vectors.transpose() * r2.coords();
    Ok(w.component_div(&modes.values) * -0.5)
}

/// Bracket coefficients at one direction `φ`.
#[derive(Debug, Clone)]
pub struct DirectionCoefficients {
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
    /// Size of the terms entering `a3`, for relative comparisons.
    pub a3_scale: f64,
    /// Size of the terms entering `a5`.
    pub a5_scale: f64,
    /// `Σ (⟨φ²ψ_α⟩/λ_α) ψ_α`; the second-order correction is `−r² z/2`.
    pub z: DVector<f64>,
}

pub fn direction_coefficients(
    q_o: &LoopPath,
    pot: &Potential,
    phi: &TangentField,
    modes: &RetainedModes,
) -> Result<DirectionCoefficients> {
    let r2 = bracket_representer(q_o, pot, &[phi, phi])?;
    let r3 = bracket_representer(q_o, pot, &[phi, phi, phi])?;
    let r4 = bracket_representer(q_o, pot, &[phi, phi, phi, phi])?;
    let w = modes.vectors.transpose() * r2.coords();
    let v = modes.vectors.transpose() * r3.coords();
    let ratio = w.component_div(&modes.values);
    let z = &modes.vectors * &ratio;
    let zf = phi.with_coords(z.clone());
    let a3 = r2.coords().dot(phi.coords());
    let a4 = r3.coords().dot(phi.coords()) - 3.0 * w.dot(&ratio);
    let a5 = r4.coords().dot(phi.coords()) - 10.0 * v.dot(&ratio) + 15.0 * bracket(q_o, pot, &[phi, &zf, &zf])?;
    let lmin = modes.values.iter().fold(f64::INFINITY, |m, l| m.min(l.abs()));
    let a5_scale = r4.norm() + 10.0 * w.norm() * v.norm() / lmin + 15.0 * r2.norm() * z.norm_squared();
    Ok(DirectionCoefficients {
        a3,
        a4,
        a5,
        a3_scale: r2.norm(),
        a5_scale,
        z,
    })
}

/// Sixth-order angular data for two-dimensional crossings.
#[derive(Debug, Clone)]
pub struct SixthOrder {
    /// `A6(θ)` sampled on the angle grid.
    pub samples: Vec<f64>,
    pub plus: f64,
    pub minus: f64,
    /// Largest deviation of the samples from `A6₊cos²3θ + A6₋sin²3θ`, relative to the largest sample.
    pub residual: f64,
    /// `A4(θ)` recovered from the same fit, for comparison with the bracket value.
    pub a4_fit: Vec<f64>,
}

/// Evaluation controls for the reduction.
#[derive(Debug, Clone)]
pub struct ReductionConfig {
    /// Points of the equispaced angle grid on `[0, 2π/3)`.
    pub theta_points: usize,
    pub sixth_order: bool,
    /// Largest fit radius relative to `‖q_o‖`.
    pub fit_radius: f64,
    /// Radii per sign in the fit.
    pub fit_samples: usize,
    pub tolerance: f64,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self {
            theta_points: 12,
            sixth_order: false,
            fit_radius: 0.04,
            fit_samples: 6,
            tolerance: 1e-11,
        }
    }
}

/// Reduced-action coefficients at a crossing.
#[derive(Debug, Clone)]
pub struct LSReduction {
    pub label: IrrepLabel,
    pub xi0: f64,
    pub kappa: f64,
    pub kappa_slope: f64,
    pub reference: LoopPath,
    pub potential: Potential,
    /// `[φ]` or `[φ₊, φ₋]`.
    pub fields: Vec<TangentField>,
    pub thetas: Vec<f64>,
    pub a3: Vec<f64>,
    pub a4: Vec<f64>,
    pub a5: Vec<f64>,
    pub a3_scale: f64,
    pub a5_scale: f64,
    pub sixth: Option<SixthOrder>,
    pub retained: usize,
    pub smallest_retained: f64,
    /// `A4(0)` with the `k` lowest retained modes, for growing `k`.
    pub cutoff_table: Vec<(usize, f64)>,
    /// First-order `ε_α / r` at `θ = 0`, ordered like the retained modes.
    pub epsilon: DVector<f64>,
    pub(crate) modes: RetainedModes,
}

impl LSReduction {
    pub fn d(&self) -> usize {
        self.fields.len()
    }

    pub fn direction(&self, theta: f64) -> TangentField {
        match self.fields.as_slice() {
            [phi] => phi.clone(),
            [p, m] => rotated_field(p, m, theta),
            _ => unreachable!("one or two critical fields"),
        }
    }

    /// Second-order correction: the eliminated component is `−r² z/2 + O(r³)`.
    pub fn correction(&self, theta: f64) -> Result<TangentField> {
        let phi = self.direction(theta);
        let r2 = bracket_representer(&self.reference, &self.potential, &[&phi, &phi])?;
        let w = self.modes.vectors.transpose() * r2.coords();
        Ok(phi.with_coords(&self.modes.vectors * w.component_div(&self.modes.values)))
    }

    /// Index of `theta` on the angle grid.
    pub fn theta_index(&self, theta: f64) -> Option<usize> {
        self.thetas.iter().position(|t| (t - theta).abs() < 1e-12)
    }
}

pub fn theta_grid(points: usize) -> Vec<f64> {
    (0..points).map(|k| 2.0 * PI / 3.0 * k as f64 / points as f64).collect()
}

/// Compute the reduction at a located crossing.
pub fn ls_coefficients(event: &BifurcationEvent, cfg: &ReductionConfig) -> Result<LSReduction> {
    if cfg.sixth_order && event.d() == 1 {
        return Err(Error::Unsupported(format!(
            "sixth-order angular fit needs a two-dimensional crossing; {} is one-dimensional",
            event.label
        )));
    }
    if cfg.theta_points == 0 || cfg.fit_samples < 4 || !(cfg.fit_radius > 0.0) {
        return Err(Error::InvalidConfig("reduction grid sizes must be positive".into()));
    }
    let pot = event.potential()?;
    let q_o = &event.path;
    let spec = spectrum(q_o, &pot)?;
    let modes = retained_modes(&spec, &event.fields)?;
    let thetas = if event.d() == 1 { vec![0.0] } else { theta_grid(cfg.theta_points) };
    let dir = |theta: f64| match event.fields.as_slice() {
        [phi] => phi.clone(),
        [p, m] => rotated_field(p, m, theta),
        _ => unreachable!(),
    };
    let coeffs: Vec<DirectionCoefficients> =
        thetas.par_iter().map(|&t| direction_coefficients(q_o, &pot, &dir(t), &modes)).collect::<Result<_>>()?;
    let phi0 = dir(0.0);
    let epsilon = epsilon_first_order(&phi0, &modes, &pot, q_o)?;
    let mut cutoff_table = Vec::new();
    let mut k = modes.len() / 4;
    while k < modes.len() {
        cutoff_table.push((k, direction_coefficients(q_o, &pot, &phi0, &modes.truncated(k))?.a4));
        k *= 2;
    }
    cutoff_table.push((modes.len(), coeffs[0].a4));

    let mut red = LSReduction {
        label: event.label,
        xi0: event.xi0,
        kappa: event.eigenvalue,
        kappa_slope: event.kappa_slope,
        reference: q_o.clone(),
        potential: pot,
        fields: event.fields.clone(),
        a3: coeffs.iter().map(|c| c.a3).collect(),
        a4: coeffs.iter().map(|c| c.a4).collect(),
        a5: coeffs.iter().map(|c| c.a5).collect(),
        a3_scale: coeffs.iter().map(|c| c.a3_scale).fold(0.0, f64::max),
        a5_scale: coeffs.iter().map(|c| c.a5_scale).fold(0.0, f64::max),
        thetas,
        sixth: None,
        retained: modes.len(),
        smallest_retained: modes.values.get(0).map_or(f64::NAN, |v| v.abs()),
        cutoff_table,
        epsilon,
        modes,
    };
    if cfg.sixth_order {
        red.sixth = Some(sixth_order_fit(&red, cfg)?);
    }
    Ok(red)
}

/// Directly evaluated reduced action.
#[derive(Debug, Clone)]
pub struct ReducedValue {
    /// `S[q_o + rφ + η] − S[q_o]`.
    pub value: f64,
    /// `∂S_LS/∂r`.
    pub slope: f64,
    /// Eliminated component `η`.
    pub eta: DVector<f64>,
}

/// `S_LS(r, θ)` by solving for the component orthogonal to the critical
/// and trivial directions. `eta` is an optional starting guess.
pub fn reduced_action(red: &LSReduction, theta: f64, r: f64, eta: Option<&DVector<f64>>, tol: f64) -> Result<ReducedValue> {
    let q_o = &red.reference;
    let pot = &red.potential;
    let phi = red.direction(theta);
    let mut cols: Vec<DVector<f64>> = red.fields.iter().map(|f| f.coords().clone()).collect();
    cols.extend(trivial_modes(q_o)?.iter().map(|t| t.coords().clone()));
    let z = orthonormal_span(&cols, 1e-8);
    let base = q_o.coords() + phi.coords() * r;
    let mut eta = match eta {
        Some(e) => e - &z * (z.transpose() * e),
        None => DVector::zeros(base.len()),
    };
    let s0 = action(q_o, pot)?;
    for it in 0..30 {
        let x = q_o.with_coords(&base + &eta);
        let g = gradient(&x, pot)?;
        let free = g.coords() - &z * (z.transpose() * g.coords());
        if free.norm() <= tol {
            return Ok(ReducedValue {
                value: action(&x, pot)? - s0,
                slope: g.coords().dot(phi.coords()),
                eta,
            });
        }
        if it == 29 {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: free.norm(),
            });
        }
        let h = hessian(&x, pot)?;
        eta += bordered_solve(h.matrix(), &z, &(-g.coords()))?;
    }
    unreachable!()
}

fn sixth_order_fit(red: &LSReduction, cfg: &ReductionConfig) -> Result<SixthOrder> {
    let r_max = cfg.fit_radius * red.reference.norm();
    let n = cfg.fit_samples;
    let radii: Vec<f64> = (1..=n).map(|j| r_max * j as f64 / n as f64).collect();
    // Per angle: least squares of ∂S/∂r on odd-in-r and even-in-r powers over ±r.
    let fits: Vec<(f64, f64)> = red
        .thetas
        .par_iter()
        .map(|&theta| -> Result<(f64, f64)> {
            let mut rows = Vec::new();
            for sign in [1.0, -1.0] {
                let mut eta: Option<DVector<f64>> = None;
                for &r in &radii {
                    let val = reduced_action(red, theta, sign * r, eta.as_ref(), cfg.tolerance)?;
                    eta = Some(val.eta.clone());
                    rows.push((sign * r, val.slope));
                }
            }
            // ∂S/∂r = κ r + A3 r²/2 + A4 r³/6 + A5 r⁴/24 + A6 r⁵/120 + A7 r⁶/720 + A8 r⁷/5040
            let powers = 7;
            let a = DMatrix::from_fn(rows.len(), powers, |i, p| (rows[i].0 / r_max).powi(p as i32 + 1));
            let b = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
            let c = a
                .svd(true, true)
                .solve(&b, 1e-14)
                .map_err(|e| Error::Eigen(format!("sixth-order fit failed: {e}")))?;
            let a4 = c[2] * 6.0 / r_max.powi(3);
            let a6 = c[4] * 120.0 / r_max.powi(5);
            Ok((a4, a6))
        })
        .collect::<Result<_>>()?;
    let samples: Vec<f64> = fits.iter().map(|f| f.1).collect();
    let a = DMatrix::from_fn(samples.len(), 2, |i, j| {
        let c = (3.0 * red.thetas[i]).cos().powi(2);
        if j == 0 {
            c
        } else {
            1.0 - c
        }
    });
    let b = DVector::from_vec(samples.clone());
    let c = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::Eigen(format!("angular fit failed: {e}")))?;
    let model = &a * &c;
    let peak = samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let residual = (model - b).amax() / peak;
    Ok(SixthOrder {
        samples,
        plus: c[0],
        minus: c[1],
        residual,
        a4_fit: fits.iter().map(|f| f.0).collect(),
    })
}

/// Which sign of a quantity a branch occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Both,
    Above,
    Below,
}

impl Side {
    pub fn name(&self) -> &'static str {
        match self {
            Side::Both => "both",
            Side::Above => "above",
            Side::Below => "below",
        }
    }

    pub fn contains(&self, sign: f64) -> bool {
        match self {
            Side::Both => true,
            Side::Above => sign > 0.0,
            Side::Below => sign < 0.0,
        }
    }
}

/// Leading-order description of the bifurcated solutions.
#[derive(Debug, Clone)]
pub struct BranchPrediction {
    pub pattern: BifurcationPattern,
    pub order: u8,
    /// Stationary angles of the branch family (`[0]` for one-dimensional crossings).
    pub angles: Vec<f64>,
    /// Leading coefficient used: `A3` at order 1, `A4` at order 2.
    pub leading: f64,
    /// Order 1: `r_b = c κ`. Order 2: `r_b = ±c √|κ|`.
    pub radius_coefficient: f64,
    /// `S_LS(r_b) = c κ³` (order 1) or `c κ²` (order 2).
    pub action_coefficient: f64,
    /// `∂²S_LS/∂r²(r_b) = c κ`.
    pub curvature_coefficient: f64,
    /// Angular curvature `∂²S_LS/∂θ² = c κ`, when the angle is a coordinate.
    pub angular_coefficient: Option<f64>,
    /// Sign of `κ` on which branches exist.
    pub kappa_side: Side,
    /// Sign of `ξ − ξ₀` on which branches exist.
    pub side: Side,
    /// `dκ/dξ` used to translate between κ and the parameter.
    pub kappa_slope: f64,
    /// Pattern with two classes: `S_LS(r_b₊) − S_LS(r_b₋) = c κ³`.
    pub action_split: Option<f64>,
}

impl BranchPrediction {
    /// Radius of the branch at `kappa`, if it exists there.
    pub fn radius(&self, kappa: f64) -> Option<f64> {
        if !self.kappa_side.contains(kappa) {
            return None;
        }
        Some(match self.order {
            1 => self.radius_coefficient * kappa,
            _ => self.radius_coefficient * kappa.abs().sqrt(),
        })
    }

    /// Parameter offset belonging to radius `r` at leading order.
    pub fn offset(&self, r: f64) -> f64 {
        let kappa = match self.order {
            1 => r / self.radius_coefficient,
            _ => -self.leading * r * r / 6.0,
        };
        kappa / self.kappa_slope
    }

    /// Radius reaching parameter offset `delta`, if the branch exists there.
    pub fn radius_for_offset(&self, delta: f64) -> Option<f64> {
        self.radius(self.kappa_slope * delta)
    }

    /// Predicted small nontrivial Hessian eigenvalues at the bifurcated loop, as multiples of κ.
    pub fn eigenvalue_coefficients(&self) -> Vec<f64> {
        match (self.order, self.angular_coefficient) {
            (1, Some(k2)) => vec![-1.0, k2],
            (1, None) => vec![-1.0],
            (_, Some(k2)) => vec![-2.0, k2],
            _ => vec![-2.0],
        }
    }
}

fn side_of(sign: f64) -> Side {
    if sign > 0.0 {
        Side::Above
    } else {
        Side::Below
    }
}

/// Leading-order prediction for a pattern from its reduction.
pub fn predict_bifurcation(red: &LSReduction, pattern: &BifurcationPattern) -> Result<BranchPrediction> {
    let slope = red.kappa_slope;
    if !(slope.is_finite() && slope != 0.0) {
        return Err(Error::InvalidConfig(format!("eigenvalue slope {slope} cannot orient the branch")));
    }
    let a3 = red.a3[0];
    let base = BranchPrediction {
        pattern: *pattern,
        order: pattern.order,
        angles: vec![0.0],
        leading: 0.0,
        radius_coefficient: 0.0,
        action_coefficient: 0.0,
        curvature_coefficient: 0.0,
        angular_coefficient: None,
        kappa_side: Side::Both,
        side: Side::Both,
        kappa_slope: slope,
        action_split: None,
    };
    match pattern.order {
        1 => {
            if a3.abs() <= 1e-6 * red.a3_scale {
                return Err(Error::OrderEscalation { coefficient: a3 });
            }
            let mut p = BranchPrediction {
                leading: a3,
                radius_coefficient: -2.0 / a3,
                action_coefficient: 2.0 / (3.0 * a3 * a3),
                curvature_coefficient: -1.0,
                ..base
            };
            if red.d() == 2 {
                p.angles = (0..3).map(|k| 2.0 * PI * k as f64 / 3.0).collect();
                p.angular_coefficient = Some(3.0);
            }
            Ok(p)
        }
        _ => {
            let a4 = red.a4[0];
            let a4_scale = red.cutoff_table.iter().map(|c| c.1.abs()).fold(0.0, f64::max);
            if a4.abs() <= 1e-6 * a4_scale.max(f64::MIN_POSITIVE) || a4 == 0.0 {
                return Err(Error::OrderEscalation { coefficient: a4 });
            }
            let kappa_side = side_of(-a4);
            let mut p = BranchPrediction {
                leading: a4,
                radius_coefficient: (6.0 / a4.abs()).sqrt(),
                action_coefficient: -3.0 / (2.0 * a4),
                curvature_coefficient: -2.0,
                kappa_side,
                side: side_of(-a4 * slope),
                ..base
            };
            if red.d() == 2 {
                let plus_class = pattern.projector == crate::symmetry::Projector::Ps;
                let offset = if plus_class { 0.0 } else { PI / 2.0 };
                p.angles = (0..6).map(|k| offset + PI * k as f64 / 3.0).collect();
                p.angular_coefficient = Some(0.0);
                if let Some(six) = &red.sixth {
                    p.action_split = Some(-3.0 * (six.plus - six.minus) / (10.0 * a4.powi(3)));
                }
            }
            Ok(p)
        }
    }
}

/// One identity check with its measured residual.
#[derive(Debug, Clone)]
pub struct IdentityCheck {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl IdentityCheck {
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        IdentityCheck {
            name: name.into(),
            residual,
            tolerance,
            pass: residual <= tolerance,
        }
    }
}

/// Angular identities of two-dimensional crossings and group invariance of `S_LS`.
pub fn verify_identities(red: &LSReduction, tol: f64) -> Result<Vec<IdentityCheck>> {
    let q = &red.reference;
    let pot = &red.potential;
    let mut checks = Vec::new();
    match (red.label, red.fields.as_slice()) {
        (IrrepLabel::V, [p, m]) => {
            let ppp = bracket(q, pot, &[p, p, p])?;
            let pmm = bracket(q, pot, &[p, m, m])?;
            checks.push(IdentityCheck::new("cubic balance", (ppp + pmm).abs() / ppp.abs(), 1e-6));
            let p4 = bracket(q, pot, &[p, p, p, p])?;
            let p2m2 = bracket(q, pot, &[p, p, m, m])?;
            let m4 = bracket(q, pot, &[m, m, m, m])?;
            let ratio = ((p2m2 / p4 - 1.0 / 3.0).abs()).max((m4 / p4 - 1.0).abs());
            checks.push(IdentityCheck::new("quartic ratios 1 : 1/3 : 1", ratio, 1e-5));
            let (lo, hi) = min_max(&red.a4);
            checks.push(IdentityCheck::new("A4 angular variation", (hi - lo) / hi.abs().max(lo.abs()), 1e-6));
            let c = red.a3[0];
            let fit = red
                .thetas
                .iter()
                .zip(&red.a3)
                .map(|(t, a)| (a - c * (3.0 * t).cos()).abs())
                .fold(0.0, f64::max);
            checks.push(IdentityCheck::new("A3 follows cos 3θ", fit / c.abs(), 1e-6));
        }
        (IrrepLabel::VI, [_, _]) => {
            let a3 = red.a3.iter().fold(0.0f64, |m, a| m.max(a.abs()));
            checks.push(IdentityCheck::new("A3 vanishes", a3 / red.a3_scale, 1e-8));
            let a5 = red.a5.iter().fold(0.0f64, |m, a| m.max(a.abs()));
            checks.push(IdentityCheck::new("A5 vanishes", a5 / red.a5_scale, 1e-8));
            if let Some(six) = &red.sixth {
                checks.push(IdentityCheck::new("A6 follows cos²3θ, sin²3θ", six.residual, 1e-2));
            }
        }
        _ => {}
    }
    checks.push(inheritance_check(red, tol)?);
    Ok(checks)
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(*x), hi.max(*x)))
}

/// `S_LS(r, θ) = S_LS(±r, θ')` whenever `g φ(θ) = ±φ(θ')`.
fn inheritance_check(red: &LSReduction, tol: f64) -> Result<IdentityCheck> {
    let r = 0.5 * ReductionConfig::default().fit_radius * red.reference.norm();
    let dirs: Vec<TangentField> = red.thetas.iter().map(|&t| red.direction(t)).collect();
    let values: Vec<(f64, f64)> = red
        .thetas
        .par_iter()
        .map(|&t| Ok((reduced_action(red, t, r, None, tol)?.value, reduced_action(red, t, -r, None, tol)?.value)))
        .collect::<Result<_>>()?;
    // Differences of actions carry rounding relative to the action itself.
    let scale = action(&red.reference, &red.potential)?.abs().max(1.0);
    let mut worst = 0.0f64;
    let mut matched = 0;
    for g in GroupElement::all() {
        for (i, d) in dirs.iter().enumerate() {
            let gd = apply(g, d);
            for (j, e) in dirs.iter().enumerate() {
                for sign in [1.0, -1.0] {
                    if (gd.coords() - e.coords() * sign).norm() < 1e-8 {
                        let (a, b) = (values[i], values[j]);
                        let (lhs_p, lhs_m) = (a.0, a.1);
                        let (rhs_p, rhs_m) = if sign > 0.0 { (b.0, b.1) } else { (b.1, b.0) };
                        worst = worst.max((lhs_p - rhs_p).abs()).max((lhs_m - rhs_m).abs());
                        matched += 1;
                    }
                }
            }
        }
    }
    if matched < 12 {
        return Err(Error::Classification(format!(
            "only {matched} group images of the critical directions fall on the angle grid"
        )));
    }
    Ok(IdentityCheck::new("reduced action group invariance", worst / scale, 1e-12))
}
