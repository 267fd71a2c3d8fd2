//! Location and classification of symmetry-breaking eigenvalue crossings.

use nalgebra::DVector;

use crate::action::{hessian, Potential};
use crate::continuation::{Branch, BranchPoint, ContinuationConfig, Engine, Family};
use crate::error::{Error, Result};
use crate::loop_space::{LoopPath, Series, TangentField};
use crate::spectrum::{sector_spectrum, SectorSet};
use crate::symmetry::{
    bifurcation_pattern, classify_in, partner_field, BifurcationPattern, IrrepLabel, Sector, SparseBasis,
    SymmetryGroup,
};

/// Relative eigenvalue tolerance at a located crossing.
pub const CROSSING_TOL: f64 = 1e-9;

const MAX_ROOT_ITERATIONS: usize = 80;

/// A nontrivial Hessian eigenvalue passing through zero on a branch.
#[derive(Debug, Clone)]
pub struct BifurcationEvent {
    pub family: Family,
    pub xi0: f64,
    pub label: IrrepLabel,
    pub sector: Sector,
    pub patterns: Vec<BifurcationPattern>,
    /// Residual eigenvalue at `xi0`.
    pub eigenvalue: f64,
    /// `dκ/dξ` at the crossing.
    pub kappa_slope: f64,
    /// `dκ/ds` along the arclength (`NaN` when rebuilt from a stored loop).
    pub kappa_arc_slope: f64,
    /// Index of the crossing eigenvalue in its sector (ascending, trivial modes removed).
    pub index: usize,
    pub hessian_norm: f64,
    /// Loop at the crossing.
    pub path: LoopPath,
    /// Adapted eigenfields `[φ]` or `[φ₊, φ₋]`.
    pub fields: Vec<TangentField>,
    /// Change of the Morse index as the branch moves forward through `xi0`.
    pub morse_change: i64,
}

impl BifurcationEvent {
    pub fn d(&self) -> usize {
        self.label.d()
    }

    pub fn potential(&self) -> Result<Potential> {
        self.family.potential(self.xi0)
    }

    pub fn n_modes(&self) -> usize {
        self.path.n_modes()
    }
}

struct Probe<'a> {
    engine: &'a Engine,
    base: &'a BranchPoint,
    sector: Sector,
    basis: &'a SparseBasis,
    index: usize,
}

impl Probe<'_> {
    fn point(&self, sigma: f64) -> Result<(DVector<f64>, f64)> {
        let k = self.engine.dim();
        let mut z = DVector::zeros(k + 1);
        z.rows_mut(0, k).copy_from(&self.base.state);
        z[k] = self.base.param;
        let pred = &z + &self.base.tangent * sigma;
        let target = self.base.tangent.dot(&pred);
        let (y, xi, _) = self.engine.correct(pred.rows(0, k).into_owned(), pred[k], &self.base.tangent, target)?;
        Ok((y, xi))
    }

    fn eigen_at(&self, y: &DVector<f64>, xi: f64) -> Result<(f64, DVector<f64>, f64)> {
        let path = self.engine.path(y, xi);
        let pot = self.engine.family.potential(xi)?;
        let h = hessian(&path, &pot)?;
        let spec = sector_spectrum(h.matrix(), &path, self.sector, self.basis)?;
        if self.index >= spec.values.len() {
            return Err(Error::Eigen(format!("sector {} has no eigenvalue {}", self.sector, self.index)));
        }
        Ok((spec.values[self.index], spec.vectors.column(self.index).into_owned(), h.spectral_norm()))
    }

    fn value(&self, sigma: f64) -> Result<f64> {
        let (y, xi) = self.point(sigma)?;
        Ok(self.eigen_at(&y, xi)?.0)
    }
}

/// Locate every sign change of a tracked sector eigenvalue along `branch`.
/// Events are sorted by parameter value.
pub fn detect_crossings(branch: &Branch) -> Result<Vec<BifurcationEvent>> {
    let engine = branch.engine();
    let Some(set) = &engine.sectors else {
        return Err(Error::InvalidConfig("branch was continued without spectral tracking".into()));
    };
    let mut events = Vec::new();
    for w in branch.points.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        for (sa, sb) in a.sectors.iter().zip(&b.sectors) {
            if sa.negatives == sb.negatives {
                continue;
            }
            let basis = set.get(sa.sector).expect("tracked sector");
            let (lo, hi) = (sa.negatives.min(sb.negatives), sa.negatives.max(sb.negatives));
            for index in lo..hi {
                let probe = Probe {
                    engine: &engine,
                    base: a,
                    sector: sa.sector,
                    basis,
                    index,
                };
                let mut ev = locate(&probe, a.step, set.group)?;
                let sign: i64 = if sb.negatives > sa.negatives { 1 } else { -1 };
                ev.morse_change = sign * ev.d() as i64;
                events.push(ev);
            }
        }
    }
    events.sort_by(|x, y| x.xi0.total_cmp(&y.xi0));
    Ok(events)
}

fn locate(probe: &Probe, step: f64, group: SymmetryGroup) -> Result<BifurcationEvent> {
    let (lo, hi) = (0.0, step);
    let f_lo = probe.value(lo)?;
    let f_hi = probe.value(hi)?;
    let fail = |lo: f64, hi: f64, reason: &str| Error::Bisection {
        lo: probe.base.param + lo * probe.base.tangent[probe.base.tangent.len() - 1],
        hi: probe.base.param + hi * probe.base.tangent[probe.base.tangent.len() - 1],
        reason: reason.to_string(),
    };
    if f_lo * f_hi > 0.0 {
        return Err(fail(lo, hi, "eigenvalue does not change sign within the step"));
    }
    let (y0, xi0) = probe.point(0.0)?;
    let norm = probe.eigen_at(&y0, xi0)?.2;
    let tol = (CROSSING_TOL * norm).min(CROSSING_TOL);

    // Illinois variant of regula falsi; `a` and `b` always bracket the root.
    let (mut a, mut b, mut fa, mut fb) = (lo, hi, f_lo, f_hi);
    let mut sigma = if fa.abs() < fb.abs() { a } else { b };
    for _ in 0..MAX_ROOT_ITERATIONS {
        if fa.abs().min(fb.abs()) <= tol || (b - a).abs() <= 1e-14 * step {
            break;
        }
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = probe.value(c)?;
        if fc * fb < 0.0 {
            a = b;
            fa = fb;
        } else {
            fa *= 0.5;
        }
        b = c;
        fb = fc;
        sigma = c;
        if fc.abs() <= tol {
            break;
        }
    }
    let (y, xi) = probe.point(sigma)?;
    let (value, vector, hessian_norm) = probe.eigen_at(&y, xi)?;
    if value.abs() > 1e3 * tol {
        return Err(fail(a, b, "root search did not reach the eigenvalue tolerance"));
    }

    let delta = 1e-5 * step;
    let slope_s = (probe.value(sigma + delta)? - probe.value(sigma - delta)?) / (2.0 * delta);
    let tangent = probe.engine.tangent(&y, xi, &probe.base.tangent)?;
    let dxi_ds = tangent[tangent.len() - 1];

    let path = probe.engine.path(&y, xi);
    let label = probe.sector.irrep();
    let phi = TangentField::from_coords(path.period(), path.n_modes(), vector)?;
    let mut fields = vec![phi.clone()];
    if label.d() == 2 {
        fields.push(partner_field(&phi, label).expect("two-dimensional label"));
    }
    let class = classify_in(&fields, group)?;
    if class.label != label {
        return Err(Error::Classification(format!(
            "sector {} eigenspace classified as {}",
            probe.sector, class.label
        )));
    }
    Ok(BifurcationEvent {
        family: probe.engine.family,
        xi0: xi,
        label,
        sector: probe.sector,
        patterns: bifurcation_pattern(label),
        eigenvalue: value,
        kappa_slope: slope_s / dxi_ds,
        kappa_arc_slope: slope_s,
        index: probe.index,
        hessian_norm,
        path,
        fields: class.basis,
        morse_change: 0,
    })
}

/// Rebuild the event of `label` at a known crossing from a stored loop.
///
/// The loop is re-converged at `xi0` and the sector eigenvalue closest to zero
/// is taken as the critical one. The slope comes from the caller (for
/// instance an events file), since it needs the branch tangent.
pub fn event_at(family: Family, xi0: f64, path: &LoopPath, label: IrrepLabel, kappa_slope: f64) -> Result<BifurcationEvent> {
    let group = label.group();
    let engine = Engine::new(family, path.n_modes(), &ContinuationConfig::default());
    let path = engine.solve_at(&path.with_period(family.period(xi0)), xi0)?;
    let pot = family.potential(xi0)?;
    let h = hessian(&path, &pot)?;
    let sectors = SectorSet::new(group, path.n_modes());
    let (sector, basis) = sectors
        .sectors
        .iter()
        .find(|(s, _)| s.irrep() == label)
        .ok_or_else(|| Error::Classification(format!("no tracked sector carries {label}")))?;
    let spec = sector_spectrum(h.matrix(), &path, *sector, basis)?;
    let index = (0..spec.values.len())
        .min_by(|&a, &b| spec.values[a].abs().total_cmp(&spec.values[b].abs()))
        .ok_or_else(|| Error::Eigen(format!("sector {sector} is empty")))?;
    let phi = TangentField::from_coords(path.period(), path.n_modes(), spec.vectors.column(index).into_owned())?;
    let mut fields = vec![phi.clone()];
    if label.d() == 2 {
        fields.push(partner_field(&phi, label).expect("two-dimensional label"));
    }
    let class = classify_in(&fields, group)?;
    if class.label != label {
        return Err(Error::Classification(format!("sector {sector} eigenspace classified as {}", class.label)));
    }
    Ok(BifurcationEvent {
        family,
        xi0,
        label,
        sector: *sector,
        patterns: bifurcation_pattern(label),
        eigenvalue: spec.values[index],
        kappa_slope,
        kappa_arc_slope: f64::NAN,
        index,
        hessian_norm: h.spectral_norm(),
        path,
        fields: class.basis,
        morse_change: 0,
    })
}
