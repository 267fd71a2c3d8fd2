//! Pseudo-arclength continuation of stationary loops in a potential parameter.
//!
//! The homogeneous family is continued in the exponent `a` at fixed period;
//! the Lennard-Jones family in the period `T`. Unknowns are amplitude-scaled
//! coordinates `u = x/√T` restricted to a projector subspace, so a change of
//! period leaves the raw Fourier amplitudes of a fixed `u` unchanged.

use nalgebra::{DMatrix, DVector};

use crate::action::{action, gradient, hessian, Potential};
use crate::error::{Error, Result};
use crate::loop_space::{LoopPath, Series};
use crate::solver::{bordered_solve, Frame};
use crate::spectrum::{sector_spectrum, SectorSet, SectorSpectrum};
use crate::symmetry::{IrrepLabel, Projector, Sector, SymmetryGroup};

/// Smallest magnitude used for the homogeneous exponent; the potential carries `1/a`.
pub const EXPONENT_FLOOR: f64 = 1e-9;

/// One-parameter potential family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `U_h` with exponent `a` as parameter at fixed period.
    Homogeneous { period: f64 },
    /// Lennard-Jones with the period as parameter.
    LennardJones,
}

impl Family {
    pub fn param_name(&self) -> &'static str {
        match self {
            Family::Homogeneous { .. } => "a",
            Family::LennardJones => "T",
        }
    }

    /// Potential at parameter `xi`. An exponent within `EXPONENT_FLOOR` of
    /// zero is moved to the floor; only `a = 0` itself is undefined and all
    /// derivatives are continuous through it.
    pub fn potential(&self, xi: f64) -> Result<Potential> {
        match self {
            Family::Homogeneous { .. } => {
                let a = if xi.abs() < EXPONENT_FLOOR {
                    EXPONENT_FLOOR.copysign(if xi == 0.0 { 1.0 } else { xi })
                } else {
                    xi
                };
                Potential::homogeneous(a)
            }
            Family::LennardJones => Ok(Potential::LennardJones),
        }
    }

    pub fn period(&self, xi: f64) -> f64 {
        match *self {
            Family::Homogeneous { period } => period,
            Family::LennardJones => xi,
        }
    }

    /// Loop with scaled coordinates `u` at parameter `xi`.
    pub fn path(&self, xi: f64, n_modes: usize, u: &DVector<f64>) -> LoopPath {
        let t = self.period(xi);
        LoopPath::from_coords(t, n_modes, u * t.sqrt()).expect("consistent shape")
    }

    /// Scaled coordinates of a loop.
    pub fn scaled(&self, path: &LoopPath) -> DVector<f64> {
        path.coords() / path.period().sqrt()
    }

    pub fn validate(&self, xi: f64) -> Result<()> {
        match self {
            Family::Homogeneous { period } if !(*period > 0.0) => {
                Err(Error::InvalidConfig(format!("period must be positive, got {period}")))
            }
            Family::Homogeneous { .. } if xi <= -2.0 => {
                Err(Error::InvalidPotential(format!("exponent a must exceed -2, got {xi}")))
            }
            Family::LennardJones if !(xi > 0.0) => {
                Err(Error::InvalidConfig(format!("period must be positive, got {xi}")))
            }
            _ => Ok(()),
        }
    }
}

/// Step policy and stopping rules.
#[derive(Debug, Clone)]
pub struct ContinuationConfig {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub tolerance: f64,
    pub max_corrector_iterations: usize,
    pub max_points: usize,
    /// Subspace the branch lives in.
    pub projector: Option<Projector>,
    /// Group whose sectors are tracked; `None` skips spectra.
    pub watch: Option<SymmetryGroup>,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            initial_step: 1e-2,
            min_step: 1e-5,
            max_step: 1e-1,
            tolerance: 1e-10,
            max_corrector_iterations: 8,
            max_points: 2000,
            projector: Some(Projector::PD6),
            watch: Some(SymmetryGroup::D6),
        }
    }
}

impl ContinuationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_step > 0.0 && self.min_step <= self.initial_step && self.initial_step <= self.max_step) {
            return Err(Error::InvalidConfig("step bounds must satisfy 0 < min ≤ initial ≤ max".into()));
        }
        if !(self.tolerance > 0.0) || self.max_corrector_iterations == 0 || self.max_points < 1 {
            return Err(Error::InvalidConfig("tolerance and iteration limits must be positive".into()));
        }
        Ok(())
    }
}

/// Tracked spectral data of one sector at a branch point.
#[derive(Debug, Clone)]
pub struct SectorSummary {
    pub sector: Sector,
    pub negatives: usize,
    /// Nontrivial eigenvalue closest to zero.
    pub kappa: f64,
}

/// Accepted point of a branch.
#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub param: f64,
    pub path: LoopPath,
    pub action: f64,
    pub morse_index: Option<usize>,
    pub sectors: Vec<SectorSummary>,
    /// Set when the parameter direction reversed since the previous point.
    pub fold: bool,
    pub arclength: f64,
    /// Unit tangent in `(u_sub, ξ)`.
    pub(crate) tangent: DVector<f64>,
    /// Scaled coordinates in the branch subspace.
    pub(crate) state: DVector<f64>,
    /// Arclength step to the next point.
    pub(crate) step: f64,
}

impl BranchPoint {
    pub fn kappa(&self, label: IrrepLabel) -> Option<f64> {
        self.sectors.iter().find(|s| s.sector.irrep() == label).map(|s| s.kappa)
    }
}

/// Why continuation stopped.
#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    LeftRange,
    MaxPoints,
    StepCollapse { param: f64, min_step: f64 },
}

/// A continued solution family.
#[derive(Debug, Clone)]
pub struct Branch {
    pub family: Family,
    pub n_modes: usize,
    pub config: ContinuationConfig,
    pub points: Vec<BranchPoint>,
    pub termination: Termination,
}

impl Branch {
    pub fn param_name(&self) -> &'static str {
        self.family.param_name()
    }

    pub fn params(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.param).collect()
    }

    pub fn folds(&self) -> Vec<&BranchPoint> {
        self.points.iter().filter(|p| p.fold).collect()
    }

    pub(crate) fn engine(&self) -> Engine {
        Engine::new(self.family, self.n_modes, &self.config)
    }
}

/// Continuation machinery shared by branch following, crossing location and tracing.
pub(crate) struct Engine {
    pub family: Family,
    pub n_modes: usize,
    pub frame: Frame,
    pub sectors: Option<SectorSet>,
    pub tolerance: f64,
    pub max_iterations: usize,
}

/// Linearisation at a state.
pub(crate) struct Linearization {
    pub residual: DVector<f64>,
    pub ju: DMatrix<f64>,
    pub jxi: DVector<f64>,
    pub border: DMatrix<f64>,
}

impl Engine {
    pub fn new(family: Family, n_modes: usize, cfg: &ContinuationConfig) -> Self {
        Engine {
            family,
            n_modes,
            frame: Frame::new(n_modes, cfg.projector),
            sectors: cfg.watch.map(|g| SectorSet::new(g, n_modes)),
            tolerance: cfg.tolerance,
            max_iterations: cfg.max_corrector_iterations,
        }
    }

    pub fn dim(&self) -> usize {
        self.frame.basis.rank()
    }

    pub fn path(&self, y: &DVector<f64>, xi: f64) -> LoopPath {
        self.family.path(xi, self.n_modes, &self.frame.basis.lift(y))
    }

    pub fn state_of(&self, path: &LoopPath) -> DVector<f64> {
        self.frame.basis.restrict(&self.family.scaled(path))
    }

    pub fn residual(&self, y: &DVector<f64>, xi: f64) -> Result<DVector<f64>> {
        let pot = self.family.potential(xi)?;
        let g = gradient(&self.path(y, xi), &pot)?;
        Ok(self.frame.basis.restrict(g.coords()))
    }

    pub fn linearize(&self, y: &DVector<f64>, xi: f64) -> Result<Linearization> {
        let q = self.path(y, xi);
        let pot = self.family.potential(xi)?;
        let residual = self.frame.basis.restrict(gradient(&q, &pot)?.coords());
        let ju = self.frame.basis.compress(hessian(&q, &pot)?.matrix()) * q.period().sqrt();
        let h = 1e-6 * xi.abs().max(1.0);
        let rp = self.residual(y, xi + h)?;
        let rm = self.residual(y, xi - h)?;
        let jxi = (rp - rm) / (2.0 * h);
        let border = self.frame.trivial_border(&q)?;
        Ok(Linearization {
            residual,
            ju,
            jxi,
            border,
        })
    }

    /// Solve `F(y, ξ) = 0` together with `nᵀ(y, ξ) = c`, starting from `(y, ξ)`.
    pub fn correct(&self, mut y: DVector<f64>, mut xi: f64, normal: &DVector<f64>, target: f64) -> Result<(DVector<f64>, f64, usize)> {
        let k = self.dim();
        for it in 0..=self.max_iterations {
            let lin = self.linearize(&y, xi)?;
            let constraint = normal.rows(0, k).dot(&y) + normal[k] * xi - target;
            if lin.residual.norm() <= self.tolerance && constraint.abs() <= 1e-12 * (1.0 + target.abs()) {
                return Ok((y, xi, it));
            }
            if it == self.max_iterations {
                return Err(Error::NoConvergence {
                    iterations: it,
                    residual: lin.residual.norm(),
                });
            }
            let (dy, dxi) = self.augmented_step(&lin, normal, -constraint)?;
            y += dy;
            xi += dxi;
            if self.family.validate(xi).is_err() {
                return Err(Error::NoConvergence {
                    iterations: it + 1,
                    residual: f64::INFINITY,
                });
            }
        }
        unreachable!()
    }

    /// Newton step for `[J_u J_ξ Z; nᵀ 0; Zᵀ 0 0]`.
    pub fn augmented_step(&self, lin: &Linearization, normal: &DVector<f64>, rhs_constraint: f64) -> Result<(DVector<f64>, f64)> {
        let k = self.dim();
        let r = lin.border.ncols();
        let size = k + 1 + r;
        let mut m = DMatrix::zeros(size, size);
        m.view_mut((0, 0), (k, k)).copy_from(&lin.ju);
        m.view_mut((0, k), (k, 1)).copy_from(&lin.jxi);
        if r > 0 {
            m.view_mut((0, k + 1), (k, r)).copy_from(&lin.border);
            m.view_mut((k + 1, 0), (r, k)).copy_from(&lin.border.transpose());
        }
        for j in 0..=k {
            m[(k, j)] = normal[j];
        }
        let mut rhs = DVector::zeros(size);
        rhs.rows_mut(0, k).copy_from(&(-&lin.residual));
        rhs[k] = rhs_constraint;
        let sol = m
            .lu()
            .solve(&rhs)
            .filter(|s| s.iter().all(|x| x.is_finite()))
            .ok_or_else(|| Error::Singular("augmented continuation matrix".into()))?;
        Ok((sol.rows(0, k).into_owned(), sol[k]))
    }

    /// Unit tangent oriented along `prev`.
    pub fn tangent(&self, y: &DVector<f64>, xi: f64, prev: &DVector<f64>) -> Result<DVector<f64>> {
        let lin = self.linearize(y, xi)?;
        let lin = Linearization {
            residual: DVector::zeros(lin.residual.len()),
            ..lin
        };
        let (dy, dxi) = self.augmented_step(&lin, prev, 1.0)?;
        let mut t = DVector::zeros(dy.len() + 1);
        t.rows_mut(0, dy.len()).copy_from(&dy);
        t[dy.len()] = dxi;
        let n = t.norm();
        Ok(t / n)
    }

    /// Tangent at a point with the parameter increasing (`direction > 0`) or decreasing.
    pub fn initial_tangent(&self, y: &DVector<f64>, xi: f64, direction: f64) -> Result<DVector<f64>> {
        let lin = self.linearize(y, xi)?;
        let dy = bordered_solve(&lin.ju, &lin.border, &(-&lin.jxi))?;
        let mut t = DVector::zeros(dy.len() + 1);
        t.rows_mut(0, dy.len()).copy_from(&dy);
        t[dy.len()] = 1.0;
        let scale = if direction >= 0.0 { 1.0 } else { -1.0 } / t.norm();
        Ok(t * scale)
    }

    /// Deflated spectra of every tracked sector.
    pub fn sector_spectra(&self, path: &LoopPath, pot: &Potential) -> Result<Vec<SectorSpectrum>> {
        let Some(set) = &self.sectors else {
            return Ok(Vec::new());
        };
        let h = hessian(path, pot)?;
        set.sectors
            .iter()
            .map(|(s, b)| sector_spectrum(h.matrix(), path, *s, b))
            .collect()
    }

    pub fn summarize(&self, path: &LoopPath, pot: &Potential) -> Result<(Vec<SectorSummary>, Option<usize>)> {
        if self.sectors.is_none() {
            return Ok((Vec::new(), None));
        }
        let spectra = self.sector_spectra(path, pot)?;
        let mut morse = 0;
        let summaries = spectra
            .iter()
            .map(|s| {
                morse += s.negatives() * s.sector.irrep().d();
                SectorSummary {
                    sector: s.sector,
                    negatives: s.negatives(),
                    kappa: s.kappa(),
                }
            })
            .collect();
        Ok((summaries, Some(morse)))
    }

    pub fn make_point(&self, y: DVector<f64>, xi: f64, tangent: DVector<f64>, arclength: f64, fold: bool) -> Result<BranchPoint> {
        let path = self.path(&y, xi);
        let pot = self.family.potential(xi)?;
        let (sectors, morse_index) = self.summarize(&path, &pot)?;
        Ok(BranchPoint {
            param: xi,
            action: action(&path, &pot)?,
            path,
            morse_index,
            sectors,
            fold,
            arclength,
            tangent,
            state: y,
            step: 0.0,
        })
    }

    /// Solution at a fixed parameter value near `seed`.
    pub fn solve_at(&self, seed: &LoopPath, xi: f64) -> Result<LoopPath> {
        let k = self.dim();
        let mut normal = DVector::zeros(k + 1);
        normal[k] = 1.0;
        let y0 = self.state_of(seed);
        let (y, xi, _) = self.correct(y0, xi, &normal, xi)?;
        Ok(self.path(&y, xi))
    }
}

fn concat(y: &DVector<f64>, xi: f64) -> DVector<f64> {
    let mut z = DVector::zeros(y.len() + 1);
    z.rows_mut(0, y.len()).copy_from(y);
    z[y.len()] = xi;
    z
}

/// Follow the solution through `seed` at parameter `start` inside `range`,
/// initially moving in the direction of `direction`'s sign.
pub fn continue_branch(
    seed: &LoopPath,
    family: Family,
    start: f64,
    range: (f64, f64),
    direction: f64,
    cfg: &ContinuationConfig,
) -> Result<Branch> {
    cfg.validate()?;
    let (lo, hi) = (range.0.min(range.1), range.0.max(range.1));
    if !(hi > lo) {
        return Err(Error::InvalidConfig(format!("empty parameter range [{}, {}]", range.0, range.1)));
    }
    family.validate(lo)?;
    family.validate(start)?;
    let engine = Engine::new(family, seed.n_modes(), cfg);
    let k = engine.dim();

    // Converge the seed at the start value.
    let y0 = engine.state_of(seed);
    let mut normal = DVector::zeros(k + 1);
    normal[k] = 1.0;
    let (y0, xi0, _) = engine.correct(y0, start, &normal, start)?;
    let t0 = engine.initial_tangent(&y0, xi0, direction)?;
    let mut points = vec![engine.make_point(y0, xi0, t0, 0.0, false)?];
    let mut step = cfg.initial_step;
    let termination = loop {
        if points.len() >= cfg.max_points {
            break Termination::MaxPoints;
        }
        let last = points.last().expect("nonempty");
        let z = concat(&last.state, last.param);
        let pred = &z + &last.tangent * step;
        let target = last.tangent.dot(&pred);
        let attempt = engine
            .correct(pred.rows(0, k).into_owned(), pred[k], &last.tangent, target)
            .and_then(|(y, xi, its)| {
                let moved = (concat(&y, xi) - &z).norm();
                if moved > 2.0 * step {
                    return Err(Error::NoConvergence {
                        iterations: its,
                        residual: moved,
                    });
                }
                let t = engine.tangent(&y, xi, &last.tangent)?;
                Ok((y, xi, t, its))
            });
        match attempt {
            Ok((y, xi, t, its)) => {
                if xi < lo || xi > hi {
                    break Termination::LeftRange;
                }
                let fold = t[k].signum() != last.tangent[k].signum();
                let arclength = last.arclength + step;
                let point = engine.make_point(y, xi, t, arclength, fold)?;
                points.last_mut().expect("nonempty").step = step;
                points.push(point);
                if its <= 3 {
                    step = (step * 1.5).min(cfg.max_step);
                }
            }
            Err(Error::Collision { .. }) | Err(Error::NoConvergence { .. }) | Err(Error::Singular(_)) => {
                step *= 0.5;
                if step < cfg.min_step {
                    let param = points.last().expect("nonempty").param;
                    if points.len() < 2 {
                        return Err(Error::StepCollapse {
                            param,
                            min_step: cfg.min_step,
                        });
                    }
                    break Termination::StepCollapse {
                        param,
                        min_step: cfg.min_step,
                    };
                }
            }
            Err(e) => return Err(e),
        }
    };
    Ok(Branch {
        family,
        n_modes: seed.n_modes(),
        config: cfg.clone(),
        points,
        termination,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{seed_figure_eight, solve, SolveConfig};

    #[test]
    fn exponent_is_nudged_off_zero() {
        let fam = Family::Homogeneous { period: 1.0 };
        assert_eq!(fam.potential(0.0).unwrap().exponent(), Some(EXPONENT_FLOOR));
        assert_eq!(fam.potential(-1e-12).unwrap().exponent(), Some(-EXPONENT_FLOOR));
        assert_eq!(fam.potential(0.3).unwrap().exponent(), Some(0.3));
    }

    #[test]
    fn scaled_coordinates_keep_amplitudes() {
        let q = seed_figure_eight(8).with_period(2.0);
        let fam = Family::LennardJones;
        let u = fam.scaled(&q);
        let back = fam.path(3.0, 8, &u);
        assert!((back.sin_coeff(0, crate::loop_space::Axis::X, 1) - q.sin_coeff(0, crate::loop_space::Axis::X, 1)).abs() < 1e-14);
    }

    #[test]
    fn short_branch_is_smooth() {
        let pot = Potential::homogeneous(1.0).unwrap();
        let q = solve(&seed_figure_eight(12), &pot, &SolveConfig::default().with_projector(Projector::PD6))
            .unwrap()
            .path;
        let cfg = ContinuationConfig {
            max_points: 4,
            ..ContinuationConfig::default()
        };
        let b = continue_branch(&q, Family::Homogeneous { period: 1.0 }, 1.0, (0.9, 1.1), 1.0, &cfg).unwrap();
        assert_eq!(b.points.len(), 4);
        for w in b.points.windows(2) {
            assert!(w[1].param > w[0].param);
            assert!(!w[1].fold);
        }
        assert!(b.points.iter().all(|p| p.morse_index.is_some()));
    }

    #[test]
    fn empty_range_is_rejected() {
        let q = seed_figure_eight(8);
        let r = continue_branch(&q, Family::Homogeneous { period: 1.0 }, 1.0, (1.0, 1.0), 1.0, &ContinuationConfig::default());
        assert!(matches!(r, Err(Error::InvalidConfig(_))));
    }
}
