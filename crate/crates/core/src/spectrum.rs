//! Classified Hessian spectra and the Morse index.
//!
//! At a symmetric loop the Hessian commutes with the group, so it is block
//! diagonal over the joint eigenspaces ("sectors") of `P_C`, `M` and `S`.
//! Each block is diagonalised separately and its eigenvectors inherit the
//! sector's representation label. The two sectors of a two-dimensional
//! representation carry identical spectra; only the `S = +1` half is
//! diagonalised and the partner `φ₋` is generated by `B`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::action::{hessian, HessianMatrix, Potential};
use crate::error::{Error, Result};
use crate::loop_space::{orthonormal_span, trivial_modes, LoopPath, Series, TangentField};
use crate::symmetry::{detect_group, partner_field, IrrepLabel, Sector, SparseBasis, SymmetryGroup};

/// One eigenspace of the Hessian.
#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: f64,
    /// Orthonormal basis of the eigenspace (`[φ₊, φ₋]` for two-dimensional representations).
    pub fields: Vec<TangentField>,
    pub label: Option<IrrepLabel>,
    pub trivial: bool,
}

impl Eigenpair {
    pub fn multiplicity(&self) -> usize {
        self.fields.len()
    }
}

/// Hessian eigenpairs with representation labels and trivial flags.
#[derive(Debug, Clone)]
pub struct ClassifiedSpectrum {
    /// Eigenspaces in ascending eigenvalue order.
    pub pairs: Vec<Eigenpair>,
    pub group: Option<SymmetryGroup>,
    pub reference: LoopPath,
    pub potential: Potential,
    /// Largest absolute eigenvalue.
    pub hessian_norm: f64,
}

impl ClassifiedSpectrum {
    pub fn trivial(&self) -> impl Iterator<Item = &Eigenpair> {
        self.pairs.iter().filter(|p| p.trivial)
    }

    pub fn nontrivial(&self) -> impl Iterator<Item = &Eigenpair> {
        self.pairs.iter().filter(|p| !p.trivial)
    }

    /// Nontrivial eigenspaces carrying `label`, ascending.
    pub fn with_label(&self, label: IrrepLabel) -> Vec<&Eigenpair> {
        self.nontrivial().filter(|p| p.label == Some(label)).collect()
    }

    /// Nontrivial eigenspace of `label` closest to zero.
    pub fn closest_to_zero(&self, label: IrrepLabel) -> Option<&Eigenpair> {
        self.with_label(label)
            .into_iter()
            .min_by(|a, b| a.value.abs().total_cmp(&b.value.abs()))
    }

    /// Eigenvalues counted with multiplicity, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .pairs
            .iter()
            .flat_map(|p| std::iter::repeat_n(p.value, p.multiplicity()))
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// Number of negative nontrivial eigenvalues, with multiplicity.
pub fn morse_index(spec: &ClassifiedSpectrum) -> usize {
    spec.nontrivial()
        .filter(|p| p.value < 0.0)
        .map(|p| p.multiplicity())
        .sum()
}

/// Sectors whose spectra are diagonalised: every one-dimensional sector and
/// the `S = +1` half of each two-dimensional representation.
pub fn watched_sectors(group: SymmetryGroup) -> Vec<Sector> {
    Sector::all(group)
        .into_iter()
        .filter(|s| s.pc != Some(0) || s.s > 0)
        .collect()
}

/// Sector bases for a truncation, built once and reused along a branch.
#[derive(Debug, Clone)]
pub struct SectorSet {
    pub group: SymmetryGroup,
    pub sectors: Vec<(Sector, SparseBasis)>,
}

impl SectorSet {
    pub fn new(group: SymmetryGroup, n_modes: usize) -> Self {
        let sectors = watched_sectors(group)
            .into_iter()
            .map(|s| {
                let b = s.basis(n_modes);
                (s, b)
            })
            .collect();
        SectorSet { group, sectors }
    }

    pub fn get(&self, sector: Sector) -> Option<&SparseBasis> {
        self.sectors.iter().find(|(s, _)| *s == sector).map(|(_, b)| b)
    }
}

/// Spectrum of one sector block with the trivial directions deflated.
#[derive(Debug, Clone)]
pub struct SectorSpectrum {
    pub sector: Sector,
    /// Ascending nontrivial eigenvalues.
    pub values: DVector<f64>,
    /// Matching eigenvectors in full loop-space coordinates (columns).
    pub vectors: DMatrix<f64>,
    /// Number of trivial directions removed.
    pub deflated: usize,
}

impl SectorSpectrum {
    pub fn negatives(&self) -> usize {
        self.values.iter().filter(|v| **v < 0.0).count()
    }

    /// Eigenvalue of smallest magnitude.
    pub fn kappa(&self) -> f64 {
        self.values.iter().copied().min_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap_or(f64::NAN)
    }
}

/// Sector block of `h` with trivial directions of `path` removed.
pub fn sector_spectrum(h: &DMatrix<f64>, path: &LoopPath, sector: Sector, basis: &SparseBasis) -> Result<SectorSpectrum> {
    let trivial: Vec<DVector<f64>> = trivial_modes(path)?.iter().map(|t| t.coords().clone()).collect();
    let block = deflated_block(h, basis, &trivial);
    Ok(SectorSpectrum {
        sector,
        values: block.values,
        vectors: block.vectors,
        deflated: block.trivial.ncols(),
    })
}

struct Block {
    values: DVector<f64>,
    /// Nontrivial eigenvectors, lifted to loop space.
    vectors: DMatrix<f64>,
    /// Orthonormal trivial directions inside the block, lifted.
    trivial: DMatrix<f64>,
}

/// Diagonalise the block of `h` on `basis` after removing the trivial
/// directions that lie in it. Trivial modes are pure in one sector, so each
/// one either restricts with unit norm or vanishes.
fn deflated_block(h: &DMatrix<f64>, basis: &SparseBasis, trivial: &[DVector<f64>]) -> Block {
    let hs = basis.compress(h);
    let k = hs.nrows();
    let inside: Vec<DVector<f64>> = trivial.iter().map(|t| basis.restrict(t)).filter(|v| v.norm() > 0.5).collect();
    let r = inside.len();
    if r == 0 {
        let (values, vectors) = sorted_eigen(hs);
        return Block {
            values,
            vectors: basis.lift_matrix(&vectors),
            trivial: DMatrix::zeros(h.nrows(), 0),
        };
    }
    let mut cols = inside;
    cols.extend((0..k).map(|i| {
        let mut e = DVector::zeros(k);
        e[i] = 1.0;
        e
    }));
    let full = orthonormal_span(&cols, 1e-8);
    let w = full.columns(r, full.ncols() - r).into_owned();
    let (values, vecs) = sorted_eigen(w.transpose() * &hs * &w);
    Block {
        values,
        vectors: basis.lift_matrix(&(w * vecs)),
        trivial: basis.lift_matrix(&full.columns(0, r).into_owned()),
    }
}

/// Symmetric eigendecomposition sorted ascending, with deterministic signs.
pub(crate) fn sorted_eigen(m: DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(eig.eigenvectors.nrows(), order.len());
    for (j, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        if v[v.iamax()] < 0.0 {
            v = -v;
        }
        vectors.set_column(j, &v);
    }
    (values, vectors)
}

/// Full classified spectrum of the Hessian at a stationary loop.
pub fn spectrum(path: &LoopPath, pot: &Potential) -> Result<ClassifiedSpectrum> {
    let h = hessian(path, pot)?;
    spectrum_with(path, pot, &h)
}

pub(crate) fn spectrum_with(path: &LoopPath, pot: &Potential, h: &HessianMatrix) -> Result<ClassifiedSpectrum> {
    let (period, n) = (path.period(), path.n_modes());
    let wrap = |v: DVector<f64>| TangentField::from_coords(period, n, v).expect("same shape");

    if matches!(pot, Potential::Free) {
        let (vals, vecs) = sorted_eigen(h.matrix().clone());
        let pairs = (0..vals.len())
            .map(|j| Eigenpair {
                value: vals[j],
                fields: vec![wrap(vecs.column(j).into_owned())],
                label: None,
                trivial: false,
            })
            .collect();
        return Ok(ClassifiedSpectrum {
            pairs,
            group: None,
            reference: path.clone(),
            potential: *pot,
            hessian_norm: vals.amax(),
        });
    }

    let trivial: Vec<DVector<f64>> = trivial_modes(path)?.iter().map(|t| t.coords().clone()).collect();
    let group = detect_group(path, 1e-6);
    let mut pairs = Vec::new();
    let mut norm: f64 = 0.0;
    match group {
        Some(g) => {
            let sectors = SectorSet::new(g, n);
            let blocks: Vec<(Sector, Block)> = sectors
                .sectors
                .par_iter()
                .map(|(s, b)| (*s, deflated_block(h.matrix(), b, &trivial)))
                .collect();
            for (sector, block) in blocks {
                let label = sector.irrep();
                let fields_of = |v: DVector<f64>| {
                    let phi = wrap(v);
                    if label.d() == 2 {
                        let partner = partner_field(&phi, label).expect("two-dimensional label");
                        vec![phi, partner]
                    } else {
                        vec![phi]
                    }
                };
                for j in 0..block.trivial.ncols() {
                    let t = block.trivial.column(j).into_owned();
                    let value = t.dot(&(h.matrix() * &t));
                    pairs.push(Eigenpair {
                        value,
                        fields: fields_of(t),
                        label: Some(label),
                        trivial: true,
                    });
                }
                for j in 0..block.values.len() {
                    norm = norm.max(block.values[j].abs());
                    pairs.push(Eigenpair {
                        value: block.values[j],
                        fields: fields_of(block.vectors.column(j).into_owned()),
                        label: Some(label),
                        trivial: false,
                    });
                }
            }
        }
        None => {
            let all = SparseBasis::identity(n);
            let block = deflated_block(h.matrix(), &all, &trivial);
            for j in 0..block.trivial.ncols() {
                let t = block.trivial.column(j).into_owned();
                pairs.push(Eigenpair {
                    value: t.dot(&(h.matrix() * &t)),
                    fields: vec![wrap(t)],
                    label: None,
                    trivial: true,
                });
            }
            for j in 0..block.values.len() {
                norm = norm.max(block.values[j].abs());
                pairs.push(Eigenpair {
                    value: block.values[j],
                    fields: vec![wrap(block.vectors.column(j).into_owned())],
                    label: None,
                    trivial: false,
                });
            }
        }
    }
    pairs.sort_by(|a, b| a.value.total_cmp(&b.value));
    let found: usize = pairs.iter().filter(|p| p.trivial).map(|p| p.multiplicity()).sum();
    if found != 4 {
        return Err(Error::TrivialModes { found });
    }
    Ok(ClassifiedSpectrum {
        pairs,
        group,
        reference: path.clone(),
        potential: *pot,
        hessian_norm: norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loop_space::{Axis, LoopPath};

    #[test]
    fn free_particle_spectrum() {
        let n = 4;
        let mut q = LoopPath::zeros(2.0, n);
        q.set_sin(0, Axis::X, 1, 1.0);
        let spec = spectrum(&q, &Potential::Free).unwrap();
        let vals = spec.eigenvalues();
        let w = std::f64::consts::PI;
        for m in 0..=n {
            let target = (m as f64 * w).powi(2);
            let count = vals.iter().filter(|v| (*v - target).abs() <= 1e-12 * target.max(1.0)).count();
            assert_eq!(count, if m == 0 { 6 } else { 12 });
        }
        assert!(spec.pairs.iter().all(|p| p.label.is_none()));
    }

    #[test]
    fn morse_counts_multiplicity() {
        let q = LoopPath::zeros(1.0, 1);
        let f = TangentField::zeros(1.0, 1);
        let pair = |value, d: usize, trivial| Eigenpair {
            value,
            fields: vec![f.clone(); d],
            label: None,
            trivial,
        };
        let spec = ClassifiedSpectrum {
            pairs: vec![pair(-2.0, 2, false), pair(-1.0, 1, true), pair(-0.5, 1, false), pair(3.0, 1, false)],
            group: None,
            reference: q,
            potential: Potential::Free,
            hessian_norm: 3.0,
        };
        assert_eq!(morse_index(&spec), 3);
    }
}
