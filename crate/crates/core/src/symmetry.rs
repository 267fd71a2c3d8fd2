//! The dihedral group generated by `B = σ μ_x R^{1/6}` and `S = −τ Θ`
//! acting on loop space, its subgroup averages, and the classification of
//! Hessian eigenspaces by irreducible representation.
//!
//! Notation: `σ(r0, r1, r2) = (r1, r2, r0)`, `τ(r0, r1, r2) = (r0, r2, r1)`,
//! `μ_x` flips x, `R^s q(t) = q(t + sT)`, `Θ q(t) = q(−t)`.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::loop_space::{
    channel_len, cos_slot, dimension, orthonormal_span, sin_slot, LoopPath, Series, TangentField, BODIES,
    CHANNELS,
};

/// Element `S^s B^k` of the group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    s: bool,
    k: u8,
}

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement { s: false, k: 0 };
    pub const B: GroupElement = GroupElement { s: false, k: 1 };
    pub const S: GroupElement = GroupElement { s: true, k: 0 };
    /// Choreographic shift `B²`.
    pub const C: GroupElement = GroupElement { s: false, k: 2 };
    /// Central element `B³`.
    pub const M: GroupElement = GroupElement { s: false, k: 3 };
    /// `M S = S B³`.
    pub const MS: GroupElement = GroupElement { s: true, k: 3 };

    pub fn new(s: bool, k: u8) -> Self {
        GroupElement { s, k: k % 6 }
    }

    pub fn has_s(&self) -> bool {
        self.s
    }

    pub fn b_power(&self) -> u8 {
        self.k
    }

    /// The twelve elements, rotations first.
    pub fn all() -> [GroupElement; 12] {
        std::array::from_fn(|i| GroupElement::new(i >= 6, (i % 6) as u8))
    }

    /// `self ∘ other` (apply `other` first).
    pub fn compose(self, other: GroupElement) -> GroupElement {
        // B^k S = S B^{-k}
        let k1 = if other.s { (6 - self.k) % 6 } else { self.k };
        GroupElement::new(self.s ^ other.s, k1 + other.k)
    }

    pub fn inverse(self) -> GroupElement {
        if self.s {
            self
        } else {
            GroupElement::new(false, (6 - self.k) % 6)
        }
    }

    pub fn pow(self, n: u32) -> GroupElement {
        (0..n).fold(GroupElement::IDENTITY, |acc, _| acc.compose(self))
    }

    /// Look up an element by name: `1`, `B`, `B^k`, `S`, `SB^k`, `C`, `M`, `MS`.
    pub fn parse(name: &str) -> Option<GroupElement> {
        let name = name.trim();
        match name {
            "1" | "E" | "identity" => return Some(GroupElement::IDENTITY),
            "C" => return Some(GroupElement::C),
            "C2" | "C^2" => return Some(GroupElement::new(false, 4)),
            "M" => return Some(GroupElement::M),
            "MS" => return Some(GroupElement::MS),
            _ => {}
        }
        let (s, rest) = match name.strip_prefix('S') {
            Some(r) => (true, r),
            None => (false, name),
        };
        if rest.is_empty() {
            return s.then_some(GroupElement::S);
        }
        let rest = rest.strip_prefix('B')?;
        let k = if rest.is_empty() {
            1
        } else {
            rest.strip_prefix('^')?.parse::<u8>().ok()?
        };
        (k < 6).then(|| GroupElement::new(s, k))
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.s, self.k) {
            (false, 0) => write!(f, "1"),
            (true, 0) => write!(f, "S"),
            (s, 1) => write!(f, "{}B", if s { "S" } else { "" }),
            (s, k) => write!(f, "{}B^{k}", if s { "S" } else { "" }),
        }
    }
}

/// `B` on orthonormal coordinates: `(Bq)_k(t) = μ_x q_{k+1}(t + T/6)`.
fn apply_b(n_modes: usize, x: &DVector<f64>) -> DVector<f64> {
    let len = channel_len(n_modes);
    let mut out = DVector::zeros(x.len());
    for body in 0..BODIES {
        let src = (body + 1) % BODIES;
        for c in 0..2 {
            let sign = if c == 0 { -1.0 } else { 1.0 };
            let (to, from) = ((2 * body + c) * len, (2 * src + c) * len);
            out[to] = sign * x[from];
            for m in 1..=n_modes {
                let (sn, cs) = (2.0 * PI * m as f64 / 6.0).sin_cos();
                let (a, b) = (x[from + cos_slot(m)], x[from + sin_slot(m)]);
                out[to + cos_slot(m)] = sign * (a * cs + b * sn);
                out[to + sin_slot(m)] = sign * (-a * sn + b * cs);
            }
        }
    }
    out
}

/// `S` on orthonormal coordinates: `(Sq)_k(t) = −q_{τ(k)}(−t)`.
fn apply_s(n_modes: usize, x: &DVector<f64>) -> DVector<f64> {
    let len = channel_len(n_modes);
    let tau = [0, 2, 1];
    let mut out = DVector::zeros(x.len());
    for body in 0..BODIES {
        for c in 0..2 {
            let (to, from) = ((2 * body + c) * len, (2 * tau[body] + c) * len);
            for j in 0..len {
                let is_sin = j > 0 && j % 2 == 0;
                out[to + j] = if is_sin { x[from + j] } else { -x[from + j] };
            }
        }
    }
    out
}

/// Action of `g` on raw coordinates of truncation `n_modes`.
pub fn apply_coords(g: GroupElement, n_modes: usize, x: &DVector<f64>) -> DVector<f64> {
    let mut y = x.clone();
    for _ in 0..g.k {
        y = apply_b(n_modes, &y);
    }
    if g.s {
        y = apply_s(n_modes, &y);
    }
    y
}

/// `g·q` for a loop or a field.
pub fn apply<T: Series>(g: GroupElement, x: &T) -> T {
    x.with_coords(apply_coords(g, x.n_modes(), x.coords()))
}

/// `‖g·q − q‖`.
pub fn symmetry_residual<T: Series>(g: GroupElement, x: &T) -> f64 {
    (apply_coords(g, x.n_modes(), x.coords()) - x.coords()).norm()
}

/// Indices of mode `m` inside the full coordinate vector, channel-major with cos before sin.
pub fn mode_indices(n_modes: usize, m: usize) -> Vec<usize> {
    let len = channel_len(n_modes);
    let mut idx = Vec::with_capacity(2 * CHANNELS);
    for ch in 0..CHANNELS {
        idx.push(ch * len + cos_slot(m));
        if m > 0 {
            idx.push(ch * len + sin_slot(m));
        }
    }
    idx
}

/// Matrix of `g` restricted to Fourier mode `m` (6×6 for `m = 0`, 12×12 otherwise).
pub fn mode_matrix(g: GroupElement, m: usize) -> DMatrix<f64> {
    let idx = mode_indices(m, m);
    let dim = dimension(m);
    let k = idx.len();
    let mut out = DMatrix::zeros(k, k);
    for (col, &i) in idx.iter().enumerate() {
        let mut e = DVector::zeros(dim);
        e[i] = 1.0;
        let y = apply_coords(g, m, &e);
        for (row, &r) in idx.iter().enumerate() {
            out[(row, col)] = y[r];
        }
    }
    out
}

/// Dense matrix of `g` on the full loop space.
pub fn group_matrix(g: GroupElement, n_modes: usize) -> DMatrix<f64> {
    let dim = dimension(n_modes);
    let mut out = DMatrix::zeros(dim, dim);
    for m in 0..=n_modes {
        let idx = mode_indices(n_modes, m);
        let block = mode_matrix(g, m);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                out[(i, j)] = block[(a, b)];
            }
        }
    }
    out
}

/// Subgroup averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Projector {
    Pc,
    Pm,
    Ps,
    Pms,
    PcPm,
    PcPs,
    PcPms,
    PmPs,
    PD6,
}

impl Projector {
    pub const ALL: [Projector; 9] = [
        Projector::Pc,
        Projector::Pm,
        Projector::Ps,
        Projector::Pms,
        Projector::PcPm,
        Projector::PcPs,
        Projector::PcPms,
        Projector::PmPs,
        Projector::PD6,
    ];

    /// Elements of the subgroup being averaged.
    pub fn elements(&self) -> Vec<GroupElement> {
        let e = |s, k| GroupElement::new(s, k);
        match self {
            Projector::Pc => vec![e(false, 0), e(false, 2), e(false, 4)],
            Projector::Pm => vec![e(false, 0), e(false, 3)],
            Projector::Ps => vec![e(false, 0), e(true, 0)],
            Projector::Pms => vec![e(false, 0), e(true, 3)],
            Projector::PcPm => (0..6).map(|k| e(false, k)).collect(),
            Projector::PcPs => [0, 2, 4].iter().flat_map(|&k| [e(false, k), e(true, k)]).collect(),
            Projector::PcPms => [0, 2, 4].iter().flat_map(|&k| [e(false, k), e(true, (k + 3) % 6)]).collect(),
            Projector::PmPs => vec![e(false, 0), e(false, 3), e(true, 0), e(true, 3)],
            Projector::PD6 => GroupElement::all().to_vec(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Projector::Pc => "P_C",
            Projector::Pm => "P_M",
            Projector::Ps => "P_S",
            Projector::Pms => "P_MS",
            Projector::PcPm => "P_C P_M",
            Projector::PcPs => "P_C P_S",
            Projector::PcPms => "P_C P_MS",
            Projector::PmPs => "P_M P_S",
            Projector::PD6 => "P_D6",
        }
    }

    pub fn parse(name: &str) -> Option<Projector> {
        let key: String = name.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_uppercase();
        Projector::ALL.into_iter().find(|p| {
            let k: String = p.name().chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_uppercase();
            k == key
        })
    }

    /// Matrix of the average on mode `m`.
    pub fn mode_matrix(&self, m: usize) -> DMatrix<f64> {
        let els = self.elements();
        let mut acc = mode_matrix(els[0], m);
        for g in &els[1..] {
            acc += mode_matrix(*g, m);
        }
        acc / els.len() as f64
    }

    /// Orthonormal basis of the invariant subspace.
    pub fn basis(&self, n_modes: usize) -> SparseBasis {
        SparseBasis::from_mode_projectors(n_modes, |m| self.mode_matrix(m))
    }
}

impl fmt::Display for Projector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Subgroup average `P·x`.
pub fn project<T: Series>(p: Projector, x: &T) -> T {
    let els = p.elements();
    let n = x.n_modes();
    let mut acc = DVector::zeros(x.coords().len());
    for g in &els {
        acc += apply_coords(*g, n, x.coords());
    }
    x.with_coords(acc / els.len() as f64)
}

/// Orthonormal basis whose columns each live on a single Fourier mode.
#[derive(Debug, Clone)]
pub struct SparseBasis {
    dim: usize,
    cols: Vec<Vec<(usize, f64)>>,
}

impl SparseBasis {
    /// Range of a per-mode orthogonal projector, built mode by mode.
    pub fn from_mode_projectors<F: Fn(usize) -> DMatrix<f64>>(n_modes: usize, proj: F) -> SparseBasis {
        let mut cols = Vec::new();
        for m in 0..=n_modes {
            let idx = mode_indices(n_modes, m);
            let p = proj(m);
            let candidates: Vec<DVector<f64>> = (0..p.ncols()).map(|j| p.column(j).into_owned()).collect();
            let q = orthonormal_span(&candidates, 1e-8);
            for j in 0..q.ncols() {
                let col: Vec<(usize, f64)> = idx
                    .iter()
                    .enumerate()
                    .filter(|&(r, _)| q[(r, j)].abs() > 1e-15)
                    .map(|(r, &i)| (i, q[(r, j)]))
                    .collect();
                cols.push(col);
            }
        }
        SparseBasis {
            dim: dimension(n_modes),
            cols,
        }
    }

    /// The whole loop space in coordinate order.
    pub fn identity(n_modes: usize) -> SparseBasis {
        let dim = dimension(n_modes);
        SparseBasis {
            dim,
            cols: (0..dim).map(|i| vec![(i, 1.0)]).collect(),
        }
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of basis vectors.
    pub fn rank(&self) -> usize {
        self.cols.len()
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let mut q = DMatrix::zeros(self.dim, self.cols.len());
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, v) in col {
                q[(i, j)] = v;
            }
        }
        q
    }

    /// `Qᵀ x`.
    pub fn restrict(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.cols.len(), self.cols.iter().map(|c| c.iter().map(|&(i, v)| v * x[i]).sum()))
    }

    /// `Q y`.
    pub fn lift(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut x = DVector::zeros(self.dim);
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, v) in col {
                x[i] += v * y[j];
            }
        }
        x
    }

    /// `Qᵀ A Q` for a dense symmetric `A`.
    pub fn compress(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let k = self.cols.len();
        let mut aq = DMatrix::zeros(self.dim, k);
        for (j, col) in self.cols.iter().enumerate() {
            let mut target = aq.column_mut(j);
            for &(i, v) in col {
                target.axpy(v, &a.column(i), 1.0);
            }
        }
        let mut out = DMatrix::zeros(k, k);
        for (r, col) in self.cols.iter().enumerate() {
            for c in 0..k {
                out[(r, c)] = col.iter().map(|&(i, v)| v * aq[(i, c)]).sum();
            }
        }
        (&out + out.transpose()) * 0.5
    }

    /// `Q Y` for a coefficient matrix `Y`.
    pub fn lift_matrix(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim, y.ncols());
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, v) in col {
                for c in 0..y.ncols() {
                    out[(i, c)] += v * y[(j, c)];
                }
            }
        }
        out
    }
}

/// Symmetry group used for labelling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SymmetryGroup {
    D6,
    D2,
}

/// Value of `S′` on an irreducible representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SPrime {
    Plus,
    Minus,
    /// Two-dimensional representation containing both signs.
    Both,
}

/// Irreducible representations of the figure-eight group and of the
/// four-element subgroup `{1, M, S, MS}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum IrrepLabel {
    I,
    II,
    III,
    IV,
    V,
    VI,
    IPrime,
    IIPrime,
    IIIPrime,
    IVPrime,
}

impl IrrepLabel {
    pub const D6_LABELS: [IrrepLabel; 6] =
        [IrrepLabel::I, IrrepLabel::II, IrrepLabel::III, IrrepLabel::IV, IrrepLabel::V, IrrepLabel::VI];
    pub const D2_LABELS: [IrrepLabel; 4] =
        [IrrepLabel::IPrime, IrrepLabel::IIPrime, IrrepLabel::IIIPrime, IrrepLabel::IVPrime];

    pub fn group(&self) -> SymmetryGroup {
        match self {
            IrrepLabel::I | IrrepLabel::II | IrrepLabel::III | IrrepLabel::IV | IrrepLabel::V | IrrepLabel::VI => {
                SymmetryGroup::D6
            }
            _ => SymmetryGroup::D2,
        }
    }

    /// `P_C′`; `None` for the smaller group.
    pub fn pc_prime(&self) -> Option<u8> {
        match self {
            IrrepLabel::I | IrrepLabel::II | IrrepLabel::III | IrrepLabel::IV => Some(1),
            IrrepLabel::V | IrrepLabel::VI => Some(0),
            _ => None,
        }
    }

    pub fn m_prime(&self) -> i8 {
        match self {
            IrrepLabel::I | IrrepLabel::II | IrrepLabel::V | IrrepLabel::IPrime | IrrepLabel::IIPrime => 1,
            _ => -1,
        }
    }

    pub fn s_prime(&self) -> SPrime {
        match self {
            IrrepLabel::V | IrrepLabel::VI => SPrime::Both,
            IrrepLabel::I | IrrepLabel::III | IrrepLabel::IPrime | IrrepLabel::IIIPrime => SPrime::Plus,
            _ => SPrime::Minus,
        }
    }

    /// Dimension of the representation.
    pub fn d(&self) -> usize {
        match self {
            IrrepLabel::V | IrrepLabel::VI => 2,
            _ => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            IrrepLabel::I => "I",
            IrrepLabel::II => "II",
            IrrepLabel::III => "III",
            IrrepLabel::IV => "IV",
            IrrepLabel::V => "V",
            IrrepLabel::VI => "VI",
            IrrepLabel::IPrime => "I'",
            IrrepLabel::IIPrime => "II'",
            IrrepLabel::IIIPrime => "III'",
            IrrepLabel::IVPrime => "IV'",
        }
    }

    pub fn parse(name: &str) -> Option<IrrepLabel> {
        let n = name.trim().replace('′', "'");
        IrrepLabel::D6_LABELS
            .into_iter()
            .chain(IrrepLabel::D2_LABELS)
            .find(|l| l.name().eq_ignore_ascii_case(&n))
    }

    /// Label with the given signature, if any row matches.
    pub fn from_signature(group: SymmetryGroup, pc: Option<u8>, m: i8, s: SPrime) -> Option<IrrepLabel> {
        let labels: &[IrrepLabel] = match group {
            SymmetryGroup::D6 => &IrrepLabel::D6_LABELS,
            SymmetryGroup::D2 => &IrrepLabel::D2_LABELS,
        };
        labels
            .iter()
            .copied()
            .find(|l| l.pc_prime() == pc && l.m_prime() == m && l.s_prime() == s)
    }

    /// Angle of `B` on the adapted basis `(φ₊, φ₋)` of a two-dimensional representation.
    pub fn rotation_angle(&self) -> Option<f64> {
        match self {
            IrrepLabel::V => Some(2.0 * PI / 3.0),
            IrrepLabel::VI => Some(PI / 3.0),
            _ => None,
        }
    }
}

impl fmt::Display for IrrepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Symmetry group left on a bifurcated branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ResidualGroup {
    D6,
    C6,
    D3,
    D3Prime,
    D2,
    D1,
    D1Prime,
    C2,
}

impl ResidualGroup {
    pub fn name(&self) -> &'static str {
        match self {
            ResidualGroup::D6 => "D6",
            ResidualGroup::C6 => "C6",
            ResidualGroup::D3 => "D3",
            ResidualGroup::D3Prime => "D3'",
            ResidualGroup::D2 => "D2",
            ResidualGroup::D1 => "D1",
            ResidualGroup::D1Prime => "D1'",
            ResidualGroup::C2 => "C2",
        }
    }
}

/// Qualitative shape of a bifurcation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BifurcationType {
    Fold,
    OneSide,
    BothSides,
    DoubleOneSide,
}

impl BifurcationType {
    pub fn name(&self) -> &'static str {
        match self {
            BifurcationType::Fold => "fold",
            BifurcationType::OneSide => "one-side",
            BifurcationType::BothSides => "both-sides",
            BifurcationType::DoubleOneSide => "double one-side",
        }
    }
}

/// One bifurcation channel of a representation: the projector whose
/// invariant subspace contains the new branch, its symmetry, order and type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BifurcationPattern {
    pub irrep: IrrepLabel,
    pub projector: Projector,
    pub residual_group: ResidualGroup,
    pub order: u8,
    pub kind: BifurcationType,
}

/// Bifurcation channels of a representation; two for `VI`, one otherwise.
pub fn bifurcation_pattern(label: IrrepLabel) -> Vec<BifurcationPattern> {
    use BifurcationType::*;
    use ResidualGroup as G;
    let row = |projector, residual_group, order, kind| BifurcationPattern {
        irrep: label,
        projector,
        residual_group,
        order,
        kind,
    };
    match label {
        IrrepLabel::I => vec![row(Projector::PD6, G::D6, 1, Fold)],
        IrrepLabel::II => vec![row(Projector::PcPm, G::C6, 2, OneSide)],
        IrrepLabel::III => vec![row(Projector::PcPs, G::D3, 2, OneSide)],
        IrrepLabel::IV => vec![row(Projector::PcPms, G::D3Prime, 2, OneSide)],
        IrrepLabel::V => vec![row(Projector::PmPs, G::D2, 1, BothSides)],
        IrrepLabel::VI => vec![
            row(Projector::Ps, G::D1, 2, DoubleOneSide),
            row(Projector::Pms, G::D1Prime, 2, DoubleOneSide),
        ],
        IrrepLabel::IPrime => vec![row(Projector::PmPs, G::D2, 1, Fold)],
        IrrepLabel::IIPrime => vec![row(Projector::Pm, G::C2, 2, OneSide)],
        IrrepLabel::IIIPrime => vec![row(Projector::Ps, G::D1, 2, OneSide)],
        IrrepLabel::IVPrime => vec![row(Projector::Pms, G::D1Prime, 2, OneSide)],
    }
}

/// Machine-readable pattern tables for both groups.
pub fn pattern_table() -> Value {
    let projector_text = |l: IrrepLabel| match l {
        IrrepLabel::I => "P_C P_M P_S".to_string(),
        _ => bifurcation_pattern(l).iter().map(|p| p.projector.name()).collect::<Vec<_>>().join(" or "),
    };
    let row = |l: IrrepLabel| {
        let pats = bifurcation_pattern(l);
        let sprime = match l.s_prime() {
            SPrime::Plus => json!(1),
            SPrime::Minus => json!(-1),
            SPrime::Both => json!("±1"),
        };
        json!({
            "representation": l.name(),
            "pcprime": l.pc_prime(),
            "mprime": l.m_prime(),
            "sprime": sprime,
            "d": l.d(),
            "projector": projector_text(l),
            "group": pats.iter().map(|p| p.residual_group.name()).collect::<Vec<_>>().join(" or "),
            "order": pats[0].order,
            "type": pats[0].kind.name(),
        })
    };
    json!({
        "D6": IrrepLabel::D6_LABELS.iter().map(|&l| row(l)).collect::<Vec<_>>(),
        "D2": IrrepLabel::D2_LABELS.iter().map(|&l| row(l)).collect::<Vec<_>>(),
    })
}

/// Tolerance for reading a restricted matrix element as 0 or ±1.
pub const CLASSIFY_TOL: f64 = 1e-4;

/// Joint eigenspace of `P_C`, `M` and `S` (or of `M`, `S` alone for the
/// smaller group).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Sector {
    pub pc: Option<u8>,
    pub m: i8,
    pub s: i8,
}

impl Sector {
    pub fn all(group: SymmetryGroup) -> Vec<Sector> {
        let mut out = Vec::new();
        let pcs: &[Option<u8>] = match group {
            SymmetryGroup::D6 => &[Some(1), Some(0)],
            SymmetryGroup::D2 => &[None],
        };
        for &pc in pcs {
            for m in [1, -1] {
                for s in [1, -1] {
                    out.push(Sector { pc, m, s });
                }
            }
        }
        out
    }

    /// Representation this sector belongs to.
    pub fn irrep(&self) -> IrrepLabel {
        let group = if self.pc.is_some() { SymmetryGroup::D6 } else { SymmetryGroup::D2 };
        let s = match (self.pc, self.s) {
            (Some(0), _) => SPrime::Both,
            (_, 1) => SPrime::Plus,
            _ => SPrime::Minus,
        };
        IrrepLabel::from_signature(group, self.pc, self.m, s).expect("every sector has a label")
    }

    /// Orthogonal projector onto the sector, restricted to mode `m`.
    pub fn mode_projector(&self, mode: usize) -> DMatrix<f64> {
        let k = if mode == 0 { CHANNELS } else { 2 * CHANNELS };
        let id = DMatrix::<f64>::identity(k, k);
        let mut p = (&id + mode_matrix(GroupElement::M, mode) * self.m as f64) * 0.5;
        p *= (&id + mode_matrix(GroupElement::S, mode) * self.s as f64) * 0.5;
        if let Some(pc) = self.pc {
            let avg = Projector::Pc.mode_matrix(mode);
            p = if pc == 1 { p * avg } else { p * (&id - avg) };
        }
        (&p + p.transpose()) * 0.5
    }

    pub fn basis(&self, n_modes: usize) -> SparseBasis {
        SparseBasis::from_mode_projectors(n_modes, |m| self.mode_projector(m))
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = self.irrep();
        if label.d() == 2 {
            write!(f, "{}{}", label, if self.s > 0 { "+" } else { "-" })
        } else {
            write!(f, "{label}")
        }
    }
}

/// Largest symmetry group (of the two labelled ones) under which `q` is
/// invariant to within `tol`.
pub fn detect_group(q: &LoopPath, tol: f64) -> Option<SymmetryGroup> {
    let scale = q.norm().max(1.0);
    let fixed = |g| symmetry_residual(g, q) <= tol * scale;
    if fixed(GroupElement::B) && fixed(GroupElement::S) {
        Some(SymmetryGroup::D6)
    } else if fixed(GroupElement::M) && fixed(GroupElement::S) {
        Some(SymmetryGroup::D2)
    } else {
        None
    }
}

/// Result of classifying an eigenspace.
#[derive(Debug, Clone)]
pub struct Classification {
    pub label: IrrepLabel,
    /// Adapted orthonormal basis: `[φ]` for one-dimensional representations,
    /// `[φ₊, φ₋]` with `Sφ± = ±φ±` and `⟨φ₋, Bφ₊⟩ > 0` otherwise.
    pub basis: Vec<TangentField>,
}

fn restricted(g_fields: &[DVector<f64>], fields: &[DVector<f64>]) -> DMatrix<f64> {
    let d = fields.len();
    DMatrix::from_fn(d, d, |i, j| fields[i].dot(&g_fields[j]))
}

fn near(x: f64, target: f64) -> bool {
    (x - target).abs() <= CLASSIFY_TOL
}

/// Fix the overall sign so the largest-magnitude coordinate is positive.
fn canonical_sign(v: DVector<f64>) -> DVector<f64> {
    let i = v.iamax();
    if v[i] < 0.0 {
        -v
    } else {
        v
    }
}

/// Classify a Hessian eigenspace at a loop invariant under `group`.
pub fn classify_in(fields: &[TangentField], group: SymmetryGroup) -> Result<Classification> {
    let first = fields.first().ok_or_else(|| Error::Classification("empty eigenspace".into()))?;
    let (period, n) = (first.period(), first.n_modes());
    let raw: Vec<DVector<f64>> = fields.iter().map(|f| f.coords().clone()).collect();
    let q = orthonormal_span(&raw, 1e-10);
    let basis: Vec<DVector<f64>> = (0..q.ncols()).map(|j| q.column(j).into_owned()).collect();
    let d = basis.len();
    let act = |g: GroupElement| -> Vec<DVector<f64>> { basis.iter().map(|v| apply_coords(g, n, v)).collect() };
    let pc_fields: Vec<DVector<f64>> = basis
        .iter()
        .map(|v| {
            (v + apply_coords(GroupElement::C, n, v) + apply_coords(GroupElement::new(false, 4), n, v)) / 3.0
        })
        .collect();
    let pc = restricted(&pc_fields, &basis);
    let m = restricted(&act(GroupElement::M), &basis);
    let s = restricted(&act(GroupElement::S), &basis);
    let signature = || {
        format!(
            "d={d}, P_C'={:?}, M'={:?}, S'={:?}",
            pc.as_slice().iter().map(|x| (x * 1e4).round() / 1e4).collect::<Vec<_>>(),
            m.as_slice().iter().map(|x| (x * 1e4).round() / 1e4).collect::<Vec<_>>(),
            s.as_slice().iter().map(|x| (x * 1e4).round() / 1e4).collect::<Vec<_>>()
        )
    };
    let wrap = |v: DVector<f64>| TangentField::from_coords(period, n, v).expect("same shape");

    let scalar_sign = |x: f64| -> Option<i8> {
        if near(x, 1.0) {
            Some(1)
        } else if near(x, -1.0) {
            Some(-1)
        } else {
            None
        }
    };

    match d {
        1 => {
            let pc_val = match group {
                SymmetryGroup::D2 => None,
                SymmetryGroup::D6 if near(pc[(0, 0)], 1.0) => Some(1),
                SymmetryGroup::D6 if near(pc[(0, 0)], 0.0) => Some(0),
                SymmetryGroup::D6 => return Err(Error::Classification(signature())),
            };
            let (mv, sv) = match (scalar_sign(m[(0, 0)]), scalar_sign(s[(0, 0)])) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(Error::Classification(signature())),
            };
            let sp = if sv > 0 { SPrime::Plus } else { SPrime::Minus };
            let label =
                IrrepLabel::from_signature(group, pc_val, mv, sp).ok_or_else(|| Error::Classification(signature()))?;
            Ok(Classification {
                label,
                basis: vec![wrap(canonical_sign(basis[0].clone()))],
            })
        }
        2 if group == SymmetryGroup::D6 => {
            let pc_zero = pc.iter().all(|x| near(*x, 0.0));
            let m_val = if (m.clone() - DMatrix::identity(2, 2)).amax() <= CLASSIFY_TOL {
                1
            } else if (m.clone() + DMatrix::identity(2, 2)).amax() <= CLASSIFY_TOL {
                -1
            } else {
                return Err(Error::Classification(signature()));
            };
            if !pc_zero {
                return Err(Error::Classification(signature()));
            }
            let eig = s.clone().symmetric_eigen();
            let (ip, im) = if eig.eigenvalues[0] > eig.eigenvalues[1] { (0, 1) } else { (1, 0) };
            if !near(eig.eigenvalues[ip], 1.0) || !near(eig.eigenvalues[im], -1.0) {
                return Err(Error::Classification(signature()));
            }
            let label = IrrepLabel::from_signature(group, Some(0), m_val, SPrime::Both)
                .ok_or_else(|| Error::Classification(signature()))?;
            let combine = |col: usize| &basis[0] * eig.eigenvectors[(0, col)] + &basis[1] * eig.eigenvectors[(1, col)];
            let phi_plus = canonical_sign(combine(ip));
            let mut phi_minus = combine(im);
            if phi_minus.dot(&apply_coords(GroupElement::B, n, &phi_plus)) < 0.0 {
                phi_minus = -phi_minus;
            }
            Ok(Classification {
                label,
                basis: vec![wrap(phi_plus), wrap(phi_minus)],
            })
        }
        _ => Err(Error::Classification(signature())),
    }
}

/// Classify an eigenspace at the symmetric stationary loop `q_o`.
pub fn classify(fields: &[TangentField], q_o: &LoopPath) -> Result<Classification> {
    let group = detect_group(q_o, 1e-6)
        .ok_or_else(|| Error::Classification("reference loop carries neither symmetry group".into()))?;
    classify_in(fields, group)
}

/// Partner `φ₋ = (Bφ₊ − cos α φ₊)/sin α` of `φ₊` in a two-dimensional representation.
pub fn partner_field(phi_plus: &TangentField, label: IrrepLabel) -> Option<TangentField> {
    let alpha = label.rotation_angle()?;
    let b = apply(GroupElement::B, phi_plus);
    let v = (b.coords() - phi_plus.coords() * alpha.cos()) / alpha.sin();
    Some(phi_plus.with_coords(v))
}

/// `cos θ φ₊ + sin θ φ₋`.
pub fn rotated_field(phi_plus: &TangentField, phi_minus: &TangentField, theta: f64) -> TangentField {
    phi_plus.with_coords(phi_plus.coords() * theta.cos() + phi_minus.coords() * theta.sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_coords(rng: &mut StdRng, n: usize) -> DVector<f64> {
        DVector::from_fn(dimension(n), |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn word_algebra() {
        let b = GroupElement::B;
        let s = GroupElement::S;
        assert_eq!(b.pow(6), GroupElement::IDENTITY);
        assert_eq!(s.compose(s), GroupElement::IDENTITY);
        assert_eq!(b.compose(s), s.compose(b.inverse()));
        for g in GroupElement::all() {
            assert_eq!(g.compose(g.inverse()), GroupElement::IDENTITY);
            assert_eq!(GroupElement::parse(&g.to_string()), Some(g));
        }
        assert_eq!(GroupElement::M.compose(s), GroupElement::MS);
    }

    #[test]
    fn matrices_follow_words() {
        let mut rng = StdRng::seed_from_u64(1);
        let n = 5;
        let x = random_coords(&mut rng, n);
        for g in GroupElement::all() {
            for h in GroupElement::all() {
                let lhs = apply_coords(g, n, &apply_coords(h, n, &x));
                let rhs = apply_coords(g.compose(h), n, &x);
                assert!((lhs - rhs).amax() < 1e-12, "{g} {h}");
            }
        }
    }

    #[test]
    fn b_acts_on_functions_as_defined() {
        let mut rng = StdRng::seed_from_u64(2);
        let n = 4;
        let q = LoopPath::from_coords(1.7, n, random_coords(&mut rng, n)).unwrap();
        let bq = apply(GroupElement::B, &q);
        let sq = apply(GroupElement::S, &q);
        let t = 0.31;
        let (lhs, src) = (bq.evaluate(t), q.evaluate(t + 1.7 / 6.0));
        let (slhs, ssrc) = (sq.evaluate(t), q.evaluate(-t));
        let tau = [0, 2, 1];
        for k in 0..3 {
            let from = src[(k + 1) % 3];
            assert!((lhs[k][0] + from[0]).abs() < 1e-12);
            assert!((lhs[k][1] - from[1]).abs() < 1e-12);
            for c in 0..2 {
                assert!((slhs[k][c] + ssrc[tau[k]][c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn group_matrices_are_orthogonal() {
        for g in GroupElement::all() {
            for m in [0, 1, 5] {
                let a = mode_matrix(g, m);
                let k = a.nrows();
                assert!((a.transpose() * &a - DMatrix::identity(k, k)).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn projectors_are_idempotent_and_invariant() {
        let mut rng = StdRng::seed_from_u64(3);
        let n = 4;
        let q = LoopPath::from_coords(1.0, n, random_coords(&mut rng, n)).unwrap();
        for p in Projector::ALL {
            let once = project(p, &q);
            let twice = project(p, &once);
            assert!((once.coords() - twice.coords()).amax() < 1e-12);
            for g in p.elements() {
                assert!(symmetry_residual(g, &once) < 1e-12);
            }
            let basis = p.basis(n);
            let restricted = basis.lift(&basis.restrict(q.coords()));
            assert!((restricted - once.coords()).amax() < 1e-12, "{p}");
        }
    }

    #[test]
    fn sectors_partition_loop_space() {
        let n = 3;
        let total: usize = Sector::all(SymmetryGroup::D6).iter().map(|s| s.basis(n).rank()).sum();
        assert_eq!(total, dimension(n));
        let total: usize = Sector::all(SymmetryGroup::D2).iter().map(|s| s.basis(n).rank()).sum();
        assert_eq!(total, dimension(n));
    }

    #[test]
    fn sector_fields_classify_to_their_label() {
        let mut rng = StdRng::seed_from_u64(4);
        let n = 4;
        for sector in Sector::all(SymmetryGroup::D6) {
            let basis = sector.basis(n);
            let y = DVector::from_fn(basis.rank(), |_, _| rng.gen_range(-1.0..1.0));
            let f = TangentField::from_coords(1.0, n, basis.lift(&y)).unwrap();
            let label = sector.irrep();
            if label.d() == 1 {
                assert_eq!(classify_in(&[f], SymmetryGroup::D6).unwrap().label, label);
            } else if sector.s > 0 {
                let g = partner_field(&f.normalized().unwrap(), label).unwrap();
                let c = classify_in(&[f.clone(), g], SymmetryGroup::D6).unwrap();
                assert_eq!(c.label, label);
                assert!(symmetry_residual(GroupElement::S, &c.basis[0]) < 1e-10);
                let b = apply(GroupElement::B, &c.basis[0]);
                assert!(b.coords().dot(c.basis[1].coords()) > 0.0);
            }
        }
    }

    #[test]
    fn mixed_space_is_rejected() {
        let n = 3;
        let a = Sector { pc: Some(1), m: 1, s: 1 }.basis(n).dense();
        let b = Sector { pc: Some(1), m: -1, s: 1 }.basis(n).dense();
        let mix = TangentField::from_coords(1.0, n, a.column(0) + b.column(0)).unwrap();
        assert!(matches!(classify_in(&[mix], SymmetryGroup::D6), Err(Error::Classification(_))));
    }

    #[test]
    fn pattern_rows() {
        let v = bifurcation_pattern(IrrepLabel::V);
        assert_eq!(v.len(), 1);
        assert_eq!((v[0].projector, v[0].residual_group, v[0].order, v[0].kind),
            (Projector::PmPs, ResidualGroup::D2, 1, BifurcationType::BothSides));
        let vi = bifurcation_pattern(IrrepLabel::VI);
        assert_eq!(vi.len(), 2);
        assert_eq!(vi[1].projector, Projector::Pms);
        let t = pattern_table();
        assert_eq!(t["D6"][5]["projector"], "P_S or P_MS");
        assert_eq!(t["D2"][3]["group"], "D1'");
    }
}
