//! The action functional, its derivatives, and the bracket integrals
//! `⟨f g … h⟩ = ∫ Σ ∂ⁿU f g … h dt`.
//!
//! The Lagrangian is `L = K + U` with `U` the *negative* of the potential
//! energy, so the equations of motion read `q̈ = ∂U/∂q`. Every pair term is
//! written as `g(d) = w(|d|²/2)` with `d = r_i − r_j`; directional
//! derivatives of any order then reduce to a sum over partitions of the
//! direction slots into singletons (contributing `d·v`) and pairs
//! (contributing `v·v′`), each weighted by `w^(number of blocks)`.

use nalgebra::{DMatrix, DVector, Matrix2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::loop_space::{
    channel_len, slot_mode, time_derivative, Axis, Collocation, LoopPath, Series, TangentField, BODIES,
    CHANNELS,
};

/// Separation below which two bodies count as colliding.
pub const COLLISION_DISTANCE: f64 = 1e-8;

/// Highest derivative order supported by the pair-potential kernel.
pub const MAX_ORDER: usize = 6;

const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Interaction between every pair of bodies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Potential {
    /// `U = (1/a) Σ r_ij^{-a}`.
    Homogeneous { a: f64 },
    /// `U = Σ (r_ij^{-6} − r_ij^{-12})`.
    LennardJones,
    /// No interaction; only useful for testing the kinetic part.
    Free,
}

impl Potential {
    pub fn homogeneous(a: f64) -> Result<Self> {
        if !a.is_finite() || a <= -2.0 {
            return Err(Error::InvalidPotential(format!("exponent a must exceed -2, got {a}")));
        }
        if a == 0.0 {
            return Err(Error::InvalidPotential("exponent a must be nonzero (U carries 1/a)".into()));
        }
        Ok(Potential::Homogeneous { a })
    }

    pub fn lennard_jones() -> Self {
        Potential::LennardJones
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Potential::Homogeneous { .. } => "homogeneous",
            Potential::LennardJones => "lennard_jones",
            Potential::Free => "free",
        }
    }

    /// Exponent of the homogeneous potential.
    pub fn exponent(&self) -> Option<f64> {
        match *self {
            Potential::Homogeneous { a } => Some(a),
            _ => None,
        }
    }

    /// `w^(k)` for `k = 0..=order` at pair distance `rho`, where `g = w(ρ²/2)`.
    ///
    /// The homogeneous derivatives of order ≥ 1 are written without the `1/a`
    /// factor, so they stay finite as `a → 0`.
    pub fn pair_derivatives(&self, rho: f64, order: usize) -> [f64; MAX_ORDER + 1] {
        let mut w = [0.0; MAX_ORDER + 1];
        match *self {
            Potential::Homogeneous { a } => {
                let base = rho.powf(-a);
                let inv2 = 1.0 / (rho * rho);
                w[0] = base / a;
                let mut coef = -1.0;
                let mut pw = base * inv2;
                for k in 1..=order {
                    w[k] = coef * pw;
                    coef *= -a - 2.0 * k as f64;
                    pw *= inv2;
                }
            }
            Potential::LennardJones => {
                for (c, p) in [(1.0, -6.0), (-1.0, -12.0)] {
                    let inv2 = 1.0 / (rho * rho);
                    let mut coef = c;
                    let mut pw = rho.powf(p);
                    for k in 0..=order {
                        w[k] += coef * pw;
                        coef *= p - 2.0 * k as f64;
                        pw *= inv2;
                    }
                }
            }
            Potential::Free => {}
        }
        w
    }
}

/// Dense Hessian of the action in the orthonormal trigonometric basis.
#[derive(Debug, Clone)]
pub struct HessianMatrix {
    period: f64,
    n_modes: usize,
    matrix: DMatrix<f64>,
}

impl HessianMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, v: &TangentField) -> TangentField {
        v.with_coords(&self.matrix * v.coords())
    }

    /// `⟨u, H v⟩`.
    pub fn quadratic_form(&self, u: &TangentField, v: &TangentField) -> f64 {
        u.coords().dot(&(&self.matrix * v.coords()))
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> f64 {
        self.matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// `max |H − Hᵀ|` relative to `max |H|`.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.matrix.amax().max(f64::MIN_POSITIVE);
        (&self.matrix - self.matrix.transpose()).amax() / scale
    }
}

/// Diagonal of the kinetic operator `−d²/dt²` in coordinate order.
pub fn kinetic_diagonal(period: f64, n_modes: usize) -> DVector<f64> {
    let len = channel_len(n_modes);
    let omega = 2.0 * std::f64::consts::PI / period;
    DVector::from_fn(CHANNELS * len, |i, _| (slot_mode(i % len) as f64 * omega).powi(2))
}

/// Pair geometry at every collocation node.
struct PairGeometry {
    /// `d[node][pair] = r_i − r_j`.
    diffs: Vec<[[f64; 2]; 3]>,
    /// `w^(k)` for each node and pair.
    derivs: Vec<[[f64; MAX_ORDER + 1]; 3]>,
}

impl PairGeometry {
    fn new(grid: &Collocation, path: &LoopPath, pot: &Potential, order: usize) -> Result<Self> {
        let pos = grid.synthesize(path.coords());
        let mut diffs = Vec::with_capacity(grid.points());
        let mut derivs = Vec::with_capacity(grid.points());
        for j in 0..grid.points() {
            let mut d = [[0.0; 2]; 3];
            let mut w = [[0.0; MAX_ORDER + 1]; 3];
            for (p, &(bi, bj)) in PAIRS.iter().enumerate() {
                for c in 0..2 {
                    d[p][c] = pos[(j, 2 * bi + c)] - pos[(j, 2 * bj + c)];
                }
                let rho = d[p][0].hypot(d[p][1]);
                if rho < COLLISION_DISTANCE && !matches!(pot, Potential::Free) {
                    return Err(Error::Collision {
                        time: grid.time(j),
                        i: bi,
                        j: bj,
                        distance: rho,
                    });
                }
                w[p] = pot.pair_derivatives(rho, order);
            }
            diffs.push(d);
            derivs.push(w);
        }
        Ok(Self { diffs, derivs })
    }
}

/// Difference `v_i − v_j` of a field's node values for each pair.
fn pair_differences(vals: &DMatrix<f64>, j: usize) -> [[f64; 2]; 3] {
    let mut out = [[0.0; 2]; 3];
    for (p, &(bi, bj)) in PAIRS.iter().enumerate() {
        for c in 0..2 {
            out[p][c] = vals[(j, 2 * bi + c)] - vals[(j, 2 * bj + c)];
        }
    }
    out
}

/// Sum over partitions of the slots in `mask` into singletons and pairs.
///
/// `a[l] = d·v_l`, `b[l][m] = v_l·v_m`; `blocks` counts blocks already used.
fn contract(mask: u32, blocks: usize, a: &[f64], b: &[[f64; MAX_ORDER]; MAX_ORDER], w: &[f64]) -> f64 {
    if mask == 0 {
        return w[blocks];
    }
    let i = mask.trailing_zeros() as usize;
    let rest = mask & !(1 << i);
    let mut sum = a[i] * contract(rest, blocks + 1, a, b, w);
    let mut others = rest;
    while others != 0 {
        let k = others.trailing_zeros() as usize;
        others &= !(1 << k);
        sum += b[i][k] * contract(rest & !(1 << k), blocks + 1, a, b, w);
    }
    sum
}

fn slot_products(d: [f64; 2], dv: &[[f64; 2]]) -> (Vec<f64>, [[f64; MAX_ORDER]; MAX_ORDER]) {
    let a: Vec<f64> = dv.iter().map(|v| d[0] * v[0] + d[1] * v[1]).collect();
    let mut b = [[0.0; MAX_ORDER]; MAX_ORDER];
    for (l, u) in dv.iter().enumerate() {
        for (m, v) in dv.iter().enumerate() {
            b[l][m] = u[0] * v[0] + u[1] * v[1];
        }
    }
    (a, b)
}

fn check_fields(path: &LoopPath, fields: &[&TangentField]) -> Result<()> {
    for f in fields {
        if f.n_modes() != path.n_modes() || (f.period() - path.period()).abs() > 1e-12 * path.period() {
            return Err(Error::Dimension(format!(
                "field (N={}, T={}) does not match loop (N={}, T={})",
                f.n_modes(),
                f.period(),
                path.n_modes(),
                path.period()
            )));
        }
    }
    Ok(())
}

/// Closest approach of any two bodies over the collocation nodes.
pub fn min_pair_distance(path: &LoopPath) -> f64 {
    min_pair_distance_on(&Collocation::for_series(path), path)
}

pub(crate) fn min_pair_distance_on(grid: &Collocation, path: &LoopPath) -> f64 {
    let pos = grid.synthesize(path.coords());
    let mut best = f64::INFINITY;
    for j in 0..grid.points() {
        for &(bi, bj) in PAIRS.iter() {
            let dx = pos[(j, 2 * bi)] - pos[(j, 2 * bj)];
            let dy = pos[(j, 2 * bi + 1)] - pos[(j, 2 * bj + 1)];
            best = best.min(dx.hypot(dy));
        }
    }
    best
}

/// `S[q] = ∫ (½ Σ|ṙ_k|² + U) dt`.
pub fn action(path: &LoopPath, pot: &Potential) -> Result<f64> {
    let grid = Collocation::for_series(path);
    action_on(&grid, path, pot)
}

pub(crate) fn action_on(grid: &Collocation, path: &LoopPath, pot: &Potential) -> Result<f64> {
    let kin = kinetic_diagonal(path.period(), path.n_modes());
    let x = path.coords();
    let kinetic = 0.5 * x.iter().zip(kin.iter()).map(|(c, k)| k * c * c).sum::<f64>();
    let geo = PairGeometry::new(grid, path, pot, 0)?;
    let potential: f64 = geo.derivs.iter().map(|w| w.iter().map(|p| p[0]).sum::<f64>()).sum();
    Ok(kinetic + grid.weight() * potential)
}

/// `L²` representer of the first variation: `−q̈ + ∂U/∂q`.
pub fn gradient(path: &LoopPath, pot: &Potential) -> Result<TangentField> {
    let grid = Collocation::for_series(path);
    gradient_on(&grid, path, pot)
}

pub(crate) fn gradient_on(grid: &Collocation, path: &LoopPath, pot: &Potential) -> Result<TangentField> {
    let kin = kinetic_diagonal(path.period(), path.n_modes());
    let force = bracket_representer_on(grid, path, pot, &[])?;
    Ok(force.with_coords(kin.component_mul(path.coords()) + force.coords()))
}

/// Second variation as a dense symmetric matrix.
pub fn hessian(path: &LoopPath, pot: &Potential) -> Result<HessianMatrix> {
    let grid = Collocation::for_series(path);
    hessian_on(&grid, path, pot)
}

pub(crate) fn hessian_on(grid: &Collocation, path: &LoopPath, pot: &Potential) -> Result<HessianMatrix> {
    let n = path.n_modes();
    let len = channel_len(n);
    let geo = PairGeometry::new(grid, path, pot, 2)?;
    let m = grid.points();

    // Node-wise 6×6 second derivative of U, stored per channel pair.
    let mut local = vec![[[0.0; CHANNELS]; CHANNELS]; m];
    for (j, h) in local.iter_mut().enumerate() {
        for (p, &(bi, bj)) in PAIRS.iter().enumerate() {
            let d = geo.diffs[j][p];
            let w = geo.derivs[j][p];
            let dd = Matrix2::new(d[0] * d[0], d[0] * d[1], d[1] * d[0], d[1] * d[1]);
            let hp = dd * w[2] + Matrix2::identity() * w[1];
            for r in 0..2 {
                for c in 0..2 {
                    h[2 * bi + r][2 * bi + c] += hp[(r, c)];
                    h[2 * bj + r][2 * bj + c] += hp[(r, c)];
                    h[2 * bi + r][2 * bj + c] -= hp[(r, c)];
                    h[2 * bj + r][2 * bi + c] -= hp[(r, c)];
                }
            }
        }
    }

    let basis = grid.basis();
    let weight = grid.weight();
    let pairs: Vec<(usize, usize)> = (0..CHANNELS).flat_map(|a| (a..CHANNELS).map(move |b| (a, b))).collect();
    let blocks: Vec<DMatrix<f64>> = pairs
        .par_iter()
        .map(|&(ca, cb)| {
            let mut scaled = basis.clone();
            for j in 0..m {
                let s = local[j][ca][cb] * weight;
                scaled.row_mut(j).scale_mut(s);
            }
            basis.tr_mul(&scaled)
        })
        .collect();

    let dim = CHANNELS * len;
    let mut mat = DMatrix::zeros(dim, dim);
    for (&(ca, cb), block) in pairs.iter().zip(&blocks) {
        mat.view_mut((ca * len, cb * len), (len, len)).copy_from(block);
        if ca != cb {
            mat.view_mut((cb * len, ca * len), (len, len)).copy_from(&block.transpose());
        }
    }
    // Exact symmetry in storage.
    for i in 0..dim {
        for k in (i + 1)..dim {
            let s = 0.5 * (mat[(i, k)] + mat[(k, i)]);
            mat[(i, k)] = s;
            mat[(k, i)] = s;
        }
    }
    let kin = kinetic_diagonal(path.period(), n);
    for i in 0..dim {
        mat[(i, i)] += kin[i];
    }
    Ok(HessianMatrix {
        period: path.period(),
        n_modes: n,
        matrix: mat,
    })
}

/// `⟨f g … h⟩` for `3 ≤ n ≤ 6` fields.
pub fn bracket(path: &LoopPath, pot: &Potential, fields: &[&TangentField]) -> Result<f64> {
    if !(3..=MAX_ORDER).contains(&fields.len()) {
        return Err(Error::BracketOrder(fields.len()));
    }
    let grid = Collocation::for_series(path);
    bracket_on(&grid, path, pot, fields)
}

pub(crate) fn bracket_on(grid: &Collocation, path: &LoopPath, pot: &Potential, fields: &[&TangentField]) -> Result<f64> {
    check_fields(path, fields)?;
    let n = fields.len();
    let geo = PairGeometry::new(grid, path, pot, n)?;
    let vals: Vec<DMatrix<f64>> = fields.iter().map(|f| grid.synthesize(f.coords())).collect();
    let full = (1u32 << n) - 1;
    let mut total = 0.0;
    for j in 0..grid.points() {
        let dv: Vec<[[f64; 2]; 3]> = vals.iter().map(|v| pair_differences(v, j)).collect();
        for p in 0..3 {
            let slots: Vec<[f64; 2]> = dv.iter().map(|x| x[p]).collect();
            let (a, b) = slot_products(geo.diffs[j][p], &slots);
            total += contract(full, 0, &a, &b, &geo.derivs[j][p]);
        }
    }
    Ok(total * grid.weight())
}

/// Representer `R` with `⟨R, h⟩ = ⟨f … g h⟩`, i.e. the bracket with its last slot left open.
///
/// With no fields this is the potential force `∂U/∂q`; with one field it is
/// the potential part of the Hessian applied to that field.
pub fn bracket_representer(path: &LoopPath, pot: &Potential, fields: &[&TangentField]) -> Result<TangentField> {
    if fields.len() >= MAX_ORDER {
        return Err(Error::BracketOrder(fields.len() + 1));
    }
    let grid = Collocation::for_series(path);
    bracket_representer_on(&grid, path, pot, fields)
}

pub(crate) fn bracket_representer_on(
    grid: &Collocation,
    path: &LoopPath,
    pot: &Potential,
    fields: &[&TangentField],
) -> Result<TangentField> {
    check_fields(path, fields)?;
    let n = fields.len();
    let geo = PairGeometry::new(grid, path, pot, n + 1)?;
    let vals: Vec<DMatrix<f64>> = fields.iter().map(|f| grid.synthesize(f.coords())).collect();
    let full = if n == 0 { 0 } else { (1u32 << n) - 1 };
    let m = grid.points();
    let mut node_force = DMatrix::zeros(m, CHANNELS);
    for j in 0..m {
        let dv: Vec<[[f64; 2]; 3]> = vals.iter().map(|v| pair_differences(v, j)).collect();
        for (p, &(bi, bj)) in PAIRS.iter().enumerate() {
            let d = geo.diffs[j][p];
            let w = &geo.derivs[j][p];
            let slots: Vec<[f64; 2]> = dv.iter().map(|x| x[p]).collect();
            let (a, b) = slot_products(d, &slots);
            // Open slot as a singleton.
            let s = contract(full, 1, &a, &b, w);
            let mut r = [s * d[0], s * d[1]];
            // Open slot paired with field l.
            for (l, v) in slots.iter().enumerate() {
                let c = contract(full & !(1 << l), 1, &a, &b, w);
                r[0] += c * v[0];
                r[1] += c * v[1];
            }
            for c in 0..2 {
                node_force[(j, 2 * bi + c)] += r[c];
                node_force[(j, 2 * bj + c)] -= r[c];
            }
        }
    }
    let coords = grid.project(&node_force);
    Ok(TangentField::from_coords(path.period(), path.n_modes(), coords).expect("grid matches loop"))
}

/// Mean angular momentum `c = (1/T) ∫ Σ r_k × ṙ_k dt`.
pub fn angular_momentum(path: &LoopPath) -> f64 {
    let vel = time_derivative(path);
    let len = channel_len(path.n_modes());
    let (x, v) = (path.coords(), vel.coords());
    let mut total = 0.0;
    for body in 0..BODIES {
        let xo = 2 * body * len;
        let yo = xo + len;
        for j in 0..len {
            total += x[xo + j] * v[yo + j] - x[yo + j] * v[xo + j];
        }
    }
    debug_assert_eq!(Axis::Y as usize, 1);
    total / path.period()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loop_space::{translation_field, Axis};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn triangle(period: f64, n: usize, side: f64) -> LoopPath {
        let mut p = LoopPath::zeros(period, n);
        let r = side / 3f64.sqrt();
        for k in 0..3 {
            let ang = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
            p.set_cos(k, Axis::X, 0, r * ang.cos());
            p.set_cos(k, Axis::Y, 0, r * ang.sin());
        }
        p
    }

    /// Well-separated random loop: triangle plus small random wiggles.
    fn random_loop(rng: &mut StdRng, n: usize) -> LoopPath {
        let base = triangle(1.0, n, 1.0);
        let noise = DVector::from_fn(base.coords().len(), |i, _| {
            let m = slot_mode(i % channel_len(n)).max(1) as f64;
            rng.gen_range(-0.05..0.05) / m
        });
        base.with_coords(base.coords() + noise)
    }

    fn random_field(rng: &mut StdRng, n: usize) -> TangentField {
        let c = DVector::from_fn(crate::loop_space::dimension(n), |i, _| {
            let m = slot_mode(i % channel_len(n)).max(1) as f64;
            rng.gen_range(-1.0..1.0) / m
        });
        TangentField::from_coords(1.0, n, c).unwrap()
    }

    #[test]
    fn rejects_bad_exponents() {
        assert!(Potential::homogeneous(0.0).is_err());
        assert!(Potential::homogeneous(-2.0).is_err());
        assert!(Potential::homogeneous(-1.5).is_ok());
    }

    #[test]
    fn static_triangle_actions() {
        let p = triangle(2.0, 8, 1.0);
        let s = action(&p, &Potential::homogeneous(1.0).unwrap()).unwrap();
        assert!((s - 6.0).abs() < 1e-12);
        let s = action(&p, &Potential::LennardJones).unwrap();
        assert!(s.abs() < 1e-12);
    }

    #[test]
    fn collision_is_reported() {
        let p = LoopPath::zeros(1.0, 8);
        match action(&p, &Potential::LennardJones) {
            Err(Error::Collision { time, .. }) => assert_eq!(time, 0.0),
            other => panic!("expected collision, got {other:?}"),
        }
    }

    #[test]
    fn pair_derivatives_match_finite_differences() {
        for pot in [Potential::homogeneous(1.0).unwrap(), Potential::homogeneous(-0.7).unwrap(), Potential::LennardJones] {
            let rho = 1.1;
            let w = pot.pair_derivatives(rho, 6);
            let h = 1e-4;
            for k in 0..6 {
                let s = 0.5 * rho * rho;
                let at = |s: f64| pot.pair_derivatives((2.0 * s).sqrt(), 6)[k];
                let fd = (at(s + h) - at(s - h)) / (2.0 * h);
                assert!((fd - w[k + 1]).abs() < 1e-6 * (1.0 + w[k + 1].abs()), "{pot:?} k={k}");
            }
        }
    }

    #[test]
    fn homogeneous_derivatives_are_continuous_through_zero() {
        let lo = Potential::Homogeneous { a: -1e-7 }.pair_derivatives(0.8, 4);
        let hi = Potential::Homogeneous { a: 1e-7 }.pair_derivatives(0.8, 4);
        for k in 1..=4 {
            assert!((lo[k] - hi[k]).abs() < 1e-5 * hi[k].abs());
        }
    }

    #[test]
    fn gradient_matches_central_difference() {
        let mut rng = StdRng::seed_from_u64(1);
        let n = 8;
        let q = random_loop(&mut rng, n);
        for pot in [Potential::homogeneous(1.0).unwrap(), Potential::LennardJones] {
            let g = gradient(&q, &pot).unwrap();
            for _ in 0..3 {
                let v = random_field(&mut rng, n);
                let h = 1e-5;
                let fd = (action(&q.displaced(&v, h), &pot).unwrap() - action(&q.displaced(&v, -h), &pot).unwrap()) / (2.0 * h);
                let an = g.coords().dot(v.coords());
                assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0));
            }
        }
    }

    #[test]
    fn hessian_matches_gradient_difference() {
        let mut rng = StdRng::seed_from_u64(2);
        let n = 6;
        let q = random_loop(&mut rng, n);
        let pot = Potential::homogeneous(1.3).unwrap();
        let h = hessian(&q, &pot).unwrap();
        assert!(h.asymmetry() < 1e-14);
        let v = random_field(&mut rng, n);
        let eps = 1e-6;
        let gp = gradient(&q.displaced(&v, eps), &pot).unwrap();
        let gm = gradient(&q.displaced(&v, -eps), &pot).unwrap();
        let fd = (gp.coords() - gm.coords()) / (2.0 * eps);
        let hv = h.apply(&v);
        assert!((fd - hv.coords()).norm() <= 1e-6 * hv.norm());
        // The one-field representer is the potential part of H·v.
        let rep = bracket_representer(&q, &pot, &[&v]).unwrap();
        let kin = kinetic_diagonal(1.0, n).component_mul(v.coords());
        assert!((rep.coords() + kin - hv.coords()).norm() <= 1e-10 * hv.norm());
    }

    #[test]
    fn free_hessian_is_kinetic() {
        let p = triangle(1.0, 4, 1.0);
        let h = hessian(&p, &Potential::Free).unwrap();
        let kin = kinetic_diagonal(1.0, 4);
        assert_eq!(h.matrix(), &DMatrix::from_diagonal(&kin));
    }

    #[test]
    fn brackets_vanish_on_translations() {
        let mut rng = StdRng::seed_from_u64(3);
        let q = random_loop(&mut rng, 6);
        let t = translation_field(1.0, 6, 0.3, -0.8);
        let f = random_field(&mut rng, 6);
        let pot = Potential::LennardJones;
        assert!(bracket(&q, &pot, &[&t, &f, &f]).unwrap().abs() < 1e-10);
        assert!(bracket(&q, &pot, &[&f, &f, &f, &t, &f]).unwrap().abs() < 1e-8);
    }

    #[test]
    fn bracket_order_is_validated() {
        let q = triangle(1.0, 4, 1.0);
        let f = TangentField::zeros(1.0, 4);
        let pot = Potential::LennardJones;
        assert!(matches!(bracket(&q, &pot, &[&f, &f]), Err(Error::BracketOrder(2))));
        let seven = vec![&f; 7];
        assert!(matches!(bracket(&q, &pot, &seven), Err(Error::BracketOrder(7))));
    }

    #[test]
    fn representer_closes_the_bracket() {
        let mut rng = StdRng::seed_from_u64(4);
        let q = random_loop(&mut rng, 6);
        let pot = Potential::homogeneous(0.5).unwrap();
        let fs: Vec<TangentField> = (0..6).map(|_| random_field(&mut rng, 6)).collect();
        for n in 3..=6 {
            let all: Vec<&TangentField> = fs[..n].iter().collect();
            let direct = bracket(&q, &pot, &all).unwrap();
            let rep = bracket_representer(&q, &pot, &all[..n - 1]).unwrap();
            let closed = rep.coords().dot(fs[n - 1].coords());
            assert!((direct - closed).abs() <= 1e-11 * direct.abs().max(1.0), "n={n}");
        }
    }

    #[test]
    fn circular_angular_momentum() {
        let mut p = LoopPath::zeros(2.0, 4);
        p.set_cos(0, Axis::X, 1, 1.0);
        p.set_sin(0, Axis::Y, 1, 1.0);
        assert!((angular_momentum(&p) - std::f64::consts::PI).abs() < 1e-14);
    }
}
