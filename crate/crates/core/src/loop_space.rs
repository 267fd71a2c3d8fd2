//! Periodic planar three-body loops as truncated real Fourier series.
//!
//! Every channel (body `k`, coordinate `c`) is expanded in the orthonormal
//! trigonometric basis of `L²[0, T]`:
//!
//! ```text
//! e_0 = 1/√T,   e_{m,cos} = √(2/T)·cos(mωt),   e_{m,sin} = √(2/T)·sin(mωt),   ω = 2π/T
//! ```
//!
//! Coordinates in this basis are what the linear algebra sees, so the `L²`
//! pairing is the Euclidean dot product and group actions are orthogonal
//! matrices. Raw amplitudes `a_m`, `b_m` of `a_0 + Σ a_m cos + b_m sin` are
//! available through accessors and are what the orbit file stores.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Number of bodies.
pub const BODIES: usize = 3;
/// Number of real channels (body × planar coordinate).
pub const CHANNELS: usize = 6;
/// Default Fourier truncation order.
pub const DEFAULT_MODES: usize = 64;

/// Planar coordinate selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X = 0,
    Y = 1,
}

/// Channel index of `(body, axis)`.
#[inline]
pub fn channel(body: usize, axis: Axis) -> usize {
    2 * body + axis as usize
}

/// Coefficients per channel for truncation order `n_modes`.
#[inline]
pub fn channel_len(n_modes: usize) -> usize {
    2 * n_modes + 1
}

/// Total dimension of loop space.
#[inline]
pub fn dimension(n_modes: usize) -> usize {
    CHANNELS * channel_len(n_modes)
}

/// Offset of the cosine coefficient of mode `m` inside a channel.
#[inline]
pub fn cos_slot(m: usize) -> usize {
    if m == 0 {
        0
    } else {
        2 * m - 1
    }
}

/// Offset of the sine coefficient of mode `m ≥ 1` inside a channel.
#[inline]
pub fn sin_slot(m: usize) -> usize {
    debug_assert!(m >= 1);
    2 * m
}

/// Mode number of the channel offset `slot`.
#[inline]
pub fn slot_mode(slot: usize) -> usize {
    slot.div_ceil(2)
}

/// Common access to the coefficient storage of loops and tangent fields.
pub trait Series: Sized + Clone {
    fn period(&self) -> f64;
    fn n_modes(&self) -> usize;
    /// Coordinates in the orthonormal trigonometric basis.
    fn coords(&self) -> &DVector<f64>;
    /// Same period and truncation, new coordinates.
    fn with_coords(&self, coords: DVector<f64>) -> Self;

    fn angular_frequency(&self) -> f64 {
        2.0 * PI / self.period()
    }

    /// Raw cosine amplitude `a_m` of `(body, axis)`.
    fn cos_coeff(&self, body: usize, axis: Axis, m: usize) -> f64 {
        let i = channel(body, axis) * channel_len(self.n_modes()) + cos_slot(m);
        self.coords()[i] / amplitude_scale(self.period(), m)
    }

    /// Raw sine amplitude `b_m` of `(body, axis)`, `m ≥ 1`.
    fn sin_coeff(&self, body: usize, axis: Axis, m: usize) -> f64 {
        let i = channel(body, axis) * channel_len(self.n_modes()) + sin_slot(m);
        self.coords()[i] / amplitude_scale(self.period(), m)
    }

    /// Positions (or displacements) of the three bodies at time `t`.
    fn evaluate(&self, t: f64) -> [[f64; 2]; BODIES] {
        let n = self.n_modes();
        let len = channel_len(n);
        let basis = basis_row(self.period(), n, t);
        let c = self.coords();
        let mut out = [[0.0; 2]; BODIES];
        for (body, pos) in out.iter_mut().enumerate() {
            for axis in [Axis::X, Axis::Y] {
                let off = channel(body, axis) * len;
                pos[axis as usize] = (0..len).map(|j| c[off + j] * basis[j]).sum();
            }
        }
        out
    }

    /// `L²` norm over one period.
    fn norm(&self) -> f64 {
        self.coords().norm()
    }
}

/// Ratio between orthonormal coordinate and raw amplitude for mode `m`.
#[inline]
pub fn amplitude_scale(period: f64, m: usize) -> f64 {
    if m == 0 {
        period.sqrt()
    } else {
        (period / 2.0).sqrt()
    }
}

/// Values of the `2N+1` orthonormal basis functions at time `t`.
pub fn basis_row(period: f64, n_modes: usize, t: f64) -> Vec<f64> {
    let omega = 2.0 * PI / period;
    let c0 = 1.0 / period.sqrt();
    let cm = (2.0 / period).sqrt();
    let mut row = vec![0.0; channel_len(n_modes)];
    row[0] = c0;
    for m in 1..=n_modes {
        let (s, c) = (m as f64 * omega * t).sin_cos();
        row[cos_slot(m)] = cm * c;
        row[sin_slot(m)] = cm * s;
    }
    row
}

macro_rules! series_type {
    ($name:ident) => {
        impl $name {
            /// All-zero series.
            pub fn zeros(period: f64, n_modes: usize) -> Self {
                Self {
                    period,
                    n_modes,
                    coords: DVector::zeros(dimension(n_modes)),
                }
            }

            /// Wrap orthonormal-basis coordinates.
            pub fn from_coords(period: f64, n_modes: usize, coords: DVector<f64>) -> Result<Self> {
                if !(period > 0.0 && period.is_finite()) {
                    return Err(Error::InvalidConfig(format!("period must be positive, got {period}")));
                }
                if coords.len() != dimension(n_modes) {
                    return Err(Error::Dimension(format!(
                        "expected {} coordinates for N = {n_modes}, got {}",
                        dimension(n_modes),
                        coords.len()
                    )));
                }
                Ok(Self { period, n_modes, coords })
            }

            pub fn into_coords(self) -> DVector<f64> {
                self.coords
            }

            /// Set the raw cosine amplitude `a_m` of `(body, axis)`.
            pub fn set_cos(&mut self, body: usize, axis: Axis, m: usize, value: f64) {
                let i = channel(body, axis) * channel_len(self.n_modes) + cos_slot(m);
                self.coords[i] = value * amplitude_scale(self.period, m);
            }

            /// Set the raw sine amplitude `b_m` of `(body, axis)`.
            pub fn set_sin(&mut self, body: usize, axis: Axis, m: usize, value: f64) {
                let i = channel(body, axis) * channel_len(self.n_modes) + sin_slot(m);
                self.coords[i] = value * amplitude_scale(self.period, m);
            }

            /// Fourier analysis of `samples[j] = positions at t_j = jT/len`.
            ///
            /// Exact for band-limited data when `samples.len() ≥ 2N + 1`.
            pub fn from_samples(period: f64, n_modes: usize, samples: &[[[f64; 2]; BODIES]]) -> Result<Self> {
                let count = samples.len();
                if count < channel_len(n_modes) {
                    return Err(Error::Dimension(format!(
                        "need at least {} samples for N = {n_modes}, got {count}",
                        channel_len(n_modes)
                    )));
                }
                let mut out = Self::zeros(period, n_modes);
                let len = channel_len(n_modes);
                let weight = period / count as f64;
                for (j, s) in samples.iter().enumerate() {
                    let t = j as f64 * period / count as f64;
                    let row = basis_row(period, n_modes, t);
                    for body in 0..BODIES {
                        for axis in [Axis::X, Axis::Y] {
                            let off = channel(body, axis) * len;
                            let v = s[body][axis as usize] * weight;
                            for (k, b) in row.iter().enumerate() {
                                out.coords[off + k] += v * b;
                            }
                        }
                    }
                }
                // The Nyquist cosine aliases onto itself when count == 2N; undo the doubling.
                if count == 2 * n_modes {
                    for ch in 0..CHANNELS {
                        out.coords[ch * len + cos_slot(n_modes)] *= 0.5;
                    }
                }
                Ok(out)
            }
        }

        impl Series for $name {
            fn period(&self) -> f64 {
                self.period
            }
            fn n_modes(&self) -> usize {
                self.n_modes
            }
            fn coords(&self) -> &DVector<f64> {
                &self.coords
            }
            fn with_coords(&self, coords: DVector<f64>) -> Self {
                debug_assert_eq!(coords.len(), self.coords.len());
                Self {
                    period: self.period,
                    n_modes: self.n_modes,
                    coords,
                }
            }
        }
    };
}

/// A `T`-periodic trajectory of the three bodies.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopPath {
    period: f64,
    n_modes: usize,
    coords: DVector<f64>,
}

/// A periodic variation `δq` of a loop.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentField {
    period: f64,
    n_modes: usize,
    coords: DVector<f64>,
}

series_type!(LoopPath);
series_type!(TangentField);

impl LoopPath {
    /// `q + s·δq`.
    pub fn displaced(&self, field: &TangentField, s: f64) -> LoopPath {
        self.with_coords(&self.coords + field.coords() * s)
    }

    /// `q − p` as a tangent field.
    pub fn difference(&self, other: &LoopPath) -> TangentField {
        TangentField {
            period: self.period,
            n_modes: self.n_modes,
            coords: &self.coords - other.coords(),
        }
    }

    /// Remove the constant part of the centre of mass.
    pub fn pin_center_of_mass(&mut self) {
        let len = channel_len(self.n_modes);
        for axis in [Axis::X, Axis::Y] {
            let idx: Vec<usize> = (0..BODIES).map(|b| channel(b, axis) * len).collect();
            let mean = idx.iter().map(|&i| self.coords[i]).sum::<f64>() / BODIES as f64;
            for i in idx {
                self.coords[i] -= mean;
            }
        }
    }

    /// Same coefficients reinterpreted with a new period (amplitudes preserved).
    pub fn with_period(&self, period: f64) -> LoopPath {
        let scale = (period / self.period).sqrt();
        LoopPath {
            period,
            n_modes: self.n_modes,
            coords: &self.coords * scale,
        }
    }

    /// Truncate or zero-pad to `n_modes`.
    pub fn resized(&self, n_modes: usize) -> LoopPath {
        let mut out = LoopPath::zeros(self.period, n_modes);
        let (old, new) = (channel_len(self.n_modes), channel_len(n_modes));
        let keep = old.min(new);
        for ch in 0..CHANNELS {
            for j in 0..keep {
                out.coords[ch * new + j] = self.coords[ch * old + j];
            }
        }
        out
    }
}

impl TangentField {
    pub fn scaled(&self, s: f64) -> TangentField {
        self.with_coords(&self.coords * s)
    }

    pub fn add(&self, other: &TangentField) -> TangentField {
        self.with_coords(&self.coords + other.coords())
    }

    /// Unit-norm copy; `None` for the zero field.
    pub fn normalized(&self) -> Option<TangentField> {
        let n = self.coords.norm();
        (n > 0.0).then(|| self.scaled(1.0 / n))
    }
}

fn check_compatible<A: Series, B: Series>(f: &A, g: &B) -> Result<()> {
    if f.n_modes() != g.n_modes() || (f.period() - g.period()).abs() > 1e-12 * f.period() {
        return Err(Error::Dimension(format!(
            "fields differ in truncation or period: (N={}, T={}) vs (N={}, T={})",
            f.n_modes(),
            f.period(),
            g.n_modes(),
            g.period()
        )));
    }
    Ok(())
}

/// `∫₀ᵀ Σ_{k,c} f·g dt`, exact from the coefficients.
pub fn inner_product<A: Series, B: Series>(f: &A, g: &B) -> Result<f64> {
    check_compatible(f, g)?;
    Ok(f.coords().dot(g.coords()))
}

/// Spectral time derivative.
pub fn time_derivative<A: Series>(series: &A) -> TangentField {
    let n = series.n_modes();
    let len = channel_len(n);
    let omega = series.angular_frequency();
    let c = series.coords();
    let mut out = DVector::zeros(c.len());
    for ch in 0..CHANNELS {
        let off = ch * len;
        for m in 1..=n {
            let k = m as f64 * omega;
            let (a, b) = (c[off + cos_slot(m)], c[off + sin_slot(m)]);
            out[off + cos_slot(m)] = k * b;
            out[off + sin_slot(m)] = -k * a;
        }
    }
    TangentField {
        period: series.period(),
        n_modes: n,
        coords: out,
    }
}

/// Constant displacement `(dx, dy)` of every body.
pub fn translation_field(period: f64, n_modes: usize, dx: f64, dy: f64) -> TangentField {
    let mut f = TangentField::zeros(period, n_modes);
    for body in 0..BODIES {
        f.set_cos(body, Axis::X, 0, dx);
        f.set_cos(body, Axis::Y, 0, dy);
    }
    f
}

/// Infinitesimal rigid rotation `δr_k = (−r_{k,y}, r_{k,x})`.
pub fn rotation_field(path: &LoopPath) -> TangentField {
    let len = channel_len(path.n_modes);
    let mut out = DVector::zeros(path.coords.len());
    for body in 0..BODIES {
        let (xo, yo) = (channel(body, Axis::X) * len, channel(body, Axis::Y) * len);
        for j in 0..len {
            out[xo + j] = -path.coords[yo + j];
            out[yo + j] = path.coords[xo + j];
        }
    }
    TangentField {
        period: path.period,
        n_modes: path.n_modes,
        coords: out,
    }
}

/// Unit-normalised symmetry directions: x-translation, y-translation,
/// rotation, time shift.
pub fn trivial_modes(path: &LoopPath) -> Result<[TangentField; 4]> {
    let (t, n) = (path.period, path.n_modes);
    let tx = translation_field(t, n, 1.0, 0.0).normalized().expect("nonzero");
    let ty = translation_field(t, n, 0.0, 1.0).normalized().expect("nonzero");
    let rot = rotation_field(path)
        .normalized()
        .ok_or_else(|| Error::Rank("rotation field vanishes (all bodies at the origin)".into()))?;
    let dt = time_derivative(path)
        .normalized()
        .ok_or_else(|| Error::Rank("time derivative vanishes (static loop)".into()))?;
    Ok([tx, ty, rot, dt])
}

/// Orthonormal basis (columns) spanning the given fields, dropping
/// directions whose residual norm falls below `drop_tol`.
pub fn orthonormal_span(fields: &[DVector<f64>], drop_tol: f64) -> DMatrix<f64> {
    let dim = fields.first().map_or(0, |f| f.len());
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for f in fields {
        let mut v = f.clone();
        for _ in 0..2 {
            for c in &cols {
                let p = c.dot(&v);
                v.axpy(-p, c, 1.0);
            }
        }
        let n = v.norm();
        if n > drop_tol {
            cols.push(v / n);
        }
    }
    if cols.is_empty() {
        return DMatrix::zeros(dim, 0);
    }
    DMatrix::from_columns(&cols)
}

/// Equispaced collocation grid used for every nonlinear integrand.
///
/// The point count is a multiple of 12 not smaller than `4(2N+1)`, so the
/// time shifts by `T/6`, `T/3`, `T/2` and the reversal `t → −t` permute the
/// nodes among themselves and the discrete action stays exactly
/// invariant under the symmetry group.
#[derive(Debug, Clone)]
pub struct Collocation {
    period: f64,
    n_modes: usize,
    /// `points × (2N+1)` matrix of basis values.
    basis: DMatrix<f64>,
}

impl Collocation {
    pub fn new(period: f64, n_modes: usize) -> Self {
        let points = collocation_points(n_modes);
        let len = channel_len(n_modes);
        let mut basis = DMatrix::zeros(points, len);
        for j in 0..points {
            let t = j as f64 * period / points as f64;
            let row = basis_row(period, n_modes, t);
            for k in 0..len {
                basis[(j, k)] = row[k];
            }
        }
        Self { period, n_modes, basis }
    }

    pub fn for_series<A: Series>(s: &A) -> Self {
        Self::new(s.period(), s.n_modes())
    }

    pub fn points(&self) -> usize {
        self.basis.nrows()
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Quadrature weight of every node.
    pub fn weight(&self) -> f64 {
        self.period / self.points() as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.period / self.points() as f64
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Channel values at all nodes: `points × 6`.
    pub fn synthesize(&self, coords: &DVector<f64>) -> DMatrix<f64> {
        let len = channel_len(self.n_modes);
        let x = DMatrix::from_column_slice(len, CHANNELS, coords.as_slice());
        &self.basis * x
    }

    /// Coordinates of `g` with `⟨g, e⟩ = ∫ Σ_ch F_ch e_ch dt` for node values `F` (`points × 6`).
    pub fn project(&self, values: &DMatrix<f64>) -> DVector<f64> {
        let r = self.basis.tr_mul(values) * self.weight();
        DVector::from_column_slice(r.as_slice())
    }
}

/// Number of collocation nodes for truncation order `n_modes`.
pub fn collocation_points(n_modes: usize) -> usize {
    let min = 4 * channel_len(n_modes);
    min.div_ceil(12) * 12
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand::rngs::StdRng;

    fn random_loop(rng: &mut StdRng, period: f64, n: usize) -> LoopPath {
        let c = DVector::from_fn(dimension(n), |_, _| rng.gen_range(-1.0..1.0));
        LoopPath::from_coords(period, n, c).unwrap()
    }

    /// Direct per-term synthesis from raw amplitudes.
    fn naive_eval(p: &LoopPath, t: f64) -> [[f64; 2]; 3] {
        let w = 2.0 * PI / p.period();
        let mut out = [[0.0; 2]; 3];
        for (b, pos) in out.iter_mut().enumerate() {
            for axis in [Axis::X, Axis::Y] {
                let mut v = p.cos_coeff(b, axis, 0);
                for m in 1..=p.n_modes() {
                    let arg = m as f64 * w * t;
                    v += p.cos_coeff(b, axis, m) * arg.cos() + p.sin_coeff(b, axis, m) * arg.sin();
                }
                pos[axis as usize] = v;
            }
        }
        out
    }

    #[test]
    fn zero_loop_sits_at_origin() {
        let p = LoopPath::zeros(2.0, 8);
        for t in [0.0, 0.3, 1.7] {
            assert_eq!(p.evaluate(t), [[0.0; 2]; 3]);
        }
    }

    #[test]
    fn single_cosine_at_t0() {
        let mut p = LoopPath::zeros(1.3, 5);
        p.set_cos(0, Axis::X, 1, 1.0);
        let r = p.evaluate(0.0);
        assert!((r[0][0] - 1.0).abs() < 1e-15);
        assert_eq!(r[0][1], 0.0);
        assert_eq!(r[1], [0.0, 0.0]);
        assert_eq!(r[2], [0.0, 0.0]);
    }

    #[test]
    fn evaluate_matches_direct_summation() {
        let mut rng = StdRng::seed_from_u64(7);
        let p = random_loop(&mut rng, 2.5, 12);
        let t = 0.3 * p.period();
        let (a, b) = (p.evaluate(t), naive_eval(&p, t));
        for k in 0..3 {
            for c in 0..2 {
                assert!((a[k][c] - b[k][c]).abs() < 1e-14 * (1.0 + b[k][c].abs()) * 10.0);
            }
        }
    }

    #[test]
    fn periodicity() {
        let mut rng = StdRng::seed_from_u64(3);
        let p = random_loop(&mut rng, 1.7, 10);
        let (a, b) = (p.evaluate(0.41), p.evaluate(0.41 + 1.7));
        for k in 0..3 {
            for c in 0..2 {
                assert!((a[k][c] - b[k][c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn parseval_from_raw_amplitudes() {
        let mut rng = StdRng::seed_from_u64(11);
        let p = random_loop(&mut rng, 3.0, 6);
        let mut expected = 0.0;
        for b in 0..3 {
            for axis in [Axis::X, Axis::Y] {
                let a0 = p.cos_coeff(b, axis, 0);
                let mut s = a0 * a0;
                for m in 1..=6 {
                    s += 0.5 * (p.cos_coeff(b, axis, m).powi(2) + p.sin_coeff(b, axis, m).powi(2));
                }
                expected += 3.0 * s;
            }
        }
        let got = inner_product(&p, &p).unwrap();
        assert!((got - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn cos_and_sin_of_same_frequency_are_orthogonal() {
        let mut f = TangentField::zeros(1.0, 4);
        let mut g = TangentField::zeros(1.0, 4);
        f.set_cos(1, Axis::Y, 3, 1.0);
        g.set_sin(1, Axis::Y, 3, 1.0);
        assert_eq!(inner_product(&f, &g).unwrap(), 0.0);
        let u = f.normalized().unwrap();
        assert!((inner_product(&u, &u).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inner_product_matches_trapezoid_quadrature() {
        let mut rng = StdRng::seed_from_u64(5);
        let n = 9;
        let f = random_loop(&mut rng, 2.0, n);
        let g = random_loop(&mut rng, 2.0, n);
        let pts = 16 * n;
        let mut q = 0.0;
        for j in 0..pts {
            let t = j as f64 * 2.0 / pts as f64;
            let (a, b) = (f.evaluate(t), g.evaluate(t));
            for k in 0..3 {
                q += a[k][0] * b[k][0] + a[k][1] * b[k][1];
            }
        }
        q *= 2.0 / pts as f64;
        let exact = inner_product(&f, &g).unwrap();
        assert!((q - exact).abs() < 1e-12 * (1.0 + exact.abs()));
    }

    #[test]
    fn mismatched_fields_are_rejected() {
        let f = TangentField::zeros(1.0, 4);
        let g = TangentField::zeros(1.0, 5);
        assert!(matches!(inner_product(&f, &g), Err(Error::Dimension(_))));
        let h = TangentField::zeros(2.0, 4);
        assert!(inner_product(&f, &h).is_err());
    }

    #[test]
    fn derivative_of_cosine() {
        let mut p = LoopPath::zeros(2.0, 3);
        p.set_cos(2, Axis::X, 1, 1.0);
        let d = time_derivative(&p);
        let w = PI;
        assert!((d.sin_coeff(2, Axis::X, 1) + w).abs() < 1e-14);
        assert!(d.cos_coeff(2, Axis::X, 1).abs() < 1e-15);
        let mut c = LoopPath::zeros(2.0, 3);
        c.set_cos(0, Axis::Y, 0, 4.0);
        assert_eq!(time_derivative(&c).norm(), 0.0);
    }

    #[test]
    fn derivative_matches_central_difference() {
        let mut rng = StdRng::seed_from_u64(9);
        let p = random_loop(&mut rng, 1.5, 8);
        let d = time_derivative(&p);
        let h = 1e-6 * p.period();
        for t in [0.1, 0.77, 1.2] {
            let (a, b, e) = (p.evaluate(t + h), p.evaluate(t - h), d.evaluate(t));
            for k in 0..3 {
                for c in 0..2 {
                    let fd = (a[k][c] - b[k][c]) / (2.0 * h);
                    assert!((fd - e[k][c]).abs() <= 1e-8 * (1.0 + e[k][c].abs()) * 100.0);
                }
            }
        }
    }

    #[test]
    fn second_derivative_scales_by_minus_m2_omega2() {
        let mut rng = StdRng::seed_from_u64(13);
        let p = random_loop(&mut rng, 0.9, 7);
        let dd = time_derivative(&time_derivative(&p));
        let w = p.angular_frequency();
        for b in 0..3 {
            for axis in [Axis::X, Axis::Y] {
                assert_eq!(dd.cos_coeff(b, axis, 0), 0.0);
                for m in 1..=7 {
                    let k = -(m as f64 * w).powi(2);
                    assert!((dd.cos_coeff(b, axis, m) - k * p.cos_coeff(b, axis, m)).abs() < 1e-10 * k.abs());
                    assert!((dd.sin_coeff(b, axis, m) - k * p.sin_coeff(b, axis, m)).abs() < 1e-10 * k.abs());
                }
            }
        }
    }

    #[test]
    fn sampled_round_trip() {
        let mut rng = StdRng::seed_from_u64(17);
        let n = 10;
        let p = random_loop(&mut rng, 1.1, n);
        for count in [2 * n + 1, 3 * n + 4] {
            let samples: Vec<_> = (0..count).map(|j| p.evaluate(j as f64 * 1.1 / count as f64)).collect();
            let q = LoopPath::from_samples(1.1, n, &samples).unwrap();
            assert!((q.coords() - p.coords()).amax() < 1e-12);
        }
    }

    #[test]
    fn translation_modes() {
        let mut p = LoopPath::zeros(1.0, 4);
        p.set_sin(0, Axis::X, 1, 1.0);
        p.set_sin(1, Axis::Y, 2, 0.5);
        let [tx, ty, _, _] = trivial_modes(&p).unwrap();
        let norm = (3.0f64).sqrt();
        for r in tx.evaluate(0.37) {
            assert!((r[0] - 1.0 / norm).abs() < 1e-14 && r[1].abs() < 1e-15);
        }
        assert_eq!(inner_product(&tx, &ty).unwrap(), 0.0);
    }

    #[test]
    fn static_loop_has_no_time_shift_mode() {
        let mut p = LoopPath::zeros(1.0, 4);
        p.set_cos(0, Axis::X, 0, 1.0);
        assert!(matches!(trivial_modes(&p), Err(Error::Rank(_))));
    }

    #[test]
    fn collocation_round_trip() {
        let mut rng = StdRng::seed_from_u64(23);
        let p = random_loop(&mut rng, 1.0, 6);
        let grid = Collocation::for_series(&p);
        assert_eq!(grid.points() % 12, 0);
        let vals = grid.synthesize(p.coords());
        let back = grid.project(&vals);
        assert!((back - p.coords()).amax() < 1e-13);
        let r = p.evaluate(grid.time(5));
        assert!((vals[(5, channel(1, Axis::Y))] - r[1][1]).abs() < 1e-13);
    }

    #[test]
    fn center_of_mass_pinning_keeps_oscillation() {
        let mut rng = StdRng::seed_from_u64(29);
        let mut p = random_loop(&mut rng, 1.0, 4);
        let before = p.sin_coeff(0, Axis::X, 1) + p.sin_coeff(1, Axis::X, 1) + p.sin_coeff(2, Axis::X, 1);
        p.pin_center_of_mass();
        for axis in [Axis::X, Axis::Y] {
            let s: f64 = (0..3).map(|b| p.cos_coeff(b, axis, 0)).sum();
            assert!(s.abs() < 1e-14);
        }
        let after = p.sin_coeff(0, Axis::X, 1) + p.sin_coeff(1, Axis::X, 1) + p.sin_coeff(2, Axis::X, 1);
        assert!((before - after).abs() < 1e-14);
    }
}
