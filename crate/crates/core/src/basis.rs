//! Dirichlet eigenpairs of `-Δ` on the unit box, fractional Sobolev norms and
//! the sup-norm embedding constant.
//!
//! On `(0,1)^d` the eigenfunctions are explicit products of sines,
//! `e_k(x) = Π_j √2 sin(k_j π x_j)`, with eigenvalue `π² Σ_j k_j²`. Modes are
//! sorted by eigenvalue; ties in two dimensions are broken lexicographically on
//! the multi-index so that mode numbering is deterministic.

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sorted Dirichlet eigenpairs on the unit box.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenBasis {
    dim: usize,
    eigenvalues: Vec<f64>,
    indices: Vec<[u32; 2]>,
}

impl EigenBasis {
    /// Enumerates the `modes` smallest eigenpairs in dimension `dim`.
    pub fn new(dim: usize, modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::EmptyBasis);
        }
        let indices: Vec<[u32; 2]> = match dim {
            1 => (1..=modes as u32).map(|k| [k, 0]).collect(),
            2 => smallest_lattice_points(modes),
            d => return Err(Error::UnsupportedDimension(d)),
        };
        let eigenvalues = indices
            .iter()
            .map(|ix| PI * PI * ix[..dim].iter().map(|&k| (k as f64).powi(2)).sum::<f64>())
            .collect();
        Ok(Self {
            dim,
            eigenvalues,
            indices,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    /// Number of modes `M`.
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `λ_k` for the zero-based mode `k`.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        self.eigenvalues[k]
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// The `(k)` or `(k₁,k₂)` generating mode `k`.
    pub fn multi_index(&self, k: usize) -> &[u32] {
        &self.indices[k][..self.dim]
    }

    /// Largest one-dimensional wavenumber appearing in any mode.
    pub fn max_wavenumber(&self) -> u32 {
        self.indices
            .iter()
            .flat_map(|ix| ix[..self.dim].iter().copied())
            .max()
            .unwrap_or(0)
    }

    /// `λ_k^{γ/2}`, the temporal frequency of mode `k` under `(-Δ)^γ`.
    pub fn frequency(&self, k: usize, gamma: f64) -> f64 {
        self.eigenvalues[k].powf(gamma / 2.0)
    }

    /// `e_k(x)` without bounds checking on `x`.
    #[inline]
    pub fn mode_value(&self, k: usize, point: &[f64]) -> f64 {
        let ix = &self.indices[k];
        let mut v = 1.0;
        for j in 0..self.dim {
            v *= SQRT_2 * (ix[j] as f64 * PI * point[j]).sin();
        }
        v
    }

    /// `e_k(x)` with validation of the mode index and the point.
    pub fn eigenfunction(&self, k: usize, point: &[f64]) -> Result<f64> {
        if k >= self.len() {
            return Err(Error::ModeOutOfRange {
                index: k,
                modes: self.len(),
            });
        }
        self.check_point(point)?;
        Ok(self.mode_value(k, point))
    }

    pub(crate) fn check_point(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.dim {
            return Err(Error::PointDimension {
                expected: self.dim,
                got: point.len(),
            });
        }
        if point.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(Error::PointOutsideDomain {
                point: point.to_vec(),
            });
        }
        Ok(())
    }

    /// `λ_k / k^{2/d}` for the one-based rank `k`.
    pub fn weyl_ratio(&self, rank: usize) -> Result<f64> {
        if rank == 0 || rank > self.len() {
            return Err(Error::ModeOutOfRange {
                index: rank,
                modes: self.len(),
            });
        }
        Ok(self.eigenvalues[rank - 1] / (rank as f64).powf(2.0 / self.dim as f64))
    }

    /// `Σ_{k≤M} λ_k^p`.
    pub fn power_sum(&self, p: f64) -> f64 {
        self.eigenvalues.iter().map(|l| l.powf(p)).sum()
    }

    /// Upper bound on the omitted tail `Σ_{k>M} λ_k^p`.
    ///
    /// Uses `λ_k ≥ c_d k^{2/d}` with `c_1 = π²` (exact) and `c_2 = 4π` (each
    /// lattice point owns a unit square inside the quarter disc), followed by
    /// an integral comparison. Returns `None` when the series diverges, i.e.
    /// when `2p/d ≥ -1`.
    pub fn power_tail_bound(&self, p: f64) -> Option<f64> {
        let d = self.dim as f64;
        let exponent = 2.0 * p / d;
        if exponent >= -1.0 {
            return None;
        }
        let c = if self.dim == 1 { PI * PI } else { 4.0 * PI };
        let m = self.len() as f64;
        Some(c.powf(p) * m.powf(1.0 + exponent) / (-1.0 - exponent))
    }

    /// Sup-norm embedding constant of the span of the first `M` modes in
    /// `H_r`, estimated on a uniform probe grid with `probe` points per axis.
    pub fn embedding_constant(&self, r: f64, probe: usize) -> Result<EmbeddingConstant> {
        let d = self.dim as f64;
        if r <= d / 2.0 {
            return Err(Error::Window(format!(
                "embedding requires r > d/2 (got r = {r}, d = {})",
                self.dim
            )));
        }
        if probe < 2 {
            return Err(Error::GridMismatch("probe grid needs at least 2 points per axis".into()));
        }
        let weights: Vec<f64> = self.eigenvalues.iter().map(|l| l.powf(-r)).collect();
        let grid = QuadratureGrid::new(self.dim, probe)?;
        let mut sup = 0.0_f64;
        for node in grid.nodes() {
            let f: f64 = weights
                .iter()
                .enumerate()
                .map(|(k, w)| w * self.mode_value(k, node).powi(2))
                .sum();
            sup = sup.max(f);
        }

        // |∂_j F| ≤ Σ_k λ_k^{-r} 2|e_k||∂_j e_k| ≤ Σ_k λ_k^{-r} 2^{d+1} π k_j,
        // and every point lies within (h/2)√d of a probe node.
        let scale = 2f64.powi(self.dim as i32 + 1) * PI;
        let grad_sq: f64 = (0..self.dim)
            .map(|j| {
                let g: f64 = weights
                    .iter()
                    .zip(&self.indices)
                    .map(|(w, ix)| w * scale * ix[j] as f64)
                    .sum();
                g * g
            })
            .sum();
        let h = 1.0 / (probe - 1) as f64;
        let slack = 0.5 * h * grad_sq.sqrt();

        let box_factor = 2f64.powi(self.dim as i32);
        let partial: f64 = weights.iter().sum();
        let tail = self.power_tail_bound(-r).unwrap_or(f64::INFINITY);
        Ok(EmbeddingConstant {
            r,
            probe,
            grid_value: sup.sqrt(),
            certified: (sup + slack).sqrt(),
            crude_bound: (box_factor * partial).sqrt(),
            tail_bound: box_factor * tail,
            infinite_bound: (box_factor * (partial + tail)).sqrt(),
        })
    }
}

/// Lattice points `(k₁,k₂)`, `k_i ≥ 1`, with the `m` smallest values of
/// `k₁²+k₂²`, ties broken lexicographically.
fn smallest_lattice_points(m: usize) -> Vec<[u32; 2]> {
    let mut radius_sq: u64 = 2;
    loop {
        let kmax = (radius_sq as f64).sqrt() as u32 + 1;
        let mut pts: Vec<[u32; 2]> = Vec::new();
        for k1 in 1..=kmax {
            for k2 in 1..=kmax {
                if (k1 as u64).pow(2) + (k2 as u64).pow(2) <= radius_sq {
                    pts.push([k1, k2]);
                }
            }
        }
        if pts.len() >= m {
            pts.sort_by_key(|&[a, b]| ((a as u64).pow(2) + (b as u64).pow(2), a, b));
            pts.truncate(m);
            return pts;
        }
        radius_sq *= 2;
    }
}

/// Output of [`EigenBasis::embedding_constant`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingConstant {
    pub r: f64,
    pub probe: usize,
    /// `max_grid (Σ_{k≤M} λ_k^{-r} e_k(x)²)^{1/2}`; a lower bound of the sup.
    pub grid_value: f64,
    /// Grid value plus a Lipschitz correction for off-grid points; an upper
    /// bound of the sup over the whole box. This is the clamp radius factor
    /// used by the solver.
    pub certified: f64,
    /// `(2^d Σ_{k≤M} λ_k^{-r})^{1/2}`.
    pub crude_bound: f64,
    /// `2^d Σ_{k>M} λ_k^{-r}` bounded analytically.
    pub tail_bound: f64,
    /// `(2^d Σ_{k≥1} λ_k^{-r})^{1/2}` with the analytic tail.
    pub infinite_bound: f64,
}

/// Uniform closed grid on `[0,1]^d` with composite trapezoid weights.
///
/// The nodes double as the spatial cells of the small-jump noise surrogate:
/// cell `i` is the box of side `h` centred at node `i`, clipped to the
/// domain, and its volume equals the trapezoid weight.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureGrid {
    dim: usize,
    per_axis: usize,
    nodes: Vec<[f64; 2]>,
    weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn new(dim: usize, per_axis: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if per_axis < 2 {
            return Err(Error::GridMismatch("grid needs at least 2 points per axis".into()));
        }
        let h = 1.0 / (per_axis - 1) as f64;
        let axis: Vec<f64> = (0..per_axis).map(|i| i as f64 * h).collect();
        let axis_w: Vec<f64> = (0..per_axis)
            .map(|i| if i == 0 || i == per_axis - 1 { 0.5 * h } else { h })
            .collect();
        let (nodes, weights) = if dim == 1 {
            (axis.iter().map(|&x| [x, 0.0]).collect(), axis_w)
        } else {
            let mut nodes = Vec::with_capacity(per_axis * per_axis);
            let mut weights = Vec::with_capacity(per_axis * per_axis);
            for (i, &x) in axis.iter().enumerate() {
                for (j, &y) in axis.iter().enumerate() {
                    nodes.push([x, y]);
                    weights.push(axis_w[i] * axis_w[j]);
                }
            }
            (nodes, weights)
        };
        Ok(Self {
            dim,
            per_axis,
            nodes,
            weights,
        })
    }

    /// Default grid for a basis: `max(4M+1, 257)` points per axis.
    pub fn for_basis(basis: &EigenBasis) -> Self {
        let n = (4 * basis.len() + 1).max(257);
        Self::new(basis.dimension(), n).expect("basis dimension is validated")
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.per_axis - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Node coordinates, each a slice of length `d`.
    pub fn nodes(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.nodes.iter().map(move |n| &n[..self.dim])
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i][..self.dim]
    }

    /// Trapezoid weights; equal to the cell volumes.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Index of the cell containing `point` (nearest node).
    pub fn cell_of(&self, point: &[f64]) -> usize {
        let h = self.spacing();
        let axis = |x: f64| ((x / h).round() as usize).min(self.per_axis - 1);
        match self.dim {
            1 => axis(point[0]),
            _ => axis(point[0]) * self.per_axis + axis(point[1]),
        }
    }

    /// True when some coordinate of `point` sits exactly on a cell face.
    pub fn on_cell_face(&self, point: &[f64]) -> bool {
        let h = self.spacing();
        point.iter().any(|&x| {
            let s = x / h - 0.5;
            s == s.round()
        })
    }

    /// Checks the resolution requirement of at least four points per
    /// oscillation of the highest wavenumber in `basis`.
    pub fn check_resolves(&self, basis: &EigenBasis) -> Result<()> {
        if self.dim != basis.dimension() {
            return Err(Error::GridMismatch(format!(
                "grid dimension {} differs from basis dimension {}",
                self.dim,
                basis.dimension()
            )));
        }
        let needed = 4 * basis.max_wavenumber() as usize + 1;
        if self.per_axis < needed {
            return Err(Error::GridMismatch(format!(
                "grid has {} points per axis, at least {needed} needed to resolve wavenumber {}",
                self.per_axis,
                basis.max_wavenumber()
            )));
        }
        Ok(())
    }

    /// Table of `e_k(x_i)`, row-major by mode.
    pub fn tabulate(&self, basis: &EigenBasis) -> ModeTable {
        let n = self.len();
        let mut values = Vec::with_capacity(basis.len() * n);
        for k in 0..basis.len() {
            values.extend(self.nodes().map(|x| basis.mode_value(k, x)));
        }
        ModeTable {
            modes: basis.len(),
            nodes: n,
            values,
        }
    }

    /// `⟨f, e_k⟩` for every mode, from samples of `f` at the nodes.
    pub fn project(&self, basis: &EigenBasis, samples: &[f64]) -> Result<Vec<f64>> {
        self.check_resolves(basis)?;
        if samples.len() != self.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples supplied for a grid of {} nodes",
                samples.len(),
                self.len()
            )));
        }
        Ok((0..basis.len())
            .map(|k| {
                self.nodes()
                    .zip(&self.weights)
                    .zip(samples)
                    .map(|((x, w), f)| w * f * basis.mode_value(k, x))
                    .sum()
            })
            .collect())
    }
}

/// Precomputed eigenfunction values on a grid.
#[derive(Clone, Debug)]
pub struct ModeTable {
    modes: usize,
    nodes: usize,
    values: Vec<f64>,
}

impl ModeTable {
    #[inline]
    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.nodes..(k + 1) * self.nodes]
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// `Σ_k a_k e_k(x_i)` written into `out`.
    pub fn synthesize(&self, coefficients: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (k, &a) in coefficients.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (o, e) in out.iter_mut().zip(self.row(k)) {
                *o += a * e;
            }
        }
    }
}

/// A finite Fourier–sine coefficient vector, an element of `H_r(D)` for all `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    basis: Arc<EigenBasis>,
    coefficients: Vec<f64>,
    pub time: Option<f64>,
}

impl SpectralField {
    /// Builds a field from the leading coefficients; missing modes are zero.
    pub fn new(basis: Arc<EigenBasis>, leading: &[f64]) -> Result<Self> {
        if leading.len() > basis.len() {
            return Err(Error::ModeOutOfRange {
                index: leading.len() - 1,
                modes: basis.len(),
            });
        }
        let mut coefficients = vec![0.0; basis.len()];
        coefficients[..leading.len()].copy_from_slice(leading);
        Ok(Self {
            basis,
            coefficients,
            time: None,
        })
    }

    pub fn zeros(basis: Arc<EigenBasis>) -> Self {
        let coefficients = vec![0.0; basis.len()];
        Self {
            basis,
            coefficients,
            time: None,
        }
    }

    /// Projects grid samples onto the basis by trapezoid quadrature.
    pub fn project(basis: Arc<EigenBasis>, grid: &QuadratureGrid, samples: &[f64]) -> Result<Self> {
        let coefficients = grid.project(&basis, samples)?;
        Ok(Self {
            basis,
            coefficients,
            time: None,
        })
    }

    pub fn basis(&self) -> &Arc<EigenBasis> {
        &self.basis
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// `(Σ_k λ_k^r a_k²)^{1/2}`.
    pub fn sobolev_norm(&self, r: f64) -> f64 {
        sobolev_norm(&self.basis, &self.coefficients, r)
    }

    /// `Σ_k a_k e_k(x)` at each point.
    pub fn evaluate(&self, points: &[&[f64]]) -> Result<Vec<f64>> {
        points
            .iter()
            .map(|p| {
                self.basis.check_point(p)?;
                Ok(self.evaluate_unchecked(p))
            })
            .collect()
    }

    pub(crate) fn evaluate_unchecked(&self, point: &[f64]) -> f64 {
        synthesize_at(&self.basis, &self.coefficients, point)
    }
}

/// `(Σ_k λ_k^r a_k²)^{1/2}` for a raw coefficient slice.
pub fn sobolev_norm(basis: &EigenBasis, coefficients: &[f64], r: f64) -> f64 {
    basis
        .eigenvalues()
        .iter()
        .zip(coefficients)
        .map(|(l, a)| l.powf(r) * a * a)
        .sum::<f64>()
        .sqrt()
}

#[inline]
pub(crate) fn synthesize_at(basis: &EigenBasis, coefficients: &[f64], point: &[f64]) -> f64 {
    coefficients
        .iter()
        .enumerate()
        .filter(|(_, a)| **a != 0.0)
        .map(|(k, a)| a * basis.mode_value(k, point))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    const PI2: f64 = PI * PI;

    #[test]
    fn one_dimensional_eigenvalues() {
        let b = EigenBasis::new(1, 3).unwrap();
        assert_eq!(b.eigenvalues(), &[PI2, 4.0 * PI2, 9.0 * PI2]);
    }

    #[test]
    fn two_dimensional_smallest_mode() {
        let b = EigenBasis::new(2, 1).unwrap();
        assert_eq!(b.eigenvalue(0), 2.0 * PI2);
        assert_eq!(b.multi_index(0), &[1, 1]);
    }

    #[test]
    fn two_dimensional_matches_brute_force_enumeration() {
        // Brute force over k1, k2 ≤ 8, then sort.
        let mut all: Vec<(u32, u32, u32)> = Vec::new();
        for k1 in 1..=8u32 {
            for k2 in 1..=8u32 {
                all.push((k1 * k1 + k2 * k2, k1, k2));
            }
        }
        all.sort();
        let b = EigenBasis::new(2, 4).unwrap();
        let expect = [(2, 1, 1), (5, 1, 2), (5, 2, 1), (8, 2, 2)];
        assert_eq!(&all[..4], &expect);
        for (k, (s, k1, k2)) in expect.iter().enumerate() {
            assert_eq!(b.eigenvalue(k), *s as f64 * PI2);
            assert_eq!(b.multi_index(k), &[*k1, *k2]);
        }
        let big = EigenBasis::new(2, 40).unwrap();
        for (k, (s, k1, k2)) in all.iter().take(40).enumerate() {
            assert_eq!(big.multi_index(k), &[*k1, *k2]);
            assert_eq!(big.eigenvalue(k), *s as f64 * PI2);
        }
    }

    #[test]
    fn rejects_bad_dimension_and_empty() {
        assert!(matches!(EigenBasis::new(3, 4), Err(Error::UnsupportedDimension(3))));
        assert!(matches!(EigenBasis::new(1, 0), Err(Error::EmptyBasis)));
    }

    #[test]
    fn weyl_ratio_one_dimension() {
        let b = EigenBasis::new(1, 1000).unwrap();
        assert_eq!(b.weyl_ratio(1).unwrap(), PI2);
        assert!(close(b.weyl_ratio(1000).unwrap(), PI2, 1e-12 * PI2));
        assert!(b.weyl_ratio(0).is_err());
        assert!(b.weyl_ratio(1001).is_err());
    }

    #[test]
    fn weyl_ratio_two_dimensions_against_lattice_count() {
        let b = EigenBasis::new(2, 1000).unwrap();
        // Oracle: the rank of λ is the number of lattice points strictly
        // below plus those tied before it; the count of points with
        // k1²+k2² ≤ s must be ≥ 1000 at s = λ_1000/π².
        let s = (b.eigenvalue(999) / PI2).round() as u64;
        let count = |s: u64| {
            let mut c = 0u64;
            for k1 in 1..=100u64 {
                for k2 in 1..=100u64 {
                    if k1 * k1 + k2 * k2 <= s {
                        c += 1;
                    }
                }
            }
            c
        };
        assert!(count(s) >= 1000 && count(s - 1) < 1000);
        let ratio = b.weyl_ratio(1000).unwrap();
        assert!((ratio / (4.0 * PI) - 1.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn sobolev_norm_examples() {
        let b = Arc::new(EigenBasis::new(1, 4).unwrap());
        let f = SpectralField::new(b.clone(), &[1.0]).unwrap();
        assert_eq!(f.sobolev_norm(0.0), 1.0);
        assert!(close(f.sobolev_norm(1.0), PI, 1e-14));
        let g = SpectralField::new(b, &[1.0, 1.0]).unwrap();
        assert!(close(g.sobolev_norm(2.0), 17f64.sqrt() * PI2, 1e-12));
    }

    #[test]
    fn evaluate_examples() {
        let b = Arc::new(EigenBasis::new(1, 4).unwrap());
        let f = SpectralField::new(b.clone(), &[1.0]).unwrap();
        assert!(close(f.evaluate(&[&[0.5]]).unwrap()[0], SQRT_2, 1e-15));
        let g = SpectralField::new(b.clone(), &[0.3, -1.2, 0.7, 2.0]).unwrap();
        assert_eq!(g.evaluate(&[&[0.0]]).unwrap()[0], 0.0);
        assert!(g.evaluate(&[&[1.0]]).unwrap()[0].abs() < 1e-14);
        let e2 = SpectralField::new(b, &[0.0, 1.0]).unwrap();
        assert!(close(e2.evaluate(&[&[0.25]]).unwrap()[0], SQRT_2, 1e-15));
        assert!(matches!(e2.evaluate(&[&[1.5]]), Err(Error::PointOutsideDomain { .. })));
        assert!(matches!(e2.evaluate(&[&[0.5, 0.5]]), Err(Error::PointDimension { .. })));
    }

    #[test]
    fn eigenfunctions_vanish_on_boundary_2d() {
        let b = EigenBasis::new(2, 12).unwrap();
        for k in 0..12 {
            for p in [[0.0, 0.3], [1.0, 0.7], [0.2, 0.0], [0.9, 1.0]] {
                assert!(b.eigenfunction(k, &p).unwrap().abs() < 1e-14);
            }
        }
    }

    #[test]
    fn quadrature_orthonormality_1d() {
        let b = EigenBasis::new(1, 40).unwrap();
        let g = QuadratureGrid::new(1, 4 * 40 + 1).unwrap();
        let t = g.tabulate(&b);
        for j in 0..40 {
            for k in 0..40 {
                let ip: f64 = t.row(j).iter().zip(t.row(k)).zip(g.weights()).map(|((a, b), w)| a * b * w).sum();
                let delta = if j == k { 1.0 } else { 0.0 };
                assert!((ip - delta).abs() <= 1e-10, "<e{j},e{k}> = {ip}");
            }
        }
    }

    #[test]
    fn quadrature_orthonormality_2d() {
        let b = EigenBasis::new(2, 10).unwrap();
        let g = QuadratureGrid::new(2, 4 * b.max_wavenumber() as usize + 1).unwrap();
        let t = g.tabulate(&b);
        for j in 0..10 {
            for k in 0..10 {
                let ip: f64 = t.row(j).iter().zip(t.row(k)).zip(g.weights()).map(|((a, b), w)| a * b * w).sum();
                let delta = if j == k { 1.0 } else { 0.0 };
                assert!((ip - delta).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn projection_examples() {
        let b = Arc::new(EigenBasis::new(1, 16).unwrap());
        let g = QuadratureGrid::for_basis(&b);
        let samples: Vec<f64> = g.nodes().map(|x| b.mode_value(0, x)).collect();
        let f = SpectralField::project(b.clone(), &g, &samples).unwrap();
        assert!((f.coefficients()[0] - 1.0).abs() < 1e-10);
        assert!(f.coefficients()[1..].iter().all(|c| c.abs() < 1e-10));

        let samples: Vec<f64> = g.nodes().map(|x| 2.0 * b.mode_value(0, x) + 3.0 * b.mode_value(1, x)).collect();
        let f = SpectralField::project(b.clone(), &g, &samples).unwrap();
        assert!((f.coefficients()[0] - 2.0).abs() < 1e-9);
        assert!((f.coefficients()[1] - 3.0).abs() < 1e-9);

        let zero = SpectralField::project(b.clone(), &g, &vec![0.0; g.len()]).unwrap();
        assert!(zero.coefficients().iter().all(|&c| c == 0.0));

        assert!(matches!(
            SpectralField::project(b.clone(), &g, &[0.0; 3]),
            Err(Error::GridMismatch(_))
        ));
        let coarse = QuadratureGrid::new(1, 20).unwrap();
        assert!(SpectralField::project(b, &coarse, &vec![0.0; 20]).is_err());
    }

    #[test]
    fn embedding_constant_closed_form_r1() {
        let b = EigenBasis::new(1, 2000).unwrap();
        let c = b.embedding_constant(1.0, 4001).unwrap();
        assert!((c.grid_value - 0.5).abs() < 1e-3, "{c:?}");
        assert!(c.certified >= c.grid_value);
        assert!(c.crude_bound >= c.grid_value);
    }

    #[test]
    fn embedding_constant_partial_sums_track_x_one_minus_x() {
        // Oracle: Σ_k 2 sin²(kπx)/(k²π²) = x(1-x).
        let m = 500;
        let b = EigenBasis::new(1, m).unwrap();
        let tol = 2.0 / (PI2 * m as f64);
        for i in 0..=200 {
            let x = i as f64 / 200.0;
            let s: f64 = (0..m).map(|k| b.mode_value(k, &[x]).powi(2) / b.eigenvalue(k)).sum();
            assert!((s - x * (1.0 - x)).abs() <= tol);
        }
    }

    #[test]
    fn embedding_constant_r_three_halves_bound() {
        // Σ_k 2/(k³π³) → 2ζ(3)/π³.
        let zeta3: f64 = (1..200_000).map(|k| (k as f64).powi(-3)).sum();
        let expected = (2.0 * zeta3 / PI.powi(3)).sqrt();
        assert!((expected - 0.2785).abs() < 1e-4);
        let b = EigenBasis::new(1, 400).unwrap();
        let c = b.embedding_constant(1.5, 1601).unwrap();
        assert!((c.infinite_bound - expected).abs() < 1e-4, "{c:?}");
        assert!(c.grid_value <= c.infinite_bound);
    }

    #[test]
    fn embedding_constant_rejects_small_r() {
        let b = EigenBasis::new(1, 10).unwrap();
        assert!(matches!(b.embedding_constant(0.4, 101), Err(Error::Window(_))));
        assert!(matches!(b.embedding_constant(0.5, 101), Err(Error::Window(_))));
        let b2 = EigenBasis::new(2, 10).unwrap();
        assert!(b2.embedding_constant(1.0, 101).is_err());
        assert!(b2.embedding_constant(1.2, 101).is_ok());
    }

    #[test]
    fn power_tail_bound_dominates_numerical_tail() {
        let b = EigenBasis::new(1, 50).unwrap();
        let big = EigenBasis::new(1, 20_000).unwrap();
        let tail = big.power_sum(-1.0) - b.power_sum(-1.0);
        let bound = b.power_tail_bound(-1.0).unwrap();
        assert!(tail <= bound && bound < 1.1 * tail + 1e-6);
        assert!(b.power_tail_bound(-0.5).is_none());

        let b2 = EigenBasis::new(2, 50).unwrap();
        let big2 = EigenBasis::new(2, 5000).unwrap();
        let tail2 = big2.power_sum(-1.5) - b2.power_sum(-1.5);
        assert!(tail2 <= b2.power_tail_bound(-1.5).unwrap());
        assert!(b2.power_tail_bound(-1.0).is_none());
    }

    #[test]
    fn cells_and_faces() {
        let g = QuadratureGrid::new(1, 5).unwrap();
        assert_eq!(g.cell_of(&[0.0]), 0);
        assert_eq!(g.cell_of(&[0.3]), 1);
        assert_eq!(g.cell_of(&[1.0]), 4);
        assert!(g.on_cell_face(&[0.125]));
        assert!(!g.on_cell_face(&[0.3]));
        let w: f64 = g.weights().iter().sum();
        assert!((w - 1.0).abs() < 1e-15);
    }
}
