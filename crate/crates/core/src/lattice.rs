//! Finite cubes of ℤ^m, fields on them, and zero-extended difference operators.
//!
//! Sites are indexed lexicographically with coordinate 0 varying fastest, so the
//! flat layout of a [`Field`] is stable across runs and platforms. Every operator
//! treats the field as extended by zero outside its box (Dirichlet truncation).

use rayon::prelude::*;

use crate::error::{PamError, Result};
use crate::num::{KahanSum, Real};

/// Upper bound on the number of sites of a dense box.
pub const MAX_SITES: usize = 1 << 24;

const CHUNK: usize = 1 << 12;

/// The cube {−R,…,R}^m.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeBox {
    dim: usize,
    radius: usize,
    side: usize,
    size: usize,
    strides: Vec<usize>,
}

impl LatticeBox {
    pub fn new(dim: usize, radius: usize) -> Result<Self> {
        if dim == 0 {
            return Err(PamError::Parameter("lattice dimension must be at least 1".into()));
        }
        let side = 2 * radius + 1;
        let mut size: usize = 1;
        let mut strides = Vec::with_capacity(dim);
        for _ in 0..dim {
            strides.push(size);
            size = match size.checked_mul(side) {
                Some(s) if s <= MAX_SITES => s,
                _ => {
                    return Err(PamError::Capacity {
                        sites: format!("{side}^{dim}"),
                        limit: MAX_SITES,
                    })
                }
            };
        }
        Ok(Self { dim, radius, side, size, strides })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn radius(&self) -> usize {
        self.radius
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn contains(&self, site: &[i64]) -> bool {
        let r = self.radius as i64;
        site.len() == self.dim && site.iter().all(|&c| -r <= c && c <= r)
    }

    /// Flat index of `site`, or `None` when it lies outside the box.
    pub fn index(&self, site: &[i64]) -> Option<usize> {
        if !self.contains(site) {
            return None;
        }
        let r = self.radius as i64;
        Some(site.iter().zip(&self.strides).map(|(&c, &s)| (c + r) as usize * s).sum())
    }

    pub fn site(&self, index: usize) -> Vec<i64> {
        let mut out = vec![0; self.dim];
        self.site_into(index, &mut out);
        out
    }

    pub fn site_into(&self, mut index: usize, out: &mut [i64]) {
        assert!(index < self.size, "site index {index} out of range");
        let r = self.radius as i64;
        for c in out.iter_mut() {
            *c = (index % self.side) as i64 - r;
            index /= self.side;
        }
    }

    pub fn origin_index(&self) -> usize {
        (self.size - 1) / 2
    }

    /// Visit sites `start..end` in index order, handing out shifted coordinates
    /// in `0..side` (so `c == 0` is the lower face and `c == side-1` the upper).
    pub(crate) fn for_each_offset_coords(
        &self,
        start: usize,
        end: usize,
        mut visit: impl FnMut(usize, &[usize]),
    ) {
        if start >= end {
            return;
        }
        let mut coords = vec![0usize; self.dim];
        let mut rest = start;
        for c in coords.iter_mut() {
            *c = rest % self.side;
            rest /= self.side;
        }
        for idx in start..end {
            visit(idx, &coords);
            for c in coords.iter_mut() {
                *c += 1;
                if *c < self.side {
                    break;
                }
                *c = 0;
            }
        }
    }
}

/// A real-valued function on a [`LatticeBox`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    lattice: LatticeBox,
    values: Vec<T>,
}

impl<T: Real> Field<T> {
    pub fn zeros(lattice: &LatticeBox) -> Self {
        Self { lattice: lattice.clone(), values: vec![T::zero(); lattice.size()] }
    }

    pub fn from_values(lattice: &LatticeBox, values: Vec<T>) -> Result<Self> {
        if values.len() != lattice.size() {
            return Err(PamError::DimensionMismatch { expected: lattice.size(), got: values.len() });
        }
        Ok(Self { lattice: lattice.clone(), values })
    }

    pub fn from_fn(lattice: &LatticeBox, mut f: impl FnMut(&[i64]) -> T) -> Self {
        let mut site = vec![0i64; lattice.dim()];
        let values = (0..lattice.size())
            .map(|i| {
                lattice.site_into(i, &mut site);
                f(&site)
            })
            .collect();
        Self { lattice: lattice.clone(), values }
    }

    /// Indicator of the origin.
    pub fn delta(lattice: &LatticeBox) -> Self {
        let mut f = Self::zeros(lattice);
        f.values[lattice.origin_index()] = T::one();
        f
    }

    #[inline]
    pub fn lattice(&self) -> &LatticeBox {
        &self.lattice
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Value at `site`, zero outside the box.
    pub fn get(&self, site: &[i64]) -> T {
        self.lattice.index(site).map_or(T::zero(), |i| self.values[i])
    }

    pub fn inner(&self, other: &Self) -> Result<T> {
        self.check_same_box(other)?;
        Ok(crate::num::dot(&self.values, &other.values))
    }

    pub fn scale(&mut self, a: T) {
        self.values.iter_mut().for_each(|v| *v *= a);
    }

    /// `self ← self + a·other`.
    pub fn axpy(&mut self, a: T, other: &Self) -> Result<()> {
        self.check_same_box(other)?;
        for (v, &w) in self.values.iter_mut().zip(&other.values) {
            *v += a * w;
        }
        Ok(())
    }

    /// Copy into a box of the same dimension, truncating or zero-padding.
    pub fn embed_into(&self, target: &LatticeBox) -> Result<Self> {
        if target.dim() != self.lattice.dim() {
            return Err(PamError::DimensionMismatch {
                expected: self.lattice.dim(),
                got: target.dim(),
            });
        }
        Ok(Self::from_fn(target, |site| self.get(site)))
    }

    /// ‖f‖₂, ‖f‖₄ and ‖f‖∞ on counting measure.
    pub fn norms(&self) -> Norms<T> {
        let mut s2 = KahanSum::new();
        let mut s4 = KahanSum::new();
        let mut linf = T::zero();
        for &v in &self.values {
            let v2 = v * v;
            s2.add(v2);
            s4.add(v2 * v2);
            linf = linf.max(v.abs());
        }
        Norms { l2: s2.value().sqrt(), l4: s4.value().sqrt().sqrt(), linf }
    }

    fn check_same_box(&self, other: &Self) -> Result<()> {
        if self.lattice != other.lattice {
            return Err(PamError::DimensionMismatch {
                expected: self.lattice.size(),
                got: other.lattice.size(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms<T> {
    pub l2: T,
    pub l4: T,
    pub linf: T,
}

fn check_axes(lattice: &LatticeBox, axes: &[usize]) -> Result<()> {
    if axes.is_empty() {
        return Err(PamError::Parameter("axis set must be nonempty".into()));
    }
    if let Some(&a) = axes.iter().find(|&&a| a >= lattice.dim()) {
        return Err(PamError::Parameter(format!(
            "axis {a} out of range for a {}-dimensional box",
            lattice.dim()
        )));
    }
    Ok(())
}

/// Per-axis weights `w` and an optional diagonal potential `v`:
/// `out = Σ_a w_a Δ_a f + v·f + shift·f` under zero extension.
///
/// This is the single hot loop behind both [`axis_laplacian`] and the
/// moment generator in `spectral`.
pub(crate) fn weighted_laplacian_into<T: Real>(
    lattice: &LatticeBox,
    weights: &[T],
    potential: Option<&[T]>,
    shift: T,
    input: &[T],
    out: &mut [T],
) {
    debug_assert_eq!(weights.len(), lattice.dim());
    debug_assert_eq!(input.len(), lattice.size());
    debug_assert_eq!(out.len(), lattice.size());
    let side = lattice.side();
    let strides = lattice.strides();
    let two = T::lit(2.0);
    let active: Vec<(usize, usize, T)> = weights
        .iter()
        .enumerate()
        .filter(|(_, w)| !w.is_zero())
        .map(|(a, &w)| (a, strides[a], w))
        .collect();
    out.par_chunks_mut(CHUNK).enumerate().for_each(|(chunk, dst)| {
        let start = chunk * CHUNK;
        lattice.for_each_offset_coords(start, start + dst.len(), |idx, coords| {
            let fx = input[idx];
            let mut acc = shift * fx;
            if let Some(v) = potential {
                acc += v[idx] * fx;
            }
            for &(a, stride, w) in &active {
                let c = coords[a];
                let mut s = -two * fx;
                if c + 1 < side {
                    s += input[idx + stride];
                }
                if c > 0 {
                    s += input[idx - stride];
                }
                acc += w * s;
            }
            dst[idx - start] = acc;
        });
    });
}

/// Σ_{a∈axes} Σ_± [f(x ± e_a) − f(x)] with f ≡ 0 outside the box.
pub fn axis_laplacian<T: Real>(f: &Field<T>, axes: &[usize]) -> Result<Field<T>> {
    let lattice = f.lattice();
    check_axes(lattice, axes)?;
    let mut weights = vec![T::zero(); lattice.dim()];
    for &a in axes {
        weights[a] = T::one();
    }
    let mut out = Field::zeros(lattice);
    weighted_laplacian_into(lattice, &weights, None, T::zero(), f.values(), out.values_mut());
    Ok(out)
}

/// Σ_x Σ_{a∈axes} (f(x+e_a) − f(x))² over all of ℤ^m, f zero-extended.
pub fn grad_sq_norm<T: Real>(f: &Field<T>, axes: &[usize]) -> Result<T> {
    let lattice = f.lattice();
    check_axes(lattice, axes)?;
    let side = lattice.side();
    let strides = lattice.strides();
    let v = f.values();
    let mut acc = KahanSum::new();
    lattice.for_each_offset_coords(0, lattice.size(), |idx, coords| {
        for &a in axes {
            let c = coords[a];
            let up = if c + 1 < side { v[idx + strides[a]] } else { T::zero() };
            let diff = up - v[idx];
            acc.add(diff * diff);
            // the bond entering the box from the lower face
            if c == 0 {
                acc.add(v[idx] * v[idx]);
            }
        }
    });
    Ok(acc.value())
}
