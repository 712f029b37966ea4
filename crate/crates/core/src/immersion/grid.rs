//! Rectangular parameter lattices and second-order finite differences.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// A rectangular lattice in n ∈ {2, 3} parameters, optionally periodic per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    shape: Vec<usize>,
    origin: Vec<f64>,
    spacing: Vec<f64>,
    wrap: Vec<bool>,
}

impl Grid {
    pub fn new(shape: Vec<usize>, origin: Vec<f64>, spacing: Vec<f64>, wrap: Vec<bool>) -> Result<Self> {
        let n = shape.len();
        if !(2..=3).contains(&n) {
            return Err(Error::Input(format!("grid dimension {n} not supported (need 2 or 3)")));
        }
        if origin.len() != n || spacing.len() != n || wrap.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: origin.len().min(spacing.len()).min(wrap.len()) });
        }
        if let Some(&m) = shape.iter().find(|&&m| m < 5) {
            return Err(Error::Input(format!("grid axis of size {m} is too small for the stencils")));
        }
        if spacing.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::Input("grid spacing must be positive".into()));
        }
        Ok(Self { shape, origin, spacing, wrap })
    }

    /// Grid covering `[lo, hi]` per axis; periodic axes exclude the endpoint `hi`.
    pub fn spanning(shape: &[usize], lo: &[f64], hi: &[f64], wrap: &[bool]) -> Result<Self> {
        let spacing = (0..shape.len())
            .map(|d| {
                let cells = if wrap[d] { shape[d] } else { shape[d].saturating_sub(1).max(1) };
                (hi[d] - lo[d]) / cells as f64
            })
            .collect();
        Self::new(shape.to_vec(), lo.to_vec(), spacing, wrap.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn wrap(&self) -> &[bool] {
        &self.wrap
    }

    /// Largest parameter spacing.
    pub fn h(&self) -> f64 {
        self.spacing.iter().copied().fold(0.0, f64::max)
    }

    pub fn index(&self, multi: &[usize]) -> usize {
        let mut idx = 0;
        for (d, &m) in multi.iter().enumerate() {
            idx = idx * self.shape[d] + m;
        }
        idx
    }

    pub fn multi(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for d in (0..self.dim()).rev() {
            out[d] = idx % self.shape[d];
            idx /= self.shape[d];
        }
        out
    }

    pub fn param(&self, idx: usize) -> Vec<f64> {
        self.multi(idx)
            .iter()
            .enumerate()
            .map(|(d, &m)| self.origin[d] + m as f64 * self.spacing[d])
            .collect()
    }

    /// Indices at distance at least `margin` from every non-periodic boundary.
    pub fn interior(&self, margin: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| {
                self.multi(i)
                    .iter()
                    .enumerate()
                    .all(|(d, &m)| self.wrap[d] || (m >= margin && m + margin < self.shape[d]))
            })
            .collect()
    }

    /// Index of the grid point nearest to the centre of the lattice.
    pub fn center(&self) -> usize {
        let mid: Vec<usize> = self.shape.iter().map(|&m| m / 2).collect();
        self.index(&mid)
    }

    fn neighbor(&self, multi: &[usize], axis: usize, offset: isize) -> usize {
        let mut m = multi.to_vec();
        let size = self.shape[axis] as isize;
        let k = m[axis] as isize + offset;
        m[axis] = if self.wrap[axis] { k.rem_euclid(size) as usize } else { k as usize };
        self.index(&m)
    }

    /// First derivative along `axis` of a field, second-order accurate
    /// everywhere (one-sided at non-periodic boundaries).
    pub fn d1(&self, f: &Field, axis: usize) -> Field {
        self.apply_stencil(f, axis, |pos, size, wrap| {
            if wrap || (pos > 0 && pos + 1 < size) {
                vec![(-1, -0.5), (1, 0.5)]
            } else if pos == 0 {
                vec![(0, -1.5), (1, 2.0), (2, -0.5)]
            } else {
                vec![(0, 1.5), (-1, -2.0), (-2, 0.5)]
            }
        }, self.spacing[axis])
    }

    /// Second derivative along `axis`, second-order accurate everywhere.
    pub fn d2(&self, f: &Field, axis: usize) -> Field {
        let h = self.spacing[axis];
        let mut out = self.apply_stencil(f, axis, |pos, size, wrap| {
            if wrap || (pos > 0 && pos + 1 < size) {
                vec![(-1, 1.0), (0, -2.0), (1, 1.0)]
            } else if pos == 0 {
                vec![(0, 2.0), (1, -5.0), (2, 4.0), (3, -1.0)]
            } else {
                vec![(0, 2.0), (-1, -5.0), (-2, 4.0), (-3, -1.0)]
            }
        }, 1.0);
        out.data.iter_mut().for_each(|x| *x /= h * h);
        out
    }

    /// Mixed second derivative ∂_a∂_b (or d2 when a == b).
    pub fn d11(&self, f: &Field, a: usize, b: usize) -> Field {
        if a == b {
            self.d2(f, a)
        } else {
            self.d1(&self.d1(f, a), b)
        }
    }

    fn apply_stencil<S>(&self, f: &Field, axis: usize, stencil: S, h: f64) -> Field
    where
        S: Fn(usize, usize, bool) -> Vec<(isize, f64)> + Sync,
    {
        assert_eq!(f.data.len(), f.width * self.len(), "field does not match grid");
        let w = f.width;
        let size = self.shape[axis];
        let wrap = self.wrap[axis];
        let mut data = vec![0.0; f.data.len()];
        data.par_chunks_mut(w).enumerate().for_each(|(idx, out)| {
            let multi = self.multi(idx);
            for (off, coef) in stencil(multi[axis], size, wrap) {
                let src = f.at(self.neighbor(&multi, axis, off));
                for (o, s) in out.iter_mut().zip(src) {
                    *o += coef * s;
                }
            }
            out.iter_mut().for_each(|x| *x /= h);
        });
        Field { width: w, data }
    }
}

/// A flat array of `width` numbers per grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub width: usize,
    pub data: Vec<f64>,
}

impl Field {
    pub fn from_fn<F>(len: usize, width: usize, f: F) -> Self
    where
        F: Fn(usize) -> Vec<f64> + Sync,
    {
        let mut data = vec![0.0; len * width];
        data.par_chunks_mut(width).enumerate().for_each(|(i, out)| {
            let v = f(i);
            debug_assert_eq!(v.len(), width);
            out.copy_from_slice(&v);
        });
        Self { width, data }
    }

    pub fn at(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }
}
