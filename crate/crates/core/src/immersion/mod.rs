//! Chart-based numerical hypersurface geometry on parameter grids.
//!
//! The shape operator is taken for −ξ: `∇̃_X ξ = f_*(AX)`, `h(X, Y) = g(AX, Y)`,
//! so an outward-oriented round sphere has positive mean curvature.

mod families;
mod grid;
mod identities;
mod state;

pub use families::{catalog, parse_grid_file, Family, FamilyInfo};
pub use grid::{Field, Grid};
pub use identities::{
    adaptedness_report, gauss_codazzi_residual, jacobi_derivative_residual, second_order_identities,
    AdaptednessReport, IdentityResidual, PointAdaptedness,
};
pub use state::{fundamental_forms, covariant_derivatives, Derivatives, HypersurfaceState, PointGeometry};

use rayon::prelude::*;

use crate::ambient::AmbientModel;
use crate::error::{Error, Result};
use crate::tensor::{Mat, Vector};

/// Default lower bound on the Gram determinant of coordinate tangents.
pub const DEFAULT_GRAM_EPS: f64 = 1e-12;

/// A hypersurface patch sampled on a parameter grid, with a fixed orientation.
#[derive(Clone, Debug)]
pub struct ParametrizedImmersion {
    grid: Grid,
    points: Vec<Vector>,
    ambient: AmbientModel,
    orientation: f64,
    gram_eps: f64,
}

impl ParametrizedImmersion {
    /// `orientation = ±1` selects ξ with `orientation · det[f_1, …, f_n, ξ] > 0`.
    pub fn new(grid: Grid, points: Vec<Vector>, ambient: AmbientModel, orientation: f64, gram_eps: f64) -> Result<Self> {
        if orientation != 1.0 && orientation != -1.0 {
            return Err(Error::Input("orientation must be +1 or -1".into()));
        }
        if points.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: points.len() });
        }
        if ambient.dim() != grid.dim() + 1 {
            return Err(Error::DimensionMismatch { expected: grid.dim() + 1, got: ambient.dim() });
        }
        for p in &points {
            if p.len() != ambient.dim() {
                return Err(Error::DimensionMismatch { expected: ambient.dim(), got: p.len() });
            }
            if !ambient.contains(p) {
                return Err(Error::Input("immersion leaves the ambient chart".into()));
            }
        }
        let im = Self { grid, points, ambient, orientation, gram_eps };
        im.check_nondegenerate()?;
        Ok(im)
    }

    pub fn from_fn<F>(grid: Grid, ambient: AmbientModel, orientation: f64, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vector + Sync,
    {
        let points: Vec<Vector> = (0..grid.len()).into_par_iter().map(|i| f(&grid.param(i))).collect();
        Self::new(grid, points, ambient, orientation, DEFAULT_GRAM_EPS)
    }

    /// Same grid, ambient and orientation with displaced points.
    pub fn with_points(&self, points: Vec<Vector>) -> Result<Self> {
        Self::new(self.grid.clone(), points, self.ambient.clone(), self.orientation, self.gram_eps)
    }

    pub fn with_gram_eps(mut self, eps: f64) -> Result<Self> {
        self.gram_eps = eps;
        self.check_nondegenerate()?;
        Ok(self)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn points(&self) -> &[Vector] {
        &self.points
    }

    pub fn ambient(&self) -> &AmbientModel {
        &self.ambient
    }

    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub(crate) fn position_field(&self) -> Field {
        Field::from_fn(self.grid.len(), self.ambient.dim(), |i| self.points[i].iter().copied().collect())
    }

    /// Coordinate tangent vectors (columns) at every grid point.
    pub fn tangents(&self) -> Vec<Mat> {
        let pos = self.position_field();
        let n = self.dim();
        let big = self.ambient.dim();
        let d: Vec<Field> = (0..n).map(|k| self.grid.d1(&pos, k)).collect();
        (0..self.grid.len())
            .map(|i| Mat::from_fn(big, n, |r, c| d[c].at(i)[r]))
            .collect()
    }

    fn check_nondegenerate(&self) -> Result<()> {
        for (i, t) in self.tangents().iter().enumerate() {
            let g = t.transpose() * self.ambient.metric(&self.points[i]) * t;
            let det = g.determinant();
            if !(det > self.gram_eps) {
                return Err(Error::Degenerate { index: i, det });
            }
        }
        Ok(())
    }
}
