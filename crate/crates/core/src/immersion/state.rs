use rayon::prelude::*;

use super::grid::{Field, Grid};
use super::ParametrizedImmersion;
use crate::ambient::AmbientModel;
use crate::error::{Error, Result};
use crate::tensor::{Mat, MetricPoint, Operator, TensorSlot3, TensorSlot4, Vector};

/// Pointwise first- and second-order data of the immersion (coordinate frame).
#[derive(Clone, Debug)]
pub struct PointGeometry {
    pub param: Vec<f64>,
    pub position: Vector,
    /// Coordinate tangents f_*∂_i as columns (ambient chart components).
    pub tangents: Mat,
    pub metric: MetricPoint,
    pub normal: Vector,
    /// h_ij = g(A∂_i, ∂_j).
    pub second_form: Mat,
    pub a: Operator,
    pub mean_curvature: f64,
    /// Normal Jacobi operator R̃(ξ) = R̃(·, ξ)ξ.
    pub jacobi: Operator,
    /// R̃₁(ξ)(X, Y) = (R̃(ξ, X)Y)ᵀ.
    pub r1: TensorSlot3,
    /// R̃₃(ξ)(X, Y) = R̃(X, Y)ξ.
    pub r3: TensorSlot3,
}

impl PointGeometry {
    /// Coordinates of the tangential part of an ambient vector.
    pub fn tangential(&self, ambient: &AmbientModel, v: &Vector) -> Vector {
        let g_amb = ambient.metric(&self.position);
        self.metric.g_inv() * (self.tangents.transpose() * g_amb * v)
    }

    pub fn push(&self, x: &Vector) -> Vector {
        &self.tangents * x
    }

    pub fn h(&self, x: &Vector, y: &Vector) -> f64 {
        (x.transpose() * &self.second_form * y)[(0, 0)]
    }
}

/// Intrinsic connection data and covariant derivatives at a grid point.
#[derive(Clone, Debug)]
pub struct Derivatives {
    /// Γ(∂_x, ∂_y) = ∇_{∂x}∂_y, component a at `get(a, x, y)`.
    pub christoffel: TensorSlot3,
    /// Intrinsic curvature R(∂_x, ∂_y) as an operator, entry (a, b) at `get(a, b, x, y)`.
    pub curvature: TensorSlot4,
    /// (∇_X A)Y.
    pub grad_a: TensorSlot3,
    /// (∇_X R̃(ξ))Y.
    pub grad_j: TensorSlot3,
    /// ∂_i H.
    pub dh: Vector,
    pub hess_h: Mat,
    /// ∇²_{∂c,∂x} A stored at `c·n + x`.
    pub hess_a: Vec<Operator>,
    pub hess_j: Vec<Operator>,
    pub lap_a: Operator,
    pub lap_j: Operator,
    pub lap_h: f64,
}

impl Derivatives {
    pub fn grad_h(&self, m: &MetricPoint) -> Vector {
        m.g_inv() * &self.dh
    }

    pub fn hess(&self, which: &[Operator], x: &Vector, y: &Vector) -> Operator {
        let n = x.len();
        let mut out = Operator::zeros(n);
        for c in 0..n {
            for k in 0..n {
                let w = x[c] * y[k];
                if w != 0.0 {
                    out += &(&which[c * n + k] * w);
                }
            }
        }
        out
    }
}

/// All pointwise geometric data of an immersion on its grid.
#[derive(Clone, Debug)]
pub struct HypersurfaceState {
    grid: Grid,
    ambient: AmbientModel,
    points: Vec<PointGeometry>,
    derivs: Option<Vec<Derivatives>>,
}

fn op_vec(op: &Operator) -> Vec<f64> {
    let n = op.dim();
    (0..n * n).map(|k| op.0[(k / n, k % n)]).collect()
}

/// Generalized cross product: a covector annihilating the columns of `f` (N×(N−1)).
fn cofactor_normal(f: &Mat) -> Vector {
    let big = f.nrows();
    Vector::from_fn(big, |k, _| {
        let minor = f.clone().remove_row(k);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sign * minor.determinant()
    })
}

/// Pointwise data: g, ξ, h, A, H, R̃(ξ), R̃₁(ξ), R̃₃(ξ).
pub fn fundamental_forms(im: &ParametrizedImmersion) -> Result<HypersurfaceState> {
    let grid = im.grid().clone();
    let ambient = im.ambient().clone();
    let n = grid.dim();
    let pos = im.position_field();
    let d1: Vec<Field> = (0..n).map(|k| grid.d1(&pos, k)).collect();
    let mut d2: Vec<Vec<Option<Field>>> = vec![vec![None; n]; n];
    for a in 0..n {
        for b in a..n {
            d2[a][b] = Some(grid.d11(&pos, a, b));
        }
    }
    let orientation = im.orientation();
    let points: Result<Vec<PointGeometry>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let p = im.points()[i].clone();
            let big = p.len();
            let f = Mat::from_fn(big, n, |r, c| d1[c].at(i)[r]);
            let g_amb = ambient.metric(&p);
            let g = f.transpose() * &g_amb * &f;
            let det = g.determinant();
            let metric = MetricPoint::new(g).map_err(|_| Error::Degenerate { index: i, det })?;

            let w = cofactor_normal(&f);
            let g_amb_inv = g_amb.clone().try_inverse().ok_or_else(|| Error::Input("singular ambient metric".into()))?;
            let mut xi = &g_amb_inv * w;
            xi /= (xi.transpose() * &g_amb * &xi)[(0, 0)].sqrt();
            let mut frame = f.clone().insert_column(n, 0.0);
            frame.set_column(n, &xi);
            if frame.determinant() * orientation < 0.0 {
                xi = -xi;
            }

            let col = |k: usize| f.column(k).into_owned();
            let second_form = Mat::from_fn(n, n, |a, b| {
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                let fab = Vector::from_column_slice(d2[lo][hi].as_ref().expect("filled").at(i));
                let acc = fab + ambient.christoffel(&p, &col(a), &col(b));
                -(xi.transpose() * &g_amb * acc)[(0, 0)]
            });
            let second_form = (&second_form + second_form.transpose()) * 0.5;
            let a = Operator(metric.g_inv() * &second_form);
            let mean_curvature = a.trace();

            let proj = |v: &Vector| -> Vector { metric.g_inv() * (f.transpose() * &g_amb * v) };
            let jacobi = Operator(Mat::from_columns(
                &(0..n).map(|k| proj(&ambient.curvature_at(&p, &col(k), &xi, &xi))).collect::<Vec<_>>(),
            ));
            let r1 = TensorSlot3::from_pairs(n, |x, y| proj(&ambient.curvature_at(&p, &xi, &col(x), &col(y))));
            let r3 = TensorSlot3::from_pairs(n, |x, y| proj(&ambient.curvature_at(&p, &col(x), &col(y), &xi)));
            Ok(PointGeometry {
                param: grid.param(i),
                position: p,
                tangents: f,
                metric,
                normal: xi,
                second_form,
                a,
                mean_curvature,
                jacobi,
                r1,
                r3,
            })
        })
        .collect();
    Ok(HypersurfaceState { grid, ambient, points: points?, derivs: None })
}

/// Fills Christoffel symbols, intrinsic curvature, ∇A, ∇R̃(ξ), ∇²A, ∇²R̃(ξ),
/// the Hessian of H and the Laplacians, all by nested central differences.
pub fn covariant_derivatives(mut state: HypersurfaceState) -> Result<HypersurfaceState> {
    let grid = &state.grid;
    let n = grid.dim();
    if grid.shape().iter().zip(grid.wrap()).any(|(&m, &w)| !w && m < 7) {
        return Err(Error::Input("grid too small for nested stencils (need at least 7 points per open axis)".into()));
    }
    let pts = &state.points;
    let len = grid.len();
    let diff = |f: &Field| -> Vec<Field> { (0..n).map(|k| grid.d1(f, k)).collect() };

    let gf = Field::from_fn(len, n * n, |i| op_vec(&Operator(pts[i].metric.g().clone())));
    let af = Field::from_fn(len, n * n, |i| op_vec(&pts[i].a));
    let jf = Field::from_fn(len, n * n, |i| op_vec(&pts[i].jacobi));
    let hf = Field::from_fn(len, 1, |i| vec![pts[i].mean_curvature]);
    let (dg, da, dj, dh) = (diff(&gf), diff(&af), diff(&jf), diff(&hf));

    let christoffel: Vec<TensorSlot3> = (0..len)
        .into_par_iter()
        .map(|i| {
            let gi = pts[i].metric.g_inv();
            let dgk = |k: usize, a: usize, b: usize| dg[k].at(i)[a * n + b];
            TensorSlot3::from_fn(n, |a, x, y| {
                (0..n)
                    .map(|l| 0.5 * gi[(a, l)] * (dgk(x, y, l) + dgk(y, x, l) - dgk(l, x, y)))
                    .sum()
            })
        })
        .collect();

    let cov1 = |d: &[Field], t: &Operator, gam: &TensorSlot3, i: usize| -> TensorSlot3 {
        TensorSlot3::from_fn(n, |a, x, b| {
            let mut s = d[x].at(i)[a * n + b];
            for k in 0..n {
                s += gam.get(a, x, k) * t.0[(k, b)] - t.0[(a, k)] * gam.get(k, x, b);
            }
            s
        })
    };
    let grad_a: Vec<TensorSlot3> =
        (0..len).into_par_iter().map(|i| cov1(&da, &pts[i].a, &christoffel[i], i)).collect();
    let grad_j: Vec<TensorSlot3> =
        (0..len).into_par_iter().map(|i| cov1(&dj, &pts[i].jacobi, &christoffel[i], i)).collect();
    let dhv: Vec<Vector> = (0..len).map(|i| Vector::from_fn(n, |k, _| dh[k].at(i)[0])).collect();

    let slot_field = |t: &[TensorSlot3]| Field::from_fn(len, n * n * n, |i| t[i].as_slice().to_vec());
    let dgam = diff(&slot_field(&christoffel));
    let dga = diff(&slot_field(&grad_a));
    let dgj = diff(&slot_field(&grad_j));
    let ddh = diff(&Field::from_fn(len, n, |i| dhv[i].iter().copied().collect()));

    let idx3 = |a: usize, x: usize, y: usize| (a * n + x) * n + y;
    let hess_of = |d: &[Field], s: &TensorSlot3, gam: &TensorSlot3, i: usize| -> Vec<Operator> {
        let mut out = Vec::with_capacity(n * n);
        for c in 0..n {
            for x in 0..n {
                out.push(Operator(Mat::from_fn(n, n, |a, b| {
                    let mut v = d[c].at(i)[idx3(a, x, b)];
                    for e in 0..n {
                        v += gam.get(a, c, e) * s.get(e, x, b)
                            - gam.get(e, c, x) * s.get(a, e, b)
                            - gam.get(e, c, b) * s.get(a, x, e);
                    }
                    v
                })));
            }
        }
        out
    };
    let derivs: Vec<Derivatives> = (0..len)
        .into_par_iter()
        .map(|i| {
            let gam = &christoffel[i];
            let curvature = TensorSlot4::from_pairs(n, |c, d| {
                Operator(Mat::from_fn(n, n, |a, b| {
                    let mut r = dgam[c].at(i)[idx3(a, d, b)] - dgam[d].at(i)[idx3(a, c, b)];
                    for e in 0..n {
                        r += gam.get(a, c, e) * gam.get(e, d, b) - gam.get(a, d, e) * gam.get(e, c, b);
                    }
                    r
                }))
            });
            let hess_a = hess_of(&dga, &grad_a[i], gam, i);
            let hess_j = hess_of(&dgj, &grad_j[i], gam, i);
            let gi = pts[i].metric.g_inv();
            let hess_h = Mat::from_fn(n, n, |c, x| {
                let mut v = 0.5 * (ddh[c].at(i)[x] + ddh[x].at(i)[c]);
                for e in 0..n {
                    v -= gam.get(e, c, x) * dhv[i][e];
                }
                v
            });
            let mut lap_a = Operator::zeros(n);
            let mut lap_j = Operator::zeros(n);
            let mut lap_h = 0.0;
            for c in 0..n {
                for x in 0..n {
                    lap_a += &(&hess_a[c * n + x] * gi[(c, x)]);
                    lap_j += &(&hess_j[c * n + x] * gi[(c, x)]);
                    lap_h += gi[(c, x)] * hess_h[(c, x)];
                }
            }
            Derivatives {
                christoffel: gam.clone(),
                curvature,
                grad_a: grad_a[i].clone(),
                grad_j: grad_j[i].clone(),
                dh: dhv[i].clone(),
                hess_h,
                hess_a,
                hess_j,
                lap_a,
                lap_j,
                lap_h,
            }
        })
        .collect();
    state.derivs = Some(derivs);
    Ok(state)
}

impl HypersurfaceState {
    /// Pointwise data plus all covariant derivatives.
    pub fn build(im: &ParametrizedImmersion) -> Result<Self> {
        covariant_derivatives(fundamental_forms(im)?)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn ambient(&self) -> &AmbientModel {
        &self.ambient
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &PointGeometry {
        &self.points[i]
    }

    pub fn points(&self) -> &[PointGeometry] {
        &self.points
    }

    pub fn has_derivatives(&self) -> bool {
        self.derivs.is_some()
    }

    pub fn derivs(&self, i: usize) -> Result<&Derivatives> {
        self.derivs
            .as_ref()
            .map(|d| &d[i])
            .ok_or_else(|| Error::Input("covariant derivatives not computed".into()))
    }

    /// Grid points whose nested stencils are centred (margin of `margin` cells).
    pub fn interior(&self, margin: usize) -> Vec<usize> {
        self.grid.interior(margin)
    }

    /// Covariant Laplacian of a scalar field sampled on the grid.
    pub fn scalar_laplacian(&self, values: &[f64]) -> Result<Vec<f64>> {
        let derivs = self.derivs.as_ref().ok_or_else(|| Error::Input("covariant derivatives not computed".into()))?;
        if values.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: values.len() });
        }
        let n = self.dim();
        let f = Field { width: 1, data: values.to_vec() };
        let d: Vec<Field> = (0..n).map(|k| self.grid.d1(&f, k)).collect();
        let dd: Vec<Vec<Field>> = (0..n).map(|a| (0..n).map(|b| self.grid.d1(&d[a], b)).collect()).collect();
        Ok((0..self.len())
            .map(|i| {
                let gi = self.points[i].metric.g_inv();
                let gam = &derivs[i].christoffel;
                let mut s = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        let mut hess = 0.5 * (dd[a][b].at(i)[0] + dd[b][a].at(i)[0]);
                        for e in 0..n {
                            hess -= gam.get(e, a, b) * d[e].at(i)[0];
                        }
                        s += gi[(a, b)] * hess;
                    }
                }
                s
            })
            .collect())
    }

    /// Covariant derivative ∇T of an operator field, (∇_X T)Y.
    pub fn operator_gradient(&self, ops: &[Operator]) -> Result<Vec<TensorSlot3>> {
        let derivs = self.derivs.as_ref().ok_or_else(|| Error::Input("covariant derivatives not computed".into()))?;
        if ops.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: ops.len() });
        }
        let n = self.dim();
        let len = self.len();
        let f = Field::from_fn(len, n * n, |i| op_vec(&ops[i]));
        let d: Vec<Field> = (0..n).map(|k| self.grid.d1(&f, k)).collect();
        Ok((0..len)
            .map(|i| {
                let gam = &derivs[i].christoffel;
                TensorSlot3::from_fn(n, |a, x, b| {
                    let mut s = d[x].at(i)[a * n + b];
                    for k in 0..n {
                        s += gam.get(a, x, k) * ops[i].0[(k, b)] - ops[i].0[(a, k)] * gam.get(k, x, b);
                    }
                    s
                })
            })
            .collect())
    }

    /// Covariant Laplacian of an operator field sampled on the grid.
    pub fn operator_laplacian(&self, ops: &[Operator]) -> Result<Vec<Operator>> {
        let grads = self.operator_gradient(ops)?;
        let derivs = self.derivs.as_ref().expect("checked by operator_gradient");
        let n = self.dim();
        let len = self.len();
        let gf = Field::from_fn(len, n * n * n, |i| grads[i].as_slice().to_vec());
        let dg: Vec<Field> = (0..n).map(|k| self.grid.d1(&gf, k)).collect();
        let idx3 = |a: usize, x: usize, y: usize| (a * n + x) * n + y;
        Ok((0..len)
            .map(|i| {
                let gam = &derivs[i].christoffel;
                let s = &grads[i];
                let gi = self.points[i].metric.g_inv();
                let mut out = Operator::zeros(n);
                for c in 0..n {
                    for x in 0..n {
                        let w = gi[(c, x)];
                        out += &Operator(Mat::from_fn(n, n, |a, b| {
                            let mut v = dg[c].at(i)[idx3(a, x, b)];
                            for e in 0..n {
                                v += gam.get(a, c, e) * s.get(e, x, b)
                                    - gam.get(e, c, x) * s.get(a, e, b)
                                    - gam.get(e, c, b) * s.get(a, x, e);
                            }
                            v * w
                        }));
                    }
                }
                out
            })
            .collect())
    }
}
