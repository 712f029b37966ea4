//! Locally symmetric model spaces in explicit charts.
//!
//! Real space forms use the conformal chart `g = δ / (1 + c|x|²/4)²`; complex
//! space forms use affine coordinates with the (scaled) Fubini–Study or
//! Bergman metric, normalized by holomorphic sectional curvature `c`.
//! The curvature sign convention is `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z`,
//! so the unit sphere has `R(x, ξ)ξ = x`.

use nalgebra::SVD;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Mat, MetricPoint, Operator, TensorSlot3, Vector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Euclidean,
    Sphere,
    Hyperbolic,
    ComplexProjective,
    ComplexHyperbolic,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Euclidean => "euclidean",
            ModelKind::Sphere => "sphere",
            ModelKind::Hyperbolic => "hyperbolic",
            ModelKind::ComplexProjective => "complex-projective",
            ModelKind::ComplexHyperbolic => "complex-hyperbolic",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "euclidean" => ModelKind::Euclidean,
            "sphere" => ModelKind::Sphere,
            "hyperbolic" => ModelKind::Hyperbolic,
            "complex-projective" | "cp" => ModelKind::ComplexProjective,
            "complex-hyperbolic" | "ch" => ModelKind::ComplexHyperbolic,
            other => return Err(Error::Config(format!("unknown model kind '{other}'"))),
        })
    }

    pub fn is_complex(self) -> bool {
        matches!(self, ModelKind::ComplexProjective | ModelKind::ComplexHyperbolic)
    }
}

/// Serializable description of a model: kind, curvature constant, real dimension.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDescriptor {
    pub kind: ModelKind,
    pub c: f64,
    pub dim: usize,
}

/// A rank-one locally symmetric model space with its chart.
#[derive(Clone, Debug)]
pub struct AmbientModel {
    kind: ModelKind,
    c: f64,
    dim: usize,
    r_norm: f64,
}

impl AmbientModel {
    pub fn new(d: ModelDescriptor) -> Result<Self> {
        let ModelDescriptor { kind, c, dim } = d;
        if dim < 2 {
            return Err(Error::Input("ambient dimension must be at least 2".into()));
        }
        if !c.is_finite() {
            return Err(Error::Input("curvature constant must be finite".into()));
        }
        let ok = match kind {
            ModelKind::Euclidean => c == 0.0,
            ModelKind::Sphere | ModelKind::ComplexProjective => c > 0.0,
            ModelKind::Hyperbolic | ModelKind::ComplexHyperbolic => c < 0.0,
        };
        if !ok {
            return Err(Error::Input(format!("curvature constant {c} incompatible with {}", kind.name())));
        }
        if kind.is_complex() && dim % 2 != 0 {
            return Err(Error::Input("complex space forms need even real dimension".into()));
        }
        let mut model = Self { kind, c, dim, r_norm: 0.0 };
        model.r_norm = model.maximize_curvature_norm();
        Ok(model)
    }

    pub fn euclidean(dim: usize) -> Self {
        Self::new(ModelDescriptor { kind: ModelKind::Euclidean, c: 0.0, dim }).expect("valid")
    }

    pub fn sphere(c: f64, dim: usize) -> Result<Self> {
        Self::new(ModelDescriptor { kind: ModelKind::Sphere, c, dim })
    }

    pub fn hyperbolic(c: f64, dim: usize) -> Result<Self> {
        Self::new(ModelDescriptor { kind: ModelKind::Hyperbolic, c, dim })
    }

    /// CP^m with holomorphic sectional curvature `c`.
    pub fn complex_projective(c: f64, m: usize) -> Result<Self> {
        Self::new(ModelDescriptor { kind: ModelKind::ComplexProjective, c, dim: 2 * m })
    }

    /// CH^m with holomorphic sectional curvature `c < 0`.
    pub fn complex_hyperbolic(c: f64, m: usize) -> Result<Self> {
        Self::new(ModelDescriptor { kind: ModelKind::ComplexHyperbolic, c, dim: 2 * m })
    }

    pub fn descriptor(&self) -> ModelDescriptor {
        ModelDescriptor { kind: self.kind, c: self.c, dim: self.dim }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Real dimension of the ambient space.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Scalar curvature.
    pub fn scal(&self) -> f64 {
        let d = self.dim as f64;
        match self.kind {
            ModelKind::Euclidean => 0.0,
            ModelKind::Sphere | ModelKind::Hyperbolic => d * (d - 1.0) * self.c,
            ModelKind::ComplexProjective | ModelKind::ComplexHyperbolic => {
                let m = d / 2.0;
                m * (m + 1.0) * self.c
            }
        }
    }

    /// Einstein constant: Ric = κ·g with κ = scal / dim.
    pub fn einstein_constant(&self) -> f64 {
        self.scal() / self.dim as f64
    }

    /// max ‖R̃(v₁, v₂)v₃‖ over unit triples (cached at construction).
    pub fn r_norm(&self) -> f64 {
        self.r_norm
    }

    pub fn contains(&self, p: &Vector) -> bool {
        if p.len() != self.dim || p.iter().any(|x| !x.is_finite()) {
            return false;
        }
        let r2 = p.norm_squared();
        match self.kind {
            ModelKind::Hyperbolic => 1.0 + self.c * r2 / 4.0 > 1e-12,
            ModelKind::ComplexHyperbolic => r2 < 1.0 - 1e-12,
            _ => true,
        }
    }

    fn check_point(&self, p: &Vector) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: p.len() });
        }
        if !self.contains(p) {
            return Err(Error::Input("point outside chart domain".into()));
        }
        Ok(())
    }

    /// Complex structure (multiplication by i in affine coordinates).
    pub fn complex_structure(&self, v: &Vector) -> Vector {
        let mut out = Vector::zeros(v.len());
        for k in 0..v.len() / 2 {
            out[2 * k] = -v[2 * k + 1];
            out[2 * k + 1] = v[2 * k];
        }
        out
    }

    fn conformal_factor(&self, p: &Vector) -> f64 {
        1.0 / (1.0 + self.c * p.norm_squared() / 4.0)
    }

    /// Metric components at `p`.
    pub fn metric(&self, p: &Vector) -> Mat {
        let n = self.dim;
        match self.kind {
            ModelKind::Euclidean => Mat::identity(n, n),
            ModelKind::Sphere | ModelKind::Hyperbolic => {
                let phi = self.conformal_factor(p);
                Mat::identity(n, n) * (phi * phi)
            }
            ModelKind::ComplexProjective | ModelKind::ComplexHyperbolic => {
                let eps = if self.kind == ModelKind::ComplexProjective { 1.0 } else { -1.0 };
                let scale = 4.0 / self.c.abs();
                let q = 1.0 + eps * p.norm_squared();
                // g(u,v) = scale·Re[(⟨u,v⟩ q − eps ⟨u,z⟩⟨z,v⟩) / q²]
                // with ⟨u,z⟩ = Σ u_k z̄_k. Write w = (Re, Im) pairs of z.
                // Re(⟨u,z⟩⟨z,v⟩) = (u·p)(v·p) + (u·Jp)(v·Jp).
                let jp = self.complex_structure(p);
                let mut g = Mat::identity(n, n) * q;
                g -= (p * p.transpose() + &jp * jp.transpose()) * eps;
                g * (scale / (q * q))
            }
        }
    }

    /// Christoffel map Γ(x, y) such that ∇_X Y = dY(X) + Γ(X, Y) in the chart.
    pub fn christoffel(&self, p: &Vector, x: &Vector, y: &Vector) -> Vector {
        match self.kind {
            ModelKind::Euclidean => Vector::zeros(self.dim),
            ModelKind::Sphere | ModelKind::Hyperbolic => {
                let grad_sigma = p * (-self.c / 2.0 * self.conformal_factor(p));
                x * y.dot(&grad_sigma) + y * x.dot(&grad_sigma) - grad_sigma * x.dot(y)
            }
            ModelKind::ComplexProjective | ModelKind::ComplexHyperbolic => {
                // Γ(X,Y) = −eps (X ⟨Y, z⟩ + Y ⟨X, z⟩) / (1 + eps|z|²), complex-bilinear,
                // with ⟨Y, z⟩ = Σ z̄_j Y_j.
                let eps = if self.kind == ModelKind::ComplexProjective { 1.0 } else { -1.0 };
                let q = 1.0 + eps * p.norm_squared();
                let lin = |w: &Vector| -> (f64, f64) {
                    let mut re = 0.0;
                    let mut im = 0.0;
                    for k in 0..p.len() / 2 {
                        let (a, b) = (p[2 * k], p[2 * k + 1]);
                        let (u, v) = (w[2 * k], w[2 * k + 1]);
                        // (a − ib)(u + iv)
                        re += a * u + b * v;
                        im += a * v - b * u;
                    }
                    (re, im)
                };
                let cmul = |w: &Vector, (re, im): (f64, f64)| -> Vector {
                    w * re + self.complex_structure(w) * im
                };
                (cmul(x, lin(y)) + cmul(y, lin(x))) * (-eps / q)
            }
        }
    }

    /// Curvature R̃(x, y)z at `p`, skipping the domain check.
    pub fn curvature_at(&self, p: &Vector, x: &Vector, y: &Vector, z: &Vector) -> Vector {
        match self.kind {
            ModelKind::Euclidean => Vector::zeros(self.dim),
            ModelKind::Sphere | ModelKind::Hyperbolic => {
                let g = self.metric(p);
                let ip = |a: &Vector, b: &Vector| (a.transpose() * &g * b)[(0, 0)];
                (x * ip(y, z) - y * ip(x, z)) * self.c
            }
            ModelKind::ComplexProjective | ModelKind::ComplexHyperbolic => {
                let g = self.metric(p);
                let ip = |a: &Vector, b: &Vector| (a.transpose() * &g * b)[(0, 0)];
                let jx = self.complex_structure(x);
                let jy = self.complex_structure(y);
                let jz = self.complex_structure(z);
                (x * ip(y, z) - y * ip(x, z) + &jx * ip(&jy, z) - &jy * ip(&jx, z)
                    - jz * (2.0 * ip(&jx, y)))
                    * (self.c / 4.0)
            }
        }
    }

    pub fn curvature(&self, p: &Vector, x: &Vector, y: &Vector, z: &Vector) -> Result<Vector> {
        self.check_point(p)?;
        Ok(self.curvature_at(p, x, y, z))
    }

    /// Normal Jacobi data for a unit vector ξ at `p`, expressed in a
    /// g̃-orthonormal basis of the orthocomplement of ξ.
    pub fn normal_jacobi(&self, p: &Vector, xi: &Vector) -> Result<NormalJacobi> {
        self.check_point(p)?;
        let g = self.metric(p);
        let norm = (xi.transpose() * &g * xi)[(0, 0)].sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Input(format!("normal vector has norm {norm}, expected 1")));
        }
        let basis = orthocomplement_basis(&g, xi);
        let n = basis.ncols();
        let cols: Vec<Vector> = (0..n).map(|i| basis.column(i).into_owned()).collect();
        let coord = |v: &Vector| -> Vector {
            let gv = &g * v;
            Vector::from_fn(n, |i, _| cols[i].dot(&gv))
        };
        let jacobi = Operator(Mat::from_columns(
            &cols
                .iter()
                .map(|e| coord(&self.curvature_at(p, e, xi, xi)))
                .collect::<Vec<_>>(),
        ));
        let r1 = TensorSlot3::from_pairs(n, |x, y| coord(&self.curvature_at(p, xi, &cols[x], &cols[y])));
        let r3 = TensorSlot3::from_pairs(n, |x, y| coord(&self.curvature_at(p, &cols[x], &cols[y], xi)));
        Ok(NormalJacobi { basis, jacobi, r1, r3 })
    }

    /// Finite-difference estimate of ‖∇̃R̃‖ (max component) and the Einstein residual.
    pub fn local_symmetry_check(&self, p: &Vector, h: f64) -> Result<SymmetryResidual> {
        self.check_point(p)?;
        let n = self.dim;
        let e = |i: usize| Vector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 });
        let basis: Vec<Vector> = (0..n).map(e).collect();
        let mut nabla = 0.0f64;
        for w in 0..n {
            let pp = p + &basis[w] * h;
            let pm = p - &basis[w] * h;
            if !self.contains(&pp) || !self.contains(&pm) {
                return Err(Error::Input("finite-difference stencil leaves chart domain".into()));
            }
            let ew = &basis[w];
            for x in 0..n {
                for y in 0..n {
                    if x == y {
                        continue;
                    }
                    for z in 0..n {
                        let (bx, by, bz) = (&basis[x], &basis[y], &basis[z]);
                        let d = (self.curvature_at(&pp, bx, by, bz) - self.curvature_at(&pm, bx, by, bz))
                            / (2.0 * h);
                        let r = self.curvature_at(p, bx, by, bz);
                        let cov = d + self.christoffel(p, ew, &r)
                            - self.curvature_at(p, &self.christoffel(p, ew, bx), by, bz)
                            - self.curvature_at(p, bx, &self.christoffel(p, ew, by), bz)
                            - self.curvature_at(p, bx, by, &self.christoffel(p, ew, bz));
                        nabla = nabla.max(cov.amax());
                    }
                }
            }
        }
        let ric = self.ricci_operator(p);
        let target = Mat::identity(n, n) * self.einstein_constant();
        Ok(SymmetryResidual { nabla_r: nabla, einstein: (ric - target).amax() })
    }

    /// Ricci (1,1)-tensor: Ric(Y) = Σ_X-trace of X ↦ R̃(X, Y)·, raised with g.
    pub fn ricci_operator(&self, p: &Vector) -> Mat {
        let n = self.dim;
        let e = |i: usize| Vector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 });
        // Ric(y, z) = Σ_i dx^i(R(e_i, y) z); as an operator on z with y fixed... we
        // return the matrix of Ric^♯ defined by g(Ric^♯ y, z) = Ric(y, z).
        let mut ric = Mat::zeros(n, n);
        for y in 0..n {
            for z in 0..n {
                let mut s = 0.0;
                for i in 0..n {
                    s += self.curvature_at(p, &e(i), &e(y), &e(z))[i];
                }
                ric[(y, z)] = s;
            }
        }
        let g = self.metric(p);
        g.try_inverse().expect("metric invertible") * ric
    }

    /// RK4-integrated unit-speed geodesic with parallel transport of the
    /// coordinate basis at `p`.
    pub fn geodesic_and_transport(&self, p: &Vector, v: &Vector, t_max: f64, dt: f64) -> Result<GeodesicSegment> {
        self.check_point(p)?;
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        if !(dt > 0.0) || !(t_max >= 0.0) {
            return Err(Error::Input("dt must be positive and t_max non-negative".into()));
        }
        let g0 = self.metric(p);
        let speed = (v.transpose() * &g0 * v)[(0, 0)].sqrt();
        if (speed - 1.0).abs() > 1e-10 {
            return Err(Error::Input(format!("initial velocity has norm {speed}, expected 1")));
        }
        let n = self.dim;
        let steps = (t_max / dt).ceil() as usize;
        let h = if steps == 0 { 0.0 } else { t_max / steps as f64 };
        let mut state = GeoState { x: p.clone(), v: v.clone(), p: Mat::identity(n, n) };
        let mut seg = GeodesicSegment {
            times: vec![0.0],
            points: vec![state.x.clone()],
            velocities: vec![state.v.clone()],
            transports: vec![state.p.clone()],
            initial_metric: g0.clone(),
        };
        for k in 0..steps {
            state = self.rk4_geodesic(&state, h);
            let t = (k + 1) as f64 * h;
            if !self.contains(&state.x) {
                return Err(Error::ChartExit { param: t });
            }
            seg.times.push(t);
            seg.points.push(state.x.clone());
            seg.velocities.push(state.v.clone());
            seg.transports.push(state.p.clone());
        }
        let (speed_err, iso_err) = seg.invariant_errors(self);
        let tol = 1e-6;
        if speed_err > tol || iso_err > tol {
            return Err(Error::Input(format!(
                "geodesic invariants drifted (speed {speed_err:e}, isometry {iso_err:e}); reduce dt"
            )));
        }
        Ok(seg)
    }

    fn geo_rhs(&self, s: &GeoState) -> GeoState {
        let n = self.dim;
        let a = -self.christoffel(&s.x, &s.v, &s.v);
        let mut dp = Mat::zeros(n, n);
        for j in 0..n {
            let col = s.p.column(j).into_owned();
            dp.set_column(j, &(-self.christoffel(&s.x, &s.v, &col)));
        }
        GeoState { x: s.v.clone(), v: a, p: dp }
    }

    fn rk4_geodesic(&self, s: &GeoState, h: f64) -> GeoState {
        let k1 = self.geo_rhs(s);
        let k2 = self.geo_rhs(&s.axpy(h / 2.0, &k1));
        let k3 = self.geo_rhs(&s.axpy(h / 2.0, &k2));
        let k4 = self.geo_rhs(&s.axpy(h, &k3));
        GeoState {
            x: &s.x + (&k1.x + &k2.x * 2.0 + &k3.x * 2.0 + &k4.x) * (h / 6.0),
            v: &s.v + (&k1.v + &k2.v * 2.0 + &k3.v * 2.0 + &k4.v) * (h / 6.0),
            p: &s.p + (&k1.p + &k2.p * 2.0 + &k3.p * 2.0 + &k4.p) * (h / 6.0),
        }
    }

    /// Integrates a Jacobi field `J'' + R̃(J, γ')γ' = 0` along the geodesic from
    /// `p` with unit velocity `v`, using covariant derivatives in the chart.
    /// Returns `(γ(t), γ'(t), J(t), J'(t))` at `t` (which may be negative).
    pub fn integrate_jacobi_field(
        &self,
        p: &Vector,
        v: &Vector,
        j0: &Vector,
        dj0: &Vector,
        t: f64,
        steps: usize,
    ) -> Result<JacobiSample> {
        self.check_point(p)?;
        let steps = steps.max(1);
        let h = t / steps as f64;
        let mut s = [p.clone(), v.clone(), j0.clone(), dj0.clone()];
        let rhs = |s: &[Vector; 4]| -> [Vector; 4] {
            let [x, u, jf, w] = s;
            [
                u.clone(),
                -self.christoffel(x, u, u),
                w - self.christoffel(x, u, jf),
                -self.curvature_at(x, jf, u, u) - self.christoffel(x, u, w),
            ]
        };
        let axpy = |s: &[Vector; 4], a: f64, k: &[Vector; 4]| -> [Vector; 4] {
            [&s[0] + &k[0] * a, &s[1] + &k[1] * a, &s[2] + &k[2] * a, &s[3] + &k[3] * a]
        };
        for k in 0..steps {
            let k1 = rhs(&s);
            let k2 = rhs(&axpy(&s, h / 2.0, &k1));
            let k3 = rhs(&axpy(&s, h / 2.0, &k2));
            let k4 = rhs(&axpy(&s, h, &k3));
            for i in 0..4 {
                s[i] = &s[i] + (&k1[i] + &k2[i] * 2.0 + &k3[i] * 2.0 + &k4[i]) * (h / 6.0);
            }
            if !self.contains(&s[0]) {
                return Err(Error::ChartExit { param: (k + 1) as f64 * h });
            }
        }
        let [x, u, jf, w] = s;
        Ok(JacobiSample { point: x, velocity: u, field: jf, derivative: w })
    }

    /// Maximizes ‖R̃(v₁,v₂)v₃‖ over unit triples at the chart origin by
    /// alternating exact maximization (each slot is linear) from seeded starts.
    fn maximize_curvature_norm(&self) -> f64 {
        if self.kind == ModelKind::Euclidean {
            return 0.0;
        }
        let n = self.dim;
        let origin = Vector::zeros(n);
        let mp = MetricPoint::new(self.metric(&origin)).expect("metric at origin");
        let frame = mp.frame().clone();
        // Curvature in orthonormal components: T(a, b, c) = R(e_a, e_b)e_c.
        let ortho = |v: &Vector| -> Vector { frame.transpose() * mp.g() * v };
        let e: Vec<Vector> = (0..n).map(|i| frame.column(i).into_owned()).collect();
        let mut t = vec![Vector::zeros(n); n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    t[(a * n + b) * n + c] = ortho(&self.curvature_at(&origin, &e[a], &e[b], &e[c]));
                }
            }
        }
        // Linear map in slot `slot` with the other two fixed.
        let slot_map = |slot: usize, u: &[Vector; 3]| -> Mat {
            let mut m = Mat::zeros(n, n);
            for k in 0..n {
                let mut col = Vector::zeros(n);
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            let w = match slot {
                                0 => (if a == k { 1.0 } else { 0.0 }) * u[1][b] * u[2][c],
                                1 => u[0][a] * (if b == k { 1.0 } else { 0.0 }) * u[2][c],
                                _ => u[0][a] * u[1][b] * (if c == k { 1.0 } else { 0.0 }),
                            };
                            if w != 0.0 {
                                col += &t[(a * n + b) * n + c] * w;
                            }
                        }
                    }
                }
                m.set_column(k, &col);
            }
            m
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c0de);
        let mut best = 0.0f64;
        for _ in 0..64 {
            let mut u: [Vector; 3] = std::array::from_fn(|_| {
                let v = Vector::from_fn(n, |_, _| rng.gen::<f64>() - 0.5);
                v.normalize()
            });
            let mut val = 0.0;
            for _ in 0..200 {
                let mut improved = 0.0f64;
                for slot in 0..3 {
                    let m = slot_map(slot, &u);
                    let svd = SVD::new(m, false, true);
                    let (imax, smax) = svd
                        .singular_values
                        .iter()
                        .enumerate()
                        .fold((0, -1.0), |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc });
                    let vt = svd.v_t.expect("requested");
                    u[slot] = vt.row(imax).transpose().into_owned();
                    improved = improved.max(smax - val);
                    val = smax;
                }
                if improved.abs() < 1e-15 {
                    break;
                }
            }
            best = best.max(val);
        }
        best
    }
}

/// Normal Jacobi operator and the associated (1,2)-tensors at an ambient point,
/// expressed in an orthonormal basis of ξ⊥ (columns of `basis`).
#[derive(Clone, Debug)]
pub struct NormalJacobi {
    pub basis: Mat,
    pub jacobi: Operator,
    /// R̃₁(ξ)(X, Y) = tangential part of R̃(ξ, X)Y.
    pub r1: TensorSlot3,
    /// R̃₃(ξ)(X, Y) = R̃(X, Y)ξ.
    pub r3: TensorSlot3,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SymmetryResidual {
    pub nabla_r: f64,
    pub einstein: f64,
}

#[derive(Clone, Debug)]
struct GeoState {
    x: Vector,
    v: Vector,
    p: Mat,
}

impl GeoState {
    fn axpy(&self, a: f64, k: &GeoState) -> GeoState {
        GeoState { x: &self.x + &k.x * a, v: &self.v + &k.v * a, p: &self.p + &k.p * a }
    }
}

/// Samples of a geodesic γ with velocity and parallel transport `P_t`;
/// `transports[k]` maps coordinate vectors at γ(0) to their transports at γ(t_k).
#[derive(Clone, Debug)]
pub struct GeodesicSegment {
    pub times: Vec<f64>,
    pub points: Vec<Vector>,
    pub velocities: Vec<Vector>,
    pub transports: Vec<Mat>,
    initial_metric: Mat,
}

impl GeodesicSegment {
    pub fn end(&self) -> (&Vector, &Vector, &Mat) {
        let k = self.times.len() - 1;
        (&self.points[k], &self.velocities[k], &self.transports[k])
    }

    /// Maximum deviation from unit speed and from the isometry property of P.
    pub fn invariant_errors(&self, model: &AmbientModel) -> (f64, f64) {
        let mut speed = 0.0f64;
        let mut iso = 0.0f64;
        for k in 0..self.times.len() {
            let g = model.metric(&self.points[k]);
            let v = &self.velocities[k];
            speed = speed.max(((v.transpose() * &g * v)[(0, 0)] - 1.0).abs());
            let p = &self.transports[k];
            iso = iso.max((p.transpose() * &g * p - &self.initial_metric).amax());
        }
        (speed, iso)
    }
}

#[derive(Clone, Debug)]
pub struct JacobiSample {
    pub point: Vector,
    pub velocity: Vector,
    pub field: Vector,
    pub derivative: Vector,
}

/// Coefficient of the Jacobi field along a normal geodesic in a locally
/// symmetric space: `cos(t√ν) − λ sin(t√ν)/√ν`, with the hyperbolic branch for
/// ν < 0 and the linear branch for ν = 0.
pub fn jacobi_closed_form(lambda: f64, nu: f64, t: f64) -> f64 {
    let (c, s) = cos_sinc(nu, t);
    c - lambda * s
}

/// Derivative in t of [`jacobi_closed_form`].
pub fn jacobi_closed_form_derivative(lambda: f64, nu: f64, t: f64) -> f64 {
    let (c, s) = cos_sinc(nu, t);
    -nu * s - lambda * c
}

/// (cos(t√ν), sin(t√ν)/√ν) with the analytic continuation for ν ≤ 0.
fn cos_sinc(nu: f64, t: f64) -> (f64, f64) {
    if nu > 0.0 {
        let w = nu.sqrt();
        ((t * w).cos(), (t * w).sin() / w)
    } else if nu < 0.0 {
        let w = (-nu).sqrt();
        ((t * w).cosh(), (t * w).sinh() / w)
    } else {
        (1.0, t)
    }
}

/// Orthonormal (w.r.t. g) basis of the g-orthocomplement of `xi`, as columns.
pub fn orthocomplement_basis(g: &Mat, xi: &Vector) -> Mat {
    let n = g.nrows();
    let mut basis: Vec<Vector> = Vec::with_capacity(n - 1);
    let ip = |a: &Vector, b: &Vector| (a.transpose() * g * b)[(0, 0)];
    let xi_n = xi / ip(xi, xi).sqrt();
    for k in 0..n {
        let mut v = Vector::from_fn(n, |i, _| if i == k { 1.0 } else { 0.0 });
        v -= &xi_n * ip(&v, &xi_n);
        for b in &basis {
            v -= b * ip(&v, b);
        }
        let nv = ip(&v, &v).sqrt();
        if nv > 1e-8 && basis.len() < n - 1 {
            basis.push(v / nv);
        }
    }
    Mat::from_columns(&basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit(n: usize, i: usize) -> Vector {
        Vector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 })
    }

    /// Christoffel symbols from central differences of the metric.
    fn fd_christoffel(model: &AmbientModel, p: &Vector, h: f64) -> Vec<Mat> {
        let n = model.dim();
        let dg: Vec<Mat> = (0..n)
            .map(|k| (model.metric(&(p + unit(n, k) * h)) - model.metric(&(p - unit(n, k) * h))) / (2.0 * h))
            .collect();
        let gi = model.metric(p).try_inverse().unwrap();
        (0..n)
            .map(|k| {
                Mat::from_fn(n, n, |i, j| {
                    (0..n)
                        .map(|l| 0.5 * gi[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]))
                        .sum()
                })
            })
            .collect()
    }

    /// Riemann tensor from finite differences of Christoffel symbols:
    /// R(∂c, ∂d)∂b = (∂c Γ^a_db − ∂d Γ^a_cb + Γ^a_ce Γ^e_db − Γ^a_de Γ^e_cb) ∂a.
    fn fd_curvature(model: &AmbientModel, p: &Vector, x: &Vector, y: &Vector, z: &Vector) -> Vector {
        let n = model.dim();
        let h = 1e-4;
        let gam = fd_christoffel(model, p, 1e-5);
        let dgam: Vec<Vec<Mat>> = (0..n)
            .map(|c| {
                let gp = fd_christoffel(model, &(p + unit(n, c) * h), 1e-5);
                let gm = fd_christoffel(model, &(p - unit(n, c) * h), 1e-5);
                (0..n).map(|a| (&gp[a] - &gm[a]) / (2.0 * h)).collect()
            })
            .collect();
        let mut out = Vector::zeros(n);
        for a in 0..n {
            let mut s = 0.0;
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut r = dgam[c][a][(d, b)] - dgam[d][a][(c, b)];
                        for e in 0..n {
                            r += gam[a][(c, e)] * gam[e][(d, b)] - gam[a][(d, e)] * gam[e][(c, b)];
                        }
                        s += r * z[b] * x[c] * y[d];
                    }
                }
            }
            out[a] = s;
        }
        out
    }

    fn models() -> Vec<AmbientModel> {
        vec![
            AmbientModel::euclidean(3),
            AmbientModel::sphere(1.0, 3).unwrap(),
            AmbientModel::hyperbolic(-1.0, 3).unwrap(),
            AmbientModel::complex_projective(4.0, 2).unwrap(),
            AmbientModel::complex_hyperbolic(-4.0, 2).unwrap(),
        ]
    }

    fn sample_point(m: &AmbientModel) -> Vector {
        let n = m.dim();
        Vector::from_fn(n, |i, _| 0.13 + 0.07 * i as f64 - 0.05 * (i % 2) as f64)
    }

    #[test]
    fn christoffel_matches_metric_derivatives() {
        for m in models() {
            let p = sample_point(&m);
            let n = m.dim();
            let fd = fd_christoffel(&m, &p, 1e-5);
            for i in 0..n {
                for j in 0..n {
                    let cl = m.christoffel(&p, &unit(n, i), &unit(n, j));
                    for k in 0..n {
                        assert!((cl[k] - fd[k][(i, j)]).abs() < 1e-8, "{:?} Γ^{k}_{i}{j}", m.kind());
                    }
                }
            }
        }
    }

    #[test]
    fn closed_form_curvature_matches_finite_difference_oracle() {
        for m in models() {
            let p = sample_point(&m);
            let n = m.dim();
            let x = Vector::from_fn(n, |i, _| 1.0 + 0.3 * i as f64);
            let y = Vector::from_fn(n, |i, _| (i as f64 - 1.0) * 0.7);
            let z = Vector::from_fn(n, |i, _| 0.5 - 0.2 * i as f64);
            let exact = m.curvature_at(&p, &x, &y, &z);
            let fd = fd_curvature(&m, &p, &x, &y, &z);
            assert!((exact - fd).amax() < 1e-5, "{:?}", m.kind());
        }
    }

    #[test]
    fn euclidean_is_flat() {
        let m = AmbientModel::euclidean(3);
        let p = Vector::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!(m.curvature(&p, &unit(3, 0), &unit(3, 1), &unit(3, 1)).unwrap().amax(), 0.0);
    }

    #[test]
    fn sectional_curvatures() {
        let s = AmbientModel::sphere(1.0, 3).unwrap();
        let o = Vector::zeros(3);
        let (x, y) = (unit(3, 0), unit(3, 1));
        let k = s.curvature(&o, &x, &y, &y).unwrap().dot(&x);
        assert!((k - 1.0).abs() < 1e-14);

        let cp = AmbientModel::complex_projective(4.0, 2).unwrap();
        let o = Vector::zeros(4);
        let x = unit(4, 0);
        let jx = cp.complex_structure(&x);
        let hol = cp.curvature(&o, &x, &jx, &jx).unwrap().dot(&x);
        assert!((hol - 4.0).abs() < 1e-14);
        let tr = cp.curvature(&o, &x, &unit(4, 2), &unit(4, 2)).unwrap().dot(&x);
        assert!((tr - 1.0).abs() < 1e-14);
    }

    #[test]
    fn curvature_symmetries() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for m in models() {
            let n = m.dim();
            for _ in 0..20 {
                let mut rv = || Vector::from_fn(n, |_, _| rng.gen::<f64>() - 0.5);
                let p = rv() * 0.5;
                let (x, y, z, w) = (rv(), rv(), rv(), rv());
                let g = m.metric(&p);
                let ip = |a: &Vector, b: &Vector| (a.transpose() * &g * b)[(0, 0)];
                let r = |a: &Vector, b: &Vector, c: &Vector| m.curvature_at(&p, a, b, c);
                assert!((r(&x, &y, &z) + r(&y, &x, &z)).amax() < 1e-10);
                assert!((ip(&r(&x, &y, &z), &w) + ip(&r(&x, &y, &w), &z)).abs() < 1e-10);
                assert!((r(&x, &y, &z) + r(&y, &z, &x) + r(&z, &x, &y)).amax() < 1e-10);
            }
        }
    }

    #[test]
    fn normal_jacobi_space_forms_and_cp2() {
        let s = AmbientModel::sphere(1.0, 3).unwrap();
        let o = Vector::zeros(3);
        let nj = s.normal_jacobi(&o, &unit(3, 2)).unwrap();
        assert!((&nj.jacobi.0 - Mat::identity(2, 2)).amax() < 1e-14);
        assert!(nj.r3.amax() < 1e-14);

        let e = AmbientModel::euclidean(3);
        let nj = e.normal_jacobi(&o, &unit(3, 0)).unwrap();
        assert_eq!(nj.jacobi.amax() + nj.r1.amax() + nj.r3.amax(), 0.0);

        let cp = AmbientModel::complex_projective(4.0, 2).unwrap();
        let p = Vector::from_vec(vec![0.2, -0.1, 0.3, 0.05]);
        let g = cp.metric(&p);
        let raw = Vector::from_vec(vec![0.3, 0.7, -0.2, 0.4]);
        let xi = &raw / (raw.transpose() * &g * &raw)[(0, 0)].sqrt();
        let nj = cp.normal_jacobi(&p, &xi).unwrap();
        let mp = MetricPoint::identity(3);
        assert!(nj.jacobi.is_symmetric(&mp, 1e-12));
        let mut eig: Vec<f64> = nj.jacobi.0.clone().symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((eig[0] - 1.0).abs() < 1e-12 && (eig[1] - 1.0).abs() < 1e-12 && (eig[2] - 4.0).abs() < 1e-12);
        // The eigenvalue 4 belongs to Jξ.
        let jxi = cp.complex_structure(&xi);
        let cj = Vector::from_fn(3, |i, _| nj.basis.column(i).dot(&(&g * &jxi)));
        assert!((nj.jacobi.apply(&cj) - &cj * 4.0).amax() < 1e-12);

        assert!(cp.normal_jacobi(&p, &raw).is_err());
    }

    #[test]
    fn local_symmetry_and_einstein() {
        let e = AmbientModel::euclidean(3);
        let r = e.local_symmetry_check(&Vector::zeros(3), 1e-3).unwrap();
        assert_eq!(r.nabla_r, 0.0);
        let s = AmbientModel::sphere(1.0, 3).unwrap();
        let r = s.local_symmetry_check(&Vector::from_vec(vec![0.3, -0.2, 0.5]), 1e-3).unwrap();
        assert!(r.nabla_r < 1e-4 && r.einstein < 1e-12, "{r:?}");
        let cp = AmbientModel::complex_projective(4.0, 2).unwrap();
        let r = cp.local_symmetry_check(&Vector::from_vec(vec![0.3, -0.2, 0.5, 0.1]), 1e-3).unwrap();
        assert!(r.nabla_r < 1e-3 && r.einstein < 1e-12, "{r:?}");
        assert_eq!(cp.scal(), 24.0);
        assert_eq!(cp.einstein_constant(), 6.0);
    }

    #[test]
    fn jacobi_closed_form_values() {
        assert_eq!(jacobi_closed_form(0.3, 2.0, 0.0), 1.0);
        assert_eq!(jacobi_closed_form(-1.0, -2.0, 0.0), 1.0);
        assert!(jacobi_closed_form(0.0, 1.0, PI / 2.0).abs() < 1e-15);
        assert!((jacobi_closed_form(1.0, 0.0, 0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn euclidean_geodesic_is_straight() {
        let m = AmbientModel::euclidean(3);
        let p = Vector::from_vec(vec![1.0, 0.0, -1.0]);
        let v = Vector::from_vec(vec![0.6, 0.8, 0.0]);
        let seg = m.geodesic_and_transport(&p, &v, 2.0, 0.1).unwrap();
        let (x, _, _) = seg.end();
        assert!((x - (&p + &v * 2.0)).amax() < 1e-14);
    }

    #[test]
    fn sphere_great_circle_closes() {
        let m = AmbientModel::sphere(1.0, 3).unwrap();
        let p = Vector::from_vec(vec![2.0, 0.0, 0.0]);
        let v = Vector::from_vec(vec![0.0, 2.0, 0.0]);
        let seg = m.geodesic_and_transport(&p, &v, 2.0 * PI, 1e-4).unwrap();
        let (x, _, _) = seg.end();
        assert!((x - &p).amax() < 1e-8);
        let (speed, iso) = seg.invariant_errors(&m);
        assert!(speed < 1e-9 && iso < 1e-9);
    }

    #[test]
    fn cp2_transport_is_isometric() {
        let m = AmbientModel::complex_projective(4.0, 2).unwrap();
        let p = Vector::from_vec(vec![0.1, 0.2, -0.1, 0.0]);
        let g = m.metric(&p);
        let raw = Vector::from_vec(vec![0.5, -0.3, 0.2, 0.8]);
        let v = &raw / (raw.transpose() * &g * &raw)[(0, 0)].sqrt();
        let seg = m.geodesic_and_transport(&p, &v, 1.0, 1e-3).unwrap();
        let (speed, iso) = seg.invariant_errors(&m);
        assert!(speed < 1e-9 && iso < 1e-9);
    }

    #[test]
    fn hyperbolic_geodesic_exits_chart() {
        let m = AmbientModel::hyperbolic(-1.0, 3).unwrap();
        let p = Vector::zeros(3);
        let v = unit(3, 0);
        // Chart radius 2 is at infinite distance; a short run stays inside.
        assert!(m.geodesic_and_transport(&p, &v, 3.0, 1e-3).is_ok());
    }

    #[test]
    fn curvature_norm_values() {
        assert_eq!(AmbientModel::euclidean(3).r_norm(), 0.0);
        let s = AmbientModel::sphere(1.0, 4).unwrap();
        assert!((s.r_norm() - 1.0).abs() < 1e-10);
        let h = AmbientModel::hyperbolic(-2.0, 3).unwrap();
        assert!((h.r_norm() - 2.0).abs() < 1e-10);
        let cp = AmbientModel::complex_projective(4.0, 2).unwrap();
        assert!(cp.r_norm() >= 4.0 - 1e-10);
    }

    #[test]
    fn curvature_norm_bounds_random_triples() {
        use rand::Rng;
        for m in models() {
            let n = m.dim();
            let o = Vector::zeros(n);
            let g = m.metric(&o);
            let norm = |v: &Vector| (v.transpose() * &g * v)[(0, 0)].sqrt();
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let mut max_seen = 0.0f64;
            for _ in 0..20_000 {
                let mut rv = || {
                    let v = Vector::from_fn(n, |_, _| rng.gen::<f64>() - 0.5);
                    let nv = norm(&v);
                    v / nv
                };
                let (a, b, c) = (rv(), rv(), rv());
                max_seen = max_seen.max(norm(&m.curvature_at(&o, &a, &b, &c)));
            }
            assert!(max_seen <= m.r_norm() * (1.0 + 1e-12), "{:?}: {max_seen} > {}", m.kind(), m.r_norm());
        }
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(AmbientModel::sphere(-1.0, 3).is_err());
        assert!(AmbientModel::hyperbolic(1.0, 3).is_err());
        assert!(AmbientModel::new(ModelDescriptor { kind: ModelKind::ComplexProjective, c: 4.0, dim: 3 }).is_err());
    }
}
