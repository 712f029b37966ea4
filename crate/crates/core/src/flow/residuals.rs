//! Finite-difference residuals of the evolution equations along a trace.
//!
//! Each equation is assembled twice where the printed display and the
//! convention-consistent derivation differ; `residual` is the latter.

use serde::{Deserialize, Serialize};

use super::FlowTrace;
use crate::error::{Error, Result};
use crate::immersion::{Derivatives, HypersurfaceState, PointGeometry};
use crate::tensor::{commutator, gap, s_hat, trace_slot3, Mat, MetricPoint, Operator, TensorSlot3, Vector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvolutionEquation {
    Metric,
    Normal,
    Shape,
    Mean,
    Jacobi,
    Commutator,
    Gap,
}

impl EvolutionEquation {
    pub const ALL: [EvolutionEquation; 7] = [
        EvolutionEquation::Metric,
        EvolutionEquation::Normal,
        EvolutionEquation::Shape,
        EvolutionEquation::Mean,
        EvolutionEquation::Jacobi,
        EvolutionEquation::Commutator,
        EvolutionEquation::Gap,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            EvolutionEquation::Metric => "Lemma 2.1",
            EvolutionEquation::Normal => "Lemma 2.2",
            EvolutionEquation::Shape => "Lemma 2.3",
            EvolutionEquation::Mean => "Lemma 2.4",
            EvolutionEquation::Jacobi => "Prop. 3.3",
            EvolutionEquation::Commutator => "(4.6)",
            EvolutionEquation::Gap => "Lemma 4.3",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EvolutionEquation::Metric => "metric",
            EvolutionEquation::Normal => "normal",
            EvolutionEquation::Shape => "shape",
            EvolutionEquation::Mean => "mean",
            EvolutionEquation::Jacobi => "jacobi",
            EvolutionEquation::Commutator => "commutator",
            EvolutionEquation::Gap => "gap",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown evolution equation '{s}'")))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EvolutionResidual {
    pub equation: EvolutionEquation,
    pub tag: &'static str,
    pub t_index: usize,
    /// Max over interior points of the convention-consistent residual norm.
    pub residual: f64,
    /// Same for the equation as printed, when it differs.
    pub printed: Option<f64>,
    /// Signed residual components at the grid centre (for Richardson studies).
    pub center: Vec<f64>,
    pub center_printed: Option<Vec<f64>>,
}

/// ‖a − b‖ / ‖b − c‖ for three successive refinements.
pub fn richardson_ratio(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let diff = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    diff(a, b) / diff(b, c)
}

/// Finite-difference weights for d/dt at `k`: central (order 2) or forward (order 1).
fn time_weights(times: &[f64], k: usize, fd_order: usize) -> Result<Vec<(usize, f64)>> {
    match fd_order {
        2 => {
            if k == 0 || k + 1 >= times.len() {
                return Err(Error::InsufficientSnapshots { need: 3, have: times.len() });
            }
            let (a, b) = (times[k] - times[k - 1], times[k + 1] - times[k]);
            Ok(vec![(k - 1, -b / (a * (a + b))), (k, (b - a) / (a * b)), (k + 1, a / (b * (a + b)))])
        }
        1 => {
            if k + 1 >= times.len() {
                return Err(Error::InsufficientSnapshots { need: 2, have: times.len() });
            }
            let dt = times[k + 1] - times[k];
            Ok(vec![(k, -1.0 / dt), (k + 1, 1.0 / dt)])
        }
        _ => Err(Error::Input(format!("fd_order must be 1 or 2, got {fd_order}"))),
    }
}

fn op_from_columns(n: usize, f: impl Fn(&Vector) -> Vector) -> Operator {
    let cols: Vec<Vector> = (0..n).map(|k| f(&Vector::from_fn(n, |i, _| if i == k { 1.0 } else { 0.0 }))).collect();
    Operator(Mat::from_columns(&cols))
}

fn flat(op: &Operator) -> Vec<f64> {
    op.0.iter().copied().collect()
}

/// Pointwise algebraic pieces shared by several equations.
struct Local<'a> {
    p: &'a PointGeometry,
    d: &'a Derivatives,
    m: &'a MetricPoint,
    n: usize,
    a2: Operator,
    tr_a2: f64,
    tr_j: f64,
    scal: f64,
}

impl<'a> Local<'a> {
    fn new(state: &'a HypersurfaceState, i: usize) -> Result<Self> {
        let p = state.point(i);
        let a2 = p.a.square();
        Ok(Self {
            p,
            d: state.derivs(i)?,
            m: &p.metric,
            n: state.dim(),
            tr_a2: a2.trace(),
            a2,
            tr_j: p.jacobi.trace(),
            scal: state.ambient().scal(),
        })
    }

    /// X ↦ Σᵢ R(X, eᵢ)B eᵢ.
    fn curvature_trace(&self, b: &Operator) -> Operator {
        op_from_columns(self.n, |x| self.m.trace_with(|e| self.d.curvature.apply(x, e, &b.apply(e))))
    }

    /// X ↦ Σᵢ R(X, B eᵢ)B eᵢ.
    fn curvature_trace_both(&self, b: &Operator) -> Operator {
        op_from_columns(self.n, |x| self.m.trace_with(|e| self.d.curvature.apply(x, &b.apply(e), &b.apply(e))))
    }

    fn r_div_a(&self) -> Operator {
        let div_a = trace_slot3(&self.d.grad_a, self.m);
        self.p.r3.sub(&self.p.r1).second_slice(&div_a)
    }

    /// ∂A − ΔA with the scalar-curvature term normalized by `denom`.
    fn shape_reaction(&self, denom: f64) -> Operator {
        let (a, j) = (&self.p.a, &self.p.jacobi);
        let kappa = self.scal / denom;
        a * (self.tr_a2 + self.tr_j) + a.pow(3) * 2.0 - a * (2.0 * self.tr_a2) - a * (2.0 * kappa)
            + a.compose(j)
            + j.compose(a)
            + self.curvature_trace(a) * 2.0
    }

    /// ∂A − ΔA: (consistent, normalized by the ambient dimension; printed, by the
    /// hypersurface dimension).
    fn shape_pair(&self) -> (Operator, Operator) {
        (self.shape_reaction(self.n as f64 + 1.0), self.shape_reaction(self.n as f64))
    }

    /// ∂R̃(ξ) − ΔR̃(ξ): (consistent, printed).
    fn jacobi_pair(&self, s: &Operator) -> (Operator, Operator) {
        let (a, j, a2) = (&self.p.a, &self.p.jacobi, &self.a2);
        let tr_a3 = a.pow(3).trace();
        let a4 = a2.square();
        let curv = self.curvature_trace_both(a) * 2.0;
        let common = s * self.p.mean_curvature - j.compose(a2) + j * (2.0 * self.tr_a2) - curv;
        let consistent = &common - &a2.compose(j) - a4.clone() * 2.0 + a * (2.0 * tr_a3);
        let printed = &common - &(self.r_div_a() * 2.0) - a * (2.0 * tr_a3) + a4 * 2.0;
        (consistent, printed)
    }

    fn s_hat(&self) -> Result<Operator> {
        let action = self.d.curvature.derivation_action(&self.p.a);
        s_hat(&self.p.a, &self.p.jacobi, &self.d.grad_a, &self.d.grad_j, &action, &self.p.r3.sub(&self.p.r1), self.m)
    }

    /// ∂S − ΔS: (consistent, printed).
    fn commutator_pair(&self, s: &Operator) -> Result<(Operator, Operator)> {
        let (a, j) = (&self.p.a, &self.p.jacobi);
        let (ea, _) = self.shape_pair();
        let (ej, _) = self.jacobi_pair(s);
        let cross = self.m.trace_with(|e| {
            commutator(&self.d.grad_a.first_slice(e), &self.d.grad_j.first_slice(e)).expect("same dimension")
        });
        let consistent = commutator(&ea, j)? + commutator(a, &ej)? - cross * 2.0;
        let kappa = self.scal / self.n as f64;
        let printed = s * (self.tr_a2 + self.tr_j - 2.0 * kappa) + commutator(a, s)? * self.p.mean_curvature
            - s.compose(&self.a2)
            + commutator(a, &j.square())?
            + commutator(&a.pow(3), j)? * 2.0
            - self.s_hat()?;
        Ok((consistent, printed))
    }
}

struct Pointwise {
    consistent: Vec<f64>,
    printed: Option<Vec<f64>>,
    norm: f64,
    printed_norm: Option<f64>,
}

fn op_result(m: &MetricPoint, cons: Operator, printed: Option<Operator>) -> Pointwise {
    Pointwise {
        norm: cons.norm(m),
        printed_norm: printed.as_ref().map(|p| p.norm(m)),
        consistent: flat(&cons),
        printed: printed.as_ref().map(flat),
    }
}

/// Fields needed on the middle snapshot by the commutator and gap equations.
struct CommutatorFields {
    s: Vec<Operator>,
    lap_s: Vec<Operator>,
    grad_s: Vec<TensorSlot3>,
    lap_rho: Vec<f64>,
}

fn s_field(state: &HypersurfaceState) -> Result<Vec<Operator>> {
    state.points().iter().map(|p| commutator(&p.a, &p.jacobi)).collect()
}

fn commutator_fields(state: &HypersurfaceState) -> Result<CommutatorFields> {
    let s = s_field(state)?;
    let rho: Vec<f64> = state.points().iter().zip(&s).map(|(p, s)| gap(s, &p.metric)).collect::<Result<_>>()?;
    Ok(CommutatorFields {
        lap_s: state.operator_laplacian(&s)?,
        grad_s: state.operator_gradient(&s)?,
        lap_rho: state.scalar_laplacian(&rho)?,
        s,
    })
}

fn pointwise(
    trace: &FlowTrace,
    eq: EvolutionEquation,
    w: &[(usize, f64)],
    k: usize,
    i: usize,
    fields: Option<&CommutatorFields>,
    s_series: &[Vec<Operator>],
) -> Result<Pointwise> {
    let states = trace.states();
    let state = &states[k];
    let loc = Local::new(state, i)?;
    let (p, m) = (loc.p, loc.m);
    let dt_op = |f: &dyn Fn(&PointGeometry) -> Operator| -> Operator {
        let n = loc.n;
        w.iter().fold(Operator::zeros(n), |acc, &(s, c)| acc + f(states[s].point(i)) * c)
    };
    let dt_vec = |f: &dyn Fn(&PointGeometry) -> Vector| -> Vector {
        w.iter().fold(Vector::zeros(p.position.len()), |acc, &(s, c)| acc + f(states[s].point(i)) * c)
    };
    let dt_scalar = |f: &dyn Fn(&PointGeometry) -> f64| -> f64 { w.iter().map(|&(s, c)| c * f(states[s].point(i))).sum() };

    Ok(match eq {
        EvolutionEquation::Metric => {
            let dg = dt_op(&|q| Operator(q.metric.g().clone()));
            let res = Operator(m.g_inv() * (dg.0 + &p.second_form * (2.0 * p.mean_curvature)));
            op_result(m, res, None)
        }
        EvolutionEquation::Normal => {
            let amb = state.ambient();
            let vel = dt_vec(&|q| q.position.clone());
            let dxi = dt_vec(&|q| q.normal.clone()) + amb.christoffel(&p.position, &vel, &p.normal);
            let grad = p.push(&loc.d.grad_h(m));
            let (cons, printed) = (&dxi - &grad, &dxi + &grad);
            let g_amb = amb.metric(&p.position);
            let norm = |v: &Vector| (v.transpose() * &g_amb * v)[(0, 0)].max(0.0).sqrt();
            Pointwise {
                norm: norm(&cons),
                printed_norm: Some(norm(&printed)),
                consistent: cons.iter().copied().collect(),
                printed: Some(printed.iter().copied().collect()),
            }
        }
        EvolutionEquation::Shape => {
            let da = dt_op(&|q| q.a.clone());
            let lhs = &da - &loc.d.lap_a;
            let (cons, printed) = loc.shape_pair();
            op_result(m, &lhs - &cons, Some(&lhs - &printed))
        }
        EvolutionEquation::Mean => {
            let dh = dt_scalar(&|q| q.mean_curvature);
            let r = dh - loc.d.lap_h - (loc.tr_a2 + loc.tr_j) * p.mean_curvature;
            Pointwise { norm: r.abs(), printed_norm: None, consistent: vec![r], printed: None }
        }
        EvolutionEquation::Jacobi => {
            let dj = dt_op(&|q| q.jacobi.clone());
            let lhs = &dj - &loc.d.lap_j;
            let s = commutator(&p.a, &p.jacobi)?;
            let (cons, printed) = loc.jacobi_pair(&s);
            op_result(m, &lhs - &cons, Some(&lhs - &printed))
        }
        EvolutionEquation::Commutator => {
            let f = fields.expect("commutator fields");
            let ds = w.iter().fold(Operator::zeros(loc.n), |acc, &(s, c)| acc + &s_series[s][i] * c);
            let lhs = &ds - &f.lap_s[i];
            let (cons, printed) = loc.commutator_pair(&f.s[i])?;
            op_result(m, &lhs - &cons, Some(&lhs - &printed))
        }
        EvolutionEquation::Gap => {
            let f = fields.expect("commutator fields");
            let drho: f64 = w.iter().map(|&(s, c)| c * gap(&s_series[s][i], &states[s].point(i).metric).unwrap_or(f64::NAN)).sum();
            let lhs = drho - f.lap_rho[i];
            let s = &f.s[i];
            let grad_sq = m.trace_with(|e| {
                let g = f.grad_s[i].first_slice(e);
                g.compose(&g).trace()
            });
            let (cons, printed) = loc.commutator_pair(s)?;
            // P(S) = −(∂S − ΔS).
            let rhs = |forcing: &Operator| -2.0 * forcing.compose(s).trace() + 2.0 * grad_sq;
            let (rc, rp) = (lhs - rhs(&cons), lhs - rhs(&printed));
            Pointwise { norm: rc.abs(), printed_norm: Some(rp.abs()), consistent: vec![rc], printed: Some(vec![rp]) }
        }
    })
}

/// Max over interior points of |∂q/∂t − RHS(q)| at snapshot `t_index`.
pub fn residual_check(trace: &FlowTrace, eq: EvolutionEquation, t_index: usize, fd_order: usize) -> Result<EvolutionResidual> {
    residual_check_with(trace, eq, t_index, fd_order, None)
}

/// As [`residual_check`], with the Richardson probe at grid index `probe`
/// (default: the grid centre).
pub fn residual_check_with(
    trace: &FlowTrace,
    eq: EvolutionEquation,
    t_index: usize,
    fd_order: usize,
    probe: Option<usize>,
) -> Result<EvolutionResidual> {
    let w = time_weights(trace.times(), t_index, fd_order)?;
    let state = &trace.states()[t_index];
    let needs_s = matches!(eq, EvolutionEquation::Commutator | EvolutionEquation::Gap);
    let fields = if needs_s { Some(commutator_fields(state)?) } else { None };
    let s_series: Vec<Vec<Operator>> = if needs_s {
        trace.states().iter().map(s_field).collect::<Result<_>>()?
    } else {
        vec![]
    };
    let idx = state.interior(trace.margin());
    if idx.is_empty() {
        return Err(Error::Input("no grid points inside the margin".into()));
    }
    let probe = probe.unwrap_or_else(|| state.grid().center());
    let mut residual = 0.0f64;
    let mut printed: Option<f64> = None;
    for &i in &idx {
        let pw = pointwise(trace, eq, &w, t_index, i, fields.as_ref(), &s_series)?;
        residual = residual.max(pw.norm);
        if let Some(pn) = pw.printed_norm {
            printed = Some(printed.unwrap_or(0.0).max(pn));
        }
    }
    let pc = pointwise(trace, eq, &w, t_index, probe, fields.as_ref(), &s_series)?;
    Ok(EvolutionResidual {
        equation: eq,
        tag: eq.tag(),
        t_index,
        residual,
        printed,
        center: pc.consistent,
        center_printed: pc.printed,
    })
}

/// Residual of ∇̃_t(f_*Z) = f_*(∂Z/∂t) − (ZH)ξ − H f_*(AZ) for the coordinate
/// field Z = ∂_k (so ∂Z/∂t = 0). Returns (max interior norm, centre components).
pub fn pushforward_derivative_check(trace: &FlowTrace, k: usize, t_index: usize) -> Result<(f64, Vec<f64>)> {
    let w = time_weights(trace.times(), t_index, 2)?;
    let states = trace.states();
    let state = &states[t_index];
    let n = state.dim();
    if k >= n {
        return Err(Error::DimensionMismatch { expected: n, got: k });
    }
    let amb = state.ambient();
    let z = Vector::from_fn(n, |i, _| if i == k { 1.0 } else { 0.0 });
    let eval = |i: usize| -> Result<(Vector, f64)> {
        let p = state.point(i);
        let d = state.derivs(i)?;
        let big = p.position.len();
        let sum = |f: &dyn Fn(&PointGeometry) -> Vector| {
            w.iter().fold(Vector::zeros(big), |acc, &(s, c)| acc + f(states[s].point(i)) * c)
        };
        let vel = sum(&|q| q.position.clone());
        let lhs = sum(&|q| q.tangents.column(k).into_owned()) + amb.christoffel(&p.position, &vel, &p.push(&z));
        let rhs = -&p.normal * d.dh[k] - p.push(&p.a.apply(&z)) * p.mean_curvature;
        let r = lhs - rhs;
        let g = amb.metric(&p.position);
        Ok((r.clone(), (r.transpose() * g * &r)[(0, 0)].max(0.0).sqrt()))
    };
    let mut worst = 0.0f64;
    for i in state.interior(trace.margin()) {
        worst = worst.max(eval(i)?.1);
    }
    let (c, _) = eval(state.grid().center())?;
    Ok((worst, c.iter().copied().collect()))
}
