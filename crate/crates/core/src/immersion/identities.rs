//! Residuals of the structural identities and the adaptedness report.
//!
//! Where the convention-consistent identity differs from the printed display,
//! the report carries both residuals (`residual` and `printed`).

use serde::Serialize;

use super::state::{Derivatives, HypersurfaceState, PointGeometry};
use crate::error::{Error, Result};
use crate::tensor::{commutator, gap, mu, s_hat, trace_slot3, MetricPoint, Operator, Vector};

#[derive(Clone, Debug, Serialize)]
pub struct IdentityResidual {
    pub tag: String,
    /// Max g-norm of the convention-consistent residual.
    pub residual: f64,
    /// Same for the identity as printed, when it differs.
    pub printed: Option<f64>,
}

fn frame(m: &MetricPoint) -> Vec<Vector> {
    (0..m.dim()).map(|i| m.frame_vector(i)).collect()
}

fn for_interior<F>(state: &HypersurfaceState, margin: usize, mut f: F) -> Result<(f64, f64)>
where
    F: FnMut(&PointGeometry, &Derivatives) -> (f64, f64),
{
    let idx = state.interior(margin);
    if idx.is_empty() {
        return Err(Error::Input("no grid points inside the margin".into()));
    }
    let mut out = (0.0f64, 0.0f64);
    for i in idx {
        let (a, b) = f(state.point(i), state.derivs(i)?);
        out = (out.0.max(a), out.1.max(b));
    }
    Ok(out)
}

/// Gauss equation and Codazzi equation residuals.
pub fn gauss_codazzi_residual(state: &HypersurfaceState, margin: usize) -> Result<Vec<IdentityResidual>> {
    let amb = state.ambient();
    let (gauss, _) = for_interior(state, margin, |p, d| {
        let m = &p.metric;
        let e = frame(m);
        let mut worst = 0.0f64;
        for x in &e {
            for y in &e {
                for z in &e {
                    let amb_r = p.tangential(amb, &amb.curvature_at(&p.position, &p.push(x), &p.push(y), &p.push(z)));
                    let res = amb_r - d.curvature.apply(x, y, z) - p.a.apply(y) * p.h(x, z) + p.a.apply(x) * p.h(y, z);
                    worst = worst.max(m.norm(&res));
                }
            }
        }
        (worst, 0.0)
    })?;
    let (codazzi, codazzi_printed) = for_interior(state, margin, |p, d| {
        let m = &p.metric;
        let e = frame(m);
        let (mut c, mut pr) = (0.0f64, 0.0f64);
        for x in &e {
            for y in &e {
                let r3 = p.r3.apply(x, y);
                let skew = d.grad_a.apply(x, y) - d.grad_a.apply(y, x);
                c = c.max(m.norm(&(&r3 - &skew)));
                pr = pr.max(m.norm(&(&r3 + &skew)));
            }
        }
        (c, pr)
    })?;
    Ok(vec![
        IdentityResidual { tag: "(2.2)".into(), residual: gauss, printed: None },
        IdentityResidual { tag: "(3.2)".into(), residual: codazzi, printed: Some(codazzi_printed) },
    ])
}

/// Residual of `(∇_X R̃(ξ))Y = R̃₃(ξ)(Y, AX) − R̃₁(ξ)(Y, AX)`.
pub fn jacobi_derivative_residual(state: &HypersurfaceState, margin: usize) -> Result<IdentityResidual> {
    let (r, _) = for_interior(state, margin, |p, d| {
        let m = &p.metric;
        let e = frame(m);
        let mut worst = 0.0f64;
        for x in &e {
            let ax = p.a.apply(x);
            for y in &e {
                let res = d.grad_j.apply(x, y) - p.r3.apply(y, &ax) + p.r1.apply(y, &ax);
                worst = worst.max(m.norm(&res));
            }
        }
        (worst, 0.0)
    })?;
    Ok(IdentityResidual { tag: "(3.8)".into(), residual: r, printed: None })
}

/// Second covariant derivative of R̃(ξ) along each frame vector, its trace,
/// and the gradient of H against the divergence of A.
pub fn second_order_identities(state: &HypersurfaceState, margin: usize) -> Result<Vec<IdentityResidual>> {
    let (hess, hess_printed) = for_interior(state, margin, |p, d| {
        let m = &p.metric;
        let e = frame(m);
        let (a, j) = (&p.a, &p.jacobi);
        let (mut c, mut pr) = (0.0f64, 0.0f64);
        for x in &e {
            let ax = a.apply(x);
            let a2x = a.apply(&ax);
            let dax_x = d.grad_a.apply(x, x);
            let lhs_op = d.hess(&d.hess_j, x, x);
            for y in &e {
                let ay = a.apply(y);
                let common = j.apply(&ax) * p.h(x, y) - j.apply(y) * (2.0 * p.h(x, &ax)) + p.r3.apply(y, &dax_x)
                    - p.r1.apply(y, &dax_x)
                    + d.curvature.apply(y, &ax, &ax) * 2.0;
                let consistent = &common + &a2x * (2.0 * p.h(y, &ax)) - &ay * (2.0 * p.h(&ax, &ax))
                    + &ax * m.inner(&j.apply(y), &ax);
                let printed = &common + &ay * (2.0 * p.h(&ax, &ax)) - &a2x * (2.0 * p.h(y, &ax));
                let lhs = lhs_op.apply(y);
                c = c.max(m.norm(&(&lhs - &consistent)));
                pr = pr.max(m.norm(&(&lhs - &printed)));
            }
        }
        (c, pr)
    })?;
    let (lap, lap_printed) = for_interior(state, margin, |p, d| {
        let m = &p.metric;
        let (a, j) = (&p.a, &p.jacobi);
        let a2 = a.square();
        let tr_a2 = a2.trace();
        let tr_a3 = a.pow(3).trace();
        let div_a = trace_slot3(&d.grad_a, m);
        let (mut c, mut pr) = (0.0f64, 0.0f64);
        for x in frame(m) {
            let curv = m.trace_with(|e| d.curvature.apply(&x, &a.apply(e), &a.apply(e))) * 2.0;
            let common = j.apply(&a2.apply(&x)) - j.apply(&x) * (2.0 * tr_a2) + p.r3.apply(&x, &div_a)
                - p.r1.apply(&x, &div_a)
                + curv;
            let a4x = a2.apply(&a2.apply(&x));
            let ax = a.apply(&x);
            let consistent = &common + &a4x * 2.0 - &ax * (2.0 * tr_a3) + a2.apply(&j.apply(&x));
            let printed = &common + &ax * (2.0 * tr_a3) - &a4x * 2.0;
            let lhs = d.lap_j.apply(&x);
            c = c.max(m.norm(&(&lhs - &consistent)));
            pr = pr.max(m.norm(&(&lhs - &printed)));
        }
        (c, pr)
    })?;
    let (grad, _) = for_interior(state, margin, |p, d| {
        let m = &p.metric;
        (m.norm(&(d.grad_h(m) - trace_slot3(&d.grad_a, m))), 0.0)
    })?;
    Ok(vec![
        IdentityResidual { tag: "(3.10)".into(), residual: hess, printed: Some(hess_printed) },
        IdentityResidual { tag: "(3.11)".into(), residual: lap, printed: Some(lap_printed) },
        IdentityResidual { tag: "Lemma 3.2".into(), residual: grad, printed: None },
    ])
}

#[derive(Clone, Debug, Serialize)]
pub struct PointAdaptedness {
    pub index: usize,
    pub param: Vec<f64>,
    pub rho: f64,
    pub mu: f64,
    pub s_norm: f64,
    pub s_hat_norm: f64,
    /// ⟨Ŝ, S⟩_g.
    pub pairing: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AdaptednessReport {
    pub points: Vec<PointAdaptedness>,
    pub max_rho: f64,
    pub mean_rho: f64,
    pub max_s_hat: f64,
    pub mean_s_hat: f64,
    pub max_abs_mu: f64,
    pub sup_mu: f64,
    pub min_pairing: f64,
    /// max |gap(S) − ‖[A, R̃(ξ)]‖²|.
    pub rho_consistency: f64,
    /// max deviation of Ŝ from g-skew-symmetry (reported, not asserted).
    pub s_hat_skew_defect: f64,
}

/// Per-point S = [A, R̃(ξ)], ρ, Ŝ and μ over the interior.
pub fn adaptedness_report(state: &HypersurfaceState, margin: usize) -> Result<AdaptednessReport> {
    let idx = state.interior(margin);
    if idx.is_empty() {
        return Err(Error::Input("no grid points inside the margin".into()));
    }
    let mut points = Vec::with_capacity(idx.len());
    let mut consistency = 0.0f64;
    let mut skew_defect = 0.0f64;
    for i in idx {
        let p = state.point(i);
        let d = state.derivs(i)?;
        let m = &p.metric;
        let s = commutator(&p.a, &p.jacobi)?;
        let rho = gap(&s, m)?;
        let direct = s.norm_sq(m);
        consistency = consistency.max((rho - direct).abs());
        let action = d.curvature.derivation_action(&p.a);
        let sh = s_hat(&p.a, &p.jacobi, &d.grad_a, &d.grad_j, &action, &p.r3.sub(&p.r1), m)?;
        let sym: Operator = &sh + &sh.adjoint(m);
        skew_defect = skew_defect.max(sym.norm(m));
        points.push(PointAdaptedness {
            index: i,
            param: p.param.clone(),
            rho,
            mu: mu(&sh, &s, m),
            s_norm: s.norm(m),
            s_hat_norm: sh.norm(m),
            pairing: sh.inner(&s, m),
        });
    }
    let k = points.len() as f64;
    let max = |f: fn(&PointAdaptedness) -> f64| points.iter().map(f).fold(0.0f64, f64::max);
    Ok(AdaptednessReport {
        max_rho: max(|p| p.rho),
        mean_rho: points.iter().map(|p| p.rho).sum::<f64>() / k,
        max_s_hat: max(|p| p.s_hat_norm),
        mean_s_hat: points.iter().map(|p| p.s_hat_norm).sum::<f64>() / k,
        max_abs_mu: max(|p| p.mu.abs()),
        sup_mu: points.iter().map(|p| p.mu).fold(f64::NEG_INFINITY, f64::max),
        min_pairing: points.iter().map(|p| p.pairing).fold(f64::INFINITY, f64::min),
        rho_consistency: consistency,
        s_hat_skew_defect: skew_defect,
        points,
    })
}
