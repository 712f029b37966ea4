//! Time evolution of immersions, evolution-equation residuals, monitors and
//! the maximum-principle bound.

mod monitor;
mod residuals;
pub mod study;

pub use monitor::{
    corollary_e_gate, default_rho_tol, gap_monitor, max_principle_check, CorollaryEReport, GapMonitor, MaxPrincipleReport, MonitorPoint,
};
pub use residuals::{
    pushforward_derivative_check, residual_check, residual_check_with, richardson_ratio, EvolutionEquation,
    EvolutionResidual,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::immersion::{adaptedness_report, fundamental_forms, Family, HypersurfaceState, ParametrizedImmersion};
use crate::parallel::{flow_ode, jacobi_coefficient, Direction, IsoparametricSpectrum, Trajectory};
use crate::tensor::Vector;

/// Longest explicit PDE run accepted; longer horizons use the ODE reduction.
pub const MAX_PDE_STEPS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stepper {
    Euler,
    Rk2,
}

#[derive(Clone, Copy, Debug)]
pub struct StepOptions {
    pub stepper: Stepper,
    /// Parabolic stability factor κ in dt ≤ κ·h².
    pub kappa: f64,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self { stepper: Stepper::Euler, kappa: 0.25 }
    }
}

/// κ times the squared smallest physical grid spacing.
pub fn stability_bound(state: &HypersurfaceState, kappa: f64) -> f64 {
    let h = state.grid().spacing();
    let min_sq = state
        .points()
        .iter()
        .map(|p| (0..h.len()).map(|k| h[k] * h[k] * p.metric.g()[(k, k)]).fold(f64::INFINITY, f64::min))
        .fold(f64::INFINITY, f64::min);
    kappa * min_sq
}

fn normal_velocity(state: &HypersurfaceState, direction: Direction) -> Vec<Vector> {
    let sigma = direction.sigma();
    state.points().par_iter().map(|p| &p.normal * (sigma * p.mean_curvature)).collect()
}

fn displaced(im: &ParametrizedImmersion, v: &[Vector], dt: f64) -> Result<ParametrizedImmersion> {
    let pts: Vec<Vector> = im.points().iter().zip(v).map(|(x, v)| x + v * dt).collect();
    if let Some(i) = pts.iter().position(|p| !im.ambient().contains(p)) {
        return Err(Error::ChartExit { param: i as f64 });
    }
    im.with_points(pts)
}

/// One explicit step of ∂F/∂t = ∓Hξ (forward: −Hξ, backward: +Hξ).
pub fn step_immersion(
    im: &ParametrizedImmersion,
    dt: f64,
    direction: Direction,
    opts: StepOptions,
) -> Result<ParametrizedImmersion> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Input("dt must be positive".into()));
    }
    let state = fundamental_forms(im)?;
    let bound = stability_bound(&state, opts.kappa);
    if dt > bound {
        return Err(Error::Stability { dt, bound });
    }
    let v = normal_velocity(&state, direction);
    match opts.stepper {
        Stepper::Euler => displaced(im, &v, dt),
        Stepper::Rk2 => {
            let mid = displaced(im, &v, 0.5 * dt)?;
            let vm = normal_velocity(&fundamental_forms(&mid)?, direction);
            displaced(im, &vm, dt)
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MonitorRow {
    pub t: f64,
    pub max_rho: f64,
    pub sup_mu: f64,
    pub max_s_hat: f64,
    pub min_pairing: f64,
    pub h_min: f64,
    pub h_max: f64,
}

/// Time-ordered snapshots of a flow with per-time monitors.
#[derive(Clone, Debug)]
pub struct FlowTrace {
    times: Vec<f64>,
    states: Vec<HypersurfaceState>,
    monitors: Vec<MonitorRow>,
    margin: usize,
    c1: Option<f64>,
}

impl FlowTrace {
    /// `margin` is the stencil margin excluded from residuals and monitors.
    pub fn new(margin: usize) -> Self {
        Self { times: vec![], states: vec![], monitors: vec![], margin, c1: None }
    }

    pub fn push(&mut self, t: f64, state: HypersurfaceState) -> Result<()> {
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(Error::Input(format!("time {t} does not increase past {last}")));
            }
        }
        let rep = adaptedness_report(&state, self.margin)?;
        let idx = state.interior(self.margin);
        let hs = idx.iter().map(|&i| state.point(i).mean_curvature);
        let (h_min, h_max) = hs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), h| (a.min(h), b.max(h)));
        self.monitors.push(MonitorRow {
            t,
            max_rho: rep.max_rho,
            sup_mu: rep.sup_mu,
            max_s_hat: rep.max_s_hat,
            min_pairing: rep.min_pairing,
            h_min,
            h_max,
        });
        self.times.push(t);
        self.states.push(state);
        Ok(())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[HypersurfaceState] {
        &self.states
    }

    pub fn monitors(&self) -> &[MonitorRow] {
        &self.monitors
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn c1(&self) -> Option<f64> {
        self.c1
    }

    pub fn set_c1(&mut self, c1: f64) {
        self.c1 = Some(c1);
    }
}

/// Explicit PDE flow for `steps` steps, recording every snapshot.
pub fn run_pde_flow(
    im: &ParametrizedImmersion,
    dt: f64,
    steps: usize,
    direction: Direction,
    opts: StepOptions,
    margin: usize,
) -> Result<FlowTrace> {
    if steps > MAX_PDE_STEPS {
        return Err(Error::Input(format!(
            "{steps} steps requested; PDE runs are limited to {MAX_PDE_STEPS}, use the parallel reduction"
        )));
    }
    let mut trace = FlowTrace::new(margin);
    let mut cur = im.clone();
    trace.push(0.0, HypersurfaceState::build(&cur)?)?;
    for k in 1..=steps {
        cur = step_immersion(&cur, dt, direction, opts)?;
        trace.push(k as f64 * dt, HypersurfaceState::build(&cur)?)?;
    }
    Ok(trace)
}

/// Snapshots at t = −dt, 0, dt of the forward flow through `im`, the past one
/// obtained by a backward-flow step.
pub fn pde_snapshots(im: &ParametrizedImmersion, dt: f64, stepper: Stepper, margin: usize) -> Result<FlowTrace> {
    let opts = StepOptions { stepper, kappa: f64::INFINITY };
    let past = step_immersion(im, dt, Direction::Backward, opts)?;
    let future = step_immersion(im, dt, Direction::Forward, opts)?;
    let mut trace = FlowTrace::new(margin);
    trace.push(-dt, HypersurfaceState::build(&past)?)?;
    trace.push(0.0, HypersurfaceState::build(im)?)?;
    trace.push(dt, HypersurfaceState::build(&future)?)?;
    Ok(trace)
}

/// Normal offset r(t) of the forward flow of an isoparametric family
/// (negative t runs the backward flow).
pub fn parallel_offset(family: &Family, t: f64) -> Result<f64> {
    let spec = family
        .spectrum()
        .ok_or_else(|| Error::Input(format!("{} is not isoparametric", family.name())))?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let dir = if t > 0.0 { Direction::Forward } else { Direction::Backward };
    let steps = 400usize;
    let tr = flow_ode(&spec, t.abs(), t.abs() / steps as f64, dir)?;
    if tr.steps.len() != steps + 1 {
        return Err(Error::Focal { r: tr.last().r, coefficient: 0.0 });
    }
    Ok(tr.last().r)
}

/// Snapshots of the parallel flow f_t = f^{r(t)} on a patch.
pub fn parallel_snapshots(
    family: &Family,
    center: &[f64],
    h: f64,
    size: usize,
    times: &[f64],
    margin: usize,
) -> Result<FlowTrace> {
    let mut trace = FlowTrace::new(margin);
    for &t in times {
        let fam = family.with_offset(parallel_offset(family, t)?)?;
        trace.push(t, HypersurfaceState::build(&fam.build_patch(center, h, size)?)?)?;
    }
    Ok(trace)
}

/// Along a spectrum trajectory: max over steps of
/// |H(Tr A² + Tr R̃(ξ)) − (dH/dr)(dr/dt)|, with dH/dr from the second
/// derivative of the Jacobi coefficients (the mean-curvature equation with
/// ΔH = 0 against the chain rule).
pub fn spectrum_mean_curvature_check(spec: &IsoparametricSpectrum, traj: &Trajectory) -> f64 {
    let sigma = traj.direction.sigma();
    traj.steps
        .iter()
        .map(|st| {
            let (mut tr_a2, mut tr_j, mut dh_dr) = (0.0, 0.0, 0.0);
            for e in spec.entries() {
                let (y, dy) = jacobi_coefficient(e.lambda, e.nu, st.r);
                let ddy = jacobi_second_derivative(e.lambda, e.nu, st.r);
                let l = dy / y;
                let m = e.mult as f64;
                tr_a2 += m * l * l;
                tr_j += m * e.nu;
                dh_dr += m * (ddy * y - dy * dy) / (y * y);
            }
            let lemma = -sigma * st.h * (tr_a2 + tr_j);
            let chain = dh_dr * sigma * st.h;
            (lemma - chain).abs()
        })
        .fold(0.0, f64::max)
}

fn jacobi_second_derivative(lambda: f64, nu: f64, r: f64) -> f64 {
    if nu > 0.0 {
        let w = nu.sqrt();
        -nu * (r * w).cos() - lambda * w * (r * w).sin()
    } else if nu < 0.0 {
        let w = (-nu).sqrt();
        w * w * (r * w).cosh() + lambda * w * (r * w).sinh()
    } else {
        0.0
    }
}
