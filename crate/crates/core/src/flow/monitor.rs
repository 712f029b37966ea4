use std::fmt::Write as _;

use serde::Serialize;

use super::FlowTrace;
use crate::error::{Error, Result};
use crate::immersion::Grid;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MonitorPoint {
    pub t: f64,
    pub max_rho: f64,
    pub sup_mu: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GapMonitor {
    pub rho_tol: f64,
    pub points: Vec<MonitorPoint>,
    /// First time with max ρ_t > ρ_tol.
    pub t_min: Option<f64>,
    /// sup μ_t increased over each of the last three samples before t_min.
    pub mu_growth_flag: bool,
}

/// ρ_tol = 1e−8·n·(1 + max‖A‖⁴) over the first snapshot's interior.
pub fn default_rho_tol(trace: &FlowTrace) -> f64 {
    let Some(state) = trace.states().first() else { return 1e-8 };
    let max_a = state
        .interior(trace.margin())
        .into_iter()
        .map(|i| {
            let p = state.point(i);
            p.a.norm(&p.metric)
        })
        .fold(0.0f64, f64::max);
    1e-8 * state.dim() as f64 * (1.0 + max_a.powi(4))
}

pub fn gap_monitor(trace: &FlowTrace, rho_tol: Option<f64>) -> GapMonitor {
    let rho_tol = rho_tol.unwrap_or_else(|| default_rho_tol(trace));
    let points: Vec<MonitorPoint> = trace
        .monitors()
        .iter()
        .map(|m| MonitorPoint { t: m.t, max_rho: m.max_rho, sup_mu: m.sup_mu })
        .collect();
    let first = points.iter().position(|p| p.max_rho > rho_tol);
    let t_min = first.map(|k| points[k].t);
    let mu_growth_flag = match first {
        Some(k) if k >= 3 => points[k - 3..=k].windows(2).all(|w| w[1].sup_mu > w[0].sup_mu),
        _ => false,
    };
    GapMonitor { rho_tol, points, t_min, mu_growth_flag }
}

impl GapMonitor {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,max_rho,sup_mu\n");
        for p in &self.points {
            let _ = writeln!(out, "{:.17e},{:.17e},{:.17e}", p.t, p.max_rho, p.sup_mu);
        }
        out
    }

    /// Two-curve line chart of max ρ_t and sup μ_t against t.
    pub fn to_svg(&self) -> String {
        let (w, h, pad) = (640.0, 360.0, 48.0);
        let ts: Vec<f64> = self.points.iter().map(|p| p.t).collect();
        let (t0, t1) = bounds(&ts);
        let series = [
            ("max rho", "#c0392b", self.points.iter().map(|p| p.max_rho).collect::<Vec<_>>()),
            ("sup mu", "#2471a3", self.points.iter().map(|p| p.sup_mu).collect::<Vec<_>>()),
        ];
        let all: Vec<f64> = series.iter().flat_map(|s| s.2.iter().copied()).filter(|v| v.is_finite()).collect();
        let (y0, y1) = bounds(&all);
        let sx = |t: f64| pad + (t - t0) / (t1 - t0) * (w - 2.0 * pad);
        let sy = |v: f64| h - pad - (v - y0) / (y1 - y0) * (h - 2.0 * pad);
        let mut svg = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
             <rect width=\"{w}\" height=\"{h}\" style=\"fill:#ffffff\"/>\n\
             <line x1=\"{pad}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" style=\"stroke:#000000;stroke-width:1\"/>\n\
             <line x1=\"{pad}\" y1=\"{pad}\" x2=\"{pad}\" y2=\"{b}\" style=\"stroke:#000000;stroke-width:1\"/>\n",
            b = h - pad,
            r = w - pad
        );
        for (k, (label, color, vals)) in series.iter().enumerate() {
            let pts: Vec<String> = ts
                .iter()
                .zip(vals)
                .filter(|(_, v)| v.is_finite())
                .map(|(t, v)| format!("{:.3},{:.3}", sx(*t), sy(*v)))
                .collect();
            let _ = writeln!(
                svg,
                "<polyline points=\"{}\" style=\"fill:none;stroke:{color};stroke-width:2\"/>",
                pts.join(" ")
            );
            let _ = writeln!(
                svg,
                "<text x=\"{:.1}\" y=\"{:.1}\" style=\"font-family:sans-serif;font-size:12px;fill:{color}\">{label}</text>",
                w - pad - 80.0,
                pad + 16.0 * k as f64
            );
        }
        let _ = writeln!(
            svg,
            "<text x=\"{pad}\" y=\"{:.1}\" style=\"font-family:sans-serif;font-size:11px\">t = {t0:.4} .. {t1:.4}; y = {y0:.3e} .. {y1:.3e}</text>",
            h - pad / 3.0
        );
        svg.push_str("</svg>\n");
        svg
    }
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-300 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MaxPrincipleReport {
    pub c1: f64,
    pub t_max: f64,
    pub dt: f64,
    pub steps: usize,
    pub max_rho0: f64,
    /// max over (t, x) of ρ_t(x) / (max ρ₀·e^{c1·t}).
    pub max_ratio: f64,
    /// max relative deviation from the bound at the final time.
    pub final_ratio: f64,
    pub bound_holds: bool,
    /// max_x e^{−c1·t}ρ_t is non-increasing in t.
    pub rescaled_monotone: bool,
    /// (t, max ρ_t, bound) samples.
    pub timeline: Vec<(f64, f64, f64)>,
}

/// Integrates ∂ρ/∂t = Δρ + c1·ρ on a periodic flat grid by explicit heat
/// stepping of ρ̂ = e^{−c1·t}ρ and checks ρ_t ≤ max ρ₀·e^{c1·t}.
pub fn max_principle_check(grid: &Grid, c1: f64, rho0: &[f64], t_max: f64, dt: f64) -> Result<MaxPrincipleReport> {
    if rho0.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), got: rho0.len() });
    }
    if !grid.wrap().iter().all(|&w| w) {
        return Err(Error::Input("maximum-principle grid must be periodic in every axis".into()));
    }
    if rho0.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::Input("rho0 must be non-negative".into()));
    }
    let h = grid.spacing();
    let bound = 1.0 / h.iter().map(|s| 2.0 / (s * s)).sum::<f64>();
    if !(dt > 0.0) || dt > bound {
        return Err(Error::Stability { dt, bound });
    }
    let steps = (t_max / dt).round() as usize;
    let max0 = rho0.iter().copied().fold(0.0f64, f64::max);
    let n = grid.dim();
    let neighbours: Vec<Vec<(usize, usize)>> = (0..grid.len())
        .map(|i| {
            let m = grid.multi(i);
            (0..n)
                .map(|k| {
                    let s = grid.shape()[k];
                    let mut up = m.clone();
                    up[k] = (m[k] + 1) % s;
                    let mut dn = m.clone();
                    dn[k] = (m[k] + s - 1) % s;
                    (grid.index(&up), grid.index(&dn))
                })
                .collect()
        })
        .collect();
    let mut hat = rho0.to_vec();
    let mut next = hat.clone();
    let mut prev_max = max0;
    let mut monotone = true;
    let mut max_ratio: f64 = if max0 > 0.0 { 1.0 } else { 0.0 };
    let mut timeline = vec![(0.0, max0, max0)];
    let sample_every = (steps / 200).max(1);
    let mut final_ratio = max_ratio;
    for step in 1..=steps {
        for i in 0..hat.len() {
            let mut lap = 0.0;
            for (k, &(u, d)) in neighbours[i].iter().enumerate() {
                lap += (hat[u] - 2.0 * hat[i] + hat[d]) / (h[k] * h[k]);
            }
            next[i] = hat[i] + dt * lap;
        }
        std::mem::swap(&mut hat, &mut next);
        let t = step as f64 * dt;
        let grow = (c1 * t).exp();
        let max_hat = hat.iter().copied().fold(0.0f64, f64::max);
        if max_hat > prev_max * (1.0 + 1e-14) {
            monotone = false;
        }
        prev_max = max_hat;
        let (max_rho, bnd) = (max_hat * grow, max0 * grow);
        let ratio = if bnd > 0.0 { max_rho / bnd } else if max_rho > 0.0 { f64::INFINITY } else { 0.0 };
        max_ratio = max_ratio.max(ratio);
        final_ratio = ratio;
        if step % sample_every == 0 || step == steps {
            timeline.push((t, max_rho, bnd));
        }
    }
    Ok(MaxPrincipleReport {
        c1,
        t_max,
        dt,
        steps,
        max_rho0: max0,
        max_ratio,
        final_ratio,
        bound_holds: max_ratio <= 1.0 + 1e-12,
        rescaled_monotone: monotone,
        timeline,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CorollaryEReport {
    /// min_x ⟨Ŝ_t, S_t⟩ ≥ −tol at every time.
    pub pairing_nonnegative: bool,
    pub rho_bounded: bool,
    pub sup_mu_nonpositive: bool,
    /// Hypothesis and conclusion both observed.
    pub implication_instance: bool,
    /// Hypothesis observed with ρ exceeding the tolerance (informational).
    pub counterexample_candidate: bool,
    pub min_pairing: f64,
    pub max_rho: f64,
}

pub fn corollary_e_gate(trace: &FlowTrace, rho_tol: f64) -> CorollaryEReport {
    let mon = trace.monitors();
    let min_pairing = mon.iter().map(|m| m.min_pairing).fold(f64::INFINITY, f64::min);
    let max_rho = mon.iter().map(|m| m.max_rho).fold(0.0f64, f64::max);
    let sup_mu = mon.iter().map(|m| m.sup_mu).fold(f64::NEG_INFINITY, f64::max);
    let pairing_nonnegative = min_pairing >= -rho_tol;
    let rho_bounded = max_rho <= rho_tol;
    CorollaryEReport {
        pairing_nonnegative,
        rho_bounded,
        sup_mu_nonpositive: sup_mu <= 0.0,
        implication_instance: pairing_nonnegative && rho_bounded,
        counterexample_candidate: pairing_nonnegative && !rho_bounded,
        min_pairing,
        max_rho,
    }
}
