//! Parallel hypersurfaces of curvature-adapted families with constant
//! principal data, and the reduction of mean curvature flow to an ODE in the
//! normal offset r.
//!
//! The offset r is measured along ξ. Principal curvatures transport as
//! `λ(r) = Y′(r)/Y(r)` with `Y(r) = cos(r√ν) + λ sin(r√ν)/√ν`, so `λ(0) = λ`
//! and `dλ/dr = −(ν + λ²)`.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tensor::{commutator, gap, MetricPoint, Operator};

/// Default guard on the Jacobi coefficient near focal radii.
pub const FOCAL_DELTA: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectrumEntry {
    pub lambda: f64,
    pub nu: f64,
    pub mult: usize,
}

/// Simultaneous eigendata of A and R̃(ξ) for a curvature-adapted hypersurface.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IsoparametricSpectrum {
    entries: Vec<SpectrumEntry>,
    ambient: String,
}

impl IsoparametricSpectrum {
    pub fn new(entries: Vec<SpectrumEntry>, ambient: impl Into<String>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Input("spectrum needs at least one entry".into()));
        }
        for e in &entries {
            if e.mult == 0 {
                return Err(Error::Input("multiplicities must be positive".into()));
            }
            if !(e.lambda.is_finite() && e.nu.is_finite()) {
                return Err(Error::Input("spectrum entries must be finite".into()));
            }
        }
        Ok(Self { entries, ambient: ambient.into() })
    }

    /// Round sphere of radius r0 in Euclidean (n+1)-space.
    pub fn euclidean_sphere(r0: f64, n: usize) -> Result<Self> {
        if !(r0 > 0.0) {
            return Err(Error::Input("radius must be positive".into()));
        }
        Self::new(vec![SpectrumEntry { lambda: 1.0 / r0, nu: 0.0, mult: n }], "euclidean")
    }

    /// Geodesic sphere of radius r0 in CP² with holomorphic curvature 4.
    pub fn cp2_geodesic_sphere(r0: f64) -> Result<Self> {
        Self::new(
            vec![
                SpectrumEntry { lambda: 1.0 / r0.tan(), nu: 1.0, mult: 2 },
                SpectrumEntry { lambda: 2.0 / (2.0 * r0).tan(), nu: 4.0, mult: 1 },
            ],
            "complex-projective(c=4)",
        )
    }

    /// Parses one `(lambda nu mult)` triple per line; `#` starts a comment.
    pub fn parse(text: &str, ambient: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let inner = line
                .strip_prefix('(')
                .and_then(|l| l.strip_suffix(')'))
                .ok_or_else(|| Error::Input(format!("line {}: expected '(lambda nu mult)'", k + 1)))?;
            let toks: Vec<&str> = inner.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()).collect();
            if toks.len() != 3 {
                return Err(Error::Input(format!("line {}: expected three values", k + 1)));
            }
            let bad = |what: &str| Error::Input(format!("line {}: bad {what}", k + 1));
            entries.push(SpectrumEntry {
                lambda: toks[0].parse().map_err(|_| bad("lambda"))?,
                nu: toks[1].parse().map_err(|_| bad("nu"))?,
                mult: toks[2].parse().map_err(|_| bad("multiplicity"))?,
            });
        }
        Self::new(entries, ambient)
    }

    pub fn entries(&self) -> &[SpectrumEntry] {
        &self.entries
    }

    pub fn ambient(&self) -> &str {
        &self.ambient
    }

    /// Hypersurface dimension n = Σ mult.
    pub fn n(&self) -> usize {
        self.entries.iter().map(|e| e.mult).sum()
    }

    pub fn mean_curvature(&self) -> f64 {
        self.entries.iter().map(|e| e.mult as f64 * e.lambda).sum()
    }

    /// ρ of the diagonal pair (A, R̃(ξ)) in the shared eigenframe.
    pub fn rho(&self) -> f64 {
        let expand = |f: fn(&SpectrumEntry) -> f64| -> Vec<f64> {
            self.entries.iter().flat_map(|e| std::iter::repeat(f(e)).take(e.mult)).collect()
        };
        let a = Operator::diagonal(&expand(|e| e.lambda));
        let j = Operator::diagonal(&expand(|e| e.nu));
        let m = MetricPoint::identity(self.n());
        commutator(&a, &j).and_then(|s| gap(&s, &m)).unwrap_or(f64::NAN)
    }
}

/// Y(r) = cos(r√ν) + λ sin(r√ν)/√ν and its derivative, with the
/// hyperbolic (ν < 0) and linear (ν = 0) branches.
pub fn jacobi_coefficient(lambda: f64, nu: f64, r: f64) -> (f64, f64) {
    let (c, s, ds) = if nu > 0.0 {
        let w = nu.sqrt();
        ((r * w).cos(), (r * w).sin() / w, -(r * w).sin() * w)
    } else if nu < 0.0 {
        let w = (-nu).sqrt();
        ((r * w).cosh(), (r * w).sinh() / w, (r * w).sinh() * w)
    } else {
        (1.0, r, 0.0)
    };
    (c + lambda * s, ds + lambda * c)
}

/// Principal curvature of the parallel hypersurface at offset r along ξ.
pub fn parallel_eigenvalue(lambda: f64, nu: f64, r: f64) -> Result<f64> {
    parallel_eigenvalue_guarded(lambda, nu, r, FOCAL_DELTA)
}

pub fn parallel_eigenvalue_guarded(lambda: f64, nu: f64, r: f64, delta: f64) -> Result<f64> {
    let (y, dy) = jacobi_coefficient(lambda, nu, r);
    if y.abs() < delta {
        return Err(Error::Focal { r, coefficient: y });
    }
    Ok(dy / y)
}

/// Spectrum of the parallel hypersurface at offset r (ν and multiplicities unchanged).
pub fn jacobi_invariance(spec: &IsoparametricSpectrum, r: f64) -> Result<IsoparametricSpectrum> {
    let entries = spec
        .entries
        .iter()
        .map(|e| Ok(SpectrumEntry { lambda: parallel_eigenvalue(e.lambda, e.nu, r)?, ..*e }))
        .collect::<Result<Vec<_>>>()?;
    Ok(IsoparametricSpectrum { entries, ambient: spec.ambient.clone() })
}

/// H(r) = Σ mult·λ(r).
pub fn mean_curvature_profile(spec: &IsoparametricSpectrum, r: f64) -> Result<f64> {
    spec.entries
        .iter()
        .map(|e| Ok(e.mult as f64 * parallel_eigenvalue(e.lambda, e.nu, r)?))
        .sum()
}

/// Unguarded H(r); infinite at focal radii.
fn raw_mean_curvature(spec: &IsoparametricSpectrum, r: f64) -> f64 {
    spec.entries
        .iter()
        .map(|e| {
            let (y, dy) = jacobi_coefficient(e.lambda, e.nu, r);
            e.mult as f64 * dy / y
        })
        .sum()
}

fn min_coefficient(spec: &IsoparametricSpectrum, r: f64) -> f64 {
    spec.entries.iter().map(|e| jacobi_coefficient(e.lambda, e.nu, r).0).fold(f64::INFINITY, f64::min)
}

/// First focal radius in direction `sign` (±1), located by bisection on the
/// Jacobi coefficients to an interval of width below `tol`. Returns the bracket.
pub fn focal_radius(spec: &IsoparametricSpectrum, sign: f64, r_limit: f64, tol: f64) -> Option<(f64, f64)> {
    let step = 1e-3;
    let mut lo = 0.0;
    let mut k = 1usize;
    loop {
        let hi = (k as f64 * step).min(r_limit);
        if min_coefficient(spec, sign * hi) <= 0.0 {
            let (mut a, mut b) = (lo, hi);
            while b - a > tol {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if min_coefficient(spec, sign * mid) <= 0.0 {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            return Some(if sign > 0.0 { (a, b) } else { (-b, -a) });
        }
        if hi >= r_limit {
            return None;
        }
        lo = hi;
        k += 1;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    /// σ in dr/dt = σ·H(r): forward flow moves against ξ where H > 0.
    pub fn sigma(self) -> f64 {
        match self {
            Direction::Forward => -1.0,
            Direction::Backward => 1.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryStep {
    pub t: f64,
    pub r: f64,
    pub h: f64,
    pub spectrum: IsoparametricSpectrum,
    pub rho: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CollapseEvent {
    /// Bracket on the focal offset.
    pub r_focal: (f64, f64),
    /// Bracket on the collapse time.
    pub t_collapse: (f64, f64),
}

impl CollapseEvent {
    pub fn time_estimate(&self) -> f64 {
        0.5 * (self.t_collapse.0 + self.t_collapse.1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    TimeLimit,
    FocalApproach,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub direction: Direction,
    pub dt: f64,
    pub steps: Vec<TrajectoryStep>,
    pub stop: StopReason,
    pub collapse: Option<CollapseEvent>,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectoryStep {
        self.steps.last().expect("trajectory has the initial step")
    }

    /// r at time t by cubic Hermite interpolation between RK4 nodes.
    pub fn r_at(&self, spec: &IsoparametricSpectrum, t: f64) -> Result<f64> {
        let s = &self.steps;
        if t < s[0].t || t > self.last().t + 1e-15 {
            return Err(Error::Input(format!("t = {t} outside the trajectory")));
        }
        let k = (((t - s[0].t) / self.dt).floor() as usize).min(s.len().saturating_sub(2));
        if s.len() == 1 {
            return Ok(s[0].r);
        }
        let (a, b) = (&s[k], &s[k + 1]);
        let h = b.t - a.t;
        let u = (t - a.t) / h;
        let sigma = self.direction.sigma();
        let (fa, fb) = (sigma * raw_mean_curvature(spec, a.r), sigma * raw_mean_curvature(spec, b.r));
        let h00 = 2.0 * u.powi(3) - 3.0 * u * u + 1.0;
        let h10 = u.powi(3) - 2.0 * u * u + u;
        let h01 = -2.0 * u.powi(3) + 3.0 * u * u;
        let h11 = u.powi(3) - u * u;
        Ok(h00 * a.r + h10 * h * fa + h01 * b.r + h11 * h * fb)
    }

    /// CSV with columns t, r, H, lambda_1..k, nu_1..k, rho.
    pub fn to_csv(&self) -> String {
        let k = self.steps.first().map(|s| s.spectrum.entries.len()).unwrap_or(0);
        let mut out = String::from("t,r,H");
        for i in 1..=k {
            let _ = write!(out, ",lambda_{i}");
        }
        for i in 1..=k {
            let _ = write!(out, ",nu_{i}");
        }
        out.push_str(",rho\n");
        for s in &self.steps {
            let _ = write!(out, "{:.17e},{:.17e},{:.17e}", s.t, s.r, s.h);
            for e in s.spectrum.entries() {
                let _ = write!(out, ",{:.17e}", e.lambda);
            }
            for e in s.spectrum.entries() {
                let _ = write!(out, ",{:.17e}", e.nu);
            }
            let _ = writeln!(out, ",{:.17e}", s.rho);
        }
        out
    }
}

/// Options for [`flow_ode`].
#[derive(Clone, Copy, Debug)]
pub struct FlowOdeOptions {
    pub delta: f64,
    /// Stop once one step moves r by more than this fraction of the distance
    /// to the focal radius.
    pub resolution: f64,
    /// Search range for focal radii.
    pub r_limit: f64,
}

impl Default for FlowOdeOptions {
    fn default() -> Self {
        Self { delta: FOCAL_DELTA, resolution: 0.01, r_limit: 50.0 }
    }
}

/// RK4 solution of dr/dt = σ·H(r) from r = 0.
pub fn flow_ode(spec: &IsoparametricSpectrum, t_max: f64, dt: f64, direction: Direction) -> Result<Trajectory> {
    flow_ode_with(spec, t_max, dt, direction, FlowOdeOptions::default())
}

pub fn flow_ode_with(
    spec: &IsoparametricSpectrum,
    t_max: f64,
    dt: f64,
    direction: Direction,
    opts: FlowOdeOptions,
) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) || !(t_max >= 0.0) {
        return Err(Error::Input("dt must be positive and t_max non-negative".into()));
    }
    let sigma = direction.sigma();
    let h0 = mean_curvature_profile(spec, 0.0)?;
    // Movement direction of r; a minimal hypersurface is stationary.
    let heading = if h0 == 0.0 { 0.0 } else { (sigma * h0).signum() };
    let focal = if heading != 0.0 { focal_radius(spec, heading, opts.r_limit, 1e-13) } else { None };
    // A zero of H before the focal radius is an attracting minimal hypersurface;
    // the flow approaches it without collapsing.
    let focal = focal.filter(|&(flo, _)| !mean_curvature_vanishes_between(spec, 0.0, flo));

    let step_record = |t: f64, r: f64| -> Result<TrajectoryStep> {
        let s = jacobi_invariance(spec, r)?;
        Ok(TrajectoryStep { t, r, h: s.mean_curvature(), rho: s.rho(), spectrum: s })
    };
    let f = |r: f64| sigma * raw_mean_curvature(spec, r);

    let mut steps = vec![step_record(0.0, 0.0)?];
    let n_steps = (t_max / dt).round() as usize;
    let mut r = 0.0f64;
    let mut stop = StopReason::TimeLimit;
    for k in 0..n_steps {
        if let Some((flo, fhi)) = focal {
            let rf = 0.5 * (flo + fhi);
            let dist = (rf - r).abs();
            if dt * f(r).abs() > opts.resolution * dist || min_coefficient(spec, r) < opts.delta {
                stop = StopReason::FocalApproach;
                break;
            }
        }
        let k1 = f(r);
        let k2 = f(r + 0.5 * dt * k1);
        let k3 = f(r + 0.5 * dt * k2);
        let k4 = f(r + dt * k3);
        r += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        steps.push(step_record((k + 1) as f64 * dt, r)?);
    }

    let collapse = match focal {
        Some((flo, fhi)) => {
            let last = steps.last().expect("non-empty");
            let remaining = |rf: f64| integrate_inverse_speed(spec, sigma, last.r, rf);
            let (ta, tb) = (last.t + remaining(flo), last.t + remaining(fhi));
            Some(CollapseEvent { r_focal: (flo, fhi), t_collapse: (ta.min(tb), ta.max(tb)) })
        }
        None => None,
    };
    Ok(Trajectory { direction, dt, steps, stop, collapse })
}

fn mean_curvature_vanishes_between(spec: &IsoparametricSpectrum, r0: f64, r1: f64) -> bool {
    let h0 = raw_mean_curvature(spec, r0);
    let samples = 2000;
    (1..samples).any(|k| {
        let r = r0 + (r1 - r0) * k as f64 / samples as f64;
        raw_mean_curvature(spec, r) * h0 <= 0.0
    })
}

/// ∫ dr / (σ H(r)) from `r0` to `r1` by adaptive Simpson quadrature.
fn integrate_inverse_speed(spec: &IsoparametricSpectrum, sigma: f64, r0: f64, r1: f64) -> f64 {
    let g = |r: f64| {
        let v = sigma * raw_mean_curvature(spec, r);
        if v.is_finite() { 1.0 / v } else { 0.0 }
    };
    fn simpson<G: Fn(f64) -> f64>(g: &G, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (g(lm), g(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        simpson(g, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + simpson(g, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (g(r0), g(r1), g(0.5 * (r0 + r1)));
    let whole = (r1 - r0) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(&g, r0, r1, fa, fm, fb, whole, 1e-14, 30)
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremAReport {
    pub max_rho: f64,
    /// ν-values and multiplicities identical at every step.
    pub nu_constant: bool,
    /// H is spatially constant for spectrum-defined families.
    pub h_spatially_constant: bool,
    /// Sign of dH/dt along the trajectory when it is monotone, otherwise 0.
    pub h_monotonicity: i8,
    pub steps: usize,
}

pub fn theorem_a_monitor(spec: &IsoparametricSpectrum, traj: &Trajectory) -> TheoremAReport {
    let nu0: Vec<(f64, usize)> = spec.entries.iter().map(|e| (e.nu, e.mult)).collect();
    let nu_constant = traj
        .steps
        .iter()
        .all(|s| s.spectrum.entries.iter().map(|e| (e.nu, e.mult)).collect::<Vec<_>>() == nu0);
    let diffs: Vec<f64> = traj.steps.windows(2).map(|w| w[1].h - w[0].h).collect();
    let h_monotonicity = if diffs.iter().all(|d| *d > 0.0) && !diffs.is_empty() {
        1
    } else if diffs.iter().all(|d| *d < 0.0) && !diffs.is_empty() {
        -1
    } else {
        0
    };
    TheoremAReport {
        max_rho: traj.steps.iter().map(|s| s.rho).fold(0.0, f64::max),
        nu_constant,
        h_spatially_constant: true,
        h_monotonicity,
        steps: traj.steps.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_at_zero_offset() {
        for (l, nu) in [(0.3, 1.0), (-2.0, 4.0), (1.5, 0.0), (0.7, -1.0)] {
            assert_eq!(parallel_eigenvalue(l, nu, 0.0).unwrap(), l);
        }
    }

    #[test]
    fn euclidean_offset_sphere() {
        // Inward offset r_in corresponds to r = −r_in along the outward normal.
        let (r0, r_in) = (2.0, 0.5);
        let l = parallel_eigenvalue(1.0 / r0, 0.0, -r_in).unwrap();
        assert!((l - 1.0 / (r0 - r_in)).abs() < 1e-15);
        let s = IsoparametricSpectrum::euclidean_sphere(r0, 2).unwrap();
        assert!((mean_curvature_profile(&s, -r_in).unwrap() - 2.0 / (r0 - r_in)).abs() < 1e-14);
    }

    #[test]
    fn sphere_in_sphere_cotangent() {
        let r0: f64 = 0.6;
        for r in [-0.3, 0.1, 0.5] {
            let l = parallel_eigenvalue(1.0 / r0.tan(), 1.0, r).unwrap();
            assert!((l - 1.0 / (r0 + r).tan()).abs() < 1e-12);
        }
    }

    #[test]
    fn hyperbolic_branch() {
        let r0: f64 = 1.0;
        let l = parallel_eigenvalue(1.0 / r0.tanh(), -1.0, 0.4).unwrap();
        assert!((l - 1.0 / (r0 + 0.4).tanh()).abs() < 1e-13);
    }

    #[test]
    fn focal_error() {
        // Euclidean sphere of radius 1 collapses at r = −1.
        let e = parallel_eigenvalue(1.0, 0.0, -1.0).unwrap_err();
        assert!(matches!(e, Error::Focal { .. }));
    }

    #[test]
    fn cp2_profile() {
        let r0: f64 = 0.7;
        let s = IsoparametricSpectrum::cp2_geodesic_sphere(r0).unwrap();
        let expect = 2.0 / r0.tan() + 2.0 / (2.0 * r0).tan();
        assert!((mean_curvature_profile(&s, 0.0).unwrap() - expect).abs() < 1e-14);
        let t = jacobi_invariance(&s, 0.2).unwrap();
        assert_eq!(t.entries()[0].nu, 1.0);
        assert_eq!(t.entries()[1].nu, 4.0);
        assert!((t.entries()[0].lambda - 1.0 / 0.9f64.tan()).abs() < 1e-12);
        assert!((t.entries()[1].lambda - 2.0 / 1.8f64.tan()).abs() < 1e-12);
        assert_eq!(t.rho(), 0.0);
    }

    #[test]
    fn equator_is_stationary() {
        let s = IsoparametricSpectrum::new(vec![SpectrumEntry { lambda: 0.0, nu: 1.0, mult: 3 }], "sphere").unwrap();
        assert_eq!(mean_curvature_profile(&s, 0.0).unwrap(), 0.0);
        let tr = flow_ode(&s, 0.1, 1e-3, Direction::Forward).unwrap();
        assert!(tr.steps.iter().all(|s| s.r == 0.0));
        assert!(tr.collapse.is_none());
    }

    #[test]
    fn shrinking_and_expanding_sphere() {
        let n = 2;
        let s = IsoparametricSpectrum::euclidean_sphere(1.0, n).unwrap();
        let tr = flow_ode(&s, 1.0, 1e-4, Direction::Forward).unwrap();
        assert_eq!(tr.stop, StopReason::FocalApproach);
        let worst = tr
            .steps
            .iter()
            .map(|st| ((1.0 + st.r) / (1.0 - 4.0 * st.t).sqrt() - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "{worst}");
        let c = tr.collapse.unwrap();
        assert!(c.t_collapse.0 - 1e-8 <= 0.25 && 0.25 <= c.t_collapse.1 + 1e-8, "{c:?}");
        assert!(c.t_collapse.1 - c.t_collapse.0 < 1e-8);
        assert!(c.r_focal.1 - c.r_focal.0 < 1e-8);

        let back = flow_ode(&s, 1.0, 1e-4, Direction::Backward).unwrap();
        let worst = back
            .steps
            .iter()
            .map(|st| ((1.0 + st.r) / (1.0 + 4.0 * st.t).sqrt() - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6);
    }

    #[test]
    fn first_integral_conserved() {
        let n = 3;
        let s = IsoparametricSpectrum::euclidean_sphere(1.5, n).unwrap();
        let tr = flow_ode(&s, 0.2, 1e-3, Direction::Forward).unwrap();
        for st in &tr.steps {
            let reff = 1.5 + st.r;
            assert!((reff * reff + 2.0 * n as f64 * st.t - 2.25).abs() < 1e-9);
        }
    }

    #[test]
    fn spectrum_parse() {
        let s = IsoparametricSpectrum::parse("# cp2\n(1.2 1 2)\n(0.3, 4, 1)\n", "cp2").unwrap();
        assert_eq!(s.n(), 3);
        assert!(IsoparametricSpectrum::parse("(1 2)", "x").is_err());
        assert!(IsoparametricSpectrum::parse("(1 2 0)", "x").is_err());
    }

    #[test]
    fn theorem_a_on_cp2_sphere() {
        let s = IsoparametricSpectrum::cp2_geodesic_sphere(0.7).unwrap();
        let tr = flow_ode(&s, 0.05, 1e-3, Direction::Forward).unwrap();
        let rep = theorem_a_monitor(&s, &tr);
        assert_eq!(rep.max_rho, 0.0);
        assert!(rep.nu_constant);
        assert_eq!(rep.h_monotonicity, 1);
        assert!(tr.to_csv().starts_with("t,r,H,lambda_1,lambda_2,nu_1,nu_2,rho\n"));
    }

    proptest! {
        #[test]
        fn cocycle(l in -2.0f64..2.0, nu in -2.0f64..4.0, r1 in -0.2f64..0.2, r2 in -0.2f64..0.2) {
            let direct = parallel_eigenvalue_guarded(l, nu, r1 + r2, 1e-3);
            let staged = parallel_eigenvalue_guarded(l, nu, r1, 1e-3)
                .and_then(|m| parallel_eigenvalue_guarded(m, nu, r2, 1e-3));
            if let (Ok(a), Ok(b)) = (direct, staged) {
                prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
            }
        }

        #[test]
        fn riccati(l in -2.0f64..2.0, nu in -2.0f64..4.0, r in -0.2f64..0.2) {
            let h = 1e-5;
            if let (Ok(a), Ok(b), Ok(m)) = (
                parallel_eigenvalue_guarded(l, nu, r + h, 1e-2),
                parallel_eigenvalue_guarded(l, nu, r - h, 1e-2),
                parallel_eigenvalue_guarded(l, nu, r, 1e-2),
            ) {
                let d = (a - b) / (2.0 * h);
                prop_assert!((d + nu + m * m).abs() <= 1e-5 * (1.0 + m * m));
            }
        }
    }
}
