//! Refinement studies of the evolution residuals in dt and in h.

use serde::Serialize;

use super::residuals::{pushforward_derivative_check, residual_check, richardson_ratio, EvolutionEquation};
use super::{parallel_snapshots, pde_snapshots, FlowTrace, Stepper};
use crate::error::Result;
use crate::immersion::Family;

/// Absolute floor below which successive differences count as roundoff.
pub const RICHARDSON_FLOOR: f64 = 1e-9;
/// Relative floor: differences below this fraction of the finest residual
/// mean the refined parameter does not measurably contribute.
pub const RICHARDSON_RELATIVE_FLOOR: f64 = 1e-2;

#[derive(Clone, Debug)]
pub enum SnapshotSource {
    /// Explicit PDE steps at ±dt around the closed-form immersion.
    Pde { family: Family, stepper: Stepper },
    /// Exact parallel hypersurfaces at the ODE offsets r(±dt).
    Parallel { family: Family },
}

impl SnapshotSource {
    pub fn family(&self) -> &Family {
        match self {
            SnapshotSource::Pde { family, .. } | SnapshotSource::Parallel { family } => family,
        }
    }

    pub fn label(&self) -> String {
        match self {
            SnapshotSource::Pde { family, .. } => format!("{} (pde)", family.name()),
            SnapshotSource::Parallel { family } => format!("{} (parallel)", family.name()),
        }
    }

    /// Three snapshots at t = −dt, 0, dt on a patch around the family's sample centre.
    pub fn snapshots(&self, h: f64, size: usize, dt: f64, margin: usize) -> Result<FlowTrace> {
        let fam = self.family();
        let center = fam.sample_center();
        match self {
            SnapshotSource::Pde { stepper, .. } => pde_snapshots(&fam.build_patch(&center, h, size)?, dt, *stepper, margin),
            SnapshotSource::Parallel { .. } => parallel_snapshots(fam, &center, h, size, &[-dt, 0.0, dt], margin),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Refinement {
    /// Max interior residual at the three levels, coarse to fine.
    pub residuals: [f64; 3],
    pub ratio: Option<f64>,
    pub order: Option<f64>,
    /// Successive differences are below the floors: no measurable error of this kind.
    pub flat: bool,
}

impl Refinement {
    fn from_centers(residuals: [f64; 3], c: [&[f64]; 3]) -> Self {
        let diff = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        let norm = c[2].iter().map(|v| v * v).sum::<f64>().sqrt();
        let floor = RICHARDSON_FLOOR.max(RICHARDSON_RELATIVE_FLOOR * norm);
        if diff(c[0], c[1]) <= floor && diff(c[1], c[2]) <= floor {
            return Self { residuals, ratio: None, order: None, flat: true };
        }
        let ratio = richardson_ratio(c[0], c[1], c[2]);
        Self { residuals, ratio: Some(ratio), order: Some(ratio.log2()), flat: false }
    }

    /// Richardson ratio in [3.5, 4.5] (second order), or no error at all.
    pub fn second_order(&self) -> bool {
        self.flat || self.ratio.is_some_and(|r| (3.5..=4.5).contains(&r))
    }

    pub fn order_at_least(&self, p: f64) -> bool {
        self.flat || self.order.is_some_and(|o| o >= p)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EquationStudy {
    pub tag: String,
    pub in_dt: Refinement,
    pub in_h: Refinement,
    /// Max interior residual at the default resolution (finest h, base dt).
    pub residual: f64,
    /// Same for the printed display, when it differs.
    pub printed: Option<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct StudyConfig {
    /// Finest spacing; the h-study uses 4h, 2h, h.
    pub h: f64,
    /// Base step; the dt-study uses 4dt, 2dt, dt.
    pub dt: f64,
    pub size: usize,
    pub margin: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self { h: 0.004, dt: 2.5e-4, size: 13, margin: 4 }
    }
}

impl StudyConfig {
    /// Default resolution for a source: the finest h before roundoff in the
    /// fourth-derivative chains reaches the truncation error.
    pub fn for_source(source: &SnapshotSource) -> Self {
        match source.family() {
            Family::SphereR3 { .. } | Family::PlaneR3 => Self { h: 0.005, ..Self::default() },
            _ => Self::default(),
        }
    }
}

/// Residual studies for every evolution equation plus the push-forward
/// identity (tag "Lemma 3.1", field ∂₀).
pub fn refinement_study(source: &SnapshotSource, cfg: StudyConfig) -> Result<Vec<EquationStudy>> {
    let dts = [4.0 * cfg.dt, 2.0 * cfg.dt, cfg.dt];
    let hs = [4.0 * cfg.h, 2.0 * cfg.h, cfg.h];
    let by_dt: Vec<FlowTrace> =
        dts.iter().map(|&dt| source.snapshots(cfg.h, cfg.size, dt, cfg.margin)).collect::<Result<_>>()?;
    let by_h: Vec<FlowTrace> =
        hs.iter().map(|&h| source.snapshots(h, cfg.size, cfg.dt, cfg.margin)).collect::<Result<_>>()?;

    let mut out = Vec::with_capacity(EvolutionEquation::ALL.len() + 1);
    for eq in EvolutionEquation::ALL {
        let rd: Vec<_> = by_dt.iter().map(|t| residual_check(t, eq, 1, 2)).collect::<Result<_>>()?;
        let rh: Vec<_> = by_h.iter().map(|t| residual_check(t, eq, 1, 2)).collect::<Result<_>>()?;
        out.push(EquationStudy {
            tag: eq.tag().to_string(),
            in_dt: Refinement::from_centers(
                [rd[0].residual, rd[1].residual, rd[2].residual],
                [&rd[0].center, &rd[1].center, &rd[2].center],
            ),
            in_h: Refinement::from_centers(
                [rh[0].residual, rh[1].residual, rh[2].residual],
                [&rh[0].center, &rh[1].center, &rh[2].center],
            ),
            residual: rd[2].residual,
            printed: rd[2].printed,
        });
    }
    let pd: Vec<_> = by_dt.iter().map(|t| pushforward_derivative_check(t, 0, 1)).collect::<Result<_>>()?;
    let ph: Vec<_> = by_h.iter().map(|t| pushforward_derivative_check(t, 0, 1)).collect::<Result<_>>()?;
    out.push(EquationStudy {
        tag: "Lemma 3.1".into(),
        in_dt: Refinement::from_centers([pd[0].0, pd[1].0, pd[2].0], [&pd[0].1, &pd[1].1, &pd[2].1]),
        in_h: Refinement::from_centers([ph[0].0, ph[1].0, ph[2].0], [&ph[0].1, &ph[1].1, &ph[2].1]),
        residual: pd[2].0,
        printed: None,
    });
    Ok(out)
}
