//! The verification suites behind each subcommand.

use std::fmt::Write as _;

use curvflow::ambient::AmbientModel;
use curvflow::flow::study::{refinement_study, SnapshotSource, StudyConfig};
use curvflow::flow::{
    corollary_e_gate, gap_monitor, max_principle_check, parallel_snapshots, residual_check, run_pde_flow,
    spectrum_mean_curvature_check, stability_bound, EvolutionEquation, FlowTrace, StepOptions, MAX_PDE_STEPS,
};
use curvflow::immersion::{
    adaptedness_report, catalog, gauss_codazzi_residual, jacobi_derivative_residual, parse_grid_file,
    second_order_identities, AdaptednessReport, Family, Grid, HypersurfaceState, IdentityResidual,
};
use curvflow::parallel::{flow_ode_with, theorem_a_monitor, FlowOdeOptions, FOCAL_DELTA};
use curvflow::tensor::{c1_constant, BoundInputs};
use curvflow::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::Resolver;
use crate::output::{csv_field, jnum, num, opt_num, OutDir, Outcome};

/// Stencil margin excluded from residual maxima.
const MARGIN: usize = 3;
/// Minimum observed order for a refinement to count as convergent.
const MIN_ORDER: f64 = 1.8;
/// Residuals below this at every level are round-off, not truncation error.
const FLAT_FLOOR: f64 = 1e-9;

fn identity_residuals(state: &HypersurfaceState) -> Result<Vec<IdentityResidual>> {
    let mut v = gauss_codazzi_residual(state, MARGIN)?;
    v.push(jacobi_derivative_residual(state, MARGIN)?);
    v.extend(second_order_identities(state, MARGIN)?);
    Ok(v)
}

/// 1e−8·n·(1 + max‖A‖⁴) over the interior.
fn rho_tolerance(state: &HypersurfaceState) -> f64 {
    let max_a = state
        .interior(MARGIN)
        .into_iter()
        .map(|i| {
            let p = state.point(i);
            p.a.norm(&p.metric)
        })
        .fold(0.0f64, f64::max);
    1e-8 * state.dim() as f64 * (1.0 + max_a.powi(4))
}

fn adaptedness_csv(rep: &AdaptednessReport) -> String {
    let mut s = String::from("index,param,rho,mu,s_norm,s_hat_norm,pairing\n");
    for p in &rep.points {
        let param: Vec<String> = p.param.iter().map(|u| format!("{u:.12}")).collect();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            p.index,
            csv_field(&param.join(" ")),
            num(p.rho),
            num(p.mu),
            num(p.s_norm),
            num(p.s_hat_norm),
            num(p.pairing)
        );
    }
    s
}

pub fn verify_identities(cfg: &mut Resolver, dir: &OutDir) -> Result<Outcome> {
    let mut out = Outcome::default();
    if let Some(path) = cfg.grid_file() {
        return verify_grid_file(cfg, dir, &path, out);
    }
    let fam = cfg.family("sphere-r3")?;
    let size = cfg.value("size", cfg.flags().size, 11)?;
    let h = cfg.positive("h", cfg.flags().h, 0.02)?;
    let hs = [2.0 * h, h];
    let center = fam.sample_center();
    let states: Vec<HypersurfaceState> = hs
        .iter()
        .map(|&hh| HypersurfaceState::build(&fam.build_patch(&center, hh, size)?))
        .collect::<Result<_>>()?;
    let levels: Vec<Vec<IdentityResidual>> = states.iter().map(identity_residuals).collect::<Result<_>>()?;

    out.line(format!("example {} on a {size}-point patch, h = {} and {h}", fam.name(), 2.0 * h));
    let mut csv = String::from("tag,h,residual,printed\n");
    let mut table = vec![];
    for (lv, hh) in levels.iter().zip(hs) {
        for r in lv {
            let _ = writeln!(csv, "{},{},{},{}", csv_field(&r.tag), num(hh), num(r.residual), opt_num(r.printed));
        }
    }
    for (coarse, fine) in levels[0].iter().zip(&levels[1]) {
        let flat = coarse.residual <= FLAT_FLOOR && fine.residual <= FLAT_FLOOR;
        let order = (coarse.residual / fine.residual).log2();
        let verdict = if flat { "round-off".to_string() } else { format!("order {order:.2}") };
        out.line(format!(
            "{:10} residual {:.3e} -> {:.3e} ({verdict}){}",
            fine.tag,
            coarse.residual,
            fine.residual,
            fine.printed.map(|p| format!(", as printed {p:.3e}")).unwrap_or_default()
        ));
        out.check(
            flat || order >= MIN_ORDER,
            &fine.tag,
            format!("residual {:.3e} -> {:.3e} under halving h, order {order:.2} < {MIN_ORDER}", coarse.residual, fine.residual),
        );
        table.push(json!({
            "tag": fine.tag,
            "residual": jnum(fine.residual),
            "coarse_residual": jnum(coarse.residual),
            "order": if flat { Value::Null } else { jnum(order) },
            "printed": fine.printed.map(jnum),
        }));
    }
    dir.write(&mut out, "identities.csv", &csv)?;

    let fine = &states[1];
    let rep = adaptedness_report(fine, MARGIN)?;
    let rho_tol = match cfg.optional_positive("rho-tol", cfg.flags().rho_tol)? {
        Some(t) => t,
        None => rho_tolerance(fine),
    };
    out.line(format!(
        "max rho {:.3e} (tolerance {rho_tol:.1e}), max |S^| {:.3e}, sup mu {:.3e}; expected: {}",
        rep.max_rho,
        rep.max_s_hat,
        rep.sup_mu,
        fam.status()
    ));
    if fam.status().starts_with("curvature-adapted") {
        out.check(rep.max_rho <= rho_tol, "(1.3)", format!("max rho {:.3e} exceeds {rho_tol:.1e}", rep.max_rho));
    }
    out.check(
        rep.points.iter().all(|p| p.rho >= 0.0),
        "(1.3)",
        "negative gap function value",
    );
    dir.write(&mut out, "adaptedness.csv", &adaptedness_csv(&rep))?;
    out.field("example", json!(fam.name()));
    out.field("identities", json!(table));
    out.field(
        "adaptedness",
        json!({"max_rho": jnum(rep.max_rho), "rho_tol": jnum(rho_tol), "max_s_hat": jnum(rep.max_s_hat),
               "sup_mu": jnum(rep.sup_mu), "min_pairing": jnum(rep.min_pairing), "status": fam.status()}),
    );
    Ok(out)
}

fn verify_grid_file(cfg: &mut Resolver, dir: &OutDir, path: &std::path::Path, mut out: Outcome) -> Result<Outcome> {
    let model = AmbientModel::new(cfg.model()?)?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read grid file {}: {e}", path.display())))?;
    let spacing = cfg
        .float_list("spacing", cfg.flags().spacing.clone())?
        .ok_or_else(|| Error::Config("grid files need --spacing".into()))?;
    let wrap = cfg.bool_list("wrap", cfg.flags().wrap.clone())?.unwrap_or_else(|| vec![false; spacing.len()]);
    let orientation = cfg.value("orientation", cfg.flags().orientation, 1.0)?;
    let tol = cfg.positive("identity-tol", cfg.flags().identity_tol, 1e-2)?;
    let im = parse_grid_file(&text, model, &spacing, &wrap, orientation)?;
    let state = HypersurfaceState::build(&im)?;
    out.line(format!("grid file {} ({} points)", path.display(), im.grid().len()));
    let mut csv = String::from("tag,residual,printed\n");
    let mut table = vec![];
    for r in identity_residuals(&state)? {
        let _ = writeln!(csv, "{},{},{}", csv_field(&r.tag), num(r.residual), opt_num(r.printed));
        out.line(format!("{:10} residual {:.3e}", r.tag, r.residual));
        out.check(r.residual <= tol, &r.tag, format!("residual {:.3e} exceeds {tol:.1e}", r.residual));
        table.push(json!({"tag": r.tag, "residual": jnum(r.residual), "printed": r.printed.map(jnum)}));
    }
    dir.write(&mut out, "identities.csv", &csv)?;
    let rep = adaptedness_report(&state, MARGIN)?;
    out.line(format!("max rho {:.3e}, max |S^| {:.3e}", rep.max_rho, rep.max_s_hat));
    dir.write(&mut out, "adaptedness.csv", &adaptedness_csv(&rep))?;
    out.field("identities", json!(table));
    out.field("adaptedness", json!({"max_rho": jnum(rep.max_rho), "max_s_hat": jnum(rep.max_s_hat)}));
    Ok(out)
}

pub fn parallel(cfg: &mut Resolver, dir: &OutDir) -> Result<Outcome> {
    let mut out = Outcome::default();
    let fam = cfg.family("cp2-geodesic-sphere")?;
    let spec = fam
        .spectrum()
        .ok_or_else(|| Error::Config(format!("{} is not an isoparametric example", fam.name())))?;
    let t_max = cfg.positive("t-max", cfg.flags().t_max, 0.2)?;
    let dt = cfg.positive("dt", cfg.flags().dt, 1e-4)?;
    let direction = cfg.direction()?;
    let delta = cfg.positive("delta", cfg.flags().delta, FOCAL_DELTA)?;
    let traj = flow_ode_with(&spec, t_max, dt, direction, FlowOdeOptions { delta, ..FlowOdeOptions::default() })?;
    let rep = theorem_a_monitor(&spec, &traj);
    let chain = spectrum_mean_curvature_check(&spec, &traj);
    let last = traj.last();
    out.line(format!(
        "{} {} flow: {} steps to t = {:.6}, r = {:.6}, H = {:.6} ({:?})",
        fam.name(),
        if direction == curvflow::parallel::Direction::Forward { "forward" } else { "backward" },
        rep.steps,
        last.t,
        last.r,
        last.h,
        traj.stop
    ));
    if let Some(c) = &traj.collapse {
        out.line(format!(
            "focal radius in [{:.12}, {:.12}], collapse time in [{:.12}, {:.12}]",
            c.r_focal.0, c.r_focal.1, c.t_collapse.0, c.t_collapse.1
        ));
    }
    out.line(format!("max rho {:.3e}, nu constant: {}, mean-curvature chain defect {chain:.3e}", rep.max_rho, rep.nu_constant));
    out.check(rep.nu_constant, "Theorem A", "normal Jacobi spectrum changed along the flow");
    out.check(rep.max_rho <= 1e-12, "Theorem A", format!("spectrum gap {:.3e} along the flow", rep.max_rho));
    out.check(chain <= 1e-8, "Lemma 2.4", format!("spectrum ODE and chain rule differ by {chain:.3e}"));
    dir.write(&mut out, "trajectory.csv", &traj.to_csv())?;
    out.field("example", json!(fam.name()));
    out.field("stop", json!(format!("{:?}", traj.stop)));
    out.field("final", json!({"t": jnum(last.t), "r": jnum(last.r), "H": jnum(last.h)}));
    out.field(
        "collapse",
        traj.collapse.as_ref().map_or(Value::Null, |c| {
            json!({"r_focal": [jnum(c.r_focal.0), jnum(c.r_focal.1)], "t_collapse": [jnum(c.t_collapse.0), jnum(c.t_collapse.1)]})
        }),
    );
    out.field("theorem_a", json!({"max_rho": jnum(rep.max_rho), "nu_constant": rep.nu_constant, "h_monotonicity": rep.h_monotonicity}));
    out.field("lemma_2_4_chain", jnum(chain));
    Ok(out)
}

fn monitor_csv(trace: &FlowTrace) -> String {
    let mut s = String::from("t,max_rho,sup_mu,max_s_hat,min_pairing,h_min,h_max\n");
    for m in trace.monitors() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            num(m.t),
            num(m.max_rho),
            num(m.sup_mu),
            num(m.max_s_hat),
            num(m.min_pairing),
            num(m.h_min),
            num(m.h_max)
        );
    }
    s
}

fn snapshot_source(cfg: &mut Resolver, fam: &Family) -> Result<String> {
    let default = if fam.spectrum().is_some() { "parallel" } else { "pde" };
    let s = cfg.value("source", cfg.flags().source.clone(), default.to_string())?;
    match s.as_str() {
        "pde" => Ok(s),
        "parallel" if fam.spectrum().is_some() => Ok(s),
        "parallel" => Err(Error::Config(format!("{} has no parallel family", fam.name()))),
        other => Err(Error::Config(format!("source must be pde or parallel, got '{other}'"))),
    }
}

/// A flow trace over `steps` steps from the configured example.
fn flow_trace(cfg: &mut Resolver, fam: &Family, source: &str, default_steps: usize) -> Result<FlowTrace> {
    let size = cfg.value("size", cfg.flags().size, 13)?;
    let h = cfg.positive("h", cfg.flags().h, 0.01)?;
    let steps = cfg.value("steps", cfg.flags().steps, default_steps)?;
    let direction = cfg.direction()?;
    let kappa = cfg.positive("kappa", cfg.flags().kappa, 0.25)?;
    let stepper = cfg.stepper()?;
    let im = fam.build_patch(&fam.sample_center(), h, size)?;
    let dt = match cfg.optional_positive("dt", cfg.flags().dt)? {
        Some(dt) => dt,
        None => {
            let dt = 0.5 * stability_bound(&curvflow::immersion::fundamental_forms(&im)?, kappa);
            cfg.value("dt", Some(dt), dt)?
        }
    };
    if source == "parallel" {
        let sign = match direction {
            curvflow::parallel::Direction::Forward => 1.0,
            curvflow::parallel::Direction::Backward => -1.0,
        };
        let times: Vec<f64> = (0..=steps).map(|k| sign * k as f64 * dt).collect();
        let mut ordered = times.clone();
        ordered.sort_by(f64::total_cmp);
        return parallel_snapshots(fam, &fam.sample_center(), h, size, &ordered, MARGIN);
    }
    if steps > MAX_PDE_STEPS {
        return Err(Error::Config(format!("{steps} PDE steps requested, limit is {MAX_PDE_STEPS}")));
    }
    run_pde_flow(&im, dt, steps, direction, StepOptions { stepper, kappa }, MARGIN)
}

pub fn pde_flow(cfg: &mut Resolver, dir: &OutDir) -> Result<Outcome> {
    let mut out = Outcome::default();
    let fam = cfg.family("sphere-r3")?;
    let stepper = cfg.stepper()?;
    let trace = flow_trace(cfg, &fam, "pde", 20)?;
    let times = trace.times();
    out.line(format!(
        "{}: {} snapshots, t = {:.3e} .. {:.3e}",
        fam.name(),
        trace.len(),
        times[0],
        times[times.len() - 1]
    ));
    dir.write(&mut out, "monitor.csv", &monitor_csv(&trace))?;

    // Per-time residuals of every evolution equation on the run itself.
    let mut csv = String::from("tag,t,residual,printed\n");
    for eq in EvolutionEquation::ALL {
        for k in 1..trace.len().saturating_sub(1) {
            let r = residual_check(&trace, eq, k, 2)?;
            let _ = writeln!(csv, "{},{},{},{}", csv_field(eq.tag()), num(times[k]), num(r.residual), opt_num(r.printed));
        }
    }
    dir.write(&mut out, "residuals.csv", &csv)?;

    // Convergence of the residuals under refinement at the study resolution.
    let tol = cfg.positive("residual-tol", cfg.flags().residual_tol, 1e-3)?;
    let src = SnapshotSource::Pde { family: fam.clone(), stepper };
    let study = refinement_study(&src, StudyConfig::for_source(&src))?;
    let mut table = vec![];
    for s in &study {
        let fmt = |r: &curvflow::flow::study::Refinement| {
            if r.flat {
                "flat".to_string()
            } else {
                r.ratio.map_or("-".into(), |x| format!("{x:.3}"))
            }
        };
        out.line(format!(
            "{:10} residual {:.3e}, ratio dt {} h {}{}",
            s.tag,
            s.residual,
            fmt(&s.in_dt),
            fmt(&s.in_h),
            s.printed.map(|p| format!(", as printed {p:.3e}")).unwrap_or_default()
        ));
        out.check(s.residual <= tol, &s.tag, format!("residual {:.3e} exceeds {tol:.1e}", s.residual));
        out.check(
            s.in_dt.second_order() && s.in_h.second_order(),
            &s.tag,
            format!("Richardson ratios dt {} h {} outside [3.5, 4.5]", fmt(&s.in_dt), fmt(&s.in_h)),
        );
        table.push(serde_json::to_value(s)?);
    }
    out.field("example", json!(fam.name()));
    out.field("residual_study", json!(table));
    Ok(out)
}

pub fn monitor(cfg: &mut Resolver, dir: &OutDir) -> Result<Outcome> {
    let mut out = Outcome::default();
    let fam = cfg.family("cp2-perturbed")?;
    let source = snapshot_source(cfg, &fam)?;
    let trace = flow_trace(cfg, &fam, &source, 10)?;
    let rho_tol = cfg.optional_positive("rho-tol", cfg.flags().rho_tol)?;
    let mon = gap_monitor(&trace, rho_tol);
    let gate = corollary_e_gate(&trace, mon.rho_tol);
    let ambient = fam.ambient();
    let c_a = trace
        .states()
        .iter()
        .flat_map(|s| s.interior(MARGIN).into_iter().map(move |i| (s, i)))
        .map(|(s, i)| s.point(i).a.norm(&s.point(i).metric))
        .fold(0.0f64, f64::max);
    let sup_mu = trace.monitors().iter().map(|m| m.sup_mu).fold(f64::NEG_INFINITY, f64::max);
    let c1 = c1_constant(&BoundInputs { n: fam.dim(), c_a, r_norm: ambient.r_norm(), sup_mu })?;
    out.line(format!("{} ({source}): {} snapshots, rho_tol {:.2e}", fam.name(), trace.len(), mon.rho_tol));
    out.line(match mon.t_min {
        Some(t) => format!("max rho exceeds tolerance from t = {t:.6e}; sup mu growth flag {}", mon.mu_growth_flag),
        None => "max rho stays within tolerance".to_string(),
    });
    out.line(format!(
        "Corollary E gate: pairing >= 0 {}, rho bounded {}, implication instance {}, counterexample candidate {}",
        gate.pairing_nonnegative, gate.rho_bounded, gate.implication_instance, gate.counterexample_candidate
    ));
    out.line(format!("C1 = {c1:.6} (c_A {c_a:.4}, |R~| {:.4}, sup mu {sup_mu:.4e})", ambient.r_norm()));
    out.check(mon.points.iter().all(|p| p.max_rho >= 0.0), "(1.3)", "negative gap function value");
    if source == "parallel" {
        let t = mon.t_min.unwrap_or(f64::NAN);
        out.check(mon.t_min.is_none(), "Theorem A", format!("parallel family exceeds rho_tol from t = {t:.6e}"));
    }
    dir.write(&mut out, "monitor.csv", &mon.to_csv())?;
    dir.write(&mut out, "monitor.svg", &mon.to_svg())?;
    dir.write(&mut out, "trace.csv", &monitor_csv(&trace))?;
    out.field("example", json!(fam.name()));
    out.field("source", json!(source));
    out.field("rho_tol", jnum(mon.rho_tol));
    out.field("t_min", mon.t_min.map_or(Value::Null, jnum));
    out.field("mu_growth_flag", json!(mon.mu_growth_flag));
    out.field("corollary_e", serde_json::to_value(&gate)?);
    out.field("c1", jnum(c1));
    Ok(out)
}

pub fn max_principle(cfg: &mut Resolver, dir: &OutDir) -> Result<Outcome> {
    let mut out = Outcome::default();
    let n = cfg.value("n", cfg.flags().n, 2)?;
    let c_a = cfg.value("ca", cfg.flags().ca, 1.0)?;
    let r_norm = cfg.value("rnorm", cfg.flags().rnorm, 1.0)?;
    let sup_mu = cfg.value("supmu", cfg.flags().supmu, 0.0)?;
    let c1 = c1_constant(&BoundInputs { n, c_a, r_norm, sup_mu }).map_err(|e| Error::Config(e.to_string()))?;
    let size = cfg.value("grid", cfg.flags().grid, 64)?;
    let t_max = cfg.positive("t-max", cfg.flags().t_max, 0.1)?;
    let samples = cfg.value("samples", cfg.flags().samples, 100)?;
    let seed = cfg.value("seed", cfg.flags().seed, 0)?;
    if size < 3 {
        return Err(Error::Config("grid must have at least 3 points per axis".into()));
    }
    let step = std::f64::consts::TAU / size as f64;
    let grid = Grid::new(vec![size, size], vec![0.0; 2], vec![step; 2], vec![true; 2])?;
    let dt = match cfg.optional_positive("dt", cfg.flags().dt)? {
        Some(dt) => dt,
        None => 0.9 * step * step / 4.0,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut csv = String::from("sample,max_rho0,max_ratio,final_ratio,bound_holds,rescaled_monotone\n");
    let (mut worst, mut held) = (0.0f64, 0usize);
    for k in 0..samples {
        let rho0: Vec<f64> = (0..grid.len()).map(|_| rng.gen::<f64>()).collect();
        let rep = max_principle_check(&grid, c1, &rho0, t_max, dt)?;
        worst = worst.max(rep.max_ratio);
        held += rep.bound_holds as usize;
        let _ = writeln!(
            csv,
            "{k},{},{},{},{},{}",
            num(rep.max_rho0),
            num(rep.max_ratio),
            num(rep.final_ratio),
            rep.bound_holds,
            rep.rescaled_monotone
        );
    }
    dir.write(&mut out, "samples.csv", &csv)?;
    let constant = max_principle_check(&grid, c1, &vec![1.0; grid.len()], t_max, dt)?;
    let eq_err = (constant.final_ratio - 1.0).abs();
    let mut tl = String::from("t,max_rho,bound\n");
    for (t, r, b) in &constant.timeline {
        let _ = writeln!(tl, "{},{},{}", num(*t), num(*r), num(*b));
    }
    dir.write(&mut out, "constant.csv", &tl)?;

    out.line(format!("C1 = {c1} (n = {n}, c_A = {c_a}, |R~| = {r_norm}, sup mu = {sup_mu})"));
    out.line(format!(
        "{held}/{samples} random rho0 on a {size}x{size} periodic grid respect the bound up to t = {t_max} (max ratio {worst:.9})"
    ));
    out.line(format!("constant rho0: final ratio {:.12} (equality defect {eq_err:.1e})", constant.final_ratio));
    out.line(format!("bound verdict: {}", if held == samples && eq_err <= 1e-6 { "PASS" } else { "FAIL" }));
    out.check(held == samples, "Prop. 4.5", format!("{} of {samples} samples exceed max rho0 e^(C1 t)", samples - held));
    out.check(eq_err <= 1e-6, "Prop. 4.5", format!("constant data departs from equality by {eq_err:.2e}"));
    out.field("c1", jnum(c1));
    out.field("samples", json!(samples));
    out.field("max_ratio", jnum(worst));
    out.field("constant_equality_defect", jnum(eq_err));
    out.field("bound_verdict", json!(if held == samples && eq_err <= 1e-6 { "PASS" } else { "FAIL" }));
    Ok(out)
}

pub fn catalog_listing(dir: &OutDir) -> Result<Outcome> {
    let mut out = Outcome::default();
    let cat = catalog();
    let mut csv = String::from("name,ambient,dim,status\n");
    for e in &cat {
        let _ = writeln!(csv, "{},{},{},{}", csv_field(&e.name), csv_field(&e.ambient), e.dim, csv_field(&e.status));
        out.line(format!("{:28} {:24} n={} {}", e.name, e.ambient, e.dim, e.status));
    }
    dir.write(&mut out, "catalog.csv", &csv)?;
    out.field("catalog", serde_json::to_value(&cat)?);
    Ok(out)
}

pub const ALL_SUITES: &[&str] = &["identities", "parallel", "pde-flow", "max-principle", "monitor"];

pub fn run_suite(name: &str, cfg: &mut Resolver, dir: &OutDir) -> Result<Outcome> {
    match name {
        "identities" | "verify-identities" => verify_identities(cfg, dir),
        "parallel" => parallel(cfg, dir),
        "pde-flow" => pde_flow(cfg, dir),
        "max-principle" => max_principle(cfg, dir),
        "monitor" => monitor(cfg, dir),
        other => Err(Error::Config(format!("unknown suite '{other}'"))),
    }
}
