use std::f64::consts::TAU;
use std::fs::File;

use log::info;
use serde_json::{json, Value};

use phasefunnel::contraction::{self, certify_contraction, certify_funnel, FunnelCertOptions, LieOptions};
use phasefunnel::hybrid::{simulate_hybrid, toy_walker, JumpGrid, SimOptions};
use phasefunnel::inclusion::systems::{self, System};
use phasefunnel::inclusion::{
    average, check_bound, check_periodicity, estimate_lipschitz, phase_field, theorem1_constant,
};
use phasefunnel::reach::{
    self, graph_distance, periodic_funnel, poincare_map, propagate_time, CrossSection, ParamKind,
    ReachOptions, RfSolution, TranslationSearch,
};
use phasefunnel::scaling::{run_theorem1, run_theorem2, run_theorem3, ScalingOptions, ScalingReport};
use phasefunnel::sets::{self, hausdorff};
use phasefunnel::{CompactSet, DirectionGrid, Error, Result};

use crate::config::{CommandKind, FunnelSource, RunConfig};
use crate::output::{Check, Outcome, Output};

const DEFAULT_N_PHI: usize = 64;
const DEFAULT_SAMPLES: usize = 2000;
const DEFAULT_SLACK: f64 = 1e-6;
const DEFAULT_FD_STEP: f64 = 1e-5;
const DEFAULT_MAX_ITER: usize = 50;

pub fn execute(kind: CommandKind, cfg: &RunConfig, out: &mut Output) -> Result<Outcome> {
    match kind {
        CommandKind::Average => run_average(cfg, out),
        CommandKind::Reach => run_reach(cfg, out),
        CommandKind::Poincare => run_poincare(cfg, out),
        CommandKind::Periodic => run_periodic(cfg, out),
        CommandKind::Certify => run_certify(cfg, out),
        CommandKind::CertifyFunnel => run_certify_funnel(cfg, out),
        CommandKind::Theorem1 | CommandKind::Theorem2 | CommandKind::Theorem3 => {
            run_scaling(kind, cfg, out)
        }
        CommandKind::GraphDistance => run_graph(cfg, out),
        CommandKind::Walker => run_walker(cfg, out),
    }
}

fn system(cfg: &RunConfig) -> Result<System> {
    systems::build(cfg.system()?)
}

fn reach_options(cfg: &RunConfig, step: f64, sys: &System) -> Result<ReachOptions> {
    Ok(ReachOptions::new(step, cfg.numerics.h()?)
        .seed(cfg.numerics.seed())
        .domain(sys.domain.clone()))
}

/// Bounding box of `points`, padded by one unit, clipped to the domain.
fn check_box(sys: &System, points: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = sys.dim();
    (0..n)
        .map(|k| {
            let lo = points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min) - 1.0;
            let hi = points.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max) + 1.0;
            (lo.max(sys.domain.lo[k]), hi.min(sys.domain.hi[k]))
        })
        .unzip()
}

fn run_average(cfg: &RunConfig, out: &mut Output) -> Result<Outcome> {
    let sys = system(cfg)?;
    let num = &cfg.numerics;
    let n_phi = num.n_phi.unwrap_or(DEFAULT_N_PHI);
    let grid = match (sys.dim(), num.n_dirs) {
        (2, Some(n)) => DirectionGrid::planar(n)?,
        _ => DirectionGrid::new(sys.dim())?,
    };
    let states = cfg
        .initial_set
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("config needs `initial_set` (the states to average at)".into()))?
        .points()?;
    let mut csv = String::from("state,direction");
    for k in 1..=sys.dim() {
        csv.push_str(&format!(",x{k}"));
    }
    for k in 1..=sys.dim() {
        csv.push_str(&format!(",v{k}"));
    }
    csv.push('\n');
    let mut per_state = Vec::new();
    for (i, x) in states.iter().enumerate() {
        let avg = average(&sys.field, x, n_phi, &grid)?;
        for (d, v) in avg.vertices().enumerate() {
            let row: Vec<String> = x.iter().chain(v).map(|c| format!("{c:e}")).collect();
            csv.push_str(&format!("{i},{d},{}\n", row.join(",")));
        }
        per_state.push(json!({
            "x": x,
            "centroid": avg.centroid(),
            "max_norm": avg.max_norm(),
        }));
    }
    out.write("average.csv", csv.as_bytes())?;

    // Hypotheses of the averaging estimates, checked on a box around the
    // states.
    let (lo, hi) = check_box(&sys, &states);
    let samples = num.samples.unwrap_or(DEFAULT_SAMPLES);
    let seed = num.seed();
    let bound = check_bound(&sys.field, &lo, &hi, samples, seed);
    let lipschitz = estimate_lipschitz(&sys.field, &lo, &hi, samples, seed)?;
    let periodicity = check_periodicity(&sys.field, &lo, &hi, samples.min(200), seed)?;
    let sc = cfg.system()?;
    let constant = match (sc.m_x, sc.lambda, &sc.omega) {
        (Some(m_x), Some(lambda), Some(om)) => Some(theorem1_constant(
            om.m,
            om.big_m,
            m_x,
            lambda,
            om.lambda_omega,
            num.l.unwrap_or(1.0),
        )?),
        _ => None,
    };
    let details = json!({
        "n_phi": n_phi,
        "directions": grid.count(),
        "states": per_state,
        "hypotheses": {
            "box_lo": lo,
            "box_hi": hi,
            "sampled_bound": bound,
            "declared_bound": sc.m_x,
            "sampled_lipschitz": lipschitz,
            "declared_lipschitz": sc.lambda,
            "periodicity_defect": periodicity,
            "gap_constant": constant,
        },
    });
    let mut outcome = Outcome::new(
        format!(
            "averaged {} states over {n_phi} phases in {} directions; sampled |X| <= {bound:.4}, periodicity defect {periodicity:.2e}",
            states.len(),
            grid.count()
        ),
        details,
    );
    if let Some(m_x) = sc.m_x {
        outcome.checks.push(Check::new(
            "declared_bound",
            bound <= m_x * (1.0 + 1e-9),
            format!("sampled {bound} vs declared M_X {m_x}"),
        ));
    }
    Ok(outcome)
}

fn max_gap_check(cfg: &RunConfig, outcome: &mut Outcome, gap: f64, what: &str) {
    if let Some(max) = cfg.assertions.max_gap {
        outcome.checks.push(Check::new(
            "max_gap",
            gap <= max,
            format!("{what} {gap} vs limit {max}"),
        ));
    }
}

fn run_reach(cfg: &RunConfig, out: &mut Output) -> Result<Outcome> {
    let sys = system(cfg)?;
    let num = &cfg.numerics;
    let r0 = cfg.initial_set(num.h()?)?;
    let t0 = num.t0.unwrap_or(0.0);
    let opts = reach_options(cfg, num.dt()?, &sys)?;
    let sol = propagate_time(
        &sys.field,
        &sys.omega,
        &r0,
        num.phi0.unwrap_or(0.0),
        t0,
        t0 + num.horizon()?,
        &opts,
    )?;
    out.write_with("reach.csv", |b| reach::io::write_csv(&sol, b))?;
    let gap = sol.max_consecutive_gap()?;
    let last = sol.last();
    let window = last.phase_window;
    let mut outcome = Outcome::new(
        format!(
            "{} sections to t = {}; final section {} points, phase window {:?}; max consecutive gap {gap:.4}",
            sol.slices.len(),
            last.param,
            last.set.len(),
            window
        ),
        json!({
            "sections": sol.slices.len(),
            "final_param": last.param,
            "final_points": last.set.len(),
            "final_phase_window": window,
            "max_consecutive_gap": gap,
        }),
    );
    max_gap_check(cfg, &mut outcome, gap, "consecutive section gap");
    Ok(outcome)
}

fn run_poincare(cfg: &RunConfig, out: &mut Output) -> Result<Outcome> {
    let sys = system(cfg)?;
    let num = &cfg.numerics;
    let r0 = cfg.initial_set(num.h()?)?;
    let field_phi = phase_field(&sys.field, &sys.omega)?;
    let opts = reach_options(cfg, num.dphi()?, &sys)?;
    let phi0 = num.phi0.unwrap_or(0.0);
    let image = poincare_map(&field_phi, &r0, phi0, &opts)?;
    out.write_with("poincare.csv", |b| sets::io::write_csv(&image, b))?;
    let moved = hausdorff(&r0, &image)?;
    let mut outcome = Outcome::new(
        format!(
            "return map from phi = {phi0}: {} points -> {} points, d_H(R0, P(R0)) = {moved:.4}",
            r0.len(),
            image.len()
        ),
        json!({
            "phi0": phi0,
            "initial_points": r0.len(),
            "image_points": image.len(),
            "hausdorff_to_initial": moved,
        }),
    );
    max_gap_check(cfg, &mut outcome, moved, "d_H(R0, P(R0))");
    Ok(outcome)
}

fn periodic(cfg: &RunConfig, sys: &System) -> Result<(RfSolution, Vec<f64>, CompactSet)> {
    let num = &cfg.numerics;
    let h = num.h()?;
    let r0 = cfg.initial_set(h)?;
    let field_phi = phase_field(&sys.field, &sys.omega)?;
    let opts = reach_options(cfg, num.dphi()?, sys)?;
    let pf = periodic_funnel(
        &field_phi,
        &r0,
        num.phi0.unwrap_or(0.0),
        &opts,
        num.tol.unwrap_or(4.0 * h),
        num.max_iter.unwrap_or(DEFAULT_MAX_ITER),
    )?;
    Ok((pf.funnel, pf.gaps, pf.section))
}

fn run_periodic(cfg: &RunConfig, out: &mut Output) -> Result<Outcome> {
    let sys = system(cfg)?;
    let (funnel, gaps, section) = periodic(cfg, &sys)?;
    out.write_with("periodic_funnel.csv", |b| reach::io::write_csv(&funnel, b))?;
    out.write_with("periodic_section.csv", |b| sets::io::write_csv(&section, b))?;
    let last = *gaps.last().unwrap_or(&0.0);
    let mut outcome = Outcome::new(
        format!(
            "periodic funnel after {} return maps, last gap {last:.4}, section of {} points",
            gaps.len(),
            section.len()
        ),
        json!({ "gaps": gaps, "section_points": section.len(), "sections": funnel.slices.len() }),
    );
    max_gap_check(cfg, &mut outcome, last, "last return-map gap");
    Ok(outcome)
}

fn certificate_outcome(
    report: &contraction::CertificateReport,
    name: &str,
    out: &mut Output,
) -> Result<Outcome> {
    out.write(name, report.to_json()?.as_bytes())?;
    let mut outcome = Outcome::new(
        format!(
            "{:?}: worst margin {:.3e} over {} samples ({} excluded, {} sandwich violations)",
            report.status,
            report.worst_margin,
            report.samples_used,
            report.excluded_samples,
            report.sandwich_violations
        ),
        serde_json::to_value(report)?,
    );
    outcome.certificate_code = report.exit_code();
    Ok(outcome)
}

fn run_certify(cfg: &RunConfig, out: &mut Output) -> Result<Outcome> {
    let sys = system(cfg)?;
    let num = &cfg.numerics;
    let (cand, sampler, mode) = cfg.candidate()?.build()?;
    let field_phi = phase_field(&sys.field, &sys.omega)?;
    let lie = LieOptions::new(num.fd_step.unwrap_or(DEFAULT_FD_STEP)).mode(mode);
    let report = certify_contraction(
        &cand,
        &field_phi,
        &sampler,
        num.samples.unwrap_or(DEFAULT_SAMPLES),
        num.seed(),
        num.slack.unwrap_or(DEFAULT_SLACK),
        &lie,
    )?;
    certificate_outcome(&report, "certificate.json", out)
}

fn run_certify_funnel(cfg: &RunConfig, out: &mut Output) -> Result<Outcome> {
    let sys = system(cfg)?;
    let num = &cfg.numerics;
    let (cand, sampler, mode) = cfg.candidate()?.build()?;
    let (sol, gaps, _) = periodic(cfg, &sys)?;
    out.write_with("periodic_funnel.csv", |b| reach::io::write_csv(&sol, b))?;
    let funnel = contraction::Funnel::from_solution(&sol, true)?;
    let field_phi = phase_field(&sys.field, &sys.omega)?;
    let mut opts = FunnelCertOptions::new(num.samples.unwrap_or(DEFAULT_SAMPLES), num.seed());
    opts.slack = num.slack.unwrap_or(DEFAULT_SLACK);
    opts.lie = LieOptions::new(num.fd_step.unwrap_or(DEFAULT_FD_STEP)).mode(mode);
    let report = certify_funnel(&cand, &field_phi, &funnel, &sampler, &opts)?;
    let mut outcome = certificate_outcome(&report, "certificate.json", out)?;
    outcome.details["funnel_gaps"] = json!(gaps);
    Ok(outcome)
}

fn run_scaling(kind: CommandKind, cfg: &RunConfig, out: &mut Output) -> Result<Outcome> {
    let sc = cfg.system()?;
    let num = &cfg.numerics;
    let h = num.h()?;
    let r0 = cfg.initial_set(h)?;
    let mut opts = ScalingOptions::new(num.l.unwrap_or(1.0), num.dt()?, h).seed(num.seed());
    if let Some(n) = num.n_phi {
        opts = opts.n_phi(n);
    }
    if let Some(k) = num.horizon_multiplier {
        opts = opts.horizon_multiplier(k);
    } else if kind != CommandKind::Theorem1 {
        opts = opts.horizon_multiplier(4.0);
    }
    let target = || {
        cfg.target
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("config needs a `target` section".into()))
    };
    let report = match kind {
        CommandKind::Theorem1 => run_theorem1(sc, &num.eps, &r0, &opts)?,
        CommandKind::Theorem2 => {
            let point = target()?.points()?;
            if point.len() != 1 {
                return Err(Error::InvalidInput(
                    "theorem2 target must be a single critical point".into(),
                ));
            }
            run_theorem2(sc, &num.eps, &r0, &point[0], &opts)?
        }
        _ => run_theorem3(sc, &num.eps, &r0, &target()?.build(h)?, &opts)?,
    };
    out.write_with("scaling.csv", |b| report.write_csv(b))?;
    out.write("scaling.json", report.to_json()?.as_bytes())?;
    let mut outcome = Outcome::new(scaling_summary(&report), serde_json::to_value(&report)?);
    let a = &cfg.assertions;
    let ratio_hi = report.ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ratio_lo = report.ratios.iter().copied().fold(f64::INFINITY, f64::min);
    if let Some(max) = a.ratio_max {
        outcome.checks.push(Check::new(
            "ratio_max",
            ratio_hi <= max,
            format!("largest ratio {ratio_hi} vs limit {max}"),
        ));
    }
    if let Some(min) = a.ratio_min {
        outcome.checks.push(Check::new(
            "ratio_min",
            ratio_lo >= min,
            format!("smallest ratio {ratio_lo} vs limit {min}"),
        ));
    }
    if a.c_within_bound {
        let passed = report.c_bound.is_some_and(|b| report.fitted_c <= b);
        outcome.checks.push(Check::new(
            "c_within_bound",
            passed,
            format!("fitted c {} vs bound {:?}", report.fitted_c, report.c_bound),
        ));
    }
    if let (Some(max), Some(d)) = (a.max_distance, &report.target_distance) {
        let worst = d.iter().copied().fold(0.0, f64::max);
        outcome.checks.push(Check::new(
            "max_distance",
            worst <= max,
            format!("target distance {worst} vs limit {max}"),
        ));
    }
    Ok(outcome)
}

fn scaling_summary(r: &ScalingReport) -> String {
    let ratios: Vec<String> = r.ratios.iter().map(|v| format!("{v:.3}")).collect();
    let bound = r.c_bound.map_or("n/a".into(), |b| format!("{b:.3}"));
    format!(
        "max gap {:?} for eps {:?}; ratios [{}]; fitted c {:.4}, bound {bound}",
        r.max_dh
            .iter()
            .map(|v| (v * 1e4).round() / 1e4)
            .collect::<Vec<_>>(),
        r.eps_values,
        ratios.join(", "),
        r.fitted_c
    )
}

fn load_funnel(cfg: &RunConfig, src: &FunnelSource) -> Result<RfSolution> {
    let num = &cfg.numerics;
    match (&src.file, &src.initial_set) {
        (Some(path), None) => {
            let f = File::open(path)
                .map_err(|e| Error::InvalidInput(format!("cannot open {}: {e}", path.display())))?;
            reach::io::read_csv(f, ParamKind::Time, num.h()?)
        }
        (None, Some(set)) => {
            let sys = system(cfg)?;
            let r0 = set.build(num.h()?)?;
            let t0 = num.t0.unwrap_or(0.0);
            propagate_time(
                &sys.field,
                &sys.omega,
                &r0,
                src.phi0.or(num.phi0).unwrap_or(0.0),
                t0,
                t0 + num.horizon()?,
                &reach_options(cfg, num.dt()?, &sys)?,
            )
        }
        _ => Err(Error::InvalidInput(
            "a graph funnel needs exactly one of `file` or `initial_set`".into(),
        )),
    }
}

fn run_graph(cfg: &RunConfig, out: &mut Output) -> Result<Outcome> {
    let g = cfg
        .graph
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("config needs a `graph` section".into()))?;
    let s1 = load_funnel(cfg, &g.first)?;
    let s2 = load_funnel(cfg, &g.second)?;
    let search = match &g.search {
        Some(s) => TranslationSearch::ConstantGrid {
            lo: s.lo,
            hi: s.hi,
            step: s.step,
        },
        None => TranslationSearch::None,
    };
    let d = graph_distance(&s1, &s2, g.eps_g, &search, g.scale.unwrap_or(1.0))?;
    let details = json!({ "distance": d.distance, "shift": d.shift, "eps_g": g.eps_g });
    out.write("graph_distance.json", serde_json::to_string_pretty(&details)?.as_bytes())?;
    let mut outcome = Outcome::new(
        format!("graph distance {:.4} at shift {}", d.distance, d.shift),
        details,
    );
    if let Some(max) = cfg.assertions.max_distance {
        outcome.checks.push(Check::new(
            "max_distance",
            d.distance <= max,
            format!("distance {} vs limit {max}", d.distance),
        ));
    }
    Ok(outcome)
}

fn run_walker(cfg: &RunConfig, out: &mut Output) -> Result<Outcome> {
    let run = cfg.walker.clone().unwrap_or_default();
    let num = &cfg.numerics;
    let mut w = toy_walker(&run.model)?;
    if let Some(path) = &run.funnel_file {
        let f = File::open(path)
            .map_err(|e| Error::InvalidInput(format!("cannot open {}: {e}", path.display())))?;
        let sol = reach::io::read_csv(f, ParamKind::Phase, w.funnel.resolution())?;
        let slices = sol.slices.into_iter().map(|s| (s.param, s.set)).collect();
        let fc = &run.model.funnel;
        w.funnel = phasefunnel::hybrid::Funnel::new(slices, 0.0, TAU, fc.eps_phi, fc.eps_f)?;
    }
    let shipped = RfSolution {
        kind: ParamKind::Phase,
        slices: w
            .funnel
            .sections()
            .map(|(phi, set)| CrossSection {
                param: phi,
                set: set.clone(),
                phase_window: None,
            })
            .collect(),
        step: TAU / (run.model.funnel.n_slices.max(2) - 1) as f64,
        resolution: w.funnel.resolution(),
        seed: 0,
        terminal: None,
    };
    out.write_with("walker_funnel.csv", |b| reach::io::write_csv(&shipped, b))?;

    let name = run.controller.as_deref().unwrap_or("path-integral");
    let ctl = w.controller(name)?;
    let steps = num.steps.unwrap_or(10);
    let n_runs = num.samples.unwrap_or(1);
    let dt = num.dt.unwrap_or(1e-3);
    let seed = num.seed();
    let horizon = num.horizon.unwrap_or(4.0 * steps as f64 + 10.0);
    let h = w.funnel.resolution();
    let jump = w.jump_consistency(&JumpGrid {
        seed,
        ..JumpGrid::default()
    })?;
    info!("jump consistency margin {}", jump.margin);
    let mut worst_excess: f64 = 0.0;
    let mut completed = 0;
    let mut runs = Vec::new();
    for (k, x0) in w.initial_states(n_runs, seed).iter().enumerate() {
        let opts = SimOptions::new(horizon, dt, seed.wrapping_add(k as u64)).max_jumps(steps);
        let arc = simulate_hybrid(&w.system, &ctl, x0, &opts)?;
        let mut excess: f64 = 0.0;
        for (_, s) in arc.samples() {
            excess = excess.max(w.funnel.distance(s.phi, &s.x)?);
        }
        worst_excess = worst_excess.max(excess);
        completed += usize::from(arc.jumps() == steps);
        if k == 0 {
            out.write_with("walker_arc.csv", |b| arc.write_csv(b))?;
        }
        runs.push(json!({
            "x0": x0,
            "jumps": arc.jumps(),
            "final_t": arc.last().t,
            "funnel_excess": excess,
            "impact_velocities": arc.events.iter().map(|e| e.x_minus[1]).collect::<Vec<_>>(),
        }));
    }
    let details = json!({
        "controller": name,
        "steps": steps,
        "dt": dt,
        "resolution": h,
        "worst_funnel_excess": worst_excess,
        "completed_runs": completed,
        "jump_consistency": jump,
        "runs": runs,
    });
    let mut outcome = Outcome::new(
        format!(
            "{name}: {completed}/{n_runs} runs completed {steps} steps, worst funnel excess {:.3}h, jump margin {:.4} ({})",
            worst_excess / h,
            jump.margin,
            if jump.consistent { "consistent" } else { "inconsistent" }
        ),
        details,
    );
    let a = &cfg.assertions;
    if let Some(max) = a.max_funnel_excess {
        outcome.checks.push(Check::new(
            "max_funnel_excess",
            worst_excess <= max * h && completed == n_runs,
            format!("excess {worst_excess} vs {max}h, {completed}/{n_runs} runs completed"),
        ));
    }
    if a.jump_consistent {
        outcome.checks.push(Check::new(
            "jump_consistent",
            jump.consistent,
            format!("margin {}", jump.margin),
        ));
    }
    Ok(outcome)
}

/// Names of the built-in systems, one per line.
pub fn list_systems() -> Value {
    json!(systems::available()
        .into_iter()
        .map(|(n, s)| json!({ "name": n, "summary": s }))
        .collect::<Vec<_>>())
}
