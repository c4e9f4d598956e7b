//! Study runners. Each one computes, writes its artifacts, and returns the
//! list of acceptance-threshold failures for `--check`.

use rayon::prelude::*;
use slitlab_core::born::{born_fixed_point_check, born_init, born_step};
use slitlab_core::propagate::{evolve, EvolutionOutput, EvolutionPlan};
use slitlab_core::reference::intensity_analytic;
use slitlab_core::regularize::{
    b_eps_sup_error, estimate_asymptotic_order, sample_initial, sample_potential,
};
use slitlab_core::verify::{
    approx_chain_compare, decay_study, intensity_simulated, normalized_correlation, DecaySetup,
    DiffractionSetup,
};

use crate::config::{ExperimentConfig, Study};
use crate::error::CliError;
use crate::output::{float_array, opt_value, RunDir};

/// Margin from the slit edges for the indicator convergence measure.
pub const B_MARGIN: f64 = 0.1;

const TRACE_SAMPLES: usize = 100;

#[derive(Debug, Default)]
pub struct StudyOutcome {
    pub summary: Vec<String>,
    pub failures: Vec<String>,
}

pub fn run_study(
    study: Study,
    cfg: &ExperimentConfig,
    dir: &RunDir,
) -> Result<StudyOutcome, CliError> {
    match study {
        Study::Simulate => simulate(cfg, dir),
        Study::Sweep => sweep(cfg, dir),
        Study::Born => born(cfg, dir),
        Study::Compare => compare(cfg, dir),
        Study::Decay => decay(cfg, dir),
    }
}

fn barrier_run(
    cfg: &ExperimentConfig,
    eps: f64,
    steps: usize,
) -> Result<EvolutionOutput, CliError> {
    let g = sample_initial(&cfg.spec, eps, cfg.raw.physics.p0, &cfg.grid)?;
    let v = sample_potential(&cfg.spec, &cfg.slits, eps, &cfg.grid)?;
    let mut plan = EvolutionPlan::new(cfg.solver().dt, steps)
        .with_potential(v)
        .with_traces(steps.div_ceil(TRACE_SAMPLES).max(1))
        .with_monitor_width(cfg.solver().monitor_width.expect("defaulted"));
    if let Some(a) = cfg.absorber() {
        plan = plan.with_absorber(a);
    }
    Ok(evolve(&g, &plan)?)
}

fn run_checks(cfg: &ExperimentConfig, out: &EvolutionOutput, failures: &mut Vec<String>) {
    let s = cfg.solver();
    let d = &out.diagnostics;
    let drift_max = s.norm_drift_threshold.expect("defaulted");
    if d.unitary && d.relative_norm_drift() >= drift_max {
        failures.push(format!(
            "norm drift {:.3e} ≥ {drift_max:.1e}",
            d.relative_norm_drift()
        ));
    }
    let bmax = s.boundary_threshold.expect("defaulted");
    if d.max_boundary_mass() > bmax {
        failures.push(format!(
            "boundary mass {:.3e} > {bmax:.1e}; run is invalid",
            d.max_boundary_mass()
        ));
    }
}

fn diagnostics_table(out: &EvolutionOutput) -> toml::Table {
    let d = &out.diagnostics;
    let mut t = toml::Table::new();
    t.insert("dt".into(), d.dt.into());
    t.insert("steps".into(), (d.n_steps as i64).into());
    t.insert("relative_norm_drift".into(), d.relative_norm_drift().into());
    t.insert(
        "relative_energy_drift".into(),
        d.relative_energy_drift().into(),
    );
    t.insert("max_boundary_mass".into(), d.max_boundary_mass().into());
    t.insert("unitary".into(), d.unitary.into());
    t
}

fn write_traces(dir: &RunDir, out: &EvolutionOutput) -> Result<(), CliError> {
    let d = &out.diagnostics;
    dir.write_csv(
        "traces.csv",
        &["t", "energy", "boundary_mass"],
        d.energy_trace
            .iter()
            .zip(&d.boundary_trace)
            .map(|(e, b)| vec![e.0, e.1, b.1]),
    )
}

fn simulate(cfg: &ExperimentConfig, dir: &RunDir) -> Result<StudyOutcome, CliError> {
    let out = barrier_run(cfg, cfg.eps, cfg.steps(Study::Simulate))?;
    let ys = cfg.grid.ys();
    let profile = intensity_simulated(&out.field, cfg.raw.physics.x1)?;
    dir.write_csv(
        "intensity.csv",
        &["y", "intensity"],
        ys.iter().zip(&profile).map(|(&y, &p)| vec![y, p]),
    )?;
    write_traces(dir, &out)?;
    if cfg.dump_fields() {
        dir.dump_field("final.slw1", &out.field)?;
    }
    let mut failures = Vec::new();
    run_checks(cfg, &out, &mut failures);
    let mut results = diagnostics_table(&out);
    results.insert("eps".into(), cfg.eps.into());
    results.insert("valid".into(), failures.is_empty().into());
    dir.write_metadata(&cfg.raw.to_toml(), &results)?;
    Ok(StudyOutcome {
        summary: vec![
            format!("ε = {:e}, {} steps", cfg.eps, out.diagnostics.n_steps),
            format!("norm drift {:.3e}", out.diagnostics.relative_norm_drift()),
            format!(
                "max boundary mass {:.3e}",
                out.diagnostics.max_boundary_mass()
            ),
        ],
        failures,
    })
}

struct SweepRow {
    eps: f64,
    v_sup: f64,
    b_error: f64,
    drift: f64,
    boundary: f64,
    correlation: Option<f64>,
}

fn sweep(cfg: &ExperimentConfig, dir: &RunDir) -> Result<StudyOutcome, CliError> {
    let steps = cfg.steps(Study::Sweep);
    let scenario = cfg.scenario(cfg.end_time(Study::Sweep))?;
    let analytic = intensity_analytic(&scenario, &cfg.grid.ys())?;
    let rows = cfg
        .schedule
        .par_iter()
        .map(|&eps| -> Result<SweepRow, CliError> {
            let v = sample_potential(&cfg.spec, &cfg.slits, eps, &cfg.grid)?;
            let b_error = b_eps_sup_error(&cfg.spec, &cfg.slits, eps, &cfg.grid, B_MARGIN)?;
            let out = barrier_run(cfg, eps, steps)?;
            let profile = intensity_simulated(&out.field, cfg.raw.physics.x1)?;
            Ok(SweepRow {
                eps,
                v_sup: v.max(),
                b_error,
                drift: out.diagnostics.relative_norm_drift(),
                boundary: out.diagnostics.max_boundary_mass(),
                correlation: normalized_correlation(&profile, &analytic),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    dir.write_csv(
        "sweep.csv",
        &[
            "eps",
            "v_sup",
            "b_error",
            "norm_drift",
            "max_boundary_mass",
            "correlation",
        ],
        rows.iter().map(|r| {
            vec![
                r.eps,
                r.v_sup,
                r.b_error,
                r.drift,
                r.boundary,
                r.correlation.unwrap_or(f64::NAN),
            ]
        }),
    )?;

    let mut results = toml::Table::new();
    let v_samples: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.v_sup > 0.0)
        .map(|r| (r.eps, r.v_sup))
        .collect();
    let mut summary = Vec::new();
    if v_samples.len() >= 4 {
        let est = estimate_asymptotic_order(&v_samples)?;
        results.insert("v_sup_exponent".into(), est.exponent.into());
        results.insert("v_sup_fit_residual".into(), est.max_residual.into());
        summary.push(format!("‖V_ε‖∞ ~ ε^(−{:.4})", est.exponent));
    }
    let b: Vec<f64> = rows.iter().map(|r| r.b_error).collect();
    let b_monotone = b.windows(2).all(|w| w[1] <= w[0]);
    results.insert("b_error".into(), float_array(&b));
    results.insert("b_error_non_increasing".into(), b_monotone.into());
    summary.push(format!(
        "max |b_ε − 1_S| at smallest ε: {:.3e} (non-increasing: {b_monotone})",
        b.last().copied().unwrap_or(0.0)
    ));

    let mut failures = Vec::new();
    if !b_monotone {
        failures.push("b_ε error is not non-increasing along the schedule".into());
    }
    let bmax = cfg.solver().boundary_threshold.expect("defaulted");
    for r in &rows {
        if r.boundary > bmax {
            failures.push(format!(
                "ε = {:e}: boundary mass {:.3e} > {bmax:.1e}",
                r.eps, r.boundary
            ));
        }
    }
    dir.write_metadata(&cfg.raw.to_toml(), &results)?;
    Ok(StudyOutcome { summary, failures })
}

fn born(cfg: &ExperimentConfig, dir: &RunDir) -> Result<StudyOutcome, CliError> {
    let s = cfg.solver();
    let steps = cfg.steps(Study::Born);
    let stride = s.stride.expect("defaulted");
    let lambda = s.born_lambda.expect("defaulted");
    let g = sample_initial(&cfg.spec, cfg.eps, cfg.raw.physics.p0, &cfg.grid)?;
    let v = sample_potential(&cfg.spec, &cfg.slits, cfg.eps, &cfg.grid)?.scaled(lambda);
    let full = evolve(
        &g,
        &EvolutionPlan::new(s.dt, steps)
            .with_potential(v.clone())
            .recording(stride),
    )?;
    let slab = full.slab.as_ref().expect("recording plan");
    let fixed_point = born_fixed_point_check(slab, &v)?;
    let mut state = born_init(&g, &EvolutionPlan::new(s.dt, steps).recording(stride))?
        .with_reference(full.field)?;
    for _ in 0..s.born_iterations.expect("defaulted") {
        state = born_step(state, &v)?;
    }
    let history = state.history();
    dir.write_csv(
        "born.csv",
        &["n", "residual"],
        history.iter().map(|r| vec![r.n as f64, r.residual]),
    )?;
    // Timings live apart so that born.csv stays reproducible.
    dir.write_csv(
        "timing.csv",
        &["n", "wallclock_s"],
        history.iter().map(|r| vec![r.n as f64, r.wallclock_s]),
    )?;
    let residuals = state.residual_history();
    let decreasing = residuals.windows(2).all(|w| w[1] < w[0]);
    let divergent = state.outside_contraction_regime();
    let mut results = toml::Table::new();
    results.insert("lambda".into(), lambda.into());
    results.insert("fixed_point_defect".into(), fixed_point.into());
    results.insert("residuals".into(), float_array(&residuals));
    results.insert("strictly_decreasing".into(), decreasing.into());
    results.insert("outside_contraction_regime".into(), divergent.into());
    dir.write_metadata(&cfg.raw.to_toml(), &results)?;

    let mut failures = Vec::new();
    if divergent {
        failures.push("residuals grow: outside the contraction regime".into());
    } else if !decreasing {
        failures.push("Born residuals are not strictly decreasing".into());
    }
    Ok(StudyOutcome {
        summary: vec![
            format!("fixed-point defect {fixed_point:.3e}"),
            format!("residuals {}", fmt_list(&residuals)),
        ],
        failures,
    })
}

fn compare(cfg: &ExperimentConfig, dir: &RunDir) -> Result<StudyOutcome, CliError> {
    let scenario = cfg.scenario(cfg.end_time(Study::Compare))?;
    let setup = DiffractionSetup {
        grid: cfg.grid.clone(),
        spec: cfg.spec.clone(),
        eps: cfg.eps,
        p0: cfg.raw.physics.p0,
        scenario: scenario.clone(),
        dt: cfg.solver().dt,
        absorber: cfg.absorber(),
    };
    let rec = approx_chain_compare(&setup)?;
    dir.write_csv(
        "compare.csv",
        &["y", "simulated", "analytic", "scattered", "filtered"],
        (0..rec.ys.len()).map(|i| {
            vec![
                rec.ys[i],
                rec.simulated[i],
                rec.analytic[i],
                rec.scattered[i],
                rec.filtered[i],
            ]
        }),
    )?;
    let mut results = toml::Table::new();
    results.insert("correlation".into(), opt_value(rec.correlation));
    results.insert("profile_distance".into(), rec.distance.into());
    results.insert("chain_correlation".into(), opt_value(rec.chain_correlation));
    results.insert(
        "simulated_fringe_spacing".into(),
        opt_value(rec.simulated_fringe_spacing),
    );
    results.insert(
        "predicted_fringe_spacing".into(),
        opt_value(rec.predicted_fringe_spacing),
    );
    results.insert(
        "chirp_phase_bound".into(),
        scenario.chirp_phase_bound().into(),
    );
    results.insert(
        "max_boundary_mass".into(),
        rec.diagnostics.max_boundary_mass().into(),
    );
    dir.write_metadata(&cfg.raw.to_toml(), &results)?;

    let e = cfg.experiment();
    let cmin = e.correlation_min.expect("defaulted");
    let tol = e.fringe_tolerance.expect("defaulted");
    let mut failures = Vec::new();
    match rec.correlation {
        Some(c) if c >= cmin => {}
        Some(c) => failures.push(format!("correlation {c:.4} < {cmin}")),
        None => failures.push("correlation undefined (constant profile)".into()),
    }
    if let Some(pred) = rec.predicted_fringe_spacing {
        match rec.simulated_fringe_spacing {
            Some(sim) if ((sim - pred) / pred).abs() <= tol => {}
            Some(sim) => failures.push(format!(
                "fringe spacing {sim:.4} differs from {pred:.4} by more than {:.0}%",
                100.0 * tol
            )),
            None => failures.push("no fringe minima found".into()),
        }
    }
    let bmax = cfg.solver().boundary_threshold.expect("defaulted");
    if rec.diagnostics.max_boundary_mass() > bmax {
        failures.push(format!(
            "boundary mass {:.3e} > {bmax:.1e}; run is invalid",
            rec.diagnostics.max_boundary_mass()
        ));
    }
    let mut summary = vec![format!(
        "correlation {}",
        rec.correlation
            .map_or("undefined".into(), |c| format!("{c:.4}"))
    )];
    if let (Some(p), Some(s)) = (rec.predicted_fringe_spacing, rec.simulated_fringe_spacing) {
        summary.push(format!("fringe spacing {s:.4} (predicted {p:.4})"));
    }
    Ok(StudyOutcome { summary, failures })
}

fn decay(cfg: &ExperimentConfig, dir: &RunDir) -> Result<StudyOutcome, CliError> {
    let s = cfg.solver();
    let e = cfg.experiment();
    let setup = DecaySetup {
        grid: cfg.grid.clone(),
        spec: cfg.spec.clone(),
        slits: cfg.slits.clone(),
        p0: cfg.raw.physics.p0,
        t_end: e.t_end.expect("defaulted"),
        phase_budget: s.phase_budget.expect("defaulted"),
        dt_per_c2: s.dt_per_c2.expect("defaulted"),
        dt_max: s.dt,
    };
    let report = decay_study(&setup, &cfg.schedule, &cfg.test_functions)?;
    let mut rows = Vec::new();
    for (j, recs) in report.records.iter().enumerate() {
        for (k, r) in recs.iter().enumerate() {
            rows.push(vec![
                r.eps,
                r.predictor,
                j as f64,
                r.defect,
                r.bound,
                r.strip_h1,
                report.dts[k],
                report.steps[k] as f64,
            ]);
        }
    }
    dir.write_csv(
        "decay.csv",
        &[
            "eps",
            "predictor",
            "test_function",
            "defect",
            "bound",
            "strip_h1",
            "dt",
            "steps",
        ],
        rows,
    )?;
    let ratio = report.max_bound_ratio();
    let mut results = toml::Table::new();
    results.insert("slopes".into(), float_array(&report.slopes));
    results.insert("max_bound_ratio".into(), ratio.into());
    results.insert(
        "max_absorbed_constant".into(),
        report.max_absorbed_constant().into(),
    );
    results.insert(
        "hypothesis_satisfied".into(),
        report.hypothesis_satisfied.into(),
    );
    results.insert(
        "status".into(),
        if report.hypothesis_satisfied {
            "ok"
        } else {
            "hypothesis violated"
        }
        .into(),
    );
    dir.write_metadata(&cfg.raw.to_toml(), &results)?;

    let smin = e.slope_min.expect("defaulted");
    let mut failures = Vec::new();
    if !report.hypothesis_satisfied {
        failures.push("hypothesis violated: √c_ε·H_ε does not decrease along the schedule".into());
    } else {
        for (j, sl) in report.slopes.iter().enumerate() {
            if *sl < smin {
                failures.push(format!("test function {j}: slope {sl:.3} < {smin}"));
            }
        }
        if ratio > 1.0 {
            failures.push(format!("defect exceeds the bound (ratio {ratio:.3})"));
        }
    }
    Ok(StudyOutcome {
        summary: vec![
            format!("slopes {}", fmt_list(&report.slopes)),
            format!("max defect/bound {ratio:.3e}"),
            format!(
                "hypothesis {}",
                if report.hypothesis_satisfied {
                    "satisfied"
                } else {
                    "violated"
                }
            ),
        ],
        failures,
    })
}

fn fmt_list(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4e}")).collect();
    format!("[{}]", parts.join(", "))
}
