//! `hot inner`: exact transport between paired atoms.

use hot_core::inner_ot::{
    norm_identity_check, solve_entropic_with, solve_exact_with, verify_duality, DualityReport,
    EntropicOptions, ExactOptions, NormIdentityReport,
};
use hot_core::io::plan_csv;
use serde::Serialize;
use serde_json::{json, Value};

use super::{to_value, Artifacts};
use crate::config::{LoadedConfig, Setup};
use crate::report::{Recorder, Series};
use crate::CliError;

#[derive(Serialize)]
struct PairResult {
    pair: usize,
    cost: f64,
    w2: f64,
    support_size: usize,
    mean_row_entropy: f64,
    duality: DualityReport,
    norm_identity: NormIdentityReport,
}

pub(super) fn run(
    loaded: &LoadedConfig,
    setup: &Setup,
    rec: &mut Recorder,
) -> Result<(Value, Artifacts), CliError> {
    let cfg = &loaded.config;
    let tol = &cfg.tolerances;
    let m = &setup.manifold;
    let opts = ExactOptions {
        perturbation_seed: cfg.solver.perturbation_seed,
    };
    let norm_bound = tol.norm_identity_factor * m.grid_spacing() * m.diameter();
    let pairs = setup.source.len().min(setup.target.len());
    let mut results = Vec::with_capacity(pairs);
    let mut artifacts = Vec::with_capacity(pairs);
    for k in 0..pairs {
        let (mu, nu) = (setup.source.atom(k), setup.target.atom(k));
        let (plan, pot) = solve_exact_with(mu, nu, &opts)?;
        let duality = verify_duality(&plan, &pot, m)?;
        let norm_identity = norm_identity_check(mu, nu)?;
        rec.at_most(
            format!("pair{k}.duality_gap"),
            duality.gap.abs(),
            tol.duality_gap,
        );
        rec.at_most(
            format!("pair{k}.feasibility"),
            duality.feasibility_violation,
            tol.feasibility,
        );
        rec.at_most(
            format!("pair{k}.support_slackness"),
            duality.support_slackness,
            tol.support_slackness,
        );
        rec.at_most(
            format!("pair{k}.norm_identity"),
            norm_identity.residual,
            norm_bound,
        );
        artifacts.push((format!("plan_{k}.csv"), plan_csv(&plan)?));
        results.push(PairResult {
            pair: k,
            cost: plan.cost,
            w2: plan.cost.max(0.0).sqrt(),
            support_size: plan.support().count(),
            mean_row_entropy: plan.mean_row_entropy(),
            duality,
            norm_identity,
        });
    }
    rec.phase("exact");

    let entropic_opts = EntropicOptions {
        max_iterations: cfg.solver.entropic_max_iterations,
        ..EntropicOptions::default()
    };
    let mut points = Vec::with_capacity(cfg.solver.epsilon_schedule.len());
    for &eps in &cfg.solver.epsilon_schedule {
        let (plan, _) = solve_entropic_with(
            setup.source.atom(0),
            setup.target.atom(0),
            eps,
            &entropic_opts,
        )?;
        points.push([eps, plan.cost]);
    }
    rec.series.push(Series {
        name: "entropic_cost_vs_epsilon".into(),
        x_label: "epsilon".into(),
        y_label: "transport cost".into(),
        points: points.clone(),
    });
    rec.phase("entropic");

    let results = json!({
        "pairs": to_value(&results),
        "entropic_pair0": points.iter().map(|p| json!({"epsilon": p[0], "cost": p[1]})).collect::<Vec<_>>(),
        "grid_spacing": m.grid_spacing(),
        "diameter": m.diameter(),
    });
    Ok((results, artifacts))
}
