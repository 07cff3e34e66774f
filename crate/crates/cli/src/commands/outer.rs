//! `hot outer`: transport between the ensembles and its structural checks.

use hot_core::inner_ot::SUPPORT_THRESHOLD;
use hot_core::io::{cost_matrix_csv, triples_csv};
use hot_core::manifold::fourier_family;
use hot_core::outer_ot::{
    extract_outer_map_formula, h_identity_checks, marginal_violation, solve_outer,
    stationarity_check_with, verify_monge_structure, CostSpec,
};
use hot_core::Measure;
use serde_json::{json, Value};

use super::{to_value, Artifacts};
use crate::config::{LoadedConfig, Setup};
use crate::report::Recorder;
use crate::CliError;

pub(super) fn run(
    loaded: &LoadedConfig,
    setup: &Setup,
    rec: &mut Recorder,
) -> Result<(Value, Artifacts), CliError> {
    let cfg = &loaded.config;
    let tol = &cfg.tolerances;
    let m = &setup.manifold;
    let (src, dst, spec) = (&setup.source, &setup.target, &setup.cost);

    let plan = solve_outer(src, dst, spec)?;
    rec.at_most("duality_gap", plan.duality_gap().abs(), tol.duality_gap);
    rec.at_most("feasibility", plan.feasibility_violation(), tol.feasibility);
    rec.at_most(
        "support_slackness",
        plan.support_slackness(),
        tol.support_slackness,
    );
    rec.at_most("marginals", marginal_violation(&plan), tol.feasibility);
    rec.phase("solve");

    let map = verify_monge_structure(&plan)?;
    if cfg.outer.require_monge {
        let uncertified = map.certified.iter().filter(|c| !**c).count();
        rec.at_most("uncertified_rows", uncertified as f64, 0.0);
        rec.at_most(
            "unstable_assignment",
            if map.stable { 0.0 } else { 1.0 },
            0.0,
        );
    }
    rec.phase("monge");

    let stationarity_fields: Vec<_> = fourier_family(m, cfg.outer.stationarity_order)
        .into_iter()
        .filter(|f| !f.label().starts_with("const"))
        .collect();
    let probed: Vec<usize> = (0..src.len())
        .filter(|&i| map.certified[i] && src.atom(i).is_strictly_positive())
        .collect();
    let mut stationarity = Vec::with_capacity(probed.len());
    for &i in &probed {
        let r = stationarity_check_with(
            src.atom(i),
            &plan,
            dst,
            spec,
            &stationarity_fields,
            cfg.solver.stationarity_step,
        )?;
        rec.at_most(
            format!("atom{i}.stationarity_relative"),
            r.max_alpha_prime / (1.0 + r.u_value.abs()),
            tol.stationarity,
        );
        stationarity.push(json!({"atom": i, "report": to_value(&r)}));
    }
    rec.phase("stationarity");

    let mut map_formula = Vec::new();
    if *spec == CostSpec::SquaredW2 {
        let family = fourier_family(m, cfg.outer.map_order);
        for &i in &probed {
            let p = extract_outer_map_formula(src.atom(i), &plan, dst, spec, &family)?;
            rec.at_most(
                format!("atom{i}.map_formula_w2_error"),
                p.w2_error,
                tol.map_formula_factor * m.diameter(),
            );
            map_formula.push(json!({"atom": i, "target": p.target, "w2_error": p.w2_error}));
        }
    }
    rec.phase("map_formula");

    let h_identities = if spec.h().is_some() {
        let samples: Vec<(Measure, Measure)> = src
            .atoms()
            .iter()
            .zip(dst.atoms())
            .filter(|(a, b)| a.is_strictly_positive() && b.is_strictly_positive())
            .map(|(a, b)| (a.clone(), b.clone()))
            .collect();
        let r = h_identity_checks(spec, &samples)?;
        rec.at_most("h.chain_rule", r.chain_rule_residual, tol.chain_rule);
        rec.at_most(
            "h.monotone_and_injective",
            if r.h_prime_increasing && r.injective {
                0.0
            } else {
                1.0
            },
            0.0,
        );
        if !samples.is_empty() {
            rec.at_most(
                "h.norm_identity",
                r.max_norm_identity_residual,
                tol.norm_identity_factor * m.grid_spacing() * m.diameter(),
            );
        }
        Some(r)
    } else {
        None
    };
    rec.phase("h_identities");

    let rows: Vec<Vec<f64>> = (0..plan.rows).map(|i| plan.row(i).to_vec()).collect();
    let results = json!({
        "cost": plan.cost,
        "plan": rows,
        "U": plan.u,
        "V": plan.v,
        "assignment": map.assignment,
        "certified_flags": map.certified,
        "stable": map.stable,
        "perturbed_assignment": map.perturbed_assignment,
        "cost_matrix": plan.cost_matrix,
        "stationarity_reports": stationarity,
        "map_formula": map_formula,
        "h_identities": to_value(&h_identities),
    });
    let plan_csv = triples_csv(
        ["source", "target", "mass"],
        (0..plan.rows)
            .flat_map(|i| (0..plan.cols).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, plan.get(i, j)))
            .filter(|t| t.2 > SUPPORT_THRESHOLD),
    )?;
    let artifacts = vec![
        (
            "cost_matrix.csv".to_string(),
            cost_matrix_csv(&plan.cost_matrix, plan.rows)?,
        ),
        ("outer_plan.csv".to_string(), plan_csv),
    ];
    Ok((results, artifacts))
}
