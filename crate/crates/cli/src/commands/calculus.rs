//! `hot calculus`: derivative formulas along flows.

use hot_core::calculus::{
    continuity_residual, directional_derivative, directional_derivative_fd, lipschitz_check,
    wasserstein_derivative_check_with, CylinderFunction, NodeFunction, WassersteinDerivativeReport,
};
use hot_core::inner_ot::w2_squared;
use hot_core::{ManifoldSpec, Measure};
use serde_json::{json, Value};

use super::{to_value, Artifacts};
use crate::config::{LoadedConfig, Setup};
use crate::report::{Recorder, Series};
use crate::CliError;

pub(super) fn run(
    loaded: &LoadedConfig,
    setup: &Setup,
    rec: &mut Recorder,
) -> Result<(Value, Artifacts), CliError> {
    let cfg = &loaded.config;
    let tol = &cfg.tolerances;
    let m = &setup.manifold;
    let w = loaded.field(m)?;

    let derivatives = derivative_reports(setup, &w, cfg.solver.w2_fd_step)?;
    for (k, r) in derivatives.iter().enumerate() {
        rec.at_most(
            format!("pair{k}.w2_derivative_relative"),
            r.relative_residual(),
            tol.w2_derivative,
        );
    }
    rec.phase("w2_derivative");

    let mu = setup.source.atom(0);
    let test_fns = NodeFunction::harmonics(m, cfg.calculus.test_functions)?;
    let continuity = continuity_residual(
        mu,
        &w,
        &cfg.calculus.t_grid,
        &test_fns,
        cfg.solver.cylinder_fd_step,
    )?;
    rec.at_most("continuity", continuity.max_residual, tol.continuity);
    rec.phase("continuity");

    let product = CylinderFunction::new(
        |a| a[0] * a[1],
        |a| vec![a[1], a[0]],
        NodeFunction::harmonics(m, 2)?,
        "f1*f2",
    )?;
    let formula = directional_derivative(&product, mu, &w)?;
    let fd = directional_derivative_fd(&product, mu, &w, cfg.solver.cylinder_fd_step)?;
    let contract = (formula - fd).abs() / (1.0 + formula.abs());
    rec.at_most(
        "directional_derivative_relative",
        contract,
        tol.directional_derivative,
    );
    rec.phase("directional_derivative");

    let atoms: Vec<&Measure> = setup
        .source
        .atoms()
        .iter()
        .chain(setup.target.atoms())
        .collect();
    let mut samples = Vec::new();
    for i in 0..atoms.len() {
        for j in i + 1..atoms.len() {
            samples.push((atoms[i].clone(), atoms[j].clone()));
        }
    }
    let nu0 = setup.target.atom(0);
    let lipschitz = if samples.is_empty() {
        None
    } else {
        match lipschitz_check(|x| w2_squared(x, nu0), &samples) {
            Ok(r) => Some(r),
            Err(hot_core::Error::Argument(_)) => None,
            Err(e) => return Err(e.into()),
        }
    };
    if let Some(r) = &lipschitz {
        rec.at_most(
            "lipschitz_w2_squared",
            r.estimate,
            2.0 * m.diameter() * (1.0 + tol.lipschitz_slack),
        );
    }
    rec.phase("lipschitz");

    let mut refinement = Vec::new();
    for &n in &cfg.calculus.refinement {
        let spec = match &cfg.manifold {
            ManifoldSpec::Circle { .. } => ManifoldSpec::Circle { n },
            ManifoldSpec::Torus { .. } => ManifoldSpec::Torus { n_u: n, n_v: n },
            _ => {
                return Err(CliError::Config(
                    "refinement series need a circle or torus manifold".into(),
                ))
            }
        };
        let coarse = loaded.setup_on(spec)?;
        let field = loaded.field(&coarse.manifold)?;
        let reports = derivative_reports(&coarse, &field, cfg.solver.w2_fd_step)?;
        let mean = reports.iter().map(|r| r.residual.abs()).sum::<f64>() / reports.len() as f64;
        refinement.push([n as f64, mean]);
    }
    if !refinement.is_empty() {
        rec.series.push(Series {
            name: "w2_derivative_residual_vs_n".into(),
            x_label: "nodes per axis".into(),
            y_label: "mean |residual|".into(),
            points: refinement.clone(),
        });
    }
    rec.phase("refinement");

    let results = json!({
        "w2_derivative": to_value(&derivatives),
        "continuity": to_value(&continuity),
        "directional_derivative": {"formula": formula, "finite_difference": fd, "step": cfg.solver.cylinder_fd_step},
        "lipschitz": to_value(&lipschitz),
        "field_sup_norm": w.sup_norm(),
        "refinement": refinement.iter().map(|p| json!({"n": p[0], "mean_abs_residual": p[1]})).collect::<Vec<_>>(),
    });
    Ok((results, Vec::new()))
}

fn derivative_reports(
    setup: &Setup,
    w: &hot_core::VectorField,
    step: f64,
) -> Result<Vec<WassersteinDerivativeReport>, CliError> {
    let pairs = setup.source.len().min(setup.target.len());
    (0..pairs)
        .map(|k| {
            wasserstein_derivative_check_with(setup.source.atom(k), setup.target.atom(k), w, step)
                .map_err(CliError::from)
        })
        .collect()
}
