//! Experiment configuration: one JSON document per run.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use hot_core::manifold::fourier_family;
use hot_core::measure::{generate_ensemble, Bump, EnsembleFamily};
use hot_core::outer_ot::{CostSpec, HFunction, TabulatedH};
use hot_core::{DiscreteManifold, ManifoldSpec, Measure, MeasureEnsemble, Point, VectorField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Root seed; every random choice in a run derives from it.
    pub seed: u64,
    pub manifold: ManifoldSpec,
    pub source: EnsembleSpec,
    pub target: EnsembleSpec,
    #[serde(default)]
    pub cost: CostConfig,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub calculus: CalculusOptions,
    #[serde(default)]
    pub outer: OuterOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// How an ensemble is obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnsembleSpec {
    /// Seeded equal-mass ensemble; without `seed` the source uses the root seed and
    /// the target the root seed plus one.
    Generated {
        family: EnsembleFamily,
        n_atoms: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    /// Equal-mass Dirac atoms at the given nodes.
    Diracs { nodes: Vec<usize> },
    /// Equal-mass bump atoms.
    Bumps { atoms: Vec<BumpSpec> },
    /// Ensemble JSON document, relative to the config file.
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub center: [f64; 3],
    pub kappa: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostConfig {
    #[default]
    SquaredW2,
    HOfW2 {
        h: HSpec,
    },
}

/// A registry name or a table of `(s, h(s))` values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HSpec {
    Named(String),
    Table { s: Vec<f64>, h: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Entropic regularizations reported in the cost-versus-epsilon series.
    pub epsilon_schedule: Vec<f64>,
    pub entropic_max_iterations: usize,
    /// Seed of the `1e-10` cost jitter in inner exact solves; off when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturbation_seed: Option<u64>,
    pub w2_fd_step: f64,
    pub cylinder_fd_step: f64,
    pub stationarity_step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            epsilon_schedule: vec![0.1, 0.05, 0.025, 0.0125],
            entropic_max_iterations: 10_000,
            perturbation_seed: None,
            w2_fd_step: hot_core::calculus::W2_FD_STEP,
            cylinder_fd_step: hot_core::calculus::CYLINDER_FD_STEP,
            stationarity_step: hot_core::outer_ot::STATIONARITY_STEP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub duality_gap: f64,
    pub feasibility: f64,
    pub support_slackness: f64,
    /// Norm-identity bound in units of `grid spacing * diameter`.
    pub norm_identity_factor: f64,
    /// Relative residual of the derivative formula for `W2^2`.
    pub w2_derivative: f64,
    pub continuity: f64,
    /// Cylinder-function contract, relative to `1 + |derivative|`.
    pub directional_derivative: f64,
    /// Relative slack on the Lipschitz bound `2 diam`.
    pub lipschitz_slack: f64,
    /// `|alpha'(0)|` relative to `1 + |U(mu)|`.
    pub stationarity: f64,
    /// Map-formula error in units of the diameter.
    pub map_formula_factor: f64,
    pub chain_rule: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            duality_gap: 1e-8,
            feasibility: 1e-9,
            support_slackness: 1e-8,
            norm_identity_factor: 5.0,
            w2_derivative: 1e-2,
            continuity: 1e-3,
            directional_derivative: 1e-5,
            lipschitz_slack: 1e-6,
            stationarity: 1e-2,
            map_formula_factor: 0.1,
            chain_rule: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalculusOptions {
    pub field: FieldSpec,
    pub t_grid: Vec<f64>,
    /// Number of harmonic test functions in the continuity check.
    pub test_functions: usize,
    /// Resolutions for the refinement series; circle and torus with generated ensembles only.
    pub refinement: Vec<usize>,
}

impl Default for CalculusOptions {
    fn default() -> Self {
        Self {
            field: FieldSpec::Random {
                order: 2,
                sup_norm: 0.15,
            },
            t_grid: vec![0.0, 0.1, 0.2],
            test_functions: 5,
            refinement: Vec::new(),
        }
    }
}

/// Vector field driving the calculus checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Zero,
    /// `sum_l c_l f_l` over the Fourier family of the given order.
    Fourier {
        order: usize,
        coefficients: Vec<f64>,
    },
    /// Seeded uniform coefficients, rescaled to the given sup norm.
    Random {
        order: usize,
        sup_norm: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OuterOptions {
    /// Fourier order of the stationarity fields; the constant field is left out.
    pub stationarity_order: usize,
    /// Fourier order of the family used to estimate `DU`.
    pub map_order: usize,
    /// Fail the run when some outer row is not deterministic.
    pub require_monge: bool,
}

impl Default for OuterOptions {
    fn default() -> Self {
        Self {
            stationarity_order: 8,
            map_order: 8,
            require_monge: true,
        }
    }
}

/// A parsed config together with the directory its relative paths refer to.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub base_dir: PathBuf,
}

pub fn load(path: &Path) -> Result<LoadedConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let config: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(LoadedConfig {
        config,
        base_dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
    })
}

/// Everything a command needs, built from the config.
pub struct Setup {
    pub manifold: Arc<DiscreteManifold>,
    pub source: MeasureEnsemble,
    pub target: MeasureEnsemble,
    pub cost: CostSpec,
}

impl LoadedConfig {
    pub fn setup(&self) -> Result<Setup, CliError> {
        self.setup_on(self.config.manifold.clone())
    }

    /// Same ensembles and cost on another discretization.
    pub fn setup_on(&self, spec: ManifoldSpec) -> Result<Setup, CliError> {
        let spec = match spec {
            ManifoldSpec::SphereOff { path } => ManifoldSpec::SphereOff {
                path: self.base_dir.join(path).to_string_lossy().into_owned(),
            },
            other => other,
        };
        let manifold = Arc::new(DiscreteManifold::from_spec(&spec).map_err(CliError::config)?);
        let source = self.ensemble(&self.config.source, &manifold, 0)?;
        let target = self.ensemble(&self.config.target, &manifold, 1)?;
        let cost = build_cost(&self.config.cost, manifold.diameter())?;
        Ok(Setup {
            manifold,
            source,
            target,
            cost,
        })
    }

    fn ensemble(
        &self,
        spec: &EnsembleSpec,
        m: &Arc<DiscreteManifold>,
        slot: u64,
    ) -> Result<MeasureEnsemble, CliError> {
        let built = match spec {
            EnsembleSpec::Generated {
                family,
                n_atoms,
                seed,
            } => {
                let seed = seed.unwrap_or_else(|| self.config.seed.wrapping_add(slot));
                generate_ensemble(m, *n_atoms, *family, seed)
            }
            EnsembleSpec::Diracs { nodes } => nodes
                .iter()
                .map(|&i| Measure::dirac(m.clone(), i))
                .collect::<hot_core::Result<Vec<_>>>()
                .and_then(MeasureEnsemble::uniform),
            EnsembleSpec::Bumps { atoms } => atoms
                .iter()
                .map(|b| {
                    Bump {
                        center: Point(b.center),
                        kappa: b.kappa,
                    }
                    .measure(m)
                })
                .collect::<hot_core::Result<Vec<_>>>()
                .and_then(MeasureEnsemble::uniform),
            EnsembleSpec::File { path } => {
                let path = self.base_dir.join(path);
                let text = std::fs::read_to_string(&path).map_err(|e| {
                    CliError::Config(format!("cannot read {}: {e}", path.display()))
                })?;
                serde_json::from_str::<hot_core::io::EnsembleDocument>(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
                    .into_ensemble_on(m)
            }
        };
        built.map_err(CliError::config)
    }

    /// The calculus field on `m`; random coefficients come from the root seed.
    pub fn field(&self, m: &DiscreteManifold) -> Result<VectorField, CliError> {
        match &self.config.calculus.field {
            FieldSpec::Zero => Ok(VectorField::zero(m)),
            FieldSpec::Fourier {
                order,
                coefficients,
            } => {
                let family = fourier_family(m, *order);
                if coefficients.len() != family.len() {
                    return Err(CliError::Config(format!(
                        "Fourier order {order} has {} fields, got {} coefficients",
                        family.len(),
                        coefficients.len()
                    )));
                }
                combine(m, &family, coefficients)
            }
            FieldSpec::Random { order, sup_norm } => {
                let family = fourier_family(m, *order);
                let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed ^ 0x66_6965_6c64);
                let c: Vec<f64> = family.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
                let w = combine(m, &family, &c)?;
                let s = w.sup_norm();
                Ok(if s > 0.0 { w.scaled(sup_norm / s) } else { w }.with_label("w"))
            }
        }
    }
}

fn combine(
    m: &DiscreteManifold,
    family: &[VectorField],
    c: &[f64],
) -> Result<VectorField, CliError> {
    let mut w = VectorField::zero(m);
    for (f, x) in family.iter().zip(c) {
        w = w.axpy(*x, f).map_err(CliError::config)?.with_label("w");
    }
    Ok(w)
}

pub fn build_cost(cost: &CostConfig, diam: f64) -> Result<CostSpec, CliError> {
    match cost {
        CostConfig::SquaredW2 => Ok(CostSpec::SquaredW2),
        CostConfig::HOfW2 { h } => {
            let h = match h {
                HSpec::Named(name) => HFunction::named(name).map_err(CliError::config)?,
                HSpec::Table { s, h } => HFunction::Tabulated(
                    TabulatedH::new(s.clone(), h.clone()).map_err(CliError::config)?,
                ),
            };
            CostSpec::h_of_w2(h, diam).map_err(CliError::config)
        }
    }
}
