//! JSON and CSV exchange formats.
//!
//! Ensembles are JSON documents `{manifold, atoms: [{mass, weights}]}`. Plans and
//! cost matrices are long-format CSV with `,` separators and a header row.
//! Numbers are written in shortest round-trip form, independent of locale.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{argument, Error, Result};
use crate::inner_ot::TransportPlan;
use crate::manifold::{DiscreteManifold, ManifoldSpec};
use crate::measure::{Measure, MeasureEnsemble};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomRecord {
    pub mass: f64,
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleDocument {
    pub manifold: ManifoldSpec,
    pub atoms: Vec<AtomRecord>,
}

impl EnsembleDocument {
    pub fn from_ensemble(e: &MeasureEnsemble) -> Result<Self> {
        let manifold = e
            .manifold()
            .spec()
            .cloned()
            .ok_or_else(|| argument("manifold was not built from a config record"))?;
        Ok(Self {
            manifold,
            atoms: e
                .atoms()
                .iter()
                .zip(e.masses())
                .map(|(a, &mass)| AtomRecord {
                    mass,
                    weights: a.weights().to_vec(),
                })
                .collect(),
        })
    }

    /// Builds the manifold and the ensemble; every atom must have one weight per node.
    pub fn into_ensemble(self) -> Result<MeasureEnsemble> {
        let m = Arc::new(DiscreteManifold::from_spec(&self.manifold)?);
        self.into_ensemble_on(&m)
    }

    /// Like [`Self::into_ensemble`] but reusing an existing manifold with the same spec.
    pub fn into_ensemble_on(self, m: &Arc<DiscreteManifold>) -> Result<MeasureEnsemble> {
        if m.spec() != Some(&self.manifold) {
            return Err(argument("ensemble document refers to a different manifold"));
        }
        let mut atoms = Vec::with_capacity(self.atoms.len());
        let mut masses = Vec::with_capacity(self.atoms.len());
        for (k, a) in self.atoms.into_iter().enumerate() {
            if a.weights.len() != m.len() {
                return Err(Error::Parse(format!(
                    "atom {k} has {} weights, manifold has {} nodes",
                    a.weights.len(),
                    m.len()
                )));
            }
            atoms.push(Measure::new(m.clone(), a.weights)?);
            masses.push(a.mass);
        }
        MeasureEnsemble::new(atoms, masses)
    }
}

pub fn ensemble_to_json(e: &MeasureEnsemble) -> Result<String> {
    Ok(serde_json::to_string_pretty(
        &EnsembleDocument::from_ensemble(e)?,
    )?)
}

pub fn ensemble_from_json(text: &str) -> Result<MeasureEnsemble> {
    let doc: EnsembleDocument =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("ensemble document: {e}")))?;
    doc.into_ensemble()
}

pub fn read_ensemble(path: impl AsRef<Path>) -> Result<MeasureEnsemble> {
    ensemble_from_json(&std::fs::read_to_string(path)?)
}

pub fn write_ensemble(path: impl AsRef<Path>, e: &MeasureEnsemble) -> Result<()> {
    std::fs::write(path, ensemble_to_json(e)? + "\n")?;
    Ok(())
}

/// Shortest round-trip decimal form; scientific notation outside `[1e-5, 1e16)`.
pub fn format_number(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) || !a.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Three-column CSV with a header row.
pub fn triples_csv(
    header: [&str; 3],
    rows: impl Iterator<Item = (usize, usize, f64)>,
) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Parse(format!("csv: {e}"));
    w.write_record(header).map_err(csv_err)?;
    for (i, j, v) in rows {
        w.write_record([i.to_string(), j.to_string(), format_number(v)])
            .map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Parse(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
}

/// Support of a plan as `source,target,mass` rows.
pub fn plan_csv(plan: &TransportPlan) -> Result<String> {
    triples_csv(["source", "target", "mass"], plan.support())
}

/// Row-major cost matrix as `source,target,cost` rows.
pub fn cost_matrix_csv(cost: &[f64], rows: usize) -> Result<String> {
    if rows == 0 || cost.len() % rows != 0 {
        return Err(argument(
            "cost matrix length is not a multiple of the row count",
        ));
    }
    let cols = cost.len() / rows;
    triples_csv(
        ["source", "target", "cost"],
        cost.iter()
            .enumerate()
            .map(|(k, c)| (k / cols, k % cols, *c)),
    )
}

/// Parses a three-column `index,index,value` CSV with a header row.
pub fn parse_triples_csv(text: &str) -> Result<Vec<(usize, usize, f64)>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .map(|r| r.map_err(|e| Error::Parse(format!("csv: {e}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{generate_ensemble, EnsembleFamily};

    #[test]
    fn ensembles_round_trip_bit_for_bit() {
        let m = Arc::new(DiscreteManifold::torus(3, 4).unwrap());
        let e = generate_ensemble(&m, 3, EnsembleFamily::DirichletWeights, 5).unwrap();
        let back = ensemble_from_json(&ensemble_to_json(&e).unwrap()).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn wrong_weight_count_is_a_parse_error() {
        let text =
            r#"{"manifold":{"kind":"circle","n":4},"atoms":[{"mass":1.0,"weights":[0.5,0.5]}]}"#;
        assert!(matches!(ensemble_from_json(text), Err(Error::Parse(_))));
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.0, 1.0, 0.1, 1e-20, 6.02e23, -3.5e-7, 0.0625] {
            assert_eq!(format_number(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_number(0.0625), "0.0625");
        assert_eq!(format_number(1e-20), "1e-20");
    }

    #[test]
    fn cost_matrix_csv_round_trips() {
        let c = vec![0.0, 0.25, 1.0 / 3.0, 1e-30];
        let text = cost_matrix_csv(&c, 2).unwrap();
        assert!(text.starts_with("source,target,cost\n0,0,0\n0,1,0.25\n"));
        let parsed = parse_triples_csv(&text).unwrap();
        assert_eq!(parsed.iter().map(|t| t.2).collect::<Vec<_>>(), c);
        assert_eq!(parsed[2].0, 1);
    }
}
