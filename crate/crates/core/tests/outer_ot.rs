mod common;

use std::sync::Arc;

use common::*;
use hot_core::calculus::lipschitz_check;
use hot_core::inner_ot::{extract_mccann_map, solve_exact, w2_distance};
use hot_core::manifold::fourier_family;
use hot_core::measure::{generate_ensemble, pushforward, random_measure, Bump, EnsembleFamily};
use hot_core::outer_ot::*;
use hot_core::{DiscreteManifold, Error, Measure, MeasureEnsemble, Point, VectorField};
use itertools::Itertools;
use proptest::prelude::*;
use rand::Rng;

fn enumeration_minimum(c: &[f64], n: usize) -> (f64, Vec<usize>) {
    (0..n)
        .permutations(n)
        .map(|p| {
            (
                p.iter()
                    .enumerate()
                    .map(|(i, &j)| c[i * n + j])
                    .sum::<f64>(),
                p,
            )
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap()
}

fn four_atom_fixture(m: &Arc<DiscreteManifold>) -> (MeasureEnsemble, MeasureEnsemble) {
    (
        generate_ensemble(m, 4, EnsembleFamily::Bumps, 100).unwrap(),
        generate_ensemble(m, 4, EnsembleFamily::Bumps, 200).unwrap(),
    )
}

fn bump(m: &Arc<DiscreteManifold>, center: f64, kappa: f64) -> Measure {
    Bump {
        center: Point([center, 0.0, 0.0]),
        kappa,
    }
    .measure(m)
    .unwrap()
}

/// Fourier family without the constant field.
fn sixteen_fields(m: &DiscreteManifold) -> Vec<VectorField> {
    fourier_family(m, 8)[1..].to_vec()
}

#[test]
fn self_cost_matrix_is_symmetric_with_zero_diagonal() {
    let m = circle(16);
    let e = generate_ensemble(&m, 5, EnsembleFamily::Mixtures, 3).unwrap();
    let c = outer_cost_matrix(&e, &e, &CostSpec::SquaredW2).unwrap();
    for i in 0..5 {
        assert_eq!(c[i * 5 + i], 0.0);
        for j in 0..5 {
            assert_eq!(c[i * 5 + j], c[j * 5 + i]);
        }
    }
}

#[test]
fn square_h_reproduces_the_squared_matrix() {
    let m = circle(32);
    let src = generate_ensemble(&m, 3, EnsembleFamily::Bumps, 5).unwrap();
    let dst = generate_ensemble(&m, 4, EnsembleFamily::Bumps, 6).unwrap();
    let squared = outer_cost_matrix(&src, &dst, &CostSpec::SquaredW2).unwrap();
    let spec = CostSpec::h_of_w2(HFunction::Square, m.diameter()).unwrap();
    assert_eq!(outer_cost_matrix(&src, &dst, &spec).unwrap(), squared);
}

#[test]
fn cost_entries_match_independent_pair_solves() {
    let m = circle(32);
    let src = generate_ensemble(&m, 3, EnsembleFamily::Bumps, 7).unwrap();
    let dst = generate_ensemble(&m, 3, EnsembleFamily::Bumps, 8).unwrap();
    let squared = outer_cost_matrix(&src, &dst, &CostSpec::SquaredW2).unwrap();
    let spec = CostSpec::h_of_w2(HFunction::CoshMinusOne, m.diameter()).unwrap();
    let cosh = outer_cost_matrix(&src, &dst, &spec).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let w2sq = solve_exact(src.atom(i), dst.atom(j)).unwrap().0.cost;
            assert_eq!(squared[i * 3 + j], w2sq);
            let expected = w2sq.sqrt().cosh() - 1.0;
            assert!((cosh[i * 3 + j] - expected).abs() <= 1e-15 * (1.0 + expected));
        }
    }
}

#[test]
fn cost_matrix_rejects_mixed_manifolds() {
    let a = generate_ensemble(&circle(8), 2, EnsembleFamily::Bumps, 1).unwrap();
    let b = generate_ensemble(&circle(9), 2, EnsembleFamily::Bumps, 1).unwrap();
    assert!(matches!(
        outer_cost_matrix(&a, &b, &CostSpec::SquaredW2),
        Err(Error::Argument(_))
    ));
}

#[test]
fn single_atom_ensembles_give_the_trivial_plan() {
    let m = circle(16);
    let src = generate_ensemble(&m, 1, EnsembleFamily::Bumps, 1).unwrap();
    let dst = generate_ensemble(&m, 1, EnsembleFamily::Bumps, 2).unwrap();
    let plan = solve_outer(&src, &dst, &CostSpec::SquaredW2).unwrap();
    assert_eq!(plan.pi, vec![1.0]);
    assert_eq!(plan.cost, plan.cost_matrix[0]);
}

#[test]
fn three_atom_cost_equals_the_permutation_minimum() {
    let m = circle(32);
    for seed in 0..10 {
        let src = generate_ensemble(&m, 3, EnsembleFamily::Mixtures, 300 + seed).unwrap();
        let dst = generate_ensemble(&m, 3, EnsembleFamily::Mixtures, 400 + seed).unwrap();
        let plan = solve_outer(&src, &dst, &CostSpec::SquaredW2).unwrap();
        let (best, _) = enumeration_minimum(&plan.cost_matrix, 3);
        assert!((plan.cost - best / 3.0).abs() <= 1e-9, "seed {seed}");
    }
}

#[test]
fn outer_duals_are_feasible_and_tight() {
    let m = circle(16);
    let mut r = rng(9);
    for seed in 0..20 {
        let (n, k) = (r.random_range(1..=5), r.random_range(1..=5));
        let atoms = |count: usize, r: &mut rand_chacha::ChaCha8Rng| -> MeasureEnsemble {
            let atoms: Vec<Measure> = (0..count)
                .map(|_| random_measure(&m, EnsembleFamily::Mixtures, r).unwrap())
                .collect();
            let raw: Vec<f64> = (0..count).map(|_| r.random::<f64>() + 0.1).collect();
            let total: f64 = raw.iter().sum();
            MeasureEnsemble::new(atoms, raw.iter().map(|x| x / total).collect()).unwrap()
        };
        let src = atoms(n, &mut r);
        let dst = atoms(k, &mut r);
        let plan = solve_outer(&src, &dst, &CostSpec::SquaredW2).unwrap();
        assert!(plan.duality_gap().abs() <= 1e-8, "seed {seed}");
        assert!(plan.feasibility_violation() <= 1e-9, "seed {seed}");
        assert!(plan.support_slackness() <= 1e-8, "seed {seed}");
        assert!(marginal_violation(&plan) <= 1e-9, "seed {seed}");
    }
}

#[test]
fn generic_uniform_instances_are_monge() {
    let m = circle(16);
    for seed in 0..50u64 {
        let n = 2 + (seed % 5) as usize;
        let src = generate_ensemble(&m, n, EnsembleFamily::Mixtures, 500 + seed).unwrap();
        let dst = generate_ensemble(&m, n, EnsembleFamily::Mixtures, 600 + seed).unwrap();
        let plan = solve_outer(&src, &dst, &CostSpec::SquaredW2).unwrap();
        let map = verify_monge_structure(&plan).unwrap();
        let (best, perm) = enumeration_minimum(&plan.cost_matrix, n);
        assert!(map.all_certified(), "seed {seed}");
        assert_eq!(map.assignment, perm, "seed {seed}");
        assert!(map.stable, "seed {seed}");
        assert!((plan.cost - best / n as f64).abs() <= 1e-9);
        for (p, q) in map.pushed_masses(src.masses(), n).iter().zip(dst.masses()) {
            assert!((p - q).abs() <= 1e-9);
        }
    }
}

#[test]
fn duplicated_source_atom_is_resolved_by_the_jittered_solve() {
    let m = circle(16);
    let mu = bump(&m, 0.2, 5.0);
    let src = MeasureEnsemble::uniform(vec![mu.clone(), mu]).unwrap();
    let dst = MeasureEnsemble::uniform(vec![bump(&m, 0.5, 5.0), bump(&m, 0.7, 8.0)]).unwrap();
    let plan = solve_outer(&src, &dst, &CostSpec::SquaredW2).unwrap();
    let map = verify_monge_structure(&plan).unwrap();
    assert!(map.perturbed_certified.iter().all(|c| *c));
    // Both permutations are optimal; their average splits every row.
    let swap = vec![0.0, 0.5, 0.5, 0.0];
    let identity = vec![0.5, 0.0, 0.0, 0.5];
    let probe = midpoint_uniqueness_probe(&identity, &swap, &plan.cost_matrix, 2).unwrap();
    assert!((probe.cost_a - plan.cost).abs() <= 1e-12);
    assert!((probe.cost_b - plan.cost).abs() <= 1e-12);
    assert!((probe.cost_mid - plan.cost).abs() <= 1e-12);
    assert!(probe.certification_mid < probe.certification_a.min(probe.certification_b));
}

#[test]
fn extension_reproduces_the_source_potentials() {
    let m = circle(32);
    let src = generate_ensemble(&m, 4, EnsembleFamily::Mixtures, 11).unwrap();
    let dst = generate_ensemble(&m, 3, EnsembleFamily::Mixtures, 12).unwrap();
    let plan = solve_outer(&src, &dst, &CostSpec::SquaredW2).unwrap();
    let u = outer_potential_extension(&plan, &dst, &CostSpec::SquaredW2).unwrap();
    for i in 0..4 {
        assert!((u.evaluate(src.atom(i)).unwrap() - plan.u[i]).abs() <= 1e-8);
    }
}

#[test]
fn single_target_extension_with_zero_dual_is_the_cost() {
    let m = circle(32);
    let src = generate_ensemble(&m, 3, EnsembleFamily::Bumps, 13).unwrap();
    let dst = generate_ensemble(&m, 1, EnsembleFamily::Bumps, 14).unwrap();
    let mut plan = solve_outer(&src, &dst, &CostSpec::SquaredW2).unwrap();
    plan.v = vec![0.0];
    let u = outer_potential_extension(&plan, &dst, &CostSpec::SquaredW2).unwrap();
    let mut r = rng(15);
    for _ in 0..5 {
        let mu = smooth_measure(&m, &mut r);
        let cost = solve_exact(&mu, dst.atom(0)).unwrap().0.cost;
        assert_eq!(u.evaluate(&mu).unwrap(), cost);
    }
}

#[test]
fn outer_potential_is_lipschitz() {
    let m = circle(32);
    let src = generate_ensemble(&m, 4, EnsembleFamily::Mixtures, 16).unwrap();
    let dst = generate_ensemble(&m, 4, EnsembleFamily::Mixtures, 17).unwrap();
    let plan = solve_outer(&src, &dst, &CostSpec::SquaredW2).unwrap();
    let u = outer_potential_extension(&plan, &dst, &CostSpec::SquaredW2).unwrap();
    let mut r = rng(18);
    let pairs: Vec<(Measure, Measure)> = (0..50)
        .map(|_| (smooth_measure(&m, &mut r), smooth_measure(&m, &mut r)))
        .collect();
    let report = lipschitz_check(|mu| u.evaluate(mu), &pairs).unwrap();
    assert!(
        report.estimate <= 2.0 * m.diameter() * (1.0 + 1e-6),
        "{report:?}"
    );
}

#[test]
fn single_target_stationarity_is_exact() {
    let m = circle(32);
    let src = generate_ensemble(&m, 3, EnsembleFamily::Bumps, 19).unwrap();
    let dst = generate_ensemble(&m, 1, EnsembleFamily::Bumps, 20).unwrap();
    let cosh = CostSpec::h_of_w2(HFunction::CoshMinusOne, m.diameter()).unwrap();
    for spec in [CostSpec::SquaredW2, cosh] {
        let plan = solve_outer(&src, &dst, &spec).unwrap();
        let report =
            stationarity_check(src.atom(0), &plan, &dst, &spec, &fourier_family(&m, 2)).unwrap();
        assert_eq!(report.max_alpha_prime, 0.0);
    }
}

#[test]
fn stationarity_holds_at_every_atom_of_the_fixture() {
    let m = circle(64);
    let (src, dst) = four_atom_fixture(&m);
    let spec = CostSpec::SquaredW2;
    let plan = solve_outer(&src, &dst, &spec).unwrap();
    let map = verify_monge_structure(&plan).unwrap();
    assert!(map.all_certified());
    let fields = sixteen_fields(&m);
    assert_eq!(fields.len(), 16);
    for i in 0..4 {
        let r = stationarity_check(src.atom(i), &plan, &dst, &spec, &fields).unwrap();
        assert_eq!(r.target, map.assignment[i]);
        assert!(
            r.max_alpha_prime <= 1e-2 * (1.0 + r.u_value.abs()),
            "atom {i}: {r:?}"
        );
    }
}

#[test]
fn stationarity_inner_product_residual_shrinks_under_refinement() {
    let total = |n: usize| -> f64 {
        let m = circle(n);
        let (src, dst) = four_atom_fixture(&m);
        let plan = solve_outer(&src, &dst, &CostSpec::SquaredW2).unwrap();
        let fields = fourier_family(&m, 3);
        (0..4)
            .map(|i| {
                stationarity_check(src.atom(i), &plan, &dst, &CostSpec::SquaredW2, &fields)
                    .unwrap()
                    .max_inner_product_residual
            })
            .sum()
    };
    let (r32, r64) = (total(32), total(64));
    assert!(r64 <= 0.75 * r32, "32: {r32}, 64: {r64}");
}

#[test]
fn map_formula_fixes_an_atom_equal_to_its_target() {
    let m = circle(32);
    let mu = bump(&m, 0.3, 4.0);
    let src = MeasureEnsemble::uniform(vec![mu.clone(), bump(&m, 0.8, 6.0)]).unwrap();
    let dst = MeasureEnsemble::uniform(vec![mu.clone(), bump(&m, 0.75, 6.0)]).unwrap();
    let plan = solve_outer(&src, &dst, &CostSpec::SquaredW2).unwrap();
    let p = extract_outer_map_formula(
        &mu,
        &plan,
        &dst,
        &CostSpec::SquaredW2,
        &fourier_family(&m, 4),
    )
    .unwrap();
    assert_eq!(p.target, 0);
    assert!(p.w2_error <= m.grid_spacing(), "{}", p.w2_error);
}

#[test]
fn single_target_map_formula_is_the_mccann_map() {
    let m = circle(64);
    let mu = bump(&m, 0.3, 4.0);
    let nu = bump(&m, 0.45, 4.0);
    let src = MeasureEnsemble::uniform(vec![mu.clone()]).unwrap();
    let dst = MeasureEnsemble::uniform(vec![nu.clone()]).unwrap();
    let plan = solve_outer(&src, &dst, &CostSpec::SquaredW2).unwrap();
    let p = extract_outer_map_formula(
        &mu,
        &plan,
        &dst,
        &CostSpec::SquaredW2,
        &fourier_family(&m, 8),
    )
    .unwrap();
    assert!(p.w2_error <= 2.0 * m.grid_spacing(), "{}", p.w2_error);
    let mccann = extract_mccann_map(&solve_exact(&mu, &nu).unwrap().0, &m).unwrap();
    let reference = pushforward(&mu, &mccann.map).unwrap();
    assert!(w2_distance(&p.predicted_target, &reference).unwrap() <= 2.0 * m.grid_spacing());
}

#[test]
fn map_formula_on_the_four_atom_fixture() {
    let m = circle(64);
    let (src, dst) = four_atom_fixture(&m);
    let plan = solve_outer(&src, &dst, &CostSpec::SquaredW2).unwrap();
    let fields = fourier_family(&m, 8);
    assert_eq!(fields.len(), 17);
    for i in 0..4 {
        let p = extract_outer_map_formula(src.atom(i), &plan, &dst, &CostSpec::SquaredW2, &fields)
            .unwrap();
        assert!(p.w2_error <= 0.1 * m.diameter(), "atom {i}: {}", p.w2_error);
    }
}

#[test]
fn map_formula_needs_four_fields() {
    let m = circle(16);
    let src = generate_ensemble(&m, 2, EnsembleFamily::Bumps, 1).unwrap();
    let dst = generate_ensemble(&m, 2, EnsembleFamily::Bumps, 2).unwrap();
    let plan = solve_outer(&src, &dst, &CostSpec::SquaredW2).unwrap();
    let fields = fourier_family(&m, 1);
    assert_eq!(fields.len(), 3);
    let err = extract_outer_map_formula(src.atom(0), &plan, &dst, &CostSpec::SquaredW2, &fields);
    assert!(matches!(err, Err(Error::Argument(_))));
}

#[test]
fn h_identities_hold_for_the_builtin_functions() {
    let m = circle(32);
    let mut r = rng(21);
    let pairs: Vec<(Measure, Measure)> = (0..5)
        .map(|_| (positive_measure(&m, &mut r), positive_measure(&m, &mut r)))
        .collect();
    for (h, tol) in [
        (HFunction::Square, 1e-12),
        (HFunction::Quartic, 1e-12),
        (HFunction::CoshMinusOne, 1e-8),
    ] {
        let spec = CostSpec::h_of_w2(h, m.diameter()).unwrap();
        let report = h_identity_checks(&spec, &pairs).unwrap();
        assert!(report.chain_rule_residual <= tol, "{report:?}");
        assert!(report.h_prime_increasing && report.injective);
        assert!(report.max_norm_identity_residual <= 5.0 * m.grid_spacing() * m.diameter());
    }
    assert!(h_identity_checks(&CostSpec::SquaredW2, &pairs).is_err());
}

#[test]
fn monotone_costs_preserve_the_assignment() {
    let m = circle(16);
    let mut compared = 0;
    for seed in 0..25u64 {
        let n = 3 + (seed % 3) as usize;
        let src = generate_ensemble(&m, n, EnsembleFamily::Bumps, 700 + seed).unwrap();
        let dst = generate_ensemble(&m, n, EnsembleFamily::Bumps, 800 + seed).unwrap();
        let squared = solve_outer(&src, &dst, &CostSpec::SquaredW2).unwrap();
        let base = verify_monge_structure(&squared).unwrap();
        let margin = assignment_margin(&squared.cost_matrix, n).unwrap();
        for h in [HFunction::Quartic, HFunction::CoshMinusOne] {
            let gap = modulus_gap(&h, &squared.cost_matrix, n);
            let spec = CostSpec::h_of_w2(h, m.diameter()).unwrap();
            let plan = solve_outer(&src, &dst, &spec).unwrap();
            let map = verify_monge_structure(&plan).unwrap();
            assert!(map.all_certified(), "seed {seed}");
            if base.all_certified() && margin > gap {
                assert_eq!(map.assignment, base.assignment, "seed {seed}");
                compared += 1;
            }
        }
    }
    assert!(compared > 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn centered_duals_stay_optimal(
        n in 1usize..6,
        k in 1usize..6,
        seed in any::<u64>(),
    ) {
        let mut r = rng(seed);
        let raw_a: Vec<f64> = (0..n).map(|_| r.random::<f64>() + 0.05).collect();
        let raw_b: Vec<f64> = (0..k).map(|_| r.random::<f64>() + 0.05).collect();
        let (sa, sb): (f64, f64) = (raw_a.iter().sum(), raw_b.iter().sum());
        let a: Vec<f64> = raw_a.iter().map(|x| x / sa).collect();
        let b: Vec<f64> = raw_b.iter().map(|x| x / sb).collect();
        let c: Vec<f64> = (0..n * k).map(|_| r.random::<f64>()).collect();
        let plan = solve_outer_matrix(&a, &b, c).unwrap();
        prop_assert!(plan.feasibility_violation() <= 1e-9);
        prop_assert!(plan.support_slackness() <= 1e-8);
        prop_assert!(plan.duality_gap().abs() <= 1e-8);
        prop_assert!(marginal_violation(&plan) <= 1e-9);
    }
}
