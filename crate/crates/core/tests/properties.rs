//! Randomized and exhaustive property checks across the engines.

mod common;

use proptest::prelude::*;
use rand::Rng;
use walkcent::exact::{
    gwc_exact, marginal_gain_exact, marginal_gains_exact, walk_centrality_exact,
    walk_centrality_spectral,
};
use walkcent::generators::{
    closed_form_kemeny, extended_hanoi_kemeny_exact, generate, generate_within, GeneratorBudget,
};
use walkcent::graph::{apply_laplacian, incidence_decomposition};
use walkcent::greedy::{
    approx_min_gwc, baseline_select, brute_force_min_gwc, deter_min_gwc, greedy_ratio,
    BruteForceConfig,
};
use walkcent::rng::{derive_seed, stream_rng};
use walkcent::sim::estimate_walk_centrality;
use walkcent::sketch::{approx_delta, approx_hk, jl_rows, rademacher_projection};
use walkcent::solver::{laplacian_energy_distance, solve_laplacian};
use walkcent::*;

use common::*;

const METHODS: [SolveMethod; 3] = [
    SolveMethod::ConjugateGradient,
    SolveMethod::DenseCholesky,
    SolveMethod::SparseCholesky,
];

fn graph_strategy(max_n: usize) -> impl Strategy<Value = WeightedGraph> {
    (2..=max_n, 0.0..0.4f64, any::<bool>(), any::<u64>())
        .prop_map(|(n, p, weighted, seed)| random_connected(n, p, weighted, seed))
}

fn centered(graph: &WeightedGraph, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, 7);
    let mut b: Vec<f64> = (0..graph.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mean = b.iter().sum::<f64>() / b.len() as f64;
    b.iter_mut().for_each(|x| *x -= mean);
    b
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplacian_matches_dense_and_sums_to_zero(g in graph_strategy(64), seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 1);
        let x: Vec<f64> = (0..g.n()).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let y = apply_laplacian(&g, &x).unwrap();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let tol = 1e-10 * norm * g.w_max() * g.n() as f64;
        prop_assert!(y.iter().sum::<f64>().abs() <= tol);
        let dense = g.laplacian_dense() * nalgebra::DVector::from_column_slice(&x);
        for (a, b) in y.iter().zip(dense.iter()) {
            prop_assert!((a - b).abs() <= 1e-12 * norm.max(1.0) * g.w_max() * g.n() as f64);
        }
    }

    #[test]
    fn stationary_is_degree_proportional(g in graph_strategy(40)) {
        let pi = stationary(&g).unwrap().pi;
        prop_assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for v in 0..g.n() {
            prop_assert!((pi[v] - g.degree(v) / g.total_degree()).abs() < 1e-15);
        }
    }

    #[test]
    fn incidence_decomposition_reassembles(g in graph_strategy(30), seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 2);
        let size = rng.gen_range(1..g.n());
        let set = random_subset(g.n(), size, &mut rng);
        let system = GroundedSystem::new(&g, &set).unwrap();
        let diff = incidence_decomposition(&system).reassemble() - system.to_dense();
        let integral = g.edges().iter().all(|e| e.2.fract() == 0.0);
        if integral {
            prop_assert_eq!(diff.amax(), 0.0);
        } else {
            prop_assert!(diff.amax() <= 1e-12);
        }
    }

    #[test]
    fn strict_solves_meet_the_energy_contract(g in graph_strategy(60), seed in any::<u64>()) {
        let b = centered(&g, seed);
        let exact = solve_laplacian(
            &g,
            &b,
            &SolverOptions::default().with_method(SolveMethod::DenseCholesky).with_delta(1e-14),
        )
        .unwrap()
        .0;
        let exact_norm = laplacian_energy_distance(&g, &exact, &vec![0.0; g.n()]);
        for method in METHODS {
            let opts = SolverOptions::strict().with_method(method).with_delta(1e-6);
            let (x, rep) = solve_laplacian(&g, &b, &opts).unwrap();
            prop_assert!(rep.converged);
            prop_assert!(laplacian_energy_distance(&g, &x, &exact) <= 1e-6 * exact_norm);
        }
    }

    #[test]
    fn solves_are_odd_and_deterministic(g in graph_strategy(60), seed in any::<u64>()) {
        let b = centered(&g, seed);
        let neg: Vec<f64> = b.iter().map(|v| -v).collect();
        for method in METHODS {
            let opts = SolverOptions::default().with_method(method);
            let (x, _) = solve_laplacian(&g, &b, &opts).unwrap();
            let (again, _) = solve_laplacian(&g, &b, &opts).unwrap();
            prop_assert_eq!(&x, &again);
            let (y, _) = solve_laplacian(&g, &neg, &opts).unwrap();
            for (a, c) in x.iter().zip(&y) {
                prop_assert!((a + c).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn exact_engines_agree(g in graph_strategy(100)) {
        let a = walk_centrality_exact(&g).unwrap();
        let b = walk_centrality_spectral(&g).unwrap();
        prop_assert!(rel(a.kemeny, b.kemeny) <= 1e-8);
        for (x, y) in a.walk_centrality.iter().zip(&b.walk_centrality) {
            prop_assert!(rel(*x, *y) <= 1e-7, "{} vs {} rel {:.2e}", x, y, rel(*x, *y));
        }
    }

    #[test]
    fn gwc_is_monotone_and_supermodular(g in graph_strategy(30), seed in any::<u64>()) {
        prop_assume!(g.n() >= 3);
        let n = g.n();
        let mut rng = stream_rng(seed, 5);
        let t_size = rng.gen_range(1..n - 1);
        let pick = random_subset(n, t_size + 1, &mut rng);
        let u = pick[rng.gen_range(0..pick.len())];
        let big: Vec<usize> = pick.iter().copied().filter(|&v| v != u).collect();
        let small: Vec<usize> = big[..rng.gen_range(1..=big.len())].to_vec();
        let h_s = gwc_exact(&g, &small).unwrap().value;
        let mut small_u = small.clone();
        small_u.push(u);
        prop_assert!(gwc_exact(&g, &small_u).unwrap().value <= h_s * (1.0 + 1e-12));
        let gain_s = marginal_gain_exact(&g, &small, u).unwrap();
        let gain_t = marginal_gain_exact(&g, &big, u).unwrap();
        prop_assert!(gain_t <= gain_s + 1e-12 * h_s);
    }

    #[test]
    fn rademacher_projection_preserves_distances(seed in any::<u64>(), dim in 2usize..200) {
        let eps = 0.5;
        let points = 20;
        let k = jl_rows(points, eps);
        let q = rademacher_projection(k, dim, seed).unwrap();
        let mut rng = stream_rng(seed, 9);
        let pts: Vec<Vec<f64>> = (0..points)
            .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let proj: Vec<Vec<f64>> = pts.iter().map(|p| q.project(p).unwrap()).collect();
        let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
        for i in 0..points {
            for j in i + 1..points {
                let ratio = sq(&proj[i], &proj[j]) / sq(&pts[i], &pts[j]);
                prop_assert!((1.0 - eps..=1.0 + eps).contains(&ratio), "ratio {ratio}");
            }
        }
    }

    #[test]
    fn sketched_centrality_is_seed_deterministic(g in graph_strategy(30), seed in any::<u64>()) {
        let opts = SolverOptions::default();
        let a = approx_hk(&g, 0.5, seed, &opts).unwrap();
        let b = approx_hk(&g, 0.5, seed, &opts).unwrap();
        prop_assert_eq!(&a, &b);
        let d = g.total_degree();
        let k: f64 = (0..g.n()).map(|u| g.degree(u) / d * a.h_tilde[u]).sum();
        prop_assert!((k - a.kemeny_tilde).abs() <= 1e-12 * k.abs().max(1.0));
    }
}

#[test]
fn sketched_centrality_contract_over_many_seeds() {
    let graphs = [path(3), star(6), cycle(7), random_connected(30, 0.1, true, 3)];
    for g in &graphs {
        let exact = walk_centrality_exact(g).unwrap().walk_centrality;
        for eps in [0.2, 0.3] {
            let bound = (1.0 + eps) * (1.0f64 + eps) - 1.0;
            let opts = SolverOptions::strict().with_method(SolveMethod::SparseCholesky);
            let within = (0..1000)
                .filter(|&seed| {
                    let est = approx_hk(g, eps, seed, &opts).unwrap();
                    exact.iter().zip(&est.h_tilde).all(|(h, a)| rel(*a, *h) <= bound)
                })
                .count();
            assert!(within >= 990, "{within} of 1000 seeds within {bound} (n={})", g.n());
        }
    }
}

#[test]
fn sketched_gains_converge() {
    for s in 0..3 {
        let g = random_connected(30, 0.1, true, derive_seed(77, s));
        let set = [0, 5];
        let exact = marginal_gains_exact(&g, &set).unwrap();
        let mut errors = Vec::new();
        for eps in [0.6, 0.3, 0.15] {
            let opts = SolverOptions::default().with_method(SolveMethod::SparseCholesky);
            let est = approx_delta(&g, &set, eps, 21, &opts).unwrap();
            let worst = exact
                .iter()
                .zip(&est.gains)
                .map(|((u, e), (v, a))| {
                    assert_eq!(u, v);
                    rel(*a, *e)
                })
                .fold(0.0, f64::max);
            assert!(worst <= eps, "eps {eps}: worst relative error {worst}");
            errors.push(worst);
        }
        assert!(errors.windows(2).all(|w| w[1] < w[0]), "errors {errors:?} do not shrink");
    }
}

#[test]
fn sketched_gain_argmax_matches_exact() {
    let mut agree = 0;
    let trials = 50;
    for t in 0..trials {
        let seed = derive_seed(95, t);
        let mut rng = stream_rng(seed, 0);
        let n = rng.gen_range(10..=60);
        let g = random_connected(n, rng.gen_range(0.03..0.2), true, seed);
        let size = rng.gen_range(1..=3);
        let set = random_subset(n, size, &mut rng);
        let best = |gains: &[(usize, f64)]| {
            gains.iter().fold((usize::MAX, f64::NEG_INFINITY), |acc, &(u, v)| {
                if v > acc.1 {
                    (u, v)
                } else {
                    acc
                }
            })
        };
        let exact = best(&marginal_gains_exact(&g, &set).unwrap()).0;
        let opts = SolverOptions::default().with_method(SolveMethod::SparseCholesky);
        let est = approx_delta(&g, &set, 0.1, seed, &opts).unwrap();
        if best(&est.gains).0 == exact {
            agree += 1;
        }
    }
    assert!(agree * 100 >= trials * 95, "{agree} of {trials} agree");
}

#[test]
fn deterministic_greedy_meets_its_ratio() {
    for t in 0..40u64 {
        let mut rng = stream_rng(t, 16);
        let n = rng.gen_range(5..=16);
        let g = random_connected(n, rng.gen_range(0.05..0.4), t % 2 == 0, derive_seed(16, t));
        for k in 2..=4.min(n - 1) {
            let trace = deter_min_gwc(&g, k).unwrap();
            let h1 = trace.gwc_values[0];
            let (_, opt) = brute_force_min_gwc(&g, k, &BruteForceConfig::default()).unwrap();
            assert!(
                h1 - trace.value() >= greedy_ratio(k) * (h1 - opt) - 1e-12 * h1,
                "graph {t}, k={k}"
            );
        }
    }
}

#[test]
fn deterministic_greedy_traces_nest() {
    let g = random_connected(40, 0.08, true, 12);
    let trace = deter_min_gwc(&g, 6).unwrap();
    for i in 1..trace.selected.len() {
        let before = gwc_exact(&g, &trace.selected[..i]).unwrap().value;
        let after = gwc_exact(&g, &trace.selected[..=i]).unwrap().value;
        assert!(rel(trace.gains[i - 1], before - after) <= 1e-9);
        assert!(rel(trace.gwc_values[i], after) <= 1e-12);
        assert!(!trace.selected[..i].contains(&trace.selected[i]));
    }
}

#[test]
fn greedy_beats_baselines_on_models() {
    let models = [
        ModelSpec::new(ModelFamily::Pseudofractal, 4),
        ModelSpec::new(ModelFamily::Koch, 3),
        ModelSpec::cayley(3, 5),
        ModelSpec::new(ModelFamily::Hanoi, 4),
    ];
    for spec in &models {
        let g = generate(spec).unwrap();
        let k = 6;
        let eps = 0.3;
        let deter = deter_min_gwc(&g, k).unwrap().value();
        for b in Baseline::ALL {
            let base = baseline_select(&g, k, b, 3).unwrap().value();
            assert!(deter <= base + 1e-9, "{spec:?}: {} gives {base}, deter {deter}", b.name());
        }
        let cfg = OptimizerConfig {
            method: SolveMethod::SparseCholesky,
            ..OptimizerConfig::new(k, eps, 4)
        };
        let approx = approx_min_gwc(&g, &cfg).unwrap().value();
        assert!(approx <= (1.0 + 3.0 * eps) * deter, "{spec:?}: {approx} vs {deter}");
    }
}

#[test]
fn generators_are_deterministic_and_counted() {
    let budget = GeneratorBudget::default();
    for family in ModelFamily::ALL {
        for g in 0..=5 {
            let spec = match family {
                ModelFamily::Cayley => ModelSpec::cayley(3, g),
                _ => ModelSpec::new(family, g),
            };
            let Ok(a) = generate_within(&spec, &budget) else {
                continue;
            };
            let b = generate(&spec).unwrap();
            assert_eq!(a.edges(), b.edges());
            let (n, m) = spec.counts().unwrap();
            assert_eq!((a.n() as u128, a.m() as u128), (n, m), "{spec:?}");
        }
    }
}

#[test]
fn closed_forms_match_the_exact_engine() {
    for family in [ModelFamily::Pseudofractal, ModelFamily::Koch, ModelFamily::Cayley] {
        for g in 0.. {
            let spec = match family {
                ModelFamily::Cayley => ModelSpec::cayley(3, g),
                _ => ModelSpec::new(family, g),
            };
            if spec.counts().unwrap().0 > 2000 {
                break;
            }
            let k = walk_centrality_exact(&generate(&spec).unwrap()).unwrap().kemeny;
            let closed = closed_form_kemeny(&spec).unwrap();
            let ok = if closed == 0.0 { k.abs() <= 1e-12 } else { rel(k, closed) <= 1e-8 };
            assert!(ok, "{spec:?}: {k} vs {closed}");
        }
    }
    // Extended Hanoi: the published formula is the mean over distinct
    // pairs; its (n - 1)/n rescaling is the Kemeny constant.
    for g in 2..=6 {
        let spec = ModelSpec::new(ModelFamily::ExtendedHanoi, g);
        let graph = generate(&spec).unwrap();
        let n = graph.n() as f64;
        let k = walk_centrality_exact(&graph).unwrap().kemeny;
        let corrected = num_traits::ToPrimitive::to_f64(&extended_hanoi_kemeny_exact(g).unwrap());
        assert!(rel(k, corrected.unwrap()) <= 1e-8, "g={g}");
        assert!(rel(k * n / (n - 1.0), closed_form_kemeny(&spec).unwrap()) <= 1e-8);
    }
}

#[test]
fn simulation_matches_koch_fixture() {
    let g = generate(&ModelSpec::new(ModelFamily::Koch, 1)).unwrap();
    let h = walk_centrality_exact(&g).unwrap().walk_centrality;
    let mut excursions = 0;
    for seed in 0..10 {
        for j in 0..g.n() {
            let est = estimate_walk_centrality(&g, j, 100_000, derive_seed(seed, j as u64)).unwrap();
            if est.z_score(h[j]) > 4.0 {
                excursions += 1;
            }
        }
    }
    assert!(excursions <= 1, "{excursions} excursions");
}
