mod common;

use bratnet::diagram::{gen_binary_tree, gen_bottleneck, gen_pascal, gen_stationary, validate, Diagram};
use bratnet::energy::energy;
use bratnet::harmonic::{
    extend_harmonic, harm_dimension, harmonicity_check, laplacian_residuals, solve_monopole, Mode, DEFAULT_TOL,
};
use bratnet::pathspace::green_identities;
use bratnet::{LevelFunction, VertexId};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_profile() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..5, 2..5).prop_map(|mut v| {
        v.insert(0, 1);
        v
    })
}

/// Harmonic prefix `f_0 = 0, f_1` on a tree-shaped network: `f_1` is
/// random subject to the root equation.
fn tree_seed(d: &Diagram, rng: &mut ChaCha8Rng) -> LevelFunction {
    let c: Vec<f64> = (0..d.level_size(1)).map(|i| d.conductance(0).get(0, i).unwrap_or(0.0)).collect();
    let mut f1: Vec<f64> = c.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
    let flux: f64 = c.iter().zip(&f1).map(|(a, b)| a * b).sum();
    let last = f1.len() - 1;
    f1[last] -= flux / c[last];
    LevelFunction::from_levels(vec![vec![0.0], f1])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operator_and_energy_properties(shape in 0usize..3, seed in 0u64..1000) {
        let d = common::random_network(shape, seed);
        let fails = common::network_properties(&d, seed);
        prop_assert!(fails.is_empty(), "{fails:?}");
    }

    #[test]
    fn energy_invariances(shape in 0usize..3, seed in 0u64..1000, shift in -5.0f64..5.0, t in 0.1f64..10.0) {
        let d = common::random_network(shape, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = common::random_function(&d, &mut rng);
        let e = energy(&d, &f).unwrap();
        prop_assert!((energy(&d, &f.map(|v| v + shift)).unwrap() - e).abs() <= 1e-10 * e.max(1.0));
        prop_assert!((energy(&d, &f.map(|v| t * v)).unwrap() - t * t * e).abs() <= 1e-10 * (t * t * e).max(1.0));
        prop_assert!((energy(&d.scaled(t), &f).unwrap() - t * e).abs() <= 1e-10 * (t * e).max(1.0));
    }

    #[test]
    fn dimension_matches_exact_rank(profile in small_profile(), seed in 0u64..100) {
        let d = gen_bottleneck(&profile, seed).unwrap();
        let (_, state, rows) = harm_dimension(&d, d.depth(), DEFAULT_TOL).unwrap();
        for row in rows.iter().filter(|r| r.depth > 0) {
            let (nullity, seeds) = common::oracle_dimensions(&d, row.depth);
            prop_assert_eq!(row.prefix_dim, nullity, "prefix at {}", row.depth);
            prop_assert_eq!(row.seed_dim, seeds, "seed at {}", row.depth);
        }
        prop_assert_eq!(state.seed_dim(), common::oracle_dimensions(&d, d.depth()).1);
    }

    #[test]
    fn chained_extension_is_harmonic(seed in 0u64..1000, t in 0.1f64..10.0) {
        let d = common::random_network(2, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = tree_seed(&d, &mut rng);
        let scaled = d.scaled(t);
        for _ in 1..d.depth() {
            let (next, rep) = extend_harmonic(&d, &f, &Mode::MinNorm, DEFAULT_TOL).unwrap();
            prop_assert!(rep.consistent);
            let (other, _) = extend_harmonic(&scaled, &f, &Mode::MinNorm, DEFAULT_TOL).unwrap();
            let gap = next.iter().zip(&other).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            prop_assert!(gap <= 1e-9 * next.iter().fold(1.0f64, |m, v| m.max(v.abs())));
            f.push_level(next);
        }
        let rep = harmonicity_check(&d, &f, 1e-9 * f.max_abs().max(1.0)).unwrap();
        prop_assert!(rep.consistent, "{:?}", rep.residuals);
    }

    #[test]
    fn killed_chain_identities(shape in 0usize..3, seed in 0u64..1000) {
        let d = common::random_network(shape, seed);
        let n = d.depth();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sample: Vec<VertexId> = (0..5)
            .map(|_| {
                let k = rng.random_range(0..n);
                VertexId::new(k, rng.random_range(0..d.level_size(k)))
            })
            .collect();
        let r = green_identities(&d, n, &sample).unwrap();
        prop_assert!(r.diagonal <= 1e-9, "{r:?}");
        prop_assert!(r.factorization <= 1e-9, "{r:?}");
        prop_assert!(r.first_return <= 1e-9, "{r:?}");
        prop_assert!(r.first_step <= 1e-9, "{r:?}");
        prop_assert!(r.g_reversibility <= 1e-9, "{r:?}");
    }

    #[test]
    fn monopole_has_unit_source(shape in 0usize..3, seed in 0u64..1000) {
        let d = common::random_network(shape, seed);
        let n = d.depth();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.random_range(0..n);
        let x = VertexId::new(k, rng.random_range(0..d.level_size(k)));
        let (w, _) = solve_monopole(&d, x, n, &Mode::Grounded, DEFAULT_TOL).unwrap();
        let res = laplacian_residuals(&d, &w, &[(x, 1.0)]).unwrap();
        prop_assert!(res.iter().all(|&r| r <= 1e-9), "{res:?}");
    }

    #[test]
    fn text_roundtrips(shape in 0usize..3, seed in 0u64..1000) {
        let d = common::random_network(shape, seed);
        let text = d.to_text();
        let back = Diagram::parse(&text).unwrap();
        prop_assert_eq!(back.level_sizes(), d.level_sizes());
        prop_assert_eq!(back.to_text(), text);
        for (a, b) in d.blocks().iter().zip(back.blocks()) {
            for ((i, j, x), (k, l, y)) in a.iter().zip(b.iter()) {
                prop_assert_eq!((i, j), (k, l));
                prop_assert!((x - y).abs() <= 1e-11 * x);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = common::random_function(&d, &mut rng);
        let g = LevelFunction::parse(&f.to_text(), &d).unwrap();
        prop_assert!(f.sub(&g).max_abs() <= 1e-11);
    }

    #[test]
    fn generators_validate(depth in 1usize..8, lambda in 0.1f64..5.0, seed in 0u64..100, profile in small_profile()) {
        prop_assert!(validate(&gen_binary_tree(depth, lambda).unwrap()).is_empty());
        prop_assert!(validate(&gen_pascal(depth, lambda).unwrap()).is_empty());
        prop_assert!(validate(&gen_stationary(&[vec![1, 1], vec![1, 0]], depth, lambda).unwrap()).is_empty());
        prop_assert!(validate(&gen_bottleneck(&profile, seed).unwrap()).is_empty());
    }
}
