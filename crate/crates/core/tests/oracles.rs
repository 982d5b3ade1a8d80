//! Independent checks of the worked examples: brute-force linear algebra
//! over GF(p), direct formulas, and Monte Carlo against exact solves.

mod common;

use bratnet::closed_form::{pascal_h_function, tree_f_lambda};
use bratnet::diagram::{gen_binary_tree, gen_bottleneck, gen_pascal, gen_stationary, validate};
use bratnet::energy::{energy_harmonic_formulas, resistance_distance};
use bratnet::graph::{extract_maximal_bratteli, ladder_graph, ladder_with_diagonals, lattice_ball, to_diagram};
use bratnet::harmonic::{
    extend_harmonic, harm_dimension, laplacian_residuals, solve_levels, solve_monopole, Mode, Seed, DEFAULT_TOL,
};
use bratnet::operators::{build_level_operators, spectral_bound_check};
use bratnet::pathspace::green::interior_residual;
use bratnet::pathspace::{
    green_exact, level_progression, multipole, poisson_kernel, sample_stopping_times, PoissonMethod, WalkConfig,
};
use bratnet::{LevelFunction, VertexId};
use common::modp;

#[test]
fn tree_dimension_is_two_to_the_n_minus_one() {
    for depth in 1..=5 {
        let d = gen_binary_tree(depth, 2.0).unwrap();
        let (dim, _, _) = harm_dimension(&d, depth, DEFAULT_TOL).unwrap();
        let (oracle, _) = common::oracle_dimensions(&d, depth);
        assert_eq!(dim, oracle);
        assert_eq!(dim, (1 << depth) - 1);
    }
}

#[test]
fn pascal_dimension_grows_by_one() {
    for depth in 1..=6 {
        for lambda in [1.0, 0.5, 3.0] {
            let d = gen_pascal(depth, lambda).unwrap();
            let (dim, _, _) = harm_dimension(&d, depth, DEFAULT_TOL).unwrap();
            assert_eq!(dim, common::oracle_dimensions(&d, depth).0);
            assert_eq!(dim, depth);
        }
    }
}

#[test]
fn single_vertex_bottleneck_is_inconsistent() {
    let d = gen_bottleneck(&[1, 3, 1, 3], 4).unwrap();
    // Any f_1 with zero sum satisfies the root equation (unit conductance).
    let f1 = vec![1.0, -1.0, 0.0];
    let prefix = LevelFunction::from_levels(vec![vec![0.0], f1.clone()]);
    let (_, rep) = extend_harmonic(&d, &prefix, &Mode::MinNorm, DEFAULT_TOL).unwrap();
    assert!(!rep.consistent, "residual {:?}", rep.residuals);
    // Brute force: [C_1 | D_1 f_1] has rank 2 over GF(p), so C_1 x = D_1 f_1
    // has no solution.
    let c = d.total_conductance();
    let rows: Vec<Vec<u64>> = (0..3)
        .map(|i| {
            let ci = d.conductance(1).get(i, 0).unwrap_or(0.0);
            vec![modp::from_f64(ci), modp::from_f64(c[1][i] * f1[i])]
        })
        .collect();
    assert_eq!(modp::rank(rows), 2);
}

#[test]
fn pascal_back_matrix_differs_from_printed_pattern() {
    // The computed entries are λ/(1+2λ) and λ/(2+2λ); the printed pattern
    // λ/(1+λ), λ/(2+λ) would not make the rows of P stochastic.
    let lam = 3.0;
    let d = gen_pascal(4, lam).unwrap();
    let ops = build_level_operators(&d).unwrap();
    let p = ops.back(2).to_dense();
    assert!((p[0][0] - lam / (1.0 + 2.0 * lam)).abs() < 1e-15);
    assert!((p[1][1] - lam / (2.0 + 2.0 * lam)).abs() < 1e-15);
    assert!((p[0][0] - lam / (1.0 + lam)).abs() > 0.1);
    assert!(ops.stochastic_defect() < 1e-15);
}

#[test]
fn spectral_bound_on_pascal() {
    let d = gen_pascal(8, 1.0).unwrap();
    let ops = build_level_operators(&d).unwrap();
    let r = spectral_bound_check(&ops, 1000, 42).unwrap();
    assert!(r.max_bound_violation <= 1e-12);
    assert!(r.max_symmetry_violation <= 1e-12);
}

#[test]
fn poisson_monte_carlo_matches_exact_on_tree() {
    let n = 8;
    let d = gen_binary_tree(n, 2.0).unwrap();
    let f = tree_f_lambda(n, 2.0).unwrap();
    let exact = poisson_kernel(&d, f.level(n), n, &PoissonMethod::Exact).unwrap();
    let walks = 4000;
    let range = f.level(n).iter().fold(0.0f64, |m, v| m.max(v.abs())) * 2.0;
    let floor = range / walks as f64;
    let mc = poisson_kernel(&d, f.level(n), n, &PoissonMethod::MonteCarlo(WalkConfig::new(walks, 1, n))).unwrap();
    let se = mc.stderr.unwrap();
    let mut worst = (0.0f64, VertexId::ROOT);
    for k in 0..n {
        for i in 0..d.level_size(k) {
            let x = VertexId::new(k, i);
            let gap = (mc.values.get(x) - exact.values.get(x)).abs();
            // A start whose walks never cross to the other half of the tree
            // has zero sample variance; one crossing moves the mean by
            // range/walks, so that is the smallest standard error used.
            let z = if gap <= 1e-12 { 0.0 } else { gap / se.get(x).max(floor) };
            if z > worst.0 {
                worst = (z, x);
            }
        }
    }
    assert!(worst.0 <= 3.0, "largest deviation {:.2} standard errors at {}", worst.0, worst.1);
    // f is harmonic, so the exact extension reproduces it.
    assert!(exact.values.sub(&LevelFunction::from_levels(f.levels()[..=n].to_vec())).max_abs() < 1e-9);
}

#[test]
fn green_function_grows_with_the_boundary() {
    let d = gen_binary_tree(10, 2.0).unwrap();
    let pairs = [
        (VertexId::ROOT, VertexId::ROOT),
        (VertexId::new(1, 0), VertexId::new(3, 2)),
        (VertexId::new(2, 3), VertexId::new(1, 0)),
        (VertexId::new(4, 1), VertexId::new(4, 2)),
    ];
    let mut last = vec![0.0; pairs.len()];
    for n in 5..=10 {
        let g = green_exact(&d, n).unwrap();
        for (k, &(x, y)) in pairs.iter().enumerate() {
            let v = g.value(x, y).unwrap();
            assert!(v >= last[k] - 1e-14, "G_{n}{:?} decreased", (x, y));
            last[k] = v;
        }
    }
    let d = gen_pascal(9, 1.0).unwrap();
    let mut prev = 0.0;
    for n in 2..=9 {
        let v = green_exact(&d, n).unwrap().value(VertexId::new(1, 0), VertexId::new(1, 1)).unwrap();
        assert!(v >= prev);
        prev = v;
    }
}

/// First arrival at level `i ≥ 1` is followed by a step down with
/// probability `2λ/(1 + 2λ)`, independently across levels, so the fraction
/// of walks that progress from level `m` to `N` is that number to the
/// power `N − m`.
#[test]
fn level_progression_matches_first_step_law() {
    let (n, lambda) = (10, 2.0);
    let d = gen_binary_tree(n, lambda).unwrap();
    let samples = sample_stopping_times(&d, VertexId::ROOT, &WalkConfig::new(20_000, 9, n), 0).unwrap();
    let p = 2.0 * lambda / (1.0 + 2.0 * lambda);
    for (m, frac) in level_progression(&samples, &[1, 3, 5, 7, 9]) {
        let want = p.powi((n - m) as i32);
        let se = (want * (1.0 - want) / 20_000.0).sqrt();
        assert!((frac - want).abs() <= 4.0 * se, "m={m}: {frac} vs {want}");
    }
}

/// Eventual level-by-level progression, read as a threshold on the
/// empirical fraction. On the λ = 2 tree the fraction never exceeds 0.8
/// below the absorbing level, see the test above.
#[test]
fn level_progression_reaches_threshold() {
    let n = 12;
    let d = gen_binary_tree(n, 2.0).unwrap();
    let samples = sample_stopping_times(&d, VertexId::ROOT, &WalkConfig::new(5000, 3, n), 0).unwrap();
    let fracs = level_progression(&samples, &(1..n).collect::<Vec<_>>());
    let best = fracs.iter().map(|p| p.1).fold(0.0f64, f64::max);
    assert!(best >= 0.99, "largest fraction over m is {best:.4}: {fracs:?}");
}

#[test]
fn lattice_extraction_keeps_every_sphere() {
    let r = 6;
    let (g, pts) = lattice_ball(r);
    let index = |p: (i64, i64)| pts.iter().position(|&q| q == p).unwrap();
    let ray: Vec<usize> = (0..=r as i64).map(|x| index((x, 0))).collect();
    let ex = extract_maximal_bratteli(&g, &ray, r).unwrap();
    // In ℤ² two points at the same ℓ¹ distance from the origin are never
    // adjacent, so nothing is blocked and level n is the whole sphere
    // (the outermost one is kept because the ball ends there).
    for (n, level) in ex.levels.iter().enumerate() {
        let sphere: Vec<usize> =
            (0..pts.len()).filter(|&v| (pts[v].0.abs() + pts[v].1.abs()) as usize == n).collect();
        for &a in &sphere {
            for &b in &sphere {
                assert!(g.edge(a, b).is_none());
            }
        }
        assert_eq!(level, &sphere);
    }
    assert!(validate(&ex.diagram).is_empty());
}

#[test]
fn extraction_of_a_diagram_is_the_diagram() {
    let g = ladder_graph(6);
    let ray: Vec<usize> = (0..=6).map(|k| 2 * k).collect();
    let ex = extract_maximal_bratteli(&g, &ray, 6).unwrap();
    let (d, _) = to_diagram(&g, 0, 6).unwrap();
    assert_eq!(ex.diagram.level_sizes(), d.level_sizes());
    assert!(ex.blocked.is_empty());
    let diag = ladder_with_diagonals(6);
    let ex = extract_maximal_bratteli(&diag, &ray, 6).unwrap();
    assert!(ex.diagram.level_sizes().iter().all(|&s| s == 1));
}

#[test]
fn monopole_differences_are_dipoles() {
    let depth = 8;
    let d = gen_binary_tree(depth, 2.0).unwrap();
    let x = VertexId::new(3, 4);
    let (wx, _) = solve_monopole(&d, x, depth, &Mode::Grounded, DEFAULT_TOL).unwrap();
    let (wo, _) = solve_monopole(&d, VertexId::ROOT, depth, &Mode::Grounded, DEFAULT_TOL).unwrap();
    let v = wx.sub(&wo);
    let res = laplacian_residuals(&d, &v, &[(x, 1.0), (VertexId::ROOT, -1.0)]).unwrap();
    assert!(res.iter().all(|&r| r < 1e-9), "{res:?}");
}

#[test]
fn multipole_examples() {
    let n = 7;
    let d = gen_binary_tree(n, 2.0).unwrap();
    let (x0, a, b) = (VertexId::new(2, 0), VertexId::new(3, 5), VertexId::new(1, 1));
    let v = multipole(&d, x0, &[(a, 0.5), (b, 0.5)], n).unwrap();
    let src = [(x0, 1.0), (a, -0.5), (b, -0.5)];
    assert!(interior_residual(&d, &v, &src, n).unwrap() < 1e-9);
    let single = multipole(&d, x0, &[(a, 1.0)], n).unwrap();
    let dip = bratnet::pathspace::dipole_green(&d, x0, a, n).unwrap();
    assert!(single.sub(&dip).max_abs() < 1e-12);
    assert!(multipole(&d, x0, &[(a, 0.7), (b, 0.7)], n).is_err());
}

#[test]
fn resistance_is_a_metric_on_tree_triples() {
    let n = 9;
    let d = gen_binary_tree(n, 2.0).unwrap();
    let vs = [VertexId::ROOT, VertexId::new(1, 1), VertexId::new(3, 0), VertexId::new(3, 7), VertexId::new(5, 12)];
    let mut r = vec![vec![0.0; vs.len()]; vs.len()];
    for i in 0..vs.len() {
        for j in 0..vs.len() {
            r[i][j] = resistance_distance(&d, vs[i], vs[j], n).unwrap();
        }
    }
    for i in 0..vs.len() {
        assert_eq!(r[i][i], 0.0);
        for j in 0..vs.len() {
            assert!((r[i][j] - r[j][i]).abs() < 1e-9);
            if i != j {
                assert!(r[i][j] > 0.0);
            }
            for k in 0..vs.len() {
                assert!(r[i][k] <= r[i][j] + r[j][k] + 1e-9);
            }
        }
    }
}

#[test]
fn interior_energy_formulas_agree() {
    let d = gen_pascal(10, 1.0).unwrap();
    let e = energy_harmonic_formulas(&d, &pascal_h_function(10), 1e-9).unwrap();
    assert!((e.via_markov - e.via_laplacian).abs() < 1e-9);
    assert!((e.via_markov + e.boundary_correction - e.edge_sum).abs() < 1e-9 * e.edge_sum);

    // The stationary diagram with the function the recursion produces.
    let d = gen_stationary(&[vec![1, 1], vec![1, 0]], 12, 2.0).unwrap();
    let (f, _) = solve_levels(&d, &[], &Seed::Given(vec![1.0, -1.0]), 12, &Mode::MinNorm, DEFAULT_TOL).unwrap();
    let tol = 1e-9 * f.max_abs();
    let e = energy_harmonic_formulas(&d, &f, tol).unwrap();
    assert!((e.via_markov - e.via_laplacian).abs() <= 1e-9 * e.edge_sum);
}
