#![allow(dead_code)]

use bratnet::diagram::{gen_binary_tree, gen_bottleneck, Diagram, ExtensionRule};
use bratnet::energy::{dissipation_check, kirchhoff_defects, resistance_distance};
use bratnet::operators::{build_level_operators, laplacian_apply, markov_apply, spectral_bound_check};
use bratnet::pathspace::{poisson_kernel, PoissonMethod};
use bratnet::sparse::Csr;
use bratnet::{LevelFunction, VertexId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Exact rank over GF(p), p = 2^61 − 1.
pub mod modp {
    pub const P: u64 = (1 << 61) - 1;

    pub fn mul(a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % P as u128) as u64
    }

    pub fn add(a: u64, b: u64) -> u64 {
        (a + b) % P
    }

    pub fn neg(a: u64) -> u64 {
        (P - a) % P
    }

    pub fn pow(mut a: u64, mut e: u64) -> u64 {
        let mut r = 1;
        while e > 0 {
            if e & 1 == 1 {
                r = mul(r, a);
            }
            a = mul(a, a);
            e >>= 1;
        }
        r
    }

    pub fn inv(a: u64) -> u64 {
        pow(a, P - 2)
    }

    /// The residue of the rational number a finite double represents
    /// exactly.
    pub fn from_f64(x: f64) -> u64 {
        assert!(x.is_finite());
        if x == 0.0 {
            return 0;
        }
        let bits = x.abs().to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1 << 52) - 1);
        let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1 << 52), exp - 1075) };
        let m = mant % P;
        let scale = if e >= 0 { pow(2, e as u64) } else { inv(pow(2, (-e) as u64)) };
        let v = mul(m, scale);
        if x < 0.0 {
            neg(v)
        } else {
            v
        }
    }

    pub fn rank(mut rows: Vec<Vec<u64>>) -> usize {
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut r = 0;
        for c in 0..ncols {
            let Some(p) = (r..rows.len()).find(|&i| rows[i][c] != 0) else { continue };
            rows.swap(r, p);
            let iv = inv(rows[r][c]);
            for v in rows[r].iter_mut() {
                *v = mul(*v, iv);
            }
            for i in 0..rows.len() {
                if i != r && rows[i][c] != 0 {
                    let f = rows[i][c];
                    for k in c..ncols {
                        let t = mul(f, rows[r][k]);
                        rows[i][k] = add(rows[i][k], neg(t));
                    }
                }
            }
            r += 1;
        }
        r
    }
}

/// Stacked harmonicity constraints on levels `0..n` for unknowns on levels
/// `1..=n` (`f(o) = 0`), over GF(p). Columns for `V_1` come first.
pub fn stacked_constraints(d: &Diagram, n: usize) -> Vec<Vec<u64>> {
    let mut offset = vec![0usize; n + 1];
    for k in 1..n {
        offset[k + 1] = offset[k] + d.level_size(k);
    }
    let ncols = offset[n] + d.level_size(n);
    let col = |v: VertexId| (v.level > 0).then(|| offset[v.level] + v.index);
    let mut rows = Vec::new();
    for level in 0..n {
        for i in 0..d.level_size(level) {
            let x = VertexId::new(level, i);
            let mut row = vec![0u64; ncols];
            let mut cx = 0u64;
            for (y, c) in d.neighbors(x) {
                let w = modp::from_f64(c);
                cx = modp::add(cx, w);
                if let Some(j) = col(y) {
                    row[j] = modp::add(row[j], modp::neg(w));
                }
            }
            if let Some(j) = col(x) {
                row[j] = modp::add(row[j], cx);
            }
            rows.push(row);
        }
    }
    rows
}

/// `(prefix nullity, seed dimension)` of the stacked system at depth `n`.
pub fn oracle_dimensions(d: &Diagram, n: usize) -> (usize, usize) {
    let rows = stacked_constraints(d, n);
    let ncols = rows[0].len();
    let nullity = ncols - modp::rank(rows.clone());
    let v1 = d.level_size(1);
    let reduced: Vec<Vec<u64>> = rows.into_iter().map(|r| r[v1..].to_vec()).collect();
    let nullity_without_seed = if ncols == v1 { 0 } else { (ncols - v1) - modp::rank(reduced) };
    (nullity, nullity - nullity_without_seed)
}

/// Random network of one of three shapes with conductances in `[0.25, 4)`.
pub fn random_network(shape: usize, seed: u64) -> Diagram {
    let base = match shape {
        0 => gen_bottleneck(&[1, 2, 3, 4, 5, 6], seed).unwrap(),
        1 => gen_bottleneck(&[1, 4, 7, 7, 7], seed).unwrap(),
        _ => gen_binary_tree(5, 1.0).unwrap(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let blocks: Vec<Csr> = base
        .blocks()
        .iter()
        .map(|b| {
            let t: Vec<(usize, usize, f64)> =
                b.iter().map(|(i, j, _)| (i, j, rng.random_range(0.25..4.0))).collect();
            Csr::from_triplets(b.nrows(), b.ncols(), &t).unwrap()
        })
        .collect();
    Diagram::new(base.level_sizes().to_vec(), blocks, ExtensionRule::Explicit).unwrap()
}

pub fn random_function(d: &Diagram, rng: &mut ChaCha8Rng) -> LevelFunction {
    let mut f = LevelFunction::zeros_like(d);
    for n in 0..=d.depth() {
        for v in f.level_mut(n).iter_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
    }
    f
}

/// Harmonic on levels `0..N` with random values on the last level.
pub fn random_harmonic(d: &Diagram, rng: &mut ChaCha8Rng) -> LevelFunction {
    let n = d.depth();
    let top: Vec<f64> = (0..d.level_size(n)).map(|_| rng.random_range(-1.0..1.0)).collect();
    poisson_kernel(d, &top, n, &PoissonMethod::Exact).unwrap().values
}

/// Runs every property on one network; returns the failures.
pub fn network_properties(d: &Diagram, seed: u64) -> Vec<String> {
    let mut fails = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ops = build_level_operators(d).unwrap();
    let interior = d.depth();
    let f = random_function(d, &mut rng);
    let h = random_harmonic(d, &mut rng);

    // Δ = c(I − P), P1 = 1, Ph = h, P(f²) ≥ (Pf)².
    let lf = laplacian_apply(&ops, &f).unwrap().values;
    let pf = markov_apply(&ops, &f).unwrap().values;
    let p1 = markov_apply(&ops, &LevelFunction::constant(d, 1.0)).unwrap().values;
    let ph = markov_apply(&ops, &h).unwrap().values;
    let pf2 = markov_apply(&ops, &f.map(|v| v * v)).unwrap().values;
    for n in 0..interior {
        for i in 0..d.level_size(n) {
            let x = VertexId::new(n, i);
            let c = ops.c(n)[i];
            let want = c * (f.get(x) - pf.get(x));
            if (lf.get(x) - want).abs() > 1e-10 * c.max(1.0) {
                fails.push(format!("Δ ≠ c(I−P) at {x}"));
            }
            if (p1.get(x) - 1.0).abs() > 1e-12 {
                fails.push(format!("P1 ≠ 1 at {x}"));
            }
            if (ph.get(x) - h.get(x)).abs() > 1e-10 {
                fails.push(format!("Ph ≠ h at {x}"));
            }
            if pf2.get(x) < pf.get(x).powi(2) - 1e-12 {
                fails.push(format!("P(f²) < (Pf)² at {x}"));
            }
        }
    }

    let spec = spectral_bound_check(&ops, 50, seed).unwrap();
    if spec.max_bound_violation > 1e-12 || spec.max_symmetry_violation > 1e-12 {
        fails.push(format!("spectral bound {:?}", spec));
    }

    let diss = dissipation_check(d, &f).unwrap();
    if diss.relative_error > 1e-12 {
        fails.push(format!("dissipation relative error {:e}", diss.relative_error));
    }

    // Level maxima increase and minima decrease strictly.
    let maxes: Vec<f64> = h.levels().iter().map(|l| l.iter().cloned().fold(f64::MIN, f64::max)).collect();
    let mins: Vec<f64> = h.levels().iter().map(|l| l.iter().cloned().fold(f64::MAX, f64::min)).collect();
    for n in 0..interior {
        if maxes[n + 1] <= maxes[n] || mins[n + 1] >= mins[n] {
            fails.push(format!("max/min not strictly monotone at level {n}"));
        }
    }

    // Current balance: defects vanish for h and equal |Δf| for f.
    let kh = kirchhoff_defects(d, &h).unwrap();
    if kh.iter().any(|&k| k > 1e-9) {
        fails.push(format!("Kirchhoff defects of harmonic function {kh:?}"));
    }
    let kf = kirchhoff_defects(d, &f).unwrap();
    for n in 0..interior {
        let worst = lf.level(n).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if (kf[n] - worst).abs() > 1e-10 * worst.max(1.0) {
            fails.push(format!("Kirchhoff defect {} vs |Δf| {} at level {n}", kf[n], worst));
        }
    }

    // Resistance distance on a few triples.
    let pick = |rng: &mut ChaCha8Rng| {
        let n = rng.random_range(0..interior);
        VertexId::new(n, rng.random_range(0..d.level_size(n)))
    };
    for _ in 0..3 {
        let (x, y, z) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
        if x == y || y == z || x == z {
            continue;
        }
        let dxy = resistance_distance(d, x, y, interior).unwrap();
        let dyx = resistance_distance(d, y, x, interior).unwrap();
        let dyz = resistance_distance(d, y, z, interior).unwrap();
        let dxz = resistance_distance(d, x, z, interior).unwrap();
        if (dxy - dyx).abs() > 1e-9 * dxy.max(1.0) {
            fails.push(format!("dist({x},{y}) = {dxy} but dist({y},{x}) = {dyx}"));
        }
        if dxz > dxy + dyz + 1e-9 {
            fails.push(format!("triangle inequality fails on {x},{y},{z}"));
        }
    }
    fails
}
