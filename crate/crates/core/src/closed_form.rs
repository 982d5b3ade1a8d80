//! Explicit harmonic functions of the example families, used as
//! regression oracles and as inputs for the energy computations.

use crate::diagram::{tree_ray_class_size, VertexId};
use crate::error::{Error, Result};
use crate::function::LevelFunction;

/// `h(n, i) = n(n+1)/2 − i(n+1)` on the Pascal graph with unit
/// conductance.
pub fn pascal_h(n: usize, i: usize) -> f64 {
    let (n, i) = (n as f64, i as f64);
    n * (n + 1.0) / 2.0 - i * (n + 1.0)
}

/// `pascal_h` on levels `0..=depth`.
pub fn pascal_h_function(depth: usize) -> LevelFunction {
    LevelFunction::from_levels((0..=depth).map(|n| (0..=n).map(|i| pascal_h(n, i)).collect()).collect())
}

/// One value per level, `h(n, 0)` for `n = 2..=depth`, which fixes the
/// free parameter of every level step.
pub fn pascal_pins(depth: usize) -> Vec<(VertexId, f64)> {
    (2..=depth).map(|n| (VertexId::new(n, 0), pascal_h(n, 0))).collect()
}

/// Value on the leftmost path of the tree function with seed
/// `(λ, −λ)`: `(1 + λ + … + λ^{n−1}) / λ^{n−2}` at level `n ≥ 1`, and 0
/// at the root.
pub fn tree_path_value(n: usize, lambda: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let s: f64 = (0..n).map(|k| lambda.powi(k as i32)).sum();
    s / lambda.powi(n as i32 - 2)
}

/// The symmetric tree function on the full binary tree: leftmost path
/// values as above, every subtree hanging off the path constant and equal
/// to the value at its attachment point, and the right half the negative
/// mirror image.
pub fn tree_f_lambda(depth: usize, lambda: f64) -> Result<LevelFunction> {
    if depth > 26 {
        return Err(Error::InvalidParameter(format!("depth {depth} is too large for the full tree")));
    }
    let mut levels = vec![vec![0.0]];
    for n in 1..=depth {
        let size = 1usize << n;
        let half = size / 2;
        let mut v = vec![0.0; size];
        for i in 0..half {
            let val = if i == 0 {
                tree_path_value(n, lambda)
            } else {
                // i ∈ [2^m, 2^{m+1}) lies in the subtree attached at level n−1−m.
                let m = usize::BITS as usize - 1 - i.leading_zeros() as usize;
                tree_path_value(n - 1 - m, lambda)
            };
            v[i] = val;
            v[size - 1 - i] = -val;
        }
        levels.push(v);
    }
    Ok(LevelFunction::from_levels(levels))
}

/// Pins that single out the symmetric tree function: the first off-path
/// child takes the value of its parent on the path, on both halves.
pub fn tree_pins(depth: usize, lambda: f64) -> Vec<(VertexId, f64)> {
    let mut pins = Vec::new();
    for n in 1..depth {
        let v = tree_path_value(n, lambda);
        pins.push((VertexId::new(n + 1, 1), v));
        pins.push((VertexId::new(n + 1, (1usize << (n + 1)) - 2), -v));
    }
    pins
}

/// The symmetric tree function on the ray quotient: on each half, class
/// 0 is the path vertex and class `k` the subtree attached at level `k`.
pub fn tree_quotient_f(depth: usize, lambda: f64) -> LevelFunction {
    let mut levels = vec![vec![0.0]];
    for n in 1..=depth {
        let mut v = vec![0.0; 2 * n];
        for k in 0..n {
            let val = if k == 0 { tree_path_value(n, lambda) } else { tree_path_value(k, lambda) };
            v[k] = val;
            v[n + k] = -val;
        }
        levels.push(v);
    }
    LevelFunction::from_levels(levels)
}

/// Number of tree vertices in each quotient class.
pub fn tree_quotient_weights(depth: usize) -> Vec<Vec<f64>> {
    (0..=depth)
        .map(|n| if n == 0 { vec![1.0] } else { (0..2 * n).map(|i| tree_ray_class_size(n, i)).collect() })
        .collect()
}

/// The stationary formula `f_0 = 0`, `f_{n+1} = f_1 Σ_{i=0}^{n} λ^{−i}`.
pub fn stationary_formula(f1: &[f64], depth: usize, lambda: f64) -> LevelFunction {
    let mut levels = vec![vec![0.0]];
    let mut s = 0.0;
    for n in 0..depth {
        s += lambda.powi(-(n as i32));
        levels.push(f1.iter().map(|v| v * s).collect());
    }
    LevelFunction::from_levels(levels)
}
