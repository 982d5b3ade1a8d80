//! The Laplacian and the Markov operator of the network, in level blocks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagram::{Diagram, VertexId};
use crate::error::{Error, Result};
use crate::function::LevelFunction;
use crate::sparse::Csr;

/// Transition blocks of the random walk on a diagram.
///
/// `back(n)` is `P←_n = C_n / c_n(x)` (to the next level) and `fwd(n)` is
/// `P→_{n-1} = C_{n-1}ᵀ / c_n(x)` (to the previous level). Total
/// conductances at the last level count incoming edges only.
#[derive(Clone, Debug)]
pub struct LevelOperators<'a> {
    diagram: &'a Diagram,
    c: Vec<Vec<f64>>,
    back: Vec<Csr>,
    fwd: Vec<Csr>,
}

/// Output of an operator together with the levels on which it is fully
/// determined. The last stored level is never valid: its value would need
/// the next level.
#[derive(Clone, Debug, PartialEq)]
pub struct Masked {
    pub values: LevelFunction,
    pub valid: Vec<bool>,
}

/// Builds the transition blocks. Fails on a vertex of zero total
/// conductance.
pub fn build_level_operators(d: &Diagram) -> Result<LevelOperators<'_>> {
    let c = d.total_conductance();
    for (n, level) in c.iter().enumerate() {
        if let Some(i) = level.iter().position(|&v| v <= 0.0) {
            return Err(Error::IsolatedVertex(VertexId::new(n, i)));
        }
    }
    let back = (0..d.depth()).map(|n| d.conductance(n).row_scaled_inv(&c[n])).collect();
    let fwd = (1..=d.depth())
        .map(|n| d.conductance(n - 1).transpose().row_scaled_inv(&c[n]))
        .collect();
    Ok(LevelOperators { diagram: d, c, back, fwd })
}

impl<'a> LevelOperators<'a> {
    pub fn diagram(&self) -> &'a Diagram {
        self.diagram
    }

    pub fn depth(&self) -> usize {
        self.diagram.depth()
    }

    /// `c_n(x)` for every vertex of level `n`.
    pub fn c(&self, n: usize) -> &[f64] {
        &self.c[n]
    }

    pub fn all_c(&self) -> &[Vec<f64>] {
        &self.c
    }

    /// `P←_n`, `|V_n| × |V_{n+1}|`, for `n < N`.
    pub fn back(&self, n: usize) -> &Csr {
        &self.back[n]
    }

    /// `P→_{n-1}`, `|V_n| × |V_{n-1}|`, for `1 ≤ n ≤ N`.
    pub fn fwd(&self, n: usize) -> &Csr {
        &self.fwd[n - 1]
    }

    /// Largest deviation of `P→_{n-1} 1 + P←_n 1` from 1 over interior
    /// vertices (root included).
    pub fn stochastic_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for n in 0..self.depth() {
            let mut s = self.back[n].row_sums();
            if n > 0 {
                for (a, b) in s.iter_mut().zip(self.fwd(n).row_sums()) {
                    *a += b;
                }
            }
            worst = s.iter().fold(worst, |w, v| w.max((v - 1.0).abs()));
        }
        worst
    }

    /// `⟨u, v⟩_{l²(c)} = Σ c(x) u(x) v(x)` over all stored levels.
    pub fn inner_c(&self, u: &LevelFunction, v: &LevelFunction) -> f64 {
        let mut s = 0.0;
        for (n, c) in self.c.iter().enumerate() {
            for i in 0..c.len() {
                s += c[i] * u.level(n)[i] * v.level(n)[i];
            }
        }
        s
    }
}

fn mask(depth: usize) -> Vec<bool> {
    (0..=depth).map(|n| n < depth).collect()
}

/// `(Δf)_n = D_n f_n − C_{n-1}ᵀ f_{n-1} − C_n f_{n+1}`.
pub fn laplacian_apply(ops: &LevelOperators<'_>, f: &LevelFunction) -> Result<Masked> {
    let d = ops.diagram;
    f.check_shape(d, d.depth() + 1)?;
    let n_max = d.depth();
    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let mut v: Vec<f64> = ops.c[n].iter().zip(f.level(n)).map(|(c, x)| c * x).collect();
        if n > 0 {
            let up = d.conductance(n - 1).tmul_vec(f.level(n - 1));
            v.iter_mut().zip(up).for_each(|(a, b)| *a -= b);
        }
        if n < n_max {
            let down = d.conductance(n).mul_vec(f.level(n + 1));
            v.iter_mut().zip(down).for_each(|(a, b)| *a -= b);
        }
        out.push(v);
    }
    Ok(Masked { values: LevelFunction::from_levels(out), valid: mask(n_max) })
}

/// `(Pf)_n = P→_{n-1} f_{n-1} + P←_n f_{n+1}`.
pub fn markov_apply(ops: &LevelOperators<'_>, f: &LevelFunction) -> Result<Masked> {
    let d = ops.diagram;
    f.check_shape(d, d.depth() + 1)?;
    let n_max = d.depth();
    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let mut v = vec![0.0; d.level_size(n)];
        if n > 0 {
            let up = ops.fwd(n).mul_vec(f.level(n - 1));
            v.iter_mut().zip(up).for_each(|(a, b)| *a += b);
        }
        if n < n_max {
            let down = ops.back[n].mul_vec(f.level(n + 1));
            v.iter_mut().zip(down).for_each(|(a, b)| *a += b);
        }
        out.push(v);
    }
    Ok(Masked { values: LevelFunction::from_levels(out), valid: mask(n_max) })
}

/// Result of [`spectral_bound_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralReport {
    pub trials: usize,
    /// Largest `max(0, |⟨u,Pu⟩| − ‖u‖²) / ‖u‖²`.
    pub max_bound_violation: f64,
    /// Largest `|⟨u,Pv⟩ − ⟨Pu,v⟩| / (‖u‖‖v‖)`.
    pub max_symmetry_violation: f64,
}

/// Checks `−‖u‖² ≤ ⟨u,Pu⟩ ≤ ‖u‖²` and `⟨u,Pv⟩ = ⟨Pu,v⟩` in `l²(c)` for
/// random `u, v` supported below the last level.
pub fn spectral_bound_check(ops: &LevelOperators<'_>, trials: usize, seed: u64) -> Result<SpectralReport> {
    let d = ops.diagram;
    if d.depth() < 2 {
        return Err(Error::InvalidParameter("spectral check needs at least three levels".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random_fn = |rng: &mut ChaCha8Rng| {
        let mut f = LevelFunction::zeros_like(d);
        for n in 0..d.depth() {
            for v in f.level_mut(n).iter_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
        }
        f
    };
    let mut rep = SpectralReport { trials, max_bound_violation: 0.0, max_symmetry_violation: 0.0 };
    for _ in 0..trials {
        let u = random_fn(&mut rng);
        let v = random_fn(&mut rng);
        let pu = markov_apply(ops, &u)?.values;
        let pv = markov_apply(ops, &v)?.values;
        let nu = ops.inner_c(&u, &u);
        let nv = ops.inner_c(&v, &v);
        let upu = ops.inner_c(&u, &pu);
        rep.max_bound_violation = rep.max_bound_violation.max((upu.abs() - nu).max(0.0) / nu);
        let asym = (ops.inner_c(&u, &pv) - ops.inner_c(&pu, &v)).abs() / (nu * nv).sqrt();
        rep.max_symmetry_violation = rep.max_symmetry_violation.max(asym);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::{gen_binary_tree, gen_pascal, gen_stationary};

    #[test]
    fn pascal_back_pattern() {
        // c(n,0) = λ^{n-1} + 2λ^n and c(n,i) = 2λ^{n-1} + 2λ^n inside, so the
        // rows of P←_n carry λ/(1+2λ) at the ends and λ/(2+2λ) elsewhere.
        let lam = 2.0;
        let d = gen_pascal(5, lam).unwrap();
        let ops = build_level_operators(&d).unwrap();
        for n in 1..5 {
            let p = ops.back(n).to_dense();
            for i in 0..=n {
                let expect = if i == 0 || i == n { lam / (1.0 + 2.0 * lam) } else { lam / (2.0 + 2.0 * lam) };
                assert!((p[i][i] - expect).abs() < 1e-15);
                assert!((p[i][i + 1] - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn tree_back_rows() {
        let d = gen_binary_tree(4, 3.0).unwrap();
        let ops = build_level_operators(&d).unwrap();
        for n in 1..4 {
            for i in 0..d.level_size(n) {
                let row: Vec<f64> = ops.back(n).row(i).map(|(_, v)| v).collect();
                assert_eq!(row.len(), 2);
                assert_eq!(row[0], row[1]);
                let expect = 3f64.powi(n as i32) * 2.0 / ops.c(n)[i];
                assert!((row[0] + row[1] - expect).abs() < 1e-15);
            }
        }
        assert!(ops.stochastic_defect() < 1e-15);
    }

    #[test]
    fn stationary_regular() {
        let d = gen_stationary(&[vec![1, 1], vec![1, 1]], 4, 1.0).unwrap();
        let ops = build_level_operators(&d).unwrap();
        for n in 2..4 {
            assert!(ops.c(n).iter().all(|&c| c == 4.0));
            assert!(ops.back(n).values().iter().all(|&p| p == 0.25));
            assert!(ops.fwd(n).values().iter().all(|&p| p == 0.25));
        }
    }

    #[test]
    fn laplacian_of_root_delta() {
        let d = gen_binary_tree(3, 1.0).unwrap();
        let ops = build_level_operators(&d).unwrap();
        let f = LevelFunction::delta(&d, VertexId::ROOT);
        let lf = laplacian_apply(&ops, &f).unwrap();
        assert_eq!(lf.values.level(0), &[2.0]);
        assert_eq!(lf.values.level(1), &[-1.0, -1.0]);
        assert_eq!(lf.valid, vec![true, true, true, false]);
        let one = LevelFunction::constant(&d, 1.0);
        let l1 = laplacian_apply(&ops, &one).unwrap();
        for n in 0..3 {
            assert!(l1.values.level(n).iter().all(|&v| v == 0.0));
        }
        let p1 = markov_apply(&ops, &one).unwrap();
        for n in 0..3 {
            assert!(p1.values.level(n).iter().all(|&v| (v - 1.0).abs() < 1e-15));
        }
    }

    #[test]
    fn delta_has_zero_self_loop() {
        let d = gen_pascal(5, 1.0).unwrap();
        let ops = build_level_operators(&d).unwrap();
        let x = VertexId::new(2, 1);
        let u = LevelFunction::delta(&d, x);
        let pu = markov_apply(&ops, &u).unwrap().values;
        assert_eq!(ops.inner_c(&u, &pu), 0.0);
        assert!(ops.inner_c(&u, &u) <= ops.c(2)[1]);
    }
}
