//! Harmonic functions, monopoles and dipoles built level by level.
//!
//! A function with `f(o) = 0` is harmonic on the prefix exactly when
//! `P←_n f_{n+1} = f_n − P→_{n-1} f_{n-1}` holds at every interior level, so
//! it can be grown one level at a time. Each step is a small linear system
//! that splits into connected components of the bipartite graph between
//! `V_n` and `V_{n+1}`.

use std::collections::BTreeMap;

use faer::Mat;

use crate::dense::{self, Lu};
use crate::diagram::{Diagram, VertexId};
use crate::error::{Error, Result};
use crate::function::LevelFunction;
use crate::sparse::Csr;

/// Default absolute tolerance for consistency decisions.
pub const DEFAULT_TOL: f64 = 1e-9;

/// How an underdetermined level step picks its representative.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum Mode {
    /// Minimum-norm solution of each step.
    #[default]
    MinNorm,
    /// Least-squares solution (minimum norm among minimizers); identical
    /// to `MinNorm` on consistent steps.
    LeastSquares,
    /// Fix the listed vertices, minimum norm on the rest.
    Pinned(Vec<(VertexId, f64)>),
    /// Choose all free parameters at once so that the last level is an
    /// equipotential. This selects the solution that agrees, up to a
    /// constant, with the one grounded at the last level.
    Grounded,
}

impl Mode {
    fn pins_at(&self, level: usize) -> Vec<(usize, f64)> {
        match self {
            Mode::Pinned(p) => p.iter().filter(|(v, _)| v.level == level).map(|(v, x)| (v.index, *x)).collect(),
            _ => Vec::new(),
        }
    }
}

/// Per-level outcome of a solve or check.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    /// Residual per constraint level (index = level of the constraint).
    pub residuals: Vec<f64>,
    /// Dimension of the solution set of each level step, when a step was
    /// solved (`None` for pure checks).
    pub solution_dims: Vec<Option<usize>>,
    pub tol: f64,
    /// True iff every residual is at most `tol`.
    pub consistent: bool,
}

impl SolveReport {
    fn new(residuals: Vec<f64>, solution_dims: Vec<Option<usize>>, tol: f64) -> Self {
        let consistent = residuals.iter().all(|&r| r <= tol);
        SolveReport { residuals, solution_dims, tol, consistent }
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, &r| m.max(r))
    }

    /// First level whose residual exceeds the tolerance.
    pub fn first_inconsistent(&self) -> Option<usize> {
        self.residuals.iter().position(|&r| r > self.tol)
    }
}

/// Residuals of `Δf = g` at interior levels `0..N−1`:
/// `‖D_n f_n − C_{n-1}ᵀ f_{n-1} − C_n f_{n+1} − g_n‖_∞`.
pub fn laplacian_residuals(d: &Diagram, f: &LevelFunction, source: &[(VertexId, f64)]) -> Result<Vec<f64>> {
    f.check_shape(d, d.depth() + 1)?;
    let c = d.total_conductance();
    let mut out = Vec::with_capacity(d.depth());
    for n in 0..d.depth() {
        let mut r: Vec<f64> = c[n].iter().zip(f.level(n)).map(|(c, x)| c * x).collect();
        if n > 0 {
            let up = d.conductance(n - 1).tmul_vec(f.level(n - 1));
            r.iter_mut().zip(up).for_each(|(a, b)| *a -= b);
        }
        let down = d.conductance(n).mul_vec(f.level(n + 1));
        r.iter_mut().zip(down).for_each(|(a, b)| *a -= b);
        for &(x, g) in source {
            if x.level == n {
                r[x.index] -= g;
            }
        }
        out.push(r.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    Ok(out)
}

/// Checks `Δf = 0` on every interior level, the root included.
pub fn harmonicity_check(d: &Diagram, f: &LevelFunction, tol: f64) -> Result<SolveReport> {
    source_check(d, f, &[], tol)
}

/// Checks `Δf = g` on every interior level for a sparse source `g`.
pub fn source_check(d: &Diagram, f: &LevelFunction, source: &[(VertexId, f64)], tol: f64) -> Result<SolveReport> {
    let r = laplacian_residuals(d, f, source)?;
    let dims = vec![None; r.len()];
    Ok(SolveReport::new(r, dims, tol))
}

/// Connected components of the bipartite graph of a block: pairs of
/// (row indices, column indices), ordered by their smallest row.
pub fn block_components(block: &Csr) -> Vec<(Vec<usize>, Vec<usize>)> {
    let (m, n) = (block.nrows(), block.ncols());
    let mut parent: Vec<usize> = (0..m + n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (i, j, _) in block.iter() {
        let (a, b) = (find(&mut parent, i), find(&mut parent, m + j));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for i in 0..m {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().0.push(i);
    }
    for j in 0..n {
        let r = find(&mut parent, m + j);
        groups.entry(r).or_default().1.push(j);
    }
    groups.into_values().collect()
}

/// One connected piece of a level step `P x = b`.
struct Piece {
    rows: Vec<usize>,
    /// Free (unpinned) columns.
    cols: Vec<usize>,
    /// Pinned columns with their conductances, `(col, [(row position, c)])`.
    pinned: Vec<(usize, Vec<(usize, f64)>)>,
    /// Pseudo-inverse, `|cols| × |rows|`.
    pinv: Mat<f64>,
    /// Orthonormal null-space basis, `|cols| × k`.
    null: Mat<f64>,
    /// Orthonormal basis of the left null space, `|rows| × r`: `wᵀ b = 0`
    /// is required for consistency.
    left_null: Mat<f64>,
    /// Dense sub-matrix of `P←` on (rows, free cols).
    a: Mat<f64>,
    /// LU of the conductance sub-matrix when the piece is square and
    /// nonsingular. Solving with raw conductances keeps integer data
    /// integer, which matters because the recursion amplifies rounding by
    /// roughly `max c(x) / min c_xy` per level.
    exact: Option<Lu>,
}

/// The level step `P←_n x = b` cut into components, with pinned columns
/// removed and every component pre-factored.
struct LevelMap {
    pieces: Vec<Piece>,
    ncols: usize,
    pin_values: Vec<(usize, f64)>,
    /// `c_n(x)`, the row scaling between `C_n` and `P←_n`.
    scale: Vec<f64>,
}

impl LevelMap {
    fn new(block: &Csr, scale: &[f64], pins: &[(usize, f64)]) -> Self {
        let mut pinned_col = vec![false; block.ncols()];
        for &(j, _) in pins {
            pinned_col[j] = true;
        }
        let mut pieces = Vec::new();
        for (rows, cols) in block_components(block) {
            let free: Vec<usize> = cols.iter().copied().filter(|&j| !pinned_col[j]).collect();
            let mut pos = vec![usize::MAX; block.ncols()];
            for (k, &j) in free.iter().enumerate() {
                pos[j] = k;
            }
            let mut raw = Mat::<f64>::zeros(rows.len(), free.len());
            let mut pinned: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
            for (ri, &i) in rows.iter().enumerate() {
                for (j, v) in block.row(i) {
                    if pinned_col[j] {
                        pinned.entry(j).or_default().push((ri, v));
                    } else {
                        raw[(ri, pos[j])] = v;
                    }
                }
            }
            let a = Mat::<f64>::from_fn(rows.len(), free.len(), |ri, k| raw[(ri, k)] / scale[rows[ri]]);
            let (pinv, null, left_null) = factor_piece(&a);
            let square = rows.len() == free.len() && null.ncols() == 0 && left_null.ncols() == 0;
            let exact = (square && !free.is_empty()).then(|| Lu::new(&raw));
            pieces.push(Piece { rows, cols: free, pinned: pinned.into_iter().collect(), pinv, null, left_null, a, exact });
        }
        LevelMap { pieces, ncols: block.ncols(), pin_values: pins.to_vec(), scale: scale.to_vec() }
    }

    fn nullity(&self) -> usize {
        self.pieces.iter().map(|p| p.null.ncols()).sum()
    }

    fn pin_value(&self, col: usize) -> f64 {
        self.pin_values.iter().find(|p| p.0 == col).map(|p| p.1).unwrap()
    }

    /// Min-norm solve of every piece for the unscaled right-hand side
    /// `raw = c ⊙ b`; returns (x, residual ‖P x − b‖_∞).
    fn solve(&self, raw: &[f64], params: Option<&[f64]>) -> (Vec<f64>, f64) {
        let mut x = vec![0.0; self.ncols];
        for &(j, v) in &self.pin_values {
            x[j] = v;
        }
        let mut worst: f64 = 0.0;
        let mut k0 = 0;
        for p in &self.pieces {
            let mut rhs: Vec<f64> = p.rows.iter().map(|&i| raw[i]).collect();
            for (j, entries) in &p.pinned {
                let v = self.pin_value(*j);
                for &(ri, c) in entries {
                    rhs[ri] -= c * v;
                }
            }
            let scaled: Vec<f64> = rhs.iter().zip(&p.rows).map(|(r, &i)| r / self.scale[i]).collect();
            let mut sol = match &p.exact {
                Some(lu) => lu.solve(&rhs),
                None => dense::mat_vec(&p.pinv, &scaled),
            };
            if let Some(z) = params {
                for k in 0..p.null.ncols() {
                    for (s, row) in sol.iter_mut().zip(0..) {
                        *s += p.null[(row, k)] * z[k0 + k];
                    }
                }
            }
            k0 += p.null.ncols();
            worst = worst.max(dense::residual_inf(&p.a, &sol, &scaled));
            for (k, &j) in p.cols.iter().enumerate() {
                x[j] = sol[k];
            }
        }
        (x, worst)
    }
}

fn factor_piece(a: &Mat<f64>) -> (Mat<f64>, Mat<f64>, Mat<f64>) {
    let (m, n) = (a.nrows(), a.ncols());
    if n == 0 {
        return (Mat::zeros(0, m), Mat::zeros(0, 0), Mat::identity(m, m));
    }
    if m == 1 {
        // A single row p: pinv = pᵀ/‖p‖², null = complement of p.
        let nrm2: f64 = (0..n).map(|j| a[(0, j)] * a[(0, j)]).sum();
        let pinv = Mat::from_fn(n, 1, |j, _| a[(0, j)] / nrm2);
        let null = dense::null_space(a);
        return (pinv, null, Mat::zeros(1, 0));
    }
    let svd = a.svd().expect("svd converges");
    let k = m.min(n);
    let s: Vec<f64> = (0..k).map(|i| svd.S().column_vector()[i]).collect();
    let smax = s.iter().fold(0.0f64, |x, &v| x.max(v));
    let r = s.iter().filter(|&&v| smax > 0.0 && v > dense::RANK_RTOL * smax).count();
    let (u, v) = (svd.U(), svd.V());
    let pinv = Mat::from_fn(n, m, |j, i| (0..r).map(|t| v[(j, t)] * u[(i, t)] / s[t]).sum());
    let null = Mat::from_fn(n, n - r, |j, t| v[(j, r + t)]);
    let left_null = Mat::from_fn(m, m - r, |i, t| u[(i, r + t)]);
    (pinv, null, left_null)
}

/// Right-hand side of the level-`n` step:
/// `f_n − P→_{n-1} f_{n-1} − g_n / c_n`.
fn step_rhs(d: &Diagram, c: &[Vec<f64>], n: usize, prev: Option<&[f64]>, cur: &[f64], src: &[(VertexId, f64)]) -> Vec<f64> {
    let mut b = cur.to_vec();
    if let Some(p) = prev {
        let up = d.conductance(n - 1).tmul_vec(p);
        for i in 0..b.len() {
            b[i] -= up[i] / c[n][i];
        }
    }
    for &(x, g) in src {
        if x.level == n {
            b[x.index] -= g / c[n][x.index];
        }
    }
    b
}

/// The level-`n` step in conductance form:
/// `D_n f_n − C_{n-1}ᵀ f_{n-1} − g_n`.
fn step_rhs_raw(d: &Diagram, c: &[Vec<f64>], n: usize, prev: Option<&[f64]>, cur: &[f64], src: &[(VertexId, f64)]) -> Vec<f64> {
    let mut b: Vec<f64> = cur.iter().zip(&c[n]).map(|(f, cx)| cx * f).collect();
    if let Some(p) = prev {
        let up = d.conductance(n - 1).tmul_vec(p);
        for i in 0..b.len() {
            b[i] -= up[i];
        }
    }
    for &(x, g) in src {
        if x.level == n {
            b[x.index] -= g;
        }
    }
    b
}

fn level_map(d: &Diagram, c: &[Vec<f64>], n: usize, pins: &[(usize, f64)]) -> LevelMap {
    LevelMap::new(d.conductance(n), &c[n], pins)
}

fn back_block(d: &Diagram, c: &[Vec<f64>], n: usize) -> Csr {
    d.conductance(n).row_scaled_inv(&c[n])
}

fn check_conductance(d: &Diagram, c: &[Vec<f64>]) -> Result<()> {
    for (n, level) in c.iter().enumerate().take(d.depth()) {
        if let Some(i) = level.iter().position(|&v| v <= 0.0) {
            return Err(Error::IsolatedVertex(VertexId::new(n, i)));
        }
    }
    Ok(())
}

/// Solves one level of the recursion: given `f_0, …, f_n` (a prefix with
/// `n + 1` levels), returns `f_{n+1}` with
/// `P←_n f_{n+1} = f_n − P→_{n-1} f_{n-1}`. The report carries the step
/// residual (in the `P←` scaling) and the dimension of its solution set.
pub fn extend_harmonic(d: &Diagram, prefix: &LevelFunction, mode: &Mode, tol: f64) -> Result<(Vec<f64>, SolveReport)> {
    let n = prefix.num_levels().checked_sub(1).ok_or_else(|| Error::Dimension("empty prefix".into()))?;
    if n >= d.depth() {
        return Err(Error::Dimension(format!("prefix reaches level {n}, diagram depth is {}", d.depth())));
    }
    prefix.check_shape(d, n + 1)?;
    if *mode == Mode::Grounded {
        return Err(Error::InvalidParameter("grounded mode needs the whole prefix; use solve_levels".into()));
    }
    let c = d.total_conductance();
    check_conductance(d, &c)?;
    let prev = if n > 0 { Some(prefix.level(n - 1)) } else { None };
    let raw = step_rhs_raw(d, &c, n, prev, prefix.level(n), &[]);
    let map = level_map(d, &c, n, &mode.pins_at(n + 1));
    let (x, res) = map.solve(&raw, None);
    Ok((x, SolveReport::new(vec![res], vec![Some(map.nullity())], tol)))
}

/// How the first level is obtained.
#[derive(Clone, Debug, PartialEq)]
pub enum Seed {
    /// Use this `f_1`.
    Given(Vec<f64>),
    /// Solve the root equation with the mode (pins at level 1 apply).
    Solve,
    /// The normalized projection of the first unit vector of `V_1` onto
    /// the solution set of the root equation.
    Auto,
}

/// Runs the level recursion for `Δf = g` up to `depth` levels with
/// `f(o) = 0`.
///
/// With a harmonic source (empty `source`) the seed decides the function;
/// the recursion is then extended by the mode at every level. The report
/// holds the per-step residuals in the `P←` scaling (`residuals[n]` for the
/// step at level `n`).
pub fn solve_levels(
    d: &Diagram,
    source: &[(VertexId, f64)],
    seed: &Seed,
    depth: usize,
    mode: &Mode,
    tol: f64,
) -> Result<(LevelFunction, SolveReport)> {
    if depth == 0 || depth > d.depth() {
        return Err(Error::InvalidParameter(format!("depth {depth} must lie in 1..={}", d.depth())));
    }
    for &(x, _) in source {
        d.check_vertex(x)?;
        if x.level >= depth {
            return Err(Error::InvalidParameter(format!("source vertex {x} is not below level {depth}")));
        }
    }
    let c = d.total_conductance();
    check_conductance(d, &c)?;
    if *mode == Mode::Grounded {
        return solve_grounded(d, &c, source, depth, tol);
    }
    let mut f = LevelFunction::from_levels(vec![vec![0.0]]);
    let mut residuals = Vec::with_capacity(depth);
    let mut dims = Vec::with_capacity(depth);
    for n in 0..depth {
        let prev = if n > 0 { Some(f.level(n - 1)) } else { None };
        let raw = step_rhs_raw(d, &c, n, prev, f.level(n), source);
        let b: Vec<f64> = raw.iter().zip(&c[n]).map(|(r, cx)| r / cx).collect();
        let back = back_block(d, &c, n);
        let next = if n == 0 && !matches!(seed, Seed::Solve) {
            let x = match seed {
                Seed::Given(v) => {
                    if v.len() != d.level_size(1) {
                        return Err(Error::Dimension(format!(
                            "seed has {} values, level 1 has {}",
                            v.len(),
                            d.level_size(1)
                        )));
                    }
                    v.clone()
                }
                _ => auto_seed(d, &c, &raw),
            };
            let r = back.mul_vec(&x).iter().zip(&b).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
            residuals.push(r);
            dims.push(None);
            x
        } else {
            let map = level_map(d, &c, n, &mode.pins_at(n + 1));
            let (x, r) = map.solve(&raw, None);
            residuals.push(r);
            dims.push(Some(map.nullity()));
            x
        };
        f.push_level(next);
    }
    Ok((f, SolveReport::new(residuals, dims, tol)))
}

fn auto_seed(d: &Diagram, c: &[Vec<f64>], raw: &[f64]) -> Vec<f64> {
    let map = level_map(d, c, 0, &[]);
    let (part, _) = map.solve(raw, None);
    let p = &map.pieces[0];
    let n = map.ncols;
    // Project e_0 onto the null space of the root row.
    let mut v = vec![0.0; n];
    for k in 0..p.null.ncols() {
        let coef = p.null[(0, k)];
        for j in 0..n {
            v[j] += coef * p.null[(j, k)];
        }
    }
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale > 0.0 {
        v.iter_mut().for_each(|x| *x /= scale);
    }
    v.iter().zip(part).map(|(a, b)| a + b).collect()
}

/// Affine parameterization of one level, `f = G z + g` for all parameters
/// introduced so far.
struct Affine {
    g: Vec<f64>,
    /// `|V| × p`, row-major rows of length `p` (padded when `p` grows).
    m: Vec<Vec<f64>>,
}

fn solve_grounded(
    d: &Diagram,
    c: &[Vec<f64>],
    source: &[(VertexId, f64)],
    depth: usize,
    tol: f64,
) -> Result<(LevelFunction, SolveReport)> {
    let maps: Vec<LevelMap> = (0..depth).map(|n| level_map(d, c, n, &[])).collect();
    let offsets: Vec<usize> = maps
        .iter()
        .scan(0usize, |acc, m| {
            let o = *acc;
            *acc += m.nullity();
            Some(o)
        })
        .collect();
    let p: usize = maps.iter().map(LevelMap::nullity).sum();
    // Forward pass over the affine parameterization, collecting the
    // consistency conditions of every step.
    let mut cons_rows: Vec<Vec<f64>> = Vec::new();
    let mut cons_rhs: Vec<f64> = Vec::new();
    let mut prev: Option<Affine> = None;
    let mut cur = Affine { g: vec![0.0], m: vec![vec![0.0; p]] };
    for n in 0..depth {
        let map = &maps[n];
        let rows = d.level_size(n);
        // rhs(z) = B z + b
        let b = step_rhs(d, c, n, prev.as_ref().map(|a| a.g.as_slice()), &cur.g, source);
        let mut bm: Vec<Vec<f64>> = cur.m.clone();
        if let Some(pa) = &prev {
            let blk = d.conductance(n - 1);
            for (i, j, v) in blk.iter() {
                let w = v / c[n][j];
                for k in 0..p {
                    bm[j][k] -= w * pa.m[i][k];
                }
            }
        }
        debug_assert_eq!(bm.len(), rows);
        let mut g = vec![0.0; map.ncols];
        let mut m = vec![vec![0.0; p]; map.ncols];
        let mut k0 = offsets[n];
        for piece in &map.pieces {
            for t in 0..piece.left_null.ncols() {
                let mut row = vec![0.0; p];
                let mut r0 = 0.0;
                for (ri, &i) in piece.rows.iter().enumerate() {
                    let w = piece.left_null[(ri, t)];
                    r0 += w * b[i];
                    for k in 0..p {
                        row[k] += w * bm[i][k];
                    }
                }
                cons_rows.push(row);
                cons_rhs.push(-r0);
            }
            for (cj, &j) in piece.cols.iter().enumerate() {
                for (ri, &i) in piece.rows.iter().enumerate() {
                    let w = piece.pinv[(cj, ri)];
                    if w != 0.0 {
                        g[j] += w * b[i];
                        for k in 0..p {
                            m[j][k] += w * bm[i][k];
                        }
                    }
                }
                for t in 0..piece.null.ncols() {
                    m[j][k0 + t] += piece.null[(cj, t)];
                }
            }
            k0 += piece.null.ncols();
        }
        prev = Some(cur);
        cur = Affine { g, m };
    }
    // Terminal condition f_N = κ·1, unknowns (z, κ).
    let nt = cur.g.len();
    let neq = cons_rows.len() + nt;
    let mut a = Mat::<f64>::zeros(neq, p + 1);
    let mut rhs = vec![0.0; neq];
    for (r, row) in cons_rows.iter().enumerate() {
        for k in 0..p {
            a[(r, k)] = row[k];
        }
        rhs[r] = cons_rhs[r];
    }
    for j in 0..nt {
        let r = cons_rows.len() + j;
        for k in 0..p {
            a[(r, k)] = cur.m[j][k];
        }
        a[(r, p)] = -1.0;
        rhs[r] = -cur.g[j];
    }
    let z = if neq == p + 1 {
        Lu::new(&a).solve(&rhs)
    } else {
        dense::min_norm_solve(&a, &rhs).x
    };
    // Replay the recursion with the chosen parameters.
    let mut f = LevelFunction::from_levels(vec![vec![0.0]]);
    let mut residuals = Vec::with_capacity(depth);
    let mut dims = Vec::with_capacity(depth);
    for n in 0..depth {
        let prevl = if n > 0 { Some(f.level(n - 1)) } else { None };
        let raw = step_rhs_raw(d, c, n, prevl, f.level(n), source);
        let (x, r) = maps[n].solve(&raw, Some(&z[offsets[n]..]));
        residuals.push(r);
        dims.push(Some(maps[n].nullity()));
        f.push_level(x);
    }
    Ok((f, SolveReport::new(residuals, dims, tol)))
}

/// Monopole at `x` on levels `0..=depth`: `Δw = δ_x` at interior vertices,
/// `w(o) = 0`.
pub fn solve_monopole(d: &Diagram, x: VertexId, depth: usize, mode: &Mode, tol: f64) -> Result<(LevelFunction, SolveReport)> {
    d.check_vertex(x)?;
    if x.level >= depth {
        return Err(Error::InvalidParameter(format!("pole {x} must lie below level {depth}")));
    }
    solve_levels(d, &[(x, 1.0)], &Seed::Solve, depth, mode, tol)
}

/// Dipole for the pair `(x, o)`: `Δv = δ_x − δ_o` at interior vertices,
/// `v(o) = 0`.
pub fn solve_dipole(d: &Diagram, x: VertexId, depth: usize, mode: &Mode, tol: f64) -> Result<(LevelFunction, SolveReport)> {
    d.check_vertex(x)?;
    if x == VertexId::ROOT {
        return Err(Error::InvalidParameter("dipole pole must differ from the root".into()));
    }
    if x.level >= depth {
        return Err(Error::InvalidParameter(format!("pole {x} must lie below level {depth}")));
    }
    solve_levels(d, &[(x, 1.0), (VertexId::ROOT, -1.0)], &Seed::Solve, depth, mode, tol)
}

/// Affine set of admissible `(f_{n-1}, f_n)` pairs reached by the
/// recursion.
///
/// The basis is orthonormal as a set of vectors over the whole prefix
/// `f_1, …, f_n`; only the rows for `V_1`, `V_{n-1}` and `V_n` are kept.
#[derive(Clone, Debug)]
pub struct HarmonicState {
    pub level: usize,
    pub offset_prev: Vec<f64>,
    pub offset_cur: Vec<f64>,
    /// `|V_{n-1}| × p`.
    pub basis_prev: Mat<f64>,
    /// `|V_n| × p`.
    pub basis_cur: Mat<f64>,
    /// `|V_1| × p`: the seeds that survive.
    pub basis_seed: Mat<f64>,
    pub tol: f64,
}

impl HarmonicState {
    /// Dimension of the affine set (the prefix dimension).
    pub fn dim(&self) -> usize {
        self.basis_cur.ncols()
    }

    /// Dimension of the set of admissible seeds `f_1`. The basis columns
    /// have unit norm over the prefix, so singular values of the seed rows
    /// are compared with `tol` directly rather than with the largest one.
    pub fn seed_dim(&self) -> usize {
        dense::rank_abs(&self.basis_seed, self.tol)
    }
}

/// One row of the table produced by [`harm_dimension`].
#[derive(Clone, Debug, PartialEq)]
pub struct DimensionRow {
    /// Prefix depth `n`: functions on levels `0..=n`, harmonic on `0..n`.
    pub depth: usize,
    pub prefix_dim: usize,
    pub seed_dim: usize,
    /// Free parameters introduced by the step into level `n`.
    pub new_params: usize,
}

/// Prefix dimension of harmonic functions with `f(o) = 0`: functions on
/// `V_0 ∪ … ∪ V_N` satisfying every harmonicity constraint on levels
/// `0..N−1`. Returns the final dimension, the state, and one table row per
/// depth `1..=N`.
pub fn harm_dimension(d: &Diagram, up_to_level: usize, tol: f64) -> Result<(usize, HarmonicState, Vec<DimensionRow>)> {
    if up_to_level < 1 || up_to_level > d.depth() {
        return Err(Error::InvalidParameter(format!("level {up_to_level} must lie in 1..={}", d.depth())));
    }
    let c = d.total_conductance();
    check_conductance(d, &c)?;
    let to_dense = |blk: &Csr| dense::from_rows(&blk.to_dense(), blk.ncols());
    let c0 = to_dense(d.conductance(0));
    let k1 = dense::null_space(&c0);
    let v1 = d.level_size(1);
    let mut state = HarmonicState {
        level: 1,
        offset_prev: vec![0.0],
        offset_cur: vec![0.0; v1],
        basis_prev: Mat::zeros(1, k1.ncols()),
        basis_cur: k1.clone(),
        basis_seed: k1.clone(),
        tol,
    };
    let mut rows = vec![DimensionRow {
        depth: 1,
        prefix_dim: state.dim(),
        seed_dim: state.seed_dim(),
        new_params: v1 - dense::rank(&c0),
    }];
    for n in 1..up_to_level {
        let cn = to_dense(d.conductance(n));
        let next = d.level_size(n + 1);
        let p = state.dim();
        // [C_n | −(D_n Q_n − C_{n-1}ᵀ Q_{n-1})] (f_{n+1}; t) = 0
        let prev_blk = d.conductance(n - 1);
        let mut mq = Mat::<f64>::from_fn(d.level_size(n), p, |i, k| c[n][i] * state.basis_cur[(i, k)]);
        for (i, j, v) in prev_blk.iter() {
            for k in 0..p {
                mq[(j, k)] -= v * state.basis_prev[(i, k)];
            }
        }
        let k_mat = Mat::<f64>::from_fn(d.level_size(n), next + p, |i, col| {
            if col < next {
                cn[(i, col)]
            } else {
                -mq[(i, col - next)]
            }
        });
        let null = dense::null_space(&k_mat);
        let q = null.ncols();
        let nt = Mat::<f64>::from_fn(p, q, |k, t| null[(next + k, t)]);
        let basis_next = Mat::<f64>::from_fn(next, q, |j, t| null[(j, t)]);
        state = HarmonicState {
            level: n + 1,
            offset_prev: state.offset_cur.clone(),
            offset_cur: vec![0.0; next],
            basis_prev: &state.basis_cur * &nt,
            basis_cur: basis_next,
            basis_seed: &state.basis_seed * &nt,
            tol,
        };
        rows.push(DimensionRow {
            depth: n + 1,
            prefix_dim: state.dim(),
            seed_dim: state.seed_dim(),
            new_params: next - dense::rank(&cn),
        });
    }
    Ok((state.dim(), state, rows))
}
