//! Block-tridiagonal elimination for Dirichlet problems on a level prefix.
//!
//! The unknowns live on levels `0..N` with values prescribed on level `N`
//! and at optional pinned interior vertices. Ordered by level, the system
//! `Δu = g` is block tridiagonal with diagonal blocks `D_n` and couplings
//! `−C_n`. Eliminating from the bottom level up gives Schur complements
//! `S_n = D_n − C_n S_{n+1}^{-1} C_nᵀ`, which stay diagonal as long as every
//! vertex has a single parent (trees) and are factored densely otherwise.

use std::borrow::Cow;

use faer::Mat;

use crate::dense::Lu;
use crate::diagram::{Diagram, VertexId};
use crate::error::{Error, Result};
use crate::function::LevelFunction;
use crate::sparse::{Csr, CsrBuilder};

/// Levels wider than this are not factored densely; the solver falls back
/// to preconditioned conjugate gradients.
pub const DENSE_SCHUR_LIMIT: usize = 3000;

/// Relative residual target of the iterative fallback.
pub const CG_RTOL: f64 = 1e-13;

enum Schur {
    Diag(Vec<f64>),
    Dense(Lu),
}

impl Schur {
    fn solve_in_place(&self, v: &mut [f64]) {
        match self {
            Schur::Diag(s) => v.iter_mut().zip(s).for_each(|(a, b)| *a /= b),
            Schur::Dense(lu) => {
                let x = lu.solve(v);
                v.copy_from_slice(&x);
            }
        }
    }
}

enum Method {
    Schur(Vec<Schur>),
    Cg,
}

/// A factored Dirichlet problem on levels `0..N` of a diagram.
pub struct DirichletSolver<'a> {
    d: &'a Diagram,
    boundary: usize,
    /// Total conductance on levels `0..N`.
    c: Vec<Vec<f64>>,
    pinned: Vec<VertexId>,
    is_pinned: Vec<Vec<bool>>,
    /// `C_n` restricted to free/free pairs, `n < N − 1`.
    coupling: Vec<Cow<'a, Csr>>,
    method: Method,
}

impl<'a> DirichletSolver<'a> {
    /// Factors the problem with boundary level `boundary_level` and the
    /// given pinned interior vertices.
    pub fn new(d: &'a Diagram, boundary_level: usize, pinned: &[VertexId]) -> Result<Self> {
        if boundary_level == 0 || boundary_level > d.depth() {
            return Err(Error::InvalidParameter(format!(
                "boundary level {boundary_level} must lie in 1..={}",
                d.depth()
            )));
        }
        let nb = boundary_level;
        let mut c: Vec<Vec<f64>> = (0..nb).map(|n| vec![0.0; d.level_size(n)]).collect();
        for n in 0..nb {
            for (i, j, v) in d.conductance(n).iter() {
                c[n][i] += v;
                if n + 1 < nb {
                    c[n + 1][j] += v;
                }
            }
        }
        for (n, level) in c.iter().enumerate() {
            if let Some(i) = level.iter().position(|&v| v <= 0.0) {
                return Err(Error::IsolatedVertex(VertexId::new(n, i)));
            }
        }
        let mut is_pinned: Vec<Vec<bool>> = (0..nb).map(|n| vec![false; d.level_size(n)]).collect();
        for &p in pinned {
            if p.level >= nb || p.index >= d.level_size(p.level) {
                return Err(Error::InvalidParameter(format!("pinned vertex {p} is not interior")));
            }
            is_pinned[p.level][p.index] = true;
        }
        let level_pinned: Vec<bool> = is_pinned.iter().map(|l| l.iter().any(|&p| p)).collect();
        let coupling: Vec<Cow<'a, Csr>> = (0..nb.saturating_sub(1))
            .map(|n| {
                let block = d.conductance(n);
                if !level_pinned[n] && !level_pinned[n + 1] {
                    return Cow::Borrowed(block);
                }
                let mut b = CsrBuilder::new(block.ncols());
                for i in 0..block.nrows() {
                    if !is_pinned[n][i] {
                        for (j, v) in block.row(i) {
                            if !is_pinned[n + 1][j] {
                                b.push(j, v);
                            }
                        }
                    }
                    b.finish_row().unwrap();
                }
                Cow::Owned(b.finish())
            })
            .collect();
        let mut solver = DirichletSolver {
            d,
            boundary: nb,
            c,
            pinned: pinned.to_vec(),
            is_pinned,
            coupling,
            method: Method::Cg,
        };
        solver.method = solver.factor()?;
        Ok(solver)
    }

    fn diag_block(&self, n: usize) -> Vec<f64> {
        self.c[n]
            .iter()
            .zip(&self.is_pinned[n])
            .map(|(&c, &p)| if p { 1.0 } else { c })
            .collect()
    }

    fn factor(&self) -> Result<Method> {
        let nb = self.boundary;
        let mut rev: Vec<Schur> = Vec::with_capacity(nb);
        rev.push(Schur::Diag(self.diag_block(nb - 1)));
        for n in (0..nb - 1).rev() {
            let below = rev.last().unwrap();
            let cn = &self.coupling[n];
            let a = self.diag_block(n);
            let single_parent = cn.col_counts().iter().all(|&k| k <= 1);
            let next = match below {
                Schur::Diag(s) if single_parent => {
                    let mut out = a;
                    for (i, j, v) in cn.iter() {
                        out[i] -= v * v / s[j];
                    }
                    Schur::Diag(out)
                }
                _ => {
                    let m = cn.nrows();
                    if m > DENSE_SCHUR_LIMIT {
                        return Ok(Method::Cg);
                    }
                    let mut dense = Mat::<f64>::from_fn(m, m, |i, k| if i == k { a[i] } else { 0.0 });
                    match below {
                        Schur::Diag(s) => {
                            let ct = cn.transpose();
                            for j in 0..ct.nrows() {
                                let col: Vec<(usize, f64)> = ct.row(j).collect();
                                for &(i, vi) in &col {
                                    for &(k, vk) in &col {
                                        dense[(i, k)] -= vi * vk / s[j];
                                    }
                                }
                            }
                        }
                        Schur::Dense(lu) => {
                            let p = cn.ncols();
                            let ct = Mat::<f64>::from_fn(p, m, |j, i| cn.get(i, j).unwrap_or(0.0));
                            let x = lu.solve_mat(&ct);
                            for i in 0..m {
                                for (j, v) in cn.row(i) {
                                    for k in 0..m {
                                        dense[(i, k)] -= v * x[(j, k)];
                                    }
                                }
                            }
                        }
                    }
                    Schur::Dense(Lu::new(&dense))
                }
            };
            rev.push(next);
        }
        rev.reverse();
        Ok(Method::Schur(rev))
    }

    pub fn boundary_level(&self) -> usize {
        self.boundary
    }

    pub fn diagram(&self) -> &'a Diagram {
        self.d
    }

    /// Total conductance used on interior levels.
    pub fn c(&self, n: usize) -> &[f64] {
        &self.c[n]
    }

    /// True when the factorization fell back to the iterative method.
    pub fn is_iterative(&self) -> bool {
        matches!(self.method, Method::Cg)
    }

    /// Solves `Δu = g` at free interior vertices with `u` equal to
    /// `pinned_values` on the pinned vertices (in construction order) and to
    /// `boundary` on level `N` (zero when `None`). The source is given
    /// sparsely as `(vertex, value)` pairs on free interior vertices.
    pub fn solve(
        &self,
        source: &[(VertexId, f64)],
        pinned_values: &[f64],
        boundary: Option<&[f64]>,
    ) -> Result<LevelFunction> {
        let nb = self.boundary;
        let d = self.d;
        if pinned_values.len() != self.pinned.len() {
            return Err(Error::Dimension(format!(
                "{} pinned values for {} pinned vertices",
                pinned_values.len(),
                self.pinned.len()
            )));
        }
        if let Some(b) = boundary {
            if b.len() != d.level_size(nb) {
                return Err(Error::Dimension(format!(
                    "boundary has {} values, level {nb} has {}",
                    b.len(),
                    d.level_size(nb)
                )));
            }
        }
        // Right-hand side on free vertices; pinned rows carry their value.
        let mut r: Vec<Vec<f64>> = (0..nb).map(|n| vec![0.0; d.level_size(n)]).collect();
        for &(x, g) in source {
            if x.level >= nb || !d.contains(x) {
                return Err(Error::InvalidParameter(format!("source vertex {x} is not interior")));
            }
            if !self.is_pinned[x.level][x.index] {
                r[x.level][x.index] += g;
            }
        }
        let mut known: Vec<(VertexId, f64)> = self.pinned.iter().copied().zip(pinned_values.iter().copied()).collect();
        for &(p, v) in &known {
            r[p.level][p.index] = v;
        }
        // Couplings from known values into free rows.
        if let Some(b) = boundary {
            let block = d.conductance(nb - 1);
            for i in 0..block.nrows() {
                if !self.is_pinned[nb - 1][i] {
                    r[nb - 1][i] += block.row(i).map(|(j, v)| v * b[j]).sum::<f64>();
                }
            }
        }
        for (p, v) in known.drain(..) {
            if p.level > 0 {
                let up = d.conductance(p.level - 1);
                for i in 0..up.nrows() {
                    if let Some(cv) = up.get(i, p.index) {
                        if !self.is_pinned[p.level - 1][i] {
                            r[p.level - 1][i] += cv * v;
                        }
                    }
                }
            }
            if p.level + 1 < nb {
                for (j, cv) in d.conductance(p.level).row(p.index) {
                    if !self.is_pinned[p.level + 1][j] {
                        r[p.level + 1][j] += cv * v;
                    }
                }
            }
        }
        let mut u = match &self.method {
            Method::Schur(s) => self.solve_schur(s, r),
            Method::Cg => self.solve_cg(r)?,
        };
        u.push(match boundary {
            Some(b) => b.to_vec(),
            None => vec![0.0; d.level_size(nb)],
        });
        Ok(LevelFunction::from_levels(u))
    }

    fn solve_schur(&self, s: &[Schur], mut r: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
        let nb = self.boundary;
        // Upward reduction: r_n += C_n S_{n+1}^{-1} r_{n+1}.
        for n in (0..nb - 1).rev() {
            let mut t = r[n + 1].clone();
            s[n + 1].solve_in_place(&mut t);
            let add = self.coupling[n].mul_vec(&t);
            r[n].iter_mut().zip(add).for_each(|(a, b)| *a += b);
        }
        // Downward substitution: u_{n+1} = S_{n+1}^{-1}(r_{n+1} + C_nᵀ u_n).
        s[0].solve_in_place(&mut r[0]);
        for n in 0..nb - 1 {
            let add = self.coupling[n].tmul_vec(&r[n]);
            r[n + 1].iter_mut().zip(add).for_each(|(a, b)| *a += b);
            s[n + 1].solve_in_place(&mut r[n + 1]);
        }
        r
    }

    /// `K u` for the free/pinned system matrix.
    fn apply(&self, u: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let nb = self.boundary;
        let mut out: Vec<Vec<f64>> = (0..nb).map(|n| {
            u[n].iter().zip(self.diag_block(n)).map(|(a, b)| a * b).collect()
        }).collect();
        for n in 0..nb - 1 {
            let down = self.coupling[n].mul_vec(&u[n + 1]);
            out[n].iter_mut().zip(down).for_each(|(a, b)| *a -= b);
            let up = self.coupling[n].tmul_vec(&u[n]);
            out[n + 1].iter_mut().zip(up).for_each(|(a, b)| *a -= b);
        }
        out
    }

    fn solve_cg(&self, r: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
        let nb = self.boundary;
        let diag: Vec<Vec<f64>> = (0..nb).map(|n| self.diag_block(n)).collect();
        let dot = |a: &[Vec<f64>], b: &[Vec<f64>]| -> f64 {
            a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>()).sum()
        };
        let precond = |v: &[Vec<f64>]| -> Vec<Vec<f64>> {
            v.iter().zip(&diag).map(|(a, d)| a.iter().zip(d).map(|(x, y)| x / y).collect()).collect()
        };
        let bnorm = dot(&r, &r).sqrt();
        let mut x: Vec<Vec<f64>> = r.iter().map(|l| vec![0.0; l.len()]).collect();
        if bnorm == 0.0 {
            return Ok(x);
        }
        let mut res = r;
        let mut z = precond(&res);
        let mut p = z.clone();
        let mut rz = dot(&res, &z);
        let total: usize = diag.iter().map(Vec::len).sum();
        for _ in 0..(20 * total).max(1000) {
            let kp = self.apply(&p);
            let alpha = rz / dot(&p, &kp);
            for n in 0..nb {
                for i in 0..x[n].len() {
                    x[n][i] += alpha * p[n][i];
                    res[n][i] -= alpha * kp[n][i];
                }
            }
            if dot(&res, &res).sqrt() <= CG_RTOL * bnorm {
                return Ok(x);
            }
            z = precond(&res);
            let rz_new = dot(&res, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for n in 0..nb {
                for i in 0..p[n].len() {
                    p[n][i] = z[n][i] + beta * p[n][i];
                }
            }
        }
        Err(Error::Singular("conjugate gradients did not converge".into()))
    }
}
