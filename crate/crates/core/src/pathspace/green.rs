//! Exact Green quantities of the walk killed at a boundary level.

use std::collections::BTreeSet;

use crate::diagram::{Diagram, VertexId};
use crate::error::{Error, Result};
use crate::function::LevelFunction;
use crate::harmonic;
use crate::levelsys::DirichletSolver;

/// Truncated Green function `G_N` of the chain killed on level `N`.
///
/// Columns are computed on demand: `G_N(·, y) = c(y)·u` where `Δu = δ_y`
/// on levels `0..N` and `u = 0` on `V_N`.
pub struct GreenSolve<'a> {
    solver: DirichletSolver<'a>,
}

/// Factors the killed-chain system with boundary level `boundary_level`.
pub fn green_exact(d: &Diagram, boundary_level: usize) -> Result<GreenSolve<'_>> {
    Ok(GreenSolve { solver: DirichletSolver::new(d, boundary_level, &[])? })
}

impl<'a> GreenSolve<'a> {
    pub fn boundary_level(&self) -> usize {
        self.solver.boundary_level()
    }

    pub fn diagram(&self) -> &'a Diagram {
        self.solver.diagram()
    }

    /// `c(x)` of an interior vertex.
    pub fn c(&self, x: VertexId) -> f64 {
        self.solver.c(x.level)[x.index]
    }

    fn check_interior(&self, y: VertexId) -> Result<()> {
        self.diagram().check_vertex(y)?;
        if y.level >= self.boundary_level() {
            return Err(Error::InvalidParameter(format!("{y} is not interior to level {}", self.boundary_level())));
        }
        Ok(())
    }

    /// `G_N(·, y)` on levels `0..=N` (zero on the boundary).
    pub fn column(&self, y: VertexId) -> Result<LevelFunction> {
        self.check_interior(y)?;
        let cy = self.c(y);
        Ok(self.solver.solve(&[(y, 1.0)], &[], None)?.map(|v| v * cy))
    }

    /// `G_N(x, y)` for every `x` in `at`, without keeping the column.
    pub fn column_at(&self, y: VertexId, at: &[VertexId]) -> Result<Vec<f64>> {
        let col = self.column(y)?;
        Ok(at.iter().map(|&x| col.get(x)).collect())
    }

    /// `G_N(x, y)`.
    pub fn value(&self, x: VertexId, y: VertexId) -> Result<f64> {
        self.diagram().check_vertex(x)?;
        Ok(self.column(y)?.get(x))
    }

    /// `[G_N(x, y)]` for `x, y` in `vertices` (row `x`, column `y`).
    pub fn matrix(&self, vertices: &[VertexId]) -> Result<Vec<Vec<f64>>> {
        let cols: Vec<Vec<f64>> = vertices.iter().map(|&y| self.column_at(y, vertices)).collect::<Result<_>>()?;
        Ok((0..vertices.len()).map(|i| cols.iter().map(|c| c[i]).collect()).collect())
    }

    /// `F_N(·, x) = G_N(·, x) / G_N(x, x)`.
    pub fn hitting_via_green(&self, x: VertexId) -> Result<LevelFunction> {
        let col = self.column(x)?;
        let gxx = col.get(x);
        Ok(col.map(|v| v / gxx))
    }
}

/// `h_x(a) = F_N(a, x)`: the probability of reaching `x` before level `N`.
///
/// Solved directly as the Dirichlet problem with `h(x) = 1`, `h = 0` on
/// `V_N` and `Δh = 0` elsewhere.
pub fn hitting_function(d: &Diagram, x: VertexId, boundary_level: usize) -> Result<LevelFunction> {
    check_pole(d, x, boundary_level)?;
    DirichletSolver::new(d, boundary_level, &[x])?.solve(&[], &[1.0], None)
}

/// The function equal to 1 at `xi`, 0 at `xj` and on `V_N`, harmonic
/// elsewhere.
pub fn two_point_hitting(d: &Diagram, xi: VertexId, xj: VertexId, boundary_level: usize) -> Result<LevelFunction> {
    check_pole(d, xi, boundary_level)?;
    check_pole(d, xj, boundary_level)?;
    if xi == xj {
        return Err(Error::InvalidParameter("the two poles must differ".into()));
    }
    DirichletSolver::new(d, boundary_level, &[xi, xj])?.solve(&[], &[1.0, 0.0], None)
}

fn check_pole(d: &Diagram, x: VertexId, n: usize) -> Result<()> {
    d.check_vertex(x)?;
    if x.level >= n || n > d.depth() {
        return Err(Error::InvalidParameter(format!("{x} is not interior to level {n}")));
    }
    Ok(())
}

/// Monopole `w_x(a) = G_N(a, x) / c(x)`, zero on `V_N`.
pub fn monopole_green(d: &Diagram, x: VertexId, boundary_level: usize) -> Result<LevelFunction> {
    check_pole(d, x, boundary_level)?;
    DirichletSolver::new(d, boundary_level, &[])?.solve(&[(x, 1.0)], &[], None)
}

/// Dipole `v = w_{x1} − w_{x2}` from the Green function.
pub fn dipole_green(d: &Diagram, x1: VertexId, x2: VertexId, boundary_level: usize) -> Result<LevelFunction> {
    check_pole(d, x1, boundary_level)?;
    check_pole(d, x2, boundary_level)?;
    if x1 == x2 {
        return Err(Error::InvalidParameter("the two poles must differ".into()));
    }
    let g = green_exact(d, boundary_level)?;
    let (a, b) = (g.column(x1)?, g.column(x2)?);
    Ok(a.axpby(1.0 / g.c(x1), &b, -1.0 / g.c(x2)))
}

/// `v = w_{x0} − Σ α_i w_{x_i}` with weights summing to 1.
pub fn multipole(d: &Diagram, x0: VertexId, poles: &[(VertexId, f64)], boundary_level: usize) -> Result<LevelFunction> {
    check_pole(d, x0, boundary_level)?;
    let mut seen = BTreeSet::from([x0]);
    for &(x, a) in poles {
        check_pole(d, x, boundary_level)?;
        if !seen.insert(x) {
            return Err(Error::InvalidParameter(format!("pole {x} repeated")));
        }
        if a < 0.0 {
            return Err(Error::InvalidParameter(format!("negative weight {a} at {x}")));
        }
    }
    let total: f64 = poles.iter().map(|p| p.1).sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("weights sum to {total}, not 1")));
    }
    let mut src = vec![(x0, 1.0)];
    src.extend(poles.iter().map(|&(x, a)| (x, -a)));
    DirichletSolver::new(d, boundary_level, &[])?.solve(&src, &[], None)
}

/// Result of [`dipole_matrix_m`].
#[derive(Clone, Debug, PartialEq)]
pub struct DipoleMatrix {
    /// `M[j][i] = Δh_i(x_j)` for the two-point hitting functions `h_i`.
    pub m: [[f64; 2]; 2],
    /// `diag(c(x1), c(x2)) · [[1−U(x1,x1), −F(x1,x2)], [−F(x2,x1), 1−U(x2,x2)]]`.
    pub m_factored: [[f64; 2]; 2],
    pub det_factored: f64,
    /// `c(x1)c(x2)(1 − G(x1,x2)G(x2,x1)) / (G(x1,x1)G(x2,x2))`.
    pub det_closed_form: f64,
    /// `G_N` on the pair.
    pub g: [[f64; 2]; 2],
    /// True when `|G(x1,x2) − √(c(x2)/c(x1))| ≤ tol`.
    pub degenerate: bool,
    /// `(α, β)` with `M (α, β)ᵀ = (1, −1)ᵀ`.
    pub coefficients: Option<(f64, f64)>,
    /// `α h_1 + β h_2`.
    pub dipole: Option<LevelFunction>,
}

/// Builds the dipole for `(x1, x2)` as a combination of the two-point
/// hitting functions and reports the determinant identities.
pub fn dipole_matrix_m(d: &Diagram, x1: VertexId, x2: VertexId, boundary_level: usize, tol: f64) -> Result<DipoleMatrix> {
    let h1 = two_point_hitting(d, x1, x2, boundary_level)?;
    let h2 = two_point_hitting(d, x2, x1, boundary_level)?;
    let lap = |h: &LevelFunction, x: VertexId| -> f64 {
        let mut s = 0.0;
        for (y, c) in d.neighbors(x) {
            s += c * (h.get(x) - h.get(y));
        }
        s
    };
    let m = [[lap(&h1, x1), lap(&h2, x1)], [lap(&h1, x2), lap(&h2, x2)]];
    let g = green_exact(d, boundary_level)?;
    let gm = g.matrix(&[x1, x2])?;
    let (c1, c2) = (g.c(x1), g.c(x2));
    let f1 = hitting_function(d, x1, boundary_level)?;
    let f2 = hitting_function(d, x2, boundary_level)?;
    let ret = |f: &LevelFunction, x: VertexId| -> f64 { d.neighbors(x).iter().map(|&(y, c)| c * f.get(y)).sum::<f64>() / g.c(x) };
    let (u1, u2) = (ret(&f1, x1), ret(&f2, x2));
    let m_factored = [[c1 * (1.0 - u1), -c1 * f2.get(x1)], [-c2 * f1.get(x2), c2 * (1.0 - u2)]];
    let det_factored = m_factored[0][0] * m_factored[1][1] - m_factored[0][1] * m_factored[1][0];
    let det_closed_form = c1 * c2 * (1.0 - gm[0][1] * gm[1][0]) / (gm[0][0] * gm[1][1]);
    let degenerate = (gm[0][1] - (c2 / c1).sqrt()).abs() <= tol;
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let (coefficients, dipole) = if degenerate || det == 0.0 {
        (None, None)
    } else {
        let alpha = (m[1][1] + m[0][1]) / det;
        let beta = (-m[0][0] - m[1][0]) / det;
        (Some((alpha, beta)), Some(h1.axpby(alpha, &h2, beta)))
    };
    Ok(DipoleMatrix {
        m,
        m_factored,
        det_factored,
        det_closed_form,
        g: [[gm[0][0], gm[0][1]], [gm[1][0], gm[1][1]]],
        degenerate,
        coefficients,
        dipole,
    })
}

/// Maximal errors of the killed-chain identities on a sample of vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct GreenIdentityReport {
    pub boundary_level: usize,
    pub sample: Vec<VertexId>,
    /// `|G(x,x) − 1/(1 − U(x,x))|`.
    pub diagonal: f64,
    /// `|G(x,y) − F(x,y) G(y,y)|`.
    pub factorization: f64,
    /// `|U(x,x) − Σ_y p(x,y) F(y,x)|`.
    pub first_return: f64,
    /// `|F(x,y) − Σ_z p(x,z) F(z,y)|` for `x ≠ y`.
    pub first_step: f64,
    /// `|c(x)G(x,y) − c(y)G(y,x)|`.
    pub g_reversibility: f64,
    /// `|c(x)F(x,y) − c(y)F(y,x)|`.
    pub f_reversibility: f64,
}

/// Checks the identities between `G`, `F` and `U` of the chain killed at
/// `boundary_level` on all pairs of `sample`.
///
/// `G` comes from Green columns and `F` from separate hitting solves, so
/// every identity compares two computations. `U(x,x)` is taken from the
/// Green column by first-step analysis, `Σ_y p(x,y) G(y,x) / G(x,x)`.
/// Only values at the sample and its neighbours are retained.
pub fn green_identities(d: &Diagram, boundary_level: usize, sample: &[VertexId]) -> Result<GreenIdentityReport> {
    let sample: Vec<VertexId> = sample.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let mut at: BTreeSet<VertexId> = sample.iter().copied().collect();
    for &x in &sample {
        check_pole(d, x, boundary_level)?;
        at.extend(d.neighbors(x).into_iter().map(|(y, _)| y));
    }
    let at: Vec<VertexId> = at.into_iter().collect();
    let pos = |x: VertexId| at.binary_search(&x).unwrap();
    let g = green_exact(d, boundary_level)?;
    let gcol: Vec<Vec<f64>> = sample.iter().map(|&y| g.column_at(y, &at)).collect::<Result<_>>()?;
    let mut fcol = Vec::with_capacity(sample.len());
    for &y in &sample {
        let h = hitting_function(d, y, boundary_level)?;
        fcol.push(at.iter().map(|&x| h.get(x)).collect::<Vec<f64>>());
    }
    let c: Vec<f64> = sample.iter().map(|&x| g.c(x)).collect();
    let mut rep = GreenIdentityReport {
        boundary_level,
        sample: sample.clone(),
        diagonal: 0.0,
        factorization: 0.0,
        first_return: 0.0,
        first_step: 0.0,
        g_reversibility: 0.0,
        f_reversibility: 0.0,
    };
    for (k, &x) in sample.iter().enumerate() {
        let nb = d.neighbors(x);
        let gxx = gcol[k][pos(x)];
        let u_green = nb.iter().map(|&(z, cz)| cz * gcol[k][pos(z)]).sum::<f64>() / c[k] / gxx;
        let u_first = nb.iter().map(|&(z, cz)| cz * fcol[k][pos(z)]).sum::<f64>() / c[k];
        rep.diagonal = rep.diagonal.max((gxx - 1.0 / (1.0 - u_green)).abs());
        rep.first_return = rep.first_return.max((u_green - u_first).abs());
        for (l, &y) in sample.iter().enumerate() {
            if l == k {
                continue;
            }
            let gxy = gcol[l][pos(x)];
            let gyy = gcol[l][pos(y)];
            let fxy = fcol[l][pos(x)];
            rep.factorization = rep.factorization.max((gxy - fxy * gyy).abs());
            let step = nb.iter().map(|&(z, cz)| cz * fcol[l][pos(z)]).sum::<f64>() / c[k];
            rep.first_step = rep.first_step.max((fxy - step).abs());
            let gyx = gcol[k][pos(y)];
            let fyx = fcol[k][pos(y)];
            rep.g_reversibility = rep.g_reversibility.max((c[k] * gxy - c[l] * gyx).abs());
            rep.f_reversibility = rep.f_reversibility.max((c[k] * fxy - c[l] * fyx).abs());
        }
    }
    Ok(rep)
}

/// `G_N(o, o)` for each boundary level in `levels`.
pub fn root_green_sequence(d: &Diagram, levels: &[usize]) -> Result<Vec<f64>> {
    levels.iter().map(|&n| green_exact(d, n)?.value(VertexId::ROOT, VertexId::ROOT)).collect()
}

/// Residual of `Δf = g` on the interior of a truncation: convenience
/// wrapper for Green-built functions.
pub fn interior_residual(d: &Diagram, f: &LevelFunction, source: &[(VertexId, f64)], boundary_level: usize) -> Result<f64> {
    let t = d.truncated(boundary_level)?;
    let r = harmonic::laplacian_residuals(&t, f, source)?;
    Ok(r.into_iter().fold(0.0, f64::max))
}
