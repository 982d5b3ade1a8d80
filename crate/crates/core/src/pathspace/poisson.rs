//! Harmonic extension of level data: `h_n(x) = E_x f_n(X_{τ(V_n)})`.

use crate::diagram::{Diagram, VertexId};
use crate::error::{Error, Result};
use crate::function::LevelFunction;
use crate::levelsys::DirichletSolver;
use crate::operators::build_level_operators;

use super::walk::{map_walks, mean_stderr, Outcome, WalkConfig, Walker};

/// How `h_n` is computed.
#[derive(Clone, Debug, PartialEq)]
pub enum PoissonMethod {
    /// Dirichlet problem `Δu = 0` below `V_n`, `u = f_n` on `V_n`.
    Exact,
    /// Walks from every vertex below `V_n` until they enter `V_n`. The
    /// absorbing level of the config is ignored.
    MonteCarlo(WalkConfig),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoissonResult {
    /// `h_n` on levels `0..=n`.
    pub values: LevelFunction,
    /// Standard errors (Monte Carlo only; zero on `V_n`).
    pub stderr: Option<LevelFunction>,
    /// Walks per start that reached `V_n` (Monte Carlo only).
    pub samples: Option<LevelFunction>,
    /// Walks stopped by the step cap, over all starts.
    pub capped: usize,
}

/// Poisson representation of `f_n` given on level `n`.
pub fn poisson_kernel(d: &Diagram, f_n: &[f64], n: usize, method: &PoissonMethod) -> Result<PoissonResult> {
    if n == 0 || n > d.depth() {
        return Err(Error::InvalidParameter(format!("target level {n} must lie in 1..={}", d.depth())));
    }
    if f_n.len() != d.level_size(n) {
        return Err(Error::Dimension(format!("f_n has {} values, level {n} has {}", f_n.len(), d.level_size(n))));
    }
    match method {
        PoissonMethod::Exact => {
            let values = DirichletSolver::new(d, n, &[])?.solve(&[], &[], Some(f_n))?;
            Ok(PoissonResult { values, stderr: None, samples: None, capped: 0 })
        }
        PoissonMethod::MonteCarlo(cfg) => {
            if cfg.num_walks == 0 || cfg.max_steps == 0 {
                return Err(Error::InvalidParameter("max_steps and num_walks must be at least 1".into()));
            }
            let walker = Walker::new(d)?;
            let sizes: Vec<usize> = (0..=n).map(|k| d.level_size(k)).collect();
            let mut values = LevelFunction::zeros(&sizes);
            let mut stderr = LevelFunction::zeros(&sizes);
            let mut samples = LevelFunction::zeros(&sizes);
            values.level_mut(n).copy_from_slice(f_n);
            samples.level_mut(n).iter_mut().for_each(|v| *v = cfg.num_walks as f64);
            let mut capped = 0;
            let mut start_index = 0usize;
            for level in 0..n {
                for i in 0..d.level_size(level) {
                    let x = VertexId::new(level, i);
                    // Every start gets its own block of streams.
                    let base = start_index * cfg.num_walks;
                    start_index += 1;
                    let out: Vec<Option<f64>> = map_walks(cfg.num_walks, |k| {
                        let mut rng = Walker::rng(cfg.seed, base + k);
                        match walker.run(x, n, cfg.max_steps, &mut rng, |_, _| {}) {
                            Outcome::Absorbed { at, .. } => Some(f_n[at.index]),
                            Outcome::Capped => None,
                        }
                    });
                    capped += out.iter().filter(|o| o.is_none()).count();
                    let (m, se, k) = mean_stderr(out.into_iter().flatten());
                    values.set(x, m);
                    stderr.set(x, se);
                    samples.set(x, k as f64);
                }
            }
            Ok(PoissonResult { values, stderr: Some(stderr), samples: Some(samples), capped })
        }
    }
}

/// Which relation ties consecutive levels of the boundary data.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Compatibility {
    /// `P←_n f_{n+1} = f_n`.
    Forward,
    /// `Δf = 0` at every vertex of level `n`.
    Harmonic,
}

/// Sequence `h_n(x)` over increasing target levels.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilizationReport {
    pub x: VertexId,
    pub compatibility: Compatibility,
    pub levels: Vec<usize>,
    pub values: Vec<f64>,
    /// Smallest computed level from which the sequence is constant within
    /// the tolerance; `None` if it still moves at the last level.
    pub stabilization_index: Option<usize>,
    /// `|Δh_n(x)|` for the last `n`, where `h_n` is harmonic off `V_n`.
    pub harmonic_residual: f64,
}

/// Largest compatibility defect `‖·‖_∞` at level `n` for data `f`.
pub fn compatibility_defect(d: &Diagram, f: &LevelFunction, n: usize, kind: Compatibility) -> Result<f64> {
    let ops = build_level_operators(d)?;
    let mut r = ops.back(n).mul_vec(f.level(n + 1));
    match kind {
        Compatibility::Forward => {}
        Compatibility::Harmonic => {
            if n > 0 {
                let up = ops.fwd(n).mul_vec(f.level(n - 1));
                r.iter_mut().zip(up).for_each(|(a, b)| *a += b);
            }
        }
    }
    Ok(r.iter().zip(f.level(n)).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
}

/// Computes `h_n(x)` for `n = max(n0, x.level + 1) ..= N` (exact mode)
/// after verifying compatibility of `f` on levels `n0..N`.
pub fn poisson_stabilization(
    d: &Diagram,
    f: &LevelFunction,
    n0: usize,
    x: VertexId,
    kind: Compatibility,
    tol: f64,
) -> Result<StabilizationReport> {
    d.check_vertex(x)?;
    f.check_shape(d, d.depth() + 1)?;
    for n in n0..d.depth() {
        let defect = compatibility_defect(d, f, n, kind)?;
        if defect > tol {
            return Err(Error::Incompatible { level: n, residual: defect });
        }
    }
    let first = n0.max(x.level + 1);
    if first > d.depth() {
        return Err(Error::InvalidParameter(format!("no target level above {x} within depth {}", d.depth())));
    }
    let mut levels = Vec::new();
    let mut values = Vec::new();
    let mut last = None;
    for n in first..=d.depth() {
        let h = DirichletSolver::new(d, n, &[])?.solve(&[], &[], Some(f.level(n)))?;
        levels.push(n);
        values.push(h.get(x));
        last = Some(h);
    }
    let h = last.unwrap();
    let harmonic_residual = if x.level < levels[levels.len() - 1] {
        let c: f64 = d.neighbors(x).iter().map(|p| p.1).sum();
        let s: f64 = d.neighbors(x).iter().map(|&(y, cy)| cy * h.get(y)).sum();
        (c * h.get(x) - s).abs()
    } else {
        0.0
    };
    let end = *values.last().unwrap();
    let mut stabilization_index = None;
    for k in (0..values.len()).rev() {
        if (values[k] - end).abs() <= tol {
            stabilization_index = Some(levels[k]);
        } else {
            break;
        }
    }
    if values.len() > 1 && stabilization_index == Some(levels[levels.len() - 1]) {
        // Only the last value agrees with itself: not stabilized.
        stabilization_index = None;
    }
    Ok(StabilizationReport { x, compatibility: kind, levels, values, stabilization_index, harmonic_residual })
}
