//! Energy of functions on a stored prefix, currents, and the lower bound
//! for harmonic functions.

use crate::closed_form::stationary_formula;
use crate::dense::{self, from_rows};
use crate::diagram::{Diagram, ExtensionRule, VertexId};
use crate::error::{Error, Result};
use crate::function::LevelFunction;
use crate::harmonic::laplacian_residuals;
use crate::pathspace::dipole_green;

/// Energy and current bookkeeping of a function on levels `0..=N`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyReport {
    /// Energy of the edges between levels `n` and `n + 1`, `n = 0..N`.
    pub per_level: Vec<f64>,
    /// `partial_sums[n]`: energy of levels `0..=n+1`.
    pub partial_sums: Vec<f64>,
    pub energy: f64,
    /// `currents[n][x] = I_n(x) = Σ_{y∈V_{n−1}} c_xy (f(x) − f(y))`;
    /// `currents[0]` is empty.
    pub currents: Vec<Vec<f64>>,
    /// `I_n = Σ_x I_n(x)`.
    pub level_currents: Vec<f64>,
    /// Root flux `Σ_{x∈V_1} c_ox (f(x) − f(o))`.
    pub i1: f64,
    /// `β_n = max c(x)` over `V_n`; on the last level `c(x)` counts only
    /// the stored (incoming) edges.
    pub beta: Vec<f64>,
    pub level_sizes: Vec<usize>,
    /// Partial sums of `Σ_{k≤n} I_1² / (β_k |V_k|)`, `n = 0..=N`.
    pub lower_bound: Vec<f64>,
    /// Partial sums of `Σ_{k≤n} 1 / (β_k |V_k|)`.
    pub inverse_growth: Vec<f64>,
    /// Empirical divergence of `inverse_growth`, see [`looks_divergent`].
    pub divergence_flag: bool,
}

/// Empirical divergence test on partial sums: the increment over the last
/// ten terms exceeds `1e-6` and the last term is at least half the term ten
/// places earlier. Needs at least twelve partial sums; shorter sequences
/// are reported as not divergent.
pub fn looks_divergent(partial: &[f64]) -> bool {
    let n = partial.len();
    if n < 12 {
        return false;
    }
    let tail = partial[n - 1] - partial[n - 11];
    let last = partial[n - 1] - partial[n - 2];
    let earlier = partial[n - 11] - partial[n - 12];
    tail > 1e-6 && earlier != 0.0 && last / earlier >= 0.5
}

/// Cauchy test on the last ten terms: increment below `1e-6`.
pub fn looks_cauchy(partial: &[f64]) -> bool {
    let n = partial.len();
    n >= 11 && (partial[n - 1] - partial[n - 11]).abs() < 1e-6
}

/// Edge energy `Σ_edges c (f(x) − f(y))²` and the current report.
pub fn energy_norm(d: &Diagram, f: &LevelFunction) -> Result<EnergyReport> {
    f.check_shape(d, d.depth() + 1)?;
    let depth = d.depth();
    let c = d.total_conductance();
    let mut per_level = Vec::with_capacity(depth);
    let mut currents = vec![Vec::new()];
    for n in 0..depth {
        let mut e = 0.0;
        let mut cur = vec![0.0; d.level_size(n + 1)];
        let (a, b) = (f.level(n), f.level(n + 1));
        for (i, j, w) in d.conductance(n).iter() {
            let diff = b[j] - a[i];
            e += w * diff * diff;
            cur[j] += w * diff;
        }
        per_level.push(e);
        currents.push(cur);
    }
    let partial_sums: Vec<f64> = per_level
        .iter()
        .scan(0.0, |s, &e| {
            *s += e;
            Some(*s)
        })
        .collect();
    let level_currents: Vec<f64> = currents.iter().map(|v| v.iter().sum()).collect();
    let i1 = if depth >= 1 { level_currents[1] } else { 0.0 };
    let beta: Vec<f64> = c.iter().map(|l| l.iter().fold(0.0f64, |m, &v| m.max(v))).collect();
    let level_sizes = d.level_sizes().to_vec();
    let mut lower_bound = Vec::with_capacity(depth + 1);
    let mut inverse_growth = Vec::with_capacity(depth + 1);
    let (mut lb, mut ig) = (0.0, 0.0);
    for n in 0..=depth {
        let t = 1.0 / (beta[n] * level_sizes[n] as f64);
        lb += i1 * i1 * t;
        ig += t;
        lower_bound.push(lb);
        inverse_growth.push(ig);
    }
    let divergence_flag = looks_divergent(&inverse_growth);
    Ok(EnergyReport {
        energy: partial_sums.last().copied().unwrap_or(0.0),
        per_level,
        partial_sums,
        currents,
        level_currents,
        i1,
        beta,
        level_sizes,
        lower_bound,
        inverse_growth,
        divergence_flag,
    })
}

/// Edge energy only.
pub fn energy(d: &Diagram, f: &LevelFunction) -> Result<f64> {
    Ok(energy_norm(d, f)?.energy)
}

/// The bound `Σ_{n≤N} I_1²/(β_n|V_n|)` against the energy of the prefix.
#[derive(Clone, Debug, PartialEq)]
pub struct LowerBound {
    pub bound: f64,
    pub energy: f64,
    /// `bound ≤ energy + 1e-12`.
    pub holds: bool,
    /// Every depth `n`: bound through level `n` vs energy through level `n`.
    pub holds_at_every_depth: bool,
    /// Partial sums of `Σ 1/(β_n|V_n|)` look divergent: then every
    /// nonconstant harmonic function has infinite energy.
    pub divergence_flag: bool,
}

pub fn energy_lower_bound(report: &EnergyReport) -> LowerBound {
    let bound = report.lower_bound.last().copied().unwrap_or(0.0);
    let holds_at_every_depth = (1..report.lower_bound.len())
        .all(|n| report.lower_bound[n] <= report.partial_sums[n - 1] + 1e-12);
    LowerBound {
        bound,
        energy: report.energy,
        holds: bound <= report.energy + 1e-12,
        holds_at_every_depth,
        divergence_flag: report.divergence_flag,
    }
}

/// Kirchhoff defects `max_x |I_in(x) − I_out(x)|` per level `0..N`; at the
/// root the incoming current is zero.
pub fn kirchhoff_defects(d: &Diagram, f: &LevelFunction) -> Result<Vec<f64>> {
    let r = energy_norm(d, f)?;
    let mut out = Vec::with_capacity(d.depth());
    for n in 0..d.depth() {
        let mut outflow = vec![0.0; d.level_size(n)];
        for (i, j, w) in d.conductance(n).iter() {
            outflow[i] += w * (f.level(n + 1)[j] - f.level(n)[i]);
        }
        let worst = (0..d.level_size(n)).fold(0.0f64, |m, i| {
            let inflow = if n == 0 { 0.0 } else { r.currents[n][i] };
            m.max((inflow - outflow[i]).abs())
        });
        out.push(worst);
    }
    Ok(out)
}

/// The energy of a harmonic function by the two interior formulas and by
/// the edge sum.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicEnergy {
    /// `(1/2) Σ_{x interior} c(x)((P f²)(x) − f²(x))`.
    pub via_markov: f64,
    /// `−(1/2) Σ_{x interior} (Δ f²)(x)`.
    pub via_laplacian: f64,
    /// Edge sum over all stored edges.
    pub edge_sum: f64,
    /// Edge sum over edges with both ends interior.
    pub interior_edges: f64,
    /// Half the energy of the edges into the last level. The interior
    /// formulas count those edges once, not twice, so
    /// `via_markov + boundary_correction = edge_sum`.
    pub boundary_correction: f64,
}

/// Evaluates both interior formulas for a harmonic `f`.
pub fn energy_harmonic_formulas(d: &Diagram, f: &LevelFunction, tol: f64) -> Result<HarmonicEnergy> {
    let res = laplacian_residuals(d, f, &[])?;
    if let Some(level) = res.iter().position(|&r| r > tol) {
        return Err(Error::NotHarmonic { level, residual: res[level] });
    }
    let c = d.total_conductance();
    let depth = d.depth();
    let mut via_markov = 0.0;
    let mut via_laplacian = 0.0;
    for n in 0..depth {
        for i in 0..d.level_size(n) {
            let x = VertexId::new(n, i);
            let fx = f.get(x);
            let mut pf2 = 0.0;
            let mut lap = 0.0;
            for (y, w) in d.neighbors(x) {
                let fy = f.get(y);
                pf2 += w * fy * fy;
                lap += w * (fx * fx - fy * fy);
            }
            via_markov += pf2 - c[n][i] * fx * fx;
            via_laplacian -= lap;
        }
    }
    let rep = energy_norm(d, f)?;
    let last = rep.per_level.last().copied().unwrap_or(0.0);
    Ok(HarmonicEnergy {
        via_markov: 0.5 * via_markov,
        via_laplacian: 0.5 * via_laplacian,
        edge_sum: rep.energy,
        interior_edges: rep.energy - last,
        boundary_correction: 0.5 * last,
    })
}

/// `‖v‖²` for the Green dipole `v` of `(x, y)` killed at `boundary_level`.
pub fn resistance_distance(d: &Diagram, x: VertexId, y: VertexId, boundary_level: usize) -> Result<f64> {
    if x == y {
        d.check_vertex(x)?;
        return Ok(0.0);
    }
    let v = dipole_green(d, x, y, boundary_level)?;
    energy(&d.truncated(boundary_level)?, &v)
}

/// Currents `I(e) = c_e (f(x) − f(y))` and the identity
/// `Σ I(e)²/c_e = ‖f‖²`.
#[derive(Clone, Debug, PartialEq)]
pub struct DissipationReport {
    pub dissipation: f64,
    pub energy: f64,
    pub relative_error: f64,
}

pub fn dissipation_check(d: &Diagram, f: &LevelFunction) -> Result<DissipationReport> {
    let e = energy(d, f)?;
    let mut s = 0.0;
    for n in 0..d.depth() {
        for (i, j, w) in d.conductance(n).iter() {
            let cur = w * (f.level(n)[i] - f.level(n + 1)[j]);
            s += cur * cur / w;
        }
    }
    let scale = e.abs().max(s.abs());
    let relative_error = if scale == 0.0 { 0.0 } else { (s - e).abs() / scale };
    Ok(DissipationReport { dissipation: s, energy: e, relative_error })
}

/// Outcome of [`stationary_energy_criterion`].
#[derive(Clone, Debug, PartialEq)]
pub struct StationaryEnergy {
    /// The criterion: `f_1` constant.
    pub finite: bool,
    pub partial_sums: Vec<f64>,
    /// Empirical divergence of the partial sums.
    pub divergent: bool,
}

/// Energy of the stationary formula `f_{n+1} = f_1 Σ_{i≤n} λ^{−i}` on a
/// diagram from `gen_stationary` with a symmetric invertible matrix.
pub fn stationary_energy_criterion(d: &Diagram, f1: &[f64], tol: f64) -> Result<StationaryEnergy> {
    let (a, lambda) = match d.rule() {
        ExtensionRule::Stationary { matrix, lambda } => (matrix.clone(), *lambda),
        _ => return Err(Error::InvalidParameter("diagram is not stationary".into())),
    };
    let k = a.len();
    if (0..k).any(|i| (0..k).any(|j| a[i][j] != a[j][i])) {
        return Err(Error::InvalidParameter("stationary matrix is not symmetric".into()));
    }
    let m = from_rows(&a.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect::<Vec<_>>(), k);
    if dense::rank(&m) < k {
        return Err(Error::InvalidParameter("stationary matrix is singular".into()));
    }
    if lambda <= 1.0 {
        return Err(Error::InvalidParameter(format!("λ = {lambda} must exceed 1")));
    }
    if f1.len() != k {
        return Err(Error::Dimension(format!("f_1 has {} values, level 1 has {k}", f1.len())));
    }
    let f = stationary_formula(f1, d.depth(), lambda);
    let rep = energy_norm(d, &f)?;
    let finite = f1.iter().all(|v| (v - f1[0]).abs() <= tol);
    let divergent = looks_divergent(&rep.partial_sums);
    Ok(StationaryEnergy { finite, partial_sums: rep.partial_sums, divergent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::{pascal_h_function, tree_f_lambda};
    use crate::diagram::{gen_binary_tree, gen_pascal, gen_stationary};

    #[test]
    fn constant_has_no_energy() {
        let d = gen_pascal(5, 1.0).unwrap();
        let r = energy_norm(&d, &LevelFunction::constant(&d, 3.0)).unwrap();
        assert_eq!(r.energy, 0.0);
        assert!(r.level_currents.iter().all(|&i| i == 0.0));
    }

    #[test]
    fn tree_path_edges_carry_lambda_powers() {
        let d = gen_binary_tree(6, 2.0).unwrap();
        let f = tree_f_lambda(6, 2.0).unwrap();
        let r = energy_norm(&d, &f).unwrap();
        // Two path edges per level carry λ^{2−n}; the root edges carry λ².
        assert!((r.per_level[0] - 8.0).abs() < 1e-12);
        for n in 1..6 {
            assert!((r.per_level[n] - 2.0 * 2f64.powi(2 - n as i32)).abs() < 1e-12);
        }
        assert_eq!(r.i1, 0.0);
    }

    #[test]
    fn harmonic_formulas_on_pascal() {
        let d = gen_pascal(10, 1.0).unwrap();
        let h = energy_harmonic_formulas(&d, &pascal_h_function(10), 1e-9).unwrap();
        assert!((h.via_markov - h.via_laplacian).abs() < 1e-9);
        assert!((h.via_markov + h.boundary_correction - h.edge_sum).abs() < 1e-9);
        let r = energy_norm(&d, &pascal_h_function(10)).unwrap();
        assert!(kirchhoff_defects(&d, &pascal_h_function(10)).unwrap().iter().all(|&k| k < 1e-12));
        assert!(energy_lower_bound(&r).holds_at_every_depth);
    }

    #[test]
    fn divergence_test() {
        let harmonic: Vec<f64> = (1..=30).scan(0.0, |s, n| { *s += 1.0 / n as f64; Some(*s) }).collect();
        assert!(looks_divergent(&harmonic));
        let geometric: Vec<f64> = (1..=30).scan(0.0, |s, n| { *s += 0.5f64.powi(n); Some(*s) }).collect();
        assert!(!looks_divergent(&geometric));
        assert!(looks_cauchy(&geometric));
    }

    #[test]
    fn stationary_criterion() {
        let d = gen_stationary(&[vec![1, 1], vec![1, 0]], 30, 2.0).unwrap();
        let s = stationary_energy_criterion(&d, &[1.0, -1.0], 1e-12).unwrap();
        assert!(!s.finite && s.divergent);
        let z = stationary_energy_criterion(&d, &[0.0, 0.0], 1e-12).unwrap();
        assert!(z.finite && z.partial_sums.iter().all(|&e| e == 0.0));
    }
}
