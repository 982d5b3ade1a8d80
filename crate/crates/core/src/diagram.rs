//! Weighted Bratteli diagrams: storage, validation, generators and the text
//! file format.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sparse::{Csr, CsrBuilder};

/// A vertex `x ∈ V_level`, addressed by its position inside the level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId {
    pub level: usize,
    pub index: usize,
}

impl VertexId {
    pub const ROOT: VertexId = VertexId { level: 0, index: 0 };

    pub fn new(level: usize, index: usize) -> Self {
        VertexId { level, index }
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.level, self.index)
    }
}

/// How the stored prefix continues beyond its last level.
#[derive(Clone, Debug, PartialEq)]
pub enum ExtensionRule {
    /// Nothing is known past the stored levels.
    Explicit,
    Tree { lambda: f64 },
    /// Quotient of the binary tree by the automorphisms fixing the two
    /// boundary rays; see [`gen_tree_ray_quotient`].
    TreeRayQuotient { lambda: f64 },
    Pascal { lambda: f64 },
    Stationary { matrix: Vec<Vec<u8>>, lambda: f64 },
}

/// A finite prefix `V_0 ∪ … ∪ V_N` of a weighted Bratteli diagram.
///
/// Level `n` is joined to level `n + 1` by the conductance block `C_n`
/// (`|V_n| × |V_{n+1}|`). The sparsity pattern of `C_n` is the incidence
/// matrix `A_n`, so a stored zero is an edge carrying zero conductance.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagram {
    level_sizes: Vec<usize>,
    conductance: Vec<Csr>,
    rule: ExtensionRule,
}

impl Diagram {
    /// Assembles a diagram, checking only that the block shapes fit the
    /// level sizes. Use [`validate`] for the structural invariants.
    pub fn new(level_sizes: Vec<usize>, conductance: Vec<Csr>, rule: ExtensionRule) -> Result<Self> {
        if level_sizes.len() < 2 {
            return Err(Error::InvalidDiagram("a diagram needs at least two levels".into()));
        }
        if level_sizes[0] != 1 {
            return Err(Error::InvalidDiagram(format!("|V_0| must be 1, got {}", level_sizes[0])));
        }
        if let Some(n) = level_sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidDiagram(format!("level {n} is empty")));
        }
        if conductance.len() + 1 != level_sizes.len() {
            return Err(Error::Dimension(format!(
                "{} levels need {} conductance blocks, got {}",
                level_sizes.len(),
                level_sizes.len() - 1,
                conductance.len()
            )));
        }
        for (n, c) in conductance.iter().enumerate() {
            if c.nrows() != level_sizes[n] || c.ncols() != level_sizes[n + 1] {
                return Err(Error::Dimension(format!(
                    "C_{n} is {}x{}, expected {}x{}",
                    c.nrows(),
                    c.ncols(),
                    level_sizes[n],
                    level_sizes[n + 1]
                )));
            }
        }
        Ok(Diagram { level_sizes, conductance, rule })
    }

    /// Truncation depth `N`; levels `0..=N` are stored.
    pub fn depth(&self) -> usize {
        self.level_sizes.len() - 1
    }

    pub fn level_sizes(&self) -> &[usize] {
        &self.level_sizes
    }

    pub fn level_size(&self, n: usize) -> usize {
        self.level_sizes[n]
    }

    pub fn total_vertices(&self) -> usize {
        self.level_sizes.iter().sum()
    }

    pub fn num_edges(&self) -> usize {
        self.conductance.iter().map(Csr::nnz).sum()
    }

    /// The block `C_n` between `V_n` and `V_{n+1}`.
    pub fn conductance(&self, n: usize) -> &Csr {
        &self.conductance[n]
    }

    pub fn blocks(&self) -> &[Csr] {
        &self.conductance
    }

    pub fn rule(&self) -> &ExtensionRule {
        &self.rule
    }

    /// The 0-1 incidence matrix `A_n` as a dense table.
    pub fn incidence_dense(&self, n: usize) -> Vec<Vec<u8>> {
        let c = &self.conductance[n];
        let mut a = vec![vec![0u8; c.ncols()]; c.nrows()];
        for (i, j, _) in c.iter() {
            a[i][j] = 1;
        }
        a
    }

    pub fn contains(&self, x: VertexId) -> bool {
        x.level < self.level_sizes.len() && x.index < self.level_sizes[x.level]
    }

    pub fn check_vertex(&self, x: VertexId) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::NoSuchVertex(x))
        }
    }

    /// Conductance of the edge between `x` and `y`, if any.
    pub fn edge(&self, x: VertexId, y: VertexId) -> Option<f64> {
        if !self.contains(x) || !self.contains(y) {
            return None;
        }
        if y.level == x.level + 1 {
            self.conductance[x.level].get(x.index, y.index)
        } else if x.level == y.level + 1 {
            self.conductance[y.level].get(y.index, x.index)
        } else {
            None
        }
    }

    /// Neighbours of `x` with edge conductances: parents first, then
    /// children, each in index order.
    pub fn neighbors(&self, x: VertexId) -> Vec<(VertexId, f64)> {
        let mut out = Vec::new();
        if x.level > 0 {
            let c = &self.conductance[x.level - 1];
            for i in 0..c.nrows() {
                if let Some(v) = c.get(i, x.index) {
                    out.push((VertexId::new(x.level - 1, i), v));
                }
            }
        }
        if x.level < self.depth() {
            for (j, v) in self.conductance[x.level].row(x.index) {
                out.push((VertexId::new(x.level + 1, j), v));
            }
        }
        out
    }

    /// Total conductance `c(x)` per level. At the last stored level only the
    /// incoming edges are counted.
    pub fn total_conductance(&self) -> Vec<Vec<f64>> {
        let mut c: Vec<Vec<f64>> = self.level_sizes.iter().map(|&s| vec![0.0; s]).collect();
        for (n, block) in self.conductance.iter().enumerate() {
            for (i, j, v) in block.iter() {
                c[n][i] += v;
                c[n + 1][j] += v;
            }
        }
        c
    }

    /// Offset of level `n` in a level-major enumeration of all vertices.
    pub fn offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.level_sizes.len() + 1);
        let mut acc = 0;
        off.push(0);
        for &s in &self.level_sizes {
            acc += s;
            off.push(acc);
        }
        off
    }

    /// Keeps levels `0..=depth`.
    pub fn truncated(&self, depth: usize) -> Result<Diagram> {
        if depth == 0 || depth > self.depth() {
            return Err(Error::InvalidParameter(format!(
                "cannot truncate a depth-{} diagram to depth {depth}",
                self.depth()
            )));
        }
        Diagram::new(
            self.level_sizes[..=depth].to_vec(),
            self.conductance[..depth].to_vec(),
            self.rule.clone(),
        )
    }

    /// The same diagram stored to `depth` levels, regenerated from the
    /// extension rule when it has to grow.
    pub fn with_depth(&self, depth: usize) -> Result<Diagram> {
        if depth <= self.depth() {
            return self.truncated(depth);
        }
        match &self.rule {
            ExtensionRule::Explicit => Err(Error::InvalidParameter(format!(
                "explicit diagram of depth {} cannot be extended to {depth}",
                self.depth()
            ))),
            ExtensionRule::Tree { lambda } => gen_binary_tree(depth, *lambda),
            ExtensionRule::TreeRayQuotient { lambda } => gen_tree_ray_quotient(depth, *lambda),
            ExtensionRule::Pascal { lambda } => gen_pascal(depth, *lambda),
            ExtensionRule::Stationary { matrix, lambda } => gen_stationary(matrix, depth, *lambda),
        }
    }

    /// Multiplies every conductance by `t`.
    pub fn scaled(&self, t: f64) -> Diagram {
        Diagram {
            level_sizes: self.level_sizes.clone(),
            conductance: self.conductance.iter().map(|c| c.scaled(t)).collect(),
            rule: ExtensionRule::Explicit,
        }
    }

    /// Serializes in the `bratteli v1` text format.
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut s = String::from("bratteli v1\n");
        let sizes: Vec<String> = self.level_sizes.iter().map(|n| n.to_string()).collect();
        let _ = writeln!(s, "levels {} : {}", self.level_sizes.len(), sizes.join(" "));
        for (n, block) in self.conductance.iter().enumerate() {
            for (i, j, v) in block.iter() {
                let _ = writeln!(s, "e {n} {i} {j} {v}");
            }
        }
        s
    }

    /// Parses the `bratteli v1` text format. Blank lines and lines starting
    /// with `#` are ignored.
    pub fn parse(text: &str) -> Result<Diagram> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let perr = |line: usize, msg: &str| Error::Parse { line, msg: msg.to_string() };
        let (ln, header) = lines.next().ok_or_else(|| perr(1, "empty input"))?;
        if header != "bratteli v1" {
            return Err(perr(ln, "expected header `bratteli v1`"));
        }
        let (ln, levels) = lines.next().ok_or_else(|| perr(ln, "missing `levels` line"))?;
        let (count, sizes) = levels
            .strip_prefix("levels")
            .and_then(|r| r.split_once(':'))
            .ok_or_else(|| perr(ln, "expected `levels <k> : <s_0> ...`"))?;
        let count: usize = count.trim().parse().map_err(|_| perr(ln, "bad level count"))?;
        let sizes: Vec<usize> = sizes
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| perr(ln, "bad level size"))?;
        if sizes.len() != count {
            return Err(perr(ln, &format!("declared {count} levels but listed {}", sizes.len())));
        }
        if count < 2 {
            return Err(perr(ln, "need at least two levels"));
        }
        if let Some(n) = sizes.iter().position(|&s| s == 0) {
            return Err(perr(ln, &format!("level {n} has size 0")));
        }
        let mut trips: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); count - 1];
        let mut edge_line: Vec<Vec<usize>> = vec![Vec::new(); count - 1];
        for (ln, l) in lines {
            let t: Vec<&str> = l.split_whitespace().collect();
            if t.len() != 5 || t[0] != "e" {
                return Err(perr(ln, "expected `e <n> <i> <j> <c>`"));
            }
            let n: usize = t[1].parse().map_err(|_| perr(ln, "bad level"))?;
            let i: usize = t[2].parse().map_err(|_| perr(ln, "bad source index"))?;
            let j: usize = t[3].parse().map_err(|_| perr(ln, "bad target index"))?;
            let c: f64 = t[4].parse().map_err(|_| perr(ln, "bad conductance"))?;
            if n + 1 >= count {
                return Err(perr(ln, &format!("edge level {n} out of range")));
            }
            if i >= sizes[n] || j >= sizes[n + 1] {
                return Err(perr(ln, &format!("edge ({n},{i})-({},{j}) out of range", n + 1)));
            }
            if !c.is_finite() {
                return Err(perr(ln, "conductance must be finite"));
            }
            trips[n].push((i, j, c));
            edge_line[n].push(ln);
        }
        let mut blocks = Vec::with_capacity(count - 1);
        for (n, t) in trips.iter().enumerate() {
            let csr = Csr::from_triplets(sizes[n], sizes[n + 1], t).map_err(|(i, j)| {
                let k = t.iter().rposition(|&(a, b, _)| a == i && b == j).unwrap();
                perr(edge_line[n][k], &format!("duplicate edge ({n},{i})-({},{j})", n + 1))
            })?;
            blocks.push(csr);
        }
        Diagram::new(sizes, blocks, ExtensionRule::Explicit)
    }
}

/// One failed structural invariant.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    RootLevelSize(usize),
    ZeroConductance { level: usize, from: usize, to: usize },
    NegativeConductance { level: usize, from: usize, to: usize, value: f64 },
    NoOutgoing(VertexId),
    NoIncoming(VertexId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RootLevelSize(s) => write!(f, "level 0: root level has {s} vertices, expected 1"),
            Violation::ZeroConductance { level, from, to } => {
                write!(f, "level {level}: c=0 on edge ({level},{from})-({},{to})", level + 1)
            }
            Violation::NegativeConductance { level, from, to, value } => write!(
                f,
                "level {level}: negative conductance {value} on edge ({level},{from})-({},{to})",
                level + 1
            ),
            Violation::NoOutgoing(x) => write!(f, "level {}: vertex without outgoing edge {x}", x.level),
            Violation::NoIncoming(x) => write!(f, "level {}: vertex without incoming edge {x}", x.level),
        }
    }
}

/// Checks the diagram invariants: positive conductance on every stored edge,
/// an outgoing edge at every vertex below the last level and an incoming
/// edge at every vertex past the root.
pub fn validate(d: &Diagram) -> Vec<Violation> {
    let mut out = Vec::new();
    if d.level_sizes[0] != 1 {
        out.push(Violation::RootLevelSize(d.level_sizes[0]));
    }
    for (n, block) in d.conductance.iter().enumerate() {
        for (i, j, v) in block.iter() {
            if v == 0.0 {
                out.push(Violation::ZeroConductance { level: n, from: i, to: j });
            } else if v < 0.0 || v.is_nan() {
                out.push(Violation::NegativeConductance { level: n, from: i, to: j, value: v });
            }
        }
        for i in 0..block.nrows() {
            if block.row_len(i) == 0 {
                out.push(Violation::NoOutgoing(VertexId::new(n, i)));
            }
        }
        for (j, &k) in block.col_counts().iter().enumerate() {
            if k == 0 {
                out.push(Violation::NoIncoming(VertexId::new(n + 1, j)));
            }
        }
    }
    out
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")))
    }
}

fn check_depth(depth: usize) -> Result<()> {
    if depth >= 1 {
        Ok(())
    } else {
        Err(Error::InvalidParameter("depth must be at least 1".into()))
    }
}

/// The binary tree: `|V_n| = 2^n`, vertex `i` of level `n` joined to
/// `2i` and `2i+1` with conductance `λ^n`.
pub fn gen_binary_tree(depth: usize, lambda: f64) -> Result<Diagram> {
    check_depth(depth)?;
    check_lambda(lambda)?;
    if depth > 30 {
        return Err(Error::InvalidParameter(format!(
            "binary tree of depth {depth} is too large to store; use the ray quotient"
        )));
    }
    let mut blocks = Vec::with_capacity(depth);
    for n in 0..depth {
        let rows = 1usize << n;
        let w = lambda.powi(n as i32);
        let mut b = CsrBuilder::with_capacity(rows * 2, rows, rows * 2);
        for i in 0..rows {
            b.push(2 * i, w);
            b.push(2 * i + 1, w);
            b.finish_row().unwrap();
        }
        blocks.push(b.finish());
    }
    let sizes = (0..=depth).map(|n| 1usize << n).collect();
    Diagram::new(sizes, blocks, ExtensionRule::Tree { lambda })
}

/// The Pascal graph: `|V_n| = n + 1`, vertex `i` of level `n` joined to
/// `i` and `i+1` of level `n+1` with conductance `λ^n`.
pub fn gen_pascal(depth: usize, lambda: f64) -> Result<Diagram> {
    check_depth(depth)?;
    check_lambda(lambda)?;
    let mut blocks = Vec::with_capacity(depth);
    for n in 0..depth {
        let w = lambda.powi(n as i32);
        let mut b = CsrBuilder::new(n + 2);
        for i in 0..=n {
            b.push(i, w);
            b.push(i + 1, w);
            b.finish_row().unwrap();
        }
        blocks.push(b.finish());
    }
    let sizes = (0..=depth).map(|n| n + 1).collect();
    Diagram::new(sizes, blocks, ExtensionRule::Pascal { lambda })
}

/// A stationary diagram with incidence `A` at every level `n ≥ 1` and
/// conductance `λ^n A`. The root is joined to every vertex of `V_1` with
/// unit conductance.
pub fn gen_stationary(a: &[Vec<u8>], depth: usize, lambda: f64) -> Result<Diagram> {
    check_depth(depth)?;
    check_lambda(lambda)?;
    let d = a.len();
    if d == 0 || a.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidParameter("stationary matrix must be square and non-empty".into()));
    }
    if a.iter().flatten().any(|&v| v > 1) {
        return Err(Error::InvalidParameter("stationary matrix must be 0-1".into()));
    }
    if let Some(i) = a.iter().position(|r| r.iter().all(|&v| v == 0)) {
        return Err(Error::InvalidParameter(format!("row {i} of the stationary matrix is zero")));
    }
    if let Some(j) = (0..d).find(|&j| a.iter().all(|r| r[j] == 0)) {
        return Err(Error::InvalidParameter(format!("column {j} of the stationary matrix is zero")));
    }
    let mut blocks = Vec::with_capacity(depth);
    blocks.push(Csr::from_dense(&[vec![1.0; d]], d));
    for n in 1..depth {
        let w = lambda.powi(n as i32);
        let rows: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|&v| v as f64 * w).collect()).collect();
        blocks.push(Csr::from_dense(&rows, d));
    }
    let mut sizes = vec![1];
    sizes.extend(std::iter::repeat(d).take(depth));
    Diagram::new(sizes, blocks, ExtensionRule::Stationary { matrix: a.to_vec(), lambda })
}

/// A random 0-1 diagram with unit conductance and the given level sizes.
///
/// Every vertex of `V_{n+1}` receives one random parent, every childless
/// vertex of `V_n` one random child, and each remaining pair is joined with
/// probability 1/2. The result depends only on `(profile, seed)`.
pub fn gen_bottleneck(profile: &[usize], seed: u64) -> Result<Diagram> {
    if profile.len() < 2 || profile[0] != 1 || profile.contains(&0) {
        return Err(Error::InvalidParameter(
            "profile must start with 1, have at least two levels and no zero sizes".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut blocks = Vec::with_capacity(profile.len() - 1);
    for n in 0..profile.len() - 1 {
        let (r, c) = (profile[n], profile[n + 1]);
        let mut a = vec![vec![false; c]; r];
        for j in 0..c {
            a[rng.random_range(0..r)][j] = true;
        }
        for row in a.iter_mut() {
            if !row.iter().any(|&b| b) {
                row[rng.random_range(0..c)] = true;
            }
        }
        for row in a.iter_mut() {
            for e in row.iter_mut() {
                if !*e && rng.random_bool(0.5) {
                    *e = true;
                }
            }
        }
        let rows: Vec<Vec<f64>> = a.iter().map(|row| row.iter().map(|&b| b as u8 as f64).collect()).collect();
        blocks.push(Csr::from_dense(&rows, c));
    }
    Diagram::new(profile.to_vec(), blocks, ExtensionRule::Explicit)
}

/// The binary tree folded by the automorphisms that fix its two boundary
/// rays (leftmost and rightmost vertices of every level).
///
/// Each half of level `n ≥ 1` has `n` classes: the ray vertex (index 0
/// of the half) and, for `1 ≤ k < n`, the level-`n` part of the subtree
/// hanging off the ray at level `k` (index `k`). The left half occupies
/// indices `0..n`, the right half `n..2n`. Conductances are summed over the
/// classes, so functions that are constant on the classes keep their
/// Laplacian (up to the class size) and their energy. This makes 30+
/// levels of the tree tractable.
pub fn gen_tree_ray_quotient(depth: usize, lambda: f64) -> Result<Diagram> {
    check_depth(depth)?;
    check_lambda(lambda)?;
    let mut blocks = Vec::with_capacity(depth);
    blocks.push(Csr::from_dense(&[vec![1.0, 1.0]], 2));
    for n in 1..depth {
        let w = lambda.powi(n as i32);
        let mut b = CsrBuilder::new(2 * (n + 1));
        for half in 0..2 {
            let to = half * (n + 1);
            for k in 0..n {
                if k == 0 {
                    b.push(to, w);
                    b.push(to + n, w);
                } else {
                    b.push(to + k, w * 2f64.powi((n - k) as i32));
                }
                b.finish_row().unwrap();
            }
        }
        blocks.push(b.finish());
    }
    let mut sizes = vec![1];
    sizes.extend((1..=depth).map(|n| 2 * n));
    Diagram::new(sizes, blocks, ExtensionRule::TreeRayQuotient { lambda })
}

/// Number of tree vertices represented by class `index` of level `n` of
/// [`gen_tree_ray_quotient`].
pub fn tree_ray_class_size(level: usize, index: usize) -> f64 {
    if level == 0 {
        return 1.0;
    }
    let k = index % level;
    if k == 0 {
        1.0
    } else {
        2f64.powi((level - k - 1) as i32)
    }
}

/// Builds a diagram from CLI shorthand: `tree:<depth>:<λ>`,
/// `pascal:<depth>:<λ>`, `stationary:<rows ; separated>:<depth>:<λ>`,
/// `bottleneck:<sizes , separated>:<seed>` or `treeq:<depth>:<λ>`.
pub fn from_generator_spec(spec: &str) -> Result<Diagram> {
    let bad = |msg: &str| Error::InvalidParameter(format!("generator `{spec}`: {msg}"));
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("bad number"));
    let int = |s: &str| s.trim().parse::<usize>().map_err(|_| bad("bad integer"));
    match parts.as_slice() {
        ["tree", d, l] => gen_binary_tree(int(d)?, num(l)?),
        ["treeq", d, l] => gen_tree_ray_quotient(int(d)?, num(l)?),
        ["pascal", d, l] => gen_pascal(int(d)?, num(l)?),
        ["stationary", rows, d, l] => {
            let a = rows
                .split(';')
                .map(|r| {
                    r.split(|c: char| c == ',' || c.is_whitespace())
                        .filter(|t| !t.is_empty())
                        .map(|t| t.parse::<u8>().map_err(|_| bad("matrix entries must be 0 or 1")))
                        .collect::<Result<Vec<u8>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            gen_stationary(&a, int(d)?, num(l)?)
        }
        ["bottleneck", sizes, seed] => {
            let p = sizes.split(',').map(int).collect::<Result<Vec<_>>>()?;
            let seed = seed.trim().parse::<u64>().map_err(|_| bad("bad seed"))?;
            gen_bottleneck(&p, seed)
        }
        _ => Err(bad("unknown generator")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_depth_two() {
        let d = gen_binary_tree(2, 2.0).unwrap();
        assert_eq!(d.level_sizes(), &[1, 2, 4]);
        assert_eq!(d.conductance(0).to_dense(), vec![vec![1.0, 1.0]]);
        assert_eq!(
            d.conductance(1).to_dense(),
            vec![vec![2.0, 2.0, 0.0, 0.0], vec![0.0, 0.0, 2.0, 2.0]]
        );
        assert!(validate(&d).is_empty());
    }

    #[test]
    fn tree_small_lambda() {
        let d = gen_binary_tree(3, 0.5).unwrap();
        assert!(d.conductance(2).values().iter().all(|&v| v == 0.25));
        assert_eq!(gen_binary_tree(1, 1.0).unwrap().conductance(0).to_dense(), vec![vec![1.0, 1.0]]);
        assert!(gen_binary_tree(2, 0.0).is_err());
        assert!(gen_binary_tree(2, -1.0).is_err());
    }

    #[test]
    fn pascal_incidence_and_degrees() {
        let d = gen_pascal(2, 1.0).unwrap();
        assert_eq!(d.incidence_dense(1), vec![vec![1, 1, 0], vec![0, 1, 1]]);
        assert_eq!(gen_pascal(1, 1.0).unwrap().incidence_dense(0), vec![vec![1, 1]]);
        let d = gen_pascal(3, 1.0).unwrap();
        assert_eq!(d.neighbors(VertexId::new(2, 1)).len(), 4);
        assert_eq!(d.neighbors(VertexId::new(2, 0)).len(), 3);
        for n in 0..3 {
            assert!(d.conductance(n).row_sums().iter().all(|&s| s == 2.0));
            let cs = d.conductance(n).col_sums();
            assert_eq!(cs[0], 1.0);
            assert_eq!(cs[n + 1], 1.0);
            assert!(cs[1..=n].iter().all(|&s| s == 2.0));
        }
    }

    #[test]
    fn stationary_blocks() {
        let d = gen_stationary(&[vec![1, 1], vec![1, 0]], 3, 2.0).unwrap();
        assert_eq!(d.conductance(2).to_dense(), vec![vec![4.0, 4.0], vec![4.0, 0.0]]);
        let d = gen_stationary(&[vec![1, 1], vec![1, 1]], 2, 1.0).unwrap();
        assert_eq!(d.conductance(1).to_dense(), vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert!(gen_stationary(&[vec![1, 0], vec![1, 0]], 2, 1.0).is_err());
        assert!(gen_stationary(&[vec![0, 0], vec![1, 1]], 2, 1.0).is_err());
    }

    #[test]
    fn bottleneck_is_deterministic_and_valid() {
        let a = gen_bottleneck(&[1, 3, 3, 1, 3], 7).unwrap();
        let b = gen_bottleneck(&[1, 3, 3, 1, 3], 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.level_size(3), 1);
        assert!(validate(&a).is_empty());
        let s = gen_bottleneck(&[1, 2], 0).unwrap();
        assert_eq!(s.depth(), 1);
    }

    #[test]
    fn violations_are_reported() {
        let c0 = Csr::from_dense(&[vec![1.0, 1.0]], 2);
        let c1 = Csr::from_dense(&[vec![1.0, 0.0], vec![1.0, 0.0]], 2);
        let d = Diagram::new(vec![1, 2, 2], vec![c0.clone(), c1], ExtensionRule::Explicit).unwrap();
        let v = validate(&d);
        assert_eq!(v, vec![Violation::NoIncoming(VertexId::new(2, 1))]);
        assert!(v[0].to_string().contains("vertex without incoming edge"));

        let c1 = Csr::from_triplets(2, 2, &[(0, 0, 0.0), (1, 1, 1.0)]).unwrap();
        let d = Diagram::new(vec![1, 2, 2], vec![c0, c1], ExtensionRule::Explicit).unwrap();
        let v = validate(&d);
        assert_eq!(v.len(), 1);
        assert!(v[0].to_string().contains("c=0 on edge"));
    }

    #[test]
    fn text_roundtrip() {
        let d = gen_pascal(4, 1.5).unwrap();
        let back = Diagram::parse(&d.to_text()).unwrap();
        assert_eq!(back.blocks(), d.blocks());
        assert_eq!(back.level_sizes(), d.level_sizes());
    }

    #[test]
    fn parse_errors() {
        assert!(Diagram::parse("bratteli v1\nlevels 2 : 1 0\n").is_err());
        assert!(Diagram::parse("bratteli v2\nlevels 2 : 1 1\n").is_err());
        let dup = "bratteli v1\nlevels 2 : 1 1\ne 0 0 0 1\ne 0 0 0 2\n";
        match Diagram::parse(dup) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn generator_specs() {
        assert_eq!(from_generator_spec("tree:3:2").unwrap(), gen_binary_tree(3, 2.0).unwrap());
        let s = from_generator_spec("stationary:1,1;1,0:3:2").unwrap();
        assert_eq!(s.conductance(2).to_dense(), vec![vec![4.0, 4.0], vec![4.0, 0.0]]);
        assert!(from_generator_spec("cube:3").is_err());
    }

    #[test]
    fn ray_quotient_counts_match_tree() {
        let q = gen_tree_ray_quotient(6, 2.0).unwrap();
        assert!(validate(&q).is_empty());
        let t = gen_binary_tree(6, 2.0).unwrap();
        for n in 0..=6 {
            let total: f64 = (0..q.level_size(n)).map(|i| tree_ray_class_size(n, i)).sum();
            assert_eq!(total as usize, t.level_size(n));
        }
        for n in 0..6 {
            let qsum: f64 = q.conductance(n).values().iter().sum();
            let tsum: f64 = t.conductance(n).values().iter().sum();
            assert_eq!(qsum, tsum);
        }
    }
}
