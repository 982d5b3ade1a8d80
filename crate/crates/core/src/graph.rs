//! General weighted graphs and their conversion to Bratteli diagrams by
//! breadth-first levels.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use crate::diagram::{Diagram, ExtensionRule};
use crate::error::{Error, Result};
use crate::sparse::CsrBuilder;

/// An undirected graph with positive edge conductances, no loops and no
/// multiple edges.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralGraph {
    adj: Vec<Vec<(usize, f64)>>,
}

impl GeneralGraph {
    pub fn new(num_vertices: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); num_vertices];
        let mut seen = BTreeMap::new();
        for &(a, b, c) in edges {
            if a >= num_vertices || b >= num_vertices {
                return Err(Error::InvalidParameter(format!("edge {a}-{b} has an endpoint out of range")));
            }
            if a == b {
                return Err(Error::InvalidParameter(format!("loop at vertex {a}")));
            }
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidParameter(format!("edge {a}-{b} has conductance {c}")));
            }
            if seen.insert((a.min(b), a.max(b)), ()).is_some() {
                return Err(Error::InvalidParameter(format!("duplicate edge {a}-{b}")));
            }
            adj[a].push((b, c));
            adj[b].push((a, c));
        }
        for l in &mut adj {
            l.sort_by_key(|p| p.0);
        }
        Ok(GeneralGraph { adj })
    }

    pub fn num_vertices(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn edge(&self, a: usize, b: usize) -> Option<f64> {
        self.adj[a].binary_search_by_key(&b, |p| p.0).ok().map(|k| self.adj[a][k].1)
    }

    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (a, l) in self.adj.iter().enumerate() {
            for &(b, c) in l {
                if a < b {
                    out.push((a, b, c));
                }
            }
        }
        out
    }

    /// Breadth-first distances from `root` (`usize::MAX` if unreachable).
    pub fn distances(&self, root: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.adj.len()];
        dist[root] = 0;
        let mut q = VecDeque::from([root]);
        while let Some(v) = q.pop_front() {
            for &(w, _) in &self.adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    q.push_back(w);
                }
            }
        }
        dist
    }

    /// Text form: `graph v1`, `v <count>`, then `e <i> <j> <c>` lines.
    pub fn to_text(&self) -> String {
        let mut s = format!("graph v1\nv {}\n", self.num_vertices());
        for (a, b, c) in self.edges() {
            let _ = writeln!(s, "e {a} {b} {}", crate::function::fmt_sig(c));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.split('#').next().unwrap().trim()))
            .filter(|(_, l)| !l.is_empty());
        let err = |line: usize, msg: &str| Error::Parse { line, msg: msg.to_string() };
        match lines.next() {
            Some((_, "graph v1")) => {}
            Some((k, _)) => return Err(err(k, "expected `graph v1`")),
            None => return Err(err(1, "empty input")),
        }
        let n = match lines.next() {
            Some((k, l)) => {
                let t: Vec<&str> = l.split_whitespace().collect();
                if t.len() != 2 || t[0] != "v" {
                    return Err(err(k, "expected `v <count>`"));
                }
                t[1].parse::<usize>().map_err(|_| err(k, "bad vertex count"))?
            }
            None => return Err(err(2, "missing vertex count")),
        };
        let mut edges = Vec::new();
        let mut seen = BTreeMap::new();
        for (k, l) in lines {
            let t: Vec<&str> = l.split_whitespace().collect();
            if t.len() != 4 || t[0] != "e" {
                return Err(err(k, "expected `e <i> <j> <c>`"));
            }
            let a: usize = t[1].parse().map_err(|_| err(k, "bad vertex index"))?;
            let b: usize = t[2].parse().map_err(|_| err(k, "bad vertex index"))?;
            let c: f64 = t[3].parse().map_err(|_| err(k, "bad conductance"))?;
            if seen.insert((a.min(b), a.max(b)), k).is_some() {
                return Err(err(k, "duplicate edge"));
            }
            edges.push((a, b, c));
        }
        GeneralGraph::new(n, &edges).map_err(|e| match e {
            Error::InvalidParameter(m) => Error::Parse { line: 0, msg: m },
            e => e,
        })
    }
}

/// The ladder with `len + 1` rungs: vertex `2k + r` is `(k, r)`, with
/// rails `(k, r)−(k+1, r)` and rungs `(k, 0)−(k, 1)`, unit conductance.
pub fn ladder_graph(len: usize) -> GeneralGraph {
    let v = |k: usize, r: usize| 2 * k + r;
    let mut e = Vec::new();
    for k in 0..=len {
        e.push((v(k, 0), v(k, 1), 1.0));
        if k < len {
            e.push((v(k, 0), v(k + 1, 0), 1.0));
            e.push((v(k, 1), v(k + 1, 1), 1.0));
        }
    }
    GeneralGraph::new(2 * (len + 1), &e).unwrap()
}

/// The ladder with both diagonals added in every square.
pub fn ladder_with_diagonals(len: usize) -> GeneralGraph {
    let v = |k: usize, r: usize| 2 * k + r;
    let mut e = ladder_graph(len).edges();
    for k in 0..len {
        e.push((v(k, 0), v(k + 1, 1), 1.0));
        e.push((v(k, 1), v(k + 1, 0), 1.0));
    }
    GeneralGraph::new(2 * (len + 1), &e).unwrap()
}

/// The ball `|x| + |y| ≤ radius` of `ℤ²` with unit conductance, and the
/// coordinates of each vertex. Vertex 0 is the origin.
pub fn lattice_ball(radius: usize) -> (GeneralGraph, Vec<(i64, i64)>) {
    let r = radius as i64;
    let mut pts = vec![(0i64, 0i64)];
    for x in -r..=r {
        for y in -r..=r {
            if x.abs() + y.abs() <= r && (x, y) != (0, 0) {
                pts.push((x, y));
            }
        }
    }
    let index: BTreeMap<(i64, i64), usize> = pts.iter().enumerate().map(|(k, &p)| (p, k)).collect();
    let mut e = Vec::new();
    for (k, &(x, y)) in pts.iter().enumerate() {
        for q in [(x + 1, y), (x, y + 1)] {
            if let Some(&m) = index.get(&q) {
                e.push((k, m, 1.0));
            }
        }
    }
    (GeneralGraph::new(pts.len(), &e).unwrap(), pts)
}

/// Why a graph does not have Bratteli structure from a root.
#[derive(Clone, Debug, PartialEq)]
pub enum Witness {
    /// A vertex of degree one (not on the outermost sphere).
    DegreeOne(usize),
    /// An edge joining two vertices at the same distance from the root.
    IntraLevelEdge(usize, usize),
}

/// Answer of [`check_bratteli_structure`].
#[derive(Clone, Debug, PartialEq)]
pub enum Structure {
    /// The spheres `V_n = {y : dist(root, y) = n}`.
    Yes { levels: Vec<Vec<usize>> },
    No(Witness),
}

fn spheres(g: &GeneralGraph, root: usize) -> Result<(Vec<usize>, Vec<Vec<usize>>)> {
    if root >= g.num_vertices() {
        return Err(Error::InvalidParameter(format!("root {root} out of range")));
    }
    let dist = g.distances(root);
    let unreachable = dist.iter().filter(|&&d| d == usize::MAX).count();
    if unreachable > 0 {
        return Err(Error::Disconnected(unreachable));
    }
    let maxd = *dist.iter().max().unwrap();
    let mut levels = vec![Vec::new(); maxd + 1];
    for (v, &d) in dist.iter().enumerate() {
        levels[d].push(v);
    }
    Ok((dist, levels))
}

/// Decides whether the distance spheres around `root` form a Bratteli
/// diagram: no edge inside a sphere and every vertex of degree at least two.
/// The outermost sphere of a finite graph is exempt from the degree test.
pub fn check_bratteli_structure(g: &GeneralGraph, root: usize) -> Result<Structure> {
    let (dist, levels) = spheres(g, root)?;
    let outer = levels.len() - 1;
    for v in 0..g.num_vertices() {
        for &(w, _) in g.neighbors(v) {
            if v < w && dist[v] == dist[w] {
                return Ok(Structure::No(Witness::IntraLevelEdge(v, w)));
            }
        }
    }
    for v in 0..g.num_vertices() {
        if g.degree(v) < 2 && dist[v] != outer {
            return Ok(Structure::No(Witness::DegreeOne(v)));
        }
    }
    Ok(Structure::Yes { levels })
}

/// Builds the diagram on the given levels (lists of graph vertices) using
/// the edges of `g` between consecutive levels, truncated at `depth`.
fn diagram_on_levels(g: &GeneralGraph, levels: &[Vec<usize>], depth: usize) -> Result<Diagram> {
    if depth == 0 || depth >= levels.len() {
        return Err(Error::InvalidParameter(format!("depth {depth} must lie in 1..{}", levels.len())));
    }
    let mut pos = vec![usize::MAX; g.num_vertices()];
    for l in levels {
        for (k, &v) in l.iter().enumerate() {
            pos[v] = k;
        }
    }
    let mut blocks = Vec::with_capacity(depth);
    for n in 0..depth {
        let next: std::collections::BTreeSet<usize> = levels[n + 1].iter().copied().collect();
        let mut b = CsrBuilder::new(levels[n + 1].len());
        for &v in &levels[n] {
            for &(w, c) in g.neighbors(v) {
                if next.contains(&w) {
                    b.push(pos[w], c);
                }
            }
            b.finish_row().map_err(|_| Error::InvalidDiagram("duplicate edge".into()))?;
        }
        blocks.push(b.finish());
    }
    let sizes = levels[..=depth].iter().map(Vec::len).collect();
    Diagram::new(sizes, blocks, ExtensionRule::Explicit)
}

/// The diagram of distance spheres around `root`, truncated at `depth`.
/// Fails with the witness when the graph has no Bratteli structure.
pub fn to_diagram(g: &GeneralGraph, root: usize, depth: usize) -> Result<(Diagram, Vec<Vec<usize>>)> {
    match check_bratteli_structure(g, root)? {
        Structure::Yes { levels } => {
            let d = diagram_on_levels(g, &levels, depth)?;
            Ok((d, levels[..=depth].to_vec()))
        }
        Structure::No(w) => Err(Error::InvalidDiagram(format!("no Bratteli structure: {w:?}"))),
    }
}

/// Result of [`extract_maximal_bratteli`].
#[derive(Clone, Debug, PartialEq)]
pub struct Extraction {
    pub diagram: Diagram,
    /// Graph vertices of each level, in diagram order.
    pub levels: Vec<Vec<usize>>,
    /// Candidates left out only because of an edge to a kept vertex of the
    /// same level; the others were unreachable from the kept part or
    /// pruned for lack of children.
    pub blocked: Vec<usize>,
    /// Maximality holds for this finite ball only.
    pub certified_radius: usize,
}

/// Grows a Bratteli subgraph along a self-avoiding geodesic ray.
///
/// Level `n` is a maximal set of distance-`n` vertices adjacent to level
/// `n − 1` and without edges among themselves, chosen greedily with the ray
/// vertex first, then by index. Vertices left without children below
/// `depth` are pruned bottom-up.
pub fn extract_maximal_bratteli(g: &GeneralGraph, ray: &[usize], depth: usize) -> Result<Extraction> {
    if ray.len() <= depth {
        return Err(Error::InvalidParameter(format!("ray has {} vertices, depth {depth} needs {}", ray.len(), depth + 1)));
    }
    let mut seen = std::collections::BTreeSet::new();
    for (k, &v) in ray.iter().enumerate() {
        if v >= g.num_vertices() || !seen.insert(v) {
            return Err(Error::NotSelfAvoiding(k));
        }
        if k > 0 && g.edge(ray[k - 1], v).is_none() {
            return Err(Error::NotSelfAvoiding(k));
        }
    }
    let dist = g.distances(ray[0]);
    if let Some(k) = ray.iter().take(depth + 1).enumerate().position(|(k, &v)| dist[v] != k) {
        return Err(Error::InvalidParameter(format!("ray vertex {k} is not at distance {k} from the start")));
    }
    let mut levels: Vec<Vec<usize>> = vec![vec![ray[0]]];
    let mut blocked = Vec::new();
    let mut kept = vec![false; g.num_vertices()];
    kept[ray[0]] = true;
    for n in 1..=depth {
        let mut cand: Vec<usize> = (0..g.num_vertices())
            .filter(|&v| dist[v] == n && g.neighbors(v).iter().any(|&(w, _)| kept[w] && dist[w] == n - 1))
            .collect();
        cand.retain(|&v| v != ray[n]);
        cand.insert(0, ray[n]);
        let mut level = Vec::new();
        for v in cand {
            if g.neighbors(v).iter().any(|&(w, _)| kept[w] && dist[w] == n) {
                blocked.push(v);
                continue;
            }
            kept[v] = true;
            level.push(v);
        }
        level.sort_unstable();
        levels.push(level);
    }
    // Prune vertices without children, bottom-up.
    for n in (1..depth).rev() {
        let below: std::collections::BTreeSet<usize> = levels[n + 1].iter().copied().collect();
        levels[n].retain(|&v| g.neighbors(v).iter().any(|(w, _)| below.contains(w)));
    }
    let diagram = diagram_on_levels(g, &levels, depth)?;
    blocked.sort_unstable();
    Ok(Extraction { diagram, levels, blocked, certified_radius: depth })
}

/// The ladder as a diagram rooted at a corner, with levels `0..=depth`.
pub fn gen_ladder(depth: usize) -> Result<Diagram> {
    Ok(to_diagram(&ladder_graph(depth + 1), 0, depth)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::validate;

    #[test]
    fn ladder_is_bratteli() {
        let g = ladder_graph(5);
        match check_bratteli_structure(&g, 0).unwrap() {
            Structure::Yes { levels } => {
                assert_eq!(levels[0], vec![0]);
                assert_eq!(levels[1], vec![1, 2]);
                assert_eq!(levels[3], vec![5, 6]);
            }
            other => panic!("{other:?}"),
        }
        let d = gen_ladder(8).unwrap();
        assert!(validate(&d).is_empty());
        assert_eq!(d.level_sizes(), &[1, 2, 2, 2, 2, 2, 2, 2, 2]);
    }

    #[test]
    fn diagonals_break_it() {
        let g = ladder_with_diagonals(4);
        assert!(matches!(check_bratteli_structure(&g, 0).unwrap(), Structure::No(Witness::IntraLevelEdge(..))));
        let ray: Vec<usize> = (0..=4).map(|k| 2 * k).collect();
        let ex = extract_maximal_bratteli(&g, &ray, 4).unwrap();
        assert_eq!(ex.levels, (0..=4).map(|k| vec![2 * k]).collect::<Vec<_>>());
        assert!(validate(&ex.diagram).is_empty());
    }

    #[test]
    fn lattice_spheres() {
        let (g, pts) = lattice_ball(4);
        match check_bratteli_structure(&g, 0).unwrap() {
            Structure::Yes { levels } => {
                for (n, l) in levels.iter().enumerate() {
                    assert_eq!(l.len(), if n == 0 { 1 } else { 4 * n });
                    assert!(l.iter().all(|&v| (pts[v].0.abs() + pts[v].1.abs()) as usize == n));
                }
            }
            other => panic!("{other:?}"),
        }
        let index = |p: (i64, i64)| pts.iter().position(|&q| q == p).unwrap();
        let ray: Vec<usize> = (0..=4).map(|x| index((x, 0))).collect();
        let ex = extract_maximal_bratteli(&g, &ray, 4).unwrap();
        assert_eq!(ex.levels.iter().map(Vec::len).collect::<Vec<_>>(), vec![1, 4, 8, 12, 16]);
        assert!(ex.blocked.is_empty());
    }

    #[test]
    fn text_roundtrip_and_errors() {
        let g = ladder_graph(2);
        assert_eq!(GeneralGraph::parse(&g.to_text()).unwrap(), g);
        assert!(GeneralGraph::parse("graph v1\nv 2\ne 0 1 1\ne 1 0 2\n").is_err());
        let (a, _) = lattice_ball(1);
        let broken = GeneralGraph::new(3, &[(0, 1, 1.0)]).unwrap();
        assert!(matches!(check_bratteli_structure(&broken, 0), Err(Error::Disconnected(1))));
        assert_eq!(a.num_vertices(), 5);
    }
}
