//! Regression of the worked examples: each case recomputes the closed
//! forms with the solvers and tabulates expected against computed values.

use std::fmt;

use crate::closed_form::{pascal_h, pascal_pins, stationary_formula, tree_path_value};
use crate::diagram::{gen_binary_tree, gen_pascal, gen_stationary, Diagram, VertexId};
use crate::energy::{energy_lower_bound, energy_norm};
use crate::error::{Error, Result};
use crate::function::{fmt_sig, LevelFunction};
use crate::harmonic::{extend_harmonic, solve_levels, Mode, Seed, DEFAULT_TOL};
use crate::operators::{build_level_operators, spectral_bound_check};
use crate::pathspace::{green_identities, root_green_sequence};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Case {
    Tree,
    Pascal,
    Stationary,
    Bounds,
    Greens,
}

impl Case {
    pub const ALL: [Case; 5] = [Case::Tree, Case::Pascal, Case::Stationary, Case::Bounds, Case::Greens];

    pub fn name(self) -> &'static str {
        match self {
            Case::Tree => "tree",
            Case::Pascal => "pascal",
            Case::Stationary => "stationary",
            Case::Bounds => "bounds",
            Case::Greens => "greens",
        }
    }

    pub fn parse(s: &str) -> Result<Case> {
        Case::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown case `{s}`; expected tree, pascal, stationary, bounds or greens")))
    }
}

/// Where the expected value comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    /// A formula stated for the example.
    ClosedForm,
    /// An inequality or identity stated in general.
    Theorem,
    /// Computed here by an independent route.
    Derived,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::ClosedForm => "closed-form",
            Source::Theorem => "theorem",
            Source::Derived => "derived",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub quantity: String,
    pub expected: f64,
    pub computed: f64,
    pub tol: f64,
    pub source: Source,
    /// For inequality rows, `computed ≤ expected` is checked instead.
    pub at_most: bool,
}

impl Row {
    fn eq(quantity: impl Into<String>, expected: f64, computed: f64, tol: f64, source: Source) -> Row {
        Row { quantity: quantity.into(), expected, computed, tol, source, at_most: false }
    }

    fn le(quantity: impl Into<String>, bound: f64, computed: f64, tol: f64, source: Source) -> Row {
        Row { quantity: quantity.into(), expected: bound, computed, tol, source, at_most: true }
    }

    pub fn pass(&self) -> bool {
        if self.at_most {
            self.computed <= self.expected + self.tol
        } else {
            (self.computed - self.expected).abs() <= self.tol
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub case: Case,
    pub rows: Vec<Row>,
}

impl Report {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(Row::pass)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = self.rows.iter().map(|r| r.quantity.len()).max().unwrap_or(8).max(8);
        writeln!(f, "{:<w$}  {:>19}  {:>19}  {:>8}  {:<11}  result", "quantity", "expected", "computed", "tol", "source")?;
        for r in &self.rows {
            let exp = if r.at_most { format!("<= {}", fmt_sig(r.expected)) } else { fmt_sig(r.expected) };
            writeln!(
                f,
                "{:<w$}  {:>19}  {:>19}  {:>8.0e}  {:<11}  {}",
                r.quantity,
                exp,
                fmt_sig(r.computed),
                r.tol,
                r.source.name(),
                if r.pass() { "PASS" } else { "FAIL" }
            )?;
        }
        write!(f, "{}: {}", self.case.name(), if self.pass() { "PASS" } else { "FAIL" })
    }
}

pub fn verify(case: Case) -> Result<Report> {
    let rows = match case {
        Case::Tree => tree_rows()?,
        Case::Pascal => pascal_rows()?,
        Case::Stationary => stationary_rows()?,
        Case::Bounds => bound_rows()?,
        Case::Greens => green_rows()?,
    };
    Ok(Report { case, rows })
}

fn pascal_solution(depth: usize) -> Result<(Diagram, LevelFunction)> {
    let d = gen_pascal(depth, 1.0)?;
    let (f, _) = solve_levels(&d, &[], &Seed::Given(vec![1.0, -1.0]), depth, &Mode::Pinned(pascal_pins(depth)), DEFAULT_TOL)?;
    Ok((d, f))
}

/// Seed `(λ, −λ)`; each step pins the first off-path child on either side
/// to the value just computed at its parent.
fn tree_solution(depth: usize, lambda: f64) -> Result<(Diagram, LevelFunction)> {
    let d = gen_binary_tree(depth, lambda)?;
    let mut f = LevelFunction::from_levels(vec![vec![0.0], vec![lambda, -lambda]]);
    for n in 1..depth {
        let cur = f.level(n);
        let last = (1usize << (n + 1)) - 2;
        let pins = vec![(VertexId::new(n + 1, 1), cur[0]), (VertexId::new(n + 1, last), cur[cur.len() - 1])];
        let (next, _) = extend_harmonic(&d, &f, &Mode::Pinned(pins), DEFAULT_TOL)?;
        f.push_level(next);
    }
    Ok((d, f))
}

fn stationary_solution(depth: usize) -> Result<(Diagram, LevelFunction)> {
    let d = gen_stationary(&[vec![1, 1], vec![1, 0]], depth, 2.0)?;
    let (f, _) = solve_levels(&d, &[], &Seed::Given(vec![1.0, -1.0]), depth, &Mode::MinNorm, DEFAULT_TOL)?;
    Ok((d, f))
}

fn pascal_rows() -> Result<Vec<Row>> {
    let (_, f) = pascal_solution(10)?;
    let mut rows: Vec<Row> = (0..=2)
        .map(|i| Row::eq(format!("h(2,{i})"), pascal_h(2, i), f.get(VertexId::new(2, i)), 1e-9, Source::ClosedForm))
        .collect();
    let err = (0..10).flat_map(|n| (0..=n).map(move |i| (n, i))).fold(0.0f64, |m, (n, i)| {
        m.max((f.get(VertexId::new(n, i)) - pascal_h(n, i)).abs())
    });
    rows.push(Row::eq("max |h - formula|, levels 0..9", 0.0, err, 1e-8, Source::ClosedForm));
    Ok(rows)
}

fn tree_rows() -> Result<Vec<Row>> {
    let lambda = 2.0;
    let (_, f) = tree_solution(10, lambda)?;
    let mut rows: Vec<Row> = (2..=9)
        .map(|n| {
            let want = tree_path_value(n, lambda);
            Row::eq(format!("f(x_{n}(1)), lambda=2"), want, f.get(VertexId::new(n, 0)), 1e-8 * want.abs(), Source::ClosedForm)
        })
        .collect();
    // Every subtree hanging off the path carries one value.
    let mut spread = 0.0f64;
    for n in 1..10 {
        let half = 1usize << (n - 1);
        for k in 1..half {
            let m = usize::BITS as usize - 1 - k.leading_zeros() as usize;
            let root = tree_path_value(n - 1 - m, lambda);
            spread = spread.max((f.get(VertexId::new(n, k)) - root).abs());
        }
    }
    rows.push(Row::eq("spread on hanging subtrees", 0.0, spread, 1e-10, Source::ClosedForm));
    Ok(rows)
}

fn stationary_rows() -> Result<Vec<Row>> {
    let (_, f) = stationary_solution(8)?;
    let formula = stationary_formula(&[1.0, -1.0], 8, 2.0);
    let mut rows = Vec::new();
    for n in 2..=4 {
        for i in 0..2 {
            let x = VertexId::new(n, i);
            rows.push(Row::eq(format!("f_{n}({i})"), formula.get(x), f.get(x), 1e-9, Source::ClosedForm));
        }
    }
    Ok(rows)
}

fn bound_rows() -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    let named = [
        ("pascal:12:1", pascal_solution(12)?),
        ("tree:12:2", tree_solution(12, 2.0)?),
        ("stationary:12:2", stationary_solution(12)?),
    ];
    for (name, (d, f)) in &named {
        let rep = energy_norm(d, f)?;
        let lb = energy_lower_bound(&rep);
        rows.push(Row::le(format!("flux bound, {name}"), lb.energy, lb.bound, 1e-12, Source::Theorem));
        let ops = build_level_operators(d)?;
        let spec = spectral_bound_check(&ops, 200, 1)?;
        rows.push(Row::le(format!("<f,Pf>/<f,f> - 1, {name}"), 0.0, spec.max_bound_violation, 1e-12, Source::Theorem));
    }
    Ok(rows)
}

fn green_rows() -> Result<Vec<Row>> {
    let n = 12;
    let d = gen_binary_tree(n, 2.0)?;
    let sample = [VertexId::ROOT, VertexId::new(1, 0), VertexId::new(2, 3), VertexId::new(4, 9), VertexId::new(7, 100)];
    let r = green_identities(&d, n, &sample)?;
    let source = Source::Theorem;
    let mut rows = vec![
        Row::eq("|G(x,x) - 1/(1-U(x,x))|", 0.0, r.diagonal, 1e-9, source),
        Row::eq("|G(x,y) - F(x,y)G(y,y)|", 0.0, r.factorization, 1e-9, source),
        Row::eq("|U(x,x) - sum p(x,y)F(y,x)|", 0.0, r.first_return, 1e-9, source),
        Row::eq("|F(x,y) - sum p(x,z)F(z,y)|", 0.0, r.first_step, 1e-9, source),
        Row::eq("|c(x)G(x,y) - c(y)G(y,x)|", 0.0, r.g_reversibility, 1e-9, source),
        Row::eq("|c(x)F(x,y) - c(y)F(y,x)|", 0.0, r.f_reversibility, 1e-9, source),
    ];
    let g = root_green_sequence(&d, &[8, 12])?;
    rows.push(Row::le("G_12(o,o) - G_8(o,o)", 1e-3, g[1] - g[0], 0.0, Source::Derived));
    rows.push(Row::le("G_8(o,o) - G_12(o,o)", 0.0, g[0] - g[1], 0.0, Source::Derived));
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pascal_and_tree_pass() {
        for case in [Case::Pascal, Case::Tree, Case::Bounds] {
            let r = verify(case).unwrap();
            assert!(r.pass(), "{r}");
        }
    }

    #[test]
    fn case_names_roundtrip() {
        for c in Case::ALL {
            assert_eq!(Case::parse(c.name()).unwrap(), c);
        }
        assert!(Case::parse("ladder").is_err());
    }
}
