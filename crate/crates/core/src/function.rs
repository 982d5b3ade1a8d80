//! Functions on the vertex set, stored level by level.

use std::fmt::Write;

use crate::diagram::{Diagram, VertexId};
use crate::error::{Error, Result};

/// A real function on `V_0 ∪ … ∪ V_N` stored as the vectors `f_0, …, f_N`.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelFunction {
    levels: Vec<Vec<f64>>,
}

impl LevelFunction {
    pub fn zeros(sizes: &[usize]) -> Self {
        LevelFunction { levels: sizes.iter().map(|&s| vec![0.0; s]).collect() }
    }

    pub fn zeros_like(d: &Diagram) -> Self {
        Self::zeros(d.level_sizes())
    }

    pub fn constant(d: &Diagram, value: f64) -> Self {
        LevelFunction { levels: d.level_sizes().iter().map(|&s| vec![value; s]).collect() }
    }

    /// Indicator of a single vertex.
    pub fn delta(d: &Diagram, x: VertexId) -> Self {
        let mut f = Self::zeros_like(d);
        f.levels[x.level][x.index] = 1.0;
        f
    }

    pub fn from_levels(levels: Vec<Vec<f64>>) -> Self {
        LevelFunction { levels }
    }

    /// Number of stored levels (`N + 1` for a function on a depth-`N` diagram).
    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, n: usize) -> &[f64] {
        &self.levels[n]
    }

    pub fn level_mut(&mut self, n: usize) -> &mut Vec<f64> {
        &mut self.levels[n]
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }

    pub fn into_levels(self) -> Vec<Vec<f64>> {
        self.levels
    }

    pub fn push_level(&mut self, v: Vec<f64>) {
        self.levels.push(v);
    }

    pub fn get(&self, x: VertexId) -> f64 {
        self.levels[x.level][x.index]
    }

    pub fn set(&mut self, x: VertexId, v: f64) {
        self.levels[x.level][x.index] = v;
    }

    /// Checks that the level lengths agree with the diagram on the first
    /// `num_levels` levels.
    pub fn check_shape(&self, d: &Diagram, num_levels: usize) -> Result<()> {
        if self.levels.len() < num_levels || num_levels > d.level_sizes().len() {
            return Err(Error::Dimension(format!(
                "function has {} levels, need {num_levels} of a diagram with {}",
                self.levels.len(),
                d.level_sizes().len()
            )));
        }
        for n in 0..num_levels {
            if self.levels[n].len() != d.level_size(n) {
                return Err(Error::Dimension(format!(
                    "level {n} has {} values, diagram has {} vertices",
                    self.levels[n].len(),
                    d.level_size(n)
                )));
            }
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        LevelFunction {
            levels: self.levels.iter().map(|l| l.iter().map(|&v| f(v)).collect()).collect(),
        }
    }

    /// `a·self + b·other`, level by level.
    pub fn axpby(&self, a: f64, other: &LevelFunction, b: f64) -> Self {
        assert_eq!(self.levels.len(), other.levels.len());
        LevelFunction {
            levels: self
                .levels
                .iter()
                .zip(&other.levels)
                .map(|(x, y)| x.iter().zip(y).map(|(&u, &v)| a * u + b * v).collect())
                .collect(),
        }
    }

    pub fn sub(&self, other: &LevelFunction) -> Self {
        self.axpby(1.0, other, -1.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.levels.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Writes the `fn v1` format, listing only nonzero values.
    pub fn to_text(&self) -> String {
        let mut s = String::from("fn v1\n");
        for (n, l) in self.levels.iter().enumerate() {
            for (i, &v) in l.iter().enumerate() {
                if v != 0.0 {
                    let _ = writeln!(s, "{n} {i} {}", fmt_sig(v));
                }
            }
        }
        s
    }

    /// Parses the `fn v1` format against a diagram; unlisted entries are 0.
    pub fn parse(text: &str, d: &Diagram) -> Result<LevelFunction> {
        let mut f = LevelFunction::zeros_like(d);
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let perr = |line: usize, msg: String| Error::Parse { line, msg };
        match lines.next() {
            Some((_, "fn v1")) => {}
            Some((ln, _)) => return Err(perr(ln, "expected header `fn v1`".into())),
            None => return Err(perr(1, "empty input".into())),
        }
        for (ln, l) in lines {
            let t: Vec<&str> = l.split_whitespace().collect();
            if t.len() != 3 {
                return Err(perr(ln, "expected `<n> <i> <value>`".into()));
            }
            let n: usize = t[0].parse().map_err(|_| perr(ln, "bad level".into()))?;
            let i: usize = t[1].parse().map_err(|_| perr(ln, "bad index".into()))?;
            let v: f64 = t[2].parse().map_err(|_| perr(ln, "bad value".into()))?;
            if !d.contains(VertexId::new(n, i)) {
                return Err(perr(ln, format!("vertex ({n},{i}) is not in the diagram")));
            }
            f.levels[n][i] = v;
        }
        Ok(f)
    }
}

/// Formats with 12 significant digits, like C's `%.12g`.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    let sci = format!("{:.11e}", v);
    // Rounding can bump the exponent (9.99…→10); re-read it from the string.
    let (mant, e) = sci.split_once('e').unwrap();
    let e: i32 = e.parse().unwrap_or(exp);
    if (-5..12).contains(&e) {
        let decimals = (11 - e).max(0) as usize;
        let s = format!("{:.*}", decimals, v);
        trim_zeros(&s)
    } else {
        format!("{}e{}{:02}", trim_zeros(mant), if e < 0 { '-' } else { '+' }, e.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::gen_pascal;

    #[test]
    fn sig_formatting() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(3.0), "3");
        assert_eq!(fmt_sig(-1.5), "-1.5");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig(123456789.123456789), "123456789.123");
        assert_eq!(fmt_sig(1e-7), "1e-07");
        assert_eq!(fmt_sig(2.5e15), "2.5e+15");
        assert_eq!(fmt_sig(0.99999999999999), "1");
    }

    #[test]
    fn fn_roundtrip() {
        let d = gen_pascal(3, 1.0).unwrap();
        let mut f = LevelFunction::zeros_like(&d);
        f.set(VertexId::new(2, 1), -2.25);
        f.set(VertexId::new(3, 3), 7.0);
        let back = LevelFunction::parse(&f.to_text(), &d).unwrap();
        assert_eq!(back, f);
        assert!(LevelFunction::parse("fn v1\n9 0 1\n", &d).is_err());
    }
}
