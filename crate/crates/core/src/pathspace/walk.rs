//! Seeded random walks with absorption at a boundary level.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagram::{Diagram, VertexId};
use crate::error::{Error, Result};
use crate::operators::{build_level_operators, LevelOperators};

/// Parameters of a walk ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkConfig {
    /// Step cap per trajectory.
    pub max_steps: u64,
    pub num_walks: usize,
    pub seed: u64,
    /// Walks are killed on entering this level.
    pub absorb_level: usize,
}

impl WalkConfig {
    pub fn new(num_walks: usize, seed: u64, absorb_level: usize) -> Self {
        WalkConfig { max_steps: 1_000_000, num_walks, seed, absorb_level }
    }

    fn check(&self, d: &Diagram) -> Result<()> {
        if self.max_steps == 0 || self.num_walks == 0 {
            return Err(Error::InvalidParameter("max_steps and num_walks must be at least 1".into()));
        }
        if self.absorb_level == 0 || self.absorb_level > d.depth() {
            return Err(Error::InvalidParameter(format!(
                "absorb level {} must lie in 1..={}",
                self.absorb_level,
                d.depth()
            )));
        }
        Ok(())
    }
}

/// The estimated quantity of one [`Estimate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Quantity {
    /// Expected number of visits (time 0 included).
    G,
    /// Probability of ever reaching the target (time 0 included).
    F,
    /// Probability of returning to the start.
    U,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::G => "G",
            Quantity::F => "F",
            Quantity::U => "U",
        }
    }
}

/// A sample mean with its standard error.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub x: VertexId,
    pub y: VertexId,
    pub quantity: Quantity,
    pub estimate: f64,
    pub stderr: f64,
    pub n_samples: usize,
}

/// Monte Carlo estimates of the killed-chain quantities from one start.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkEstimates {
    pub start: VertexId,
    pub estimates: Vec<Estimate>,
    /// Walks that reached the absorbing level.
    pub absorbed: usize,
    /// Walks stopped by the step cap. They are excluded from the
    /// estimates, which are therefore conditioned on absorption.
    pub capped: usize,
}

impl WalkEstimates {
    pub fn get(&self, y: VertexId, q: Quantity) -> Option<&Estimate> {
        self.estimates.iter().find(|e| e.y == y && e.quantity == q)
    }
}

/// Where a single trajectory ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Absorbed { at: VertexId, steps: u64 },
    Capped,
}

/// Runs walks over the transition probabilities of a diagram.
pub struct Walker<'a> {
    ops: LevelOperators<'a>,
}

impl<'a> Walker<'a> {
    pub fn new(d: &'a Diagram) -> Result<Self> {
        Ok(Walker { ops: build_level_operators(d)? })
    }

    pub fn operators(&self) -> &LevelOperators<'a> {
        &self.ops
    }

    /// The RNG of walk `k`: the seed picks the key, `k` the stream.
    pub fn rng(seed: u64, k: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        rng
    }

    /// One step from `x`.
    pub fn step(&self, x: VertexId, rng: &mut impl Rng) -> VertexId {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = x;
        if x.level > 0 {
            for (j, p) in self.ops.fwd(x.level).row(x.index) {
                acc += p;
                last = VertexId::new(x.level - 1, j);
                if u < acc {
                    return last;
                }
            }
        }
        for (j, p) in self.ops.back(x.level).row(x.index) {
            acc += p;
            last = VertexId::new(x.level + 1, j);
            if u < acc {
                return last;
            }
        }
        // Rounding left `u` above the cumulative sum.
        last
    }

    /// Runs one trajectory from `start`, calling `visit` on every vertex
    /// visited strictly before absorption (the start included).
    pub fn run(
        &self,
        start: VertexId,
        absorb_level: usize,
        max_steps: u64,
        rng: &mut impl Rng,
        mut visit: impl FnMut(VertexId, u64),
    ) -> Outcome {
        let mut x = start;
        let mut t = 0;
        loop {
            if x.level >= absorb_level {
                return Outcome::Absorbed { at: x, steps: t };
            }
            if t >= max_steps {
                return Outcome::Capped;
            }
            visit(x, t);
            x = self.step(x, rng);
            t += 1;
        }
    }
}

/// Maps `f` over walk indices `0..n`, in parallel when enabled, returning
/// results in index order.
pub(crate) fn map_walks<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let run = || (0..n).into_par_iter().map(&f).collect::<Vec<T>>();
        match std::env::var("BH_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
            Some(k) if k >= 1 => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
                Ok(pool) => pool.install(run),
                Err(_) => run(),
            },
            _ => run(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Sample mean and standard error.
pub(crate) fn mean_stderr(samples: impl Iterator<Item = f64>) -> (f64, f64, usize) {
    let (mut n, mut s, mut s2) = (0usize, 0.0, 0.0);
    for v in samples {
        n += 1;
        s += v;
        s2 += v * v;
    }
    if n == 0 {
        return (f64::NAN, f64::NAN, 0);
    }
    let mean = s / n as f64;
    if n == 1 {
        return (mean, f64::NAN, 1);
    }
    let var = ((s2 - n as f64 * mean * mean) / (n - 1) as f64).max(0.0);
    (mean, (var / n as f64).sqrt(), n)
}

struct WalkRecord {
    /// Visits to each target.
    visits: Vec<u32>,
    returned: bool,
    absorbed: bool,
}

/// Estimates `G(start, y)` and `F(start, y)` for every target and
/// `U(start, start)` from `cfg.num_walks` walks killed at
/// `cfg.absorb_level`.
///
/// Walk `k` draws from stream `k` of the seeded generator, so the output
/// does not depend on the number of threads.
pub fn simulate_walks(d: &Diagram, start: VertexId, targets: &[VertexId], cfg: &WalkConfig) -> Result<WalkEstimates> {
    cfg.check(d)?;
    d.check_vertex(start)?;
    if start.level >= cfg.absorb_level {
        return Err(Error::InvalidParameter(format!("start {start} is not above level {}", cfg.absorb_level)));
    }
    for &y in targets {
        d.check_vertex(y)?;
    }
    let walker = Walker::new(d)?;
    let records = map_walks(cfg.num_walks, |k| {
        let mut rng = Walker::rng(cfg.seed, k);
        let mut visits = vec![0u32; targets.len()];
        let mut returned = false;
        let out = walker.run(start, cfg.absorb_level, cfg.max_steps, &mut rng, |x, t| {
            if t > 0 && x == start {
                returned = true;
            }
            for (v, &y) in visits.iter_mut().zip(targets) {
                if x == y {
                    *v += 1;
                }
            }
        });
        WalkRecord { visits, returned, absorbed: matches!(out, Outcome::Absorbed { .. }) }
    });
    let done: Vec<&WalkRecord> = records.iter().filter(|r| r.absorbed).collect();
    let mut estimates = Vec::with_capacity(2 * targets.len() + 1);
    for (k, &y) in targets.iter().enumerate() {
        let (m, se, n) = mean_stderr(done.iter().map(|r| r.visits[k] as f64));
        estimates.push(Estimate { x: start, y, quantity: Quantity::G, estimate: m, stderr: se, n_samples: n });
        let (m, se, n) = mean_stderr(done.iter().map(|r| if r.visits[k] > 0 { 1.0 } else { 0.0 }));
        estimates.push(Estimate { x: start, y, quantity: Quantity::F, estimate: m, stderr: se, n_samples: n });
    }
    let (m, se, n) = mean_stderr(done.iter().map(|r| if r.returned { 1.0 } else { 0.0 }));
    estimates.push(Estimate { x: start, y: start, quantity: Quantity::U, estimate: m, stderr: se, n_samples: n });
    Ok(WalkEstimates { start, estimates, absorbed: done.len(), capped: records.len() - done.len() })
}

/// Hitting times of the levels along one trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct StoppingTimeSample {
    /// The first vertices of the trajectory (at most `prefix_len`).
    pub prefix: Vec<VertexId>,
    /// `τ(V_n)` for `n = 0..=absorb_level`; `None` when not reached.
    pub tau: Vec<Option<u64>>,
    /// `X_{τ(V_n)}`, which lies in `V_n` when reached.
    pub hit: Vec<Option<VertexId>>,
    pub absorbed: bool,
}

impl StoppingTimeSample {
    /// True when `τ(V_{i+1}) = τ(V_i) + 1` for every `i ≥ m` below the
    /// absorbing level.
    pub fn progresses_from(&self, m: usize) -> bool {
        if !self.absorbed {
            return false;
        }
        (m..self.tau.len() - 1).all(|i| match (self.tau[i], self.tau[i + 1]) {
            (Some(a), Some(b)) => b == a + 1,
            _ => false,
        })
    }
}

/// Samples level hitting times for `cfg.num_walks` walks from `start`.
pub fn sample_stopping_times(d: &Diagram, start: VertexId, cfg: &WalkConfig, prefix_len: usize) -> Result<Vec<StoppingTimeSample>> {
    cfg.check(d)?;
    d.check_vertex(start)?;
    let walker = Walker::new(d)?;
    let levels = cfg.absorb_level + 1;
    Ok(map_walks(cfg.num_walks, |k| {
        let mut rng = Walker::rng(cfg.seed, k);
        let mut tau = vec![None; levels];
        let mut hit = vec![None; levels];
        let mut prefix = Vec::new();
        let out = walker.run(start, cfg.absorb_level, cfg.max_steps, &mut rng, |x, t| {
            if prefix.len() < prefix_len {
                prefix.push(x);
            }
            if tau[x.level].is_none() {
                tau[x.level] = Some(t);
                hit[x.level] = Some(x);
            }
        });
        let absorbed = if let Outcome::Absorbed { at, steps } = out {
            tau[at.level] = Some(steps);
            hit[at.level] = Some(at);
            true
        } else {
            false
        };
        StoppingTimeSample { prefix, tau, hit, absorbed }
    }))
}

/// Fraction of absorbed walks that move one level per step from level `m`
/// on, for each `m` in `ms`.
pub fn level_progression(samples: &[StoppingTimeSample], ms: &[usize]) -> Vec<(usize, f64)> {
    let done: Vec<&StoppingTimeSample> = samples.iter().filter(|s| s.absorbed).collect();
    ms.iter()
        .map(|&m| {
            let k = done.iter().filter(|s| s.progresses_from(m)).count();
            (m, if done.is_empty() { f64::NAN } else { k as f64 / done.len() as f64 })
        })
        .collect()
}
