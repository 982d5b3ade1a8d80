mod input;
mod manifest;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bratnet::diagram::{from_generator_spec, validate};
use bratnet::energy::{energy_lower_bound, energy_norm};
use bratnet::function::fmt_sig;
use bratnet::graph::{extract_maximal_bratteli, to_diagram, GeneralGraph};
use bratnet::harmonic::{harm_dimension, solve_dipole, solve_levels, solve_monopole, Mode, Seed, SolveReport, DEFAULT_TOL};
use bratnet::operators::{build_level_operators, laplacian_apply, markov_apply, Masked};
use bratnet::pathspace::{dipole_green, green_exact, monopole_green, poisson_kernel, simulate_walks, PoissonMethod, WalkConfig};
use bratnet::verify::{verify, Case};
use bratnet::{Diagram, LevelFunction, VertexId};
use clap::{Args, Parser, Subcommand, ValueEnum};

use input::{load_diagram, load_function, load_graph, parse_pin, parse_usize_list, parse_vertex, read_source};
use manifest::RunManifest;

/// Potential theory on electrical networks carried by Bratteli diagrams.
#[derive(Parser)]
#[command(name = "bratnet", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print a generated diagram: tree:<depth>:<λ>, pascal:<depth>:<λ>,
    /// stationary:<rows>:<depth>:<λ>, bottleneck:<sizes>:<seed>, treeq:<depth>:<λ>.
    Gen {
        spec: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a diagram file (`-` for stdin).
    Validate {
        #[arg(default_value = "-")]
        input: String,
    },
    /// Run the level recursion for a harmonic function.
    Harmonic {
        #[command(flatten)]
        common: Common,
        /// `fn v1` file whose level 1 is the seed, or `auto`.
        #[arg(long)]
        seed_vector: Option<String>,
        /// `level,index=value`; repeatable.
        #[arg(long = "pin", value_parser = parse_pin)]
        pins: Vec<(VertexId, f64)>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Prefix dimension of harmonic functions per depth.
    Dimension {
        #[command(flatten)]
        common: Common,
    },
    /// Monopole at a vertex.
    Monopole {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_vertex)]
        at: VertexId,
        #[arg(long, value_enum, default_value = "recursion")]
        method: Method,
    },
    /// Dipole for a pair of vertices.
    Dipole {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_vertex)]
        at: VertexId,
        /// Second pole; the root by default.
        #[arg(long, value_parser = parse_vertex)]
        other: Option<VertexId>,
        #[arg(long, value_enum, default_value = "recursion")]
        method: Method,
    },
    /// Exact G, F and U of the chain killed at the last level, as CSV.
    Green {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_vertex)]
        from: VertexId,
        #[arg(long = "to", value_parser = parse_vertex)]
        targets: Vec<VertexId>,
    },
    /// Monte Carlo estimates of G, F and U, as CSV.
    Walk {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_vertex)]
        from: VertexId,
        #[arg(long = "to", value_parser = parse_vertex)]
        targets: Vec<VertexId>,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Poisson representation of data on the last level, as CSV.
    Poisson {
        #[command(flatten)]
        common: Common,
        /// `fn v1` file; only the last level is used.
        #[arg(long)]
        data: String,
        /// Estimate by walks instead of the Dirichlet solve.
        #[arg(long)]
        monte_carlo: bool,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Energy, currents and the flux lower bound of a function.
    Energy {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        function: String,
        #[arg(long, value_enum, default_value = "pretty")]
        format: Format,
    },
    /// Convert between the graph and diagram formats.
    Convert {
        input: String,
        #[arg(long, default_value_t = 0)]
        root: usize,
        #[arg(long)]
        depth: Option<usize>,
        /// Extract along this geodesic ray (comma separated graph vertices).
        #[arg(long, value_parser = parse_usize_list)]
        ray: Option<Vec<usize>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute the worked examples and compare.
    VerifyPaper {
        #[arg(value_parser = ["tree", "pascal", "stationary", "bounds", "greens", "all"])]
        case: String,
    },
    /// Apply Δ to a function (the last level is not computed).
    ApplyLaplacian {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        function: String,
    },
    /// Apply P to a function (the last level is not computed).
    ApplyMarkov {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        function: String,
    },
}

#[derive(Args)]
struct Common {
    /// Diagram file, `-` for stdin, or generator shorthand.
    #[arg(long)]
    diagram: String,
    /// Last level used; the stored depth by default.
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct McArgs {
    #[arg(long, default_value_t = 10_000)]
    walks: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1_000_000)]
    max_steps: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    MinNorm,
    LeastSquares,
    Pinned,
    Grounded,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Recursion,
    Green,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Pretty,
}

/// Exit 1 for domain errors, 2 for usage errors.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Domain(String),
}

impl Failure {
    pub fn domain(msg: impl Into<String>) -> Self {
        Failure::Domain(msg.into())
    }
}

impl From<bratnet::Error> for Failure {
    fn from(e: bratnet::Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

const CSV_HEADER: [&str; 8] = ["x_level", "x_index", "y_level", "y_index", "quantity", "estimate", "stderr", "n_samples"];

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if let Err(msg) = set_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    match run(cli.cmd, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

/// `BH_THREADS` caps the worker pool.
fn set_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("BH_THREADS") else { return Ok(()) };
    let n: usize = v.parse().map_err(|_| format!("BH_THREADS must be a positive integer, got `{v}`"))?;
    if n == 0 {
        return Err("BH_THREADS must be at least 1".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn write_out(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::domain(format!("writing {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Writes the output and its manifest.
fn finish(out: Option<&Path>, text: &str, m: &RunManifest) -> Result<(), Failure> {
    write_out(out, text)?;
    m.emit(out)?;
    Ok(())
}

fn depth_of(d: &Diagram, depth: Option<usize>) -> Result<usize, Failure> {
    match depth {
        None => Ok(d.depth()),
        Some(n) if (1..=d.depth()).contains(&n) => Ok(n),
        Some(n) => Err(Failure::domain(format!("depth {n} must lie in 1..={}", d.depth()))),
    }
}

fn setup(c: &Common, argv: &[String]) -> Result<(Diagram, usize, RunManifest), Failure> {
    let mut m = RunManifest::new(argv);
    let d = load_diagram(&c.diagram, &mut m)?;
    let n = depth_of(&d, c.depth)?;
    m.tol("tol", c.tol);
    Ok((d, n, m))
}

fn check_report(rep: &SolveReport) -> Result<(), Failure> {
    match rep.first_inconsistent() {
        None => Ok(()),
        Some(level) => Err(Failure::domain(format!(
            "recursion is inconsistent: residual {:.3e} at level {level} exceeds tol {:.1e}",
            rep.residuals[level], rep.tol
        ))),
    }
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    w
}

fn csv_row(w: &mut csv::Writer<Vec<u8>>, x: VertexId, y: Option<VertexId>, q: &str, est: f64, se: f64, n: usize) {
    let (yl, yi) = y.map_or((String::new(), String::new()), |y| (y.level.to_string(), y.index.to_string()));
    w.write_record([
        x.level.to_string(),
        x.index.to_string(),
        yl,
        yi,
        q.to_string(),
        fmt_sig(est),
        fmt_sig(se),
        n.to_string(),
    ])
    .expect("in-memory write");
}

fn csv_text(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

fn run(cmd: Cmd, argv: &[String]) -> Result<(), Failure> {
    match cmd {
        Cmd::Gen { spec, out } => {
            let mut m = RunManifest::new(argv);
            m.input_generator("diagram", &spec);
            let d = from_generator_spec(&spec)?;
            finish(out.as_deref(), &d.to_text(), &m)
        }
        Cmd::Validate { input } => {
            let bytes = read_source(&input)?;
            let text = String::from_utf8(bytes).map_err(|_| Failure::domain("input is not UTF-8"))?;
            let d = Diagram::parse(&text)?;
            let bad = validate(&d);
            if bad.is_empty() {
                println!("ok: {} levels, {} vertices, {} edges", d.depth() + 1, d.total_vertices(), d.num_edges());
                Ok(())
            } else {
                for v in &bad {
                    println!("{v}");
                }
                Err(Failure::domain(format!("{} violation(s)", bad.len())))
            }
        }
        Cmd::Harmonic { common, seed_vector, pins, mode } => {
            let (d, n, mut m) = setup(&common, argv)?;
            let mode = match (mode, pins.is_empty()) {
                (None, true) | (Some(ModeArg::MinNorm), true) => Mode::MinNorm,
                (Some(ModeArg::LeastSquares), true) => Mode::LeastSquares,
                (Some(ModeArg::Grounded), true) => Mode::Grounded,
                (None, false) | (Some(ModeArg::Pinned), _) => Mode::Pinned(pins.clone()),
                (Some(_), false) => return Err(Failure::Usage("--pin needs --mode pinned".into())),
            };
            let seed = match seed_vector.as_deref() {
                Some("auto") => Seed::Auto,
                Some(path) => Seed::Given(load_function(path, "seed-vector", &d, &mut m)?.level(1).to_vec()),
                None if pins.iter().any(|p| p.0.level == 1) => Seed::Solve,
                None => Seed::Auto,
            };
            let (f, rep) = solve_levels(&d, &[], &seed, n, &mode, common.tol)?;
            finish(common.out.as_deref(), &f.to_text(), &m)?;
            check_report(&rep)
        }
        Cmd::Dimension { common } => {
            let (d, n, m) = setup(&common, argv)?;
            let (_, _, rows) = harm_dimension(&d, n, common.tol)?;
            let mut s = String::from("depth  prefix_dim  seed_dim  new_params\n");
            for r in rows {
                let _ = writeln!(s, "{:>5}  {:>10}  {:>8}  {:>10}", r.depth, r.prefix_dim, r.seed_dim, r.new_params);
            }
            finish(common.out.as_deref(), &s, &m)
        }
        Cmd::Monopole { common, at, method } => {
            let (d, n, m) = setup(&common, argv)?;
            let f = match method {
                Method::Recursion => {
                    let (f, rep) = solve_monopole(&d, at, n, &Mode::Grounded, common.tol)?;
                    check_report(&rep)?;
                    f
                }
                Method::Green => monopole_green(&d, at, n)?,
            };
            finish(common.out.as_deref(), &f.to_text(), &m)
        }
        Cmd::Dipole { common, at, other, method } => {
            let (d, n, m) = setup(&common, argv)?;
            let other = other.unwrap_or(VertexId::ROOT);
            let f = match method {
                Method::Recursion if other == VertexId::ROOT => {
                    let (f, rep) = solve_dipole(&d, at, n, &Mode::Grounded, common.tol)?;
                    check_report(&rep)?;
                    f
                }
                Method::Recursion => {
                    let src = [(at, 1.0), (other, -1.0)];
                    let (f, rep) = solve_levels(&d, &src, &Seed::Solve, n, &Mode::Grounded, common.tol)?;
                    check_report(&rep)?;
                    f
                }
                Method::Green => dipole_green(&d, at, other, n)?,
            };
            finish(common.out.as_deref(), &f.to_text(), &m)
        }
        Cmd::Green { common, from, targets } => {
            let (d, n, m) = setup(&common, argv)?;
            let g = green_exact(&d, n)?;
            let mut w = csv_writer();
            let col_x = g.column(from)?;
            let gxx = col_x.get(from);
            for &y in &targets {
                let col = g.column(y)?;
                let gxy = col.get(from);
                csv_row(&mut w, from, Some(y), "G", gxy, 0.0, 0);
                csv_row(&mut w, from, Some(y), "F", gxy / col.get(y), 0.0, 0);
            }
            csv_row(&mut w, from, Some(from), "U", 1.0 - 1.0 / gxx, 0.0, 0);
            finish(common.out.as_deref(), &csv_text(w), &m)
        }
        Cmd::Walk { common, from, targets, mc } => {
            let (d, n, mut m) = setup(&common, argv)?;
            m.seed = Some(mc.seed);
            let cfg = WalkConfig { max_steps: mc.max_steps, num_walks: mc.walks, seed: mc.seed, absorb_level: n };
            let est = simulate_walks(&d, from, &targets, &cfg)?;
            let mut w = csv_writer();
            for e in &est.estimates {
                csv_row(&mut w, e.x, Some(e.y), e.quantity.name(), e.estimate, e.stderr, e.n_samples);
            }
            if est.capped > 0 {
                eprintln!("warning: {} walks hit the step cap and were excluded", est.capped);
            }
            finish(common.out.as_deref(), &csv_text(w), &m)
        }
        Cmd::Poisson { common, data, monte_carlo, mc } => {
            let (d, n, mut m) = setup(&common, argv)?;
            let f = load_function(&data, "data", &d, &mut m)?;
            let method = if monte_carlo {
                m.seed = Some(mc.seed);
                PoissonMethod::MonteCarlo(WalkConfig { max_steps: mc.max_steps, num_walks: mc.walks, seed: mc.seed, absorb_level: n })
            } else {
                PoissonMethod::Exact
            };
            let r = poisson_kernel(&d, f.level(n), n, &method)?;
            let mut w = csv_writer();
            for k in 0..=n {
                for i in 0..d.level_size(k) {
                    let x = VertexId::new(k, i);
                    let se = r.stderr.as_ref().map_or(0.0, |s| s.get(x));
                    let ns = r.samples.as_ref().map_or(0, |s| s.get(x) as usize);
                    csv_row(&mut w, x, None, "h", r.values.get(x), se, ns);
                }
            }
            if r.capped > 0 {
                eprintln!("warning: {} walks hit the step cap and were excluded", r.capped);
            }
            finish(common.out.as_deref(), &csv_text(w), &m)
        }
        Cmd::Energy { common, function, format } => {
            let (d, n, mut m) = setup(&common, argv)?;
            let d = d.truncated(n)?;
            let f = load_function(&function, "function", &d, &mut m)?;
            let rep = energy_norm(&d, &f)?;
            let lb = energy_lower_bound(&rep);
            let rows: Vec<[String; 5]> = (0..=n)
                .map(|k| {
                    [
                        k.to_string(),
                        if k == 0 { "0".into() } else { fmt_sig(rep.per_level[k - 1]) },
                        fmt_sig(rep.level_currents.get(k).copied().unwrap_or(0.0)),
                        fmt_sig(rep.beta[k] * rep.level_sizes[k] as f64),
                        fmt_sig(rep.lower_bound[k]),
                    ]
                })
                .collect();
            let header = ["level", "energy_increment", "current", "beta_size", "lower_bound_sum"];
            let text = match format {
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    w.write_record(header).expect("in-memory write");
                    for r in &rows {
                        w.write_record(r).expect("in-memory write");
                    }
                    csv_text(w)
                }
                Format::Pretty => {
                    let mut s = format!("{:>5}  {:>19}  {:>19}  {:>19}  {:>19}\n", header[0], header[1], header[2], header[3], header[4]);
                    for r in &rows {
                        let _ = writeln!(s, "{:>5}  {:>19}  {:>19}  {:>19}  {:>19}", r[0], r[1], r[2], r[3], r[4]);
                    }
                    let _ = writeln!(s, "energy {}", fmt_sig(rep.energy));
                    let _ = writeln!(s, "bound holds at every depth: {}", lb.holds_at_every_depth);
                    let _ = writeln!(s, "inverse growth series looks divergent: {}", lb.divergence_flag);
                    let _ = writeln!(s, "beta at level {n} counts incoming edges only");
                    s
                }
            };
            finish(common.out.as_deref(), &text, &m)
        }
        Cmd::Convert { input, root, depth, ray, out } => {
            let mut m = RunManifest::new(argv);
            let bytes = read_source(&input)?;
            m.input_bytes("input", &bytes);
            let head = bytes.split(|&b| b == b'\n').map(|l| String::from_utf8_lossy(l).trim().to_string()).find(|l| !l.is_empty() && !l.starts_with('#'));
            let text = match head.as_deref() {
                Some("graph v1") => {
                    let g = load_graph(bytes, &input)?;
                    let depth = depth.ok_or_else(|| Failure::Usage("--depth is required for graph input".into()))?;
                    match ray {
                        Some(ray) => {
                            let ex = extract_maximal_bratteli(&g, &ray, depth)?;
                            eprintln!("maximality certified within radius {}", ex.certified_radius);
                            ex.diagram.to_text()
                        }
                        None => to_diagram(&g, root, depth)?.0.to_text(),
                    }
                }
                Some("bratteli v1") => {
                    let d = Diagram::parse(&String::from_utf8_lossy(&bytes))?;
                    diagram_to_graph(&d)?.to_text()
                }
                _ => return Err(Failure::domain("input starts with neither `graph v1` nor `bratteli v1`")),
            };
            finish(out.as_deref(), &text, &m)
        }
        Cmd::VerifyPaper { case } => {
            let cases = if case == "all" { Case::ALL.to_vec() } else { vec![Case::parse(&case)?] };
            let mut ok = true;
            for c in cases {
                let r = verify(c)?;
                println!("{r}\n");
                ok &= r.pass();
            }
            if ok {
                Ok(())
            } else {
                Err(Failure::domain("some quantities do not match"))
            }
        }
        Cmd::ApplyLaplacian { common, function } => apply(common, &function, argv, laplacian_apply),
        Cmd::ApplyMarkov { common, function } => apply(common, &function, argv, markov_apply),
    }
}

fn apply(
    common: Common,
    function: &str,
    argv: &[String],
    op: fn(&bratnet::operators::LevelOperators<'_>, &LevelFunction) -> bratnet::Result<Masked>,
) -> Result<(), Failure> {
    let (d, n, mut m) = setup(&common, argv)?;
    let d = d.truncated(n)?;
    let f = load_function(function, "function", &d, &mut m)?;
    let ops = build_level_operators(&d)?;
    let r = op(&ops, &f)?;
    let mut text = String::from("fn v1\n");
    for (k, level) in r.values.levels().iter().enumerate() {
        if !r.valid[k] {
            let _ = writeln!(text, "# level {k} not computed");
            continue;
        }
        for (i, &v) in level.iter().enumerate() {
            if v != 0.0 {
                let _ = writeln!(text, "{k} {i} {}", fmt_sig(v));
            }
        }
    }
    finish(common.out.as_deref(), &text, &m)
}

/// Vertices numbered level by level.
fn diagram_to_graph(d: &Diagram) -> Result<GeneralGraph, Failure> {
    let off = d.offsets();
    let mut edges = Vec::with_capacity(d.num_edges());
    for (n, b) in d.blocks().iter().enumerate() {
        for (i, j, c) in b.iter() {
            edges.push((off[n] + i, off[n + 1] + j, c));
        }
    }
    Ok(GeneralGraph::new(d.total_vertices(), &edges)?)
}
