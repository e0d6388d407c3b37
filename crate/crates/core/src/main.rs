use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use thiserror::Error;

use wentzell::boundary::{assemble, find_invertible_kappa, z_matrix, BoundaryError, VertexClass, WentzellData};
use wentzell::compare::{run_scenario, CompareError, Overrides};
use wentzell::graph::{eliminate_tadpole, join_graphs, GraphError, GraphPoint, JoinPair, MetricGraph, Orientation};
use wentzell::io::{parse_function, parse_point, write_text, GraphDocument, IoError, Scenario};
use wentzell::resolvent::{solve_resolvent, ResolventError};
use wentzell::sim::{
    mc_hitting_transform, mc_lifetimes, mc_survival_resolvent, simulate_paths, Estimate, SimConfig, SimError,
    VertexScheme,
};

const USAGE: u8 = 1;
const INVARIANT: u8 = 2;
const COMPARISON: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "wentzell", version, about = "Brownian motion on metric graphs with Wentzell vertex conditions")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Graph file (JSON).
    #[arg(long, global = true)]
    graph: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Lattice step δ.
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Simulation horizon T.
    #[arg(long, global = true)]
    horizon: Option<f64>,
    #[arg(long, global = true)]
    paths: Option<usize>,
    #[arg(long, global = true, default_value_t = 1.0)]
    lambda: f64,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Accept graphs with loop edges.
    #[arg(long, global = true)]
    allow_tadpole: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Table,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Scheme {
    Exact,
    Lattice,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a graph file and print the class of every vertex.
    Validate {
        /// Split every loop edge at its midpoint and write the result to --out.
        #[arg(long)]
        eliminate_tadpoles: bool,
    },
    /// Solve the resolvent equation and print u on a grid.
    Resolve {
        /// one, const:C, exp[:R], vertex:V1,V2,..[;R], sin:K or csv:PATH.
        #[arg(long, default_value = "one")]
        f: String,
        /// Interior grid points per edge.
        #[arg(long, default_value_t = 10)]
        points: usize,
        /// Sampled length of external edges.
        #[arg(long, default_value_t = 5.0)]
        extent: f64,
    },
    /// Simulate paths and print Monte Carlo estimates.
    Simulate {
        /// `vertex` or `edge@x`.
        #[arg(long)]
        start: String,
        #[arg(long, value_enum, default_value_t = Scheme::Exact)]
        scheme: Scheme,
        /// Per-path event log (CSV).
        #[arg(long)]
        events: Option<PathBuf>,
        /// Number of paths written to the event log.
        #[arg(long, default_value_t = 10)]
        log_paths: usize,
    },
    /// Run a scenario file and report Monte Carlo against analytic values.
    Compare {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Scan |det Z(κ)| over a rectangle of complex κ.
    Detscan {
        /// Real range `lo:hi`.
        #[arg(long, default_value = "0.1:5")]
        re: String,
        /// Imaginary range `lo:hi`.
        #[arg(long, default_value = "-2:2")]
        im: String,
        /// Grid points per axis.
        #[arg(long, default_value_t = 41)]
        steps: usize,
    },
    /// Join two graphs along pairs of external edges.
    Glue {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        /// `left_edge:right_edge:length[:+1|-1]`, repeatable.
        #[arg(long = "pair", required = true)]
        pairs: Vec<String>,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("edge `{0}` is a loop; rerun with --allow-tadpole, or split it with `validate --eliminate-tadpoles --out FILE`")]
    Tadpole(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error(transparent)]
    Resolvent(#[from] ResolventError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Compare(#[from] CompareError),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => USAGE,
            CliError::Tadpole(_) | CliError::Graph(_) | CliError::Boundary(_) => INVARIANT,
            CliError::Io(e) => io_code(e),
            CliError::Resolvent(e) => resolvent_code(e),
            CliError::Sim(e) => sim_code(e),
            CliError::Compare(e) => match e {
                CompareError::Io(e) => io_code(e),
                CompareError::Sim(e) => sim_code(e),
                CompareError::Resolvent(e) => resolvent_code(e),
                CompareError::Boundary(_) => INVARIANT,
                CompareError::Row { .. } => USAGE,
            },
        }
    }
}

fn io_code(e: &IoError) -> u8 {
    if e.is_invariant() {
        INVARIANT
    } else {
        USAGE
    }
}

fn resolvent_code(e: &ResolventError) -> u8 {
    match e {
        ResolventError::BadLambda(_) | ResolventError::VertexStart | ResolventError::Cemetery => USAGE,
        _ => INVARIANT,
    }
}

fn sim_code(e: &SimError) -> u8 {
    match e {
        SimError::BadDelta(_)
        | SimError::DeltaTooLarge { .. }
        | SimError::BadHorizon(_)
        | SimError::BadStep(_)
        | SimError::NoPaths
        | SimError::CemeteryStart
        | SimError::NotOnGraph(_) => USAGE,
        _ => INVARIANT,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("wentzell: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    let c = &cli.common;
    match &cli.command {
        Command::Validate { eliminate_tadpoles } => validate(c, *eliminate_tadpoles),
        Command::Resolve { f, points, extent } => resolve(c, f, *points, *extent),
        Command::Simulate {
            start,
            scheme,
            events,
            log_paths,
        } => simulate(c, start, *scheme, events.as_deref(), *log_paths),
        Command::Compare { scenario } => compare(c, scenario),
        Command::Detscan { re, im, steps } => detscan(c, re, im, *steps),
        Command::Glue { left, right, pairs } => glue(c, left, right, pairs),
    }
}

fn graph_path(c: &Common) -> Result<&Path, CliError> {
    c.graph
        .as_deref()
        .ok_or_else(|| CliError::Usage("--graph is required".into()))
}

fn check_tadpoles(c: &Common, g: &MetricGraph) -> Result<(), CliError> {
    match g.tadpoles().next() {
        Some(e) if !c.allow_tadpole => Err(CliError::Tadpole(g.edge_name(e).to_string())),
        _ => Ok(()),
    }
}

fn load(c: &Common) -> Result<(GraphDocument, WentzellData), CliError> {
    let doc = GraphDocument::read(graph_path(c)?)?;
    check_tadpoles(c, &doc.graph)?;
    let data = doc.data()?;
    Ok((doc, data))
}

/// Split every loop edge; the analytic side needs a loop-free graph.
fn without_tadpoles(g: &MetricGraph, data: &WentzellData) -> Result<(MetricGraph, WentzellData), CliError> {
    let (mut g, mut data) = (g.clone(), data.clone());
    loop {
        let Some(e) = g.tadpoles().next() else { break };
        let split = eliminate_tadpole(&g, &data, e)?;
        g = split.graph;
        data = split.data;
    }
    Ok((g, data))
}

fn emit(c: &Common, text: &str) -> Result<(), CliError> {
    match &c.out {
        Some(p) => Ok(write_text(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// CSV or whitespace-aligned table from already formatted cells.
fn render(format: Format, header: &[&str], rows: &[Vec<String>]) -> String {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(header).expect("in-memory write");
            for r in rows {
                w.write_record(r).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8 fields")
        }
        Format::Table => {
            let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
            for r in rows {
                for (w, cell) in width.iter_mut().zip(r) {
                    *w = (*w).max(cell.chars().count());
                }
            }
            let mut s = String::new();
            let line = |s: &mut String, cells: &mut dyn Iterator<Item = &str>| {
                let parts: Vec<String> = cells.zip(&width).map(|(c, w)| format!("{c:>w$}")).collect();
                let _ = writeln!(s, "{}", parts.join("  "));
            };
            line(&mut s, &mut header.iter().copied());
            for r in rows {
                line(&mut s, &mut r.iter().map(String::as_str));
            }
            s
        }
    }
}

/// `p/q` when `x` is a fraction with a small denominator, else a decimal.
fn fraction(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    for q in 1..=128u32 {
        let p = (x * q as f64).round();
        if (p / q as f64 - x).abs() < 1e-9 {
            return if q == 1 { format!("{p}") } else { format!("{p}/{q}") };
        }
    }
    format!("{x:.6}")
}

fn classify_line(g: &MetricGraph, data: &WentzellData, v: wentzell::graph::VertexId) -> String {
    let name = g.vertex_name(v);
    match data.classify(v) {
        VertexClass::Trap => format!("{name}: Trap"),
        VertexClass::ExponentialHolding { rate } => format!("{name}: ExponentialHolding rate={}", fraction(rate)),
        VertexClass::Instantaneous {
            weights,
            stickiness,
            killing,
        } => {
            let w: Vec<String> = weights.iter().map(|&x| fraction(x)).collect();
            let mut s = format!("{name}: Instantaneous w=({})", w.join(","));
            if stickiness > 0.0 {
                let _ = write!(s, " sticky={}", fraction(stickiness));
            }
            if killing > 0.0 {
                let _ = write!(s, " killing={}", fraction(killing));
            }
            s
        }
    }
}

fn validate(c: &Common, eliminate: bool) -> Result<u8, CliError> {
    let doc = GraphDocument::read(graph_path(c)?)?;
    let g = &doc.graph;
    if !eliminate {
        check_tadpoles(c, g)?;
    }
    let data = doc.data()?;
    println!("{g}");
    for v in g.vertices() {
        println!("{}", classify_line(g, &data, v));
    }
    if eliminate {
        let out = c
            .out
            .as_deref()
            .ok_or_else(|| CliError::Usage("--eliminate-tadpoles needs --out".into()))?;
        let (g2, d2) = without_tadpoles(g, &data)?;
        write_text(out, &GraphDocument::from_data(&g2, &d2).to_json())?;
        println!("wrote {} ({g2})", out.display());
    }
    Ok(0)
}

fn resolve(c: &Common, spec: &str, points: usize, extent: f64) -> Result<u8, CliError> {
    let path = graph_path(c)?;
    let (doc, data) = load(c)?;
    let (g, data) = without_tadpoles(&doc.graph, &data)?;
    let f = parse_function(&g, spec, path.parent())?;
    let sol = solve_resolvent(&g, &data, c.lambda, &f)?;
    let mut rows = Vec::new();
    for e in g.edge_ids() {
        let len = if g.edge(e).is_external() { extent } else { g.length(e) };
        for k in 0..=points + 1 {
            let x = len * k as f64 / (points + 1) as f64;
            rows.push(vec![g.edge_name(e).to_string(), format!("{x}"), format!("{:.12e}", sol.value(e, x))]);
        }
    }
    let mut text = render(c.format, &["edge", "x", "u"], &rows);
    let r = sol.report();
    let _ = writeln!(text, "# det|Z| = {:e}", r.abs_det());
    let _ = writeln!(text, "# lambda = {} kappa = {} log10_cond = {:.3} retries = {}", r.lambda, r.kappa, r.log10_cond, r.retries);
    let _ = writeln!(text, "# max vertex residual = {:e}", sol.max_residual());
    emit(c, &text)?;
    Ok(0)
}

fn sim_config(c: &Common, scheme: Scheme) -> SimConfig {
    let mut cfg = SimConfig::default().with_scheme(match scheme {
        Scheme::Exact => VertexScheme::Exact,
        Scheme::Lattice => VertexScheme::Lattice,
    });
    if let Some(p) = c.paths {
        cfg = cfg.with_paths(p);
    }
    if let Some(d) = c.delta {
        cfg = cfg.with_delta(d);
    }
    if let Some(h) = c.horizon {
        cfg = cfg.with_horizon(h);
    }
    if let Some(s) = c.seed {
        cfg = cfg.with_seed(s);
    }
    cfg
}

fn simulate(c: &Common, start: &str, scheme: Scheme, events: Option<&Path>, log_paths: usize) -> Result<u8, CliError> {
    let (doc, data) = load(c)?;
    let g = &doc.graph;
    let p = parse_point(g, start)?;
    let cfg = sim_config(c, scheme);
    cfg.validate(g)?;
    let lambda = c.lambda;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(ResolventError::BadLambda(lambda).into());
    }

    let times = mc_lifetimes(g, &data, p, &cfg)?;
    let killed: Vec<f64> = times.iter().map(|t| f64::from(u8::from(t.is_finite()))).collect();
    let capped: Vec<f64> = times.iter().map(|t| t.min(cfg.horizon)).collect();
    let mut rows: Vec<(String, Estimate)> = vec![
        ("killed_by_horizon".into(), Estimate::from_samples(&killed)),
        ("lifetime_capped_mean".into(), Estimate::from_samples(&capped)),
        (format!("survival_resolvent(lambda={lambda})"), mc_survival_resolvent(g, &data, p, lambda, &cfg)?),
    ];
    if let GraphPoint::Interior { .. } = p {
        let hit = mc_hitting_transform(g, &data, p, lambda, &cfg)?;
        for v in g.vertices() {
            rows.push((format!("hitting[{}](lambda={lambda})", g.vertex_name(v)), hit[v.index()]));
        }
    }
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|(name, e)| vec![name.clone(), format!("{:.9e}", e.mean), format!("{:.3e}", e.se)])
        .collect();
    let mut text = format!(
        "# seed={} delta={} horizon={} paths={} graph={}\n",
        cfg.seed,
        cfg.delta,
        cfg.horizon,
        cfg.paths,
        doc.hash()
    );
    text += &render(c.format, &["estimator", "value", "se"], &cells);
    emit(c, &text)?;

    if let Some(path) = events {
        let trajs = simulate_paths(g, &data, p, &cfg, log_paths.min(cfg.paths))?;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["path", "time", "edge", "x"]).expect("in-memory write");
        for (k, t) in trajs.iter().enumerate() {
            for &(time, pt) in &t.events {
                let (edge, x) = match pt {
                    GraphPoint::Interior { edge, x } => (edge.index() as i32, x),
                    GraphPoint::Vertex(v) => (-1, v.index() as f64),
                    GraphPoint::Cemetery => (-2, 0.0),
                };
                w.write_record([k.to_string(), format!("{time:.12e}"), edge.to_string(), format!("{x:.12e}")])
                    .expect("in-memory write");
            }
        }
        let body = String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8 fields");
        write_text(path, &body)?;
    }
    Ok(0)
}

fn compare(c: &Common, scenario_path: &Path) -> Result<u8, CliError> {
    let scenario = Scenario::read(scenario_path)?;
    let base = scenario_path.parent();
    let graph = match (&c.graph, &scenario.graph) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => base.map(|b| b.join(p)).unwrap_or_else(|| p.clone()),
        (None, None) => return Err(CliError::Usage("no graph: pass --graph or set `graph` in the scenario".into())),
    };
    let doc = GraphDocument::read(&graph)?;
    check_tadpoles(c, &doc.graph)?;
    let ov = Overrides {
        paths: c.paths,
        delta: c.delta,
        horizon: c.horizon,
        seed: c.seed,
    };
    let report = run_scenario(&doc, &scenario, base, &ov)?;
    let text = match c.format {
        Format::Csv => report.to_csv(),
        Format::Table => report.to_table(),
    };
    emit(c, &text)?;
    Ok(if report.all_pass() { 0 } else { COMPARISON })
}

fn parse_range(s: &str, flag: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::Usage(format!("{flag}: expected `lo:hi`, got `{s}`"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn detscan(c: &Common, re: &str, im: &str, steps: usize) -> Result<u8, CliError> {
    let (re0, re1) = parse_range(re, "--re")?;
    let (im0, im1) = parse_range(im, "--im")?;
    if steps < 2 {
        return Err(CliError::Usage("--steps must be at least 2".into()));
    }
    let (doc, data) = load(c)?;
    let (g, data) = without_tadpoles(&doc.graph, &data)?;
    let m = assemble(&g, &data)?;
    let at = |lo: f64, hi: f64, k: usize| lo + (hi - lo) * k as f64 / (steps - 1) as f64;
    let mut rows = Vec::with_capacity(steps * steps);
    for i in 0..steps {
        for j in 0..steps {
            let kappa = Complex64::new(at(re0, re1, i), at(im0, im1, j));
            let z = z_matrix(&m, kappa);
            let det = z.clone().determinant().norm();
            let sv = z.singular_values();
            let cond = if sv.is_empty() {
                0.0
            } else if sv.min() > 0.0 {
                (sv.max() / sv.min()).log10()
            } else {
                f64::INFINITY
            };
            rows.push(vec![
                format!("{:.6}", kappa.re),
                format!("{:.6}", kappa.im),
                format!("{det:.9e}"),
                format!("{cond:.6}"),
            ]);
        }
    }
    let mut text = render(c.format, &["kappa_re", "kappa_im", "abs_det", "log10_cond"], &rows);
    if let Ok(r) = find_invertible_kappa(&m, c.lambda) {
        let _ = writeln!(text, "# lambda = {} kappa = {} det|Z| = {:e}", r.lambda, r.kappa, r.abs_det());
    }
    emit(c, &text)?;
    Ok(0)
}

fn parse_pair(g1: &MetricGraph, g2: &MetricGraph, s: &str) -> Result<JoinPair, CliError> {
    let bad = |why: &str| CliError::Usage(format!("--pair `{s}`: {why}"));
    let parts: Vec<&str> = s.split(':').collect();
    if !(3..=4).contains(&parts.len()) {
        return Err(bad("expected left:right:length[:+1|-1]"));
    }
    let left = g1
        .edge_by_name(parts[0])
        .ok_or_else(|| GraphError::UnknownEdge(parts[0].to_string()))?;
    let right = g2
        .edge_by_name(parts[1])
        .ok_or_else(|| GraphError::UnknownEdge(parts[1].to_string()))?;
    let length: f64 = parts[2].parse().map_err(|_| bad("length is not a number"))?;
    let orientation = match parts.get(3) {
        None => Orientation::Forward,
        Some(o) => o
            .parse::<i32>()
            .ok()
            .and_then(Orientation::from_sign)
            .ok_or_else(|| bad("orientation must be +1 or -1"))?,
    };
    Ok(JoinPair {
        left,
        right,
        length,
        orientation,
    })
}

fn glue(c: &Common, left: &Path, right: &Path, pairs: &[String]) -> Result<u8, CliError> {
    let out = c
        .out
        .as_deref()
        .ok_or_else(|| CliError::Usage("glue needs --out for the joined graph".into()))?;
    let d1 = GraphDocument::read(left)?;
    let d2 = GraphDocument::read(right)?;
    check_tadpoles(c, &d1.graph)?;
    check_tadpoles(c, &d2.graph)?;
    let (g1, g2) = (&d1.graph, &d2.graph);
    let pairs = pairs
        .iter()
        .map(|s| parse_pair(g1, g2, s))
        .collect::<Result<Vec<_>, _>>()?;
    let (joined, shadow) = join_graphs(g1, g2, &pairs)?;
    let data = shadow.join_data(&joined, g1, &d1.data()?, g2, &d2.data()?)?;
    write_text(out, &GraphDocument::from_data(&joined, &data).to_json())?;

    println!("joined: {joined}");
    for p in shadow.pairs() {
        println!(
            "edge {}: {} -- {} length {} ({} .. {})",
            joined.edge_name(p.edge),
            p.left_name,
            p.right_name,
            p.length,
            joined.vertex_name(p.left_vertex),
            joined.vertex_name(p.right_vertex)
        );
    }
    println!("shadows:");
    for (s, v) in shadow.shadows() {
        let (side, g) = match s.side {
            wentzell::graph::Side::Left => ("left", g1),
            wentzell::graph::Side::Right => ("right", g2),
        };
        println!("  {side} {}@{} -> {}", g.edge_name(s.edge), s.position, joined.vertex_name(*v));
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions() {
        assert_eq!(fraction(1.0 / 3.0), "1/3");
        assert_eq!(fraction(0.5), "1/2");
        assert_eq!(fraction(1.0), "1");
        assert_eq!(fraction(0.0), "0");
        assert_eq!(fraction(std::f64::consts::PI), "3.141593");
    }

    #[test]
    fn table_aligns_columns() {
        let t = render(Format::Table, &["a", "bb"], &[vec!["123".into(), "x".into()]]);
        assert_eq!(t, "  a  bb\n123   x\n");
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("0.1:5", "--re").unwrap(), (0.1, 5.0));
        assert!(parse_range("5:1", "--re").is_err());
        assert!(parse_range("x", "--re").is_err());
    }
}
