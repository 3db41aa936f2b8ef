use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hermitube_core::approx::exhaust;
use hermitube_core::domains::DomainBase;
use hermitube_core::potential::{potential_family, rho_hat};
use hermitube_core::report::CheckReport;
use hermitube_core::verify::{run_suite, Suite};
use hermitube_core::{Family, LieModel};
use serde_json::{json, Value};

mod output;

use output::to_json;

#[derive(Parser)]
#[command(name = "hermitube", version, about = "N-invariant domains, envelopes and Killing potentials on Hermitian symmetric spaces")]
struct Cli {
    /// Model: JSON descriptor or shorthand `sl2`, `sp:R`, `su:P,Q`.
    #[arg(long, global = true)]
    model: Option<String>,
    /// Overrides the residual tolerance of every residual-type check.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Output file (report commands) or directory (envelope, exhaust).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Timing and progress on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Stein test of a base domain: convexity and cone invariance.
    Classify { domain: PathBuf },
    /// Envelope of holomorphy: the convex cone-invariant hull.
    Envelope { domain: PathBuf },
    /// Smooth exhaustion levels of a Stein base.
    Exhaust {
        domain: PathBuf,
        #[arg(long, default_value_t = 4)]
        n_max: usize,
        /// Boundary seeds per transverse axis.
        #[arg(long, default_value_t = 16)]
        per_axis: usize,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
    },
    /// Numerical verification suites on a model.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// The Killing potential, optionally shifted by `c y_r + d`, at slice points.
    PotentialEval {
        /// Slice point `y1,...,yr`; repeatable.
        #[arg(long = "y", required = true, allow_hyphen_values = true)]
        points: Vec<String>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        c: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        d: f64,
    },
}

enum Failure {
    Usage(String),
    Negative(String),
}

impl From<hermitube_core::Error> for Failure {
    fn from(e: hermitube_core::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

struct Output {
    json: Value,
    csv: String,
    pass: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(n) = std::env::var("HERMITUBE_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: HERMITUBE_THREADS must be a positive integer");
                return ExitCode::from(2);
            }
        }
    }
    let start = std::time::Instant::now();
    let result = run(&cli);
    if cli.verbose > 0 {
        let status = match &result {
            Ok(out) if out.pass => "pass",
            Ok(_) | Err(Failure::Negative(_)) => "negative",
            Err(Failure::Usage(_)) => "usage error",
        };
        eprintln!("hermitube: {status} after {:.3} s (seed {})", start.elapsed().as_secs_f64(), cli.seed);
    }
    match result {
        Ok(out) => {
            let text = match cli.format {
                Format::Json => to_json(&out.json),
                Format::Csv => out.csv,
            };
            if let Err(e) = emit(&cli, &text) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            ExitCode::from(if out.pass { 0 } else { 1 })
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Negative(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
    }
}

/// Report commands write to `--out` when given; directory commands always print.
fn emit(cli: &Cli, text: &str) -> io::Result<()> {
    match (&cli.out, &cli.command) {
        (Some(path), Command::Classify { .. } | Command::Verify { .. } | Command::PotentialEval { .. }) => {
            fs::write(path, text)
        }
        _ => io::stdout().write_all(text.as_bytes()),
    }
}

fn run(cli: &Cli) -> Result<Output, Failure> {
    match &cli.command {
        Command::Classify { domain } => classify(&load_domain(domain)?),
        Command::Envelope { domain } => envelope(&load_domain(domain)?, cli.out.as_deref()),
        Command::Exhaust { domain, n_max, per_axis, samples } => {
            exhaust_cmd(&load_domain(domain)?, *n_max, *per_axis, *samples, cli.seed, cli.out.as_deref())
        }
        Command::Verify { suite } => verify(&model(cli)?, suite, cli.seed, cli.tol),
        Command::PotentialEval { points, c, d } => potential_eval(&model(cli)?, points, *c, *d),
    }
}

fn load_domain(path: &Path) -> Result<DomainBase, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Ok(DomainBase::from_json(&text)?)
}

fn model(cli: &Cli) -> Result<LieModel, Failure> {
    let text = cli.model.as_deref().ok_or_else(|| Failure::Usage("--model is required".into()))?;
    Ok(LieModel::build(Family::parse(text)?)?)
}

fn value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

fn csv_row(fields: &[String]) -> String {
    let mut s = fields.join(",");
    s.push('\n');
    s
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn classify(d: &DomainBase) -> Result<Output, Failure> {
    let v = d.is_stein();
    let csv = csv_row(&["convex,c_invariant,stein,sampled".into()])
        + &csv_row(&[v.convex.to_string(), v.c_invariant.to_string(), v.stein.to_string(), v.sampled.to_string()]);
    Ok(Output { json: value(&v), csv, pass: v.stein })
}

fn envelope(d: &DomainBase, out: Option<&Path>) -> Result<Output, Failure> {
    let hull = d.envelope()?;
    let facets = hull.hrep.len();
    let mut files = Vec::new();
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        let path = dir.join("envelope.json");
        fs::write(&path, to_json(&value(&hull.domain())))?;
        files.push(path.display().to_string());
        let extent = hull.vertices.iter().flatten().fold(1.0_f64, |a, v| a.max(*v)) * 2.0 + 1.0;
        if let Some(csv) = hull.boundary_csv(extent) {
            let path = dir.join("boundary.csv");
            fs::write(&path, csv)?;
            files.push(path.display().to_string());
        }
    }
    let json = json!({
        "facets": facets,
        "hrep": value(&hull.hrep),
        "vertices": hull.vertices,
        "rays": hull.rays,
        "lower_dimensional": hull.lower_dimensional,
        "clipped": hull.clipped,
        "files": files,
    });
    let mut csv = csv_row(&[(1..=hull.rank).map(|k| format!("n{k}")).chain(["c".into()]).collect::<Vec<_>>().join(",")]);
    for h in &hull.hrep {
        csv += &csv_row(&h.n.iter().copied().chain([h.c]).map(num).collect::<Vec<_>>());
    }
    Ok(Output { json, csv, pass: true })
}

fn exhaust_cmd(
    d: &DomainBase,
    n_max: usize,
    per_axis: usize,
    samples: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<Output, Failure> {
    if d.halfspaces().is_err() {
        return Err(Failure::Usage("exhaust needs a half-space representation".into()));
    }
    let verdict = d.is_stein();
    if !verdict.stein {
        let why = if verdict.convex { "not invariant under the cone" } else { "not convex" };
        return Err(Failure::Negative(format!(
            "the domain is {why}; the exhaustion is defined for convex cone-invariant bases only"
        )));
    }
    let run = exhaust(d, n_max, per_axis, samples, seed)?;
    let mut files = Vec::new();
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        for (n, level) in &run.levels {
            let path = dir.join(format!("level_n{n}.csv"));
            fs::write(&path, level.boundary_csv())?;
            files.push(path.display().to_string());
        }
    }
    let summaries = run.summaries();
    let json = json!({
        "levels": value(&summaries),
        "nesting": value(&run.nesting),
        "files": files,
        "pass": run.pass(),
    });
    let mut csv = csv_row(&["n,eps,delta,boundary_points,boundary_inside,gradient_nonvanishing,missed_seeds,checks_pass".into()]);
    for s in &summaries {
        csv += &csv_row(&[
            s.n.to_string(),
            num(s.eps),
            num(s.delta),
            s.boundary_points.to_string(),
            s.boundary_inside.to_string(),
            s.gradient_nonvanishing.to_string(),
            s.missed_seeds.to_string(),
            s.checks_pass.to_string(),
        ]);
    }
    Ok(Output { json, csv, pass: run.pass() })
}

fn retolerance(c: &mut CheckReport, tol: f64) {
    if c.tolerance > 0.0 {
        c.tolerance = tol;
        c.pass = c.max_residual <= tol;
    }
}

fn verify(m: &LieModel, suite: &str, seed: u64, tol: Option<f64>) -> Result<Output, Failure> {
    let suite = Suite::parse(suite)?;
    let mut rep = run_suite(m, suite, seed)?;
    if let Some(t) = tol {
        if t.is_nan() || t <= 0.0 {
            return Err(Failure::Usage("--tol must be positive".into()));
        }
        rep.checks.iter_mut().for_each(|c| retolerance(c, t));
        rep.pass = rep.checks.iter().all(|c| c.pass);
    }
    let mut csv = csv_row(&["name,trials,max_residual,tolerance,pass".into()]);
    for c in &rep.checks {
        csv += &csv_row(&[c.name.clone(), c.trials.to_string(), num(c.max_residual), num(c.tolerance), c.pass.to_string()]);
    }
    Ok(Output { json: value(&rep), csv, pass: rep.pass })
}

fn parse_point(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Failure::Usage(format!("bad coordinate {t:?} in {s:?}"))))
        .collect()
}

fn potential_eval(m: &LieModel, points: &[String], c: f64, d: f64) -> Result<Output, Failure> {
    let spec = potential_family(m, c, d)?;
    let mut rows = Vec::new();
    let mut csv = csv_row(&[(1..=m.rank).map(|k| format!("y{k}")).chain(["rho_hat".into(), "sigma".into()]).collect::<Vec<_>>().join(",")]);
    for p in points {
        let y = parse_point(p)?;
        let rho = rho_hat(m, &y)?;
        let sigma = spec.value(&y)?;
        csv += &csv_row(&y.iter().copied().chain([rho, sigma]).map(num).collect::<Vec<_>>());
        rows.push(json!({ "y": y, "rho_hat": rho, "sigma": sigma }));
    }
    let json = json!({ "model": value(&m.family), "b": m.b, "c": c, "d": d, "points": rows });
    Ok(Output { json, csv, pass: true })
}
