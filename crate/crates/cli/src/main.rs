use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use shrinkdyn::config::Config;
use shrinkdyn::experiments::{self, Lab, EXPERIMENTS};
use shrinkdyn::report::{svg_plot, ExperimentReport, Series};
use shrinkdyn::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

const MANIFEST: &str = "manifest.json";

#[derive(Parser)]
#[command(name = "shrinkdyn", version, about = "Rescaled mean curvature flow near closed self-shrinkers")]
struct Cli {
    /// TOML overrides on top of the shipped defaults
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0: one per core)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectra of the circle, sphere and torus, or of one surface
    Spectrum {
        #[arg(long)]
        surface: Option<String>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Flow correctness suite
    Flow,
    /// Invariant manifold charts
    Manifolds,
    /// One named experiment
    Experiment {
        name: String,
        /// Trial count for cone, harnack and drift
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Every experiment in sequence
    All {
        #[arg(long, default_value = "desk")]
        suite: String,
    },
}

enum Failure {
    Usage(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Numeric(e.to_string())
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn write(out: &Path, name: &str, contents: &str, written: &mut Vec<(String, String)>) -> Result<(), Failure> {
    std::fs::write(out.join(name), contents).map_err(|e| Failure::Usage(format!("{}: {e}", out.join(name).display())))?;
    written.push((name.to_string(), sha256_hex(contents.as_bytes())));
    Ok(())
}

const ID_COLUMNS: [&str; 7] = ["trial", "class", "size", "eta", "dt", "m", "kind"];
const TIME_COLUMNS: [&str; 5] = ["time", "tau", "step", "index", "delta"];

/// Plot of a series: x is the first time-like column; when the first column labels a
/// trial or size, each label becomes its own curve (first ten).
fn plot_series(s: &Series) -> Option<String> {
    if s.rows.is_empty() {
        return Some(svg_plot(&s.name, "", "", &[], &[]));
    }
    let x = s.columns.iter().position(|c| TIME_COLUMNS.contains(&c.as_str()))?;
    let group = (x != 0 && ID_COLUMNS.contains(&s.columns[0].as_str())).then_some(0);
    let ys: Vec<usize> = (0..s.columns.len()).filter(|&i| i != x && Some(i) != group).collect();
    let y = *ys.first()?;
    let mut curves: Vec<(String, Vec<f64>, Vec<f64>)> = vec![];
    for row in &s.rows {
        let label = match group {
            Some(g) => format!("{} {}", s.columns[g], row[g]),
            None => s.columns[y].clone(),
        };
        if let Some(c) = curves.iter_mut().find(|c| c.0 == label) {
            c.1.push(row[x]);
            c.2.push(row[y]);
        } else if curves.len() < 10 {
            curves.push((label, vec![row[x]], vec![row[y]]));
        }
    }
    Some(svg_plot(&s.name, &s.columns[x], &s.columns[y], &curves, &[]))
}

/// Writes the report JSON, one CSV and one SVG per series; returns the file names.
fn emit(out: &Path, mut rep: ExperimentReport, written: &mut Vec<(String, String)>) -> Result<ExperimentReport, Failure> {
    let mut names = vec![];
    for s in &rep.series {
        let stem = format!("{}_{}", rep.name, s.name);
        write(out, &format!("{stem}.csv"), &s.to_csv(), written)?;
        names.push(format!("{stem}.csv"));
        if let Some(svg) = plot_series(s) {
            let svg = svg.replacen("<svg", &format!("<!-- manifest: {MANIFEST} -->\n<svg"), 1);
            write(out, &format!("{stem}.svg"), &svg, written)?;
            names.push(format!("{stem}.svg"));
        }
    }
    rep.artifacts = names;
    let mut v: Value = serde_json::from_str(&rep.to_json()).unwrap_or(Value::Null);
    v["manifest"] = json!(MANIFEST);
    write(out, &format!("{}.json", rep.name), &serde_json::to_string_pretty(&v).unwrap_or_default(), written)?;
    Ok(rep)
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    let clock = Instant::now();
    let text = match &cli.config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?),
        None => None,
    };
    let mut config = Config::load(text.as_deref()).map_err(|e| match (&cli.config, e) {
        (Some(p), Error::Config(m)) => Failure::Usage(format!("{}: {m}", p.display())),
        (_, e) => e.into(),
    })?;
    if let Some(seed) = cli.seed {
        config.run.seed = seed;
    }
    if let Some(t) = cli.threads {
        config.run.threads = t;
    }
    let label;
    match &cli.command {
        Command::Experiment { name, trials } => {
            if !EXPERIMENTS.contains(&name.as_str()) {
                return Err(Failure::Usage(format!("unknown experiment `{name}`; expected one of {}", EXPERIMENTS.join(", "))));
            }
            if let Some(t) = trials {
                match name.as_str() {
                    "cone" => config.cone.trials = *t,
                    "harnack" => config.harnack.trials = *t,
                    "drift" => config.drift.runs = *t,
                    _ => return Err(Failure::Usage(format!("--trials does not apply to `{name}`"))),
                }
            }
            label = format!("experiment {name}");
        }
        Command::All { suite } => {
            if suite != "desk" {
                return Err(Failure::Usage(format!("unknown suite `{suite}`; expected desk")));
            }
            label = format!("all --suite {suite}");
        }
        Command::Spectrum { .. } => label = "spectrum".into(),
        Command::Flow => label = "flow".into(),
        Command::Manifolds => label = "manifolds".into(),
    }
    config.validate()?;
    if config.run.threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(config.run.threads).build_global();
    }
    std::fs::create_dir_all(&cli.out).map_err(|e| Failure::Usage(format!("{}: {e}", cli.out.display())))?;

    let mut reports = vec![];
    match &cli.command {
        Command::Spectrum { surface: Some(kind), radius, n } => {
            reports.push(experiments::suites::surface_spectrum(&config, kind, *radius, *n)?);
        }
        Command::Spectrum { surface: None, radius, n } => {
            if radius.is_some() || n.is_some() {
                return Err(Failure::Usage("--radius and --n need --surface".into()));
            }
            reports.push(experiments::run(&Lab::new(config.clone())?, "spectrum")?);
        }
        Command::Flow => reports.push(experiments::run(&Lab::new(config.clone())?, "flow")?),
        Command::Manifolds => reports.push(experiments::run(&Lab::new(config.clone())?, "manifolds")?),
        Command::Experiment { name, .. } => reports.push(experiments::run(&Lab::new(config.clone())?, name)?),
        Command::All { .. } => {
            let lab = Lab::new(config.clone())?;
            for name in EXPERIMENTS {
                let t = Instant::now();
                let rep = experiments::run(&lab, name)?;
                eprintln!("{} [{:.1} s]", rep.summary(), t.elapsed().as_secs_f64());
                reports.push(rep);
            }
        }
    }

    let mut written = vec![];
    let toml = config.to_toml();
    write(&cli.out, "config.toml", &toml, &mut written)?;
    let mut summary = serde_json::Map::new();
    let mut ok = true;
    for rep in reports {
        let rep = emit(&cli.out, rep, &mut written)?;
        if !matches!(cli.command, Command::All { .. }) {
            eprintln!("{}", rep.summary());
        }
        ok &= rep.passed();
        summary.insert(rep.name.clone(), json!(if rep.passed() { "pass" } else { "fail" }));
    }
    let inputs: Vec<Value> = match (&cli.config, &text) {
        (Some(p), Some(t)) => vec![json!({ "path": p.display().to_string(), "sha256": sha256_hex(t.as_bytes()) })],
        _ => vec![],
    };
    let manifest = json!({
        "command": label,
        "config_sha256": sha256_hex(toml.as_bytes()),
        "seed": config.run.seed,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "inputs": inputs,
        "outputs": written.iter().map(|(n, h)| json!({ "path": n, "sha256": h })).collect::<Vec<_>>(),
        "wall_clock_seconds": clock.elapsed().as_secs_f64(),
        "summary": summary,
        "passed": ok,
    });
    std::fs::write(cli.out.join(MANIFEST), serde_json::to_string_pretty(&manifest).unwrap_or_default())
        .map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("numeric failure: {m}");
            ExitCode::from(3)
        }
    }
}
