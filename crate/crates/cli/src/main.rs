mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use serde::Serialize;
use snlevy::laws::{LawContext, LawQuery};
use snlevy::levy_model::LevyModel;
use snlevy::risk::{gerber_shiu_2d, gerber_shiu_with, Penalty, PenaltySpec};
use snlevy::scale::ScaleEvaluator;
use snlevy::sim::{estimate, simulate, PathFunctionals, RuinCause, StopReason};
use snlevy::validation::{failures, run_suite, Check};

use config::{Command, Format, GsMethod, RunConfig, SCHEMA_VERSION};

#[derive(Debug, Parser)]
#[command(
    name = "snlevy",
    version,
    about = "Fluctuation identities for spectrally negative Levy processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Overrides the simulation seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for simulation.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Numerical(String),
    Validation(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Validation(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numerical(m) | Failure::Validation(m) => m,
        }
    }
}

impl From<snlevy::error::Error> for Failure {
    fn from(e: snlevy::error::Error) -> Self {
        use snlevy::error::Error;
        match e {
            Error::InvalidModel(_) | Error::Domain { .. } | Error::Unsupported { .. } => Failure::Config(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn load(path: &Path) -> Outcome<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let cfg: RunConfig = toml::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(Failure::Config(format!(
            "{}: schema_version must be {SCHEMA_VERSION} (got {})",
            path.display(),
            cfg.schema_version
        )));
    }
    Ok(cfg)
}

struct Sink {
    path: Option<PathBuf>,
    format: Format,
}

impl Sink {
    fn write<T: Serialize>(&self, rows: &[T]) -> Outcome<()> {
        let out: Box<dyn Write> = match &self.path {
            Some(p) => Box::new(File::create(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?),
            None => Box::new(io::stdout().lock()),
        };
        let mut out = BufWriter::new(out);
        let io_err = |e: String| Failure::Numerical(format!("writing output: {e}"));
        match self.format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(&mut out);
                for r in rows {
                    w.serialize(r).map_err(|e| io_err(e.to_string()))?;
                }
                w.flush().map_err(|e| io_err(e.to_string()))?;
            }
            Format::Json => {
                serde_json::to_writer_pretty(&mut out, rows).map_err(|e| io_err(e.to_string()))?;
                writeln!(out).map_err(|e| io_err(e.to_string()))?;
            }
        }
        out.flush().map_err(|e| io_err(e.to_string()))
    }
}

#[derive(Serialize)]
struct ScaleRow {
    x: f64,
    w: f64,
    w_prime: f64,
    z: f64,
}

#[derive(Serialize)]
struct LawRow {
    law_name: &'static str,
    x: f64,
    q: f64,
    beta: f64,
    y: f64,
    z: f64,
    a: f64,
    b: f64,
    value: f64,
}

#[derive(Serialize)]
struct GsRow {
    x: f64,
    value: f64,
    jump_part: f64,
    creeping_part: f64,
    error_estimate: f64,
}

#[derive(Serialize)]
struct PathRow {
    path: usize,
    start: f64,
    ruined: bool,
    ruin_time: Option<f64>,
    pre_surplus: Option<f64>,
    deficit: Option<f64>,
    sup_before_ruin: Option<f64>,
    inf_before_ruin: Option<f64>,
    creeping: Option<bool>,
    recovery_time: Option<f64>,
    inf_to_recovery: Option<f64>,
    last_passage_time: Option<f64>,
    duration: f64,
    end_time: f64,
    stop: StopReason,
}

impl PathRow {
    fn new(path: usize, p: &PathFunctionals) -> Self {
        let r = p.ruin;
        PathRow {
            path,
            start: p.start,
            ruined: r.is_some(),
            ruin_time: r.map(|r| r.time),
            pre_surplus: r.map(|r| r.pre_surplus),
            deficit: r.map(|r| r.deficit),
            sup_before_ruin: r.map(|r| r.sup),
            inf_before_ruin: r.map(|r| r.inf),
            creeping: r.map(|r| r.cause == RuinCause::Creeping),
            recovery_time: p.recovery.map(|v| v.time),
            inf_to_recovery: p.recovery.map(|v| v.inf),
            last_passage_time: p.last_passage.map(|v| v.time),
            duration: p.duration,
            end_time: p.end_time,
            stop: p.stop,
        }
    }
}

#[derive(Serialize)]
struct EstimateRow {
    label: String,
    mean: f64,
    std_error: f64,
    n_paths: u64,
    n_effective: u64,
    n_censored: u64,
    censoring_bound: f64,
    truncation_bound: f64,
}

fn grid(g: &config::Grid, key: &str) -> Outcome<Vec<f64>> {
    g.points(key).map_err(Failure::Config)
}

fn run_scale(cfg: &RunConfig, model: &LevyModel, sink: &Sink) -> Outcome<()> {
    let s = &cfg.scale;
    let ev = ScaleEvaluator::with_options(model, s.q, s.options)?;
    let mut rows = Vec::new();
    for x in grid(&s.x, "scale.x")? {
        rows.push(ScaleRow {
            x,
            w: ev.w(x)?,
            w_prime: ev.w_prime(x)?,
            z: ev.z(x)?,
        });
    }
    sink.write(&rows)
}

fn run_law(cfg: &RunConfig, model: &LevyModel, sink: &Sink) -> Outcome<()> {
    let l = cfg
        .law
        .as_ref()
        .ok_or_else(|| Failure::Config("missing [law] table".into()))?;
    let ctx = LawContext::with_options(model, l.q, l.beta, l.options)?;
    let (xs, ys, zs) = (grid(&l.x, "law.x")?, grid(&l.y, "law.y")?, grid(&l.z, "law.z")?);
    let (as_, bs) = (grid(&l.a, "law.a")?, grid(&l.b, "law.b")?);
    let mut rows = Vec::new();
    for &x in &xs {
        for &y in &ys {
            for &z in &zs {
                for &a in &as_ {
                    for &b in &bs {
                        let query = LawQuery {
                            x,
                            q: l.q,
                            beta: l.beta,
                            y,
                            z,
                            a,
                            b,
                        };
                        rows.push(LawRow {
                            law_name: l.law.name(),
                            x,
                            q: l.q,
                            beta: l.beta,
                            y,
                            z,
                            a,
                            b,
                            value: ctx.evaluate(l.law, &query)?.value,
                        });
                    }
                }
            }
        }
    }
    sink.write(&rows)
}

fn run_gs(cfg: &RunConfig, model: &LevyModel, sink: &Sink) -> Outcome<()> {
    let g = &cfg.gs;
    let penalty: Penalty = g.penalty.parse()?;
    let mut spec = PenaltySpec::new(penalty);
    if let Some(a_max) = g.a_max {
        spec.a_max = a_max;
    }
    if let Some(tol) = g.rel_tol {
        spec = spec.with_tolerance(tol);
    }
    let mut rows = Vec::new();
    for x in grid(&g.x, "gs.x")? {
        let r = match g.method {
            GsMethod::Full => gerber_shiu_with(model, g.q, x, &spec, g.kernel, g.options)?,
            GsMethod::YzReduction => gerber_shiu_2d(model, g.q, x, &spec)?,
        };
        rows.push(GsRow {
            x,
            value: r.value,
            jump_part: r.jump_part,
            creeping_part: r.creeping_part,
            error_estimate: r.error_estimate,
        });
    }
    sink.write(&rows)
}

fn run_simulate(cfg: &RunConfig, model: &LevyModel, sink: &Sink, seed: Option<u64>) -> Outcome<()> {
    let s = &cfg.simulate;
    let mut plan = s.plan;
    if let Some(seed) = seed {
        plan.seed = seed;
    }
    if s.estimates.is_empty() {
        let paths = simulate(model, s.x, &plan)?;
        let rows: Vec<PathRow> = paths.iter().enumerate().map(|(i, p)| PathRow::new(i, p)).collect();
        return sink.write(&rows);
    }
    let weights: Vec<_> = s.estimates.iter().map(|e| e.weight).collect();
    let est = estimate(model, s.x, &plan, &weights)?;
    let rows: Vec<EstimateRow> = s
        .estimates
        .iter()
        .zip(est)
        .map(|(spec, e)| EstimateRow {
            label: spec.label.clone(),
            mean: e.mean,
            std_error: e.std_error,
            n_paths: e.n_paths,
            n_effective: e.n_effective,
            n_censored: e.n_censored,
            censoring_bound: e.censoring_bound,
            truncation_bound: e.truncation_bound,
        })
        .collect();
    sink.write(&rows)
}

fn summary(checks: &[Check]) -> String {
    let mut s = String::new();
    for c in checks {
        s.push_str(&format!(
            "{:<6} {:<36} analytic {:>12.6e}  mc {:>12.6e} ± {:.2e}  z {:+.2}\n",
            if c.pass { "PASS" } else { "FAIL" },
            c.check_name,
            c.analytic,
            c.mc_mean,
            c.mc_se,
            c.z_score
        ));
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    s.push_str(&format!("{passed} of {} checks passed\n", checks.len()));
    s
}

fn run_validate(cfg: &RunConfig, model: &LevyModel, sink: &Sink, seed: Option<u64>) -> Outcome<()> {
    let v = &cfg.validate;
    let mut plan = v.plan;
    if let Some(seed) = seed {
        plan.seed = seed;
    }
    let checks = run_suite(model, &plan, &v.params)?;
    sink.write(&checks)?;
    eprint!("{}", summary(&checks));
    match failures(&checks) {
        Some(e) => Err(Failure::Validation(e.to_string())),
        None => Ok(()),
    }
}

fn run(cli: &Cli) -> Outcome<()> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Config("--config <path> is required".into()))?;
    let cfg = load(path)?;
    if let Some(c) = cfg.command {
        if c != cli.command {
            return Err(Failure::Config(format!(
                "config is for '{}' but the subcommand is '{}'",
                c.name(),
                cli.command.name()
            )));
        }
    }
    let model = cfg.model.build()?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Config("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(format!("--threads: {e}")))?;
    }
    let out = cli.out.clone().or_else(|| cfg.output.path.clone());
    let format = cli.format.or(cfg.output.format).unwrap_or_else(|| {
        match out.as_ref().and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some("json") => Format::Json,
            _ => Format::Csv,
        }
    });
    let sink = Sink { path: out, format };
    match cli.command {
        Command::Scale => run_scale(&cfg, &model, &sink),
        Command::Law => run_law(&cfg, &model, &sink),
        Command::Gs => run_gs(&cfg, &model, &sink),
        Command::Simulate => run_simulate(&cfg, &model, &sink, cli.seed),
        Command::Validate => run_validate(&cfg, &model, &sink, cli.seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
