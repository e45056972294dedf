use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use boundaryboot::asymptotics::{draw_original_limit, draw_pair, BootstrapCase, LimitConfig, OriginalCase, RegressorLimit};
use boundaryboot::config::parse_plan;
use boundaryboot::location_model::{loc_demo, LocDemoConfig};
use boundaryboot::montecarlo::{preset, run_experiment, Scale};
use boundaryboot::par::{map_indexed, Threads};
use boundaryboot::report::{write_csv, write_markdown};
use boundaryboot::rng::{Role, StreamKey};
use boundaryboot::{Matrix2, Vector2};

#[derive(Parser)]
#[command(name = "boundaryboot", version, about = "Wild bootstrap inference when the parameter may sit on a boundary")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rejection-rate table for a built-in design.
    Table(TableArgs),
    /// Run an experiment described by a config file.
    Custom(CustomArgs),
    /// Draws from the limiting laws of the estimator and its bootstrap analogue.
    Asymptotic(AsymptoticArgs),
    /// Exact against simulated bootstrap p-values in the location model.
    LocationDemo(LocationArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Markdown,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Write here instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Add Monte Carlo standard errors to Markdown tables.
    #[arg(long)]
    include_se: bool,
}

#[derive(Args)]
struct ThreadArgs {
    /// Worker threads: a positive count or `auto`.
    #[arg(long, env = "BOUNDARYBOOT_THREADS", value_parser = parse_threads)]
    threads: Option<Threads>,
}

#[derive(Args)]
struct TableArgs {
    /// table1, table2, tableS1, ..., tableS4.
    #[arg(long)]
    name: String,
    #[arg(long, default_value = "desk")]
    scale: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep only cells with this sample size.
    #[arg(long)]
    n: Option<usize>,
    /// Override the number of replications.
    #[arg(long)]
    reps: Option<usize>,
    /// Override the number of bootstrap repetitions.
    #[arg(long)]
    bootstrap: Option<usize>,
    #[command(flatten)]
    threads: ThreadArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CustomArgs {
    config: PathBuf,
    /// Replace the file's master_seed.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    threads: ThreadArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Case {
    Interior,
    Boundary,
    StandardAtBoundary,
    Drift,
}

#[derive(Args)]
struct AsymptoticArgs {
    #[arg(long, value_enum)]
    case: Case,
    #[arg(long, default_value_t = 10_000)]
    draws: usize,
    #[arg(long, default_value_t = LimitConfig::DEFAULT_GRID)]
    grid: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Drift location `a,b` (drift case).
    #[arg(long, default_value = "0,0", value_parser = parse_pair, allow_hyphen_values = true)]
    vartheta: [f64; 2],
    /// Distance of the drift from the boundary (drift case).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    c: f64,
    /// Mean-reversion rate of a local-to-unity regressor; omitted means Brownian motion.
    #[arg(long)]
    ou: Option<f64>,
    /// Long-run covariance between the regressor and error innovations.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    omega_xz: f64,
    #[command(flatten)]
    threads: ThreadArgs,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct LocationArgs {
    #[arg(long, default_value_t = 400)]
    n: usize,
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
    #[arg(long, default_value_t = 0.5)]
    kappa: f64,
    #[arg(long, default_value_t = 0.0)]
    theta0: f64,
    #[arg(long, default_value_t = 999)]
    bootstrap_draws: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.05,0.10,0.25,0.40,0.60")]
    levels: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

fn parse_threads(s: &str) -> Result<Threads, String> {
    if s == "auto" {
        return Ok(Threads::Auto);
    }
    match s.parse::<usize>() {
        Ok(t) if t > 0 => Ok(Threads::Fixed(t)),
        _ => Err(format!("expected `auto` or a positive count, got `{s}`")),
    }
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => match (a.parse(), b.parse()) {
            (Ok(a), Ok(b)) => Ok([a, b]),
            _ => Err(format!("`{s}` is not a pair of numbers")),
        },
        _ => Err(format!("expected `a,b`, got `{s}`")),
    }
}

enum Failure {
    Usage(String),
    Io(String),
}

impl From<boundaryboot::Error> for Failure {
    fn from(e: boundaryboot::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn emit(path: &Option<PathBuf>, bytes: &[u8]) -> Result<(), Failure> {
    let res = match path {
        Some(p) => fs::write(p, bytes).map_err(|e| format!("{}: {e}", p.display())),
        None => io::stdout().lock().write_all(bytes).map_err(|e| e.to_string()),
    };
    res.map_err(Failure::Io)
}

fn render_table(table: &boundaryboot::montecarlo::ErpTable, out: &OutputArgs) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    match out.format {
        Format::Csv => write_csv(table, &mut buf),
        Format::Markdown => write_markdown(table, out.include_se, &mut buf),
    }
    .map_err(|e| Failure::Io(e.to_string()))?;
    Ok(buf)
}

fn cmd_table(args: TableArgs) -> Result<(), Failure> {
    let scale: Scale = args.scale.parse()?;
    let mut plan = preset(&args.name, scale)?;
    plan.master_seed = args.seed;
    plan.threads = args.threads.threads.unwrap_or_default();
    if let Some(reps) = args.reps {
        plan.reps = reps;
    }
    if let Some(b) = args.bootstrap {
        plan.b = b;
    }
    if let Some(n) = args.n {
        plan = plan.retain(|c| c.n == n);
        if plan.cells.is_empty() {
            return Err(Failure::Usage(format!("{} has no cells with n = {n}", args.name)));
        }
    }
    let table = run_experiment(&plan)?;
    emit(&args.output.output, &render_table(&table, &args.output)?)
}

fn cmd_custom(args: CustomArgs) -> Result<(), Failure> {
    let label = args.config.display().to_string();
    let text = fs::read_to_string(&args.config).map_err(|e| Failure::Io(format!("{label}: {e}")))?;
    let mut plan = parse_plan(&text, &label)?;
    if let Some(seed) = args.seed {
        plan.master_seed = seed;
    }
    if let Some(t) = args.threads.threads {
        plan.threads = t;
    }
    let table = run_experiment(&plan)?;
    emit(&args.output.output, &render_table(&table, &args.output)?)
}

fn cmd_asymptotic(args: AsymptoticArgs) -> Result<(), Failure> {
    if args.draws == 0 {
        return Err(Failure::Usage("--draws must be at least 1".into()));
    }
    let config = LimitConfig {
        grid: args.grid,
        omega: Matrix2::new(1.0, args.omega_xz, args.omega_xz, 1.0),
        regressor: match args.ou {
            Some(c) => RegressorLimit::OrnsteinUhlenbeck { c },
            None => RegressorLimit::BrownianMotion,
        },
        ..LimitConfig::unit_root()
    };
    config.validate()?;
    let draws = map_indexed(args.draws, args.threads.threads.unwrap_or_default(), |i| {
        let mut rng = StreamKey::new(args.seed, 0, i as u64, Role::Limit).rng();
        match args.case {
            Case::Interior => draw_pair(&config, OriginalCase::Interior, BootstrapCase::Interior, &mut rng),
            Case::Boundary => draw_pair(&config, OriginalCase::Boundary, BootstrapCase::Boundary, &mut rng),
            Case::StandardAtBoundary => {
                draw_pair(&config, OriginalCase::Boundary, BootstrapCase::StandardAtBoundary, &mut rng)
            }
            Case::Drift => {
                let case = OriginalCase::Drift {
                    vartheta: Vector2::new(args.vartheta[0], args.vartheta[1]),
                    c: args.c,
                };
                draw_original_limit(&config, case, &mut rng)
            }
        }
    });
    let mut buf = String::from("m11,m12,m22,xi1,xi2,ell1,ell2,gdot_ell,ell_star1,ell_star2\n");
    for d in draws {
        let d = d?;
        let star = match d.ell_star {
            Some(s) => format!("{:.16e},{:.16e}", s[0], s[1]),
            None => ",".to_string(),
        };
        buf.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{star}\n",
            d.m[(0, 0)],
            d.m[(0, 1)],
            d.m[(1, 1)],
            d.xi[0],
            d.xi[1],
            d.ell[0],
            d.ell[1],
            config.g_dot.dot(&d.ell),
        ));
    }
    emit(&args.output, buf.as_bytes())
}

fn cmd_location_demo(args: LocationArgs) -> Result<(), Failure> {
    let config = LocDemoConfig {
        n: args.n,
        reps: args.reps,
        kappa: args.kappa,
        theta0: args.theta0,
        bootstrap_draws: args.bootstrap_draws,
        levels: args.levels,
    };
    let seed = args.seed;
    let rows = loc_demo(&config, |r| StreamKey::new(seed, 0, r as u64, Role::Data).rng())?;
    let cell = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
    let pct = |v: Option<f64>| v.map(|x| format!("{:.2}", 100.0 * x)).unwrap_or_else(|| "-".into());
    let mut buf = String::new();
    match args.output.format {
        Format::Csv => {
            buf.push_str("scheme,level,limit,analytic,simulated,mc_se\n");
            for r in &rows {
                buf.push_str(&format!(
                    "{},{:.16e},{:.16e},{},{},{}\n",
                    r.scheme,
                    r.level,
                    r.limit,
                    cell(r.analytic),
                    cell(r.simulated),
                    cell(r.mc_se)
                ));
            }
        }
        Format::Markdown => {
            buf.push_str(&format!(
                "### Location model, n = {}, θ₀ = {}, {} replications\n\n",
                config.n, config.theta0, config.reps
            ));
            buf.push_str("| scheme | level | limit | exact p* | simulated p* |\n|---|---|---|---|---|\n");
            for r in &rows {
                let exact = match (r.analytic, r.mc_se, args.output.include_se) {
                    (Some(_), Some(se), true) => format!("{} ({:.2})", pct(r.analytic), 100.0 * se),
                    _ => pct(r.analytic),
                };
                buf.push_str(&format!(
                    "| {} | {} | {:.1} | {} | {} |\n",
                    r.scheme,
                    r.level,
                    100.0 * r.limit,
                    exact,
                    pct(r.simulated)
                ));
            }
        }
    }
    emit(&args.output.output, buf.as_bytes())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Table(a) => cmd_table(a),
        Command::Custom(a) => cmd_custom(a),
        Command::Asymptotic(a) => cmd_asymptotic(a),
        Command::LocationDemo(a) => cmd_location_demo(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
