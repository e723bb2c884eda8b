//! `fmo`: runs FMO correlation traces from the command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fmo_core::dynamics::GridKind;
use fmo_core::harness::{
    config_slug, emit, run, run_all, standard_grid, to_csv, InitSpec, Measure, OutputFormat,
    RunConfig,
};
use fmo_core::ree::GradientMode;
use fmo_core::{BipartiteCut, Error, FmoModel, Method, Side};

#[derive(Parser)]
#[command(
    name = "fmo",
    version,
    about = "Correlation dynamics of the FMO complex"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one configuration and write its correlation trace.
    Run(Box<RunArgs>),
    /// Run the standard grid of cuts, temperatures and initial states.
    Grid(GridArgs),
    /// Parse and check a model file.
    ValidateModel { path: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Plotdata,
    Both,
}

impl Format {
    fn formats(self) -> Vec<OutputFormat> {
        match self {
            Self::Csv => vec![OutputFormat::Csv],
            Self::Plotdata => vec![OutputFormat::Plotdata],
            Self::Both => vec![OutputFormat::Csv, OutputFormat::Plotdata],
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Temperature in kelvin.
    #[arg(long)]
    temp: Option<f64>,
    /// site1, site6, mixture, or a path to a state file.
    #[arg(long)]
    init: Option<InitSpec>,
    /// Cut such as "A=3;B=1,6".
    #[arg(long)]
    cut: Option<BipartiteCut>,
    #[arg(long)]
    measured_side: Option<Side>,
    /// Final time in ps.
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// log or linear.
    #[arg(long)]
    grid: Option<GridKind>,
    /// rk4 or expm.
    #[arg(long)]
    method: Option<Method>,
    /// Comma-separated subset of mi, discord, ree_single, ree_full.
    #[arg(long, value_delimiter = ',')]
    measures: Option<Vec<Measure>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path; CSV goes to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[command(flatten)]
    optimizer: OptimizerArgs,
    /// Print the effective configuration as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Args)]
struct OptimizerArgs {
    /// Full-REE starts.
    #[arg(long)]
    starts: Option<usize>,
    #[arg(long)]
    max_iters: Option<u64>,
    #[arg(long)]
    grad_step: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    floor_delta: Option<f64>,
    /// Number of product terms in the separable ansatz.
    #[arg(long = "K", id = "K")]
    k: Option<usize>,
    /// analytic or fd.
    #[arg(long)]
    gradient: Option<GradientMode>,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Skip the full-REE configuration.
    #[arg(long)]
    no_full_ree: bool,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl RunArgs {
    fn config(self) -> Result<(RunConfig, Format, bool), Error> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if self.model.is_some() {
            c.model = self.model;
        }
        if self.temp.is_some() {
            c.temp = self.temp;
        }
        if self.out.is_some() {
            c.out = self.out;
        }
        set(&mut c.init, self.init);
        set(&mut c.cut, self.cut);
        set(&mut c.measured_side, self.measured_side);
        set(&mut c.tmax, self.tmax);
        set(&mut c.points, self.points);
        set(&mut c.grid, self.grid);
        set(&mut c.method, self.method);
        set(&mut c.measures, self.measures);
        set(&mut c.seed, self.seed);
        let o = self.optimizer;
        set(&mut c.optimizer.starts, o.starts);
        set(&mut c.optimizer.max_iters, o.max_iters);
        set(&mut c.optimizer.grad_step, o.grad_step);
        set(&mut c.optimizer.tol, o.tol);
        set(&mut c.optimizer.floor_delta, o.floor_delta);
        set(&mut c.optimizer.gradient, o.gradient);
        if o.k.is_some() {
            c.optimizer.k = o.k;
        }
        c.validate()?;
        Ok((c, self.format, self.print_config))
    }
}

fn exit_code(e: &Error) -> ExitCode {
    match e {
        Error::Io { .. } => ExitCode::from(1),
        e if e.is_validation() => ExitCode::from(1),
        _ => ExitCode::from(2),
    }
}

fn write_trace(
    trace: &fmo_core::CorrelationTrace,
    out: &Path,
    format: Format,
) -> Result<(), Error> {
    for f in format.formats() {
        for path in emit(trace, f, out)? {
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<(), Error> {
    let (config, format, print) = args.config()?;
    if print {
        print!("{}", config.to_toml());
        return Ok(());
    }
    let trace = run(&config)?;
    let flagged = trace.rows.iter().filter(|r| !r.flags.is_empty()).count();
    if flagged > 0 {
        eprintln!("{flagged} of {} rows carry flags", trace.rows.len());
    }
    match &config.out {
        Some(out) => write_trace(&trace, out, format),
        None => {
            print!("{}", to_csv(&trace)?);
            Ok(())
        }
    }
}

fn cmd_grid(args: GridArgs) -> Result<(), Error> {
    let mut configs = standard_grid();
    if args.no_full_ree {
        configs.retain(|c| !c.wants(Measure::ReeFull));
    }
    for c in &mut configs {
        c.model.clone_from(&args.model);
        if let Some(s) = args.seed {
            c.seed = s;
        }
        let mut slug = config_slug(c);
        if c.wants(Measure::ReeFull) {
            slug.push_str("_full");
        }
        c.out = Some(args.out_dir.join(format!("{slug}.csv")));
    }
    let mut first_err = None;
    for (c, result) in configs.iter().zip(run_all(&configs)) {
        let out = c.out.as_ref().expect("set above");
        match result.and_then(|t| write_trace(&t, out, Format::Both)) {
            Ok(()) => {}
            Err(e) => {
                eprintln!("{}: {e}", config_slug(c));
                first_err.get_or_insert(e);
            }
        }
    }
    first_err.map_or(Ok(()), Err)
}

fn cmd_validate(path: &Path) -> Result<(), Error> {
    let model = FmoModel::load(path)?;
    let rates = model.rates(None)?;
    println!("ok: {}", path.display());
    println!(
        "recomb_rate = {} /ps, sink_rate = {} /ps, dephasing_rate = {} /ps",
        rates.recomb_rate, rates.sink_rate, rates.dephasing_rate
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(*args),
        Command::Grid(args) => cmd_grid(args),
        Command::ValidateModel { path } => cmd_validate(&path),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
