//! The `odeen` command line: enumeration statistics, the semantic matrix,
//! dataset generation, solving, scoring, the game-master server and the
//! built-in stdio plugin.

pub mod error;
pub mod server;

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use odeen_core::dataset::{generate_split, load_games, write_split, Game, SplitConfig};
use odeen_core::metrics::{score_run, MetricsReport};
use odeen_core::plugin::{self, PluginProcess};
use odeen_core::semantics::{
    census, column_weights, row_weights, write_rule_weights_csv, write_structure_weights_csv, MatrixCensus,
    REPORTED_COLUMN_BAND,
};
use odeen_core::solvers::{
    crn_solve, cumulative_discovery_curve, exhaustive_solve, game_seed, ConjectureSource, EnumerationSource,
    HardCodedInterpreter, MatrixInterpreter, Mode, OracleSource, PredictionRecord, RuleInterpreter, SolverConfig,
    UniformSampler,
};
use odeen_core::{
    build_matrix, enumerate_rules, load_matrix, save_matrix, RuleCounts, World, REPORTED_RULE_COUNT, STRUCTURE_COUNT,
};

pub use error::CliError;

pub const MATRIX_FILE: &str = "matrix.odn";
pub const DEFAULT_DATA_DIR: &str = "odeen-data";

#[derive(Debug, Parser)]
#[command(name = "odeen", version, about = "Odeen explanatory-learning environment")]
pub struct Cli {
    /// Base seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory for the matrix, splits and session logs.
    #[arg(long, global = true, env = "ODEEN_DATA_DIR", default_value = DEFAULT_DATA_DIR)]
    pub data_dir: PathBuf,
    /// Matrix file (defaults to DATA_DIR/matrix.odn, built in memory when absent).
    #[arg(long, global = true)]
    pub matrix: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Universe and rule-space statistics, or full listings.
    Enumerate {
        #[arg(long)]
        stats: bool,
        /// Print every rule in canonical order.
        #[arg(long, conflicts_with = "structures")]
        rules: bool,
        /// Print every structure in index order.
        #[arg(long)]
        structures: bool,
    },
    /// Build, inspect or export the semantic matrix.
    Matrix {
        #[command(subcommand)]
        action: MatrixAction,
    },
    /// Generate train/test splits.
    Dataset {
        #[command(subcommand)]
        action: DatasetAction,
    },
    /// Solve games and write a predictions file.
    Solve(SolveArgs),
    /// Score a predictions file against its games.
    Score {
        #[arg(long)]
        games: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        /// Emit the report as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Cumulative fraction of games whose secret is found within t conjectures, as CSV.
    Curve(CurveArgs),
    /// Run the game-master HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Directory of static files to serve at `/`.
        #[arg(long)]
        static_dir: Option<PathBuf>,
        /// Keep sessions in memory only.
        #[arg(long)]
        no_log: bool,
    },
    /// Serve the built-in uniform sampler and interpreter over stdio.
    #[command(hide = true)]
    Plugin,
}

#[derive(Debug, Subcommand)]
pub enum MatrixAction {
    /// Build the matrix and save it.
    Build {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Equivalence-class census and weight ranges.
    Stats {
        #[arg(long)]
        json: bool,
    },
    /// Write the census and weight CSVs into a directory.
    Export {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum DatasetAction {
    /// Generate a split into OUT/{train,test}.jsonl and OUT/meta.json.
    Gen {
        #[arg(long, default_value_t = 1438)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        m: usize,
        #[arg(long, default_value_t = 32)]
        k: usize,
        #[arg(long, default_value_t = 1132)]
        s: usize,
        #[arg(long, default_value_t = 1176)]
        l: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverKind {
    Exhaustive,
    Crn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Best,
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Generator {
    Uniform,
    Enumeration,
    Oracle,
}

#[derive(Debug, Args)]
pub struct PluginArgs {
    /// Conjecture generator command, run through `sh -c`.
    #[arg(long)]
    pub plugin: Option<String>,
    /// Built-in generator used when no plugin is given.
    #[arg(long, value_enum, default_value_t = Generator::Uniform)]
    pub generator: Generator,
    /// Interpreter plugin command; the hard-coded interpreter otherwise.
    #[arg(long)]
    pub interpreter_plugin: Option<String>,
    /// Seconds to wait for each plugin line.
    #[arg(long, default_value_t = 30)]
    pub plugin_timeout: u64,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, value_enum, default_value_t = SolverKind::Crn)]
    pub solver: SolverKind,
    #[arg(long, default_value_t = 300)]
    pub t: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Best)]
    pub mode: ModeArg,
    #[arg(long)]
    pub games: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub plugins: PluginArgs,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long)]
    pub games: PathBuf,
    #[arg(long, default_value_t = 300)]
    pub t_max: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub plugins: PluginArgs,
}

/// Runs a parsed command line, writing normal output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        // Ignore the error if a pool already exists (repeated in-process runs).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let ctx = Context { seed: cli.seed, data_dir: cli.data_dir, matrix: cli.matrix };
    match cli.command {
        Command::Enumerate { stats, rules, structures } => enumerate(stats, rules, structures, out),
        Command::Matrix { action } => matrix(&ctx, action, out),
        Command::Dataset { action: DatasetAction::Gen { n, m, k, s, l, out: dir } } => {
            let cfg = SplitConfig { n, m, s, k, l, seed: ctx.seed };
            cfg.validate()?;
            let dir = dir.unwrap_or_else(|| ctx.data_dir.join("split"));
            let world = ctx.world()?;
            let split = generate_split(&cfg, &world)?;
            write_split(&split, &dir)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&split.meta)?)?;
            writeln!(out, "wrote {}", dir.display())?;
            Ok(())
        }
        Command::Solve(args) => solve(&ctx, args, out),
        Command::Score { games, predictions, json } => {
            let games = load_games_checked(&games)?;
            let predictions = load_predictions(&predictions)?;
            let report = score_run(&games, &predictions, &ctx.world()?)?;
            write_report(&report, json, out)
        }
        Command::Curve(args) => curve(&ctx, args, out),
        Command::Serve { port, host, static_dir, no_log } => {
            let log_dir = (!no_log).then(|| ctx.data_dir.join("sessions"));
            server::serve(server::ServeOptions { host, port, static_dir, log_dir, seed: ctx.seed })
        }
        Command::Plugin => serve_plugin(),
    }
}

struct Context {
    seed: u64,
    data_dir: PathBuf,
    matrix: Option<PathBuf>,
}

impl Context {
    fn matrix_path(&self) -> PathBuf {
        self.matrix.clone().unwrap_or_else(|| self.data_dir.join(MATRIX_FILE))
    }

    /// Loads the saved matrix, or builds one in memory when none is saved.
    fn world(&self) -> Result<World, CliError> {
        let path = self.matrix_path();
        if path.exists() {
            Ok(World::new(load_matrix(&path)?))
        } else if self.matrix.is_some() {
            Err(CliError::Data(format!("matrix file {} not found", path.display())))
        } else {
            eprintln!("no matrix at {}; building in memory", path.display());
            Ok(World::new(build_matrix()))
        }
    }
}

/// The text printed by `enumerate --stats`.
pub fn stats_report() -> String {
    let counts = RuleCounts::current();
    let total = counts.total();
    let rows = [
        ("structures", STRUCTURE_COUNT.to_string()),
        ("simple rules", counts.simple.to_string()),
        ("relational rules", counts.relational.to_string()),
        ("conjunction rules", counts.conjunction.to_string()),
        ("rules (derived)", total.to_string()),
        ("rules (reported)", REPORTED_RULE_COUNT.to_string()),
        ("discrepancy", (REPORTED_RULE_COUNT as i64 - total as i64).to_string()),
    ];
    let mut text = String::new();
    for (key, value) in rows {
        text.push_str(&format!("{key:<18} {value:>7}\n"));
    }
    if total != REPORTED_RULE_COUNT {
        text.push_str(
            "note: the derived total follows the printed grammar; the reported total \
             equals a grammar with a fourth relation (build with feature left-of-relation)\n",
        );
    }
    text
}

fn enumerate(stats: bool, rules: bool, structures: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let mut out = BufWriter::new(out);
    if rules {
        for rule in enumerate_rules() {
            writeln!(out, "{}", rule.render())?;
        }
    }
    if structures {
        for s in odeen_core::enumerate_universe() {
            writeln!(out, "{s}")?;
        }
    }
    if stats || !(rules || structures) {
        write!(out, "{}", stats_report())?;
    }
    out.flush()?;
    Ok(())
}

/// Census text, with the observed column band next to the reported one.
pub fn census_report(c: &MatrixCensus) -> String {
    let (lo, hi) = REPORTED_COLUMN_BAND;
    let inside = c.min_column_weight >= lo && c.max_column_weight <= hi;
    format!(
        "rules              {}\nstructures         {}\nclasses            {}\nsingleton classes  {}\n\
         largest class      {}\nall-false rules    {}\nall-true rules     {}\n\
         column weight      min {} / max {} / mean {:.1}\nreported band      {lo}..{hi} ({})\n",
        c.rule_count,
        c.structure_count,
        c.class_count,
        c.singleton_classes,
        c.largest_class,
        c.all_false_rules,
        c.all_true_rules,
        c.min_column_weight,
        c.max_column_weight,
        c.mean_column_weight,
        if inside { "inside" } else { "observed range differs" },
    )
}

fn matrix(ctx: &Context, action: MatrixAction, out: &mut dyn Write) -> Result<(), CliError> {
    match action {
        MatrixAction::Build { out: path } => {
            let path = path.unwrap_or_else(|| ctx.matrix_path());
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            let m = build_matrix();
            save_matrix(&m, &path)?;
            writeln!(out, "wrote {} ({} rules x {} structures)", path.display(), m.rule_count(), m.structure_count())?;
            Ok(())
        }
        MatrixAction::Stats { json } => {
            let world = ctx.world()?;
            let c = census(world.matrix(), world.classes(), &row_weights(world.matrix()), &column_weights(world.matrix()));
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&c)?)?;
            } else {
                write!(out, "{}", census_report(&c))?;
            }
            Ok(())
        }
        MatrixAction::Export { out: dir } => {
            std::fs::create_dir_all(&dir)?;
            let world = ctx.world()?;
            let rows = row_weights(world.matrix());
            let columns = column_weights(world.matrix());
            let c = census(world.matrix(), world.classes(), &rows, &columns);
            write_rule_weights_csv(&rows, BufWriter::new(File::create(dir.join("rule_weights.csv"))?))?;
            write_structure_weights_csv(&columns, BufWriter::new(File::create(dir.join("structure_weights.csv"))?))?;
            let mut classes = BufWriter::new(File::create(dir.join("classes.jsonl"))?);
            for class in world.classes().classes() {
                let members: Vec<String> = class.members.iter().map(|r| r.rule().render()).collect();
                serde_json::to_writer(&mut classes, &serde_json::json!({
                    "representative": class.representative.get(),
                    "members": members,
                }))?;
                classes.write_all(b"\n")?;
            }
            classes.flush()?;
            std::fs::write(dir.join("census.json"), serde_json::to_string_pretty(&c)? + "\n")?;
            write!(out, "{}", census_report(&c))?;
            writeln!(out, "wrote {}", dir.display())?;
            Ok(())
        }
    }
}

fn load_predictions(path: &Path) -> Result<Vec<PredictionRecord>, CliError> {
    let file = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(
            serde_json::from_str(&line)
                .map_err(|e| CliError::Data(format!("{} line {}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(records)
}

fn write_report(report: &MetricsReport, json: bool, out: &mut dyn Write) -> Result<(), CliError> {
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(report)?)?;
    } else {
        write!(out, "{report}")?;
    }
    Ok(())
}

fn load_games_checked(path: &Path) -> Result<Vec<Game>, CliError> {
    load_games(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn source(args: &PluginArgs, games: &[Game]) -> Result<Box<dyn ConjectureSource>, CliError> {
    Ok(match &args.plugin {
        Some(cmd) => Box::new(PluginProcess::spawn(cmd, Duration::from_secs(args.plugin_timeout))?),
        None => match args.generator {
            Generator::Uniform => Box::new(UniformSampler),
            Generator::Enumeration => Box::new(EnumerationSource),
            Generator::Oracle => Box::new(OracleSource::from_games(games)),
        },
    })
}

fn solve(ctx: &Context, args: SolveArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if args.t == 0 {
        return Err(CliError::Usage("--t must be positive".into()));
    }
    let games = load_games_checked(&args.games)?;
    let world = ctx.world()?;
    let mut records = Vec::with_capacity(games.len());
    match args.solver {
        SolverKind::Exhaustive => {
            for g in &games {
                records.push(exhaustive_solve(g, &world).record(&g.game_id));
            }
        }
        SolverKind::Crn => {
            let cfg = SolverConfig {
                t: args.t,
                mode: match args.mode {
                    ModeArg::Best => Mode::BestHitRate,
                    ModeArg::Strict => Mode::Strict,
                },
                ..Default::default()
            };
            let mut source = source(&args.plugins, &games)?;
            let mut interpreter: Box<dyn RuleInterpreter + '_> = match &args.plugins.interpreter_plugin {
                Some(cmd) => Box::new(PluginProcess::spawn(cmd, Duration::from_secs(args.plugins.plugin_timeout))?),
                None => Box::new(MatrixInterpreter { world: &world }),
            };
            for g in &games {
                let p = crn_solve(g, source.as_mut(), interpreter.as_mut(), &cfg, game_seed(ctx.seed, g))?;
                records.push(p.record(&g.game_id));
            }
        }
    }
    let mut file = BufWriter::new(File::create(&args.out)?);
    for r in &records {
        serde_json::to_writer(&mut file, r)?;
        file.write_all(b"\n")?;
    }
    file.flush()?;
    let unknown = records.iter().filter(|r| r.tags.is_none()).count();
    writeln!(out, "wrote {} predictions ({unknown} unknown) to {}", records.len(), args.out.display())?;
    Ok(())
}

fn curve(ctx: &Context, args: CurveArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let games = load_games_checked(&args.games)?;
    let world = ctx.world()?;
    let mut source = source(&args.plugins, &games)?;
    let curve = cumulative_discovery_curve(&games, source.as_mut(), &world, args.t_max, ctx.seed)?;
    let mut text = String::from("t,discovered\n");
    for (t, v) in curve.iter().enumerate() {
        text.push_str(&format!("{},{v:.6}\n", t + 1));
    }
    match args.out {
        Some(path) => {
            std::fs::write(&path, text)?;
            writeln!(out, "wrote {}", path.display())?;
        }
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn serve_plugin() -> Result<(), CliError> {
    let stdin = io::stdin().lock();
    let stdout = io::stdout().lock();
    let mut sampler = UniformSampler;
    let mut interpreter = HardCodedInterpreter::default();
    plugin::serve("odeen-uniform", Some(&mut sampler), Some(&mut interpreter), stdin, stdout)?;
    Ok(())
}
