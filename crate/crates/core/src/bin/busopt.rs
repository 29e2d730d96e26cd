use std::path::PathBuf;
use std::process::ExitCode;

use busopt::harness::{self, render_report, RunConfig, SweepParam, EXIT_USAGE};
use busopt::opt::Engine;
use busopt::sim::FirstStopDelay;
use busopt::synth::{generate, two_regime_benchmark, SynthSpec};
use busopt::{Error, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "busopt", version, about = "Bus timetable optimization against timepoint history")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Dataset root with gtfs/ and timepoints.csv.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    #[arg(long, global = true)]
    gtfs: Option<PathBuf>,
    #[arg(long, global = true)]
    records: Option<PathBuf>,
    /// Earliest on-time delay in seconds (not positive).
    #[arg(long, global = true, allow_hyphen_values = true)]
    window_early: Option<i64>,
    /// Latest on-time delay in seconds (not negative).
    #[arg(long, global = true)]
    window_late: Option<i64>,
    #[arg(long, global = true, value_enum)]
    engine: Option<Engine>,
    #[arg(long, global = true, overrides_with = "no_clusters")]
    clusters: bool,
    #[arg(long, global = true, overrides_with = "clusters")]
    no_clusters: bool,
    /// Largest number of month clusters tried.
    #[arg(long, global = true)]
    upper_limit: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    repeat: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    force: bool,
    /// Restrict to these trips.
    #[arg(long = "trip", global = true)]
    trips: Vec<String>,
    /// Which delay is scored at a trip's first timepoint.
    #[arg(long, global = true, value_enum)]
    first_stop: Option<FirstStopDelay>,
    /// Keep travel-time outliers.
    #[arg(long, global = true)]
    keep_outliers: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Parse inputs and report row-level problems.
    Ingest,
    /// Clean the history and write the cleaning report.
    Clean,
    /// Cluster each trip's months.
    Cluster,
    /// Optimize timetables with and without month clustering.
    Optimize,
    /// Sweep one engine hyper-parameter over a grid.
    Sweep {
        /// pop_size, crossover_rate, mutation_rate, swarm_size, w, c1 or c2.
        #[arg(long)]
        param: String,
        /// Comma-separated grid values.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<f64>,
    },
    /// Repeat runs per engine to measure run-to-run spread.
    Stability {
        #[arg(long, value_delimiter = ',', value_enum, default_values_t = [Engine::Ga, Engine::Pso])]
        engines: Vec<Engine>,
    },
    /// Write a synthetic dataset.
    Synth {
        /// JSON generator spec.
        #[arg(long, conflicts_with = "benchmark")]
        spec: Option<PathBuf>,
        /// Use the built-in two-regime benchmark.
        #[arg(long)]
        benchmark: bool,
        /// Slow-regime shift per segment in seconds, for --benchmark.
        #[arg(long, default_value_t = 180.0)]
        shift: f64,
    },
    /// Summarize a results directory into report.md.
    Report {
        /// Results directory; defaults to --out.
        dir: Option<PathBuf>,
    },
}

fn resolve(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_json_file(path)?,
        None => RunConfig::default(),
    };
    if common.data.is_some() {
        cfg.data = common.data.clone();
    }
    if common.gtfs.is_some() {
        cfg.gtfs = common.gtfs.clone();
    }
    if common.records.is_some() {
        cfg.records = common.records.clone();
    }
    if let Some(e) = common.window_early {
        cfg.window_early = e;
    }
    if let Some(l) = common.window_late {
        cfg.window_late = l;
    }
    if let Some(e) = common.engine {
        cfg.engine = e;
    }
    if common.clusters {
        cfg.clusters = true;
    }
    if common.no_clusters {
        cfg.clusters = false;
    }
    if let Some(u) = common.upper_limit {
        cfg.upper_limit = u;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(r) = common.repeat {
        cfg.repeat = r;
    }
    if let Some(j) = common.jobs {
        cfg.jobs = j;
    }
    if common.out.is_some() {
        cfg.out = common.out.clone();
    }
    if !common.trips.is_empty() {
        cfg.trips = common.trips.clone();
    }
    if let Some(f) = common.first_stop {
        cfg.first_stop = f;
    }
    if common.keep_outliers {
        cfg.remove_outliers = false;
    }
    Ok(cfg)
}

fn emit_json<T: serde::Serialize>(cfg: &RunConfig, file: &str, value: &T, force: bool) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match &cfg.out {
        Some(dir) => {
            let path = dir.join(file);
            if path.exists() && !force {
                return Err(Error::Argument(format!(
                    "{} already exists; pass --force to overwrite",
                    path.display()
                )));
            }
            std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.clone(), source: e })?;
            std::fs::write(&path, text).map_err(|e| Error::Io { path, source: e })
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = resolve(&cli.common)?;
    cfg.validate()?;
    let force = cli.common.force;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Argument(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Ingest => {
            let loaded = cfg.load()?;
            let summary = serde_json::json!({
                "patterns": loaded.feed.patterns.len(),
                "rejected_trips": loaded.feed.rejected.len(),
                "rows": loaded.ingest.rows,
                "row_errors": loaded.ingest.errors,
                "months": loaded.store.months(),
            });
            emit_json(&cfg, "ingest.json", &summary, force)
        }
        Command::Clean => {
            let loaded = cfg.load()?;
            emit_json(&cfg, "cleaning_report.json", &loaded.report, force)
        }
        Command::Cluster => {
            let loaded = cfg.load()?;
            let mut all = serde_json::Map::new();
            for trip in cfg.trip_ids(&loaded)? {
                let features = busopt::cluster::build_features(&loaded.store, &trip)?;
                let c = busopt::cluster::cluster_months(&features, &cfg.cluster_config(cfg.seed))?;
                all.insert(trip, serde_json::to_value(c.export())?);
            }
            emit_json(&cfg, "clustering.json", &all, force)
        }
        Command::Optimize => {
            let outputs = harness::optimize(&cfg, force)?;
            for r in outputs[0].summary.iter().filter(|r| r.trip_id == harness::pipeline::ALL_TRIPS) {
                println!("{:<24} {:.4}", r.variant, r.otp);
            }
            Ok(())
        }
        Command::Sweep { param, values } => {
            let param = SweepParam::parse(&param)?;
            let rows = harness::sweep(&cfg, param, &values, force)?;
            println!("{} rows written for {}", rows.len(), param.name());
            Ok(())
        }
        Command::Stability { engines } => {
            let cfg = RunConfig {
                repeat: cli.common.repeat.unwrap_or(if cli.common.config.is_some() { cfg.repeat } else { 10 }),
                ..cfg
            };
            harness::stability(&cfg, &engines, force)?;
            Ok(())
        }
        Command::Synth { spec, benchmark, shift } => {
            let spec = match (spec, benchmark) {
                (Some(path), _) => SynthSpec::from_json_file(path)?,
                (None, true) => two_regime_benchmark(cfg.seed, shift),
                (None, false) => return Err(Error::Argument("pass --spec FILE or --benchmark".into())),
            };
            let dir = cfg.out_dir()?;
            harness::prepare_out_dir(dir, force)?;
            let data = generate(&spec)?;
            data.write(dir)?;
            let text = serde_json::to_string_pretty(&spec)? + "\n";
            let path = dir.join("spec.json");
            std::fs::write(&path, text).map_err(|e| Error::Io { path, source: e })?;
            println!("{} records for {} trips", data.records.len(), data.patterns.len());
            Ok(())
        }
        Command::Report { dir } => {
            let dir = dir
                .or_else(|| cfg.out.clone())
                .ok_or_else(|| Error::Argument("pass a results directory".into()))?;
            let out = render_report(&dir, &dir)?;
            for (p, e) in &out.problems {
                eprintln!("warning: could not read {}: {e}", p.display());
            }
            println!("{}", dir.join(harness::report::REPORT_FILE).display());
            Ok(())
        }
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(harness::exit_code(&e) as u8)
        }
    }
}
