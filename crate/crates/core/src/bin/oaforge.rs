use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use oaforge::anneal::{odd_run_design, ordinary_sa, run_fsa_kd, seeded_rng, srs_design, AnnealConfig, TraceRecord, UpdateMode};
use oaforge::bench::{rows_to_csv, run_bench_with_jobs, summary_table, BenchMethod, BenchSpec, Budget};
use oaforge::criteria::{summarize, Design};
use oaforge::io::{parse_design, write_design, DesignMeta, MetricsReport};
use oaforge::surrogate::{run_bo_reps, BoConfig, InitMode, TspInstance};

/// Fixed seed of the demo travelling-salesman instance.
const DEMO_INSTANCE_SEED: u64 = 20_240_601;

#[derive(Parser)]
#[command(name = "oaforge", version, about = "Space-filling order-of-addition designs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a design and report its criteria.
    Construct(ConstructArgs),
    /// Report the criteria of a design file.
    Evaluate(EvaluateArgs),
    /// Compare search methods under a common budget.
    Bench(BenchArgs),
    /// Bayesian optimization of a random Euclidean tour.
    BoDemo(BoArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    FsaKd,
    Srs,
    OrdinarySa,
    Odd,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::FsaKd => "fsa-kd",
            Method::Srs => "srs",
            Method::OrdinarySa => "ordinary-sa",
            Method::Odd => "odd",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Incremental,
    Full,
}

#[derive(Args)]
struct ConstructArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Method::FsaKd)]
    method: Method,
    /// Design file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Metrics report; standard output, or standard error when the design
    /// goes to standard output.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Search trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    t_min: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    max_iter: Option<u64>,
    #[arg(long, value_enum, default_value_t = Mode::Incremental)]
    update_mode: Mode,
    /// Wall-clock cap on the search, in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Include elapsed_seconds in the report (makes it run-dependent).
    #[arg(long)]
    record_time: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Defaults to the file's lambda, else 0.5.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "6,8,10")]
    m_list: Vec<usize>,
    /// Run sizes; `<k>m` means k times m.
    #[arg(long, value_delimiter = ',', default_value = "1m,2m,3m,4m")]
    n_list: Vec<String>,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    /// `updates:N` or `seconds:S`.
    #[arg(long, default_value = "updates:1200")]
    budget: String,
    #[arg(long, value_delimiter = ',', default_value = "ordinary-sa,foldover-full,foldover-incremental")]
    methods: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    /// Results CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-method means; standard error when omitted.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long, env = "OAFORGE_JOBS", default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct BoArgs {
    #[arg(long, default_value_t = 10)]
    m: usize,
    #[arg(long, default_value_t = 20)]
    n_init: usize,
    #[arg(long, default_value_t = 60)]
    n_seq: usize,
    #[arg(long, default_value = "fsa-kd")]
    init: String,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    /// Cost matrix file; a seeded random Euclidean instance when omitted.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long, default_value_t = DEMO_INSTANCE_SEED)]
    instance_seed: u64,
    /// Trace CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Mean best-so-far curve; standard error when omitted.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long, env = "OAFORGE_JOBS", default_value_t = 1)]
    jobs: usize,
}

#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug)]
struct InputError(String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    if err.downcast_ref::<InputError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<oaforge::Error>() {
        Some(oaforge::Error::Infeasible(_) | oaforge::Error::Parse { .. }) => 2,
        Some(
            oaforge::Error::Domain(_)
            | oaforge::Error::Dimension { .. }
            | oaforge::Error::InvalidPermutation(_)
            | oaforge::Error::InvalidHalf { .. },
        ) => 1,
        _ => 3,
    }
}

fn read_input(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| InputError(format!("cannot read {}: {e}", path.display())).into())
}

fn write_output(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn anneal_config(args: &ConstructArgs) -> AnnealConfig {
    let mut cfg = AnnealConfig::new(args.m, args.n, args.seed);
    cfg.lambda = args.lambda;
    if let Some(t0) = args.t0 {
        cfg.t0 = t0;
    }
    if let Some(t_min) = args.t_min {
        cfg.t_min = t_min;
    }
    if let Some(alpha) = args.alpha {
        cfg.alpha = alpha;
    }
    if let Some(k) = args.max_iter {
        cfg.max_iterations = k;
    }
    cfg.update_mode = match args.update_mode {
        Mode::Incremental => UpdateMode::Incremental,
        Mode::Full => UpdateMode::Full,
    };
    cfg.time_limit = args.time_limit.map(Duration::from_secs_f64);
    cfg.record_trace = args.trace.is_some();
    cfg
}

fn trace_csv(trace: &[TraceRecord]) -> String {
    let mut out = String::from("iteration,temperature,phi,best_phi,best_k_min\n");
    for t in trace {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            t.iteration, t.temperature, t.phi, t.best_phi, t.best_k_min
        );
    }
    out
}

fn construct(args: ConstructArgs) -> Result<()> {
    if !(0.0..=1.0).contains(&args.lambda) {
        return Err(usage(format!("--lambda must lie in [0, 1], got {}", args.lambda)));
    }
    match args.method {
        Method::FsaKd if args.n % 2 != 0 => {
            return Err(usage(format!("fsa-kd needs an even --n, got {}; try --method odd", args.n)))
        }
        Method::Odd if args.n % 2 == 0 => {
            return Err(usage(format!("odd needs an odd --n, got {}; try --method fsa-kd", args.n)))
        }
        _ => {}
    }
    let start = Instant::now();
    let cfg = anneal_config(&args);
    let mut rng = seeded_rng(args.seed);
    let (design, updates, trace): (Design, Option<u64>, Vec<TraceRecord>) = match args.method {
        Method::FsaKd => {
            let out = run_fsa_kd(&cfg, &mut rng)?;
            (out.design, Some(out.stats.updates), out.trace)
        }
        Method::OrdinarySa => {
            let out = ordinary_sa(&cfg, &mut rng)?;
            (out.design, Some(out.stats.updates), out.trace)
        }
        Method::Odd => {
            let out = odd_run_design(&cfg, &mut rng)?;
            log::info!("deleted row {} of the {}-run parent", out.deleted_row, args.n + 1);
            (out.design, Some(out.parent.stats.updates), out.parent.trace)
        }
        Method::Srs => (srs_design(args.n, args.m, &mut rng)?, None, Vec::new()),
    };
    let meta = DesignMeta {
        seed: Some(args.seed),
        method: Some(args.method.name().to_string()),
        lambda: Some(args.lambda),
    };
    let summary = summarize(&design, args.lambda)?;
    let mut report = MetricsReport::from_summary(&design, &summary, &meta, args.lambda);
    report.update_count = updates;
    if args.record_time {
        report.elapsed_seconds = Some(start.elapsed().as_secs_f64());
    }

    let design_text = write_design(&design, &meta);
    let report_text = report.to_json();
    match &args.out {
        Some(path) => write_output(path, &design_text)?,
        None => print!("{design_text}"),
    }
    match (&args.report, &args.out) {
        (Some(path), _) => write_output(path, &report_text)?,
        (None, Some(_)) => print!("{report_text}"),
        (None, None) => eprint!("{report_text}"),
    }
    if let Some(path) = &args.trace {
        write_output(path, &trace_csv(&trace))?;
    }
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let file = parse_design(&read_input(&args.input)?)?;
    let lambda = args.lambda.or(file.meta.lambda).unwrap_or(0.5);
    if !(0.0..=1.0).contains(&lambda) {
        return Err(usage(format!("--lambda must lie in [0, 1], got {lambda}")));
    }
    let report = MetricsReport::new(&file.design, &file.meta, lambda)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    let text = report.to_json();
    match &args.out {
        Some(path) => write_output(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_n(entry: &str, m: usize) -> Result<usize> {
    let entry = entry.trim();
    let parsed = match entry.strip_suffix('m') {
        Some(k) => k.parse::<usize>().map(|k| k * m),
        None => entry.parse(),
    };
    parsed.map_err(|_| usage(format!("bad run size {entry:?} in --n-list")))
}

fn bench(args: BenchArgs) -> Result<()> {
    let budget: Budget = args.budget.parse().map_err(|e: oaforge::Error| usage(e.to_string()))?;
    let methods = args
        .methods
        .iter()
        .map(|s| s.parse::<BenchMethod>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| usage(e.to_string()))?;
    if args.reps == 0 || args.m_list.is_empty() {
        return Err(usage("need at least one rep and one m"));
    }
    let mut rows = Vec::new();
    for &m in &args.m_list {
        let n_list = args
            .n_list
            .iter()
            .map(|e| parse_n(e, m))
            .collect::<Result<Vec<_>>>()?;
        let spec = BenchSpec {
            m_list: vec![m],
            n_list,
            methods: methods.clone(),
            reps: args.reps,
            budget,
            seed: args.seed,
            lambda: args.lambda,
        };
        rows.extend(run_bench_with_jobs(&spec, args.jobs)?);
    }
    rows.sort_by_key(|r| (r.m, r.n, r.method, r.rep));
    let csv = rows_to_csv(&rows);
    let summary = summary_table(&rows);
    match &args.out {
        Some(path) => write_output(path, &csv)?,
        None => print!("{csv}"),
    }
    match &args.summary {
        Some(path) => write_output(path, &summary)?,
        None => eprint!("{summary}"),
    }
    Ok(())
}

fn bo_demo(args: BoArgs) -> Result<()> {
    let init: InitMode = args.init.parse().map_err(|e: oaforge::Error| usage(e.to_string()))?;
    let instance = match &args.instance {
        Some(path) => TspInstance::from_csv(&read_input(path)?)?,
        None => TspInstance::random_euclidean(args.m, &mut seeded_rng(args.instance_seed))?,
    };
    if instance.m() != args.m {
        return Err(usage(format!(
            "instance has {} cities but --m is {}",
            instance.m(),
            args.m
        )));
    }
    let cfg = BoConfig {
        n_init: args.n_init,
        n_seq: args.n_seq,
        restarts: args.restarts,
        ..BoConfig::new(instance, init, args.seed)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.max(1))
        .build()
        .context("cannot start worker pool")?;
    let traces = pool.install(|| run_bo_reps(&cfg, args.reps))?;

    let mut csv = String::from("rep,iteration,best_so_far\n");
    for (rep, t) in traces.iter().enumerate() {
        for (i, v) in t.best_so_far.iter().enumerate() {
            let _ = writeln!(csv, "{rep},{},{v}", i + 1);
        }
    }
    let len = cfg.n_init + cfg.n_seq;
    let mut summary = format!("# init={init} reps={} n_init={}\niteration,mean_best_so_far\n", args.reps, cfg.n_init);
    for i in 0..len {
        let mean = traces.iter().map(|t| t.best_so_far[i]).sum::<f64>() / traces.len().max(1) as f64;
        let _ = writeln!(summary, "{},{mean}", i + 1);
    }
    match &args.out {
        Some(path) => write_output(path, &csv)?,
        None => print!("{csv}"),
    }
    match &args.summary {
        Some(path) => write_output(path, &summary)?,
        None => eprint!("{summary}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Construct(a) => construct(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Bench(a) => bench(a),
        Command::BoDemo(a) => bo_demo(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
