use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use probcov::aggregate::MergePolicy;
use probcov::bench::{run_benchmark, BenchConfig};
use probcov::coverage::{evaluate, Method, Options};
use probcov::sentence::label_sentence;
use probcov::{expand, Error, ExecModel, Goal, MdpModel, Trace, DEFAULT_PATH_CAP};

/// Probability that a test run covers a goal on a non-deterministic model.
#[derive(Parser)]
#[command(name = "probcov", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a model is well formed.
    Validate {
        /// Model file.
        #[arg(long)]
        model: PathBuf,
    },
    /// Print the probability that a trace covers a goal.
    Coverage(CoverageArgs),
    /// Dump the execution model of a trace.
    Inspect {
        /// Model file.
        #[arg(long)]
        model: PathBuf,
        /// Space separated actions.
        #[arg(long)]
        trace: String,
        /// Expand to windows of this length first.
        #[arg(long)]
        expand: Option<usize>,
        /// Also dump the node labels of this sentence goal.
        #[arg(long)]
        goal: Option<String>,
    },
    /// Run the scalable benchmark family.
    Bench(BenchArgs),
}

#[derive(Args)]
struct CoverageArgs {
    /// Model file.
    #[arg(long)]
    model: PathBuf,
    /// Space separated actions, e.g. "a b a".
    #[arg(long)]
    trace: String,
    /// Sentence such as "<1> ; <2,3>" or aggregate "^k>=N".
    #[arg(long)]
    goal: String,
    /// label, brute or mc.
    #[arg(long, default_value = "label")]
    method: Method,
    /// Aggregate merge policy: always, never or bridge.
    #[arg(long, default_value = "bridge")]
    merge_policy: MergePolicy,
    /// Monte-Carlo sample count.
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    /// Monte-Carlo seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Maximum number of paths brute force may enumerate.
    #[arg(long, default_value_t = DEFAULT_PATH_CAP)]
    paths_cap: u128,
}

#[derive(Args)]
struct BenchArgs {
    /// Numbers of auxiliary states.
    #[arg(long, value_delimiter = ',', default_value = "0,2,8")]
    ms: Vec<usize>,
    /// Trace sizes.
    #[arg(long, value_delimiter = ',', default_value = "5,6,7,8,9")]
    is: Vec<usize>,
    /// Benchmark goals f1 to f4.
    #[arg(long, value_delimiter = ',', default_value = "f1,f2,f3,f4")]
    goals: Vec<String>,
    /// Merge policies for aggregate goals.
    #[arg(long = "merge-policy", value_delimiter = ',', default_value = "bridge")]
    policies: Vec<MergePolicy>,
    /// Timing repetitions; the median is reported.
    #[arg(long, default_value_t = 5)]
    repetitions: usize,
    /// Skip brute force above this many paths.
    #[arg(long, default_value_t = DEFAULT_PATH_CAP)]
    paths_cap: u128,
    /// Directory for the report files.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Invalid(String),
    Input(String),
    IllegalTrace(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::IllegalTrace { .. } => Failure::IllegalTrace(e.to_string()),
            Error::InvalidModel(_) => Failure::Invalid(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { model } => validate(&model),
        Command::Coverage(args) => coverage(args),
        Command::Inspect {
            model,
            trace,
            expand,
            goal,
        } => inspect(&model, &trace, expand, goal.as_deref()),
        Command::Bench(args) => bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::IllegalTrace(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn load_model(path: &Path) -> Result<MdpModel, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    MdpModel::parse(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn validate(path: &Path) -> Result<(), Failure> {
    let report = load_model(path)?.validate();
    if report.ok {
        emit("ok\n");
    }
    for v in &report.violations {
        emit(&format!("[{}] {}\n", v.rule, v.message));
    }
    if report.ok {
        Ok(())
    } else {
        Err(Failure::Invalid(format!("{} is not valid", path.display())))
    }
}

fn coverage(args: CoverageArgs) -> Result<(), Failure> {
    let model = load_model(&args.model)?;
    let trace = Trace::parse(&args.trace)?;
    let goal = Goal::parse(&args.goal)?;
    let e = ExecModel::build(&model, &trace)?;
    let opts = Options {
        method: args.method,
        policy: args.merge_policy,
        samples: args.samples,
        seed: args.seed,
        paths_cap: args.paths_cap,
    };
    let out = evaluate(&e, &goal, &opts)?;
    emit(&format!("{:.12}\n", out.probability));
    if let Some(se) = out.std_error {
        eprintln!("std_error {se:.12} samples {}", args.samples);
    }
    Ok(())
}

fn inspect(path: &Path, trace: &str, k: Option<usize>, goal: Option<&str>) -> Result<(), Failure> {
    let model = load_model(path)?;
    let mut e = ExecModel::build(&model, &Trace::parse(trace)?)?;
    if let Some(k) = k {
        e = expand(&e, k)?;
    }
    emit(&e.to_dot());
    emit(&format!("stats: {}\n", e.stats()));
    if let Some(goal) = goal {
        let goal = Goal::parse(goal)?;
        let Some(clauses) = goal.clauses() else {
            return Err(Failure::Input("label dump needs a sentence goal".into()));
        };
        emit(&label_sentence(&e, clauses)?.dump(&e, clauses));
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Result<(), Failure> {
    let cfg = BenchConfig {
        ms: args.ms,
        is: args.is,
        goals: args.goals,
        policies: args.policies,
        repetitions: args.repetitions,
        paths_cap: args.paths_cap,
    };
    if cfg.is.contains(&0) {
        return Err(Failure::Input("trace sizes must be positive".into()));
    }
    let report = run_benchmark(&cfg)?;
    emit(&report.to_table());
    if let Some(dir) = args.out {
        report
            .write_files(&dir)
            .map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
    }
    Ok(())
}
