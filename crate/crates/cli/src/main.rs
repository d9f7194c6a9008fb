//! `causal-classify`: generate data, discover PA(Y), train and apply the
//! two-model effect classifier, and evaluate it.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use config::{set, set_opt, ClassifierKind, DiscoverConfig, EvalConfig, GenerateConfig, PredictConfig, QiniConfig, TrainConfig};
use error::CliError;

#[derive(Parser)]
#[command(name = "causal-classify", version, about = "Causal classification from tabular data")]
struct Cli {
    /// JSON file overriding the defaults; flags override it in turn.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic benchmark or a BIF network to CSV.
    Generate(GenerateArgs),
    /// Find the parents and children of a target column.
    Discover(DiscoverArgs),
    /// Fit the treated and control outcome models.
    Train(TrainArgs),
    /// Estimate per-row effects with a trained model.
    Predict(PredictArgs),
    /// Score predictions against ground truth or observed outcomes.
    Eval(EvalArgs),
    /// Cross-validated Qini curves.
    Qini(QiniArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupArg {
    Group1,
    Group2,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassifierArg {
    Logistic,
    Forest,
}

#[derive(Args)]
struct DataArgs {
    /// Input CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Schema sidecar; defaults to `<stem>.schema.json` beside the data.
    #[arg(long)]
    schema: Option<PathBuf>,
}

impl DataArgs {
    fn overlay(&self, m: &mut Map<String, Value>) {
        set_opt(m, "input.data", self.data.as_ref());
        set_opt(m, "input.schema", self.schema.as_ref());
    }
}

#[derive(Args)]
struct RoleArgs {
    /// Treatment column; defaults to the schema's treatment role.
    #[arg(long)]
    treatment: Option<String>,
    /// Outcome column; defaults to the schema's outcome role.
    #[arg(long)]
    outcome: Option<String>,
}

impl RoleArgs {
    fn overlay(&self, m: &mut Map<String, Value>) {
        set_opt(m, "treatment", self.treatment.as_ref());
        set_opt(m, "outcome", self.outcome.as_ref());
    }
}

#[derive(Args)]
struct DiscoveryArgs {
    /// Significance level of the conditional independence tests.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    max_cond_size: Option<usize>,
    /// Equal-frequency bins for continuous columns.
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    candidate_cap: Option<usize>,
    /// Skip the symmetry correction.
    #[arg(long)]
    no_symmetry: bool,
}

impl DiscoveryArgs {
    fn overlay(&self, m: &mut Map<String, Value>) {
        set_opt(m, "discovery.alpha", self.alpha);
        set_opt(m, "discovery.max_cond_size", self.max_cond_size);
        set_opt(m, "discovery.bins", self.bins);
        set_opt(m, "discovery.candidate_cap", self.candidate_cap);
        if self.no_symmetry {
            set(m, "discovery.symmetric", false);
        }
    }
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, value_enum)]
    classifier: Option<ClassifierArg>,
    /// Forest seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_trees: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    min_leaf: Option<usize>,
    /// Features tried per split; default round(sqrt(width)).
    #[arg(long)]
    feature_subsample: Option<usize>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    l2_penalty: Option<f64>,
    #[arg(long)]
    convergence_tol: Option<f64>,
}

impl ModelArgs {
    fn overlay(&self, m: &mut Map<String, Value>) {
        set_opt(
            m,
            "model.classifier",
            self.classifier.map(|c| match c {
                ClassifierArg::Logistic => ClassifierKind::Logistic,
                ClassifierArg::Forest => ClassifierKind::Forest,
            }),
        );
        set_opt(m, "model.seed", self.seed);
        set_opt(m, "model.n_trees", self.n_trees);
        set_opt(m, "model.max_depth", self.max_depth);
        set_opt(m, "model.min_leaf", self.min_leaf);
        set_opt(m, "model.feature_subsample", self.feature_subsample);
        set_opt(m, "model.max_iterations", self.max_iterations);
        set_opt(m, "model.l2_penalty", self.l2_penalty);
        set_opt(m, "model.convergence_tol", self.convergence_tol);
    }
}

#[derive(Args)]
struct ParentArgs {
    /// Comma-separated PA(Y); skips discovery.
    #[arg(long, value_delimiter = ',')]
    parents: Option<Vec<String>>,
    /// JSON list of parents, or a `discover` output.
    #[arg(long)]
    parents_file: Option<PathBuf>,
}

impl ParentArgs {
    fn overlay(&self, m: &mut Map<String, Value>) {
        set_opt(m, "parents", self.parents.as_ref());
        set_opt(m, "parents_file", self.parents_file.as_ref());
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    group: Option<GroupArg>,
    /// Sample this BIF network instead.
    #[arg(long)]
    bif: Option<PathBuf>,
    #[arg(long, short = 'n')]
    n_samples: Option<usize>,
    #[arg(long)]
    n_noise_vars: Option<usize>,
    #[arg(long)]
    continuous_fraction: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also write train/test files holding this leading share of rows.
    #[arg(long)]
    split: Option<f64>,
}

#[derive(Args)]
struct DiscoverArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Target column; defaults to the outcome.
    #[arg(long)]
    target: Option<String>,
    #[command(flatten)]
    discovery: DiscoveryArgs,
    /// Include every conditional independence test in the output.
    #[arg(long)]
    explain: bool,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    roles: RoleArgs,
    #[command(flatten)]
    parents: ParentArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    discovery: DiscoveryArgs,
    /// Model file to write.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    /// Assign treatment when the effect exceeds this.
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Output of `predict`.
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Ground-truth CSV written by `generate`.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    roles: RoleArgs,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    n_points: Option<usize>,
    /// Write the Qini curve here.
    #[arg(long)]
    curve_out: Option<PathBuf>,
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Cross-validate on --data with this many folds instead.
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    fold_seed: Option<u64>,
    #[command(flatten)]
    parents: ParentArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    discovery: DiscoveryArgs,
    /// Directory for per-fold curves in cross-validated mode.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct QiniArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    roles: RoleArgs,
    #[command(flatten)]
    parents: ParentArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    discovery: DiscoveryArgs,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    fold_seed: Option<u64>,
    #[arg(long)]
    n_points: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = cli.config.as_deref();
    let mut m = Map::new();
    match cli.command {
        Command::Generate(a) => {
            set_opt(&mut m, "out_dir", a.out_dir);
            set_opt(
                &mut m,
                "group",
                a.group.map(|g| match g {
                    GroupArg::Group1 => "group1",
                    GroupArg::Group2 => "group2",
                }),
            );
            set_opt(&mut m, "bif", a.bif);
            set_opt(&mut m, "n_samples", a.n_samples);
            set_opt(&mut m, "n_noise_vars", a.n_noise_vars);
            set_opt(&mut m, "continuous_fraction", a.continuous_fraction);
            set_opt(&mut m, "seed", a.seed);
            set_opt(&mut m, "split", a.split);
            commands::generate(&config::resolve::<GenerateConfig>("generate", file, m)?)
        }
        Command::Discover(a) => {
            a.data.overlay(&mut m);
            set_opt(&mut m, "target", a.target);
            a.discovery.overlay(&mut m);
            if a.explain {
                set(&mut m, "explain", true);
            }
            set_opt(&mut m, "out", a.out);
            commands::discover_cmd(&config::resolve::<DiscoverConfig>("discover", file, m)?)
        }
        Command::Train(a) => {
            a.data.overlay(&mut m);
            a.roles.overlay(&mut m);
            a.parents.overlay(&mut m);
            a.model.overlay(&mut m);
            a.discovery.overlay(&mut m);
            set_opt(&mut m, "out", a.out);
            commands::train(&config::resolve::<TrainConfig>("train", file, m)?)
        }
        Command::Predict(a) => {
            set_opt(&mut m, "model_file", a.model);
            a.data.overlay(&mut m);
            set_opt(&mut m, "theta", a.theta);
            set_opt(&mut m, "out", a.out);
            commands::predict(&config::resolve::<PredictConfig>("predict", file, m)?)
        }
        Command::Eval(a) => {
            set_opt(&mut m, "predictions", a.predictions);
            set_opt(&mut m, "truth", a.truth);
            a.data.overlay(&mut m);
            a.roles.overlay(&mut m);
            set_opt(&mut m, "theta", a.theta);
            set_opt(&mut m, "n_points", a.n_points);
            set_opt(&mut m, "curve_out", a.curve_out);
            set_opt(&mut m, "out", a.out);
            set_opt(&mut m, "folds", a.folds);
            set_opt(&mut m, "fold_seed", a.fold_seed);
            a.parents.overlay(&mut m);
            a.model.overlay(&mut m);
            a.discovery.overlay(&mut m);
            set_opt(&mut m, "out_dir", a.out_dir);
            commands::eval(&config::resolve::<EvalConfig>("eval", file, m)?)
        }
        Command::Qini(a) => {
            a.data.overlay(&mut m);
            a.roles.overlay(&mut m);
            a.parents.overlay(&mut m);
            a.model.overlay(&mut m);
            a.discovery.overlay(&mut m);
            set_opt(&mut m, "folds", a.folds);
            set_opt(&mut m, "fold_seed", a.fold_seed);
            set_opt(&mut m, "n_points", a.n_points);
            set_opt(&mut m, "out_dir", a.out_dir);
            commands::cross_validate(&config::resolve::<QiniConfig>("qini", file, m)?, "qini")
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => ExitCode::from(1),
    }
}
