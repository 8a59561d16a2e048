use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use silif_core::dataset::{self, DatasetConfig};
use silif_core::harness::{self, DataSource, ExperimentConfig, Method, ResultsTable};
use silif_core::silif::{ScoreBasis, SilifFit};
use silif_core::{Dataset, KMeansMode, SilifModel};

#[derive(Parser)]
#[command(name = "silif", version, about = "Isolation Forest with a fingerprint silhouette layer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate methods over seeds and write report CSVs.
    Run(RunArgs),
    /// Sweep the SilIF weight alpha and compare each value to alpha = 0.
    Sweep(RunArgs),
    /// Fit a SilIF model and save it.
    Fit(FitArgs),
    /// Score a dataset with a saved model.
    Score(ScoreArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    IeeeCis,
    Sparkov,
}

#[derive(Args)]
struct DataArgs {
    /// CSV file to load.
    #[arg(long, conflicts_with = "synthetic")]
    data: Option<PathBuf>,
    /// Generated data as `normal,anomalies,dims`.
    #[arg(long, value_parser = parse_synthetic)]
    synthetic: Option<(usize, usize, usize)>,
    /// Column mapping for --data, as TOML.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in column mapping for --data.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Seed for generated data.
    #[arg(long, default_value_t = 42)]
    data_seed: u64,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, default_value_t = 100)]
    trees: usize,
    #[arg(long, default_value_t = 256)]
    subsample: usize,
    /// Number of fingerprint clusters.
    #[arg(long, default_value_t = 8)]
    k: usize,
    #[arg(long, default_value = "auto", value_parser = parse_mode)]
    kmeans_mode: KMeansMode,
    /// Silhouette weight.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    alpha: f64,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Comma-separated methods.
    #[arg(long, value_delimiter = ',', default_value = "iforest,silif,hbos,ecod,kmeans,lof,knn")]
    methods: Vec<Method>,
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,1,2,4")]
    alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "42,43,44,45,46")]
    seeds: Vec<u64>,
    /// Uniformly subsample this many rows after loading.
    #[arg(long)]
    subsample_rows: Option<usize>,
    /// Output directory for the report CSVs.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Where to write the model.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Basis {
    Batch,
    Training,
}

#[derive(Args)]
struct ScoreArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    model: PathBuf,
    /// Moments used to z-score the two signals.
    #[arg(long, value_enum, default_value = "batch")]
    basis: Basis,
    /// Output CSV (`row,score`).
    #[arg(long)]
    out: PathBuf,
}

fn parse_synthetic(s: &str) -> Result<(usize, usize, usize), String> {
    let parts: Vec<&str> = s.split(',').collect();
    let [n, a, d] = parts.as_slice() else {
        return Err("expected `normal,anomalies,dims`".into());
    };
    let num = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("`{x}`: {e}"));
    Ok((num(n)?, num(a)?, num(d)?))
}

fn parse_mode(s: &str) -> Result<KMeansMode, String> {
    s.parse().map_err(|e: silif_core::Error| e.to_string())
}

impl DataArgs {
    fn source(&self) -> Result<DataSource> {
        match (&self.data, self.synthetic) {
            (Some(path), None) => {
                let config = match (&self.config, self.preset) {
                    (Some(file), _) => DatasetConfig::from_file(file)?,
                    (None, Some(Preset::IeeeCis)) => DatasetConfig::ieee_cis(),
                    (None, Some(Preset::Sparkov)) => DatasetConfig::sparkov(),
                    (None, None) => bail!("--data needs --config or --preset"),
                };
                Ok(DataSource::Csv {
                    path: path.clone(),
                    config,
                })
            }
            (None, Some((n_normal, n_anomaly, dims))) => Ok(DataSource::Synthetic {
                n_normal,
                n_anomaly,
                dims,
                seed: self.data_seed,
            }),
            _ => bail!("give exactly one of --data or --synthetic"),
        }
    }

    fn load(&self) -> Result<Dataset> {
        Ok(match self.source()? {
            DataSource::Csv { path, config } => dataset::load_dataset(&path, &config)?,
            DataSource::Synthetic {
                n_normal,
                n_anomaly,
                dims,
                seed,
            } => dataset::generate_synthetic(n_normal, n_anomaly, dims, seed)?,
        })
    }
}

impl ModelArgs {
    fn apply(&self, params: &mut silif_core::SilifParams) {
        params.n_trees = self.trees;
        params.subsample = self.subsample;
        params.k = self.k;
        params.kmeans_mode = self.kmeans_mode;
        params.alpha = self.alpha;
    }
}

fn experiment(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::new(args.data.source()?);
    args.model.apply(&mut config.silif);
    config.methods = args.methods.clone();
    config.alphas = args.alphas.clone();
    config.seeds = args.seeds.clone();
    config.subsample_rows = args.subsample_rows;
    config.silif.validate()?;
    config.validate()?;
    Ok(config)
}

fn fmt_mean_std(v: Option<(f64, f64)>) -> String {
    v.map_or("-".into(), |(m, s)| format!("{m:.4} ± {s:.4}"))
}

fn print_summary(table: &ResultsTable) {
    println!("{:<8} {:>6} {:>18} {:>18}", "method", "alpha", "auc_roc", "auc_pr");
    for agg in table.aggregates() {
        let alpha = agg.alpha.map_or("-".into(), |a| a.to_string());
        println!(
            "{:<8} {:>6} {:>18} {:>18}",
            agg.method.name(),
            alpha,
            fmt_mean_std(agg.metrics[0]),
            fmt_mean_std(agg.metrics[1])
        );
    }
    for pc in &table.paired {
        println!(
            "{} vs {}: mean diff {:+.4}, t = {:.3}, p = {:.4}, wins {}",
            label(pc.method_a, pc.alpha_a),
            label(pc.method_b, pc.alpha_b),
            pc.mean_difference,
            pc.t,
            pc.p,
            pc.wins_label()
        );
    }
    let failed = table
        .rows
        .iter()
        .filter(|r| matches!(r.status, harness::RowStatus::Failed(_)))
        .count();
    if failed > 0 {
        log::warn!("{failed} rows failed; see results.csv");
    }
}

fn label(m: Method, alpha: Option<f64>) -> String {
    match alpha {
        Some(a) => format!("{}(alpha={a})", m.name()),
        None => m.name().to_string(),
    }
}

fn write_report(table: &ResultsTable, out: &Path) -> Result<()> {
    let files = harness::emit_report(table, out)
        .with_context(|| format!("writing reports to {}", out.display()))?;
    print_summary(table);
    println!("results written to {}", files.results.display());
    Ok(())
}

fn write_scores(path: &Path, scores: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["row", "score"])?;
    for (i, s) in scores.iter().enumerate() {
        w.write_record([i.to_string(), s.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let config = experiment(&args)?;
            write_report(&harness::run_experiment(&config)?, &args.out)
        }
        Command::Sweep(args) => {
            let config = experiment(&args)?;
            write_report(&harness::alpha_sweep(&config)?, &args.out)
        }
        Command::Fit(args) => {
            let data = args.data.load()?;
            let mut params = silif_core::SilifParams::default().with_seed(args.seed);
            args.model.apply(&mut params);
            let model = SilifFit::fit(&data, &params)?.into_model();
            model
                .save(&args.out)
                .with_context(|| format!("saving model to {}", args.out.display()))?;
            println!("model with {} rows written to {}", data.len(), args.out.display());
            Ok(())
        }
        Command::Score(args) => {
            let model = SilifModel::load(&args.model)
                .with_context(|| format!("loading model {}", args.model.display()))?;
            let data = args.data.load()?;
            let basis = match args.basis {
                Basis::Batch => ScoreBasis::Batch,
                Basis::Training => ScoreBasis::Training,
            };
            let scores = model.score(&data, basis)?;
            write_scores(&args.out, &scores.scores)?;
            println!("{} scores written to {}", scores.len(), args.out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
