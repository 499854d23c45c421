//! Command-line toolchain for DAG-based hierarchical classification:
//! hierarchy validation and inspection, encoding/mask dumps, synthetic data
//! generation, training, prediction, evaluation and the baseline-vs-
//! hierarchy benchmark.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data or validation
//! errors. Diagnostics go to stderr; data goes to files or stdout.

mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use hierclass::bench::{
    render_checkpoints_csv, render_report_csv, render_report_text, run_comparison,
    write_metrics_csv, BenchConfig, RunMetrics,
};
use hierclass::model::{Head, OptimizerKind, SavedModel};
use hierclass::{
    evaluate, generate_synthetic, marginals, predict_from_scores, prediction_scores, train,
    ConditionalScores, Dataset, Hierarchy, PredictionMode, SynthConfig, TrainConfig,
};

use config::ConfigFile;

#[derive(Parser)]
#[command(
    name = "hierclass",
    version,
    about = "Hierarchical classification over class DAGs",
    subcommand_required = true,
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a hierarchy file and print its shape
    Validate {
        #[arg(long)]
        hierarchy: PathBuf,
    },
    /// Dump the transitive closure as descendant,ancestor CSV
    Closure {
        #[arg(long)]
        hierarchy: PathBuf,
        /// Output file; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump the hierarchical encoding of a label as name,value CSV
    Encode {
        #[arg(long)]
        hierarchy: PathBuf,
        #[arg(long)]
        label: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump the loss mask of a label as name,value CSV
    Mask {
        #[arg(long)]
        hierarchy: PathBuf,
        #[arg(long)]
        label: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic hierarchy and dataset
    Gen {
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, default_value_t = 2)]
        branching: usize,
        #[arg(long, default_value_t = 100)]
        samples_per_leaf: usize,
        #[arg(long, default_value_t = 32)]
        dim: usize,
        #[arg(long, default_value_t = 3.0)]
        level_scale: f64,
        #[arg(long, default_value_t = 1.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_hierarchy: PathBuf,
        #[arg(long)]
        out_data: PathBuf,
    },
    /// Train one head on a dataset
    Train {
        #[arg(long)]
        hierarchy: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// key = value config file; flags override it
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "hierarchical")]
        head: Head,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        flags: TrainFlags,
        /// Share of the data used for training (rest is validation)
        #[arg(long)]
        train_fraction: Option<f64>,
        #[arg(long)]
        out_model: Option<PathBuf>,
        #[arg(long)]
        out_metrics: Option<PathBuf>,
    },
    /// Predict classes for a dataset with a trained model
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        hierarchy: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "mlnp")]
        mode: PredictionMode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report accuracy of a trained model on a dataset
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        hierarchy: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "mlnp")]
        mode: PredictionMode,
    },
    /// Compare the hierarchical head against the one-hot baseline
    Bench {
        /// key = value config file; flags override it
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of training seeds (seed-base, seed-base+1, …)
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        seed_base: u64,
        /// Output directory for metrics and reports
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        flags: TrainFlags,
        #[arg(long)]
        train_fraction: Option<f64>,
    },
}

/// Training knobs shared by `train` and `bench`; every flag overrides the
/// corresponding config-file key.
#[derive(Args)]
struct TrainFlags {
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    eval_interval: Option<usize>,
    /// sgd or adam
    #[arg(long)]
    optimizer: Option<OptimizerKind>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Hidden layer width; 0 selects the linear model
    #[arg(long)]
    hidden: Option<usize>,
    /// mlnp or anp: how the hierarchical head is scored during evaluation
    #[arg(long)]
    mode: Option<PredictionMode>,
}

enum CliError {
    Usage(String),
    Data(String),
}

type CliResult<T> = Result<T, CliError>;

fn data_err(message: impl Into<String>) -> CliError {
    CliError::Data(message.into())
}

fn in_file(path: &Path, e: impl std::fmt::Display) -> CliError {
    data_err(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
        Err(CliError::Data(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Validate { hierarchy } => {
            let h = load_hierarchy(&hierarchy)?;
            println!("nodes   {}", h.node_count());
            println!("edges   {}", h.edge_count());
            println!("roots   {}", h.roots().len());
            println!("leaves  {}", h.leaves().len());
            println!("labeled {}", h.labeled().len());
            Ok(())
        }
        Command::Closure { hierarchy, out } => {
            let h = load_hierarchy(&hierarchy)?;
            let mut text = String::from("descendant,ancestor\n");
            for s in h.node_ids() {
                for a in h.ancestors(s) {
                    let _ = writeln!(text, "{},{}", h.name(s), h.name(a));
                }
            }
            emit(out.as_deref(), &text)
        }
        Command::Encode { hierarchy, label, out } => {
            let h = load_hierarchy(&hierarchy)?;
            let y = resolve_label(&h, &label)?;
            let enc = hierclass::encode_label(&h, y);
            emit(out.as_deref(), &binary_csv(&h, enc.values()))
        }
        Command::Mask { hierarchy, label, out } => {
            let h = load_hierarchy(&hierarchy)?;
            let y = resolve_label(&h, &label)?;
            let mask = hierclass::loss_mask(&h, y);
            emit(out.as_deref(), &binary_csv(&h, mask.values()))
        }
        Command::Gen {
            depth,
            branching,
            samples_per_leaf,
            dim,
            level_scale,
            noise,
            seed,
            out_hierarchy,
            out_data,
        } => {
            let cfg = SynthConfig {
                depth,
                branching,
                samples_per_leaf,
                dim,
                level_scale,
                noise,
                seed,
            };
            let (h, ds) = generate_synthetic(&cfg).map_err(|e| data_err(e.to_string()))?;
            h.write_tsv_file(&out_hierarchy)
                .map_err(|e| data_err(e.to_string()))?;
            ds.write_csv_file(&out_data, &h)
                .map_err(|e| data_err(e.to_string()))?;
            eprintln!(
                "generated {} nodes ({} classes), {} samples of dimension {}",
                h.node_count(),
                h.labeled().len(),
                ds.len(),
                ds.dim()
            );
            Ok(())
        }
        Command::Train {
            hierarchy,
            data,
            config,
            head,
            seed,
            flags,
            train_fraction,
            out_model,
            out_metrics,
        } => {
            let h = load_hierarchy(&hierarchy)?;
            let ds = load_dataset(&data, &h)?;
            let (cfg, fraction) = resolve_train_config(config.as_deref(), &flags, train_fraction)?;
            let (train_set, val_set) = split_and_standardize(&ds, fraction, seed)?;
            let started = Instant::now();
            let outcome = train(&cfg, &h, &train_set, &val_set, head, seed)
                .map_err(|e| data_err(e.to_string()))?;
            let last = outcome.records.last().expect("steps >= eval_interval");
            eprintln!(
                "trained {head} head: {} steps in {:.2?}, final train/val accuracy {:.4}/{:.4}",
                cfg.steps,
                started.elapsed(),
                last.train_accuracy,
                last.val_accuracy
            );
            if let Some(path) = out_model {
                let mut saved = SavedModel::from_hierarchy(outcome.model, head, &h);
                saved.standardization = train_set.standardization().cloned();
                saved.save(&path).map_err(|e| data_err(e.to_string()))?;
            }
            if let Some(path) = out_metrics {
                let runs = [RunMetrics {
                    method: head,
                    seed,
                    mode: cfg.mode,
                    records: outcome.records,
                }];
                write_file(&path, &write_metrics_csv(&runs))?;
            }
            Ok(())
        }
        Command::Predict { model, hierarchy, data, mode, out } => {
            let saved = SavedModel::load(&model).map_err(|e| data_err(e.to_string()))?;
            let h = load_hierarchy(&hierarchy)?;
            saved.check_hierarchy(&h).map_err(|e| data_err(e.to_string()))?;
            let ds = apply_model_standardization(&saved, load_dataset(&data, &h)?)?;
            let mut text = String::from("sample_id,predicted_name,score\n");
            for i in 0..ds.len() {
                let outputs = saved
                    .model
                    .forward(ds.feature(i))
                    .map_err(|e| data_err(e.to_string()))?;
                let (winner, score) = match saved.head {
                    Head::Hierarchical => {
                        let cond = ConditionalScores::new(&h, outputs)
                            .map_err(|e| data_err(e.to_string()))?;
                        let marg = marginals(&h, &cond);
                        let scores = prediction_scores(&h, &cond, &marg);
                        let winner = predict_from_scores(&h, &scores, mode)
                            .map_err(|e| data_err(e.to_string()))?;
                        (winner, scores[winner.index()])
                    }
                    Head::Baseline => {
                        let best = (0..outputs.len())
                            .max_by(|&a, &b| {
                                outputs[a]
                                    .partial_cmp(&outputs[b])
                                    .expect("outputs are finite")
                                    .then(b.cmp(&a))
                            })
                            .ok_or_else(|| data_err("model has no outputs"))?;
                        (h.labeled()[best], outputs[best])
                    }
                };
                let _ = writeln!(text, "{i},{},{}", h.name(winner), score);
            }
            emit(out.as_deref(), &text)
        }
        Command::Eval { model, hierarchy, data, mode } => {
            let saved = SavedModel::load(&model).map_err(|e| data_err(e.to_string()))?;
            let h = load_hierarchy(&hierarchy)?;
            saved.check_hierarchy(&h).map_err(|e| data_err(e.to_string()))?;
            let ds = apply_model_standardization(&saved, load_dataset(&data, &h)?)?;
            let stats = evaluate(&saved.model, saved.head, &h, &ds, mode)
                .map_err(|e| data_err(e.to_string()))?;
            println!("metric,value");
            println!("accuracy,{}", stats.accuracy);
            println!("correct,{}", stats.correct);
            println!("total,{}", stats.total);
            println!("mean_loss,{}", stats.mean_loss);
            Ok(())
        }
        Command::Bench { config, seeds, seed_base, out, flags, train_fraction } => {
            if seeds == 0 {
                return Err(CliError::Usage("--seeds must be at least 1".to_owned()));
            }
            let cfg = resolve_bench_config(config.as_deref(), &flags, train_fraction)?;
            let seed_list: Vec<u64> = (0..seeds).map(|i| seed_base + i).collect();
            let started = Instant::now();
            let outcome =
                run_comparison(&cfg, &seed_list).map_err(|e| data_err(e.to_string()))?;
            let (h, _) = generate_synthetic(&cfg.synth).map_err(|e| data_err(e.to_string()))?;
            std::fs::create_dir_all(&out).map_err(|e| in_file(&out, e))?;
            write_file(&out.join("metrics.csv"), &write_metrics_csv(&outcome.runs))?;
            write_file(&out.join("report.txt"), &render_report_text(&outcome, &h))?;
            write_file(&out.join("report.csv"), &render_report_csv(&outcome.report))?;
            write_file(
                &out.join("checkpoints.csv"),
                &render_checkpoints_csv(&outcome.report),
            )?;
            eprintln!(
                "compared {} seed(s) in {:.2?}; overall speedup {}, initial speedup {}",
                seed_list.len(),
                started.elapsed(),
                outcome
                    .report
                    .overall_speedup
                    .map_or_else(|| "-".to_owned(), |r| format!("{r:.2}")),
                outcome
                    .report
                    .initial_speedup
                    .map_or_else(|| "-".to_owned(), |r| format!("{r:.2}")),
            );
            Ok(())
        }
    }
}

fn load_hierarchy(path: &Path) -> CliResult<Hierarchy> {
    Hierarchy::from_tsv_file(path).map_err(|e| data_err(e.to_string()))
}

fn load_dataset(path: &Path, h: &Hierarchy) -> CliResult<Dataset> {
    Dataset::from_csv_file(path, h).map_err(|e| in_file(path, e))
}

fn resolve_label(h: &Hierarchy, label: &str) -> CliResult<hierclass::NodeId> {
    h.node_id(label)
        .ok_or_else(|| data_err(format!("unknown label '{label}'")))
}

fn binary_csv(h: &Hierarchy, values: &[f64]) -> String {
    let mut text = String::from("name,value\n");
    for s in h.node_ids() {
        let _ = writeln!(text, "{},{}", h.name(s), values[s.index()] as u8);
    }
    text
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| in_file(path, e))
}

/// Replays the transform recorded at training time onto freshly loaded data.
fn apply_model_standardization(saved: &SavedModel, ds: Dataset) -> CliResult<Dataset> {
    match &saved.standardization {
        Some(params) => ds
            .apply_standardization(params)
            .map_err(|e| data_err(e.to_string())),
        None => Ok(ds),
    }
}

fn split_and_standardize(
    ds: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> CliResult<(Dataset, Dataset)> {
    let (train_set, val_set) = ds
        .stratified_split(train_fraction, seed)
        .map_err(|e| data_err(e.to_string()))?;
    let train_set = train_set.standardize().map_err(|e| data_err(e.to_string()))?;
    let val_set = val_set
        .apply_standardization(train_set.standardization().expect("standardize records params"))
        .map_err(|e| data_err(e.to_string()))?;
    Ok((train_set, val_set))
}

fn load_config(path: Option<&Path>) -> CliResult<Option<ConfigFile>> {
    let Some(path) = path else { return Ok(None) };
    let text = std::fs::read_to_string(path).map_err(|e| in_file(path, e))?;
    ConfigFile::parse(&text).map(Some).map_err(|e| in_file(path, e))
}

/// Layers train settings: defaults, then the config file, then flags.
fn apply_train_keys(cfg: &mut TrainConfig, file: &mut ConfigFile) -> Result<(), String> {
    if let Some(v) = file.take("steps")? {
        cfg.steps = v;
    }
    if let Some(v) = file.take("batch_size")? {
        cfg.batch_size = v;
    }
    if let Some(v) = file.take("eval_interval")? {
        cfg.eval_interval = v;
    }
    if let Some(v) = file.take("optimizer")? {
        cfg.optimizer = v;
    }
    if let Some(v) = file.take("learning_rate")? {
        cfg.learning_rate = v;
    }
    if let Some(v) = file.take::<usize>("hidden")? {
        cfg.hidden = if v == 0 { None } else { Some(v) };
    }
    if let Some(v) = file.take("mode")? {
        cfg.mode = v;
    }
    Ok(())
}

fn apply_train_flags(cfg: &mut TrainConfig, flags: &TrainFlags) {
    if let Some(v) = flags.steps {
        cfg.steps = v;
    }
    if let Some(v) = flags.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = flags.eval_interval {
        cfg.eval_interval = v;
    }
    if let Some(v) = flags.optimizer {
        cfg.optimizer = v;
    }
    if let Some(v) = flags.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = flags.hidden {
        cfg.hidden = if v == 0 { None } else { Some(v) };
    }
    if let Some(v) = flags.mode {
        cfg.mode = v;
    }
}

fn resolve_train_config(
    config: Option<&Path>,
    flags: &TrainFlags,
    train_fraction: Option<f64>,
) -> CliResult<(TrainConfig, f64)> {
    let mut cfg = TrainConfig::default();
    let mut fraction = 0.5;
    if let Some(mut file) = load_config(config)? {
        let context = |e: String| in_file(config.expect("config path present"), e);
        apply_train_keys(&mut cfg, &mut file).map_err(context)?;
        if let Some(v) = file.take("train_fraction").map_err(context)? {
            fraction = v;
        }
        file.finish().map_err(context)?;
    }
    apply_train_flags(&mut cfg, flags);
    if let Some(v) = train_fraction {
        fraction = v;
    }
    Ok((cfg, fraction))
}

fn apply_bench_keys(cfg: &mut BenchConfig, file: &mut ConfigFile) -> Result<(), String> {
    apply_train_keys(&mut cfg.train, file)?;
    if let Some(v) = file.take("depth")? {
        cfg.synth.depth = v;
    }
    if let Some(v) = file.take("branching")? {
        cfg.synth.branching = v;
    }
    if let Some(v) = file.take("samples_per_leaf")? {
        cfg.synth.samples_per_leaf = v;
    }
    if let Some(v) = file.take("dim")? {
        cfg.synth.dim = v;
    }
    if let Some(v) = file.take("level_scale")? {
        cfg.synth.level_scale = v;
    }
    if let Some(v) = file.take("noise")? {
        cfg.synth.noise = v;
    }
    if let Some(v) = file.take("data_seed")? {
        cfg.synth.seed = v;
    }
    if let Some(v) = file.take("train_fraction")? {
        cfg.train_fraction = v;
    }
    Ok(())
}

fn resolve_bench_config(
    config: Option<&Path>,
    flags: &TrainFlags,
    train_fraction: Option<f64>,
) -> CliResult<BenchConfig> {
    let mut cfg = BenchConfig::default();
    if let Some(mut file) = load_config(config)? {
        let path = config.expect("config path present");
        apply_bench_keys(&mut cfg, &mut file).map_err(|e| in_file(path, e))?;
        file.finish().map_err(|e| in_file(path, e))?;
    }
    apply_train_flags(&mut cfg.train, flags);
    if let Some(v) = train_fraction {
        cfg.train_fraction = v;
    }
    Ok(cfg)
}
