//! Baseline-vs-hierarchical comparison runs and step-count speedup reports.
//!
//! Both heads train on identical data; only the label encoding, loss and
//! output width differ. Speedup is measured in optimization steps on the
//! validation curves: for a checkpoint where the hierarchical head reaches
//! some accuracy, how many steps does the baseline need to reach the same
//! accuracy? The initial speedup reads this ratio at the first checkpoint;
//! the overall speedup relates the baseline's total step budget to the first
//! hierarchical step matching the baseline's final accuracy.

use std::fmt::Write as _;

use thiserror::Error;

use crate::data::{generate_synthetic, DataError, SynthConfig};
use crate::hierarchy::Hierarchy;
use crate::inference::PredictionMode;
use crate::model::Head;
use crate::train::{train, EvalRecord, TrainConfig, TrainError};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("evaluation grids do not match: {0}")]
    GridMismatch(String),
    #[error("no runs to aggregate")]
    NoRuns,
    #[error("metrics line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Train(#[from] TrainError),
}

/// One training run's metrics with the context needed to compare runs.
#[derive(Clone, Debug, PartialEq)]
pub struct RunMetrics {
    pub method: Head,
    pub seed: u64,
    /// Prediction mode the hierarchical head was evaluated under.
    pub mode: PredictionMode,
    pub records: Vec<EvalRecord>,
}

/// Speedup at one hierarchical checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointSpeedup {
    /// Hierarchical step `t` and its validation accuracy.
    pub step: usize,
    pub accuracy: f64,
    /// First baseline step whose validation accuracy reaches `accuracy`;
    /// `None` when the baseline never gets there.
    pub baseline_step: Option<usize>,
    /// `baseline_step / step` where defined.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpeedupReport {
    /// Baseline total steps over the first hierarchical step matching the
    /// baseline's final validation accuracy; `None` if never matched.
    pub overall_speedup: Option<f64>,
    /// Checkpoint ratio at the first evaluation interval.
    pub initial_speedup: Option<f64>,
    pub checkpoints: Vec<CheckpointSpeedup>,
    pub baseline_final_accuracy: f64,
    pub hierarchical_final_accuracy: f64,
}

/// Everything a comparison produces: the per-(method, seed) runs, the
/// seed-averaged curves, and the speedup report computed on those averages.
#[derive(Clone, Debug)]
pub struct ComparisonOutcome {
    pub runs: Vec<RunMetrics>,
    pub hierarchical_mean: Vec<EvalRecord>,
    pub baseline_mean: Vec<EvalRecord>,
    pub report: SpeedupReport,
}

/// Configuration for [`run_comparison`]: the synthetic dataset, the shared
/// training setup, and the train/validation split fraction.
///
/// The dataset (generation and split) is controlled entirely by
/// `synth.seed`, so every method and every training seed sees identical
/// data.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub synth: SynthConfig,
    pub train: TrainConfig,
    pub train_fraction: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            synth: SynthConfig {
                depth: 3,
                branching: 2,
                samples_per_leaf: 100,
                dim: 32,
                level_scale: 3.0,
                noise: 1.0,
                seed: 0,
            },
            train: TrainConfig::default(),
            train_fraction: 0.5,
        }
    }
}

/// Trains both heads on identical data for every seed and reports the
/// speedup of the hierarchical head over the baseline, computed on the
/// pointwise seed-averaged validation curves.
pub fn run_comparison(cfg: &BenchConfig, seeds: &[u64]) -> Result<ComparisonOutcome, BenchError> {
    if seeds.is_empty() {
        return Err(BenchError::NoRuns);
    }
    let (h, ds) = generate_synthetic(&cfg.synth)?;
    let (train_set, val_set) = ds.stratified_split(cfg.train_fraction, cfg.synth.seed)?;
    let train_set = train_set.standardize()?;
    let val_set = val_set.apply_standardization(
        train_set
            .standardization()
            .expect("standardize always records its parameters"),
    )?;

    let mut runs = Vec::with_capacity(seeds.len() * 2);
    for method in [Head::Hierarchical, Head::Baseline] {
        for &seed in seeds {
            let outcome = train(&cfg.train, &h, &train_set, &val_set, method, seed)?;
            runs.push(RunMetrics {
                method,
                seed,
                mode: cfg.train.mode,
                records: outcome.records,
            });
        }
    }

    let curves_of = |method: Head| -> Vec<&[EvalRecord]> {
        runs.iter()
            .filter(|r| r.method == method)
            .map(|r| r.records.as_slice())
            .collect()
    };
    let hierarchical_mean = average_curves(&curves_of(Head::Hierarchical))?;
    let baseline_mean = average_curves(&curves_of(Head::Baseline))?;
    let report = compute_speedup(&hierarchical_mean, &baseline_mean)?;
    Ok(ComparisonOutcome {
        runs,
        hierarchical_mean,
        baseline_mean,
        report,
    })
}

/// Pointwise mean of several runs' records. All runs must share the step grid.
pub fn average_curves(curves: &[&[EvalRecord]]) -> Result<Vec<EvalRecord>, BenchError> {
    let first = curves.first().ok_or(BenchError::NoRuns)?;
    for other in &curves[1..] {
        check_same_grid(first, other)?;
    }
    let n = curves.len() as f64;
    Ok((0..first.len())
        .map(|i| EvalRecord {
            step: first[i].step,
            train_accuracy: curves.iter().map(|c| c[i].train_accuracy).sum::<f64>() / n,
            train_loss: curves.iter().map(|c| c[i].train_loss).sum::<f64>() / n,
            val_accuracy: curves.iter().map(|c| c[i].val_accuracy).sum::<f64>() / n,
            val_loss: curves.iter().map(|c| c[i].val_loss).sum::<f64>() / n,
        })
        .collect())
}

fn check_same_grid(a: &[EvalRecord], b: &[EvalRecord]) -> Result<(), BenchError> {
    let steps = |records: &[EvalRecord]| records.iter().map(|r| r.step).collect::<Vec<_>>();
    if steps(a) != steps(b) {
        return Err(BenchError::GridMismatch(format!(
            "{:?} vs {:?}",
            steps(a),
            steps(b)
        )));
    }
    Ok(())
}

/// Matches each hierarchical checkpoint against the first baseline step
/// reaching the same validation accuracy (no interpolation; accuracy is
/// matched on the recorded grid).
pub fn compute_speedup(
    hier: &[EvalRecord],
    base: &[EvalRecord],
) -> Result<SpeedupReport, BenchError> {
    if hier.is_empty() || base.is_empty() {
        return Err(BenchError::NoRuns);
    }
    check_same_grid(hier, base)?;

    let checkpoints: Vec<CheckpointSpeedup> = hier
        .iter()
        .map(|record| {
            let baseline_step = base
                .iter()
                .find(|b| b.val_accuracy >= record.val_accuracy)
                .map(|b| b.step);
            CheckpointSpeedup {
                step: record.step,
                accuracy: record.val_accuracy,
                baseline_step,
                ratio: baseline_step.map(|s| s as f64 / record.step as f64),
            }
        })
        .collect();

    let base_final = base.last().expect("non-empty");
    let overall_speedup = hier
        .iter()
        .find(|r| r.val_accuracy >= base_final.val_accuracy)
        .map(|r| base_final.step as f64 / r.step as f64);

    Ok(SpeedupReport {
        overall_speedup,
        initial_speedup: checkpoints[0].ratio,
        checkpoints,
        baseline_final_accuracy: base_final.val_accuracy,
        hierarchical_final_accuracy: hier.last().expect("non-empty").val_accuracy,
    })
}

/// Renders runs as the metrics CSV: `method,seed,step,split,accuracy,loss`,
/// one train row and one validation row per recorded interval.
pub fn write_metrics_csv(runs: &[RunMetrics]) -> String {
    let mut out = String::from("method,seed,step,split,accuracy,loss\n");
    for run in runs {
        for r in &run.records {
            let _ = writeln!(
                out,
                "{},{},{},train,{},{}",
                run.method, run.seed, r.step, r.train_accuracy, r.train_loss
            );
            let _ = writeln!(
                out,
                "{},{},{},val,{},{}",
                run.method, run.seed, r.step, r.val_accuracy, r.val_loss
            );
        }
    }
    out
}

/// Parses the metrics CSV back into runs. The prediction mode is run
/// configuration rather than a CSV column, so the caller supplies it.
pub fn read_metrics_csv(text: &str, mode: PredictionMode) -> Result<Vec<RunMetrics>, BenchError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "method,seed,step,split,accuracy,loss")) => {}
        _ => {
            return Err(BenchError::Parse {
                line: 1,
                message: "bad or missing header".to_owned(),
            })
        }
    }

    let mut runs: Vec<RunMetrics> = Vec::new();
    let mut pending: Option<(Head, u64, usize, f64, f64)> = None;
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(BenchError::Parse {
                line: line_no,
                message: format!("expected 6 fields, got {}", fields.len()),
            });
        }
        let bad = |message: String| BenchError::Parse { line: line_no, message };
        let method: Head = fields[0].parse().map_err(bad)?;
        let seed: u64 = fields[1].parse().map_err(|e| bad(format!("bad seed: {e}")))?;
        let step: usize = fields[2].parse().map_err(|e| bad(format!("bad step: {e}")))?;
        let accuracy: f64 = fields[4].parse().map_err(|e| bad(format!("bad accuracy: {e}")))?;
        let loss: f64 = fields[5].parse().map_err(|e| bad(format!("bad loss: {e}")))?;
        match fields[3] {
            "train" => {
                if pending.is_some() {
                    return Err(bad("train row while another train row is open".to_owned()));
                }
                pending = Some((method, seed, step, accuracy, loss));
            }
            "val" => {
                let (p_method, p_seed, p_step, train_accuracy, train_loss) =
                    pending.take().ok_or_else(|| bad("val row without its train row".to_owned()))?;
                if p_method != method || p_seed != seed || p_step != step {
                    return Err(bad("val row does not match preceding train row".to_owned()));
                }
                if !(0.0..=1.0).contains(&accuracy) || !(0.0..=1.0).contains(&train_accuracy) {
                    return Err(bad("accuracy outside [0, 1]".to_owned()));
                }
                let record = EvalRecord {
                    step,
                    train_accuracy,
                    train_loss,
                    val_accuracy: accuracy,
                    val_loss: loss,
                };
                match runs.last_mut() {
                    Some(run) if run.method == method && run.seed == seed => {
                        if run.records.last().is_some_and(|last| last.step >= step) {
                            return Err(bad("steps must be strictly increasing".to_owned()));
                        }
                        run.records.push(record)
                    }
                    _ => runs.push(RunMetrics {
                        method,
                        seed,
                        mode,
                        records: vec![record],
                    }),
                }
            }
            other => return Err(bad(format!("unknown split '{other}'"))),
        }
    }
    if pending.is_some() {
        return Err(BenchError::Parse {
            line: 0,
            message: "trailing train row without val row".to_owned(),
        });
    }
    Ok(runs)
}

fn fmt_opt_ratio(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_owned(), |r| format!("{r:.2}"))
}

/// Human-readable report: the per-checkpoint matching table and the summary.
pub fn render_report_text(outcome: &ComparisonOutcome, h: &Hierarchy) -> String {
    let report = &outcome.report;
    let seeds: Vec<u64> = outcome
        .runs
        .iter()
        .filter(|r| r.method == Head::Hierarchical)
        .map(|r| r.seed)
        .collect();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "baseline vs hierarchy on {} classes ({} nodes), {} seed(s) {:?}",
        h.labeled().len(),
        h.node_count(),
        seeds.len(),
        seeds
    );
    let _ = writeln!(out);
    let _ = writeln!(out, "{:>8}  {:>12}  {:>14}  {:>8}", "step", "w/hierarchy", "baseline step", "speedup");
    for c in &report.checkpoints {
        let _ = writeln!(
            out,
            "{:>8}  {:>11.2}%  {:>14}  {:>8}",
            c.step,
            c.accuracy * 100.0,
            c.baseline_step.map_or_else(|| "-".to_owned(), |s| s.to_string()),
            fmt_opt_ratio(c.ratio),
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "final accuracy:   baseline {:.2}%  w/hierarchy {:.2}%",
        report.baseline_final_accuracy * 100.0,
        report.hierarchical_final_accuracy * 100.0
    );
    let _ = writeln!(out, "overall speedup:  {}", fmt_opt_ratio(report.overall_speedup));
    let _ = writeln!(out, "initial speedup:  {}", fmt_opt_ratio(report.initial_speedup));
    out
}

/// Machine-readable summary row: final accuracies and both speedups.
/// Undefined speedups render as empty cells.
pub fn render_report_csv(report: &SpeedupReport) -> String {
    let opt = |v: Option<f64>| v.map_or_else(String::new, |r| r.to_string());
    format!(
        "accuracy_baseline,accuracy_hierarchical,overall_speedup,initial_speedup\n{},{},{},{}\n",
        report.baseline_final_accuracy,
        report.hierarchical_final_accuracy,
        opt(report.overall_speedup),
        opt(report.initial_speedup),
    )
}

/// Machine-readable per-checkpoint table.
pub fn render_checkpoints_csv(report: &SpeedupReport) -> String {
    let mut out = String::from("step,hierarchical_accuracy,baseline_step,speedup\n");
    for c in &report.checkpoints {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            c.step,
            c.accuracy,
            c.baseline_step.map_or_else(String::new, |s| s.to_string()),
            c.ratio.map_or_else(String::new, |r| r.to_string()),
        );
    }
    out
}
