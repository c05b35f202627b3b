use std::fs;
use std::path::Path;

use isodistill_core::harness::{
    distill, train_teacher, DistillSettings, EpochMetrics, SyntheticDataset, TrainConfig,
    TrainedModel,
};
use serde::Serialize;

use crate::config::{mode_name, ExperimentConfig};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub fraction: f64,
    pub seed: u64,
    pub teacher_test_accuracy: f64,
    pub student: TrainedModel,
}

impl RunResult {
    pub fn file_name(&self) -> String {
        format!("run_f{}_seed{}.jsonl", self.fraction, self.seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub fraction: f64,
    pub seed: u64,
    pub teacher_test_accuracy: f64,
    pub student_test_accuracy: f64,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FractionSummary {
    pub fraction: f64,
    pub runs: usize,
    pub mean_test_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub mode: &'static str,
    pub seeds: Vec<u64>,
    pub fractions: Vec<FractionSummary>,
    pub runs: Vec<RunSummary>,
}

#[derive(Serialize)]
struct EpochLine {
    epoch: usize,
    learning_rate: f64,
    mean_loss: f64,
    train_accuracy: f64,
    test_accuracy: f64,
}

impl From<&EpochMetrics> for EpochLine {
    fn from(m: &EpochMetrics) -> Self {
        Self {
            epoch: m.epoch,
            learning_rate: m.learning_rate,
            mean_loss: m.mean_loss,
            train_accuracy: m.train_accuracy,
            test_accuracy: m.test_accuracy,
        }
    }
}

/// Runs every (seed, fraction) pair. Each seed gets one dataset and one
/// teacher, shared by all of its fractions. `seed_offset` shifts every seed.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    seed_offset: u64,
) -> Result<Vec<RunResult>, CliError> {
    cfg.validate()?;
    let mut runs = Vec::with_capacity(cfg.seeds.len() * cfg.fractions.len());
    for &base in &cfg.seeds {
        let seed = base.wrapping_add(seed_offset);
        let ds = SyntheticDataset::generate(isodistill_core::harness::DatasetSpec {
            seed,
            ..cfg.dataset
        })?;
        let teacher = train_teacher(
            &ds,
            &TrainConfig {
                seed,
                ..cfg.teacher
            },
        )?;
        for &fraction in &cfg.fractions {
            let settings = DistillSettings {
                calibration_fraction: fraction,
                train: TrainConfig {
                    seed,
                    ..cfg.distill.train
                },
                ..cfg.distill
            };
            runs.push(RunResult {
                fraction,
                seed,
                teacher_test_accuracy: teacher.final_test_accuracy(),
                student: distill(&teacher.model, &ds, &settings)?,
            });
        }
    }
    Ok(runs)
}

pub fn summarize(cfg: &ExperimentConfig, runs: &[RunResult]) -> ExperimentSummary {
    let fractions = cfg
        .fractions
        .iter()
        .map(|&fraction| {
            let matching: Vec<f64> = runs
                .iter()
                .filter(|r| r.fraction == fraction)
                .map(|r| r.student.final_test_accuracy())
                .collect();
            FractionSummary {
                fraction,
                runs: matching.len(),
                mean_test_accuracy: matching.iter().sum::<f64>() / matching.len().max(1) as f64,
            }
        })
        .collect();
    ExperimentSummary {
        mode: mode_name(cfg.distill.mode),
        seeds: runs
            .iter()
            .map(|r| r.seed)
            .fold(Vec::new(), |mut seeds, s| {
                if !seeds.contains(&s) {
                    seeds.push(s);
                }
                seeds
            }),
        fractions,
        runs: runs
            .iter()
            .map(|r| RunSummary {
                fraction: r.fraction,
                seed: r.seed,
                teacher_test_accuracy: r.teacher_test_accuracy,
                student_test_accuracy: r.student.final_test_accuracy(),
                file: r.file_name(),
            })
            .collect(),
    }
}

/// Writes one metrics file per run and `summary.json` into `dir`.
pub fn write_outputs(
    dir: &Path,
    summary: &ExperimentSummary,
    runs: &[RunResult],
) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for run in runs {
        let mut text = String::new();
        for metrics in &run.student.history {
            text.push_str(
                &serde_json::to_string(&EpochLine::from(metrics)).expect("metrics serialize"),
            );
            text.push('\n');
        }
        let path = dir.join(run.file_name());
        fs::write(&path, text).map_err(|e| CliError::io(path, e))?;
    }
    let path = dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(summary).expect("summary serializes");
    text.push('\n');
    fs::write(&path, text).map_err(|e| CliError::io(path, e))
}

pub fn render_table(summary: &ExperimentSummary) -> String {
    let mut out = format!("mode {}  seeds {:?}\n", summary.mode, summary.seeds);
    out.push_str("fraction  runs  mean_test_accuracy\n");
    for f in &summary.fractions {
        out.push_str(&format!(
            "{:>8}  {:>4}  {:.4}\n",
            f.fraction, f.runs, f.mean_test_accuracy
        ));
    }
    out
}
