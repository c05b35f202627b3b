//! Experiment configuration: a flat `key = value` text file. `#` starts a
//! comment; unknown or repeated keys are rejected.

use std::collections::HashSet;
use std::str::FromStr;

use isodistill_core::harness::{
    Augmentation, DatasetSpec, DistillMode, DistillSettings, GammaSource, TrainConfig,
};
use isodistill_core::losses::CalibratedTerm;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// The seed of each run also seeds its dataset and teacher.
    pub dataset: DatasetSpec,
    pub teacher: TrainConfig,
    pub distill: DistillSettings,
    pub seeds: Vec<u64>,
    pub fractions: Vec<f64>,
}

impl Default for ExperimentConfig {
    /// The noisy-teacher setup: six classes, 30% of teacher labels flipped,
    /// five seeds and a calibration-fraction sweep under KD-i.
    fn default() -> Self {
        Self {
            dataset: DatasetSpec {
                label_noise: 0.3,
                ..DatasetSpec::default()
            },
            teacher: TrainConfig::default(),
            distill: DistillSettings {
                mode: DistillMode::KdI,
                ..DistillSettings::default()
            },
            seeds: (0..5).collect(),
            fractions: vec![0.0, 0.25, 0.5, 0.75, 1.0],
        }
    }
}

pub fn mode_name(mode: DistillMode) -> &'static str {
    match mode {
        DistillMode::Kd => "kd",
        DistillMode::KdAug => "kd_aug",
        DistillMode::KdI => "kd_i",
        DistillMode::KdP => "kd_p",
    }
}

pub fn parse_mode(text: &str) -> Option<DistillMode> {
    Some(match text {
        "kd" => DistillMode::Kd,
        "kd_aug" => DistillMode::KdAug,
        "kd_i" => DistillMode::KdI,
        "kd_p" => DistillMode::KdP,
        _ => return None,
    })
}

fn number<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| CliError::Config {
        line,
        message: format!("`{key}` expects a number, got `{value}`"),
    })
}

fn list<T: FromStr>(line: usize, key: &str, value: &str) -> Result<Vec<T>, CliError> {
    value
        .split(',')
        .map(|item| number(line, key, item.trim()))
        .collect()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        let mut seen = HashSet::new();
        let mut gamma_a = None;
        let mut gamma_fixed = None;
        let mut channels = None;
        let mut augmentation = "mixup".to_string();
        let mut teacher_epochs = None;

        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(CliError::Config {
                    line,
                    message: format!("expected `key = value`, got `{content}`"),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(CliError::Config {
                    line,
                    message: format!("`{key}` is set twice"),
                });
            }
            let loss = &mut cfg.distill.loss;
            let student = &mut cfg.distill.train;
            let data = &mut cfg.dataset;
            match key {
                "mode" => {
                    cfg.distill.mode = parse_mode(value).ok_or_else(|| CliError::Config {
                        line,
                        message: format!("unknown mode `{value}`"),
                    })?;
                }
                "augmentation" => augmentation = value.to_string(),
                "channels" => channels = Some(number(line, key, value)?),
                "gamma_a" => gamma_a = Some(number(line, key, value)?),
                "gamma_fixed" => gamma_fixed = Some(number(line, key, value)?),
                "tau" => loss.tau = number(line, key, value)?,
                "alpha" => loss.alpha = number(line, key, value)?,
                "beta" => loss.beta = number(line, key, value)?,
                "sigma" => loss.sigma = number(line, key, value)?,
                "calibrated_term" => {
                    loss.calibrated_term = match value {
                        "student" => CalibratedTerm::StudentVsCalibrated,
                        "hard" => CalibratedTerm::HardVsCalibrated,
                        _ => {
                            return Err(CliError::Config {
                                line,
                                message: format!(
                                    "`calibrated_term` is `student` or `hard`, got `{value}`"
                                ),
                            })
                        }
                    }
                }
                "n_train" => data.n_train = number(line, key, value)?,
                "n_test" => data.n_test = number(line, key, value)?,
                "dim" => data.dim = number(line, key, value)?,
                "classes" => data.classes = number(line, key, value)?,
                "overlap" => data.overlap = number(line, key, value)?,
                "label_noise" => data.label_noise = number(line, key, value)?,
                "epochs" => student.epochs = number(line, key, value)?,
                "teacher_epochs" => teacher_epochs = Some(number(line, key, value)?),
                "learning_rate" => student.learning_rate = number(line, key, value)?,
                "batch_size" => student.batch_size = number(line, key, value)?,
                "hidden" => student.hidden = number(line, key, value)?,
                "seeds" => cfg.seeds = list(line, key, value)?,
                "fractions" => cfg.fractions = list(line, key, value)?,
                _ => {
                    return Err(CliError::Config {
                        line,
                        message: format!("unknown key `{key}`"),
                    })
                }
            }
        }

        cfg.distill.augmentation = match (augmentation.as_str(), channels) {
            ("mixup", None) => Augmentation::Mixup,
            ("cutmix", channels) => Augmentation::CutMix {
                channels: channels.unwrap_or(1),
            },
            ("mixup", Some(_)) => {
                return Err(CliError::InvalidConfig(
                    "`channels` only applies to cutmix".into(),
                ))
            }
            (other, _) => {
                return Err(CliError::InvalidConfig(format!(
                    "unknown augmentation `{other}`"
                )))
            }
        };
        cfg.distill.gamma = match (gamma_a, gamma_fixed) {
            (Some(_), Some(_)) => {
                return Err(CliError::InvalidConfig(
                    "set at most one of `gamma_a` and `gamma_fixed`".into(),
                ))
            }
            (_, Some(g)) => GammaSource::Fixed(g),
            (a, None) => GammaSource::Beta(a.unwrap_or(1.0)),
        };
        cfg.teacher = TrainConfig {
            epochs: teacher_epochs.unwrap_or(cfg.distill.train.epochs),
            ..cfg.distill.train
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.distill.loss.validate()?;
        if self.seeds.is_empty() {
            return Err(CliError::InvalidConfig("`seeds` is empty".into()));
        }
        if self.fractions.is_empty() {
            return Err(CliError::InvalidConfig("`fractions` is empty".into()));
        }
        if let Some(f) = self.fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
            return Err(CliError::InvalidConfig(format!(
                "fraction {f} is outside [0, 1]"
            )));
        }
        let unique: HashSet<u64> = self.seeds.iter().copied().collect();
        if unique.len() != self.seeds.len() {
            return Err(CliError::InvalidConfig("`seeds` has duplicates".into()));
        }
        let unique: HashSet<u64> = self.fractions.iter().map(|f| f.to_bits()).collect();
        if unique.len() != self.fractions.len() {
            return Err(CliError::InvalidConfig("`fractions` has duplicates".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(
            ExperimentConfig::parse("# nothing\n\n").unwrap(),
            ExperimentConfig::default()
        );
    }

    #[test]
    fn reads_every_key() {
        let text = "
            mode = kd_p
            augmentation = cutmix
            channels = 1
            gamma_fixed = 0.8
            tau = 2
            alpha = 0.5
            beta = 1
            sigma = 0.5   # trailing comment
            calibrated_term = hard
            n_train = 100
            n_test = 50
            dim = 9
            classes = 3
            overlap = 0.5
            label_noise = 0.1
            epochs = 7
            teacher_epochs = 9
            learning_rate = 0.05
            batch_size = 8
            hidden = 4
            seeds = 3, 4
            fractions = 0, 1
        ";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.distill.mode, DistillMode::KdP);
        assert_eq!(
            cfg.distill.augmentation,
            Augmentation::CutMix { channels: 1 }
        );
        assert_eq!(cfg.distill.gamma, GammaSource::Fixed(0.8));
        assert_eq!(
            cfg.distill.loss.calibrated_term,
            CalibratedTerm::HardVsCalibrated
        );
        assert_eq!(cfg.distill.loss.sigma, 0.5);
        assert_eq!(cfg.dataset.classes, 3);
        assert_eq!(cfg.teacher.epochs, 9);
        assert_eq!(cfg.distill.train.epochs, 7);
        assert_eq!(cfg.teacher.hidden, 4);
        assert_eq!(cfg.seeds, vec![3, 4]);
        assert_eq!(cfg.fractions, vec![0.0, 1.0]);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "nonsense",
            "colour = red",
            "tau = hot",
            "tau = 1\ntau = 2",
            "tau = 0",
            "fractions = 0, 2",
            "seeds = 1, 1",
            "mode = kd_x",
            "gamma_a = 1\ngamma_fixed = 0.5",
            "augmentation = blend",
            "channels = 3",
        ] {
            assert!(ExperimentConfig::parse(text).is_err(), "{text}");
        }
        match ExperimentConfig::parse("tau = 1\n\nbogus = 2") {
            Err(CliError::Config { line: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
    }
}
