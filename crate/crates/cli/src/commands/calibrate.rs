use std::fmt::Write as _;

use isodistill_core::isotonic::{adapted_irt, count_violations};
use isodistill_core::losses::softmax_t;
use isodistill_core::penalty::order_penalty;
use isodistill_core::Space;

use crate::error::CliError;
use crate::record::{format_g17, parse_records, LabelRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalibrateMode {
    /// Rewrite every record with its projected soft labels.
    Irt,
    /// Report the order penalty and violation count of every record.
    PenaltyCheck,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrateOptions {
    pub space: Space,
    /// Temperature for turning logits into probabilities.
    pub tau: f64,
    pub mode: CalibrateMode,
    /// Project logits directly instead of their tempered softmax.
    pub calibrate_logits: bool,
}

impl Default for CalibrateOptions {
    fn default() -> Self {
        Self {
            space: Space::Probability,
            tau: 1.0,
            mode: CalibrateMode::Irt,
            calibrate_logits: false,
        }
    }
}

/// Processes a whole record file and returns the output text.
pub fn calibrate(input: &str, opts: &CalibrateOptions) -> Result<String, CliError> {
    if opts.calibrate_logits && opts.space != Space::Logit {
        return Err(CliError::Usage(
            "--calibrate-logits needs --space logits".into(),
        ));
    }
    if !(opts.tau > 0.0 && opts.tau.is_finite()) {
        return Err(CliError::Usage(format!(
            "--tau must be positive, got {}",
            opts.tau
        )));
    }
    let mut out = String::new();
    for (row, record) in parse_records(input)? {
        let h = record.mixed_label().map_err(|e| CliError::row(row, e))?;
        let soft = record
            .distribution(opts.space)
            .map_err(|e| CliError::row(row, e))?;
        let tree = h.order_tree();
        match opts.mode {
            CalibrateMode::Irt => {
                let target = if opts.space == Space::Logit && !opts.calibrate_logits {
                    softmax_t(&soft, opts.tau)?
                } else {
                    soft
                };
                let calibrated = adapted_irt(&target, &tree).map_err(|e| CliError::row(row, e))?;
                let rewritten = LabelRecord {
                    soft: calibrated.calibrated.into_values(),
                    ..record
                };
                out.push_str(&rewritten.to_json_line());
            }
            CalibrateMode::PenaltyCheck => {
                let penalty = order_penalty(&soft, &h).map_err(|e| CliError::row(row, e))?;
                let violations =
                    count_violations(&soft, &tree).map_err(|e| CliError::row(row, e))?;
                let _ = write!(
                    out,
                    "{{\"id\":{},\"penalty\":{},\"violations\":{violations}}}",
                    serde_json::to_string(&record.id).expect("strings always serialize"),
                    format_g17(penalty),
                );
            }
        }
        out.push('\n');
    }
    Ok(out)
}
