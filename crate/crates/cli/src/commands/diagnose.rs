use std::fmt::Write as _;

use isodistill_core::diagnostics::{violation_report, BatchSummary};
use isodistill_core::Space;

use crate::error::CliError;
use crate::record::{format_g17, parse_records};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    Json,
    #[default]
    Text,
}

pub fn summarize(input: &str, space: Space) -> Result<BatchSummary, CliError> {
    let mut reports = Vec::new();
    for (row, record) in parse_records(input)? {
        let h = record.mixed_label().map_err(|e| CliError::row(row, e))?;
        let soft = record
            .distribution(space)
            .map_err(|e| CliError::row(row, e))?;
        reports.push(violation_report(&soft, &h).map_err(|e| CliError::row(row, e))?);
    }
    Ok(BatchSummary::from_reports(&reports))
}

pub fn render(summary: &BatchSummary, format: ReportFormat) -> String {
    let fields = [
        ("mean_kendall_tau", format_g17(summary.mean_kendall_tau)),
        ("top2_ratio", format_g17(summary.top2_ratio)),
        ("mean_violations", format_g17(summary.mean_violations)),
    ];
    let mut out = String::new();
    match format {
        ReportFormat::Json => {
            let _ = write!(out, "{{\"samples\":{}", summary.samples);
            for (key, value) in &fields {
                let _ = write!(out, ",\"{key}\":{value}");
            }
            out.push_str("}\n");
        }
        ReportFormat::Text => {
            let _ = writeln!(out, "samples: {}", summary.samples);
            for (key, value) in &fields {
                let _ = writeln!(out, "{key}: {value}");
            }
        }
    }
    out
}

pub fn diagnose(input: &str, space: Space, format: ReportFormat) -> Result<String, CliError> {
    Ok(render(&summarize(input, space)?, format))
}
