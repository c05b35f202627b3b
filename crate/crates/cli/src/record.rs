//! Soft-label record files: one JSON object per line with keys `id`, `gamma`,
//! `label_a`, `label_b` and `soft`.

use std::fmt::Write as _;

use isodistill_core::{LabelDistribution, MixedHardLabel, Space};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelRecord {
    pub id: String,
    pub gamma: f64,
    pub label_a: usize,
    pub label_b: usize,
    pub soft: Vec<f64>,
}

impl LabelRecord {
    pub fn mixed_label(&self) -> Result<MixedHardLabel, isodistill_core::Error> {
        MixedHardLabel::new(self.label_a, self.label_b, self.gamma, self.soft.len())
    }

    pub fn distribution(&self, space: Space) -> Result<LabelDistribution, isodistill_core::Error> {
        LabelDistribution::new(self.soft.clone(), space)
    }

    /// Serializes with every float at 17 significant digits, so reading the
    /// line back gives the same bits and rewriting it gives the same bytes.
    pub fn to_json_line(&self) -> String {
        let mut line = String::with_capacity(32 + 24 * self.soft.len());
        line.push_str("{\"id\":");
        line.push_str(&serde_json::to_string(&self.id).expect("strings always serialize"));
        let _ = write!(
            line,
            ",\"gamma\":{},\"label_a\":{},\"label_b\":{},\"soft\":",
            format_g17(self.gamma),
            self.label_a,
            self.label_b
        );
        push_array(&mut line, &self.soft);
        line.push('}');
        line
    }
}

pub(crate) fn push_array(out: &mut String, values: &[f64]) {
    out.push('[');
    for (k, v) in values.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        out.push_str(&format_g17(*v));
    }
    out.push(']');
}

/// Formats like C's `%.17g`.
pub fn format_g17(value: f64) -> String {
    if value == 0.0 {
        return if value.is_sign_negative() { "-0" } else { "0" }.to_string();
    }
    let scientific = format!("{value:.16e}");
    let (mantissa, exponent) = scientific
        .split_once('e')
        .expect("exponent notation has an 'e'");
    let exponent: i32 = exponent.parse().expect("exponent is an integer");
    if !(-4..17).contains(&exponent) {
        let sign = if exponent < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exponent.abs())
    } else {
        let decimals = (16 - exponent) as usize;
        trim_fraction(&format!("{value:.decimals$}")).to_string()
    }
}

fn trim_fraction(number: &str) -> &str {
    if number.contains('.') {
        number.trim_end_matches('0').trim_end_matches('.')
    } else {
        number
    }
}

/// Parses a record file. Blank lines are skipped; rows are numbered by line.
/// Every record must carry the same number of labels.
pub fn parse_records(text: &str) -> Result<Vec<(usize, LabelRecord)>, CliError> {
    let mut records = Vec::new();
    let mut classes = None;
    for (index, line) in text.lines().enumerate() {
        let row = index + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: LabelRecord = serde_json::from_str(line).map_err(|e| CliError::row(row, e))?;
        let expected = *classes.get_or_insert(record.soft.len());
        if record.soft.len() != expected {
            return Err(CliError::row(
                row,
                format!(
                    "expected {expected} soft values, found {}",
                    record.soft.len()
                ),
            ));
        }
        records.push((row, record));
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn g17_matches_printf() {
        // Reference strings from printf("%.17g").
        let cases = [
            (0.1, "0.10000000000000001"),
            (0.5, "0.5"),
            (1.0, "1"),
            (1.0 / 3.0, "0.33333333333333331"),
            (2.0 / 3.0, "0.66666666666666663"),
            (1e-5, "1.0000000000000001e-05"),
            (0.0001, "0.0001"),
            (123456789.0, "123456789"),
            (1e17, "1e+17"),
            (1e16, "10000000000000000"),
            (-0.25, "-0.25"),
            (-2.5e-300, "-2.5e-300"),
            (0.0, "0"),
        ];
        for (value, expected) in cases {
            assert_eq!(format_g17(value), expected, "{value:e}");
        }
    }

    #[test]
    fn line_format() {
        let record = LabelRecord {
            id: "a\"b".into(),
            gamma: 0.7,
            label_a: 0,
            label_b: 2,
            soft: vec![0.5, 0.25, 0.25],
        };
        assert_eq!(
            record.to_json_line(),
            r#"{"id":"a\"b","gamma":0.69999999999999996,"label_a":0,"label_b":2,"soft":[0.5,0.25,0.25]}"#
        );
    }

    #[test]
    fn errors_name_the_row() {
        let text = "{\"id\":\"x\",\"gamma\":0.5,\"label_a\":0,\"label_b\":1,\"soft\":[0.5,0.5]}\n\nnot json\n";
        match parse_records(text) {
            Err(CliError::Row { row: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
        let text = "{\"id\":\"x\",\"gamma\":0.5,\"label_a\":0,\"label_b\":1,\"soft\":[0.5,0.5]}\n{\"id\":\"y\",\"gamma\":0.5,\"label_a\":0,\"label_b\":1,\"soft\":[0.5,0.25,0.25]}";
        match parse_records(text) {
            Err(CliError::Row { row: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        let text = "{\"id\":\"x\",\"gamma\":0.5,\"label_a\":0,\"label_b\":1,\"soft\":[0.5,0.5],\"extra\":1}";
        assert!(parse_records(text).is_err());
    }

    proptest! {
        #[test]
        fn g17_round_trips(bits in any::<u64>()) {
            let value = f64::from_bits(bits);
            prop_assume!(value.is_finite());
            let text = format_g17(value);
            prop_assert_eq!(text.parse::<f64>().unwrap().to_bits(), value.to_bits());
        }

        #[test]
        fn parse_serialize_parse_is_identity(
            id in "[ -~]{0,12}",
            gamma in 0.0f64..=1.0,
            label_a in 0usize..5,
            soft in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 5),
        ) {
            let record = LabelRecord { id, gamma, label_a, label_b: (label_a + 1) % 5, soft };
            let line = record.to_json_line();
            let parsed = parse_records(&line).unwrap();
            prop_assert_eq!(parsed.len(), 1);
            let back = &parsed[0].1;
            prop_assert_eq!(back.to_json_line(), line);
            prop_assert_eq!(&back.id, &record.id);
            prop_assert_eq!(back.gamma.to_bits(), record.gamma.to_bits());
            for (x, y) in back.soft.iter().zip(&record.soft) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }
}
