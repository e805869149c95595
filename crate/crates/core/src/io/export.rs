//! CSV export of an assessment report.
//!
//! One row per device, aggregate, and layer figure. Expected and delta
//! columns are filled from the report's comparisons where the case embeds
//! reference values, and left blank otherwise.

use std::collections::BTreeMap;

use crate::percent::display_signed;
use crate::report::AssessmentReport;

/// Renders the report as CSV with header `section,label,value,expected,delta`.
pub fn export_table(report: &AssessmentReport) -> String {
    let by_label: BTreeMap<&str, (String, String)> = report
        .comparisons
        .iter()
        .map(|c| {
            (
                c.label.as_str(),
                (c.expected.to_string(), display_signed(c.delta())),
            )
        })
        .collect();
    let lookup = |label: &str| -> (String, String) {
        by_label
            .get(label)
            .cloned()
            .unwrap_or_else(|| (String::new(), String::new()))
    };

    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["section", "label", "value", "expected", "delta"])
        .expect("in-memory csv writes cannot fail");

    for device in &report.devices {
        let (expected, delta) = lookup(&device.device_id);
        writer
            .write_record([
                "device",
                &device.device_id,
                &device.result.value.to_string(),
                &expected,
                &delta,
            ])
            .expect("in-memory csv writes cannot fail");
    }

    for category in &report.categories {
        if let Some(result) = &category.result {
            let label = category.status.aggregate_label();
            let (expected, delta) = lookup(label);
            writer
                .write_record([
                    "aggregate",
                    label,
                    &result.value.to_string(),
                    &expected,
                    &delta,
                ])
                .expect("in-memory csv writes cannot fail");
        }
    }

    let (expected, delta) = lookup("IQA_tot");
    writer
        .write_record([
            "aggregate",
            "IQA_tot",
            &report.total.value.to_string(),
            &expected,
            &delta,
        ])
        .expect("in-memory csv writes cannot fail");

    for layer in &report.layers {
        writer
            .write_record([
                "layer",
                layer.layer.name(),
                &layer.normalized.to_string(),
                "",
                "",
            ])
            .expect("in-memory csv writes cannot fail");
    }

    let bytes = writer.into_inner().expect("in-memory csv writer flushes");
    String::from_utf8(bytes).expect("csv output is utf-8")
}
