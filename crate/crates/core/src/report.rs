//! Assessment reports: computed results at every granularity, comparison
//! against reference values a case may embed, and plain-text rendering.
//!
//! Comparison is tolerance-based. Recomputed and reference values that
//! differ by more than 0.05 percentage points are flagged as discrepancies;
//! a discrepancy is a finding to report, never an error.

use num_traits::Signed;

use crate::model::{CaseFile, FactorId, Layer};
use crate::percent::{display_signed, Percent, Rational};
use crate::scoring::{
    case_iqa, category_iqa, device_coefficients, layer_iqa, GateOutcome, IqaResult,
    LayerIqaResult, ScoringError,
};
use crate::taxonomy::InfoStatus;

/// Flagging tolerance for reference comparisons, in percentage points.
pub const TOLERANCE: Rational = Rational::new_raw(1, 20);

/// One device's computed coefficient.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DeviceResult {
    pub device_id: String,
    pub kind: String,
    pub result: IqaResult,
}

/// One status aggregate, or the reason it was skipped.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CategoryResult {
    pub status: InfoStatus,
    pub result: Option<IqaResult>,
    pub note: Option<String>,
}

/// A recomputed value next to the reference value the case embeds.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Comparison {
    pub label: String,
    pub expected: Percent,
    pub computed: Percent,
    pub flagged: bool,
}

impl Comparison {
    /// Signed difference, computed minus expected, in percentage points.
    pub fn delta(&self) -> Rational {
        self.computed.value() - self.expected.value()
    }
}

fn compare(label: impl Into<String>, expected: Percent, computed: Percent) -> Comparison {
    let mut c = Comparison {
        label: label.into(),
        expected,
        computed,
        flagged: false,
    };
    c.flagged = c.delta().abs() > TOLERANCE;
    c
}

/// Everything an assessment produced, ready for rendering and export.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AssessmentReport {
    pub case_id: String,
    pub policy: String,
    pub weighted: bool,
    pub devices: Vec<DeviceResult>,
    pub categories: Vec<CategoryResult>,
    pub layers: Vec<LayerIqaResult>,
    pub total: IqaResult,
    pub gate: Option<GateOutcome>,
    pub comparisons: Vec<Comparison>,
    pub notes: Vec<String>,
}

impl AssessmentReport {
    /// Comparisons that exceeded the tolerance.
    pub fn discrepancies(&self) -> impl Iterator<Item = &Comparison> {
        self.comparisons.iter().filter(|c| c.flagged)
    }
}

/// Computes the full report for a case under its own policy and weights.
pub fn build_report(case: &CaseFile) -> Result<AssessmentReport, ScoringError> {
    let coefficients = device_coefficients(case)?;
    let devices: Vec<DeviceResult> = coefficients
        .into_iter()
        .map(|(device_id, result)| {
            let kind = case
                .device(&device_id)
                .map(|d| d.kind().to_string())
                .unwrap_or_default();
            DeviceResult {
                device_id,
                kind,
                result,
            }
        })
        .collect();
    let total = case_iqa(case)?;

    let mut categories = Vec::new();
    for status in InfoStatus::ALL {
        match category_iqa(case, status) {
            Ok(result) => categories.push(CategoryResult {
                status,
                result: Some(result),
                note: None,
            }),
            Err(ScoringError::EmptyCategory { .. }) => categories.push(CategoryResult {
                status,
                result: None,
                note: Some(format!(
                    "skipped: no {} values recorded in this case",
                    status.describe()
                )),
            }),
            Err(other) => return Err(other),
        }
    }

    let mut layers = Vec::new();
    for layer in Layer::ALL {
        let any = case
            .devices
            .iter()
            .any(|d| d.layer_scores(layer).next().is_some());
        if any {
            layers.push(layer_iqa(case, layer)?);
        }
    }

    let mut comparisons = Vec::new();
    let mut notes = Vec::new();
    if let Some(expected) = &case.expected {
        for (device_id, reference) in &expected.per_device {
            if let Some(device) = devices.iter().find(|d| &d.device_id == device_id) {
                comparisons.push(compare(device_id.clone(), *reference, device.result.value));
            }
        }
        for category in &categories {
            if let (Some(reference), Some(result)) =
                (expected.categories.get(&category.status), &category.result)
            {
                comparisons.push(compare(
                    category.status.aggregate_label(),
                    *reference,
                    result.value,
                ));
            }
        }
        if let Some(reference) = expected.total {
            comparisons.push(compare("IQA_tot", reference, total.value));
        }

        let recorded = case.recorded_factors();
        let ghosts: Vec<FactorId> = expected
            .basis_factors
            .iter()
            .copied()
            .filter(|f| !recorded.contains(f))
            .collect();
        if !ghosts.is_empty() {
            let codes = ghosts
                .iter()
                .map(|f| f.code())
                .collect::<Vec<_>>()
                .join(", ");
            let noun = if ghosts.len() == 1 { "factor" } else { "factors" };
            notes.push(format!(
                "reference values assume {noun} {codes}, which no device in this case \
                 records; recomputed values use only the recorded factors"
            ));
        }
    }

    Ok(AssessmentReport {
        case_id: case.case_id.clone(),
        policy: case.missing_policy.name().to_string(),
        weighted: case.weights.is_some(),
        devices,
        categories,
        layers,
        total,
        gate: None,
        comparisons,
        notes,
    })
}

/// Builds a report directly from externally supplied per-device
/// coefficients, for aggregating published or third-party results.
pub fn report_from_values(
    case_id: &str,
    values: &[(String, Percent)],
) -> Result<AssessmentReport, ScoringError> {
    if values.is_empty() {
        return Err(ScoringError::EmptyCase);
    }
    let devices: Vec<DeviceResult> = values
        .iter()
        .map(|(device_id, value)| DeviceResult {
            device_id: device_id.clone(),
            kind: String::new(),
            result: IqaResult {
                value: *value,
                numerator_terms: 1,
                basis: "supplied coefficient".to_string(),
            },
        })
        .collect();
    let total = crate::percent::mean_percent(values.iter().map(|(_, v)| *v))
        .expect("values checked non-empty");
    Ok(AssessmentReport {
        case_id: case_id.to_string(),
        policy: "supplied values".to_string(),
        weighted: false,
        devices,
        categories: Vec::new(),
        layers: Vec::new(),
        total: IqaResult {
            value: total,
            numerator_terms: values.len(),
            basis: format!("mean of {} supplied device coefficients", values.len()),
        },
        gate: None,
        comparisons: Vec::new(),
        notes: Vec::new(),
    })
}

/// Renders the plain-text report.
pub fn render_report(report: &AssessmentReport) -> String {
    let mut out = String::new();
    let push = |out: &mut String, line: &str| {
        out.push_str(line);
        out.push('\n');
    };

    push(&mut out, &format!("CASE {}", report.case_id));
    push(&mut out, &format!("devices: {}", report.devices.len()));
    let weighting = if report.weighted {
        "weighted"
    } else {
        "unweighted"
    };
    push(
        &mut out,
        &format!("policy: {}, {}", report.policy, weighting),
    );

    push(&mut out, "");
    push(&mut out, "DEVICE RANKING");
    let mut ranked: Vec<&DeviceResult> = report.devices.iter().collect();
    ranked.sort_by(|a, b| {
        b.result
            .value
            .cmp(&a.result.value)
            .then_with(|| a.device_id.cmp(&b.device_id))
    });
    let any_tie = ranked
        .windows(2)
        .any(|w| w[0].result.value == w[1].result.value);
    for (i, device) in ranked.iter().enumerate() {
        let mut line = format!("  {}. {}", i + 1, device.device_id);
        if !device.kind.is_empty() {
            line.push_str(&format!(" ({})", device.kind));
        }
        line.push_str(&format!("  {}", device.result.value));
        let tied = (i > 0 && ranked[i - 1].result.value == device.result.value)
            || (i + 1 < ranked.len() && ranked[i + 1].result.value == device.result.value);
        if tied {
            line.push_str("  (tie)");
        }
        if ranked.len() >= 2 {
            if i == 0 {
                line.push_str("  <- highest");
            } else if i == ranked.len() - 1 {
                line.push_str("  <- lowest");
            }
        }
        push(&mut out, &line);
    }
    if any_tie {
        push(&mut out, "  tied coefficients are ordered by device id");
    }

    push(&mut out, "");
    push(&mut out, "STATUS AGGREGATES");
    for category in &report.categories {
        match (&category.result, &category.note) {
            (Some(result), _) => push(
                &mut out,
                &format!(
                    "  {} ({})  {}  over {} terms",
                    category.status.aggregate_label(),
                    category.status.describe(),
                    result.value,
                    result.numerator_terms
                ),
            ),
            (None, Some(note)) => push(
                &mut out,
                &format!(
                    "  {} ({})  {}",
                    category.status.aggregate_label(),
                    category.status.describe(),
                    note
                ),
            ),
            (None, None) => {}
        }
    }

    if !report.layers.is_empty() {
        push(&mut out, "");
        push(&mut out, "LAYER AGGREGATES");
        for layer in &report.layers {
            push(
                &mut out,
                &format!(
                    "  {}  raw {} over {} devices, normalized {}",
                    layer.layer,
                    display_signed(layer.raw),
                    layer.devices,
                    layer.normalized
                ),
            );
        }
    }

    push(&mut out, "");
    push(&mut out, "CASE COEFFICIENT");
    push(
        &mut out,
        &format!("  IQA_tot  {}  ({})", report.total.value, report.total.basis),
    );

    if let Some(gate) = &report.gate {
        push(&mut out, "");
        out.push_str(&render_gate(gate));
    }

    if !report.comparisons.is_empty() {
        push(&mut out, "");
        push(&mut out, "DISCREPANCIES");
        let flagged: Vec<&Comparison> = report.discrepancies().collect();
        if flagged.is_empty() {
            push(
                &mut out,
                "  all embedded reference values reproduced within tolerance 0.05",
            );
        } else {
            for c in flagged {
                push(
                    &mut out,
                    &format!(
                        "  {}  expected {}  computed {}  delta {}",
                        c.label,
                        c.expected,
                        c.computed,
                        display_signed(c.delta())
                    ),
                );
            }
        }
    }

    if !report.notes.is_empty() {
        push(&mut out, "");
        push(&mut out, "NOTES");
        for note in &report.notes {
            push(&mut out, &format!("  {note}"));
        }
    }

    out
}

/// Renders a gate outcome as a report section.
pub fn render_gate(outcome: &GateOutcome) -> String {
    let mut out = String::new();
    out.push_str("GATE\n");
    out.push_str(&format!(
        "  cutoff {} (inclusive; devices at the cutoff are retained)\n",
        crate::percent::render_exact(outcome.cutoff().value())
    ));
    out.push_str(&format!("  justification: {}\n", outcome.justification()));
    for id in outcome.retained() {
        let value = outcome.values()[id];
        out.push_str(&format!("  retained  {id}  {value}\n"));
    }
    for id in outcome.discarded() {
        let value = outcome.values()[id];
        out.push_str(&format!("  discarded  {id}  {value}\n"));
    }
    out
}
