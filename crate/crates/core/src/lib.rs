//! Information-quality assessment for IoT forensic evidence.
//!
//! Seized IoT devices yield evidence of wildly uneven quality. This crate
//! scores each device over nine quality factors (technical status, security
//! posture, cloud exposure, source reliability, legal compliance,
//! documentation access, and examiner capability), aggregates the scores
//! into percentage coefficients at case, category, and IoT-layer
//! granularity, and keeps every judgement justified and auditable.
//!
//! Arithmetic is exact throughout: factor values are integer hundredths,
//! aggregates are rationals, and rounding happens once at the display edge.
//! Serialization is canonical, so equal cases produce byte-equal documents.
//!
//! The crate is organized as:
//! - [`model`]: factors, scores, devices, cases, policies
//! - [`taxonomy`]: the fixed factor classifications and layer expansion
//! - [`scoring`]: the aggregation formulas, weighting, and the gate
//! - [`checklist`]: question-driven scoring with an ordinal rubric
//! - [`report`]: computed results, reference comparison, text rendering
//! - [`chart`]: deterministic SVG radar charts
//! - [`io`]: case files, answer files, the audit trail, CSV export

pub mod chart;
pub mod checklist;
pub mod io;
pub mod model;
pub mod percent;
pub mod report;
pub mod scoring;
pub mod taxonomy;

pub use chart::{
    case_overlay, category_overlay, device_overlay, model_overlay, render_radar, AxisValue,
    ChartError, RadarSeries, RadarSpec,
};
pub use checklist::{
    checklist_for, score_answers, Answer, AnswerLevel, ChecklistError, ChecklistTemplate,
    Response,
};
pub use io::{
    atomic_write, case_loaded_detail, export_table, gate_detail, parse_answers, parse_case,
    read_events, report_detail, score_changed_detail, score_set_detail, serialize_case,
    AnswersError, AuditAction, AuditError, AuditEvent, AuditLog, CaseFileError, Finding,
};
pub use model::{
    make_score, CaseFile, DeviceAssessment, ExpectedResults, FactorId, FactorScore, Layer,
    LayeredFactorScore, MissingPolicy, ModelError, Score, ThresholdPolicy, Weights,
};
pub use percent::{display_signed, mean_percent, parse_exact, render_exact, Percent, Rational};
pub use report::{
    build_report, render_gate, render_report, report_from_values, AssessmentReport,
    CategoryResult, Comparison, DeviceResult, TOLERANCE,
};
pub use scoring::{
    case_iqa, category_iqa, decompose, device_coefficients, device_iqa, gate, gate_values,
    layer_iqa, Decomposition, DeviceError, DeviceFailure, GateOutcome, IqaResult,
    LayerIqaResult, ScoringError,
};
pub use taxonomy::{
    category_of, expand_layers, info_status_of, Category, InfoStatus, TaxonomyTable,
};
