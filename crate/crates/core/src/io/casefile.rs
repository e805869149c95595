//! Case-file parsing and canonical serialization.
//!
//! Parsing walks the JSON document and aggregates every finding with a path
//! locator instead of stopping at the first problem; a case either parses
//! completely or not at all. Serialization is canonical: equal cases yield
//! byte-equal documents, and parsing a canonical document and serializing it
//! again reproduces the input bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde_json::{Map, Value};
use thiserror::Error;

use crate::model::{
    CaseFile, DeviceAssessment, ExpectedResults, FactorId, FactorScore, Layer,
    LayeredFactorScore, MissingPolicy, Score, ThresholdPolicy, Weights,
};
use crate::percent::{parse_exact, Percent, Rational};
use crate::taxonomy::InfoStatus;

/// One problem, located by a dotted path into the document.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Finding {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn summarize(findings: &[Finding]) -> String {
    findings
        .iter()
        .map(Finding::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Why a document was rejected. `Schema` covers structural problems
/// (missing or mistyped fields, unknown versions), `Validation` covers
/// domain violations in an otherwise well-shaped document. Both carry the
/// complete finding list.
#[derive(Error, Clone, PartialEq, Eq, Debug)]
pub enum CaseFileError {
    #[error("invalid JSON: {0}")]
    Syntax(String),
    #[error("{}", summarize(.findings))]
    Schema { findings: Vec<Finding> },
    #[error("{}", summarize(.findings))]
    Validation { findings: Vec<Finding> },
}

impl CaseFileError {
    pub fn findings(&self) -> &[Finding] {
        match self {
            CaseFileError::Syntax(_) => &[],
            CaseFileError::Schema { findings } | CaseFileError::Validation { findings } => {
                findings
            }
        }
    }
}

#[derive(Default)]
struct Ctx {
    findings: Vec<Finding>,
    structural: bool,
}

impl Ctx {
    fn schema(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.structural = true;
        self.findings.push(Finding {
            path: path.into(),
            message: message.into(),
        });
    }

    fn invalid(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.findings.push(Finding {
            path: path.into(),
            message: message.into(),
        });
    }
}

/// Parses and validates a case document, reporting every finding at once.
pub fn parse_case(text: &str) -> Result<CaseFile, CaseFileError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| CaseFileError::Syntax(e.to_string()))?;
    let mut ctx = Ctx::default();
    let case = walk_case(&value, &mut ctx);
    if ctx.findings.is_empty() {
        Ok(case.expect("no findings implies a fully built case"))
    } else if ctx.structural {
        Err(CaseFileError::Schema {
            findings: ctx.findings,
        })
    } else {
        Err(CaseFileError::Validation {
            findings: ctx.findings,
        })
    }
}

/// Canonical serialization: two-space pretty JSON, fields in declaration
/// order, maps in canonical key order, scores always two decimals, one
/// trailing newline.
pub fn serialize_case(case: &CaseFile) -> String {
    let mut text = serde_json::to_string_pretty(case).expect("case serialization is infallible");
    text.push('\n');
    text
}

/// A string or a number, taken as its literal text.
fn literal(value: &Value) -> Option<String> {
    match value {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn check_known_keys(obj: &Map<String, Value>, known: &[&str], path: &str, ctx: &mut Ctx) {
    for key in obj.keys() {
        if !known.contains(&key.as_str()) {
            ctx.schema(join(path, key), "unknown field");
        }
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn walk_case(value: &Value, ctx: &mut Ctx) -> Option<CaseFile> {
    let obj = match value.as_object() {
        Some(obj) => obj,
        None => {
            ctx.schema("$", "document must be a JSON object");
            return None;
        }
    };
    check_known_keys(
        obj,
        &[
            "schema_version",
            "case_id",
            "missing_policy",
            "devices",
            "weights",
            "threshold",
            "expected",
            "audit_log",
        ],
        "",
        ctx,
    );

    let schema_version = match obj.get("schema_version") {
        None => {
            ctx.schema("schema_version", "missing required field");
            None
        }
        Some(Value::Number(n)) => match n.as_u64() {
            Some(1) => Some(1u32),
            Some(other) => {
                ctx.schema(
                    "schema_version",
                    format!("unsupported schema version {other} (supported: 1)"),
                );
                None
            }
            None => {
                ctx.schema("schema_version", "must be a nonnegative integer");
                None
            }
        },
        Some(_) => {
            ctx.schema("schema_version", "must be a nonnegative integer");
            None
        }
    };

    let case_id = match obj.get("case_id") {
        None => {
            ctx.schema("case_id", "missing required field");
            None
        }
        Some(Value::String(s)) if !s.trim().is_empty() => Some(s.clone()),
        Some(Value::String(_)) => {
            ctx.invalid("case_id", "must not be empty");
            None
        }
        Some(_) => {
            ctx.schema("case_id", "must be a string");
            None
        }
    };

    let missing_policy = match obj.get("missing_policy") {
        None => Some(MissingPolicy::default()),
        Some(Value::String(s)) => match MissingPolicy::parse_name(s) {
            Some(policy) => Some(policy),
            None => {
                ctx.invalid(
                    "missing_policy",
                    format!(
                        "unknown policy {s:?} (expected strict, available_only, or impute_zero)"
                    ),
                );
                None
            }
        },
        Some(_) => {
            ctx.schema("missing_policy", "must be a string");
            None
        }
    };

    let devices = match obj.get("devices") {
        None => {
            ctx.schema("devices", "missing required field");
            None
        }
        Some(Value::Array(items)) => {
            let mut out = Vec::with_capacity(items.len());
            let mut complete = true;
            let mut seen: BTreeSet<String> = BTreeSet::new();
            for (i, item) in items.iter().enumerate() {
                let path = format!("devices[{i}]");
                // Duplicate ids are checked on the raw document so they are
                // reported even when the device has other findings.
                if let Some(id) = item.get("device_id").and_then(Value::as_str) {
                    if !id.trim().is_empty() && !seen.insert(id.to_string()) {
                        ctx.invalid(
                            format!("{path}.device_id"),
                            format!("duplicate device id {id:?}"),
                        );
                        complete = false;
                    }
                }
                match walk_device(item, &path, ctx) {
                    Some(device) => out.push(device),
                    None => complete = false,
                }
            }
            complete.then_some(out)
        }
        Some(_) => {
            ctx.schema("devices", "must be an array");
            None
        }
    };

    let weights = obj.get("weights").and_then(|v| walk_weights(v, ctx));
    let threshold = obj.get("threshold").and_then(|v| walk_threshold(v, ctx));
    let expected = obj.get("expected").and_then(|v| walk_expected(v, ctx));

    if let (Some(devices), Some(expected)) = (&devices, &expected) {
        for id in expected.per_device.keys() {
            if !devices.iter().any(|d| d.device_id() == id) {
                ctx.invalid(
                    format!("expected.per_device.{id}"),
                    "references a device id the case does not contain",
                );
            }
        }
    }

    let audit_log = match obj.get("audit_log") {
        None => None,
        Some(Value::String(s)) if !s.trim().is_empty() => Some(s.clone()),
        Some(Value::String(_)) => {
            ctx.invalid("audit_log", "must not be empty");
            None
        }
        Some(_) => {
            ctx.schema("audit_log", "must be a string");
            None
        }
    };

    Some(CaseFile {
        schema_version: schema_version?,
        case_id: case_id?,
        missing_policy: missing_policy?,
        devices: devices?,
        weights,
        threshold,
        expected,
        audit_log,
    })
}

fn walk_device(value: &Value, path: &str, ctx: &mut Ctx) -> Option<DeviceAssessment> {
    let obj = match value.as_object() {
        Some(obj) => obj,
        None => {
            ctx.schema(path, "must be an object");
            return None;
        }
    };
    check_known_keys(
        obj,
        &["device_id", "kind", "scores", "layered_scores"],
        path,
        ctx,
    );

    let device_id = match obj.get("device_id") {
        None => {
            ctx.schema(join(path, "device_id"), "missing required field");
            None
        }
        Some(Value::String(s)) if !s.trim().is_empty() => Some(s.clone()),
        Some(Value::String(_)) => {
            ctx.invalid(join(path, "device_id"), "must not be empty");
            None
        }
        Some(_) => {
            ctx.schema(join(path, "device_id"), "must be a string");
            None
        }
    };

    let kind = match obj.get("kind") {
        None => {
            ctx.schema(join(path, "kind"), "missing required field");
            None
        }
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => {
            ctx.schema(join(path, "kind"), "must be a string");
            None
        }
    };

    let mut device = DeviceAssessment::new(device_id?, kind?).ok()?;
    let mut complete = true;

    if let Some(scores) = obj.get("scores") {
        match scores.as_object() {
            Some(cells) => {
                for (code, cell) in cells {
                    let cell_path = format!("{path}.scores.{code}");
                    let factor = match FactorId::parse_code(code) {
                        Some(f) => f,
                        None => {
                            ctx.invalid(&cell_path, "unknown factor code");
                            complete = false;
                            continue;
                        }
                    };
                    match walk_cell(cell, &cell_path, ctx) {
                        Some((value, justification, provenance)) => {
                            device.insert_score(
                                FactorScore::new(factor, value, justification, provenance)
                                    .expect("cell walker rejects blank justifications"),
                            );
                        }
                        None => complete = false,
                    }
                }
            }
            None => {
                ctx.schema(join(path, "scores"), "must be an object");
                complete = false;
            }
        }
    }

    if let Some(layered) = obj.get("layered_scores") {
        match layered.as_object() {
            Some(factors) => {
                for (code, layers) in factors {
                    let factor_path = format!("{path}.layered_scores.{code}");
                    let factor = match FactorId::parse_code(code) {
                        Some(f) => f,
                        None => {
                            ctx.invalid(&factor_path, "unknown factor code");
                            complete = false;
                            continue;
                        }
                    };
                    let cells = match layers.as_object() {
                        Some(cells) => cells,
                        None => {
                            ctx.schema(&factor_path, "must be an object keyed by layer");
                            complete = false;
                            continue;
                        }
                    };
                    for (layer_name, cell) in cells {
                        let cell_path = format!("{factor_path}.{layer_name}");
                        let layer = match Layer::parse_name(layer_name) {
                            Some(l) => l,
                            None => {
                                ctx.invalid(
                                    &cell_path,
                                    "unknown layer (expected physical, network, or application)",
                                );
                                complete = false;
                                continue;
                            }
                        };
                        match walk_cell(cell, &cell_path, ctx) {
                            Some((value, justification, provenance)) => {
                                device.insert_layered(
                                    LayeredFactorScore::new(
                                        factor,
                                        layer,
                                        value,
                                        justification,
                                        provenance,
                                    )
                                    .expect("cell walker rejects blank justifications"),
                                );
                            }
                            None => complete = false,
                        }
                    }
                }
            }
            None => {
                ctx.schema(join(path, "layered_scores"), "must be an object");
                complete = false;
            }
        }
    }

    complete.then_some(device)
}

fn walk_cell(value: &Value, path: &str, ctx: &mut Ctx) -> Option<(Score, String, String)> {
    let obj = match value.as_object() {
        Some(obj) => obj,
        None => {
            ctx.schema(path, "must be an object");
            return None;
        }
    };
    check_known_keys(obj, &["value", "justification", "provenance"], path, ctx);

    let score = match obj.get("value") {
        None => {
            ctx.schema(join(path, "value"), "missing required field");
            None
        }
        Some(v) => match literal(v) {
            Some(text) => match Score::parse(&text) {
                Ok(score) => Some(score),
                Err(e) => {
                    ctx.invalid(join(path, "value"), e.to_string());
                    None
                }
            },
            None => {
                ctx.schema(join(path, "value"), "must be a string or number");
                None
            }
        },
    };

    let justification = match obj.get("justification") {
        None => {
            ctx.schema(join(path, "justification"), "missing required field");
            None
        }
        Some(Value::String(s)) if !s.trim().is_empty() => Some(s.clone()),
        Some(Value::String(_)) => {
            ctx.invalid(join(path, "justification"), "must not be empty");
            None
        }
        Some(_) => {
            ctx.schema(join(path, "justification"), "must be a string");
            None
        }
    };

    let provenance = match obj.get("provenance") {
        None => {
            ctx.schema(join(path, "provenance"), "missing required field");
            None
        }
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => {
            ctx.schema(join(path, "provenance"), "must be a string");
            None
        }
    };

    Some((score?, justification?, provenance?))
}

fn walk_weights(value: &Value, ctx: &mut Ctx) -> Option<Weights> {
    let obj = match value.as_object() {
        Some(obj) => obj,
        None => {
            ctx.schema("weights", "must be an object");
            return None;
        }
    };
    let mut map: BTreeMap<FactorId, Rational> = BTreeMap::new();
    let mut complete = true;
    for (code, weight) in obj {
        let path = format!("weights.{code}");
        let factor = match FactorId::parse_code(code) {
            Some(f) => f,
            None => {
                ctx.invalid(&path, "unknown factor code");
                complete = false;
                continue;
            }
        };
        let text = match literal(weight) {
            Some(text) => text,
            None => {
                ctx.schema(&path, "must be a string or number");
                complete = false;
                continue;
            }
        };
        match parse_exact(&text) {
            Ok(w) => {
                map.insert(factor, w);
            }
            Err(e) => {
                ctx.invalid(&path, e.to_string());
                complete = false;
            }
        }
    }
    if !complete {
        return None;
    }
    match Weights::new(map) {
        Ok(weights) => Some(weights),
        Err(e) => {
            ctx.invalid("weights", e.to_string());
            None
        }
    }
}

fn walk_threshold(value: &Value, ctx: &mut Ctx) -> Option<ThresholdPolicy> {
    let obj = match value.as_object() {
        Some(obj) => obj,
        None => {
            ctx.schema("threshold", "must be an object");
            return None;
        }
    };
    check_known_keys(obj, &["cutoff", "justification"], "threshold", ctx);
    let cutoff = match obj.get("cutoff") {
        None => {
            ctx.schema("threshold.cutoff", "missing required field");
            None
        }
        Some(v) => match literal(v) {
            Some(text) => match Percent::parse(&text) {
                Ok(p) => Some(p),
                Err(e) => {
                    ctx.invalid("threshold.cutoff", e.to_string());
                    None
                }
            },
            None => {
                ctx.schema("threshold.cutoff", "must be a string or number");
                None
            }
        },
    };
    let justification = match obj.get("justification") {
        None => {
            ctx.schema("threshold.justification", "missing required field");
            None
        }
        Some(Value::String(s)) if !s.trim().is_empty() => Some(s.clone()),
        Some(Value::String(_)) => {
            ctx.invalid("threshold.justification", "must not be empty");
            None
        }
        Some(_) => {
            ctx.schema("threshold.justification", "must be a string");
            None
        }
    };
    ThresholdPolicy::new(cutoff?, justification?).ok()
}

fn walk_percent(value: &Value, path: &str, ctx: &mut Ctx) -> Option<Percent> {
    match literal(value) {
        Some(text) => match Percent::parse(&text) {
            Ok(p) => Some(p),
            Err(e) => {
                ctx.invalid(path, e.to_string());
                None
            }
        },
        None => {
            ctx.schema(path, "must be a string or number");
            None
        }
    }
}

fn walk_expected(value: &Value, ctx: &mut Ctx) -> Option<ExpectedResults> {
    let obj = match value.as_object() {
        Some(obj) => obj,
        None => {
            ctx.schema("expected", "must be an object");
            return None;
        }
    };
    check_known_keys(
        obj,
        &["basis_factors", "per_device", "categories", "total"],
        "expected",
        ctx,
    );
    let mut complete = true;

    let basis_factors = match obj.get("basis_factors") {
        None => {
            ctx.schema("expected.basis_factors", "missing required field");
            None
        }
        Some(Value::Array(items)) => {
            let mut out = Vec::new();
            let mut seen = BTreeSet::new();
            let mut ok = true;
            for (i, item) in items.iter().enumerate() {
                let path = format!("expected.basis_factors[{i}]");
                match item.as_str().and_then(FactorId::parse_code) {
                    Some(factor) => {
                        if !seen.insert(factor) {
                            ctx.invalid(&path, format!("duplicate factor {factor}"));
                            ok = false;
                        } else {
                            out.push(factor);
                        }
                    }
                    None => {
                        ctx.invalid(&path, "unknown factor code");
                        ok = false;
                    }
                }
            }
            if out.is_empty() && ok {
                ctx.invalid("expected.basis_factors", "must not be empty");
                ok = false;
            }
            ok.then_some(out)
        }
        Some(_) => {
            ctx.schema("expected.basis_factors", "must be an array of factor codes");
            None
        }
    };

    let mut per_device = BTreeMap::new();
    if let Some(value) = obj.get("per_device") {
        match value.as_object() {
            Some(entries) => {
                for (id, v) in entries {
                    let path = format!("expected.per_device.{id}");
                    match walk_percent(v, &path, ctx) {
                        Some(p) => {
                            per_device.insert(id.clone(), p);
                        }
                        None => complete = false,
                    }
                }
            }
            None => {
                ctx.schema("expected.per_device", "must be an object");
                complete = false;
            }
        }
    }

    let mut categories = BTreeMap::new();
    if let Some(value) = obj.get("categories") {
        match value.as_object() {
            Some(entries) => {
                for (name, v) in entries {
                    let path = format!("expected.categories.{name}");
                    match InfoStatus::parse_name(name) {
                        Some(status) => match walk_percent(v, &path, ctx) {
                            Some(p) => {
                                categories.insert(status, p);
                            }
                            None => complete = false,
                        },
                        None => {
                            ctx.invalid(
                                &path,
                                "unknown status (expected as_reality, about_reality, or for_reality)",
                            );
                            complete = false;
                        }
                    }
                }
            }
            None => {
                ctx.schema("expected.categories", "must be an object");
                complete = false;
            }
        }
    }

    let total = match obj.get("total") {
        None => None,
        Some(v) => match walk_percent(v, "expected.total", ctx) {
            Some(p) => Some(p),
            None => {
                complete = false;
                None
            }
        },
    };

    if !complete {
        return None;
    }
    Some(ExpectedResults {
        basis_factors: basis_factors?,
        per_device,
        categories,
        total,
    })
}
