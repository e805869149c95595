//! Command-line front end for the forensic information-quality toolkit.
//!
//! Five subcommands cover the workflow: `validate` checks a case file,
//! `checklist` grades factor questionnaires into scores, `assess` computes
//! the coefficients and writes the report and CSV table, `gate` applies a
//! retention cutoff, and `chart` renders radar overlays. State-changing
//! commands append to a JSONL audit trail; the trail path comes from
//! `--audit-log`, the `IQA_AUDIT_LOG` environment variable, the case file's
//! own `audit_log` field, or a sibling of the case file, in that order.
//!
//! Exit codes are stable: 0 success, 2 domain or validation failure, 3 I/O
//! failure.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use iqa_core::{
    atomic_write, build_report, case_overlay, category_overlay, checklist_for, device_overlay,
    export_table, gate, gate_detail, parse_answers, parse_case, parse_exact, render_gate,
    render_radar, render_report, report_detail, score_answers, score_changed_detail,
    score_set_detail, serialize_case, Answer, AnswerLevel, AuditAction, AuditError, AuditLog,
    CaseFile, CaseFileError, FactorId, MissingPolicy, Response, Score, ThresholdPolicy, Weights,
};

const AUDIT_ENV: &str = "IQA_AUDIT_LOG";

#[derive(Parser)]
#[command(
    name = "iqa",
    version,
    about = "Information-quality assessment of IoT evidence"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a case file and list every finding
    Validate {
        /// Case file to check
        case: PathBuf,
    },
    /// Compute coefficients and write the report and CSV table
    Assess {
        /// Case file to score
        case: PathBuf,
        /// Missing-value policy override: strict, available-only, or impute-zero
        #[arg(long)]
        policy: Option<String>,
        /// JSON file mapping factor codes to weights; listed factors only
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Output directory (defaults to the case file's directory)
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        audit: AuditArgs,
    },
    /// Apply a retention cutoff to the device coefficients
    Gate {
        /// Case file to gate
        case: PathBuf,
        /// Retention cutoff in percent; devices at or above it are kept
        #[arg(long)]
        cutoff: String,
        /// Reason for discarding evidence below the cutoff
        #[arg(long)]
        justify: String,
        /// Missing-value policy override: strict, available-only, or impute-zero
        #[arg(long)]
        policy: Option<String>,
        /// JSON file mapping factor codes to weights; listed factors only
        #[arg(long)]
        weights: Option<PathBuf>,
        #[command(flatten)]
        audit: AuditArgs,
    },
    /// Render a radar chart of the case
    Chart {
        /// Case file to chart
        case: PathBuf,
        /// What to draw: devices, categories, or device:<id>
        #[arg(long, default_value = "devices")]
        view: String,
        /// Output directory (defaults to the case file's directory)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grade one factor's checklist and record the score in the case
    Checklist {
        /// Case file to update
        case: PathBuf,
        /// Device to score
        #[arg(long)]
        device: String,
        /// Factor code (DTC, DST, CS, CM, SR, PC, TDA, OT, OS)
        #[arg(long)]
        factor: String,
        /// JSON answers file; omit to answer the questions on the terminal
        #[arg(long)]
        answers: Option<PathBuf>,
        #[command(flatten)]
        audit: AuditArgs,
    },
}

#[derive(Args)]
struct AuditArgs {
    /// Audit trail path (overrides IQA_AUDIT_LOG and the case's audit_log)
    #[arg(long)]
    audit_log: Option<PathBuf>,
    /// Actor recorded in audit events
    #[arg(long, default_value = "examiner")]
    actor: String,
}

enum CmdError {
    Domain(String),
    Io(String),
}

fn domain(message: impl ToString) -> CmdError {
    CmdError::Domain(message.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError::Domain(message)) => {
            eprintln!("{message}");
            ExitCode::from(2)
        }
        Err(CmdError::Io(message)) => {
            eprintln!("{message}");
            ExitCode::from(3)
        }
    }
}

fn run(command: Command) -> Result<(), CmdError> {
    match command {
        Command::Validate { case } => cmd_validate(&case),
        Command::Assess {
            case,
            policy,
            weights,
            out,
            audit,
        } => cmd_assess(&case, policy, weights, out, &audit),
        Command::Gate {
            case,
            cutoff,
            justify,
            policy,
            weights,
            audit,
        } => cmd_gate(&case, &cutoff, &justify, policy, weights, &audit),
        Command::Chart { case, view, out } => cmd_chart(&case, &view, out),
        Command::Checklist {
            case,
            device,
            factor,
            answers,
            audit,
        } => cmd_checklist(&case, &device, &factor, answers, &audit),
    }
}

fn read_file(path: &Path) -> Result<String, CmdError> {
    fs::read_to_string(path).map_err(|e| CmdError::Io(format!("{}: {e}", path.display())))
}

fn load_case(path: &Path) -> Result<CaseFile, CmdError> {
    let text = read_file(path)?;
    parse_case(&text).map_err(|e| CmdError::Domain(render_case_error(path, &e)))
}

/// One line per finding with its locator, then a count. Syntax errors have
/// no locators and render as themselves.
fn render_case_error(path: &Path, error: &CaseFileError) -> String {
    let findings = error.findings();
    if findings.is_empty() {
        return format!("{}: {error}", path.display());
    }
    let mut lines: Vec<String> = findings
        .iter()
        .map(|f| format!("{}: {f}", path.display()))
        .collect();
    lines.push(format!("{} findings", findings.len()));
    lines.join("\n")
}

fn apply_overrides(
    case: &mut CaseFile,
    policy: Option<String>,
    weights: Option<PathBuf>,
) -> Result<(), CmdError> {
    if let Some(name) = policy {
        case.missing_policy = MissingPolicy::parse_name(&name).ok_or_else(|| {
            domain(format!(
                "unknown policy {name:?} (expected strict, available-only, or impute-zero)"
            ))
        })?;
    }
    if let Some(path) = weights {
        case.weights = Some(load_weights(&path)?);
    }
    Ok(())
}

fn load_weights(path: &Path) -> Result<Weights, CmdError> {
    let text = read_file(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| domain(format!("{}: invalid JSON: {e}", path.display())))?;
    let object = value.as_object().ok_or_else(|| {
        domain(format!(
            "{}: weights must be a JSON object mapping factor codes to weights",
            path.display()
        ))
    })?;
    let mut map = BTreeMap::new();
    for (key, weight) in object {
        let factor = FactorId::parse_code(key).ok_or_else(|| {
            domain(format!("{}: unknown factor code {key:?}", path.display()))
        })?;
        let literal = match weight {
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Number(n) => n.to_string(),
            _ => {
                return Err(domain(format!(
                    "{}: weight for {key} must be a number or numeric string",
                    path.display()
                )))
            }
        };
        let parsed = parse_exact(&literal)
            .map_err(|e| domain(format!("{}: weight for {key}: {e}", path.display())))?;
        map.insert(factor, parsed);
    }
    Weights::new(map).map_err(|e| domain(format!("{}: {e}", path.display())))
}

/// Flag, then environment, then the case's own audit_log relative to the
/// case file, then a sibling of the case file.
fn audit_path(flag: Option<PathBuf>, case_path: &Path, case: &CaseFile) -> PathBuf {
    if let Some(path) = flag {
        return path;
    }
    if let Ok(value) = std::env::var(AUDIT_ENV) {
        if !value.trim().is_empty() {
            return PathBuf::from(value);
        }
    }
    let dir = case_path.parent().unwrap_or_else(|| Path::new("."));
    if let Some(name) = &case.audit_log {
        return dir.join(name);
    }
    case_path.with_extension("audit.jsonl")
}

fn open_audit(flag: Option<PathBuf>, case_path: &Path, case: &CaseFile) -> Result<AuditLog, CmdError> {
    AuditLog::open(audit_path(flag, case_path, case)).map_err(audit_err)
}

fn audit_err(error: AuditError) -> CmdError {
    match error {
        AuditError::SinkUnavailable { .. } => CmdError::Io(error.to_string()),
        _ => CmdError::Domain(error.to_string()),
    }
}

fn output_dir(flag: Option<PathBuf>, case_path: &Path) -> Result<PathBuf, CmdError> {
    let dir = flag.unwrap_or_else(|| {
        case_path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or_else(|| Path::new("."))
            .to_path_buf()
    });
    fs::create_dir_all(&dir).map_err(|e| CmdError::Io(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<(), CmdError> {
    atomic_write(path, bytes).map_err(|e| CmdError::Io(format!("{}: {e}", path.display())))
}

fn cmd_validate(case_path: &Path) -> Result<(), CmdError> {
    load_case(case_path)?;
    println!("0 findings");
    Ok(())
}

fn cmd_assess(
    case_path: &Path,
    policy: Option<String>,
    weights: Option<PathBuf>,
    out: Option<PathBuf>,
    audit: &AuditArgs,
) -> Result<(), CmdError> {
    let mut case = load_case(case_path)?;
    apply_overrides(&mut case, policy, weights)?;
    let report = build_report(&case).map_err(|e| domain(&e))?;

    let dir = output_dir(out, case_path)?;
    let report_path = dir.join(format!("{}.report.txt", case.case_id));
    let csv_path = dir.join(format!("{}.csv", case.case_id));
    let text = render_report(&report);
    write_output(&report_path, text.as_bytes())?;
    write_output(&csv_path, export_table(&report).as_bytes())?;

    let mut log = open_audit(audit.audit_log.clone(), case_path, &case)?;
    log.append(
        &audit.actor,
        AuditAction::ReportEmitted,
        None,
        report_detail(
            &case.case_id,
            Some(report.total.value),
            &[
                report_path.display().to_string(),
                csv_path.display().to_string(),
            ],
        ),
    )
    .map_err(audit_err)?;

    print!("{text}");
    Ok(())
}

fn cmd_gate(
    case_path: &Path,
    cutoff: &str,
    justify: &str,
    policy: Option<String>,
    weights: Option<PathBuf>,
    audit: &AuditArgs,
) -> Result<(), CmdError> {
    let mut case = load_case(case_path)?;
    apply_overrides(&mut case, policy, weights)?;
    let threshold = ThresholdPolicy::parse(cutoff, justify).map_err(|e| domain(&e))?;
    let outcome = gate(&case, &threshold).map_err(|e| domain(&e))?;

    let mut log = open_audit(audit.audit_log.clone(), case_path, &case)?;
    log.append(
        &audit.actor,
        AuditAction::GateApplied,
        Some(threshold.justification()),
        gate_detail(&outcome),
    )
    .map_err(audit_err)?;

    print!("{}", render_gate(&outcome));
    Ok(())
}

fn cmd_chart(case_path: &Path, view: &str, out: Option<PathBuf>) -> Result<(), CmdError> {
    let case = load_case(case_path)?;
    let spec = match view {
        "devices" => case_overlay(&case),
        "categories" => category_overlay(&case),
        _ => match view.strip_prefix("device:") {
            Some(device_id) => device_overlay(&case, device_id),
            None => {
                return Err(domain(format!(
                    "unknown view {view:?} (expected devices, categories, or device:<id>)"
                )))
            }
        },
    }
    .map_err(|e| domain(&e))?;

    let dir = output_dir(out, case_path)?;
    let svg_path = dir.join(format!("{}-{}.svg", case.case_id, view.replace(':', "-")));
    write_output(&svg_path, render_radar(&spec).as_bytes())?;
    println!("wrote {}", svg_path.display());
    Ok(())
}

fn cmd_checklist(
    case_path: &Path,
    device_id: &str,
    factor_code: &str,
    answers: Option<PathBuf>,
    audit: &AuditArgs,
) -> Result<(), CmdError> {
    let mut case = load_case(case_path)?;
    let factor = FactorId::parse_code(&factor_code.to_ascii_uppercase()).ok_or_else(|| {
        domain(format!(
            "unknown factor {factor_code:?} (expected one of DTC, DST, CS, CM, SR, PC, TDA, OT, OS)"
        ))
    })?;
    if case.device(device_id).is_none() {
        return Err(domain(format!("unknown device {device_id:?}")));
    }

    let answer_set = match answers {
        Some(path) => parse_answers(&read_file(&path)?)
            .map_err(|e| domain(format!("{}: {e}", path.display())))?,
        None => prompt_answers(factor)?,
    };
    let score = score_answers(factor, &answer_set).map_err(|e| domain(&e))?;
    let value = score.value().to_string();
    let justification = score.justification().to_string();

    let replaced = case
        .device_mut(device_id)
        .expect("device presence checked above")
        .insert_score(score);
    write_output(case_path, serialize_case(&case).as_bytes())?;

    let mut log = open_audit(audit.audit_log.clone(), case_path, &case)?;
    match &replaced {
        Some(old) => log
            .append(
                &audit.actor,
                AuditAction::ScoreChanged,
                Some(&justification),
                score_changed_detail(device_id, factor.code(), &old.value().to_string(), &value),
            )
            .map_err(audit_err)?,
        None => log
            .append(
                &audit.actor,
                AuditAction::ScoreSet,
                Some(&justification),
                score_set_detail(device_id, factor.code(), &value),
            )
            .map_err(audit_err)?,
    };

    match replaced {
        Some(old) => println!(
            "recorded {} = {value} for {device_id} (was {})",
            factor.code(),
            old.value()
        ),
        None => println!("recorded {} = {value} for {device_id}", factor.code()),
    }
    Ok(())
}

/// Sequential question-and-answer entry on the terminal. Each question takes
/// a rubric level or a direct value, then a supporting note.
fn prompt_answers(factor: FactorId) -> Result<Vec<Answer>, CmdError> {
    let template = checklist_for(factor);
    let stdin = io::stdin();
    let mut lines = stdin.lock().lines();
    let mut next_line = |prompt: &str| -> Result<String, CmdError> {
        print!("{prompt}");
        io::stdout()
            .flush()
            .map_err(|e| CmdError::Io(e.to_string()))?;
        match lines.next() {
            Some(Ok(line)) => Ok(line.trim().to_string()),
            Some(Err(e)) => Err(CmdError::Io(e.to_string())),
            None => Err(domain(
                "input ended before every question was answered".to_string(),
            )),
        }
    };

    let mut answers = Vec::with_capacity(template.len());
    for (index, question) in template.questions().iter().enumerate() {
        println!(
            "{} question {} of {}: {question}",
            factor.code(),
            index + 1,
            template.len()
        );
        let text = next_line("answer (no, poor, partial, good, full, or a value like 0.75): ")?;
        let response = match AnswerLevel::parse_name(&text) {
            Some(level) => Response::Level(level),
            None => Response::Numeric(Score::parse(&text).map_err(|_| {
                domain(format!(
                    "question {}: {text:?} is neither a rubric level nor a value",
                    index + 1
                ))
            })?),
        };
        let note = next_line("note: ")?;
        if note.is_empty() {
            return Err(domain(format!(
                "question {}: a supporting note is required",
                index + 1
            )));
        }
        answers.push(Answer {
            question: index,
            response,
            note,
        });
    }
    Ok(answers)
}
