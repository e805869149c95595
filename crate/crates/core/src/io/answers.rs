//! Parsing of checklist answer files.
//!
//! An answer file is a JSON array of objects with a one-based `question`
//! number, exactly one of `level` or `value`, and a free-text `note`.

use serde_json::Value;
use thiserror::Error;

use crate::checklist::{Answer, AnswerLevel, Response};
use crate::model::Score;

#[derive(Error, Clone, PartialEq, Eq, Debug)]
pub enum AnswersError {
    #[error("invalid JSON: {0}")]
    Syntax(String),
    #[error("answer {index}: {message}")]
    Invalid { index: usize, message: String },
}

fn invalid(index: usize, message: impl Into<String>) -> AnswersError {
    AnswersError::Invalid {
        index,
        message: message.into(),
    }
}

/// Parses an answer file. Question numbers are one-based in the file and
/// converted to zero-based slots.
pub fn parse_answers(text: &str) -> Result<Vec<Answer>, AnswersError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| AnswersError::Syntax(e.to_string()))?;
    let items = value
        .as_array()
        .ok_or_else(|| AnswersError::Syntax("expected a JSON array of answers".to_string()))?;

    let mut answers = Vec::with_capacity(items.len());
    for (index, item) in items.iter().enumerate() {
        let obj = item
            .as_object()
            .ok_or_else(|| invalid(index, "must be an object"))?;
        for key in obj.keys() {
            if !["question", "level", "value", "note"].contains(&key.as_str()) {
                return Err(invalid(index, format!("unknown field {key:?}")));
            }
        }

        let question = obj
            .get("question")
            .and_then(Value::as_u64)
            .ok_or_else(|| invalid(index, "question must be a positive integer"))?;
        if question == 0 {
            return Err(invalid(index, "question numbers are one-based"));
        }

        let response = match (obj.get("level"), obj.get("value")) {
            (Some(_), Some(_)) => {
                return Err(invalid(index, "give either level or value, not both"))
            }
            (None, None) => return Err(invalid(index, "missing level or value")),
            (Some(level), None) => {
                let name = level
                    .as_str()
                    .ok_or_else(|| invalid(index, "level must be a string"))?;
                let level = AnswerLevel::parse_name(name).ok_or_else(|| {
                    invalid(
                        index,
                        format!("unknown level {name:?} (expected no, poor, partial, good, or full)"),
                    )
                })?;
                Response::Level(level)
            }
            (None, Some(value)) => {
                let text = match value {
                    Value::String(s) => s.clone(),
                    Value::Number(n) => n.to_string(),
                    _ => return Err(invalid(index, "value must be a string or number")),
                };
                let score =
                    Score::parse(&text).map_err(|e| invalid(index, e.to_string()))?;
                Response::Numeric(score)
            }
        };

        let note = obj
            .get("note")
            .and_then(Value::as_str)
            .ok_or_else(|| invalid(index, "note must be a string"))?;
        if note.trim().is_empty() {
            return Err(invalid(index, "note must not be empty"));
        }

        answers.push(Answer {
            question: (question - 1) as usize,
            response,
            note: note.to_string(),
        });
    }
    Ok(answers)
}
