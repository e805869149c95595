//! Factor checklists: the question set behind each factor and the rubric
//! that turns graded answers into a score.
//!
//! Answers are either one of five ordinal levels or a direct numeric value.
//! The rubric averages the per-question values and rounds half-up to
//! hundredths; the per-question notes concatenate into the justification of
//! the resulting score, so a checklist-built score always explains itself.

use std::fmt;

use thiserror::Error;

use crate::model::{FactorId, FactorScore, ModelError, Score};
use crate::percent::{round_half_up, Rational};

/// Ordinal answer, worst to best. The numeric values are the quarter marks
/// of the unit interval.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum AnswerLevel {
    No,
    Poor,
    Partial,
    Good,
    Full,
}

impl AnswerLevel {
    pub const ALL: [AnswerLevel; 5] = [
        AnswerLevel::No,
        AnswerLevel::Poor,
        AnswerLevel::Partial,
        AnswerLevel::Good,
        AnswerLevel::Full,
    ];

    /// Hundredths of the unit interval: 0, 25, 50, 75, 100.
    pub fn hundredths(self) -> u8 {
        match self {
            AnswerLevel::No => 0,
            AnswerLevel::Poor => 25,
            AnswerLevel::Partial => 50,
            AnswerLevel::Good => 75,
            AnswerLevel::Full => 100,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AnswerLevel::No => "no",
            AnswerLevel::Poor => "poor",
            AnswerLevel::Partial => "partial",
            AnswerLevel::Good => "good",
            AnswerLevel::Full => "full",
        }
    }

    pub fn parse_name(text: &str) -> Option<AnswerLevel> {
        AnswerLevel::ALL.into_iter().find(|l| l.name() == text)
    }
}

impl fmt::Display for AnswerLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What the examiner answered: a rubric level or a direct value.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Response {
    Level(AnswerLevel),
    Numeric(Score),
}

impl Response {
    fn hundredths(self) -> u8 {
        match self {
            Response::Level(level) => level.hundredths(),
            Response::Numeric(score) => score.hundredths(),
        }
    }
}

/// One answered question. `question` indexes into the factor's template.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Answer {
    pub question: usize,
    pub response: Response,
    pub note: String,
}

/// The question set for one factor.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ChecklistTemplate {
    factor: FactorId,
    questions: &'static [&'static str],
}

impl ChecklistTemplate {
    pub fn factor(&self) -> FactorId {
        self.factor
    }

    pub fn questions(&self) -> &'static [&'static str] {
        self.questions
    }

    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }
}

/// The question set behind one factor's evaluation.
pub fn checklist_for(factor: FactorId) -> ChecklistTemplate {
    let questions: &'static [&'static str] = match factor {
        FactorId::Dtc => &[
            "What is the technical status of the hardware part of the system?",
            "Is the software part of the system updated to the latest release?",
        ],
        FactorId::Dst => &[
            "Is the hardware set up, wired, and maintained according to the security rules of current best practice?",
            "Is the software managing the system provided with proper and up-to-date malware protection?",
            "Are accesses to the system properly logged?",
        ],
        FactorId::Cs => &[
            "Is information about the channel through which the data are relayed easily obtained?",
            "Is the entity from which the data originate certified and reliable?",
        ],
        FactorId::Cm => &[
            "Are raw data kept, even briefly, in a repository that some third party could fully or partially access?",
        ],
        FactorId::Sr => &[
            "Does the observer possess, or can they obtain, additional information about the source where the data originate?",
        ],
        FactorId::Pc => &[
            "Are the acquired records and their metadata saved and preserved following current data-protection precepts?",
        ],
        FactorId::Tda => &[
            "Are technical specifications for the device and the format of the obtained data easily available, or provided directly by the data owner?",
        ],
        FactorId::Ot => &[
            "Has the observer recently been recognized as a valuable operator in the field?",
        ],
        FactorId::Os => &[
            "What is the expertise of the observer as a digital forensics investigator?",
        ],
    };
    ChecklistTemplate { factor, questions }
}

/// Ways a graded answer set can fail to match its template.
#[derive(Error, Clone, PartialEq, Eq, Debug)]
pub enum ChecklistError {
    #[error("unanswered questions: {}", .missing.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(", "))]
    IncompleteAnswers { missing: Vec<usize> },
    #[error("answer references question {} but the checklist has {available}", .index + 1)]
    UnknownQuestion { index: usize, available: usize },
    #[error("question {} answered more than once", .index + 1)]
    DuplicateAnswer { index: usize },
    #[error("answer to question {} carries no note", .index + 1)]
    EmptyNote { index: usize },
    #[error(transparent)]
    InvalidScore(#[from] ModelError),
}

/// Grades a complete answer set against the factor's template.
///
/// The score is the mean of the per-question values rounded half-up to
/// hundredths. The justification is the numbered concatenation of the
/// notes; provenance records the checklist origin.
pub fn score_answers(factor: FactorId, answers: &[Answer]) -> Result<FactorScore, ChecklistError> {
    let template = checklist_for(factor);
    let mut slots: Vec<Option<&Answer>> = vec![None; template.len()];
    for answer in answers {
        if answer.question >= template.len() {
            return Err(ChecklistError::UnknownQuestion {
                index: answer.question,
                available: template.len(),
            });
        }
        if slots[answer.question].is_some() {
            return Err(ChecklistError::DuplicateAnswer {
                index: answer.question,
            });
        }
        if answer.note.trim().is_empty() {
            return Err(ChecklistError::EmptyNote {
                index: answer.question,
            });
        }
        slots[answer.question] = Some(answer);
    }
    let missing: Vec<usize> = slots
        .iter()
        .enumerate()
        .filter(|(_, slot)| slot.is_none())
        .map(|(i, _)| i)
        .collect();
    if !missing.is_empty() {
        return Err(ChecklistError::IncompleteAnswers { missing });
    }
    let answers: Vec<&Answer> = slots.into_iter().map(|s| s.unwrap()).collect();
    let sum: i128 = answers
        .iter()
        .map(|a| a.response.hundredths() as i128)
        .sum();
    let mean = Rational::new(sum, answers.len() as i128);
    let value = Score::from_hundredths(round_half_up(mean) as u8)?;
    let justification = answers
        .iter()
        .enumerate()
        .map(|(i, a)| format!("{}: {}", i + 1, a.note.trim()))
        .collect::<Vec<_>>()
        .join("; ");
    Ok(FactorScore::new(
        factor,
        value,
        justification,
        format!("checklist:{}", factor.code()),
    )?)
}
