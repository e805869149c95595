//! File formats: case documents, checklist answer files, the audit trail,
//! and tabular export.

pub mod answers;
pub mod audit;
pub mod casefile;
pub mod export;

pub use answers::{parse_answers, AnswersError};
pub use audit::{
    case_loaded_detail, gate_detail, read_events, report_detail, score_changed_detail,
    score_set_detail, AuditAction, AuditError, AuditEvent, AuditLog,
};
pub use casefile::{parse_case, serialize_case, CaseFileError, Finding};
pub use export::export_table;

use std::fs;
use std::io::Write;
use std::path::Path;

/// Writes a file via a temporary sibling and rename, so readers never see a
/// half-written document.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidInput, "path has no file name"))?;
    let mut tmp_name = file_name.to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)
}
