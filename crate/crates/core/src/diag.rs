use alloc::string::String;
use core::fmt;

use crate::span::Span;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Error,
    Warning,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        }
    }
}

/// Stable diagnostic codes. Tests and tooling key on these strings.
pub mod codes {
    pub const LEXICAL: &str = "P01";
    pub const SYNTAX: &str = "P02";
    pub const DUPLICATE_INITIAL: &str = "P03";
    pub const NO_INITIAL: &str = "P04";
    pub const SHAPE: &str = "P05";

    pub const UNRESOLVED: &str = "E01";
    pub const TYPE_MISMATCH: &str = "E02";
    pub const GUARD_NOT_BOOL: &str = "E03";
    pub const UNKNOWN_STATE_OR_EVENT: &str = "E04";
    pub const UNDECLARED_CLOCK: &str = "E05";
    pub const UNKNOWN_INTERFACE: &str = "E06";
    pub const CALL_MISMATCH: &str = "E07";
    pub const BAD_ASSIGNMENT: &str = "E08";
    pub const DUPLICATE: &str = "E09";
    pub const BODY_CANNOT_FINISH: &str = "E10";
    pub const CONTRACT_SCOPE: &str = "E11";

    pub const UNREACHABLE_STATE: &str = "W01";
    pub const UNUSED_EVENT: &str = "W02";
    pub const UNCALLED_OPERATION: &str = "W03";
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: &'static str,
    pub severity: Severity,
    pub span: Span,
    pub message: String,
}

impl Diagnostic {
    pub fn error(code: &'static str, span: Span, message: impl Into<String>) -> Self {
        Diagnostic {
            code,
            severity: Severity::Error,
            span,
            message: message.into(),
        }
    }

    pub fn warning(code: &'static str, span: Span, message: impl Into<String>) -> Self {
        Diagnostic {
            code,
            severity: Severity::Warning,
            span,
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// `FILE:LINE:COL: CODE severity: message`
    pub fn display_with<'a>(&'a self, file: &'a str) -> impl fmt::Display + 'a {
        DisplayWith { diag: self, file }
    }
}

struct DisplayWith<'a> {
    diag: &'a Diagnostic,
    file: &'a str,
}

impl fmt::Display for DisplayWith<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.diag;
        write!(
            f,
            "{}:{}:{}: {} {}: {}",
            self.file,
            d.span.line,
            d.span.col,
            d.code,
            d.severity.as_str(),
            d.message
        )
    }
}

/// Sort into the canonical reporting order: span start, then code.
pub fn sort(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| {
        (a.span.start, a.code, a.span.end, &a.message).cmp(&(
            b.span.start,
            b.code,
            b.span.end,
            &b.message,
        ))
    });
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}
