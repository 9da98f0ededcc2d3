//! Diagnostic output: `FILE:LINE:COL: CODE severity: message` lines, or a
//! JSON array of `{code, severity, file, line, col, endLine, endCol, message}`.

use serde::Serialize;
use smforge_core::Diagnostic;

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct DiagJson<'a> {
    code: &'a str,
    severity: &'a str,
    file: &'a str,
    line: u32,
    col: u32,
    end_line: u32,
    end_col: u32,
    message: &'a str,
}

pub fn to_text(file: &str, diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| format!("{}\n", d.display_with(file)))
        .collect()
}

pub fn to_json(file: &str, diags: &[Diagnostic]) -> String {
    let rows: Vec<DiagJson<'_>> = diags
        .iter()
        .map(|d| DiagJson {
            code: d.code,
            severity: d.severity.as_str(),
            file,
            line: d.span.line,
            col: d.span.col,
            end_line: d.span.end_line,
            end_col: d.span.end_col,
            message: &d.message,
        })
        .collect();
    serde_json::to_string(&rows).expect("diagnostics serialize") + "\n"
}
