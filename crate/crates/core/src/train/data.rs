//! Line-delimited dataset format: `label<TAB>premise<TAB>conjecture`,
//! s-expression formulae, `#` comments.

use std::path::Path;

use crate::dag::build_dag;
use crate::parser::{alpha_normalize, parse_sexpr};

use super::{DataError, Dataset, Example, LineError};

/// Loads and compiles a dataset file. Malformed lines are collected and
/// reported together with their line numbers.
pub fn load_dataset(path: &Path) -> Result<Dataset, DataError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| DataError::Io(format!("{}: {e}", path.display())))?;
    parse_dataset(&text)
}

/// In-memory variant of [`load_dataset`].
pub fn parse_dataset(text: &str) -> Result<Dataset, DataError> {
    let mut examples = Vec::new();
    let mut errors: Vec<LineError> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        match parse_line(line) {
            Ok(example) => examples.push(example),
            Err(message) => errors.push(LineError { line: lineno, message }),
        }
    }
    if !errors.is_empty() {
        return Err(DataError::Lines(errors));
    }
    if examples.is_empty() {
        return Err(DataError::Empty);
    }
    Ok(Dataset { examples })
}

fn parse_line(line: &str) -> Result<Example, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 3 {
        return Err(format!("expected 3 tab-separated fields, found {}", fields.len()));
    }
    let label = match fields[0].trim() {
        "0" => 0u8,
        "1" => 1u8,
        other => return Err(format!("label must be 0 or 1, found `{other}`")),
    };
    let premise = compile(fields[1]).map_err(|e| format!("premise: {e}"))?;
    let conjecture = compile(fields[2]).map_err(|e| format!("conjecture: {e}"))?;
    Ok(Example {
        premise,
        conjecture,
        label,
    })
}

fn compile(src: &str) -> Result<crate::dag::FormulaDag, String> {
    let ast = parse_sexpr(src).map_err(|e| e.to_string())?;
    Ok(build_dag(&alpha_normalize(&ast)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_valid_line() {
        let data = parse_dataset("1\t(p x)\t(q x)\n").unwrap();
        assert_eq!(data.len(), 1);
        assert_eq!(data.examples[0].label, 1);
    }

    #[test]
    fn bad_label_reports_line_number() {
        let err = parse_dataset("1\t(p x)\t(q x)\n2\t(p x)\t(q x)\n").unwrap_err();
        match err {
            DataError::Lines(lines) => {
                assert_eq!(lines.len(), 1);
                assert_eq!(lines[0].line, 2);
                assert!(lines[0].message.contains("label"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn duplicates_kept() {
        let data = parse_dataset("1\t(p x)\t(q x)\n1\t(p x)\t(q x)\n").unwrap();
        assert_eq!(data.len(), 2);
    }

    #[test]
    fn comments_and_blank_lines_skipped() {
        let data = parse_dataset("# header\n\n0\tp\tq\n").unwrap();
        assert_eq!(data.len(), 1);
    }

    #[test]
    fn empty_dataset_is_an_error() {
        assert!(matches!(parse_dataset("# only a comment\n"), Err(DataError::Empty)));
    }

    #[test]
    fn parse_errors_accumulate() {
        let err = parse_dataset("1\t(p\t(q x)\nx\t(p x)\t(q x)\n").unwrap_err();
        match err {
            DataError::Lines(lines) => assert_eq!(lines.len(), 2),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
