//! Minimal `key = value` config text, used for column renames and scenario files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys are trimmed and
//! case-sensitive; a repeated key keeps the last value.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: expected `key = value`, got `{text}`")]
pub struct KvError {
    pub line: usize,
    pub text: String,
}

pub fn parse(text: &str) -> Result<BTreeMap<String, String>, KvError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(KvError {
                line: i + 1,
                text: line.to_string(),
            });
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(KvError {
                line: i + 1,
                text: line.to_string(),
            });
        }
        out.insert(key.to_string(), value.trim().to_string());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_skips_comments() {
        let m = parse("# renames\nproficiency = prof\n\n f2f=sessions \n").unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m["proficiency"], "prof");
        assert_eq!(m["f2f"], "sessions");
    }

    #[test]
    fn rejects_line_without_separator() {
        let err = parse("a = 1\nbogus\n").unwrap_err();
        assert_eq!(err.line, 2);
    }

    #[test]
    fn empty_value_is_allowed() {
        let m = parse("x2 =").unwrap();
        assert_eq!(m["x2"], "");
    }
}
