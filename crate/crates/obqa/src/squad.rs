//! SQuAD v1.1 / v2.0 training data (`data → paragraphs → qas`).

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use obqa_core::{GoldSource, QaExample, Ynn};
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SquadVersion {
    V1_1,
    V2_0,
}

impl FromStr for SquadVersion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().trim_start_matches(['v', 'V']) {
            "1.1" | "1" => Ok(SquadVersion::V1_1),
            "2.0" | "2" => Ok(SquadVersion::V2_0),
            other => Err(format!("unknown SQuAD version `{other}` (expected v1.1 or v2.0)")),
        }
    }
}

impl fmt::Display for SquadVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SquadVersion::V1_1 => "v1.1",
            SquadVersion::V2_0 => "v2.0",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SquadError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: invalid JSON: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{file}: at {at}: {message}")]
    Schema { file: PathBuf, at: String, message: String },
}

struct Walker<'a> {
    file: &'a Path,
}

impl Walker<'_> {
    fn err(&self, at: &str, message: impl Into<String>) -> SquadError {
        SquadError::Schema { file: self.file.into(), at: at.into(), message: message.into() }
    }

    fn object<'v>(&self, v: &'v Value, at: &str) -> Result<&'v Map<String, Value>, SquadError> {
        v.as_object().ok_or_else(|| self.err(at, "expected an object"))
    }

    fn field<'v>(&self, obj: &'v Map<String, Value>, at: &str, key: &str) -> Result<&'v Value, SquadError> {
        obj.get(key).ok_or_else(|| self.err(at, format!("missing field `{key}`")))
    }

    fn array<'v>(&self, obj: &'v Map<String, Value>, at: &str, key: &str) -> Result<&'v [Value], SquadError> {
        let v = self.field(obj, at, key)?;
        v.as_array().map(Vec::as_slice).ok_or_else(|| self.err(&format!("{at}.{key}"), "expected an array"))
    }

    fn string<'v>(&self, obj: &'v Map<String, Value>, at: &str, key: &str) -> Result<&'v str, SquadError> {
        let v = self.field(obj, at, key)?;
        v.as_str().ok_or_else(|| self.err(&format!("{at}.{key}"), "expected a string"))
    }
}

/// Parses SQuAD JSON text. `file` is only used in error messages.
pub fn parse_squad(text: &str, version: SquadVersion, file: &Path) -> Result<Vec<QaExample>, SquadError> {
    let root: Value = serde_json::from_str(text).map_err(|source| SquadError::Json { path: file.into(), source })?;
    let w = Walker { file };
    let root = w.object(&root, "$")?;
    let mut out = Vec::new();
    for (a, article) in w.array(root, "$", "data")?.iter().enumerate() {
        let at = format!("data[{a}]");
        let article = w.object(article, &at)?;
        for (p, para) in w.array(article, &at, "paragraphs")?.iter().enumerate() {
            let at = format!("data[{a}].paragraphs[{p}]");
            let para = w.object(para, &at)?;
            let context = w.string(para, &at, "context")?;
            for (q, qa) in w.array(para, &at, "qas")?.iter().enumerate() {
                let at = format!("data[{a}].paragraphs[{p}].qas[{q}]");
                let qa = w.object(qa, &at)?;
                let id = w.string(qa, &at, "id")?;
                let question = w.string(qa, &at, "question")?;
                let impossible = match (version, qa.get("is_impossible")) {
                    (SquadVersion::V2_0, Some(v)) => {
                        v.as_bool().ok_or_else(|| w.err(&format!("{at}.is_impossible"), "expected a boolean"))?
                    }
                    _ => false,
                };
                let (gold_text, answer_start) = if impossible {
                    (String::new(), None)
                } else {
                    let answers = w.array(qa, &at, "answers")?;
                    let first = answers.first().ok_or_else(|| w.err(&format!("{at}.answers"), "no answers"))?;
                    let at = format!("{at}.answers[0]");
                    let first = w.object(first, &at)?;
                    let text = w.string(first, &at, "text")?;
                    let start = w
                        .field(first, &at, "answer_start")?
                        .as_u64()
                        .ok_or_else(|| w.err(&format!("{at}.answer_start"), "expected a non-negative integer"))?;
                    (text.to_string(), Some(start as usize))
                };
                out.push(QaExample {
                    question_id: id.to_string(),
                    question: question.to_string(),
                    gold_text,
                    gold_ynn: Ynn::None,
                    source: GoldSource::Context { context: context.to_string(), answer_start },
                });
            }
        }
    }
    Ok(out)
}

pub fn load_squad(path: &Path, version: SquadVersion) -> Result<Vec<QaExample>, SquadError> {
    let text = fs::read_to_string(path).map_err(|source| SquadError::Io { path: path.into(), source })?;
    parse_squad(&text, version, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"version":"1.1","data":[{"title":"t","paragraphs":[{"context":"The limit is 1 billion rows.",
        "qas":[{"id":"q1","question":"What is the limit?","answers":[{"text":"1 billion","answer_start":13}]}]}]}]}"#;

    #[test]
    fn minimal_fixture() {
        let ex = parse_squad(MINIMAL, SquadVersion::V1_1, Path::new("m.json")).unwrap();
        assert_eq!(ex.len(), 1);
        assert_eq!(ex[0].gold_text, "1 billion");
        assert_eq!(ex[0].gold_ynn, Ynn::None);
        match &ex[0].source {
            GoldSource::Context { context, answer_start } => {
                assert_eq!(&context[answer_start.unwrap()..answer_start.unwrap() + 9], "1 billion");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn v2_impossible() {
        let text = r#"{"data":[{"paragraphs":[{"context":"abc","qas":[
            {"id":"a","question":"?","answers":[],"is_impossible":true},
            {"id":"b","question":"?","answers":[{"text":"abc","answer_start":0}],"is_impossible":false}]}]}]}"#;
        let ex = parse_squad(text, SquadVersion::V2_0, Path::new("v2.json")).unwrap();
        assert_eq!(ex[0].gold_text, "");
        assert_eq!(ex[1].gold_text, "abc");
        assert!(parse_squad(text, SquadVersion::V1_1, Path::new("v2.json")).is_err());
    }

    #[test]
    fn errors_name_the_path() {
        let text = r#"{"data":[{"paragraphs":[{"context":"abc","qas":[{"id":"a","answers":[]}]}]}]}"#;
        let e = parse_squad(text, SquadVersion::V1_1, Path::new("x.json")).unwrap_err().to_string();
        assert!(e.contains("data[0].paragraphs[0].qas[0]") && e.contains("`question`"), "{e}");
        assert!(matches!(parse_squad("{", SquadVersion::V1_1, Path::new("x")), Err(SquadError::Json { .. })));
        assert_eq!("v2.0".parse::<SquadVersion>(), Ok(SquadVersion::V2_0));
        assert!("3".parse::<SquadVersion>().is_err());
    }
}
