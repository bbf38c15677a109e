//! Line-delimited corpus files.
//!
//! Line 1 is the inventory header `{"labels": [...], "no_relation": name}`.
//! Every following non-blank line is one mention:
//! `{"tokens": [...], "e1": [s, e], "e2": [s, e], "relation": name | null}`
//! with 0-based half-open spans.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{is_marker, Corpus, LabelInventory, RelationMention, Span};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    labels: Vec<String>,
    no_relation: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    tokens: Vec<String>,
    e1: [usize; 2],
    e2: [usize; 2],
    relation: Option<String>,
}

pub fn parse_corpus(text: &str) -> Result<Corpus> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header_line) = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or_else(|| Error::parse(1, "missing inventory header"))?;
    let header: Header = serde_json::from_str(header_line)
        .map_err(|e| Error::parse(1, format!("bad inventory header: {e}")))?;
    let inventory = LabelInventory::new(header.labels, &header.no_relation)
        .map_err(|e| Error::parse(1, e.to_string()))?;

    let mut mentions = Vec::new();
    for (line_no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record =
            serde_json::from_str(line).map_err(|e| Error::parse(line_no, e.to_string()))?;
        let index = mentions.len();
        if let Some(t) = rec.tokens.iter().find(|t| is_marker(t)) {
            return Err(Error::parse(
                line_no,
                format!("reserved marker token `{t}` used as an ordinary token"),
            ));
        }
        let gold = match rec.relation {
            None => None,
            Some(name) => Some(
                inventory
                    .id_of(&name)
                    .ok_or_else(|| Error::parse(line_no, format!("unknown relation `{name}`")))?,
            ),
        };
        let mention = RelationMention::new(
            rec.tokens,
            Span::new(rec.e1[0], rec.e1[1]),
            Span::new(rec.e2[0], rec.e2[1]),
            gold,
        )
        .map_err(|e| match e {
            Error::SpanOutOfBounds { message, .. } => Error::SpanOutOfBounds { index, message },
            other => other,
        })?;
        mentions.push(mention);
    }
    Corpus::new(inventory, mentions)
}

pub fn render_corpus(corpus: &Corpus) -> String {
    let inv = corpus.inventory();
    let header = Header {
        labels: inv.names().to_vec(),
        no_relation: inv.name(inv.no_relation()).to_string(),
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for m in corpus.mentions() {
        let rec = Record {
            tokens: m.tokens().to_vec(),
            e1: [m.e1().start, m.e1().end],
            e2: [m.e2().start, m.e2().end],
            relation: m.gold().map(|g| inv.name(g).to_string()),
        };
        let _ = writeln!(out, "{}", serde_json::to_string(&rec).expect("record serializes"));
    }
    out
}

pub fn read_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text).map_err(|e| e.with_path(path))
}

pub fn write_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, render_corpus(corpus)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, PresetName};

    const HEADER: &str = r#"{"labels":["no_relation","Cause"],"no_relation":"no_relation"}"#;

    #[test]
    fn round_trips_generated_corpus() {
        let c = generate_synthetic(PresetName::SemevalLike, 400, 2).unwrap();
        let text = render_corpus(&c);
        assert_eq!(parse_corpus(&text).unwrap(), c);
        let unl = c.hide_labels();
        assert_eq!(parse_corpus(&render_corpus(&unl)).unwrap(), unl);
    }

    #[test]
    fn span_out_of_bounds_names_the_mention() {
        let text = format!(
            "{HEADER}\n{}\n{}\n",
            r#"{"tokens":["a","b","c"],"e1":[0,1],"e2":[2,3],"relation":"Cause"}"#,
            r#"{"tokens":["a","b"],"e1":[0,3],"e2":[1,2],"relation":null}"#
        );
        match parse_corpus(&text) {
            Err(Error::SpanOutOfBounds { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = format!("{HEADER}\n\nnot json\n");
        match parse_corpus(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let text = format!(
            "{HEADER}\n{}\n",
            r#"{"tokens":["a","b"],"e1":[0,1],"e2":[1,2],"relation":"Effect"}"#
        );
        assert!(matches!(parse_corpus(&text), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn empty_file_lacks_header() {
        assert!(matches!(parse_corpus(""), Err(Error::Parse { line: 1, .. })));
        let c = parse_corpus(HEADER).unwrap();
        assert!(c.is_empty());
        assert_eq!(c.inventory().len(), 2);
    }

    #[test]
    fn rejects_marker_tokens() {
        let text = format!(
            "{HEADER}\n{}\n",
            r#"{"tokens":["[E1]","b"],"e1":[0,1],"e2":[1,2],"relation":null}"#
        );
        assert!(matches!(parse_corpus(&text), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let c = generate_synthetic(PresetName::TacredLike, 420, 9).unwrap();
        write_corpus(&c, &path).unwrap();
        assert_eq!(read_corpus(&path).unwrap(), c);
    }
}
