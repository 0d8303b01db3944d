//! M2 edit files.
//!
//! ```text
//! S a b
//! A 1 2|||R:VERB|||c|||REQUIRED|||-NONE-|||0
//!
//! ```
//!
//! An annotator with no edits is written as a `noop` record (`A -1 -1|||noop|||...`).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::textspan::{Edit, EditSet, TokenSeq};

#[derive(Debug, Error)]
pub enum M2Error {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Edits by one annotator for one sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub annotator: u32,
    pub edits: EditSet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct M2Sentence {
    pub source: TokenSeq,
    pub annotations: Vec<Annotation>,
}

impl M2Sentence {
    /// The edit set of annotator `id`, if it annotated this sentence.
    pub fn edits_of(&self, id: u32) -> Option<&EditSet> {
        self.annotations.iter().find(|a| a.annotator == id).map(|a| &a.edits)
    }
}

pub fn parse_m2(path: impl AsRef<Path>) -> Result<Vec<M2Sentence>, M2Error> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| M2Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_m2_str(&text)
}

struct Pending {
    source: TokenSeq,
    // (annotator, edits, line numbers) in first-seen order
    groups: Vec<(u32, Vec<Edit>, Vec<usize>)>,
}

impl Pending {
    fn finish(self) -> Result<M2Sentence, M2Error> {
        let mut annotations = Vec::with_capacity(self.groups.len());
        for (annotator, edits, lines) in self.groups {
            let first_line = lines.first().copied().unwrap_or(0);
            let edits = EditSet::new(edits).map_err(|e| M2Error::Parse {
                line: first_line,
                msg: e.to_string(),
            })?;
            annotations.push(Annotation { annotator, edits });
        }
        Ok(M2Sentence {
            source: self.source,
            annotations,
        })
    }
}

pub fn parse_m2_str(text: &str) -> Result<Vec<M2Sentence>, M2Error> {
    let mut out = Vec::new();
    let mut pending: Option<Pending> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |msg: String| M2Error::Parse { line, msg };
        if raw.trim().is_empty() {
            if let Some(p) = pending.take() {
                out.push(p.finish()?);
            }
            continue;
        }
        if let Some(rest) = raw.strip_prefix("S ").or_else(|| (raw == "S").then_some("")) {
            if let Some(p) = pending.take() {
                out.push(p.finish()?);
            }
            pending = Some(Pending {
                source: TokenSeq::tokenize(rest),
                groups: Vec::new(),
            });
            continue;
        }
        let Some(rest) = raw.strip_prefix("A ") else {
            return Err(err(format!("expected an S or A record, found {raw:?}")));
        };
        let Some(p) = pending.as_mut() else {
            return Err(err("A record before any S record".into()));
        };
        let fields: Vec<&str> = rest.split("|||").collect();
        if fields.len() != 6 {
            return Err(err(format!("expected 6 |||-separated fields, found {}", fields.len())));
        }
        let mut span = fields[0].split_whitespace();
        let (Some(s), Some(e), None) = (span.next(), span.next(), span.next()) else {
            return Err(err(format!("malformed span {:?}", fields[0])));
        };
        let (start, end): (i64, i64) = match (s.parse(), e.parse()) {
            (Ok(a), Ok(b)) => (a, b),
            _ => return Err(err(format!("malformed span {:?}", fields[0]))),
        };
        let annotator: u32 = fields[5]
            .trim()
            .parse()
            .map_err(|_| err(format!("malformed annotator id {:?}", fields[5])))?;
        let group = match p.groups.iter().position(|g| g.0 == annotator) {
            Some(i) => i,
            None => {
                p.groups.push((annotator, Vec::new(), Vec::new()));
                p.groups.len() - 1
            }
        };
        p.groups[group].2.push(line);
        if fields[1] == "noop" || (start, end) == (-1, -1) {
            continue;
        }
        if start < 0 || end < 0 {
            return Err(err(format!("negative span {start} {end}")));
        }
        let (start, end) = (start as usize, end as usize);
        if end > p.source.len() {
            return Err(err(format!(
                "span {start} {end} exceeds a source of {} tokens",
                p.source.len()
            )));
        }
        let edit = Edit::new(start, end, fields[2].split_whitespace())
            .map_err(|e| err(e.to_string()))?
            .with_label(fields[1]);
        p.groups[group].1.push(edit);
    }
    if let Some(p) = pending.take() {
        out.push(p.finish()?);
    }
    Ok(out)
}

/// Serialises sentences in canonical M2 layout, each record followed by a blank line.
pub fn format_m2(sentences: &[M2Sentence]) -> String {
    let mut s = String::new();
    for sent in sentences {
        let _ = writeln!(s, "S {}", sent.source.detokenize());
        for ann in &sent.annotations {
            if ann.edits.is_empty() {
                let _ = writeln!(s, "A -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||{}", ann.annotator);
            }
            for e in &ann.edits {
                let _ = writeln!(
                    s,
                    "A {} {}|||{}|||{}|||REQUIRED|||-NONE-|||{}",
                    e.start,
                    e.end,
                    e.type_label.as_deref().unwrap_or("UNK"),
                    e.replacement_text(),
                    ann.annotator
                );
            }
        }
        s.push('\n');
    }
    s
}

pub fn write_m2(sentences: &[M2Sentence], path: impl AsRef<Path>) -> Result<(), M2Error> {
    let path = path.as_ref();
    fs::write(path, format_m2(sentences)).map_err(|source| M2Error::Io {
        path: path.display().to_string(),
        source,
    })
}
