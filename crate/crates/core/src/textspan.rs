//! Token sequences, source-coordinate edits and edit application.
//!
//! Every [`Edit`] is expressed against the *source* tokens. Applying a set of
//! edits replaces all spans simultaneously, so dropping one edit from a set
//! never shifts the others.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpanError {
    #[error("edit {0} overlaps edit {1}")]
    Overlap(String, String),
    #[error("edit {edit} is out of range for a source of {len} tokens")]
    OutOfRange { edit: String, len: usize },
    #[error("edit {0} is not a member of the edit set")]
    NotFound(String),
    #[error("edit [{0}, {0}) with an empty replacement is a no-op")]
    Noop(usize),
    #[error("edit end {end} precedes start {start}")]
    Inverted { start: usize, end: usize },
    #[error("token {0:?} is empty or contains whitespace")]
    BadToken(String),
}

/// An ordered sequence of whitespace-free tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    /// Splits on runs of whitespace.
    pub fn tokenize(text: &str) -> Self {
        TokenSeq(text.split_whitespace().map(str::to_owned).collect())
    }

    pub fn from_tokens<I, S>(tokens: I) -> Result<Self, SpanError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        check_tokens(&tokens)?;
        Ok(TokenSeq(tokens))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    /// Single-space join. This is the exact key used for embedding lookups.
    pub fn detokenize(&self) -> String {
        self.0.join(" ")
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.detokenize())
    }
}

fn check_tokens(tokens: &[String]) -> Result<(), SpanError> {
    for t in tokens {
        if t.is_empty() || t.chars().any(char::is_whitespace) {
            return Err(SpanError::BadToken(t.clone()));
        }
    }
    Ok(())
}

/// Replacement of source tokens `[start, end)` by `replacement`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edit {
    pub start: usize,
    pub end: usize,
    pub replacement: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub type_label: Option<String>,
}

impl Edit {
    pub fn new<I, S>(start: usize, end: usize, replacement: I) -> Result<Self, SpanError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let replacement: Vec<String> = replacement.into_iter().map(Into::into).collect();
        if end < start {
            return Err(SpanError::Inverted { start, end });
        }
        if start == end && replacement.is_empty() {
            return Err(SpanError::Noop(start));
        }
        check_tokens(&replacement)?;
        Ok(Edit {
            start,
            end,
            replacement,
            type_label: None,
        })
    }

    /// Convenience constructor taking the replacement as a space-separated string.
    pub fn from_text(start: usize, end: usize, replacement: &str) -> Result<Self, SpanError> {
        Edit::new(start, end, replacement.split_whitespace())
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.type_label = Some(label.into());
        self
    }

    pub fn is_insertion(&self) -> bool {
        self.start == self.end
    }

    pub fn replacement_text(&self) -> String {
        self.replacement.join(" ")
    }

    /// Hard-match identity: span and replacement, ignoring the type label.
    pub fn same_correction(&self, other: &Edit) -> bool {
        self.start == other.start && self.end == other.end && self.replacement == other.replacement
    }

    /// `start:end:replacement`, as used in plan matrices.
    pub fn descriptor(&self) -> String {
        format!("{}:{}:{}", self.start, self.end, self.replacement_text())
    }
}

impl fmt::Display for Edit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {:?}]", self.start, self.end, self.replacement_text())
    }
}

/// A sorted set of pairwise non-overlapping edits.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Edit>", into = "Vec<Edit>")]
pub struct EditSet(Vec<Edit>);

impl EditSet {
    pub fn new(mut edits: Vec<Edit>) -> Result<Self, SpanError> {
        edits.sort_by_key(|e| (e.start, e.end));
        for pair in edits.windows(2) {
            let (prev, next) = (&pair[0], &pair[1]);
            let clash = prev.end > next.start
                || (prev.is_insertion() && next.is_insertion() && prev.start == next.start);
            if clash {
                return Err(SpanError::Overlap(prev.to_string(), next.to_string()));
            }
        }
        Ok(EditSet(edits))
    }

    pub fn empty() -> Self {
        EditSet(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Edit> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[Edit] {
        &self.0
    }

    pub fn position(&self, edit: &Edit) -> Option<usize> {
        self.0.iter().position(|e| e.same_correction(edit))
    }

    /// The set without the edit at `index`.
    pub fn without(&self, index: usize) -> EditSet {
        let mut edits = self.0.clone();
        edits.remove(index);
        EditSet(edits)
    }

    pub fn singleton(&self, index: usize) -> EditSet {
        EditSet(vec![self.0[index].clone()])
    }

    pub fn check_bounds(&self, src_len: usize) -> Result<(), SpanError> {
        match self.0.iter().find(|e| e.end > src_len) {
            Some(e) => Err(SpanError::OutOfRange {
                edit: e.to_string(),
                len: src_len,
            }),
            None => Ok(()),
        }
    }
}

impl TryFrom<Vec<Edit>> for EditSet {
    type Error = SpanError;

    fn try_from(edits: Vec<Edit>) -> Result<Self, Self::Error> {
        EditSet::new(edits)
    }
}

impl From<EditSet> for Vec<Edit> {
    fn from(set: EditSet) -> Self {
        set.0
    }
}

impl<'a> IntoIterator for &'a EditSet {
    type Item = &'a Edit;
    type IntoIter = std::slice::Iter<'a, Edit>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Applies all edits simultaneously in source coordinates.
pub fn apply_edits(src: &TokenSeq, edits: &EditSet) -> Result<TokenSeq, SpanError> {
    edits.check_bounds(src.len())?;
    let mut out = Vec::with_capacity(src.len());
    let mut cursor = 0;
    for e in edits {
        out.extend_from_slice(&src.0[cursor..e.start]);
        out.extend(e.replacement.iter().cloned());
        cursor = e.end;
    }
    out.extend_from_slice(&src.0[cursor..]);
    Ok(TokenSeq(out))
}

/// `apply_edits(src, edits \ {omit})`.
pub fn apply_edits_excluding(
    src: &TokenSeq,
    edits: &EditSet,
    omit: &Edit,
) -> Result<TokenSeq, SpanError> {
    let idx = edits
        .position(omit)
        .ok_or_else(|| SpanError::NotFound(omit.to_string()))?;
    apply_edits(src, &edits.without(idx))
}

#[cfg(test)]
mod tests {
    use super::*;

    use crate::fixtures::fig4::{HYPOTHESIS_EDITS, SOURCE as FIG4_SOURCE};

    fn fig4_hyp_edits() -> EditSet {
        EditSet::new(
            HYPOTHESIS_EDITS
                .iter()
                .map(|&(s, e, r)| Edit::from_text(s, e, r).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(
            TokenSeq::tokenize("may suffer their entire life .").tokens(),
            ["may", "suffer", "their", "entire", "life", "."]
        );
        assert!(TokenSeq::tokenize("").is_empty());
        assert_eq!(TokenSeq::tokenize("a  b").tokens(), ["a", "b"]);
        let t = "a b c";
        assert_eq!(TokenSeq::tokenize(t).detokenize(), t);
    }

    #[test]
    fn fig4_hypothesis_application() {
        let src = TokenSeq::tokenize(FIG4_SOURCE);
        let out = apply_edits(&src, &fig4_hyp_edits()).unwrap();
        assert!(out
            .detokenize()
            .ends_with("new life that is not able to work and may suffer pain throughout their life ."));
    }

    #[test]
    fn empty_set_is_identity() {
        let src = TokenSeq::tokenize("x y z");
        assert_eq!(apply_edits(&src, &EditSet::empty()).unwrap(), src);
    }

    #[test]
    fn pure_insertion() {
        let src = TokenSeq::tokenize("a b c");
        let edits = EditSet::new(vec![Edit::from_text(1, 1, "x").unwrap()]).unwrap();
        assert_eq!(apply_edits(&src, &edits).unwrap().detokenize(), "a x b c");
    }

    #[test]
    fn output_length_formula() {
        let src = TokenSeq::tokenize(FIG4_SOURCE);
        let edits = fig4_hyp_edits();
        let removed: usize = edits.iter().map(|e| e.end - e.start).sum();
        let added: usize = edits.iter().map(|e| e.replacement.len()).sum();
        let out = apply_edits(&src, &edits).unwrap();
        assert_eq!(out.len(), src.len() - removed + added);
    }

    #[test]
    fn excluding_singleton_returns_source() {
        let src = TokenSeq::tokenize("a b c");
        let e = Edit::from_text(0, 1, "A").unwrap();
        let edits = EditSet::new(vec![e.clone()]).unwrap();
        assert_eq!(apply_edits_excluding(&src, &edits, &e).unwrap(), src);
    }

    #[test]
    fn fig4_excluding_is() {
        let src = TokenSeq::tokenize(FIG4_SOURCE);
        let omit = Edit::from_text(16, 17, "is").unwrap();
        let out = apply_edits_excluding(&src, &fig4_hyp_edits(), &omit).unwrap();
        assert!(out
            .detokenize()
            .ends_with("that are not able to work and may suffer pain throughout their life ."));
    }

    #[test]
    fn leave_one_out_variants_are_distinct() {
        let src = TokenSeq::tokenize(FIG4_SOURCE);
        let edits = fig4_hyp_edits();
        let mut seen = std::collections::HashSet::new();
        for e in &edits {
            seen.insert(apply_edits_excluding(&src, &edits, e).unwrap());
        }
        assert_eq!(seen.len(), edits.len());
    }

    #[test]
    fn excluding_missing_edit() {
        let src = TokenSeq::tokenize("a b");
        let edits = EditSet::new(vec![Edit::from_text(0, 1, "c").unwrap()]).unwrap();
        let other = Edit::from_text(1, 2, "d").unwrap();
        assert!(matches!(
            apply_edits_excluding(&src, &edits, &other),
            Err(SpanError::NotFound(_))
        ));
    }

    #[test]
    fn invariants_rejected() {
        assert!(matches!(Edit::new(2, 2, Vec::<String>::new()), Err(SpanError::Noop(2))));
        assert!(matches!(Edit::from_text(3, 2, "x"), Err(SpanError::Inverted { .. })));
        let overlap = EditSet::new(vec![
            Edit::from_text(0, 2, "x").unwrap(),
            Edit::from_text(1, 3, "y").unwrap(),
        ]);
        assert!(matches!(overlap, Err(SpanError::Overlap(..))));
        let twin_inserts = EditSet::new(vec![
            Edit::from_text(1, 1, "x").unwrap(),
            Edit::from_text(1, 1, "y").unwrap(),
        ]);
        assert!(twin_inserts.is_err());
        let src = TokenSeq::tokenize("a b");
        let far = EditSet::new(vec![Edit::from_text(1, 3, "x").unwrap()]).unwrap();
        assert!(matches!(apply_edits(&src, &far), Err(SpanError::OutOfRange { .. })));
        assert!(TokenSeq::from_tokens(["ok", ""]).is_err());
    }

    #[test]
    fn insertion_adjacent_to_replacement() {
        let src = TokenSeq::tokenize("a b c");
        let edits = EditSet::new(vec![
            Edit::from_text(1, 2, "B").unwrap(),
            Edit::from_text(1, 1, "x").unwrap(),
        ])
        .unwrap();
        assert_eq!(apply_edits(&src, &edits).unwrap().detokenize(), "a x B c");
    }
}
