//! Rankings, correlations and agreement statistics over per-sentence system scores.

mod correlation;
mod trueskill;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use correlation::{average_ranks, pearson, spearman};
pub use trueskill::{trueskill_rank, SystemRating, TrueSkillParams};

use crate::embed::EmbeddingVector;

pub const DEFAULT_TIE_EPSILON: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum MetaEvalError {
    #[error("coverage mismatch: {0}")]
    Coverage(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no comparisons")]
    Empty,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    AWins,
    BWins,
    Tie,
}

impl Outcome {
    pub fn flipped(self) -> Outcome {
        match self {
            Outcome::AWins => Outcome::BWins,
            Outcome::BWins => Outcome::AWins,
            Outcome::Tie => Outcome::Tie,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comparison {
    pub sentence_id: usize,
    pub system_a: String,
    pub system_b: String,
    pub outcome: Outcome,
}

/// One system's sentence-level scores keyed by sentence id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemScores {
    pub system: String,
    pub scores: BTreeMap<usize, f64>,
}

impl SystemScores {
    /// Scores for sentence ids `0..n`.
    pub fn from_vec(system: impl Into<String>, scores: impl IntoIterator<Item = f64>) -> Self {
        SystemScores {
            system: system.into(),
            scores: scores.into_iter().enumerate().collect(),
        }
    }
}

/// Every unordered system pair on every sentence, with systems taken in input order.
pub fn pairwise_outcomes(systems: &[SystemScores], tie_epsilon: f64) -> Result<Vec<Comparison>, MetaEvalError> {
    let mut seen = BTreeSet::new();
    for s in systems {
        if !seen.insert(s.system.as_str()) {
            return Err(MetaEvalError::Coverage(format!("system {:?} appears twice", s.system)));
        }
    }
    if let Some(first) = systems.first() {
        for s in &systems[1..] {
            if !s.scores.keys().eq(first.scores.keys()) {
                return Err(MetaEvalError::Coverage(format!(
                    "systems {:?} and {:?} cover different sentence ids",
                    first.system, s.system
                )));
            }
        }
    }
    let mut out = Vec::new();
    let Some(first) = systems.first() else {
        return Ok(out);
    };
    for &sid in first.scores.keys() {
        for (i, a) in systems.iter().enumerate() {
            for b in &systems[i + 1..] {
                let (fa, fb) = (a.scores[&sid], b.scores[&sid]);
                let outcome = if fa > fb + tie_epsilon {
                    Outcome::AWins
                } else if fb > fa + tie_epsilon {
                    Outcome::BWins
                } else {
                    Outcome::Tie
                };
                out.push(Comparison {
                    sentence_id: sid,
                    system_a: a.system.clone(),
                    system_b: b.system.clone(),
                    outcome,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinRate {
    pub system: String,
    pub score: f64,
}

/// `(wins + ties / 2) / comparisons` per system, sorted by score descending, then name.
pub fn expected_wins(comparisons: &[Comparison]) -> Result<Vec<WinRate>, MetaEvalError> {
    if comparisons.is_empty() {
        return Err(MetaEvalError::Empty);
    }
    let mut tally: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for c in comparisons {
        let (ca, cb) = match c.outcome {
            Outcome::AWins => (1.0, 0.0),
            Outcome::BWins => (0.0, 1.0),
            Outcome::Tie => (0.5, 0.5),
        };
        let a = tally.entry(&c.system_a).or_default();
        a.0 += ca;
        a.1 += 1;
        let b = tally.entry(&c.system_b).or_default();
        b.0 += cb;
        b.1 += 1;
    }
    let mut out: Vec<WinRate> = tally
        .into_iter()
        .map(|(s, (w, n))| WinRate {
            system: s.to_string(),
            score: w / n as f64,
        })
        .collect();
    out.sort_by(|x, y| y.score.total_cmp(&x.score).then_with(|| x.system.cmp(&y.system)));
    Ok(out)
}

type PairKey = (String, String);

/// Outcomes per unordered pair, oriented so the key's first system is `a`.
fn index_by_pair(comparisons: &[Comparison]) -> Result<BTreeMap<PairKey, BTreeMap<usize, Outcome>>, MetaEvalError> {
    let mut map: BTreeMap<PairKey, BTreeMap<usize, Outcome>> = BTreeMap::new();
    for c in comparisons {
        if c.system_a == c.system_b {
            return Err(MetaEvalError::Coverage(format!("self comparison of {:?}", c.system_a)));
        }
        let (key, outcome) = if c.system_a < c.system_b {
            ((c.system_a.clone(), c.system_b.clone()), c.outcome)
        } else {
            ((c.system_b.clone(), c.system_a.clone()), c.outcome.flipped())
        };
        if map.entry(key.clone()).or_default().insert(c.sentence_id, outcome).is_some() {
            return Err(MetaEvalError::Coverage(format!(
                "pair {:?}/{:?} compared twice on sentence {}",
                key.0, key.1, c.sentence_id
            )));
        }
    }
    Ok(map)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAgreement {
    pub system_a: String,
    pub system_b: String,
    pub agreement: f64,
    pub sentences: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementMatrix {
    pub systems: Vec<String>,
    pub pairs: Vec<PairAgreement>,
}

impl AgreementMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        self.pairs
            .iter()
            .find(|p| (p.system_a == a && p.system_b == b) || (p.system_a == b && p.system_b == a))
            .map(|p| p.agreement)
    }

    /// Square TSV with a header row and column of system names. Diagonal and
    /// uncompared cells are left empty.
    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        for name in &self.systems {
            s.push('\t');
            s.push_str(name);
        }
        s.push('\n');
        for a in &self.systems {
            s.push_str(a);
            for b in &self.systems {
                s.push('\t');
                if a != b {
                    if let Some(v) = self.get(a, b) {
                        let _ = write!(s, "{v}");
                    }
                }
            }
            s.push('\n');
        }
        s
    }
}

/// Per system pair, the fraction of shared sentences on which the metric and the
/// human outcome coincide. A tie agrees only with a tie.
pub fn agreement_matrix(metric: &[Comparison], human: &[Comparison]) -> Result<AgreementMatrix, MetaEvalError> {
    let m = index_by_pair(metric)?;
    let h = index_by_pair(human)?;
    if !m.keys().eq(h.keys()) {
        return Err(MetaEvalError::Coverage("metric and human comparisons cover different system pairs".into()));
    }
    let mut systems: IndexMap<String, ()> = IndexMap::new();
    for c in metric {
        systems.insert(c.system_a.clone(), ());
        systems.insert(c.system_b.clone(), ());
    }
    let mut pairs = Vec::with_capacity(m.len());
    for ((a, b), mo) in &m {
        let ho = &h[&(a.clone(), b.clone())];
        if !mo.keys().eq(ho.keys()) {
            return Err(MetaEvalError::Coverage(format!(
                "pair {a:?}/{b:?} is compared on different sentences"
            )));
        }
        let agree = mo.iter().filter(|(sid, o)| ho[sid] == **o).count();
        pairs.push(PairAgreement {
            system_a: a.clone(),
            system_b: b.clone(),
            agreement: agree as f64 / mo.len() as f64,
            sentences: mo.len(),
        });
    }
    Ok(AgreementMatrix {
        systems: systems.into_keys().collect(),
        pairs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeNormStats {
    pub type_label: String,
    pub mean: f64,
    /// Population standard deviation.
    pub stdev: f64,
    pub count: usize,
}

/// L2-norm statistics of edit vectors grouped by error type, sorted by mean ascending.
pub fn norm_stats_by_type<'a, I>(typed: I) -> Vec<TypeNormStats>
where
    I: IntoIterator<Item = (&'a str, &'a EmbeddingVector)>,
{
    let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (label, v) in typed {
        groups.entry(label).or_default().push(v.norm());
    }
    let mut out: Vec<TypeNormStats> = groups
        .into_iter()
        .map(|(label, norms)| {
            let n = norms.len() as f64;
            let mean = norms.iter().sum::<f64>() / n;
            let var = norms.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            TypeNormStats {
                type_label: label.to_string(),
                mean,
                stdev: var.sqrt(),
                count: norms.len(),
            }
        })
        .collect();
    out.sort_by(|x, y| x.mean.total_cmp(&y.mean).then_with(|| x.type_label.cmp(&y.type_label)));
    out
}

/// Human judgments read from TSV.
#[derive(Debug, Clone, PartialEq)]
pub enum HumanScores {
    /// Rows of `system_id, sentence_id, score`.
    Sentence(Vec<SystemScores>),
    /// Rows of `system_id, score`.
    System(Vec<(String, f64)>),
}

impl HumanScores {
    /// System-level scores; sentence-level judgments are averaged per system.
    pub fn system_level(&self) -> Vec<(String, f64)> {
        match self {
            HumanScores::System(v) => v.clone(),
            HumanScores::Sentence(v) => v
                .iter()
                .map(|s| {
                    let n = s.scores.len().max(1) as f64;
                    (s.system.clone(), s.scores.values().sum::<f64>() / n)
                })
                .collect(),
        }
    }
}

/// Parses a human-judgment TSV. Blank lines and lines starting with `#` are skipped;
/// every row must have the same number of columns (2 or 3).
pub fn parse_human_tsv(text: &str) -> Result<HumanScores, MetaEvalError> {
    let mut width = None;
    let mut sentence: IndexMap<String, BTreeMap<usize, f64>> = IndexMap::new();
    let mut system: IndexMap<String, f64> = IndexMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |msg: String| MetaEvalError::Parse { line, msg };
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = raw.split('\t').map(str::trim).collect();
        if !matches!(cols.len(), 2 | 3) {
            return Err(err(format!("expected 2 or 3 tab-separated columns, found {}", cols.len())));
        }
        if *width.get_or_insert(cols.len()) != cols.len() {
            return Err(err("column count differs from earlier rows".into()));
        }
        let score: f64 = cols[cols.len() - 1]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| err(format!("malformed score {:?}", cols[cols.len() - 1])))?;
        if cols.len() == 2 {
            if system.insert(cols[0].to_string(), score).is_some() {
                return Err(err(format!("duplicate system {:?}", cols[0])));
            }
        } else {
            let sid: usize = cols[1].parse().map_err(|_| err(format!("malformed sentence id {:?}", cols[1])))?;
            if sentence.entry(cols[0].to_string()).or_default().insert(sid, score).is_some() {
                return Err(err(format!("duplicate score for {:?} sentence {sid}", cols[0])));
            }
        }
    }
    Ok(match width {
        Some(3) => HumanScores::Sentence(
            sentence
                .into_iter()
                .map(|(system, scores)| SystemScores { system, scores })
                .collect(),
        ),
        _ => HumanScores::System(system.into_iter().collect()),
    })
}
