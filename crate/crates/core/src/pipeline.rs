//! End-to-end runs: configuration, corpus preparation, parallel scoring, reports
//! and the rank/correlate/agreement/norm-stats artifacts.

use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use indexmap::IndexSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::editvec::{edit_vectors, intermediate_sentences, CostMode, EditVecError, MassMode, Vectorization};
use crate::embed::{EmbedError, Embedder, EmbeddingStore, EmbeddingVector, HashingEmbedder, RemoteEmbedder, RemoteOptions};
use crate::extract::m2::M2Sentence;
use crate::extract::{classify_coarse, extract_token_edits};
use crate::metaeval::{
    expected_wins, norm_stats_by_type, pairwise_outcomes, pearson, spearman, trueskill_rank,
    MetaEvalError, SystemScores, TrueSkillParams, TypeNormStats, DEFAULT_TIE_EPSILON,
};
use crate::scoring::{corpus_report, score_errant_edits, score_uot_edits, CorpusSummary, ScoringConfig, ScoringError, SentenceScore};
use crate::textspan::{apply_edits, EditSet, SpanError, TokenSeq};
use crate::uot::UotConfig;

pub const REPORT_SCHEMA: &str = "uot-errant-report/v1";
pub const RANKING_SCHEMA: &str = "uot-errant-ranking/v1";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Input(String),
    #[error("{what}: expected {expected} lines, found {found}")]
    LineCount {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("sentence {id}: {source}")]
    Sentence {
        id: usize,
        #[source]
        source: ScoringError,
    },
    #[error("{} sentence(s) have no stored embedding: {}", .0.len(), .0.iter().map(|s| format!("{s:?}")).collect::<Vec<_>>().join(", "))]
    MissingEmbeddings(Vec<String>),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    MetaEval(#[from] MetaEvalError),
    #[error(transparent)]
    Span(#[from] SpanError),
}

impl PipelineError {
    /// True when an external dependency (embedding store or service) failed rather
    /// than the inputs.
    pub fn is_dependency_failure(&self) -> bool {
        match self {
            PipelineError::MissingEmbeddings(_) | PipelineError::Embed(_) => true,
            PipelineError::Sentence { source, .. } => {
                matches!(source, ScoringError::EditVec(EditVecError::Embed(_)))
            }
            _ => false,
        }
    }
}

/// Where sentence embeddings come from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum EmbedderSpec {
    /// The deterministic hashing embedder.
    #[default]
    Test,
    Store(PathBuf),
    Remote(String),
}

impl FromStr for EmbedderSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "test" {
            return Ok(EmbedderSpec::Test);
        }
        match s.split_once(':') {
            Some(("store", p)) if !p.is_empty() => Ok(EmbedderSpec::Store(PathBuf::from(p))),
            Some(("remote", u)) if !u.is_empty() => Ok(EmbedderSpec::Remote(u.to_string())),
            _ => Err(format!("unknown embedder {s:?}; expected test, store:<path> or remote:<url>")),
        }
    }
}

impl fmt::Display for EmbedderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmbedderSpec::Test => f.write_str("test"),
            EmbedderSpec::Store(p) => write!(f, "store:{}", p.display()),
            EmbedderSpec::Remote(u) => write!(f, "remote:{u}"),
        }
    }
}

impl Serialize for EmbedderSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EmbedderSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

impl EmbedderSpec {
    pub fn build(&self) -> Result<Box<dyn Embedder>, EmbedError> {
        Ok(match self {
            EmbedderSpec::Test => Box::new(HashingEmbedder::default()),
            EmbedderSpec::Store(p) => Box::new(EmbeddingStore::load(p)?),
            EmbedderSpec::Remote(u) => Box::new(RemoteEmbedder::connect(u, RemoteOptions::default())?),
        })
    }
}

/// Every tunable of a run. Loaded from TOML; missing keys take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub embedder: EmbedderSpec,
    pub vectorization: Vectorization,
    pub mass: MassMode,
    pub cost: CostMode,
    pub epsilon: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub beta: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub absorb_threshold: f64,
    pub tie_epsilon: f64,
    /// TrueSkill priors; the shuffle seed always equals `seed`.
    pub trueskill: TrueSkillParams,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let uot = UotConfig::default();
        RunConfig {
            embedder: EmbedderSpec::Test,
            vectorization: Vectorization::Remove,
            mass: MassMode::L2,
            cost: CostMode::Euclidean,
            epsilon: uot.epsilon,
            lambda1: uot.lambda1,
            lambda2: uot.lambda2,
            beta: 0.5,
            max_iters: uot.max_iters,
            tol: uot.tol,
            absorb_threshold: uot.absorb_threshold,
            tie_epsilon: DEFAULT_TIE_EPSILON,
            trueskill: TrueSkillParams::default(),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        if cfg.trueskill.shuffle_seed != 0 && cfg.trueskill.shuffle_seed != cfg.seed {
            return Err(PipelineError::Config(
                "trueskill.shuffle_seed is derived from seed; set seed instead".into(),
            ));
        }
        cfg.trueskill.shuffle_seed = cfg.seed;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        RunConfig::from_toml(&read_text(path)?)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.uot().validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(PipelineError::Config(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.tie_epsilon.is_finite() && self.tie_epsilon >= 0.0) {
            return Err(PipelineError::Config(format!(
                "tie_epsilon must be non-negative, got {}",
                self.tie_epsilon
            )));
        }
        self.trueskill_params().validate()?;
        Ok(())
    }

    pub fn uot(&self) -> UotConfig {
        UotConfig {
            epsilon: self.epsilon,
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            max_iters: self.max_iters,
            tol: self.tol,
            absorb_threshold: self.absorb_threshold,
        }
    }

    pub fn scoring(&self) -> ScoringConfig {
        ScoringConfig {
            vectorization: self.vectorization,
            mass: self.mass,
            cost: self.cost,
            uot: self.uot(),
            beta: self.beta,
        }
    }

    pub fn trueskill_params(&self) -> TrueSkillParams {
        TrueSkillParams {
            shuffle_seed: self.seed,
            ..self.trueskill
        }
    }
}

pub fn read_text(path: impl AsRef<Path>) -> Result<String, PipelineError> {
    let path = path.as_ref();
    std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Lines of a UTF-8 text file; a trailing newline does not add an empty line.
pub fn read_lines(path: impl AsRef<Path>) -> Result<Vec<String>, PipelineError> {
    Ok(read_text(path)?.lines().map(str::to_string).collect())
}

/// One source sentence with the hypothesis edits and every reference's edits.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceInput {
    pub source: TokenSeq,
    pub hyp: EditSet,
    pub refs: Vec<EditSet>,
}

fn check_count(what: &str, expected: usize, found: usize) -> Result<(), PipelineError> {
    if expected != found {
        return Err(PipelineError::LineCount {
            what: what.to_string(),
            expected,
            found,
        });
    }
    Ok(())
}

/// Extracts hypothesis and reference edits from line-aligned texts.
pub fn inputs_from_text(src: &[String], hyp: &[String], refs: &[Vec<String>]) -> Result<Vec<SentenceInput>, PipelineError> {
    check_count("hypothesis", src.len(), hyp.len())?;
    if refs.is_empty() {
        return Err(PipelineError::Input("at least one reference is required".into()));
    }
    for (k, r) in refs.iter().enumerate() {
        check_count(&format!("reference {}", k + 1), src.len(), r.len())?;
    }
    Ok((0..src.len())
        .into_par_iter()
        .map(|i| {
            let source = TokenSeq::tokenize(&src[i]);
            let hyp = extract_token_edits(&source, &TokenSeq::tokenize(&hyp[i]));
            let refs = refs
                .iter()
                .map(|r| extract_token_edits(&source, &TokenSeq::tokenize(&r[i])))
                .collect();
            SentenceInput { source, hyp, refs }
        })
        .collect())
}

/// Hypothesis edits from annotator 0 of `hyp`; every annotator of `refs` is one
/// reference. Sentences without a hypothesis annotation have no hypothesis edits.
pub fn inputs_from_m2(hyp: &[M2Sentence], refs: &[M2Sentence]) -> Result<Vec<SentenceInput>, PipelineError> {
    check_count("reference M2 sentences", hyp.len(), refs.len())?;
    let mut out = Vec::with_capacity(hyp.len());
    for (i, (h, r)) in hyp.iter().zip(refs).enumerate() {
        if h.source != r.source {
            return Err(PipelineError::Input(format!(
                "sentence {i}: hypothesis and reference M2 sources differ"
            )));
        }
        let mut ref_sets: Vec<EditSet> = r.annotations.iter().map(|a| a.edits.clone()).collect();
        if ref_sets.is_empty() {
            ref_sets.push(EditSet::empty());
        }
        out.push(SentenceInput {
            source: h.source.clone(),
            hyp: h.edits_of(0).cloned().unwrap_or_else(EditSet::empty),
            refs: ref_sets,
        });
    }
    Ok(out)
}

/// Every sentence an embedder will be asked for when scoring `inputs` under the
/// given modes, plus the source, hypothesis and reference sentences. Duplicates
/// are dropped; order is first occurrence.
pub fn enumerate_sentences(inputs: &[SentenceInput], modes: &[Vectorization]) -> Result<Vec<String>, PipelineError> {
    let mut seen: IndexSet<String> = IndexSet::new();
    for s in inputs {
        seen.insert(s.source.detokenize());
        for edits in std::iter::once(&s.hyp).chain(&s.refs) {
            seen.insert(apply_edits(&s.source, edits)?.detokenize());
        }
        for edits in std::iter::once(&s.hyp).chain(&s.refs) {
            for &mode in modes {
                seen.extend(intermediate_sentences(&s.source, edits, mode)?);
            }
        }
    }
    Ok(seen.into_iter().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub id: usize,
    #[serde(flatten)]
    pub score: SentenceScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub method: String,
    pub sentences: Vec<SentenceRecord>,
    pub summary: CorpusSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub config: RunConfig,
    pub sentences: Vec<SentenceRecord>,
    pub summary: CorpusSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineReport>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl Report {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let r: Report = serde_json::from_str(&read_text(path)?)
            .map_err(|e| PipelineError::Input(format!("{}: {e}", path.display())))?;
        if r.schema != REPORT_SCHEMA {
            return Err(PipelineError::Input(format!(
                "{}: unsupported schema {:?}",
                path.display(),
                r.schema
            )));
        }
        Ok(r)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// Per-sentence F keyed by sentence id.
    pub fn system_scores(&self, name: &str) -> SystemScores {
        SystemScores {
            system: name.to_string(),
            scores: self.sentences.iter().map(|s| (s.id, s.score.f)).collect(),
        }
    }
}

fn missing_embedding(e: &ScoringError) -> Option<&str> {
    match e {
        ScoringError::EditVec(EditVecError::Embed(EmbedError::MissingEmbedding(s))) => Some(s),
        _ => None,
    }
}

/// Scores every sentence on a pool of `workers` threads (0 = rayon's default).
/// Results are ordered by sentence id.
pub fn score_corpus(
    inputs: &[SentenceInput],
    embedder: &dyn Embedder,
    cfg: &RunConfig,
    workers: usize,
    baseline: bool,
) -> Result<Report, PipelineError> {
    cfg.validate()?;
    let scoring = cfg.scoring();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let results: Vec<Result<SentenceScore, ScoringError>> = pool.install(|| {
        inputs
            .par_iter()
            .map(|s| score_uot_edits(embedder, &s.source, &s.hyp, &s.refs, &scoring))
            .collect()
    });

    let mut missing: IndexSet<String> = IndexSet::new();
    let mut first_error = None;
    let mut sentences = Vec::with_capacity(inputs.len());
    for (id, r) in results.into_iter().enumerate() {
        match r {
            Ok(score) => sentences.push(SentenceRecord { id, score }),
            Err(e) => {
                if let Some(s) = missing_embedding(&e) {
                    missing.insert(s.to_string());
                } else if first_error.is_none() {
                    first_error = Some(PipelineError::Sentence { id, source: e });
                }
            }
        }
    }
    if !missing.is_empty() {
        return Err(PipelineError::MissingEmbeddings(missing.into_iter().collect()));
    }
    if let Some(e) = first_error {
        return Err(e);
    }

    let warnings = sentences
        .iter()
        .filter(|s| !s.score.converged)
        .map(|s| format!("sentence {}: solver stopped at max_iters={} before converging", s.id, cfg.max_iters))
        .collect();
    let summary = corpus_report(&sentences.iter().map(|s| s.score.clone()).collect::<Vec<_>>());
    let baseline = if baseline {
        let mut b = Vec::with_capacity(inputs.len());
        for (id, s) in inputs.iter().enumerate() {
            let score = score_errant_edits(&s.hyp, &s.refs, cfg.beta).map_err(|source| PipelineError::Sentence { id, source })?;
            b.push(SentenceRecord { id, score });
        }
        let summary = corpus_report(&b.iter().map(|s| s.score.clone()).collect::<Vec<_>>());
        Some(BaselineReport {
            method: "errant".into(),
            sentences: b,
            summary,
        })
    } else {
        None
    };
    Ok(Report {
        schema: REPORT_SCHEMA.into(),
        config: cfg.clone(),
        sentences,
        summary,
        baseline,
        warnings,
    })
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

/// Transport plans of the chosen references as TSV blocks: a comment line, a
/// header row of reference edit descriptors, then one row per hypothesis edit.
/// Sentences without a plan get only the comment line.
pub fn plans_tsv(report: &Report) -> String {
    let mut s = String::new();
    for rec in &report.sentences {
        let sc = &rec.score;
        match (&sc.detail, sc.degenerate_case) {
            (Some(d), None) if d.plan.is_some() => {
                let plan = &d.plan.as_ref().expect("checked").plan;
                let _ = writeln!(s, "# sentence {} reference {}", rec.id, sc.chosen_ref);
                for e in &d.ref_edits {
                    let _ = write!(s, "\t{}", e.descriptor());
                }
                s.push('\n');
                for (i, e) in d.hyp_edits.iter().enumerate() {
                    s.push_str(&e.descriptor());
                    for j in 0..plan.cols() {
                        let _ = write!(s, "\t{}", fmt_num(plan.get(i, j)));
                    }
                    s.push('\n');
                }
            }
            (_, case) => {
                let tag = case.map_or("no plan".to_string(), |c| format!("{c:?}"));
                let _ = writeln!(s, "# sentence {} reference {} {tag}", rec.id, sc.chosen_ref);
            }
        }
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankMethod {
    Trueskill,
    ExpectedWins,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub system: String,
    /// TrueSkill `mu` or the expected-wins rate.
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conservative: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub schema: String,
    pub method: RankMethod,
    pub config: RunConfig,
    pub trueskill: TrueSkillParams,
    pub comparisons: usize,
    pub ranking: Vec<RankEntry>,
}

impl Ranking {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let r: Ranking = serde_json::from_str(&read_text(path)?)
            .map_err(|e| PipelineError::Input(format!("{}: {e}", path.display())))?;
        if r.schema != RANKING_SCHEMA {
            return Err(PipelineError::Input(format!("{}: unsupported schema {:?}", path.display(), r.schema)));
        }
        Ok(r)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ranking serialises")
    }
}

pub fn rank_systems(systems: &[SystemScores], method: RankMethod, cfg: &RunConfig) -> Result<Ranking, PipelineError> {
    cfg.validate()?;
    let comparisons = pairwise_outcomes(systems, cfg.tie_epsilon)?;
    let params = cfg.trueskill_params();
    let ranking = match method {
        RankMethod::Trueskill => trueskill_rank(&comparisons, &params)?
            .into_iter()
            .map(|r| RankEntry {
                system: r.system,
                score: r.mu,
                sigma: Some(r.sigma),
                conservative: Some(r.conservative),
            })
            .collect(),
        RankMethod::ExpectedWins => expected_wins(&comparisons)?
            .into_iter()
            .map(|w| RankEntry {
                system: w.system,
                score: w.score,
                sigma: None,
                conservative: None,
            })
            .collect(),
    };
    Ok(Ranking {
        schema: RANKING_SCHEMA.into(),
        method,
        config: cfg.clone(),
        trueskill: params,
        comparisons: comparisons.len(),
        ranking,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub pearson: f64,
    pub spearman: f64,
    pub systems: usize,
}

/// Correlates metric scores with human scores over the systems both name.
pub fn correlate(metric: &[(String, f64)], human: &[(String, f64)]) -> Result<Correlation, PipelineError> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (name, m) in metric {
        match human.iter().find(|(h, _)| h == name) {
            Some((_, h)) => {
                x.push(*m);
                y.push(*h);
            }
            None => {
                return Err(MetaEvalError::Coverage(format!("no human score for system {name:?}")).into());
            }
        }
    }
    if human.len() != metric.len() {
        return Err(MetaEvalError::Coverage(format!(
            "{} human systems but {} ranked systems",
            human.len(),
            metric.len()
        ))
        .into());
    }
    Ok(Correlation {
        pearson: pearson(&x, &y)?,
        spearman: spearman(&x, &y)?,
        systems: x.len(),
    })
}

/// Edit vectors of every edit in `sentences`, labelled by the edit's type or, when it
/// has none, its coarse type.
pub fn typed_edit_vectors(
    sentences: &[(TokenSeq, EditSet)],
    embedder: &dyn Embedder,
    mode: Vectorization,
) -> Result<Vec<(String, EmbeddingVector)>, PipelineError> {
    let per_sentence: Vec<Result<Vec<(String, EmbeddingVector)>, (usize, EditVecError)>> = sentences
        .par_iter()
        .enumerate()
        .map(|(id, (src, edits))| {
            let vecs = edit_vectors(src, edits, embedder, mode).map_err(|e| (id, e))?;
            Ok(edits
                .iter()
                .zip(vecs)
                .map(|(e, v)| (e.type_label.clone().unwrap_or_else(|| classify_coarse(e, src).to_string()), v))
                .collect())
        })
        .collect();
    let mut out = Vec::new();
    let mut missing: IndexSet<String> = IndexSet::new();
    for r in per_sentence {
        match r {
            Ok(v) => out.extend(v),
            Err((_, EditVecError::Embed(EmbedError::MissingEmbedding(s)))) => {
                missing.insert(s);
            }
            Err((id, e)) => {
                return Err(PipelineError::Sentence {
                    id,
                    source: ScoringError::EditVec(e),
                })
            }
        }
    }
    if !missing.is_empty() {
        return Err(PipelineError::MissingEmbeddings(missing.into_iter().collect()));
    }
    Ok(out)
}

pub fn norm_stats_tsv(stats: &[TypeNormStats]) -> String {
    let mut s = String::from("type\tmean\tstdev\tcount\n");
    for t in stats {
        let _ = writeln!(s, "{}\t{:.3}\t{:.3}\t{}", t.type_label, t.mean, t.stdev, t.count);
    }
    s
}

pub fn norm_stats(typed: &[(String, EmbeddingVector)]) -> Vec<TypeNormStats> {
    norm_stats_by_type(typed.iter().map(|(l, v)| (l.as_str(), v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::m2::parse_m2_str;

    fn lines(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn embedder_spec_round_trip() {
        for s in ["test", "store:/tmp/x.jsonl", "remote:http://localhost:8080"] {
            assert_eq!(s.parse::<EmbedderSpec>().unwrap().to_string(), s);
        }
        assert!("store:".parse::<EmbedderSpec>().is_err());
        assert!("elmo".parse::<EmbedderSpec>().is_err());
    }

    #[test]
    fn config_defaults_and_overrides() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!((cfg.epsilon, cfg.lambda1, cfg.lambda2, cfg.beta), (0.1, 0.1, 0.1, 0.5));
        let cfg = RunConfig::from_toml(
            "embedder = \"store:e.jsonl\"\nvectorization = \"add\"\nmass = \"uniform\"\ncost = \"cosine\"\nseed = 9\n[trueskill]\ndraw_probability = 0.2\n",
        )
        .unwrap();
        assert_eq!(cfg.embedder, EmbedderSpec::Store("e.jsonl".into()));
        assert_eq!((cfg.vectorization, cfg.mass, cfg.cost), (Vectorization::Add, MassMode::Uniform, CostMode::Cosine));
        assert_eq!((cfg.trueskill.shuffle_seed, cfg.trueskill.draw_probability), (9, 0.2));
        let back = RunConfig::from_toml(&toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        for bad in ["epsilon = 0.0", "beta = -1.0", "colour = 1", "seed = 1\n[trueskill]\nshuffle_seed = 2"] {
            assert!(matches!(RunConfig::from_toml(bad), Err(PipelineError::Config(_))), "{bad}");
        }
    }

    #[test]
    fn line_counts_are_checked() {
        let err = inputs_from_text(&lines(&["a b"]), &lines(&["a b", "c"]), &[lines(&["a b"])]).unwrap_err();
        assert_eq!(err.to_string(), "hypothesis: expected 1 lines, found 2");
        assert!(inputs_from_text(&lines(&["a"]), &lines(&["a"]), &[lines(&[])]).is_err());
    }

    #[test]
    fn enumerate_counts() {
        let none = inputs_from_text(&lines(&["a b c"]), &lines(&["a b c"]), &[lines(&["a b c"])]).unwrap();
        assert_eq!(enumerate_sentences(&none, &[Vectorization::Remove]).unwrap(), vec!["a b c"]);
        // Two hypothesis edits, reference equal to the source.
        let two = inputs_from_text(&lines(&["a b c d"]), &lines(&["a x c y"]), &[lines(&["a b c d"])]).unwrap();
        assert_eq!(two[0].hyp.len(), 2);
        let got = enumerate_sentences(&two, &[Vectorization::Remove]).unwrap();
        assert_eq!(got, vec!["a b c d", "a x c y", "a b c y", "a x c d"]);
        let both = enumerate_sentences(&two, &[Vectorization::Remove, Vectorization::Add]).unwrap();
        assert_eq!(both.len(), 4);
    }

    #[test]
    fn store_built_from_enumeration_covers_scoring() {
        let src = lines(&["he go to school every days", "she like apple", "nothing changes here"]);
        let hyp = lines(&["he goes to school every day", "she likes apple", "nothing changes here"]);
        let refs = vec![lines(&["he goes to school every day .", "she likes apples", "nothing changed here"])];
        let inputs = inputs_from_text(&src, &hyp, &refs).unwrap();
        let hashing = HashingEmbedder::default();
        for mode in [Vectorization::Remove, Vectorization::Add] {
            let mut store = EmbeddingStore::new(hashing.dim(), "test", "mean");
            for s in enumerate_sentences(&inputs, &[mode]).unwrap() {
                let v = hashing.embed(&s).unwrap();
                store.insert(s, v).unwrap();
            }
            let cfg = RunConfig { vectorization: mode, ..Default::default() };
            let from_store = score_corpus(&inputs, &store, &cfg, 2, false).unwrap();
            let direct = score_corpus(&inputs, &hashing, &cfg, 1, false).unwrap();
            assert_eq!(from_store.to_json(), direct.to_json());
        }
    }

    #[test]
    fn missing_embeddings_are_listed() {
        let inputs = inputs_from_text(&lines(&["a b"]), &lines(&["a c"]), &[lines(&["a d"])]).unwrap();
        let store = EmbeddingStore::new(4, "x", "mean");
        let err = score_corpus(&inputs, &store, &RunConfig::default(), 1, false).unwrap_err();
        assert!(err.is_dependency_failure());
        let PipelineError::MissingEmbeddings(list) = err else { panic!() };
        assert!(list.contains(&"a c".to_string()));
    }

    #[test]
    fn report_shape() {
        let inputs = inputs_from_text(
            &lines(&["a b c", "x y"]),
            &lines(&["a b d", "x y"]),
            &[lines(&["a b d", "x z"])],
        )
        .unwrap();
        let r = score_corpus(&inputs, &HashingEmbedder::default(), &RunConfig::default(), 0, true).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["schema"], REPORT_SCHEMA);
        assert_eq!(v["config"]["embedder"], "test");
        let s0 = &v["sentences"][0];
        for key in ["id", "tp", "fp", "fn", "precision", "recall", "f", "chosen_ref", "degenerate_case", "converged"] {
            assert!(s0.get(key).is_some(), "{key}");
        }
        assert_eq!(v["sentences"][1]["degenerate_case"], "HypEmpty");
        assert_eq!(v["baseline"]["sentences"][0]["f"], 1.0);
        let back: Report = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back.to_json(), r.to_json());
        let tsv = plans_tsv(&r);
        assert!(tsv.starts_with("# sentence 0 reference 1\n\t2:3:d\n2:3:d\t"), "{tsv}");
        assert!(tsv.contains("# sentence 1 reference 1 HypEmpty"));
    }

    #[test]
    fn m2_inputs() {
        let hyp = parse_m2_str("S a b\nA 1 2|||R:X|||c|||REQUIRED|||-NONE-|||0\n\n").unwrap();
        let refs = parse_m2_str("S a b\nA 1 2|||R:X|||c|||REQUIRED|||-NONE-|||0\nA 0 1|||R:X|||d|||REQUIRED|||-NONE-|||1\n\n").unwrap();
        let inputs = inputs_from_m2(&hyp, &refs).unwrap();
        assert_eq!(inputs[0].refs.len(), 2);
        let r = score_corpus(&inputs, &HashingEmbedder::default(), &RunConfig::default(), 1, true).unwrap();
        assert_eq!(r.sentences[0].score.chosen_ref, 1);
        assert_eq!(r.baseline.unwrap().sentences[0].score.f, 1.0);
        let other = parse_m2_str("S a c\n\n").unwrap();
        assert!(inputs_from_m2(&hyp, &other).is_err());
    }

    #[test]
    fn ranking_and_correlation() {
        let systems = [
            SystemScores::from_vec("good", [0.9, 0.8, 0.7]),
            SystemScores::from_vec("bad", [0.1, 0.2, 0.3]),
        ];
        for method in [RankMethod::Trueskill, RankMethod::ExpectedWins] {
            let r = rank_systems(&systems, method, &RunConfig::default()).unwrap();
            assert_eq!(r.ranking[0].system, "good");
            assert_eq!(r.comparisons, 3);
        }
        let metric = vec![("a".to_string(), 3.0), ("b".to_string(), 2.0), ("c".to_string(), 1.0)];
        let c = correlate(&metric, &metric).unwrap();
        assert!((c.pearson - 1.0).abs() < 1e-12 && (c.spearman - 1.0).abs() < 1e-12);
        assert_eq!(c.systems, 3);
        assert!(correlate(&metric, &metric[..2]).is_err());
    }

    #[test]
    fn norm_stats_from_corpus() {
        let src = TokenSeq::tokenize("the cat sat on mat");
        let edits = extract_token_edits(&src, &TokenSeq::tokenize("The cat sat on the mat ."));
        let typed = typed_edit_vectors(&[(src, edits)], &HashingEmbedder::default(), Vectorization::Remove).unwrap();
        let stats = norm_stats(&typed);
        assert_eq!(stats.iter().map(|s| s.count).sum::<usize>(), typed.len());
        assert!(norm_stats_tsv(&stats).starts_with("type\tmean\tstdev\tcount\n"));
    }
}
