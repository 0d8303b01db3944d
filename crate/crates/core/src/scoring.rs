//! Sentence-level precision, recall and F-beta from a transport plan, plus the
//! exact-match baseline.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::editvec::{cost_matrix, CostMode, EditVecError, EditVectorSet, MassMode, Vectorization};
use crate::embed::Embedder;
use crate::extract::extract_token_edits;
use crate::matrix::Matrix;
use crate::textspan::{EditSet, SpanError, TokenSeq};
use crate::uot::{solve_uot, TransportPlan, UotConfig, UotError};

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error(transparent)]
    EditVec(#[from] EditVecError),
    #[error(transparent)]
    Uot(#[from] UotError),
    #[error(transparent)]
    Span(#[from] SpanError),
    #[error("plan is {got:?} but masses need {want:?}")]
    ShapeMismatch { got: (usize, usize), want: (usize, usize) },
    #[error("at least one reference is required")]
    NoReferences,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DegenerateCase {
    BothEmpty,
    HypEmpty,
    RefEmpty,
}

/// True-positive, false-positive and false-negative mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    pub tp: f64,
    pub fp: f64,
    pub fn_: f64,
    /// The plan moved more than one side's total mass and FP or FN was raised to 0.
    pub clamped: bool,
}

/// `tp = Σ T`, `fp = Σa - tp`, `fn = Σb - tp`, each floored at zero.
pub fn decompose(plan: &Matrix, a: &[f64], b: &[f64]) -> Result<Decomposition, ScoringError> {
    if plan.shape() != (a.len(), b.len()) {
        return Err(ScoringError::ShapeMismatch {
            got: plan.shape(),
            want: (a.len(), b.len()),
        });
    }
    let tp = plan.sum();
    let fp = a.iter().sum::<f64>() - tp;
    let fn_ = b.iter().sum::<f64>() - tp;
    Ok(Decomposition {
        tp,
        fp: fp.max(0.0),
        fn_: fn_.max(0.0),
        clamped: fp < 0.0 || fn_ < 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

/// Precision, recall and F-beta. With no hypothesis mass precision is 1, with no
/// reference mass recall is 1, and F is 0 whenever both P and R are 0.
pub fn prf(tp: f64, fp: f64, fn_: f64, beta: f64) -> Prf {
    let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 1.0 };
    let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 1.0 };
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    let f = if denom > 0.0 {
        (1.0 + b2) * precision * recall / denom
    } else {
        0.0
    };
    Prf { precision, recall, f }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoringConfig {
    pub vectorization: Vectorization,
    pub mass: MassMode,
    pub cost: CostMode,
    pub uot: UotConfig,
    pub beta: f64,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            vectorization: Vectorization::Remove,
            mass: MassMode::L2,
            cost: CostMode::Euclidean,
            uot: UotConfig::default(),
            beta: 0.5,
        }
    }
}

/// Edits, masses and plan behind a sentence score.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanDetail {
    pub hyp_edits: EditSet,
    pub ref_edits: EditSet,
    pub hyp_masses: Vec<f64>,
    pub ref_masses: Vec<f64>,
    pub plan: Option<TransportPlan>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceScore {
    pub tp: f64,
    pub fp: f64,
    #[serde(rename = "fn")]
    pub fn_: f64,
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
    /// One-based index of the reference that maximised F.
    pub chosen_ref: usize,
    pub degenerate_case: Option<DegenerateCase>,
    pub converged: bool,
    pub clamped: bool,
    /// Σa and Σb for the chosen reference.
    pub hyp_mass: f64,
    pub ref_mass: f64,
    #[serde(skip)]
    pub detail: Option<PlanDetail>,
}

impl SentenceScore {
    fn from_parts(d: Decomposition, beta: f64, hyp_mass: f64, ref_mass: f64) -> Self {
        let p = prf(d.tp, d.fp, d.fn_, beta);
        SentenceScore {
            tp: d.tp,
            fp: d.fp,
            fn_: d.fn_,
            precision: p.precision,
            recall: p.recall,
            f: p.f,
            chosen_ref: 1,
            degenerate_case: None,
            converged: true,
            clamped: d.clamped,
            hyp_mass,
            ref_mass,
            detail: None,
        }
    }

    fn degenerate(case: DegenerateCase, hyp_mass: f64, ref_mass: f64, beta: f64) -> Self {
        let d = match case {
            DegenerateCase::BothEmpty => Decomposition { tp: 0.0, fp: 0.0, fn_: 0.0, clamped: false },
            DegenerateCase::HypEmpty => Decomposition { tp: 0.0, fp: 0.0, fn_: ref_mass, clamped: false },
            DegenerateCase::RefEmpty => Decomposition { tp: 0.0, fp: hyp_mass, fn_: 0.0, clamped: false },
        };
        let mut s = SentenceScore::from_parts(d, beta, hyp_mass, ref_mass);
        s.degenerate_case = Some(case);
        s
    }
}

fn degenerate_case(hyp_empty: bool, ref_empty: bool) -> Option<DegenerateCase> {
    match (hyp_empty, ref_empty) {
        (true, true) => Some(DegenerateCase::BothEmpty),
        (true, false) => Some(DegenerateCase::HypEmpty),
        (false, true) => Some(DegenerateCase::RefEmpty),
        (false, false) => None,
    }
}

/// Keeps the first maximum, so ties go to the lowest reference index.
fn pick_best(scores: Vec<SentenceScore>) -> Result<SentenceScore, ScoringError> {
    let mut best: Option<SentenceScore> = None;
    for (k, mut s) in scores.into_iter().enumerate() {
        s.chosen_ref = k + 1;
        if best.as_ref().is_none_or(|b| s.f > b.f) {
            best = Some(s);
        }
    }
    best.ok_or(ScoringError::NoReferences)
}

/// Transport-based score of a hypothesis edit set against one or more reference
/// edit sets over the same source.
pub fn score_uot_edits(
    provider: &dyn Embedder,
    src: &TokenSeq,
    hyp: &EditSet,
    refs: &[EditSet],
    cfg: &ScoringConfig,
) -> Result<SentenceScore, ScoringError> {
    if refs.is_empty() {
        return Err(ScoringError::NoReferences);
    }
    let build = |edits: &EditSet| {
        EditVectorSet::build(src, edits.clone(), provider, cfg.vectorization, cfg.mass)
    };
    let h = build(hyp)?;
    let mut per_ref = Vec::with_capacity(refs.len());
    for r in refs {
        let r = build(r)?;
        let (sa, sb) = (h.total_mass(), r.total_mass());
        let mut detail = PlanDetail {
            hyp_edits: h.edits.clone(),
            ref_edits: r.edits.clone(),
            hyp_masses: h.masses.clone(),
            ref_masses: r.masses.clone(),
            plan: None,
        };
        let mut score = match degenerate_case(h.edits.is_empty(), r.edits.is_empty()) {
            Some(case) => SentenceScore::degenerate(case, sa, sb, cfg.beta),
            None => {
                let c = cost_matrix(&h.vectors, &r.vectors, cfg.cost)?;
                let plan = solve_uot(&h.masses, &r.masses, &c, &cfg.uot)?;
                let d = decompose(&plan.plan, &h.masses, &r.masses)?;
                let mut s = SentenceScore::from_parts(d, cfg.beta, sa, sb);
                s.converged = plan.converged;
                detail.plan = Some(plan);
                s
            }
        };
        score.detail = Some(detail);
        per_ref.push(score);
    }
    pick_best(per_ref)
}

/// Extracts edits from raw sentences and scores them with [`score_uot_edits`].
pub fn sentence_score_uot(
    provider: &dyn Embedder,
    src: &str,
    hyp: &str,
    refs: &[&str],
    cfg: &ScoringConfig,
) -> Result<SentenceScore, ScoringError> {
    let src = TokenSeq::tokenize(src);
    let hyp_edits = extract_token_edits(&src, &TokenSeq::tokenize(hyp));
    let ref_edits: Vec<EditSet> = refs
        .iter()
        .map(|r| extract_token_edits(&src, &TokenSeq::tokenize(r)))
        .collect();
    score_uot_edits(provider, &src, &hyp_edits, &ref_edits, cfg)
}

/// Exact-match baseline: every edit weighs 1 and counts as a true positive only if
/// the reference has an edit with the same span and replacement.
pub fn score_errant_edits(
    hyp: &EditSet,
    refs: &[EditSet],
    beta: f64,
) -> Result<SentenceScore, ScoringError> {
    let per_ref = refs
        .iter()
        .map(|r| {
            let (na, nb) = (hyp.len() as f64, r.len() as f64);
            let mut s = match degenerate_case(hyp.is_empty(), r.is_empty()) {
                Some(case) => SentenceScore::degenerate(case, na, nb, beta),
                None => {
                    let tp = hyp.iter().filter(|e| r.position(e).is_some()).count() as f64;
                    let d = Decomposition { tp, fp: na - tp, fn_: nb - tp, clamped: false };
                    SentenceScore::from_parts(d, beta, na, nb)
                }
            };
            s.detail = Some(PlanDetail {
                hyp_edits: hyp.clone(),
                ref_edits: r.clone(),
                hyp_masses: vec![1.0; hyp.len()],
                ref_masses: vec![1.0; r.len()],
                plan: None,
            });
            s
        })
        .collect();
    pick_best(per_ref)
}

pub fn sentence_score_errant(
    src: &str,
    hyp: &str,
    refs: &[&str],
    beta: f64,
) -> Result<SentenceScore, ScoringError> {
    let src = TokenSeq::tokenize(src);
    let hyp_edits = extract_token_edits(&src, &TokenSeq::tokenize(hyp));
    let ref_edits: Vec<EditSet> = refs
        .iter()
        .map(|r| extract_token_edits(&src, &TokenSeq::tokenize(r)))
        .collect();
    score_errant_edits(&hyp_edits, &ref_edits, beta)
}

/// Corpus-level means and counters over sentence scores.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub sentences: usize,
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_f: f64,
    pub both_empty: usize,
    pub hyp_empty: usize,
    pub ref_empty: usize,
    pub nonconverged: usize,
    pub clamped: usize,
}

pub fn corpus_report(scores: &[SentenceScore]) -> CorpusSummary {
    let mut s = CorpusSummary {
        sentences: scores.len(),
        ..Default::default()
    };
    if scores.is_empty() {
        return s;
    }
    let n = scores.len() as f64;
    s.mean_precision = scores.iter().map(|x| x.precision).sum::<f64>() / n;
    s.mean_recall = scores.iter().map(|x| x.recall).sum::<f64>() / n;
    s.mean_f = scores.iter().map(|x| x.f).sum::<f64>() / n;
    for x in scores {
        match x.degenerate_case {
            Some(DegenerateCase::BothEmpty) => s.both_empty += 1,
            Some(DegenerateCase::HypEmpty) => s.hyp_empty += 1,
            Some(DegenerateCase::RefEmpty) => s.ref_empty += 1,
            None => {}
        }
        s.nonconverged += usize::from(!x.converged);
        s.clamped += usize::from(x.clamped);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::HashingEmbedder;
    use crate::fixtures::fig4;
    use crate::textspan::Edit;
    use approx::assert_relative_eq;

    #[test]
    fn decompose_examples() {
        let d = decompose(&Matrix::zeros(2, 1), &[1.0, 1.0], &[1.0]).unwrap();
        assert_eq!((d.tp, d.fp, d.fn_), (0.0, 2.0, 1.0));
        let t = Matrix::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]);
        let d = decompose(&t, &[0.5, 0.5], &[0.5, 0.5]).unwrap();
        assert_eq!((d.tp, d.fp, d.fn_, d.clamped), (1.0, 0.0, 0.0, false));
        let t = Matrix::from_rows(&[vec![0.8], vec![0.1]]);
        let d = decompose(&t, &[1.0, 1.0], &[1.0]).unwrap();
        assert_relative_eq!(d.tp, 0.9, epsilon = 1e-15);
        assert_relative_eq!(d.fp, 1.1, epsilon = 1e-15);
        assert_relative_eq!(d.fn_, 0.1, epsilon = 1e-15);
        assert!(matches!(
            decompose(&Matrix::zeros(1, 1), &[1.0, 1.0], &[1.0]),
            Err(ScoringError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn clamp_is_flagged() {
        let t = Matrix::from_rows(&[vec![0.6]]);
        let d = decompose(&t, &[0.5], &[1.0]).unwrap();
        assert!(d.clamped);
        assert_eq!(d.fp, 0.0);
    }

    #[test]
    fn prf_examples() {
        assert_eq!(prf(1.0, 0.0, 0.0, 0.5), Prf { precision: 1.0, recall: 1.0, f: 1.0 });
        let p = prf(0.9, 1.1, 0.1, 0.5);
        assert_relative_eq!(p.precision, 0.45, epsilon = 1e-15);
        assert_relative_eq!(p.recall, 0.9, epsilon = 1e-15);
        // 1.25 * 0.45 * 0.9 / (0.25 * 0.45 + 0.9) = 0.50625 / 1.0125
        assert_relative_eq!(p.f, 0.5, epsilon = 1e-12);
        for beta in [0.25, 0.5, 1.0, 2.0] {
            let p = prf(0.3, 0.7, 0.7, beta);
            assert_relative_eq!(p.f, p.precision, epsilon = 1e-15);
        }
        assert_eq!(prf(0.0, 0.0, 0.0, 0.5).f, 1.0);
        assert_eq!(prf(0.0, 1.0, 1.0, 0.5).f, 0.0);
    }

    #[test]
    fn f_is_monotone_in_tp() {
        // Hold tp+fp and tp+fn fixed; raising tp must not lower F.
        for (hyp, refm) in [(1.0, 1.0), (2.0, 0.5), (0.3, 1.7)] {
            let mut last = -1.0;
            for k in 0..=100 {
                let tp = f64::min(hyp, refm) * k as f64 / 100.0;
                let f = prf(tp, hyp - tp, refm - tp, 0.5).f;
                assert!(f >= last - 1e-15);
                last = f;
            }
        }
    }

    #[test]
    fn identical_hypothesis_and_reference() {
        let e = HashingEmbedder::default();
        let src = "he go to school every days";
        let cor = "he goes to school every day";
        let s = sentence_score_uot(&e, src, cor, &[cor], &ScoringConfig::default()).unwrap();
        assert!(s.f >= 0.99, "{s:?}");
        assert!(s.degenerate_case.is_none());
    }

    #[test]
    fn unchanged_hypothesis_is_hyp_empty() {
        let e = HashingEmbedder::default();
        let src = "he go to school";
        let s = sentence_score_uot(&e, src, src, &["he goes to school"], &ScoringConfig::default()).unwrap();
        assert_eq!(s.f, 0.0);
        assert_eq!(s.degenerate_case, Some(DegenerateCase::HypEmpty));
        assert_eq!((s.tp, s.fp), (0.0, 0.0));
        assert!(s.fn_ > 0.0);
        let both = sentence_score_uot(&e, src, src, &[src], &ScoringConfig::default()).unwrap();
        assert_eq!(both.degenerate_case, Some(DegenerateCase::BothEmpty));
        assert_eq!(both.f, 1.0);
        let refe = sentence_score_uot(&e, src, "he goes to school", &[src], &ScoringConfig::default()).unwrap();
        assert_eq!(refe.degenerate_case, Some(DegenerateCase::RefEmpty));
        assert_eq!(refe.f, 0.0);
    }

    #[test]
    fn best_reference_is_chosen() {
        let e = HashingEmbedder::default();
        let src = "she like apple very much";
        let hyp = "she likes apples very much";
        let refs = ["she liked an apple very much", hyp];
        let s = sentence_score_uot(&e, src, hyp, &refs, &ScoringConfig::default()).unwrap();
        assert_eq!(s.chosen_ref, 2);
        assert!(s.f >= 0.99);
        // Equal references tie; the first wins.
        let s = sentence_score_uot(&e, src, hyp, &[hyp, hyp], &ScoringConfig::default()).unwrap();
        assert_eq!(s.chosen_ref, 1);
    }

    #[test]
    fn errant_fig4() {
        let s = sentence_score_errant(fig4::SOURCE, fig4::HYPOTHESIS, &[fig4::REFERENCE], 0.5).unwrap();
        assert_eq!((s.tp, s.fp, s.fn_), (1.0, 3.0, 2.0));
    }

    #[test]
    fn errant_basic_cases() {
        let src = "a b c d";
        let s = sentence_score_errant(src, "a x c y", &["a x c y"], 0.5).unwrap();
        assert_eq!((s.tp, s.f), (2.0, 1.0));
        let s = sentence_score_errant(src, "a x c d", &["a b c y"], 0.5).unwrap();
        assert_eq!((s.tp, s.f), (0.0, 0.0));
        let s = sentence_score_errant(src, "p b c d", &["p b c d"], 0.5).unwrap();
        assert_eq!(s.f, 1.0);
    }

    #[test]
    fn near_miss_gets_partial_credit() {
        let e = HashingEmbedder::default();
        let src = TokenSeq::tokenize("the film was very bad");
        let hyp = EditSet::new(vec![Edit::from_text(4, 5, "poor").unwrap()]).unwrap();
        let refe = EditSet::new(vec![Edit::from_text(4, 5, "awful").unwrap()]).unwrap();
        let uot = score_uot_edits(&e, &src, &hyp, &[refe.clone()], &ScoringConfig::default()).unwrap();
        let hard = score_errant_edits(&hyp, &[refe], 0.5).unwrap();
        assert!(uot.f > 0.0);
        assert_eq!(hard.f, 0.0);
    }

    #[test]
    fn summary_counts() {
        assert_eq!(corpus_report(&[]), CorpusSummary::default());
        let mk = |f: f64| SentenceScore::from_parts(
            Decomposition { tp: f, fp: 1.0 - f, fn_: 1.0 - f, clamped: false },
            0.5,
            1.0,
            1.0,
        );
        let one = corpus_report(&[mk(1.0)]);
        assert_eq!(one.mean_f, 1.0);
        let mut hyp_empty = SentenceScore::degenerate(DegenerateCase::HypEmpty, 0.0, 1.0, 0.5);
        hyp_empty.converged = false;
        let mixed = corpus_report(&[mk(1.0), mk(0.5), hyp_empty]);
        assert_relative_eq!(mixed.mean_f, (1.0 + 0.5 + 0.0) / 3.0);
        assert_eq!((mixed.hyp_empty, mixed.nonconverged), (1, 1));
    }
}
