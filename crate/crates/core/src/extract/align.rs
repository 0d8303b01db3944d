//! Damerau–Levenshtein token alignment with ERRANT-style costs.

use serde::{Deserialize, Serialize};

use crate::textspan::TokenSeq;

const TIE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OpKind {
    Match,
    Sub,
    Ins,
    Del,
    Transpose,
}

/// One step of an alignment path, with half-open spans on both sides.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentOp {
    pub kind: OpKind,
    pub src_span: (usize, usize),
    pub tgt_span: (usize, usize),
}

/// Normalised longest-common-subsequence ratio `2·lcs / (|a| + |b|)` over characters.
pub fn char_similarity(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for &ca in &a {
        for (j, &cb) in b.iter().enumerate() {
            cur[j + 1] = if ca == cb {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    2.0 * prev[b.len()] as f64 / (a.len() + b.len()) as f64
}

/// Substitution cost: 1 for case-only changes, otherwise `2 - 0.5·sim`.
pub fn sub_cost(a: &str, b: &str) -> f64 {
    if a.to_lowercase() == b.to_lowercase() {
        1.0
    } else {
        2.0 - 0.5 * char_similarity(a, b)
    }
}

fn is_transposition(src: &[String], tgt: &[String]) -> bool {
    if src == tgt {
        return false;
    }
    let mut s: Vec<String> = src.iter().map(|t| t.to_lowercase()).collect();
    let mut t: Vec<String> = tgt.iter().map(|t| t.to_lowercase()).collect();
    s.sort_unstable();
    t.sort_unstable();
    s == t
}

/// Minimal-cost alignment path from `src` to `tgt`.
///
/// Costs: match 0, insertion/deletion 1, substitution [`sub_cost`], transposition of an
/// adjacent k-token block (k ≥ 2, equal lowercased multisets) 1. When several steps
/// reach a cell at equal cost the backtrace prefers match, transposition, substitution,
/// deletion, insertion, in that order.
pub fn align(src: &TokenSeq, tgt: &TokenSeq) -> Vec<AlignmentOp> {
    let s = src.tokens();
    let t = tgt.tokens();
    let (n, m) = (s.len(), t.len());
    let w = m + 1;
    let mut cost = vec![0.0f64; (n + 1) * w];
    for i in 0..=n {
        cost[i * w] = i as f64;
    }
    for j in 0..=m {
        cost[j] = j as f64;
    }
    for i in 1..=n {
        for j in 1..=m {
            let mut best = cost[(i - 1) * w + j] + 1.0;
            best = best.min(cost[i * w + j - 1] + 1.0);
            let diag = if s[i - 1] == t[j - 1] {
                0.0
            } else {
                sub_cost(&s[i - 1], &t[j - 1])
            };
            best = best.min(cost[(i - 1) * w + j - 1] + diag);
            for k in 2..=i.min(j) {
                if is_transposition(&s[i - k..i], &t[j - k..j]) {
                    best = best.min(cost[(i - k) * w + j - k] + 1.0);
                }
            }
            cost[i * w + j] = best;
        }
    }

    let mut ops = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = cost[i * w + j];
        let close = |v: f64| (v - here).abs() <= TIE;
        if i > 0 && j > 0 && s[i - 1] == t[j - 1] && close(cost[(i - 1) * w + j - 1]) {
            ops.push(op(OpKind::Match, i - 1, i, j - 1, j));
            i -= 1;
            j -= 1;
            continue;
        }
        if let Some(k) = (2..=i.min(j)).find(|&k| {
            is_transposition(&s[i - k..i], &t[j - k..j]) && close(cost[(i - k) * w + j - k] + 1.0)
        }) {
            ops.push(op(OpKind::Transpose, i - k, i, j - k, j));
            i -= k;
            j -= k;
            continue;
        }
        if i > 0
            && j > 0
            && s[i - 1] != t[j - 1]
            && close(cost[(i - 1) * w + j - 1] + sub_cost(&s[i - 1], &t[j - 1]))
        {
            ops.push(op(OpKind::Sub, i - 1, i, j - 1, j));
            i -= 1;
            j -= 1;
            continue;
        }
        if i > 0 && close(cost[(i - 1) * w + j] + 1.0) {
            ops.push(op(OpKind::Del, i - 1, i, j, j));
            i -= 1;
            continue;
        }
        debug_assert!(j > 0 && close(cost[i * w + j - 1] + 1.0));
        ops.push(op(OpKind::Ins, i, i, j - 1, j));
        j -= 1;
    }
    ops.reverse();
    ops
}

fn op(kind: OpKind, s0: usize, s1: usize, t0: usize, t1: usize) -> AlignmentOp {
    AlignmentOp {
        kind,
        src_span: (s0, s1),
        tgt_span: (t0, t1),
    }
}

/// Total cost of a path under the alignment cost model.
pub fn path_cost(ops: &[AlignmentOp], src: &TokenSeq, tgt: &TokenSeq) -> f64 {
    ops.iter()
        .map(|o| match o.kind {
            OpKind::Match => 0.0,
            OpKind::Ins | OpKind::Del | OpKind::Transpose => 1.0,
            OpKind::Sub => sub_cost(&src.tokens()[o.src_span.0], &tgt.tokens()[o.tgt_span.0]),
        })
        .sum()
}
