//! Grouping of alignment operations into edits.
//!
//! Runs of consecutive non-match operations are split or merged with a POS-free
//! approximation of ERRANT's rule-based merger. Closed-class word lists stand in
//! for the part-of-speech checks. Whatever the grouping, the pieces of a run are
//! contiguous on both sides, so applying the resulting edits to the source always
//! reproduces the target.

use super::align::{char_similarity, AlignmentOp, OpKind};
use crate::textspan::{Edit, EditSet, TokenSeq};

const DETERMINERS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "my", "your", "his", "her", "its", "our",
    "their", "some", "any", "no", "every", "each", "another", "such",
];

const FUNCTION_WORDS: &[&str] = &[
    "i", "me", "you", "he", "him", "she", "it", "we", "us", "they", "them", "mine", "yours",
    "hers", "ours", "theirs", "who", "whom", "which", "what", "whose", "of", "in", "on", "at",
    "to", "for", "with", "by", "from", "about", "as", "into", "onto", "over", "under", "than",
    "and", "or", "but", "nor", "so", "yet", "if", "because", "while", "although", "though",
    "is", "am", "are", "was", "were", "be", "been", "being", "do", "does", "did", "have", "has",
    "had", "will", "would", "shall", "should", "can", "could", "may", "might", "must", "not",
    "'s", "'re", "'m", "'ve", "'ll", "'d", "n't", "there", "here",
];

pub(crate) fn is_punct(token: &str) -> bool {
    !token.is_empty() && token.chars().all(|c| !c.is_alphanumeric())
}

fn is_determiner(token: &str) -> bool {
    DETERMINERS.contains(&token.to_lowercase().as_str())
}

fn is_content(token: &str) -> bool {
    let lower = token.to_lowercase();
    !is_punct(token)
        && !DETERMINERS.contains(&lower.as_str())
        && !FUNCTION_WORDS.contains(&lower.as_str())
}

struct Run<'a> {
    ops: &'a [AlignmentOp],
    src: &'a [String],
    tgt: &'a [String],
}

impl Run<'_> {
    fn src_tokens(&self, from: usize, to: usize) -> &[String] {
        &self.src[self.ops[from].src_span.0..self.ops[to].src_span.1]
    }

    fn tgt_tokens(&self, from: usize, to: usize) -> &[String] {
        &self.tgt[self.ops[from].tgt_span.0..self.ops[to].tgt_span.1]
    }
}

type Group = (usize, usize);

/// Groups the half-open op range `[lo, hi)` of a non-match run into inclusive index pairs.
fn process(run: &Run<'_>, lo: usize, hi: usize, out: &mut Vec<Group>) {
    if hi <= lo {
        return;
    }
    if hi - lo == 1 {
        out.push((lo, lo));
        return;
    }
    let kinds = &run.ops[lo..hi];
    if kinds.iter().all(|o| o.kind == OpKind::Del) || kinds.iter().all(|o| o.kind == OpKind::Ins) {
        out.push((lo, hi - 1));
        return;
    }

    let last = hi - 1;
    let mut combos: Vec<Group> = (lo..hi)
        .flat_map(|a| (a + 1..hi).map(move |b| (a, b)))
        .collect();
    combos.sort_by(|x, y| (y.1 - y.0).cmp(&(x.1 - x.0)).then(x.0.cmp(&y.0)));

    let mut content = false;
    for (start, end) in combos {
        if !run.ops[start..=end].iter().any(|o| o.kind == OpKind::Sub) {
            continue;
        }
        let o = run.src_tokens(start, end);
        let c = run.tgt_tokens(start, end);

        // Whitespace, hyphen and case-only rewrites: [sub - way -> subway].
        let squash = |toks: &[String]| -> String {
            toks.iter()
                .flat_map(|t| t.chars())
                .filter(|ch| *ch != '-' && *ch != '\'')
                .flat_map(char::to_lowercase)
                .collect()
        };
        if squash(o) == squash(c) {
            process(run, lo, start, out);
            out.push((start, end));
            process(run, end + 1, hi, out);
            return;
        }

        if end - start < 2 {
            // Adjacent substitutions.
            if o.len() == 2 && c.len() == 2 {
                process(run, lo, start + 1, out);
                process(run, start + 1, hi, out);
                return;
            }
            // Similar substitutions at the run boundaries.
            let similar = |a: &str, b: &str| char_similarity(a, b) > 0.75;
            let first_similar = run.ops[start].kind == OpKind::Sub && similar(&o[0], &c[0]);
            let last_similar =
                run.ops[end].kind == OpKind::Sub && similar(&o[o.len() - 1], &c[c.len() - 1]);
            if first_similar || last_similar {
                process(run, lo, start + 1, out);
                process(run, start + 1, hi, out);
                return;
            }
            // Trailing determiner.
            if end == last {
                let tail = &run.ops[last];
                let det = match tail.kind {
                    OpKind::Del => is_determiner(&run.src[tail.src_span.0]),
                    OpKind::Ins | OpKind::Sub => is_determiner(&run.tgt[tail.tgt_span.0]),
                    _ => false,
                };
                if det {
                    process(run, lo, last, out);
                    out.push((last, last));
                    return;
                }
            }
        }
        if o.iter().chain(c.iter()).any(|t| is_content(t)) {
            content = true;
        }
    }
    if content {
        out.push((lo, last));
    } else {
        out.extend((lo..hi).map(|k| (k, k)));
    }
}

/// Turns an alignment path into an edit set.
pub fn merge_ops(ops: &[AlignmentOp], src: &TokenSeq, tgt: &TokenSeq) -> EditSet {
    let mut groups: Vec<Group> = Vec::new();
    let mut k = 0;
    while k < ops.len() {
        if ops[k].kind == OpKind::Match {
            k += 1;
            continue;
        }
        let begin = k;
        while k < ops.len() && ops[k].kind != OpKind::Match {
            k += 1;
        }
        // Transpositions stay whole; the remaining stretches go through the rules.
        let mut seg = begin;
        for t in begin..k {
            if ops[t].kind == OpKind::Transpose {
                if seg < t {
                    let run = Run { ops, src: src.tokens(), tgt: tgt.tokens() };
                    process(&run, seg, t, &mut groups);
                }
                groups.push((t, t));
                seg = t + 1;
            }
        }
        if seg < k {
            let run = Run { ops, src: src.tokens(), tgt: tgt.tokens() };
            process(&run, seg, k, &mut groups);
        }
    }
    groups.sort_unstable();

    let mut edits: Vec<Edit> = Vec::with_capacity(groups.len());
    for (a, b) in groups {
        let (s0, s1) = (ops[a].src_span.0, ops[b].src_span.1);
        let (t0, t1) = (ops[a].tgt_span.0, ops[b].tgt_span.1);
        let replacement = tgt.tokens()[t0..t1].to_vec();
        // Two insertions at one source index cannot coexist; fold them together.
        if let Some(prev) = edits.last_mut() {
            if prev.is_insertion() && s0 == s1 && prev.start == s0 {
                prev.replacement.extend(replacement);
                continue;
            }
        }
        edits.push(Edit {
            start: s0,
            end: s1,
            replacement,
            type_label: None,
        });
    }
    EditSet::new(edits).expect("groups of an alignment path are disjoint")
}

#[cfg(test)]
mod tests {
    use super::super::align::align;
    use super::*;

    fn extract(a: &str, b: &str) -> Vec<String> {
        let (s, t) = (TokenSeq::tokenize(a), TokenSeq::tokenize(b));
        merge_ops(&align(&s, &t), &s, &t)
            .iter()
            .map(|e| e.to_string())
            .collect()
    }

    #[test]
    fn all_match_is_empty() {
        assert!(extract("a b c", "a b c").is_empty());
    }

    #[test]
    fn deletion_and_substitution_merge() {
        // Match, Del, Sub, Match over [a,b,c,d] -> [a,x,d].
        assert_eq!(extract("a b c d", "a x d"), vec!["[1, 3, \"x\"]"]);
    }

    #[test]
    fn transposition_is_one_edit() {
        assert_eq!(extract("I the cat saw", "I cat the saw"), vec!["[1, 3, \"cat the\"]"]);
    }

    #[test]
    fn consecutive_insertions_fold() {
        assert_eq!(extract("a b", "a x y b"), vec!["[1, 1, \"x y\"]"]);
    }

    #[test]
    fn adjacent_substitutions_split() {
        assert_eq!(
            extract("in the house", "on a house"),
            vec!["[0, 1, \"on\"]", "[1, 2, \"a\"]"]
        );
    }

    #[test]
    fn hyphen_merge() {
        assert_eq!(extract("the sub - way", "the subway"), vec!["[1, 4, \"subway\"]"]);
    }
}
