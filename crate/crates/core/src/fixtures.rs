//! Worked example sentences used by tests and benches.

/// A learner sentence with four hypothesis edits and three reference edits,
/// of which exactly one (`[16, 17, "is"]`) matches on surface form.
pub mod fig4 {
    pub const SOURCE: &str = "It is still early for parents to decide whether they can foster a new life that are not able to work and may suffer the pain in the entire life .";
    pub const HYPOTHESIS: &str = "It is still early for parents to decide whether they can foster a new life that is not able to work and may suffer pain throughout their life .";
    pub const REFERENCE: &str = "It is still early for parents to decide whether they can foster a new life that is not able to work and may suffer their entire life .";

    /// `(start, end, replacement)` triples.
    pub const HYPOTHESIS_EDITS: [(usize, usize, &str); 4] =
        [(16, 17, "is"), (24, 25, ""), (26, 27, "throughout"), (27, 29, "their")];
    pub const REFERENCE_EDITS: [(usize, usize, &str); 3] =
        [(16, 17, "is"), (24, 27, ""), (27, 28, "their")];
}
