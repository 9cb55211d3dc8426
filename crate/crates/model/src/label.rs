use std::fmt;

use serde::{Deserialize, Serialize};

/// A subset of the atomic propositions, stored as a bitmask over the
/// owning model's (or automaton's) proposition order. Bit `j` set means
/// proposition `j` holds.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelSet(pub u32);

impl LabelSet {
    pub const EMPTY: LabelSet = LabelSet(0);

    pub fn singleton(ap: usize) -> Self {
        LabelSet(1 << ap)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(idx: I) -> Self {
        LabelSet(idx.into_iter().fold(0, |m, i| m | (1 << i)))
    }

    /// Builds the set from proposition names. Returns the first unknown name
    /// on failure.
    pub fn from_names<S: AsRef<str>>(names: &[S], ap: &[String]) -> Result<Self, String> {
        let mut mask = 0u32;
        for n in names {
            let n = n.as_ref();
            match ap.iter().position(|a| a == n) {
                Some(i) => mask |= 1 << i,
                None => return Err(n.to_string()),
            }
        }
        Ok(LabelSet(mask))
    }

    pub fn contains(self, ap: usize) -> bool {
        self.0 & (1 << ap) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn indices(self) -> impl Iterator<Item = usize> {
        (0..32).filter(move |i| self.0 & (1 << i) != 0)
    }

    /// Propositions in `self` that are absent from `other`.
    pub fn minus(self, other: LabelSet) -> LabelSet {
        LabelSet(self.0 & !other.0)
    }

    pub fn names(self, ap: &[String]) -> Vec<&str> {
        self.indices().map(|i| ap[i].as_str()).collect()
    }
}

impl fmt::Debug for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.indices()).finish()
    }
}
