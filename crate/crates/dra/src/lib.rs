//! Deterministic Rabin automata in the ltl2dstar v2 explicit format.
//!
//! Letters are bitmasks over the automaton's own proposition order: bit `j`
//! of a letter is set iff proposition `j` holds.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

mod parse;

pub use parse::{parse_dra, ParseError, ParseErrorKind};

pub type DraState = usize;
pub type Letter = u32;

/// One accepting pair: visit `h` finitely often and `i` infinitely often.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RabinPair {
    pub h: BTreeSet<DraState>,
    pub i: BTreeSet<DraState>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dra {
    pub ap: Vec<String>,
    pub start: DraState,
    /// `delta[q][letter]`.
    pub delta: Vec<Vec<DraState>>,
    pub pairs: Vec<RabinPair>,
    pub comment: Option<String>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DraError {
    #[error("unknown automaton state {0}")]
    UnknownState(DraState),
}

impl Dra {
    pub fn num_states(&self) -> usize {
        self.delta.len()
    }

    pub fn num_letters(&self) -> usize {
        1 << self.ap.len()
    }

    pub fn next(&self, q: DraState, letter: Letter) -> DraState {
        self.delta[q][letter as usize]
    }

    /// `χ(q, q̌)`: every letter that moves `q` to `q̌`, ascending.
    pub fn guard_letters(&self, q: DraState, q_next: DraState) -> Result<Vec<Letter>, DraError> {
        for s in [q, q_next] {
            if s >= self.num_states() {
                return Err(DraError::UnknownState(s));
            }
        }
        Ok(self.delta[q]
            .iter()
            .enumerate()
            .filter(|&(_, &t)| t == q_next)
            .map(|(l, _)| l as Letter)
            .collect())
    }

    /// Distinct successors of `q`, ascending.
    pub fn successors(&self, q: DraState) -> Vec<DraState> {
        let s: BTreeSet<_> = self.delta[q].iter().copied().collect();
        s.into_iter().collect()
    }

    /// Number of `(q, q̌)` pairs with a nonempty guard.
    pub fn num_transitions(&self) -> usize {
        (0..self.num_states())
            .map(|q| self.successors(q).len())
            .sum()
    }

    pub fn in_h(&self, pair: usize, q: DraState) -> bool {
        self.pairs[pair].h.contains(&q)
    }

    pub fn in_i(&self, pair: usize, q: DraState) -> bool {
        self.pairs[pair].i.contains(&q)
    }

    /// Serializes to the v2 explicit format; `parse_dra` reads it back
    /// unchanged.
    pub fn to_v2(&self) -> String {
        let mut out = String::from("DRA v2 explicit\n");
        if let Some(c) = &self.comment {
            let _ = writeln!(out, "Comment: \"{c}\"");
        }
        let _ = writeln!(out, "States: {}", self.num_states());
        let _ = writeln!(out, "Acceptance-Pairs: {}", self.pairs.len());
        let _ = writeln!(out, "Start: {}", self.start);
        let _ = write!(out, "AP: {}", self.ap.len());
        for a in &self.ap {
            let _ = write!(out, " \"{a}\"");
        }
        out.push_str("\n---\n");
        for (q, row) in self.delta.iter().enumerate() {
            let _ = writeln!(out, "State: {q}");
            out.push_str("Acc-Sig:");
            for (k, p) in self.pairs.iter().enumerate() {
                if p.i.contains(&q) {
                    let _ = write!(out, " +{k}");
                }
                if p.h.contains(&q) {
                    let _ = write!(out, " -{k}");
                }
            }
            out.push('\n');
            for t in row {
                let _ = writeln!(out, "{t}");
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single() -> Dra {
        parse_dra("DRA v2 explicit\nStates: 1\nAcceptance-Pairs: 1\nStart: 0\nAP: 1 \"a\"\n---\nState: 0\nAcc-Sig: +0\n0\n0\n")
            .unwrap()
    }

    #[test]
    fn smallest_total_automaton() {
        let d = single();
        assert_eq!(d.num_letters(), 2);
        assert_eq!(d.delta, vec![vec![0, 0]]);
        assert!(d.in_i(0, 0));
        assert!(!d.in_h(0, 0));
        assert_eq!(d.guard_letters(0, 0).unwrap(), vec![0, 1]);
    }

    #[test]
    fn unknown_state() {
        assert_eq!(single().guard_letters(0, 3), Err(DraError::UnknownState(3)));
    }

    #[test]
    fn writer_roundtrip() {
        let d = single();
        assert_eq!(parse_dra(&d.to_v2()).unwrap(), d);
    }
}
