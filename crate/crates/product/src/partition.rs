use std::collections::VecDeque;

use crate::{PStateId, ProductAutomaton, ProductError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    /// `S_o`: not reachable from the initial state.
    Unreachable,
    /// `S_c`: reachable goal state.
    Goal,
    /// `S_d`: reachable but cannot reach the goal.
    Bad,
    /// `S_n`: everything else that is reachable.
    Normal,
}

/// Splits the states into `S_o`, `S_c`, `S_d` and `S_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatePartition {
    pub region: Vec<Region>,
}

impl StatePartition {
    /// Partitions the digraph `adj` given the start state and goal set.
    /// Goal states that are not reachable land in `S_o`.
    pub fn compute(adj: &[Vec<usize>], s0: usize, goal: &[bool]) -> Self {
        let n = adj.len();
        let mut reach = vec![false; n];
        reach[s0] = true;
        let mut queue = VecDeque::from([s0]);
        while let Some(s) = queue.pop_front() {
            for &t in &adj[s] {
                if !reach[t] {
                    reach[t] = true;
                    queue.push_back(t);
                }
            }
        }

        let mut rev = vec![Vec::new(); n];
        for (s, succ) in adj.iter().enumerate() {
            for &t in succ {
                rev[t].push(s);
            }
        }
        let mut co_reach = goal.to_vec();
        let mut queue: VecDeque<usize> = (0..n).filter(|&s| goal[s]).collect();
        while let Some(t) = queue.pop_front() {
            for &s in &rev[t] {
                if !co_reach[s] {
                    co_reach[s] = true;
                    queue.push_back(s);
                }
            }
        }

        let region = (0..n)
            .map(|s| match (reach[s], goal[s], co_reach[s]) {
                (false, _, _) => Region::Unreachable,
                (true, true, _) => Region::Goal,
                (true, false, false) => Region::Bad,
                (true, false, true) => Region::Normal,
            })
            .collect();
        StatePartition { region }
    }

    pub fn of(&self, s: PStateId) -> Region {
        self.region[s]
    }

    pub fn states(&self, r: Region) -> Vec<PStateId> {
        (0..self.region.len())
            .filter(|&s| self.region[s] == r)
            .collect()
    }

    pub fn s_reach(&self) -> Vec<PStateId> {
        (0..self.region.len())
            .filter(|&s| self.region[s] != Region::Unreachable)
            .collect()
    }

    pub fn s_unreach(&self) -> Vec<PStateId> {
        self.states(Region::Unreachable)
    }

    pub fn s_goal(&self) -> Vec<PStateId> {
        self.states(Region::Goal)
    }

    pub fn s_bad(&self) -> Vec<PStateId> {
        self.states(Region::Bad)
    }

    pub fn s_normal(&self) -> Vec<PStateId> {
        self.states(Region::Normal)
    }

    pub fn is_good(&self, s: PStateId) -> bool {
        matches!(self.region[s], Region::Goal | Region::Normal)
    }
}

pub fn partition_states(
    p: &ProductAutomaton,
    goal: &[PStateId],
) -> Result<StatePartition, ProductError> {
    let mut mask = vec![false; p.num_states()];
    for &g in goal {
        *mask.get_mut(g).ok_or(ProductError::UnknownGoal(g))? = true;
    }
    Ok(StatePartition::compute(&p.adjacency(), p.initial, &mask))
}
