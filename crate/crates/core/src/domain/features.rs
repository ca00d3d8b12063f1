use std::ops::Deref;

use super::acts::DialogueActType;
use super::tracker::DialogueTracker;

/// Upper edges (exclusive) of the KB match-count buckets
/// `{0}, {1}, [2,5), [5,10), [10,50), [50,∞)`.
pub const MATCH_BUCKET_EDGES: [usize; 5] = [1, 2, 5, 10, 50];
pub const MATCH_BUCKETS: usize = MATCH_BUCKET_EDGES.len() + 1;

/// Offsets of each block in the state vector for a given slot count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateLayout {
    pub n_slots: usize,
}

impl StateLayout {
    pub fn new(n_slots: usize) -> Self {
        StateLayout { n_slots }
    }

    pub fn user_act(&self) -> usize {
        0
    }
    pub fn user_inform(&self) -> usize {
        DialogueActType::COUNT
    }
    pub fn user_request(&self) -> usize {
        self.user_inform() + self.n_slots
    }
    pub fn agent_act(&self) -> usize {
        self.user_request() + self.n_slots
    }
    pub fn agent_inform(&self) -> usize {
        self.agent_act() + DialogueActType::COUNT
    }
    pub fn agent_request(&self) -> usize {
        self.agent_inform() + self.n_slots
    }
    pub fn turn(&self) -> usize {
        self.agent_request() + self.n_slots
    }
    pub fn match_bucket(&self) -> usize {
        self.turn() + 1
    }
    pub fn dim(&self) -> usize {
        self.match_bucket() + MATCH_BUCKETS
    }
}

/// Fixed-length dialogue-state features, every entry in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(pub Vec<f64>);

impl StateVector {
    pub fn zeros(dim: usize) -> Self {
        StateVector(vec![0.0; dim])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl Deref for StateVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub fn match_bucket(count: usize) -> usize {
    MATCH_BUCKET_EDGES
        .iter()
        .position(|&edge| count < edge)
        .unwrap_or(MATCH_BUCKET_EDGES.len())
}

/// Encodes the tracker state. Requires `turn <= max_turns`; larger turns are
/// clamped so the feature stays in `[0, 1]`.
pub fn featurize(
    layout: StateLayout,
    tracker: &DialogueTracker,
    kb_match_count: usize,
    turn: usize,
    max_turns: usize,
) -> StateVector {
    debug_assert!(turn <= max_turns);
    let mut v = vec![0.0; layout.dim()];
    if let Some(act) = tracker.last_user_act() {
        v[layout.user_act() + act.index()] = 1.0;
    }
    for slot in tracker.constraints.keys() {
        v[layout.user_inform() + slot.0] = 1.0;
    }
    for slot in &tracker.pending_requests {
        v[layout.user_request() + slot.0] = 1.0;
    }
    if let Some(act) = tracker.last_agent_act() {
        v[layout.agent_act() + act.index()] = 1.0;
    }
    for slot in &tracker.agent_informed {
        v[layout.agent_inform() + slot.0] = 1.0;
    }
    for slot in &tracker.agent_requested {
        v[layout.agent_request() + slot.0] = 1.0;
    }
    v[layout.turn()] = if max_turns == 0 {
        0.0
    } else {
        turn.min(max_turns) as f64 / max_turns as f64
    };
    // The bucket is only meaningful once the user has spoken.
    if tracker.last_user.is_some() {
        v[layout.match_bucket() + match_bucket(kb_match_count)] = 1.0;
    }
    StateVector(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_layout_is_145_wide() {
        assert_eq!(StateLayout::new(29).dim(), 145);
    }

    #[test]
    fn buckets() {
        let got: Vec<usize> = [0, 1, 2, 4, 5, 9, 10, 49, 50, 1000]
            .iter()
            .map(|&c| match_bucket(c))
            .collect();
        assert_eq!(got, vec![0, 1, 2, 2, 3, 3, 4, 4, 5, 5]);
    }

    #[test]
    fn empty_history_is_all_zero_but_turn() {
        let t = DialogueTracker::default();
        let s = featurize(StateLayout::new(29), &t, 100, 0, 40);
        assert!(s.iter().all(|&x| x == 0.0));
        let s = featurize(StateLayout::new(29), &t, 100, 40, 40);
        assert_eq!(s[StateLayout::new(29).turn()], 1.0);
    }
}
