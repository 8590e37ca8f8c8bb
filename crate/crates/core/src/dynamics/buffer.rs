use std::collections::VecDeque;

use crate::envs::{Trajectory, Transition};

/// FIFO store of world transitions; `capacity == None` keeps everything.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplayBuffer {
    capacity: Option<usize>,
    data: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: Option<usize>) -> Self {
        Self { capacity, data: VecDeque::new() }
    }

    pub fn capacity(&self) -> Option<usize> {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn clear(&mut self) {
        self.data.clear();
    }

    /// Appends in order, evicting the oldest entries beyond capacity.
    pub fn insert<I: IntoIterator<Item = Transition>>(&mut self, transitions: I) {
        self.data.extend(transitions);
        if let Some(cap) = self.capacity {
            let excess = self.data.len().saturating_sub(cap);
            self.data.drain(..excess);
        }
    }

    pub fn insert_trajectories(&mut self, trajectories: &[Trajectory]) {
        self.insert(trajectories.iter().flat_map(|t| t.transitions.iter().cloned()));
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.data.iter()
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.data.get(i)
    }

    pub fn to_vec(&self) -> Vec<Transition> {
        self.data.iter().cloned().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tagged(i: usize) -> Transition {
        Transition { t: i, state: vec![i as f64], action: vec![], reward: 0.0, next_state: vec![0.0], done: false }
    }

    #[test]
    fn fifo_eviction_keeps_newest() {
        let mut b = ReplayBuffer::new(Some(2500));
        b.insert((0..3000).map(tagged));
        assert_eq!(b.len(), 2500);
        assert_eq!(b.get(0).unwrap().t, 500);
        assert_eq!(b.get(2499).unwrap().t, 2999);
        b.insert(std::iter::empty());
        assert_eq!(b.len(), 2500);
    }

    #[test]
    fn unbounded_keeps_everything() {
        let mut b = ReplayBuffer::new(None);
        for k in 0..4 {
            b.insert((0..1000).map(|i| tagged(k * 1000 + i)));
        }
        assert_eq!(b.len(), 4000);
        assert_eq!(b.get(0).unwrap().t, 0);
    }
}
