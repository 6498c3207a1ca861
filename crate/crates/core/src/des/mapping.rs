use std::collections::{BinaryHeap, HashMap};
use std::cmp::Reverse;
use std::fmt;

use super::{DesError, Event, SimTime};

/// Opaque token standing in for a host simulator's message.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HostToken(u64);

impl HostToken {
    pub fn raw(self) -> u64 {
        self.0
    }
}

impl fmt::Display for HostToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "host#{}", self.0)
    }
}

/// A message the host must insert into its own queue at `fire_time`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HostMessage {
    pub token: HostToken,
    pub fire_time: SimTime,
}

/// Bidirectional map between virtual events and host tokens.
///
/// An entry exists exactly while the event is scheduled but not yet handled.
/// Retrieval consumes the entry.
#[derive(Debug)]
pub struct EventMapping<K> {
    by_token: HashMap<HostToken, Event<K>>,
    token_by_seq: HashMap<u64, HostToken>,
    next_token: u64,
}

impl<K> Default for EventMapping<K> {
    fn default() -> Self {
        Self {
            by_token: HashMap::new(),
            token_by_seq: HashMap::new(),
            next_token: 0,
        }
    }
}

impl<K> EventMapping<K> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores `event` and returns the fresh token the host should carry.
    pub fn insert(&mut self, event: Event<K>) -> HostToken {
        let token = HostToken(self.next_token);
        self.next_token += 1;
        self.token_by_seq.insert(event.seq, token);
        self.by_token.insert(token, event);
        token
    }

    pub fn retrieve(&mut self, token: HostToken) -> Result<Event<K>, DesError> {
        let event = self
            .by_token
            .remove(&token)
            .ok_or(DesError::UnknownToken(token))?;
        self.token_by_seq.remove(&event.seq);
        Ok(event)
    }

    pub fn get(&self, token: HostToken) -> Option<&Event<K>> {
        self.by_token.get(&token)
    }

    pub fn token_for(&self, seq: u64) -> Option<HostToken> {
        self.token_by_seq.get(&seq).copied()
    }

    pub fn contains_seq(&self, seq: u64) -> bool {
        self.token_by_seq.contains_key(&seq)
    }

    /// Drops the entry for `seq`, returning whether one existed.
    pub fn remove_seq(&mut self, seq: u64) -> bool {
        match self.token_by_seq.remove(&seq) {
            Some(token) => {
                self.by_token.remove(&token);
                true
            }
            None => false,
        }
    }

    pub fn len(&self) -> usize {
        self.by_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_token.is_empty()
    }

    pub fn clear(&mut self) {
        self.by_token.clear();
        self.token_by_seq.clear();
    }
}

/// Minimal host-side event queue ordered by (fire time, arrival order).
///
/// Stands in for an external simulator's scheduler when driving a kernel in
/// hosted mode.
#[derive(Debug, Default)]
pub struct HostQueue {
    heap: BinaryHeap<Reverse<(SimTime, u64, HostToken)>>,
    arrivals: u64,
}

impl HostQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, message: HostMessage) {
        self.heap
            .push(Reverse((message.fire_time, self.arrivals, message.token)));
        self.arrivals += 1;
    }

    pub fn extend<I: IntoIterator<Item = HostMessage>>(&mut self, messages: I) {
        for m in messages {
            self.push(m);
        }
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|Reverse((t, _, _))| *t)
    }

    pub fn pop(&mut self) -> Option<HostMessage> {
        self.heap.pop().map(|Reverse((fire_time, _, token))| HostMessage { token, fire_time })
    }

    /// Drops a message the host no longer wants delivered.
    pub fn remove(&mut self, token: HostToken) -> bool {
        let before = self.heap.len();
        self.heap.retain(|Reverse((_, _, t))| *t != token);
        self.heap.len() != before
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::des::HandlerId;

    fn event(seq: u64) -> Event<&'static str> {
        Event {
            fire_time: SimTime::from_nanos(seq * 10),
            seq,
            target: HandlerId(0),
            kind: "tick",
        }
    }

    #[test]
    fn round_trip_returns_same_event() {
        let mut m = EventMapping::new();
        let token = m.insert(event(7));
        let back = m.retrieve(token).unwrap();
        assert_eq!(back.seq, 7);
        assert_eq!(back.kind, "tick");
        assert!(m.is_empty());
    }

    #[test]
    fn tokens_are_distinct() {
        let mut m = EventMapping::new();
        let a = m.insert(event(1));
        let b = m.insert(event(2));
        assert_ne!(a, b);
        assert_eq!(m.token_for(2), Some(b));
    }

    #[test]
    fn consumed_token_is_a_lookup_error() {
        let mut m = EventMapping::new();
        let t = m.insert(event(1));
        m.retrieve(t).unwrap();
        assert!(matches!(m.retrieve(t), Err(DesError::UnknownToken(x)) if x == t));
    }

    #[test]
    fn host_queue_is_fifo_on_ties() {
        let mut q = HostQueue::new();
        let t = SimTime::from_nanos(5);
        q.push(HostMessage { token: HostToken(3), fire_time: t });
        q.push(HostMessage { token: HostToken(1), fire_time: t });
        q.push(HostMessage { token: HostToken(9), fire_time: SimTime::from_nanos(1) });
        let order: Vec<u64> = std::iter::from_fn(|| q.pop()).map(|m| m.token.raw()).collect();
        assert_eq!(order, vec![9, 3, 1]);
    }
}
