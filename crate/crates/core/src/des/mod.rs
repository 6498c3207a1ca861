//! Deterministic discrete-event kernel with a virtual event queue.
//!
//! A [`Kernel`] runs either standalone, executing its own queue through
//! [`Kernel::run_until`], or hosted, where every scheduled event is parked in
//! an [`EventMapping`] and announced to an external scheduler as a
//! [`HostMessage`]. The host later hands the token back through
//! [`Kernel::deliver_from_host`]. Handlers see the same calls in the same
//! order in both modes.
//!
//! Events at equal fire time are delivered in scheduling order.

mod mapping;
mod time;

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;

use thiserror::Error;

pub use mapping::{EventMapping, HostMessage, HostQueue, HostToken};
pub use time::SimTime;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DesError {
    #[error("invalid time value {0} s (must be finite and non-negative)")]
    InvalidTime(f64),
    #[error("cannot schedule at {at}: virtual clock is already at {now}")]
    BackInTime { at: SimTime, now: SimTime },
    #[error("run horizon {t_end} lies before current virtual time {now}")]
    HorizonInPast { t_end: SimTime, now: SimTime },
    #[error("kernel has been disposed")]
    Disposed,
    #[error("unknown or already consumed host token {0}")]
    UnknownToken(HostToken),
    #[error("event {0:?} is not pending")]
    NotPending(EventHandle),
}

/// Identifies the object an event is addressed to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HandlerId(pub u32);

/// A timestamped unit of work on the virtual timeline.
#[derive(Clone, Debug, PartialEq)]
pub struct Event<K> {
    pub fire_time: SimTime,
    pub seq: u64,
    pub target: HandlerId,
    pub kind: K,
}

/// Reference to a scheduled event. Invalid once the event fired or was cancelled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EventHandle {
    seq: u64,
}

impl EventHandle {
    pub fn seq(self) -> u64 {
        self.seq
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunStats {
    pub events_fired: u64,
    pub final_time: SimTime,
}

#[derive(Debug, Error)]
pub enum RunError<E> {
    #[error(transparent)]
    Kernel(#[from] DesError),
    #[error("handler failed after {} events at {}: {error}", stats.events_fired, stats.final_time)]
    Handler { stats: RunStats, error: E },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Standalone,
    Hosted,
}

pub struct Kernel<K> {
    now: SimTime,
    next_seq: u64,
    queue: BinaryHeap<Reverse<(SimTime, u64)>>,
    pending: HashMap<u64, Event<K>>,
    mapping: EventMapping<K>,
    outbox: Vec<HostMessage>,
    mode: Mode,
    fired: u64,
    disposed: bool,
}

impl<K> fmt::Debug for Kernel<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel")
            .field("now", &self.now)
            .field("mode", &self.mode)
            .field("pending", &self.pending.len())
            .field("mapped", &self.mapping.len())
            .field("fired", &self.fired)
            .finish()
    }
}

impl<K> Default for Kernel<K> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K> Kernel<K> {
    pub fn new() -> Self {
        Self::with_mode(Mode::Standalone)
    }

    /// A kernel whose events are all routed through a host scheduler.
    pub fn hosted() -> Self {
        Self::with_mode(Mode::Hosted)
    }

    fn with_mode(mode: Mode) -> Self {
        Self {
            now: SimTime::ZERO,
            next_seq: 0,
            queue: BinaryHeap::new(),
            pending: HashMap::new(),
            mapping: EventMapping::new(),
            outbox: Vec::new(),
            mode,
            fired: 0,
            disposed: false,
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn now_secs(&self) -> f64 {
        self.now.as_secs()
    }

    pub fn events_fired(&self) -> u64 {
        self.fired
    }

    /// Number of scheduled-but-unfired events, mapped ones included.
    pub fn pending_len(&self) -> usize {
        self.pending.len() + self.mapping.len()
    }

    pub fn is_pending(&self, handle: EventHandle) -> bool {
        self.pending.contains_key(&handle.seq) || self.mapping.contains_seq(handle.seq)
    }

    /// Schedules `kind` for `target` after `delay` seconds.
    pub fn schedule(&mut self, target: HandlerId, kind: K, delay: f64) -> Result<EventHandle, DesError> {
        if self.disposed {
            return Err(DesError::Disposed);
        }
        let delay = SimTime::from_secs(delay)?;
        let at = self
            .now
            .checked_add(delay)
            .ok_or(DesError::InvalidTime(delay.as_secs()))?;
        self.schedule_at(target, kind, at)
    }

    pub fn schedule_at(&mut self, target: HandlerId, kind: K, at: SimTime) -> Result<EventHandle, DesError> {
        if self.disposed {
            return Err(DesError::Disposed);
        }
        if at < self.now {
            return Err(DesError::BackInTime { at, now: self.now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        let event = Event {
            fire_time: at,
            seq,
            target,
            kind,
        };
        match self.mode {
            Mode::Standalone => {
                self.queue.push(Reverse((at, seq)));
                self.pending.insert(seq, event);
            }
            Mode::Hosted => {
                let token = self.mapping.insert(event);
                self.outbox.push(HostMessage { token, fire_time: at });
            }
        }
        Ok(EventHandle { seq })
    }

    /// Removes a pending event. Returns false if it already fired or was cancelled.
    ///
    /// Cancelling a mapped event drops its map entry; the host must also drop
    /// its own message (see [`Kernel::host_token`]), otherwise delivering it
    /// yields [`DesError::UnknownToken`].
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        if self.pending.remove(&handle.seq).is_some() {
            return true;
        }
        self.mapping.remove_seq(handle.seq)
    }

    /// Drops every pending event and refuses further scheduling.
    pub fn dispose(&mut self) {
        self.disposed = true;
        self.queue.clear();
        self.pending.clear();
        self.mapping.clear();
        self.outbox.clear();
    }

    pub fn is_disposed(&self) -> bool {
        self.disposed
    }

    /// Delivers every event with `fire_time <= t_end` in (fire_time, seq) order.
    ///
    /// Handlers may schedule further events; those inside the horizon are
    /// delivered in the same run. On success the clock ends at `t_end`. A
    /// handler error stops the run with the clock at the failing event.
    pub fn run_until<E, F>(&mut self, t_end: f64, mut handler: F) -> Result<RunStats, RunError<E>>
    where
        F: FnMut(&mut Kernel<K>, Event<K>) -> Result<(), E>,
    {
        let t_end = SimTime::from_secs(t_end)?;
        if t_end < self.now {
            return Err(DesError::HorizonInPast { t_end, now: self.now }.into());
        }
        let mut stats = RunStats {
            events_fired: 0,
            final_time: self.now,
        };
        while let Some(&Reverse((at, seq))) = self.queue.peek() {
            if at > t_end {
                break;
            }
            self.queue.pop();
            // Stale heap entries belong to cancelled or host-mapped events.
            let Some(event) = self.pending.remove(&seq) else {
                continue;
            };
            self.now = at;
            self.fired += 1;
            stats.events_fired += 1;
            stats.final_time = at;
            if let Err(error) = handler(self, event) {
                return Err(RunError::Handler { stats, error });
            }
        }
        self.now = t_end;
        stats.final_time = t_end;
        Ok(stats)
    }

    /// Moves a pending standalone event into the mapping and returns its token.
    pub fn map_to_host(&mut self, handle: EventHandle) -> Result<HostMessage, DesError> {
        if let Some(token) = self.mapping.token_for(handle.seq) {
            let fire_time = self.mapping.get(token).expect("token present").fire_time;
            return Ok(HostMessage { token, fire_time });
        }
        let event = self
            .pending
            .remove(&handle.seq)
            .ok_or(DesError::NotPending(handle))?;
        let fire_time = event.fire_time;
        let token = self.mapping.insert(event);
        Ok(HostMessage { token, fire_time })
    }

    pub fn host_token(&self, handle: EventHandle) -> Option<HostToken> {
        self.mapping.token_for(handle.seq)
    }

    /// Messages produced by scheduling since the last call.
    pub fn take_host_messages(&mut self) -> Vec<HostMessage> {
        std::mem::take(&mut self.outbox)
    }

    /// Looks up and consumes the event behind a host token.
    pub fn retrieve_from_host(&mut self, token: HostToken) -> Result<Event<K>, DesError> {
        self.mapping.retrieve(token)
    }

    /// Host callback: retrieve the mapped event, advance the clock to its
    /// fire time and hand it to `handler`.
    pub fn deliver_from_host<E, F>(&mut self, token: HostToken, handler: F) -> Result<(), RunError<E>>
    where
        F: FnOnce(&mut Kernel<K>, Event<K>) -> Result<(), E>,
    {
        let event = self.retrieve_from_host(token)?;
        if event.fire_time < self.now {
            return Err(DesError::BackInTime {
                at: event.fire_time,
                now: self.now,
            }
            .into());
        }
        self.now = event.fire_time;
        self.fired += 1;
        handler(self, event).map_err(|error| RunError::Handler {
            stats: RunStats {
                events_fired: 1,
                final_time: self.now,
            },
            error,
        })
    }

    /// Drives a hosted kernel from `host` until the next message lies past `t_end`.
    pub fn run_hosted<E, F>(&mut self, host: &mut HostQueue, t_end: f64, mut handler: F) -> Result<RunStats, RunError<E>>
    where
        F: FnMut(&mut Kernel<K>, Event<K>) -> Result<(), E>,
    {
        let t_end = SimTime::from_secs(t_end)?;
        if t_end < self.now {
            return Err(DesError::HorizonInPast { t_end, now: self.now }.into());
        }
        let mut stats = RunStats {
            events_fired: 0,
            final_time: self.now,
        };
        host.extend(self.take_host_messages());
        while let Some(at) = host.peek_time() {
            if at > t_end {
                break;
            }
            let message = host.pop().expect("peeked");
            match self.deliver_from_host(message.token, &mut handler) {
                Ok(()) => {
                    stats.events_fired += 1;
                    stats.final_time = self.now;
                }
                Err(RunError::Handler { error, .. }) => {
                    stats.events_fired += 1;
                    stats.final_time = self.now;
                    return Err(RunError::Handler { stats, error });
                }
                Err(e) => return Err(e),
            }
            host.extend(self.take_host_messages());
        }
        self.now = t_end;
        stats.final_time = t_end;
        Ok(stats)
    }
}
