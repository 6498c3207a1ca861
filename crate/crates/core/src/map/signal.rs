use serde::{Deserialize, Serialize};

use super::{MapError, NodeId};

/// Durations of a fixed-time signal plan, in seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalTiming {
    pub green: f64,
    pub yellow: f64,
    pub red: f64,
    pub offset: f64,
}

impl Default for SignalTiming {
    fn default() -> Self {
        Self {
            green: 30.0,
            yellow: 5.0,
            red: 25.0,
            offset: 0.0,
        }
    }
}

impl SignalTiming {
    pub fn new(green: f64, yellow: f64, red: f64, offset: f64) -> Result<Self, MapError> {
        let timing = Self {
            green,
            yellow,
            red,
            offset,
        };
        timing.validate()?;
        Ok(timing)
    }

    pub fn validate(&self) -> Result<(), MapError> {
        let ok = [self.green, self.yellow, self.red]
            .iter()
            .all(|d| d.is_finite() && *d > 0.0)
            && self.offset.is_finite();
        if ok {
            Ok(())
        } else {
            Err(MapError::InvalidSignalTiming(*self))
        }
    }

    pub fn period(&self) -> f64 {
        self.green + self.yellow + self.red
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SignalPhase {
    Green,
    Yellow,
    Red,
}

impl SignalPhase {
    /// Yellow and red signals act as a stopped obstacle.
    pub fn blocks(self) -> bool {
        !matches!(self, SignalPhase::Green)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrafficSignal {
    pub node_id: NodeId,
    pub timing: SignalTiming,
}

fn nanos(secs: f64) -> i128 {
    (secs * 1e9).round() as i128
}

impl TrafficSignal {
    /// Phase at time `t`. The cycle starts green whenever `(t - offset) mod period == 0`.
    ///
    /// Evaluated on integer nanoseconds so the result is exactly periodic.
    pub fn phase_at(&self, t: f64) -> SignalPhase {
        let g = nanos(self.timing.green);
        let y = nanos(self.timing.yellow);
        let period = g + y + nanos(self.timing.red);
        let u = (nanos(t) - nanos(self.timing.offset)).rem_euclid(period);
        if u < g {
            SignalPhase::Green
        } else if u < g + y {
            SignalPhase::Yellow
        } else {
            SignalPhase::Red
        }
    }
}
