//! Passive cellular observer: path-loss RSSI, strongest-cell attachment with
//! hysteresis and time-to-trigger, handover and ping-pong detection.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::map::Point;
use crate::num::Scalar;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Reference distance of the path-loss model, meters.
pub const D_REF: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RadioError {
    #[error("station {id}: {field} must be positive and finite, got {value}")]
    InvalidStation { id: String, field: &'static str, value: f64 },
    #[error("duplicate station id {0}")]
    DuplicateStation(String),
    #[error("radio parameter `{name}` has invalid value {value}")]
    InvalidParameter { name: &'static str, value: f64 },
}

/// An omnidirectional cell.
#[derive(Clone, Debug, PartialEq)]
pub struct BaseStation {
    pub id: String,
    pub position: Point<f64>,
    /// dBm
    pub tx_power: f64,
    /// MHz
    pub carrier: f64,
}

impl BaseStation {
    pub fn new(id: impl Into<String>, x: f64, y: f64) -> Self {
        Self {
            id: id.into(),
            position: Point::new(x, y),
            tx_power: 46.0,
            carrier: 1800.0,
        }
    }

    pub fn validate(&self) -> Result<(), RadioError> {
        for (field, value) in [("txPower", self.tx_power), ("carrier", self.carrier)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(RadioError::InvalidStation {
                    id: self.id.clone(),
                    field,
                    value,
                });
            }
        }
        if !(self.position.x.is_finite() && self.position.y.is_finite()) {
            return Err(RadioError::InvalidStation {
                id: self.id.clone(),
                field: "position",
                value: f64::NAN,
            });
        }
        Ok(())
    }
}

/// Free-space loss at distance `d` (meters) for `carrier_mhz`, dB.
pub fn free_space_loss<S: Scalar>(d: S, carrier_mhz: S) -> S {
    let f = carrier_mhz * S::lit(1e6);
    S::lit(20.0) * (S::lit(4.0) * S::PI() * d * f / S::lit(SPEED_OF_LIGHT)).log10()
}

/// Log-distance RSSI in dBm at distance `d` from a transmitter.
///
/// Distances below the 1 m reference are clamped to it.
pub fn rssi_at_distance<S: Scalar>(tx_power: S, carrier_mhz: S, exponent: S, d: S) -> S {
    let d_ref = S::lit(D_REF);
    let d = d.max(d_ref);
    tx_power - (free_space_loss(d_ref, carrier_mhz) + S::lit(10.0) * exponent * (d / d_ref).log10())
}

/// Propagation settings shared by all stations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadioParams {
    pub path_loss_exponent: f64,
    /// Standard deviation of log-normal shadowing, dB. Zero disables it.
    pub shadowing_sigma: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            path_loss_exponent: 3.5,
            shadowing_sigma: 0.0,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<(), RadioError> {
        if !(self.path_loss_exponent.is_finite() && self.path_loss_exponent > 0.0) {
            return Err(RadioError::InvalidParameter {
                name: "pathLossExponent",
                value: self.path_loss_exponent,
            });
        }
        if !(self.shadowing_sigma.is_finite() && self.shadowing_sigma >= 0.0) {
            return Err(RadioError::InvalidParameter {
                name: "shadowingSigma",
                value: self.shadowing_sigma,
            });
        }
        Ok(())
    }
}

/// Deterministic RSSI from `station` at `position`, dBm.
pub fn rssi(station: &BaseStation, position: Point<f64>, params: &RadioParams) -> f64 {
    rssi_at_distance(
        station.tx_power,
        station.carrier,
        params.path_loss_exponent,
        position.distance(station.position),
    )
}

/// RSSI with a shadowing draw from `rng` added when enabled.
pub fn rssi_shadowed<R: Rng + ?Sized>(station: &BaseStation, position: Point<f64>, params: &RadioParams, rng: &mut R) -> f64 {
    let base = rssi(station, position, params);
    if params.shadowing_sigma > 0.0 {
        let n = Normal::new(0.0, params.shadowing_sigma).expect("sigma validated finite and positive");
        base + n.sample(rng)
    } else {
        base
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HandoverParams {
    /// dB
    pub hysteresis: f64,
    /// Time-to-trigger, seconds.
    pub ttt: f64,
    /// Ping-pong detection window, seconds.
    pub ping_pong_window: f64,
}

impl Default for HandoverParams {
    fn default() -> Self {
        Self {
            hysteresis: 3.0,
            ttt: 1.0,
            ping_pong_window: 10.0,
        }
    }
}

impl HandoverParams {
    pub fn validate(&self) -> Result<(), RadioError> {
        for (name, value) in [
            ("hysteresis", self.hysteresis),
            ("ttt", self.ttt),
            ("pingPongWindow", self.ping_pong_window),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(RadioError::InvalidParameter { name, value });
            }
        }
        Ok(())
    }
}

/// Handover between station indices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HandoverEvent {
    pub time: f64,
    pub from_cell: usize,
    pub to_cell: usize,
    pub position: Point<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PingPong {
    /// Time of the return handover.
    pub time: f64,
    pub cell_a: usize,
    pub cell_b: usize,
}

/// Serving-cell state of one vehicle.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Attachment {
    serving: Option<usize>,
    since: f64,
    /// Candidate cell and the time it started beating the serving cell.
    candidate: Option<(usize, f64)>,
    history: Vec<HandoverEvent>,
}

/// Slack for comparing accumulated step times against the time-to-trigger.
const TIME_EPS: f64 = 1e-9;

impl Attachment {
    pub fn serving_cell(&self) -> Option<usize> {
        self.serving
    }

    /// Time of the last attachment change.
    pub fn since(&self) -> f64 {
        self.since
    }

    pub fn history(&self) -> &[HandoverEvent] {
        &self.history
    }

    /// Feeds one set of measurements (`rssi[i]` for station `i`) taken at
    /// time `t` at `position`.
    ///
    /// The first call attaches to the strongest cell. Afterwards the vehicle
    /// hands over once the strongest cell has beaten the serving cell by more
    /// than the hysteresis for at least the time-to-trigger.
    pub fn update(&mut self, rssi: &[f64], t: f64, position: Point<f64>, params: &HandoverParams) -> Option<HandoverEvent> {
        let best = strongest(rssi)?;
        let Some(serving) = self.serving else {
            self.serving = Some(best);
            self.since = t;
            return None;
        };
        if best == serving || rssi[best] <= rssi[serving] + params.hysteresis {
            self.candidate = None;
            return None;
        }
        let started = match self.candidate {
            Some((cell, start)) if cell == best => start,
            _ => {
                self.candidate = Some((best, t));
                t
            }
        };
        if t - started + TIME_EPS < params.ttt {
            return None;
        }
        let event = HandoverEvent {
            time: t,
            from_cell: serving,
            to_cell: best,
            position,
        };
        self.serving = Some(best);
        self.since = t;
        self.candidate = None;
        self.history.push(event);
        Some(event)
    }
}

/// Index of the strongest entry; ties go to the lower index.
fn strongest(rssi: &[f64]) -> Option<usize> {
    rssi.iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, &r)| match best {
            Some((_, b)) if b >= r => best,
            _ => Some((i, r)),
        })
        .map(|(i, _)| i)
}

/// Flags each consecutive handover pair A→B, B→A whose times differ by at
/// most `window` seconds.
pub fn detect_ping_pong(history: &[HandoverEvent], window: f64) -> Vec<PingPong> {
    history
        .windows(2)
        .filter(|w| w[0].to_cell == w[1].from_cell && w[1].to_cell == w[0].from_cell && w[1].time - w[0].time <= window)
        .map(|w| PingPong {
            time: w[1].time,
            cell_a: w[0].from_cell,
            cell_b: w[0].to_cell,
        })
        .collect()
}
