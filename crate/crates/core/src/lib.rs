//! Discrete-event microscopic vehicular mobility simulation.
//!
//! Road networks come from OpenStreetMap extracts; vehicles follow a
//! strategic / routing / car-following / lane-change hierarchy on a
//! deterministic event kernel that can also be driven by a host simulator's
//! event queue. A passive cellular observer records signal strength and
//! handovers.
//!
//! The model equations are generic over [`num::Scalar`] (`f32` or `f64`);
//! the aliases below fix them to `f64`, which the simulation world uses.

pub mod des;
pub mod map;
pub mod mobility;
pub mod num;
pub mod radio;
pub mod rng;
pub mod routing;
pub mod scenario;

pub type Idm = mobility::IdmParams<f64>;
pub type Mobil = mobility::MobilParams<f64>;
pub type Position = map::Point<f64>;
pub type Coordinate = map::LatLon<f64>;
