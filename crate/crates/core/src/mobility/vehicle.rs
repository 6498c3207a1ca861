use std::fmt;

use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{IdmParams, MobilParams, MobilityError, StrategicModel};
use crate::map::{Direction, Link, NodeId, Point, RoadGraph, WayId};
use crate::routing::Route;

/// Bumper-to-bumper length used unless a spec overrides it, meters.
pub const DEFAULT_VEHICLE_LENGTH: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct VehicleId(pub u32);

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DriveMode {
    /// Car following and lane changes.
    Idm,
    /// Constant speed, no reaction to traffic. `FixedSpeed(0.0)` is a
    /// parked obstacle.
    FixedSpeed(f64),
}

/// Address of a spawn point: `(way, segment index, lane, offset)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Placement {
    pub way: WayId,
    pub segment: usize,
    /// 0 is the rightmost lane.
    pub lane: usize,
    /// Distance from the start of the segment in travel direction, meters.
    pub offset: f64,
    pub direction: Direction,
}

impl Placement {
    pub fn new(way: i64, segment: usize, lane: usize, offset: f64) -> Self {
        Self {
            way: WayId(way),
            segment,
            lane,
            offset,
            direction: Direction::Forward,
        }
    }

    /// Resolves to a traversable link, checking lane and offset.
    pub fn resolve(&self, graph: &RoadGraph) -> Result<Link, MobilityError> {
        let Some(way) = graph.way(self.way) else {
            return Err(MobilityError::Placement {
                key: "way",
                reason: format!("way {} is not a drivable way of the map", self.way),
            });
        };
        let seg = graph.segment_at(way.id, self.segment).map_err(|_| MobilityError::Placement {
            key: "segment",
            reason: format!("way {} has {} segments, index {} is out of range", way.id, way.segments.len(), self.segment),
        })?;
        let link = Link::new(seg.id, self.direction);
        let lanes = graph.lanes(link);
        if lanes == 0 {
            return Err(MobilityError::Placement {
                key: "direction",
                reason: format!("way {} cannot be driven {:?}", way.id, self.direction),
            });
        }
        if self.lane >= lanes {
            return Err(MobilityError::Placement {
                key: "lane",
                reason: format!("lane {} does not exist, the link has {lanes} lane(s)", self.lane),
            });
        }
        if !(self.offset.is_finite() && self.offset >= 0.0 && self.offset <= seg.length) {
            return Err(MobilityError::Placement {
                key: "offset",
                reason: format!("offset {} outside [0, {}]", self.offset, seg.length),
            });
        }
        Ok(link)
    }
}

/// Everything needed to put a vehicle on the map.
#[derive(Clone, Debug, PartialEq)]
pub struct VehicleSpec {
    pub placement: Placement,
    pub strategic: StrategicModel,
    pub idm: IdmParams<f64>,
    pub mobil: MobilParams<f64>,
    pub mode: DriveMode,
    /// Initial speed, m/s.
    pub speed: f64,
    /// Replaces the drawn speed factor. The draw still happens so the
    /// vehicle's stream stays aligned.
    pub speed_factor: Option<f64>,
    pub length: f64,
}

impl VehicleSpec {
    pub fn new(placement: Placement, strategic: StrategicModel) -> Self {
        Self {
            placement,
            strategic,
            idm: IdmParams::default(),
            mobil: MobilParams::default(),
            mode: DriveMode::Idm,
            speed: 0.0,
            speed_factor: None,
            length: DEFAULT_VEHICLE_LENGTH,
        }
    }
}

/// Cached outcome of the strategic decision at the end of the current
/// route, computed ahead of arrival on cloned state so perception can see
/// past the route end.
#[derive(Clone, Debug)]
pub(crate) struct Plan {
    pub strategic: StrategicModel,
    pub rng: ChaCha8Rng,
    pub leg: Result<Leg, MobilityError>,
}

#[derive(Clone, Debug)]
pub(crate) enum Leg {
    Route(Route),
    Done,
}

#[derive(Clone, Debug)]
pub struct Vehicle {
    pub id: VehicleId,
    pub link: Link,
    pub lane: usize,
    /// Front bumper offset from the link's tail, meters.
    pub s: f64,
    pub v: f64,
    pub acc: f64,
    /// Current route; `route.links[route_pos] == link`.
    pub route: Route,
    pub route_pos: usize,
    pub strategic: StrategicModel,
    pub idm: IdmParams<f64>,
    pub mobil: MobilParams<f64>,
    pub speed_factor: f64,
    pub length: f64,
    pub mode: DriveMode,
    /// Trip completed; the vehicle is parked and ignored by traffic.
    pub finished: bool,
    /// Distance driven, meters.
    pub odometer: f64,
    pub last_lane_change: Option<f64>,
    pub(crate) plan: Option<Plan>,
    pub(crate) rng: ChaCha8Rng,
    pub(crate) dilemma_reported: Option<NodeId>,
}

impl Vehicle {
    pub fn v0_eff(&self) -> f64 {
        self.idm.v0 * self.speed_factor
    }

    pub fn position(&self, graph: &RoadGraph) -> Point<f64> {
        graph.link_point(self.link, self.s)
    }

    /// Links from the current one to the end of the route.
    pub fn remaining_links(&self) -> &[Link] {
        &self.route.links[self.route_pos..]
    }
}
