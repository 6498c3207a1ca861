//! Hierarchical mobility: strategic choice, routing, car following, lane
//! changes, signals and kinematics.

mod idm;
mod kinematics;
mod mobil;
mod strategic;
mod vehicle;
mod world;

use thiserror::Error;

use crate::map::NodeId;
use crate::routing::RoutingError;

pub use idm::{idm_acceleration, IdmParams};
pub use kinematics::ballistic_update;
pub use mobil::{mobil_decide, FollowerAccelerations, LaneChangeCandidate, LaneDecision, MobilParams};
pub use strategic::{NextLeg, StrategicModel};
pub use vehicle::{DriveMode, Placement, Vehicle, VehicleId, VehicleSpec, DEFAULT_VEHICLE_LENGTH};
pub use world::{FollowerRecord, LaneChangeRecord, Leader, LeaderKind, Notice, World, WorldConfig, MIN_PERCEIVED_GAP};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MobilityError {
    #[error("gap must be positive, got {0}")]
    NonPositiveGap(f64),
    #[error("parameter `{name}` has invalid value {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("stranded at node {node}: no outgoing link")]
    Stranded { node: NodeId },
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error("placement `{key}`: {reason}")]
    Placement { key: &'static str, reason: String },
    #[error("vehicle {vehicle}: {source}")]
    Vehicle {
        vehicle: VehicleId,
        #[source]
        source: Box<MobilityError>,
    },
}
