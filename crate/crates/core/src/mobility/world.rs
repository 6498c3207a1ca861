//! The simulated road world and its fixed-step update.
//!
//! A step runs in three passes over the vehicles in ascending id order:
//! car following and lane-change decisions from the start-of-step snapshot,
//! lane-change execution, then the ballistic position update. Decisions
//! never see partially updated state, so the update order cannot change the
//! physics.

use std::collections::HashMap;
use std::sync::Arc;

use log::debug;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::vehicle::{Leg, Plan};
use super::{
    ballistic_update, mobil_decide, DriveMode, FollowerAccelerations, IdmParams, LaneChangeCandidate, LaneDecision,
    MobilParams, MobilityError, NextLeg, Placement, StrategicModel, Vehicle, VehicleId, VehicleSpec,
};
use crate::map::{Link, NodeId, RoadGraph};
use crate::rng;
use crate::routing::{shortest_path, Route};

/// Lower bound applied to perceived gaps before they reach the IDM.
pub const MIN_PERCEIVED_GAP: f64 = 0.01;

/// Placement attempts per interference vehicle before giving up.
const SPAWN_ATTEMPTS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorldConfig {
    /// How far ahead along the route perception looks, meters.
    pub horizon: f64,
    /// Minimum time between two lane changes of one vehicle, seconds.
    pub lane_change_cooldown: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            horizon: 500.0,
            lane_change_cooldown: 2.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LeaderKind {
    Vehicle(VehicleId),
    /// Yellow or red signal at this node, seen as a stopped vehicle.
    Signal(NodeId),
}

/// Nearest obstruction ahead.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Leader {
    pub kind: LeaderKind,
    /// Net gap in meters. Not clamped: zero or less means overlap.
    pub gap: f64,
    pub v: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FollowerRecord {
    pub id: VehicleId,
    /// Gap between the follower and the changing vehicle, meters.
    pub gap: f64,
    pub v: f64,
    /// Follower's IDM acceleration behind the changing vehicle.
    pub acc_after: f64,
}

/// An executed lane change with the state it was decided on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaneChangeRecord {
    pub t: f64,
    pub vehicle: VehicleId,
    pub link: Link,
    pub from_lane: usize,
    pub to_lane: usize,
    pub s: f64,
    pub v: f64,
    pub new_follower: Option<FollowerRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Notice {
    /// A trip vehicle reached one of its destinations.
    Arrival { t: f64, vehicle: VehicleId, node: NodeId },
    TripComplete { t: f64, vehicle: VehicleId, node: NodeId },
    /// A signal turned blocking while the vehicle was closer to the stop
    /// line than its comfortable stopping distance.
    DilemmaZone {
        t: f64,
        vehicle: VehicleId,
        node: NodeId,
        distance: f64,
        speed: f64,
    },
    LaneChange(LaneChangeRecord),
}

/// `(link, lane)` → `(s, vehicle index)` sorted by position.
type Occupancy = HashMap<(Link, usize), Vec<(f64, usize)>>;

struct ChangeIntent {
    vehicle: usize,
    target: usize,
    acc_after: f64,
    new_leader: Option<VehicleId>,
    new_follower: Option<(usize, f64, f64)>,
}

pub struct World {
    graph: Arc<RoadGraph>,
    seed: u64,
    config: WorldConfig,
    vehicles: Vec<Vehicle>,
    notices: Vec<Notice>,
    collisions: u64,
    min_gap: f64,
}

impl World {
    pub fn new(graph: Arc<RoadGraph>, seed: u64, config: WorldConfig) -> Self {
        Self {
            graph,
            seed,
            config,
            vehicles: Vec::new(),
            notices: Vec::new(),
            collisions: 0,
            min_gap: f64::INFINITY,
        }
    }

    pub fn graph(&self) -> &RoadGraph {
        &self.graph
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn config(&self) -> &WorldConfig {
        &self.config
    }

    pub fn vehicles(&self) -> &[Vehicle] {
        &self.vehicles
    }

    pub fn vehicle(&self, id: VehicleId) -> Option<&Vehicle> {
        self.vehicles.get(id.0 as usize)
    }

    /// Vehicle-steps in which a vehicle overlapped the one ahead of it.
    pub fn collisions(&self) -> u64 {
        self.collisions
    }

    /// Smallest net gap to a leading vehicle seen so far, meters.
    pub fn min_gap(&self) -> f64 {
        self.min_gap
    }

    pub fn take_notices(&mut self) -> Vec<Notice> {
        std::mem::take(&mut self.notices)
    }

    fn next_id(&self) -> VehicleId {
        VehicleId(u32::try_from(self.vehicles.len()).expect("vehicle count fits in u32"))
    }

    /// Places a vehicle exactly as addressed by `spec.placement`.
    pub fn spawn(&mut self, spec: VehicleSpec) -> Result<VehicleId, MobilityError> {
        let id = self.next_id();
        let link = spec.placement.resolve(&self.graph)?;
        let mut rng = rng::vehicle_stream(self.seed, id.0);
        let drawn: f64 = rng.random_range(0.8..=1.2);
        let vehicle = self.build_vehicle(id, link, spec.placement.lane, spec.placement.offset, spec, drawn, rng)?;
        self.vehicles.push(vehicle);
        Ok(id)
    }

    /// Places a vehicle at a random free spot drawn from its own stream.
    pub fn spawn_random(
        &mut self,
        strategic: StrategicModel,
        idm: IdmParams<f64>,
        mobil: MobilParams<f64>,
    ) -> Result<VehicleId, MobilityError> {
        let id = self.next_id();
        let mut rng = rng::vehicle_stream(self.seed, id.0);
        let mut spec = VehicleSpec::new(Placement::new(0, 0, 0, 0.0), strategic);
        spec.idm = idm;
        spec.mobil = mobil;
        let length = spec.length;
        let links: Vec<Link> = self.graph.links().filter(|l| self.graph.link_length(*l) >= length).collect();
        if links.is_empty() {
            return Err(MobilityError::Placement {
                key: "interference.count",
                reason: "no link is long enough to hold a vehicle".into(),
            });
        }
        for _ in 0..SPAWN_ATTEMPTS {
            let link = links[rng.random_range(0..links.len())];
            let lane = rng.random_range(0..self.graph.lanes(link));
            let s = rng.random_range(length..=self.graph.link_length(link));
            let clearance = length + idm.s0;
            let blocked = self
                .vehicles
                .iter()
                .any(|o| !o.finished && o.link == link && o.lane == lane && (o.s - s).abs() < clearance.max(o.length + idm.s0));
            if blocked {
                continue;
            }
            let drawn: f64 = rng.random_range(0.8..=1.2);
            let vehicle = self.build_vehicle(id, link, lane, s, spec, drawn, rng)?;
            self.vehicles.push(vehicle);
            return Ok(id);
        }
        Err(MobilityError::Placement {
            key: "interference.count",
            reason: format!("no free spot found for vehicle {id} after {SPAWN_ATTEMPTS} attempts"),
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn build_vehicle(
        &self,
        id: VehicleId,
        link: Link,
        lane: usize,
        s: f64,
        spec: VehicleSpec,
        drawn_factor: f64,
        rng: ChaCha8Rng,
    ) -> Result<Vehicle, MobilityError> {
        spec.idm.validate()?;
        spec.mobil.validate()?;
        let speed_factor = spec.speed_factor.unwrap_or(drawn_factor);
        let checks = [
            ("speed_factor", speed_factor, speed_factor > 0.0),
            ("speed", spec.speed, spec.speed >= 0.0),
            ("length", spec.length, spec.length > 0.0),
        ];
        for (name, value, ok) in checks {
            if !(ok && value.is_finite()) {
                return Err(MobilityError::InvalidParameter { name, value });
            }
        }
        if let DriveMode::FixedSpeed(v) = spec.mode {
            if !(v.is_finite() && v >= 0.0) {
                return Err(MobilityError::InvalidParameter { name: "fixed_speed", value: v });
            }
        }
        let route = initial_route(&self.graph, link, &spec.strategic).map_err(|e| MobilityError::Vehicle {
            vehicle: id,
            source: Box::new(e),
        })?;
        let v = match spec.mode {
            DriveMode::FixedSpeed(v) => v,
            DriveMode::Idm => spec.speed,
        };
        Ok(Vehicle {
            id,
            link,
            lane,
            s,
            v,
            acc: 0.0,
            route,
            route_pos: 0,
            strategic: spec.strategic,
            idm: spec.idm,
            mobil: spec.mobil,
            speed_factor,
            length: spec.length,
            mode: spec.mode,
            finished: false,
            odometer: 0.0,
            last_lane_change: None,
            plan: None,
            rng,
            dilemma_reported: None,
        })
    }

    fn occupancy(&self) -> Occupancy {
        let mut occ: Occupancy = HashMap::new();
        for (i, v) in self.vehicles.iter().enumerate().filter(|(_, v)| !v.finished) {
            occ.entry((v.link, v.lane)).or_default().push((v.s, i));
        }
        for list in occ.values_mut() {
            list.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        }
        occ
    }

    /// Links ahead of the vehicle: the rest of its route, then the planned
    /// next leg if one has been computed.
    fn links_ahead(&self, veh: &Vehicle) -> impl Iterator<Item = Link> + '_ {
        let planned: &[Link] = match &veh.plan {
            Some(Plan {
                leg: Ok(Leg::Route(r)), ..
            }) => &r.links,
            _ => &[],
        };
        veh.remaining_links().iter().chain(planned.iter()).copied().collect::<Vec<_>>().into_iter()
    }

    /// Nearest vehicle or blocking signal ahead of vehicle `id` in its lane
    /// at time `t`. May plan the vehicle's next leg to see past its route.
    pub fn perceive_leader(&mut self, id: VehicleId, t: f64) -> Option<Leader> {
        self.ensure_plans();
        let veh = self.vehicle(id)?;
        self.scan_ahead(&self.occupancy(), id.0 as usize, veh.lane, t)
    }

    fn scan_ahead(&self, occ: &Occupancy, idx: usize, lane: usize, t: f64) -> Option<Leader> {
        let veh = &self.vehicles[idx];
        let horizon = self.config.horizon;
        let mut lane = lane;
        // Distance from the ego front bumper to the tail of the current link.
        let mut dist = -veh.s;
        for (k, link) in self.links_ahead(veh).enumerate() {
            if dist > horizon {
                break;
            }
            if k > 0 {
                lane = lane.min(self.graph.lanes(link).saturating_sub(1));
            }
            if let Some(list) = occ.get(&(link, lane)) {
                let ahead = |&&(s, j): &&(f64, usize)| j != idx && (k > 0 || s > veh.s || (s == veh.s && j > idx));
                if let Some(&(s, j)) = list.iter().find(ahead) {
                    let other = &self.vehicles[j];
                    let gap = dist + s - other.length;
                    if gap > horizon {
                        return None;
                    }
                    return Some(Leader {
                        kind: LeaderKind::Vehicle(other.id),
                        gap,
                        v: other.v,
                    });
                }
            }
            let to_line = dist + self.graph.link_length(link);
            let node = self.graph.link_head(link);
            if let Some(signal) = self.graph.signal(node) {
                if to_line <= horizon && signal.phase_at(t).blocks() {
                    // Virtual stopped car half a minimum gap past the stop line.
                    return Some(Leader {
                        kind: LeaderKind::Signal(node),
                        gap: to_line + veh.idm.s0 / 2.0,
                        v: 0.0,
                    });
                }
            }
            dist = to_line;
        }
        None
    }

    /// Closest vehicle behind `veh` in `lane`, with its net gap. Looks back
    /// onto the link the vehicle came from.
    fn scan_behind(&self, occ: &Occupancy, idx: usize, lane: usize) -> Option<(usize, f64)> {
        let veh = &self.vehicles[idx];
        if let Some(list) = occ.get(&(veh.link, lane)) {
            let behind = |&&(s, j): &&(f64, usize)| j != idx && (s < veh.s || (s == veh.s && j < idx));
            if let Some(&(s, j)) = list.iter().rev().find(behind) {
                return Some((j, veh.s - veh.length - s));
            }
        }
        let prev = *veh.route.links.get(veh.route_pos.checked_sub(1)?)?;
        if lane >= self.graph.lanes(prev) {
            return None;
        }
        let &(s, j) = occ.get(&(prev, lane))?.last()?;
        (j != idx).then(|| (j, self.graph.link_length(prev) - s + veh.s - veh.length))
    }

    fn idm_response(veh: &Vehicle, leader: Option<Leader>) -> f64 {
        let (dv, gap) = match leader {
            None => (0.0, f64::INFINITY),
            Some(l) => (veh.v - l.v, l.gap.max(MIN_PERCEIVED_GAP)),
        };
        veh.idm
            .acceleration(veh.v, veh.v0_eff(), dv, gap)
            .expect("perceived gap is clamped positive")
    }

    fn lane_change_candidate(
        &self,
        occ: &Occupancy,
        idx: usize,
        target: usize,
        t: f64,
        leader: Option<Leader>,
        idm_acc: &[f64],
    ) -> Option<(LaneChangeCandidate<f64>, ChangeIntent)> {
        let veh = &self.vehicles[idx];
        let new_leader = self.scan_ahead(occ, idx, target, t);
        if new_leader.is_some_and(|l| l.gap <= 0.0) {
            return None;
        }
        let ego_after = Self::idm_response(veh, new_leader);
        let nf = self.scan_behind(occ, idx, target);
        if nf.is_some_and(|(_, gap)| gap <= 0.0) {
            return None;
        }
        let new_follower = nf.map(|(j, gap)| {
            let f = &self.vehicles[j];
            let after = Self::idm_response(
                f,
                Some(Leader {
                    kind: LeaderKind::Vehicle(veh.id),
                    gap,
                    v: veh.v,
                }),
            );
            (j, gap, after)
        });
        let old_follower = self.scan_behind(occ, idx, veh.lane).map(|(j, gap)| {
            let f = &self.vehicles[j];
            let inherited = leader.map(|l| Leader {
                gap: gap + veh.length + l.gap,
                ..l
            });
            FollowerAccelerations {
                now: idm_acc[j],
                after: Self::idm_response(f, inherited),
            }
        });
        let candidate = LaneChangeCandidate {
            ego_now: idm_acc[idx],
            ego_after,
            new_follower: new_follower.map(|(j, _, after)| FollowerAccelerations { now: idm_acc[j], after }),
            old_follower,
        };
        let intent = ChangeIntent {
            vehicle: idx,
            target,
            acc_after: ego_after,
            new_leader: vehicle_of(new_leader),
            new_follower,
        };
        Some((candidate, intent))
    }

    fn ensure_plans(&mut self) {
        let horizon = self.config.horizon;
        for i in 0..self.vehicles.len() {
            let veh = &self.vehicles[i];
            if veh.finished || veh.plan.is_some() {
                continue;
            }
            let rest: f64 = veh.remaining_links()[1..].iter().map(|l| self.graph.link_length(*l)).sum();
            if self.graph.link_length(veh.link) - veh.s + rest < horizon {
                let plan = plan_next_leg(&self.graph, veh);
                self.vehicles[i].plan = Some(plan);
            }
        }
    }

    /// Advances the world from `t` to `t + dt`.
    pub fn step(&mut self, t: f64, dt: f64) -> Result<(), MobilityError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(MobilityError::InvalidParameter { name: "dt", value: dt });
        }
        self.ensure_plans();
        let occ = self.occupancy();
        let n = self.vehicles.len();

        // Car following from the snapshot.
        let mut leaders = vec![None; n];
        let mut idm_acc = vec![0.0; n];
        let mut dilemmas = Vec::new();
        for (i, veh) in self.vehicles.iter().enumerate() {
            if veh.finished {
                continue;
            }
            let leader = self.scan_ahead(&occ, i, veh.lane, t);
            match leader {
                Some(Leader {
                    kind: LeaderKind::Vehicle(_),
                    gap,
                    ..
                }) => {
                    self.min_gap = self.min_gap.min(gap);
                    if gap <= 0.0 {
                        self.collisions += 1;
                    }
                }
                Some(Leader {
                    kind: LeaderKind::Signal(node),
                    gap,
                    ..
                }) if veh.dilemma_reported != Some(node) => {
                    let distance = gap - veh.idm.s0 / 2.0;
                    if veh.v * veh.v / (2.0 * veh.idm.b_comf) > distance {
                        dilemmas.push((i, node, distance));
                    }
                }
                _ => {}
            }
            leaders[i] = leader;
            idm_acc[i] = Self::idm_response(veh, leader);
        }
        for (i, node, distance) in dilemmas {
            let veh = &mut self.vehicles[i];
            veh.dilemma_reported = Some(node);
            self.notices.push(Notice::DilemmaZone {
                t,
                vehicle: veh.id,
                node,
                distance,
                speed: veh.v,
            });
        }

        // Lane-change decisions from the same snapshot.
        let mut intents = Vec::new();
        for (i, veh) in self.vehicles.iter().enumerate() {
            let lanes = self.graph.lanes(veh.link);
            let cooled = veh
                .last_lane_change
                .is_none_or(|last| t - last >= self.config.lane_change_cooldown - 1e-9);
            if veh.finished || veh.mode != DriveMode::Idm || lanes < 2 || !cooled {
                continue;
            }
            let mut left = None;
            let mut right = None;
            if veh.lane + 1 < lanes {
                left = self.lane_change_candidate(&occ, i, veh.lane + 1, t, leaders[i], &idm_acc);
            }
            if veh.lane > 0 {
                right = self.lane_change_candidate(&occ, i, veh.lane - 1, t, leaders[i], &idm_acc);
            }
            let decision = mobil_decide(&veh.mobil, left.as_ref().map(|c| &c.0), right.as_ref().map(|c| &c.0));
            let chosen = match decision {
                LaneDecision::Stay => None,
                LaneDecision::ChangeLeft => left,
                LaneDecision::ChangeRight => right,
            };
            intents.extend(chosen.map(|c| c.1));
        }

        // Execute in id order. A change is dropped when an earlier change
        // altered its neighbours in the target lane.
        if !intents.is_empty() {
            let mut live = occ.clone();
            for intent in intents {
                let i = intent.vehicle;
                let leader_now = vehicle_of(self.scan_ahead(&live, i, intent.target, t));
                let follower_now = self.scan_behind(&live, i, intent.target).map(|f| f.0);
                if leader_now != intent.new_leader || follower_now != intent.new_follower.map(|f| f.0) {
                    debug!("vehicle {i}: lane change to {} dropped after a conflicting change", intent.target);
                    continue;
                }
                let (link, from, s) = {
                    let veh = &self.vehicles[i];
                    (veh.link, veh.lane, veh.s)
                };
                if let Some(list) = live.get_mut(&(link, from)) {
                    list.retain(|e| e.1 != i);
                }
                let list = live.entry((link, intent.target)).or_default();
                let at = list.partition_point(|e| e.0 < s || (e.0 == s && e.1 < i));
                list.insert(at, (s, i));

                let record = LaneChangeRecord {
                    t,
                    vehicle: self.vehicles[i].id,
                    link,
                    from_lane: from,
                    to_lane: intent.target,
                    s,
                    v: self.vehicles[i].v,
                    new_follower: intent.new_follower.map(|(j, gap, acc_after)| FollowerRecord {
                        id: self.vehicles[j].id,
                        gap,
                        v: self.vehicles[j].v,
                        acc_after,
                    }),
                };
                let veh = &mut self.vehicles[i];
                veh.lane = intent.target;
                veh.last_lane_change = Some(t);
                idm_acc[i] = intent.acc_after;
                self.notices.push(Notice::LaneChange(record));
            }
        }

        // Kinematics.
        for (i, &acc) in idm_acc.iter().enumerate() {
            if self.vehicles[i].finished {
                continue;
            }
            let veh = &mut self.vehicles[i];
            let acc = match veh.mode {
                DriveMode::Idm => acc,
                DriveMode::FixedSpeed(v) => {
                    veh.v = v;
                    0.0
                }
            };
            let (ds, v_next) = ballistic_update(veh.v, acc, dt);
            veh.acc = acc;
            veh.v = v_next;
            self.advance(i, ds, t + dt).map_err(|e| MobilityError::Vehicle {
                vehicle: VehicleId(i as u32),
                source: Box::new(e),
            })?;
        }
        Ok(())
    }

    fn advance(&mut self, i: usize, ds: f64, t: f64) -> Result<(), MobilityError> {
        let graph = Arc::clone(&self.graph);
        let veh = &mut self.vehicles[i];
        veh.s += ds;
        veh.odometer += ds;
        loop {
            let len = graph.link_length(veh.link);
            if veh.s < len {
                return Ok(());
            }
            if veh.route_pos + 1 < veh.route.links.len() {
                veh.s -= len;
                veh.route_pos += 1;
                enter_link(&graph, veh, veh.route.links[veh.route_pos]);
                continue;
            }
            // End of route: commit the strategic decision.
            let node = graph.link_head(veh.link);
            let plan = match veh.plan.take() {
                Some(plan) => plan,
                None => plan_next_leg(&graph, veh),
            };
            veh.strategic = plan.strategic;
            veh.rng = plan.rng;
            if veh.strategic.is_trip() {
                self.notices.push(Notice::Arrival {
                    t,
                    vehicle: veh.id,
                    node,
                });
            }
            match plan.leg? {
                Leg::Done => {
                    veh.s = len;
                    veh.v = 0.0;
                    veh.acc = 0.0;
                    veh.finished = true;
                    self.notices.push(Notice::TripComplete {
                        t,
                        vehicle: veh.id,
                        node,
                    });
                    return Ok(());
                }
                Leg::Route(route) => {
                    veh.s -= len;
                    let first = route.links[0];
                    veh.route = route;
                    veh.route_pos = 0;
                    enter_link(&graph, veh, first);
                }
            }
        }
    }
}

fn vehicle_of(leader: Option<Leader>) -> Option<VehicleId> {
    match leader {
        Some(Leader {
            kind: LeaderKind::Vehicle(id),
            ..
        }) => Some(id),
        _ => None,
    }
}

/// Lanes merge towards the right when the next link has fewer of them.
fn enter_link(graph: &RoadGraph, veh: &mut Vehicle, link: Link) {
    veh.link = link;
    veh.lane = veh.lane.min(graph.lanes(link).saturating_sub(1));
    veh.dilemma_reported = None;
}

fn initial_route(graph: &RoadGraph, link: Link, strategic: &StrategicModel) -> Result<Route, MobilityError> {
    let single = Route::single(graph, link);
    let Some(dest) = strategic.current_destination() else {
        return Ok(single);
    };
    let head = graph.link_head(link);
    if head == dest {
        return Ok(single);
    }
    let rest = shortest_path(graph, head, dest)?;
    Ok(Route {
        node_ids: [graph.link_tail(link)].into_iter().chain(rest.node_ids).collect(),
        links: [link].into_iter().chain(rest.links).collect(),
        total_cost: single.total_cost + rest.total_cost,
    })
}

/// Decision at the end of the vehicle's route, evaluated on cloned state.
fn plan_next_leg(graph: &RoadGraph, veh: &Vehicle) -> Plan {
    let mut strategic = veh.strategic.clone();
    let mut rng = veh.rng.clone();
    let via = *veh.route.links.last().expect("routes of placed vehicles have links");
    let node = graph.link_head(via);
    let leg = next_leg(graph, &mut strategic, &mut rng, node, via);
    Plan { strategic, rng, leg }
}

fn next_leg(
    graph: &RoadGraph,
    strategic: &mut StrategicModel,
    rng: &mut ChaCha8Rng,
    node: NodeId,
    via: Link,
) -> Result<Leg, MobilityError> {
    loop {
        match strategic.next(graph, node, Some(via), rng)? {
            NextLeg::Done => return Ok(Leg::Done),
            NextLeg::Link(link) => return Ok(Leg::Route(Route::single(graph, link))),
            // Consecutive duplicate destination: already there.
            NextLeg::Destination(d) if d == node => continue,
            NextLeg::Destination(d) => return Ok(Leg::Route(shortest_path(graph, node, d)?)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::synthetic::{corridor_graph, CorridorSpec};
    use crate::map::{LatLon, RoadGraphBuilder, SignalTiming, WaySpec};
    use approx::assert_relative_eq;

    fn corridor(length: f64, segments: usize, lanes: u8) -> Arc<RoadGraph> {
        let mut spec = CorridorSpec::new(length, segments);
        spec.lanes = lanes;
        Arc::new(corridor_graph(&spec).unwrap())
    }

    fn spec_at(segment: usize, lane: usize, offset: f64) -> VehicleSpec {
        let mut s = VehicleSpec::new(Placement::new(1, segment, lane, offset), StrategicModel::RandomDirection);
        s.speed_factor = Some(1.0);
        s
    }

    #[test]
    fn free_vehicle_at_desired_speed_cruises() {
        let mut w = World::new(corridor(1000.0, 1, 1), 1, WorldConfig::default());
        let mut spec = spec_at(0, 0, 10.0);
        spec.speed = 13.89;
        let id = w.spawn(spec).unwrap();
        w.step(0.0, 0.1).unwrap();
        let v = w.vehicle(id).unwrap();
        assert_relative_eq!(v.s, 10.0 + 1.389, epsilon = 1e-12);
        assert_eq!(v.v, 13.89);
    }

    #[test]
    fn crossing_a_segment_boundary_carries_the_remainder() {
        let g = corridor(300.0, 3, 1);
        let mut w = World::new(g.clone(), 1, WorldConfig::default());
        let mut spec = spec_at(0, 0, 98.0);
        spec.mode = DriveMode::FixedSpeed(10.0);
        let id = w.spawn(spec).unwrap();
        w.step(0.0, 0.5).unwrap();
        let v = w.vehicle(id).unwrap();
        assert_eq!(g.segment(v.link.segment).index, 1);
        assert_relative_eq!(v.s, 3.0, epsilon = 1e-9);
    }

    #[test]
    fn leader_gap_is_net_of_vehicle_length() {
        let mut w = World::new(corridor(1000.0, 1, 1), 1, WorldConfig::default());
        let mut ego = spec_at(0, 0, 100.0);
        ego.speed = 8.0;
        let mut lead = spec_at(0, 0, 120.0);
        lead.speed = 5.0;
        let e = w.spawn(ego).unwrap();
        let l = w.spawn(lead).unwrap();
        let leader = w.perceive_leader(e, 0.0).unwrap();
        assert_eq!(leader.kind, LeaderKind::Vehicle(l));
        assert_relative_eq!(leader.gap, 20.0 - 5.0);
        assert_relative_eq!(8.0 - leader.v, 3.0);
    }

    #[test]
    fn perception_crosses_segments_and_stops_at_horizon() {
        let mut w = World::new(corridor(2000.0, 4, 1), 1, WorldConfig::default());
        let e = w.spawn(spec_at(0, 0, 400.0)).unwrap();
        w.spawn(spec_at(1, 0, 200.0)).unwrap();
        let leader = w.perceive_leader(e, 0.0).unwrap();
        assert_relative_eq!(leader.gap, 100.0 + 200.0 - 5.0);

        let mut far = World::new(corridor(2000.0, 4, 1), 1, WorldConfig::default());
        let e = far.spawn(spec_at(0, 0, 0.0)).unwrap();
        far.spawn(spec_at(2, 0, 100.0)).unwrap();
        assert_eq!(far.perceive_leader(e, 0.0), None);
    }

    fn signalled(timing: SignalTiming) -> Arc<RoadGraph> {
        Arc::new(
            RoadGraphBuilder::new(LatLon::new(0.0, 0.0))
                .node(1, 0.0, 0.0)
                .node(2, 200.0, 0.0)
                .node(3, 400.0, 0.0)
                .way(WaySpec::new(1, [1, 2, 3]).one_way())
                .signal(2, timing)
                .build()
                .unwrap(),
        )
    }

    #[test]
    fn red_signal_is_a_static_leader_and_green_is_invisible() {
        let red_first = SignalTiming::new(30.0, 5.0, 25.0, 20.0).unwrap();
        let mut w = World::new(signalled(red_first), 1, WorldConfig::default());
        let mut spec = spec_at(0, 0, 160.0);
        spec.speed = 10.0;
        let e = w.spawn(spec).unwrap();
        let leader = w.perceive_leader(e, 0.0).unwrap();
        assert_eq!(leader.kind, LeaderKind::Signal(NodeId(2)));
        assert_relative_eq!(leader.gap, 40.0 + 1.0);
        assert_eq!(leader.v, 0.0);
        // Green from t = 20 to 50.
        assert_eq!(w.perceive_leader(e, 30.0), None);
    }

    #[test]
    fn trip_vehicle_completes_and_parks() {
        let mut w = World::new(corridor(300.0, 3, 1), 1, WorldConfig::default());
        let mut spec = VehicleSpec::new(Placement::new(1, 0, 0, 0.0), StrategicModel::trip([NodeId(3), NodeId(4)]));
        spec.mode = DriveMode::FixedSpeed(10.0);
        let id = w.spawn(spec).unwrap();
        for k in 0..400 {
            w.step(k as f64 * 0.1, 0.1).unwrap();
        }
        let v = w.vehicle(id).unwrap();
        assert!(v.finished);
        assert_relative_eq!(v.odometer, 300.0, epsilon = 1.0);
        let notices = w.take_notices();
        let arrivals: Vec<_> = notices
            .iter()
            .filter_map(|n| match n {
                Notice::Arrival { node, .. } => Some(*node),
                _ => None,
            })
            .collect();
        assert_eq!(arrivals, vec![NodeId(3), NodeId(4)]);
        assert!(matches!(notices.last(), Some(Notice::TripComplete { node: NodeId(4), .. })));
    }

    #[test]
    fn random_vehicle_on_one_way_dead_end_is_stranded() {
        let mut w = World::new(corridor(100.0, 1, 1), 1, WorldConfig::default());
        let mut spec = spec_at(0, 0, 95.0);
        spec.mode = DriveMode::FixedSpeed(10.0);
        w.spawn(spec).unwrap();
        let err = w.step(0.0, 1.0).unwrap_err();
        assert!(matches!(err, MobilityError::Vehicle { source, .. } if matches!(*source, MobilityError::Stranded { .. })));
    }

    #[test]
    fn placement_errors_name_the_key() {
        let mut w = World::new(corridor(100.0, 2, 1), 1, WorldConfig::default());
        let key = |r: Result<VehicleId, MobilityError>| match r {
            Err(MobilityError::Placement { key, .. }) => key,
            other => panic!("{other:?}"),
        };
        assert_eq!(key(w.spawn(spec_at(0, 0, 50.1))), "offset");
        assert_eq!(key(w.spawn(spec_at(2, 0, 0.0))), "segment");
        assert_eq!(key(w.spawn(spec_at(0, 1, 0.0))), "lane");
        let mut other_way = spec_at(0, 0, 0.0);
        other_way.placement.way = crate::map::WayId(9);
        assert_eq!(key(w.spawn(other_way)), "way");
        let mut backwards = spec_at(0, 0, 0.0);
        backwards.placement.direction = crate::map::Direction::Backward;
        assert_eq!(key(w.spawn(backwards)), "direction");
    }

    #[test]
    fn interference_spawns_get_distinct_ids_and_factors() {
        let mut w = World::new(corridor(5000.0, 10, 2), 9, WorldConfig::default());
        for _ in 0..100 {
            w.spawn_random(StrategicModel::RandomDirection, IdmParams::default(), MobilParams::default())
                .unwrap();
        }
        let ids: std::collections::BTreeSet<_> = w.vehicles().iter().map(|v| v.id).collect();
        assert_eq!(ids.len(), 100);
        assert!(w.vehicles().iter().all(|v| (0.8..=1.2).contains(&v.speed_factor)));
        let factors: std::collections::BTreeSet<u64> = w.vehicles().iter().map(|v| v.speed_factor.to_bits()).collect();
        assert_eq!(factors.len(), 100);
    }

    #[test]
    fn blocked_vehicle_changes_to_free_lane() {
        let mut w = World::new(corridor(1000.0, 1, 2), 1, WorldConfig::default());
        let mut obstacle = spec_at(0, 0, 120.0);
        obstacle.mode = DriveMode::FixedSpeed(0.0);
        w.spawn(obstacle).unwrap();
        let mut ego = spec_at(0, 0, 100.0);
        ego.speed = 10.0;
        let e = w.spawn(ego).unwrap();
        w.step(0.0, 0.1).unwrap();
        assert_eq!(w.vehicle(e).unwrap().lane, 1);
        let notices = w.take_notices();
        assert!(matches!(notices[..], [Notice::LaneChange(LaneChangeRecord { from_lane: 0, to_lane: 1, .. })]));
    }
}
