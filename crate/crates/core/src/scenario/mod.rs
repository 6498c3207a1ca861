//! Scenario runner: configuration, the simulation loop on the event kernel,
//! and trace, event, summary and map exports.

mod config;
mod export;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::{info, warn};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{load_config, ConfigError, InterferenceConfig, KeyLines, ScenarioConfig, StrategicKind, VehicleConfig};
pub use export::{export_svg, read_trace, spacetime, trace_paths, write_spacetime, SpaceTimeRow, SvgOptions, TracePath};

use crate::des::{HandlerId, Kernel, RunError, SimTime};
use crate::map::{parse_osm, MapError, RoadGraph};
use crate::mobility::{DriveMode, MobilityError, Notice, StrategicModel, VehicleId, VehicleSpec, World};
use crate::radio::{rssi_shadowed, Attachment, BaseStation, HandoverParams, RadioParams};
use crate::rng;

/// Exact trace header.
pub const TRACE_HEADER: &str = "t,vehicle_id,x,y,v,acc,serving_cell,rssi";
/// Exact events header.
pub const EVENTS_HEADER: &str = "t,kind,vehicle_id,node,from,to,x,y";

pub const TRACE_FILE: &str = "trace.csv";
pub const EVENTS_FILE: &str = "events.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const ECHO_FILE: &str = "config.echo";

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("map {path}: {source}")]
    Map {
        path: PathBuf,
        #[source]
        source: MapError,
    },
    #[error("cannot read config {path}: {source}")]
    ConfigFile {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("cannot read map {path}: {source}")]
    MapFile {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("t = {t}s: {source}")]
    Runtime {
        t: f64,
        #[source]
        source: MobilityError,
    },
    #[error("event kernel: {0}")]
    Kernel(#[from] crate::des::DesError),
    #[error("unsupported scenario: {0}")]
    Unsupported(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl ScenarioError {
    /// Process exit status for this error: 1 for bad input, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Config(_)
            | ScenarioError::ConfigFile { .. }
            | ScenarioError::Map { .. }
            | ScenarioError::MapFile { .. } => 1,
            _ => 2,
        }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        ScenarioError::Io {
            path: path.to_owned(),
            source,
        }
    }
}

/// One row of `trace.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub vehicle_id: u32,
    pub x: f64,
    pub y: f64,
    pub v: f64,
    pub acc: f64,
    pub serving_cell: Option<String>,
    pub rssi: Option<f64>,
}

/// One row of `events.csv`. `from`/`to` hold cells for handovers and
/// ping-pongs and lanes for lane changes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EventRecord {
    pub t: f64,
    pub kind: &'static str,
    pub vehicle_id: u32,
    pub node: Option<i64>,
    pub from: Option<String>,
    pub to: Option<String>,
    pub x: Option<f64>,
    pub y: Option<f64>,
}

impl EventRecord {
    fn new(t: f64, kind: &'static str, vehicle: VehicleId) -> Self {
        Self {
            t,
            kind,
            vehicle_id: vehicle.0,
            node: None,
            from: None,
            to: None,
            x: None,
            y: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VehicleSummary {
    pub id: u32,
    /// Config name; interference vehicles have none.
    pub name: Option<String>,
    pub distance: f64,
    pub mean_speed: f64,
    pub handovers: usize,
    pub ping_pongs: usize,
    /// Only for trip vehicles.
    pub trip_complete: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub completed: bool,
    pub error: Option<String>,
    /// Simulated time reached, seconds.
    pub final_time: f64,
    pub duration: f64,
    pub seed: u64,
    pub events_fired: u64,
    pub trace_rows: usize,
    pub handovers: usize,
    pub ping_pongs: usize,
    pub lane_changes: usize,
    pub collisions: u64,
    pub vehicles: Vec<VehicleSummary>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Tick {
    Step,
    Sample,
}

const MOBILITY: HandlerId = HandlerId(0);
const OBSERVER: HandlerId = HandlerId(1);

/// Per-vehicle radio state.
#[derive(Clone, Debug, Default)]
struct RadioState {
    attachment: Attachment,
    rssi: Vec<f64>,
    ping_pongs: usize,
}

/// A scenario instantiated on a map, ready to run.
pub struct Simulation {
    config: ScenarioConfig,
    world: World,
    names: Vec<Option<String>>,
    stations: Vec<BaseStation>,
    radio: RadioParams,
    handover: HandoverParams,
    radio_state: Vec<RadioState>,
    shadowing: ChaCha8Rng,
    trace: Vec<TraceSample>,
    events: Vec<EventRecord>,
    trip_complete: Vec<bool>,
    final_time: f64,
    events_fired: u64,
    error: Option<String>,
}

impl Simulation {
    /// Builds the world: applies signal overrides and spawns configured and
    /// interference vehicles. Placement problems are config errors naming
    /// the offending key.
    pub fn new(config: ScenarioConfig, mut graph: RoadGraph) -> Result<Self, ScenarioError> {
        for (node, timing) in &config.signals {
            graph.set_signal(*node, *timing).map_err(|e| {
                let key = format!("signal.{node}.green");
                ConfigError::Invalid {
                    line: config.line_of(&key),
                    key,
                    reason: e.to_string(),
                }
            })?;
        }
        let mut world = World::new(Arc::new(graph), config.seed, config.mobility);
        let mut names = Vec::new();
        for vc in &config.vehicles {
            let strategic = match &vc.strategic {
                StrategicKind::Trip(nodes) => StrategicModel::trip(nodes.iter().copied()),
                StrategicKind::RandomDirection => StrategicModel::RandomDirection,
            };
            let mut spec = VehicleSpec::new(vc.placement, strategic);
            spec.idm = vc.idm;
            spec.mobil = vc.mobil;
            spec.speed = vc.speed;
            spec.speed_factor = vc.speed_factor;
            spec.length = vc.length;
            if let Some(v) = vc.fixed_speed {
                spec.mode = DriveMode::FixedSpeed(v);
            }
            world
                .spawn(spec)
                .map_err(|e| placement_error(&config, &format!("vehicle.{}", vc.name), "way", e))?;
            names.push(Some(vc.name.clone()));
        }
        for _ in 0..config.interference.count {
            world
                .spawn_random(StrategicModel::RandomDirection, config.interference.idm, config.interference.mobil)
                .map_err(|e| placement_error(&config, "interference", "count", e))?;
            names.push(None);
        }
        let n = world.vehicles().len();
        let trip_complete = vec![false; n];
        Ok(Self {
            world,
            names,
            stations: config.stations.clone(),
            radio: config.radio,
            handover: config.handover,
            radio_state: vec![RadioState::default(); n],
            shadowing: rng::stream(config.seed, rng::SHARED_STREAM),
            trace: Vec::new(),
            events: Vec::new(),
            trip_complete,
            final_time: 0.0,
            events_fired: 0,
            error: None,
            config,
        })
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn trace(&self) -> &[TraceSample] {
        &self.trace
    }

    pub fn events(&self) -> &[EventRecord] {
        &self.events
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    /// Runs to the configured duration. On a runtime error everything
    /// recorded so far stays available for [`Simulation::write_artifacts`].
    pub fn run(&mut self) -> Result<(), ScenarioError> {
        let dt = SimTime::from_secs(self.config.dt)?;
        let sampling = SimTime::from_secs(self.config.sampling)?;
        let end = SimTime::from_secs(self.config.duration)?;
        let mut kernel = Kernel::new();
        kernel.schedule_at(OBSERVER, Tick::Sample, SimTime::ZERO)?;
        if dt <= end {
            kernel.schedule_at(MOBILITY, Tick::Step, SimTime::ZERO)?;
        }
        self.observe_radio(0.0);
        let result = kernel.run_until(self.config.duration, |k, ev| {
            let now = ev.fire_time;
            match ev.kind {
                Tick::Sample => {
                    self.sample(now.as_secs());
                    if let Some(next) = now.checked_add(sampling).filter(|t| *t <= end) {
                        k.schedule_at(OBSERVER, Tick::Sample, next).map_err(ScenarioError::from)?;
                    }
                }
                Tick::Step => {
                    let t = now.as_secs();
                    let after = now + dt;
                    self.world
                        .step(t, self.config.dt)
                        .map_err(|source| ScenarioError::Runtime { t, source })?;
                    self.observe_radio(after.as_secs());
                    self.drain_notices();
                    if after.checked_add(dt).is_some_and(|t| t <= end) {
                        k.schedule_at(MOBILITY, Tick::Step, after).map_err(ScenarioError::from)?;
                    }
                }
            }
            Ok::<(), ScenarioError>(())
        });
        match result {
            Ok(stats) => {
                self.final_time = stats.final_time.as_secs();
                self.events_fired = stats.events_fired;
                info!("run complete: {} events, t = {}", stats.events_fired, stats.final_time);
                Ok(())
            }
            Err(RunError::Handler { stats, error }) => {
                self.final_time = stats.final_time.as_secs();
                self.events_fired = stats.events_fired;
                self.error = Some(error.to_string());
                warn!("run aborted at t = {}: {error}", stats.final_time);
                Err(error)
            }
            Err(RunError::Kernel(e)) => {
                self.error = Some(e.to_string());
                Err(e.into())
            }
        }
    }

    fn observe_radio(&mut self, t: f64) {
        if self.stations.is_empty() {
            return;
        }
        let graph = self.world.graph();
        for (veh, state) in self.world.vehicles().iter().zip(self.radio_state.iter_mut()) {
            let pos = veh.position(graph);
            state.rssi.clear();
            for st in &self.stations {
                state.rssi.push(rssi_shadowed(st, pos, &self.radio, &mut self.shadowing));
            }
            let Some(ho) = state.attachment.update(&state.rssi, t, pos, &self.handover) else {
                continue;
            };
            let mut rec = EventRecord::new(t, "handover", veh.id);
            rec.from = Some(self.stations[ho.from_cell].id.clone());
            rec.to = Some(self.stations[ho.to_cell].id.clone());
            rec.x = Some(pos.x);
            rec.y = Some(pos.y);
            self.events.push(rec);
            let history = state.attachment.history();
            if let [.., a, b] = history {
                let pp = crate::radio::detect_ping_pong(&[*a, *b], self.handover.ping_pong_window);
                for p in pp {
                    state.ping_pongs += 1;
                    let mut rec = EventRecord::new(p.time, "ping_pong", veh.id);
                    rec.from = Some(self.stations[p.cell_a].id.clone());
                    rec.to = Some(self.stations[p.cell_b].id.clone());
                    rec.x = Some(pos.x);
                    rec.y = Some(pos.y);
                    self.events.push(rec);
                }
            }
        }
    }

    fn drain_notices(&mut self) {
        let notices = self.world.take_notices();
        let graph = self.world.graph();
        for notice in notices {
            let rec = match notice {
                Notice::Arrival { t, vehicle, node } => EventRecord {
                    node: Some(node.0),
                    ..EventRecord::new(t, "arrival", vehicle)
                },
                Notice::TripComplete { t, vehicle, node } => {
                    self.trip_complete[vehicle.0 as usize] = true;
                    EventRecord {
                        node: Some(node.0),
                        ..EventRecord::new(t, "trip_complete", vehicle)
                    }
                }
                Notice::DilemmaZone { t, vehicle, node, .. } => EventRecord {
                    node: Some(node.0),
                    ..EventRecord::new(t, "dilemma_zone", vehicle)
                },
                Notice::LaneChange(lc) => {
                    let p = graph.link_point(lc.link, lc.s);
                    EventRecord {
                        from: Some(lc.from_lane.to_string()),
                        to: Some(lc.to_lane.to_string()),
                        x: Some(p.x),
                        y: Some(p.y),
                        ..EventRecord::new(lc.t, "lane_change", lc.vehicle)
                    }
                }
            };
            self.events.push(rec);
        }
    }

    fn sample(&mut self, t: f64) {
        let graph = self.world.graph();
        for (veh, state) in self.world.vehicles().iter().zip(&self.radio_state) {
            let p = veh.position(graph);
            let serving = state.attachment.serving_cell();
            self.trace.push(TraceSample {
                t,
                vehicle_id: veh.id.0,
                x: p.x,
                y: p.y,
                v: veh.v,
                acc: veh.acc,
                serving_cell: serving.map(|i| self.stations[i].id.clone()),
                rssi: serving.map(|i| state.rssi[i]),
            });
        }
    }

    pub fn summary(&self) -> RunSummary {
        let elapsed = self.final_time;
        let vehicles: Vec<VehicleSummary> = self
            .world
            .vehicles()
            .iter()
            .zip(&self.radio_state)
            .map(|(v, r)| VehicleSummary {
                id: v.id.0,
                name: self.names[v.id.0 as usize].clone(),
                distance: v.odometer,
                mean_speed: if elapsed > 0.0 { v.odometer / elapsed } else { 0.0 },
                handovers: r.attachment.history().len(),
                ping_pongs: r.ping_pongs,
                trip_complete: v.strategic.is_trip().then_some(self.trip_complete[v.id.0 as usize]),
            })
            .collect();
        RunSummary {
            completed: self.error.is_none(),
            error: self.error.clone(),
            final_time: elapsed,
            duration: self.config.duration,
            seed: self.config.seed,
            events_fired: self.events_fired,
            trace_rows: self.trace.len(),
            handovers: vehicles.iter().map(|v| v.handovers).sum(),
            ping_pongs: vehicles.iter().map(|v| v.ping_pongs).sum(),
            lane_changes: self.events.iter().filter(|e| e.kind == "lane_change").count(),
            collisions: self.world.collisions(),
            vehicles,
        }
    }

    /// Writes trace, events, summary and config echo into `dir`.
    pub fn write_artifacts(&self, dir: &Path) -> Result<(), ScenarioError> {
        fs::create_dir_all(dir).map_err(|e| ScenarioError::io(dir, e))?;
        write_csv(&dir.join(TRACE_FILE), TRACE_HEADER, &self.trace)?;
        write_csv(&dir.join(EVENTS_FILE), EVENTS_HEADER, &self.events)?;
        let summary = serde_json::to_string_pretty(&self.summary()).expect("summary serializes");
        let path = dir.join(SUMMARY_FILE);
        fs::write(&path, summary + "\n").map_err(|e| ScenarioError::io(&path, e))?;
        let path = dir.join(ECHO_FILE);
        fs::write(&path, self.config.echo()).map_err(|e| ScenarioError::io(&path, e))?;
        Ok(())
    }
}

fn placement_error(config: &ScenarioConfig, prefix: &str, fallback: &str, err: MobilityError) -> ScenarioError {
    let (field, reason) = match &err {
        MobilityError::Placement { key, reason } => (*key, reason.clone()),
        MobilityError::InvalidParameter { name, .. } => (*name, err.to_string()),
        _ => (fallback, err.to_string()),
    };
    let key = format!("{prefix}.{field}");
    let line = config
        .line_of(&key)
        .or_else(|| config.line_of(&format!("{prefix}.{fallback}")));
    ConfigError::Invalid { line, key, reason }.into()
}

fn write_csv<T: Serialize>(path: &Path, header: &str, rows: &[T]) -> Result<(), ScenarioError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_io(path, e))?;
    w.write_record(header.split(',')).map_err(|e| csv_io(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_io(path, e))?;
    }
    w.flush().map_err(|e| ScenarioError::io(path, e))
}

fn csv_io(path: &Path, e: csv::Error) -> ScenarioError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => ScenarioError::io(path, io),
        other => ScenarioError::Unsupported(format!("{}: {other:?}", path.display())),
    }
}

/// Reads and parses an OSM file.
pub fn load_map(path: &Path) -> Result<RoadGraph, ScenarioError> {
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::MapFile {
        path: path.to_owned(),
        source,
    })?;
    parse_osm(&text).map_err(|source| ScenarioError::Map {
        path: path.to_owned(),
        source,
    })
}

/// Loads a scenario file; relative map paths resolve against its directory.
pub fn load_config_file(path: &Path) -> Result<(ScenarioConfig, PathBuf), ScenarioError> {
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::ConfigFile {
        path: path.to_owned(),
        source,
    })?;
    let config = load_config(&text)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let map = base.join(&config.map);
    Ok((config, map))
}

/// Loads the map, runs the scenario and writes artifacts to `out`. The
/// artifacts are written even when the run fails part way.
pub fn run_scenario(config: ScenarioConfig, map_path: &Path, out: &Path) -> Result<RunSummary, ScenarioError> {
    let graph = load_map(map_path)?;
    let mut sim = Simulation::new(config, graph)?;
    let result = sim.run();
    sim.write_artifacts(out)?;
    result.map(|_| sim.summary())
}
