//! Flat `key = value` scenario files.
//!
//! One assignment per line, `#` starts a comment, nested settings use dotted
//! keys such as `vehicle.car0.idm.v0`. Lists (trip destinations) are comma
//! separated on a single line.

use std::collections::BTreeMap;
use std::fmt::{self, Write};
use std::str::FromStr;

use thiserror::Error;

use crate::map::{Direction, NodeId, SignalTiming, WayId};
use crate::mobility::{IdmParams, MobilParams, Placement, WorldConfig};
use crate::radio::{BaseStation, HandoverParams, RadioParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` is set twice (first on line {first})")]
    Duplicate { line: usize, first: usize, key: String },
    #[error("line {line}: key `{key}`: cannot use {value:?}: {reason}")]
    InvalidValue {
        line: usize,
        key: String,
        value: String,
        reason: String,
    },
    #[error("missing required key `{key}`")]
    Missing { key: String },
    #[error("{}key `{key}`: {reason}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid { line: Option<usize>, key: String, reason: String },
}

impl ConfigError {
    /// The key the error is about, if it names one.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Syntax { .. } => None,
            ConfigError::UnknownKey { key, .. }
            | ConfigError::Duplicate { key, .. }
            | ConfigError::InvalidValue { key, .. }
            | ConfigError::Missing { key }
            | ConfigError::Invalid { key, .. } => Some(key),
        }
    }

    pub fn line(&self) -> Option<usize> {
        match self {
            ConfigError::Syntax { line, .. }
            | ConfigError::UnknownKey { line, .. }
            | ConfigError::Duplicate { line, .. }
            | ConfigError::InvalidValue { line, .. } => Some(*line),
            ConfigError::Missing { .. } => None,
            ConfigError::Invalid { line, .. } => *line,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StrategicKind {
    Trip(Vec<NodeId>),
    RandomDirection,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VehicleConfig {
    pub name: String,
    pub strategic: StrategicKind,
    pub placement: Placement,
    pub idm: IdmParams<f64>,
    pub mobil: MobilParams<f64>,
    /// Initial speed, m/s.
    pub speed: f64,
    pub speed_factor: Option<f64>,
    pub fixed_speed: Option<f64>,
    pub length: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct InterferenceConfig {
    pub count: usize,
    pub idm: IdmParams<f64>,
    pub mobil: MobilParams<f64>,
}

/// Line on which each key was set. Provenance only: ignored by equality.
#[derive(Clone, Debug, Default)]
pub struct KeyLines(BTreeMap<String, usize>);

impl KeyLines {
    pub fn get(&self, key: &str) -> Option<usize> {
        self.0.get(key).copied()
    }
}

impl PartialEq for KeyLines {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    /// Map file as written; relative paths are resolved against the
    /// configuration file's directory.
    pub map: String,
    /// Simulated time, seconds.
    pub duration: f64,
    pub seed: u64,
    /// Mobility step, seconds.
    pub dt: f64,
    /// Trace sampling interval, seconds. A multiple of `dt`.
    pub sampling: f64,
    pub mobility: WorldConfig,
    pub vehicles: Vec<VehicleConfig>,
    pub interference: InterferenceConfig,
    pub stations: Vec<BaseStation>,
    pub signals: BTreeMap<NodeId, SignalTiming>,
    pub handover: HandoverParams,
    pub radio: RadioParams,
    pub lines: KeyLines,
}

impl ScenarioConfig {
    /// Defaults for everything except the map.
    pub fn new(map: impl Into<String>) -> Self {
        Self {
            map: map.into(),
            duration: 60.0,
            seed: 0,
            dt: 0.1,
            sampling: 1.0,
            mobility: WorldConfig::default(),
            vehicles: Vec::new(),
            interference: InterferenceConfig::default(),
            stations: Vec::new(),
            signals: BTreeMap::new(),
            handover: HandoverParams::default(),
            radio: RadioParams::default(),
            lines: KeyLines::default(),
        }
    }

    /// Line that set `key`, for error reporting.
    pub fn line_of(&self, key: &str) -> Option<usize> {
        self.lines.get(key)
    }

    /// Canonical text form; [`load_config`] reads it back to an equal config.
    pub fn to_text(&self) -> String {
        self.render(true)
    }

    /// Canonical text without the seed. Runs that differ only in their seed
    /// produce the same echo.
    pub fn echo(&self) -> String {
        self.render(false)
    }

    fn render(&self, with_seed: bool) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: &dyn fmt::Display| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("map", &self.map);
        kv("duration", &self.duration);
        if with_seed {
            kv("seed", &self.seed);
        }
        kv("dt", &self.dt);
        kv("sampling", &self.sampling);
        kv("mobility.horizon", &self.mobility.horizon);
        kv("mobility.laneChangeCooldown", &self.mobility.lane_change_cooldown);
        kv("handover.hysteresis", &self.handover.hysteresis);
        kv("handover.ttt", &self.handover.ttt);
        kv("handover.pingPongWindow", &self.handover.ping_pong_window);
        kv("radio.pathLossExponent", &self.radio.path_loss_exponent);
        kv("radio.shadowingSigma", &self.radio.shadowing_sigma);
        kv("interference.count", &self.interference.count);
        kv("interference.strategicModel", &"RandomDirection");
        render_idm(&mut kv, "interference", &self.interference.idm);
        render_mobil(&mut kv, "interference", &self.interference.mobil);
        for st in &self.stations {
            let p = format!("station.{}", st.id);
            kv(&format!("{p}.x"), &st.position.x);
            kv(&format!("{p}.y"), &st.position.y);
            kv(&format!("{p}.txPower"), &st.tx_power);
            kv(&format!("{p}.carrier"), &st.carrier);
        }
        for (node, t) in &self.signals {
            let p = format!("signal.{node}");
            kv(&format!("{p}.green"), &t.green);
            kv(&format!("{p}.yellow"), &t.yellow);
            kv(&format!("{p}.red"), &t.red);
            kv(&format!("{p}.offset"), &t.offset);
        }
        for v in &self.vehicles {
            let p = format!("vehicle.{}", v.name);
            match &v.strategic {
                StrategicKind::Trip(nodes) => {
                    kv(&format!("{p}.strategicModel"), &"Trip");
                    let list: Vec<String> = nodes.iter().map(|n| n.to_string()).collect();
                    kv(&format!("{p}.strategicModel.trip"), &list.join(","));
                }
                StrategicKind::RandomDirection => kv(&format!("{p}.strategicModel"), &"RandomDirection"),
            }
            kv(&format!("{p}.way"), &v.placement.way);
            kv(&format!("{p}.segment"), &v.placement.segment);
            kv(&format!("{p}.lane"), &v.placement.lane);
            kv(&format!("{p}.offset"), &v.placement.offset);
            let dir = match v.placement.direction {
                Direction::Forward => "forward",
                Direction::Backward => "backward",
            };
            kv(&format!("{p}.direction"), &dir);
            kv(&format!("{p}.speed"), &v.speed);
            kv(&format!("{p}.length"), &v.length);
            if let Some(f) = v.speed_factor {
                kv(&format!("{p}.speedFactor"), &f);
            }
            if let Some(f) = v.fixed_speed {
                kv(&format!("{p}.fixedSpeed"), &f);
            }
            render_idm(&mut kv, &p, &v.idm);
            render_mobil(&mut kv, &p, &v.mobil);
        }
        out
    }
}

fn render_idm(kv: &mut impl FnMut(&str, &dyn fmt::Display), prefix: &str, p: &IdmParams<f64>) {
    kv(&format!("{prefix}.idm.v0"), &p.v0);
    kv(&format!("{prefix}.idm.T"), &p.time_headway);
    kv(&format!("{prefix}.idm.a"), &p.a_max);
    kv(&format!("{prefix}.idm.b"), &p.b_comf);
    kv(&format!("{prefix}.idm.delta"), &p.delta);
    kv(&format!("{prefix}.idm.s0"), &p.s0);
}

fn render_mobil(kv: &mut impl FnMut(&str, &dyn fmt::Display), prefix: &str, p: &MobilParams<f64>) {
    kv(&format!("{prefix}.mobil.p"), &p.politeness);
    kv(&format!("{prefix}.mobil.threshold"), &p.threshold);
    kv(&format!("{prefix}.mobil.bSafe"), &p.b_safe);
}

struct Entry<'a> {
    line: usize,
    key: &'a str,
    value: &'a str,
}

impl Entry<'_> {
    fn parse<T: FromStr>(&self) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.value.parse().map_err(|e: T::Err| self.invalid(e.to_string()))
    }

    fn float(&self) -> Result<f64, ConfigError> {
        let v: f64 = self.parse()?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.invalid("not a finite number"))
        }
    }

    fn invalid(&self, reason: impl Into<String>) -> ConfigError {
        ConfigError::InvalidValue {
            line: self.line,
            key: self.key.to_owned(),
            value: self.value.to_owned(),
            reason: reason.into(),
        }
    }

    fn unknown(&self) -> ConfigError {
        ConfigError::UnknownKey {
            line: self.line,
            key: self.key.to_owned(),
        }
    }
}

#[derive(Default)]
struct VehicleDraft {
    strategic: Option<String>,
    trip: Option<Vec<NodeId>>,
    way: Option<i64>,
    segment: Option<usize>,
    lane: usize,
    offset: f64,
    direction: Option<Direction>,
    speed: f64,
    speed_factor: Option<f64>,
    fixed_speed: Option<f64>,
    length: Option<f64>,
    idm: IdmParams<f64>,
    mobil: MobilParams<f64>,
}

#[derive(Default)]
struct StationDraft {
    x: Option<f64>,
    y: Option<f64>,
    tx_power: Option<f64>,
    carrier: Option<f64>,
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn set_idm(p: &mut IdmParams<f64>, field: &str, e: &Entry) -> Result<(), ConfigError> {
    let slot = match field {
        "v0" => &mut p.v0,
        "T" => &mut p.time_headway,
        "a" => &mut p.a_max,
        "b" => &mut p.b_comf,
        "delta" => &mut p.delta,
        "s0" => &mut p.s0,
        _ => return Err(e.unknown()),
    };
    let v = e.float()?;
    if v <= 0.0 {
        return Err(e.invalid("must be positive"));
    }
    *slot = v;
    Ok(())
}

fn set_mobil(p: &mut MobilParams<f64>, field: &str, e: &Entry) -> Result<(), ConfigError> {
    let v = e.float()?;
    match field {
        "p" if v >= 0.0 => p.politeness = v,
        "threshold" if v > 0.0 => p.threshold = v,
        "bSafe" if v > 0.0 => p.b_safe = v,
        "p" => return Err(e.invalid("must be non-negative")),
        "threshold" | "bSafe" => return Err(e.invalid("must be positive")),
        _ => return Err(e.unknown()),
    }
    Ok(())
}

/// Parses and validates a scenario file.
pub fn load_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut lines = BTreeMap::new();
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or_default().trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                text: raw.to_owned(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                text: raw.to_owned(),
            });
        }
        if let Some(first) = lines.insert(key.to_owned(), line) {
            return Err(ConfigError::Duplicate {
                line,
                first,
                key: key.to_owned(),
            });
        }
        entries.push(Entry { line, key, value });
    }

    let mut cfg = ScenarioConfig::new(String::new());
    let mut map = None;
    let mut vehicles: BTreeMap<String, VehicleDraft> = BTreeMap::new();
    let mut vehicle_order: Vec<String> = Vec::new();
    let mut stations: BTreeMap<String, StationDraft> = BTreeMap::new();
    let mut station_order: Vec<String> = Vec::new();
    let mut signals: BTreeMap<NodeId, SignalTiming> = BTreeMap::new();

    for e in &entries {
        let parts: Vec<&str> = e.key.split('.').collect();
        match parts.as_slice() {
            ["map"] => {
                if e.value.is_empty() {
                    return Err(e.invalid("empty path"));
                }
                map = Some(e.value.to_owned());
            }
            ["duration"] => {
                cfg.duration = e.float()?;
                if cfg.duration < 0.0 {
                    return Err(e.invalid("must be non-negative"));
                }
            }
            ["seed"] => cfg.seed = e.parse()?,
            ["dt"] => cfg.dt = e.float()?,
            ["sampling"] => cfg.sampling = e.float()?,
            ["mobility", "horizon"] => cfg.mobility.horizon = e.float()?,
            ["mobility", "laneChangeCooldown"] => cfg.mobility.lane_change_cooldown = e.float()?,
            ["handover", "hysteresis"] => cfg.handover.hysteresis = e.float()?,
            ["handover", "ttt"] => cfg.handover.ttt = e.float()?,
            ["handover", "pingPongWindow"] => cfg.handover.ping_pong_window = e.float()?,
            ["radio", "pathLossExponent"] => cfg.radio.path_loss_exponent = e.float()?,
            ["radio", "shadowingSigma"] => cfg.radio.shadowing_sigma = e.float()?,
            ["interference", "count"] => cfg.interference.count = e.parse()?,
            ["interference", "strategicModel"] => {
                if e.value != "RandomDirection" {
                    return Err(e.invalid("interference traffic supports only RandomDirection"));
                }
            }
            ["interference", "idm", field] => set_idm(&mut cfg.interference.idm, field, e)?,
            ["interference", "mobil", field] => set_mobil(&mut cfg.interference.mobil, field, e)?,
            ["station", id, field] => {
                if !valid_name(id) {
                    return Err(e.invalid("station ids use letters, digits, `_` and `-`"));
                }
                if !stations.contains_key(*id) {
                    station_order.push((*id).to_owned());
                }
                let st = stations.entry((*id).to_owned()).or_default();
                let slot = match *field {
                    "x" => &mut st.x,
                    "y" => &mut st.y,
                    "txPower" => &mut st.tx_power,
                    "carrier" => &mut st.carrier,
                    _ => return Err(e.unknown()),
                };
                *slot = Some(e.float()?);
            }
            ["signal", node, field] => {
                let node = NodeId(node.parse().map_err(|_| e.invalid("signal keys are `signal.<node id>.<field>`"))?);
                let t = signals.entry(node).or_default();
                let v = e.float()?;
                match *field {
                    "green" => t.green = v,
                    "yellow" => t.yellow = v,
                    "red" => t.red = v,
                    "offset" => t.offset = v,
                    _ => return Err(e.unknown()),
                }
            }
            ["vehicle", name, rest @ ..] if !rest.is_empty() => {
                if !valid_name(name) {
                    return Err(e.invalid("vehicle names use letters, digits, `_` and `-`"));
                }
                if !vehicles.contains_key(*name) {
                    vehicle_order.push((*name).to_owned());
                }
                let d = vehicles.entry((*name).to_owned()).or_default();
                match rest {
                    ["strategicModel"] => match e.value {
                        "Trip" | "RandomDirection" => d.strategic = Some(e.value.to_owned()),
                        _ => return Err(e.invalid("expected Trip or RandomDirection")),
                    },
                    ["strategicModel", "trip"] => {
                        let nodes = e
                            .value
                            .split(',')
                            .map(|s| s.trim().parse::<i64>().map(NodeId))
                            .collect::<Result<Vec<_>, _>>()
                            .map_err(|_| e.invalid("expected comma-separated node ids on one line"))?;
                        d.trip = Some(nodes);
                    }
                    ["way"] => d.way = Some(e.parse()?),
                    ["segment"] => d.segment = Some(e.parse()?),
                    ["lane"] => d.lane = e.parse()?,
                    ["offset"] => d.offset = e.float()?,
                    ["direction"] => {
                        d.direction = Some(match e.value {
                            "forward" => Direction::Forward,
                            "backward" => Direction::Backward,
                            _ => return Err(e.invalid("expected forward or backward")),
                        })
                    }
                    ["speed"] => d.speed = e.float()?,
                    ["speedFactor"] => d.speed_factor = Some(e.float()?),
                    ["fixedSpeed"] => d.fixed_speed = Some(e.float()?),
                    ["length"] => d.length = Some(e.float()?),
                    ["idm", field] => set_idm(&mut d.idm, field, e)?,
                    ["mobil", field] => set_mobil(&mut d.mobil, field, e)?,
                    _ => return Err(e.unknown()),
                }
            }
            _ => return Err(e.unknown()),
        }
    }

    cfg.map = map.ok_or(ConfigError::Missing { key: "map".into() })?;
    cfg.lines = KeyLines(lines);
    let invalid = |cfg: &ScenarioConfig, key: &str, reason: &str| ConfigError::Invalid {
        line: cfg.line_of(key),
        key: key.to_owned(),
        reason: reason.to_owned(),
    };

    for (key, value) in [("dt", cfg.dt), ("sampling", cfg.sampling)] {
        if value <= 0.0 {
            return Err(invalid(&cfg, key, "must be positive"));
        }
    }
    let dt_ns = (cfg.dt * 1e9).round();
    let sampling_ns = (cfg.sampling * 1e9).round();
    if dt_ns < 1.0 || sampling_ns % dt_ns != 0.0 {
        return Err(invalid(&cfg, "sampling", "must be a whole multiple of dt"));
    }
    if !(cfg.mobility.horizon > 0.0) {
        return Err(invalid(&cfg, "mobility.horizon", "must be positive"));
    }
    if cfg.mobility.lane_change_cooldown < 0.0 {
        return Err(invalid(&cfg, "mobility.laneChangeCooldown", "must be non-negative"));
    }
    if let Err(err) = cfg.handover.validate() {
        return Err(invalid(&cfg, &radio_key("handover", &err), &err.to_string()));
    }
    if let Err(err) = cfg.radio.validate() {
        return Err(invalid(&cfg, &radio_key("radio", &err), &err.to_string()));
    }

    for (node, timing) in &signals {
        if timing.validate().is_err() {
            return Err(invalid(&cfg, &format!("signal.{node}.green"), "durations must be positive and finite"));
        }
    }
    cfg.signals = signals;

    for id in station_order {
        let d = &stations[&id];
        let key = |f: &str| format!("station.{id}.{f}");
        let (Some(x), Some(y)) = (d.x, d.y) else {
            let missing = if d.x.is_none() { "x" } else { "y" };
            return Err(ConfigError::Missing { key: key(missing) });
        };
        let mut st = BaseStation::new(id.clone(), x, y);
        st.tx_power = d.tx_power.unwrap_or(st.tx_power);
        st.carrier = d.carrier.unwrap_or(st.carrier);
        if let Err(err) = st.validate() {
            let field = match &err {
                crate::radio::RadioError::InvalidStation { field, .. } => *field,
                _ => "x",
            };
            return Err(invalid(&cfg, &key(field), &err.to_string()));
        }
        cfg.stations.push(st);
    }

    for name in vehicle_order {
        let d = vehicles.remove(&name).expect("drafted above");
        let key = |f: &str| format!("vehicle.{name}.{f}");
        let strategic = match (d.strategic.as_deref(), d.trip) {
            (Some("Trip"), Some(nodes)) => StrategicKind::Trip(nodes),
            (Some("Trip"), None) => return Err(ConfigError::Missing { key: key("strategicModel.trip") }),
            (_, Some(_)) => {
                return Err(invalid(&cfg, &key("strategicModel.trip"), "a trip list needs strategicModel = Trip"))
            }
            _ => StrategicKind::RandomDirection,
        };
        let way = d.way.ok_or_else(|| ConfigError::Missing { key: key("way") })?;
        let segment = d.segment.ok_or_else(|| ConfigError::Missing { key: key("segment") })?;
        let length = d.length.unwrap_or(crate::mobility::DEFAULT_VEHICLE_LENGTH);
        let checks = [
            ("offset", d.offset >= 0.0),
            ("speed", d.speed >= 0.0),
            ("length", length > 0.0),
            ("speedFactor", d.speed_factor.is_none_or(|f| f > 0.0)),
            ("fixedSpeed", d.fixed_speed.is_none_or(|f| f >= 0.0)),
        ];
        if let Some((field, _)) = checks.iter().find(|c| !c.1) {
            return Err(invalid(&cfg, &key(field), "out of range"));
        }
        cfg.vehicles.push(VehicleConfig {
            name: name.clone(),
            strategic,
            placement: Placement {
                way: WayId(way),
                segment,
                lane: d.lane,
                offset: d.offset,
                direction: d.direction.unwrap_or(Direction::Forward),
            },
            idm: d.idm,
            mobil: d.mobil,
            speed: d.speed,
            speed_factor: d.speed_factor,
            fixed_speed: d.fixed_speed,
            length,
        });
    }
    Ok(cfg)
}

fn radio_key(prefix: &str, err: &crate::radio::RadioError) -> String {
    match err {
        crate::radio::RadioError::InvalidParameter { name, .. } => format!("{prefix}.{name}"),
        _ => prefix.to_owned(),
    }
}
