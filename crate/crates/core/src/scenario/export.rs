//! Space-time tables and SVG map rendering.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;

use serde::Serialize;

use super::{ScenarioError, TraceSample};
use crate::map::{Point, RoadGraph};

/// Reads a trace CSV written by the runner.
pub fn read_trace(path: &Path) -> Result<Vec<TraceSample>, ScenarioError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| ScenarioError::Unsupported(format!("{}: {e}", path.display())))?;
    let header = r.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != super::TRACE_HEADER {
        return Err(ScenarioError::Unsupported(format!(
            "{}: expected header {:?}, found {header:?}",
            path.display(),
            super::TRACE_HEADER
        )));
    }
    r.deserialize().map(|row| row.map_err(ScenarioError::from)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpaceTimeRow {
    pub t: f64,
    pub vehicle_id: u32,
    /// Position along the corridor, meters from its upstream end.
    pub position: f64,
}

/// Backward movement along the corridor tolerated as noise, meters.
const REVERSAL_TOLERANCE: f64 = 0.5;

/// Projects a single-corridor trace onto one arc-length axis.
///
/// The axis is the principal direction of all sampled positions, oriented
/// along the net direction of travel, with zero at the most upstream
/// sample. Traces whose positions stray from one line or whose vehicles
/// reverse along it (branching or turning routes) are rejected.
pub fn spacetime(trace: &[TraceSample]) -> Result<Vec<SpaceTimeRow>, ScenarioError> {
    if trace.is_empty() {
        return Ok(Vec::new());
    }
    let n = trace.len() as f64;
    let cx = trace.iter().map(|r| r.x).sum::<f64>() / n;
    let cy = trace.iter().map(|r| r.y).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for r in trace {
        let (dx, dy) = (r.x - cx, r.y - cy);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let mut axis = if sxx + syy < 1e-12 {
        Point::new(1.0, 0.0)
    } else {
        let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
        Point::new(angle.cos(), angle.sin())
    };
    let along = |r: &TraceSample, axis: Point<f64>| (r.x - cx) * axis.x + (r.y - cy) * axis.y;
    let across = |r: &TraceSample, axis: Point<f64>| ((r.x - cx) * axis.y - (r.y - cy) * axis.x).abs();

    let span = {
        let (lo, hi) = trace
            .iter()
            .map(|r| along(r, axis))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), a| (lo.min(a), hi.max(a)));
        hi - lo
    };
    let tolerance = (0.02 * span).max(5.0);
    if let Some(r) = trace.iter().find(|r| across(r, axis) > tolerance) {
        return Err(ScenarioError::Unsupported(format!(
            "vehicle {} at t = {} is {:.1} m off the corridor axis; the trace does not follow a single corridor",
            r.vehicle_id,
            r.t,
            across(r, axis)
        )));
    }

    let mut per_vehicle: BTreeMap<u32, Vec<&TraceSample>> = BTreeMap::new();
    for r in trace {
        per_vehicle.entry(r.vehicle_id).or_default().push(r);
    }
    let net: f64 = per_vehicle
        .values()
        .map(|rows| along(rows[rows.len() - 1], axis) - along(rows[0], axis))
        .sum();
    if net < 0.0 {
        axis = Point::new(-axis.x, -axis.y);
    }
    for (id, rows) in &per_vehicle {
        for w in rows.windows(2) {
            if along(w[1], axis) < along(w[0], axis) - REVERSAL_TOLERANCE {
                return Err(ScenarioError::Unsupported(format!(
                    "vehicle {id} reverses along the corridor at t = {}; branching routes cannot be projected",
                    w[1].t
                )));
            }
        }
    }
    let origin = trace.iter().map(|r| along(r, axis)).fold(f64::INFINITY, f64::min);
    Ok(trace
        .iter()
        .map(|r| SpaceTimeRow {
            t: r.t,
            vehicle_id: r.vehicle_id,
            position: along(r, axis) - origin,
        })
        .collect())
}

pub fn write_spacetime(path: &Path, rows: &[SpaceTimeRow]) -> Result<(), ScenarioError> {
    super::write_csv(path, "t,vehicle_id,position", rows)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvgOptions {
    /// Canvas width in px; the height follows the map's aspect ratio.
    pub width: f64,
    pub margin: f64,
}

impl Default for SvgOptions {
    fn default() -> Self {
        Self {
            width: 1000.0,
            margin: 20.0,
        }
    }
}

/// A vehicle path drawn over the map.
#[derive(Clone, Debug, PartialEq)]
pub struct TracePath {
    pub vehicle_id: u32,
    pub points: Vec<Point<f64>>,
}

/// Renders each way as one polyline in an SVG 1.1 document, with optional
/// vehicle paths on top.
pub fn export_svg(graph: &RoadGraph, overlay: &[TracePath], opts: &SvgOptions) -> Result<String, ScenarioError> {
    let Some((lo, hi)) = graph.bounds().filter(|_| graph.way_count() > 0) else {
        return Err(ScenarioError::Unsupported("cannot render an empty road graph".into()));
    };
    let (dx, dy) = (hi.x - lo.x, hi.y - lo.y);
    let inner = (opts.width - 2.0 * opts.margin).max(1.0);
    let extent = dx.max(dy).max(1e-9);
    let scale = inner / if dx > 0.0 { dx } else { extent };
    let height = dy * scale + 2.0 * opts.margin;
    let map = |p: Point<f64>| ((p.x - lo.x) * scale + opts.margin, (hi.y - p.y) * scale + opts.margin);
    let points = |pts: &mut dyn Iterator<Item = Point<f64>>| {
        pts.map(|p| {
            let (x, y) = map(p);
            format!("{x:.2},{y:.2}")
        })
        .collect::<Vec<_>>()
        .join(" ")
    };

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{:.2}" height="{height:.2}" viewBox="0 0 {:.2} {height:.2}">"#,
        opts.width, opts.width
    );
    let _ = writeln!(out, r##"<g id="roads" fill="none" stroke="#555555" stroke-width="2">"##);
    for way in graph.ways() {
        let mut it = way.node_refs.iter().map(|n| graph.node(*n).expect("way nodes exist").position);
        let _ = writeln!(out, r#"<polyline data-way="{}" points="{}"/>"#, way.id, points(&mut it));
    }
    let _ = writeln!(out, "</g>");
    if !overlay.is_empty() {
        let _ = writeln!(out, r##"<g id="traces" fill="none" stroke="#d62728" stroke-width="1">"##);
        for path in overlay {
            let mut it = path.points.iter().copied();
            let _ = writeln!(
                out,
                r#"<polyline class="trace" data-vehicle="{}" points="{}"/>"#,
                path.vehicle_id,
                points(&mut it)
            );
        }
        let _ = writeln!(out, "</g>");
    }
    let _ = writeln!(out, "</svg>");
    Ok(out)
}

/// Groups trace rows into one path per vehicle.
pub fn trace_paths(trace: &[TraceSample]) -> Vec<TracePath> {
    let mut by_vehicle: BTreeMap<u32, Vec<Point<f64>>> = BTreeMap::new();
    for r in trace {
        by_vehicle.entry(r.vehicle_id).or_default().push(Point::new(r.x, r.y));
    }
    by_vehicle
        .into_iter()
        .map(|(vehicle_id, points)| TracePath { vehicle_id, points })
        .collect()
}
