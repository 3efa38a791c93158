//! OpenStreetMap XML extract to street-graph conversion.
//!
//! Ways carrying a `highway` tag become edges between consecutive member
//! nodes, restricted to nodes within `radius_m` of the center. Distance is
//! great-circle meters, travel time is seconds at the way's `maxspeed` (or a
//! per-class default), and elevation change comes from `ele` node tags when
//! both endpoints carry one. The start is the node nearest the center and
//! the goal is the reachable node farthest from it.

use std::collections::{HashMap, HashSet};

use super::{Edge, StreetGraph};
use crate::error::{Error, Result};

const EARTH_RADIUS_M: f64 = 6_371_008.8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl std::str::FromStr for LatLon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(',')
            .ok_or_else(|| Error::Osm(format!("expected 'lat,lon', got '{s}'")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Osm(format!("bad coordinate '{v}'")))
        };
        Ok(LatLon {
            lat: parse(a)?,
            lon: parse(b)?,
        })
    }
}

pub fn haversine_m(a: LatLon, b: LatLon) -> f64 {
    let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
    let dp = p2 - p1;
    let dl = (b.lon - a.lon).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().asin()
}

fn default_speed_kmh(highway: &str) -> f64 {
    match highway {
        "motorway" | "motorway_link" => 100.0,
        "trunk" | "trunk_link" => 80.0,
        "primary" | "primary_link" => 60.0,
        "secondary" | "secondary_link" => 50.0,
        "tertiary" | "tertiary_link" => 40.0,
        "service" | "living_street" => 15.0,
        "footway" | "path" | "pedestrian" | "steps" | "cycleway" | "track" => 5.0,
        _ => 30.0,
    }
}

fn parse_maxspeed(v: &str) -> Option<f64> {
    let v = v.trim();
    if let Some(mph) = v.strip_suffix("mph") {
        return mph.trim().parse::<f64>().ok().map(|s| s * 1.609_344);
    }
    v.trim_end_matches("km/h").trim().parse::<f64>().ok().filter(|s| *s > 0.0)
}

struct OsmNode {
    pos: LatLon,
    ele: Option<f64>,
}

#[derive(Clone, Copy, PartialEq)]
enum Oneway {
    No,
    Forward,
    Backward,
}

/// Convert an OSM XML document into a street graph.
pub fn convert_osm(xml: &str, center: LatLon, radius_m: f64) -> Result<StreetGraph> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| Error::Osm(e.to_string()))?;
    let root = doc.root_element();

    let mut nodes: HashMap<i64, OsmNode> = HashMap::new();
    for n in root.children().filter(|n| n.has_tag_name("node")) {
        let id = attr_i64(&n, "id")?;
        let pos = LatLon {
            lat: attr_f64(&n, "lat")?,
            lon: attr_f64(&n, "lon")?,
        };
        let ele = tags(&n).get("ele").and_then(|v| v.parse::<f64>().ok());
        if haversine_m(center, pos) <= radius_m {
            nodes.insert(id, OsmNode { pos, ele });
        }
    }

    // (src, dst, distance, time, elev, oneway)
    let mut segments = Vec::new();
    for w in root.children().filter(|n| n.has_tag_name("way")) {
        let t = tags(&w);
        let Some(highway) = t.get("highway") else { continue };
        let speed = t
            .get("maxspeed")
            .and_then(|v| parse_maxspeed(v))
            .unwrap_or_else(|| default_speed_kmh(highway));
        let oneway = match t.get("oneway").map(String::as_str) {
            Some("yes" | "1" | "true") => Oneway::Forward,
            Some("-1" | "reverse") => Oneway::Backward,
            _ if t.get("junction").map(String::as_str) == Some("roundabout") => Oneway::Forward,
            _ => Oneway::No,
        };
        let refs = w
            .children()
            .filter(|c| c.has_tag_name("nd"))
            .map(|c| attr_i64(&c, "ref"))
            .collect::<Result<Vec<_>>>()?;
        for pair in refs.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let (Some(na), Some(nb)) = (nodes.get(&a), nodes.get(&b)) else { continue };
            let distance = haversine_m(na.pos, nb.pos);
            if distance < 1e-6 {
                continue;
            }
            let time = distance / (speed / 3.6);
            let elev = match (na.ele, nb.ele) {
                (Some(x), Some(y)) => y - x,
                _ => 0.0,
            };
            segments.push((a, b, distance, time, elev, oneway));
        }
    }
    if segments.is_empty() {
        return Err(Error::Osm("no highway segments inside the radius".into()));
    }

    let directed = segments.iter().any(|s| s.5 != Oneway::No);
    let mut edges = Vec::new();
    for &(a, b, distance, time, elev, oneway) in &segments {
        let fwd = Edge {
            src: a,
            dst: b,
            distance,
            time,
            elev,
        };
        let back = Edge {
            src: b,
            dst: a,
            distance,
            time,
            elev: -elev,
        };
        match (directed, oneway) {
            (false, _) => edges.push(fwd),
            (true, Oneway::Forward) => edges.push(fwd),
            (true, Oneway::Backward) => edges.push(back),
            (true, Oneway::No) => {
                edges.push(fwd);
                edges.push(back);
            }
        }
    }

    let mut used: Vec<i64> = edges.iter().flat_map(|e| [e.src, e.dst]).collect();
    used.sort_unstable();
    used.dedup();
    let start = *used
        .iter()
        .min_by(|a, b| {
            haversine_m(center, nodes[a].pos).total_cmp(&haversine_m(center, nodes[b].pos))
        })
        .expect("non-empty");

    let reach = reachable(start, &edges, directed);
    let goal = *used
        .iter()
        .filter(|n| reach.contains(n) && **n != start)
        .max_by(|a, b| {
            let da = haversine_m(nodes[&start].pos, nodes[a].pos);
            let db = haversine_m(nodes[&start].pos, nodes[b].pos);
            da.total_cmp(&db).then(b.cmp(a))
        })
        .ok_or_else(|| Error::Osm("start node has no reachable neighbours".into()))?;

    let kept: Vec<i64> = used.into_iter().filter(|n| reach.contains(n)).collect();
    let edges = edges
        .into_iter()
        .filter(|e| reach.contains(&e.src) && reach.contains(&e.dst))
        .collect();
    StreetGraph::new(kept, edges, start, goal, directed)
}

fn reachable(start: i64, edges: &[Edge], directed: bool) -> HashSet<i64> {
    let mut adj: HashMap<i64, Vec<i64>> = HashMap::new();
    for e in edges {
        adj.entry(e.src).or_default().push(e.dst);
        if !directed {
            adj.entry(e.dst).or_default().push(e.src);
        }
    }
    let mut seen = HashSet::from([start]);
    let mut stack = vec![start];
    while let Some(u) = stack.pop() {
        for &v in adj.get(&u).into_iter().flatten() {
            if seen.insert(v) {
                stack.push(v);
            }
        }
    }
    seen
}

fn tags(n: &roxmltree::Node) -> HashMap<String, String> {
    n.children()
        .filter(|c| c.has_tag_name("tag"))
        .filter_map(|c| Some((c.attribute("k")?.to_string(), c.attribute("v")?.to_string())))
        .collect()
}

fn attr_i64(n: &roxmltree::Node, name: &str) -> Result<i64> {
    n.attribute(name)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Osm(format!("<{}> missing integer '{name}'", n.tag_name().name())))
}

fn attr_f64(n: &roxmltree::Node, name: &str) -> Result<f64> {
    n.attribute(name)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Osm(format!("<{}> missing number '{name}'", n.tag_name().name())))
}
