//! TSPLIB-style CVRP files (`EUC_2D` only) and CVRPLib solution files.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::{DistanceConvention, Instance, VrpError};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("missing {0}")]
    MissingSection(String),
    #[error("incomplete {section}: expected {expected} entries, found {found}")]
    Incomplete {
        section: String,
        expected: usize,
        found: usize,
    },
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Invalid(#[from] VrpError),
}

impl ParseError {
    /// Name of the section or header key the error refers to, if any.
    pub fn section(&self) -> Option<&str> {
        match self {
            ParseError::MissingSection(s) | ParseError::Incomplete { section: s, .. } => Some(s),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Header,
    Coords,
    Demands,
    Depots,
    Other,
}

fn malformed(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Malformed {
        line,
        message: message.into(),
    }
}

/// Parses a CVRP instance. Node ids are re-based so that the depot becomes
/// node 0 and customers keep their relative order.
pub fn parse_cvrplib(text: &str) -> Result<Instance, ParseError> {
    let mut header: BTreeMap<String, String> = BTreeMap::new();
    let mut coords: BTreeMap<usize, [f64; 2]> = BTreeMap::new();
    let mut demands: BTreeMap<usize, u32> = BTreeMap::new();
    let mut depots: Vec<usize> = Vec::new();
    let mut seen_coords = false;
    let mut seen_demands = false;
    let mut seen_depots = false;
    let mut section = Section::Header;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == "EOF" {
            break;
        }
        let first = line.split_whitespace().next().unwrap_or_default();
        let key = first.trim_end_matches(':');
        if key.ends_with("_SECTION") {
            section = match key {
                "NODE_COORD_SECTION" => {
                    seen_coords = true;
                    Section::Coords
                }
                "DEMAND_SECTION" => {
                    seen_demands = true;
                    Section::Demands
                }
                "DEPOT_SECTION" => {
                    seen_depots = true;
                    Section::Depots
                }
                _ => Section::Other,
            };
            continue;
        }
        if let Some((k, v)) = line.split_once(':') {
            if !k.trim().is_empty() && k.trim().chars().all(|c| c.is_ascii_uppercase() || c == '_') {
                header.insert(k.trim().to_string(), v.trim().trim_matches('"').trim().to_string());
                section = Section::Header;
                continue;
            }
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match section {
            Section::Coords => {
                if fields.len() < 3 {
                    return Err(malformed(lineno, "coordinate line needs id, x, y"));
                }
                let id = parse_id(fields[0], lineno)?;
                let x = parse_f64(fields[1], lineno)?;
                let y = parse_f64(fields[2], lineno)?;
                coords.insert(id, [x, y]);
            }
            Section::Demands => {
                if fields.len() < 2 {
                    return Err(malformed(lineno, "demand line needs id and demand"));
                }
                let id = parse_id(fields[0], lineno)?;
                let q = fields[1]
                    .parse::<u32>()
                    .map_err(|_| malformed(lineno, format!("bad demand {:?}", fields[1])))?;
                demands.insert(id, q);
            }
            Section::Depots => {
                for f in fields {
                    let v: i64 = f
                        .parse()
                        .map_err(|_| malformed(lineno, format!("bad depot id {f:?}")))?;
                    if v == -1 {
                        section = Section::Other;
                        break;
                    }
                    if v < 1 {
                        return Err(malformed(lineno, format!("bad depot id {v}")));
                    }
                    depots.push(v as usize);
                }
            }
            Section::Other => {}
            Section::Header => {
                return Err(malformed(lineno, format!("unexpected line {line:?}")));
            }
        }
    }

    let dimension: usize = header
        .get("DIMENSION")
        .ok_or_else(|| ParseError::MissingSection("DIMENSION".into()))?
        .parse()
        .map_err(|_| malformed(0, "DIMENSION is not an integer"))?;
    let capacity: u32 = header
        .get("CAPACITY")
        .ok_or_else(|| ParseError::MissingSection("CAPACITY".into()))?
        .parse()
        .map_err(|_| malformed(0, "CAPACITY is not an integer"))?;
    let ewt = header
        .get("EDGE_WEIGHT_TYPE")
        .ok_or_else(|| ParseError::MissingSection("EDGE_WEIGHT_TYPE".into()))?;
    if ewt != "EUC_2D" {
        return Err(ParseError::UnsupportedFormat(format!("EDGE_WEIGHT_TYPE {ewt}")));
    }
    if let Some(t) = header.get("TYPE") {
        if t != "CVRP" {
            return Err(ParseError::UnsupportedFormat(format!("TYPE {t}")));
        }
    }
    // keys are sorted, so the extremes bound every id
    let complete = |section: &str, map_len: usize, lo: Option<usize>, hi: Option<usize>| {
        if map_len != dimension || lo == Some(0) || hi.is_some_and(|id| id > dimension) {
            Err(ParseError::Incomplete {
                section: section.into(),
                expected: dimension,
                found: map_len,
            })
        } else {
            Ok(())
        }
    };
    let missing = |name: &str| Err(ParseError::MissingSection(name.into()));
    if !seen_coords {
        return missing("NODE_COORD_SECTION");
    }
    complete("NODE_COORD_SECTION", coords.len(), coords.keys().next().copied(), coords.keys().next_back().copied())?;
    if !seen_demands {
        return missing("DEMAND_SECTION");
    }
    complete("DEMAND_SECTION", demands.len(), demands.keys().next().copied(), demands.keys().next_back().copied())?;
    if !seen_depots {
        return missing("DEPOT_SECTION");
    }
    let depot = match depots.as_slice() {
        [] => {
            return Err(ParseError::Incomplete {
                section: "DEPOT_SECTION".into(),
                expected: 1,
                found: 0,
            })
        }
        [d] if *d <= dimension => *d,
        [d] => return Err(malformed(0, format!("depot {d} exceeds DIMENSION"))),
        _ => return Err(ParseError::UnsupportedFormat("multiple depots".into())),
    };

    let order = std::iter::once(depot).chain((1..=dimension).filter(|&id| id != depot));
    let mut xy = Vec::with_capacity(dimension);
    let mut q = Vec::with_capacity(dimension);
    for id in order {
        xy.push(coords[&id]);
        q.push(demands[&id]);
    }
    let name = header.get("NAME").cloned().unwrap_or_else(|| "unnamed".into());
    Ok(Instance::new(name, xy, q, capacity, DistanceConvention::RoundedEuclidean)?)
}

fn parse_id(s: &str, line: usize) -> Result<usize, ParseError> {
    s.parse::<usize>()
        .map_err(|_| malformed(line, format!("bad node id {s:?}")))
}

fn parse_f64(s: &str, line: usize) -> Result<f64, ParseError> {
    s.parse::<f64>()
        .map_err(|_| malformed(line, format!("bad coordinate {s:?}")))
}

/// Writes `inst` in the TSPLIB CVRP layout with the depot as node 1.
pub fn to_cvrplib(inst: &Instance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NAME : {}", inst.name());
    let _ = writeln!(out, "TYPE : CVRP");
    let _ = writeln!(out, "DIMENSION : {}", inst.len());
    let _ = writeln!(out, "EDGE_WEIGHT_TYPE : EUC_2D");
    let _ = writeln!(out, "CAPACITY : {}", inst.capacity());
    let _ = writeln!(out, "NODE_COORD_SECTION");
    for (i, [x, y]) in inst.coords().iter().enumerate() {
        let _ = writeln!(out, "{} {} {}", i + 1, x, y);
    }
    let _ = writeln!(out, "DEMAND_SECTION");
    for (i, q) in inst.demands().iter().enumerate() {
        let _ = writeln!(out, "{} {}", i + 1, q);
    }
    let _ = writeln!(out, "DEPOT_SECTION\n1\n-1\nEOF");
    out
}

/// A CVRPLib `.sol` file: `Route #k: c1 c2 ...` lines and a `Cost` line.
/// Customer numbers are already depot-relative (customer `k` is node `k`).
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceSolution {
    pub routes: Vec<Vec<usize>>,
    pub cost: Option<f64>,
}

pub fn parse_solution(text: &str) -> Result<ReferenceSolution, ParseError> {
    let mut routes = Vec::new();
    let mut cost = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix("Route") {
            let (_, body) = rest
                .split_once(':')
                .ok_or_else(|| malformed(idx + 1, "route line without ':'"))?;
            let route = body
                .split_whitespace()
                .map(|t| parse_id(t, idx + 1))
                .collect::<Result<Vec<_>, _>>()?;
            routes.push(route);
        } else if let Some(rest) = line.strip_prefix("Cost") {
            cost = Some(parse_f64(rest.trim().trim_start_matches(':').trim(), idx + 1)?);
        }
    }
    if routes.is_empty() {
        return Err(ParseError::MissingSection("Route".into()));
    }
    Ok(ReferenceSolution { routes, cost })
}
