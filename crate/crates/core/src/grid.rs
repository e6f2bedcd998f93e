//! Network case: loading, validation, load scaling and the split of the
//! studied area into internal sources (generator buses) and external
//! sources (tie-lines).

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Generation/load balance tolerance (pu).
pub const BALANCE_TOL: f64 = 1e-6;
/// Slack on generator bound checks (pu).
const BOUND_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BusId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LineId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GenId(pub u32);

impl fmt::Display for BusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for LineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for GenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Studied area (A) or its neighbor (B).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Area {
    Studied,
    Neighbor,
}

#[derive(Debug, Error)]
pub enum GridError {
    #[error("case file not found: {0}")]
    NotFound(String),
    #[error("cannot read case file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed case file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("validation error: {invariant} ({element})")]
    Invalid { invariant: String, element: String },
}

fn invalid(invariant: impl Into<String>, element: impl Into<String>) -> GridError {
    GridError::Invalid {
        invariant: invariant.into(),
        element: element.into(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: BusId,
    pub area: Area,
    pub load_pu: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransmissionLine {
    pub id: LineId,
    pub from_bus: BusId,
    pub to_bus: BusId,
    pub reactance_pu: f64,
    /// Symmetric thermal limit: `|flow| <= flow_limit_pu`.
    pub flow_limit_pu: f64,
    pub is_tie: bool,
}

impl TransmissionLine {
    /// `from-to` name used for dimension labels.
    pub fn name(&self) -> String {
        format!("{}-{}", self.from_bus, self.to_bus)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: GenId,
    pub bus: BusId,
    pub unit_type: Option<String>,
    pub p_sched_pu: f64,
    pub p_min_pu: f64,
    pub p_max_pu: f64,
    pub res_up_pu: f64,
    pub res_dn_pu: f64,
}

impl Generator {
    pub fn capacity_pu(&self) -> f64 {
        self.p_max_pu
    }
}

/// Net-exchange limits between the two areas.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtcLimits {
    pub a_to_b_pu: f64,
    pub b_to_a_pu: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetworkCase {
    pub name: String,
    pub mva_base: f64,
    /// Labels of the studied and neighbor area as they appear in the file.
    pub area_labels: (String, String),
    pub reference_bus: BusId,
    pub buses: Vec<Bus>,
    pub lines: Vec<TransmissionLine>,
    /// In-service generators only.
    pub generators: Vec<Generator>,
    pub atc: Option<AtcLimits>,
}

// On-disk layout.

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct CaseFile {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    mva_base: Option<f64>,
    areas: AreasRecord,
    reference_bus: u32,
    buses: Vec<BusRecord>,
    lines: Vec<LineRecord>,
    generators: Vec<GenRecord>,
    #[serde(default)]
    atc: Option<AtcLimits>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct AreasRecord {
    studied: String,
    neighbor: String,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct BusRecord {
    id: u32,
    area: String,
    load_pu: f64,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct LineRecord {
    id: u32,
    from_bus: u32,
    to_bus: u32,
    reactance_pu: f64,
    flow_limit_pu: f64,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct GenRecord {
    id: u32,
    bus: u32,
    #[serde(default)]
    unit_type: Option<String>,
    p_sched_pu: f64,
    p_min_pu: f64,
    p_max_pu: f64,
    res_up_pu: f64,
    res_dn_pu: f64,
    #[serde(default = "default_true")]
    in_service: bool,
}

fn default_true() -> bool {
    true
}

/// Reads and validates a case file.
pub fn load_case(path: impl AsRef<Path>) -> Result<NetworkCase, GridError> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(GridError::NotFound(path.display().to_string()));
    }
    let text = std::fs::read_to_string(path)?;
    parse_case(&text)
}

/// Parses and validates case JSON.
pub fn parse_case(text: &str) -> Result<NetworkCase, GridError> {
    let file: CaseFile = serde_json::from_str(text)?;
    from_file(file)
}

fn from_file(file: CaseFile) -> Result<NetworkCase, GridError> {
    let mva_base = file.mva_base.unwrap_or(100.0);
    if mva_base != 100.0 {
        return Err(invalid("mva_base must be 100", format!("mva_base {mva_base}")));
    }
    if file.areas.studied == file.areas.neighbor {
        return Err(invalid("the two areas must differ", file.areas.studied));
    }
    let mut buses = Vec::with_capacity(file.buses.len());
    for b in &file.buses {
        let area = if b.area == file.areas.studied {
            Area::Studied
        } else if b.area == file.areas.neighbor {
            Area::Neighbor
        } else {
            return Err(invalid(format!("unknown area `{}`", b.area), format!("bus {}", b.id)));
        };
        buses.push(Bus {
            id: BusId(b.id),
            area,
            load_pu: b.load_pu,
        });
    }
    let area_of: BTreeMap<BusId, Area> = buses.iter().map(|b| (b.id, b.area)).collect();
    let lines = file
        .lines
        .iter()
        .map(|l| {
            let (fa, ta) = (area_of.get(&BusId(l.from_bus)), area_of.get(&BusId(l.to_bus)));
            TransmissionLine {
                id: LineId(l.id),
                from_bus: BusId(l.from_bus),
                to_bus: BusId(l.to_bus),
                reactance_pu: l.reactance_pu,
                flow_limit_pu: l.flow_limit_pu,
                is_tie: matches!((fa, ta), (Some(a), Some(b)) if a != b),
            }
        })
        .collect();
    let mut seen = BTreeSet::new();
    for g in &file.generators {
        if !seen.insert(g.id) {
            return Err(invalid("generator id must be unique", format!("generator {}", g.id)));
        }
    }
    let generators = file
        .generators
        .iter()
        .filter(|g| g.in_service)
        .map(|g| Generator {
            id: GenId(g.id),
            bus: BusId(g.bus),
            unit_type: g.unit_type.clone(),
            p_sched_pu: g.p_sched_pu,
            p_min_pu: g.p_min_pu,
            p_max_pu: g.p_max_pu,
            res_up_pu: g.res_up_pu,
            res_dn_pu: g.res_dn_pu,
        })
        .collect();
    let case = NetworkCase {
        name: file.name.unwrap_or_default(),
        mva_base,
        area_labels: (file.areas.studied, file.areas.neighbor),
        reference_bus: BusId(file.reference_bus),
        buses,
        lines,
        generators,
        atc: file.atc,
    };
    case.validate()?;
    Ok(case)
}

impl NetworkCase {
    pub fn bus(&self, id: BusId) -> Option<&Bus> {
        self.buses.iter().find(|b| b.id == id)
    }

    pub fn line(&self, id: LineId) -> Option<&TransmissionLine> {
        self.lines.iter().find(|l| l.id == id)
    }

    pub fn generator(&self, id: GenId) -> Option<&Generator> {
        self.generators.iter().find(|g| g.id == id)
    }

    pub fn area_of(&self, bus: BusId) -> Option<Area> {
        self.bus(bus).map(|b| b.area)
    }

    pub fn total_load(&self) -> f64 {
        self.buses.iter().map(|b| b.load_pu).sum()
    }

    pub fn total_generation(&self) -> f64 {
        self.generators.iter().map(|g| g.p_sched_pu).sum()
    }

    pub fn ties(&self) -> impl Iterator<Item = &TransmissionLine> {
        self.lines.iter().filter(|l| l.is_tie)
    }

    pub fn generators_in(&self, area: Area) -> impl Iterator<Item = &Generator> + '_ {
        self.generators
            .iter()
            .filter(move |g| self.area_of(g.bus) == Some(area))
    }

    /// Net scheduled injection (generation minus load) per bus.
    pub fn net_injections(&self) -> BTreeMap<BusId, f64> {
        let mut p: BTreeMap<BusId, f64> = self.buses.iter().map(|b| (b.id, -b.load_pu)).collect();
        for g in &self.generators {
            *p.entry(g.bus).or_insert(0.0) += g.p_sched_pu;
        }
        p
    }

    /// Checks every structural and operating invariant of the case.
    pub fn validate(&self) -> Result<(), GridError> {
        let mut ids = BTreeSet::new();
        for b in &self.buses {
            if !ids.insert(b.id) {
                return Err(invalid("bus id must be unique", format!("bus {}", b.id)));
            }
            if !(b.load_pu >= 0.0) || !b.load_pu.is_finite() {
                return Err(invalid("load_pu must be >= 0", format!("bus {}", b.id)));
            }
        }
        for area in [Area::Studied, Area::Neighbor] {
            if !self.buses.iter().any(|b| b.area == area) {
                return Err(invalid("both areas need at least one bus", format!("{area:?}")));
            }
        }
        let mut line_ids = BTreeSet::new();
        for l in &self.lines {
            let what = format!("line {}", l.id);
            if !line_ids.insert(l.id) {
                return Err(invalid("line id must be unique", what));
            }
            if l.from_bus == l.to_bus {
                return Err(invalid("line endpoints must differ", what));
            }
            let (Some(fa), Some(ta)) = (self.area_of(l.from_bus), self.area_of(l.to_bus)) else {
                return Err(invalid("line endpoint bus does not exist", what));
            };
            if !(l.reactance_pu > 0.0) || !l.reactance_pu.is_finite() {
                return Err(invalid("reactance_pu must be > 0", what));
            }
            if !(l.flow_limit_pu > 0.0) || !l.flow_limit_pu.is_finite() {
                return Err(invalid("flow_limit_pu must be > 0", what));
            }
            if l.is_tie != (fa != ta) {
                return Err(invalid("tie flag must match endpoint areas", what));
            }
        }
        for g in &self.generators {
            let what = format!("generator {}", g.id);
            if self.bus(g.bus).is_none() {
                return Err(invalid("generator bus does not exist", what));
            }
            let vals = [g.p_sched_pu, g.p_min_pu, g.p_max_pu, g.res_up_pu, g.res_dn_pu];
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(invalid("generator data must be finite", what));
            }
            if g.p_sched_pu < 0.0 {
                return Err(invalid("p_sched_pu must be >= 0", what));
            }
            if g.p_sched_pu < g.p_min_pu - BOUND_TOL || g.p_sched_pu > g.p_max_pu + BOUND_TOL {
                return Err(invalid("p_min_pu <= p_sched_pu <= p_max_pu", what));
            }
            if g.res_up_pu < 0.0 || g.res_dn_pu < 0.0 {
                return Err(invalid("reserves must be >= 0", what));
            }
            if g.p_sched_pu + g.res_up_pu > g.p_max_pu + BOUND_TOL {
                return Err(invalid("p_sched_pu + res_up_pu <= p_max_pu", what));
            }
            if g.p_sched_pu - g.res_dn_pu < g.p_min_pu - BOUND_TOL {
                return Err(invalid("p_sched_pu - res_dn_pu >= p_min_pu", what));
            }
        }
        match self.area_of(self.reference_bus) {
            Some(Area::Studied) => {}
            Some(Area::Neighbor) => {
                return Err(invalid(
                    "reference bus must lie in the studied area",
                    format!("bus {}", self.reference_bus),
                ))
            }
            None => {
                return Err(invalid(
                    "reference bus does not exist",
                    format!("bus {}", self.reference_bus),
                ))
            }
        }
        if !self.lines.iter().any(|l| l.is_tie) {
            return Err(invalid("at least one tie-line must exist", "lines"));
        }
        for area in [Area::Studied, Area::Neighbor] {
            if let Some(bus) = self.first_disconnected(Some(area)) {
                return Err(invalid(format!("{area:?} area must be connected"), format!("bus {bus}")));
            }
        }
        if let Some(bus) = self.first_disconnected(None) {
            return Err(invalid("network must be connected", format!("bus {bus}")));
        }
        let imbalance = self.total_generation() - self.total_load();
        if imbalance.abs() > BALANCE_TOL {
            return Err(invalid(
                "total generation must equal total load",
                format!("imbalance {imbalance:.3e} pu"),
            ));
        }
        Ok(())
    }

    /// Some bus not reachable from the first bus of the given area (or of the
    /// whole network) through lines inside that area.
    fn first_disconnected(&self, area: Option<Area>) -> Option<BusId> {
        let members: BTreeSet<BusId> = self
            .buses
            .iter()
            .filter(|b| area.map_or(true, |a| b.area == a))
            .map(|b| b.id)
            .collect();
        let lines = self
            .lines
            .iter()
            .filter(|l| members.contains(&l.from_bus) && members.contains(&l.to_bus))
            .map(|l| (l.from_bus, l.to_bus));
        first_unreached(&members, lines)
    }
}

/// BFS over an undirected edge list; returns the smallest bus not reached
/// from the smallest member.
pub(crate) fn first_unreached(
    members: &BTreeSet<BusId>,
    edges: impl Iterator<Item = (BusId, BusId)>,
) -> Option<BusId> {
    let mut adj: BTreeMap<BusId, Vec<BusId>> = BTreeMap::new();
    for (f, t) in edges {
        adj.entry(f).or_default().push(t);
        adj.entry(t).or_default().push(f);
    }
    let start = *members.iter().next()?;
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(b) = queue.pop_front() {
        for &n in adj.get(&b).map(Vec::as_slice).unwrap_or(&[]) {
            if members.contains(&n) && seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    members.iter().find(|b| !seen.contains(b)).copied()
}

/// Scales every bus load by `factor` and rebalances by scaling all
/// generator setpoints by `(scaled load) / (original generation)`.
/// Reserve bands are clipped to the rebalanced operating range.
pub fn scale_load(case: &NetworkCase, factor: f64) -> Result<NetworkCase, GridError> {
    if !(factor > 0.0) || !factor.is_finite() {
        return Err(invalid("load scale factor must be > 0", format!("factor {factor}")));
    }
    let mut out = case.clone();
    for b in &mut out.buses {
        b.load_pu *= factor;
    }
    let generation = case.total_generation();
    let ratio = if generation > 0.0 {
        out.total_load() / generation
    } else {
        1.0
    };
    for g in &mut out.generators {
        g.p_sched_pu *= ratio;
        if g.p_sched_pu < g.p_min_pu - BOUND_TOL || g.p_sched_pu > g.p_max_pu + BOUND_TOL {
            return Err(invalid(
                "rebalanced setpoint violates p_min_pu <= p_sched_pu <= p_max_pu",
                format!("generator {}", g.id),
            ));
        }
        g.res_up_pu = g.res_up_pu.min(g.p_max_pu - g.p_sched_pu).max(0.0);
        g.res_dn_pu = g.res_dn_pu.min(g.p_sched_pu - g.p_min_pu).max(0.0);
    }
    out.validate()?;
    Ok(out)
}

/// Which reserve bands area-A generators offer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ReservePolicy {
    /// Bands as stored in the case.
    AsGiven,
    /// Every unit may be redispatched within `[p_min, p_max]`.
    FullRange,
    /// Only the listed units are redispatchable (full range); the rest are frozen.
    Only(Vec<GenId>),
    /// `±pct · p_sched`, clipped to `[p_min, p_max]`.
    Percent(f64),
}

/// Applies a reserve policy to the generators of one area.
pub fn with_reserves(case: &NetworkCase, area: Area, policy: &ReservePolicy) -> Result<NetworkCase, GridError> {
    if let ReservePolicy::Only(ids) = policy {
        for id in ids {
            match case.generator(*id) {
                Some(g) if case.area_of(g.bus) == Some(area) => {}
                _ => {
                    return Err(invalid(
                        format!("offered generator must be in service in the {area:?} area"),
                        format!("generator {id}"),
                    ))
                }
            }
        }
    }
    let mut out = case.clone();
    let buses: BTreeSet<BusId> = case.buses.iter().filter(|b| b.area == area).map(|b| b.id).collect();
    for g in out.generators.iter_mut().filter(|g| buses.contains(&g.bus)) {
        let (up, dn) = (g.p_max_pu - g.p_sched_pu, g.p_sched_pu - g.p_min_pu);
        match policy {
            ReservePolicy::AsGiven => {}
            ReservePolicy::FullRange => {
                g.res_up_pu = up;
                g.res_dn_pu = dn;
            }
            ReservePolicy::Only(ids) => {
                let on = ids.contains(&g.id);
                g.res_up_pu = if on { up } else { 0.0 };
                g.res_dn_pu = if on { dn } else { 0.0 };
            }
            ReservePolicy::Percent(pct) => {
                if !(*pct >= 0.0) {
                    return Err(invalid("reserve percentage must be >= 0", format!("{pct}")));
                }
                g.res_up_pu = (pct * g.p_sched_pu).min(up);
                g.res_dn_pu = (pct * g.p_sched_pu).min(dn);
            }
        }
        g.res_up_pu = g.res_up_pu.max(0.0);
        g.res_dn_pu = g.res_dn_pu.max(0.0);
    }
    out.validate()?;
    Ok(out)
}

/// Redispatchable injection at one bus of the studied area; all in-service
/// units at that bus are aggregated.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InternalSource {
    pub bus: BusId,
    pub generators: Vec<GenId>,
    pub res_up_pu: f64,
    pub res_dn_pu: f64,
}

impl InternalSource {
    pub fn label(&self) -> String {
        format!("g{}", self.bus)
    }
}

/// Tie-line seen from the studied area: an injection at its boundary bus.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TieLine {
    pub line: LineId,
    pub boundary_bus: BusId,
    pub external_bus: BusId,
    /// `+1` when the line is oriented from the neighbor into the studied
    /// area, `-1` otherwise. Line flow (from→to) equals `orientation` times
    /// the injection into the studied area.
    pub orientation: f64,
    pub name: String,
}

impl TieLine {
    pub fn label(&self) -> String {
        self.name.clone()
    }
}

/// The studied area as a MIMO system. Every list is in ascending id order,
/// which fixes the ordering of `p_i` (internal sources) and `p_e` (ties).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AreaView {
    pub reference_bus: BusId,
    pub internal_buses: Vec<BusId>,
    pub internal_lines: Vec<LineId>,
    pub ties: Vec<TieLine>,
    pub internal_sources: Vec<InternalSource>,
}

impl AreaView {
    pub fn n_internal(&self) -> usize {
        self.internal_sources.len()
    }

    pub fn n_external(&self) -> usize {
        self.ties.len()
    }

    pub fn internal_labels(&self) -> Vec<String> {
        self.internal_sources.iter().map(InternalSource::label).collect()
    }

    pub fn external_labels(&self) -> Vec<String> {
        self.ties.iter().map(TieLine::label).collect()
    }

    /// Internal labels followed by external labels.
    pub fn all_labels(&self) -> Vec<String> {
        let mut l = self.internal_labels();
        l.extend(self.external_labels());
        l
    }

    pub fn source_index_of_bus(&self, bus: BusId) -> Option<usize> {
        self.internal_sources.iter().position(|s| s.bus == bus)
    }
}

/// Splits the studied area into internal and external sources.
pub fn partition(case: &NetworkCase) -> AreaView {
    partition_area(case, Area::Studied, case.reference_bus)
}

pub(crate) fn partition_area(case: &NetworkCase, area: Area, reference_bus: BusId) -> AreaView {
    let mut internal_buses: Vec<BusId> = case.buses.iter().filter(|b| b.area == area).map(|b| b.id).collect();
    internal_buses.sort();
    let inside = |b: BusId| case.area_of(b) == Some(area);
    let mut internal_lines: Vec<LineId> = case
        .lines
        .iter()
        .filter(|l| inside(l.from_bus) && inside(l.to_bus))
        .map(|l| l.id)
        .collect();
    internal_lines.sort();
    let mut ties: Vec<TieLine> = case
        .lines
        .iter()
        .filter(|l| l.is_tie && (inside(l.from_bus) || inside(l.to_bus)))
        .map(|l| {
            let from_inside = inside(l.from_bus);
            TieLine {
                line: l.id,
                boundary_bus: if from_inside { l.from_bus } else { l.to_bus },
                external_bus: if from_inside { l.to_bus } else { l.from_bus },
                orientation: if from_inside { -1.0 } else { 1.0 },
                name: l.name(),
            }
        })
        .collect();
    ties.sort_by_key(|t| t.line);
    let mut by_bus: BTreeMap<BusId, InternalSource> = BTreeMap::new();
    for g in case.generators.iter().filter(|g| inside(g.bus)) {
        let s = by_bus.entry(g.bus).or_insert_with(|| InternalSource {
            bus: g.bus,
            generators: Vec::new(),
            res_up_pu: 0.0,
            res_dn_pu: 0.0,
        });
        s.generators.push(g.id);
        s.res_up_pu += g.res_up_pu;
        s.res_dn_pu += g.res_dn_pu;
    }
    let internal_sources = by_bus
        .into_values()
        .filter(|s| s.res_up_pu > 0.0 || s.res_dn_pu > 0.0)
        .map(|mut s| {
            s.generators.sort();
            s
        })
        .collect();
    AreaView {
        reference_bus,
        internal_buses,
        internal_lines,
        ties,
        internal_sources,
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Two buses per area, one tie (1-3), balanced with zero flows.
    pub(crate) fn two_by_two() -> String {
        r#"{
          "areas": {"studied": "A", "neighbor": "B"},
          "reference_bus": 1,
          "buses": [
            {"id": 1, "area": "A", "load_pu": 0.5},
            {"id": 2, "area": "A", "load_pu": 0.5},
            {"id": 3, "area": "B", "load_pu": 1.0},
            {"id": 4, "area": "B", "load_pu": 0.0}
          ],
          "lines": [
            {"id": 1, "from_bus": 1, "to_bus": 2, "reactance_pu": 0.1, "flow_limit_pu": 1.0},
            {"id": 2, "from_bus": 3, "to_bus": 4, "reactance_pu": 0.1, "flow_limit_pu": 1.0},
            {"id": 3, "from_bus": 1, "to_bus": 3, "reactance_pu": 0.1, "flow_limit_pu": 1.0}
          ],
          "generators": [
            {"id": 1, "bus": 1, "p_sched_pu": 1.0, "p_min_pu": 0.0, "p_max_pu": 2.0, "res_up_pu": 0.5, "res_dn_pu": 0.5},
            {"id": 2, "bus": 4, "p_sched_pu": 1.0, "p_min_pu": 0.0, "p_max_pu": 2.0, "res_up_pu": 0.5, "res_dn_pu": 0.5}
          ]
        }"#
        .to_string()
    }

    fn triangle_single_area() -> String {
        r#"{
          "areas": {"studied": "A", "neighbor": "B"},
          "reference_bus": 1,
          "buses": [
            {"id": 1, "area": "A", "load_pu": 0.0},
            {"id": 2, "area": "A", "load_pu": 1.0},
            {"id": 3, "area": "A", "load_pu": 1.0}
          ],
          "lines": [
            {"id": 1, "from_bus": 1, "to_bus": 2, "reactance_pu": 0.1, "flow_limit_pu": 2.0},
            {"id": 2, "from_bus": 2, "to_bus": 3, "reactance_pu": 0.1, "flow_limit_pu": 2.0},
            {"id": 3, "from_bus": 1, "to_bus": 3, "reactance_pu": 0.1, "flow_limit_pu": 2.0}
          ],
          "generators": [
            {"id": 1, "bus": 1, "p_sched_pu": 1.0, "p_min_pu": 0.0, "p_max_pu": 2.0, "res_up_pu": 0.0, "res_dn_pu": 0.0},
            {"id": 2, "bus": 2, "p_sched_pu": 1.0, "p_min_pu": 0.0, "p_max_pu": 2.0, "res_up_pu": 0.0, "res_dn_pu": 0.0}
          ]
        }"#
        .to_string()
    }

    fn expect_invalid(text: &str, needle: &str) {
        match parse_case(text) {
            Err(GridError::Invalid { invariant, element }) => {
                let msg = format!("{invariant} ({element})");
                assert!(msg.contains(needle), "unexpected message: {msg}");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn loads_two_by_two() {
        let case = parse_case(&two_by_two()).unwrap();
        assert_eq!(case.ties().count(), 1);
        let view = partition(&case);
        assert_eq!(view.n_external(), 1);
        assert_eq!(view.n_internal(), 1);
        assert_eq!(view.internal_buses, vec![BusId(1), BusId(2)]);
        assert_eq!(view.ties[0].boundary_bus, BusId(1));
        assert_eq!(view.ties[0].orientation, -1.0);
    }

    #[test]
    fn single_area_rejected() {
        // Without a neighbor bus the area check fires before the tie check.
        expect_invalid(&triangle_single_area(), "both areas");
        let with_isolated_b = triangle_single_area().replace(
            r#"{"id": 3, "area": "A", "load_pu": 1.0}"#,
            r#"{"id": 3, "area": "A", "load_pu": 1.0}, {"id": 4, "area": "B", "load_pu": 0.0}"#,
        );
        let linked = with_isolated_b.replace(
            r#"{"id": 3, "from_bus": 1"#,
            r#"{"id": 4, "from_bus": 4, "to_bus": 4, "reactance_pu": 0.1, "flow_limit_pu": 1.0}, {"id": 3, "from_bus": 1"#,
        );
        expect_invalid(&linked, "endpoints must differ");
    }

    #[test]
    fn no_tie_rejected() {
        let text = two_by_two().replace(
            r#"{"id": 3, "from_bus": 1, "to_bus": 3"#,
            r#"{"id": 3, "from_bus": 3, "to_bus": 4"#,
        );
        expect_invalid(&text, "at least one tie-line");
    }

    #[test]
    fn generator_above_max_rejected() {
        let text = two_by_two().replace(
            r#""p_sched_pu": 1.0, "p_min_pu": 0.0, "p_max_pu": 2.0, "res_up_pu": 0.5"#,
            r#""p_sched_pu": 2.2, "p_min_pu": 0.0, "p_max_pu": 2.0, "res_up_pu": 0.0"#,
        );
        expect_invalid(&text, "generator 1");
    }

    #[test]
    fn imbalance_rejected() {
        let text = two_by_two().replace(r#""load_pu": 0.0"#, r#""load_pu": 0.1"#);
        expect_invalid(&text, "total generation must equal total load");
    }

    #[test]
    fn reference_in_neighbor_rejected() {
        let text = two_by_two().replace(r#""reference_bus": 1"#, r#""reference_bus": 3"#);
        expect_invalid(&text, "reference bus");
    }

    #[test]
    fn disconnected_area_rejected() {
        let text = two_by_two().replace(
            r#"{"id": 1, "from_bus": 1, "to_bus": 2"#,
            r#"{"id": 1, "from_bus": 3, "to_bus": 2"#,
        );
        expect_invalid(&text, "area must be connected");
    }

    #[test]
    fn malformed_json_is_parse_error() {
        assert!(matches!(parse_case("{ not json"), Err(GridError::Parse(_))));
    }

    #[test]
    fn missing_file() {
        assert!(matches!(load_case("/nonexistent/case.json"), Err(GridError::NotFound(_))));
    }

    #[test]
    fn scale_identity() {
        let case = parse_case(&two_by_two()).unwrap();
        assert_eq!(scale_load(&case, 1.0).unwrap(), case);
    }

    #[test]
    fn scale_half_rebalances() {
        let case = parse_case(&two_by_two()).unwrap();
        let half = scale_load(&case, 0.5).unwrap();
        assert!((half.total_load() - 1.0).abs() < 1e-12);
        assert!((half.total_generation() - half.total_load()).abs() < 1e-6);
    }

    #[test]
    fn scale_violating_minimum_names_generator() {
        let text = two_by_two().replace(
            r#""id": 2, "bus": 4, "p_sched_pu": 1.0, "p_min_pu": 0.0"#,
            r#""id": 2, "bus": 4, "p_sched_pu": 1.0, "p_min_pu": 0.9"#,
        ).replace(r#""res_dn_pu": 0.5}
          ]"#, r#""res_dn_pu": 0.1}
          ]"#);
        let case = parse_case(&text).unwrap();
        match scale_load(&case, 0.5) {
            Err(GridError::Invalid { element, .. }) => assert_eq!(element, "generator 2"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tie_with_both_ends_inside_is_not_tie() {
        let case = parse_case(&two_by_two()).unwrap();
        let view = partition(&case);
        assert!(view.internal_lines.contains(&LineId(1)));
        assert!(!view.ties.iter().any(|t| t.line == LineId(1)));
    }

    #[test]
    fn reserve_policies() {
        let case = parse_case(&two_by_two()).unwrap();
        let full = with_reserves(&case, Area::Studied, &ReservePolicy::FullRange).unwrap();
        assert_eq!(full.generator(GenId(1)).unwrap().res_up_pu, 1.0);
        assert_eq!(full.generator(GenId(2)).unwrap().res_up_pu, 0.5);
        let none = with_reserves(&case, Area::Studied, &ReservePolicy::Only(vec![])).unwrap();
        assert_eq!(partition(&none).n_internal(), 0);
        assert!(with_reserves(&case, Area::Studied, &ReservePolicy::Only(vec![GenId(2)])).is_err());
    }
}
