//! DC sensitivities: PTDF, GGDF, LODF, and scheduled line flows.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::grid::{first_unreached, Area, AreaView, BusId, GenId, LineId, NetworkCase, TransmissionLine, BALANCE_TOL};

/// `φ_hh` at or above `1 - BRIDGE_TOL` marks a line whose loss islands the network.
const BRIDGE_TOL: f64 = 1e-9;
/// Smallest acceptable ratio of LU pivots before a system is called singular.
const PIVOT_RATIO: f64 = 1e-12;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SensitivityError {
    #[error("singular susceptance matrix for {network}: bus {bus} is not connected to the reference")]
    Disconnected { network: String, bus: BusId },
    #[error("ill-conditioned susceptance matrix for {network}")]
    IllConditioned { network: String },
    #[error("generator {0} is not an in-service generator of the studied area")]
    NotInArea(GenId),
    #[error("no remaining capacity to replace generator {0}")]
    NoRemainingCapacity(GenId),
    #[error("generation and load differ by {0:.3e} pu")]
    Imbalance(f64),
    #[error("unknown line {0}")]
    UnknownLine(LineId),
}

#[derive(Clone, Debug)]
struct Branch {
    id: LineId,
    from: usize,
    to: usize,
    susceptance: f64,
}

/// A set of buses and branches with one reference bus.
#[derive(Clone, Debug)]
pub struct DcNetwork {
    name: String,
    buses: Vec<BusId>,
    index: BTreeMap<BusId, usize>,
    branches: Vec<Branch>,
    reference: usize,
}

impl DcNetwork {
    /// Branches whose endpoints are both in `buses`; `reference` must be one of them.
    pub fn new<'a>(
        name: impl Into<String>,
        buses: &[BusId],
        lines: impl IntoIterator<Item = &'a TransmissionLine>,
        reference: BusId,
    ) -> Self {
        let mut sorted = buses.to_vec();
        sorted.sort();
        sorted.dedup();
        let index: BTreeMap<BusId, usize> = sorted.iter().enumerate().map(|(i, b)| (*b, i)).collect();
        let branches = lines
            .into_iter()
            .filter_map(|l| {
                Some(Branch {
                    id: l.id,
                    from: *index.get(&l.from_bus)?,
                    to: *index.get(&l.to_bus)?,
                    susceptance: 1.0 / l.reactance_pu,
                })
            })
            .collect();
        let reference = index[&reference];
        DcNetwork {
            name: name.into(),
            buses: sorted,
            index,
            branches,
            reference,
        }
    }

    /// Both areas and all lines.
    pub fn full(case: &NetworkCase) -> Self {
        let buses: Vec<BusId> = case.buses.iter().map(|b| b.id).collect();
        DcNetwork::new("full network", &buses, &case.lines, case.reference_bus)
    }

    /// One area with its internal lines only.
    pub fn area(case: &NetworkCase, area: Area, reference: BusId) -> Self {
        let buses: Vec<BusId> = case.buses.iter().filter(|b| b.area == area).map(|b| b.id).collect();
        DcNetwork::new(format!("{area:?} area"), &buses, &case.lines, reference)
    }

    /// Same network with one branch removed.
    pub fn without(&self, line: LineId) -> Self {
        let mut n = self.clone();
        n.branches.retain(|b| b.id != line);
        n
    }

    pub fn buses(&self) -> &[BusId] {
        &self.buses
    }

    pub fn lines(&self) -> Vec<LineId> {
        self.branches.iter().map(|b| b.id).collect()
    }

    pub fn bus_index(&self, bus: BusId) -> Option<usize> {
        self.index.get(&bus).copied()
    }

    /// Branch × bus PTDF: flow on each branch (from→to) per unit injection at
    /// a bus withdrawn at the reference bus.
    pub fn ptdf(&self) -> Result<DMatrix<f64>, SensitivityError> {
        let n = self.buses.len();
        let members: BTreeSet<BusId> = self.buses.iter().copied().collect();
        let edges = self.branches.iter().map(|b| (self.buses[b.from], self.buses[b.to]));
        if let Some(bus) = first_unreached(&members, edges) {
            return Err(SensitivityError::Disconnected {
                network: self.name.clone(),
                bus,
            });
        }
        // Reduced index: every bus except the reference.
        let reduced = |i: usize| -> Option<usize> {
            match i.cmp(&self.reference) {
                std::cmp::Ordering::Less => Some(i),
                std::cmp::Ordering::Equal => None,
                std::cmp::Ordering::Greater => Some(i - 1),
            }
        };
        let m = n - 1;
        let mut x = DMatrix::<f64>::zeros(n, n);
        if m > 0 {
            let mut bred = DMatrix::<f64>::zeros(m, m);
            for br in &self.branches {
                let (f, t) = (reduced(br.from), reduced(br.to));
                if let Some(f) = f {
                    bred[(f, f)] += br.susceptance;
                }
                if let Some(t) = t {
                    bred[(t, t)] += br.susceptance;
                }
                if let (Some(f), Some(t)) = (f, t) {
                    bred[(f, t)] -= br.susceptance;
                    bred[(t, f)] -= br.susceptance;
                }
            }
            let lu = bred.lu();
            let pivots: Vec<f64> = lu.u().diagonal().iter().map(|v| v.abs()).collect();
            let (lo, hi) = pivots
                .iter()
                .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            if !(lo > PIVOT_RATIO * hi) {
                return Err(SensitivityError::IllConditioned {
                    network: self.name.clone(),
                });
            }
            let inv = lu.try_inverse().ok_or_else(|| SensitivityError::IllConditioned {
                network: self.name.clone(),
            })?;
            for i in 0..n {
                for j in 0..n {
                    if let (Some(ri), Some(rj)) = (reduced(i), reduced(j)) {
                        x[(i, j)] = inv[(ri, rj)];
                    }
                }
            }
        }
        let mut h = DMatrix::<f64>::zeros(self.branches.len(), n);
        for (r, br) in self.branches.iter().enumerate() {
            for k in 0..n {
                h[(r, k)] = br.susceptance * (x[(br.from, k)] - x[(br.to, k)]);
            }
        }
        Ok(h)
    }

    /// Branch flows for a full injection vector indexed like `buses()`.
    pub fn flows(&self, injections: &[f64]) -> Result<Vec<f64>, SensitivityError> {
        let h = self.ptdf()?;
        Ok((0..h.nrows())
            .map(|r| (0..h.ncols()).map(|k| h[(r, k)] * injections[k]).sum())
            .collect())
    }
}

/// PTDF of the whole two-area network, rows in case line order.
#[derive(Clone, Debug)]
pub struct NetworkPtdf {
    pub lines: Vec<LineId>,
    pub buses: Vec<BusId>,
    pub h: DMatrix<f64>,
}

impl NetworkPtdf {
    pub fn compute(case: &NetworkCase) -> Result<Self, SensitivityError> {
        let net = DcNetwork::full(case);
        Ok(NetworkPtdf {
            lines: net.lines(),
            buses: net.buses().to_vec(),
            h: net.ptdf()?,
        })
    }

    fn row(&self, line: LineId) -> Option<usize> {
        self.lines.iter().position(|l| *l == line)
    }

    fn col(&self, bus: BusId) -> usize {
        self.buses.binary_search(&bus).expect("bus of the same case")
    }
}

/// Studied-area PTDF `[H_i H_e]`.
///
/// Rows are the area's internal lines then its tie-lines, each ascending by
/// id. Columns are internal sources then external sources in the order of
/// the [`AreaView`]. `by_bus` holds the same rows against every area bus.
#[derive(Clone, Debug)]
pub struct PtdfMatrix {
    pub lines: Vec<LineId>,
    pub labels: Vec<String>,
    pub n_internal: usize,
    pub h: DMatrix<f64>,
    pub buses: Vec<BusId>,
    pub by_bus: DMatrix<f64>,
}

impl PtdfMatrix {
    pub fn n_external(&self) -> usize {
        self.labels.len() - self.n_internal
    }

    pub fn row_of(&self, line: LineId) -> Option<usize> {
        self.lines.iter().position(|l| *l == line)
    }

    pub fn h_i(&self) -> DMatrix<f64> {
        self.h.columns(0, self.n_internal).into_owned()
    }

    pub fn h_e(&self) -> DMatrix<f64> {
        self.h.columns(self.n_internal, self.n_external()).into_owned()
    }

    pub fn bus_column(&self, bus: BusId) -> Option<usize> {
        self.buses.binary_search(&bus).ok()
    }

    pub fn to_csv(&self) -> String {
        matrix_csv(&self.lines, &self.labels, &self.h)
    }
}

/// Area PTDF with the tie-lines modeled as injections at their boundary buses.
pub fn compute_ptdf(case: &NetworkCase, view: &AreaView) -> Result<PtdfMatrix, SensitivityError> {
    let net = DcNetwork::area(case, Area::Studied, view.reference_bus);
    let inner = net.ptdf()?;
    let inner_lines = net.lines();
    let buses = net.buses().to_vec();
    let mut lines = view.internal_lines.clone();
    lines.extend(view.ties.iter().map(|t| t.line));
    let mut by_bus = DMatrix::<f64>::zeros(lines.len(), buses.len());
    for (r, line) in view.internal_lines.iter().enumerate() {
        let src = inner_lines.iter().position(|l| l == line).expect("internal line");
        by_bus.row_mut(r).copy_from(&inner.row(src));
    }
    let n_i = view.n_internal();
    let mut h = DMatrix::<f64>::zeros(lines.len(), n_i + view.n_external());
    for (s, src) in view.internal_sources.iter().enumerate() {
        let c = net.bus_index(src.bus).expect("source bus in area");
        h.column_mut(s).copy_from(&by_bus.column(c));
    }
    let n_lines = view.internal_lines.len();
    for (e, tie) in view.ties.iter().enumerate() {
        let c = net.bus_index(tie.boundary_bus).expect("boundary bus in area");
        h.column_mut(n_i + e).copy_from(&by_bus.column(c));
        // The tie itself carries exactly the injected deviation.
        h[(n_lines + e, n_i + e)] = tie.orientation;
    }
    Ok(PtdfMatrix {
        lines,
        labels: view.all_labels(),
        n_internal: n_i,
        h,
        buses,
        by_bus,
    })
}

/// Scheduled operating point.
#[derive(Clone, Debug, Serialize)]
pub struct ScheduledFlows {
    /// Case line order.
    pub lines: Vec<LineId>,
    pub flow_pu: Vec<f64>,
    pub generation: Vec<(GenId, f64)>,
}

impl ScheduledFlows {
    pub fn flow(&self, line: LineId) -> Option<f64> {
        self.lines.iter().position(|l| *l == line).map(|i| self.flow_pu[i])
    }
}

/// DC flows of the full network for the scheduled dispatch.
pub fn compute_dc_flows(case: &NetworkCase) -> Result<ScheduledFlows, SensitivityError> {
    let imbalance = case.total_generation() - case.total_load();
    if imbalance.abs() > BALANCE_TOL {
        return Err(SensitivityError::Imbalance(imbalance));
    }
    let net = DcNetwork::full(case);
    let injections = case.net_injections();
    let p: Vec<f64> = net.buses().iter().map(|b| injections[b]).collect();
    Ok(ScheduledFlows {
        lines: net.lines(),
        flow_pu: net.flows(&p)?,
        generation: case.generators.iter().map(|g| (g.id, g.p_sched_pu)).collect(),
    })
}

/// Generator outage factors: column `k` is the flow change per unit of lost
/// output of generator `k`, its output replaced by the remaining area
/// generators in proportion to capacity.
#[derive(Clone, Debug)]
pub struct GgdfMatrix {
    pub lines: Vec<LineId>,
    pub outages: Vec<GenId>,
    pub g: DMatrix<f64>,
    /// Replacement weights per outage.
    pub weights: Vec<Vec<(GenId, f64)>>,
}

impl GgdfMatrix {
    pub fn column_of(&self, gen: GenId) -> Option<usize> {
        self.outages.iter().position(|g| *g == gen)
    }

    pub fn to_csv(&self) -> String {
        let cols: Vec<String> = self.outages.iter().map(|g| g.to_string()).collect();
        matrix_csv(&self.lines, &cols, &self.g)
    }
}

pub fn compute_ggdf(
    case: &NetworkCase,
    ptdf: &PtdfMatrix,
    outages: &[GenId],
) -> Result<GgdfMatrix, SensitivityError> {
    let fleet: Vec<_> = case.generators_in(Area::Studied).collect();
    let mut g = DMatrix::<f64>::zeros(ptdf.lines.len(), outages.len());
    let mut weights = Vec::with_capacity(outages.len());
    for (c, &k) in outages.iter().enumerate() {
        let lost = fleet
            .iter()
            .find(|gen| gen.id == k)
            .ok_or(SensitivityError::NotInArea(k))?;
        let total: f64 = fleet.iter().filter(|m| m.id != k).map(|m| m.capacity_pu()).sum();
        if !(total > 0.0) {
            return Err(SensitivityError::NoRemainingCapacity(k));
        }
        let w: Vec<(GenId, f64)> = fleet
            .iter()
            .filter(|m| m.id != k)
            .map(|m| (m.id, m.capacity_pu() / total))
            .collect();
        let mut col = -ptdf.by_bus.column(ptdf.bus_column(lost.bus).expect("area bus"));
        for (m, wm) in &w {
            let bus = case.generator(*m).expect("fleet member").bus;
            col += *wm * ptdf.by_bus.column(ptdf.bus_column(bus).expect("area bus"));
        }
        g.column_mut(c).copy_from(&col);
        weights.push(w);
    }
    Ok(GgdfMatrix {
        lines: ptdf.lines.clone(),
        outages: outages.to_vec(),
        g,
        weights,
    })
}

/// Line outage factors over the full network. Entry `(h, j)` is the flow
/// change on row line `h` per unit of pre-outage flow on outaged line `j`.
/// The self entry of an outaged line that is also a row is stored as zero and
/// carries no meaning.
#[derive(Clone, Debug)]
pub struct LodfMatrix {
    pub lines: Vec<LineId>,
    /// Non-bridge outages, in the requested order.
    pub outages: Vec<LineId>,
    pub l: DMatrix<f64>,
    /// Requested outages whose loss would island part of the network.
    pub bridges: Vec<LineId>,
}

impl LodfMatrix {
    pub fn column_of(&self, line: LineId) -> Option<usize> {
        self.outages.iter().position(|l| *l == line)
    }

    pub fn to_csv(&self) -> String {
        let cols: Vec<String> = self.outages.iter().map(|l| l.to_string()).collect();
        matrix_csv(&self.lines, &cols, &self.l)
    }
}

pub fn compute_lodf(
    case: &NetworkCase,
    network: &NetworkPtdf,
    rows: &[LineId],
    candidates: &[LineId],
) -> Result<LodfMatrix, SensitivityError> {
    let row_idx: Vec<usize> = rows
        .iter()
        .map(|l| network.row(*l).ok_or(SensitivityError::UnknownLine(*l)))
        .collect::<Result<_, _>>()?;
    let mut outages = Vec::new();
    let mut bridges = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for &j in candidates {
        let line = case.line(j).ok_or(SensitivityError::UnknownLine(j))?;
        let (f, t) = (network.col(line.from_bus), network.col(line.to_bus));
        let phi = |r: usize| network.h[(r, f)] - network.h[(r, t)];
        let jr = network.row(j).ok_or(SensitivityError::UnknownLine(j))?;
        let phi_jj = phi(jr);
        if phi_jj >= 1.0 - BRIDGE_TOL {
            bridges.push(j);
            continue;
        }
        outages.push(j);
        columns.push(
            rows.iter()
                .zip(&row_idx)
                .map(|(h, &r)| if *h == j { 0.0 } else { phi(r) / (1.0 - phi_jj) })
                .collect(),
        );
    }
    let l = DMatrix::from_fn(rows.len(), outages.len(), |r, c| columns[c][r]);
    Ok(LodfMatrix {
        lines: rows.to_vec(),
        outages,
        l,
        bridges,
    })
}

/// CSV with a header of column labels and one row per line id.
pub fn matrix_csv(rows: &[LineId], cols: &[String], m: &DMatrix<f64>) -> String {
    let mut s = String::from("line");
    for c in cols {
        s.push(',');
        s.push_str(c);
    }
    s.push('\n');
    for (r, id) in rows.iter().enumerate() {
        s.push_str(&id.to_string());
        for c in 0..m.ncols() {
            s.push_str(&format!(",{}", m[(r, c)]));
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{parse_case, partition, Bus, Generator};

    fn line(id: u32, f: u32, t: u32, x: f64) -> TransmissionLine {
        TransmissionLine {
            id: LineId(id),
            from_bus: BusId(f),
            to_bus: BusId(t),
            reactance_pu: x,
            flow_limit_pu: 10.0,
            is_tie: false,
        }
    }

    fn triangle() -> DcNetwork {
        let lines = [line(1, 1, 2, 0.1), line(2, 2, 3, 0.1), line(3, 1, 3, 0.1)];
        DcNetwork::new("triangle", &[BusId(1), BusId(2), BusId(3)], &lines, BusId(1))
    }

    /// Solves the nodal balance `B θ = p` by Gaussian elimination written out
    /// for three buses with θ_1 = 0 and equal susceptance `s`.
    fn triangle_by_hand(p2: f64, p3: f64) -> [f64; 3] {
        // [2s -s; -s 2s] [θ2 θ3] = [p2 p3], s = 10
        let s = 10.0;
        let det = 3.0 * s * s;
        let t2 = (2.0 * s * p2 + s * p3) / det;
        let t3 = (s * p2 + 2.0 * s * p3) / det;
        [s * (0.0 - t2), s * (t2 - t3), s * (0.0 - t3)]
    }

    #[test]
    fn triangle_ptdf_matches_hand_solution() {
        let h = triangle().ptdf().unwrap();
        let expected = triangle_by_hand(1.0, 0.0);
        assert!((expected[0] + 2.0 / 3.0).abs() < 1e-12);
        for r in 0..3 {
            assert!((h[(r, 1)] - expected[r]).abs() < 1e-10);
        }
        let expected3 = triangle_by_hand(0.0, 1.0);
        for r in 0..3 {
            assert!((h[(r, 2)] - expected3[r]).abs() < 1e-10);
        }
    }

    #[test]
    fn reference_column_is_zero() {
        let h = triangle().ptdf().unwrap();
        assert!(h.column(0).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn kirchhoff_voltage_law_on_cycle() {
        // Cycle 1→2→3→1: x·f(1-2) + x·f(2-3) − x·f(1-3) = 0.
        let h = triangle().ptdf().unwrap();
        for k in 0..3 {
            let s = 0.1 * h[(0, k)] + 0.1 * h[(1, k)] - 0.1 * h[(2, k)];
            assert!(s.abs() < 1e-9);
        }
    }

    #[test]
    fn disconnected_is_structured_error() {
        let lines = [line(1, 1, 2, 0.1)];
        let net = DcNetwork::new("pair", &[BusId(1), BusId(2), BusId(3)], &lines, BusId(1));
        assert!(matches!(
            net.ptdf(),
            Err(SensitivityError::Disconnected { bus: BusId(3), .. })
        ));
    }

    #[test]
    fn triangle_lodf_and_rebuild() {
        let lines = vec![line(1, 1, 2, 0.1), line(2, 2, 3, 0.1), line(3, 1, 3, 0.1)];
        let case = NetworkCase {
            name: String::new(),
            mva_base: 100.0,
            area_labels: ("A".into(), "B".into()),
            reference_bus: BusId(1),
            buses: (1..=3)
                .map(|i| Bus {
                    id: BusId(i),
                    area: Area::Studied,
                    load_pu: 0.0,
                })
                .collect(),
            lines,
            generators: Vec::new(),
            atc: None,
        };
        let net = NetworkPtdf::compute(&case).unwrap();
        let ids = [LineId(1), LineId(2), LineId(3)];
        let lodf = compute_lodf(&case, &net, &ids, &[LineId(3)]).unwrap();
        assert!((lodf.l[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((lodf.l[(1, 0)] - 1.0).abs() < 1e-12);
        assert!(lodf.bridges.is_empty());

        // 0.3 pu on line 1-3 reappears on the path 1→2→3 after the outage.
        let before = triangle().flows(&[-0.3, 0.0, 0.3]).unwrap();
        let after = triangle().without(LineId(3)).flows(&[-0.3, 0.0, 0.3]).unwrap();
        for r in 0..2 {
            let predicted = before[r] + lodf.l[(r, 0)] * before[2];
            assert!((predicted - after[r]).abs() < 1e-8);
        }
    }

    #[test]
    fn radial_spur_is_bridge() {
        let mut lines = vec![line(1, 1, 2, 0.1), line(2, 2, 3, 0.1), line(3, 1, 3, 0.1)];
        lines.push(line(4, 3, 4, 0.1));
        let case = NetworkCase {
            name: String::new(),
            mva_base: 100.0,
            area_labels: ("A".into(), "B".into()),
            reference_bus: BusId(1),
            buses: (1..=4)
                .map(|i| Bus {
                    id: BusId(i),
                    area: Area::Studied,
                    load_pu: 0.0,
                })
                .collect(),
            lines,
            generators: Vec::new(),
            atc: None,
        };
        let net = NetworkPtdf::compute(&case).unwrap();
        let lodf = compute_lodf(&case, &net, &[LineId(1)], &[LineId(4), LineId(1)]).unwrap();
        assert_eq!(lodf.bridges, vec![LineId(4)]);
        assert_eq!(lodf.outages, vec![LineId(1)]);
    }

    fn gen(id: u32, bus: u32, cap: f64) -> Generator {
        Generator {
            id: GenId(id),
            bus: BusId(bus),
            unit_type: None,
            p_sched_pu: cap / 2.0,
            p_min_pu: 0.0,
            p_max_pu: cap,
            res_up_pu: cap / 2.0,
            res_dn_pu: cap / 2.0,
        }
    }

    fn triangle_with_tie(generators: Vec<Generator>) -> NetworkCase {
        let mut lines = vec![line(1, 1, 2, 0.1), line(2, 2, 3, 0.1), line(3, 1, 3, 0.1)];
        let mut tie = line(4, 3, 4, 0.1);
        tie.is_tie = true;
        lines.push(tie);
        let load: f64 = generators.iter().map(|g| g.p_sched_pu).sum();
        let mut buses: Vec<Bus> = (1..=3)
            .map(|i| Bus {
                id: BusId(i),
                area: Area::Studied,
                load_pu: 0.0,
            })
            .collect();
        buses.push(Bus {
            id: BusId(4),
            area: Area::Neighbor,
            load_pu: load,
        });
        let case = NetworkCase {
            name: String::new(),
            mva_base: 100.0,
            area_labels: ("A".into(), "B".into()),
            reference_bus: BusId(1),
            buses,
            lines,
            generators,
            atc: None,
        };
        case.validate().unwrap();
        case
    }

    #[test]
    fn ggdf_two_generators_replacement_at_reference() {
        let case = triangle_with_tie(vec![gen(1, 1, 1.0), gen(2, 2, 1.0)]);
        let view = partition(&case);
        let ptdf = compute_ptdf(&case, &view).unwrap();
        let g = compute_ggdf(&case, &ptdf, &[GenId(2)]).unwrap();
        let col2 = ptdf.by_bus.column(ptdf.bus_column(BusId(2)).unwrap());
        for r in 0..ptdf.lines.len() {
            assert!((g.g[(r, 0)] + col2[r]).abs() < 1e-12);
        }
        assert_eq!(g.weights[0], vec![(GenId(1), 1.0)]);
    }

    #[test]
    fn ggdf_equal_capacity_weights() {
        let case = triangle_with_tie(vec![gen(1, 1, 1.0), gen(2, 2, 1.0), gen(3, 3, 1.0)]);
        let view = partition(&case);
        let ptdf = compute_ptdf(&case, &view).unwrap();
        let g = compute_ggdf(&case, &ptdf, &[GenId(1), GenId(2), GenId(3)]).unwrap();
        for w in &g.weights {
            assert!(w.iter().all(|(_, v)| (*v - 0.5).abs() < 1e-15));
            assert!((w.iter().map(|(_, v)| v).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ggdf_single_generator_errors() {
        let case = triangle_with_tie(vec![gen(1, 2, 1.0)]);
        let view = partition(&case);
        let ptdf = compute_ptdf(&case, &view).unwrap();
        assert_eq!(
            compute_ggdf(&case, &ptdf, &[GenId(1)]).unwrap_err(),
            SensitivityError::NoRemainingCapacity(GenId(1))
        );
    }

    #[test]
    fn area_ptdf_tie_columns() {
        let case = triangle_with_tie(vec![gen(1, 1, 1.0), gen(2, 2, 1.0)]);
        let view = partition(&case);
        let ptdf = compute_ptdf(&case, &view).unwrap();
        assert_eq!(ptdf.lines, vec![LineId(1), LineId(2), LineId(3), LineId(4)]);
        assert_eq!(ptdf.labels, vec!["g1", "g2", "3-4"]);
        // Tie 3-4 leaves the area: a positive injection into A is a negative line flow.
        assert_eq!(ptdf.h[(3, 2)], -1.0);
        assert_eq!(ptdf.h.column(0).iter().filter(|v| **v != 0.0).count(), 0);
        assert_eq!(ptdf.h_i().ncols(), 2);
        assert_eq!(ptdf.h_e().ncols(), 1);
    }

    #[test]
    fn two_bus_flow() {
        let text = r#"{
          "areas": {"studied": "A", "neighbor": "B"},
          "reference_bus": 1,
          "buses": [{"id": 1, "area": "A", "load_pu": 0.0}, {"id": 2, "area": "B", "load_pu": 1.0}],
          "lines": [{"id": 1, "from_bus": 1, "to_bus": 2, "reactance_pu": 0.2, "flow_limit_pu": 2.0}],
          "generators": [{"id": 1, "bus": 1, "p_sched_pu": 1.0, "p_min_pu": 0.0, "p_max_pu": 2.0, "res_up_pu": 0.0, "res_dn_pu": 0.0}]
        }"#;
        let case = parse_case(text).unwrap();
        let flows = compute_dc_flows(&case).unwrap();
        assert!((flows.flow(LineId(1)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_injection_zero_flow() {
        let case = parse_case(&crate::grid::tests::two_by_two()).unwrap();
        let mut balanced = case.clone();
        for b in &mut balanced.buses {
            b.load_pu = 0.0;
        }
        for g in &mut balanced.generators {
            g.p_sched_pu = 0.0;
            g.res_dn_pu = 0.0;
        }
        let flows = compute_dc_flows(&balanced).unwrap();
        assert!(flows.flow_pu.iter().all(|f| f.abs() < 1e-15));
    }

    #[test]
    fn csv_dump_has_labels() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let csv = matrix_csv(&[LineId(7), LineId(9)], &["a".into(), "b".into()], &m);
        assert_eq!(csv, "line,a,b\n7,1,2\n9,3,4\n");
    }
}
