//! Largest injection deviation each neighbor-area bus can absorb, given the
//! reserves of the neighbor area and what the studied area makes available
//! over the tie-lines.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::flexibility::AnalysisError;
use crate::grid::{partition, Area, AreaView, BusId, NetworkCase};
use crate::polytope::lp::{maximize_bounded, LpOutcome, Row, FEASIBILITY_TOL};
use crate::polytope::{HPolytope, PolytopeError};
use crate::sensitivity::{compute_dc_flows, compute_lodf, DcNetwork, NetworkPtdf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeviationMode {
    Passive,
    Active,
    Atc,
}

impl fmt::Display for DeviationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            DeviationMode::Passive => "passive",
            DeviationMode::Active => "active",
            DeviationMode::Atc => "atc",
        })
    }
}

/// What the studied area offers over its tie-lines.
#[derive(Clone, Copy, Debug)]
pub enum Import<'a> {
    /// A projected flexibility set over the tie-lines.
    Polytope(&'a HPolytope),
    /// A transfer-capacity polytope; the studied area balances the exchange
    /// with its units redispatched anywhere in `[p_min, p_max]`, without
    /// network constraints.
    Atc(&'a HPolytope),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborOptions {
    /// Reserve of each neighbor unit as a fraction of its setpoint, both directions.
    pub reserve_pct: f64,
    /// Also keep neighbor-area lines within limits after any single
    /// neighbor-area line outage.
    pub n1: bool,
}

impl Default for NeighborOptions {
    fn default() -> Self {
        NeighborOptions {
            reserve_pct: 0.05,
            n1: false,
        }
    }
}

/// `up >= 0 >= dn` in pu.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodalBound {
    pub bus: BusId,
    pub mode: DeviationMode,
    pub up: f64,
    pub dn: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodalDeviationReport {
    pub reserve_pct: f64,
    pub bounds: Vec<NodalBound>,
}

impl NodalDeviationReport {
    /// `bus,mode,up,dn` per line, with header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bus,mode,up,dn\n");
        for b in &self.bounds {
            s.push_str(&format!("{},{},{},{}\n", b.bus, b.mode, b.up, b.dn));
        }
        s
    }

    pub fn get(&self, bus: BusId, mode: DeviationMode) -> Option<&NodalBound> {
        self.bounds.iter().find(|b| b.bus == bus && b.mode == mode)
    }
}

/// Neighbor-area rows shared by every bus and mode.
///
/// Variables are `[δ, p_B (one per neighbor unit), p_e (one per tie)]`,
/// followed in ATC mode by one variable per studied-area unit.
#[derive(Clone, Debug)]
pub struct NeighborModel {
    view: AreaView,
    buses: Vec<BusId>,
    units: Vec<(BusId, f64)>,
    studied_bands: Vec<(f64, f64)>,
    /// Rows over `[injection per neighbor bus]` with their right-hand side.
    line_rows: Vec<(Vec<f64>, f64)>,
}

impl NeighborModel {
    pub fn new(case: &NetworkCase, options: &NeighborOptions) -> Result<Self, AnalysisError> {
        if !(options.reserve_pct >= 0.0) || !options.reserve_pct.is_finite() {
            return Err(AnalysisError::Input(format!(
                "reserve percentage must be >= 0, got {}",
                options.reserve_pct
            )));
        }
        let view = partition(case);
        let reference = case
            .buses
            .iter()
            .filter(|b| b.area == Area::Neighbor)
            .map(|b| b.id)
            .min()
            .expect("validated case has neighbor buses");
        let net = DcNetwork::area(case, Area::Neighbor, reference);
        let h = net.ptdf()?;
        let lines = net.lines();
        let flows = compute_dc_flows(case)?;
        let sched: Vec<f64> = lines.iter().map(|l| flows.flow(*l).expect("line flow")).collect();
        let limit: Vec<f64> = lines.iter().map(|l| case.line(*l).expect("line").flow_limit_pu).collect();

        let mut line_rows = Vec::new();
        for r in 0..lines.len() {
            let a: Vec<f64> = h.row(r).iter().copied().collect();
            line_rows.push((a.clone(), limit[r] - sched[r]));
            line_rows.push((a.iter().map(|v| -v).collect(), limit[r] + sched[r]));
        }
        if options.n1 {
            // Outage factors within the neighbor area, ties held as injections.
            let sub = NeighborSubnetwork { case, lines: &lines, net: &net };
            let lodf = sub.lodf()?;
            for (j, col) in lodf {
                for r in 0..lines.len() {
                    if r == j {
                        continue;
                    }
                    let l = col[r];
                    let a: Vec<f64> = (0..h.ncols()).map(|k| h[(r, k)] + l * h[(j, k)]).collect();
                    let post = sched[r] + l * sched[j];
                    line_rows.push((a.clone(), limit[r] - post));
                    line_rows.push((a.iter().map(|v| -v).collect(), limit[r] + post));
                }
            }
        }
        let units = case
            .generators_in(Area::Neighbor)
            .map(|g| (g.bus, options.reserve_pct * g.p_sched_pu))
            .collect();
        let studied_bands = case
            .generators_in(Area::Studied)
            .map(|g| (g.p_min_pu - g.p_sched_pu, g.p_max_pu - g.p_sched_pu))
            .collect();
        Ok(NeighborModel {
            view,
            buses: net.buses().to_vec(),
            units,
            studied_bands,
            line_rows,
        })
    }

    pub fn buses(&self) -> &[BusId] {
        &self.buses
    }

    /// `(max δ, min δ)` at `bus`.
    pub fn bounds(&self, bus: BusId, import: Import<'_>) -> Result<(f64, f64), AnalysisError> {
        let k = self
            .buses
            .binary_search(&bus)
            .map_err(|_| AnalysisError::Input(format!("bus {bus} is not in the neighbor area")))?;
        let polytope = match import {
            Import::Polytope(p) | Import::Atc(p) => p,
        };
        if polytope.labels() != self.view.external_labels().as_slice() {
            return Err(PolytopeError::LabelMismatch {
                left: polytope.labels().to_vec(),
                right: self.view.external_labels(),
            }
            .into());
        }
        let n_b = self.units.len();
        let n_e = self.view.n_external();
        let n_a = if matches!(import, Import::Atc(_)) {
            self.studied_bands.len()
        } else {
            0
        };
        let dim = 1 + n_b + n_e + n_a;
        let (o_b, o_e, o_a) = (1, 1 + n_b, 1 + n_b + n_e);

        // Injection at each neighbor bus as a linear map of the variables.
        let mut inj = vec![vec![0.0; dim]; self.buses.len()];
        inj[k][0] += 1.0;
        for (u, (b, _)) in self.units.iter().enumerate() {
            inj[self.buses.binary_search(b).expect("neighbor bus")][o_b + u] += 1.0;
        }
        for (e, tie) in self.view.ties.iter().enumerate() {
            // Power entering the studied area leaves the neighbor at the far end.
            inj[self.buses.binary_search(&tie.external_bus).expect("neighbor bus")][o_e + e] -= 1.0;
        }

        let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
        for (a, b) in &self.line_rows {
            let mut row = vec![0.0; dim];
            for (bus_idx, coef) in a.iter().enumerate() {
                if *coef != 0.0 {
                    for (v, x) in row.iter_mut().zip(&inj[bus_idx]) {
                        *v += coef * x;
                    }
                }
            }
            rows.push((row, *b));
        }
        let mut balance = vec![0.0; dim];
        balance[0] = 1.0;
        for u in 0..n_b {
            balance[o_b + u] = 1.0;
        }
        for e in 0..n_e {
            balance[o_e + e] = -1.0;
        }
        rows.push((balance.clone(), 0.0));
        rows.push((balance.iter().map(|v| -v).collect(), 0.0));
        for (a, b) in polytope.a().iter().zip(polytope.b()) {
            let mut row = vec![0.0; dim];
            row[o_e..o_e + n_e].copy_from_slice(a);
            rows.push((row, *b));
        }
        if n_a > 0 {
            let mut studied = vec![0.0; dim];
            for e in 0..n_e {
                studied[o_e + e] = 1.0;
            }
            for u in 0..n_a {
                studied[o_a + u] = 1.0;
            }
            rows.push((studied.clone(), 0.0));
            rows.push((studied.iter().map(|v| -v).collect(), 0.0));
        }

        if rows.iter().any(|(_, b)| *b < -FEASIBILITY_TOL) {
            return Err(AnalysisError::OriginExcluded {
                rows: vec![format!("neighbor-area constraints for bus {bus}")],
            });
        }
        let mut bounds = vec![(f64::NEG_INFINITY, f64::INFINITY); dim];
        for (u, (_, r)) in self.units.iter().enumerate() {
            bounds[o_b + u] = (-r, *r);
        }
        for (u, band) in self.studied_bands.iter().enumerate().take(n_a) {
            bounds[o_a + u] = *band;
        }
        let solve = |sign: f64| -> Result<f64, AnalysisError> {
            let mut c = vec![0.0; dim];
            c[0] = sign;
            match maximize_bounded(&c, rows.iter().map(|(a, b)| Row { a, b: *b }), Some(&bounds)) {
                LpOutcome::Optimal { value, .. } => Ok(sign * value),
                LpOutcome::Unbounded => Err(PolytopeError::Unbounded.into()),
                LpOutcome::Infeasible => Err(PolytopeError::Infeasible.into()),
            }
        };
        let up = solve(1.0)?.max(0.0);
        let dn = solve(-1.0)?.min(0.0);
        Ok((up, dn))
    }
}

struct NeighborSubnetwork<'a> {
    case: &'a NetworkCase,
    lines: &'a [crate::grid::LineId],
    net: &'a DcNetwork,
}

impl NeighborSubnetwork<'_> {
    /// `(outaged row, factors over all rows)` for every non-bridge line.
    fn lodf(&self) -> Result<Vec<(usize, Vec<f64>)>, AnalysisError> {
        let buses = self.net.buses().to_vec();
        let sub_case = NetworkCase {
            name: String::new(),
            mva_base: self.case.mva_base,
            area_labels: self.case.area_labels.clone(),
            reference_bus: buses[0],
            buses: self
                .case
                .buses
                .iter()
                .filter(|b| buses.binary_search(&b.id).is_ok())
                .cloned()
                .collect(),
            lines: self
                .lines
                .iter()
                .map(|l| self.case.line(*l).expect("line").clone())
                .collect(),
            generators: Vec::new(),
            atc: None,
        };
        let ptdf = NetworkPtdf::compute(&sub_case)?;
        let lodf = compute_lodf(&sub_case, &ptdf, self.lines, self.lines)?;
        Ok(lodf
            .outages
            .iter()
            .enumerate()
            .map(|(c, j)| {
                let row = self.lines.iter().position(|l| l == j).expect("outaged line");
                (row, (0..self.lines.len()).map(|r| lodf.l[(r, c)]).collect())
            })
            .collect())
    }
}

/// Bounds for every neighbor bus and every supplied mode, buses ascending,
/// modes in the order given.
pub fn nodal_deviation_report(
    case: &NetworkCase,
    options: &NeighborOptions,
    imports: &[(DeviationMode, Import<'_>)],
) -> Result<NodalDeviationReport, AnalysisError> {
    let model = NeighborModel::new(case, options)?;
    let jobs: Vec<(BusId, DeviationMode, Import<'_>)> = model
        .buses()
        .iter()
        .flat_map(|b| imports.iter().map(move |(m, i)| (*b, *m, *i)))
        .collect();
    let bounds = jobs
        .par_iter()
        .map(|(bus, mode, import)| {
            let (up, dn) = model.bounds(*bus, *import)?;
            Ok(NodalBound {
                bus: *bus,
                mode: *mode,
                up,
                dn,
            })
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    Ok(NodalDeviationReport {
        reserve_pct: options.reserve_pct,
        bounds,
    })
}

/// Bounds for one bus and one import.
pub fn max_nodal_deviation(
    case: &NetworkCase,
    bus: BusId,
    import: Import<'_>,
    options: &NeighborOptions,
) -> Result<(f64, f64), AnalysisError> {
    NeighborModel::new(case, options)?.bounds(bus, import)
}
