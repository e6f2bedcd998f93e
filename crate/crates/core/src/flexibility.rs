//! Flexibility sets, their projection onto the tie-lines, and the metrics
//! built on top: exported flexibility, ATC comparison.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::constraints::{
    assemble_generator_outages, assemble_line_outages, assemble_nominal, compute_delta_limits, stack_n1,
    ConstraintBlock, ConstraintError, DeltaLimits, OutageRows,
};
use crate::grid::{partition, Area, AreaView, GenId, GridError, LineId, NetworkCase};
use crate::polytope::{
    area_2d, bounding_box, contains, project_with_stats, HPolytope, PolytopeError, ProjectionStats, Tolerances,
};
use crate::sensitivity::{
    compute_dc_flows, compute_ggdf, compute_lodf, compute_ptdf, GgdfMatrix, LodfMatrix, NetworkPtdf, PtdfMatrix,
    ScheduledFlows, SensitivityError,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Sensitivity(#[from] SensitivityError),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error("the schedule violates {} row(s), e.g. {}", .rows.len(), .rows.first().map(String::as_str).unwrap_or("?"))]
    OriginExcluded { rows: Vec<String> },
    #[error("invalid input: {0}")]
    Input(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Approach {
    Active,
    Passive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Security {
    #[serde(rename = "n")]
    N,
    #[serde(rename = "n1")]
    N1,
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Approach::Active => "active",
            Approach::Passive => "passive",
        })
    }
}

impl fmt::Display for Security {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Security::N => "n",
            Security::N1 => "n1",
        })
    }
}

/// Which outages enter the contingency rows.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutageSelection {
    /// Generators: every in-service area unit with positive output that
    /// the remaining units can replace.
    /// Lines: every area line and tie-line whose loss keeps the network connected.
    #[default]
    Default,
    None,
    Only(Vec<u32>),
}

/// Options for the contingency part of the model.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ContingencyOptions {
    pub generators: OutageSelection,
    pub lines: OutageSelection,
    pub rows: OutageRows,
}

/// A full set description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlexibilitySpec {
    pub approach: Approach,
    pub security: Security,
    pub contingencies: ContingencyOptions,
}

/// Stable fingerprint of a case.
pub fn case_hash(case: &NetworkCase) -> String {
    let bytes = serde_json::to_vec(case).expect("case serializes");
    hex::encode(Sha256::digest(bytes))
}

/// Everything derived from one case: sensitivities, limits, and the
/// nominal and contingency blocks.
#[derive(Clone, Debug)]
pub struct FlexibilityModel {
    pub case: NetworkCase,
    pub case_hash: String,
    pub view: AreaView,
    pub ptdf: PtdfMatrix,
    pub flows: ScheduledFlows,
    pub limits: DeltaLimits,
    pub ggdf: GgdfMatrix,
    pub lodf: LodfMatrix,
    pub nominal: ConstraintBlock,
    pub gen_block: ConstraintBlock,
    pub line_block: ConstraintBlock,
}

impl FlexibilityModel {
    pub fn new(case: &NetworkCase, options: &ContingencyOptions) -> Result<Self, AnalysisError> {
        let view = partition(case);
        let ptdf = compute_ptdf(case, &view)?;
        let flows = compute_dc_flows(case)?;
        let limits = compute_delta_limits(case, &view, &ptdf, &flows)?;
        let nominal = assemble_nominal(&ptdf, &limits);

        let gens: Vec<GenId> = match &options.generators {
            OutageSelection::Default => {
                let fleet: f64 = case.generators_in(Area::Studied).map(|g| g.capacity_pu()).sum();
                // A unit nothing else can replace has no outage factors.
                let mut ids: Vec<GenId> = case
                    .generators_in(Area::Studied)
                    .filter(|g| g.p_sched_pu > 0.0 && fleet - g.capacity_pu() > 0.0)
                    .map(|g| g.id)
                    .collect();
                ids.sort();
                ids
            }
            OutageSelection::None => Vec::new(),
            OutageSelection::Only(ids) => ids.iter().map(|i| GenId(*i)).collect(),
        };
        let ggdf = compute_ggdf(case, &ptdf, &gens)?;

        let network = NetworkPtdf::compute(case)?;
        let (candidates, explicit) = match &options.lines {
            OutageSelection::Default => (ptdf.lines.clone(), false),
            OutageSelection::None => (Vec::new(), false),
            OutageSelection::Only(ids) => (ids.iter().map(|i| LineId(*i)).collect(), true),
        };
        let lodf = compute_lodf(case, &network, &ptdf.lines, &candidates)?;
        if explicit {
            if let Some(b) = lodf.bridges.first() {
                return Err(ConstraintError::Bridge(*b).into());
            }
        }
        let gen_block = assemble_generator_outages(case, &view, &ptdf, &ggdf, &limits, &gens, options.rows)?;
        let line_block = assemble_line_outages(&ptdf, &lodf, &limits, &lodf.outages, options.rows)?;
        Ok(FlexibilityModel {
            case: case.clone(),
            case_hash: case_hash(case),
            view,
            ptdf,
            flows,
            limits,
            ggdf,
            lodf,
            nominal,
            gen_block,
            line_block,
        })
    }

    pub fn generator_outages(&self) -> &[GenId] {
        &self.ggdf.outages
    }

    pub fn line_outages(&self) -> &[LineId] {
        &self.lodf.outages
    }

    /// Lines left out of the outage set because their loss islands the network.
    pub fn bridges(&self) -> &[LineId] {
        &self.lodf.bridges
    }

    pub fn block(&self, security: Security) -> ConstraintBlock {
        match security {
            Security::N => self.nominal.clone(),
            Security::N1 => stack_n1(&self.nominal, &self.gen_block, &self.line_block).expect("blocks share columns"),
        }
    }

    /// The set over `(p_i, p_e)` (active) or `p_e` alone (passive, where the
    /// internal columns are dropped and `b` kept).
    pub fn set(&self, approach: Approach, security: Security, tol: f64) -> Result<HPolytope, AnalysisError> {
        let block = self.block(security);
        let violations = block.origin_violations(tol);
        if !violations.is_empty() {
            return Err(AnalysisError::OriginExcluded {
                rows: violations.into_iter().map(|(l, _)| l).collect(),
            });
        }
        Ok(block_to_polytope(&block, &self.view, approach)?)
    }
}

fn block_to_polytope(block: &ConstraintBlock, view: &AreaView, approach: Approach) -> Result<HPolytope, PolytopeError> {
    match approach {
        Approach::Active => {
            let a = (0..block.n_rows()).map(|r| block.row(r)).collect();
            HPolytope::new(view.all_labels(), a, block.b.clone())
        }
        Approach::Passive => {
            let mut p = HPolytope::universe(view.external_labels());
            for r in 0..block.n_rows() {
                let a = block.c_e[r].clone();
                // An internal-only row reduces to 0 <= b, already checked at the origin.
                if a.iter().all(|v| *v == 0.0) {
                    continue;
                }
                p.push_row(a, block.b[r]);
            }
            Ok(p)
        }
    }
}

/// Builds a flexibility set straight from a case.
pub fn build_flexibility_set(case: &NetworkCase, spec: &FlexibilitySpec) -> Result<HPolytope, AnalysisError> {
    let model = FlexibilityModel::new(case, &spec.contingencies)?;
    model.set(spec.approach, spec.security, Tolerances::default().feasibility)
}

/// Projected set over the tie-lines, with the spec that produced it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExternalPolytope {
    pub polytope: HPolytope,
    pub approach: Option<Approach>,
    pub security: Option<Security>,
    pub case_hash: String,
    pub stats: ProjectionStats,
}

/// Projection onto the tie-line labels, checked for origin membership and
/// boundedness.
pub fn export_polytope(
    set: &HPolytope,
    view: &AreaView,
    tol: &Tolerances,
) -> Result<(HPolytope, ProjectionStats), AnalysisError> {
    let keep = view.external_labels();
    let (fe, stats) = project_with_stats(set, &keep, tol)?;
    if !fe.contains_point(&vec![0.0; fe.dim()], tol.feasibility) {
        return Err(AnalysisError::OriginExcluded {
            rows: vec!["projected set".into()],
        });
    }
    if bounding_box(&fe)?.iter().any(|(lo, hi)| !lo.is_finite() || !hi.is_finite()) {
        return Err(PolytopeError::Unbounded.into());
    }
    Ok((fe, stats))
}

impl FlexibilityModel {
    /// Projected tie-line polytope for one approach and security level.
    pub fn external(&self, approach: Approach, security: Security, tol: &Tolerances) -> Result<ExternalPolytope, AnalysisError> {
        let set = self.set(approach, security, tol.feasibility)?;
        let (polytope, stats) = export_polytope(&set, &self.view, tol)?;
        Ok(ExternalPolytope {
            polytope,
            approach: Some(approach),
            security: Some(security),
            case_hash: self.case_hash.clone(),
            stats,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairArea {
    pub x: String,
    pub y: String,
    /// pu².
    pub area: f64,
}

/// Sum of the areas of the projections onto every pair of tie-lines. With
/// a single tie-line the total is the length of its interval.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExportedFlexibilityReport {
    pub pairs: Vec<PairArea>,
    pub total: f64,
}

pub fn exported_flexibility(fe: &HPolytope, tol: &Tolerances) -> Result<ExportedFlexibilityReport, AnalysisError> {
    let labels = fe.labels().to_vec();
    if labels.len() == 1 {
        let (lo, hi) = bounding_box(fe)?[0];
        if !lo.is_finite() || !hi.is_finite() {
            return Err(PolytopeError::Unbounded.into());
        }
        return Ok(ExportedFlexibilityReport {
            pairs: Vec::new(),
            total: hi - lo,
        });
    }
    let pairs: Vec<(usize, usize)> = (0..labels.len())
        .flat_map(|i| ((i + 1)..labels.len()).map(move |j| (i, j)))
        .collect();
    let areas: Vec<PairArea> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let keep = [labels[i].clone(), labels[j].clone()];
            let (q, _) = project_with_stats(fe, &keep, tol)?;
            Ok(PairArea {
                x: keep[0].clone(),
                y: keep[1].clone(),
                area: area_2d(&q)?,
            })
        })
        .collect::<Result<_, PolytopeError>>()?;
    let total = areas.iter().map(|p| p.area).sum();
    Ok(ExportedFlexibilityReport { pairs: areas, total })
}

/// Net-exchange slab intersected with the remaining-capacity box of each tie.
///
/// `atc_ab` bounds the net export of the studied area and `atc_ba` its net
/// import; with `p_e` measured as injections into the studied area this is
/// `-atc_ab <= Σ p_e <= atc_ba`.
pub fn build_atc_polytope(
    view: &AreaView,
    limits: &DeltaLimits,
    atc_ab: f64,
    atc_ba: f64,
) -> Result<HPolytope, AnalysisError> {
    if !(atc_ab >= 0.0) || !(atc_ba >= 0.0) {
        return Err(AnalysisError::Input(format!(
            "transfer capacities must be >= 0, got {atc_ab} and {atc_ba}"
        )));
    }
    let n_i = view.n_internal();
    let n_e = view.n_external();
    let lo: Vec<f64> = limits.source_dn[n_i..].to_vec();
    let hi: Vec<f64> = limits.source_up[n_i..].to_vec();
    let mut p = HPolytope::from_box(view.external_labels(), &lo, &hi)?;
    p.push_row(vec![1.0; n_e], atc_ba);
    p.push_row(vec![-1.0; n_e], atc_ab);
    Ok(p)
}

/// Mutual containment of the active set and the ATC polytope, with a
/// witness in each difference when one exists.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UtilizationComparison {
    pub active_within_atc: bool,
    pub atc_within_active: bool,
    /// A point of the active set outside the ATC polytope.
    pub active_only_witness: Option<Vec<f64>>,
    pub active_only_violation: f64,
    /// A point of the ATC polytope outside the active set.
    pub atc_only_witness: Option<Vec<f64>>,
    pub atc_only_violation: f64,
    pub active_areas: ExportedFlexibilityReport,
    pub atc_areas: ExportedFlexibilityReport,
}

pub fn compare_utilization(
    active: &HPolytope,
    atc: &HPolytope,
    tol: &Tolerances,
) -> Result<UtilizationComparison, AnalysisError> {
    let a_in_atc = contains(atc, active, tol.containment)?;
    let atc_in_a = contains(active, atc, tol.containment)?;
    Ok(UtilizationComparison {
        active_within_atc: a_in_atc.holds,
        atc_within_active: atc_in_a.holds,
        active_only_witness: if a_in_atc.holds { None } else { a_in_atc.witness },
        active_only_violation: a_in_atc.max_violation,
        atc_only_witness: if atc_in_a.holds { None } else { atc_in_a.witness },
        atc_only_violation: atc_in_a.max_violation,
        active_areas: exported_flexibility(active, tol)?,
        atc_areas: exported_flexibility(atc, tol)?,
    })
}
