//! Deviation limits and the stacked inequality blocks `C_i p_i + C_e p_e <= b`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Area, AreaView, GenId, LineId, NetworkCase};
use crate::sensitivity::{GgdfMatrix, LodfMatrix, PtdfMatrix, ScheduledFlows};

/// Coefficients below this magnitude are stored as exact zeros.
pub const COEF_ZERO_TOL: f64 = 1e-10;
/// Slack when checking scheduled flows against their limits.
const LIMIT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ConstraintError {
    #[error("scheduled flow {flow:.6} pu on line {line} exceeds its limit {limit:.6} pu")]
    LimitExceeded { line: LineId, flow: f64, limit: f64 },
    #[error("line {0} has no scheduled flow")]
    MissingFlow(LineId),
    #[error("generator {0} is not a generator of the studied area")]
    NotAreaGenerator(GenId),
    #[error("generator {0} has no outage factors")]
    MissingGgdf(GenId),
    #[error("line {0} is not a line of the studied area")]
    NotAreaLine(LineId),
    #[error("line {0} is a bridge; its outage islands the network")]
    Bridge(LineId),
    #[error("column mismatch: {left:?} vs {right:?}")]
    Dimension { left: (usize, usize), right: (usize, usize) },
}

/// Deviation bounds around the schedule.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaLimits {
    /// Same order as the PTDF rows.
    pub lines: Vec<LineId>,
    pub sched_flow: Vec<f64>,
    pub line_up: Vec<f64>,
    pub line_dn: Vec<f64>,
    /// Internal then external sources.
    pub source_labels: Vec<String>,
    pub source_up: Vec<f64>,
    pub source_dn: Vec<f64>,
}

/// `up = limit - sched`, `dn = -limit - sched` per line; reserve bands per
/// internal source; remaining tie capacity, in injection orientation, per
/// external source.
pub fn compute_delta_limits(
    case: &NetworkCase,
    view: &AreaView,
    ptdf: &PtdfMatrix,
    flows: &ScheduledFlows,
) -> Result<DeltaLimits, ConstraintError> {
    let mut sched_flow = Vec::with_capacity(ptdf.lines.len());
    let mut line_up = Vec::with_capacity(ptdf.lines.len());
    let mut line_dn = Vec::with_capacity(ptdf.lines.len());
    for &id in &ptdf.lines {
        let line = case.line(id).ok_or(ConstraintError::NotAreaLine(id))?;
        let flow = flows.flow(id).ok_or(ConstraintError::MissingFlow(id))?;
        let limit = line.flow_limit_pu;
        if flow.abs() > limit + LIMIT_TOL {
            return Err(ConstraintError::LimitExceeded { line: id, flow, limit });
        }
        sched_flow.push(flow);
        line_up.push((limit - flow).max(0.0));
        line_dn.push((-limit - flow).min(0.0));
    }
    let mut source_up: Vec<f64> = view.internal_sources.iter().map(|s| s.res_up_pu).collect();
    let mut source_dn: Vec<f64> = view.internal_sources.iter().map(|s| -s.res_dn_pu).collect();
    for tie in &view.ties {
        let r = ptdf.row_of(tie.line).expect("tie row");
        if tie.orientation > 0.0 {
            source_up.push(line_up[r]);
            source_dn.push(line_dn[r]);
        } else {
            source_up.push(-line_dn[r]);
            source_dn.push(-line_up[r]);
        }
    }
    Ok(DeltaLimits {
        lines: ptdf.lines.clone(),
        sched_flow,
        line_up,
        line_dn,
        source_labels: view.all_labels(),
        source_up,
        source_dn,
    })
}

/// Labeled inequality rows over `(p_i, p_e)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintBlock {
    #[serde(rename = "C_i")]
    pub c_i: Vec<Vec<f64>>,
    #[serde(rename = "C_e")]
    pub c_e: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub labels: Vec<String>,
    #[serde(skip)]
    n_i: usize,
    #[serde(skip)]
    n_e: usize,
}

impl ConstraintBlock {
    pub fn empty(n_i: usize, n_e: usize) -> Self {
        ConstraintBlock {
            c_i: Vec::new(),
            c_e: Vec::new(),
            b: Vec::new(),
            labels: Vec::new(),
            n_i,
            n_e,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.b.len()
    }

    pub fn n_internal(&self) -> usize {
        self.n_i
    }

    pub fn n_external(&self) -> usize {
        self.n_e
    }

    /// Adds a row over the concatenated `(p_i, p_e)` coefficients. Tiny
    /// coefficients are zeroed; an all-zero row with `b >= 0` is dropped.
    pub fn push(&mut self, label: String, coefs: &[f64], b: f64) {
        debug_assert_eq!(coefs.len(), self.n_i + self.n_e);
        let clean: Vec<f64> = coefs
            .iter()
            .map(|&c| if c.abs() < COEF_ZERO_TOL { 0.0 } else { c })
            .collect();
        if clean.iter().all(|&c| c == 0.0) && b >= 0.0 {
            return;
        }
        self.c_i.push(clean[..self.n_i].to_vec());
        self.c_e.push(clean[self.n_i..].to_vec());
        self.b.push(b);
        self.labels.push(label);
    }

    /// Row `r` over the concatenated `(p_i, p_e)`.
    pub fn row(&self, r: usize) -> Vec<f64> {
        let mut a = self.c_i[r].clone();
        a.extend_from_slice(&self.c_e[r]);
        a
    }

    pub fn append(&mut self, other: &ConstraintBlock) -> Result<(), ConstraintError> {
        if (self.n_i, self.n_e) != (other.n_i, other.n_e) {
            return Err(ConstraintError::Dimension {
                left: (self.n_i, self.n_e),
                right: (other.n_i, other.n_e),
            });
        }
        self.c_i.extend(other.c_i.iter().cloned());
        self.c_e.extend(other.c_e.iter().cloned());
        self.b.extend_from_slice(&other.b);
        self.labels.extend(other.labels.iter().cloned());
        Ok(())
    }

    /// Labels of rows the zero deviation violates, i.e. with `b < -tol`.
    pub fn origin_violations(&self, tol: f64) -> Vec<(String, f64)> {
        self.b
            .iter()
            .zip(&self.labels)
            .filter(|(b, _)| **b < -tol)
            .map(|(b, l)| (l.clone(), *b))
            .collect()
    }

    /// Restores the column counts after deserialization.
    pub fn with_dims(mut self, n_i: usize, n_e: usize) -> Self {
        self.n_i = n_i;
        self.n_e = n_e;
        self
    }
}

fn h_row(ptdf: &PtdfMatrix, r: usize) -> Vec<f64> {
    ptdf.h.row(r).iter().copied().collect()
}

fn neg(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| -x).collect()
}

/// Nominal rows in the order: +line, −line, +source, −source, +balance, −balance.
pub fn assemble_nominal(ptdf: &PtdfMatrix, limits: &DeltaLimits) -> ConstraintBlock {
    let (n_i, n_e) = (ptdf.n_internal, ptdf.n_external());
    let n = n_i + n_e;
    let mut block = ConstraintBlock::empty(n_i, n_e);
    for (r, line) in ptdf.lines.iter().enumerate() {
        block.push(format!("line_up:{line}"), &h_row(ptdf, r), limits.line_up[r]);
    }
    for (r, line) in ptdf.lines.iter().enumerate() {
        block.push(format!("line_dn:{line}"), &neg(&h_row(ptdf, r)), -limits.line_dn[r]);
    }
    for s in 0..n {
        let mut a = vec![0.0; n];
        a[s] = 1.0;
        block.push(format!("src_up:{}", limits.source_labels[s]), &a, limits.source_up[s]);
    }
    for s in 0..n {
        let mut a = vec![0.0; n];
        a[s] = -1.0;
        block.push(format!("src_dn:{}", limits.source_labels[s]), &a, -limits.source_dn[s]);
    }
    block.push("balance_up".into(), &vec![1.0; n], 0.0);
    block.push("balance_dn".into(), &vec![-1.0; n], 0.0);
    block
}

/// How contingency rows are formed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutageRows {
    /// Exactly the published stacked form: both bands shifted by `-δ`.
    #[default]
    Verbatim,
    /// Physical post-contingency flow: the lower band is shifted by `+δ`
    /// and line-outage rows include the direct `H p` term.
    Strict,
}

/// Generator outage rows, ascending generator id within `outages` order.
pub fn assemble_generator_outages(
    case: &NetworkCase,
    view: &AreaView,
    ptdf: &PtdfMatrix,
    ggdf: &GgdfMatrix,
    limits: &DeltaLimits,
    outages: &[GenId],
    mode: OutageRows,
) -> Result<ConstraintBlock, ConstraintError> {
    let (n_i, n_e) = (ptdf.n_internal, ptdf.n_external());
    let mut block = ConstraintBlock::empty(n_i, n_e);
    for &k in outages {
        let gen = case
            .generator(k)
            .filter(|g| case.area_of(g.bus) == Some(Area::Studied))
            .ok_or(ConstraintError::NotAreaGenerator(k))?;
        let c = ggdf.column_of(k).ok_or(ConstraintError::MissingGgdf(k))?;
        // A unit whose bus offers no reserve has no deviation variable.
        let source = view.source_index_of_bus(gen.bus);
        for sign in [1.0, -1.0] {
            for (r, line) in ptdf.lines.iter().enumerate() {
                let g = ggdf.g[(r, c)];
                let mut q = h_row(ptdf, r);
                if let Some(s) = source {
                    q[s] += g;
                }
                let delta = g * gen.p_sched_pu;
                let (label, a, b) = if sign > 0.0 {
                    ("line_up", q, limits.line_up[r] - delta)
                } else {
                    let shift = match mode {
                        OutageRows::Verbatim => -delta,
                        OutageRows::Strict => delta,
                    };
                    ("line_dn", neg(&q), -limits.line_dn[r] + shift)
                };
                block.push(format!("gen_out:{k}/{label}:{line}"), &a, b);
            }
        }
    }
    Ok(block)
}

/// Line outage rows for each `j` in `outages`, over the surviving rows.
pub fn assemble_line_outages(
    ptdf: &PtdfMatrix,
    lodf: &LodfMatrix,
    limits: &DeltaLimits,
    outages: &[LineId],
    mode: OutageRows,
) -> Result<ConstraintBlock, ConstraintError> {
    let (n_i, n_e) = (ptdf.n_internal, ptdf.n_external());
    let mut block = ConstraintBlock::empty(n_i, n_e);
    for &j in outages {
        if lodf.bridges.contains(&j) {
            return Err(ConstraintError::Bridge(j));
        }
        let jr = ptdf.row_of(j).ok_or(ConstraintError::NotAreaLine(j))?;
        let c = lodf.column_of(j).ok_or(ConstraintError::NotAreaLine(j))?;
        let hj = h_row(ptdf, jr);
        let pj = limits.sched_flow[jr];
        for sign in [1.0, -1.0] {
            for (r, line) in ptdf.lines.iter().enumerate() {
                if r == jr {
                    continue;
                }
                let lr = lodf.l[(lodf.lines.iter().position(|l| l == line).expect("lodf row"), c)];
                let mut a: Vec<f64> = hj.iter().map(|h| lr * h).collect();
                if mode == OutageRows::Strict {
                    for (ai, hi) in a.iter_mut().zip(ptdf.h.row(r).iter()) {
                        *ai += hi;
                    }
                }
                let delta = lr * pj;
                let (label, a, b) = if sign > 0.0 {
                    ("line_up", a, limits.line_up[r] - delta)
                } else {
                    let shift = match mode {
                        OutageRows::Verbatim => -delta,
                        OutageRows::Strict => delta,
                    };
                    ("line_dn", neg(&a), -limits.line_dn[r] + shift)
                };
                block.push(format!("line_out:{j}/{label}:{line}"), &a, b);
            }
        }
    }
    Ok(block)
}

/// Nominal rows, then generator outages, then line outages.
pub fn stack_n1(
    nominal: &ConstraintBlock,
    gen_block: &ConstraintBlock,
    line_block: &ConstraintBlock,
) -> Result<ConstraintBlock, ConstraintError> {
    let mut out = nominal.clone();
    out.append(gen_block)?;
    out.append(line_block)?;
    Ok(out)
}
