//! Command-line front end. Every command loads the case, runs one analysis
//! and writes deterministic JSON/CSV artifacts into the output directory.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::flexibility::{
    build_atc_polytope, compare_utilization, exported_flexibility, AnalysisError, Approach, ContingencyOptions,
    ExternalPolytope, FlexibilityModel, OutageSelection, Security,
};
use crate::constraints::OutageRows;
use crate::grid::{load_case, scale_load, with_reserves, Area, AtcLimits, GenId, NetworkCase, ReservePolicy};
use crate::nodal::{nodal_deviation_report, DeviationMode, Import, NeighborOptions};
use crate::polytope::{project, vertices_2d, HPolytope, Tolerances};

/// Environment variable overriding the output directory.
pub const OUT_DIR_ENV: &str = "TIEFLEX_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "tieflex", version, about = "Tie-line flexibility polytopes for two-area DC power systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build one flexibility set and its projection onto the tie-lines.
    Build {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value_t = ApproachArg::Active)]
        approach: ApproachArg,
        #[arg(long, value_enum, default_value_t = SecurityArg::N1)]
        security: SecurityArg,
    },
    /// Exported flexibility of all four sets.
    Metrics {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Compare the active set with the transfer-capacity polytope.
    Atc {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        atc: AtcArgs,
        #[arg(long, value_enum, default_value_t = SecurityArg::N)]
        security: SecurityArg,
    },
    /// Largest deviation each neighbor-area bus can absorb.
    Maxdev {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        atc: AtcArgs,
        /// Neighbor reserve per unit as a fraction of its setpoint; one run per value.
        #[arg(long, value_delimiter = ',', default_value = "0.05,0.25")]
        reserve_pct: Vec<f64>,
        /// Keep neighbor-area lines within limits after neighbor line outages.
        #[arg(long)]
        neighbor_n1: bool,
    },
    /// Vertex CSVs of every tie pair projection and zero slice.
    Plotdata {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Load and check a case, and report its structure.
    Validate {
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Case file (JSON).
    #[arg(long)]
    pub case: PathBuf,
    /// Uniform load scale factor in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Output directory.
    #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
    pub out: PathBuf,
    /// Studied-area reserves: `given`, `full`, `last` (only the highest-id
    /// unit, full range) or a comma-separated list of unit ids.
    #[arg(long, default_value = "given")]
    pub reserves: String,
    /// Generator outages: `default`, `none` or a comma-separated id list.
    #[arg(long, default_value = "default")]
    pub gen_outages: String,
    /// Line outages: `default`, `none` or a comma-separated id list.
    #[arg(long, default_value = "default")]
    pub line_outages: String,
    /// Physical post-contingency rows instead of the published form.
    #[arg(long)]
    pub strict: bool,
    #[arg(long, default_value_t = 1e-8)]
    pub feasibility_tol: f64,
    #[arg(long, default_value_t = 1e-7)]
    pub redundancy_tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub containment_tol: f64,
    /// Largest row count a single elimination step may produce.
    #[arg(long, default_value_t = 200_000)]
    pub row_cap: usize,
}

#[derive(Debug, Clone, Args)]
pub struct AtcArgs {
    /// Transfer capacity from the studied area to its neighbor (pu); defaults to the case value.
    #[arg(long)]
    pub atc_ab: Option<f64>,
    /// Transfer capacity from the neighbor to the studied area (pu); defaults to the case value.
    #[arg(long)]
    pub atc_ba: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ApproachArg {
    Active,
    Passive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SecurityArg {
    N,
    N1,
}

impl From<ApproachArg> for Approach {
    fn from(a: ApproachArg) -> Self {
        match a {
            ApproachArg::Active => Approach::Active,
            ApproachArg::Passive => Approach::Passive,
        }
    }
}

impl From<SecurityArg> for Security {
    fn from(s: SecurityArg) -> Self {
        match s {
            SecurityArg::N => Security::N,
            SecurityArg::N1 => Security::N1,
        }
    }
}

/// Failure of a command, with its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or input files (exit 2).
    Input(String),
    /// The analysis itself failed (exit 1).
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Compute(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Compute(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Grid(_) | AnalysisError::Input(_) => CliError::Input(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Compute(format!("cannot write {}: {e}", path.display()))
}

/// Everything that influences the artifacts, minus the paths.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub scale: f64,
    pub reserves: String,
    pub contingencies: ContingencyOptions,
    pub tolerances: Tolerances,
    pub approach: Option<Approach>,
    pub security: Option<Security>,
    pub atc: Option<AtcLimits>,
    pub reserve_pct: Vec<f64>,
    pub neighbor_n1: bool,
}

impl RunConfig {
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

fn parse_selection(text: &str, what: &str) -> Result<OutageSelection, CliError> {
    match text {
        "default" => Ok(OutageSelection::Default),
        "none" => Ok(OutageSelection::None),
        list => list
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<u32>()
                    .map_err(|_| CliError::Input(format!("bad {what} id `{s}`")))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(OutageSelection::Only),
    }
}

fn tolerances(c: &CommonArgs) -> Result<Tolerances, CliError> {
    for (name, v) in [
        ("feasibility", c.feasibility_tol),
        ("redundancy", c.redundancy_tol),
        ("containment", c.containment_tol),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(CliError::Input(format!("{name} tolerance must be > 0")));
        }
    }
    if c.row_cap == 0 {
        return Err(CliError::Input("row cap must be > 0".into()));
    }
    Ok(Tolerances {
        feasibility: c.feasibility_tol,
        redundancy: c.redundancy_tol,
        containment: c.containment_tol,
        row_cap: c.row_cap,
    })
}

fn base_config(command: &str, c: &CommonArgs) -> Result<RunConfig, CliError> {
    if !(c.scale > 0.0 && c.scale <= 1.0) {
        return Err(CliError::Input(format!("scale must be in (0, 1], got {}", c.scale)));
    }
    Ok(RunConfig {
        command: command.into(),
        scale: c.scale,
        reserves: c.reserves.clone(),
        contingencies: ContingencyOptions {
            generators: parse_selection(&c.gen_outages, "generator")?,
            lines: parse_selection(&c.line_outages, "line")?,
            rows: if c.strict { OutageRows::Strict } else { OutageRows::Verbatim },
        },
        tolerances: tolerances(c)?,
        approach: None,
        security: None,
        atc: None,
        reserve_pct: Vec::new(),
        neighbor_n1: false,
    })
}

/// Case after load scaling and the reserve policy.
pub fn prepare_case(path: &Path, scale: f64, reserves: &str) -> Result<NetworkCase, CliError> {
    let case = load_case(path).map_err(|e| CliError::Input(e.to_string()))?;
    let case = if scale == 1.0 {
        case
    } else {
        scale_load(&case, scale).map_err(|e| CliError::Input(e.to_string()))?
    };
    let policy = match reserves {
        "given" => ReservePolicy::AsGiven,
        "full" => ReservePolicy::FullRange,
        "last" => {
            let last = case
                .generators_in(Area::Studied)
                .map(|g| g.id)
                .max()
                .ok_or_else(|| CliError::Input("studied area has no units".into()))?;
            ReservePolicy::Only(vec![last])
        }
        list => ReservePolicy::Only(
            list.split(',')
                .map(|s| {
                    s.trim()
                        .parse::<u32>()
                        .map(GenId)
                        .map_err(|_| CliError::Input(format!("bad reserve setting `{s}`")))
                })
                .collect::<Result<_, _>>()?,
        ),
    };
    with_reserves(&case, Area::Studied, &policy).map_err(|e| CliError::Input(e.to_string()))
}

fn atc_limits(args: &AtcArgs, case: &NetworkCase) -> Result<AtcLimits, CliError> {
    let ab = args.atc_ab.or(case.atc.map(|a| a.a_to_b_pu));
    let ba = args.atc_ba.or(case.atc.map(|a| a.b_to_a_pu));
    match (ab, ba) {
        (Some(a_to_b_pu), Some(b_to_a_pu)) => Ok(AtcLimits { a_to_b_pu, b_to_a_pu }),
        _ => Err(CliError::Input(
            "transfer capacities missing: pass --atc-ab and --atc-ba or add `atc` to the case".into(),
        )),
    }
}

#[derive(Serialize)]
struct Meta<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    case_hash: &'a str,
    config_hash: &'a str,
}

/// Artifact writer bound to one run.
struct Output<'a> {
    dir: PathBuf,
    command: &'a str,
    case_hash: String,
    config_hash: String,
    written: Vec<PathBuf>,
}

impl<'a> Output<'a> {
    fn new(dir: &Path, command: &'a str, case: &NetworkCase, config: &RunConfig) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        Ok(Output {
            dir: dir.to_path_buf(),
            command,
            case_hash: crate::flexibility::case_hash(case),
            config_hash: config.hash(),
            written: Vec::new(),
        })
    }

    fn meta(&self) -> Meta<'_> {
        Meta {
            tool: "tieflex",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            case_hash: &self.case_hash,
            config_hash: &self.config_hash,
        }
    }

    fn json<T: Serialize>(&mut self, name: &str, body: &T) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct Doc<'m, T> {
            meta: Meta<'m>,
            #[serde(flatten)]
            body: T,
        }
        let doc = Doc {
            meta: self.meta(),
            body,
        };
        let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Compute(e.to_string()))?;
        text.push('\n');
        self.write(name, &text)
    }

    /// CSV preceded by `#` metadata lines.
    fn csv(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let text = format!(
            "# tool=tieflex {}\n# case_hash={}\n# config_hash={}\n{body}",
            env!("CARGO_PKG_VERSION"),
            self.case_hash,
            self.config_hash
        );
        self.write(name, &text)
    }

    fn write(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, text).map_err(|e| io_error(&path, e))?;
        self.written.push(path);
        Ok(())
    }
}

#[derive(Serialize)]
struct PolytopeDoc<'a> {
    approach: Option<Approach>,
    security: Option<Security>,
    labels: &'a [String],
    #[serde(rename = "G")]
    g_matrix: &'a [Vec<f64>],
    g: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    stats: Option<&'a crate::polytope::ProjectionStats>,
}

fn polytope_doc(fe: &ExternalPolytope) -> PolytopeDoc<'_> {
    PolytopeDoc {
        approach: fe.approach,
        security: fe.security,
        labels: fe.polytope.labels(),
        g_matrix: fe.polytope.a(),
        g: fe.polytope.b(),
        stats: Some(&fe.stats),
    }
}

const ALL_SETS: [(Approach, Security); 4] = [
    (Approach::Active, Security::N),
    (Approach::Active, Security::N1),
    (Approach::Passive, Security::N),
    (Approach::Passive, Security::N1),
];

/// Runs one parsed command; returns the text to print on success.
pub fn execute(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Build { common, approach, security } => cmd_build(common, (*approach).into(), (*security).into()),
        Command::Metrics { common } => cmd_metrics(common),
        Command::Atc { common, atc, security } => cmd_atc(common, atc, (*security).into()),
        Command::Maxdev {
            common,
            atc,
            reserve_pct,
            neighbor_n1,
        } => cmd_maxdev(common, atc, reserve_pct, *neighbor_n1),
        Command::Plotdata { common } => cmd_plotdata(common),
        Command::Validate { common } => cmd_validate(common),
    }
}

fn cmd_build(common: &CommonArgs, approach: Approach, security: Security) -> Result<String, CliError> {
    let mut config = base_config("build", common)?;
    config.approach = Some(approach);
    config.security = Some(security);
    let case = prepare_case(&common.case, common.scale, &common.reserves)?;
    let model = FlexibilityModel::new(&case, &config.contingencies)?;
    let set = model.set(approach, security, config.tolerances.feasibility)?;
    let start = Instant::now();
    let fe = model.external(approach, security, &config.tolerances)?;
    let elapsed = start.elapsed();

    let mut out = Output::new(&common.out, "build", &case, &config)?;
    let mut block = model.block(security);
    if approach == Approach::Passive {
        block.c_i = vec![Vec::new(); block.n_rows()];
    }
    #[derive(Serialize)]
    struct SetDoc<'a> {
        approach: Approach,
        security: Security,
        internal_labels: Vec<String>,
        external_labels: Vec<String>,
        #[serde(flatten)]
        block: &'a crate::constraints::ConstraintBlock,
        generator_outages: Vec<u32>,
        line_outages: Vec<u32>,
        excluded_bridges: Vec<u32>,
    }
    let tag = format!("{approach}_{security}");
    out.json(
        &format!("flexibility_set_{tag}.json"),
        &SetDoc {
            approach,
            security,
            internal_labels: if approach == Approach::Active {
                model.view.internal_labels()
            } else {
                Vec::new()
            },
            external_labels: model.view.external_labels(),
            block: &block,
            generator_outages: model.generator_outages().iter().map(|g| g.0).collect(),
            line_outages: model.line_outages().iter().map(|l| l.0).collect(),
            excluded_bridges: model.bridges().iter().map(|l| l.0).collect(),
        },
    )?;
    out.json(&format!("external_{tag}.json"), &polytope_doc(&fe))?;

    let mut s = String::new();
    writeln!(s, "set              {approach}/{security}").ok();
    writeln!(s, "dimensions       {} internal, {} external", model.view.n_internal(), model.view.n_external()).ok();
    writeln!(s, "rows assembled   {}", set.n_rows()).ok();
    writeln!(s, "rows after prune {}", fe.stats.rows_after_first_prune).ok();
    writeln!(s, "peak rows        {}", fe.stats.peak_rows).ok();
    writeln!(s, "rows projected   {}", fe.polytope.n_rows()).ok();
    writeln!(s, "projection time  {:.3} s", elapsed.as_secs_f64()).ok();
    append_written(&mut s, &out);
    Ok(s)
}

fn append_written(s: &mut String, out: &Output<'_>) {
    for p in &out.written {
        writeln!(s, "wrote {}", p.display()).ok();
    }
}

fn cmd_metrics(common: &CommonArgs) -> Result<String, CliError> {
    let config = base_config("metrics", common)?;
    let case = prepare_case(&common.case, common.scale, &common.reserves)?;
    let model = FlexibilityModel::new(&case, &config.contingencies)?;
    #[derive(Serialize)]
    struct Entry {
        approach: Approach,
        security: Security,
        total: f64,
        pairs: Vec<crate::flexibility::PairArea>,
    }
    let mut entries = Vec::new();
    for (a, s) in ALL_SETS {
        let fe = model.external(a, s, &config.tolerances)?;
        let report = exported_flexibility(&fe.polytope, &config.tolerances)?;
        entries.push(Entry {
            approach: a,
            security: s,
            total: report.total,
            pairs: report.pairs,
        });
    }
    let mut out = Output::new(&common.out, "metrics", &case, &config)?;
    #[derive(Serialize)]
    struct Doc<'a> {
        scale: f64,
        exported_flexibility: &'a [Entry],
    }
    out.json(
        "metrics.json",
        &Doc {
            scale: common.scale,
            exported_flexibility: &entries,
        },
    )?;
    let mut csv = String::from("scale,approach,security,total\n");
    for e in &entries {
        writeln!(csv, "{},{},{},{}", common.scale, e.approach, e.security, e.total).ok();
    }
    out.csv("exported_flexibility.csv", &csv)?;

    let mut s = format!("{:<10} {:<8} {:>12}\n", "approach", "security", "total (pu^2)");
    for e in &entries {
        writeln!(s, "{:<10} {:<8} {:>12.4}", e.approach, e.security, e.total).ok();
    }
    append_written(&mut s, &out);
    Ok(s)
}

fn cmd_atc(common: &CommonArgs, atc: &AtcArgs, security: Security) -> Result<String, CliError> {
    let mut config = base_config("atc", common)?;
    let case = prepare_case(&common.case, common.scale, &common.reserves)?;
    let limits = atc_limits(atc, &case)?;
    config.atc = Some(limits);
    config.security = Some(security);
    let model = FlexibilityModel::new(&case, &config.contingencies)?;
    let active = model.external(Approach::Active, security, &config.tolerances)?;
    let atc_p = build_atc_polytope(&model.view, &model.limits, limits.a_to_b_pu, limits.b_to_a_pu)?;
    let cmp = compare_utilization(&active.polytope, &atc_p, &config.tolerances)?;

    let mut out = Output::new(&common.out, "atc", &case, &config)?;
    #[derive(Serialize)]
    struct Doc<'a> {
        atc: AtcLimits,
        security: Security,
        active: PolytopeDoc<'a>,
        atc_polytope: PolytopeDoc<'a>,
        comparison: &'a crate::flexibility::UtilizationComparison,
    }
    out.json(
        "atc_comparison.json",
        &Doc {
            atc: limits,
            security,
            active: polytope_doc(&active),
            atc_polytope: PolytopeDoc {
                approach: None,
                security: None,
                labels: atc_p.labels(),
                g_matrix: atc_p.a(),
                g: atc_p.b(),
                stats: None,
            },
            comparison: &cmp,
        },
    )?;
    let mut s = String::new();
    writeln!(s, "active within ATC   {}", cmp.active_within_atc).ok();
    writeln!(s, "ATC within active   {}", cmp.atc_within_active).ok();
    if let Some(w) = &cmp.active_only_witness {
        writeln!(s, "active-only point   {w:?}").ok();
    }
    if let Some(w) = &cmp.atc_only_witness {
        writeln!(s, "ATC-only point      {w:?}").ok();
    }
    writeln!(s, "exported (active)   {:.4}", cmp.active_areas.total).ok();
    writeln!(s, "exported (ATC)      {:.4}", cmp.atc_areas.total).ok();
    append_written(&mut s, &out);
    Ok(s)
}

fn cmd_maxdev(common: &CommonArgs, atc: &AtcArgs, pcts: &[f64], neighbor_n1: bool) -> Result<String, CliError> {
    let mut config = base_config("maxdev", common)?;
    let case = prepare_case(&common.case, common.scale, &common.reserves)?;
    let limits = atc_limits(atc, &case)?;
    config.atc = Some(limits);
    config.reserve_pct = pcts.to_vec();
    config.neighbor_n1 = neighbor_n1;
    if pcts.is_empty() {
        return Err(CliError::Input("at least one reserve percentage is required".into()));
    }
    let model = FlexibilityModel::new(&case, &config.contingencies)?;
    let passive = model.external(Approach::Passive, Security::N, &config.tolerances)?;
    let active = model.external(Approach::Active, Security::N, &config.tolerances)?;
    let atc_p = build_atc_polytope(&model.view, &model.limits, limits.a_to_b_pu, limits.b_to_a_pu)?;
    let imports = [
        (DeviationMode::Passive, Import::Polytope(&passive.polytope)),
        (DeviationMode::Active, Import::Polytope(&active.polytope)),
        (DeviationMode::Atc, Import::Atc(&atc_p)),
    ];
    let mut csv = String::from("reserve_pct,bus,mode,up,dn\n");
    let mut reports = Vec::new();
    for &pct in pcts {
        let options = NeighborOptions {
            reserve_pct: pct,
            n1: neighbor_n1,
        };
        let report = nodal_deviation_report(&case, &options, &imports)?;
        for b in &report.bounds {
            writeln!(csv, "{pct},{},{},{},{}", b.bus, b.mode, b.up, b.dn).ok();
        }
        reports.push(report);
    }
    let mut out = Output::new(&common.out, "maxdev", &case, &config)?;
    out.csv("max_deviation.csv", &csv)?;
    #[derive(Serialize)]
    struct Doc<'a> {
        reports: &'a [crate::nodal::NodalDeviationReport],
    }
    out.json("max_deviation.json", &Doc { reports: &reports })?;
    let mut s = format!("{:<6} {:<8} {:>8} {:>8}\n", "bus", "mode", "up", "dn");
    for r in &reports {
        writeln!(s, "reserve {:.0}%", r.reserve_pct * 100.0).ok();
        for b in &r.bounds {
            writeln!(s, "{:<6} {:<8} {:>8.3} {:>8.3}", b.bus.0, b.mode, b.up, b.dn).ok();
        }
    }
    append_written(&mut s, &out);
    Ok(s)
}

/// The 2-D cut of `p` through zero in every coordinate except `x` and `y`.
fn zero_slice(p: &HPolytope, x: usize, y: usize) -> Result<HPolytope, CliError> {
    let labels = vec![p.labels()[x].clone(), p.labels()[y].clone()];
    let a = p.a().iter().map(|r| vec![r[x], r[y]]).collect();
    HPolytope::new(labels, a, p.b().to_vec()).map_err(|e| CliError::Compute(e.to_string()))
}

fn cmd_plotdata(common: &CommonArgs) -> Result<String, CliError> {
    let config = base_config("plotdata", common)?;
    let case = prepare_case(&common.case, common.scale, &common.reserves)?;
    let model = FlexibilityModel::new(&case, &config.contingencies)?;
    let mut out = Output::new(&common.out, "plotdata", &case, &config)?;
    let labels = model.view.external_labels();
    for (a, s) in ALL_SETS {
        let fe = model.external(a, s, &config.tolerances)?;
        let p = &fe.polytope;
        for i in 0..labels.len() {
            for j in (i + 1)..labels.len() {
                let tag = format!("{a}_{s}_{}_{}", labels[i], labels[j]);
                let pair = project(p, &[labels[i].clone(), labels[j].clone()], &config.tolerances)
                    .map_err(|e| CliError::Compute(e.to_string()))?;
                let v = vertices_2d(&pair).map_err(|e| CliError::Compute(e.to_string()))?;
                out.csv(&format!("pair_{tag}.csv"), &v.to_csv())?;
                if labels.len() > 2 {
                    let cut = zero_slice(p, i, j)?;
                    let v = vertices_2d(&cut).map_err(|e| CliError::Compute(e.to_string()))?;
                    out.csv(&format!("slice_{tag}.csv"), &v.to_csv())?;
                }
            }
        }
    }
    let mut s = String::new();
    append_written(&mut s, &out);
    Ok(s)
}

fn cmd_validate(common: &CommonArgs) -> Result<String, CliError> {
    let config = base_config("validate", common)?;
    let case = prepare_case(&common.case, common.scale, &common.reserves)?;
    let model = FlexibilityModel::new(&case, &config.contingencies)?;
    let mut s = String::new();
    writeln!(s, "case             {}", if case.name.is_empty() { "-" } else { &case.name }).ok();
    writeln!(s, "buses            {}", case.buses.len()).ok();
    writeln!(s, "lines            {}", case.lines.len()).ok();
    writeln!(s, "tie-lines        {}", model.view.n_external()).ok();
    writeln!(s, "units in service {}", case.generators.len()).ok();
    writeln!(s, "total load       {:.4} pu", case.total_load()).ok();
    writeln!(s, "internal sources {}", model.view.n_internal()).ok();
    writeln!(s, "generator outages {}", model.generator_outages().len()).ok();
    writeln!(s, "line outages     {}", model.line_outages().len()).ok();
    let bridges: Vec<String> = model.bridges().iter().map(|l| l.to_string()).collect();
    writeln!(s, "bridges excluded {}", if bridges.is_empty() { "-".into() } else { bridges.join(",") }).ok();
    for security in [Security::N, Security::N1] {
        let bad = model.block(security).origin_violations(config.tolerances.feasibility);
        writeln!(
            s,
            "schedule feasible ({security}) {}",
            if bad.is_empty() { "yes".to_string() } else { format!("no ({} rows)", bad.len()) }
        )
        .ok();
    }
    writeln!(s, "case hash        {}", model.case_hash).ok();
    Ok(s)
}

/// Parses `args` and runs the command. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selections_parse() {
        assert_eq!(parse_selection("default", "x").unwrap(), OutageSelection::Default);
        assert_eq!(parse_selection("none", "x").unwrap(), OutageSelection::None);
        assert_eq!(parse_selection("3, 5", "x").unwrap(), OutageSelection::Only(vec![3, 5]));
        assert!(parse_selection("3,x", "x").is_err());
    }

    #[test]
    fn config_hash_tracks_settings() {
        let cli = Cli::try_parse_from(["tieflex", "metrics", "--case", "c.json"]).unwrap();
        let Command::Metrics { common } = &cli.command else { panic!() };
        let a = base_config("metrics", common).unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.scale = 0.7;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn bad_scale_is_input_error() {
        let cli = Cli::try_parse_from(["tieflex", "metrics", "--case", "c.json", "--scale", "1.5"]).unwrap();
        let Command::Metrics { common } = &cli.command else { panic!() };
        assert_eq!(base_config("metrics", common).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn unknown_flag_exits_two() {
        assert_eq!(run(["tieflex", "build", "--nope"]), 2);
    }
}
