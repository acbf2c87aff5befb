mod io;

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use jointida::graph::text::{write_pdag, GraphDocument};
use jointida::learn::{pc_cpdag, CiTestConfig, DEFAULT_ALPHA};
use jointida::opin::{asymptotic_variance, EffectReport};
use jointida::parentsets::{jointly_valid_parent_sets, ParentMultiset, DEFAULT_MAX_ENUM};
use jointida::pipeline::{
    effects_from_parent_sets, epistasis, estimate_covariance, joint_ida, CorrKind, JointIdaConfig, JointIdaReport,
};
use jointida::sem::{npn_sample, random_sem, sample, true_covariance, NpnModel, Transform};
use jointida::validate::{run_suite, Suite};
use jointida::{EffectMultiset, LinearSem, Method, ParentAssignment, Pdag};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or malformed inputs.
    Config(String),
    /// A computation failed on valid input.
    Numerical { stage: &'static str, source: jointida::Error },
    /// The validate suite reported failures.
    Validation(usize),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Validation(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical { stage, source } => write!(f, "numerical failure in stage `{stage}`: {source}"),
            CliError::Validation(n) => write!(f, "{n} validation check(s) failed"),
        }
    }
}

/// Library errors at `stage`: numerical ones exit 3, the rest are input problems.
fn at(stage: &'static str) -> impl Fn(jointida::Error) -> CliError {
    move |e| {
        if e.is_numerical() {
            CliError::Numerical { stage, source: e }
        } else {
            CliError::Config(format!("{stage}: {e}"))
        }
    }
}

#[derive(Parser)]
#[command(name = "jointida", version, about = "Joint intervention effects from observational data")]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output format for result documents.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Tsv,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random or given SEM and sample data from it.
    Simulate(SimulateArgs),
    /// Learn a CPDAG with the PC algorithm.
    Learn(LearnArgs),
    /// Estimate joint effects for given parent sets or a given graph.
    Effects(EffectsArgs),
    /// Learn the CPDAG, then estimate the multiset of joint effects.
    Jointida(JointidaArgs),
    /// Run the built-in checks and print a pass/fail table.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// SEM in graph text format; a random Gaussian SEM is drawn if absent.
    #[arg(long, conflicts_with = "nodes")]
    sem: Option<PathBuf>,
    /// Number of nodes of the random SEM.
    #[arg(long, default_value_t = 10)]
    nodes: usize,
    /// Expected node degree of the random SEM.
    #[arg(long, default_value_t = 2.0)]
    degree: f64,
    /// Number of observations.
    #[arg(short, long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Comma-separated marginal transforms (identity, cubic, exp, logistic),
    /// cycled over the columns of the standardized SEM.
    #[arg(long, value_delimiter = ',')]
    transforms: Vec<String>,
    /// Where to write the SEM.
    #[arg(long)]
    sem_out: Option<PathBuf>,
    /// Where to write the CSV data (stdout by default).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct CiArgs {
    /// Significance level of the conditional independence tests.
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    /// Largest conditioning set tried by PC.
    #[arg(long)]
    max_condition_size: Option<usize>,
    /// Correlation used for learning and estimation.
    #[arg(long, default_value = "pearson")]
    corr_kind: CorrKind,
}

impl CiArgs {
    fn config(&self) -> Result<CiTestConfig, CliError> {
        let cfg = CiTestConfig::new(self.alpha).map_err(|e| CliError::config(e.to_string()))?;
        Ok(match self.max_condition_size {
            Some(m) => cfg.with_max_condition_size(m),
            None => cfg,
        })
    }
}

#[derive(Args)]
struct LearnArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    ci: CiArgs,
    /// Where to write the CPDAG (stdout by default, metadata then goes to stderr).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct Query {
    /// Comma-separated intervention nodes.
    #[arg(long, value_delimiter = ',', required = true)]
    targets: Vec<usize>,
    #[arg(long)]
    response: usize,
    #[arg(long, default_value = "rrc")]
    method: Method,
    /// Largest undirected component enumerated exactly.
    #[arg(long, default_value_t = DEFAULT_MAX_ENUM)]
    max_enum: usize,
}

impl Query {
    fn check(&self) -> Result<(), CliError> {
        let distinct: BTreeSet<usize> = self.targets.iter().copied().collect();
        if distinct.len() != self.targets.len() {
            return Err(CliError::config("targets must be distinct"));
        }
        if distinct.contains(&self.response) {
            return Err(CliError::config(format!("response {} is also a target", self.response)));
        }
        Ok(())
    }
}

#[derive(Args)]
struct EffectsArgs {
    #[command(flatten)]
    query: Query,
    /// DAG, weighted DAG, SEM or CPDAG in graph text format.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// `true` for the exact covariance of the SEM in --graph, otherwise a CSV covariance matrix.
    #[arg(long, conflicts_with = "data")]
    cov: Option<String>,
    /// Observations to estimate the covariance from.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Parent sets per target, `;`-separated lists, e.g. `5;3,4` (empty entries allowed).
    #[arg(long, allow_hyphen_values = true)]
    parents: Option<String>,
    /// Correlation used with --data.
    #[arg(long, default_value = "pearson")]
    corr_kind: CorrKind,
    /// Add the delta-method limit covariance (needs --data and a single parent tuple).
    #[arg(long)]
    variance: bool,
}

#[derive(Args)]
struct JointidaArgs {
    #[command(flatten)]
    query: Query,
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    ci: CiArgs,
    /// Known CPDAG; skips structure learning.
    #[arg(long)]
    cpdag: Option<PathBuf>,
    /// Also write the CPDAG used here.
    #[arg(long)]
    graph_out: Option<PathBuf>,
    /// Report the interaction (joint minus single effects) of two targets instead.
    #[arg(long)]
    epistasis: bool,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, default_value = "paper-examples")]
    suite: Suite,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("configuration error: --threads: {e}");
            return ExitCode::from(2);
        }
    }
    let format = cli.format;
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Learn(a) => learn(a),
        Command::Effects(a) => effects(a, format.unwrap_or(Format::Json)),
        Command::Jointida(a) => jointida(a, format.unwrap_or(Format::Json)),
        Command::Validate(a) => validate(a, format),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn parse_transform(name: &str) -> Result<Transform, CliError> {
    match name {
        "identity" => Ok(Transform::Identity),
        "cubic" => Ok(Transform::Cubic),
        "exp" => Ok(Transform::Exp),
        "logistic" => Ok(Transform::Logistic),
        _ => Err(CliError::config(format!("unknown transform `{name}`"))),
    }
}

fn read_sem(path: &Path) -> Result<LinearSem, CliError> {
    LinearSem::parse(&io::read_text(path)?).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    if a.n < 2 {
        return Err(CliError::config("need at least 2 observations"));
    }
    let sem = match &a.sem {
        Some(path) => read_sem(path)?,
        None => {
            if a.nodes == 0 || !(a.degree >= 0.0) {
                return Err(CliError::config("--nodes must be positive and --degree non-negative"));
            }
            random_sem(a.nodes, a.degree, &mut ChaCha8Rng::seed_from_u64(a.seed))
        }
    };
    let data = if a.transforms.is_empty() {
        sample(&sem, a.n, a.seed)
    } else {
        let named = a.transforms.iter().map(|t| parse_transform(t)).collect::<Result<Vec<_>, _>>()?;
        let transforms = (0..sem.num_nodes()).map(|j| named[j % named.len()].clone()).collect();
        let model = NpnModel::from_sem(&sem, transforms).map_err(at("simulate"))?;
        npn_sample(&model, a.n, a.seed)
    };
    if let Some(path) = &a.sem_out {
        io::write_text(Some(path), &sem.to_text())?;
    }
    io::write_text(a.out.as_deref(), &io::csv_text(&data))
}

#[derive(Serialize)]
struct LearnMetadata {
    alpha: f64,
    n: usize,
    test: &'static str,
    corr_kind: CorrKind,
    clipped: bool,
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

fn learn(a: LearnArgs) -> Result<(), CliError> {
    let ci = a.ci.config()?;
    let data = io::read_csv(&a.data)?;
    let (cov, clipped) = estimate_covariance(&data, a.ci.corr_kind).map_err(at("covariance"))?;
    let cpdag = pc_cpdag(&cov, data.nrows(), &ci).map_err(at("learn"))?;
    let meta = to_json(&LearnMetadata { alpha: ci.alpha, n: data.nrows(), test: "fisher-z", corr_kind: a.ci.corr_kind, clipped });
    io::write_text(a.out.as_deref(), &write_pdag(&cpdag))?;
    if a.out.is_some() {
        io::write_text(None, &meta)
    } else {
        eprint!("{meta}");
        Ok(())
    }
}

fn parse_parents(text: &str, targets: &[usize]) -> Result<Vec<BTreeSet<usize>>, CliError> {
    let groups: Vec<&str> = text.split(';').collect();
    if groups.len() != targets.len() {
        return Err(CliError::config(format!("--parents has {} groups for {} targets", groups.len(), targets.len())));
    }
    groups
        .iter()
        .map(|g| {
            g.split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty() && *t != "-")
                .map(|t| t.parse().map_err(|_| CliError::config(format!("bad parent `{t}`"))))
                .collect()
        })
        .collect()
}

enum Parents {
    Single(ParentAssignment),
    Multiset(ParentMultiset),
}

fn effects(a: EffectsArgs, format: Format) -> Result<(), CliError> {
    let q = &a.query;
    q.check()?;
    let doc = match &a.graph {
        Some(path) => Some(GraphDocument::parse(&io::read_text(path)?).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?),
        None => None,
    };
    let (cov, data) = match (&a.cov, &a.data) {
        (Some(c), _) if c == "true" => {
            let path = a.graph.as_deref().ok_or_else(|| CliError::config("--cov true needs --graph"))?;
            (true_covariance(&read_sem(path)?), None)
        }
        (Some(c), _) => (io::read_cov_csv(Path::new(c))?, None),
        (None, Some(d)) => {
            let x = io::read_csv(d)?;
            (estimate_covariance(&x, a.corr_kind).map_err(at("covariance"))?.0, Some(x))
        }
        (None, None) => return Err(CliError::config("one of --cov or --data is required")),
    };
    let parents = match (&a.parents, &doc) {
        (Some(text), _) => Parents::Single(
            ParentAssignment::new(q.targets.clone(), parse_parents(text, &q.targets)?).map_err(at("parents"))?,
        ),
        (None, Some(doc)) => {
            let g = doc.to_pdag().map_err(|e| CliError::config(e.to_string()))?;
            if g.is_fully_directed() {
                let sets = q.targets.iter().map(|&t| g.parents(t)).collect::<Result<_, _>>().map_err(at("parents"))?;
                Parents::Single(ParentAssignment::new(q.targets.clone(), sets).map_err(at("parents"))?)
            } else {
                Parents::Multiset(jointly_valid_parent_sets(&g, &q.targets, q.max_enum).map_err(at("parent-sets"))?)
            }
        }
        (None, None) => return Err(CliError::config("one of --parents or --graph is required")),
    };
    match parents {
        Parents::Single(pa) => {
            let effect = q.method.effect(&cov, &pa, q.response).map_err(at("effects"))?;
            let mut report = EffectReport::new(&effect, q.method, &pa);
            if a.variance {
                let x = data.as_ref().ok_or_else(|| CliError::config("--variance needs --data"))?;
                report = report.with_variance(&asymptotic_variance(x, q.method, &pa, q.response).map_err(at("variance"))?);
            }
            io::write_text(None, &match format {
                Format::Json => to_json(&report),
                Format::Tsv => effect_tsv(&report),
            })
        }
        Parents::Multiset(pm) => {
            if a.variance {
                return Err(CliError::config("--variance needs a single parent tuple"));
            }
            let m = effects_from_parent_sets(&cov, &pm, q.response, q.method).map_err(at("effects"))?;
            let cfg = JointIdaConfig { method: q.method, corr_kind: a.corr_kind, max_enum: q.max_enum, ..Default::default() };
            emit_report(&m, &cfg, None, format)
        }
    }
}

fn emit_report(m: &EffectMultiset, cfg: &JointIdaConfig, graph_ref: Option<String>, format: Format) -> Result<(), CliError> {
    let report = JointIdaReport::new(m, cfg, graph_ref).map_err(at("summaries"))?;
    io::write_text(None, &match format {
        Format::Json => to_json(&report),
        Format::Tsv => report_tsv(&report),
    })
}

fn join<T: ToString>(xs: impl IntoIterator<Item = T>, sep: &str) -> String {
    xs.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

fn parent_cell(sets: &[Vec<usize>]) -> String {
    join(sets.iter().map(|s| format!("{{{}}}", join(s, ","))), ";")
}

fn effect_tsv(r: &EffectReport) -> String {
    let mut s = format!("target\tresponse\t{}\tparents\n", r.method);
    for (k, t) in r.targets.iter().enumerate() {
        s.push_str(&format!("{t}\t{}\t{}\t{{{}}}\n", r.response, r.values[k], join(&r.parent_sets[k], ",")));
    }
    s
}

fn report_tsv(r: &JointIdaReport) -> String {
    let cols = join(r.targets.iter().map(|t| format!("theta_{t}")), "\t");
    let mut s = format!("row\t{cols}\tmultiplicity\tparents\n");
    for e in &r.multiset {
        s.push_str(&format!("entry\t{}\t{}\t{}\n", join(&e.values, "\t"), e.multiplicity, parent_cell(&e.parent_sets)));
    }
    s.push_str(&format!("minabs\t{}\t\t\n", join(&r.summaries.minabs, "\t")));
    s.push_str(&format!("aver\t{}\t\t\n", join(&r.summaries.aver, "\t")));
    s
}

fn read_pdag(path: &Path) -> Result<Pdag, CliError> {
    GraphDocument::parse(&io::read_text(path)?)
        .and_then(|d| d.to_pdag())
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn jointida(a: JointidaArgs, format: Format) -> Result<(), CliError> {
    let q = &a.query;
    q.check()?;
    if a.epistasis && q.targets.len() != 2 {
        return Err(CliError::config("--epistasis needs exactly two targets"));
    }
    let cfg = JointIdaConfig {
        method: q.method,
        ci: a.ci.config()?,
        corr_kind: a.ci.corr_kind,
        max_enum: q.max_enum,
        known_cpdag: a.cpdag.as_deref().map(read_pdag).transpose()?,
    };
    let data = io::read_csv(&a.data)?;
    let r = joint_ida(&data, &q.targets, q.response, &cfg).map_err(at("jointida"))?;
    let graph_ref = match &a.graph_out {
        Some(path) => {
            io::write_text(Some(path), &write_pdag(&r.cpdag))?;
            Some(path.display().to_string())
        }
        None => None,
    };
    let m = if a.epistasis {
        epistasis(&r.cov, &r.parent_sets, q.response, q.method).map_err(at("epistasis"))?
    } else {
        r.multiset
    };
    emit_report(&m, &cfg, graph_ref, format)
}

fn validate(a: ValidateArgs, format: Option<Format>) -> Result<(), CliError> {
    let checks = run_suite(a.suite);
    let failed = checks.iter().filter(|c| !c.passed).count();
    let text = match format {
        Some(Format::Json) => to_json(
            &checks
                .iter()
                .map(|c| serde_json::json!({"id": c.id, "name": c.name, "passed": c.passed, "detail": c.detail, "seconds": c.seconds}))
                .collect::<Vec<_>>(),
        ),
        Some(Format::Tsv) => {
            let mut s = String::from("id\tname\tresult\tseconds\tdetail\n");
            for c in &checks {
                s.push_str(&format!(
                    "{}\t{}\t{}\t{:.3}\t{}\n",
                    c.id,
                    c.name,
                    if c.passed { "PASS" } else { "FAIL" },
                    c.seconds,
                    c.detail
                ));
            }
            s
        }
        None => checks.iter().map(|c| format!("{c}\n")).collect(),
    };
    io::write_text(None, &text)?;
    if failed > 0 {
        return Err(CliError::Validation(failed));
    }
    Ok(())
}
