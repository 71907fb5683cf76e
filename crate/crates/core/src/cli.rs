//! Command-line front door: file I/O, subcommand dispatch, and report
//! formatting.
//!
//! Every subcommand is a thin adapter over one library call; the printed
//! JSON is composed from the same report the library returns, so any CLI
//! result is reproducible programmatically. Reports are machine-first
//! JSON; `--format text` renders a short human summary instead.
//!
//! Exit codes: 0 pass/feasible, 1 I/O or schema error, 2 validation
//! failure, 3 inconclusive, 4 certified-infeasible/rejected, 64 usage
//! error (unknown subcommand or bad arguments).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::choi::Instrument;
use crate::config::{self, Tolerances};
use crate::convexsep::{
    bipartite_causal_sep, fixed_first_ecs, tripartite_ecs, FeasibilityReport, FeasibilityStatus,
    SeparabilityProblem,
};
use crate::correlations::{table_from_process, ProbabilityTable};
use crate::gallery::{
    activation_pipeline, ocb_pipeline, ocb_process, ocb_tripartite, ocb_tripartite_extended,
    ocb_tripartite_pipeline, switch_pipeline, switch_process, PipelineReport, SwitchParams,
};
use crate::io;
use crate::polytope::{causal_bound, causal_membership, causal_membership_exact, CausalWitness};
use crate::procmat::ProcessMatrix;
use crate::qlinalg::ComplexMatrix;
use crate::suite::criteria;
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;
pub const EXIT_REJECTED: i32 = 4;
pub const EXIT_USAGE: i32 = 64;

/// Report rendering selected by `--format`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Text,
}

/// Resolved run-wide settings: tolerances and solver budgets, output
/// format, and RNG seed.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub tolerances: Tolerances,
    pub format: OutputFormat,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            tolerances: Tolerances::default(),
            format: OutputFormat::Json,
            seed: config::DEFAULT_SEED,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "causality-kit",
    version,
    about = "Process-matrix toolkit: validity and signaling analysis, causal-polytope \
             membership, causal-separability feasibility, and reproduction pipelines"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// RNG seed; beats the CAUSALITY_KIT_SEED environment variable
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Report format
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    /// Max deviation from Hermiticity
    #[arg(long, global = true, help_heading = "Tolerances")]
    tol_hermiticity: Option<f64>,
    /// Most negative eigenvalue still counted as PSD
    #[arg(long, global = true, help_heading = "Tolerances")]
    tol_psd_min_eig: Option<f64>,
    /// Basis coefficients below this are treated as absent
    #[arg(long, global = true, help_heading = "Tolerances")]
    tol_coeff_zero: Option<f64>,
    /// Max marginal deviation in signaling and normalization checks
    #[arg(long, global = true, help_heading = "Tolerances")]
    tol_marginal: Option<f64>,
    /// Max residual for recomposition identities
    #[arg(long, global = true, help_heading = "Tolerances")]
    tol_recomposition: Option<f64>,
    /// Residual below which a feasibility candidate counts as a witness
    #[arg(long, global = true, help_heading = "Tolerances")]
    tol_feasibility_residual: Option<f64>,
    /// Slack allowed when re-validating a feasibility witness
    #[arg(long, global = true, help_heading = "Tolerances")]
    tol_witness_slack: Option<f64>,
    /// Feasibility tolerance of the floating-point simplex
    #[arg(long, global = true, help_heading = "Tolerances")]
    tol_lp_feasibility: Option<f64>,
    /// Second-eigenvalue threshold for the rank-one certificate
    #[arg(long, global = true, help_heading = "Tolerances")]
    tol_rank_one: Option<f64>,
    /// Round-trip tolerance for matrix JSON files
    #[arg(long, global = true, help_heading = "Tolerances")]
    tol_json_round_trip: Option<f64>,
    /// Iteration budget for feasibility splitting
    #[arg(long, global = true, help_heading = "Budgets")]
    feasibility_budget: Option<usize>,
    /// Max sweeps for seesaw strategy optimization
    #[arg(long, global = true, help_heading = "Budgets")]
    seesaw_sweeps: Option<usize>,
}

impl GlobalArgs {
    fn to_config(&self) -> RunConfig {
        let mut tol = Tolerances::default();
        if let Some(v) = self.tol_hermiticity {
            tol.hermiticity = v;
        }
        if let Some(v) = self.tol_psd_min_eig {
            tol.psd_min_eig = v;
        }
        if let Some(v) = self.tol_coeff_zero {
            tol.coeff_zero = v;
        }
        if let Some(v) = self.tol_marginal {
            tol.marginal = v;
        }
        if let Some(v) = self.tol_recomposition {
            tol.recomposition = v;
        }
        if let Some(v) = self.tol_feasibility_residual {
            tol.feasibility_residual = v;
        }
        if let Some(v) = self.tol_witness_slack {
            tol.witness_slack = v;
        }
        if let Some(v) = self.tol_lp_feasibility {
            tol.lp_feasibility = v;
        }
        if let Some(v) = self.tol_rank_one {
            tol.rank_one = v;
        }
        if let Some(v) = self.tol_json_round_trip {
            tol.json_round_trip = v;
        }
        if let Some(v) = self.feasibility_budget {
            tol.feasibility_budget = v;
        }
        if let Some(v) = self.seesaw_sweeps {
            tol.seesaw_sweeps = v;
        }
        RunConfig { tolerances: tol, format: self.format, seed: config::resolve_seed(self.seed) }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check that a process file is a valid process matrix
    Validate {
        /// Process file (JSON)
        process: PathBuf,
    },
    /// Report matrix-level signaling between party subsets
    Signaling {
        /// Process file (JSON)
        process: PathBuf,
        /// Comma-separated sending parties; default: every nonempty
        /// proper subset
        #[arg(long)]
        from: Option<String>,
    },
    /// Evaluate the outcome table of a process under instruments
    Probe {
        /// Process file (JSON)
        process: PathBuf,
        /// One instrument file per party, in party order; each holds one
        /// instrument object or an array of them (one per setting)
        #[arg(required = true)]
        instruments: Vec<PathBuf>,
        /// Also write the table to this path
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Test a correlation table for membership in the causal polytope
    CausalTest {
        /// Table file (JSON)
        table: PathBuf,
        /// Confirm a rejection in exact rational arithmetic
        #[arg(long)]
        exact: bool,
    },
    /// Maximize a game over the causal polytope
    CausalBound {
        /// Game file (JSON)
        game: PathBuf,
        /// Report the bound as an exact rational
        #[arg(long)]
        exact: bool,
    },
    /// Causal-separability feasibility test for a two-party process
    SepTest {
        /// Process file (JSON)
        process: PathBuf,
    },
    /// Extensible-causal-separability test for a three-party process
    EcsTest {
        /// Process file (JSON)
        process: PathBuf,
        /// Test the decomposition with this party fixed to act first
        /// instead of the extensible form
        #[arg(long)]
        first: Option<String>,
    },
    /// Run a reproduction pipeline and print its staged report
    Reproduce {
        #[arg(value_enum)]
        target: ReproduceTarget,
        /// Write the constructed process matrix to this path
        #[arg(long)]
        emit_matrix: Option<PathBuf>,
        /// Control-qubit state for the switch pipeline
        #[arg(long, value_enum, default_value_t = PsiArg::Zero)]
        psi: PsiArg,
        /// Random third-party events for the tripartite and activation
        /// pipelines
        #[arg(long, default_value_t = 20)]
        events: usize,
    },
    /// Run every acceptance criterion, one named check per criterion
    Suite,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ReproduceTarget {
    Ocb,
    OcbTripartite,
    Switch,
    Activation,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PsiArg {
    Zero,
    Plus,
}

impl PsiArg {
    fn params(self) -> SwitchParams {
        match self {
            PsiArg::Zero => SwitchParams::zero(),
            PsiArg::Plus => SwitchParams::plus(),
        }
    }
}

/// Entry point for the binary: dispatch on `std::env::args`.
pub fn run() -> i32 {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    dispatch(std::env::args_os(), &mut out)
}

/// Parse `argv` and run the selected subcommand, writing the report to
/// `out`. Returns the process exit code.
pub fn dispatch<I, T>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{err}");
                    EXIT_OK
                }
                _ => {
                    eprint!("{err}");
                    EXIT_USAGE
                }
            };
        }
    };
    let config = cli.global.to_config();
    match execute(&cli.command, &config, out) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            EXIT_IO
        }
    }
}

/// Report of one subcommand: machine JSON, human lines, exit code.
struct Output {
    json: Value,
    text: Vec<String>,
    code: i32,
}

fn execute(cmd: &Command, config: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let output = match cmd {
        Command::Validate { process } => cmd_validate(process, config)?,
        Command::Signaling { process, from } => cmd_signaling(process, from.as_deref(), config)?,
        Command::Probe { process, instruments, out } => {
            cmd_probe(process, instruments, out.as_deref(), config)?
        }
        Command::CausalTest { table, exact } => cmd_causal_test(table, *exact, config)?,
        Command::CausalBound { game, exact } => cmd_causal_bound(game, *exact, config)?,
        Command::SepTest { process } => cmd_sep_test(process, config)?,
        Command::EcsTest { process, first } => cmd_ecs_test(process, first.as_deref(), config)?,
        Command::Reproduce { target, emit_matrix, psi, events } => {
            cmd_reproduce(*target, emit_matrix.as_deref(), *psi, *events, config)?
        }
        Command::Suite => cmd_suite(config)?,
    };
    match config.format {
        OutputFormat::Json => writeln!(out, "{}", serde_json::to_string_pretty(&output.json)?)?,
        OutputFormat::Text => {
            for line in &output.text {
                writeln!(out, "{line}")?;
            }
        }
    }
    Ok(output.code)
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

fn cmd_validate(path: &Path, config: &RunConfig) -> Result<Output> {
    let w = io::read_process(path)?;
    let rep = w.validate(&config.tolerances)?;
    let mut text = vec![
        format!("passed: {}", rep.passed),
        format!("min eigenvalue: {:.3e}", rep.min_eigenvalue),
        format!("trace: {:.6} (expected {:.6})", rep.trace, rep.expected_trace),
    ];
    if rep.forbidden_terms.is_empty() {
        text.push("forbidden terms: none".into());
    } else {
        for t in &rep.forbidden_terms {
            text.push(format!(
                "forbidden term {} (coefficient {:.3e})",
                t.term_type, t.max_coefficient
            ));
        }
    }
    let code = if rep.passed { EXIT_OK } else { EXIT_INVALID };
    Ok(Output { json: serde_json::to_value(&rep)?, text, code })
}

fn cmd_signaling(path: &Path, from: Option<&str>, config: &RunConfig) -> Result<Output> {
    let w = io::read_process(path)?;
    let n = w.n_parties();
    let subsets: Vec<Vec<usize>> = match from {
        Some(spec) => vec![parse_parties(&w, spec)?],
        None => (1..(1u32 << n) - 1)
            .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).collect())
            .collect(),
    };
    let mut directions = Vec::new();
    let mut text = Vec::new();
    let mut all_ok = true;
    for subset in &subsets {
        let rep = w.no_signaling_matrix(subset, &config.tolerances)?;
        all_ok &= rep.no_signaling;
        let verdict = if rep.no_signaling {
            "no signaling".to_string()
        } else {
            let terms: Vec<&str> =
                rep.offending_terms.iter().map(|t| t.term_type.as_str()).collect();
            format!("signaling via {}", terms.join(", "))
        };
        text.push(format!("from {{{}}} to {{{}}}: {verdict}", rep.from.join(","), rep.to.join(",")));
        directions.push(serde_json::to_value(&rep)?);
    }
    text.push(format!("no signaling overall: {all_ok}"));
    let names: Vec<String> = w.parties().iter().map(|p| p.name.clone()).collect();
    let json = json!({
        "parties": names,
        "directions": directions,
        "no_signaling": all_ok,
    });
    Ok(Output { json, text, code: if all_ok { EXIT_OK } else { EXIT_REJECTED } })
}

fn cmd_probe(
    process: &Path,
    instruments: &[PathBuf],
    out_path: Option<&Path>,
    _config: &RunConfig,
) -> Result<Output> {
    let w = io::read_process(process)?;
    if instruments.len() != w.n_parties() {
        return Err(Error::InvalidInput(format!(
            "expected {} instrument files (one per party), got {}",
            w.n_parties(),
            instruments.len()
        )));
    }
    let mut per_party = Vec::new();
    for (party, path) in w.parties().iter().zip(instruments) {
        let list = read_party_instruments(path)?;
        for inst in &list {
            if inst.party != *party {
                return Err(Error::InvalidInput(format!(
                    "{} holds instruments for party {} ({}x{}), expected {} ({}x{})",
                    path.display(),
                    inst.party.name,
                    inst.party.d_in,
                    inst.party.d_out,
                    party.name,
                    party.d_in,
                    party.d_out
                )));
            }
        }
        per_party.push(list);
    }
    let table = table_from_process(&w, &per_party)?;
    if let Some(p) = out_path {
        io::write_table(p, &table)?;
    }
    let sc = &table.scenario;
    let mut text = Vec::new();
    for (i, name) in sc.parties.iter().enumerate() {
        text.push(format!(
            "{name}: {} settings, {} outcomes",
            sc.settings[i], sc.outcomes[i]
        ));
    }
    let no = sc.n_outcomes();
    for s in 0..sc.n_settings().min(32) {
        let row: Vec<String> =
            (0..no).map(|o| format!("{:.6}", table.p[s * no + o])).collect();
        text.push(format!("s={s}: {}", row.join(" ")));
    }
    if let Some(p) = out_path {
        text.push(format!("written: {}", p.display()));
    }
    Ok(Output { json: table_value(&table), text, code: EXIT_OK })
}

fn cmd_causal_test(path: &Path, exact: bool, config: &RunConfig) -> Result<Output> {
    let table = io::read_table(path)?;
    if let Err(err) = table.validate(&config.tolerances) {
        let json = json!({ "status": "invalid-table", "error": err.to_string() });
        let text = vec![format!("status: invalid-table ({err})")];
        return Ok(Output { json, text, code: EXIT_INVALID });
    }
    let rep = causal_membership(&table, &config.tolerances)?;
    let mut map = serde_json::Map::new();
    let status = if rep.causal { "causal" } else { "non-causal" };
    map.insert("status".into(), status.into());
    let mut text = vec![format!("status: {status}")];
    if rep.causal {
        if let Some(witness) = &rep.witness {
            map.insert("witness".into(), witness_value(witness));
            map.insert("witness_violation".into(), rep.witness_violation.into());
            text.push(format!(
                "witness: {} branches, worst constraint violation {:.3e}",
                witness.branches.len(),
                rep.witness_violation
            ));
        }
    } else {
        map.insert("violated_margin".into(), rep.infeasibility_gap.into());
        map.insert("farkas_checked".into(), rep.farkas_checked.into());
        text.push(format!(
            "violated margin: {:.3e} (certificate checked: {})",
            rep.infeasibility_gap, rep.farkas_checked
        ));
    }
    if exact {
        let ex = causal_membership_exact(&table)?;
        let ex_status = if ex.causal { "causal" } else { "non-causal" };
        map.insert(
            "exact".into(),
            json!({
                "status": ex_status,
                "gap": ex.gap.to_string(),
                "farkas_checked": ex.farkas_checked,
            }),
        );
        text.push(format!("exact: {ex_status} (gap {})", ex.gap));
    }
    let code = if rep.causal { EXIT_OK } else { EXIT_REJECTED };
    Ok(Output { json: Value::Object(map), text, code })
}

fn cmd_causal_bound(path: &Path, exact: bool, _config: &RunConfig) -> Result<Output> {
    let game = io::read_game(path)?;
    let res = causal_bound(&game)?;
    let mut map = serde_json::Map::new();
    let text = if exact {
        map.insert("bound".into(), res.exact.to_string().into());
        map.insert("value".into(), res.value.into());
        vec![format!("bound: {} (= {:.6})", res.exact, res.value)]
    } else {
        map.insert("bound".into(), res.value.into());
        vec![format!("bound: {:.6}", res.value)]
    };
    map.insert("maximizer".into(), table_value(&res.maximizer));
    map.insert("witness".into(), witness_value(&res.witness));
    Ok(Output { json: Value::Object(map), text, code: EXIT_OK })
}

fn cmd_sep_test(path: &Path, config: &RunConfig) -> Result<Output> {
    let w = io::read_process(path)?;
    let rep = bipartite_causal_sep(&w, &config.tolerances)?;
    Ok(feasibility_output(&w, &rep))
}

fn cmd_ecs_test(path: &Path, first: Option<&str>, config: &RunConfig) -> Result<Output> {
    let w = io::read_process(path)?;
    let rep = match first {
        Some(name) => {
            let idx = w
                .party_index(name)
                .ok_or_else(|| Error::InvalidInput(format!("unknown party {name}")))?;
            fixed_first_ecs(&w, idx, &config.tolerances)?
        }
        None => tripartite_ecs(&w, &config.tolerances)?,
    };
    Ok(feasibility_output(&w, &rep))
}

fn cmd_reproduce(
    target: ReproduceTarget,
    emit: Option<&Path>,
    psi: PsiArg,
    events: usize,
    config: &RunConfig,
) -> Result<Output> {
    let tol = &config.tolerances;
    let rep: PipelineReport = match target {
        ReproduceTarget::Ocb => ocb_pipeline(config.seed, tol)?,
        ReproduceTarget::OcbTripartite => ocb_tripartite_pipeline(config.seed, events, tol)?,
        ReproduceTarget::Switch => switch_pipeline(&psi.params(), tol)?,
        ReproduceTarget::Activation => activation_pipeline(config.seed, events, tol)?,
    };
    if let Some(path) = emit {
        let matrix = match target {
            ReproduceTarget::Ocb => ocb_process(),
            ReproduceTarget::OcbTripartite => ocb_tripartite(),
            ReproduceTarget::Switch => switch_process(&psi.params()),
            ReproduceTarget::Activation => ocb_tripartite_extended(),
        };
        io::write_process(path, &matrix)?;
    }
    let mut text = vec![format!("{}: {}", rep.name, if rep.passed { "PASS" } else { "FAIL" })];
    for s in &rep.stages {
        text.push(format!(
            "  [{}] {}: {}",
            if s.passed { "ok" } else { "FAIL" },
            s.stage,
            s.detail
        ));
    }
    text.push(format!("verdict: {}", rep.verdict));
    let code = if rep.passed { EXIT_OK } else { EXIT_INVALID };
    Ok(Output { json: serde_json::to_value(&rep)?, text, code })
}

fn cmd_suite(config: &RunConfig) -> Result<Output> {
    let reports = criteria::run_all(config.seed, &config.tolerances);
    let n_pass = reports.iter().filter(|r| r.passed).count();
    let all = n_pass == reports.len();
    let mut text: Vec<String> = reports.iter().map(|r| r.line()).collect();
    text.push(format!("suite: {n_pass}/{} passed", reports.len()));
    let code = if all { EXIT_OK } else { EXIT_INVALID };
    Ok(Output { json: serde_json::to_value(&reports)?, text, code })
}

// ---------------------------------------------------------------------------
// report composition helpers
// ---------------------------------------------------------------------------

fn parse_parties(w: &ProcessMatrix, spec: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for name in spec.split(',') {
        let name = name.trim();
        let idx = w
            .party_index(name)
            .ok_or_else(|| Error::InvalidInput(format!("unknown party {name}")))?;
        out.push(idx);
    }
    out.sort_unstable();
    out.dedup();
    if out.len() == w.n_parties() {
        return Err(Error::InvalidInput("sending subset must be proper".into()));
    }
    Ok(out)
}

/// One instrument file: either a single instrument object or an array of
/// them (one per setting).
fn read_party_instruments(path: &Path) -> Result<Vec<Instrument>> {
    let text = std::fs::read_to_string(path)?;
    let value: Value = serde_json::from_str(&text)?;
    if value.is_array() {
        io::read_instrument_list(path)
    } else {
        Ok(vec![io::read_instrument(path)?])
    }
}

/// Table JSON in the table file format: scenario plus nested entries.
fn table_value(t: &ProbabilityTable) -> Value {
    json!({
        "scenario": t.scenario,
        "p": io::nest(&io::table_dims(&t.scenario), &t.p),
    })
}

/// Causal-decomposition witness: ordered branches with their weights and
/// subnormalized tables.
fn witness_value(w: &CausalWitness) -> Value {
    let dims = io::table_dims(&w.scenario);
    let no = w.scenario.n_outcomes();
    let branches: Vec<Value> = w
        .branches
        .iter()
        .map(|(ord, t)| {
            let order: Vec<&str> = ord.iter().map(|&i| w.scenario.parties[i].as_str()).collect();
            let weight: f64 = t.p[..no].iter().sum();
            json!({
                "order": order,
                "weight": weight,
                "p": io::nest(&dims, &t.p),
            })
        })
        .collect();
    json!({ "scenario": w.scenario, "branches": branches })
}

fn matrix_entries(m: &ComplexMatrix) -> Value {
    let mut entries = Vec::with_capacity(m.nrows() * m.ncols());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            entries.push(json!([z.re, z.im]));
        }
    }
    Value::Array(entries)
}

fn feasibility_output(w: &ProcessMatrix, rep: &FeasibilityReport) -> Output {
    let status = match rep.status {
        FeasibilityStatus::Feasible => "feasible",
        FeasibilityStatus::Inconclusive => "inconclusive",
        FeasibilityStatus::CertifiedInfeasible => "certified-infeasible",
    };
    let problem = match &rep.problem {
        SeparabilityProblem::Bipartite => "bipartite".to_string(),
        SeparabilityProblem::FixedFirst(i) => format!("fixed-first:{}", w.parties()[*i].name),
        SeparabilityProblem::TripartiteExtensible => "tripartite-extensible".to_string(),
    };
    let blocks: Vec<Value> = if rep.status == FeasibilityStatus::Feasible {
        rep.blocks
            .iter()
            .map(|b| {
                json!({
                    "first_party": w.parties()[b.first_party].name,
                    "omitted_slot": b.omitted_label,
                    "min_eigenvalue": b.min_eigenvalue,
                    "dim": b.reduced.nrows(),
                    "entries": matrix_entries(&b.reduced),
                })
            })
            .collect()
    } else {
        Vec::new()
    };
    let certificate = rep
        .certificate
        .as_ref()
        .map(|c| {
            json!({
                "top_eigenvalue": c.top_eigenvalue,
                "second_eigenvalue": c.second_eigenvalue,
                "explanation": c.explanation,
            })
        })
        .unwrap_or(Value::Null);
    let json = json!({
        "problem": problem,
        "status": status,
        "iterations": rep.iterations,
        "residual": rep.residual,
        "sum_defect": rep.sum_defect,
        "span_defect": rep.span_defect,
        "min_block_eigenvalue": rep.min_block_eigenvalue,
        "blocks": blocks,
        "certificate": certificate,
    });
    let mut text = vec![
        format!("problem: {problem}"),
        format!("status: {status}"),
        format!("iterations: {}", rep.iterations),
        format!("residual: {:.3e}", rep.residual),
    ];
    if let Some(c) = &rep.certificate {
        text.push(format!("certificate: {}", c.explanation));
    }
    let code = match rep.status {
        FeasibilityStatus::Feasible => EXIT_OK,
        FeasibilityStatus::Inconclusive => EXIT_INCONCLUSIVE,
        FeasibilityStatus::CertifiedInfeasible => EXIT_REJECTED,
    };
    Output { json, text, code }
}
