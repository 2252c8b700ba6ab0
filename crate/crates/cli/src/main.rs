//! `domino`: reformulate PMU placement as a binary quadratic model, solve it
//! classically, embed it onto Chimera hardware graphs, and simulate small
//! annealing runs.
//!
//! Exit codes: 0 success, 1 usage error, 2 infeasible or no solution,
//! 3 resource guard tripped.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use domino_core::aqa;
use domino_core::bench::{
    self, make_grid, Backend, BenchError, SweepConfig, SweepGrid, TimingModel,
};
use domino_core::chimera::{
    build_chimera, chain_strength, clique_bound, embed_ising, find_embedding, verify_embedding,
    ChimeraSpec, ParamRanges,
};
use domino_core::data;
use domino_core::graph::{exact_domination_number, Graph, GraphError};
use domino_core::reform::{
    build_bqm, parse_coeff, reform_stats, to_ising, PenaltyConfig, SlackMode,
};
use domino_core::sa::{best_feasible, simulated_anneal_from, BetaSchedule, SaError, SaParams};

#[derive(Parser)]
#[command(name = "domino", version, about = "PMU placement as a binary quadratic model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reformulation resource statistics for a system
    Stats(StatsCmd),
    /// Export the binary quadratic or spin model
    Reform(ReformCmd),
    /// Exact minimum dominating set by branch and bound
    SolveExact(SolveExactCmd),
    /// Simulated annealing on the penalized model
    SolveSa(SolveSaCmd),
    /// Minor-embed the interaction graph into a chimera hardware graph
    Embed(EmbedCmd),
    /// State-vector annealing simulation (small instances)
    SimulateAqa(SimulateAqaCmd),
    /// Full (tau, k) grid sweep producing one report row
    Sweep(SweepCmd),
    /// Merge sweep rows into a report
    Report(ReportCmd),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SlackModeArg {
    Paper,
    Safe,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Table,
    Structured,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendArg {
    Sa,
    Aqa,
}

#[derive(Args)]
struct ModelArgs {
    /// Edge-list file path, or a bundled system name (ieee9 .. ieee300)
    #[arg(long)]
    input: String,
    /// Penalty weight alpha: integer, p/q, or decimal
    #[arg(long, default_value = "2")]
    alpha: String,
    /// Slack-bit sizing rule
    #[arg(long, value_enum, default_value = "paper")]
    slack_mode: SlackModeArg,
}

#[derive(Args)]
struct StatsCmd {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum, default_value = "table")]
    format: FormatArg,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct ReformCmd {
    #[command(flatten)]
    model: ModelArgs,
    /// Which representation to export
    #[arg(long, value_enum, default_value = "bqm")]
    repr: ReprArg,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReprArg {
    Bqm,
    Ising,
}

#[derive(Args)]
struct SolveExactCmd {
    #[command(flatten)]
    model: ModelArgs,
    /// Fail if gamma exceeds this size
    #[arg(long)]
    budget: Option<usize>,
    /// Override the 40-node exhaustive-search guard
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct SolveSaCmd {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 200)]
    reads: usize,
    #[arg(long, default_value_t = 2000)]
    sweeps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    beta_hot: Option<f64>,
    #[arg(long)]
    beta_cold: Option<f64>,
    /// Seed this many reads from randomized-greedy covers (0 = random starts)
    #[arg(long, default_value_t = 0)]
    warm_starts: usize,
    /// Write the full sample set here
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct EmbedCmd {
    #[command(flatten)]
    model: ModelArgs,
    /// Hardware layout rows,cols,shore
    #[arg(long, default_value = "16,16,4")]
    chimera: String,
    #[arg(long, default_value_t = 10)]
    tries: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Chain strength as a multiple of |J|_M
    #[arg(long, default_value = "3/2")]
    chain_factor: String,
    /// Use the extended J range of the VFYC solver
    #[arg(long)]
    vfyc: bool,
    /// Write the chain map here
    #[arg(long)]
    out: Option<String>,
    /// Write the scaled physical model here
    #[arg(long)]
    physical_out: Option<String>,
}

#[derive(Args)]
struct SimulateAqaCmd {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 10.0)]
    tau: f64,
    /// Fixed integrator step count (default: automatic)
    #[arg(long)]
    steps: Option<usize>,
    /// Measurement reads to draw from the final state
    #[arg(long, default_value_t = 0)]
    reads: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sweep curve mode: comma-separated tau list
    #[arg(long)]
    taus: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct SweepCmd {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum, default_value = "sa")]
    backend: BackendArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Programming time T_P (same unit as tau)
    #[arg(long, default_value = "0")]
    tp: String,
    /// Per-cycle readout time T_R (same unit as tau)
    #[arg(long, default_value = "0")]
    tr: String,
    /// Also solve gamma exactly (within the search guard)
    #[arg(long)]
    exact: bool,
    /// Fixed-budget SA baseline as reads,sweeps
    #[arg(long)]
    sa_baseline: Option<String>,
    /// Embedding attempts for the qubit column (0 skips embedding)
    #[arg(long, default_value_t = 0)]
    embed_tries: usize,
    #[arg(long, value_enum, default_value = "table")]
    format: FormatArg,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct ReportCmd {
    /// Sweep row documents to merge
    #[arg(required = true)]
    inputs: Vec<String>,
    #[arg(long, value_enum, default_value = "table")]
    format: FormatArg,
    #[arg(long)]
    out: Option<String>,
}

enum CliError {
    Usage(String),
    Infeasible(String),
    Guard(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Infeasible(_) => 2,
            CliError::Guard(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Infeasible(m) | CliError::Guard(m) => m,
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::TooLarge { .. } => CliError::Guard(e.to_string()),
            GraphError::BudgetExceeded { .. } => CliError::Infeasible(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<domino_core::reform::ReformError> for CliError {
    fn from(e: domino_core::reform::ReformError) -> Self {
        match e {
            domino_core::reform::ReformError::InfeasibleRow { .. } => {
                CliError::Infeasible(e.to_string())
            }
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<SaError> for CliError {
    fn from(e: SaError) -> Self {
        match e {
            SaError::TooManyVariables { .. } => CliError::Guard(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<aqa::AqaError> for CliError {
    fn from(e: aqa::AqaError) -> Self {
        match e {
            aqa::AqaError::TooManyQubits(_) => CliError::Guard(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::ResourceGuard { .. } => CliError::Guard(e.to_string()),
            BenchError::Sa(inner) => inner.into(),
            BenchError::Aqa(inner) => inner.into(),
            BenchError::Reform(inner) => inner.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Stats(cmd) => cmd_stats(cmd),
        Command::Reform(cmd) => cmd_reform(cmd),
        Command::SolveExact(cmd) => cmd_solve_exact(cmd),
        Command::SolveSa(cmd) => cmd_solve_sa(cmd),
        Command::Embed(cmd) => cmd_embed(cmd),
        Command::SimulateAqa(cmd) => cmd_simulate_aqa(cmd),
        Command::Sweep(cmd) => cmd_sweep(cmd),
        Command::Report(cmd) => cmd_report(cmd),
    }
}

fn load_graph(input: &str) -> Result<(String, Graph), CliError> {
    let (label, text) = if Path::new(input).exists() {
        let text = fs::read_to_string(input)?;
        let label = Path::new(input)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| input.to_string());
        (label, text)
    } else if let Some(text) = data::bundled(input) {
        (input.to_string(), text.to_string())
    } else {
        return Err(CliError::Usage(format!(
            "'{input}' is neither a readable file nor a bundled system name"
        )));
    };
    let report = Graph::parse_edge_list(&text)?;
    Ok((label, report.graph))
}

fn penalty_config(model: &ModelArgs) -> Result<PenaltyConfig, CliError> {
    let alpha = parse_coeff(&model.alpha)
        .ok_or_else(|| CliError::Usage(format!("cannot parse alpha '{}'", model.alpha)))?;
    let mode = match model.slack_mode {
        SlackModeArg::Paper => SlackMode::PaperExact,
        SlackModeArg::Safe => SlackMode::Safe,
    };
    Ok(PenaltyConfig::uniform(alpha, mode)?)
}

fn write_output(out: &Option<String>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn cmd_stats(cmd: StatsCmd) -> Result<(), CliError> {
    let (label, g) = load_graph(&cmd.model.input)?;
    let cfg = penalty_config(&cmd.model)?;
    let stats = reform_stats(&g, &cfg)?;
    let content = match cmd.format {
        FormatArg::Table => {
            let mut s = String::new();
            writeln!(s, "system        {label}").unwrap();
            writeln!(s, "buses         {}", stats.buses).unwrap();
            writeln!(s, "branches      {}", stats.branches).unwrap();
            writeln!(s, "ancillas      {}", stats.ancillas).unwrap();
            writeln!(s, "interactions  {}", stats.interactions).unwrap();
            if stats.cancelled > 0 {
                writeln!(s, "cancelled     {}", stats.cancelled).unwrap();
            }
            s
        }
        FormatArg::Structured => format!(
            "{{\"system\":\"{label}\",\"buses\":{},\"branches\":{},\"ancillas\":{},\"interactions\":{},\"cancelled\":{}}}\n",
            stats.buses, stats.branches, stats.ancillas, stats.interactions, stats.cancelled
        ),
    };
    write_output(&cmd.out, &content)
}

fn cmd_reform(cmd: ReformCmd) -> Result<(), CliError> {
    let (_, g) = load_graph(&cmd.model.input)?;
    let cfg = penalty_config(&cmd.model)?;
    let bqm = build_bqm(&g, &cfg)?;
    let content = match cmd.repr {
        ReprArg::Bqm => bqm.export_text(),
        ReprArg::Ising => to_ising(&bqm).export_text(),
    };
    write_output(&cmd.out, &content)
}

fn cmd_solve_exact(cmd: SolveExactCmd) -> Result<(), CliError> {
    let (label, g) = load_graph(&cmd.model.input)?;
    let (gamma, witness) = exact_domination_number(&g, cmd.budget, cmd.force)?;
    println!("system {label}");
    println!("gamma {gamma}");
    println!("witness {witness}");
    Ok(())
}

fn cmd_solve_sa(cmd: SolveSaCmd) -> Result<(), CliError> {
    let (label, g) = load_graph(&cmd.model.input)?;
    let cfg = penalty_config(&cmd.model)?;
    let bqm = build_bqm(&g, &cfg)?;
    let beta = match (cmd.beta_hot, cmd.beta_cold) {
        (Some(hot), Some(cold)) => BetaSchedule::Geometric { hot, cold },
        (None, None) => BetaSchedule::Auto,
        _ => {
            return Err(CliError::Usage(
                "--beta-hot and --beta-cold must be given together".into(),
            ))
        }
    };
    let params = SaParams {
        num_reads: cmd.reads,
        sweeps_per_read: cmd.sweeps,
        beta,
        seed: cmd.seed,
    };
    let starts = if cmd.warm_starts > 0 {
        domino_core::reform::warm_starts(&g, &cfg, cmd.warm_starts, cmd.seed)?
    } else {
        Vec::new()
    };
    let samples = simulated_anneal_from(&bqm, &params, &starts)?;
    if let Some(out) = &cmd.out {
        fs::write(out, samples.export_text())?;
    }
    match best_feasible(&g, &samples) {
        Some((set, size)) => {
            println!("system {label}");
            println!("pmus {size}");
            println!("placement {set}");
            println!(
                "best_energy {}",
                domino_core::reform::fmt_coeff(&samples.best().unwrap().energy)
            );
            Ok(())
        }
        None => Err(CliError::Infeasible("no feasible sample found".into())),
    }
}

fn parse_chimera(text: &str) -> Result<ChimeraSpec, CliError> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(CliError::Usage("--chimera expects rows,cols,shore".into()));
    }
    let nums: Vec<usize> = parts
        .iter()
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage("--chimera expects three positive integers".into()))?;
    ChimeraSpec::new(nums[0], nums[1], nums[2])
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn cmd_embed(cmd: EmbedCmd) -> Result<(), CliError> {
    let (label, g) = load_graph(&cmd.model.input)?;
    let cfg = penalty_config(&cmd.model)?;
    let bqm = build_bqm(&g, &cfg)?;
    let ising = to_ising(&bqm);
    let spec = parse_chimera(&cmd.chimera)?;
    let hw = build_chimera(spec);
    let logical = bqm.interaction_graph();
    let (n_max, edge_bound) = clique_bound(spec);
    let Some(embedding) = find_embedding(&logical, &hw, cmd.seed, cmd.tries) else {
        return Err(CliError::Infeasible(format!(
            "no embedding found: {} interactions against a clique bound of K_{n_max} ({edge_bound} edges)",
            logical.edges().len()
        )));
    };
    let (ok, violations) = verify_embedding(&logical, &hw, &embedding);
    if !ok {
        return Err(CliError::Usage(format!("embedding failed verification: {violations:?}")));
    }
    let factor = parse_coeff(&cmd.chain_factor)
        .ok_or_else(|| CliError::Usage("cannot parse --chain-factor".into()))?;
    let j_chain = chain_strength(&ising, factor);
    let ranges = if cmd.vfyc { ParamRanges::vfyc() } else { ParamRanges::standard() };
    let physical = embed_ising(&ising, &embedding, &hw, j_chain, ranges)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    println!("system {label}");
    println!("logical_vars {}", logical.num_nodes());
    println!("interactions {}", logical.edges().len());
    println!("physical_qubits {}", embedding.total_qubits());
    println!("max_chain {}", embedding.max_chain_len());
    println!("j_chain {}", domino_core::reform::fmt_coeff(&j_chain));
    println!("scale {}", domino_core::reform::fmt_coeff(&physical.scale));
    if let Some(out) = &cmd.out {
        let names: Vec<String> = bqm.vars().iter().map(|v| v.to_string()).collect();
        fs::write(out, embedding.export_text(&names))?;
    }
    if let Some(out) = &cmd.physical_out {
        fs::write(out, physical.export_text())?;
    }
    Ok(())
}

fn cmd_simulate_aqa(cmd: SimulateAqaCmd) -> Result<(), CliError> {
    let (label, g) = load_graph(&cmd.model.input)?;
    let cfg = penalty_config(&cmd.model)?;
    let bqm = build_bqm(&g, &cfg)?;
    let ising = to_ising(&bqm);
    let psi0 = aqa::init_plus_state(bqm.num_vars())?;

    if let Some(taus) = &cmd.taus {
        // Sweep curve: tau, ground probability, best feasible size.
        let taus: Vec<f64> = taus
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Usage("cannot parse --taus list".into()))?;
        let mut content = String::from("tau\tground_prob\tbest_feasible\n");
        for tau in taus {
            let mut schedule = aqa::Schedule::linear(tau);
            if let Some(steps) = cmd.steps {
                schedule = schedule.with_steps(steps);
            }
            let out = aqa::evolve(&ising, &schedule, &psi0)?;
            let p = aqa::ground_probability(&ising, &out.state);
            let best = if cmd.reads > 0 {
                let samples = aqa::sample_reads(&out.state, &ising, cmd.reads, cmd.seed);
                best_feasible(&g, &samples)
                    .map(|(_, s)| s.to_string())
                    .unwrap_or_else(|| "-".into())
            } else {
                "-".into()
            };
            writeln!(content, "{tau}\t{p:.9}\t{best}").unwrap();
        }
        return write_output(&cmd.out, &content);
    }

    let mut schedule = aqa::Schedule::linear(cmd.tau);
    if let Some(steps) = cmd.steps {
        schedule = schedule.with_steps(steps);
    }
    let out = aqa::evolve(&ising, &schedule, &psi0)?;
    println!("system {label}");
    println!("tau {}", cmd.tau);
    println!("steps {}", out.steps);
    println!("norm_drift {:.3e}", out.max_norm_drift);
    println!(
        "ground_probability {:.9}",
        aqa::ground_probability(&ising, &out.state)
    );
    if cmd.reads > 0 {
        let samples = aqa::sample_reads(&out.state, &ising, cmd.reads, cmd.seed);
        match best_feasible(&g, &samples) {
            Some((set, size)) => {
                println!("pmus {size}");
                println!("placement {set}");
            }
            None => return Err(CliError::Infeasible("no feasible sample found".into())),
        }
    }
    if let Some(out_path) = &cmd.out {
        let probs = aqa::measure_probabilities(&out.state);
        let mut content = String::from("bitstring\tprobability\n");
        for (idx, p) in probs.iter().enumerate() {
            let bits: String = (0..bqm.num_vars())
                .map(|j| if idx >> j & 1 == 1 { '1' } else { '0' })
                .collect();
            writeln!(content, "{bits}\t{p:.12}").unwrap();
        }
        fs::write(out_path, content)?;
    }
    Ok(())
}

fn cmd_sweep(cmd: SweepCmd) -> Result<(), CliError> {
    let (label, g) = load_graph(&cmd.model.input)?;
    let penalty = penalty_config(&cmd.model)?;
    let tp = parse_coeff(&cmd.tp).ok_or_else(|| CliError::Usage("cannot parse --tp".into()))?;
    let tr = parse_coeff(&cmd.tr).ok_or_else(|| CliError::Usage("cannot parse --tr".into()))?;
    let timing = TimingModel::new(tp, tr).map_err(|e| CliError::Usage(e.to_string()))?;
    let backend = match cmd.backend {
        BackendArg::Sa => Backend::Sa,
        BackendArg::Aqa => Backend::Aqa,
    };
    let mut cfg = SweepConfig::new(penalty, backend);
    cfg.timing = timing;
    cfg.compute_exact = cmd.exact;
    cfg.embed_tries = cmd.embed_tries;
    if let Some(baseline) = &cmd.sa_baseline {
        let parts: Vec<&str> = baseline.split(',').collect();
        let parsed: Option<(usize, usize)> = match parts.as_slice() {
            [r, s] => r.trim().parse().ok().zip(s.trim().parse().ok()),
            _ => None,
        };
        cfg.sa_baseline =
            Some(parsed.ok_or_else(|| CliError::Usage("--sa-baseline expects reads,sweeps".into()))?);
    }
    let grid: SweepGrid = make_grid();
    let row = bench::run_sweep(&g, &label, &cfg, &grid, cmd.seed)?;
    let content = match cmd.format {
        FormatArg::Table => bench::emit_table(std::slice::from_ref(&row)),
        FormatArg::Structured => bench::report_to_json(std::slice::from_ref(&row)),
    };
    write_output(&cmd.out, &content)?;
    if row.status == bench::RowStatus::NoFeasible {
        return Err(CliError::Infeasible(format!(
            "sweep over {label} found no feasible solution at any grid point"
        )));
    }
    Ok(())
}

fn cmd_report(cmd: ReportCmd) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for path in &cmd.inputs {
        let text = fs::read_to_string(path)?;
        let parsed = bench::parse_report(&text).map_err(|e| CliError::Usage(e.to_string()))?;
        rows.extend(parsed);
    }
    let content = match cmd.format {
        FormatArg::Table => bench::emit_table(&rows),
        FormatArg::Structured => bench::report_to_json(&rows),
    };
    write_output(&cmd.out, &content)
}
