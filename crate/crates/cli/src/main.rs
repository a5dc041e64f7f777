//! `lrm`: collect traces, learn reward machines, export solver models and
//! run the joint RL loop.

mod config;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};
use lrm::agent::{run_joint_loop, LoopConfig};
use lrm::envs::{collect_random_traces, perfect_cookie_rm, perfect_gravity_rm, Domain};
use lrm::models::{build_cp, build_milp, MCap, MilpOptions};
use lrm::search::exact_enumerate;
use lrm::{local_search, tabu_search, PrefixTree, RewardMachine, SearchConfig, TraceSet};

use config::{
    load, required, with_ext, CollectOpts, ExportOpts, LearnMethod, LearnOpts, MCapArg, Merge,
    MethodArg, ModelFormat, RlOpts, RunMeta,
};

#[derive(Debug, Parser)]
#[command(
    name = "lrm",
    version,
    about = "Learn reward machines from traces of partially observable grid worlds"
)]
struct Cli {
    /// JSON file with option defaults; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Record random-policy rollouts as a trace file
    Collect(CollectOpts),
    /// Learn a reward machine from a trace file
    Learn(LearnOpts),
    /// Export the MILP or CP model of a trace file
    Export(ExportOpts),
    /// Learn a machine and a policy together
    Rl(RlOpts),
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Budget(String),
    Io(String),
}

impl From<lrm::Error> for CliError {
    fn from(e: lrm::Error) -> Self {
        match e {
            lrm::Error::Budget { .. } => CliError::Budget(e.to_string()),
            lrm::Error::Io { .. } => CliError::Io(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Budget(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Budget(m) => write!(f, "budget refusal: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Collect(o) => load(cli.config.as_deref()).and_then(|f| collect(o.merge(f))),
        Command::Learn(o) => load(cli.config.as_deref()).and_then(|f| learn(o.merge(f))),
        Command::Export(o) => load(cli.config.as_deref()).and_then(|f| export(o.merge(f))),
        Command::Rl(o) => load(cli.config.as_deref()).and_then(|f| rl(o.merge(f))),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lrm: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

fn read_traces(path: &Path) -> Result<TraceSet, CliError> {
    let file = File::open(path).map_err(io_err(path))?;
    TraceSet::read_jsonl(BufReader::new(file)).map_err(|e| match e {
        lrm::Error::Parse { .. } => CliError::Config(format!("{}: {e}", path.display())),
        other => other.into(),
    })
}

/// Builds the tree, compressing first when asked. Returns whether the tree
/// is compressed.
fn tree_for(corpus: &TraceSet, compress: bool) -> Result<(PrefixTree, bool), CliError> {
    let corpus = if compress {
        corpus.compressed()
    } else {
        corpus.clone()
    };
    let tree = PrefixTree::build(&corpus)?;
    let compressed = tree.is_compressed();
    Ok((tree, compressed))
}

fn collect(o: CollectOpts) -> Result<(), CliError> {
    let o = CollectOpts {
        domain: Some(required(o.domain, "domain")?),
        steps: Some(o.steps.unwrap_or(200_000)),
        seed: Some(o.seed.unwrap_or(0)),
        out: Some(required(o.out, "out")?),
    };
    let (domain, steps, seed, out) = (
        o.domain.unwrap(),
        o.steps.unwrap(),
        o.seed.unwrap(),
        o.out.clone().unwrap(),
    );
    let meta = RunMeta::new("collect", seed, &o);
    let (mut set, stats) = collect_random_traces(domain, steps, seed);
    let mut header = set.meta().clone();
    header["run"] = meta.json();
    set.set_meta(header);
    let mut w = create(&out)?;
    set.write_jsonl(&mut w)
        .and_then(|_| w.flush())
        .map_err(io_err(&out))?;
    println!(
        "wrote {} traces ({} observations, {} compressed) to {}; mean episode reward {:.3}",
        set.len(),
        set.num_observations(),
        set.compressed().num_observations(),
        out.display(),
        stats.mean_episode_reward()
    );
    Ok(())
}

fn learn(o: LearnOpts) -> Result<(), CliError> {
    let o = LearnOpts {
        traces: Some(required(o.traces, "traces")?),
        method: Some(o.method.unwrap_or(LearnMethod::Ls)),
        u_max: Some(o.u_max.unwrap_or(10)),
        t_max: Some(o.t_max.unwrap_or(100)),
        tabu_size: Some(o.tabu_size.unwrap_or(100)),
        seed: Some(o.seed.unwrap_or(0)),
        compress: Some(o.compress.unwrap_or(false)),
        time_limit: o.time_limit,
        out: Some(required(o.out, "out")?),
    };
    let seed = o.seed.unwrap();
    let meta = RunMeta::new("learn", seed, &o);
    let traces = o.traces.clone().unwrap();
    let out = o.out.clone().unwrap();
    if let Some(t) = o.time_limit {
        if !(t.is_finite() && t > 0.0) {
            return Err(CliError::Config(format!(
                "time_limit must be positive, got {t}"
            )));
        }
    }
    let corpus = read_traces(&traces)?;
    let (tree, compressed) = tree_for(&corpus, o.compress.unwrap())?;
    let u_max = o.u_max.unwrap();
    let (rm, cost, progress): (RewardMachine, f64, Option<Vec<u8>>) = match o.method.unwrap() {
        LearnMethod::Exact => {
            let res = exact_enumerate(&tree, u_max, compressed)?;
            (res.rm, res.cost, None)
        }
        method => {
            let cfg = SearchConfig {
                u_max,
                t_max: o.t_max.unwrap(),
                tabu_size: o.tabu_size.unwrap(),
                seed,
                compressed_mode: compressed,
                wall_clock_limit: o.time_limit.map(Duration::from_secs_f64),
            };
            let res = if method == LearnMethod::Ls {
                local_search(&tree, &cfg)?
            } else {
                tabu_search(&tree, &cfg)?
            };
            let mut csv = Vec::new();
            res.write_progress_csv(&mut csv).expect("writing to memory");
            (res.best_rm, res.best_cost, Some(csv))
        }
    };
    let mut doc_meta = meta.json();
    doc_meta["cost"] = cost.into();
    doc_meta["compressed"] = compressed.into();
    write_file(
        &with_ext(&out, "json"),
        &rm.to_json_with_meta(tree.alphabet(), Some(&doc_meta)),
    )?;
    write_file(
        &with_ext(&out, "dot"),
        &format!("// {}\n{}", meta.line(), rm.to_dot(tree.alphabet())),
    )?;
    if let Some(csv) = progress {
        let path = with_ext(&out, "csv");
        let mut w = create(&path)?;
        writeln!(w, "# {}", meta.line())
            .and_then(|_| w.write_all(&csv))
            .and_then(|_| w.flush())
            .map_err(io_err(&path))?;
    }
    println!(
        "cost {cost:.9} states {} nodes {} symbols {}",
        rm.num_states(),
        tree.len(),
        tree.sigma().len()
    );
    Ok(())
}

fn export(o: ExportOpts) -> Result<(), CliError> {
    let o = ExportOpts {
        traces: Some(required(o.traces, "traces")?),
        format: Some(required(o.format, "format")?),
        u_max: Some(o.u_max.unwrap_or(10)),
        compress: Some(o.compress.unwrap_or(false)),
        m_cap: Some(o.m_cap.unwrap_or(MCapArg::Distinct)),
        out: Some(required(o.out, "out")?),
    };
    let meta = RunMeta::new("export", 0, &o);
    let out = o.out.clone().unwrap();
    let corpus = read_traces(o.traces.as_ref().unwrap())?;
    let (tree, compressed) = tree_for(&corpus, o.compress.unwrap())?;
    let u_max = o.u_max.unwrap();
    let text = match o.format.unwrap() {
        ModelFormat::Milp => {
            let m_cap = if o.m_cap == Some(MCapArg::Full) {
                MCap::Full
            } else {
                MCap::Distinct
            };
            let model = build_milp(
                &tree,
                u_max,
                compressed,
                &MilpOptions {
                    m_cap,
                    ..MilpOptions::default()
                },
            )?;
            format!("\\ run {}\n{}", meta.line(), model.to_lp())
        }
        ModelFormat::Cp => format!(
            "# run {}\n{}",
            meta.line(),
            build_cp(&tree, u_max, compressed)?.to_text()
        ),
    };
    write_file(&out, &text)?;
    println!(
        "wrote {} ({} nodes, {} symbols)",
        out.display(),
        tree.len(),
        tree.sigma().len()
    );
    Ok(())
}

fn fixed_machine(spec: &str, domain: Domain) -> Result<RewardMachine, CliError> {
    if spec == "perfect" {
        return match domain {
            Domain::Cookie => Ok(perfect_cookie_rm()),
            Domain::Gravity => Ok(perfect_gravity_rm()),
            other => Err(CliError::Config(format!(
                "no hand-written machine for the {other} domain"
            ))),
        };
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let (rm, alphabet) = RewardMachine::from_json(&text)?;
    if alphabet != domain.alphabet() {
        return Err(CliError::Config(format!(
            "{spec}: propositions do not match the {domain} domain"
        )));
    }
    Ok(rm)
}

fn rl(o: RlOpts) -> Result<(), CliError> {
    let o = RlOpts {
        domain: Some(required(o.domain, "domain")?),
        t_w: Some(o.t_w.unwrap_or(200_000)),
        t_train: Some(o.t_train.unwrap_or(2_000_000)),
        epsilon: Some(o.epsilon.unwrap_or(0.1)),
        gamma: Some(o.gamma.unwrap_or(0.9)),
        alpha: Some(o.alpha.unwrap_or(0.1)),
        q_init: Some(o.q_init.unwrap_or(1.0)),
        method: Some(o.method.unwrap_or(MethodArg::Ls)),
        u_max: Some(o.u_max.unwrap_or(10)),
        t_max: Some(o.t_max.unwrap_or(100)),
        tabu_size: Some(o.tabu_size.unwrap_or(100)),
        compress: Some(o.compress.unwrap_or(true)),
        qrm: Some(o.qrm.unwrap_or(true)),
        relearn_budget: Some(o.relearn_budget.unwrap_or(1000)),
        fixed_rm: o.fixed_rm,
        log_every: Some(o.log_every.unwrap_or(10_000)),
        seed: Some(o.seed.unwrap_or(0)),
        out: Some(required(o.out, "out")?),
    };
    let domain = o.domain.unwrap();
    let seed = o.seed.unwrap();
    let meta = RunMeta::new("rl", seed, &o);
    let out = o.out.clone().unwrap();
    let fixed_rm = o
        .fixed_rm
        .as_deref()
        .map(|s| fixed_machine(s, domain))
        .transpose()?;
    let cfg = LoopConfig {
        t_w: o.t_w.unwrap(),
        t_train: o.t_train.unwrap(),
        epsilon: o.epsilon.unwrap(),
        gamma: o.gamma.unwrap(),
        alpha: o.alpha.unwrap(),
        q_init: o.q_init.unwrap(),
        method: o.method.unwrap().into(),
        search: SearchConfig {
            u_max: o.u_max.unwrap(),
            t_max: o.t_max.unwrap(),
            tabu_size: o.tabu_size.unwrap(),
            seed,
            compressed_mode: o.compress.unwrap(),
            wall_clock_limit: None,
        },
        qrm: o.qrm.unwrap(),
        relearn_budget: o.relearn_budget.unwrap(),
        seed,
        fixed_rm,
        log_every: o.log_every.unwrap(),
    };
    let res = run_joint_loop(domain, &cfg)?;
    let csv = with_ext(&out, "csv");
    let mut w = create(&csv)?;
    writeln!(w, "# {}", meta.line())
        .and_then(|_| res.write_reward_csv(&mut w))
        .and_then(|_| w.flush())
        .map_err(io_err(&csv))?;
    let alphabet = domain.alphabet();
    let mut doc_meta = meta.json();
    doc_meta["relearns"] = res.relearns.into();
    doc_meta["adoptions"] = res.adoptions.len().into();
    write_file(
        &with_ext(&out, "json"),
        &res.rm.to_json_with_meta(&alphabet, Some(&doc_meta)),
    )?;
    write_file(
        &with_ext(&out, "dot"),
        &format!("// {}\n{}", meta.line(), res.rm.to_dot(&alphabet)),
    )?;
    let episodes = res.episode_rewards.len();
    let mean = if episodes == 0 {
        0.0
    } else {
        res.episode_rewards.iter().sum::<f64>() / episodes as f64
    };
    println!(
        "episodes {episodes} mean reward {mean:.3} relearns {} adoptions {} final states {}",
        res.relearns,
        res.adoptions.len(),
        res.rm.num_states()
    );
    Ok(())
}
