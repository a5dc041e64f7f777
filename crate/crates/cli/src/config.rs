//! Command options. Every option can come from a JSON config file or a flag;
//! flags win. Unknown config keys are rejected.

use std::path::{Path, PathBuf};

use clap::Args;
use lrm::agent::SearchMethod;
use lrm::envs::Domain;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Fills `self`'s unset fields from `file`.
pub trait Merge: Sized {
    fn merge(self, file: Self) -> Self;
}

macro_rules! merge_fields {
    ($ty:ty { $($field:ident),* $(,)? }) => {
        impl Merge for $ty {
            fn merge(self, file: Self) -> Self {
                Self { $($field: self.$field.or(file.$field)),* }
            }
        }
    };
}

pub fn load<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn required<T>(value: Option<T>, name: &str) -> Result<T, CliError> {
    value.ok_or_else(|| {
        CliError::Config(format!(
            "missing required option `{name}` (flag or config key)"
        ))
    })
}

/// Provenance attached to every output.
#[derive(Debug, Clone, Serialize)]
pub struct RunMeta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub config_sha256: String,
}

impl RunMeta {
    /// Hashes the resolved options as JSON, leaving out the output path so
    /// that equal settings give byte-identical files.
    pub fn new<T: Serialize>(command: &'static str, seed: u64, resolved: &T) -> Self {
        let mut value = serde_json::to_value(resolved).expect("options serialise");
        if let Some(map) = value.as_object_mut() {
            map.remove("out");
        }
        let json = serde_json::to_vec(&value).expect("options serialise");
        RunMeta {
            tool: "lrm",
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed,
            config_sha256: hex::encode(Sha256::digest(json)),
        }
    }

    pub fn json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("meta serialises")
    }

    pub fn line(&self) -> String {
        serde_json::to_string(self).expect("meta serialises")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum LearnMethod {
    Ls,
    Ts,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelFormat {
    Milp,
    Cp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MCapArg {
    Distinct,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Ls,
    Ts,
}

impl From<MethodArg> for SearchMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Ls => SearchMethod::Ls,
            MethodArg::Ts => SearchMethod::Ts,
        }
    }
}

pub fn parse_domain(s: &str) -> Result<Domain, String> {
    s.parse().map_err(|e: lrm::Error| e.to_string())
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollectOpts {
    /// cookie, symbol, two_keys or gravity
    #[arg(long, value_parser = parse_domain)]
    pub domain: Option<Domain>,
    /// Number of environment steps [default: 200000]
    #[arg(long)]
    pub steps: Option<usize>,
    /// [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output trace file (JSON lines)
    #[arg(long)]
    pub out: Option<PathBuf>,
}
merge_fields!(CollectOpts {
    domain,
    steps,
    seed,
    out
});

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnOpts {
    /// Input trace file
    #[arg(long)]
    pub traces: Option<PathBuf>,
    /// [default: ls]
    #[arg(long, value_enum)]
    pub method: Option<LearnMethod>,
    /// [default: 10]
    #[arg(long)]
    pub u_max: Option<usize>,
    /// [default: 100]
    #[arg(long)]
    pub t_max: Option<usize>,
    /// [default: 100]
    #[arg(long)]
    pub tabu_size: Option<usize>,
    /// [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Compress traces and enforce self-loop closure [default: false]
    #[arg(long)]
    pub compress: Option<bool>,
    /// Wall-clock limit for ls/ts, in seconds
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Output prefix; writes PREFIX.json, PREFIX.dot and PREFIX.csv
    #[arg(long)]
    pub out: Option<PathBuf>,
}
merge_fields!(LearnOpts {
    traces,
    method,
    u_max,
    t_max,
    tabu_size,
    seed,
    compress,
    time_limit,
    out
});

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportOpts {
    /// Input trace file
    #[arg(long)]
    pub traces: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<ModelFormat>,
    /// [default: 10]
    #[arg(long)]
    pub u_max: Option<usize>,
    /// Compress traces and add the self-loop closure constraints [default: false]
    #[arg(long)]
    pub compress: Option<bool>,
    /// Range of the MILP cardinality index [default: distinct]
    #[arg(long, value_enum)]
    pub m_cap: Option<MCapArg>,
    /// Output model file
    #[arg(long)]
    pub out: Option<PathBuf>,
}
merge_fields!(ExportOpts {
    traces,
    format,
    u_max,
    compress,
    m_cap,
    out
});

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RlOpts {
    #[arg(long, value_parser = parse_domain)]
    pub domain: Option<Domain>,
    /// Random warm-up steps [default: 200000]
    #[arg(long)]
    pub t_w: Option<usize>,
    /// Training steps [default: 2000000]
    #[arg(long)]
    pub t_train: Option<usize>,
    /// [default: 0.1]
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// [default: 0.9]
    #[arg(long)]
    pub gamma: Option<f64>,
    /// [default: 0.1]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Value of unseen Q entries [default: 1.0]
    #[arg(long)]
    pub q_init: Option<f64>,
    /// [default: ls]
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// [default: 10]
    #[arg(long)]
    pub u_max: Option<usize>,
    /// [default: 100]
    #[arg(long)]
    pub t_max: Option<usize>,
    /// [default: 100]
    #[arg(long)]
    pub tabu_size: Option<usize>,
    /// [default: true]
    #[arg(long)]
    pub compress: Option<bool>,
    /// Counterfactual updates for every RM state [default: true]
    #[arg(long)]
    pub qrm: Option<bool>,
    /// [default: 1000]
    #[arg(long)]
    pub relearn_budget: Option<usize>,
    /// Skip learning: `perfect` for the domain's hand-written machine, or an RM JSON file
    #[arg(long)]
    pub fixed_rm: Option<String>,
    /// Steps per reward-log row [default: 10000]
    #[arg(long)]
    pub log_every: Option<usize>,
    /// [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output prefix; writes PREFIX.csv, PREFIX.json and PREFIX.dot
    #[arg(long)]
    pub out: Option<PathBuf>,
}
merge_fields!(RlOpts {
    domain,
    t_w,
    t_train,
    epsilon,
    gamma,
    alpha,
    q_init,
    method,
    u_max,
    t_max,
    tabu_size,
    compress,
    qrm,
    relearn_budget,
    fixed_rm,
    log_every,
    seed,
    out,
});

/// `PREFIX` plus an extension, keeping any dots already in the name.
pub fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_owned();
    name.push(".");
    name.push(ext);
    PathBuf::from(name)
}
