//! Labelled traces, trace compression and the JSON-lines corpus format.
//!
//! A corpus file starts with one header record followed by one trace per
//! line:
//!
//! ```text
//! {"type":"header","format":"lrm-traces","version":1,"propositions":["a","b"],"meta":{...}}
//! {"obs":[["a"],["a","b"],[]],"rewards":[0.0,1.0],"compressed":false}
//! ```
//!
//! Observations are arrays of the names of true propositions, sorted.
//! `rewards[t]` is the reward received on the step into `obs[t + 1]`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::obs::{Alphabet, HighLevelObs};

pub const FORMAT_NAME: &str = "lrm-traces";
pub const FORMAT_VERSION: u32 = 1;

/// One environment transition: the action taken, the reward received and
/// the observation that followed.
#[derive(Debug, Clone, PartialEq)]
pub struct RawStep<O> {
    pub action: usize,
    pub reward: f64,
    pub obs: O,
}

/// A sequence of high-level observations `σ_0..σ_T` with the `T` rewards
/// received between them.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledTrace {
    obs: Vec<HighLevelObs>,
    rewards: Vec<f64>,
    compressed: bool,
}

impl LabelledTrace {
    pub fn new(obs: Vec<HighLevelObs>, rewards: Vec<f64>) -> Result<Self> {
        Self::with_flag(obs, rewards, false)
    }

    pub fn with_flag(obs: Vec<HighLevelObs>, rewards: Vec<f64>, compressed: bool) -> Result<Self> {
        if obs.is_empty() {
            return Err(Error::Contract(
                "a trace holds at least its initial observation".into(),
            ));
        }
        if rewards.len() + 1 != obs.len() {
            return Err(Error::Contract(format!(
                "trace with {} observations needs {} rewards, got {}",
                obs.len(),
                obs.len() - 1,
                rewards.len()
            )));
        }
        if compressed && obs.windows(2).skip(1).any(|w| w[0] == w[1]) {
            return Err(Error::Contract(
                "compressed trace repeats an observation after index 1".into(),
            ));
        }
        Ok(LabelledTrace {
            obs,
            rewards,
            compressed,
        })
    }

    /// A trace holding only the initial observation.
    pub fn start(initial: HighLevelObs) -> Self {
        LabelledTrace {
            obs: vec![initial],
            rewards: Vec::new(),
            compressed: false,
        }
    }

    /// Appends one step. Fails on a compressed trace.
    pub fn push(&mut self, reward: f64, obs: HighLevelObs) -> Result<()> {
        if self.compressed {
            return Err(Error::Contract("cannot extend a compressed trace".into()));
        }
        self.rewards.push(reward);
        self.obs.push(obs);
        Ok(())
    }

    pub fn obs(&self) -> &[HighLevelObs] {
        &self.obs
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn is_compressed(&self) -> bool {
        self.compressed
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().fold(0.0, |acc, c| acc + c)
    }

    /// Collapses runs of equal consecutive observations from index 1 on.
    ///
    /// `σ_0` is always kept, so `σ_1` survives even when it equals `σ_0`.
    /// Rewards of a collapsed run are summed onto the step that enters it,
    /// which keeps the total trace reward unchanged. Compressing a trace that
    /// is already compressed returns it unchanged.
    pub fn compress(&self) -> LabelledTrace {
        if self.compressed {
            return self.clone();
        }
        let mut obs = vec![self.obs[0].clone()];
        let mut rewards: Vec<f64> = Vec::new();
        for (t, sigma) in self.obs.iter().enumerate().skip(1) {
            let r = self.rewards[t - 1];
            if t >= 2 && *sigma == self.obs[t - 1] {
                *rewards.last_mut().expect("run has an entering step") += r;
            } else {
                obs.push(sigma.clone());
                rewards.push(r);
            }
        }
        LabelledTrace {
            obs,
            rewards,
            compressed: true,
        }
    }
}

/// Builds a labelled trace from an initial observation and raw steps.
///
/// `label(None, o0)` labels the initial observation; every later position is
/// labelled from the previous observation, the action and the new one.
pub fn label_trace<O, L>(initial: &O, steps: &[RawStep<O>], mut label: L) -> LabelledTrace
where
    L: FnMut(Option<(&O, usize)>, &O) -> HighLevelObs,
{
    let mut trace = LabelledTrace::start(label(None, initial));
    let mut prev = initial;
    for step in steps {
        trace.rewards.push(step.reward);
        trace.obs.push(label(Some((prev, step.action)), &step.obs));
        prev = &step.obs;
    }
    trace
}

/// A corpus of labelled traces over one alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet {
    alphabet: Alphabet,
    traces: Vec<LabelledTrace>,
    meta: Value,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeaderRecord {
    #[serde(rename = "type")]
    kind: String,
    format: String,
    version: u32,
    propositions: Vec<String>,
    #[serde(default)]
    meta: Value,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceRecord {
    obs: Vec<Vec<String>>,
    rewards: Vec<f64>,
    #[serde(default)]
    compressed: bool,
}

impl TraceSet {
    pub fn new(alphabet: Alphabet) -> Self {
        TraceSet {
            alphabet,
            traces: Vec::new(),
            meta: Value::Null,
        }
    }

    pub fn from_traces(alphabet: Alphabet, traces: Vec<LabelledTrace>) -> Result<Self> {
        let mut set = TraceSet::new(alphabet);
        for trace in traces {
            set.push(trace)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, trace: LabelledTrace) -> Result<()> {
        for sigma in trace.obs() {
            self.alphabet.check(sigma)?;
        }
        self.traces.push(trace);
        Ok(())
    }

    /// Replaces trace `index`.
    pub fn replace(&mut self, index: usize, trace: LabelledTrace) -> Result<()> {
        for sigma in trace.obs() {
            self.alphabet.check(sigma)?;
        }
        let slot = self
            .traces
            .get_mut(index)
            .ok_or_else(|| Error::Contract(format!("no trace at index {index}")))?;
        *slot = trace;
        Ok(())
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn traces(&self) -> &[LabelledTrace] {
        &self.traces
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    /// Total number of observations over all traces.
    pub fn num_observations(&self) -> usize {
        self.traces.iter().map(LabelledTrace::len).sum()
    }

    pub fn meta(&self) -> &Value {
        &self.meta
    }

    pub fn set_meta(&mut self, meta: Value) {
        self.meta = meta;
    }

    /// `Some(flag)` when every trace shares the same compression flag.
    pub fn compression(&self) -> Option<bool> {
        let first = self.traces.first()?.is_compressed();
        self.traces
            .iter()
            .all(|t| t.is_compressed() == first)
            .then_some(first)
    }

    pub fn compressed(&self) -> TraceSet {
        TraceSet {
            alphabet: self.alphabet.clone(),
            traces: self.traces.iter().map(LabelledTrace::compress).collect(),
            meta: self.meta.clone(),
        }
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header = HeaderRecord {
            kind: "header".into(),
            format: FORMAT_NAME.into(),
            version: FORMAT_VERSION,
            propositions: self.alphabet.names().map(str::to_owned).collect(),
            meta: self.meta.clone(),
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        for trace in &self.traces {
            let record = TraceRecord {
                obs: trace
                    .obs()
                    .iter()
                    .map(|o| self.alphabet.sorted_names(o))
                    .collect(),
                rewards: trace.rewards().to_vec(),
                compressed: trace.is_compressed(),
            };
            serde_json::to_writer(&mut out, &record)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut set: Option<TraceSet> = None;
        for (idx, line) in input.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            match set.as_mut() {
                None => {
                    let header: HeaderRecord = serde_json::from_str(&line)
                        .map_err(|e| Error::parse(lineno, format!("bad header: {e}")))?;
                    if header.kind != "header" || header.format != FORMAT_NAME {
                        return Err(Error::parse(
                            lineno,
                            "first record is not an lrm-traces header",
                        ));
                    }
                    if header.version != FORMAT_VERSION {
                        return Err(Error::parse(
                            lineno,
                            format!("unsupported version {}", header.version),
                        ));
                    }
                    let alphabet = Alphabet::new(header.propositions)
                        .map_err(|e| Error::parse(lineno, e.to_string()))?;
                    let mut fresh = TraceSet::new(alphabet);
                    fresh.meta = header.meta;
                    set = Some(fresh);
                }
                Some(set) => {
                    let record: TraceRecord = serde_json::from_str(&line)
                        .map_err(|e| Error::parse(lineno, format!("bad trace: {e}")))?;
                    if let Some(r) = record.rewards.iter().find(|r| !r.is_finite()) {
                        return Err(Error::parse(lineno, format!("non-finite reward {r}")));
                    }
                    let obs = record
                        .obs
                        .iter()
                        .map(|names| set.alphabet.obs(names))
                        .collect::<Result<Vec<_>>>()
                        .map_err(|e| Error::parse(lineno, e.to_string()))?;
                    let trace = LabelledTrace::with_flag(obs, record.rewards, record.compressed)
                        .map_err(|e| Error::parse(lineno, e.to_string()))?;
                    set.traces.push(trace);
                }
            }
        }
        set.ok_or_else(|| Error::parse(0, "missing header record"))
    }

    pub fn from_jsonl_str(text: &str) -> Result<Self> {
        Self::read_jsonl(text.as_bytes())
    }
}
