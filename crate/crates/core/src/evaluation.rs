//! Dataset loading, batch evaluation and macro-F1.
//!
//! Dataset files hold one JSON object per line:
//!
//! ```text
//! {"id": "h-17", "claim": "...", "label": "SUPPORTS", "evidence": "...", "hops": 2, "dataset": "hover"}
//! ```
//!
//! `id` (or `claim_id`), `claim` and `label` are required. `evidence` is
//! needed in gold-evidence mode. `hops` (or `num_hops`) must be 2, 3 or 4 and
//! is only allowed on HOVER-style records. `dataset` may be omitted when the
//! loader is given a default tag.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::pipeline::{Label, PipelineError, Verifier};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub claim_id: String,
    pub claim: String,
    pub label: Label,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub evidence: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub hops: Option<u8>,
    pub dataset: String,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Open {
        path: String,
        source: std::io::Error,
    },
    #[error("read error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Line { line: usize, reason: String },
}

#[derive(Deserialize)]
struct RawRecord {
    #[serde(alias = "id")]
    claim_id: Value,
    claim: Option<String>,
    label: Option<Value>,
    #[serde(default)]
    evidence: Option<String>,
    #[serde(default, alias = "num_hops")]
    hops: Option<u8>,
    #[serde(default)]
    dataset: Option<String>,
}

fn is_hover(tag: &str) -> bool {
    tag.to_ascii_lowercase().contains("hover")
}

fn parse_record(line: &str, default_tag: Option<&str>) -> Result<EvalRecord, String> {
    let raw: RawRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let claim_id = match raw.claim_id {
        Value::String(s) => s,
        Value::Number(n) => n.to_string(),
        other => return Err(format!("bad claim id {other}")),
    };
    let claim = raw
        .claim
        .filter(|c| !c.trim().is_empty())
        .ok_or("missing field `claim`")?;
    let label = match raw.label.ok_or("missing field `label`")? {
        Value::String(s) => s.parse::<Label>()?,
        Value::Bool(b) => Label::from_bool(b),
        other => return Err(format!("unknown label {other}")),
    };
    let dataset = raw
        .dataset
        .or_else(|| default_tag.map(str::to_string))
        .ok_or("record has no `dataset` tag and no default was given")?;
    if let Some(h) = raw.hops {
        if !(2..=4).contains(&h) {
            return Err(format!("hop count {h} outside 2..=4"));
        }
        if !is_hover(&dataset) {
            return Err(format!(
                "hop count on non-HOVER record (dataset {dataset:?})"
            ));
        }
    }
    Ok(EvalRecord {
        claim_id,
        claim,
        label,
        evidence: raw.evidence,
        hops: raw.hops,
        dataset,
    })
}

/// Stream records from a reader; blank lines are skipped.
pub fn read_dataset<'a, R: BufRead + 'a>(
    reader: R,
    default_tag: Option<&'a str>,
) -> impl Iterator<Item = Result<EvalRecord, DatasetError>> + 'a {
    reader
        .lines()
        .enumerate()
        .filter_map(move |(i, line)| match line {
            Err(e) => Some(Err(DatasetError::Io(e))),
            Ok(l) if l.trim().is_empty() => None,
            Ok(l) => Some(
                parse_record(&l, default_tag).map_err(|reason| DatasetError::Line {
                    line: i + 1,
                    reason,
                }),
            ),
        })
}

pub fn load_dataset<'a>(
    path: &Path,
    default_tag: Option<&'a str>,
) -> Result<impl Iterator<Item = Result<EvalRecord, DatasetError>> + 'a, DatasetError> {
    let file = File::open(path).map_err(|source| DatasetError::Open {
        path: path.display().to_string(),
        source,
    })?;
    Ok(read_dataset(BufReader::new(file), default_tag))
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("no records to score")]
    Empty,
}

/// `counts[gold][predicted]`, index 0 = Supported, 1 = Refuted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub counts: [[u64; 2]; 2],
}

fn idx(l: Label) -> usize {
    match l {
        Label::Supported => 0,
        Label::Refuted => 1,
    }
}

impl Confusion {
    pub fn add(&mut self, gold: Label, predicted: Label) {
        self.counts[idx(gold)][idx(predicted)] += 1;
    }

    pub fn get(&self, gold: Label, predicted: Label) -> u64 {
        self.counts[idx(gold)][idx(predicted)]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn merge(&mut self, other: &Confusion) {
        for g in 0..2 {
            for p in 0..2 {
                self.counts[g][p] += other.counts[g][p];
            }
        }
    }

    /// Precision, recall and F1 of `class`, with 0 for empty denominators.
    pub fn scores<S: Scalar>(&self, class: Label) -> ClassScores<S> {
        let other = class.flip();
        let tp = self.get(class, class);
        let fp = self.get(other, class);
        let fn_ = self.get(class, other);
        let ratio = |num: u64, den: u64| {
            if den == 0 {
                S::zero()
            } else {
                S::from_count(num) / S::from_count(den)
            }
        };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let sum = precision.clone() + recall.clone();
        let f1 = if sum == S::zero() {
            S::zero()
        } else {
            S::from_count(2) * precision.clone() * recall.clone() / sum
        };
        ClassScores {
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores<S> {
    pub precision: S,
    pub recall: S,
    pub f1: S,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics<S> {
    pub confusion: Confusion,
    pub supported: ClassScores<S>,
    pub refuted: ClassScores<S>,
    pub macro_f1: S,
    /// Macro-F1 per hop count, for records that carry one.
    #[serde(default)]
    pub per_hop: BTreeMap<u8, S>,
    /// Records whose pipeline run failed (scored as Refuted).
    #[serde(default)]
    pub errors: u64,
}

impl<S: Scalar> Metrics<S> {
    pub fn from_confusion(confusion: Confusion) -> Result<Self, MetricError> {
        if confusion.total() == 0 {
            return Err(MetricError::Empty);
        }
        let supported = confusion.scores::<S>(Label::Supported);
        let refuted = confusion.scores::<S>(Label::Refuted);
        let macro_f1 = (supported.f1.clone() + refuted.f1.clone()) / S::from_count(2);
        Ok(Metrics {
            confusion,
            supported,
            refuted,
            macro_f1,
            per_hop: BTreeMap::new(),
            errors: 0,
        })
    }

    pub fn total(&self) -> u64 {
        self.confusion.total()
    }
}

/// Macro-F1 over (gold, predicted) pairs.
pub fn macro_f1<S: Scalar>(pairs: &[(Label, Label)]) -> Result<Metrics<S>, MetricError> {
    let mut c = Confusion::default();
    for (g, p) in pairs {
        c.add(*g, *p);
    }
    Metrics::from_confusion(c)
}

impl fmt::Display for Metrics<f64> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "records   {:>6}   errors {:>4}",
            self.total(),
            self.errors
        )?;
        writeln!(f, "class        precision  recall      f1")?;
        for (name, s) in [("Supported", &self.supported), ("Refuted", &self.refuted)] {
            writeln!(
                f,
                "{name:<12} {:>9.4}  {:>6.4}  {:>6.4}",
                s.precision, s.recall, s.f1
            )?;
        }
        writeln!(f, "macro-F1     {:>9.2}", self.macro_f1 * 100.0)?;
        for (h, m) in &self.per_hop {
            writeln!(f, "  {h}-hop      {:>9.2}", m * 100.0)?;
        }
        let c = &self.confusion;
        writeln!(f, "confusion (gold \\ pred)  S      R")?;
        writeln!(
            f,
            "  Supported            {:>5}  {:>5}",
            c.get(Label::Supported, Label::Supported),
            c.get(Label::Supported, Label::Refuted)
        )?;
        write!(
            f,
            "  Refuted              {:>5}  {:>5}",
            c.get(Label::Refuted, Label::Supported),
            c.get(Label::Refuted, Label::Refuted)
        )
    }
}

/// One line of the per-record report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordOutcome {
    pub claim_id: String,
    pub dataset: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub hops: Option<u8>,
    pub gold: Label,
    pub predicted: Label,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub early_stopped_at: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

/// What a predictor returns for one record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub label: Label,
    pub early_stopped_at: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalOptions {
    pub workers: usize,
    pub abort_on_error: bool,
    /// Records handed to the pool at a time; bounds memory on large files.
    pub chunk_size: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            workers: 1,
            abort_on_error: false,
            chunk_size: 512,
        }
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("record {claim_id}: {reason}")]
    Record { claim_id: String, reason: String },
    #[error("worker pool: {0}")]
    Pool(String),
    #[error("writing report: {0}")]
    Report(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub metrics: Metrics<f64>,
    pub outcomes: Vec<RecordOutcome>,
}

/// Aggregate outcomes into overall and per-hop metrics.
pub fn summarize<S: Scalar>(outcomes: &[RecordOutcome]) -> Result<Metrics<S>, MetricError> {
    let mut overall = Confusion::default();
    let mut hops: BTreeMap<u8, Confusion> = BTreeMap::new();
    for o in outcomes {
        overall.add(o.gold, o.predicted);
        if let Some(h) = o.hops {
            hops.entry(h).or_default().add(o.gold, o.predicted);
        }
    }
    let mut m = Metrics::<S>::from_confusion(overall)?;
    for (h, c) in hops {
        m.per_hop
            .insert(h, Metrics::<S>::from_confusion(c)?.macro_f1);
    }
    m.errors = outcomes.iter().filter(|o| o.error.is_some()).count() as u64;
    Ok(m)
}

/// Run `predict` over every record on a pool of `workers` threads. Report
/// lines are written in input order. Failed records are scored Refuted and
/// counted, unless `abort_on_error` is set.
pub fn run_eval_with<I, P, W>(
    records: I,
    options: EvalOptions,
    predict: P,
    mut report: Option<W>,
) -> Result<EvalSummary, EvalError>
where
    I: IntoIterator<Item = Result<EvalRecord, DatasetError>>,
    P: Fn(&EvalRecord) -> Result<Prediction, String> + Sync,
    W: Write,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers.max(1))
        .build()
        .map_err(|e| EvalError::Pool(e.to_string()))?;
    let mut outcomes = Vec::new();
    let mut chunk = Vec::with_capacity(options.chunk_size);
    let mut records = records.into_iter().peekable();
    while records.peek().is_some() {
        chunk.clear();
        while chunk.len() < options.chunk_size.max(1) {
            match records.next() {
                Some(r) => chunk.push(r?),
                None => break,
            }
        }
        let results: Vec<RecordOutcome> = pool.install(|| {
            chunk
                .par_iter()
                .map(|rec| {
                    let (predicted, early_stopped_at, error) = match predict(rec) {
                        Ok(p) => (p.label, p.early_stopped_at, None),
                        Err(e) => (Label::Refuted, None, Some(e)),
                    };
                    RecordOutcome {
                        claim_id: rec.claim_id.clone(),
                        dataset: rec.dataset.clone(),
                        hops: rec.hops,
                        gold: rec.label,
                        predicted,
                        early_stopped_at,
                        error,
                    }
                })
                .collect()
        });
        for o in results {
            if let Some(reason) = &o.error {
                if options.abort_on_error {
                    return Err(EvalError::Record {
                        claim_id: o.claim_id,
                        reason: reason.clone(),
                    });
                }
                log::warn!("record {}: {reason}", o.claim_id);
            }
            if let Some(w) = report.as_mut() {
                serde_json::to_writer(&mut *w, &o).map_err(std::io::Error::from)?;
                w.write_all(b"\n")?;
            }
            outcomes.push(o);
        }
    }
    if let Some(w) = report.as_mut() {
        w.flush()?;
    }
    let metrics = summarize::<f64>(&outcomes)?;
    Ok(EvalSummary { metrics, outcomes })
}

/// Evaluate every record with the verifier.
pub fn run_eval<I, W>(
    records: I,
    verifier: &Verifier,
    options: EvalOptions,
    report: Option<W>,
) -> Result<EvalSummary, EvalError>
where
    I: IntoIterator<Item = Result<EvalRecord, DatasetError>>,
    W: Write,
{
    run_eval_with(
        records,
        options,
        |rec| {
            verifier
                .check_claim(&rec.claim, rec.evidence.as_deref())
                .map(|r| Prediction {
                    label: r.label,
                    early_stopped_at: r.early_stopped_at,
                })
                .map_err(|e: PipelineError| e.to_string())
        },
        report,
    )
}
