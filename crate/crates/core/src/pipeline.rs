//! Claim verification: build graphs, plan, then check triplets one at a time,
//! grounding placeholders as they are completed. The first false step ends
//! the run with a Refuted label.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{AgentError, Backend};
use crate::graph::{substitute, ClaimGraph, EvidenceGraph, Placeholder, Triplet};
use crate::planner::{plan, Plan, TieBreak};
use crate::retrieval::{concat_evidence, Bm25Params, Index};
use crate::symbolic::{Grounding, DEFAULT_PLACEHOLDER_LIMIT};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Supported,
    Refuted,
}

impl Label {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Label::Supported
        } else {
            Label::Refuted
        }
    }

    pub fn as_bool(self) -> bool {
        self == Label::Supported
    }

    pub fn flip(self) -> Self {
        Label::from_bool(!self.as_bool())
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Supported => "Supported",
            Label::Refuted => "Refuted",
        })
    }
}

/// Accepts the dataset spellings used by common fact-checking corpora.
impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_uppercase().as_str() {
            "SUPPORTED" | "SUPPORTS" | "SUPPORT" | "TRUE" | "1" => Ok(Label::Supported),
            "REFUTED" | "REFUTES" | "REFUTE" | "NOT_SUPPORTED" | "NOT SUPPORTED" | "CONTRADICT"
            | "CONTRADICTS" | "FALSE" | "0" => Ok(Label::Refuted),
            _ => Err(format!("unknown label {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvidenceMode {
    /// Evidence text is supplied with each claim.
    #[default]
    GoldEvidence,
    /// Evidence is the top-k paragraphs retrieved for the claim.
    OpenBook,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    #[default]
    Symbolic,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Ablation {
    pub use_evidence_graph: bool,
    pub pass_raw_evidence: bool,
    pub use_planning: bool,
}

impl Default for Ablation {
    fn default() -> Self {
        Ablation {
            use_evidence_graph: true,
            pass_raw_evidence: true,
            use_planning: true,
        }
    }
}

impl Ablation {
    /// Raw evidence text only.
    pub fn without_evidence_graph() -> Self {
        Ablation {
            use_evidence_graph: false,
            ..Ablation::default()
        }
    }

    /// Evidence graph only; the raw text is withheld from match and completion.
    pub fn only_evidence_graph() -> Self {
        Ablation {
            pass_raw_evidence: false,
            ..Ablation::default()
        }
    }

    /// Extraction order instead of priority order.
    pub fn without_planning() -> Self {
        Ablation {
            use_planning: false,
            ..Ablation::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Limits {
    pub max_placeholders: usize,
    pub max_triples: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_placeholders: DEFAULT_PLACEHOLDER_LIMIT,
            max_triples: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub mode: EvidenceMode,
    pub backend: BackendKind,
    pub ablation: Ablation,
    pub tie_break: TieBreak,
    pub top_k: usize,
    pub limits: Limits,
    pub bm25: Bm25Params<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mode: EvidenceMode::default(),
            backend: BackendKind::default(),
            ablation: Ablation::default(),
            tie_break: TieBreak::default(),
            top_k: 5,
            limits: Limits::default(),
            bm25: Bm25Params::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("gold-evidence mode needs evidence text")]
    MissingEvidence,
    #[error("claim graph has {found} {what}, above the limit of {limit}")]
    Limit {
        what: &'static str,
        found: usize,
        limit: usize,
    },
    #[error("claim graph construction: {0}")]
    ClaimGraph(#[source] AgentError),
    #[error("evidence graph construction: {0}")]
    EvidenceGraph(#[source] AgentError),
    #[error("step {index}: {source}")]
    Step {
        index: usize,
        #[source]
        source: AgentError,
    },
    #[error("baseline: {0}")]
    Baseline(#[source] AgentError),
    #[error("decomposition produced no sub-claims")]
    NoSubClaims,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Match,
    Completion,
    /// Still two placeholders when reached: scored false, no agent call.
    Ungroundable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub index: usize,
    /// The triplet as executed, after earlier groundings were substituted.
    pub triplet: Triplet,
    pub kind: StepKind,
    pub verdict: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub placeholder: Option<Placeholder>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grounded: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub alternatives: Vec<String>,
    /// Ids of the evidence triplets shown to the agent.
    pub evidence_ids: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceSource {
    pub mode: EvidenceMode,
    /// Retrieved document ids in rank order (open-book only).
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub doc_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub claim: String,
    pub evidence: EvidenceSource,
    pub claim_graph: ClaimGraph,
    /// Final evidence graph, including augmentations made after groundings.
    pub evidence_graph: EvidenceGraph,
    pub plan: Plan,
    pub steps: Vec<Step>,
    pub groundings: Grounding,
    pub early_stopped_at: Option<usize>,
    pub label: Label,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}

impl VerificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub struct Verifier {
    config: PipelineConfig,
    backend: Arc<dyn Backend>,
    index: Option<Arc<Index<f64>>>,
}

impl Verifier {
    pub fn new(
        config: PipelineConfig,
        backend: Arc<dyn Backend>,
        index: Option<Arc<Index<f64>>>,
    ) -> Result<Self, PipelineError> {
        let a = config.ablation;
        if config.mode == EvidenceMode::OpenBook && index.is_none() {
            return Err(PipelineError::Config(
                "open-book mode needs a retrieval index".into(),
            ));
        }
        if config.mode == EvidenceMode::OpenBook && config.top_k == 0 {
            return Err(PipelineError::Config("top-k must be at least 1".into()));
        }
        if !a.use_evidence_graph && !a.pass_raw_evidence {
            return Err(PipelineError::Config(
                "disabling both the evidence graph and raw evidence leaves nothing to check against".into(),
            ));
        }
        if !a.use_evidence_graph && !backend.reads_raw_text() {
            return Err(PipelineError::Config(format!(
                "backend {} cannot check triplets against raw text; keep the evidence graph enabled",
                backend.id()
            )));
        }
        Ok(Verifier {
            config,
            backend,
            index,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn backend(&self) -> &dyn Backend {
        self.backend.as_ref()
    }

    /// Evidence text and retrieved doc ids for `claim`.
    pub fn resolve_evidence(
        &self,
        claim: &str,
        evidence: Option<&str>,
    ) -> Result<(String, EvidenceSource), PipelineError> {
        match self.config.mode {
            EvidenceMode::GoldEvidence => {
                let text = evidence.ok_or(PipelineError::MissingEvidence)?;
                Ok((
                    text.to_string(),
                    EvidenceSource {
                        mode: EvidenceMode::GoldEvidence,
                        doc_ids: Vec::new(),
                    },
                ))
            }
            EvidenceMode::OpenBook => {
                let index = self.index.as_ref().expect("checked in new");
                let hits = index.retrieve(claim, self.config.top_k, &self.config.bm25);
                Ok((
                    concat_evidence(&hits),
                    EvidenceSource {
                        mode: EvidenceMode::OpenBook,
                        doc_ids: hits.iter().map(|h| h.document.doc_id.clone()).collect(),
                    },
                ))
            }
        }
    }

    pub fn check_claim(
        &self,
        claim: &str,
        evidence: Option<&str>,
    ) -> Result<VerificationReport, PipelineError> {
        let (evidence, source) = self.resolve_evidence(claim, evidence)?;
        let backend = self.backend.as_ref();
        let ablation = self.config.ablation;
        let mut warnings = Vec::new();

        let gc = backend
            .construct_claim_graph(claim)
            .map_err(PipelineError::ClaimGraph)?;
        let limits = self.config.limits;
        if gc.unknowns().len() > limits.max_placeholders {
            return Err(PipelineError::Limit {
                what: "placeholders",
                found: gc.unknowns().len(),
                limit: limits.max_placeholders,
            });
        }
        if gc.len() > limits.max_triples {
            return Err(PipelineError::Limit {
                what: "triplets",
                found: gc.len(),
                limit: limits.max_triples,
            });
        }
        if gc.is_empty() {
            warnings.push("claim graph is empty; label is vacuously Supported".to_string());
        }

        let mut ge = EvidenceGraph::default();
        if ablation.use_evidence_graph && !gc.is_empty() {
            let built = backend
                .construct_evidence_graph(&evidence, gc.known_entities())
                .map_err(PipelineError::EvidenceGraph)?;
            warnings.extend(built.warnings);
            ge = built.graph;
        }

        let order = if ablation.use_planning {
            plan(&gc, self.config.tie_break)
        } else {
            Plan::identity(&gc)
        };

        let raw = ablation.pass_raw_evidence.then_some(evidence.as_str());
        let mut pending: Vec<Triplet> = order.triplets().to_vec();
        let mut bound: BTreeSet<String> = gc.known_entities().clone();
        let mut groundings = Grounding::new();
        let mut steps = Vec::with_capacity(pending.len());
        let mut early_stopped_at = None;

        for index in 0..pending.len() {
            let t = pending[index].clone();
            let sub = if ablation.use_evidence_graph {
                ge.neighborhood(&t)
            } else {
                EvidenceGraph::default()
            };
            let step_err = |source| PipelineError::Step { index, source };
            let unknowns = t.unknowns();
            let mut step = Step {
                index,
                triplet: t.clone(),
                kind: StepKind::Match,
                verdict: false,
                placeholder: None,
                grounded: None,
                alternatives: Vec::new(),
                evidence_ids: sub.ids(),
                note: None,
            };
            match unknowns.len() {
                0 => {
                    step.verdict = backend.agent_match(&t, &sub, raw).map_err(step_err)?;
                }
                1 => {
                    let x = unknowns[0];
                    step.kind = StepKind::Completion;
                    step.placeholder = Some(x);
                    let completion = backend
                        .agent_complete(&t, &sub, raw, &bound)
                        .map_err(step_err)?;
                    step.alternatives = completion.alternatives;
                    if let Some(e) = completion.entity {
                        if bound.contains(&e) {
                            step.note = Some(format!("{e:?} is already bound in the claim"));
                            step.grounded = Some(e);
                        } else {
                            groundings
                                .insert(x, &e, gc.known_entities())
                                .map_err(|err| step_err(err.into()))?;
                            substitute_in_place(&mut pending[index + 1..], x, &e);
                            bound.insert(e.clone());
                            if ablation.use_evidence_graph {
                                let only: BTreeSet<String> = [e.clone()].into();
                                let extra = backend
                                    .construct_evidence_graph(&evidence, &only)
                                    .map_err(step_err)?;
                                warnings.extend(extra.warnings);
                                ge = ge.union(&extra.graph);
                            }
                            step.grounded = Some(e);
                            step.verdict = true;
                        }
                    }
                }
                _ => {
                    step.kind = StepKind::Ungroundable;
                    step.note = Some("ungroundable: two placeholders remain".to_string());
                    step.evidence_ids.clear();
                }
            }
            let verdict = step.verdict;
            steps.push(step);
            if !verdict {
                early_stopped_at = Some(index);
                break;
            }
        }

        let label = Label::from_bool(early_stopped_at.is_none());
        Ok(VerificationReport {
            schema_version: REPORT_SCHEMA_VERSION,
            claim: claim.trim().to_string(),
            evidence: source,
            claim_graph: gc,
            evidence_graph: ge,
            plan: order,
            steps,
            groundings,
            early_stopped_at,
            label,
            warnings,
        })
    }
}

fn substitute_in_place(triplets: &mut [Triplet], x: Placeholder, name: &str) {
    let replaced = substitute(triplets, x, name);
    triplets.clone_from_slice(&replaced);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Direct,
    Decomposition,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineOutcome {
    pub label: Label,
    /// (sub-claim, verdict); a single entry holding the claim for `Direct`.
    pub verdicts: Vec<(String, bool)>,
}

/// Prompt-only baselines: one direct verdict, or the conjunction of direct
/// verdicts over the model's sub-claims.
pub fn run_baseline(
    claim: &str,
    evidence: &str,
    which: BaselineKind,
    backend: &dyn Backend,
) -> Result<BaselineOutcome, PipelineError> {
    let sub_claims = match which {
        BaselineKind::Direct => vec![claim.trim().to_string()],
        BaselineKind::Decomposition => {
            let subs = backend.decompose(claim).map_err(|e| match e {
                AgentError::Decomposition { .. } => PipelineError::NoSubClaims,
                other => PipelineError::Baseline(other),
            })?;
            if subs.is_empty() {
                return Err(PipelineError::NoSubClaims);
            }
            subs
        }
    };
    let mut verdicts = Vec::with_capacity(sub_claims.len());
    for s in sub_claims {
        let v = backend
            .baseline_direct(&s, evidence)
            .map_err(PipelineError::Baseline)?;
        verdicts.push((s, v));
    }
    Ok(BaselineOutcome {
        label: Label::from_bool(verdicts.iter().all(|(_, v)| *v)),
        verdicts,
    })
}
