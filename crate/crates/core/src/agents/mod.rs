//! Agent roles behind one backend abstraction.
//!
//! * construction: claim text to claim graph, evidence text to evidence graph
//! * match: is a fully known triplet true under the evidence?
//! * completion: which entity fills the single placeholder of a triplet?
//!
//! [`SymbolicBackend`] answers from fixtures and the exact symbolic checks.
//! [`ModelBackend`] renders prompt templates, sends them to a text-completion
//! endpoint and parses the replies, optionally through a [`TranscriptCache`].

mod cache;
mod client;
mod model;
pub mod prompts;
mod symbolic_backend;

pub use cache::{cache_key, CacheMode, TranscriptCache};
pub use client::{CompletionClient, FnClient, HttpCompletionClient, ModelConfig};
pub use model::{ModelBackend, DEFAULT_RETRIES};
pub use prompts::{PromptSet, PromptTemplate, RenderError, TemplateName};
pub use symbolic_backend::{Fixtures, SymbolicBackend};

use std::collections::BTreeSet;
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{filter_related, ClaimGraph, EvidenceGraph, EvidenceParse, GraphError, Triplet};
use crate::symbolic::SymbolicError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AgentRole {
    Construction,
    Match,
    Completion,
    /// Direct and decomposition baseline calls.
    Baseline,
}

impl fmt::Display for AgentRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AgentRole::Construction => "construction",
            AgentRole::Match => "match",
            AgentRole::Completion => "completion",
            AgentRole::Baseline => "baseline",
        };
        f.write_str(s)
    }
}

/// One prompt/response exchange with a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentTranscript {
    pub role: AgentRole,
    pub backend_id: String,
    pub rendered_prompt: String,
    pub raw_response: String,
    pub cache_key: String,
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("claim graph construction failed: {reason}")]
    Construction { raw: String, reason: String },
    #[error("evidence graph construction failed: every line is malformed")]
    EvidenceConstruction { raw: String },
    #[error("no true/false verdict in response {raw:?}")]
    Match { raw: String },
    #[error("no entity in completion response {raw:?}")]
    Completion { raw: String },
    #[error("no sub-claims in decomposition response {raw:?}")]
    Decomposition { raw: String },
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("transport: {0}")]
    Transport(String),
    #[error("replay cache has no transcript for {role} prompt (key {key})")]
    CacheMiss { role: AgentRole, key: String },
    #[error("transcript cache: {0}")]
    Cache(String),
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("backend {backend} does not support {what}")]
    Unsupported { backend: String, what: String },
    #[error("fixtures: {0}")]
    Fixtures(String),
}

/// Completion outcome. The verdict is `entity.is_some()`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub entity: Option<String>,
    /// Other admissible candidates, when the backend can enumerate them.
    pub alternatives: Vec<String>,
}

impl Completion {
    pub fn none() -> Self {
        Completion::default()
    }

    pub fn verdict(&self) -> bool {
        self.entity.is_some()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EvidenceConstruction {
    pub graph: EvidenceGraph,
    pub warnings: Vec<String>,
}

pub trait Backend: Send + Sync {
    /// Stable identifier, part of every transcript cache key.
    fn id(&self) -> &str;

    fn construct_claim_graph(&self, claim: &str) -> Result<ClaimGraph, AgentError>;

    /// Evidence triplets related to `entities`.
    fn construct_evidence_graph(
        &self,
        evidence: &str,
        entities: &BTreeSet<String>,
    ) -> Result<EvidenceConstruction, AgentError>;

    /// `sub` may be empty when graphs are disabled; `raw` is `None` when the
    /// raw evidence text is withheld.
    fn agent_match(
        &self,
        t: &Triplet,
        sub: &EvidenceGraph,
        raw: Option<&str>,
    ) -> Result<bool, AgentError>;

    /// Candidates in `exclude` (names already bound in the claim) must not be
    /// returned by backends that can enforce it.
    fn agent_complete(
        &self,
        t: &Triplet,
        sub: &EvidenceGraph,
        raw: Option<&str>,
        exclude: &BTreeSet<String>,
    ) -> Result<Completion, AgentError>;

    /// Whether match and completion can work from raw text without graphs.
    fn reads_raw_text(&self) -> bool {
        false
    }

    fn baseline_direct(&self, claim: &str, evidence: &str) -> Result<bool, AgentError> {
        let _ = (claim, evidence);
        Err(self.unsupported("direct baseline"))
    }

    fn decompose(&self, claim: &str) -> Result<Vec<String>, AgentError> {
        let _ = claim;
        Err(self.unsupported("decomposition baseline"))
    }

    fn unsupported(&self, what: &str) -> AgentError {
        AgentError::Unsupported {
            backend: self.id().to_string(),
            what: what.to_string(),
        }
    }
}

/// Turn a line-wise evidence parse into a graph restricted to `entities`.
/// Malformed lines become warnings; a parse with no valid line at all fails.
pub fn evidence_from_parse(
    parse: EvidenceParse,
    entities: &BTreeSet<String>,
    raw: &str,
) -> Result<EvidenceConstruction, AgentError> {
    if parse.all_malformed() {
        return Err(AgentError::EvidenceConstruction {
            raw: raw.to_string(),
        });
    }
    let warnings: Vec<String> = parse
        .malformed
        .iter()
        .map(|(line, e)| format!("evidence line {line} skipped: {e}"))
        .collect();
    for w in &warnings {
        log::warn!("{w}");
    }
    let graph = EvidenceGraph::new(filter_related(parse.triplets, entities))?;
    Ok(EvidenceConstruction { graph, warnings })
}

/// Leading `true`/`false` token, case-insensitive, ignoring leading
/// punctuation and an `Output:`/`Answer:` prefix.
pub fn parse_verdict(raw: &str) -> Option<bool> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| {
        Regex::new(r"(?i)^[\s\W]*(?:(?:output|answer)(?:\s*\(true/false\))?\s*:\s*)?(true|false)\b")
            .unwrap()
    });
    re.captures(raw).map(|c| c[1].eq_ignore_ascii_case("true"))
}

/// Entity name from a completion reply: first non-blank line, with an
/// `Output:` prefix, quotes and a trailing period removed. `none` maps to
/// `Ok(None)`; an empty reply is an error.
pub fn parse_entity(raw: &str) -> Result<Option<String>, AgentError> {
    static PREFIX: OnceLock<Regex> = OnceLock::new();
    let prefix =
        PREFIX.get_or_init(|| Regex::new(r"(?i)^(?:output|answer|entity)\s*:\s*").unwrap());
    let line = raw
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with("```"))
        .unwrap_or("");
    let line = prefix.replace(line, "");
    let name = line
        .trim()
        .trim_end_matches('.')
        .trim_matches(|c| matches!(c, '"' | '\'' | '`' | '*'))
        .trim();
    if name.is_empty() {
        return Err(AgentError::Completion {
            raw: raw.to_string(),
        });
    }
    if name.eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    Ok(Some(crate::graph::normalize_name(name)))
}

/// Sub-claims from a decomposition reply: one per non-blank line, list
/// markers stripped.
pub fn parse_sub_claims(raw: &str) -> Vec<String> {
    static MARKER: OnceLock<Regex> = OnceLock::new();
    let marker = MARKER.get_or_init(|| Regex::new(r"^(?:[-*•]\s+|\d+[.)]\s+|Output:\s*)").unwrap());
    raw.lines()
        .map(|l| marker.replace(l.trim(), "").trim().to_string())
        .filter(|l| !l.is_empty() && !l.starts_with("```"))
        .collect()
}

/// Text bound to `[[Evidence]]` in match and completion prompts: the
/// serialized subgraph, then the raw evidence, separated by a blank line.
pub fn evidence_binding(sub: &EvidenceGraph, raw: Option<&str>) -> String {
    let graph = crate::graph::serialize_evidence_graph(sub);
    match raw.map(str::trim).filter(|r| !r.is_empty()) {
        Some(r) if !graph.is_empty() => format!("{graph}\n\n{r}"),
        Some(r) => r.to_string(),
        None => graph,
    }
}
