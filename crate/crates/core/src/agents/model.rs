//! Backend that prompts a text-completion model.

use std::collections::BTreeSet;

use super::cache::{cache_key, CacheMode, TranscriptCache};
use super::client::CompletionClient;
use super::prompts::{PromptSet, TemplateName};
use super::{
    evidence_binding, evidence_from_parse, parse_entity, parse_sub_claims, parse_verdict,
    AgentError, AgentRole, AgentTranscript, Backend, Completion, EvidenceConstruction,
};
use crate::graph::{parse_claim_record, parse_evidence_lines, ClaimGraph, EvidenceGraph, Triplet};
use crate::symbolic::SymbolicError;

/// Re-asks after a reply that does not parse.
pub const DEFAULT_RETRIES: usize = 2;

pub struct ModelBackend {
    id: String,
    prompts: PromptSet,
    client: Option<Box<dyn CompletionClient>>,
    cache: Option<TranscriptCache>,
    retries: usize,
}

impl ModelBackend {
    pub fn new(client: Box<dyn CompletionClient>, prompts: PromptSet) -> Self {
        ModelBackend {
            id: format!("model:{}", client.model_id()),
            prompts,
            client: Some(client),
            cache: None,
            retries: DEFAULT_RETRIES,
        }
    }

    /// A backend that can only answer from a replay cache.
    pub fn replay(model_id: &str, prompts: PromptSet, cache: TranscriptCache) -> Self {
        ModelBackend {
            id: format!("model:{model_id}"),
            prompts,
            client: None,
            cache: Some(cache),
            retries: DEFAULT_RETRIES,
        }
    }

    pub fn with_cache(mut self, cache: TranscriptCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_retries(mut self, retries: usize) -> Self {
        self.retries = retries;
        self
    }

    pub fn prompts(&self) -> &PromptSet {
        &self.prompts
    }

    /// One prompt/response exchange, served from the cache when possible.
    pub fn exchange(&self, role: AgentRole, prompt: &str) -> Result<AgentTranscript, AgentError> {
        let key = cache_key(role, prompt, &self.id);
        if let Some(cache) = &self.cache {
            if let Some(t) = cache.get(&key)? {
                return Ok(t);
            }
            if cache.mode() == CacheMode::Replay {
                return Err(AgentError::CacheMiss { role, key });
            }
        }
        let client = self.client.as_ref().ok_or_else(|| AgentError::CacheMiss {
            role,
            key: key.clone(),
        })?;
        let raw_response = client.complete(prompt)?;
        let transcript = AgentTranscript {
            role,
            backend_id: self.id.clone(),
            rendered_prompt: prompt.to_string(),
            raw_response,
            cache_key: key,
        };
        if let Some(cache) = &self.cache {
            cache.put(&transcript)?;
        }
        Ok(transcript)
    }

    /// Ask, parse, and re-ask with a corrective note on parse failure.
    fn ask<T>(
        &self,
        role: AgentRole,
        prompt: &str,
        parse: impl Fn(&str) -> Result<T, AgentError>,
    ) -> Result<T, AgentError> {
        let mut attempt = 0;
        loop {
            let prompt = if attempt == 0 {
                prompt.to_string()
            } else {
                format!("{prompt}{}", retry_note(role, attempt))
            };
            let transcript = self.exchange(role, &prompt)?;
            match parse(&transcript.raw_response) {
                Ok(v) => return Ok(v),
                Err(e) if attempt >= self.retries => return Err(e),
                Err(e) => {
                    log::debug!("{role} reply did not parse (attempt {attempt}): {e}");
                    attempt += 1;
                }
            }
        }
    }
}

fn retry_note(role: AgentRole, attempt: usize) -> String {
    let ask = match role {
        AgentRole::Construction => "Reply only in the output format shown above.",
        AgentRole::Match | AgentRole::Baseline => "Reply with a single word: true or false.",
        AgentRole::Completion => "Reply with the entity name only, or none.",
    };
    format!("\n\n(Attempt {}: {ask})\n", attempt + 1)
}

fn bullet_entities(entities: &BTreeSet<String>) -> String {
    entities.iter().cloned().collect::<Vec<_>>().join("\n")
}

impl Backend for ModelBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn construct_claim_graph(&self, claim: &str) -> Result<ClaimGraph, AgentError> {
        if claim.trim().is_empty() {
            return Err(AgentError::Construction {
                raw: String::new(),
                reason: "empty claim".into(),
            });
        }
        let prompt = self
            .prompts
            .render(TemplateName::ClaimGraph, &[("Claim", claim.trim())])?;
        self.ask(AgentRole::Construction, &prompt, |raw| {
            parse_claim_record(raw).map_err(|e| AgentError::Construction {
                raw: raw.to_string(),
                reason: e.to_string(),
            })
        })
    }

    fn construct_evidence_graph(
        &self,
        evidence: &str,
        entities: &BTreeSet<String>,
    ) -> Result<EvidenceConstruction, AgentError> {
        if entities.is_empty() || evidence.trim().is_empty() {
            return Ok(EvidenceConstruction {
                graph: EvidenceGraph::default(),
                warnings: vec!["evidence construction skipped: no entities or no evidence".into()],
            });
        }
        let names = bullet_entities(entities);
        let prompt = self.prompts.render(
            TemplateName::EvidenceGraph,
            &[("Evidence", evidence.trim()), ("Entity Set", &names)],
        )?;
        self.ask(AgentRole::Construction, &prompt, |raw| {
            evidence_from_parse(parse_evidence_lines(raw), entities, raw)
        })
    }

    fn agent_match(
        &self,
        t: &Triplet,
        sub: &EvidenceGraph,
        raw: Option<&str>,
    ) -> Result<bool, AgentError> {
        if !t.is_grounded() {
            return Err(SymbolicError::NotGrounded(t.to_string()).into());
        }
        let evidence = evidence_binding(sub, raw);
        let quad = t.to_string();
        let prompt = self.prompts.render(
            TemplateName::GraphMatch,
            &[("Evidence", &evidence), ("Quadruple", &quad)],
        )?;
        self.ask(AgentRole::Match, &prompt, |r| {
            parse_verdict(r).ok_or_else(|| AgentError::Match { raw: r.to_string() })
        })
    }

    fn agent_complete(
        &self,
        t: &Triplet,
        sub: &EvidenceGraph,
        raw: Option<&str>,
        _exclude: &BTreeSet<String>,
    ) -> Result<Completion, AgentError> {
        let n = t.unknowns().len();
        if n != 1 {
            return Err(SymbolicError::CompletionArity {
                triplet: t.to_string(),
                count: n,
            }
            .into());
        }
        let evidence = evidence_binding(sub, raw);
        let quad = t.to_string();
        let prompt = self.prompts.render(
            TemplateName::GraphCompletion,
            &[("Evidence", &evidence), ("Quadruples", &quad)],
        )?;
        let entity = self.ask(AgentRole::Completion, &prompt, parse_entity)?;
        Ok(Completion {
            entity,
            alternatives: Vec::new(),
        })
    }

    fn reads_raw_text(&self) -> bool {
        true
    }

    fn baseline_direct(&self, claim: &str, evidence: &str) -> Result<bool, AgentError> {
        let prompt = self.prompts.render(
            TemplateName::Direct,
            &[("Evidence", evidence.trim()), ("Claim", claim.trim())],
        )?;
        self.ask(AgentRole::Baseline, &prompt, |r| {
            parse_verdict(r).ok_or_else(|| AgentError::Match { raw: r.to_string() })
        })
    }

    fn decompose(&self, claim: &str) -> Result<Vec<String>, AgentError> {
        let prompt = self
            .prompts
            .render(TemplateName::Decomposition, &[("Claim", claim.trim())])?;
        self.ask(AgentRole::Baseline, &prompt, |r| {
            let subs = parse_sub_claims(r);
            if subs.is_empty() {
                Err(AgentError::Decomposition { raw: r.to_string() })
            } else {
                Ok(subs)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::client::FnClient;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    fn backend(reply: impl Fn(&str) -> String + Send + Sync + 'static) -> ModelBackend {
        let client = FnClient::new("sim", move |p: &str| Ok(reply(p)));
        ModelBackend::new(Box::new(client), PromptSet::builtin(0))
    }

    #[test]
    fn match_reply_true_with_reason() {
        let b = backend(|_| "True, because the evidence lists it.".into());
        let t = Triplet::known("Kathleen", "Sister_of", "Christopher").unwrap();
        assert!(b
            .agent_match(&t, &EvidenceGraph::default(), Some("raw"))
            .unwrap());
    }

    #[test]
    fn match_reply_maybe_fails_after_retries() {
        let calls = Arc::new(AtomicUsize::new(0));
        let c = calls.clone();
        let b = backend(move |_| {
            c.fetch_add(1, Ordering::SeqCst);
            "maybe".into()
        });
        let t = Triplet::known("A", "r", "B").unwrap();
        let err = b
            .agent_match(&t, &EvidenceGraph::default(), None)
            .unwrap_err();
        assert!(matches!(err, AgentError::Match { .. }));
        assert_eq!(calls.load(Ordering::SeqCst), 1 + DEFAULT_RETRIES);
    }

    #[test]
    fn retry_recovers() {
        let b = backend(|p| {
            if p.contains("(Attempt 2") {
                "false".into()
            } else {
                "unsure".into()
            }
        });
        let t = Triplet::known("A", "r", "B").unwrap();
        assert!(!b.agent_match(&t, &EvidenceGraph::default(), None).unwrap());
    }

    #[test]
    fn completion_none() {
        let b = backend(|_| "none".into());
        let t = Triplet::new(
            crate::graph::EntityRef::unknown(1),
            crate::graph::RelationLabel::new("r").unwrap(),
            crate::graph::EntityRef::known("B").unwrap(),
        );
        let c = b
            .agent_complete(&t, &EvidenceGraph::default(), Some("e"), &BTreeSet::new())
            .unwrap();
        assert_eq!(c, Completion::none());
        assert!(!c.verdict());
    }

    #[test]
    fn empty_construction_reply_is_error() {
        let b = backend(|_| String::new());
        assert!(matches!(
            b.construct_claim_graph("Some claim."),
            Err(AgentError::Construction { .. })
        ));
    }

    #[test]
    fn replay_miss_without_client() {
        let dir = tempfile::tempdir().unwrap();
        let cache = TranscriptCache::open(dir.path(), CacheMode::Replay).unwrap();
        let b = ModelBackend::replay("sim", PromptSet::builtin(0), cache);
        let t = Triplet::known("A", "r", "B").unwrap();
        assert!(matches!(
            b.agent_match(&t, &EvidenceGraph::default(), None),
            Err(AgentError::CacheMiss { .. })
        ));
    }

    #[test]
    fn recorded_exchange_replays() {
        let dir = tempfile::tempdir().unwrap();
        let rec = backend(|_| "true".into())
            .with_cache(TranscriptCache::open(dir.path(), CacheMode::Record).unwrap());
        let t = Triplet::known("A", "r", "B").unwrap();
        assert!(rec
            .agent_match(&t, &EvidenceGraph::default(), None)
            .unwrap());
        let rep = ModelBackend::replay(
            "sim",
            PromptSet::builtin(0),
            TranscriptCache::open(dir.path(), CacheMode::Replay).unwrap(),
        );
        assert!(rep
            .agent_match(&t, &EvidenceGraph::default(), None)
            .unwrap());
    }
}
