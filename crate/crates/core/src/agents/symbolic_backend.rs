//! Deterministic backend: construction from fixtures, match and completion by
//! the exact symbolic checks.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{evidence_from_parse, AgentError, Backend, Completion, EvidenceConstruction};
use crate::graph::{parse_claim_record, parse_evidence_lines, ClaimGraph, EvidenceGraph, Triplet};
use crate::symbolic::{complete_triplet, match_triplet};

/// Canned extractor output keyed by input text (trimmed).
///
/// `claims` maps a claim to a claim-graph record; `evidence` maps an evidence
/// text, or any of its blank-line separated paragraphs, to triple lines.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Fixtures {
    pub claims: BTreeMap<String, String>,
    pub evidence: BTreeMap<String, String>,
}

impl Fixtures {
    pub fn load(path: &Path) -> Result<Self, AgentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AgentError::Fixtures(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| AgentError::Fixtures(format!("{}: {e}", path.display())))
    }

    pub fn claim(mut self, claim: &str, record: &str) -> Self {
        self.claims
            .insert(claim.trim().to_string(), record.to_string());
        self
    }

    pub fn evidence(mut self, text: &str, lines: &str) -> Self {
        self.evidence
            .insert(text.trim().to_string(), lines.to_string());
        self
    }

    pub fn merge(mut self, other: Fixtures) -> Self {
        self.claims.extend(other.claims);
        self.evidence.extend(other.evidence);
        self
    }

    fn evidence_lines(&self, text: &str) -> Option<String> {
        if let Some(lines) = self.evidence.get(text.trim()) {
            return Some(lines.clone());
        }
        let parts: Vec<&str> = text
            .split("\n\n")
            .filter_map(|p| self.evidence.get(p.trim()).map(String::as_str))
            .collect();
        (!parts.is_empty()).then(|| parts.join("\n"))
    }
}

/// Unmatched texts fall through to the parsers, so structured claim records
/// and triple lines can also be passed directly.
#[derive(Debug, Clone, Default)]
pub struct SymbolicBackend {
    fixtures: Fixtures,
}

impl SymbolicBackend {
    pub fn new(fixtures: Fixtures) -> Self {
        SymbolicBackend { fixtures }
    }

    pub fn fixtures(&self) -> &Fixtures {
        &self.fixtures
    }
}

impl Backend for SymbolicBackend {
    fn id(&self) -> &str {
        "symbolic"
    }

    fn construct_claim_graph(&self, claim: &str) -> Result<ClaimGraph, AgentError> {
        let record = self
            .fixtures
            .claims
            .get(claim.trim())
            .map(String::as_str)
            .unwrap_or(claim);
        parse_claim_record(record).map_err(|e| AgentError::Construction {
            raw: record.to_string(),
            reason: e.to_string(),
        })
    }

    fn construct_evidence_graph(
        &self,
        evidence: &str,
        entities: &BTreeSet<String>,
    ) -> Result<EvidenceConstruction, AgentError> {
        let raw = self
            .fixtures
            .evidence_lines(evidence)
            .unwrap_or_else(|| evidence.to_string());
        evidence_from_parse(parse_evidence_lines(&raw), entities, &raw)
    }

    fn agent_match(
        &self,
        t: &Triplet,
        sub: &EvidenceGraph,
        _raw: Option<&str>,
    ) -> Result<bool, AgentError> {
        Ok(match_triplet(t, sub)?)
    }

    fn agent_complete(
        &self,
        t: &Triplet,
        sub: &EvidenceGraph,
        _raw: Option<&str>,
        exclude: &BTreeSet<String>,
    ) -> Result<Completion, AgentError> {
        let mut candidates = complete_triplet(t, sub)?
            .into_iter()
            .filter(|c| !exclude.contains(c));
        Ok(Completion {
            entity: candidates.next(),
            alternatives: candidates.collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EntityRef, RelationLabel};

    fn set(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn claim_without_placeholders() {
        let b = SymbolicBackend::new(Fixtures::default().claim(
            "Kathleen is the sister of Christopher.",
            "Kathleen | Sister_of | Christopher",
        ));
        let g = b
            .construct_claim_graph("Kathleen is the sister of Christopher.")
            .unwrap();
        assert_eq!(g.len(), 1);
        assert!(g.unknowns().is_empty());
    }

    #[test]
    fn disjoint_entities_give_empty_graph() {
        let b = SymbolicBackend::new(
            Fixtures::default().evidence("Some text.", "A | r | B\nB | s | C"),
        );
        let out = b
            .construct_evidence_graph("Some text.", &set(&["Z"]))
            .unwrap();
        assert!(out.graph.is_empty());
    }

    #[test]
    fn paragraph_lookup() {
        let b = SymbolicBackend::new(
            Fixtures::default()
                .evidence("Para one.", "A | r | B")
                .evidence("Para two.", "B | s | C"),
        );
        let out = b
            .construct_evidence_graph("Para one.\n\nPara two.\n\nUnrelated.", &set(&["A"]))
            .unwrap();
        assert_eq!(out.graph.len(), 2);
    }

    #[test]
    fn completion_respects_exclusions_and_records_alternatives() {
        let ge = EvidenceGraph::new(vec![
            Triplet::known("A", "r", "C").unwrap(),
            Triplet::known("B", "r", "C").unwrap(),
            Triplet::known("D", "r", "C").unwrap(),
        ])
        .unwrap();
        let t = Triplet::new(
            EntityRef::unknown(1),
            RelationLabel::new("r").unwrap(),
            EntityRef::known("C").unwrap(),
        );
        let b = SymbolicBackend::default();
        let c = b.agent_complete(&t, &ge, None, &set(&["A"])).unwrap();
        assert_eq!(c.entity.as_deref(), Some("B"));
        assert_eq!(c.alternatives, vec!["D".to_string()]);
        let none = b
            .agent_complete(&t, &EvidenceGraph::default(), None, &set(&[]))
            .unwrap();
        assert_eq!(none, Completion::none());
    }

    #[test]
    fn match_ignores_raw_text() {
        let ge = EvidenceGraph::new(vec![Triplet::known("A", "r", "B").unwrap()]).unwrap();
        let t = Triplet::known("A", "r", "B").unwrap();
        let b = SymbolicBackend::default();
        assert!(b.agent_match(&t, &ge, Some("anything")).unwrap());
        assert!(b.agent_match(&t, &ge, None).unwrap());
    }
}
