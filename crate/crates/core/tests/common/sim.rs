//! A stand-in text-completion model. It reads the rendered prompt the way a
//! model would, and answers from fixture tables and the triples it is shown.

use std::sync::atomic::{AtomicUsize, Ordering};

use factgraph::agents::{AgentError, CompletionClient, Fixtures};
use factgraph::graph::{parse_evidence_lines, Triplet};

pub struct SimulatedModel {
    fixtures: Fixtures,
    pub calls: AtomicUsize,
}

fn between<'a>(text: &'a str, start: &str, end: &str) -> Option<&'a str> {
    let from = text.rfind(start)? + start.len();
    let to = text[from..].find(end)? + from;
    Some(&text[from..to])
}

fn parse_quad(q: &str) -> Option<(String, String, String)> {
    let inner = q.trim().strip_prefix('<')?.strip_suffix('>')?;
    let parts: Vec<&str> = inner.split(", ").collect();
    if parts.len() < 3 {
        return None;
    }
    Some((parts[0].into(), parts[1].to_lowercase(), parts[2].into()))
}

fn shown_triples(evidence: &str) -> Vec<Triplet> {
    parse_evidence_lines(evidence).triplets
}

impl SimulatedModel {
    pub fn new(fixtures: Fixtures) -> Self {
        SimulatedModel {
            fixtures,
            calls: AtomicUsize::new(0),
        }
    }

    fn answer(&self, prompt: &str) -> String {
        if let Some(claim) = between(prompt, "\nClaim = ", "\n\nOutput =") {
            return self
                .fixtures
                .claims
                .get(claim.trim())
                .cloned()
                .unwrap_or_else(|| "I cannot parse this claim.".into());
        }
        if let Some(evidence) = between(prompt, "## Real data\nEvidence: ", "\n\nEntity Set:") {
            let lines: Vec<&str> = evidence
                .split("\n\n")
                .filter_map(|p| self.fixtures.evidence.get(p.trim()).map(String::as_str))
                .collect();
            return lines.join("\n");
        }
        if let Some(quad) = between(prompt, "Quadruple:\n", "  \n") {
            let evidence = between(prompt, "Evidence:\n", "  \n\nUsing the provided").unwrap_or("");
            let Some((s, r, o)) = parse_quad(quad) else {
                return "unsure".into();
            };
            let hit = shown_triples(evidence).iter().any(|t| {
                t.subject.known_name() == Some(s.as_str())
                    && t.relation.canonical() == r
                    && t.object.known_name() == Some(o.as_str())
            });
            return if hit { "True." } else { "False." }.into();
        }
        if let Some(quad) = between(prompt, "Quadruples:\n", "\n\nOutput:") {
            let evidence =
                between(prompt, "Evidence:\n", "\n\nComplete the fuzzy entity").unwrap_or("");
            let Some((s, r, o)) = parse_quad(quad) else {
                return String::new();
            };
            let is_placeholder =
                |x: &str| x.starts_with('x') && x[1..].chars().all(|c| c.is_ascii_digit());
            for t in shown_triples(evidence) {
                if t.relation.canonical() != r {
                    continue;
                }
                let (ts, to) = (
                    t.subject.known_name().unwrap(),
                    t.object.known_name().unwrap(),
                );
                if is_placeholder(&s) && to == o {
                    return ts.to_string();
                }
                if is_placeholder(&o) && ts == s {
                    return to.to_string();
                }
            }
            return "none".into();
        }
        "unsure".into()
    }
}

impl CompletionClient for SimulatedModel {
    fn model_id(&self) -> &str {
        "simulated"
    }

    fn complete(&self, prompt: &str) -> Result<String, AgentError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(self.answer(prompt))
    }
}
