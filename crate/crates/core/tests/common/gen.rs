//! Seeded random instances over a small entity and relation vocabulary.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use factgraph::graph::{parse_claim_record, parse_evidence_lines, ClaimGraph, EvidenceGraph};

pub struct Instance {
    /// Claim as pipe lines, placeholders written `x1`..
    pub claim: String,
    /// Evidence as pipe lines.
    pub evidence: String,
    pub claim_graph: ClaimGraph,
    pub evidence_graph: EvidenceGraph,
}

fn finish(claim: String, evidence: String) -> Instance {
    let claim_graph = parse_claim_record(&claim).unwrap();
    let evidence_graph = EvidenceGraph::new(parse_evidence_lines(&evidence).triplets).unwrap();
    Instance {
        claim,
        evidence,
        claim_graph,
        evidence_graph,
    }
}

/// Claim triples are sampled from the evidence, up to three entities are
/// abstracted to placeholders, and some claims get one corrupted triple.
pub fn sampled_instance<R: Rng>(rng: &mut R) -> Instance {
    let entities: Vec<String> = (0..8).map(|i| format!("E{i}")).collect();
    let relations: Vec<String> = (0..4).map(|i| format!("r{i}")).collect();

    let n_e = rng.gen_range(3..=12);
    let mut evidence: Vec<(String, String, String)> = Vec::new();
    while evidence.len() < n_e {
        let s = entities.choose(rng).unwrap().clone();
        let o = entities.choose(rng).unwrap().clone();
        let r = relations.choose(rng).unwrap().clone();
        if s != o && !evidence.contains(&(s.clone(), r.clone(), o.clone())) {
            evidence.push((s, r, o));
        }
    }

    let k = rng.gen_range(1..=4.min(evidence.len()));
    let mut claim: Vec<(String, String, String)> =
        evidence.choose_multiple(rng, k).cloned().collect();
    if rng.gen_bool(0.4) {
        let i = rng.gen_range(0..claim.len());
        if rng.gen_bool(0.5) {
            claim[i].1 = relations.choose(rng).unwrap().clone();
        } else {
            let (s, r, o) = claim[i].clone();
            claim[i] = (o, r, s);
        }
    }

    let mut mentioned: Vec<String> = Vec::new();
    for (s, _, o) in &claim {
        for e in [s, o] {
            if !mentioned.contains(e) {
                mentioned.push(e.clone());
            }
        }
    }
    let m = rng.gen_range(0..=3.min(mentioned.len()));
    let abstracted: BTreeMap<String, String> = mentioned
        .choose_multiple(rng, m)
        .enumerate()
        .map(|(i, e)| (e.clone(), format!("x{}", i + 1)))
        .collect();
    let show = |e: &String| abstracted.get(e).cloned().unwrap_or_else(|| e.clone());
    let claim_text = claim
        .iter()
        .map(|(s, r, o)| format!("{} | {} | {}", show(s), r, show(o)))
        .collect::<Vec<_>>()
        .join("\n");
    let evidence_text = evidence
        .iter()
        .map(|(s, r, o)| format!("{s} | {r} | {o}"))
        .collect::<Vec<_>>()
        .join("\n");
    finish(claim_text, evidence_text)
}

pub struct Budgeted {
    pub instance: Instance,
    /// Index in plan order of the first step that must fail, if any.
    pub first_failing: Option<usize>,
    pub steps: usize,
}

/// Independent fully known triples and single-placeholder triples, each with
/// its own entities, so the outcome of every step is fixed by construction.
pub fn budgeted_instance<R: Rng>(rng: &mut R) -> Budgeted {
    let n_known = rng.gen_range(0..=4);
    let n_comp = rng.gen_range(if n_known == 0 { 1 } else { 0 }..=3);
    let n = n_known + n_comp;
    let first_failing = if rng.gen_bool(0.25) {
        None
    } else {
        Some(rng.gen_range(0..n))
    };
    let holds = |pos: usize, rng: &mut R| match first_failing {
        Some(f) if pos == f => false,
        Some(f) if pos > f => rng.gen_bool(0.5),
        _ => true,
    };

    // Plan order is known triples first, then completions, each in extraction order.
    let mut claim_lines = Vec::new();
    let mut evidence_lines = Vec::new();
    for i in 0..n_known {
        claim_lines.push(format!("A{i} | k{i} | B{i}"));
        if holds(i, rng) {
            evidence_lines.push(format!("A{i} | k{i} | B{i}"));
        } else {
            evidence_lines.push(format!("A{i} | other | B{i}"));
        }
    }
    for j in 0..n_comp {
        claim_lines.push(format!("x{} | c{j} | T{j}", j + 1));
        if holds(n_known + j, rng) {
            evidence_lines.push(format!("V{j} | c{j} | T{j}"));
        } else {
            evidence_lines.push(format!("T{j} | c{j} | V{j}"));
        }
    }
    // Interleave extraction order; the stable priority sort restores plan order.
    let mut known: Vec<String> = claim_lines[..n_known].to_vec();
    let mut comp: Vec<String> = claim_lines[n_known..].to_vec();
    let mut mixed = Vec::new();
    while !known.is_empty() || !comp.is_empty() {
        let take_known = !known.is_empty() && (comp.is_empty() || rng.gen_bool(0.5));
        mixed.push(if take_known {
            known.remove(0)
        } else {
            comp.remove(0)
        });
    }
    evidence_lines.shuffle(rng);
    Budgeted {
        instance: finish(mixed.join("\n"), evidence_lines.join("\n")),
        first_failing,
        steps: n,
    }
}

/// Claim graph with arbitrary known/unknown endpoints for planner checks.
pub fn random_claim_graph<R: Rng>(rng: &mut R) -> ClaimGraph {
    let n = rng.gen_range(0..=10);
    let lines: Vec<String> = (0..n)
        .map(|i| {
            let end = |rng: &mut R| {
                if rng.gen_bool(0.4) {
                    format!("x{}", rng.gen_range(1..=4))
                } else {
                    format!("N{}", rng.gen_range(0..6))
                }
            };
            let s = end(rng);
            let o = end(rng);
            format!("{s} | r{i} | {o}")
        })
        .collect();
    if lines.is_empty() {
        ClaimGraph::empty()
    } else {
        parse_claim_record(&lines.join("\n")).unwrap()
    }
}
