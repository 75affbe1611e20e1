//! Exact, model-free graph match, graph completion and the exhaustive
//! support check.
//!
//! A claim graph is supported by an evidence graph iff there is an injective
//! map from claim entities into evidence entities that fixes every known
//! entity and sends every claim triplet onto an evidence triplet. The
//! exhaustive check enumerates such maps by backtracking; it doubles as the
//! ground truth for the sequential pipeline.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ClaimGraph, EvidenceGraph, Placeholder, Triplet};

pub const DEFAULT_PLACEHOLDER_LIMIT: usize = 6;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SymbolicError {
    #[error("graph match needs a fully known triplet, got {0}")]
    NotGrounded(String),
    #[error("graph completion needs exactly one placeholder, {triplet} has {count}")]
    CompletionArity { triplet: String, count: usize },
    #[error("claim has {unknowns} placeholders, above the enumeration limit of {limit}")]
    Capacity { unknowns: usize, limit: usize },
    #[error("grounding {placeholder} -> {name:?} breaks injectivity")]
    NotInjective {
        placeholder: Placeholder,
        name: String,
    },
}

/// True iff `sub` holds a triplet equal to `t` on canonical subject, relation
/// and object (constraints compared when both carry one).
pub fn match_triplet(t: &Triplet, sub: &EvidenceGraph) -> Result<bool, SymbolicError> {
    if !t.is_grounded() {
        return Err(SymbolicError::NotGrounded(t.to_string()));
    }
    Ok(sub.contains(t))
}

/// Every known name that, substituted for the single placeholder of `t`,
/// yields a triplet of `sub`. Deduplicated, in evidence order.
pub fn complete_triplet(t: &Triplet, sub: &EvidenceGraph) -> Result<Vec<String>, SymbolicError> {
    let unknowns = t.unknowns();
    if unknowns.len() != 1 {
        return Err(SymbolicError::CompletionArity {
            triplet: t.to_string(),
            count: unknowns.len(),
        });
    }
    let x = unknowns[0];
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for e in sub.triplets() {
        let candidate = if t.subject.is_unknown() {
            e.subject.known_name()
        } else {
            e.object.known_name()
        };
        let Some(name) = candidate else { continue };
        if t.substitute(x, name).matches(e) && seen.insert(name) {
            out.push(name.to_string());
        }
    }
    Ok(out)
}

/// Partial assignment of placeholders to known names. Values are pairwise
/// distinct and never collide with the claim's own known entities.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Grounding(BTreeMap<Placeholder, String>);

impl Grounding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        placeholder: Placeholder,
        name: &str,
        claim_known: &BTreeSet<String>,
    ) -> Result<(), SymbolicError> {
        let clash = claim_known.contains(name)
            || self.0.iter().any(|(p, v)| *p != placeholder && v == name);
        if clash {
            return Err(SymbolicError::NotInjective {
                placeholder,
                name: name.to_string(),
            });
        }
        self.0.insert(placeholder, name.to_string());
        Ok(())
    }

    pub fn get(&self, p: Placeholder) -> Option<&str> {
        self.0.get(&p).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Placeholder, &str)> {
        self.0.iter().map(|(p, v)| (*p, v.as_str()))
    }

    pub fn apply(&self, t: &Triplet) -> Triplet {
        self.0
            .iter()
            .fold(t.clone(), |acc, (p, name)| acc.substitute(*p, name))
    }
}

impl std::fmt::Display for Grounding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(p, v)| format!("{p}->{v}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportResult {
    pub supported: bool,
    pub groundings: Vec<Grounding>,
}

/// True iff `g` covers every placeholder of `gc`, is injective, and maps every
/// claim triplet onto a triplet of `ge`.
pub fn verify_grounding(gc: &ClaimGraph, ge: &EvidenceGraph, g: &Grounding) -> bool {
    let covers = gc.unknowns().iter().all(|p| g.get(*p).is_some());
    let values: HashSet<&str> = g.iter().map(|(_, v)| v).collect();
    let injective =
        values.len() == g.len() && values.iter().all(|v| !gc.known_entities().contains(*v));
    covers && injective && gc.triplets().iter().all(|t| ge.contains(&g.apply(t)))
}

/// Enumerate all supporting groundings, in lexicographic order of evidence
/// entity appearance over placeholders sorted by id.
pub fn exhaustive_support(
    gc: &ClaimGraph,
    ge: &EvidenceGraph,
    limit: usize,
) -> Result<SupportResult, SymbolicError> {
    let placeholders: Vec<Placeholder> = gc.unknowns().iter().copied().collect();
    if placeholders.len() > limit {
        return Err(SymbolicError::Capacity {
            unknowns: placeholders.len(),
            limit,
        });
    }

    // Triplets are checked as soon as their last placeholder (by position in
    // `placeholders`) is assigned; ground triplets are checked up front.
    let mut ready: Vec<Vec<&Triplet>> = vec![Vec::new(); placeholders.len() + 1];
    for t in gc.triplets() {
        let depth = t
            .unknowns()
            .iter()
            .map(|p| placeholders.iter().position(|q| q == p).unwrap() + 1)
            .max()
            .unwrap_or(0);
        ready[depth].push(t);
    }
    let unsupported = SupportResult {
        supported: false,
        groundings: Vec::new(),
    };
    if !ready[0].iter().all(|t| ge.contains(t)) {
        return Ok(unsupported);
    }

    let candidates: Vec<&str> = ge
        .entities()
        .into_iter()
        .filter(|n| !gc.known_entities().contains(*n))
        .collect();

    struct Search<'a> {
        placeholders: &'a [Placeholder],
        candidates: &'a [&'a str],
        ready: &'a [Vec<&'a Triplet>],
        ge: &'a EvidenceGraph,
        known: &'a BTreeSet<String>,
        out: Vec<Grounding>,
    }

    impl Search<'_> {
        fn descend(&mut self, depth: usize, current: &mut Grounding, used: &mut Vec<bool>) {
            if depth == self.placeholders.len() {
                self.out.push(current.clone());
                return;
            }
            let p = self.placeholders[depth];
            for (i, name) in self.candidates.iter().enumerate() {
                if used[i] {
                    continue;
                }
                current
                    .insert(p, name, self.known)
                    .expect("candidates exclude claim entities and used values");
                let ok = self.ready[depth + 1]
                    .iter()
                    .all(|t| self.ge.contains(&current.apply(t)));
                if ok {
                    used[i] = true;
                    self.descend(depth + 1, current, used);
                    used[i] = false;
                }
                current.0.remove(&p);
            }
        }
    }

    let mut search = Search {
        placeholders: &placeholders,
        candidates: &candidates,
        ready: &ready,
        ge,
        known: gc.known_entities(),
        out: Vec::new(),
    };
    search.descend(0, &mut Grounding::new(), &mut vec![false; candidates.len()]);
    let groundings = search.out;

    for g in &groundings {
        assert!(
            verify_grounding(gc, ge, g),
            "enumerated grounding {g} does not support the claim"
        );
    }
    Ok(SupportResult {
        supported: !groundings.is_empty(),
        groundings,
    })
}
