//! Claim and evidence triple graphs.
//!
//! A claim graph holds triplets over known entities and unknown placeholders
//! (`x1`, `x2`, ...). An evidence graph holds only known entities and keeps an
//! index from entity name to the ids of the triplets mentioning it.

mod parse;

pub use parse::{
    parse_claim_record, parse_evidence_lines, parse_evidence_triple_line, serialize_claim_graph,
    serialize_evidence_graph, ClaimGraphBuilder, EvidenceParse, RawQuad,
};

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("expected 3 pipe-delimited fields, found {count}: {line:?}")]
    FieldCount { line: String, count: usize },
    #[error("empty field in triple line: {0:?}")]
    EmptyField(String),
    #[error("evidence triplet contains placeholder {0}")]
    UnknownInEvidence(Placeholder),
    #[error("relation label is empty")]
    EmptyRelation,
    #[error("entity name is empty")]
    EmptyEntity,
    #[error("malformed claim record at line {line}: {reason}")]
    Record { line: usize, reason: String },
    #[error("malformed claim graph response: {0}")]
    Malformed(String),
}

/// Trim and collapse internal whitespace runs to a single space.
pub fn normalize_name(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Ordinal placeholder id, rendered `x1`, `x2`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Placeholder(u32);

impl Placeholder {
    pub fn new(ordinal: u32) -> Self {
        assert!(ordinal >= 1, "placeholder ordinals start at 1");
        Placeholder(ordinal)
    }

    pub fn ordinal(self) -> u32 {
        self.0
    }
}

impl fmt::Display for Placeholder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityRef {
    Known(String),
    Unknown(Placeholder),
}

impl EntityRef {
    /// Known entity with a normalized name. Fails on names that are empty after trimming.
    pub fn known(name: &str) -> Result<Self, GraphError> {
        let name = normalize_name(name);
        if name.is_empty() {
            return Err(GraphError::EmptyEntity);
        }
        Ok(EntityRef::Known(name))
    }

    pub fn unknown(ordinal: u32) -> Self {
        EntityRef::Unknown(Placeholder::new(ordinal))
    }

    pub fn known_name(&self) -> Option<&str> {
        match self {
            EntityRef::Known(name) => Some(name),
            EntityRef::Unknown(_) => None,
        }
    }

    pub fn placeholder(&self) -> Option<Placeholder> {
        match self {
            EntityRef::Known(_) => None,
            EntityRef::Unknown(p) => Some(*p),
        }
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, EntityRef::Unknown(_))
    }
}

impl fmt::Display for EntityRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntityRef::Known(name) => f.write_str(name),
            EntityRef::Unknown(p) => p.fmt(f),
        }
    }
}

/// Relation label with its canonical form: whitespace collapsed to `_`, lowercased.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelationLabel {
    raw: String,
    canonical: String,
}

impl RelationLabel {
    pub fn new(raw: &str) -> Result<Self, GraphError> {
        let raw = normalize_name(raw);
        let canonical = canonical_relation(&raw);
        if canonical.is_empty() {
            return Err(GraphError::EmptyRelation);
        }
        Ok(RelationLabel { raw, canonical })
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn canonical(&self) -> &str {
        &self.canonical
    }
}

pub fn canonical_relation(raw: &str) -> String {
    raw.split_whitespace()
        .collect::<Vec<_>>()
        .join("_")
        .to_lowercase()
}

// Equality is on the canonical form only.
impl PartialEq for RelationLabel {
    fn eq(&self, other: &Self) -> bool {
        self.canonical == other.canonical
    }
}

impl Eq for RelationLabel {}

impl std::hash::Hash for RelationLabel {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.canonical.hash(state);
    }
}

impl fmt::Display for RelationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintKind {
    Temporal,
    Spatial,
    Condition,
    Context,
}

impl ConstraintKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_lowercase().as_str() {
            "temporal" => Some(ConstraintKind::Temporal),
            "spatial" => Some(ConstraintKind::Spatial),
            "condition" => Some(ConstraintKind::Condition),
            "context" => Some(ConstraintKind::Context),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ConstraintKind::Temporal => "temporal",
            ConstraintKind::Spatial => "spatial",
            ConstraintKind::Condition => "condition",
            ConstraintKind::Context => "context",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub value: String,
}

impl Constraint {
    pub fn new(kind: ConstraintKind, value: &str) -> Self {
        Constraint {
            kind,
            value: normalize_name(value),
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind.as_str(), self.value)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Triplet {
    pub subject: EntityRef,
    pub relation: RelationLabel,
    pub object: EntityRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint: Option<Constraint>,
    pub source_index: usize,
}

/// Identity used for deduplication and exact matching.
pub type TripletKey = (EntityRef, String, EntityRef, Option<Constraint>);

impl Triplet {
    pub fn new(subject: EntityRef, relation: RelationLabel, object: EntityRef) -> Self {
        Triplet {
            subject,
            relation,
            object,
            constraint: None,
            source_index: 0,
        }
    }

    /// Known/known triplet from raw strings; convenient for fixtures.
    pub fn known(subject: &str, relation: &str, object: &str) -> Result<Self, GraphError> {
        Ok(Triplet::new(
            EntityRef::known(subject)?,
            RelationLabel::new(relation)?,
            EntityRef::known(object)?,
        ))
    }

    pub fn with_constraint(mut self, constraint: Option<Constraint>) -> Self {
        self.constraint = constraint;
        self
    }

    pub fn with_source_index(mut self, index: usize) -> Self {
        self.source_index = index;
        self
    }

    pub fn key(&self) -> TripletKey {
        (
            self.subject.clone(),
            self.relation.canonical().to_string(),
            self.object.clone(),
            self.constraint.clone(),
        )
    }

    /// Distinct placeholders, subject first.
    pub fn unknowns(&self) -> Vec<Placeholder> {
        let mut out = Vec::with_capacity(2);
        for p in [self.subject.placeholder(), self.object.placeholder()]
            .into_iter()
            .flatten()
        {
            if !out.contains(&p) {
                out.push(p);
            }
        }
        out
    }

    /// Number of endpoint positions holding a placeholder (0, 1 or 2).
    pub fn unknown_positions(&self) -> usize {
        self.subject.is_unknown() as usize + self.object.is_unknown() as usize
    }

    pub fn is_grounded(&self) -> bool {
        self.unknown_positions() == 0
    }

    pub fn known_names(&self) -> impl Iterator<Item = &str> {
        [self.subject.known_name(), self.object.known_name()]
            .into_iter()
            .flatten()
    }

    pub fn mentions(&self, name: &str) -> bool {
        self.known_names().any(|n| n == name)
    }

    pub fn contains_placeholder(&self, p: Placeholder) -> bool {
        self.subject.placeholder() == Some(p) || self.object.placeholder() == Some(p)
    }

    /// Exact match on canonical (subject, relation, object). Constraints must
    /// agree only when both sides carry one.
    pub fn matches(&self, other: &Triplet) -> bool {
        self.subject == other.subject
            && self.relation == other.relation
            && self.object == other.object
            && match (&self.constraint, &other.constraint) {
                (Some(a), Some(b)) => a == b,
                _ => true,
            }
    }

    /// Replace every occurrence of `placeholder` by the known entity `name`.
    pub fn substitute(&self, placeholder: Placeholder, name: &str) -> Triplet {
        let replace = |e: &EntityRef| match e {
            EntityRef::Unknown(p) if *p == placeholder => EntityRef::Known(name.to_string()),
            other => other.clone(),
        };
        Triplet {
            subject: replace(&self.subject),
            relation: self.relation.clone(),
            object: replace(&self.object),
            constraint: self.constraint.clone(),
            source_index: self.source_index,
        }
    }

    /// `Subject | Predicate | Object`
    pub fn to_triple_line(&self) -> String {
        format!("{} | {} | {}", self.subject, self.relation, self.object)
    }
}

impl PartialEq for Triplet {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Triplet {}

impl fmt::Display for Triplet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.constraint {
            None => write!(f, "<{}, {}, {}>", self.subject, self.relation, self.object),
            Some(c) => write!(
                f,
                "<{}, {}, {}, {}>",
                self.subject, self.relation, self.object, c
            ),
        }
    }
}

/// Split entity references into (known names, placeholders).
pub fn classify_entities<'a, I>(triplets: I) -> (BTreeSet<String>, BTreeSet<Placeholder>)
where
    I: IntoIterator<Item = &'a Triplet>,
{
    let mut known = BTreeSet::new();
    let mut unknown = BTreeSet::new();
    for t in triplets {
        for e in [&t.subject, &t.object] {
            match e {
                EntityRef::Known(name) => {
                    known.insert(name.clone());
                }
                EntityRef::Unknown(p) => {
                    unknown.insert(*p);
                }
            }
        }
    }
    (known, unknown)
}

/// Replace `placeholder` by `name` in every triplet.
pub fn substitute(triplets: &[Triplet], placeholder: Placeholder, name: &str) -> Vec<Triplet> {
    triplets
        .iter()
        .map(|t| t.substitute(placeholder, name))
        .collect()
}

fn dedup(triplets: impl IntoIterator<Item = Triplet>) -> Vec<Triplet> {
    let mut seen = HashSet::new();
    triplets
        .into_iter()
        .filter(|t| seen.insert(t.key()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimGraph {
    triplets: Vec<Triplet>,
    known: BTreeSet<String>,
    unknowns: BTreeSet<Placeholder>,
}

impl ClaimGraph {
    /// Builds a claim graph, deduplicating triplets and renumbering source
    /// indices in extraction order. Placeholder ids are kept as given; use
    /// [`ClaimGraphBuilder`] to assign them by first appearance.
    pub fn new(triplets: Vec<Triplet>) -> Self {
        let triplets: Vec<Triplet> = dedup(triplets)
            .into_iter()
            .enumerate()
            .map(|(i, t)| t.with_source_index(i))
            .collect();
        let (known, unknowns) = classify_entities(&triplets);
        ClaimGraph {
            triplets,
            known,
            unknowns,
        }
    }

    pub fn empty() -> Self {
        ClaimGraph::new(Vec::new())
    }

    pub fn triplets(&self) -> &[Triplet] {
        &self.triplets
    }

    pub fn known_entities(&self) -> &BTreeSet<String> {
        &self.known
    }

    pub fn unknowns(&self) -> &BTreeSet<Placeholder> {
        &self.unknowns
    }

    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }
}

/// Known-only triple graph. Triplet ids are their `source_index` values and
/// stay stable across [`EvidenceGraph::neighborhood`] and [`EvidenceGraph::union`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "EvidenceRepr")]
pub struct EvidenceGraph {
    triplets: Vec<Triplet>,
    #[serde(skip)]
    entity_index: BTreeMap<String, BTreeSet<usize>>,
}

#[derive(Deserialize)]
struct EvidenceRepr {
    triplets: Vec<Triplet>,
}

impl TryFrom<EvidenceRepr> for EvidenceGraph {
    type Error = GraphError;

    fn try_from(r: EvidenceRepr) -> Result<Self, GraphError> {
        EvidenceGraph::from_indexed(r.triplets)
    }
}

impl EvidenceGraph {
    /// Assigns ids 0.. in order after deduplication.
    pub fn new(triplets: Vec<Triplet>) -> Result<Self, GraphError> {
        let triplets = dedup(triplets)
            .into_iter()
            .enumerate()
            .map(|(i, t)| t.with_source_index(i))
            .collect();
        Self::from_indexed(triplets)
    }

    fn from_indexed(triplets: Vec<Triplet>) -> Result<Self, GraphError> {
        let mut entity_index: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
        for t in &triplets {
            if let Some(p) = t.unknowns().first() {
                return Err(GraphError::UnknownInEvidence(*p));
            }
            for name in t.known_names() {
                entity_index
                    .entry(name.to_string())
                    .or_default()
                    .insert(t.source_index);
            }
        }
        Ok(EvidenceGraph {
            triplets,
            entity_index,
        })
    }

    pub fn triplets(&self) -> &[Triplet] {
        &self.triplets
    }

    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }

    pub fn ids(&self) -> Vec<usize> {
        self.triplets.iter().map(|t| t.source_index).collect()
    }

    pub fn entity_index(&self) -> &BTreeMap<String, BTreeSet<usize>> {
        &self.entity_index
    }

    /// Known names occurring in the graph, in order of first appearance.
    pub fn entities(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.triplets
            .iter()
            .flat_map(|t| t.known_names())
            .filter(|n| seen.insert(*n))
            .collect()
    }

    pub fn contains(&self, t: &Triplet) -> bool {
        self.triplets.iter().any(|e| t.matches(e))
    }

    /// Evidence triplets sharing at least one known name with `t`. When `t`
    /// has no known entity the whole graph is returned.
    pub fn neighborhood(&self, t: &Triplet) -> EvidenceGraph {
        let names: Vec<&str> = t.known_names().collect();
        if names.is_empty() {
            return self.clone();
        }
        let ids: BTreeSet<usize> = names
            .iter()
            .filter_map(|n| self.entity_index.get(*n))
            .flatten()
            .copied()
            .collect();
        let triplets = self
            .triplets
            .iter()
            .filter(|t| ids.contains(&t.source_index))
            .cloned()
            .collect();
        // Subset of a valid graph: cannot fail.
        EvidenceGraph::from_indexed(triplets).expect("subgraph of a known-only graph")
    }

    /// Appends triplets from `other` not already present; new ids continue after the current maximum.
    pub fn union(&self, other: &EvidenceGraph) -> EvidenceGraph {
        let mut seen: HashSet<TripletKey> = self.triplets.iter().map(Triplet::key).collect();
        let mut next = self
            .triplets
            .iter()
            .map(|t| t.source_index + 1)
            .max()
            .unwrap_or(0);
        let mut triplets = self.triplets.clone();
        for t in &other.triplets {
            if seen.insert(t.key()) {
                triplets.push(t.clone().with_source_index(next));
                next += 1;
            }
        }
        EvidenceGraph::from_indexed(triplets).expect("union of known-only graphs")
    }
}

/// Keep triplets related to `entities`: those touching a provided entity or an
/// entity that co-occurs with one in some triplet (one hop, no transitive
/// expansion).
pub fn filter_related(triplets: Vec<Triplet>, entities: &BTreeSet<String>) -> Vec<Triplet> {
    let mut allowed: HashSet<&str> = entities.iter().map(String::as_str).collect();
    let neighbors: Vec<&str> = triplets
        .iter()
        .filter(|t| t.known_names().any(|n| entities.contains(n)))
        .flat_map(|t| t.known_names())
        .collect();
    allowed.extend(neighbors);
    let keep: Vec<bool> = triplets
        .iter()
        .map(|t| t.known_names().any(|n| allowed.contains(n)))
        .collect();
    triplets
        .into_iter()
        .zip(keep)
        .filter_map(|(t, k)| k.then_some(t))
        .collect()
}
