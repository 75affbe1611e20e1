//! Text formats for triples.
//!
//! Evidence triples are one `Subject | Predicate | Object` per line. Claim
//! graphs are accepted in three shapes:
//!
//! * the `entities = [...]` / `quads = [...]` literal emitted by the claim
//!   construction prompt (Python-ish or JSON quoting),
//! * `key: value` blocks separated by blank lines (the on-disk format),
//! * pipe lines, with placeholders written `x1` or `$A$`.

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use regex::Regex;
use serde_json::Value;

use super::{
    normalize_name, ClaimGraph, Constraint, ConstraintKind, EntityRef, EvidenceGraph, GraphError,
    RelationLabel, Triplet,
};

/// Parse one `Subject | Predicate | Object` line into a known/known triplet.
pub fn parse_evidence_triple_line(line: &str) -> Result<Triplet, GraphError> {
    let fields: Vec<&str> = line.split('|').map(str::trim).collect();
    if fields.len() != 3 {
        return Err(GraphError::FieldCount {
            line: line.to_string(),
            count: fields.len(),
        });
    }
    if fields.iter().any(|f| f.is_empty()) {
        return Err(GraphError::EmptyField(line.to_string()));
    }
    Triplet::known(fields[0], fields[1], fields[2])
}

/// Result of parsing a multi-line evidence response.
#[derive(Debug, Clone, Default)]
pub struct EvidenceParse {
    pub triplets: Vec<Triplet>,
    /// (1-based line number, error) for every non-blank line that failed.
    pub malformed: Vec<(usize, GraphError)>,
}

impl EvidenceParse {
    pub fn all_malformed(&self) -> bool {
        self.triplets.is_empty() && !self.malformed.is_empty()
    }
}

/// Line-wise parse; tolerates list bullets, numbering and backtick quoting.
pub fn parse_evidence_lines(text: &str) -> EvidenceParse {
    let mut out = EvidenceParse::default();
    for (i, line) in strip_fences(text).lines().enumerate() {
        let cleaned = strip_list_marker(line.trim()).trim_matches('`').trim();
        if cleaned.is_empty() {
            continue;
        }
        match parse_evidence_triple_line(cleaned) {
            Ok(t) => out.triplets.push(t),
            Err(e) => out.malformed.push((i + 1, e)),
        }
    }
    out
}

pub fn serialize_evidence_graph(g: &EvidenceGraph) -> String {
    g.triplets()
        .iter()
        .map(Triplet::to_triple_line)
        .collect::<Vec<_>>()
        .join("\n")
}

fn strip_list_marker(line: &str) -> &str {
    static MARKER: OnceLock<Regex> = OnceLock::new();
    let re = MARKER.get_or_init(|| Regex::new(r"^(?:[-*•]\s+|\d+[.)]\s+)").unwrap());
    match re.find(line) {
        Some(m) => &line[m.end()..],
        None => line,
    }
}

fn strip_fences(text: &str) -> String {
    text.lines()
        .filter(|l| !l.trim_start().starts_with("```"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn placeholder_token(s: &str) -> bool {
    static TOKEN: OnceLock<Regex> = OnceLock::new();
    let re = TOKEN.get_or_init(|| Regex::new(r"^(?:\$[^$\s][^$]*\$|[xX]_?\{?\d+\}?)$").unwrap());
    re.is_match(s.trim())
}

/// One extracted quad before placeholder assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawQuad {
    pub subject: String,
    pub predicate: String,
    pub object: String,
    pub constraint: Option<Constraint>,
    pub proposition: Option<String>,
}

impl RawQuad {
    pub fn new(subject: &str, predicate: &str, object: &str) -> Self {
        RawQuad {
            subject: subject.to_string(),
            predicate: predicate.to_string(),
            object: object.to_string(),
            constraint: None,
            proposition: None,
        }
    }
}

/// Maps raw quads to a [`ClaimGraph`]. Placeholder tokens (`x1`, `$A$`) and
/// names declared fuzzy become ordinal placeholders by first appearance.
#[derive(Debug, Clone, Default)]
pub struct ClaimGraphBuilder {
    fuzzy: HashSet<String>,
    quads: Vec<RawQuad>,
}

impl ClaimGraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fuzzy(mut self, name: &str) -> Self {
        self.fuzzy.insert(normalize_name(name));
        self
    }

    pub fn quad(mut self, quad: RawQuad) -> Self {
        self.quads.push(quad);
        self
    }

    pub fn build(self) -> Result<ClaimGraph, GraphError> {
        let mut ids: HashMap<String, u32> = HashMap::new();
        let mut resolve = |raw: &str| -> Result<EntityRef, GraphError> {
            let name = normalize_name(raw);
            if name.is_empty() {
                return Err(GraphError::EmptyEntity);
            }
            if placeholder_token(&name) || self.fuzzy.contains(&name) {
                let next = ids.len() as u32 + 1;
                let id = *ids.entry(name).or_insert(next);
                Ok(EntityRef::unknown(id))
            } else {
                Ok(EntityRef::Known(name))
            }
        };
        let mut triplets = Vec::with_capacity(self.quads.len());
        for q in &self.quads {
            let subject = resolve(&q.subject)?;
            let relation = RelationLabel::new(&q.predicate)?;
            let object = resolve(&q.object)?;
            triplets.push(
                Triplet::new(subject, relation, object).with_constraint(q.constraint.clone()),
            );
        }
        Ok(ClaimGraph::new(triplets))
    }
}

/// Parse a claim graph from any of the accepted record shapes. Free prose is
/// rejected.
pub fn parse_claim_record(text: &str) -> Result<ClaimGraph, GraphError> {
    static QUADS: OnceLock<Regex> = OnceLock::new();
    static KV: OnceLock<Regex> = OnceLock::new();
    let quads_re = QUADS.get_or_init(|| Regex::new(r#"["']?\bquads\b["']?\s*[=:]"#).unwrap());
    let kv_re = KV.get_or_init(|| Regex::new(r"(?m)^\s*(?:subject|predicate|object)\s*:").unwrap());

    let body = strip_fences(text);
    if body.trim().is_empty() {
        return Err(GraphError::Malformed("empty response".into()));
    }
    if quads_re.is_match(&body) {
        parse_literal(&body)
    } else if kv_re.is_match(&body) {
        parse_kv_blocks(&body)
    } else {
        parse_pipe_claim(&body)
    }
}

fn parse_pipe_claim(body: &str) -> Result<ClaimGraph, GraphError> {
    let mut builder = ClaimGraphBuilder::new();
    for line in body.lines() {
        let line = strip_list_marker(line.trim()).trim_matches('`').trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('|').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(GraphError::Malformed(format!(
                "not a claim graph record: {line:?}"
            )));
        }
        builder = builder.quad(RawQuad::new(fields[0], fields[1], fields[2]));
    }
    builder.build()
}

fn parse_kv_blocks(body: &str) -> Result<ClaimGraph, GraphError> {
    #[derive(Default)]
    struct Block {
        start: usize,
        fields: HashMap<String, String>,
    }

    fn finish(block: Block) -> Result<RawQuad, GraphError> {
        let get = |k: &str| -> Result<String, GraphError> {
            block
                .fields
                .get(k)
                .cloned()
                .ok_or_else(|| GraphError::Record {
                    line: block.start,
                    reason: format!("missing `{k}`"),
                })
        };
        let mut quad = RawQuad::new(&get("subject")?, &get("predicate")?, &get("object")?);
        quad.proposition = block.fields.get("proposition").cloned();
        match (
            block.fields.get("constraint_type"),
            block.fields.get("constraint_value"),
        ) {
            (Some(kind), Some(value)) => {
                let kind = ConstraintKind::parse(kind).ok_or_else(|| GraphError::Record {
                    line: block.start,
                    reason: format!("unknown constraint type {kind:?}"),
                })?;
                quad.constraint = Some(Constraint::new(kind, value));
            }
            (None, None) => {}
            _ => {
                return Err(GraphError::Record {
                    line: block.start,
                    reason: "constraint_type and constraint_value must appear together".into(),
                })
            }
        }
        Ok(quad)
    }

    let mut builder = ClaimGraphBuilder::new();
    let mut current: Option<Block> = None;
    for (i, line) in body.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.starts_with('#') {
            continue;
        }
        if trimmed.is_empty() {
            if let Some(block) = current.take() {
                builder = builder.quad(finish(block)?);
            }
            continue;
        }
        let (key, value) = trimmed.split_once(':').ok_or_else(|| GraphError::Record {
            line: i + 1,
            reason: format!("expected `key: value`, got {trimmed:?}"),
        })?;
        let key = match key.trim().to_lowercase().replace([' ', '-'], "_").as_str() {
            "relation" => "predicate".to_string(),
            "atomic_proposition" => "proposition".to_string(),
            k @ ("subject" | "predicate" | "object" | "constraint_type" | "constraint_value"
            | "proposition") => k.to_string(),
            other => {
                return Err(GraphError::Record {
                    line: i + 1,
                    reason: format!("unknown key `{other}`"),
                })
            }
        };
        let block = current.get_or_insert_with(|| Block {
            start: i + 1,
            ..Block::default()
        });
        if block
            .fields
            .insert(key.clone(), value.trim().to_string())
            .is_some()
        {
            return Err(GraphError::Record {
                line: i + 1,
                reason: format!("duplicate key `{key}`"),
            });
        }
    }
    if let Some(block) = current.take() {
        builder = builder.quad(finish(block)?);
    }
    builder.build()
}

fn parse_literal(body: &str) -> Result<ClaimGraph, GraphError> {
    let quads = extract_list(body, "quads")
        .ok_or_else(|| GraphError::Malformed("no `quads = [...]` list".into()))?;
    let entities = extract_list(body, "entities").unwrap_or_else(|| "[]".to_string());

    let quads: Vec<Value> = serde_json::from_str(&python_to_json(&quads))
        .map_err(|e| GraphError::Malformed(format!("quads: {e}")))?;
    let entities: Vec<Value> = serde_json::from_str(&python_to_json(&entities))
        .map_err(|e| GraphError::Malformed(format!("entities: {e}")))?;

    let mut builder = ClaimGraphBuilder::new();
    for e in &entities {
        let fuzzy = ["is fuzzy", "is_fuzzy", "fuzzy"]
            .iter()
            .find_map(|k| e.get(*k))
            .map(|v| {
                v.as_bool() == Some(true)
                    || v.as_str().map(|s| s.eq_ignore_ascii_case("true")) == Some(true)
            })
            .unwrap_or(false);
        if let (true, Some(name)) = (fuzzy, e.get("name").map(value_text)) {
            builder = builder.fuzzy(&name);
        }
    }
    for (i, q) in quads.iter().enumerate() {
        let field = |k: &str| -> Result<String, GraphError> {
            q.get(k)
                .map(value_text)
                .filter(|s| !s.trim().is_empty())
                .ok_or_else(|| GraphError::Malformed(format!("quad {} lacks `{k}`", i + 1)))
        };
        let predicate = field("predicate").or_else(|_| field("relation"))?;
        let mut quad = RawQuad::new(&field("subject")?, &predicate, &field("object")?);
        quad.proposition = q.get("atomic proposition").map(value_text);
        if let Some(c) = q.get("constraint").filter(|c| c.is_object()) {
            let kind = c.get("type").map(value_text).unwrap_or_default();
            let value = c.get("value").map(value_text).unwrap_or_default();
            match ConstraintKind::parse(&kind) {
                Some(kind) if !value.trim().is_empty() => {
                    quad.constraint = Some(Constraint::new(kind, &value))
                }
                _ if kind.trim().is_empty() && value.trim().is_empty() => {}
                _ => log::warn!(
                    "dropping constraint with unsupported type {kind:?} on quad {}",
                    i + 1
                ),
            }
        }
        builder = builder.quad(quad);
    }
    builder.build()
}

fn value_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// Bracketed list following `name =` or `"name":`, with string-aware bracket matching.
fn extract_list(body: &str, name: &str) -> Option<String> {
    let re = Regex::new(&format!(r#"["']?\b{name}\b["']?\s*[=:]\s*\["#)).ok()?;
    let m = re.find(body)?;
    let start = m.end() - 1;
    let mut depth = 0usize;
    let mut quote: Option<char> = None;
    let mut escaped = false;
    for (off, c) in body[start..].char_indices() {
        if let Some(q) = quote {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '"' | '\'' => quote = Some(c),
            '[' | '{' => depth += 1,
            ']' | '}' => {
                depth = depth.checked_sub(1)?;
                if depth == 0 {
                    return Some(body[start..start + off + 1].to_string());
                }
            }
            _ => {}
        }
    }
    None
}

/// Convert a Python literal (single quotes, True/False/None, comments,
/// trailing commas) into JSON text.
fn python_to_json(src: &str) -> String {
    let mut out = String::with_capacity(src.len());
    let mut chars = src.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\'' | '"' => {
                let q = c;
                out.push('"');
                while let Some(c) = chars.next() {
                    match c {
                        '\\' => {
                            if let Some(n) = chars.next() {
                                if n == '\'' {
                                    out.push('\'');
                                } else {
                                    out.push('\\');
                                    out.push(n);
                                }
                            }
                        }
                        '"' if q == '\'' => out.push_str("\\\""),
                        c if c == q => break,
                        '\n' => out.push_str("\\n"),
                        c => out.push(c),
                    }
                }
                out.push('"');
            }
            '#' => {
                while let Some(&n) = chars.peek() {
                    if n == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            ']' | '}' => {
                let trimmed = out.trim_end().len();
                out.truncate(trimmed);
                if out.ends_with(',') {
                    out.pop();
                }
                out.push(c);
            }
            c if c.is_ascii_alphabetic() => {
                let mut word = c.to_string();
                while let Some(&n) = chars.peek() {
                    if n.is_ascii_alphanumeric() || n == '_' {
                        word.push(n);
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push_str(match word.as_str() {
                    "True" => "true",
                    "False" => "false",
                    "None" => "null",
                    _ => &word,
                });
            }
            c => out.push(c),
        }
    }
    out
}

/// On-disk `key: value` block form; parses back to an equal graph.
pub fn serialize_claim_graph(g: &ClaimGraph) -> String {
    let mut blocks = Vec::with_capacity(g.len());
    for t in g.triplets() {
        let mut b = format!(
            "subject: {}\npredicate: {}\nobject: {}\n",
            t.subject, t.relation, t.object
        );
        if let Some(c) = &t.constraint {
            b.push_str(&format!(
                "constraint_type: {}\nconstraint_value: {}\n",
                c.kind.as_str(),
                c.value
            ));
        }
        blocks.push(b);
    }
    blocks.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Placeholder;

    #[test]
    fn evidence_line_from_pipe_text() {
        let t = parse_evidence_triple_line("Kathleen | Sister_of | Christopher").unwrap();
        assert_eq!(t.subject, EntityRef::Known("Kathleen".into()));
        assert_eq!(t.relation.canonical(), "sister_of");
        assert_eq!(t.object, EntityRef::Known("Christopher".into()));
        assert!(t.constraint.is_none());
    }

    #[test]
    fn evidence_self_loop() {
        let t = parse_evidence_triple_line("A | r | A").unwrap();
        assert_eq!(t.subject, t.object);
    }

    #[test]
    fn evidence_wrong_field_count() {
        match parse_evidence_triple_line("a | b") {
            Err(GraphError::FieldCount { count, line }) => {
                assert_eq!(count, 2);
                assert_eq!(line, "a | b");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_evidence_triple_line("a | | c").is_err());
    }

    #[test]
    fn evidence_lines_skip_malformed() {
        let p = parse_evidence_lines("- A | r | B\n\n`C | r | D`\nnot a triple\n3. E | r | F\n");
        assert_eq!(p.triplets.len(), 3);
        assert_eq!(p.malformed.len(), 1);
        assert_eq!(p.malformed[0].0, 4);
    }

    const SCHOOL_LITERAL: &str = r#"
entities = [
    {"name": "$A$", "type": "Person", "is fuzzy": True},
    {"name": "$B$", "type": "Organization", "is fuzzy": True},
    {'name': 'Christopher', 'type': 'Person', 'is fuzzy': False},  # father
    {"name": "Kathleen", "type": "Person", "is fuzzy": False},
]
quads = [
    {"atomic proposition": "The founder is the daughter of Christopher.", "subject": "$A$", "predicate": "Daughter_of", "object": "Christopher", "constraint": None},
    {"atomic proposition": "The founder founded the school.", "subject": "$A$", "predicate": "Founder_of", "object": "$B$"},
    {"atomic proposition": "Kathleen is Christopher's sister.", "subject": "Kathleen", "predicate": "Sister_of", "object": "Christopher", "constraint": {"type": "", "value": ""}},
    {"atomic proposition": "Kathleen was principal of the school.", "subject": "Kathleen", "predicate": "Principal_of", "object": "$B$"},
]
"#;

    #[test]
    fn literal_response_parses_with_placeholders() {
        let g = parse_claim_record(SCHOOL_LITERAL).unwrap();
        assert_eq!(g.len(), 4);
        let lines: Vec<String> = g.triplets().iter().map(|t| t.to_string()).collect();
        assert_eq!(
            lines,
            vec![
                "<x1, Daughter_of, Christopher>",
                "<x1, Founder_of, x2>",
                "<Kathleen, Sister_of, Christopher>",
                "<Kathleen, Principal_of, x2>",
            ]
        );
        assert_eq!(g.unknowns().len(), 2);
    }

    #[test]
    fn literal_fuzzy_names_become_placeholders() {
        let text = r#"entities = [{"name": "the school", "type": "Organization", "is fuzzy": true}]
quads = [{"subject": "Kathleen", "predicate": "principal of", "object": "the school",
          "constraint": {"type": "Temporal", "value": "1920"}}]"#;
        let g = parse_claim_record(text).unwrap();
        let t = &g.triplets()[0];
        assert_eq!(t.object, EntityRef::Unknown(Placeholder::new(1)));
        assert_eq!(t.relation.canonical(), "principal_of");
        assert_eq!(
            t.constraint,
            Some(Constraint::new(ConstraintKind::Temporal, "1920"))
        );
    }

    #[test]
    fn json_object_shape_is_accepted() {
        let text =
            r#"{"entities": [], "quads": [{"subject": "x1", "predicate": "r", "object": "B"}]}"#;
        let g = parse_claim_record(text).unwrap();
        assert_eq!(g.unknowns().len(), 1);
    }

    #[test]
    fn prose_is_rejected() {
        assert!(parse_claim_record("The claim talks about Kathleen and her brother.").is_err());
        assert!(parse_claim_record("   \n").is_err());
        assert!(parse_claim_record("quads = [ {\"subject\": \"A\"} ]").is_err());
    }

    #[test]
    fn placeholders_numbered_by_first_appearance() {
        let g = parse_claim_record("x2 | r | A\nx1 | s | x2\n").unwrap();
        let lines: Vec<String> = g.triplets().iter().map(|t| t.to_string()).collect();
        assert_eq!(lines, vec!["<x1, r, A>", "<x2, s, x1>"]);
    }

    #[test]
    fn kv_blocks_parse_and_reject() {
        let text = "# claim\nsubject: x1\npredicate: Daughter_of\nobject: Christopher\n\nsubject: Kathleen\nrelation: Sister of\nobject: Christopher\nconstraint_type: temporal\nconstraint_value: 1890\n";
        let g = parse_claim_record(text).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.triplets()[1].relation.canonical(), "sister_of");

        let missing = parse_claim_record("subject: A\npredicate: r\n");
        assert!(matches!(missing, Err(GraphError::Record { line: 1, .. })));
        let bad_key = parse_claim_record("subject: A\nverb: r\nobject: B\n");
        assert!(matches!(bad_key, Err(GraphError::Record { line: 2, .. })));
    }

    #[test]
    fn kv_roundtrip() {
        let g = parse_claim_record(SCHOOL_LITERAL).unwrap();
        let text = serialize_claim_graph(&g);
        assert_eq!(parse_claim_record(&text).unwrap(), g);
    }

    #[test]
    fn python_conversion_handles_quotes() {
        let j = python_to_json(r#"[{'a': "it's", 'b': 'say "hi"', 'c': None,},]"#);
        let v: Value = serde_json::from_str(&j).unwrap();
        assert_eq!(v[0]["a"], "it's");
        assert_eq!(v[0]["b"], "say \"hi\"");
        assert!(v[0]["c"].is_null());
    }
}
