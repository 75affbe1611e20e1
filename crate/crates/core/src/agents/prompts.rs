//! Prompt templates and rendering.
//!
//! Template bodies are stored verbatim under `assets/prompts/`. Placeholders
//! are written `[[Name]]`. Templates with a demonstration slot carry the line
//! `(... more in-context examples here ...)`, which rendering replaces with the
//! template's example blocks (or drops when there are none).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const EXAMPLES_SLOT: &str = "(... more in-context examples here ...)";

/// Separator line between example blocks in an examples file.
pub const EXAMPLE_SEPARATOR: &str = "=====";

pub const DEFAULT_CONSTRUCTION_SHOTS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RenderError {
    #[error("no binding for placeholder [[{0}]]")]
    MissingBinding(String),
    #[error("cannot read template asset {path}: {reason}")]
    Asset { path: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemplateName {
    ClaimGraph,
    EvidenceGraph,
    GraphMatch,
    GraphCompletion,
    Direct,
    Decomposition,
}

impl TemplateName {
    pub const ALL: [TemplateName; 6] = [
        TemplateName::ClaimGraph,
        TemplateName::EvidenceGraph,
        TemplateName::GraphMatch,
        TemplateName::GraphCompletion,
        TemplateName::Direct,
        TemplateName::Decomposition,
    ];

    pub fn file_stem(self) -> &'static str {
        match self {
            TemplateName::ClaimGraph => "claim_graph",
            TemplateName::EvidenceGraph => "evidence_graph",
            TemplateName::GraphMatch => "graph_match",
            TemplateName::GraphCompletion => "graph_completion",
            TemplateName::Direct => "direct",
            TemplateName::Decomposition => "decomposition",
        }
    }

    fn builtin_body(self) -> &'static str {
        match self {
            TemplateName::ClaimGraph => include_str!("../../assets/prompts/claim_graph.txt"),
            TemplateName::EvidenceGraph => include_str!("../../assets/prompts/evidence_graph.txt"),
            TemplateName::GraphMatch => include_str!("../../assets/prompts/graph_match.txt"),
            TemplateName::GraphCompletion => {
                include_str!("../../assets/prompts/graph_completion.txt")
            }
            TemplateName::Direct => include_str!("../../assets/prompts/direct.txt"),
            TemplateName::Decomposition => include_str!("../../assets/prompts/decomposition.txt"),
        }
    }

    fn builtin_examples(self) -> Option<&'static str> {
        match self {
            TemplateName::ClaimGraph => Some(include_str!("../../assets/examples/claim_graph.txt")),
            TemplateName::EvidenceGraph => {
                Some(include_str!("../../assets/examples/evidence_graph.txt"))
            }
            TemplateName::Decomposition => {
                Some(include_str!("../../assets/examples/decomposition.txt"))
            }
            _ => None,
        }
    }
}

impl fmt::Display for TemplateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.file_stem())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: TemplateName,
    pub body: String,
    pub examples: Vec<String>,
}

fn token_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?m)\[\[([^\[\]\n]+)\]\]|^\(\.\.\. more in-context examples here \.\.\.\)\n?")
            .unwrap()
    })
}

/// Split an examples file on separator lines; blank blocks are dropped.
pub fn split_examples(text: &str) -> Vec<String> {
    let mut blocks = Vec::new();
    let mut current = Vec::new();
    for line in text.lines() {
        if line.trim() == EXAMPLE_SEPARATOR {
            blocks.push(current.join("\n"));
            current.clear();
        } else {
            current.push(line);
        }
    }
    blocks.push(current.join("\n"));
    blocks
        .into_iter()
        .map(|b| b.trim_matches('\n').to_string())
        .filter(|b| !b.trim().is_empty())
        .collect()
}

impl PromptTemplate {
    pub fn new(name: TemplateName, body: impl Into<String>) -> Self {
        PromptTemplate {
            name,
            body: body.into(),
            examples: Vec::new(),
        }
    }

    /// Built-in body; construction and decomposition templates get the first
    /// `shots` shipped examples, match and completion get none.
    pub fn builtin(name: TemplateName, shots: usize) -> Self {
        let examples = name
            .builtin_examples()
            .map(split_examples)
            .unwrap_or_default()
            .into_iter()
            .take(shots)
            .collect();
        PromptTemplate {
            name,
            body: name.builtin_body().to_string(),
            examples,
        }
    }

    pub fn with_examples(mut self, examples: Vec<String>) -> Self {
        self.examples = examples;
        self
    }

    /// Placeholder names in order of first appearance.
    pub fn placeholders(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for cap in token_re().captures_iter(&self.body) {
            if let Some(m) = cap.get(1) {
                if !out.iter().any(|p| p == m.as_str()) {
                    out.push(m.as_str().to_string());
                }
            }
        }
        out
    }

    /// Substitute every `[[Name]]` from `bindings` and insert example blocks.
    /// Binding values and examples are inserted verbatim and never rescanned.
    pub fn render(&self, bindings: &BTreeMap<&str, &str>) -> Result<String, RenderError> {
        let mut out = String::with_capacity(self.body.len() + 256);
        let mut last = 0;
        for cap in token_re().captures_iter(&self.body) {
            let whole = cap.get(0).unwrap();
            out.push_str(&self.body[last..whole.start()]);
            match cap.get(1) {
                Some(name) => {
                    let value = bindings
                        .get(name.as_str())
                        .ok_or_else(|| RenderError::MissingBinding(name.as_str().to_string()))?;
                    out.push_str(value);
                }
                None if !self.examples.is_empty() => {
                    out.push_str(&self.examples.join("\n\n"));
                    if whole.as_str().ends_with('\n') {
                        out.push('\n');
                    }
                }
                None => {}
            }
            last = whole.end();
        }
        out.push_str(&self.body[last..]);
        Ok(out)
    }
}

/// The six templates used by the model backend.
#[derive(Debug, Clone)]
pub struct PromptSet {
    templates: BTreeMap<TemplateName, PromptTemplate>,
}

impl Default for PromptSet {
    fn default() -> Self {
        PromptSet::builtin(DEFAULT_CONSTRUCTION_SHOTS)
    }
}

impl PromptSet {
    pub fn builtin(shots: usize) -> Self {
        let templates = TemplateName::ALL
            .into_iter()
            .map(|n| (n, PromptTemplate::builtin(n, shots)))
            .collect();
        PromptSet { templates }
    }

    /// Override bodies and examples from `dir`: `<stem>.txt` replaces a body,
    /// `<stem>.examples.txt` replaces an example set. Missing files keep the
    /// built-in asset.
    pub fn from_dir(dir: &Path, shots: usize) -> Result<Self, RenderError> {
        let mut set = PromptSet::builtin(shots);
        let read = |p: &Path| {
            std::fs::read_to_string(p).map_err(|e| RenderError::Asset {
                path: p.display().to_string(),
                reason: e.to_string(),
            })
        };
        for name in TemplateName::ALL {
            let t = set.templates.get_mut(&name).unwrap();
            let body = dir.join(format!("{}.txt", name.file_stem()));
            if body.exists() {
                t.body = read(&body)?;
            }
            let examples = dir.join(format!("{}.examples.txt", name.file_stem()));
            if examples.exists() {
                t.examples = split_examples(&read(&examples)?)
                    .into_iter()
                    .take(shots)
                    .collect();
            }
        }
        Ok(set)
    }

    pub fn get(&self, name: TemplateName) -> &PromptTemplate {
        &self.templates[&name]
    }

    pub fn render(
        &self,
        name: TemplateName,
        bindings: &[(&str, &str)],
    ) -> Result<String, RenderError> {
        let map: BTreeMap<&str, &str> = bindings.iter().copied().collect();
        self.get(name).render(&map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bind<'a>(pairs: &[(&'a str, &'a str)]) -> BTreeMap<&'a str, &'a str> {
        pairs.iter().copied().collect()
    }

    #[test]
    fn placeholder_inventory() {
        let p = |n| PromptTemplate::builtin(n, 0).placeholders();
        assert_eq!(p(TemplateName::ClaimGraph), vec!["Claim"]);
        assert_eq!(
            p(TemplateName::EvidenceGraph),
            vec!["Evidence", "Entity Set"]
        );
        assert_eq!(p(TemplateName::GraphMatch), vec!["Evidence", "Quadruple"]);
        assert_eq!(
            p(TemplateName::GraphCompletion),
            vec!["Evidence", "Quadruples"]
        );
        assert_eq!(p(TemplateName::Direct), vec!["Evidence", "Claim"]);
        assert_eq!(p(TemplateName::Decomposition), vec!["Claim"]);
    }

    #[test]
    fn match_prompt_ends_with_output_cue() {
        let t = PromptTemplate::builtin(TemplateName::GraphMatch, 0);
        let out = t
            .render(&bind(&[
                ("Evidence", "Kathleen | Sister_of | Christopher"),
                ("Quadruple", "<Kathleen, Sister_of, Christopher>"),
            ]))
            .unwrap();
        assert!(out.trim_end().ends_with("Output(true/false):"));
        assert!(!out.contains("[["));
    }

    #[test]
    fn no_placeholders_is_identity() {
        let t = PromptTemplate::new(TemplateName::Direct, "static text\n");
        assert_eq!(t.render(&BTreeMap::new()).unwrap(), "static text\n");
    }

    #[test]
    fn missing_binding_is_named() {
        let t = PromptTemplate::builtin(TemplateName::GraphCompletion, 0);
        let err = t.render(&bind(&[("Evidence", "e")])).unwrap_err();
        assert_eq!(err, RenderError::MissingBinding("Quadruples".into()));
    }

    #[test]
    fn bindings_are_not_rescanned() {
        let t = PromptTemplate::new(TemplateName::Direct, "[[Claim]]|[[Evidence]]");
        let out = t
            .render(&bind(&[("Claim", "[[Evidence]]"), ("Evidence", "E")]))
            .unwrap();
        assert_eq!(out, "[[Evidence]]|E");
    }

    #[test]
    fn examples_fill_slot_in_order() {
        let t = PromptTemplate::new(
            TemplateName::Decomposition,
            format!("head\n{EXAMPLES_SLOT}\ntail [[Claim]]"),
        )
        .with_examples(vec!["one".into(), "two".into()]);
        let out = t.render(&bind(&[("Claim", "c")])).unwrap();
        assert_eq!(out, "head\none\n\ntwo\ntail c");

        let bare = PromptTemplate::new(
            TemplateName::Decomposition,
            format!("head\n{EXAMPLES_SLOT}\ntail"),
        );
        assert_eq!(bare.render(&BTreeMap::new()).unwrap(), "head\ntail");
    }

    #[test]
    fn shipped_example_counts() {
        for name in [
            TemplateName::ClaimGraph,
            TemplateName::EvidenceGraph,
            TemplateName::Decomposition,
        ] {
            assert_eq!(
                PromptTemplate::builtin(name, 10).examples.len(),
                10,
                "{name}"
            );
        }
        assert!(PromptTemplate::builtin(TemplateName::GraphMatch, 10)
            .examples
            .is_empty());
    }

    #[test]
    fn split_examples_on_separator() {
        let blocks = split_examples("a\nb\n=====\n\nc\n=====\n");
        assert_eq!(blocks, vec!["a\nb", "c"]);
    }
}
