//! Concept hierarchy with synonyms, and weighted query expansion over it.
//!
//! File format (UTF-8), one blank-line-separated stanza per concept:
//!
//! ```text
//! # comment
//! concept: sky
//! parent: nature
//! synonyms: heavens, firmament
//! ```
//!
//! Tokens are lowercase `[a-z0-9_-]+`. A parent must be declared somewhere in
//! the file; concepts without a parent hang off the implicit root.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::error::{Error, Result};

const BUNDLED_COREL: &str = include_str!("../../data/corel.ontology");

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Concept {
    parent: Option<String>,
    synonyms: BTreeSet<String>,
    children: BTreeSet<String>,
    line: usize,
    parent_line: usize,
}

/// Immutable is-a hierarchy of lowercase concept tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ontology {
    concepts: BTreeMap<String, Concept>,
    /// synonym token -> owning concept
    synonym_index: BTreeMap<String, String>,
}

fn is_token(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_' || b == b'-')
}

fn parse_error(line: usize, reason: impl Into<String>) -> Error {
    Error::Parse { line, reason: reason.into() }
}

#[derive(Default)]
struct Stanza {
    concept: Option<(String, usize)>,
    parent: Option<(String, usize)>,
    synonyms: Vec<(String, usize)>,
    first_line: usize,
}

impl Ontology {
    /// The ten-class COREL hierarchy shipped with the crate.
    pub fn bundled_corel() -> Self {
        Self::parse(BUNDLED_COREL).expect("bundled ontology is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut stanzas: Vec<Stanza> = Vec::new();
        let mut current = Stanza::default();
        let flush = |cur: &mut Stanza, out: &mut Vec<Stanza>| -> Result<()> {
            let taken = std::mem::take(cur);
            if taken.concept.is_none() {
                if taken.parent.is_some() || !taken.synonyms.is_empty() {
                    return Err(parse_error(taken.first_line, "stanza has no 'concept:' line"));
                }
                return Ok(());
            }
            out.push(taken);
            Ok(())
        };

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                flush(&mut current, &mut stanzas)?;
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            if current.first_line == 0 {
                current.first_line = line_no;
            }
            let (key, value) = line.split_once(':').ok_or_else(|| parse_error(line_no, "expected 'key: value'"))?;
            let value = value.trim();
            let token = |v: &str| -> Result<String> {
                if is_token(v) {
                    Ok(v.to_string())
                } else {
                    Err(parse_error(line_no, format!("invalid token '{v}'")))
                }
            };
            match key.trim() {
                "concept" => {
                    if current.concept.is_some() {
                        return Err(parse_error(line_no, "second 'concept:' in one stanza"));
                    }
                    current.concept = Some((token(value)?, line_no));
                }
                "parent" => {
                    if current.parent.is_some() {
                        return Err(parse_error(line_no, "multiple parents are not supported"));
                    }
                    current.parent = Some((token(value)?, line_no));
                }
                "synonyms" => {
                    for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                        current.synonyms.push((token(part)?, line_no));
                    }
                }
                other => return Err(parse_error(line_no, format!("unknown key '{other}'"))),
            }
        }
        flush(&mut current, &mut stanzas)?;
        Self::build(stanzas)
    }

    fn build(stanzas: Vec<Stanza>) -> Result<Self> {
        let mut onto = Ontology::default();
        for st in &stanzas {
            let (name, line) = st.concept.clone().expect("flushed stanzas have a concept");
            if onto.concepts.contains_key(&name) {
                return Err(parse_error(line, format!("concept '{name}' declared twice")));
            }
            onto.concepts.insert(name, Concept { line, ..Default::default() });
        }
        for st in &stanzas {
            let (name, _) = st.concept.as_ref().unwrap();
            if let Some((parent, pline)) = &st.parent {
                if !onto.concepts.contains_key(parent) {
                    return Err(parse_error(*pline, format!("unknown parent concept '{parent}'")));
                }
                let c = onto.concepts.get_mut(name).unwrap();
                c.parent = Some(parent.clone());
                c.parent_line = *pline;
            }
            for (syn, sline) in &st.synonyms {
                let clashes_concept = onto.concepts.contains_key(syn) && syn != name;
                if clashes_concept || onto.synonym_index.contains_key(syn) {
                    return Err(Error::DuplicateSynonym { line: *sline, token: syn.clone() });
                }
                onto.synonym_index.insert(syn.clone(), name.clone());
                onto.concepts.get_mut(name).unwrap().synonyms.insert(syn.clone());
            }
        }
        onto.check_acyclic()?;
        let edges: Vec<(String, String)> =
            onto.concepts.iter().filter_map(|(n, c)| c.parent.clone().map(|p| (p, n.clone()))).collect();
        for (parent, child) in edges {
            onto.concepts.get_mut(&parent).unwrap().children.insert(child);
        }
        Ok(onto)
    }

    fn check_acyclic(&self) -> Result<()> {
        // Single parent per concept: follow the chain, a repeat is a cycle.
        let mut clean: BTreeSet<&str> = BTreeSet::new();
        for start in self.concepts.keys() {
            let mut path: Vec<&str> = Vec::new();
            let mut cur = Some(start.as_str());
            while let Some(name) = cur {
                if clean.contains(name) {
                    break;
                }
                if path.contains(&name) {
                    let line = self.concepts[name].parent_line;
                    return Err(Error::CycleDetected { line, concept: name.to_string() });
                }
                path.push(name);
                cur = self.concepts[name].parent.as_deref();
            }
            clean.extend(path);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn concepts(&self) -> impl Iterator<Item = &str> {
        self.concepts.keys().map(String::as_str)
    }

    pub fn contains(&self, concept: &str) -> bool {
        self.concepts.contains_key(concept)
    }

    pub fn parent(&self, concept: &str) -> Option<&str> {
        self.concepts.get(concept)?.parent.as_deref()
    }

    pub fn children(&self, concept: &str) -> impl Iterator<Item = &str> {
        self.concepts.get(concept).into_iter().flat_map(|c| c.children.iter().map(String::as_str))
    }

    pub fn synonyms(&self, concept: &str) -> impl Iterator<Item = &str> {
        self.concepts.get(concept).into_iter().flat_map(|c| c.synonyms.iter().map(String::as_str))
    }

    /// Concept named by `token`, either directly or through a synonym.
    pub fn resolve(&self, token: &str) -> Option<&str> {
        if let Some((name, _)) = self.concepts.get_key_value(token) {
            return Some(name);
        }
        self.synonym_index.get(token).map(String::as_str)
    }

    /// Keywords attached to an image of class `concept`: its synonyms, then its parent.
    pub fn keywords_for(&self, concept: &str) -> Vec<String> {
        let mut out: Vec<String> = self.synonyms(concept).map(str::to_string).collect();
        if let Some(p) = self.parent(concept) {
            out.push(p.to_string());
        }
        out
    }
}

/// Weights assigned by [`expand_query`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionWeights {
    /// The query term itself, its concept and that concept's synonyms.
    pub term: f64,
    pub parent: f64,
    pub child: f64,
}

impl Default for ExpansionWeights {
    fn default() -> Self {
        Self { term: 1.0, parent: 0.5, child: 0.7 }
    }
}

/// Query terms with weights in (0, 1].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExpandedQuery {
    terms: BTreeMap<String, f64>,
}

impl ExpandedQuery {
    fn add(&mut self, term: &str, weight: f64) {
        let w = self.terms.entry(term.to_string()).or_insert(0.0);
        *w = w.max(weight);
    }

    pub fn weight(&self, term: &str) -> Option<f64> {
        self.terms.get(term).copied()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, f64)> {
        self.terms.iter().map(|(t, w)| (t.as_str(), *w))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.terms.values().sum()
    }
}

pub fn expand_query<S: AsRef<str>>(terms: &[S], onto: &Ontology) -> Result<ExpandedQuery> {
    expand_query_with(terms, onto, &ExpansionWeights::default())
}

pub fn expand_query_with<S: AsRef<str>>(
    terms: &[S],
    onto: &Ontology,
    weights: &ExpansionWeights,
) -> Result<ExpandedQuery> {
    let mut q = ExpandedQuery::default();
    for raw in terms {
        let term = raw.as_ref().trim().to_lowercase();
        if term.is_empty() {
            continue;
        }
        q.add(&term, weights.term);
        let Some(concept) = onto.resolve(&term) else { continue };
        q.add(concept, weights.term);
        for syn in onto.synonyms(concept) {
            q.add(syn, weights.term);
        }
        if let Some(parent) = onto.parent(concept) {
            q.add(parent, weights.parent);
        }
        for child in onto.children(concept) {
            q.add(child, weights.child);
        }
    }
    if q.is_empty() {
        return Err(Error::EmptyQuery);
    }
    Ok(q)
}
