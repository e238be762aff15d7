//! Topic taxonomy: terms with optional broader-term edges.

use std::collections::{BTreeMap, BTreeSet};

use crate::text::{self, TextError};
use crate::triple_store::{Store, Triple};
use crate::vocab::{self, class, pred, DecodeError, Kind};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Taxonomy {
    terms: BTreeSet<String>,
    broader: BTreeMap<String, BTreeSet<String>>,
}

impl Taxonomy {
    pub fn new() -> Self {
        Self::default()
    }

    /// One `term [broader-term]` per line. Repeating a term adds another
    /// broader edge.
    pub fn parse(text: &str) -> Result<Self, TextError> {
        let mut tax = Taxonomy::new();
        for line in text::lines(text)? {
            match line.tokens.as_slice() {
                [term] => {
                    text::check_name(&line, "topic", term)?;
                    tax.add(term, None);
                }
                [term, broader] => {
                    text::check_name(&line, "topic", term)?;
                    text::check_name(&line, "topic", broader)?;
                    tax.add(term, Some(broader));
                }
                _ => return Err(line.error("expected `term [broader-term]`")),
            }
        }
        Ok(tax)
    }

    pub fn add(&mut self, term: &str, broader: Option<&str>) {
        self.terms.insert(term.to_string());
        if let Some(b) = broader {
            self.terms.insert(b.to_string());
            self.broader
                .entry(term.to_string())
                .or_default()
                .insert(b.to_string());
        }
    }

    pub fn contains(&self, term: &str) -> bool {
        self.terms.contains(term)
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(String::as_str)
    }

    /// All transitively broader terms of `term`, excluding `term` itself.
    pub fn ancestors(&self, term: &str) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<&str> = vec![term];
        while let Some(t) = stack.pop() {
            for b in self.broader.get(t).into_iter().flatten() {
                if seen.insert(b.clone()) {
                    stack.push(b);
                }
            }
        }
        seen.remove(term);
        seen
    }

    /// Equal terms, or one is an ancestor of the other.
    pub fn related(&self, a: &str, b: &str) -> bool {
        a == b || self.ancestors(a).contains(b) || self.ancestors(b).contains(a)
    }

    pub fn to_triples(&self) -> Vec<Triple> {
        let mut out = Vec::new();
        for term in &self.terms {
            let s = vocab::mint(Kind::Topic, term);
            out.push(vocab::typed(&s, class::TOPIC));
            for b in self.broader.get(term).into_iter().flatten() {
                out.push(vocab::triple(
                    &s,
                    pred::BROADER,
                    vocab::mint(Kind::Topic, b),
                ));
            }
        }
        out
    }

    pub fn from_triples(store: &Store) -> Result<Self, DecodeError> {
        vocab::check_vocabulary(store)?;
        let mut tax = Taxonomy::new();
        for s in store.subjects_of_type(class::TOPIC) {
            let term = vocab::unmint(Kind::Topic, s).ok_or_else(|| {
                DecodeError::Structure(format!("{} is not a topic iri", s.value()))
            })?;
            tax.add(&term, None);
            for o in store.objects(s, pred::BROADER) {
                let b = vocab::unmint(Kind::Topic, o).ok_or_else(|| {
                    DecodeError::Structure(format!("{} is not a topic iri", o.value()))
                })?;
                tax.add(&term, Some(&b));
            }
        }
        Ok(tax)
    }
}
