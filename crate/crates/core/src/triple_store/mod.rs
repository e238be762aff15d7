//! Embedded set of subject-predicate-object triples.
//!
//! The store keeps triples in canonical order (iris before literals, then by
//! value, then by datatype), so iteration, query results and serialization are
//! deterministic. Queries are conjunctions of triple patterns evaluated with a
//! nested-loop join; the store targets desk-scale data.

mod ntriples;
mod query;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

pub use ntriples::{parse, serialize};
pub use query::{Binding, PatternTerm, QueryResult, TriplePattern};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StoreError {
    #[error("invalid iri {0:?}: must be non-empty without whitespace, control characters or <>\"{{}}|^`\\")]
    InvalidIri(String),
    #[error("{position} must be an iri, found literal {value:?}")]
    LiteralInIriPosition {
        position: &'static str,
        value: String,
    },
    #[error("invalid pattern: {0}")]
    InvalidPattern(String),
    #[error("line {line}: unsupported term {term:?}")]
    UnsupportedTerm { line: usize, term: String },
    #[error("line {line}: syntax error: {message}")]
    Syntax { line: usize, message: String },
}

/// An RDF term restricted to iris and (optionally typed) literals.
///
/// Variant order matters: the derived `Ord` is the canonical term order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Iri(String),
    Literal {
        value: String,
        datatype: Option<String>,
    },
}

impl Term {
    pub fn iri(value: impl Into<String>) -> Result<Self, StoreError> {
        let value = value.into();
        check_iri(&value)?;
        Ok(Term::Iri(value))
    }

    pub fn literal(value: impl Into<String>) -> Self {
        Term::Literal {
            value: value.into(),
            datatype: None,
        }
    }

    pub fn typed(
        value: impl Into<String>,
        datatype: impl Into<String>,
    ) -> Result<Self, StoreError> {
        let datatype = datatype.into();
        check_iri(&datatype)?;
        Ok(Term::Literal {
            value: value.into(),
            datatype: Some(datatype),
        })
    }

    pub fn is_iri(&self) -> bool {
        matches!(self, Term::Iri(_))
    }

    /// The iri text or the literal lexical form.
    pub fn value(&self) -> &str {
        match self {
            Term::Iri(v) => v,
            Term::Literal { value, .. } => value,
        }
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(v) => Some(v),
            Term::Literal { .. } => None,
        }
    }

    pub fn as_literal(&self) -> Option<&str> {
        match self {
            Term::Iri(_) => None,
            Term::Literal { value, .. } => Some(value),
        }
    }

    fn validate(&self) -> Result<(), StoreError> {
        match self {
            Term::Iri(v) => check_iri(v),
            Term::Literal {
                datatype: Some(dt), ..
            } => check_iri(dt),
            Term::Literal { .. } => Ok(()),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&ntriples::format_term(self))
    }
}

pub(crate) fn check_iri(value: &str) -> Result<(), StoreError> {
    let bad = value.is_empty()
        || value.chars().any(|c| {
            c.is_whitespace()
                || c.is_control()
                || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\')
        });
    if bad {
        Err(StoreError::InvalidIri(value.to_string()))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Term, predicate: Term, object: Term) -> Result<Self, StoreError> {
        let triple = Triple {
            subject,
            predicate,
            object,
        };
        triple.validate()?;
        Ok(triple)
    }

    pub fn validate(&self) -> Result<(), StoreError> {
        for (position, term) in [("subject", &self.subject), ("predicate", &self.predicate)] {
            if let Term::Literal { value, .. } = term {
                return Err(StoreError::LiteralInIriPosition {
                    position,
                    value: value.clone(),
                });
            }
        }
        self.subject.validate()?;
        self.predicate.validate()?;
        self.object.validate()
    }
}

/// A set of triples in canonical order.
///
/// Mutation needs `&mut self`; shared references may be queried from many
/// threads at once.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Store {
    triples: BTreeSet<Triple>,
}

impl Store {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a triple. Returns `false` if it was already present.
    pub fn insert(&mut self, triple: Triple) -> Result<bool, StoreError> {
        triple.validate()?;
        Ok(self.triples.insert(triple))
    }

    pub fn extend<I: IntoIterator<Item = Triple>>(&mut self, triples: I) -> Result<(), StoreError> {
        for t in triples {
            self.insert(t)?;
        }
        Ok(())
    }

    pub fn merge(&mut self, other: Store) {
        self.triples.extend(other.triples);
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.triples.contains(triple)
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Triples in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    /// All bindings of `pattern` against the store.
    pub fn match_pattern(&self, pattern: &TriplePattern) -> QueryResult {
        query::evaluate(self, std::slice::from_ref(pattern))
    }

    /// Natural join of the matches of every pattern.
    pub fn query(&self, patterns: &[TriplePattern]) -> QueryResult {
        query::evaluate(self, patterns)
    }

    /// Objects of all triples with the given subject and predicate.
    pub fn objects<'a, 'p>(
        &'a self,
        subject: &'a Term,
        predicate: &'p str,
    ) -> impl Iterator<Item = &'a Term> + use<'a, 'p> {
        self.triples
            .iter()
            .filter(move |t| &t.subject == subject && t.predicate.value() == predicate)
            .map(|t| &t.object)
    }

    /// Subjects typed with `class` via rdf:type.
    pub fn subjects_of_type<'a>(&'a self, class: &'a str) -> impl Iterator<Item = &'a Term> + 'a {
        self.triples
            .iter()
            .filter(move |t| {
                t.predicate.value() == crate::vocab::RDF_TYPE && t.object.as_iri() == Some(class)
            })
            .map(|t| &t.subject)
    }
}

impl FromIterator<Triple> for Store {
    /// Collects already-validated triples.
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        Store {
            triples: iter.into_iter().collect(),
        }
    }
}

impl IntoIterator for Store {
    type Item = Triple;
    type IntoIter = std::collections::btree_set::IntoIter<Triple>;

    fn into_iter(self) -> Self::IntoIter {
        self.triples.into_iter()
    }
}
