use std::collections::BTreeMap;

use super::{Store, StoreError, Term, Triple};

/// One solution: variable name to bound term.
pub type Binding = BTreeMap<String, Term>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternTerm {
    Const(Term),
    Var(String),
}

impl PatternTerm {
    pub fn var(name: &str) -> Self {
        PatternTerm::Var(name.to_string())
    }

    pub fn iri(value: &str) -> Result<Self, StoreError> {
        Term::iri(value).map(PatternTerm::Const)
    }

    pub fn literal(value: &str) -> Self {
        PatternTerm::Const(Term::literal(value))
    }
}

impl From<Term> for PatternTerm {
    fn from(t: Term) -> Self {
        PatternTerm::Const(t)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriplePattern {
    subject: PatternTerm,
    predicate: PatternTerm,
    object: PatternTerm,
}

impl TriplePattern {
    /// Variable names must be non-empty and may not repeat inside one pattern.
    pub fn new(
        subject: PatternTerm,
        predicate: PatternTerm,
        object: PatternTerm,
    ) -> Result<Self, StoreError> {
        let mut seen: Vec<&str> = Vec::new();
        for term in [&subject, &predicate, &object] {
            if let PatternTerm::Var(name) = term {
                if name.is_empty() {
                    return Err(StoreError::InvalidPattern("empty variable name".into()));
                }
                if seen.contains(&name.as_str()) {
                    return Err(StoreError::InvalidPattern(format!(
                        "variable ?{name} repeats within one pattern"
                    )));
                }
                seen.push(name);
            }
        }
        Ok(TriplePattern {
            subject,
            predicate,
            object,
        })
    }

    pub fn positions(&self) -> [&PatternTerm; 3] {
        [&self.subject, &self.predicate, &self.object]
    }

    fn variables(&self) -> impl Iterator<Item = &str> {
        self.positions().into_iter().filter_map(|p| match p {
            PatternTerm::Var(v) => Some(v.as_str()),
            PatternTerm::Const(_) => None,
        })
    }

    /// Extends `binding` with the variables bound by unifying `triple`, or
    /// returns `None` when the triple conflicts with constants or earlier bindings.
    fn unify(&self, triple: &Triple, binding: &Binding) -> Option<Binding> {
        let mut out = binding.clone();
        for (pat, term) in
            self.positions()
                .into_iter()
                .zip([&triple.subject, &triple.predicate, &triple.object])
        {
            match pat {
                PatternTerm::Const(c) => {
                    if c != term {
                        return None;
                    }
                }
                PatternTerm::Var(v) => match out.get(v) {
                    Some(bound) if bound != term => return None,
                    Some(_) => {}
                    None => {
                        out.insert(v.clone(), term.clone());
                    }
                },
            }
        }
        Some(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryResult {
    /// Variables in order of first appearance in the query.
    pub variables: Vec<String>,
    /// Sorted by the bound terms, compared in `variables` order.
    pub bindings: Vec<Binding>,
}

impl QueryResult {
    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    /// Tab-separated rendering, one binding per line, terms in N-Triples syntax.
    pub fn to_table(&self) -> String {
        let mut out = self
            .variables
            .iter()
            .map(|v| format!("?{v}"))
            .collect::<Vec<_>>()
            .join("\t");
        out.push('\n');
        for b in &self.bindings {
            let row: Vec<String> = self.variables.iter().map(|v| b[v].to_string()).collect();
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
        out
    }
}

pub(super) fn evaluate(store: &Store, patterns: &[TriplePattern]) -> QueryResult {
    let mut variables: Vec<String> = Vec::new();
    for p in patterns {
        for v in p.variables() {
            if !variables.iter().any(|x| x == v) {
                variables.push(v.to_string());
            }
        }
    }

    let mut rows = vec![Binding::new()];
    for pattern in patterns {
        let mut next = Vec::new();
        for row in &rows {
            for triple in store.iter() {
                if let Some(extended) = pattern.unify(triple, row) {
                    next.push(extended);
                }
            }
        }
        rows = next;
        if rows.is_empty() {
            break;
        }
    }

    rows.sort_by(|a, b| {
        variables
            .iter()
            .map(|v| a[v].cmp(&b[v]))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    rows.dedup();
    QueryResult {
        variables,
        bindings: rows,
    }
}
