//! The `coplan` vocabulary: iri minting for model elements, predicate and
//! class names, and helpers for reading projected triples back.

use percent_encoding::{percent_decode_str, utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use thiserror::Error;

use crate::triple_store::{Store, Term, Triple};

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const XSD_DOUBLE: &str = "http://www.w3.org/2001/XMLSchema#double";
pub const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";
pub const XSD_BOOLEAN: &str = "http://www.w3.org/2001/XMLSchema#boolean";

const NAME_ENCODE: &AsciiSet = &NON_ALPHANUMERIC
    .remove(b'-')
    .remove(b'.')
    .remove(b'_')
    .remove(b'~');

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Domain,
    Object,
    Attribute,
    Component,
    Variable,
    Scenario,
    Simulator,
    Entity,
    Connection,
    Param,
    Evaluation,
    Facet,
    Criterion,
    Transform,
    Topic,
    Run,
    Sample,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Domain => "domain",
            Kind::Object => "object",
            Kind::Attribute => "attribute",
            Kind::Component => "component",
            Kind::Variable => "variable",
            Kind::Scenario => "scenario",
            Kind::Simulator => "simulator",
            Kind::Entity => "entity",
            Kind::Connection => "connection",
            Kind::Param => "param",
            Kind::Evaluation => "evaluation",
            Kind::Facet => "facet",
            Kind::Criterion => "criterion",
            Kind::Transform => "transform",
            Kind::Topic => "topic",
            Kind::Run => "run",
            Kind::Sample => "sample",
        }
    }

    fn prefix(self) -> String {
        format!("urn:coplan:{}:", self.as_str())
    }
}

/// `urn:coplan:<kind>:<percent-encoded-name>`
pub fn mint(kind: Kind, name: &str) -> Term {
    Term::Iri(format!(
        "{}{}",
        kind.prefix(),
        utf8_percent_encode(name, NAME_ENCODE)
    ))
}

/// Inverse of [`mint`]; `None` if `term` is not an iri of that kind.
pub fn unmint(kind: Kind, term: &Term) -> Option<String> {
    let rest = term.as_iri()?.strip_prefix(&kind.prefix())?;
    percent_decode_str(rest)
        .decode_utf8()
        .ok()
        .map(|s| s.into_owned())
}

pub mod class {
    pub const DOMAIN: &str = "coplan:Domain";
    pub const OBJECT: &str = "coplan:DomainObject";
    pub const ATTRIBUTE: &str = "coplan:Attribute";
    pub const EVALUATION: &str = "coplan:EvaluationFunction";
    pub const FACET: &str = "coplan:Facet";
    pub const CRITERION: &str = "coplan:Criterion";
    pub const TRANSFORM: &str = "coplan:TransformationFunction";
    pub const COMPONENT: &str = "coplan:Component";
    pub const VARIABLE: &str = "coplan:Variable";
    pub const SCENARIO: &str = "coplan:Scenario";
    pub const SIMULATOR: &str = "coplan:SimulatorInstance";
    pub const ENTITY: &str = "coplan:Entity";
    pub const CONNECTION: &str = "coplan:Connection";
    pub const PARAM: &str = "coplan:Param";
    pub const TOPIC: &str = "coplan:Topic";
    pub const RUN: &str = "coplan:Run";
    pub const SAMPLE: &str = "coplan:Sample";
}

pub mod pred {
    // information model
    pub const IN_DOMAIN: &str = "coplan:inDomain";
    pub const HAS_ATTRIBUTE: &str = "coplan:hasAttribute";
    pub const HAS_UNIT: &str = "coplan:hasUnit";
    pub const HAS_TOPIC: &str = "coplan:hasTopic";
    pub const HAS_ROLE: &str = "coplan:hasRole";
    pub const HAS_RANGE: &str = "coplan:hasRange";
    pub const HAS_FACET: &str = "coplan:hasFacet";
    pub const HAS_CRITERION: &str = "coplan:hasCriterion";
    pub const TRANSFORM_INPUT: &str = "coplan:transformInput";
    pub const TRANSFORM_OUTPUT: &str = "coplan:transformOutput";
    pub const TRANSFORM_KIND: &str = "coplan:transformKind";
    pub const HAS_NAME: &str = "coplan:hasName";
    // catalog
    pub const HAS_VARIABLE: &str = "coplan:hasVariable";
    pub const HAS_DOMAIN: &str = "coplan:hasDomain";
    pub const HAS_CAUSALITY: &str = "coplan:hasCausality";
    pub const HAS_VARIABILITY: &str = "coplan:hasVariability";
    pub const HAS_MIN: &str = "coplan:hasMin";
    pub const HAS_MAX: &str = "coplan:hasMax";
    pub const HAS_START: &str = "coplan:hasStart";
    pub const HAS_CONTACT: &str = "coplan:hasContact";
    pub const SOFTWARE_TYPE: &str = "coplan:softwareType";
    pub const HAS_LICENSE: &str = "coplan:hasLicense";
    pub const HAS_API: &str = "coplan:hasApi";
    pub const HAS_PLATFORM: &str = "coplan:hasPlatform";
    pub const BUILTIN: &str = "coplan:builtin";
    pub const TEMPORAL_RESOLUTION: &str = "coplan:temporalResolution";
    pub const SPATIAL_RESOLUTION: &str = "coplan:spatialResolution";
    pub const HAS_NOTE: &str = "coplan:hasNote";
    // scenario
    pub const INSTANCE_OF: &str = "coplan:instanceOf";
    pub const HAS_SIMULATOR: &str = "coplan:hasSimulator";
    pub const HAS_ENTITY: &str = "coplan:hasEntity";
    pub const HAS_CONNECTION: &str = "coplan:hasConnection";
    pub const RUNS_ON: &str = "coplan:runsOn";
    pub const HAS_MODEL: &str = "coplan:hasModel";
    pub const CONNECTS_FROM: &str = "coplan:connectsFrom";
    pub const CONNECTS_TO: &str = "coplan:connectsTo";
    pub const FROM_VARIABLE: &str = "coplan:fromVariable";
    pub const TO_VARIABLE: &str = "coplan:toVariable";
    pub const TIME_SHIFTED: &str = "coplan:timeShifted";
    pub const TRANSFORM_FACTOR: &str = "coplan:transformFactor";
    pub const TRANSFORM_OFFSET: &str = "coplan:transformOffset";
    pub const HAS_PARAM: &str = "coplan:hasParam";
    pub const STEP_SECONDS: &str = "coplan:stepSeconds";
    pub const BASE_STEP_SECONDS: &str = "coplan:baseStepSeconds";
    pub const HAS_VALUE: &str = "coplan:hasValue";
    // taxonomy
    pub const BROADER: &str = "coplan:broader";
    // results
    pub const OF_ENTITY: &str = "coplan:ofEntity";
    pub const OF_VARIABLE: &str = "coplan:ofVariable";
    pub const AT_TIME: &str = "coplan:atTime";
    pub const OBSERVES: &str = "coplan:observes";

    pub const ALL: &[&str] = &[
        IN_DOMAIN,
        HAS_ATTRIBUTE,
        HAS_UNIT,
        HAS_TOPIC,
        HAS_ROLE,
        HAS_RANGE,
        HAS_FACET,
        HAS_CRITERION,
        TRANSFORM_INPUT,
        TRANSFORM_OUTPUT,
        TRANSFORM_KIND,
        HAS_NAME,
        HAS_VARIABLE,
        HAS_DOMAIN,
        HAS_CAUSALITY,
        HAS_VARIABILITY,
        HAS_MIN,
        HAS_MAX,
        HAS_START,
        HAS_CONTACT,
        SOFTWARE_TYPE,
        HAS_LICENSE,
        HAS_API,
        HAS_PLATFORM,
        BUILTIN,
        TEMPORAL_RESOLUTION,
        SPATIAL_RESOLUTION,
        HAS_NOTE,
        INSTANCE_OF,
        HAS_SIMULATOR,
        HAS_ENTITY,
        HAS_CONNECTION,
        RUNS_ON,
        HAS_MODEL,
        CONNECTS_FROM,
        CONNECTS_TO,
        FROM_VARIABLE,
        TO_VARIABLE,
        TIME_SHIFTED,
        TRANSFORM_FACTOR,
        TRANSFORM_OFFSET,
        HAS_PARAM,
        STEP_SECONDS,
        BASE_STEP_SECONDS,
        HAS_VALUE,
        BROADER,
        OF_ENTITY,
        OF_VARIABLE,
        AT_TIME,
        OBSERVES,
    ];
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error("{subject}: missing mandatory predicate {predicate}")]
    MissingPredicate { subject: String, predicate: String },
    #[error("{subject}: predicate {predicate} appears more than once")]
    Repeated { subject: String, predicate: String },
    #[error("unknown predicate {0} in the coplan vocabulary")]
    UnknownPredicate(String),
    #[error("{subject}: bad value {value:?} for {predicate}: {reason}")]
    BadValue {
        subject: String,
        predicate: String,
        value: String,
        reason: String,
    },
    #[error("{0}")]
    Structure(String),
}

/// Rejects predicates in the `coplan:` namespace that the vocabulary does
/// not define. Foreign predicates are ignored.
pub fn check_vocabulary(store: &Store) -> Result<(), DecodeError> {
    for t in store.iter() {
        let p = t.predicate.value();
        if p.starts_with("coplan:") && !pred::ALL.contains(&p) {
            return Err(DecodeError::UnknownPredicate(p.to_string()));
        }
    }
    Ok(())
}

pub(crate) fn triple(subject: &Term, predicate: &str, object: Term) -> Triple {
    Triple {
        subject: subject.clone(),
        predicate: Term::Iri(predicate.to_string()),
        object,
    }
}

pub(crate) fn typed(subject: &Term, class: &str) -> Triple {
    triple(subject, RDF_TYPE, Term::Iri(class.to_string()))
}

pub(crate) fn double(v: f64) -> Term {
    Term::Literal {
        value: format_number(v),
        datatype: Some(XSD_DOUBLE.to_string()),
    }
}

pub(crate) fn integer(v: u64) -> Term {
    Term::Literal {
        value: v.to_string(),
        datatype: Some(XSD_INTEGER.to_string()),
    }
}

pub(crate) fn boolean(v: bool) -> Term {
    Term::Literal {
        value: v.to_string(),
        datatype: Some(XSD_BOOLEAN.to_string()),
    }
}

/// Shortest text that parses back to the same `f64`.
pub fn format_number(v: f64) -> String {
    format!("{v}")
}

/// Reads the properties of one subject out of a store.
pub(crate) struct Resource<'a> {
    pub store: &'a Store,
    pub subject: &'a Term,
}

impl<'a> Resource<'a> {
    pub fn new(store: &'a Store, subject: &'a Term) -> Self {
        Resource { store, subject }
    }

    pub fn all(&self, predicate: &str) -> Vec<&'a Term> {
        self.store.objects(self.subject, predicate).collect()
    }

    pub fn optional(&self, predicate: &str) -> Result<Option<&'a Term>, DecodeError> {
        let found: Vec<_> = self.store.objects(self.subject, predicate).collect();
        match found.len() {
            0 => Ok(None),
            1 => Ok(Some(found[0])),
            _ => Err(DecodeError::Repeated {
                subject: self.subject.value().to_string(),
                predicate: predicate.to_string(),
            }),
        }
    }

    pub fn required(&self, predicate: &str) -> Result<&'a Term, DecodeError> {
        self.optional(predicate)?
            .ok_or_else(|| DecodeError::MissingPredicate {
                subject: self.subject.value().to_string(),
                predicate: predicate.to_string(),
            })
    }

    pub fn text(&self, predicate: &str) -> Result<String, DecodeError> {
        Ok(self.required(predicate)?.value().to_string())
    }

    pub fn optional_text(&self, predicate: &str) -> Result<Option<String>, DecodeError> {
        Ok(self.optional(predicate)?.map(|t| t.value().to_string()))
    }

    pub fn number(&self, predicate: &str) -> Result<f64, DecodeError> {
        let t = self.required(predicate)?;
        self.parse_number(predicate, t)
    }

    pub fn optional_number(&self, predicate: &str) -> Result<Option<f64>, DecodeError> {
        self.optional(predicate)?
            .map(|t| self.parse_number(predicate, t))
            .transpose()
    }

    pub fn bad(&self, predicate: &str, value: &str, reason: impl Into<String>) -> DecodeError {
        DecodeError::BadValue {
            subject: self.subject.value().to_string(),
            predicate: predicate.to_string(),
            value: value.to_string(),
            reason: reason.into(),
        }
    }

    fn parse_number(&self, predicate: &str, t: &Term) -> Result<f64, DecodeError> {
        t.value()
            .parse::<f64>()
            .map_err(|e| self.bad(predicate, t.value(), e.to_string()))
    }

    pub fn reference(&self, predicate: &str, kind: Kind) -> Result<String, DecodeError> {
        let t = self.required(predicate)?;
        unmint(kind, t).ok_or_else(|| {
            self.bad(
                predicate,
                t.value(),
                format!("expected a {} iri", kind.as_str()),
            )
        })
    }
}
