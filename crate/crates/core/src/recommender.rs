//! Ranks catalog variables against an information-model attribute by unit,
//! topic and value range.
//!
//! Candidates can be drawn from the in-memory [`Catalog`] or from a triple
//! store holding its projection; both feed the same scoring.

use std::cmp::Ordering;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::catalog::{Catalog, Causality};
use crate::info_model::{Attribute, AttributeRef, InfoModel, Role};
use crate::taxonomy::Taxonomy;
use crate::triple_store::{PatternTerm, Store, Term, TriplePattern};
use crate::units::{self, ConversionFn, UnitSpec, UnitTable};
use crate::vocab::{self, class, pred, DecodeError, Kind, Resource, RDF_TYPE};

pub const UNIT_IDENTICAL: f64 = 1.0;
pub const UNIT_CONVERTIBLE: f64 = 0.8;
pub const TOPIC_EQUAL: f64 = 1.0;
pub const TOPIC_RELATED: f64 = 0.5;
pub const RANGE_CONTAINED: f64 = 1.0;
pub const RANGE_OVERLAP: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecommendError {
    #[error("attribute {0} is not defined in the information model")]
    UnresolvedAttribute(String),
    #[error("weights must be nonnegative and sum to 1, got {0}, {1}, {2}")]
    Weights(f64, f64, f64),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub unit: f64,
    pub topic: f64,
    pub range: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            unit: 0.5,
            topic: 0.3,
            range: 0.2,
        }
    }
}

impl Weights {
    pub fn new(unit: f64, topic: f64, range: f64) -> Result<Self, RecommendError> {
        let ok = [unit, topic, range]
            .iter()
            .all(|w| w.is_finite() && *w >= 0.0)
            && (unit + topic + range - 1.0).abs() <= 1e-12;
        if ok {
            Ok(Weights { unit, topic, range })
        } else {
            Err(RecommendError::Weights(unit, topic, range))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// A derived attribute needs a component output.
    NeedProducer,
    /// An input attribute needs a component input.
    NeedConsumer,
}

impl Direction {
    pub fn for_role(role: Role) -> Self {
        match role {
            Role::Derived => Direction::NeedProducer,
            Role::Input => Direction::NeedConsumer,
        }
    }

    pub fn causality(self) -> Causality {
        match self {
            Direction::NeedProducer => Causality::Output,
            Direction::NeedConsumer => Causality::Input,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchRequest {
    pub attribute: AttributeRef,
    pub direction: Direction,
    pub weights: Weights,
}

impl MatchRequest {
    /// Direction follows the attribute's role.
    pub fn for_attribute(
        model: &InfoModel,
        attribute: &AttributeRef,
        weights: Weights,
    ) -> Result<Self, RecommendError> {
        let a = model
            .attribute(attribute)
            .ok_or_else(|| RecommendError::UnresolvedAttribute(attribute.to_string()))?;
        Ok(MatchRequest {
            attribute: attribute.clone(),
            direction: Direction::for_role(a.role),
            weights,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Parts {
    pub unit: f64,
    pub topic: f64,
    pub range: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recommendation {
    pub component: String,
    pub variable: String,
    pub score: f64,
    pub parts: Parts,
    /// Required unit to offered unit, when they differ.
    pub conversion: Option<ConversionFn>,
    pub explanation: String,
}

impl Recommendation {
    /// `score,component,variable,unit_score,topic_score,range_score,factor`;
    /// the factor is empty when no conversion is needed.
    pub fn report_line(&self) -> String {
        let n = vocab::format_number;
        format!(
            "{},{},{},{},{},{},{}",
            n(self.score),
            self.component,
            self.variable,
            n(self.parts.unit),
            n(self.parts.topic),
            n(self.parts.range),
            self.conversion.map(|c| n(c.factor)).unwrap_or_default()
        )
    }
}

impl fmt::Display for Recommendation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:.3}  {}.{}  (unit {}, topic {}, range {})",
            self.score,
            self.component,
            self.variable,
            self.parts.unit,
            self.parts.topic,
            self.parts.range
        )?;
        if let Some(c) = self.conversion {
            write!(f, "  convert x -> {c}")?;
        }
        Ok(())
    }
}

/// Unit part; `None` excludes the candidate.
pub fn score_unit(required: &UnitSpec, offered: &UnitSpec) -> Option<(f64, Option<ConversionFn>)> {
    if required.is_identical(offered) {
        Some((UNIT_IDENTICAL, None))
    } else {
        units::conversion(required, offered)
            .ok()
            .map(|c| (UNIT_CONVERTIBLE, Some(c)))
    }
}

pub fn score_topic(required: &str, offered: &str, taxonomy: &Taxonomy) -> f64 {
    if required == offered {
        TOPIC_EQUAL
    } else if taxonomy.related(required, offered) {
        TOPIC_RELATED
    } else {
        0.0
    }
}

/// Range part; `None` excludes the candidate. `conversion` maps required
/// units to offered units; the offered range is mapped back before comparing.
pub fn score_range(
    required: Option<(f64, f64)>,
    offered: Option<(f64, f64)>,
    conversion: Option<&ConversionFn>,
) -> Option<f64> {
    let (Some((rlo, rhi)), Some((olo, ohi))) = (required, offered) else {
        return Some(RANGE_CONTAINED);
    };
    let (olo, ohi) = match conversion {
        Some(c) => {
            let back = c.inverse();
            let (a, b) = (back.apply(olo), back.apply(ohi));
            (a.min(b), a.max(b))
        }
        None => (olo, ohi),
    };
    if rlo >= olo && rhi <= ohi {
        Some(RANGE_CONTAINED)
    } else if rlo <= ohi && olo <= rhi {
        Some(RANGE_OVERLAP)
    } else {
        None
    }
}

/// A catalog variable as seen by the scorer.
struct Candidate<'a> {
    component: String,
    variable: String,
    unit: UnitSpec,
    topic: &'a str,
    range: Option<(f64, f64)>,
}

fn score(
    attr: &Attribute,
    weights: &Weights,
    taxonomy: &Taxonomy,
    c: Candidate<'_>,
) -> Option<Recommendation> {
    let (unit, conversion) = score_unit(&attr.unit, &c.unit)?;
    let topic = score_topic(&attr.topic, c.topic, taxonomy);
    let range = score_range(attr.range, c.range, conversion.as_ref())?;
    let mut explanation = String::new();
    match conversion {
        None => write!(explanation, "unit {} identical", c.unit.symbol),
        Some(conv) => write!(
            explanation,
            "unit {} -> {} needs factor {conv}",
            attr.unit.symbol, c.unit.symbol
        ),
    }
    .ok();
    let rel = match topic {
        t if t == TOPIC_EQUAL => "matches",
        t if t == TOPIC_RELATED => "is related to",
        _ => "differs from",
    };
    write!(explanation, "; topic {} {rel} {}", c.topic, attr.topic).ok();
    match (attr.range, c.range) {
        (Some(_), Some(_)) if range == RANGE_CONTAINED => explanation.push_str("; range covered"),
        (Some(_), Some(_)) => explanation.push_str("; range only overlaps"),
        _ => explanation.push_str("; range unconstrained"),
    }
    Some(Recommendation {
        score: weights.unit * unit + weights.topic * topic + weights.range * range,
        parts: Parts { unit, topic, range },
        component: c.component,
        variable: c.variable,
        conversion,
        explanation,
    })
}

fn rank(mut out: Vec<Recommendation>) -> Vec<Recommendation> {
    out.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.component.cmp(&b.component))
            .then_with(|| a.variable.cmp(&b.variable))
    });
    out
}

fn resolve<'m>(
    model: &'m InfoModel,
    request: &MatchRequest,
) -> Result<&'m Attribute, RecommendError> {
    model
        .attribute(&request.attribute)
        .ok_or_else(|| RecommendError::UnresolvedAttribute(request.attribute.to_string()))
}

/// Scores every catalog variable with the causality the request needs.
pub fn recommend(
    request: &MatchRequest,
    model: &InfoModel,
    catalog: &Catalog,
    taxonomy: &Taxonomy,
) -> Result<Vec<Recommendation>, RecommendError> {
    let attr = resolve(model, request)?;
    let wanted = request.direction.causality();
    let mut out = Vec::new();
    for comp in &catalog.components {
        for v in comp.variables.iter().filter(|v| v.causality == wanted) {
            let cand = Candidate {
                component: comp.id.clone(),
                variable: v.name.clone(),
                unit: v.unit.clone(),
                topic: &v.topic,
                range: v.range(),
            };
            out.extend(score(attr, &request.weights, taxonomy, cand));
        }
    }
    Ok(rank(out))
}

/// Same as [`recommend`], with candidates selected by a conjunctive query over
/// the catalog's triples.
pub fn recommend_from_store(
    request: &MatchRequest,
    model: &InfoModel,
    store: &Store,
    units: &UnitTable,
    taxonomy: &Taxonomy,
) -> Result<Vec<Recommendation>, RecommendError> {
    let attr = resolve(model, request)?;
    let iri = |s: &str| PatternTerm::Const(Term::Iri(s.to_string()));
    let v = PatternTerm::var;
    let pattern = |s, p, o| TriplePattern::new(s, p, o).expect("static pattern is well-formed");
    let patterns = [
        pattern(v("c"), iri(RDF_TYPE), iri(class::COMPONENT)),
        pattern(v("c"), iri(pred::HAS_VARIABLE), v("v")),
        pattern(
            v("v"),
            iri(pred::HAS_CAUSALITY),
            PatternTerm::literal(request.direction.causality().as_str()),
        ),
        pattern(v("v"), iri(pred::HAS_UNIT), v("unit")),
        pattern(v("v"), iri(pred::HAS_TOPIC), v("topic")),
    ];
    let result = store.query(&patterns);
    let mut out = Vec::new();
    for b in &result.bindings {
        let (c, var) = (&b["c"], &b["v"]);
        let component = vocab::unmint(Kind::Component, c).ok_or_else(|| {
            DecodeError::Structure(format!("{} is not a component iri", c.value()))
        })?;
        let full = vocab::unmint(Kind::Variable, var).ok_or_else(|| {
            DecodeError::Structure(format!("{} is not a variable iri", var.value()))
        })?;
        let variable = full
            .strip_prefix(&format!("{component}."))
            .ok_or_else(|| {
                DecodeError::Structure(format!("variable {full} does not belong to {component}"))
            })?
            .to_string();
        let r = Resource::new(store, var);
        let symbol = b["unit"].value();
        let unit = units
            .parse(symbol)
            .map_err(|e| r.bad(pred::HAS_UNIT, symbol, e.to_string()))?;
        let (min, max) = (
            r.optional_number(pred::HAS_MIN)?,
            r.optional_number(pred::HAS_MAX)?,
        );
        let range = (min.is_some() || max.is_some()).then(|| {
            (
                min.unwrap_or(f64::NEG_INFINITY),
                max.unwrap_or(f64::INFINITY),
            )
        });
        let cand = Candidate {
            component,
            variable,
            unit,
            topic: b["topic"].value(),
            range,
        };
        out.extend(score(attr, &request.weights, taxonomy, cand));
    }
    Ok(rank(out))
}

/// Per component, the best score among its variables; sorted like the
/// recommendations themselves.
pub fn component_scores(recs: &[Recommendation]) -> Vec<(String, f64)> {
    let mut best: std::collections::BTreeMap<&str, f64> = Default::default();
    for r in recs {
        let e = best.entry(&r.component).or_insert(r.score);
        *e = e.max(r.score);
    }
    let mut out: Vec<_> = best.into_iter().map(|(c, s)| (c.to_string(), s)).collect();
    out.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    out
}
