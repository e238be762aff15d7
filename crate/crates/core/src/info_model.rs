//! High-level scenario model: domains with objects and attributes on one
//! side, an evaluation function split into facets and criteria on the other,
//! and transformation functions linking attributes to criteria.
//!
//! Lists are kept sorted by name so that a model read back from triples
//! compares equal to the loaded one.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::taxonomy::Taxonomy;
use crate::text::{self, Line, Node, TextError};
use crate::triple_store::{Store, Term, Triple};
use crate::units::{same_dimension, UnitError, UnitSpec, UnitTable};
use crate::vocab::{self, class, pred, DecodeError, Kind, Resource};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Syntax(#[from] TextError),
    #[error("line {line}: {source}")]
    Unit {
        line: usize,
        #[source]
        source: UnitError,
    },
    #[error("{location}: duplicate {what} name {name:?}")]
    Duplicate {
        location: String,
        what: &'static str,
        name: String,
    },
    #[error("{location}: dangling reference: {message}")]
    Dangling { location: String, message: String },
    #[error("{location}: {message}")]
    Invalid { location: String, message: String },
    #[error("empty model: nothing declared")]
    Empty,
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Input,
    Derived,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Input => "input",
            Role::Derived => "derived",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "input" => Some(Role::Input),
            "derived" => Some(Role::Derived),
            _ => None,
        }
    }
}

/// `<object>.<attribute>`
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttributeRef {
    pub object: String,
    pub attribute: String,
}

impl AttributeRef {
    pub fn new(object: &str, attribute: &str) -> Self {
        AttributeRef {
            object: object.to_string(),
            attribute: attribute.to_string(),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let (o, a) = s.split_once('.')?;
        (text::valid_name(o) && text::valid_name(a)).then(|| AttributeRef::new(o, a))
    }
}

impl fmt::Display for AttributeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.object, self.attribute)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attribute {
    pub name: String,
    pub unit: UnitSpec,
    pub topic: String,
    pub role: Role,
    pub range: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainObject {
    pub name: String,
    pub attributes: Vec<Attribute>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub name: String,
    pub objects: Vec<DomainObject>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Criterion {
    pub name: String,
    pub unit: UnitSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub name: String,
    pub criteria: Vec<Criterion>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationFunction {
    pub name: String,
    pub facets: Vec<Facet>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AggregateOp {
    Sum,
    Mean,
    Min,
    Max,
    WeightedSum(Vec<f64>),
}

impl AggregateOp {
    /// Reduces a flat list of values. `WeightedSum` pairs values with weights.
    pub fn reduce(&self, values: &[f64]) -> Option<f64> {
        if values.is_empty() {
            return None;
        }
        Some(match self {
            AggregateOp::Sum => values.iter().sum(),
            AggregateOp::Mean => values.iter().sum::<f64>() / values.len() as f64,
            AggregateOp::Min => values.iter().copied().fold(f64::INFINITY, f64::min),
            AggregateOp::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            AggregateOp::WeightedSum(w) => {
                if w.len() != values.len() {
                    return None;
                }
                w.iter().zip(values).map(|(w, v)| w * v).sum()
            }
        })
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sum" => Some(AggregateOp::Sum),
            "mean" => Some(AggregateOp::Mean),
            "min" => Some(AggregateOp::Min),
            "max" => Some(AggregateOp::Max),
            _ => {
                let args = s.strip_prefix("weighted_sum(")?.strip_suffix(')')?;
                parse_numbers(args).map(AggregateOp::WeightedSum)
            }
        }
    }
}

impl fmt::Display for AggregateOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AggregateOp::Sum => f.write_str("sum"),
            AggregateOp::Mean => f.write_str("mean"),
            AggregateOp::Min => f.write_str("min"),
            AggregateOp::Max => f.write_str("max"),
            AggregateOp::WeightedSum(w) => write!(f, "weighted_sum({})", join_numbers(w)),
        }
    }
}

fn parse_numbers(s: &str) -> Option<Vec<f64>> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect()
}

fn join_numbers(v: &[f64]) -> String {
    v.iter()
        .map(|x| vocab::format_number(*x))
        .collect::<Vec<_>>()
        .join(",")
}

#[derive(Debug, Clone, PartialEq)]
pub enum TransformKind {
    Direct,
    Aggregate(AggregateOp),
    Affine { a: f64, b: f64 },
}

impl TransformKind {
    pub fn parse(s: &str) -> Option<Self> {
        if s == "direct" {
            return Some(TransformKind::Direct);
        }
        if let Some(args) = s.strip_prefix("affine(").and_then(|r| r.strip_suffix(')')) {
            return match parse_numbers(args)?.as_slice() {
                [a, b] => Some(TransformKind::Affine { a: *a, b: *b }),
                _ => None,
            };
        }
        AggregateOp::parse(s).map(TransformKind::Aggregate)
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransformKind::Direct => f.write_str("direct"),
            TransformKind::Aggregate(op) => op.fmt(f),
            TransformKind::Affine { a, b } => write!(f, "affine({})", join_numbers(&[*a, *b])),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformationFunction {
    pub name: String,
    /// Sorted; weighted-sum weights are permuted along.
    pub inputs: Vec<AttributeRef>,
    pub output: String,
    pub kind: TransformKind,
}

impl TransformationFunction {
    /// Sorts inputs, carrying weighted-sum weights with their input.
    fn canonicalize(&mut self) {
        let weights = match &self.kind {
            TransformKind::Aggregate(AggregateOp::WeightedSum(w))
                if w.len() == self.inputs.len() =>
            {
                Some(w.clone())
            }
            _ => None,
        };
        match weights {
            Some(w) => {
                let mut pairs: Vec<_> = self.inputs.drain(..).zip(w).collect();
                pairs.sort_by(|a, b| a.0.cmp(&b.0));
                let (inputs, w): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
                self.inputs = inputs;
                self.kind = TransformKind::Aggregate(AggregateOp::WeightedSum(w));
            }
            None => self.inputs.sort(),
        }
    }
}

/// One attribute-to-criterion path through a transformation function.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRequirement {
    pub attribute: AttributeRef,
    pub role: Role,
    pub transform: String,
    pub criterion: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InfoModel {
    pub domains: Vec<Domain>,
    pub evaluations: Vec<EvaluationFunction>,
    pub transforms: Vec<TransformationFunction>,
}

impl InfoModel {
    pub fn objects(&self) -> impl Iterator<Item = &DomainObject> {
        self.domains.iter().flat_map(|d| d.objects.iter())
    }

    pub fn attributes(&self) -> impl Iterator<Item = (AttributeRef, &Attribute)> {
        self.objects().flat_map(|o| {
            o.attributes
                .iter()
                .map(move |a| (AttributeRef::new(&o.name, &a.name), a))
        })
    }

    pub fn attribute(&self, r: &AttributeRef) -> Option<&Attribute> {
        self.objects()
            .find(|o| o.name == r.object)?
            .attributes
            .iter()
            .find(|a| a.name == r.attribute)
    }

    pub fn criteria(&self) -> impl Iterator<Item = &Criterion> {
        self.evaluations
            .iter()
            .flat_map(|e| e.facets.iter())
            .flat_map(|f| f.criteria.iter())
    }

    pub fn criterion(&self, name: &str) -> Option<&Criterion> {
        self.criteria().find(|c| c.name == name)
    }

    pub fn is_empty(&self) -> bool {
        self.domains.is_empty() && self.evaluations.is_empty() && self.transforms.is_empty()
    }

    /// Parses the declarative model format and checks every invariant.
    pub fn parse(text: &str, units: &UnitTable) -> Result<Self, ModelError> {
        let mut lines = BTreeMap::new();
        let mut model = InfoModel::default();
        for node in text::tree(text)? {
            match node.line.keyword() {
                "domain" => model.domains.push(parse_domain(&node, units, &mut lines)?),
                "evaluation" => {
                    let name = node.line.name()?;
                    text::check_name(&node.line, "evaluation", name)?;
                    node.line.options(2)?.finish()?;
                    lines.insert(format!("evaluation:{name}"), node.line.number);
                    let mut eval = EvaluationFunction {
                        name: name.to_string(),
                        facets: Vec::new(),
                    };
                    for child in &node.children {
                        match child.line.keyword() {
                            "facet" => eval.facets.push(parse_facet(child, units, &mut lines)?),
                            "transform" => model
                                .transforms
                                .push(parse_transform(&child.line, &mut lines)?),
                            k => {
                                return Err(child
                                    .line
                                    .error(format!("unexpected `{k}` inside evaluation"))
                                    .into())
                            }
                        }
                    }
                    model.evaluations.push(eval);
                }
                "transform" => {
                    no_children(&node)?;
                    model
                        .transforms
                        .push(parse_transform(&node.line, &mut lines)?)
                }
                k => {
                    return Err(node
                        .line
                        .error(format!("unexpected top-level `{k}`"))
                        .into())
                }
            }
        }
        if model.is_empty() {
            return Err(ModelError::Empty);
        }
        model.canonicalize();
        model.check(&lines)?;
        Ok(model)
    }

    fn canonicalize(&mut self) {
        for d in &mut self.domains {
            for o in &mut d.objects {
                o.attributes.sort_by(|a, b| a.name.cmp(&b.name));
            }
            d.objects.sort_by(|a, b| a.name.cmp(&b.name));
        }
        self.domains.sort_by(|a, b| a.name.cmp(&b.name));
        for e in &mut self.evaluations {
            for f in &mut e.facets {
                f.criteria.sort_by(|a, b| a.name.cmp(&b.name));
            }
            e.facets.sort_by(|a, b| a.name.cmp(&b.name));
        }
        self.evaluations.sort_by(|a, b| a.name.cmp(&b.name));
        for t in &mut self.transforms {
            t.canonicalize();
        }
        self.transforms.sort_by(|a, b| a.name.cmp(&b.name));
    }

    /// Uniqueness, referential closure, arity and unit consistency.
    fn check(&self, lines: &BTreeMap<String, usize>) -> Result<(), ModelError> {
        let loc = |key: String| match lines.get(&key) {
            Some(l) => format!("line {l}"),
            None => key,
        };
        let mut seen = BTreeSet::new();
        let mut unique = |what: &'static str, name: &str| -> Result<(), ModelError> {
            if seen.insert((what, name.to_string())) {
                Ok(())
            } else {
                Err(ModelError::Duplicate {
                    location: loc(format!("{what}:{name}")),
                    what,
                    name: name.to_string(),
                })
            }
        };
        for d in &self.domains {
            unique("domain", &d.name)?;
            for o in &d.objects {
                unique("object", &o.name)?;
                let mut attrs = BTreeSet::new();
                for a in &o.attributes {
                    if !attrs.insert(&a.name) {
                        return Err(ModelError::Duplicate {
                            location: loc(format!("attribute:{}.{}", o.name, a.name)),
                            what: "attribute",
                            name: a.name.clone(),
                        });
                    }
                    if let Some((lo, hi)) = a.range {
                        if lo > hi {
                            return Err(ModelError::Invalid {
                                location: loc(format!("attribute:{}.{}", o.name, a.name)),
                                message: format!("range min {lo} exceeds max {hi}"),
                            });
                        }
                    }
                }
            }
        }
        for e in &self.evaluations {
            unique("evaluation", &e.name)?;
            for f in &e.facets {
                unique("facet", &f.name)?;
                for c in &f.criteria {
                    unique("criterion", &c.name)?;
                }
            }
        }
        for t in &self.transforms {
            unique("transform", &t.name)?;
            let location = loc(format!("transform:{}", t.name));
            let invalid = |message: String| ModelError::Invalid {
                location: location.clone(),
                message,
            };
            let Some(criterion) = self.criterion(&t.output) else {
                return Err(ModelError::Dangling {
                    location,
                    message: format!("unknown criterion {:?}", t.output),
                });
            };
            if t.inputs.is_empty() {
                return Err(invalid("transformation needs at least one input".into()));
            }
            let distinct: BTreeSet<_> = t.inputs.iter().collect();
            if distinct.len() != t.inputs.len() {
                return Err(invalid("repeated input attribute".into()));
            }
            let mut inputs = Vec::new();
            for r in &t.inputs {
                let a = self.attribute(r).ok_or_else(|| ModelError::Dangling {
                    location: location.clone(),
                    message: format!("unknown attribute {r}"),
                })?;
                inputs.push((r, a));
            }
            match &t.kind {
                TransformKind::Direct | TransformKind::Affine { .. } if t.inputs.len() != 1 => {
                    return Err(invalid(format!("{} requires exactly one input", t.kind)));
                }
                TransformKind::Aggregate(AggregateOp::WeightedSum(w))
                    if w.len() != t.inputs.len() =>
                {
                    return Err(invalid(format!(
                        "weighted_sum has {} weights for {} inputs",
                        w.len(),
                        t.inputs.len()
                    )));
                }
                _ => {}
            }
            if !matches!(t.kind, TransformKind::Affine { .. }) {
                for (r, a) in inputs {
                    if !same_dimension(&a.unit, &criterion.unit) {
                        return Err(invalid(format!(
                            "attribute {r} ({}) and criterion {} ({}) differ in dimension",
                            a.unit, criterion.name, criterion.unit
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Terms not registered in `taxonomy`, as warnings.
    pub fn topic_warnings(&self, taxonomy: &Taxonomy) -> Vec<String> {
        self.attributes()
            .filter(|(_, a)| !taxonomy.contains(&a.topic))
            .map(|(r, a)| format!("attribute {r}: unregistered topic {:?}", a.topic))
            .collect()
    }

    /// One requirement per (input attribute, transformation) pair.
    pub fn required_flows(&self) -> Vec<FlowRequirement> {
        let mut out = Vec::new();
        for t in &self.transforms {
            for r in &t.inputs {
                let role = self.attribute(r).map_or(Role::Input, |a| a.role);
                out.push(FlowRequirement {
                    attribute: r.clone(),
                    role,
                    transform: t.name.clone(),
                    criterion: t.output.clone(),
                });
            }
        }
        out
    }

    pub fn to_triples(&self) -> Vec<Triple> {
        let mut out = Vec::new();
        for d in &self.domains {
            let ds = vocab::mint(Kind::Domain, &d.name);
            out.push(vocab::typed(&ds, class::DOMAIN));
            for o in &d.objects {
                let os = vocab::mint(Kind::Object, &o.name);
                out.push(vocab::typed(&os, class::OBJECT));
                out.push(vocab::triple(&os, pred::IN_DOMAIN, ds.clone()));
                for a in &o.attributes {
                    let r = AttributeRef::new(&o.name, &a.name);
                    let s = vocab::mint(Kind::Attribute, &r.to_string());
                    out.push(vocab::triple(&os, pred::HAS_ATTRIBUTE, s.clone()));
                    out.push(vocab::typed(&s, class::ATTRIBUTE));
                    out.push(vocab::triple(
                        &s,
                        pred::HAS_UNIT,
                        Term::literal(&a.unit.symbol),
                    ));
                    out.push(vocab::triple(&s, pred::HAS_TOPIC, Term::literal(&a.topic)));
                    out.push(vocab::triple(
                        &s,
                        pred::HAS_ROLE,
                        Term::literal(a.role.as_str()),
                    ));
                    if let Some((lo, hi)) = a.range {
                        out.push(vocab::triple(
                            &s,
                            pred::HAS_RANGE,
                            Term::literal(format_range(lo, hi)),
                        ));
                    }
                }
            }
        }
        for e in &self.evaluations {
            let es = vocab::mint(Kind::Evaluation, &e.name);
            out.push(vocab::typed(&es, class::EVALUATION));
            for f in &e.facets {
                let fs = vocab::mint(Kind::Facet, &f.name);
                out.push(vocab::triple(&es, pred::HAS_FACET, fs.clone()));
                out.push(vocab::typed(&fs, class::FACET));
                for c in &f.criteria {
                    let cs = vocab::mint(Kind::Criterion, &c.name);
                    out.push(vocab::triple(&fs, pred::HAS_CRITERION, cs.clone()));
                    out.push(vocab::typed(&cs, class::CRITERION));
                    out.push(vocab::triple(
                        &cs,
                        pred::HAS_UNIT,
                        Term::literal(&c.unit.symbol),
                    ));
                }
            }
        }
        for t in &self.transforms {
            let ts = vocab::mint(Kind::Transform, &t.name);
            out.push(vocab::typed(&ts, class::TRANSFORM));
            out.push(vocab::triple(
                &ts,
                pred::TRANSFORM_KIND,
                Term::literal(t.kind.to_string()),
            ));
            out.push(vocab::triple(
                &ts,
                pred::TRANSFORM_OUTPUT,
                vocab::mint(Kind::Criterion, &t.output),
            ));
            for r in &t.inputs {
                out.push(vocab::triple(
                    &ts,
                    pred::TRANSFORM_INPUT,
                    vocab::mint(Kind::Attribute, &r.to_string()),
                ));
            }
        }
        out
    }

    /// Inverse of [`InfoModel::to_triples`]. Triples outside the coplan
    /// vocabulary are ignored.
    pub fn from_triples(store: &Store, units: &UnitTable) -> Result<Self, ModelError> {
        vocab::check_vocabulary(store)?;
        let name_of = |kind: Kind, t: &Term| {
            vocab::unmint(kind, t).ok_or_else(|| {
                DecodeError::Structure(format!("{} is not a {} iri", t.value(), kind.as_str()))
            })
        };
        let unit_of = |r: &Resource| -> Result<UnitSpec, ModelError> {
            let sym = r.text(pred::HAS_UNIT)?;
            units
                .parse(&sym)
                .map_err(|e| r.bad(pred::HAS_UNIT, &sym, e.to_string()).into())
        };

        let mut domains: BTreeMap<String, Domain> = BTreeMap::new();
        for s in store.subjects_of_type(class::DOMAIN) {
            let name = name_of(Kind::Domain, s)?;
            domains.insert(
                name.clone(),
                Domain {
                    name,
                    objects: Vec::new(),
                },
            );
        }
        for s in store.subjects_of_type(class::OBJECT) {
            let obj = Resource::new(store, s);
            let name = name_of(Kind::Object, s)?;
            let domain = obj.reference(pred::IN_DOMAIN, Kind::Domain)?;
            let mut attributes = Vec::new();
            for a in obj.all(pred::HAS_ATTRIBUTE) {
                let full = name_of(Kind::Attribute, a)?;
                let r = AttributeRef::parse(&full)
                    .filter(|r| r.object == name)
                    .ok_or_else(|| {
                        DecodeError::Structure(format!(
                            "attribute {full} does not belong to object {name}"
                        ))
                    })?;
                let ar = Resource::new(store, a);
                let role_text = ar.text(pred::HAS_ROLE)?;
                let role = Role::parse(&role_text).ok_or_else(|| {
                    ar.bad(pred::HAS_ROLE, &role_text, "expected input or derived")
                })?;
                let range = match ar.optional_text(pred::HAS_RANGE)? {
                    Some(t) => Some(
                        parse_range(&t)
                            .ok_or_else(|| ar.bad(pred::HAS_RANGE, &t, "expected <min>..<max>"))?,
                    ),
                    None => None,
                };
                attributes.push(Attribute {
                    name: r.attribute,
                    unit: unit_of(&ar)?,
                    topic: ar.text(pred::HAS_TOPIC)?,
                    role,
                    range,
                });
            }
            domains
                .get_mut(&domain)
                .ok_or_else(|| {
                    DecodeError::Structure(format!(
                        "object {name} refers to unknown domain {domain}"
                    ))
                })?
                .objects
                .push(DomainObject { name, attributes });
        }

        let mut evaluations = Vec::new();
        for s in store.subjects_of_type(class::EVALUATION) {
            let ev = Resource::new(store, s);
            let mut facets = Vec::new();
            for f in ev.all(pred::HAS_FACET) {
                let fr = Resource::new(store, f);
                let mut criteria = Vec::new();
                for c in fr.all(pred::HAS_CRITERION) {
                    let cr = Resource::new(store, c);
                    criteria.push(Criterion {
                        name: name_of(Kind::Criterion, c)?,
                        unit: unit_of(&cr)?,
                    });
                }
                facets.push(Facet {
                    name: name_of(Kind::Facet, f)?,
                    criteria,
                });
            }
            evaluations.push(EvaluationFunction {
                name: name_of(Kind::Evaluation, s)?,
                facets,
            });
        }

        let mut transforms = Vec::new();
        for s in store.subjects_of_type(class::TRANSFORM) {
            let tr = Resource::new(store, s);
            let kind_text = tr.text(pred::TRANSFORM_KIND)?;
            let kind = TransformKind::parse(&kind_text)
                .ok_or_else(|| tr.bad(pred::TRANSFORM_KIND, &kind_text, "unknown kind"))?;
            let mut inputs = Vec::new();
            for i in tr.all(pred::TRANSFORM_INPUT) {
                let full = name_of(Kind::Attribute, i)?;
                inputs.push(AttributeRef::parse(&full).ok_or_else(|| {
                    DecodeError::Structure(format!("bad attribute reference {full}"))
                })?);
            }
            transforms.push(TransformationFunction {
                name: name_of(Kind::Transform, s)?,
                inputs,
                output: tr.reference(pred::TRANSFORM_OUTPUT, Kind::Criterion)?,
                kind,
            });
        }

        let mut model = InfoModel {
            domains: domains.into_values().collect(),
            evaluations,
            transforms,
        };
        if model.is_empty() {
            return Err(ModelError::Empty);
        }
        model.canonicalize();
        model.check(&BTreeMap::new())?;
        Ok(model)
    }
}

pub(crate) fn format_range(lo: f64, hi: f64) -> String {
    format!("{}..{}", vocab::format_number(lo), vocab::format_number(hi))
}

pub(crate) fn parse_range(s: &str) -> Option<(f64, f64)> {
    let (a, b) = s.split_once("..")?;
    let lo: f64 = a.parse().ok().filter(|v: &f64| v.is_finite())?;
    let hi: f64 = b.parse().ok().filter(|v: &f64| v.is_finite())?;
    Some((lo, hi))
}

fn no_children(node: &Node) -> Result<(), TextError> {
    match node.children.first() {
        Some(c) => Err(c
            .line
            .error(format!("`{}` takes no nested lines", node.line.keyword()))),
        None => Ok(()),
    }
}

fn unit(line: &Line, units: &UnitTable, expr: &str) -> Result<UnitSpec, ModelError> {
    units.parse(expr).map_err(|source| ModelError::Unit {
        line: line.number,
        source,
    })
}

fn parse_domain(
    node: &Node,
    units: &UnitTable,
    lines: &mut BTreeMap<String, usize>,
) -> Result<Domain, ModelError> {
    let name = node.line.name()?;
    text::check_name(&node.line, "domain", name)?;
    node.line.options(2)?.finish()?;
    lines.insert(format!("domain:{name}"), node.line.number);
    let mut domain = Domain {
        name: name.to_string(),
        objects: Vec::new(),
    };
    for child in &node.children {
        if child.line.keyword() != "object" {
            return Err(child
                .line
                .error(format!(
                    "unexpected `{}` inside domain",
                    child.line.keyword()
                ))
                .into());
        }
        let oname = child.line.name()?;
        text::check_name(&child.line, "object", oname)?;
        child.line.options(2)?.finish()?;
        lines
            .entry(format!("object:{oname}"))
            .or_insert(child.line.number);
        let mut object = DomainObject {
            name: oname.to_string(),
            attributes: Vec::new(),
        };
        for a in &child.children {
            no_children(a)?;
            let line = &a.line;
            if line.keyword() != "attribute" {
                return Err(line
                    .error(format!("unexpected `{}` inside object", line.keyword()))
                    .into());
            }
            let aname = line.name()?;
            text::check_name(line, "attribute", aname)?;
            lines
                .entry(format!("attribute:{oname}.{aname}"))
                .or_insert(line.number);
            let mut opts = line.options(2)?;
            let unit_expr = opts.require("unit")?;
            let topic = opts.require("topic")?;
            text::check_name(line, "topic", &topic)?;
            let role_text = opts.require("role")?;
            let role = Role::parse(&role_text).ok_or_else(|| {
                line.error(format!(
                    "role must be input or derived, found {role_text:?}"
                ))
            })?;
            let range = match opts.take("range") {
                Some(r) => Some(parse_range(&r).ok_or_else(|| {
                    line.error(format!("range must be <min>..<max>, found {r:?}"))
                })?),
                None => None,
            };
            opts.finish()?;
            object.attributes.push(Attribute {
                name: aname.to_string(),
                unit: unit(line, units, &unit_expr)?,
                topic,
                role,
                range,
            });
        }
        domain.objects.push(object);
    }
    Ok(domain)
}

fn parse_facet(
    node: &Node,
    units: &UnitTable,
    lines: &mut BTreeMap<String, usize>,
) -> Result<Facet, ModelError> {
    let name = node.line.name()?;
    text::check_name(&node.line, "facet", name)?;
    node.line.options(2)?.finish()?;
    lines
        .entry(format!("facet:{name}"))
        .or_insert(node.line.number);
    let mut facet = Facet {
        name: name.to_string(),
        criteria: Vec::new(),
    };
    for c in &node.children {
        no_children(c)?;
        let line = &c.line;
        if line.keyword() != "criterion" {
            return Err(line
                .error(format!("unexpected `{}` inside facet", line.keyword()))
                .into());
        }
        let cname = line.name()?;
        text::check_name(line, "criterion", cname)?;
        lines
            .entry(format!("criterion:{cname}"))
            .or_insert(line.number);
        let mut opts = line.options(2)?;
        let u = opts.require("unit")?;
        opts.finish()?;
        facet.criteria.push(Criterion {
            name: cname.to_string(),
            unit: unit(line, units, &u)?,
        });
    }
    Ok(facet)
}

fn parse_transform(
    line: &Line,
    lines: &mut BTreeMap<String, usize>,
) -> Result<TransformationFunction, ModelError> {
    let name = line.name()?;
    text::check_name(line, "transform", name)?;
    lines
        .entry(format!("transform:{name}"))
        .or_insert(line.number);
    let mut opts = line.options(2)?;
    let kind_text = opts.require("kind")?;
    let kind = TransformKind::parse(&kind_text).ok_or_else(|| {
        line.error(format!(
            "kind must be direct, sum, mean, min, max, weighted_sum(w1,...) or affine(a,b), found {kind_text:?}"
        ))
    })?;
    let inputs = opts
        .require("inputs")?
        .split(',')
        .map(|s| {
            AttributeRef::parse(s).ok_or_else(|| {
                line.error(format!("input must be <object>.<attribute>, found {s:?}"))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let output = opts.require("output")?;
    opts.finish()?;
    Ok(TransformationFunction {
        name: name.to_string(),
        inputs,
        output,
        kind,
    })
}
