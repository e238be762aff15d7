//! Concrete scenarios: simulator instances, entities and the connections
//! between entity variables.
//!
//! Loading performs referential checks only. Units, ranges and causality are
//! the validator's business, so a semantically broken scenario still loads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::catalog::Catalog;
use crate::text::{self, Line, TextError};
use crate::triple_store::{Store, Term, Triple};
use crate::units::ConversionFn;
use crate::vocab::{self, class, pred, DecodeError, Kind, Resource, XSD_BOOLEAN, XSD_DOUBLE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error(transparent)]
    Syntax(#[from] TextError),
    #[error("{location}: duplicate {what} id {id:?}")]
    Duplicate {
        location: String,
        what: &'static str,
        id: String,
    },
    #[error("{location}: unknown component {component:?}")]
    UnknownComponent { location: String, component: String },
    #[error("{location}: {message}")]
    UnknownReference { location: String, message: String },
    #[error("{location}: unknown variable {variable:?} in component {component}")]
    UnknownVariable {
        location: String,
        component: String,
        variable: String,
    },
    #[error("{location}: {target} already has an incoming connection")]
    DuplicateTarget { location: String, target: String },
    #[error("{location}: step {step} s is not a positive multiple of the base step {base} s")]
    Step {
        location: String,
        step: u64,
        base: u64,
    },
    #[error("{location}: {message}")]
    Invalid { location: String, message: String },
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Number(f64),
    Text(String),
}

impl ParamValue {
    /// Finite numbers become [`ParamValue::Number`], anything else text.
    pub fn parse(s: &str) -> Self {
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => ParamValue::Number(v),
            _ => ParamValue::Text(s.to_string()),
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            ParamValue::Number(v) => Some(*v),
            ParamValue::Text(_) => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            ParamValue::Number(_) => None,
            ParamValue::Text(t) => Some(t),
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Number(v) => f.write_str(&vocab::format_number(*v)),
            ParamValue::Text(t) => f.write_str(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatorInstance {
    pub id: String,
    pub component: String,
    pub params: BTreeMap<String, ParamValue>,
    pub step_s: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    pub id: String,
    pub simulator: String,
    pub model: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Endpoint {
    pub entity: String,
    pub variable: String,
}

impl Endpoint {
    pub fn new(entity: &str, variable: &str) -> Self {
        Endpoint {
            entity: entity.to_string(),
            variable: variable.to_string(),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let (e, v) = s.split_once('.')?;
        (text::valid_name(e) && text::valid_name(v)).then(|| Endpoint::new(e, v))
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.entity, self.variable)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    pub source: Endpoint,
    pub target: Endpoint,
    pub time_shifted: bool,
    pub transform: Option<ConversionFn>,
}

impl Connection {
    pub fn new(source: Endpoint, target: Endpoint) -> Self {
        Connection {
            source,
            target,
            time_shifted: false,
            transform: None,
        }
    }

    /// `a.x->b.y`; stable location used in findings and iris.
    pub fn label(&self) -> String {
        format!("{}->{}", self.source, self.target)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub base_step_s: u64,
    /// Sorted by id.
    pub simulators: Vec<SimulatorInstance>,
    /// Sorted by id.
    pub entities: Vec<Entity>,
    /// Sorted by (source, target).
    pub connections: Vec<Connection>,
}

impl Scenario {
    pub fn simulator(&self, id: &str) -> Option<&SimulatorInstance> {
        self.simulators.iter().find(|s| s.id == id)
    }

    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.entities.iter().find(|e| e.id == id)
    }

    /// Component id behind an entity, if the chain resolves.
    pub fn component_of(&self, entity: &str) -> Option<&str> {
        let e = self.entity(entity)?;
        Some(self.simulator(&e.simulator)?.component.as_str())
    }

    pub fn canonicalize(&mut self) {
        self.simulators.sort_by(|a, b| a.id.cmp(&b.id));
        self.entities.sort_by(|a, b| a.id.cmp(&b.id));
        self.connections
            .sort_by(|a, b| (&a.source, &a.target).cmp(&(&b.source, &b.target)));
    }

    /// Parses the scenario format and resolves every reference against
    /// `catalog`.
    pub fn parse(source: &str, catalog: &Catalog) -> Result<Self, ScenarioError> {
        let mut header: Option<(String, u64)> = None;
        let mut scenario = Scenario {
            name: String::new(),
            base_step_s: 0,
            simulators: Vec::new(),
            entities: Vec::new(),
            connections: Vec::new(),
        };
        let mut locations: BTreeMap<String, usize> = BTreeMap::new();
        for node in text::tree(source)? {
            let l = &node.line;
            if l.keyword() != "simulator" {
                if let Some(c) = node.children.first() {
                    return Err(c.line.error("unexpected indentation").into());
                }
            }
            match l.keyword() {
                "scenario" => {
                    if header.is_some() {
                        return Err(l.error("more than one `scenario` line").into());
                    }
                    let name = l.name()?;
                    text::check_name(l, "scenario", name)?;
                    let mut o = l.options(2)?;
                    let base = step(l, &mut o, "base_step")?;
                    o.finish()?;
                    header = Some((name.to_string(), base));
                }
                "simulator" => {
                    let id = l.name()?;
                    text::check_name(l, "simulator", id)?;
                    let mut params = BTreeMap::new();
                    let mut rest = Vec::new();
                    let mut toks = l.tokens[2..].iter();
                    while let Some(t) = toks.next() {
                        if t == "param" {
                            let p = toks
                                .next()
                                .ok_or_else(|| l.error("`param` needs name=value"))?;
                            add_param(l, &mut params, p)?;
                        } else {
                            rest.push(t.clone());
                        }
                    }
                    for child in &node.children {
                        let cl = &child.line;
                        if cl.keyword() != "param"
                            || cl.tokens.len() != 2
                            || !child.children.is_empty()
                        {
                            return Err(cl.error("expected `param <name>=<value>`").into());
                        }
                        add_param(cl, &mut params, &cl.tokens[1])?;
                    }
                    let opts = Line {
                        number: l.number,
                        indent: l.indent,
                        tokens: rest,
                    };
                    let mut o = opts.options(0)?;
                    let component = o.require("component")?;
                    let step_s = step(l, &mut o, "step")?;
                    o.finish()?;
                    if locations.insert(format!("s:{id}"), l.number).is_some() {
                        return Err(duplicate(l, "simulator", id));
                    }
                    scenario.simulators.push(SimulatorInstance {
                        id: id.to_string(),
                        component,
                        params,
                        step_s,
                    });
                }
                "entity" => {
                    let id = l.name()?;
                    text::check_name(l, "entity", id)?;
                    let mut o = l.options(2)?;
                    let simulator = o.require("simulator")?;
                    let model = o.require("model")?;
                    o.finish()?;
                    if locations.insert(format!("e:{id}"), l.number).is_some() {
                        return Err(duplicate(l, "entity", id));
                    }
                    scenario.entities.push(Entity {
                        id: id.to_string(),
                        simulator,
                        model,
                    });
                }
                "connect" => {
                    let conn = parse_connection(l)?;
                    locations.insert(format!("c:{}", conn.label()), l.number);
                    scenario.connections.push(conn);
                }
                k => return Err(l.error(format!("unexpected `{k}`")).into()),
            }
        }
        let (name, base) = header
            .ok_or_else(|| TextError::new(1, "missing `scenario <name> base_step=<s>` line"))?;
        scenario.name = name;
        scenario.base_step_s = base;
        scenario.check_references(catalog, |key| {
            locations
                .get(key)
                .map_or_else(|| "scenario".to_string(), |n| format!("line {n}"))
        })?;
        scenario.canonicalize();
        Ok(scenario)
    }

    /// Referential integrity against the catalog. `locate` maps `s:<id>`,
    /// `e:<id>` and `c:<label>` keys to a human-readable location.
    fn check_references(
        &self,
        catalog: &Catalog,
        locate: impl Fn(&str) -> String,
    ) -> Result<(), ScenarioError> {
        let mut ids = BTreeSet::new();
        for s in &self.simulators {
            let location = locate(&format!("s:{}", s.id));
            if !ids.insert(&s.id) {
                return Err(ScenarioError::Duplicate {
                    location,
                    what: "simulator",
                    id: s.id.clone(),
                });
            }
            if s.step_s == 0 || s.step_s % self.base_step_s != 0 {
                return Err(ScenarioError::Step {
                    location,
                    step: s.step_s,
                    base: self.base_step_s,
                });
            }
            let comp =
                catalog
                    .component(&s.component)
                    .ok_or_else(|| ScenarioError::UnknownComponent {
                        location: location.clone(),
                        component: s.component.clone(),
                    })?;
            for name in s.params.keys() {
                let v = comp
                    .variable(name)
                    .ok_or_else(|| ScenarioError::UnknownVariable {
                        location: location.clone(),
                        component: comp.id.clone(),
                        variable: name.clone(),
                    })?;
                if !v.causality.is_parameter() {
                    return Err(ScenarioError::Invalid {
                        location,
                        message: format!(
                            "param {name} targets a variable with causality {}",
                            v.causality
                        ),
                    });
                }
            }
        }
        let mut ids = BTreeSet::new();
        for e in &self.entities {
            let location = locate(&format!("e:{}", e.id));
            if !ids.insert(&e.id) {
                return Err(ScenarioError::Duplicate {
                    location,
                    what: "entity",
                    id: e.id.clone(),
                });
            }
            if self.simulator(&e.simulator).is_none() {
                return Err(ScenarioError::UnknownReference {
                    location,
                    message: format!(
                        "entity {} runs on unknown simulator {:?}",
                        e.id, e.simulator
                    ),
                });
            }
        }
        let mut targets = BTreeSet::new();
        for c in &self.connections {
            let location = locate(&format!("c:{}", c.label()));
            for ep in [&c.source, &c.target] {
                let comp = self.component_of(&ep.entity).ok_or_else(|| {
                    ScenarioError::UnknownReference {
                        location: location.clone(),
                        message: format!("unknown entity {:?}", ep.entity),
                    }
                })?;
                if catalog.variable(comp, &ep.variable).is_none() {
                    return Err(ScenarioError::UnknownVariable {
                        location,
                        component: comp.to_string(),
                        variable: ep.variable.clone(),
                    });
                }
            }
            if !targets.insert(&c.target) {
                return Err(ScenarioError::DuplicateTarget {
                    location,
                    target: c.target.to_string(),
                });
            }
        }
        Ok(())
    }

    /// The scenario file format; parses back to an equal scenario.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "scenario {} base_step={}", self.name, self.base_step_s).ok();
        for s in &self.simulators {
            write!(
                out,
                "simulator {} component={} step={}",
                s.id, s.component, s.step_s
            )
            .ok();
            for (k, v) in &s.params {
                match v {
                    ParamValue::Text(t) if t.chars().any(char::is_whitespace) => {
                        write!(out, " param \"{k}={t}\"")
                    }
                    _ => write!(out, " param {k}={v}"),
                }
                .ok();
            }
            out.push('\n');
        }
        for e in &self.entities {
            let model = if e.model.chars().any(char::is_whitespace) {
                format!("\"{}\"", e.model)
            } else {
                e.model.clone()
            };
            writeln!(
                out,
                "entity {} simulator={} model={model}",
                e.id, e.simulator
            )
            .ok();
        }
        for c in &self.connections {
            write!(out, "connect {} -> {}", c.source, c.target).ok();
            if c.time_shifted {
                out.push_str(" time_shifted");
            }
            if let Some(t) = c.transform {
                write!(out, " transform={}", vocab::format_number(t.factor)).ok();
                if t.offset != 0.0 {
                    write!(out, ",{}", vocab::format_number(t.offset)).ok();
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_triples(&self) -> Vec<Triple> {
        let mut out = Vec::new();
        let sc = vocab::mint(Kind::Scenario, &self.name);
        out.push(vocab::typed(&sc, class::SCENARIO));
        out.push(vocab::triple(
            &sc,
            pred::HAS_NAME,
            Term::literal(&self.name),
        ));
        out.push(vocab::triple(
            &sc,
            pred::BASE_STEP_SECONDS,
            vocab::integer(self.base_step_s),
        ));
        for s in &self.simulators {
            let si = vocab::mint(Kind::Simulator, &s.id);
            out.push(vocab::triple(&sc, pred::HAS_SIMULATOR, si.clone()));
            out.push(vocab::typed(&si, class::SIMULATOR));
            out.push(vocab::triple(
                &si,
                pred::INSTANCE_OF,
                vocab::mint(Kind::Component, &s.component),
            ));
            out.push(vocab::triple(
                &si,
                pred::STEP_SECONDS,
                vocab::integer(s.step_s),
            ));
            for (k, v) in &s.params {
                let p = vocab::mint(Kind::Param, &format!("{}.{k}", s.id));
                out.push(vocab::triple(&si, pred::HAS_PARAM, p.clone()));
                out.push(vocab::typed(&p, class::PARAM));
                out.push(vocab::triple(&p, pred::HAS_NAME, Term::literal(k)));
                let value = match v {
                    ParamValue::Number(x) => vocab::double(*x),
                    ParamValue::Text(t) => Term::literal(t),
                };
                out.push(vocab::triple(&p, pred::HAS_VALUE, value));
            }
        }
        for e in &self.entities {
            let ei = vocab::mint(Kind::Entity, &e.id);
            out.push(vocab::triple(&sc, pred::HAS_ENTITY, ei.clone()));
            out.push(vocab::typed(&ei, class::ENTITY));
            out.push(vocab::triple(
                &ei,
                pred::RUNS_ON,
                vocab::mint(Kind::Simulator, &e.simulator),
            ));
            out.push(vocab::triple(&ei, pred::HAS_MODEL, Term::literal(&e.model)));
        }
        for c in &self.connections {
            let ci = vocab::mint(Kind::Connection, &c.label());
            out.push(vocab::triple(&sc, pred::HAS_CONNECTION, ci.clone()));
            out.push(vocab::typed(&ci, class::CONNECTION));
            out.push(vocab::triple(
                &ci,
                pred::CONNECTS_FROM,
                vocab::mint(Kind::Entity, &c.source.entity),
            ));
            out.push(vocab::triple(
                &ci,
                pred::FROM_VARIABLE,
                Term::literal(&c.source.variable),
            ));
            out.push(vocab::triple(
                &ci,
                pred::CONNECTS_TO,
                vocab::mint(Kind::Entity, &c.target.entity),
            ));
            out.push(vocab::triple(
                &ci,
                pred::TO_VARIABLE,
                Term::literal(&c.target.variable),
            ));
            out.push(vocab::triple(
                &ci,
                pred::TIME_SHIFTED,
                vocab::boolean(c.time_shifted),
            ));
            if let Some(t) = c.transform {
                out.push(vocab::triple(
                    &ci,
                    pred::TRANSFORM_FACTOR,
                    vocab::double(t.factor),
                ));
                out.push(vocab::triple(
                    &ci,
                    pred::TRANSFORM_OFFSET,
                    vocab::double(t.offset),
                ));
            }
        }
        out
    }

    /// Decodes the single scenario in `store` and re-checks its references.
    pub fn from_triples(store: &Store, catalog: &Catalog) -> Result<Self, ScenarioError> {
        vocab::check_vocabulary(store)?;
        let subjects: Vec<&Term> = store.subjects_of_type(class::SCENARIO).collect();
        let sc = match subjects.as_slice() {
            [one] => *one,
            [] => return Err(DecodeError::Structure("no scenario in store".into()).into()),
            _ => {
                return Err(DecodeError::Structure(format!(
                    "{} scenarios in store, expected one",
                    subjects.len()
                ))
                .into())
            }
        };
        let r = Resource::new(store, sc);
        let base_step_s = integer(&r, pred::BASE_STEP_SECONDS)?;
        let mut scenario = Scenario {
            name: r.text(pred::HAS_NAME)?,
            base_step_s,
            simulators: Vec::new(),
            entities: Vec::new(),
            connections: Vec::new(),
        };
        for si in r.all(pred::HAS_SIMULATOR) {
            let sr = Resource::new(store, si);
            let mut params = BTreeMap::new();
            for p in sr.all(pred::HAS_PARAM) {
                let pr = Resource::new(store, p);
                let value = match pr.required(pred::HAS_VALUE)? {
                    Term::Literal {
                        value,
                        datatype: Some(dt),
                    } if dt == XSD_DOUBLE => ParamValue::Number(
                        value
                            .parse()
                            .map_err(|_| pr.bad(pred::HAS_VALUE, value, "not a number"))?,
                    ),
                    other => ParamValue::Text(other.value().to_string()),
                };
                params.insert(pr.text(pred::HAS_NAME)?, value);
            }
            scenario.simulators.push(SimulatorInstance {
                id: unmint(Kind::Simulator, si)?,
                component: sr.reference(pred::INSTANCE_OF, Kind::Component)?,
                params,
                step_s: integer(&sr, pred::STEP_SECONDS)?,
            });
        }
        for ei in r.all(pred::HAS_ENTITY) {
            let er = Resource::new(store, ei);
            scenario.entities.push(Entity {
                id: unmint(Kind::Entity, ei)?,
                simulator: er.reference(pred::RUNS_ON, Kind::Simulator)?,
                model: er.text(pred::HAS_MODEL)?,
            });
        }
        for ci in r.all(pred::HAS_CONNECTION) {
            let cr = Resource::new(store, ci);
            let shifted = cr.required(pred::TIME_SHIFTED)?;
            let time_shifted = match (shifted.value(), shifted) {
                (
                    "true",
                    Term::Literal {
                        datatype: Some(dt), ..
                    },
                ) if dt == XSD_BOOLEAN => true,
                (
                    "false",
                    Term::Literal {
                        datatype: Some(dt), ..
                    },
                ) if dt == XSD_BOOLEAN => false,
                (v, _) => return Err(cr.bad(pred::TIME_SHIFTED, v, "expected xsd:boolean").into()),
            };
            let transform = match cr.optional_number(pred::TRANSFORM_FACTOR)? {
                Some(f) => Some(ConversionFn::new(
                    f,
                    cr.optional_number(pred::TRANSFORM_OFFSET)?.unwrap_or(0.0),
                )),
                None => None,
            };
            scenario.connections.push(Connection {
                source: Endpoint::new(
                    &cr.reference(pred::CONNECTS_FROM, Kind::Entity)?,
                    &cr.text(pred::FROM_VARIABLE)?,
                ),
                target: Endpoint::new(
                    &cr.reference(pred::CONNECTS_TO, Kind::Entity)?,
                    &cr.text(pred::TO_VARIABLE)?,
                ),
                time_shifted,
                transform,
            });
        }
        if scenario.base_step_s == 0 {
            return Err(ScenarioError::Invalid {
                location: format!("scenario {}", scenario.name),
                message: "base step must be positive".into(),
            });
        }
        scenario.check_references(catalog, |key| key[2..].to_string())?;
        scenario.canonicalize();
        Ok(scenario)
    }
}

fn unmint(kind: Kind, t: &Term) -> Result<String, DecodeError> {
    vocab::unmint(kind, t).ok_or_else(|| {
        DecodeError::Structure(format!("{} is not a {} iri", t.value(), kind.as_str()))
    })
}

fn integer(r: &Resource<'_>, predicate: &str) -> Result<u64, DecodeError> {
    let t = r.required(predicate)?;
    t.value()
        .parse()
        .map_err(|_| r.bad(predicate, t.value(), "expected a nonnegative integer"))
}

fn step(l: &Line, o: &mut text::Options, key: &str) -> Result<u64, TextError> {
    let v = o.require(key)?;
    match v.parse::<u64>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(l.error(format!(
            "{key}: {v:?} is not a positive integer number of seconds"
        ))),
    }
}

fn add_param(
    l: &Line,
    params: &mut BTreeMap<String, ParamValue>,
    token: &str,
) -> Result<(), TextError> {
    let (k, v) = token
        .split_once('=')
        .ok_or_else(|| l.error(format!("param {token:?} is not name=value")))?;
    text::check_name(l, "param", k)?;
    if params.insert(k.to_string(), ParamValue::parse(v)).is_some() {
        return Err(l.error(format!("param {k} given twice")));
    }
    Ok(())
}

fn duplicate(l: &Line, what: &'static str, id: &str) -> ScenarioError {
    ScenarioError::Duplicate {
        location: format!("line {}", l.number),
        what,
        id: id.to_string(),
    }
}

fn parse_connection(l: &Line) -> Result<Connection, TextError> {
    let t = &l.tokens;
    if t.len() < 4 || t[2] != "->" {
        return Err(l.error(
            "expected `connect <entity>.<var> -> <entity>.<var> [time_shifted] [transform=f[,o]]`",
        ));
    }
    let endpoint =
        |s: &str| Endpoint::parse(s).ok_or_else(|| l.error(format!("invalid endpoint {s:?}")));
    let mut conn = Connection::new(endpoint(&t[1])?, endpoint(&t[3])?);
    for tok in &t[4..] {
        if tok == "time_shifted" && !conn.time_shifted {
            conn.time_shifted = true;
        } else if let Some(spec) = tok
            .strip_prefix("transform=")
            .filter(|_| conn.transform.is_none())
        {
            let (f, o) = spec.split_once(',').unwrap_or((spec, "0"));
            let factor = text::parse_number(l.number, "transform", f)?;
            let offset = text::parse_number(l.number, "transform", o)?;
            if factor == 0.0 {
                return Err(l.error("transform factor must be nonzero"));
            }
            conn.transform = Some(ConversionFn::new(factor, offset));
        } else {
            return Err(l.error(format!("unexpected {tok:?} in connection")));
        }
    }
    Ok(conn)
}
