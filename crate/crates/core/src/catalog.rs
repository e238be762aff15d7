//! Co-simulation component catalog.
//!
//! Each record follows the questionnaire layout (general, technical,
//! mathematical and domain information) plus FMI-style variable declarations.
//! Free-text answers nobody interprets (hardware requirements, usage
//! constraints, ...) are kept verbatim in per-section `notes`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::taxonomy::Taxonomy;
use crate::text::{self, Line, TextError};
use crate::triple_store::{Store, Term, Triple};
use crate::units::{UnitError, UnitSpec, UnitTable};
use crate::vocab::{self, class, pred, DecodeError, Kind, Resource};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatalogError {
    #[error(transparent)]
    Syntax(#[from] TextError),
    #[error("line {line}: {source}")]
    Unit {
        line: usize,
        #[source]
        source: UnitError,
    },
    #[error("{location}: duplicate component id {id:?}")]
    DuplicateComponent { location: String, id: String },
    #[error("{location}: duplicate variable {name:?} in component {component}")]
    DuplicateVariable {
        location: String,
        component: String,
        name: String,
    },
    #[error("{location}: invalid {field} {value:?}, expected one of: {allowed}")]
    Token {
        location: String,
        field: &'static str,
        value: String,
        allowed: String,
    },
    #[error("{location}: {message}")]
    Invalid { location: String, message: String },
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

macro_rules! token_enum {
    ($name:ident, $field:literal, { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }

            pub fn parse(s: &str) -> Option<Self> {
                match s {
                    $($text => Some($name::$variant),)+
                    _ => None,
                }
            }

            fn parse_at(s: &str, location: impl Into<String>) -> Result<Self, CatalogError> {
                Self::parse(s).ok_or_else(|| CatalogError::Token {
                    location: location.into(),
                    field: $field,
                    value: s.to_string(),
                    allowed: Self::ALL.iter().map(|v| v.as_str()).collect::<Vec<_>>().join(", "),
                })
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

token_enum!(Causality, "causality", {
    Input => "input",
    Output => "output",
    Parameter => "parameter",
    CalculatedParameter => "calculatedParameter",
});

token_enum!(Variability, "variability", {
    Constant => "constant",
    Fixed => "fixed",
    Discrete => "discrete",
    Continuous => "continuous",
});

token_enum!(SoftwareType, "software_type", {
    SimulationModel => "simulation_model",
    ModelingFramework => "modeling_framework",
    DataAnalysisTool => "data_analysis_tool",
    Controller => "controller",
});

token_enum!(Api, "api", {
    ComponentApi => "component_api",
    Fmi => "fmi",
    Other => "other",
});

impl Causality {
    /// Configuration-time values: exported under `params`.
    pub fn is_parameter(self) -> bool {
        matches!(self, Causality::Parameter | Causality::CalculatedParameter)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableSpec {
    pub name: String,
    pub causality: Causality,
    pub variability: Variability,
    pub unit: UnitSpec,
    pub topic: String,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub start: Option<f64>,
}

impl VariableSpec {
    fn check(&self) -> Result<(), String> {
        if let (Some(lo), Some(hi)) = (self.min, self.max) {
            if lo > hi {
                return Err(format!("variable {}: min {lo} exceeds max {hi}", self.name));
            }
        }
        if self.causality == Causality::Parameter
            && !matches!(self.variability, Variability::Constant | Variability::Fixed)
        {
            return Err(format!(
                "variable {}: causality parameter requires variability constant or fixed, found {}",
                self.name, self.variability
            ));
        }
        Ok(())
    }

    /// Declared bounds; `None` when neither min nor max is given.
    pub fn range(&self) -> Option<(f64, f64)> {
        if self.min.is_none() && self.max.is_none() {
            None
        } else {
            Some((
                self.min.unwrap_or(f64::NEG_INFINITY),
                self.max.unwrap_or(f64::INFINITY),
            ))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct General {
    pub name: String,
    pub contact: String,
    pub software_type: SoftwareType,
    pub license: String,
    pub notes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Technical {
    pub api: Api,
    pub platform: String,
    /// Built-in kernel model backing this component, if executable.
    pub builtin: Option<String>,
    pub notes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mathematical {
    pub temporal_resolution_s: f64,
    pub spatial_resolution: Option<String>,
    pub notes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentRecord {
    pub id: String,
    pub general: General,
    pub technical: Technical,
    pub mathematical: Mathematical,
    /// Sorted, distinct.
    pub domains: Vec<String>,
    /// Sorted by name.
    pub variables: Vec<VariableSpec>,
}

impl ComponentRecord {
    pub fn variable(&self, name: &str) -> Option<&VariableSpec> {
        self.variables.iter().find(|v| v.name == name)
    }

    fn check(&self) -> Result<(), CatalogError> {
        let location = format!("component {}", self.id);
        if !(self.mathematical.temporal_resolution_s.is_finite()
            && self.mathematical.temporal_resolution_s > 0.0)
        {
            return Err(CatalogError::Invalid {
                location,
                message: "temporal_resolution_s must be positive".into(),
            });
        }
        let mut names = BTreeSet::new();
        for v in &self.variables {
            if !names.insert(&v.name) {
                return Err(CatalogError::DuplicateVariable {
                    location,
                    component: self.id.clone(),
                    name: v.name.clone(),
                });
            }
            v.check().map_err(|message| CatalogError::Invalid {
                location: location.clone(),
                message,
            })?;
        }
        Ok(())
    }

    fn canonicalize(&mut self) {
        self.domains.sort();
        self.domains.dedup();
        self.variables.sort_by(|a, b| a.name.cmp(&b.name));
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    /// Sorted by id.
    pub components: Vec<ComponentRecord>,
}

impl Catalog {
    pub fn component(&self, id: &str) -> Option<&ComponentRecord> {
        self.components.iter().find(|c| c.id == id)
    }

    pub fn variable(&self, component: &str, name: &str) -> Option<&VariableSpec> {
        self.component(component)?.variable(name)
    }

    /// Parses the catalog format and checks every invariant.
    pub fn parse(source: &str, units: &UnitTable) -> Result<Self, CatalogError> {
        let mut catalog = Catalog::default();
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        for node in text::tree(source)? {
            let line = &node.line;
            if line.keyword() != "component" {
                return Err(line
                    .error(format!("expected `component`, found `{}`", line.keyword()))
                    .into());
            }
            let id = line.name()?;
            text::check_name(line, "component", id)?;
            line.options(2)?.finish()?;
            if seen.insert(id.to_string(), line.number).is_some() {
                return Err(CatalogError::DuplicateComponent {
                    location: format!("line {}", line.number),
                    id: id.to_string(),
                });
            }

            let mut general = None;
            let mut technical = None;
            let mut mathematical = None;
            let mut domains = Vec::new();
            let mut variables: Vec<VariableSpec> = Vec::new();
            for child in &node.children {
                let l = &child.line;
                if let Some(c) = child.children.first() {
                    return Err(c.line.error("unexpected indentation").into());
                }
                let once = |slot_filled: bool| {
                    if slot_filled {
                        Err(l.error(format!("`{}` given twice", l.keyword())))
                    } else {
                        Ok(())
                    }
                };
                match l.keyword() {
                    "general" => {
                        once(general.is_some())?;
                        general = Some(parse_general(l)?);
                    }
                    "technical" => {
                        once(technical.is_some())?;
                        technical = Some(parse_technical(l)?);
                    }
                    "mathematical" => {
                        once(mathematical.is_some())?;
                        mathematical = Some(parse_mathematical(l)?);
                    }
                    "domains" => {
                        if l.tokens.len() != 2 {
                            return Err(l.error("expected `domains <term,...>`").into());
                        }
                        for term in l.tokens[1].split(',') {
                            text::check_name(l, "domain topic", term)?;
                            domains.push(term.to_string());
                        }
                    }
                    "variable" => {
                        let v = parse_variable(l, units)?;
                        if variables.iter().any(|x| x.name == v.name) {
                            return Err(CatalogError::DuplicateVariable {
                                location: format!("line {}", l.number),
                                component: id.to_string(),
                                name: v.name,
                            });
                        }
                        v.check().map_err(|message| CatalogError::Invalid {
                            location: format!("line {}", l.number),
                            message,
                        })?;
                        variables.push(v);
                    }
                    k => return Err(l.error(format!("unexpected `{k}` inside component")).into()),
                }
            }
            let missing = |what: &str| CatalogError::Invalid {
                location: format!("line {}", line.number),
                message: format!("component {id} lacks a `{what}` line"),
            };
            let mut record = ComponentRecord {
                id: id.to_string(),
                general: general.ok_or_else(|| missing("general"))?,
                technical: technical.ok_or_else(|| missing("technical"))?,
                mathematical: mathematical.ok_or_else(|| missing("mathematical"))?,
                domains,
                variables,
            };
            record.canonicalize();
            record.check().map_err(|e| match e {
                CatalogError::Invalid { message, .. } => CatalogError::Invalid {
                    location: format!("line {}", line.number),
                    message,
                },
                other => other,
            })?;
            catalog.components.push(record);
        }
        catalog.components.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(catalog)
    }

    pub fn topic_warnings(&self, taxonomy: &Taxonomy) -> Vec<String> {
        let mut out = Vec::new();
        for c in &self.components {
            for d in &c.domains {
                if !taxonomy.contains(d) {
                    out.push(format!(
                        "component {}: unregistered domain topic {d:?}",
                        c.id
                    ));
                }
            }
            for v in &c.variables {
                if !taxonomy.contains(&v.topic) {
                    out.push(format!(
                        "variable {}.{}: unregistered topic {:?}",
                        c.id, v.name, v.topic
                    ));
                }
            }
        }
        out
    }

    pub fn to_triples(&self) -> Vec<Triple> {
        let mut out = Vec::new();
        for c in &self.components {
            let s = vocab::mint(Kind::Component, &c.id);
            let lit = |p: &str, v: &str| vocab::triple(&s, p, Term::literal(v));
            out.push(vocab::typed(&s, class::COMPONENT));
            out.push(lit(pred::HAS_NAME, &c.general.name));
            out.push(lit(pred::HAS_CONTACT, &c.general.contact));
            out.push(lit(pred::SOFTWARE_TYPE, c.general.software_type.as_str()));
            out.push(lit(pred::HAS_LICENSE, &c.general.license));
            out.push(lit(pred::HAS_API, c.technical.api.as_str()));
            out.push(lit(pred::HAS_PLATFORM, &c.technical.platform));
            if let Some(b) = &c.technical.builtin {
                out.push(lit(pred::BUILTIN, b));
            }
            out.push(vocab::triple(
                &s,
                pred::TEMPORAL_RESOLUTION,
                vocab::double(c.mathematical.temporal_resolution_s),
            ));
            if let Some(r) = &c.mathematical.spatial_resolution {
                out.push(lit(pred::SPATIAL_RESOLUTION, r));
            }
            for (section, notes) in [
                ("general", &c.general.notes),
                ("technical", &c.technical.notes),
                ("mathematical", &c.mathematical.notes),
            ] {
                for (k, v) in notes {
                    out.push(lit(pred::HAS_NOTE, &format!("{section}.{k}={v}")));
                }
            }
            for d in &c.domains {
                out.push(lit(pred::HAS_DOMAIN, d));
            }
            for v in &c.variables {
                let vs = vocab::mint(Kind::Variable, &format!("{}.{}", c.id, v.name));
                out.push(vocab::triple(&s, pred::HAS_VARIABLE, vs.clone()));
                out.push(vocab::typed(&vs, class::VARIABLE));
                out.push(vocab::triple(
                    &vs,
                    pred::HAS_CAUSALITY,
                    Term::literal(v.causality.as_str()),
                ));
                out.push(vocab::triple(
                    &vs,
                    pred::HAS_VARIABILITY,
                    Term::literal(v.variability.as_str()),
                ));
                out.push(vocab::triple(
                    &vs,
                    pred::HAS_UNIT,
                    Term::literal(&v.unit.symbol),
                ));
                out.push(vocab::triple(&vs, pred::HAS_TOPIC, Term::literal(&v.topic)));
                for (p, val) in [
                    (pred::HAS_MIN, v.min),
                    (pred::HAS_MAX, v.max),
                    (pred::HAS_START, v.start),
                ] {
                    if let Some(x) = val {
                        out.push(vocab::triple(&vs, p, vocab::double(x)));
                    }
                }
            }
        }
        out
    }

    pub fn from_triples(store: &Store, units: &UnitTable) -> Result<Self, CatalogError> {
        vocab::check_vocabulary(store)?;
        let mut components = Vec::new();
        for s in store.subjects_of_type(class::COMPONENT) {
            let id = vocab::unmint(Kind::Component, s).ok_or_else(|| {
                DecodeError::Structure(format!("{} is not a component iri", s.value()))
            })?;
            let r = Resource::new(store, s);
            let location = format!("component {id}");
            let mut notes: BTreeMap<&str, BTreeMap<String, String>> = BTreeMap::new();
            for n in r.all(pred::HAS_NOTE) {
                let parsed = n
                    .value()
                    .split_once('.')
                    .and_then(|(sec, kv)| kv.split_once('=').map(|(k, v)| (sec, k, v)))
                    .filter(|(sec, _, _)| matches!(*sec, "general" | "technical" | "mathematical"));
                let Some((sec, k, v)) = parsed else {
                    return Err(r
                        .bad(
                            pred::HAS_NOTE,
                            n.value(),
                            "expected <section>.<key>=<value>",
                        )
                        .into());
                };
                let sec = match sec {
                    "general" => "general",
                    "technical" => "technical",
                    _ => "mathematical",
                };
                notes
                    .entry(sec)
                    .or_default()
                    .insert(k.to_string(), v.to_string());
            }
            let mut take_notes = |sec: &str| notes.remove(sec).unwrap_or_default();

            let mut variables = Vec::new();
            for vt in r.all(pred::HAS_VARIABLE) {
                let full = vocab::unmint(Kind::Variable, vt).ok_or_else(|| {
                    DecodeError::Structure(format!("{} is not a variable iri", vt.value()))
                })?;
                let name = full
                    .strip_prefix(&format!("{id}."))
                    .ok_or_else(|| {
                        DecodeError::Structure(format!("variable {full} does not belong to {id}"))
                    })?
                    .to_string();
                let vr = Resource::new(store, vt);
                let vloc = format!("variable {full}");
                let sym = vr.text(pred::HAS_UNIT)?;
                variables.push(VariableSpec {
                    name,
                    causality: Causality::parse_at(&vr.text(pred::HAS_CAUSALITY)?, &vloc)?,
                    variability: Variability::parse_at(&vr.text(pred::HAS_VARIABILITY)?, &vloc)?,
                    unit: units
                        .parse(&sym)
                        .map_err(|e| vr.bad(pred::HAS_UNIT, &sym, e.to_string()))?,
                    topic: vr.text(pred::HAS_TOPIC)?,
                    min: vr.optional_number(pred::HAS_MIN)?,
                    max: vr.optional_number(pred::HAS_MAX)?,
                    start: vr.optional_number(pred::HAS_START)?,
                });
            }

            let mut record = ComponentRecord {
                general: General {
                    name: r.text(pred::HAS_NAME)?,
                    contact: r.text(pred::HAS_CONTACT)?,
                    software_type: SoftwareType::parse_at(
                        &r.text(pred::SOFTWARE_TYPE)?,
                        &location,
                    )?,
                    license: r.text(pred::HAS_LICENSE)?,
                    notes: take_notes("general"),
                },
                technical: Technical {
                    api: Api::parse_at(&r.text(pred::HAS_API)?, &location)?,
                    platform: r.text(pred::HAS_PLATFORM)?,
                    builtin: r.optional_text(pred::BUILTIN)?,
                    notes: take_notes("technical"),
                },
                mathematical: Mathematical {
                    temporal_resolution_s: r.number(pred::TEMPORAL_RESOLUTION)?,
                    spatial_resolution: r.optional_text(pred::SPATIAL_RESOLUTION)?,
                    notes: take_notes("mathematical"),
                },
                domains: r
                    .all(pred::HAS_DOMAIN)
                    .into_iter()
                    .map(|t| t.value().to_string())
                    .collect(),
                variables,
                id,
            };
            record.canonicalize();
            record.check()?;
            components.push(record);
        }
        components.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(Catalog { components })
    }
}

fn parse_general(l: &Line) -> Result<General, CatalogError> {
    let mut o = l.options(1)?;
    let software_type =
        SoftwareType::parse_at(&o.require("software_type")?, format!("line {}", l.number))?;
    Ok(General {
        name: o.require("name")?,
        contact: o.take("contact").unwrap_or_default(),
        software_type,
        license: o.take("license").unwrap_or_default(),
        notes: o.rest(),
    })
}

fn parse_technical(l: &Line) -> Result<Technical, CatalogError> {
    let mut o = l.options(1)?;
    let api = Api::parse_at(&o.require("api")?, format!("line {}", l.number))?;
    Ok(Technical {
        api,
        platform: o.take("platform").unwrap_or_default(),
        builtin: o.take("builtin"),
        notes: o.rest(),
    })
}

fn parse_mathematical(l: &Line) -> Result<Mathematical, CatalogError> {
    let mut o = l.options(1)?;
    let res = o
        .number("temporal_resolution_s")?
        .ok_or_else(|| l.error("missing temporal_resolution_s="))?;
    if res <= 0.0 {
        return Err(l.error("temporal_resolution_s must be positive").into());
    }
    Ok(Mathematical {
        temporal_resolution_s: res,
        spatial_resolution: o.take("spatial_resolution"),
        notes: o.rest(),
    })
}

fn parse_variable(l: &Line, units: &UnitTable) -> Result<VariableSpec, CatalogError> {
    let name = l.name()?;
    text::check_name(l, "variable", name)?;
    let loc = format!("line {}", l.number);
    let mut o = l.options(2)?;
    let causality = Causality::parse_at(&o.require("causality")?, &loc)?;
    let variability = Variability::parse_at(&o.require("variability")?, &loc)?;
    let unit_expr = o.require("unit")?;
    let unit = units
        .parse(&unit_expr)
        .map_err(|source| CatalogError::Unit {
            line: l.number,
            source,
        })?;
    let topic = o.require("topic")?;
    text::check_name(l, "topic", &topic)?;
    let v = VariableSpec {
        name: name.to_string(),
        causality,
        variability,
        unit,
        topic,
        min: o.number("min")?,
        max: o.number("max")?,
        start: o.number("start")?,
    };
    o.finish()?;
    Ok(v)
}

#[derive(Serialize)]
struct MetaDocument<'a> {
    #[serde(rename = "type")]
    kind: &'static str,
    models: BTreeMap<&'a str, MetaModel<'a>>,
}

#[derive(Serialize)]
struct MetaModel<'a> {
    name: &'a str,
    params: Vec<&'a str>,
    attrs: BTreeMap<&'a str, MetaAttr<'a>>,
}

#[derive(Serialize)]
struct MetaAttr<'a> {
    unit: &'a str,
    min: Option<f64>,
    max: Option<f64>,
}

/// Meta description of one component: parameters (parameter and
/// calculatedParameter causality) and attributes (input and output), sorted
/// by name. The document is pretty-printed JSON.
pub fn export_meta(component: &ComponentRecord) -> String {
    let mut params: Vec<&str> = Vec::new();
    let mut attrs = BTreeMap::new();
    for v in &component.variables {
        if v.causality.is_parameter() {
            params.push(&v.name);
        } else {
            attrs.insert(
                v.name.as_str(),
                MetaAttr {
                    unit: &v.unit.symbol,
                    min: v.min,
                    max: v.max,
                },
            );
        }
    }
    params.sort_unstable();
    let doc = MetaDocument {
        kind: "time-based",
        models: BTreeMap::from([(
            component.id.as_str(),
            MetaModel {
                name: &component.general.name,
                params,
                attrs,
            },
        )]),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("meta document is always serializable");
    out.push('\n');
    out
}
