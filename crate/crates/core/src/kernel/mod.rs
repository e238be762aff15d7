//! Fixed-step execution of scenarios built from builtin models.
//!
//! At every base step `t` the kernel snapshots all outputs, then executes the
//! entities whose simulator step divides `t` in topological order of the
//! non-time-shifted connections. Time-shifted edges read the snapshot (the
//! source's start value at `t = 0`); all other edges read the current value.
//! Declared transforms apply on every delivery.

mod builtins;
mod timeseries;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use thiserror::Error;

pub use builtins::{BuiltinKind, Model};
pub use timeseries::TimeSeries;

use crate::catalog::{Catalog, Causality};
use crate::info_model::{AggregateOp, InfoModel, TransformKind};
use crate::scenario::{Connection, Endpoint, Scenario};
use crate::triple_store::{Store, Term, Triple};
use crate::units::{self, UnitSpec, UnitTable};
use crate::validator;
use crate::vocab::{self, class, pred, DecodeError, Kind, Resource};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("duration {duration} s is not a positive multiple of the base step {base} s")]
    Duration { duration: u64, base: u64 },
    #[error("scenario failed validation:\n{0}")]
    Validation(String),
    #[error("simulator {simulator}: component {component} is not executable{}", .kind.as_ref().map(|k| format!(" (unknown builtin {k:?})")).unwrap_or_default())]
    Unmapped {
        simulator: String,
        component: String,
        kind: Option<String>,
    },
    #[error("simulator {simulator}: {message}")]
    Model { simulator: String, message: String },
    #[error("{path}: {message}")]
    Timeseries { path: String, message: String },
    #[error("time-shifted connection {connection}: source declares no start value")]
    MissingStart { connection: String },
    #[error("entities {} form a cycle without a time-shifted connection", .0.join(", "))]
    Cycle(Vec<String>),
    #[error("{0}")]
    Dangling(String),
    #[error("no recorded series for attribute {0}")]
    MissingSeries(String),
    #[error("attribute {0} matches more than one recorded series")]
    AmbiguousSeries(String),
    #[error("{what}: cannot convert {from} to {to}")]
    Dimension {
        what: String,
        from: String,
        to: String,
    },
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub duration_s: u64,
    /// Run despite validation errors; missing start values default to 0.
    pub force: bool,
    /// Directory that relative time-series paths resolve against.
    pub base_dir: PathBuf,
}

impl RunOptions {
    pub fn new(duration_s: u64) -> Self {
        RunOptions {
            duration_s,
            force: false,
            base_dir: PathBuf::from("."),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub entity: String,
    pub variable: String,
    pub time_s: u64,
    pub value: f64,
}

/// A recorded input: which entity recorded it, for which model, in which unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub entity: String,
    pub model: String,
    pub variable: String,
    pub unit: UnitSpec,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunResult {
    /// Sorted by (entity, variable, time).
    pub samples: Vec<Sample>,
    pub criteria: BTreeMap<String, f64>,
    /// Sorted by (entity, variable).
    pub series: Vec<Series>,
}

impl RunResult {
    /// Values of one recorded series in time order.
    pub fn values(&self, entity: &str, variable: &str) -> Vec<f64> {
        self.samples
            .iter()
            .filter(|s| s.entity == entity && s.variable == variable)
            .map(|s| s.value)
            .collect()
    }

    /// The run log: `entity,variable,time_s,value` with a header row.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["entity", "variable", "time_s", "value"])
            .expect("in-memory write");
        for s in &self.samples {
            w.write_record([
                s.entity.as_str(),
                s.variable.as_str(),
                &s.time_s.to_string(),
                &vocab::format_number(s.value),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }
}

/// Kahn order over non-shifted edges; ties go to the smaller entity id.
fn execution_order(scenario: &Scenario) -> Result<Vec<String>, KernelError> {
    let mut indegree: BTreeMap<&str, usize> = scenario
        .entities
        .iter()
        .map(|e| (e.id.as_str(), 0))
        .collect();
    let mut edges: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for c in scenario.connections.iter().filter(|c| !c.time_shifted) {
        edges
            .entry(&c.source.entity)
            .or_default()
            .push(&c.target.entity);
        *indegree.entry(&c.target.entity).or_default() += 1;
    }
    let mut ready: BTreeSet<&str> = indegree
        .iter()
        .filter(|(_, d)| **d == 0)
        .map(|(e, _)| *e)
        .collect();
    let mut order = Vec::new();
    while let Some(e) = ready.pop_first() {
        order.push(e.to_string());
        for t in edges.get(e).into_iter().flatten() {
            let d = indegree.get_mut(t).expect("edge target is counted");
            *d -= 1;
            if *d == 0 {
                ready.insert(t);
            }
        }
    }
    if order.len() < indegree.len() {
        let stuck = indegree
            .into_iter()
            .filter(|(_, d)| *d > 0)
            .map(|(e, _)| e.to_string())
            .collect();
        return Err(KernelError::Cycle(stuck));
    }
    Ok(order)
}

struct Node<'a> {
    id: &'a str,
    step_s: u64,
    model: Model,
    inputs: Vec<&'a str>,
    outputs: Vec<&'a str>,
    /// Sorted names of wired inputs.
    connected: Vec<&'a str>,
    incoming: BTreeMap<&'a str, &'a Connection>,
    recorder: bool,
}

/// Executes `scenario` for `duration_s` seconds. Criteria are evaluated when
/// a model is given.
pub fn run(
    scenario: &Scenario,
    catalog: &Catalog,
    options: &RunOptions,
    model: Option<&InfoModel>,
) -> Result<RunResult, KernelError> {
    let base = scenario.base_step_s;
    if options.duration_s == 0 || base == 0 || !options.duration_s.is_multiple_of(base) {
        return Err(KernelError::Duration {
            duration: options.duration_s,
            base,
        });
    }
    let report = validator::validate(scenario, catalog, None, None);
    if !report.passed && !options.force {
        return Err(KernelError::Validation(report.to_string()));
    }

    let start_of = |ep: &Endpoint| -> Option<f64> {
        catalog
            .variable(scenario.component_of(&ep.entity)?, &ep.variable)?
            .start
    };
    let mut nodes: BTreeMap<&str, Node> = BTreeMap::new();
    for e in &scenario.entities {
        let sim = scenario.simulator(&e.simulator).ok_or_else(|| {
            KernelError::Dangling(format!(
                "entity {} runs on unknown simulator {}",
                e.id, e.simulator
            ))
        })?;
        let comp = catalog.component(&sim.component).ok_or_else(|| {
            KernelError::Dangling(format!(
                "simulator {} instantiates unknown component {}",
                sim.id, sim.component
            ))
        })?;
        let incoming: BTreeMap<&str, &Connection> = scenario
            .connections
            .iter()
            .filter(|c| c.target.entity == e.id)
            .map(|c| (c.target.variable.as_str(), c))
            .collect();
        let of = |c: Causality| {
            comp.variables
                .iter()
                .filter(move |v| v.causality == c)
                .map(|v| v.name.as_str())
        };
        let inputs: Vec<&str> = of(Causality::Input).collect();
        let connected: Vec<&str> = inputs
            .iter()
            .copied()
            .filter(|i| incoming.contains_key(i))
            .collect();
        let built = Model::build(sim, comp, &connected, &options.base_dir)?;
        nodes.insert(
            &e.id,
            Node {
                id: &e.id,
                step_s: sim.step_s,
                recorder: matches!(built, Model::Recorder),
                model: built,
                outputs: of(Causality::Output).collect(),
                inputs,
                connected,
                incoming,
            },
        );
    }
    for c in &scenario.connections {
        if c.time_shifted && start_of(&c.source).is_none() && !options.force {
            return Err(KernelError::MissingStart {
                connection: c.label(),
            });
        }
    }
    let order = execution_order(scenario)?;

    let mut current: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    let mut samples = Vec::new();
    for t in (0..options.duration_s).step_by(base as usize) {
        let previous = current.clone();
        for id in &order {
            let node = &nodes[id.as_str()];
            if t % node.step_s != 0 {
                continue;
            }
            let mut values = BTreeMap::new();
            for &input in &node.inputs {
                let v = match node.incoming.get(input) {
                    Some(c) => {
                        let key = (c.source.entity.as_str(), c.source.variable.as_str());
                        let table = if c.time_shifted { &previous } else { &current };
                        let raw = table
                            .get(&key)
                            .copied()
                            .or_else(|| start_of(&c.source))
                            .unwrap_or(0.0);
                        c.transform.map_or(raw, |f| f.apply(raw))
                    }
                    None => start_of(&Endpoint::new(node.id, input)).unwrap_or(0.0),
                };
                values.insert(input.to_string(), v);
            }
            if node.recorder {
                for &input in &node.connected {
                    samples.push(Sample {
                        entity: node.id.to_string(),
                        variable: input.to_string(),
                        time_s: t,
                        value: values[input],
                    });
                }
            }
            if let Some(out) = node.model.step(t as i64, &values, &node.connected) {
                for &o in &node.outputs {
                    current.insert((node.id, o), out);
                }
            }
        }
    }
    samples.sort_by(|a, b| {
        (&a.entity, &a.variable, a.time_s).cmp(&(&b.entity, &b.variable, b.time_s))
    });

    let mut series = Vec::new();
    for node in nodes.values().filter(|n| n.recorder) {
        let entity = scenario.entity(node.id).expect("node built from entity");
        let comp = scenario.component_of(node.id).expect("resolved above");
        for &input in &node.connected {
            series.push(Series {
                entity: node.id.to_string(),
                model: entity.model.clone(),
                variable: input.to_string(),
                unit: catalog
                    .variable(comp, input)
                    .expect("declared input")
                    .unit
                    .clone(),
            });
        }
    }
    let mut result = RunResult {
        samples,
        criteria: BTreeMap::new(),
        series,
    };
    if let Some(m) = model {
        result.criteria = evaluate_criteria(&result, m)?;
    }
    Ok(result)
}

/// The recorded series of `obj.attr`: recorded by an entity whose model is
/// `obj`, on an input named `attr`.
fn series_for<'r>(
    result: &'r RunResult,
    object: &str,
    attribute: &str,
) -> Result<&'r Series, KernelError> {
    let mut found = result
        .series
        .iter()
        .filter(|s| s.model == object && s.variable == attribute);
    let first = found
        .next()
        .ok_or_else(|| KernelError::MissingSeries(format!("{object}.{attribute}")))?;
    if found.next().is_some() {
        return Err(KernelError::AmbiguousSeries(format!(
            "{object}.{attribute}"
        )));
    }
    Ok(first)
}

fn convert(what: &str, from: &UnitSpec, to: &UnitSpec) -> Result<units::ConversionFn, KernelError> {
    units::conversion(from, to).map_err(|_| KernelError::Dimension {
        what: what.to_string(),
        from: from.symbol.clone(),
        to: to.symbol.clone(),
    })
}

/// Applies every transformation function of `model` to the recorded series.
///
/// direct: final value converted to the criterion unit. Aggregates: the op over
/// all samples of all inputs in the criterion unit; weighted_sum weighs the
/// per-input time means. affine(a, b): a * final value (attribute unit) + b.
pub fn evaluate_criteria(
    result: &RunResult,
    model: &InfoModel,
) -> Result<BTreeMap<String, f64>, KernelError> {
    let mut out = BTreeMap::new();
    for tf in &model.transforms {
        let criterion = model.criterion(&tf.output).ok_or_else(|| {
            KernelError::Dangling(format!(
                "transform {} outputs unknown criterion {}",
                tf.name, tf.output
            ))
        })?;
        // Each input in its attribute unit, then the attribute-to-criterion conversion.
        let mut inputs = Vec::new();
        for r in &tf.inputs {
            let attr = model.attribute(r).ok_or_else(|| {
                KernelError::Dangling(format!("transform {} reads unknown attribute {r}", tf.name))
            })?;
            let s = series_for(result, &r.object, &r.attribute)?;
            let to_attr = convert(&format!("series for {r}"), &s.unit, &attr.unit)?;
            let values: Vec<f64> = result
                .values(&s.entity, &s.variable)
                .into_iter()
                .map(|v| to_attr.apply(v))
                .collect();
            if values.is_empty() {
                return Err(KernelError::MissingSeries(r.to_string()));
            }
            inputs.push((r, attr, values));
        }
        let to_criterion = |r: &crate::info_model::AttributeRef, unit: &UnitSpec| {
            convert(
                &format!("{r} into criterion {}", criterion.name),
                unit,
                &criterion.unit,
            )
        };
        let last = |values: &[f64]| *values.last().expect("non-empty series");
        let value = match &tf.kind {
            TransformKind::Direct => {
                let (r, attr, values) = &inputs[0];
                to_criterion(r, &attr.unit)?.apply(last(values))
            }
            TransformKind::Affine { a, b } => a * last(&inputs[0].2) + b,
            TransformKind::Aggregate(AggregateOp::WeightedSum(w)) => {
                let mut total = 0.0;
                for ((r, attr, values), w) in inputs.iter().zip(w) {
                    let c = to_criterion(r, &attr.unit)?;
                    let mean =
                        values.iter().map(|v| c.apply(*v)).sum::<f64>() / values.len() as f64;
                    total += w * mean;
                }
                total
            }
            TransformKind::Aggregate(op) => {
                let mut all = Vec::new();
                for (r, attr, values) in &inputs {
                    let c = to_criterion(r, &attr.unit)?;
                    all.extend(values.iter().map(|v| c.apply(*v)));
                }
                op.reduce(&all).expect("non-empty inputs")
            }
        };
        out.insert(tf.output.clone(), value);
    }
    Ok(out)
}

fn sample_name(s: &Sample) -> String {
    format!("{}.{}@{}", s.entity, s.variable, s.time_s)
}

/// Samples (four properties each, plus typing), criteria values and the
/// recorded-series descriptions.
pub fn results_to_triples(result: &RunResult) -> Vec<Triple> {
    let mut out = Vec::new();
    for s in &result.samples {
        let iri = vocab::mint(Kind::Sample, &sample_name(s));
        out.push(vocab::typed(&iri, class::SAMPLE));
        out.push(vocab::triple(
            &iri,
            pred::OF_ENTITY,
            vocab::mint(Kind::Entity, &s.entity),
        ));
        out.push(vocab::triple(
            &iri,
            pred::OF_VARIABLE,
            Term::literal(&s.variable),
        ));
        out.push(vocab::triple(&iri, pred::AT_TIME, vocab::integer(s.time_s)));
        out.push(vocab::triple(&iri, pred::HAS_VALUE, vocab::double(s.value)));
    }
    for (name, v) in &result.criteria {
        out.push(vocab::triple(
            &vocab::mint(Kind::Criterion, name),
            pred::HAS_VALUE,
            vocab::double(*v),
        ));
    }
    for s in &result.series {
        let iri = vocab::mint(Kind::Run, &format!("{}.{}", s.entity, s.variable));
        out.push(vocab::typed(&iri, class::RUN));
        out.push(vocab::triple(
            &iri,
            pred::OF_ENTITY,
            vocab::mint(Kind::Entity, &s.entity),
        ));
        out.push(vocab::triple(
            &iri,
            pred::OF_VARIABLE,
            Term::literal(&s.variable),
        ));
        out.push(vocab::triple(
            &iri,
            pred::HAS_MODEL,
            Term::literal(&s.model),
        ));
        out.push(vocab::triple(
            &iri,
            pred::HAS_UNIT,
            Term::literal(&s.unit.symbol),
        ));
    }
    out
}

/// Inverse of [`results_to_triples`]. Criterion values are read from every
/// criterion iri carrying `coplan:hasValue`.
pub fn results_from_triples(store: &Store, units: &UnitTable) -> Result<RunResult, KernelError> {
    vocab::check_vocabulary(store)?;
    let mut result = RunResult::default();
    for s in store.subjects_of_type(class::SAMPLE) {
        let r = Resource::new(store, s);
        let t = r.required(pred::AT_TIME)?;
        result.samples.push(Sample {
            entity: r.reference(pred::OF_ENTITY, Kind::Entity)?,
            variable: r.text(pred::OF_VARIABLE)?,
            time_s: t
                .value()
                .parse()
                .map_err(|_| r.bad(pred::AT_TIME, t.value(), "expected a nonnegative integer"))?,
            value: r.number(pred::HAS_VALUE)?,
        });
    }
    result.samples.sort_by(|a, b| {
        (&a.entity, &a.variable, a.time_s).cmp(&(&b.entity, &b.variable, b.time_s))
    });
    let criteria: BTreeSet<&Term> = store
        .iter()
        .filter(|t| t.predicate.value() == pred::HAS_VALUE)
        .map(|t| &t.subject)
        .filter(|s| vocab::unmint(Kind::Criterion, s).is_some())
        .collect();
    for c in criteria {
        let name = vocab::unmint(Kind::Criterion, c).expect("filtered above");
        result
            .criteria
            .insert(name, Resource::new(store, c).number(pred::HAS_VALUE)?);
    }
    for s in store.subjects_of_type(class::RUN) {
        let r = Resource::new(store, s);
        let symbol = r.text(pred::HAS_UNIT)?;
        result.series.push(Series {
            entity: r.reference(pred::OF_ENTITY, Kind::Entity)?,
            model: r.text(pred::HAS_MODEL)?,
            variable: r.text(pred::OF_VARIABLE)?,
            unit: units
                .parse(&symbol)
                .map_err(|e| r.bad(pred::HAS_UNIT, &symbol, e.to_string()))?,
        });
    }
    result
        .series
        .sort_by(|a, b| (&a.entity, &a.variable).cmp(&(&b.entity, &b.variable)));
    Ok(result)
}
