//! Coherence checks for a loaded scenario, and automatic insertion of unit
//! transforms.

use std::collections::BTreeSet;
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graphmap::DiGraphMap;

use crate::catalog::{Catalog, Causality, VariableSpec};
use crate::info_model::{InfoModel, Role};
use crate::scenario::{Connection, Endpoint, Scenario};
use crate::taxonomy::Taxonomy;
use crate::units::{self, ConversionFn};
use crate::vocab::format_number;

/// Relative tolerance for declared transforms against the unit conversion.
pub const TRANSFORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Error,
    Warning,
    Info,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Info => "info",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Code {
    /// Source variable is not an output.
    E001,
    /// Target variable is not an input.
    E002,
    /// Connected variables differ in dimension.
    E003,
    /// Source range disjoint from target range.
    E004,
    /// Dangling reference.
    E005,
    /// Cycle without a time-shifted edge.
    E006,
    /// Declared transform contradicts the unit conversion.
    E007,
    /// Same dimension, different unit, no transform.
    W001,
    /// Source range only partially inside the target range.
    W002,
    /// Input variable without incoming connection.
    W003,
    /// Required flow of the information model not realized.
    W004,
    /// Time-shifted edge whose source lacks a start value.
    W005,
}

impl Code {
    pub const ALL: [Code; 12] = [
        Code::E001,
        Code::E002,
        Code::E003,
        Code::E004,
        Code::E005,
        Code::E006,
        Code::E007,
        Code::W001,
        Code::W002,
        Code::W003,
        Code::W004,
        Code::W005,
    ];

    pub fn severity(self) -> Severity {
        match self {
            Code::W001 | Code::W002 | Code::W003 | Code::W004 | Code::W005 => Severity::Warning,
            _ => Severity::Error,
        }
    }

    pub fn parse(s: &str) -> Option<Code> {
        Code::ALL.into_iter().find(|c| c.to_string() == s)
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Finding {
    pub severity: Severity,
    pub code: Code,
    pub location: String,
    pub message: String,
}

impl Finding {
    fn new(code: Code, location: impl Into<String>, message: impl Into<String>) -> Self {
        Finding {
            severity: code.severity(),
            code,
            location: location.into(),
            message: message.into(),
        }
    }

    /// `severity code location message`
    pub fn line(&self) -> String {
        format!(
            "{} {} {} {}",
            self.severity, self.code, self.location, self.message
        )
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}[{}] {}: {}",
            self.severity, self.code, self.location, self.message
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    /// Sorted by (severity, code, location).
    pub findings: Vec<Finding>,
    pub passed: bool,
}

impl ValidationReport {
    fn new(mut findings: Vec<Finding>) -> Self {
        findings.sort();
        findings.dedup();
        let passed = !findings.iter().any(|f| f.severity == Severity::Error);
        ValidationReport { findings, passed }
    }

    pub fn codes(&self) -> BTreeSet<Code> {
        self.findings.iter().map(|f| f.code).collect()
    }

    pub fn with_code(&self, code: Code) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(move |f| f.code == code)
    }

    /// Machine-readable form, one finding per line.
    pub fn to_lines(&self) -> String {
        self.findings.iter().map(|f| f.line() + "\n").collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for finding in &self.findings {
            writeln!(f, "{finding}")?;
        }
        let errors = self
            .findings
            .iter()
            .filter(|x| x.severity == Severity::Error)
            .count();
        let warnings = self
            .findings
            .iter()
            .filter(|x| x.severity == Severity::Warning)
            .count();
        write!(
            f,
            "{}: {errors} error(s), {warnings} warning(s)",
            if self.passed { "passed" } else { "failed" }
        )
    }
}

/// Resolves an endpoint to its catalog variable.
fn resolve<'c>(
    scenario: &Scenario,
    catalog: &'c Catalog,
    ep: &Endpoint,
) -> Result<&'c VariableSpec, String> {
    let entity = scenario
        .entity(&ep.entity)
        .ok_or_else(|| format!("unknown entity {:?}", ep.entity))?;
    let sim = scenario.simulator(&entity.simulator).ok_or_else(|| {
        format!(
            "entity {} runs on unknown simulator {:?}",
            entity.id, entity.simulator
        )
    })?;
    let comp = catalog.component(&sim.component).ok_or_else(|| {
        format!(
            "simulator {} instantiates unknown component {:?}",
            sim.id, sim.component
        )
    })?;
    comp.variable(&ep.variable)
        .ok_or_else(|| format!("component {} has no variable {:?}", comp.id, ep.variable))
}

/// The conversion a connection lacks, when W001 applies to it.
fn missing_transform(
    scenario: &Scenario,
    catalog: &Catalog,
    c: &Connection,
) -> Option<ConversionFn> {
    if c.transform.is_some() {
        return None;
    }
    let src = resolve(scenario, catalog, &c.source).ok()?;
    let tgt = resolve(scenario, catalog, &c.target).ok()?;
    if src.unit.is_identical(&tgt.unit) {
        return None;
    }
    units::conversion(&src.unit, &tgt.unit).ok()
}

fn range_text((lo, hi): (f64, f64)) -> String {
    format!("[{}, {}]", format_number(lo), format_number(hi))
}

fn check_connection(
    scenario: &Scenario,
    catalog: &Catalog,
    c: &Connection,
    out: &mut Vec<Finding>,
) {
    let loc = c.label();
    let (src, tgt) = match (
        resolve(scenario, catalog, &c.source),
        resolve(scenario, catalog, &c.target),
    ) {
        (Ok(s), Ok(t)) => (s, t),
        (s, t) => {
            for e in [s.err(), t.err()].into_iter().flatten() {
                out.push(Finding::new(Code::E005, &loc, e));
            }
            return;
        }
    };
    if src.causality != Causality::Output {
        out.push(Finding::new(
            Code::E001,
            &loc,
            format!(
                "source {} has causality {}, expected output",
                c.source, src.causality
            ),
        ));
    }
    if tgt.causality != Causality::Input {
        out.push(Finding::new(
            Code::E002,
            &loc,
            format!(
                "target {} has causality {}, expected input",
                c.target, tgt.causality
            ),
        ));
    }
    if c.time_shifted && src.start.is_none() {
        out.push(Finding::new(
            Code::W005,
            &loc,
            format!(
                "time-shifted edge but source {} declares no start value",
                c.source
            ),
        ));
    }
    let Ok(expected) = units::conversion(&src.unit, &tgt.unit) else {
        out.push(Finding::new(
            Code::E003,
            &loc,
            format!(
                "dimension mismatch: {} is {} ({}), {} is {} ({})",
                c.source,
                src.unit.symbol,
                src.unit.dimension,
                c.target,
                tgt.unit.symbol,
                tgt.unit.dimension
            ),
        ));
        return;
    };
    match c.transform {
        None if !src.unit.is_identical(&tgt.unit) => out.push(Finding::new(
            Code::W001,
            &loc,
            format!(
                "unit {} -> {} without transform; required conversion factor {}{}",
                src.unit.symbol,
                tgt.unit.symbol,
                format_number(expected.factor),
                if expected.offset != 0.0 {
                    format!(", offset {}", format_number(expected.offset))
                } else {
                    String::new()
                }
            ),
        )),
        Some(t) if !t.approx_eq(&expected, TRANSFORM_TOLERANCE) => out.push(Finding::new(
            Code::E007,
            &loc,
            format!(
                "declared transform {t} contradicts {} -> {} conversion {expected}",
                src.unit.symbol, tgt.unit.symbol
            ),
        )),
        _ => {}
    }
    if let (Some(sr), Some(tr)) = (src.range(), tgt.range()) {
        let (a, b) = (expected.apply(sr.0), expected.apply(sr.1));
        let (lo, hi) = (a.min(b), a.max(b));
        let msg = |what: &str| {
            format!(
                "source range {} {} is {what} target range {} {}",
                range_text((lo, hi)),
                tgt.unit.symbol,
                range_text(tr),
                tgt.unit.symbol
            )
        };
        if hi < tr.0 || lo > tr.1 {
            out.push(Finding::new(Code::E004, &loc, msg("disjoint from")));
        } else if lo < tr.0 || hi > tr.1 {
            out.push(Finding::new(Code::W002, &loc, msg("only partially inside")));
        }
    }
}

/// Entities on a cycle of non-time-shifted connections: one set per strongly
/// connected component with more than one entity or a self-loop.
pub fn instantaneous_cycles(scenario: &Scenario) -> Vec<Vec<String>> {
    let mut graph: DiGraphMap<&str, ()> = DiGraphMap::new();
    for e in &scenario.entities {
        graph.add_node(&e.id);
    }
    for c in scenario.connections.iter().filter(|c| !c.time_shifted) {
        graph.add_edge(&c.source.entity, &c.target.entity, ());
    }
    let mut cycles: Vec<Vec<String>> = tarjan_scc(&graph)
        .into_iter()
        .filter(|scc| scc.len() > 1 || graph.contains_edge(scc[0], scc[0]))
        .map(|scc| {
            let mut ids: Vec<String> = scc.into_iter().map(str::to_string).collect();
            ids.sort();
            ids
        })
        .collect();
    cycles.sort();
    cycles
}

fn check_coverage(
    scenario: &Scenario,
    catalog: &Catalog,
    model: &InfoModel,
    taxonomy: &Taxonomy,
    out: &mut Vec<Finding>,
) {
    let matches = |attr: &crate::info_model::Attribute, v: &VariableSpec| {
        taxonomy.related(&attr.topic, &v.topic) && units::same_dimension(&attr.unit, &v.unit)
    };
    let variables_of = |entity: &str| {
        scenario
            .component_of(entity)
            .and_then(|c| catalog.component(c))
            .map(|c| c.variables.as_slice())
            .unwrap_or_default()
    };
    for flow in model.required_flows() {
        let Some(attr) = model.attribute(&flow.attribute) else {
            continue;
        };
        let realized = match flow.role {
            Role::Derived => scenario.entities.iter().any(|e| {
                variables_of(&e.id)
                    .iter()
                    .any(|v| v.causality == Causality::Output && matches(attr, v))
            }),
            Role::Input => {
                let connected = scenario.connections.iter().any(|c| {
                    variables_of(&c.target.entity).iter().any(|v| {
                        v.name == c.target.variable
                            && v.causality == Causality::Input
                            && matches(attr, v)
                    })
                });
                let parametrized = scenario.simulators.iter().any(|s| {
                    catalog.component(&s.component).is_some_and(|comp| {
                        s.params.keys().any(|p| {
                            comp.variable(p)
                                .is_some_and(|v| v.causality.is_parameter() && matches(attr, v))
                        })
                    })
                });
                connected || parametrized
            }
        };
        if !realized {
            out.push(Finding::new(
                Code::W004,
                flow.attribute.to_string(),
                format!(
                    "{} attribute ({}, topic {}) needed by transform {} for criterion {} is not realized by the scenario",
                    flow.role.as_str(),
                    attr.unit.symbol,
                    attr.topic,
                    flow.transform,
                    flow.criterion
                ),
            ));
        }
    }
}

/// Applies every registered check. W004 runs only when a model is given;
/// without a taxonomy topics match only when equal.
pub fn validate(
    scenario: &Scenario,
    catalog: &Catalog,
    model: Option<&InfoModel>,
    taxonomy: Option<&Taxonomy>,
) -> ValidationReport {
    let mut out = Vec::new();
    for s in &scenario.simulators {
        match catalog.component(&s.component) {
            None => out.push(Finding::new(
                Code::E005,
                &s.id,
                format!(
                    "simulator {} instantiates unknown component {:?}",
                    s.id, s.component
                ),
            )),
            Some(comp) => {
                for p in s.params.keys().filter(|p| comp.variable(p).is_none()) {
                    out.push(Finding::new(
                        Code::E005,
                        format!("{}.{p}", s.id),
                        format!("param {p} names no variable of component {}", comp.id),
                    ));
                }
            }
        }
    }
    for e in &scenario.entities {
        if scenario.simulator(&e.simulator).is_none() {
            out.push(Finding::new(
                Code::E005,
                &e.id,
                format!(
                    "entity {} runs on unknown simulator {:?}",
                    e.id, e.simulator
                ),
            ));
        }
    }
    for c in &scenario.connections {
        check_connection(scenario, catalog, c, &mut out);
    }
    for cycle in instantaneous_cycles(scenario) {
        out.push(Finding::new(
            Code::E006,
            cycle.join(","),
            format!(
                "entities {} form a cycle without a time-shifted connection",
                cycle.join(", ")
            ),
        ));
    }
    let connected: BTreeSet<&Endpoint> = scenario.connections.iter().map(|c| &c.target).collect();
    for e in &scenario.entities {
        let Some(comp) = scenario
            .component_of(&e.id)
            .and_then(|c| catalog.component(c))
        else {
            continue;
        };
        for v in comp
            .variables
            .iter()
            .filter(|v| v.causality == Causality::Input)
        {
            let ep = Endpoint::new(&e.id, &v.name);
            if !connected.contains(&ep) {
                out.push(Finding::new(
                    Code::W003,
                    ep.to_string(),
                    format!("input {ep} has no incoming connection"),
                ));
            }
        }
    }
    if let Some(model) = model {
        let empty = Taxonomy::new();
        check_coverage(
            scenario,
            catalog,
            model,
            taxonomy.unwrap_or(&empty),
            &mut out,
        );
    }
    ValidationReport::new(out)
}

/// Attaches the derived conversion to every connection W001 flags. Nothing
/// else changes; dimension mismatches stay as they are.
pub fn autofix_units(scenario: &Scenario, catalog: &Catalog) -> Scenario {
    let mut fixed = scenario.clone();
    for c in &mut fixed.connections {
        if let Some(conv) = missing_transform(scenario, catalog, c) {
            c.transform = Some(conv);
        }
    }
    fixed
}
