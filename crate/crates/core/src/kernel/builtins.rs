//! Toy models the kernel can execute.
//!
//! A catalog component becomes executable by naming a kind in
//! `technical builtin=`. Parameters come from the simulator instance and fall
//! back to the catalog start value.
//!
//! | kind | parameters | behaviour |
//! |---|---|---|
//! | `constant` | `value` | every output is `value` |
//! | `timeseries_source` | `file`, `column` | every output follows the CSV column |
//! | `scale` | `gain` | output = gain * single input |
//! | `adder` | | output = sum of connected inputs |
//! | `recorder` | | connected inputs become samples |
//! | `unit_transform` | `factor`, `offset` (default 0) | output = factor * input + offset |
//! | `aggregator` | `op` | output = op over connected inputs, by input name |

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use super::timeseries::TimeSeries;
use super::KernelError;
use crate::catalog::{Causality, ComponentRecord};
use crate::info_model::AggregateOp;
use crate::scenario::{ParamValue, SimulatorInstance};
use crate::units::ConversionFn;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinKind {
    Constant,
    TimeseriesSource,
    Scale,
    Adder,
    Recorder,
    UnitTransform,
    Aggregator,
}

impl BuiltinKind {
    pub const ALL: [BuiltinKind; 7] = [
        BuiltinKind::Constant,
        BuiltinKind::TimeseriesSource,
        BuiltinKind::Scale,
        BuiltinKind::Adder,
        BuiltinKind::Recorder,
        BuiltinKind::UnitTransform,
        BuiltinKind::Aggregator,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BuiltinKind::Constant => "constant",
            BuiltinKind::TimeseriesSource => "timeseries_source",
            BuiltinKind::Scale => "scale",
            BuiltinKind::Adder => "adder",
            BuiltinKind::Recorder => "recorder",
            BuiltinKind::UnitTransform => "unit_transform",
            BuiltinKind::Aggregator => "aggregator",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for BuiltinKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Constant(f64),
    Timeseries(TimeSeries),
    Scale(f64),
    Adder,
    Recorder,
    UnitTransform(ConversionFn),
    Aggregator(AggregateOp),
}

impl Model {
    /// Instantiates the builtin behind `component` for one entity.
    /// `connected` lists the entity's connected input names, sorted.
    pub fn build(
        sim: &SimulatorInstance,
        component: &ComponentRecord,
        connected: &[&str],
        base_dir: &Path,
    ) -> Result<Self, KernelError> {
        let kind_name =
            component
                .technical
                .builtin
                .as_deref()
                .ok_or_else(|| KernelError::Unmapped {
                    simulator: sim.id.clone(),
                    component: component.id.clone(),
                    kind: None,
                })?;
        let kind = BuiltinKind::parse(kind_name).ok_or_else(|| KernelError::Unmapped {
            simulator: sim.id.clone(),
            component: component.id.clone(),
            kind: Some(kind_name.to_string()),
        })?;
        let bad = |message: String| KernelError::Model {
            simulator: sim.id.clone(),
            message,
        };
        let param = |name: &str| -> Option<ParamValue> {
            sim.params.get(name).cloned().or_else(|| {
                component
                    .variable(name)
                    .and_then(|v| v.start)
                    .map(ParamValue::Number)
            })
        };
        let number = |name: &str| -> Result<f64, KernelError> {
            match param(name) {
                Some(ParamValue::Number(v)) => Ok(v),
                Some(ParamValue::Text(t)) => Err(bad(format!(
                    "{kind} parameter {name}={t:?} is not a number"
                ))),
                None => Err(bad(format!("{kind} needs parameter {name}"))),
            }
        };
        let text = |name: &str| -> Result<String, KernelError> {
            param(name)
                .map(|p| p.to_string())
                .ok_or_else(|| bad(format!("{kind} needs parameter {name}")))
        };
        let inputs = component
            .variables
            .iter()
            .filter(|v| v.causality == Causality::Input)
            .count();
        let single_input = || {
            if inputs == 1 {
                Ok(())
            } else {
                Err(bad(format!(
                    "{kind} needs exactly one input variable, component {} has {inputs}",
                    component.id
                )))
            }
        };
        Ok(match kind {
            BuiltinKind::Constant => Model::Constant(number("value")?),
            BuiltinKind::TimeseriesSource => {
                let file = text("file")?;
                let path = base_dir.join(file);
                Model::Timeseries(TimeSeries::load(&path, &text("column")?)?)
            }
            BuiltinKind::Scale => {
                single_input()?;
                Model::Scale(number("gain")?)
            }
            BuiltinKind::Adder => Model::Adder,
            BuiltinKind::Recorder => Model::Recorder,
            BuiltinKind::UnitTransform => {
                single_input()?;
                let offset = if param("offset").is_some() {
                    number("offset")?
                } else {
                    0.0
                };
                Model::UnitTransform(ConversionFn::new(number("factor")?, offset))
            }
            BuiltinKind::Aggregator => {
                let spec = text("op")?;
                let op = AggregateOp::parse(&spec)
                    .ok_or_else(|| bad(format!("unknown aggregation {spec:?}")))?;
                if let AggregateOp::WeightedSum(w) = &op {
                    if w.len() != connected.len() {
                        return Err(bad(format!(
                            "{} weights for {} connected inputs",
                            w.len(),
                            connected.len()
                        )));
                    }
                }
                if connected.is_empty() {
                    return Err(bad("aggregator has no connected inputs".into()));
                }
                Model::Aggregator(op)
            }
        })
    }

    /// Output value for this step; `None` for models without outputs.
    /// `inputs` holds every declared input; `connected` the wired ones, sorted.
    pub fn step(&self, t: i64, inputs: &BTreeMap<String, f64>, connected: &[&str]) -> Option<f64> {
        let wired = || connected.iter().map(|n| inputs[*n]);
        let single = || inputs.values().next().copied().unwrap_or(0.0);
        match self {
            Model::Constant(v) => Some(*v),
            Model::Timeseries(ts) => Some(ts.at(t)),
            Model::Scale(g) => Some(g * single()),
            Model::Adder => Some(wired().sum()),
            Model::Recorder => None,
            Model::UnitTransform(c) => Some(c.apply(single())),
            Model::Aggregator(op) => op.reduce(&wired().collect::<Vec<_>>()),
        }
    }
}
