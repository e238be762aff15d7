//! Planning toolkit for co-simulation of cyber-physical energy systems.
//!
//! High-level scenarios are described as an information model, simulation
//! components as a catalog with FMI-style variable declarations. The crate
//! recommends catalog variables for model attributes, validates concrete
//! scenarios, exports everything as N-Triples and runs scenarios built from
//! built-in models on a fixed-step kernel.

pub mod catalog;
pub mod cli;
pub mod info_model;
pub mod kernel;
pub mod recommender;
pub mod scenario;
pub mod taxonomy;
pub mod text;
pub mod triple_store;
pub mod units;
pub mod validator;
pub mod vocab;
