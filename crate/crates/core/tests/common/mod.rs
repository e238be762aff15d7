#![allow(dead_code)]

pub mod cycles;
pub mod demo;
pub mod meta;
pub mod mutants;
pub mod recommend;
pub mod store_oracle;
pub mod units_oracle;

use std::path::{Path, PathBuf};

use coplan::catalog::Catalog;
use coplan::info_model::InfoModel;
use coplan::scenario::Scenario;
use coplan::taxonomy::Taxonomy;
use coplan::units::UnitTable;
use rand::rngs::StdRng;
use rand::SeedableRng;

/// Outcome of one acceptance check: a short detail on success, the reason on failure.
pub type Check = Result<String, String>;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixtures().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn catalog(text: &str) -> Catalog {
    Catalog::parse(text, UnitTable::builtin()).expect("catalog parses")
}

pub fn model(text: &str) -> InfoModel {
    InfoModel::parse(text, UnitTable::builtin()).expect("model parses")
}

pub fn taxonomy() -> Taxonomy {
    Taxonomy::parse(&fixture("taxonomy.txt")).expect("taxonomy parses")
}

pub fn scenario(text: &str, catalog: &Catalog) -> Scenario {
    Scenario::parse(text, catalog).expect("scenario parses")
}

/// Runs the command line in-process; returns (status, stdout, stderr).
pub fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("coplan").chain(args.iter().copied());
    let status = coplan::cli::run(argv, &mut out, &mut err);
    (
        status,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    a == b || (a - b).abs() <= rel * a.abs().max(b.abs())
}

pub fn ensure(cond: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(message())
    }
}
