//! Single-fault mutants of the pv-house-grid fixture.

use std::collections::BTreeSet;
use std::path::Path;

use coplan::catalog::Catalog;
use coplan::scenario::{Endpoint, Scenario};
use coplan::units::ConversionFn;
use coplan::validator::{autofix_units, validate, Code, ValidationReport};

use super::{catalog, cli, fixture, model, scenario, taxonomy, Check};

pub const CONN_PV: &str = "connect pv1.p_gen -> node1.p_node transform=1000";
pub const CONN_LOAD: &str = "connect house1.p_load -> node1.p_load";
pub const GRID_LOAD_RANGE: &str = "topic=load min=-1000 max=1000";

#[derive(Debug, Clone)]
pub struct Inputs {
    pub catalog: String,
    pub model: String,
    pub scenario: String,
}

impl Inputs {
    pub fn baseline() -> Self {
        Inputs {
            catalog: fixture("cpes-3.catalog"),
            model: fixture("neds-mini.model"),
            scenario: fixture("pv-house-grid.scenario"),
        }
    }

    pub fn catalog(&self) -> Catalog {
        catalog(&self.catalog)
    }

    pub fn load(&self) -> Scenario {
        scenario(&self.scenario, &self.catalog())
    }

    pub fn report(&self) -> ValidationReport {
        self.report_for(&self.load())
    }

    pub fn report_for(&self, s: &Scenario) -> ValidationReport {
        validate(
            s,
            &self.catalog(),
            Some(&model(&self.model)),
            Some(&taxonomy()),
        )
    }

    /// Writes the three inputs plus the taxonomy into `dir`.
    pub fn write(&self, dir: &Path) {
        std::fs::write(dir.join("c.catalog"), &self.catalog).unwrap();
        std::fs::write(dir.join("m.model"), &self.model).unwrap();
        std::fs::write(dir.join("s.scenario"), &self.scenario).unwrap();
        std::fs::write(dir.join("taxonomy.txt"), fixture("taxonomy.txt")).unwrap();
    }

    pub fn cli_args(dir: &Path) -> Vec<String> {
        let p = |n: &str| dir.join(n).to_string_lossy().into_owned();
        vec![
            "--catalog".into(),
            p("c.catalog"),
            "--info-model".into(),
            p("m.model"),
            "--scenario".into(),
            p("s.scenario"),
            "--taxonomy".into(),
            p("taxonomy.txt"),
            "--out-dir".into(),
            p("out"),
        ]
    }
}

fn replace(text: &str, from: &str, to: &str) -> String {
    assert!(text.contains(from), "fixture lacks {from:?}");
    text.replacen(from, to, 1)
}

pub enum Mutant {
    /// The loader accepts the edited text.
    Text(Inputs),
    /// Only reachable by editing the loaded scenario.
    Struct(Inputs, Scenario),
}

pub fn text_mutant(code: Code) -> Inputs {
    let mut m = Inputs::baseline();
    match code {
        Code::E001 => {
            m.scenario = replace(
                &m.scenario,
                "pv1.p_gen -> node1.p_node",
                "pv1.p_peak -> node1.p_node",
            )
        }
        Code::E002 => m.scenario.push_str("connect pv1.p_gen -> house1.p_load\n"),
        Code::E003 => {
            m.scenario = replace(
                &m.scenario,
                "entity pv1 ",
                "entity pv2 simulator=pv model=generation\nentity pv1 ",
            );
            m.scenario.push_str("connect pv2.p_gen -> house1.price\n");
        }
        Code::E004 => m.catalog = replace(&m.catalog, GRID_LOAD_RANGE, "topic=load min=50 max=100"),
        Code::E006 => {
            m.scenario = replace(
                &m.scenario,
                CONN_LOAD,
                "connect node1.p_slack -> node1.p_load",
            )
        }
        Code::E007 => {
            m.scenario = replace(
                &m.scenario,
                CONN_PV,
                "connect pv1.p_gen -> node1.p_node transform=100",
            )
        }
        Code::W001 => {
            m.scenario = replace(&m.scenario, CONN_PV, "connect pv1.p_gen -> node1.p_node")
        }
        Code::W002 => m.catalog = replace(&m.catalog, GRID_LOAD_RANGE, "topic=load min=20 max=100"),
        Code::W003 => m.scenario = replace(&m.scenario, &format!("{CONN_LOAD}\n"), ""),
        Code::W004 => {
            m.model = replace(
                &m.model,
                "    criterion total_load unit=kW\n",
                "    criterion total_load unit=kW\n    criterion mean_price unit=EUR/kWh\n",
            );
            m.model.push_str(
                "  transform t_price kind=mean inputs=household.price output=mean_price\n",
            );
        }
        Code::W005 => {
            m.scenario = replace(&m.scenario, CONN_PV, &format!("{CONN_PV} time_shifted"))
        }
        Code::E005 => unreachable!("dangling references are rejected by the loader"),
    }
    m
}

pub fn mutant(code: Code) -> Mutant {
    if code == Code::E005 {
        let inputs = Inputs::baseline();
        let mut s = inputs.load();
        let conn = s
            .connections
            .iter_mut()
            .find(|c| c.label() == "pv1.p_gen->node1.p_node")
            .expect("fixture connection");
        conn.source = Endpoint::new("ghost", "p_gen");
        return Mutant::Struct(inputs, s);
    }
    Mutant::Text(text_mutant(code))
}

fn keyed(report: &ValidationReport) -> BTreeSet<(Code, String)> {
    report
        .findings
        .iter()
        .map(|f| (f.code, f.location.clone()))
        .collect()
}

/// Codes of findings present in `mutant` but not in `baseline`.
pub fn introduced(baseline: &ValidationReport, mutant: &ValidationReport) -> BTreeSet<Code> {
    let before = keyed(baseline);
    keyed(mutant)
        .into_iter()
        .filter(|k| !before.contains(k))
        .map(|k| k.0)
        .collect()
}

fn expected_status(code: Code) -> i32 {
    if code.to_string().starts_with('E') {
        coplan::cli::EXIT_FAILED
    } else {
        coplan::cli::EXIT_OK
    }
}

pub fn criterion_5() -> Check {
    let base = Inputs::baseline();
    let baseline = base.report();
    if !baseline.passed {
        return Err(format!("clean fixture fails:\n{}", baseline.to_lines()));
    }
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let status = |inputs: &Inputs, name: &str| -> i32 {
        let dir = tmp.path().join(name);
        std::fs::create_dir_all(&dir).unwrap();
        inputs.write(&dir);
        let mut args = Inputs::cli_args(&dir);
        args.push("validate".into());
        cli(&args.iter().map(String::as_str).collect::<Vec<_>>()).0
    };
    if status(&base, "baseline") != coplan::cli::EXIT_OK {
        return Err("clean fixture: validate exit status is not 0".into());
    }
    for code in Code::ALL {
        let (report, exit) = match mutant(code) {
            Mutant::Text(inputs) => (inputs.report(), Some(status(&inputs, &code.to_string()))),
            Mutant::Struct(inputs, s) => (inputs.report_for(&s), None),
        };
        let got = introduced(&baseline, &report);
        if got != BTreeSet::from([code]) {
            return Err(format!(
                "{code} mutant introduced {got:?}\n{}",
                report.to_lines()
            ));
        }
        if report.passed == code.to_string().starts_with('E') {
            return Err(format!("{code} mutant: passed={}", report.passed));
        }
        if let Some(exit) = exit {
            if exit != expected_status(code) {
                return Err(format!(
                    "{code} mutant: validate exited {exit}, expected {}",
                    expected_status(code)
                ));
            }
        }
    }
    // A dangling reference in text is an input error, not a finding.
    let mut dangling = Inputs::baseline();
    dangling.scenario = replace(
        &dangling.scenario,
        "pv1.p_gen -> node1.p_node",
        "ghost.p_gen -> node1.p_node",
    );
    let exit = status(&dangling, "dangling");
    if exit != coplan::cli::EXIT_USAGE {
        return Err(format!(
            "dangling reference in text: exit {exit}, expected 2"
        ));
    }
    Ok("12 mutants, each introduces exactly its code; clean fixture passes; exits 0/1/2 as specified".into())
}

pub fn criterion_8() -> Check {
    let inputs = text_mutant(Code::W001);
    let cat = inputs.catalog();
    let broken = inputs.load();
    let fixed = autofix_units(&broken, &cat);
    let conn = fixed
        .connections
        .iter()
        .find(|c| c.label() == "pv1.p_gen->node1.p_node")
        .ok_or("connection vanished")?;
    if conn.transform != Some(ConversionFn::new(1000.0, 0.0)) {
        return Err(format!(
            "inserted {:?}, expected factor 1000",
            conn.transform
        ));
    }
    let report = inputs.report_for(&fixed);
    if report.codes().contains(&Code::W001) {
        return Err(format!("W001 after autofix:\n{}", report.to_lines()));
    }
    if autofix_units(&fixed, &cat) != fixed {
        return Err("autofix is not idempotent".into());
    }
    // Same through the command line, reloading the written file.
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    inputs.write(tmp.path());
    let mut args = Inputs::cli_args(tmp.path());
    args.push("autofix".into());
    let (status, _, err) = cli(&args.iter().map(String::as_str).collect::<Vec<_>>());
    if status != 0 {
        return Err(format!("autofix exited {status}: {err}"));
    }
    let written = std::fs::read_to_string(tmp.path().join("out/autofixed.scenario"))
        .map_err(|e| e.to_string())?;
    if scenario(&written, &cat) != fixed {
        return Err(format!(
            "CLI output differs from library autofix:\n{written}"
        ));
    }
    Ok("inserted factor 1000 kW->W, no W001 on revalidation, idempotent".into())
}
