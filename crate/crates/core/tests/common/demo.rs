//! The demo pipeline driven through the command line.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use coplan::kernel::{results_from_triples, Sample};
use coplan::triple_store;
use coplan::units::UnitTable;

use super::{cli, fixtures, rel_close, Check};

pub const DURATION: u64 = 3600;

/// Copies the demo inputs and the taxonomy into a fresh directory.
pub fn stage() -> tempfile::TempDir {
    let tmp = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(fixtures().join("demo")).unwrap() {
        let path = entry.unwrap().path();
        std::fs::copy(&path, tmp.path().join(path.file_name().unwrap())).unwrap();
    }
    std::fs::copy(
        fixtures().join("taxonomy.txt"),
        tmp.path().join("taxonomy.txt"),
    )
    .unwrap();
    tmp
}

pub struct Pipeline {
    pub dir: PathBuf,
    pub elapsed: Duration,
    pub log: Vec<String>,
}

fn step(dir: &Path, args: &[&str], expect: i32, log: &mut Vec<String>) -> Result<String, String> {
    let d = |n: &str| dir.join(n).to_string_lossy().into_owned();
    let mut argv: Vec<String> = vec!["--out-dir".into(), d("")];
    argv.extend(
        args.iter()
            .map(|a| a.strip_prefix('@').map(d).unwrap_or_else(|| a.to_string())),
    );
    let (status, out, err) = cli(&argv.iter().map(String::as_str).collect::<Vec<_>>());
    log.push(format!("{} -> {status}", args.join(" ")));
    if status != expect {
        return Err(format!(
            "`{}` exited {status}, expected {expect}\n{out}{err}",
            args.join(" ")
        ));
    }
    Ok(out)
}

/// ingest, recommend, validate, autofix, revalidate, run. `@name` is a path in `dir`.
pub fn run_pipeline(dir: &Path) -> Result<Pipeline, String> {
    let start = Instant::now();
    let mut log = Vec::new();
    let files = [
        "--catalog",
        "@demo.catalog",
        "--info-model",
        "@demo.model",
        "--taxonomy",
        "@taxonomy.txt",
    ];
    step(
        dir,
        &[
            "ingest",
            "@demo.catalog",
            "@demo.model",
            "@demo.scenario",
            "@taxonomy.txt",
        ],
        0,
        &mut log,
    )?;
    let mut args = files.to_vec();
    args.extend(["recommend", "generation.p"]);
    step(dir, &args, 0, &mut log)?;
    let recs =
        std::fs::read_to_string(dir.join("recommendations.csv")).map_err(|e| e.to_string())?;
    if !recs.lines().any(|l| l.starts_with("1,PVProfile,p,")) {
        return Err(format!("unexpected recommendation order:\n{recs}"));
    }

    let mut args = files.to_vec();
    args.extend(["--scenario", "@demo.scenario", "validate"]);
    step(dir, &args, 0, &mut log)?;
    let report = std::fs::read_to_string(dir.join("validation.txt")).map_err(|e| e.to_string())?;
    if !report.contains("W001") {
        return Err(format!(
            "demo should carry a missing-transform warning:\n{report}"
        ));
    }
    let mut args = files.to_vec();
    args.extend(["--scenario", "@demo.scenario", "autofix"]);
    step(dir, &args, 0, &mut log)?;
    let mut args = files.to_vec();
    args.extend(["--scenario", "@autofixed.scenario", "validate"]);
    step(dir, &args, 0, &mut log)?;
    let report = std::fs::read_to_string(dir.join("validation.txt")).map_err(|e| e.to_string())?;
    if report.contains("W001") {
        return Err(format!("W001 left after autofix:\n{report}"));
    }
    let duration = DURATION.to_string();
    let mut args = files.to_vec();
    args.extend([
        "--scenario",
        "@autofixed.scenario",
        "run",
        "--duration",
        &duration,
    ]);
    step(dir, &args, 0, &mut log)?;
    Ok(Pipeline {
        dir: dir.to_path_buf(),
        elapsed: start.elapsed(),
        log,
    })
}

pub fn read_samples(csv: &str) -> Result<Vec<Sample>, String> {
    let mut lines = csv.lines();
    if lines.next() != Some("entity,variable,time_s,value") {
        return Err("samples.csv header".into());
    }
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 4 {
                return Err(format!("bad row {l:?}"));
            }
            Ok(Sample {
                entity: f[0].into(),
                variable: f[1].into(),
                time_s: f[2].parse().map_err(|_| format!("bad time in {l:?}"))?,
                value: f[3].parse().map_err(|_| format!("bad value in {l:?}"))?,
            })
        })
        .collect()
}

pub fn read_criteria(text: &str) -> Result<BTreeMap<String, f64>, String> {
    text.lines()
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            match f.as_slice() {
                [name, value, _unit] => Ok((
                    name.to_string(),
                    value.parse().map_err(|_| format!("bad value in {l:?}"))?,
                )),
                _ => Err(format!("bad criteria line {l:?}")),
            }
        })
        .collect()
}

/// The demo criteria recomputed from raw samples. Every recorded series is in kW.
pub fn recompute(samples: &[Sample]) -> BTreeMap<String, f64> {
    let series = |e: &str, v: &str| -> Vec<f64> {
        let mut rows: Vec<&Sample> = samples
            .iter()
            .filter(|s| s.entity == e && s.variable == v)
            .collect();
        rows.sort_by_key(|s| s.time_s);
        rows.iter().map(|s| s.value).collect()
    };
    let generation = series("gen_probe", "p");
    let load = series("house_probe", "load");
    let net = series("node_probe", "p_net");
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let mut max = f64::NEG_INFINITY;
    for x in &generation {
        if *x > max {
            max = *x;
        }
    }
    let mut sum = 0.0;
    for x in generation.iter().chain(&load) {
        sum += x;
    }
    let last_net = *net.last().unwrap();
    BTreeMap::from([
        ("peak_generation".to_string(), max * 1000.0),
        ("mean_load".to_string(), mean(&load)),
        ("final_net".to_string(), last_net),
        ("energy_sum".to_string(), sum),
        (
            "mix".to_string(),
            0.25 * mean(&generation) + 0.75 * mean(&load),
        ),
        ("cost_index".to_string(), 0.3 * last_net + 5.0),
    ])
}

pub fn criterion_9() -> Check {
    let tmp = stage();
    let p = run_pipeline(tmp.path())?;
    if p.elapsed >= Duration::from_secs(10) {
        return Err(format!("pipeline took {:?}", p.elapsed));
    }
    let read = |n: &str| std::fs::read_to_string(p.dir.join(n)).map_err(|e| format!("{n}: {e}"));
    let samples = read_samples(&read("samples.csv")?)?;
    let expected_rows = 3 * (DURATION / 60) as usize;
    if samples.len() != expected_rows {
        return Err(format!(
            "{} samples, expected {expected_rows}",
            samples.len()
        ));
    }
    let criteria = read_criteria(&read("criteria.txt")?)?;
    let oracle = recompute(&samples);
    if criteria.keys().ne(oracle.keys()) {
        return Err(format!(
            "criteria {:?}, oracle {:?}",
            criteria.keys(),
            oracle.keys()
        ));
    }
    for (name, want) in &oracle {
        let got = criteria[name];
        if !rel_close(got, *want, 1e-9) {
            return Err(format!("{name}: {got}, recomputed {want}"));
        }
    }

    let nt = read("results.nt")?;
    let store = triple_store::parse(&nt).map_err(|e| e.to_string())?;
    if triple_store::serialize(&store) != nt {
        return Err("results.nt does not reserialize to the same bytes".into());
    }
    let back = results_from_triples(&store, UnitTable::builtin()).map_err(|e| e.to_string())?;
    if back.samples != samples {
        return Err("samples decoded from results.nt differ from samples.csv".into());
    }
    if back.criteria != criteria {
        return Err(format!(
            "criteria decoded from results.nt {:?} differ",
            back.criteria
        ));
    }
    if back.series.len() != 3 {
        return Err(format!("{} series in results.nt", back.series.len()));
    }
    Ok(format!(
        "{} steps in {:?}; {} samples; 6 criteria match recomputation",
        p.log.len(),
        p.elapsed,
        samples.len()
    ))
}
