//! Meta description export checks.

use std::collections::BTreeSet;

use coplan::catalog::{export_meta, Catalog};
use coplan::units::UnitTable;
use serde_json::Value;

use super::{catalog, cli, fixture, fixtures, rng, Check};

const FIXTURE_CATALOGS: [&str; 2] = ["cpes-3.catalog", "demo/demo.catalog"];

/// Expected (params, attrs) for components whose variables are known by hand.
const KNOWN: &[(&str, &[&str], &[&str])] = &[
    ("PVSim", &["p_peak"], &["p_gen"]),
    ("HouseholdSim", &[], &["p_load", "price"]),
    ("GridSim", &[], &["p_load", "p_node", "p_slack", "voltage"]),
    ("PVProfile", &["column", "file"], &["p"]),
    ("NetAggregator", &["op"], &["gen", "load", "p_net"]),
    ("NodeProbe", &[], &["p_net"]),
];

fn names(v: &Value) -> BTreeSet<String> {
    match v {
        Value::Array(a) => a
            .iter()
            .filter_map(|x| x.as_str().map(str::to_string))
            .collect(),
        Value::Object(o) => o.keys().cloned().collect(),
        _ => BTreeSet::new(),
    }
}

pub fn check_component(cat: &Catalog, id: &str) -> Result<(), String> {
    let comp = cat
        .component(id)
        .ok_or_else(|| format!("no component {id}"))?;
    let text = export_meta(comp);
    if export_meta(comp) != text {
        return Err(format!("{id}: two exports differ"));
    }
    let json: Value = serde_json::from_str(&text).map_err(|e| format!("{id}: {e}"))?;
    let models = json["models"]
        .as_object()
        .ok_or(format!("{id}: no models object"))?;
    if models.len() != 1 || !models.contains_key(id) {
        return Err(format!(
            "{id}: models keys {:?}",
            models.keys().collect::<Vec<_>>()
        ));
    }
    let m = &models[id];
    let params = names(&m["params"]);
    let attrs = names(&m["attrs"]);
    let by_causality = |wanted: &[&str]| -> BTreeSet<String> {
        comp.variables
            .iter()
            .filter(|v| wanted.contains(&v.causality.to_string().as_str()))
            .map(|v| v.name.clone())
            .collect()
    };
    if params != by_causality(&["parameter", "calculatedParameter"]) {
        return Err(format!("{id}: params {params:?}"));
    }
    if attrs != by_causality(&["input", "output"]) {
        return Err(format!("{id}: attrs {attrs:?}"));
    }
    let all: BTreeSet<String> = comp.variables.iter().map(|v| v.name.clone()).collect();
    if !params.is_disjoint(&attrs) || params.union(&attrs).cloned().collect::<BTreeSet<_>>() != all
    {
        return Err(format!(
            "{id}: params and attrs do not partition the variables"
        ));
    }
    for name in &attrs {
        let v = comp.variable(name).unwrap();
        let a = &m["attrs"][name];
        if a["unit"] != v.unit.symbol.as_str() {
            return Err(format!("{id}.{name}: unit {}", a["unit"]));
        }
        for (key, bound) in [("min", v.min), ("max", v.max)] {
            let got = a.get(key).and_then(Value::as_f64);
            if got != bound {
                return Err(format!("{id}.{name}: {key} {got:?}, catalog {bound:?}"));
            }
        }
    }
    if let Some((_, p, a)) = KNOWN.iter().find(|k| k.0 == id) {
        let want = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
        if params != want(p) || attrs != want(a) {
            return Err(format!(
                "{id}: params {params:?} attrs {attrs:?} differ from the fixture"
            ));
        }
    }
    Ok(())
}

pub fn criterion_10() -> Check {
    let mut checked = 0;
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut r = rng(10);
    for file in FIXTURE_CATALOGS {
        let text = fixture(file);
        let cat = catalog(&text);
        let permuted = catalog(&super::recommend::permute_catalog(&text, &mut r));
        let decoded = Catalog::from_triples(
            &cat.to_triples().into_iter().collect(),
            UnitTable::builtin(),
        )
        .map_err(|e| e.to_string())?;
        let out = tmp.path().join(file.replace('/', "_"));
        let out = out.to_string_lossy();
        let path = fixtures().join(file);
        let (status, _, err) = cli(&[
            "--catalog",
            &path.to_string_lossy(),
            "--out-dir",
            &out,
            "export-meta",
        ]);
        if status != 0 {
            return Err(format!("export-meta exited {status}: {err}"));
        }
        for comp in &cat.components {
            check_component(&cat, &comp.id)?;
            let bytes = export_meta(comp);
            for (what, other) in [("permuted", &permuted), ("decoded from triples", &decoded)] {
                if other.component(&comp.id).map(export_meta).as_deref() != Some(bytes.as_str()) {
                    return Err(format!(
                        "{}: export differs for the {what} catalog",
                        comp.id
                    ));
                }
            }
            let written = std::fs::read_to_string(format!("{out}/{}.meta.json", comp.id))
                .map_err(|e| e.to_string())?;
            if written != bytes {
                return Err(format!("{}: CLI file differs from library export", comp.id));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} components partitioned and byte-stable"))
}
