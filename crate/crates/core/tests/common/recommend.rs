//! Recommender fixture checks.

use coplan::info_model::{AttributeRef, InfoModel};
use coplan::recommender::{recommend, recommend_from_store, MatchRequest, Recommendation, Weights};
use coplan::taxonomy::Taxonomy;
use coplan::triple_store::Store;
use coplan::units::UnitTable;
use rand::seq::SliceRandom;
use rand::Rng;

use super::{catalog, cli, fixture, model, rng, taxonomy, Check};

/// Component blocks in random order, variable lines shuffled inside each block.
pub fn permute_catalog(text: &str, r: &mut impl Rng) -> String {
    let mut blocks: Vec<Vec<&str>> = text
        .split("\n\n")
        .map(|b| b.lines().filter(|l| !l.trim().is_empty()).collect())
        .filter(|b: &Vec<&str>| !b.is_empty())
        .collect();
    blocks.shuffle(r);
    let mut out = String::new();
    for block in &mut blocks {
        let (vars, rest): (Vec<&str>, Vec<&str>) = block
            .iter()
            .partition(|l| l.trim_start().starts_with("variable "));
        let mut vars = vars;
        vars.shuffle(r);
        for l in rest.iter().chain(&vars) {
            out.push_str(l);
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

pub fn report(recs: &[Recommendation]) -> String {
    recs.iter().map(|r| r.report_line() + "\n").collect()
}

pub fn in_memory(
    model: &InfoModel,
    catalog_text: &str,
    tax: &Taxonomy,
    attribute: &AttributeRef,
) -> Vec<Recommendation> {
    let request = MatchRequest::for_attribute(model, attribute, Weights::default()).unwrap();
    recommend(&request, model, &catalog(catalog_text), tax).unwrap()
}

pub fn through_store(
    model: &InfoModel,
    catalog_text: &str,
    tax: &Taxonomy,
    attribute: &AttributeRef,
) -> Vec<Recommendation> {
    let mut store = Store::new();
    store.extend(catalog(catalog_text).to_triples()).unwrap();
    store.extend(model.to_triples()).unwrap();
    let request = MatchRequest::for_attribute(model, attribute, Weights::default()).unwrap();
    recommend_from_store(&request, model, &store, UnitTable::builtin(), tax).unwrap()
}

pub fn criterion_7() -> Check {
    let cat_text = fixture("cpes-3.catalog");
    let m = model(&fixture("neds-mini.model"));
    let tax = taxonomy();
    let target = AttributeRef::new("generation", "p");

    let recs = in_memory(&m, &cat_text, &tax, &target);
    let top = recs.first().ok_or("no candidates for generation.p")?;
    if (top.component.as_str(), top.variable.as_str()) != ("PVSim", "p_gen") || top.score != 1.0 {
        return Err(format!(
            "top candidate is {}.{} with score {}",
            top.component, top.variable, top.score
        ));
    }
    if recs.iter().skip(1).any(|r| r.score >= 1.0) {
        return Err(format!(
            "PVSim.p_gen is not uniquely first:\n{}",
            report(&recs)
        ));
    }

    let mut r = rng(7);
    let refs: Vec<AttributeRef> = m.attributes().map(|(a, _)| a).collect();
    for attr in &refs {
        let baseline = report(&in_memory(&m, &cat_text, &tax, attr));
        for _ in 0..10 {
            let permuted = permute_catalog(&cat_text, &mut r);
            let again = report(&in_memory(&m, &permuted, &tax, attr));
            if again != baseline {
                return Err(format!(
                    "{attr}: permuted catalog changed output\n{baseline}---\n{again}"
                ));
            }
        }
        let memory = in_memory(&m, &cat_text, &tax, attr);
        let store = through_store(&m, &cat_text, &tax, attr);
        if memory != store {
            return Err(format!(
                "{attr}: store path differs\n{}---\n{}",
                report(&memory),
                report(&store)
            ));
        }
    }

    // Command line, file path and store path, original and permuted catalog.
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = tmp.path();
    std::fs::write(d.join("a.catalog"), &cat_text).unwrap();
    std::fs::write(d.join("b.catalog"), permute_catalog(&cat_text, &mut r)).unwrap();
    let p = |n: &str| d.join(n).to_string_lossy().into_owned();
    let (model_path, tax_path) = (
        super::fixtures()
            .join("neds-mini.model")
            .to_string_lossy()
            .into_owned(),
        super::fixtures()
            .join("taxonomy.txt")
            .to_string_lossy()
            .into_owned(),
    );
    let mut outputs = Vec::new();
    for cat in ["a.catalog", "b.catalog"] {
        let out = p(&format!("out-{cat}"));
        let (status, _, err) = cli(&[
            "--catalog",
            &p(cat),
            "--info-model",
            &model_path,
            "--taxonomy",
            &tax_path,
            "--out-dir",
            &out,
            "recommend",
            "generation.p",
        ]);
        if status != 0 {
            return Err(format!("recommend exited {status}: {err}"));
        }
        outputs.push(std::fs::read(d.join(format!("out-{cat}/recommendations.csv"))).unwrap());
    }
    let (status, _, err) = cli(&[
        "--out-dir",
        &p("ingest"),
        "ingest",
        &p("a.catalog"),
        &model_path,
        &tax_path,
    ]);
    if status != 0 {
        return Err(format!("ingest exited {status}: {err}"));
    }
    let (status, _, err) = cli(&[
        "--store",
        &p("ingest/store.nt"),
        "--out-dir",
        &p("out-store"),
        "recommend",
        "generation.p",
    ]);
    if status != 0 {
        return Err(format!("recommend from store exited {status}: {err}"));
    }
    outputs.push(std::fs::read(d.join("out-store/recommendations.csv")).unwrap());
    if outputs.iter().any(|o| o != &outputs[0]) {
        return Err("recommendations.csv differs between catalog order or query path".into());
    }
    Ok(format!(
        "PVSim.p_gen first with 1.0; {} attributes stable under 10 permutations; store path identical",
        refs.len()
    ))
}
