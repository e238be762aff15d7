//! Random stores, canonical round trips and a nested-loop join.

use std::collections::{BTreeMap, BTreeSet};

use coplan::triple_store::{self, PatternTerm, Store, Term, Triple, TriplePattern};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use super::{rng, Check};

const TRICKY: &[&str] = &[
    "",
    "plain",
    "with space",
    "quote\"inside",
    "back\\slash",
    "line\nbreak",
    "tab\there",
    "cr\rhere",
    "bell\u{7}",
    "nul\u{0}byte",
    "caf\u{e9}",
    "\u{6f22}\u{5b57}",
    "\u{1f50c} plug",
    "^^<x>",
    "a .",
    "#hash",
    "trailing\\",
];

const DATATYPES: &[&str] = &[
    "http://www.w3.org/2001/XMLSchema#double",
    "http://www.w3.org/2001/XMLSchema#integer",
    "http://www.w3.org/2001/XMLSchema#boolean",
    "urn:example:type",
];

pub fn random_iri(r: &mut impl Rng, pool: usize) -> Term {
    let stems = [
        "urn:coplan:component:",
        "http://example.org/x/",
        "urn:a:",
        "urn:\u{e9}t\u{e9}:",
    ];
    Term::iri(format!(
        "{}{}",
        stems.choose(r).unwrap(),
        r.random_range(0..pool)
    ))
    .unwrap()
}

pub fn random_literal(r: &mut impl Rng) -> Term {
    let mut value = TRICKY.choose(r).unwrap().to_string();
    if r.random_bool(0.5) {
        value.push_str(&r.random_range(0..1000).to_string());
    }
    if r.random_bool(0.3) {
        Term::typed(value, *DATATYPES.choose(r).unwrap()).unwrap()
    } else {
        Term::literal(value)
    }
}

pub fn random_triples(r: &mut impl Rng, max: usize, pool: usize) -> Vec<Triple> {
    let n = r.random_range(0..=max);
    (0..n)
        .map(|_| {
            let object = if r.random_bool(0.5) {
                random_iri(r, pool)
            } else {
                random_literal(r)
            };
            Triple::new(random_iri(r, pool), random_iri(r, pool.min(8)), object).unwrap()
        })
        .collect()
}

pub fn store_of(triples: &[Triple]) -> Store {
    let mut s = Store::new();
    for t in triples {
        s.insert(t.clone()).unwrap();
    }
    s
}

/// Parse of the serialization equals the store, and serializing is stable
/// under reparsing and insertion order.
pub fn round_trip(triples: &[Triple], r: &mut impl Rng) -> Result<(), String> {
    let store = store_of(triples);
    let text = triple_store::serialize(&store);
    let back = triple_store::parse(&text).map_err(|e| format!("reparse failed: {e}\n{text}"))?;
    if back != store {
        return Err(format!("parse(serialize(s)) differs from s\n{text}"));
    }
    if triple_store::serialize(&back) != text {
        return Err("reserialization differs".into());
    }
    let mut shuffled = triples.to_vec();
    shuffled.shuffle(r);
    if triple_store::serialize(&store_of(&shuffled)) != text {
        return Err("serialization depends on insertion order".into());
    }
    Ok(())
}

pub fn criterion_3() -> Check {
    let mut total = 0;
    let mut runs: [Vec<String>; 2] = [Vec::new(), Vec::new()];
    for run in &mut runs {
        let mut r = rng(3);
        for _ in 0..100 {
            let triples = random_triples(&mut r, 500, 60);
            round_trip(&triples, &mut r)?;
            run.push(triple_store::serialize(&store_of(&triples)));
        }
    }
    if runs[0] != runs[1] {
        return Err("two runs produced different bytes".into());
    }
    for text in &runs[0] {
        total += text.lines().count();
    }
    Ok(format!(
        "100 stores, {total} triples, identical across two runs"
    ))
}

fn unify(
    pattern: &[PatternTerm; 3],
    triple: &Triple,
    binding: &BTreeMap<String, Term>,
) -> Option<BTreeMap<String, Term>> {
    let mut out = binding.clone();
    for (p, t) in pattern
        .iter()
        .zip([&triple.subject, &triple.predicate, &triple.object])
    {
        match p {
            PatternTerm::Const(c) if c != t => return None,
            PatternTerm::Const(_) => {}
            PatternTerm::Var(v) => {
                if let Some(bound) = out.get(v) {
                    if bound != t {
                        return None;
                    }
                } else {
                    out.insert(v.clone(), t.clone());
                }
            }
        }
    }
    Some(out)
}

/// Every combination of one triple per pattern, kept when all bindings agree.
pub fn brute_force(
    triples: &[Triple],
    patterns: &[[PatternTerm; 3]],
) -> BTreeSet<BTreeMap<String, Term>> {
    let mut out = BTreeSet::new();
    let k = patterns.len();
    let n = triples.len();
    let combos = n.pow(k as u32);
    'combo: for mut idx in 0..combos {
        let mut binding = BTreeMap::new();
        for p in patterns {
            let t = &triples[idx % n];
            idx /= n;
            match unify(p, t, &binding) {
                Some(b) => binding = b,
                None => continue 'combo,
            }
        }
        out.insert(binding);
    }
    if k == 0 {
        out.insert(BTreeMap::new());
    }
    out
}

pub fn random_patterns(r: &mut impl Rng, triples: &[Triple]) -> Vec<[PatternTerm; 3]> {
    let k = r.random_range(1..=3);
    let vars = ["a", "b", "c", "d"];
    (0..k)
        .map(|_| loop {
            let sample = triples.choose(r).cloned();
            let mut slot = |i: usize| -> PatternTerm {
                match &sample {
                    Some(t) if !r.random_bool(0.6) => {
                        PatternTerm::Const([&t.subject, &t.predicate, &t.object][i].clone())
                    }
                    _ => PatternTerm::var(vars.choose(r).unwrap()),
                }
            };
            let p = [slot(0), slot(1), slot(2)];
            if TriplePattern::new(p[0].clone(), p[1].clone(), p[2].clone()).is_ok() {
                break p;
            }
        })
        .collect()
}

pub fn join_matches(r: &mut impl Rng) -> Result<usize, String> {
    let triples: Vec<Triple> = store_of(&random_triples(r, 100, 6))
        .iter()
        .cloned()
        .collect();
    let patterns = random_patterns(r, &triples);
    let store = store_of(&triples);
    let compiled: Vec<TriplePattern> = patterns
        .iter()
        .map(|p| TriplePattern::new(p[0].clone(), p[1].clone(), p[2].clone()).unwrap())
        .collect();
    let got = store.query(&compiled);
    let set: BTreeSet<_> = got.bindings.iter().cloned().collect();
    if set.len() != got.bindings.len() {
        return Err(format!("duplicate solutions for {patterns:?}"));
    }
    let expected = if triples.is_empty() {
        BTreeSet::new()
    } else {
        brute_force(&triples, &patterns)
    };
    if set != expected {
        return Err(format!(
            "query {patterns:?} on {} triples: {} solutions, oracle {}",
            triples.len(),
            set.len(),
            expected.len()
        ));
    }
    Ok(set.len())
}

pub fn criterion_4() -> Check {
    let mut r = rng(4);
    let mut solutions = 0;
    let mut non_empty = 0;
    for _ in 0..50 {
        let n = join_matches(&mut r)?;
        solutions += n;
        non_empty += usize::from(n > 0);
    }
    Ok(format!(
        "50 stores, {non_empty} queries with solutions, {solutions} solutions in total"
    ))
}
